//! Phase-space densities of `E^T` in a state and their Cartesian margins.
//!
//! A state `phi = sum_k c_k |k>` is handled through its Hermite expansion
//! `f = sum_k c_k h_k`. The density of `E^{|n>}` at `(q, p)` is
//! `|(2 pi)^(-1/2) <W0(-q,p) h_n | f>|^2`, obtained row by row with one FFT per
//! `q`. The margins come from the one-dimensional convolution
//! `∫ |h_n(t - q)|^2 |f(t)|^2 dt` (and its Fourier-side analogue), which is
//! what the `p` integral of the density collapses to.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_space::FockVector;
use crate::hermite_quad::{hermite_fn, hermite_fns, FourierPlan, Grid1D};
use crate::weights::{TruncatedWeights, WeightSequence, DEFAULT_TAIL_MASS};

/// States must live in the span of `h_0 .. h_63`.
pub const MAX_STATE_LEVELS: usize = 64;
/// Largest kernel level a density evaluation will expand.
pub const MAX_KERNEL_LEVELS: usize = 256;
/// Margins losing more than this mass off-grid carry a warning.
pub const LEAKAGE_WARNING: f64 = 1e-4;

const NORMALIZED_TOL: f64 = 1e-10;
// Longest t step used by the density FFT.
const MAX_T_STEP: f64 = 1.0 / 16.0;
// The FFT t-window must reach at least this far from the origin.
const MIN_T_HALFWIDTH: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" | "q" => Ok(Self::X),
            "y" | "p" => Ok(Self::Y),
            other => Err(Error::InvalidArgument(format!("axis must be x or y, got '{other}'"))),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::X => "x",
            Self::Y => "y",
        })
    }
}

/// `(2 pi)^(-1/2) <W0(-q,p) h_n | f>` together with a flag recording whether
/// the input state was normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylCoefficient {
    pub value: Complex64,
    pub state_normalized: bool,
}

/// Sampled density on a `q x p` grid, row-major in `q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GriddedDensity {
    pub q_grid: Grid1D,
    pub p_grid: Grid1D,
    pub values: Vec<f64>,
    /// `||phi||^2`.
    pub norm_sqr: f64,
    /// Weight dropped when the kernel family was truncated.
    pub tail_mass: f64,
    /// `norm_sqr * (1 - tail_mass) - total_mass`.
    pub leakage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalDensity {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub axis: Axis,
    pub norm_sqr: f64,
    pub leakage: f64,
    pub leakage_warning: bool,
}

impl MarginalDensity {
    pub fn total_mass(&self) -> f64 {
        self.grid.trapezoid(&self.values)
    }

    /// `∫ x^k margin(x) dx` by the trapezoid rule.
    pub fn moment(&self, k: usize) -> f64 {
        let weighted: Vec<f64> = self
            .grid
            .points()
            .zip(&self.values)
            .map(|(x, v)| x.powi(k as i32) * v)
            .collect();
        self.grid.trapezoid(&weighted)
    }
}

impl GriddedDensity {
    pub fn value(&self, qi: usize, pj: usize) -> f64 {
        self.values[qi * self.p_grid.count() + pj]
    }

    pub fn row(&self, qi: usize) -> &[f64] {
        let np = self.p_grid.count();
        &self.values[qi * np..(qi + 1) * np]
    }

    pub fn total_mass(&self) -> f64 {
        let rows: Vec<f64> = (0..self.q_grid.count()).map(|i| self.p_grid.trapezoid(self.row(i))).collect();
        self.q_grid.trapezoid(&rows)
    }

    /// Integrates out `p` (axis X) or `q` (axis Y).
    pub fn marginal(&self, axis: Axis) -> MarginalDensity {
        let (grid, values): (Grid1D, Vec<f64>) = match axis {
            Axis::X => (
                self.q_grid,
                (0..self.q_grid.count()).map(|i| self.p_grid.trapezoid(self.row(i))).collect(),
            ),
            Axis::Y => {
                let column = |j: usize| -> Vec<f64> { (0..self.q_grid.count()).map(|i| self.value(i, j)).collect() };
                (self.p_grid, (0..self.p_grid.count()).map(|j| self.q_grid.trapezoid(&column(j))).collect())
            }
        };
        let mass = grid.trapezoid(&values);
        let leakage = self.norm_sqr * (1.0 - self.tail_mass) - mass;
        MarginalDensity { grid, values, axis, norm_sqr: self.norm_sqr, leakage, leakage_warning: leakage > LEAKAGE_WARNING }
    }

    /// `∫∫ x^k density` with `x = q` (axis X) or `x = p` (axis Y).
    pub fn moment(&self, k: usize, axis: Axis) -> f64 {
        self.marginal(axis).moment(k)
    }
}

fn check_state(state: &FockVector) -> Result<()> {
    if state.support() > MAX_STATE_LEVELS {
        return Err(Error::InvalidArgument(format!(
            "state occupies {} levels; at most {MAX_STATE_LEVELS} are supported",
            state.support()
        )));
    }
    Ok(())
}

/// `f(t) = sum_k c_k h_k(t)` at every grid point.
pub fn sample_state(coeffs: &[Complex64], grid: &Grid1D) -> Vec<Complex64> {
    let top = coeffs.iter().rposition(|c| c.norm_sqr() > 0.0).unwrap_or(0);
    grid.points()
        .map(|t| {
            let h = hermite_fns(top, t);
            coeffs.iter().zip(&h).map(|(c, hk)| c * hk).sum()
        })
        .collect()
}

/// Weyl coefficient by the Fourier route: `exp(i q p / 2) F(h_n(. - q) f)(p)`
/// on the default oracle grid.
pub fn weyl_coefficient(state: &FockVector, n: usize, q: f64, p: f64) -> Result<WeylCoefficient> {
    weyl_coefficient_on(state, n, q, p, &Grid1D::default_oracle())
}

pub fn weyl_coefficient_on(state: &FockVector, n: usize, q: f64, p: f64, t_grid: &Grid1D) -> Result<WeylCoefficient> {
    check_state(state)?;
    let f = sample_state(state.coeffs(), t_grid);
    let plan = FourierPlan::new(*t_grid, p)?;
    let mut buffer: Vec<Complex64> = t_grid.points().zip(&f).map(|(t, fv)| fv * hermite_fn(n, t - q)).collect();
    plan.transform(&mut buffer);
    Ok(WeylCoefficient {
        value: Complex64::from_polar(1.0, 0.5 * q * p) * buffer[0],
        state_normalized: state.is_normalized(NORMALIZED_TOL),
    })
}

/// Density of the phase-space observable generated by the (truncated) kernel
/// `weights`, in `state`, sampled on `q_grid x p_grid`.
pub fn density(state: &FockVector, weights: &WeightSequence, q_grid: &Grid1D, p_grid: &Grid1D) -> Result<GriddedDensity> {
    let truncated = weights.truncate(DEFAULT_TAIL_MASS, MAX_KERNEL_LEVELS)?;
    density_truncated(state, &truncated, q_grid, p_grid)
}

/// As [`density`] for an already truncated kernel.
pub fn density_truncated(
    state: &FockVector,
    kernel: &TruncatedWeights,
    q_grid: &Grid1D,
    p_grid: &Grid1D,
) -> Result<GriddedDensity> {
    check_state(state)?;
    let total: f64 = kernel.terms.iter().map(|t| t.1).sum();
    if kernel.terms.iter().any(|&(_, w)| w.is_nan() || w < 0.0) || total > 1.0 + 1e-12 {
        return Err(Error::InvalidWeights(format!("kernel weights must be nonnegative with sum <= 1, got sum {total}")));
    }

    // FFT layout: output step dp / refine lands every `refine`-th bin on p_grid.
    let dp = p_grid.step();
    let refine = (dp * MIN_T_HALFWIDTH / std::f64::consts::PI).ceil().max(1.0) as usize;
    let dp_fft = dp / refine as f64;
    let min_count = (2.0 * std::f64::consts::PI / (dp_fft * MAX_T_STEP)).ceil() as usize;
    let n_fft = min_count.max(p_grid.count() * refine).next_power_of_two();
    let dt = 2.0 * std::f64::consts::PI / (n_fft as f64 * dp_fft);
    let t_grid = Grid1D::new(-((n_fft / 2) as f64) * dt, dt, n_fft)?;
    let plan = FourierPlan::new(t_grid, p_grid.start())?;

    let f = sample_state(state.coeffs(), &t_grid);
    let top = kernel.max_level();
    let np = p_grid.count();

    let rows: Vec<Vec<f64>> = (0..q_grid.count())
        .into_par_iter()
        .map(|qi| {
            let q = q_grid.point(qi);
            let table: Vec<Vec<f64>> = t_grid.points().map(|t| hermite_fns(top, t - q)).collect();
            let mut row = vec![0.0; np];
            let mut buffer = vec![Complex64::default(); n_fft];
            for &(level, w) in &kernel.terms {
                if w == 0.0 {
                    continue;
                }
                for ((b, fv), h) in buffer.iter_mut().zip(&f).zip(&table) {
                    *b = fv * h[level];
                }
                plan.transform(&mut buffer);
                for (j, r) in row.iter_mut().enumerate() {
                    *r += w * buffer[j * refine].norm_sqr();
                }
            }
            row
        })
        .collect();

    let mut out = GriddedDensity {
        q_grid: *q_grid,
        p_grid: *p_grid,
        values: rows.concat(),
        norm_sqr: state.norm_sqr(),
        tail_mass: kernel.tail_mass,
        leakage: 0.0,
    };
    out.leakage = out.norm_sqr * (1.0 - kernel.tail_mass) - out.total_mass();
    Ok(out)
}

/// `q -> ∫ |h_n(t - q)|^2 |f(t)|^2 dt` on `grid`, integrating over the default
/// oracle `t` grid.
pub fn x_margin(state: &FockVector, n: usize, grid: &Grid1D) -> Result<MarginalDensity> {
    x_margin_with(state, n, grid, &Grid1D::default_oracle())
}

pub fn x_margin_with(state: &FockVector, n: usize, grid: &Grid1D, t_grid: &Grid1D) -> Result<MarginalDensity> {
    check_state(state)?;
    let rho: Vec<f64> = sample_state(state.coeffs(), t_grid).iter().map(|z| z.norm_sqr()).collect();
    Ok(convolve_margin(&rho, n, grid, t_grid, Axis::X, state.norm_sqr()))
}

/// `p -> ∫ |(F h_n)(s - p)|^2 |(F f)(s)|^2 ds`. `|F h_n| = |h_n|` and
/// `F f = sum_k (-i)^k c_k h_k`, so this is the x-margin of the rotated state.
pub fn y_margin(state: &FockVector, n: usize, grid: &Grid1D) -> Result<MarginalDensity> {
    y_margin_with(state, n, grid, &Grid1D::default_oracle())
}

pub fn y_margin_with(state: &FockVector, n: usize, grid: &Grid1D, t_grid: &Grid1D) -> Result<MarginalDensity> {
    check_state(state)?;
    let rho: Vec<f64> = sample_state(&state.fourier_coeffs(), t_grid).iter().map(|z| z.norm_sqr()).collect();
    Ok(convolve_margin(&rho, n, grid, t_grid, Axis::Y, state.norm_sqr()))
}

fn convolve_margin(rho: &[f64], n: usize, grid: &Grid1D, t_grid: &Grid1D, axis: Axis, norm_sqr: f64) -> MarginalDensity {
    let nt = t_grid.count();
    let dt = t_grid.step();
    // trapezoid weights over t
    let mut weighted: Vec<f64> = rho.iter().map(|r| r * dt).collect();
    if nt > 1 {
        weighted[0] *= 0.5;
        weighted[nt - 1] *= 0.5;
    }

    let aligned = ((grid.step() - dt) / dt).abs() <= 1e-12;
    let values: Vec<f64> = if aligned {
        // t_j - q_i = offset + (j - i) dt: one kernel table serves every row
        let nq = grid.count();
        let offset = t_grid.start() - grid.start();
        let kernel: Vec<f64> = (0..nq + nt - 1)
            .map(|d| hermite_fn(n, offset + (d as f64 - (nq - 1) as f64) * dt).powi(2))
            .collect();
        (0..nq)
            .into_par_iter()
            .map(|i| {
                let base = nq - 1 - i;
                kernel[base..base + nt].iter().zip(&weighted).map(|(k, w)| k * w).sum()
            })
            .collect()
    } else {
        (0..grid.count())
            .into_par_iter()
            .map(|i| {
                let q = grid.point(i);
                t_grid.points().zip(&weighted).map(|(t, w)| hermite_fn(n, t - q).powi(2) * w).sum()
            })
            .collect()
    };

    let mass = grid.trapezoid(&values);
    let leakage = norm_sqr - mass;
    MarginalDensity { grid: *grid, values, axis, norm_sqr, leakage, leakage_warning: leakage > LEAKAGE_WARNING }
}

/// Coefficients of `W(-q0, p0)|0>`: the coherent state with
/// `alpha = (q0 + i p0) / sqrt 2`, cut at `dim` levels.
pub fn displaced_vacuum(q0: f64, p0: f64, dim: usize) -> Result<FockVector> {
    let alpha = Complex64::new(q0, p0) / 2f64.sqrt();
    let mut coeffs = Vec::with_capacity(dim);
    let mut term = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for k in 0..dim {
        coeffs.push(term);
        term = term * alpha / ((k + 1) as f64).sqrt();
    }
    FockVector::new(coeffs)
}
