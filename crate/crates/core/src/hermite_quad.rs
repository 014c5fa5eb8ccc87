//! Hermite functions, Gauss–Hermite rules and a unitary discrete Fourier
//! transform on uniform grids.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `pi^(-1/4)`, the value of `h_0(0)`.
pub const PI_POW_NEG_QUARTER: f64 = 0.751_125_544_464_942_5;

const RESCALE_ABOVE: f64 = 1e200;

/// Uniform grid `start + j * step`, `j = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    start: f64,
    step: f64,
    count: usize,
}

impl Grid1D {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        if !start.is_finite() || !step.is_finite() || step <= 0.0 {
            return Err(Error::InvalidArgument(format!("grid needs finite start and positive step, got {start}, {step}")));
        }
        if count == 0 {
            return Err(Error::InvalidArgument("grid must contain at least one point".into()));
        }
        Ok(Self { start, step, count })
    }

    /// `count` points on `[-halfwidth, halfwidth)`, with `0` at index `count / 2`
    /// for even counts.
    pub fn symmetric(halfwidth: f64, count: usize) -> Result<Self> {
        if halfwidth.is_nan() || halfwidth <= 0.0 || count == 0 {
            return Err(Error::InvalidArgument(format!("symmetric grid needs halfwidth > 0 and count > 0, got {halfwidth}, {count}")));
        }
        let step = 2.0 * halfwidth / count as f64;
        Self::new(-halfwidth, step, count)
    }

    /// Default oracle grid: `[-16, 16)` with 1024 points.
    pub fn default_oracle() -> Self {
        Self { start: -16.0, step: 1.0 / 32.0, count: 1024 }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn point(&self, j: usize) -> f64 {
        self.start + j as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |j| self.point(j))
    }

    pub fn end(&self) -> f64 {
        self.point(self.count - 1)
    }

    /// True when the grid is the FFT-centred layout `start = -count/2 * step`.
    pub fn is_fft_symmetric(&self) -> bool {
        self.count.is_multiple_of(2) && (self.start + (self.count / 2) as f64 * self.step).abs() <= 1e-12 * self.step.max(1.0)
    }

    /// Grid reciprocal to this one under the discrete Fourier transform.
    pub fn dual(&self) -> Self {
        let step = 2.0 * PI / (self.count as f64 * self.step);
        Self { start: -((self.count / 2) as f64) * step, step, count: self.count }
    }

    /// Trapezoid rule for samples taken on this grid.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.count);
        match values {
            [] => 0.0,
            [_] => 0.0,
            [first, .., last] => self.step * (values.iter().sum::<f64>() - 0.5 * (first + last)),
        }
    }
}

/// Gauss–Hermite rule for integrals `∫ f(t) exp(-t^2) dt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_i w_i f(x_i)`, approximating `∫ f(t) exp(-t^2) dt`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Orthonormal Hermite function `h_n(t)`.
pub fn hermite_fn(n: usize, t: f64) -> f64 {
    let gauss = -0.5 * t * t;
    let mut prev = 0.0;
    let mut cur = PI_POW_NEG_QUARTER;
    let mut log_scale = 0.0;
    for m in 0..n {
        let mf = m as f64;
        let next = (2.0 / (mf + 1.0)).sqrt() * t * cur - (mf / (mf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_ABOVE {
            cur /= RESCALE_ABOVE;
            prev /= RESCALE_ABOVE;
            log_scale += RESCALE_ABOVE.ln();
        }
    }
    cur * (log_scale + gauss).exp()
}

/// `[h_0(t), ..., h_nmax(t)]`.
pub fn hermite_fns(nmax: usize, t: f64) -> Vec<f64> {
    let gauss = -0.5 * t * t;
    let mut out = Vec::with_capacity(nmax + 1);
    let mut prev = 0.0;
    let mut cur = PI_POW_NEG_QUARTER;
    let mut log_scale = 0.0;
    out.push(cur * gauss.exp());
    for m in 0..nmax {
        let mf = m as f64;
        let next = (2.0 / (mf + 1.0)).sqrt() * t * cur - (mf / (mf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_ABOVE {
            cur /= RESCALE_ABOVE;
            prev /= RESCALE_ABOVE;
            log_scale += RESCALE_ABOVE.ln();
        }
        out.push(cur * (log_scale + gauss).exp());
    }
    out
}

/// Gauss–Hermite nodes and weights for `1 <= count <= 200`, nodes ascending.
///
/// Starting guesses are the eigenvalues of the symmetric Jacobi matrix of the
/// Hermite recurrence; each is then polished by Newton iteration on the
/// orthonormal recurrence, which also supplies the weight `2 / p'(x)^2`.
pub fn gauss_hermite(count: usize) -> Result<QuadratureRule> {
    if !(1..=200).contains(&count) {
        return Err(Error::InvalidArgument(format!("Gauss-Hermite count must lie in 1..=200, got {count}")));
    }
    let jacobi = DMatrix::from_fn(count, count, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    guesses.sort_by(f64::total_cmp);

    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    // positive half, largest first; the rule is symmetric
    for i in 0..count.div_ceil(2) {
        let mut z = guesses[count - 1 - i].abs();
        let mut derivative = 0.0;
        for _ in 0..100 {
            let (value, deriv) = orthonormal_hermite_poly(count, z);
            derivative = deriv;
            let step = value / derivative;
            z -= step;
            if step.abs() <= 1e-14 * z.abs().max(1.0) {
                break;
            }
        }
        if count % 2 == 1 && i == count / 2 {
            z = 0.0;
            derivative = orthonormal_hermite_poly(count, 0.0).1;
        }
        let w = 2.0 / (derivative * derivative);
        nodes[count - 1 - i] = z;
        nodes[i] = -z;
        weights[count - 1 - i] = w;
        weights[i] = w;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// `(p_n(z), p_n'(z))` for the orthonormal Hermite polynomial without the
/// Gaussian factor, `p_n' = sqrt(2n) p_{n-1}`.
fn orthonormal_hermite_poly(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = PI_POW_NEG_QUARTER;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Reusable unitary Fourier transform from a uniform `t` grid onto the grid
/// `p_k = p_start + k * 2 pi / (count * step_t)`:
///
/// `(Ff)(p) = (2 pi)^(-1/2) ∫ exp(-i p t) f(t) dt`,
///
/// under which `F h_n = (-i)^n h_n`.
#[derive(Clone)]
pub struct FourierPlan {
    input: Grid1D,
    output: Grid1D,
    fft: Arc<dyn Fft<f64>>,
    pre_phase: Vec<Complex64>,
    post_phase: Vec<Complex64>,
}

impl std::fmt::Debug for FourierPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierPlan").field("input", &self.input).field("output", &self.output).finish()
    }
}

impl FourierPlan {
    pub fn new(input: Grid1D, p_start: f64) -> Result<Self> {
        let n = input.count();
        if !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("Fourier transform needs a power-of-two count, got {n}")));
        }
        let dp = 2.0 * PI / (n as f64 * input.step());
        let output = Grid1D::new(p_start, dp, n)?;
        let (t0, dt) = (input.start(), input.step());
        // exp(-i p_k t_j) = exp(-i p0 t0) exp(-i p0 j dt) exp(-i k dp t0) exp(-2 pi i jk/n)
        let norm = dt / (2.0 * PI).sqrt();
        let pre_phase = (0..n).map(|j| Complex64::from_polar(1.0, -p_start * j as f64 * dt)).collect();
        let post_phase = (0..n)
            .map(|k| Complex64::from_polar(norm, -p_start * t0 - k as f64 * dp * t0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(n);
        Ok(Self { input, output, fft, pre_phase, post_phase })
    }

    pub fn input_grid(&self) -> &Grid1D {
        &self.input
    }

    pub fn output_grid(&self) -> &Grid1D {
        &self.output
    }

    /// Transforms `buffer` (samples on the input grid) in place.
    pub fn transform(&self, buffer: &mut [Complex64]) {
        assert_eq!(buffer.len(), self.input.count(), "sample count does not match the plan");
        for (v, ph) in buffer.iter_mut().zip(&self.pre_phase) {
            *v *= ph;
        }
        self.fft.process(buffer);
        for (v, ph) in buffer.iter_mut().zip(&self.post_phase) {
            *v *= ph;
        }
    }
}

/// Unitary Fourier transform of samples on an FFT-centred grid; returns the
/// transformed samples and the dual grid.
pub fn fourier_unitary(values: &[Complex64], grid: &Grid1D) -> Result<(Vec<Complex64>, Grid1D)> {
    if values.len() != grid.count() {
        return Err(Error::InvalidArgument(format!(
            "{} samples supplied for a grid of {} points",
            values.len(),
            grid.count()
        )));
    }
    if !grid.count().is_power_of_two() {
        return Err(Error::InvalidArgument(format!("Fourier transform needs a power-of-two count, got {}", grid.count())));
    }
    if !grid.is_fft_symmetric() {
        return Err(Error::InvalidArgument("Fourier transform needs a grid centred on 0 (start = -count/2 * step)".into()));
    }
    let plan = FourierPlan::new(*grid, grid.dual().start())?;
    let mut out = values.to_vec();
    plan.transform(&mut out);
    Ok((out, *plan.output_grid()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sup_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn hermite_values_at_origin() {
        assert!((hermite_fn(0, 0.0) - 0.751_125_544_464_942_5).abs() < 1e-16);
        assert_eq!(hermite_fn(1, 0.0), 0.0);
        assert!((PI_POW_NEG_QUARTER - PI.powf(-0.25)).abs() < 1e-16);
    }

    #[test]
    fn hermite_matches_closed_forms() {
        // h_2(t) = pi^(-1/4) (2t^2 - 1) / sqrt 2 exp(-t^2/2)
        for &t in &[-2.5, -0.3, 0.0, 0.7, 3.1] {
            let h2 = PI_POW_NEG_QUARTER * (2.0 * t * t - 1.0) / 2f64.sqrt() * (-0.5 * t * t).exp();
            assert!((hermite_fn(2, t) - h2).abs() < 1e-15);
            let h3 = PI_POW_NEG_QUARTER * (2.0 * t * t * t - 3.0 * t) / 3f64.sqrt() * (-0.5 * t * t).exp();
            assert!((hermite_fn(3, t) - h3).abs() < 1e-15);
        }
    }

    #[test]
    fn hermite_normalization_trapezoid() {
        let grid = Grid1D::new(-20.0, 0.01, 4001).unwrap();
        let sq: Vec<f64> = grid.points().map(|t| hermite_fn(7, t).powi(2)).collect();
        assert!((grid.trapezoid(&sq) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hermite_orthonormality() {
        let grid = Grid1D::new(-25.0, 0.01, 5001).unwrap();
        let table: Vec<Vec<f64>> = grid.points().map(|t| hermite_fns(32, t)).collect();
        for m in 0..=32 {
            for n in m..=32 {
                let vals: Vec<f64> = table.iter().map(|h| h[m] * h[n]).collect();
                let expected = if m == n { 1.0 } else { 0.0 };
                assert!((grid.trapezoid(&vals) - expected).abs() < 1e-9, "m={m} n={n}");
            }
        }
    }

    #[test]
    fn hermite_table_agrees_with_single_evaluation() {
        for &t in &[-39.0, -7.5, 0.2, 12.0, 40.0] {
            let table = hermite_fns(512, t);
            for n in [0usize, 1, 100, 511, 512] {
                let single = hermite_fn(n, t);
                assert!(single.is_finite());
                assert!((table[n] - single).abs() <= 1e-14 * single.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn hermite_stays_finite_for_large_orders() {
        for n in [200usize, 400, 512] {
            for &t in &[-40.0, -31.0, -5.0, 0.0, 17.3, 32.0, 40.0] {
                let v = hermite_fn(n, t);
                assert!(v.is_finite() && v.abs() < 1.0, "n={n} t={t} v={v}");
            }
        }
        // near the turning point the functions are far from underflow
        assert!(hermite_fn(512, 31.0).abs() > 1e-6);
    }

    #[test]
    fn gauss_hermite_small_rules() {
        let one = gauss_hermite(1).unwrap();
        assert_eq!(one.nodes(), &[0.0]);
        assert!((one.weights()[0] - PI.sqrt()).abs() < 1e-14);

        let two = gauss_hermite(2).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((two.nodes()[0] + r).abs() < 1e-14 && (two.nodes()[1] - r).abs() < 1e-14);
        for w in two.weights() {
            assert!((w - PI.sqrt() / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gauss_hermite_range_checked() {
        assert!(gauss_hermite(0).is_err());
        assert!(gauss_hermite(201).is_err());
    }

    #[test]
    fn gauss_hermite_weights_sum_to_sqrt_pi() {
        for count in [1usize, 3, 10, 47, 100, 150, 200] {
            let rule = gauss_hermite(count).unwrap();
            assert_eq!(rule.len(), count);
            assert!(rule.weights().iter().all(|&w| w > 0.0));
            assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
            let total: f64 = rule.weights().iter().sum();
            assert!((total - PI.sqrt()).abs() < 1e-12, "count={count} total={total}");
        }
    }

    fn double_factorial_odd(k: usize) -> f64 {
        (1..=k).step_by(2).map(|v| v as f64).product()
    }

    #[test]
    fn gauss_hermite_even_moment_exactness() {
        for m in [1usize, 2, 5, 8, 11] {
            let rule = gauss_hermite(m).unwrap();
            for j in 0..m {
                if 2 * j > 2 * m - 1 {
                    break;
                }
                let exact = double_factorial_odd(2 * j) * PI.sqrt() / 2f64.powi(j as i32);
                let got = rule.integrate(|t| t.powi(2 * j as i32));
                assert!(((got - exact) / exact).abs() < 1e-10, "m={m} j={j}");
            }
        }
    }

    #[test]
    fn gauss_hermite_against_trapezoid_oracle() {
        let rule = gauss_hermite(20).unwrap();
        let got = rule.integrate(|t| t.powi(10));
        let grid = Grid1D::new(-15.0, 0.001, 30001).unwrap();
        let vals: Vec<f64> = grid.points().map(|t| t.powi(10) * (-t * t).exp()).collect();
        let oracle = grid.trapezoid(&vals);
        assert!((got - oracle).abs() < 1e-9);
        assert!((got - 945.0 * PI.sqrt() / 32.0).abs() < 1e-9);
    }

    #[test]
    fn fourier_fixes_the_gaussian() {
        let grid = Grid1D::default_oracle();
        let h0: Vec<Complex64> = grid.points().map(|t| Complex64::new(hermite_fn(0, t), 0.0)).collect();
        let (out, dual) = fourier_unitary(&h0, &grid).unwrap();
        let window: Vec<usize> = (0..dual.count()).filter(|&k| dual.point(k).abs() <= 8.0).collect();
        let got: Vec<Complex64> = window.iter().map(|&k| out[k]).collect();
        let want: Vec<Complex64> = window.iter().map(|&k| Complex64::new(hermite_fn(0, dual.point(k)), 0.0)).collect();
        assert!(sup_err(&got, &want) <= 1e-8);
    }

    #[test]
    fn fourier_eigenrelation() {
        let grid = Grid1D::default_oracle();
        for n in 0..=16usize {
            let hn: Vec<Complex64> = grid.points().map(|t| Complex64::new(hermite_fn(n, t), 0.0)).collect();
            let (out, dual) = fourier_unitary(&hn, &grid).unwrap();
            let phase = Complex64::new(0.0, -1.0).powu(n as u32);
            let err = (0..dual.count())
                .map(|k| (out[k] - phase * hermite_fn(n, dual.point(k))).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-7, "n={n} err={err}");
        }
    }

    #[test]
    fn fourier_of_zero_is_zero() {
        let grid = Grid1D::symmetric(4.0, 64).unwrap();
        let (out, _) = fourier_unitary(&vec![Complex64::new(0.0, 0.0); 64], &grid).unwrap();
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn fourier_rejects_bad_grids() {
        let grid = Grid1D::new(-5.0, 0.1, 100).unwrap();
        assert!(fourier_unitary(&vec![Complex64::default(); 100], &grid).is_err());
        let shifted = Grid1D::new(-3.0, 0.1, 64).unwrap();
        assert!(fourier_unitary(&vec![Complex64::default(); 64], &shifted).is_err());
    }

    #[test]
    fn offset_plan_hits_requested_points() {
        // evaluating on a grid that starts at an arbitrary p must agree with
        // the Gaussian closed form at those points
        let grid = Grid1D::default_oracle();
        let plan = FourierPlan::new(grid, 0.377).unwrap();
        let mut buf: Vec<Complex64> = grid.points().map(|t| Complex64::new(hermite_fn(1, t), 0.0)).collect();
        plan.transform(&mut buf);
        let out = plan.output_grid();
        for k in [0usize, 3, 17] {
            let want = Complex64::new(0.0, -hermite_fn(1, out.point(k)));
            assert!((buf[k] - want).norm() < 1e-9);
        }
    }
}
