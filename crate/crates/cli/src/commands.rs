use phq_core::export::{fmt_f64, to_json_string, write_density_binary, write_density_csv, write_marginal_csv};
use phq_core::fock_space::{FockOperator, FockVector};
use phq_core::hermite_quad::Grid1D;
use phq_core::moment_engine::{
    formal_mixture_moment_operator, mixture_moment_operator, mixture_polynomial, moment_operator, moment_polynomial,
    MomentPolynomial,
};
use phq_core::phase_density::{
    density as sample_density, x_margin_with, y_margin_with, Axis, MarginalDensity, LEAKAGE_WARNING, MAX_KERNEL_LEVELS,
};
use phq_core::quantizer::{quantize_complex, quantize_sum, quantize_x};
use phq_core::weights::DEFAULT_TAIL_MASS;
use serde::Serialize;

use crate::inputs::{emit, parse_kernel, parse_polynomial, parse_state, resolve_grid};
use crate::{CliResult, DensityArgs, DensityFormat, Failure, MarginArgs, MomentsArgs, QuantizeArgs, QuantizeMode};

const MARGIN_POINTS: usize = 1024;
const DENSITY_POINTS: usize = 256;
const DEFAULT_HALFWIDTH: f64 = 16.0;
/// Integration step for the convolution variable of the margins.
const T_STEP: f64 = 1.0 / 32.0;

#[derive(Serialize)]
struct MomentsReport<'a> {
    #[serde(flatten)]
    polynomial: &'a MomentPolynomial,
    axis: Axis,
    #[serde(skip_serializing_if = "Option::is_none")]
    domain_note: Option<&'static str>,
    operator: &'a FockOperator,
}

pub fn moments(a: MomentsArgs) -> CliResult {
    let axis = Axis::from(a.axis);
    let (polynomial, operator, domain_note) = match a.kernel.n {
        Some(n) => (moment_polynomial(n, a.k)?, moment_operator(n, a.k, axis, a.dim)?, None),
        None => {
            let weights = parse_kernel(&a.kernel)?;
            if a.formal {
                let f = formal_mixture_moment_operator(&weights, a.k, axis, a.dim)?;
                (f.polynomial, f.operator, f.domain_note)
            } else {
                (mixture_polynomial(&weights, a.k)?, mixture_moment_operator(&weights, a.k, axis, a.dim)?, None)
            }
        }
    };
    if let Some(note) = domain_note {
        eprintln!("warning: sum_n n^{} w_n diverges; formal operator only, {note}", a.k);
    }
    let report = MomentsReport { polynomial: &polynomial, axis, domain_note, operator: &operator };
    emit(a.out.as_deref(), to_json_string(&report)?.as_bytes())
}

/// Convolution grid covering the output grid at the fixed step.
fn t_grid_for(grid: &Grid1D) -> Result<Grid1D, Failure> {
    let halfwidth = DEFAULT_HALFWIDTH.max(-grid.start()).max(grid.end());
    let count = (2.0 * halfwidth / T_STEP).ceil() as usize;
    Ok(Grid1D::symmetric(halfwidth, count)?)
}

fn report_leakage(leakage: f64) {
    if leakage > LEAKAGE_WARNING {
        eprintln!("warning: leakage {} exceeds {LEAKAGE_WARNING:e}; widen the grid", fmt_f64(leakage));
    }
}

fn warn_unnormalized(state: &FockVector) {
    if !state.is_normalized(1e-10) {
        eprintln!("warning: state has norm^2 {}; densities are scaled accordingly", fmt_f64(state.norm_sqr()));
    }
}

pub fn margin(a: MarginArgs) -> CliResult {
    let state = parse_state(&a.state)?;
    warn_unnormalized(&state);
    let weights = parse_kernel(&a.kernel)?;
    let axis = Axis::from(a.axis);
    let grid = resolve_grid(&a.grid, DEFAULT_HALFWIDTH, MARGIN_POINTS)?;
    let t_grid = t_grid_for(&grid)?;
    let kernel = weights.truncate(DEFAULT_TAIL_MASS, MAX_KERNEL_LEVELS)?;

    let mut values = vec![0.0; grid.count()];
    for &(n, w) in &kernel.terms {
        let part = match axis {
            Axis::X => x_margin_with(&state, n, &grid, &t_grid)?,
            Axis::Y => y_margin_with(&state, n, &grid, &t_grid)?,
        };
        for (v, p) in values.iter_mut().zip(&part.values) {
            *v += w * p;
        }
    }
    let norm_sqr = state.norm_sqr();
    let mut margin =
        MarginalDensity { grid, values, axis, norm_sqr, leakage: 0.0, leakage_warning: false };
    margin.leakage = norm_sqr * (1.0 - kernel.tail_mass) - margin.total_mass();
    margin.leakage_warning = margin.leakage > LEAKAGE_WARNING;

    let mut csv = Vec::new();
    write_marginal_csv(&mut csv, &margin)?;
    emit(a.out.as_deref(), &csv)?;

    eprintln!("total mass: {}", fmt_f64(margin.total_mass()));
    eprintln!("leakage: {}", fmt_f64(margin.leakage));
    eprintln!("mean: {}", fmt_f64(margin.moment(1)));
    eprintln!("second moment: {}", fmt_f64(margin.moment(2)));
    report_leakage(margin.leakage);
    Ok(())
}

pub fn density(a: DensityArgs) -> CliResult {
    let state = parse_state(&a.state)?;
    warn_unnormalized(&state);
    let weights = parse_kernel(&a.kernel)?;
    let grid = resolve_grid(&a.grid, DEFAULT_HALFWIDTH, DENSITY_POINTS)?;
    let dens = sample_density(&state, &weights, &grid, &grid)?;

    let mut bytes = Vec::new();
    match a.format {
        DensityFormat::Csv => write_density_csv(&mut bytes, &dens)?,
        DensityFormat::Bin => {
            if a.out.is_none() {
                return Err(Failure::Usage("--format bin needs --out".into()));
            }
            write_density_binary(&mut bytes, &dens)?
        }
    }
    emit(a.out.as_deref(), &bytes)?;

    eprintln!("grid: {} x {} points on [{}, {}]", grid.count(), grid.count(), grid.start(), grid.end());
    eprintln!("total mass: {}", fmt_f64(dens.total_mass()));
    eprintln!("kernel tail mass: {}", fmt_f64(dens.tail_mass));
    eprintln!("leakage: {}", fmt_f64(dens.leakage));
    report_leakage(dens.leakage);
    Ok(())
}

pub fn quantize(a: QuantizeArgs) -> CliResult {
    let h1 = parse_polynomial(&a.h1)?;
    let h2 = || match &a.h2 {
        Some(s) => parse_polynomial(s),
        None => Err(Failure::Usage("this mode needs --h2".into())),
    };
    let out = match a.mode {
        QuantizeMode::X => {
            if a.h2.is_some() {
                return Err(Failure::Usage("--h2 is not used with --mode x".into()));
            }
            quantize_x(&h1, a.n, a.dim)?
        }
        QuantizeMode::Complex => quantize_complex(&h1, &h2()?, a.n, a.dim)?,
        QuantizeMode::Sum => quantize_sum(&h1, &h2()?, a.n, a.dim)?,
    };
    emit(a.out.as_deref(), to_json_string(&out)?.as_bytes())
}
