//! Verification suites behind `phq verify`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use phq_core::export::to_json_string;
use phq_core::fock_space::{build_ladder, build_number, build_qp, q_moment, FockOperator, FockVector};
use phq_core::moment_engine::{
    mixture_moment_operator, moment_operator, moment_polynomial, nseries_converges, q2k_exact_polynomial,
    q2k_polynomial_check, s_coefficients,
};
use phq_core::phase_density::{density, Axis};
use phq_core::quantizer::{quantize_complex, quantize_sum, RealPolynomial};
use phq_core::verify_oracle::{
    density_moment_2d, ladder_expectation, moment_of, oracle_margin, random_states, CheckRecord, Letter, Metric,
};
use phq_core::weights::WeightSequence;
use phq_core::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::inputs::{emit, resolve_grid};
use crate::{CliResult, Failure, GridArgs, Suite, VerifyArgs};

pub const ORACLE_LEVELS: [usize; 6] = [0, 1, 2, 3, 5, 8];
pub const ORACLE_STATES: usize = 20;
pub const ORACLE_SPAN: usize = 16;
const ORACLE_DIM: usize = 32;

/// Named tolerances, each overridable with `--tolerance NAME=VALUE`.
#[derive(Debug, Clone, Serialize)]
pub struct Tolerances(BTreeMap<&'static str, f64>);

impl Tolerances {
    fn defaults() -> Self {
        Self(BTreeMap::from([
            ("identity", 1e-12),
            ("numberop", 1e-10),
            ("ladder", 1e-10),
            ("oracle", 1e-7),
            ("density", 1e-5),
            ("normalization", 1e-6),
            ("fit", 1e-8),
            ("fit-exact", 1e-12),
            ("mixture", 1e-12),
        ]))
    }

    fn get(&self, name: &str) -> f64 {
        self.0[name]
    }

    fn apply(&mut self, overrides: &[String]) -> Result<(), Failure> {
        for item in overrides {
            let (name, value) =
                item.split_once('=').ok_or_else(|| Failure::Usage(format!("tolerance {item:?} is not NAME=VALUE")))?;
            let value: f64 = value
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| Failure::Usage(format!("tolerance value {value:?} is not a nonnegative number")))?;
            match self.0.get_mut(name.trim()) {
                Some(slot) => *slot = value,
                None => {
                    let known: Vec<&str> = self.0.keys().copied().collect();
                    return Err(Failure::Usage(format!("unknown tolerance {name:?}; known: {}", known.join(", "))));
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Report<'a> {
    suite: &'static str,
    seed: u64,
    tolerances: &'a Tolerances,
    passed: usize,
    failed: usize,
    records: &'a [CheckRecord],
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Identities => "identities",
        Suite::Oracle => "oracle",
        Suite::LemmaQ2k => "lemma-q2k",
        Suite::Mixtures => "mixtures",
        Suite::All => "all",
    }
}

pub fn run(a: VerifyArgs) -> CliResult {
    let mut tol = Tolerances::defaults();
    tol.apply(&a.tolerances)?;
    let suites: Vec<Suite> = match a.suite {
        Suite::All => vec![Suite::Identities, Suite::Oracle, Suite::LemmaQ2k, Suite::Mixtures],
        one => vec![one],
    };
    let mut records = Vec::new();
    for s in suites {
        let start = std::time::Instant::now();
        let part = match s {
            Suite::Identities => identities(&tol)?,
            Suite::Oracle => oracle(&tol, a.seed)?,
            Suite::LemmaQ2k => lemma_q2k(&tol)?,
            Suite::Mixtures => mixtures(&tol, a.seed)?,
            Suite::All => unreachable!("expanded above"),
        };
        let failed = part.iter().filter(|r| !r.pass).count();
        eprintln!(
            "{}: {} checks, {} failed ({:.2} s)",
            suite_name(s),
            part.len(),
            failed,
            start.elapsed().as_secs_f64()
        );
        records.extend(part);
    }

    let failed: Vec<&CheckRecord> = records.iter().filter(|r| !r.pass).collect();
    for r in &failed {
        eprintln!("FAIL {}", to_json_string(r)?.trim_end());
    }
    let report = Report {
        suite: suite_name(a.suite),
        seed: a.seed,
        tolerances: &tol,
        passed: records.len() - failed.len(),
        failed: failed.len(),
        records: &records,
    };
    emit(a.out.as_deref(), to_json_string(&report)?.as_bytes())?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::ChecksFailed(failed.len()))
    }
}

fn power(x: &FockOperator, k: usize) -> FockOperator {
    (0..k).fold(FockOperator::identity(x.dim()).expect("dim > 0"), |acc, _| &acc * x)
}

fn block_diff(check: String, a: &FockOperator, b: &FockOperator, size: usize, tol: f64) -> CheckRecord {
    CheckRecord::new(check, a.max_abs_diff_on_block(b, size), 0.0, Metric::Abs, tol)
}

fn identities(tol: &Tolerances) -> Result<Vec<CheckRecord>, Error> {
    let dim = 32;
    let id = tol.get("identity");
    let mut out = Vec::new();
    let (q, p) = build_qp(dim)?;
    let (raise, lower) = build_ladder(dim)?;
    let number = build_number(dim)?;
    let i = Complex64::new(0.0, 1.0);

    let comm = q.commutator(&p);
    let want = FockOperator::identity(dim)?.scale(i);
    out.push(block_diff(format!("[Q,P] = iI on levels 0..{}", dim - 2), &comm, &want, dim - 1, id));

    let lhs = (&(&q * &q) + &(&p * &p)).scale_real(0.5);
    let rhs = number.shifted(Complex64::new(0.5, 0.0));
    out.push(block_diff("(Q^2+P^2)/2 = N + I/2 on the exact block".into(), &lhs, &rhs, dim - 1, id));
    let a_plus = (&q - &p.scale(i)).scale_real(FRAC_1_SQRT_2);
    out.push(block_diff("A+ = (Q - iP)/sqrt2".into(), &a_plus, &raise, dim, id));
    let a_minus = (&q + &p.scale(i)).scale_real(FRAC_1_SQRT_2);
    out.push(block_diff("A- = (Q + iP)/sqrt2".into(), &a_minus, &lower, dim, id));

    // <n|Q^m|n> = <n|P^m|n> from independent matrix powers
    let (q40, p40) = build_qp(40)?;
    let (mut qm, mut pm) = (FockOperator::identity(40)?, FockOperator::identity(40)?);
    for m in 0..=12 {
        if m > 0 {
            qm = &qm * &q40;
            pm = &pm * &p40;
        }
        for n in 0..=16 {
            out.push(CheckRecord::new(
                format!("<{n}|Q^{m}|{n}> = <{n}|P^{m}|{n}>"),
                pm.get(n, n).re,
                qm.get(n, n).re,
                Metric::Rel,
                id,
            ));
            let ladder = ladder_expectation(n, &vec![Letter::Q; m])?;
            out.push(CheckRecord::new(
                format!("ladder <{n}|Q^{m}|{n}>"),
                ladder.re,
                q_moment(n, m),
                Metric::Scaled,
                tol.get("ladder"),
            ));
        }
    }

    let mut worst_p1: f64 = 0.0;
    let mut worst_p2: f64 = 0.0;
    for n in 0..=50 {
        let p1 = moment_polynomial(n, 1)?;
        worst_p1 = worst_p1.max((p1.coeffs[0]).abs()).max((p1.coeffs[1] - 1.0).abs());
        let p2 = moment_polynomial(n, 2)?;
        let want = [n as f64 + 0.5, 0.0, 1.0];
        for (c, w) in p2.coeffs.iter().zip(want) {
            worst_p2 = worst_p2.max((c - w).abs());
        }
    }
    out.push(CheckRecord::new("p1(t) = t for n <= 50", worst_p1, 0.0, Metric::Abs, id));
    out.push(CheckRecord::new("p2(t) = t^2 + n + 1/2 for n <= 50", worst_p2, 0.0, Metric::Abs, id));

    let mut parity_ok = true;
    let mut witness_ok = true;
    for n in 0..=16 {
        for k in 1..=8 {
            let poly = moment_polynomial(n, k)?;
            for (l, c) in poly.coeffs.iter().enumerate() {
                parity_ok &= if (k - l) % 2 == 1 { *c == 0.0 } else { *c > 0.0 };
            }
            // odd k has c_0 = 0 by parity; c_(k-2) is the witness for every k
            if k >= 2 {
                witness_ok &= poly.coeffs[k - 2] > 0.0 && (k % 2 == 1 || poly.coeffs[0] > 0.0);
            }
        }
    }
    out.push(CheckRecord::flag("odd gaps vanish, even gaps positive (n <= 16, k <= 8)", parity_ok));
    out.push(CheckRecord::flag("c_(k-2) > 0 (and c_0 > 0 for even k) for k >= 2, so p_k(Q) != Q^k", witness_ok));

    let t = RealPolynomial::new(vec![0.0, FRAC_1_SQRT_2])?;
    let minus_t = RealPolynomial::new(vec![0.0, -FRAC_1_SQRT_2])?;
    let half_sq = RealPolynomial::new(vec![0.0, 0.0, 0.5])?;
    for n in 0..=8 {
        let plus = quantize_complex(&t, &t, n, dim)?;
        out.push(block_diff(format!("quantize (x+iy)/sqrt2 = A- (n={n})"), &plus.operator, &lower, dim - 1, id));
        let minus = quantize_complex(&t, &minus_t, n, dim)?;
        out.push(block_diff(format!("quantize (x-iy)/sqrt2 = A+ (n={n})"), &minus.operator, &raise, dim - 1, id));
        let sum = quantize_sum(&half_sq, &half_sq, n, dim)?;
        let want = number.shifted(Complex64::new(n as f64 + 1.0, 0.0));
        out.push(block_diff(
            format!("quantize (x^2+y^2)/2 = N + (n+1)I (n={n})"),
            &sum.operator,
            &want,
            dim - 2,
            tol.get("numberop"),
        ));
    }

    let mut defect: f64 = 0.0;
    for axis in [Axis::X, Axis::Y] {
        for k in 1..=12 {
            defect = defect.max(moment_operator(4, k, axis, dim)?.hermiticity_defect());
        }
    }
    out.push(CheckRecord::new("moment operators Hermitian", defect, 0.0, Metric::Abs, id));
    Ok(out)
}

/// Closed-form moments against margin quadrature and against 2D density
/// integration, over seeded random states.
fn oracle(tol: &Tolerances, seed: u64) -> Result<Vec<CheckRecord>, Failure> {
    let margin_grid = resolve_grid(&GridArgs { halfwidth: None, points: None }, 16.0, 1024)?;
    let density_grid = resolve_grid(&GridArgs { halfwidth: None, points: None }, 16.0, 256)?;
    let states = random_states(seed, ORACLE_STATES, ORACLE_SPAN);
    let operators: Vec<((usize, usize, Axis), FockOperator)> = ORACLE_LEVELS
        .iter()
        .flat_map(|&n| (1..=6).flat_map(move |k| [Axis::X, Axis::Y].map(|axis| (n, k, axis))))
        .map(|key| moment_operator(key.0, key.1, key.2, ORACLE_DIM).map(|op| (key, op)))
        .collect::<Result<_, _>>()?;

    let jobs: Vec<(usize, usize)> =
        (0..states.len()).flat_map(|s| ORACLE_LEVELS.iter().map(move |&n| (s, n))).collect();
    let chunks: Vec<Result<Vec<CheckRecord>, Error>> = jobs
        .par_iter()
        .map(|&(s, n)| oracle_case(&states[s], s, n, &operators, &margin_grid, &density_grid, tol))
        .collect();
    let mut out = Vec::new();
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

fn oracle_case(
    state: &FockVector,
    s: usize,
    n: usize,
    operators: &[((usize, usize, Axis), FockOperator)],
    margin_grid: &phq_core::hermite_quad::Grid1D,
    density_grid: &phq_core::hermite_quad::Grid1D,
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>, Error> {
    let mut out = Vec::new();
    let dens = density(state, &WeightSequence::delta(n), density_grid, density_grid)?;
    out.push(CheckRecord::new(
        format!("density mass state#{s} n={n}"),
        dens.total_mass(),
        1.0,
        Metric::Abs,
        tol.get("normalization"),
    ));
    for axis in [Axis::X, Axis::Y] {
        let margin = oracle_margin(state, n, axis, margin_grid)?;
        let two_d = dens.marginal(axis);
        for k in 1..=6 {
            let op = &operators.iter().find(|(key, _)| *key == (n, k, axis)).expect("operator table is complete").1;
            let closed = op.expectation(state)?.re;
            let quad = moment_of(&margin, k).value;
            out.push(CheckRecord::new(
                format!("moment state#{s} n={n} k={k} {axis}: quadrature vs operator"),
                quad,
                closed,
                Metric::Scaled,
                tol.get("oracle"),
            ));
            out.push(CheckRecord::new(
                format!("moment state#{s} n={n} k={k} {axis}: 2D density vs margin"),
                two_d.moment(k),
                quad,
                Metric::Abs,
                tol.get("density"),
            ));
        }
    }
    Ok(out)
}

fn lemma_q2k(tol: &Tolerances) -> Result<Vec<CheckRecord>, Error> {
    let mut out = Vec::new();
    eprintln!("{:>2}  {:>9}  {:>12}  coefficients (ascending in n)", "k", "range", "rel resid");
    let mut ranges: Vec<(usize, usize, usize)> = (1..=5).map(|k| (k, k, k + 10)).collect();
    ranges.push((3, 3, 20));
    ranges.push((6, 6, 38));
    for (k, lo, hi) in ranges {
        let fit = q2k_polynomial_check(k, lo, hi)?;
        let coeffs: Vec<String> = fit.coeffs.iter().map(|c| format!("{c:.10}")).collect();
        eprintln!("{k:>2}  {:>9}  {:>12.3e}  {}", format!("[{lo},{hi}]"), fit.max_rel_residual, coeffs.join(" "));
        out.push(CheckRecord::new(
            format!("<n|Q^{}|n> fits a degree-{k} polynomial on [{lo},{hi}]", 2 * k),
            fit.max_rel_residual,
            0.0,
            Metric::Abs,
            tol.get("fit"),
        ));
        if k == 1 && lo == 1 {
            out.push(CheckRecord::new("k=1 fit slope", fit.coeffs[1], 1.0, Metric::Abs, tol.get("fit-exact")));
            out.push(CheckRecord::new("k=1 fit intercept", fit.coeffs[0], 0.5, Metric::Abs, tol.get("fit-exact")));
        }
        if k == 2 && lo == 2 {
            out.push(CheckRecord::new("k=2 fit leading coefficient", fit.coeffs[2], 1.5, Metric::Rel, tol.get("fit")));
        }
    }
    // the interpolated polynomial reproduces every level, including n < k
    for j in 1..=6 {
        let poly = q2k_exact_polynomial(j);
        let worst = (0..=40)
            .map(|n| {
                let v = poly.iter().rev().fold(0.0, |acc, c| acc * n as f64 + c);
                let want = q_moment(n, 2 * j);
                ((v - want) / want).abs()
            })
            .fold(0.0, f64::max);
        out.push(CheckRecord::new(
            format!("exact degree-{j} polynomial matches <n|Q^{}|n> for n <= 40", 2 * j),
            worst,
            0.0,
            Metric::Abs,
            tol.get("fit-exact"),
        ));
    }
    Ok(out)
}

fn mixtures(tol: &Tolerances, seed: u64) -> Result<Vec<CheckRecord>, Error> {
    let mut out = Vec::new();
    let mix = tol.get("mixture");
    let half = WeightSequence::from_dense(&[0.5, 0.5])?;
    let s = s_coefficients(&half, 2)?;
    for (l, (got, want)) in s.iter().zip([1.0, 0.0, 1.0]).enumerate() {
        out.push(CheckRecord::new(format!("s_2{l} for weights (1/2, 1/2)"), *got, want, Metric::Abs, mix));
    }
    let geo = s_coefficients(&WeightSequence::geometric(0.5)?, 2)?;
    out.push(CheckRecord::new("s_20 for geometric(1/2)", geo[0], 1.5, Metric::Abs, mix));

    let dim = 16;
    let (q, _) = build_qp(dim)?;
    let op = mixture_moment_operator(&half, 2, Axis::X, dim)?;
    let want = power(&q, 2).shifted(Complex64::new(1.0, 0.0));
    out.push(block_diff("mixture (1/2, 1/2), k=2 = Q^2 + I".into(), &op, &want, dim - 2, mix));

    for k in 1..=5 {
        let kf = k as f64;
        out.push(CheckRecord::flag(
            format!("powerlaw({}) diverges at k={k}", kf + 1.0),
            !nseries_converges(&WeightSequence::power_law(kf + 1.0)?, k),
        ));
        out.push(CheckRecord::flag(
            format!("powerlaw({}) converges at k={k}", kf + 2.0),
            nseries_converges(&WeightSequence::power_law(kf + 2.0)?, k),
        ));
    }
    out.push(CheckRecord::flag(
        "geometric(1/2) converges at k=6",
        nseries_converges(&WeightSequence::geometric(0.5)?, 6),
    ));
    out.push(CheckRecord::flag(
        "divergent mixture refused",
        matches!(s_coefficients(&WeightSequence::power_law(3.0)?, 2), Err(Error::DivergentMoment { .. })),
    ));

    for m in [0usize, 3, 7] {
        for axis in [Axis::X, Axis::Y] {
            for k in 1..=8 {
                let a = mixture_moment_operator(&WeightSequence::delta(m), k, axis, 24)?;
                let b = moment_operator(m, k, axis, 24)?;
                out.push(block_diff(format!("single weight at {m} reduces to p_{k} ({axis})"), &a, &b, 24, mix));
            }
        }
    }

    let vacuum = FockVector::basis(0, 1)?;
    let v = density_moment_2d(&vacuum, &half, 2, Axis::X)?;
    out.push(CheckRecord::new("2D second moment, vacuum, weights (1/2, 1/2)", v.value, 1.5, Metric::Abs, tol.get("density")));

    let state = &random_states(seed ^ 0x9e37_79b9, 1, 8)[0];
    let weights = [0.2, 0.3, 0.5];
    let whole_kernel = WeightSequence::from_dense(&weights)?;
    for axis in [Axis::X, Axis::Y] {
        for k in [1usize, 2, 4] {
            let whole = density_moment_2d(state, &whole_kernel, k, axis)?.value;
            let parts: f64 = weights
                .iter()
                .enumerate()
                .map(|(n, w)| density_moment_2d(state, &WeightSequence::delta(n), k, axis).map(|v| w * v.value))
                .sum::<Result<f64, Error>>()?;
            out.push(CheckRecord::new(
                format!("density additivity over (0.2, 0.3, 0.5), k={k} {axis}"),
                whole,
                parts,
                Metric::Abs,
                mix,
            ));
        }
    }
    Ok(out)
}
