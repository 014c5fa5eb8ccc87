//! Moment polynomials `p_k(t) = <n|(t - Q)^k|n>` and the moment operators of
//! the Cartesian margins for number-state and mixed diagonal kernels.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock_space::{build_qp, q_moment, FockOperator};
use crate::phase_density::Axis;
use crate::weights::{hurwitz_zeta, zeta, WeightSequence};

pub const MAX_MOMENT_ORDER: usize = 12;

/// Stopping rule for geometric tails. Tighter than double precision so that
/// `s_kk` comes out as `1` to rounding.
const GEOMETRIC_TAIL_RTOL: f64 = 1e-17;

/// Levels summed directly before a power-law tail is handed to the Hurwitz zeta.
const POWER_LAW_HEAD: usize = 64;

/// Annotation attached to formal operators whose moment series diverges.
pub const TRIVIAL_DOMAIN_NOTE: &str = "square-integrability domain is {0}";

/// Real polynomial `sum_l coeffs[l] t^l` tagged with the kernel it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentPolynomial {
    pub kernel: String,
    #[serde(rename = "k")]
    pub degree: usize,
    pub coeffs: Vec<f64>,
    pub provenance: &'static str,
}

impl MomentPolynomial {
    fn new(kernel: String, coeffs: Vec<f64>) -> Self {
        Self { kernel, degree: coeffs.len() - 1, coeffs, provenance: "closed-form" }
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// The polynomial applied to `x`.
    pub fn apply_to(&self, x: &FockOperator) -> FockOperator {
        operator_polynomial(&self.coeffs, x)
    }
}

/// `sum_l coeffs[l] x^l` by Horner's rule. Exactness bookkeeping follows the
/// products, so a degree-`k` polynomial in `Q` is exact on `dim - k` rows.
pub fn operator_polynomial(coeffs: &[f64], x: &FockOperator) -> FockOperator {
    let dim = x.dim();
    let Some((&top, rest)) = coeffs.split_last() else {
        return FockOperator::zeros(dim).expect("operator dimension is positive");
    };
    let mut acc = FockOperator::identity(dim).expect("operator dimension is positive").scale_real(top);
    for &c in rest.iter().rev() {
        acc = (&acc * x).shifted(Complex64::new(c, 0.0));
    }
    acc
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_order(k: usize) -> Result<()> {
    if !(1..=MAX_MOMENT_ORDER).contains(&k) {
        return Err(Error::InvalidArgument(format!("moment order must lie in 1..={MAX_MOMENT_ORDER}, got {k}")));
    }
    Ok(())
}

pub fn number_kernel(n: usize) -> String {
    format!("delta:{n}")
}

/// `p_k(t) = sum_l binom(k,l) (-1)^(k-l) <n|Q^(k-l)|n> t^l`.
pub fn moment_polynomial(n: usize, k: usize) -> Result<MomentPolynomial> {
    check_order(k)?;
    let coeffs = (0..=k)
        .map(|l| {
            let gap = k - l;
            if gap % 2 == 1 {
                0.0
            } else {
                binomial(k, l) * q_moment(n, gap)
            }
        })
        .collect();
    Ok(MomentPolynomial::new(number_kernel(n), coeffs))
}

fn axis_operator(axis: Axis, dim: usize, k: usize) -> Result<FockOperator> {
    if dim <= k {
        return Err(Error::InvalidDimension(format!(
            "dimension {dim} leaves no exact rows for a degree-{k} polynomial; need dim > {k}"
        )));
    }
    let (q, p) = build_qp(dim)?;
    Ok(match axis {
        Axis::X => q,
        Axis::Y => p,
    })
}

/// `p_k(Q)` (axis X) or `p_k(P)` (axis Y), exact on the leading `dim - k` rows.
pub fn moment_operator(n: usize, k: usize, axis: Axis, dim: usize) -> Result<FockOperator> {
    let poly = moment_polynomial(n, k)?;
    let x = axis_operator(axis, dim, k)?;
    Ok(poly.apply_to(&x).hermitian_part())
}

/// Whether `sum_n n^k w_n` is finite.
pub fn nseries_converges(weights: &WeightSequence, k: usize) -> bool {
    weights.nseries_converges(k)
}

/// Monomial coefficients (ascending in `n`) of the degree-`j` polynomial
/// `n -> <n|Q^(2j)|n>`, valid for every `n >= 0`.
///
/// `2^j <n|Q^(2j)|n>` is an integer, so the `j + 1` samples at `n = 0..=j`
/// are rounded before interpolating.
pub fn q2k_exact_polynomial(j: usize) -> Vec<f64> {
    let scale = 2f64.powi(j as i32);
    let samples: Vec<f64> = (0..=j).map(|n| (scale * q_moment(n, 2 * j)).round()).collect();
    // Newton forward differences, then binom(n, i) expanded into powers of n
    let mut diffs = samples.clone();
    let mut leading = Vec::with_capacity(j + 1);
    for order in 0..=j {
        leading.push(diffs[0]);
        for i in 0..j - order {
            diffs[i] = diffs[i + 1] - diffs[i];
        }
    }
    let mut coeffs = vec![0.0; j + 1];
    // falling factorial n (n-1) ... (n-i+1), ascending coefficients
    let mut falling = vec![1.0];
    let mut factorial = 1.0;
    for (i, d) in leading.iter().enumerate() {
        if i > 0 {
            factorial *= i as f64;
            let shift = (i - 1) as f64;
            let mut next = vec![0.0; falling.len() + 1];
            for (m, c) in falling.iter().enumerate() {
                next[m + 1] += c;
                next[m] -= shift * c;
            }
            falling = next;
        }
        for (m, c) in falling.iter().enumerate() {
            coeffs[m] += d * c / factorial;
        }
    }
    coeffs.iter().map(|c| c / scale).collect()
}

/// `sum_n w_n <n|Q^(2j)|n>` for `j = 0..=k/2`.
fn even_moment_sums(weights: &WeightSequence, k: usize) -> Vec<f64> {
    let jmax = k / 2;
    match weights {
        WeightSequence::Explicit { terms } => (0..=jmax)
            .map(|j| terms.iter().map(|&(n, w)| w * q_moment(n, 2 * j)).sum())
            .collect(),
        WeightSequence::Geometric { ratio } => (0..=jmax).map(|j| geometric_sum(*ratio, j)).collect(),
        WeightSequence::PowerLaw { exponent } => (0..=jmax).map(|j| power_law_sum(*exponent, j)).collect(),
    }
}

/// `sum_n (1-r) r^n <n|Q^(2j)|n>`, stopped once the tail bound falls below the
/// relative threshold.
///
/// Tail bound: `<n|Q^(2j)|n> <= (2(n+2j))^j` (at most `4^j` ladder words, each
/// factor at most `sqrt(n+2j)`), and beyond level `N` consecutive bound terms
/// shrink by at least `rho = r (1 + 1/(N+1+2j))^j`.
fn geometric_sum(r: f64, j: usize) -> f64 {
    let poly = q2k_exact_polynomial(j);
    let eval = |n: f64| poly.iter().rev().fold(0.0, |acc, c| acc * n + c);
    let mut partial = 0.0;
    let mut weight = 1.0 - r;
    let mut n = 0usize;
    loop {
        partial += weight * eval(n as f64);
        weight *= r;
        n += 1;
        let nf = n as f64;
        let jf = j as f64;
        let rho = r * (1.0 + 1.0 / (nf + 2.0 * jf)).powi(j as i32);
        if rho < 1.0 {
            let tail = weight * (2.0 * (nf + 2.0 * jf)).powi(j as i32) / (1.0 - rho);
            if tail <= GEOMETRIC_TAIL_RTOL * partial.abs() {
                return partial;
            }
        }
    }
}

/// `sum_{n>=1} n^(-alpha) <n|Q^(2j)|n> / zeta(alpha)`: a direct head, then the
/// exact tail `sum_i a_i zeta(alpha - i, N)` from the monomial coefficients.
fn power_law_sum(alpha: f64, j: usize) -> f64 {
    let poly = q2k_exact_polynomial(j);
    let head: f64 = (1..POWER_LAW_HEAD).map(|n| (n as f64).powf(-alpha) * q_moment(n, 2 * j)).sum();
    let tail: f64 = poly
        .iter()
        .enumerate()
        .map(|(i, a)| a * hurwitz_zeta(alpha - i as f64, POWER_LAW_HEAD))
        .sum();
    (head + tail) / zeta(alpha)
}

fn s_from_sums(k: usize, sums: &[f64]) -> Vec<f64> {
    (0..=k)
        .map(|l| {
            let gap = k - l;
            if gap % 2 == 1 {
                0.0
            } else {
                binomial(k, l) * sums[gap / 2]
            }
        })
        .collect()
}

/// `s_kl = binom(k,l) sum_n w_n <n|Q^(k-l)|n>`, `l = 0..=k`.
pub fn s_coefficients(weights: &WeightSequence, k: usize) -> Result<Vec<f64>> {
    check_order(k)?;
    if !weights.nseries_converges(k) {
        return Err(Error::DivergentMoment { weights: weights.to_string(), k });
    }
    Ok(s_from_sums(k, &even_moment_sums(weights, k)))
}

/// The mixture polynomial `sum_l s_kl t^l`.
pub fn mixture_polynomial(weights: &WeightSequence, k: usize) -> Result<MomentPolynomial> {
    let coeffs = s_coefficients(weights, k)?;
    Ok(MomentPolynomial::new(weights.to_string(), coeffs))
}

/// `sum_l s_kl Q^l` (axis X) or `sum_l s_kl P^l` (axis Y).
pub fn mixture_moment_operator(weights: &WeightSequence, k: usize, axis: Axis, dim: usize) -> Result<FockOperator> {
    let poly = mixture_polynomial(weights, k)?;
    let x = axis_operator(axis, dim, k)?;
    Ok(poly.apply_to(&x).hermitian_part())
}

/// `sum_l s_kl X^l` built even when `sum_n n^k w_n` diverges, provided every
/// `s_kl` is finite. `domain_note` is set in the divergent case.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalMomentOperator {
    pub polynomial: MomentPolynomial,
    pub operator: FockOperator,
    pub domain_note: Option<&'static str>,
}

pub fn formal_mixture_moment_operator(
    weights: &WeightSequence,
    k: usize,
    axis: Axis,
    dim: usize,
) -> Result<FormalMomentOperator> {
    check_order(k)?;
    if !weights.s_series_converge(k) {
        return Err(Error::DivergentMoment { weights: weights.to_string(), k });
    }
    let coeffs = s_from_sums(k, &even_moment_sums(weights, k));
    let polynomial = MomentPolynomial::new(weights.to_string(), coeffs);
    let x = axis_operator(axis, dim, k)?;
    let operator = polynomial.apply_to(&x).hermitian_part();
    let domain_note = (!weights.nseries_converges(k)).then_some(TRIVIAL_DOMAIN_NOTE);
    Ok(FormalMomentOperator { polynomial, operator, domain_note })
}

/// Least-squares fit of a degree-`k` polynomial in `n` to `<n|Q^(2k)|n>`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Q2kFit {
    pub k: usize,
    pub n_lo: usize,
    pub n_hi: usize,
    /// Ascending coefficients in `n`.
    pub coeffs: Vec<f64>,
    pub max_rel_residual: f64,
}

/// Fits over `n_lo..=n_hi` in the variable `(n - mid) / half`, which keeps the
/// Vandermonde matrix well conditioned, then expands back to powers of `n`.
pub fn q2k_polynomial_check(k: usize, n_lo: usize, n_hi: usize) -> Result<Q2kFit> {
    if !(1..=6).contains(&k) {
        return Err(Error::InvalidRange(format!("fit order k must lie in 1..=6, got {k}")));
    }
    if n_lo < k || n_hi > k + 32 || n_hi < n_lo + k {
        return Err(Error::InvalidRange(format!(
            "n range [{n_lo}, {n_hi}] must lie in [{k}, {}] and hold at least {} points",
            k + 32,
            k + 1
        )));
    }
    let mid = 0.5 * (n_lo + n_hi) as f64;
    let half = (0.5 * (n_hi - n_lo) as f64).max(1.0);
    let ns: Vec<usize> = (n_lo..=n_hi).collect();
    let values: Vec<f64> = ns.iter().map(|&n| q_moment(n, 2 * k)).collect();
    let vander = DMatrix::from_fn(ns.len(), k + 1, |r, c| ((ns[r] as f64 - mid) / half).powi(c as i32));
    let rhs = DVector::from_column_slice(&values);
    let shifted = vander
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidRange(format!("least-squares solve failed: {e}")))?;

    let fitted = &vander * &shifted;
    let max_rel_residual = fitted
        .iter()
        .zip(&values)
        .map(|(f, v)| ((f - v) / v).abs())
        .fold(0.0, f64::max);

    // sum_i b_i ((n - mid)/half)^i expanded into powers of n
    let mut coeffs = vec![0.0; k + 1];
    for (i, b) in shifted.iter().enumerate() {
        let scaled = b / half.powi(i as i32);
        for (m, c) in coeffs.iter_mut().enumerate().take(i + 1) {
            *c += scaled * binomial(i, m) * (-mid).powi((i - m) as i32);
        }
    }
    Ok(Q2kFit { k, n_lo, n_hi, coeffs, max_rel_residual })
}
