//! Independent oracles for the closed forms: trapezoid moments of the margins,
//! moments of the sampled 2D density, and brute-force ladder expansion.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock_space::FockVector;
use crate::hermite_quad::Grid1D;
use crate::phase_density::{density, x_margin_with, y_margin_with, Axis, MarginalDensity, LEAKAGE_WARNING};
use crate::weights::WeightSequence;

pub const MAX_ORACLE_ORDER: usize = 8;
pub const MAX_ORACLE_LEVELS: usize = 33;
pub const MAX_WORD_LENGTH: usize = 12;
pub const MAX_WORD_LEVEL: usize = 64;
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

/// An oracle value and the grid leakage behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValue {
    pub value: f64,
    pub leakage: f64,
    /// Set when leakage exceeds the warning level; widen the grid.
    pub leakage_warning: bool,
}

fn check_oracle_input(state: &FockVector, k: usize) -> Result<()> {
    if k > MAX_ORACLE_ORDER {
        return Err(Error::InvalidArgument(format!("oracle moments go up to k = {MAX_ORACLE_ORDER}, got {k}")));
    }
    if state.support() > MAX_ORACLE_LEVELS {
        return Err(Error::InvalidArgument(format!(
            "state occupies {} levels; the oracle accepts at most {MAX_ORACLE_LEVELS}",
            state.support()
        )));
    }
    if !state.is_normalized(1e-10) {
        return Err(Error::PreconditionViolated(format!("state has norm^2 {}, expected 1", state.norm_sqr())));
    }
    Ok(())
}

/// The margin used by [`quadrature_moment`], convolved over `grid` itself.
pub fn oracle_margin(state: &FockVector, n: usize, axis: Axis, grid: &Grid1D) -> Result<MarginalDensity> {
    match axis {
        Axis::X => x_margin_with(state, n, grid, grid),
        Axis::Y => y_margin_with(state, n, grid, grid),
    }
}

/// `∫ x^k margin(x) dx` by the trapezoid rule on `grid`.
pub fn quadrature_moment(state: &FockVector, n: usize, k: usize, axis: Axis, grid: &Grid1D) -> Result<OracleValue> {
    check_oracle_input(state, k)?;
    let margin = oracle_margin(state, n, axis, grid)?;
    Ok(moment_of(&margin, k))
}

/// Moment `k` of an already computed margin, carrying its leakage.
pub fn moment_of(margin: &MarginalDensity, k: usize) -> OracleValue {
    OracleValue { value: margin.moment(k), leakage: margin.leakage, leakage_warning: margin.leakage_warning }
}

/// Grid used on both axes by [`density_moment_2d`].
pub fn default_density_grid() -> Grid1D {
    Grid1D::symmetric(16.0, 256).expect("static grid is valid")
}

/// `∫∫ x^k density(q, p) dq dp` with `x = q` (axis X) or `x = p` (axis Y).
pub fn density_moment_2d(state: &FockVector, kernel: &WeightSequence, k: usize, axis: Axis) -> Result<OracleValue> {
    let grid = default_density_grid();
    density_moment_2d_on(state, kernel, k, axis, &grid, &grid)
}

pub fn density_moment_2d_on(
    state: &FockVector,
    kernel: &WeightSequence,
    k: usize,
    axis: Axis,
    q_grid: &Grid1D,
    p_grid: &Grid1D,
) -> Result<OracleValue> {
    check_oracle_input(state, k)?;
    let dens = density(state, kernel, q_grid, p_grid)?;
    Ok(OracleValue {
        value: dens.moment(k, axis),
        leakage: dens.leakage,
        leakage_warning: dens.leakage > LEAKAGE_WARNING,
    })
}

/// A letter of an operator word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    Q,
    P,
}

/// Parses words such as `"QPQ"`; whitespace and commas are ignored.
pub fn parse_word(s: &str) -> Result<Vec<Letter>> {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c.to_ascii_uppercase() {
            'Q' => Ok(Letter::Q),
            'P' => Ok(Letter::P),
            other => Err(Error::InvalidArgument(format!("word letters are Q and P, got {other:?}"))),
        })
        .collect()
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Q => "Q",
            Self::P => "P",
        })
    }
}

/// `<n| w_1 w_2 ... w_m |n>`, expanding every letter into `A_+` and `A_-`
/// and tracking the amplitude of each level reached from `|n>`.
pub fn ladder_expectation(n: usize, word: &[Letter]) -> Result<Complex64> {
    if word.len() > MAX_WORD_LENGTH {
        return Err(Error::InvalidArgument(format!(
            "word has {} letters, at most {MAX_WORD_LENGTH} are supported",
            word.len()
        )));
    }
    if n > MAX_WORD_LEVEL {
        return Err(Error::InvalidArgument(format!("level {n} is above the supported {MAX_WORD_LEVEL}")));
    }
    let top = n + word.len() + 1;
    let mut amp = vec![Complex64::new(0.0, 0.0); top + 1];
    amp[n] = Complex64::new(1.0, 0.0);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // rightmost letter acts first
    for letter in word.iter().rev() {
        let (up, down) = match letter {
            Letter::Q => (Complex64::new(r, 0.0), Complex64::new(r, 0.0)),
            Letter::P => (Complex64::new(0.0, r), Complex64::new(0.0, -r)),
        };
        let mut next = vec![Complex64::new(0.0, 0.0); top + 1];
        for (level, a) in amp.iter().enumerate() {
            if *a == Complex64::new(0.0, 0.0) {
                continue;
            }
            // A_+ |l> = sqrt(l+1) |l+1>, A_- |l> = sqrt(l) |l-1>
            next[level + 1] += up * a * ((level + 1) as f64).sqrt();
            if level > 0 {
                next[level - 1] += down * a * (level as f64).sqrt();
            }
        }
        amp = next;
    }
    Ok(amp[n])
}

/// Which error a [`CheckRecord`] is judged by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `|lhs - rhs|`
    Abs,
    /// `|lhs - rhs| / |rhs|`, absolute when `rhs = 0`
    Rel,
    /// `|lhs - rhs| / (1 + |rhs|)`
    Scaled,
}

/// One comparison in a verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub metric: Metric,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(check: impl Into<String>, lhs: f64, rhs: f64, metric: Metric, tolerance: f64) -> Self {
        let abs_err = (lhs - rhs).abs();
        let rel_err = if rhs == 0.0 { abs_err } else { abs_err / rhs.abs() };
        let judged = match metric {
            Metric::Abs => abs_err,
            Metric::Rel => rel_err,
            Metric::Scaled => abs_err / (1.0 + rhs.abs()),
        };
        Self { check: check.into(), lhs, rhs, abs_err, rel_err, metric, tolerance, pass: judged <= tolerance }
    }

    /// A yes/no condition recorded as `lhs = 1` against `rhs = 1`.
    pub fn flag(check: impl Into<String>, ok: bool) -> Self {
        Self::new(check, if ok { 1.0 } else { 0.0 }, 1.0, Metric::Abs, 0.0)
    }
}

/// `count` normalized states with complex Gaussian coefficients on levels
/// `0..levels`, reproducible from `seed`.
pub fn random_states(seed: u64, count: usize, levels: usize) -> Vec<FockVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let coeffs: Vec<Complex64> = (0..levels)
                .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect();
            FockVector::new(coeffs).and_then(|v| v.normalized()).expect("gaussian coefficients are nonzero")
        })
        .collect()
}

impl FromStr for Letter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match parse_word(s)?.as_slice() {
            [one] => Ok(*one),
            _ => Err(Error::InvalidArgument(format!("expected a single letter, got {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_space::{build_qp, q_moment, FockOperator};
    use crate::moment_engine::moment_operator;

    const ABS_1: f64 = 1e-7;

    fn basis(n: usize) -> FockVector {
        FockVector::basis(n, 4).unwrap()
    }

    fn grid() -> Grid1D {
        Grid1D::default_oracle()
    }

    #[test]
    fn quadrature_examples() {
        let v = quadrature_moment(&basis(0), 0, 2, Axis::X, &grid()).unwrap();
        assert!((v.value - 1.0).abs() <= ABS_1, "{v:?}");
        assert!(!v.leakage_warning);

        let v = quadrature_moment(&basis(0), 3, 1, Axis::Y, &grid()).unwrap();
        assert!(v.value.abs() <= 1e-8);

        let r = std::f64::consts::FRAC_1_SQRT_2;
        let cat = FockVector::new(vec![Complex64::new(r, 0.0), Complex64::new(r, 0.0)]).unwrap();
        let v = quadrature_moment(&cat, 0, 1, Axis::X, &grid()).unwrap();
        assert!((v.value - r).abs() <= ABS_1);
    }

    #[test]
    fn quadrature_preconditions() {
        let unnormalized = FockVector::new(vec![Complex64::new(2.0, 0.0)]).unwrap();
        assert!(matches!(
            quadrature_moment(&unnormalized, 0, 2, Axis::X, &grid()),
            Err(Error::PreconditionViolated(_))
        ));
        assert!(matches!(quadrature_moment(&basis(0), 0, 9, Axis::X, &grid()), Err(Error::InvalidArgument(_))));
        let narrow = Grid1D::symmetric(3.0, 256).unwrap();
        assert!(quadrature_moment(&basis(0), 4, 2, Axis::X, &narrow).unwrap().leakage_warning);
    }

    #[test]
    fn density_examples() {
        let v = density_moment_2d(&basis(0), &WeightSequence::delta(0), 2, Axis::X).unwrap();
        assert!((v.value - 1.0).abs() <= 1e-5, "{v:?}");

        let half = WeightSequence::from_dense(&[0.5, 0.5]).unwrap();
        let v = density_moment_2d(&basis(0), &half, 2, Axis::X).unwrap();
        assert!((v.value - 1.5).abs() <= 1e-5, "{v:?}");

        let v = density_moment_2d(&basis(0), &WeightSequence::delta(0), 0, Axis::Y).unwrap();
        assert!((v.value - 1.0).abs() <= 1e-6 + v.leakage.abs());
    }

    #[test]
    fn ladder_examples() {
        let q4 = ladder_expectation(0, &parse_word("QQQQ").unwrap()).unwrap();
        assert!((q4 - Complex64::new(0.75, 0.0)).norm() <= 1e-14);

        let qp = ladder_expectation(2, &parse_word("QP").unwrap()).unwrap();
        let pq = ladder_expectation(2, &parse_word("PQ").unwrap()).unwrap();
        assert!((qp - pq - Complex64::new(0.0, 1.0)).norm() <= 1e-14);

        assert_eq!(ladder_expectation(1, &[Letter::Q]).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn ladder_limits() {
        assert!(matches!(ladder_expectation(0, &[Letter::Q; 13]), Err(Error::InvalidArgument(_))));
        assert!(matches!(ladder_expectation(65, &[Letter::Q]), Err(Error::InvalidArgument(_))));
        assert!(parse_word("QX").is_err());
        assert_eq!("p".parse::<Letter>().unwrap(), Letter::P);
    }

    #[test]
    fn ladder_matches_q_moment() {
        for m in 0..=12 {
            for n in 0..=16 {
                let v = ladder_expectation(n, &vec![Letter::Q; m]).unwrap();
                let want = q_moment(n, m);
                assert!((v.re - want).abs() <= 1e-10 * (1.0 + want), "n={n} m={m}");
                assert!(v.im.abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn ladder_matches_matrix_words() {
        let dim = 30;
        let (q, p) = build_qp(dim).unwrap();
        let words = ["QPPQ", "PPPP", "QQPQPP", "PQPQPQPQ", "QQQQQQPPPPPP"];
        for w in words {
            let word = parse_word(w).unwrap();
            let op = word.iter().fold(FockOperator::identity(dim).unwrap(), |acc, l| {
                &acc * match l {
                    Letter::Q => &q,
                    Letter::P => &p,
                }
            });
            for n in [0usize, 3, 7] {
                let want = op.get(n, n);
                let got = ladder_expectation(n, &word).unwrap();
                assert!((got - want).norm() <= 1e-10 * (1.0 + want.norm()), "{w} n={n}");
            }
        }
    }

    #[test]
    fn oracle_triangle_small() {
        let states = random_states(DEFAULT_SEED, 3, 8);
        let g = grid();
        for state in &states {
            for n in [0usize, 2] {
                for axis in [Axis::X, Axis::Y] {
                    let margin = oracle_margin(state, n, axis, &g).unwrap();
                    for k in 1..=4 {
                        let quad = moment_of(&margin, k).value;
                        let op = moment_operator(n, k, axis, 24).unwrap();
                        let closed = op.expectation(state).unwrap().re;
                        assert!((quad - closed).abs() <= 1e-7 * (1.0 + closed.abs()), "n={n} k={k} {axis}");
                    }
                }
                let two_d = density_moment_2d(state, &WeightSequence::delta(n), 2, Axis::Y).unwrap().value;
                let one_d = quadrature_moment(state, n, 2, Axis::Y, &g).unwrap().value;
                assert!((two_d - one_d).abs() <= 1e-5);
            }
        }
    }

    #[test]
    fn mixture_additivity() {
        let state = &random_states(7, 1, 6)[0];
        let weights = [0.2, 0.3, 0.5];
        let mix = WeightSequence::from_dense(&weights).unwrap();
        for axis in [Axis::X, Axis::Y] {
            let whole = density_moment_2d(state, &mix, 2, axis).unwrap().value;
            let parts: f64 = weights
                .iter()
                .enumerate()
                .map(|(n, w)| w * density_moment_2d(state, &WeightSequence::delta(n), 2, axis).unwrap().value)
                .sum();
            assert!((whole - parts).abs() <= 1e-12, "{whole} vs {parts}");
        }
    }

    #[test]
    fn random_states_reproducible() {
        let a = random_states(11, 2, 16);
        let b = random_states(11, 2, 16);
        assert_eq!(a, b);
        assert!(a.iter().all(|s| s.is_normalized(1e-12) && s.dim() == 16));
        assert_ne!(random_states(12, 1, 16)[0], a[0]);
    }

    #[test]
    fn check_records() {
        let r = CheckRecord::new("x", 1.0 + 1e-9, 1.0, Metric::Rel, 1e-8);
        assert!(r.pass);
        let r = CheckRecord::new("x", 1e-3, 0.0, Metric::Abs, 1e-6);
        assert!(!r.pass);
        assert_eq!(r.rel_err, 1e-3);
        assert!(CheckRecord::flag("ok", true).pass);
        assert!(!CheckRecord::flag("bad", false).pass);
    }
}
