//! Truncated number-basis operator algebra.
//!
//! Every operator carries two pieces of bookkeeping next to its matrix:
//!
//! * `exact_rows`: the number of leading basis vectors `|0>, ..., |r-1>` on
//!   which the truncated operator acts exactly as its infinite-dimensional
//!   counterpart. Matrix entries `(i, j)` with `j < exact_rows` are therefore
//!   exact, and for Hermitian results so is the leading `r x r` block.
//! * `bandwidth`: the largest `|i - j|` for which the untruncated operator has
//!   a nonzero entry. Products use it to propagate `exact_rows`: the image of
//!   `|j>` under `B` lives in levels `<= j + bandwidth(B)`, so `A * B` is exact
//!   on `min(exact(B), exact(A) - bandwidth(B))` vectors.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense complex operator on the span of `|0>, ..., |dim-1>`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    entries: DMatrix<Complex64>,
    exact_rows: usize,
    bandwidth: usize,
}

impl FockOperator {
    /// Wraps a square matrix. `exact_rows` is clamped to the dimension.
    pub fn from_matrix(entries: DMatrix<Complex64>, exact_rows: usize, bandwidth: usize) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::InvalidDimension(format!(
                "operator matrix must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let dim = entries.nrows();
        Ok(Self { entries, exact_rows: exact_rows.min(dim), bandwidth: bandwidth.min(dim - 1) })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim, 1)?;
        Ok(Self { entries: DMatrix::identity(dim, dim), exact_rows: dim, bandwidth: 0 })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim, 1)?;
        Ok(Self { entries: DMatrix::zeros(dim, dim), exact_rows: dim, bandwidth: 0 })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn exact_rows(&self) -> usize {
        self.exact_rows
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self { entries: &self.entries * factor, ..self.clone() }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Adds `shift * I`.
    pub fn shifted(&self, shift: Complex64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim() {
            out.entries[(i, i)] += shift;
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self { entries: self.entries.adjoint(), ..self.clone() }
    }

    /// `A B - B A`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Largest entrywise deviation from Hermiticity, `max |M - M^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.entries - self.entries.adjoint()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `(M + M^dagger) / 2`, for results that are Hermitian in exact arithmetic.
    pub fn hermitian_part(&self) -> Self {
        let sym = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        Self { entries: sym, ..self.clone() }
    }

    /// Leading `size x size` block.
    pub fn leading_block(&self, size: usize) -> DMatrix<Complex64> {
        let size = size.min(self.dim());
        self.entries.view((0, 0), (size, size)).into_owned()
    }

    /// `max |A_ij - B_ij|` over the leading `size x size` block.
    pub fn max_abs_diff_on_block(&self, other: &Self, size: usize) -> f64 {
        max_abs(&(self.leading_block(size) - other.leading_block(size)))
    }

    pub fn apply(&self, state: &FockVector) -> Result<FockVector> {
        let padded = state.padded(self.dim())?;
        let v = &self.entries * DVector::from_column_slice(&padded.coeffs);
        Ok(FockVector { coeffs: v.iter().copied().collect() })
    }

    /// `<state| M |state>`. The state must be supported inside the block on
    /// which `M` is exact.
    pub fn expectation(&self, state: &FockVector) -> Result<Complex64> {
        let support = state.support();
        if support > self.exact_rows {
            return Err(Error::InvalidDimension(format!(
                "state occupies {support} levels but the operator is exact on only {}",
                self.exact_rows
            )));
        }
        let image = self.apply(state)?;
        Ok(state.inner(&image))
    }

    fn binary_shape_check(&self, other: &Self, op: &str) {
        assert_eq!(
            self.dim(),
            other.dim(),
            "dimension mismatch in operator {op}: {} vs {}",
            self.dim(),
            other.dim()
        );
    }
}

impl Add for &FockOperator {
    type Output = FockOperator;

    fn add(self, rhs: &FockOperator) -> FockOperator {
        self.binary_shape_check(rhs, "sum");
        FockOperator {
            entries: &self.entries + &rhs.entries,
            exact_rows: self.exact_rows.min(rhs.exact_rows),
            bandwidth: self.bandwidth.max(rhs.bandwidth),
        }
    }
}

impl Sub for &FockOperator {
    type Output = FockOperator;

    fn sub(self, rhs: &FockOperator) -> FockOperator {
        self.binary_shape_check(rhs, "difference");
        FockOperator {
            entries: &self.entries - &rhs.entries,
            exact_rows: self.exact_rows.min(rhs.exact_rows),
            bandwidth: self.bandwidth.max(rhs.bandwidth),
        }
    }
}

impl Mul for &FockOperator {
    type Output = FockOperator;

    fn mul(self, rhs: &FockOperator) -> FockOperator {
        self.binary_shape_check(rhs, "product");
        let dim = self.dim();
        FockOperator {
            entries: &self.entries * &rhs.entries,
            exact_rows: rhs.exact_rows.min(self.exact_rows.saturating_sub(rhs.bandwidth)),
            bandwidth: (self.bandwidth + rhs.bandwidth).min(dim - 1),
        }
    }
}

impl Serialize for FockOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| [self.entries[(i, j)].re, self.entries[(i, j)].im]).collect())
            .collect();
        let mut s = serializer.serialize_struct("FockOperator", 3)?;
        s.serialize_field("dim", &self.dim())?;
        s.serialize_field("exact_rows", &self.exact_rows)?;
        s.serialize_field("entries", &rows)?;
        s.end()
    }
}

/// State vector in the number basis; equivalently the coefficient list of a
/// Hermite-function expansion `f = sum_k c_k h_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    coeffs: Vec<Complex64>,
}

impl FockVector {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidDimension("state vector must have at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidArgument("state coefficients must be finite".into()));
        }
        Ok(Self { coeffs })
    }

    /// The number state `|level>` embedded in `dim` levels.
    pub fn basis(level: usize, dim: usize) -> Result<Self> {
        if level >= dim {
            return Err(Error::InvalidDimension(format!("basis level {level} does not fit in dimension {dim}")));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); dim];
        coeffs[level] = Complex64::new(1.0, 0.0);
        Ok(Self { coeffs })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize the zero vector".into()));
        }
        Ok(Self { coeffs: self.coeffs.iter().map(|c| c / norm).collect() })
    }

    /// Number of leading levels that carry the nonzero coefficients.
    pub fn support(&self) -> usize {
        self.coeffs.iter().rposition(|c| c.norm_sqr() > 0.0).map_or(0, |i| i + 1)
    }

    /// Zero-pads to `dim` levels; fails if nonzero coefficients would be cut.
    pub fn padded(&self, dim: usize) -> Result<Self> {
        if self.support() > dim {
            return Err(Error::InvalidDimension(format!(
                "state occupies {} levels, cannot embed in dimension {dim}",
                self.support()
            )));
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(dim, Complex64::new(0.0, 0.0));
        Ok(Self { coeffs })
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    /// Coefficients of the Fourier-transformed state, using `F h_k = (-i)^k h_k`.
    pub fn fourier_coeffs(&self) -> Vec<Complex64> {
        let mut phase = Complex64::new(1.0, 0.0);
        self.coeffs
            .iter()
            .map(|c| {
                let out = c * phase;
                phase *= -I;
                out
            })
            .collect()
    }
}

fn check_dim(dim: usize, min: usize) -> Result<()> {
    if dim < min {
        return Err(Error::InvalidDimension(format!("dimension {dim} is below the minimum {min}")));
    }
    Ok(())
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Raising and lowering operators `(A_+, A_-)`.
pub fn build_ladder(dim: usize) -> Result<(FockOperator, FockOperator)> {
    check_dim(dim, 2)?;
    let mut raise = DMatrix::zeros(dim, dim);
    for level in 0..dim - 1 {
        raise[(level + 1, level)] = Complex64::new(((level + 1) as f64).sqrt(), 0.0);
    }
    let lower = raise.adjoint();
    Ok((
        FockOperator { entries: raise, exact_rows: dim - 1, bandwidth: 1 },
        FockOperator { entries: lower, exact_rows: dim, bandwidth: 1 },
    ))
}

/// Position and momentum `Q = (A_+ + A_-)/sqrt 2`, `P = i (A_+ - A_-)/sqrt 2`.
pub fn build_qp(dim: usize) -> Result<(FockOperator, FockOperator)> {
    let (raise, lower) = build_ladder(dim)?;
    let q = (&raise + &lower).scale_real(FRAC_1_SQRT_2);
    let p = (&raise - &lower).scale(I * FRAC_1_SQRT_2);
    Ok((q, p))
}

/// Number operator `diag(0, 1, ..., dim-1)`.
pub fn build_number(dim: usize) -> Result<FockOperator> {
    check_dim(dim, 1)?;
    let diag = DVector::from_iterator(dim, (0..dim).map(|k| Complex64::new(k as f64, 0.0)));
    Ok(FockOperator { entries: DMatrix::from_diagonal(&diag), exact_rows: dim, bandwidth: 0 })
}

/// Exact `<n| Q^m |n>`.
///
/// A word of `m` ladder letters started at level `n` stays inside levels
/// `n-m ..= n+m`, so only that window is propagated. Conjugating `A_+ + A_-`
/// by `diag(sqrt(a!))` leaves diagonal elements alone and turns the step
/// weights into integers (`a+1` up from `a`, `1` down), so the sum is exact
/// in floating point until it passes `2^53`. Odd `m` yields exactly `0.0`.
pub fn q_moment(n: usize, m: usize) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    let lo = n.saturating_sub(m);
    let width = n + m - lo + 1;
    let mut v = vec![0.0; width];
    v[n - lo] = 1.0;
    for _ in 0..m {
        let mut next = vec![0.0; width];
        for (i, &x) in v.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let level = lo + i;
            if i + 1 < width {
                next[i + 1] += (level + 1) as f64 * x;
            }
            if i > 0 {
                next[i - 1] += x;
            }
        }
        v = next;
    }
    v[n - lo] / 2f64.powi((m / 2) as i32)
}

/// `<n| Q^m |n>` evaluated with the full truncated `Q` of dimension `dim`.
pub fn q_moment_at_dim(n: usize, m: usize, dim: usize) -> Result<f64> {
    if dim < n + m + 1 {
        return Err(Error::InvalidDimension(format!(
            "dimension {dim} is below the truncation guard n+m+1 = {}",
            n + m + 1
        )));
    }
    let (q, _) = build_qp(dim)?;
    let mut v = FockVector::basis(n, dim)?;
    for _ in 0..m {
        v = q.apply(&v)?;
    }
    Ok(v.coeffs[n].re)
}
