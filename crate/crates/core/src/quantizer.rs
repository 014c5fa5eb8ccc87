//! Operator integrals of polynomial functions of the margins: `h(x)`,
//! `h1(x) + i h2(y)` and `h1(x) + h2(y)` for number-state kernels.

use std::fmt;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fock_space::{build_qp, FockOperator};
use crate::moment_engine::{moment_polynomial, number_kernel, operator_polynomial};

/// `sum_l coeffs[l] t^l` with a nonzero leading coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

impl RealPolynomial {
    /// Trailing zeros are dropped; all-zero input is rejected.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("polynomial coefficients must be finite".into()));
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("the zero polynomial has no degree".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn monomial(degree: usize, coeff: f64) -> Result<Self> {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[degree] = coeff;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.degree()]
    }

    /// `alpha * self + beta * other`; fails if everything cancels.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        let len = self.coeffs.len().max(other.coeffs.len());
        let at = |p: &Self, i: usize| p.coeffs.get(i).copied().unwrap_or(0.0);
        Self::new((0..len).map(|i| alpha * at(self, i) + beta * at(other, i)).collect())
    }
}

/// Symbolic domain `D(Q^q) ∩ D(P^p)`; a zero power is the whole space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainTag {
    pub q_power: usize,
    pub p_power: usize,
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let part = |name: &str, power: usize| match power {
            0 => None,
            1 => Some(format!("D({name})")),
            k => Some(format!("D({name}^{k})")),
        };
        let parts: Vec<String> = [part("Q", self.q_power), part("P", self.p_power)].into_iter().flatten().collect();
        if parts.is_empty() {
            f.write_str("H")
        } else {
            f.write_str(&parts.join(" ∩ "))
        }
    }
}

impl Serialize for DomainTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A quantized operator with its domain tag and kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantized {
    pub operator: FockOperator,
    pub domain_tag: DomainTag,
    pub kernel: String,
}

/// `sum_l a_l p_l(X)` with `p_0 = 1`, `X` being `Q` or `P`.
fn moment_combination(h: &RealPolynomial, n: usize, x: &FockOperator) -> Result<FockOperator> {
    // collapse sum_l a_l p_l(t) into one polynomial in t, then evaluate once
    let mut total = vec![0.0; h.degree() + 1];
    total[0] = h.coeffs[0];
    for (l, &a) in h.coeffs.iter().enumerate().skip(1) {
        if a == 0.0 {
            continue;
        }
        for (i, c) in moment_polynomial(n, l)?.coeffs.iter().enumerate() {
            total[i] += a * c;
        }
    }
    Ok(operator_polynomial(&total, x))
}

fn check_degree(h: &RealPolynomial, name: &str) -> Result<()> {
    if h.degree() == 0 {
        return Err(Error::InvalidArgument(format!("{name} must have degree at least 1")));
    }
    if h.degree() > crate::moment_engine::MAX_MOMENT_ORDER {
        return Err(Error::InvalidArgument(format!(
            "{name} has degree {}, above the supported {}",
            h.degree(),
            crate::moment_engine::MAX_MOMENT_ORDER
        )));
    }
    Ok(())
}

fn qp_for(dim: usize, degree: usize) -> Result<(FockOperator, FockOperator)> {
    if dim <= degree {
        return Err(Error::InvalidDimension(format!(
            "dimension {dim} leaves no exact rows for degree {degree}; need dim > {degree}"
        )));
    }
    build_qp(dim)
}

/// `sum_l a_l p_l(Q)`.
pub fn quantize_x(h: &RealPolynomial, n: usize, dim: usize) -> Result<Quantized> {
    check_degree(h, "h")?;
    let (q, _) = qp_for(dim, h.degree())?;
    Ok(Quantized {
        operator: moment_combination(h, n, &q)?.hermitian_part(),
        domain_tag: DomainTag { q_power: h.degree(), p_power: 0 },
        kernel: number_kernel(n),
    })
}

/// `sum_l a1_l p_l(Q) + i sum_l a2_l p_l(P)`.
pub fn quantize_complex(h1: &RealPolynomial, h2: &RealPolynomial, n: usize, dim: usize) -> Result<Quantized> {
    check_degree(h1, "h1")?;
    check_degree(h2, "h2")?;
    let (q, p) = qp_for(dim, h1.degree().max(h2.degree()))?;
    let real = moment_combination(h1, n, &q)?.hermitian_part();
    let imag = moment_combination(h2, n, &p)?.hermitian_part();
    Ok(Quantized {
        operator: &real + &imag.scale(Complex64::new(0.0, 1.0)),
        domain_tag: DomainTag { q_power: h1.degree(), p_power: h2.degree() },
        kernel: number_kernel(n),
    })
}

/// `sum_l a1_l p_l(Q) + sum_l a2_l p_l(P)`, defined for even degrees with
/// positive leading coefficients only.
pub fn quantize_sum(h1: &RealPolynomial, h2: &RealPolynomial, n: usize, dim: usize) -> Result<Quantized> {
    for (h, name) in [(h1, "h1"), (h2, "h2")] {
        if h.degree() == 0 || h.degree() % 2 == 1 || h.leading() <= 0.0 {
            return Err(Error::PreconditionViolated(format!(
                "{name} has degree {} and leading coefficient {}; the sum rule needs an even degree >= 2 \
                 and a positive leading coefficient",
                h.degree(),
                h.leading()
            )));
        }
    }
    check_degree(h1, "h1")?;
    check_degree(h2, "h2")?;
    let (q, p) = qp_for(dim, h1.degree().max(h2.degree()))?;
    let sum = &moment_combination(h1, n, &q)? + &moment_combination(h2, n, &p)?;
    Ok(Quantized {
        operator: sum.hermitian_part(),
        domain_tag: DomainTag { q_power: h1.degree(), p_power: h2.degree() },
        kernel: number_kernel(n),
    })
}
