//! Mixture weights `w_n` of diagonal kernels `T = sum_n w_n |n><n|`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Tail mass allowed when an infinite family is cut to a finite list.
pub const DEFAULT_TAIL_MASS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSequence {
    /// Finite list of `(level, weight)` pairs.
    Explicit { terms: Vec<(usize, f64)> },
    /// `w_n = (1 - r) r^n` for `n >= 0`.
    Geometric { ratio: f64 },
    /// `w_n = n^(-alpha) / zeta(alpha)` for `n >= 1`, `w_0 = 0`.
    PowerLaw { exponent: f64 },
}

/// A finite cut of a weight sequence together with the mass it dropped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedWeights {
    pub terms: Vec<(usize, f64)>,
    pub tail_mass: f64,
}

impl TruncatedWeights {
    pub fn max_level(&self) -> usize {
        self.terms.iter().map(|&(n, _)| n).max().unwrap_or(0)
    }
}

impl WeightSequence {
    pub fn explicit(terms: Vec<(usize, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidWeights("explicit weight list is empty".into()));
        }
        if let Some(&(n, w)) = terms.iter().find(|(_, w)| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights(format!("weight w_{n} = {w} is negative or not finite")));
        }
        let total: f64 = terms.iter().map(|&(_, w)| w).sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, above 1")));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(&(n, _)) = terms.iter().find(|(n, _)| !seen.insert(*n)) {
            return Err(Error::InvalidWeights(format!("level {n} listed twice")));
        }
        Ok(Self::Explicit { terms })
    }

    /// Weights `w_0, w_1, ...` listed densely.
    pub fn from_dense(weights: &[f64]) -> Result<Self> {
        Self::explicit(weights.iter().copied().enumerate().collect())
    }

    /// The single number state `|level>`.
    pub fn delta(level: usize) -> Self {
        Self::Explicit { terms: vec![(level, 1.0)] }
    }

    pub fn geometric(ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidWeights(format!("geometric ratio must lie in (0, 1), got {ratio}")));
        }
        Ok(Self::Geometric { ratio })
    }

    pub fn power_law(exponent: f64) -> Result<Self> {
        if !(exponent > 1.0 && exponent.is_finite()) {
            return Err(Error::InvalidWeights(format!("power-law exponent must exceed 1, got {exponent}")));
        }
        Ok(Self::PowerLaw { exponent })
    }

    pub fn weight(&self, n: usize) -> f64 {
        match self {
            Self::Explicit { terms } => terms.iter().filter(|&&(m, _)| m == n).map(|&(_, w)| w).sum(),
            Self::Geometric { ratio } => (1.0 - ratio) * ratio.powi(n as i32),
            Self::PowerLaw { exponent } => {
                if n == 0 {
                    0.0
                } else {
                    (n as f64).powf(-exponent) / zeta(*exponent)
                }
            }
        }
    }

    /// Whether `sum_n n^k w_n` converges. Decided per family, never from
    /// partial sums.
    pub fn nseries_converges(&self, k: usize) -> bool {
        match self {
            Self::Explicit { .. } | Self::Geometric { .. } => true,
            Self::PowerLaw { exponent } => (k as f64) < exponent - 1.0,
        }
    }

    /// Whether every `s_kl = binom(k,l) sum_n w_n <n|Q^(k-l)|n>` is finite.
    /// `<n|Q^(2j)|n>` grows like `n^j`, so power laws need `alpha > floor(k/2) + 1`.
    pub fn s_series_converge(&self, k: usize) -> bool {
        match self {
            Self::Explicit { .. } | Self::Geometric { .. } => true,
            Self::PowerLaw { exponent } => ((k / 2) as f64) < exponent - 1.0,
        }
    }

    /// Cuts the sequence so the omitted mass is at most `tail_mass`; fails if
    /// that needs more than `max_levels` levels.
    pub fn truncate(&self, tail_mass: f64, max_levels: usize) -> Result<TruncatedWeights> {
        match self {
            Self::Explicit { terms } => {
                if let Some(&(n, _)) = terms.iter().find(|&&(n, _)| n >= max_levels) {
                    return Err(Error::InvalidWeights(format!("level {n} exceeds the supported {max_levels} levels")));
                }
                let mut terms = terms.clone();
                terms.sort_by_key(|&(n, _)| n);
                Ok(TruncatedWeights { terms, tail_mass: 0.0 })
            }
            Self::Geometric { ratio } => {
                // mass beyond levels 0..len is ratio^len
                let len = (tail_mass.ln() / ratio.ln()).ceil().max(1.0) as usize;
                if len > max_levels {
                    return Err(Error::InvalidWeights(format!(
                        "geometric({ratio}) needs {len} levels for tail mass {tail_mass}, limit is {max_levels}"
                    )));
                }
                let terms = (0..len).map(|n| (n, self.weight(n))).collect();
                Ok(TruncatedWeights { terms, tail_mass: ratio.powi(len as i32) })
            }
            Self::PowerLaw { exponent } => {
                let total = zeta(*exponent);
                let mut last = 1usize;
                while hurwitz_zeta(*exponent, last + 1) / total > tail_mass {
                    last = (last * 2).max(last + 1);
                    if last >= max_levels {
                        return Err(Error::InvalidWeights(format!(
                            "powerlaw({exponent}) needs more than {max_levels} levels for tail mass {tail_mass}"
                        )));
                    }
                }
                // shrink back to the smallest admissible cut
                let (mut lo, mut hi) = (last / 2, last);
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if hurwitz_zeta(*exponent, mid + 1) / total > tail_mass {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let terms = (1..=hi).map(|n| (n, self.weight(n))).collect();
                Ok(TruncatedWeights { terms, tail_mass: hurwitz_zeta(*exponent, hi + 1) / total })
            }
        }
    }
}

impl fmt::Display for WeightSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Explicit { terms } if terms.len() == 1 && terms[0].1 == 1.0 => write!(f, "delta:{}", terms[0].0),
            Self::Explicit { terms } => {
                let dense = terms.iter().enumerate().all(|(i, &(n, _))| i == n);
                if dense {
                    let ws: Vec<String> = terms.iter().map(|&(_, w)| w.to_string()).collect();
                    write!(f, "explicit:{}", ws.join(","))
                } else {
                    let ws: Vec<String> = terms.iter().map(|&(n, w)| format!("{n}={w}")).collect();
                    write!(f, "explicit:{}", ws.join(","))
                }
            }
            Self::Geometric { ratio } => write!(f, "geometric:{ratio}"),
            Self::PowerLaw { exponent } => write!(f, "powerlaw:{exponent}"),
        }
    }
}

/// Parses `delta:n`, `explicit:w0,w1,...` (or `explicit:n=w,...`),
/// `geometric:r` and `powerlaw:alpha`.
impl FromStr for WeightSequence {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("weights spec '{spec}' lacks a 'kind:' prefix")))?;
        let bad = |what: &str| Error::InvalidArgument(format!("cannot parse {what} in weights spec '{spec}'"));
        match kind {
            "delta" => Ok(Self::delta(rest.trim().parse().map_err(|_| bad("level"))?)),
            "explicit" => {
                let mut terms = Vec::new();
                for (i, item) in rest.split(',').enumerate() {
                    let item = item.trim();
                    let term = match item.split_once('=') {
                        Some((n, w)) => (
                            n.trim().parse().map_err(|_| bad("level"))?,
                            w.trim().parse().map_err(|_| bad("weight"))?,
                        ),
                        None => (i, item.parse().map_err(|_| bad("weight"))?),
                    };
                    terms.push(term);
                }
                Self::explicit(terms)
            }
            "geometric" => Self::geometric(rest.trim().parse().map_err(|_| bad("ratio"))?),
            "powerlaw" => Self::power_law(rest.trim().parse().map_err(|_| bad("exponent"))?),
            other => Err(Error::InvalidArgument(format!("unknown weights kind '{other}'"))),
        }
    }
}

// Bernoulli numbers B_2, B_4, ..., B_16.
const BERNOULLI_EVEN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// `zeta(s) = sum_{n>=1} n^(-s)` for real `s > 1`.
pub fn zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1)
}

/// `sum_{n >= start} n^(-s)` for real `s > 1` and `start >= 1`, by direct
/// summation up to a cutoff followed by the Euler–Maclaurin tail.
pub fn hurwitz_zeta(s: f64, start: usize) -> f64 {
    assert!(s > 1.0, "zeta needs s > 1, got {s}");
    assert!(start >= 1, "zeta sum starts at n >= 1");
    let cutoff = start.max(24);
    let head: f64 = (start..cutoff).map(|n| (n as f64).powf(-s)).sum();
    let m = cutoff as f64;
    let mut tail = m.powf(1.0 - s) / (s - 1.0) + 0.5 * m.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2) / (2j)!
    let mut coeff = s / 2.0;
    let mut power = m.powf(-s - 1.0);
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let j = j + 1;
        if j > 1 {
            let a = (2 * j - 3) as f64;
            coeff *= (s + a) * (s + a + 1.0) / ((2 * j - 1) as f64 * (2 * j) as f64);
            power /= m * m;
        }
        tail += b * coeff * power;
    }
    head + tail
}
