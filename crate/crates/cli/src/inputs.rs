use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use phq_core::fock_space::FockVector;
use phq_core::hermite_quad::Grid1D;
use phq_core::quantizer::RealPolynomial;
use phq_core::weights::WeightSequence;
use serde::Deserialize;

use crate::{Failure, GridArgs, KernelArgs};

pub const HALFWIDTH_VAR: &str = "PHQ_GRID_HALFWIDTH";
pub const POINTS_VAR: &str = "PHQ_GRID_POINTS";

/// One coefficient in a state file: a real number or an `[re, im]` pair.
#[derive(Deserialize)]
#[serde(untagged)]
enum Coeff {
    Real(f64),
    Pair([f64; 2]),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StateFile {
    Bare(Vec<Coeff>),
    Wrapped { coeffs: Vec<Coeff> },
}

/// `basis:n` or `coeffs:FILE.json`.
pub fn parse_state(spec: &str) -> Result<FockVector, Failure> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| Failure::Usage(format!("state must be basis:n or coeffs:FILE, got {spec:?}")))?;
    match kind {
        "basis" => {
            let n: usize = rest.trim().parse().map_err(|_| Failure::Usage(format!("bad basis level {rest:?}")))?;
            Ok(FockVector::basis(n, n + 1)?)
        }
        "coeffs" => {
            let text = fs::read_to_string(rest).map_err(|e| Failure::Usage(format!("cannot read state file {rest}: {e}")))?;
            let parsed: StateFile = serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("state file {rest} is not a coefficient list: {e}")))?;
            let coeffs = match parsed {
                StateFile::Bare(c) | StateFile::Wrapped { coeffs: c } => c,
            };
            let coeffs = coeffs
                .into_iter()
                .map(|c| match c {
                    Coeff::Real(re) => Complex64::new(re, 0.0),
                    Coeff::Pair([re, im]) => Complex64::new(re, im),
                })
                .collect();
            FockVector::new(coeffs).map_err(|e| Failure::Usage(format!("state file {rest}: {e}")))
        }
        other => Err(Failure::Usage(format!("unknown state kind {other:?}; use basis:n or coeffs:FILE"))),
    }
}

pub fn parse_kernel(k: &KernelArgs) -> Result<WeightSequence, Failure> {
    match (k.n, &k.weights) {
        (Some(n), None) => Ok(WeightSequence::delta(n)),
        (None, Some(spec)) => Ok(spec.parse()?),
        _ => Err(Failure::Usage("give exactly one of --n and --weights".into())),
    }
}

fn env_value<T: std::str::FromStr>(var: &str) -> Result<Option<T>, Failure> {
    match std::env::var(var) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| Failure::Usage(format!("{var}={v:?} is not valid"))),
        Err(_) => Ok(None),
    }
}

/// Symmetric grid from flags, then the environment, then the defaults.
pub fn resolve_grid(args: &GridArgs, halfwidth: f64, points: usize) -> Result<Grid1D, Failure> {
    let halfwidth = match args.halfwidth {
        Some(h) => h,
        None => env_value(HALFWIDTH_VAR)?.unwrap_or(halfwidth),
    };
    let points = match args.points {
        Some(p) => p,
        None => env_value(POINTS_VAR)?.unwrap_or(points),
    };
    Grid1D::symmetric(halfwidth, points).map_err(|e| Failure::Usage(format!("bad grid: {e}")))
}

/// Comma-separated ascending coefficients.
pub fn parse_polynomial(s: &str) -> Result<RealPolynomial, Failure> {
    let coeffs = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("bad polynomial coefficient {c:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RealPolynomial::new(coeffs)?)
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| Failure::Usage(format!("cannot write stdout: {e}")))
        }
    }
}
