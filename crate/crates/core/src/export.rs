//! JSON, CSV and binary writers with fixed, byte-reproducible float formatting.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::hermite_quad::Grid1D;
use crate::phase_density::{GriddedDensity, MarginalDensity};

/// Seventeen significant digits in scientific notation; round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Compact JSON whose floats are always written by [`fmt_f64`].
struct FixedDigits;

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Serialization(e.to_string())
}

pub fn write_json<T: Serialize + ?Sized, W: Write>(writer: W, value: &T) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, FixedDigits);
    value.serialize(&mut ser).map_err(io_err)?;
    ser.into_inner().write_all(b"\n").map_err(io_err)
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    write_json(&mut buf, value)?;
    String::from_utf8(buf).map_err(io_err)
}

fn csv_rows<W: Write, const N: usize>(
    writer: W,
    header: [&str; N],
    rows: impl Iterator<Item = [f64; N]>,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(header).map_err(io_err)?;
    for row in rows {
        out.write_record(row.map(fmt_f64)).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Columns `point, re, im`.
pub fn write_sampled_csv<W: Write>(writer: W, grid: &Grid1D, values: &[Complex64]) -> Result<()> {
    if values.len() != grid.count() {
        return Err(Error::InvalidArgument(format!(
            "{} samples for a grid of {} points",
            values.len(),
            grid.count()
        )));
    }
    csv_rows(writer, ["point", "re", "im"], grid.points().zip(values).map(|(x, v)| [x, v.re, v.im]))
}

/// Columns `point, value`.
pub fn write_marginal_csv<W: Write>(writer: W, margin: &MarginalDensity) -> Result<()> {
    csv_rows(writer, ["point", "value"], margin.grid.points().zip(&margin.values).map(|(x, v)| [x, *v]))
}

/// Columns `q, p, value`, `q` outermost.
pub fn write_density_csv<W: Write>(writer: W, dens: &GriddedDensity) -> Result<()> {
    let np = dens.p_grid.count();
    let rows = dens
        .values
        .iter()
        .enumerate()
        .map(|(idx, v)| [dens.q_grid.point(idx / np), dens.p_grid.point(idx % np), *v]);
    csv_rows(writer, ["q", "p", "value"], rows)
}

/// Row-major little-endian `f64`, `q` outermost, no header.
pub fn write_density_binary<W: Write>(mut writer: W, dens: &GriddedDensity) -> Result<()> {
    for v in &dens.values {
        writer.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    writer.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_space::FockVector;
    use crate::phase_density::{density, x_margin};
    use crate::weights::WeightSequence;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 3.5, -2.0e-300, 1.7976931348623157e308, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(3.5), "3.5000000000000000e0");
    }

    #[test]
    fn json_is_fixed_and_parseable() {
        #[derive(Serialize)]
        struct Row {
            name: &'static str,
            coeffs: Vec<f64>,
            k: usize,
        }
        let row = Row { name: "a", coeffs: vec![3.5, 0.0, 1.0], k: 2 };
        let s = to_json_string(&row).unwrap();
        assert_eq!(s, "{\"name\":\"a\",\"coeffs\":[3.5000000000000000e0,0.0000000000000000e0,1.0000000000000000e0],\"k\":2}\n");
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["coeffs"][0], 3.5);
        assert_eq!(to_json_string(&row).unwrap(), s);
    }

    #[test]
    fn csv_layouts() {
        let vac = FockVector::basis(0, 1).unwrap();
        let grid = Grid1D::symmetric(4.0, 8).unwrap();
        let margin = x_margin(&vac, 0, &grid).unwrap();
        let mut buf = Vec::new();
        write_marginal_csv(&mut buf, &margin).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "point,value");
        assert_eq!(lines.len(), 9);
        assert!(lines[1].starts_with("-4.0000000000000000e0,"));

        let dens = density(&vac, &WeightSequence::delta(0), &grid, &Grid1D::symmetric(4.0, 4).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_density_csv(&mut buf, &dens).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("q,p,value"));
        assert_eq!(text.lines().count(), 1 + 8 * 4);

        let mut bin = Vec::new();
        write_density_binary(&mut bin, &dens).unwrap();
        assert_eq!(bin.len(), 8 * 4 * 8);
        let first = f64::from_le_bytes(bin[..8].try_into().unwrap());
        assert_eq!(first, dens.values[0]);

        let mut buf = Vec::new();
        let vals = vec![Complex64::new(1.0, -1.0); 8];
        write_sampled_csv(&mut buf, &grid, &vals).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("point,re,im\n"));
        assert!(write_sampled_csv(Vec::new(), &grid, &vals[..3]).is_err());
    }
}
