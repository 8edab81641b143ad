//! The observable time series as CSV: one row per sample, floats printed
//! with 17 significant digits so a read-back reproduces the bits.

use std::path::Path;

use crate::exponents::{format_rational, Exponent};
use crate::observables::ObservableSample;

use super::RunError;

const FIXED_COLUMNS: [&str; 9] =
    ["t", "mass", "kinetic", "G", "energy", "variance", "weighted_norm_sq", "pc_quantity", "h1_norm"];

/// Column name of the `L^q` norm: `lq_4`, `lq_10/3`, `lq_inf`.
pub fn lq_column(q: &Exponent) -> String {
    match q {
        Exponent::Finite(r) if r.is_integer() => format!("lq_{}", r.numer()),
        Exponent::Finite(r) => format!("lq_{}", format_rational(r)),
        Exponent::Infinite => "lq_inf".to_string(),
    }
}

pub fn header(q_list: &[Exponent]) -> Vec<String> {
    FIXED_COLUMNS.iter().map(|c| c.to_string()).chain(q_list.iter().map(lq_column)).collect()
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `samples` under the header for `q_list`.
pub fn write_series(path: &Path, q_list: &[Exponent], samples: &[ObservableSample]) -> Result<(), RunError> {
    let io = |e: csv::Error| RunError::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header(q_list)).map_err(io)?;
    for s in samples {
        let mut row = vec![
            fmt(s.t),
            fmt(s.mass),
            fmt(s.kinetic),
            fmt(s.g),
            fmt(s.energy),
            fmt(s.variance),
            fmt(s.weighted_norm_sq),
            fmt(s.pc_quantity),
            fmt(s.h1_norm),
        ];
        for q in q_list {
            row.push(fmt(s.lq(q).unwrap_or(f64::NAN)));
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

/// Reads a series written by [`write_series`], checking the header.
pub fn read_series(path: &Path) -> Result<(Vec<Exponent>, Vec<ObservableSample>), RunError> {
    let schema = |msg: String| RunError::Schema { path: path.to_path_buf(), message: msg };
    let mut r = csv::Reader::from_path(path).map_err(|e| RunError::io(path, e.into()))?;
    let head: Vec<String> = r.headers().map_err(|e| schema(e.to_string()))?.iter().map(str::to_string).collect();
    if head.len() < FIXED_COLUMNS.len() || head.iter().zip(FIXED_COLUMNS).any(|(h, c)| h != c) {
        return Err(schema(format!("header must start with {}", FIXED_COLUMNS.join(","))));
    }
    let mut q_list = Vec::new();
    for name in &head[FIXED_COLUMNS.len()..] {
        let q = name
            .strip_prefix("lq_")
            .and_then(|q| q.parse::<Exponent>().ok())
            .ok_or_else(|| schema(format!("unexpected column {name:?}")))?;
        q_list.push(q);
    }
    let mut samples = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| schema(e.to_string()))?;
        let values = record
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| schema(format!("row {}: {e}", line + 2)))?;
        if values.len() != head.len() {
            return Err(schema(format!("row {} has {} fields, header has {}", line + 2, values.len(), head.len())));
        }
        let lq_norms = q_list.iter().cloned().zip(values[FIXED_COLUMNS.len()..].iter().copied()).collect();
        samples.push(ObservableSample {
            t: values[0],
            mass: values[1],
            kinetic: values[2],
            g: values[3],
            energy: values[4],
            variance: values[5],
            weighted_norm_sq: values[6],
            pc_quantity: values[7],
            h1_norm: values[8],
            lq_norms,
        });
    }
    Ok((q_list, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::ratio;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        let q_list = vec![Exponent::from_int(2), Exponent::Finite(ratio(10, 3)), Exponent::Infinite];
        let samples: Vec<_> = (0..5)
            .map(|i| {
                let t = i as f64 * 0.1;
                ObservableSample {
                    t,
                    mass: 1.0 / 3.0,
                    kinetic: std::f64::consts::PI * t,
                    g: 1e-300,
                    energy: -0.1,
                    variance: t.exp(),
                    weighted_norm_sq: 2.0,
                    pc_quantity: 2.5,
                    lq_norms: q_list.iter().map(|q| (q.clone(), 0.7 + t)).collect(),
                    h1_norm: 1.1,
                }
            })
            .collect();
        write_series(&path, &q_list, &samples).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(
            "t,mass,kinetic,G,energy,variance,weighted_norm_sq,pc_quantity,h1_norm,lq_2,lq_10/3,lq_inf\n"
        ));
        let (q_back, back) = read_series(&path).unwrap();
        assert_eq!(q_back, q_list);
        assert_eq!(back, samples);
    }

    #[test]
    fn wrong_header_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,mass,energy\n0,1,2\n").unwrap();
        assert!(matches!(read_series(&path), Err(RunError::Schema { .. })));
        std::fs::write(&path, format!("{},lq_x\n", FIXED_COLUMNS.join(","))).unwrap();
        assert!(matches!(read_series(&path), Err(RunError::Schema { .. })));
    }
}
