//! Series CSV and verdict text formats.
//!
//! Floats are written with 17 significant digits so a series read back is
//! bit-identical to the one written.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::functionals::DiagnosticsRecord;
use crate::verification::EstimateVerdict;

const NCOL: usize = DiagnosticsRecord::COLUMNS.len();

pub fn write_series(w: impl Write, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(DiagnosticsRecord::COLUMNS).map_err(csv_error)?;
    for r in records {
        out.write_record(r.to_row().iter().map(|v| format!("{v:.16e}")))
            .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::SeriesFormat {
            line,
            message: format!("{other:?}"),
        },
    }
}

pub fn read_series(r: impl Read) -> Result<Vec<DiagnosticsRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = reader.headers().map_err(csv_error)?.clone();
    if header.iter().ne(DiagnosticsRecord::COLUMNS) {
        return Err(Error::SeriesFormat {
            line: 1,
            message: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_error)?;
        let lineno = rec.position().map_or(0, |p| p.line() as usize);
        let mut row = [0.0; NCOL];
        for (slot, (text, name)) in row.iter_mut().zip(rec.iter().zip(DiagnosticsRecord::COLUMNS)) {
            *slot = text.trim().parse().map_err(|_| Error::SeriesFormat {
                line: lineno,
                message: format!("column `{name}`: cannot parse `{text}`"),
            })?;
        }
        out.push(DiagnosticsRecord::from_row(&row));
    }
    if out.is_empty() {
        return Err(Error::SeriesFormat {
            line: 1,
            message: "no records".into(),
        });
    }
    if out.windows(2).any(|w| w[1].t.partial_cmp(&w[0].t) != Some(std::cmp::Ordering::Greater)) {
        return Err(Error::SeriesFormat {
            line: 0,
            message: "record times are not strictly increasing".into(),
        });
    }
    Ok(out)
}

/// `name,applicable,holds,worst_margin,tolerance`; `holds` is
/// `not_asserted` for inapplicable checks.
pub fn verdict_line(v: &EstimateVerdict) -> String {
    let holds = if v.applicable {
        v.holds.to_string()
    } else {
        "not_asserted".to_string()
    };
    format!(
        "{},{},{},{:.16e},{:.16e}",
        // + 0.0 turns a negative zero into a plain zero
        v.name, v.applicable, holds, v.worst_margin + 0.0, v.tolerance
    )
}

pub fn write_verdicts(mut w: impl Write, verdicts: &[EstimateVerdict]) -> Result<()> {
    for v in verdicts {
        writeln!(w, "{}", verdict_line(v))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64) -> DiagnosticsRecord {
        let mut row = [0.0; NCOL];
        for (i, v) in row.iter_mut().enumerate() {
            *v = (i as f64 + 1.0) / 3.0 * (1.0 + t);
        }
        row[0] = t;
        row[5] = f64::MIN_POSITIVE;
        row[6] = -1.0 / 7.0;
        DiagnosticsRecord::from_row(&row)
    }

    #[test]
    fn series_round_trip_is_exact() {
        let recs = vec![rec(0.0), rec(0.1), rec(1.0 / 3.0)];
        let mut buf = Vec::new();
        write_series(&mut buf, &recs).unwrap();
        let back = read_series(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,min_val,max_val,mass,"));
        assert_eq!(text.lines().next().unwrap().split(',').count(), NCOL);
    }

    #[test]
    fn malformed_series_is_rejected() {
        assert!(read_series("".as_bytes()).is_err());
        assert!(read_series("a,b\n1,2\n".as_bytes()).is_err());
        let mut buf = Vec::new();
        write_series(&mut buf, &[rec(0.0)]).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        text.push_str("1.0,2.0\n");
        match read_series(text.as_bytes()) {
            Err(Error::SeriesFormat { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let mut buf = Vec::new();
        write_series(&mut buf, &[rec(1.0), rec(0.5)]).unwrap();
        assert!(read_series(buf.as_slice()).is_err());
    }

    #[test]
    fn verdict_lines() {
        let v = EstimateVerdict {
            name: "energy".into(),
            holds: true,
            worst_margin: 0.5,
            tolerance: 1e-4,
            applicable: true,
        };
        assert_eq!(verdict_line(&v), "energy,true,true,5.0000000000000000e-1,1.0000000000000000e-4");
        let n = EstimateVerdict { applicable: false, holds: false, ..v };
        assert!(verdict_line(&n).starts_with("energy,false,not_asserted,"));
    }
}
