//! Trajectory export.

use std::io::Write;

use covham::dynamics::Trajectory;
use serde::Serialize;

use crate::exit::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::input(format!("cannot write output: {e}"))
}

/// 17 significant digits, enough to round-trip any double.
pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header `t,<coords>,w,H[,<observables>]`, one row per sample.
pub fn write_csv<W: Write>(traj: &Trajectory, coords: &[String], out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(coords.iter().cloned());
    header.push("w".into());
    header.push("H".into());
    header.extend(traj.observable_names.iter().cloned());
    w.write_record(&header).map_err(io)?;
    for s in &traj.samples {
        let row = std::iter::once(s.t)
            .chain(s.x.iter().copied())
            .chain([s.w, s.h])
            .chain(s.observables.iter().copied())
            .map(number);
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Serialize)]
struct Record<'a> {
    t: f64,
    x: &'a [f64],
    w: f64,
    #[serde(rename = "H")]
    h: f64,
    observables: serde_json::Map<String, serde_json::Value>,
}

pub fn write_json<W: Write>(traj: &Trajectory, out: W) -> Result<(), CliError> {
    let records: Vec<Record> = traj
        .samples
        .iter()
        .map(|s| Record {
            t: s.t,
            x: &s.x,
            w: s.w,
            h: s.h,
            observables: traj
                .observable_names
                .iter()
                .cloned()
                .zip(s.observables.iter().map(|&v| serde_json::json!(v)))
                .collect(),
        })
        .collect();
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, &records).map_err(io)?;
    out.write_all(b"\n").map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use covham::dynamics::Sample;

    fn traj() -> Trajectory {
        Trajectory {
            observable_names: vec!["q^2+p^2".into()],
            dt: 0.5,
            samples: vec![
                Sample {
                    t: 0.0,
                    x: vec![1.0, 0.0],
                    w: 0.0,
                    h: 0.5,
                    observables: vec![1.0],
                },
                Sample {
                    t: 0.5,
                    x: vec![0.1, -0.3],
                    w: 0.25,
                    h: 0.05,
                    observables: vec![0.1],
                },
            ],
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&traj(), &["q".into(), "p".into()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,q,p,w,H,q^2+p^2");
        assert!(!text.contains('\r'));
        assert!(lines.iter().all(|l| l.split(',').count() == 6 && !l.ends_with(',')));
        assert_eq!(lines[2].split(',').nth(1).unwrap().parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn json_records() {
        let mut buf = Vec::new();
        write_json(&traj(), &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v[1]["x"][1], -0.3);
        assert_eq!(v[0]["observables"]["q^2+p^2"], 1.0);
    }

    #[test]
    fn number_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456.789] {
            assert_eq!(number(v).parse::<f64>().unwrap(), v);
        }
    }
}
