//! Plot-ready tabular output (CSV and JSON) with locale-free, fixed-precision
//! number formatting. Identical inputs always give identical bytes.

use std::io::{self, Write};

use crate::engine::StepRecord;
use crate::harness::{AggregateCurve, ComparisonTable};

pub const SIGNIFICANT_DIGITS: usize = 12;

pub const TRAJECTORY_COLUMNS: [&str; 7] = ["run_id", "k", "m", "theta", "phi", "delta", "fidelity"];
pub const AGGREGATE_COLUMNS: [&str; 3] = ["k", "mean", "std"];
pub const COMPARISON_COLUMNS: [&str; 5] = ["k", "sqrl_mean", "sqrl_std", "qst_mean", "qst_std"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros removed,
/// exponent notation outside [1e-4, 1e12).
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIGNIFICANT_DIGITS as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_finite() => format_float(*v),
            Cell::Float(_) | Cell::Missing => "null".into(),
        }
    }
}

/// Rows under named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Array of objects, one per row, keys in column order.
    pub fn write_json<W: Write>(&self, w: &mut W) -> io::Result<()> {
        if self.rows.is_empty() {
            return writeln!(w, "[]");
        }
        writeln!(w, "[")?;
        for (i, row) in self.rows.iter().enumerate() {
            let fields: Vec<String> = self
                .columns
                .iter()
                .zip(row)
                .map(|(name, cell)| format!("\"{name}\": {}", cell.json()))
                .collect();
            let sep = if i + 1 == self.rows.len() { "" } else { "," };
            writeln!(w, "  {{{}}}{sep}", fields.join(", "))?;
        }
        writeln!(w, "]")
    }

    pub fn write<W: Write>(&self, format: Format, w: &mut W) -> io::Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        }
    }

    pub fn to_string(&self, format: Format) -> String {
        let mut buf = Vec::new();
        self.write(format, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// One trajectory row per step record; angles are blank when no angles were drawn.
pub fn trajectory_table<'a>(runs: impl IntoIterator<Item = (usize, &'a [StepRecord])>) -> Table {
    let rows = runs
        .into_iter()
        .flat_map(|(run_id, records)| {
            records.iter().map(move |r| {
                vec![
                    Cell::Int(run_id as u64),
                    Cell::Int(r.k as u64),
                    Cell::Int(u64::from(r.outcome.bit())),
                    r.sampled_theta.map_or(Cell::Missing, Cell::Float),
                    r.sampled_phi.map_or(Cell::Missing, Cell::Float),
                    Cell::Float(r.delta_after),
                    Cell::Float(r.fidelity),
                ]
            })
        })
        .collect();
    Table {
        columns: TRAJECTORY_COLUMNS.to_vec(),
        rows,
    }
}

pub fn aggregate_table(curve: &AggregateCurve) -> Table {
    let rows = curve
        .mean
        .iter()
        .zip(&curve.std)
        .enumerate()
        .map(|(i, (&m, &s))| vec![Cell::Int(i as u64 + 1), Cell::Float(m), Cell::Float(s)])
        .collect();
    Table {
        columns: AGGREGATE_COLUMNS.to_vec(),
        rows,
    }
}

pub fn comparison_table(table: &ComparisonTable) -> Table {
    let rows = table
        .rows
        .iter()
        .map(|r| {
            vec![
                Cell::Int(r.k as u64),
                Cell::Float(r.sqrl_mean),
                Cell::Float(r.sqrl_std),
                Cell::Float(r.qst_mean),
                Cell::Float(r.qst_std),
            ]
        })
        .collect();
    Table {
        columns: COMPARISON_COLUMNS.to_vec(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Outcome;
    use proptest::prelude::*;

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(1.0), "1");
        assert_eq!(format_float(0.5), "0.5");
        assert_eq!(format_float(std::f64::consts::PI), "3.14159265359");
        assert_eq!(format_float(-std::f64::consts::TAU), "-6.28318530718");
        assert_eq!(format_float(1e-7), "1e-07");
        assert_eq!(format_float(1.5e-5), "1.5e-05");
        assert_eq!(format_float(0.0001234), "0.0001234");
        assert_eq!(format_float(123456789012.0), "123456789012");
        assert_eq!(format_float(1234567890123.0), "1.23456789012e+12");
        assert_eq!(format_float(0.9999999999999), "1");
    }

    proptest! {
        #[test]
        fn formatting_keeps_twelve_digits(x in -1e6..1e6f64) {
            let back: f64 = format_float(x).parse().unwrap();
            prop_assert!((back - x).abs() <= x.abs() * 1e-11 + 1e-300);
        }
    }

    fn records() -> Vec<StepRecord> {
        vec![
            StepRecord {
                k: 1,
                outcome: Outcome::Punishment,
                sampled_theta: Some(0.25),
                sampled_phi: Some(-1.0),
                delta_after: std::f64::consts::TAU,
                fidelity: 0.75,
            },
            StepRecord {
                k: 2,
                outcome: Outcome::Reward,
                sampled_theta: None,
                sampled_phi: None,
                delta_after: std::f64::consts::PI,
                fidelity: 0.75,
            },
        ]
    }

    #[test]
    fn trajectory_csv_layout() {
        let recs = records();
        let csv = trajectory_table([(0, recs.as_slice())]).to_string(Format::Csv);
        assert_eq!(
            csv,
            "run_id,k,m,theta,phi,delta,fidelity\n\
             0,1,1,0.25,-1,6.28318530718,0.75\n\
             0,2,0,,,3.14159265359,0.75\n"
        );
        assert_eq!(csv, trajectory_table([(0, recs.as_slice())]).to_string(Format::Csv));
    }

    #[test]
    fn trajectory_json_mirrors_csv() {
        let recs = records();
        let json = trajectory_table([(3, recs.as_slice())]).to_string(Format::Json);
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        let rows = parsed.as_array().unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0]["run_id"], 3);
        assert_eq!(rows[0]["theta"], 0.25);
        assert!(rows[1]["theta"].is_null());
        for key in TRAJECTORY_COLUMNS {
            assert!(rows[0].get(key).is_some());
        }
    }

    #[test]
    fn aggregate_layout() {
        let curve = AggregateCurve {
            mean: vec![0.5, 0.75],
            std: vec![0.1, 0.0],
            n_runs: 2,
        };
        assert_eq!(aggregate_table(&curve).to_string(Format::Csv), "k,mean,std\n1,0.5,0.1\n2,0.75,0\n");
    }
}
