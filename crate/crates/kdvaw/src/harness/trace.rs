//! Per-round regret records and their CSV/JSON wire formats.

use std::io::Write;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub y: f64,
    pub hint: f64,
    pub yhat: f64,
    pub inst_loss: f64,
    pub comp_loss: f64,
    pub cum_regret: f64,
}

/// Full prequential record of one run plus its summary statistics.
#[derive(Clone, Debug)]
pub struct RegretTrace {
    pub rows: Vec<TraceRow>,
    pub final_regret: f64,
    pub path_length: f64,
    pub r_f: f64,
    /// Σ (y_t - ỹ_t)²
    pub delta_sq_total: f64,
    /// max_t (y_t - ỹ_t)²
    pub delta_sq_max: f64,
}

impl RegretTrace {
    pub fn horizon(&self) -> u64 {
        self.rows.len() as u64
    }

    /// Column order is part of the wire format:
    /// `t,y,hint,yhat,inst_loss,comp_loss,cum_regret`, with a header row and
    /// 17 significant digits for reals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,y,hint,yhat,inst_loss,comp_loss,cum_regret")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t, r.y, r.hint, r.yhat, r.inst_loss, r.comp_loss, r.cum_regret
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Summary JSON written next to each trace.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunSummary {
    pub final_regret: f64,
    #[serde(rename = "P_T")]
    pub path_length: f64,
    #[serde(rename = "R_f")]
    pub r_f: f64,
    pub delta_sq_total: f64,
    pub delta_sq_max: f64,
    /// feature dimension (largest child dimension for dyadic runs)
    pub m: usize,
    /// meta dimension: ensemble grid size, or child count for dyadic runs
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub seed: u64,
    pub config_hash: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_trace() -> RegretTrace {
        let rows = vec![
            TraceRow {
                t: 1,
                y: 1.0,
                hint: 0.0,
                yhat: 0.5,
                inst_loss: 0.125,
                comp_loss: 0.02,
                cum_regret: 0.105,
            },
            TraceRow {
                t: 2,
                y: -0.5,
                hint: 1.0,
                yhat: 0.25,
                inst_loss: 0.28125,
                comp_loss: 0.0,
                cum_regret: 0.38625,
            },
        ];
        RegretTrace {
            rows,
            final_regret: 0.38625,
            path_length: 0.0,
            r_f: 1.0,
            delta_sq_total: 3.25,
            delta_sq_max: 2.25,
        }
    }

    #[test]
    fn csv_has_header_and_exact_columns() {
        let text = tiny_trace().to_csv_string();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,y,hint,yhat,inst_loss,comp_loss,cum_regret"
        );
        for line in lines {
            assert_eq!(line.split(',').count(), 7);
        }
    }

    #[test]
    fn cumulative_column_is_prefix_sum() {
        let trace = tiny_trace();
        let mut acc = 0.0;
        for r in &trace.rows {
            acc += r.inst_loss - r.comp_loss;
            assert_eq!(acc, r.cum_regret);
        }
        assert_eq!(acc, trace.final_regret);
    }

    #[test]
    fn reals_carry_seventeen_significant_digits() {
        let text = tiny_trace().to_csv_string();
        let row = text.lines().nth(1).unwrap();
        let y_field = row.split(',').nth(1).unwrap();
        assert!(y_field.contains('e'), "scientific notation expected: {y_field}");
        let mantissa = y_field.split('e').next().unwrap();
        let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).count();
        assert_eq!(digits, 17);
    }

    #[test]
    fn summary_json_field_names() {
        let s = RunSummary {
            final_regret: 1.0,
            path_length: 0.5,
            r_f: 1.0,
            delta_sq_total: 2.0,
            delta_sq_max: 0.5,
            m: 4,
            n: 5,
            horizon: 100,
            seed: 7,
            config_hash: "abc".into(),
        };
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        for key in [
            "final_regret",
            "P_T",
            "R_f",
            "delta_sq_total",
            "delta_sq_max",
            "m",
            "N",
            "T",
            "seed",
            "config_hash",
        ] {
            assert!(v.get(key).is_some(), "missing summary key {key}");
        }
    }
}
