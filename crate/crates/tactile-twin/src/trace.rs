use std::path::Path;

use crate::error::{Result, TwinError};
use crate::grip::{GripCommand, GripPhase};
use crate::scenario::{Trace, TraceRow};
use crate::state::{DecodeFlags, DecodedState, RawSample, TactileState};

/// Exact column order of the trace CSV.
pub const TRACE_COLUMNS: [&str; 19] = [
    "t_s",
    "gt_temp_c",
    "gt_fz_n",
    "gt_fx_n",
    "gt_fy_n",
    "current_ua",
    "freq_hz",
    "bx_ut",
    "by_ut",
    "bz_ut",
    "dec_temp_c",
    "dec_fz_n",
    "dec_fx_n",
    "dec_fy_n",
    "dec_theta_deg",
    "grip_cmd_n",
    "margin_n",
    "phase",
    "event",
];

/// Numeric cell format: 9 significant digits, which both captures the
/// decode tolerances with headroom and survives write -> read -> write
/// unchanged (the parsed double re-rounds to the same 9 digits).
fn fmt_cell(x: f64) -> String {
    format!("{x:.8e}")
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(fmt_cell).unwrap_or_default()
}

pub fn write_trace_csv(trace: &Trace) -> String {
    let mut out = TRACE_COLUMNS.join(",");
    out.push('\n');
    for row in &trace.rows {
        let dec = row.dec.as_ref();
        let grip = row.grip.as_ref();
        let cells = [
            fmt_cell(row.t_s),
            fmt_cell(row.gt.temperature_c),
            fmt_cell(row.gt.fz_n),
            fmt_cell(row.gt.fx_n),
            fmt_cell(row.gt.fy_n),
            fmt_cell(row.raw.current_ua),
            fmt_cell(row.raw.freq_hz),
            fmt_cell(row.raw.bx_ut),
            fmt_cell(row.raw.by_ut),
            fmt_cell(row.raw.bz_ut),
            opt_cell(dec.map(|d| d.temperature_c)),
            opt_cell(dec.map(|d| d.fz_n)),
            opt_cell(dec.map(|d| d.fx_n)),
            opt_cell(dec.map(|d| d.fy_n)),
            opt_cell(dec.and_then(|d| d.theta_deg)),
            opt_cell(grip.map(|g| g.fz_cmd_n)),
            opt_cell(grip.map(|g| g.margin_n)),
            grip.map(|g| g.phase.to_string()).unwrap_or_default(),
            row.event.clone().unwrap_or_default(),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn parse_cell(s: &str, line: usize, column: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| TwinError::Parse {
        line,
        message: format!("bad number {s:?} in column {column}"),
    })?;
    if !v.is_finite() {
        return Err(TwinError::Parse {
            line,
            message: format!("non-finite value in column {column}"),
        });
    }
    Ok(v)
}

fn parse_opt(s: &str, line: usize, column: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_cell(s, line, column).map(Some)
    }
}

pub fn read_trace_csv(text: &str) -> Result<Trace> {
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => h.trim_end(),
        None => {
            return Err(TwinError::SchemaMismatch {
                missing: TRACE_COLUMNS.iter().map(|c| c.to_string()).collect(),
            })
        }
    };
    let found: Vec<&str> = header.split(',').collect();
    if found != TRACE_COLUMNS {
        let missing: Vec<String> = TRACE_COLUMNS
            .iter()
            .filter(|c| !found.contains(*c))
            .map(|c| c.to_string())
            .collect();
        return Err(TwinError::SchemaMismatch {
            missing: if missing.is_empty() {
                vec![format!("columns out of order: got {}", header)]
            } else {
                missing
            },
        });
    }

    let mut rows = Vec::new();
    for (idx, raw_line) in lines {
        if raw_line.is_empty() {
            continue;
        }
        let line = idx + 1;
        let cells: Vec<&str> = raw_line.split(',').collect();
        if cells.len() != TRACE_COLUMNS.len() {
            return Err(TwinError::Parse {
                line,
                message: format!(
                    "expected {} fields, got {}",
                    TRACE_COLUMNS.len(),
                    cells.len()
                ),
            });
        }
        let num = |i: usize| parse_cell(cells[i], line, TRACE_COLUMNS[i]);
        let opt = |i: usize| parse_opt(cells[i], line, TRACE_COLUMNS[i]);

        let t_s = num(0)?;
        let gt = TactileState {
            temperature_c: num(1)?,
            fz_n: num(2)?,
            fx_n: num(3)?,
            fy_n: num(4)?,
        };
        let raw = RawSample {
            t_s,
            current_ua: num(5)?,
            freq_hz: num(6)?,
            bx_ut: num(7)?,
            by_ut: num(8)?,
            bz_ut: num(9)?,
        };
        let dec = match (opt(10)?, opt(11)?, opt(12)?, opt(13)?, opt(14)?) {
            (None, None, None, None, None) => None,
            (Some(temp), Some(fz), Some(fx), Some(fy), theta) => Some(DecodedState {
                temperature_c: temp,
                fz_n: fz,
                f_tau_n: fx.hypot(fy),
                theta_deg: theta,
                fx_n: fx,
                fy_n: fy,
                // only the at-rest flag survives the CSV; the others are
                // not part of the schema
                flags: DecodeFlags {
                    tangential_at_rest: theta.is_none(),
                    ..DecodeFlags::default()
                },
            }),
            _ => {
                return Err(TwinError::Parse {
                    line,
                    message: "decoded columns must be all present or all empty".into(),
                })
            }
        };
        let grip = match (opt(15)?, opt(16)?, cells[17]) {
            (None, None, "") => None,
            (Some(cmd), Some(margin), phase) => Some(GripCommand {
                fz_cmd_n: cmd,
                margin_n: margin,
                phase: phase.parse::<GripPhase>().map_err(|_| TwinError::Parse {
                    line,
                    message: format!("unknown grip phase {phase:?}"),
                })?,
            }),
            _ => {
                return Err(TwinError::Parse {
                    line,
                    message: "grip columns must be all present or all empty".into(),
                })
            }
        };
        let event = (!cells[18].is_empty()).then(|| cells[18].to_string());
        rows.push(TraceRow {
            t_s,
            gt,
            raw,
            dec,
            grip,
            event,
        });
    }
    Ok(Trace {
        rows,
        handovers: Vec::new(),
    })
}

pub fn save_trace(trace: &Trace, path: &Path) -> Result<()> {
    Ok(std::fs::write(path, write_trace_csv(trace))?)
}

pub fn load_trace(path: &Path) -> Result<Trace> {
    read_trace_csv(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::generate_calibration;
    use crate::scenario::{gen_scenario, run_scenario, ScenarioKind, ScenarioOverrides};

    fn sample_trace() -> Trace {
        let kind = ScenarioKind::GripJamming;
        let scn = gen_scenario(kind, &ScenarioOverrides::default());
        let mut params = kind.params();
        params.noise_current_ua = 0.02;
        params.noise_freq_hz = 0.5;
        params.noise_field_ut = 0.8;
        params.rng_seed = 11;
        let cal = generate_calibration(&kind.params(), &kind.grid()).unwrap();
        run_scenario(&scn, &params, &cal, kind.grip().as_ref()).unwrap()
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let trace = sample_trace();
        let text = write_trace_csv(&trace);
        let back = read_trace_csv(&text).unwrap();
        assert_eq!(back.rows.len(), trace.rows.len());
        assert_eq!(write_trace_csv(&back), text);
    }

    #[test]
    fn raw_only_traces_round_trip_with_empty_cells() {
        let kind = ScenarioKind::StaticSweep;
        let scn = gen_scenario(kind, &ScenarioOverrides::default());
        let trace = crate::scenario::simulate_scenario(&scn, &kind.params()).unwrap();
        let text = write_trace_csv(&trace);
        let line = text.lines().nth(1).unwrap();
        assert!(line.ends_with(",,,,,,,,,"));
        let back = read_trace_csv(&text).unwrap();
        assert_eq!(back.rows[0].dec, None);
        assert_eq!(back.rows[0].grip, None);
        assert_eq!(write_trace_csv(&back), text);
    }

    #[test]
    fn missing_column_is_named() {
        let trace = sample_trace();
        let text = write_trace_csv(&trace);
        let broken = text.replacen("dec_theta_deg,", "", 1);
        match read_trace_csv(&broken) {
            Err(TwinError::SchemaMismatch { missing }) => {
                assert_eq!(missing, vec!["dec_theta_deg".to_string()]);
            }
            other => panic!("expected schema mismatch, got {other:?}"),
        }
    }

    #[test]
    fn bad_cells_report_their_line() {
        let trace = sample_trace();
        let mut lines: Vec<String> = write_trace_csv(&trace)
            .lines()
            .map(str::to_string)
            .collect();
        lines[3] = lines[3].replacen(',', ",oops", 1);
        let broken = lines.join("\n");
        match read_trace_csv(&broken) {
            Err(TwinError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_field_count_reports_its_line() {
        let trace = sample_trace();
        let mut text = write_trace_csv(&trace);
        text.push_str("1.0,2.0\n");
        match read_trace_csv(&text) {
            Err(TwinError::Parse { line, .. }) => {
                assert_eq!(line, trace.rows.len() + 2);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn hundred_thousand_rows_survive_round_trip() {
        let base = sample_trace();
        let mut big = Trace::default();
        // perturb every copy so no two rows are identical
        for k in 0..100_000 {
            let mut row = base.rows[k % base.rows.len()].clone();
            row.t_s = k as f64 * 0.02;
            row.raw.t_s = row.t_s;
            row.raw.bx_ut += (k as f64) * 1.0e-4;
            big.rows.push(row);
        }
        let text = write_trace_csv(&big);
        let back = read_trace_csv(&text).unwrap();
        assert_eq!(back.rows.len(), 100_000);
        assert_eq!(write_trace_csv(&back), text);
    }
}
