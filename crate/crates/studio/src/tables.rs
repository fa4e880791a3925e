//! CSV tables written by the commands, and their readers.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces the in-memory table bit for bit. Missing values are empty cells.

use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use wakereserve_core::farmopt::FarmSolution;
use wakereserve_core::gridsim::{NadirMetrics, SimTrace};

use crate::StudioError;

/// Label of the per-(case, v) summary row in solution tables.
pub const TOTAL: &str = "total";

/// One turbine of a solved row, or the row totals when `turbine == "total"`.
/// Failed solves leave a single totals row with `error` set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRow {
    pub case_id: String,
    pub v_free_mps: f64,
    pub turbine: String,
    pub dm: Option<f64>,
    pub omega_pu: Option<f64>,
    pub beta_deg: Option<f64>,
    pub v_inflow_mps: Option<f64>,
    pub cp: Option<f64>,
    pub ct: Option<f64>,
    pub p_mech_w: Option<f64>,
    pub e_kin_pus: Option<f64>,
    pub error: String,
}

impl SolutionRow {
    fn empty(case_id: &str, v_free_mps: f64, turbine: String) -> Self {
        Self {
            case_id: case_id.into(),
            v_free_mps,
            turbine,
            dm: None,
            omega_pu: None,
            beta_deg: None,
            v_inflow_mps: None,
            cp: None,
            ct: None,
            p_mech_w: None,
            e_kin_pus: None,
            error: String::new(),
        }
    }

    pub fn is_total(&self) -> bool {
        self.turbine == TOTAL
    }

    /// 1-based turbine position, `None` for totals rows.
    pub fn turbine_index(&self) -> Option<usize> {
        self.turbine.parse().ok()
    }
}

/// Per-turbine rows followed by the totals row.
pub fn solution_rows(case_id: &str, sol: &FarmSolution) -> Vec<SolutionRow> {
    let mut rows: Vec<SolutionRow> = sol
        .turbines
        .iter()
        .zip(&sol.dm)
        .enumerate()
        .map(|(i, (op, &dm))| SolutionRow {
            dm: Some(dm),
            omega_pu: Some(op.omega_pu),
            beta_deg: Some(op.beta_deg),
            v_inflow_mps: Some(op.v_mps),
            cp: Some(op.cp),
            ct: Some(op.ct),
            p_mech_w: Some(op.p_mech_w),
            e_kin_pus: Some(op.e_kin_pus),
            ..SolutionRow::empty(case_id, sol.v_free_mps, (i + 1).to_string())
        })
        .collect();
    rows.push(SolutionRow {
        p_mech_w: Some(sol.total_power_w),
        e_kin_pus: Some(sol.total_kinetic_pus),
        ..SolutionRow::empty(case_id, sol.v_free_mps, TOTAL.into())
    });
    rows
}

pub fn failed_row(case_id: &str, v_free_mps: f64, error: &str) -> SolutionRow {
    SolutionRow {
        error: error.into(),
        ..SolutionRow::empty(case_id, v_free_mps, TOTAL.into())
    }
}

/// Frequency metrics of one simulated case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub case_id: String,
    pub nadir_hz: Option<f64>,
    pub nadir_time_s: Option<f64>,
    /// Nadir time minus the reference case's nadir time.
    pub delay_s: Option<f64>,
    pub f_max_hz: Option<f64>,
    pub f_end_hz: Option<f64>,
    pub max_balance_residual_pu: Option<f64>,
    pub error: String,
}

impl MetricsRow {
    pub fn from_trace(case_id: &str, trace: &SimTrace, metrics: &NadirMetrics) -> Self {
        Self {
            case_id: case_id.into(),
            nadir_hz: metrics.nadir_hz,
            nadir_time_s: metrics.nadir_time_s,
            delay_s: metrics.delay_s,
            f_max_hz: trace.f_hz.iter().copied().reduce(f64::max),
            f_end_hz: trace.f_hz.last().copied(),
            max_balance_residual_pu: Some(trace.max_balance_residual_pu),
            error: String::new(),
        }
    }

    pub fn failed(case_id: &str, error: &str) -> Self {
        Self {
            case_id: case_id.into(),
            nadir_hz: None,
            nadir_time_s: None,
            delay_s: None,
            f_max_hz: None,
            f_end_hz: None,
            max_balance_residual_pu: None,
            error: error.into(),
        }
    }
}

/// Serializes records with a header row. Callers pass at least one record.
pub fn write_records<T: Serialize, W: Write>(out: W, rows: &[T]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<T: DeserializeOwned, R: Read>(input: R) -> Result<Vec<T>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn save_records<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), StudioError> {
    let file = std::fs::File::create(path).map_err(StudioError::io(format!("create {}", path.display())))?;
    write_records(std::io::BufWriter::new(file), rows).map_err(StudioError::csv(format!("write {}", path.display())))
}

pub fn load_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StudioError> {
    let file = std::fs::File::open(path).map_err(StudioError::io(format!("open {}", path.display())))?;
    read_records(file).map_err(StudioError::csv(format!("read {}", path.display())))
}

/// Time series of one simulation, one row per step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceTable {
    /// Numeric column names, in file order.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Event labels fired at each step, `; `-joined, usually empty.
    pub events: Vec<String>,
}

const EVENT_COLUMN: &str = "event";

impl TraceTable {
    pub fn from_trace(trace: &SimTrace) -> Self {
        let n_wt = trace.omega_pu.len();
        let mut columns: Vec<String> = vec!["t_s".into(), "f_hz".into(), "wind_p_mw".into()];
        columns.extend(trace.gen_names.iter().map(|g| format!("{g}_p_mw")));
        for prefix in ["omega_pu", "beta_deg", "p_aero_mw", "p_elec_mw"] {
            columns.extend((1..=n_wt).map(|i| format!("{prefix}_{i}")));
        }
        let rows = (0..trace.len())
            .map(|k| {
                let mut r = vec![trace.t_s[k], trace.f_hz[k], trace.wind_p_mw[k]];
                r.extend(trace.gen_p_mw.iter().map(|g| g[k]));
                for series in [&trace.omega_pu, &trace.beta_deg, &trace.p_aero_mw, &trace.p_elec_mw] {
                    r.extend(series.iter().map(|s| s[k]));
                }
                r
            })
            .collect();
        let mut events = vec![String::new(); trace.len()];
        for (t, label) in &trace.events {
            // events fire on the step grid, so the nearest sample is exact
            let k = trace
                .t_s
                .iter()
                .position(|&ts| ts >= *t)
                .unwrap_or(trace.len().saturating_sub(1));
            if let Some(slot) = events.get_mut(k) {
                if !slot.is_empty() {
                    slot.push_str("; ");
                }
                slot.push_str(label);
            }
        }
        Self { columns, rows, events }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Number of turbines with `omega_pu_<i>` columns.
    pub fn n_turbines(&self) -> usize {
        self.columns.iter().filter(|c| c.starts_with("omega_pu_")).count()
    }

    pub fn write<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        header.push(EVENT_COLUMN);
        w.write_record(&header)?;
        let mut rec = Vec::with_capacity(header.len());
        for (row, ev) in self.rows.iter().zip(&self.events) {
            rec.clear();
            rec.extend(row.iter().map(|x| x.to_string()));
            rec.push(ev.clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self, StudioError> {
        let ctx = || "trace table";
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(StudioError::csv(ctx()))?.clone();
        if header.iter().next_back() != Some(EVENT_COLUMN) {
            return Err(StudioError::Failed(format!("trace table: last column must be `{EVENT_COLUMN}`")));
        }
        let n = header.len() - 1;
        let mut table = Self {
            columns: header.iter().take(n).map(String::from).collect(),
            ..Self::default()
        };
        for rec in r.records() {
            let rec = rec.map_err(StudioError::csv(ctx()))?;
            let row = rec
                .iter()
                .take(n)
                .map(|s| s.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| StudioError::Failed(format!("trace table line {:?}: {e}", rec.position().map(|p| p.line()))))?;
            table.rows.push(row);
            table.events.push(rec.get(n).unwrap_or_default().to_string());
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<(), StudioError> {
        let file = std::fs::File::create(path).map_err(StudioError::io(format!("create {}", path.display())))?;
        self.write(std::io::BufWriter::new(file))
            .map_err(StudioError::csv(format!("write {}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, StudioError> {
        let file = std::fs::File::open(path).map_err(StudioError::io(format!("open {}", path.display())))?;
        Self::read(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(rows: &[T]) {
        let mut buf = Vec::new();
        write_records(&mut buf, rows).unwrap();
        let back: Vec<T> = read_records(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn solution_rows_roundtrip_with_quoting() {
        let mut rows = vec![failed_row("odd, \"quoted\" id", 7.5, "no feasible point,\nsee log")];
        rows.push(SolutionRow {
            dm: Some(0.05),
            omega_pu: Some(0.1 + 0.2),
            beta_deg: Some(1e-300),
            p_mech_w: Some(-0.0),
            ..SolutionRow::empty("II", 8.0, "1".into())
        });
        roundtrip(&rows);
        let mut buf = Vec::new();
        write_records(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("case_id,v_free_mps,turbine,dm,omega_pu,"));
        assert!(text.contains("\"odd, \"\"quoted\"\" id\""));
    }

    #[test]
    fn metrics_rows_roundtrip() {
        roundtrip(&[
            MetricsRow::failed("I", "rotor speed left its band"),
            MetricsRow {
                nadir_hz: Some(49.123456789),
                delay_s: Some(12.34),
                ..MetricsRow::failed("II", "")
            },
        ]);
    }

    #[test]
    fn trace_table_roundtrip() {
        let t = TraceTable {
            columns: vec!["t_s".into(), "f_hz".into()],
            rows: vec![vec![0.0, 50.0], vec![0.01, 49.999_999_999_123], vec![0.02, 1.0 / 3.0]],
            events: vec![String::new(), "trip SG3; wind release".into(), String::new()],
        };
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("t_s,f_hz,event\n"));
        assert_eq!(TraceTable::read(buf.as_slice()).unwrap(), t);
    }
}
