//! CSV and JSON artifacts.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mdp::{Policy, PolicyTrace, ValueTable};

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Serialize)]
struct SeriesRow {
    k: usize,
    node: usize,
    value: f64,
}

/// Writes a `[k][node]` table as `k,node,value` rows.
pub fn write_series<W: Write>(out: W, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(["k", "node", "value"])?;
    for (k, row) in rows.iter().enumerate() {
        for (node, &value) in row.iter().enumerate() {
            w.serialize(SeriesRow { k, node, value })?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_series_file(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    write_series(create(path)?, rows)
}

#[derive(Serialize)]
struct ActionRow {
    k: usize,
    node: usize,
    action: u8,
}

/// Writes a `[k][node]` action table as `k,node,action` rows.
pub fn write_actions<W: Write>(out: W, actions: &[Vec<bool>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(["k", "node", "action"])?;
    for (k, row) in actions.iter().enumerate() {
        for (node, &a) in row.iter().enumerate() {
            w.serialize(ActionRow {
                k,
                node,
                action: u8::from(a),
            })?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_actions_file(path: &Path, actions: &[Vec<bool>]) -> Result<()> {
    write_actions(create(path)?, actions)
}

#[derive(Serialize)]
struct TraceRow {
    trial: u64,
    k: usize,
    node: usize,
    state: u8,
    action: Option<u8>,
}

/// Closed-loop traces as `trial,k,node,state,action`. The final state of
/// each trace has an empty action.
pub fn write_traces<W: Write>(out: W, traces: &[PolicyTrace]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(["trial", "k", "node", "state", "action"])?;
    for t in traces {
        for (k, x) in t.states.iter().enumerate() {
            for (node, &b) in x.bits().iter().enumerate() {
                w.serialize(TraceRow {
                    trial: t.trial,
                    k,
                    node,
                    state: u8::from(b),
                    action: t.actions.get(k).map(|u| u8::from(u.is_vaccinated(node))),
                })?;
            }
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_traces_file(path: &Path, traces: &[PolicyTrace]) -> Result<()> {
    write_traces(create(path)?, traces)
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingRow {
    pub method: String,
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seconds: f64,
}

pub fn write_timing<W: Write>(out: W, rows: &[TimingRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_timing_file(path: &Path, rows: &[TimingRow]) -> Result<()> {
    write_timing(create(path)?, rows)
}

#[derive(Debug, Serialize)]
pub struct TableEntry {
    pub k: usize,
    pub state: usize,
    pub value: f64,
    /// Absent at `k = T`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct MdpTables {
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub entries: Vec<TableEntry>,
}

/// Value and policy tables keyed by `(k, state index)`.
pub fn mdp_tables(values: &ValueTable, policy: &Policy) -> MdpTables {
    let entries = values
        .values
        .iter()
        .enumerate()
        .flat_map(|(k, row)| {
            row.iter()
                .enumerate()
                .map(move |(state, &value)| TableEntry {
                    k,
                    state,
                    value,
                    action: policy.actions.get(k).map(|a| a[state]),
                })
        })
        .collect();
    MdpTables {
        n: values.n,
        horizon: values.horizon(),
        entries,
    }
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_chain::BinaryState;
    use crate::mdp::ControlAction;

    #[test]
    fn series_has_header_and_rows() {
        let mut buf = Vec::new();
        write_series(&mut buf, &[vec![0.5, 1.0], vec![0.25, f64::INFINITY]]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "k,node,value\n0,0,0.5\n0,1,1.0\n1,0,0.25\n1,1,inf\n");
    }

    #[test]
    fn traces_leave_final_action_empty() {
        let trace = PolicyTrace {
            trial: 3,
            states: vec![BinaryState::new(vec![true]), BinaryState::new(vec![false])],
            actions: vec![ControlAction::new(vec![true])],
            cost: 2.0,
        };
        let mut buf = Vec::new();
        write_traces(&mut buf, &[trace]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "trial,k,node,state,action\n3,0,0,1,1\n3,1,0,0,\n"
        );
    }

    #[test]
    fn tables_are_keyed_by_time_and_state() {
        let values = ValueTable {
            n: 1,
            values: vec![vec![0.0, 3.0], vec![0.0, 0.0]],
        };
        let policy = Policy {
            n: 1,
            actions: vec![vec![0, 1]],
        };
        let t = mdp_tables(&values, &policy);
        assert_eq!(t.entries.len(), 4);
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains(r#"{"k":0,"state":1,"value":3.0,"action":1}"#));
        assert!(json.contains(r#"{"k":1,"state":1,"value":0.0}"#));
    }
}
