//! Postselected photon-counting records.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome counts of one (input, setting) cell.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    /// Gate invocations attempted for this cell.
    pub invocations: u64,
    /// Outcome string (one `+`/`-` per detected photon) → count.
    pub outcomes: BTreeMap<String, u64>,
}

impl CellCounts {
    pub fn total(&self) -> u64 {
        self.outcomes.values().sum()
    }

    pub fn get(&self, outcome: &str) -> u64 {
        self.outcomes.get(outcome).copied().unwrap_or(0)
    }

    pub fn merge(&mut self, other: &CellCounts) {
        self.invocations += other.invocations;
        for (k, v) in &other.outcomes {
            *self.outcomes.entry(k.clone()).or_insert(0) += v;
        }
    }
}

/// Counts keyed by (input label, setting label), ordered deterministically.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountsTable {
    cells: BTreeMap<(String, String), CellCounts>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    input: String,
    setting: String,
    outcome: String,
    count: u64,
}

/// Invocation total of one cell as stored in the sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellInvocations {
    pub input: String,
    pub setting: String,
    pub invocations: u64,
}

/// JSON companion of the counts CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub simulator_version: String,
    pub invocations: Vec<CellInvocations>,
    #[serde(default)]
    pub config: serde_json::Value,
}

impl CountsTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    /// Registers a cell (adding `invocations` if it already exists).
    pub fn add_invocations(&mut self, input: &str, setting: &str, invocations: u64) {
        self.cells.entry((input.into(), setting.into())).or_default().invocations += invocations;
    }

    pub fn add_count(&mut self, input: &str, setting: &str, outcome: &str, count: u64) {
        let cell = self.cells.entry((input.into(), setting.into())).or_default();
        *cell.outcomes.entry(outcome.into()).or_insert(0) += count;
    }

    pub fn insert_cell(&mut self, input: &str, setting: &str, cell: CellCounts) {
        self.cells.entry((input.into(), setting.into())).or_default().merge(&cell);
    }

    pub fn cell(&self, input: &str, setting: &str) -> Option<&CellCounts> {
        self.cells.get(&(input.to_string(), setting.to_string()))
    }

    pub fn cells(&self) -> impl Iterator<Item = (&str, &str, &CellCounts)> {
        self.cells.iter().map(|((i, s), c)| (i.as_str(), s.as_str(), c))
    }

    pub fn cells_mut(&mut self) -> impl Iterator<Item = &mut CellCounts> {
        self.cells.values_mut()
    }

    /// Distinct input labels in order.
    pub fn inputs(&self) -> Vec<String> {
        let mut v: Vec<String> = self.cells.keys().map(|(i, _)| i.clone()).collect();
        v.dedup();
        v
    }

    /// Cells of one input.
    pub fn slice(&self, input: &str) -> CountsTable {
        CountsTable {
            cells: self
                .cells
                .iter()
                .filter(|((i, _), _)| i == input)
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Element-wise sum; associative and order-independent.
    pub fn merge(&mut self, other: &CountsTable) {
        for ((i, s), c) in &other.cells {
            self.insert_cell(i, s, c.clone());
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for ((input, setting), cell) in &self.cells {
            for (outcome, count) in &cell.outcomes {
                wr.serialize(CsvRow {
                    input: input.clone(),
                    setting: setting.clone(),
                    outcome: outcome.clone(),
                    count: *count,
                })?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn sidecar(&self, config: serde_json::Value) -> Sidecar {
        Sidecar {
            simulator_version: env!("CARGO_PKG_VERSION").to_string(),
            invocations: self
                .cells
                .iter()
                .map(|((i, s), c)| CellInvocations {
                    input: i.clone(),
                    setting: s.clone(),
                    invocations: c.invocations,
                })
                .collect(),
            config,
        }
    }

    /// Reads the CSV and attaches invocation totals from the sidecar. Cells listed
    /// only in the sidecar (no postselected events) are kept with empty outcomes.
    pub fn read_csv<R: Read>(r: R, sidecar: &Sidecar) -> Result<CountsTable> {
        let mut table = CountsTable::new();
        for inv in &sidecar.invocations {
            table.add_invocations(&inv.input, &inv.setting, inv.invocations);
        }
        let mut rd = csv::Reader::from_reader(r);
        for row in rd.deserialize::<CsvRow>() {
            let row = row?;
            if !row.outcome.chars().all(|ch| ch == '+' || ch == '-') {
                return Err(Error::Parse(format!("bad outcome string `{}`", row.outcome)));
            }
            if table.cell(&row.input, &row.setting).is_none() {
                return Err(Error::Parse(format!(
                    "cell ({}, {}) has no invocation total in the sidecar",
                    row.input, row.setting
                )));
            }
            table.add_count(&row.input, &row.setting, &row.outcome, row.count);
        }
        table.validate()?;
        Ok(table)
    }

    /// Every cell must satisfy Σ counts ≤ invocations.
    pub fn validate(&self) -> Result<()> {
        for ((i, s), c) in &self.cells {
            if c.total() > c.invocations {
                return Err(Error::Inconsistent(format!(
                    "cell ({i}, {s}) has {} counts but {} invocations",
                    c.total(),
                    c.invocations
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CountsTable {
        let mut t = CountsTable::new();
        t.add_invocations("HD", "HV_DA", 100);
        t.add_count("HD", "HV_DA", "++", 10);
        t.add_count("HD", "HV_DA", "+-", 30);
        t.add_invocations("VD", "HV_DA", 100);
        t
    }

    #[test]
    fn csv_round_trip_keeps_empty_cells() {
        let t = sample();
        let csv = t.to_csv_string().unwrap();
        assert!(csv.starts_with("input,setting,outcome,count\n"));
        let back = CountsTable::read_csv(csv.as_bytes(), &t.sidecar(serde_json::Value::Null)).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.cell("VD", "HV_DA").unwrap().total(), 0);
    }

    #[test]
    fn merge_is_order_independent() {
        let a = sample();
        let mut b = CountsTable::new();
        b.add_invocations("HD", "HV_DA", 5);
        b.add_count("HD", "HV_DA", "--", 2);
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab, ba);
        assert_eq!(ab.cell("HD", "HV_DA").unwrap().invocations, 105);
    }

    #[test]
    fn overfull_cell_rejected() {
        let mut t = sample();
        t.add_count("VD", "HV_DA", "++", 101);
        assert!(t.validate().is_err());
    }
}
