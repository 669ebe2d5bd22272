// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Tabular sweep output: CSV with a units header plus a JSON sidecar.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    /// Empty for dimensionless columns.
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Column {
        Column {
            name: name.to_string(),
            unit: unit.to_string(),
        }
    }

    /// Header cell, e.g. `tau (s)`.
    pub fn header(&self) -> String {
        if self.unit.is_empty() {
            self.name.clone()
        } else {
            format!("{} ({})", self.name, self.unit)
        }
    }
}

/// One grid point. Missing values (a failed row) are written as empty
/// cells and the message goes in the trailing `error` column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub values: Vec<Option<f64>>,
    pub error: Option<String>,
}

/// Provenance written to the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub chain_fingerprint: String,
    pub library_version: String,
    /// Protocol, knobs and any other request parameters.
    pub request: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    pub provenance: Provenance,
}

impl SweepReport {
    pub fn new(kind: &str, columns: Vec<Column>, chain_fingerprint: String) -> SweepReport {
        SweepReport {
            kind: kind.to_string(),
            columns,
            rows: Vec::new(),
            provenance: Provenance {
                chain_fingerprint,
                library_version: crate::VERSION.to_string(),
                request: BTreeMap::new(),
            },
        }
    }

    pub fn with_request(mut self, key: &str, value: impl Serialize) -> Result<SweepReport> {
        self.provenance.request.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(self)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Values of column `name`, `None` for failed rows.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let idx = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r.values[idx]).collect())
    }

    /// Writes the CSV table. Floats use the shortest representation that
    /// round-trips, so identical reports give identical bytes.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = self.columns.iter().map(Column::header).collect();
        header.push("error".to_string());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut cells: Vec<String> = row
                .values
                .iter()
                .map(|v| v.map(|x| format!("{x:e}")).unwrap_or_default())
                .collect();
            cells.push(row.error.clone().unwrap_or_default());
            w.write_record(&cells)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    /// JSON sidecar: kind, columns, provenance and the row count.
    pub fn sidecar_json(&self) -> Result<String> {
        let value = serde_json::json!({
            "kind": self.kind,
            "columns": self.columns,
            "rows": self.rows.len(),
            "failed_rows": self.rows.iter().filter(|r| r.error.is_some()).count(),
            "provenance": self.provenance,
        });
        Ok(serde_json::to_string_pretty(&value)?)
    }
}
