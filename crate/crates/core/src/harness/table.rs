use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const CSV_HEADER: [&str; 7] = [
    "experiment_id",
    "mechanism",
    "x_name",
    "x_value",
    "metric",
    "value",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment_id: String,
    pub mechanism: String,
    pub x_name: String,
    pub x_value: f64,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
}

/// Append-only list of result rows, written to CSV in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row; non-finite values are rejected.
    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        experiment_id: &str,
        mechanism: &str,
        x_name: &str,
        x_value: f64,
        metric: &str,
        value: f64,
        seed: u64,
    ) -> Result<()> {
        if !value.is_finite() || !x_value.is_finite() {
            return Err(Error::InvalidValue {
                what: "result value",
                value,
            });
        }
        self.rows.push(ResultRow {
            experiment_id: experiment_id.to_string(),
            mechanism: mechanism.to_string(),
            x_name: x_name.to_string(),
            x_value,
            metric: metric.to_string(),
            value,
            seed,
        });
        Ok(())
    }

    pub fn extend(&mut self, other: ResultTable) {
        self.rows.extend(other.rows);
    }

    pub fn rows(&self) -> &[ResultRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Looks up a single value; convenient in tests and summaries.
    pub fn value(&self, mechanism: &str, metric: &str, x_value: Option<f64>) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                r.mechanism == mechanism
                    && r.metric == metric
                    && x_value.is_none_or(|x| r.x_value == x)
            })
            .map(|r| r.value)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.experiment_id.clone(),
                r.mechanism.clone(),
                r.x_name.clone(),
                format!("{:?}", r.x_value),
                r.metric.clone(),
                format!("{:?}", r.value),
                r.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let f = File::create(path)?;
        self.write_csv(BufWriter::new(f))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }
}
