//! Summary records and the on-disk layout of a run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::monte_carlo::RepRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// A statistic compared against a fixed threshold. `NaN` never passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Verdict {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Verdict { name: name.into(), value, relation: Relation::AtMost, threshold, pass: value <= threshold }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Verdict { name: name.into(), value, relation: Relation::AtLeast, threshold, pass: value >= threshold }
    }
}

/// One x/y table destined for `plots/<name>.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSeries {
    pub name: String,
    pub description: String,
    pub columns: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<f64>>,
}

impl PlotSeries {
    pub fn new(name: &str, description: &str, columns: &[&str]) -> Self {
        PlotSeries {
            name: name.into(),
            description: description.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub rep: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub replications: usize,
    pub successes: usize,
    pub failures: Vec<FailureRecord>,
    pub statistics: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub config: ExperimentConfig,
    pub summary: Summary,
    pub records: Vec<RepRecord>,
    pub plots: Vec<PlotSeries>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

impl Report {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.summary.verdicts.iter().find(|v| v.name == name)
    }

    pub fn statistic(&self, name: &str) -> Option<f64> {
        self.summary.statistics.get(name).copied()
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)? + "\n")
    }

    /// `reps.csv`: a hash comment, a header and one row per replication.
    pub fn reps_csv(&self) -> String {
        let names: Vec<&str> = self
            .records
            .iter()
            .find_map(|r| r.outcome.as_ref().ok())
            .map(|o| o.iter().map(|(k, _)| k.as_str()).collect())
            .unwrap_or_default();
        let mut s = String::new();
        let _ = writeln!(s, "# config_hash={}", self.summary.config_hash);
        s.push_str("rep,seed,status");
        for n in &names {
            s.push(',');
            s.push_str(&csv_field(n));
        }
        s.push_str(",message\n");
        for r in &self.records {
            let _ = write!(s, "{},{}", r.rep, r.seed);
            match &r.outcome {
                Ok(o) => {
                    s.push_str(",ok");
                    for n in &names {
                        let v = o.iter().find(|(k, _)| k == n).map(|(_, v)| *v).unwrap_or(f64::NAN);
                        let _ = write!(s, ",{v}");
                    }
                    s.push_str(",\n");
                }
                Err(msg) => {
                    s.push_str(",failed");
                    for _ in &names {
                        s.push(',');
                    }
                    let _ = writeln!(s, ",{}", csv_field(msg));
                }
            }
        }
        s
    }

    pub fn plot_csv(&self, p: &PlotSeries) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# config_hash={}", self.summary.config_hash);
        s.push_str(&p.columns.join(","));
        s.push('\n');
        for row in &p.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    fn plot_meta(&self, p: &PlotSeries) -> Result<String> {
        let meta = serde_json::json!({
            "name": p.name,
            "description": p.description,
            "columns": p.columns,
            "rows": p.rows.len(),
            "scenario": self.summary.scenario,
            "config_hash": self.summary.config_hash,
        });
        Ok(serde_json::to_string_pretty(&meta)? + "\n")
    }

    /// Writes `summary.json`, `reps.csv`, `plots/<name>.csv` and
    /// `plots/<name>.meta.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let plots = dir.join("plots");
        fs::create_dir_all(&plots)?;
        write_file(&dir.join("summary.json"), &self.summary_json()?)?;
        write_file(&dir.join("reps.csv"), &self.reps_csv())?;
        for p in &self.plots {
            write_file(&plots.join(format!("{}.csv", p.name)), &self.plot_csv(p))?;
            write_file(&plots.join(format!("{}.meta.json", p.name)), &self.plot_meta(p)?)?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Reads the per-replication records back from `reps.csv`.
///
/// Failure messages containing commas round-trip through CSV quoting.
pub fn read_reps_csv(text: &str) -> Result<Vec<RepRecord>> {
    let bad = |line: usize, what: &str| HarnessError::config(format!("reps.csv line {line}: {what}"));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[..3] != ["rep", "seed", "status"] || cols[cols.len() - 1] != "message" {
        return Err(bad(1, "unexpected header"));
    }
    let names = &cols[3..cols.len() - 1];
    let mut out = Vec::new();
    for (i, line) in lines {
        let mut parts = line.splitn(3 + names.len() + 1, ',');
        let rep = parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad(i + 1, "bad rep"))?;
        let seed = parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad(i + 1, "bad seed"))?;
        let status = parts.next().ok_or_else(|| bad(i + 1, "missing status"))?;
        let cells: Vec<&str> = parts.collect();
        let outcome = if status == "ok" {
            let mut o = Vec::with_capacity(names.len());
            for (n, c) in names.iter().zip(&cells) {
                o.push((n.to_string(), c.parse::<f64>().map_err(|_| bad(i + 1, "bad value"))?));
            }
            Ok(o)
        } else {
            let msg = cells.last().copied().unwrap_or("");
            let msg = msg
                .strip_prefix('"')
                .and_then(|m| m.strip_suffix('"'))
                .map_or(msg.to_string(), |m| m.replace("\"\"", "\""));
            Err(msg)
        };
        out.push(RepRecord { rep, seed, outcome });
    }
    Ok(out)
}
