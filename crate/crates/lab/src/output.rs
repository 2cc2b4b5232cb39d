//! Result files. Every file opens with a `#` preamble naming the command,
//! the config hash, the resolved config, the tolerances in force and the
//! calibration constants; the CSV body follows with a mandatory header row.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use mkdv_core::calibration::CalibrationTable;

use crate::config::ExperimentConfig;
use crate::error::Result;

/// Shortest round-trip representation, so equal numbers print identically.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn constants(table: &CalibrationTable) -> Vec<(String, String)> {
    let opt = |v: Option<f64>| v.map(num).unwrap_or_else(|| "none".into());
    vec![
        ("kappa".into(), num(table.kappa)),
        ("resonant_weight".into(), num(table.resonant_weight)),
        ("nonresonant_weight".into(), num(table.nonresonant_weight)),
        ("gauge".into(), opt(table.gauge)),
        ("miura_alpha".into(), opt(table.miura.map(|m| m.alpha))),
        ("miura_beta".into(), opt(table.miura.map(|m| m.beta))),
        ("miura_kdv_coupling".into(), opt(table.miura.map(|m| m.kdv_coupling))),
        ("energy_growth".into(), num(table.energy_growth)),
        ("sextic_diagonal".into(), num(table.sextic_diagonal)),
        ("sextic_offdiagonal".into(), num(table.sextic_offdiagonal)),
    ]
}

fn joined(pairs: &[(String, String)]) -> String {
    if pairs.is_empty() {
        return "none".into();
    }
    pairs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

/// Provenance shared by the files of one run.
#[derive(Debug, Clone)]
pub struct Preamble {
    pub command: String,
    pub hash: String,
    pub config: Vec<(String, String)>,
    pub tolerances: Vec<(String, String)>,
    pub constants: Vec<(String, String)>,
    /// Extra `name: value` lines.
    pub notes: Vec<(String, String)>,
}

impl Preamble {
    pub fn new(command: &str, cfg: &ExperimentConfig, table: &CalibrationTable) -> Self {
        Self {
            command: command.into(),
            hash: cfg.hash(command),
            config: cfg.entries().filter(|(k, _)| *k != crate::config::OUTPUT_KEY).map(|(k, v)| (k.into(), v.into())).collect(),
            tolerances: Vec::new(),
            constants: constants(table),
            notes: Vec::new(),
        }
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.push((name.into(), num(value)));
        self
    }

    pub fn note(&mut self, name: &str, value: impl ToString) {
        self.notes.push((name.into(), value.to_string()));
    }

    pub fn lines(&self) -> String {
        let mut out = format!("# mkdv-lab {}\n# config_sha256: {}\n", self.command, self.hash);
        out += &format!("# config: {}\n", joined(&self.config));
        out += &format!("# tolerances: {}\n", joined(&self.tolerances));
        out += &format!("# constants: {}\n", joined(&self.constants));
        for (k, v) in &self.notes {
            out += &format!("# {k}: {v}\n");
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let map = |pairs: &[(String, String)]| -> Value {
            Value::Object(pairs.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect())
        };
        json!({
            "command": self.command,
            "config_sha256": self.hash,
            "config": map(&self.config),
            "tolerances": map(&self.tolerances),
            "constants": map(&self.constants),
        })
    }
}

/// A CSV table held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Parses a CSV written by [`write_csv`], skipping the preamble.
pub fn read_csv(text: &str) -> Result<Table> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.map(|r| r.iter().map(String::from).collect())).collect::<std::result::Result<_, _>>()?;
    Ok(Table { header, rows })
}

pub fn write_csv(dir: &Path, name: &str, preamble: &Preamble, table: &Table) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, preamble.lines() + &table.to_csv()?)?;
    Ok(path)
}

/// Writes `{"meta": preamble, ...body}` as pretty JSON.
pub fn write_json(dir: &Path, name: &str, preamble: &Preamble, body: Value) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut doc = serde_json::Map::new();
    doc.insert("meta".into(), preamble.to_json());
    if let Value::Object(fields) = body {
        doc.extend(fields);
    }
    let text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json values serialize");
    fs::write(&path, text + "\n")?;
    Ok(path)
}
