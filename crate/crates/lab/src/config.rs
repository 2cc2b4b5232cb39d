//! Flat `key=value` experiment configuration.
//!
//! A config file holds one `key=value` pair per line; blank lines and lines
//! starting with `#` are ignored. Command-line overrides use the same
//! syntax. Every command resolves its config against a table of defaults, so
//! the resolved config lists every parameter the run depends on.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use mkdv_core::equations::{EquationKind, EquationSpec, Sign};

use crate::error::{LabError, Result};

/// Output directory key; excluded from the config hash.
pub const OUTPUT_KEY: &str = "output";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
}

fn split_pair(line: &str) -> Result<(String, String)> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| LabError::Config(format!("expected key=value, got {line:?}")))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(LabError::Config(format!("empty key in {line:?}")));
    }
    Ok((k.to_string(), v.to_string()))
}

impl ExperimentConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::new();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = split_pair(line)?;
            if cfg.values.insert(k.clone(), v).is_some() {
                return Err(LabError::Config(format!("duplicate key {k:?}")));
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.values.insert(key.to_string(), value.to_string());
        self
    }

    /// Builder form of [`ExperimentConfig::set`].
    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.set(key, value);
        self
    }

    /// Applies `key=value` overrides in order; later ones win.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let (k, v) = split_pair(o.as_ref())?;
            self.values.insert(k, v);
        }
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    /// Fills in `defaults` and rejects keys the command does not know.
    pub fn resolve(&self, defaults: &[(&str, &str)]) -> Result<Self> {
        let known = |k: &str| k == OUTPUT_KEY || defaults.iter().any(|(d, _)| *d == k);
        if let Some(k) = self.values.keys().find(|k| !known(k)) {
            let mut names: Vec<&str> = defaults.iter().map(|(d, _)| *d).collect();
            names.sort_unstable();
            return Err(LabError::Config(format!("unknown key {k:?} (expected one of {})", names.join(", "))));
        }
        let mut out = self.clone();
        for (k, v) in defaults {
            out.values.entry(k.to_string()).or_insert_with(|| v.to_string());
        }
        out.values.entry(OUTPUT_KEY.to_string()).or_insert_with(|| ".".to_string());
        Ok(out)
    }

    /// Sorted `key=value` lines without the output directory.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.values.iter().filter(|(k, _)| k.as_str() != OUTPUT_KEY) {
            writeln!(out, "{k}={v}").unwrap();
        }
        out
    }

    /// SHA-256 of the command name and the canonical config.
    pub fn hash(&self, command: &str) -> String {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update(b"\n");
        h.update(self.canonical().as_bytes());
        hex::encode(h.finalize())
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.values.get(OUTPUT_KEY).map(String::as_str).unwrap_or("."))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| LabError::Config(format!("missing key {key:?}")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.str(key)?;
        raw.parse().map_err(|e| LabError::Config(format!("{key}={raw}: {e}")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.get(key)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.get(key)
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.get(key)
    }

    /// `none` (or an empty value) maps to `None`.
    pub fn optional_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.str(key)? {
            "" | "none" => Ok(None),
            _ => self.f64(key).map(Some),
        }
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.str(key)?;
        raw.split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(|x| x.parse().map_err(|e| LabError::Config(format!("{key}: {x:?}: {e}"))))
            .collect()
    }

    /// `+1` is defocusing, `-1` focusing.
    pub fn sign(&self, key: &str) -> Result<Sign> {
        Ok(Sign::from_value(self.get(key)?)?)
    }

    /// The equation named by `equation`, with `sign` applied when the kind
    /// carries one.
    pub fn equation(&self) -> Result<EquationSpec> {
        let kind: EquationKind = self.str("equation")?.parse()?;
        let sign = if kind.has_sign() { Some(self.sign("sign")?) } else { None };
        Ok(EquationSpec::new(kind, sign)?)
    }

    /// Positive value check with a readable message.
    pub fn positive(&self, key: &str) -> Result<f64> {
        let v = self.f64(key)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(LabError::Config(format!("{key} must be positive and finite, got {v}")));
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let cfg = ExperimentConfig::parse("# header\n n_max = 32\n\ndt=1e-3\n").unwrap();
        assert_eq!(cfg.usize("n_max").unwrap(), 32);
        assert_eq!(cfg.f64("dt").unwrap(), 1e-3);
    }

    #[test]
    fn rejects_duplicates_and_bad_lines() {
        assert!(ExperimentConfig::parse("a=1\na=2").is_err());
        assert!(ExperimentConfig::parse("just words").is_err());
        assert!(ExperimentConfig::parse("=3").is_err());
    }

    #[test]
    fn overrides_win() {
        let mut cfg = ExperimentConfig::parse("a=1").unwrap();
        cfg.apply_overrides(&["a=2", "b=x"]).unwrap();
        assert_eq!(cfg.str("a").unwrap(), "2");
        assert_eq!(cfg.str("b").unwrap(), "x");
    }

    #[test]
    fn resolve_fills_defaults_and_rejects_unknown_keys() {
        let defaults = [("a", "1"), ("b", "2")];
        let cfg = ExperimentConfig::new().with("a", 5).resolve(&defaults).unwrap();
        assert_eq!(cfg.str("a").unwrap(), "5");
        assert_eq!(cfg.str("b").unwrap(), "2");
        assert!(ExperimentConfig::new().with("c", 1).resolve(&defaults).is_err());
    }

    #[test]
    fn hash_ignores_output_and_insertion_order() {
        let a = ExperimentConfig::new().with("x", 1).with("y", 2).with(OUTPUT_KEY, "/tmp/a");
        let b = ExperimentConfig::new().with("y", 2).with("x", 1).with(OUTPUT_KEY, "/tmp/b");
        assert_eq!(a.hash("run"), b.hash("run"));
        assert_ne!(a.hash("run"), a.hash("other"));
        assert_ne!(a.hash("run"), a.clone().with("x", 3).hash("run"));
        assert_eq!(a.hash("run").len(), 64);
    }

    #[test]
    fn lists_and_optionals() {
        let cfg = ExperimentConfig::parse("v=0.5, 1,2\nt=none\nu=1e-6").unwrap();
        assert_eq!(cfg.list::<f64>("v").unwrap(), vec![0.5, 1.0, 2.0]);
        assert_eq!(cfg.optional_f64("t").unwrap(), None);
        assert_eq!(cfg.optional_f64("u").unwrap(), Some(1e-6));
    }

    #[test]
    fn equations_drop_the_sign_for_unsigned_kinds() {
        let cfg = ExperimentConfig::parse("equation=kdv\nsign=-1").unwrap();
        assert_eq!(cfg.equation().unwrap(), EquationSpec::kdv());
        let cfg = ExperimentConfig::parse("equation=mkdv\nsign=-1").unwrap();
        assert_eq!(cfg.equation().unwrap(), EquationSpec::mkdv(Sign::Focusing));
        assert!(ExperimentConfig::parse("equation=mkdv\nsign=0").unwrap().equation().is_err());
    }
}
