//! Experiment specs as flat `key = value` text.
//!
//! ```text
//! # comments start with '#'
//! name = d3-hstar
//! command = hstar
//! seed = 7
//! workers = 0
//! dim = 3
//! L = 16,32,64
//! ```
//!
//! `name`, `command`, `seed`, `workers` and `out` are reserved; every other
//! key is a parameter of the command and mirrors the CLI flag of the same
//! name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub command: String,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
    /// Output directory; falls back to `GFFPERC_OUT_DIR`.
    pub out: Option<PathBuf>,
    pub params: BTreeMap<String, String>,
}

const RESERVED: [&str; 5] = ["name", "command", "seed", "workers", "out"];

impl ExperimentSpec {
    pub fn new(name: &str, command: &str, seed: u64) -> Self {
        ExperimentSpec {
            name: name.into(),
            command: command.into(),
            seed,
            workers: 0,
            out: None,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.set(key, &value.to_string()).expect("valid key");
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = Self::parse_lines(text)?;
        if spec.command.is_empty() {
            return Err(Error::Config("spec has no `command`".into()));
        }
        if spec.name.is_empty() {
            spec.name = spec.command.clone();
        }
        Ok(spec)
    }

    /// Parses a config file for a known command; `command` may be omitted
    /// from the text but must agree if present.
    pub fn parse_for(text: &str, command: &str) -> Result<Self> {
        let mut spec = Self::parse_lines(text)?;
        if !spec.command.is_empty() && spec.command != command {
            return Err(Error::Config(format!("config is for `{}`, not `{command}`", spec.command)));
        }
        spec.command = command.into();
        if spec.name.is_empty() {
            spec.name = command.into();
        }
        Ok(spec)
    }

    fn parse_lines(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got {raw:?}", no + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut spec = ExperimentSpec::new("", "", 0);
        let mut seen = std::collections::HashSet::new();
        for (k, v) in pairs {
            if !seen.insert(k.clone()) {
                return Err(Error::Config(format!("key `{k}` given twice")));
            }
            spec.set(&k, &v)?;
        }
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets one key, reserved or not.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("`{key}` must be {what}, got {value:?}"));
        match key {
            "" => return Err(Error::Config("empty key".into())),
            "name" => self.name = value.into(),
            "command" => self.command = value.into(),
            "seed" => self.seed = value.parse().map_err(|_| bad("a non-negative integer"))?,
            "workers" => self.workers = value.parse().map_err(|_| bad("a non-negative integer"))?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => {
                if key.chars().any(|c| c.is_whitespace() || c == '=' || c == '#') {
                    return Err(Error::Config(format!("bad key {key:?}")));
                }
                self.params.insert(key.into(), value.into());
            }
        }
        Ok(())
    }

    /// Applies overrides in order; later values win.
    pub fn apply_overrides<'a, I: IntoIterator<Item = (&'a str, &'a str)>>(&mut self, pairs: I) -> Result<()> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("name = {}\ncommand = {}\nseed = {}\nworkers = {}\n", self.name, self.command, self.seed, self.workers);
        if let Some(o) = &self.out {
            s += &format!("out = {}\n", o.display());
        }
        for (k, v) in &self.params {
            s += &format!("{k} = {v}\n");
        }
        s
    }

    /// SHA-256 over everything that determines the numbers: name, command,
    /// seed and parameters. Worker count and output location are excluded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("name={}\ncommand={}\nseed={}\n", self.name, self.command, self.seed));
        for (k, v) in &self.params {
            h.update(format!("{k}={v}\n"));
        }
        hex::encode(h.finalize())
    }

    pub fn is_reserved(key: &str) -> bool {
        RESERVED.contains(&key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let s = ExperimentSpec::parse("# x\ncommand = greens\n dim = 3 \npoint = 0,0,0 # origin\nseed=4\n").unwrap();
        assert_eq!(s.name, "greens");
        assert_eq!(s.seed, 4);
        assert_eq!(s.param("point"), Some("0,0,0"));
        assert_eq!(ExperimentSpec::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn rejects_malformed() {
        assert!(ExperimentSpec::parse("command greens").is_err());
        assert!(ExperimentSpec::parse("dim = 3").is_err());
        assert!(ExperimentSpec::parse("command = a\nseed = -1").is_err());
        assert!(ExperimentSpec::parse("command = a\ndim = 3\ndim = 4").is_err());
    }

    #[test]
    fn config_without_command() {
        let s = ExperimentSpec::parse_for("dim = 3", "greens").unwrap();
        assert_eq!((s.command.as_str(), s.name.as_str()), ("greens", "greens"));
        assert!(ExperimentSpec::parse_for("command = renorm", "greens").is_err());
    }

    #[test]
    fn overrides_win() {
        let mut s = ExperimentSpec::parse("command = greens\ndim = 3").unwrap();
        s.apply_overrides([("dim", "4"), ("seed", "9")]).unwrap();
        assert_eq!(s.param("dim"), Some("4"));
        assert_eq!(s.seed, 9);
    }

    #[test]
    fn hash_ignores_workers_and_out() {
        let a = ExperimentSpec::new("x", "greens", 1).with("dim", 3);
        let mut b = a.clone();
        b.workers = 4;
        b.out = Some("/tmp".into());
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), a.clone().with("dim", 4).hash());
        assert_eq!(a.hash().len(), 64);
    }
}
