//! Flat `key = value` text configuration.
//!
//! ```text
//! # comment
//! include = base.conf      # path relative to the including file
//! alpha = 24
//! seeds = 1, 2, 3
//! ```
//!
//! Later assignments override earlier ones; an include is expanded in place.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

const MAX_INCLUDE_DEPTH: usize = 16;

#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
    /// Directory of the top-level file, used to resolve relative paths.
    base_dir: PathBuf,
    used: RefCell<BTreeSet<String>>,
}

impl KvConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = KvConfig {
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            ..Default::default()
        };
        cfg.read_into(path, 0)?;
        Ok(cfg)
    }

    pub fn parse_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = KvConfig {
            base_dir: base_dir.to_path_buf(),
            ..Default::default()
        };
        cfg.parse_into(text, base_dir, Path::new("<inline>"), 0)?;
        Ok(cfg)
    }

    fn read_into(&mut self, path: &Path, depth: usize) -> Result<()> {
        if depth > MAX_INCLUDE_DEPTH {
            return Err(Error::Config(format!(
                "include depth exceeded at {}",
                path.display()
            )));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        self.parse_into(&text, &dir, path, depth)
    }

    fn parse_into(&mut self, text: &str, dir: &Path, origin: &Path, depth: usize) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{}:{}: expected `key = value`, got `{line}`",
                    origin.display(),
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::Config(format!(
                    "{}:{}: empty key",
                    origin.display(),
                    lineno + 1
                )));
            }
            if key == "include" {
                self.read_into(&dir.join(value), depth + 1)?;
            } else {
                self.entries.insert(key.to_string(), value.to_string());
            }
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        let v = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{s}`")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// A path value resolved against the top-level file's directory.
    pub fn get_path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(|v| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                self.base_dir.join(p)
            }
        })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Keys that were present but never read.
    pub fn unused_keys(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.entries
            .keys()
            .filter(|k| !used.contains(*k))
            .cloned()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_lists_and_overrides() {
        let cfg = KvConfig::parse_str("a = 1\n# x\nb = 1, 2 ,3 # tail\na = 2\n", Path::new(".")).unwrap();
        assert_eq!(cfg.get::<i32>("a").unwrap(), Some(2));
        assert_eq!(cfg.get_list::<u64>("b").unwrap(), Some(vec![1, 2, 3]));
        assert_eq!(cfg.get::<f64>("missing").unwrap(), None);
        assert!(cfg.get::<f64>("b").is_err());
    }

    #[test]
    fn include_is_relative_and_overridable() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("sub")).unwrap();
        std::fs::write(dir.path().join("sub/base.conf"), "alpha = 3\nbeta = 0.5\n").unwrap();
        std::fs::write(dir.path().join("main.conf"), "include = sub/base.conf\nalpha = 9\n").unwrap();
        let cfg = KvConfig::from_file(&dir.path().join("main.conf")).unwrap();
        assert_eq!(cfg.get::<f64>("alpha").unwrap(), Some(9.0));
        assert_eq!(cfg.get::<f64>("beta").unwrap(), Some(0.5));
        assert!(cfg.unused_keys().is_empty());
    }

    #[test]
    fn rejects_malformed_lines_and_cycles() {
        assert!(KvConfig::parse_str("just words\n", Path::new(".")).is_err());
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.conf"), "include = a.conf\n").unwrap();
        assert!(KvConfig::from_file(&dir.path().join("a.conf")).is_err());
    }

    #[test]
    fn reports_unused_keys() {
        let cfg = KvConfig::parse_str("a = 1\nzz = 2\n", Path::new(".")).unwrap();
        let _ = cfg.get::<i32>("a");
        assert_eq!(cfg.unused_keys(), vec!["zz".to_string()]);
    }
}
