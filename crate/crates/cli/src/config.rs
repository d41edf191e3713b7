use std::collections::BTreeMap;
use std::path::Path;

use assoc_totient::{Error, Result};

/// Keys accepted in a config file; each mirrors the flag of the same name.
pub const KEYS: &[&str] = &[
    "threads",
    "memory-cap",
    "format",
    "out",
    "allow-ramanujan-violations",
    "delta-terms",
    "tol",
    "xmax",
    "nmax",
    "checkpoints",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| Error::FileFormat {
                path: path.to_path_buf(),
                line: i + 1,
                reason,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(bad(format!("unknown key `{k}`")));
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(bad(format!("key `{k}` given twice")));
            }
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn count(&self, key: &'static str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| parse_count(v).map_err(|r| Error::parse(key, v, r)))
            .transpose()
    }

    pub fn real(&self, key: &'static str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| parse_real(v).map_err(|r| Error::parse(key, v, r)))
            .transpose()
    }

    pub fn flag(&self, key: &'static str) -> Result<bool> {
        match self.get(key) {
            None | Some("false") | Some("0") | Some("no") => Ok(false),
            Some("true") | Some("1") | Some("yes") | Some("") => Ok(true),
            Some(v) => Err(Error::parse(key, v, "expected true or false")),
        }
    }
}

/// Non-negative integer, in plain or scientific notation (`1e6`).
pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim().replace('_', "");
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !f.is_finite() || f < 0.0 || f.fract() != 0.0 || f > 9.007_199_254_740_992e15 {
        return Err(format!("`{s}` is not a non-negative integer"));
    }
    Ok(f as u64)
}

pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

/// Byte count with an optional `K`, `M` or `G` suffix (powers of 1024).
pub fn parse_bytes(s: &str) -> std::result::Result<u64, String> {
    let t = s.trim();
    let (num, mult) = match t.chars().last() {
        Some('K' | 'k') => (&t[..t.len() - 1], 1u64 << 10),
        Some('M' | 'm') => (&t[..t.len() - 1], 1 << 20),
        Some('G' | 'g') => (&t[..t.len() - 1], 1 << 30),
        _ => (t, 1),
    };
    parse_count(num)?
        .checked_mul(mult)
        .ok_or_else(|| format!("`{s}` is too large"))
}

/// Comma-separated checkpoint list.
pub fn parse_checkpoints(s: &str) -> std::result::Result<Vec<u64>, String> {
    s.split(',').map(parse_count).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("1E8"), Ok(100_000_000));
        assert_eq!(parse_count("12"), Ok(12));
        assert_eq!(parse_count("10_000"), Ok(10_000));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert!(parse_count("abc").is_err());
        assert_eq!(parse_bytes("2G"), Ok(2 << 30));
        assert_eq!(parse_bytes("1e9"), Ok(1_000_000_000));
        assert_eq!(parse_checkpoints("10,1e2,1000"), Ok(vec![10, 100, 1000]));
    }

    #[test]
    fn config_file() {
        let p = Path::new("run.conf");
        let c = ConfigFile::parse(
            p,
            "# comment\nthreads = 4\nxmax=1e6 # trailing\n\nallow-ramanujan-violations=true\n",
        )
        .unwrap();
        assert_eq!(c.count("threads").unwrap(), Some(4));
        assert_eq!(c.count("xmax").unwrap(), Some(1_000_000));
        assert!(c.flag("allow-ramanujan-violations").unwrap());
        assert!(!c.flag("missing").unwrap());
        assert!(matches!(
            ConfigFile::parse(p, "speed=9"),
            Err(Error::FileFormat { line: 1, .. })
        ));
        assert!(matches!(
            ConfigFile::parse(p, "threads=1\nthreads=2"),
            Err(Error::FileFormat { line: 2, .. })
        ));
        assert!(matches!(ConfigFile::parse(p, "threads"), Err(Error::FileFormat { .. })));
    }
}
