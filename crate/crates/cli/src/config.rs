//! Flat key-value configuration with section headers.
//!
//! Grammar (line oriented):
//!   - `# ...` and blank lines are ignored
//!   - `[section]` opens a section
//!   - `key = value` assigns inside the current section
//!   - values: scalars, `a,b,c` lists, and `2^-6` power-of-two shorthand
//!
//! Unknown sections or keys are rejected. Command-line `section.key=value`
//! pairs override file values; a parsed config canonicalizes to a fixed text
//! form that re-parses to the same config.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

/// Section -> key -> raw value, all strings until typed access.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

const KNOWN: &[(&str, &[&str])] = &[
    ("experiment", &["seed", "out"]),
    ("objective", &["kind", "kappa", "d", "amplitudes"]),
    (
        "scheme",
        &["method", "lambda", "a", "mu", "h", "h_list", "t_end", "u0", "v0", "steps"],
    ),
    ("rates", &["reference", "order_lo", "order_hi"]),
    (
        "manifold",
        &["box", "grid_res", "tol_outer", "steps", "bound_steps", "decay_floor", "decay_steps"],
    ),
    ("constants", &["h_lo", "h_hi"]),
    (
        "toynet",
        &[
            "n",
            "d",
            "epochs",
            "batch_size",
            "methods",
            "h_list",
            "rate_h_list",
            "lambda",
            "mu",
            "rate_lo",
            "rate_hi",
            "mu_rate_lo",
            "mu_rate_hi",
        ],
    ),
];

fn check_known(section: &str, key: Option<&str>) -> Result<()> {
    let Some((_, keys)) = KNOWN.iter().find(|(s, _)| *s == section) else {
        return Err(ConfigError(format!("unknown section '{section}'")));
    };
    if let Some(k) = key {
        if !keys.contains(&k) {
            return Err(ConfigError(format!("unknown key '{k}' in section '{section}'")));
        }
    }
    Ok(())
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                check_known(&section, None)?;
                cfg.sections.entry(section.clone()).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError(format!("line {}: expected 'key = value'", lineno + 1)));
            };
            if section.is_empty() {
                return Err(ConfigError(format!("line {}: assignment before any [section]", lineno + 1)));
            }
            let key = key.trim().to_string();
            check_known(&section, Some(&key))?;
            cfg.sections
                .get_mut(&section)
                .unwrap()
                .insert(key, value.trim().to_string());
        }
        Ok(cfg)
    }

    /// Apply a `section.key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let Some((path, value)) = spec.split_once('=') else {
            return Err(ConfigError(format!("override '{spec}' must be section.key=value")));
        };
        let Some((section, key)) = path.trim().split_once('.') else {
            return Err(ConfigError(format!("override '{spec}' must be section.key=value")));
        };
        check_known(section.trim(), Some(key.trim()))?;
        self.sections
            .entry(section.trim().to_string())
            .or_default()
            .insert(key.trim().to_string(), value.trim().to_string());
        Ok(())
    }

    /// Fixed-form text that parses back to an identical config.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (section, kv) in &self.sections {
            out.push_str(&format!("[{section}]\n"));
            for (k, v) in kv {
                out.push_str(&format!("{k} = {v}\n"));
            }
            out.push('\n');
        }
        out
    }

    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|kv| kv.get(key)).map(|s| s.as_str())
    }

    pub fn str_or(&self, section: &str, key: &str, default: &str) -> String {
        self.raw(section, key).unwrap_or(default).to_string()
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(s) => parse_number(s)
                .ok_or_else(|| ConfigError(format!("{section}.{key}: cannot parse number '{s}'"))),
        }
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> Result<u64> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| ConfigError(format!("{section}.{key}: cannot parse integer '{s}'"))),
        }
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        Ok(self.u64_or(section, key, default as u64)? as usize)
    }

    pub fn f64_list_or(&self, section: &str, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(section, key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|t| {
                    parse_number(t.trim()).ok_or_else(|| {
                        ConfigError(format!("{section}.{key}: cannot parse number '{t}'"))
                    })
                })
                .collect(),
        }
    }

    pub fn str_list_or(&self, section: &str, key: &str, default: &[&str]) -> Vec<String> {
        match self.raw(section, key) {
            None => default.iter().map(|s| s.to_string()). collect(),
            Some(s) => s.split(',').map(|t| t.trim().to_string()).collect(),
        }
    }
}

/// Numbers in plain form or `2^k` / `2^-k` shorthand.
pub fn parse_number(s: &str) -> Option<f64> {
    if let Some(exp) = s.strip_prefix("2^") {
        let e: i32 = exp.parse().ok()?;
        return Some(2f64.powi(e));
    }
    s.parse().ok()
}
