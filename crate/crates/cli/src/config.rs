//! `key = value` run configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use conelab::strip_solver::SolverConfig;
use conelab::{Error, Result};

const REQUIRED: [&str; 7] = ["omega", "rho", "p", "k", "T", "nt", "ntheta"];
const OPTIONAL: [&str; 4] = ["tol", "max_iter", "output_dir", "seed"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub omega: f64,
    pub rho: f64,
    pub p: f64,
    pub k: f64,
    pub t_max: f64,
    pub nt: usize,
    pub ntheta: usize,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Parses a real number, also accepting `pi`, `a*pi`, `pi/b` and `a*pi/b`.
pub fn parse_real(text: &str) -> Option<f64> {
    let s = text.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim().parse::<f64>().ok()?),
        None => (s, 1.0),
    };
    let factor = match num.split_once('*') {
        Some((a, b)) if b.trim() == "pi" => a.trim().parse::<f64>().ok()?,
        None if num == "pi" => 1.0,
        _ => return None,
    };
    Some(factor * PI / den)
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("config line {line}: {msg}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                parse_err(n + 1, format!("expected 'key = value', found '{line}'"))
            })?;
            let key = key.trim();
            if !REQUIRED.contains(&key) && !OPTIONAL.contains(&key) {
                return Err(parse_err(n + 1, format!("unknown key '{key}'")));
            }
            if map
                .insert(key.to_string(), (n + 1, value.trim().to_string()))
                .is_some()
            {
                return Err(parse_err(n + 1, format!("duplicate key '{key}'")));
            }
        }
        for key in REQUIRED {
            if !map.contains_key(key) {
                return Err(Error::Parse(format!("missing required config key '{key}'")));
            }
        }
        let real = |key: &str| -> Result<f64> {
            let (n, v) = &map[key];
            parse_real(v).ok_or_else(|| parse_err(*n, format!("'{key}' = '{v}' is not a number")))
        };
        let int = |key: &str| -> Result<usize> {
            let (n, v) = &map[key];
            v.parse::<usize>()
                .map_err(|_| parse_err(*n, format!("'{key}' = '{v}' is not a nonnegative integer")))
        };
        let cfg = RunConfig {
            omega: real("omega")?,
            rho: real("rho")?,
            p: real("p")?,
            k: real("k")?,
            t_max: real("T")?,
            nt: int("nt")?,
            ntheta: int("ntheta")?,
            tol: map.contains_key("tol").then(|| real("tol")).transpose()?,
            max_iter: map
                .contains_key("max_iter")
                .then(|| int("max_iter"))
                .transpose()?,
            output_dir: map.get("output_dir").map(|(_, v)| PathBuf::from(v)),
            seed: match map.get("seed") {
                Some((n, v)) => Some(v.parse::<u64>().map_err(|_| {
                    parse_err(*n, format!("'seed' = '{v}' is not an unsigned integer"))
                })?),
                None => None,
            },
        };
        cfg.solver()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Solver configuration; validates every numeric field.
    pub fn solver(&self) -> Result<SolverConfig> {
        let mut c = SolverConfig::new(
            self.omega,
            self.rho,
            self.p,
            self.k,
            self.t_max,
            self.nt,
            self.ntheta,
        )?;
        if let Some(t) = self.tol {
            c = c.with_tol(t)?;
        }
        if let Some(m) = self.max_iter {
            c = c.with_max_iter(m)?;
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "omega = pi/2\nrho = 1\np = 2\nk = 1\nT = 8\nnt = 41\nntheta = 16\n";

    #[test]
    fn parses_base_config() {
        let c =
            RunConfig::parse(&format!("# comment\n{BASE}tol = 1e-9 # inline\nseed = 7\n")).unwrap();
        assert!((c.omega - PI / 2.0).abs() < 1e-15);
        assert_eq!(c.nt, 41);
        assert_eq!(c.tol, Some(1e-9));
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.output_dir, None);
    }

    #[test]
    fn reals_with_pi() {
        assert_eq!(parse_real("pi"), Some(PI));
        assert_eq!(parse_real("1.5*pi"), Some(1.5 * PI));
        assert_eq!(parse_real("3*pi/4"), Some(3.0 * PI / 4.0));
        assert_eq!(parse_real("0.25"), Some(0.25));
        assert_eq!(parse_real("tau"), None);
    }

    #[test]
    fn errors_name_the_key() {
        let missing = BASE.replace("k = 1\n", "");
        let e = RunConfig::parse(&missing).unwrap_err().to_string();
        assert!(e.contains("'k'"), "{e}");
        assert!(RunConfig::parse(&format!("{BASE}colour = red\n")).is_err());
        assert!(RunConfig::parse(&format!("{BASE}nt = 50\n")).is_err());
        assert!(RunConfig::parse(&BASE.replace("nt = 41", "nt = 10"))
            .unwrap_err()
            .to_string()
            .contains("nt"));
        assert!(RunConfig::parse(&BASE.replace("p = 2", "p = two")).is_err());
    }
}
