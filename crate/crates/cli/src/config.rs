//! Defaults, the optional JSON configuration file and value parsers.
//!
//! A value is taken from the command line if given there, else from the
//! configuration file, else from the built-in default.

use crate::error::{CliError, CliResult};
use serde::Deserialize;
use std::path::Path;

pub const DEFAULT_H: f64 = 1e-3;
pub const DEFAULT_C: f64 = 0.25;
pub const DEFAULT_C_OMEGA: f64 = 1.0;
pub const DEFAULT_T: f64 = 0.0;
pub const DEFAULT_TOL: f64 = 1e-10;

/// Keys accepted in a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub b: Option<f64>,
    pub c: Option<f64>,
    #[serde(rename = "C1")]
    pub c1: Option<f64>,
    #[serde(rename = "C_omega")]
    pub c_omega: Option<f64>,
    pub nu: Option<f64>,
    pub h: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub delta: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    pub nu_list: Option<Vec<f64>>,
    pub b_list: Option<Vec<f64>>,
    pub c_list: Option<Vec<f64>>,
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))
    }
}

/// Command line first, then configuration, then default.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

/// A real number, optionally written as a fraction `p/q`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("invalid number '{s}'"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("invalid number '{s}'"))?;
            p / q
        }
        None => s.parse().map_err(|_| format!("invalid number '{s}'"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not a finite number"))
    }
}

/// A comma separated list of reals, or an inclusive range `start:stop:step`.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let (a, b, d) = (parse_real(parts[0])?, parse_real(parts[1])?, parse_real(parts[2])?);
        if !(d > 0.0) || b < a {
            return Err(format!("range '{s}' needs start <= stop and a positive step"));
        }
        let n = ((b - a) / d + 1e-9).floor() as usize;
        // Rounding to 12 decimals keeps 0.1 + 2 * 0.1 printing as 0.3.
        return Ok((0..=n).map(|i| ((a + i as f64 * d) * 1e12).round() / 1e12).collect());
    }
    let v = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(parse_real)
        .collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err("empty list".into());
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_and_fractions() {
        assert_eq!(parse_real("0.25").unwrap(), 0.25);
        assert_eq!(parse_real("1/200").unwrap(), 0.005);
        assert!(parse_real("abc").is_err());
        assert!(parse_real("1/0").is_err());
    }

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("0.1,0.2").unwrap(), vec![0.1, 0.2]);
        let r = parse_list("0.1:0.9:0.1").unwrap();
        assert_eq!(r.len(), 9);
        assert_eq!(r[2], 0.3);
        assert_eq!(r[8], 0.9);
        assert_eq!(parse_list("1/100,1/2000").unwrap(), vec![0.01, 0.0005]);
        assert!(parse_list("").is_err());
        assert!(parse_list("1:0:0.1").is_err());
    }

    #[test]
    fn precedence() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick(None, None, 3), 3);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let c: Config = serde_json::from_str(r#"{"h": 0.002, "C_omega": 2}"#).unwrap();
        assert_eq!(c.h, Some(0.002));
        assert_eq!(c.c_omega, Some(2.0));
        assert!(serde_json::from_str::<Config>(r#"{"hh": 1}"#).is_err());
    }
}
