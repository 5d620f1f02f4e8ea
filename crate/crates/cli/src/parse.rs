//! Value parsers for numeric flags and the key = value config file.

use std::ffi::OsString;
use std::path::Path;

use crate::failure::Failure;

/// Non-negative integer count; scientific notation such as `1e6` is accepted.
pub fn count(s: &str) -> Result<usize, String> {
    let t = s.trim().replace('_', "");
    if let Ok(v) = t.parse::<usize>() {
        return Ok(v);
    }
    let v: f64 = t
        .parse()
        .map_err(|_| format!("'{s}' is not a count (examples: 1000, 1e6)"))?;
    if !(v >= 0.0 && v.is_finite() && v.fract() == 0.0 && v <= 9.007_199_254_740_992e15) {
        return Err(format!("'{s}' is not a non-negative integer"));
    }
    Ok(v as usize)
}

pub fn real(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

/// Comma-separated reals.
pub fn reals(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(real).collect()
}

pub fn counts(s: &str) -> Result<Vec<usize>, String> {
    s.split(',').map(count).collect()
}

/// `a:step:b` (inclusive) or a comma-separated list.
pub fn grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [_] => reals(s),
        [a, step, b] => {
            let (a, step, b) = (real(a)?, real(step)?, real(b)?);
            if step == 0.0 || (b - a) * step < 0.0 {
                return Err(format!("grid '{s}': step must move from start towards end"));
            }
            let span = (b - a) / step;
            let n = (span + 1e-9).floor() as usize;
            if n > 1_000_000 {
                return Err(format!("grid '{s}' has too many points"));
            }
            // round away the representation noise of a + i·step
            Ok((0..=n)
                .map(|i| {
                    let v = a + i as f64 * step;
                    let scale = 1e12 / step.abs().clamp(f64::MIN_POSITIVE, 1.0);
                    (v * scale).round() / scale
                })
                .collect())
        }
        _ => Err(format!(
            "grid '{s}' must be 'start:step:end' or a comma list"
        )),
    }
}

fn flag_present(args: &[OsString], key: &str) -> bool {
    let long = format!("--{key}");
    let eq = format!("--{key}=");
    args.iter()
        .any(|a| a.to_str().is_some_and(|s| s == long || s.starts_with(&eq)))
}

/// Path given to `--config`, if any.
fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Reads `key = value` lines (blank lines and `#` comments ignored).
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Failure::Config(format!(
                "{}:{}: expected 'key = value'",
                path.display(),
                i + 1
            )));
        };
        let k = k.trim().trim_start_matches("--").replace('_', "-");
        if k.is_empty() || k == "config" {
            return Err(Failure::Config(format!(
                "{}:{}: invalid key '{k}'",
                path.display(),
                i + 1
            )));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

/// Appends config-file settings as flags unless the flag was given on the
/// command line. Boolean keys take `true`/`false`. Unknown keys surface as
/// ordinary unknown-flag errors from the argument parser.
pub fn merge_config(mut args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let settings = read_config(Path::new(&path))?;
    let mut extra = Vec::new();
    for (k, v) in settings {
        if flag_present(&args, &k) {
            continue;
        }
        match v.as_str() {
            "true" => extra.push(OsString::from(format!("--{k}"))),
            "false" => {}
            _ => extra.push(OsString::from(format!("--{k}={v}"))),
        }
    }
    args.extend(extra);
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(count("1e6"), Ok(1_000_000));
        assert_eq!(count("2500"), Ok(2500));
        assert!(count("1.5").is_err());
        assert!(count("-3").is_err());
    }

    #[test]
    fn grids_are_inclusive_and_clean() {
        assert_eq!(grid("0:0.05:0.2").unwrap(), vec![0.0, 0.05, 0.1, 0.15, 0.2]);
        assert_eq!(grid("0.01:0.01:0.03").unwrap(), vec![0.01, 0.02, 0.03]);
        assert_eq!(grid("1,0.1,0.01").unwrap(), vec![1.0, 0.1, 0.01]);
        assert_eq!(grid("0:1:10").unwrap().len(), 11);
        assert!(grid("0:-1:3").is_err());
    }

    #[test]
    fn flags_override_config_entries() {
        let dir = std::env::temp_dir().join(format!("evtdyn-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "# run\nseed = 4\nn = 50\nrequire_gof = true\n").unwrap();
        let args: Vec<OsString> = [
            "evtdyn",
            "simulate",
            "--config",
            path.to_str().unwrap(),
            "--n",
            "7",
        ]
        .iter()
        .map(OsString::from)
        .collect();
        let merged = merge_config(args).unwrap();
        let s: Vec<String> = merged.iter().map(|a| a.to_string_lossy().into()).collect();
        assert!(s.contains(&"--seed=4".to_string()));
        assert!(s.contains(&"--require-gof".to_string()));
        assert!(!s.iter().any(|a| a == "--n=50"));
    }
}
