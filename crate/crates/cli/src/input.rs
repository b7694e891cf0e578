//! Builtin models, term loading and chain-length ranges.

use std::io::Read;

use chainphase_core::canonical::canonical_hamiltonian;
use chainphase_core::operators::projectorize;
use chainphase_core::{models, LocalTerm, ProjectorTerm};
use serde_json::Value;

use crate::json;

/// Where the local term comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Model(String),
    /// A path, `-` for stdin.
    File(String),
}

/// `ising`, `fig2`, `zero(d)` or `canonical(k,d)`.
pub fn builtin(name: &str) -> Result<ProjectorTerm, String> {
    let name = name.trim();
    let args = |prefix: &str| -> Option<Vec<usize>> {
        let inner = name.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
        inner.split(',').map(|x| x.trim().parse().ok()).collect()
    };
    match name {
        "ising" => return Ok(models::ising()),
        "fig2" => return Ok(models::fig2()),
        _ => {}
    }
    if let Some(a) = args("zero") {
        if let [d] = a[..] {
            if d == 0 {
                return Err("zero(d) needs d ≥ 1".into());
            }
            return Ok(models::zero(d));
        }
    }
    if let Some(a) = args("canonical") {
        if let [k, d] = a[..] {
            return canonical_hamiltonian(k, d).map_err(|e| e.to_string());
        }
    }
    Err(format!("unknown model {name:?}; expected ising, fig2, zero(d) or canonical(k,d)"))
}

fn read_source(path: &str) -> Result<Value, String> {
    let text = if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| format!("stdin: {e}"))?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?
    };
    serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))
}

/// The raw term, without projectorizing.
pub fn load_term(src: &Source, tol: f64) -> Result<LocalTerm, String> {
    match src {
        Source::Model(name) => Ok(builtin(name)?.as_local_term()),
        Source::File(path) => json::parse_term(&read_source(path)?, tol),
    }
}

/// The projector with the same kernel as the term.
pub fn load_projector(src: &Source, tol: f64) -> Result<ProjectorTerm, String> {
    match src {
        Source::Model(name) => builtin(name),
        Source::File(_) => projectorize(&load_term(src, tol)?, tol).map_err(|e| e.to_string()),
    }
}

/// Any JSON document; used for `--x`.
pub fn load_json(path: &str) -> Result<Value, String> {
    read_source(path)
}

/// `4`, `2..8` (inclusive) or a comma list of either.
pub fn parse_lengths(spec: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("bad chain length {s:?}"));
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
                if a > b {
                    return Err(format!("empty range {part}"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err("no chain lengths given".into());
    }
    if let Some(&n) = out.iter().find(|&&n| n < 2) {
        return Err(format!("chain length {n} is below 2"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chainphase_core::TwoSite;

    #[test]
    fn ranges() {
        assert_eq!(parse_lengths("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_lengths("3, 6..=7").unwrap(), vec![3, 6, 7]);
        assert!(parse_lengths("1..3").is_err());
        assert!(parse_lengths("5..3").is_err());
        assert!(parse_lengths("x").is_err());
    }

    #[test]
    fn models() {
        assert_eq!(builtin("ising").unwrap().site_dim(), 2);
        assert_eq!(builtin("fig2").unwrap().site_dim(), 4);
        assert_eq!(builtin("zero(3)").unwrap().rank(), 0);
        assert_eq!(builtin("canonical(2, 3)").unwrap().rank(), 7);
        assert!(builtin("zero(0)").is_err());
        assert!(builtin("heisenberg").is_err());
    }
}
