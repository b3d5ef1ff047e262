// SPDX-License-Identifier: MIT
//! Parsers for the textual grid and sweep arguments.
//!
//! Grids use the form `LO:HI:N`: N evenly spaced points from LO to HI
//! inclusive. A single-point grid requires LO = HI. Probe-coupling sweeps
//! use `eps=V[,V...]` with positive finite values.

/// Parses `LO:HI:N` into an evenly spaced, strictly increasing grid.
pub fn parse_grid(text: &str, name: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("{name} must have the form LO:HI:N, got {text:?}"));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| format!("{name} lower bound {:?} is not a number", parts[0]))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| format!("{name} upper bound {:?} is not a number", parts[1]))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| format!("{name} point count {:?} is not a positive integer", parts[2]))?;
    if !lo.is_finite() || !hi.is_finite() {
        return Err(format!("{name} bounds must be finite"));
    }
    if n == 0 {
        return Err(format!("{name} needs at least one point"));
    }
    if n == 1 {
        if lo != hi {
            return Err(format!(
                "{name} with one point requires LO = HI, got {lo} and {hi}"
            ));
        }
        return Ok(vec![lo]);
    }
    if hi <= lo {
        return Err(format!("{name} requires HI > LO, got {lo} and {hi}"));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|k| lo + step * k as f64).collect())
}

/// Parses `eps=V[,V...]`, keeping the textual tokens for column naming.
pub fn parse_eps_list(text: &str) -> Result<Vec<(String, f64)>, String> {
    let body = text
        .strip_prefix("eps=")
        .ok_or_else(|| format!("oracle sweep must have the form eps=V[,V...], got {text:?}"))?;
    if body.is_empty() {
        return Err("oracle sweep lists no values".to_string());
    }
    let mut out = Vec::new();
    for tok in body.split(',') {
        let v: f64 = tok
            .parse()
            .map_err(|_| format!("oracle value {tok:?} is not a number"))?;
        if !v.is_finite() || v <= 0.0 {
            return Err(format!("oracle value {tok} must be positive and finite"));
        }
        out.push((tok.to_string(), v));
    }
    Ok(out)
}
