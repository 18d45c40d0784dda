//! Sweep syntax: comma-separated items, each a value or `a..b[:step]`.

use multiport_ttf_core::Ports;

fn items(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim)
}

fn split_range(item: &str) -> Option<(&str, &str, Option<&str>)> {
    let (a, rest) = item.split_once("..")?;
    match rest.split_once(':') {
        Some((b, step)) => Some((a, b, Some(step))),
        None => Some((a, rest, None)),
    }
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("expected a non-negative integer, got {s:?}"))
}

fn parse_f64(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("expected a finite number, got {s:?}")),
    }
}

/// `2..8`, `2..20:2`, `3,5,9`.
pub fn parse_u64_list(s: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for item in items(s) {
        match split_range(item) {
            Some((a, b, step)) => {
                let (a, b) = (parse_u64(a)?, parse_u64(b)?);
                let step = step.map(parse_u64).transpose()?.unwrap_or(1);
                if step == 0 {
                    return Err(format!("range step must be positive in {item:?}"));
                }
                if b < a {
                    return Err(format!("empty range {item:?}: end is below start"));
                }
                out.extend((a..=b).step_by(step as usize));
            }
            None => out.push(parse_u64(item)?),
        }
    }
    Ok(out)
}

/// `0..0.9:0.1`, `0.3`, `0,0.1,0.5`. Float ranges need an explicit step and
/// include the end point when it lies on the grid.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in items(s) {
        match split_range(item) {
            Some((a, b, step)) => {
                let (a, b) = (parse_f64(a)?, parse_f64(b)?);
                let step = match step {
                    Some(st) => parse_f64(st)?,
                    None => return Err(format!("float range {item:?} needs a step, e.g. {a}..{b}:0.1")),
                };
                if step <= 0.0 {
                    return Err(format!("range step must be positive in {item:?}"));
                }
                if b < a {
                    return Err(format!("empty range {item:?}: end is below start"));
                }
                let n = ((b - a) / step + 1e-9).floor() as u64;
                // snap to 12 decimals so 0.1 * 3 prints as 0.3
                out.extend((0..=n).map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12));
            }
            None => out.push(parse_f64(item)?),
        }
    }
    Ok(out)
}

/// Port counts with `inf` allowed as an item: `inf`, `4..16:4,inf`.
pub fn parse_ports_list(s: &str) -> Result<Vec<Ports>, String> {
    let mut out = Vec::new();
    for item in items(s) {
        if item.eq_ignore_ascii_case("inf") {
            out.push(Ports::Infinite);
            continue;
        }
        for p in parse_u64_list(item)? {
            if p == 0 {
                return Err("s must be at least 1 (or inf)".into());
            }
            out.push(Ports::Finite(p));
        }
    }
    Ok(out)
}
