//! Value lists on the command line: `x`, `x,y,z`, `a:b:logN` or `a:b:linN`.

use anyhow::{bail, Context, Result};

pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [single] => single
            .split(',')
            .map(|s| parse_number(s))
            .collect::<Result<Vec<_>>>(),
        [lo, hi, kind] => {
            let (lo, hi) = (parse_number(lo)?, parse_number(hi)?);
            let (log, n) = if let Some(n) = kind.strip_prefix("log") {
                (true, n)
            } else if let Some(n) = kind.strip_prefix("lin") {
                (false, n)
            } else {
                bail!("grid `{spec}`: expected logN or linN after the second colon");
            };
            let n: usize = n
                .parse()
                .with_context(|| format!("grid `{spec}`: bad point count `{n}`"))?;
            if n == 0 {
                bail!("grid `{spec}`: need at least one point");
            }
            if log && !(lo > 0.0 && hi > 0.0) {
                bail!("grid `{spec}`: log spacing needs positive endpoints");
            }
            if n == 1 {
                return Ok(vec![lo]);
            }
            let step = |k: usize| k as f64 / (n - 1) as f64;
            Ok((0..n)
                .map(|k| match (k, log) {
                    (0, _) => lo,
                    (k, _) if k == n - 1 => hi,
                    (k, true) => (lo.ln() + (hi.ln() - lo.ln()) * step(k)).exp(),
                    (k, false) => lo + (hi - lo) * step(k),
                })
                .collect())
        }
        _ => bail!("grid `{spec}`: expected a value, a comma list, or lo:hi:logN / lo:hi:linN"),
    }
}

fn parse_number(s: &str) -> Result<f64> {
    let x: f64 = s
        .trim()
        .parse()
        .with_context(|| format!("`{s}` is not a number"))?;
    if !x.is_finite() {
        bail!("`{s}` is not finite");
    }
    Ok(x)
}

/// Grid of positive integers; values are rounded to the nearest integer and
/// de-duplicated in order.
pub fn parse_integer_grid(spec: &str) -> Result<Vec<u64>> {
    let mut out: Vec<u64> = Vec::new();
    for x in parse_grid(spec)? {
        if x < 0.5 {
            bail!("`{spec}`: values must be positive integers, got {x}");
        }
        let n = x.round() as u64;
        if out.last() != Some(&n) {
            out.push(n);
        }
    }
    Ok(out)
}
