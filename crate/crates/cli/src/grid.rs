//! Numeric lists on the command line: `0.1,0.5,0.9` or `start:stop:step`.

/// Comma-separated numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let out = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
        .collect::<Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return Err(format!("empty list '{s}'"));
    }
    Ok(out)
}

/// A comma list, or an inclusive `start:stop:step` range. Range points are
/// computed as `start + i·step` and rounded to 12 decimals, so `0.1:0.9:0.1`
/// yields exactly 0.1, 0.2, ..., 0.9.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [_] => parse_list(s),
        [a, b, c] => {
            let num = |t: &str| t.parse::<f64>().map_err(|_| format!("'{t}' is not a number"));
            let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
            if !(step > 0.0) || stop < start {
                return Err(format!("range '{s}' needs step > 0 and stop ≥ start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
        }
        _ => Err(format!("expected a comma list or start:stop:step, got '{s}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_lists() {
        let g = parse_grid("0.1:0.9:0.1").unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[2], 0.3);
        assert_eq!(g[8], 0.9);
        assert_eq!(parse_grid("0.95, 0.99").unwrap(), vec![0.95, 0.99]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("").is_err());
    }
}
