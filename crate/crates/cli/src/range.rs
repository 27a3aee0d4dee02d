//! Grid syntax: `start:stop:step`, `start:stop` (unit step), comma lists and
//! single values.

/// Points closer than this (in units of the step) past `stop` still count.
const STOP_TOL: f64 = 1e-12;
const MAX_POINTS: usize = 10_000_000;

pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty range".into());
    }
    let num = |s: &str| -> Result<f64, String> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| format!("'{s}' is not a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("'{s}' is not finite"))
        }
    };
    if text.contains(',') {
        return text.split(',').map(num).collect();
    }
    let parts: Vec<&str> = text.split(':').collect();
    match parts.len() {
        1 => Ok(vec![num(parts[0])?]),
        2 | 3 => {
            let start = num(parts[0])?;
            let stop = num(parts[1])?;
            let step = if parts.len() == 3 {
                num(parts[2])?
            } else {
                1.0
            };
            if step <= 0.0 {
                return Err(format!("step must be positive in '{text}'"));
            }
            if stop < start {
                return Err(format!("stop is below start in '{text}'"));
            }
            let span = (stop - start) / step + STOP_TOL * (1.0 + (stop - start).abs() / step);
            let n = span.floor() as usize + 1;
            if n > MAX_POINTS {
                return Err(format!("'{text}' has {n} points, limit is {MAX_POINTS}"));
            }
            Ok((0..n).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(format!("malformed range '{text}'")),
    }
}

/// Positive integer sizes with the same syntax.
pub fn parse_sizes(text: &str) -> Result<Vec<usize>, String> {
    parse_range(text)?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 && v <= 1e9 {
                Ok(v as usize)
            } else {
                Err(format!("{v} is not a positive integer size"))
            }
        })
        .collect()
}

pub fn parse_value(text: &str) -> Result<f64, String> {
    match parse_range(text)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(format!("expected a single number, got '{text}'")),
    }
}
