use std::path::Path;

use num_complex::Complex64;
use sublevel::{AlgebraicPoly, TrigPoly};

use crate::CliError;

/// Parses `3`, `-1.5`, `2i`, `1+2i`, `1e-3-4i`.
pub fn parse_complex(token: &str) -> Result<Complex64, CliError> {
    let t = token.trim();
    let bad = || CliError::Input(format!("cannot parse coefficient '{t}'"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t
            .parse::<f64>()
            .map(|re| Complex64::new(re, 0.0))
            .map_err(|_| bad());
    };
    // split at the last sign that is not leading and not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |s: &str| -> Result<f64, CliError> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => s.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(i) => Ok(Complex64::new(
            body[..i].parse().map_err(|_| bad())?,
            imag(&body[i..])?,
        )),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

pub fn parse_coeffs(list: &str) -> Result<Vec<Complex64>, CliError> {
    list.split(',').map(parse_complex).collect()
}

pub fn read_trig_poly(path: &Path) -> Result<TrigPoly, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Integer frequencies only; the spectrum is shifted to start at 0, which
/// leaves every Mahler measure unchanged.
pub fn trig_to_algebraic(f: &TrigPoly) -> Result<AlgebraicPoly, CliError> {
    let spectrum = f.spectrum();
    if spectrum.is_empty() {
        return Err(CliError::Input("polynomial is zero".into()));
    }
    if spectrum.iter().any(|w| w.fract() != 0.0 || w.abs() > 1e6) {
        return Err(CliError::Input(
            "Mahler measures need integer frequencies".into(),
        ));
    }
    let low = spectrum[0];
    let degree = (spectrum[spectrum.len() - 1] - low) as usize;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
    for t in f.terms() {
        coeffs[(t.omega - low) as usize] = t.coeff;
    }
    Ok(AlgebraicPoly::new(coeffs)?)
}

/// `lo,hi,count` → log-spaced grid.
pub fn parse_log_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let bad = || CliError::Input(format!("grid must be 'lo,hi,count', got '{spec}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo && count >= 1) {
        return Err(bad());
    }
    Ok(sublevel::meanmeasure::log_grid(lo, hi, count))
}
