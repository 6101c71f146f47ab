//! Unit-suffixed quantity parsing.
//!
//! Config files carry human units ("15 mW", "100 pJ/B", "0.5 GB/s", "500 MHz").
//! Everything is normalized to SI base units (W, J, s, B, Hz) on the way in.
//! A bare number is already in base units.

use std::fmt;

use thiserror::Error;

/// Physical dimension expected by a config field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Power,
    /// Energy per operation (J, optionally written J/MAC).
    Energy,
    EnergyPerByte,
    Time,
    Frequency,
    /// Events per second (frame rates).
    Rate,
    ByteRate,
    Bytes,
    BytesPerCycle,
    MacsPerCycle,
    Dimensionless,
}

impl Dimension {
    /// SI base unit symbol, as written in CSV unit rows.
    pub fn base_unit(self) -> &'static str {
        match self {
            Dimension::Power => "W",
            Dimension::Energy => "J",
            Dimension::EnergyPerByte => "J/B",
            Dimension::Time => "s",
            Dimension::Frequency => "Hz",
            Dimension::Rate => "1/s",
            Dimension::ByteRate => "B/s",
            Dimension::Bytes => "B",
            Dimension::BytesPerCycle => "B/cycle",
            Dimension::MacsPerCycle => "MAC/cycle",
            Dimension::Dimensionless => "1",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Power => "power (W)",
            Dimension::Energy => "energy (J)",
            Dimension::EnergyPerByte => "energy per byte (J/B)",
            Dimension::Time => "time (s)",
            Dimension::Frequency => "frequency (Hz)",
            Dimension::Rate => "rate (1/s)",
            Dimension::ByteRate => "bandwidth (B/s)",
            Dimension::Bytes => "size (B)",
            Dimension::BytesPerCycle => "bandwidth (B/cycle)",
            Dimension::MacsPerCycle => "throughput (MAC/cycle)",
            Dimension::Dimensionless => "dimensionless",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitError {
    #[error("cannot parse number in {0:?}")]
    BadNumber(String),
    #[error("unknown unit {unit:?} for {dimension}")]
    UnknownUnit { unit: String, dimension: Dimension },
}

/// Scale from a unit to the SI base, stored as an exact integer multiplier
/// or divisor so that e.g. "15 mW" lands on the same double as `0.015`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Scale {
    Mul(f64),
    Div(f64),
}

impl Scale {
    fn apply(self, x: f64) -> f64 {
        match self {
            Scale::Mul(m) => x * m,
            Scale::Div(d) => x / d,
        }
    }
}

const SI_PREFIXES: &[(&str, Scale)] = &[
    ("", Scale::Mul(1.0)),
    ("k", Scale::Mul(1e3)),
    ("K", Scale::Mul(1e3)),
    ("M", Scale::Mul(1e6)),
    ("G", Scale::Mul(1e9)),
    ("T", Scale::Mul(1e12)),
    ("m", Scale::Div(1e3)),
    ("u", Scale::Div(1e6)),
    ("µ", Scale::Div(1e6)),
    ("μ", Scale::Div(1e6)),
    ("n", Scale::Div(1e9)),
    ("p", Scale::Div(1e12)),
    ("f", Scale::Div(1e15)),
];

const BINARY_PREFIXES: &[(&str, Scale)] = &[
    ("Ki", Scale::Mul(1024.0)),
    ("Mi", Scale::Mul(1_048_576.0)),
    ("Gi", Scale::Mul(1_073_741_824.0)),
];

/// Base unit spellings accepted for each dimension. Prefixes attach to the
/// front of the base.
fn base_units(dim: Dimension) -> &'static [&'static str] {
    match dim {
        Dimension::Power => &["W"],
        Dimension::Energy => &["J", "J/MAC"],
        Dimension::EnergyPerByte => &["J/B"],
        Dimension::Time => &["s"],
        Dimension::Frequency => &["Hz"],
        Dimension::Rate => &["fps", "Hz", "1/s"],
        Dimension::ByteRate => &["B/s"],
        Dimension::Bytes => &["B"],
        Dimension::BytesPerCycle => &["B/cycle"],
        Dimension::MacsPerCycle => &["MAC/cycle"],
        Dimension::Dimensionless => &[],
    }
}

fn allows_prefix(dim: Dimension) -> bool {
    !matches!(
        dim,
        Dimension::Rate | Dimension::BytesPerCycle | Dimension::MacsPerCycle | Dimension::Dimensionless
    )
}

fn allows_binary_prefix(dim: Dimension) -> bool {
    matches!(dim, Dimension::Bytes | Dimension::ByteRate)
}

/// Resolve a unit string to its scale factor for `dim`.
fn unit_scale(unit: &str, dim: Dimension) -> Option<Scale> {
    for base in base_units(dim) {
        if unit == *base {
            return Some(Scale::Mul(1.0));
        }
        let Some(prefix) = unit.strip_suffix(base) else {
            continue;
        };
        if allows_binary_prefix(dim) {
            if let Some((_, s)) = BINARY_PREFIXES.iter().find(|(p, _)| *p == prefix) {
                return Some(*s);
            }
        }
        if allows_prefix(dim) {
            if let Some((_, s)) = SI_PREFIXES.iter().find(|(p, _)| *p == prefix) {
                return Some(*s);
            }
        }
    }
    None
}

/// Parse a quantity such as `"100 pJ/B"` or `"0.5GB/s"` into SI base units.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, UnitError> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E') && i > 0 && next_is_exponent(text, i)))
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let unit = unit.trim();
    // "inf" has no digits; allow it as a special magnitude.
    let (num, unit) = if num.is_empty() {
        match unit.split_once(char::is_whitespace) {
            Some((n, u)) => (n, u.trim()),
            None => (unit, ""),
        }
    } else {
        (num, unit)
    };
    let value: f64 = num
        .parse()
        .map_err(|_| UnitError::BadNumber(text.to_string()))?;
    if unit.is_empty() {
        return Ok(value);
    }
    let scale = unit_scale(unit, dim).ok_or_else(|| UnitError::UnknownUnit {
        unit: unit.to_string(),
        dimension: dim,
    })?;
    Ok(scale.apply(value))
}

fn next_is_exponent(text: &str, i: usize) -> bool {
    let rest = &text[i + 1..];
    let rest = rest.strip_prefix(['+', '-']).unwrap_or(rest);
    rest.starts_with(|c: char| c.is_ascii_digit())
}

/// Every unit spelling accepted for `dim` together with its scale applied to 1.
pub fn accepted_units(dim: Dimension) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for base in base_units(dim) {
        out.push((base.to_string(), 1.0));
        if allows_prefix(dim) {
            for (p, s) in SI_PREFIXES.iter().skip(1) {
                out.push((format!("{p}{base}"), s.apply(1.0)));
            }
        }
        if allows_binary_prefix(dim) {
            for (p, s) in BINARY_PREFIXES {
                out.push((format!("{p}{base}"), s.apply(1.0)));
            }
        }
    }
    out
}

/// Apply the scale of `unit` to `value`, same arithmetic as [`parse_quantity`].
pub fn to_si(value: f64, unit: &str, dim: Dimension) -> Option<f64> {
    unit_scale(unit, dim).map(|s| s.apply(value))
}
