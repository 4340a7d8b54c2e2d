//! Quantities with explicit unit suffixes, e.g. `"37.64 ghz"` or `"0.2 db/km"`.
//!
//! Numbers are rescaled by shifting their decimal exponent, not by
//! multiplying, so `"37.64 ghz"` parses to the same `f64` as `37.64e9`.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Frequency,
    SymbolRate,
    Length,
    Wavelength,
    Decibel,
    PowerDbm,
    Voltage,
    Responsivity,
    NoiseDensity,
    Attenuation,
    Dispersion,
    Percent,
}

impl Kind {
    /// Accepted suffixes with their decimal exponent relative to the base unit.
    /// The first entry is the base unit used when writing.
    fn units(self) -> &'static [(&'static str, i32)] {
        match self {
            Kind::Frequency => &[("hz", 0), ("khz", 3), ("mhz", 6), ("ghz", 9), ("thz", 12)],
            Kind::SymbolRate => &[("bd", 0), ("kbd", 3), ("mbd", 6), ("gbd", 9)],
            Kind::Length => &[("km", 0), ("m", -3)],
            Kind::Wavelength => &[("nm", 0), ("um", 3), ("pm", -3)],
            Kind::Decibel => &[("db", 0)],
            Kind::PowerDbm => &[("dbm", 0)],
            Kind::Voltage => &[("v", 0), ("mv", -3)],
            Kind::Responsivity => &[("a/w", 0), ("ma/mw", 0)],
            Kind::NoiseDensity => &[("a/rthz", 0), ("na/rthz", -9), ("pa/rthz", -12)],
            Kind::Attenuation => &[("db/km", 0)],
            Kind::Dispersion => &[("ps/nm/km", 0)],
            Kind::Percent => &[("%", 0), ("pct", 0)],
        }
    }

    pub fn base_unit(self) -> &'static str {
        self.units()[0].0
    }

    pub fn expected(self) -> String {
        let names: Vec<&str> = self.units().iter().map(|(u, _)| *u).collect();
        names.join(" | ")
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::Frequency => "frequency",
            Kind::SymbolRate => "symbol rate",
            Kind::Length => "length",
            Kind::Wavelength => "wavelength",
            Kind::Decibel => "ratio in dB",
            Kind::PowerDbm => "power in dBm",
            Kind::Voltage => "voltage",
            Kind::Responsivity => "responsivity",
            Kind::NoiseDensity => "current noise density",
            Kind::Attenuation => "attenuation",
            Kind::Dispersion => "dispersion",
            Kind::Percent => "percentage",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitError {
    pub input: String,
    pub kind: Kind,
    pub reason: String,
}

impl fmt::Display for UnitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "expected a {} like \"<number> <unit>\" with unit {}, got \"{}\" ({})",
            self.kind,
            self.kind.expected(),
            self.input,
            self.reason
        )
    }
}

/// Parse `"<number> <unit>"` into the base unit of `kind`.
pub fn parse_quantity(input: &str, kind: Kind) -> Result<f64, UnitError> {
    let err = |reason: &str| UnitError { input: input.to_string(), kind, reason: reason.to_string() };
    let s = input.trim();
    let split = s
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .ok_or_else(|| err("missing unit"))?;
    // An exponent marker directly before a unit letter belongs to the unit.
    let (mut num, mut unit) = s.split_at(split);
    if num.ends_with(['e', 'E']) {
        num = &num[..num.len() - 1];
        unit = &s[num.len()..];
    }
    let num = num.trim();
    let unit = unit.trim().to_ascii_lowercase();
    if num.is_empty() {
        return Err(err("missing number"));
    }
    let exp = kind.units().iter().find(|(u, _)| *u == unit).map(|(_, e)| *e).ok_or_else(|| err("unknown unit"))?;
    let (mantissa, own_exp) = match num.find(['e', 'E']) {
        Some(i) => (&num[..i], num[i + 1..].parse::<i32>().map_err(|_| err("bad exponent"))?),
        None => (num, 0),
    };
    let value: f64 = format!("{mantissa}e{}", own_exp + exp).parse().map_err(|_| err("bad number"))?;
    if !value.is_finite() {
        return Err(err("not finite"));
    }
    Ok(value)
}

/// Write a base-unit value so that [`parse_quantity`] returns it exactly.
pub fn format_quantity(value: f64, kind: Kind) -> String {
    format!("{value} {}", kind.base_unit())
}
