//! Shared CSV output helpers.

use std::hash::Hasher;
use std::io::Write;

use fnv::FnvHasher;

use crate::error::Result;

pub const GENERATOR: &str = concat!("fput-core ", env!("CARGO_PKG_VERSION"));

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros removed,
/// exponent form when the decimal exponent is below -4 or at least 17.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Key/value provenance written as `#` comment lines on top of every CSV.
///
/// The hash covers every entry, so two files with the same hash were
/// produced from the same configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    table: String,
    entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(table: impl Into<String>) -> Self {
        Provenance {
            table: table.into(),
            entries: Vec::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// Same entries, different table name.
    pub fn for_table(&self, table: impl Into<String>) -> Self {
        Provenance {
            table: table.into(),
            entries: self.entries.clone(),
        }
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn config_hash(&self) -> u64 {
        let mut h = FnvHasher::default();
        h.write(GENERATOR.as_bytes());
        h.write(b"\n");
        for (k, v) in &self.entries {
            h.write(k.as_bytes());
            h.write(b"=");
            h.write(v.as_bytes());
            h.write(b"\n");
        }
        h.finish()
    }

    pub fn write_header<W: Write + ?Sized>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "# generator={GENERATOR} table={}", self.table)?;
        writeln!(out, "# config_hash={:016x}", self.config_hash())?;
        for (k, v) in &self.entries {
            writeln!(out, "# {k}={v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g17_matches_printf() {
        // Reference strings from printf("%.17g").
        assert_eq!(fmt_g17(0.1), "0.10000000000000001");
        assert_eq!(fmt_g17(1.0), "1");
        assert_eq!(fmt_g17(-2.5), "-2.5");
        assert_eq!(fmt_g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(fmt_g17(123456.0), "123456");
        assert_eq!(fmt_g17(1e17), "1e+17");
        assert_eq!(fmt_g17(0.0001), "0.0001");
        assert_eq!(fmt_g17(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(fmt_g17(0.0), "0");
    }

    #[test]
    fn provenance_hash_depends_on_entries() {
        let a = Provenance::new("x").with("beta", 0.3);
        let b = Provenance::new("x").with("beta", 0.4);
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash(), a.for_table("y").config_hash());
        let mut out = Vec::new();
        a.write_header(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.lines().all(|l| l.starts_with('#')));
        assert!(text.contains("# beta=0.3"));
    }

    proptest! {
        #[test]
        fn g17_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let s = fmt_g17(x);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
