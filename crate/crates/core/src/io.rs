//! Channel JSON files and number formatting.
//!
//! Channel format:
//!
//! ```json
//! {"dim": 2, "kraus": [{"im": [[0, 0], [0, 0]], "re": [[1, 0], [0, 1]]}]}
//! ```
//!
//! Output JSON is canonical: keys sorted, floats written with 17 significant
//! digits so that every value survives a round trip.

use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, Serializer};
use serde_json::Value;

use crate::channels::KrausChannel;
use crate::matkit::{c, ComplexMatrix};
use crate::{Error, Result};

/// Default TP tolerance applied when loading channel files.
pub const LOAD_TP_TOL: f64 = 1e-6;

/// `%.{digits}g`-style formatting: scientific notation outside
/// `1e-5 ≤ |x| < 10^digits`, trailing zeros stripped.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { "-" } else { "+" };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// serde_json formatter emitting floats with 17 significant digits.
#[derive(Clone, Copy, Debug, Default)]
pub struct CanonicalFormatter;

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        let s = fmt_sig(value, 17);
        // JSON has no inf/NaN; serde_json maps those to null elsewhere.
        if value.is_finite() {
            writer.write_all(s.as_bytes())
        } else {
            writer.write_all(b"null")
        }
    }
}

/// Serializes through [`serde_json::Value`] so object keys come out sorted.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v: Value = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, CanonicalFormatter);
    v.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KrausJson {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelJson {
    dim: usize,
    kraus: Vec<KrausJson>,
}

fn matrix_from_json(dim: usize, k: &KrausJson, index: usize) -> Result<ComplexMatrix> {
    let zeros;
    let im = match &k.im {
        Some(im) => im,
        None => {
            zeros = vec![vec![0.0; dim]; dim];
            &zeros
        }
    };
    for (name, part) in [("re", &k.re), ("im", im)] {
        if part.len() != dim || part.iter().any(|row| row.len() != dim) {
            return Err(Error::validation(format!(
                "kraus[{index}].{name} must be {dim}x{dim}"
            )));
        }
    }
    Ok(ComplexMatrix::from_fn(dim, dim, |i, j| {
        c(k.re[i][j], im[i][j])
    }))
}

fn matrix_to_json(m: &ComplexMatrix) -> KrausJson {
    let n = m.rows();
    KrausJson {
        re: (0..n)
            .map(|i| (0..m.cols()).map(|j| m[(i, j)].re).collect())
            .collect(),
        im: Some(
            (0..n)
                .map(|i| (0..m.cols()).map(|j| m[(i, j)].im).collect())
                .collect(),
        ),
    }
}

/// Parses a channel and checks trace preservation to `tp_tol`.
pub fn channel_from_json(text: &str, tp_tol: f64) -> Result<KrausChannel> {
    let raw: ChannelJson = serde_json::from_str(text)
        .map_err(|e| Error::validation(format!("malformed channel JSON: {e}")))?;
    if raw.kraus.is_empty() {
        return Err(Error::validation("channel JSON has no Kraus operators"));
    }
    let ops = raw
        .kraus
        .iter()
        .enumerate()
        .map(|(i, k)| matrix_from_json(raw.dim, k, i))
        .collect::<Result<Vec<_>>>()?;
    let ch = KrausChannel::new(ops)?;
    ch.ensure_trace_preserving(tp_tol)?;
    Ok(ch)
}

pub fn channel_to_json(ch: &KrausChannel) -> Result<String> {
    let raw = ChannelJson {
        dim: ch.dim(),
        kraus: ch.kraus_ops().iter().map(matrix_to_json).collect(),
    };
    to_canonical_json(&raw)
}

pub fn read_channel(path: &Path, tp_tol: f64) -> Result<KrausChannel> {
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
    channel_from_json(&text, tp_tol).map_err(|e| match e {
        Error::Validation(msg) => Error::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_channel(path: &Path, ch: &KrausChannel) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{}", channel_to_json(ch)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{bit_flip, published_pair, random_channel};
    use proptest::prelude::*;

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(0.0, 12), "0");
        assert_eq!(fmt_sig(1.0, 12), "1");
        assert_eq!(fmt_sig(0.2, 12), "0.2");
        assert_eq!(fmt_sig(0.2, 17), "0.20000000000000001");
        assert_eq!(fmt_sig(1.0 / 6.0, 12), "0.166666666667");
        assert_eq!(fmt_sig(-2.5e-7, 12), "-2.5e-07");
        assert_eq!(fmt_sig(1e-2, 12), "0.01");
        assert_eq!(fmt_sig(123456.0, 3), "1.23e+05");
        assert_eq!(fmt_sig(100.0, 12), "100");
    }

    #[test]
    fn canonical_json_sorts_keys() {
        let v = serde_json::json!({"z": 1.0, "a": 0.1, "m": {"y": 2, "b": 0.5}});
        assert_eq!(
            to_canonical_json(&v).unwrap(),
            r#"{"a":0.10000000000000001,"m":{"b":0.5,"y":2},"z":1}"#
        );
    }

    #[test]
    fn channel_round_trip_is_byte_stable() {
        let ch = bit_flip(0.2).unwrap();
        let text = channel_to_json(&ch).unwrap();
        assert!(text.starts_with(r#"{"dim":2,"kraus":[{"im":"#));
        let back = channel_from_json(&text, LOAD_TP_TOL).unwrap();
        assert_eq!(back, ch);
        assert_eq!(channel_to_json(&back).unwrap(), text);
    }

    #[test]
    fn published_pair_loads_at_default_tolerance() {
        let (e, _) = published_pair();
        let text = channel_to_json(&e).unwrap();
        assert!(channel_from_json(&text, LOAD_TP_TOL).is_ok());
        assert!(channel_from_json(&text, 1e-9).is_err());
    }

    #[test]
    fn malformed_channels_are_rejected() {
        for bad in [
            "",
            "{}",
            r#"{"dim": 2, "kraus": []}"#,
            r#"{"dim": 2, "kraus": [{"re": [[1, 0]], "im": [[0, 0]]}]}"#,
            r#"{"dim": 2, "kraus": [{"re": [[2, 0], [0, 2]]}]}"#,
            r#"{"dim": 2, "kraus": [{"re": [[1, 0], [0, 1]]}], "extra": 1}"#,
        ] {
            assert!(
                matches!(
                    channel_from_json(bad, LOAD_TP_TOL),
                    Err(Error::Validation(_))
                ),
                "{bad}"
            );
        }
        // Missing imaginary part means real.
        let ok = r#"{"dim": 2, "kraus": [{"re": [[1, 0], [0, 1]]}]}"#;
        assert!(channel_from_json(ok, LOAD_TP_TOL).is_ok());
    }

    proptest! {
        #[test]
        fn json_round_trip_random_channels(seed in 0u64..10_000, n in 2usize..4, k in 1usize..4) {
            let ch = random_channel(n, k, seed).unwrap();
            let text = channel_to_json(&ch).unwrap();
            let back = channel_from_json(&text, 1e-9).unwrap();
            prop_assert_eq!(&back, &ch);
            prop_assert_eq!(channel_to_json(&back).unwrap(), text);
        }

        #[test]
        fn sig17_round_trips(x in proptest::num::f64::NORMAL) {
            let s = fmt_sig(x, 17);
            prop_assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
