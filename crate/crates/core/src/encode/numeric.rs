//! Fixed-width digit encoding of decimal values.
//!
//! A numeric column is turned into a character grid: every value is rounded
//! to the column precision, written in a canonical decimal form, zero-padded
//! on both sides so all values share one width with the decimal point in one
//! fixed position, and split into equal-width chunks. Each chunk position
//! then behaves like a small categorical column.

use crate::error::{Error, Result};

/// Canonical decimal form of `s` rounded to `precision` fraction digits.
///
/// Rounding is half-away-from-zero on the first dropped digit. The result
/// carries no `+`, no leading zeros, and no trailing fraction zeros beyond
/// the first (`-3.0`, not `-3.00`); with `precision == 0` it is a bare
/// integer; zero is unsigned (`0.0` / `0`).
pub fn canonical_cell(s: &str, precision: usize) -> Result<String> {
    let (neg, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (int_raw, frac_raw) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    let all_digits =
        |part: &str| !part.is_empty() && part.bytes().all(|b| b.is_ascii_digit());
    if !(all_digits(int_raw) || int_raw.is_empty())
        || !(all_digits(frac_raw) || frac_raw.is_empty())
        || (int_raw.is_empty() && frac_raw.is_empty())
    {
        return Err(Error::Data(format!("`{s}` is not a decimal number")));
    }

    // |value| as digits with exactly `precision` fraction places
    let mut digits: Vec<u8> = int_raw.bytes().map(|b| b - b'0').collect();
    let frac: Vec<u8> = frac_raw.bytes().map(|b| b - b'0').collect();
    let keep = frac.len().min(precision);
    digits.extend_from_slice(&frac[..keep]);
    digits.resize(digits.len() + (precision - keep), 0);
    if frac.get(precision).is_some_and(|&d| d >= 5) {
        let mut carry = 1u8;
        for d in digits.iter_mut().rev() {
            let v = *d + carry;
            *d = v % 10;
            carry = v / 10;
            if carry == 0 {
                break;
            }
        }
        if carry > 0 {
            digits.insert(0, carry);
        }
    }

    let split = digits.len() - precision;
    let int_digits = &digits[..split];
    let mut frac_digits = digits[split..].to_vec();
    while frac_digits.len() > 1 && frac_digits.last() == Some(&0) {
        frac_digits.pop();
    }

    let is_zero = digits.iter().all(|&d| d == 0);
    let mut out = String::new();
    if neg && !is_zero {
        out.push('-');
    }
    let int_trimmed: Vec<u8> = int_digits.iter().copied().skip_while(|&d| d == 0).collect();
    if int_trimmed.is_empty() {
        out.push('0');
    } else {
        out.extend(int_trimmed.iter().map(|&d| (b'0' + d) as char));
    }
    if precision > 0 {
        out.push('.');
        out.extend(frac_digits.iter().map(|&d| (b'0' + d) as char));
    }
    Ok(out)
}

fn pre_point_len(s: &str) -> usize {
    s.find('.').unwrap_or(s.len())
}

/// Character-grid geometry fitted to one numeric column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumericLayout {
    /// Fraction digits values are rounded to.
    pub precision: usize,
    /// Characters before the decimal point (sign included) after padding.
    pub pre_width: usize,
    /// Full padded string length.
    pub total_width: usize,
    /// Characters per chunk.
    pub partition: usize,
    /// Chunks per value: `ceil(total_width / partition)`.
    pub n_chunks: usize,
}

impl NumericLayout {
    /// Fits the grid geometry to a column of canonical value strings.
    pub fn fit(canonicals: &[String], precision: usize, partition: usize) -> Result<Self> {
        if partition == 0 {
            return Err(Error::Config("partition size must be at least 1".into()));
        }
        let (pre_width, max_frac) = if canonicals.is_empty() {
            (1, 1)
        } else {
            let mut pre = 0;
            let mut frac = 1;
            for c in canonicals {
                let p = pre_point_len(c);
                pre = pre.max(p);
                if precision > 0 {
                    frac = frac.max(c.len() - p - 1);
                }
            }
            (pre, frac)
        };
        let total_width = if precision > 0 { pre_width + 1 + max_frac } else { pre_width };
        Ok(NumericLayout {
            precision,
            pre_width,
            total_width,
            partition,
            n_chunks: total_width.div_ceil(partition),
        })
    }

    /// The padded, sign-fronted fixed-width form of a canonical value.
    ///
    /// Zeros are first added on the left until the pre-point width matches
    /// (`-3.0` → `00-3.0`), then on the right until the total width matches
    /// (`00-3.00`); finally any sign moves to the leftmost slot
    /// (`-003.00`).
    pub fn align(&self, canonical: &str) -> Result<String> {
        let pre = pre_point_len(canonical);
        if pre > self.pre_width {
            return Err(Error::Data(format!(
                "value `{canonical}` is wider than the fitted column ({} > {} leading characters)",
                pre, self.pre_width
            )));
        }
        let mut t = String::with_capacity(self.total_width);
        for _ in pre..self.pre_width {
            t.push('0');
        }
        t.push_str(canonical);
        if t.len() > self.total_width {
            return Err(Error::Data(format!(
                "value `{canonical}` has more fraction digits than the fitted column"
            )));
        }
        while t.len() < self.total_width {
            t.push('0');
        }
        if let Some(pos) = t.find('-') {
            if pos > 0 {
                t.remove(pos);
                t.insert(0, '-');
            }
        }
        Ok(t)
    }

    /// Width of chunk `i` (the last chunk may be narrower).
    pub fn chunk_width(&self, i: usize) -> usize {
        if i + 1 == self.n_chunks {
            self.total_width - self.partition * (self.n_chunks - 1)
        } else {
            self.partition
        }
    }

    /// Splits a canonical value into its chunk tokens.
    pub fn tokenize(&self, canonical: &str) -> Result<Vec<String>> {
        let aligned = self.align(canonical)?;
        Ok(aligned
            .as_bytes()
            .chunks(self.partition)
            .map(|c| String::from_utf8(c.to_vec()).expect("ascii chunk"))
            .collect())
    }

    /// Reassembles chunk tokens into the canonical value they encode.
    ///
    /// The joined string must have the fitted shape: the right width, an
    /// optional sign in the leftmost slot, the decimal point exactly at the
    /// fitted position, digits everywhere else.
    pub fn detokenize(&self, chunks: &[&str]) -> Result<String> {
        if chunks.len() != self.n_chunks {
            return Err(Error::Data(format!(
                "expected {} chunks, got {}",
                self.n_chunks,
                chunks.len()
            )));
        }
        for (i, c) in chunks.iter().enumerate() {
            if c.len() != self.chunk_width(i) {
                return Err(Error::Data(format!(
                    "chunk {i} has width {}, expected {}",
                    c.len(),
                    self.chunk_width(i)
                )));
            }
        }
        let joined: String = chunks.concat();
        for (i, b) in joined.bytes().enumerate() {
            let ok = if self.precision > 0 && i == self.pre_width {
                b == b'.'
            } else if i == 0 {
                b == b'-' || b.is_ascii_digit()
            } else {
                b.is_ascii_digit()
            };
            if !ok {
                return Err(Error::Data(format!(
                    "malformed digit string `{joined}` at position {i}"
                )));
            }
        }
        canonical_cell(&joined, self.precision)
    }
}
