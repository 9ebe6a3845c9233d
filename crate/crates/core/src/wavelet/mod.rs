//! Compactly supported orthonormal wavelets.
//!
//! Father and mother functions are tabulated on a dyadic grid by exact
//! two-scale refinement and evaluated by interpolation. Multivariate basis
//! functions are tensor products; the type `q` of a [`BasisIndex`] selects the
//! mother in coordinate `a` when bit `a` of `q` is set (`q = 0` is the pure
//! father tensor).

mod basis;
mod filters;
mod table;

pub use basis::{active_translations, BoundingBox, WaveletBasis, DEFAULT_DEPTH, LEVEL_HEADROOM};
pub use table::{build_table, DyadicTable, Kind, MAX_TABLE_ENTRIES};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// An orthonormal wavelet family. The number is the count of vanishing moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveletFamily {
    Haar,
    Daubechies(u8),
    Symlet(u8),
}

impl WaveletFamily {
    pub const MIN_ORDER: u8 = 2;
    pub const MAX_ORDER: u8 = 10;

    pub fn new_daubechies(order: u8) -> Result<Self> {
        Self::check_order(order, "db").map(|_| WaveletFamily::Daubechies(order))
    }

    pub fn new_symlet(order: u8) -> Result<Self> {
        Self::check_order(order, "sym").map(|_| WaveletFamily::Symlet(order))
    }

    fn check_order(order: u8, prefix: &str) -> Result<()> {
        if (Self::MIN_ORDER..=Self::MAX_ORDER).contains(&order) {
            Ok(())
        } else {
            Err(Error::UnsupportedFamily(format!("{prefix}{order}")))
        }
    }

    pub fn vanishing_moments(&self) -> u32 {
        match *self {
            WaveletFamily::Haar => 1,
            WaveletFamily::Daubechies(n) | WaveletFamily::Symlet(n) => n as u32,
        }
    }

    /// Lowpass synthesis filter `h`, with `sum(h) = sqrt(2)`.
    pub fn lowpass_filter(&self) -> &'static [f64] {
        use filters::*;
        match *self {
            WaveletFamily::Haar => &HAAR,
            WaveletFamily::Daubechies(n) => match n {
                2 => &DB2,
                3 => &DB3,
                4 => &DB4,
                5 => &DB5,
                6 => &DB6,
                7 => &DB7,
                8 => &DB8,
                9 => &DB9,
                10 => &DB10,
                _ => unreachable!("order checked at construction"),
            },
            WaveletFamily::Symlet(n) => match n {
                2 => &SYM2,
                3 => &SYM3,
                4 => &SYM4,
                5 => &SYM5,
                6 => &SYM6,
                7 => &SYM7,
                8 => &SYM8,
                9 => &SYM9,
                10 => &SYM10,
                _ => unreachable!("order checked at construction"),
            },
        }
    }

    /// Highpass filter from the quadrature-mirror relation `g_k = (-1)^k h_{L-1-k}`.
    pub fn highpass_filter(&self) -> Vec<f64> {
        let h = self.lowpass_filter();
        let last = h.len() - 1;
        (0..h.len())
            .map(|k| if k % 2 == 0 { h[last - k] } else { -h[last - k] })
            .collect()
    }

    /// Right end of the common support `[0, 2N - 1]` of father and mother.
    pub fn support_len(&self) -> i64 {
        self.lowpass_filter().len() as i64 - 1
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WaveletFamily::Haar => write!(f, "haar"),
            WaveletFamily::Daubechies(n) => write!(f, "db{n}"),
            WaveletFamily::Symlet(n) => write!(f, "sym{n}"),
        }
    }
}

impl FromStr for WaveletFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let unsupported = || Error::UnsupportedFamily(s.to_string());
        if lower == "haar" || lower == "db1" {
            return Ok(WaveletFamily::Haar);
        }
        let (prefix, digits) = if let Some(rest) = lower.strip_prefix("sym") {
            ("sym", rest)
        } else if let Some(rest) = lower.strip_prefix("db") {
            ("db", rest)
        } else {
            return Err(unsupported());
        };
        let order: u8 = digits.parse().map_err(|_| unsupported())?;
        match prefix {
            "sym" => WaveletFamily::new_symlet(order).map_err(|_| unsupported()),
            _ => WaveletFamily::new_daubechies(order).map_err(|_| unsupported()),
        }
    }
}

/// Identifies one basis function: level `j`, translation `z`, tensor type `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex {
    pub level: i32,
    pub translation: Vec<i64>,
    pub kind: u32,
}

impl BasisIndex {
    pub fn new(level: i32, translation: Vec<i64>, kind: u32) -> Result<Self> {
        let d = translation.len();
        if d == 0 || d >= 32 || kind >= (1u32 << d) {
            return Err(Error::InvalidParameter(format!(
                "tensor type {kind} invalid for dimension {d}"
            )));
        }
        Ok(BasisIndex {
            level,
            translation,
            kind,
        })
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    /// Whether coordinate `axis` uses the mother wavelet.
    pub fn is_mother(&self, axis: usize) -> bool {
        (self.kind >> axis) & 1 == 1
    }

    /// Lexicographic key on (j, q, z) used for deterministic tie-breaking.
    pub fn sort_key(&self) -> (i32, u32, &[i64]) {
        (self.level, self.kind, &self.translation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_families() -> Vec<WaveletFamily> {
        let mut v = vec![WaveletFamily::Haar];
        for n in 2..=10 {
            v.push(WaveletFamily::Daubechies(n));
            v.push(WaveletFamily::Symlet(n));
        }
        v
    }

    #[test]
    fn filters_satisfy_two_scale_normalization() {
        for f in all_families() {
            let s: f64 = f.lowpass_filter().iter().sum();
            assert!((s - 2f64.sqrt()).abs() < 1e-12, "{f}: {s}");
        }
    }

    #[test]
    fn filters_have_orthonormal_shifts() {
        for f in all_families() {
            let h = f.lowpass_filter();
            for m in 0..h.len() / 2 {
                let dot: f64 = (0..h.len() - 2 * m).map(|k| h[k] * h[k + 2 * m]).sum();
                let expected = if m == 0 { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-10, "{f} shift {m}: {dot}");
            }
        }
    }

    #[test]
    fn highpass_is_orthogonal_to_lowpass() {
        for f in all_families() {
            let h = f.lowpass_filter();
            let g = f.highpass_filter();
            let sum_g: f64 = g.iter().sum();
            assert!(sum_g.abs() < 1e-11, "{f}: {sum_g}");
            for m in 0..h.len() / 2 {
                let dot: f64 = (0..h.len() - 2 * m).map(|k| h[k + 2 * m] * g[k]).sum();
                assert!(dot.abs() < 1e-10, "{f} shift {m}");
            }
        }
    }

    #[test]
    fn family_names_round_trip() {
        for f in all_families() {
            assert_eq!(f.name().parse::<WaveletFamily>().unwrap(), f);
        }
        assert_eq!("db1".parse::<WaveletFamily>().unwrap(), WaveletFamily::Haar);
        assert_eq!("DB4".parse::<WaveletFamily>().unwrap(), WaveletFamily::Daubechies(4));
        for bad in ["db11", "sym1", "bior2.2", "coif3", "db", ""] {
            assert!(matches!(bad.parse::<WaveletFamily>(), Err(Error::UnsupportedFamily(_))));
        }
    }

    #[test]
    fn support_matches_order() {
        assert_eq!(WaveletFamily::Haar.support_len(), 1);
        assert_eq!(WaveletFamily::Daubechies(2).support_len(), 3);
        assert_eq!(WaveletFamily::Symlet(6).support_len(), 11);
    }

    #[test]
    fn basis_index_rejects_bad_kind() {
        assert!(BasisIndex::new(0, vec![0, 0], 3).is_ok());
        assert!(BasisIndex::new(0, vec![0, 0], 4).is_err());
        assert!(BasisIndex::new(0, vec![], 0).is_err());
    }
}
