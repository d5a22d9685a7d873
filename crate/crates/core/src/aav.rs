use std::cmp::Ordering;
use std::fmt;

use crate::cost::Cost;

/// Average arc-value `value / arcs`, compared exactly by cross-multiplication.
#[derive(Debug, Clone, Copy)]
pub struct Aav {
    pub value: Cost,
    pub arcs: usize,
}

impl Aav {
    pub fn new(value: Cost, arcs: usize) -> Self {
        assert!(arcs > 0, "average over zero arcs");
        Aav { value, arcs }
    }

    /// True when `value / arcs < self`.
    #[inline]
    pub fn exceeds(&self, value: Cost, arcs: usize) -> bool {
        (value as i128) * (self.arcs as i128) < (self.value as i128) * (arcs as i128)
    }

    pub fn to_f64(&self) -> f64 {
        self.value as f64 / self.arcs as f64
    }

    /// Decimal rendering rounded half away from zero, computed exactly.
    pub fn to_decimal_string(&self, places: u32) -> String {
        let scale = 10i128.pow(places);
        let num = self.value as i128 * scale;
        let den = self.arcs as i128;
        let neg = num < 0;
        let abs = num.abs();
        let mut q = abs / den;
        if (abs % den) * 2 >= den {
            q += 1;
        }
        let int = q / scale;
        let frac = q % scale;
        let sign = if neg && q != 0 { "-" } else { "" };
        if places == 0 {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{frac:0width$}", width = places as usize)
        }
    }
}

impl PartialEq for Aav {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Aav {}

impl PartialOrd for Aav {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Aav {
    fn cmp(&self, other: &Self) -> Ordering {
        let l = self.value as i128 * other.arcs as i128;
        let r = other.value as i128 * self.arcs as i128;
        l.cmp(&r)
    }
}

impl fmt::Display for Aav {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string(6))
    }
}
