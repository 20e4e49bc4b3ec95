//! Numeric literal arithmetic: exact rationals with a float fallback on overflow.

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedMul, One, Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Num {
    Rat(Rational64),
    Real(f64),
}

impl Num {
    pub fn int(n: i64) -> Num {
        Num::Rat(Rational64::from_integer(n))
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Num::Rat(r) => r.to_f64().unwrap_or(f64::NAN),
            Num::Real(v) => v,
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Num::Rat(r) => r.is_zero(),
            Num::Real(v) => v == 0.0,
        }
    }

    pub fn is_one(self) -> bool {
        match self {
            Num::Rat(r) => r.is_one(),
            Num::Real(v) => v == 1.0,
        }
    }

    pub fn is_negative(self) -> bool {
        match self {
            Num::Rat(r) => r.is_negative(),
            Num::Real(v) => v < 0.0,
        }
    }

    /// Integer value if this is an exact integer.
    pub fn as_integer(self) -> Option<i64> {
        match self {
            Num::Rat(r) if r.is_integer() => Some(*r.numer()),
            _ => None,
        }
    }

    pub fn add(self, o: Num) -> Num {
        match (self, o) {
            (Num::Rat(a), Num::Rat(b)) => match a.checked_add(&b) {
                Some(r) => Num::Rat(r),
                None => Num::Real(self.to_f64() + o.to_f64()),
            },
            _ => Num::Real(self.to_f64() + o.to_f64()),
        }
    }

    pub fn mul(self, o: Num) -> Num {
        match (self, o) {
            (Num::Rat(a), Num::Rat(b)) => match a.checked_mul(&b) {
                Some(r) => Num::Rat(r),
                None => Num::Real(self.to_f64() * o.to_f64()),
            },
            _ => Num::Real(self.to_f64() * o.to_f64()),
        }
    }

    pub fn neg(self) -> Num {
        match self {
            Num::Rat(r) => Num::Rat(-r),
            Num::Real(v) => Num::Real(-v),
        }
    }

    /// Exact integer power where possible. `None` when the result is undefined (0^-n).
    pub fn powi(self, n: i64) -> Option<Num> {
        if self.is_zero() && n < 0 {
            return None;
        }
        match self {
            Num::Rat(r) if n.unsigned_abs() <= 64 => {
                let mut acc = Rational64::one();
                let base = if n < 0 { r.recip() } else { r };
                for _ in 0..n.unsigned_abs() {
                    match acc.checked_mul(&base) {
                        Some(v) => acc = v,
                        None => return Some(Num::Real(r.to_f64()?.powi(n as i32))),
                    }
                }
                Some(Num::Rat(acc))
            }
            _ => Some(Num::Real(self.to_f64().powi(n as i32))),
        }
    }
}

/// Best small-denominator rational for `v`, if `v` is within `tol` of one.
pub fn snap_rational(v: f64, max_den: i64, tol: f64) -> Option<Rational64> {
    if !v.is_finite() || v.abs() > 1e9 {
        return None;
    }
    for den in 1..=max_den {
        let num = (v * den as f64).round();
        if (num / den as f64 - v).abs() <= tol {
            return Some(Rational64::new(num as i64, den));
        }
    }
    None
}

/// Literal for a parameter value: exact when it is a simple rational.
pub fn literal_for(v: f64) -> Num {
    match snap_rational(v, 12, 1e-15) {
        Some(r) => Num::Rat(r),
        None => Num::Real(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_powers() {
        let half = Num::Rat(Rational64::new(1, 2));
        assert_eq!(half.powi(-3), Some(Num::int(8)));
        assert_eq!(Num::int(0).powi(-1), None);
    }

    #[test]
    fn snapping() {
        assert_eq!(snap_rational(0.3333333333334, 12, 1e-9), Some(Rational64::new(1, 3)));
        assert_eq!(snap_rational(0.1234567, 12, 1e-9), None);
    }
}
