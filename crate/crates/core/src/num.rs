//! Exact rational numbers.
//!
//! Values that fit in `i128 / i128` stay on a fast machine-word path; anything
//! larger is promoted to an arbitrary-precision [`BigRational`]. The two
//! representations never overlap, so structural equality and hashing agree
//! with numeric equality.

use alloc::string::{String, ToString};
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};
use core::ops::{Add, Div, Mul, Neg, Sub};
use core::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

#[derive(Clone)]
enum Repr {
    /// Reduced, denominator strictly positive.
    Small(i128, i128),
    /// Reduced; only used when the value does not fit `Small`.
    Big(BigRational),
}

/// An exact rational number.
#[derive(Clone)]
pub struct Rat(Repr);

/// Error returned when a string is not a valid rational literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRatError;

impl fmt::Display for ParseRatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid rational literal")
    }
}

fn gcd_u(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn small(n: i128, d: i128) -> Option<Rat> {
    if d == 0 {
        return None;
    }
    let g = gcd_u(n.unsigned_abs(), d.unsigned_abs());
    let g = i128::try_from(g).ok()?;
    let (mut n, mut d) = (n / g, d / g);
    if d < 0 {
        n = n.checked_neg()?;
        d = d.checked_neg()?;
    }
    Some(Rat(Repr::Small(n, d)))
}

impl Rat {
    pub fn zero() -> Rat {
        Rat(Repr::Small(0, 1))
    }

    pub fn one() -> Rat {
        Rat(Repr::Small(1, 1))
    }

    pub fn from_int(n: i64) -> Rat {
        Rat(Repr::Small(n as i128, 1))
    }

    /// `n / d`; returns `None` when `d` is zero.
    pub fn new(n: i64, d: i64) -> Option<Rat> {
        small(n as i128, d as i128)
    }

    pub fn from_big(r: BigRational) -> Rat {
        if let (Some(n), Some(d)) = (r.numer().to_i128(), r.denom().to_i128()) {
            if let Some(x) = small(n, d) {
                return x;
            }
        }
        Rat(Repr::Big(r))
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(b) => b.clone(),
        }
    }

    /// Exact value of a finite binary64.
    pub fn from_f64_exact(x: f64) -> Option<Rat> {
        BigRational::from_float(x).map(Rat::from_big)
    }

    /// The rational spelled by the shortest decimal that round-trips to `x`.
    ///
    /// `0.1_f64` becomes `1/10`, and `to_f64` maps it back to the same bits.
    pub fn from_f64_shortest(x: f64) -> Option<Rat> {
        if !x.is_finite() {
            return None;
        }
        alloc::format!("{x:e}").parse().ok()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_one(&self) -> bool {
        matches!(self.0, Repr::Small(1, 1))
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    pub fn signum(&self) -> i32 {
        match &self.0 {
            Repr::Small(n, _) => n.signum() as i32,
            Repr::Big(b) => {
                if b.is_negative() {
                    -1
                } else if b.is_zero() {
                    0
                } else {
                    1
                }
            }
        }
    }

    pub fn abs(&self) -> Rat {
        if self.signum() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Rat> {
        if self.is_zero() {
            return None;
        }
        Some(match &self.0 {
            Repr::Small(n, d) => small(*d, *n).unwrap_or_else(|| Rat::from_big(self.to_big().recip())),
            Repr::Big(b) => Rat::from_big(b.recip()),
        })
    }

    pub fn pow(&self, e: u32) -> Rat {
        let mut acc = Rat::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Integer value if this rational is integral and fits `i64`.
    pub fn to_i64(&self) -> Option<i64> {
        match &self.0 {
            Repr::Small(n, 1) => i64::try_from(*n).ok(),
            _ => None,
        }
    }

    /// Nearest binary64.
    pub fn to_f64(&self) -> f64 {
        const LIM: i128 = 1 << 53;
        match &self.0 {
            Repr::Small(n, d) if n.abs() < LIM && *d < LIM => *n as f64 / *d as f64,
            _ => self.to_big().to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Numerator and denominator as decimal strings (denominator positive).
    pub fn parts(&self) -> (String, String) {
        match &self.0 {
            Repr::Small(n, d) => (n.to_string(), d.to_string()),
            Repr::Big(b) => (b.numer().to_string(), b.denom().to_string()),
        }
    }

    fn checked_small_add(a: &Rat, b: &Rat) -> Option<Rat> {
        match (&a.0, &b.0) {
            (Repr::Small(n1, d1), Repr::Small(n2, d2)) => {
                let g = gcd_u(d1.unsigned_abs(), d2.unsigned_abs()) as i128;
                let l = d1.checked_mul(d2 / g)?;
                let n = n1.checked_mul(d2 / g)?.checked_add(n2.checked_mul(d1 / g)?)?;
                small(n, l)
            }
            _ => None,
        }
    }

    fn checked_small_mul(a: &Rat, b: &Rat) -> Option<Rat> {
        match (&a.0, &b.0) {
            (Repr::Small(n1, d1), Repr::Small(n2, d2)) => {
                let g1 = (gcd_u(n1.unsigned_abs(), d2.unsigned_abs()) as i128).max(1);
                let g2 = (gcd_u(n2.unsigned_abs(), d1.unsigned_abs()) as i128).max(1);
                let n = (n1 / g1).checked_mul(n2 / g2)?;
                let d = (d1 / g2).checked_mul(d2 / g1)?;
                small(n, d)
            }
            _ => None,
        }
    }
}

impl Default for Rat {
    fn default() -> Rat {
        Rat::zero()
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Rat {
        Rat::from_int(n)
    }
}

impl From<i32> for Rat {
    fn from(n: i32) -> Rat {
        Rat::from_int(n as i64)
    }
}

impl From<usize> for Rat {
    fn from(n: usize) -> Rat {
        Rat(Repr::Small(n as i128, 1))
    }
}

impl<'a> Add<&'a Rat> for &'a Rat {
    type Output = Rat;
    fn add(self, o: &Rat) -> Rat {
        Rat::checked_small_add(self, o).unwrap_or_else(|| Rat::from_big(self.to_big() + o.to_big()))
    }
}

impl<'a> Mul<&'a Rat> for &'a Rat {
    type Output = Rat;
    fn mul(self, o: &Rat) -> Rat {
        Rat::checked_small_mul(self, o).unwrap_or_else(|| Rat::from_big(self.to_big() * o.to_big()))
    }
}

impl<'a> Sub<&'a Rat> for &'a Rat {
    type Output = Rat;
    fn sub(self, o: &Rat) -> Rat {
        self + &(-o.clone())
    }
}

/// Panics on division by zero, like the integer types; use [`Rat::recip`]
/// to check first.
impl<'a> Div<&'a Rat> for &'a Rat {
    type Output = Rat;
    fn div(self, o: &Rat) -> Rat {
        self * &o.recip().expect("division by zero")
    }
}

macro_rules! by_value {
    ($tr:ident, $m:ident) => {
        impl $tr<Rat> for Rat {
            type Output = Rat;
            fn $m(self, o: Rat) -> Rat {
                (&self).$m(&o)
            }
        }
    };
}
by_value!(Add, add);
by_value!(Sub, sub);
by_value!(Mul, mul);
by_value!(Div, div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        match self.0 {
            Repr::Small(n, d) => match n.checked_neg() {
                Some(m) => Rat(Repr::Small(m, d)),
                None => Rat::from_big(-self_big(n, d)),
            },
            Repr::Big(b) => Rat::from_big(-b),
        }
    }
}

fn self_big(n: i128, d: i128) -> BigRational {
    BigRational::new_raw(BigInt::from(n), BigInt::from(d))
}

impl PartialEq for Rat {
    fn eq(&self, o: &Rat) -> bool {
        match (&self.0, &o.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => a == c && b == d,
            (Repr::Big(x), Repr::Big(y)) => x == y,
            _ => false,
        }
    }
}

impl Eq for Rat {}

impl Hash for Rat {
    fn hash<H: Hasher>(&self, h: &mut H) {
        match &self.0 {
            Repr::Small(n, d) => {
                0u8.hash(h);
                n.hash(h);
                d.hash(h);
            }
            Repr::Big(b) => {
                1u8.hash(h);
                b.numer().hash(h);
                b.denom().hash(h);
            }
        }
    }
}

impl Ord for Rat {
    fn cmp(&self, o: &Rat) -> Ordering {
        if let (Repr::Small(a, b), Repr::Small(c, d)) = (&self.0, &o.0) {
            if let (Some(l), Some(r)) = (a.checked_mul(*d), c.checked_mul(*b)) {
                return l.cmp(&r);
            }
        }
        self.to_big().cmp(&o.to_big())
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, o: &Rat) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(b) if b.is_integer() => write!(f, "{}", b.numer()),
            Repr::Big(b) => write!(f, "{}/{}", b.numer(), b.denom()),
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts `p`, `p/q`, and decimals with optional exponent (`-1.25e-3`).
impl FromStr for Rat {
    type Err = ParseRatError;

    fn from_str(s: &str) -> Result<Rat, ParseRatError> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = parse_int(p)?;
            let q: BigInt = parse_int(q)?;
            if q.is_zero() {
                return Err(ParseRatError);
            }
            return Ok(Rat::from_big(BigRational::new(p, q)));
        }
        parse_decimal(s)
    }
}

fn parse_int(s: &str) -> Result<BigInt, ParseRatError> {
    let body = s.strip_prefix('-').or_else(|| s.strip_prefix('+')).unwrap_or(s);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseRatError);
    }
    s.parse().map_err(|_| ParseRatError)
}

fn parse_decimal(s: &str) -> Result<Rat, ParseRatError> {
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| ParseRatError)?),
        None => (s, 0),
    };
    if exp.unsigned_abs() > 4096 {
        return Err(ParseRatError);
    }
    let (neg, body) = match mant.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = body.split_once('.').unwrap_or((body, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(ParseRatError);
    }
    if !ip.bytes().chain(fp.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(ParseRatError);
    }
    let mut digits = String::with_capacity(ip.len() + fp.len());
    digits.push_str(ip);
    digits.push_str(fp);
    let mut num: BigInt = digits.parse().map_err(|_| ParseRatError)?;
    if neg {
        num = -num;
    }
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10u8);
    let r = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(Rat::from_big(r))
}

/// Convenience for tests and examples: `rat(3, 2)` is `3/2`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n, d).expect("zero denominator")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_forms() {
        assert_eq!("3/2".parse::<Rat>().unwrap(), rat(3, 2));
        assert_eq!("-6/4".parse::<Rat>().unwrap(), rat(-3, 2));
        assert_eq!("0.1".parse::<Rat>().unwrap(), rat(1, 10));
        assert_eq!("1.0".parse::<Rat>().unwrap(), Rat::one());
        assert_eq!("-2.5e-1".parse::<Rat>().unwrap(), rat(-1, 4));
        assert_eq!(".5".parse::<Rat>().unwrap(), rat(1, 2));
        assert!("1/0".parse::<Rat>().is_err());
        assert!("x".parse::<Rat>().is_err());
        assert!("1e99999".parse::<Rat>().is_err());
    }

    #[test]
    fn promotes_and_demotes() {
        let big = Rat::from_int(i64::MAX);
        let sq = &big * &big;
        let sq2 = &sq * &sq;
        assert!(matches!(sq2.0, Repr::Big(_)));
        let back = &sq2 / &sq2;
        assert!(back.is_one());
        assert!(matches!(back.0, Repr::Small(1, 1)));
        assert_eq!(&(&sq2 - &sq2) + &Rat::one(), Rat::one());
    }

    #[test]
    fn shortest_round_trips() {
        for x in [0.1, -2.75, 1e-7, 123456.789, 0.0] {
            let r = Rat::from_f64_shortest(x).unwrap();
            assert_eq!(r.to_f64().to_bits(), x.to_bits());
        }
        assert_eq!(Rat::from_f64_shortest(0.1).unwrap(), rat(1, 10));
    }

    #[test]
    fn display() {
        assert_eq!(rat(3, 2).to_string(), "3/2");
        assert_eq!(rat(-4, 2).to_string(), "-2");
    }
}
