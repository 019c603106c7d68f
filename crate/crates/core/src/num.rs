//! Gaussian rationals: complex numbers with exact rational real and imaginary
//! parts. All series coefficients live here, so every identity in the
//! symbolic pipeline is decided exactly, never up to a tolerance.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// An element of Q(i): `re + im*i` with exact rational parts.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn zero() -> Self {
        Self { re: BigRational::zero(), im: BigRational::zero() }
    }

    pub fn one() -> Self {
        Self { re: BigRational::one(), im: BigRational::zero() }
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Self { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn from_int(n: i64) -> Self {
        Self { re: BigRational::from_integer(BigInt::from(n)), im: BigRational::zero() }
    }

    /// `num/den` as a real rational.
    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self {
            re: BigRational::new(BigInt::from(num), BigInt::from(den)),
            im: BigRational::zero(),
        }
    }

    /// `(a/b) + (c/d) i`.
    pub fn from_parts(a: i64, b: i64, c: i64, d: i64) -> Self {
        assert!(b != 0 && d != 0, "zero denominator");
        Self {
            re: BigRational::new(BigInt::from(a), BigInt::from(b)),
            im: BigRational::new(BigInt::from(c), BigInt::from(d)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -self.im.clone() }
    }

    /// |z|^2 = re^2 + im^2, an exact rational.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Self {
        let n = self.norm_sqr();
        assert!(!n.is_zero(), "division by zero");
        Self { re: &self.re / &n, im: -&self.im / &n }
    }

    pub fn to_complex64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }

    /// Render as `re + im i` with explicit `num/den` parts, e.g. `-1/2 + 3/4 i`.
    pub fn to_text(&self) -> String {
        format!("{} + {} i", ratio_text(&self.re), ratio_text(&self.im))
    }

    /// Parse the exact text form produced by [`Self::to_text`]. Also accepts
    /// compact forms like `2`, `-1/2`, `i`, `3i`, `1/2-2/3i`, `1+i`.
    pub fn parse(s: &str) -> Option<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return None;
        }
        // Split into at most two signed atoms.
        let mut atoms: Vec<String> = Vec::new();
        let mut cur = String::new();
        for (idx, ch) in compact.chars().enumerate() {
            if (ch == '+' || ch == '-') && idx != 0 && !cur.ends_with('/') {
                atoms.push(cur.clone());
                cur.clear();
            }
            cur.push(ch);
        }
        atoms.push(cur);
        if atoms.len() > 2 {
            return None;
        }
        let mut re = BigRational::zero();
        let mut im = BigRational::zero();
        let mut seen_im = false;
        for atom in &atoms {
            let (imag, body) = if let Some(stripped) = atom.strip_suffix('i') {
                (true, stripped.to_string())
            } else {
                (false, atom.clone())
            };
            let body = match body.as_str() {
                "" | "+" => "1".to_string(),
                "-" => "-1".to_string(),
                b => b.trim_end_matches('*').to_string(),
            };
            let val = parse_ratio(&body)?;
            if imag {
                if seen_im {
                    return None;
                }
                seen_im = true;
                im = val;
            } else {
                re = &re + &val;
            }
        }
        Some(Self { re, im })
    }
}

fn parse_ratio(s: &str) -> Option<BigRational> {
    if let Some((n, d)) = s.split_once('/') {
        let num: BigInt = n.parse().ok()?;
        let den: BigInt = d.parse().ok()?;
        if den.is_zero() {
            return None;
        }
        Some(BigRational::new(num, den))
    } else {
        let num: BigInt = s.parse().ok()?;
        Some(BigRational::from_integer(num))
    }
}

fn ratio_text(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back on a quotient of f64 conversions for very large parts.
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

impl fmt::Debug for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

impl Add for &GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl Sub for &GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl Mul for &GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Div for &GaussianRational {
    type Output = GaussianRational;
    fn div(self, rhs: &GaussianRational) -> GaussianRational {
        self * &rhs.inv()
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational { re: -self.re.clone(), im: -self.im.clone() }
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl $trait for GaussianRational {
            type Output = GaussianRational;
            fn $method(self, rhs: GaussianRational) -> GaussianRational {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        -&self
    }
}

impl AddAssign<&GaussianRational> for GaussianRational {
    fn add_assign(&mut self, rhs: &GaussianRational) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&GaussianRational> for GaussianRational {
    fn sub_assign(&mut self, rhs: &GaussianRational) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl MulAssign<&GaussianRational> for GaussianRational {
    fn mul_assign(&mut self, rhs: &GaussianRational) {
        *self = (&*self) * rhs;
    }
}

/// Exact linear solve `A x = b` over Q(i) by Gaussian elimination with
/// nonzero pivoting. Returns `None` when `A` is singular.
pub fn solve_linear_system(
    a: &[Vec<GaussianRational>],
    b: &[GaussianRational],
) -> Option<Vec<GaussianRational>> {
    let n = a.len();
    if n == 0 {
        return Some(Vec::new());
    }
    assert!(a.iter().all(|row| row.len() == n) && b.len() == n);
    let mut m: Vec<Vec<GaussianRational>> = a.to_vec();
    let mut rhs: Vec<GaussianRational> = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = m[col][col].inv();
        for c in col..n {
            m[col][c] = &m[col][c] * &inv;
        }
        rhs[col] = &rhs[col] * &inv;
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..n {
                    let t = &factor * &m[col][c];
                    m[r][c] = &m[r][c] - &t;
                }
                let t = &factor * &rhs[col];
                rhs[r] = &rhs[r] - &t;
            }
        }
    }
    Some(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_arithmetic() {
        let a = GaussianRational::from_parts(1, 2, -1, 3);
        let b = GaussianRational::from_parts(2, 1, 1, 1);
        let prod = &a * &b;
        let back = &prod / &b;
        assert_eq!(back, a);
        assert_eq!(&a - &a, GaussianRational::zero());
        assert_eq!(&(&a * &a.inv()) - &GaussianRational::one(), GaussianRational::zero());
    }

    #[test]
    fn i_squared_is_minus_one() {
        let i = GaussianRational::i();
        assert_eq!(&i * &i, GaussianRational::from_int(-1));
    }

    #[test]
    fn text_round_trip() {
        for s in ["1/2 + -3/4 i", "0/1 + 1/1 i", "-7/3 + 0/1 i"] {
            let v = GaussianRational::parse(s).unwrap();
            assert_eq!(GaussianRational::parse(&v.to_text()).unwrap(), v);
        }
        assert_eq!(GaussianRational::parse("2i").unwrap(), GaussianRational::from_parts(0, 1, 2, 1));
        assert_eq!(GaussianRational::parse("1-i").unwrap(), GaussianRational::from_parts(1, 1, -1, 1));
        assert_eq!(GaussianRational::parse("-1/2").unwrap(), GaussianRational::from_ratio(-1, 2));
    }

    #[test]
    fn linear_solve_2x2() {
        let i = GaussianRational::i();
        let a = vec![
            vec![GaussianRational::zero(), GaussianRational::one()],
            vec![i.clone(), GaussianRational::zero()],
        ];
        let b = vec![GaussianRational::from_int(3), GaussianRational::from_int(2)];
        let x = solve_linear_system(&a, &b).unwrap();
        assert_eq!(x[1], GaussianRational::from_int(3));
        assert_eq!(x[0], &GaussianRational::from_int(2) / &i);
    }

    #[test]
    fn singular_solve_detected() {
        let a = vec![
            vec![GaussianRational::one(), GaussianRational::one()],
            vec![GaussianRational::one(), GaussianRational::one()],
        ];
        let b = vec![GaussianRational::zero(), GaussianRational::one()];
        assert!(solve_linear_system(&a, &b).is_none());
    }
}
