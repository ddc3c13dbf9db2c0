//! Multiprecision complex arithmetic on top of binary `FBig`.
//!
//! Every value carries its own precision; constructors take the working
//! precision in bits and arithmetic keeps the larger operand precision.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use dashu_float::FBig;
use dashu_int::IBig;
use num_bigint::BigInt;
use num_complex::Complex64;

use crate::lattice::Rat;

pub type F = FBig;

pub fn big_to_ibig(x: &BigInt) -> IBig {
    let (sign, bytes) = x.to_bytes_le();
    let mag = dashu_int::UBig::from_le_bytes(&bytes);
    match sign {
        num_bigint::Sign::Minus => -IBig::from(mag),
        _ => IBig::from(mag),
    }
}

pub fn fzero(prec: usize) -> F {
    F::ZERO.with_precision(prec).value()
}

pub fn fint(v: i64, prec: usize) -> F {
    F::from(IBig::from(v)).with_precision(prec).value()
}

pub fn fbig(v: &BigInt, prec: usize) -> F {
    F::from(big_to_ibig(v)).with_precision(prec).value()
}

pub fn frat(r: &Rat, prec: usize) -> F {
    let n = fbig(r.numer(), prec);
    if r.denom() == &BigInt::from(1) {
        return n;
    }
    n / fbig(r.denom(), prec)
}

pub fn ff64(x: f64, prec: usize) -> F {
    if x == 0.0 {
        return fzero(prec);
    }
    F::try_from(x).expect("finite float").with_precision(prec).value()
}

pub fn to_f64(x: &F) -> f64 {
    x.to_f64().value()
}

/// Natural logarithm of a positive value as f64; `-inf` for zero.
pub fn ln_f64(x: &F) -> f64 {
    if *x == F::ZERO {
        return f64::NEG_INFINITY;
    }
    to_f64(&x.ln())
}

#[derive(Clone, PartialEq)]
pub struct Cx {
    pub re: F,
    pub im: F,
}

impl fmt::Debug for Cx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.to_c64();
        write!(f, "({:e}{:+e}i)", c.re, c.im)
    }
}

impl Cx {
    pub fn new(re: F, im: F) -> Self {
        Cx { re, im }
    }

    pub fn zero(prec: usize) -> Self {
        Cx { re: fzero(prec), im: fzero(prec) }
    }

    pub fn one(prec: usize) -> Self {
        Cx { re: fint(1, prec), im: fzero(prec) }
    }

    pub fn from_i64(v: i64, prec: usize) -> Self {
        Cx { re: fint(v, prec), im: fzero(prec) }
    }

    pub fn from_rat(r: &Rat, prec: usize) -> Self {
        Cx { re: frat(r, prec), im: fzero(prec) }
    }

    pub fn from_c64(z: Complex64, prec: usize) -> Self {
        Cx { re: ff64(z.re, prec), im: ff64(z.im, prec) }
    }

    /// Real value from an `f64`.
    pub fn from_f64_mag(x: f64, prec: usize) -> Self {
        Cx { re: ff64(x, prec), im: fzero(prec) }
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(to_f64(&self.re), to_f64(&self.im))
    }

    pub fn precision(&self) -> usize {
        self.re.precision().max(self.im.precision())
    }

    pub fn with_precision(&self, prec: usize) -> Self {
        Cx {
            re: self.re.clone().with_precision(prec).value(),
            im: self.im.clone().with_precision(prec).value(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re == F::ZERO && self.im == F::ZERO
    }

    pub fn conj(&self) -> Self {
        Cx { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn norm_sqr(&self) -> F {
        &self.re * &self.re + &self.im * &self.im
    }

    /// `ln |z|` as f64.
    pub fn ln_abs(&self) -> f64 {
        0.5 * ln_f64(&self.norm_sqr())
    }

    pub fn abs_f64(&self) -> f64 {
        self.ln_abs().exp()
    }

    pub fn scale(&self, s: &F) -> Self {
        Cx { re: &self.re * s, im: &self.im * s }
    }

    pub fn recip(&self) -> Self {
        let d = self.norm_sqr();
        Cx { re: &self.re / &d, im: -(&self.im / &d) }
    }

    pub fn powi(&self, e: i64) -> Self {
        if e < 0 {
            return self.recip().powi(-e);
        }
        let prec = self.precision();
        let mut result = Cx::one(prec);
        let mut base = self.clone();
        let mut k = e as u64;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }
}

impl Add for &Cx {
    type Output = Cx;
    fn add(self, o: &Cx) -> Cx {
        Cx { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl Sub for &Cx {
    type Output = Cx;
    fn sub(self, o: &Cx) -> Cx {
        Cx { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl Mul for &Cx {
    type Output = Cx;
    fn mul(self, o: &Cx) -> Cx {
        Cx {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl Div for &Cx {
    type Output = Cx;
    fn div(self, o: &Cx) -> Cx {
        let d = o.norm_sqr();
        let re = &self.re * &o.re + &self.im * &o.im;
        let im = &self.im * &o.re - &self.re * &o.im;
        Cx { re: re / &d, im: im / d }
    }
}

impl Neg for &Cx {
    type Output = Cx;
    fn neg(self) -> Cx {
        Cx { re: -self.re.clone(), im: -self.im.clone() }
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr for Cx {
            type Output = Cx;
            fn $m(self, o: Cx) -> Cx {
                (&self).$m(&o)
            }
        }
        impl $tr<&Cx> for Cx {
            type Output = Cx;
            fn $m(self, o: &Cx) -> Cx {
                (&self).$m(o)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);
owned_ops!(Div, div);

impl Neg for Cx {
    type Output = Cx;
    fn neg(self) -> Cx {
        Cx { re: -self.re, im: -self.im }
    }
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` if a pivot is smaller than `tiny` (in modulus squared).
pub fn solve(a: &[Vec<Cx>], b: &[Cx], tiny: &F) -> Option<Vec<Cx>> {
    let n = b.len();
    let mut m: Vec<Vec<Cx>> = a.to_vec();
    let mut rhs = b.to_vec();
    for c in 0..n {
        let (p, best) = (c..n)
            .map(|i| (i, m[i][c].norm_sqr()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())?;
        if best <= *tiny {
            return None;
        }
        m.swap(c, p);
        rhs.swap(c, p);
        let inv = m[c][c].recip();
        for i in c + 1..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] * &inv;
            for j in c..n {
                let t = &f * &m[c][j];
                m[i][j] = &m[i][j] - &t;
            }
            let t = &f * &rhs[c];
            rhs[i] = &rhs[i] - &t;
        }
    }
    let mut x = vec![Cx::zero(b.first().map_or(64, |z| z.precision())); n];
    for i in (0..n).rev() {
        let mut s = rhs[i].clone();
        for j in i + 1..n {
            s = &s - &(&m[i][j] * &x[j]);
        }
        x[i] = &s / &m[i][i];
    }
    Some(x)
}
