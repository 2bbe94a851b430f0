//! Exact coefficient arithmetic for the normal-form engine.
//!
//! Series coefficients live in ℚ(i)[α]: Gaussian rationals with a symbolic
//! coupling-ratio variable `α` kept as a polynomial. The engine never rounds;
//! every published coefficient comparison is an equality of rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(v: i64) -> Rat {
    Rat::from(BigInt::from(v))
}

/// Gaussian rational `re + im·i`.
#[derive(Clone, PartialEq, Eq)]
pub struct Gaussian {
    pub re: Rat,
    pub im: Rat,
}

impl Gaussian {
    pub fn zero() -> Self {
        Self { re: Rat::zero(), im: Rat::zero() }
    }

    pub fn one() -> Self {
        Self { re: Rat::one(), im: Rat::zero() }
    }

    pub fn real(re: Rat) -> Self {
        Self { re, im: Rat::zero() }
    }

    pub fn imag(im: Rat) -> Self {
        Self { re: Rat::zero(), im }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { re: &self.re + &other.re, im: &self.im + &other.im }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { re: &self.re - &other.re, im: &self.im - &other.im }
    }

    pub fn neg(&self) -> Self {
        Self { re: -self.re.clone(), im: -self.im.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn scale(&self, f: &Rat) -> Self {
        Self { re: &self.re * f, im: &self.im * f }
    }

    pub fn div_rat(&self, f: &Rat) -> Self {
        Self { re: &self.re / f, im: &self.im / f }
    }

    /// Multiplication by `i`.
    pub fn times_i(&self) -> Self {
        Self { re: -self.im.clone(), im: self.re.clone() }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (rat_to_f64(&self.re), rat_to_f64(&self.im))
    }
}

impl fmt::Debug for Gaussian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}i)", self.re, self.im)
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    let num = r.numer();
    let den = r.denom();
    // Exact for the small magnitudes used here; fall back through strings
    // would be overkill.
    let nf = bigint_to_f64(num);
    let df = bigint_to_f64(den);
    nf / df
}

fn bigint_to_f64(v: &BigInt) -> f64 {
    let mut out = 0.0f64;
    let (sign, digits) = v.to_u64_digits();
    for &d in digits.iter().rev() {
        out = out * 1.8446744073709552e19 + d as f64;
    }
    if sign == num_bigint::Sign::Minus {
        -out
    } else {
        out
    }
}

/// Polynomial in the coupling ratio `α` with Gaussian-rational coefficients,
/// stored dense by degree with trailing zeros trimmed.
#[derive(Clone, PartialEq, Eq)]
pub struct AlphaPoly {
    pub coeffs: Vec<Gaussian>,
}

impl AlphaPoly {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Gaussian) -> Self {
        let mut p = Self { coeffs: vec![c] };
        p.trim();
        p
    }

    pub fn rational(r: Rat) -> Self {
        Self::constant(Gaussian::real(r))
    }

    /// The monomial `c·α^deg`.
    pub fn monomial(c: Gaussian, deg: usize) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![Gaussian::zero(); deg + 1];
        coeffs[deg] = c;
        Self { coeffs }
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Gaussian::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.is_zero() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, deg: usize) -> Gaussian {
        self.coeffs.get(deg).cloned().unwrap_or_else(Gaussian::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            coeffs.push(self.coeff(k).add(&other.coeff(k)));
        }
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(Gaussian::neg).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![Gaussian::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn scale_gaussian(&self, c: &Gaussian) -> Self {
        let mut p = Self { coeffs: self.coeffs.iter().map(|a| a.mul(c)).collect() };
        p.trim();
        p
    }

    pub fn div_rat(&self, f: &Rat) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a.div_rat(f)).collect() }
    }

    /// Shift every term up by one power of `α`.
    pub fn times_alpha(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(Gaussian::zero());
        coeffs.extend(self.coeffs.iter().cloned());
        Self { coeffs }
    }

    pub fn conj(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(Gaussian::conj).collect() }
    }

    pub fn eval_f64(&self, alpha: f64) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for c in self.coeffs.iter().rev() {
            let (cr, ci) = c.to_f64();
            re = re * alpha + cr;
            im = im * alpha + ci;
        }
        (re, im)
    }

    /// True when every coefficient is purely real.
    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im.is_zero())
    }
}

impl fmt::Debug for AlphaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (deg, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match deg {
                0 => write!(f, "{c:?}")?,
                1 => write!(f, "{c:?}·α")?,
                _ => write!(f, "{c:?}·α^{deg}")?,
            }
        }
        Ok(())
    }
}

/// Render a rational as `p/q` (or `p` when integral).
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Render a real `AlphaPoly` such as `1/2·α − 3/8·α²`.
pub fn format_alpha_poly(p: &AlphaPoly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut parts = Vec::new();
    for (deg, c) in p.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mag = format_rat(&c.re);
        let sign = if c.re.is_negative() || parts.is_empty() { "" } else { "+" };
        let term = match deg {
            0 => mag,
            1 => format!("{mag}*a"),
            _ => format!("{mag}*a^{deg}"),
        };
        parts.push(format!("{sign}{term}"));
    }
    parts.join(" ")
}

/// Exact binomial coefficient `binom(1/2, r)` of the square-root series.
pub fn binom_half(r: usize) -> Rat {
    let mut acc = Rat::one();
    let half = rat(1, 2);
    for k in 0..r {
        acc = acc * (&half - rat_int(k as i64)) / rat_int((k + 1) as i64);
    }
    acc
}
