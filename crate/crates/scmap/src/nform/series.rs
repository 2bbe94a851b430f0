//! Trigonometric polynomials and truncated power series over them.
//!
//! A [`TrigPoly`] maps the harmonic index `m` to a coefficient of
//! `e^{imφ}`; a [`FormalSeries`] is a vector of trig polynomials indexed by
//! the power of the ordering parameter `ε`. Orders beyond the stored
//! truncation are undefined rather than zero: arithmetic never materializes
//! them.
//!
//! Coefficients attached to harmonic `m` implicitly carry the phase factor
//! `e^{−imθ⁰}`; working in the variable `φ = ζ − θ⁰` keeps that bookkeeping
//! out of the algebra.

use std::collections::BTreeMap;

use super::algebra::{AlphaPoly, Gaussian, Rat};

/// Sparse trigonometric polynomial `Σ_m c_m(α) e^{imφ}`.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct TrigPoly {
    terms: BTreeMap<i64, AlphaPoly>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant(c: AlphaPoly) -> Self {
        let mut p = Self::zero();
        p.add_term(0, c);
        p
    }

    pub fn term(m: i64, c: AlphaPoly) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    /// `sin(kφ)` as a trig polynomial: `(e^{ikφ} − e^{−ikφ}) / 2i`.
    pub fn sin(k: i64, scale: Rat) -> Self {
        let half = Gaussian::imag(-scale / Rat::from(num_bigint::BigInt::from(2)));
        let mut p = Self::zero();
        p.add_term(k, AlphaPoly::constant(half.clone()));
        p.add_term(-k, AlphaPoly::constant(half.neg()));
        p
    }

    /// `cos(kφ)` as a trig polynomial: `(e^{ikφ} + e^{−ikφ}) / 2`.
    pub fn cos(k: i64, scale: Rat) -> Self {
        let half = Gaussian::real(scale / Rat::from(num_bigint::BigInt::from(2)));
        let mut p = Self::zero();
        p.add_term(k, AlphaPoly::constant(half.clone()));
        p.add_term(-k, AlphaPoly::constant(half));
        p
    }

    pub fn add_term(&mut self, m: i64, c: AlphaPoly) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(AlphaPoly::zero);
        *entry = entry.add(&c);
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn coeff(&self, m: i64) -> AlphaPoly {
        self.terms.get(&m).cloned().unwrap_or_else(AlphaPoly::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i64, &AlphaPoly)> {
        self.terms.iter()
    }

    pub fn harmonics(&self) -> Vec<i64> {
        self.terms.keys().copied().collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&m, c) in &other.terms {
            out.add_term(m, c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        Self { terms: self.terms.iter().map(|(&m, c)| (m, c.neg())).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (&m1, c1) in &self.terms {
            for (&m2, c2) in &other.terms {
                out.add_term(m1 + m2, c1.mul(c2));
            }
        }
        out
    }

    pub fn scale(&self, c: &AlphaPoly) -> Self {
        let mut out = Self::zero();
        for (&m, t) in &self.terms {
            out.add_term(m, t.mul(c));
        }
        out
    }

    pub fn scale_gaussian(&self, c: &Gaussian) -> Self {
        let mut out = Self::zero();
        for (&m, t) in &self.terms {
            out.add_term(m, t.scale_gaussian(c));
        }
        out
    }

    /// Multiply by `e^{idφ}` (shift every harmonic by `d`).
    pub fn shift(&self, d: i64) -> Self {
        Self { terms: self.terms.iter().map(|(&m, c)| (m + d, c.clone())).collect() }
    }

    /// Complex conjugate of a function of the real variable `φ`:
    /// `m → −m` with conjugated coefficients.
    pub fn conj_mirror(&self) -> Self {
        Self { terms: self.terms.iter().map(|(&m, c)| (-m, c.conj())).collect() }
    }

    /// Keep only harmonics divisible by `q` (the lattice sum over one
    /// sequential orbit kills the rest).
    pub fn project_multiples(&self, q: i64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(&m, _)| m.rem_euclid(q) == 0)
                .map(|(&m, c)| (m, c.clone()))
                .collect(),
        }
    }

    /// Check the reality pairing `c_{−m} = conj(c_m)`.
    pub fn is_real_function(&self) -> bool {
        self.terms.iter().all(|(&m, c)| self.coeff(-m) == c.conj())
    }

    /// Evaluate on the resonant lattice: harmonic `m = q·r` contributes with
    /// weight `1` (elliptic lattice `φ = 2nπ/q`) or `(−1)^r` (hyperbolic
    /// lattice `φ = (2n+1)π/q`). All harmonics must be multiples of `q`.
    pub fn eval_lattice(&self, q: i64, hyperbolic: bool) -> AlphaPoly {
        let mut out = AlphaPoly::zero();
        for (&m, c) in &self.terms {
            debug_assert_eq!(m.rem_euclid(q), 0, "lattice evaluation off the resonant module");
            let r = m / q;
            if hyperbolic && r.rem_euclid(2) == 1 {
                out = out.sub(c);
            } else {
                out = out.add(c);
            }
        }
        out
    }

    /// Numeric evaluation at angle `φ` and coupling ratio `α`.
    pub fn eval_f64(&self, phi: f64, alpha: f64) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (&m, c) in &self.terms {
            let (cr, ci) = c.eval_f64(alpha);
            let (s, co) = (m as f64 * phi).sin_cos();
            re += cr * co - ci * s;
            im += cr * s + ci * co;
        }
        (re, im)
    }

    /// Real form of a real trig polynomial: `(m, cos-coefficient,
    /// sin-coefficient)` for each harmonic `m ≥ 0`.
    pub fn real_form(&self) -> Vec<(i64, AlphaPoly, AlphaPoly)> {
        let mut out = Vec::new();
        for (&m, c) in &self.terms {
            if m < 0 {
                continue;
            }
            if m == 0 {
                out.push((0, c.clone(), AlphaPoly::zero()));
                continue;
            }
            let two = AlphaPoly::rational(Rat::from(num_bigint::BigInt::from(2)));
            // c_m = a + bi together with c_{−m} = a − bi gives
            // 2a cos(mφ) − 2b sin(mφ).
            let re_part: Vec<Gaussian> =
                c.coeffs.iter().map(|g| Gaussian::real(g.re.clone())).collect();
            let im_part: Vec<Gaussian> =
                c.coeffs.iter().map(|g| Gaussian::real(g.im.clone())).collect();
            let mut a = AlphaPoly { coeffs: re_part };
            let mut b = AlphaPoly { coeffs: im_part };
            a = a.mul(&two);
            b = b.mul(&two).neg();
            out.push((m, a, b));
        }
        out
    }
}

impl std::fmt::Debug for TrigPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "[{c:?}]e^{{{m}iφ}}")?;
        }
        Ok(())
    }
}

/// Truncated power series in `ε` with trig-polynomial coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct FormalSeries {
    /// `orders[j]` is the coefficient of `ε^j`; `len() − 1` is the
    /// truncation order.
    pub orders: Vec<TrigPoly>,
}

impl FormalSeries {
    pub fn zero(order: usize) -> Self {
        Self { orders: vec![TrigPoly::zero(); order + 1] }
    }

    pub fn constant_one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.orders[0] = TrigPoly::constant(AlphaPoly::rational(Rat::from(num_bigint::BigInt::from(1))));
        s
    }

    pub fn truncation(&self) -> usize {
        self.orders.len() - 1
    }

    pub fn coeff(&self, j: usize) -> &TrigPoly {
        &self.orders[j]
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.truncation().min(other.truncation());
        let mut out = Self::zero(order);
        for j in 0..=order {
            out.orders[j] = self.orders[j].add(&other.orders[j]);
        }
        out
    }

    pub fn neg(&self) -> Self {
        Self { orders: self.orders.iter().map(TrigPoly::neg).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.truncation().min(other.truncation());
        let mut out = Self::zero(order);
        for i in 0..=order {
            if self.orders[i].is_zero() {
                continue;
            }
            for j in 0..=order - i {
                if other.orders[j].is_zero() {
                    continue;
                }
                let prod = self.orders[i].mul(&other.orders[j]);
                out.orders[i + j] = out.orders[i + j].add(&prod);
            }
        }
        out
    }

    pub fn scale_trig(&self, t: &TrigPoly) -> Self {
        Self { orders: self.orders.iter().map(|p| p.mul(t)).collect() }
    }

    pub fn scale_gaussian(&self, c: &Gaussian) -> Self {
        Self { orders: self.orders.iter().map(|p| p.scale_gaussian(c)).collect() }
    }

    pub fn shift_harmonics(&self, d: i64) -> Self {
        Self { orders: self.orders.iter().map(|p| p.shift(d)).collect() }
    }

    pub fn conj_mirror(&self) -> Self {
        Self { orders: self.orders.iter().map(TrigPoly::conj_mirror).collect() }
    }

    pub fn project_multiples(&self, q: i64) -> Self {
        Self { orders: self.orders.iter().map(|p| p.project_multiples(q)).collect() }
    }

    /// Shift the whole series one power of `ε` up, dropping the top order.
    pub fn times_eps(&self) -> Self {
        let order = self.truncation();
        let mut out = Self::zero(order);
        for j in 1..=order {
            out.orders[j] = self.orders[j - 1].clone();
        }
        out
    }

    /// Multiply every coefficient by `α`.
    pub fn times_alpha(&self) -> Self {
        Self {
            orders: self
                .orders
                .iter()
                .map(|p| {
                    let mut out = TrigPoly::zero();
                    for (&m, c) in p.iter() {
                        out.add_term(m, c.times_alpha());
                    }
                    out
                })
                .collect(),
        }
    }

    /// Reciprocal of a series whose order-0 coefficient is the constant 1.
    pub fn inverse(&self) -> Self {
        let order = self.truncation();
        let one = FormalSeries::constant_one(order);
        assert_eq!(self.orders[0], one.orders[0], "series inverse requires unit leading term");
        let mut inv = FormalSeries::zero(order);
        inv.orders[0] = one.orders[0].clone();
        for j in 1..=order {
            let mut acc = TrigPoly::zero();
            for r in 1..=j {
                if self.orders[r].is_zero() {
                    continue;
                }
                acc = acc.add(&self.orders[r].mul(&inv.orders[j - r]));
            }
            inv.orders[j] = acc.neg();
        }
        inv
    }

    /// `exp(i·G)` for a series `G` with no order-0 part, truncated at the
    /// series order. Finite because each power of `G` raises the minimal
    /// order by one.
    pub fn exp_i(g: &Self) -> Self {
        let order = g.truncation();
        assert!(g.orders[0].is_zero(), "exp argument must start at order 1");
        let ig = g.scale_gaussian(&Gaussian::imag(Rat::from(num_bigint::BigInt::from(1))));
        let mut out = FormalSeries::constant_one(order);
        let mut power = FormalSeries::constant_one(order);
        let mut factorial = Rat::from(num_bigint::BigInt::from(1));
        for r in 1..=order {
            power = power.mul(&ig);
            factorial *= Rat::from(num_bigint::BigInt::from(r as i64));
            let term = power.scale_gaussian(&Gaussian::real(Rat::from(num_bigint::BigInt::from(1)) / factorial.clone()));
            out = out.add(&term);
        }
        out
    }

    /// Numeric evaluation at `(φ, ε, α)`; returns `(re, im)`.
    pub fn eval_f64(&self, phi: f64, eps: f64, alpha: f64) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        let mut scale = 1.0;
        for p in &self.orders {
            let (r, i) = p.eval_f64(phi, alpha);
            re += scale * r;
            im += scale * i;
            scale *= eps;
        }
        (re, im)
    }

    pub fn is_real_function(&self) -> bool {
        self.orders.iter().all(TrigPoly::is_real_function)
    }
}

impl std::fmt::Debug for FormalSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (j, p) in self.orders.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            writeln!(f, "ε^{j}: {p:?}")?;
        }
        Ok(())
    }
}
