//! Order-by-order normal forms for sequential periodic orbits.
//!
//! A sequential orbit distributes the points of a `p/q` standard-map orbit
//! over the oscillators: slot `k` at step `n` sits at
//! `x_k = ζ_k + g(ζ_k, ε)` with `ζ_k = ζ⁰ + (n+k)ω`, `ω = 2πp/q` and the
//! small parameter `ε = κ⁰`. Substituting into the second-difference form of
//! the oscillator update gives, per oscillator, the homological equation
//!
//! ```text
//! Σ_j ε^j Σ_m g_{j,m} c_m e^{imφ} = (κ⁺/ε)·sin(φ + g)·ε,
//! c_m = 2(1 − cos(2πmp/q)),
//! ```
//!
//! in the co-rotating angle `φ = ζ − θ⁰`. The coupling enters through
//! `η = γ Σ_k sin(x_k − θ)`: only harmonics divisible by `q` survive the
//! lattice sum, and with the ordering `γ = α·ε` the mean-field feedback
//! `κ⁺ = sqrt(κ² + η²) + η` is a finite exact series in `ε`.
//!
//! Harmonics with `c_m = 0` (multiples of `q`) cannot be removed; they form
//! the resonant normal form, recorded here as the forcing of the
//! second-difference equation, `ζ^{n+1} − 2ζ^n + ζ^{n−1} = Σ_j ε^j R_j(φ)`.
//! The engine works on the phase-locked branch: the mean field is stationary
//! on the resonant lattices (`φ = 2nπ/q` and `(2n+1)π/q`), which is where
//! the drift relation `Ω(κ⁰)` is read off. Everything is exact rational
//! arithmetic; free kernel coefficients and every order's mean value are set
//! to zero.

pub mod algebra;
pub mod series;

use thiserror::Error;

use algebra::{binom_half, format_alpha_poly, format_rat, rat, rat_int, AlphaPoly, Gaussian, Rat};
use num_traits::Zero;
use series::{FormalSeries, TrigPoly};

/// Deepest supported expansion order. Covers the period-6 resonance with
/// margin.
pub const MAX_ORDER: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum NformError {
    #[error("rotation number {p}/{q} is not in lowest terms")]
    NotCoprime { p: i64, q: i64 },
    #[error("rotation denominator {q} unsupported: exact harmonics need q ∈ {{2, 3, 4, 6}}")]
    UnsupportedRotation { q: i64 },
    #[error("order {order} sits below the first resonance at order {q}")]
    OrderBelowResonance { order: usize, q: i64 },
    #[error("order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("oscillation amplitude is only derived for q = 3 (got q = {q})")]
    NotDerived { q: i64 },
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// `2(1 − cos(2πmp/q))` as an exact rational, available when `2πp/q` lands
/// on the rational-cosine lattice (q dividing 12 via {1, 2, 3, 4, 6}).
pub fn c_coefficient_exact(m: i64, p: i64, q: i64) -> Option<Rat> {
    let twice_cos = match q {
        1 => Some(rat_int(2)),
        2 | 3 | 4 | 6 => {
            let k = (m * p).rem_euclid(q);
            // 2cos(2πk/q) for the supported denominators.
            let val = match (q, k) {
                (2, 0) => rat_int(2),
                (2, 1) => rat_int(-2),
                (3, 0) => rat_int(2),
                (3, _) => rat_int(-1),
                (4, 0) => rat_int(2),
                (4, 2) => rat_int(-2),
                (4, _) => rat_int(0),
                (6, 0) => rat_int(2),
                (6, 1) | (6, 5) => rat_int(1),
                (6, 2) | (6, 4) => rat_int(-1),
                (6, 3) => rat_int(-2),
                _ => unreachable!(),
            };
            Some(val)
        }
        _ => None,
    };
    twice_cos.map(|tc| rat_int(2) - tc)
}

/// `2(1 − cos(2πmp/q))`: exact where possible, numeric otherwise. Zero
/// exactly when `q` divides `m`.
pub fn c_coefficient(m: i64, p: i64, q: i64) -> f64 {
    match c_coefficient_exact(m, p, q) {
        Some(r) => algebra::rat_to_f64(&r),
        None => {
            let angle = std::f64::consts::TAU * (m * p) as f64 / q as f64;
            2.0 * (1.0 - angle.cos())
        }
    }
}

/// Drift relation `Ω(κ⁰)` as a polynomial in `κ⁰` whose coefficients are
/// exact polynomials in `α`.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaSeries {
    /// `coeffs[j]` multiplies `(κ⁰)^j`.
    pub coeffs: Vec<AlphaPoly>,
}

impl OmegaSeries {
    pub fn eval(&self, alpha: f64, kappa0: f64) -> f64 {
        let mut out = 0.0;
        for c in self.coeffs.iter().rev() {
            let (re, im) = c.eval_f64(alpha);
            debug_assert!(im.abs() < 1e-14);
            out = out * kappa0 + re;
        }
        out
    }

    pub fn format(&self) -> String {
        let mut parts = Vec::new();
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            parts.push(format!("({}) k^{}", format_alpha_poly(c), j));
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

/// Which resonant lattice the orbit is anchored on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixedPointKind {
    /// `φ = 2nπ/q`.
    Elliptic,
    /// `φ = (2n+1)π/q`.
    Hyperbolic,
}

/// Leading term of the mean-field oscillation amplitude along the orbit:
/// `Δκ ≈ coefficient · α^alpha_power · (κ⁰)^exponent`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaKappaLeading {
    pub coefficient: Rat,
    pub exponent: u32,
    pub alpha_power: u32,
}

impl DeltaKappaLeading {
    pub fn eval(&self, alpha: f64, kappa0: f64) -> f64 {
        algebra::rat_to_f64(&self.coefficient)
            * alpha.powi(self.alpha_power as i32)
            * kappa0.powi(self.exponent as i32)
    }
}

/// Output of the order-by-order solve.
#[derive(Clone, Debug)]
pub struct NormalFormResult {
    pub p: i64,
    pub q: i64,
    pub order: usize,
    /// Conjugacy correction `g(φ, ε)`; `g.orders[j]` multiplies `ε^j`.
    pub g: FormalSeries,
    /// Resonant forcing `R` of `ζ^{n+1} − 2ζ^n + ζ^{n−1} = Σ_j ε^j R_j(φ)`;
    /// supported on harmonics divisible by `q` only.
    pub resonant_rhs: FormalSeries,
    pub omega_elliptic: OmegaSeries,
    pub omega_hyperbolic: OmegaSeries,
    /// Leading oscillation-amplitude estimate; derived for `q = 3` only.
    pub delta_kappa: Option<DeltaKappaLeading>,
    /// Per-order mean-field drift `(κ⁺ − κ)/κ` evaluated on each lattice;
    /// all zero through the computed order (the phase-locked branch keeps
    /// the amplitude stationary).
    pub kappa_drift_elliptic: Vec<AlphaPoly>,
    pub kappa_drift_hyperbolic: Vec<AlphaPoly>,
}

/// The series `κ⁺/ε = sqrt(1 + W²) + W` with `W = η/ε = α · Σ_k sin`-lattice.
fn kappa_factor(w: &FormalSeries) -> FormalSeries {
    let order = w.truncation();
    let w2 = w.mul(w);
    let mut sqrt = FormalSeries::zero(order);
    let mut power = FormalSeries::constant_one(order);
    let mut r = 0;
    loop {
        let term = power.scale_gaussian(&Gaussian::real(binom_half(r)));
        sqrt = sqrt.add(&term);
        r += 1;
        // W² has no constant term, so powers beyond the truncation vanish.
        if 2 * r > order {
            break;
        }
        power = power.mul(&w2);
        if power.orders.iter().all(TrigPoly::is_zero) {
            break;
        }
    }
    sqrt.add(w)
}

struct Expansion {
    cos_x: FormalSeries,
    factor: FormalSeries,
    rhs_hat: FormalSeries,
}

/// Build every series that depends on the current `g`.
fn expand(g: &FormalSeries, q: i64) -> Expansion {
    let e = FormalSeries::exp_i(g);
    let e_conj = e.conj_mirror();
    let half_i = Gaussian::imag(rat(-1, 2)); // 1/(2i)
    let sin_x = e.shift_harmonics(1).add(&e_conj.shift_harmonics(-1).neg()).scale_gaussian(&half_i);
    let half = Gaussian::real(rat(1, 2));
    let cos_x = e.shift_harmonics(1).add(&e_conj.shift_harmonics(-1)).scale_gaussian(&half);

    let lattice_scale = Gaussian::real(rat_int(q));
    let s_lattice = sin_x.project_multiples(q).scale_gaussian(&lattice_scale);
    let w = s_lattice.times_alpha();
    let factor = kappa_factor(&w);
    let rhs_hat = factor.mul(&sin_x);
    Expansion { cos_x, factor, rhs_hat }
}

/// Solve the homological equation order by order for rotation number `p/q`.
pub fn solve_homological(p: i64, q: i64, order: usize) -> Result<NormalFormResult, NformError> {
    if q <= 0 || p <= 0 || gcd(p, q) != 1 {
        return Err(NformError::NotCoprime { p, q });
    }
    if !matches!(q, 2 | 3 | 4 | 6) {
        return Err(NformError::UnsupportedRotation { q });
    }
    if order < q as usize {
        return Err(NformError::OrderBelowResonance { order, q });
    }
    if order > MAX_ORDER {
        return Err(NformError::OrderTooHigh { order, max: MAX_ORDER });
    }

    let mut g = FormalSeries::zero(order);
    let mut resonant = FormalSeries::zero(order);

    for j in 1..=order {
        let exp = expand(&g, q);
        // RHS of the order-j equation: ε^j coefficient of ε·(κ⁺/ε)·sin(φ+g).
        let rhs_j = exp.rhs_hat.coeff(j - 1).clone();
        assert!(rhs_j.is_real_function(), "order-{j} right-hand side lost reality");
        for (&m, coeff) in rhs_j.iter() {
            let c_m = c_coefficient_exact(m, p, q).expect("supported q");
            if c_m.is_zero() {
                // Unremovable: flip to the second-difference convention.
                resonant.orders[j].add_term(m, coeff.neg());
            } else {
                g.orders[j].add_term(m, coeff.div_rat(&c_m));
            }
        }
        assert!(g.orders[j].coeff(0).is_zero(), "mean value of g must stay zero");
    }

    for (j, r) in resonant.orders.iter().enumerate() {
        for (&m, _) in r.iter() {
            assert_eq!(m.rem_euclid(q), 0, "non-resonant harmonic {m} survived at order {j}");
        }
    }

    // Mean-field closure on the two lattices. The per-step phase increment
    // is (1/κ⁺)·∂η/∂θ = −α·C/(κ⁺/ε) with C the cosine lattice sum; on a
    // stationary branch it equals Ω.
    let exp = expand(&g, q);
    let c_lattice = exp
        .cos_x
        .project_multiples(q)
        .scale_gaussian(&Gaussian::real(rat_int(q)));
    let t = c_lattice.times_alpha().mul(&exp.factor.inverse()).neg();

    let omega_of = |hyper: bool| OmegaSeries {
        coeffs: t.orders.iter().map(|p| p.eval_lattice(q, hyper)).collect(),
    };
    let drift = exp.factor.add(&FormalSeries::constant_one(order).neg());
    let drift_of = |hyper: bool| -> Vec<AlphaPoly> {
        drift.orders.iter().map(|p| p.eval_lattice(q, hyper)).collect()
    };

    let delta_kappa = (q == 3)
        .then(|| DeltaKappaLeading { coefficient: rat(1, 64), exponent: 4, alpha_power: 2 });

    Ok(NormalFormResult {
        p,
        q,
        order,
        g,
        resonant_rhs: resonant,
        omega_elliptic: omega_of(false),
        omega_hyperbolic: omega_of(true),
        delta_kappa,
        kappa_drift_elliptic: drift_of(false),
        kappa_drift_hyperbolic: drift_of(true),
    })
}

/// Drift relation for the requested lattice.
pub fn omega_relation(nf: &NormalFormResult, kind: FixedPointKind) -> &OmegaSeries {
    match kind {
        FixedPointKind::Elliptic => &nf.omega_elliptic,
        FixedPointKind::Hyperbolic => &nf.omega_hyperbolic,
    }
}

/// Leading mean-field oscillation amplitude along the orbit. Derived for the
/// period-3 case: `Δκ ≈ (α²/64)(κ⁰)⁴`.
pub fn delta_kappa_leading(nf: &NormalFormResult) -> Result<DeltaKappaLeading, NformError> {
    nf.delta_kappa.clone().ok_or(NformError::NotDerived { q: nf.q })
}

/// Numeric change of variables `x = ζ + g(ζ − θ⁰, κ⁰)`.
pub fn evaluate_change_of_variables(
    nf: &NormalFormResult,
    zeta: f64,
    kappa0: f64,
    alpha: f64,
    theta0: f64,
) -> f64 {
    let (re, im) = nf.g.eval_f64(zeta - theta0, kappa0, alpha);
    debug_assert!(im.abs() < 1e-12, "conjugacy evaluation drifted off the real axis: {im:e}");
    zeta + re
}

/// Plain-text report: per-order conjugacy coefficients, resonant forcing and
/// drift relations, all as exact rationals.
pub fn report(nf: &NormalFormResult) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "rotation number: {}/{}", nf.p, nf.q);
    let _ = writeln!(out, "order: {}", nf.order);
    let _ = writeln!(out, "g (real form, coefficients of sin/cos per order):");
    for (j, poly) in nf.g.orders.iter().enumerate() {
        if poly.is_zero() {
            continue;
        }
        for (m, cos_c, sin_c) in poly.real_form() {
            if !cos_c.is_zero() {
                let _ = writeln!(out, "  e^{j} cos({m}φ): {}", format_alpha_poly(&cos_c));
            }
            if !sin_c.is_zero() {
                let _ = writeln!(out, "  e^{j} sin({m}φ): {}", format_alpha_poly(&sin_c));
            }
        }
    }
    let _ = writeln!(out, "resonant forcing (second-difference convention):");
    for (j, poly) in nf.resonant_rhs.orders.iter().enumerate() {
        if poly.is_zero() {
            continue;
        }
        for (m, cos_c, sin_c) in poly.real_form() {
            if !cos_c.is_zero() {
                let _ = writeln!(out, "  e^{j} cos({m}φ): {}", format_alpha_poly(&cos_c));
            }
            if !sin_c.is_zero() {
                let _ = writeln!(out, "  e^{j} sin({m}φ): {}", format_alpha_poly(&sin_c));
            }
        }
    }
    let _ = writeln!(out, "omega_elliptic:   {}", nf.omega_elliptic.format());
    let _ = writeln!(out, "omega_hyperbolic: {}", nf.omega_hyperbolic.format());
    out
}

/// Machine-readable dump, one record per line:
/// `g j m cos|sin <rational coefficients by alpha power>` and analogous
/// `res` / `omega` records. Stable field order, exact rationals.
pub fn dump(nf: &NormalFormResult) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "pq {} {}", nf.p, nf.q);
    let _ = writeln!(out, "order {}", nf.order);
    let dump_poly = |out: &mut String, tag: &str, j: usize, poly: &TrigPoly| {
        for (m, cos_c, sin_c) in poly.real_form() {
            for (kind, c) in [("cos", &cos_c), ("sin", &sin_c)] {
                if c.is_zero() {
                    continue;
                }
                let coeffs: Vec<String> = c.coeffs.iter().map(|g| format_rat(&g.re)).collect();
                let _ = writeln!(out, "{tag} {j} {m} {kind} {}", coeffs.join(" "));
            }
        }
    };
    for (j, poly) in nf.g.orders.iter().enumerate() {
        dump_poly(&mut out, "g", j, poly);
    }
    for (j, poly) in nf.resonant_rhs.orders.iter().enumerate() {
        dump_poly(&mut out, "res", j, poly);
    }
    for (tag, omega) in [("omega_e", &nf.omega_elliptic), ("omega_h", &nf.omega_hyperbolic)] {
        for (j, c) in omega.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let coeffs: Vec<String> = c.coeffs.iter().map(|g| format_rat(&g.re)).collect();
            let _ = writeln!(out, "{tag} {j} {}", coeffs.join(" "));
        }
    }
    out
}
