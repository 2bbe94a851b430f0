//! Symmetry-line periodic orbits of the standard map and sequential periodic
//! orbits (SPOs) of the self-consistent map.
//!
//! A sequential orbit of period `q` stores the `q` consecutive points of a
//! standard-map orbit in its oscillator slots. At zero coupling the
//! self-consistent step shifts each slot's contents to the next slot, so the
//! seed is exactly periodic; for small coupling the orbit persists only for
//! one value of the drift `Ω`, which the Newton closure therefore treats as
//! an unknown alongside the coordinates.
//!
//! The closure system has `2q + 2` equations (angle, momentum, amplitude and
//! phase return) in `2q + 1` unknowns (coordinates plus `Ω`) once the phase
//! freedom is spent by pinning `θ⁰` and the branch label by pinning `κ⁰` and
//! `γ`. On a solution the equations are consistent (the simultaneous
//! rotation of all angles and `θ` maps orbits to orbits), so a least-squares
//! Newton iteration converges to machine-zero residuals.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::linalg::{lstsq, LinalgError};
use crate::map::{mean_field_sum, wrap_angle, MapError, SCParams, SCState, StdPoint};

#[derive(Debug, Error)]
pub enum OrbitError {
    #[error("no sign change while bracketing the symmetry-line orbit (p/q = {p}/{q}, κ = {kappa})")]
    BracketFailure { p: i64, q: usize, kappa: f64 },
    #[error("symmetry-line root closed in angle but not in momentum (defect {defect:e})")]
    AsymmetricClosure { defect: f64 },
    #[error("Newton did not converge: residual {residual:e} after {iters} iterations")]
    NewtonDivergence { residual: f64, iters: usize },
    #[error("closure Jacobian is rank deficient; the seed looks symmetry-degenerate")]
    RankDeficient,
    #[error("state is not periodic to tolerance (defect {defect:e})")]
    NotPeriodic { defect: f64 },
    #[error("continuation step underflow at γ = {gamma} (step {step:e})")]
    StepUnderflow { gamma: f64, step: f64 },
    #[error(transparent)]
    Map(#[from] MapError),
}

impl From<LinalgError> for OrbitError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::RankDeficient { .. } | LinalgError::Singular { .. } => Self::RankDeficient,
        }
    }
}

/// Which symmetry line seeds the orbit: `x = φ` or `x = φ + π`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryLine {
    Principal,
    PrincipalPi,
}

impl SymmetryLine {
    pub fn anchor(&self, phi: f64) -> f64 {
        match self {
            Self::Principal => phi,
            Self::PrincipalPi => phi + PI,
        }
    }
}

/// A period-`q` orbit of the standard map with winding number `p/q`.
#[derive(Debug, Clone)]
pub struct StdOrbit {
    /// Consecutive iterates; `points[i+1] = step(points[i])` bitwise.
    pub points: Vec<StdPoint>,
    pub p: i64,
    pub q: usize,
    pub kappa: f64,
    pub phi: f64,
    /// Greene residue `R = (2 − tr DΦ^q)/4`: elliptic for `0 < R < 1`,
    /// hyperbolic for `R < 0`.
    pub residue: f64,
    pub line: SymmetryLine,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Iterate `q` unwrapped standard-map steps; returns the final point.
fn iterate_unwrapped(x0: f64, y0: f64, kappa: f64, phi: f64, q: usize) -> (f64, f64) {
    let mut x = x0;
    let mut y = y0;
    for _ in 0..q {
        y -= kappa * (x - phi).sin();
        x += y;
    }
    (x, y)
}

/// Trace of the q-step tangent map along the orbit.
fn monodromy_trace(x0: f64, y0: f64, kappa: f64, phi: f64, q: usize) -> f64 {
    let mut x = x0;
    let mut y = y0;
    // M accumulates J_step · M with J = [[1 − κc, 1], [−κc, 1]].
    let mut m = [1.0, 0.0, 0.0, 1.0];
    for _ in 0..q {
        let c = kappa * (x - phi).cos();
        let j = [1.0 - c, 1.0, -c, 1.0];
        m = [
            j[0] * m[0] + j[1] * m[2],
            j[0] * m[1] + j[1] * m[3],
            j[2] * m[0] + j[3] * m[2],
            j[2] * m[1] + j[3] * m[3],
        ];
        y -= kappa * (x - phi).sin();
        x += y;
    }
    m[0] + m[3]
}

/// Find a symmetric periodic orbit with winding `p/q` anchored on the given
/// symmetry line: a one-dimensional root solve in the initial momentum of
/// the full-period angular closure `x_q − x₀ − 2πp`, with the momentum
/// closure checked afterwards (it follows from reversibility on the line).
pub fn find_symmetric_orbit_on(
    kappa: f64,
    phi: f64,
    p: i64,
    q: usize,
    line: SymmetryLine,
) -> Result<StdOrbit, OrbitError> {
    assert!(q >= 1, "period must be positive");
    assert_eq!(gcd(p, q as i64), 1, "winding number must be in lowest terms");
    assert!(kappa >= 0.0, "perturbation must be nonnegative");

    let x0 = line.anchor(phi);
    let y_star = TAU * p as f64 / q as f64;

    let orbit_points = |y0: f64| -> Vec<StdPoint> {
        let mut pts = Vec::with_capacity(q);
        let mut pt = StdPoint::new(x0, y0);
        pts.push(pt);
        for _ in 1..q {
            pt = crate::map::step_std(pt, kappa, phi);
            pts.push(pt);
        }
        pts
    };

    if kappa == 0.0 {
        // Integrable case: the uniform lattice is exact.
        return Ok(StdOrbit { points: orbit_points(y_star), p, q, kappa, phi, residue: 0.0, line });
    }

    let f = |y0: f64| iterate_unwrapped(x0, y0, kappa, phi, q).0 - x0 - TAU * p as f64;

    // Bracket the root nearest the integrable momentum.
    let window = 0.5 * TAU / q as f64 + kappa;
    let samples = 160;
    let mut bracket = None;
    let mut best_dist = f64::INFINITY;
    let mut prev = (y_star - window, f(y_star - window));
    for i in 1..=samples {
        let y = y_star - window + 2.0 * window * i as f64 / samples as f64;
        let val = f(y);
        if prev.1 * val <= 0.0 {
            let mid = 0.5 * (prev.0 + y);
            let dist = (mid - y_star).abs();
            if dist < best_dist {
                best_dist = dist;
                bracket = Some((prev.0, y));
            }
        }
        prev = (y, val);
    }
    let (mut lo, mut hi) = bracket.ok_or(OrbitError::BracketFailure { p, q, kappa })?;
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || hi - lo < 1e-16 {
            lo = mid;
            hi = mid;
            break;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    let y0 = 0.5 * (lo + hi);

    let (_, yq) = iterate_unwrapped(x0, y0, kappa, phi, q);
    let defect = (yq - y0).abs();
    if defect > 1e-10 {
        return Err(OrbitError::AsymmetricClosure { defect });
    }

    let trace = monodromy_trace(x0, y0, kappa, phi, q);
    Ok(StdOrbit {
        points: orbit_points(y0),
        p,
        q,
        kappa,
        phi,
        residue: (2.0 - trace) / 4.0,
        line,
    })
}

/// Symmetric orbit on the default line `x = φ`.
pub fn find_symmetric_orbit(kappa: f64, phi: f64, p: i64, q: usize) -> Result<StdOrbit, OrbitError> {
    find_symmetric_orbit_on(kappa, phi, p, q, SymmetryLine::Principal)
}

/// The elliptic/hyperbolic pair of `p/q` orbits, classified by residue.
pub fn find_orbit_pair(
    kappa: f64,
    phi: f64,
    p: i64,
    q: usize,
) -> Result<(StdOrbit, StdOrbit), OrbitError> {
    let a = find_symmetric_orbit_on(kappa, phi, p, q, SymmetryLine::Principal)?;
    let b = find_symmetric_orbit_on(kappa, phi, p, q, SymmetryLine::PrincipalPi)?;
    if a.residue >= b.residue {
        Ok((a, b))
    } else {
        Ok((b, a))
    }
}

/// A sequential periodic orbit of the self-consistent map.
#[derive(Debug, Clone)]
pub struct SPOState {
    /// Oscillators hold the orbit sequence; `kappa`/`theta` are `(κ⁰, θ⁰)`.
    pub state: SCState,
    /// Uniform coupling strength.
    pub gamma: f64,
    /// Drift for which the orbit closes.
    pub omega: f64,
    pub p: i64,
    pub q: usize,
}

impl SPOState {
    /// Coupling ratio `α = γ/κ⁰`.
    pub fn alpha(&self) -> f64 {
        self.gamma / self.state.kappa
    }

    pub fn params(&self) -> SCParams {
        SCParams::uniform(self.state.len(), self.gamma, self.omega)
    }
}

/// Distance between two angles on the circle.
fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (wrap_angle(a) - wrap_angle(b)).abs();
    d.min(TAU - d)
}

/// Periodicity defect of a state under `q` self-consistent steps: sup over
/// coordinates of the return error, angles compared on the circle.
pub fn periodicity_defect(spo: &SPOState) -> Result<f64, OrbitError> {
    let params = spo.params();
    let mut s = spo.state.clone();
    for _ in 0..spo.q {
        s = crate::map::step_sc(&s, &params)?;
    }
    let mut defect: f64 = 0.0;
    for k in 0..s.len() {
        defect = defect.max(circle_dist(s.x[k], spo.state.x[k]));
        defect = defect.max((s.y[k] - spo.state.y[k]).abs());
    }
    defect = defect.max((s.kappa - spo.state.kappa).abs());
    defect = defect.max(circle_dist(s.theta, spo.state.theta));
    Ok(defect)
}

/// Mean-field oscillation amplitude along the orbit: `max_n |κ^n − κ⁰|`
/// over one period.
pub fn kappa_oscillation(spo: &SPOState) -> Result<f64, OrbitError> {
    let params = spo.params();
    let mut s = spo.state.clone();
    let mut amp: f64 = 0.0;
    for _ in 0..spo.q {
        s = crate::map::step_sc(&s, &params)?;
        amp = amp.max((s.kappa - spo.state.kappa).abs());
    }
    Ok(amp)
}

/// Build the zero-coupling sequential seed from a standard-map orbit: slot
/// `i` holds orbit point `i`, the mean field is `(κ⁰, θ⁰)`, and `Ω = 0`.
pub fn build_spo_seed(orbit: &StdOrbit, kappa0: f64, theta0: f64) -> SPOState {
    SPOState {
        state: SCState::new(
            orbit.points.iter().map(|p| p.x).collect(),
            orbit.points.iter().map(|p| p.y).collect(),
            kappa0,
            theta0,
        ),
        gamma: 0.0,
        omega: 0.0,
        p: orbit.p,
        q: orbit.q,
    }
}

/// Seed a sequential orbit from the truncated conjugacy of a solved normal
/// form: oscillator `k` sits at `x = ζ_k + g(ζ_k − θ⁰)` on the requested
/// resonant lattice, momenta come from the backward difference of the same
/// conjugacy, and `Ω` starts at the drift relation's value.
pub fn spo_seed_from_conjugacy(
    nf: &crate::nform::NormalFormResult,
    kappa0: f64,
    alpha: f64,
    theta0: f64,
    kind: crate::nform::FixedPointKind,
) -> SPOState {
    use crate::nform::{evaluate_change_of_variables, omega_relation, FixedPointKind};
    let q = nf.q as usize;
    let omega_rot = TAU * nf.p as f64 / nf.q as f64;
    let phi0 = match kind {
        FixedPointKind::Elliptic => 0.0,
        FixedPointKind::Hyperbolic => PI / nf.q as f64,
    };
    let x_of = |zeta: f64| evaluate_change_of_variables(nf, zeta, kappa0, alpha, theta0);
    let mut x = Vec::with_capacity(q);
    let mut y = Vec::with_capacity(q);
    for k in 0..q {
        let zeta = theta0 + phi0 + omega_rot * k as f64;
        x.push(x_of(zeta));
        y.push(x_of(zeta) - x_of(zeta - omega_rot));
    }
    SPOState {
        state: SCState::new(x, y, kappa0, theta0),
        gamma: alpha * kappa0,
        omega: omega_relation(nf, kind).eval(alpha, kappa0),
        p: nf.p,
        q,
    }
}

/// Unwrapped self-consistent step with the dense per-step Jacobian with
/// respect to `(x, y, κ, θ)`; layout `x y κ θ`, row-major.
struct StepWithJacobian {
    x: Vec<f64>,
    y: Vec<f64>,
    kappa: f64,
    theta: f64,
    jac: Vec<f64>,
}

fn step_unwrapped_jac(
    x: &[f64],
    y: &[f64],
    kappa: f64,
    theta: f64,
    gamma: f64,
    omega: f64,
) -> StepWithJacobian {
    let n = x.len();
    let dim = 2 * n + 2;
    let col_x = 0;
    let col_y = n;
    let col_k = 2 * n;
    let col_t = 2 * n + 1;

    let sin_k: Vec<f64> = x.iter().map(|&xk| (xk - theta).sin()).collect();
    let cos_k: Vec<f64> = x.iter().map(|&xk| (xk - theta).cos()).collect();
    let mut terms: Vec<f64> = sin_k.iter().map(|s| gamma * s).collect();
    let eta = mean_field_sum(&mut terms);
    let mut terms: Vec<f64> = cos_k.iter().map(|c| -gamma * c).collect();
    let d = mean_field_sum(&mut terms);

    let (kappa_new, dk_dkappa, dk_deta) = if eta == 0.0 && kappa > 0.0 {
        (kappa, 1.0, 1.0)
    } else {
        let s = (kappa * kappa + eta * eta).sqrt();
        (s + eta, kappa / s, eta / s + 1.0)
    };

    let mut jac = vec![0.0; dim * dim];
    // κ' row.
    for j in 0..n {
        jac[col_k * dim + col_x + j] = dk_deta * gamma * cos_k[j];
    }
    jac[col_k * dim + col_k] = dk_dkappa;
    jac[col_k * dim + col_t] = dk_deta * d;

    // Oscillator rows.
    let mut x_new = Vec::with_capacity(n);
    let mut y_new = Vec::with_capacity(n);
    for k in 0..n {
        let yk = y[k] - kappa_new * sin_k[k];
        y_new.push(yk);
        x_new.push(x[k] + yk);
    }
    for k in 0..n {
        let row_y = col_y + k;
        let row_x = col_x + k;
        for j in 0..n {
            let dkap = dk_deta * gamma * cos_k[j];
            let mut dy = -sin_k[k] * dkap;
            if j == k {
                dy -= kappa_new * cos_k[k];
            }
            jac[row_y * dim + col_x + j] = dy;
            jac[row_x * dim + col_x + j] = dy + if j == k { 1.0 } else { 0.0 };
        }
        jac[row_y * dim + col_y + k] = 1.0;
        jac[row_x * dim + col_y + k] = 1.0;
        let dy_dk = -sin_k[k] * dk_dkappa;
        jac[row_y * dim + col_k] = dy_dk;
        jac[row_x * dim + col_k] = dy_dk;
        let dkap_dt = dk_deta * d;
        let dy_dt = kappa_new * cos_k[k] - sin_k[k] * dkap_dt;
        jac[row_y * dim + col_t] = dy_dt;
        jac[row_x * dim + col_t] = dy_dt;
    }

    // θ' row: θ − Ω + D/κ' with D = −Σ γ cos(x_j − θ), ∂D/∂θ = −η.
    let theta_new = theta - omega + d / kappa_new;
    {
        let inv = 1.0 / kappa_new;
        let coef = -d * inv * inv;
        for j in 0..n {
            let dd_dx = gamma * sin_k[j];
            let dkap = dk_deta * gamma * cos_k[j];
            jac[col_t * dim + col_x + j] = dd_dx * inv + coef * dkap;
        }
        jac[col_t * dim + col_k] = coef * dk_dkappa;
        jac[col_t * dim + col_t] = 1.0 + (-eta) * inv + coef * (dk_deta * d);
    }

    StepWithJacobian { x: x_new, y: y_new, kappa: kappa_new, theta: theta_new, jac }
}

/// Closure residual and Jacobian of the `q`-step return map at unknowns
/// `(x, y, Ω)` with `(κ⁰, θ⁰, γ)` pinned.
struct Closure {
    residual: Vec<f64>,
    /// `(2N+2) × (2N+1)`, row-major.
    jacobian: Vec<f64>,
    sup_norm: f64,
}

fn closure_system(
    x0: &[f64],
    y0: &[f64],
    kappa0: f64,
    theta0: f64,
    gamma: f64,
    omega: f64,
    p: i64,
    q: usize,
) -> Closure {
    let n = x0.len();
    let dim = 2 * n + 2;
    let unknowns = 2 * n + 1;

    // Sensitivity of the running state to the unknowns.
    let mut sens = vec![0.0; dim * unknowns];
    for j in 0..2 * n {
        sens[j * unknowns + j] = 1.0;
    }
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut kappa = kappa0;
    let mut theta = theta0;
    for _ in 0..q {
        let step = step_unwrapped_jac(&x, &y, kappa, theta, gamma, omega);
        let mut next = vec![0.0; dim * unknowns];
        for r in 0..dim {
            for c in 0..dim {
                let j = step.jac[r * dim + c];
                if j == 0.0 {
                    continue;
                }
                let src = &sens[c * unknowns..(c + 1) * unknowns];
                let dst = &mut next[r * unknowns..(r + 1) * unknowns];
                for u in 0..unknowns {
                    dst[u] += j * src[u];
                }
            }
        }
        // Explicit −1 dependence of θ' on the unknown Ω.
        next[(2 * n + 1) * unknowns + 2 * n] -= 1.0;
        sens = next;
        x = step.x;
        y = step.y;
        kappa = step.kappa;
        theta = step.theta;
    }

    let shift = TAU * p as f64;
    let mut residual = Vec::with_capacity(dim);
    for k in 0..n {
        residual.push(x[k] - x0[k] - shift);
    }
    for k in 0..n {
        residual.push(y[k] - y0[k]);
    }
    residual.push(kappa - kappa0);
    residual.push(theta - theta0);

    let mut jacobian = sens;
    for k in 0..2 * n {
        jacobian[k * unknowns + k] -= 1.0;
    }
    let sup_norm = residual.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Closure { residual, jacobian, sup_norm }
}

/// Default closure tolerance (sup norm of the residual).
pub const NEWTON_TOL: f64 = 1e-12;
const STEP_FLOOR: f64 = 1e-8;

/// Solve the sequential-orbit closure for the given coupling, keeping the
/// seed's `(κ⁰, θ⁰)` fixed and treating `Ω` as a free unknown.
pub fn newton_spo(seed: &SPOState, gamma: f64, q: usize, tol: f64) -> Result<SPOState, OrbitError> {
    newton_spo_counted(seed, gamma, q, tol).map(|(spo, _)| spo)
}

/// As [`newton_spo`], also reporting the number of Newton iterations spent.
pub fn newton_spo_counted(
    seed: &SPOState,
    gamma: f64,
    q: usize,
    tol: f64,
) -> Result<(SPOState, usize), OrbitError> {
    assert_eq!(q, seed.q, "period must match the seed");
    let n = seed.state.len();
    let kappa0 = seed.state.kappa;
    let theta0 = seed.state.theta;

    let mut x = seed.state.x.clone();
    let mut y = seed.state.y.clone();
    let mut omega = seed.omega;

    let mut last_res = f64::INFINITY;
    for iter in 0..60 {
        let cls = closure_system(&x, &y, kappa0, theta0, gamma, omega, seed.p, q);
        if cls.sup_norm <= tol {
            let spo = SPOState {
                state: SCState::new(x, y, kappa0, theta0),
                gamma,
                omega,
                p: seed.p,
                q,
            };
            return Ok((spo, iter));
        }
        if !cls.sup_norm.is_finite() {
            return Err(OrbitError::NewtonDivergence { residual: cls.sup_norm, iters: iter });
        }
        let mut a = cls.jacobian.clone();
        let mut b: Vec<f64> = cls.residual.iter().map(|v| -v).collect();
        let delta = lstsq(&mut a, &mut b, 2 * n + 2, 2 * n + 1)?;

        // Damped update: halve until the residual stops growing.
        let mut lambda = 1.0;
        loop {
            let xt: Vec<f64> = (0..n).map(|k| x[k] + lambda * delta[k]).collect();
            let yt: Vec<f64> = (0..n).map(|k| y[k] + lambda * delta[n + k]).collect();
            let ot = omega + lambda * delta[2 * n];
            let trial = closure_system(&xt, &yt, kappa0, theta0, gamma, ot, seed.p, q);
            if trial.sup_norm <= cls.sup_norm * (1.0 - 0.25 * lambda) || lambda < 1e-4 {
                x = xt;
                y = yt;
                omega = ot;
                last_res = trial.sup_norm;
                break;
            }
            lambda *= 0.5;
        }
    }
    Err(OrbitError::NewtonDivergence { residual: last_res, iters: 60 })
}

/// One accepted point of a continued family.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub gamma: f64,
    pub kappa0: f64,
    pub omega: f64,
    pub residual: f64,
    pub spo: SPOState,
}

/// A continued family of sequential orbits parameterized by `γ`.
#[derive(Debug, Clone)]
pub struct OrbitBranch {
    pub points: Vec<BranchPoint>,
    pub p: i64,
    pub q: usize,
    /// Residue of the seeding standard-map orbit (classifies the branch).
    pub seed_residue: f64,
    pub line: SymmetryLine,
}

/// Continue the family from the zero-coupling seed up to `gamma_max` with a
/// secant predictor and adaptive step halving.
pub fn continue_branch(
    seed: &SPOState,
    orbit: &StdOrbit,
    gamma_max: f64,
    step: f64,
) -> Result<OrbitBranch, OrbitError> {
    let mut points = Vec::new();
    let first = newton_spo(seed, 0.0, seed.q, NEWTON_TOL)?;
    let res0 = closure_residual(&first)?;
    points.push(BranchPoint {
        gamma: 0.0,
        kappa0: first.state.kappa,
        omega: first.omega,
        residual: res0,
        spo: first,
    });

    let mut gamma = 0.0;
    let mut h = step.abs();
    while gamma < gamma_max {
        if h < STEP_FLOOR {
            return Err(OrbitError::StepUnderflow { gamma, step: h });
        }
        let target = (gamma + h).min(gamma_max);
        let guess = predict(&points, target);
        match newton_spo(&guess, target, seed.q, NEWTON_TOL) {
            Ok(spo) => {
                let residual = closure_residual(&spo)?;
                points.push(BranchPoint {
                    gamma: target,
                    kappa0: spo.state.kappa,
                    omega: spo.omega,
                    residual,
                    spo,
                });
                gamma = target;
                h *= 1.3;
            }
            Err(_) => {
                h *= 0.5;
            }
        }
    }
    Ok(OrbitBranch {
        points,
        p: seed.p,
        q: seed.q,
        seed_residue: orbit.residue,
        line: orbit.line,
    })
}

fn predict(points: &[BranchPoint], gamma: f64) -> SPOState {
    let last = points.last().expect("branch has at least the seed");
    let mut guess = last.spo.clone();
    if points.len() >= 2 {
        let prev = &points[points.len() - 2];
        let dg = last.gamma - prev.gamma;
        if dg.abs() > 0.0 {
            let t = (gamma - last.gamma) / dg;
            for k in 0..guess.state.len() {
                let dx = wrap_diff(last.spo.state.x[k], prev.spo.state.x[k]);
                guess.state.x[k] = wrap_angle(last.spo.state.x[k] + t * dx);
                guess.state.y[k] += t * (last.spo.state.y[k] - prev.spo.state.y[k]);
            }
            guess.omega += t * (last.omega - prev.omega);
        }
    }
    guess.gamma = gamma;
    guess
}

fn wrap_diff(a: f64, b: f64) -> f64 {
    let mut d = a - b;
    while d > PI {
        d -= TAU;
    }
    while d < -PI {
        d += TAU;
    }
    d
}

/// Closure residual of a solved state (sup norm of the return error).
pub fn closure_residual(spo: &SPOState) -> Result<f64, OrbitError> {
    Ok(closure_system(
        &spo.state.x,
        &spo.state.y,
        spo.state.kappa,
        spo.state.theta,
        spo.gamma,
        spo.omega,
        spo.p,
        spo.q,
    )
    .sup_norm)
}

/// Apply a permutation to the oscillator slots. Valid for equal couplings
/// (the mean field is symmetric in the oscillators); periodicity of the
/// permuted state is verified by iteration.
pub fn permute_orbit(spo: &SPOState, sigma: &[usize]) -> Result<SPOState, OrbitError> {
    assert_eq!(sigma.len(), spo.state.len(), "permutation length mismatch");
    let mut seen = vec![false; sigma.len()];
    for &i in sigma {
        assert!(!seen[i], "not a permutation");
        seen[i] = true;
    }
    let permuted = SPOState {
        state: SCState::new(
            sigma.iter().map(|&i| spo.state.x[i]).collect(),
            sigma.iter().map(|&i| spo.state.y[i]).collect(),
            spo.state.kappa,
            spo.state.theta,
        ),
        ..spo.clone()
    };
    let defect = periodicity_defect(&permuted)?;
    if defect > 1e-10 {
        return Err(OrbitError::NotPeriodic { defect });
    }
    Ok(permuted)
}

/// Duplicate the oscillator block `2^times` times and divide `γ` by the
/// same factor. The mean-field sums are unchanged bitwise (duplicates land
/// adjacent in the sorted reduction and re-double exactly), so the
/// mean-field trace and the period are preserved.
pub fn replicate_orbit(spo: &SPOState, times: u32) -> SPOState {
    let factor = 1usize << times;
    let n = spo.state.len();
    let mut x = Vec::with_capacity(n * factor);
    let mut y = Vec::with_capacity(n * factor);
    for _ in 0..factor {
        x.extend_from_slice(&spo.state.x);
        y.extend_from_slice(&spo.state.y);
    }
    SPOState {
        state: SCState::new(x, y, spo.state.kappa, spo.state.theta),
        gamma: spo.gamma / factor as f64,
        omega: spo.omega,
        p: spo.p,
        q: spo.q,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrable_orbit_is_the_uniform_lattice() {
        let orbit = find_symmetric_orbit(0.0, 0.3, 1, 3).unwrap();
        assert_eq!(orbit.residue, 0.0);
        for (i, pt) in orbit.points.iter().enumerate() {
            assert!((pt.y - TAU / 3.0).abs() < 1e-15);
            let expect = wrap_angle(0.3 + TAU * i as f64 / 3.0);
            assert!(circle_dist(pt.x, expect) < 1e-14);
        }
    }

    #[test]
    fn fixed_point_residues_match_the_analytic_trace() {
        // Period-1 fixed points at (φ, 0) and (φ + π, 0): R = ±κ/4.
        let phi = 0.9;
        let kappa = 0.5;
        let ell = find_symmetric_orbit_on(kappa, phi, 0, 1, SymmetryLine::Principal).unwrap();
        assert!((ell.residue - kappa / 4.0).abs() < 1e-12, "R = {}", ell.residue);
        assert!(circle_dist(ell.points[0].x, phi) < 1e-12);
        assert!(ell.points[0].y.abs() < 1e-12);

        let hyp = find_symmetric_orbit_on(kappa, phi, 0, 1, SymmetryLine::PrincipalPi).unwrap();
        assert!((hyp.residue + kappa / 4.0).abs() < 1e-12, "R = {}", hyp.residue);
    }

    #[test]
    fn period_three_orbits_exist_on_both_lines() {
        let phi = 0.0;
        for line in [SymmetryLine::Principal, SymmetryLine::PrincipalPi] {
            let orbit = find_symmetric_orbit_on(0.1, phi, 1, 3, line).unwrap();
            let (xq, yq) = iterate_unwrapped(orbit.points[0].x, orbit.points[0].y, 0.1, phi, 3);
            assert!((xq - orbit.points[0].x - TAU).abs() < 1e-12);
            assert!((yq - orbit.points[0].y).abs() < 1e-12);
        }
        let (ell, hyp) = find_orbit_pair(0.1, phi, 1, 3).unwrap();
        assert!(ell.residue > 0.0 && ell.residue < 1.0);
        assert!(hyp.residue < 0.0);
    }

    #[test]
    fn zero_coupling_seed_shifts_sequentially_and_returns() {
        let orbit = find_symmetric_orbit(0.15, 0.4, 1, 3).unwrap();
        let seed = build_spo_seed(&orbit, 0.15, 0.4);
        let params = seed.params();
        let stepped = crate::map::step_sc(&seed.state, &params).unwrap();
        // Slot k moves to the value slot k+1 held: bitwise for interior
        // slots, orbit-closure accuracy for the wrap-around slot.
        for k in 0..2 {
            assert_eq!(stepped.x[k], seed.state.x[k + 1]);
            assert_eq!(stepped.y[k], seed.state.y[k + 1]);
        }
        assert!(circle_dist(stepped.x[2], seed.state.x[0]) < 1e-11);
        let defect = periodicity_defect(&seed).unwrap();
        assert!(defect < 1e-12, "seed defect {defect:e}");
    }

    #[test]
    fn newton_at_zero_coupling_returns_the_seed() {
        let orbit = find_symmetric_orbit(0.1, 0.0, 1, 3).unwrap();
        let seed = build_spo_seed(&orbit, 0.1, 0.0);
        let solved = newton_spo(&seed, 0.0, 3, 1e-12).unwrap();
        assert_eq!(solved.omega, 0.0);
        for k in 0..3 {
            assert!(circle_dist(solved.state.x[k], seed.state.x[k]) < 1e-12);
        }
    }

    #[test]
    fn newton_solves_small_coupling_and_omega_moves() {
        let kappa0 = 0.1;
        let alpha = 0.01;
        let (ell, _) = find_orbit_pair(kappa0, 0.0, 1, 3).unwrap();
        let seed = build_spo_seed(&ell, kappa0, 0.0);
        let spo = newton_spo(&seed, alpha * kappa0, 3, 1e-12).unwrap();
        let res = closure_residual(&spo).unwrap();
        assert!(res < 1e-12, "residual {res:e}");
        // Leading order: Ω ≈ ακ⁰/2.
        let expect = alpha * kappa0 / 2.0;
        assert!(
            (spo.omega - expect).abs() < 0.2 * expect.abs(),
            "Ω = {} vs leading {expect}",
            spo.omega
        );
    }

    #[test]
    fn branch_continues_to_its_target() {
        let kappa0 = 0.12;
        let orbit = find_symmetric_orbit(kappa0, 0.0, 1, 3).unwrap();
        let seed = build_spo_seed(&orbit, kappa0, 0.0);
        let branch = continue_branch(&seed, &orbit, 2e-3, 2e-4).unwrap();
        assert!(branch.points.len() >= 5);
        let last = branch.points.last().unwrap();
        assert_eq!(last.gamma, 2e-3);
        assert!(last.residual < 1e-12);
        // Branch limits continuously to the seed.
        assert!((branch.points[1].omega - branch.points[0].omega).abs() < 1e-3);
    }

    #[test]
    fn permutation_preserves_periodicity() {
        let kappa0 = 0.1;
        let (ell, _) = find_orbit_pair(kappa0, 0.0, 1, 3).unwrap();
        let seed = build_spo_seed(&ell, kappa0, 0.0);
        let spo = newton_spo(&seed, 1e-3, 3, 1e-12).unwrap();

        let same = permute_orbit(&spo, &[0, 1, 2]).unwrap();
        assert_eq!(same.state.x, spo.state.x);

        let cycled = permute_orbit(&spo, &[1, 2, 0]).unwrap();
        let defect = periodicity_defect(&cycled).unwrap();
        assert!(defect < 1e-12, "cyclic shift defect {defect:e}");
    }

    #[test]
    fn conjugacy_seed_converges_fast() {
        use crate::nform::{solve_homological, FixedPointKind};
        let nf = solve_homological(1, 3, 5).unwrap();
        let alpha = 0.01;
        for kind in [FixedPointKind::Elliptic, FixedPointKind::Hyperbolic] {
            for &kappa0 in &[0.05, 0.1, 0.2] {
                let seed = spo_seed_from_conjugacy(&nf, kappa0, alpha, 0.4, kind);
                let (spo, iters) =
                    newton_spo_counted(&seed, alpha * kappa0, 3, 1e-12).unwrap();
                assert!(
                    iters <= 5,
                    "{kind:?} κ⁰ = {kappa0}: took {iters} Newton iterations"
                );
                assert!(closure_residual(&spo).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn replication_preserves_period_and_trace() {
        let kappa0 = 0.1;
        let (ell, _) = find_orbit_pair(kappa0, 0.0, 1, 3).unwrap();
        let seed = build_spo_seed(&ell, kappa0, 0.0);
        let spo = newton_spo(&seed, 1e-3, 3, 1e-12).unwrap();

        assert_eq!(replicate_orbit(&spo, 0).state.len(), 3);

        let doubled = replicate_orbit(&spo, 1);
        assert_eq!(doubled.state.len(), 6);
        assert_eq!(doubled.gamma, spo.gamma / 2.0);

        // κ-trace identical bitwise over the period.
        let mut a = spo.state.clone();
        let mut b = doubled.state.clone();
        let pa = spo.params();
        let pb = doubled.params();
        for _ in 0..3 {
            a = crate::map::step_sc(&a, &pa).unwrap();
            b = crate::map::step_sc(&b, &pb).unwrap();
            assert_eq!(a.kappa, b.kappa);
            assert_eq!(a.theta, b.theta);
        }

        let eight = replicate_orbit(&spo, 3);
        assert_eq!(eight.state.len(), 24);
        let defect = periodicity_defect(&eight).unwrap();
        assert!(defect < 1e-12, "8× replica defect {defect:e}");

        // Permutation of a replicated orbit stays periodic.
        let sigma: Vec<usize> = (0..6).map(|i| (i * 5 + 2) % 6).collect();
        let permuted = permute_orbit(&doubled, &sigma).unwrap();
        let defect = periodicity_defect(&permuted).unwrap();
        assert!(defect < 1e-12);
    }
}
