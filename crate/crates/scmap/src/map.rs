//! Exact iteration of the self-consistent standard map and of the plain
//! standard map.
//!
//! The self-consistent map advances `N` oscillators together with the mean
//! field `(κ, θ)`:
//!
//! ```text
//! η        = Σ_k γ_k sin(x_k − θ)
//! κ'       = sqrt(κ² + η²) + η
//! y_k'     = y_k − κ' sin(x_k − θ)
//! x_k'     = x_k + y_k'                  (wrapped to [0, 2π))
//! θ'       = θ − Ω + (1/κ') ∂η/∂θ       (∂η/∂θ = −Σ_k γ_k cos(x_k − θ))
//! ```
//!
//! The update order matters: `η` and `∂η/∂θ` are evaluated on the *old*
//! oscillator positions and the *old* phase, `κ'` is computed before the
//! oscillator kick, and the kick uses the new `κ'` with the old `θ`.
//!
//! With all `γ_k = 0` the oscillators decouple into `N` independent copies
//! of the standard map `y' = y − ε sin(x − φ), x' = x + y'`. Both maps share
//! one kick kernel so the decoupled trajectories agree bit for bit.

use std::f64::consts::TAU;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("state carries {state} oscillators but params carry {params}")]
    DimensionMismatch { state: usize, params: usize },
    #[error("mean-field amplitude collapsed to {kappa:e}; phase update undefined")]
    MeanFieldSingularity { kappa: f64 },
    #[error("grid range invalid: lo must be strictly below hi on both axes")]
    EmptyGridRange,
    #[error("grid counts must be at least 1")]
    EmptyGridCount,
    #[error("trajectory needs at least one step")]
    EmptyTrajectory,
}

/// Wrap an angle into `[0, 2π)` by conditional shifts.
///
/// The values we wrap move by bounded increments plus the momentum, so a
/// short subtraction loop is exact where a general `rem_euclid` would round
/// through a division.
#[inline]
pub fn wrap_angle(mut x: f64) -> f64 {
    while x >= TAU {
        x -= TAU;
    }
    while x < 0.0 {
        x += TAU;
    }
    x
}

/// One standard-map kick: `y' = y − ε sin(x − φ)`, `x' = x + y'` (wrapped).
///
/// Shared by [`step_std`] and [`step_sc`] so that the decoupling limit of the
/// self-consistent map reproduces standard-map orbits bitwise.
#[inline]
pub fn step_kernel(x: f64, y: f64, eps: f64, phi: f64) -> (f64, f64) {
    let y_new = y - eps * (x - phi).sin();
    (wrap_angle(x + y_new), y_new)
}

/// Order-insensitive sum: sort by value, then reduce by a balanced pairwise
/// tree over adjacent entries.
///
/// Two properties of this reduction carry the symmetry tests of the orbit
/// machinery:
/// * permuting the inputs leaves the result bitwise unchanged (sorting),
/// * duplicating every input and halving it leaves the result bitwise
///   unchanged (duplicates land adjacent, the first tree level re-doubles
///   them exactly, and halving commutes with every rounding step).
pub fn mean_field_sum(terms: &mut [f64]) -> f64 {
    if terms.is_empty() {
        return 0.0;
    }
    terms.sort_unstable_by(f64::total_cmp);
    let mut n = terms.len();
    while n > 1 {
        let half = n / 2;
        for i in 0..half {
            terms[i] = terms[2 * i] + terms[2 * i + 1];
        }
        if n % 2 == 1 {
            terms[half] = terms[n - 1];
            n = half + 1;
        } else {
            n = half;
        }
    }
    terms[0]
}

/// A point of the plain standard map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdPoint {
    pub x: f64,
    pub y: f64,
}

impl StdPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x: wrap_angle(x), y }
    }
}

/// One step of the standard map `y' = y − ε sin(x − φ)`, `x' = x + y'`.
#[inline]
pub fn step_std(p: StdPoint, eps: f64, phi: f64) -> StdPoint {
    let (x, y) = step_kernel(p.x, p.y, eps, phi);
    StdPoint { x, y }
}

/// Full state of the self-consistent map: `N` oscillators plus mean field.
#[derive(Debug, Clone, PartialEq)]
pub struct SCState {
    /// Oscillator angles, wrapped to `[0, 2π)`.
    pub x: Vec<f64>,
    /// Oscillator momenta, never wrapped (transport diagnostics need the
    /// unbounded values; use [`wrap_angle`] for a phase-space view).
    pub y: Vec<f64>,
    /// Mean-field amplitude, `≥ 0` after any step.
    pub kappa: f64,
    /// Mean-field phase, wrapped to `[0, 2π)`.
    pub theta: f64,
    /// Iteration index.
    pub n: u64,
}

impl SCState {
    pub fn new(x: Vec<f64>, y: Vec<f64>, kappa: f64, theta: f64) -> Self {
        assert_eq!(x.len(), y.len(), "oscillator arrays must match in length");
        let x = x.into_iter().map(wrap_angle).collect();
        Self { x, y, kappa, theta: wrap_angle(theta), n: 0 }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Coupling strengths and drift of the self-consistent map.
#[derive(Debug, Clone, PartialEq)]
pub struct SCParams {
    /// Point-vortex intensities `γ_k`, one per oscillator.
    pub gamma: Vec<f64>,
    /// Drift parameter `Ω` of the phase update.
    pub omega: f64,
}

impl SCParams {
    pub fn uniform(n: usize, gamma: f64, omega: f64) -> Self {
        Self { gamma: vec![gamma; n], omega }
    }

    fn check(&self, state: &SCState) -> Result<(), MapError> {
        if self.gamma.len() != state.len() {
            return Err(MapError::DimensionMismatch { state: state.len(), params: self.gamma.len() });
        }
        Ok(())
    }
}

/// Coupling sum `η = Σ_k γ_k sin(x_k − θ)`.
pub fn eta(state: &SCState, params: &SCParams) -> Result<f64, MapError> {
    params.check(state)?;
    let mut terms: Vec<f64> = state
        .x
        .iter()
        .zip(&params.gamma)
        .map(|(&x, &g)| g * (x - state.theta).sin())
        .collect();
    Ok(mean_field_sum(&mut terms))
}

/// Analytic derivative `∂η/∂θ = −Σ_k γ_k cos(x_k − θ)`.
pub fn eta_dtheta(state: &SCState, params: &SCParams) -> Result<f64, MapError> {
    params.check(state)?;
    let mut terms: Vec<f64> = state
        .x
        .iter()
        .zip(&params.gamma)
        .map(|(&x, &g)| -g * (x - state.theta).cos())
        .collect();
    Ok(mean_field_sum(&mut terms))
}

/// Threshold below which the phase update `(1/κ')∂η/∂θ` is refused. A state
/// with `κ⁰ > 0` and finite `η` cannot reach it dynamically.
const KAPPA_FLOOR: f64 = 1e-300;

/// One iteration of the self-consistent map. Returns the new state and the
/// unwrapped phase increment `θ' − θ` (the quantity traced as `ϑ`).
fn step_sc_inner(state: &SCState, params: &SCParams) -> Result<(SCState, f64), MapError> {
    let eta_n = eta(state, params)?;
    // η == 0 keeps κ exactly: sqrt(κ²) may round away from κ.
    let kappa_new = if eta_n == 0.0 {
        state.kappa
    } else {
        (state.kappa * state.kappa + eta_n * eta_n).sqrt() + eta_n
    };
    if kappa_new < KAPPA_FLOOR {
        return Err(MapError::MeanFieldSingularity { kappa: kappa_new });
    }
    let deta = eta_dtheta(state, params)?;

    let mut x_new = Vec::with_capacity(state.len());
    let mut y_new = Vec::with_capacity(state.len());
    for k in 0..state.len() {
        let (x, y) = step_kernel(state.x[k], state.y[k], kappa_new, state.theta);
        x_new.push(x);
        y_new.push(y);
    }

    let dtheta = -params.omega + deta / kappa_new;
    let state_new = SCState {
        x: x_new,
        y: y_new,
        kappa: kappa_new,
        theta: wrap_angle(state.theta + dtheta),
        n: state.n + 1,
    };
    Ok((state_new, dtheta))
}

/// One iteration of the self-consistent map.
pub fn step_sc(state: &SCState, params: &SCParams) -> Result<SCState, MapError> {
    step_sc_inner(state, params).map(|(s, _)| s)
}

/// Rectangular lattice of initial conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

impl Grid2D {
    pub fn new(x_range: [f64; 2], y_range: [f64; 2], nx: usize, ny: usize) -> Result<Self, MapError> {
        if !(x_range[0] < x_range[1]) || !(y_range[0] < y_range[1]) {
            return Err(MapError::EmptyGridRange);
        }
        if nx == 0 || ny == 0 {
            return Err(MapError::EmptyGridCount);
        }
        Ok(Self { x_range, y_range, nx, ny })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Deterministic lattice of `nx·ny` cell-center points, row-major with `x`
/// varying fastest.
pub fn seed_grid(g: &Grid2D) -> Vec<StdPoint> {
    let dx = (g.x_range[1] - g.x_range[0]) / g.nx as f64;
    let dy = (g.y_range[1] - g.y_range[0]) / g.ny as f64;
    let mut pts = Vec::with_capacity(g.len());
    for iy in 0..g.ny {
        let y = g.y_range[0] + (iy as f64 + 0.5) * dy;
        for ix in 0..g.nx {
            let x = g.x_range[0] + (ix as f64 + 0.5) * dx;
            pts.push(StdPoint { x, y });
        }
    }
    pts
}

/// Time series of the mean-field variables along one trajectory. Index `i`
/// holds the state after `i` steps; `dtheta[i]` is the unwrapped increment
/// `θ^i − θ^{i−1}` (zero at `i = 0`). The increment is recorded before
/// wrapping; whether to wrap it is left to consumers.
#[derive(Debug, Clone, Default)]
pub struct MeanFieldTrace {
    pub n: Vec<u64>,
    pub kappa: Vec<f64>,
    pub dtheta: Vec<f64>,
}

/// Oscillator positions captured at one iteration.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub n: u64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Snapshot {
    fn of(state: &SCState) -> Self {
        Self { n: state.n, x: state.x.clone(), y: state.y.clone() }
    }
}

/// Iterate `n_steps` times, recording the mean-field trace and snapshots at
/// the given iteration indices (index 0 is the initial state).
pub fn run_trajectory_at(
    state0: &SCState,
    params: &SCParams,
    n_steps: u64,
    snapshot_at: &[u64],
) -> Result<(MeanFieldTrace, Vec<Snapshot>), MapError> {
    if n_steps == 0 {
        return Err(MapError::EmptyTrajectory);
    }
    let mut trace = MeanFieldTrace::default();
    trace.n.push(0);
    trace.kappa.push(state0.kappa);
    trace.dtheta.push(0.0);

    let mut snapshots = Vec::new();
    let mut state = state0.clone();
    if snapshot_at.contains(&0) {
        snapshots.push(Snapshot::of(&state));
    }
    for _ in 0..n_steps {
        let (next, dtheta) = step_sc_inner(&state, params)?;
        state = next;
        trace.n.push(state.n);
        trace.kappa.push(state.kappa);
        trace.dtheta.push(dtheta);
        if snapshot_at.contains(&state.n) {
            snapshots.push(Snapshot::of(&state));
        }
    }
    Ok((trace, snapshots))
}

/// Iterate `n_steps` times with snapshots every `snapshot_stride` steps
/// (stride 0 disables snapshots).
pub fn run_trajectory(
    state0: &SCState,
    params: &SCParams,
    n_steps: u64,
    snapshot_stride: u64,
) -> Result<(MeanFieldTrace, Vec<Snapshot>), MapError> {
    let at: Vec<u64> = if snapshot_stride == 0 {
        Vec::new()
    } else {
        (0..=n_steps).step_by(snapshot_stride as usize).collect()
    };
    run_trajectory_at(state0, params, n_steps, &at)
}
