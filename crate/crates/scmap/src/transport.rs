//! The non-autonomous standard map with alternating perturbation and the
//! global-transport experiments built on it.
//!
//! Two copies of the standard map are applied in alternation:
//! `κ^n = κ₁` for odd `n`, `κ^n = κ₂` for even `n`, phase `φ = 0`. Iteration
//! indices start at 0, so the first applied step uses `κ₂`; swapping the two
//! values is the same map started one step later, which the tests pin down.
//!
//! Global transport is probed by seeding a band `[0, 2π] × [0, y_m]` and
//! watching the unwrapped momentum. A seed escapes upward once
//! `y ≥ y_m + 2πℓ`; the two-sided criterion also accepts `y ≤ −2πℓ`.
//! Because the map commutes with `y → y + 2π`, one such crossing implies the
//! absence of rotational invariant circles.

use rayon::prelude::*;

use crate::map::{step_std, wrap_angle, Grid2D, StdPoint, seed_grid};

/// Perturbation pair of the alternating map. By convention `κ₂ ≥ κ₁` when a
/// single ordering is reported; the map itself accepts any pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltParams {
    pub kappa1: f64,
    pub kappa2: f64,
}

impl AltParams {
    pub fn new(kappa1: f64, kappa2: f64) -> Self {
        Self { kappa1, kappa2 }
    }

    /// Perturbation applied at iteration index `n`.
    #[inline]
    pub fn kappa_at(&self, n: u64) -> f64 {
        if n % 2 == 1 {
            self.kappa1
        } else {
            self.kappa2
        }
    }
}

/// Escape thresholds: seeds start in `[0, y_m]`; the derived limits are
/// `y* = y_m + 2πℓ` and `y** = −2πℓ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeCriterion {
    pub y_m: f64,
    pub ell: u32,
    pub max_iters: u64,
}

impl EscapeCriterion {
    pub fn upper(&self) -> f64 {
        self.y_m + std::f64::consts::TAU * self.ell as f64
    }

    pub fn lower(&self) -> f64 {
        -(std::f64::consts::TAU) * self.ell as f64
    }
}

/// One step of the alternating map at iteration index `n`.
#[inline]
pub fn step_alt(p: StdPoint, n: u64, ap: &AltParams) -> StdPoint {
    step_std(p, ap.kappa_at(n), 0.0)
}

/// The two-step composition with perturbations `(κ₁, 0)`: a kick with `κ₁`
/// followed by a free shear, i.e. the alternating map over indices 1 and 2.
///
/// Under `X = x, Y = 2y` this equals one standard-map step with `ε = 2κ₁`,
/// which is what pins the horn boundary's axis intercepts at `κ_c/2`.
pub fn double_step_reduced(p: StdPoint, kappa1: f64) -> StdPoint {
    let ap = AltParams::new(kappa1, 0.0);
    step_alt(step_alt(p, 1, &ap), 2, &ap)
}

/// Iterate one seed with unwrapped momentum until it escapes or the budget
/// runs out. `two_sided` adds the downward threshold.
#[inline]
fn seed_escapes(seed: StdPoint, ap: &AltParams, crit: &EscapeCriterion, two_sided: bool) -> bool {
    let upper = crit.upper();
    let lower = crit.lower();
    let mut x = wrap_angle(seed.x);
    let mut y = seed.y;
    for n in 0..crit.max_iters {
        let kappa = ap.kappa_at(n);
        y -= kappa * x.sin();
        x = wrap_angle(x + y);
        if y >= upper || (two_sided && y <= lower) {
            return true;
        }
    }
    false
}

/// Percentage (0–100) of grid seeds whose unwrapped momentum reaches
/// `y_m + 2πℓ` within the iteration budget (upward criterion).
pub fn escape_fraction(ap: &AltParams, grid: &Grid2D, crit: &EscapeCriterion) -> f64 {
    let seeds = seed_grid(grid);
    let escaped = seeds
        .par_iter()
        .filter(|&&s| seed_escapes(s, ap, crit, false))
        .count();
    100.0 * escaped as f64 / seeds.len() as f64
}

/// True once any seed crosses `y ≥ y_m + 2πℓ` or `y ≤ −2πℓ` within the
/// budget (two-sided criterion). Early exit over seeds is safe: the result
/// does not depend on evaluation order.
pub fn has_global_transport(ap: &AltParams, grid: &Grid2D, crit: &EscapeCriterion) -> bool {
    let seeds = seed_grid(grid);
    seeds.par_iter().any(|&s| seed_escapes(s, ap, crit, true))
}

/// Rectangular parameter sweep: two axes and one payload value per cell,
/// stored row-major with the first axis varying slowest.
#[derive(Debug, Clone)]
pub struct SweepGrid<T> {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    cells: Vec<T>,
}

impl<T> SweepGrid<T> {
    pub fn new(axis1: Vec<f64>, axis2: Vec<f64>, cells: Vec<T>) -> Self {
        assert_eq!(cells.len(), axis1.len() * axis2.len(), "payload must fill the grid");
        Self { axis1, axis2, cells }
    }

    pub fn get(&self, i1: usize, i2: usize) -> &T {
        &self.cells[i1 * self.axis2.len() + i2]
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, &T)> {
        self.cells.iter().enumerate().map(move |(idx, v)| {
            (self.axis1[idx / self.axis2.len()], self.axis2[idx % self.axis2.len()], v)
        })
    }
}

/// Escape-fraction sweep over a (mean κ, Δκ) lattice; each cell holds the
/// escaped percentage for `κ₁ = κ̄ − Δκ/2`, `κ₂ = κ̄ + Δκ/2`.
pub fn escape_scan(
    kappa_bar: &[f64],
    delta_kappa: &[f64],
    grid: &Grid2D,
    crit: &EscapeCriterion,
) -> SweepGrid<f64> {
    let mut cells = Vec::with_capacity(kappa_bar.len() * delta_kappa.len());
    for &kbar in kappa_bar {
        for &dk in delta_kappa {
            let ap = AltParams::new(kbar - dk / 2.0, kbar + dk / 2.0);
            cells.push(escape_fraction(&ap, grid, crit));
        }
    }
    SweepGrid::new(kappa_bar.to_vec(), delta_kappa.to_vec(), cells)
}

/// One column of the horn boundary: the minimal `κ₂` with global transport
/// at the given `κ₁`, or `None` when the bracket fails.
#[derive(Debug, Clone, Copy)]
pub struct HornPoint {
    pub kappa1: f64,
    pub kappa2_min: Option<f64>,
}

/// Upper end of the bisection bracket. Well outside the horn for every
/// `κ₁ ∈ [0, κ_c]`: already at `κ₂ = 1.2` the even steps alone exceed the
/// critical standard map.
const HORN_BRACKET_HIGH: f64 = 1.2;

/// For each `κ₁`, bisect in `κ₂` for the global-transport onset. The lower
/// bracket starts at `κ₂ = κ₁` (the diagonal is inside the horn below the
/// critical perturbation); a cell whose bracket does not straddle the onset
/// is reported censored rather than guessed.
pub fn horn_boundary(
    kappa1_grid: &[f64],
    crit: &EscapeCriterion,
    grid: &Grid2D,
    tol: f64,
) -> Vec<HornPoint> {
    kappa1_grid
        .iter()
        .map(|&kappa1| {
            let mut lo = kappa1.max(0.0);
            if has_global_transport(&AltParams::new(kappa1, lo), grid, crit) {
                // Transport already on the diagonal: the minimum honoring
                // κ₂ ≥ κ₁ is the diagonal itself.
                return HornPoint { kappa1, kappa2_min: Some(lo) };
            }
            let mut hi = HORN_BRACKET_HIGH;
            if !has_global_transport(&AltParams::new(kappa1, hi), grid, crit) {
                return HornPoint { kappa1, kappa2_min: None };
            }
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if has_global_transport(&AltParams::new(kappa1, mid), grid, crit) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            HornPoint { kappa1, kappa2_min: Some(0.5 * (lo + hi)) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::Grid2D;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn degenerate_alternation_is_the_standard_map() {
        let ap = AltParams::new(0.8, 0.8);
        let mut p = StdPoint::new(1.3, 0.4);
        let mut q = p;
        for n in 0..200 {
            p = step_alt(p, n, &ap);
            q = step_std(q, 0.8, 0.0);
            assert_eq!(p, q);
        }
    }

    #[test]
    fn zero_pair_is_pure_shear_and_origin_is_fixed() {
        let ap = AltParams::new(0.0, 0.0);
        let p = step_alt(StdPoint::new(1.0, 0.25), 0, &ap);
        assert_eq!((p.x, p.y), (1.25, 0.25));

        let ap2 = AltParams::new(0.37, 0.91);
        let origin = StdPoint::new(0.0, 0.0);
        assert_eq!(step_alt(origin, 0, &ap2), origin);
        assert_eq!(step_alt(origin, 1, &ap2), origin);
    }

    #[test]
    fn parity_two_steps_equal_explicit_composition() {
        let ap = AltParams::new(0.3, 0.7);
        let mut p = StdPoint::new(2.0, 0.1);
        let mut q = p;
        for m in 0..50u64 {
            p = step_alt(step_alt(p, 2 * m, &ap), 2 * m + 1, &ap);
            // Explicit composition: κ₂ kick then κ₁ kick.
            q = step_std(step_std(q, ap.kappa2, 0.0), ap.kappa1, 0.0);
            assert_eq!(p, q);
        }
    }

    #[test]
    fn exchange_symmetry_is_an_index_shift() {
        let a = AltParams::new(0.3, 0.7);
        let b = AltParams::new(0.7, 0.3);
        let mut p = StdPoint::new(2.0, 0.1);
        let mut q = p;
        for n in 0..101u64 {
            p = step_alt(p, n, &a);
            q = step_alt(q, n + 1, &b);
            assert_eq!(p, q);
        }
    }

    #[test]
    fn reduced_double_step_matches_its_definition() {
        let kappa1 = 0.45;
        let ap = AltParams::new(kappa1, 0.0);
        let p0 = StdPoint::new(1.9, 0.33);
        let direct = double_step_reduced(p0, kappa1);
        let composed = step_alt(step_alt(p0, 1, &ap), 2, &ap);
        assert_eq!(direct, composed);
    }

    #[test]
    fn reduced_double_step_is_conjugate_to_doubled_standard_map() {
        // X = x, Y = 2y turns the (κ₁, 0) double step into one standard-map
        // step with ε = 2κ₁. Check per-step agreement along an orbit and a
        // free-running regular orbit.
        let circle_dist = |a: f64, b: f64| {
            let d = (a - b).abs();
            d.min(TAU - d)
        };
        let kappa1 = 0.15;
        let mut z = StdPoint::new(1.1, 1.45);
        let mut w = StdPoint::new(z.x, 2.0 * z.y);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            z = double_step_reduced(z, kappa1);
            w = step_std(w, 2.0 * kappa1, 0.0);
            worst = worst.max(circle_dist(w.x, z.x));
            worst = worst.max((w.y - 2.0 * z.y).abs());
        }
        // Free-running routes drift ~1 ulp/step through different rounding;
        // the per-step check below is the sharp one.
        assert!(worst < 1e-11, "free-running conjugacy defect {worst:e}");

        // Per-step (re-based) agreement at the critical value κ₁ = κ_c/2,
        // where free-running orbits are chaotic and roundoff would explode.
        let kappa1 = 0.971635406 / 2.0;
        let mut z = StdPoint::new(2.7, 0.15);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let za = double_step_reduced(z, kappa1);
            let wb = step_std(StdPoint::new(z.x, 2.0 * z.y), 2.0 * kappa1, 0.0);
            worst = worst.max((wb.x - za.x).abs());
            worst = worst.max((wb.y - 2.0 * za.y).abs());
            z = za;
        }
        assert!(worst < 1e-12, "per-step conjugacy defect {worst:e}");
    }

    fn small_band() -> Grid2D {
        Grid2D::new([0.0, TAU], [0.0, PI / 5.0], 20, 20).unwrap()
    }

    #[test]
    fn shear_never_escapes() {
        let crit = EscapeCriterion { y_m: PI / 5.0, ell: 1, max_iters: 5_000 };
        let ap = AltParams::new(0.0, 0.0);
        assert_eq!(escape_fraction(&ap, &small_band(), &crit), 0.0);
        assert!(!has_global_transport(&ap, &small_band(), &crit));
    }

    #[test]
    fn supercritical_diagonal_escapes_and_subcritical_does_not() {
        let grid = Grid2D::new([0.0, TAU], [0.0, 3.0 * PI / 5.0], 30, 30).unwrap();
        let crit = EscapeCriterion { y_m: 3.0 * PI / 5.0, ell: 1, max_iters: 20_000 };
        assert!(has_global_transport(&AltParams::new(1.2, 1.2), &grid, &crit));
        // κ = 0.5 is deep inside the horn: rotational circles block escape.
        let crit_short = EscapeCriterion { y_m: 3.0 * PI / 5.0, ell: 1, max_iters: 5_000 };
        assert!(!has_global_transport(&AltParams::new(0.5, 0.5), &grid, &crit_short));
    }

    #[test]
    fn criterion_monotone_in_budget_and_ell() {
        let grid = Grid2D::new([0.0, TAU], [0.0, 3.0 * PI / 5.0], 15, 15).unwrap();
        for &(k1, k2) in &[(0.4, 0.9), (0.2, 0.75), (1.0, 1.1), (0.3, 0.5)] {
            let ap = AltParams::new(k1, k2);
            let short = EscapeCriterion { y_m: 3.0 * PI / 5.0, ell: 1, max_iters: 2_000 };
            let long = EscapeCriterion { y_m: 3.0 * PI / 5.0, ell: 1, max_iters: 20_000 };
            let strict = EscapeCriterion { y_m: 3.0 * PI / 5.0, ell: 2, max_iters: 20_000 };
            let t_short = has_global_transport(&ap, &grid, &short);
            let t_long = has_global_transport(&ap, &grid, &long);
            let t_strict = has_global_transport(&ap, &grid, &strict);
            assert!(t_long >= t_short, "budget monotonicity at ({k1},{k2})");
            assert!(t_long >= t_strict, "ℓ monotonicity at ({k1},{k2})");
        }
    }

    #[test]
    fn exchange_symmetric_escape_fractions_agree() {
        let grid = small_band();
        let crit = EscapeCriterion { y_m: PI / 5.0, ell: 1, max_iters: 3_000 };
        let seeds = seed_grid(&grid);
        let count = |first: AltParams, start: u64| {
            seeds
                .iter()
                .filter(|&&s| {
                    let mut x = s.x;
                    let mut y = s.y;
                    for n in 0..crit.max_iters {
                        y -= first.kappa_at(n + start) * x.sin();
                        x = wrap_angle(x + y);
                        if y >= crit.upper() {
                            return true;
                        }
                    }
                    false
                })
                .count()
        };
        assert_eq!(count(AltParams::new(0.4, 0.9), 0), count(AltParams::new(0.9, 0.4), 1));
    }

    #[test]
    fn escape_scan_fills_the_grid_row_major() {
        let grid = small_band();
        let crit = EscapeCriterion { y_m: PI / 5.0, ell: 1, max_iters: 1_000 };
        let scan = escape_scan(&[0.4, 0.9], &[0.0, 0.4], &grid, &crit);
        assert_eq!(scan.iter().count(), 4);
        // Δκ = 0 at κ̄ = 0.4 is a subcritical standard map: nothing escapes.
        assert_eq!(*scan.get(0, 0), 0.0);
        let direct = escape_fraction(&AltParams::new(0.7, 1.1), &grid, &crit);
        assert_eq!(*scan.get(1, 1), direct);
    }

    #[test]
    fn stricter_ell_moves_the_horn_boundary_up_or_keeps_it() {
        // Small-budget version of the ℓ-monotonicity of the boundary: the
        // ℓ = 2 onset (double budget) sits at or above the ℓ = 1 onset.
        let grid = Grid2D::new([0.0, TAU], [0.0, 3.0 * PI / 5.0], 15, 15).unwrap();
        let tol = 0.02;
        let c1 = EscapeCriterion { y_m: 3.0 * PI / 5.0, ell: 1, max_iters: 20_000 };
        let c2 = EscapeCriterion { y_m: 3.0 * PI / 5.0, ell: 2, max_iters: 40_000 };
        let b1 = horn_boundary(&[0.3], &c1, &grid, tol)[0].kappa2_min.unwrap();
        let b2 = horn_boundary(&[0.3], &c2, &grid, tol)[0].kappa2_min.unwrap();
        assert!(b2 >= b1 - tol, "ℓ=2 boundary {b2} below ℓ=1 boundary {b1}");
    }

    #[test]
    fn horn_bisection_finds_a_cheap_onset() {
        // Coarse, fast variant of the boundary scan: small seed set and
        // budget, wide tolerance. The onset must sit between the shear limit
        // and the supercritical bracket end.
        let grid = Grid2D::new([0.0, TAU], [0.0, 3.0 * PI / 5.0], 12, 12).unwrap();
        let crit = EscapeCriterion { y_m: 3.0 * PI / 5.0, ell: 1, max_iters: 10_000 };
        let pts = horn_boundary(&[0.0], &crit, &grid, 0.02);
        let k2 = pts[0].kappa2_min.expect("bracket must straddle the onset");
        assert!(k2 > 0.3 && k2 < 0.8, "onset {k2}");
    }
}
