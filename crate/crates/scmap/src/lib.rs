//! Self-consistent mean-field standard map toolkit.
//!
//! The model is a set of `N` area-preserving twist maps coupled through a
//! mean field: every oscillator `(x_k, y_k)` feels the same perturbation
//! amplitude `κ` and phase `θ`, and those two are in turn driven by the
//! coupling sum `η = Σ γ_k sin(x_k − θ)`. The crate provides
//!
//! * [`map`] — exact iteration of the self-consistent map and of the plain
//!   standard map, with lattice seeding and trajectory observation,
//! * [`transport`] — the non-autonomous map that alternates between two
//!   perturbation values, escape-fraction scans and the global-transport
//!   "horn" boundary,
//! * [`circles`] — Fourier–Newton parametrization of rotational invariant
//!   circles and the turnstile band between two circles of equal rotation
//!   number,
//! * [`orbits`] — symmetry-line periodic orbits of the standard map,
//!   sequential periodic orbits of the coupled map, and Newton continuation
//!   in the coupling strength with the drift `Ω` solved as a free unknown,
//! * [`nform`] — an order-by-order normal-form engine over exact rational
//!   coefficients that resolves the homological equation of the sequential
//!   orbits and produces the `Ω(κ⁰)` parameter relations.
//!
//! All floating-point state is `f64`. Reductions over oscillators use a
//! sorted pairwise tree so that results are independent of oscillator
//! ordering and of block replication (see [`map::mean_field_sum`]).

pub mod circles;
pub mod linalg;
pub mod map;
pub mod nform;
pub mod orbits;
pub mod transport;

pub use map::{Grid2D, MapError, MeanFieldTrace, SCParams, SCState, StdPoint};
pub use transport::{AltParams, EscapeCriterion};
