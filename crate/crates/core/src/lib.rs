//! Random dynamics on real Wehler (2,2,2) surfaces and pentagon folding
//! spaces.
//!
//! The crate has three layers:
//!
//! * exact/lattice layer — [`intpoly`] (big-integer characteristic
//!   polynomials, cyclotomic splitting) and [`minkowski`] (signature
//!   (1, m) forms, hyperbolic distance, KAK decomposition, isometry
//!   classification);
//! * geometric layer — [`wehler`] (real (2,2,2) surfaces in (P1)^3 with
//!   their three involutions) and [`pentagon`] (Darboux pentagon spaces
//!   and fold maps);
//! * dynamical layer — [`randwalk`] (itineraries, orbits, Lyapunov
//!   exponents, boundary limit classes, equidistribution diagnostics),
//!   all driven by the counter-based streams in [`rng`].

pub mod intpoly;
pub mod minkowski;
pub mod pentagon;
pub mod randwalk;
pub mod rng;
pub mod wehler;
