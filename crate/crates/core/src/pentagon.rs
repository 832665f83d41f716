//! Pentagon configuration spaces and their Darboux surface.
//!
//! A pentagon with side lengths `l_0..l_4` is a tuple of unit turns
//! `t_0..t_4` with `sum l_i t_i = 0`; vertices are `a_{i+1} = a_i + l_i t_i`
//! with the gauge `a_0 = 0`, `t_0 = 1`. The Darboux surface is the locus
//!
//! ```text
//! sum_i l_i z_i = 0,    sum_i l_i / z_i = 0
//! ```
//!
//! in P4; its real locus (all |z_i| = 1) is the pentagon space, and the
//! involutions sigma_ij (z'_i = v z_j, z'_j = v z_i with
//! v = (l_i z_i + l_j z_j)/(l_i z_j + l_j z_i)) realize vertex folding
//! for adjacent index pairs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PentagonError {
    #[error("invalid side lengths: {0}")]
    InvalidLengths(String),
    #[error("circles do not intersect: no closed pentagon in this chart")]
    NoClosure,
    #[error("chart is degenerate (coincident circles)")]
    DegenerateChart,
    #[error("fold axis undefined: neighbor vertices coincide")]
    UndefinedAxis,
    #[error("indeterminacy point of sigma_{i}{j}")]
    IndeterminacyPoint { i: usize, j: usize },
    #[error("chart singular: |dH/dz| = {0}")]
    ChartSingular(f64),
    #[error("point violates the Darboux equations (residuals {0}, {1})")]
    NotOnSurface(f64, f64),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

type Result<T> = std::result::Result<T, PentagonError>;

/// Positive side lengths satisfying the strict pentagon inequality.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SideLengths {
    pub l: [f64; 5],
}

impl SideLengths {
    pub fn new(l: [f64; 5]) -> Result<Self> {
        for (i, &li) in l.iter().enumerate() {
            if !(li > 0.0) || !li.is_finite() {
                return Err(PentagonError::InvalidLengths(format!("l_{i} = {li} must be positive")));
            }
        }
        let sum: f64 = l.iter().sum();
        let max = l.iter().cloned().fold(0.0, f64::max);
        if sum - 2.0 * max <= 1e-9 * sum {
            return Err(PentagonError::InvalidLengths(format!(
                "2 max(l) = {} >= sum(l) = {sum}: no closed pentagon",
                2.0 * max
            )));
        }
        Ok(SideLengths { l })
    }

    pub fn sum(&self) -> f64 {
        self.l.iter().sum()
    }

    /// Strict margin of the pentagon inequality, sum - 2 max.
    pub fn existence_margin(&self) -> f64 {
        self.sum() - 2.0 * self.l.iter().cloned().fold(0.0, f64::max)
    }

    /// Minimum of |sum eps_i l_i| over the 16 sign patterns with
    /// eps_0 = +1; the Darboux surface is smooth iff this is nonzero.
    pub fn min_signed_sum(&self) -> f64 {
        let mut best = f64::INFINITY;
        for mask in 0..16u32 {
            let mut s = self.l[0];
            for i in 1..5 {
                if mask >> (i - 1) & 1 == 1 {
                    s -= self.l[i];
                } else {
                    s += self.l[i];
                }
            }
            best = best.min(s.abs());
        }
        best
    }

    pub fn is_smooth(&self) -> bool {
        self.min_signed_sum() > 1e-9 * self.sum()
    }
}

/// One of the ten nodal points of a non-smooth-capable pair (i, j):
/// q_ij = [l_j : -l_i] in coordinates (z_i, z_j) with the others zero.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NodalPoint {
    pub i: usize,
    pub j: usize,
    pub zi: f64,
    pub zj: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub pentagon_exists: bool,
    pub existence_margin: f64,
    pub min_signed_sum: f64,
    pub smooth: bool,
    pub nodes: Vec<NodalPoint>,
}

/// Smoothness/existence scan for raw length data (positivity is the only
/// hard precondition; non-existence and non-smoothness are reported, not
/// raised).
pub fn smoothness(raw: [f64; 5]) -> Result<SmoothnessReport> {
    for (i, &li) in raw.iter().enumerate() {
        if !(li > 0.0) || !li.is_finite() {
            return Err(PentagonError::InvalidLengths(format!("l_{i} = {li} must be positive")));
        }
    }
    let sum: f64 = raw.iter().sum();
    let max = raw.iter().cloned().fold(0.0, f64::max);
    let margin = sum - 2.0 * max;
    let mut min_signed = f64::INFINITY;
    for mask in 0..16u32 {
        let mut s = raw[0];
        for i in 1..5 {
            if mask >> (i - 1) & 1 == 1 {
                s -= raw[i];
            } else {
                s += raw[i];
            }
        }
        min_signed = min_signed.min(s.abs());
    }
    let mut nodes = Vec::with_capacity(10);
    for i in 0..5 {
        for j in (i + 1)..5 {
            nodes.push(NodalPoint { i, j, zi: raw[j], zj: -raw[i] });
        }
    }
    Ok(SmoothnessReport {
        pentagon_exists: margin > 1e-9 * sum,
        existence_margin: margin,
        min_signed_sum: min_signed,
        smooth: min_signed > 1e-9 * sum,
        nodes,
    })
}

/// A closed pentagon in the gauge a_0 = 0, t_0 = 1, together with the
/// chart branch (sign of the circle-intersection choice for a_4).
#[derive(Clone, Copy, Debug)]
pub struct PentagonConfig {
    pub turns: [Complex64; 5],
    pub branch: i8,
}

impl PentagonConfig {
    pub fn vertices(&self, l: &SideLengths) -> [Complex64; 5] {
        let mut a = [Complex64::new(0.0, 0.0); 5];
        for i in 0..4 {
            a[i + 1] = a[i] + l.l[i] * self.turns[i];
        }
        a
    }

    pub fn closure_residual(&self, l: &SideLengths) -> f64 {
        let s: Complex64 = (0..5).map(|i| l.l[i] * self.turns[i]).sum();
        s.norm()
    }

    /// Chart coordinates (theta_1, theta_2, branch).
    pub fn chart(&self) -> (f64, f64, i8) {
        (self.turns[1].arg(), self.turns[2].arg(), self.branch)
    }

    /// Lift to the Darboux surface: z_i = t_i (so z_0 = 1).
    pub fn lift(&self) -> DarbouxPoint {
        DarbouxPoint::new(self.turns).expect("unit turns are a valid representative")
    }

    /// Side lengths measured from the vertices (diagnostic; equals l up
    /// to rounding since the turns are unit).
    pub fn side_lengths(&self, l: &SideLengths) -> [f64; 5] {
        let a = self.vertices(l);
        let mut out = [0.0; 5];
        for i in 0..5 {
            let next = if i == 4 { Complex64::new(0.0, 0.0) } else { a[i + 1] };
            out[i] = (next - a[i]).norm();
        }
        out
    }
}

/// Sign of the circle-intersection branch that a given closed pentagon
/// occupies (the component of a_4 transverse to a_3).
fn branch_of(a3: Complex64, a4: Complex64) -> i8 {
    let s = (a3.conj() * a4).im;
    if s >= 0.0 {
        1
    } else {
        -1
    }
}

/// Build the closed pentagon with t_1 = e^{i theta_1}, t_2 = e^{i theta_2}
/// and a_4 on the chosen intersection of the circles (a_3, l_3) and
/// (0, l_4).
pub fn solve_config(l: &SideLengths, theta1: f64, theta2: f64, branch: i8) -> Result<PentagonConfig> {
    let t0 = Complex64::new(1.0, 0.0);
    let t1 = Complex64::from_polar(1.0, theta1);
    let t2 = Complex64::from_polar(1.0, theta2);
    let a1 = l.l[0] * t0;
    let a2 = a1 + l.l[1] * t1;
    let a3 = a2 + l.l[2] * t2;
    let d = a3.norm();
    let scale = l.sum();
    let (r3, r4) = (l.l[3], l.l[4]);
    if d < 1e-12 * scale {
        if (r3 - r4).abs() < 1e-12 * scale {
            return Err(PentagonError::DegenerateChart);
        }
        return Err(PentagonError::NoClosure);
    }
    // circle(a3, r3) cap circle(0, r4): along-axis offset from 0 and
    // transverse height
    let along = (d * d + r4 * r4 - r3 * r3) / (2.0 * d);
    let h2 = r4 * r4 - along * along;
    if h2 < 0.0 {
        return Err(PentagonError::NoClosure);
    }
    let h = h2.sqrt();
    let u = a3 / d;
    let a4 = u * Complex64::new(along, branch.signum() as f64 * h);
    let t3 = (a4 - a3) / r3;
    let t4 = -a4 / r4;
    let turns = [t0, t1, t2, unit(t3)?, unit(t4)?];
    let cfg = PentagonConfig { turns, branch: branch_of(a3, a4) };
    let res = cfg.closure_residual(l);
    if res > 1e-9 * scale {
        return Err(PentagonError::Numeric(format!("closure residual {res} after solve")));
    }
    Ok(cfg)
}

fn unit(z: Complex64) -> Result<Complex64> {
    let n = z.norm();
    if !n.is_finite() || n == 0.0 {
        return Err(PentagonError::Numeric("cannot normalize zero turn".into()));
    }
    Ok(z / n)
}

/// Reflect vertex a_i across the line through a_{i-1} and a_{i+1};
/// the result is re-gauged to t_0 = 1 by a global rotation.
pub fn fold_geometric(l: &SideLengths, p: &PentagonConfig, i: usize) -> Result<PentagonConfig> {
    let a = p.vertices(l);
    let at = |k: usize| a[k % 5];
    let (prev, this, next) = (at(i + 4), at(i), at(i + 1));
    let axis = next - prev;
    let scale = l.sum();
    if axis.norm() < 1e-12 * scale {
        return Err(PentagonError::UndefinedAxis);
    }
    let dir = axis / axis.norm();
    // reflection across the line prev + R dir: w -> prev + dir^2 conj(w - prev)
    let mirrored = prev + dir * dir * (this - prev).conj();
    let mut b = a;
    b[i] = mirrored;
    let mut turns = [Complex64::new(0.0, 0.0); 5];
    for k in 0..5 {
        let nxt = if k == 4 { b[0] } else { b[k + 1] };
        turns[k] = unit((nxt - b[k]) / l.l[k])?;
    }
    // re-gauge t_0 = 1 by the global rotation conj(t_0)
    let g = turns[0].conj();
    for t in &mut turns {
        *t = unit(*t * g)?;
    }
    let a3: Complex64 = l.l[0] * turns[0] + l.l[1] * turns[1] + l.l[2] * turns[2];
    let a4 = a3 + l.l[3] * turns[3];
    Ok(PentagonConfig { turns, branch: branch_of(a3, a4) })
}

/// A point of the Darboux surface in P4, stored with max modulus 1 and
/// the phase gauged so z_0 is real nonnegative.
#[derive(Clone, Copy, Debug)]
pub struct DarbouxPoint {
    pub z: [Complex64; 5],
}

impl DarbouxPoint {
    pub fn new(z: [Complex64; 5]) -> Result<Self> {
        let max = z.iter().map(|w| w.norm()).fold(0.0, f64::max);
        if !max.is_finite() || max == 0.0 {
            return Err(PentagonError::Numeric("zero or non-finite projective tuple".into()));
        }
        let mut z: [Complex64; 5] = z.map(|w| w / max);
        // unit phase gauge: make z_0 real nonnegative when possible
        let n0 = z[0].norm();
        if n0 > 1e-12 {
            let u = z[0].conj() / n0;
            for w in &mut z {
                *w *= u;
            }
            z[0] = Complex64::new(n0, 0.0);
        }
        Ok(DarbouxPoint { z })
    }

    /// Residuals (|sum l_i z_i|, |sum_i l_i prod_{j != i} z_j|) of the two
    /// Darboux equations on the stored representative.
    pub fn residuals(&self, l: &SideLengths) -> (f64, f64) {
        let r1: Complex64 = (0..5).map(|i| l.l[i] * self.z[i]).sum();
        let mut r2 = Complex64::new(0.0, 0.0);
        for i in 0..5 {
            let mut p = Complex64::new(l.l[i], 0.0);
            for j in 0..5 {
                if j != i {
                    p *= self.z[j];
                }
            }
            r2 += p;
        }
        (r1.norm(), r2.norm())
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.z.iter().all(|w| (w.norm() - 1.0).abs() < tol)
    }

    /// Push each coordinate back to the unit circle (real-locus
    /// renormalization between fold steps).
    pub fn renorm_real(&self) -> Result<Self> {
        let mut z = self.z;
        for w in &mut z {
            *w = unit(*w)?;
        }
        DarbouxPoint::new(z)
    }

    /// Read a real Darboux point back as a pentagon configuration
    /// (t_i = z_i after phase gauge).
    pub fn to_config(&self, l: &SideLengths) -> Result<PentagonConfig> {
        if !self.is_real(1e-6) {
            return Err(PentagonError::Numeric("not on the real locus".into()));
        }
        let turns = self.renorm_real()?.z;
        let a3: Complex64 = l.l[0] * turns[0] + l.l[1] * turns[1] + l.l[2] * turns[2];
        let a4 = a3 + l.l[3] * turns[3];
        Ok(PentagonConfig { turns, branch: branch_of(a3, a4) })
    }
}

/// The algebraic involution sigma_ij: z'_i = v z_j, z'_j = v z_i with
/// v = (l_i z_i + l_j z_j)/(l_i z_j + l_j z_i), other coordinates fixed.
pub fn fold_algebraic(l: &SideLengths, p: &DarbouxPoint, i: usize, j: usize) -> Result<DarbouxPoint> {
    assert!(i < 5 && j < 5 && i != j, "fold indices must be distinct and < 5");
    let (li, lj) = (l.l[i], l.l[j]);
    let (zi, zj) = (p.z[i], p.z[j]);
    let den = li * zj + lj * zi;
    let scale = (li + lj) * zi.norm().max(zj.norm()).max(1e-300);
    if den.norm() < 1e-12 * scale {
        return Err(PentagonError::IndeterminacyPoint { i, j });
    }
    let v = (li * zi + lj * zj) / den;
    let mut z = p.z;
    z[i] = v * zj;
    z[j] = v * zi;
    DarbouxPoint::new(z)
}

/// Chart preference order for the area density: which three indices play
/// the roles (z_p, z_q, z_r) in the affine equation (gauge z_0 = 1, the
/// remaining index eliminated by the linear equation); the derivative is
/// taken in z_r.
pub const DENSITY_CHARTS: [[usize; 3]; 4] = [[1, 2, 3], [2, 3, 4], [3, 4, 1], [4, 1, 2]];

/// |dH/dz_r|^-1 in a specific chart, where
/// H = sum_{s in chart} l_s / z_s - l_m^2 / D + l_0,
/// D = l_0 + sum_{s in chart} l_s z_s, and m is the eliminated index.
pub fn vol_density_chart(l: &SideLengths, p: &DarbouxPoint, chart: usize) -> Result<f64> {
    let free = DENSITY_CHARTS[chart];
    let m = (1..5).find(|k| !free.contains(k)).unwrap();
    let z0 = p.z[0];
    if z0.norm() < 1e-9 {
        return Err(PentagonError::ChartSingular(0.0));
    }
    // affine coordinates with z_0 = 1
    let za: [Complex64; 5] = p.z.map(|w| w / z0);
    let r = free[2];
    let zr = za[r];
    if zr.norm() < 1e-9 {
        return Err(PentagonError::ChartSingular(0.0));
    }
    let mut d = Complex64::new(l.l[0], 0.0);
    for &s in &free {
        d += l.l[s] * za[s];
    }
    if d.norm() < 1e-12 * l.sum() {
        return Err(PentagonError::ChartSingular(0.0));
    }
    let dh = -l.l[r] / (zr * zr) + l.l[m] * l.l[m] * l.l[r] / (d * d);
    let mag = dh.norm();
    if mag < 1e-12 {
        return Err(PentagonError::ChartSingular(mag));
    }
    Ok(1.0 / mag)
}

/// Area density with the deterministic chart fallback; returns the value
/// and the chart index used.
pub fn vol_density(l: &SideLengths, p: &DarbouxPoint) -> Result<(f64, usize)> {
    let mut last = PentagonError::ChartSingular(0.0);
    for c in 0..DENSITY_CHARTS.len() {
        match vol_density_chart(l, p, c) {
            Ok(v) => return Ok((v, c)),
            Err(e) => last = e,
        }
    }
    Err(last)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// max over the five adjacent pairs of the coordinate deviation
    /// between the algebraic fold of the lift and the lifted geometric
    /// fold of the shared vertex
    pub adjacent_max_dev: f64,
    /// max commutator deviation over the five disjoint index pairs
    pub commute_max_dev: f64,
    /// max deviation of the fiber coordinate [z_l : z_m] under
    /// sigma_ij o sigma_jk for consecutive triples
    pub fiber_max_dev: f64,
}

fn point_dev(a: &DarbouxPoint, b: &DarbouxPoint) -> f64 {
    (0..5).map(|k| (a.z[k] - b.z[k]).norm()).fold(0.0, f64::max)
}

/// Cross-checks tying the algebraic involutions to the geometry:
/// adjacent folds match the geometric vertex fold, disjoint folds
/// commute, and sigma_ij o sigma_jk preserves the complementary fiber
/// coordinate.
pub fn consistency(l: &SideLengths, cfg: &PentagonConfig) -> Result<ConsistencyReport> {
    let lift = cfg.lift();
    // (a) adjacent pairs (i, i+1) against the geometric fold of vertex i+1
    let mut adjacent_max_dev = 0.0f64;
    for i in 0..5 {
        let j = (i + 1) % 5;
        let alg = fold_algebraic(l, &lift, i, j)?.renorm_real()?;
        let geo = fold_geometric(l, cfg, j)?.lift();
        adjacent_max_dev = adjacent_max_dev.max(point_dev(&alg, &geo));
    }
    // (b) disjoint pairs commute: {i,j} cap {k,m} empty
    let mut commute_max_dev = 0.0f64;
    for i in 0..5 {
        let j = (i + 1) % 5;
        let k = (i + 2) % 5;
        let m = (i + 3) % 5;
        let ab = fold_algebraic(l, &fold_algebraic(l, &lift, i, j)?, k, m)?;
        let ba = fold_algebraic(l, &fold_algebraic(l, &lift, k, m)?, i, j)?;
        commute_max_dev = commute_max_dev.max(point_dev(&ab, &ba));
    }
    // (c) sigma_ij o sigma_jk preserves [z_l : z_m] for consecutive i,j,k
    let mut fiber_max_dev = 0.0f64;
    for i in 0..5 {
        let j = (i + 1) % 5;
        let k = (i + 2) % 5;
        let lidx = (i + 3) % 5;
        let midx = (i + 4) % 5;
        let img = fold_algebraic(l, &fold_algebraic(l, &lift, j, k)?, i, j)?;
        // projective deviation of [z_l : z_m]
        let before = lift.z[lidx] * img.z[midx] - img.z[lidx] * lift.z[midx];
        let norm = lift.z[lidx].norm().max(lift.z[midx].norm())
            * img.z[lidx].norm().max(img.z[midx].norm());
        fiber_max_dev = fiber_max_dev.max(before.norm() / norm.max(1e-300));
    }
    Ok(ConsistencyReport { adjacent_max_dev, commute_max_dev, fiber_max_dev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    const ZETA: f64 = 2.0 * std::f64::consts::PI / 5.0;

    fn unit_lengths() -> SideLengths {
        SideLengths::new([1.0; 5]).unwrap()
    }

    fn sample_lengths() -> SideLengths {
        SideLengths::new([3.0, 5.0, 7.0, 11.0, 13.0]).unwrap()
    }

    fn random_config(l: &SideLengths, rng: &mut CounterRng) -> PentagonConfig {
        loop {
            let th1 = rng.next_angle();
            let th2 = rng.next_angle();
            let branch = if rng.next_u64() & 1 == 0 { 1 } else { -1 };
            if let Ok(cfg) = solve_config(l, th1, th2, branch) {
                return cfg;
            }
        }
    }

    #[test]
    fn invalid_lengths_rejected() {
        assert!(matches!(
            SideLengths::new([1.0, 1.0, 1.0, 1.0, 10.0]),
            Err(PentagonError::InvalidLengths(_))
        ));
        assert!(SideLengths::new([1.0, -1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn regular_pentagon_closes() {
        let l = unit_lengths();
        // t_i = zeta^i: theta1 = 2pi/5, theta2 = 4pi/5
        let cfg = [1i8, -1]
            .iter()
            .filter_map(|&b| solve_config(&l, ZETA, 2.0 * ZETA, b).ok())
            .find(|c| (c.turns[3] - Complex64::from_polar(1.0, 3.0 * ZETA)).norm() < 1e-9)
            .expect("one branch gives the regular pentagon");
        assert!(cfg.closure_residual(&l) < 1e-12);
        for k in 0..5 {
            assert!((cfg.turns[k] - Complex64::from_polar(1.0, k as f64 * ZETA)).norm() < 1e-12);
        }
    }

    #[test]
    fn chart_roundtrip() {
        let l = sample_lengths();
        let mut rng = CounterRng::new(17);
        for _ in 0..100 {
            let cfg = random_config(&l, &mut rng);
            let (t1, t2, b) = cfg.chart();
            let back = solve_config(&l, t1, t2, b).unwrap();
            for k in 0..5 {
                assert!((cfg.turns[k] - back.turns[k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn smoothness_examples() {
        let r = smoothness([3.0, 5.0, 7.0, 11.0, 13.0]).unwrap();
        assert!(r.smooth && r.pentagon_exists);
        assert!(r.min_signed_sum >= 1.0 - 1e-12); // odd total => odd signed sums
        let r = smoothness([1.0, 1.0, 1.0, 1.0, 2.0]).unwrap();
        assert!(!r.smooth);
        assert!(r.min_signed_sum < 1e-12);
        let r = smoothness([1.0, 1.0, 1.0, 1.0, 10.0]).unwrap();
        assert!(!r.pentagon_exists);
        assert_eq!(r.nodes.len(), 10);
        assert!(smoothness([1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn geometric_fold_preserves_lengths_and_is_involutive() {
        let l = unit_lengths();
        let cfg = solve_config(&l, ZETA, 2.0 * ZETA, 1)
            .or_else(|_| solve_config(&l, ZETA, 2.0 * ZETA, -1))
            .unwrap();
        let folded = fold_geometric(&l, &cfg, 2).unwrap();
        for (k, &s) in folded.side_lengths(&l).iter().enumerate() {
            assert!((s - l.l[k]).abs() < 1e-12, "side {k}: {s}");
        }
        let back = fold_geometric(&l, &folded, 2).unwrap();
        for k in 0..5 {
            assert!((back.turns[k] - cfg.turns[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn geometric_fold_fixes_collinear_vertex() {
        // l = (1,1,1,1,2), t0 = t1 = 1 makes a0, a1, a2 collinear;
        // folding vertex 1 is then the identity
        let l = SideLengths::new([1.0, 1.0, 1.0, 1.0, 2.0]).unwrap();
        let cfg = solve_config(&l, 0.0, 2.0 * std::f64::consts::FRAC_PI_3, 1).unwrap();
        let folded = fold_geometric(&l, &cfg, 1).unwrap();
        for k in 0..5 {
            assert!((folded.turns[k] - cfg.turns[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn darboux_residuals_examples() {
        let l = unit_lengths();
        let roots: [Complex64; 5] =
            std::array::from_fn(|k| Complex64::from_polar(1.0, k as f64 * ZETA));
        let p = DarbouxPoint::new(roots).unwrap();
        let (r1, r2) = p.residuals(&l);
        assert!(r1 < 1e-14 && r2 < 1e-14);

        let ones = DarbouxPoint::new([Complex64::new(1.0, 0.0); 5]).unwrap();
        let (r1, _) = ones.residuals(&l);
        assert!((r1 - 5.0).abs() < 1e-14);
    }

    #[test]
    fn lifted_config_satisfies_darboux() {
        let l = sample_lengths();
        let mut rng = CounterRng::new(3);
        for _ in 0..50 {
            let cfg = random_config(&l, &mut rng);
            let (r1, r2) = cfg.lift().residuals(&l);
            assert!(r1 < 1e-12 * l.sum(), "r1 = {r1}");
            assert!(r2 < 1e-12 * l.sum() * l.sum(), "r2 = {r2}");
        }
    }

    #[test]
    fn algebraic_fold_equal_lengths_swaps() {
        let l = unit_lengths();
        let roots: [Complex64; 5] =
            std::array::from_fn(|k| Complex64::from_polar(1.0, k as f64 * ZETA));
        let p = DarbouxPoint::new(roots).unwrap();
        let q = fold_algebraic(&l, &p, 1, 3).unwrap();
        // equal lengths: v = 1, pure swap (z0 untouched, gauge unchanged)
        assert!((q.z[1] - p.z[3]).norm() < 1e-14);
        assert!((q.z[3] - p.z[1]).norm() < 1e-14);
        assert!((q.z[2] - p.z[2]).norm() < 1e-14);
    }

    #[test]
    fn algebraic_fold_fixed_when_coordinates_equal() {
        let l = sample_lengths();
        let mut rng = CounterRng::new(9);
        let cfg = random_config(&l, &mut rng);
        let mut z = cfg.lift().z;
        z[2] = z[4]; // not on the surface, but the formula is pointwise
        let p = DarbouxPoint::new(z).unwrap();
        let q = fold_algebraic(&l, &p, 2, 4).unwrap();
        for k in 0..5 {
            assert!((q.z[k] - p.z[k]).norm() < 1e-13);
        }
    }

    #[test]
    fn algebraic_fold_preserves_residuals_and_real_locus() {
        let l = sample_lengths();
        let mut rng = CounterRng::new(4);
        for _ in 0..50 {
            let cfg = random_config(&l, &mut rng);
            let p = cfg.lift();
            for i in 0..5 {
                let j = (i + 1) % 5;
                let q = fold_algebraic(&l, &p, i, j).unwrap();
                let (r1, r2) = q.residuals(&l);
                assert!(r1 < 1e-10 * l.sum());
                assert!(r2 < 1e-10 * l.sum() * l.sum());
                assert!(q.is_real(1e-10));
                let back = fold_algebraic(&l, &q, i, j).unwrap();
                assert!(point_dev(&back, &p) < 1e-10);
            }
        }
    }

    #[test]
    fn indeterminacy_detected() {
        let l = sample_lengths();
        // q_01 = [l_1 : -l_0] in (z0, z1), others zero: denominator
        // l_0 z_1 + l_1 z_0 = -l_0 l_0 + l_1 l_1 ... pick exact kernel:
        // z = (l_1, -l_0, 0, 0, 0) gives l0*(-l0) + l1*l1 != 0; the
        // indeterminacy needs l0 z1 + l1 z0 = 0: z = (l_0, -l_1, ...)
        let z = [
            Complex64::new(l.l[0], 0.0),
            Complex64::new(-l.l[1], 0.0),
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.2, 0.5),
            Complex64::new(0.7, -0.4),
        ];
        let p = DarbouxPoint { z };
        assert!(matches!(
            fold_algebraic(&l, &p, 0, 1),
            Err(PentagonError::IndeterminacyPoint { i: 0, j: 1 })
        ));
    }

    #[test]
    fn density_regular_pentagon_positive() {
        let l = unit_lengths();
        let roots: [Complex64; 5] =
            std::array::from_fn(|k| Complex64::from_polar(1.0, k as f64 * ZETA));
        let p = DarbouxPoint::new(roots).unwrap();
        let (d, chart) = vol_density(&l, &p).unwrap();
        assert!(d.is_finite() && d > 0.0);
        assert_eq!(chart, 0);
        // closed form: D = 1 + z1 + z2 + z3 = -z4, dH/dz3 = -1/z3^2 + 1/z4^2
        let z = |k: usize| Complex64::from_polar(1.0, k as f64 * ZETA);
        let expect = 1.0 / (-1.0 / (z(3) * z(3)) + 1.0 / (z(4) * z(4))).norm();
        assert!((d - expect).abs() < 1e-12);
    }

    #[test]
    fn density_chart_fallback() {
        let l = sample_lengths();
        // force chart 0 singular by putting z3 on the singular locus of
        // the formula is fiddly; instead check the error path directly:
        // z_r ~ 0 breaks the chart
        let z = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.4, 0.2),
            Complex64::new(-0.5, 0.3),
            Complex64::new(1e-12, 0.0),
            Complex64::new(0.2, -0.8),
        ];
        let p = DarbouxPoint { z };
        assert!(matches!(vol_density_chart(&l, &p, 0), Err(PentagonError::ChartSingular(_))));
        // chart 1 differentiates in z4 and is fine here
        assert!(vol_density_chart(&l, &p, 1).is_ok());
    }

    #[test]
    fn consistency_on_random_configs() {
        let l = sample_lengths();
        let mut rng = CounterRng::new(21);
        for _ in 0..20 {
            let cfg = random_config(&l, &mut rng);
            let rep = consistency(&l, &cfg).unwrap();
            assert!(rep.adjacent_max_dev < 1e-8, "adjacent {}", rep.adjacent_max_dev);
            assert!(rep.commute_max_dev < 1e-10, "commute {}", rep.commute_max_dev);
            assert!(rep.fiber_max_dev < 1e-10, "fiber {}", rep.fiber_max_dev);
        }
    }

    #[test]
    fn long_fold_words_stay_on_surface() {
        let l = sample_lengths();
        let mut rng = CounterRng::new(33);
        let mut p = random_config(&l, &mut rng).lift();
        for _ in 0..1000 {
            let i = rng.next_below(5);
            let j = (i + 1) % 5;
            p = fold_algebraic(&l, &p, i, j).unwrap().renorm_real().unwrap();
            let (r1, r2) = p.residuals(&l);
            assert!(r1 < 1e-9 * l.sum());
            assert!(r2 < 1e-9 * l.sum() * l.sum());
        }
    }
}
