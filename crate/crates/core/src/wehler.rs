//! Real Wehler (2,2,2) surfaces in (P1)^3: evaluation of the
//! tri-homogenized equation, the three involutions sigma_k as exact root
//! swaps in the fiber quadratics, real-locus sampling in the angle
//! parametrization, the canonical area density, and the exact integer
//! action on cohomology.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minkowski::IntersectionForm;
use crate::rng::CounterRng;

#[derive(Debug, Error)]
pub enum WehlerError {
    #[error("surface tensor is identically zero")]
    InvalidSurface,
    #[error("fiber is contained in the surface (A, B, C all vanish)")]
    DegenerateFiber,
    #[error("root swap is indeterminate at this point")]
    IndeterminateRoot,
    #[error("point is not on the surface (residual {0})")]
    NotOnSurface(f64),
    #[error("chart is singular: |dF/dx_{axis}| = {value}")]
    ChartSingular { axis: usize, value: f64 },
    #[error("numeric failure: {0}")]
    Numeric(String),
}

type Result<T> = std::result::Result<T, WehlerError>;

/// A point of P1(R), stored as a unit vector (u, v); affine value u/v.
/// The point at infinity is v = 0; in the angle chart x = tan(theta/2)
/// it sits at theta = -pi.
#[derive(Clone, Copy, Debug)]
pub struct P1Point {
    pub u: f64,
    pub v: f64,
}

impl P1Point {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        let n = (u * u + v * v).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(WehlerError::Numeric("P1 point with zero or non-finite norm".into()));
        }
        // canonical representative: v >= 0, and u >= 0 when v == 0
        let (mut u, mut v) = (u / n, v / n);
        if v < 0.0 || (v == 0.0 && u < 0.0) {
            u = -u;
            v = -v;
        }
        Ok(P1Point { u, v })
    }

    pub fn from_affine(x: f64) -> Self {
        P1Point::new(x, 1.0).unwrap()
    }

    pub fn from_angle(theta: f64) -> Self {
        // x = tan(theta/2); (u, v) = (sin(theta/2), cos(theta/2))
        P1Point::new((theta / 2.0).sin(), (theta / 2.0).cos()).unwrap()
    }

    pub fn infinity() -> Self {
        P1Point { u: 1.0, v: 0.0 }
    }

    pub fn angle(&self) -> f64 {
        let t = 2.0 * self.u.atan2(self.v);
        if t >= std::f64::consts::PI {
            t - 2.0 * std::f64::consts::PI
        } else {
            t
        }
    }

    pub fn affine(&self) -> f64 {
        self.u / self.v
    }

    pub fn is_infinite(&self, tol: f64) -> bool {
        self.v.abs() < tol
    }

    /// Projective equality: |u v' - u' v| < tol.
    pub fn approx_eq(&self, other: &P1Point, tol: f64) -> bool {
        (self.u * other.v - other.u * self.v).abs() < tol
    }
}

/// Real (2,2,2) coefficient tensor; `coeffs[i][j][k]` multiplies
/// x1^i x2^j x3^k with 0 <= i, j, k <= 2.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WehlerSurface {
    pub coeffs: [[[f64; 3]; 3]; 3],
}

/// A point of X in (P1)^3 with its on-surface residual.
#[derive(Clone, Copy, Debug)]
pub struct SurfacePoint {
    pub x: [P1Point; 3],
    pub residual: f64,
}

impl WehlerSurface {
    pub fn new(coeffs: [[[f64; 3]; 3]; 3]) -> Result<Self> {
        let s = WehlerSurface { coeffs };
        if s.scale() == 0.0 {
            return Err(WehlerError::InvalidSurface);
        }
        Ok(s)
    }

    /// The symmetric test surface x1^2 + x2^2 + x3^2 + x1^2 x2^2 x3^2 - 4.
    pub fn sample_surface() -> Self {
        let mut c = [[[0.0; 3]; 3]; 3];
        c[2][0][0] = 1.0;
        c[0][2][0] = 1.0;
        c[0][0][2] = 1.0;
        c[2][2][2] = 1.0;
        c[0][0][0] = -4.0;
        WehlerSurface { coeffs: c }
    }

    /// Largest |coefficient|.
    pub fn scale(&self) -> f64 {
        let mut s = 0.0f64;
        for pl in &self.coeffs {
            for row in pl {
                for &c in row {
                    s = s.max(c.abs());
                }
            }
        }
        s
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() != 27 {
            return Err(WehlerError::Numeric(format!("need 27 coefficients, got {}", flat.len())));
        }
        let mut c = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    c[i][j][k] = flat[9 * i + 3 * j + k];
                }
            }
        }
        WehlerSurface::new(c)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(27);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    out.push(self.coeffs[i][j][k]);
                }
            }
        }
        out
    }

    /// Tri-homogenized evaluation; well defined on unit-normalized
    /// P1 representatives.
    pub fn evaluate(&self, p: &[P1Point; 3]) -> f64 {
        let m = |pt: &P1Point, e: usize| -> f64 {
            match e {
                0 => pt.v * pt.v,
                1 => pt.u * pt.v,
                _ => pt.u * pt.u,
            }
        };
        let mut acc = 0.0;
        for i in 0..3 {
            let m1 = m(&p[0], i);
            if m1 == 0.0 {
                continue;
            }
            for j in 0..3 {
                let m2 = m(&p[1], j);
                if m2 == 0.0 {
                    continue;
                }
                for k in 0..3 {
                    let c = self.coeffs[i][j][k];
                    if c != 0.0 {
                        acc += c * m1 * m2 * m(&p[2], k);
                    }
                }
            }
        }
        acc
    }

    /// Gradient of the tri-homogenized form with respect to the six
    /// homogeneous coordinates (u1, v1, u2, v2, u3, v3).
    pub fn gradient6(&self, p: &[P1Point; 3]) -> [f64; 6] {
        let m = |pt: &P1Point, e: usize| -> f64 {
            match e {
                0 => pt.v * pt.v,
                1 => pt.u * pt.v,
                _ => pt.u * pt.u,
            }
        };
        // d/du of u^e v^(2-e), d/dv of same
        let du = |pt: &P1Point, e: usize| -> f64 {
            match e {
                0 => 0.0,
                1 => pt.v,
                _ => 2.0 * pt.u,
            }
        };
        let dv = |pt: &P1Point, e: usize| -> f64 {
            match e {
                0 => 2.0 * pt.v,
                1 => pt.u,
                _ => 0.0,
            }
        };
        let mut g = [0.0; 6];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let c = self.coeffs[i][j][k];
                    if c == 0.0 {
                        continue;
                    }
                    let (m1, m2, m3) = (m(&p[0], i), m(&p[1], j), m(&p[2], k));
                    g[0] += c * du(&p[0], i) * m2 * m3;
                    g[1] += c * dv(&p[0], i) * m2 * m3;
                    g[2] += c * m1 * du(&p[1], j) * m3;
                    g[3] += c * m1 * dv(&p[1], j) * m3;
                    g[4] += c * m1 * m2 * du(&p[2], k);
                    g[5] += c * m1 * m2 * dv(&p[2], k);
                }
            }
        }
        g
    }

    /// Coefficients (A, B, C) of the fiber quadratic A u^2 + B uv + C v^2
    /// in the homogeneous coordinates of axis `k`, the other two points
    /// held fixed.
    pub fn fiber_quadratic(&self, axis: usize, p: &[P1Point; 3]) -> (f64, f64, f64) {
        let m = |pt: &P1Point, e: usize| -> f64 {
            match e {
                0 => pt.v * pt.v,
                1 => pt.u * pt.v,
                _ => pt.u * pt.u,
            }
        };
        let (oa, ob) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let mut abc = [0.0f64; 3];
        for ea in 0..3 {
            let ma = m(&p[oa], ea);
            if ma == 0.0 {
                continue;
            }
            for eb in 0..3 {
                let mb = m(&p[ob], eb);
                if mb == 0.0 {
                    continue;
                }
                for ek in 0..3 {
                    let c = match axis {
                        0 => self.coeffs[ek][ea][eb],
                        1 => self.coeffs[ea][ek][eb],
                        _ => self.coeffs[ea][eb][ek],
                    };
                    if c != 0.0 {
                        abc[ek] += c * ma * mb;
                    }
                }
            }
        }
        (abc[2], abc[1], abc[0]) // (A, B, C): u^2, uv, v^2
    }

    /// Build a surface point, checking the residual against the
    /// coefficient scale.
    pub fn point(&self, x: [P1Point; 3]) -> Result<SurfacePoint> {
        let r = self.evaluate(&x).abs();
        if r > 1e-9 * self.scale() {
            return Err(WehlerError::NotOnSurface(r));
        }
        Ok(SurfacePoint { x, residual: r })
    }

    /// One Newton step on the fiber quadratic in coordinate `axis`,
    /// re-projecting onto F = 0 after rounding drift.
    fn newton_reproject(&self, axis: usize, x: &mut [P1Point; 3]) {
        let (a, b, c) = self.fiber_quadratic(axis, x);
        let pt = x[axis];
        // work in the chart where the point is far from the boundary
        if pt.v.abs() >= pt.u.abs() {
            let t = pt.u / pt.v;
            let f = a * t * t + b * t + c;
            let fp = 2.0 * a * t + b;
            if fp.abs() > 1e-300 {
                let t2 = t - f / fp;
                if t2.is_finite() {
                    if let Ok(np) = P1Point::new(t2, 1.0) {
                        x[axis] = np;
                    }
                }
            }
        } else {
            // s = v/u chart: C s^2 + B s + A
            let s = pt.v / pt.u;
            let f = c * s * s + b * s + a;
            let fp = 2.0 * c * s + b;
            if fp.abs() > 1e-300 {
                let s2 = s - f / fp;
                if s2.is_finite() {
                    if let Ok(np) = P1Point::new(1.0, s2) {
                        x[axis] = np;
                    }
                }
            }
        }
    }

    /// The involution sigma_k: replace x_k by the companion root of the
    /// fiber quadratic, leaving the other coordinates untouched.
    ///
    /// The companion is computed either in product-of-roots form
    /// [C v : A u] or sum-of-roots form [-(Bv + Au) : A v], choosing the
    /// better-conditioned divisor; one Newton step then re-projects onto
    /// the surface.
    pub fn sigma(&self, axis: usize, p: &SurfacePoint) -> Result<SurfacePoint> {
        let (a, b, c) = self.fiber_quadratic(axis, &p.x);
        let fscale = a.abs().max(b.abs()).max(c.abs());
        if fscale < 1e-12 * self.scale() {
            return Err(WehlerError::DegenerateFiber);
        }
        let pt = p.x[axis];
        let (u, v) = (pt.u, pt.v);
        let tol = 1e-12 * fscale;
        let new_pt = if a.abs() >= tol {
            let div_prod = (a * u).abs();
            let div_sum = (a * v).abs();
            if div_prod.max(div_sum) < tol && (c * v).abs() < tol {
                return Err(WehlerError::IndeterminateRoot);
            }
            if div_prod >= div_sum {
                P1Point::new(c * v, a * u)
            } else {
                P1Point::new(-(b * v + a * u), a * v)
            }
            .map_err(|_| WehlerError::IndeterminateRoot)?
        } else if b.abs() >= tol {
            // degenerate leading coefficient: roots are [-C : B] and
            // the point at infinity
            if v.abs() * fscale <= u.abs() * tol {
                P1Point::new(-c, b).map_err(|_| WehlerError::IndeterminateRoot)?
            } else {
                P1Point::infinity()
            }
        } else {
            // A, B ~ 0, C != 0: double root at infinity, fixed point
            pt
        };
        let mut x = p.x;
        x[axis] = new_pt;
        self.newton_reproject(axis, &mut x);
        let residual = self.evaluate(&x).abs();
        Ok(SurfacePoint { x, residual })
    }

    /// Real roots of the fiber quadratic over axis `k`, as P1 points.
    pub fn fiber_roots(&self, axis: usize, p: &[P1Point; 3]) -> Vec<P1Point> {
        let (a, b, c) = self.fiber_quadratic(axis, p);
        let fscale = a.abs().max(b.abs()).max(c.abs());
        if fscale == 0.0 {
            return Vec::new();
        }
        let tol = 1e-14 * fscale;
        if a.abs() < tol {
            if b.abs() < tol {
                return Vec::new();
            }
            return vec![P1Point::new(-c, b).unwrap(), P1Point::infinity()];
        }
        let d = b * b - 4.0 * a * c;
        if d < 0.0 {
            return Vec::new();
        }
        if d == 0.0 {
            return vec![P1Point::new(-b, 2.0 * a).unwrap()];
        }
        let sq = d.sqrt();
        let q = -0.5 * (b + b.signum() * sq);
        let mut roots = vec![P1Point::new(q, a).unwrap()];
        if q.abs() > 0.0 {
            roots.push(P1Point::new(c, q).unwrap());
        } else {
            roots.push(P1Point::new(-b - q, a).unwrap());
        }
        roots
    }

    /// Sample the real locus: draw (theta1, theta2) uniformly, solve the
    /// fiber quadratic in x3, keep real roots. Returns up to 2n points,
    /// each residual-checked; an empty result means no real point was
    /// found in n trials (an empty-real-locus warning, not an error).
    pub fn sample_real(&self, n: usize, seed: u64) -> Vec<SurfacePoint> {
        let mut rng = CounterRng::new(seed);
        let mut out = Vec::new();
        for _ in 0..n {
            let p1 = P1Point::from_angle(rng.next_angle());
            let p2 = P1Point::from_angle(rng.next_angle());
            let probe = [p1, p2, P1Point::from_affine(0.0)];
            for root in self.fiber_roots(2, &probe) {
                let mut x = [p1, p2, root];
                self.newton_reproject(2, &mut x);
                let residual = self.evaluate(&x).abs();
                if residual < 1e-10 * self.scale() {
                    out.push(SurfacePoint { x, residual });
                }
            }
        }
        out
    }

    /// Affine partial derivative dF/dx_axis at a real affine point.
    pub fn affine_partial(&self, axis: usize, x: [f64; 3]) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let c = self.coeffs[i][j][k];
                    if c == 0.0 {
                        continue;
                    }
                    let e = [i, j, k];
                    let ek = e[axis];
                    if ek == 0 {
                        continue;
                    }
                    let mut term = c * ek as f64 * x[axis].powi(ek as i32 - 1);
                    for (ax, &ee) in e.iter().enumerate() {
                        if ax != axis {
                            term *= x[ax].powi(ee as i32);
                        }
                    }
                    acc += term;
                }
            }
        }
        acc
    }

    /// Canonical area density at a real point, in the angle chart of the
    /// two coordinates other than `axis`:
    /// |dF/dx_axis|^-1 * dx_i/dtheta_i * dx_j/dtheta_j with
    /// dx/dtheta = (1 + x^2)/2.
    pub fn vol_density(&self, p: &SurfacePoint, axis: usize) -> Result<f64> {
        let inf_tol = 1e-9;
        for pt in &p.x {
            if pt.is_infinite(inf_tol) {
                return Err(WehlerError::ChartSingular { axis, value: 0.0 });
            }
        }
        let x = [p.x[0].affine(), p.x[1].affine(), p.x[2].affine()];
        let d = self.affine_partial(axis, x);
        if d.abs() < 1e-12 * self.scale() {
            return Err(WehlerError::ChartSingular { axis, value: d.abs() });
        }
        let mut dens = 1.0 / d.abs();
        for (ax, &xa) in x.iter().enumerate() {
            if ax != axis {
                dens *= (1.0 + xa * xa) / 2.0;
            }
        }
        Ok(dens)
    }

    /// Randomized necessary-condition scan for smoothness and for fibers
    /// contained in the surface.
    pub fn validate(&self, samples: usize, seed: u64) -> Result<ValidationReport> {
        if self.scale() == 0.0 {
            return Err(WehlerError::InvalidSurface);
        }
        let pts = self.sample_real(samples, seed);
        let mut min_grad = f64::INFINITY;
        for p in &pts {
            let g = self.gradient6(&p.x);
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            min_grad = min_grad.min(n);
        }
        // contained-fiber proxy: scan random fibers of each projection
        let mut rng = CounterRng::new(seed ^ 0x5eed);
        let mut degenerate = false;
        for _ in 0..samples {
            let pa = P1Point::from_angle(rng.next_angle());
            let pb = P1Point::from_angle(rng.next_angle());
            for axis in 0..3 {
                let mut probe = [pa, pb, pb];
                match axis {
                    0 => {
                        probe = [P1Point::from_affine(0.0), pa, pb];
                    }
                    1 => {
                        probe = [pa, P1Point::from_affine(0.0), pb];
                    }
                    _ => {
                        probe[2] = P1Point::from_affine(0.0);
                    }
                }
                let (a, b, c) = self.fiber_quadratic(axis, &probe);
                let s = 1e-9 * self.scale();
                if a.abs() < s && b.abs() < s && c.abs() < s {
                    degenerate = true;
                }
            }
        }
        Ok(ValidationReport {
            real_points_found: pts.len(),
            min_gradient_norm: if pts.is_empty() { f64::NAN } else { min_grad },
            degenerate_fiber_found: degenerate,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub real_points_found: usize,
    pub min_gradient_norm: f64,
    pub degenerate_fiber_found: bool,
}

/// The exact cohomology payload of a very general Wehler surface: the
/// intersection form on (c1, c2, c3) and the three pullback matrices.
#[derive(Clone, Debug)]
pub struct WehlerCohomology {
    pub form: IntersectionForm,
    pub sigma_star: [Vec<Vec<i64>>; 3],
}

pub const WEHLER_GRAM: [[i64; 3]; 3] = [[0, 2, 2], [2, 0, 2], [2, 2, 0]];

pub const SIGMA_STAR: [[[i64; 3]; 3]; 3] = [
    [[-1, 0, 0], [2, 1, 0], [2, 0, 1]],
    [[1, 2, 0], [0, -1, 0], [0, 2, 1]],
    [[1, 0, 2], [0, 1, 2], [0, 0, -1]],
];

fn mat3(m: &[[i64; 3]; 3]) -> Vec<Vec<i64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

fn mat3_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    let mut out = vec![vec![0i64; n]; n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i][j] = out[i][j]
                    .checked_add(a[i][k].checked_mul(b[k][j]).expect("overflow"))
                    .expect("overflow");
            }
        }
    }
    out
}

/// Exact integer matrices of the sigma_k^* and the Gram matrix; all the
/// lattice identities are asserted at construction.
pub fn coh_matrices() -> WehlerCohomology {
    let gram: Vec<Vec<i64>> = WEHLER_GRAM.iter().map(|r| r.to_vec()).collect();
    let form = IntersectionForm::from_int(gram.clone()).expect("Wehler form has signature (1,2)");
    let sigma: [Vec<Vec<i64>>; 3] =
        [mat3(&SIGMA_STAR[0]), mat3(&SIGMA_STAR[1]), mat3(&SIGMA_STAR[2])];
    for (k, m) in sigma.iter().enumerate() {
        // involution
        let sq = mat3_mul(m, m);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(sq[i][j], i64::from(i == j), "sigma_{k}^2 != I");
            }
        }
        // congruence M^T G M = G
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0i64;
                for a in 0..3 {
                    for b in 0..3 {
                        s += m[a][i] * WEHLER_GRAM[a][b] * m[b][j];
                    }
                }
                assert_eq!(s, WEHLER_GRAM[i][j], "sigma_{k} does not preserve the form");
            }
        }
        // reflection identity sigma_k c_k = -c_k + 2 c_i + 2 c_j
        for row in 0..3 {
            let expect = if row == k { -1 } else { 2 };
            assert_eq!(m[row][k], expect, "sigma_{k} column {k}");
        }
    }
    WehlerCohomology { form, sigma_star: sigma }
}

/// Pullback matrix of a word of involutions. Letters are in application
/// order on points (first applied first); under (f.g)^* = g^*.f^* the
/// matrix is M_{k1} ... M_{km} for the word g_{km} o ... o g_{k1}, i.e.
/// the product of the letters' matrices reading the application order
/// left to right.
pub fn pullback_of_word(letters: &[usize]) -> Vec<Vec<i64>> {
    let coh = coh_matrices();
    let mut acc = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
    for &k in letters {
        acc = mat3_mul(&acc, &coh.sigma_star[k]);
    }
    acc
}
