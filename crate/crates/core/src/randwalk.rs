//! The random-composition engine.
//!
//! Orbits are left compositions `f_omega^n = f_{n-1} o ... o f_0` driven
//! by reproducible counter-based itineraries. On the geometric side the
//! module estimates tangent Lyapunov exponents (2x2 chart differentials
//! by central finite differences, QR-renormalized), stable-direction
//! itinerary dependence, twist growth, empirical measures and
//! equidistribution diagnostics. On the lattice side it iterates the
//! pullback cocycle on cohomology: the exponent `lambda_{H^{1,1}}`, the
//! limit classes `e(omega)`, and the Furstenberg-formula estimator.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minkowski::{CohClass, IntersectionForm};
use crate::pentagon::{self, DarbouxPoint, SideLengths};
use crate::rng::CounterRng;
use crate::wehler::{P1Point, SurfacePoint, WehlerSurface};

#[derive(Debug, Error)]
pub enum RandwalkError {
    #[error("invalid generator system: {0}")]
    InvalidSystem(String),
    #[error("step failed: {0}")]
    Step(String),
    #[error("chart failure: {0}")]
    Chart(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),
    #[error("volume sampler degenerate (total weight ~ 0)")]
    SamplerError,
}

type Result<T> = std::result::Result<T, RandwalkError>;

// ---------------------------------------------------------------------
// surfaces as charted systems
// ---------------------------------------------------------------------

/// A real surface with a distinguished 2-angle chart `(theta1, theta2)`
/// plus a branch sign, a finite set of base involutions, and the
/// invariant area density expressed in that chart.
pub trait RealSurfaceSystem {
    type Point: Clone;

    fn letter_count(&self) -> usize;
    fn apply_letter(&self, k: usize, p: &Self::Point) -> Result<Self::Point>;
    fn chart(&self, p: &Self::Point) -> (f64, f64, i8);
    fn lift(&self, theta1: f64, theta2: f64, branch: i8) -> Result<Self::Point>;
    /// Invariant density with respect to d(theta1) d(theta2) in the same
    /// chart used by [`Self::chart`]/[`Self::lift`].
    fn chart_density(&self, p: &Self::Point) -> Result<f64>;
    /// On-surface residual, scale-normalized.
    fn surface_residual(&self, p: &Self::Point) -> f64;
    /// A random start point on the real locus (up to 100 draws).
    fn random_point(&self, rng: &mut CounterRng) -> Result<Self::Point>;
}

/// Pentagon space of a fixed side-length vector; letters k = 0..4 are the
/// adjacent folds sigma_{k,k+1}.
pub struct PentagonSystem {
    pub lengths: SideLengths,
}

impl PentagonSystem {
    pub fn new(lengths: SideLengths) -> Self {
        PentagonSystem { lengths }
    }
}

impl RealSurfaceSystem for PentagonSystem {
    type Point = DarbouxPoint;

    fn letter_count(&self) -> usize {
        5
    }

    fn apply_letter(&self, k: usize, p: &DarbouxPoint) -> Result<DarbouxPoint> {
        let q = pentagon::fold_algebraic(&self.lengths, p, k, (k + 1) % 5)
            .map_err(|e| RandwalkError::Step(e.to_string()))?;
        q.renorm_real().map_err(|e| RandwalkError::Step(e.to_string()))
    }

    fn chart(&self, p: &DarbouxPoint) -> (f64, f64, i8) {
        let cfg = p.to_config(&self.lengths).expect("real Darboux point");
        cfg.chart()
    }

    fn lift(&self, theta1: f64, theta2: f64, branch: i8) -> Result<DarbouxPoint> {
        let cfg = pentagon::solve_config(&self.lengths, theta1, theta2, branch)
            .map_err(|e| RandwalkError::Chart(e.to_string()))?;
        Ok(cfg.lift())
    }

    fn chart_density(&self, p: &DarbouxPoint) -> Result<f64> {
        // chart 0 differentiates in z3, matching the (theta1, theta2)
        // coordinates used by `chart`
        pentagon::vol_density_chart(&self.lengths, p, 0)
            .map_err(|e| RandwalkError::Chart(e.to_string()))
    }

    fn surface_residual(&self, p: &DarbouxPoint) -> f64 {
        let (r1, r2) = p.residuals(&self.lengths);
        let s = self.lengths.sum();
        (r1 / s).max(r2 / (s * s))
    }

    fn random_point(&self, rng: &mut CounterRng) -> Result<DarbouxPoint> {
        for _ in 0..100 {
            let b = if rng.next_u64() & 1 == 0 { 1 } else { -1 };
            if let Ok(cfg) =
                pentagon::solve_config(&self.lengths, rng.next_angle(), rng.next_angle(), b)
            {
                return Ok(cfg.lift());
            }
        }
        Err(RandwalkError::Chart("no closed pentagon found in 100 draws".into()))
    }
}

/// Real locus of a Wehler surface; letters k = 0..2 are the involutions
/// sigma_k. The chart is (theta1, theta2, branch) with
/// x_i = tan(theta_i / 2) and branch the sign distinguishing the two
/// roots of the x3 fiber quadratic.
pub struct WehlerSystem {
    pub surface: WehlerSurface,
}

impl WehlerSystem {
    pub fn new(surface: WehlerSurface) -> Self {
        WehlerSystem { surface }
    }

    fn branch_sign(&self, p: &SurfacePoint) -> i8 {
        let (a, b, _) = self.surface.fiber_quadratic(2, &p.x);
        let s = 2.0 * a * p.x[2].u + b * p.x[2].v;
        if s >= 0.0 {
            1
        } else {
            -1
        }
    }
}

impl RealSurfaceSystem for WehlerSystem {
    type Point = SurfacePoint;

    fn letter_count(&self) -> usize {
        3
    }

    fn apply_letter(&self, k: usize, p: &SurfacePoint) -> Result<SurfacePoint> {
        self.surface.sigma(k, p).map_err(|e| RandwalkError::Step(e.to_string()))
    }

    fn chart(&self, p: &SurfacePoint) -> (f64, f64, i8) {
        (p.x[0].angle(), p.x[1].angle(), self.branch_sign(p))
    }

    fn lift(&self, theta1: f64, theta2: f64, branch: i8) -> Result<SurfacePoint> {
        let p1 = P1Point::from_angle(theta1);
        let p2 = P1Point::from_angle(theta2);
        let probe = [p1, p2, P1Point::from_affine(0.0)];
        let roots = self.surface.fiber_roots(2, &probe);
        if roots.is_empty() {
            return Err(RandwalkError::Chart("no real point over (theta1, theta2)".into()));
        }
        let mut best: Option<SurfacePoint> = None;
        for root in roots {
            let pt = SurfacePoint { x: [p1, p2, root], residual: 0.0 };
            let sp = SurfacePoint {
                residual: self.surface.evaluate(&pt.x).abs(),
                ..pt
            };
            if self.branch_sign(&sp) == branch {
                best = Some(sp);
                break;
            }
            if best.is_none() {
                best = Some(sp);
            }
        }
        Ok(best.unwrap())
    }

    fn chart_density(&self, p: &SurfacePoint) -> Result<f64> {
        self.surface.vol_density(p, 2).map_err(|e| RandwalkError::Chart(e.to_string()))
    }

    fn surface_residual(&self, p: &SurfacePoint) -> f64 {
        p.residual / self.surface.scale()
    }

    fn random_point(&self, rng: &mut CounterRng) -> Result<SurfacePoint> {
        for _ in 0..100 {
            let pts = self.surface.sample_real(1, rng.next_u64());
            if let Some(p) = pts.into_iter().next() {
                return Ok(p);
            }
        }
        Err(RandwalkError::Chart("no real Wehler point found in 100 draws".into()))
    }
}

// ---------------------------------------------------------------------
// generator systems and itineraries
// ---------------------------------------------------------------------

/// A finitely supported measure on words of base involutions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorSystem {
    pub words: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
}

impl GeneratorSystem {
    pub fn new(words: Vec<Vec<usize>>, weights: Vec<f64>, letter_count: usize) -> Result<Self> {
        if words.is_empty() || words.len() != weights.len() {
            return Err(RandwalkError::InvalidSystem(
                "need equally many nonempty words and weights".into(),
            ));
        }
        for w in &words {
            if w.is_empty() {
                return Err(RandwalkError::InvalidSystem("empty word".into()));
            }
            if let Some(&bad) = w.iter().find(|&&k| k >= letter_count) {
                return Err(RandwalkError::InvalidSystem(format!(
                    "letter {bad} out of range (< {letter_count})"
                )));
            }
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|&w| !(w > 0.0)) {
            return Err(RandwalkError::InvalidSystem("weights must be positive".into()));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(GeneratorSystem { words, weights })
    }

    /// Uniform measure on the single-letter words 0..letter_count.
    pub fn uniform_letters(letter_count: usize) -> Self {
        GeneratorSystem {
            words: (0..letter_count).map(|k| vec![k]).collect(),
            weights: vec![1.0 / letter_count as f64; letter_count],
        }
    }

    pub fn apply_word<S: RealSurfaceSystem>(
        &self,
        sys: &S,
        widx: usize,
        p: &S::Point,
    ) -> Result<S::Point> {
        let mut q = p.clone();
        for &k in &self.words[widx] {
            q = sys.apply_letter(k, &q)?;
        }
        Ok(q)
    }
}

/// A lazily indexable generator-index stream: a pure function of
/// (master seed, trial index, position). `shifted(k)` is the shift map
/// sigma^k on the sequence space.
#[derive(Clone, Debug)]
pub struct Itinerary {
    stream: CounterRng,
    offset: u64,
}

impl Itinerary {
    pub fn new(master: u64, trial: u64) -> Self {
        Itinerary { stream: CounterRng::stream(master, trial), offset: 0 }
    }

    pub fn shifted(&self, k: u64) -> Self {
        Itinerary { stream: self.stream.clone(), offset: self.offset + k }
    }

    /// Generator index at a position, for the given weights.
    pub fn index_at(&self, pos: u64, weights: &[f64]) -> usize {
        let u = (self.stream.at(self.offset + pos) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        weights.len() - 1
    }
}

// ---------------------------------------------------------------------
// statistics helpers
// ---------------------------------------------------------------------

pub const BATCHES: usize = 20;

/// Mean and batch-means standard error (20 batches; falls back to the
/// naive iid standard error when the sample is too short to batch).
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    if n < 2 * BATCHES {
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        return (mean, (var / n as f64).sqrt());
    }
    let size = n / BATCHES;
    let mut bm = Vec::with_capacity(BATCHES);
    for b in 0..BATCHES {
        let chunk = &xs[b * size..(b + 1) * size];
        bm.push(chunk.iter().sum::<f64>() / size as f64);
    }
    let m = bm.iter().sum::<f64>() / BATCHES as f64;
    let var = bm.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (BATCHES - 1) as f64;
    (mean, (var / BATCHES as f64).sqrt())
}

fn wrap_angle(mut d: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    d %= TAU;
    if d >= PI {
        d -= TAU;
    } else if d < -PI {
        d += TAU;
    }
    d
}

/// Least-squares line fit: returns (slope, intercept, r_squared).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return (0.0, my, 1.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

// ---------------------------------------------------------------------
// orbits and empirical measures
// ---------------------------------------------------------------------

/// Histogram of an orbit in the (theta1, theta2, branch) chart plus a
/// thinned reservoir of raw chart samples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub grid: usize,
    /// counts, laid out [branch][i1][i2]
    pub counts: Vec<u64>,
    pub n_recorded: usize,
    pub reservoir: Vec<(f64, f64, i8)>,
    pub worst_residual: f64,
    pub truncated: bool,
}

impl EmpiricalMeasure {
    fn bin(grid: usize, theta1: f64, theta2: f64, branch: i8) -> usize {
        use std::f64::consts::{PI, TAU};
        let i1 = (((theta1 + PI) / TAU * grid as f64) as usize).min(grid - 1);
        let i2 = (((theta2 + PI) / TAU * grid as f64) as usize).min(grid - 1);
        let b = usize::from(branch > 0);
        (b * grid + i1) * grid + i2
    }

    /// Probability-normalized bin masses.
    pub fn masses(&self) -> Vec<f64> {
        let total = self.n_recorded.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }

    pub fn support_size(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Time-average of point masses along the first n orbit points; fold
/// errors truncate the orbit (flagged) rather than aborting.
pub fn run_orbit<S: RealSurfaceSystem>(
    sys: &S,
    gen: &GeneratorSystem,
    x0: &S::Point,
    it: &Itinerary,
    n: usize,
    grid: usize,
) -> EmpiricalMeasure {
    let reservoir_cap = 4096;
    let stride = (n / reservoir_cap).max(1);
    let mut m = EmpiricalMeasure {
        grid,
        counts: vec![0; 2 * grid * grid],
        n_recorded: 0,
        reservoir: Vec::new(),
        worst_residual: 0.0,
        truncated: false,
    };
    let mut p = x0.clone();
    for step in 0..n {
        let (t1, t2, b) = sys.chart(&p);
        m.counts[EmpiricalMeasure::bin(grid, t1, t2, b)] += 1;
        m.n_recorded += 1;
        if step % stride == 0 && m.reservoir.len() < reservoir_cap {
            m.reservoir.push((t1, t2, b));
        }
        m.worst_residual = m.worst_residual.max(sys.surface_residual(&p));
        if step + 1 < n {
            let w = it.index_at(step as u64, &gen.weights);
            match gen.apply_word(sys, w, &p) {
                Ok(q) => p = q,
                Err(_) => {
                    m.truncated = true;
                    break;
                }
            }
        }
    }
    m
}

// ---------------------------------------------------------------------
// tangent cocycle
// ---------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub stderr_plus: f64,
    pub stderr_minus: f64,
    pub n: usize,
    /// steps where the chart differential could not be formed and the
    /// increment was excluded
    pub gaps: usize,
}

/// 2x2 differential of one generator word in the angle chart, by central
/// finite differences (step 1e-6, with one adaptive retry at 1e-8 near
/// chart boundaries). Returns the differential and the image point.
pub fn word_differential<S: RealSurfaceSystem>(
    sys: &S,
    gen: &GeneratorSystem,
    widx: usize,
    p: &S::Point,
) -> Result<(Matrix2<f64>, S::Point)> {
    let q = gen.apply_word(sys, widx, p)?;
    let (t1, t2, b) = sys.chart(p);
    let (c1, c2, _) = sys.chart(&q);
    for &h in &[1e-6, 1e-8] {
        let mut cols = [[0.0; 2]; 2];
        let mut ok = true;
        'dims: for dim in 0..2 {
            let mut imgs = [[0.0; 2]; 2];
            for (si, sgn) in [1.0f64, -1.0].iter().enumerate() {
                let (u1, u2) = if dim == 0 { (t1 + sgn * h, t2) } else { (t1, t2 + sgn * h) };
                let pp = match sys.lift(u1, u2, b) {
                    Ok(v) => v,
                    Err(_) => {
                        ok = false;
                        break 'dims;
                    }
                };
                let qq = match gen.apply_word(sys, widx, &pp) {
                    Ok(v) => v,
                    Err(_) => {
                        ok = false;
                        break 'dims;
                    }
                };
                let (v1, v2, _) = sys.chart(&qq);
                imgs[si] = [wrap_angle(v1 - c1), wrap_angle(v2 - c2)];
            }
            cols[dim] = [
                (imgs[0][0] - imgs[1][0]) / (2.0 * h),
                (imgs[0][1] - imgs[1][1]) / (2.0 * h),
            ];
        }
        if ok {
            let j = Matrix2::new(cols[0][0], cols[1][0], cols[0][1], cols[1][1]);
            if j.iter().all(|v| v.is_finite()) {
                return Ok((j, q));
            }
        }
    }
    Err(RandwalkError::Chart("finite-difference stencil failed".into()))
}

/// QR step with positive diagonal; returns (q, (r11, r12, r22)).
fn qr2(a: &Matrix2<f64>) -> (Matrix2<f64>, (f64, f64, f64)) {
    let qr = a.qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..2 {
        if r[(i, i)] < 0.0 {
            for j in 0..2 {
                r[(i, j)] = -r[(i, j)];
                q[(j, i)] = -q[(j, i)];
            }
        }
    }
    (q, (r[(0, 0)], r[(0, 1)], r[(1, 1)]))
}

/// Tangent Lyapunov exponents of the random walk started at x0, by the
/// QR-renormalized product of chart differentials.
pub fn tangent_lyapunov<S: RealSurfaceSystem>(
    sys: &S,
    gen: &GeneratorSystem,
    x0: &S::Point,
    it: &Itinerary,
    n: usize,
) -> Result<LyapunovEstimate> {
    let mut p = x0.clone();
    let mut q = Matrix2::identity();
    let mut inc1 = Vec::with_capacity(n);
    let mut inc2 = Vec::with_capacity(n);
    let mut gaps = 0usize;
    for step in 0..n {
        let w = it.index_at(step as u64, &gen.weights);
        match word_differential(sys, gen, w, &p) {
            Ok((j, img)) => {
                let a = j * q;
                let (qn, (r11, _r12, r22)) = qr2(&a);
                if r11 > 0.0 && r22 > 0.0 {
                    inc1.push(r11.ln());
                    inc2.push(r22.ln());
                    q = qn;
                } else {
                    gaps += 1;
                    q = Matrix2::identity();
                }
                p = img;
            }
            Err(_) => {
                gaps += 1;
                // advance the orbit even when the stencil fails
                match gen.apply_word(sys, w, &p) {
                    Ok(img) => p = img,
                    Err(_) => break,
                }
            }
        }
    }
    if inc1.len() < 2 {
        return Err(RandwalkError::Step("no usable differential steps".into()));
    }
    let (m1, s1) = mean_and_stderr(&inc1);
    let (m2, s2) = mean_and_stderr(&inc2);
    let (lambda_plus, stderr_plus, lambda_minus, stderr_minus) =
        if m1 >= m2 { (m1, s1, m2, s2) } else { (m2, s2, m1, s1) };
    Ok(LyapunovEstimate { lambda_plus, lambda_minus, stderr_plus, stderr_minus, n: inc1.len(), gaps })
}

// ---------------------------------------------------------------------
// cohomological cocycle
// ---------------------------------------------------------------------

/// Composition order for the cohomology cocycle. Orbits compose on the
/// left (f_{n-1} o ... o f_0); the pullback of that word multiplies
/// contravariantly, appending new matrices on the right; the reversed
/// order prepends instead.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CohOrder {
    Pullback,
    Reversed,
}

/// Word pullback matrices and the intersection form they preserve.
pub struct CohSystem {
    pub form: IntersectionForm,
    pub word_mats: Vec<DMatrix<f64>>,
    pub weights: Vec<f64>,
}

impl CohSystem {
    /// Wehler cohomology system for the given words of involution
    /// indices (application order).
    pub fn wehler(words: &[Vec<usize>], weights: &[f64]) -> Result<Self> {
        if words.is_empty() || words.len() != weights.len() {
            return Err(RandwalkError::InvalidSystem("words/weights mismatch".into()));
        }
        let coh = crate::wehler::coh_matrices();
        let mut word_mats = Vec::with_capacity(words.len());
        for w in words {
            if w.is_empty() || w.iter().any(|&k| k >= 3) {
                return Err(RandwalkError::InvalidSystem("invalid Wehler word".into()));
            }
            let m = crate::wehler::pullback_of_word(w);
            word_mats.push(DMatrix::from_fn(3, 3, |i, j| m[i][j] as f64));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|&w| !(w > 0.0)) {
            return Err(RandwalkError::InvalidSystem("weights must be positive".into()));
        }
        Ok(CohSystem {
            form: coh.form,
            word_mats,
            weights: weights.iter().map(|w| w / total).collect(),
        })
    }

    fn kappa0(&self) -> DVector<f64> {
        self.form.reference_class().coords.clone()
    }

    /// G * kappa0, so that mass(a) = gk . a.
    fn mass_covector(&self) -> DVector<f64> {
        self.form.gram() * self.kappa0()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CohEstimate {
    pub lambda: f64,
    pub stderr: f64,
    /// three QR exponents, descending
    pub spectrum: [f64; 3],
    pub spectrum_stderr: [f64; 3],
    pub n: usize,
    pub trials: usize,
    pub per_trial: Vec<f64>,
    pub order: CohOrder,
}

/// One trial of the mass cocycle: per-step increments of
/// log M((f_omega^n)^* kappa0) and of the three QR diagonals.
fn coh_trial(
    cs: &CohSystem,
    it: &Itinerary,
    n: usize,
    order: CohOrder,
) -> (Vec<f64>, [Vec<f64>; 3]) {
    let dim = cs.form.dim();
    let k0 = cs.kappa0();
    let gk = cs.mass_covector();
    let mut prod = DMatrix::<f64>::identity(dim, dim);
    let mut logscale = 0.0f64;
    let mut prev = 0.0f64; // log M(kappa0) = 0
    let mut incs = Vec::with_capacity(n);
    let mut qmat = DMatrix::<f64>::identity(dim, dim);
    let mut diag_incs: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for step in 0..n {
        let w = it.index_at(step as u64, &cs.weights);
        let m = &cs.word_mats[w];
        prod = match order {
            CohOrder::Pullback => &prod * m,
            CohOrder::Reversed => m * &prod,
        };
        let s = prod.norm();
        logscale += s.ln();
        prod /= s;
        let v = &prod * &k0;
        let mass = gk.dot(&v);
        let logmass = mass.abs().ln() + logscale;
        incs.push(logmass - prev);
        prev = logmass;
        // QR spectrum of the same step matrix sequence
        let a = m * &qmat;
        let qr = a.qr();
        let mut qq = qr.q();
        let r = qr.r();
        for i in 0..dim.min(3) {
            let d = r[(i, i)];
            diag_incs[i].push(d.abs().ln());
            if d < 0.0 {
                for j in 0..dim {
                    qq[(j, i)] = -qq[(j, i)];
                }
            }
        }
        qmat = qq;
    }
    (incs, diag_incs)
}

/// Cohomological Lyapunov exponent over independent itinerary restarts.
/// A 10% burn-in discards the transient of the per-step log-mass
/// increments (they converge geometrically for deterministic words).
pub fn coh_lyapunov(
    cs: &CohSystem,
    master: u64,
    trials: usize,
    n: usize,
    order: CohOrder,
) -> Result<CohEstimate> {
    if trials == 0 || n < 10 {
        return Err(RandwalkError::InsufficientSample("need trials >= 1, n >= 10".into()));
    }
    let burn = n / 10;
    let mut per_trial = Vec::with_capacity(trials);
    let mut per_trial_spec: Vec<[f64; 3]> = Vec::with_capacity(trials);
    let mut single_incs: Vec<f64> = Vec::new();
    for t in 0..trials {
        let it = Itinerary::new(master, t as u64);
        let (incs, diag) = coh_trial(cs, &it, n, order);
        let tail = &incs[burn..];
        per_trial.push(tail.iter().sum::<f64>() / tail.len() as f64);
        let mut spec = [0.0; 3];
        for i in 0..3 {
            let dtail = &diag[i][burn..];
            spec[i] = dtail.iter().sum::<f64>() / dtail.len() as f64;
        }
        per_trial_spec.push(spec);
        if trials == 1 {
            single_incs = tail.to_vec();
        }
    }
    let (lambda, stderr) = if trials == 1 {
        mean_and_stderr(&single_incs)
    } else {
        let m = per_trial.iter().sum::<f64>() / trials as f64;
        let var = per_trial.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
            / (trials.max(2) - 1) as f64;
        (m, (var / trials as f64).sqrt())
    };
    let mut spectrum = [0.0; 3];
    let mut spectrum_stderr = [0.0; 3];
    for i in 0..3 {
        let col: Vec<f64> = per_trial_spec.iter().map(|s| s[i]).collect();
        if trials == 1 {
            spectrum[i] = col[0];
            spectrum_stderr[i] = stderr;
        } else {
            let m = col.iter().sum::<f64>() / trials as f64;
            let var =
                col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (trials.max(2) - 1) as f64;
            spectrum[i] = m;
            spectrum_stderr[i] = (var / trials as f64).sqrt();
        }
    }
    Ok(CohEstimate { lambda, stderr, spectrum, spectrum_stderr, n, trials, per_trial, order })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitClassReport {
    /// mass-1 representative of (f_omega^n)^* [kappa0]
    pub e_hat: Vec<f64>,
    pub q_value: f64,
    /// min_i <e_hat | c_i> (nef necessary condition: all nonnegative)
    pub nef_min_pairing: f64,
    /// angle between f_0^* e_hat(sigma omega) and e_hat(omega)
    pub equivariance_angle: f64,
    pub n: usize,
}

fn pullback_class(cs: &CohSystem, it: &Itinerary, n: usize) -> DVector<f64> {
    let dim = cs.form.dim();
    let mut prod = DMatrix::<f64>::identity(dim, dim);
    for step in 0..n {
        let w = it.index_at(step as u64, &cs.weights);
        prod = &prod * &cs.word_mats[w];
        let s = prod.norm();
        prod /= s;
    }
    let gk = cs.mass_covector();
    let v = prod * cs.kappa0();
    let mass = gk.dot(&v);
    v / mass
}

/// The finite-time limit class e_hat(omega) with its diagnostics.
pub fn limit_class(cs: &CohSystem, it: &Itinerary, n: usize) -> Result<LimitClassReport> {
    if n == 0 {
        return Err(RandwalkError::InsufficientSample("n must be positive".into()));
    }
    let e = pullback_class(cs, it, n);
    let ec = CohClass::new(e.iter().cloned().collect());
    let q_value = cs.form.q(&ec).map_err(|x| RandwalkError::Step(x.to_string()))?;
    let pairings = cs.form.gram() * &e;
    let nef_min_pairing = pairings.iter().cloned().fold(f64::INFINITY, f64::min);
    // equivariance: (f_omega^n)^* kappa0 = f_0^* (f_{sigma omega}^{n-1})^* kappa0
    let w0 = it.index_at(0, &cs.weights);
    let shifted = pullback_class(cs, &it.shifted(1), n - 1);
    let pulled = &cs.word_mats[w0] * shifted;
    let equivariance_angle = ec.angle(&CohClass::new(pulled.iter().cloned().collect()));
    Ok(LimitClassReport {
        e_hat: e.iter().cloned().collect(),
        q_value,
        nef_min_pairing,
        equivariance_angle,
        n,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundarySample {
    pub classes: Vec<Vec<f64>>,
    pub q_values: Vec<f64>,
    pub pairwise_angles: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FurstenbergReport {
    pub lambda: f64,
    pub stderr: f64,
    pub sample: BoundarySample,
    pub warning: Option<String>,
}

/// Furstenberg-formula estimator: boundary classes u_k = e_hat from m
/// independent itineraries, then lambda = E_nu E_{mu_boundary} log M(g^* u).
pub fn furstenberg_estimate(
    cs: &CohSystem,
    master: u64,
    m: usize,
    n: usize,
) -> Result<FurstenbergReport> {
    if m == 0 {
        return Err(RandwalkError::InsufficientSample("need at least one itinerary".into()));
    }
    let gk = cs.mass_covector();
    let mut classes = Vec::with_capacity(m);
    let mut q_values = Vec::with_capacity(m);
    let mut per_class = Vec::with_capacity(m);
    for k in 0..m {
        let it = Itinerary::new(master, k as u64);
        let u = if n == 0 {
            cs.kappa0()
        } else {
            pullback_class(cs, &it, n)
        };
        let uc = CohClass::new(u.iter().cloned().collect());
        q_values.push(cs.form.q(&uc).map_err(|x| RandwalkError::Step(x.to_string()))?);
        let mut acc = 0.0;
        for (g, mat) in cs.word_mats.iter().enumerate() {
            let gu = mat * &u;
            let mass = gk.dot(&gu);
            acc += cs.weights[g] * mass.abs().ln();
        }
        per_class.push(acc);
        classes.push(u.iter().cloned().collect::<Vec<f64>>());
    }
    let (lambda, stderr) = mean_and_stderr(&per_class);
    let mut pairwise_angles = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let a = CohClass::new(classes[i].clone());
            let b = CohClass::new(classes[j].clone());
            pairwise_angles.push(a.angle(&b));
        }
    }
    let warning = (m < 10).then(|| format!("boundary sample of size {m} < 10"));
    Ok(FurstenbergReport {
        lambda,
        stderr,
        sample: BoundarySample { classes, q_values, pairwise_angles },
        warning,
    })
}

// ---------------------------------------------------------------------
// stable directions
// ---------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StableDirReport {
    /// unit stable directions in the chart at x0, one per retained seed
    pub directions: Vec<(f64, f64)>,
    pub pairwise_angles: Vec<f64>,
    pub excluded: usize,
}

/// Most-contracted right singular direction of the chart-coordinate
/// cocycle D_x f_omega^n, extracted from the accumulated triangular
/// factor of the QR product (never from the raw product).
pub fn stable_direction<S: RealSurfaceSystem>(
    sys: &S,
    gen: &GeneratorSystem,
    x0: &S::Point,
    it: &Itinerary,
    n: usize,
) -> Result<(Vector2<f64>, f64)> {
    let mut p = x0.clone();
    let mut q = Matrix2::identity();
    // T_n = R_n ... R_1 stored as t11 * [[1, rho], [0, w]] (t11 dropped)
    let mut rho = 0.0f64;
    let mut w = 1.0f64;
    let mut used = 0usize;
    for step in 0..n {
        let widx = it.index_at(step as u64, &gen.weights);
        let (j, img) = word_differential(sys, gen, widx, &p)?;
        let a = j * q;
        let (qn, (r11, r12, r22)) = qr2(&a);
        if !(r11 > 0.0) {
            return Err(RandwalkError::Step("rank-deficient differential".into()));
        }
        rho += (r12 / r11) * w;
        w *= r22 / r11;
        q = qn;
        p = img;
        used += 1;
    }
    if used == 0 {
        return Err(RandwalkError::Step("empty product".into()));
    }
    // right singular directions of the cocycle equal those of
    // [[1, rho], [0, w]]; take the one for the smaller singular value
    let t = Matrix2::new(1.0, rho, 0.0, w);
    let svd = t.svd(false, true);
    let vt = svd.v_t.unwrap();
    let dir = Vector2::new(vt[(1, 0)], vt[(1, 1)]);
    let gap = svd.singular_values[1] / svd.singular_values[0];
    Ok((dir.normalize(), gap))
}

/// Distribution of pairwise angles between finite-time stable directions
/// over independent itineraries at the same base point.
pub fn stable_direction_dependence<S: RealSurfaceSystem>(
    sys: &S,
    gen: &GeneratorSystem,
    x0: &S::Point,
    master: u64,
    seeds: usize,
    n: usize,
) -> Result<StableDirReport> {
    let mut directions = Vec::new();
    let mut excluded = 0usize;
    for k in 0..seeds {
        let it = Itinerary::new(master, k as u64);
        match stable_direction(sys, gen, x0, &it, n) {
            Ok((d, gap)) if gap <= 0.99 => directions.push((d.x, d.y)),
            _ => excluded += 1,
        }
    }
    let mut pairwise_angles = Vec::new();
    for i in 0..directions.len() {
        for j in (i + 1)..directions.len() {
            let (a, b) = (directions[i], directions[j]);
            let dot = (a.0 * b.0 + a.1 * b.1).abs().min(1.0);
            pairwise_angles.push(dot.acos());
        }
    }
    Ok(StableDirReport { directions, pairwise_angles, excluded })
}

// ---------------------------------------------------------------------
// twist growth
// ---------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwistReport {
    pub ns: Vec<usize>,
    pub log_norms: Vec<f64>,
    pub loglog_slope: f64,
    pub loglog_r2: f64,
    pub semilog_slope: f64,
    pub semilog_r2: f64,
    pub truncated: bool,
}

/// Growth of ||D_x h^n|| for a fixed word h, sampled at ~10 geometrically
/// spaced times up to n_max, with both a log-log fit (parabolic: slope 1)
/// and a semilog fit (loxodromic: slope log lambda).
pub fn twist_growth<S: RealSurfaceSystem>(
    sys: &S,
    gen: &GeneratorSystem,
    widx: usize,
    x0: &S::Point,
    n_max: usize,
) -> Result<TwistReport> {
    let points = 10usize;
    let mut marks: Vec<usize> = (1..=points)
        .map(|k| ((n_max as f64).powf(k as f64 / points as f64)).round() as usize)
        .collect();
    marks.dedup();
    let mut p = x0.clone();
    let mut a = Matrix2::identity();
    let mut logscale = 0.0f64;
    let mut ns = Vec::new();
    let mut log_norms = Vec::new();
    let mut truncated = false;
    let mut next_mark = 0usize;
    for step in 1..=*marks.last().unwrap_or(&0) {
        match word_differential(sys, gen, widx, &p) {
            Ok((j, img)) => {
                a = j * a;
                let s = a.norm();
                logscale += s.ln();
                a /= s;
                p = img;
            }
            Err(_) => {
                truncated = true;
                break;
            }
        }
        if next_mark < marks.len() && step == marks[next_mark] {
            // spectral norm of the renormalized product
            let top = a.svd(false, false).singular_values[0];
            ns.push(step);
            log_norms.push(logscale + top.ln());
            next_mark += 1;
        }
    }
    if ns.len() < 2 {
        return Err(RandwalkError::Step("twist orbit truncated too early".into()));
    }
    let xs_log: Vec<f64> = ns.iter().map(|&v| (v as f64).ln()).collect();
    let xs_lin: Vec<f64> = ns.iter().map(|&v| v as f64).collect();
    let (loglog_slope, _, loglog_r2) = linear_fit(&xs_log, &log_norms);
    let (semilog_slope, _, semilog_r2) = linear_fit(&xs_lin, &log_norms);
    Ok(TwistReport { ns, log_norms, loglog_slope, loglog_r2, semilog_slope, semilog_r2, truncated })
}

// ---------------------------------------------------------------------
// equidistribution
// ---------------------------------------------------------------------

/// Frequencies of the bounded trigonometric test functions
/// cos/sin(m1 theta1 + m2 theta2).
const TEST_FREQS: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)];

fn test_function(idx: usize, t1: f64, t2: f64) -> f64 {
    let (m1, m2) = TEST_FREQS[(idx / 2) % TEST_FREQS.len()];
    let cycle = (idx / (2 * TEST_FREQS.len())) as f64 + 1.0;
    let phase = cycle * (m1 * t1 + m2 * t2);
    if idx % 2 == 0 {
        phase.cos()
    } else {
        phase.sin()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquidistReport {
    pub orbit_means: Vec<f64>,
    pub orbit_stderr: Vec<f64>,
    pub vol_means: Vec<f64>,
    pub vol_stderr: Vec<f64>,
    pub z_scores: Vec<f64>,
    pub consistent: bool,
}

/// Importance-sampled area averages of the test functions: uniform draws
/// in (theta1, theta2), both branches, weighted by the chart density.
pub fn vol_averages<S: RealSurfaceSystem>(
    sys: &S,
    k_funcs: usize,
    samples: usize,
    master: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = CounterRng::stream(master, u64::MAX);
    let nb = BATCHES;
    let mut batch_num = vec![vec![0.0f64; nb]; k_funcs];
    let mut batch_den = vec![0.0f64; nb];
    for s in 0..samples {
        let b = s * nb / samples;
        let t1 = rng.next_angle();
        let t2 = rng.next_angle();
        for branch in [1i8, -1] {
            let p = match sys.lift(t1, t2, branch) {
                Ok(p) => p,
                Err(_) => continue,
            };
            // skip mirrored duplicates when both branches coincide
            let (_, _, pb) = sys.chart(&p);
            if pb != branch {
                continue;
            }
            let w = match sys.chart_density(&p) {
                Ok(w) => w,
                Err(_) => continue,
            };
            batch_den[b] += w;
            for f in 0..k_funcs {
                batch_num[f][b] += w * test_function(f, t1, t2);
            }
        }
    }
    let total_w: f64 = batch_den.iter().sum();
    if !(total_w > 0.0) {
        return Err(RandwalkError::SamplerError);
    }
    let mut means = Vec::with_capacity(k_funcs);
    let mut errs = Vec::with_capacity(k_funcs);
    for f in 0..k_funcs {
        let mean = batch_num[f].iter().sum::<f64>() / total_w;
        // batch-means on the per-batch ratio estimates
        let ratios: Vec<f64> = (0..nb)
            .filter(|&b| batch_den[b] > 0.0)
            .map(|b| batch_num[f][b] / batch_den[b])
            .collect();
        let m = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let var = ratios.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
            / (ratios.len().max(2) - 1) as f64;
        means.push(mean);
        errs.push((var / ratios.len() as f64).sqrt());
    }
    Ok((means, errs))
}

/// Compare orbit time-averages against area averages; consistent iff all
/// |z| < 4.
pub fn equidistribution_test<S: RealSurfaceSystem>(
    sys: &S,
    gen: &GeneratorSystem,
    x0: &S::Point,
    it: &Itinerary,
    n: usize,
    k_funcs: usize,
    vol_samples: usize,
    master: u64,
) -> Result<EquidistReport> {
    let mut p = x0.clone();
    let mut vals = vec![Vec::with_capacity(n); k_funcs];
    for step in 0..n {
        let (t1, t2, _) = sys.chart(&p);
        for f in 0..k_funcs {
            vals[f].push(test_function(f, t1, t2));
        }
        if step + 1 < n {
            let w = it.index_at(step as u64, &gen.weights);
            match gen.apply_word(sys, w, &p) {
                Ok(q) => p = q,
                Err(_) => break,
            }
        }
    }
    let (vol_means, vol_stderr) = vol_averages(sys, k_funcs, vol_samples, master)?;
    let mut orbit_means = Vec::new();
    let mut orbit_stderr = Vec::new();
    let mut z_scores = Vec::new();
    let mut consistent = true;
    for f in 0..k_funcs {
        let (m, se) = mean_and_stderr(&vals[f]);
        let denom = (se * se + vol_stderr[f] * vol_stderr[f]).sqrt().max(1e-12);
        let z = (m - vol_means[f]) / denom;
        consistent &= z.abs() < 4.0;
        orbit_means.push(m);
        orbit_stderr.push(se);
        z_scores.push(z);
    }
    Ok(EquidistReport { orbit_means, orbit_stderr, vol_means, vol_stderr, z_scores, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pentagon_sys() -> PentagonSystem {
        PentagonSystem::new(SideLengths::new([3.0, 5.0, 7.0, 11.0, 13.0]).unwrap())
    }

    fn wehler_sys() -> WehlerSystem {
        WehlerSystem::new(WehlerSurface::sample_surface())
    }

    #[test]
    fn itinerary_reproducible_and_shiftable() {
        let a = Itinerary::new(7, 3);
        let b = Itinerary::new(7, 3);
        let w = [0.2, 0.3, 0.5];
        for pos in 0..100 {
            assert_eq!(a.index_at(pos, &w), b.index_at(pos, &w));
        }
        let s = a.shifted(5);
        for pos in 0..50 {
            assert_eq!(s.index_at(pos, &w), a.index_at(pos + 5, &w));
        }
    }

    #[test]
    fn generator_system_validation() {
        assert!(GeneratorSystem::new(vec![vec![0], vec![]], vec![0.5, 0.5], 3).is_err());
        assert!(GeneratorSystem::new(vec![vec![5]], vec![1.0], 3).is_err());
        assert!(GeneratorSystem::new(vec![vec![0]], vec![-1.0], 3).is_err());
        let g = GeneratorSystem::new(vec![vec![0], vec![1]], vec![2.0, 2.0], 3).unwrap();
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orbit_n1_is_point_mass() {
        let sys = pentagon_sys();
        let gen = GeneratorSystem::uniform_letters(5);
        let mut rng = CounterRng::new(2);
        let x0 = sys.random_point(&mut rng).unwrap();
        let m = run_orbit(&sys, &gen, &x0, &Itinerary::new(1, 0), 1, 32);
        assert_eq!(m.support_size(), 1);
        assert_eq!(m.n_recorded, 1);
    }

    #[test]
    fn single_involution_orbit_two_points() {
        let sys = wehler_sys();
        let gen = GeneratorSystem::new(vec![vec![2]], vec![1.0], 3).unwrap();
        let mut rng = CounterRng::new(8);
        let x0 = sys.random_point(&mut rng).unwrap();
        let m = run_orbit(&sys, &gen, &x0, &Itinerary::new(1, 0), 1000, 64);
        assert!(m.support_size() <= 2);
        assert!(m.worst_residual < 1e-8);
    }

    #[test]
    fn chart_lift_roundtrip_wehler() {
        let sys = wehler_sys();
        let mut rng = CounterRng::new(5);
        for _ in 0..50 {
            let p = sys.random_point(&mut rng).unwrap();
            let (t1, t2, b) = sys.chart(&p);
            let q = sys.lift(t1, t2, b).unwrap();
            for ax in 0..3 {
                assert!(p.x[ax].approx_eq(&q.x[ax], 1e-9));
            }
        }
    }

    #[test]
    fn coh_deterministic_word_matches_eigenvalue() {
        // word sigma_3 o sigma_2 o sigma_1 (apply sigma_1 first)
        let cs = CohSystem::wehler(&[vec![0, 1, 2]], &[1.0]).unwrap();
        let est = coh_lyapunov(&cs, 1, 1, 1000, CohOrder::Pullback).unwrap();
        let expect = (9.0 + 4.0 * 5.0f64.sqrt()).ln();
        assert!((est.lambda - expect).abs() < 1e-6, "lambda = {}", est.lambda);
        let est = coh_lyapunov(&cs, 1, 1, 1000, CohOrder::Reversed).unwrap();
        assert!((est.lambda - expect).abs() < 1e-6);
    }

    #[test]
    fn coh_single_involution_zero() {
        let cs = CohSystem::wehler(&[vec![0]], &[1.0]).unwrap();
        let est = coh_lyapunov(&cs, 1, 1, 500, CohOrder::Pullback).unwrap();
        assert!(est.lambda.abs() < 1e-9);
    }

    #[test]
    fn limit_class_diagnostics() {
        let cs = CohSystem::wehler(&[vec![0], vec![1], vec![2]], &[1.0, 1.0, 1.0]).unwrap();
        let rep = limit_class(&cs, &Itinerary::new(42, 0), 50).unwrap();
        assert!(rep.q_value.abs() < 1e-6, "q = {}", rep.q_value);
        assert!(rep.equivariance_angle < 1e-6);
        assert!(rep.nef_min_pairing > -1e-9);
        // mass normalization
        let e = CohClass::new(rep.e_hat.clone());
        assert!((cs.form.mass(&e).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn furstenberg_degenerate_sample_exact() {
        let cs = CohSystem::wehler(&[vec![0], vec![1], vec![2]], &[1.0, 1.0, 1.0]).unwrap();
        let rep = furstenberg_estimate(&cs, 9, 1, 0).unwrap();
        assert!(rep.warning.is_some());
        // u = kappa0 = (1,1,1)/sqrt(12); sigma_k^* kappa0 has mass
        // <sigma_k^* kappa0 | kappa0> = (1/12) * (sum of G sigma_k (1,1,1))
        let coh = crate::wehler::coh_matrices();
        let mut expect = 0.0;
        for k in 0..3 {
            let m = &coh.sigma_star[k];
            let v: Vec<f64> = (0..3).map(|i| (0..3).map(|j| m[i][j] as f64).sum()).collect();
            let gram = [[0.0, 2.0, 2.0], [2.0, 0.0, 2.0], [2.0, 2.0, 0.0]];
            let mut mass = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    mass += gram[i][j] * v[j];
                }
            }
            expect += (mass / 12.0).ln() / 3.0;
        }
        assert!((rep.lambda - expect).abs() < 1e-12);
    }

    #[test]
    fn furstenberg_deterministic_loxodromic() {
        let cs = CohSystem::wehler(&[vec![0, 1, 2]], &[1.0]).unwrap();
        let rep = furstenberg_estimate(&cs, 3, 12, 60).unwrap();
        let expect = (9.0 + 4.0 * 5.0f64.sqrt()).ln();
        assert!((rep.lambda - expect).abs() < 1e-4, "lambda = {}", rep.lambda);
        // all boundary classes coincide with the dominant eigendirection
        for a in &rep.sample.pairwise_angles {
            assert!(*a < 1e-6);
        }
    }

    #[test]
    fn qr_product_matches_direct_product_short() {
        let sys = pentagon_sys();
        let gen = GeneratorSystem::uniform_letters(5);
        let mut rng = CounterRng::new(14);
        let x0 = sys.random_point(&mut rng).unwrap();
        let it = Itinerary::new(5, 0);
        let n = 10;
        // direct product alongside the QR product; the accumulated
        // triangular factor T_n = R_n ... R_1 has the same singular
        // values as the direct product (A = Q_n T_n, Q_n orthogonal)
        let mut p = x0.clone();
        let mut direct = Matrix2::identity();
        let mut tmat = Matrix2::identity();
        let mut q = Matrix2::identity();
        for step in 0..n {
            let w = it.index_at(step as u64, &gen.weights);
            let (j, img) = word_differential(&sys, &gen, w, &p).unwrap();
            direct = j * direct;
            let a = j * q;
            let (qn, (r11, r12, r22)) = qr2(&a);
            tmat = Matrix2::new(r11, r12, 0.0, r22) * tmat;
            q = qn;
            p = img;
        }
        let sv = direct.svd(false, false).singular_values;
        let sv_qr = tmat.svd(false, false).singular_values;
        assert!((sv_qr[0].ln() - sv[0].ln()).abs() < 1e-8);
        assert!((sv_qr[1].ln() - sv[1].ln()).abs() < 1e-8);
    }

    #[test]
    fn tangent_single_involution_zero() {
        let sys = wehler_sys();
        let gen = GeneratorSystem::new(vec![vec![1]], vec![1.0], 3).unwrap();
        let mut rng = CounterRng::new(6);
        let x0 = sys.random_point(&mut rng).unwrap();
        let est = tangent_lyapunov(&sys, &gen, &x0, &Itinerary::new(2, 0), 2000).unwrap();
        assert!(est.lambda_plus.abs() < 3.0 * est.stderr_plus.max(1e-3));
        assert!(est.lambda_plus >= est.lambda_minus);
    }

    #[test]
    fn stable_direction_n1_matches_svd() {
        let sys = pentagon_sys();
        let gen = GeneratorSystem::uniform_letters(5);
        let mut rng = CounterRng::new(20);
        let x0 = sys.random_point(&mut rng).unwrap();
        let it = Itinerary::new(3, 0);
        let (dir, _gap) = stable_direction(&sys, &gen, &x0, &it, 1).unwrap();
        let w = it.index_at(0, &gen.weights);
        let (j, _) = word_differential(&sys, &gen, w, &x0).unwrap();
        let svd = j.svd(false, true);
        let vt = svd.v_t.unwrap();
        let expect = Vector2::new(vt[(1, 0)], vt[(1, 1)]).normalize();
        let dot = (dir.dot(&expect)).abs();
        assert!(dot > 1.0 - 1e-9, "dot = {dot}");
    }

    #[test]
    fn stable_directions_deterministic_word_coincide() {
        let sys = pentagon_sys();
        let gen = GeneratorSystem::new(vec![vec![0, 1]], vec![1.0], 5).unwrap();
        let mut rng = CounterRng::new(25);
        let x0 = sys.random_point(&mut rng).unwrap();
        let rep = stable_direction_dependence(&sys, &gen, &x0, 11, 8, 60).unwrap();
        for a in &rep.pairwise_angles {
            assert!(*a < 1e-6, "angle = {a}");
        }
    }

    #[test]
    fn twist_identity_word_flat() {
        let sys = pentagon_sys();
        // sigma_01 twice is the identity word
        let gen = GeneratorSystem::new(vec![vec![0, 0]], vec![1.0], 5).unwrap();
        let mut rng = CounterRng::new(31);
        let x0 = sys.random_point(&mut rng).unwrap();
        let rep = twist_growth(&sys, &gen, 0, &x0, 100).unwrap();
        for ln in &rep.log_norms {
            assert!(ln.abs() < 1e-4, "log norm = {ln}");
        }
    }

    #[test]
    fn equidistribution_point_mass_rejected() {
        let sys = pentagon_sys();
        let gen = GeneratorSystem::uniform_letters(5);
        let mut rng = CounterRng::new(40);
        let x0 = sys.random_point(&mut rng).unwrap();
        let rep =
            equidistribution_test(&sys, &gen, &x0, &Itinerary::new(4, 0), 1, 8, 20_000, 4).unwrap();
        assert!(!rep.consistent);
    }

    #[test]
    fn reproducible_estimates() {
        let cs = CohSystem::wehler(&[vec![0], vec![1], vec![2]], &[1.0, 1.0, 1.0]).unwrap();
        let a = coh_lyapunov(&cs, 77, 4, 300, CohOrder::Pullback).unwrap();
        let b = coh_lyapunov(&cs, 77, 4, 300, CohOrder::Pullback).unwrap();
        assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}
