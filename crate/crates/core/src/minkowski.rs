//! Minkowski lattices of signature (1, m): the intersection pairing,
//! mass, hyperbolic distance on the positive hyperboloid sheet,
//! congruence to the standard form diag(1, -1, ..., -1), Cartan (KAK)
//! decomposition of isometries, and the exact elliptic / parabolic /
//! loxodromic classification with its Salem/cyclotomic polynomial split.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::intpoly::{
    self, big_from_i64, big_is_zero, char_poly, eval_at_matrix, strip_cyclotomic, IntPoly,
};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MinkowskiError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("no reference class configured")]
    Config,
    #[error("class is not on the unit hyperboloid (q = {q})")]
    NotOnHyperboloid { q: f64 },
    #[error("form violation: {0}")]
    FormViolation(String),
    #[error("form does not have signature (1,m): {0}")]
    Signature(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

type Result<T> = std::result::Result<T, MinkowskiError>;

/// A symmetric bilinear form of signature (1, m) on the lattice basis.
///
/// Carries the base point `e0` on the hyperboloid (the Kahler-class role)
/// and the mass reference class `kappa0` with q(kappa0) = 1. By default
/// both are the normalized all-ones vector when it has positive square,
/// otherwise the normalized positive eigenvector of the Gram matrix.
#[derive(Clone, Debug)]
pub struct IntersectionForm {
    gram_int: Option<Vec<Vec<i64>>>,
    gram: DMatrix<f64>,
    dim: usize,
    e0: DVector<f64>,
    kappa0: DVector<f64>,
}

impl IntersectionForm {
    pub fn from_int(gram: Vec<Vec<i64>>) -> Result<Self> {
        let n = gram.len();
        for (i, row) in gram.iter().enumerate() {
            if row.len() != n {
                return Err(MinkowskiError::Dimension { expected: n, got: row.len() });
            }
            for j in 0..n {
                if gram[i][j] != gram[j][i] {
                    return Err(MinkowskiError::FormViolation(format!(
                        "gram not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let g = DMatrix::from_fn(n, n, |i, j| gram[i][j] as f64);
        Self::build(Some(gram), g)
    }

    pub fn from_real(gram: DMatrix<f64>) -> Result<Self> {
        let n = gram.nrows();
        if gram.ncols() != n {
            return Err(MinkowskiError::Dimension { expected: n, got: gram.ncols() });
        }
        for i in 0..n {
            for j in 0..n {
                if gram[(i, j)] != gram[(j, i)] {
                    return Err(MinkowskiError::FormViolation(format!(
                        "gram not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Self::build(None, gram)
    }

    fn build(gram_int: Option<Vec<Vec<i64>>>, gram: DMatrix<f64>) -> Result<Self> {
        let n = gram.nrows();
        let eig = gram.clone().symmetric_eigen();
        let scale = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if scale == 0.0 {
            return Err(MinkowskiError::Signature("zero form".into()));
        }
        let mut pos = 0usize;
        let mut neg = 0usize;
        for &v in eig.eigenvalues.iter() {
            if v > 1e-9 * scale {
                pos += 1;
            } else if v < -1e-9 * scale {
                neg += 1;
            }
        }
        if pos != 1 || neg != n - 1 {
            return Err(MinkowskiError::Signature(format!(
                "signature ({pos},{neg}) with margin 1e-9, need (1,{})",
                n - 1
            )));
        }
        // base point: normalized all-ones when positive, else the
        // positive eigenvector
        let ones = DVector::from_element(n, 1.0);
        let q_ones = (ones.transpose() * &gram * &ones)[(0, 0)];
        let e0 = if q_ones > 1e-9 * scale {
            &ones / q_ones.sqrt()
        } else {
            let idx = (0..n)
                .max_by(|&a, &b| {
                    eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap()
                })
                .unwrap();
            let v = eig.eigenvectors.column(idx).clone_owned();
            let qv = (v.transpose() * &gram * &v)[(0, 0)];
            let mut u = &v / qv.sqrt();
            if u.sum() < 0.0 {
                u = -u;
            }
            u
        };
        let kappa0 = e0.clone();
        Ok(IntersectionForm { gram_int, gram, dim: n, e0, kappa0 })
    }

    /// Replace the mass reference class; must satisfy q = 1.
    pub fn with_reference(mut self, kappa0: DVector<f64>) -> Result<Self> {
        let q = self.q_raw(&kappa0)?;
        if (q - 1.0).abs() > DEFAULT_TOL {
            return Err(MinkowskiError::NotOnHyperboloid { q });
        }
        self.kappa0 = kappa0;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_int(&self) -> Option<&Vec<Vec<i64>>> {
        self.gram_int.as_ref()
    }

    pub fn base_point(&self) -> CohClass {
        CohClass { coords: self.e0.clone() }
    }

    pub fn reference_class(&self) -> CohClass {
        CohClass { coords: self.kappa0.clone() }
    }

    fn check_dim(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(MinkowskiError::Dimension { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    fn q_raw(&self, v: &DVector<f64>) -> Result<f64> {
        self.check_dim(v)?;
        Ok((v.transpose() * &self.gram * v)[(0, 0)])
    }

    /// The invariant pairing <a|b> = a^T G b.
    pub fn pair(&self, a: &CohClass, b: &CohClass) -> Result<f64> {
        self.check_dim(&a.coords)?;
        self.check_dim(&b.coords)?;
        Ok((a.coords.transpose() * &self.gram * &b.coords)[(0, 0)])
    }

    /// Self-intersection q(a) = <a|a>.
    pub fn q(&self, a: &CohClass) -> Result<f64> {
        self.q_raw(&a.coords)
    }

    /// Mass M(a) = <a | kappa0>.
    pub fn mass(&self, a: &CohClass) -> Result<f64> {
        self.pair(a, &CohClass { coords: self.kappa0.clone() })
    }

    /// Hyperbolic distance between two classes on the positive unit
    /// hyperboloid sheet: arccosh <u|v>.
    pub fn hyperbolic_distance(&self, u: &CohClass, v: &CohClass) -> Result<f64> {
        self.hyperbolic_distance_tol(u, v, DEFAULT_TOL)
    }

    pub fn hyperbolic_distance_tol(&self, u: &CohClass, v: &CohClass, tol: f64) -> Result<f64> {
        let qu = self.q(u)?;
        if (qu - 1.0).abs() > tol {
            return Err(MinkowskiError::NotOnHyperboloid { q: qu });
        }
        let qv = self.q(v)?;
        if (qv - 1.0).abs() > tol {
            return Err(MinkowskiError::NotOnHyperboloid { q: qv });
        }
        let e0 = self.base_point();
        if self.pair(u, &e0)? <= 0.0 || self.pair(v, &e0)? <= 0.0 {
            return Err(MinkowskiError::FormViolation("class on the negative sheet".into()));
        }
        let p = self.pair(u, v)?;
        if p < 1.0 - tol {
            return Err(MinkowskiError::FormViolation(format!(
                "pairing {p} < 1 contradicts the reverse Schwarz inequality"
            )));
        }
        Ok(p.max(1.0).acosh())
    }

    /// Change-of-basis S with S^T G S = diag(1, -1, ..., -1), first
    /// column pairing positively with e0.
    pub fn orthonormalize(&self) -> Result<DMatrix<f64>> {
        let eig = self.gram.clone().symmetric_eigen();
        let n = self.dim;
        // order: the positive eigenvalue first
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let mut s = DMatrix::zeros(n, n);
        for (col, &idx) in order.iter().enumerate() {
            let lam = eig.eigenvalues[idx];
            if lam == 0.0 {
                return Err(MinkowskiError::Signature("degenerate form".into()));
            }
            let v = eig.eigenvectors.column(idx) / lam.abs().sqrt();
            s.set_column(col, &v);
        }
        // sign convention on the timelike column
        let c0 = s.column(0).clone_owned();
        if (c0.transpose() * &self.gram * &self.e0)[(0, 0)] < 0.0 {
            s.set_column(0, &(-c0));
        }
        // congruence residual
        let j = standard_form(n);
        let res = (s.transpose() * &self.gram * &s - &j).norm() / self.gram.norm();
        if res > 1e-12 {
            return Err(MinkowskiError::Numeric(format!("congruence residual {res}")));
        }
        Ok(s)
    }
}

/// diag(1, -1, ..., -1).
pub fn standard_form(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i != j {
            0.0
        } else if i == 0 {
            1.0
        } else {
            -1.0
        }
    })
}

/// A cohomology class in the fixed lattice basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CohClass {
    pub coords: DVector<f64>,
}

impl CohClass {
    pub fn new(coords: Vec<f64>) -> Self {
        CohClass { coords: DVector::from_vec(coords) }
    }

    pub fn from_int(coords: &[i64]) -> Self {
        CohClass { coords: DVector::from_iterator(coords.len(), coords.iter().map(|&c| c as f64)) }
    }

    /// Euclidean angle between the lines spanned by two classes.
    pub fn angle(&self, other: &CohClass) -> f64 {
        let c = self.coords.dot(&other.coords) / (self.coords.norm() * other.coords.norm());
        c.abs().min(1.0).acos()
    }
}

/// A form-preserving lattice map, optionally with exact integer entries.
#[derive(Clone, Debug)]
pub struct LatticeIsometry {
    matrix_int: Option<Vec<Vec<i64>>>,
    matrix: DMatrix<f64>,
}

impl LatticeIsometry {
    /// Integer isometry; M^T G M = G is checked exactly when the form
    /// carries an integer Gram matrix.
    pub fn from_int(form: &IntersectionForm, m: Vec<Vec<i64>>) -> Result<Self> {
        let n = form.dim();
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            return Err(MinkowskiError::Dimension { expected: n, got: m.len() });
        }
        if let Some(g) = form.gram_int() {
            for i in 0..n {
                for j in 0..n {
                    let mut s: i128 = 0;
                    for k in 0..n {
                        for l in 0..n {
                            s += m[k][i] as i128 * g[k][l] as i128 * m[l][j] as i128;
                        }
                    }
                    if s != g[i][j] as i128 {
                        return Err(MinkowskiError::FormViolation(format!(
                            "M^T G M != G at ({i},{j})"
                        )));
                    }
                }
            }
        }
        let mf = DMatrix::from_fn(n, n, |i, j| m[i][j] as f64);
        let iso = LatticeIsometry { matrix_int: Some(m), matrix: mf };
        iso.check_float(form)?;
        Ok(iso)
    }

    pub fn from_real(form: &IntersectionForm, m: DMatrix<f64>) -> Result<Self> {
        let n = form.dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(MinkowskiError::Dimension { expected: n, got: m.nrows() });
        }
        let iso = LatticeIsometry { matrix_int: None, matrix: m };
        iso.check_float(form)?;
        Ok(iso)
    }

    fn check_float(&self, form: &IntersectionForm) -> Result<()> {
        let g = form.gram();
        let res =
            (self.matrix.transpose() * g * &self.matrix - g).norm() / (g.norm() * self.matrix.norm_squared().max(1.0));
        if res > DEFAULT_TOL {
            return Err(MinkowskiError::FormViolation(format!("congruence residual {res}")));
        }
        let e0 = &form.e0;
        let sheet = (e0.transpose() * g * &self.matrix * e0)[(0, 0)];
        if sheet <= 0.0 {
            return Err(MinkowskiError::FormViolation(
                "isometry swaps the hyperboloid sheets".into(),
            ));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn matrix_int(&self) -> Option<&Vec<Vec<i64>>> {
        self.matrix_int.as_ref()
    }

    pub fn apply(&self, a: &CohClass) -> CohClass {
        CohClass { coords: &self.matrix * &a.coords }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IsometryKind {
    Elliptic,
    Parabolic,
    Loxodromic,
}

/// Classification of a lattice isometry, with exact integer polynomial
/// data (coefficients as decimal strings, constant term first).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsometryReport {
    pub kind: IsometryKind,
    pub spectral_radius: f64,
    pub translation_length: f64,
    pub char_poly: Vec<String>,
    pub salem_factor: Vec<String>,
    pub cyclotomic_part: Vec<String>,
}

/// Classify an isometry as elliptic, parabolic or loxodromic.
///
/// Works on the exact integer matrix: the characteristic polynomial is
/// computed over Z, cyclotomic factors are divided out by trial division
/// (all Phi_n with phi(n) <= dim suffice since eigenvalue degrees are
/// bounded by dim), and a non-constant remainder forces a root off the
/// unit circle, i.e. the Salem factor of a loxodromic map. When the whole
/// polynomial is cyclotomic, elliptic vs parabolic is decided by an exact
/// semisimplicity test: the radical (product of the distinct cyclotomic
/// factors) annihilates the matrix iff the map is elliptic.
pub fn classify_isometry(form: &IntersectionForm, gamma: &LatticeIsometry) -> Result<IsometryReport> {
    let mi = match gamma.matrix_int() {
        Some(m) => m.clone(),
        None => {
            // round if the entries are integral to tolerance
            let m = gamma.matrix();
            let mut out = vec![vec![0i64; m.ncols()]; m.nrows()];
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    let r = m[(i, j)].round();
                    if (m[(i, j)] - r).abs() > DEFAULT_TOL * m.norm().max(1.0) {
                        return Err(MinkowskiError::Numeric(
                            "classification requires an integer matrix".into(),
                        ));
                    }
                    out[i][j] = r as i64;
                }
            }
            out
        }
    };
    // form preservation was checked at construction; re-assert cheaply
    let _ = form;
    let a = big_from_i64(&mi);
    let p = char_poly(&a);
    let (cyc, rest, orders) = strip_cyclotomic(&p);
    if rest.degree() > 0 {
        let lambda = intpoly::spectral_radius_f64(&rest);
        return Ok(IsometryReport {
            kind: IsometryKind::Loxodromic,
            spectral_radius: lambda,
            translation_length: lambda.ln(),
            char_poly: p.coeff_strings(),
            salem_factor: rest.coeff_strings(),
            cyclotomic_part: cyc.coeff_strings(),
        });
    }
    // all eigenvalues are roots of unity; semisimple <=> elliptic
    let mut distinct = orders.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let mut radical = IntPoly::one();
    for n in distinct {
        radical = radical.mul(&intpoly::cyclotomic(n));
    }
    let kind = if big_is_zero(&eval_at_matrix(&radical, &a)) {
        IsometryKind::Elliptic
    } else {
        IsometryKind::Parabolic
    };
    Ok(IsometryReport {
        kind,
        spectral_radius: 1.0,
        translation_length: 0.0,
        char_poly: p.coeff_strings(),
        salem_factor: Vec::new(),
        cyclotomic_part: cyc.coeff_strings(),
    })
}

/// The hyperbolic boost by r along the first spatial axis, in standard
/// coordinates.
pub fn boost(r: f64, dim: usize) -> DMatrix<f64> {
    let mut b = DMatrix::identity(dim, dim);
    b[(0, 0)] = r.cosh();
    b[(0, 1)] = r.sinh();
    b[(1, 0)] = r.sinh();
    b[(1, 1)] = r.cosh();
    b
}

/// KAK factors of an isometry in standard coordinates:
/// gamma_std = k1 * boost(r) * k2 with k1, k2 in Stab(e0).
#[derive(Clone, Debug)]
pub struct KAKFactors {
    pub k1: DMatrix<f64>,
    pub k2: DMatrix<f64>,
    pub r: f64,
    /// Frobenius recomposition residual relative to |gamma_std|.
    pub residual: f64,
    /// gamma expressed in standard coordinates (S^-1 M S).
    pub gamma_std: DMatrix<f64>,
}

impl KAKFactors {
    /// Operator norm of the boost, which equals the operator norm of the
    /// isometry itself: cosh r + sinh r.
    pub fn boost_norm(&self) -> f64 {
        self.r.cosh() + self.r.sinh()
    }
}

/// Householder block on the spatial coordinates mapping the unit vector
/// `from` to the unit vector `to` (orthogonal, symmetric).
fn spatial_rotation_to(from: &DVector<f64>, to: &DVector<f64>) -> DMatrix<f64> {
    let m = from.len();
    let v = from - to;
    let n2 = v.norm_squared();
    if n2 < 1e-30 {
        return DMatrix::identity(m, m);
    }
    DMatrix::identity(m, m) - (&v * v.transpose()) * (2.0 / n2)
}

/// KAK decomposition of an isometry of an arbitrary (1,m) form. The form
/// is orthonormalized internally and the factors are returned in standard
/// coordinates.
pub fn kak_decompose(form: &IntersectionForm, gamma: &LatticeIsometry) -> Result<KAKFactors> {
    let s = form.orthonormalize()?;
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or_else(|| MinkowskiError::Numeric("singular change of basis".into()))?;
    let g = &s_inv * gamma.matrix() * &s;
    kak_decompose_standard(&g).map(|mut f| {
        f.gamma_std = g;
        f
    })
}

/// KAK decomposition of a matrix already preserving diag(1,-1,...,-1).
pub fn kak_decompose_standard(g: &DMatrix<f64>) -> Result<KAKFactors> {
    let n = g.nrows();
    let j = standard_form(n);
    let w1 = g.column(0).clone_owned(); // g * e0
    let cosh_r = w1[0];
    if cosh_r < 1.0 - DEFAULT_TOL {
        return Err(MinkowskiError::FormViolation(format!(
            "<e0|g e0> = {cosh_r} < 1"
        )));
    }
    let r = cosh_r.max(1.0).acosh();
    let sinh_r = (cosh_r.max(1.0).powi(2) - 1.0).sqrt();

    let m = n - 1;
    let mut xhat = DVector::zeros(m);
    if m > 0 {
        xhat[0] = 1.0;
    }

    let (k1, k2) = if sinh_r < 1e-14 {
        // gamma already stabilizes e0 (up to rounding)
        (DMatrix::identity(n, n), g.clone())
    } else {
        let s1 = w1.rows(1, m).clone_owned() / sinh_r;
        let r1 = spatial_rotation_to(&xhat, &s1);
        let mut k1 = DMatrix::identity(n, n);
        k1.view_mut((1, 1), (m, m)).copy_from(&r1);

        // gamma^{-1} = J gamma^T J for an isometry of J
        let g_inv = &j * g.transpose() * &j;
        let w2 = g_inv.column(0).clone_owned();
        let s2 = w2.rows(1, m).clone_owned() / sinh_r;
        let r2 = spatial_rotation_to(&s2, &(-&xhat));
        let mut k2h = DMatrix::identity(n, n);
        k2h.view_mut((1, 1), (m, m)).copy_from(&r2);

        // a' = k1^T g k2h^T = boost(r) * diag(1, 1, Q); read Q off the
        // lower-right block (the boost is the identity there) and polish
        // it to an exactly orthogonal matrix.
        let aprime = k1.transpose() * g * k2h.transpose();
        let mut k2 = k2h.clone();
        if m >= 2 {
            let qblk = aprime.view((2, 2), (m - 1, m - 1)).clone_owned();
            let svd = qblk.svd(true, true);
            let q_orth = svd.u.as_ref().unwrap() * svd.v_t.as_ref().unwrap();
            let mut kp = DMatrix::identity(n, n);
            kp.view_mut((2, 2), (m - 1, m - 1)).copy_from(&q_orth);
            k2 = kp * k2h;
        }
        (k1, k2)
    };

    let recomposed = &k1 * boost(r, n) * &k2;
    let residual = (&recomposed - g).norm() / g.norm();
    Ok(KAKFactors { k1, k2, r, residual, gamma_std: g.clone() })
}

/// Serialized form + named isometries, per the on-disk JSON layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeSystemJson {
    pub dim: usize,
    pub gram: Vec<Vec<i64>>,
    pub matrices: BTreeMap<String, Vec<Vec<i64>>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wehler::coh_matrices;

    fn wehler_form() -> IntersectionForm {
        coh_matrices().form
    }

    #[test]
    fn pairing_on_wehler_basis() {
        let form = wehler_form();
        let c1 = CohClass::from_int(&[1, 0, 0]);
        let c2 = CohClass::from_int(&[0, 1, 0]);
        assert_eq!(form.pair(&c1, &c2).unwrap(), 2.0);
        assert_eq!(form.pair(&c1, &c1).unwrap(), 0.0);
        let ones = CohClass::from_int(&[1, 1, 1]);
        assert_eq!(form.pair(&ones, &ones).unwrap(), 12.0);
    }

    #[test]
    fn pairing_dimension_error() {
        let form = wehler_form();
        let a = CohClass::from_int(&[1, 0]);
        assert!(matches!(
            form.pair(&a, &a),
            Err(MinkowskiError::Dimension { .. })
        ));
    }

    #[test]
    fn mass_values() {
        let form = wehler_form();
        let k0 = form.reference_class();
        assert!((form.mass(&k0).unwrap() - 1.0).abs() < 1e-12);
        let c1 = CohClass::from_int(&[1, 0, 0]);
        assert!((form.mass(&c1).unwrap() - 2.0 / 3.0f64.sqrt()).abs() < 1e-12);
        let ones = CohClass::from_int(&[1, 1, 1]);
        assert!((form.mass(&ones).unwrap() - 12.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_distance_examples() {
        let form = wehler_form();
        let e0 = form.base_point();
        // arccosh amplifies a one-ulp excess in the pairing to ~1e-8
        assert!(form.hyperbolic_distance(&e0, &e0).unwrap() < 1e-7);

        let u = CohClass::new(vec![0.5, 0.5, 0.0]);
        // q(u) = 2*0.25*2 = 1 -> on the hyperboloid
        let d = form.hyperbolic_distance(&u, &e0).unwrap();
        assert!((d - (2.0 / 3.0f64.sqrt()).acosh()).abs() < 1e-12);
    }

    #[test]
    fn distance_of_word_image() {
        // N = matrix of (sigma1 sigma2 sigma3)^*: d(e0, N e0) = arccosh(29/3)
        let coh = coh_matrices();
        let form = &coh.form;
        let w = crate::wehler::pullback_of_word(&[2, 1, 0]);
        let n = LatticeIsometry::from_int(form, w).unwrap();
        let e0 = form.base_point();
        let img = n.apply(&e0);
        let d = form.hyperbolic_distance(&e0, &img).unwrap();
        assert!((d - (29.0f64 / 3.0).acosh()).abs() < 1e-10);
        // the image of (1,1,1) under the product matrix is (23,15,-9)
        let ones = CohClass::from_int(&[1, 1, 1]);
        let im = n.apply(&ones);
        assert_eq!(
            (im.coords[0], im.coords[1], im.coords[2]),
            (23.0, 15.0, -9.0)
        );
    }

    #[test]
    fn off_hyperboloid_rejected() {
        let form = wehler_form();
        let c1 = CohClass::from_int(&[1, 0, 0]); // q = 0
        let e0 = form.base_point();
        assert!(matches!(
            form.hyperbolic_distance(&c1, &e0),
            Err(MinkowskiError::NotOnHyperboloid { .. })
        ));
    }

    #[test]
    fn orthonormalize_diag() {
        let form = IntersectionForm::from_int(vec![
            vec![1, 0, 0],
            vec![0, -1, 0],
            vec![0, 0, -1],
        ])
        .unwrap();
        let s = form.orthonormalize().unwrap();
        assert!((s - DMatrix::<f64>::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn orthonormalize_hyperbolic_plane() {
        let form = IntersectionForm::from_int(vec![vec![0, 1], vec![1, 0]]).unwrap();
        let s = form.orthonormalize().unwrap();
        let res = (s.transpose() * form.gram() * &s - standard_form(2)).norm();
        assert!(res < 1e-12);
    }

    #[test]
    fn orthonormalize_wehler() {
        let form = wehler_form();
        let s = form.orthonormalize().unwrap();
        let res =
            (s.transpose() * form.gram() * &s - standard_form(3)).norm() / form.gram().norm();
        assert!(res < 1e-12);
    }

    #[test]
    fn wrong_signature_rejected() {
        assert!(IntersectionForm::from_int(vec![vec![1, 0], vec![0, 1]]).is_err());
        assert!(IntersectionForm::from_int(vec![vec![-1, 0], vec![0, -1]]).is_err());
    }

    #[test]
    fn classify_involution_elliptic() {
        let coh = coh_matrices();
        let g = LatticeIsometry::from_int(&coh.form, coh.sigma_star[0].clone()).unwrap();
        let rep = classify_isometry(&coh.form, &g).unwrap();
        assert_eq!(rep.kind, IsometryKind::Elliptic);
        assert_eq!(rep.spectral_radius, 1.0);
        assert!(rep.salem_factor.is_empty());
    }

    #[test]
    fn classify_two_letter_parabolic() {
        let coh = coh_matrices();
        let w = crate::wehler::pullback_of_word(&[0, 1]);
        let g = LatticeIsometry::from_int(&coh.form, w).unwrap();
        let rep = classify_isometry(&coh.form, &g).unwrap();
        assert_eq!(rep.kind, IsometryKind::Parabolic);
        // char poly (x-1)^3 = -1 + 3x - 3x^2 + x^3
        assert_eq!(rep.char_poly, vec!["-1", "3", "-3", "1"]);
    }

    #[test]
    fn classify_three_letter_loxodromic() {
        let coh = coh_matrices();
        let w = crate::wehler::pullback_of_word(&[0, 1, 2]);
        let g = LatticeIsometry::from_int(&coh.form, w).unwrap();
        let rep = classify_isometry(&coh.form, &g).unwrap();
        assert_eq!(rep.kind, IsometryKind::Loxodromic);
        assert!((rep.spectral_radius - (9.0 + 4.0 * 5.0f64.sqrt())).abs() < 1e-12);
        assert_eq!(rep.char_poly, vec!["1", "-17", "-17", "1"]);
        assert_eq!(rep.salem_factor, vec!["1", "-18", "1"]);
        assert_eq!(rep.cyclotomic_part, vec!["1", "1"]);
    }

    #[test]
    fn non_isometry_rejected() {
        let form = wehler_form();
        let m = vec![vec![1, 1, 0], vec![0, 1, 0], vec![0, 0, 1]];
        assert!(LatticeIsometry::from_int(&form, m).is_err());
    }

    #[test]
    fn kak_identity_and_boost() {
        let id = DMatrix::<f64>::identity(3, 3);
        let f = kak_decompose_standard(&id).unwrap();
        assert_eq!(f.r, 0.0);
        assert!(f.residual < 1e-12);

        let b = boost(1.0, 3);
        let f = kak_decompose_standard(&b).unwrap();
        assert!((f.r - 1.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn kak_of_three_letter_word() {
        let coh = coh_matrices();
        let w = crate::wehler::pullback_of_word(&[0, 1, 2]);
        let g = LatticeIsometry::from_int(&coh.form, w).unwrap();
        let f = kak_decompose(&coh.form, &g).unwrap();
        assert!((f.r - (29.0f64 / 3.0).acosh()).abs() < 1e-10);
        assert!(f.residual < 1e-10, "residual = {}", f.residual);
        // k1, k2 stabilize e0
        assert!((f.k1.column(0)[0] - 1.0).abs() < 1e-10);
        assert!((f.k2.column(0)[0] - 1.0).abs() < 1e-10);
    }
}
