//! Exact integer polynomial arithmetic for characteristic polynomials,
//! cyclotomic trial division and the Salem/cyclotomic split.
//!
//! Coefficients are arbitrary-precision integers; matrix products start
//! in `i128` with checked arithmetic and fall back to big integers on
//! overflow, so long generator words never silently lose precision.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Dense integer polynomial, coefficients from the constant term up.
/// The leading coefficient is nonzero unless the polynomial is zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPoly {
    pub coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigInt::zero());
        }
        IntPoly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        IntPoly::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn one() -> Self {
        IntPoly::new(vec![BigInt::one()])
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn mul(&self, other: &IntPoly) -> IntPoly {
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }

    /// Exact division: returns the quotient iff `other` divides `self`
    /// with zero remainder over Z.
    pub fn div_exact(&self, other: &IntPoly) -> Option<IntPoly> {
        if other.is_zero() || self.degree() < other.degree() {
            return None;
        }
        let mut rem = self.coeffs.clone();
        let dq = self.degree() - other.degree();
        let mut quot = vec![BigInt::zero(); dq + 1];
        let lead = other.coeffs.last().unwrap();
        for k in (0..=dq).rev() {
            let top = rem[k + other.degree()].clone();
            if top.is_zero() {
                continue;
            }
            if (&top % lead) != BigInt::zero() {
                return None;
            }
            let q = &top / lead;
            for (j, b) in other.coeffs.iter().enumerate() {
                rem[k + j] -= &q * b;
            }
            quot[k] = q;
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return None;
        }
        Some(IntPoly::new(quot))
    }

    /// Coefficients as decimal strings, constant term first (for the
    /// JSON report format, which must stay exact).
    pub fn coeff_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(|c| c.to_string()).collect()
    }

    /// Float coefficients; lossy for very long words, used only for
    /// numeric root bounds.
    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| {
                let s = c.to_string();
                s.parse::<f64>().unwrap_or(f64::INFINITY)
            })
            .collect()
    }
}

/// Square matrix of big integers, row major.
pub type BigMat = Vec<Vec<BigInt>>;

pub fn big_identity(n: usize) -> BigMat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

pub fn big_mul(a: &BigMat, b: &BigMat) -> BigMat {
    let n = a.len();
    let mut out = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                out[i][j] += &a[i][k] * &b[k][j];
            }
        }
    }
    out
}

pub fn big_from_i64(m: &[Vec<i64>]) -> BigMat {
    m.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect()
}

pub fn big_is_zero(m: &BigMat) -> bool {
    m.iter().all(|r| r.iter().all(|c| c.is_zero()))
}

/// Characteristic polynomial of an integer matrix, monic, computed by the
/// Faddeev-LeVerrier recursion. Every division in the recursion is exact
/// over Z, which is asserted.
pub fn char_poly(a: &BigMat) -> IntPoly {
    let n = a.len();
    let mut coeffs = vec![BigInt::zero(); n + 1];
    coeffs[n] = BigInt::one();
    let mut m = big_identity(n); // M_1 = I, c_{n-1} = -tr(A)
    for k in 1..=n {
        let am = big_mul(a, &m);
        let tr: BigInt = (0..n).map(|i| am[i][i].clone()).sum();
        let c = -tr / BigInt::from(k as i64);
        coeffs[n - k] = c.clone();
        if k < n {
            m = am;
            for i in 0..n {
                m[i][i] += &c;
            }
        }
    }
    IntPoly::new(coeffs)
}

/// Evaluate a polynomial at an integer matrix (Horner).
pub fn eval_at_matrix(p: &IntPoly, a: &BigMat) -> BigMat {
    let n = a.len();
    let mut acc = vec![vec![BigInt::zero(); n]; n];
    for c in p.coeffs.iter().rev() {
        acc = big_mul(&acc, a);
        for i in 0..n {
            acc[i][i] += c;
        }
    }
    acc
}

fn euler_phi(n: usize) -> usize {
    let mut result = n;
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            while m % p == 0 {
                m /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

/// Cyclotomic polynomial `Phi_n`, by dividing x^n - 1 by the `Phi_d` of
/// the proper divisors.
pub fn cyclotomic(n: usize) -> IntPoly {
    let mut xn1 = vec![BigInt::zero(); n + 1];
    xn1[0] = -BigInt::one();
    xn1[n] = BigInt::one();
    let mut p = IntPoly::new(xn1);
    for d in 1..n {
        if n % d == 0 {
            p = p.div_exact(&cyclotomic(d)).expect("cyclotomic division is exact");
        }
    }
    p
}

/// All cyclotomic polynomials of degree <= `max_deg`, as `(n, Phi_n)`.
pub fn cyclotomics_up_to_degree(max_deg: usize) -> Vec<(usize, IntPoly)> {
    // phi(n) >= sqrt(n/2), so n <= 2 (max_deg)^2 + 1 is a safe cutoff.
    let n_max = 2 * max_deg * max_deg + 1;
    (1..=n_max)
        .filter(|&n| euler_phi(n) <= max_deg)
        .map(|n| (n, cyclotomic(n)))
        .collect()
}

/// Split `p` into (cyclotomic part, remainder): repeatedly divide out any
/// cyclotomic polynomial of degree <= deg(p). For a reciprocal
/// characteristic polynomial of an integral isometry, a non-constant
/// remainder must have a root off the unit circle (Kronecker), i.e. it is
/// the Salem factor.
pub fn strip_cyclotomic(p: &IntPoly) -> (IntPoly, IntPoly, Vec<usize>) {
    let mut rest = p.clone();
    let mut cyc = IntPoly::one();
    let mut orders = Vec::new();
    let table = cyclotomics_up_to_degree(p.degree().max(1));
    loop {
        let mut divided = false;
        for (n, phi) in &table {
            if phi.degree() > rest.degree() {
                continue;
            }
            if let Some(q) = rest.div_exact(phi) {
                cyc = cyc.mul(phi);
                orders.push(*n);
                rest = q;
                divided = true;
                break;
            }
        }
        if !divided || rest.degree() == 0 {
            break;
        }
    }
    (cyc, rest, orders)
}

/// Largest root modulus of an integer polynomial, numerically, via the
/// companion matrix of the monic normalization.
pub fn spectral_radius_f64(p: &IntPoly) -> f64 {
    let c = p.coeffs_f64();
    let d = p.degree();
    if d == 0 {
        return 0.0;
    }
    if d == 2 {
        // exact quadratic: a x^2 + b x + c
        let (a, b, cc) = (c[2], c[1], c[0]);
        let disc = b * b - 4.0 * a * cc;
        if disc >= 0.0 {
            let r1 = (-b + disc.sqrt()) / (2.0 * a);
            let r2 = (-b - disc.sqrt()) / (2.0 * a);
            return r1.abs().max(r2.abs());
        }
        return (cc / a).abs().sqrt();
    }
    let lead = c[d];
    let mut comp = nalgebra::DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        comp[(i, d - 1)] = -c[i] / lead;
    }
    comp.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Checked i128 matrix product; `None` on overflow.
pub fn i128_mul_checked(a: &[Vec<i128>], b: &[Vec<i128>]) -> Option<Vec<Vec<i128>>> {
    let n = a.len();
    let mut out = vec![vec![0i128; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == 0 {
                continue;
            }
            for j in 0..n {
                let t = a[i][k].checked_mul(b[k][j])?;
                out[i][j] = out[i][j].checked_add(t)?;
            }
        }
    }
    Some(out)
}

/// Product of a word of integer matrices, left to right. Runs in i128 and
/// switches to big integers if any partial product overflows.
pub fn word_product(ms: &[&Vec<Vec<i64>>]) -> BigMat {
    if ms.is_empty() {
        panic!("empty word");
    }
    let n = ms[0].len();
    let mut acc128: Option<Vec<Vec<i128>>> = Some(
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1i128 } else { 0 }).collect())
            .collect(),
    );
    let mut acc_big: Option<BigMat> = None;
    for m in ms {
        let m128: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
        if let Some(a) = acc128.take() {
            match i128_mul_checked(&a, &m128) {
                Some(p) => {
                    acc128 = Some(p);
                    continue;
                }
                None => {
                    acc_big = Some(
                        a.iter()
                            .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
                            .collect(),
                    );
                }
            }
        }
        let big = acc_big.take().unwrap();
        acc_big = Some(big_mul(&big, &big_from_i64(m)));
    }
    match (acc128, acc_big) {
        (Some(a), _) => a
            .iter()
            .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
            .collect(),
        (_, Some(b)) => b,
        _ => unreachable!(),
    }
}

/// Lossy conversion to f64 for numeric work downstream.
pub fn big_to_f64(m: &BigMat) -> Vec<Vec<f64>> {
    m.iter()
        .map(|r| r.iter().map(|c| c.to_string().parse::<f64>().unwrap_or(f64::INFINITY)).collect())
        .collect()
}

/// Max absolute value as f64 (scale of the matrix).
pub fn big_scale(m: &BigMat) -> f64 {
    m.iter()
        .flat_map(|r| r.iter())
        .map(|c| c.abs().to_string().parse::<f64>().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}
