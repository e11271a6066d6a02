//! Dense square matrices over real or complex scalars, LU factorization
//! with complete pivoting, signed log-determinants, and phase-twisted
//! one-cell matrices whose determinant products rebuild the large
//! quotient determinants sector by sector.
//!
//! Complete pivoting is used throughout: these matrices drive element
//! growth under partial pivoting large enough to corrupt log-determinants
//! at block sizes in the hundreds, while complete pivoting keeps the
//! factorization backward stable at every size exercised here.

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::domain::FundamentalDomain;
use crate::{Error, Result};

/// Magnitude below which a pivot marks the matrix as singular.
pub const SINGULAR_PIVOT: f64 = 1e-300;
/// Relative pivot ratio below which solves are refused.
pub const SOLVE_RELATIVE_PIVOT: f64 = 1e-12;

pub trait Scalar:
    Copy
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn mag(self) -> f64;
    /// Self scaled to unit magnitude; zero maps to zero.
    fn unit(self) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn mag(self) -> f64 {
        self.abs()
    }
    fn unit(self) -> Self {
        if self == 0.0 {
            0.0
        } else {
            self.signum()
        }
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn mag(self) -> f64 {
        self.norm()
    }
    fn unit(self) -> Self {
        let m = self.norm();
        if m == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            self / m
        }
    }
}

/// Dense square matrix, row major.
#[derive(Debug, Clone)]
pub struct Mat<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(n: usize) -> Self {
        Mat { n, data: vec![T::zero(); n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: T) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.n, |i, j| self.get(j, i))
    }
}

/// Sign and natural log of the absolute determinant; sign 0 marks a
/// numerically singular matrix (logabs is then -inf).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLogDet {
    pub sign: f64,
    pub logabs: f64,
}

impl SignedLogDet {
    pub fn value(&self) -> f64 {
        self.sign * self.logabs.exp()
    }
}

/// Complex determinant in polar form: unit phase and log magnitude.
#[derive(Debug, Clone, Copy)]
pub struct PhasedLogDet {
    pub phase: Complex64,
    pub logabs: f64,
}

impl PhasedLogDet {
    /// Collapse a numerically real phase to a sign.
    pub fn to_signed(&self) -> Result<SignedLogDet> {
        if self.phase == Complex64::new(0.0, 0.0) {
            return Ok(SignedLogDet { sign: 0.0, logabs: f64::NEG_INFINITY });
        }
        if self.phase.im.abs() > 1e-6 {
            return Err(Error::Numerical(format!(
                "determinant phase {} is not real",
                self.phase
            )));
        }
        Ok(SignedLogDet { sign: self.phase.re.signum(), logabs: self.logabs })
    }
}

/// LU factorization with full row and column pivoting: P A Q = L U.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
    swaps_odd: bool,
    rank: usize,
    min_pivot: f64,
    max_pivot: f64,
}

pub fn factor<T: Scalar>(a: &Mat<T>) -> Lu<T> {
    let n = a.n;
    let mut lu = a.data.clone();
    let mut row_perm: Vec<usize> = (0..n).collect();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut swaps_odd = false;
    let mut rank = n;
    let mut min_pivot = f64::INFINITY;
    let mut max_pivot = 0.0f64;

    for k in 0..n {
        let mut best = 0.0f64;
        let (mut bi, mut bj) = (k, k);
        for i in k..n {
            for j in k..n {
                let m = lu[i * n + j].mag();
                if m > best {
                    best = m;
                    bi = i;
                    bj = j;
                }
            }
        }
        if best < SINGULAR_PIVOT {
            rank = k;
            break;
        }
        if bi != k {
            for j in 0..n {
                lu.swap(k * n + j, bi * n + j);
            }
            row_perm.swap(k, bi);
            swaps_odd = !swaps_odd;
        }
        if bj != k {
            for i in 0..n {
                lu.swap(i * n + k, i * n + bj);
            }
            col_perm.swap(k, bj);
            swaps_odd = !swaps_odd;
        }
        let pivot = lu[k * n + k];
        min_pivot = min_pivot.min(best);
        max_pivot = max_pivot.max(best);
        for i in k + 1..n {
            let f = lu[i * n + k] / pivot;
            lu[i * n + k] = f;
            if f.mag() != 0.0 {
                for j in k + 1..n {
                    let sub = f * lu[k * n + j];
                    lu[i * n + j] = lu[i * n + j] - sub;
                }
            }
        }
    }

    Lu { n, lu, row_perm, col_perm, swaps_odd, rank, min_pivot, max_pivot }
}

impl<T: Scalar> Lu<T> {
    pub fn is_singular(&self) -> bool {
        self.rank < self.n
    }

    /// Unit phase (or sign) and log magnitude of the determinant.
    pub fn log_det(&self) -> (T, f64) {
        if self.is_singular() {
            return (T::zero(), f64::NEG_INFINITY);
        }
        let mut unit = if self.swaps_odd { -T::one() } else { T::one() };
        let mut logabs = 0.0f64;
        for k in 0..self.n {
            let d = self.lu[k * self.n + k];
            unit = unit * d.unit();
            logabs += d.mag().ln();
        }
        (unit, logabs)
    }

    /// Solve A x = b. Refused when the pivot spread shows the matrix is
    /// singular to working precision.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::Structural(format!(
                "right-hand side length {} does not match matrix size {n}",
                b.len()
            )));
        }
        if self.is_singular() || self.min_pivot < SOLVE_RELATIVE_PIVOT * self.max_pivot {
            return Err(Error::Numerical(
                "matrix is singular to working precision".into(),
            ));
        }
        let mut y: Vec<T> = (0..n).map(|i| b[self.row_perm[i]]).collect();
        for i in 1..n {
            let mut acc = y[i];
            for j in 0..i {
                acc = acc - self.lu[i * n + j] * y[j];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc = acc - self.lu[i * n + j] * y[j];
            }
            y[i] = acc / self.lu[i * n + i];
        }
        let mut x = vec![T::zero(); n];
        for j in 0..n {
            x[self.col_perm[j]] = y[j];
        }
        Ok(x)
    }
}

/// Signed log-determinant of a real matrix.
pub fn signed_logdet(a: &Mat<f64>) -> SignedLogDet {
    let (sign, logabs) = factor(a).log_det();
    SignedLogDet { sign, logabs }
}

/// Phase and log magnitude of a complex determinant.
pub fn phased_logdet(a: &Mat<Complex64>) -> PhasedLogDet {
    let (phase, logabs) = factor(a).log_det();
    PhasedLogDet { phase, logabs }
}

fn unit_pow(z: Complex64, s: i64) -> Complex64 {
    z.powi(s as i32)
}

/// One-cell matrix with phase twists: entry (white, black) accumulates
/// (-1)^orientation * weight * z^s1 * w^s2 over the connecting edges.
pub fn bloch_matrix(
    fd: &FundamentalDomain,
    orient: &[u8],
    z: Complex64,
    w: Complex64,
) -> Result<Mat<Complex64>> {
    if (z.norm() - 1.0).abs() > 1e-9 || (w.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "phase arguments must lie on the unit circle, got |z|={}, |w|={}",
            z.norm(),
            w.norm()
        )));
    }
    let k = fd.white_ids().len();
    let mut m = Mat::zeros(k);
    for e in &fd.edges {
        let sign = if orient[e.id] % 2 == 1 { -1.0 } else { 1.0 };
        let coeff = Complex64::new(sign * e.weight(), 0.0)
            * unit_pow(z, e.shift.0)
            * unit_pow(w, e.shift.1);
        m.add_to(fd.color_rank(e.w), fd.color_rank(e.b), coeff);
    }
    Ok(m)
}

/// The n-th roots of zeta in {+1, -1}, in increasing angle order.
pub fn sector_roots(n: usize, zeta: i8) -> Vec<Complex64> {
    let off = if zeta == 1 { 0.0 } else { 1.0 };
    (0..n)
        .map(|j| {
            Complex64::from_polar(1.0, std::f64::consts::PI * (2.0 * j as f64 + off) / n as f64)
        })
        .collect()
}

/// Product of one-cell determinants over all n-th root pairs of a sector,
/// accumulated as phase and log magnitude in lexicographic root order.
pub fn det_product_over_roots(
    fd: &FundamentalDomain,
    orient: &[u8],
    n: usize,
    sector: (i8, i8),
) -> Result<PhasedLogDet> {
    let zs = sector_roots(n, sector.0);
    let ws = sector_roots(n, sector.1);
    let mut phase = Complex64::new(1.0, 0.0);
    let mut logabs = 0.0f64;
    for z in &zs {
        for w in &ws {
            let d = phased_logdet(&bloch_matrix(fd, orient, *z, *w)?);
            if d.phase == Complex64::new(0.0, 0.0) {
                return Ok(PhasedLogDet {
                    phase: Complex64::new(0.0, 0.0),
                    logabs: f64::NEG_INFINITY,
                });
            }
            phase *= d.phase;
            logabs += d.logabs;
        }
    }
    phase = phase.unit();
    Ok(PhasedLogDet { phase, logabs })
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integrate f over [a, b] with an n-point Gauss-Legendre rule.
pub fn integrate_gl(n: usize, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    nodes
        .iter()
        .zip(&weights)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}
