//! The Lie algebra so(n): skew matrices, the basis `E_ij`, the splitting
//! `so(n) = p ⊕ t`, commutators, the invariant pairing and the n = 3 hat map.
//!
//! Index conventions: basis labels `(i, j)` are 1-based with `i < j`, as in
//! the coordinate names `M_1_2, M_1_3, ...`. Raw matrix access through
//! [`SkewMatrix::as_matrix`] is 0-based like any nalgebra matrix. The first
//! row/column (label 1) spans `p`; the remaining block is `t ≅ so(n-1)`.

use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

/// An element of so(n), stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    m: DMatrix<f64>,
}

/// The `p ⊕ t` decomposition of a skew matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Splitting {
    pub p_part: SkewMatrix,
    pub t_part: SkewMatrix,
}

/// A differential of a scalar function on so(n), represented by an arbitrary
/// square matrix. Two values are equivalent when their skew parts agree; the
/// symmetric part never contributes to a pairing with a skew matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffMatrix {
    m: DMatrix<f64>,
}

/// Anything that can be viewed as a dense square matrix.
pub trait AsMatrix {
    fn matrix(&self) -> &DMatrix<f64>;

    fn dim(&self) -> usize {
        self.matrix().nrows()
    }
}

impl AsMatrix for SkewMatrix {
    fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
}

impl AsMatrix for DiffMatrix {
    fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
}

impl AsMatrix for DMatrix<f64> {
    fn matrix(&self) -> &DMatrix<f64> {
        self
    }
}

/// Number of independent coordinates of so(n).
pub fn so_dim(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Basis labels `(i, j)`, 1-based, `i < j`, in lexicographic order.
pub fn basis_labels(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(so_dim(n));
    for i in 1..=n {
        for j in (i + 1)..=n {
            out.push((i, j));
        }
    }
    out
}

impl SkewMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        if n < 2 {
            return invalid(format!("so(n) needs n >= 2, got {n}"));
        }
        Ok(SkewMatrix {
            m: DMatrix::zeros(n, n),
        })
    }

    /// Accepts `m` only if it is exactly skew (`m[i][j] == -m[j][i]`).
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() {
            return invalid(format!("matrix is {}x{}, not square", n, m.ncols()));
        }
        if n < 2 {
            return invalid(format!("so(n) needs n >= 2, got {n}"));
        }
        for i in 0..n {
            for j in i..n {
                if m[(i, j)] != -m[(j, i)] {
                    return invalid(format!(
                        "entry ({}, {}) = {} is not minus entry ({}, {}) = {}",
                        i + 1,
                        j + 1,
                        m[(i, j)],
                        j + 1,
                        i + 1,
                        m[(j, i)]
                    ));
                }
            }
        }
        Ok(SkewMatrix { m })
    }

    /// Skew part `(m - mᵀ)/2` of an arbitrary square matrix.
    pub fn project(m: &DMatrix<f64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        SkewMatrix {
            m: skew_part(m),
        }
    }

    /// Builds a matrix from its `n(n-1)/2` upper-triangular entries in
    /// lexicographic `(i, j)` order.
    pub fn from_upper(n: usize, values: &[f64]) -> Result<Self> {
        let mut out = Self::zeros(n)?;
        if values.len() != so_dim(n) {
            return invalid(format!(
                "so({n}) has {} coordinates, got {}",
                so_dim(n),
                values.len()
            ));
        }
        for (&(i, j), &v) in basis_labels(n).iter().zip(values) {
            out.m[(i - 1, j - 1)] = v;
            out.m[(j - 1, i - 1)] = -v;
        }
        Ok(out)
    }

    /// The upper-triangular coordinates in lexicographic order.
    pub fn upper(&self) -> Vec<f64> {
        basis_labels(self.n())
            .into_iter()
            .map(|(i, j)| self.m[(i - 1, j - 1)])
            .collect()
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    /// Coordinate `M_ij` with 1-based labels (any order; `M_ji = -M_ij`).
    pub fn coord(&self, i: usize, j: usize) -> f64 {
        self.m[(i - 1, j - 1)]
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.m)
    }

    /// Frobenius norm of the coordinate vector, `sqrt(⟨A, A⟩)`.
    pub fn norm(&self) -> f64 {
        self.upper().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: f64) -> Self {
        SkewMatrix { m: &self.m * c }
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().all(|&v| v == 0.0)
    }

    pub fn to_diff(&self) -> DiffMatrix {
        DiffMatrix { m: self.m.clone() }
    }

    /// Trace of the `power`-th matrix power.
    pub fn trace_power(&self, power: u32) -> f64 {
        matrix_power(&self.m, power).trace()
    }
}

impl Add for &SkewMatrix {
    type Output = SkewMatrix;
    fn add(self, rhs: &SkewMatrix) -> SkewMatrix {
        SkewMatrix { m: &self.m + &rhs.m }
    }
}

impl Sub for &SkewMatrix {
    type Output = SkewMatrix;
    fn sub(self, rhs: &SkewMatrix) -> SkewMatrix {
        SkewMatrix { m: &self.m - &rhs.m }
    }
}

impl Neg for &SkewMatrix {
    type Output = SkewMatrix;
    fn neg(self) -> SkewMatrix {
        SkewMatrix { m: -&self.m }
    }
}

impl Mul<f64> for &SkewMatrix {
    type Output = SkewMatrix;
    fn mul(self, rhs: f64) -> SkewMatrix {
        self.scale(rhs)
    }
}

impl DiffMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return invalid(format!("matrix is {}x{}, not square", m.nrows(), m.ncols()));
        }
        Ok(DiffMatrix { m })
    }

    pub(crate) fn from_raw(m: DMatrix<f64>) -> Self {
        DiffMatrix { m }
    }

    pub fn zeros(n: usize) -> Self {
        DiffMatrix {
            m: DMatrix::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// The skew part, the only part that pairs with tangent vectors.
    pub fn skew(&self) -> SkewMatrix {
        SkewMatrix::project(&self.m)
    }

    pub fn scale(&self, c: f64) -> Self {
        DiffMatrix { m: &self.m * c }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.m)
    }

    /// Equivalence modulo symmetric matrices, up to `tol` in max norm.
    pub fn equivalent(&self, other: &DiffMatrix, tol: f64) -> bool {
        self.n() == other.n() && max_abs(&skew_part(&(&self.m - &other.m))) <= tol
    }
}

/// The basis element `E_ij = e_ij - e_ji` (1-based, `i < j`).
pub fn basis_element(n: usize, i: usize, j: usize) -> Result<SkewMatrix> {
    check_label(n, i, j)?;
    let mut out = SkewMatrix::zeros(n)?;
    out.m[(i - 1, j - 1)] = 1.0;
    out.m[(j - 1, i - 1)] = -1.0;
    Ok(out)
}

fn check_label(n: usize, i: usize, j: usize) -> Result<()> {
    if n < 2 {
        return invalid(format!("so(n) needs n >= 2, got {n}"));
    }
    if i < 1 || j > n || i >= j {
        return invalid(format!("basis label ({i}, {j}) needs 1 <= i < j <= {n}"));
    }
    Ok(())
}

/// Matrix commutator `AB - BA`.
pub fn bracket(a: &SkewMatrix, b: &SkewMatrix) -> Result<SkewMatrix> {
    same_dim(a, b)?;
    Ok(SkewMatrix {
        m: commutator(&a.m, &b.m),
    })
}

/// One term `coefficient · E_label` of a structure-constant expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisTerm {
    pub coefficient: i8,
    pub label: (usize, usize),
}

/// `[E_ij, E_km]` expanded through the structure constants
/// `δ_im E_jk + δ_jk E_im - δ_ik E_jm - δ_jm E_ik`, with every term brought
/// to a normal-form label `(a, b)`, `a < b`, and like terms merged.
pub fn structure_bracket(
    n: usize,
    (i, j): (usize, usize),
    (k, m): (usize, usize),
) -> Result<Vec<BasisTerm>> {
    check_label(n, i, j)?;
    check_label(n, k, m)?;
    let delta = |a: usize, b: usize| i8::from(a == b);
    let raw = [
        (delta(i, m), (j, k)),
        (delta(j, k), (i, m)),
        (-delta(i, k), (j, m)),
        (-delta(j, m), (i, k)),
    ];
    let mut terms: Vec<BasisTerm> = Vec::new();
    for (c, (a, b)) in raw {
        if c == 0 || a == b {
            continue;
        }
        let (c, label) = if a < b { (c, (a, b)) } else { (-c, (b, a)) };
        match terms.iter_mut().find(|t| t.label == label) {
            Some(t) => t.coefficient += c,
            None => terms.push(BasisTerm {
                coefficient: c,
                label,
            }),
        }
    }
    terms.retain(|t| t.coefficient != 0);
    terms.sort_by_key(|t| t.label);
    Ok(terms)
}

/// Splits `M` into its row/column-1 block (`p`) and the rest (`t`).
pub fn split(m: &SkewMatrix) -> Splitting {
    let n = m.n();
    let mut p = DMatrix::zeros(n, n);
    for j in 1..n {
        p[(0, j)] = m.m[(0, j)];
        p[(j, 0)] = m.m[(j, 0)];
    }
    let t = &m.m - &p;
    Splitting {
        p_part: SkewMatrix { m: p },
        t_part: SkewMatrix { m: t },
    }
}

/// The invariant pairing `⟨A, B⟩ = -½ Tr(AB)`.
///
/// On skew pairs this is the Euclidean inner product of the coordinate
/// vectors, so the `E_ij` are orthonormal.
pub fn pairing<A: AsMatrix + ?Sized>(a: &A, b: &SkewMatrix) -> Result<f64> {
    if a.dim() != b.n() {
        return invalid(format!("dimension mismatch: {} vs {}", a.dim(), b.n()));
    }
    Ok(pair(a.matrix(), &b.m))
}

/// The hat map `v ↦ v̂` with `v̂ w = v × w`.
pub fn hat3(v: [f64; 3]) -> SkewMatrix {
    let m = DMatrix::from_row_slice(
        3,
        3,
        &[0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0],
    );
    SkewMatrix { m }
}

/// Inverse of [`hat3`].
pub fn unhat3(m: &SkewMatrix) -> Result<[f64; 3]> {
    if m.n() != 3 {
        return invalid(format!("unhat3 needs a 3x3 matrix, got n = {}", m.n()));
    }
    Ok([m.m[(2, 1)], m.m[(0, 2)], m.m[(1, 0)]])
}

/// Apply a 3x3 skew matrix to a vector.
pub fn apply3(m: &SkewMatrix, w: [f64; 3]) -> [f64; 3] {
    let r = &m.m * Vector3::new(w[0], w[1], w[2]);
    [r[0], r[1], r[2]]
}

/// A seeded random skew matrix with upper entries uniform in `[-scale, scale]`.
pub fn random_skew(n: usize, seed: u64, scale: f64) -> Result<SkewMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_skew_with(&mut rng, n, scale)
}

/// Same as [`random_skew`] but drawing from a caller-owned generator.
pub fn random_skew_with<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> Result<SkewMatrix> {
    if !(scale > 0.0) {
        return invalid(format!("scale must be positive, got {scale}"));
    }
    let values: Vec<f64> = (0..so_dim(n))
        .map(|_| rng.gen_range(-scale..=scale))
        .collect();
    SkewMatrix::from_upper(n, &values)
}

/// Generator for trial `trial` of a seeded batch. Each trial gets its own
/// ChaCha stream, so batches are reproducible in any execution order.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// CSV header `M_1_2,M_1_3,...` for so(n) coordinates.
pub fn csv_header(n: usize) -> String {
    basis_labels(n)
        .iter()
        .map(|(i, j)| format!("M_{i}_{j}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// One CSV line of upper-triangular coordinates, 17 significant digits.
pub fn to_csv_line(m: &SkewMatrix) -> String {
    let mut s = String::new();
    for (idx, v) in m.upper().iter().enumerate() {
        if idx > 0 {
            s.push(',');
        }
        write!(s, "{}", fmt_f64(*v)).unwrap();
    }
    s
}

/// Parses a header + value line (or a bare value line) into a skew matrix.
pub fn from_csv(text: &str) -> Result<SkewMatrix> {
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let data = match lines.as_slice() {
        [header, data] if header.starts_with("M_") => *data,
        [data] => *data,
        _ => return invalid("expected an optional header line and one value line"),
    };
    let values: Vec<f64> = data
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| crate::Error::InvalidArgument(format!("bad value {t:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    let n = dim_from_count(values.len())?;
    SkewMatrix::from_upper(n, &values)
}

/// Recovers `n` from a coordinate count `n(n-1)/2`.
pub fn dim_from_count(count: usize) -> Result<usize> {
    (2..=64)
        .find(|&n| so_dim(n) == count)
        .map_or_else(|| invalid(format!("{count} is not n(n-1)/2 for any n")), Ok)
}

/// Formats with 17 significant digits (round-trip exact).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------------------
// raw matrix helpers shared across modules

pub(crate) fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

pub(crate) fn skew_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m - m.transpose()) * 0.5
}

pub(crate) fn pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // -½ Tr(AB) without forming the product
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    -0.5 * acc
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub(crate) fn matrix_power(m: &DMatrix<f64>, power: u32) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::identity(n, n);
    for _ in 0..power {
        out = &out * m;
    }
    out
}

pub(crate) fn diag_matrix(d: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d))
}

fn same_dim(a: &SkewMatrix, b: &SkewMatrix) -> Result<()> {
    if a.n() != b.n() {
        return invalid(format!("dimension mismatch: {} vs {}", a.n(), b.n()));
    }
    Ok(())
}
