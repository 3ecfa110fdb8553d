//! Manakov integrals: λ-coefficients of `(1/k) Tr (M + λA)^k` for the
//! sub-Riemannian `A = J_sR` and the Riemannian `A = J²`, their gradients,
//! and the Casimirs `Tr M^{2k}`.
//!
//! Coefficients are extracted by evaluating the λ-polynomial at the nodes
//! `λ = ρ·{0, 1, -1, 2, -2, ...}` and solving the Vandermonde system. The
//! scale `ρ = ‖M‖/‖A‖` balances the two summands so the solve stays well
//! conditioned for large or small inertias.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{max_abs, DiffMatrix, SkewMatrix};
use crate::error::{invalid, Error, Result};
use crate::metrics::{diff_h_sr, hamiltonian_sr, MassSpec};

/// Largest degree accepted by the coefficient extraction.
pub const MAX_DEGREE: usize = 12;

fn check_degree(k: usize) -> Result<()> {
    if k < 1 {
        return invalid("degree k must be at least 1");
    }
    if k > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(k));
    }
    Ok(())
}

fn node(i: usize) -> f64 {
    // 0, 1, -1, 2, -2, ...
    let h = i.div_ceil(2) as f64;
    if i % 2 == 1 {
        h
    } else {
        -h
    }
}

fn node_scale(m: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    let (nm, na) = (max_abs(m), max_abs(a));
    if nm > 0.0 && na > 0.0 {
        nm / na
    } else {
        1.0
    }
}

/// Solves for the coefficients `c_0..c_p` of a degree-`p` polynomial with
/// values in `R^w`, given samples at the scaled nodes. `samples` has one row
/// per node.
fn vandermonde_solve(samples: DMatrix<f64>, rho: f64) -> Result<DMatrix<f64>> {
    let count = samples.nrows();
    let v = DMatrix::from_fn(count, count, |i, d| node(i).powi(d as i32));
    let mut c = v
        .lu()
        .solve(&samples)
        .ok_or_else(|| Error::Conditioning("singular Vandermonde system".into()))?;
    for d in 0..count {
        let f = rho.powi(d as i32);
        c.row_mut(d).unscale_mut(f);
    }
    Ok(c)
}

/// λ-coefficients `c_0..c_p` of the matrix polynomial `(M + λA)^p`.
pub(crate) fn power_coefficients(m: &DMatrix<f64>, a: &DMatrix<f64>, p: usize) -> Result<Vec<DMatrix<f64>>> {
    let n = m.nrows();
    if p == 0 {
        return Ok(vec![DMatrix::identity(n, n)]);
    }
    check_degree(p)?;
    if max_abs(m) == 0.0 {
        // only the top coefficient survives; solving would leak round-off
        let mut out = vec![DMatrix::zeros(n, n); p];
        out.push(crate::algebra::matrix_power(a, p as u32));
        return Ok(out);
    }
    let rho = node_scale(m, a);
    let mut samples = DMatrix::zeros(p + 1, n * n);
    for i in 0..=p {
        let x = m + a * (rho * node(i));
        let xp = crate::algebra::matrix_power(&x, p as u32);
        samples.row_mut(i).copy_from_slice(xp.as_slice());
    }
    let c = vandermonde_solve(samples, rho)?;
    Ok((0..=p)
        .map(|d| DMatrix::from_iterator(n, n, c.row(d).iter().copied()))
        .collect())
}

/// λ-coefficients `c_0..c_k` of `(1/k) Tr (M + λA)^k`.
pub(crate) fn trace_coefficients(m: &DMatrix<f64>, a: &DMatrix<f64>, k: usize) -> Result<Vec<f64>> {
    check_degree(k)?;
    if max_abs(m) == 0.0 {
        let mut out = vec![0.0; k];
        out.push(crate::algebra::matrix_power(a, k as u32).trace() / k as f64);
        return Ok(out);
    }
    let rho = node_scale(m, a);
    let samples = DMatrix::from_fn(k + 1, 1, |i, _| {
        let x = m + a * (rho * node(i));
        crate::algebra::matrix_power(&x, k as u32).trace() / k as f64
    });
    let c = vandermonde_solve(samples, rho)?;
    Ok(c.column(0).iter().copied().collect())
}

/// `(1/k) Tr (M + λ J_sR)^k` by repeated multiplication.
pub fn h_lambda(m: &SkewMatrix, spec: &MassSpec, k: usize, lambda: f64) -> Result<f64> {
    spec.require_sr("h_lambda")?;
    spec.require_dim(m)?;
    if k < 1 {
        return invalid("degree k must be at least 1");
    }
    let x = m.as_matrix() + spec.diag_matrix() * lambda;
    Ok(crate::algebra::matrix_power(&x, k as u32).trace() / k as f64)
}

/// All coefficients `h_{k,r}`, `r = 0..k`, of
/// `h_k^λ = Σ_r λ^{k-r} h_{k,r}`, keyed by `(k, r)`.
pub fn extract_coefficients(m: &SkewMatrix, spec: &MassSpec, k: usize) -> Result<BTreeMap<(usize, usize), f64>> {
    spec.require_sr("extract_coefficients")?;
    spec.require_dim(m)?;
    let c = trace_coefficients(m.as_matrix(), &spec.diag_matrix(), k)?;
    Ok((0..=k).map(|r| ((k, r), c[k - r])).collect())
}

/// The single coefficient `h_{k,r}`.
pub fn h_kr(m: &SkewMatrix, spec: &MassSpec, k: usize, r: usize) -> Result<f64> {
    if r > k {
        return invalid(format!("need r <= k, got (k, r) = ({k}, {r})"));
    }
    Ok(extract_coefficients(m, spec, k)?[&(k, r)])
}

/// The coefficient of `λ^{k-r}` in `(M + λ J_sR)^{k-1}`, i.e. the matrix
/// `D` with `d h_{k,r}(δ) = Tr(D δ)`.
pub fn lambda_coefficient(m: &SkewMatrix, spec: &MassSpec, k: usize, r: usize) -> Result<DiffMatrix> {
    spec.require_sr("lambda_coefficient")?;
    spec.require_dim(m)?;
    check_pair(k, r)?;
    let coeffs = power_coefficients(m.as_matrix(), &spec.diag_matrix(), k - 1)?;
    Ok(DiffMatrix::from_raw(coeffs[k - r].clone()))
}

fn check_pair(k: usize, r: usize) -> Result<()> {
    check_degree(k)?;
    if r < 1 || r > k {
        return invalid(format!("gradient needs 1 <= r <= k, got (k, r) = ({k}, {r})"));
    }
    Ok(())
}

/// Gradient of `h_{k,r}` in the `-½ Tr` pairing: `-2` times
/// [`lambda_coefficient`].
pub fn diff_h(m: &SkewMatrix, spec: &MassSpec, k: usize, r: usize) -> Result<DiffMatrix> {
    Ok(lambda_coefficient(m, spec, k, r)?.scale(-2.0))
}

/// Gradients of `h_{k,r}` for every `r` in `rs`, sharing one extraction.
pub fn diff_h_many(m: &SkewMatrix, spec: &MassSpec, k: usize, rs: &[usize]) -> Result<Vec<DiffMatrix>> {
    spec.require_sr("diff_h")?;
    spec.require_dim(m)?;
    for &r in rs {
        check_pair(k, r)?;
    }
    let coeffs = power_coefficients(m.as_matrix(), &spec.diag_matrix(), k - 1)?;
    Ok(rs
        .iter()
        .map(|&r| DiffMatrix::from_raw(&coeffs[k - r] * -2.0))
        .collect())
}

/// Riemannian Manakov integrals `f_{k,r}`, the coefficients of
/// `(1/k) Tr (M + λJ²)^k = Σ_r λ^{k-r} f_{k,r}`, keyed by `(k, r)`.
pub fn riemannian_f(m: &SkewMatrix, spec: &MassSpec, k: usize) -> Result<BTreeMap<(usize, usize), f64>> {
    spec.require_riemannian("riemannian_f")?;
    spec.require_dim(m)?;
    let j = spec.diag_matrix();
    let c = trace_coefficients(m.as_matrix(), &(&j * &j), k)?;
    Ok((0..=k).map(|r| ((k, r), c[k - r])).collect())
}

/// Gradient of `f_{k,r}` in the `-½ Tr` pairing.
pub fn diff_f(m: &SkewMatrix, spec: &MassSpec, k: usize, r: usize) -> Result<DiffMatrix> {
    spec.require_riemannian("diff_f")?;
    spec.require_dim(m)?;
    check_pair(k, r)?;
    let j = spec.diag_matrix();
    let coeffs = power_coefficients(m.as_matrix(), &(&j * &j), k - 1)?;
    Ok(DiffMatrix::from_raw(&coeffs[k - r] * -2.0))
}

/// Number of non-trivial sR Manakov integrals, `½(n(n-1)/2 - ⌊n/2⌋)`.
pub fn expected_count(n: usize) -> Result<usize> {
    if n < 3 {
        return invalid(format!("counting needs n >= 3, got {n}"));
    }
    Ok((n * (n - 1) / 2 - n / 2) / 2)
}

/// Non-trivial index pairs: `k = 3..n`, `r` even, `0 < r < k`.
pub fn nontrivial_pairs(n: usize) -> Vec<(usize, usize)> {
    (3..=n)
        .flat_map(|k| (2..k).step_by(2).map(move |r| (k, r)))
        .collect()
}

/// A scalar function of the momentum that the verification suite can
/// evaluate and differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    Manakov { k: usize, r: usize },
    Casimir { power: u32 },
    Hamiltonian,
}

impl Observable {
    pub fn label(&self) -> String {
        match self {
            Observable::Manakov { k, r } => format!("h_{k}_{r}"),
            Observable::Casimir { power } => format!("C{power}"),
            Observable::Hamiltonian => "H".to_string(),
        }
    }
}

/// `Tr M^p`.
pub fn casimir(m: &SkewMatrix, power: u32) -> f64 {
    m.trace_power(power)
}

/// Gradient of `Tr M^{p}` in the `-½ Tr` pairing: `-2p M^{p-1}`.
pub fn diff_casimir(m: &SkewMatrix, power: u32) -> DiffMatrix {
    if power == 0 {
        return DiffMatrix::zeros(m.n());
    }
    let mp = crate::algebra::matrix_power(m.as_matrix(), power - 1);
    DiffMatrix::from_raw(mp * (-2.0 * power as f64))
}

/// The sR Manakov integrals, Casimirs and `H_sR` for one inertia spec.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralFamily {
    spec: MassSpec,
    entries: Vec<(usize, usize)>,
    casimir_powers: Vec<u32>,
}

impl IntegralFamily {
    pub fn new(spec: &MassSpec) -> Result<Self> {
        spec.require_sr("IntegralFamily")?;
        let n = spec.n();
        Ok(IntegralFamily {
            spec: spec.clone(),
            entries: nontrivial_pairs(n),
            casimir_powers: (1..=n / 2).map(|k| 2 * k as u32).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn spec(&self) -> &MassSpec {
        &self.spec
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn casimir_powers(&self) -> &[u32] {
        &self.casimir_powers
    }

    /// Manakov integrals, then Casimirs (no Hamiltonian).
    pub fn observables(&self) -> Vec<Observable> {
        self.entries
            .iter()
            .map(|&(k, r)| Observable::Manakov { k, r })
            .chain(self.casimir_powers.iter().map(|&power| Observable::Casimir { power }))
            .collect()
    }

    /// Manakov integrals, `H_sR`, then Casimirs.
    pub fn observables_with_hamiltonian(&self) -> Vec<Observable> {
        let mut obs: Vec<Observable> = self.entries.iter().map(|&(k, r)| Observable::Manakov { k, r }).collect();
        obs.push(Observable::Hamiltonian);
        obs.extend(self.casimir_powers.iter().map(|&power| Observable::Casimir { power }));
        obs
    }

    pub fn value(&self, obs: Observable, m: &SkewMatrix) -> Result<f64> {
        match obs {
            Observable::Manakov { k, r } => h_kr(m, &self.spec, k, r),
            Observable::Casimir { power } => {
                self.spec.require_dim(m)?;
                Ok(casimir(m, power))
            }
            Observable::Hamiltonian => hamiltonian_sr(m, &self.spec),
        }
    }

    pub fn gradient(&self, obs: Observable, m: &SkewMatrix) -> Result<DiffMatrix> {
        match obs {
            Observable::Manakov { k, r } => diff_h(m, &self.spec, k, r),
            Observable::Casimir { power } => {
                self.spec.require_dim(m)?;
                Ok(diff_casimir(m, power))
            }
            Observable::Hamiltonian => diff_h_sr(m, &self.spec),
        }
    }

    /// Gradients of all `obs`, sharing one extraction per degree.
    pub fn gradients(&self, obs: &[Observable], m: &SkewMatrix) -> Result<Vec<DiffMatrix>> {
        self.spec.require_dim(m)?;
        let mut by_degree: BTreeMap<usize, Vec<DMatrix<f64>>> = BTreeMap::new();
        for o in obs {
            if let Observable::Manakov { k, r } = *o {
                check_pair(k, r)?;
                if let std::collections::btree_map::Entry::Vacant(e) = by_degree.entry(k) {
                    e.insert(power_coefficients(m.as_matrix(), &self.spec.diag_matrix(), k - 1)?);
                }
            }
        }
        obs.iter()
            .map(|o| match *o {
                Observable::Manakov { k, r } => Ok(DiffMatrix::from_raw(&by_degree[&k][k - r] * -2.0)),
                other => self.gradient(other, m),
            })
            .collect()
    }

    /// Values of the Manakov integrals and Casimirs at `m`.
    pub fn table(&self, m: &SkewMatrix) -> Result<IntegralTable> {
        self.spec.require_dim(m)?;
        let mut coeffs: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for &(k, _) in &self.entries {
            if let std::collections::btree_map::Entry::Vacant(e) = coeffs.entry(k) {
                e.insert(trace_coefficients(m.as_matrix(), &self.spec.diag_matrix(), k)?);
            }
        }
        Ok(IntegralTable {
            n: self.n(),
            entries: self
                .entries
                .iter()
                .map(|&(k, r)| TableEntry {
                    k,
                    r,
                    value: coeffs[&k][k - r],
                })
                .collect(),
            casimirs: self
                .casimir_powers
                .iter()
                .map(|&power| CasimirEntry {
                    power,
                    value: casimir(m, power),
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub k: usize,
    pub r: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasimirEntry {
    pub power: u32,
    pub value: f64,
}

/// Serializable snapshot of an [`IntegralFamily`] at one momentum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralTable {
    pub n: usize,
    pub entries: Vec<TableEntry>,
    pub casimirs: Vec<CasimirEntry>,
}

/// Evaluates a polynomial with coefficients `c_d` (ascending powers).
pub fn eval_poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}
