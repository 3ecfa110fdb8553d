//! Inertia data, the momentum → velocity maps and the scalar Hamiltonians.
//!
//! Gradients are taken with respect to the pairing `⟨A, B⟩ = -½ Tr(AB)`, so
//! the gradient of a function is the skew matrix of its partial derivatives
//! in the coordinates `M_ij`, `i < j`. Under this convention
//! `grad H_sR = Ω` and the Lie–Poisson flow of `H_sR` is literally `[M, Ω]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{diag_matrix, split, DiffMatrix, SkewMatrix};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassKind {
    Riemannian,
    SubRiemannian,
    Family,
}

/// Diagonal inertia data.
///
/// * `Riemannian`: a mass matrix `J = Diag(J_1..J_n)` with `J_i + J_j > 0`.
/// * `SubRiemannian`: `J_sR = Diag(0, I_2..I_n)` with `0 < I_2 <= ... <= I_n`.
/// * `Family`: `J^s = Diag(-s, I_2 + s, ..., I_n + s)`, a Riemannian mass
///   matrix whose `s → ∞` limit is the sub-Riemannian metric with the same
///   inertias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSpec {
    kind: MassKind,
    diag: Vec<f64>,
    inertias: Vec<f64>,
    s: f64,
}

impl MassSpec {
    pub fn riemannian(diag: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n < 2 {
            return invalid(format!("mass matrix needs n >= 2 entries, got {n}"));
        }
        if diag.iter().any(|v| !v.is_finite()) {
            return invalid("mass matrix entries must be finite");
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if !(diag[i] + diag[j] > 0.0) {
                    return invalid(format!(
                        "J_{} + J_{} = {} is not positive",
                        i + 1,
                        j + 1,
                        diag[i] + diag[j]
                    ));
                }
            }
        }
        Ok(MassSpec {
            kind: MassKind::Riemannian,
            diag,
            inertias: Vec::new(),
            s: 0.0,
        })
    }

    /// Sub-Riemannian inertias `I_2, ..., I_n`.
    pub fn sub_riemannian(inertias: Vec<f64>) -> Result<Self> {
        check_inertias(&inertias)?;
        let mut diag = Vec::with_capacity(inertias.len() + 1);
        diag.push(0.0);
        diag.extend_from_slice(&inertias);
        Ok(MassSpec {
            kind: MassKind::SubRiemannian,
            diag,
            inertias,
            s: 0.0,
        })
    }

    /// The mass family `J^s` built on inertias `I_2, ..., I_n`.
    pub fn family(inertias: Vec<f64>, s: f64) -> Result<Self> {
        check_inertias(&inertias)?;
        if !(s >= 0.0) || !s.is_finite() {
            return invalid(format!("family parameter s must be finite and >= 0, got {s}"));
        }
        let mut diag = Vec::with_capacity(inertias.len() + 1);
        diag.push(-s);
        diag.extend(inertias.iter().map(|i| i + s));
        Ok(MassSpec {
            kind: MassKind::Family,
            diag,
            inertias,
            s,
        })
    }

    pub fn kind(&self) -> MassKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn diag_matrix(&self) -> DMatrix<f64> {
        diag_matrix(&self.diag)
    }

    /// `I_2..I_n` for sub-Riemannian and family specs; empty for Riemannian.
    pub fn inertias(&self) -> &[f64] {
        &self.inertias
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Strict chain `0 < I_2 < ... < I_n`.
    pub fn is_strict(&self) -> bool {
        !self.inertias.is_empty() && self.inertias.windows(2).all(|w| w[0] < w[1])
    }

    /// True for specs with a Riemannian metric (`Riemannian` or `Family`).
    pub fn is_riemannian(&self) -> bool {
        self.kind != MassKind::SubRiemannian
    }

    /// The sub-Riemannian spec this family converges to.
    pub fn sr_limit(&self) -> Result<MassSpec> {
        match self.kind {
            MassKind::Riemannian => invalid("a plain Riemannian mass matrix has no sR limit"),
            _ => MassSpec::sub_riemannian(self.inertias.clone()),
        }
    }

    /// Pseudo-inverse `J_sR^{-p} = Diag(0, I_2^{-p}, ..., I_n^{-p})`.
    pub fn pseudo_inverse_power(&self, p: i32) -> Result<DMatrix<f64>> {
        self.require_sr("pseudo-inverse")?;
        let mut d = vec![0.0];
        d.extend(self.inertias.iter().map(|i| i.powi(-p)));
        Ok(diag_matrix(&d))
    }

    pub(crate) fn require_sr(&self, what: &str) -> Result<()> {
        if self.kind != MassKind::SubRiemannian {
            return invalid(format!("{what} needs a sub-Riemannian inertia spec"));
        }
        Ok(())
    }

    pub(crate) fn require_riemannian(&self, what: &str) -> Result<()> {
        if !self.is_riemannian() {
            return invalid(format!("{what} needs a Riemannian mass matrix"));
        }
        Ok(())
    }

    pub(crate) fn require_dim(&self, m: &SkewMatrix) -> Result<()> {
        if m.n() != self.n() {
            return invalid(format!("momentum is so({}) but inertia data is for n = {}", m.n(), self.n()));
        }
        Ok(())
    }
}

fn check_inertias(inertias: &[f64]) -> Result<()> {
    if inertias.is_empty() {
        return invalid("need at least one inertia I_2");
    }
    if let Some(bad) = inertias.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return invalid(format!("inertias must be positive and finite, got {bad}"));
    }
    if inertias.windows(2).any(|w| w[0] > w[1]) {
        return invalid(format!("inertias must be non-decreasing, got {inertias:?}"));
    }
    Ok(())
}

/// Riemannian angular velocity `Ω = I^{-1}(M)`, `Ω_ij = M_ij / (J_i + J_j)`.
pub fn omega_riemannian(m: &SkewMatrix, spec: &MassSpec) -> Result<SkewMatrix> {
    spec.require_riemannian("omega_riemannian")?;
    spec.require_dim(m)?;
    Ok(omega_riemannian_raw(m, spec.diag()))
}

pub(crate) fn omega_riemannian_raw(m: &SkewMatrix, diag: &[f64]) -> SkewMatrix {
    let n = m.n();
    let src = m.as_matrix();
    let out = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            src[(i, j)] / (diag[i] + diag[j])
        }
    });
    SkewMatrix::project(&out)
}

/// Sub-Riemannian velocity: the unique `Ω ∈ p` with `J_sR Ω + Ω J_sR = M_p`,
/// i.e. `Ω_1j = M_1j / I_j` and zero `t` block.
pub fn omega_sr(m: &SkewMatrix, spec: &MassSpec) -> Result<SkewMatrix> {
    spec.require_sr("omega_sr")?;
    spec.require_dim(m)?;
    Ok(omega_sr_raw(m, spec.inertias()))
}

pub(crate) fn omega_sr_raw(m: &SkewMatrix, inertias: &[f64]) -> SkewMatrix {
    let n = m.n();
    let src = m.as_matrix();
    let mut out = DMatrix::zeros(n, n);
    for j in 1..n {
        let v = src[(0, j)] / inertias[j - 1];
        out[(0, j)] = v;
        out[(j, 0)] = -v;
    }
    SkewMatrix::project(&out)
}

/// `H_sR = ½ Σ_j M_1j² / I_j`.
pub fn hamiltonian_sr(m: &SkewMatrix, spec: &MassSpec) -> Result<f64> {
    spec.require_sr("hamiltonian_sr")?;
    spec.require_dim(m)?;
    Ok(hamiltonian_sr_raw(m, spec.inertias()))
}

pub(crate) fn hamiltonian_sr_raw(m: &SkewMatrix, inertias: &[f64]) -> f64 {
    let row = m.as_matrix().row(0);
    0.5 * (1..m.n()).map(|j| row[j] * row[j] / inertias[j - 1]).sum::<f64>()
}

/// Matrix form `H_sR = -¼ Tr(M Ω)`.
pub fn hamiltonian_sr_trace(m: &SkewMatrix, spec: &MassSpec) -> Result<f64> {
    let omega = omega_sr(m, spec)?;
    Ok(-0.25 * (m.as_matrix() * omega.as_matrix()).trace())
}

/// `H = ½ Σ_{i<j} M_ij² / (J_i + J_j)`.
pub fn hamiltonian_riemannian(m: &SkewMatrix, spec: &MassSpec) -> Result<f64> {
    spec.require_riemannian("hamiltonian_riemannian")?;
    spec.require_dim(m)?;
    let d = spec.diag();
    let src = m.as_matrix();
    let n = m.n();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            acc += src[(i, j)] * src[(i, j)] / (d[i] + d[j]);
        }
    }
    Ok(0.5 * acc)
}

/// Matrix form `H = -¼ Tr(M Ω)`.
pub fn hamiltonian_riemannian_trace(m: &SkewMatrix, spec: &MassSpec) -> Result<f64> {
    let omega = omega_riemannian(m, spec)?;
    Ok(-0.25 * (m.as_matrix() * omega.as_matrix()).trace())
}

/// The second Hamiltonian
/// `F_sR = -½ Tr(2 M_p J⁻² M_p - J⁻¹ M_t J⁻¹ M_t)` with pseudo-inverses of
/// `J_sR`.
pub fn f_sr(m: &SkewMatrix, spec: &MassSpec) -> Result<f64> {
    spec.require_sr("f_sr")?;
    spec.require_dim(m)?;
    let k1 = spec.pseudo_inverse_power(1)?;
    let k2 = spec.pseudo_inverse_power(2)?;
    let sp = split(m);
    let mp = sp.p_part.as_matrix();
    let mt = sp.t_part.as_matrix();
    let inner = (mp * &k2 * mp) * 2.0 - &k1 * mt * &k1 * mt;
    Ok(-0.5 * inner.trace())
}

/// Gradient of [`f_sr`]: `2 (J⁻² M_p + M_p J⁻² - J⁻¹ M_t J⁻¹)`.
pub fn diff_f_sr(m: &SkewMatrix, spec: &MassSpec) -> Result<DiffMatrix> {
    spec.require_sr("diff_f_sr")?;
    spec.require_dim(m)?;
    let k1 = spec.pseudo_inverse_power(1)?;
    let k2 = spec.pseudo_inverse_power(2)?;
    let sp = split(m);
    let mp = sp.p_part.as_matrix();
    let mt = sp.t_part.as_matrix();
    let d = &k2 * mp + mp * &k2 - &k1 * mt * &k1;
    Ok(DiffMatrix::from_raw(d * 2.0))
}

/// Factor `c` such that the sR Euler field is `P_J(grad(c · F_sR))`.
///
/// With gradients taken in the `-½ Tr` pairing the two Hamiltonian
/// formulations share the field only after halving `F_sR`.
pub const F_SR_SCALE: f64 = 0.5;

/// Gradient of `H_sR`, which is `Ω`.
pub fn diff_h_sr(m: &SkewMatrix, spec: &MassSpec) -> Result<DiffMatrix> {
    Ok(omega_sr(m, spec)?.to_diff())
}

/// Gradient of the Riemannian `H`, which is `Ω = I^{-1}(M)`.
pub fn diff_h_riemannian(m: &SkewMatrix, spec: &MassSpec) -> Result<DiffMatrix> {
    Ok(omega_riemannian(m, spec)?.to_diff())
}

/// `I(Ω) = ΩJ + JΩ`, the inverse of [`omega_riemannian`].
pub fn inertia_map(omega: &SkewMatrix, spec: &MassSpec) -> Result<SkewMatrix> {
    spec.require_dim(omega)?;
    let j = spec.diag_matrix();
    let w = omega.as_matrix();
    Ok(SkewMatrix::project(&(w * &j + &j * w)))
}

impl std::str::FromStr for MassKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "riemannian" => Ok(MassKind::Riemannian),
            "sub_riemannian" => Ok(MassKind::SubRiemannian),
            "family" => Ok(MassKind::Family),
            other => invalid(format!("unknown mass kind {other:?}")),
        }
    }
}
