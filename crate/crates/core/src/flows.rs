//! Euler vector fields in Lax form, fixed-step integrators, group
//! reconstruction and conservation monitoring.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{commutator, fmt_f64, max_abs, split, SkewMatrix};
use crate::error::{invalid, Error, Result};
use crate::metrics::{omega_riemannian_raw, omega_sr_raw, MassSpec};

/// Sub-Riemannian Euler field `Ṁ = [M, Ω]` with `Ω = omega_sr(M)`.
pub fn vf_sr(m: &SkewMatrix, spec: &MassSpec) -> Result<SkewMatrix> {
    spec.require_sr("vf_sr")?;
    spec.require_dim(m)?;
    Ok(vf_sr_raw(m, spec.inertias()))
}

pub(crate) fn vf_sr_raw(m: &SkewMatrix, inertias: &[f64]) -> SkewMatrix {
    let omega = omega_sr_raw(m, inertias);
    SkewMatrix::project(&commutator(m.as_matrix(), omega.as_matrix()))
}

/// The same field written out in coordinates:
/// `Ṁ_1j = Σ_{m>=2} M_1m M_jm / I_m` and
/// `Ṁ_ij = M_1i M_1j (1/I_i - 1/I_j)` for `2 <= i < j`.
pub fn vf_sr_coordinates(m: &SkewMatrix, spec: &MassSpec) -> Result<SkewMatrix> {
    spec.require_sr("vf_sr_coordinates")?;
    spec.require_dim(m)?;
    let n = m.n();
    let inv = |j: usize| 1.0 / spec.inertias()[j - 2];
    let mut out = DMatrix::zeros(n, n);
    for j in 2..=n {
        let v: f64 = (2..=n).map(|k| m.coord(1, k) * m.coord(j, k) * inv(k)).sum();
        out[(0, j - 1)] = v;
        out[(j - 1, 0)] = -v;
    }
    for i in 2..=n {
        for j in (i + 1)..=n {
            let v = m.coord(1, i) * m.coord(1, j) * (inv(i) - inv(j));
            out[(i - 1, j - 1)] = v;
            out[(j - 1, i - 1)] = -v;
        }
    }
    SkewMatrix::from_matrix(out)
}

/// Riemannian (Manakov) Euler field `Ṁ = [M, I^{-1}(M)]`.
pub fn vf_riemannian(m: &SkewMatrix, spec: &MassSpec) -> Result<SkewMatrix> {
    spec.require_riemannian("vf_riemannian")?;
    spec.require_dim(m)?;
    Ok(vf_riemannian_raw(m, spec.diag()))
}

pub(crate) fn vf_riemannian_raw(m: &SkewMatrix, diag: &[f64]) -> SkewMatrix {
    let omega = omega_riemannian_raw(m, diag);
    SkewMatrix::project(&commutator(m.as_matrix(), omega.as_matrix()))
}

/// The Euler field matching the kind of `spec`.
pub fn euler_field(m: &SkewMatrix, spec: &MassSpec) -> Result<SkewMatrix> {
    if spec.is_riemannian() {
        vf_riemannian(m, spec)
    } else {
        vf_sr(m, spec)
    }
}

/// Velocity `Ω` matching the kind of `spec`.
pub fn velocity(m: &SkewMatrix, spec: &MassSpec) -> Result<SkewMatrix> {
    spec.require_dim(m)?;
    Ok(if spec.is_riemannian() {
        omega_riemannian_raw(m, spec.diag())
    } else {
        omega_sr_raw(m, spec.inertias())
    })
}

/// Magnitudes entering [`lax_residual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaxResidual {
    /// `max |[M + λA, Ω + λB] - [M, Ω]|`.
    pub residual: f64,
    /// `(‖M‖ + |λ|‖A‖)(‖Ω‖ + |λ|‖B‖)·n`, a bound on the size of the entries
    /// of the products being cancelled.
    pub magnitude: f64,
}

/// Residual of the λ-family of Lax pairs against the plain one.
///
/// For a sub-Riemannian spec `(A, B) = (J_sR, Id_t)`; for a Riemannian spec
/// `(A, B) = (J², J)`. The λ-linear term cancels identically and the
/// λ-quadratic term is a commutator of diagonal matrices.
pub fn lax_residual(m: &SkewMatrix, spec: &MassSpec, lambda: f64) -> Result<LaxResidual> {
    spec.require_dim(m)?;
    let n = m.n();
    let omega = velocity(m, spec)?;
    let (a, b) = if spec.is_riemannian() {
        let j = spec.diag_matrix();
        (&j * &j, j)
    } else {
        let mut id_t = DMatrix::identity(n, n);
        id_t[(0, 0)] = 0.0;
        (spec.diag_matrix(), id_t)
    };
    let mm = m.as_matrix();
    let w = omega.as_matrix();
    let lhs = commutator(&(mm + &a * lambda), &(w + &b * lambda));
    let rhs = commutator(mm, w);
    let magnitude = (max_abs(mm) + lambda.abs() * max_abs(&a)) * (max_abs(w) + lambda.abs() * max_abs(&b)) * n as f64;
    Ok(LaxResidual {
        residual: max_abs(&(lhs - rhs)),
        magnitude,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4,
    Midpoint,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Scheme::Rk4),
            "midpoint" => Ok(Scheme::Midpoint),
            other => invalid(format!("unknown scheme {other:?} (expected rk4 or midpoint)")),
        }
    }
}

/// Fixed-step integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integration {
    pub dt: f64,
    pub steps: usize,
    pub scheme: Scheme,
    pub reconstruct: bool,
}

impl Integration {
    pub fn new(dt: f64, steps: usize, scheme: Scheme) -> Self {
        Integration {
            dt,
            steps,
            scheme,
            reconstruct: false,
        }
    }

    pub fn with_reconstruction(mut self) -> Self {
        self.reconstruct = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return invalid(format!("dt must be positive, got {}", self.dt));
        }
        if self.steps == 0 {
            return invalid("steps must be at least 1");
        }
        Ok(())
    }
}

/// Fixed-point tolerance of the implicit midpoint solve, scaled by `1 + ‖M‖`.
pub const MIDPOINT_TOL: f64 = 1e-13;
pub const MIDPOINT_MAX_ITER: usize = 50;

/// Orthogonality contract for reconstructed group elements.
pub const ORTHO_TOL: f64 = 1e-10;

/// A sampled solution curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub momenta: Vec<SkewMatrix>,
    pub group: Option<Vec<DMatrix<f64>>>,
    /// Named per-sample invariant values filled in by [`Trajectory::record`].
    pub invariant_log: Vec<(String, Vec<f64>)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n(&self) -> usize {
        self.momenta.first().map_or(0, SkewMatrix::n)
    }

    pub fn last(&self) -> Option<&SkewMatrix> {
        self.momenta.last()
    }

    /// Evaluates `invariants` at every sample and stores the columns.
    pub fn record(&mut self, invariants: &[Invariant<'_>]) {
        for inv in invariants {
            let values = self.momenta.iter().map(|m| (inv.eval)(m)).collect();
            self.invariant_log.push((inv.name.clone(), values));
        }
    }

    /// Worst `‖gᵀg - Id‖_max` over the reconstructed group samples.
    pub fn orthogonality_defect(&self) -> Option<f64> {
        self.group.as_ref().map(|gs| {
            gs.iter()
                .map(|g| {
                    let n = g.nrows();
                    max_abs(&(g.transpose() * g - DMatrix::identity(n, n)))
                })
                .fold(0.0, f64::max)
        })
    }

    /// Writes the trajectory as CSV:
    /// `t,M_1_2,...[,g_11..g_nn][,<invariant names>]`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.n();
        let mut header = vec!["t".to_string(), crate::algebra::csv_header(n)];
        if self.group.is_some() {
            for i in 1..=n {
                for j in 1..=n {
                    header.push(format!("g_{i}{j}"));
                }
            }
        }
        for (name, _) in &self.invariant_log {
            header.push(name.clone());
        }
        writeln!(w, "{}", header.join(","))?;
        for (row, (t, m)) in self.times.iter().zip(&self.momenta).enumerate() {
            let mut fields = vec![fmt_f64(*t), crate::algebra::to_csv_line(m)];
            if let Some(gs) = &self.group {
                let g = &gs[row];
                for i in 0..n {
                    for j in 0..n {
                        fields.push(fmt_f64(g[(i, j)]));
                    }
                }
            }
            for (_, values) in &self.invariant_log {
                fields.push(fmt_f64(values[row]));
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Integrates the Euler field of `spec` from `m0`.
///
/// With reconstruction the group element follows `ġ = g Ω`, advanced by
/// `g_{k+1} = g_k · exp(dt Ω_mid)` with `Ω_mid` evaluated at the momentum
/// midpoint, then pulled back onto SO(n) by one Newton–Schulz polar step.
pub fn integrate(
    m0: &SkewMatrix,
    spec: &MassSpec,
    cfg: &Integration,
    g0: Option<&DMatrix<f64>>,
) -> Result<Trajectory> {
    spec.require_dim(m0)?;
    cfg.validate()?;
    let n = m0.n();
    let mut g = match g0 {
        Some(g) => {
            check_rotation(g, n)?;
            Some(g.clone())
        }
        None if cfg.reconstruct => Some(DMatrix::identity(n, n)),
        None => None,
    };
    let riemannian = spec.is_riemannian();
    let field = |m: &SkewMatrix| {
        if riemannian {
            vf_riemannian_raw(m, spec.diag())
        } else {
            vf_sr_raw(m, spec.inertias())
        }
    };
    let omega = |m: &SkewMatrix| {
        if riemannian {
            omega_riemannian_raw(m, spec.diag())
        } else {
            omega_sr_raw(m, spec.inertias())
        }
    };

    let mut times = Vec::with_capacity(cfg.steps + 1);
    let mut momenta = Vec::with_capacity(cfg.steps + 1);
    let mut group = g.as_ref().map(|g| {
        let mut v = Vec::with_capacity(cfg.steps + 1);
        v.push(g.clone());
        v
    });
    times.push(0.0);
    momenta.push(m0.clone());
    let mut m = m0.clone();
    for step in 0..cfg.steps {
        let next = advance(&m, cfg.dt, cfg.scheme, step, &field)?;
        if let (Some(gk), Some(samples)) = (g.as_mut(), group.as_mut()) {
            let mid = (&m + &next).scale(0.5);
            let w = omega(&mid);
            let update = (w.as_matrix() * cfg.dt).exp();
            *gk = polar_correct(&(&*gk * update));
            samples.push(gk.clone());
        }
        m = next;
        times.push((step + 1) as f64 * cfg.dt);
        momenta.push(m.clone());
    }
    Ok(Trajectory {
        times,
        momenta,
        group,
        invariant_log: Vec::new(),
    })
}

/// Integrates an arbitrary autonomous field on so(n) (momenta only).
pub fn integrate_field<F>(m0: &SkewMatrix, cfg: &Integration, field: F) -> Result<Trajectory>
where
    F: Fn(&SkewMatrix) -> SkewMatrix,
{
    cfg.validate()?;
    let mut times = vec![0.0];
    let mut momenta = vec![m0.clone()];
    let mut m = m0.clone();
    for step in 0..cfg.steps {
        m = advance(&m, cfg.dt, cfg.scheme, step, &field)?;
        times.push((step + 1) as f64 * cfg.dt);
        momenta.push(m.clone());
    }
    Ok(Trajectory {
        times,
        momenta,
        group: None,
        invariant_log: Vec::new(),
    })
}

fn advance<F>(m: &SkewMatrix, dt: f64, scheme: Scheme, step: usize, field: &F) -> Result<SkewMatrix>
where
    F: Fn(&SkewMatrix) -> SkewMatrix,
{
    match scheme {
        Scheme::Rk4 => {
            let k1 = field(m);
            let k2 = field(&(m + &k1.scale(0.5 * dt)));
            let k3 = field(&(m + &k2.scale(0.5 * dt)));
            let k4 = field(&(m + &k3.scale(dt)));
            let incr = &(&k1 + &k2.scale(2.0)) + &(&k3.scale(2.0) + &k4);
            Ok(m + &incr.scale(dt / 6.0))
        }
        Scheme::Midpoint => {
            // x = m + dt f((m + x)/2), solved by fixed-point iteration
            let tol = MIDPOINT_TOL * (1.0 + m.max_abs());
            let mut x = m + &field(m).scale(dt);
            let mut last = f64::INFINITY;
            for _ in 0..MIDPOINT_MAX_ITER {
                let mid = (m + &x).scale(0.5);
                let next = m + &field(&mid).scale(dt);
                last = (&next - &x).max_abs();
                x = next;
                if last <= tol {
                    return Ok(x);
                }
            }
            Err(Error::StepFailure { step, residual: last })
        }
    }
}

fn check_rotation(g: &DMatrix<f64>, n: usize) -> Result<()> {
    if g.nrows() != n || g.ncols() != n {
        return invalid(format!("g0 must be {n}x{n}"));
    }
    let defect = max_abs(&(g.transpose() * g - DMatrix::identity(n, n)));
    if defect > ORTHO_TOL {
        return invalid(format!("g0 is not orthogonal (defect {defect:e})"));
    }
    if g.determinant() <= 0.0 {
        return invalid("g0 must have determinant +1");
    }
    Ok(())
}

fn polar_correct(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let gtg = g.transpose() * g;
    g * (DMatrix::identity(n, n) * 3.0 - gtg) * 0.5
}

/// A named scalar function of the momentum.
pub struct Invariant<'a> {
    pub name: String,
    pub eval: Box<dyn Fn(&SkewMatrix) -> f64 + Sync + 'a>,
}

impl<'a> Invariant<'a> {
    pub fn new(name: impl Into<String>, eval: impl Fn(&SkewMatrix) -> f64 + Sync + 'a) -> Self {
        Invariant {
            name: name.into(),
            eval: Box::new(eval),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub name: String,
    pub initial: f64,
    /// `max_t |v(t) - v(0)| / |v(0)|` (absolute when `v(0) = 0`).
    pub max_relative_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub samples: usize,
    pub t_final: f64,
    pub drifts: Vec<Drift>,
}

impl DriftReport {
    pub fn worst(&self) -> f64 {
        self.drifts.iter().map(|d| d.max_relative_drift).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&Drift> {
        self.drifts.iter().find(|d| d.name == name)
    }
}

/// Maximum relative drift of every invariant along `traj`.
pub fn monitor(traj: &Trajectory, invariants: &[Invariant<'_>]) -> Result<DriftReport> {
    let Some(first) = traj.momenta.first() else {
        return invalid("cannot monitor an empty trajectory");
    };
    let drifts = invariants
        .iter()
        .map(|inv| {
            let v0 = (inv.eval)(first);
            let worst = traj
                .momenta
                .iter()
                .map(|m| ((inv.eval)(m) - v0).abs())
                .fold(0.0, f64::max);
            let denom = if v0 != 0.0 { v0.abs() } else { 1.0 };
            Drift {
                name: inv.name.clone(),
                initial: v0,
                max_relative_drift: worst / denom,
            }
        })
        .collect();
    Ok(DriftReport {
        samples: traj.len(),
        t_final: *traj.times.last().unwrap(),
        drifts,
    })
}

/// `H`, the even Casimirs `C2, C4, ...` and, for sub-Riemannian specs, every
/// non-trivial `h_k_r`, named as in the trajectory CSV.
pub fn standard_invariants(spec: &MassSpec) -> Vec<Invariant<'_>> {
    let mut out = Vec::new();
    if spec.is_riemannian() {
        out.push(Invariant::new("H", move |m| {
            crate::metrics::hamiltonian_riemannian(m, spec).unwrap_or(f64::NAN)
        }));
    } else {
        out.push(Invariant::new("H", move |m| {
            crate::metrics::hamiltonian_sr(m, spec).unwrap_or(f64::NAN)
        }));
    }
    for k in 1..=spec.n() / 2 {
        let power = 2 * k as u32;
        out.push(Invariant::new(format!("C{power}"), move |m| m.trace_power(power)));
    }
    if !spec.is_riemannian() {
        for (k, r) in crate::manakov::nontrivial_pairs(spec.n()) {
            out.push(Invariant::new(format!("h_{k}_{r}"), move |m| {
                crate::manakov::h_kr(m, spec, k, r).unwrap_or(f64::NAN)
            }));
        }
    }
    out
}

/// Integrates independent initial conditions, in parallel when `exec`
/// allows; results keep the input order.
pub fn integrate_batch(
    initial: &[SkewMatrix],
    spec: &MassSpec,
    cfg: &Integration,
    exec: crate::exec::Execution,
) -> Result<Vec<Trajectory>> {
    crate::exec::map_indexed(exec, initial.len(), |i| integrate(&initial[i], spec, cfg, None))
        .into_iter()
        .collect()
}

/// Worst `t`-component of `g⁻¹ ġ` along a reconstructed trajectory,
/// estimated from consecutive samples via the matrix logarithm of
/// `g_kᵀ g_{k+1}` at first order.
pub fn horizontality_defect(traj: &Trajectory, dt: f64) -> Option<f64> {
    let gs = traj.group.as_ref()?;
    let mut worst = 0.0_f64;
    for pair in gs.windows(2) {
        let rel = pair[0].transpose() * &pair[1];
        let body = SkewMatrix::project(&((rel - DMatrix::identity(pair[0].nrows(), pair[0].nrows())) / dt));
        worst = worst.max(split(&body).t_part.max_abs());
    }
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{basis_element, pairing, random_skew};
    use crate::metrics::{hamiltonian_sr, omega_sr};

    fn sr(inertias: &[f64]) -> MassSpec {
        MassSpec::sub_riemannian(inertias.to_vec()).unwrap()
    }

    #[test]
    fn vf_sr_worked_example() {
        let m = SkewMatrix::from_upper(3, &[1.0, 1.0, 1.0]).unwrap();
        let v = vf_sr(&m, &sr(&[1.0, 2.0])).unwrap();
        assert_eq!(v.upper(), vec![0.5, -1.0, 0.5]);
    }

    #[test]
    fn axis_and_t_equilibria() {
        let spec = sr(&[1.0, 2.0]);
        let axis = SkewMatrix::from_upper(3, &[0.7, 0.0, 0.0]).unwrap();
        assert!(vf_sr(&axis, &spec).unwrap().is_zero());
        let t_only = basis_element(3, 2, 3).unwrap();
        assert!(vf_sr(&t_only, &spec).unwrap().is_zero());

        // M_13 = 0 but M_23 != 0: only the Ṁ_13 slot moves
        let m = SkewMatrix::from_upper(3, &[0.7, 0.0, 0.3]).unwrap();
        let v = vf_sr(&m, &spec).unwrap();
        assert_eq!(v.coord(1, 2), 0.0);
        assert_eq!(v.coord(2, 3), 0.0);
        assert!(v.coord(1, 3) != 0.0);
    }

    #[test]
    fn coordinate_formulas_match_commutator() {
        let spec = sr(&[0.6, 1.1, 1.9, 2.5, 4.0]);
        for seed in 0..50 {
            let m = random_skew(6, seed, 1.0).unwrap();
            let a = vf_sr(&m, &spec).unwrap();
            let b = vf_sr_coordinates(&m, &spec).unwrap();
            assert!((&a - &b).max_abs() < 1e-14);
        }
    }

    #[test]
    fn p_and_t_exchange() {
        let spec = sr(&[1.0, 2.0, 3.0, 4.0]);
        let m = random_skew(5, 3, 1.0).unwrap();
        let mp = split(&m).p_part;
        let v = vf_sr(&mp, &spec).unwrap();
        assert_eq!(split(&v).p_part.max_abs(), 0.0);
    }

    #[test]
    fn vector_fields_conserve_invariants_pointwise() {
        for n in 3..=7 {
            let inertias: Vec<f64> = (1..n).map(|i| i as f64 * 0.7).collect();
            let spec = sr(&inertias);
            for seed in 0..20 {
                let m = random_skew(n, seed, 1.0).unwrap();
                let v = vf_sr(&m, &spec).unwrap();
                let dh = pairing(&omega_sr(&m, &spec).unwrap(), &v).unwrap();
                assert!(dh.abs() < 1e-12);
                for k in 1..=n / 2 {
                    let p = crate::algebra::matrix_power(m.as_matrix(), 2 * k as u32 - 1);
                    assert!((p * v.as_matrix()).trace().abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn riemannian_field_examples() {
        let iso = MassSpec::riemannian(vec![1.3; 4]).unwrap();
        let m = random_skew(4, 1, 1.0).unwrap();
        assert!(vf_riemannian(&m, &iso).unwrap().max_abs() < 1e-16);

        let j = MassSpec::riemannian(vec![1.0, 2.0, 3.0]).unwrap();
        let m = SkewMatrix::from_upper(3, &[1.0, 1.0, 0.0]).unwrap();
        let v = vf_riemannian(&m, &j).unwrap();
        // Ω = (1/3, 1/4, 0); [M, Ω] by hand
        let expected = SkewMatrix::from_upper(3, &[0.0, 0.0, 1.0 / 3.0 - 0.25]).unwrap();
        assert!((&v - &expected).max_abs() < 1e-16);
        assert!(vf_riemannian(&SkewMatrix::zeros(3).unwrap(), &j).unwrap().is_zero());
    }

    #[test]
    fn lax_residual_vanishes() {
        let spec = sr(&[0.5, 1.5, 2.0]);
        let m = random_skew(4, 2, 1.0).unwrap();
        assert_eq!(lax_residual(&m, &spec, 0.0).unwrap().residual, 0.0);
        for lambda in [-3.0, 0.5, 7.0] {
            let r = lax_residual(&m, &spec, lambda).unwrap();
            assert!(r.residual <= 1e-12 * (1.0 + m.max_abs()) * (1.0 + lambda.abs()));
        }
        let rspec = MassSpec::riemannian(vec![0.3, 1.0, 2.2, 2.9]).unwrap();
        let r = lax_residual(&m, &rspec, 2.5).unwrap();
        assert!(r.residual <= 1e-12 * r.magnitude);
    }

    #[test]
    fn axis_equilibrium_is_constant() {
        let spec = sr(&[1.0, 2.0]);
        let axis = SkewMatrix::from_upper(3, &[0.7, 0.0, 0.0]).unwrap();
        for scheme in [Scheme::Rk4, Scheme::Midpoint] {
            let traj = integrate(&axis, &spec, &Integration::new(0.01, 100, scheme), None).unwrap();
            assert!(traj.momenta.iter().all(|m| *m == axis));
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let spec = sr(&[1.0, 2.0]);
        let m0 = SkewMatrix::from_upper(3, &[0.9, -0.4, 0.6]).unwrap();
        let h0 = hamiltonian_sr(&m0, &spec).unwrap();
        let drift = |dt: f64| {
            let steps = (2.0 / dt).round() as usize;
            let traj = integrate(&m0, &spec, &Integration::new(dt, steps, Scheme::Rk4), None).unwrap();
            traj.momenta
                .iter()
                .map(|m| (hamiltonian_sr(m, &spec).unwrap() - h0).abs())
                .fold(0.0, f64::max)
        };
        let coarse = drift(0.1);
        let fine = drift(0.05);
        let ratio = coarse / fine;
        assert!((10.0..24.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn invalid_integration_settings() {
        let spec = sr(&[1.0, 2.0]);
        let m0 = random_skew(3, 0, 1.0).unwrap();
        assert!(integrate(&m0, &spec, &Integration::new(0.0, 10, Scheme::Rk4), None).is_err());
        assert!(integrate(&m0, &spec, &Integration::new(0.1, 0, Scheme::Rk4), None).is_err());
        let bad = DMatrix::from_diagonal_element(3, 3, 2.0);
        assert!(integrate(&m0, &spec, &Integration::new(0.1, 1, Scheme::Rk4), Some(&bad)).is_err());
        let reflection = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, 1.0]));
        assert!(integrate(&m0, &spec, &Integration::new(0.1, 1, Scheme::Rk4), Some(&reflection)).is_err());
    }

    #[test]
    fn midpoint_reports_step_failure() {
        let m0 = random_skew(3, 0, 1.0).unwrap();
        // a stiff linear field whose fixed-point map is expanding
        let cfg = Integration::new(1.0, 3, Scheme::Midpoint);
        let err = integrate_field(&m0, &cfg, |m| m.scale(10.0)).unwrap_err();
        assert!(matches!(err, Error::StepFailure { step: 0, .. }));
    }

    #[test]
    fn reconstruction_stays_orthogonal_and_horizontal() {
        let spec = sr(&[1.0, 1.7, 2.4]);
        let m0 = random_skew(4, 5, 1.0).unwrap();
        let cfg = Integration::new(1e-3, 2000, Scheme::Rk4).with_reconstruction();
        let traj = integrate(&m0, &spec, &cfg, None).unwrap();
        assert!(traj.orthogonality_defect().unwrap() <= ORTHO_TOL);
        // first-order difference quotient: t-leakage is O(dt)
        assert!(horizontality_defect(&traj, 1e-3).unwrap() < 5e-3);
    }

    #[test]
    fn monitor_reports() {
        let spec = sr(&[1.0, 2.0]);
        let axis = SkewMatrix::from_upper(3, &[0.7, 0.0, 0.0]).unwrap();
        let traj = integrate(&axis, &spec, &Integration::new(0.01, 10, Scheme::Rk4), None).unwrap();
        let invs = [Invariant::new("H", |m| hamiltonian_sr(m, &spec).unwrap())];
        let rep = monitor(&traj, &invs).unwrap();
        assert_eq!(rep.worst(), 0.0);

        let empty = Trajectory {
            times: vec![],
            momenta: vec![],
            group: None,
            invariant_log: vec![],
        };
        assert!(monitor(&empty, &invs).is_err());
    }
}
