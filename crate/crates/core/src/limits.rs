//! The Riemannian-to-sub-Riemannian limit along the mass family
//! `J^s = Diag(-s, I_2 + s, ..., I_n + s)`.
//!
//! Since `(J^s)² = s² Id + 2s J_sR + J_sR²`, the Riemannian Manakov integrals
//! `f^s_{k,r}` of `J^s` are polynomials in `s`. Shifting out the `s² Id`
//! part and rescaling `λ = ν/(2s)` gives
//! `(1/k) Tr (M + ν J_sR + ν J_sR²/(2s))^k`, whose `ν^{k-r}` coefficient is
//! `h_{k,r} + O(1/s)`. For `(k, r) = (3, 2)` this is
//! `(f^s_{3,2} - s² Tr M²) / (2s)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::algebra::{fmt_f64, SkewMatrix};
use crate::error::{invalid, Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::flows::{vf_riemannian, vf_sr};
use crate::manakov::{extract_coefficients, riemannian_f};
use crate::metrics::MassSpec;

/// The family member `J^s` over the inertias `I_2..I_n`.
pub fn mass_family(inertias: &[f64], s: f64) -> Result<MassSpec> {
    MassSpec::family(inertias.to_vec(), s)
}

fn require_positive_s(s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return invalid(format!("s must be positive, got {s}"));
    }
    Ok(())
}

/// `f^s_{3,2}(M) = Tr((J^s)² M²)`.
pub fn f32_family(m: &SkewMatrix, inertias: &[f64], s: f64) -> Result<f64> {
    let spec = mass_family(inertias, s)?;
    spec.require_dim(m)?;
    let m2 = m.as_matrix() * m.as_matrix();
    Ok(spec.diag().iter().enumerate().map(|(i, j)| j * j * m2[(i, i)]).sum())
}

/// `(f^s_{3,2}(M) - s² Tr M²) / (2s)`, which equals
/// `Tr(J_sR M²) + Tr(J_sR² M²)/(2s)`.
///
/// The difference is formed term by term as
/// `((J^s_i)² - s²) (M²)_ii = (J^s_i - s)(J^s_i + s) (M²)_ii`, which avoids
/// cancelling two `O(s²)` quantities.
pub fn scaled_f32(m: &SkewMatrix, inertias: &[f64], s: f64) -> Result<f64> {
    require_positive_s(s)?;
    let spec = mass_family(inertias, s)?;
    spec.require_dim(m)?;
    let m2 = m.as_matrix() * m.as_matrix();
    let shifted: f64 = spec
        .diag()
        .iter()
        .enumerate()
        .map(|(i, j)| (j - s) * (j + s) * m2[(i, i)])
        .sum();
    Ok(shifted / (2.0 * s))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// The shift-corrected limit integral
/// `Σ_{q=r}^{k} (q/k) C(k,q) (-s/2)^{k-q} (2s)^{-(q-r)} f^s_{q,r}(M)`,
/// built only from Riemannian Manakov integrals of `J^s`.
///
/// The alternating sum cancels terms of size `s^{k-r}`, so round-off grows
/// like `s^{k-r}·ε`. For `(3, 2)` the better-conditioned [`scaled_f32`] is
/// used.
pub fn limit_integral(m: &SkewMatrix, inertias: &[f64], s: f64, k: usize, r: usize) -> Result<f64> {
    require_positive_s(s)?;
    check_pair(k, r)?;
    if (k, r) == (3, 2) {
        return scaled_f32(m, inertias, s);
    }
    let spec = mass_family(inertias, s)?;
    spec.require_dim(m)?;
    let mut total = 0.0;
    for q in r..=k {
        let f = riemannian_f(m, &spec, q)?[&(q, r)];
        let weight = q as f64 / k as f64
            * binomial(k, q)
            * (-s / 2.0).powi((k - q) as i32)
            * (2.0 * s).powi(-((q - r) as i32));
        total += weight * f;
    }
    Ok(total)
}

fn check_pair(k: usize, r: usize) -> Result<()> {
    if k < 2 || r < 1 || r > k {
        return invalid(format!("limit needs 1 <= r <= k with k >= 2, got ({k}, {r})"));
    }
    Ok(())
}

/// Convergence record of one `(k, r)` limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSweep {
    pub k: usize,
    pub r: usize,
    pub s_values: Vec<f64>,
    pub values: Vec<f64>,
    /// `h_{k,r}(M)` for the limiting sR inertias.
    pub target: f64,
    /// Slope of `log |error|` against `log s` over the last half of the
    /// sweep; absent when fewer than two of those errors are nonzero.
    pub observed_rate: Option<f64>,
}

impl LimitSweep {
    pub fn abs_errors(&self) -> Vec<f64> {
        self.values.iter().map(|v| (v - self.target).abs()).collect()
    }

    /// Writes `s,scaled_value,target,abs_error` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "s,scaled_value,target,abs_error")?;
        for ((s, v), e) in self.s_values.iter().zip(&self.values).zip(self.abs_errors()) {
            writeln!(w, "{},{},{},{}", fmt_f64(*s), fmt_f64(*v), fmt_f64(self.target), fmt_f64(e))?;
        }
        Ok(())
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Evaluates the limit integral at each `s` and fits the convergence rate.
///
/// Needs at least `k + 1` strictly increasing values `s >= 1` spanning at
/// least one decade; otherwise the sweep cannot separate the `O(1)` term
/// from the `s`-dependent part and a conditioning error is returned.
pub fn limit_sweep(
    m: &SkewMatrix,
    inertias: &[f64],
    k: usize,
    r: usize,
    s_values: &[f64],
    exec: Execution,
) -> Result<LimitSweep> {
    check_pair(k, r)?;
    if s_values.len() < k + 1 {
        return Err(Error::Conditioning(format!(
            "a degree-{k} sweep needs at least {} values of s, got {}",
            k + 1,
            s_values.len()
        )));
    }
    if s_values.iter().any(|s| !(*s >= 1.0) || !s.is_finite()) {
        return Err(Error::Conditioning("every s must be finite and at least 1".into()));
    }
    if s_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Conditioning("s values must be strictly increasing".into()));
    }
    if s_values[s_values.len() - 1] < 10.0 * s_values[0] {
        return Err(Error::Conditioning("s values must span at least one decade".into()));
    }
    let sr = MassSpec::sub_riemannian(inertias.to_vec())?;
    sr.require_dim(m)?;
    let target = extract_coefficients(m, &sr, k)?[&(k, r)];
    let values = map_indexed(exec, s_values.len(), |i| limit_integral(m, inertias, s_values[i], k, r))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let tail = s_values.len() / 2;
    let (xs, ys): (Vec<f64>, Vec<f64>) = s_values[tail..]
        .iter()
        .zip(&values[tail..])
        .filter(|(_, v)| (*v - target).abs() > 0.0)
        .map(|(s, v)| (s.ln(), (v - target).abs().ln()))
        .unzip();
    Ok(LimitSweep {
        k,
        r,
        s_values: s_values.to_vec(),
        values,
        target,
        observed_rate: fit_slope(&xs, &ys),
    })
}

/// `count` geometrically spaced values from `start` to `stop` inclusive.
pub fn geometric_s_values(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(start > 0.0) || !(stop > start) {
        return invalid("need count >= 2 and 0 < start < stop");
    }
    let ratio = (stop / start).ln() / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i + 1 == count { stop } else { start * (ratio * i as f64).exp() })
        .collect())
}

/// `‖vf_riemannian(M, J^s) - vf_sr(M, J_sR)‖_max`.
pub fn vf_limit_gap(m: &SkewMatrix, inertias: &[f64], s: f64) -> Result<f64> {
    let family = mass_family(inertias, s)?;
    let sr = MassSpec::sub_riemannian(inertias.to_vec())?;
    Ok((&vf_riemannian(m, &family)? - &vf_sr(m, &sr)?).max_abs())
}
