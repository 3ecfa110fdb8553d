//! The SO(3) rolling ball: closed-form momenta in Jacobi elliptic
//! functions, the contact path on the table, and the implicit curve
//! families traced by that path.
//!
//! Momenta are ordered `x = (M_23, M_12, M_13)` and the Hamiltonian is
//! `H = ½ (M_12²/I_2 + M_13²/I_3)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::algebra::fmt_f64;
use crate::elliptic::{complete_k, jacobi_sn_cn_dn, SEPARATRIX_TOL};
use crate::error::{invalid, Error, Result};

/// Sign of `M_23` in the closed form. With `+1` the closed form would run
/// the Lie–Poisson flow backwards in time.
pub const SIGMA: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Oscillatory,
    Separatrix,
    Rotational,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticModulus {
    pub k: f64,
    pub regime: Regime,
}

impl EllipticModulus {
    pub fn new(k: f64) -> Result<Self> {
        if !(k >= 0.0) || !k.is_finite() {
            return invalid(format!("modulus must be finite and non-negative, got {k}"));
        }
        let regime = if (k - 1.0).abs() <= SEPARATRIX_TOL {
            Regime::Separatrix
        } else if k < 1.0 {
            Regime::Oscillatory
        } else {
            Regime::Rotational
        };
        Ok(EllipticModulus { k, regime })
    }
}

/// Inertias `0 < I_2 < I_3` and Casimir level `C = |M|² > I_2`, with the
/// energy normalized to `H = ½`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RollingParams {
    i2: f64,
    i3: f64,
    casimir: f64,
    u_scale: f64,
    modulus: EllipticModulus,
}

impl RollingParams {
    pub fn new(i2: f64, i3: f64, casimir: f64) -> Result<Self> {
        if !(i2 > 0.0) || !i3.is_finite() || !(i2 < i3) {
            return Err(Error::HypothesisViolated(format!(
                "rolling needs 0 < I2 < I3, got I2 = {i2}, I3 = {i3}"
            )));
        }
        if !(casimir > i2) || !casimir.is_finite() {
            return invalid(format!("Casimir level must exceed I2 = {i2}, got {casimir}"));
        }
        let k = ((i3 - i2) / (casimir - i2)).sqrt();
        Ok(RollingParams {
            i2,
            i3,
            casimir,
            u_scale: ((casimir - i2) / (i2 * i3)).sqrt(),
            modulus: EllipticModulus::new(k)?,
        })
    }

    pub fn i2(&self) -> f64 {
        self.i2
    }

    pub fn i3(&self) -> f64 {
        self.i3
    }

    pub fn casimir(&self) -> f64 {
        self.casimir
    }

    /// `u = t · u_scale`.
    pub fn u_scale(&self) -> f64 {
        self.u_scale
    }

    pub fn modulus(&self) -> EllipticModulus {
        self.modulus
    }

    pub fn k(&self) -> f64 {
        self.modulus.k
    }

    pub fn regime(&self) -> Regime {
        self.modulus.regime
    }

    /// Time period of the momenta; `None` on the separatrix.
    pub fn period(&self) -> Option<f64> {
        let k = self.k();
        match self.regime() {
            Regime::Oscillatory => Some(4.0 * complete_k(k) / self.u_scale),
            Regime::Rotational => Some(4.0 * complete_k(1.0 / k) / (k * self.u_scale)),
            Regime::Separatrix => None,
        }
    }

    /// `b = √((I_3 - I_2)/I_3)`.
    fn b(&self) -> f64 {
        ((self.i3 - self.i2) / self.i3).sqrt()
    }

    /// `c = √((I_3 - I_2)/I_2)`.
    fn c(&self) -> f64 {
        ((self.i3 - self.i2) / self.i2).sqrt()
    }
}

/// `(M_23, M_12, M_13)` at time `t`:
/// `(σ √(C - I_2) dn u, √I_2 cn u, √I_3 sn u)` with `u = t · u_scale`.
pub fn closed_form_m(t: f64, p: &RollingParams) -> [f64; 3] {
    let (sn, cn, dn) = jacobi_sn_cn_dn(t * p.u_scale, p.k());
    [
        SIGMA * (p.casimir - p.i2).sqrt() * dn,
        p.i2.sqrt() * cn,
        p.i3.sqrt() * sn,
    ]
}

/// `Ṁ = ∇H × M` in the `(M_23, M_12, M_13)` ordering.
pub fn lie_poisson_vf3(x: [f64; 3], i2: f64, i3: f64) -> [f64; 3] {
    let grad = [0.0, x[1] / i2, x[2] / i3];
    cross(grad, x)
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn energy(x: [f64; 3], p: &RollingParams) -> f64 {
    0.5 * (x[1] * x[1] / p.i2 + x[2] * x[2] / p.i3)
}

pub fn casimir_value(x: [f64; 3]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// One sample of the contact path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t: f64,
    pub y: f64,
    pub z: f64,
    pub m: [f64; 3],
}

fn path_velocity(t: f64, p: &RollingParams) -> (f64, f64) {
    let x = closed_form_m(t, p);
    (x[1] / p.i2, -x[2] / p.i3)
}

/// Integrates `ẏ = M_12/I_2`, `ż = -M_13/I_3` from the origin by Simpson's
/// rule on each step of the closed-form integrand. The last step is
/// shortened to land on `t_max`.
pub fn contact_path(p: &RollingParams, t_max: f64, dt: f64) -> Result<Vec<PathPoint>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return invalid(format!("dt must be positive, got {dt}"));
    }
    if !(t_max >= 0.0) || !t_max.is_finite() {
        return invalid(format!("t_max must be non-negative, got {t_max}"));
    }
    let steps = (t_max / dt - 1e-9).ceil().max(0.0) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut y, mut z) = (0.0, 0.0);
    out.push(PathPoint {
        t: 0.0,
        y,
        z,
        m: closed_form_m(0.0, p),
    });
    let mut v0 = path_velocity(0.0, p);
    for i in 0..steps {
        let t0 = i as f64 * dt;
        let t1 = if i + 1 == steps { t_max } else { (i + 1) as f64 * dt };
        let h = t1 - t0;
        let vm = path_velocity(t0 + 0.5 * h, p);
        let v1 = path_velocity(t1, p);
        y += h / 6.0 * (v0.0 + 4.0 * vm.0 + v1.0);
        z += h / 6.0 * (v0.1 + 4.0 * vm.1 + v1.1);
        out.push(PathPoint {
            t: t1,
            y,
            z,
            m: closed_form_m(t1, p),
        });
        v0 = v1;
    }
    Ok(out)
}

/// `α` with the curve through the origin: `arccosh(1/√(1-k²))` for `k < 1`,
/// `arcsinh(1/√(k²-1))` for `k > 1`.
pub fn alpha_offset(p: &RollingParams) -> Result<f64> {
    let k = p.k();
    match p.regime() {
        Regime::Oscillatory => Ok((1.0 / (1.0 - k * k).sqrt()).acosh()),
        Regime::Rotational => Ok((1.0 / (k * k - 1.0).sqrt()).asinh()),
        Regime::Separatrix => Err(Error::NotApplicable("the separatrix curve has no offset α".into())),
    }
}

/// Left minus right side of the curve family in table coordinates `(Y, Z)`:
///
/// * `k < 1`: `cos(bZ) - √(1-k²) cosh(α - cY)`
/// * `k = 1`: `cos(bZ) - exp(-cY)`
/// * `k > 1`: `cos(bZ) - √(k²-1) sinh(α - cY)`
///
/// with `b = √((I_3-I_2)/I_3)` and `c = √((I_3-I_2)/I_2)`.
pub fn curve_family_residual(big_y: f64, big_z: f64, p: &RollingParams) -> f64 {
    let k = p.k();
    let lhs = (p.b() * big_z).cos();
    let arg = p.c() * big_y;
    let rhs = match p.regime() {
        Regime::Oscillatory => (1.0 - k * k).sqrt() * (alpha_offset(p).expect("regime checked") - arg).cosh(),
        Regime::Separatrix => (-arg).exp(),
        Regime::Rotational => (k * k - 1.0).sqrt() * (alpha_offset(p).expect("regime checked") - arg).sinh(),
    };
    lhs - rhs
}

/// Curve residual at a contact-path point `(y, z)`.
///
/// The curve family is stated in table axes turned a quarter turn from the
/// path axes, `(Y, Z) = (-z, y)`; without the turn the path does not satisfy
/// it.
pub fn curve_residual(y: f64, z: f64, p: &RollingParams) -> f64 {
    curve_family_residual(-z, y, p)
}

/// Writes `t,y,z,M23,M12,M13,H,C` rows.
pub fn write_path_csv<W: Write>(path: &[PathPoint], p: &RollingParams, mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,y,z,M23,M12,M13,H,C")?;
    for pt in path {
        let fields = [
            pt.t,
            pt.y,
            pt.z,
            pt.m[0],
            pt.m[1],
            pt.m[2],
            energy(pt.m, p),
            casimir_value(pt.m),
        ];
        let line: Vec<String> = fields.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Writes the `(y, z)` paths as SVG polylines in an 800×600 view box, one
/// polyline per labelled path, all scaled by a common factor.
pub fn write_svg<W: Write>(paths: &[(&str, &[PathPoint])], mut w: W) -> std::io::Result<()> {
    const WIDTH: f64 = 800.0;
    const HEIGHT: f64 = 600.0;
    const MARGIN: f64 = 20.0;
    let points = paths.iter().flat_map(|(_, pts)| pts.iter());
    let (mut ymin, mut ymax, mut zmin, mut zmax) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for pt in points {
        ymin = ymin.min(pt.y);
        ymax = ymax.max(pt.y);
        zmin = zmin.min(pt.z);
        zmax = zmax.max(pt.z);
    }
    let span_y = (ymax - ymin).max(1e-12);
    let span_z = (zmax - zmin).max(1e-12);
    let scale = ((WIDTH - 2.0 * MARGIN) / span_y).min((HEIGHT - 2.0 * MARGIN) / span_z);
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">"#
    )?;
    for (label, pts) in paths {
        let coords: Vec<String> = pts
            .iter()
            .map(|pt| {
                let px = MARGIN + (pt.y - ymin) * scale;
                let py = HEIGHT - MARGIN - (pt.z - zmin) * scale;
                format!("{px:.3},{py:.3}")
            })
            .collect();
        writeln!(
            w,
            r#"<polyline id="{label}" fill="none" stroke="black" points="{}"/>"#,
            coords.join(" ")
        )?;
    }
    writeln!(w, "</svg>")
}
