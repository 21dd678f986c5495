//! Berry connections, curvatures, loop integrals, fluxes, and charge maps.
//!
//! Three connection forms are implemented for each band:
//!
//! - `LR`: i ⟨ψ^L|∇ψ^R⟩ / ⟨ψ^L|ψ^R⟩ — left/right (bi-orthogonal) form.
//! - `TildeRR`: the two-band combination built from right eigenstates only,
//!   i (⟨∓|∓⟩⟨±|∇±⟩ − ⟨±|∓⟩⟨∓|∇±⟩) / (⟨±|±⟩⟨∓|∓⟩ − ⟨±|∓⟩⟨∓|±⟩).
//! - `RR`: i ⟨ψ^R|∇ψ^R⟩ / ⟨ψ^R|ψ^R⟩ — the Hermitian-style form.
//!
//! `LR` and `TildeRR` agree pointwise for this model; `RR` differs once the
//! eigenstates lose orthogonality. All eigenvector gradients are central
//! differences of the fixed gauge of [`crate::model::eigen_system`]; the
//! gauge is never renormalized, so field maps are bit-reproducible.
//!
//! Loop integrals report the measurable representative of the geometric
//! phase: the real part is reduced modulo 2π into (-π, π] (the raw line
//! integral in the fixed gauge additionally counts the 2π winding of the
//! gauge around its nodal line; [`loop_phase_raw`] exposes it, and
//! differences of raw integrals are branch-free). Charges are normalized as
//! flux / 4π so the Hermitian point monopole of the + band reads -1/2.

use crate::cplx::{wrap_to_pi, Vec2C, C64};
use crate::error::{Error, Result};
use crate::model::{eigen_system_checked, Band, ModelConfig, ParamPoint};
use crate::quadrature::{gauss_legendre, map_interval, KahanC};
use crate::report;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

/// Eigenvector norms below this are treated as nodal-line contact.
pub const STRING_NORM_TOL: f64 = 1e-6;

/// Default central-difference step for eigenvector gradients.
pub fn default_connection_step(p: ParamPoint) -> f64 {
    1e-5 * p.norm().max(1.0)
}

/// Default outer step for the finite-difference curl.
pub fn default_curl_step(p: ParamPoint) -> f64 {
    4e-3 * p.norm().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ConnectionKind {
    /// Left/right bi-orthogonal form.
    LR,
    /// Right-only two-band combination (equals LR for this model).
    TildeRR,
    /// Plain right-right form.
    RR,
}

impl std::fmt::Display for ConnectionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConnectionKind::LR => write!(f, "LR"),
            ConnectionKind::TildeRR => write!(f, "TildeRR"),
            ConnectionKind::RR => write!(f, "RR"),
        }
    }
}

/// Connection sample at a point: complex components along (X, Y, Z).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConnectionSample {
    pub kind: ConnectionKind,
    pub band: Band,
    pub point: ParamPoint,
    pub a: [C64; 3],
}

/// Curvature sample at a point: complex components along (X, Y, Z).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CurvatureSample {
    pub kind: ConnectionKind,
    pub band: Band,
    pub point: ParamPoint,
    pub b: [C64; 3],
}

fn string_guard(p: ParamPoint, v: &Vec2C) -> Result<()> {
    let n = v.norm();
    if n < STRING_NORM_TOL {
        Err(Error::StringProximity {
            x: p.x,
            y: p.y,
            z: p.z,
            norm: n,
        })
    } else {
        Ok(())
    }
}

/// Central-difference gradient of the fixed-gauge right eigenvector.
fn grad_right(band: Band, p: ParamPoint, cfg: &ModelConfig, h: f64) -> Result<[Vec2C; 3]> {
    let mut out = [Vec2C::zero(); 3];
    for (axis, slot) in out.iter_mut().enumerate() {
        let vp = eigen_system_checked(p.shifted(axis, h), cfg)?.right(band);
        let vm = eigen_system_checked(p.shifted(axis, -h), cfg)?.right(band);
        *slot = vp.sub(&vm).scale(C64::new(0.5 / h, 0.0));
    }
    Ok(out)
}

fn connection_from_grads(
    kind: ConnectionKind,
    band: Band,
    p: ParamPoint,
    cfg: &ModelConfig,
    grads: &[Vec2C; 3],
) -> Result<[C64; 3]> {
    let es = eigen_system_checked(p, cfg)?;
    let v = es.right(band);
    string_guard(p, &v)?;
    let mut a = [C64::ZERO; 3];
    match kind {
        ConnectionKind::RR => {
            let nn = v.norm_sq();
            for (j, g) in grads.iter().enumerate() {
                a[j] = C64::i() * v.dot(g) / nn;
            }
        }
        ConnectionKind::LR => {
            let l = es.left(band);
            let den = l.dot(&v);
            if den.norm_sqr() < 1e-24 * l.norm_sq() * v.norm_sq() {
                return Err(Error::SampleOnSingularity {
                    x: p.x,
                    y: p.y,
                    z: p.z,
                });
            }
            for (j, g) in grads.iter().enumerate() {
                a[j] = C64::i() * l.dot(g) / den;
            }
        }
        ConnectionKind::TildeRR => {
            let other = match band {
                Band::Plus => Band::Minus,
                Band::Minus => Band::Plus,
            };
            let w = es.right(other);
            string_guard(p, &w)?;
            let npp = v.norm_sq();
            let nmm = w.norm_sq();
            let pm = v.dot(&w);
            let den = npp * nmm - pm.norm_sqr();
            if den < 1e-24 * npp * nmm {
                return Err(Error::SampleOnSingularity {
                    x: p.x,
                    y: p.y,
                    z: p.z,
                });
            }
            for (j, g) in grads.iter().enumerate() {
                let num = v.dot(g) * nmm - w.dot(g) * pm;
                a[j] = C64::i() * num / den;
            }
        }
    }
    Ok(a)
}

/// Berry connection of the given form at a point.
///
/// `h` is the central-difference step for the eigenvector gradients.
pub fn connection(
    kind: ConnectionKind,
    band: Band,
    p: ParamPoint,
    cfg: &ModelConfig,
    h: f64,
) -> Result<ConnectionSample> {
    let grads = grad_right(band, p, cfg, h)?;
    let a = connection_from_grads(kind, band, p, cfg, &grads)?;
    Ok(ConnectionSample { kind, band, point: p, a })
}

/// Connection with Richardson extrapolation over steps (h, h/2).
pub fn connection_refined(
    kind: ConnectionKind,
    band: Band,
    p: ParamPoint,
    cfg: &ModelConfig,
    h: f64,
) -> Result<ConnectionSample> {
    let g1 = grad_right(band, p, cfg, h)?;
    let g2 = grad_right(band, p, cfg, 0.5 * h)?;
    let mut grads = [Vec2C::zero(); 3];
    for j in 0..3 {
        grads[j] = g2[j]
            .scale(C64::new(4.0 / 3.0, 0.0))
            .sub(&g1[j].scale(C64::new(1.0 / 3.0, 0.0)));
    }
    let a = connection_from_grads(kind, band, p, cfg, &grads)?;
    Ok(ConnectionSample { kind, band, point: p, a })
}

/// Berry curvature by finite differences: B = curl A.
///
/// `h` is the base outer curl step; the curl uses Richardson extrapolation
/// over (h, h/2), and the inner connections use Richardson-refined gradients
/// at a coarser step than the default to keep roundoff below truncation.
/// Near the degeneracy ring the fields vary on the scale of the squared gap
/// |E|² = a² + b², so both steps shrink with it.
pub fn curvature_fd(
    kind: ConnectionKind,
    band: Band,
    p: ParamPoint,
    cfg: &ModelConfig,
    h: f64,
) -> Result<CurvatureSample> {
    let es = eigen_system_checked(p, cfg)?;
    // |E|² / |∇E²| estimates the distance to the degeneracy set.
    let gap_sq = es.a * es.a + es.b * es.b;
    let grad = 2.0 * (p.norm() * p.norm() + cfg.z0 * cfg.z0).sqrt();
    let feature = (gap_sq / grad.max(1.0)).min(1.0);
    let h = h * feature;
    let inner_h = 1e-4 * p.norm().max(1.0) * feature;
    // d[j][c]: ∂ A_c / ∂ x_j, Richardson-combined.
    let mut d = [[C64::ZERO; 3]; 3];
    for j in 0..3 {
        let diff = |step: f64| -> Result<[C64; 3]> {
            let ap = connection_refined(kind, band, p.shifted(j, step), cfg, inner_h)?;
            let am = connection_refined(kind, band, p.shifted(j, -step), cfg, inner_h)?;
            let mut out = [C64::ZERO; 3];
            for c in 0..3 {
                out[c] = (ap.a[c] - am.a[c]) / (2.0 * step);
            }
            Ok(out)
        };
        let d1 = diff(h)?;
        let d2 = diff(0.5 * h)?;
        for c in 0..3 {
            d[j][c] = (4.0 * d2[c] - d1[c]) / 3.0;
        }
    }
    let b = [
        d[1][2] - d[2][1],
        d[2][0] - d[0][2],
        d[0][1] - d[1][0],
    ];
    Ok(CurvatureSample { kind, band, point: p, b })
}

/// Closed-form Berry curvature of the + band for the RR and TildeRR forms.
///
/// The RR field is real; its Z component is written as -Z / (2 a (a²+b²)),
/// which equals -b / (2 Z0 (a²+b²)) through b = Z Z0 / a and stays finite as
/// Z0 -> 0. The TildeRR field is complex with components assembled from
/// u = a³-3ab², v = 3a²b-b³ (the real and imaginary parts of (a+ib)³).
pub fn curvature_analytic(
    kind: ConnectionKind,
    band: Band,
    p: ParamPoint,
    cfg: &ModelConfig,
) -> Result<CurvatureSample> {
    if band != Band::Plus {
        return Err(Error::UnsupportedBand);
    }
    let es = eigen_system_checked(p, cfg)?;
    let (a, b) = (es.a, es.b);
    let (x, y, z, z0) = (p.x, p.y, p.z, cfg.z0);
    let b3 = match kind {
        ConnectionKind::RR => {
            let rho2 = x * x + y * y;
            let n = rho2 + (a - z) * (a - z) + (b - z0) * (b - z0);
            if n < STRING_NORM_TOL * STRING_NORM_TOL {
                return Err(Error::StringProximity {
                    x,
                    y,
                    z,
                    norm: n.sqrt(),
                });
            }
            let den = (a * a + b * b) * n * n;
            let bx = (2.0 * rho2 * (y * z0 - a * x) + 2.0 * n * (x * z - y * z0)) / den;
            let by = (2.0 * rho2 * (-x * z0 - a * y) + 2.0 * n * (y * z + x * z0)) / den;
            let bz = -z / (2.0 * a * (a * a + b * b));
            [C64::new(bx, 0.0), C64::new(by, 0.0), C64::new(bz, 0.0)]
        }
        ConnectionKind::TildeRR => {
            let u = a * a * a - 3.0 * a * b * b;
            let v = 3.0 * a * a * b - b * b * b;
            let s2 = 2.0 * (u * u + v * v);
            [
                C64::new(-x * u / s2, x * v / s2),
                C64::new(-y * u / s2, y * v / s2),
                C64::new((-z * u - z0 * v) / s2, (z * v - z0 * u) / s2),
            ]
        }
        ConnectionKind::LR => {
            return Err(Error::InvalidConfig(
                "closed-form curvature is available for the RR and TildeRR forms".into(),
            ))
        }
    };
    Ok(CurvatureSample { kind, band, point: p, b: b3 })
}

/// Curvature through the preferred route: closed form when available,
/// finite differences otherwise.
pub fn curvature(
    kind: ConnectionKind,
    band: Band,
    p: ParamPoint,
    cfg: &ModelConfig,
) -> Result<CurvatureSample> {
    if band == Band::Plus && kind != ConnectionKind::LR {
        curvature_analytic(kind, band, p, cfg)
    } else {
        curvature_fd(kind, band, p, cfg, default_curl_step(p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Orientation {
    Ccw,
    Cw,
}

/// Horizontal circular loop {X = r cos θ, Y = r sin θ, Z = z}.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LoopSpec {
    pub z: f64,
    pub r: f64,
    pub n_segments: usize,
    pub orientation: Orientation,
}

impl LoopSpec {
    pub fn new(z: f64, r: f64) -> Self {
        Self {
            z,
            r,
            n_segments: 64,
            orientation: Orientation::Ccw,
        }
    }

    /// The circle must have positive radius and keep a finite clearance
    /// from the degeneracy ring.
    pub fn validate(&self, cfg: &ModelConfig) -> Result<()> {
        if !(self.r > 0.0) {
            return Err(Error::InvalidConfig("loop radius must be positive".into()));
        }
        if self.n_segments < 8 {
            return Err(Error::InvalidConfig(
                "loop needs at least 8 segments".into(),
            ));
        }
        let ring_dist = ((self.r - cfg.z0.abs()).powi(2) + self.z * self.z).sqrt();
        if ring_dist < 1e-4 {
            return Err(Error::InvalidConfig(format!(
                "loop passes within {ring_dist:.1e} of the degeneracy ring"
            )));
        }
        Ok(())
    }

    pub fn point(&self, theta: f64) -> ParamPoint {
        ParamPoint::new(self.r * theta.cos(), self.r * theta.sin(), self.z)
    }
}

/// Raw loop integral ∮ A · dR in the fixed gauge.
///
/// Uniform-θ trapezoid (spectrally accurate for this periodic integrand)
/// with doubling refinement until successive values differ by < 1e-8.
pub fn loop_phase_raw(
    kind: ConnectionKind,
    band: Band,
    spec: &LoopSpec,
    cfg: &ModelConfig,
) -> Result<C64> {
    spec.validate(cfg)?;
    let integrand = |theta: f64| -> Result<C64> {
        let p = spec.point(theta);
        let sample = connection(kind, band, p, cfg, default_connection_step(p))?;
        Ok(sample.a[0] * (-spec.r * theta.sin()) + sample.a[1] * (spec.r * theta.cos()))
    };
    let mut n = spec.n_segments.max(8);
    let mut sum = KahanC::default();
    for k in 0..n {
        sum.add(integrand(TAU * k as f64 / n as f64)?);
    }
    let mut value = sum.value() * (TAU / n as f64);
    loop {
        if n > 1 << 18 {
            return Err(Error::QuadratureNotConverged(format!(
                "loop integral still moving at {n} segments"
            )));
        }
        // Add the midpoints of the current segments.
        for k in 0..n {
            sum.add(integrand(TAU * (k as f64 + 0.5) / n as f64)?);
        }
        n *= 2;
        let refined = sum.value() * (TAU / n as f64);
        let delta = (refined - value).norm();
        value = refined;
        if delta < 1e-8 {
            break;
        }
    }
    if spec.orientation == Orientation::Cw {
        value = -value;
    }
    Ok(value)
}

/// Theoretical complex geometric phase for one traversal of the loop:
/// the loop integral with its real part reduced into (-π, π].
pub fn loop_phase(
    kind: ConnectionKind,
    band: Band,
    spec: &LoopSpec,
    cfg: &ModelConfig,
) -> Result<C64> {
    let raw = loop_phase_raw(kind, band, spec, cfg)?;
    Ok(C64::new(wrap_to_pi(raw.re), raw.im))
}

/// Closed surfaces for flux integrals.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum Surface {
    Sphere {
        center: ParamPoint,
        radius: f64,
    },
    /// Annular-sector pillbox straddling the Z = 0 plane: radii
    /// [r_in, r_out], angles [theta_lo, theta_hi], height 2 × half_height.
    Pillbox {
        r_in: f64,
        r_out: f64,
        theta_lo: f64,
        theta_hi: f64,
        half_height: f64,
    },
}

fn curvature_vec(
    kind: ConnectionKind,
    band: Band,
    p: ParamPoint,
    cfg: &ModelConfig,
) -> Result<[C64; 3]> {
    Ok(curvature(kind, band, p, cfg)?.b)
}

fn sphere_charge(
    kind: ConnectionKind,
    band: Band,
    center: ParamPoint,
    radius: f64,
    cfg: &ModelConfig,
    n_theta: usize,
    n_phi: usize,
) -> Result<C64> {
    let (us, ws) = gauss_legendre(n_theta);
    let mut total = KahanC::default();
    for (&u, &w) in us.iter().zip(&ws) {
        let sin_t = (1.0 - u * u).max(0.0).sqrt();
        let mut ring = KahanC::default();
        for j in 0..n_phi {
            let phi = TAU * j as f64 / n_phi as f64;
            let n_hat = [sin_t * phi.cos(), sin_t * phi.sin(), u];
            let p = ParamPoint::new(
                center.x + radius * n_hat[0],
                center.y + radius * n_hat[1],
                center.z + radius * n_hat[2],
            );
            let b = curvature_vec(kind, band, p, cfg)?;
            ring.add(b[0] * n_hat[0] + b[1] * n_hat[1] + b[2] * n_hat[2]);
        }
        total.add(ring.value() * (w * TAU / n_phi as f64));
    }
    Ok(total.value() * (radius * radius) / (4.0 * PI))
}

fn pillbox_charge(
    kind: ConnectionKind,
    band: Band,
    r_in: f64,
    r_out: f64,
    theta_lo: f64,
    theta_hi: f64,
    half_height: f64,
    cfg: &ModelConfig,
    n_gauss: usize,
) -> Result<C64> {
    let (gn, gw) = gauss_legendre(n_gauss);
    let (rs, rw) = map_interval(&gn, &gw, r_in, r_out);
    let (ts, tw) = map_interval(&gn, &gw, theta_lo, theta_hi);
    let (zs, zw) = map_interval(&gn, &gw, -half_height, half_height);
    let full_circle = (theta_hi - theta_lo - TAU).abs() < 1e-12;

    let mut flux = KahanC::default();
    // Top and bottom faces (outward normals ±ẑ).
    for (&r, &wr) in rs.iter().zip(&rw) {
        for (&t, &wt) in ts.iter().zip(&tw) {
            let (x, y) = (r * t.cos(), r * t.sin());
            let top = curvature_vec(kind, band, ParamPoint::new(x, y, half_height), cfg)?;
            let bot = curvature_vec(kind, band, ParamPoint::new(x, y, -half_height), cfg)?;
            flux.add((top[2] - bot[2]) * (wr * wt * r));
        }
    }
    // Radial walls (outward +r̂ at r_out, -r̂ at r_in).
    for (radius, sign) in [(r_out, 1.0), (r_in, -1.0)] {
        if radius <= 0.0 {
            continue;
        }
        for (&t, &wt) in ts.iter().zip(&tw) {
            let (ct, st) = (t.cos(), t.sin());
            for (&z, &wz) in zs.iter().zip(&zw) {
                let b = curvature_vec(
                    kind,
                    band,
                    ParamPoint::new(radius * ct, radius * st, z),
                    cfg,
                )?;
                let b_r = b[0] * ct + b[1] * st;
                flux.add(b_r * (sign * wt * wz * radius));
            }
        }
    }
    // Azimuthal walls (outward +θ̂ at theta_hi, -θ̂ at theta_lo); absent for
    // a full circle.
    if !full_circle {
        for (theta, sign) in [(theta_hi, 1.0), (theta_lo, -1.0)] {
            let (ct, st) = (theta.cos(), theta.sin());
            for (&r, &wr) in rs.iter().zip(&rw) {
                for (&z, &wz) in zs.iter().zip(&zw) {
                    let b =
                        curvature_vec(kind, band, ParamPoint::new(r * ct, r * st, z), cfg)?;
                    let b_t = -b[0] * st + b[1] * ct;
                    flux.add(b_t * (sign * wr * wz));
                }
            }
        }
    }
    Ok(flux.value() / (4.0 * PI))
}

/// Enclosed monopole charge (flux / 4π) through a closed surface.
///
/// Spheres refine the product quadrature (Gauss–Legendre in cos θ, uniform
/// in φ) by doubling until the charge moves by < 1e-5; pillboxes use a fixed
/// Gauss–Legendre order per face.
pub fn surface_flux(
    kind: ConnectionKind,
    band: Band,
    surface: Surface,
    cfg: &ModelConfig,
    n_theta: usize,
    n_phi: usize,
) -> Result<C64> {
    if n_theta < 16 || n_phi < 16 {
        return Err(Error::InvalidConfig(
            "surface quadrature resolutions must be at least 16".into(),
        ));
    }
    match surface {
        Surface::Sphere { center, radius } => {
            if radius <= 0.0 {
                return Err(Error::InvalidConfig("sphere radius must be positive".into()));
            }
            let (mut nt, mut np) = (n_theta, n_phi);
            let mut value = sphere_charge(kind, band, center, radius, cfg, nt, np)?;
            loop {
                if nt > 1024 {
                    return Err(Error::QuadratureNotConverged(format!(
                        "sphere flux still moving at {nt} x {np} nodes"
                    )));
                }
                nt *= 2;
                np *= 2;
                let refined = sphere_charge(kind, band, center, radius, cfg, nt, np)?;
                let delta = (refined - value).norm();
                value = refined;
                if delta < 1e-5 {
                    break;
                }
            }
            Ok(value)
        }
        Surface::Pillbox {
            r_in,
            r_out,
            theta_lo,
            theta_hi,
            half_height,
        } => {
            if !(r_out > r_in && r_in >= 0.0 && half_height > 0.0) {
                return Err(Error::InvalidConfig("malformed pillbox".into()));
            }
            pillbox_charge(
                kind, band, r_in, r_out, theta_lo, theta_hi, half_height, cfg, n_theta.min(32),
            )
        }
    }
}

/// Polar grid for the disk charge map.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiskGrid {
    pub r_max: f64,
    pub n_r: usize,
    pub n_angle: usize,
    /// Gauss–Legendre order per face dimension.
    pub n_gauss: usize,
}

impl DiskGrid {
    pub fn new(r_max: f64, n_r: usize, n_angle: usize) -> Self {
        Self {
            r_max,
            n_r,
            n_angle,
            n_gauss: 8,
        }
    }
}

/// One pillbox cell of the disk map.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiskCell {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub r_in: f64,
    pub r_out: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub charge: C64,
}

/// Monopole charge distribution over the Z = 0 disk.
#[derive(Clone, Debug, Serialize)]
pub struct ChargeReport {
    /// Sum of all cell charges (identically mu_s + mu_n).
    pub total: C64,
    /// Sum of cells with non-positive real part (S charges).
    pub mu_s: C64,
    /// Sum of cells with positive real part (N charges).
    pub mu_n: C64,
    pub cells: Vec<DiskCell>,
}

impl ChargeReport {
    /// CSV with columns x, y, z, charge_re, charge_im (cell centers).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        report::push_header(&mut out, &["x", "y", "z", "charge_re", "charge_im"]);
        for c in &self.cells {
            report::push_row(&mut out, &[c.x, c.y, c.z, c.charge.re, c.charge.im]);
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "total": report::json_complex(self.total),
            "mu_s": report::json_complex(self.mu_s),
            "mu_n": report::json_complex(self.mu_n),
            "n_cells": self.cells.len(),
        })
    }
}

/// Tile the Z = 0 disk with annular-sector pillbox cells and measure each
/// cell's enclosed charge.
///
/// The innermost radial ring is kept as a single full-circle cell so a point
/// source at the origin lands in exactly one cell. Shared faces are computed
/// once and reused with opposite signs by the two adjacent cells, so the
/// cell sum telescopes to the outer-boundary flux exactly. Any radial cell
/// boundary that would coincide with the degeneracy ring radius is nudged
/// outward so no face touches the ring.
pub fn disk_charge_map(
    kind: ConnectionKind,
    band: Band,
    cfg: &ModelConfig,
    grid: DiskGrid,
    pillbox_height: f64,
) -> Result<ChargeReport> {
    if grid.n_r < 2 || grid.n_angle < 1 {
        return Err(Error::InvalidConfig("disk grid too coarse".into()));
    }
    if !(grid.r_max > cfg.z0.abs()) {
        return Err(Error::InvalidConfig(
            "disk grid must extend past the degeneracy ring".into(),
        ));
    }
    if !(pillbox_height > 0.0) {
        return Err(Error::InvalidConfig("pillbox height must be positive".into()));
    }
    let eps = 0.5 * pillbox_height;
    let n_r = grid.n_r;
    let n_a = grid.n_angle;
    let ring_r = cfg.z0.abs();

    let mut radii: Vec<f64> = (0..=n_r)
        .map(|i| grid.r_max * i as f64 / n_r as f64)
        .collect();
    for r in radii.iter_mut() {
        if (*r - ring_r).abs() < 1e-9 && ring_r > 0.0 {
            *r += 1e-6 * grid.r_max;
        }
    }
    let thetas: Vec<f64> = (0..=n_a).map(|j| TAU * j as f64 / n_a as f64).collect();

    let (gn, gw) = gauss_legendre(grid.n_gauss);
    let (zs, zw) = map_interval(&gn, &gw, -eps, eps);

    // Near the charge support (the ring, or the origin when z0 = 0) the cap
    // integrands peak with radial width equal to the pillbox half-height;
    // geometrically graded panels there keep coarse grids honest.
    let beta = eps;
    let window = 64.0 * eps;
    let paneled = |lo: f64, hi: f64| -> (Vec<f64>, Vec<f64>) {
        let mut cuts = vec![lo, hi];
        if lo < ring_r + window && hi > ring_r - window {
            // Geometrically graded cuts outward from the charge support,
            // starting at one regularization width (quadrature nodes are
            // interior, so a cut exactly at the ring radius is safe).
            if ring_r > lo + 1e-12 && ring_r < hi - 1e-12 {
                cuts.push(ring_r);
            }
            let mut d = beta;
            while d < hi - lo {
                for cut in [ring_r - d, ring_r + d] {
                    if cut > lo + 1e-12 && cut < hi - 1e-12 {
                        cuts.push(cut);
                    }
                }
                d *= 2.0;
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for pair in cuts.windows(2) {
            let (x, w) = map_interval(&gn, &gw, pair[0], pair[1]);
            xs.extend(x);
            ws.extend(w);
        }
        (xs, ws)
    };

    let bfield = |p: ParamPoint| curvature_vec(kind, band, p, cfg);

    // Top + bottom flux per (ring, sector), outward ±ẑ.
    let mut caps = vec![vec![C64::ZERO; n_a]; n_r];
    for i in 0..n_r {
        let (rs, rw) = paneled(radii[i], radii[i + 1]);
        for j in 0..n_a {
            let (ts, tw) = map_interval(&gn, &gw, thetas[j], thetas[j + 1]);
            let mut acc = KahanC::default();
            for (&r, &wr) in rs.iter().zip(&rw) {
                for (&t, &wt) in ts.iter().zip(&tw) {
                    let (x, y) = (r * t.cos(), r * t.sin());
                    let top = bfield(ParamPoint::new(x, y, eps))?;
                    let bot = bfield(ParamPoint::new(x, y, -eps))?;
                    acc.add((top[2] - bot[2]) * (wr * wt * r));
                }
            }
            caps[i][j] = acc.value();
        }
    }

    // Radial wall flux at each boundary radius (outward +r̂), per sector.
    // Walls close to the ring see a matching feature scale in z.
    let mut rad_walls = vec![vec![C64::ZERO; n_a]; n_r + 1];
    for i in 1..=n_r {
        let radius = radii[i];
        let (wall_zs, wall_zw) = if (radius - ring_r).abs() < 3.0 * beta {
            // Near-ring walls see the matching feature scale in z.
            let mut xs = Vec::new();
            let mut ws = Vec::new();
            for p in 0..8 {
                let a = -eps + 2.0 * eps * p as f64 / 8.0;
                let b = -eps + 2.0 * eps * (p + 1) as f64 / 8.0;
                let (x, w) = map_interval(&gn, &gw, a, b);
                xs.extend(x);
                ws.extend(w);
            }
            (xs, ws)
        } else {
            (zs.clone(), zw.clone())
        };
        for j in 0..n_a {
            let (ts, tw) = map_interval(&gn, &gw, thetas[j], thetas[j + 1]);
            let mut acc = KahanC::default();
            for (&t, &wt) in ts.iter().zip(&tw) {
                let (ct, st) = (t.cos(), t.sin());
                for (&z, &wz) in wall_zs.iter().zip(&wall_zw) {
                    let b = bfield(ParamPoint::new(radius * ct, radius * st, z))?;
                    acc.add((b[0] * ct + b[1] * st) * (wt * wz * radius));
                }
            }
            rad_walls[i][j] = acc.value();
        }
    }

    // Azimuthal wall flux (in +θ̂) at each sector boundary, per ring. Rings
    // beyond the first only; the merged inner disk has no interior walls
    // that survive the merge, but per-sector assembly still needs them.
    let mut azi_walls = vec![vec![C64::ZERO; n_a]; n_r];
    for i in 0..n_r {
        let (rs, rw) = paneled(radii[i], radii[i + 1]);
        for j in 0..n_a {
            let theta = thetas[j];
            let (ct, st) = (theta.cos(), theta.sin());
            let mut acc = KahanC::default();
            for (&r, &wr) in rs.iter().zip(&rw) {
                for (&z, &wz) in zs.iter().zip(&zw) {
                    let b = bfield(ParamPoint::new(r * ct, r * st, z))?;
                    acc.add((-b[0] * st + b[1] * ct) * (wr * wz));
                }
            }
            azi_walls[i][j] = acc.value();
        }
    }

    let cell_flux = |i: usize, j: usize| -> C64 {
        caps[i][j] + rad_walls[i + 1][j] - rad_walls[i][j] + azi_walls[i][(j + 1) % n_a]
            - azi_walls[i][j]
    };

    let mut cells = Vec::with_capacity(1 + (n_r - 1) * n_a);
    // Merged innermost disk cell.
    let mut inner = C64::ZERO;
    for j in 0..n_a {
        inner += cell_flux(0, j);
    }
    cells.push(DiskCell {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        r_in: radii[0],
        r_out: radii[1],
        theta_lo: 0.0,
        theta_hi: TAU,
        charge: inner / (4.0 * PI),
    });
    for i in 1..n_r {
        for j in 0..n_a {
            let t_mid = 0.5 * (thetas[j] + thetas[j + 1]);
            let r_mid = 0.5 * (radii[i] + radii[i + 1]);
            cells.push(DiskCell {
                x: r_mid * t_mid.cos(),
                y: r_mid * t_mid.sin(),
                z: 0.0,
                r_in: radii[i],
                r_out: radii[i + 1],
                theta_lo: thetas[j],
                theta_hi: thetas[j + 1],
                charge: cell_flux(i, j) / (4.0 * PI),
            });
        }
    }

    let mut mu_s = C64::ZERO;
    let mut mu_n = C64::ZERO;
    for c in &cells {
        if c.charge.re > 0.0 {
            mu_n += c.charge;
        } else {
            mu_s += c.charge;
        }
    }
    Ok(ChargeReport {
        total: mu_s + mu_n,
        mu_s,
        mu_n,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: f64 = 1e-5;

    fn p(x: f64, y: f64, z: f64) -> ParamPoint {
        ParamPoint::new(x, y, z)
    }

    #[test]
    fn lr_equals_tilde_at_a_generic_point() {
        let cfg = ModelConfig::new(1.0);
        let pt = p(1.0, 0.3, 0.5);
        let lr = connection(ConnectionKind::LR, Band::Plus, pt, &cfg, H).unwrap();
        let ti = connection(ConnectionKind::TildeRR, Band::Plus, pt, &cfg, H).unwrap();
        for c in 0..3 {
            assert!(
                (lr.a[c] - ti.a[c]).norm() < 1e-8,
                "component {c}: {} vs {}",
                lr.a[c],
                ti.a[c]
            );
        }
    }

    #[test]
    fn hermitian_case_collapses_all_three_forms() {
        let cfg = ModelConfig::new(0.0);
        let pt = p(1.0, 0.0, 0.5);
        let rr = connection(ConnectionKind::RR, Band::Plus, pt, &cfg, H).unwrap();
        let ti = connection(ConnectionKind::TildeRR, Band::Plus, pt, &cfg, H).unwrap();
        let lr = connection(ConnectionKind::LR, Band::Plus, pt, &cfg, H).unwrap();
        for c in 0..3 {
            assert!((rr.a[c] - ti.a[c]).norm() < 1e-8);
            assert!((rr.a[c] - lr.a[c]).norm() < 1e-8);
        }
    }

    #[test]
    fn connection_rejects_string_and_singular_points() {
        let cfg = ModelConfig::new(1.0);
        // On the + string (positive Z axis) the gauge vector vanishes.
        let err = connection(ConnectionKind::RR, Band::Plus, p(0.0, 0.0, 1.5), &cfg, H);
        assert!(matches!(err, Err(Error::StringProximity { .. })));
        // Inside the degenerate disk the branch is singular.
        let err = connection(ConnectionKind::RR, Band::Plus, p(0.3, 0.0, 0.0), &cfg, H);
        assert!(matches!(err, Err(Error::SampleOnSingularity { .. })));
    }

    #[test]
    fn analytic_rr_reduces_to_monopole_field() {
        let cfg = ModelConfig::new(0.0);
        let s = curvature_analytic(ConnectionKind::RR, Band::Plus, p(2.0, 0.0, 0.0), &cfg)
            .unwrap();
        assert!((s.b[0].re + 0.125).abs() < 1e-12);
        assert!(s.b[1].norm() < 1e-12);
        assert!(s.b[2].norm() < 1e-12);
    }

    #[test]
    fn analytic_tilde_matches_complex_monopole_form() {
        // The component formulas assemble to -(X, Y, Z + i Z0) / (2 E^3).
        let cfg = ModelConfig::new(1.0);
        for pt in [p(1.0, 1.0, 1.0), p(0.4, -0.8, 1.7), p(2.0, 0.1, -0.6)] {
            let es = crate::model::eigen_system(pt, &cfg);
            let e3 = es.e_plus.powi(3);
            let expect = [
                -C64::new(pt.x, 0.0) / (2.0 * e3),
                -C64::new(pt.y, 0.0) / (2.0 * e3),
                -C64::new(pt.z, cfg.z0) / (2.0 * e3),
            ];
            let got = curvature_analytic(ConnectionKind::TildeRR, Band::Plus, pt, &cfg)
                .unwrap()
                .b;
            for c in 0..3 {
                assert!((got[c] - expect[c]).norm() < 1e-13, "{pt:?} component {c}");
            }
        }
    }

    #[test]
    fn analytic_tilde_has_nonzero_imaginary_part() {
        let cfg = ModelConfig::new(1.0);
        let s =
            curvature_analytic(ConnectionKind::TildeRR, Band::Plus, p(1.0, 1.0, 1.0), &cfg)
                .unwrap();
        assert!(s.b.iter().any(|c| c.im.abs() > 1e-3));
    }

    #[test]
    fn analytic_rr_z_component_matches_quoted_form() {
        let cfg = ModelConfig::new(1.0);
        let pt = p(1.0, 1.0, 1.0);
        let es = crate::model::eigen_system(pt, &cfg);
        let s = curvature_analytic(ConnectionKind::RR, Band::Plus, pt, &cfg).unwrap();
        let quoted = -es.b / (2.0 * cfg.z0 * (es.a * es.a + es.b * es.b));
        assert!((s.b[2].re - quoted).abs() < 1e-14);
    }

    #[test]
    fn analytic_needs_plus_band() {
        let cfg = ModelConfig::new(1.0);
        let err = curvature_analytic(ConnectionKind::RR, Band::Minus, p(1.0, 1.0, 1.0), &cfg);
        assert!(matches!(err, Err(Error::UnsupportedBand)));
    }

    #[test]
    fn fd_curvature_agrees_with_closed_form() {
        let cfg = ModelConfig::new(1.0);
        let pt = p(1.0, 0.5, 0.5);
        for kind in [ConnectionKind::RR, ConnectionKind::TildeRR] {
            let fd = curvature_fd(kind, Band::Plus, pt, &cfg, default_curl_step(pt)).unwrap();
            let an = curvature_analytic(kind, Band::Plus, pt, &cfg).unwrap();
            let scale: f64 = an.b.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            for c in 0..3 {
                assert!(
                    (fd.b[c] - an.b[c]).norm() < 1e-6 * scale.max(1e-3),
                    "{kind} component {c}: {} vs {}",
                    fd.b[c],
                    an.b[c]
                );
            }
        }
    }

    #[test]
    fn hermitian_loop_phase_is_minus_half_solid_angle() {
        let cfg = ModelConfig::new(0.0);
        let spec = LoopSpec::new(0.5, 1.0);
        let got = loop_phase(ConnectionKind::RR, Band::Plus, &spec, &cfg).unwrap();
        let expect = -PI * (1.0 - 0.5 / 1.25f64.sqrt());
        assert!((got.re - expect).abs() < 1e-6, "{} vs {expect}", got.re);
        assert!(got.im.abs() < 1e-8);
    }

    #[test]
    fn loop_phase_tilde_equals_lr() {
        let cfg = ModelConfig::new(1.0);
        let spec = LoopSpec::new(0.5, 1.5);
        let ti = loop_phase(ConnectionKind::TildeRR, Band::Plus, &spec, &cfg).unwrap();
        let lr = loop_phase(ConnectionKind::LR, Band::Plus, &spec, &cfg).unwrap();
        assert!((ti - lr).norm() < 1e-7);
    }

    #[test]
    fn vanishing_loop_carries_no_phase() {
        let cfg = ModelConfig::new(1.0);
        let spec = LoopSpec::new(0.5, 1e-4);
        let got = loop_phase(ConnectionKind::RR, Band::Plus, &spec, &cfg).unwrap();
        assert!(got.norm() < 1e-6, "{got}");
    }

    #[test]
    fn orientation_flips_sign() {
        let cfg = ModelConfig::new(1.0);
        let ccw = LoopSpec::new(0.5, 1.0);
        let mut cw = ccw;
        cw.orientation = Orientation::Cw;
        let a = loop_phase_raw(ConnectionKind::RR, Band::Plus, &ccw, &cfg).unwrap();
        let b = loop_phase_raw(ConnectionKind::RR, Band::Plus, &cw, &cfg).unwrap();
        assert!((a + b).norm() < 1e-10);
    }

    #[test]
    fn loop_construction_rejects_ring_contact() {
        let cfg = ModelConfig::new(1.0);
        let spec = LoopSpec::new(0.0, 1.0);
        assert!(matches!(
            spec.validate(&cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn hermitian_sphere_charge_is_minus_half() {
        let cfg = ModelConfig::new(0.0);
        let q = surface_flux(
            ConnectionKind::RR,
            Band::Plus,
            Surface::Sphere {
                center: p(0.0, 0.0, 0.0),
                radius: 3.0,
            },
            &cfg,
            16,
            16,
        )
        .unwrap();
        assert!((q.re + 0.5).abs() < 1e-3, "{q}");
        assert!(q.im.abs() < 1e-6);
    }

    #[test]
    fn hermitian_disk_map_concentrates_charge_at_origin() {
        // Point source limit: the merged origin cell carries the full -1/2
        // and every other cell is empty to quadrature noise.
        let cfg = ModelConfig::new(0.0);
        let rep = disk_charge_map(ConnectionKind::RR, Band::Plus, &cfg, DiskGrid::new(2.2, 16, 16), 1e-2)
            .unwrap();
        assert!((rep.cells[0].charge.re + 0.5).abs() < 1e-3, "{:?}", rep.cells[0]);
        for c in &rep.cells[1..] {
            assert!(c.charge.norm() < 1e-4, "stray charge {:?}", c);
        }
        assert!((rep.total.re + 0.5).abs() < 1e-3);
        assert_eq!(rep.total, rep.mu_s + rep.mu_n);
    }

    #[test]
    fn pillbox_away_from_disk_encloses_nothing() {
        let cfg = ModelConfig::new(1.0);
        let q = surface_flux(
            ConnectionKind::TildeRR,
            Band::Plus,
            Surface::Pillbox {
                r_in: 2.0,
                r_out: 2.5,
                theta_lo: 0.3,
                theta_hi: 0.9,
                half_height: 0.005,
            },
            &cfg,
            16,
            16,
        )
        .unwrap();
        assert!(q.norm() < 1e-6, "{q}");
    }
}
