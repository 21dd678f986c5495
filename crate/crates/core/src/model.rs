//! The explicit 2x2 non-Hermitian model and its fixed-gauge eigensystem.
//!
//! The Hamiltonian on the parameter space R = (X, Y, Z) with non-Hermitian
//! strength Z0 is
//!
//! ```text
//!     H(R) = | Z + i Z0    X - i Y  |
//!            | X + i Y   -Z - i Z0  |
//! ```
//!
//! with eigenvalues E_± = ±(a + i b) selected by the a > 0 branch,
//!
//! ```text
//!     a = sqrt((d + sqrt(d^2 + 4 (Z Z0)^2)) / 2),   d = X^2+Y^2+Z^2-Z0^2,
//!     b = Z Z0 / a,
//! ```
//!
//! and right eigenvectors kept in the explicit unnormalized gauge
//! (X - iY, -Z - i Z0 + E_±). Left eigenvectors of H^† follow from the same
//! template with Z0 -> -Z0 and conjugated eigenvalues. The branch is singular
//! (a = 0) exactly on the disk {Z = 0, X^2+Y^2 <= Z0^2}; samples there are
//! flagged, never silently patched.

use crate::cplx::{Matrix2C, Vec2C, C64};
use crate::error::{Error, Result};
use serde::Serialize;

/// Default threshold on `a` below which the branch is declared singular.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

/// Location in parameter space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParamPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ParamPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Point shifted by `h` along coordinate axis `axis` (0 = X, 1 = Y, 2 = Z).
    pub fn shifted(&self, axis: usize, h: f64) -> ParamPoint {
        let mut p = *self;
        match axis {
            0 => p.x += h,
            1 => p.y += h,
            _ => p.z += h,
        }
        p
    }
}

/// Model configuration: non-Hermitian strength and the singularity threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelConfig {
    pub z0: f64,
    pub degeneracy_tol: f64,
}

impl ModelConfig {
    pub fn new(z0: f64) -> Self {
        Self {
            z0,
            degeneracy_tol: DEFAULT_DEGENERACY_TOL,
        }
    }

    pub fn with_tol(z0: f64, degeneracy_tol: f64) -> Self {
        assert!(degeneracy_tol > 0.0, "degeneracy tolerance must be positive");
        Self { z0, degeneracy_tol }
    }
}

/// Band label for the ±(a + ib) eigenvalue branches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Band {
    Plus,
    Minus,
}

impl Band {
    pub fn sign(self) -> f64 {
        match self {
            Band::Plus => 1.0,
            Band::Minus => -1.0,
        }
    }
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Band::Plus => write!(f, "+"),
            Band::Minus => write!(f, "-"),
        }
    }
}

/// Branch-selected eigen-decomposition in the fixed gauge.
///
/// `right_*` are exactly (X - iY, -Z - i Z0 + E_±), unnormalized; `left_*`
/// are the analogous eigenvectors of H^†, (X - iY, -Z + i Z0 + conj(E_±)).
/// When `singular` is set, `b` is reported as 0 by convention and the
/// vectors are still emitted from the formula (possibly near-zero).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EigenSystem {
    pub a: f64,
    pub b: f64,
    pub e_plus: C64,
    pub e_minus: C64,
    pub right_plus: Vec2C,
    pub right_minus: Vec2C,
    pub left_plus: Vec2C,
    pub left_minus: Vec2C,
    pub singular: bool,
}

impl EigenSystem {
    pub fn energy(&self, band: Band) -> C64 {
        match band {
            Band::Plus => self.e_plus,
            Band::Minus => self.e_minus,
        }
    }

    pub fn right(&self, band: Band) -> Vec2C {
        match band {
            Band::Plus => self.right_plus,
            Band::Minus => self.right_minus,
        }
    }

    pub fn left(&self, band: Band) -> Vec2C {
        match band {
            Band::Plus => self.left_plus,
            Band::Minus => self.left_minus,
        }
    }
}

/// The explicit Hamiltonian matrix.
pub fn hamiltonian(p: ParamPoint, cfg: &ModelConfig) -> Matrix2C {
    Matrix2C::new(
        C64::new(p.z, cfg.z0),
        C64::new(p.x, -p.y),
        C64::new(p.x, p.y),
        C64::new(-p.z, -cfg.z0),
    )
}

/// Branch quantities (a, b) of E_+ = a + i b.
///
/// `a^2 = (d + s)/2` is evaluated as `2 (Z Z0)^2 / (s - d)` when d < 0 to
/// avoid cancellation near the singular disk.
fn branch_ab(p: ParamPoint, z0: f64) -> (f64, f64) {
    let d = p.x * p.x + p.y * p.y + p.z * p.z - z0 * z0;
    let zz0 = p.z * z0;
    let s = (d * d + 4.0 * zz0 * zz0).sqrt();
    let a_sq = if d >= 0.0 {
        0.5 * (d + s)
    } else if s - d > 0.0 {
        2.0 * zz0 * zz0 / (s - d)
    } else {
        0.0
    };
    let a = a_sq.max(0.0).sqrt();
    let b = if a > 0.0 { zz0 / a } else { 0.0 };
    (a, b)
}

/// Branch-selected eigen-decomposition in the fixed gauge.
///
/// Never fails: singularity is flagged on the result, not thrown, so that
/// scans can decide how to handle the excluded set themselves.
pub fn eigen_system(p: ParamPoint, cfg: &ModelConfig) -> EigenSystem {
    let (a, b) = branch_ab(p, cfg.z0);
    let singular = a < cfg.degeneracy_tol;
    let b = if singular { 0.0 } else { b };
    let e_plus = C64::new(a, b);
    let e_minus = -e_plus;
    let top = C64::new(p.x, -p.y);
    let diag = C64::new(-p.z, -cfg.z0);
    let right_plus = Vec2C::new(top, diag + e_plus);
    let right_minus = Vec2C::new(top, diag + e_minus);
    // H^† has the same template with Z0 -> -Z0 and eigenvalues conj(E_±).
    let diag_left = C64::new(-p.z, cfg.z0);
    let left_plus = Vec2C::new(top, diag_left + e_plus.conj());
    let left_minus = Vec2C::new(top, diag_left + e_minus.conj());
    EigenSystem {
        a,
        b,
        e_plus,
        e_minus,
        right_plus,
        right_minus,
        left_plus,
        left_minus,
        singular,
    }
}

/// Eigen-decomposition that fails on the singular set.
pub fn eigen_system_checked(p: ParamPoint, cfg: &ModelConfig) -> Result<EigenSystem> {
    let es = eigen_system(p, cfg);
    if es.singular {
        Err(Error::SampleOnSingularity {
            x: p.x,
            y: p.y,
            z: p.z,
        })
    } else {
        Ok(es)
    }
}

/// True iff the point lies on the exceptional ring {Z = 0, X^2+Y^2 = Z0^2}
/// within `tol` in each defining condition.
pub fn on_degeneracy_ring(p: ParamPoint, cfg: &ModelConfig, tol: f64) -> bool {
    assert!(tol > 0.0, "tolerance must be positive");
    let rho = (p.x * p.x + p.y * p.y).sqrt();
    p.z.abs() <= tol && (rho - cfg.z0.abs()).abs() <= tol
}

/// Winding scan of the nodal line (string) of a band along the Z axis.
#[derive(Clone, Debug, Serialize)]
pub struct StringScanReport {
    /// (Z, winding) at each sampled height.
    pub axis_samples: Vec<(f64, i32)>,
    /// Estimated Z where the winding changes; NaN when no transition is seen.
    pub endpoint_estimate: f64,
}

/// Phase winding of the fixed-gauge eigenvector around a small circle
/// centered on the Z axis, i.e. the discrete loop integral of the
/// right-right connection divided by 2π, rounded to the nearest integer.
pub fn axis_winding(
    band: Band,
    cfg: &ModelConfig,
    z: f64,
    circle_radius: f64,
    n_segments: usize,
) -> Result<i32> {
    let n = n_segments.max(16);
    let mut total = C64::ZERO;
    let vec_at = |k: usize| -> Result<Vec2C> {
        let theta = std::f64::consts::TAU * (k % n) as f64 / n as f64;
        let p = ParamPoint::new(
            circle_radius * theta.cos(),
            circle_radius * theta.sin(),
            z,
        );
        Ok(eigen_system_checked(p, cfg)?.right(band))
    };
    let mut prev = vec_at(0)?;
    for k in 1..=n {
        let cur = vec_at(k)?;
        let ratio = prev.dot(&cur) / prev.norm_sq();
        // i log(ratio): real part of the loop integral accumulates -arg.
        total += C64::i() * ratio.ln();
        prev = cur;
    }
    Ok((total.re / std::f64::consts::TAU).round() as i32)
}

/// Scan windings over a range of Z heights and locate the winding transition.
///
/// The circle must stay off the singular set at every sampled height; in the
/// non-Hermitian case that excludes heights inside the degenerate disk
/// (|Z| = 0 with radius below |Z0|), so ranges should not contain Z = 0.
pub fn scan_string(
    band: Band,
    cfg: &ModelConfig,
    z_range: (f64, f64),
    n_samples: usize,
    circle_radius: f64,
) -> Result<StringScanReport> {
    if n_samples < 2 {
        return Err(Error::InvalidConfig(
            "string scan needs at least two samples".into(),
        ));
    }
    if circle_radius <= 0.0 {
        return Err(Error::InvalidConfig("circle radius must be positive".into()));
    }
    let (z_lo, z_hi) = z_range;
    let mut axis_samples = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let z = z_lo + (z_hi - z_lo) * i as f64 / (n_samples - 1) as f64;
        let w = axis_winding(band, cfg, z, circle_radius, 64)?;
        axis_samples.push((z, w));
    }
    let mut endpoint = f64::NAN;
    for pair in axis_samples.windows(2) {
        if pair[0].1 != pair[1].1 {
            endpoint = 0.5 * (pair[0].0 + pair[1].0);
            break;
        }
    }
    Ok(StringScanReport {
        axis_samples,
        endpoint_estimate: endpoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn hamiltonian_zero_point() {
        let h = hamiltonian(ParamPoint::new(0.0, 0.0, 0.0), &ModelConfig::new(0.0));
        assert_eq!(h, Matrix2C::zero());
    }

    #[test]
    fn hamiltonian_direct_substitution() {
        let h = hamiltonian(ParamPoint::new(1.0, 0.0, 0.5), &ModelConfig::new(1.0));
        assert_eq!(h.entry(0, 0), c(0.5, 1.0));
        assert_eq!(h.entry(0, 1), c(1.0, 0.0));
        assert_eq!(h.entry(1, 0), c(1.0, 0.0));
        assert_eq!(h.entry(1, 1), c(-0.5, -1.0));

        let h = hamiltonian(ParamPoint::new(0.0, 1.0, 0.0), &ModelConfig::new(0.0));
        assert_eq!(h.entry(0, 1), c(0.0, -1.0));
        assert_eq!(h.entry(1, 0), c(0.0, 1.0));
    }

    #[test]
    fn hamiltonian_structure_invariants() {
        // entry(0,0) = -entry(1,1), entry(0,1) = conj(entry(1,0)).
        for &(x, y, z, z0) in &[
            (0.3, -0.7, 1.2, 0.9),
            (1.0, 2.0, -0.4, 0.0),
            (-0.2, 0.0, 0.0, 2.0),
        ] {
            let h = hamiltonian(ParamPoint::new(x, y, z), &ModelConfig::new(z0));
            assert_eq!(h.entry(0, 0), -h.entry(1, 1));
            assert_eq!(h.entry(0, 1), h.entry(1, 0).conj());
        }
    }

    #[test]
    fn eigen_hermitian_sigma_x_point() {
        let es = eigen_system(ParamPoint::new(1.0, 0.0, 0.0), &ModelConfig::new(0.0));
        assert!((es.a - 1.0).abs() < 1e-15);
        assert_eq!(es.b, 0.0);
        assert_eq!(es.right_plus, Vec2C::new(c(1.0, 0.0), c(1.0, 0.0)));
        assert_eq!(es.right_minus, Vec2C::new(c(1.0, 0.0), c(-1.0, 0.0)));
        assert!(!es.singular);
    }

    #[test]
    fn eigen_reference_point() {
        // Frozen from the independent quadratic-formula solver (see
        // tests/oracles.rs): branch values at (1, 0, 0.5), Z0 = 1.
        let es = eigen_system(ParamPoint::new(1.0, 0.0, 0.5), &ModelConfig::new(1.0));
        assert!((es.a - 0.8002425902201205).abs() < 1e-12);
        assert!((es.b - 0.6248105338438266).abs() < 1e-12);
        assert!((es.e_plus - c(0.8002425902201205, 0.6248105338438266)).norm() < 1e-12);
    }

    #[test]
    fn eigen_on_negative_axis() {
        // On the negative Z axis the closed form is a = |Z|, b = sign(Z) Z0,
        // and the + gauge vector does not vanish (no string there).
        let es = eigen_system(ParamPoint::new(0.0, 0.0, -2.0), &ModelConfig::new(1.0));
        assert!((es.a - 2.0).abs() < 1e-14);
        assert!((es.b + 1.0).abs() < 1e-14);
        assert!((es.right_plus.c0).norm() == 0.0);
        assert!((es.right_plus.c1 - c(4.0, -2.0)).norm() < 1e-14);
    }

    #[test]
    fn eigen_residuals_and_biorthogonality() {
        let cfg = ModelConfig::new(1.0);
        let p = ParamPoint::new(0.7, -0.4, 1.3);
        let es = eigen_system(p, &cfg);
        let h = hamiltonian(p, &cfg);
        for (v, e) in [(es.right_plus, es.e_plus), (es.right_minus, es.e_minus)] {
            let r = h.mul_vec(&v).sub(&v.scale(e));
            assert!(r.norm() / v.norm() < 1e-12);
        }
        let hd = h.adjoint();
        for (v, e) in [(es.left_plus, es.e_plus), (es.left_minus, es.e_minus)] {
            let r = hd.mul_vec(&v).sub(&v.scale(e.conj()));
            assert!(r.norm() / v.norm() < 1e-12);
        }
        let lp = es.left_plus.normalized();
        let rm = es.right_minus.normalized();
        assert!(lp.dot(&rm).norm() < 1e-12);
        let lm = es.left_minus.normalized();
        let rp = es.right_plus.normalized();
        assert!(lm.dot(&rp).norm() < 1e-12);
    }

    #[test]
    fn singular_disk_is_flagged() {
        let cfg = ModelConfig::new(1.0);
        // Interior of the disk Z = 0, X^2 + Y^2 < Z0^2.
        let es = eigen_system(ParamPoint::new(0.5, 0.0, 0.0), &cfg);
        assert!(es.singular);
        assert_eq!(es.b, 0.0);
        // Origin with Z0 != 0 has purely imaginary eigenvalues: excluded.
        assert!(eigen_system(ParamPoint::new(0.0, 0.0, 0.0), &cfg).singular);
        // Points just outside are fine.
        assert!(!eigen_system(ParamPoint::new(1.2, 0.0, 0.0), &cfg).singular);
        assert!(eigen_system_checked(ParamPoint::new(0.5, 0.0, 0.0), &cfg).is_err());
    }

    #[test]
    fn ring_membership() {
        let tol = 1e-9;
        assert!(on_degeneracy_ring(
            ParamPoint::new(1.0, 0.0, 0.0),
            &ModelConfig::new(1.0),
            tol
        ));
        assert!(!on_degeneracy_ring(
            ParamPoint::new(1.0, 0.0, 0.0),
            &ModelConfig::new(0.0),
            tol
        ));
        assert!(on_degeneracy_ring(
            ParamPoint::new(0.6, 0.8, 0.0),
            &ModelConfig::new(1.0),
            tol
        ));
    }

    #[test]
    fn string_sits_on_positive_axis_for_plus_band() {
        let cfg = ModelConfig::new(0.0);
        let report =
            scan_string(Band::Plus, &cfg, (-2.0, 2.0), 21, 0.01).expect("scan should succeed");
        for &(z, w) in &report.axis_samples {
            if z > 0.05 {
                assert_ne!(w, 0, "expected nonzero winding at z = {z}");
            } else if z < -0.05 {
                assert_eq!(w, 0, "expected zero winding at z = {z}");
            }
        }
        assert!(report.endpoint_estimate.abs() < 0.15);
    }

    #[test]
    fn minus_band_string_mirrors_plus() {
        let cfg = ModelConfig::new(0.0);
        let report =
            scan_string(Band::Minus, &cfg, (-2.0, 2.0), 21, 0.01).expect("scan should succeed");
        for &(z, w) in &report.axis_samples {
            if z < -0.05 {
                assert_ne!(w, 0);
            } else if z > 0.05 {
                assert_eq!(w, 0);
            }
        }
    }

    #[test]
    fn scan_rejects_singular_circles() {
        let cfg = ModelConfig::new(1.0);
        // A circle at Z = 0 with radius inside the degenerate disk.
        let err = scan_string(Band::Plus, &cfg, (0.0, 1.0), 5, 0.01);
        assert!(matches!(
            err,
            Err(Error::SampleOnSingularity { .. })
        ));
    }
}
