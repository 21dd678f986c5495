//! End-to-end verification suite.
//!
//! Each criterion is a self-contained check with its tolerances pinned in
//! code; the suite prints one pass/fail line per criterion. Criteria that
//! share expensive computations (the reference phase sweep, the reference
//! evolution) memoize them through [`Suite`].
//!
//! Phase comparisons on real parts use the geodesic distance on the circle:
//! both the measured geometric phase (unwrapped against a compensated track)
//! and the reduced loop integrals are principal representatives, so plain
//! differences are equivalent except exactly at the ±π cut.

use crate::cplx::{circle_distance, C64};
use crate::dynamics::{
    self, Compensation, DriveSpec, EvolutionTrace, PhaseDecomposition, SweepKind, SweepRow,
};
use crate::error::Result;
use crate::geometry::{self, ConnectionKind, DiskGrid, LoopSpec, Surface};
use crate::gpe::{self, GpeConfig};
use crate::model::{self, Band, ModelConfig, ParamPoint};
use std::sync::OnceLock;
use std::f64::consts::PI;
use std::fmt::Write as _;

pub mod oracles;

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "criterion {:02} {:<32} {}  {}",
            self.id,
            self.name,
            if self.passed { "pass" } else { "FAIL" },
            self.details
        )
    }
}

pub const CRITERIA: [(u32, &str); 13] = [
    (1, "phase-sweep-vs-loop-integrals"),
    (2, "delta-phase-relation"),
    (3, "rate-invariance"),
    (4, "charge-quantization"),
    (5, "disk-charge-structure"),
    (6, "connection-identities"),
    (7, "curvature-closed-forms"),
    (8, "hermitian-loop-oracle"),
    (9, "imaginary-part-vanishing"),
    (10, "string-vs-degeneracy"),
    (11, "soliton-phase-scheme"),
    (12, "first-order-energy-residual"),
    (13, "numerical-hygiene"),
];

/// Reference drive of the main comparisons: Z = 0.5, Z0 = 1, ω = 0.0005π.
fn reference_spec() -> DriveSpec {
    DriveSpec::new(0.5, 1.0, 0.0005 * PI, 1.0, Band::Plus)
}

fn radius_grid() -> Vec<f64> {
    (1..=14).map(|i| 0.25 * i as f64).collect()
}

/// Deterministic PRNG (splitmix64) so the random-point criteria are
/// reproducible without pulling an RNG dependency into the library.
struct SplitMix64(u64);

impl SplitMix64 {
    fn new(seed: u64) -> Self {
        Self(seed)
    }

    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [lo, hi).
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }
}

/// Sample a point in [-2, 2]³ that keeps clear of the degeneracy set and of
/// both nodal lines (the Z axis).
fn sample_clear_point(rng: &mut SplitMix64, cfg: &ModelConfig) -> ParamPoint {
    loop {
        let p = ParamPoint::new(
            rng.uniform(-2.0, 2.0),
            rng.uniform(-2.0, 2.0),
            rng.uniform(-2.0, 2.0),
        );
        if p.x * p.x + p.y * p.y < 0.09 {
            continue;
        }
        let es = model::eigen_system(p, cfg);
        if es.a < 0.25 {
            continue;
        }
        return p;
    }
}

struct Failures {
    count: usize,
    first: String,
    worst: f64,
}

impl Failures {
    fn new() -> Self {
        Self {
            count: 0,
            first: String::new(),
            worst: 0.0,
        }
    }

    fn check(&mut self, ok: bool, magnitude: f64, label: impl FnOnce() -> String) {
        self.worst = self.worst.max(magnitude);
        if !ok {
            if self.count == 0 {
                self.first = label();
            }
            self.count += 1;
        }
    }

    fn report(&self, id: u32, name: &'static str, detail_pass: String) -> CriterionReport {
        if self.count == 0 {
            CriterionReport {
                id,
                name,
                passed: true,
                details: detail_pass,
            }
        } else {
            CriterionReport {
                id,
                name,
                passed: false,
                details: format!("{} violations, first: {}", self.count, self.first),
            }
        }
    }
}

/// Memoizing runner for the full suite.
#[derive(Default)]
pub struct Suite {
    fig_sweep: OnceLock<Vec<SweepRow>>,
    reference_trace: OnceLock<Result<EvolutionTrace>>,
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    /// Radius sweep at the reference drive (shared by criteria 1 and 9).
    fn fig_sweep(&self) -> &Vec<SweepRow> {
        self.fig_sweep.get_or_init(|| {
            let spec = reference_spec();
            let cfg = ModelConfig::new(spec.z0);
            dynamics::sweep(SweepKind::Radius, &spec, &radius_grid(), &cfg)
        })
    }

    fn reference_trace(&self) -> &Result<EvolutionTrace> {
        self.reference_trace.get_or_init(|| {
            let spec = reference_spec();
            let cfg = ModelConfig::new(spec.z0);
            dynamics::evolve(&spec, &cfg)
        })
    }

    pub fn run_all(&self) -> Vec<CriterionReport> {
        CRITERIA.iter().map(|&(id, _)| self.run(id)).collect()
    }

    pub fn run(&self, id: u32) -> CriterionReport {
        match id {
            1 => self.criterion_phase_sweep(),
            2 => self.criterion_delta_relation(),
            3 => self.criterion_rate_invariance(),
            4 => self.criterion_charge_quantization(),
            5 => self.criterion_disk_structure(),
            6 => self.criterion_connection_identities(),
            7 => self.criterion_curvature_closed_forms(),
            8 => self.criterion_hermitian_loop_oracle(),
            9 => self.criterion_imaginary_part(),
            10 => self.criterion_string_vs_degeneracy(),
            11 => self.criterion_soliton_scheme(),
            12 => self.criterion_first_order_residual(),
            13 => self.criterion_numerical_hygiene(),
            _ => CriterionReport {
                id,
                name: "unknown",
                passed: false,
                details: "no such criterion".into(),
            },
        }
    }

    /// Measured geometric phases vs the loop integrals across the radius
    /// sweep, both forms, ≤ 1e-2 per component.
    fn criterion_phase_sweep(&self) -> CriterionReport {
        const TOL: f64 = 1e-2;
        let mut fails = Failures::new();
        for row in self.fig_sweep() {
            match &row.result {
                Ok(d) => {
                    for (label, got, theory) in [
                        ("rr", d.phi_g, d.phi_g_theory_rr),
                        ("tilde", d.phi_g_tilde, d.phi_g_theory_tilde),
                    ] {
                        let dre = circle_distance(got.re, theory.re).abs();
                        let dim = (got.im - theory.im).abs();
                        let err = dre.max(dim);
                        fails.check(err <= TOL, err, || {
                            format!("r = {} {label}: |Δ| = {err:.3e}", row.value)
                        });
                    }
                }
                Err(e) => fails.check(false, f64::INFINITY, || {
                    format!("r = {} failed: {e}", row.value)
                }),
            }
        }
        fails.report(
            1,
            "phase-sweep-vs-loop-integrals",
            format!(
                "14 radii, both forms, worst |Δ| = {:.2e} (tol 1e-2)",
                fails.worst
            ),
        )
    }

    /// The dynamical-phase difference equals the loop-integral difference
    /// (≤ 1e-3 per component) and the accumulated ΔE integral (≤ 1e-6);
    /// Hermitian rows additionally demand |Δφ_d| ≤ 1e-5.
    fn criterion_delta_relation(&self) -> CriterionReport {
        let base = reference_spec();
        let cfg = ModelConfig::new(base.z0);
        let z0_values: Vec<f64> = (0..=8).map(|i| 0.25 * i as f64).collect();
        let mut fails = Failures::new();
        let mut rows: Vec<(&str, f64, PhaseDecomposition)> = Vec::new();
        for row in dynamics::sweep(SweepKind::Z0, &base, &z0_values, &cfg) {
            match row.result {
                Ok(d) => rows.push(("z0", row.value, d)),
                Err(e) => fails.check(false, f64::INFINITY, || {
                    format!("z0 = {} failed: {e}", row.value)
                }),
            }
        }
        for row in dynamics::sweep(SweepKind::Radius, &base, &radius_grid(), &cfg) {
            match row.result {
                Ok(d) => rows.push(("r", row.value, d)),
                Err(e) => fails.check(false, f64::INFINITY, || {
                    format!("r = {} failed: {e}", row.value)
                }),
            }
        }
        for (key, value, d) in &rows {
            let dg = d.delta_phi_d - d.delta_phi_g;
            let err_g = dg.re.abs().max(dg.im.abs());
            fails.check(err_g <= 1e-3, err_g, || {
                format!("{key} = {value}: |Δφ_d - Δφ_g| = {err_g:.3e} > 1e-3")
            });
            let de = d.delta_phi_d - d.int_delta_e;
            let err_e = de.re.abs().max(de.im.abs());
            fails.check(err_e <= 1e-6, err_e, || {
                format!("{key} = {value}: |Δφ_d - ∫ΔE| = {err_e:.3e} > 1e-6")
            });
            if *key == "z0" && *value == 0.0 {
                let mag = d.delta_phi_d.re.abs().max(d.delta_phi_d.im.abs());
                fails.check(mag <= 1e-5, mag, || {
                    format!("Hermitian row: |Δφ_d| = {mag:.3e} > 1e-5")
                });
            }
        }
        fails.report(
            2,
            "delta-phase-relation",
            format!("{} rows, worst residual {:.2e}", rows.len(), fails.worst),
        )
    }

    /// Δφ_d is rate-independent to 1% over a 5× range of ω.
    fn criterion_rate_invariance(&self) -> CriterionReport {
        let base = reference_spec();
        let cfg = ModelConfig::new(base.z0);
        let omegas: Vec<f64> = [2e-4, 4e-4, 6e-4, 8e-4, 1e-3]
            .iter()
            .map(|&f| f * PI)
            .collect();
        let rows = dynamics::sweep(SweepKind::Omega, &base, &omegas, &cfg);
        let mut deltas = Vec::new();
        let mut fails = Failures::new();
        for row in rows {
            match row.result {
                Ok(d) => deltas.push(d.delta_phi_d),
                Err(e) => fails.check(false, f64::INFINITY, || {
                    format!("omega = {} failed: {e}", row.value)
                }),
            }
        }
        if deltas.len() >= 2 {
            let mean = deltas.iter().sum::<C64>() / deltas.len() as f64;
            let mut spread = 0.0f64;
            for i in 0..deltas.len() {
                for j in i + 1..deltas.len() {
                    spread = spread.max((deltas[i] - deltas[j]).norm());
                }
            }
            let rel = spread / mean.norm();
            fails.check(rel <= 0.01, rel, || {
                format!(
                    "spread {spread:.3e} is {:.2}% of |Δφ_d| = {:.3}",
                    rel * 100.0,
                    mean.norm()
                )
            });
            return fails.report(
                3,
                "rate-invariance",
                format!("spread/|Δφ_d| = {rel:.3e} over 5x rate range (tol 1e-2)"),
            );
        }
        fails.report(3, "rate-invariance", "insufficient rows".into())
    }

    /// Total monopole charge -1/2 through a sphere for every z0, both forms;
    /// the TildeRR imaginary part integrates to zero.
    fn criterion_charge_quantization(&self) -> CriterionReport {
        let mut fails = Failures::new();
        let sphere = Surface::Sphere {
            center: ParamPoint::new(0.0, 0.0, 0.0),
            radius: 4.0,
        };
        for &z0 in &[0.0, 0.5, 1.0, 2.0] {
            let cfg = ModelConfig::new(z0);
            for kind in [ConnectionKind::RR, ConnectionKind::TildeRR] {
                match geometry::surface_flux(kind, Band::Plus, sphere, &cfg, 32, 32) {
                    Ok(q) => {
                        let err_re = (q.re + 0.5).abs();
                        fails.check(err_re <= 1e-3, err_re, || {
                            format!("z0 = {z0} {kind}: Re q = {:.6} (want -0.5)", q.re)
                        });
                        let err_im = q.im.abs();
                        fails.check(err_im <= 1e-3, err_im, || {
                            format!("z0 = {z0} {kind}: Im q = {:.3e} (want 0)", q.im)
                        });
                    }
                    Err(e) => fails.check(false, f64::INFINITY, || {
                        format!("z0 = {z0} {kind} flux failed: {e}")
                    }),
                }
            }
        }
        fails.report(
            4,
            "charge-quantization",
            format!("8 fluxes, worst deviation {:.2e} (tol 1e-3)", fails.worst),
        )
    }

    /// Disk maps at z0 = 1 on a 64×64 polar grid: the TildeRR real part has
    /// positive interior cells and negative cells at/outside the ring with
    /// |μ_S| > μ_N; the RR map carries no positive charge; both totals -1/2.
    fn criterion_disk_structure(&self) -> CriterionReport {
        let cfg = ModelConfig::new(1.0);
        let grid = DiskGrid::new(2.2, 64, 64);
        let mut fails = Failures::new();
        let ring = 1.0;

        match geometry::disk_charge_map(ConnectionKind::TildeRR, Band::Plus, &cfg, grid, 1e-2) {
            Ok(rep) => {
                for c in &rep.cells {
                    if c.r_out <= 0.9 * ring {
                        fails.check(c.charge.re > 0.0, -c.charge.re, || {
                            format!(
                                "tilde interior cell at r = [{:.3}, {:.3}] has Re q = {:.3e}",
                                c.r_in, c.r_out, c.charge.re
                            )
                        });
                    } else if c.r_in < ring && ring < c.r_out {
                        // The outer edge of the disk: cells containing the
                        // degeneracy ring concentrate the S charge.
                        fails.check(c.charge.re < 0.0, c.charge.re, || {
                            format!(
                                "tilde edge cell at r = [{:.3}, {:.3}] has Re q = {:.3e}",
                                c.r_in, c.r_out, c.charge.re
                            )
                        });
                    } else if c.r_in >= ring {
                        // Strictly outside the ring the field is
                        // divergence-free: charges vanish to quadrature
                        // noise.
                        fails.check(c.charge.re.abs() <= 1e-4, c.charge.re.abs(), || {
                            format!(
                                "tilde outer cell at r = [{:.3}, {:.3}] has |Re q| = {:.3e}",
                                c.r_in, c.r_out, c.charge.re
                            )
                        });
                    }
                }
                fails.check(rep.mu_s.re.abs() > rep.mu_n.re, 0.0, || {
                    format!(
                        "|mu_S| = {:.3} not above mu_N = {:.3}",
                        rep.mu_s.re.abs(),
                        rep.mu_n.re
                    )
                });
                let err = (rep.total.re + 0.5).abs();
                fails.check(err <= 2e-2, err, || {
                    format!("tilde total Re = {:.4} (want -0.5 ± 2e-2)", rep.total.re)
                });
            }
            Err(e) => fails.check(false, f64::INFINITY, || format!("tilde map failed: {e}")),
        }

        match geometry::disk_charge_map(ConnectionKind::RR, Band::Plus, &cfg, grid, 1e-2) {
            Ok(rep) => {
                for c in &rep.cells {
                    fails.check(c.charge.re <= 1e-4, c.charge.re, || {
                        format!(
                            "rr cell at r = [{:.3}, {:.3}] has Re q = {:.3e} > 1e-4",
                            c.r_in, c.r_out, c.charge.re
                        )
                    });
                }
                let err = (rep.total.re + 0.5).abs();
                fails.check(err <= 2e-2, err, || {
                    format!("rr total Re = {:.4} (want -0.5 ± 2e-2)", rep.total.re)
                });
            }
            Err(e) => fails.check(false, f64::INFINITY, || format!("rr map failed: {e}")),
        }

        fails.report(
            5,
            "disk-charge-structure",
            "N interior / S edge, all-S map, totals -1/2 on 64x64 grids".into(),
        )
    }

    /// LR and TildeRR agree componentwise at random points; all three forms
    /// collapse in the Hermitian limit; bi-orthogonality holds.
    fn criterion_connection_identities(&self) -> CriterionReport {
        let mut fails = Failures::new();
        let mut rng = SplitMix64::new(0x5eed_cafe);
        let cfg = ModelConfig::new(1.0);
        for _ in 0..1000 {
            let p = sample_clear_point(&mut rng, &cfg);
            let h = geometry::default_connection_step(p);
            let lr = geometry::connection(ConnectionKind::LR, Band::Plus, p, &cfg, h);
            let ti = geometry::connection(ConnectionKind::TildeRR, Band::Plus, p, &cfg, h);
            match (lr, ti) {
                (Ok(lr), Ok(ti)) => {
                    for c in 0..3 {
                        let err = (lr.a[c] - ti.a[c]).norm();
                        fails.check(err <= 1e-8, err, || {
                            format!(
                                "LR vs Tilde at ({:.3},{:.3},{:.3}): {err:.3e}",
                                p.x, p.y, p.z
                            )
                        });
                    }
                }
                _ => fails.check(false, f64::INFINITY, || {
                    format!("connection failed at {p:?}")
                }),
            }
            let es = model::eigen_system(p, &cfg);
            let b1 = es
                .left_plus
                .normalized()
                .dot(&es.right_minus.normalized())
                .norm();
            let b2 = es
                .left_minus
                .normalized()
                .dot(&es.right_plus.normalized())
                .norm();
            let b = b1.max(b2);
            fails.check(b <= 1e-10, b, || {
                format!(
                    "bi-orthogonality residual {b:.3e} at ({:.3},{:.3},{:.3})",
                    p.x, p.y, p.z
                )
            });
        }
        let cfg0 = ModelConfig::new(0.0);
        let mut rng0 = SplitMix64::new(0x0bad_5eed);
        for _ in 0..1000 {
            let p = sample_clear_point(&mut rng0, &cfg0);
            let h = geometry::default_connection_step(p);
            let rr = geometry::connection(ConnectionKind::RR, Band::Plus, p, &cfg0, h);
            let lr = geometry::connection(ConnectionKind::LR, Band::Plus, p, &cfg0, h);
            let ti = geometry::connection(ConnectionKind::TildeRR, Band::Plus, p, &cfg0, h);
            match (rr, lr, ti) {
                (Ok(rr), Ok(lr), Ok(ti)) => {
                    for c in 0..3 {
                        let err = (rr.a[c] - lr.a[c]).norm().max((rr.a[c] - ti.a[c]).norm());
                        fails.check(err <= 1e-8, err, || {
                            format!(
                                "Hermitian collapse at ({:.3},{:.3},{:.3}): {err:.3e}",
                                p.x, p.y, p.z
                            )
                        });
                    }
                }
                _ => fails.check(false, f64::INFINITY, || {
                    format!("connection failed at {p:?}")
                }),
            }
        }
        fails.report(
            6,
            "connection-identities",
            format!("2000 random points, worst residual {:.2e}", fails.worst),
        )
    }

    /// Finite-difference curl vs the closed forms, relative error ≤ 1e-6.
    fn criterion_curvature_closed_forms(&self) -> CriterionReport {
        let mut fails = Failures::new();
        let mut rng = SplitMix64::new(0xc0572a5e_ed123456);
        let mut count = 0usize;
        for &z0 in &[0.5, 1.0, 2.0] {
            let cfg = ModelConfig::new(z0);
            for _ in 0..334 {
                let p = sample_clear_point(&mut rng, &cfg);
                count += 1;
                for kind in [ConnectionKind::RR, ConnectionKind::TildeRR] {
                    let fd = geometry::curvature_fd(
                        kind,
                        Band::Plus,
                        p,
                        &cfg,
                        geometry::default_curl_step(p),
                    );
                    let an = geometry::curvature_analytic(kind, Band::Plus, p, &cfg);
                    match (fd, an) {
                        (Ok(fd), Ok(an)) => {
                            let scale: f64 =
                                an.b.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                            let err: f64 = fd
                                .b
                                .iter()
                                .zip(&an.b)
                                .map(|(f, a)| (f - a).norm_sqr())
                                .sum::<f64>()
                                .sqrt()
                                / scale;
                            fails.check(err <= 1e-6, err, || {
                                format!(
                                    "{kind} z0 = {z0} at ({:.3},{:.3},{:.3}): rel err {err:.3e}",
                                    p.x, p.y, p.z
                                )
                            });
                        }
                        _ => fails.check(false, f64::INFINITY, || {
                            format!("curvature failed at {p:?} (z0 = {z0})")
                        }),
                    }
                }
            }
        }
        fails.report(
            7,
            "curvature-closed-forms",
            format!(
                "{count} points x 2 forms, worst rel err {:.2e} (tol 1e-6)",
                fails.worst
            ),
        )
    }

    /// Hermitian loop phase equals -π(1 - z/√(z²+r²)) and the independent
    /// Wilson-overlap product.
    fn criterion_hermitian_loop_oracle(&self) -> CriterionReport {
        let cfg = ModelConfig::new(0.0);
        let spec = LoopSpec::new(0.5, 1.0);
        let mut fails = Failures::new();
        match geometry::loop_phase(ConnectionKind::RR, Band::Plus, &spec, &cfg) {
            Ok(got) => {
                let closed = -PI * (1.0 - 0.5 / 1.25f64.sqrt());
                let err = (got.re - closed).abs().max(got.im.abs());
                fails.check(err <= 1e-6, err, || {
                    format!("loop phase {:.8} vs closed form {closed:.8}", got.re)
                });
                let wilson = oracles::wilson_loop_phase(
                    ConnectionKind::RR,
                    Band::Plus,
                    &spec,
                    &cfg,
                    200_000,
                );
                let werr = (got - wilson).norm();
                fails.check(werr <= 1e-6, werr, || {
                    format!("loop phase {:.8} vs Wilson product {:.8}", got.re, wilson.re)
                });
            }
            Err(e) => fails.check(false, f64::INFINITY, || format!("loop phase failed: {e}")),
        }
        fails.report(
            8,
            "hermitian-loop-oracle",
            format!(
                "closed form and Wilson product agree, worst {:.2e} (tol 1e-6)",
                fails.worst
            ),
        )
    }

    /// Im φ_g vanishes across the radius sweep (expectation-energy route).
    fn criterion_imaginary_part(&self) -> CriterionReport {
        const TOL: f64 = 1e-2;
        let mut fails = Failures::new();
        for row in self.fig_sweep() {
            match &row.result {
                Ok(d) => {
                    let mag = d.phi_g.im.abs();
                    fails.check(mag <= TOL, mag, || {
                        format!("r = {}: Im φ_g = {mag:.3e}", row.value)
                    });
                }
                Err(e) => fails.check(false, f64::INFINITY, || {
                    format!("r = {} failed: {e}", row.value)
                }),
            }
        }
        fails.report(
            9,
            "imaginary-part-vanishing",
            format!("14 radii, worst |Im φ_g| = {:.2e} (tol 1e-2)", fails.worst),
        )
    }

    /// The nodal line of the + band stays on the positive Z axis while the
    /// degeneracy ring sits at radius |z0|: distinct locations.
    fn criterion_string_vs_degeneracy(&self) -> CriterionReport {
        let cfg = ModelConfig::new(1.0);
        let mut fails = Failures::new();
        match model::scan_string(Band::Plus, &cfg, (0.05, 2.0), 40, 0.01) {
            Ok(rep) => {
                for (z, w) in rep.axis_samples {
                    fails.check(w != 0, 0.0, || format!("zero winding at z = {z}"));
                }
            }
            Err(e) => fails.check(false, f64::INFINITY, || format!("upper scan failed: {e}")),
        }
        match model::scan_string(Band::Plus, &cfg, (-2.0, -0.05), 40, 0.01) {
            Ok(rep) => {
                for (z, w) in rep.axis_samples {
                    fails.check(w == 0, w.unsigned_abs() as f64, || {
                        format!("winding {w} at z = {z}")
                    });
                }
            }
            Err(e) => fails.check(false, f64::INFINITY, || format!("lower scan failed: {e}")),
        }
        // Ring radius from the membership scan along the +X axis.
        let tol = 2.5e-4;
        let mut hits = Vec::new();
        for i in 0..=4000 {
            let r = 2.0 * i as f64 / 4000.0;
            if model::on_degeneracy_ring(ParamPoint::new(r, 0.0, 0.0), &cfg, tol) {
                hits.push(r);
            }
        }
        if hits.is_empty() {
            fails.check(false, f64::INFINITY, || "ring not located".into());
        } else {
            let radius = 0.5 * (hits[0] + hits[hits.len() - 1]);
            let err = (radius - 1.0).abs();
            fails.check(err <= 1e-3, err, || {
                format!("ring radius {radius:.5} (want 1 ± 1e-3)")
            });
        }
        fails.report(
            10,
            "string-vs-degeneracy",
            "windings split at z ≈ 0; ring radius 1 — distinct locations".into(),
        )
    }

    /// Soliton phases from the coupled solver match the linear-theory loop
    /// integrals for both compensation routes, ≤ 5e-2 rad per component.
    fn criterion_soliton_scheme(&self) -> CriterionReport {
        const TOL: f64 = 5e-2;
        let mcfg = ModelConfig::new(1.0);
        let mut fails = Failures::new();
        let grid: Vec<f64> = (0..8)
            .map(|i| 0.25 + (3.5 - 0.25) * i as f64 / 7.0)
            .collect();
        for &r in &grid {
            let spec = LoopSpec::new(0.5, r);
            let th_rr = geometry::loop_phase(ConnectionKind::RR, Band::Plus, &spec, &mcfg);
            let th_ti = geometry::loop_phase(ConnectionKind::TildeRR, Band::Plus, &spec, &mcfg);
            for (label, comp, theory) in [
                ("rr", Compensation::ExpectationEnergy, th_rr),
                ("tilde", Compensation::InstantaneousEigenvalue, th_ti),
            ] {
                let theory = match theory {
                    Ok(t) => t,
                    Err(ref e) => {
                        fails.check(false, f64::INFINITY, || {
                            format!("r = {r} {label}: theory failed: {e}")
                        });
                        continue;
                    }
                };
                let mut cfg = GpeConfig::new(-3.6e-6, 0.5, 1.0, 50.0, r, 0.03 * PI);
                cfg.compensation = comp;
                match gpe::gpe_evolve(&cfg) {
                    Ok(trace) => {
                        let got = trace.extracted_phase;
                        let err = circle_distance(got.re, theory.re)
                            .abs()
                            .max((got.im - theory.im).abs());
                        fails.check(err <= TOL, err, || {
                            format!("r = {r:.3} {label}: |Δ| = {err:.3e}")
                        });
                    }
                    Err(e) => fails.check(false, f64::INFINITY, || {
                        format!("r = {r:.3} {label} failed: {e}")
                    }),
                }
            }
        }
        fails.report(
            11,
            "soliton-phase-scheme",
            format!("8 radii x 2 routes, worst |Δ| = {:.2e} (tol 5e-2)", fails.worst),
        )
    }

    /// Median relative residual of the first-order energy-difference formula
    /// on the reference run ≤ 0.1.
    fn criterion_first_order_residual(&self) -> CriterionReport {
        let cfg = ModelConfig::new(reference_spec().z0);
        let mut fails = Failures::new();
        match self.reference_trace() {
            Ok(trace) => {
                let result = dynamics::project_coefficients(trace, &cfg)
                    .and_then(|c| dynamics::perturbative_delta_e_check(trace, &c, &cfg));
                match result {
                    Ok(res) => {
                        fails.check(res.median <= 0.1, res.median, || {
                            format!("median relative residual {:.4}", res.median)
                        });
                        return fails.report(
                            12,
                            "first-order-energy-residual",
                            format!(
                                "median relative residual {:.4} over {} samples (tol 0.1)",
                                res.median,
                                res.residuals.len()
                            ),
                        );
                    }
                    Err(e) => {
                        fails.check(false, f64::INFINITY, || format!("residuals failed: {e}"))
                    }
                }
            }
            Err(e) => fails.check(false, f64::INFINITY, || format!("reference run failed: {e}")),
        }
        fails.report(12, "first-order-energy-residual", String::new())
    }

    /// Step-halving shows the RK4 order; grid-doubling leaves the soliton
    /// phase unchanged; identical configurations give byte-identical CSVs.
    fn criterion_numerical_hygiene(&self) -> CriterionReport {
        let mut fails = Failures::new();
        let mut detail = String::new();

        // RK4 order on a shortened orbit.
        let mut spec = DriveSpec::new(0.5, 1.0, 0.01 * PI, 1.0, Band::Plus);
        let cfg = ModelConfig::new(spec.z0);
        let mut totals = Vec::new();
        for dt in [8e-3, 4e-3, 2e-3] {
            spec.dt = dt;
            let result = dynamics::evolve(&spec, &cfg)
                .and_then(|t| dynamics::phase_decompose(&t, &spec, &cfg));
            match result {
                Ok(d) => totals.push(d.phi_total),
                Err(e) => {
                    fails.check(false, f64::INFINITY, || format!("dt = {dt} failed: {e}"))
                }
            }
        }
        if totals.len() == 3 {
            let d1 = (totals[0] - totals[1]).norm();
            let d2 = (totals[1] - totals[2]).norm();
            let ratio = d1 / d2;
            fails.check((11.2..=20.8).contains(&ratio), ratio, || {
                format!("step-halving ratio {ratio:.2} outside 16 ± 30%")
            });
            let _ = write!(detail, "rk4 ratio {ratio:.1}; ");
        }

        // Spectral resolution: doubling the grid moves the extracted phase
        // by less than 1e-6.
        let mut phases = Vec::new();
        for n_grid in [2048usize, 4096] {
            let mut gcfg = GpeConfig::new(-3.6e-6, 0.5, 1.0, 50.0, 1.0, 0.03 * PI);
            gcfg.n_grid = n_grid;
            match gpe::gpe_evolve(&gcfg) {
                Ok(t) => phases.push(t.extracted_phase),
                Err(e) => fails.check(false, f64::INFINITY, || {
                    format!("n_grid = {n_grid} failed: {e}")
                }),
            }
        }
        if phases.len() == 2 {
            let diff = (phases[0] - phases[1]).norm();
            fails.check(diff <= 1e-6, diff, || {
                format!("grid doubling moved the phase by {diff:.3e} > 1e-6")
            });
            let _ = write!(detail, "grid-doubling shift {diff:.1e}; ");
        }

        // Determinism: repeated runs serialize to identical bytes.
        let mut quick = DriveSpec::new(0.5, 1.0, 0.05 * PI, 1.0, Band::Plus);
        quick.dt = 2e-3;
        let values = [0.5, 1.0, 1.5];
        let mk_csv = || {
            let rows = dynamics::sweep(SweepKind::Radius, &quick, &values, &cfg);
            dynamics::sweep_csv(SweepKind::Radius, &rows)
        };
        let a = mk_csv();
        let b = mk_csv();
        fails.check(a == b, if a == b { 0.0 } else { 1.0 }, || {
            "sweep CSV bytes differ between identical runs".into()
        });
        let mk_disk = || {
            geometry::disk_charge_map(
                ConnectionKind::TildeRR,
                Band::Plus,
                &ModelConfig::new(1.0),
                DiskGrid::new(2.2, 8, 8),
                1e-2,
            )
            .map(|rep| rep.to_csv())
        };
        match (mk_disk(), mk_disk()) {
            (Ok(a), Ok(b)) => fails.check(a == b, if a == b { 0.0 } else { 1.0 }, || {
                "disk CSV bytes differ between identical runs".into()
            }),
            _ => fails.check(false, f64::INFINITY, || "disk map failed".into()),
        }
        let _ = write!(detail, "byte-identical CSVs");

        fails.report(13, "numerical-hygiene", detail)
    }
}

/// Run the complete suite, printing one line per criterion.
pub fn run_all_printing() -> Vec<CriterionReport> {
    let suite = Suite::new();
    let mut out = Vec::new();
    for &(id, _) in CRITERIA.iter() {
        let rep = suite.run(id);
        println!("{}", rep.line());
        out.push(rep);
    }
    out
}
