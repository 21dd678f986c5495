//! Time-dependent Schrödinger evolution along parameter-space orbits and the
//! total/dynamical/geometric phase decomposition.
//!
//! The state is driven around the circle X = r cos(ωt), Y = r sin(ωt) at
//! fixed Z with classical fixed-step RK4. After every step the state is
//! multiplied by the compensatory factor exp(+i E_c dt), which cancels the
//! dynamical phase (and the non-Hermitian amplitude growth) as it
//! accumulates; the applied integral is recorded exactly and restored in the
//! decomposition, so the choice of compensation only affects numerical
//! conditioning.
//!
//! Recorded states are the compensated ones. The running phase track sums
//! per-step overlap arguments of the compensated state; with compensation
//! active the track stays near zero, which pins the unwrapped total phase —
//! and hence the geometric phase — to the measurable representative in
//! (-π, π], matching the reduced loop integrals of [`crate::geometry`].

use crate::cplx::{Matrix2C, Vec2C, C64};
use crate::error::{Error, Result};
use crate::geometry::{self, ConnectionKind, LoopSpec};
use crate::model::{
    eigen_system, eigen_system_checked, hamiltonian, Band, EigenSystem, ModelConfig, ParamPoint,
};
use crate::quadrature::{Kahan, KahanC};
use serde::Serialize;
use std::f64::consts::TAU;

/// How the compensatory energy E_c is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Compensation {
    /// E(t) = ⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩ at the step midpoint.
    ExpectationEnergy,
    /// The instantaneous branch eigenvalue E_band(R) at the step midpoint.
    InstantaneousEigenvalue,
    /// No compensation (long gain runs will overflow the norm guard).
    None,
}

/// Orbit and integration parameters for one evolution run.
///
/// `z0` here is authoritative; the `ModelConfig` passed to [`evolve`] only
/// contributes its degeneracy tolerance, so sweeps can vary `z0` per row.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DriveSpec {
    pub z: f64,
    pub r: f64,
    pub omega: f64,
    pub n_periods: f64,
    pub z0: f64,
    pub band: Band,
    pub compensation: Compensation,
    /// Target step; the actual step is adjusted so an integer number of
    /// steps lands exactly on the final time.
    pub dt: f64,
    /// Minimum acceptable fidelity along the trace.
    pub fidelity_floor: f64,
}

impl DriveSpec {
    pub fn new(z: f64, r: f64, omega: f64, z0: f64, band: Band) -> Self {
        Self {
            z,
            r,
            omega,
            n_periods: 1.0,
            z0,
            band,
            compensation: Compensation::ExpectationEnergy,
            dt: 2e-3,
            fidelity_floor: 0.99,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::InvalidConfig("omega must be positive".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        if self.omega * self.dt > 1e-3 {
            return Err(Error::InvalidConfig(format!(
                "omega * dt = {:.2e} exceeds the 1e-3 resolution guard",
                self.omega * self.dt
            )));
        }
        if !(self.n_periods > 0.0) {
            return Err(Error::InvalidConfig("n_periods must be positive".into()));
        }
        if !(self.r > 0.0) {
            return Err(Error::InvalidConfig("orbit radius must be positive".into()));
        }
        match self.band {
            Band::Plus if !(self.z > 0.0) => Err(Error::InvalidConfig(
                "the + band is only adiabatic in the upper half-space (Z > 0)".into(),
            )),
            Band::Minus if !(self.z < 0.0) => Err(Error::InvalidConfig(
                "the - band is only adiabatic in the lower half-space (Z < 0)".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    pub fn total_time(&self) -> f64 {
        self.period() * self.n_periods
    }

    fn model_config(&self, cfg: &ModelConfig) -> ModelConfig {
        ModelConfig {
            z0: self.z0,
            degeneracy_tol: cfg.degeneracy_tol,
        }
    }

    fn loop_spec(&self) -> LoopSpec {
        LoopSpec::new(self.z, self.r)
    }
}

/// Time series of one evolution run (states are compensated).
#[derive(Clone, Debug, Serialize)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub states: Vec<Vec2C>,
    pub fidelity: Vec<f64>,
    pub energy_expect: Vec<C64>,
    pub energy_eigen: Vec<C64>,
    pub delta_e: Vec<C64>,
    /// Running unwrapped phase of the compensated state at each record.
    pub phase_track: Vec<f64>,
    /// Running ∫ E_c dt at each record.
    pub comp_running: Vec<C64>,
    /// Final ∫ E_c dt (exact record of the applied factors).
    pub comp_integral: C64,
    /// ∫ E(t) dt accumulated at full step resolution.
    pub int_energy_expect: C64,
    /// ∫ E_band(R(t)) dt accumulated at full step resolution.
    pub int_energy_eigen: C64,
    /// ∫ ΔE dt accumulated at full step resolution.
    pub int_delta_e: C64,
    pub min_fidelity: f64,
    pub spec: DriveSpec,
}

/// Complex phase bookkeeping after an integer number of periods.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PhaseDecomposition {
    pub phi_total: C64,
    /// -∫ E(t) dt.
    pub phi_d: C64,
    /// -∫ E_band(R) dt.
    pub phi_d_tilde: C64,
    /// phi_total - phi_d.
    pub phi_g: C64,
    /// phi_total - phi_d_tilde.
    pub phi_g_tilde: C64,
    /// Reduced loop integral of the RR connection.
    pub phi_g_theory_rr: C64,
    /// Reduced loop integral of the TildeRR connection.
    pub phi_g_theory_tilde: C64,
    /// phi_d - phi_d_tilde.
    pub delta_phi_d: C64,
    /// Difference of the raw theory loop integrals (branch-free).
    pub delta_phi_g: C64,
    /// ∫ ΔE dt from the evolution accumulator.
    pub int_delta_e: C64,
    pub min_fidelity: f64,
}

/// Expectation value ⟨state|H|state⟩ / ⟨state|state⟩.
pub fn expectation_energy(state: &Vec2C, h: &Matrix2C) -> Result<C64> {
    let nn = state.norm_sq();
    if nn == 0.0 {
        return Err(Error::ZeroState);
    }
    Ok(state.dot(&h.mul_vec(state)) / nn)
}

/// Squared overlap of the unit-normalized state with the unit-normalized
/// right eigenvector of the band.
pub fn fidelity(state: &Vec2C, es: &EigenSystem, band: Band) -> Result<f64> {
    let v = es.right(band);
    let ns = state.norm_sq();
    let nv = v.norm_sq();
    if ns == 0.0 || nv == 0.0 {
        return Err(Error::ZeroState);
    }
    Ok(state.dot(&v).norm_sqr() / (ns * nv))
}

/// dψ/dt = -i H(R(t)) ψ.
#[inline]
fn deriv(h: &Matrix2C, psi: &Vec2C) -> Vec2C {
    let hp = h.mul_vec(psi);
    Vec2C::new(C64::new(hp.c0.im, -hp.c0.re), C64::new(hp.c1.im, -hp.c1.re))
}

/// Integrate one orbit (or several periods) of the driven two-level system.
pub fn evolve(spec: &DriveSpec, cfg: &ModelConfig) -> Result<EvolutionTrace> {
    spec.validate()?;
    let mcfg = spec.model_config(cfg);
    let total_angle = TAU * spec.n_periods;
    let total_time = spec.total_time();
    let n_steps = ((total_time / spec.dt).round() as usize).max(1);
    let dt = total_time / n_steps as f64;
    // Angle as an exact fraction of the full sweep so the orbit closes.
    let angle_at = |k_half: f64| total_angle * k_half / n_steps as f64;
    let point_at = |ang: f64| ParamPoint::new(spec.r * ang.cos(), spec.r * ang.sin(), spec.z);

    let es0 = eigen_system_checked(point_at(0.0), &mcfg)?;
    let mut psi = es0.right(spec.band);
    if psi.norm() < geometry::STRING_NORM_TOL {
        return Err(Error::StringProximity {
            x: spec.r,
            y: 0.0,
            z: spec.z,
            norm: psi.norm(),
        });
    }
    psi = psi.normalized();

    let stride = n_steps.div_ceil(4096);
    let mut trace = EvolutionTrace {
        times: Vec::new(),
        states: Vec::new(),
        fidelity: Vec::new(),
        energy_expect: Vec::new(),
        energy_eigen: Vec::new(),
        delta_e: Vec::new(),
        phase_track: Vec::new(),
        comp_running: Vec::new(),
        comp_integral: C64::ZERO,
        int_energy_expect: C64::ZERO,
        int_energy_eigen: C64::ZERO,
        int_delta_e: C64::ZERO,
        min_fidelity: 1.0,
        spec: *spec,
    };

    let mut comp = KahanC::default();
    let mut int_e = KahanC::default();
    let mut int_ee = KahanC::default();
    let mut int_de = KahanC::default();
    let mut track = Kahan::default();
    let mut min_fid = f64::INFINITY;

    let record = |k: usize,
                      psi: &Vec2C,
                      track: &Kahan,
                      comp: &KahanC,
                      trace: &mut EvolutionTrace,
                      min_fid: &mut f64|
     -> Result<()> {
        let t = k as f64 * dt;
        let p = point_at(angle_at(k as f64));
        let es = eigen_system(p, &mcfg);
        let h = hamiltonian(p, &mcfg);
        let e_expect = expectation_energy(psi, &h)?;
        let e_eigen = es.energy(spec.band);
        let fid = fidelity(psi, &es, spec.band)?;
        *min_fid = min_fid.min(fid);
        trace.times.push(t);
        trace.states.push(*psi);
        trace.fidelity.push(fid);
        trace.energy_expect.push(e_expect);
        trace.energy_eigen.push(e_eigen);
        trace.delta_e.push(e_eigen - e_expect);
        trace.phase_track.push(track.value());
        trace.comp_running.push(comp.value());
        Ok(())
    };

    record(0, &psi, &track, &comp, &mut trace, &mut min_fid)?;

    for k in 0..n_steps {
        let h0 = hamiltonian(point_at(angle_at(k as f64)), &mcfg);
        let hm = hamiltonian(point_at(angle_at(k as f64 + 0.5)), &mcfg);
        let h1 = hamiltonian(point_at(angle_at(k as f64 + 1.0)), &mcfg);

        let k1 = deriv(&h0, &psi);
        let k2 = deriv(&hm, &psi.add(&k1.scale(C64::new(0.5 * dt, 0.0))));
        let k3 = deriv(&hm, &psi.add(&k2.scale(C64::new(0.5 * dt, 0.0))));
        let k4 = deriv(&h1, &psi.add(&k3.scale(C64::new(dt, 0.0))));
        let mut next = psi;
        next = next.add(&k1.scale(C64::new(dt / 6.0, 0.0)));
        next = next.add(&k2.scale(C64::new(dt / 3.0, 0.0)));
        next = next.add(&k3.scale(C64::new(dt / 3.0, 0.0)));
        next = next.add(&k4.scale(C64::new(dt / 6.0, 0.0)));

        // Midpoint energies: expectation from the averaged state, eigenvalue
        // from the midpoint of the orbit.
        let mid_state = psi.add(&next).scale(C64::new(0.5, 0.0));
        let e_mid = expectation_energy(&mid_state, &hm)?;
        let p_mid = point_at(angle_at(k as f64 + 0.5));
        let e_eig_mid = eigen_system(p_mid, &mcfg).energy(spec.band);

        let e_c = match spec.compensation {
            Compensation::ExpectationEnergy => e_mid,
            Compensation::InstantaneousEigenvalue => e_eig_mid,
            Compensation::None => C64::ZERO,
        };
        let next = next.scale((C64::i() * e_c * dt).exp());

        comp.add(e_c * dt);
        int_e.add(e_mid * dt);
        int_ee.add(e_eig_mid * dt);
        int_de.add((e_eig_mid - e_mid) * dt);

        let step_arg = psi.dot(&next).arg();
        if step_arg.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(Error::PhaseUnwrapAmbiguous {
                t: (k + 1) as f64 * dt,
                increment: step_arg,
            });
        }
        track.add(step_arg);

        let nn = next.norm_sq();
        if !nn.is_finite() || nn > 1e200 {
            return Err(Error::StepUnstable {
                t: (k + 1) as f64 * dt,
                norm: nn.sqrt(),
            });
        }
        psi = next;

        if (k + 1) % stride == 0 || k + 1 == n_steps {
            record(k + 1, &psi, &track, &comp, &mut trace, &mut min_fid)?;
        }
    }

    trace.comp_integral = comp.value();
    trace.int_energy_expect = int_e.value();
    trace.int_energy_eigen = int_ee.value();
    trace.int_delta_e = int_de.value();
    trace.min_fidelity = min_fid;

    if min_fid < spec.fidelity_floor {
        return Err(Error::AdiabaticityBroken {
            min_fidelity: min_fid,
            floor: spec.fidelity_floor,
        });
    }
    Ok(trace)
}

/// Total phase of the compensated trace: principal argument of the final
/// overlap, unwrapped against the running phase track; imaginary part from
/// the norm ratio.
fn compensated_total_phase(trace: &EvolutionTrace) -> C64 {
    let first = &trace.states[0];
    let last = trace.states.last().expect("trace is never empty");
    let overlap = first.dot(last);
    let principal = overlap.arg();
    let track = *trace.phase_track.last().expect("trace is never empty");
    let k = ((track - principal) / TAU).round();
    let re = principal + TAU * k;
    let im = -(last.norm() / first.norm()).ln();
    C64::new(re, im)
}

/// Decompose the trace into total, dynamical, and geometric phases, and
/// attach the loop-integral theory values.
pub fn phase_decompose(
    trace: &EvolutionTrace,
    spec: &DriveSpec,
    cfg: &ModelConfig,
) -> Result<PhaseDecomposition> {
    if (spec.n_periods - spec.n_periods.round()).abs() > 1e-9 {
        return Err(Error::InvalidConfig(
            "phase decomposition needs an integer number of periods".into(),
        ));
    }
    let mcfg = spec.model_config(cfg);
    let phi_total = compensated_total_phase(trace) - trace.comp_integral;
    let phi_d = -trace.int_energy_expect;
    let phi_d_tilde = -trace.int_energy_eigen;
    let phi_g = phi_total - phi_d;
    let phi_g_tilde = phi_total - phi_d_tilde;

    let loop_spec = spec.loop_spec();
    let n = spec.n_periods;
    let raw_rr = geometry::loop_phase_raw(ConnectionKind::RR, spec.band, &loop_spec, &mcfg)? * n;
    let raw_tilde =
        geometry::loop_phase_raw(ConnectionKind::TildeRR, spec.band, &loop_spec, &mcfg)? * n;
    let phi_g_theory_rr = C64::new(crate::cplx::wrap_to_pi(raw_rr.re), raw_rr.im);
    let phi_g_theory_tilde = C64::new(crate::cplx::wrap_to_pi(raw_tilde.re), raw_tilde.im);

    Ok(PhaseDecomposition {
        phi_total,
        phi_d,
        phi_d_tilde,
        phi_g,
        phi_g_tilde,
        phi_g_theory_rr,
        phi_g_theory_tilde,
        delta_phi_d: phi_d - phi_d_tilde,
        delta_phi_g: raw_tilde - raw_rr,
        int_delta_e: trace.int_delta_e,
        min_fidelity: trace.min_fidelity,
    })
}

/// The three routes to the dynamical/geometric phase difference.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeltaRelation {
    /// phi_d - phi_d_tilde from the two dynamical-phase integrals.
    pub delta_phi_d: C64,
    /// Difference of the raw theory loop integrals.
    pub delta_phi_g: C64,
    /// ∫ ΔE dt accumulated along the run.
    pub int_delta_e: C64,
    /// max per-component |delta_phi_d - delta_phi_g|.
    pub resid_d_vs_g: f64,
    /// max per-component |delta_phi_d - int_delta_e|.
    pub resid_d_vs_int: f64,
}

fn max_component(z: C64) -> f64 {
    z.re.abs().max(z.im.abs())
}

/// Compute the phase-difference relation three independent ways.
pub fn delta_relation(
    trace: &EvolutionTrace,
    spec: &DriveSpec,
    cfg: &ModelConfig,
) -> Result<DeltaRelation> {
    let dec = phase_decompose(trace, spec, cfg)?;
    Ok(DeltaRelation {
        delta_phi_d: dec.delta_phi_d,
        delta_phi_g: dec.delta_phi_g,
        int_delta_e: dec.int_delta_e,
        resid_d_vs_g: max_component(dec.delta_phi_d - dec.delta_phi_g),
        resid_d_vs_int: max_component(dec.delta_phi_d - dec.int_delta_e),
    })
}

/// Instantaneous-basis expansion amplitudes along the trace.
///
/// Coefficients are taken against unit-normalized fixed-gauge eigenvectors,
/// with the accumulated connection integrals γ_± (TildeRR form along the
/// realized path) and eigenvalue integrals φ_± = -∫E_± dt divided out, so a
/// band-pure initial state has c1(0) = 1, c2(0) = 0. For gain systems |c2|
/// grows like exp(2∫b dt) and can overflow on long runs; `c02` carries the
/// bounded combination c2 · exp(i(γ_- - γ_+) + i(φ_- - φ_+)) that the
/// first-order energy-difference formula uses.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectionCoefficients {
    pub times: Vec<f64>,
    pub c1: Vec<C64>,
    pub c2: Vec<C64>,
    pub c02: Vec<C64>,
}

pub fn project_coefficients(
    trace: &EvolutionTrace,
    cfg: &ModelConfig,
) -> Result<ProjectionCoefficients> {
    let spec = &trace.spec;
    let mcfg = spec.model_config(cfg);
    let total_angle = TAU * spec.n_periods;
    let total_time = spec.total_time();
    let point_at = |t: f64| {
        let ang = total_angle * t / total_time;
        ParamPoint::new(spec.r * ang.cos(), spec.r * ang.sin(), spec.z)
    };
    let velocity_at = |t: f64| {
        let ang = total_angle * t / total_time;
        [
            -spec.r * spec.omega * ang.sin(),
            spec.r * spec.omega * ang.cos(),
            0.0,
        ]
    };

    let n = trace.times.len();
    let mut c1 = Vec::with_capacity(n);
    let mut c2 = Vec::with_capacity(n);
    let mut c02 = Vec::with_capacity(n);

    // Trapezoid accumulators along the realized path.
    let mut gamma_p = C64::ZERO;
    let mut gamma_m = C64::ZERO;
    let mut int_ep = C64::ZERO;
    let mut prev: Option<(f64, C64, C64, C64)> = None; // (t, A+·Ṙ, A-·Ṙ, e_plus)

    for (i, &t) in trace.times.iter().enumerate() {
        let p = point_at(t);
        let es = eigen_system_checked(p, &mcfg)?;
        let h = geometry::default_connection_step(p);
        let a_p = geometry::connection(ConnectionKind::TildeRR, Band::Plus, p, &mcfg, h)?;
        let a_m = geometry::connection(ConnectionKind::TildeRR, Band::Minus, p, &mcfg, h)?;
        let v = velocity_at(t);
        let f_p = a_p.a[0] * v[0] + a_p.a[1] * v[1] + a_p.a[2] * v[2];
        let f_m = a_m.a[0] * v[0] + a_m.a[1] * v[1] + a_m.a[2] * v[2];
        if let Some((t0, f_p0, f_m0, e0)) = prev {
            let dt = t - t0;
            gamma_p += (f_p0 + f_p) * 0.5 * dt;
            gamma_m += (f_m0 + f_m) * 0.5 * dt;
            int_ep += (e0 + es.e_plus) * 0.5 * dt;
        }
        prev = Some((t, f_p, f_m, es.e_plus));

        // φ_± = -∫ E_± dt; E_- = -E_+ for this model.
        let phi_p = -int_ep;
        let phi_m = int_ep;

        let up = es.right_plus.normalized();
        let um = es.right_minus.normalized();
        let lp = es.left_plus;
        let lm = es.left_minus;
        let chi = &trace.states[i];
        let proj_p = lp.dot(chi) / lp.dot(&up);
        let proj_m = lm.dot(chi) / lm.dot(&um);
        let comp = trace.comp_running[i];

        // c = proj(χ) · exp(-i ∫E_c) · exp(-iγ) · exp(-iφ), assembled in log
        // space so growing and decaying factors cancel before exponentiating.
        let log_shift_1 = -C64::i() * (comp + gamma_p + phi_p);
        let c1_val = if proj_p.norm() == 0.0 {
            C64::ZERO
        } else {
            (proj_p.ln() + log_shift_1).exp()
        };
        let log_shift_2 = -C64::i() * (comp + gamma_m + phi_m);
        let c2_val = if proj_m.norm() == 0.0 {
            C64::ZERO
        } else {
            (proj_m.ln() + log_shift_2).exp()
        };
        c1.push(c1_val);
        c2.push(c2_val);
        // c02 = (proj_m / proj_p) · c1 stays bounded for adiabatic runs.
        c02.push(proj_m / proj_p * c1_val);
    }

    Ok(ProjectionCoefficients {
        times: trace.times.clone(),
        c1,
        c2,
        c02,
    })
}

/// Residuals of the first-order energy-difference formula along the trace.
#[derive(Clone, Debug, Serialize)]
pub struct DeltaEResiduals {
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
    pub median: f64,
    /// True when every sample sat below the 1e-10 floor (Hermitian case).
    pub all_below_floor: bool,
}

/// Compare ΔE(t) from the trace with the first-order prediction
/// (E_+ - E_-) ⟨u_+|u_-⟩ c02 / c1 over the middle 90% of the run.
pub fn perturbative_delta_e_check(
    trace: &EvolutionTrace,
    coeffs: &ProjectionCoefficients,
    cfg: &ModelConfig,
) -> Result<DeltaEResiduals> {
    let spec = &trace.spec;
    let mcfg = spec.model_config(cfg);
    let total_angle = TAU * spec.n_periods;
    let total_time = spec.total_time();
    let lo = total_time * 0.05;
    let hi = total_time * 0.95;

    let mut times = Vec::new();
    let mut residuals = Vec::new();
    let mut any_above = false;
    for (i, &t) in trace.times.iter().enumerate() {
        if t < lo || t > hi {
            continue;
        }
        let ang = total_angle * t / total_time;
        let p = ParamPoint::new(spec.r * ang.cos(), spec.r * ang.sin(), spec.z);
        let es = eigen_system_checked(p, &mcfg)?;
        let lhs = trace.delta_e[i];
        if lhs.norm() < 1e-10 {
            continue;
        }
        any_above = true;
        let up = es.right_plus.normalized();
        let um = es.right_minus.normalized();
        let rhs = (es.e_plus - es.e_minus) * up.dot(&um) * coeffs.c02[i] / coeffs.c1[i];
        times.push(t);
        residuals.push((rhs - lhs).norm() / lhs.norm());
    }
    let median = if residuals.is_empty() {
        0.0
    } else {
        let mut sorted = residuals.clone();
        sorted.sort_by(f64::total_cmp);
        sorted[sorted.len() / 2]
    };
    Ok(DeltaEResiduals {
        times,
        residuals,
        median,
        all_below_floor: !any_above,
    })
}

/// Which drive parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepKind {
    Radius,
    Z0,
    Omega,
}

impl SweepKind {
    pub fn column(&self) -> &'static str {
        match self {
            SweepKind::Radius => "r",
            SweepKind::Z0 => "z0",
            SweepKind::Omega => "omega",
        }
    }
}

/// One sweep row; failed rows keep their error message.
#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub result: std::result::Result<PhaseDecomposition, String>,
}

/// Run evolve + phase_decompose across a table of parameter values.
pub fn sweep(kind: SweepKind, base: &DriveSpec, values: &[f64], cfg: &ModelConfig) -> Vec<SweepRow> {
    values
        .iter()
        .map(|&value| {
            let mut spec = *base;
            match kind {
                SweepKind::Radius => spec.r = value,
                SweepKind::Z0 => spec.z0 = value,
                SweepKind::Omega => spec.omega = value,
            }
            let result = evolve(&spec, cfg)
                .and_then(|trace| phase_decompose(&trace, &spec, cfg))
                .map_err(|e| e.to_string());
            SweepRow { value, result }
        })
        .collect()
}

/// CSV for a sweep table: swept value, measured and theory phases, deltas.
pub fn sweep_csv(kind: SweepKind, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    crate::report::push_header(
        &mut out,
        &[
            kind.column(),
            "phi_g_re",
            "phi_g_im",
            "phi_g_tilde_re",
            "phi_g_tilde_im",
            "theory_rr_re",
            "theory_rr_im",
            "theory_tilde_re",
            "theory_tilde_im",
            "delta_phi_d_re",
            "delta_phi_d_im",
            "delta_phi_g_re",
            "delta_phi_g_im",
            "min_fidelity",
        ],
    );
    for row in rows {
        if let Ok(d) = &row.result {
            crate::report::push_row(
                &mut out,
                &[
                    row.value,
                    d.phi_g.re,
                    d.phi_g.im,
                    d.phi_g_tilde.re,
                    d.phi_g_tilde.im,
                    d.phi_g_theory_rr.re,
                    d.phi_g_theory_rr.im,
                    d.phi_g_theory_tilde.re,
                    d.phi_g_theory_tilde.im,
                    d.delta_phi_d.re,
                    d.delta_phi_d.im,
                    d.delta_phi_g.re,
                    d.delta_phi_g.im,
                    d.min_fidelity,
                ],
            );
        }
    }
    out
}

/// CSV for an evolution trace.
pub fn trace_csv(trace: &EvolutionTrace) -> String {
    let mut out = String::new();
    crate::report::push_header(
        &mut out,
        &[
            "t",
            "fidelity",
            "e_expect_re",
            "e_expect_im",
            "e_eigen_re",
            "e_eigen_im",
            "delta_e_re",
            "delta_e_im",
            "phase_track",
        ],
    );
    for i in 0..trace.times.len() {
        crate::report::push_row(
            &mut out,
            &[
                trace.times[i],
                trace.fidelity[i],
                trace.energy_expect[i].re,
                trace.energy_expect[i].im,
                trace.energy_eigen[i].re,
                trace.energy_eigen[i].im,
                trace.delta_e[i].re,
                trace.delta_e[i].im,
                trace.phase_track[i],
            ],
        );
    }
    out
}
