//! Independent oracles used by the verification suite and integration tests.
//!
//! These deliberately avoid the implementation paths they check: the Wilson
//! product works on raw eigenvector overlaps (no finite differences, no
//! adaptive quadrature), and the quadratic-formula eigensolver never touches
//! the explicit branch formulas.

use crate::cplx::{wrap_to_pi, Matrix2C, Vec2C, C64};
use crate::geometry::{ConnectionKind, LoopSpec};
use crate::model::{eigen_system, Band, ModelConfig};

/// Discrete loop integral from products of successive eigenvector overlaps
/// around a finely discretized circle, reduced to the principal branch.
///
/// For `RR` each segment contributes i·ln(⟨v_k|v_{k+1}⟩ / ⟨v_k|v_k⟩); for
/// `LR` the overlaps use the left eigenvector on the bra side. The TildeRR
/// form has no overlap-product expression; its oracle is the LR identity.
/// The log product carries an O(1/n) bias from the quadratic term of the
/// segment logs, removed by Richardson extrapolation over (n, 2n).
pub fn wilson_loop_phase(
    kind: ConnectionKind,
    band: Band,
    spec: &LoopSpec,
    cfg: &ModelConfig,
    n_segments: usize,
) -> C64 {
    let n = n_segments.max(1024);
    let coarse = wilson_raw(kind, band, spec, cfg, n);
    let fine = wilson_raw(kind, band, spec, cfg, 2 * n);
    let total = 2.0 * fine - coarse;
    C64::new(wrap_to_pi(total.re), total.im)
}

fn wilson_raw(
    kind: ConnectionKind,
    band: Band,
    spec: &LoopSpec,
    cfg: &ModelConfig,
    n: usize,
) -> C64 {
    let vec_at = |k: usize| {
        let theta = std::f64::consts::TAU * (k % n) as f64 / n as f64;
        eigen_system(spec.point(theta), cfg)
    };
    let mut total = C64::ZERO;
    let mut prev = vec_at(0);
    for k in 1..=n {
        let cur = vec_at(k);
        let ratio = match kind {
            ConnectionKind::RR => {
                let v0 = prev.right(band);
                v0.dot(&cur.right(band)) / v0.norm_sq()
            }
            ConnectionKind::LR | ConnectionKind::TildeRR => {
                let l0 = prev.left(band);
                let v0 = prev.right(band);
                l0.dot(&cur.right(band)) / l0.dot(&v0)
            }
        };
        total += C64::i() * ratio.ln();
        prev = cur;
    }
    if spec.orientation == crate::geometry::Orientation::Cw {
        total = -total;
    }
    total
}

/// Eigen-decomposition of an arbitrary 2×2 complex matrix through the
/// quadratic formula, branch picked by positive real part of the eigenvalue.
///
/// Returns (e_plus, e_minus, v_plus, v_minus); each eigenvector is the
/// larger-residual row choice of the singular matrix H - λI, unnormalized.
pub fn brute_eigen(h: &Matrix2C) -> (C64, C64, Vec2C, Vec2C) {
    let tr = h.trace();
    let det = h.det();
    let disc = (tr * tr - 4.0 * det).sqrt();
    let l1 = (tr + disc) / 2.0;
    let l2 = (tr - disc) / 2.0;
    let (e_plus, e_minus) = if l1.re >= l2.re { (l1, l2) } else { (l2, l1) };
    let vec_for = |lambda: C64| -> Vec2C {
        // Null vector of H - λI from whichever row has the larger norm.
        let r1 = (h.m[0][0] - lambda, h.m[0][1]);
        let r2 = (h.m[1][0], h.m[1][1] - lambda);
        let n1 = r1.0.norm_sqr() + r1.1.norm_sqr();
        let n2 = r2.0.norm_sqr() + r2.1.norm_sqr();
        if n1 >= n2 {
            Vec2C::new(-r1.1, r1.0)
        } else {
            Vec2C::new(-r2.1, r2.0)
        }
    };
    (e_plus, e_minus, vec_for(e_plus), vec_for(e_minus))
}
