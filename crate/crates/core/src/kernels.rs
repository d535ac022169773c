//! Per-agent arithmetic shared by the centralized solver and the simulator.
//!
//! Both paths call exactly these routines in the same order, so their
//! iterates agree bit for bit when fed the same neighbor data.

use crate::linalg::dist2;
use crate::sets::ConvexSet;

/// Growth factor applied to `r_i` while the criterion fails.
pub(crate) const R_GROWTH: f64 = 1.5;
/// Ratios at or below this shrink `r_i` after the correction.
pub(crate) const MU_SHRINK_THRESHOLD: f64 = 0.5;
pub(crate) const MU_SHRINK_DIVISOR: f64 = 0.7;

/// `out = Σ_j a_ij (own − peer_j)`, peers visited in the given order.
pub(crate) fn weighted_disagreement<'a>(
    own: &[f64],
    peers: impl Iterator<Item = (f64, &'a [f64])>,
    out: &mut [f64],
) {
    out.fill(0.0);
    for (a, peer) in peers {
        for ((o, x), y) in out.iter_mut().zip(own).zip(peer) {
            *o += a * (x - y);
        }
    }
}

/// `out = P_X[x − α (grad − coupling) / r]`
pub(crate) fn primal_step(
    x: &[f64],
    grad: &[f64],
    coupling: &[f64],
    r: f64,
    alpha: f64,
    set: &ConvexSet,
    out: &mut [f64],
) {
    for (((o, xi), g), c) in out.iter_mut().zip(x).zip(grad).zip(coupling) {
        *o = xi - alpha * (g - c) / r;
    }
    set.project_in_place(out);
}

/// `out = λ − coef · residual`
pub(crate) fn dual_step(lambda: &[f64], residual: &[f64], coef: f64, out: &mut [f64]) {
    for ((o, l), d) in out.iter_mut().zip(lambda).zip(residual) {
        *o = l - coef * d;
    }
}

/// `‖g(x) − g(x̃)‖ / (r ‖x − x̃‖)`, zero when `x̃ = x`.
pub(crate) fn gradient_ratio(x: &[f64], x_tilde: &[f64], grad: &[f64], grad_tilde: &[f64], r: f64) -> f64 {
    let dx = dist2(x, x_tilde);
    if dx == 0.0 {
        return 0.0;
    }
    dist2(grad, grad_tilde) / (r * dx)
}

pub(crate) fn dual_scale(eta: f64, r: f64, rho: f64) -> f64 {
    eta * eta * r / rho
}

pub(crate) fn grow_r(r: f64, mu: f64) -> f64 {
    r * R_GROWTH * mu.max(1.0)
}

/// Applies the post-correction decrease when `mu ≤ 0.5`, floored at `floor`.
pub(crate) fn shrink_r(r: f64, mu: f64, floor: f64) -> f64 {
    if mu <= MU_SHRINK_THRESHOLD {
        (r * (mu / MU_SHRINK_DIVISOR)).max(floor)
    } else {
        r
    }
}
