//! One time-slice of every monitored functional and inequality residual.

use crate::dynamics::State;
use crate::functionals;

/// Snapshot of the monitored quantities along a trajectory. The energy-law
/// residual is a centered difference over stored samples, so it can only be
/// filled in post hoc at interior output times.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub u_l2: f64,
    pub u_h1: f64,
    pub w_l2: f64,
    pub min_w: f64,
    pub mean_u: f64,
    pub mean_w: f64,
    pub entropy_q: f64,
    pub orlicz_w: f64,
    /// `int Q(w) + ||u||_{H^1}^2 / 2`
    pub energy_e: f64,
    pub dissipation_u: f64,
    pub dissipation_w: f64,
    pub sqrtw_h1: f64,
    /// `1/4 + ||f||^2/(4 pi - 2) + e^{-t} E(0)`
    pub envelope: f64,
    pub energy_law_residual: Option<f64>,
    pub u_h2: f64,
    pub w_h2: f64,
}

impl DiagnosticsRecord {
    /// Measures every column from a valid state. `f_l2` is the forcing
    /// amplitude of the run, `e0` the energy at the trajectory start, and
    /// `t0` the start time (the envelope decays in elapsed time, which
    /// matters for resumed runs).
    pub fn measure(state: &State, f_l2: f64, e0: f64, t0: f64) -> Self {
        let u = state.u();
        let w = state.w();
        // The state invariant guarantees w > 0 and unit mean, so none of the
        // functionals below can fail.
        let entropy_q = functionals::entropy(w).expect("state invariant: w > 0");
        let u_h1 = u.h1_norm();
        let semi = u.h1_seminorm();
        DiagnosticsRecord {
            t: state.t(),
            u_l2: u.l2_norm(),
            u_h1,
            w_l2: w.l2_norm(),
            min_w: w.min_value(),
            mean_u: u.mean(),
            mean_w: w.mean(),
            entropy_q,
            orlicz_w: functionals::orlicz_norm(w).expect("state invariant: w not zero"),
            energy_e: entropy_q + 0.5 * u_h1 * u_h1,
            dissipation_u: semi * semi,
            dissipation_w: functionals::dissipation_w(w).expect("state invariant: w > 0"),
            sqrtw_h1: functionals::sqrtw_h1(w).expect("state invariant: w > 0"),
            envelope: functionals::apriori_envelope(state.t() - t0, e0, f_l2),
            energy_law_residual: None,
            u_h2: u.h2_norm(),
            w_h2: w.h2_norm(),
        }
    }
}
