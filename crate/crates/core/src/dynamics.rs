//! The damped-forced evolution system and its time discretization.
//!
//! After inverting the Helmholtz operator on the velocity equation the
//! semi-discrete system reads
//!
//! ```text
//! u_t = (I - dxx)^{-1} [ f + u_xx - w_x - dealias(u u_x) ]
//! w_t = w_xx - dealias((w u)_x)
//! ```
//!
//! Only the height diffusion is stiff (the inverted Helmholtz operator caps
//! the velocity symbol at 1), so the stepper integrates `w_xx` exactly with
//! a per-mode exponential factor and treats everything else explicitly in a
//! two-stage second-order exponential scheme. Means are pinned to their
//! conserved values after every step, correcting pure roundoff drift.

use crate::spectral::{dealiased_product, Field, Grid};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(
        "height positivity lost at t = {t} (min w = {min_w:e} near x = {x}); refine resolution"
    )]
    PositivityLost { t: f64, x: f64, min_w: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// A solution snapshot: velocity `u` (zero mean), height `w` (unit mean,
/// strictly positive), and the model time.
#[derive(Debug, Clone)]
pub struct State {
    u: Field,
    w: Field,
    t: f64,
}

impl State {
    pub fn new(u: Field, w: Field, t: f64) -> Result<Self, DynamicsError> {
        if u.grid() != w.grid() {
            return Err(DynamicsError::InvalidState(
                "u and w live on different grids".into(),
            ));
        }
        if u.mean().abs() >= 1e-10 {
            return Err(DynamicsError::InvalidState(format!(
                "u must be mean-free, mean = {:e}",
                u.mean()
            )));
        }
        if (w.mean() - 1.0).abs() >= 1e-10 {
            return Err(DynamicsError::InvalidState(format!(
                "w must have unit mean, mean = {:e}",
                w.mean()
            )));
        }
        let min_w = w.min_value();
        if min_w <= 0.0 {
            return Err(DynamicsError::InvalidState(format!(
                "w must be strictly positive, min = {min_w:e}"
            )));
        }
        Ok(State { u, w, t })
    }

    /// Constructor for states produced by the stepper, which has already
    /// pinned the means and checked positivity.
    pub(crate) fn trusted(u: Field, w: Field, t: f64) -> Self {
        debug_assert!(u.mean().abs() < 1e-10);
        debug_assert!((w.mean() - 1.0).abs() < 1e-10);
        debug_assert!(w.min_value() > 0.0);
        State { u, w, t }
    }

    /// The rest state `(u, w) = (0, 1)`.
    pub fn equilibrium(grid: Grid) -> Self {
        State { u: Field::zero(grid), w: Field::constant(grid, 1.0), t: 0.0 }
    }

    pub fn u(&self) -> &Field {
        &self.u
    }

    pub fn w(&self) -> &Field {
        &self.w
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> Grid {
        self.u.grid()
    }
}

/// One forcing component `cos_amp * cos(2 pi k x) + sin_amp * sin(2 pi k x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingMode {
    pub k: usize,
    pub cos_amp: f64,
    pub sin_amp: f64,
}

/// Run parameters for [`integrate`]. The scheme order is fixed at 2.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub forcing: Vec<ForcingMode>,
    pub output_every: usize,
}

impl SolverConfig {
    pub const SCHEME_ORDER: u32 = 2;

    pub fn validate(&self) -> Result<(), DynamicsError> {
        Grid::new(self.n).map_err(|e| DynamicsError::InvalidConfig(e.to_string()))?;
        if self.dt.is_nan() || self.dt <= 0.0 {
            return Err(DynamicsError::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.t_end < 0.0 {
            return Err(DynamicsError::InvalidConfig("t_end must be >= 0".into()));
        }
        if self.output_every == 0 {
            return Err(DynamicsError::InvalidConfig(
                "output_every must be >= 1".into(),
            ));
        }
        for mode in &self.forcing {
            if mode.k == 0 {
                return Err(DynamicsError::InvalidConfig(
                    "forcing must be mean-free: k = 0 entries are not allowed".into(),
                ));
            }
            if 3 * mode.k > self.n {
                return Err(DynamicsError::InvalidConfig(format!(
                    "forcing mode k = {} lies above the dealiasing cutoff n/3",
                    mode.k
                )));
            }
        }
        Ok(())
    }

    /// Builds the forcing field by direct coefficient placement (exact).
    pub fn forcing_field(&self, grid: Grid) -> Field {
        forcing_field(grid, &self.forcing)
    }
}

pub fn forcing_field(grid: Grid, modes: &[ForcingMode]) -> Field {
    let n = grid.n();
    let mut c = vec![Complex64::ZERO; n];
    for mode in modes {
        debug_assert!(mode.k >= 1 && mode.k < n / 2);
        let half = Complex64::new(0.5 * mode.cos_amp, -0.5 * mode.sin_amp);
        c[mode.k] += half;
        c[n - mode.k] += half.conj();
    }
    Field::from_coefficients(grid, c)
}

/// Full velocity tendency `(I - dxx)^{-1}[f + u_xx - w_x - dealias(u u_x)]`.
fn u_tendency(u: &Field, w: &Field, f: &Field) -> Field {
    let u_xx = u.derivative(2);
    let w_x = w.derivative(1);
    let advect = dealiased_product(u, &u.derivative(1));
    let combo = &(&(f + &u_xx) - &w_x) - &advect;
    combo.helmholtz_solve()
}

/// Transport part of the height tendency, `-dealias((w u)_x)`; the diffusion
/// `w_xx` is handled separately by the integrating factor.
fn w_transport(u: &Field, w: &Field) -> Field {
    w.pointwise_mul(u).derivative(1).dealias().scale(-1.0)
}

/// Right-hand side of the evolution system. Both tendencies are mean-free.
pub fn rhs(state: &State, f: &Field) -> (Field, Field) {
    let du = u_tendency(state.u(), state.w(), f);
    let dw = &state.w().derivative(2) + &w_transport(state.u(), state.w());
    (du, dw)
}

fn phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        // series: avoids the exp_m1(z) - z cancellation
        0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// Per-mode exponential tables for a fixed `(grid, dt)`: `exp(-lambda dt)`
/// and the first two phi-functions at `-lambda dt`, `lambda = 4 pi^2 k^2`.
#[derive(Debug, Clone)]
pub(crate) struct Stepper {
    grid: Grid,
    pub(crate) dt: f64,
    pub(crate) exp_w: Vec<f64>,
    pub(crate) phi1_w: Vec<f64>,
    pub(crate) phi2_w: Vec<f64>,
}

/// Stage value of one step: the first-stage predictor of the base state,
/// needed to differentiate the step map exactly.
#[derive(Debug, Clone)]
pub(crate) struct Predictor {
    pub(crate) u: Field,
    pub(crate) w: Field,
}

impl Stepper {
    pub(crate) fn new(grid: Grid, dt: f64) -> Self {
        assert!(dt > 0.0);
        let n = grid.n();
        let mut exp_w = Vec::with_capacity(n);
        let mut phi1_w = Vec::with_capacity(n);
        let mut phi2_w = Vec::with_capacity(n);
        for idx in 0..n {
            let kappa = grid.angular_wavenumber(idx);
            let z = -kappa * kappa * dt;
            exp_w.push(z.exp());
            phi1_w.push(phi1(z));
            phi2_w.push(phi2(z));
        }
        Stepper { grid, dt, exp_w, phi1_w, phi2_w }
    }

    fn combine_w(&self, w: &Field, nw: &Field, table: &[f64]) -> Field {
        let c = w
            .coefficients()
            .iter()
            .zip(nw.coefficients())
            .enumerate()
            .map(|(idx, (wc, nc))| wc * self.exp_w[idx] + nc * (self.dt * table[idx]))
            .collect();
        Field::from_coefficients(self.grid, c)
    }

    /// One step together with its predictor stage.
    pub(crate) fn advance(
        &self,
        state: &State,
        f: &Field,
    ) -> Result<(State, Predictor), DynamicsError> {
        let dt = self.dt;
        let (u, w) = (state.u(), state.w());

        let nu1 = u_tendency(u, w, f);
        let nw1 = w_transport(u, w);

        let u_star = u.linear_combination(1.0, &nu1, dt);
        let w_star = self.combine_w(w, &nw1, &self.phi1_w);

        let nu2 = u_tendency(&u_star, &w_star, f);
        let nw2 = w_transport(&u_star, &w_star);

        let u_next = u
            .linear_combination(1.0, &nu1.linear_combination(1.0, &nu2, 1.0), 0.5 * dt)
            .with_mean(0.0);
        let dw = &nw2 - &nw1;
        let w_next = {
            let c = w_star
                .coefficients()
                .iter()
                .zip(dw.coefficients())
                .enumerate()
                .map(|(idx, (wc, dc))| wc + dc * (dt * self.phi2_w[idx]))
                .collect();
            Field::from_coefficients(self.grid, c).with_mean(1.0)
        };

        let t_next = state.t() + dt;
        let min_w = w_next.min_value();
        if min_w <= 0.0 {
            let j = w_next.argmin();
            return Err(DynamicsError::PositivityLost { t: t_next, x: self.grid.point(j), min_w });
        }
        Ok((
            State::trusted(u_next, w_next, t_next),
            Predictor { u: u_star, w: w_star },
        ))
    }
}

/// Advances one second-order step. The height diffusion is integrated
/// exactly in spectral space; everything else is explicit. Means are pinned
/// to 0 and 1 afterwards. Errors with [`DynamicsError::PositivityLost`] if
/// the height loses positivity, which signals under-resolution.
pub fn step(state: &State, f: &Field, dt: f64) -> Result<State, DynamicsError> {
    let (next, _) = Stepper::new(state.grid(), dt).advance(state, f)?;
    Ok(next)
}

/// Advisory advective CFL bound `0.25 / (n max(1, ||u||_inf))`.
pub fn cfl_guidance(state: &State) -> f64 {
    0.25 / (state.grid().n() as f64 * state.u().max_abs().max(1.0))
}

/// Repeatedly applies [`step`] until `t_end`, invoking the observer with the
/// state and a fresh [`DiagnosticsRecord`](crate::DiagnosticsRecord) at step
/// 0, every `output_every` steps, and at the final step. Deterministic given
/// `(state0, config)`.
pub fn integrate(
    state0: &State,
    config: &SolverConfig,
    observer: impl FnMut(&State, &crate::DiagnosticsRecord),
) -> Result<State, DynamicsError> {
    config.validate()?;
    if state0.grid().n() != config.n {
        return Err(DynamicsError::InvalidConfig(format!(
            "state grid n = {} does not match config n = {}",
            state0.grid().n(),
            config.n
        )));
    }
    let f = config.forcing_field(state0.grid());
    integrate_field(
        state0,
        &f,
        config.dt,
        config.t_end,
        config.output_every,
        observer,
    )
}

/// [`integrate`] with an explicit forcing field instead of a mode list;
/// used when the forcing comes from a checkpoint rather than a config.
pub fn integrate_field(
    state0: &State,
    f: &Field,
    dt: f64,
    t_end: f64,
    output_every: usize,
    mut observer: impl FnMut(&State, &crate::DiagnosticsRecord),
) -> Result<State, DynamicsError> {
    assert_eq!(
        state0.grid(),
        f.grid(),
        "forcing must live on the state grid"
    );
    if dt.is_nan() || dt <= 0.0 || t_end < 0.0 || output_every == 0 {
        return Err(DynamicsError::InvalidConfig(
            "need dt > 0, t_end >= 0 and output_every >= 1".into(),
        ));
    }
    let stepper = Stepper::new(state0.grid(), dt);
    let steps = (t_end / dt).round() as u64;

    let e0 = crate::functionals::energy_breakdown(state0.u(), state0.w(), f)
        .expect("state invariant guarantees positive w")
        .total;
    let f_l2 = f.l2_norm();

    let t0 = state0.t();
    let mut warned_cfl = false;
    let mut state = state0.clone();
    let record = crate::DiagnosticsRecord::measure(&state, f_l2, e0, t0);
    observer(&state, &record);

    for i in 1..=steps {
        let (next, _) = stepper.advance(&state, f)?;
        state = next;
        if i % output_every as u64 == 0 || i == steps {
            if !warned_cfl && dt > cfl_guidance(&state) {
                log::warn!(
                    "dt = {} exceeds advective CFL guidance {:0.3e} at t = {}; continuing",
                    dt,
                    cfl_guidance(&state),
                    state.t()
                );
                warned_cfl = true;
            }
            let record = crate::DiagnosticsRecord::measure(&state, f_l2, e0, t0);
            observer(&state, &record);
        }
    }
    Ok(state)
}

/// Integrates two trajectories from `state_a` and `state_b` under the same
/// forcing and returns `(t, ||u_b - u_a||_{H^1} + ||w_b - w_a||_{L^2})`
/// sampled at every step (including `t = 0`).
pub fn continuous_dependence_gap(
    state_a: &State,
    state_b: &State,
    f: &Field,
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>, DynamicsError> {
    if state_a.grid() != state_b.grid() {
        return Err(DynamicsError::InvalidState(
            "states live on different grids".into(),
        ));
    }
    let stepper = Stepper::new(state_a.grid(), dt);
    let steps = (t_end / dt).round() as u64;
    let gap = |a: &State, b: &State| (b.u() - a.u()).h1_norm() + (b.w() - a.w()).l2_norm();
    let mut a = state_a.clone();
    let mut b = state_b.clone();
    let mut series = Vec::with_capacity(steps as usize + 1);
    series.push((0.0, gap(&a, &b)));
    for i in 1..=steps {
        a = stepper.advance(&a, f)?.0;
        b = stepper.advance(&b, f)?.0;
        series.push((i as f64 * dt, gap(&a, &b)));
    }
    Ok(series)
}

/// Equilibrium plus a Fourier perturbation: each `(k, cos_amp, sin_amp)`
/// entry adds the corresponding mode to `u` or to `w - 1`. Modes must sit
/// below the dealiasing cutoff so the trajectory stays alias-free.
pub fn perturbed_state(
    grid: Grid,
    u_modes: &[ForcingMode],
    w_modes: &[ForcingMode],
) -> Result<State, DynamicsError> {
    for m in u_modes.iter().chain(w_modes) {
        if m.k == 0 || 3 * m.k > grid.n() {
            return Err(DynamicsError::InvalidConfig(format!(
                "perturbation mode k = {} must satisfy 1 <= k <= n/3",
                m.k
            )));
        }
    }
    let u = forcing_field(grid, u_modes);
    let w = &Field::constant(grid, 1.0) + &forcing_field(grid, w_modes);
    State::new(u, w, 0.0)
}

/// Rough initial height: a smoothed periodic step
/// `w = 1 + a tanh(cos(2 pi x)/delta)`, spectrally projected below the
/// dealiasing cutoff, with the amplitude `a` solved by bisection so the
/// projected profile has the requested entropy. Smaller `delta` sharpens the
/// step at (approximately) fixed entropy.
pub fn rough_step_height(
    grid: Grid,
    delta: f64,
    target_entropy: f64,
) -> Result<Field, DynamicsError> {
    use crate::functionals::entropy;
    assert!(delta > 0.0);
    if target_entropy <= 0.0 {
        return Err(DynamicsError::InvalidConfig(
            "target entropy must be positive".into(),
        ));
    }
    let profile = |a: f64| -> Field {
        Field::from_fn(grid, |x| {
            1.0 + a * ((crate::spectral::TWO_PI * x).cos() / delta).tanh()
        })
        .dealias()
        .with_mean(1.0)
    };
    let entropy_of = |a: f64| -> Option<f64> { entropy(&profile(a)).ok() };

    let mut hi = 0.95;
    while entropy_of(hi).is_none() {
        hi *= 0.9;
        if hi < 1e-3 {
            return Err(DynamicsError::InvalidConfig(format!(
                "projected step profile loses positivity at delta = {delta}"
            )));
        }
    }
    let max_entropy = entropy_of(hi).unwrap();
    if target_entropy > max_entropy {
        return Err(DynamicsError::InvalidConfig(format!(
            "target entropy {target_entropy} unreachable; maximum at delta = {delta} is {max_entropy}"
        )));
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match entropy_of(mid) {
            Some(e) if e < target_entropy => lo = mid,
            _ => hi = mid,
        }
    }
    Ok(profile(0.5 * (lo + hi)))
}
