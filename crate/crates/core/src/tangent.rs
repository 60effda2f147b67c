//! The non-autonomous linearized flow along a base trajectory, the geometry
//! of the energy space `E = H^1 x L^2` (zero-mean), and differentiability
//! checks of the solution map.
//!
//! A tangent `(v, h)` obeys
//!
//! ```text
//! v_t - v_txx - v_xx + h_x + (u v)_x = 0
//! h_t + (u h + v w)_x - h_xx = 0
//! ```
//!
//! with `(u, w)` the base state. Tangents are advanced in lockstep with the
//! base ("co-integration") by the same exponential scheme as the nonlinear
//! step; the co-integrated propagator is the exact differential of the
//! discrete solution map, which keeps finite-difference and Taylor-remainder
//! comparisons free of interpolation error.

use crate::dynamics::{DynamicsError, Predictor, State, Stepper};
use crate::spectral::{dealiased_product, Field, Grid};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TangentError {
    #[error("remainder underflowed the relative tolerance 1e-13; fit is degenerate")]
    DegenerateFit,
    #[error("invalid tangent state: {0}")]
    InvalidTangent(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// A perturbation `(v, h)` in `E`, both components mean-free.
#[derive(Debug, Clone)]
pub struct TangentState {
    v: Field,
    h: Field,
    t: f64,
}

impl TangentState {
    pub fn new(v: Field, h: Field, t: f64) -> Result<Self, TangentError> {
        if v.grid() != h.grid() {
            return Err(TangentError::InvalidTangent(
                "v and h live on different grids".into(),
            ));
        }
        if v.mean().abs() >= 1e-10 || h.mean().abs() >= 1e-10 {
            return Err(TangentError::InvalidTangent(format!(
                "tangent components must be mean-free (means {:e}, {:e})",
                v.mean(),
                h.mean()
            )));
        }
        Ok(TangentState { v, h, t })
    }

    pub(crate) fn trusted(v: Field, h: Field, t: f64) -> Self {
        debug_assert!(v.mean().abs() < 1e-10 && h.mean().abs() < 1e-10);
        TangentState { v, h, t }
    }

    pub fn zero(grid: Grid) -> Self {
        TangentState { v: Field::zero(grid), h: Field::zero(grid), t: 0.0 }
    }

    pub fn v(&self) -> &Field {
        &self.v
    }

    pub fn h(&self) -> &Field {
        &self.h
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> Grid {
        self.v.grid()
    }

    /// `a*self + b*other`, componentwise.
    pub fn linear_combination(&self, a: f64, other: &TangentState, b: f64) -> TangentState {
        TangentState {
            v: self.v.linear_combination(a, &other.v, b),
            h: self.h.linear_combination(a, &other.h, b),
            t: self.t,
        }
    }

    pub fn scale(&self, a: f64) -> TangentState {
        TangentState { v: self.v.scale(a), h: self.h.scale(a), t: self.t }
    }

    pub fn e_norm(&self) -> f64 {
        e_inner(self, self).sqrt()
    }
}

/// The `E` inner product: full `H^1` pairing on the velocity component plus
/// `L^2` pairing on the height component. `Lambda(a, b)`, the polarization
/// form `(||a+b||_E^2 - ||a-b||_E^2)/4`, coincides with it.
pub fn e_inner(a: &TangentState, b: &TangentState) -> f64 {
    assert_eq!(a.grid(), b.grid(), "tangents must share a grid");
    let grid = a.grid();
    let mut sum = 0.0;
    for (idx, (ca, cb)) in a.v.coefficients().iter().zip(b.v.coefficients()).enumerate() {
        let kappa = grid.angular_wavenumber(idx);
        sum += (1.0 + kappa * kappa) * (ca.re * cb.re + ca.im * cb.im);
    }
    for (ca, cb) in a.h.coefficients().iter().zip(b.h.coefficients()) {
        sum += ca.re * cb.re + ca.im * cb.im;
    }
    sum
}

/// Full linearized velocity tendency
/// `(I - dxx)^{-1}[v_xx - h_x - dealias((u v)_x)]`.
fn v_tendency(v: &Field, h: &Field, base_u: &Field) -> Field {
    let combo =
        &(&v.derivative(2) - &h.derivative(1)) - &dealiased_product(base_u, v).derivative(1);
    combo.helmholtz_solve()
}

/// Transport part of the linearized height tendency,
/// `-dealias((u h + v w)_x)`; `h_xx` is handled by the integrating factor.
fn h_transport(v: &Field, h: &Field, base_u: &Field, base_w: &Field) -> Field {
    let flux = &base_u.pointwise_mul(h) + &v.pointwise_mul(base_w);
    flux.derivative(1).dealias().scale(-1.0)
}

/// Right-hand side of the linearized system along `base`; both tendencies
/// are mean-free.
pub fn tangent_rhs(tangent: &TangentState, base: &State) -> (Field, Field) {
    assert_eq!(
        tangent.grid(),
        base.grid(),
        "tangent and base must share a grid"
    );
    let dv = v_tendency(&tangent.v, &tangent.h, base.u());
    let dh = &tangent.h.derivative(2) + &h_transport(&tangent.v, &tangent.h, base.u(), base.w());
    (dv, dh)
}

fn advance_tangent_kernel(
    stepper: &Stepper,
    tangent: &TangentState,
    base_before: &State,
    stage_u: &Field,
    stage_w: &Field,
) -> TangentState {
    let dt = stepper.dt;
    let (v, h) = (&tangent.v, &tangent.h);

    let dv1 = v_tendency(v, h, base_before.u());
    let dh1 = h_transport(v, h, base_before.u(), base_before.w());

    let v_star = v.linear_combination(1.0, &dv1, dt);
    let h_star = {
        let c = h
            .coefficients()
            .iter()
            .zip(dh1.coefficients())
            .enumerate()
            .map(|(idx, (hc, dc))| hc * stepper.exp_w[idx] + dc * (dt * stepper.phi1_w[idx]))
            .collect();
        Field::from_coefficients(tangent.grid(), c)
    };

    let dv2 = v_tendency(&v_star, &h_star, stage_u);
    let dh2 = h_transport(&v_star, &h_star, stage_u, stage_w);

    let v_next = v
        .linear_combination(1.0, &dv1.linear_combination(1.0, &dv2, 1.0), 0.5 * dt)
        .with_mean(0.0);
    let diff = &dh2 - &dh1;
    let h_next = {
        let c = h_star
            .coefficients()
            .iter()
            .zip(diff.coefficients())
            .enumerate()
            .map(|(idx, (hc, dc))| hc + dc * (dt * stepper.phi2_w[idx]))
            .collect();
        Field::from_coefficients(tangent.grid(), c).with_mean(0.0)
    };
    TangentState::trusted(v_next, h_next, tangent.t + dt)
}

/// Advances the tangent one step along a stored base trajectory, using the
/// same exponential scheme as the nonlinear step: the first stage is
/// linearized at `base_before`, the second at `base_after`. Deterministic.
pub fn tangent_step(
    tangent: &TangentState,
    base_before: &State,
    base_after: &State,
    dt: f64,
) -> TangentState {
    let stepper = Stepper::new(tangent.grid(), dt);
    advance_tangent_kernel(
        &stepper,
        tangent,
        base_before,
        base_after.u(),
        base_after.w(),
    )
}

/// Base and tangents advanced in lockstep under a fixed forcing. The tangent
/// stage is linearized at the base step's own predictor stage, which makes
/// the tangent propagator the exact differential of the discrete solution
/// map.
pub(crate) struct CoIntegrator {
    stepper: Stepper,
    f: Field,
}

impl CoIntegrator {
    pub(crate) fn new(grid: Grid, dt: f64, f: Field) -> Self {
        CoIntegrator { stepper: Stepper::new(grid, dt), f }
    }

    pub(crate) fn advance_base(&self, base: &State) -> Result<(State, Predictor), DynamicsError> {
        self.stepper.advance(base, &self.f)
    }

    pub(crate) fn advance_tangent(
        &self,
        tangent: &TangentState,
        base_before: &State,
        stage: &Predictor,
    ) -> TangentState {
        advance_tangent_kernel(&self.stepper, tangent, base_before, &stage.u, &stage.w)
    }

    /// Integrates the tangent over `steps` steps along the base, returning
    /// the final (base, tangent).
    pub(crate) fn propagate(
        &self,
        base: &State,
        tangent: &TangentState,
        steps: u64,
    ) -> Result<(State, TangentState), DynamicsError> {
        let mut b = base.clone();
        let mut t = tangent.clone();
        for _ in 0..steps {
            let (next, stage) = self.advance_base(&b)?;
            t = self.advance_tangent(&t, &b, &stage);
            b = next;
        }
        Ok((b, t))
    }
}

/// Integrates the nonlinear flow over `t_end` with step `dt`.
fn run_nonlinear(state: &State, f: &Field, t_end: f64, dt: f64) -> Result<State, DynamicsError> {
    let stepper = Stepper::new(state.grid(), dt);
    let steps = (t_end / dt).round() as u64;
    let mut s = state.clone();
    for _ in 0..steps {
        s = stepper.advance(&s, f)?.0;
    }
    Ok(s)
}

fn state_difference(a: &State, b: &State) -> TangentState {
    TangentState::trusted(b.u() - a.u(), b.w() - a.w(), b.t())
}

/// `|| [S_T(x0 + eps b0) - S_T(x0)]/eps - DS_T b0 ||_E`: the gap between a
/// one-sided finite difference of the nonlinear flow and the integrated
/// tangent. Vanishes linearly as `eps -> 0`.
pub fn finite_diff_tangent_check(
    base0: &State,
    direction: &TangentState,
    f: &Field,
    t_end: f64,
    eps: f64,
    dt: f64,
) -> Result<f64, TangentError> {
    let grid = base0.grid();
    let steps = (t_end / dt).round() as u64;

    let shifted = State::new(
        base0.u().linear_combination(1.0, direction.v(), eps),
        base0.w().linear_combination(1.0, direction.h(), eps),
        base0.t(),
    )
    .map_err(TangentError::Dynamics)?;

    let co = CoIntegrator::new(grid, dt, f.clone());
    let (_, tangent_end) = co.propagate(base0, direction, steps)?;
    let base_end = run_nonlinear(base0, f, t_end, dt)?;
    let shifted_end = run_nonlinear(&shifted, f, t_end, dt)?;

    let fd = state_difference(&base_end, &shifted_end).scale(1.0 / eps);
    Ok(fd.linear_combination(1.0, &tangent_end, -1.0).e_norm())
}

/// Result of a Taylor-remainder sweep: the log-log slope of
/// `R(eps) = ||S_T(x0 + eps b0) - S_T(x0) - eps DS_T b0||_E` against `eps`.
/// Differentiability of the flow demands a slope above 1.
#[derive(Debug, Clone)]
pub struct TaylorFit {
    /// Least-squares slope of `log R` against `log eps`.
    pub slope: f64,
    /// The `(eps, R(eps))` points that entered the fit.
    pub points: Vec<(f64, f64)>,
    /// Amplitudes dropped because their run lost height positivity.
    pub dropped: Vec<f64>,
}

pub fn taylor_remainder_order(
    base0: &State,
    direction: &TangentState,
    f: &Field,
    t_end: f64,
    eps_list: &[f64],
    dt: f64,
) -> Result<TaylorFit, TangentError> {
    assert!(
        eps_list.len() >= 4,
        "need at least 4 amplitudes for the fit"
    );
    let grid = base0.grid();
    let steps = (t_end / dt).round() as u64;

    let co = CoIntegrator::new(grid, dt, f.clone());
    let (_, tangent_end) = co.propagate(base0, direction, steps)?;
    let base_end = run_nonlinear(base0, f, t_end, dt)?;

    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for &eps in eps_list {
        let shifted = State::new(
            base0.u().linear_combination(1.0, direction.v(), eps),
            base0.w().linear_combination(1.0, direction.h(), eps),
            base0.t(),
        );
        let run = shifted.and_then(|s| run_nonlinear(&s, f, t_end, dt));
        match run {
            Ok(shifted_end) => {
                let remainder = state_difference(&base_end, &shifted_end)
                    .linear_combination(1.0, &tangent_end.scale(eps), -1.0)
                    .e_norm();
                let linear_scale = eps * tangent_end.e_norm();
                if remainder < 1e-13 * linear_scale {
                    return Err(TangentError::DegenerateFit);
                }
                points.push((eps, remainder));
            }
            // Large amplitudes can push the height out of the positive cone;
            // drop them from the asymptotic fit.
            Err(DynamicsError::PositivityLost { .. }) => dropped.push(eps),
            Err(e) => return Err(TangentError::Dynamics(e)),
        }
    }
    if points.len() < 3 {
        return Err(TangentError::DegenerateFit);
    }
    let slope = log_log_slope(&points);
    Ok(TaylorFit { slope, points, dropped })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{forcing_field, perturbed_state, ForcingMode};
    use crate::spectral::TWO_PI;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    fn single_mode_tangent(g: Grid, k: usize, cv: Complex64, ch: Complex64) -> TangentState {
        let n = g.n();
        let mut vc = vec![Complex64::ZERO; n];
        let mut hc = vec![Complex64::ZERO; n];
        vc[k] = cv;
        vc[n - k] = cv.conj();
        hc[k] = ch;
        hc[n - k] = ch.conj();
        TangentState::new(
            Field::from_coefficients(g, vc),
            Field::from_coefficients(g, hc),
            0.0,
        )
        .unwrap()
    }

    fn generic_base(g: Grid) -> State {
        perturbed_state(
            g,
            &[ForcingMode { k: 1, cos_amp: 0.1, sin_amp: 0.05 }],
            &[ForcingMode { k: 2, cos_amp: 0.15, sin_amp: -0.05 }],
        )
        .unwrap()
    }

    fn generic_tangent(g: Grid) -> TangentState {
        TangentState::new(
            Field::from_fn(g, |x| (TWO_PI * x).sin() + 0.3 * (3.0 * TWO_PI * x).cos()),
            Field::from_fn(g, |x| 0.5 * (2.0 * TWO_PI * x).cos()),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_tangent_has_zero_tendencies() {
        let g = grid(64);
        let base = generic_base(g);
        let (dv, dh) = tangent_rhs(&TangentState::zero(g), &base);
        assert!(dv.values().iter().all(|&x| x == 0.0));
        assert!(dh.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn tangent_rhs_at_equilibrium_is_diagonal_per_mode() {
        // At base (0, 1): dv = helmholtz(v_xx - h_x), dh = h_xx - v_x.
        let g = grid(64);
        let eq = State::equilibrium(g);
        let tan = single_mode_tangent(g, 3, Complex64::new(0.2, -0.1), Complex64::new(-0.4, 0.3));
        let (dv, dh) = tangent_rhs(&tan, &eq);
        let dv_expected = (&tan.v().derivative(2) - &tan.h().derivative(1)).helmholtz_solve();
        let dh_expected = &tan.h().derivative(2) - &tan.v().derivative(1);
        for j in 0..g.n() {
            assert_abs_diff_eq!(dv.values()[j], dv_expected.values()[j], epsilon = 1e-13);
            assert_abs_diff_eq!(dh.values()[j], dh_expected.values()[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn tangent_rhs_is_linear() {
        let g = grid(64);
        let base = generic_base(g);
        let b1 = generic_tangent(g);
        let b2 = single_mode_tangent(g, 4, Complex64::new(0.3, 0.2), Complex64::new(0.1, -0.6));
        let (a, b) = (1.7, -0.8);
        let combo = b1.linear_combination(a, &b2, b);
        let (dv, dh) = tangent_rhs(&combo, &base);
        let (dv1, dh1) = tangent_rhs(&b1, &base);
        let (dv2, dh2) = tangent_rhs(&b2, &base);
        let dv_lin = dv1.linear_combination(a, &dv2, b);
        let dh_lin = dh1.linear_combination(a, &dh2, b);
        for j in 0..g.n() {
            assert_abs_diff_eq!(dv.values()[j], dv_lin.values()[j], epsilon = 1e-12);
            assert_abs_diff_eq!(dh.values()[j], dh_lin.values()[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn e_inner_is_the_e_norm_squared() {
        let g = grid(64);
        let b = generic_tangent(g);
        let vh1 = b.v().h1_norm();
        let hl2 = b.h().l2_norm();
        assert_abs_diff_eq!(e_inner(&b, &b), vh1 * vh1 + hl2 * hl2, epsilon = 1e-12);
    }

    #[test]
    fn e_inner_orthogonal_modes() {
        let g = grid(64);
        let a = single_mode_tangent(g, 2, Complex64::new(1.0, 0.0), Complex64::ZERO);
        let b = single_mode_tangent(g, 5, Complex64::new(1.0, 0.0), Complex64::ZERO);
        assert_abs_diff_eq!(e_inner(&a, &b), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn polarization_identity() {
        let g = grid(64);
        let a = generic_tangent(g);
        let b = single_mode_tangent(g, 6, Complex64::new(-0.2, 0.9), Complex64::new(0.4, 0.4));
        let plus = a.linear_combination(1.0, &b, 1.0).e_norm();
        let minus = a.linear_combination(1.0, &b, -1.0).e_norm();
        let lambda = (plus * plus - minus * minus) / 4.0;
        assert!((lambda - e_inner(&a, &b)).abs() < 1e-12 * (1.0 + lambda.abs()));
    }

    #[test]
    fn zero_tangent_stays_zero_under_stepping() {
        let g = grid(64);
        let eq = State::equilibrium(g);
        let stepped = tangent_step(&TangentState::zero(g), &eq, &eq, 1e-3);
        assert!(stepped.v().values().iter().all(|&x| x == 0.0));
        assert!(stepped.h().values().iter().all(|&x| x == 0.0));
    }

    /// Closed-form 2x2 matrix exponential (distinct eigenvalues) used as an
    /// independent oracle for the per-mode tangent step at equilibrium.
    fn expm2(a: [[Complex64; 2]; 2], t: f64) -> [[Complex64; 2]; 2] {
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let disc = (tr * tr - det * 4.0).sqrt();
        let mu_p = (tr + disc) * 0.5;
        let mu_m = (tr - disc) * 0.5;
        let e_p = (mu_p * t).exp();
        let e_m = (mu_m * t).exp();
        let denom = mu_p - mu_m;
        let mut out = [[Complex64::ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                // exp(At) = e_p (A - mu_m I)/(mu_p - mu_m) + e_m (mu_p I - A)/(mu_p - mu_m)
                out[i][j] = (e_p * (a[i][j] - mu_m * id) + e_m * (mu_p * id - a[i][j])) / denom;
            }
        }
        out
    }

    fn equilibrium_mode_matrix(k: usize) -> [[Complex64; 2]; 2] {
        let kappa = TWO_PI * k as f64;
        let lam = kappa * kappa;
        [
            [
                Complex64::new(-lam / (1.0 + lam), 0.0),
                Complex64::new(0.0, -kappa / (1.0 + lam)),
            ],
            [Complex64::new(0.0, -kappa), Complex64::new(-lam, 0.0)],
        ]
    }

    #[test]
    fn tangent_step_matches_mode_exponential_at_equilibrium() {
        let g = grid(64);
        let eq = State::equilibrium(g);
        let k = 2;
        let (cv, ch) = (Complex64::new(0.7, -0.2), Complex64::new(-0.3, 0.5));
        let dt = 1e-5;
        let stepped = single_mode_tangent(g, k, cv, ch);
        let stepped = tangent_step(&stepped, &eq, &eq, dt);
        let m = expm2(equilibrium_mode_matrix(k), dt);
        let cv_exact = m[0][0] * cv + m[0][1] * ch;
        let ch_exact = m[1][0] * cv + m[1][1] * ch;
        assert!((stepped.v().coefficients()[k] - cv_exact).norm() < 1e-10);
        assert!((stepped.h().coefficients()[k] - ch_exact).norm() < 1e-10);
    }

    #[test]
    fn tangent_step_halving_shows_second_order() {
        let g = grid(64);
        let eq = State::equilibrium(g);
        let k = 1;
        let (cv, ch) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
        let error_at = |dt: f64| {
            let stepped = tangent_step(&single_mode_tangent(g, k, cv, ch), &eq, &eq, dt);
            let m = expm2(equilibrium_mode_matrix(k), dt);
            let cv_exact = m[0][0] * cv + m[0][1] * ch;
            let ch_exact = m[1][0] * cv + m[1][1] * ch;
            (stepped.v().coefficients()[k] - cv_exact).norm()
                + (stepped.h().coefficients()[k] - ch_exact).norm()
        };
        let e1 = error_at(2e-4);
        let e2 = error_at(1e-4);
        let observed_order = (e1 / e2).log2() - 1.0;
        assert!(
            observed_order >= 1.8,
            "observed order {observed_order} ({e1:e} / {e2:e})"
        );
    }

    #[test]
    fn propagator_is_linear() {
        let g = grid(64);
        let base = generic_base(g);
        let f = forcing_field(g, &[ForcingMode { k: 1, cos_amp: 0.2, sin_amp: 0.0 }]);
        let co = CoIntegrator::new(g, 1e-3, f);
        let b1 = generic_tangent(g);
        let b2 = single_mode_tangent(g, 5, Complex64::new(0.4, 0.1), Complex64::new(-0.2, 0.3));
        let (a, b) = (0.6, -1.3);
        let steps = 500;
        let (_, t1) = co.propagate(&base, &b1, steps).unwrap();
        let (_, t2) = co.propagate(&base, &b2, steps).unwrap();
        let (_, tc) = co.propagate(&base, &b1.linear_combination(a, &b2, b), steps).unwrap();
        let gap = tc
            .linear_combination(1.0, &t1.linear_combination(a, &t2, b), -1.0)
            .e_norm();
        let scale = tc.e_norm().max(1.0);
        assert!(
            gap / scale < 1e-10,
            "linearity violated: {gap:e} vs {scale:e}"
        );
    }

    #[test]
    fn tangent_stays_mean_free() {
        let g = grid(64);
        let base = generic_base(g);
        let co = CoIntegrator::new(g, 1e-3, Field::zero(g));
        let (_, t) = co.propagate(&base, &generic_tangent(g), 2000).unwrap();
        assert!(t.v().mean().abs() < 1e-10);
        assert!(t.h().mean().abs() < 1e-10);
    }

    #[test]
    fn fd_check_trivial_cases() {
        let g = grid(64);
        let base = generic_base(g);
        let f = Field::zero(g);
        // zero direction
        let gap =
            finite_diff_tangent_check(&base, &TangentState::zero(g), &f, 0.5, 1e-3, 1e-3).unwrap();
        assert!(gap < 1e-12);
        // zero horizon: both sides equal the direction
        let gap =
            finite_diff_tangent_check(&base, &generic_tangent(g), &f, 0.0, 1e-3, 1e-3).unwrap();
        assert!(gap < 1e-10);
    }

    #[test]
    fn fd_gap_first_order_in_eps() {
        let g = grid(64);
        let base = generic_base(g);
        let f = forcing_field(g, &[ForcingMode { k: 1, cos_amp: 0.1, sin_amp: 0.0 }]);
        let dir = generic_tangent(g);
        let points: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&eps| {
                let gap = finite_diff_tangent_check(&base, &dir, &f, 1.0, eps, 1e-3).unwrap();
                (eps, gap)
            })
            .collect();
        let slope = log_log_slope(&points);
        assert!(
            (slope - 1.0).abs() < 0.1,
            "fd gap should vanish linearly, slope {slope} from {points:?}"
        );
    }

    #[test]
    fn taylor_remainder_slope_near_two() {
        let g = grid(64);
        let base = generic_base(g);
        let f = Field::zero(g);
        let dir = generic_tangent(g);
        let fit =
            taylor_remainder_order(&base, &dir, &f, 1.0, &[1e-2, 1e-3, 1e-4, 1e-5], 1e-3).unwrap();
        assert!(fit.dropped.is_empty());
        assert!(
            fit.slope > 1.0,
            "differentiability demands slope > 1, got {} from {:?}",
            fit.slope,
            fit.points
        );
        // Quadratic nonlinearity: the measured order sits near 2.
        assert!((fit.slope - 2.0).abs() < 0.2, "slope {}", fit.slope);
    }

    #[test]
    fn taylor_remainder_vanishes_for_linear_flow() {
        // Base frozen at equilibrium with zero-amplitude nonlinearity: the
        // solution map restricted to the tangent is linear, so the remainder
        // of its own differential sits at roundoff level.
        let g = grid(64);
        let eq = State::equilibrium(g);
        let f = Field::zero(g);
        let dir = single_mode_tangent(g, 1, Complex64::new(1e-6, 0.0), Complex64::ZERO);
        // With an equilibrium base the nonlinear flow of an epsilon-scaled
        // direction is itself nearly linear; remainders underflow and the
        // fit is reported as degenerate.
        let result = taylor_remainder_order(&eq, &dir, &f, 0.5, &[1e-2, 1e-3, 1e-4, 1e-5], 1e-3);
        match result {
            Err(TangentError::DegenerateFit) => {}
            Ok(fit) => {
                // If quadratic self-interaction of the tiny direction is
                // still measurable, it must remain second order.
                assert!(fit.slope > 1.5, "slope {}", fit.slope);
            }
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn tangent_growth_rate_is_bounded_along_bounded_base() {
        let g = grid(64);
        let base = generic_base(g);
        let f = forcing_field(g, &[ForcingMode { k: 1, cos_amp: 0.3, sin_amp: 0.0 }]);
        let co = CoIntegrator::new(g, 1e-3, f);
        let mut b = base;
        let mut t = generic_tangent(g);
        let norm0 = t.e_norm();
        let mut log_norms = vec![(0.0, 0.0)];
        for i in 1..=10_000u64 {
            let (next, stage) = co.advance_base(&b).unwrap();
            t = co.advance_tangent(&t, &b, &stage);
            b = next;
            if i % 500 == 0 {
                log_norms.push((i as f64 * 1e-3, (t.e_norm() / norm0).ln()));
            }
        }
        // log ||beta(t)|| grows at most linearly: fitted slope is finite and
        // bounded (here the flow is contracting, so it is in fact negative).
        let n = log_norms.len() as f64;
        let sx: f64 = log_norms.iter().map(|p| p.0).sum();
        let sy: f64 = log_norms.iter().map(|p| p.1).sum();
        let sxx: f64 = log_norms.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = log_norms.iter().map(|p| p.0 * p.1).sum();
        let k_fit = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!(k_fit.is_finite());
        assert!(k_fit < 5.0, "growth rate {k_fit} out of bounds");
    }
}
