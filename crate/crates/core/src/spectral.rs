//! Periodic spatial discretization: grids, Fourier transforms, spectral
//! differentiation, dealiasing, Helmholtz inversion, and Sobolev norms.
//!
//! All fields are real, 1-periodic on `[0, 1]`, sampled at `n` equispaced
//! collocation points. Mode `k` carries angular wavenumber `2*pi*k` for
//! `k = -n/2+1 ... n/2`. Coefficients are normalized so that the `k = 0`
//! coefficient is the mean and Parseval reads `sum(values^2)/n = sum(|c_k|^2)`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid size must be a power of two and at least 16, got {0}")]
    InvalidGridSize(usize),
    #[error("negative-order Sobolev norm requires a mean-free field (mean = {mean:e})")]
    NegativeNormNonzeroMean { mean: f64 },
}

/// Which family of Sobolev norms to evaluate.
///
/// `Full` weights mode `k` by `(1 + 4 pi^2 k^2)^s`; `Homogeneous` drops the
/// `k = 0` mode and weights by `(4 pi^2 k^2)^s` (the dotted spaces).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Full,
    Homogeneous,
}

/// Equispaced periodic grid on `[0, 1]` with `n` points, `n` a power of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self, SpectralError> {
        if n < 16 || !n.is_power_of_two() {
            return Err(SpectralError::InvalidGridSize(n));
        }
        Ok(Grid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Collocation point `x_j = j/n`.
    pub fn point(&self, j: usize) -> f64 {
        j as f64 / self.n as f64
    }

    /// Signed integer wavenumber stored at coefficient index `idx`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        debug_assert!(idx < self.n);
        if idx <= self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// Angular wavenumber `2 pi k` at coefficient index `idx`.
    pub fn angular_wavenumber(&self, idx: usize) -> f64 {
        TWO_PI * self.wavenumber(idx) as f64
    }

    /// Two-thirds rule: retain mode `k` iff `|k| <= n/3`.
    pub fn keeps_mode(&self, idx: usize) -> bool {
        3 * self.wavenumber(idx).unsigned_abs() as usize <= self.n
    }
}

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plan_pair(n: usize) -> PlanPair {
    static PLANS: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().unwrap();
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

fn forward(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let (fwd, _) = plan_pair(n);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

fn inverse(coefficients: &[Complex64]) -> Vec<f64> {
    let n = coefficients.len();
    let (_, inv) = plan_pair(n);
    let mut buf = coefficients.to_vec();
    inv.process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// A real 1-periodic function held as both grid samples and spectral
/// coefficients. Immutable once constructed; every operation returns a new
/// field, so values are safe to share across threads.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    coefficients: Vec<Complex64>,
}

impl Field {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.n(), "sample count must match grid size");
        let coefficients = forward(&values);
        Field { grid, values, coefficients }
    }

    /// Samples `f` at the collocation points.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.point(j))).collect();
        Self::from_values(grid, values)
    }

    /// Builds a field from spectral coefficients. Conjugate symmetry is
    /// enforced (the imaginary part of the reconstructed samples is dropped),
    /// so the result is the real part of the inverse transform.
    pub fn from_coefficients(grid: Grid, coefficients: Vec<Complex64>) -> Self {
        assert_eq!(coefficients.len(), grid.n());
        let mut c = coefficients;
        symmetrize(&mut c);
        Self::from_symmetric_coefficients(grid, c)
    }

    /// Trusted constructor for coefficients already conjugate-symmetric.
    fn from_symmetric_coefficients(grid: Grid, coefficients: Vec<Complex64>) -> Self {
        let values = inverse(&coefficients);
        Field { grid, values, coefficients }
    }

    pub fn zero(grid: Grid) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.n()],
            coefficients: vec![Complex64::ZERO; grid.n()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let mut coefficients = vec![Complex64::ZERO; grid.n()];
        coefficients[0] = Complex64::new(c, 0.0);
        Field { grid, values: vec![c; grid.n()], coefficients }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Mean over the period: the `k = 0` coefficient, which equals the
    /// trapezoidal mean on the periodic grid.
    pub fn mean(&self) -> f64 {
        self.coefficients[0].re
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Index of the smallest sample (ties resolved to the first).
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (j, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = j;
            }
        }
        best
    }

    /// Order-th spectral derivative; exact for band-limited fields.
    /// The Nyquist mode is zeroed for odd orders (it has no consistent
    /// real-valued derivative sign).
    pub fn derivative(&self, order: u32) -> Field {
        assert!(order >= 1, "derivative order must be positive");
        let n = self.grid.n();
        let mut c = self.coefficients.clone();
        for (idx, ck) in c.iter_mut().enumerate() {
            if order % 2 == 1 && idx == n / 2 {
                *ck = Complex64::ZERO;
                continue;
            }
            let ik = Complex64::new(0.0, self.grid.angular_wavenumber(idx));
            *ck *= ik.powu(order);
        }
        Field::from_symmetric_coefficients(self.grid, c)
    }

    /// Solves `g - g_xx = self`: divides mode `k` by `1 + 4 pi^2 k^2`.
    pub fn helmholtz_solve(&self) -> Field {
        let mut c = self.coefficients.clone();
        for (idx, ck) in c.iter_mut().enumerate() {
            let kappa = self.grid.angular_wavenumber(idx);
            *ck /= 1.0 + kappa * kappa;
        }
        Field::from_symmetric_coefficients(self.grid, c)
    }

    /// Two-thirds dealiasing: zeroes every coefficient with `|k| > n/3`.
    pub fn dealias(&self) -> Field {
        let mut c = self.coefficients.clone();
        for (idx, ck) in c.iter_mut().enumerate() {
            if !self.grid.keeps_mode(idx) {
                *ck = Complex64::ZERO;
            }
        }
        Field::from_symmetric_coefficients(self.grid, c)
    }

    /// Pointwise product on the grid (no dealiasing).
    pub fn pointwise_mul(&self, other: &Field) -> Field {
        assert_eq!(self.grid, other.grid, "fields must share a grid");
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Field::from_values(self.grid, values)
    }

    /// Applies `f` to every sample and retransforms.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_values(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `H^s` norm. For `s >= 0` the weight is `(1 + 4 pi^2 k^2)^s` (`Full`)
    /// or `(4 pi^2 k^2)^s` over `k != 0` (`Homogeneous`). For `s < 0` the
    /// homogeneous convention is always used and the field must be mean-free.
    pub fn sobolev_norm(&self, s: f64, kind: NormKind) -> Result<f64, SpectralError> {
        if s < 0.0 {
            let mean = self.mean();
            if mean.abs() > 1e-10 {
                return Err(SpectralError::NegativeNormNonzeroMean { mean });
            }
        }
        let homogeneous = kind == NormKind::Homogeneous || s < 0.0;
        let mut sum = 0.0;
        for (idx, c) in self.coefficients.iter().enumerate() {
            let kappa = self.grid.angular_wavenumber(idx);
            let weight = if homogeneous {
                if idx == 0 {
                    continue;
                }
                (kappa * kappa).powf(s)
            } else {
                (1.0 + kappa * kappa).powf(s)
            };
            sum += weight * c.norm_sqr();
        }
        Ok(sum.sqrt())
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0, NormKind::Full).expect("s = 0 cannot fail")
    }

    pub fn h1_norm(&self) -> f64 {
        self.sobolev_norm(1.0, NormKind::Full).expect("s >= 0 cannot fail")
    }

    pub fn h1_seminorm(&self) -> f64 {
        self.sobolev_norm(1.0, NormKind::Homogeneous)
            .expect("s >= 0 cannot fail")
    }

    pub fn h2_norm(&self) -> f64 {
        self.sobolev_norm(2.0, NormKind::Full).expect("s >= 0 cannot fail")
    }

    /// Linear combination `a*self + b*other`, done in coefficient space.
    pub fn linear_combination(&self, a: f64, other: &Field, b: f64) -> Field {
        assert_eq!(self.grid, other.grid, "fields must share a grid");
        let c = self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(x, y)| x * a + y * b)
            .collect();
        Field::from_symmetric_coefficients(self.grid, c)
    }

    pub fn scale(&self, a: f64) -> Field {
        let c = self.coefficients.iter().map(|x| x * a).collect();
        Field::from_symmetric_coefficients(self.grid, c)
    }

    /// Replaces the `k = 0` coefficient, pinning the mean exactly.
    pub fn with_mean(&self, mean: f64) -> Field {
        let mut c = self.coefficients.clone();
        c[0] = Complex64::new(mean, 0.0);
        Field::from_symmetric_coefficients(self.grid, c)
    }
}

impl std::ops::Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.linear_combination(1.0, rhs, 1.0)
    }
}

impl std::ops::Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.linear_combination(1.0, rhs, -1.0)
    }
}

fn symmetrize(c: &mut [Complex64]) {
    let n = c.len();
    c[0] = Complex64::new(c[0].re, 0.0);
    c[n / 2] = Complex64::new(c[n / 2].re, 0.0);
    for k in 1..n / 2 {
        let avg = 0.5 * (c[k] + c[n - k].conj());
        c[k] = avg;
        c[n - k] = avg.conj();
    }
}

/// Pointwise product of two fields followed by two-thirds dealiasing; exact
/// for inputs already band-limited to `|k| <= n/3`.
pub fn dealiased_product(a: &Field, b: &Field) -> Field {
    a.pointwise_mul(b).dealias()
}
