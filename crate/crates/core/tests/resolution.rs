//! Cross-resolution oracle: the default production configuration must agree
//! with a run at twice the resolution and a quarter of the step.

use bsq_core::dynamics::{integrate, perturbed_state, ForcingMode, SolverConfig};
use bsq_core::{Grid, State};

fn start(n: usize) -> State {
    perturbed_state(
        Grid::new(n).unwrap(),
        &[ForcingMode { k: 1, cos_amp: 0.3, sin_amp: 0.0 }],
        &[ForcingMode { k: 2, cos_amp: 0.2, sin_amp: 0.1 }],
    )
    .unwrap()
}

#[test]
fn forced_trajectory_is_resolved_at_default_parameters() {
    let t_end = 5.0;
    let forcing = vec![ForcingMode { k: 1, cos_amp: 0.5, sin_amp: 0.0 }];
    let coarse = integrate(
        &start(128),
        &SolverConfig {
            n: 128,
            dt: 1e-3,
            t_end,
            forcing: forcing.clone(),
            output_every: 1000,
        },
        |_, _| {},
    )
    .unwrap();
    let fine = integrate(
        &start(256),
        &SolverConfig { n: 256, dt: 2.5e-4, t_end, forcing, output_every: 4000 },
        |_, _| {},
    )
    .unwrap();

    // compare spectra on the coarse run's retained band
    let mut err = 0.0_f64;
    let mut norm = 0.0_f64;
    for field in [(coarse.u(), fine.u()), (coarse.w(), fine.w())] {
        let (cg, fg) = (field.0.grid(), field.1.grid());
        for k in 0..=cg.n() / 3 {
            let a = field.0.coefficients()[k];
            let b = field.1.coefficients()[k];
            err += (a - b).norm_sqr();
            norm += b.norm_sqr();
            if k > 0 {
                let a = field.0.coefficients()[cg.n() - k];
                let b = field.1.coefficients()[fg.n() - k];
                err += (a - b).norm_sqr();
                norm += b.norm_sqr();
            }
        }
    }
    let rel = (err / norm).sqrt();
    println!("coarse vs fine relative spectral mismatch at T=5: {rel:.3e}");
    assert!(
        rel < 1e-5,
        "coarse/fine mismatch {rel:e} exceeds resolution budget"
    );
}
