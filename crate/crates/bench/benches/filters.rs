use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DVector;

use invukf_core::rkhs::rkhs_init;
use invukf_core::scenarios::{build_fm_demodulator, build_lorenz, build_vehicle_reentry, simulate_truth};
use invukf_core::{iukf_step, ukf_step, IukfState, UkfState};

fn forward(c: &mut Criterion) {
    let mut group = c.benchmark_group("ukf_step");
    for scenario in [build_fm_demodulator(), build_vehicle_reentry()] {
        let truth = simulate_truth(&scenario.model, &scenario.defaults.initial.truth, 1, 1).unwrap();
        let state = UkfState::new(scenario.defaults.initial.forward.clone(), scenario.defaults.forward_kappa);
        group.bench_function(scenario.model.name.clone(), |b| {
            b.iter(|| ukf_step(black_box(&state), black_box(&truth.observations[1]), &scenario.model).unwrap())
        });
    }
    group.finish();
}

fn inverse(c: &mut Criterion) {
    let mut group = c.benchmark_group("iukf_step");
    for scenario in [build_fm_demodulator(), build_vehicle_reentry()] {
        let model = &scenario.model;
        let truth = simulate_truth(model, &scenario.defaults.initial.truth, 1, 1).unwrap();
        let forward = UkfState::new(scenario.defaults.initial.forward.clone(), scenario.defaults.forward_kappa);
        let next = ukf_step(&forward, &truth.observations[1], model).unwrap().0;
        let action = model.defender_observe(&next.belief.mean, &next.belief.cov);
        let state = IukfState::new(
            scenario.defaults.initial.forward.clone(),
            scenario.defaults.inverse_kappa_bar,
            scenario.defaults.assumed_forward_kappa,
        );
        group.bench_function(model.name.clone(), |b| {
            b.iter(|| iukf_step(black_box(&state), black_box(&action), &truth.states[1], model).unwrap())
        });
    }
    group.finish();
}

fn kernel(c: &mut Criterion) {
    let lorenz = build_lorenz();
    let settings = &lorenz.defaults.rkhs.as_ref().unwrap().forward;
    let truth = simulate_truth(&lorenz.model, &lorenz.defaults.initial.truth, 40, 1).unwrap();
    let mut state = rkhs_init(
        &lorenz.defaults.initial.forward,
        lorenz.model.dims.n_y,
        lorenz.model.noise.q.clone(),
        lorenz.model.noise.r.clone(),
        settings,
    )
    .unwrap();
    // fill the sliding window so the benchmark sees a full dictionary
    for y in &truth.observations[1..] {
        state = invukf_core::rkhs::rkhs_step(&state, y).unwrap().0;
    }
    let y: DVector<f64> = truth.observations[40].clone();
    c.bench_function("rkhs_step/lorenz", |b| {
        b.iter(|| invukf_core::rkhs::rkhs_step(black_box(&state), black_box(&y)).unwrap())
    });
}

criterion_group!(benches, forward, inverse, kernel);
criterion_main!(benches);
