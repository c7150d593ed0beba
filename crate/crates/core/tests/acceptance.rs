//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints its `PASS`/`FAIL` line; exits non-zero if any fails.

use std::sync::OnceLock;

use lrc_core::analysis::{
    default_h_bound, empirical_lipschitz, generalization_bound, lipschitz_bound, lipschitz_probes,
    lrc_model_from_stc, GeneralizationBoundInputs,
};
use lrc_core::autodiff::{gradient_pair, GRAD_CHECK_TOL};
use lrc_core::math::ElastanceKind;
use lrc_core::model::{InitialState, Model, ModelKind, ModelSpec, SequenceInput};
use lrc_core::solvers::{dopri45_solve, euler_advance, DopriConfig, SolverConfig};
use lrc_core::tasks::{
    generate_default, synthetic_irregular_classification, ClassificationConfig, OdeSystem,
};
use lrc_core::train::{
    rollout_input, train_ode_task, train_sequence_task, OdeTaskConfig, SequenceTaskConfig,
    TrainedOde,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {id} {}: {name} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

// gradient correctness
const GRAD_INSTANCES: usize = 50;
const GRAD_MAX_M: usize = 4;
const GRAD_MAX_N: usize = 3;
const GRAD_MAX_T: usize = 8;
const FD_STEP: f64 = 1e-5;

// Lipschitz bound ordering
const BOUND_INSTANCES: usize = 100;
const SHRINK: f64 = 0.5;

// discretization identities
const IDENTITY_INSTANCES: usize = 1000;
const IDENTITY_REL_TOL: f64 = 1e-15;

// ODE benchmark bands on the mean test MSE of three seeds
const ODE_SEEDS: [u64; 3] = [0, 1, 2];
const LRC_BANDS: [(OdeSystem, f64); 6] = [
    (OdeSystem::Sinusoid, 0.04),
    (OdeSystem::Spiral, 0.02),
    (OdeSystem::Duffing, 0.013),
    (OdeSystem::PeriodicLv, 0.015),
    (OdeSystem::AsymptoticLv, 0.019),
    (OdeSystem::NonlinearLv, 0.020),
];
const LRC_WINS_NEEDED: usize = 5;

// solver orders
const EULER_RATIO_TOL: f64 = 0.1;
const DOPRI_RTOLS: [f64; 5] = [1e-4, 1e-5, 1e-6, 1e-7, 1e-8];
const DOPRI_FACTOR: f64 = 10.0;

// elastance inequality grid (100 x 100 points)
const GRID: usize = 100;

// classification stand-in
const CLASSIFICATION_EPOCHS: usize = 100;
const CLASSIFICATION_TARGET: f64 = 0.9;
const CLASSIFICATION_SEEDS: [u64; 3] = [0, 1, 2];

// certified versus measured
const EMPIRICAL_SLACK: f64 = 1e-6;

fn small_spec(
    kind: ModelKind,
    rng: &mut ChaCha8Rng,
    elastance: Option<ElastanceKind>,
) -> ModelSpec {
    let m = rng.random_range(1..=GRAD_MAX_M);
    let n = rng.random_range(0..=GRAD_MAX_N);
    let k = rng.random_range(1..=3);
    let mut spec = ModelSpec::new(kind, m, n, k);
    spec.elastance = elastance;
    spec
}

fn random_sequence(spec: &ModelSpec, steps: usize, rng: &mut ChaCha8Rng) -> SequenceInput {
    let inputs = (0..steps)
        .map(|_| (0..spec.n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut seq = SequenceInput::new(inputs);
    seq.dt = Some((0..steps).map(|_| rng.random_range(0.2..1.2)).collect());
    seq.initial = InitialState::State(
        (0..spec.state_len())
            .map(|_| rng.random_range(-0.5..0.5))
            .collect(),
    );
    seq
}

fn criterion_1_gradients_match_finite_differences() -> bool {
    let e1 = SolverConfig::explicit_euler(1, 0.7);
    let h6 = SolverConfig::hybrid_euler(6, 0.7);
    let sym = Some(ElastanceKind::Symmetric);
    let asym = Some(ElastanceKind::Asymmetric);
    let cases: Vec<(&str, ModelKind, SolverConfig, Vec<Option<ElastanceKind>>)> = vec![
        ("LTC+H6", ModelKind::Ltc, h6, vec![None]),
        ("STC+E1", ModelKind::Stc, e1, vec![None]),
        ("STC+H6", ModelKind::Stc, h6, vec![None]),
        ("LRC+E1", ModelKind::Lrc, e1, vec![sym, asym]),
        ("LRC+H6", ModelKind::Lrc, h6, vec![sym, asym]),
        ("LRCU-A", ModelKind::Lrcu, e1, vec![asym]),
        ("LRCU-S", ModelKind::Lrcu, e1, vec![sym]),
        ("GRU", ModelKind::Gru, e1, vec![None]),
        ("GRU-ODE+E1", ModelKind::GruOde, e1, vec![None]),
        ("MGU", ModelKind::Mgu, e1, vec![None]),
        ("LSTM", ModelKind::Lstm, e1, vec![None]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = (0.0f64, String::new());
    for (label, kind, solver, elastances) in &cases {
        for i in 0..GRAD_INSTANCES {
            let spec = small_spec(*kind, &mut rng, elastances[i % elastances.len()]);
            let model = Model::init(spec, rng.random()).unwrap();
            let steps = rng.random_range(1..=GRAD_MAX_T);
            let seq = random_sequence(&spec, steps, &mut rng);
            let (analytic, fd) = gradient_pair(&model, solver, &seq, FD_STEP).unwrap();
            let cmp = analytic.compare(&fd).unwrap();
            if cmp.max_rel_error >= worst.0 {
                worst = (
                    cmp.max_rel_error,
                    format!("{label} instance {i} {}", cmp.worst_tensor),
                );
            }
        }
    }
    let pass = worst.0 <= GRAD_CHECK_TOL;
    report(
        1,
        "BPTT matches central differences",
        pass,
        &format!(
            "{} instances per kind, worst {:.2e} at {}",
            GRAD_INSTANCES, worst.0, worst.1
        ),
    );
    pass
}

struct Pair {
    stc: f64,
    lrc: f64,
}

fn bound_pairs() -> &'static Vec<Pair> {
    static PAIRS: OnceLock<Vec<Pair>> = OnceLock::new();
    PAIRS.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        (0..BOUND_INSTANCES)
            .map(|_| {
                let spec = small_spec(ModelKind::Stc, &mut rng, None);
                let stc = Model::init(spec, rng.random()).unwrap();
                let lrc = lrc_model_from_stc(&stc, ElastanceKind::Symmetric, SHRINK, rng.random())
                    .unwrap();
                let dt = rng.random_range(0.05..2.0);
                let h_bound: Vec<f64> = (0..spec.m).map(|_| rng.random_range(0.0..3.0)).collect();
                Pair {
                    stc: lipschitz_bound(&stc, dt, &h_bound).unwrap().lambda,
                    lrc: lipschitz_bound(&lrc, dt, &h_bound).unwrap().lambda,
                }
            })
            .collect()
    })
}

fn criterion_2_lrc_bound_is_below_stc_bound() -> bool {
    let pairs = bound_pairs();
    let holds = pairs.iter().filter(|p| p.lrc < p.stc).count();
    let pass = holds == BOUND_INSTANCES;
    let max_ratio = pairs.iter().map(|p| p.lrc / p.stc).fold(0.0, f64::max);
    report(
        2,
        "lambda(LRC) < lambda(STC)",
        pass,
        &format!("{holds}/{BOUND_INSTANCES}, largest ratio {max_ratio:.4}"),
    );
    pass
}

fn criterion_3_generalization_bound_ordering() -> bool {
    let pairs = bound_pairs();
    let bound = |lambda| {
        generalization_bound(&GeneralizationBoundInputs {
            eps_t: 0.01,
            eps_y: 0.1,
            eps_o: 0.02,
            lambda,
        })
        .unwrap()
    };
    let holds = pairs.iter().filter(|p| bound(p.lrc) < bound(p.stc)).count();
    let pass = holds == BOUND_INSTANCES;
    report(
        3,
        "L(LRC) < L(STC) at equal epsilons",
        pass,
        &format!("{holds}/{BOUND_INSTANCES}"),
    );
    pass
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs();
            if d == 0.0 {
                0.0
            } else {
                d / x.abs().max(y.abs())
            }
        })
        .fold(0.0, f64::max)
}

fn criterion_4_discretization_identities() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let euler = SolverConfig::explicit_euler(1, 1.0);
    let (mut lrc_worst, mut gru_worst) = (0.0f64, 0.0f64);
    for i in 0..IDENTITY_INSTANCES {
        let el = if i % 2 == 0 {
            ElastanceKind::Symmetric
        } else {
            ElastanceKind::Asymmetric
        };
        let spec = small_spec(ModelKind::Lrcu, &mut rng, Some(el));
        let lrcu = Model::init(spec, rng.random()).unwrap();
        let mut lrc = lrcu.clone();
        lrc.spec.kind = ModelKind::Lrc;
        let h: Vec<f64> = (0..spec.m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..spec.n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = lrcu.step(&euler, &h, &x, 1.0).unwrap();
        let b = lrc.step(&euler, &h, &x, 1.0).unwrap();
        lrc_worst = lrc_worst.max(max_rel_diff(&a, &b));

        let spec = small_spec(ModelKind::Gru, &mut rng, None);
        let gru = Model::init(spec, rng.random()).unwrap();
        let mut ode = gru.clone();
        ode.spec.kind = ModelKind::GruOde;
        let h: Vec<f64> = (0..spec.m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..spec.n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = gru.step(&euler, &h, &x, 1.0).unwrap();
        let b = ode.step(&euler, &h, &x, 1.0).unwrap();
        gru_worst = gru_worst.max(max_rel_diff(&a, &b));
    }
    let pass = lrc_worst <= IDENTITY_REL_TOL && gru_worst <= IDENTITY_REL_TOL;
    report(
        4,
        "LRCU = Euler-1(LRC), GRU = Euler-1(GRU-ODE)",
        pass,
        &format!("{IDENTITY_INSTANCES} instances each, worst {lrc_worst:.1e} / {gru_worst:.1e}"),
    );
    pass
}

struct OdeRuns {
    lrc: Vec<(OdeSystem, Vec<TrainedOde>)>,
    neural: Vec<(OdeSystem, Vec<f64>)>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn ode_runs() -> &'static OdeRuns {
    static RUNS: OnceLock<OdeRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut lrc = Vec::new();
        let mut neural = Vec::new();
        for (system, _) in LRC_BANDS {
            let traj = generate_default(system).unwrap();
            let runs = ODE_SEEDS
                .iter()
                .map(|&s| train_ode_task(&traj, &OdeTaskConfig::lrc(system, s)).unwrap())
                .collect();
            lrc.push((system, runs));
            let losses = ODE_SEEDS
                .iter()
                .map(
                    |&s| match train_ode_task(&traj, &OdeTaskConfig::neural_ode(system, s)) {
                        Ok(t) => t.test_loss,
                        Err(lrc_core::Error::Diverged { .. }) => f64::INFINITY,
                        Err(e) => panic!("{system}: {e}"),
                    },
                )
                .collect();
            neural.push((system, losses));
        }
        OdeRuns { lrc, neural }
    })
}

fn criterion_5_ode_benchmarks() -> bool {
    let runs = ode_runs();
    let mut in_band = 0;
    let mut wins = 0;
    println!(
        "{:<14} {:>12} {:>8} {:>12}",
        "task", "LRC mean", "band", "Neural-ODE"
    );
    for ((system, band), ((_, lrc), (_, neural))) in
        LRC_BANDS.iter().zip(runs.lrc.iter().zip(&runs.neural))
    {
        let lrc_mean = mean(&lrc.iter().map(|t| t.test_loss).collect::<Vec<_>>());
        let node_mean = mean(neural);
        in_band += usize::from(lrc_mean <= *band);
        wins += usize::from(lrc_mean < node_mean);
        println!(
            "{:<14} {lrc_mean:>12.4e} {band:>8} {node_mean:>12.4e}",
            system.name()
        );
    }
    let pass = in_band == LRC_BANDS.len() && wins >= LRC_WINS_NEEDED;
    report(
        5,
        "ODE benchmark test losses",
        pass,
        &format!(
            "{in_band}/6 LRC means within band, LRC better on {wins}/6 (need {LRC_WINS_NEEDED})"
        ),
    );
    pass
}

fn criterion_6_solver_orders() -> bool {
    let system = OdeSystem::Spiral;
    let deriv = |h: &[f64], _: &[f64]| Ok(system.derivative(h).to_vec());
    let exact = |t: f64| {
        let r = 2.0 * (-0.1 * t).exp();
        [r * (3.0 * t).cos(), -r * (3.0 * t).sin()]
    };
    let horizon = 1.0;
    let euler_error = |steps: usize| {
        let dt = horizon / steps as f64;
        let mut h = vec![2.0, 0.0];
        for _ in 0..steps {
            h = euler_advance(deriv, &h, &[], &SolverConfig::explicit_euler(1, dt)).unwrap();
        }
        let e = exact(horizon);
        ((h[0] - e[0]).powi(2) + (h[1] - e[1]).powi(2)).sqrt()
    };
    // dt, 2 dt, 4 dt, 8 dt, 16 dt
    let errors: Vec<f64> = [16_000, 8_000, 4_000, 2_000, 1_000]
        .iter()
        .map(|&s| euler_error(s))
        .collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[1] / w[0]).collect();
    let euler_ok = ratios
        .iter()
        .all(|r| (r - 2.0).abs() <= 2.0 * EULER_RATIO_TOL);

    let mut dopri_worst = 0.0f64;
    let times: Vec<f64> = (1..=100).map(|i| 0.1 * i as f64).collect();
    for rtol in DOPRI_RTOLS {
        let cfg = DopriConfig::with_tolerances(rtol, rtol * 1e-3);
        let sol = dopri45_solve(
            |_, y| Ok(system.derivative(y).to_vec()),
            &[2.0, 0.0],
            (0.0, 10.0),
            &times,
            &cfg,
        )
        .unwrap();
        for (t, y) in &sol.samples {
            let e = exact(*t);
            let norm = (e[0] * e[0] + e[1] * e[1]).sqrt();
            let err = ((y[0] - e[0]).powi(2) + (y[1] - e[1]).powi(2)).sqrt() / norm;
            dopri_worst = dopri_worst.max(err / (DOPRI_FACTOR * rtol));
        }
    }
    let pass = euler_ok && dopri_worst <= 1.0;
    report(
        6,
        "Euler order 1, Dopri45 within 10 rtol",
        pass,
        &format!(
            "Euler ratios {}, Dopri worst error / (10 rtol) = {dopri_worst:.3}",
            ratios
                .iter()
                .map(|r| format!("{r:.3}"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    );
    pass
}

fn criterion_7_elastance_inequality() -> bool {
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for kind in [ElastanceKind::Asymmetric, ElastanceKind::Symmetric] {
        for i in 0..GRID {
            let w = -12.0 + 24.0 * i as f64 / (GRID - 1) as f64;
            for j in 0..GRID {
                let k = 6.0 * j as f64 / (GRID - 1) as f64;
                let e = kind.value(w, k);
                let d = kind.derivative(w, k).abs();
                // eps'/(1 - eps) <= eps, written without the division
                let gap = d - e * (1.0 - e);
                worst = worst.max(gap);
                if gap > 1e-15 {
                    violations += 1;
                }
            }
        }
    }
    let pass = violations == 0;
    report(
        7,
        "|eps'| / (1 - eps) <= eps on the (w, k) grid",
        pass,
        &format!(
            "{} points per kind, {violations} violations, max gap {worst:.1e}",
            GRID * GRID
        ),
    );
    pass
}

fn criterion_8_irregular_classification() -> bool {
    let data = synthetic_irregular_classification(500, 0).unwrap();
    let mut summary = Vec::new();
    let mut pass = true;
    for (label, el) in [
        ("LRCU-S", ElastanceKind::Symmetric),
        ("LRCU-A", ElastanceKind::Asymmetric),
    ] {
        let accs: Vec<f64> = CLASSIFICATION_SEEDS
            .iter()
            .map(|&s| {
                let mut cfg =
                    SequenceTaskConfig::new(ModelKind::Lrcu, 8, Some(el), CLASSIFICATION_EPOCHS, s);
                // intervals measured in units of the generator's mean interval
                cfg.dt_scale = 1.0 / ClassificationConfig::default().mean_dt;
                cfg.training.learning_rate = 1e-2;
                train_sequence_task(&data, &cfg).unwrap().1.test_accuracy
            })
            .collect();
        let m = mean(&accs);
        pass &= m >= CLASSIFICATION_TARGET;
        summary.push(format!("{label} {m:.3}"));
    }
    report(
        8,
        "irregular-sampling accuracy >= 0.9",
        pass,
        &summary.join(", "),
    );
    pass
}

fn criterion_9_measurement_never_exceeds_certificate() -> bool {
    let runs = ode_runs();
    let mut checked = 0;
    let mut worst = 0.0f64;
    for (system, trained) in &runs.lrc {
        let traj = generate_default(*system).unwrap();
        for (seed, t) in ODE_SEEDS.iter().zip(trained) {
            let cfg = OdeTaskConfig::lrc(*system, *seed);
            let seq = rollout_input(&cfg, &traj);
            let h_bound =
                default_h_bound(&t.model, &cfg.eval_solver, std::slice::from_ref(&seq)).unwrap();
            let dt = seq.dt.as_ref().unwrap()[0] / cfg.eval_solver.unfoldings as f64;
            let bound = lipschitz_bound(&t.model, dt, &h_bound).unwrap().lambda;
            let probes = lipschitz_probes(&h_bound, t.model.spec.n, 1.0, 1e-5, 500, *seed).unwrap();
            let measured =
                empirical_lipschitz(&t.model, &SolverConfig::explicit_euler(1, dt), &probes)
                    .unwrap();
            worst = worst.max(measured / bound);
            checked += 1;
        }
    }
    let pass = worst <= 1.0 + EMPIRICAL_SLACK;
    report(
        9,
        "empirical Lipschitz <= certified bound",
        pass,
        &format!("{checked} checkpoints, largest measured / certified = {worst:.4}"),
    );
    pass
}

fn main() {
    let criteria: [fn() -> bool; 9] = [
        criterion_1_gradients_match_finite_differences,
        criterion_2_lrc_bound_is_below_stc_bound,
        criterion_3_generalization_bound_ordering,
        criterion_4_discretization_identities,
        criterion_5_ode_benchmarks,
        criterion_6_solver_orders,
        criterion_7_elastance_inequality,
        criterion_8_irregular_classification,
        criterion_9_measurement_never_exceeds_certificate,
    ];
    let failed = criteria.iter().filter(|c| !c()).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
