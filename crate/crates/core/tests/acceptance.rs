//! Acceptance suite: parameter-count reproduction, gradient exactness across
//! the whole catalog, variant equivalence oracles, BIBO boundedness, and the
//! desk-scale learning regression. One pass/fail line prints per criterion
//! (run with --nocapture to see them).

use slimrnn_core::dynamics::{
    clone_with_zeroed_input_weights, forward_sequence, init_params, CellRecurrent, CellState,
    GateParams, InitScheme, Parameters,
};
use slimrnn_core::gradcheck::gradient_check;
use slimrnn_core::numerics::{ActivationKind, Matrix, Vector};
use slimrnn_core::optim::OptimizerState;
use slimrnn_core::rng::Rng64;
use slimrnn_core::tasks::{TaskKind, TaskSpec};
use slimrnn_core::taxonomy::{
    param_count, variant_config, CellConfig, GateForm, VariantId, DEFAULT_ALPHA,
};
use slimrnn_core::train::{init_model, train_epochs, TrainSettings, TrainState};

fn cfg(id: VariantId) -> CellConfig {
    variant_config(id, DEFAULT_ALPHA, ActivationKind::Tanh).unwrap()
}

fn random_inputs(rng: &mut Rng64, t: usize, m: usize, bound: f64) -> Vec<Vector> {
    (0..t).map(|_| Vector::from_fn(m, |_| rng.uniform(-bound, bound))).collect()
}

#[test]
fn criterion_1_parameter_count_reproduction() {
    // Standard LSTM at n=100, m=64.
    let lstm = cfg(VariantId::LSTM);
    assert_eq!(param_count(&lstm, 100, 64), 66000);

    // Per-gate counts of the gate-reduction variants 1-5.
    for n in 1usize..=64 {
        for m in 1usize..=64 {
            assert_eq!(param_count(&lstm, n, m), 4 * (n * n + n * m + n));
            let gate_cost = |id: VariantId| {
                let c = cfg(id);
                param_count(&c, n, m) - (n * n + n * m + n)
            };
            assert_eq!(gate_cost(VariantId::LSTM_1), 3 * (n * n + n));
            assert_eq!(gate_cost(VariantId::LSTM_2), 3 * (n * n));
            assert_eq!(gate_cost(VariantId::LSTM_3), 3 * n);
            assert_eq!(gate_cost(VariantId::LSTM_4), 3 * n);
            assert_eq!(gate_cost(VariantId::LSTM_5), 3 * 2 * n);
        }
    }
    println!("ACCEPTANCE 1 (parameter-count reproduction): PASS");
}

#[test]
fn criterion_2_gradient_exactness_all_variants() {
    for id in VariantId::ALL {
        let config = cfg(id);
        for (n, m, t) in [(2, 1, 3), (4, 3, 5), (8, 3, 7)] {
            for seed in [1u64, 2, 3] {
                let report = gradient_check(&config, n, m, t, seed, 1e-5, 1e-5).unwrap();
                assert!(
                    report.pass,
                    "{} at ({n},{m},{t}) seed {seed}:\n{}",
                    id.name(),
                    report.render_table()
                );
            }
        }
    }
    println!("ACCEPTANCE 2 (gradient exactness, 23 variants x 3 dims x 3 seeds): PASS");
}

fn empty_gate() -> GateParams {
    GateParams { w: None, u_dense: None, u_vec: None, b: None }
}

#[test]
fn criterion_3_equivalence_oracles() {
    let t = 20;
    // E1: standard LSTM with zeroed gate input weights == LSTM_1 sharing the
    // remaining arrays, bit-identical.
    for seed in 0..10u64 {
        let lstm = cfg(VariantId::LSTM);
        let params = init_params(&lstm, 4, 3, seed, InitScheme::UniformFanIn).unwrap();
        let zeroed = clone_with_zeroed_input_weights(&params).unwrap();

        let share = |g: &GateParams| GateParams {
            w: None,
            u_dense: g.u_dense.clone(),
            u_vec: None,
            b: g.b.clone(),
        };
        let p1 = Parameters {
            n: params.n,
            m: params.m,
            w_c: params.w_c.clone(),
            u_c: params.u_c.clone(),
            b_c: params.b_c.clone(),
            gate_i: share(&params.gate_i),
            gate_f: share(&params.gate_f),
            gate_o: share(&params.gate_o),
        };
        let mut rng = Rng64::new(1000 + seed);
        let inputs = random_inputs(&mut rng, t, 3, 1.0);
        let (sa, _) = forward_sequence(&lstm, &zeroed, &inputs, &CellState::zeros(4)).unwrap();
        let (sb, _) =
            forward_sequence(&cfg(VariantId::LSTM_1), &p1, &inputs, &CellState::zeros(4)).unwrap();
        for (a, b) in sa.iter().zip(&sb) {
            assert_eq!(a.h, b.h, "E1 not bit-identical at seed {seed}");
        }
    }

    // E2: LSTM_3 with zero biases == gates fixed at the constant 0.5.
    for seed in 0..10u64 {
        let lstm3 = cfg(VariantId::LSTM_3);
        let mut params = init_params(&lstm3, 4, 3, seed, InitScheme::UniformFanIn).unwrap();
        params.gate_i.b = Some(Vector::zeros(4));
        params.gate_f.b = Some(Vector::zeros(4));
        params.gate_o.b = Some(Vector::zeros(4));

        let half_gates = CellConfig {
            input_gate: GateForm::Constant(0.5),
            forget_gate: GateForm::Constant(0.5),
            output_gate: GateForm::Constant(0.5),
            ..lstm3
        };
        let p_half = Parameters {
            gate_i: empty_gate(),
            gate_f: empty_gate(),
            gate_o: empty_gate(),
            ..params.clone()
        };
        let mut rng = Rng64::new(2000 + seed);
        let inputs = random_inputs(&mut rng, t, 3, 1.0);
        let (sa, _) = forward_sequence(&lstm3, &params, &inputs, &CellState::zeros(4)).unwrap();
        let (sb, _) = forward_sequence(&half_gates, &p_half, &inputs, &CellState::zeros(4)).unwrap();
        for (a, b) in sa.iter().zip(&sb) {
            assert_eq!(a.h, b.h, "E2 trajectories differ at seed {seed}");
            assert_eq!(a.c, b.c, "E2 trajectories differ at seed {seed}");
        }
    }

    // E3a: LSTM_4 with vector u_g == LSTM_2 with U_g = diag(u_g).
    for seed in 0..10u64 {
        let lstm4 = cfg(VariantId::LSTM_4);
        let p4 = init_params(&lstm4, 4, 3, seed, InitScheme::UniformFanIn).unwrap();
        let embed = |g: &GateParams| GateParams {
            w: None,
            u_dense: Some(Matrix::diag(g.u_vec.as_ref().unwrap())),
            u_vec: None,
            b: None,
        };
        let p2 = Parameters {
            gate_i: embed(&p4.gate_i),
            gate_f: embed(&p4.gate_f),
            gate_o: embed(&p4.gate_o),
            ..p4.clone()
        };
        let mut rng = Rng64::new(3000 + seed);
        let inputs = random_inputs(&mut rng, t, 3, 1.0);
        let (sa, _) = forward_sequence(&lstm4, &p4, &inputs, &CellState::zeros(4)).unwrap();
        let (sb, _) =
            forward_sequence(&cfg(VariantId::LSTM_2), &p2, &inputs, &CellState::zeros(4)).unwrap();
        for (a, b) in sa.iter().zip(&sb) {
            for i in 0..4 {
                assert!((a.h.get(i) - b.h.get(i)).abs() <= 1e-12, "E3a diverged at seed {seed}");
            }
        }
    }

    // E3b: CELL_1 with vector u_c == standard LSTM with U_c = diag(u_c).
    for seed in 0..10u64 {
        let cell1 = cfg(VariantId::CELL_1);
        let pc = init_params(&cell1, 4, 3, seed, InitScheme::UniformFanIn).unwrap();
        let u_vec = match &pc.u_c {
            CellRecurrent::Pointwise(u) => u.clone(),
            _ => unreachable!(),
        };
        let p_dense = Parameters { u_c: CellRecurrent::Dense(Matrix::diag(&u_vec)), ..pc.clone() };
        let mut rng = Rng64::new(4000 + seed);
        let inputs = random_inputs(&mut rng, t, 3, 1.0);
        let (sa, _) = forward_sequence(&cell1, &pc, &inputs, &CellState::zeros(4)).unwrap();
        let (sb, _) =
            forward_sequence(&cfg(VariantId::LSTM), &p_dense, &inputs, &CellState::zeros(4))
                .unwrap();
        for (a, b) in sa.iter().zip(&sb) {
            for i in 0..4 {
                assert!((a.h.get(i) - b.h.get(i)).abs() <= 1e-12, "E3b diverged at seed {seed}");
            }
        }
    }

    println!("ACCEPTANCE 3 (equivalence oracles E1/E2/E3, 10 instances each): PASS");
}

#[test]
fn criterion_4_bibo_boundedness() {
    let alpha = 0.96;
    let n = 4;
    let m = 3;
    let t = 500;
    let input_bound = 1.0;
    let constant_forget: Vec<VariantId> = VariantId::ALL
        .into_iter()
        .filter(|id| {
            let c = variant_config(*id, alpha, ActivationKind::Tanh).unwrap();
            c.forget_gate.is_constant()
        })
        .collect();
    assert_eq!(constant_forget.len(), 12);

    for id in constant_forget {
        let config = variant_config(id, alpha, ActivationKind::Tanh).unwrap();
        for trial in 0..100u64 {
            let params = init_params(&config, n, m, trial, InitScheme::UniformFanIn).unwrap();
            let mut rng = Rng64::new(5000 + trial);
            let inputs = random_inputs(&mut rng, t, m, input_bound);
            let (states, _) =
                forward_sequence(&config, &params, &inputs, &CellState::zeros(n)).unwrap();
            if config.outer_nonlinearity {
                // |c_t| <= alpha |c_{t-1}| + 1, hence ||c_t|| <= 1/(1-alpha).
                let limit = 1.0 / (1.0 - alpha);
                for s in &states {
                    assert!(
                        s.c.inf_norm() <= limit,
                        "{} trial {trial}: ||c|| = {} > {limit}",
                        id.name(),
                        s.c.inf_norm()
                    );
                }
            } else {
                // Geometric affine bound with ||h|| <= 1 from h = tanh(c).
                let mix_norm = match &params.u_c {
                    CellRecurrent::Dense(u) => u.inf_norm(),
                    CellRecurrent::Pointwise(u) => u.inf_norm(),
                };
                let bias_norm = params.b_c.as_ref().map(|b| b.inf_norm()).unwrap_or(0.0);
                let gain = params.w_c.inf_norm() * input_bound + mix_norm + bias_norm;
                let mut bound = 0.0;
                for s in &states {
                    bound = alpha * bound + gain;
                    assert!(
                        s.c.inf_norm() <= bound + 1e-9,
                        "{} trial {trial}: ||c|| = {} > {bound}",
                        id.name(),
                        s.c.inf_norm()
                    );
                }
            }
        }
    }
    println!("ACCEPTANCE 4 (BIBO boundedness, 12 constant-forget variants x 100 trajectories): PASS");
}

#[test]
fn criterion_5_desk_scale_learning_regression() {
    let n = 32;
    let gate = 0.05;
    let max_epochs = 200;
    let task = TaskSpec {
        kind: TaskKind::AddingProblem,
        sequence_length: 30,
        batch_size: 32,
        seed: 7,
    };

    let mut lstm_params = 0usize;
    let mut lstm3_params = 0usize;
    for id in [VariantId::LSTM, VariantId::LSTM_1, VariantId::LSTM_2, VariantId::LSTM_3] {
        let config = cfg(id);
        let cell_params = param_count(&config, n, 2);
        match id {
            VariantId::LSTM => lstm_params = cell_params,
            VariantId::LSTM_3 => lstm3_params = cell_params,
            _ => {}
        }
        let model = init_model(&config, n, &task, 7).unwrap();
        let opt = OptimizerState::adam(1e-3, Some(5.0), model.scalar_count());
        let mut state = TrainState { model, opt, epochs_done: 0, global_step: 0 };
        let mut reached = None;
        for epoch in 1..=max_epochs {
            let settings = TrainSettings {
                epochs: epoch,
                steps_per_epoch: 10,
                eval_batches: 2,
                eval_seed: 99,
            };
            let outcome = train_epochs(&mut state, &task, &settings).unwrap();
            assert!(outcome.fault.is_none(), "{}: numeric fault", id.name());
            let rec = outcome.records.last().unwrap();
            if rec.val_metric < gate {
                reached = Some((epoch, rec.val_metric));
                break;
            }
        }
        let (epoch, mse) = reached
            .unwrap_or_else(|| panic!("{} never reached MSE < {gate} in {max_epochs} epochs", id.name()));
        println!("  {} reached MSE {mse:.4} at epoch {epoch} ({cell_params} cell params)", id.name());
    }

    let saving = 1.0 - lstm3_params as f64 / lstm_params as f64;
    assert!(saving >= 0.35, "LSTM_3 saves only {:.1}%", 100.0 * saving);
    println!(
        "ACCEPTANCE 5 (adding problem T=30: LSTM/1/2/3 all < {gate} MSE; LSTM_3 uses {:.1}% fewer cell params): PASS",
        100.0 * saving
    );
}
