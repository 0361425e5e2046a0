//! Finite-difference gradient oracle and structured comparison report.
//!
//! The numeric side perturbs every scalar parameter and re-runs the full
//! forward pass (central differences), staying independent of the analytic
//! BPTT path it checks.

use crate::dynamics::{
    backward_sequence, forward_sequence, init_params, CellState, Gradients, InitScheme, Parameters,
};
use crate::error::{CoreError, Result};
use crate::numerics::Vector;
use crate::rng::{derive_seed, stream, Rng64};
use crate::taxonomy::CellConfig;

/// Deterministic scalar losses of the hidden-state sequence. Fixed catalog
/// items (not closures) so a check is replayable from a config file.
#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    /// Weighted sum over all steps of squared error against fixed targets.
    SumOfSquares { targets: Vec<Vector>, weight: f64 },
    /// Sum of the components of the final hidden state.
    SumFinalH,
}

/// Weight on the probe loss used by [`gradient_check`]. Central differences
/// carry an absolute error of roughly `ulp(loss) / (2 eps)`; scaling the loss
/// down keeps that error below the 1e-8 floor in the relative-error
/// denominator, so near-zero gradient entries are still compared meaningfully
/// instead of drowning in cancellation noise.
pub const PROBE_LOSS_WEIGHT: f64 = 1e-4;

impl LossSpec {
    /// Loss value and per-step gradient w.r.t. the hidden states.
    pub fn eval(&self, states: &[CellState]) -> Result<(f64, Vec<Vector>)> {
        match self {
            LossSpec::SumOfSquares { targets, weight } => {
                if targets.len() != states.len() {
                    return Err(CoreError::contract(format!(
                        "loss: {} targets vs {} states",
                        targets.len(),
                        states.len()
                    )));
                }
                let mut loss = 0.0;
                let mut grads = Vec::with_capacity(states.len());
                for (s, t) in states.iter().zip(targets) {
                    if s.h.len() != t.len() {
                        return Err(CoreError::contract("loss: target length mismatch"));
                    }
                    for i in 0..t.len() {
                        let d = s.h.get(i) - t.get(i);
                        loss += weight * d * d;
                    }
                    grads.push(Vector::from_fn(t.len(), |i| {
                        2.0 * weight * (s.h.get(i) - t.get(i))
                    }));
                }
                Ok((loss, grads))
            }
            LossSpec::SumFinalH => {
                let n = states.last().map(|s| s.h.len()).unwrap_or(0);
                let mut grads = vec![Vector::zeros(n); states.len()];
                let last = states
                    .last()
                    .ok_or_else(|| CoreError::contract("loss: empty state sequence"))?;
                let loss = last.h.as_slice().iter().sum();
                *grads.last_mut().unwrap() = Vector::from_fn(n, |_| 1.0);
                Ok((loss, grads))
            }
        }
    }
}

fn loss_of(
    config: &CellConfig,
    params: &Parameters,
    inputs: &[Vector],
    spec: &LossSpec,
) -> Result<f64> {
    let (states, _) = forward_sequence(config, params, inputs, &CellState::zeros(params.n))?;
    let (loss, _) = spec.eval(&states)?;
    if !loss.is_finite() {
        return Err(CoreError::NumericFault { step: inputs.len() });
    }
    Ok(loss)
}

/// Central finite differences over every scalar parameter: two full forward
/// evaluations per scalar.
pub fn numeric_gradient(
    config: &CellConfig,
    params: &Parameters,
    inputs: &[Vector],
    spec: &LossSpec,
    eps: f64,
) -> Result<Gradients> {
    if eps <= 0.0 {
        return Err(CoreError::contract("numeric_gradient: eps must be positive"));
    }
    let flat = params.flatten();
    let mut grad_flat = vec![0.0; flat.len()];
    let mut work = params.clone();
    for k in 0..flat.len() {
        let mut perturbed = flat.clone();
        perturbed[k] = flat[k] + eps;
        work.assign_from_flat(&perturbed)?;
        let plus = loss_of(config, &work, inputs, spec)?;
        perturbed[k] = flat[k] - eps;
        work.assign_from_flat(&perturbed)?;
        let minus = loss_of(config, &work, inputs, spec)?;
        grad_flat[k] = (plus - minus) / (2.0 * eps);
    }
    let mut grads = params.zeros_like();
    grads.assign_from_flat(&grad_flat)?;
    Ok(grads)
}

/// Worst disagreement within one parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub name: String,
    pub max_rel_err: f64,
    /// Flat index of the worst scalar within the group.
    pub argmax: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Comparison of analytic BPTT against the finite-difference oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub eps: f64,
    pub threshold: f64,
    pub groups: Vec<GroupReport>,
    pub pass: bool,
}

impl GradCheckReport {
    /// Line-oriented human-readable table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<6} {:>14} {:>8} {:>16} {:>16}\n",
            "group", "max_rel_err", "argmax", "analytic", "numeric"
        ));
        for g in &self.groups {
            out.push_str(&format!(
                "{:<6} {:>14.6e} {:>8} {:>16.9e} {:>16.9e}\n",
                g.name, g.max_rel_err, g.argmax, g.analytic, g.numeric
            ));
        }
        out.push_str(&format!(
            "result: {} (eps {:e}, threshold {:e})\n",
            if self.pass { "PASS" } else { "FAIL" },
            self.eps,
            self.threshold
        ));
        out
    }
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn compare(
    analytic: &Gradients,
    numeric: &Gradients,
    eps: f64,
    threshold: f64,
) -> GradCheckReport {
    let names = analytic.group_names();
    let a_groups = analytic.group_slices();
    let n_groups = numeric.group_slices();
    let mut groups = Vec::with_capacity(names.len());
    let mut pass = true;
    for ((name, a), b) in names.into_iter().zip(a_groups).zip(n_groups) {
        let mut worst = GroupReport {
            name,
            max_rel_err: 0.0,
            argmax: 0,
            analytic: a.first().copied().unwrap_or(0.0),
            numeric: b.first().copied().unwrap_or(0.0),
        };
        for (k, (&av, &nv)) in a.iter().zip(b.iter()).enumerate() {
            let rel = relative_error(av, nv);
            if rel > worst.max_rel_err {
                worst.max_rel_err = rel;
                worst.argmax = k;
                worst.analytic = av;
                worst.numeric = nv;
            }
        }
        pass &= worst.max_rel_err < threshold;
        groups.push(worst);
    }
    GradCheckReport { eps, threshold, groups, pass }
}

/// Draws parameters, inputs and targets deterministically from `seed`, runs
/// analytic BPTT against the finite-difference oracle, and reports the worst
/// relative error per parameter group.
pub fn gradient_check(
    config: &CellConfig,
    n: usize,
    m: usize,
    t: usize,
    seed: u64,
    eps: f64,
    threshold: f64,
) -> Result<GradCheckReport> {
    gradient_check_with_corruption(config, n, m, t, seed, eps, threshold, None)
}

/// As [`gradient_check`], optionally corrupting one analytic gradient entry
/// (flat index) by +0.1 — a fault-injection hook for exercising the FAIL path.
#[allow(clippy::too_many_arguments)]
pub fn gradient_check_with_corruption(
    config: &CellConfig,
    n: usize,
    m: usize,
    t: usize,
    seed: u64,
    eps: f64,
    threshold: f64,
    corrupt_index: Option<usize>,
) -> Result<GradCheckReport> {
    if threshold <= 0.0 {
        return Err(CoreError::contract("gradient_check: threshold must be positive"));
    }
    let params = init_params(config, n, m, derive_seed(seed, stream::INIT), InitScheme::UniformFanIn)?;

    let mut in_rng = Rng64::new(derive_seed(seed, stream::GRADCHECK_INPUTS));
    let inputs: Vec<Vector> =
        (0..t).map(|_| Vector::from_fn(m, |_| in_rng.uniform(-1.0, 1.0))).collect();
    let mut tgt_rng = Rng64::new(derive_seed(seed, stream::GRADCHECK_TARGETS));
    let targets: Vec<Vector> =
        (0..t).map(|_| Vector::from_fn(n, |_| tgt_rng.uniform(-0.5, 0.5))).collect();
    let spec = LossSpec::SumOfSquares { targets, weight: PROBE_LOSS_WEIGHT };

    let (states, caches) = forward_sequence(config, &params, &inputs, &CellState::zeros(n))?;
    let (_, d_h) = spec.eval(&states)?;
    let (mut analytic, _) = backward_sequence(config, &params, &caches, &d_h)?;
    if let Some(k) = corrupt_index {
        let mut flat = analytic.flatten();
        if k >= flat.len() {
            return Err(CoreError::contract(format!(
                "corrupt index {k} out of range ({} scalars)",
                flat.len()
            )));
        }
        flat[k] += 0.1;
        analytic.assign_from_flat(&flat)?;
    }
    let numeric = numeric_gradient(config, &params, &inputs, &spec, eps)?;
    Ok(compare(&analytic, &numeric, eps, threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ActivationKind;
    use crate::taxonomy::{variant_config, VariantId, DEFAULT_ALPHA};

    fn cfg(id: VariantId) -> CellConfig {
        variant_config(id, DEFAULT_ALPHA, ActivationKind::Tanh).unwrap()
    }

    #[test]
    fn constant_loss_gives_zero_numeric_gradient() {
        let c = cfg(VariantId::LSTM);
        let params = init_params(&c, 2, 2, 0, InitScheme::Zero).unwrap();
        let inputs = vec![Vector::zeros(2); 3];
        let spec =
            LossSpec::SumOfSquares { targets: vec![Vector::zeros(2); 3], weight: 1.0 };
        // All-zero parameters and inputs sit at the flat point h = 0; the
        // sum-of-squares against zero targets is stationary there only in the
        // trivial components. Use the interior-point guarantee instead: loss
        // value itself is exactly zero and finite.
        let g = numeric_gradient(&c, &params, &inputs, &spec, 1e-5).unwrap();
        assert!(g.flatten().iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn quadratic_in_bias_is_exact_for_central_differences() {
        // LSTM_6b with n=1, m=1, T=1: h = g(c) with g = identity-like? Use
        // tanh but check against the analytic derivative instead: loss is a
        // smooth function of b_c; central differences at eps=1e-5 agree with
        // BPTT to ~1e-10.
        let c = cfg(VariantId::LSTM_6b);
        let report = gradient_check(&c, 1, 1, 1, 3, 1e-5, 1e-7).unwrap();
        assert!(report.pass, "{}", report.render_table());
    }

    #[test]
    fn standard_lstm_passes_check() {
        let c = cfg(VariantId::LSTM);
        let report = gradient_check(&c, 4, 3, 5, 7, 1e-5, 1e-5).unwrap();
        assert!(report.pass, "{}", report.render_table());
    }

    #[test]
    fn c6b_passes_check() {
        let c = cfg(VariantId::LSTM_C6b);
        let report = gradient_check(&c, 4, 3, 5, 7, 1e-5, 1e-5).unwrap();
        assert!(report.pass, "{}", report.render_table());
    }

    #[test]
    fn corrupted_gradient_fails_at_the_corrupted_entry() {
        let c = cfg(VariantId::LSTM);
        let clean = gradient_check(&c, 3, 2, 4, 11, 1e-5, 1e-5).unwrap();
        assert!(clean.pass);
        // Corrupt the first w_c scalar.
        let report =
            gradient_check_with_corruption(&c, 3, 2, 4, 11, 1e-5, 1e-5, Some(0)).unwrap();
        assert!(!report.pass);
        let wc = &report.groups[0];
        assert_eq!(wc.name, "w_c");
        assert_eq!(wc.argmax, 0);
        assert!(wc.max_rel_err > 1e-2);
    }

    #[test]
    fn report_is_deterministic() {
        let c = cfg(VariantId::LSTM_5i);
        let a = gradient_check(&c, 3, 2, 4, 5, 1e-5, 1e-5).unwrap();
        let b = gradient_check(&c, 3, 2, 4, 5, 1e-5, 1e-5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sum_final_h_loss_checks_out() {
        let c = cfg(VariantId::LSTM);
        let params = init_params(&c, 3, 2, 21, InitScheme::UniformFanIn).unwrap();
        let mut rng = Rng64::new(99);
        let inputs: Vec<Vector> =
            (0..4).map(|_| Vector::from_fn(2, |_| rng.uniform(-1.0, 1.0))).collect();
        let spec = LossSpec::SumFinalH;
        let (states, caches) = forward_sequence(&c, &params, &inputs, &CellState::zeros(3)).unwrap();
        let (_, d_h) = spec.eval(&states).unwrap();
        let (analytic, _) = backward_sequence(&c, &params, &caches, &d_h).unwrap();
        let numeric = numeric_gradient(&c, &params, &inputs, &spec, 1e-5).unwrap();
        for (a, b) in analytic.flatten().iter().zip(numeric.flatten()) {
            assert!(relative_error(*a, b) < 1e-5);
        }
    }
}
