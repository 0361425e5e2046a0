//! Forward recurrence and exact backpropagation-through-time for any
//! [`CellConfig`]. One parametric engine covers the standard LSTM, every gate
//! reduction, the point-wise cell-input variants, and the single-nonlinearity
//! "b" forms.

use crate::error::{CoreError, Result};
use crate::numerics::{
    add_outer, apply_activation, axpy_sum, hadamard, logistic, matvec, matvec_t, ActivationKind,
    Matrix, Vector,
};
use crate::rng::Rng64;
use crate::taxonomy::{validate_config, CellConfig, GateForm, RecurrentMixing};

/// Trainable arrays of one gate. Exactly the fields demanded by its
/// [`GateForm`] are populated.
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    /// n x m input weight (Full form only).
    pub w: Option<Matrix>,
    /// n x n recurrent weight (Full / StateBias / StateOnly).
    pub u_dense: Option<Matrix>,
    /// n-vector recurrent weight (point-wise forms).
    pub u_vec: Option<Vector>,
    /// n-vector bias (forms with a bias term).
    pub b: Option<Vector>,
}

impl GateParams {
    fn empty() -> Self {
        GateParams { w: None, u_dense: None, u_vec: None, b: None }
    }
}

/// Recurrent mixing arrays of the cell input block.
#[derive(Debug, Clone, PartialEq)]
pub enum CellRecurrent {
    Dense(Matrix),
    Pointwise(Vector),
}

/// All trainable arrays for a configured cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub n: usize,
    pub m: usize,
    pub w_c: Matrix,
    pub u_c: CellRecurrent,
    pub b_c: Option<Vector>,
    pub gate_i: GateParams,
    pub gate_f: GateParams,
    pub gate_o: GateParams,
}

/// Gradients mirror the parameter structure exactly.
pub type Gradients = Parameters;

/// The (c_t, h_t) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub c: Vector,
    pub h: Vector,
}

impl CellState {
    pub fn zeros(n: usize) -> Self {
        CellState { c: Vector::zeros(n), h: Vector::zeros(n) }
    }
}

/// Per-timestep intermediates retained for BPTT.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub x: Vector,
    pub h_prev: Vector,
    pub c_prev: Vector,
    /// Gate pre-activations; `None` for Constant gates.
    pub pre_i: Option<Vector>,
    pub pre_f: Option<Vector>,
    pub pre_o: Option<Vector>,
    pub gate_i: Vector,
    pub gate_f: Vector,
    pub gate_o: Vector,
    /// Cell-input pre-activation W_c x + mix(h_prev) [+ b_c].
    pub cell_pre: Vector,
    /// g(cell_pre); equals `cell_pre` for the "b" forms (no inner squash).
    pub cell_in: Vector,
    pub c: Vector,
    /// g(c), the squashed memory cell entering h.
    pub g_c: Vector,
}

/// Parameter initialization schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    /// Matrix entries uniform in [-s, s] with s = 1/sqrt(fan-in); biases zero
    /// except a trainable forget-gate bias, which starts at +1.
    UniformFanIn,
    /// Everything zero.
    Zero,
}

fn draw_matrix(rng: &mut Rng64, rows: usize, cols: usize, fan_in: usize) -> Matrix {
    let s = 1.0 / (fan_in as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(-s, s))
}

fn draw_vector(rng: &mut Rng64, len: usize, fan_in: usize) -> Vector {
    let s = 1.0 / (fan_in as f64).sqrt();
    Vector::from_fn(len, |_| rng.uniform(-s, s))
}

fn init_gate(
    form: GateForm,
    n: usize,
    m: usize,
    rng: &mut Rng64,
    zero: bool,
    forget_role: bool,
) -> GateParams {
    let mut g = GateParams::empty();
    if form.has_input_weight() {
        g.w = Some(if zero { Matrix::zeros(n, m) } else { draw_matrix(rng, n, m, m) });
    }
    if form.has_dense_recurrent() {
        g.u_dense = Some(if zero { Matrix::zeros(n, n) } else { draw_matrix(rng, n, n, n) });
    }
    if form.has_pointwise_recurrent() {
        g.u_vec = Some(if zero { Vector::zeros(n) } else { draw_vector(rng, n, n) });
    }
    if form.has_bias() {
        let fill = if !zero && forget_role { 1.0 } else { 0.0 };
        g.b = Some(Vector::from_fn(n, |_| fill));
    }
    g
}

/// Deterministic parameter initialization; draw order is fixed (cell block
/// first, then gates i, f, o) so results are bit-reproducible.
pub fn init_params(
    config: &CellConfig,
    n: usize,
    m: usize,
    seed: u64,
    scheme: InitScheme,
) -> Result<Parameters> {
    if n < 1 || m < 1 {
        return Err(CoreError::contract("init_params requires n, m >= 1"));
    }
    validate_config(config)?;
    let zero = scheme == InitScheme::Zero;
    let mut rng = Rng64::new(seed);

    let w_c = if zero { Matrix::zeros(n, m) } else { draw_matrix(&mut rng, n, m, m) };
    let u_c = match config.cell_input.recurrent_mixing {
        RecurrentMixing::DenseMatrix => {
            CellRecurrent::Dense(if zero { Matrix::zeros(n, n) } else { draw_matrix(&mut rng, n, n, n) })
        }
        RecurrentMixing::PointwiseVector => {
            CellRecurrent::Pointwise(if zero { Vector::zeros(n) } else { draw_vector(&mut rng, n, n) })
        }
    };
    let b_c = config.cell_input.bias_present.then(|| Vector::zeros(n));

    let gate_i = init_gate(config.input_gate, n, m, &mut rng, zero, false);
    let gate_f = init_gate(config.forget_gate, n, m, &mut rng, zero, true);
    let gate_o = init_gate(config.output_gate, n, m, &mut rng, zero, false);

    Ok(Parameters { n, m, w_c, u_c, b_c, gate_i, gate_f, gate_o })
}

impl Parameters {
    /// A structural mirror with every scalar zero, used as a gradient
    /// accumulator.
    pub fn zeros_like(&self) -> Parameters {
        let zero_gate = |g: &GateParams| GateParams {
            w: g.w.as_ref().map(|w| Matrix::zeros(w.rows(), w.cols())),
            u_dense: g.u_dense.as_ref().map(|u| Matrix::zeros(u.rows(), u.cols())),
            u_vec: g.u_vec.as_ref().map(|u| Vector::zeros(u.len())),
            b: g.b.as_ref().map(|b| Vector::zeros(b.len())),
        };
        Parameters {
            n: self.n,
            m: self.m,
            w_c: Matrix::zeros(self.w_c.rows(), self.w_c.cols()),
            u_c: match &self.u_c {
                CellRecurrent::Dense(u) => CellRecurrent::Dense(Matrix::zeros(u.rows(), u.cols())),
                CellRecurrent::Pointwise(u) => CellRecurrent::Pointwise(Vector::zeros(u.len())),
            },
            b_c: self.b_c.as_ref().map(|b| Vector::zeros(b.len())),
            gate_i: zero_gate(&self.gate_i),
            gate_f: zero_gate(&self.gate_f),
            gate_o: zero_gate(&self.gate_o),
        }
    }

    /// Named parameter groups in the fixed flattening order.
    pub fn group_names(&self) -> Vec<String> {
        let mut names = vec!["w_c".to_string(), "u_c".to_string()];
        if self.b_c.is_some() {
            names.push("b_c".to_string());
        }
        for (tag, g) in [("i", &self.gate_i), ("f", &self.gate_f), ("o", &self.gate_o)] {
            if g.w.is_some() {
                names.push(format!("w_{tag}"));
            }
            if g.u_dense.is_some() || g.u_vec.is_some() {
                names.push(format!("u_{tag}"));
            }
            if g.b.is_some() {
                names.push(format!("b_{tag}"));
            }
        }
        names
    }

    /// Group contents in the same order as [`Parameters::group_names`].
    pub fn group_slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![self.w_c.as_slice()];
        out.push(match &self.u_c {
            CellRecurrent::Dense(u) => u.as_slice(),
            CellRecurrent::Pointwise(u) => u.as_slice(),
        });
        if let Some(b) = &self.b_c {
            out.push(b.as_slice());
        }
        for g in [&self.gate_i, &self.gate_f, &self.gate_o] {
            if let Some(w) = &g.w {
                out.push(w.as_slice());
            }
            if let Some(u) = &g.u_dense {
                out.push(u.as_slice());
            }
            if let Some(u) = &g.u_vec {
                out.push(u.as_slice());
            }
            if let Some(b) = &g.b {
                out.push(b.as_slice());
            }
        }
        out
    }

    fn group_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.w_c.as_mut_slice()];
        out.push(match &mut self.u_c {
            CellRecurrent::Dense(u) => u.as_mut_slice(),
            CellRecurrent::Pointwise(u) => u.as_mut_slice(),
        });
        if let Some(b) = &mut self.b_c {
            out.push(b.as_mut_slice());
        }
        for g in [&mut self.gate_i, &mut self.gate_f, &mut self.gate_o] {
            if let Some(w) = &mut g.w {
                out.push(w.as_mut_slice());
            }
            if let Some(u) = &mut g.u_dense {
                out.push(u.as_mut_slice());
            }
            if let Some(u) = &mut g.u_vec {
                out.push(u.as_mut_slice());
            }
            if let Some(b) = &mut g.b {
                out.push(b.as_mut_slice());
            }
        }
        out
    }

    /// Total scalar count; equals `taxonomy::param_count` for the matching
    /// configuration.
    pub fn scalar_count(&self) -> usize {
        self.group_slices().iter().map(|s| s.len()).sum()
    }

    /// All scalars in the fixed group order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.scalar_count());
        for s in self.group_slices() {
            out.extend_from_slice(s);
        }
        out
    }

    /// Overwrites every scalar from `flat` (same order as [`flatten`]).
    ///
    /// [`flatten`]: Parameters::flatten
    pub fn assign_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.scalar_count() {
            return Err(CoreError::contract(format!(
                "assign_from_flat: expected {} scalars, got {}",
                self.scalar_count(),
                flat.len()
            )));
        }
        let mut pos = 0;
        for s in self.group_slices_mut() {
            s.copy_from_slice(&flat[pos..pos + s.len()]);
            pos += s.len();
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.group_slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }
}

/// Supports the gate-input-redundancy equivalence: a standard LSTM with
/// zeroed gate input weights matches an LSTM_1 sharing the remaining arrays.
pub fn clone_with_zeroed_input_weights(params: &Parameters) -> Result<Parameters> {
    for (tag, g) in [("i", &params.gate_i), ("f", &params.gate_f), ("o", &params.gate_o)] {
        if g.w.is_none() {
            return Err(CoreError::contract(format!(
                "clone_with_zeroed_input_weights: gate {tag} has no input weight (not a standard LSTM)"
            )));
        }
    }
    let mut out = params.clone();
    for g in [&mut out.gate_i, &mut out.gate_f, &mut out.gate_o] {
        let w = g.w.as_ref().unwrap();
        g.w = Some(Matrix::zeros(w.rows(), w.cols()));
    }
    Ok(out)
}

fn gate_forward(
    form: GateForm,
    p: &GateParams,
    x: &Vector,
    h_prev: &Vector,
    n: usize,
) -> Result<(Option<Vector>, Vector)> {
    let pre = match form {
        GateForm::Full => {
            let wx = matvec(p.w.as_ref().unwrap(), x)?;
            let uh = matvec(p.u_dense.as_ref().unwrap(), h_prev)?;
            axpy_sum(&[&wx, &uh, p.b.as_ref().unwrap()])?
        }
        GateForm::StateBias => {
            let uh = matvec(p.u_dense.as_ref().unwrap(), h_prev)?;
            axpy_sum(&[&uh, p.b.as_ref().unwrap()])?
        }
        GateForm::StateOnly => matvec(p.u_dense.as_ref().unwrap(), h_prev)?,
        GateForm::BiasOnly => p.b.as_ref().unwrap().clone(),
        GateForm::PointwiseState => hadamard(p.u_vec.as_ref().unwrap(), h_prev)?,
        GateForm::PointwiseStateBias => {
            let uh = hadamard(p.u_vec.as_ref().unwrap(), h_prev)?;
            axpy_sum(&[&uh, p.b.as_ref().unwrap()])?
        }
        GateForm::Constant(v) => {
            return Ok((None, Vector::from_fn(n, |_| v)));
        }
    };
    let value = logistic(&pre);
    Ok((Some(pre), value))
}

/// One step of the recurrence.
pub fn forward_step(
    config: &CellConfig,
    params: &Parameters,
    x: &Vector,
    state: &CellState,
) -> Result<(CellState, StepCache)> {
    let n = params.n;
    if x.len() != params.m {
        return Err(CoreError::contract(format!(
            "forward_step: input length {} but m = {}",
            x.len(),
            params.m
        )));
    }
    if state.c.len() != n || state.h.len() != n {
        return Err(CoreError::contract("forward_step: state length mismatch"));
    }

    let (pre_i, gate_i) = gate_forward(config.input_gate, &params.gate_i, x, &state.h, n)?;
    let (pre_f, gate_f) = gate_forward(config.forget_gate, &params.gate_f, x, &state.h, n)?;
    let (pre_o, gate_o) = gate_forward(config.output_gate, &params.gate_o, x, &state.h, n)?;

    let wx = matvec(&params.w_c, x)?;
    let mixed = match &params.u_c {
        CellRecurrent::Dense(u) => matvec(u, &state.h)?,
        CellRecurrent::Pointwise(u) => hadamard(u, &state.h)?,
    };
    let cell_pre = match &params.b_c {
        Some(b) => axpy_sum(&[&wx, &mixed, b])?,
        None => axpy_sum(&[&wx, &mixed])?,
    };
    let cell_in = if config.outer_nonlinearity {
        apply_activation(config.activation, &cell_pre)
    } else {
        cell_pre.clone()
    };

    let c = axpy_sum(&[&hadamard(&gate_f, &state.c)?, &hadamard(&gate_i, &cell_in)?])?;
    let g_c = apply_activation(config.activation, &c);
    let h = if config.outer_nonlinearity { hadamard(&gate_o, &g_c)? } else { g_c.clone() };

    if !c.is_finite() || !h.is_finite() {
        return Err(CoreError::NumericFault { step: 0 });
    }

    let cache = StepCache {
        x: x.clone(),
        h_prev: state.h.clone(),
        c_prev: state.c.clone(),
        pre_i,
        pre_f,
        pre_o,
        gate_i,
        gate_f,
        gate_o,
        cell_pre,
        cell_in,
        c: c.clone(),
        g_c,
    };
    Ok((CellState { c, h }, cache))
}

/// Unrolls [`forward_step`] over a sequence.
pub fn forward_sequence(
    config: &CellConfig,
    params: &Parameters,
    inputs: &[Vector],
    initial: &CellState,
) -> Result<(Vec<CellState>, Vec<StepCache>)> {
    if inputs.is_empty() {
        return Err(CoreError::contract("forward_sequence: empty input list"));
    }
    let mut states = Vec::with_capacity(inputs.len());
    let mut caches = Vec::with_capacity(inputs.len());
    let mut state = initial.clone();
    for (t, x) in inputs.iter().enumerate() {
        let (next, cache) = forward_step(config, params, x, &state).map_err(|e| match e {
            CoreError::NumericFault { .. } => CoreError::NumericFault { step: t },
            other => other,
        })?;
        states.push(next.clone());
        caches.push(cache);
        state = next;
    }
    Ok((states, caches))
}

fn logistic_deriv(value: &Vector) -> Vector {
    Vector::from_fn(value.len(), |i| value.get(i) * (1.0 - value.get(i)))
}

fn activation_deriv(kind: ActivationKind, input: &Vector, output: &Vector) -> Vector {
    Vector::from_fn(input.len(), |i| kind.deriv_scalar(input.get(i), output.get(i)))
}

/// Backpropagates `d_gate` (gradient w.r.t. a gate's value) through the gate,
/// accumulating parameter gradients and the contributions to dL/dh_prev and
/// dL/dx.
#[allow(clippy::too_many_arguments)]
fn gate_backward(
    form: GateForm,
    p: &GateParams,
    grad: &mut GateParams,
    d_gate: &Vector,
    value: &Vector,
    cache: &StepCache,
    dh_prev: &mut Vector,
    dx: &mut Vector,
) -> Result<()> {
    if form.is_constant() {
        return Ok(());
    }
    let d_pre = hadamard(d_gate, &logistic_deriv(value))?;
    if form.has_input_weight() {
        add_outer(grad.w.as_mut().unwrap(), &d_pre, &cache.x)?;
        dx.add_assign(&matvec_t(p.w.as_ref().unwrap(), &d_pre)?)?;
    }
    if form.has_dense_recurrent() {
        add_outer(grad.u_dense.as_mut().unwrap(), &d_pre, &cache.h_prev)?;
        dh_prev.add_assign(&matvec_t(p.u_dense.as_ref().unwrap(), &d_pre)?)?;
    }
    if form.has_pointwise_recurrent() {
        grad.u_vec.as_mut().unwrap().add_assign(&hadamard(&d_pre, &cache.h_prev)?)?;
        dh_prev.add_assign(&hadamard(p.u_vec.as_ref().unwrap(), &d_pre)?)?;
    }
    if form.has_bias() {
        grad.b.as_mut().unwrap().add_assign(&d_pre)?;
    }
    Ok(())
}

/// Exact reverse-mode gradients of a scalar loss through the unrolled
/// recurrence. `d_loss_d_h[t]` is the direct gradient of the loss w.r.t. the
/// hidden activation at step `t`. Returns parameter gradients and the
/// gradients w.r.t. every input vector. Constant gates receive no gradient;
/// accumulation runs in reverse timestep order.
pub fn backward_sequence(
    config: &CellConfig,
    params: &Parameters,
    caches: &[StepCache],
    d_loss_d_h: &[Vector],
) -> Result<(Gradients, Vec<Vector>)> {
    if caches.len() != d_loss_d_h.len() {
        return Err(CoreError::contract(format!(
            "backward_sequence: {} caches vs {} upstream gradients",
            caches.len(),
            d_loss_d_h.len()
        )));
    }
    let n = params.n;
    let mut grads = params.zeros_like();
    let mut d_inputs = vec![Vector::zeros(params.m); caches.len()];
    let mut dh_carry = Vector::zeros(n);
    let mut dc_carry = Vector::zeros(n);

    for t in (0..caches.len()).rev() {
        let cache = &caches[t];
        let mut dh = d_loss_d_h[t].clone();
        dh.add_assign(&dh_carry)?;

        // h = o (.) g(c)  (outer forms)  or  h = g(c)  ("b" forms).
        let g_c_deriv = activation_deriv(config.activation, &cache.c, &cache.g_c);
        let mut dc = dc_carry.clone();
        let d_o;
        if config.outer_nonlinearity {
            d_o = hadamard(&dh, &cache.g_c)?;
            dc.add_assign(&hadamard(&hadamard(&dh, &cache.gate_o)?, &g_c_deriv)?)?;
        } else {
            d_o = Vector::zeros(n);
            dc.add_assign(&hadamard(&dh, &g_c_deriv)?)?;
        }

        // c = f (.) c_prev + i (.) cell_in
        let d_f = hadamard(&dc, &cache.c_prev)?;
        let d_i = hadamard(&dc, &cache.cell_in)?;
        let d_cell_in = hadamard(&dc, &cache.gate_i)?;
        dc_carry = hadamard(&dc, &cache.gate_f)?;

        // cell_in = g(cell_pre) (outer forms) or cell_pre ("b" forms).
        let d_cell_pre = if config.outer_nonlinearity {
            hadamard(
                &d_cell_in,
                &activation_deriv(config.activation, &cache.cell_pre, &cache.cell_in),
            )?
        } else {
            d_cell_in
        };

        let mut dh_prev = Vector::zeros(n);
        let mut dx = Vector::zeros(params.m);

        // Cell input block.
        add_outer(&mut grads.w_c, &d_cell_pre, &cache.x)?;
        dx.add_assign(&matvec_t(&params.w_c, &d_cell_pre)?)?;
        match (&params.u_c, &mut grads.u_c) {
            (CellRecurrent::Dense(u), CellRecurrent::Dense(gu)) => {
                add_outer(gu, &d_cell_pre, &cache.h_prev)?;
                dh_prev.add_assign(&matvec_t(u, &d_cell_pre)?)?;
            }
            (CellRecurrent::Pointwise(u), CellRecurrent::Pointwise(gu)) => {
                gu.add_assign(&hadamard(&d_cell_pre, &cache.h_prev)?)?;
                dh_prev.add_assign(&hadamard(u, &d_cell_pre)?)?;
            }
            _ => unreachable!("gradient mirror matches parameter structure"),
        }
        if let Some(gb) = grads.b_c.as_mut() {
            gb.add_assign(&d_cell_pre)?;
        }

        // Gates, in the fixed order i, f, o.
        gate_backward(
            config.input_gate,
            &params.gate_i,
            &mut grads.gate_i,
            &d_i,
            &cache.gate_i,
            cache,
            &mut dh_prev,
            &mut dx,
        )?;
        gate_backward(
            config.forget_gate,
            &params.gate_f,
            &mut grads.gate_f,
            &d_f,
            &cache.gate_f,
            cache,
            &mut dh_prev,
            &mut dx,
        )?;
        gate_backward(
            config.output_gate,
            &params.gate_o,
            &mut grads.gate_o,
            &d_o,
            &cache.gate_o,
            cache,
            &mut dh_prev,
            &mut dx,
        )?;

        d_inputs[t] = dx;
        dh_carry = dh_prev;
    }

    Ok((grads, d_inputs))
}
