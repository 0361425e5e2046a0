//! The compositional cell taxonomy: every variant is a value of [`CellConfig`],
//! and trainable-parameter counts follow from closed forms on the per-gate and
//! cell-input-block shapes.

use crate::error::{CoreError, Result};
use crate::numerics::ActivationKind;

/// Structural form of one gating signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateForm {
    /// sigma(W x_t + U h_{t-1} + b)
    Full,
    /// sigma(U h_{t-1} + b)
    StateBias,
    /// sigma(U h_{t-1})
    StateOnly,
    /// sigma(b)
    BiasOnly,
    /// sigma(u (.) h_{t-1})
    PointwiseState,
    /// sigma(u (.) h_{t-1} + b)
    PointwiseStateBias,
    /// Fixed, non-trainable value in [0, 1] broadcast to all units.
    Constant(f64),
}

impl GateForm {
    /// Trainable scalars this gate contributes for hidden size `n`, input
    /// size `m`.
    pub fn param_count(self, n: usize, m: usize) -> usize {
        match self {
            GateForm::Full => n * n + n * m + n,
            GateForm::StateBias => n * n + n,
            GateForm::StateOnly => n * n,
            GateForm::BiasOnly => n,
            GateForm::PointwiseState => n,
            GateForm::PointwiseStateBias => 2 * n,
            GateForm::Constant(_) => 0,
        }
    }

    pub fn has_input_weight(self) -> bool {
        matches!(self, GateForm::Full)
    }

    pub fn has_dense_recurrent(self) -> bool {
        matches!(self, GateForm::Full | GateForm::StateBias | GateForm::StateOnly)
    }

    pub fn has_pointwise_recurrent(self) -> bool {
        matches!(self, GateForm::PointwiseState | GateForm::PointwiseStateBias)
    }

    pub fn has_bias(self) -> bool {
        matches!(
            self,
            GateForm::Full | GateForm::StateBias | GateForm::BiasOnly | GateForm::PointwiseStateBias
        )
    }

    pub fn is_constant(self) -> bool {
        matches!(self, GateForm::Constant(_))
    }
}

/// How the cell input block mixes the previous hidden activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecurrentMixing {
    /// n x n matrix U_c (scaling and rotation).
    DenseMatrix,
    /// n-vector u_c applied by Hadamard product (scaling only).
    PointwiseVector,
}

/// Structural form of the cell input block W_c x_t + mix(h_{t-1}) [+ b_c].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellInputForm {
    pub recurrent_mixing: RecurrentMixing,
    pub bias_present: bool,
}

impl CellInputForm {
    pub fn param_count(self, n: usize, m: usize) -> usize {
        let mix = match self.recurrent_mixing {
            RecurrentMixing::DenseMatrix => n * n + n * m,
            RecurrentMixing::PointwiseVector => n + n * m,
        };
        mix + if self.bias_present { n } else { 0 }
    }
}

/// Full specification of one cell variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellConfig {
    pub input_gate: GateForm,
    pub forget_gate: GateForm,
    pub output_gate: GateForm,
    pub cell_input: CellInputForm,
    /// When false (the "b" forms) the cell input enters unsquashed and the
    /// single nonlinearity is h_t = g(c_t).
    pub outer_nonlinearity: bool,
    pub activation: ActivationKind,
    /// Constant forget factor used by the constant-gate variants; stored
    /// always, a fixed hyperparameter, never trained.
    pub alpha: f64,
}

impl CellConfig {
    pub fn gates(&self) -> [GateForm; 3] {
        [self.input_gate, self.forget_gate, self.output_gate]
    }
}

/// The closed catalog of variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[allow(non_camel_case_types)]
pub enum VariantId {
    LSTM,
    LSTM_1,
    LSTM_2,
    LSTM_3,
    LSTM_4,
    LSTM_4i,
    LSTM_4ib,
    LSTM_5,
    LSTM_5i,
    LSTM_5ib,
    LSTM_6,
    LSTM_6b,
    CELL_1,
    CELL_2,
    LSTM_C3,
    LSTM_C4,
    LSTM_C4i,
    LSTM_C4ib,
    LSTM_C5,
    LSTM_C5i,
    LSTM_C5ib,
    LSTM_C6,
    LSTM_C6b,
}

impl VariantId {
    pub const ALL: [VariantId; 23] = [
        VariantId::LSTM,
        VariantId::LSTM_1,
        VariantId::LSTM_2,
        VariantId::LSTM_3,
        VariantId::LSTM_4,
        VariantId::LSTM_4i,
        VariantId::LSTM_4ib,
        VariantId::LSTM_5,
        VariantId::LSTM_5i,
        VariantId::LSTM_5ib,
        VariantId::LSTM_6,
        VariantId::LSTM_6b,
        VariantId::CELL_1,
        VariantId::CELL_2,
        VariantId::LSTM_C3,
        VariantId::LSTM_C4,
        VariantId::LSTM_C4i,
        VariantId::LSTM_C4ib,
        VariantId::LSTM_C5,
        VariantId::LSTM_C5i,
        VariantId::LSTM_C5ib,
        VariantId::LSTM_C6,
        VariantId::LSTM_C6b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariantId::LSTM => "LSTM",
            VariantId::LSTM_1 => "LSTM_1",
            VariantId::LSTM_2 => "LSTM_2",
            VariantId::LSTM_3 => "LSTM_3",
            VariantId::LSTM_4 => "LSTM_4",
            VariantId::LSTM_4i => "LSTM_4i",
            VariantId::LSTM_4ib => "LSTM_4ib",
            VariantId::LSTM_5 => "LSTM_5",
            VariantId::LSTM_5i => "LSTM_5i",
            VariantId::LSTM_5ib => "LSTM_5ib",
            VariantId::LSTM_6 => "LSTM_6",
            VariantId::LSTM_6b => "LSTM_6b",
            VariantId::CELL_1 => "CELL_1",
            VariantId::CELL_2 => "CELL_2",
            VariantId::LSTM_C3 => "LSTM_C3",
            VariantId::LSTM_C4 => "LSTM_C4",
            VariantId::LSTM_C4i => "LSTM_C4i",
            VariantId::LSTM_C4ib => "LSTM_C4ib",
            VariantId::LSTM_C5 => "LSTM_C5",
            VariantId::LSTM_C5i => "LSTM_C5i",
            VariantId::LSTM_C5ib => "LSTM_C5ib",
            VariantId::LSTM_C6 => "LSTM_C6",
            VariantId::LSTM_C6b => "LSTM_C6b",
        }
    }

    /// Case-insensitive lookup of the canonical variant names.
    pub fn parse(s: &str) -> Result<Self> {
        let want = s.to_ascii_uppercase();
        VariantId::ALL
            .iter()
            .copied()
            .find(|v| v.name().to_ascii_uppercase() == want)
            .ok_or_else(|| CoreError::contract(format!("unknown variant '{s}'")))
    }

    /// One-line summary of the gate and cell-input equations.
    pub fn equations(self) -> &'static str {
        match self {
            VariantId::LSTM => {
                "i,f,o = sigma(W_g x + U_g h + b_g); c~ = g(W_c x + U_c h + b_c); c = f.c + i.c~; h = o.g(c)"
            }
            VariantId::LSTM_1 => "i,f,o = sigma(U_g h + b_g); cell block unchanged",
            VariantId::LSTM_2 => "i,f,o = sigma(U_g h); cell block unchanged",
            VariantId::LSTM_3 => "i,f,o = sigma(b_g); cell block unchanged",
            VariantId::LSTM_4 => "i,f,o = sigma(u_g . h); cell block unchanged",
            VariantId::LSTM_4i => {
                "i = sigma(u_i . h); f = alpha; o = 1; c = alpha.c + i.g(W_c x + U_c h + b_c); h = g(c)"
            }
            VariantId::LSTM_4ib => {
                "i = sigma(u_i . h); f = alpha; o = 1; c = alpha.c + i.(W_c x + U_c h + b_c); h = g(c)"
            }
            VariantId::LSTM_5 => "i,f,o = sigma(u_g . h + b_g); cell block unchanged",
            VariantId::LSTM_5i => {
                "i = sigma(u_i . h + b_i); f = alpha; o = 1; c = alpha.c + i.g(W_c x + U_c h + b_c); h = g(c)"
            }
            VariantId::LSTM_5ib => {
                "i = sigma(u_i . h + b_i); f = alpha; o = 1; c = alpha.c + i.(W_c x + U_c h + b_c); h = g(c)"
            }
            VariantId::LSTM_6 => "i = 1; f = alpha; o = 1; c = alpha.c + g(W_c x + U_c h + b_c); h = g(c)",
            VariantId::LSTM_6b => "i = 1; f = alpha; o = 1; c = alpha.c + (W_c x + U_c h + b_c); h = g(c)",
            VariantId::CELL_1 => "full gates; c~ = g(W_c x + u_c . h + b_c)",
            VariantId::CELL_2 => "full gates; c~ = g(W_c x + u_c . h)",
            VariantId::LSTM_C3 => "i,f,o = sigma(b_g); c~ = g(W_c x + u_c . h + b_c)",
            VariantId::LSTM_C4 => "i,f,o = sigma(u_g . h); c~ = g(W_c x + u_c . h + b_c)",
            VariantId::LSTM_C4i => {
                "i = sigma(u_i . h); f = alpha; o = 1; c = alpha.c + i.g(W_c x + u_c . h + b_c); h = g(c)"
            }
            VariantId::LSTM_C4ib => {
                "i = sigma(u_i . h); f = alpha; o = 1; c = alpha.c + i.(W_c x + u_c . h + b_c); h = g(c)"
            }
            VariantId::LSTM_C5 => "i,f,o = sigma(u_g . h + b_g); c~ = g(W_c x + u_c . h + b_c)",
            VariantId::LSTM_C5i => {
                "i = sigma(u_i . h + b_i); f = alpha; o = 1; c = alpha.c + i.g(W_c x + u_c . h + b_c); h = g(c)"
            }
            VariantId::LSTM_C5ib => {
                "i = sigma(u_i . h + b_i); f = alpha; o = 1; c = alpha.c + i.(W_c x + u_c . h + b_c); h = g(c)"
            }
            VariantId::LSTM_C6 => "i = 1; f = alpha; o = 1; c = alpha.c + g(W_c x + u_c . h + b_c); h = g(c)",
            VariantId::LSTM_C6b => "i = 1; f = alpha; o = 1; c = alpha.c + (W_c x + u_c . h + b_c); h = g(c)",
        }
    }
}

/// Default constant forget factor, inside the quoted stability range.
pub const DEFAULT_ALPHA: f64 = 0.96;

const DENSE_BIAS: CellInputForm = CellInputForm {
    recurrent_mixing: RecurrentMixing::DenseMatrix,
    bias_present: true,
};
const POINTWISE_BIAS: CellInputForm = CellInputForm {
    recurrent_mixing: RecurrentMixing::PointwiseVector,
    bias_present: true,
};
const POINTWISE_NO_BIAS: CellInputForm = CellInputForm {
    recurrent_mixing: RecurrentMixing::PointwiseVector,
    bias_present: false,
};

/// Catalog configuration for `id` with the given forget constant and
/// activation.
pub fn variant_config(id: VariantId, alpha: f64, activation: ActivationKind) -> Result<CellConfig> {
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(CoreError::contract(format!("alpha out of range: {alpha}")));
    }
    let uniform = |g: GateForm, cell: CellInputForm| CellConfig {
        input_gate: g,
        forget_gate: g,
        output_gate: g,
        cell_input: cell,
        outer_nonlinearity: true,
        activation,
        alpha,
    };
    // The *i forms keep only the input gate; forget is the alpha constant and
    // the output gate is pinned to 1.
    let input_only = |i: GateForm, cell: CellInputForm, outer: bool| CellConfig {
        input_gate: i,
        forget_gate: GateForm::Constant(alpha),
        output_gate: GateForm::Constant(1.0),
        cell_input: cell,
        outer_nonlinearity: outer,
        activation,
        alpha,
    };
    let cfg = match id {
        VariantId::LSTM => uniform(GateForm::Full, DENSE_BIAS),
        VariantId::LSTM_1 => uniform(GateForm::StateBias, DENSE_BIAS),
        VariantId::LSTM_2 => uniform(GateForm::StateOnly, DENSE_BIAS),
        VariantId::LSTM_3 => uniform(GateForm::BiasOnly, DENSE_BIAS),
        VariantId::LSTM_4 => uniform(GateForm::PointwiseState, DENSE_BIAS),
        VariantId::LSTM_4i => input_only(GateForm::PointwiseState, DENSE_BIAS, true),
        VariantId::LSTM_4ib => input_only(GateForm::PointwiseState, DENSE_BIAS, false),
        VariantId::LSTM_5 => uniform(GateForm::PointwiseStateBias, DENSE_BIAS),
        VariantId::LSTM_5i => input_only(GateForm::PointwiseStateBias, DENSE_BIAS, true),
        VariantId::LSTM_5ib => input_only(GateForm::PointwiseStateBias, DENSE_BIAS, false),
        VariantId::LSTM_6 => input_only(GateForm::Constant(1.0), DENSE_BIAS, true),
        VariantId::LSTM_6b => input_only(GateForm::Constant(1.0), DENSE_BIAS, false),
        VariantId::CELL_1 => uniform(GateForm::Full, POINTWISE_BIAS),
        VariantId::CELL_2 => uniform(GateForm::Full, POINTWISE_NO_BIAS),
        VariantId::LSTM_C3 => uniform(GateForm::BiasOnly, POINTWISE_BIAS),
        VariantId::LSTM_C4 => uniform(GateForm::PointwiseState, POINTWISE_BIAS),
        VariantId::LSTM_C4i => input_only(GateForm::PointwiseState, POINTWISE_BIAS, true),
        VariantId::LSTM_C4ib => input_only(GateForm::PointwiseState, POINTWISE_BIAS, false),
        VariantId::LSTM_C5 => uniform(GateForm::PointwiseStateBias, POINTWISE_BIAS),
        VariantId::LSTM_C5i => input_only(GateForm::PointwiseStateBias, POINTWISE_BIAS, true),
        VariantId::LSTM_C5ib => input_only(GateForm::PointwiseStateBias, POINTWISE_BIAS, false),
        VariantId::LSTM_C6 => input_only(GateForm::Constant(1.0), POINTWISE_BIAS, true),
        VariantId::LSTM_C6b => input_only(GateForm::Constant(1.0), POINTWISE_BIAS, false),
    };
    Ok(cfg)
}

/// Total trainable scalars of `config` at hidden size `n`, input size `m`.
pub fn param_count(config: &CellConfig, n: usize, m: usize) -> usize {
    assert!(n >= 1 && m >= 1, "param_count requires n, m >= 1");
    config
        .gates()
        .iter()
        .map(|g| g.param_count(n, m))
        .sum::<usize>()
        + config.cell_input.param_count(n, m)
}

/// Parameter saving of `config` relative to the standard LSTM at (n, m).
pub fn reduction_vs_standard(config: &CellConfig, n: usize, m: usize) -> usize {
    let standard = variant_config(VariantId::LSTM, DEFAULT_ALPHA, config.activation)
        .expect("catalog LSTM config");
    param_count(&standard, n, m) - param_count(config, n, m)
}

/// Checks the structural invariants of a (possibly hand-built) configuration.
pub fn validate_config(config: &CellConfig) -> Result<()> {
    if !(0.0..=1.0).contains(&config.alpha) || !config.alpha.is_finite() {
        return Err(CoreError::contract(format!(
            "alpha out of range: {}",
            config.alpha
        )));
    }
    for (role, gate) in [
        ("input", config.input_gate),
        ("forget", config.forget_gate),
        ("output", config.output_gate),
    ] {
        if let GateForm::Constant(v) = gate {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(CoreError::contract(format!(
                    "{role} gate constant out of [0,1]: {v}"
                )));
            }
        }
    }
    if !config.outer_nonlinearity {
        if !config.forget_gate.is_constant() {
            return Err(CoreError::contract(
                "outer_nonlinearity=false requires a Constant forget gate",
            ));
        }
        if !config.output_gate.is_constant() {
            return Err(CoreError::contract(
                "outer_nonlinearity=false requires a Constant output gate",
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(id: VariantId) -> CellConfig {
        variant_config(id, DEFAULT_ALPHA, ActivationKind::Tanh).unwrap()
    }

    #[test]
    fn lstm3_is_bias_only() {
        let c = cfg(VariantId::LSTM_3);
        assert_eq!(c.gates(), [GateForm::BiasOnly; 3]);
    }

    #[test]
    fn standard_lstm_is_full() {
        let c = cfg(VariantId::LSTM);
        assert_eq!(c.gates(), [GateForm::Full; 3]);
        assert_eq!(c.cell_input, DENSE_BIAS);
        assert!(c.outer_nonlinearity);
    }

    #[test]
    fn lstm6b_constants_and_no_outer() {
        let c = variant_config(VariantId::LSTM_6b, 0.9, ActivationKind::Tanh).unwrap();
        assert_eq!(c.input_gate, GateForm::Constant(1.0));
        assert_eq!(c.forget_gate, GateForm::Constant(0.9));
        assert_eq!(c.output_gate, GateForm::Constant(1.0));
        assert!(!c.outer_nonlinearity);
    }

    #[test]
    fn alpha_out_of_range_rejected() {
        assert!(variant_config(VariantId::LSTM_6, 1.5, ActivationKind::Tanh).is_err());
        assert!(variant_config(VariantId::LSTM_6, -0.1, ActivationKind::Tanh).is_err());
    }

    #[test]
    fn param_count_examples() {
        // 4 (n^2 + nm + n) at n=2, m=3.
        assert_eq!(param_count(&cfg(VariantId::LSTM), 2, 3), 48);
        // Bias-only gates: 3n + (n^2 + nm + n).
        assert_eq!(param_count(&cfg(VariantId::LSTM_3), 2, 3), 18);
        // All gates constant: cell block only.
        for (n, m) in [(1, 1), (3, 5), (8, 2)] {
            assert_eq!(param_count(&cfg(VariantId::LSTM_6), n, m), n * n + n * m + n);
        }
    }

    #[test]
    fn reduction_examples() {
        assert_eq!(reduction_vs_standard(&cfg(VariantId::LSTM_1), 2, 3), 18); // 3nm
        assert_eq!(reduction_vs_standard(&cfg(VariantId::LSTM), 2, 3), 0);
        assert_eq!(reduction_vs_standard(&cfg(VariantId::LSTM_4), 2, 3), 30); // 3(nm+n^2)
    }

    #[test]
    fn catalog_monotone_1_2_3() {
        for n in 1..=8usize {
            for m in 1..=8usize {
                let p0 = param_count(&cfg(VariantId::LSTM), n, m);
                let p1 = param_count(&cfg(VariantId::LSTM_1), n, m);
                let p2 = param_count(&cfg(VariantId::LSTM_2), n, m);
                let p3 = param_count(&cfg(VariantId::LSTM_3), n, m);
                assert!(p0 >= p1 && p1 >= p2 && p2 >= p3);
            }
        }
    }

    #[test]
    fn validate_catalog_and_rejections() {
        for id in VariantId::ALL {
            validate_config(&cfg(id)).unwrap();
        }
        let mut bad = cfg(VariantId::LSTM_5ib);
        bad.output_gate = GateForm::Full;
        assert!(validate_config(&bad).is_err());
        let mut bad_alpha = cfg(VariantId::LSTM);
        bad_alpha.alpha = 1.5;
        let err = validate_config(&bad_alpha).unwrap_err();
        assert!(err.to_string().contains("alpha out of range"));
    }

    #[test]
    fn parse_is_case_insensitive() {
        assert_eq!(VariantId::parse("lstm_c5ib").unwrap(), VariantId::LSTM_C5ib);
        assert_eq!(VariantId::parse("LSTM").unwrap(), VariantId::LSTM);
        assert!(VariantId::parse("GRU").is_err());
    }
}
