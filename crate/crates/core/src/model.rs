//! A recurrent cell with its readout (and optional state encoder), evaluated
//! over a sequence. This is the plain, tape-free forward path.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cells::{
    gru_ode_derivative, gru_step, lrcu_step, lstm_step, mgu_step, AffineMap, GruParams,
    LiquidCellParams, LiquidKind, LstmParams, MguParams, MlpOdeParams, OutputLayer,
};
use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;
use crate::math::ElastanceKind;
use crate::solvers::{
    dopri45_solve, euler_advance, hybrid_euler_advance, rk4_advance, Scheme, SolverConfig,
};

pub const CHECKPOINT_FORMAT: &str = "lrc-checkpoint-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ltc,
    Stc,
    Lrc,
    /// LRC advanced by exactly one explicit Euler step per observation.
    Lrcu,
    Gru,
    GruOde,
    Mgu,
    Lstm,
    NeuralOde,
}

impl ModelKind {
    pub const ALL: [ModelKind; 9] = [
        ModelKind::Ltc,
        ModelKind::Stc,
        ModelKind::Lrc,
        ModelKind::Lrcu,
        ModelKind::Gru,
        ModelKind::GruOde,
        ModelKind::Mgu,
        ModelKind::Lstm,
        ModelKind::NeuralOde,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ltc => "ltc",
            ModelKind::Stc => "stc",
            ModelKind::Lrc => "lrc",
            ModelKind::Lrcu => "lrcu",
            ModelKind::Gru => "gru",
            ModelKind::GruOde => "gru_ode",
            ModelKind::Mgu => "mgu",
            ModelKind::Lstm => "lstm",
            ModelKind::NeuralOde => "neural_ode",
        }
    }

    pub fn liquid_kind(self) -> Option<LiquidKind> {
        match self {
            ModelKind::Ltc => Some(LiquidKind::Ltc),
            ModelKind::Stc => Some(LiquidKind::Stc),
            ModelKind::Lrc | ModelKind::Lrcu => Some(LiquidKind::Lrc),
            _ => None,
        }
    }

    pub fn needs_elastance(self) -> bool {
        matches!(self, ModelKind::Lrc | ModelKind::Lrcu)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| {
                let names: Vec<_> = ModelKind::ALL.iter().map(|k| k.as_str()).collect();
                Error::InvalidArgument(format!(
                    "unknown model kind `{s}`; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Architecture of a [`Model`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Hidden state size. For the Neural-ODE baseline this is the system dimension.
    pub m: usize,
    /// Per-step input size.
    pub n: usize,
    /// Readout size `K`.
    pub outputs: usize,
    /// Required for LRC and LRCU.
    #[serde(default)]
    pub elastance: Option<ElastanceKind>,
    /// If set, the initial hidden state is an affine map of an observed state
    /// of this dimension.
    #[serde(default)]
    pub encoder_dim: Option<usize>,
    /// Hidden width of the Neural-ODE vector field.
    #[serde(default = "default_width")]
    pub width: usize,
}

fn default_width() -> usize {
    32
}

impl ModelSpec {
    pub fn new(kind: ModelKind, m: usize, n: usize, outputs: usize) -> Self {
        Self {
            kind,
            m,
            n,
            outputs,
            elastance: None,
            encoder_dim: None,
            width: default_width(),
        }
    }

    pub fn with_elastance(mut self, kind: ElastanceKind) -> Self {
        self.elastance = Some(kind);
        self
    }

    pub fn with_width(mut self, width: usize) -> Self {
        self.width = width;
        self
    }

    pub fn with_encoder(mut self, d: usize) -> Self {
        self.encoder_dim = Some(d);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidArgument(
                "model needs at least one state".into(),
            ));
        }
        if self.kind.needs_elastance() && self.elastance.is_none() {
            return Err(Error::MissingElastance);
        }
        if self.kind == ModelKind::NeuralOde {
            if self.n != 0 || self.outputs != self.m || self.encoder_dim.is_some() {
                return Err(Error::InvalidArgument(
                    "the Neural-ODE baseline is autonomous, reads out its state and has no encoder"
                        .into(),
                ));
            }
            if self.width == 0 {
                return Err(Error::InvalidArgument(
                    "Neural-ODE width must be >= 1".into(),
                ));
            }
        } else if self.outputs == 0 {
            return Err(Error::InvalidArgument(
                "model needs at least one output".into(),
            ));
        }
        Ok(())
    }

    /// Length of the internal state vector (LSTM carries `[h, c]`).
    pub fn state_len(&self) -> usize {
        if self.kind == ModelKind::Lstm {
            2 * self.m
        } else {
            self.m
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellParams {
    Liquid(LiquidCellParams),
    Gru(GruParams),
    Mgu(MguParams),
    Lstm(LstmParams),
    Mlp(MlpOdeParams),
}

/// How the hidden state is initialised before the first step.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Zero,
    /// Explicit internal state of length [`ModelSpec::state_len`].
    State(Vec<f64>),
    /// An observed system state, mapped through the encoder (or used directly
    /// by the Neural-ODE baseline).
    Observation(Vec<f64>),
}

/// One sequence to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceInput {
    /// One input vector of length `n` per step.
    pub inputs: Vec<Vec<f64>>,
    /// Per-step intervals; `None` uses the solver's `dt`.
    pub dt: Option<Vec<f64>>,
    pub initial: InitialState,
    /// Emit a readout of the initial state before the first step.
    pub emit_initial: bool,
    /// Use the previous readout as each step's input (`inputs` entries must
    /// then be empty).
    pub feedback: bool,
}

impl SequenceInput {
    pub fn new(inputs: Vec<Vec<f64>>) -> Self {
        Self {
            inputs,
            dt: None,
            initial: InitialState::Zero,
            emit_initial: false,
            feedback: false,
        }
    }

    /// An autonomous rollout of `steps` steps from an observed state, with
    /// the initial readout included.
    pub fn rollout(x0: Vec<f64>, steps: usize, dt: Option<Vec<f64>>) -> Self {
        Self {
            inputs: vec![Vec::new(); steps],
            dt,
            initial: InitialState::Observation(x0),
            emit_initial: true,
            feedback: false,
        }
    }

    /// Like [`SequenceInput::rollout`], with each step driven by the previous readout.
    pub fn closed_loop(x0: Vec<f64>, steps: usize, dt: Option<Vec<f64>>) -> Self {
        Self {
            feedback: true,
            ..Self::rollout(x0, steps, dt)
        }
    }

    pub fn steps(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_len(&self) -> usize {
        self.steps() + usize::from(self.emit_initial)
    }

    pub fn step_dt(&self, cfg: &SolverConfig, t: usize) -> Result<f64> {
        cfg.interval(self.dt.as_ref().map(|d| d[t]))
    }

    pub(crate) fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.feedback && spec.n != spec.outputs {
            return Err(Error::InvalidArgument(format!(
                "feedback needs as many inputs as outputs ({} vs {})",
                spec.n, spec.outputs
            )));
        }
        let n = if self.feedback { 0 } else { spec.n };
        for x in &self.inputs {
            check_len("sequence input", n, x.len())?;
        }
        if let Some(dt) = &self.dt {
            check_len("sequence dt", self.steps(), dt.len())?;
        }
        Ok(())
    }
}

/// A named parameter tensor in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub spec: ModelSpec,
    pub cell: CellParams,
    /// Absent only for the Neural-ODE baseline, whose outputs are its state.
    pub output: Option<OutputLayer>,
    pub encoder: Option<AffineMap>,
}

fn mat_shape(m: &Matrix) -> Vec<usize> {
    vec![m.rows(), m.cols()]
}

impl Model {
    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (spec.m, spec.n);
        let cell = match spec.kind {
            ModelKind::Ltc | ModelKind::Stc => {
                CellParams::Liquid(LiquidCellParams::init(m, n, None, &mut rng))
            }
            ModelKind::Lrc | ModelKind::Lrcu => {
                CellParams::Liquid(LiquidCellParams::init(m, n, spec.elastance, &mut rng))
            }
            ModelKind::Gru | ModelKind::GruOde => CellParams::Gru(GruParams::init(m, n, &mut rng)),
            ModelKind::Mgu => CellParams::Mgu(MguParams::init(m, n, &mut rng)),
            ModelKind::Lstm => CellParams::Lstm(LstmParams::init(m, n, &mut rng)),
            ModelKind::NeuralOde => CellParams::Mlp(MlpOdeParams::init(m, spec.width, &mut rng)),
        };
        let output = (spec.kind != ModelKind::NeuralOde)
            .then(|| OutputLayer::init(spec.outputs, m, &mut rng));
        let encoder = spec.encoder_dim.map(|d| AffineMap::init(m, d, &mut rng));
        Ok(Self {
            spec,
            cell,
            output,
            encoder,
        })
    }

    pub fn liquid(&self) -> Option<&LiquidCellParams> {
        match &self.cell {
            CellParams::Liquid(p) => Some(p),
            _ => None,
        }
    }

    pub fn liquid_mut(&mut self) -> Option<&mut LiquidCellParams> {
        match &mut self.cell {
            CellParams::Liquid(p) => Some(p),
            _ => None,
        }
    }

    /// Visits every trainable tensor with its name and shape, in a fixed order.
    pub fn visit_params(&self, mut f: impl FnMut(&str, &[usize], &[f64])) {
        self.collect(&mut |name, shape, values| f(name, shape, values));
    }

    fn collect(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        match &self.cell {
            CellParams::Liquid(p) => {
                f("cell.g", &mat_shape(&p.g_raw), p.g_raw.as_slice());
                f("cell.a", &mat_shape(&p.a), p.a.as_slice());
                f("cell.b", &mat_shape(&p.b), p.b.as_slice());
                f("cell.g_l", &[p.g_l_raw.len()], &p.g_l_raw);
                f("cell.e_l", &[p.e_l.len()], &p.e_l);
                f("cell.k", &mat_shape(&p.k_w), p.k_w.as_slice());
                if let Some(el) = &p.elastance {
                    f("elastance.o", &mat_shape(&el.o), el.o.as_slice());
                    f("elastance.p", &[el.p.len()], &el.p);
                    f("elastance.k", &[el.k_raw.len()], &el.k_raw);
                }
            }
            CellParams::Gru(p) => {
                for (name, g) in [
                    ("gru.update", &p.update),
                    ("gru.candidate", &p.candidate),
                    ("gru.reset", &p.reset),
                ] {
                    f(&format!("{name}.w"), &mat_shape(&g.w), g.w.as_slice());
                    f(&format!("{name}.b"), &[g.b.len()], &g.b);
                }
            }
            CellParams::Mgu(p) => {
                for (name, g) in [("mgu.forget", &p.forget), ("mgu.candidate", &p.candidate)] {
                    f(&format!("{name}.w"), &mat_shape(&g.w), g.w.as_slice());
                    f(&format!("{name}.b"), &[g.b.len()], &g.b);
                }
            }
            CellParams::Lstm(p) => {
                for (name, g) in [
                    ("lstm.input", &p.input),
                    ("lstm.forget", &p.forget),
                    ("lstm.output", &p.output),
                    ("lstm.cell", &p.cell),
                ] {
                    f(&format!("{name}.w"), &mat_shape(&g.w), g.w.as_slice());
                    f(&format!("{name}.b"), &[g.b.len()], &g.b);
                }
            }
            CellParams::Mlp(p) => {
                f("mlp.w1", &mat_shape(&p.w1), p.w1.as_slice());
                f("mlp.b1", &[p.b1.len()], &p.b1);
                f("mlp.w2", &mat_shape(&p.w2), p.w2.as_slice());
                f("mlp.b2", &[p.b2.len()], &p.b2);
                f("mlp.w3", &mat_shape(&p.w3), p.w3.as_slice());
                f("mlp.b3", &[p.b3.len()], &p.b3);
            }
        }
        if let Some(out) = &self.output {
            f("output.q", &mat_shape(&out.q), out.q.as_slice());
            f("output.bias", &[out.bias.len()], &out.bias);
        }
        if let Some(enc) = &self.encoder {
            f("encoder.w", &mat_shape(&enc.w), enc.w.as_slice());
            f("encoder.bias", &[enc.bias.len()], &enc.bias);
        }
    }

    /// Mutable counterpart of [`Model::visit_params`]; same order and names.
    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        match &mut self.cell {
            CellParams::Liquid(p) => {
                f("cell.g", p.g_raw.as_mut_slice());
                f("cell.a", p.a.as_mut_slice());
                f("cell.b", p.b.as_mut_slice());
                f("cell.g_l", &mut p.g_l_raw);
                f("cell.e_l", &mut p.e_l);
                f("cell.k", p.k_w.as_mut_slice());
                if let Some(el) = &mut p.elastance {
                    f("elastance.o", el.o.as_mut_slice());
                    f("elastance.p", &mut el.p);
                    f("elastance.k", &mut el.k_raw);
                }
            }
            CellParams::Gru(p) => {
                for (name, g) in [
                    ("gru.update", &mut p.update),
                    ("gru.candidate", &mut p.candidate),
                    ("gru.reset", &mut p.reset),
                ] {
                    f(&format!("{name}.w"), g.w.as_mut_slice());
                    f(&format!("{name}.b"), &mut g.b);
                }
            }
            CellParams::Mgu(p) => {
                for (name, g) in [
                    ("mgu.forget", &mut p.forget),
                    ("mgu.candidate", &mut p.candidate),
                ] {
                    f(&format!("{name}.w"), g.w.as_mut_slice());
                    f(&format!("{name}.b"), &mut g.b);
                }
            }
            CellParams::Lstm(p) => {
                for (name, g) in [
                    ("lstm.input", &mut p.input),
                    ("lstm.forget", &mut p.forget),
                    ("lstm.output", &mut p.output),
                    ("lstm.cell", &mut p.cell),
                ] {
                    f(&format!("{name}.w"), g.w.as_mut_slice());
                    f(&format!("{name}.b"), &mut g.b);
                }
            }
            CellParams::Mlp(p) => {
                f("mlp.w1", p.w1.as_mut_slice());
                f("mlp.b1", &mut p.b1);
                f("mlp.w2", p.w2.as_mut_slice());
                f("mlp.b2", &mut p.b2);
                f("mlp.w3", p.w3.as_mut_slice());
                f("mlp.b3", &mut p.b3);
            }
        }
        if let Some(out) = &mut self.output {
            f("output.q", out.q.as_mut_slice());
            f("output.bias", &mut out.bias);
        }
        if let Some(enc) = &mut self.encoder {
            f("encoder.w", enc.w.as_mut_slice());
            f("encoder.bias", &mut enc.bias);
        }
    }

    pub fn named_tensors(&self) -> Vec<NamedTensor> {
        let mut out = Vec::new();
        self.collect(&mut |name, shape, values| {
            out.push(NamedTensor {
                name: name.to_string(),
                shape: shape.to_vec(),
                values: values.to_vec(),
            })
        });
        out
    }

    pub fn param_count(&self) -> usize {
        let mut count = 0;
        self.collect(&mut |_, _, v| count += v.len());
        count
    }

    /// All parameters concatenated in visiting order.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.collect(&mut |_, _, v| out.extend_from_slice(v));
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        check_len("flat parameter vector", self.param_count(), flat.len())?;
        let mut offset = 0;
        self.visit_params_mut(&mut |_, v| {
            v.copy_from_slice(&flat[offset..offset + v.len()]);
            offset += v.len();
        });
        Ok(())
    }

    /// Internal state before the first step.
    pub fn initial_state(&self, initial: &InitialState) -> Result<Vec<f64>> {
        let len = self.spec.state_len();
        match initial {
            InitialState::Zero => Ok(vec![0.0; len]),
            InitialState::State(s) => {
                check_len("initial state", len, s.len())?;
                Ok(s.clone())
            }
            InitialState::Observation(x0) => {
                if let Some(enc) = &self.encoder {
                    let h = enc.apply(x0)?;
                    let mut s = h;
                    s.resize(len, 0.0);
                    Ok(s)
                } else if self.spec.kind == ModelKind::NeuralOde {
                    check_len("initial observation", len, x0.len())?;
                    Ok(x0.clone())
                } else {
                    Err(Error::InvalidArgument(
                        "an observed initial state needs an encoder".into(),
                    ))
                }
            }
        }
    }

    /// Readout of an internal state.
    pub fn readout(&self, state: &[f64]) -> Result<Vec<f64>> {
        check_len("readout state", self.spec.state_len(), state.len())?;
        match &self.output {
            Some(out) => out.apply(&state[..self.spec.m]),
            None => Ok(state.to_vec()),
        }
    }

    /// Advances the internal state by one observation interval of length `dt`.
    pub fn step(&self, cfg: &SolverConfig, state: &[f64], x: &[f64], dt: f64) -> Result<Vec<f64>> {
        check_len("model state", self.spec.state_len(), state.len())?;
        check_len("model input", self.spec.n, x.len())?;
        let cfg = cfg.with_dt(dt);
        match (&self.cell, self.spec.kind) {
            (CellParams::Liquid(p), ModelKind::Lrcu) => lrcu_step(p, state, x, dt),
            (CellParams::Liquid(p), kind) => {
                let lk = kind.liquid_kind().expect("liquid model kind");
                match cfg.scheme {
                    Scheme::ExplicitEuler => {
                        euler_advance(|h, x| p.derivative(lk, h, x), state, x, &cfg)
                    }
                    Scheme::HybridEuler => hybrid_euler_advance(p, lk, state, x, &cfg),
                    Scheme::Dopri45 => {
                        let sol = dopri45_solve(
                            |_, h| p.derivative(lk, h, x),
                            state,
                            (0.0, dt),
                            &[dt],
                            &cfg.dopri,
                        )?;
                        Ok(sol.samples.into_iter().next().expect("one sample").1)
                    }
                }
            }
            (CellParams::Gru(p), ModelKind::Gru) => gru_step(p, state, x),
            (CellParams::Gru(p), ModelKind::GruOde) => match cfg.scheme {
                Scheme::ExplicitEuler => {
                    euler_advance(|h, x| gru_ode_derivative(p, h, x), state, x, &cfg)
                }
                _ => Err(Error::InvalidArgument(
                    "GRU-ODE supports explicit Euler only".into(),
                )),
            },
            (CellParams::Mgu(p), _) => mgu_step(p, state, x),
            (CellParams::Lstm(p), _) => {
                let m = self.spec.m;
                let (h, c) = lstm_step(p, &state[..m], &state[m..], x)?;
                Ok([h, c].concat())
            }
            (CellParams::Mlp(p), _) => match cfg.scheme {
                Scheme::Dopri45 => {
                    let sol =
                        dopri45_solve(|_, y| p.derivative(y), state, (0.0, dt), &[dt], &cfg.dopri)?;
                    Ok(sol.samples.into_iter().next().expect("one sample").1)
                }
                _ => rk4_advance(|y| p.derivative(y), state, dt, 4 * cfg.unfoldings),
            },
            _ => Err(Error::InvalidArgument(
                "cell parameters do not match the model kind".into(),
            )),
        }
    }

    /// Outputs (`K x T_out`) of a sequence, without recording anything.
    pub fn predict(&self, cfg: &SolverConfig, seq: &SequenceInput) -> Result<Matrix> {
        cfg.validate()?;
        seq.validate(&self.spec)?;
        if self.spec.kind == ModelKind::NeuralOde && cfg.scheme == Scheme::Dopri45 {
            return self.predict_neural_ode_adaptive(cfg, seq);
        }
        let k = self.spec.outputs;
        let mut out = Matrix::zeros(k, seq.output_len());
        let mut state = self.initial_state(&seq.initial)?;
        let mut col = 0;
        let mut emit = |o: &[f64], col: &mut usize| {
            for (r, v) in o.iter().enumerate() {
                out.set(r, *col, *v);
            }
            *col += 1;
        };
        let finite_readout = |state: &[f64], step: usize| -> Result<Vec<f64>> {
            let o = self.readout(state)?;
            if o.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteActivation { step });
            }
            Ok(o)
        };
        let mut prev = Vec::new();
        if seq.emit_initial || seq.feedback {
            prev = finite_readout(&state, 0)?;
            if seq.emit_initial {
                emit(&prev, &mut col);
            }
        }
        for (t, x) in seq.inputs.iter().enumerate() {
            let dt = seq.step_dt(cfg, t)?;
            let x = if seq.feedback { &prev } else { x };
            state = self.step(cfg, &state, x, dt).map_err(|e| match e {
                Error::EulerDiverged { .. } => Error::NonFiniteActivation { step: t },
                other => other,
            })?;
            prev = finite_readout(&state, t)?;
            emit(&prev, &mut col);
        }
        Ok(out)
    }

    /// One adaptive solve over the whole horizon, sampled at the observation times.
    fn predict_neural_ode_adaptive(
        &self,
        cfg: &SolverConfig,
        seq: &SequenceInput,
    ) -> Result<Matrix> {
        let CellParams::Mlp(p) = &self.cell else {
            unreachable!("checked by caller")
        };
        let y0 = self.initial_state(&seq.initial)?;
        let mut times = Vec::with_capacity(seq.output_len());
        let mut t = 0.0;
        if seq.emit_initial {
            times.push(0.0);
        }
        for step in 0..seq.steps() {
            t += seq.step_dt(cfg, step)?;
            times.push(t);
        }
        let mut out = Matrix::zeros(self.spec.outputs, times.len());
        if seq.steps() == 0 {
            for (r, v) in y0.iter().enumerate() {
                out.set(r, 0, *v);
            }
            return Ok(out);
        }
        let sol = dopri45_solve(|_, y| p.derivative(y), &y0, (0.0, t), &times, &cfg.dopri)?;
        for (c, (_, y)) in sol.samples.iter().enumerate() {
            for (r, v) in y.iter().enumerate() {
                out.set(r, c, *v);
            }
        }
        Ok(out)
    }

    pub fn to_checkpoint(
        &self,
        seed: u64,
        meta: BTreeMap<String, serde_json::Value>,
    ) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            spec: self.spec,
            seed,
            params: self.named_tensors(),
            meta,
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::RecordMismatch(format!(
                "unsupported checkpoint format `{}`",
                ckpt.format
            )));
        }
        let mut model = Model::init(ckpt.spec, 0)?;
        let expected = model.named_tensors();
        if expected.len() != ckpt.params.len() {
            return Err(Error::RecordMismatch(format!(
                "checkpoint has {} tensors, model expects {}",
                ckpt.params.len(),
                expected.len()
            )));
        }
        for (e, p) in expected.iter().zip(&ckpt.params) {
            if e.name != p.name || e.shape != p.shape || p.values.len() != e.values.len() {
                return Err(Error::RecordMismatch(format!(
                    "tensor `{}` {:?} does not match expected `{}` {:?}",
                    p.name, p.shape, e.name, e.shape
                )));
            }
            crate::error::check_finite("checkpoint tensor", &p.values)?;
        }
        let flat: Vec<f64> = ckpt
            .params
            .iter()
            .flat_map(|p| p.values.iter().copied())
            .collect();
        model.set_flat_params(&flat)?;
        Ok(model)
    }
}

/// Serialized model with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub spec: ModelSpec,
    pub seed: u64,
    pub params: Vec<NamedTensor>,
    #[serde(default)]
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
