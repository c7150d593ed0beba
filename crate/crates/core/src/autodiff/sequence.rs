//! Unrolled forward pass on the tape and backpropagation through time.

use std::collections::HashMap;

use crate::autodiff::gradient::GradientSet;
use crate::autodiff::tape::{NodeId, Tape};
use crate::cells::LiquidKind;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math::ElastanceKind;
use crate::model::{InitialState, Model, ModelKind, NamedTensor, SequenceInput};
use crate::solvers::{Scheme, SolverConfig};

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug, Clone)]
pub struct ForwardRecord {
    pub tape: Tape,
    /// `(name, shape, node)` for every parameter, in model visiting order.
    params: Vec<(String, Vec<usize>, NodeId)>,
    /// One node per output column.
    outputs: Vec<NodeId>,
    outputs_dim: usize,
}

impl ForwardRecord {
    pub fn output_shape(&self) -> (usize, usize) {
        (self.outputs_dim, self.outputs.len())
    }

    pub fn outputs(&self) -> Matrix {
        let mut m = Matrix::zeros(self.outputs_dim, self.outputs.len());
        for (c, &id) in self.outputs.iter().enumerate() {
            for (r, v) in self.tape.value(id).iter().enumerate() {
                m.set(r, c, *v);
            }
        }
        m
    }
}

/// Parameter nodes plus the per-sequence transforms (`|g|`, `|k|`, ...) that
/// do not depend on time.
struct Params {
    by_name: HashMap<String, NodeId>,
}

impl Params {
    fn get(&self, name: &str) -> NodeId {
        self.by_name[name]
    }
}

/// Shared liquid-cell nodes.
struct LiquidNodes {
    g_abs: NodeId,
    a: NodeId,
    b: NodeId,
    g_l_abs: NodeId,
    e_l: NodeId,
    k: NodeId,
    elastance: Option<(ElastanceKind, NodeId, NodeId, NodeId)>,
    m: usize,
}

struct Builder<'a> {
    model: &'a Model,
    tape: Tape,
    params: Params,
    liquid: Option<LiquidNodes>,
}

impl<'a> Builder<'a> {
    fn new(model: &'a Model) -> Self {
        let mut tape = Tape::new();
        let mut by_name = HashMap::new();
        for (index, t) in model.named_tensors().into_iter().enumerate() {
            let id = tape.param(index, t.values);
            by_name.insert(t.name, id);
        }
        let params = Params { by_name };
        let liquid = model.liquid().map(|p| {
            let g_abs = tape.abs(params.get("cell.g"));
            let g_l_abs = tape.abs(params.get("cell.g_l"));
            let elastance = p.elastance.as_ref().map(|el| {
                let k_abs = tape.abs(params.get("elastance.k"));
                (
                    el.kind,
                    params.get("elastance.o"),
                    params.get("elastance.p"),
                    k_abs,
                )
            });
            LiquidNodes {
                g_abs,
                a: params.get("cell.a"),
                b: params.get("cell.b"),
                g_l_abs,
                e_l: params.get("cell.e_l"),
                k: params.get("cell.k"),
                elastance,
                m: p.m(),
            }
        });
        Self {
            model,
            tape,
            params,
            liquid,
        }
    }

    fn affine(&mut self, w: &str, b: &str, x: NodeId, rows: usize, cols: usize) -> Result<NodeId> {
        let z = self.tape.matvec(self.params.get(w), x, rows, cols)?;
        self.tape.add(z, self.params.get(b))
    }

    fn gate(&mut self, prefix: &str, y: NodeId, m: usize) -> Result<NodeId> {
        let rows = self.tape.value(y).len();
        let z = self
            .tape
            .vecmat(y, self.params.get(&format!("{prefix}.w")), rows, m)?;
        self.tape.add(z, self.params.get(&format!("{prefix}.b")))
    }

    /// `(f, u, w)` preactivations of a liquid cell at `[h, x]`.
    fn liquid_pre(&mut self, h: NodeId, x: NodeId) -> Result<(NodeId, NodeId, Option<NodeId>)> {
        let ln = self.liquid.as_ref().expect("liquid model");
        let (g_abs, a, b, g_l_abs, k, m, el) =
            (ln.g_abs, ln.a, ln.b, ln.g_l_abs, ln.k, ln.m, ln.elastance);
        let y = self.tape.concat(h, x);
        let s = self.tape.synapse(y, a, b, m)?;
        let f = self.tape.weighted_col_sum(g_abs, s, g_l_abs, m)?;
        let u = self.tape.weighted_col_sum(k, s, g_l_abs, m)?;
        let w = match el {
            Some((_, o, p, _)) => {
                let rows = self.tape.value(y).len();
                let z = self.tape.vecmat(y, o, rows, m)?;
                Some(self.tape.add(z, p)?)
            }
            None => None,
        };
        Ok((f, u, w))
    }

    fn elastance(&mut self, w: NodeId) -> Result<NodeId> {
        let (kind, _, _, k_abs) = self
            .liquid
            .as_ref()
            .and_then(|l| l.elastance)
            .ok_or(Error::MissingElastance)?;
        Ok(match kind {
            ElastanceKind::Asymmetric => self.tape.sigmoid(w),
            ElastanceKind::Symmetric => {
                let hi = self.tape.add(w, k_abs)?;
                let lo = self.tape.sub(w, k_abs)?;
                let s_hi = self.tape.sigmoid(hi);
                let s_lo = self.tape.sigmoid(lo);
                self.tape.sub(s_hi, s_lo)?
            }
        })
    }

    fn liquid_derivative(&mut self, kind: LiquidKind, h: NodeId, x: NodeId) -> Result<NodeId> {
        let (f, u, w) = self.liquid_pre(h, x)?;
        let e_l = self.liquid.as_ref().expect("liquid model").e_l;
        let (decay, drive) = match kind {
            LiquidKind::Ltc => (f, u),
            _ => (self.tape.sigmoid(f), self.tape.tanh(u)),
        };
        let leak = self.tape.mul(decay, h)?;
        let pull = self.tape.mul(drive, e_l)?;
        let d = self.tape.sub(pull, leak)?;
        match kind {
            LiquidKind::Lrc => {
                let eps = self.elastance(w.ok_or(Error::MissingElastance)?)?;
                self.tape.mul(eps, d)
            }
            _ => Ok(d),
        }
    }

    fn hybrid_substep(
        &mut self,
        kind: LiquidKind,
        h: NodeId,
        x: NodeId,
        delta: f64,
    ) -> Result<NodeId> {
        let (f, u, w) = self.liquid_pre(h, x)?;
        let e_l = self.liquid.as_ref().expect("liquid model").e_l;
        let (decay, drive) = match kind {
            LiquidKind::Ltc => (f, u),
            _ => (self.tape.sigmoid(f), self.tape.tanh(u)),
        };
        let c = match kind {
            LiquidKind::Lrc => self.elastance(w.ok_or(Error::MissingElastance)?)?,
            _ => {
                let m = self.tape.value(h).len();
                self.tape.constant(vec![1.0; m])
            }
        };
        let dc = self.tape.scale(c, delta);
        let dcd = self.tape.mul(dc, drive)?;
        let inflow = self.tape.mul(dcd, e_l)?;
        let num = self.tape.add(h, inflow)?;
        let dcf = self.tape.mul(dc, decay)?;
        let den = self.tape.add_const(dcf, 1.0);
        if let Some(&v) = self.tape.value(den).iter().find(|v| !(**v > 0.0)) {
            return Err(Error::HybridDenominator {
                substep: 0,
                value: v,
            });
        }
        self.tape.div(num, den)
    }

    fn euler(
        &mut self,
        h: NodeId,
        x: NodeId,
        cfg: &SolverConfig,
        kind: LiquidKind,
    ) -> Result<NodeId> {
        let delta = cfg.dt / cfg.unfoldings as f64;
        let mut h = h;
        for _ in 0..cfg.unfoldings {
            let d = self.liquid_derivative(kind, h, x)?;
            let inc = self.tape.scale(d, delta);
            h = self.tape.add(h, inc)?;
        }
        Ok(h)
    }

    fn gru_gates(&mut self, h: NodeId, x: NodeId, m: usize) -> Result<(NodeId, NodeId)> {
        let y = self.tape.concat(h, x);
        let fz = self.gate("gru.update", y, m)?;
        let f = self.tape.sigmoid(fz);
        let r = self.gate("gru.reset", y, m)?;
        let rs = self.tape.sigmoid(r);
        let rh = self.tape.mul(rs, h)?;
        let y2 = self.tape.concat(rh, x);
        let uz = self.gate("gru.candidate", y2, m)?;
        Ok((f, self.tape.tanh(uz)))
    }

    fn mlp(&mut self, x: NodeId) -> Result<NodeId> {
        let (d, width) = (self.model.spec.m, self.model.spec.width);
        let z1 = self.affine("mlp.w1", "mlp.b1", x, width, d)?;
        let a1 = self.tape.tanh(z1);
        let z2 = self.affine("mlp.w2", "mlp.b2", a1, width, width)?;
        let a2 = self.tape.tanh(z2);
        self.affine("mlp.w3", "mlp.b3", a2, d, width)
    }

    fn step(&mut self, cfg: &SolverConfig, state: NodeId, x: NodeId, dt: f64) -> Result<NodeId> {
        let m = self.model.spec.m;
        let cfg = cfg.with_dt(dt);
        match self.model.spec.kind {
            ModelKind::Lrcu => {
                let d = self.liquid_derivative(LiquidKind::Lrc, state, x)?;
                let inc = self.tape.scale(d, dt);
                self.tape.add(state, inc)
            }
            kind @ (ModelKind::Ltc | ModelKind::Stc | ModelKind::Lrc) => {
                let lk = kind.liquid_kind().expect("liquid kind");
                match cfg.scheme {
                    Scheme::ExplicitEuler => self.euler(state, x, &cfg, lk),
                    Scheme::HybridEuler => {
                        let delta = cfg.dt / cfg.unfoldings as f64;
                        let mut h = state;
                        for substep in 0..cfg.unfoldings {
                            h = self.hybrid_substep(lk, h, x, delta).map_err(|e| match e {
                                Error::HybridDenominator { value, .. } => {
                                    Error::HybridDenominator { substep, value }
                                }
                                other => other,
                            })?;
                        }
                        Ok(h)
                    }
                    Scheme::Dopri45 => Err(Error::InvalidArgument(
                        "adaptive integration cannot be differentiated; use a fixed-step scheme"
                            .into(),
                    )),
                }
            }
            ModelKind::Gru => {
                let (f, u) = self.gru_gates(state, x, m)?;
                let diff = self.tape.sub(u, state)?;
                let inc = self.tape.mul(f, diff)?;
                self.tape.add(state, inc)
            }
            ModelKind::GruOde => {
                if cfg.scheme != Scheme::ExplicitEuler {
                    return Err(Error::InvalidArgument(
                        "GRU-ODE supports explicit Euler only".into(),
                    ));
                }
                let delta = cfg.dt / cfg.unfoldings as f64;
                let mut h = state;
                for _ in 0..cfg.unfoldings {
                    let (f, u) = self.gru_gates(h, x, m)?;
                    let diff = self.tape.sub(u, h)?;
                    let d = self.tape.mul(f, diff)?;
                    let inc = self.tape.scale(d, delta);
                    h = self.tape.add(h, inc)?;
                }
                Ok(h)
            }
            ModelKind::Mgu => {
                let y = self.tape.concat(state, x);
                let fz = self.gate("mgu.forget", y, m)?;
                let f = self.tape.sigmoid(fz);
                let fh = self.tape.mul(f, state)?;
                let y2 = self.tape.concat(fh, x);
                let cz = self.gate("mgu.candidate", y2, m)?;
                let c = self.tape.tanh(cz);
                let nf = self.tape.neg(f);
                let keep = self.tape.add_const(nf, 1.0);
                let old = self.tape.mul(keep, state)?;
                let new = self.tape.mul(f, c)?;
                self.tape.add(old, new)
            }
            ModelKind::Lstm => {
                let h = self.tape.slice(state, 0, m)?;
                let c_prev = self.tape.slice(state, m, m)?;
                let y = self.tape.concat(h, x);
                let iz = self.gate("lstm.input", y, m)?;
                let fz = self.gate("lstm.forget", y, m)?;
                let oz = self.gate("lstm.output", y, m)?;
                let gz = self.gate("lstm.cell", y, m)?;
                let (i, f, o, g) = (
                    self.tape.sigmoid(iz),
                    self.tape.sigmoid(fz),
                    self.tape.sigmoid(oz),
                    self.tape.tanh(gz),
                );
                let fc = self.tape.mul(f, c_prev)?;
                let ig = self.tape.mul(i, g)?;
                let c = self.tape.add(fc, ig)?;
                let tc = self.tape.tanh(c);
                let h_new = self.tape.mul(o, tc)?;
                Ok(self.tape.concat(h_new, c))
            }
            ModelKind::NeuralOde => {
                if cfg.scheme == Scheme::Dopri45 {
                    return Err(Error::InvalidArgument(
                        "adaptive integration cannot be differentiated; train with a fixed-step scheme".into(),
                    ));
                }
                let steps = 4 * cfg.unfoldings;
                let h = dt / steps as f64;
                let mut y = state;
                for _ in 0..steps {
                    let k1 = self.mlp(y)?;
                    let s1 = self.tape.scale(k1, 0.5 * h);
                    let y1 = self.tape.add(y, s1)?;
                    let k2 = self.mlp(y1)?;
                    let s2 = self.tape.scale(k2, 0.5 * h);
                    let y2 = self.tape.add(y, s2)?;
                    let k3 = self.mlp(y2)?;
                    let s3 = self.tape.scale(k3, h);
                    let y3 = self.tape.add(y, s3)?;
                    let k4 = self.mlp(y3)?;
                    let t2 = self.tape.scale(k2, 2.0);
                    let t3 = self.tape.scale(k3, 2.0);
                    let acc = self.tape.add(k1, t2)?;
                    let acc = self.tape.add(acc, t3)?;
                    let acc = self.tape.add(acc, k4)?;
                    let inc = self.tape.scale(acc, h / 6.0);
                    y = self.tape.add(y, inc)?;
                }
                Ok(y)
            }
        }
    }

    fn initial(&mut self, initial: &InitialState) -> Result<NodeId> {
        let spec = self.model.spec;
        match initial {
            InitialState::Observation(x0) if self.model.encoder.is_some() => {
                let d = spec.encoder_dim.unwrap_or(x0.len());
                crate::error::check_len("initial observation", d, x0.len())?;
                let x = self.tape.constant(x0.clone());
                let h = self.affine("encoder.w", "encoder.bias", x, spec.m, d)?;
                if spec.state_len() > spec.m {
                    let c = self.tape.constant(vec![0.0; spec.state_len() - spec.m]);
                    Ok(self.tape.concat(h, c))
                } else {
                    Ok(h)
                }
            }
            other => {
                let s = self.model.initial_state(other)?;
                Ok(self.tape.constant(s))
            }
        }
    }

    fn readout(&mut self, state: NodeId) -> Result<NodeId> {
        let spec = self.model.spec;
        if self.model.output.is_none() {
            return Ok(state);
        }
        let h = if spec.state_len() > spec.m {
            self.tape.slice(state, 0, spec.m)?
        } else {
            state
        };
        self.affine("output.q", "output.bias", h, spec.outputs, spec.m)
    }
}

fn finite_or(tape: &Tape, id: NodeId, step: usize) -> Result<()> {
    if tape.value(id).iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteActivation { step })
    }
}

/// Unrolls `model` over `seq` on a fresh tape. Returns the `K x T_out`
/// outputs and the record for [`backward_sequence`].
pub fn forward_sequence(
    model: &Model,
    cfg: &SolverConfig,
    seq: &SequenceInput,
) -> Result<(Matrix, ForwardRecord)> {
    cfg.validate()?;
    model.spec.validate()?;
    seq.validate(&model.spec)?;
    let mut b = Builder::new(model);
    let mut state = b.initial(&seq.initial)?;
    let mut outputs = Vec::with_capacity(seq.output_len());
    let mut prev = None;
    if seq.emit_initial || seq.feedback {
        let o = b.readout(state)?;
        finite_or(&b.tape, o, 0)?;
        if seq.emit_initial {
            outputs.push(o);
        }
        prev = Some(o);
    }
    for (t, x) in seq.inputs.iter().enumerate() {
        let dt = seq.step_dt(cfg, t)?;
        let xn = match prev {
            Some(o) if seq.feedback => o,
            _ => b.tape.constant(x.clone()),
        };
        state = b.step(cfg, state, xn, dt)?;
        finite_or(&b.tape, state, t)?;
        let o = b.readout(state)?;
        finite_or(&b.tape, o, t)?;
        outputs.push(o);
        prev = Some(o);
    }
    let params = model
        .named_tensors()
        .into_iter()
        .map(|NamedTensor { name, shape, .. }| {
            let id = b.params.get(&name);
            (name, shape, id)
        })
        .collect();
    let record = ForwardRecord {
        tape: b.tape,
        params,
        outputs,
        outputs_dim: model.spec.outputs,
    };
    Ok((record.outputs(), record))
}

/// Exact gradients of `sum(loss_grad .* outputs)` with respect to every
/// raw parameter of the recorded computation.
pub fn backward_sequence(record: &ForwardRecord, loss_grad: &Matrix) -> Result<GradientSet> {
    if loss_grad.shape() != record.output_shape() {
        return Err(Error::RecordMismatch(format!(
            "loss gradient is {:?}, outputs are {:?}",
            loss_grad.shape(),
            record.output_shape()
        )));
    }
    let seeds: Vec<(NodeId, Vec<f64>)> = record
        .outputs
        .iter()
        .enumerate()
        .map(|(c, &id)| (id, loss_grad.column(c)))
        .collect();
    let adj = record.tape.backward(&seeds)?;
    let tensors = record
        .params
        .iter()
        .map(|(name, shape, id)| {
            let len = record.tape.value(*id).len();
            let values = if adj[*id].is_empty() {
                vec![0.0; len]
            } else {
                adj[*id].clone()
            };
            NamedTensor {
                name: name.clone(),
                shape: shape.clone(),
                values,
            }
        })
        .collect();
    let grads = GradientSet { tensors };
    grads.check_finite()?;
    Ok(grads)
}
