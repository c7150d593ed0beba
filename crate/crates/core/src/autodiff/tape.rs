//! A vector-valued reverse-mode tape.
//!
//! Every node holds a vector and the op that produced it. Nodes are appended
//! in evaluation order, so the tape is already topologically sorted and the
//! backward sweep is a single reverse pass.

use crate::error::{check_len, Error, Result};
use crate::linalg::dot;
use crate::math::{sigmoid, tanh_act};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    /// Trainable leaf; the index refers to the caller's parameter table.
    Param(usize),
    Const,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Scale(NodeId, f64),
    AddConst(NodeId, f64),
    Neg(NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    /// Subgradient `+1` at zero.
    Abs(NodeId),
    Concat(NodeId, NodeId),
    Slice {
        x: NodeId,
        start: usize,
        len: usize,
    },
    /// `W x` with `W` stored row-major `rows x cols`.
    MatVec {
        w: NodeId,
        x: NodeId,
        rows: usize,
        cols: usize,
    },
    /// `x^T W` with `W` stored row-major `rows x cols`.
    VecMat {
        x: NodeId,
        w: NodeId,
        rows: usize,
        cols: usize,
    },
    /// `s_ji = sigma(a_ji y_j + b_ji)` for `a`, `b` of shape `len(y) x m`.
    Synapse {
        y: NodeId,
        a: NodeId,
        b: NodeId,
        m: usize,
    },
    /// `out_i = bias_i + sum_j g_ji s_ji`, summed in increasing `j`.
    WeightedColSum {
        g: NodeId,
        s: NodeId,
        bias: NodeId,
        m: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub op: Op,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id].value
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    fn push(&mut self, op: Op, value: Vec<f64>) -> NodeId {
        self.nodes.push(Node { op, value });
        self.nodes.len() - 1
    }

    fn same_len(&self, a: NodeId, b: NodeId) -> Result<()> {
        check_len(
            "tape elementwise operand",
            self.value(a).len(),
            self.value(b).len(),
        )
    }

    pub fn param(&mut self, index: usize, value: Vec<f64>) -> NodeId {
        self.push(Op::Param(index), value)
    }

    pub fn constant(&mut self, value: Vec<f64>) -> NodeId {
        self.push(Op::Const, value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len(a, b)?;
        let v = zip_map(self.value(a), self.value(b), |x, y| x + y);
        Ok(self.push(Op::Add(a, b), v))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len(a, b)?;
        let v = zip_map(self.value(a), self.value(b), |x, y| x - y);
        Ok(self.push(Op::Sub(a, b), v))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len(a, b)?;
        let v = zip_map(self.value(a), self.value(b), |x, y| x * y);
        Ok(self.push(Op::Mul(a, b), v))
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len(a, b)?;
        let v = zip_map(self.value(a), self.value(b), |x, y| x / y);
        Ok(self.push(Op::Div(a, b), v))
    }

    /// `c * a`
    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.value(a).iter().map(|x| c * x).collect();
        self.push(Op::Scale(a, c), v)
    }

    /// `a + c`
    pub fn add_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.value(a).iter().map(|x| x + c).collect();
        self.push(Op::AddConst(a, c), v)
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).iter().map(|x| -x).collect();
        self.push(Op::Neg(a), v)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        self.push(Op::Sigmoid(a), v)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).iter().map(|&x| tanh_act(x)).collect();
        self.push(Op::Tanh(a), v)
    }

    pub fn abs(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).iter().map(|x| x.abs()).collect();
        self.push(Op::Abs(a), v)
    }

    pub fn concat(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = [self.value(a), self.value(b)].concat();
        self.push(Op::Concat(a, b), v)
    }

    pub fn slice(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        if start + len > self.value(x).len() {
            return Err(Error::InvalidArgument("tape slice out of range".into()));
        }
        let v = self.value(x)[start..start + len].to_vec();
        Ok(self.push(Op::Slice { x, start, len }, v))
    }

    pub fn matvec(&mut self, w: NodeId, x: NodeId, rows: usize, cols: usize) -> Result<NodeId> {
        check_len("tape matvec matrix", rows * cols, self.value(w).len())?;
        check_len("tape matvec vector", cols, self.value(x).len())?;
        let (wv, xv) = (self.value(w), self.value(x));
        let v = (0..rows)
            .map(|r| dot(&wv[r * cols..(r + 1) * cols], xv))
            .collect();
        Ok(self.push(Op::MatVec { w, x, rows, cols }, v))
    }

    pub fn vecmat(&mut self, x: NodeId, w: NodeId, rows: usize, cols: usize) -> Result<NodeId> {
        check_len("tape vecmat matrix", rows * cols, self.value(w).len())?;
        check_len("tape vecmat vector", rows, self.value(x).len())?;
        let (wv, xv) = (self.value(w), self.value(x));
        let mut v = vec![0.0; cols];
        for (r, &xr) in xv.iter().enumerate() {
            for (o, &a) in v.iter_mut().zip(&wv[r * cols..(r + 1) * cols]) {
                *o += xr * a;
            }
        }
        Ok(self.push(Op::VecMat { x, w, rows, cols }, v))
    }

    pub fn synapse(&mut self, y: NodeId, a: NodeId, b: NodeId, m: usize) -> Result<NodeId> {
        let rows = self.value(y).len();
        check_len("tape synapse slopes", rows * m, self.value(a).len())?;
        check_len("tape synapse offsets", rows * m, self.value(b).len())?;
        let (yv, av, bv) = (self.value(y), self.value(a), self.value(b));
        let mut v = Vec::with_capacity(rows * m);
        for (j, &yj) in yv.iter().enumerate() {
            for i in 0..m {
                v.push(sigmoid(av[j * m + i] * yj + bv[j * m + i]));
            }
        }
        Ok(self.push(Op::Synapse { y, a, b, m }, v))
    }

    pub fn weighted_col_sum(
        &mut self,
        g: NodeId,
        s: NodeId,
        bias: NodeId,
        m: usize,
    ) -> Result<NodeId> {
        self.same_len(g, s)?;
        check_len("tape weighted sum bias", m, self.value(bias).len())?;
        let (gv, sv) = (self.value(g), self.value(s));
        let rows = gv.len() / m.max(1);
        let mut v = self.value(bias).to_vec();
        for j in 0..rows {
            for i in 0..m {
                v[i] += gv[j * m + i] * sv[j * m + i];
            }
        }
        Ok(self.push(Op::WeightedColSum { g, s, bias, m }, v))
    }

    /// Reverse sweep seeded with `d loss / d node` for the given nodes.
    /// Returns the adjoint of every node (empty for nodes that received none).
    pub fn backward(&self, seeds: &[(NodeId, Vec<f64>)]) -> Result<Vec<Vec<f64>>> {
        let mut adj: Vec<Vec<f64>> = vec![Vec::new(); self.nodes.len()];
        for (id, g) in seeds {
            check_len("tape backward seed", self.value(*id).len(), g.len())?;
            accumulate(&mut adj[*id], g);
        }
        for id in (0..self.nodes.len()).rev() {
            if adj[id].is_empty() {
                continue;
            }
            let g = std::mem::take(&mut adj[id]);
            let node = &self.nodes[id];
            match &node.op {
                Op::Param(_) | Op::Const => {}
                Op::Add(a, b) => {
                    accumulate(&mut adj[*a], &g);
                    accumulate(&mut adj[*b], &g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut adj[*a], &g);
                    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                    accumulate(&mut adj[*b], &neg);
                }
                Op::Mul(a, b) => {
                    let ga = zip_map(&g, self.value(*b), |g, y| g * y);
                    let gb = zip_map(&g, self.value(*a), |g, x| g * x);
                    accumulate(&mut adj[*a], &ga);
                    accumulate(&mut adj[*b], &gb);
                }
                Op::Div(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let ga = zip_map(&g, bv, |g, y| g / y);
                    let gb: Vec<f64> = (0..g.len())
                        .map(|i| -g[i] * av[i] / (bv[i] * bv[i]))
                        .collect();
                    accumulate(&mut adj[*a], &ga);
                    accumulate(&mut adj[*b], &gb);
                }
                Op::Scale(a, c) => {
                    let ga: Vec<f64> = g.iter().map(|v| c * v).collect();
                    accumulate(&mut adj[*a], &ga);
                }
                Op::AddConst(a, _) => accumulate(&mut adj[*a], &g),
                Op::Neg(a) => {
                    let ga: Vec<f64> = g.iter().map(|v| -v).collect();
                    accumulate(&mut adj[*a], &ga);
                }
                Op::Sigmoid(a) => {
                    let ga = zip_map(&g, &node.value, |g, s| g * s * (1.0 - s));
                    accumulate(&mut adj[*a], &ga);
                }
                Op::Tanh(a) => {
                    let ga = zip_map(&g, &node.value, |g, t| g * (1.0 - t * t));
                    accumulate(&mut adj[*a], &ga);
                }
                Op::Abs(a) => {
                    let ga = zip_map(&g, self.value(*a), |g, x| if x >= 0.0 { g } else { -g });
                    accumulate(&mut adj[*a], &ga);
                }
                Op::Concat(a, b) => {
                    let la = self.value(*a).len();
                    accumulate(&mut adj[*a], &g[..la]);
                    accumulate(&mut adj[*b], &g[la..]);
                }
                Op::Slice { x, start, len } => {
                    let mut gx = vec![0.0; self.value(*x).len()];
                    gx[*start..start + len].copy_from_slice(&g);
                    accumulate(&mut adj[*x], &gx);
                }
                Op::MatVec { w, x, rows, cols } => {
                    let (wv, xv) = (self.value(*w), self.value(*x));
                    let mut gw = vec![0.0; rows * cols];
                    let mut gx = vec![0.0; *cols];
                    for r in 0..*rows {
                        for c in 0..*cols {
                            gw[r * cols + c] = g[r] * xv[c];
                            gx[c] += g[r] * wv[r * cols + c];
                        }
                    }
                    accumulate(&mut adj[*w], &gw);
                    accumulate(&mut adj[*x], &gx);
                }
                Op::VecMat { x, w, rows, cols } => {
                    let (wv, xv) = (self.value(*w), self.value(*x));
                    let mut gw = vec![0.0; rows * cols];
                    let mut gx = vec![0.0; *rows];
                    for r in 0..*rows {
                        for c in 0..*cols {
                            gw[r * cols + c] = xv[r] * g[c];
                            gx[r] += wv[r * cols + c] * g[c];
                        }
                    }
                    accumulate(&mut adj[*w], &gw);
                    accumulate(&mut adj[*x], &gx);
                }
                Op::Synapse { y, a, b, m } => {
                    let (yv, av) = (self.value(*y), self.value(*a));
                    let rows = yv.len();
                    let mut gy = vec![0.0; rows];
                    let mut ga = vec![0.0; rows * m];
                    let mut gb = vec![0.0; rows * m];
                    for j in 0..rows {
                        for i in 0..*m {
                            let k = j * m + i;
                            let s = node.value[k];
                            let dz = g[k] * s * (1.0 - s);
                            gb[k] = dz;
                            ga[k] = dz * yv[j];
                            gy[j] += dz * av[k];
                        }
                    }
                    accumulate(&mut adj[*y], &gy);
                    accumulate(&mut adj[*a], &ga);
                    accumulate(&mut adj[*b], &gb);
                }
                Op::WeightedColSum { g: gn, s, bias, m } => {
                    let (gv, sv) = (self.value(*gn), self.value(*s));
                    let mut gg = vec![0.0; gv.len()];
                    let mut gs = vec![0.0; gv.len()];
                    for k in 0..gv.len() {
                        let i = k % m;
                        gg[k] = g[i] * sv[k];
                        gs[k] = g[i] * gv[k];
                    }
                    accumulate(&mut adj[*gn], &gg);
                    accumulate(&mut adj[*s], &gs);
                    accumulate(&mut adj[*bias], &g);
                }
            }
            adj[id] = g;
        }
        Ok(adj)
    }
}

fn accumulate(dst: &mut Vec<f64>, src: &[f64]) {
    if dst.is_empty() {
        dst.extend_from_slice(src);
    } else {
        for (d, s) in dst.iter_mut().zip(src) {
            *d += s;
        }
    }
}
