//! Reverse-mode automatic differentiation over a linear operation tape.
//!
//! Every forward operation appends one node holding its output value and
//! whatever the backward pass needs. `backward` walks the nodes in reverse
//! creation order exactly once and accumulates gradients additively, so a
//! value consumed by several operations receives the sum of its partials.

use std::rc::Rc;

use super::dense::{axpy, dot, Tensor};
use super::params::{ParamId, ParamStore};
use crate::error::{Error, Result};

/// Layer normalization variance floor.
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Floor applied inside `log` so that a probability of exactly zero yields a
/// large finite penalty instead of `-inf`.
pub const LOG_FLOOR: f64 = 1e-300;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Value {
    Owned(Tensor),
    Param(usize),
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    MatVec(Var, Var),
    MatTVec(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    ScaleBy(Var, Var),
    OneMinus(Var),
    Tanh(Var),
    Sigmoid(Var),
    Log(Var),
    Concat(Vec<Var>),
    Slice(Var, usize),
    StackRows(Vec<Var>),
    Softmax(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        blocks: usize,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    GatherRow(Var, usize),
    MulConst(Var, Rc<Vec<f64>>),
    Pick(Var, usize),
    SumAll(Var),
    AddN(Vec<Var>),
    Pad(Var),
    ScatterAdd(Var, Rc<Vec<usize>>),
}

struct Node {
    value: Value,
    op: Op,
}

/// Gradients produced by [`Tape::backward`].
pub struct Gradients {
    nodes: Vec<Option<Tensor>>,
    params: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient with respect to a node, if any flowed into it.
    pub fn wrt(&self, v: Var) -> Option<&Tensor> {
        self.nodes.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient with respect to a stored parameter.
    pub fn param(&self, id: ParamId) -> Option<&Tensor> {
        self.params.get(id.index()).and_then(|g| g.as_ref())
    }

    pub fn into_params(self) -> Vec<Option<Tensor>> {
        self.params
    }
}

/// Single-owner operation tape. Parameters are borrowed from a
/// [`ParamStore`] and never copied onto the tape.
pub struct Tape<'p> {
    params: Option<&'p ParamStore>,
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
}

impl Default for Tape<'static> {
    fn default() -> Self {
        Tape::new()
    }
}

impl Tape<'static> {
    pub fn new() -> Self {
        Tape {
            params: None,
            nodes: Vec::new(),
            param_vars: Vec::new(),
        }
    }
}

impl<'p> Tape<'p> {
    pub fn with_params(params: &'p ParamStore) -> Self {
        Tape {
            params: Some(params),
            nodes: Vec::with_capacity(4096),
            param_vars: vec![None; params.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        match &self.nodes[v.0].value {
            Value::Owned(t) => t,
            Value::Param(i) => self
                .params
                .expect("parameter node without a store")
                .get(ParamId::new(*i)),
        }
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v).get(0)
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node {
            value: Value::Owned(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    /// A constant input; gradients still flow into it and can be read back
    /// from [`Gradients::wrt`].
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.index()] {
            return v;
        }
        self.nodes.push(Node {
            value: Value::Param(id.index()),
            op: Op::Leaf,
        });
        let v = Var(self.nodes.len() - 1);
        self.param_vars[id.index()] = Some(v);
        v
    }

    fn dim_err(&self, op: &'static str, a: Var, b: Var) -> Error {
        Error::Dimension {
            op,
            left: self.value(a).shape().to_vec(),
            right: self.value(b).shape().to_vec(),
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    /// `W x` for `W: [m×n]`, `x: [n]`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let (wt, xt) = (self.value(w), self.value(x));
        if wt.shape().len() != 2 || wt.cols() != xt.len() {
            return Err(self.dim_err("matvec", w, x));
        }
        let out: Vec<f64> = (0..wt.rows()).map(|r| dot(wt.row(r), xt.data())).collect();
        Ok(self.push(Tensor::vector(out), Op::MatVec(w, x)))
    }

    /// `Wᵀ x` for `W: [m×n]`, `x: [m]`.
    pub fn mat_t_vec(&mut self, w: Var, x: Var) -> Result<Var> {
        let (wt, xt) = (self.value(w), self.value(x));
        if wt.shape().len() != 2 || wt.rows() != xt.len() {
            return Err(self.dim_err("mat_t_vec", w, x));
        }
        let mut out = vec![0.0; wt.cols()];
        for (r, &xr) in xt.data().iter().enumerate() {
            if xr != 0.0 {
                axpy(xr, wt.row(r), &mut out);
            }
        }
        Ok(self.push(Tensor::vector(out), Op::MatTVec(w, x)))
    }

    fn zip_op(&mut self, name: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var> {
        let (at, bt) = (self.value(a), self.value(b));
        if at.shape() != bt.shape() {
            return Err(self.dim_err(name, a, b));
        }
        let data = at.data().iter().zip(bt.data()).map(|(x, y)| f(*x, *y)).collect();
        let out = Tensor::new(at.shape().to_vec(), data)?;
        Ok(self.push(out, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_op("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_op("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_op("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn map_op(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let at = self.value(a);
        let data = at.data().iter().map(|x| f(*x)).collect();
        let out = Tensor::new(at.shape().to_vec(), data).expect("shape preserved");
        self.push(out, op)
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        self.map_op(a, |x| x * k, Op::Scale(a, k))
    }

    /// Multiply every element of `a` by the single-element tensor `s`.
    pub fn scale_by(&mut self, a: Var, s: Var) -> Result<Var> {
        if self.value(s).len() != 1 {
            return Err(self.dim_err("scale_by", a, s));
        }
        let k = self.scalar(s);
        Ok(self.map_op(a, |x| x * k, Op::ScaleBy(a, s)))
    }

    pub fn one_minus(&mut self, a: Var) -> Var {
        self.map_op(a, |x| 1.0 - x, Op::OneMinus(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map_op(a, f64::tanh, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map_op(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn log(&mut self, a: Var) -> Var {
        self.map_op(a, |x| x.max(LOG_FLOOR).ln(), Op::Log(a))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let n: usize = parts.iter().map(|v| self.value(*v).len()).sum();
        let mut data = Vec::with_capacity(n);
        for v in parts {
            data.extend_from_slice(self.value(*v).data());
        }
        self.push(Tensor::vector(data), Op::Concat(parts.to_vec()))
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let at = self.value(a);
        if len == 0 || start + len > at.len() {
            return Err(Error::Dimension {
                op: "slice",
                left: at.shape().to_vec(),
                right: vec![start, len],
            });
        }
        let out = Tensor::vector(at.data()[start..start + len].to_vec());
        Ok(self.push(out, Op::Slice(a, start)))
    }

    /// Stack equal-length vectors into a `[n×d]` matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Result<Var> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Usage("stack_rows on an empty list".into()))?;
        let d = self.value(*first).len();
        let mut data = Vec::with_capacity(d * rows.len());
        for v in rows {
            let t = self.value(*v);
            if t.len() != d {
                return Err(self.dim_err("stack_rows", *first, *v));
            }
            data.extend_from_slice(t.data());
        }
        let out = Tensor::matrix(rows.len(), d, data)?;
        Ok(self.push(out, Op::StackRows(rows.to_vec())))
    }

    /// Softmax over a vector; masked-out positions (`false`) receive exactly
    /// zero probability and zero gradient.
    pub fn softmax(&mut self, a: Var, mask: Option<&[bool]>) -> Result<Var> {
        let out = softmax_values(self.value(a).data(), mask)?;
        Ok(self.push(Tensor::vector(out), Op::Softmax(a)))
    }

    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Result<Var> {
        self.layer_norm_blocks(x, gain, bias, 1)
    }

    /// Layer normalization applied independently to `blocks` equal slices of
    /// `x`, with one shared gain/bias vector of the full length.
    pub fn layer_norm_blocks(&mut self, x: Var, gain: Var, bias: Var, blocks: usize) -> Result<Var> {
        let (xt, gt, bt) = (self.value(x), self.value(gain), self.value(bias));
        let n = xt.len();
        if gt.len() != n || bt.len() != n {
            return Err(self.dim_err("layer_norm", x, gain));
        }
        if blocks == 0 || n % blocks != 0 {
            return Err(Error::Dimension {
                op: "layer_norm",
                left: xt.shape().to_vec(),
                right: vec![blocks],
            });
        }
        let size = n / blocks;
        let mut xhat = vec![0.0; n];
        let mut inv_std = vec![0.0; blocks];
        let mut out = vec![0.0; n];
        let (xd, gd, bd) = (xt.data(), gt.data(), bt.data());
        #[allow(clippy::needless_range_loop)] // b indexes both inv_std and the block range
        for b in 0..blocks {
            let r = b * size..(b + 1) * size;
            let block = &xd[r.clone()];
            let mean = block.iter().sum::<f64>() / size as f64;
            let var = block.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / size as f64;
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            inv_std[b] = inv;
            for i in r {
                xhat[i] = (xd[i] - mean) * inv;
                out[i] = gd[i] * xhat[i] + bd[i];
            }
        }
        Ok(self.push(
            Tensor::vector(out),
            Op::LayerNorm {
                x,
                gain,
                bias,
                blocks,
                xhat,
                inv_std,
            },
        ))
    }

    /// Row `row` of a `[rows×d]` table, as a vector.
    pub fn gather_row(&mut self, table: Var, row: usize) -> Result<Var> {
        let t = self.value(table);
        if t.shape().len() != 2 || row >= t.rows() {
            return Err(Error::Dimension {
                op: "gather_row",
                left: t.shape().to_vec(),
                right: vec![row],
            });
        }
        let out = Tensor::vector(t.row(row).to_vec());
        Ok(self.push(out, Op::GatherRow(table, row)))
    }

    /// Elementwise product with a constant vector, e.g. a dropout mask.
    pub fn mul_const(&mut self, a: Var, mask: Rc<Vec<f64>>) -> Result<Var> {
        let at = self.value(a);
        if at.len() != mask.len() {
            return Err(Error::Dimension {
                op: "mul_const",
                left: at.shape().to_vec(),
                right: vec![mask.len()],
            });
        }
        let data = at.data().iter().zip(mask.iter()).map(|(x, m)| x * m).collect();
        let out = Tensor::new(at.shape().to_vec(), data)?;
        Ok(self.push(out, Op::MulConst(a, mask)))
    }

    pub fn pick(&mut self, a: Var, idx: usize) -> Result<Var> {
        let at = self.value(a);
        if idx >= at.len() {
            return Err(Error::Dimension {
                op: "pick",
                left: at.shape().to_vec(),
                right: vec![idx],
            });
        }
        let v = at.get(idx);
        Ok(self.push(Tensor::scalar(v), Op::Pick(a, idx)))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.value(a).sum();
        self.push(Tensor::scalar(s), Op::SumAll(a))
    }

    /// Sum of equally shaped tensors.
    pub fn add_n(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Usage("add_n on an empty list".into()))?;
        let mut acc = self.value(*first).clone();
        for v in &parts[1..] {
            let t = self.value(*v);
            if t.shape() != acc.shape() {
                return Err(self.dim_err("add_n", *first, *v));
            }
            acc.add_assign(t);
        }
        Ok(self.push(acc, Op::AddN(parts.to_vec())))
    }

    /// Zero-extend a vector to length `len`.
    pub fn pad(&mut self, a: Var, len: usize) -> Result<Var> {
        let at = self.value(a);
        if len < at.len() {
            return Err(Error::Dimension {
                op: "pad",
                left: at.shape().to_vec(),
                right: vec![len],
            });
        }
        let mut data = at.data().to_vec();
        data.resize(len, 0.0);
        Ok(self.push(Tensor::vector(data), Op::Pad(a)))
    }

    /// `out[index[i]] += src[i]` into a zero vector of length `size`.
    pub fn scatter_add(&mut self, src: Var, index: Rc<Vec<usize>>, size: usize) -> Result<Var> {
        let st = self.value(src);
        if st.len() != index.len() || index.iter().any(|&i| i >= size) {
            return Err(Error::Dimension {
                op: "scatter_add",
                left: st.shape().to_vec(),
                right: vec![index.len(), size],
            });
        }
        let mut out = vec![0.0; size];
        for (v, &i) in st.data().iter().zip(index.iter()) {
            out[i] += v;
        }
        Ok(self.push(Tensor::vector(out), Op::ScatterAdd(src, index)))
    }

    /// Backpropagate from a single-element `root`.
    pub fn backward(&self, root: Var) -> Gradients {
        let n = self.nodes.len();
        let mut grads: Vec<Option<Tensor>> = Vec::with_capacity(n);
        grads.resize_with(n, || None);
        grads[root.0] = Some(Tensor::full(self.value(root).shape(), 1.0));

        for idx in (0..=root.0).rev() {
            let g = match grads[idx].take() {
                Some(g) => g,
                None => continue,
            };
            self.backprop_node(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }

        let mut params = vec![None; self.param_vars.len()];
        for (pid, var) in self.param_vars.iter().enumerate() {
            if let Some(v) = var {
                params[pid] = grads[v.0].clone();
            }
        }
        Gradients { nodes: grads, params }
    }

    fn acc<'g>(&self, grads: &'g mut [Option<Tensor>], v: Var) -> &'g mut Tensor {
        let shape = self.value(v).shape();
        grads[v.0].get_or_insert_with(|| Tensor::zeros(shape))
    }

    fn backprop_node(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let out = match &self.nodes[idx].value {
            Value::Owned(t) => t,
            Value::Param(_) => return,
        };
        let gd = g.data();
        match &self.nodes[idx].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (at, bt) = (self.value(*a), self.value(*b));
                let ga = g.matmul(&bt.transpose()).expect("shapes checked forward");
                let gb = at.transpose().matmul(g).expect("shapes checked forward");
                self.acc(grads, *a).add_assign(&ga);
                self.acc(grads, *b).add_assign(&gb);
            }
            Op::MatVec(w, x) => {
                let (wt, xt) = (self.value(*w), self.value(*x));
                {
                    let gw = self.acc(grads, *w);
                    let cols = wt.cols();
                    let gwd = gw.data_mut();
                    for (r, &gr) in gd.iter().enumerate() {
                        if gr != 0.0 {
                            axpy(gr, xt.data(), &mut gwd[r * cols..(r + 1) * cols]);
                        }
                    }
                }
                let gx = self.acc(grads, *x);
                for (r, &gr) in gd.iter().enumerate() {
                    if gr != 0.0 {
                        axpy(gr, wt.row(r), gx.data_mut());
                    }
                }
            }
            Op::MatTVec(w, x) => {
                let (wt, xt) = (self.value(*w), self.value(*x));
                {
                    let gw = self.acc(grads, *w);
                    let cols = wt.cols();
                    let gwd = gw.data_mut();
                    for (r, &xr) in xt.data().iter().enumerate() {
                        if xr != 0.0 {
                            axpy(xr, gd, &mut gwd[r * cols..(r + 1) * cols]);
                        }
                    }
                }
                let gx = self.acc(grads, *x);
                for (r, v) in gx.data_mut().iter_mut().enumerate() {
                    *v += dot(wt.row(r), gd);
                }
            }
            Op::Add(a, b) => {
                self.acc(grads, *a).add_assign(g);
                self.acc(grads, *b).add_assign(g);
            }
            Op::Sub(a, b) => {
                self.acc(grads, *a).add_assign(g);
                axpy(-1.0, gd, self.acc(grads, *b).data_mut());
            }
            Op::Mul(a, b) => {
                let (at, bt) = (self.value(*a), self.value(*b));
                for ((o, gi), bi) in self.acc(grads, *a).data_mut().iter_mut().zip(gd).zip(bt.data()) {
                    *o += gi * bi;
                }
                for ((o, gi), ai) in self.acc(grads, *b).data_mut().iter_mut().zip(gd).zip(at.data()) {
                    *o += gi * ai;
                }
            }
            Op::Scale(a, k) => axpy(*k, gd, self.acc(grads, *a).data_mut()),
            Op::ScaleBy(a, s) => {
                let (at, k) = (self.value(*a), self.scalar(*s));
                axpy(k, gd, self.acc(grads, *a).data_mut());
                let gs = dot(gd, at.data());
                self.acc(grads, *s).data_mut()[0] += gs;
            }
            Op::OneMinus(a) => axpy(-1.0, gd, self.acc(grads, *a).data_mut()),
            Op::Tanh(a) => {
                for ((o, gi), y) in self.acc(grads, *a).data_mut().iter_mut().zip(gd).zip(out.data()) {
                    *o += gi * (1.0 - y * y);
                }
            }
            Op::Sigmoid(a) => {
                for ((o, gi), y) in self.acc(grads, *a).data_mut().iter_mut().zip(gd).zip(out.data()) {
                    *o += gi * y * (1.0 - y);
                }
            }
            Op::Log(a) => {
                let at = self.value(*a);
                for ((o, gi), x) in self.acc(grads, *a).data_mut().iter_mut().zip(gd).zip(at.data()) {
                    *o += gi / x.max(LOG_FLOOR);
                }
            }
            Op::Concat(parts) => {
                let mut off = 0;
                for v in parts {
                    let len = self.value(*v).len();
                    axpy(1.0, &gd[off..off + len], self.acc(grads, *v).data_mut());
                    off += len;
                }
            }
            Op::Slice(a, start) => {
                let len = gd.len();
                axpy(1.0, gd, &mut self.acc(grads, *a).data_mut()[*start..*start + len]);
            }
            Op::StackRows(rows) => {
                let d = out.cols();
                for (r, v) in rows.iter().enumerate() {
                    axpy(1.0, &gd[r * d..(r + 1) * d], self.acc(grads, *v).data_mut());
                }
            }
            Op::Softmax(a) => {
                let y = out.data();
                let s = dot(y, gd);
                for ((o, gi), yi) in self.acc(grads, *a).data_mut().iter_mut().zip(gd).zip(y) {
                    *o += yi * (gi - s);
                }
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                blocks,
                xhat,
                inv_std,
            } => {
                let gt = self.value(*gain);
                axpy(1.0, gd, self.acc(grads, *bias).data_mut());
                for ((o, gi), xh) in self.acc(grads, *gain).data_mut().iter_mut().zip(gd).zip(xhat) {
                    *o += gi * xh;
                }
                let n = gd.len();
                let size = n / blocks;
                let gx = self.acc(grads, *x);
                let gxd = gx.data_mut();
                #[allow(clippy::needless_range_loop)] // b indexes both inv_std and the block range
                for b in 0..*blocks {
                    let r = b * size..(b + 1) * size;
                    let mut sum_d = 0.0;
                    let mut sum_dx = 0.0;
                    for i in r.clone() {
                        let d = gd[i] * gt.data()[i];
                        sum_d += d;
                        sum_dx += d * xhat[i];
                    }
                    let k = inv_std[b] / size as f64;
                    for i in r {
                        let d = gd[i] * gt.data()[i];
                        gxd[i] += k * (size as f64 * d - sum_d - xhat[i] * sum_dx);
                    }
                }
            }
            Op::GatherRow(table, row) => {
                let cols = self.value(*table).cols();
                let gt = self.acc(grads, *table);
                axpy(1.0, gd, &mut gt.data_mut()[row * cols..(row + 1) * cols]);
            }
            Op::MulConst(a, mask) => {
                for ((o, gi), m) in self.acc(grads, *a).data_mut().iter_mut().zip(gd).zip(mask.iter()) {
                    *o += gi * m;
                }
            }
            Op::Pick(a, i) => self.acc(grads, *a).data_mut()[*i] += gd[0],
            Op::SumAll(a) => {
                for o in self.acc(grads, *a).data_mut() {
                    *o += gd[0];
                }
            }
            Op::AddN(parts) => {
                for v in parts {
                    self.acc(grads, *v).add_assign(g);
                }
            }
            Op::Pad(a) => {
                let len = self.value(*a).len();
                axpy(1.0, &gd[..len], self.acc(grads, *a).data_mut());
            }
            Op::ScatterAdd(src, index) => {
                for (o, &i) in self.acc(grads, *src).data_mut().iter_mut().zip(index.iter()) {
                    *o += gd[i];
                }
            }
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Max-subtracted masked softmax on plain values.
pub fn softmax_values(x: &[f64], mask: Option<&[bool]>) -> Result<Vec<f64>> {
    if let Some(m) = mask {
        if m.len() != x.len() {
            return Err(Error::Dimension {
                op: "softmax",
                left: vec![x.len()],
                right: vec![m.len()],
            });
        }
    }
    let keep = |i: usize| mask.is_none_or(|m| m[i]);
    let max = (0..x.len())
        .filter(|&i| keep(i))
        .map(|i| x[i])
        .fold(f64::NEG_INFINITY, f64::max);
    // NaN inputs propagate so callers can report divergence
    if (0..x.len()).any(|i| keep(i) && x[i].is_nan()) || max == f64::INFINITY {
        return Ok((0..x.len()).map(|i| if keep(i) { f64::NAN } else { 0.0 }).collect());
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::InvalidMask);
    }
    let mut out: Vec<f64> = (0..x.len())
        .map(|i| if keep(i) { (x[i] - max).exp() } else { 0.0 })
        .collect();
    let z: f64 = out.iter().sum();
    for v in &mut out {
        *v /= z;
    }
    Ok(out)
}
