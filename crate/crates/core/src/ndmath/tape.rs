//! Reverse-mode differentiation over [`Tensor`] values.
//!
//! Every operation called on a [`Tape`] computes its output eagerly, stores it
//! as a new node and remembers which nodes it read. [`Tape::backward`] then
//! walks the nodes in exact reverse order of recording and applies each
//! node's local vector-Jacobian product.
//!
//! ```
//! use sensegen::{Tape, Tensor};
//!
//! let mut tape = Tape::new();
//! let w = tape.leaf(Tensor::matrix(1, 2, vec![3.0, -1.0]).unwrap());
//! let x = tape.constant(Tensor::matrix(2, 1, vec![2.0, 5.0]).unwrap());
//! let y = tape.matmul(w, x).unwrap();
//! let loss = tape.sum(y);
//! let grads = tape.backward(loss).unwrap();
//! assert_eq!(grads.get(w).data(), &[2.0, 5.0]);
//! ```

use crate::error::{Error, Result};
use crate::ndmath::scalar::Scalar;
use crate::ndmath::tensor::{gemm_nn, gemm_nt, gemm_tn, softmax_in_place, Tensor};

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op<T> {
    Leaf,
    Constant,
    MatMul(Var, Var),
    /// `x · wᵀ + b` with `b` broadcast over rows.
    Linear { x: Var, w: Var, b: Option<Var> },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Offset(Var),
    Sigmoid(Var),
    Tanh(Var),
    Exp(Var),
    Ln(Var),
    Square(Var),
    Clamp { x: Var, lo: T, hi: T },
    Softmax(Var),
    LogSoftmax(Var),
    LogSumExpRows(Var),
    SliceCols { x: Var, start: usize },
    ConcatRows(Vec<Var>),
    BroadcastCols(Var),
    Sum(Var),
}

#[derive(Clone, Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

/// Single-owner record of a forward computation.
#[derive(Clone, Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

/// Gradients of a scalar loss with respect to every node of a tape.
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
    shapes: Vec<Vec<usize>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient for `v`; exactly zero when `v` does not influence the loss.
    pub fn get(&self, v: Var) -> Tensor<T> {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(&self.shapes[v.0]),
        }
    }

    pub fn get_ref(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads[v.0].as_ref()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops every node recorded after the first `len`. Handles to dropped
    /// nodes become invalid.
    pub fn truncate(&mut self, len: usize) {
        self.nodes.truncate(len);
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Registers a differentiable input (a parameter).
    pub fn leaf(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Registers an input that gradients are not requested for. Gradients
    /// still flow into it and are reported, but nothing propagates further.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Constant)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    /// Affine map `x · wᵀ + b` where `w` is `[out × in]` and `b` is `[out]`.
    /// `x` may be a single `[in]` vector or a `[rows × in]` batch.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        self.affine(x, w, Some(b))
    }

    /// `x · wᵀ` with the same shape rules as [`Tape::linear`].
    pub fn matmul_t(&mut self, x: Var, w: Var) -> Result<Var> {
        self.affine(x, w, None)
    }

    fn affine(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let (xv, wv) = (self.value(x), self.value(w));
        if wv.rank() != 2 || xv.rank() == 0 || xv.rank() > 2 || xv.cols() != wv.shape()[1] {
            return Err(Error::Dimension {
                op: "linear",
                left: xv.shape().to_vec(),
                right: wv.shape().to_vec(),
            });
        }
        let (rows, inp, out) = (xv.rows(), wv.shape()[1], wv.shape()[0]);
        let mut data = Vec::with_capacity(rows * out);
        match b.map(|b| self.value(b)) {
            Some(bv) if bv.len() != out => {
                return Err(Error::Dimension {
                    op: "linear bias",
                    left: wv.shape().to_vec(),
                    right: bv.shape().to_vec(),
                });
            }
            Some(bv) => {
                for _ in 0..rows {
                    data.extend_from_slice(bv.data());
                }
            }
            None => data.resize(rows * out, T::zero()),
        }
        gemm_nt(xv.data(), wv.data(), &mut data, rows, inp, out);
        let shape = if xv.rank() == 1 { vec![out] } else { vec![rows, out] };
        let value = Tensor::new(shape, data)?;
        Ok(self.push(value, Op::Linear { x, w, b }))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).zip_map(self.value(b), "add", |x, y| x + y)?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).zip_map(self.value(b), "sub", |x, y| x - y)?;
        Ok(self.push(out, Op::Sub(a, b)))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).zip_map(self.value(b), "mul", |x, y| x * y)?;
        Ok(self.push(out, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        let out = self.value(a).map(|x| x * c);
        self.push(out, Op::Scale(a, c))
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.scale(a, -T::one())
    }

    pub fn add_scalar(&mut self, a: Var, c: T) -> Var {
        let out = self.value(a).map(|x| x + c);
        self.push(out, Op::Offset(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).sigmoid();
        self.push(out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).tanh();
        self.push(out, Op::Tanh(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let out = self.value(a).map(T::exp);
        self.push(out, Op::Exp(a))
    }

    /// Natural log; non-positive input is a domain error.
    pub fn ln(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a);
        if v.data().iter().any(|&x| x <= T::zero()) {
            return Err(Error::Domain("log of a non-positive value".into()));
        }
        let out = v.map(T::ln);
        Ok(self.push(out, Op::Ln(a)))
    }

    pub fn square(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x * x);
        self.push(out, Op::Square(a))
    }

    /// Clamps into `[lo, hi]`; gradient is zero where the clamp is active.
    pub fn clamp(&mut self, a: Var, lo: T, hi: T) -> Var {
        let out = self.value(a).map(|x| x.max(lo).min(hi));
        self.push(out, Op::Clamp { x: a, lo, hi })
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, a: Var) -> Var {
        let out = self.value(a).softmax();
        self.push(out, Op::Softmax(a))
    }

    /// Row-wise `x − log Σ exp x`.
    pub fn log_softmax(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let c = v.cols();
        let mut data = v.data().to_vec();
        for row in data.chunks_mut(c) {
            let lse = crate::ndmath::tensor::log_sum_exp(row);
            for x in row.iter_mut() {
                *x -= lse;
            }
        }
        let out = Tensor::new(v.shape().to_vec(), data).expect("shape preserved");
        self.push(out, Op::LogSoftmax(a))
    }

    /// Row-wise log-sum-exp. A rank-1 input yields a scalar; `[rows × k]`
    /// yields `[rows]`.
    pub fn log_sum_exp(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let vals = v.log_sum_exp_rows();
        let out = if v.rank() <= 1 {
            Tensor::scalar(vals[0])
        } else {
            Tensor::vector(vals).expect("non-empty")
        };
        self.push(out, Op::LogSumExpRows(a))
    }

    /// Columns `start..end` of every row.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let v = self.value(a);
        let c = v.cols();
        if start >= end || end > c || v.rank() == 0 {
            return Err(Error::Shape {
                shape: v.shape().to_vec(),
                reason: format!("column slice {start}..{end} out of range"),
            });
        }
        let w = end - start;
        let mut data = Vec::with_capacity(v.rows() * w);
        for r in 0..v.rows() {
            data.extend_from_slice(&v.row(r)[start..end]);
        }
        let mut shape = v.shape().to_vec();
        *shape.last_mut().unwrap() = w;
        let out = Tensor::new(shape, data)?;
        Ok(self.push(out, Op::SliceCols { x: a, start }))
    }

    /// Stacks row-wise views of equal width into one `[Σrows × cols]` matrix.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Contract("concat_rows needs at least one input".into()))?;
        let c = self.value(*first).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            if v.cols() != c || v.rank() == 0 {
                return Err(Error::Dimension {
                    op: "concat_rows",
                    left: self.value(*first).shape().to_vec(),
                    right: v.shape().to_vec(),
                });
            }
            rows += v.rows();
            data.extend_from_slice(v.data());
        }
        let out = Tensor::matrix(rows, c, data)?;
        Ok(self.push(out, Op::ConcatRows(parts.to_vec())))
    }

    /// Repeats each element of a `[n]` vector across `k` columns: `[n × k]`.
    pub fn broadcast_cols(&mut self, a: Var, k: usize) -> Result<Var> {
        let v = self.value(a);
        if v.rank() > 1 || k == 0 {
            return Err(Error::Shape {
                shape: v.shape().to_vec(),
                reason: "broadcast_cols expects a vector and k ≥ 1".into(),
            });
        }
        let n = v.len();
        let mut data = Vec::with_capacity(n * k);
        for &x in v.data() {
            data.extend(std::iter::repeat_n(x, k));
        }
        let out = Tensor::matrix(n, k, data)?;
        Ok(self.push(out, Op::BroadcastCols(a)))
    }

    /// Sum of all elements, as a scalar.
    pub fn sum(&mut self, a: Var) -> Var {
        let out = Tensor::scalar(self.value(a).sum());
        self.push(out, Op::Sum(a))
    }

    /// Replays the tape backward from `loss`, which must be a single value.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        let n = self.nodes.len();
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; n];
        grads[loss.0] = Some(Tensor::full(lv.shape(), T::one()));

        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            self.propagate(node, &g, &mut grads);
            grads[id] = Some(g);
        }
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect(),
        })
    }

    fn propagate(&self, node: &Node<T>, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        let y = &node.value;
        match &node.op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k, n) = (av.shape()[0], av.shape()[1], bv.shape()[1]);
                let mut da = vec![T::zero(); m * k];
                gemm_nt(g.data(), bv.data(), &mut da, m, n, k);
                accumulate(grads, *a, av.shape(), &da);
                let mut db = vec![T::zero(); k * n];
                gemm_tn(av.data(), g.data(), &mut db, k, m, n);
                accumulate(grads, *b, bv.shape(), &db);
            }
            Op::Linear { x, w, b } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                let (rows, inp, out) = (xv.rows(), wv.shape()[1], wv.shape()[0]);
                let mut dx = vec![T::zero(); rows * inp];
                gemm_nn(g.data(), wv.data(), &mut dx, rows, out, inp);
                accumulate(grads, *x, xv.shape(), &dx);
                let mut dw = vec![T::zero(); out * inp];
                gemm_tn(g.data(), xv.data(), &mut dw, out, rows, inp);
                accumulate(grads, *w, wv.shape(), &dw);
                if let Some(b) = b {
                    let mut db = vec![T::zero(); out];
                    for r in g.data().chunks(out) {
                        for (d, &v) in db.iter_mut().zip(r) {
                            *d += v;
                        }
                    }
                    accumulate(grads, *b, self.value(*b).shape(), &db);
                }
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, g.shape(), g.data());
                accumulate(grads, *b, g.shape(), g.data());
            }
            Op::Sub(a, b) => {
                accumulate(grads, *a, g.shape(), g.data());
                let neg: Vec<T> = g.data().iter().map(|&v| -v).collect();
                accumulate(grads, *b, g.shape(), &neg);
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let da = elementwise(g, bv, |gv, bv| gv * bv);
                let db = elementwise(g, av, |gv, av| gv * av);
                accumulate(grads, *a, g.shape(), &da);
                accumulate(grads, *b, g.shape(), &db);
            }
            Op::Scale(a, c) => {
                let d: Vec<T> = g.data().iter().map(|&v| v * *c).collect();
                accumulate(grads, *a, g.shape(), &d);
            }
            Op::Offset(a) => accumulate(grads, *a, g.shape(), g.data()),
            Op::Sigmoid(a) => {
                let d = elementwise(g, y, |gv, s| gv * s * (T::one() - s));
                accumulate(grads, *a, g.shape(), &d);
            }
            Op::Tanh(a) => {
                let d = elementwise(g, y, |gv, t| gv * (T::one() - t * t));
                accumulate(grads, *a, g.shape(), &d);
            }
            Op::Exp(a) => {
                let d = elementwise(g, y, |gv, e| gv * e);
                accumulate(grads, *a, g.shape(), &d);
            }
            Op::Ln(a) => {
                let d = elementwise(g, self.value(*a), |gv, x| gv / x);
                accumulate(grads, *a, g.shape(), &d);
            }
            Op::Square(a) => {
                let d = elementwise(g, self.value(*a), |gv, x| gv * (x + x));
                accumulate(grads, *a, g.shape(), &d);
            }
            Op::Clamp { x, lo, hi } => {
                let (lo, hi) = (*lo, *hi);
                let d = elementwise(g, self.value(*x), |gv, xv| {
                    if xv >= lo && xv <= hi {
                        gv
                    } else {
                        T::zero()
                    }
                });
                accumulate(grads, *x, g.shape(), &d);
            }
            Op::Softmax(a) => {
                let c = y.cols();
                let mut d = Vec::with_capacity(y.len());
                for (yr, gr) in y.data().chunks(c).zip(g.data().chunks(c)) {
                    let dot: T = yr.iter().zip(gr).map(|(&p, &q)| p * q).sum();
                    d.extend(yr.iter().zip(gr).map(|(&p, &q)| p * (q - dot)));
                }
                accumulate(grads, *a, g.shape(), &d);
            }
            Op::LogSoftmax(a) => {
                let c = y.cols();
                let mut d = Vec::with_capacity(y.len());
                for (yr, gr) in y.data().chunks(c).zip(g.data().chunks(c)) {
                    let gs: T = gr.iter().copied().sum();
                    d.extend(yr.iter().zip(gr).map(|(&ls, &q)| q - ls.exp() * gs));
                }
                accumulate(grads, *a, g.shape(), &d);
            }
            Op::LogSumExpRows(a) => {
                let xv = self.value(*a);
                let c = xv.cols();
                let mut d = Vec::with_capacity(xv.len());
                for (xr, &gv) in xv.data().chunks(c).zip(g.data()) {
                    let mut p = xr.to_vec();
                    softmax_in_place(&mut p);
                    d.extend(p.into_iter().map(|pv| pv * gv));
                }
                accumulate(grads, *a, xv.shape(), &d);
            }
            Op::SliceCols { x, start } => {
                let xv = self.value(*x);
                let (c, w) = (xv.cols(), g.cols());
                let mut d = vec![T::zero(); xv.len()];
                for (r, gr) in g.data().chunks(w).enumerate() {
                    d[r * c + start..r * c + start + w].copy_from_slice(gr);
                }
                accumulate(grads, *x, xv.shape(), &d);
            }
            Op::ConcatRows(parts) => {
                let mut off = 0;
                for &p in parts {
                    let shape = self.value(p).shape().to_vec();
                    let n = self.value(p).len();
                    accumulate(grads, p, &shape, &g.data()[off..off + n]);
                    off += n;
                }
            }
            Op::BroadcastCols(a) => {
                let k = g.cols();
                let d: Vec<T> = g.data().chunks(k).map(|r| r.iter().copied().sum()).collect();
                accumulate(grads, *a, self.value(*a).shape(), &d);
            }
            Op::Sum(a) => {
                let av = self.value(*a);
                let d = vec![g.item(); av.len()];
                accumulate(grads, *a, av.shape(), &d);
            }
        }
    }
}

fn elementwise<T: Scalar>(g: &Tensor<T>, other: &Tensor<T>, f: impl Fn(T, T) -> T) -> Vec<T> {
    g.data().iter().zip(other.data()).map(|(&a, &b)| f(a, b)).collect()
}

fn accumulate<T: Scalar>(grads: &mut [Option<Tensor<T>>], v: Var, shape: &[usize], d: &[T]) {
    match &mut grads[v.0] {
        Some(acc) => {
            for (a, &x) in acc.data_mut().iter_mut().zip(d) {
                *a += x;
            }
        }
        slot @ None => {
            *slot = Some(Tensor::new(shape.to_vec(), d.to_vec()).expect("gradient shape"));
        }
    }
}
