//! Reverse-mode differentiation over row-major `f64` matrices.
//!
//! A [`Tape`] records every operation of one forward pass. Parameters are
//! read from a borrowed [`ParamSet`] and never copied; [`Tape::backward`]
//! returns their gradients.

use super::params::ParamSet;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "tensor shape");
        Self { rows, cols, data }
    }

    pub fn row(data: Vec<f64>) -> Self {
        Self { rows: 1, cols: data.len(), data }
    }

    pub fn scalar(v: f64) -> Self {
        Self { rows: 1, cols: 1, data: vec![v] }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn add_assign(&mut self, o: &Tensor) {
        debug_assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        for (a, b) in self.data.iter_mut().zip(&o.data) {
            *a += b;
        }
    }
}

/// `c = beta * c + op(a) * op(b)` where `op` optionally transposes.
/// `a` is logically `m x k`, `b` is `k x n`.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], a_t: bool, b: &[f64], b_t: bool, beta: f64, c: &mut [f64]) {
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: slices hold m*k, k*n and m*n elements with the strides above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    assert_eq!(a.cols, b.rows, "matmul shapes {}x{} * {}x{}", a.rows, a.cols, b.rows, b.cols);
    let mut c = Tensor::zeros(a.rows, b.cols);
    gemm(a.rows, a.cols, b.cols, &a.data, false, &b.data, false, 0.0, &mut c.data);
    c
}

pub type NodeId = usize;

#[derive(Clone, Debug)]
enum Op {
    Input,
    Param(usize),
    MatMul(NodeId, NodeId),
    /// `a + b`, where `b` has the same shape or is one row broadcast down `a`.
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    AddScalar(NodeId),
    Scale(NodeId, f64),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Relu(NodeId),
    Exp(NodeId),
    Square(NodeId),
    ConcatCols(Vec<NodeId>),
    SliceCols(NodeId, usize),
    GatherRows(NodeId, Vec<usize>),
    MeanRows(NodeId),
    Transpose(NodeId),
    SumAll(NodeId),
    /// Column vector log-softmax over the rows where the mask is set;
    /// masked rows hold `-inf`.
    LogSoftmax(NodeId, Vec<bool>),
    /// `-sum p log p` of a masked log-softmax column.
    Entropy(NodeId, Vec<bool>),
    Pick(NodeId, usize),
}

struct Node {
    op: Op,
    value: Option<Tensor>,
}

pub struct Tape<'p> {
    params: &'p ParamSet,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<NodeId>>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Self { params, nodes: Vec::new(), param_nodes: vec![None; params.len()] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        match (&self.nodes[id].op, &self.nodes[id].value) {
            (Op::Param(i), _) => self.params.tensor(*i),
            (_, Some(v)) => v,
            _ => unreachable!("non-parameter node without value"),
        }
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, value: Some(value) });
        self.nodes.len() - 1
    }

    pub fn input(&mut self, t: Tensor) -> NodeId {
        self.push(Op::Input, t)
    }

    /// Node for parameter `i`; repeated calls return the same node.
    pub fn param(&mut self, i: usize) -> NodeId {
        if let Some(id) = self.param_nodes[i] {
            return id;
        }
        self.nodes.push(Node { op: Op::Param(i), value: None });
        let id = self.nodes.len() - 1;
        self.param_nodes[i] = Some(id);
        id
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = matmul(self.value(a), self.value(b));
        self.push(Op::MatMul(a, b), v)
    }

    fn zip(&self, a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.cols, vb.cols, "elementwise cols");
        assert!(vb.rows == va.rows || vb.rows == 1, "elementwise rows");
        let mut out = va.clone();
        for r in 0..va.rows {
            let br = if vb.rows == 1 { 0 } else { r };
            for c in 0..va.cols {
                let o = &mut out.data[r * va.cols + c];
                *o = f(*o, vb.data[br * vb.cols + c]);
            }
        }
        out
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.zip(a, b, |x, y| x + y);
        self.push(Op::Add(a, b), v)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.zip(a, b, |x, y| x - y);
        self.push(Op::Sub(a, b), v)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.value(a).rows, self.value(b).rows, "mul needs equal shapes");
        let v = self.zip(a, b, |x, y| x * y);
        self.push(Op::Mul(a, b), v)
    }

    fn map(&mut self, a: NodeId, op: Op, f: impl Fn(f64) -> f64) -> NodeId {
        let mut v = self.value(a).clone();
        v.data.iter_mut().for_each(|x| *x = f(*x));
        self.push(op, v)
    }

    pub fn add_scalar(&mut self, a: NodeId, s: f64) -> NodeId {
        self.map(a, Op::AddScalar(a), |x| x + s)
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> NodeId {
        self.map(a, Op::Scale(a, s), |x| x * s)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.map(a, Op::Tanh(a), f64::tanh)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.map(a, Op::Sigmoid(a), |x| 1.0 / (1.0 + (-x).exp()))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.map(a, Op::Relu(a), |x| x.max(0.0))
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        self.map(a, Op::Exp(a), f64::exp)
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        self.map(a, Op::Square(a), |x| x * x)
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        let rows = self.value(parts[0]).rows;
        let cols: usize = parts.iter().map(|&p| self.value(p).cols).sum();
        let mut out = Tensor::zeros(rows, cols);
        let mut off = 0;
        for &p in parts {
            let v = self.value(p);
            assert_eq!(v.rows, rows, "concat rows");
            for r in 0..rows {
                out.data[r * cols + off..r * cols + off + v.cols].copy_from_slice(&v.data[r * v.cols..(r + 1) * v.cols]);
            }
            off += v.cols;
        }
        self.push(Op::ConcatCols(parts.to_vec()), out)
    }

    /// Columns `start..start + len`.
    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let v = self.value(a);
        assert!(start + len <= v.cols, "slice out of range");
        let mut out = Tensor::zeros(v.rows, len);
        for r in 0..v.rows {
            out.data[r * len..(r + 1) * len].copy_from_slice(&v.data[r * v.cols + start..r * v.cols + start + len]);
        }
        self.push(Op::SliceCols(a, start), out)
    }

    pub fn gather_rows(&mut self, a: NodeId, idx: &[usize]) -> NodeId {
        let v = self.value(a);
        let mut out = Tensor::zeros(idx.len(), v.cols);
        for (r, &i) in idx.iter().enumerate() {
            out.data[r * v.cols..(r + 1) * v.cols].copy_from_slice(&v.data[i * v.cols..(i + 1) * v.cols]);
        }
        self.push(Op::GatherRows(a, idx.to_vec()), out)
    }

    pub fn mean_rows(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a);
        let mut out = Tensor::zeros(1, v.cols);
        for r in 0..v.rows {
            for c in 0..v.cols {
                out.data[c] += v.data[r * v.cols + c];
            }
        }
        let inv = 1.0 / v.rows as f64;
        out.data.iter_mut().for_each(|x| *x *= inv);
        self.push(Op::MeanRows(a), out)
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a);
        let mut out = Tensor::zeros(v.cols, v.rows);
        for r in 0..v.rows {
            for c in 0..v.cols {
                out.data[c * v.rows + r] = v.data[r * v.cols + c];
            }
        }
        self.push(Op::Transpose(a), out)
    }

    pub fn sum_all(&mut self, a: NodeId) -> NodeId {
        let s = self.value(a).data.iter().sum();
        self.push(Op::SumAll(a), Tensor::scalar(s))
    }

    pub fn log_softmax(&mut self, a: NodeId, mask: &[bool]) -> NodeId {
        let v = self.value(a);
        assert_eq!(v.cols, 1, "log_softmax takes a column");
        assert_eq!(v.rows, mask.len(), "mask length");
        let max = v.data.iter().zip(mask).filter(|(_, m)| **m).map(|(x, _)| *x).fold(f64::NEG_INFINITY, f64::max);
        let lse = max + v.data.iter().zip(mask).filter(|(_, m)| **m).map(|(x, _)| (x - max).exp()).sum::<f64>().ln();
        let out: Vec<f64> = v.data.iter().zip(mask).map(|(x, m)| if *m { x - lse } else { f64::NEG_INFINITY }).collect();
        self.push(Op::LogSoftmax(a, mask.to_vec()), Tensor::from_vec(mask.len(), 1, out))
    }

    pub fn entropy(&mut self, logp: NodeId, mask: &[bool]) -> NodeId {
        let v = self.value(logp);
        let h = -v.data.iter().zip(mask).filter(|(_, m)| **m).map(|(l, _)| l.exp() * l).sum::<f64>();
        self.push(Op::Entropy(logp, mask.to_vec()), Tensor::scalar(h))
    }

    pub fn pick(&mut self, a: NodeId, i: usize) -> NodeId {
        let v = self.value(a).data[i];
        self.push(Op::Pick(a, i), Tensor::scalar(v))
    }

    /// Gradient of the scalar `root` with respect to every parameter.
    pub fn backward(&self, root: NodeId) -> Vec<Tensor> {
        assert_eq!(self.value(root).len(), 1, "backward needs a scalar root");
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[root] = Some(Tensor::scalar(1.0));
        let mut out: Vec<Tensor> = self.params.tensors().iter().map(|t| Tensor::zeros(t.rows, t.cols)).collect();

        fn acc(grads: &mut [Option<Tensor>], id: NodeId, g: Tensor) {
            match &mut grads[id] {
                Some(t) => t.add_assign(&g),
                slot => *slot = Some(g),
            }
        }

        for id in (0..=root).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            let out_v = || self.value(id);
            match &node.op {
                Op::Input => {}
                Op::Param(i) => out[*i].add_assign(&g),
                Op::MatMul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    let mut ga = Tensor::zeros(va.rows, va.cols);
                    gemm(va.rows, g.cols, va.cols, &g.data, false, &vb.data, true, 0.0, &mut ga.data);
                    let mut gb = Tensor::zeros(vb.rows, vb.cols);
                    gemm(va.cols, va.rows, vb.cols, &va.data, true, &g.data, false, 0.0, &mut gb.data);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Add(a, b) | Op::Sub(a, b) => {
                    let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                    let vb = self.value(*b);
                    let mut gb = Tensor::zeros(vb.rows, vb.cols);
                    if vb.rows == g.rows {
                        gb.data.iter_mut().zip(&g.data).for_each(|(x, y)| *x = sign * y);
                    } else {
                        for r in 0..g.rows {
                            for c in 0..g.cols {
                                gb.data[c] += sign * g.data[r * g.cols + c];
                            }
                        }
                    }
                    acc(&mut grads, *b, gb);
                    acc(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    let ga = Tensor::from_vec(g.rows, g.cols, g.data.iter().zip(&vb.data).map(|(x, y)| x * y).collect());
                    let gb = Tensor::from_vec(g.rows, g.cols, g.data.iter().zip(&va.data).map(|(x, y)| x * y).collect());
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::AddScalar(a) => acc(&mut grads, *a, g),
                Op::Scale(a, s) => {
                    let mut g = g;
                    g.data.iter_mut().for_each(|x| *x *= s);
                    acc(&mut grads, *a, g);
                }
                Op::Tanh(a) | Op::Sigmoid(a) | Op::Exp(a) => {
                    let y = out_v();
                    let d: fn(f64) -> f64 = match node.op {
                        Op::Tanh(_) => |y| 1.0 - y * y,
                        Op::Sigmoid(_) => |y| y * (1.0 - y),
                        _ => |y| y,
                    };
                    let mut g = g;
                    g.data.iter_mut().zip(&y.data).for_each(|(x, y)| *x *= d(*y));
                    acc(&mut grads, *a, g);
                }
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let mut g = g;
                    g.data.iter_mut().zip(&x.data).for_each(|(gv, xv)| {
                        if *xv <= 0.0 {
                            *gv = 0.0
                        }
                    });
                    acc(&mut grads, *a, g);
                }
                Op::Square(a) => {
                    let x = self.value(*a);
                    let mut g = g;
                    g.data.iter_mut().zip(&x.data).for_each(|(gv, xv)| *gv *= 2.0 * xv);
                    acc(&mut grads, *a, g);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let cols = self.value(p).cols;
                        let mut gp = Tensor::zeros(g.rows, cols);
                        for r in 0..g.rows {
                            gp.data[r * cols..(r + 1) * cols].copy_from_slice(&g.data[r * g.cols + off..r * g.cols + off + cols]);
                        }
                        off += cols;
                        acc(&mut grads, p, gp);
                    }
                }
                Op::SliceCols(a, start) => {
                    let va = self.value(*a);
                    let mut ga = Tensor::zeros(va.rows, va.cols);
                    for r in 0..g.rows {
                        ga.data[r * va.cols + start..r * va.cols + start + g.cols].copy_from_slice(&g.data[r * g.cols..(r + 1) * g.cols]);
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::GatherRows(a, idx) => {
                    let va = self.value(*a);
                    let mut ga = Tensor::zeros(va.rows, va.cols);
                    for (r, &i) in idx.iter().enumerate() {
                        for c in 0..g.cols {
                            ga.data[i * va.cols + c] += g.data[r * g.cols + c];
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::MeanRows(a) => {
                    let va = self.value(*a);
                    let inv = 1.0 / va.rows as f64;
                    let mut ga = Tensor::zeros(va.rows, va.cols);
                    for r in 0..va.rows {
                        for c in 0..va.cols {
                            ga.data[r * va.cols + c] = g.data[c] * inv;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Transpose(a) => {
                    let mut ga = Tensor::zeros(g.cols, g.rows);
                    for r in 0..g.rows {
                        for c in 0..g.cols {
                            ga.data[c * g.rows + r] = g.data[r * g.cols + c];
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::SumAll(a) => {
                    let va = self.value(*a);
                    acc(&mut grads, *a, Tensor::from_vec(va.rows, va.cols, vec![g.data[0]; va.len()]));
                }
                Op::LogSoftmax(a, mask) => {
                    let y = out_v();
                    let total: f64 = g.data.iter().zip(mask).filter(|(_, m)| **m).map(|(x, _)| x).sum();
                    let ga: Vec<f64> = (0..mask.len())
                        .map(|i| if mask[i] { g.data[i] - y.data[i].exp() * total } else { 0.0 })
                        .collect();
                    acc(&mut grads, *a, Tensor::from_vec(mask.len(), 1, ga));
                }
                Op::Entropy(l, mask) => {
                    let lv = self.value(*l);
                    let gl: Vec<f64> = (0..mask.len())
                        .map(|i| if mask[i] { -g.data[0] * lv.data[i].exp() * (lv.data[i] + 1.0) } else { 0.0 })
                        .collect();
                    acc(&mut grads, *l, Tensor::from_vec(mask.len(), 1, gl));
                }
                Op::Pick(a, i) => {
                    let va = self.value(*a);
                    let mut ga = Tensor::zeros(va.rows, va.cols);
                    ga.data[*i] = g.data[0];
                    acc(&mut grads, *a, ga);
                }
            }
        }
        out
    }
}
