//! Tape-based reverse-mode automatic differentiation over small dense
//! matrices.
//!
//! A [`Tape`] records every primitive operation of a forward pass; a single
//! backward traversal then accumulates gradients for all recorded nodes in
//! reverse creation order, which is a reverse topological order by
//! construction. Values live in one arena buffer so a cleared tape can be
//! reused without reallocating.
//!
//! Tensors are matrices (rows x columns). Batches put windows in rows;
//! time-indexed sequences are kept as slices of per-step matrices and
//! stacked with [`Tape::concat_rows`] when a single matrix is needed.
//! All arithmetic is f64: the networks here are small and 64-bit math makes
//! finite-difference gradient checks decisive.
//!
//! Shape mismatches are programming errors and panic immediately, naming
//! both shapes.

/// Handle to a value recorded on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tensor {
    pub(crate) idx: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Tensor {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// a[n,m] * b[m,p]
    MatMul(usize, usize),
    /// a[n,m] * b[p,m]^T
    MatMulNT(usize, usize),
    Add(usize, usize),
    /// a[n,m] + row[1,m] broadcast over rows
    AddRow(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    AddScalar(usize),
    Sigmoid(usize),
    Tanh(usize),
    /// Row-wise softmax (last axis).
    Softmax(usize),
    Sqrt(usize),
    /// Mean of all entries -> scalar.
    MeanAll(usize),
    ConcatRows(Vec<usize>),
    ConcatCols(Vec<usize>),
    SliceCols {
        src: usize,
        start: usize,
    },
}

struct Node {
    off: usize,
    rows: usize,
    cols: usize,
    op: Op,
}

/// Records a forward computation and replays it backward.
pub struct Tape {
    buf: Vec<f64>,
    nodes: Vec<Node>,
}

/// Gradient buffer produced by [`Tape::backward`], indexed by tensor.
pub struct Grads {
    buf: Vec<f64>,
    offsets: Vec<(usize, usize)>,
}

impl Grads {
    pub fn get(&self, t: Tensor) -> &[f64] {
        let (off, len) = self.offsets[t.idx];
        &self.buf[off..off + len]
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            buf: Vec::new(),
            nodes: Vec::new(),
        }
    }

    /// Drop all recorded nodes but keep allocations for reuse.
    pub fn clear(&mut self) {
        self.buf.clear();
        self.nodes.clear();
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn value(&self, t: Tensor) -> &[f64] {
        let n = &self.nodes[t.idx];
        &self.buf[n.off..n.off + n.rows * n.cols]
    }

    pub fn scalar(&self, t: Tensor) -> f64 {
        debug_assert_eq!(t.len(), 1, "scalar() on {}x{} tensor", t.rows, t.cols);
        self.buf[self.nodes[t.idx].off]
    }

    fn push(&mut self, rows: usize, cols: usize, op: Op) -> Tensor {
        let off = self.buf.len();
        self.buf.resize(off + rows * cols, 0.0);
        self.nodes.push(Node {
            off,
            rows,
            cols,
            op,
        });
        Tensor {
            idx: self.nodes.len() - 1,
            rows,
            cols,
        }
    }

    fn check_finite(&self, t: Tensor) {
        debug_assert!(
            self.value(t).iter().all(|v| v.is_finite()),
            "non-finite value produced by {:?}",
            self.nodes[t.idx].op
        );
    }

    /// Record an input or parameter matrix.
    pub fn leaf(&mut self, rows: usize, cols: usize, values: &[f64]) -> Tensor {
        assert_eq!(
            values.len(),
            rows * cols,
            "leaf data length {} does not match shape {}x{}",
            values.len(),
            rows,
            cols
        );
        let t = self.push(rows, cols, Op::Leaf);
        let off = self.nodes[t.idx].off;
        self.buf[off..off + values.len()].copy_from_slice(values);
        t
    }

    pub fn leaf_scalar(&mut self, value: f64) -> Tensor {
        self.leaf(1, 1, &[value])
    }

    pub fn zeros(&mut self, rows: usize, cols: usize) -> Tensor {
        self.push(rows, cols, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Tensor, b: Tensor) -> Tensor {
        assert_eq!(
            a.cols, b.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            a.rows, a.cols, b.rows, b.cols
        );
        let t = self.push(a.rows, b.cols, Op::MatMul(a.idx, b.idx));
        let (n, m, p) = (a.rows, a.cols, b.cols);
        let (ao, bo, to) = (
            self.nodes[a.idx].off,
            self.nodes[b.idx].off,
            self.nodes[t.idx].off,
        );
        for i in 0..n {
            for k in 0..m {
                let aik = self.buf[ao + i * m + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..p {
                    self.buf[to + i * p + j] += aik * self.buf[bo + k * p + j];
                }
            }
        }
        self.check_finite(t);
        t
    }

    /// a * b^T without materializing the transpose.
    pub fn matmul_nt(&mut self, a: Tensor, b: Tensor) -> Tensor {
        assert_eq!(
            a.cols, b.cols,
            "matmul_nt shape mismatch: {}x{} * ({}x{})^T",
            a.rows, a.cols, b.rows, b.cols
        );
        let t = self.push(a.rows, b.rows, Op::MatMulNT(a.idx, b.idx));
        let (n, m, p) = (a.rows, a.cols, b.rows);
        let (ao, bo, to) = (
            self.nodes[a.idx].off,
            self.nodes[b.idx].off,
            self.nodes[t.idx].off,
        );
        for i in 0..n {
            for j in 0..p {
                let mut acc = 0.0;
                let ar = ao + i * m;
                let br = bo + j * m;
                for k in 0..m {
                    acc += self.buf[ar + k] * self.buf[br + k];
                }
                self.buf[to + i * p + j] = acc;
            }
        }
        self.check_finite(t);
        t
    }

    fn zip_op(
        &mut self,
        a: Tensor,
        b: Tensor,
        op: Op,
        name: &str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Tensor {
        assert!(
            a.rows == b.rows && a.cols == b.cols,
            "{name} shape mismatch: {}x{} vs {}x{}",
            a.rows,
            a.cols,
            b.rows,
            b.cols
        );
        let t = self.push(a.rows, a.cols, op);
        let (ao, bo, to) = (
            self.nodes[a.idx].off,
            self.nodes[b.idx].off,
            self.nodes[t.idx].off,
        );
        for i in 0..a.len() {
            self.buf[to + i] = f(self.buf[ao + i], self.buf[bo + i]);
        }
        self.check_finite(t);
        t
    }

    pub fn add(&mut self, a: Tensor, b: Tensor) -> Tensor {
        self.zip_op(a, b, Op::Add(a.idx, b.idx), "add", |x, y| x + y)
    }

    pub fn sub(&mut self, a: Tensor, b: Tensor) -> Tensor {
        self.zip_op(a, b, Op::Sub(a.idx, b.idx), "sub", |x, y| x - y)
    }

    pub fn mul(&mut self, a: Tensor, b: Tensor) -> Tensor {
        self.zip_op(a, b, Op::Mul(a.idx, b.idx), "mul", |x, y| x * y)
    }

    /// Add a 1-row tensor to every row of `a`.
    pub fn add_row(&mut self, a: Tensor, row: Tensor) -> Tensor {
        assert!(
            row.rows == 1 && row.cols == a.cols,
            "add_row shape mismatch: {}x{} + {}x{}",
            a.rows,
            a.cols,
            row.rows,
            row.cols
        );
        let t = self.push(a.rows, a.cols, Op::AddRow(a.idx, row.idx));
        let (ao, ro, to) = (
            self.nodes[a.idx].off,
            self.nodes[row.idx].off,
            self.nodes[t.idx].off,
        );
        for i in 0..a.rows {
            for j in 0..a.cols {
                self.buf[to + i * a.cols + j] =
                    self.buf[ao + i * a.cols + j] + self.buf[ro + j];
            }
        }
        self.check_finite(t);
        t
    }

    fn map_op(&mut self, a: Tensor, op: Op, f: impl Fn(f64) -> f64) -> Tensor {
        let t = self.push(a.rows, a.cols, op);
        let (ao, to) = (self.nodes[a.idx].off, self.nodes[t.idx].off);
        for i in 0..a.len() {
            self.buf[to + i] = f(self.buf[ao + i]);
        }
        self.check_finite(t);
        t
    }

    pub fn scale(&mut self, a: Tensor, c: f64) -> Tensor {
        self.map_op(a, Op::Scale(a.idx, c), |x| c * x)
    }

    pub fn add_scalar(&mut self, a: Tensor, c: f64) -> Tensor {
        self.map_op(a, Op::AddScalar(a.idx), |x| x + c)
    }

    pub fn sigmoid(&mut self, a: Tensor) -> Tensor {
        self.map_op(a, Op::Sigmoid(a.idx), |x| 1.0 / (1.0 + (-x).exp()))
    }

    pub fn tanh(&mut self, a: Tensor) -> Tensor {
        self.map_op(a, Op::Tanh(a.idx), f64::tanh)
    }

    pub fn sqrt(&mut self, a: Tensor) -> Tensor {
        self.map_op(a, Op::Sqrt(a.idx), f64::sqrt)
    }

    /// Numerically stable softmax along each row (the last axis).
    pub fn softmax(&mut self, a: Tensor) -> Tensor {
        let t = self.push(a.rows, a.cols, Op::Softmax(a.idx));
        let (ao, to) = (self.nodes[a.idx].off, self.nodes[t.idx].off);
        for i in 0..a.rows {
            let row = ao + i * a.cols;
            let max = (0..a.cols)
                .map(|j| self.buf[row + j])
                .fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for j in 0..a.cols {
                let e = (self.buf[row + j] - max).exp();
                self.buf[to + i * a.cols + j] = e;
                sum += e;
            }
            for j in 0..a.cols {
                self.buf[to + i * a.cols + j] /= sum;
            }
        }
        self.check_finite(t);
        t
    }

    pub fn mean_all(&mut self, a: Tensor) -> Tensor {
        let t = self.push(1, 1, Op::MeanAll(a.idx));
        let ao = self.nodes[a.idx].off;
        let sum: f64 = self.buf[ao..ao + a.len()].iter().sum();
        let to = self.nodes[t.idx].off;
        self.buf[to] = sum / a.len() as f64;
        self.check_finite(t);
        t
    }

    /// Stack tensors with equal column counts on top of each other.
    pub fn concat_rows(&mut self, parts: &[Tensor]) -> Tensor {
        assert!(!parts.is_empty(), "concat_rows of nothing");
        let cols = parts[0].cols;
        let rows: usize = parts
            .iter()
            .map(|p| {
                assert_eq!(
                    p.cols, cols,
                    "concat_rows column mismatch: {}x{} vs ?x{}",
                    p.rows, p.cols, cols
                );
                p.rows
            })
            .sum();
        let t = self.push(rows, cols, Op::ConcatRows(parts.iter().map(|p| p.idx).collect()));
        let mut to = self.nodes[t.idx].off;
        for p in parts {
            let po = self.nodes[p.idx].off;
            let len = p.len();
            self.buf.copy_within(po..po + len, to);
            to += len;
        }
        t
    }

    /// Concatenate tensors with equal row counts along the feature axis.
    pub fn concat_cols(&mut self, parts: &[Tensor]) -> Tensor {
        assert!(!parts.is_empty(), "concat_cols of nothing");
        let rows = parts[0].rows;
        let cols: usize = parts
            .iter()
            .map(|p| {
                assert_eq!(
                    p.rows, rows,
                    "concat_cols row mismatch: {}x{} vs {}x?",
                    p.rows, p.cols, rows
                );
                p.cols
            })
            .sum();
        let t = self.push(rows, cols, Op::ConcatCols(parts.iter().map(|p| p.idx).collect()));
        let to = self.nodes[t.idx].off;
        let mut col_off = 0;
        for p in parts {
            let po = self.nodes[p.idx].off;
            for i in 0..rows {
                self.buf.copy_within(
                    po + i * p.cols..po + (i + 1) * p.cols,
                    to + i * cols + col_off,
                );
            }
            col_off += p.cols;
        }
        t
    }

    /// Take `len` columns starting at `start`.
    pub fn slice_cols(&mut self, a: Tensor, start: usize, len: usize) -> Tensor {
        assert!(
            start + len <= a.cols,
            "slice_cols [{start}, {}) out of {}x{}",
            start + len,
            a.rows,
            a.cols
        );
        let t = self.push(a.rows, len, Op::SliceCols { src: a.idx, start });
        let (ao, to) = (self.nodes[a.idx].off, self.nodes[t.idx].off);
        for i in 0..a.rows {
            self.buf
                .copy_within(ao + i * a.cols + start..ao + i * a.cols + start + len, to + i * len);
        }
        t
    }

    /// Propagate d(root)/d(node) into every recorded node. The root must be
    /// a scalar. Nodes are visited exactly once, newest first; parents
    /// always precede children on the tape, so this is a reverse
    /// topological order.
    pub fn backward(&self, root: Tensor) -> Grads {
        assert_eq!(root.len(), 1, "backward root must be scalar, got {}x{}", root.rows, root.cols);
        let mut grad = vec![0.0; self.buf.len()];
        grad[self.nodes[root.idx].off] = 1.0;

        for idx in (0..=root.idx).rev() {
            let node = &self.nodes[idx];
            let len = node.rows * node.cols;
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            // Parents were recorded strictly earlier, so their slots live
            // strictly below this node's offset.
            let (parent_grad, rest) = grad.split_at_mut(node.off);
            let g = &rest[..len];
            let val = &self.buf[node.off..node.off + len];
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (an, bn) = (&self.nodes[*a], &self.nodes[*b]);
                    let (n, m, p) = (an.rows, an.cols, bn.cols);
                    let av = &self.buf[an.off..an.off + n * m];
                    let bv = &self.buf[bn.off..bn.off + m * p];
                    // dA += G * B^T ; dB += A^T * G
                    for i in 0..n {
                        for k in 0..m {
                            let mut acc = 0.0;
                            for j in 0..p {
                                acc += g[i * p + j] * bv[k * p + j];
                            }
                            parent_grad[an.off + i * m + k] += acc;
                        }
                    }
                    for k in 0..m {
                        for i in 0..n {
                            let aik = av[i * m + k];
                            if aik == 0.0 {
                                continue;
                            }
                            for j in 0..p {
                                parent_grad[bn.off + k * p + j] += aik * g[i * p + j];
                            }
                        }
                    }
                }
                Op::MatMulNT(a, b) => {
                    let (an, bn) = (&self.nodes[*a], &self.nodes[*b]);
                    let (n, m, p) = (an.rows, an.cols, bn.rows);
                    let av = &self.buf[an.off..an.off + n * m];
                    let bv = &self.buf[bn.off..bn.off + p * m];
                    // C = A B^T: dA += G * B ; dB += G^T * A
                    for i in 0..n {
                        for j in 0..p {
                            let gij = g[i * p + j];
                            if gij == 0.0 {
                                continue;
                            }
                            for k in 0..m {
                                parent_grad[an.off + i * m + k] += gij * bv[j * m + k];
                            }
                        }
                    }
                    for j in 0..p {
                        for i in 0..n {
                            let gij = g[i * p + j];
                            if gij == 0.0 {
                                continue;
                            }
                            for k in 0..m {
                                parent_grad[bn.off + j * m + k] += gij * av[i * m + k];
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    let (ao, bo) = (self.nodes[*a].off, self.nodes[*b].off);
                    for i in 0..len {
                        parent_grad[ao + i] += g[i];
                        parent_grad[bo + i] += g[i];
                    }
                }
                Op::AddRow(a, row) => {
                    let (an, rn) = (&self.nodes[*a], &self.nodes[*row]);
                    for i in 0..len {
                        parent_grad[an.off + i] += g[i];
                    }
                    for i in 0..node.rows {
                        for j in 0..node.cols {
                            parent_grad[rn.off + j] += g[i * node.cols + j];
                        }
                    }
                }
                Op::Sub(a, b) => {
                    let (ao, bo) = (self.nodes[*a].off, self.nodes[*b].off);
                    for i in 0..len {
                        parent_grad[ao + i] += g[i];
                        parent_grad[bo + i] -= g[i];
                    }
                }
                Op::Mul(a, b) => {
                    let (an, bn) = (&self.nodes[*a], &self.nodes[*b]);
                    let av = &self.buf[an.off..an.off + len];
                    let bv = &self.buf[bn.off..bn.off + len];
                    for i in 0..len {
                        parent_grad[an.off + i] += g[i] * bv[i];
                        parent_grad[bn.off + i] += g[i] * av[i];
                    }
                }
                Op::Scale(a, c) => {
                    let ao = self.nodes[*a].off;
                    for i in 0..len {
                        parent_grad[ao + i] += g[i] * c;
                    }
                }
                Op::AddScalar(a) => {
                    let ao = self.nodes[*a].off;
                    for i in 0..len {
                        parent_grad[ao + i] += g[i];
                    }
                }
                Op::Sigmoid(a) => {
                    let ao = self.nodes[*a].off;
                    for i in 0..len {
                        parent_grad[ao + i] += g[i] * val[i] * (1.0 - val[i]);
                    }
                }
                Op::Tanh(a) => {
                    let ao = self.nodes[*a].off;
                    for i in 0..len {
                        parent_grad[ao + i] += g[i] * (1.0 - val[i] * val[i]);
                    }
                }
                Op::Softmax(a) => {
                    let ao = self.nodes[*a].off;
                    for i in 0..node.rows {
                        let r = i * node.cols;
                        let dot: f64 =
                            (0..node.cols).map(|j| g[r + j] * val[r + j]).sum();
                        for j in 0..node.cols {
                            parent_grad[ao + r + j] += val[r + j] * (g[r + j] - dot);
                        }
                    }
                }
                Op::Sqrt(a) => {
                    let ao = self.nodes[*a].off;
                    for i in 0..len {
                        parent_grad[ao + i] += g[i] * 0.5 / val[i];
                    }
                }
                Op::MeanAll(a) => {
                    let an = &self.nodes[*a];
                    let alen = an.rows * an.cols;
                    let scale = g[0] / alen as f64;
                    for i in 0..alen {
                        parent_grad[an.off + i] += scale;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut pos = 0;
                    for p in parts {
                        let pn = &self.nodes[*p];
                        let plen = pn.rows * pn.cols;
                        for i in 0..plen {
                            parent_grad[pn.off + i] += g[pos + i];
                        }
                        pos += plen;
                    }
                }
                Op::ConcatCols(parts) => {
                    let mut col_off = 0;
                    for p in parts {
                        let pn = &self.nodes[*p];
                        for i in 0..pn.rows {
                            for j in 0..pn.cols {
                                parent_grad[pn.off + i * pn.cols + j] +=
                                    g[i * node.cols + col_off + j];
                            }
                        }
                        col_off += pn.cols;
                    }
                }
                Op::SliceCols { src, start } => {
                    let sn = &self.nodes[*src];
                    for i in 0..node.rows {
                        for j in 0..node.cols {
                            parent_grad[sn.off + i * sn.cols + start + j] +=
                                g[i * node.cols + j];
                        }
                    }
                }
            }
        }

        Grads {
            buf: grad,
            offsets: self
                .nodes
                .iter()
                .map(|n| (n.off, n.rows * n.cols))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(
        build: impl Fn(&mut Tape, &[f64]) -> (Vec<Tensor>, Tensor),
        x0: &[f64],
        tol: f64,
    ) {
        let mut tape = Tape::new();
        let (leaves, root) = build(&mut tape, x0);
        let grads = tape.backward(root);
        let analytic: Vec<f64> = leaves.iter().flat_map(|l| grads.get(*l).to_vec()).collect();
        let eval = |x: &[f64]| -> f64 {
            let mut t = Tape::new();
            let (_, r) = build(&mut t, x);
            t.scalar(r)
        };
        let h = 1e-5;
        for i in 0..x0.len() {
            let mut xp = x0.to_vec();
            xp[i] += h;
            let mut xm = x0.to_vec();
            xm[i] -= h;
            let fd = (eval(&xp) - eval(&xm)) / (2.0 * h);
            let rel = (analytic[i] - fd).abs() / analytic[i].abs().max(fd.abs()).max(1e-6);
            assert!(rel < tol, "param {i}: ad {} vs fd {fd}", analytic[i]);
        }
    }

    #[test]
    fn softmax_of_single_element_axis_is_one() {
        let mut tape = Tape::new();
        let x = tape.leaf(1, 1, &[3.7]);
        let s = tape.softmax(x);
        assert_eq!(tape.value(s), &[1.0]);
    }

    #[test]
    fn sigmoid_gradient_at_zero() {
        let mut tape = Tape::new();
        let x = tape.leaf(1, 1, &[0.0]);
        let y = tape.sigmoid(x);
        let g = tape.backward(y);
        assert!((g.get(x)[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn matmul_gradient_matches_finite_differences() {
        // 3x4 * 4x2 against central differences at step 1e-5.
        let x0: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin()).collect();
        fd_check(
            |tape, x| {
                let a = tape.leaf(3, 4, &x[..12]);
                let b = tape.leaf(4, 2, &x[12..]);
                let c = tape.matmul(a, b);
                let sq = tape.mul(c, c);
                let m = tape.mean_all(sq);
                (vec![a, b], m)
            },
            &x0,
            1e-6,
        );
    }

    #[test]
    fn primitive_gradients_match_finite_differences() {
        let x0: Vec<f64> = (0..12).map(|i| 0.3 + (i as f64 * 1.3).cos() * 0.2).collect();
        fd_check(
            |tape, x| {
                let a = tape.leaf(2, 3, &x[..6]);
                let b = tape.leaf(2, 3, &x[6..]);
                let s = tape.sigmoid(a);
                let t = tape.tanh(b);
                let m = tape.mul(s, t);
                let d = tape.sub(m, b);
                let sc = tape.scale(d, 1.7);
                let sh = tape.add_scalar(sc, 0.3);
                let sq = tape.mul(sh, sh);
                let sqr = tape.sqrt(sq);
                let sm = tape.softmax(sqr);
                let weighted = tape.mul(sm, sh);
                let mean = tape.mean_all(weighted);
                (vec![a, b], mean)
            },
            &x0,
            1e-6,
        );
    }

    #[test]
    fn structural_op_gradients_match_finite_differences() {
        let x0: Vec<f64> = (0..18).map(|i| (i as f64 * 0.9).sin() * 0.8).collect();
        fd_check(
            |tape, x| {
                let a = tape.leaf(2, 3, &x[..6]);
                let b = tape.leaf(2, 3, &x[6..12]);
                let row = tape.leaf(1, 6, &x[12..]);
                let cc = tape.concat_cols(&[a, b]);
                let cr = tape.concat_rows(&[cc, cc]);
                let withrow = tape.add_row(cr, row);
                let sl = tape.slice_cols(withrow, 1, 4);
                let nt = tape.matmul_nt(sl, sl);
                let sm = tape.softmax(nt);
                let weighted = tape.matmul(sm, nt);
                let m = tape.mean_all(weighted);
                (vec![a, b, row], m)
            },
            &x0,
            1e-6,
        );
    }

    #[test]
    fn softmax_rows_sum_to_one_and_shift_invariant() {
        let mut tape = Tape::new();
        let x = tape.leaf(2, 4, &[0.3, -1.0, 2.0, 0.1, 5.0, 5.0, 5.0, 5.0]);
        let s = tape.softmax(x);
        let v = tape.value(s);
        for row in v.chunks(4) {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&w| w >= 0.0));
        }
        // Second row has equal logits -> uniform.
        for &w in &v[4..] {
            assert!((w - 0.25).abs() < 1e-12);
        }
        // Adding a constant to all logits changes nothing.
        let shifted: Vec<f64> = tape.value(x).iter().map(|v| v + 123.0).collect();
        let xs = tape.leaf(2, 4, &shifted);
        let ss = tape.softmax(xs);
        let (a, b) = (tape.value(s).to_vec(), tape.value(ss).to_vec());
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_is_deterministic() {
        let x0: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
        let run = || {
            let mut tape = Tape::new();
            let a = tape.leaf(2, 4, &x0);
            let s = tape.softmax(a);
            let m = tape.mul(s, a);
            let r = tape.mean_all(m);
            let g = tape.backward(r);
            g.get(a).to_vec()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b, "identical graphs must give bit-identical gradients");
    }

    #[test]
    #[should_panic(expected = "matmul shape mismatch: 2x3 * 2x3")]
    fn shape_mismatch_names_both_shapes() {
        let mut tape = Tape::new();
        let a = tape.leaf(2, 3, &[0.0; 6]);
        let b = tape.leaf(2, 3, &[0.0; 6]);
        tape.matmul(a, b);
    }

    #[test]
    fn clear_reuses_the_arena() {
        let mut tape = Tape::new();
        let a = tape.leaf(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let _ = tape.mul(a, a);
        tape.clear();
        assert_eq!(tape.num_nodes(), 0);
        let b = tape.leaf(1, 1, &[5.0]);
        assert_eq!(tape.scalar(b), 5.0);
    }
}
