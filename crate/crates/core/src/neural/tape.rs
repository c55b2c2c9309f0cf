//! Reverse-mode differentiation over a flat operation tape.
//!
//! Values are f64 tensors shaped (batch, channels, length) with the length
//! axis contiguous, so convolution inner loops run over long stride-1 rows.
//! Each op records enough to run its backward pass; `backward` walks the
//! tape once in reverse with a fixed accumulation order, so gradients are
//! deterministic. A tape can be differentiated once; a second call is
//! `GraphConsumed`.

use crate::error::{Error, Result};

/// Node handle on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    /// Constant data (inputs, targets); no gradient tracked.
    Input,
    /// Parameter leaf bound to slot `usize`.
    Param(usize),
    /// Same-length conv over (B,Cin,L) with kernel (K,Cin,Cout), zero pad.
    Conv1d { x: Var, w: Var, b: Var },
    Relu { x: Var },
    /// Length-halving max pool; `argmax` stores winning flat indices.
    MaxPool2 { x: Var, argmax: Vec<u32> },
    /// Nearest-neighbor length doubling.
    Upsample2 { x: Var },
    /// Channel concatenation.
    ConcatC { a: Var, b: Var },
    Add { a: Var, b: Var },
    /// Mean over length: (B,C,L) -> (B,C,1).
    GlobalAvgPool { x: Var },
    /// (B,Cin,1) x (Cin,Cout) + bias -> (B,Cout,1).
    Dense { x: Var, w: Var, b: Var },
    Sigmoid { x: Var },
    /// Broadcast gate (B,C,1) over the length axis of x (B,C,L).
    MulGate { x: Var, gate: Var },
    /// Mean squared error against constant target; scalar output.
    MseLoss { pred: Var, target: Var },
}

struct Node {
    op: Op,
    /// (batch, channels, length); length contiguous.
    dims: [usize; 3],
    value: Vec<f64>,
}

/// Recorded forward computation.
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
}

/// Valid output range of a shifted row add: `out[i] += row[i + shift]`
/// requires `0 <= i < l` and `0 <= i + shift < l`.
fn shifted_range(l: usize, shift: i64) -> (usize, usize) {
    let lo = (-shift).max(0) as usize;
    let hi = (l as i64).min(l as i64 - shift).max(0) as usize;
    (lo, hi.max(lo))
}

impl Tape {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            consumed: false,
        }
    }

    fn push(&mut self, op: Op, dims: [usize; 3], value: Vec<f64>) -> Var {
        debug_assert_eq!(dims[0] * dims[1] * dims[2], value.len());
        self.nodes.push(Node { op, dims, value });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn dims(&self, v: Var) -> [usize; 3] {
        self.nodes[v.0].dims
    }

    /// Scalar value of a loss node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    pub fn input(&mut self, dims: [usize; 3], data: Vec<f64>) -> Var {
        self.push(Op::Input, dims, data)
    }

    pub fn param(&mut self, slot: usize, dims: [usize; 3], data: Vec<f64>) -> Var {
        self.push(Op::Param(slot), dims, data)
    }

    pub fn conv1d(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let [bs, cin, l] = self.dims(x);
        let [k, wcin, cout] = self.dims(w);
        if wcin != cin || self.dims(b) != [1, 1, cout] || k % 2 == 0 {
            return Err(Error::ShapeMismatch(format!(
                "conv1d: x (B={bs},Cin={cin},L={l}) vs w (K={k},Cin={wcin},Cout={cout})"
            )));
        }
        let half = (k / 2) as i64;
        let xd = &self.nodes[x.0].value;
        let wd = &self.nodes[w.0].value;
        let bd = &self.nodes[b.0].value;
        let mut out = vec![0.0; bs * cout * l];
        for bi in 0..bs {
            for co in 0..cout {
                out[(bi * cout + co) * l..(bi * cout + co + 1) * l].fill(bd[co]);
            }
            for t in 0..k {
                let shift = t as i64 - half;
                let (lo, hi) = shifted_range(l, shift);
                if lo >= hi {
                    continue;
                }
                for ci in 0..cin {
                    let xrow = &xd[(bi * cin + ci) * l..(bi * cin + ci + 1) * l];
                    let xs = &xrow[(lo as i64 + shift) as usize..(hi as i64 + shift) as usize];
                    for co in 0..cout {
                        let wv = wd[(t * cin + ci) * cout + co];
                        if wv == 0.0 {
                            continue;
                        }
                        let orow =
                            &mut out[(bi * cout + co) * l + lo..(bi * cout + co) * l + hi];
                        for (o, &xv) in orow.iter_mut().zip(xs) {
                            *o += wv * xv;
                        }
                    }
                }
            }
        }
        Ok(self.push(Op::Conv1d { x, w, b }, [bs, cout, l], out))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let dims = self.dims(x);
        let out = self.nodes[x.0].value.iter().map(|&v| v.max(0.0)).collect();
        self.push(Op::Relu { x }, dims, out)
    }

    pub fn max_pool2(&mut self, x: Var) -> Result<Var> {
        let [bs, c, l] = self.dims(x);
        if l % 2 != 0 {
            return Err(Error::ShapeMismatch(format!(
                "max_pool2 needs even length, got {l}"
            )));
        }
        let xd = &self.nodes[x.0].value;
        let lo = l / 2;
        let mut out = vec![0.0; bs * c * lo];
        let mut argmax = vec![0u32; bs * c * lo];
        for row in 0..bs * c {
            let src = &xd[row * l..(row + 1) * l];
            for i in 0..lo {
                let (a, b) = (src[2 * i], src[2 * i + 1]);
                // first element wins ties
                let (v, off) = if b > a { (b, 2 * i + 1) } else { (a, 2 * i) };
                out[row * lo + i] = v;
                argmax[row * lo + i] = (row * l + off) as u32;
            }
        }
        Ok(self.push(Op::MaxPool2 { x, argmax }, [bs, c, lo], out))
    }

    pub fn upsample2(&mut self, x: Var) -> Var {
        let [bs, c, l] = self.dims(x);
        let xd = &self.nodes[x.0].value;
        let mut out = vec![0.0; bs * c * 2 * l];
        for row in 0..bs * c {
            let src = &xd[row * l..(row + 1) * l];
            let dst = &mut out[row * 2 * l..(row + 1) * 2 * l];
            for (i, &v) in src.iter().enumerate() {
                dst[2 * i] = v;
                dst[2 * i + 1] = v;
            }
        }
        self.push(Op::Upsample2 { x }, [bs, c, 2 * l], out)
    }

    pub fn concat_c(&mut self, a: Var, b: Var) -> Result<Var> {
        let [bs, ca, l] = self.dims(a);
        let [bs2, cb, l2] = self.dims(b);
        if bs != bs2 || l != l2 {
            return Err(Error::ShapeMismatch(format!(
                "concat_c: ({bs},{ca},{l}) vs ({bs2},{cb},{l2})"
            )));
        }
        let ad = &self.nodes[a.0].value;
        let bd = &self.nodes[b.0].value;
        let c = ca + cb;
        let mut out = vec![0.0; bs * c * l];
        for bi in 0..bs {
            out[bi * c * l..bi * c * l + ca * l]
                .copy_from_slice(&ad[bi * ca * l..(bi + 1) * ca * l]);
            out[bi * c * l + ca * l..(bi + 1) * c * l]
                .copy_from_slice(&bd[bi * cb * l..(bi + 1) * cb * l]);
        }
        Ok(self.push(Op::ConcatC { a, b }, [bs, c, l], out))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.dims(a) != self.dims(b) {
            return Err(Error::ShapeMismatch("add: dims differ".into()));
        }
        let out = self.nodes[a.0]
            .value
            .iter()
            .zip(&self.nodes[b.0].value)
            .map(|(x, y)| x + y)
            .collect();
        let dims = self.dims(a);
        Ok(self.push(Op::Add { a, b }, dims, out))
    }

    pub fn global_avg_pool(&mut self, x: Var) -> Var {
        let [bs, c, l] = self.dims(x);
        let xd = &self.nodes[x.0].value;
        let out = (0..bs * c)
            .map(|row| xd[row * l..(row + 1) * l].iter().sum::<f64>() / l as f64)
            .collect();
        self.push(Op::GlobalAvgPool { x }, [bs, c, 1], out)
    }

    pub fn dense(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let [bs, cin, one] = self.dims(x);
        let [wcin, cout, wone] = self.dims(w);
        if one != 1 || wone != 1 || wcin != cin || self.dims(b) != [1, 1, cout] {
            return Err(Error::ShapeMismatch(format!(
                "dense: x ({bs},{cin},{one}) vs w ({wcin},{cout},{wone})"
            )));
        }
        let xd = &self.nodes[x.0].value;
        let wd = &self.nodes[w.0].value;
        let bd = &self.nodes[b.0].value;
        let mut out = vec![0.0; bs * cout];
        for bi in 0..bs {
            let orow = &mut out[bi * cout..(bi + 1) * cout];
            orow.copy_from_slice(bd);
            for ci in 0..cin {
                let xv = xd[bi * cin + ci];
                let wrow = &wd[ci * cout..(ci + 1) * cout];
                for (o, &wv) in orow.iter_mut().zip(wrow) {
                    *o += xv * wv;
                }
            }
        }
        Ok(self.push(Op::Dense { x, w, b }, [bs, cout, 1], out))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let dims = self.dims(x);
        let out = self.nodes[x.0]
            .value
            .iter()
            .map(|&v| 1.0 / (1.0 + (-v).exp()))
            .collect();
        self.push(Op::Sigmoid { x }, dims, out)
    }

    pub fn mul_gate(&mut self, x: Var, gate: Var) -> Result<Var> {
        let [bs, c, l] = self.dims(x);
        if self.dims(gate) != [bs, c, 1] {
            return Err(Error::ShapeMismatch("mul_gate: gate must be (B,C,1)".into()));
        }
        let xd = &self.nodes[x.0].value;
        let gd = &self.nodes[gate.0].value;
        let mut out = vec![0.0; bs * c * l];
        for row in 0..bs * c {
            let gv = gd[row];
            for (o, &xv) in out[row * l..(row + 1) * l]
                .iter_mut()
                .zip(&xd[row * l..(row + 1) * l])
            {
                *o = gv * xv;
            }
        }
        Ok(self.push(Op::MulGate { x, gate }, [bs, c, l], out))
    }

    pub fn mse_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        if self.dims(pred) != self.dims(target) {
            return Err(Error::ShapeMismatch("mse_loss: dims differ".into()));
        }
        let p = &self.nodes[pred.0].value;
        let t = &self.nodes[target.0].value;
        let n = p.len() as f64;
        let loss = p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
        Ok(self.push(Op::MseLoss { pred, target }, [1, 1, 1], vec![loss]))
    }

    /// Gradients of `loss` with respect to every parameter slot, indexed by
    /// slot. Consumes the tape's differentiability.
    pub fn backward(&mut self, loss: Var, n_slots: usize) -> Result<Vec<Vec<f64>>> {
        if self.consumed {
            return Err(Error::GraphConsumed);
        }
        self.consumed = true;

        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        let mut out = vec![Vec::new(); n_slots];

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            // Gradients live in `grads`, values in `self.nodes`; arms only
            // read node values, so the borrows never conflict.
            macro_rules! grad_buf {
                ($v:expr) => {{
                    let [d0, d1, d2] = self.nodes[$v.0].dims;
                    grads[$v.0].get_or_insert_with(|| vec![0.0; d0 * d1 * d2])
                }};
            }
            match &self.nodes[idx].op {
                Op::Input => {}
                Op::Param(slot) => {
                    let slot = *slot;
                    if out[slot].is_empty() {
                        out[slot] = g;
                    } else {
                        for (a, b) in out[slot].iter_mut().zip(&g) {
                            *a += b;
                        }
                    }
                }
                Op::Conv1d { x, w, b } => {
                    let (x, w, b) = (*x, *w, *b);
                    let [bs, cin, l] = self.dims(x);
                    let [k, _, cout] = self.dims(w);
                    let half = (k / 2) as i64;
                    let xd = &self.nodes[x.0].value;
                    let wd = &self.nodes[w.0].value;
                    {
                        let gb = grad_buf!(b);
                        for bi in 0..bs {
                            for co in 0..cout {
                                gb[co] += g[(bi * cout + co) * l..(bi * cout + co + 1) * l]
                                    .iter()
                                    .sum::<f64>();
                            }
                        }
                    }
                    {
                        // dw[t,ci,co] = sum_{b,i} x[b,ci,i+t-half] g[b,co,i]
                        let gw = grad_buf!(w);
                        for bi in 0..bs {
                            for t in 0..k {
                                let shift = t as i64 - half;
                                let (lo, hi) = shifted_range(l, shift);
                                if lo >= hi {
                                    continue;
                                }
                                for ci in 0..cin {
                                    let xrow = &xd[(bi * cin + ci) * l..(bi * cin + ci + 1) * l];
                                    let xs = &xrow[(lo as i64 + shift) as usize
                                        ..(hi as i64 + shift) as usize];
                                    for co in 0..cout {
                                        let grow = &g[(bi * cout + co) * l + lo
                                            ..(bi * cout + co) * l + hi];
                                        let mut acc = 0.0;
                                        for (&gv, &xv) in grow.iter().zip(xs) {
                                            acc += gv * xv;
                                        }
                                        gw[(t * cin + ci) * cout + co] += acc;
                                    }
                                }
                            }
                        }
                    }
                    {
                        // dx[b,ci,j] += sum_{t,co} w[t,ci,co] g[b,co,j-t+half]
                        let gx = grad_buf!(x);
                        for bi in 0..bs {
                            for t in 0..k {
                                let shift = t as i64 - half;
                                let (lo, hi) = shifted_range(l, shift);
                                if lo >= hi {
                                    continue;
                                }
                                for ci in 0..cin {
                                    let xlo = (lo as i64 + shift) as usize;
                                    let xhi = (hi as i64 + shift) as usize;
                                    let xrow_g = &mut gx
                                        [(bi * cin + ci) * l + xlo..(bi * cin + ci) * l + xhi];
                                    for co in 0..cout {
                                        let wv = wd[(t * cin + ci) * cout + co];
                                        if wv == 0.0 {
                                            continue;
                                        }
                                        let grow = &g[(bi * cout + co) * l + lo
                                            ..(bi * cout + co) * l + hi];
                                        for (xg, &gv) in xrow_g.iter_mut().zip(grow) {
                                            *xg += wv * gv;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                Op::Relu { x } => {
                    let x = *x;
                    let gx = grad_buf!(x);
                    for (i, (xv, gv)) in self.nodes[x.0].value.iter().zip(&g).enumerate() {
                        if *xv > 0.0 {
                            gx[i] += gv;
                        }
                    }
                }
                Op::MaxPool2 { x, argmax } => {
                    let gx = grad_buf!(*x);
                    for (o, &a) in argmax.iter().enumerate() {
                        gx[a as usize] += g[o];
                    }
                }
                Op::Upsample2 { x } => {
                    let x = *x;
                    let [bs, c, l] = self.dims(x);
                    let gx = grad_buf!(x);
                    for row in 0..bs * c {
                        let grow = &g[row * 2 * l..(row + 1) * 2 * l];
                        let dst = &mut gx[row * l..(row + 1) * l];
                        for (i, d) in dst.iter_mut().enumerate() {
                            *d += grow[2 * i] + grow[2 * i + 1];
                        }
                    }
                }
                Op::ConcatC { a, b } => {
                    let (a, b) = (*a, *b);
                    let [bs, ca, l] = self.dims(a);
                    let cb = self.dims(b)[1];
                    let c = ca + cb;
                    {
                        let ga = grad_buf!(a);
                        for bi in 0..bs {
                            for (d, s) in ga[bi * ca * l..(bi + 1) * ca * l]
                                .iter_mut()
                                .zip(&g[bi * c * l..bi * c * l + ca * l])
                            {
                                *d += s;
                            }
                        }
                    }
                    {
                        let gb = grad_buf!(b);
                        for bi in 0..bs {
                            for (d, s) in gb[bi * cb * l..(bi + 1) * cb * l]
                                .iter_mut()
                                .zip(&g[bi * c * l + ca * l..(bi + 1) * c * l])
                            {
                                *d += s;
                            }
                        }
                    }
                }
                Op::Add { a, b } => {
                    let (a, b) = (*a, *b);
                    {
                        let ga = grad_buf!(a);
                        for (x, y) in ga.iter_mut().zip(&g) {
                            *x += y;
                        }
                    }
                    {
                        let gb = grad_buf!(b);
                        for (x, y) in gb.iter_mut().zip(&g) {
                            *x += y;
                        }
                    }
                }
                Op::GlobalAvgPool { x } => {
                    let x = *x;
                    let [bs, c, l] = self.dims(x);
                    let gx = grad_buf!(x);
                    let inv = 1.0 / l as f64;
                    for row in 0..bs * c {
                        let gv = g[row] * inv;
                        for d in gx[row * l..(row + 1) * l].iter_mut() {
                            *d += gv;
                        }
                    }
                }
                Op::Dense { x, w, b } => {
                    let (x, w, b) = (*x, *w, *b);
                    let [bs, cin, _] = self.dims(x);
                    let cout = self.dims(w)[1];
                    let xd = &self.nodes[x.0].value;
                    let wd = &self.nodes[w.0].value;
                    {
                        let gb = grad_buf!(b);
                        for bi in 0..bs {
                            for co in 0..cout {
                                gb[co] += g[bi * cout + co];
                            }
                        }
                    }
                    {
                        let gw = grad_buf!(w);
                        for bi in 0..bs {
                            for ci in 0..cin {
                                let xv = xd[bi * cin + ci];
                                for co in 0..cout {
                                    gw[ci * cout + co] += xv * g[bi * cout + co];
                                }
                            }
                        }
                    }
                    {
                        let gx = grad_buf!(x);
                        for bi in 0..bs {
                            for ci in 0..cin {
                                let mut acc = 0.0;
                                for co in 0..cout {
                                    acc += wd[ci * cout + co] * g[bi * cout + co];
                                }
                                gx[bi * cin + ci] += acc;
                            }
                        }
                    }
                }
                Op::Sigmoid { x } => {
                    let x = *x;
                    let gx = grad_buf!(x);
                    for (i, (s, gv)) in self.nodes[idx].value.iter().zip(&g).enumerate() {
                        gx[i] += gv * s * (1.0 - s);
                    }
                }
                Op::MulGate { x, gate } => {
                    let (x, gate) = (*x, *gate);
                    let [bs, c, l] = self.dims(x);
                    let xd = &self.nodes[x.0].value;
                    let gd = &self.nodes[gate.0].value;
                    {
                        let gx = grad_buf!(x);
                        for row in 0..bs * c {
                            let gv = gd[row];
                            for (d, s) in gx[row * l..(row + 1) * l]
                                .iter_mut()
                                .zip(&g[row * l..(row + 1) * l])
                            {
                                *d += gv * s;
                            }
                        }
                    }
                    {
                        let gg = grad_buf!(gate);
                        for row in 0..bs * c {
                            let mut acc = 0.0;
                            for (s, xv) in g[row * l..(row + 1) * l]
                                .iter()
                                .zip(&xd[row * l..(row + 1) * l])
                            {
                                acc += s * xv;
                            }
                            gg[row] += acc;
                        }
                    }
                }
                Op::MseLoss { pred, target } => {
                    let (pred, target) = (*pred, *target);
                    let n = self.nodes[pred.0].value.len() as f64;
                    let scale = 2.0 * g[0] / n;
                    let gp = grad_buf!(pred);
                    let pd = &self.nodes[pred.0].value;
                    let td = &self.nodes[target.0].value;
                    for (i, (p, t)) in pd.iter().zip(td).enumerate() {
                        gp[i] += scale * (p - t);
                    }
                }
            }
        }

        // empty slot gradients become explicit zeros
        for (slot, g) in out.iter_mut().enumerate() {
            if g.is_empty() {
                let n = self
                    .nodes
                    .iter()
                    .find_map(|n| match n.op {
                        Op::Param(s) if s == slot => Some(n.value.len()),
                        _ => None,
                    })
                    .unwrap_or(0);
                *g = vec![0.0; n];
            }
        }
        Ok(out)
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

/// Standalone mean squared error over equally shaped slices.
pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::ShapeMismatch(format!(
            "mse: {} vs {} elements",
            pred.len(),
            target.len()
        )));
    }
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}
