//! Attention over memory types and the dueling head.

use super::lstm::{matvec_add, matvec_t_add, outer_add};

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Dense affine map with weights stored `rows × cols`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LinearRef<'a> {
    pub w: &'a [f64],
    pub b: &'a [f64],
}

impl LinearRef<'_> {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.b.to_vec();
        matvec_add(self.w, x, &mut y);
        y
    }
}

/// Accumulates parameter gradients of `y = W x + b` and returns `dx`.
pub(crate) fn linear_backward(w: &[f64], x: &[f64], dy: &[f64], gw: &mut [f64], gb: &mut [f64]) -> Vec<f64> {
    outer_add(gw, dy, x);
    for (g, d) in gb.iter_mut().zip(dy) {
        *g += d;
    }
    let mut dx = vec![0.0; x.len()];
    matvec_t_add(w, dy, &mut dx);
    dx
}

#[derive(Debug, Clone)]
pub(crate) struct AttnTrace {
    pub h: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub k: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
}

/// `A = softmax(Q Kᵀ)` row-wise, `v_mem = Σ_i (A V)_i`.
pub(crate) fn attention_forward(h: &[Vec<f64>], q: LinearRef, k: LinearRef, v: LinearRef) -> (Vec<f64>, AttnTrace) {
    let qs: Vec<Vec<f64>> = h.iter().map(|x| q.apply(x)).collect();
    let ks: Vec<Vec<f64>> = h.iter().map(|x| k.apply(x)).collect();
    let vs: Vec<Vec<f64>> = h.iter().map(|x| v.apply(x)).collect();
    let n = h.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = qs[i].iter().zip(&ks[j]).map(|(x, y)| x * y).sum();
        }
        softmax_in_place(&mut a[i]);
    }
    let dim = vs.first().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for j in 0..n {
        let col: f64 = (0..n).map(|i| a[i][j]).sum();
        for (o, x) in out.iter_mut().zip(&vs[j]) {
            *o += col * x;
        }
    }
    let trace = AttnTrace {
        h: h.to_vec(),
        q: qs,
        k: ks,
        v: vs,
        a,
    };
    (out, trace)
}

pub(crate) struct AttnGrads<'a> {
    pub q: (&'a [f64], &'a mut [f64], &'a mut [f64]),
    pub k: (&'a [f64], &'a mut [f64], &'a mut [f64]),
    pub v: (&'a [f64], &'a mut [f64], &'a mut [f64]),
}

/// Returns `dH` given `d v_mem`; each map is (weights, grad weights, grad bias).
pub(crate) fn attention_backward(tr: &AttnTrace, dout: &[f64], g: AttnGrads) -> Vec<Vec<f64>> {
    let n = tr.h.len();
    let mut da = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            da[i][j] = dout.iter().zip(&tr.v[j]).map(|(x, y)| x * y).sum();
        }
    }
    let mut ds = vec![vec![0.0; n]; n];
    for i in 0..n {
        let dot: f64 = (0..n).map(|j| tr.a[i][j] * da[i][j]).sum();
        for j in 0..n {
            ds[i][j] = tr.a[i][j] * (da[i][j] - dot);
        }
    }
    let dim = dout.len();
    let mut dh = vec![vec![0.0; tr.h[0].len()]; n];
    for i in 0..n {
        let mut dq = vec![0.0; dim];
        let mut dk = vec![0.0; dim];
        for j in 0..n {
            for d in 0..dim {
                dq[d] += ds[i][j] * tr.k[j][d];
                dk[d] += ds[j][i] * tr.q[j][d];
            }
        }
        let col: f64 = (0..n).map(|r| tr.a[r][i]).sum();
        let dv: Vec<f64> = dout.iter().map(|x| col * x).collect();
        let x = &tr.h[i];
        let parts = [
            linear_backward(g.q.0, x, &dq, &mut *g.q.1, &mut *g.q.2),
            linear_backward(g.k.0, x, &dk, &mut *g.k.1, &mut *g.k.2),
            linear_backward(g.v.0, x, &dv, &mut *g.v.1, &mut *g.v.2),
        ];
        for p in parts {
            for (a, b) in dh[i].iter_mut().zip(p) {
                *a += b;
            }
        }
    }
    dh
}

/// `Q(a) = V + adv(a) − mean(adv)`.
pub(crate) fn dueling(value: f64, adv: &[f64]) -> Vec<f64> {
    let mean = adv.iter().sum::<f64>() / adv.len() as f64;
    adv.iter().map(|a| value + a - mean).collect()
}

/// Gradients of the dueling combination: `(d value, d adv)`.
pub(crate) fn dueling_backward(dq: &[f64]) -> (f64, Vec<f64>) {
    let total: f64 = dq.iter().sum();
    let mean = total / dq.len() as f64;
    (total, dq.iter().map(|d| d - mean).collect())
}
