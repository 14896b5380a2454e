//! Recurrent core of an LSTM cell with gate order (input, forget, cell, output).
//!
//! Input projections `W_ih x_t` are supplied precomputed, one `4h` row per
//! step, so callers can assemble them however they like.

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `tanh` through a single `exp`; the libm version is about three times slower.
pub(crate) fn tanh(x: f64) -> f64 {
    let a = x.abs();
    if a < 1e-3 {
        let x2 = x * x;
        x * (1.0 - x2 * (1.0 / 3.0 - x2 * (2.0 / 15.0)))
    } else if a > 20.0 {
        x.signum()
    } else {
        1.0 - 2.0 / ((2.0 * x).exp() + 1.0)
    }
}

/// Activated gates, cell states and hidden states for every step.
#[derive(Debug, Clone, Default)]
pub(crate) struct LstmTrace {
    pub steps: usize,
    pub gates: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

/// Dot product with independent partial sums so the loop vectorizes.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

pub(crate) fn matvec_add(w: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += dot(row, x);
    }
}

/// `out += Wᵀ y` for `W` with `y.len()` rows.
pub(crate) fn matvec_t_add(w: &[f64], y: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (&yi, row) in y.iter().zip(w.chunks_exact(cols)) {
        if yi != 0.0 {
            for (o, a) in out.iter_mut().zip(row) {
                *o += yi * a;
            }
        }
    }
}

/// `g += y xᵀ`.
pub(crate) fn outer_add(g: &mut [f64], y: &[f64], x: &[f64]) {
    let cols = x.len();
    for (&yi, row) in y.iter().zip(g.chunks_exact_mut(cols)) {
        if yi != 0.0 {
            for (gi, xi) in row.iter_mut().zip(x) {
                *gi += yi * xi;
            }
        }
    }
}

/// Runs the cell over `xproj` (`T × 4h`) from zero state and returns the
/// final hidden state.
pub(crate) fn forward(w_hh: &[f64], bias: &[f64], hidden: usize, xproj: &[f64], mut trace: Option<&mut LstmTrace>) -> Vec<f64> {
    let g4 = 4 * hidden;
    let steps = xproj.len() / g4;
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    let mut z = vec![0.0; g4];
    let mut tc = vec![0.0; hidden];
    if let Some(tr) = trace.as_deref_mut() {
        tr.steps = steps;
        tr.gates = Vec::with_capacity(steps * g4);
        tr.c = Vec::with_capacity(steps * hidden);
        tr.tanh_c = Vec::with_capacity(steps * hidden);
        tr.h = Vec::with_capacity(steps * hidden);
    }
    for t in 0..steps {
        for k in 0..g4 {
            z[k] = xproj[t * g4 + k] + bias[k];
        }
        matvec_add(w_hh, &h, &mut z);
        for k in 0..hidden {
            let i = sigmoid(z[k]);
            let f = sigmoid(z[hidden + k]);
            let g = tanh(z[2 * hidden + k]);
            let o = sigmoid(z[3 * hidden + k]);
            c[k] = f * c[k] + i * g;
            tc[k] = tanh(c[k]);
            h[k] = o * tc[k];
            z[k] = i;
            z[hidden + k] = f;
            z[2 * hidden + k] = g;
            z[3 * hidden + k] = o;
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.gates.extend_from_slice(&z);
            tr.c.extend_from_slice(&c);
            tr.tanh_c.extend_from_slice(&tc);
            tr.h.extend_from_slice(&h);
        }
    }
    h
}

/// Back-propagates `dh_final` through time. Accumulates into `g_w_hh` and
/// `g_bias` and returns the gradient of each step's input projection.
pub(crate) fn backward(
    w_hh: &[f64],
    hidden: usize,
    trace: &LstmTrace,
    dh_final: &[f64],
    g_w_hh: &mut [f64],
    g_bias: &mut [f64],
) -> Vec<f64> {
    let g4 = 4 * hidden;
    let steps = trace.steps;
    let mut dxproj = vec![0.0; steps * g4];
    let mut dh = dh_final.to_vec();
    let mut dc = vec![0.0; hidden];
    let zeros = vec![0.0; hidden];
    for t in (0..steps).rev() {
        let gates = &trace.gates[t * g4..(t + 1) * g4];
        let tanh_c = &trace.tanh_c[t * hidden..(t + 1) * hidden];
        let (c_prev, h_prev) = if t == 0 {
            (&zeros[..], &zeros[..])
        } else {
            (&trace.c[(t - 1) * hidden..t * hidden], &trace.h[(t - 1) * hidden..t * hidden])
        };
        let dz = &mut dxproj[t * g4..(t + 1) * g4];
        for k in 0..hidden {
            let (i, f, g, o) = (gates[k], gates[hidden + k], gates[2 * hidden + k], gates[3 * hidden + k]);
            let tc = tanh_c[k];
            let d_o = dh[k] * tc;
            let dck = dc[k] + dh[k] * o * (1.0 - tc * tc);
            dz[k] = dck * g * i * (1.0 - i);
            dz[hidden + k] = dck * c_prev[k] * f * (1.0 - f);
            dz[2 * hidden + k] = dck * i * (1.0 - g * g);
            dz[3 * hidden + k] = d_o * o * (1.0 - o);
            dc[k] = dck * f;
        }
        for (gb, d) in g_bias.iter_mut().zip(dz.iter()) {
            *gb += d;
        }
        outer_add(g_w_hh, dz, h_prev);
        dh.iter_mut().for_each(|v| *v = 0.0);
        matvec_t_add(w_hh, dz, &mut dh);
    }
    dxproj
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sequence_gives_zero_state() {
        let h = forward(&[0.5; 16 * 4], &[0.1; 16], 4, &[], None);
        assert_eq!(h, vec![0.0; 4]);
    }

    #[test]
    fn single_step_matches_hand_cell() {
        // hidden = 1: gates are scalars
        let xproj = [0.3, -0.2, 0.5, 0.1];
        let bias = [0.1, 0.0, -0.1, 0.2];
        let h = forward(&[9.0; 4], &bias, 1, &xproj, None);
        let i = sigmoid(0.4);
        let g = 0.4f64.tanh();
        let o = sigmoid(0.3);
        let expected = o * (i * g).tanh();
        assert!((h[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn tanh_matches_libm() {
        for i in -40_000..=40_000 {
            let x = i as f64 * 7.3e-4;
            let (a, b) = (tanh(x), x.tanh());
            assert!((a - b).abs() <= 1e-15, "{x}: {a} vs {b}");
        }
    }

    #[test]
    fn matvec_helpers() {
        let w = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; // 2x3
        let mut out = [0.0; 2];
        matvec_add(&w, &[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, [-2.0, -2.0]);
        let mut back = [0.0; 3];
        matvec_t_add(&w, &[1.0, 1.0], &mut back);
        assert_eq!(back, [5.0, 7.0, 9.0]);
        let mut g = [0.0; 6];
        outer_add(&mut g, &[1.0, 2.0], &[1.0, 0.0, 3.0]);
        assert_eq!(g, [1.0, 0.0, 3.0, 2.0, 0.0, 6.0]);
    }
}
