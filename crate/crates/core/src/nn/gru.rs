//! Gated recurrent unit built from tape primitives, so backprop through time
//! falls out of the tape's reverse sweep.
//!
//! Gate equations: z = sig(Wz x + Uz h + bz), r = sig(Wr x + Ur h + br),
//! hcand = tanh(Wh x + Uh (r . h) + bh), h' = (1 - z) . h + z . hcand.
//! The input-side weights of all three gates are fused into one [3H, D]
//! matrix (rows ordered z, r, h), the recurrent weights into [2H, H] for z/r
//! plus a separate [H, H] for the candidate path because the reset product
//! applies before it.

use crate::error::Result;
use crate::nn::tape::{NodeId, Tape};
use crate::scalar::Scalar;

/// Tape nodes of one direction's weights.
#[derive(Debug, Clone, Copy)]
pub struct GruGateIds {
    /// [3H, D] input weights, gate order z, r, h.
    pub w_x: NodeId,
    /// [3H] gate biases.
    pub b: NodeId,
    /// [2H, H] recurrent weights for z and r.
    pub u_zr: NodeId,
    /// [H, H] recurrent weights for the candidate.
    pub u_h: NodeId,
}

/// One GRU step: x_t [B, D], h_prev [B, H] -> h_next [B, H].
pub fn gru_cell<T: Scalar>(
    tape: &mut Tape<T>,
    x_t: NodeId,
    h_prev: NodeId,
    w: &GruGateIds,
    hidden: usize,
) -> Result<NodeId> {
    let xg = tape.dense(x_t, w.w_x, w.b)?; // [B, 3H]
    let hg = tape.matmul(h_prev, w.u_zr)?; // [B, 2H]

    let xz = tape.slice_cols(xg, 0, hidden)?;
    let hz = tape.slice_cols(hg, 0, hidden)?;
    let z_pre = tape.add(xz, hz)?;
    let z = tape.sigmoid(z_pre);

    let xr = tape.slice_cols(xg, hidden, hidden)?;
    let hr = tape.slice_cols(hg, hidden, hidden)?;
    let r_pre = tape.add(xr, hr)?;
    let r = tape.sigmoid(r_pre);

    let rh = tape.mul(r, h_prev)?;
    let hh_rec = tape.matmul(rh, w.u_h)?;
    let xh = tape.slice_cols(xg, 2 * hidden, hidden)?;
    let cand_pre = tape.add(xh, hh_rec)?;
    let cand = tape.tanh(cand_pre);

    let keep = tape.one_minus(z);
    let kept = tape.mul(keep, h_prev)?;
    let new = tape.mul(z, cand)?;
    tape.add(kept, new)
}

/// Run a direction over per-timestep inputs (each [B, D]), starting from a
/// zero state. Returns hidden states aligned with the *original* time order;
/// `reverse` walks the inputs back to front.
pub fn gru_sequence<T: Scalar>(
    tape: &mut Tape<T>,
    xs: &[NodeId],
    w: &GruGateIds,
    hidden: usize,
    reverse: bool,
) -> Result<Vec<NodeId>> {
    let batch = tape.value(xs[0]).shape()[0];
    let mut h = tape.leaf(crate::nn::tensor::Tensor::zeros(&[batch, hidden]), false);
    let mut out = vec![h; xs.len()];
    let order: Vec<usize> = if reverse {
        (0..xs.len()).rev().collect()
    } else {
        (0..xs.len()).collect()
    };
    for t in order {
        h = gru_cell(tape, xs[t], h, w, hidden)?;
        out[t] = h;
    }
    Ok(out)
}

/// Forward and backward passes concatenated per timestep:
/// inputs [B, D] x T -> outputs [B, 2H] x T.
pub fn bidirectional_gru<T: Scalar>(
    tape: &mut Tape<T>,
    xs: &[NodeId],
    fwd: &GruGateIds,
    bwd: &GruGateIds,
    hidden: usize,
) -> Result<Vec<NodeId>> {
    let f = gru_sequence(tape, xs, fwd, hidden, false)?;
    let b = gru_sequence(tape, xs, bwd, hidden, true)?;
    f.iter()
        .zip(&b)
        .map(|(&hf, &hb)| tape.concat_features(&[hf, hb]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::tensor::Tensor;

    fn zero_weights(tape: &mut Tape<f64>, d: usize, h: usize) -> GruGateIds {
        GruGateIds {
            w_x: tape.leaf(Tensor::zeros(&[3 * h, d]), false),
            b: tape.leaf(Tensor::zeros(&[3 * h]), false),
            u_zr: tape.leaf(Tensor::zeros(&[2 * h, h]), false),
            u_h: tape.leaf(Tensor::zeros(&[h, h]), false),
        }
    }

    // All-zero weights, h_prev = 1: z = sig(0) = 0.5, cand = tanh(0) = 0,
    // h' = 0.5 * 1 + 0.5 * 0 = 0.5.
    #[test]
    fn zero_weight_cell_halves_state() {
        let mut tape = Tape::<f64>::new();
        let w = zero_weights(&mut tape, 2, 1);
        let x = tape.leaf(Tensor::from_vec(&[1, 2], vec![0.3, -0.7]).unwrap(), false);
        let h = tape.leaf(Tensor::from_vec(&[1, 1], vec![1.0]).unwrap(), false);
        let h2 = gru_cell(&mut tape, x, h, &w, 1).unwrap();
        assert!((tape.value(h2).data()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_everything_stays_zero() {
        let mut tape = Tape::<f64>::new();
        let w = zero_weights(&mut tape, 3, 4);
        let x = tape.leaf(Tensor::zeros(&[2, 3]), false);
        let h = tape.leaf(Tensor::zeros(&[2, 4]), false);
        let h2 = gru_cell(&mut tape, x, h, &w, 4).unwrap();
        assert!(tape.value(h2).data().iter().all(|&v| v == 0.0));
    }

    fn random_weights(tape: &mut Tape<f64>, r: &mut crate::rng::ChaCha8Rng, d: usize, h: usize) -> GruGateIds {
        use rand::Rng;
        let mut t = |shape: &[usize]| {
            let n: usize = shape.iter().product();
            let data = (0..n).map(|_| r.gen_range(-0.7..0.7)).collect();
            Tensor::from_vec(shape, data).unwrap()
        };
        let (w_x, b, u_zr, u_h) = (t(&[3 * h, d]), t(&[3 * h]), t(&[2 * h, h]), t(&[h, h]));
        GruGateIds {
            w_x: tape.leaf(w_x, false),
            b: tape.leaf(b, false),
            u_zr: tape.leaf(u_zr, false),
            u_h: tape.leaf(u_h, false),
        }
    }

    // Scalar-arithmetic oracle for a single unrolled direction.
    fn gru_oracle(xs: &[Vec<f64>], w_x: &[f64], b: &[f64], u_zr: &[f64], u_h: &[f64], d: usize, h: usize) -> Vec<Vec<f64>> {
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut state = vec![0.0; h];
        let mut out = Vec::new();
        for x in xs {
            let gate = |g: usize, j: usize| -> f64 {
                let row = g * h + j;
                let mut acc = b[row];
                for i in 0..d {
                    acc += w_x[row * d + i] * x[i];
                }
                acc
            };
            let mut z = vec![0.0; h];
            let mut r = vec![0.0; h];
            for j in 0..h {
                let mut zj = gate(0, j);
                let mut rj = gate(1, j);
                for i in 0..h {
                    zj += u_zr[j * h + i] * state[i];
                    rj += u_zr[(h + j) * h + i] * state[i];
                }
                z[j] = sig(zj);
                r[j] = sig(rj);
            }
            let mut next = vec![0.0; h];
            for j in 0..h {
                let mut cj = gate(2, j);
                for i in 0..h {
                    cj += u_h[j * h + i] * (r[i] * state[i]);
                }
                let c = cj.tanh();
                next[j] = (1.0 - z[j]) * state[j] + z[j] * c;
            }
            state = next;
            out.push(state.clone());
        }
        out
    }

    #[test]
    fn bidirectional_matches_unrolled_oracle() {
        use rand::Rng;
        let mut r = crate::rng::seeded(21);
        let (t_len, d, h) = (5, 3, 4);
        let mut tape = Tape::<f64>::new();
        let fwd = random_weights(&mut tape, &mut r, d, h);
        let bwd = random_weights(&mut tape, &mut r, d, h);
        let xs_data: Vec<Vec<f64>> = (0..t_len).map(|_| (0..d).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let xs: Vec<NodeId> = xs_data
            .iter()
            .map(|v| tape.leaf(Tensor::from_vec(&[1, d], v.clone()).unwrap(), false))
            .collect();
        let out = bidirectional_gru(&mut tape, &xs, &fwd, &bwd, h).unwrap();

        let grab = |tape: &Tape<f64>, id: NodeId| tape.value(id).data().to_vec();
        let fo = gru_oracle(
            &xs_data,
            grab(&tape, fwd.w_x).as_slice(),
            grab(&tape, fwd.b).as_slice(),
            grab(&tape, fwd.u_zr).as_slice(),
            grab(&tape, fwd.u_h).as_slice(),
            d,
            h,
        );
        let rev: Vec<Vec<f64>> = xs_data.iter().rev().cloned().collect();
        let bo_rev = gru_oracle(
            &rev,
            grab(&tape, bwd.w_x).as_slice(),
            grab(&tape, bwd.b).as_slice(),
            grab(&tape, bwd.u_zr).as_slice(),
            grab(&tape, bwd.u_h).as_slice(),
            d,
            h,
        );
        for t in 0..t_len {
            let got = grab(&tape, out[t]);
            for j in 0..h {
                assert!((got[j] - fo[t][j]).abs() < 1e-12, "fwd t={t} j={j}");
                assert!((got[h + j] - bo_rev[t_len - 1 - t][j]).abs() < 1e-12, "bwd t={t} j={j}");
            }
        }
    }

    // Reversing the input sequence swaps the forward/backward halves of the
    // (reversed) output when both directions share weights.
    #[test]
    fn reversal_symmetry_with_shared_weights() {
        use rand::Rng;
        let mut r = crate::rng::seeded(22);
        let (t_len, d, h) = (4, 2, 3);
        let mut tape = Tape::<f64>::new();
        let w = random_weights(&mut tape, &mut r, d, h);
        let xs_data: Vec<Vec<f64>> = (0..t_len).map(|_| (0..d).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let fwd_ids: Vec<NodeId> = xs_data
            .iter()
            .map(|v| tape.leaf(Tensor::from_vec(&[1, d], v.clone()).unwrap(), false))
            .collect();
        let rev_ids: Vec<NodeId> = fwd_ids.iter().rev().copied().collect();
        let out_f = bidirectional_gru(&mut tape, &fwd_ids, &w, &w, h).unwrap();
        let out_r = bidirectional_gru(&mut tape, &rev_ids, &w, &w, h).unwrap();
        for t in 0..t_len {
            let a = tape.value(out_f[t]).data().to_vec();
            let b = tape.value(out_r[t_len - 1 - t]).data().to_vec();
            for j in 0..h {
                assert!((a[j] - b[h + j]).abs() < 1e-12);
                assert!((a[h + j] - b[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_step_is_concat_of_both_cells() {
        use rand::Rng;
        let mut r = crate::rng::seeded(23);
        let (d, h) = (3, 2);
        let mut tape = Tape::<f64>::new();
        let fwd = random_weights(&mut tape, &mut r, d, h);
        let bwd = random_weights(&mut tape, &mut r, d, h);
        let x = tape.leaf(
            Tensor::from_vec(&[1, d], (0..d).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap(),
            false,
        );
        let out = bidirectional_gru(&mut tape, &[x], &fwd, &bwd, h).unwrap();
        let h0 = tape.leaf(Tensor::zeros(&[1, h]), false);
        let cf = gru_cell(&mut tape, x, h0, &fwd, h).unwrap();
        let cb = gru_cell(&mut tape, x, h0, &bwd, h).unwrap();
        let expect: Vec<f64> = tape
            .value(cf)
            .data()
            .iter()
            .chain(tape.value(cb).data())
            .copied()
            .collect();
        assert_eq!(tape.value(out[0]).data(), expect.as_slice());
    }
}
