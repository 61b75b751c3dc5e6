//! Sequence classifier that predicts odd-subcarrier modulations from the
//! even-subcarrier labels.
//!
//! embedding(5 -> 32) -> BiGRU(64) -> BiGRU(128) -> per-timestep
//! dense(256 -> 5) -> softmax. Input position t carries subcarrier 2t's
//! class; output position t predicts subcarrier 2t + 1.

use crate::error::{Error, Result};
use crate::models::common::{argmax, bind_params, probabilities_f64, take_entries, Param};
use crate::nn::flops::{LayerSpec, ModelSpec, SpecNode, TensorShape};
use crate::nn::gru::{bidirectional_gru, GruGateIds};
use crate::nn::init::{glorot_uniform, orthogonal_stacked};
use crate::nn::tape::{NodeId, Tape};
use crate::nn::tensor::Tensor;
use crate::qam::ModScheme;
use crate::rng;
use crate::scalar::Scalar;
use std::path::Path;

pub const RNNBC_CLASSES: usize = 5;
pub const RNNBC_EMBED_DIM: usize = 32;
pub const RNNBC_HIDDEN_1: usize = 64;
pub const RNNBC_HIDDEN_2: usize = 128;

#[derive(Debug, Clone, Copy)]
struct GruIdx {
    w_x: usize,
    b: usize,
    u_zr: usize,
    u_h: usize,
}

#[derive(Debug, Clone)]
pub struct RnnBcModel<T: Scalar> {
    params: Vec<Param<T>>,
    embedding: usize,
    gru1_f: GruIdx,
    gru1_b: GruIdx,
    gru2_f: GruIdx,
    gru2_b: GruIdx,
    head_w: usize,
    head_b: usize,
    invocations: std::cell::Cell<u64>,
}

fn gru_params<T: Scalar>(
    params: &mut Vec<Param<T>>,
    rng: &mut rng::ChaCha8Rng,
    name: &str,
    d: usize,
    h: usize,
) -> GruIdx {
    let mut push = |suffix: &str, value: Tensor<T>| -> usize {
        params.push(Param { name: format!("{name}.{suffix}"), value });
        params.len() - 1
    };
    // Input weights glorot per gate, recurrent weights orthogonal per gate,
    // biases zero.
    let mut wx_data = Vec::with_capacity(3 * h * d);
    for _ in 0..3 {
        wx_data.extend_from_slice(glorot_uniform::<T>(rng, &[h, d], d, h).data());
    }
    let w_x = push("w_x", Tensor::from_vec(&[3 * h, d], wx_data).unwrap());
    let b = push("b", Tensor::zeros(&[3 * h]));
    let u_zr = push("u_zr", orthogonal_stacked(rng, 2, h));
    let u_h = push("u_h", orthogonal_stacked(rng, 1, h));
    GruIdx { w_x, b, u_zr, u_h }
}

/// Build the sequence classifier with seeded weights.
pub fn build_rnnbc<T: Scalar>(seed: u64) -> RnnBcModel<T> {
    let mut r = rng::seeded(seed);
    let mut params = Vec::new();
    params.push(Param {
        name: "embedding".into(),
        value: glorot_uniform::<T>(&mut r, &[RNNBC_CLASSES, RNNBC_EMBED_DIM], RNNBC_CLASSES, RNNBC_EMBED_DIM),
    });
    let embedding = 0usize;
    let gru1_f = gru_params(&mut params, &mut r, "gru1.fwd", RNNBC_EMBED_DIM, RNNBC_HIDDEN_1);
    let gru1_b = gru_params(&mut params, &mut r, "gru1.bwd", RNNBC_EMBED_DIM, RNNBC_HIDDEN_1);
    let gru2_f = gru_params(&mut params, &mut r, "gru2.fwd", 2 * RNNBC_HIDDEN_1, RNNBC_HIDDEN_2);
    let gru2_b = gru_params(&mut params, &mut r, "gru2.bwd", 2 * RNNBC_HIDDEN_1, RNNBC_HIDDEN_2);
    let head_w = {
        params.push(Param {
            name: "head.w".into(),
            value: glorot_uniform::<T>(&mut r, &[RNNBC_CLASSES, 2 * RNNBC_HIDDEN_2], 2 * RNNBC_HIDDEN_2, RNNBC_CLASSES),
        });
        params.len() - 1
    };
    let head_b = {
        params.push(Param { name: "head.b".into(), value: Tensor::zeros(&[RNNBC_CLASSES]) });
        params.len() - 1
    };
    RnnBcModel {
        params,
        embedding,
        gru1_f,
        gru1_b,
        gru2_f,
        gru2_b,
        head_w,
        head_b,
        invocations: std::cell::Cell::new(0),
    }
}

pub(crate) struct RnnBcForward {
    /// [B*T, 5] logits, row r = (batch r / T, timestep r % T).
    pub logits: NodeId,
    pub param_nodes: Vec<NodeId>,
}

impl<T: Scalar> RnnBcModel<T> {
    pub fn params(&self) -> &[Param<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param<T>] {
        &mut self.params
    }

    pub fn param_shapes(&self) -> Vec<&[usize]> {
        self.params.iter().map(|p| p.value.shape()).collect()
    }

    fn gates(&self, ids: &[NodeId], idx: GruIdx) -> GruGateIds {
        GruGateIds { w_x: ids[idx.w_x], b: ids[idx.b], u_zr: ids[idx.u_zr], u_h: ids[idx.u_h] }
    }

    /// Forward over a batch of class-id sequences, all of length `t_len`.
    pub(crate) fn forward(&self, tape: &mut Tape<T>, ids_flat: &[usize], batch: usize, t_len: usize, trainable: bool) -> Result<RnnBcForward> {
        if ids_flat.len() != batch * t_len {
            return Err(Error::Shape("rnnbc: id buffer does not match batch x T".into()));
        }
        let ids = bind_params(tape, &self.params, trainable);
        let emb = tape.embedding(ids[self.embedding], ids_flat)?; // [B*T, E]
        let emb3 = tape.reshape(emb, &[batch, t_len, RNNBC_EMBED_DIM])?;
        let xs: Vec<NodeId> =
            (0..t_len).map(|t| tape.select_time(emb3, t)).collect::<Result<_>>()?;
        let l1 = bidirectional_gru(
            tape,
            &xs,
            &self.gates(&ids, self.gru1_f),
            &self.gates(&ids, self.gru1_b),
            RNNBC_HIDDEN_1,
        )?;
        let l2 = bidirectional_gru(
            tape,
            &l1,
            &self.gates(&ids, self.gru2_f),
            &self.gates(&ids, self.gru2_b),
            RNNBC_HIDDEN_2,
        )?;
        let w = ids[self.head_w];
        let b = ids[self.head_b];
        let per_t: Vec<NodeId> =
            l2.iter().map(|&h| tape.dense(h, w, b)).collect::<Result<_>>()?;
        let stacked = tape.stack_time(&per_t)?; // [B, T, 5]
        let logits = tape.reshape(stacked, &[batch * t_len, RNNBC_CLASSES])?;
        Ok(RnnBcForward { logits, param_nodes: ids })
    }

    /// Per-timestep class probabilities for one id sequence.
    pub fn infer_sequence(&self, class_ids: &[usize]) -> Result<Vec<[f64; RNNBC_CLASSES]>> {
        let mut tape = Tape::new();
        let fwd = self.forward(&mut tape, class_ids, 1, class_ids.len(), false)?;
        let logits = tape.value(fwd.logits);
        self.invocations.set(self.invocations.get() + 1);
        Ok((0..class_ids.len())
            .map(|t| {
                let row = &logits.data()[t * RNNBC_CLASSES..(t + 1) * RNNBC_CLASSES];
                let mut arr = [0.0f64; RNNBC_CLASSES];
                arr.copy_from_slice(&probabilities_f64(row));
                arr
            })
            .collect())
    }

    pub fn invocation_count(&self) -> u64 {
        self.invocations.get()
    }

    pub fn reset_invocation_count(&self) {
        self.invocations.set(0);
    }

    /// Cost model for sequences of length `t_len`.
    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            nodes: vec![
                SpecNode::layer("embedding", LayerSpec::Embedding { vocab: RNNBC_CLASSES, dim: RNNBC_EMBED_DIM }),
                SpecNode::layer("bigru1", LayerSpec::BidirectionalGru { hidden: RNNBC_HIDDEN_1 }),
                SpecNode::layer("bigru2", LayerSpec::BidirectionalGru { hidden: RNNBC_HIDDEN_2 }),
                SpecNode::layer("head", LayerSpec::Dense { out: RNNBC_CLASSES }),
                SpecNode::layer("softmax", LayerSpec::Softmax),
            ],
        }
    }

    pub fn input_shape(&self, t_len: usize) -> TensorShape {
        TensorShape::Tokens { t: t_len }
    }

    pub fn named_entries(&self) -> Vec<(String, Tensor<T>)> {
        self.params.iter().map(|p| (p.name.clone(), p.value.clone())).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::nn::checkpoint::save_checkpoint(&self.named_entries(), path)
    }

    pub fn checkpoint_bytes(&self) -> Result<Vec<u8>> {
        crate::nn::checkpoint::checkpoint_bytes(&self.named_entries())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let entries = crate::nn::checkpoint::load_checkpoint::<T>(path)?;
        Self::from_entries(entries)
    }

    pub fn from_entries(entries: Vec<(String, Tensor<T>)>) -> Result<Self> {
        let mut model = build_rnnbc::<T>(0);
        let expected: Vec<(String, Vec<usize>)> = model
            .named_entries()
            .iter()
            .map(|(n, t)| (n.clone(), t.shape().to_vec()))
            .collect();
        let tensors = take_entries(entries, &expected)?;
        for (p, t) in model.params.iter_mut().zip(tensors) {
            p.value = t;
        }
        Ok(model)
    }
}

/// Predict the odd-subcarrier schemes from the even-subcarrier ones.
pub fn predict_odd<T: Scalar>(model: &RnnBcModel<T>, even_schemes: &[ModScheme]) -> Result<Vec<ModScheme>> {
    let ids: Vec<usize> = even_schemes
        .iter()
        .map(|s| {
            s.class_index()
                .ok_or_else(|| Error::Domain("Null scheme is not a classifier input".into()))
        })
        .collect::<Result<_>>()?;
    let probs = model.infer_sequence(&ids)?;
    Ok(probs
        .iter()
        .map(|p| ModScheme::from_class_index(argmax(p)).unwrap())
        .collect())
}
