//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the summary lines.

use amc_core::bitload::{gap_for_ser, greedy_allocate, AllocMode};
use amc_core::channel::{add_awgn, apply_channel, equalize, sample_channel};
use amc_core::error::Result;
use amc_core::eval::dataset::{generate_capture, DatasetConfig};
use amc_core::eval::{
    combined_classify, flops_reduction_report, reference_table, EvenClassifier, OddPredictor,
    RNNBC_REFERENCE_COST,
};
use amc_core::models::{build_lwnn, build_rnnbc, predict_odd};
use amc_core::nn::gradcheck::check_gradients;
use amc_core::nn::gru::{gru_cell, gru_sequence, GruGateIds};
use amc_core::nn::tape::{NodeId, Padding, Tape};
use amc_core::nn::Tensor;
use amc_core::ofdm::{ofdm_demodulate, ofdm_modulate, FreqFrame, OfdmConfig, TimeSignal};
use amc_core::qam::{map_bits, ModScheme};
use amc_core::rng;
use num_complex::Complex;
use rand::Rng;
use std::time::Instant;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("[acceptance] {}: {criterion} -- {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{criterion}: {detail}");
}

// Criterion 1: the noiseless modulate -> channel -> demodulate -> equalize
// chain returns every transmitted constellation point to within 1e-6, over
// 100 random channel and allocation draws.
#[test]
fn criterion_01_signal_model_exactness() {
    let t0 = Instant::now();
    let cfg = OfdmConfig::default_64(8);
    let gap = gap_for_ser(1e-3).unwrap();
    let mut worst = 0.0f64;
    let mut draws = 0;
    let mut rng = rng::seeded(4001);
    while draws < 100 {
        let ch = sample_channel(&mut rng, &cfg).unwrap();
        // Mirror the dataset SNR floor: skip draws whose fades would be
        // excluded there anyway.
        if ch.freq_response.iter().any(|h| h.norm_sqr() < 1e-2) {
            continue;
        }
        draws += 1;
        let snrs: Vec<f64> = ch
            .freq_response
            .iter()
            .map(|h| 64.0 * h.norm_sqr() / 0.64) // mean-SNR target 20 dB
            .collect();
        let alloc = greedy_allocate(&snrs, 64.0, gap, 6, AllocMode::Dataset).unwrap();
        let mut frame = FreqFrame::<f64>::zeros(cfg.n_symbols, 64);
        for k in 0..64 {
            let scheme = alloc.schemes[k];
            let bits: Vec<u8> = (0..cfg.n_symbols * scheme.bits_per_symbol())
                .map(|_| rng.gen_range(0..2))
                .collect();
            for (m, sym) in map_bits::<f64>(&bits, scheme).unwrap().into_iter().enumerate() {
                frame.symbol_mut(m)[k] = sym;
            }
        }
        let rx = apply_channel(&ofdm_modulate(&frame, &cfg).unwrap(), &ch);
        let eq = equalize(&ofdm_demodulate(&rx, &cfg).unwrap(), &ch).unwrap();
        for (a, b) in frame.data.iter().zip(&eq.data) {
            worst = worst.max((a - b).norm());
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    report(
        "criterion 1 signal-model exactness",
        worst < 1e-6 && dt < 10.0,
        &format!("max symbol error {worst:.3e} over 100 draws in {dt:.1}s"),
    );
}

// Criterion 2: requested vs measured SNR within +-0.1 dB over 1e6 samples.
#[test]
fn criterion_02_snr_calibration() {
    let t0 = Instant::now();
    let n = 1_000_000usize;
    let mut rng = rng::seeded(4002);
    let sig = TimeSignal::<f64> {
        samples: (0..n).map(|_| rng::complex_normal(&mut rng, 2.0)).collect(),
    };
    let mut worst = 0.0f64;
    for target in [0.0, 10.0, 23.0] {
        let noisy = add_awgn(&sig, target, &mut rng).unwrap();
        let noise_p: f64 = noisy
            .samples
            .iter()
            .zip(&sig.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / n as f64;
        let measured = 10.0 * (sig.mean_power() / noise_p).log10();
        worst = worst.max((measured - target).abs());
    }
    let dt = t0.elapsed().as_secs_f64();
    report(
        "criterion 2 SNR calibration",
        worst < 0.1 && dt < 10.0,
        &format!("max |requested - measured| = {worst:.4} dB in {dt:.1}s"),
    );
}

// ---- criterion 3: finite-difference gradient suite ----

struct FdCase {
    inputs: Vec<Tensor<f64>>,
    build: Box<dyn Fn(&mut Tape<f64>, &[NodeId]) -> Result<NodeId>>,
    /// Smallest |pre-activation| feeding a kinked op; configs too close to a
    /// kink are redrawn since central differences are meaningless there.
    kink_margin: f64,
}

fn randt(r: &mut rng::ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn coeffs(r: &mut rng::ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(0.5..1.5)).collect()
}

/// Smallest |value| among the given nodes (kink-proximity measure).
fn min_abs(tape: &Tape<f64>, ids: &[NodeId]) -> f64 {
    ids.iter()
        .flat_map(|&id| tape.value(id).data().iter().map(|v| v.abs()))
        .fold(f64::INFINITY, f64::min)
}

fn run_fd_suite(name: &str, mut make: impl FnMut(u64) -> FdCase, configs: usize) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut done = 0usize;
    let mut seed = 0u64;
    while done < configs {
        let case = make(seed);
        seed += 1;
        if case.kink_margin < 1e-3 {
            continue; // too close to a ReLU/pool kink for finite differences
        }
        let rep = check_gradients(|t, ids| (case.build)(t, ids), &case.inputs, 1e-5).unwrap();
        if rep.max_rel_err > worst {
            worst = rep.max_rel_err;
        }
        done += 1;
    }
    println!("  gradient suite [{name}]: {configs} configs, max rel err {worst:.3e}");
    (worst, done)
}

#[test]
fn criterion_03_gradient_suite() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;

    // conv1d
    let (w, _) = run_fd_suite("conv1d", |seed| {
        let mut r = rng::seeded(31_000 + seed);
        let (b, ci, co) = (r.gen_range(1..3), r.gen_range(1..4), r.gen_range(1..4));
        let k = r.gen_range(1..6);
        let l = r.gen_range(k..k + 10);
        let stride = r.gen_range(1..3);
        let padding = if r.gen::<bool>() { Padding::Same } else { Padding::Valid };
        let x = randt(&mut r, &[b, ci, l]);
        let wt = randt(&mut r, &[co, ci, k]);
        let bias = randt(&mut r, &[co]);
        let mut probe = Tape::new();
        let ids = [
            probe.leaf(x.clone(), false),
            probe.leaf(wt.clone(), false),
            probe.leaf(bias.clone(), false),
        ];
        let y = probe.conv1d(ids[0], ids[1], ids[2], stride, padding).unwrap();
        let c = coeffs(&mut r, probe.value(y).numel());
        FdCase {
            inputs: vec![x, wt, bias],
            build: Box::new(move |t, ids| {
                let y = t.conv1d(ids[0], ids[1], ids[2], stride, padding)?;
                let a = t.tanh(y);
                t.weighted_sum(a, &c)
            }),
            kink_margin: f64::INFINITY,
        }
    }, 20);
    worst = worst.max(w);

    // D-CNN block (depthwise -> relu -> pointwise -> relu)
    let (w, _) = run_fd_suite("dcnn", |seed| {
        let mut r = rng::seeded(32_000 + seed);
        let (b, c) = (r.gen_range(1..3), r.gen_range(1..4));
        let co = r.gen_range(1..5);
        let k = r.gen_range(1..6);
        let l = r.gen_range(k..k + 9);
        let stride = r.gen_range(1..3);
        let x = randt(&mut r, &[b, c, l]);
        let dw = randt(&mut r, &[c, k]);
        let db = randt(&mut r, &[c]);
        let pw = randt(&mut r, &[co, c, 1]);
        let pb = randt(&mut r, &[co]);
        let mut probe = Tape::new();
        let ids: Vec<NodeId> = [&x, &dw, &db, &pw, &pb]
            .iter()
            .map(|t| probe.leaf((*t).clone(), false))
            .collect();
        let y1 = probe.depthwise_conv1d(ids[0], ids[1], ids[2], stride, Padding::Same).unwrap();
        let a1 = probe.relu(y1);
        let y2 = probe.conv1d(a1, ids[3], ids[4], 1, Padding::Same).unwrap();
        let margin = min_abs(&probe, &[y1, y2]);
        let c_out = coeffs(&mut r, probe.value(y2).numel());
        FdCase {
            inputs: vec![x, dw, db, pw, pb],
            build: Box::new(move |t, ids| {
                let y1 = t.depthwise_conv1d(ids[0], ids[1], ids[2], stride, Padding::Same)?;
                let a1 = t.relu(y1);
                let y2 = t.conv1d(a1, ids[3], ids[4], 1, Padding::Same)?;
                let a2 = t.relu(y2);
                t.weighted_sum(a2, &c_out)
            }),
            kink_margin: margin,
        }
    }, 20);
    worst = worst.max(w);

    // Inception block (four branches, channel concat)
    let (w, _) = run_fd_suite("inception", |seed| {
        let mut r = rng::seeded(33_000 + seed);
        let (b, ci) = (r.gen_range(1..3), r.gen_range(1..4));
        let q = r.gen_range(1..3);
        let l = r.gen_range(6..14);
        let x = randt(&mut r, &[b, ci, l]);
        let tensors: Vec<Tensor<f64>> = vec![
            x.clone(),
            randt(&mut r, &[q, ci, 1]),
            randt(&mut r, &[q]),
            randt(&mut r, &[q, ci, 1]),
            randt(&mut r, &[q]),
            randt(&mut r, &[q, q, 3]),
            randt(&mut r, &[q]),
            randt(&mut r, &[q, ci, 1]),
            randt(&mut r, &[q]),
            randt(&mut r, &[q, q, 5]),
            randt(&mut r, &[q]),
            randt(&mut r, &[q, ci, 1]),
            randt(&mut r, &[q]),
        ];
        let build_block = move |t: &mut Tape<f64>, ids: &[NodeId]| -> Result<(NodeId, Vec<NodeId>)> {
            let mut kinked = Vec::new();
            let mut conv_relu = |t: &mut Tape<f64>, x: NodeId, wi: usize, k: usize, ids: &[NodeId]| -> Result<NodeId> {
                let y = t.conv1d(x, ids[wi], ids[wi + 1], 1, Padding::Same)?;
                let _ = k;
                kinked.push(y);
                Ok(t.relu(y))
            };
            let b1 = conv_relu(t, ids[0], 1, 1, ids)?;
            let b2a = conv_relu(t, ids[0], 3, 1, ids)?;
            let b2 = conv_relu(t, b2a, 5, 3, ids)?;
            let b3a = conv_relu(t, ids[0], 7, 1, ids)?;
            let b3 = conv_relu(t, b3a, 9, 5, ids)?;
            let p = t.maxpool1d(ids[0], 3, 1, Padding::Same)?;
            let b4 = conv_relu(t, p, 11, 1, ids)?;
            let cat = t.concat_channels(&[b1, b2, b3, b4])?;
            Ok((cat, kinked))
        };
        let mut probe = Tape::new();
        let ids: Vec<NodeId> = tensors.iter().map(|t| probe.leaf(t.clone(), false)).collect();
        let (cat, kinked) = build_block(&mut probe, &ids).unwrap();
        let margin = min_abs(&probe, &kinked);
        let c_out = coeffs(&mut r, probe.value(cat).numel());
        FdCase {
            inputs: tensors,
            build: Box::new(move |t, ids| {
                let (cat, _) = build_block(t, ids)?;
                t.weighted_sum(cat, &c_out)
            }),
            kink_margin: margin,
        }
    }, 20);
    worst = worst.max(w);

    // batchnorm (training statistics)
    let (w, _) = run_fd_suite("batchnorm", |seed| {
        let mut r = rng::seeded(34_000 + seed);
        let (b, c, l) = (r.gen_range(2..5), r.gen_range(1..4), r.gen_range(2..9));
        let x = randt(&mut r, &[b, c, l]);
        let gamma = randt(&mut r, &[c]);
        let beta = randt(&mut r, &[c]);
        let c_out = coeffs(&mut r, b * c * l);
        FdCase {
            inputs: vec![x, gamma, beta],
            build: Box::new(move |t, ids| {
                let (y, _, _) = t.batchnorm_train(ids[0], ids[1], ids[2], 1e-5)?;
                let a = t.tanh(y);
                t.weighted_sum(a, &c_out)
            }),
            kink_margin: f64::INFINITY,
        }
    }, 20);
    worst = worst.max(w);

    // GRU: 8-timestep sequence, gradients through time
    let (w, _) = run_fd_suite("gru", |seed| {
        let mut r = rng::seeded(35_000 + seed);
        let (b, d, h) = (r.gen_range(1..3), r.gen_range(1..4), r.gen_range(1..4));
        let steps = 8;
        let mut tensors = vec![
            randt(&mut r, &[3 * h, d]),
            randt(&mut r, &[3 * h]),
            randt(&mut r, &[2 * h, h]),
            randt(&mut r, &[h, h]),
        ];
        for _ in 0..steps {
            tensors.push(randt(&mut r, &[b, d]));
        }
        let c_out = coeffs(&mut r, b * h);
        FdCase {
            inputs: tensors,
            build: Box::new(move |t, ids| {
                let w = GruGateIds { w_x: ids[0], b: ids[1], u_zr: ids[2], u_h: ids[3] };
                let xs: Vec<NodeId> = ids[4..].to_vec();
                let hs = gru_sequence(t, &xs, &w, h, false)?;
                t.weighted_sum(*hs.last().unwrap(), &c_out)
            }),
            kink_margin: f64::INFINITY,
        }
    }, 20);
    worst = worst.max(w);

    // dense
    let (w, _) = run_fd_suite("dense", |seed| {
        let mut r = rng::seeded(36_000 + seed);
        let (rows, din, dout) = (r.gen_range(1..5), r.gen_range(1..7), r.gen_range(1..7));
        let x = randt(&mut r, &[rows, din]);
        let wt = randt(&mut r, &[dout, din]);
        let bias = randt(&mut r, &[dout]);
        let c_out = coeffs(&mut r, rows * dout);
        FdCase {
            inputs: vec![x, wt, bias],
            build: Box::new(move |t, ids| {
                let y = t.dense(ids[0], ids[1], ids[2])?;
                let a = t.sigmoid(y);
                t.weighted_sum(a, &c_out)
            }),
            kink_margin: f64::INFINITY,
        }
    }, 20);
    worst = worst.max(w);

    // embedding
    let (w, _) = run_fd_suite("embedding", |seed| {
        let mut r = rng::seeded(37_000 + seed);
        let (v, e) = (r.gen_range(2..6), r.gen_range(1..5));
        let n_ids = r.gen_range(1..7);
        let table = randt(&mut r, &[v, e]);
        let ids_list: Vec<usize> = (0..n_ids).map(|_| r.gen_range(0..v)).collect();
        let c_out = coeffs(&mut r, n_ids * e);
        FdCase {
            inputs: vec![table],
            build: Box::new(move |t, ids| {
                let y = t.embedding(ids[0], &ids_list)?;
                let a = t.tanh(y);
                t.weighted_sum(a, &c_out)
            }),
            kink_margin: f64::INFINITY,
        }
    }, 20);
    worst = worst.max(w);

    // softmax cross-entropy
    let (w, _) = run_fd_suite("softmax-ce", |seed| {
        let mut r = rng::seeded(38_000 + seed);
        let (rows, c) = (r.gen_range(1..6), r.gen_range(2..7));
        let logits = randt(&mut r, &[rows, c]);
        let labels: Vec<usize> = (0..rows).map(|_| r.gen_range(0..c)).collect();
        FdCase {
            inputs: vec![logits],
            build: Box::new(move |t, ids| t.softmax_xent(ids[0], &labels)),
            kink_margin: f64::INFINITY,
        }
    }, 20);
    worst = worst.max(w);

    let dt = t0.elapsed().as_secs_f64();
    report(
        "criterion 3 gradient suite",
        worst < 1e-4 && dt < 300.0,
        &format!("max relative error {worst:.3e} across all layer families in {dt:.1}s"),
    );
}

// Criterion 4: reference complexity table matches all six published cells
// within 0.5%.
#[test]
fn criterion_04_reference_table() {
    let t0 = Instant::now();
    let rows = reference_table();
    let expect = [
        ("VGG", 16.45e6, 8.31e6),
        ("ResNet", 15.1e6, 7.63e6),
        ("CNN-AMC", 36.8e6, 18.48e6),
    ];
    let mut worst = 0.0f64;
    for (row, (name, alone, combined)) in rows.iter().zip(expect) {
        assert_eq!(row.name, name);
        worst = worst.max((row.alone as f64 - alone).abs() / alone);
        worst = worst.max((row.combined as f64 - combined).abs() / combined);
    }
    let dt = t0.elapsed().as_secs_f64();
    report(
        "criterion 4 reference complexity table",
        worst <= 0.005 && dt < 1.0,
        &format!("max cell deviation {:.3}% in {dt:.2}s", worst * 100.0),
    );
}

// Criterion 5: combined/alone FLOPs ratio of the default build at N=64 stays
// at or below 0.51, and the symbolic published numbers reproduce.
#[test]
fn criterion_05_flops_halving() {
    let t0 = Instant::now();
    let lwnn = build_lwnn::<f32>(1024, 1).unwrap();
    let rnnbc = build_rnnbc::<f32>(2);
    let rep = flops_reduction_report(&lwnn, &rnnbc, 64).unwrap();
    let symbolic_alone = 64u64 * 48_900_000;
    let symbolic_combined = 32u64 * 48_900_000 + RNNBC_REFERENCE_COST;
    let symbolic_ok = (symbolic_alone as f64 - 3.13e9).abs() / 3.13e9 < 0.005
        && (symbolic_combined as f64 - 1.565e9).abs() / 1.565e9 < 0.005;
    let dt = t0.elapsed().as_secs_f64();
    report(
        "criterion 5 FLOPs halving",
        rep.ratio <= 0.51 && symbolic_ok && dt < 1.0,
        &format!(
            "default-build ratio {:.4} (lwnn {} / rnnbc {}); symbolic {} vs {}",
            rep.ratio, rep.lwnn_flops, rep.rnnbc_flops, symbolic_alone, symbolic_combined
        ),
    );
}

// Criterion 8: combined pipeline runs the per-subcarrier network exactly N/2
// times plus one sequence pass, and the interleave covers all subcarriers.
#[test]
fn criterion_08_combined_structure() {
    let t0 = Instant::now();
    let cfg = DatasetConfig::with_symbols(128);
    let cap = generate_capture(&cfg, 4008, 0).unwrap();
    let lwnn = build_lwnn::<f32>(128, 11).unwrap();
    let rnnbc = build_rnnbc::<f32>(12);
    lwnn.reset_invocation_count();
    rnnbc.reset_invocation_count();
    let out = combined_classify(&lwnn, &rnnbc, &cap).unwrap();
    let coverage_ok =
        out.schemes.len() == 64 && out.schemes.iter().all(|s| s.class_index().is_some());
    // Also check the oracle-stand-in contract: stand-ins that read the truth
    // reproduce it exactly through the same interleave.
    struct TruthEven<'a>(&'a amc_core::eval::Capture);
    impl EvenClassifier for TruthEven<'_> {
        fn classify_batch(&self, seqs: &[&[Complex<f32>]]) -> Result<Vec<ModScheme>> {
            Ok((0..seqs.len()).map(|t| self.0.schemes[2 * t]).collect())
        }
    }
    struct TruthOdd<'a>(&'a amc_core::eval::Capture);
    impl OddPredictor for TruthOdd<'_> {
        fn predict(&self, evens: &[ModScheme]) -> Result<Vec<ModScheme>> {
            Ok((0..evens.len()).map(|t| self.0.schemes[2 * t + 1]).collect())
        }
    }
    let oracle = combined_classify(&TruthEven(&cap), &TruthOdd(&cap), &cap).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    report(
        "criterion 8 combined-pipeline structure",
        lwnn.invocation_count() == 32
            && rnnbc.invocation_count() == 1
            && out.even_invocations == 32
            && out.odd_invocations == 1
            && coverage_ok
            && oracle.schemes == cap.schemes
            && dt < 60.0,
        &format!(
            "lwnn invocations {}, rnnbc invocations {}, coverage {} in {dt:.1}s",
            lwnn.invocation_count(),
            rnnbc.invocation_count(),
            coverage_ok
        ),
    );
}

// Criterion 10: the greedy allocator replays an independent oracle
// step-for-step on 1000 random 64-bin SNR vectors.
#[test]
fn criterion_10_bitloading_oracle() {
    let t0 = Instant::now();
    let mut r = rng::seeded(4010);
    let mut mismatch = 0usize;
    for _ in 0..1000 {
        let snrs: Vec<f64> = (0..64).map(|_| r.gen_range(0.2..2000.0)).collect();
        let budget = r.gen_range(4.0..250.0);
        let gap = r.gen_range(1.0..9.0);
        let alloc = greedy_allocate(&snrs, budget, gap, 6, AllocMode::Strict).unwrap();

        // Independent replay: recompute every candidate cost each round.
        let mut bits = vec![0usize; 64];
        let mut powers = vec![0.0f64; 64];
        let mut left = budget;
        loop {
            let best = (0..64)
                .filter(|&k| bits[k] < 6)
                .map(|k| (k, gap * 2f64.powi(bits[k] as i32) / snrs[k]))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            match best {
                Some((k, cost)) if cost <= left => {
                    bits[k] += 1;
                    powers[k] += cost;
                    left -= cost;
                }
                _ => break,
            }
        }
        if alloc.bits != bits
            || alloc
                .powers
                .iter()
                .zip(&powers)
                .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            mismatch += 1;
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    report(
        "criterion 10 bit-loading oracle equivalence",
        mismatch == 0 && dt < 60.0,
        &format!("{mismatch}/1000 mismatches in {dt:.1}s"),
    );
}

// Assembly check referenced by criterion 8's wiring: argmax predictions from
// an untrained sequence model stay inside the label space.
#[test]
fn predict_odd_label_space_closure() {
    let rnnbc = build_rnnbc::<f32>(99);
    let evens = vec![ModScheme::Qam16; 32];
    let odds = predict_odd(&rnnbc, &evens).unwrap();
    assert_eq!(odds.len(), 32);
    assert!(odds.iter().all(|s| s.class_index().is_some()));
}

// GRU hand-value check kept next to the suite that exercises the cell.
#[test]
fn gru_cell_hand_value() {
    let mut tape = Tape::<f64>::new();
    let w = GruGateIds {
        w_x: tape.leaf(Tensor::zeros(&[3, 1]), false),
        b: tape.leaf(Tensor::zeros(&[3]), false),
        u_zr: tape.leaf(Tensor::zeros(&[2, 1]), false),
        u_h: tape.leaf(Tensor::zeros(&[1, 1]), false),
    };
    let x = tape.leaf(Tensor::from_vec(&[1, 1], vec![0.4]).unwrap(), false);
    let h = tape.leaf(Tensor::from_vec(&[1, 1], vec![1.0]).unwrap(), false);
    let h2 = gru_cell(&mut tape, x, h, &w, 1).unwrap();
    assert!((tape.value(h2).data()[0] - 0.5).abs() < 1e-15);
}
