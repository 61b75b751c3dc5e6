use amc_core::eval::dataset::{capture_to_samples, generate_capture, DatasetConfig};
use amc_core::models::train::{train_lwnn, IqSampleSet, TrainConfig};
use amc_core::models::{build_lwnn_custom, classify_subcarriers};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let cfo: f64 = args.get(1).map(|v| v.parse().unwrap()).unwrap_or(0.01);
    let n_train: u64 = args.get(2).map(|v| v.parse().unwrap()).unwrap_or(10000);
    let epochs: usize = args.get(3).map(|v| v.parse().unwrap()).unwrap_or(6);
    let per_cap: usize = args.get(4).map(|v| v.parse().unwrap()).unwrap_or(4);

    let mut cfg = DatasetConfig::with_symbols(128);
    cfg.cfo_range = (-cfo, cfo);
    let t0 = Instant::now();
    let mut train = IqSampleSet::<f32>::new(128);
    for i in 0..n_train {
        let cap = generate_capture(&cfg, 101, i).unwrap();
        let sel: Vec<usize> = (0..per_cap).map(|j| ((i as usize + j * 17) * 13 + j) % 64).collect();
        capture_to_samples(&cap, &sel, &mut train);
    }
    let mut val = IqSampleSet::<f32>::new(128);
    for i in 0..100 {
        let cap = generate_capture(&cfg, 202, i).unwrap();
        capture_to_samples(&cap, &[0, 13, 29, 41, 55], &mut val);
    }
    eprintln!("gen {:.0}s train={} samples", t0.elapsed().as_secs_f64(), train.len());

    let mut model = build_lwnn_custom::<f32>(128, [96, 192, 192, 256], [1, 5], 3).unwrap();
    let cfgt = TrainConfig::lwnn_defaults(epochs, 4);
    let t0 = Instant::now();
    let h = train_lwnn(&mut model, &train, &val, &cfgt).unwrap();
    for e in &h.epochs {
        println!("cfo={cfo} epoch {}: train_acc {:.3} val_acc {:.3}", e.epoch, e.train_acc, e.val_acc);
    }
    eprintln!("train {:.0}s", t0.elapsed().as_secs_f64());
    let (mut hi_hit, mut hi_tot) = (0, 0);
    let (mut lo_hit, mut lo_tot) = (0, 0);
    for i in 0..200 {
        let cap = generate_capture(&cfg, 303, i).unwrap();
        let seqs: Vec<&[num_complex::Complex<f32>]> = (0..64).map(|k| cap.subcarrier(k)).collect();
        let preds = classify_subcarriers(&model, &seqs).unwrap();
        for k in 0..64 {
            let snr = cap.snr_db[k] as f64;
            let ok = preds[k].0 == cap.schemes[k];
            if snr >= 12.0 { hi_tot += 1; if ok { hi_hit += 1; } }
            if (5.0..8.0).contains(&snr) { lo_tot += 1; if ok { lo_hit += 1; } }
        }
    }
    println!("cfo={cfo} >=12dB PCC: {:.4} ({hi_hit}/{hi_tot}); 5-8dB: {:.4}", hi_hit as f64 / hi_tot as f64, lo_hit as f64 / lo_tot as f64);
}
