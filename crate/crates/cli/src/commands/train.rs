use crate::config::RunConfig;
use amc_core::error::{Error, Result};
use amc_core::eval::{capture_to_samples, for_each_capture, load_sequences, SplitTag};
use amc_core::models::{
    build_lwnn, build_rnnbc, train_lwnn, train_rnnbc, IqSampleSet, SequenceSet, TrainConfig,
};
use serde_json::json;
use std::path::PathBuf;

pub struct Args {
    pub lwnn: bool,
    pub data: PathBuf,
    pub epochs: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub lr: Option<f64>,
    pub batch: Option<usize>,
    pub subcarriers_per_capture: usize,
    pub val_fraction: f64,
    pub patience: Option<usize>,
    pub config: Option<PathBuf>,
    pub overrides: Vec<String>,
}

pub fn run(args: Args) -> Result<()> {
    let mut run_cfg = RunConfig::load(args.config.as_deref())?;
    run_cfg.apply_overrides(&args.overrides)?;
    let mut cfg = if args.lwnn {
        TrainConfig::lwnn_defaults(args.epochs, args.seed)
    } else {
        TrainConfig::rnnbc_defaults(args.epochs, args.seed)
    };
    if let Some(lr) = args.lr.or(run_cfg.get_f64("train.lr")?) {
        cfg.lr = lr;
    }
    if let Some(b) = args.batch.or(run_cfg.get_usize("train.batch_size")?) {
        cfg.batch_size = b;
    }
    cfg.patience = args.patience.or(run_cfg.get_usize("train.patience")?);

    run_cfg.set("train.model", json!(if args.lwnn { "lwnn" } else { "rnnbc" }));
    run_cfg.set("train.lr", json!(cfg.lr));
    run_cfg.set("train.batch_size", json!(cfg.batch_size));
    run_cfg.set("train.epochs", json!(cfg.epochs));
    run_cfg.set("train.seed", json!(cfg.seed));
    run_cfg.set("train.data", json!(args.data.display().to_string()));
    run_cfg.write_snapshot(&args.out)?;

    if args.lwnn {
        train_lwnn_cmd(&args, cfg)
    } else {
        train_rnnbc_cmd(&args, cfg)
    }
}

fn train_lwnn_cmd(args: &Args, cfg: TrainConfig) -> Result<()> {
    if !(0.0..1.0).contains(&args.val_fraction) {
        return Err(Error::Config("val_fraction must be in [0, 1)".into()));
    }
    // First pass just reads the manifest for the input length.
    let manifest = amc_core::eval::read_manifest(&args.data, SplitTag::LwnnTrain)?;
    let input_len = manifest.config.symbols_per_capture;
    let val_captures = ((manifest.count as f64 * args.val_fraction) as u64).max(1);
    let mut train_set = IqSampleSet::<f32>::new(input_len);
    let mut val_set = IqSampleSet::<f32>::new(input_len);
    let per_cap = args.subcarriers_per_capture.clamp(1, 64);
    for_each_capture(&args.data, SplitTag::LwnnTrain, |cap| {
        let n = cap.n_subcarriers;
        let base = (cap.index as usize * 31) % n;
        let picks: Vec<usize> = (0..per_cap).map(|j| (base + j * n / per_cap) % n).collect();
        if cap.index < manifest.count - val_captures {
            capture_to_samples(&cap, &picks, &mut train_set);
        } else {
            capture_to_samples(&cap, &picks, &mut val_set);
        }
        Ok(())
    })?;
    println!(
        "training on {} samples, validating on {} (input length {input_len})",
        train_set.len(),
        val_set.len()
    );
    let mut model = build_lwnn::<f32>(input_len, cfg.seed)?;
    let history = if cfg.epochs > 0 {
        train_lwnn(&mut model, &train_set, &val_set, &cfg)?
    } else {
        Default::default()
    };
    std::fs::create_dir_all(&args.out)?;
    model.save(&args.out.join("lwnn.ckpt"))?;
    std::fs::write(args.out.join("history.csv"), history.to_csv())?;
    if let Some(last) = history.epochs.last() {
        println!(
            "best-val checkpoint saved; final epoch {}: val_acc {:.4}",
            last.epoch, last.val_acc
        );
    } else {
        println!("checkpoint of the initialized model saved (0 epochs)");
    }
    Ok(())
}

fn train_rnnbc_cmd(args: &Args, cfg: TrainConfig) -> Result<()> {
    let sequences = load_sequences(&args.data, SplitTag::RnnbcTrain)?;
    let val_count = ((sequences.len() as f64 * args.val_fraction) as usize).max(1);
    let split_at = sequences.len().saturating_sub(val_count);
    let train_set = SequenceSet { sequences: sequences[..split_at].to_vec() };
    let val_set = SequenceSet { sequences: sequences[split_at..].to_vec() };
    println!(
        "training on {} sequences, validating on {}",
        train_set.len(),
        val_set.len()
    );
    let mut model = build_rnnbc::<f32>(cfg.seed);
    let history = if cfg.epochs > 0 {
        train_rnnbc(&mut model, &train_set, &val_set, &cfg)?
    } else {
        Default::default()
    };
    std::fs::create_dir_all(&args.out)?;
    model.save(&args.out.join("rnnbc.ckpt"))?;
    std::fs::write(args.out.join("history.csv"), history.to_csv())?;
    if let Some(last) = history.epochs.last() {
        println!(
            "best-val checkpoint saved; final epoch {}: val_acc {:.4}",
            last.epoch, last.val_acc
        );
    } else {
        println!("checkpoint of the initialized model saved (0 epochs)");
    }
    Ok(())
}
