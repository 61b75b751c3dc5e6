use crate::config::RunConfig;
use amc_core::error::{Error, Result};
use amc_core::eval::{generate_dataset, verify_dataset, SplitTag};
use serde_json::json;
use std::path::PathBuf;

pub struct Args {
    pub split: String,
    pub count: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub symbols: usize,
    pub config: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub verify: bool,
    pub threads: usize,
}

pub fn run(args: Args) -> Result<()> {
    let split = SplitTag::parse(&args.split)?;
    let mut run_cfg = RunConfig::load(args.config.as_deref())?;
    run_cfg.apply_overrides(&args.overrides)?;
    if run_cfg.get_usize("dataset.symbols_per_capture")?.is_none() {
        run_cfg.set("dataset.symbols_per_capture", json!(args.symbols));
    }
    let dataset_cfg = run_cfg.dataset_config(args.symbols)?;
    run_cfg.set("generate.split", json!(split.as_str()));
    run_cfg.set("generate.count", json!(args.count));
    run_cfg.set("generate.seed", json!(args.seed));
    run_cfg.set("generate.threads", json!(args.threads));
    run_cfg.write_snapshot(&args.out)?;

    let manifest = generate_dataset(&dataset_cfg, args.count, args.seed, split, &args.out, args.threads)?;
    println!(
        "wrote {} records to {} (split {}, seed {}, config {})",
        manifest.count,
        args.out.join(split.bin_name()).display(),
        manifest.split.as_str(),
        manifest.seed,
        &manifest.config_hash[..12]
    );
    if args.verify {
        if verify_dataset(&args.out, split)? {
            println!("verify: archive matches regeneration byte for byte");
        } else {
            return Err(Error::Format("verification failed: archive differs from regeneration".into()));
        }
    }
    Ok(())
}
