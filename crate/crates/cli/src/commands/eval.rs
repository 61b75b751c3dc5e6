use amc_core::error::{Error, Result};
use amc_core::eval::metrics::{confusion_by_snr, pcc_by_snr, pcc_by_snr_csv, SNR_BIN_LABELS};
use amc_core::eval::{combined_classify, for_each_capture, SplitTag};
use amc_core::models::{classify_subcarriers, LwnnModel, RnnBcModel};
use amc_core::qam::ModScheme;
use num_complex::Complex;
use std::path::PathBuf;

pub struct Args {
    pub lwnn: PathBuf,
    pub rnnbc: Option<PathBuf>,
    pub data: PathBuf,
    pub combined: bool,
    pub out: PathBuf,
    pub limit: u64,
}

pub fn run(args: Args) -> Result<()> {
    let lwnn = LwnnModel::<f32>::load(&args.lwnn)?;
    let rnnbc = if args.combined {
        let path = args
            .rnnbc
            .as_ref()
            .ok_or_else(|| Error::Config("combined mode needs --rnnbc".into()))?;
        Some(RnnBcModel::<f32>::load(path)?)
    } else {
        None
    };
    let manifest = amc_core::eval::read_manifest(&args.data, SplitTag::LwnnTest)?;
    if manifest.config.symbols_per_capture != lwnn.input_len {
        return Err(Error::Config(format!(
            "checkpoint expects input length {}, dataset provides {}",
            lwnn.input_len, manifest.config.symbols_per_capture
        )));
    }

    let mut preds: Vec<ModScheme> = Vec::new();
    let mut truths: Vec<ModScheme> = Vec::new();
    let mut snrs: Vec<f64> = Vec::new();
    // Combined mode also reports the sequence model's own accuracy on the
    // odd subcarriers.
    let (mut odd_hits, mut odd_total) = (0u64, 0u64);
    let mut captures_seen = 0u64;
    lwnn.reset_invocation_count();

    for_each_capture(&args.data, SplitTag::LwnnTest, |cap| {
        if args.limit > 0 && captures_seen >= args.limit {
            return Ok(());
        }
        captures_seen += 1;
        match &rnnbc {
            None => {
                let seqs: Vec<&[Complex<f32>]> =
                    (0..cap.n_subcarriers).map(|k| cap.subcarrier(k)).collect();
                for (k, (scheme, _)) in classify_subcarriers(&lwnn, &seqs)?.into_iter().enumerate() {
                    preds.push(scheme);
                    truths.push(cap.schemes[k]);
                    snrs.push(cap.snr_db[k] as f64);
                }
            }
            Some(rnnbc) => {
                let outcome = combined_classify(&lwnn, rnnbc, &cap)?;
                debug_assert_eq!(outcome.even_invocations, cap.n_subcarriers / 2);
                for k in 0..cap.n_subcarriers {
                    preds.push(outcome.schemes[k]);
                    truths.push(cap.schemes[k]);
                    snrs.push(cap.snr_db[k] as f64);
                    if k % 2 == 1 {
                        odd_total += 1;
                        if outcome.schemes[k] == cap.schemes[k] {
                            odd_hits += 1;
                        }
                    }
                }
            }
        }
        Ok(())
    })?;

    let overall = amc_core::eval::pcc(&preds, &truths)?;
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(
        args.out.join("pcc_overall.csv"),
        format!("mode,pcc,subcarriers,captures\n{},{overall:.6},{},{captures_seen}\n",
            if args.combined { "combined" } else { "lwnn-only" },
            preds.len()),
    )?;
    let by_snr = pcc_by_snr(&preds, &truths, &snrs)?;
    std::fs::write(args.out.join("pcc_vs_snr.csv"), pcc_by_snr_csv(&by_snr))?;
    let confusions = confusion_by_snr(&preds, &truths, &snrs)?;
    for (matrix, label) in confusions.iter().zip(SNR_BIN_LABELS) {
        std::fs::write(args.out.join(format!("confusion_{label}.csv")), matrix.to_csv())?;
    }
    if args.combined {
        let acc = odd_hits as f64 / odd_total.max(1) as f64;
        std::fs::write(
            args.out.join("rnnbc_odd_accuracy.csv"),
            format!("odd_accuracy,odd_subcarriers\n{acc:.6},{odd_total}\n"),
        )?;
        println!("odd-subcarrier accuracy (sequence model): {acc:.4}");
    }
    println!(
        "evaluated {captures_seen} captures, {} subcarriers: PCC {overall:.4} ({} classifier runs)",
        preds.len(),
        lwnn.invocation_count()
    );
    for (label, p, n) in &by_snr {
        println!("  {label:<9} pcc {p:.4}  ({n} samples)");
    }
    Ok(())
}
