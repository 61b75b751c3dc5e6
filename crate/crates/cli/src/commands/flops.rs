use amc_core::error::Result;
use amc_core::eval::{complexity_csv, flops_reduction_report, reference_table};
use amc_core::models::{build_lwnn, build_rnnbc};
use amc_core::nn::count_flops;
use std::path::PathBuf;

pub fn run(model: Option<bool>, table: bool, input_len: usize, out: Option<PathBuf>) -> Result<()> {
    let lwnn = build_lwnn::<f32>(input_len, 0)?;
    let rnnbc = build_rnnbc::<f32>(0);

    let mut csv_blobs: Vec<(String, String)> = Vec::new();
    match model {
        Some(true) => {
            let report = count_flops(&lwnn.spec(), lwnn.input_shape())?;
            println!("per-subcarrier classifier, input 2x{input_len}:");
            println!("{report}");
            csv_blobs.push(("flops_lwnn.csv".into(), flops_csv(&report)));
        }
        Some(false) => {
            let report = count_flops(&rnnbc.spec(), rnnbc.input_shape(32))?;
            println!("sequence classifier, 32 timesteps:");
            println!("{report}");
            csv_blobs.push(("flops_rnnbc.csv".into(), flops_csv(&report)));
        }
        None => {
            let report = flops_reduction_report(&lwnn, &rnnbc, 64)?;
            println!("{report}");
        }
    }
    if table {
        let rows = reference_table();
        println!("\nreference comparison over a 64-subcarrier frame (costs = parameter counts):");
        println!("{:<10} {:>10} {:>14} {:>14}", "model", "params", "alone", "with seq model");
        for r in &rows {
            println!("{:<10} {:>10} {:>14} {:>14}", r.name, r.params, r.alone, r.combined);
        }
        csv_blobs.push(("complexity_table.csv".into(), complexity_csv(&rows)));
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        for (name, blob) in csv_blobs {
            std::fs::write(dir.join(name), blob)?;
        }
    }
    Ok(())
}

fn flops_csv(report: &amc_core::nn::FlopsReport) -> String {
    let mut s = String::from("layer,output_shape,flops\n");
    for row in &report.rows {
        s.push_str(&format!("{},{},{}\n", row.name, row.output_shape, row.flops));
    }
    s.push_str(&format!("total,,{}\n", report.total));
    s
}
