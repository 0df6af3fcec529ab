use std::process::ExitCode;

use clap::Parser;
use uavpc::config::{parse_config, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = parse_config(&cli).and_then(|cfg| {
        let (report, files) = run(&cfg)?;
        for row in report.summary_rows()? {
            let s = &row.summary;
            println!(
                "{:<18} n={:<6} mean={:.3} p10={:.3} p50={:.3}",
                row.algorithm.to_string(),
                s.n,
                s.mean,
                s.percentiles[0],
                s.percentiles[2]
            );
        }
        if let Some(c) = report.clusters {
            println!("clusters: {c}");
        }
        for f in files {
            println!("wrote {}", f.display());
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("uavpc: {e}");
            ExitCode::FAILURE
        }
    }
}
