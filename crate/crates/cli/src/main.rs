use std::process::ExitCode;

use clap::Parser;
use sam_cli::{execute, prepare, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = prepare(&cli).and_then(|run| {
        if let Some(t) = run.cfg.raw("threads") {
            let threads = t.parse()?;
            rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
        }
        execute(cli.command, &run)
    });
    match result {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
