// SPDX-License-Identifier: Apache-2.0

use std::process::ExitCode;

use clap::Parser;
use lrood_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(manifest) => {
            for name in manifest.outputs.keys() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lrood: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
