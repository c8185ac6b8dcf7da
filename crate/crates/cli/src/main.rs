use clap::Parser;

use masknet_cli::commands::{execute, Cli};

fn main() {
    std::process::exit(execute(Cli::parse()));
}
