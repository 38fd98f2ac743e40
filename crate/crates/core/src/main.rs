use clap::Parser;

use hocrwl::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let mut out = std::io::stdout().lock();
    let code = run(&cli, &mut out).unwrap_or(2);
    std::process::exit(code);
}
