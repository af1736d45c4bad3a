use clap::Parser;

use convkit::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let threads = cli.effective_threads();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("warning: could not configure thread pool: {e}");
    }
    std::process::exit(run(cli));
}
