use clap::Parser;
use dle_correspond::cli::{run, RunConfig};

fn main() {
    let cfg = RunConfig::parse();
    let out = run(&cfg);
    print!("{}", out.stdout);
    std::process::exit(out.code);
}
