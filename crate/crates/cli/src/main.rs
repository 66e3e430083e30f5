use clap::Parser;
use swapgrid_cli::{run, Cli};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match run(&cli, args.into_iter().skip(1).collect()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(1);
        }
    }
}
