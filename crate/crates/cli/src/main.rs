use clap::Parser;

fn main() {
    match hla_cli::run(hla_cli::Cli::parse()) {
        Ok(out) => print!("{out}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
