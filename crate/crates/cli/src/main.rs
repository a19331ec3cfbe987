use clap::Parser;
use perisem_cli::{exit_code, run, Cli, Outcome};

fn main() {
    let cli = Cli::parse();
    let result = run(cli);
    match &result {
        Err(e) => eprintln!("error: {e}"),
        Ok(Outcome::Fail) => eprintln!("verification failed"),
        Ok(Outcome::Pass) => {}
    }
    std::process::exit(exit_code(&result));
}
