use clap::Parser;

fn main() {
    let cli = tids::Cli::parse();
    if let Err(e) = tids::execute(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock()) {
        eprintln!("error: {e:#}");
        std::process::exit(tids::exit_code(&e));
    }
}
