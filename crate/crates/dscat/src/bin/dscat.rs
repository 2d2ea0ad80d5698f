use clap::Parser;

fn main() {
    let cli = dscat::cli::Cli::parse();
    match dscat::cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    }
}
