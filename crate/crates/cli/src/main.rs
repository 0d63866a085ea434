use clap::Parser;

fn main() {
    let cli = match maskforge_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes; bad usage is a
            // validation failure (exit 1).
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(maskforge_cli::run(cli));
}
