use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = lth_cli::Cli::parse();
    if let Err(e) = lth_cli::execute(cli) {
        match &e {
            lth_cli::CliError::Usage(msg) => eprintln!("error: {msg}"),
            lth_cli::CliError::Runtime(err) => eprintln!("error: {err:#}"),
        }
        std::process::exit(e.exit_code());
    }
}
