use clap::Parser;

use subg_rank::cli::{self, Cli, CliError};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SUBG_RANK_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };

    if let Err(err) = cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(match err {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        });
    }
}
