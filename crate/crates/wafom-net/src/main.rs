use std::process::ExitCode;

fn main() -> ExitCode {
    wafom_net::cli::run()
}
