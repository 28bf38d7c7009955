use clap::Parser;
use gmi_perf::cli::{run, Cli, EXIT_ERROR};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // exit code 2 is reserved for compute-bound kernels
            std::process::exit(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    let code = run(cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
