use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;
mod spec;

use spec::{parse_number, parse_positive};

/// Numerical laboratory for sharp Caffarelli-Kohn-Nirenberg constants on radial model spaces.
///
/// Exit codes: 0 success, 2 invalid input, 3 numerical failure.
#[derive(Parser, Debug)]
#[command(name = "ckn-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

/// Flags shared by every command. Without any parameter flags the point
/// (n, p, q, mu) = (4, 2, 2.5, 1) is used.
#[derive(Args, Debug)]
struct Common {
    #[arg(long, global = true)]
    n: Option<u32>,
    /// Decimal or fraction, e.g. 2.5 or 5/2.
    #[arg(long, global = true, value_parser = parse_number)]
    p: Option<String>,
    #[arg(long, global = true, value_parser = parse_number)]
    q: Option<String>,
    #[arg(long, global = true, value_parser = parse_number)]
    mu: Option<String>,
    /// JSON file with n, p, q, mu.
    #[arg(long, global = true)]
    params_file: Option<PathBuf>,
    /// euclidean:n=4, cone:n=4,c=0.5, envelope:n=4,b0=0.3 or table:path.csv,n=4.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Directory for output files [default: .]
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1e-10)]
    rel_tol: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derive and print the exponent set.
    Params,
    /// Optimal Euclidean constant by quadrature, beside the closed form.
    Copt {
        /// Value for the free argument of the closed form [default: nu]
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Quotient at the extremal against 1/C_opt, plus random bumps.
    ExtremalCheck {
        #[arg(long, value_delimiter = ',', default_value = "0.1,1,10", value_parser = parse_positive)]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        perturbations: u64,
        #[arg(long, default_value_t = 1e-2)]
        amplitude: f64,
    },
    /// Comparison curves F, G, H0 over a lambda grid.
    Curves {
        /// Constant as a multiple of C_opt.
        #[arg(long = "C-multiple", default_value_t = 1.0)]
        c_multiple: f64,
        /// [default: 13 log-spaced values in 1e-2..1e2]
        #[arg(long, value_delimiter = ',', value_parser = parse_positive)]
        lambdas: Option<Vec<f64>>,
    },
    /// Two-sided volume growth check with a PASS/FAIL verdict.
    VolumeBound {
        #[arg(long = "C-multiple", default_value_t = 1.0)]
        c_multiple: f64,
        #[arg(long = "C0", default_value_t = 1.0)]
        c0: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,10", value_parser = parse_positive)]
        rhos: Vec<f64>,
    },
    /// Doubling constant, origin density and implied best constant of a model.
    Audit,
    /// Minimize the quotient over the extremal family or a profile grid.
    Minimize(MinimizeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Simplex,
    Golden,
    CoordinateDescent,
}

#[derive(Args, Debug)]
struct MinimizeArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Simplex)]
    method: MethodArg,
    /// Seeds for random grid starts (coordinate descent only).
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 256)]
    grid_size: usize,
    #[arg(long, default_value_t = 50.0)]
    support_radius: f64,
    #[arg(long, default_value_t = 400)]
    max_iters: usize,
    /// [default: 1e-6 for coordinate descent, 1e-9 otherwise]
    #[arg(long)]
    f_tol: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    x_tol: f64,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ckn-lab: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
