use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dirac_phase::cli::{self, exit};
use dirac_phase::montecarlo::SweepAxis;
use dirac_phase::verify::{run_all, VerifyOptions};

#[derive(Parser, Debug)]
#[command(name = "dirac-phase", version, about = "Dirac phase statistics along noisy trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one ensemble; writes ensemble.csv and summary.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Estimate sigma at each N (= gamma T for OU, = T for Wiener); writes sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated, strictly increasing.
        #[arg(long)]
        n_values: String,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Fit sigma = a sqrt(N) + b to a sweep file; writes fit.csv.
    Fit {
        #[arg(long)]
        sweep_csv: PathBuf,
        /// Defaults to the sweep file's directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the acceptance checks and print a pass/fail table.
    Verify {
        /// Tenfold fewer Monte Carlo samples.
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn run(command: Command) -> dirac_phase::Result<i32> {
    match command {
        Command::Simulate { config, out_dir, workers } => {
            let out = cli::simulate_command(&config, &out_dir, workers)?;
            let m = out.moments;
            println!(
                "accepted {} rejected {}: mean {:+.6e} ± {:.2e}, variance {:.6e} ± {:.2e}",
                m.accepted, out.rejected, m.mean, m.stderr_mean, m.variance, m.stderr_variance
            );
            println!("wrote {} and {}", out.ensemble_path.display(), out.summary_path.display());
        }
        Command::Sweep { config, n_values, out_dir, workers } => {
            let n_values = cli::parse_n_values(&n_values)?;
            let (path, points, axis) = cli::sweep_command(&config, &n_values, &out_dir, workers)?;
            match axis {
                SweepAxis::TimeAtFixedRate => println!("N = gamma T with gamma fixed, T = N / gamma"),
                SweepAxis::Time => println!("N is the operational time T"),
            }
            for p in &points {
                println!("N = {:>10}  sigma = {:.6e} ± {:.2e}", p.n, p.sigma, p.sigma_stderr);
            }
            println!("wrote {}", path.display());
        }
        Command::Fit { sweep_csv, out_dir } => {
            let (path, fit) = cli::fit_command(&sweep_csv, out_dir.as_deref())?;
            println!("a = {:.10e}", fit.a);
            println!("b = {:.10e}", fit.b);
            println!("a_stderr = {:.3e}, b_stderr = {:.3e}, residual_norm = {:.3e}", fit.a_stderr, fit.b_stderr, fit.residual_norm);
            println!("wrote {}", path.display());
        }
        Command::Verify { quick, workers } => {
            let reports = run_all(&VerifyOptions { quick, workers })?;
            for r in &reports {
                println!("{r}");
            }
            let failed = reports.iter().filter(|r| !r.passed).count();
            println!("{} of {} criteria passed", reports.len() - failed, reports.len());
            if failed > 0 {
                return Ok(exit::VERIFY_FAILED);
            }
        }
    }
    Ok(exit::SUCCESS)
}

fn main() -> ExitCode {
    let args = match Cli::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { exit::VALIDATION } else { exit::SUCCESS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match run(args.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            cli::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
