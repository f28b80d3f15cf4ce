use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use broadcast_core::certify::Formulation;

mod commands;
mod report;

use report::RunReport;

#[derive(Parser)]
#[command(name = "broadcast", version, about = "Certify broadcast nonlocality of bipartite states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct LpFlags {
    /// LP formulation.
    #[arg(long, default_value = "vertex", value_parser = parse_formulation)]
    formulation: Formulation,
    /// Re-check the final LP basis in rational arithmetic.
    #[arg(long)]
    exact: bool,
}

#[derive(Args, Clone, Debug)]
struct RandomFlags {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the vertices of a no-signalling or local polytope.
    Vertices {
        #[arg(long, value_delimiter = ',', required = true)]
        inputs: Vec<usize>,
        /// Defaults to 2 for every party.
        #[arg(long, value_delimiter = ',')]
        outputs: Vec<usize>,
        /// `ns` or `local`.
        #[arg(long, default_value = "ns")]
        kind: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Behaviour of a scenario file and its inequality values.
    Evaluate {
        #[arg(long)]
        scenario: PathBuf,
        /// Builtin inequality to evaluate instead of the file's.
        #[arg(long)]
        inequality: Option<String>,
        /// Write the behaviour JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test the behaviour against the file's model. Exit code 2 when it is outside.
    Membership {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        lp: LpFlags,
        /// Write the separating inequality JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical visibility of the state against the file's noise.
    Visibility {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        lp: LpFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seesaw on the file's inequality, or the LP/seesaw visibility search with --global.
    Seesaw {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        random: RandomFlags,
        #[arg(long)]
        global: bool,
        /// Keep the file's channels; only measurements are optimized.
        #[arg(long)]
        fixed_channels: bool,
        #[arg(long)]
        max_sweeps: Option<usize>,
        /// With --global: perturb-and-descend attempts after each restart settles.
        #[arg(long, default_value_t = 0)]
        hops: usize,
        /// Write the search result JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate reference numbers and curves.
    Reproduce {
        #[command(subcommand)]
        what: Reproduce,
    },
}

#[derive(Subcommand)]
enum Reproduce {
    /// Critical visibilities of rho_alpha_theta over θ; CSV `theta,v_broadcast,v_chsh`.
    Fig2 {
        #[arg(long, default_value_t = 32)]
        steps: usize,
        #[command(flatten)]
        random: RandomFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Slopes and thresholds for the isotropic family.
    Isotropic {
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_formulation(s: &str) -> Result<Formulation, String> {
    s.parse().map_err(|_| format!("expected `vertex` or `hybrid`, got `{s}`"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let args: Vec<String> = std::env::args().skip(1).collect();
    match commands::run(cli.command, &args) {
        Ok((mut report, code)) => {
            report.wall_time_s = start.elapsed().as_secs_f64();
            match report_text(&report) {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::from(code)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn report_text(r: &RunReport) -> broadcast_core::Result<String> {
    broadcast_core::json::to_string(r)
}
