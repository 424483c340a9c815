//! `cw` — command-line front door for the wreath-metric pipelines.
//!
//! Subcommands load JSON descriptions of metric spaces, walls structures,
//! wreath instances, and finite groups, run the exact computations from
//! `cw-core`, and print deterministic reports: identical inputs (and seed,
//! where one applies) give identical output bytes. Plot data is plain
//! CSV/TSV for generic tooling; no plotting library is involved.
//!
//! Exit codes: 0 everything held, 1 a checked property failed, 2 the
//! input was unusable, 3 a size cap was exceeded.

mod commands;

use clap::{Parser, Subcommand};
use cw_core::CwError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cw",
    version,
    about = "Exact wreath-product metrics, walls embeddings, and box spaces"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
pub(crate) enum Cmd {
    /// Check the metric axioms of a JSON metric space.
    Validate {
        /// Metric JSON: {"points": [...], "dist": [[...], ...]}.
        file: PathBuf,
        /// Allow distinct points at distance zero.
        #[arg(long)]
        pseudo: bool,
    },
    /// Discreteness, diameter, and ball-growth numbers of a metric space.
    Geometry {
        file: PathBuf,
        /// Ball radius for the growth bound N(C), as a rational.
        #[arg(long, default_value = "1")]
        c: String,
    },
    /// Distance between two points of a wreath instance.
    WreathDist {
        instance: PathBuf,
        /// Point JSON: {"f": {"site": "value", ...}, "y": "label"}.
        point_a: PathBuf,
        point_b: PathBuf,
    },
    /// Operations on measured-walls structures.
    Walls {
        #[command(subcommand)]
        cmd: WallsCmd,
    },
    /// Assemble the comparison embedding on listed points; emit CSV + TSV.
    EmbedWreath {
        instance: PathBuf,
        /// Walls on the fiber space X.
        walls_x: PathBuf,
        /// Walls on the position space Y.
        walls_y: PathBuf,
        /// Walls on the index space Z.
        walls_z: PathBuf,
        /// JSON array of points.
        #[arg(long)]
        points: PathBuf,
        /// Directory receiving coords.csv and scatter.tsv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check both distortion bounds on a ball of a wreath instance.
    Certify {
        instance: PathBuf,
        walls_x: PathBuf,
        walls_y: PathBuf,
        walls_z: PathBuf,
        /// Grow the ball until it holds at least this many points.
        #[arg(long, default_value_t = 500)]
        min_points: usize,
    },
    /// Distance cloud of a ball with fitted envelopes; optional TSV dump.
    Compress {
        instance: PathBuf,
        walls_x: PathBuf,
        walls_y: PathBuf,
        walls_z: PathBuf,
        #[arg(long)]
        ball_radius: u32,
        /// Largest lamp support enumerated inside the ball.
        #[arg(long, default_value_t = 3)]
        support_cap: usize,
        /// Subsample the ball down to at most this many points (0 = keep all).
        #[arg(long, default_value_t = 400)]
        max_points: usize,
        /// Exponent r of the lower envelope (1/C)·d^r − D.
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        /// Directory receiving cloud.tsv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and check a tower of finite wreath quotients.
    Boxspace {
        /// Base group JSON.
        #[arg(long)]
        g: PathBuf,
        /// Base subgroup chain: levels split by ';', element indices by ','.
        #[arg(long)]
        k_chain: String,
        /// Integer-top moduli, e.g. "2,4,8". Mutually exclusive with --finite-top.
        #[arg(long)]
        n_chain: Option<String>,
        /// Fixed finite top group JSON. Mutually exclusive with --n-chain.
        #[arg(long)]
        finite_top: Option<PathBuf>,
        /// Radius of the word ball driving the separation check.
        #[arg(long, default_value_t = 6)]
        ball: u32,
        /// Largest level group order to materialize.
        #[arg(long, default_value_t = cw_core::group::FiniteWreathGroup::DEFAULT_CAP)]
        cap: u128,
        /// Directory receiving per-level embedding CSV files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in acceptance suite.
    Selftest {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Subcommand)]
pub(crate) enum WallsCmd {
    /// Pseudometric induced by the halfspace weights, as metric JSON.
    Metric { file: PathBuf },
    /// Exact factored L^p embedding, as CSV.
    Embed {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        p: u32,
    },
    /// Express a metric as a weighted cut sum, or certify impossibility.
    Decompose { file: PathBuf },
}

fn exit_code_for(e: &CwError) -> u8 {
    match e {
        CwError::Input(_) | CwError::Disconnected { .. } | CwError::NotNormal { .. } => 2,
        CwError::CapExceeded { .. } => 3,
        CwError::Internal(_) => 1,
    }
}

fn apply_thread_override() {
    if let Ok(raw) = std::env::var("CW_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    apply_thread_override();
    let cli = Cli::parse();
    match commands::run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
