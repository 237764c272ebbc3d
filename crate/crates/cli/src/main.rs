use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use contrarian::Weights;

mod stages;

/// Polarization scoring and contrarian recommendations for one topic
/// directory. Each stage reads the previous stages' files and writes its own.
#[derive(Debug, Parser)]
#[command(name = "contrarian", version)]
struct Cli {
    /// Directory holding the topic's inputs and stage artifacts.
    #[arg(long, global = true, default_value = ".")]
    topic_dir: PathBuf,

    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a planted two-sided dataset into the topic directory.
    Synth(SynthArgs),
    /// Load edges and shares, keep the largest connected component.
    Ingest(IngestArgs),
    /// Split the graph into sides X and Y.
    Partition(PartitionArgs),
    /// Pick hubs and compute hitting times and polarization scores.
    Score(ScoreArgs),
    /// Item polarity, exclusivity and popularity.
    Items,
    /// Fit the bucketed acceptance model.
    FitAcceptance(AcceptanceArgs),
    /// Topic vectors for users and items.
    Topics(TopicsArgs),
    /// Factor lists and aggregated recommendations.
    Recommend(RecommendArgs),
    /// Force-directed coordinates for the explorer.
    Layout(LayoutArgs),
    /// Assemble the artifacts into a bundle directory for the service.
    Bundle(BundleArgs),
    /// Serve one or more bundles over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 0.3)]
    p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    p_out: f64,
    /// Number of distinct links.
    #[arg(long, default_value_t = 60)]
    items: usize,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Edge CSV; defaults to `edges.csv` in the topic directory.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Share CSV; defaults to `shares.csv` in the topic directory.
    #[arg(long)]
    shares: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PartitionArgs {
    /// Use a `user,side` file instead of spectral bisection.
    #[arg(long)]
    assignment: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Hubs per side.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    k_hubs: u64,
}

#[derive(Debug, Args)]
struct AcceptanceArgs {
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    buckets: u64,
    /// Additive smoothing.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct TopicsArgs {
    /// `scope,key,entity` file used instead of the rule-based extractor;
    /// defaults to `annotations.csv` in the topic directory when present.
    #[arg(long)]
    annotations: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RecommendArgs {
    /// `uniform`, `contrarian`, `agreeable`, or five comma-separated numbers.
    #[arg(long, default_value = "uniform")]
    weights: Weights,
    /// Items per recommendation.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    top: u64,
    /// Print one user's recommendation instead of writing artifacts.
    #[arg(long)]
    user: Option<String>,
}

#[derive(Debug, Args)]
struct LayoutArgs {
    #[arg(long, default_value_t = 500)]
    iterations: usize,
}

#[derive(Debug, Args)]
struct BundleArgs {
    /// Output directory; defaults to `bundle` inside the topic directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Topic id; defaults to the topic directory's name.
    #[arg(long)]
    id: Option<String>,
    /// Display name; defaults to the id.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Default weights for requests that give none.
    #[arg(long, default_value = "uniform")]
    weights: Weights,
    /// Bundle directories; defaults to the topic directory's bundle.
    bundles: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match stages::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
