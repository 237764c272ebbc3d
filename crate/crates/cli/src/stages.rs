use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use contrarian::acceptance::{read_model, write_model};
use contrarian::artifacts::{self, files, require};
use contrarian::dataset::{load_edges, load_shares, write_edges, write_shares};
use contrarian::partition::{load_assignment, write_assignment};
use contrarian::recommend::AggregationConfig;
use contrarian::synth::write_synth_dataset;
use contrarian::topics::{Annotations, TextCorpus};
use contrarian::{
    compute_item_scores, compute_layout, fit_acceptance_model, largest_connected_component, partition, recommend,
    synth_dataset, top_k_hubs, AcceptanceConfig, Analysis, Bundle, BundleManifest, EndorsementGraph, LayoutConfig,
    Polarization, Real, RuleBasedExtractor, ShareTable, SolverConfig, SpectralConfig, SynthConfig,
};
use contrarian_server::AppState;

use crate::{Cli, Command};

const INGEST: &str = "ingest";
const PARTITION: &str = "partition";
const SCORE: &str = "score";
const ITEMS: &str = "items";
const FIT_ACCEPTANCE: &str = "fit-acceptance";
const TOPICS: &str = "topics";
const RECOMMEND: &str = "recommend";
const LAYOUT: &str = "layout";

pub fn run(cli: &Cli) -> Result<()> {
    let dir = cli.topic_dir.as_path();
    match &cli.command {
        Command::Synth(a) => synth(dir, a.n, a.p_in, a.p_out, a.items, cli.seed),
        Command::Ingest(a) => ingest(dir, a.edges.as_deref(), a.shares.as_deref()),
        Command::Partition(a) => partition_stage(dir, a.assignment.as_deref(), cli.seed),
        Command::Score(a) => score(dir, a.k_hubs as usize),
        Command::Items => items(dir),
        Command::FitAcceptance(a) => fit_acceptance(dir, a.buckets as usize, a.alpha),
        Command::Topics(a) => topics(dir, a.annotations.as_deref()),
        Command::Recommend(a) => recommend_stage(dir, &a.weights, a.top as usize, a.user.as_deref(), cli.seed),
        Command::Layout(a) => layout(dir, a.iterations, cli.seed),
        Command::Bundle(a) => bundle(dir, a.out.as_deref(), a.id.as_deref(), a.name.as_deref(), cli.seed),
        Command::Serve(a) => serve(dir, a.port, &a.weights, &a.bundles),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn synth(dir: &Path, n: usize, p_in: f64, p_out: f64, items: usize, seed: u64) -> Result<()> {
    let cfg = SynthConfig {
        n,
        p_in,
        p_out,
        seed,
        items,
        ..Default::default()
    };
    let data = synth_dataset(&cfg)?;
    write_synth_dataset(dir, &data)?;
    println!(
        "wrote {} users, {} edges, {} shares to {}",
        data.graph.len(),
        data.graph.edge_count(),
        data.shares.len(),
        dir.display()
    );
    Ok(())
}

fn ingest(dir: &Path, edges: Option<&Path>, shares: Option<&Path>) -> Result<()> {
    let edges = edges.map_or_else(|| dir.join(files::EDGES), Path::to_path_buf);
    let shares = shares.map_or_else(|| dir.join(files::SHARES), Path::to_path_buf);
    let (graph, dropped) = load_edges(&edges)?;
    let table = load_shares(&shares)?;
    let (component, excluded) = largest_connected_component(&graph)?;
    ensure_dir(dir)?;
    write_edges(&dir.join(files::GRAPH), &component)?;
    write_shares(&dir.join(files::CLEAN_SHARES), &table)?;
    artifacts::write_excluded(&dir.join(files::EXCLUDED), &excluded)?;
    println!(
        "{} users ({} outside the main component), {} edges, {} self-loops dropped, {} shares of {} links",
        component.len(),
        excluded.len(),
        component.edge_count(),
        dropped,
        table.len(),
        table.items().count()
    );
    Ok(())
}

fn load_graph(dir: &Path) -> Result<EndorsementGraph> {
    Ok(load_edges(&require(dir, files::GRAPH, INGEST)?)?.0)
}

fn load_clean_shares(dir: &Path) -> Result<ShareTable> {
    Ok(load_shares(&require(dir, files::CLEAN_SHARES, INGEST)?)?)
}

fn partition_stage(dir: &Path, assignment: Option<&Path>, seed: u64) -> Result<()> {
    let g = load_graph(dir)?;
    let sides = match assignment {
        Some(path) => load_assignment(path, &g)?,
        None => partition::<Real>(
            &g,
            &SpectralConfig {
                seed,
                ..Default::default()
            },
        )?,
    };
    write_assignment(&dir.join(files::SIDES), &sides)?;
    println!(
        "side X: {} users, side Y: {} users",
        sides.size(contrarian::Side::X),
        sides.size(contrarian::Side::Y)
    );
    Ok(())
}

fn score(dir: &Path, k: usize) -> Result<()> {
    let g = load_graph(dir)?;
    let sides = load_assignment(&require(dir, files::SIDES, PARTITION)?, &g)?;
    let (hx, hy) = top_k_hubs(&g, &sides, k)?;
    let pol = Polarization::<Real>::compute(&g, &hx, &hy, &SolverConfig::default())?;
    artifacts::write_hubs(&dir.join(files::HUBS), &g, &hx, &hy)?;
    artifacts::write_scores(&dir.join(files::SCORES), &pol, &sides)?;
    println!(
        "scored {} users against {} + {} hubs ({} and {} sweeps)",
        g.len(),
        hx.len(),
        hy.len(),
        pol.times_x.iterations,
        pol.times_y.iterations
    );
    Ok(())
}

fn items(dir: &Path) -> Result<()> {
    let g = load_graph(dir)?;
    let shares = load_clean_shares(dir)?;
    let sides = load_assignment(&require(dir, files::SIDES, PARTITION)?, &g)?;
    let pol = artifacts::read_scores::<Real>(&require(dir, files::SCORES, SCORE)?)?;
    let table = compute_item_scores(&shares, &pol.profile, &sides);
    artifacts::write_items(&dir.join(files::ITEMS), &table)?;
    println!(
        "{} items scored, {} without a scored sharer",
        table.len(),
        table.excluded.len()
    );
    Ok(())
}

fn fit_acceptance(dir: &Path, buckets: usize, alpha: f64) -> Result<()> {
    let g = load_graph(dir)?;
    let shares = load_clean_shares(dir)?;
    let pol = artifacts::read_scores::<Real>(&require(dir, files::SCORES, SCORE)?)?;
    let table = artifacts::read_items::<Real>(&require(dir, files::ITEMS, ITEMS)?, &shares)?;
    let model = fit_acceptance_model(&g, &shares, &pol.profile, &table, &AcceptanceConfig { buckets, alpha })?;
    write_model(&model, &dir.join(files::ENDORSED), &dir.join(files::EXPOSED))?;
    println!("acceptance model fitted over {buckets}x{buckets} buckets");
    Ok(())
}

fn topics(dir: &Path, annotations: Option<&Path>) -> Result<()> {
    let shares = load_clean_shares(dir)?;
    let texts_path = dir.join(files::TEXTS);
    let corpus = if texts_path.is_file() {
        TextCorpus::load(&texts_path)?
    } else {
        TextCorpus::default()
    };
    let default_ann = dir.join(files::ANNOTATIONS);
    let ann_path = annotations
        .map(Path::to_path_buf)
        .or_else(|| default_ann.is_file().then_some(default_ann));
    let ann = ann_path.as_deref().map(Annotations::load).transpose()?;
    let model = contrarian::topics::build_topic_model::<Real>(&corpus, &shares, ann.as_ref(), &RuleBasedExtractor);
    artifacts::write_topics(&dir.join(files::TOPICS), &model)?;
    println!(
        "topic vectors for {} users and {} items{}",
        model.users.len(),
        model.items.len(),
        if ann.is_some() { " (from annotations)" } else { "" }
    );
    Ok(())
}

/// Rebuilds the in-memory analysis from the stage artifacts.
fn load_analysis(dir: &Path) -> Result<Analysis> {
    let graph = load_graph(dir)?;
    let shares = load_clean_shares(dir)?;
    let excluded = artifacts::read_excluded(&require(dir, files::EXCLUDED, INGEST)?)?;
    let sides = load_assignment(&require(dir, files::SIDES, PARTITION)?, &graph)?;
    let (hubs_x, hubs_y) = artifacts::read_hubs(&require(dir, files::HUBS, SCORE)?)?;
    let polarization = artifacts::read_scores::<Real>(&require(dir, files::SCORES, SCORE)?)?;
    let items = artifacts::read_items::<Real>(&require(dir, files::ITEMS, ITEMS)?, &shares)?;
    let acceptance = read_model(
        &require(dir, files::ENDORSED, FIT_ACCEPTANCE)?,
        &require(dir, files::EXPOSED, FIT_ACCEPTANCE)?,
    )?;
    let topics = artifacts::read_topics::<Real>(&require(dir, files::TOPICS, TOPICS)?)?;
    Ok(Analysis {
        graph,
        excluded,
        shares,
        sides,
        hubs_x,
        hubs_y,
        polarization,
        items,
        acceptance,
        topics,
    })
}

fn recommend_stage(dir: &Path, weights: &contrarian::Weights, top: usize, user: Option<&str>, seed: u64) -> Result<()> {
    let analysis = load_analysis(dir)?;
    let cfg = AggregationConfig {
        seed,
        ..Default::default()
    };
    if let Some(user) = user {
        if !analysis.graph.contains(user) {
            bail!("unknown user `{user}`");
        }
        let lists = analysis.factor_lists(user)?;
        let rec = recommend(&lists, weights, top, &cfg, &analysis.shares)?;
        return print_recommendation(&analysis, &rec);
    }
    let lists = analysis.all_factor_lists()?;
    let recs = lists
        .iter()
        .map(|l| recommend(l, weights, top, &cfg, &analysis.shares))
        .collect::<contrarian::Result<Vec<_>>>()?;
    artifacts::write_factor_lists(&dir.join(files::FACTOR_LISTS), &lists)?;
    artifacts::write_recommendations(&dir.join(files::RECOMMENDATIONS), &recs)?;
    println!("recommendations for {} users", recs.len());
    Ok(())
}

fn print_recommendation(analysis: &Analysis, rec: &contrarian::Recommendation<Real>) -> Result<()> {
    let mut out = std::io::stdout().lock();
    let side = analysis.sides.side_of(rec.user.as_str()).map_or('?', |s| s.label());
    let rho = analysis.polarization.profile.rho(rec.user.as_str()).unwrap_or(0.0);
    writeln!(out, "user {} (side {side}, rho {rho:+.4})", rec.user)?;
    let weights: Vec<String> = rec.weights.iter().map(|w| format!("{w:.3}")).collect();
    writeln!(out, "weights {}", weights.join(" "))?;
    writeln!(out, "phi {}", rec.phi)?;
    for item in &rec.items {
        let positions: Vec<String> = item
            .breakdown
            .iter()
            .map(|c| match c.position {
                Some(p) => format!("{}#{p}", c.factor),
                None => format!("{}-", c.factor),
            })
            .collect();
        writeln!(out, "{:>2}. {}  [{}]", item.rank, item.item, positions.join(" "))?;
    }
    if rec.short_pool {
        writeln!(out, "(only {} candidate items)", rec.items.len())?;
    }
    Ok(())
}

fn layout(dir: &Path, iterations: usize, seed: u64) -> Result<()> {
    let g = load_graph(dir)?;
    let result = compute_layout::<Real>(
        &g,
        &LayoutConfig {
            seed,
            iterations,
            ..Default::default()
        },
    );
    contrarian::layout::write_layout(&dir.join(files::LAYOUT), &result)?;
    println!("laid out {} users", result.len());
    Ok(())
}

fn bundle(dir: &Path, out: Option<&Path>, id: Option<&str>, name: Option<&str>, seed: u64) -> Result<()> {
    let analysis = load_analysis(dir)?;
    let layout = contrarian::layout::read_layout::<Real>(&require(dir, files::LAYOUT, LAYOUT)?)?;
    let lists = artifacts::read_factor_lists(&require(dir, files::FACTOR_LISTS, RECOMMEND)?)?;
    let id = match id {
        Some(id) => id.to_owned(),
        None => topic_name(dir)?,
    };
    let about_path = dir.join(files::ABOUT);
    let about = if about_path.is_file() {
        Some(std::fs::read_to_string(&about_path).with_context(|| format!("reading {}", about_path.display()))?)
    } else {
        None
    };
    let manifest = BundleManifest {
        name: name.map_or_else(|| id.clone(), str::to_owned),
        id,
        users: analysis.graph.len(),
        edges: analysis.graph.edge_count(),
        side_x: analysis.sides.size(contrarian::Side::X),
        side_y: analysis.sides.size(contrarian::Side::Y),
        k_hubs: analysis.hubs_x.len(),
        seed,
    };
    let b = Bundle {
        manifest,
        graph: analysis.graph,
        shares: analysis.shares,
        sides: analysis.sides,
        hubs_x: analysis.hubs_x,
        hubs_y: analysis.hubs_y,
        polarization: analysis.polarization,
        items: analysis.items,
        acceptance: analysis.acceptance,
        layout,
        lists,
        about,
    };
    let out = out.map_or_else(|| dir.join("bundle"), Path::to_path_buf);
    b.save(&out)?;
    println!("bundle `{}` written to {}", b.manifest.id, out.display());
    Ok(())
}

fn topic_name(dir: &Path) -> Result<String> {
    let abs = std::path::absolute(dir).with_context(|| format!("resolving {}", dir.display()))?;
    match abs.file_name().and_then(|n| n.to_str()) {
        Some(n) if !n.is_empty() && n != "." => Ok(n.to_owned()),
        _ => bail!("cannot derive a topic id from {}; pass --id", dir.display()),
    }
}

fn serve(dir: &Path, port: u16, weights: &contrarian::Weights, bundles: &[PathBuf]) -> Result<()> {
    let dirs: Vec<PathBuf> = if bundles.is_empty() {
        vec![dir.join("bundle")]
    } else {
        bundles.to_vec()
    };
    for d in &dirs {
        if !d.join(files::MANIFEST).is_file() {
            bail!("no bundle at {}; run `bundle` first", d.display());
        }
    }
    let state = AppState::load(&dirs, *weights).map_err(anyhow::Error::msg)?;
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let runtime = tokio::runtime::Runtime::new().context("starting the async runtime")?;
    println!("serving {} topic(s) on http://{addr}", dirs.len());
    runtime.block_on(contrarian_server::serve(addr, Arc::new(state)))?;
    Ok(())
}
