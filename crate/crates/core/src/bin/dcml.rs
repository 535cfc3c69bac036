//! Command-line front end: run simulations, print gas estimates, replay
//! exported event logs, and generate synthetic corpora.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dcml::config::{self, FileConfig};
use dcml::data::{self, SynthKind};
use dcml::gascost::{self, GasCostModel, ScalePreset};
use dcml::models::{FeatureVector, ModelKind};
use dcml::simulation::{self, SimulationConfig, SimulationOutput};

#[derive(Parser)]
#[command(name = "dcml", about = "Deterministic simulator of collaborative model training with staked data contributions", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more seeded simulations and optionally export artifacts.
    Simulate(SimulateArgs),
    /// Print per-action gas estimates for the on-chain cost model.
    GasReport(GasReportArgs),
    /// Re-run an exported event log and verify it reproduces the run.
    Replay(ReplayArgs),
    /// Generate a synthetic corpus as CSV.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML config file; flags below override its values.
    #[arg(long, env = "DCML_CONFIG")]
    config: Option<PathBuf>,
    /// Model: perceptron, naive-bayes, or nearest-centroid.
    #[arg(long, env = "DCML_MODEL")]
    model: Option<String>,
    /// Use the sparse nearest-centroid representation.
    #[arg(long, conflicts_with = "dense")]
    sparse: bool,
    /// Use the dense nearest-centroid representation.
    #[arg(long)]
    dense: bool,
    /// RNG seed; repeat the flag to sweep several seeds in parallel.
    #[arg(long, env = "DCML_SEED", value_delimiter = ',')]
    seed: Vec<u64>,
    /// Output directory; each seed writes to <out>/seed-<n>/.
    #[arg(long, env = "DCML_OUT")]
    out: Option<PathBuf>,
    /// Synthetic dataset kind: separable, noisy, or text-like.
    #[arg(long, conflicts_with = "csv")]
    synth: Option<String>,
    /// Synthetic sample count.
    #[arg(long)]
    n: Option<usize>,
    /// Synthetic dimensionality.
    #[arg(long)]
    dim: Option<usize>,
    /// CSV corpus path (header `text,label` or `f1,...,f9,label`).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Text featurizer for CSV corpora: bigram-tf or word-presence.
    #[arg(long)]
    featurizer: Option<String>,
    /// Vocabulary size for text featurizers.
    #[arg(long)]
    vocab_size: Option<usize>,
    /// Simulated-seconds horizon.
    #[arg(long, env = "DCML_HORIZON")]
    horizon: Option<u64>,
    /// Simulated seconds between metrics samples.
    #[arg(long)]
    metrics_interval: Option<u64>,
}

#[derive(Args)]
struct GasReportArgs {
    /// Restrict to one model (default: all four variants).
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    sparse: bool,
    /// Dataset scale: fakenews, fitness, imdb, or synthetic.
    #[arg(long, default_value = "fakenews")]
    preset: String,
}

#[derive(Args)]
struct ReplayArgs {
    /// Directory produced by `simulate --out`.
    #[arg(long)]
    dir: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// separable, noisy, or text-like.
    #[arg(long, default_value = "separable")]
    kind: String,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 9)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::GasReport(args) => gas_report(args),
        Command::Replay(args) => replay(args),
        Command::Synth(args) => synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn merge_config(args: &SimulateArgs) -> Result<FileConfig, String> {
    let mut file = match &args.config {
        Some(path) => FileConfig::from_path(path).map_err(|e| e.to_string())?,
        None => FileConfig::default(),
    };
    if let Some(m) = &args.model {
        file.model = Some(m.clone());
    }
    if args.sparse {
        file.sparse = Some(true);
    }
    if args.dense {
        file.sparse = Some(false);
    }
    if let Some(h) = args.horizon {
        file.horizon = Some(h);
    }
    if let Some(i) = args.metrics_interval {
        file.metrics_interval = Some(i);
    }
    if let Some(k) = &args.synth {
        file.dataset.synth = Some(k.clone());
        file.dataset.csv = None;
    }
    if let Some(n) = args.n {
        file.dataset.n = Some(n);
    }
    if let Some(d) = args.dim {
        file.dataset.dim = Some(d);
    }
    if let Some(p) = &args.csv {
        file.dataset.csv = Some(p.clone());
        file.dataset.synth = None;
    }
    if let Some(f) = &args.featurizer {
        file.dataset.featurizer = Some(f.clone());
    }
    if let Some(v) = args.vocab_size {
        file.dataset.vocab_size = Some(v);
    }
    if let Some(o) = &args.out {
        file.out = Some(o.clone());
    }
    Ok(file)
}

fn summary_line(seed: u64, out: &SimulationOutput) -> String {
    let last = out.metrics.samples.last().expect("runs emit at least one sample");
    format!(
        "seed={} end={}s accuracy={:.4} baseline={:.4} good={:.3} bad={:.3} updates={} refunds={} reports={} stale={}",
        seed,
        out.end_time,
        out.final_accuracy,
        out.metrics.ideal_baseline_accuracy,
        last.good_balance as f64 / 1e6,
        last.bad_balance as f64 / 1e6,
        last.updates,
        last.refunds,
        last.reports,
        last.stale_claims,
    )
}

fn simulate(args: SimulateArgs) -> Result<(), String> {
    let file = merge_config(&args)?;
    let base = file.build().map_err(|e| e.to_string())?;
    let out_dir = file.out.clone();
    let seeds: Vec<u64> = if args.seed.is_empty() {
        vec![base.seed]
    } else {
        args.seed.clone()
    };

    // fan seeds out across threads; results are reported in seed order
    let results: Vec<(u64, Result<SimulationOutput, String>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let config = SimulationConfig { seed, ..base.clone() };
                scope.spawn(move || (seed, simulation::run(&config).map_err(|e| e.to_string())))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });

    let mut failures = 0;
    for (seed, result) in &results {
        match result {
            Ok(output) => {
                println!("{}", summary_line(*seed, output));
                if let Some(dir) = &out_dir {
                    let target = if results.len() == 1 {
                        dir.clone()
                    } else {
                        dir.join(format!("seed-{seed}"))
                    };
                    if let Err(e) = simulation::export(output, &target) {
                        eprintln!("seed={seed} export failed: {e}");
                        failures += 1;
                    } else {
                        println!("seed={} exported to {}", seed, target.display());
                    }
                }
            }
            Err(e) => {
                eprintln!("seed={seed} failed: {e}");
                failures += 1;
            }
        }
    }
    if failures > 0 {
        Err(format!("{failures} of {} runs failed", results.len()))
    } else {
        Ok(())
    }
}

fn gas_report(args: GasReportArgs) -> Result<(), String> {
    let preset = ScalePreset::from_name(&args.preset)
        .ok_or_else(|| format!("unknown preset {:?}", args.preset))?;
    let kinds: Vec<ModelKind> = match &args.model {
        Some(name) => vec![config::parse_model_kind(name, args.sparse).map_err(|e| e.to_string())?],
        None => {
            let ncc = if preset.sparse() {
                ModelKind::NearestCentroidSparse
            } else {
                ModelKind::NearestCentroidDense
            };
            vec![ModelKind::Perceptron, ModelKind::NaiveBayes, ncc]
        }
    };
    let m = GasCostModel::default();
    println!(
        "preset={} dimensionality={} active_features={}",
        preset.name(),
        preset.dimensionality(),
        preset.active_features()
    );
    println!("{:<24} {:>14} {:>12} {:>10} {:>10}", "model", "deploy", "update", "refund", "reward");
    for kind in kinds {
        let p = gascost::cost_profile(&m, kind, preset.dimensionality(), preset.active_features());
        println!(
            "{:<24} {:>14} {:>12} {:>10} {:>10}",
            kind.name(),
            p.deploy.gas,
            p.update.gas,
            p.refund.gas,
            p.reward.gas
        );
    }
    Ok(())
}

fn replay(args: ReplayArgs) -> Result<(), String> {
    let state = simulation::replay_export_dir(&args.dir).map_err(|e| e.to_string())?;
    let expected_ckpt = std::fs::read(args.dir.join("model_final.ckpt"))
        .map_err(|e| format!("model_final.ckpt: {e}"))?;
    let replayed = state.model.snapshot();
    if replayed.as_bytes() != expected_ckpt.as_slice() {
        return Err("replayed model checkpoint differs from export".into());
    }
    // final balances from the last metrics row must match the replayed state
    let balances = std::fs::read_to_string(args.dir.join("balances.csv"))
        .map_err(|e| format!("balances.csv: {e}"))?;
    let last = balances
        .lines()
        .last()
        .ok_or("balances.csv is empty")?;
    let fields: Vec<&str> = last.split(',').collect();
    if fields.len() < 3 {
        return Err("balances.csv: malformed final row".into());
    }
    let (good, bad) = (fields[1], fields[2]);
    for (name, expected) in [("good", good), ("bad", bad)] {
        let actual = state
            .accounts
            .get(name)
            .map(|a| a.balance.to_string())
            .ok_or_else(|| format!("replayed state missing account {name:?}"))?;
        if actual != expected {
            return Err(format!(
                "balance mismatch for {name}: replayed {actual}, exported {expected}"
            ));
        }
    }
    println!(
        "replay ok: {} events, final checkpoint and balances reproduced",
        state.events.len()
    );
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), String> {
    let kind = SynthKind::from_name(&args.kind)
        .ok_or_else(|| format!("unknown synthetic kind {:?}", args.kind))?;
    let corpus = data::synth_generate(kind, args.n, args.dim, args.seed).map_err(|e| e.to_string())?;
    let mut out = String::new();
    for i in 1..=args.dim {
        out.push_str(&format!("f{i},"));
    }
    out.push_str("label\n");
    for sample in corpus.train.iter().chain(corpus.test.iter()) {
        let mut dense = vec![0u64; args.dim];
        match &sample.features {
            FeatureVector::Dense(values) => dense.copy_from_slice(values),
            sparse => {
                for (i, v) in sparse.iter_nonzero() {
                    dense[i] = v;
                }
            }
        }
        for v in &dense {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{}\n", sample.label));
    }
    match &args.out {
        Some(path) => std::fs::write(path, out).map_err(|e| e.to_string())?,
        None => print!("{out}"),
    }
    Ok(())
}
