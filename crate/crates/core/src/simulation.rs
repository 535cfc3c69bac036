//! Deterministic discrete-event simulation of collaborative training.
//!
//! A run warm-starts the model on the first 10% of the training split,
//! hands the remaining samples alternately to the two agents, then executes
//! agent wakes in simulated-time order. Each wake performs a maintenance
//! scan (refunds, reports, stale claims) and at most one submission
//! attempt. Everything is driven by seeded RNG streams, so identical
//! configs produce identical event logs.

use std::collections::VecDeque;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::agents::{
    self, AgentProfile, AgentState, DepositDecision, Intent, SubmissionDecision,
};
use crate::data::{self, Corpus, DataError, SynthKind};
use crate::incentive::{self, IncentiveError, MicroUnits, TrainerConfig, TrainerState};
use crate::models::{LabeledSample, Model, ModelCheckpoint, ModelError, ModelKind};

pub const DEFAULT_METRICS_INTERVAL: u64 = 3_600;
pub const DEFAULT_HORIZON: u64 = 60 * 86_400;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Synthetic {
        kind: SynthKind,
        n: usize,
        dim: usize,
    },
    /// CSV file with header `text,label` (featurized with the given text
    /// featurizer) or `f1,...,f9,label` (taken as-is).
    Csv {
        path: PathBuf,
        featurizer: TextFeaturizer,
        vocab_size: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextFeaturizer {
    BigramTf,
    WordPresence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub model_kind: ModelKind,
    pub dataset: DatasetSpec,
    pub trainer: TrainerConfig,
    pub good: AgentProfile,
    pub bad: AgentProfile,
    pub seed: u64,
    /// Simulated seconds between metrics samples.
    pub metrics_interval: u64,
    /// Hard stop, in simulated seconds.
    pub horizon: u64,
}

impl SimulationConfig {
    pub fn new(model_kind: ModelKind, dataset: DatasetSpec, seed: u64) -> Self {
        SimulationConfig {
            model_kind,
            dataset,
            trainer: TrainerConfig::default(),
            good: AgentProfile::good(),
            bad: AgentProfile::bad(),
            seed,
            metrics_interval: DEFAULT_METRICS_INTERVAL,
            horizon: DEFAULT_HORIZON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsSample {
    pub time: u64,
    pub good_balance: MicroUnits,
    pub bad_balance: MicroUnits,
    pub accuracy: f64,
    pub updates: u64,
    pub refunds: u64,
    pub reports: u64,
    pub stale_claims: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSeries {
    pub samples: Vec<MetricsSample>,
    pub ideal_baseline_accuracy: f64,
}

#[derive(Debug)]
pub struct SimulationOutput {
    pub metrics: MetricsSeries,
    pub final_state: TrainerState,
    pub warmstart_checkpoint: ModelCheckpoint,
    pub final_accuracy: f64,
    pub end_time: u64,
    pub trainer_config: TrainerConfig,
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("dataset: {0}")]
    Data(#[from] DataError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("incentive: {0}")]
    Incentive(#[from] IncentiveError),
    #[error("warm-start slice contains a single class")]
    SingleClassWarmStart,
    #[error("training split too small")]
    TooFewSamples,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid config: {0}")]
    BadConfig(String),
}

pub fn build_corpus(spec: &DatasetSpec, seed: u64) -> Result<Corpus, DataError> {
    match spec {
        DatasetSpec::Synthetic { kind, n, dim } => data::synth_generate(*kind, *n, *dim, seed),
        DatasetSpec::Csv {
            path,
            featurizer,
            vocab_size,
        } => {
            let k = *vocab_size;
            match featurizer {
                TextFeaturizer::BigramTf => data::load_csv_corpus_path(path, move |train| {
                    let f = data::BigramTfFeaturizer::fit(train, k)?;
                    Ok(Box::new(move |t: &str| f.apply(t)))
                }),
                TextFeaturizer::WordPresence => data::load_csv_corpus_path(path, move |train| {
                    let f = data::WordPresenceFeaturizer::fit(train, k)?;
                    Ok(Box::new(move |t: &str| f.apply(t)))
                }),
            }
        }
    }
}

/// Test accuracy of a model trained offline on the full training split.
pub fn baseline_accuracy(
    kind: ModelKind,
    train: &[LabeledSample],
    test: &[LabeledSample],
) -> Result<f64, ModelError> {
    let model = Model::warm_start(kind, train)?;
    model.evaluate(test)
}

struct EventCounters {
    cursor: usize,
    updates: u64,
    refunds: u64,
    reports: u64,
    stale_claims: u64,
}

impl EventCounters {
    fn new() -> Self {
        EventCounters {
            cursor: 0,
            updates: 0,
            refunds: 0,
            reports: 0,
            stale_claims: 0,
        }
    }

    fn absorb(&mut self, state: &TrainerState) {
        for e in &state.events[self.cursor..] {
            if e.result == "ok" {
                match e.kind {
                    incentive::EventKind::AddData => self.updates += 1,
                    incentive::EventKind::Refund => self.refunds += 1,
                    incentive::EventKind::Report => self.reports += 1,
                    incentive::EventKind::ClaimStale => self.stale_claims += 1,
                    incentive::EventKind::Register => {}
                }
            }
        }
        self.cursor = state.events.len();
    }
}

pub fn run(config: &SimulationConfig) -> Result<SimulationOutput, SimulationError> {
    let corpus = build_corpus(&config.dataset, config.seed)?;
    run_with_corpus(config, &corpus)
}

/// Like [`run`] but on an already-materialized corpus, bypassing the
/// config's dataset source.
pub fn run_with_corpus(
    config: &SimulationConfig,
    corpus: &Corpus,
) -> Result<SimulationOutput, SimulationError> {
    if config.metrics_interval == 0 || config.horizon == 0 {
        return Err(SimulationError::BadConfig(
            "metrics_interval and horizon must be positive".into(),
        ));
    }
    if !config.good.validate() || !config.bad.validate() {
        return Err(SimulationError::BadConfig("invalid agent profile".into()));
    }
    let warm_len = (corpus.train.len() / 10).max(1);
    if corpus.train.len() < 2 || corpus.test.is_empty() {
        return Err(SimulationError::TooFewSamples);
    }
    let warm = &corpus.train[..warm_len];
    for class in 0..2u8 {
        if !warm.iter().any(|s| s.label == class) {
            return Err(SimulationError::SingleClassWarmStart);
        }
    }
    let model = Model::warm_start(config.model_kind, warm)?;
    let warmstart_checkpoint = model.snapshot();
    let baseline = baseline_accuracy(config.model_kind, &corpus.train, &corpus.test)?;

    let mut state = TrainerState::new(model, config.trainer.clone(), 0)?;
    state.register_account(&config.good.name, config.good.starting_balance)?;
    state.register_account(&config.bad.name, config.bad.starting_balance)?;

    // remaining training samples alternate between the two agents in
    // dataset order
    let mut queues: [VecDeque<LabeledSample>; 2] = [VecDeque::new(), VecDeque::new()];
    for (i, s) in corpus.train[warm_len..].iter().enumerate() {
        queues[i % 2].push_back(s.clone());
    }
    let [good_queue, bad_queue] = queues;
    let mut agents_state = [
        AgentState {
            profile: config.good.clone(),
            account: config.good.name.clone(),
            queue: good_queue,
            next_wake: 0,
            rng: ChaCha12Rng::seed_from_u64(config.seed.wrapping_add(0x600D)),
        },
        AgentState {
            profile: config.bad.clone(),
            account: config.bad.name.clone(),
            queue: bad_queue,
            next_wake: 0,
            rng: ChaCha12Rng::seed_from_u64(config.seed.wrapping_add(0xBAD)),
        },
    ];

    let mut counters = EventCounters::new();
    let mut samples = Vec::new();
    let mut next_sample_time = 0u64;
    let mut cached_accuracy = state.model.evaluate(&corpus.test)?;
    let mut accuracy_stale = false;
    let mut now: u64;

    fn refresh(
        model: &Model,
        test: &[LabeledSample],
        cache: &mut f64,
        stale: &mut bool,
    ) -> Result<(), ModelError> {
        if *stale {
            *cache = model.evaluate(test)?;
            *stale = false;
        }
        Ok(())
    }

    loop {
        // earliest wake; ties resolve to the good agent (index order)
        let idx = if agents_state[1].next_wake < agents_state[0].next_wake {
            1
        } else {
            0
        };
        let wake = agents_state[idx].next_wake;
        if wake > config.horizon {
            now = config.horizon;
            break;
        }
        now = wake;

        // metrics samples for every interval boundary reached
        while next_sample_time <= now {
            counters.absorb(&state);
            refresh(&state.model, &corpus.test, &mut cached_accuracy, &mut accuracy_stale)?;
            samples.push(MetricsSample {
                time: next_sample_time,
                good_balance: state.accounts[&config.good.name].balance,
                bad_balance: state.accounts[&config.bad.name].balance,
                accuracy: cached_accuracy,
                updates: counters.updates,
                refunds: counters.refunds,
                reports: counters.reports,
                stale_claims: counters.stale_claims,
            });
            next_sample_time += config.metrics_interval;
        }

        let account = agents_state[idx].account.clone();
        for intent in agents::maintenance_pass(&account, &state, now) {
            // individual failures are recorded in the event log, not fatal
            let res = match intent {
                Intent::Refund(id) => state.refund(&account, id, now).map(|_| ()),
                Intent::Report(id) => state.report(&account, id, now).map(|_| ()),
                Intent::ClaimStale(id) => state.claim_stale(&account, id, now).map(|_| ()),
            };
            let _ = res;
        }

        if !agents_state[idx].queue.is_empty() {
            refresh(&state.model, &corpus.test, &mut cached_accuracy, &mut accuracy_stale)?;
            let agent = &mut agents_state[idx];
            let decision =
                agents::decide_submission(&agent.profile, cached_accuracy, &mut agent.rng);
            if let SubmissionDecision::Submit { flip_label } = decision {
                let required = state.required_deposit(now);
                let deposit = agents::choose_deposit(
                    &agent.profile,
                    required,
                    config.trainer.min_deposit,
                    &mut agent.rng,
                );
                if let DepositDecision::Pay(amount) = deposit {
                    let sample = agent.queue.front().expect("queue checked non-empty");
                    let submitted = if flip_label {
                        sample.flipped()
                    } else {
                        sample.clone()
                    };
                    if state.add_data(&account, submitted, amount, now).is_ok() {
                        agent.queue.pop_front();
                        accuracy_stale = true;
                    }
                }
            }
        }

        let agent = &mut agents_state[idx];
        agent.next_wake = agents::next_wake(&agent.profile, now, &mut agent.rng);

        if agents_state[0].queue.is_empty() && agents_state[1].queue.is_empty() {
            let unresolved = state
                .contributions
                .values()
                .any(|c| !c.refunded && !c.closed);
            if !unresolved {
                break;
            }
        }
    }

    // closing metrics sample at the end time
    counters.absorb(&state);
    refresh(&state.model, &corpus.test, &mut cached_accuracy, &mut accuracy_stale)?;
    if samples.last().map(|s| s.time) != Some(now) {
        samples.push(MetricsSample {
            time: now,
            good_balance: state.accounts[&config.good.name].balance,
            bad_balance: state.accounts[&config.bad.name].balance,
            accuracy: cached_accuracy,
            updates: counters.updates,
            refunds: counters.refunds,
            reports: counters.reports,
            stale_claims: counters.stale_claims,
        });
    }

    Ok(SimulationOutput {
        metrics: MetricsSeries {
            samples,
            ideal_baseline_accuracy: baseline,
        },
        final_state: state,
        warmstart_checkpoint,
        final_accuracy: cached_accuracy,
        end_time: now,
        trainer_config: config.trainer.clone(),
    })
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// Write a file atomically: temp file in the same directory, then rename.
fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub const BALANCES_CSV_HEADER: &str =
    "time,good_balance,bad_balance,updates,refunds,reports,stale_claims";
pub const ACCURACY_CSV_HEADER: &str = "time,accuracy,baseline";

/// Write balances.csv, accuracy.csv, events.csv (plus a line-delimited text
/// log), the warm-start and final model checkpoints, the trainer config,
/// and a standalone plot script into `dir`. Idempotent: re-running yields
/// byte-identical files.
pub fn export(output: &SimulationOutput, dir: &Path) -> Result<(), SimulationError> {
    fs::create_dir_all(dir)?;

    let mut balances = String::from(BALANCES_CSV_HEADER);
    balances.push('\n');
    let mut accuracy = String::from(ACCURACY_CSV_HEADER);
    accuracy.push('\n');
    for s in &output.metrics.samples {
        balances.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.time, s.good_balance, s.bad_balance, s.updates, s.refunds, s.reports, s.stale_claims
        ));
        accuracy.push_str(&format!(
            "{},{},{}\n",
            s.time, s.accuracy, output.metrics.ideal_baseline_accuracy
        ));
    }
    write_atomic(&dir.join("balances.csv"), balances.as_bytes())?;
    write_atomic(&dir.join("accuracy.csv"), accuracy.as_bytes())?;
    write_atomic(
        &dir.join("events.csv"),
        incentive::events_to_csv(&output.final_state.events).as_bytes(),
    )?;
    write_atomic(
        &dir.join("events.txt"),
        incentive::events_to_text(&output.final_state.events).as_bytes(),
    )?;
    write_atomic(
        &dir.join("model_warmstart.ckpt"),
        output.warmstart_checkpoint.as_bytes(),
    )?;
    write_atomic(
        &dir.join("model_final.ckpt"),
        output.final_state.model.snapshot().as_bytes(),
    )?;
    write_atomic(&dir.join("model_final.txt"), output.final_state.model.to_text().as_bytes())?;
    let t = &output.trainer_config;
    let trainer_toml = format!(
        "refund_wait = {}\ntakeover_wait = {}\ndeposit_numerator = {}\nmin_deposit = {}\n",
        t.refund_wait, t.takeover_wait, t.deposit_numerator, t.min_deposit
    );
    write_atomic(&dir.join("trainer.toml"), trainer_toml.as_bytes())?;
    write_atomic(&dir.join("plot.py"), PLOT_SCRIPT.as_bytes())?;
    Ok(())
}

/// Replay the events.csv of an export directory against a fresh state built
/// from the exported warm-start checkpoint and trainer config. Returns the
/// replayed state for comparison with the exported final state.
pub fn replay_export_dir(dir: &Path) -> Result<TrainerState, SimulationError> {
    let ckpt = fs::read(dir.join("model_warmstart.ckpt"))?;
    let model = Model::restore(&ckpt)
        .map_err(|e| SimulationError::BadConfig(format!("warm-start checkpoint: {e}")))?;
    let trainer_text = fs::read_to_string(dir.join("trainer.toml"))?;
    let trainer: toml::Value = trainer_text
        .parse()
        .map_err(|e| SimulationError::BadConfig(format!("trainer.toml: {e}")))?;
    let get = |key: &str| -> Result<u64, SimulationError> {
        trainer
            .get(key)
            .and_then(|v| v.as_integer())
            .map(|v| v as u64)
            .ok_or_else(|| SimulationError::BadConfig(format!("trainer.toml missing {key}")))
    };
    let config = TrainerConfig {
        refund_wait: get("refund_wait")?,
        takeover_wait: get("takeover_wait")?,
        deposit_numerator: get("deposit_numerator")?,
        min_deposit: get("min_deposit")?,
    };
    let events_text = fs::read_to_string(dir.join("events.csv"))?;
    let events = incentive::events_from_csv(&events_text)
        .map_err(SimulationError::BadConfig)?;
    incentive::replay(model, config, 0, &events).map_err(SimulationError::BadConfig)
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Render balance and accuracy curves from the exported CSVs."""
import csv
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))

def read(name):
    with open(os.path.join(here, name)) as f:
        rows = list(csv.DictReader(f))
    return rows

balances = read("balances.csv")
accuracy = read("accuracy.csv")

DAY = 86400.0
MICRO = 1e6

fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(9, 7), sharex=True)

t = [float(r["time"]) / DAY for r in balances]
ax1.plot(t, [float(r["good_balance"]) / MICRO for r in balances], label="good agent")
ax1.plot(t, [float(r["bad_balance"]) / MICRO for r in balances], label="bad agent")
ax1.set_ylabel("balance (units)")
ax1.legend()
ax1.grid(True, alpha=0.3)

t = [float(r["time"]) / DAY for r in accuracy]
ax2.plot(t, [float(r["accuracy"]) for r in accuracy], label="test accuracy")
if accuracy:
    ax2.axhline(float(accuracy[0]["baseline"]), linestyle="--", color="gray",
                label="ideal baseline")
ax2.set_xlabel("simulated days")
ax2.set_ylabel("accuracy")
ax2.set_ylim(0, 1.05)
ax2.legend()
ax2.grid(True, alpha=0.3)

out = os.path.join(here, "simulation.png")
fig.tight_layout()
fig.savefig(out, dpi=150)
print(f"wrote {out}")
"#;
