//! Participant behavior policies: a careful "good" agent and an adversarial
//! "bad" agent, plus the maintenance scan both run on the trainer state.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::incentive::{ContributionId, MicroUnits, TrainerState, MICRO};
use crate::models::LabeledSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmitPolicy {
    /// P(submit) = min(1, accuracy + 0.15).
    AccuracyDependent,
    Always,
    /// Disabled agent: never submits (still runs maintenance).
    Never,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentProfile {
    pub name: String,
    pub starting_balance: MicroUnits,
    /// Mean of the per-submission deposit cap draw, in display units.
    pub max_deposit_mean: f64,
    pub max_deposit_std: f64,
    /// Mean seconds between wakes.
    pub mean_update_interval: f64,
    pub p_incorrect_label: f64,
    pub submit_policy: SubmitPolicy,
}

impl AgentProfile {
    pub fn good() -> Self {
        AgentProfile {
            name: "good".to_string(),
            starting_balance: 10_000 * MICRO,
            max_deposit_mean: 50.0,
            max_deposit_std: 10.0,
            mean_update_interval: 600.0,
            p_incorrect_label: 0.0001,
            submit_policy: SubmitPolicy::AccuracyDependent,
        }
    }

    pub fn bad() -> Self {
        AgentProfile {
            name: "bad".to_string(),
            starting_balance: 10_000 * MICRO,
            max_deposit_mean: 100.0,
            max_deposit_std: 3.0,
            mean_update_interval: 3_600.0,
            p_incorrect_label: 1.0,
            submit_policy: SubmitPolicy::Always,
        }
    }

    pub fn validate(&self) -> bool {
        (0.0..=1.0).contains(&self.p_incorrect_label)
            && self.max_deposit_std >= 0.0
            && self.mean_update_interval > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmissionDecision {
    Skip,
    Submit { flip_label: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepositDecision {
    Pay(MicroUnits),
    Defer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intent {
    Refund(ContributionId),
    Report(ContributionId),
    ClaimStale(ContributionId),
}

/// Whether to submit at this wake, and whether to corrupt the label.
pub fn decide_submission(
    profile: &AgentProfile,
    current_test_accuracy: f64,
    rng: &mut ChaCha12Rng,
) -> SubmissionDecision {
    let p_submit = match profile.submit_policy {
        SubmitPolicy::AccuracyDependent => (current_test_accuracy + 0.15).min(1.0),
        SubmitPolicy::Always => 1.0,
        SubmitPolicy::Never => return SubmissionDecision::Skip,
    };
    if !rng.gen_bool(p_submit) {
        return SubmissionDecision::Skip;
    }
    SubmissionDecision::Submit {
        flip_label: rng.gen_bool(profile.p_incorrect_label),
    }
}

/// Draw a fresh deposit cap and pay exactly the required amount when it
/// fits under the cap; otherwise wait for the requirement to fall.
pub fn choose_deposit(
    profile: &AgentProfile,
    required: MicroUnits,
    min_deposit: MicroUnits,
    rng: &mut ChaCha12Rng,
) -> DepositDecision {
    let normal = Normal::new(profile.max_deposit_mean, profile.max_deposit_std)
        .expect("std is non-negative");
    let drawn_units = normal.sample(rng);
    let cap = ((drawn_units * MICRO as f64).round() as i64).max(min_deposit as i64) as MicroUnits;
    if required <= cap {
        DepositDecision::Pay(required)
    } else {
        DepositDecision::Defer
    }
}

/// Next wake: exponential inter-arrival with the profile's mean, clamped to
/// at least one second.
pub fn next_wake(profile: &AgentProfile, now: u64, rng: &mut ChaCha12Rng) -> u64 {
    let exp = Exp::new(1.0 / profile.mean_update_interval).expect("positive mean");
    let delay = exp.sample(rng).round().max(1.0) as u64;
    now + delay
}

/// Scan the trainer state for actionable contributions, oldest first:
/// refunds on own verified-agreeing data, reports on others' disagreeing
/// data (once the agent has a verified tally), and stale sweeps.
pub fn maintenance_pass(account: &str, state: &TrainerState, now: u64) -> Vec<Intent> {
    let t = state.config.refund_wait;
    let ta = state.config.takeover_wait;
    let own_verified = state
        .accounts
        .get(account)
        .map(|a| a.verified_count)
        .unwrap_or(0);
    let mut intents = Vec::new();
    // contribution ids are assigned sequentially, so id order is age order
    for (&id, c) in &state.contributions {
        if c.refunded || c.closed {
            continue;
        }
        let elapsed = now.saturating_sub(c.submitted_at);
        if elapsed >= ta && c.remaining_deposit > 0 {
            intents.push(Intent::ClaimStale(id));
            continue;
        }
        if elapsed < t {
            continue;
        }
        let agrees = state
            .model
            .predict(&c.sample.features)
            .map(|p| p == c.sample.label)
            .unwrap_or(false);
        if c.contributor == account {
            if agrees && c.reporters_paid.is_empty() {
                intents.push(Intent::Refund(id));
            }
        } else if !agrees && own_verified >= 1 && !c.reporters_paid.contains(account) {
            intents.push(Intent::Report(id));
        }
    }
    intents
}

/// One agent's runtime state inside the simulation loop.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub profile: AgentProfile,
    pub account: String,
    /// Samples still to submit, front first; deferred samples stay at the
    /// front so each is submitted at most once.
    pub queue: VecDeque<LabeledSample>,
    pub next_wake: u64,
    pub rng: ChaCha12Rng,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn good_agent_submission_probability() {
        let good = AgentProfile::good();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        // accuracy 0.85 pushes the formula to 1.0: always submits
        for _ in 0..1000 {
            assert_ne!(
                decide_submission(&good, 0.85, &mut rng),
                SubmissionDecision::Skip
            );
        }
        // accuracy 0 floors at 0.15
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let submitted = (0..100_000)
            .filter(|_| decide_submission(&good, 0.0, &mut rng) != SubmissionDecision::Skip)
            .count();
        let rate = submitted as f64 / 100_000.0;
        assert!((rate - 0.15).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn good_agent_label_fidelity() {
        let good = AgentProfile::good();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut submissions = 0;
        let mut flips = 0;
        while submissions < 10_000 {
            if let SubmissionDecision::Submit { flip_label } =
                decide_submission(&good, 0.9, &mut rng)
            {
                submissions += 1;
                flips += flip_label as u64;
            }
        }
        let rate = flips as f64 / 10_000.0;
        assert!((0.0..=0.001).contains(&rate), "flip rate {rate}");
    }

    #[test]
    fn bad_agent_always_submits_flipped() {
        let bad = AgentProfile::bad();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..10_000 {
            assert_eq!(
                decide_submission(&bad, 0.0, &mut rng),
                SubmissionDecision::Submit { flip_label: true }
            );
        }
    }

    #[test]
    fn deposit_paid_exactly_when_under_cap() {
        let good = AgentProfile::good();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        // requirement far above any plausible cap draw
        for _ in 0..100 {
            assert_eq!(
                choose_deposit(&good, 10_000 * MICRO, MICRO, &mut rng),
                DepositDecision::Defer
            );
        }
        // requirement far below the cap
        for _ in 0..100 {
            assert_eq!(
                choose_deposit(&good, MICRO, MICRO, &mut rng),
                DepositDecision::Pay(MICRO)
            );
        }
    }

    #[test]
    fn deposit_cap_clamped_at_min() {
        // degenerate profile whose cap draws are strongly negative
        let profile = AgentProfile {
            max_deposit_mean: -1000.0,
            max_deposit_std: 0.1,
            ..AgentProfile::good()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        // cap clamps to min_deposit, so a required == min_deposit is paid
        assert_eq!(
            choose_deposit(&profile, MICRO, MICRO, &mut rng),
            DepositDecision::Pay(MICRO)
        );
    }

    #[test]
    fn next_wake_mean_and_clamp() {
        let good = AgentProfile::good();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 10_000;
        let mut sum = 0u64;
        for _ in 0..n {
            let w = next_wake(&good, 1000, &mut rng);
            assert!(w >= 1001);
            sum += w - 1000;
        }
        let mean = sum as f64 / n as f64;
        assert!((mean - 600.0).abs() <= 30.0, "mean {mean}");

        let bad = AgentProfile::bad();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..1000 {
            assert!(next_wake(&bad, 0, &mut rng) >= 1);
        }
    }

    #[test]
    fn maintenance_intents_respect_gates() {
        use crate::incentive::{TrainerConfig, TrainerState};
        use crate::models::{FeatureVector, LabeledSample, Model, ModelKind};
        let sample = |v: Vec<u64>, y: u8| {
            LabeledSample::new(FeatureVector::dense(v).unwrap(), y).unwrap()
        };
        let model = Model::warm_start(
            ModelKind::NearestCentroidDense,
            &[sample(vec![0, 0], 0), sample(vec![100, 100], 1)],
        )
        .unwrap();
        let mut st = TrainerState::new(model, TrainerConfig::default(), 0).unwrap();
        st.register_account("good", 10_000 * MICRO).unwrap();
        st.register_account("bad", 10_000 * MICRO).unwrap();
        let t = st.config.refund_wait;
        let ta = st.config.takeover_wait;
        // own agreeing contribution; rival disagreeing contribution
        let own = st.add_data("good", sample(vec![1, 1], 0), 50 * MICRO, 600).unwrap();
        let rival = st
            .add_data("bad", sample(vec![2, 2], 1), 100 * MICRO, 100_000)
            .unwrap();
        // before t: nothing actionable
        assert!(maintenance_pass("good", &st, 700).is_empty());
        // at t: refund intent for own; report blocked while n = 0
        let intents = maintenance_pass("good", &st, 100_000 + t);
        assert_eq!(intents, vec![Intent::Refund(own)]);
        st.refund("good", own, 600 + t).unwrap();
        let intents = maintenance_pass("good", &st, 100_000 + t);
        assert_eq!(intents, vec![Intent::Report(rival)]);
        // past t_a, remaining deposit becomes claimable by anyone
        let intents = maintenance_pass("bad", &st, 100_000 + ta);
        assert_eq!(intents, vec![Intent::ClaimStale(rival)]);
    }

    #[test]
    fn policies_deterministic_under_fixed_seed() {
        let good = AgentProfile::good();
        let run = |seed: u64| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            (0..100)
                .map(|i| {
                    (
                        decide_submission(&good, 0.5, &mut rng),
                        choose_deposit(&good, 25 * MICRO, MICRO, &mut rng),
                        next_wake(&good, i, &mut rng),
                    )
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(42), run(42));
    }
}
