//! Deposit/refund/report escrow state machine gating model updates.
//!
//! All currency amounts are integer micro-units (1e-6 of one display unit)
//! so fund conservation is exact. Every operation attempt is appended to an
//! event log; replaying the successful events against a fresh state
//! reproduces the final state exactly.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::models::{FeatureError, FeatureVector, LabeledSample, Model};

/// Micro-units per display unit.
pub const MICRO: u64 = 1_000_000;

pub type MicroUnits = u64;
pub type AccountId = String;
pub type ContributionId = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    /// Minimum seconds before a contributor may reclaim a deposit (t).
    pub refund_wait: u64,
    /// Seconds after which anyone may sweep the remaining deposit (t_a).
    pub takeover_wait: u64,
    /// Numerator of the deposit schedule, in micro-unit-seconds.
    pub deposit_numerator: u64,
    /// Floor on the required deposit, in micro-units.
    pub min_deposit: MicroUnits,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            refund_wait: 86_400,
            takeover_wait: 777_600,
            deposit_numerator: 15_000_000_000,
            min_deposit: MICRO,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), IncentiveError> {
        if self.refund_wait == 0 || self.takeover_wait <= self.refund_wait {
            return Err(IncentiveError::BadConfig);
        }
        if self.min_deposit == 0 || self.deposit_numerator == 0 {
            return Err(IncentiveError::BadConfig);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContributorAccount {
    pub id: AccountId,
    pub balance: MicroUnits,
    /// n(c): successfully refunded contributions.
    pub verified_count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataContribution {
    pub id: ContributionId,
    pub contributor: AccountId,
    pub sample: LabeledSample,
    pub initial_deposit: MicroUnits,
    pub remaining_deposit: MicroUnits,
    pub submitted_at: u64,
    pub refunded: bool,
    pub reporters_paid: BTreeSet<AccountId>,
    pub closed: bool,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum IncentiveError {
    #[error("invalid trainer config")]
    BadConfig,
    #[error("invalid account id (use [A-Za-z0-9_-], non-empty)")]
    BadAccountId,
    #[error("account already registered")]
    DuplicateAccount,
    #[error("unknown account")]
    UnknownAccount,
    #[error("unknown contribution")]
    UnknownContribution,
    #[error("insufficient balance: have {have}, need {need}")]
    InsufficientBalance { have: MicroUnits, need: MicroUnits },
    #[error("deposit below requirement: offered {offered}, required {required}")]
    DepositTooLow {
        offered: MicroUnits,
        required: MicroUnits,
    },
    #[error("too early")]
    TooEarly,
    #[error("model disagrees with the contribution")]
    ModelDisagrees,
    #[error("model agrees with the contribution")]
    ModelAgrees,
    #[error("already refunded")]
    AlreadyRefunded,
    #[error("contribution closed")]
    Closed,
    #[error("caller is not the contributor")]
    WrongCaller,
    #[error("a reporter was already paid from this deposit")]
    ReporterPaid,
    #[error("reporter already paid")]
    AlreadyPaid,
    #[error("reporter has no verified contributions")]
    UnverifiedReporter,
    #[error("cannot report own contribution")]
    SelfReport,
    #[error("nothing remaining to claim")]
    ZeroRemaining,
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

impl IncentiveError {
    /// Stable short code used in the event log.
    pub fn code(&self) -> &'static str {
        match self {
            IncentiveError::BadConfig => "bad_config",
            IncentiveError::BadAccountId => "bad_account_id",
            IncentiveError::DuplicateAccount => "duplicate_account",
            IncentiveError::UnknownAccount => "unknown_account",
            IncentiveError::UnknownContribution => "unknown_contribution",
            IncentiveError::InsufficientBalance { .. } => "insufficient_balance",
            IncentiveError::DepositTooLow { .. } => "deposit_too_low",
            IncentiveError::TooEarly => "too_early",
            IncentiveError::ModelDisagrees => "model_disagrees",
            IncentiveError::ModelAgrees => "model_agrees",
            IncentiveError::AlreadyRefunded => "already_refunded",
            IncentiveError::Closed => "closed",
            IncentiveError::WrongCaller => "wrong_caller",
            IncentiveError::ReporterPaid => "reporter_paid",
            IncentiveError::AlreadyPaid => "already_paid",
            IncentiveError::UnverifiedReporter => "unverified_reporter",
            IncentiveError::SelfReport => "self_report",
            IncentiveError::ZeroRemaining => "zero_remaining",
            IncentiveError::Feature(_) => "feature_error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Register,
    AddData,
    Refund,
    Report,
    ClaimStale,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Register => "register",
            EventKind::AddData => "add_data",
            EventKind::Refund => "refund",
            EventKind::Report => "report",
            EventKind::ClaimStale => "claim_stale",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "register" => Some(EventKind::Register),
            "add_data" => Some(EventKind::AddData),
            "refund" => Some(EventKind::Refund),
            "report" => Some(EventKind::Report),
            "claim_stale" => Some(EventKind::ClaimStale),
            _ => None,
        }
    }
}

/// One operation attempt, successful or not.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub seq: u64,
    pub time: u64,
    pub kind: EventKind,
    pub caller: AccountId,
    pub contribution: Option<ContributionId>,
    /// Moved amount: deposit for add_data, payout for refund/report/claim,
    /// starting balance for register. Zero on failures.
    pub amount: MicroUnits,
    /// Sample carried by add_data events so the log alone can rebuild state.
    pub sample: Option<LabeledSample>,
    /// "ok" or a stable error code.
    pub result: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub model: Model,
    pub config: TrainerConfig,
    pub accounts: BTreeMap<AccountId, ContributorAccount>,
    pub contributions: BTreeMap<ContributionId, DataContribution>,
    pub last_update_time: u64,
    pub total_escrow: MicroUnits,
    pub events: Vec<EventRecord>,
    next_contribution_id: ContributionId,
    initial_total: MicroUnits,
}

impl TrainerState {
    pub fn new(model: Model, config: TrainerConfig, start_time: u64) -> Result<Self, IncentiveError> {
        config.validate()?;
        Ok(TrainerState {
            model,
            config,
            accounts: BTreeMap::new(),
            contributions: BTreeMap::new(),
            last_update_time: start_time,
            total_escrow: 0,
            events: Vec::new(),
            next_contribution_id: 0,
            initial_total: 0,
        })
    }

    fn log(
        &mut self,
        time: u64,
        kind: EventKind,
        caller: &str,
        contribution: Option<ContributionId>,
        sample: Option<LabeledSample>,
        outcome: &Result<MicroUnits, IncentiveError>,
    ) {
        let seq = self.events.len() as u64;
        self.events.push(EventRecord {
            seq,
            time,
            kind,
            caller: caller.to_string(),
            contribution,
            amount: *outcome.as_ref().unwrap_or(&0),
            sample,
            result: match outcome {
                Ok(_) => "ok".to_string(),
                Err(e) => e.code().to_string(),
            },
        });
    }

    pub fn register_account(
        &mut self,
        id: &str,
        starting_balance: MicroUnits,
    ) -> Result<(), IncentiveError> {
        let outcome = self.register_inner(id, starting_balance);
        let logged = outcome.as_ref().map(|_| starting_balance).map_err(Clone::clone);
        self.log(self.last_update_time, EventKind::Register, id, None, None, &logged);
        self.assert_consistency();
        outcome
    }

    fn register_inner(&mut self, id: &str, starting_balance: MicroUnits) -> Result<(), IncentiveError> {
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(IncentiveError::BadAccountId);
        }
        if self.accounts.contains_key(id) {
            return Err(IncentiveError::DuplicateAccount);
        }
        self.accounts.insert(
            id.to_string(),
            ContributorAccount {
                id: id.to_string(),
                balance: starting_balance,
                verified_count: 0,
            },
        );
        self.initial_total += starting_balance;
        Ok(())
    }

    /// Required deposit at `now`: inversely proportional to the time since
    /// the last model update, floored at `min_deposit`. Elapsed time is
    /// clamped to one second so same-timestamp submissions stay defined.
    pub fn required_deposit(&self, now: u64) -> MicroUnits {
        let elapsed = now.saturating_sub(self.last_update_time).max(1);
        (self.config.deposit_numerator / elapsed).max(self.config.min_deposit)
    }

    pub fn add_data(
        &mut self,
        contributor: &str,
        sample: LabeledSample,
        offered_deposit: MicroUnits,
        now: u64,
    ) -> Result<ContributionId, IncentiveError> {
        let outcome = self.add_data_inner(contributor, &sample, offered_deposit, now);
        let logged = outcome.as_ref().map(|_| offered_deposit).map_err(Clone::clone);
        let id = outcome.as_ref().ok().copied();
        self.log(now, EventKind::AddData, contributor, id, Some(sample), &logged);
        self.assert_consistency();
        outcome
    }

    fn add_data_inner(
        &mut self,
        contributor: &str,
        sample: &LabeledSample,
        offered_deposit: MicroUnits,
        now: u64,
    ) -> Result<ContributionId, IncentiveError> {
        sample.features.check_dim(self.model.dim())?;
        let required = self.required_deposit(now);
        if offered_deposit < required {
            return Err(IncentiveError::DepositTooLow {
                offered: offered_deposit,
                required,
            });
        }
        let account = self
            .accounts
            .get_mut(contributor)
            .ok_or(IncentiveError::UnknownAccount)?;
        if account.balance < offered_deposit {
            return Err(IncentiveError::InsufficientBalance {
                have: account.balance,
                need: offered_deposit,
            });
        }
        account.balance -= offered_deposit;
        let id = self.next_contribution_id;
        self.next_contribution_id += 1;
        self.contributions.insert(
            id,
            DataContribution {
                id,
                contributor: contributor.to_string(),
                sample: sample.clone(),
                initial_deposit: offered_deposit,
                remaining_deposit: offered_deposit,
                submitted_at: now,
                refunded: false,
                reporters_paid: BTreeSet::new(),
                closed: false,
            },
        );
        self.model.update(sample)?;
        self.last_update_time = now;
        self.total_escrow += offered_deposit;
        Ok(id)
    }

    pub fn refund(
        &mut self,
        contributor: &str,
        contribution: ContributionId,
        now: u64,
    ) -> Result<MicroUnits, IncentiveError> {
        let outcome = self.refund_inner(contributor, contribution, now);
        self.log(now, EventKind::Refund, contributor, Some(contribution), None, &outcome);
        self.assert_consistency();
        outcome
    }

    fn refund_inner(
        &mut self,
        contributor: &str,
        contribution: ContributionId,
        now: u64,
    ) -> Result<MicroUnits, IncentiveError> {
        if !self.accounts.contains_key(contributor) {
            return Err(IncentiveError::UnknownAccount);
        }
        let c = self
            .contributions
            .get(&contribution)
            .ok_or(IncentiveError::UnknownContribution)?;
        if c.contributor != contributor {
            return Err(IncentiveError::WrongCaller);
        }
        if c.refunded {
            return Err(IncentiveError::AlreadyRefunded);
        }
        if c.closed {
            return Err(IncentiveError::Closed);
        }
        if !c.reporters_paid.is_empty() {
            return Err(IncentiveError::ReporterPaid);
        }
        if now.saturating_sub(c.submitted_at) < self.config.refund_wait {
            return Err(IncentiveError::TooEarly);
        }
        if self.model.predict(&c.sample.features)? != c.sample.label {
            return Err(IncentiveError::ModelDisagrees);
        }
        let amount = c.remaining_deposit;
        let c = self.contributions.get_mut(&contribution).unwrap();
        c.remaining_deposit = 0;
        c.refunded = true;
        let account = self.accounts.get_mut(contributor).unwrap();
        account.balance += amount;
        account.verified_count += 1;
        self.total_escrow -= amount;
        Ok(amount)
    }

    pub fn report(
        &mut self,
        reporter: &str,
        contribution: ContributionId,
        now: u64,
    ) -> Result<MicroUnits, IncentiveError> {
        let outcome = self.report_inner(reporter, contribution, now);
        self.log(now, EventKind::Report, reporter, Some(contribution), None, &outcome);
        self.assert_consistency();
        outcome
    }

    fn report_inner(
        &mut self,
        reporter: &str,
        contribution: ContributionId,
        now: u64,
    ) -> Result<MicroUnits, IncentiveError> {
        let reporter_verified = self
            .accounts
            .get(reporter)
            .ok_or(IncentiveError::UnknownAccount)?
            .verified_count;
        let c = self
            .contributions
            .get(&contribution)
            .ok_or(IncentiveError::UnknownContribution)?;
        if c.contributor == reporter {
            return Err(IncentiveError::SelfReport);
        }
        if reporter_verified == 0 {
            return Err(IncentiveError::UnverifiedReporter);
        }
        if c.refunded {
            return Err(IncentiveError::AlreadyRefunded);
        }
        if c.closed {
            return Err(IncentiveError::Closed);
        }
        if c.reporters_paid.contains(reporter) {
            return Err(IncentiveError::AlreadyPaid);
        }
        if now.saturating_sub(c.submitted_at) < self.config.refund_wait {
            return Err(IncentiveError::TooEarly);
        }
        if self.model.predict(&c.sample.features)? == c.sample.label {
            return Err(IncentiveError::ModelAgrees);
        }
        let total_verified: u64 = self.accounts.values().map(|a| a.verified_count).sum();
        // reporter_verified >= 1, so total_verified >= 1
        let take = report_share(
            c.initial_deposit,
            reporter_verified,
            total_verified,
            c.remaining_deposit,
        );
        let c = self.contributions.get_mut(&contribution).unwrap();
        c.remaining_deposit -= take;
        c.reporters_paid.insert(reporter.to_string());
        // a fully drained contribution is terminal: nothing is left to
        // refund or sweep
        if c.remaining_deposit == 0 {
            c.closed = true;
        }
        self.accounts.get_mut(reporter).unwrap().balance += take;
        self.total_escrow -= take;
        Ok(take)
    }

    pub fn claim_stale(
        &mut self,
        claimant: &str,
        contribution: ContributionId,
        now: u64,
    ) -> Result<MicroUnits, IncentiveError> {
        let outcome = self.claim_stale_inner(claimant, contribution, now);
        self.log(now, EventKind::ClaimStale, claimant, Some(contribution), None, &outcome);
        self.assert_consistency();
        outcome
    }

    fn claim_stale_inner(
        &mut self,
        claimant: &str,
        contribution: ContributionId,
        now: u64,
    ) -> Result<MicroUnits, IncentiveError> {
        if !self.accounts.contains_key(claimant) {
            return Err(IncentiveError::UnknownAccount);
        }
        let c = self
            .contributions
            .get(&contribution)
            .ok_or(IncentiveError::UnknownContribution)?;
        if c.refunded {
            return Err(IncentiveError::AlreadyRefunded);
        }
        if c.closed {
            return Err(IncentiveError::Closed);
        }
        if now.saturating_sub(c.submitted_at) < self.config.takeover_wait {
            return Err(IncentiveError::TooEarly);
        }
        if c.remaining_deposit == 0 {
            return Err(IncentiveError::ZeroRemaining);
        }
        let amount = c.remaining_deposit;
        let c = self.contributions.get_mut(&contribution).unwrap();
        c.remaining_deposit = 0;
        c.closed = true;
        self.accounts.get_mut(claimant).unwrap().balance += amount;
        self.total_escrow -= amount;
        Ok(amount)
    }

    /// Sum of all account balances plus escrow; constant across operations.
    pub fn total_funds(&self) -> MicroUnits {
        self.accounts.values().map(|a| a.balance).sum::<u64>() + self.total_escrow
    }

    /// Escrow consistency and exact fund conservation, checked after every
    /// operation.
    fn assert_consistency(&self) {
        let escrow: u64 = self
            .contributions
            .values()
            .map(|c| c.remaining_deposit)
            .sum();
        assert_eq!(escrow, self.total_escrow, "escrow out of sync");
        assert_eq!(self.total_funds(), self.initial_total, "funds not conserved");
    }
}

// ---------------------------------------------------------------------------
// Event log serialization and replay
// ---------------------------------------------------------------------------

fn encode_features(f: &FeatureVector) -> String {
    match f {
        FeatureVector::Dense(v) => {
            let vals: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("D:{}", vals.join("|"))
        }
        FeatureVector::Sparse { dim, pairs } => {
            let vals: Vec<String> = pairs.iter().map(|(i, v)| format!("{i}={v}")).collect();
            format!("S:{dim}:{}", vals.join("|"))
        }
    }
}

fn decode_features(s: &str) -> Result<FeatureVector, String> {
    if let Some(rest) = s.strip_prefix("D:") {
        let vals: Result<Vec<u64>, _> = rest.split('|').map(|x| x.parse::<u64>()).collect();
        FeatureVector::dense(vals.map_err(|e| e.to_string())?).map_err(|e| e.to_string())
    } else if let Some(rest) = s.strip_prefix("S:") {
        let (dim_s, pairs_s) = rest.split_once(':').ok_or("missing sparse dim")?;
        let dim: usize = dim_s.parse().map_err(|_| "bad dim")?;
        let mut pairs = Vec::new();
        if !pairs_s.is_empty() {
            for p in pairs_s.split('|') {
                let (i, v) = p.split_once('=').ok_or("bad pair")?;
                pairs.push((
                    i.parse().map_err(|_| "bad index")?,
                    v.parse().map_err(|_| "bad value")?,
                ));
            }
        }
        FeatureVector::sparse(dim, pairs).map_err(|e| e.to_string())
    } else {
        Err(format!("unknown feature encoding: {s}"))
    }
}

pub const EVENT_CSV_HEADER: &str = "seq,time,kind,caller,contribution,amount,label,features,result";

/// One CSV line per event (no quoting needed: ids are restricted and the
/// feature encoding avoids commas).
pub fn event_to_csv(e: &EventRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        e.seq,
        e.time,
        e.kind.name(),
        e.caller,
        e.contribution.map(|c| c.to_string()).unwrap_or_default(),
        e.amount,
        e.sample.as_ref().map(|s| s.label.to_string()).unwrap_or_default(),
        e.sample.as_ref().map(|s| encode_features(&s.features)).unwrap_or_default(),
        e.result,
    )
}

pub fn event_from_csv(line: &str) -> Result<EventRecord, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 9 {
        return Err(format!("expected 9 fields, got {}", fields.len()));
    }
    let sample = if fields[7].is_empty() {
        None
    } else {
        let label: u8 = fields[6].parse().map_err(|_| "bad label")?;
        Some(LabeledSample::new(decode_features(fields[7])?, label).map_err(|e| e.to_string())?)
    };
    Ok(EventRecord {
        seq: fields[0].parse().map_err(|_| "bad seq")?,
        time: fields[1].parse().map_err(|_| "bad time")?,
        kind: EventKind::from_name(fields[2]).ok_or("bad kind")?,
        caller: fields[3].to_string(),
        contribution: if fields[4].is_empty() {
            None
        } else {
            Some(fields[4].parse().map_err(|_| "bad contribution id")?)
        },
        amount: fields[5].parse().map_err(|_| "bad amount")?,
        sample,
        result: fields[8].to_string(),
    })
}

pub fn events_to_csv(events: &[EventRecord]) -> String {
    let mut out = String::from(EVENT_CSV_HEADER);
    out.push('\n');
    for e in events {
        out.push_str(&event_to_csv(e));
        out.push('\n');
    }
    out
}

pub fn events_from_csv(text: &str) -> Result<Vec<EventRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == EVENT_CSV_HEADER => {}
        _ => return Err("bad event log header".to_string()),
    }
    lines.map(event_from_csv).collect()
}

/// Line-delimited structured-text rendering of the log, for debugging.
pub fn events_to_text(events: &[EventRecord]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&format!(
            "seq={} time={} kind={} caller={} contribution={} amount={} result={}\n",
            e.seq,
            e.time,
            e.kind.name(),
            e.caller,
            e.contribution.map(|c| c.to_string()).unwrap_or_else(|| "-".into()),
            e.amount,
            e.result,
        ));
    }
    out
}

/// Reporter payout: floor(initial_deposit * reporter_verified /
/// total_verified), clamped to what is left in escrow for the contribution.
/// Exact in u128, so no overflow for any representable fund amount.
pub fn report_share(
    initial_deposit: MicroUnits,
    reporter_verified: u64,
    total_verified: u64,
    remaining_deposit: MicroUnits,
) -> MicroUnits {
    debug_assert!(reporter_verified >= 1 && total_verified >= reporter_verified);
    let share =
        (initial_deposit as u128 * reporter_verified as u128 / total_verified.max(1) as u128) as u64;
    share.min(remaining_deposit)
}

/// Rebuild a trainer state by re-running the successful events of a log
/// against a fresh state seeded with the same starting model and config.
pub fn replay(
    model: Model,
    config: TrainerConfig,
    start_time: u64,
    events: &[EventRecord],
) -> Result<TrainerState, String> {
    let mut state = TrainerState::new(model, config, start_time).map_err(|e| e.to_string())?;
    for e in events {
        if e.result != "ok" {
            continue;
        }
        let outcome: Result<(), IncentiveError> = match e.kind {
            EventKind::Register => state.register_account(&e.caller, e.amount),
            EventKind::AddData => {
                let sample = e.sample.clone().ok_or("add_data event missing sample")?;
                state
                    .add_data(&e.caller, sample, e.amount, e.time)
                    .map(|_| ())
            }
            EventKind::Refund => state
                .refund(&e.caller, e.contribution.ok_or("missing contribution")?, e.time)
                .map(|_| ()),
            EventKind::Report => state
                .report(&e.caller, e.contribution.ok_or("missing contribution")?, e.time)
                .map(|_| ()),
            EventKind::ClaimStale => state
                .claim_stale(&e.caller, e.contribution.ok_or("missing contribution")?, e.time)
                .map(|_| ()),
        };
        outcome.map_err(|err| format!("replay diverged at seq {}: {err}", e.seq))?;
    }
    Ok(state)
}
