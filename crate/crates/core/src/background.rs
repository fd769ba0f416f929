//! Calibrated legitimate background traffic plus the counter-leakage
//! patterns that deliberately overlap fraud signatures, so no transaction
//! type, amount band, or temporal shape is exclusive to fraud.
//!
//! Volume is budgeted from the target illicit ratio: fraud patterns are
//! generated first, then background activity is scaled so that
//! fraud edges / total edges approximates the target, subject to the
//! per-account daily rate cap.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{AmountKind, GraphConfig, SalarySchedule};
use crate::model::{Graph, NodeIdx, NodeKind, PendingEdge, TxCategory};
use crate::rng::{RngStream, SeedTree};

#[derive(Debug, Error)]
pub enum BackgroundError {
    #[error("no amount parameters configured for `{0}`")]
    UnknownType(String),
    #[error("unknown counter-leakage kind `{0}`")]
    UnknownKind(String),
    #[error("target illicit ratio {0} outside (0, 1)")]
    InvalidRatio(f64),
    #[error("amount calibration: {0}")]
    Calibration(String),
}

/// Clipped log-normal samplers per transaction type plus the structuring
/// overlay band. Amounts leave this type as integer cents.
pub struct AmountModel {
    samplers: BTreeMap<AmountKind, (LogNormal<f64>, f64, f64)>,
    structuring_lo_cents: i64,
    structuring_hi_cents: i64,
    overlay_share: f64,
}

impl AmountModel {
    pub fn from_config(cfg: &GraphConfig) -> Result<Self, BackgroundError> {
        let mut samplers = BTreeMap::new();
        for (kind, p) in &cfg.amount_params {
            if p.sigma < 0.6 {
                return Err(BackgroundError::Calibration(format!(
                    "sigma for {} is {}; heavy-tailed calibration requires sigma >= 0.6",
                    kind.label(),
                    p.sigma
                )));
            }
            if p.min >= p.max {
                return Err(BackgroundError::Calibration(format!(
                    "clip bounds for {} must satisfy min < max",
                    kind.label()
                )));
            }
            let dist = LogNormal::new(p.mu, p.sigma)
                .map_err(|e| BackgroundError::Calibration(e.to_string()))?;
            samplers.insert(*kind, (dist, p.min, p.max));
        }
        Ok(Self {
            samplers,
            structuring_lo_cents: crate::config::to_cents(cfg.structuring.range.lo()),
            structuring_hi_cents: crate::config::to_cents(cfg.structuring.range.hi()),
            overlay_share: cfg.structuring.overlay_share,
        })
    }

    /// exp(N(mu, sigma^2)) clipped to the type's [min, max], in cents.
    pub fn sample_amount(
        &self,
        kind: AmountKind,
        rng: &mut RngStream,
    ) -> Result<i64, BackgroundError> {
        let (dist, min, max) = self
            .samplers
            .get(&kind)
            .ok_or_else(|| BackgroundError::UnknownType(kind.label().to_string()))?;
        let units = dist.sample(rng).clamp(*min, *max);
        Ok((units * 100.0).round() as i64)
    }

    /// Uniform draw over the structuring band, in cents.
    pub fn sample_structuring_amount(&self, rng: &mut RngStream) -> i64 {
        if self.structuring_lo_cents >= self.structuring_hi_cents {
            return self.structuring_lo_cents;
        }
        rng.random_range(self.structuring_lo_cents..=self.structuring_hi_cents)
    }

    /// The random-everyday amount path: a configured share of draws falls in
    /// the structuring band instead of the log-normal body.
    pub fn sample_with_overlay(
        &self,
        kind: AmountKind,
        rng: &mut RngStream,
    ) -> Result<i64, BackgroundError> {
        if self.overlay_share > 0.0 && rng.random::<f64>() < self.overlay_share {
            Ok(self.sample_structuring_amount(rng))
        } else {
            self.sample_amount(kind, rng)
        }
    }
}

/// The seven counter-leakage patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterLeakageKind {
    Bursts,
    Chains,
    RapidFlow,
    CashOps,
    Structuring,
    HighRiskActivity,
    Periodic,
}

impl CounterLeakageKind {
    pub const ALL: [CounterLeakageKind; 7] = [
        CounterLeakageKind::Bursts,
        CounterLeakageKind::Chains,
        CounterLeakageKind::RapidFlow,
        CounterLeakageKind::CashOps,
        CounterLeakageKind::Structuring,
        CounterLeakageKind::HighRiskActivity,
        CounterLeakageKind::Periodic,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CounterLeakageKind::Bursts => "bursts",
            CounterLeakageKind::Chains => "chains",
            CounterLeakageKind::RapidFlow => "rapid_flow",
            CounterLeakageKind::CashOps => "cash_ops",
            CounterLeakageKind::Structuring => "structuring",
            CounterLeakageKind::HighRiskActivity => "high_risk_activity",
            CounterLeakageKind::Periodic => "periodic",
        }
    }
}

impl std::str::FromStr for CounterLeakageKind {
    type Err = BackgroundError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CounterLeakageKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| BackgroundError::UnknownKind(s.to_string()))
    }
}

/// Account pools background generators draw from. Built once per run after
/// pattern injection so fraud labels are final.
pub struct BackgroundPools {
    /// Regular accounts of non-fraudulent owners.
    pub legit_accounts: Vec<NodeIdx>,
    /// Regular accounts flagged by pattern participation.
    pub fraud_accounts: Vec<NodeIdx>,
    /// legit + a sampled subset of fraud accounts (the active set `A`).
    pub active_accounts: Vec<NodeIdx>,
    /// Regular accounts owned by businesses (payment destinations).
    pub business_accounts: Vec<NodeIdx>,
    /// Accounts of high-paid individuals and businesses with >10 employees.
    pub high_value_accounts: Vec<NodeIdx>,
    /// Accounts of non-fraud entities in any high-risk cluster.
    pub high_risk_legit_accounts: Vec<NodeIdx>,
    /// Non-fraudulent businesses (salary payers).
    pub legit_businesses: Vec<NodeIdx>,
    /// Non-fraudulent individuals (salary recipients).
    pub legit_individuals: Vec<NodeIdx>,
}

fn shuffle_in_place(items: &mut [NodeIdx], rng: &mut RngStream) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

impl BackgroundPools {
    pub fn build(graph: &Graph, cfg: &GraphConfig, rng: &mut RngStream) -> Self {
        let mut legit_accounts = Vec::new();
        let mut fraud_accounts = Vec::new();
        let mut business_accounts = Vec::new();
        let mut high_value_accounts = Vec::new();
        let mut legit_businesses = Vec::new();
        let mut legit_individuals = Vec::new();

        for node in &graph.nodes {
            match &node.kind {
                NodeKind::Individual { occupation, .. } => {
                    if !node.is_fraudulent {
                        legit_individuals.push(node.idx);
                    }
                    if crate::catalog::OCCUPATIONS[*occupation as usize].high_paid {
                        high_value_accounts.extend_from_slice(graph.owner_accounts(node.idx));
                    }
                }
                NodeKind::Business { employees, .. } => {
                    if !node.is_fraudulent {
                        legit_businesses.push(node.idx);
                    }
                    business_accounts.extend_from_slice(graph.owner_accounts(node.idx));
                    if *employees > 10 {
                        high_value_accounts.extend_from_slice(graph.owner_accounts(node.idx));
                    }
                }
                _ => {}
            }
        }
        for &account in &graph.regular_accounts {
            if graph.nodes[account as usize].is_fraudulent {
                fraud_accounts.push(account);
            } else {
                legit_accounts.push(account);
            }
        }

        // Mix a sampled share of fraud accounts into the active set so fraud
        // entities are not topologically isolated from normal traffic.
        let mix =
            rng.random_range(cfg.background.fraud_mixing.lo()..=cfg.background.fraud_mixing.hi());
        let take = ((fraud_accounts.len() as f64) * mix).round() as usize;
        let mut mixed = fraud_accounts.clone();
        shuffle_in_place(&mut mixed, rng);
        mixed.truncate(take);
        let mut active_accounts = legit_accounts.clone();
        active_accounts.extend(mixed);

        let mut high_risk_legit_accounts = Vec::new();
        for cluster in [
            crate::model::ClusterId::HighRiskAge,
            crate::model::ClusterId::HighRiskOccupation,
            crate::model::ClusterId::HighRiskJurisdiction,
            crate::model::ClusterId::CashIntensiveBusiness,
            crate::model::ClusterId::VerySmallCompany,
        ] {
            for &entity in &graph.clusters[&cluster] {
                if !graph.nodes[entity as usize].is_fraudulent {
                    high_risk_legit_accounts.extend_from_slice(graph.owner_accounts(entity));
                }
            }
        }
        high_risk_legit_accounts.sort_unstable();
        high_risk_legit_accounts.dedup();

        Self {
            legit_accounts,
            fraud_accounts,
            active_accounts,
            business_accounts,
            high_value_accounts,
            high_risk_legit_accounts,
            legit_businesses,
            legit_individuals,
        }
    }

    /// Pool for one counter-leakage kind: all legit accounts plus a per-kind
    /// sampled share (50-90% by default) of the fraud accounts.
    fn counter_pool(&self, cfg: &GraphConfig, rng: &mut RngStream) -> Vec<NodeIdx> {
        let mix =
            rng.random_range(cfg.background.fraud_mixing.lo()..=cfg.background.fraud_mixing.hi());
        let take = ((self.fraud_accounts.len() as f64) * mix).round() as usize;
        let mut mixed = self.fraud_accounts.clone();
        shuffle_in_place(&mut mixed, rng);
        mixed.truncate(take);
        let mut pool = self.legit_accounts.clone();
        pool.extend(mixed);
        pool
    }
}

/// How the background edge budget is split, and the rate that realizes it.
#[derive(Debug, Clone, Serialize)]
pub struct BackgroundBudget {
    pub total_target_edges: u64,
    pub background_target: u64,
    pub alloc_random: u64,
    pub alloc_salaries: u64,
    pub alloc_high_value: u64,
    pub alloc_fraudster: u64,
    pub alloc_counter_leakage: BTreeMap<String, u64>,
    /// min(cap, rate that realizes the random allocation).
    pub effective_daily_rate: f64,
    pub rate_cap_binds: bool,
    pub achievable_ratio: f64,
    pub warnings: Vec<String>,
}

/// Derives the background budget from the fraud edge count and target
/// ratio: total = round(F / ratio), background = total - F, split by the
/// configured proportions, with the per-account daily rate cap applied.
pub fn compute_background_budget(
    cfg: &GraphConfig,
    fraud_edges: u64,
    active_accounts: usize,
    fraud_accounts: usize,
    days: i64,
) -> Result<BackgroundBudget, BackgroundError> {
    let ratio = cfg.target_illicit_ratio;
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(BackgroundError::InvalidRatio(ratio));
    }
    let cap = cfg.per_account_daily_rate_cap;
    let capacity = (cap * days as f64 * active_accounts as f64).floor() as u64;
    let mut warnings = Vec::new();

    let (total_target, background_target) = if fraud_edges == 0 {
        warnings.push(
            "no fraud edges; illicit-ratio targeting disabled, generating at the rate cap".into(),
        );
        (capacity, capacity)
    } else {
        let total = (fraud_edges as f64 / ratio).round() as u64;
        (total, total - fraud_edges)
    };

    let alloc_random = (background_target as f64 * cfg.background.allocation_random).floor() as u64;
    let alloc_salaries =
        (background_target as f64 * cfg.background.allocation_salaries).floor() as u64;
    let alloc_high_value =
        (background_target as f64 * cfg.background.allocation_high_value).floor() as u64;
    let remainder = background_target
        .saturating_sub(alloc_random)
        .saturating_sub(alloc_salaries)
        .saturating_sub(alloc_high_value);

    let denom = (days as f64 * active_accounts as f64).max(1.0);
    let rate_needed = alloc_random as f64 / denom;
    let effective_daily_rate = rate_needed.min(cap);
    let rate_cap_binds = rate_needed > cap;

    let fraudster_formula =
        fraud_accounts as u64 * 1u64.max((effective_daily_rate * days as f64).floor() as u64);
    let alloc_fraudster = fraudster_formula.min(remainder);
    let cl_total = remainder - alloc_fraudster;
    let mut alloc_counter_leakage = BTreeMap::new();
    let kinds = CounterLeakageKind::ALL;
    for (i, kind) in kinds.iter().enumerate() {
        let share =
            cl_total / kinds.len() as u64 + u64::from((i as u64) < cl_total % kinds.len() as u64);
        alloc_counter_leakage.insert(kind.label().to_string(), share);
    }

    let achievable_background = if rate_cap_binds {
        let random_possible = (effective_daily_rate * denom).floor() as u64;
        background_target - (alloc_random - random_possible)
    } else {
        background_target
    };
    let achievable_ratio = if fraud_edges == 0 {
        0.0
    } else {
        fraud_edges as f64 / (fraud_edges + achievable_background) as f64
    };
    if rate_cap_binds {
        warnings.push(format!(
            "per-account daily rate cap {cap} binds; nearest achievable illicit ratio is {achievable_ratio:.6} (target {ratio})"
        ));
    }

    Ok(BackgroundBudget {
        total_target_edges: total_target,
        background_target,
        alloc_random,
        alloc_salaries,
        alloc_high_value,
        alloc_fraudster,
        alloc_counter_leakage,
        effective_daily_rate,
        rate_cap_binds,
        achievable_ratio,
        warnings,
    })
}

fn uniform_time(window: (i64, i64), rng: &mut RngStream) -> i64 {
    rng.random_range(window.0..window.1)
}

/// A timestamp during business hours on a uniformly chosen simulation day.
fn business_hours_time(window: (i64, i64), hours: (u32, u32), rng: &mut RngStream) -> i64 {
    let days = ((window.1 - window.0) / 86_400).max(1);
    let day = rng.random_range(0..days);
    let second = rng.random_range((hours.0 as i64 * 3600)..(hours.1 as i64 * 3600));
    (window.0 + day * 86_400 + second).min(window.1 - 1)
}

/// Draws a transaction category per the configured background weights.
struct CategorySampler {
    kinds: Vec<AmountKind>,
    index: WeightedIndex<f64>,
}

impl CategorySampler {
    fn new(cfg: &GraphConfig) -> Self {
        let kinds: Vec<AmountKind> = cfg.background_weights.keys().copied().collect();
        let index = WeightedIndex::new(cfg.background_weights.values().copied())
            .expect("weights validated at config load");
        Self { kinds, index }
    }

    fn sample(&self, rng: &mut RngStream) -> AmountKind {
        self.kinds[rng.sample(&self.index)]
    }
}

/// Edge category carried by transactions of a given amount kind.
pub fn category_of(kind: AmountKind) -> TxCategory {
    match kind {
        AmountKind::Payment => TxCategory::Payment,
        AmountKind::Transfer => TxCategory::Transfer,
        AmountKind::Withdrawal => TxCategory::Withdrawal,
        AmountKind::Deposit => TxCategory::Deposit,
        AmountKind::Salary => TxCategory::Salary,
        AmountKind::HighValue => TxCategory::Transfer,
    }
}

/// One random-everyday transaction for `account`, shaped by the drawn type.
fn everyday_edge(
    graph: &Graph,
    pools: &BackgroundPools,
    account: NodeIdx,
    kind: AmountKind,
    amount: i64,
    at: i64,
    rng: &mut RngStream,
) -> PendingEdge {
    match kind {
        AmountKind::Payment => {
            let dst = pools.business_accounts[rng.random_range(0..pools.business_accounts.len())];
            PendingEdge::transaction(account, dst, amount, at, TxCategory::Payment, false)
        }
        AmountKind::Transfer => {
            let mut dst = pools.active_accounts[rng.random_range(0..pools.active_accounts.len())];
            if dst == account {
                dst = pools.business_accounts[rng.random_range(0..pools.business_accounts.len())];
            }
            PendingEdge::transaction(account, dst, amount, at, TxCategory::Transfer, false)
        }
        AmountKind::Deposit => PendingEdge::transaction(
            graph.cash_node,
            account,
            amount,
            at,
            TxCategory::Deposit,
            false,
        ),
        AmountKind::Withdrawal => {
            let owner = graph
                .owner_of_account(account)
                .expect("regular accounts have owners");
            let cash = graph.cash_account_by_owner[&owner];
            PendingEdge::transaction(account, cash, amount, at, TxCategory::Withdrawal, false)
        }
        AmountKind::Salary | AmountKind::HighValue => unreachable!("not everyday kinds"),
    }
}

/// Random everyday payments: exactly `min(budget, floor(rate * days * |A|))`
/// typed, amount-calibrated edges over the active account set.
#[allow(clippy::too_many_arguments)]
pub fn generate_random_payments(
    graph: &Graph,
    pools: &BackgroundPools,
    budget: u64,
    rate: f64,
    days: i64,
    cfg: &GraphConfig,
    model: &AmountModel,
    rng: &mut RngStream,
) -> Result<Vec<PendingEdge>, BackgroundError> {
    let formula = (rate * days as f64 * pools.active_accounts.len() as f64).floor() as u64;
    let count = formula.min(budget);
    if pools.active_accounts.is_empty() || pools.business_accounts.is_empty() {
        return Ok(Vec::new());
    }
    let categories = CategorySampler::new(cfg);
    let mut edges = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let account = pools.active_accounts[rng.random_range(0..pools.active_accounts.len())];
        let kind = categories.sample(rng);
        let amount = model.sample_with_overlay(kind, rng)?;
        let at = uniform_time(graph.window, rng);
        edges.push(everyday_edge(graph, pools, account, kind, amount, at, rng));
    }
    Ok(edges)
}

/// High-value transfers: `floor(r_monthly * months * |A_high|)` edges,
/// amounts rounded to the nearest 100 currency units, business hours only.
pub fn generate_high_value(
    graph: &Graph,
    pools: &BackgroundPools,
    monthly_rate: f64,
    months: i64,
    cfg: &GraphConfig,
    model: &AmountModel,
    rng: &mut RngStream,
) -> Result<Vec<PendingEdge>, BackgroundError> {
    if pools.high_value_accounts.is_empty() || pools.business_accounts.is_empty() {
        return Ok(Vec::new());
    }
    let count =
        (monthly_rate * months as f64 * pools.high_value_accounts.len() as f64).floor() as u64;
    let hours = (
        cfg.background.business_hours.lo(),
        cfg.background.business_hours.hi(),
    );
    let mut edges = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let src = pools.high_value_accounts[rng.random_range(0..pools.high_value_accounts.len())];
        let mut dst = if rng.random_bool(0.7) {
            pools.business_accounts[rng.random_range(0..pools.business_accounts.len())]
        } else {
            pools.active_accounts[rng.random_range(0..pools.active_accounts.len())]
        };
        if dst == src {
            dst = pools.business_accounts[rng.random_range(0..pools.business_accounts.len())];
        }
        if dst == src {
            continue;
        }
        let raw = model.sample_amount(AmountKind::HighValue, rng)?;
        // Round to the nearest 100 currency units (10_000 cents).
        let amount = (((raw + 5_000) / 10_000) * 10_000).max(10_000);
        let at = business_hours_time(graph.window, hours, rng);
        edges.push(PendingEdge::transaction(
            src,
            dst,
            amount,
            at,
            TxCategory::Transfer,
            false,
        ));
    }
    Ok(edges)
}

/// Static employer-employee links: each legitimate business pays 1-3
/// individual recipients for the whole run.
pub fn build_salary_links(
    graph: &Graph,
    pools: &BackgroundPools,
    cfg: &GraphConfig,
    max_links: usize,
    rng: &mut RngStream,
) -> Vec<(NodeIdx, NodeIdx)> {
    let mut links = Vec::new();
    if pools.legit_individuals.is_empty() {
        return links;
    }
    'outer: for &business in &pools.legit_businesses {
        if graph.owner_accounts(business).is_empty() {
            continue;
        }
        let n = rng.random_range(
            cfg.background.recipients_per_business.lo()
                ..=cfg.background.recipients_per_business.hi(),
        );
        for _ in 0..n {
            if links.len() >= max_links {
                break 'outer;
            }
            let recipient =
                pools.legit_individuals[rng.random_range(0..pools.legit_individuals.len())];
            if graph.owner_accounts(recipient).is_empty() {
                continue;
            }
            links.push((business, recipient));
        }
    }
    links
}

/// Pay dates over the simulation window for the configured schedule.
/// Monthly pay days beyond a month's length clamp to its last day.
pub fn salary_pay_dates(cfg: &GraphConfig) -> Vec<chrono::NaiveDate> {
    use chrono::Datelike;
    let start = cfg.simulation_start;
    let end = cfg.simulation_end;
    let mut dates = Vec::new();
    match cfg.background.salary_schedule {
        SalarySchedule::BiWeekly => {
            let mut d = start;
            while d < end {
                dates.push(d);
                d += chrono::Duration::days(14);
            }
        }
        SalarySchedule::Monthly => {
            let mut year = start.year();
            let mut month = start.month();
            loop {
                let month_start = chrono::NaiveDate::from_ymd_opt(year, month, 1).unwrap();
                if month_start >= end {
                    break;
                }
                let next = if month == 12 {
                    chrono::NaiveDate::from_ymd_opt(year + 1, 1, 1).unwrap()
                } else {
                    chrono::NaiveDate::from_ymd_opt(year, month + 1, 1).unwrap()
                };
                let last_day = (next - chrono::Duration::days(1)).day();
                for &pay_day in &cfg.background.salary_pay_days {
                    let day = pay_day.min(last_day);
                    let date = chrono::NaiveDate::from_ymd_opt(year, month, day).unwrap();
                    if date >= start && date < end {
                        dates.push(date);
                    }
                }
                if month == 12 {
                    year += 1;
                    month = 1;
                } else {
                    month += 1;
                }
            }
            dates.sort_unstable();
            dates.dedup();
        }
    }
    dates
}

/// Salary payments over static links on the configured pay dates, with
/// minor per-payment jitter, during business hours.
pub fn generate_salaries(
    graph: &Graph,
    links: &[(NodeIdx, NodeIdx)],
    cfg: &GraphConfig,
    model: &AmountModel,
    rng: &mut RngStream,
) -> Result<Vec<PendingEdge>, BackgroundError> {
    let dates = salary_pay_dates(cfg);
    let hours = (
        cfg.background.business_hours.lo(),
        cfg.background.business_hours.hi(),
    );
    let jitter = cfg.background.salary_jitter;
    let mut edges = Vec::new();
    for &(business, recipient) in links {
        let src = graph.owner_accounts(business)[0];
        let dst = graph.owner_accounts(recipient)[0];
        let base = model.sample_amount(AmountKind::Salary, rng)?;
        for date in &dates {
            let factor = if jitter > 0.0 {
                rng.random_range(1.0 - jitter..=1.0 + jitter)
            } else {
                1.0
            };
            let amount = ((base as f64) * factor).round() as i64;
            let day_start = date.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
            let second = rng.random_range((hours.0 as i64 * 3600)..(hours.1 as i64 * 3600));
            let at = (day_start + second).min(graph.window.1 - 1);
            edges.push(PendingEdge::transaction(
                src,
                dst,
                amount,
                at,
                TxCategory::Salary,
                false,
            ));
        }
    }
    Ok(edges)
}

/// Legitimate-looking history for fraud-labelled accounts: exactly
/// `max(1, floor(rate * days))` edges per fraud account, drawn from the
/// same type and amount pipeline as legitimate traffic, direction 50/50,
/// during business hours.
pub fn generate_fraudster_background(
    graph: &Graph,
    pools: &BackgroundPools,
    rate: f64,
    days: i64,
    cfg: &GraphConfig,
    model: &AmountModel,
    rng: &mut RngStream,
) -> Result<Vec<PendingEdge>, BackgroundError> {
    if pools.legit_accounts.is_empty() || pools.business_accounts.is_empty() {
        return Ok(Vec::new());
    }
    let per_account = 1u64.max((rate * days as f64).floor() as u64);
    let categories = CategorySampler::new(cfg);
    let hours = (
        cfg.background.business_hours.lo(),
        cfg.background.business_hours.hi(),
    );
    let mut edges = Vec::new();
    for &account in &pools.fraud_accounts {
        for _ in 0..per_account {
            let kind = categories.sample(rng);
            let amount = model.sample_with_overlay(kind, rng)?;
            let at = business_hours_time(graph.window, hours, rng);
            let mut edge = everyday_edge(graph, pools, account, kind, amount, at, rng);
            // Payments and transfers flow both ways; deposits and
            // withdrawals have inherent directions.
            if matches!(kind, AmountKind::Payment | AmountKind::Transfer) && rng.random_bool(0.5) {
                let counterpart =
                    pools.legit_accounts[rng.random_range(0..pools.legit_accounts.len())];
                edge = PendingEdge::transaction(
                    counterpart,
                    account,
                    amount,
                    at,
                    edge.category,
                    false,
                );
            }
            edges.push(edge);
        }
    }
    Ok(edges)
}

/// One counter-leakage pattern worth up to `budget` edges. Structures are
/// never truncated below their own structural minima, so realized counts
/// may undershoot slightly; the shortfall rolls back into random payments.
pub fn generate_counter_leakage(
    graph: &Graph,
    pools: &BackgroundPools,
    kind: CounterLeakageKind,
    budget: u64,
    cfg: &GraphConfig,
    model: &AmountModel,
    rng: &mut RngStream,
) -> Result<Vec<PendingEdge>, BackgroundError> {
    let pool = pools.counter_pool(cfg, rng);
    if pool.is_empty() || pools.business_accounts.is_empty() {
        return Ok(Vec::new());
    }
    let window = graph.window;
    let mut edges: Vec<PendingEdge> = Vec::with_capacity(budget as usize);
    let budget = budget as usize;

    fn pick(pool: &[NodeIdx], rng: &mut RngStream) -> NodeIdx {
        pool[rng.random_range(0..pool.len())]
    }

    match kind {
        // Tight clusters of 5-15 payments within minutes: shopping sprees
        // and bill-payment runs.
        CounterLeakageKind::Bursts => {
            while budget - edges.len() >= 5 {
                let size = rng.random_range(5..=15usize.min(budget - edges.len()));
                let span = rng.random_range(3 * 60..=45 * 60);
                let t0 = rng.random_range(window.0..window.1 - span - 1);
                let src = pick(&pool, rng);
                let times =
                    crate::patterns::schedule_burst(size, span, t0, rng).expect("positive span");
                for t in times {
                    let dst = pick(&pools.business_accounts, rng);
                    let amount = model.sample_amount(AmountKind::Payment, rng)?;
                    edges.push(PendingEdge::transaction(
                        src,
                        dst,
                        amount,
                        t,
                        TxCategory::Payment,
                        false,
                    ));
                }
            }
        }
        // Multi-hop chains of length 2-5: group expenses, family support,
        // supply chains. Topologically like layering, labelled legitimate.
        CounterLeakageKind::Chains => {
            while budget - edges.len() >= 2 {
                let len = rng.random_range(2..=5usize.min(budget - edges.len()));
                let mut route = Vec::with_capacity(len + 1);
                while route.len() < len + 1 {
                    let cand = pick(&pool, rng);
                    if !route.contains(&cand) {
                        route.push(cand);
                    }
                }
                let max_span = len as i64 * 48 * 3600;
                let mut t = rng.random_range(window.0..window.1 - max_span - 1);
                for pair in route.windows(2) {
                    let amount = model.sample_amount(AmountKind::Transfer, rng)?;
                    edges.push(PendingEdge::transaction(
                        pair[0],
                        pair[1],
                        amount,
                        t,
                        TxCategory::Transfer,
                        false,
                    ));
                    t += rng.random_range(3600..=48 * 3600);
                }
            }
        }
        // Inflow-outflow sequences resembling rapid fund movement:
        // consolidation, emergency expenses, event funding.
        CounterLeakageKind::RapidFlow => {
            while budget - edges.len() >= 3 {
                let inflows = rng.random_range(2..=6usize.min(budget - edges.len() - 1));
                let outflows = rng.random_range(1..=4usize.min(budget - edges.len() - inflows));
                let target = pick(&pool, rng);
                let in_window = rng.random_range(6 * 3600..=24 * 3600);
                let delay = rng.random_range(3600..=12 * 3600);
                let out_window = rng.random_range(3600..=24 * 3600);
                let span = in_window + delay + out_window;
                let t0 = rng.random_range(window.0..window.1 - span - 1);
                let times = crate::patterns::schedule_burst(inflows, in_window, t0, rng)
                    .expect("positive window");
                for t in &times {
                    let mut src = pick(&pool, rng);
                    if src == target {
                        src = pick(&pools.business_accounts, rng);
                    }
                    let amount = model.sample_amount(AmountKind::Transfer, rng)?;
                    edges.push(PendingEdge::transaction(
                        src,
                        target,
                        amount,
                        *t,
                        TxCategory::Transfer,
                        false,
                    ));
                }
                let owner = graph.owner_of_account(target).expect("regular account");
                let cash = graph.cash_account_by_owner[&owner];
                let out_start = times.last().unwrap() + delay;
                let out_times =
                    crate::patterns::schedule_burst(outflows, out_window, out_start, rng)
                        .expect("positive window");
                for t in out_times {
                    let amount = model.sample_amount(AmountKind::Withdrawal, rng)?;
                    edges.push(PendingEdge::transaction(
                        target,
                        cash,
                        amount,
                        t,
                        TxCategory::Withdrawal,
                        false,
                    ));
                }
            }
        }
        // Calibrated cash deposits and withdrawals; a rapid-deposit mode
        // drops 3-5 deposits within hours, like small-business cash handling.
        CounterLeakageKind::CashOps => {
            while edges.len() < budget {
                if budget - edges.len() >= 3 && rng.random_bool(0.35) {
                    let n = rng.random_range(3..=5usize.min(budget - edges.len()));
                    let span = rng.random_range(2 * 3600..=6 * 3600);
                    let t0 = rng.random_range(window.0..window.1 - span - 1);
                    let account = pick(&pool, rng);
                    let times =
                        crate::patterns::schedule_burst(n, span, t0, rng).expect("positive span");
                    for t in times {
                        let amount = model.sample_amount(AmountKind::Deposit, rng)?;
                        edges.push(PendingEdge::transaction(
                            graph.cash_node,
                            account,
                            amount,
                            t,
                            TxCategory::Deposit,
                            false,
                        ));
                    }
                } else {
                    let account = pick(&pool, rng);
                    let at = uniform_time(window, rng);
                    if rng.random_bool(0.5) {
                        let amount = model.sample_amount(AmountKind::Deposit, rng)?;
                        edges.push(PendingEdge::transaction(
                            graph.cash_node,
                            account,
                            amount,
                            at,
                            TxCategory::Deposit,
                            false,
                        ));
                    } else {
                        let owner = graph.owner_of_account(account).expect("regular account");
                        let cash = graph.cash_account_by_owner[&owner];
                        let amount = model.sample_amount(AmountKind::Withdrawal, rng)?;
                        edges.push(PendingEdge::transaction(
                            account,
                            cash,
                            amount,
                            at,
                            TxCategory::Withdrawal,
                            false,
                        ));
                    }
                }
            }
        }
        // Legitimate sub-threshold deposits (house savings, freelance
        // income); a burst mode matches the fraud structuring signature.
        CounterLeakageKind::Structuring => {
            let lo = crate::config::to_cents(cfg.background.counter_structuring_range.lo());
            let hi = crate::config::to_cents(cfg.background.counter_structuring_range.hi());
            while edges.len() < budget {
                let account = pick(&pool, rng);
                if budget - edges.len() >= 3 && rng.random_bool(0.4) {
                    let n = rng.random_range(3..=6usize.min(budget - edges.len()));
                    let span = rng.random_range(2 * 3600..=8 * 3600);
                    let t0 = rng.random_range(window.0..window.1 - span - 1);
                    let times =
                        crate::patterns::schedule_burst(n, span, t0, rng).expect("positive span");
                    for t in times {
                        let amount = rng.random_range(lo..=hi);
                        edges.push(PendingEdge::transaction(
                            graph.cash_node,
                            account,
                            amount,
                            t,
                            TxCategory::Deposit,
                            false,
                        ));
                    }
                } else {
                    let amount = rng.random_range(lo..=hi);
                    let at = uniform_time(window, rng);
                    edges.push(PendingEdge::transaction(
                        graph.cash_node,
                        account,
                        amount,
                        at,
                        TxCategory::Deposit,
                        false,
                    ));
                }
            }
        }
        // High-risk entities transacting normally, so risk factors alone
        // cannot predict fraud.
        CounterLeakageKind::HighRiskActivity => {
            if pools.high_risk_legit_accounts.is_empty() {
                return Ok(edges);
            }
            let categories = CategorySampler::new(cfg);
            while edges.len() < budget {
                let account = pick(&pools.high_risk_legit_accounts, rng);
                let kind = categories.sample(rng);
                let amount = model.sample_amount(kind, rng)?;
                let at = uniform_time(window, rng);
                edges.push(everyday_edge(graph, pools, account, kind, amount, at, rng));
            }
        }
        // Recurring legitimate transfers with the same periodic signature
        // as scheduled fraud.
        CounterLeakageKind::Periodic => {
            let day = 86_400i64;
            let window_len = window.1 - window.0;
            loop {
                let remaining = budget - edges.len();
                if remaining < 2 {
                    break;
                }
                let period = [7 * day, 14 * day, 30 * day][rng.random_range(0..3)];
                let epsilon = rng.random_range(0..=6 * 3600);
                let max_fit = ((window_len - day) / (period + epsilon)) as usize;
                if max_fit < 2 {
                    continue;
                }
                let n = rng.random_range(2..=12usize.min(max_fit).min(remaining).max(2));
                let span = n as i64 * (period + epsilon);
                if span >= window_len {
                    continue;
                }
                let t0 = rng.random_range(window.0..window.1 - span);
                let src = pick(&pool, rng);
                let mut dst = pick(&pool, rng);
                if dst == src {
                    dst = pick(&pools.business_accounts, rng);
                }
                let times = crate::patterns::schedule_periodic(n, period, epsilon, t0, rng)
                    .expect("validated period");
                for t in times {
                    if t >= window.1 {
                        break;
                    }
                    let amount = model.sample_amount(AmountKind::Transfer, rng)?;
                    edges.push(PendingEdge::transaction(
                        src,
                        dst,
                        amount,
                        t,
                        TxCategory::Transfer,
                        false,
                    ));
                }
            }
        }
    }
    Ok(edges)
}

/// Realized background volumes per pattern.
#[derive(Debug, Clone, Default, Serialize)]
pub struct BackgroundStats {
    pub random: u64,
    pub salaries: u64,
    pub high_value: u64,
    pub fraudster: u64,
    pub counter_leakage: BTreeMap<String, u64>,
    pub total: u64,
}

/// Runs every background pattern against its allocation, then tops missing
/// volume back into random payments (bounded by the rate cap). Returns all
/// edges in a deterministic pattern order plus realized counts.
pub fn generate_all_background(
    graph: &Graph,
    cfg: &GraphConfig,
    budget: &BackgroundBudget,
    pools: &BackgroundPools,
    model: &AmountModel,
    seeds: &SeedTree,
) -> Result<(Vec<PendingEdge>, BackgroundStats), BackgroundError> {
    let days = cfg.window_days();
    let months = (days as f64 / 30.4375).round().max(1.0) as i64;
    let mut stats = BackgroundStats::default();
    let mut edges: Vec<PendingEdge> = Vec::new();

    // Salaries: links are sized so the schedule fits the allocation.
    let pay_events = salary_pay_dates(cfg).len().max(1);
    let max_links = (budget.alloc_salaries as usize) / pay_events;
    let links = build_salary_links(
        graph,
        pools,
        cfg,
        max_links,
        &mut seeds.stream("background/salary-links"),
    );
    let salary_edges = generate_salaries(
        graph,
        &links,
        cfg,
        model,
        &mut seeds.stream("background/salaries"),
    )?;
    stats.salaries = salary_edges.len() as u64;
    edges.extend(salary_edges);

    // High-value: the monthly rate is derived from the allocation.
    let hv_rate = if pools.high_value_accounts.is_empty() {
        0.0
    } else {
        budget.alloc_high_value as f64 / (months as f64 * pools.high_value_accounts.len() as f64)
    };
    let hv_edges = generate_high_value(
        graph,
        pools,
        hv_rate,
        months,
        cfg,
        model,
        &mut seeds.stream("background/high-value"),
    )?;
    stats.high_value = hv_edges.len() as u64;
    edges.extend(hv_edges);

    // Fraudster background at the effective legitimate rate.
    let fraudster_edges = generate_fraudster_background(
        graph,
        pools,
        budget.effective_daily_rate,
        days,
        cfg,
        model,
        &mut seeds.stream("background/fraudster"),
    )?;
    stats.fraudster = fraudster_edges.len() as u64;
    edges.extend(fraudster_edges);

    // Counter-leakage kinds.
    for kind in CounterLeakageKind::ALL {
        let alloc = budget.alloc_counter_leakage[kind.label()];
        let kind_edges = generate_counter_leakage(
            graph,
            pools,
            kind,
            alloc,
            cfg,
            model,
            &mut seeds.stream(&format!("background/counter/{}", kind.label())),
        )?;
        stats
            .counter_leakage
            .insert(kind.label().to_string(), kind_edges.len() as u64);
        edges.extend(kind_edges);
    }

    // Random payments absorb every shortfall, up to the rate cap.
    let spent = edges.len() as u64;
    let others_target = budget.background_target - budget.alloc_random;
    let shortfall = others_target.saturating_sub(spent);
    let random_budget = budget.alloc_random + shortfall;
    let capacity =
        (cfg.per_account_daily_rate_cap * days as f64 * pools.active_accounts.len() as f64).floor()
            as u64;
    let random_edges = generate_random_payments(
        graph,
        pools,
        random_budget.min(capacity),
        cfg.per_account_daily_rate_cap,
        days,
        cfg,
        model,
        &mut seeds.stream("background/random"),
    )?;
    stats.random = random_edges.len() as u64;
    edges.extend(random_edges);

    stats.total = edges.len() as u64;
    Ok((edges, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_graph_config;
    use crate::population::generate_population;
    use crate::rng::SeedTree;

    fn cfg_with(extra: &str) -> GraphConfig {
        parse_graph_config(&format!("master_seed: 21\n{extra}"), "test").unwrap()
    }

    fn setup(individuals: u32) -> (GraphConfig, Graph, BackgroundPools, AmountModel, SeedTree) {
        let cfg = cfg_with(&format!(
            "individual_count: {individuals}\nsimulation_start: 2025-01-01\nsimulation_end: 2025-04-01\n"
        ));
        let seeds = SeedTree::new(cfg.master_seed);
        let graph =
            generate_population(&cfg, &cfg.risk_weights, &mut seeds.stream("population")).unwrap();
        let pools =
            BackgroundPools::build(&graph, &cfg, &mut seeds.stream("background/active-set"));
        let model = AmountModel::from_config(&cfg).unwrap();
        (cfg, graph, pools, model, seeds)
    }

    #[test]
    fn medians_track_exp_mu_for_every_kind() {
        let (cfg, _, _, model, seeds) = setup(10);
        for kind in AmountKind::ALL {
            let mut rng = seeds.stream(&format!("median/{}", kind.label()));
            let mut samples: Vec<i64> = (0..100_000)
                .map(|_| model.sample_amount(kind, &mut rng).unwrap())
                .collect();
            samples.sort_unstable();
            let median = samples[samples.len() / 2] as f64 / 100.0;
            let expected = cfg.amount_params[&kind].mu.exp();
            assert!(
                (median - expected).abs() / expected < 0.05,
                "{}: median {median} vs exp(mu) {expected}",
                kind.label()
            );
        }
    }

    #[test]
    fn clip_returns_bound_exactly() {
        let cfg =
            cfg_with("amount_params:\n  payment: { mu: 3.8, sigma: 3.0, min: 40.0, max: 50.0 }\n");
        let model = AmountModel::from_config(&cfg).unwrap();
        let mut rng = SeedTree::new(1).stream("clip");
        let mut hit_max = false;
        let mut hit_min = false;
        for _ in 0..2_000 {
            let cents = model.sample_amount(AmountKind::Payment, &mut rng).unwrap();
            assert!((4_000..=5_000).contains(&cents));
            hit_max |= cents == 5_000;
            hit_min |= cents == 4_000;
        }
        assert!(
            hit_max && hit_min,
            "with sigma 3 both clip bounds should be hit"
        );
    }

    #[test]
    fn sigma_below_calibration_floor_rejected() {
        let cfg = cfg_with(
            "amount_params:\n  payment: { mu: 3.8, sigma: 0.3, min: 1.0, max: 100000.0 }\n",
        );
        assert!(matches!(
            AmountModel::from_config(&cfg),
            Err(BackgroundError::Calibration(_))
        ));
    }

    #[test]
    fn structuring_band_and_mean() {
        let (_, _, _, model, seeds) = setup(10);
        let mut rng = seeds.stream("structuring");
        let n = 100_000;
        let mut sum = 0f64;
        for _ in 0..n {
            let cents = model.sample_structuring_amount(&mut rng);
            assert!((700_000..=999_999).contains(&cents));
            sum += cents as f64;
        }
        let mean = sum / n as f64 / 100.0;
        let expected = (7_000.0 + 9_999.99) / 2.0;
        assert!((mean - expected).abs() / expected < 0.01, "mean {mean}");
    }

    #[test]
    fn constant_structuring_range() {
        let cfg = cfg_with("structuring:\n  overlay_share: 0.04\n  range: [9000, 9000]\n");
        let model = AmountModel::from_config(&cfg).unwrap();
        let mut rng = SeedTree::new(2).stream("s");
        assert_eq!(model.sample_structuring_amount(&mut rng), 900_000);
    }

    #[test]
    fn random_payment_count_follows_formula() {
        let (cfg, graph, pools, model, seeds) = setup(40);
        let days = cfg.window_days();
        let expected = (0.1 * days as f64 * pools.active_accounts.len() as f64).floor() as usize;
        let edges = generate_random_payments(
            &graph,
            &pools,
            u64::MAX,
            0.1,
            days,
            &cfg,
            &model,
            &mut seeds.stream("r"),
        )
        .unwrap();
        assert_eq!(edges.len(), expected);
        assert!(edges.iter().all(|e| !e.is_fraud));

        let capped = generate_random_payments(
            &graph,
            &pools,
            10,
            0.1,
            days,
            &cfg,
            &model,
            &mut seeds.stream("r"),
        )
        .unwrap();
        assert_eq!(capped.len(), 10);
    }

    #[test]
    fn type_shares_track_weights() {
        let (cfg, graph, pools, model, seeds) = setup(60);
        let edges = generate_random_payments(
            &graph,
            &pools,
            300_000,
            100.0,
            cfg.window_days(),
            &cfg,
            &model,
            &mut seeds.stream("shares"),
        )
        .unwrap();
        assert_eq!(edges.len(), 300_000);
        let mut counts: BTreeMap<TxCategory, usize> = BTreeMap::new();
        for e in &edges {
            *counts.entry(e.category).or_insert(0) += 1;
        }
        let total = edges.len() as f64;
        for (kind, weight) in &cfg.background_weights {
            let share = counts[&category_of(*kind)] as f64 / total;
            assert!(
                (share - weight).abs() < 0.02,
                "{}: {share} vs {weight}",
                kind.label()
            );
        }
    }

    #[test]
    fn structuring_overlay_share_in_band() {
        let (cfg, graph, pools, model, seeds) = setup(60);
        let edges = generate_random_payments(
            &graph,
            &pools,
            150_000,
            100.0,
            cfg.window_days(),
            &cfg,
            &model,
            &mut seeds.stream("overlay"),
        )
        .unwrap();
        let in_band = edges
            .iter()
            .filter(|e| (700_000..1_000_000).contains(&e.amount_cents))
            .count() as f64;
        let share = in_band / edges.len() as f64;
        assert!((0.03..=0.05).contains(&share), "share {share}");
    }

    #[test]
    fn high_value_rounding_and_hours() {
        let (cfg, graph, pools, model, seeds) = setup(60);
        let edges = generate_high_value(
            &graph,
            &pools,
            0.5,
            12,
            &cfg,
            &model,
            &mut seeds.stream("hv"),
        )
        .unwrap();
        let expected = (0.5 * 12.0 * pools.high_value_accounts.len() as f64).floor() as usize;
        assert!(edges.len() <= expected && edges.len() + 5 >= expected);
        assert!(!edges.is_empty());
        for e in &edges {
            assert_eq!(e.amount_cents % 10_000, 0, "amounts round to 100 units");
            let hour = (e.timestamp % 86_400) / 3600;
            assert!((9..17).contains(&hour), "hour {hour}");
        }
    }

    #[test]
    fn salaries_follow_calendar() {
        let cfg = cfg_with(
            "individual_count: 30\nsimulation_start: 2025-01-01\nsimulation_end: 2025-04-01\n",
        );
        let dates = salary_pay_dates(&cfg);
        // Three months, pay days {1, 15, 30}: nine dates, with 30 February
        // clamping to the 28th.
        assert_eq!(dates.len(), 9);
        assert!(dates.contains(&chrono::NaiveDate::from_ymd_opt(2025, 2, 28).unwrap()));

        let seeds = SeedTree::new(cfg.master_seed);
        let graph =
            generate_population(&cfg, &cfg.risk_weights, &mut seeds.stream("population")).unwrap();
        let pools = BackgroundPools::build(&graph, &cfg, &mut seeds.stream("a"));
        let model = AmountModel::from_config(&cfg).unwrap();
        let links = build_salary_links(&graph, &pools, &cfg, usize::MAX, &mut seeds.stream("l"));
        assert!(!links.is_empty());
        let mut per_business: BTreeMap<NodeIdx, usize> = BTreeMap::new();
        for (b, _) in &links {
            *per_business.entry(*b).or_insert(0) += 1;
        }
        assert!(per_business.values().all(|&n| (1..=3).contains(&n)));

        let edges =
            generate_salaries(&graph, &links, &cfg, &model, &mut seeds.stream("s")).unwrap();
        assert_eq!(edges.len(), links.len() * dates.len());
        assert!(edges.iter().all(|e| e.category == TxCategory::Salary));
    }

    #[test]
    fn fraudster_per_account_counts() {
        let (cfg, graph, mut pools, model, seeds) = setup(50);
        pools.fraud_accounts = pools.legit_accounts[..40.min(pools.legit_accounts.len())].to_vec();
        let n_accounts = pools.fraud_accounts.len();
        // rate 0.5 over 90 days: 45 per account; rate 0.001: floor 0 -> 1.
        let edges = generate_fraudster_background(
            &graph,
            &pools,
            0.5,
            90,
            &cfg,
            &model,
            &mut seeds.stream("f"),
        )
        .unwrap();
        assert_eq!(edges.len(), n_accounts * 45);
        assert!(edges.iter().all(|e| !e.is_fraud));
        for e in &edges {
            let hour = (e.timestamp % 86_400) / 3600;
            assert!((9..17).contains(&hour));
        }
        let minimal = generate_fraudster_background(
            &graph,
            &pools,
            0.001,
            90,
            &cfg,
            &model,
            &mut seeds.stream("f2"),
        )
        .unwrap();
        assert_eq!(minimal.len(), n_accounts);
    }

    #[test]
    fn counter_leakage_structures() {
        let (cfg, graph, pools, model, seeds) = setup(80);
        for kind in CounterLeakageKind::ALL {
            let edges = generate_counter_leakage(
                &graph,
                &pools,
                kind,
                400,
                &cfg,
                &model,
                &mut seeds.stream(&format!("cl/{}", kind.label())),
            )
            .unwrap();
            assert!(edges.len() <= 400, "{}", kind.label());
            assert!(
                edges.iter().all(|e| !e.is_fraud),
                "{} must be legit",
                kind.label()
            );
            assert!(!edges.is_empty(), "{} emitted nothing", kind.label());
        }
    }

    #[test]
    fn counter_structuring_band() {
        let (cfg, graph, pools, model, seeds) = setup(40);
        let edges = generate_counter_leakage(
            &graph,
            &pools,
            CounterLeakageKind::Structuring,
            500,
            &cfg,
            &model,
            &mut seeds.stream("cs"),
        )
        .unwrap();
        for e in &edges {
            assert!((750_000..=999_999).contains(&e.amount_cents));
            assert_eq!(e.category, TxCategory::Deposit);
        }
    }

    #[test]
    fn budget_ratio_algebra() {
        let cfg = cfg_with("target_illicit_ratio: 0.001\nper_account_daily_rate_cap: 1000\n");
        let b = compute_background_budget(&cfg, 7_600, 40_000, 100, 365).unwrap();
        assert_eq!(b.total_target_edges, 7_600_000);
        assert_eq!(b.background_target, 7_592_400);
        assert!(!b.rate_cap_binds);

        let cfg = cfg_with("target_illicit_ratio: 0.499\nper_account_daily_rate_cap: 1000\n");
        let b = compute_background_budget(&cfg, 100, 1_000, 10, 30).unwrap();
        assert_eq!(b.total_target_edges, 200);
        assert_eq!(b.background_target, 100);
    }

    #[test]
    fn budget_cap_binding_warns() {
        let cfg = cfg_with("target_illicit_ratio: 0.0001\nper_account_daily_rate_cap: 0.1\n");
        let b = compute_background_budget(&cfg, 10_000, 100, 10, 30).unwrap();
        assert!(b.rate_cap_binds);
        assert!(b.warnings.iter().any(|w| w.contains("achievable")));
        assert!(b.achievable_ratio > cfg.target_illicit_ratio);
        assert!((b.effective_daily_rate - 0.1).abs() < 1e-12);
    }

    #[test]
    fn unknown_kind_parse_fails() {
        assert!("chains".parse::<CounterLeakageKind>().is_ok());
        assert!(matches!(
            "mystery".parse::<CounterLeakageKind>(),
            Err(BackgroundError::UnknownKind(_))
        ));
    }
}
