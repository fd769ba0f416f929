//! Run configuration: the two YAML files that fully determine a generation.
//!
//! The graph file holds population, calendar, calibration, and export
//! settings; the pattern file holds per-typology injection parameters.
//! Every key except `master_seed` has a documented default
//! (`docs/configuration.md`); the seed is mandatory so that determinism is
//! an explicit choice, never an accident.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::catalog;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },
    #[error("master_seed is required: determinism needs an explicit seed")]
    MissingSeed,
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Inclusive numeric range, serialized as a two-element sequence `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds<T>(pub T, pub T);

impl<T: Copy> Bounds<T> {
    pub fn lo(&self) -> T {
        self.0
    }
    pub fn hi(&self) -> T {
        self.1
    }
}

impl<T: Copy + PartialOrd + fmt::Display> Bounds<T> {
    fn check_ordered(&self, key: &str) -> Result<(), ConfigError> {
        if self.0 > self.1 {
            return Err(invalid(
                key,
                format!("min {} exceeds max {}", self.0, self.1),
            ));
        }
        Ok(())
    }
}

/// Duration in whole seconds. Accepts plain seconds or human units
/// (`45s`, `30m`, `24h`, `7d`) in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct DurationSecs(pub i64);

impl DurationSecs {
    pub const fn seconds(s: i64) -> Self {
        Self(s)
    }
    pub const fn minutes(m: i64) -> Self {
        Self(m * 60)
    }
    pub const fn hours(h: i64) -> Self {
        Self(h * 3600)
    }
    pub const fn days(d: i64) -> Self {
        Self(d * 86400)
    }
    pub fn get(&self) -> i64 {
        self.0
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let text = text.trim();
        let (digits, unit) = match text.find(|c: char| !c.is_ascii_digit()) {
            Some(idx) => text.split_at(idx),
            None => (text, "s"),
        };
        let value: i64 = digits
            .parse()
            .map_err(|_| format!("bad duration `{text}`"))?;
        let mult = match unit.trim() {
            "s" | "" => 1,
            "m" => 60,
            "h" => 3600,
            "d" => 86400,
            other => return Err(format!("unknown duration unit `{other}`")),
        };
        Ok(Self(value * mult))
    }
}

impl fmt::Display for DurationSecs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.0;
        if s != 0 && s % 86400 == 0 {
            write!(f, "{}d", s / 86400)
        } else if s != 0 && s % 3600 == 0 {
            write!(f, "{}h", s / 3600)
        } else if s != 0 && s % 60 == 0 {
            write!(f, "{}m", s / 60)
        } else {
            write!(f, "{s}s")
        }
    }
}

impl Serialize for DurationSecs {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DurationSecs {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(i64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(n) => Ok(DurationSecs(n)),
            Raw::Text(t) => DurationSecs::parse(&t).map_err(D::Error::custom),
        }
    }
}

/// Kinds of amount distributions configurable per transaction type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmountKind {
    Payment,
    Transfer,
    Withdrawal,
    Deposit,
    Salary,
    HighValue,
}

impl AmountKind {
    pub const ALL: [AmountKind; 6] = [
        AmountKind::Payment,
        AmountKind::Transfer,
        AmountKind::Withdrawal,
        AmountKind::Deposit,
        AmountKind::Salary,
        AmountKind::HighValue,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AmountKind::Payment => "payment",
            AmountKind::Transfer => "transfer",
            AmountKind::Withdrawal => "withdrawal",
            AmountKind::Deposit => "deposit",
            AmountKind::Salary => "salary",
            AmountKind::HighValue => "high_value",
        }
    }
}

/// Log-normal parameters with clip bounds, in currency units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmountParams {
    pub mu: f64,
    pub sigma: f64,
    pub min: f64,
    pub max: f64,
}

fn default_amount_params() -> BTreeMap<AmountKind, AmountParams> {
    // Payment/Transfer/Withdrawal are calibrated to FRPS medians; Deposit is
    // a modelling assumption, as are Salary and HighValue.
    let mut map = BTreeMap::new();
    map.insert(
        AmountKind::Payment,
        AmountParams {
            mu: 3.8,
            sigma: 1.2,
            min: 0.5,
            max: 20_000.0,
        },
    );
    map.insert(
        AmountKind::Transfer,
        AmountParams {
            mu: 5.5,
            sigma: 2.0,
            min: 1.0,
            max: 500_000.0,
        },
    );
    map.insert(
        AmountKind::Withdrawal,
        AmountParams {
            mu: 4.8,
            sigma: 0.9,
            min: 5.0,
            max: 20_000.0,
        },
    );
    map.insert(
        AmountKind::Deposit,
        AmountParams {
            mu: 5.3,
            sigma: 1.5,
            min: 1.0,
            max: 100_000.0,
        },
    );
    map.insert(
        AmountKind::Salary,
        AmountParams {
            mu: 8.0,
            sigma: 0.6,
            min: 800.0,
            max: 25_000.0,
        },
    );
    map.insert(
        AmountKind::HighValue,
        AmountParams {
            mu: 10.1,
            sigma: 1.0,
            min: 5_000.0,
            max: 2_000_000.0,
        },
    );
    map
}

fn default_background_weights() -> BTreeMap<AmountKind, f64> {
    let mut map = BTreeMap::new();
    map.insert(AmountKind::Payment, 68.0);
    map.insert(AmountKind::Transfer, 12.0);
    map.insert(AmountKind::Withdrawal, 8.0);
    map.insert(AmountKind::Deposit, 11.0);
    map
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFormats {
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputFormats {
    fn default() -> Self {
        Self {
            csv: true,
            json: true,
        }
    }
}

/// One row of the country mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryEntry {
    pub code: String,
    #[serde(default)]
    pub high_risk: bool,
    pub weight: f64,
}

/// Weights of Eq-style risk factors plus the score cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiskWeights {
    pub individual_base: f64,
    pub business_base: f64,
    pub high_risk_age: f64,
    pub high_risk_occupation: f64,
    pub cash_intensive_category: f64,
    pub very_small_company: f64,
    pub high_risk_jurisdiction: f64,
    pub cap: f64,
}

impl Default for RiskWeights {
    fn default() -> Self {
        Self {
            individual_base: 0.05,
            business_base: 0.10,
            high_risk_age: 0.15,
            high_risk_occupation: 0.12,
            cash_intensive_category: 0.25,
            very_small_company: 0.10,
            high_risk_jurisdiction: 0.20,
            cap: 0.9,
        }
    }
}

impl RiskWeights {
    fn validate(&self) -> Result<(), ConfigError> {
        let named = [
            ("risk_weights.individual_base", self.individual_base),
            ("risk_weights.business_base", self.business_base),
            ("risk_weights.high_risk_age", self.high_risk_age),
            (
                "risk_weights.high_risk_occupation",
                self.high_risk_occupation,
            ),
            (
                "risk_weights.cash_intensive_category",
                self.cash_intensive_category,
            ),
            ("risk_weights.very_small_company", self.very_small_company),
            (
                "risk_weights.high_risk_jurisdiction",
                self.high_risk_jurisdiction,
            ),
        ];
        for (key, w) in named {
            if w.is_nan() || w < 0.0 {
                return Err(invalid(key, "weights must be non-negative"));
            }
        }
        if !(self.cap > 0.0 && self.cap <= 1.0) {
            return Err(invalid("risk_weights.cap", "cap must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Structuring overlay applied to random background payments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StructuringConfig {
    /// Probability that a random background transaction is drawn from the
    /// sub-threshold band instead of its log-normal distribution.
    pub overlay_share: f64,
    /// Sub-threshold band in currency units.
    pub range: Bounds<f64>,
}

impl Default for StructuringConfig {
    fn default() -> Self {
        Self {
            overlay_share: 0.04,
            range: Bounds(7_000.0, 9_999.99),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SalarySchedule {
    Monthly,
    BiWeekly,
}

/// Background generation knobs beyond the calibration tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackgroundConfig {
    /// Shares of the background budget given to the baseline patterns;
    /// whatever remains after these and the fraudster formula is split
    /// equally across the counter-leakage kinds.
    pub allocation_random: f64,
    pub allocation_salaries: f64,
    pub allocation_high_value: f64,
    pub salary_schedule: SalarySchedule,
    /// Calendar pay days for the monthly schedule; days beyond a month's
    /// length clamp to its last day.
    pub salary_pay_days: Vec<u32>,
    /// Multiplicative jitter applied to salary amounts.
    pub salary_jitter: f64,
    pub recipients_per_business: Bounds<u32>,
    /// Fraction of fraud accounts mixed into each background pattern.
    pub fraud_mixing: Bounds<f64>,
    /// Sub-threshold band used by the counter-leakage structuring kind.
    pub counter_structuring_range: Bounds<f64>,
    /// Local business hours (start hour inclusive, end hour exclusive).
    pub business_hours: Bounds<u32>,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        Self {
            allocation_random: 0.80,
            allocation_salaries: 0.08,
            allocation_high_value: 0.02,
            salary_schedule: SalarySchedule::Monthly,
            salary_pay_days: vec![1, 15, 30],
            salary_jitter: 0.05,
            recipients_per_business: Bounds(1, 3),
            fraud_mixing: Bounds(0.5, 0.9),
            counter_structuring_range: Bounds(7_500.0, 9_999.99),
            business_hours: Bounds(9, 17),
        }
    }
}

fn default_simulation_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2025, 1, 1).unwrap()
}

fn default_simulation_end() -> NaiveDate {
    NaiveDate::from_ymd_opt(2026, 1, 1).unwrap()
}

/// Raw file form of the graph config: everything optional except the seed,
/// which is checked at resolve time.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphConfigFile {
    individual_count: Option<u32>,
    business_ratio: Option<f64>,
    institution_count: Option<u32>,
    simulation_start: Option<NaiveDate>,
    simulation_end: Option<NaiveDate>,
    target_illicit_ratio: Option<f64>,
    reporting_threshold: Option<f64>,
    per_account_daily_rate_cap: Option<f64>,
    master_seed: Option<u64>,
    currency: Option<String>,
    accounts_per_individual: Option<Bounds<u32>>,
    accounts_per_business: Option<Bounds<u32>>,
    background_weights: Option<BTreeMap<AmountKind, f64>>,
    amount_params: Option<BTreeMap<AmountKind, AmountParams>>,
    output_formats: Option<OutputFormats>,
    country_table: Option<Vec<CountryEntry>>,
    risk_weights: Option<RiskWeights>,
    structuring: Option<StructuringConfig>,
    background: Option<BackgroundConfig>,
}

/// Fully-resolved graph-level configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub individual_count: u32,
    pub business_ratio: f64,
    pub institution_count: u32,
    pub simulation_start: NaiveDate,
    pub simulation_end: NaiveDate,
    pub target_illicit_ratio: f64,
    /// Reporting threshold in currency units.
    pub reporting_threshold: f64,
    pub per_account_daily_rate_cap: f64,
    pub master_seed: u64,
    pub currency: String,
    pub accounts_per_individual: Bounds<u32>,
    pub accounts_per_business: Bounds<u32>,
    pub background_weights: BTreeMap<AmountKind, f64>,
    pub amount_params: BTreeMap<AmountKind, AmountParams>,
    pub output_formats: OutputFormats,
    pub country_table: Vec<CountryEntry>,
    pub risk_weights: RiskWeights,
    pub structuring: StructuringConfig,
    pub background: BackgroundConfig,
}

impl GraphConfig {
    /// Simulation window as `[start, end)` unix seconds.
    pub fn window(&self) -> (i64, i64) {
        let start = self
            .simulation_start
            .and_hms_opt(0, 0, 0)
            .unwrap()
            .and_utc()
            .timestamp();
        let end = self
            .simulation_end
            .and_hms_opt(0, 0, 0)
            .unwrap()
            .and_utc()
            .timestamp();
        (start, end)
    }

    pub fn window_days(&self) -> i64 {
        let (start, end) = self.window();
        (end - start) / 86_400
    }

    /// Reporting threshold in minor units.
    pub fn reporting_threshold_cents(&self) -> i64 {
        to_cents(self.reporting_threshold)
    }

    fn resolve(file: GraphConfigFile) -> Result<Self, ConfigError> {
        let master_seed = file.master_seed.ok_or(ConfigError::MissingSeed)?;
        let mut cfg = GraphConfig {
            individual_count: file.individual_count.unwrap_or(1_000),
            business_ratio: file.business_ratio.unwrap_or(0.15),
            institution_count: file.institution_count.unwrap_or(10),
            simulation_start: file
                .simulation_start
                .unwrap_or_else(default_simulation_start),
            simulation_end: file.simulation_end.unwrap_or_else(default_simulation_end),
            target_illicit_ratio: file.target_illicit_ratio.unwrap_or(0.001),
            reporting_threshold: file.reporting_threshold.unwrap_or(10_000.0),
            per_account_daily_rate_cap: file.per_account_daily_rate_cap.unwrap_or(2.0),
            master_seed,
            currency: file.currency.unwrap_or_else(|| "EUR".to_string()),
            accounts_per_individual: file.accounts_per_individual.unwrap_or(Bounds(1, 3)),
            accounts_per_business: file.accounts_per_business.unwrap_or(Bounds(2, 4)),
            background_weights: file
                .background_weights
                .unwrap_or_else(default_background_weights),
            amount_params: file.amount_params.unwrap_or_else(default_amount_params),
            output_formats: file.output_formats.unwrap_or_default(),
            country_table: file.country_table.unwrap_or_else(|| {
                catalog::default_country_table()
                    .into_iter()
                    .map(|(code, high_risk, weight)| CountryEntry {
                        code,
                        high_risk,
                        weight,
                    })
                    .collect()
            }),
            risk_weights: file.risk_weights.unwrap_or_default(),
            structuring: file.structuring.unwrap_or_default(),
            background: file.background.unwrap_or_default(),
        };
        // Any amount kind missing from a user-provided table falls back to
        // its default so samplers never hit an absent entry.
        for (kind, params) in default_amount_params() {
            cfg.amount_params.entry(kind).or_insert(params);
        }
        cfg.normalize();
        cfg.validate()?;
        Ok(cfg)
    }

    fn normalize(&mut self) {
        // Skip when already normalized so that defaulting stays idempotent
        // and serialized configs reload bit-identically.
        let total: f64 = self.background_weights.values().sum();
        if total > 0.0 && (total - 1.0).abs() > 1e-9 {
            for w in self.background_weights.values_mut() {
                *w /= total;
            }
        }
        let country_total: f64 = self.country_table.iter().map(|c| c.weight).sum();
        if country_total > 0.0 && (country_total - 1.0).abs() > 1e-9 {
            for c in &mut self.country_table {
                c.weight /= country_total;
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.individual_count == 0 {
            return Err(invalid("individual_count", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.business_ratio) {
            return Err(invalid("business_ratio", "must lie in [0, 1]"));
        }
        if self.institution_count == 0 {
            return Err(invalid("institution_count", "must be positive"));
        }
        if self.simulation_start >= self.simulation_end {
            return Err(invalid(
                "simulation_end",
                "simulation_start must precede simulation_end",
            ));
        }
        if !(self.target_illicit_ratio > 0.0 && self.target_illicit_ratio < 0.5) {
            return Err(invalid("target_illicit_ratio", "must lie in (0, 0.5)"));
        }
        if self.reporting_threshold <= 0.0 {
            return Err(invalid("reporting_threshold", "must be positive"));
        }
        if self.per_account_daily_rate_cap < 0.0 {
            return Err(invalid(
                "per_account_daily_rate_cap",
                "must be non-negative",
            ));
        }
        self.accounts_per_individual
            .check_ordered("accounts_per_individual")?;
        if self.accounts_per_individual.lo() == 0 {
            return Err(invalid(
                "accounts_per_individual",
                "entities need at least one account",
            ));
        }
        self.accounts_per_business
            .check_ordered("accounts_per_business")?;
        if self.accounts_per_business.lo() == 0 {
            return Err(invalid(
                "accounts_per_business",
                "entities need at least one account",
            ));
        }
        for (kind, w) in &self.background_weights {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(invalid(
                    &format!("background_weights.{}", kind.label()),
                    "weights must be non-negative",
                ));
            }
        }
        let weight_total: f64 = self.background_weights.values().sum();
        if weight_total <= 0.0 {
            return Err(invalid(
                "background_weights",
                "weights must not all be zero",
            ));
        }
        for (kind, p) in &self.amount_params {
            let key = format!("amount_params.{}", kind.label());
            if p.sigma <= 0.0 {
                return Err(invalid(&key, "sigma must be positive"));
            }
            if !(p.min <= p.mu.exp() && p.mu.exp() <= p.max) {
                return Err(invalid(
                    &key,
                    format!(
                        "clip bounds must bracket the median exp(mu)={:.2}",
                        p.mu.exp()
                    ),
                ));
            }
        }
        if self.country_table.is_empty() {
            return Err(invalid("country_table", "at least one country is required"));
        }
        for c in &self.country_table {
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(invalid(
                    "country_table",
                    format!("weight for {} must be non-negative", c.code),
                ));
            }
        }
        if !self.country_table.iter().any(|c| c.weight > 0.0) {
            return Err(invalid("country_table", "weights must not all be zero"));
        }
        self.risk_weights.validate()?;
        if !(0.0..=1.0).contains(&self.structuring.overlay_share) {
            return Err(invalid("structuring.overlay_share", "must lie in [0, 1]"));
        }
        self.structuring.range.check_ordered("structuring.range")?;
        let b = &self.background;
        for (key, v) in [
            ("background.allocation_random", b.allocation_random),
            ("background.allocation_salaries", b.allocation_salaries),
            ("background.allocation_high_value", b.allocation_high_value),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(key, "must lie in [0, 1]"));
            }
        }
        if b.allocation_random + b.allocation_salaries + b.allocation_high_value > 1.0 + 1e-9 {
            return Err(invalid(
                "background",
                "baseline allocations must sum to at most 1",
            ));
        }
        if b.salary_pay_days.is_empty() || b.salary_pay_days.iter().any(|d| !(1..=31).contains(d)) {
            return Err(invalid(
                "background.salary_pay_days",
                "pay days must lie in 1..=31",
            ));
        }
        if !(0.0..=0.5).contains(&b.salary_jitter) {
            return Err(invalid("background.salary_jitter", "must lie in [0, 0.5]"));
        }
        b.recipients_per_business
            .check_ordered("background.recipients_per_business")?;
        b.fraud_mixing.check_ordered("background.fraud_mixing")?;
        if !(b.fraud_mixing.lo() >= 0.0 && b.fraud_mixing.hi() <= 1.0) {
            return Err(invalid("background.fraud_mixing", "must lie in [0, 1]"));
        }
        b.counter_structuring_range
            .check_ordered("background.counter_structuring_range")?;
        if !(b.business_hours.lo() < b.business_hours.hi() && b.business_hours.hi() <= 24) {
            return Err(invalid(
                "background.business_hours",
                "must be an ascending pair within 0..=24",
            ));
        }
        Ok(())
    }
}

/// Layering parameters shared by four of the five typologies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayeringConfig {
    pub enabled: bool,
    pub hops: Bounds<u32>,
    pub decay: Bounds<f64>,
    pub hop_delay: Bounds<DurationSecs>,
    pub pool: LayeringPool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayeringPool {
    Uniform,
    HighRiskCluster,
}

impl Default for LayeringConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            hops: Bounds(2, 5),
            decay: Bounds(0.95, 0.99),
            hop_delay: Bounds(DurationSecs::hours(1), DurationSecs::hours(48)),
            pool: LayeringPool::Uniform,
        }
    }
}

impl LayeringConfig {
    fn validate(&self, prefix: &str) -> Result<(), ConfigError> {
        if self.hops.lo() > self.hops.hi() {
            return Err(invalid(
                &format!("{prefix}.hops"),
                "h_min must not exceed h_max",
            ));
        }
        if !(self.decay.lo() > 0.0 && self.decay.lo() <= self.decay.hi() && self.decay.hi() < 1.0) {
            return Err(invalid(
                &format!("{prefix}.decay"),
                "decay factors must satisfy 0 < min <= max < 1",
            ));
        }
        if !(self.hop_delay.lo() <= self.hop_delay.hi() && self.hop_delay.lo().get() >= 0) {
            return Err(invalid(
                &format!("{prefix}.hop_delay"),
                "delays must be an ascending non-negative pair",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverseasTiming {
    Burst,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OverseasTransfersConfig {
    pub instance_count: u32,
    pub transfer_count: Bounds<u32>,
    /// Transfer amounts in currency units.
    pub transfer_amount: Bounds<f64>,
    pub destination_count: Bounds<u32>,
    pub timing: OverseasTiming,
    pub periods: Vec<DurationSecs>,
    pub period_epsilon: DurationSecs,
    pub burst_window: DurationSecs,
    /// Gap between a funding deposit and its transfer.
    pub deposit_lead: Bounds<DurationSecs>,
    pub layering: LayeringConfig,
}

impl Default for OverseasTransfersConfig {
    fn default() -> Self {
        Self {
            instance_count: 0,
            transfer_count: Bounds(4, 12),
            transfer_amount: Bounds(5_000.0, 20_000.0),
            destination_count: Bounds(2, 5),
            timing: OverseasTiming::Periodic,
            periods: vec![
                DurationSecs::days(7),
                DurationSecs::days(14),
                DurationSecs::days(30),
            ],
            period_epsilon: DurationSecs::hours(6),
            burst_window: DurationSecs::hours(48),
            deposit_lead: Bounds(DurationSecs::minutes(30), DurationSecs::hours(6)),
            layering: LayeringConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RapidMovementConfig {
    pub instance_count: u32,
    pub inflow_count: Bounds<u32>,
    pub inflow_window: DurationSecs,
    pub outflow_delay_min: DurationSecs,
    pub outflow_ratio: Bounds<f64>,
    pub withdrawal_count: Bounds<u32>,
    pub max_span: DurationSecs,
    pub layering: LayeringConfig,
}

impl Default for RapidMovementConfig {
    fn default() -> Self {
        Self {
            instance_count: 0,
            inflow_count: Bounds(2, 7),
            inflow_window: DurationSecs::hours(24),
            outflow_delay_min: DurationSecs::hours(1),
            outflow_ratio: Bounds(0.85, 0.95),
            withdrawal_count: Bounds(2, 8),
            max_span: DurationSecs::hours(128),
            layering: LayeringConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontBusinessConfig {
    pub instance_count: u32,
    pub deposit_count: Bounds<u32>,
    /// Deposit amounts in currency units.
    pub deposit_amount: Bounds<f64>,
    pub deposit_window: DurationSecs,
    pub transfer_delay: Bounds<DurationSecs>,
    pub transfer_ratio: Bounds<f64>,
    pub destination_count: Bounds<u32>,
    pub layering: LayeringConfig,
}

impl Default for FrontBusinessConfig {
    fn default() -> Self {
        Self {
            instance_count: 0,
            deposit_count: Bounds(5, 15),
            deposit_amount: Bounds(15_000.0, 75_000.0),
            deposit_window: DurationSecs::hours(48),
            transfer_delay: Bounds(DurationSecs::minutes(30), DurationSecs::hours(6)),
            transfer_ratio: Bounds(0.80, 1.00),
            destination_count: Bounds(2, 5),
            layering: LayeringConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynchronisedConfig {
    pub instance_count: u32,
    pub coordinator_count: Bounds<u32>,
    pub sync_window: DurationSecs,
    pub transfer_delay: Bounds<DurationSecs>,
    pub transfer_ratio: Bounds<f64>,
    pub deposits_per_coordinator: Bounds<u32>,
}

impl Default for SynchronisedConfig {
    fn default() -> Self {
        Self {
            instance_count: 0,
            coordinator_count: Bounds(3, 8),
            sync_window: DurationSecs::hours(2),
            transfer_delay: Bounds(DurationSecs::hours(1), DurationSecs::hours(6)),
            transfer_ratio: Bounds(0.85, 0.95),
            deposits_per_coordinator: Bounds(1, 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UTurnConfig {
    pub instance_count: u32,
    /// Total entities on the chain, the source included.
    pub chain_entities: Bounds<u32>,
    /// Initial amount in currency units.
    pub initial_amount: Bounds<f64>,
    pub hop_delay: Bounds<DurationSecs>,
    pub hop_fee: Bounds<f64>,
    pub return_ratio: Bounds<f64>,
}

impl Default for UTurnConfig {
    fn default() -> Self {
        Self {
            instance_count: 0,
            chain_entities: Bounds(4, 7),
            initial_amount: Bounds(10_000.0, 100_000.0),
            hop_delay: Bounds(DurationSecs::days(1), DurationSecs::days(5)),
            hop_fee: Bounds(0.01, 0.03),
            return_ratio: Bounds(0.70, 0.90),
        }
    }
}

/// What to do when an instance cannot find eligible entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnInjectError {
    /// Log a warning and continue with the remaining instances.
    #[default]
    Skip,
    /// Abort the run on the first failed instance.
    Abort,
}

/// Fully-resolved pattern-level configuration. An empty file yields all
/// typologies at `instance_count: 0` with default ranges.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternConfig {
    pub on_error: OnInjectError,
    pub overseas_transfers: OverseasTransfersConfig,
    pub rapid_movement: RapidMovementConfig,
    pub front_business: FrontBusinessConfig,
    pub synchronised: SynchronisedConfig,
    pub u_turn: UTurnConfig,
}

impl PatternConfig {
    pub fn total_instances(&self) -> u64 {
        self.overseas_transfers.instance_count as u64
            + self.rapid_movement.instance_count as u64
            + self.front_business.instance_count as u64
            + self.synchronised.instance_count as u64
            + self.u_turn.instance_count as u64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let o = &self.overseas_transfers;
        o.transfer_count
            .check_ordered("overseas_transfers.transfer_count")?;
        if o.transfer_count.lo() == 0 {
            return Err(invalid(
                "overseas_transfers.transfer_count",
                "must be at least 1",
            ));
        }
        o.transfer_amount
            .check_ordered("overseas_transfers.transfer_amount")?;
        o.destination_count
            .check_ordered("overseas_transfers.destination_count")?;
        if o.destination_count.lo() == 0 {
            return Err(invalid(
                "overseas_transfers.destination_count",
                "must be at least 1",
            ));
        }
        if o.periods.is_empty() || o.periods.iter().any(|p| p.get() <= 0) {
            return Err(invalid(
                "overseas_transfers.periods",
                "need at least one positive period",
            ));
        }
        if o.period_epsilon.get() < 0 || o.periods.iter().any(|p| p.get() <= o.period_epsilon.get())
        {
            return Err(invalid(
                "overseas_transfers.period_epsilon",
                "epsilon must be non-negative and below every period",
            ));
        }
        if o.burst_window.get() <= 0 {
            return Err(invalid(
                "overseas_transfers.burst_window",
                "must be positive",
            ));
        }
        o.deposit_lead
            .check_ordered("overseas_transfers.deposit_lead")?;
        o.layering.validate("overseas_transfers.layering")?;

        let r = &self.rapid_movement;
        r.inflow_count
            .check_ordered("rapid_movement.inflow_count")?;
        if r.inflow_count.lo() == 0 {
            return Err(invalid("rapid_movement.inflow_count", "must be at least 1"));
        }
        if r.inflow_window.get() <= 0 || r.max_span.get() <= 0 {
            return Err(invalid("rapid_movement", "windows must be positive"));
        }
        r.outflow_ratio
            .check_ordered("rapid_movement.outflow_ratio")?;
        r.withdrawal_count
            .check_ordered("rapid_movement.withdrawal_count")?;
        if r.withdrawal_count.lo() == 0 {
            return Err(invalid(
                "rapid_movement.withdrawal_count",
                "must be at least 1",
            ));
        }
        if r.inflow_window.get() + r.outflow_delay_min.get() >= r.max_span.get() {
            return Err(invalid(
                "rapid_movement.max_span",
                "must exceed inflow_window plus outflow_delay_min",
            ));
        }
        r.layering.validate("rapid_movement.layering")?;

        let f = &self.front_business;
        f.deposit_count
            .check_ordered("front_business.deposit_count")?;
        if f.deposit_count.lo() == 0 {
            return Err(invalid(
                "front_business.deposit_count",
                "must be at least 1",
            ));
        }
        f.deposit_amount
            .check_ordered("front_business.deposit_amount")?;
        if f.deposit_window.get() <= 0 {
            return Err(invalid("front_business.deposit_window", "must be positive"));
        }
        f.transfer_delay
            .check_ordered("front_business.transfer_delay")?;
        f.transfer_ratio
            .check_ordered("front_business.transfer_ratio")?;
        f.destination_count
            .check_ordered("front_business.destination_count")?;
        if f.destination_count.lo() == 0 {
            return Err(invalid(
                "front_business.destination_count",
                "must be at least 1",
            ));
        }
        f.layering.validate("front_business.layering")?;

        let s = &self.synchronised;
        s.coordinator_count
            .check_ordered("synchronised.coordinator_count")?;
        if s.coordinator_count.lo() < 2 {
            return Err(invalid(
                "synchronised.coordinator_count",
                "needs at least 2 coordinators",
            ));
        }
        if s.sync_window.get() <= 0 {
            return Err(invalid("synchronised.sync_window", "must be positive"));
        }
        s.transfer_delay
            .check_ordered("synchronised.transfer_delay")?;
        s.transfer_ratio
            .check_ordered("synchronised.transfer_ratio")?;
        s.deposits_per_coordinator
            .check_ordered("synchronised.deposits_per_coordinator")?;
        if s.deposits_per_coordinator.lo() == 0 {
            return Err(invalid(
                "synchronised.deposits_per_coordinator",
                "must be at least 1",
            ));
        }

        let u = &self.u_turn;
        u.chain_entities.check_ordered("u_turn.chain_entities")?;
        if u.chain_entities.lo() < 3 {
            return Err(invalid(
                "u_turn.chain_entities",
                "a round trip needs at least 3 entities",
            ));
        }
        u.initial_amount.check_ordered("u_turn.initial_amount")?;
        u.hop_delay.check_ordered("u_turn.hop_delay")?;
        u.hop_fee.check_ordered("u_turn.hop_fee")?;
        if !(u.hop_fee.lo() >= 0.0 && u.hop_fee.hi() < 1.0) {
            return Err(invalid("u_turn.hop_fee", "fees must lie in [0, 1)"));
        }
        u.return_ratio.check_ordered("u_turn.return_ratio")?;
        if !(u.return_ratio.lo() > 0.0 && u.return_ratio.hi() <= 1.0) {
            return Err(invalid("u_turn.return_ratio", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

fn read_file(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_graph_config(path: &Path) -> Result<GraphConfig, ConfigError> {
    let text = read_file(path)?;
    parse_graph_config(&text, &path.display().to_string())
}

pub fn parse_graph_config(text: &str, origin: &str) -> Result<GraphConfig, ConfigError> {
    if text.trim().is_empty() {
        return GraphConfig::resolve(GraphConfigFile::default());
    }
    // Accept both the raw (sparse) and the fully-resolved (round-trip) form.
    let file: GraphConfigFile = serde_yaml::from_str(text).map_err(|e| ConfigError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    GraphConfig::resolve(file)
}

pub fn load_pattern_config(path: &Path) -> Result<PatternConfig, ConfigError> {
    let text = read_file(path)?;
    parse_pattern_config(&text, &path.display().to_string())
}

pub fn parse_pattern_config(text: &str, origin: &str) -> Result<PatternConfig, ConfigError> {
    let cfg: PatternConfig = if text.trim().is_empty() {
        PatternConfig::default()
    } else {
        serde_yaml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Cross-checks between the two configs. Warnings only; nothing is mutated.
pub fn validate_combined(graph: &GraphConfig, patterns: &PatternConfig) -> Vec<String> {
    let mut warnings = Vec::new();

    if patterns.total_instances() == 0 {
        warnings.push("no fraud will be injected: every typology has instance_count 0".to_string());
    }

    // Rough per-instance role demand against the entity population.
    let demand = patterns.overseas_transfers.instance_count as u64
        * (1 + patterns.overseas_transfers.destination_count.hi() as u64)
        + patterns.rapid_movement.instance_count as u64
            * (1 + patterns.rapid_movement.inflow_count.hi() as u64)
        + patterns.front_business.instance_count as u64
            * (1 + patterns.front_business.destination_count.hi() as u64)
        + patterns.synchronised.instance_count as u64
            * (1 + patterns.synchronised.coordinator_count.hi() as u64)
        + patterns.u_turn.instance_count as u64 * patterns.u_turn.chain_entities.hi() as u64;
    let population = (graph.individual_count as f64 * (1.0 + graph.business_ratio)) as u64;
    if demand > population {
        warnings.push(format!(
            "insufficient eligible entities likely: pattern role demand ~{demand} exceeds entity population {population}"
        ));
    }

    // Funding deposits are capped below the reporting threshold; tiny
    // thresholds make deposit chains absurdly long.
    let max_transfer = patterns.overseas_transfers.transfer_amount.hi();
    let deposit_cap = 0.70 * graph.reporting_threshold;
    if patterns.overseas_transfers.instance_count > 0 && max_transfer / deposit_cap > 20.0 {
        warnings.push(format!(
            "reporting_threshold {} is small relative to overseas transfer amounts; funding deposit chains will be long",
            graph.reporting_threshold
        ));
    }

    // Periodic overseas instances must fit the simulation window.
    let o = &patterns.overseas_transfers;
    if o.instance_count > 0 && o.timing == OverseasTiming::Periodic {
        let window = graph.window().1 - graph.window().0;
        let min_period = o.periods.iter().map(|p| p.get()).min().unwrap_or(0);
        let min_span = (o.transfer_count.lo() as i64 - 1) * min_period;
        if min_span > window {
            warnings.push(
                "simulation window is shorter than the smallest periodic overseas span; instances may be skipped"
                    .to_string(),
            );
        }
    }

    warnings
}

pub fn to_cents(amount: f64) -> i64 {
    (amount * 100.0).round() as i64
}

pub fn cents_to_units(cents: i64) -> f64 {
    cents as f64 / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded(extra: &str) -> String {
        format!("master_seed: 42\n{extra}")
    }

    #[test]
    fn li_shaped_config_loads() {
        let text = seeded(
            "individual_count: 8000\nsimulation_start: 2025-01-01\nsimulation_end: 2026-01-01\ntarget_illicit_ratio: 0.001\n",
        );
        let cfg = parse_graph_config(&text, "test").unwrap();
        assert_eq!(cfg.individual_count, 8000);
        assert_eq!(cfg.window_days(), 365);
        assert!((cfg.target_illicit_ratio - 0.001).abs() < 1e-12);
    }

    #[test]
    fn rate_cap_defaults_to_two() {
        let cfg = parse_graph_config(&seeded(""), "test").unwrap();
        assert_eq!(cfg.per_account_daily_rate_cap, 2.0);
        assert_eq!(cfg.reporting_threshold, 10_000.0);
        assert_eq!(cfg.currency, "EUR");
    }

    #[test]
    fn empty_window_rejected() {
        let text = seeded("simulation_start: 2025-03-01\nsimulation_end: 2025-03-01\n");
        let err = parse_graph_config(&text, "test").unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref key, .. } if key == "simulation_end"));
    }

    #[test]
    fn missing_seed_rejected() {
        let err = parse_graph_config("individual_count: 10\n", "test").unwrap_err();
        assert!(matches!(err, ConfigError::MissingSeed));
    }

    #[test]
    fn background_weights_normalized() {
        let cfg = parse_graph_config(&seeded(""), "test").unwrap();
        let total: f64 = cfg.background_weights.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // Default weights are 68/12/8/11 before normalization.
        let payment = cfg.background_weights[&AmountKind::Payment];
        assert!((payment - 68.0 / 99.0).abs() < 1e-12);
    }

    #[test]
    fn table_amount_params_are_defaults() {
        let cfg = parse_graph_config(&seeded(""), "test").unwrap();
        let p = cfg.amount_params[&AmountKind::Payment];
        assert_eq!((p.mu, p.sigma), (3.8, 1.2));
        let t = cfg.amount_params[&AmountKind::Transfer];
        assert_eq!((t.mu, t.sigma), (5.5, 2.0));
        let w = cfg.amount_params[&AmountKind::Withdrawal];
        assert_eq!((w.mu, w.sigma), (4.8, 0.9));
        let d = cfg.amount_params[&AmountKind::Deposit];
        assert_eq!((d.mu, d.sigma), (5.3, 1.5));
    }

    #[test]
    fn graph_config_round_trips() {
        let cfg = parse_graph_config(&seeded("business_ratio: 0.2\n"), "test").unwrap();
        let serialized = serde_yaml::to_string(&cfg).unwrap();
        let reloaded = parse_graph_config(&serialized, "round-trip").unwrap();
        assert_eq!(cfg, reloaded);
    }

    #[test]
    fn empty_pattern_file_defaults() {
        let cfg = parse_pattern_config("", "test").unwrap();
        assert_eq!(cfg.total_instances(), 0);
        assert_eq!(cfg.overseas_transfers.transfer_count, Bounds(4, 12));
        assert_eq!(cfg.overseas_transfers.destination_count, Bounds(2, 5));
        assert_eq!(cfg.u_turn.chain_entities, Bounds(4, 7));
        assert_eq!(cfg.overseas_transfers.layering.hops, Bounds(2, 5));
    }

    #[test]
    fn layering_bounds_accepted_verbatim() {
        let text = "overseas_transfers:\n  instance_count: 1\n  layering:\n    hops: [2, 5]\n";
        let cfg = parse_pattern_config(text, "test").unwrap();
        assert_eq!(cfg.overseas_transfers.layering.hops, Bounds(2, 5));
        assert!(cfg.overseas_transfers.layering.enabled);
    }

    #[test]
    fn decay_of_one_rejected() {
        let text =
            "u_turn:\n  instance_count: 1\nrapid_movement:\n  layering:\n    decay: [0.95, 1.0]\n";
        let err = parse_pattern_config(text, "test").unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref key, .. } if key.contains("decay")));
    }

    #[test]
    fn pattern_config_round_trips() {
        let cfg = parse_pattern_config("synchronised:\n  instance_count: 3\n", "test").unwrap();
        let serialized = serde_yaml::to_string(&cfg).unwrap();
        let reloaded = parse_pattern_config(&serialized, "round-trip").unwrap();
        assert_eq!(cfg, reloaded);
    }

    #[test]
    fn combined_checks() {
        let graph = parse_graph_config(&seeded("individual_count: 8000\n"), "test").unwrap();
        let mut patterns = PatternConfig::default();
        patterns.overseas_transfers.instance_count = 64;
        patterns.rapid_movement.instance_count = 64;
        patterns.front_business.instance_count = 64;
        patterns.synchronised.instance_count = 64;
        patterns.u_turn.instance_count = 64;
        assert!(validate_combined(&graph, &patterns)
            .iter()
            .all(|w| !w.contains("insufficient")));

        let small = parse_graph_config(&seeded("individual_count: 100\n"), "test").unwrap();
        patterns.synchronised.instance_count = 5_000;
        assert!(validate_combined(&small, &patterns)
            .iter()
            .any(|w| w.contains("insufficient eligible entities")));

        let empty = PatternConfig::default();
        assert!(validate_combined(&graph, &empty)
            .iter()
            .any(|w| w.contains("no fraud will be injected")));
    }

    #[test]
    fn duration_parsing() {
        assert_eq!(DurationSecs::parse("24h").unwrap(), DurationSecs::hours(24));
        assert_eq!(DurationSecs::parse("7d").unwrap(), DurationSecs::days(7));
        assert_eq!(
            DurationSecs::parse("30m").unwrap(),
            DurationSecs::minutes(30)
        );
        assert_eq!(
            DurationSecs::parse("90").unwrap(),
            DurationSecs::seconds(90)
        );
        assert!(DurationSecs::parse("5y").is_err());
        assert_eq!(DurationSecs::hours(36).to_string(), "36h");
        assert_eq!(DurationSecs::days(7).to_string(), "7d");
    }

    #[test]
    fn defaulting_is_idempotent() {
        let once = parse_graph_config(&seeded(""), "test").unwrap();
        let twice = parse_graph_config(&serde_yaml::to_string(&once).unwrap(), "test").unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn byte_identical_files_yield_equal_configs() {
        let text = seeded("individual_count: 512\nbusiness_ratio: 0.25\n");
        let a = parse_graph_config(&text, "a").unwrap();
        let b = parse_graph_config(&text, "b").unwrap();
        assert_eq!(a, b);
    }
}
