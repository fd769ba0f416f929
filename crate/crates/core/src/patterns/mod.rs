//! Workflow steps 2-3: select role-matching entities and emit the
//! transaction sequences for the five laundering typologies.
//!
//! Every instance draws from its own seed substream indexed by
//! `(typology, instance number)`, so changing the instance count of one
//! typology leaves every other typology's transactions byte-identical.

pub mod layering;
pub mod schedule;
mod typologies;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{GraphConfig, OnInjectError, PatternConfig};
use crate::model::{ClusterId, Graph, NodeIdx, NodeKind, PendingEdge};
use crate::rng::{RngStream, SeedTree};

pub use layering::{apply_layering, ChainAnchor, ChainLeg, LayeringParams};
pub use schedule::{schedule_burst, schedule_periodic};

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("invalid burst window: {0}")]
    InvalidWindow(String),
    #[error("invalid period: {0}")]
    InvalidPeriod(String),
    #[error("intermediary pool exhausted: needed {needed}, available {available}")]
    PoolExhausted { needed: usize, available: usize },
    #[error("no eligible source entity for {0}")]
    NoEligibleSource(Typology),
    #[error("no eligible overseas destination accounts")]
    NoOverseasDestinations,
    #[error("no eligible beneficiary or overseas counterparties for rapid movement")]
    NoEligibleBeneficiary,
    #[error("no eligible front business with accounts at multiple institutions")]
    NoEligibleBusiness,
    #[error("not enough overseas businesses in distinct countries")]
    InsufficientOverseasBusinesses,
    #[error("not enough attribute-diverse coordinators or no recipient")]
    InsufficientCoordinators,
    #[error("simulation window too short for a {0} instance")]
    WindowTooShort(Typology),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Typology {
    OverseasTransfers,
    RapidMovement,
    FrontBusiness,
    Synchronised,
    UTurn,
}

impl Typology {
    pub const ALL: [Typology; 5] = [
        Typology::OverseasTransfers,
        Typology::RapidMovement,
        Typology::FrontBusiness,
        Typology::Synchronised,
        Typology::UTurn,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Typology::OverseasTransfers => "overseas_transfers",
            Typology::RapidMovement => "rapid_movement",
            Typology::FrontBusiness => "front_business",
            Typology::Synchronised => "synchronised",
            Typology::UTurn => "u_turn",
        }
    }
}

impl std::fmt::Display for Typology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Echo of the layering parameters an instance was generated with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayeringResolved {
    pub enabled: bool,
    pub hops: (u32, u32),
    pub decay: (f64, f64),
    pub hop_delay_secs: (i64, i64),
}

impl LayeringResolved {
    fn from_params(p: &LayeringParams) -> Self {
        Self {
            enabled: p.enabled,
            hops: (p.hops_min, p.hops_max),
            decay: (p.decay_min, p.decay_max),
            hop_delay_secs: (p.delay_min_secs, p.delay_max_secs),
        }
    }
}

/// Resolved parameters an instance must be validated against. Amount ranges
/// are in currency units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "typology", rename_all = "snake_case")]
pub enum ResolvedParams {
    OverseasTransfers {
        transfer_count: (u32, u32),
        transfer_amount: (f64, f64),
        destination_count: (u32, u32),
        timing: String,
        period_secs: Option<i64>,
        period_epsilon_secs: i64,
        burst_window_secs: i64,
        reporting_threshold: f64,
        layering: LayeringResolved,
    },
    RapidMovement {
        inflow_count: (u32, u32),
        inflow_window_secs: i64,
        outflow_delay_min_secs: i64,
        outflow_ratio: (f64, f64),
        max_span_secs: i64,
        reporting_threshold: f64,
        layering: LayeringResolved,
    },
    FrontBusiness {
        deposit_count: (u32, u32),
        deposit_amount: (f64, f64),
        deposit_window_secs: i64,
        transfer_delay_secs: (i64, i64),
        transfer_ratio: (f64, f64),
        destination_count: (u32, u32),
        layering: LayeringResolved,
    },
    Synchronised {
        coordinator_count: (u32, u32),
        sync_window_secs: i64,
        transfer_delay_secs: (i64, i64),
        transfer_ratio: (f64, f64),
        reporting_threshold: f64,
    },
    UTurn {
        chain_entities: (u32, u32),
        initial_amount: (f64, f64),
        hop_delay_secs: (i64, i64),
        hop_fee: (f64, f64),
        return_ratio: (f64, f64),
    },
}

impl ResolvedParams {
    pub fn typology(&self) -> Typology {
        match self {
            ResolvedParams::OverseasTransfers { .. } => Typology::OverseasTransfers,
            ResolvedParams::RapidMovement { .. } => Typology::RapidMovement,
            ResolvedParams::FrontBusiness { .. } => Typology::FrontBusiness,
            ResolvedParams::Synchronised { .. } => Typology::Synchronised,
            ResolvedParams::UTurn { .. } => Typology::UTurn,
        }
    }
}

/// One injected typology instance: role bindings, the chronologically
/// ordered fraud transactions with per-edge role tags, and the resolved
/// parameters it must validate against.
#[derive(Debug, Clone)]
pub struct PatternInstance {
    pub typology: Typology,
    pub instance_index: u32,
    pub role_bindings: BTreeMap<String, Vec<String>>,
    pub transactions: Vec<PendingEdge>,
    /// Role tag per transaction, e.g. `transfer[2].hop[0]` or `deposit[4]`.
    pub edge_roles: Vec<String>,
    /// Graph sequence numbers, aligned with `transactions` after insertion.
    pub edge_seqs: Vec<u64>,
    pub params: ResolvedParams,
}

impl PatternInstance {
    pub fn instance_id(&self) -> String {
        format!("{}#{}", self.typology.label(), self.instance_index)
    }
}

/// Injector output before graph insertion.
pub(crate) struct DraftInstance {
    pub role_bindings: BTreeMap<String, Vec<String>>,
    pub tagged_edges: Vec<(PendingEdge, String)>,
    /// Individuals/businesses to mark fraudulent and reserve per typology.
    pub bound_entities: Vec<NodeIdx>,
    pub params: ResolvedParams,
}

/// Shared read-only context for the injectors.
pub(crate) struct InjectCtx<'a> {
    pub graph: &'a Graph,
    pub window: (i64, i64),
    pub threshold_cents: i64,
    /// Accounts owned by entities in any high-risk cluster (the clustered
    /// layering pool).
    pub high_risk_accounts: Vec<NodeIdx>,
}

impl<'a> InjectCtx<'a> {
    pub fn new(graph: &'a Graph, gcfg: &GraphConfig) -> Self {
        let mut high_risk_entities = BTreeSet::new();
        for cluster in [
            ClusterId::HighRiskAge,
            ClusterId::HighRiskOccupation,
            ClusterId::HighRiskJurisdiction,
            ClusterId::CashIntensiveBusiness,
            ClusterId::VerySmallCompany,
        ] {
            high_risk_entities.extend(graph.clusters[&cluster].iter().copied());
        }
        let mut high_risk_accounts = Vec::new();
        for entity in high_risk_entities {
            high_risk_accounts.extend_from_slice(graph.owner_accounts(entity));
        }
        Self {
            graph,
            window: graph.window,
            threshold_cents: gcfg.reporting_threshold_cents(),
            high_risk_accounts,
        }
    }

    pub fn layering_pool(&self, params: &LayeringParams) -> &[NodeIdx] {
        if params.high_risk_pool {
            &self.high_risk_accounts
        } else {
            &self.graph.regular_accounts
        }
    }
}

/// Ceiling division for non-negative operands.
pub(crate) fn ceil_div(a: i64, b: i64) -> i64 {
    (a + b - 1) / b
}

/// Sub-threshold structured amount: uniform over [0.70, 0.9999] of the
/// reporting threshold, in cents.
pub(crate) fn sub_threshold_cents(threshold_cents: i64, rng: &mut RngStream) -> i64 {
    let lo = ceil_div(threshold_cents * 70, 100);
    let hi = threshold_cents * 9_999 / 10_000;
    rng.random_range(lo..=hi)
}

/// Uniform draw from the interior of a ratio range, leaving margin so cent
/// rounding cannot push an observed ratio outside the configured bounds.
pub(crate) fn interior_ratio(lo: f64, hi: f64, rng: &mut RngStream) -> f64 {
    let margin = ((hi - lo) * 0.05).min(0.003);
    rng.random_range(lo + margin..=hi - margin)
}

/// Union of cluster members ordered by (risk desc, idx asc).
pub(crate) fn cluster_union(graph: &Graph, clusters: &[ClusterId]) -> Vec<NodeIdx> {
    let mut set = BTreeSet::new();
    for c in clusters {
        set.extend(graph.clusters[c].iter().copied());
    }
    let mut out: Vec<NodeIdx> = set.into_iter().collect();
    out.sort_by(|a, b| {
        graph.nodes[*b as usize]
            .risk_score
            .partial_cmp(&graph.nodes[*a as usize].risk_score)
            .unwrap()
            .then(a.cmp(b))
    });
    out
}

/// Draws up to `k` elements by partial shuffle; returns fewer when the pool
/// is smaller.
pub(crate) fn pick_k(pool: &mut Vec<NodeIdx>, k: usize, rng: &mut RngStream) -> Vec<NodeIdx> {
    if pool.len() <= k {
        return std::mem::take(pool);
    }
    for i in 0..k {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool[..k].to_vec()
}

pub(crate) fn pick_one(pool: &mut Vec<NodeIdx>, rng: &mut RngStream) -> Option<NodeIdx> {
    if pool.is_empty() {
        None
    } else {
        Some(pool.swap_remove(rng.random_range(0..pool.len())))
    }
}

/// Full Fisher-Yates shuffle, for greedy scans that should not favour the
/// head of a risk-ordered pool.
pub(crate) fn shuffled(mut pool: Vec<NodeIdx>, rng: &mut RngStream) -> Vec<NodeIdx> {
    for i in (1..pool.len()).rev() {
        let j = rng.random_range(0..=i);
        pool.swap(i, j);
    }
    pool
}

/// A random regular account of an owner.
pub(crate) fn pick_account(graph: &Graph, owner: NodeIdx, rng: &mut RngStream) -> NodeIdx {
    let accounts = graph.owner_accounts(owner);
    accounts[rng.random_range(0..accounts.len())]
}

/// All entities (individuals and businesses, not yet excluded) located
/// outside `home_country`, split into high-risk-jurisdiction priority and
/// general fallback pools. Both ordered by (risk desc, idx asc).
pub(crate) fn overseas_pools(
    graph: &Graph,
    home_country: &str,
    business_only: bool,
    exclude: &BTreeSet<NodeIdx>,
) -> (Vec<NodeIdx>, Vec<NodeIdx>) {
    let eligible = |idx: &NodeIdx| {
        let node = &graph.nodes[*idx as usize];
        if node.country_code == home_country || exclude.contains(idx) {
            return false;
        }
        if business_only && !matches!(node.kind, NodeKind::Business { .. }) {
            return false;
        }
        !graph.owner_accounts(*idx).is_empty()
    };
    let priority: Vec<NodeIdx> = graph.clusters[&ClusterId::HighRiskJurisdiction]
        .iter()
        .copied()
        .filter(|i| eligible(i))
        .collect();
    let in_priority: BTreeSet<NodeIdx> = priority.iter().copied().collect();
    let mut fallback: Vec<NodeIdx> = graph
        .nodes
        .iter()
        .filter(|n| n.is_entity())
        .map(|n| n.idx)
        .filter(|i| eligible(i) && !in_priority.contains(i))
        .collect();
    fallback.sort_by(|a, b| {
        graph.nodes[*b as usize]
            .risk_score
            .partial_cmp(&graph.nodes[*a as usize].risk_score)
            .unwrap()
            .then(a.cmp(b))
    });
    (priority, fallback)
}

/// Sorts tagged edges chronologically (stable on generation order) and
/// splits them into the parallel vectors of a finished instance.
pub(crate) fn finish_instance(
    typology: Typology,
    instance_index: u32,
    mut draft: DraftInstance,
) -> PatternInstance {
    let mut order: Vec<usize> = (0..draft.tagged_edges.len()).collect();
    order.sort_by_key(|&i| (draft.tagged_edges[i].0.timestamp, i));
    let mut transactions = Vec::with_capacity(order.len());
    let mut edge_roles = Vec::with_capacity(order.len());
    for i in order {
        let (edge, role) = draft.tagged_edges[i].clone();
        debug_assert!(edge.is_fraud);
        transactions.push(edge);
        edge_roles.push(role);
    }
    draft.tagged_edges.clear();
    PatternInstance {
        typology,
        instance_index,
        role_bindings: draft.role_bindings,
        transactions,
        edge_roles,
        edge_seqs: Vec::new(),
        params: draft.params,
    }
}

/// Injects every configured instance of every typology, marking bound
/// entities fraudulent before background generation. Returns the finished
/// instances plus skip warnings (in skip mode).
pub fn inject_all(
    graph: &mut Graph,
    pcfg: &PatternConfig,
    gcfg: &GraphConfig,
    seeds: &SeedTree,
) -> Result<(Vec<PatternInstance>, Vec<String>), PatternError> {
    let mut instances = Vec::new();
    let mut warnings = Vec::new();

    for typology in Typology::ALL {
        let count = match typology {
            Typology::OverseasTransfers => pcfg.overseas_transfers.instance_count,
            Typology::RapidMovement => pcfg.rapid_movement.instance_count,
            Typology::FrontBusiness => pcfg.front_business.instance_count,
            Typology::Synchronised => pcfg.synchronised.instance_count,
            Typology::UTurn => pcfg.u_turn.instance_count,
        };
        // Entities bound by earlier instances of this typology; an entity
        // joins at most one instance per typology.
        let mut used: BTreeSet<NodeIdx> = BTreeSet::new();
        for index in 0..count {
            let mut rng =
                seeds.indexed_stream(&format!("patterns/{}", typology.label()), index as u64);
            let ctx = InjectCtx::new(graph, gcfg);
            let result = match typology {
                Typology::OverseasTransfers => typologies::inject_overseas_transfers(
                    &ctx,
                    &pcfg.overseas_transfers,
                    &used,
                    &mut rng,
                ),
                Typology::RapidMovement => {
                    typologies::inject_rapid_movement(&ctx, &pcfg.rapid_movement, &used, &mut rng)
                }
                Typology::FrontBusiness => {
                    typologies::inject_front_business(&ctx, &pcfg.front_business, &used, &mut rng)
                }
                Typology::Synchronised => {
                    typologies::inject_synchronised(&ctx, &pcfg.synchronised, &used, &mut rng)
                }
                Typology::UTurn => typologies::inject_u_turn(&ctx, &pcfg.u_turn, &used, &mut rng),
            };
            let draft = match result {
                Ok(draft) => draft,
                Err(err) => match pcfg.on_error {
                    OnInjectError::Abort => return Err(err),
                    OnInjectError::Skip => {
                        warnings.push(format!("skipped {}#{index}: {err}", typology.label()));
                        continue;
                    }
                },
            };
            used.extend(draft.bound_entities.iter().copied());
            for &entity in &draft.bound_entities {
                graph.mark_fraudulent(entity);
            }
            let mut instance = finish_instance(typology, index, draft);
            for edge in &instance.transactions {
                // Accounts touched by fraud transactions are fraud-labelled;
                // the shared global cash node never is.
                for endpoint in [edge.source, edge.target] {
                    if endpoint != graph.cash_node {
                        graph.mark_fraudulent(endpoint);
                    }
                }
                instance.edge_seqs.push(
                    graph
                        .insert_transaction(*edge)
                        .expect("pattern edges are window-checked at generation"),
                );
            }
            instances.push(instance);
        }
    }
    Ok((instances, warnings))
}
