//! Structural validation: every injected instance is checked against its own
//! resolved parameters (structure, amounts, timing), plus whole-dataset
//! statistics and an end-to-end determinism check.
//!
//! Constraints are evaluated as data: each check produces a named record
//! with observed and required values, so reports stay machine-readable and
//! individual bounds can be exercised in isolation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::to_cents;
use crate::model::{Graph, Relation, TxCategory};
use crate::patterns::{PatternInstance, ResolvedParams, Typology};

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error("unknown typology `{0}`")]
    UnknownTypology(String),
    #[error("malformed export: {0}")]
    Malformed(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Ratio checks tolerate one cent of rounding on either side.
const RATIO_SLACK: f64 = 1e-5;

/// One evaluated constraint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    pub observed: String,
    pub required: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceReport {
    pub instance_id: String,
    pub typology: String,
    pub pass: bool,
    pub violations: Vec<Violation>,
}

/// An edge as the validator sees it, whether sourced from memory or from a
/// re-parsed export.
#[derive(Debug, Clone)]
pub struct EdgeView {
    pub source_id: String,
    pub target_id: String,
    pub amount_cents: i64,
    pub timestamp: i64,
    pub category: TxCategory,
    pub is_fraud: bool,
    pub role: String,
}

#[derive(Debug, Clone)]
pub struct InstanceView {
    pub instance_id: String,
    pub typology: Typology,
    pub role_bindings: BTreeMap<String, Vec<String>>,
    pub edges: Vec<EdgeView>,
    pub params: ResolvedParams,
}

/// Node facts needed to re-check jurisdiction and ownership constraints.
#[derive(Debug, Clone, Default)]
pub struct NodeFacts {
    pub country: String,
    pub owner_id: Option<String>,
    pub node_type: String,
}

/// Lookup context for instance validation.
pub struct ValidateContext {
    pub nodes: BTreeMap<String, NodeFacts>,
    /// business node id -> owning individual node id.
    pub business_owner: BTreeMap<String, String>,
    pub high_risk_countries: BTreeSet<String>,
}

impl ValidateContext {
    pub fn from_graph(graph: &Graph, cfg: &crate::config::GraphConfig) -> Self {
        let mut nodes = BTreeMap::new();
        for node in &graph.nodes {
            let owner_id = match node.kind {
                crate::model::NodeKind::Account { owner, .. } => {
                    Some(graph.nodes[owner as usize].node_id.clone())
                }
                _ => None,
            };
            nodes.insert(
                node.node_id.clone(),
                NodeFacts {
                    country: node.country_code.clone(),
                    owner_id,
                    node_type: node.node_type().label().to_string(),
                },
            );
        }
        let mut business_owner = BTreeMap::new();
        for (&owner, businesses) in &graph.businesses_by_owner {
            for &b in businesses {
                business_owner.insert(
                    graph.nodes[b as usize].node_id.clone(),
                    graph.nodes[owner as usize].node_id.clone(),
                );
            }
        }
        let high_risk_countries = cfg
            .country_table
            .iter()
            .filter(|c| c.high_risk)
            .map(|c| c.code.clone())
            .collect();
        Self {
            nodes,
            business_owner,
            high_risk_countries,
        }
    }

    fn country(&self, node_id: &str) -> &str {
        self.nodes
            .get(node_id)
            .map(|n| n.country.as_str())
            .unwrap_or("")
    }

    fn owner(&self, account_id: &str) -> Option<&str> {
        self.nodes
            .get(account_id)
            .and_then(|n| n.owner_id.as_deref())
    }
}

/// Builds the validator view of an in-memory instance.
pub fn instance_view(instance: &PatternInstance, graph: &Graph) -> InstanceView {
    let edges = instance
        .transactions
        .iter()
        .zip(instance.edge_roles.iter())
        .map(|(e, role)| EdgeView {
            source_id: graph.nodes[e.source as usize].node_id.clone(),
            target_id: graph.nodes[e.target as usize].node_id.clone(),
            amount_cents: e.amount_cents,
            timestamp: e.timestamp,
            category: e.category,
            is_fraud: e.is_fraud,
            role: role.clone(),
        })
        .collect();
    InstanceView {
        instance_id: instance.instance_id(),
        typology: instance.typology,
        role_bindings: instance.role_bindings.clone(),
        edges,
        params: instance.params.clone(),
    }
}

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn new() -> Self {
        Self {
            violations: Vec::new(),
        }
    }

    fn fail(&mut self, constraint: &str, observed: impl ToString, required: impl ToString) {
        self.violations.push(Violation {
            constraint: constraint.to_string(),
            observed: observed.to_string(),
            required: required.to_string(),
        });
    }

    fn check(
        &mut self,
        constraint: &str,
        ok: bool,
        observed: impl ToString,
        required: impl ToString,
    ) {
        if !ok {
            self.fail(constraint, observed, required);
        }
    }

    fn in_range_u(&mut self, constraint: &str, observed: u64, lo: u64, hi: u64) {
        self.check(
            constraint,
            (lo..=hi).contains(&observed),
            observed,
            format!("[{lo}, {hi}]"),
        );
    }

    fn in_range_cents(&mut self, constraint: &str, observed: i64, lo_units: f64, hi_units: f64) {
        let lo = to_cents(lo_units);
        let hi = to_cents(hi_units);
        self.check(
            constraint,
            (lo..=hi).contains(&observed),
            format!("{:.2}", observed as f64 / 100.0),
            format!("[{lo_units:.2}, {hi_units:.2}]"),
        );
    }

    fn ratio(&mut self, constraint: &str, observed: f64, lo: f64, hi: f64) {
        self.check(
            constraint,
            observed >= lo - RATIO_SLACK && observed <= hi + RATIO_SLACK,
            format!("{observed:.6}"),
            format!("[{lo}, {hi}]"),
        );
    }

    fn duration(&mut self, constraint: &str, observed: i64, lo: i64, hi: i64) {
        self.check(
            constraint,
            (lo..=hi).contains(&observed),
            format!("{observed}s"),
            format!("[{lo}s, {hi}s]"),
        );
    }
}

/// Hop legs of one logical transfer, grouped by role prefix and ordered by
/// hop index.
fn chains_by_prefix<'a>(edges: &'a [EdgeView], sep: &str) -> BTreeMap<String, Vec<&'a EdgeView>> {
    let mut out: BTreeMap<String, Vec<(usize, &EdgeView)>> = BTreeMap::new();
    for edge in edges {
        if let Some((prefix, rest)) = edge.role.rsplit_once(sep) {
            if let Ok(hop) = rest.trim_end_matches(']').parse::<usize>() {
                out.entry(prefix.to_string()).or_default().push((hop, edge));
            }
        }
    }
    out.into_iter()
        .map(|(k, mut v)| {
            v.sort_by_key(|(h, _)| *h);
            (k, v.into_iter().map(|(_, e)| e).collect())
        })
        .collect()
}

fn check_layering(
    checker: &mut Checker,
    chains: &BTreeMap<String, Vec<&EdgeView>>,
    layering: &crate::patterns::LayeringResolved,
) {
    for (prefix, legs) in chains {
        if layering.enabled {
            let hops = legs.len() as u64 - 1;
            checker.in_range_u(
                &format!("{prefix}: layering hop count"),
                hops,
                layering.hops.0 as u64,
                layering.hops.1 as u64,
            );
        } else {
            checker.check(
                &format!("{prefix}: layering disabled means two-party topology"),
                legs.len() == 1,
                legs.len(),
                1,
            );
        }
        for pair in legs.windows(2) {
            let decay = pair[1].amount_cents as f64 / pair[0].amount_cents as f64;
            checker.ratio(
                &format!("{prefix}: per-hop decay"),
                decay,
                layering.decay.0,
                layering.decay.1,
            );
            checker.duration(
                &format!("{prefix}: inter-hop delay"),
                pair[1].timestamp - pair[0].timestamp,
                layering.hop_delay_secs.0,
                layering.hop_delay_secs.1,
            );
            checker.check(
                &format!("{prefix}: amounts strictly decreasing"),
                pair[1].amount_cents < pair[0].amount_cents,
                pair[1].amount_cents,
                format!("< {}", pair[0].amount_cents),
            );
        }
    }
}

fn common_checks(checker: &mut Checker, view: &InstanceView) {
    checker.check(
        "transactions chronologically ordered",
        view.edges
            .windows(2)
            .all(|w| w[0].timestamp <= w[1].timestamp),
        "out of order",
        "sorted by timestamp",
    );
    checker.check(
        "all transactions fraud-flagged",
        view.edges.iter().all(|e| e.is_fraud),
        "unflagged edge present",
        "is_fraud = true",
    );
    checker.check(
        "instance not empty",
        !view.edges.is_empty(),
        view.edges.len(),
        ">= 1",
    );
}

fn validate_overseas(view: &InstanceView, ctx: &ValidateContext, checker: &mut Checker) {
    let ResolvedParams::OverseasTransfers {
        transfer_count,
        transfer_amount,
        destination_count,
        timing,
        period_secs,
        period_epsilon_secs,
        burst_window_secs,
        reporting_threshold,
        layering,
    } = &view.params
    else {
        unreachable!("dispatched by typology");
    };
    let chains = chains_by_prefix(&view.edges, ".hop[");
    checker.in_range_u(
        "transfer count",
        chains.len() as u64,
        transfer_count.0 as u64,
        transfer_count.1 as u64,
    );

    let source_country = view
        .role_bindings
        .get("source")
        .and_then(|v| v.first())
        .map(|id| ctx.country(id).to_string())
        .unwrap_or_default();

    let mut destinations = BTreeSet::new();
    let mut starts: Vec<i64> = Vec::new();
    for (prefix, legs) in &chains {
        let first = legs.first().unwrap();
        let last = legs.last().unwrap();
        checker.in_range_cents(
            &format!("{prefix}: transfer amount"),
            first.amount_cents,
            transfer_amount.0,
            transfer_amount.1,
        );
        destinations.insert(last.target_id.clone());
        checker.check(
            &format!("{prefix}: destination is overseas"),
            ctx.country(&last.target_id) != source_country,
            ctx.country(&last.target_id),
            format!("!= {source_country}"),
        );
        starts.push(first.timestamp);
    }
    checker.in_range_u(
        "distinct destination count",
        destinations.len() as u64,
        destination_count.0 as u64,
        destination_count.1 as u64,
    );

    starts.sort_unstable();
    match (timing.as_str(), period_secs) {
        ("periodic", Some(p)) => {
            for w in starts.windows(2) {
                checker.duration(
                    "periodic transfer gap",
                    w[1] - w[0],
                    p - period_epsilon_secs,
                    p + period_epsilon_secs,
                );
            }
        }
        _ => {
            if starts.len() > 1 {
                checker.duration(
                    "burst transfer span",
                    starts.last().unwrap() - starts.first().unwrap(),
                    0,
                    *burst_window_secs,
                );
            }
        }
    }

    let threshold_cents = to_cents(*reporting_threshold);
    for edge in view.edges.iter().filter(|e| e.role.contains(".deposit[")) {
        checker.check(
            "funding deposit below reporting threshold",
            edge.amount_cents < threshold_cents,
            format!("{:.2}", edge.amount_cents as f64 / 100.0),
            format!("< {reporting_threshold:.2}"),
        );
        checker.check(
            "deposit category",
            edge.category == TxCategory::Deposit,
            edge.category.label(),
            "deposit",
        );
    }
    check_layering(checker, &chains, layering);
}

fn validate_rapid(view: &InstanceView, _ctx: &ValidateContext, checker: &mut Checker) {
    let ResolvedParams::RapidMovement {
        inflow_count,
        inflow_window_secs,
        outflow_delay_min_secs,
        outflow_ratio,
        max_span_secs,
        reporting_threshold,
        layering,
    } = &view.params
    else {
        unreachable!("dispatched by typology");
    };
    let inflow_edges: Vec<EdgeView> = view
        .edges
        .iter()
        .filter(|e| e.role.starts_with("inflow["))
        .cloned()
        .collect();
    let chains = chains_by_prefix(&inflow_edges, ".hop[");
    checker.in_range_u(
        "inflow count",
        chains.len() as u64,
        inflow_count.0.max(2) as u64,
        inflow_count.1 as u64,
    );

    let threshold_cents = to_cents(*reporting_threshold);
    let mut arrivals: Vec<i64> = Vec::new();
    let mut total_in = 0i64;
    for (prefix, legs) in &chains {
        for leg in legs {
            checker.check(
                &format!("{prefix}: inflow below reporting threshold"),
                leg.amount_cents < threshold_cents,
                format!("{:.2}", leg.amount_cents as f64 / 100.0),
                format!("< {reporting_threshold:.2}"),
            );
        }
        let last = legs.last().unwrap();
        arrivals.push(last.timestamp);
        total_in += last.amount_cents;
    }
    arrivals.sort_unstable();
    if arrivals.len() > 1 {
        checker.duration(
            "inflow span",
            arrivals.last().unwrap() - arrivals.first().unwrap(),
            0,
            *inflow_window_secs,
        );
    }

    let withdrawals: Vec<&EdgeView> = view
        .edges
        .iter()
        .filter(|e| e.role.starts_with("withdrawal["))
        .collect();
    checker.check(
        "has withdrawals",
        !withdrawals.is_empty(),
        withdrawals.len(),
        ">= 1",
    );
    let total_out: i64 = withdrawals.iter().map(|e| e.amount_cents).sum();
    if total_in > 0 {
        checker.ratio(
            "outflow / inflow ratio",
            total_out as f64 / total_in as f64,
            outflow_ratio.0,
            outflow_ratio.1,
        );
    }
    if let (Some(last_arrival), Some(first_out)) = (
        arrivals.last(),
        withdrawals.iter().map(|e| e.timestamp).min(),
    ) {
        checker.check(
            "dispersal delay after inflow",
            first_out - last_arrival >= *outflow_delay_min_secs,
            format!("{}s", first_out - last_arrival),
            format!(">= {outflow_delay_min_secs}s"),
        );
    }
    for w in &withdrawals {
        checker.check(
            "withdrawal category",
            w.category == TxCategory::Withdrawal,
            w.category.label(),
            "withdrawal",
        );
    }

    let t_min = view.edges.iter().map(|e| e.timestamp).min().unwrap_or(0);
    let t_max = view.edges.iter().map(|e| e.timestamp).max().unwrap_or(0);
    checker.duration("whole instance span", t_max - t_min, 0, *max_span_secs);
    check_layering(checker, &chains, layering);
}

fn validate_front(view: &InstanceView, ctx: &ValidateContext, checker: &mut Checker) {
    let ResolvedParams::FrontBusiness {
        deposit_count,
        deposit_amount,
        deposit_window_secs,
        transfer_delay_secs,
        transfer_ratio,
        destination_count,
        layering,
    } = &view.params
    else {
        unreachable!("dispatched by typology");
    };
    let deposits: BTreeMap<usize, &EdgeView> = view
        .edges
        .iter()
        .filter_map(|e| {
            e.role
                .strip_prefix("deposit[")
                .and_then(|r| r.strip_suffix(']'))
                .and_then(|i| i.parse().ok())
                .map(|i: usize| (i, e))
        })
        .collect();
    checker.in_range_u(
        "deposit count",
        deposits.len() as u64,
        deposit_count.0 as u64,
        deposit_count.1 as u64,
    );
    let mut dep_times: Vec<i64> = deposits.values().map(|e| e.timestamp).collect();
    dep_times.sort_unstable();
    if dep_times.len() > 1 {
        checker.duration(
            "deposit span",
            dep_times.last().unwrap() - dep_times.first().unwrap(),
            0,
            *deposit_window_secs,
        );
    }
    let mut total_deposits = 0i64;
    for (i, edge) in &deposits {
        checker.in_range_cents(
            &format!("deposit[{i}]: amount"),
            edge.amount_cents,
            deposit_amount.0,
            deposit_amount.1,
        );
        checker.check(
            &format!("deposit[{i}]: from the global cash node"),
            edge.source_id == "CASH",
            &edge.source_id,
            "CASH",
        );
        total_deposits += edge.amount_cents;
    }

    let chains = chains_by_prefix(&view.edges, ".hop[");
    let business_country = view
        .role_bindings
        .get("business")
        .and_then(|v| v.first())
        .map(|id| ctx.country(id).to_string())
        .unwrap_or_default();
    let mut dest_countries: Vec<String> = Vec::new();
    let mut total_transfers = 0i64;
    for (prefix, legs) in &chains {
        let first = legs.first().unwrap();
        let last = legs.last().unwrap();
        total_transfers += first.amount_cents;
        let index: Option<usize> = prefix
            .strip_prefix("transfer[")
            .and_then(|r| r.strip_suffix(']'))
            .and_then(|i| i.parse().ok());
        if let Some(i) = index {
            if let Some(dep) = deposits.get(&i) {
                checker.duration(
                    &format!("{prefix}: delay after its deposit"),
                    first.timestamp - dep.timestamp,
                    transfer_delay_secs.0,
                    transfer_delay_secs.1,
                );
                checker.ratio(
                    &format!("{prefix}: transfer / deposit ratio"),
                    first.amount_cents as f64 / dep.amount_cents as f64,
                    transfer_ratio.0,
                    transfer_ratio.1,
                );
            }
        }
        let country = ctx.country(&last.target_id).to_string();
        checker.check(
            &format!("{prefix}: destination overseas"),
            country != business_country,
            &country,
            format!("!= {business_country}"),
        );
        dest_countries.push(country);
    }
    if total_deposits > 0 {
        checker.ratio(
            "total transfers / total deposits",
            total_transfers as f64 / total_deposits as f64,
            transfer_ratio.0,
            transfer_ratio.1,
        );
    }
    let distinct: BTreeSet<&String> = dest_countries.iter().collect();
    checker.check(
        "destination countries pairwise distinct",
        distinct.len()
            == view
                .role_bindings
                .get("destination_accounts")
                .map(|v| v.len())
                .unwrap_or(distinct.len()),
        distinct.len(),
        "one country per destination account",
    );
    let distinct_accounts: BTreeSet<String> = chains
        .values()
        .map(|legs| legs.last().unwrap().target_id.clone())
        .collect();
    checker.in_range_u(
        "distinct destination count",
        distinct_accounts.len() as u64,
        destination_count.0 as u64,
        destination_count.1 as u64,
    );
    check_layering(checker, &chains, layering);
}

fn validate_synchronised(view: &InstanceView, _ctx: &ValidateContext, checker: &mut Checker) {
    let ResolvedParams::Synchronised {
        coordinator_count,
        sync_window_secs,
        transfer_delay_secs,
        transfer_ratio,
        reporting_threshold,
    } = &view.params
    else {
        unreachable!("dispatched by typology");
    };
    let threshold_cents = to_cents(*reporting_threshold);

    let mut coordinators: BTreeMap<String, (Vec<&EdgeView>, Option<&EdgeView>)> = BTreeMap::new();
    for edge in &view.edges {
        if let Some(rest) = edge.role.strip_prefix("coordinator[") {
            if let Some((index, what)) = rest.split_once(']') {
                let entry = coordinators.entry(index.to_string()).or_default();
                if what.starts_with(".deposit") {
                    entry.0.push(edge);
                } else if what == ".transfer" {
                    entry.1 = Some(edge);
                }
            }
        }
    }
    checker.in_range_u(
        "coordinator count",
        coordinators.len() as u64,
        coordinator_count.0 as u64,
        coordinator_count.1 as u64,
    );

    let mut all_deposit_times: Vec<i64> = Vec::new();
    for (index, (deposits, transfer)) in &coordinators {
        let mut total = 0i64;
        let mut last_deposit = i64::MIN;
        for d in deposits {
            checker.check(
                &format!("coordinator[{index}]: deposit below threshold"),
                d.amount_cents < threshold_cents,
                format!("{:.2}", d.amount_cents as f64 / 100.0),
                format!("< {reporting_threshold:.2}"),
            );
            total += d.amount_cents;
            last_deposit = last_deposit.max(d.timestamp);
            all_deposit_times.push(d.timestamp);
        }
        match transfer {
            Some(t) => {
                checker.ratio(
                    &format!("coordinator[{index}]: transfer / deposit ratio"),
                    t.amount_cents as f64 / total as f64,
                    transfer_ratio.0,
                    transfer_ratio.1,
                );
                checker.duration(
                    &format!("coordinator[{index}]: aggregation delay"),
                    t.timestamp - last_deposit,
                    transfer_delay_secs.0,
                    transfer_delay_secs.1,
                );
            }
            None => checker.fail(
                &format!("coordinator[{index}]: transfer present"),
                "missing",
                "one transfer per coordinator",
            ),
        }
    }
    all_deposit_times.sort_unstable();
    if all_deposit_times.len() > 1 {
        checker.duration(
            "synchronised deposit span",
            all_deposit_times.last().unwrap() - all_deposit_times.first().unwrap(),
            0,
            *sync_window_secs,
        );
    }
    // Direct deposits only: no layering hops in this typology.
    checker.check(
        "no layering hops",
        view.edges.iter().all(|e| !e.role.contains(".hop[")),
        "hop legs present",
        "direct transfers",
    );
    let recipients: BTreeSet<&String> = coordinators
        .values()
        .filter_map(|(_, t)| t.map(|e| &e.target_id))
        .collect();
    checker.check(
        "single recipient account",
        recipients.len() == 1,
        recipients.len(),
        1,
    );
}

fn validate_u_turn(view: &InstanceView, ctx: &ValidateContext, checker: &mut Checker) {
    let ResolvedParams::UTurn {
        chain_entities,
        initial_amount,
        hop_delay_secs,
        hop_fee,
        return_ratio,
    } = &view.params
    else {
        unreachable!("dispatched by typology");
    };
    let edges: Vec<&EdgeView> = view.edges.iter().collect();
    checker.in_range_u(
        "chain entity count (= edge count)",
        edges.len() as u64,
        chain_entities.0 as u64,
        chain_entities.1 as u64,
    );
    if edges.is_empty() {
        return;
    }
    checker.in_range_cents(
        "initial amount",
        edges[0].amount_cents,
        initial_amount.0,
        initial_amount.1,
    );
    for pair in edges.windows(2) {
        checker.duration(
            "per-hop delay",
            pair[1].timestamp - pair[0].timestamp,
            hop_delay_secs.0,
            hop_delay_secs.1,
        );
    }
    // Intermediate forwards shave 1-3%; the final return keeps 70-90% of
    // the remainder.
    for (i, pair) in edges.windows(2).enumerate() {
        let is_return = pair[1].role == "return";
        let ratio = pair[1].amount_cents as f64 / pair[0].amount_cents as f64;
        if is_return {
            checker.ratio(
                "return / remaining ratio",
                ratio,
                return_ratio.0,
                return_ratio.1,
            );
        } else {
            checker.ratio(
                &format!("hop[{}]: fee", i + 1),
                1.0 - ratio,
                hop_fee.0,
                hop_fee.1,
            );
        }
    }
    let returned = edges.last().unwrap().amount_cents;
    checker.ratio(
        "returned / initial ratio",
        returned as f64 / edges[0].amount_cents as f64,
        return_ratio.0,
        return_ratio.1,
    );

    // The return must credit a different account controlled by the source.
    let outbound = &edges[0].source_id;
    let return_target = &edges.last().unwrap().target_id;
    checker.check(
        "return credits a different account",
        outbound != return_target,
        return_target,
        format!("!= {outbound}"),
    );
    if let (Some(out_owner), Some(ret_owner)) = (ctx.owner(outbound), ctx.owner(return_target)) {
        let same_entity = out_owner == ret_owner;
        let via_business = ctx.business_owner.get(ret_owner).map(String::as_str) == Some(out_owner);
        checker.check(
            "return controlled by the source entity",
            same_entity || via_business,
            ret_owner,
            format!("{out_owner} (directly or via owned business)"),
        );
    }
    // At least one intermediary account sits in a high-risk jurisdiction.
    let on_path_high_risk = edges
        .iter()
        .skip(1)
        .any(|e| ctx.high_risk_countries.contains(ctx.country(&e.source_id)));
    checker.check(
        "high-risk jurisdiction on path",
        on_path_high_risk,
        "none",
        "at least one intermediary in a high-risk jurisdiction",
    );
}

/// Evaluates every constraint of the instance's typology against its own
/// resolved parameters. Pure.
pub fn validate_instance(view: &InstanceView, ctx: &ValidateContext) -> InstanceReport {
    let mut checker = Checker::new();
    common_checks(&mut checker, view);
    match view.typology {
        Typology::OverseasTransfers => validate_overseas(view, ctx, &mut checker),
        Typology::RapidMovement => validate_rapid(view, ctx, &mut checker),
        Typology::FrontBusiness => validate_front(view, ctx, &mut checker),
        Typology::Synchronised => validate_synchronised(view, ctx, &mut checker),
        Typology::UTurn => validate_u_turn(view, ctx, &mut checker),
    }
    InstanceReport {
        instance_id: view.instance_id.clone(),
        typology: view.typology.label().to_string(),
        pass: checker.violations.is_empty(),
        violations: checker.violations,
    }
}

/// Whole-dataset statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetStats {
    pub transaction_edges: u64,
    pub fraud_edges: u64,
    pub illicit_ratio: f64,
    /// (1 - ratio) / ratio, the class imbalance.
    pub imbalance: f64,
    pub type_shares: BTreeMap<String, f64>,
    pub type_medians: BTreeMap<String, f64>,
    /// Share of transaction edges with amounts in [7000, 10000).
    pub structuring_share: f64,
    /// Fraction of transaction edges whose both endpoints are
    /// fraud-labelled (proxy statistic, not a homophily index).
    pub both_endpoint_fraud_fraction: f64,
}

pub fn dataset_stats(graph: &Graph) -> DatasetStats {
    let mut fraud = 0u64;
    let mut total = 0u64;
    let mut both_fraud = 0u64;
    let mut in_band = 0u64;
    let mut amounts: BTreeMap<TxCategory, Vec<i64>> = BTreeMap::new();
    for edge in &graph.edges {
        if edge.relation != Relation::Transaction {
            continue;
        }
        total += 1;
        if edge.is_fraud {
            fraud += 1;
        }
        if graph.nodes[edge.source as usize].is_fraudulent
            && graph.nodes[edge.target as usize].is_fraudulent
        {
            both_fraud += 1;
        }
        if (700_000..1_000_000).contains(&edge.amount_cents) {
            in_band += 1;
        }
        amounts
            .entry(edge.category)
            .or_default()
            .push(edge.amount_cents);
    }
    let mut type_shares = BTreeMap::new();
    let mut type_medians = BTreeMap::new();
    for (category, mut values) in amounts {
        type_shares.insert(
            category.label().to_string(),
            values.len() as f64 / total.max(1) as f64,
        );
        let mid = values.len() / 2;
        let (_, median, _) = values.select_nth_unstable(mid);
        type_medians.insert(category.label().to_string(), *median as f64 / 100.0);
    }
    let ratio = if total == 0 {
        0.0
    } else {
        fraud as f64 / total as f64
    };
    DatasetStats {
        transaction_edges: total,
        fraud_edges: fraud,
        illicit_ratio: ratio,
        imbalance: if ratio > 0.0 {
            (1.0 - ratio) / ratio
        } else {
            f64::INFINITY
        },
        type_shares,
        type_medians,
        structuring_share: in_band as f64 / total.max(1) as f64,
        both_endpoint_fraud_fraction: both_fraud as f64 / total.max(1) as f64,
    }
}

/// Two-sample Kolmogorov-Smirnov test. Returns (D, asymptotic p-value).
pub fn ks_test(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert!(!a.is_empty() && !b.is_empty());
    let mut xs: Vec<f64> = a.to_vec();
    let mut ys: Vec<f64> = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n1, n2) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n1 && j < n2 {
        let x = xs[i];
        let y = ys[j];
        if x <= y {
            i += 1;
        }
        if y <= x {
            j += 1;
        }
        let f1 = i as f64 / n1 as f64;
        let f2 = j as f64 / n2 as f64;
        d = d.max((f1 - f2).abs());
    }
    let ne = (n1 as f64 * n2 as f64) / (n1 as f64 + n2 as f64);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, ks_probability(lambda))
}

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 l^2).
fn ks_probability(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Full report: per-instance results plus dataset statistics.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub instances: Vec<InstanceReport>,
    pub stats: DatasetStats,
}

impl ValidationReport {
    pub fn build(reports: Vec<InstanceReport>, stats: DatasetStats) -> Self {
        let pass = reports.iter().all(|r| r.pass);
        Self {
            pass,
            instances: reports,
            stats,
        }
    }

    /// Human-readable summary, one line per instance.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for r in &self.instances {
            out.push_str(&format!(
                "[{}] {}\n",
                if r.pass { "PASS" } else { "FAIL" },
                r.instance_id
            ));
            for v in &r.violations {
                out.push_str(&format!(
                    "       {}: observed {} required {}\n",
                    v.constraint, v.observed, v.required
                ));
            }
        }
        out.push_str(&format!(
            "instances: {} pass / {} total; illicit ratio {:.6}; imbalance {:.0}:1\n",
            self.instances.iter().filter(|r| r.pass).count(),
            self.instances.len(),
            self.stats.illicit_ratio,
            self.stats.imbalance,
        ));
        out
    }
}

/// Per-file content hashes of one export.
pub type FileHashes = BTreeMap<String, String>;

/// Runs generation twice from the same configs and compares the exported
/// file hashes. Returns (identical, hashes of run 1, hashes of run 2).
pub fn check_determinism(
    graph_cfg_path: &Path,
    pattern_cfg_path: &Path,
    seed_override: Option<u64>,
    threads: usize,
) -> Result<(bool, FileHashes, FileHashes), crate::pipeline::PipelineError> {
    let run = |dir: &Path| -> Result<BTreeMap<String, String>, crate::pipeline::PipelineError> {
        let options = crate::pipeline::GenerateOptions {
            graph_config: graph_cfg_path.to_path_buf(),
            pattern_config: pattern_cfg_path.to_path_buf(),
            out_dir: dir.to_path_buf(),
            seed_override,
            formats: None,
            strict: false,
            threads,
        };
        let output = crate::pipeline::generate(&options)?;
        Ok(output
            .manifest
            .files
            .iter()
            .map(|f| (f.name.clone(), f.sha256.clone()))
            .collect())
    };
    let dir1 = tempdir_in_out()?;
    let dir2 = tempdir_in_out()?;
    let h1 = run(&dir1)?;
    let h2 = run(&dir2)?;
    let _ = std::fs::remove_dir_all(&dir1);
    let _ = std::fs::remove_dir_all(&dir2);
    Ok((h1 == h2, h1, h2))
}

fn tempdir_in_out() -> Result<std::path::PathBuf, crate::pipeline::PipelineError> {
    let base = std::env::temp_dir();
    let unique = format!(
        "amlgen-det-{}-{:x}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    );
    let dir = base.join(unique);
    std::fs::create_dir_all(&dir).map_err(crate::assemble::AssembleError::Io)?;
    Ok(dir)
}

/// One instance record as serialized into patterns.json.
#[derive(Debug, Clone, Deserialize)]
pub struct PatternRecord {
    pub instance_id: String,
    pub typology: Typology,
    pub instance_index: u32,
    pub role_bindings: BTreeMap<String, Vec<String>>,
    pub edge_ids: Vec<u64>,
    pub edge_roles: Vec<String>,
    pub params: ResolvedParams,
}

#[derive(Debug, Clone)]
struct ParsedEdge {
    source_id: String,
    target_id: String,
    relation_transaction: bool,
    amount_cents: i64,
    timestamp: i64,
    category: Option<TxCategory>,
    is_fraud: bool,
}

fn parse_cents(text: &str) -> Result<i64, ValidateError> {
    let (whole, frac) = text.split_once('.').unwrap_or((text, "00"));
    let whole: i64 = whole
        .parse()
        .map_err(|_| ValidateError::Malformed(format!("bad amount `{text}`")))?;
    let frac: i64 = frac
        .parse()
        .map_err(|_| ValidateError::Malformed(format!("bad amount `{text}`")))?;
    Ok(whole * 100 + frac)
}

fn parse_category(text: &str) -> Result<Option<TxCategory>, ValidateError> {
    Ok(Some(match text {
        "" => return Ok(None),
        "payment" => TxCategory::Payment,
        "transfer" => TxCategory::Transfer,
        "deposit" => TxCategory::Deposit,
        "withdrawal" => TxCategory::Withdrawal,
        "salary" => TxCategory::Salary,
        other => {
            return Err(ValidateError::Malformed(format!(
                "unknown category `{other}`"
            )))
        }
    }))
}

/// A parsed export directory, sufficient to re-validate every instance and
/// recompute dataset statistics.
pub struct LoadedExport {
    pub manifest: crate::assemble::ExportManifest,
    pub views: Vec<InstanceView>,
    pub ctx: ValidateContext,
    pub stats: DatasetStats,
}

/// Reads manifest.json, nodes.csv, edges.csv, and patterns.json back from
/// an export directory.
pub fn load_export(dir: &Path) -> Result<LoadedExport, ValidateError> {
    let manifest: crate::assemble::ExportManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
    let records: Vec<PatternRecord> =
        serde_json::from_str(&std::fs::read_to_string(dir.join("patterns.json"))?)?;

    // nodes.csv
    let mut nodes: BTreeMap<String, NodeFacts> = BTreeMap::new();
    let mut node_fraud: BTreeMap<String, bool> = BTreeMap::new();
    let nodes_text = std::fs::read_to_string(dir.join("nodes.csv"))?;
    for (i, line) in nodes_text.lines().enumerate() {
        if i == 0 {
            if line != crate::assemble::NODES_HEADER {
                return Err(ValidateError::Malformed(
                    "unexpected nodes.csv header".into(),
                ));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(ValidateError::Malformed(format!(
                "nodes.csv row {i} has {} fields",
                fields.len()
            )));
        }
        let owner_id = if fields[5].is_empty() {
            None
        } else {
            Some(fields[5].to_string())
        };
        nodes.insert(
            fields[0].to_string(),
            NodeFacts {
                country: fields[2].to_string(),
                owner_id,
                node_type: fields[1].to_string(),
            },
        );
        node_fraud.insert(fields[0].to_string(), fields[12] == "true");
    }

    // edges.csv
    let edges_text = std::fs::read_to_string(dir.join("edges.csv"))?;
    let mut edges: Vec<ParsedEdge> = Vec::new();
    for (i, line) in edges_text.lines().enumerate() {
        if i == 0 {
            if line != crate::assemble::EDGES_HEADER {
                return Err(ValidateError::Malformed(
                    "unexpected edges.csv header".into(),
                ));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(ValidateError::Malformed(format!(
                "edges.csv row {i} has {} fields",
                fields.len()
            )));
        }
        let edge_id: usize = fields[0]
            .parse()
            .map_err(|_| ValidateError::Malformed(format!("bad edge_id `{}`", fields[0])))?;
        if edge_id != edges.len() {
            return Err(ValidateError::Malformed(
                "edges.csv ids must be dense and ordered".into(),
            ));
        }
        edges.push(ParsedEdge {
            source_id: fields[1].to_string(),
            target_id: fields[2].to_string(),
            relation_transaction: fields[3] == "transaction",
            amount_cents: parse_cents(fields[4])?,
            timestamp: fields[5]
                .parse()
                .map_err(|_| ValidateError::Malformed("bad timestamp".into()))?,
            category: parse_category(fields[7])?,
            is_fraud: fields[8] == "true",
        });
    }

    // Business ownership comes from the exported ownership edges.
    let mut business_owner = BTreeMap::new();
    for edge in edges.iter().filter(|e| !e.relation_transaction) {
        if nodes.get(&edge.target_id).map(|n| n.node_type.as_str()) == Some("business") {
            business_owner.insert(edge.target_id.clone(), edge.source_id.clone());
        }
    }

    let ctx = ValidateContext {
        nodes,
        business_owner,
        high_risk_countries: manifest.high_risk_countries.iter().cloned().collect(),
    };

    let views = records
        .into_iter()
        .map(|record| {
            let instance_edges = record
                .edge_ids
                .iter()
                .zip(record.edge_roles.iter())
                .map(|(&id, role)| {
                    let e = edges.get(id as usize).ok_or_else(|| {
                        ValidateError::Malformed(format!("pattern references missing edge {id}"))
                    })?;
                    Ok(EdgeView {
                        source_id: e.source_id.clone(),
                        target_id: e.target_id.clone(),
                        amount_cents: e.amount_cents,
                        timestamp: e.timestamp,
                        category: e.category.unwrap_or(TxCategory::Transfer),
                        is_fraud: e.is_fraud,
                        role: role.clone(),
                    })
                })
                .collect::<Result<Vec<_>, ValidateError>>()?;
            Ok(InstanceView {
                instance_id: record.instance_id,
                typology: record.typology,
                role_bindings: record.role_bindings,
                edges: instance_edges,
                params: record.params,
            })
        })
        .collect::<Result<Vec<_>, ValidateError>>()?;

    // Dataset statistics recomputed from the files themselves.
    let mut fraud = 0u64;
    let mut total = 0u64;
    let mut both_fraud = 0u64;
    let mut in_band = 0u64;
    let mut amounts: BTreeMap<TxCategory, Vec<i64>> = BTreeMap::new();
    for edge in edges.iter().filter(|e| e.relation_transaction) {
        total += 1;
        if edge.is_fraud {
            fraud += 1;
        }
        if node_fraud.get(&edge.source_id).copied().unwrap_or(false)
            && node_fraud.get(&edge.target_id).copied().unwrap_or(false)
        {
            both_fraud += 1;
        }
        if (700_000..1_000_000).contains(&edge.amount_cents) {
            in_band += 1;
        }
        if let Some(cat) = edge.category {
            amounts.entry(cat).or_default().push(edge.amount_cents);
        }
    }
    let mut type_shares = BTreeMap::new();
    let mut type_medians = BTreeMap::new();
    for (category, mut values) in amounts {
        type_shares.insert(
            category.label().to_string(),
            values.len() as f64 / total.max(1) as f64,
        );
        let mid = values.len() / 2;
        let (_, median, _) = values.select_nth_unstable(mid);
        type_medians.insert(category.label().to_string(), *median as f64 / 100.0);
    }
    let ratio = if total == 0 {
        0.0
    } else {
        fraud as f64 / total as f64
    };
    let stats = DatasetStats {
        transaction_edges: total,
        fraud_edges: fraud,
        illicit_ratio: ratio,
        imbalance: if ratio > 0.0 {
            (1.0 - ratio) / ratio
        } else {
            f64::INFINITY
        },
        type_shares,
        type_medians,
        structuring_share: in_band as f64 / total.max(1) as f64,
        both_endpoint_fraud_fraction: both_fraud as f64 / total.max(1) as f64,
    };

    Ok(LoadedExport {
        manifest,
        views,
        ctx,
        stats,
    })
}

/// Validates every instance recorded in an export directory.
pub fn validate_export(dir: &Path) -> Result<ValidationReport, ValidateError> {
    let loaded = load_export(dir)?;
    let reports = loaded
        .views
        .iter()
        .map(|view| validate_instance(view, &loaded.ctx))
        .collect();
    Ok(ValidationReport::build(reports, loaded.stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_graph_config, parse_pattern_config};
    use crate::patterns::inject_all;
    use crate::population::generate_population;
    use crate::rng::SeedTree;

    fn generated(
        seed: u64,
        counts: [u32; 5],
    ) -> (crate::config::GraphConfig, Graph, Vec<PatternInstance>) {
        let gcfg = parse_graph_config(
            &format!(
                "master_seed: {seed}\nindividual_count: 400\nbusiness_ratio: 0.2\nsimulation_start: 2025-01-01\nsimulation_end: 2026-01-01\n"
            ),
            "test",
        )
        .unwrap();
        let mut pcfg = parse_pattern_config("", "test").unwrap();
        pcfg.overseas_transfers.instance_count = counts[0];
        pcfg.rapid_movement.instance_count = counts[1];
        pcfg.front_business.instance_count = counts[2];
        pcfg.synchronised.instance_count = counts[3];
        pcfg.u_turn.instance_count = counts[4];
        let seeds = SeedTree::new(gcfg.master_seed);
        let mut graph =
            generate_population(&gcfg, &gcfg.risk_weights, &mut seeds.stream("population"))
                .unwrap();
        let (instances, warnings) = inject_all(&mut graph, &pcfg, &gcfg, &seeds).unwrap();
        assert!(warnings.is_empty(), "{warnings:?}");
        (gcfg, graph, instances)
    }

    #[test]
    fn every_generated_instance_validates() {
        // Generation must satisfy validation: the module's central property.
        let (gcfg, graph, instances) = generated(31, [3, 3, 3, 3, 3]);
        let ctx = ValidateContext::from_graph(&graph, &gcfg);
        for instance in &instances {
            let view = instance_view(instance, &graph);
            let report = validate_instance(&view, &ctx);
            assert!(
                report.pass,
                "{} failed: {:#?}",
                report.instance_id, report.violations
            );
        }
    }

    #[test]
    fn constructed_violation_fails_named_constraint() {
        let (gcfg, graph, instances) = generated(32, [0, 0, 0, 0, 1]);
        let ctx = ValidateContext::from_graph(&graph, &gcfg);
        let mut view = instance_view(&instances[0], &graph);
        // Force a 10% fee on the second hop.
        let base = view.edges[0].amount_cents;
        view.edges[1].amount_cents = (base as f64 * 0.90).round() as i64;
        let report = validate_instance(&view, &ctx);
        assert!(!report.pass);
        assert!(
            report
                .violations
                .iter()
                .any(|v| v.constraint.contains("fee")),
            "expected a fee violation, got {:#?}",
            report.violations
        );
    }

    #[test]
    fn rapid_span_violation_detected() {
        let (gcfg, graph, instances) = generated(33, [0, 2, 0, 0, 0]);
        let ctx = ValidateContext::from_graph(&graph, &gcfg);
        let mut view = instance_view(&instances[0], &graph);
        // Push the last withdrawal out to 200 hours after the start.
        let start = view.edges[0].timestamp;
        let last = view.edges.len() - 1;
        view.edges[last].timestamp = start + 200 * 3600;
        let report = validate_instance(&view, &ctx);
        assert!(!report.pass);
        assert!(report
            .violations
            .iter()
            .any(|v| v.constraint.contains("whole instance span")));
    }

    #[test]
    fn stats_on_fraud_free_graph() {
        let (_, graph, _) = generated(34, [0, 0, 0, 0, 0]);
        let stats = dataset_stats(&graph);
        assert_eq!(stats.fraud_edges, 0);
        assert_eq!(stats.illicit_ratio, 0.0);
    }

    #[test]
    fn imbalance_algebra() {
        let ratio: f64 = 0.001;
        let imbalance = (1.0 - ratio) / ratio;
        assert!((imbalance - 999.0).abs() < 1e-9);
    }

    #[test]
    fn ks_test_same_distribution_accepts() {
        let mut rng = SeedTree::new(5).stream("ks");
        use rand::Rng;
        let a: Vec<f64> = (0..5_000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..5_000).map(|_| rng.random::<f64>()).collect();
        let (_, p) = ks_test(&a, &b);
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn ks_test_shifted_distribution_rejects() {
        let mut rng = SeedTree::new(6).stream("ks2");
        use rand::Rng;
        let a: Vec<f64> = (0..5_000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..5_000).map(|_| rng.random::<f64>() + 0.2).collect();
        let (d, p) = ks_test(&a, &b);
        assert!(d > 0.1);
        assert!(p < 0.001, "p = {p}");
    }
}
