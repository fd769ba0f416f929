//! The five laundering typology injectors. Each resolves its structural
//! component (role-matching entities from the cluster index) and temporal
//! component (timed, amount-constrained transaction sequences), budgeting
//! timestamps so every edge lands inside the simulation window.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::{
    apply_layering, cluster_union, interior_ratio, overseas_pools, pick_account, pick_k, pick_one,
    schedule_burst, schedule_periodic, shuffled, sub_threshold_cents, ChainAnchor, DraftInstance,
    InjectCtx, LayeringParams, LayeringResolved, PatternError, ResolvedParams, Typology,
};
use crate::config::{
    to_cents, FrontBusinessConfig, OverseasTiming, OverseasTransfersConfig, RapidMovementConfig,
    SynchronisedConfig, UTurnConfig,
};
use crate::model::{ClusterId, Graph, NodeIdx, NodeKind, PendingEdge, TxCategory};
use crate::rng::RngStream;

/// Safety margin kept between a pattern's envelope and the window edge.
const MARGIN_SECS: i64 = 600;

fn sample_start(
    window: (i64, i64),
    lead_before: i64,
    span_after: i64,
    rng: &mut RngStream,
) -> Option<i64> {
    let lo = window.0 + lead_before;
    let hi = window.1 - 1 - span_after;
    if lo > hi {
        None
    } else {
        Some(rng.random_range(lo..=hi))
    }
}

fn is_individual(graph: &Graph, idx: NodeIdx) -> bool {
    matches!(graph.nodes[idx as usize].kind, NodeKind::Individual { .. })
}

fn is_business(graph: &Graph, idx: NodeIdx) -> bool {
    matches!(graph.nodes[idx as usize].kind, NodeKind::Business { .. })
}

fn node_id(graph: &Graph, idx: NodeIdx) -> String {
    graph.nodes[idx as usize].node_id.clone()
}

fn ids(graph: &Graph, idxs: &[NodeIdx]) -> Vec<String> {
    idxs.iter().map(|&i| node_id(graph, i)).collect()
}

/// Collects the intermediary accounts of a chain (every hop endpoint that is
/// neither the chain source nor its final destination).
fn chain_intermediaries(legs: &[super::ChainLeg]) -> Vec<NodeIdx> {
    legs.iter().skip(1).map(|l| l.from).collect()
}

/// Repeated overseas transfers: a high-risk individual funds sub-threshold
/// cash deposits, then sends 4-12 large transfers to 2-5 distinct overseas
/// destination accounts on a burst or periodic (7/14/30-day) schedule.
pub(crate) fn inject_overseas_transfers(
    ctx: &InjectCtx,
    cfg: &OverseasTransfersConfig,
    used: &BTreeSet<NodeIdx>,
    rng: &mut RngStream,
) -> Result<DraftInstance, PatternError> {
    let graph = ctx.graph;
    let mut src_pool = cluster_union(
        graph,
        &[
            ClusterId::HighRiskAge,
            ClusterId::HighRiskOccupation,
            ClusterId::HighRiskJurisdiction,
        ],
    );
    src_pool.retain(|&e| {
        is_individual(graph, e) && !used.contains(&e) && !graph.owner_accounts(e).is_empty()
    });
    let src = pick_one(&mut src_pool, rng)
        .ok_or(PatternError::NoEligibleSource(Typology::OverseasTransfers))?;
    let src_account = pick_account(graph, src, rng);
    let home = graph.nodes[src as usize].country_code.clone();

    let mut exclude = used.clone();
    exclude.insert(src);
    let (mut priority, mut fallback) = overseas_pools(graph, &home, false, &exclude);
    let k_sampled =
        rng.random_range(cfg.destination_count.lo()..=cfg.destination_count.hi()) as usize;
    let mut destinations = pick_k(&mut priority, k_sampled, rng);
    if destinations.len() < k_sampled {
        fallback.retain(|e| !destinations.contains(e));
        let extra = pick_k(&mut fallback, k_sampled - destinations.len(), rng);
        destinations.extend(extra);
    }
    if (destinations.len() as u32) < cfg.destination_count.lo() {
        return Err(PatternError::NoOverseasDestinations);
    }

    let layering = LayeringParams::from_config(&cfg.layering);
    let chain_span = if layering.enabled {
        layering.max_chain_span()
    } else {
        0
    };
    let amount_lo = to_cents(cfg.transfer_amount.lo());
    let amount_hi = to_cents(cfg.transfer_amount.hi());
    let deposit_floor = super::ceil_div(ctx.threshold_cents * 70, 100);
    let max_deposits = super::ceil_div(amount_hi, deposit_floor).max(1);
    let lead = max_deposits * cfg.deposit_lead.hi().get();
    let window_len = ctx.window.1 - ctx.window.0;

    let (times, timing_label, period) = match cfg.timing {
        OverseasTiming::Periodic => {
            let slack = lead + chain_span + MARGIN_SECS;
            let min_n = cfg.transfer_count.lo() as i64;
            let feasible: Vec<i64> = cfg
                .periods
                .iter()
                .map(|p| p.get())
                .filter(|&p| (min_n - 1) * (p + cfg.period_epsilon.get()) + slack <= window_len)
                .collect();
            if feasible.is_empty() {
                return Err(PatternError::WindowTooShort(Typology::OverseasTransfers));
            }
            let p = feasible[rng.random_range(0..feasible.len())];
            let fit = 1 + (window_len - slack) / (p + cfg.period_epsilon.get());
            let n_hi = (cfg.transfer_count.hi() as i64).min(fit).max(min_n);
            let n = rng.random_range(min_n..=n_hi) as usize;
            let span = (n as i64 - 1) * (p + cfg.period_epsilon.get());
            let t0 = sample_start(ctx.window, lead, span + chain_span, rng)
                .ok_or(PatternError::WindowTooShort(Typology::OverseasTransfers))?;
            (
                schedule_periodic(n, p, cfg.period_epsilon.get(), t0, rng)?,
                "periodic",
                Some(p),
            )
        }
        OverseasTiming::Burst => {
            let n = rng.random_range(cfg.transfer_count.lo()..=cfg.transfer_count.hi()) as usize;
            let t0 = sample_start(ctx.window, lead, cfg.burst_window.get() + chain_span, rng)
                .ok_or(PatternError::WindowTooShort(Typology::OverseasTransfers))?;
            (
                schedule_burst(n, cfg.burst_window.get(), t0, rng)?,
                "burst",
                None,
            )
        }
    };

    if destinations.len() > times.len() {
        destinations.truncate(times.len().max(cfg.destination_count.lo() as usize));
    }
    let dest_accounts: Vec<NodeIdx> = destinations
        .iter()
        .map(|&d| pick_account(graph, d, rng))
        .collect();

    let pool = ctx.layering_pool(&layering);
    let mut tagged = Vec::new();
    let mut intermediaries = BTreeSet::new();
    for (k, &t) in times.iter().enumerate() {
        let amount = rng.random_range(amount_lo..=amount_hi);

        // Funding deposits, walked backwards from the transfer time.
        let mut deposits = Vec::new();
        let mut total = 0i64;
        while total < amount {
            let d = sub_threshold_cents(ctx.threshold_cents, rng);
            total += d;
            deposits.push(d);
        }
        let mut offset = 0i64;
        let mut deposit_times = Vec::with_capacity(deposits.len());
        for _ in 0..deposits.len() {
            offset += rng.random_range(cfg.deposit_lead.lo().get()..=cfg.deposit_lead.hi().get());
            deposit_times.push(t - offset);
        }
        deposit_times.reverse();
        for (j, (&d, &dt)) in deposits.iter().zip(deposit_times.iter()).enumerate() {
            tagged.push((
                PendingEdge::transaction(
                    graph.cash_node,
                    src_account,
                    d,
                    dt,
                    TxCategory::Deposit,
                    true,
                ),
                format!("transfer[{k}].deposit[{j}]"),
            ));
        }

        let dst = dest_accounts[k % dest_accounts.len()];
        let legs = apply_layering(
            graph,
            src_account,
            dst,
            amount,
            t,
            ChainAnchor::Start,
            &layering,
            pool,
            rng,
        )?;
        intermediaries.extend(chain_intermediaries(&legs));
        for (j, leg) in legs.iter().enumerate() {
            tagged.push((
                PendingEdge::transaction(
                    leg.from,
                    leg.to,
                    leg.amount_cents,
                    leg.timestamp,
                    TxCategory::Transfer,
                    true,
                ),
                format!("transfer[{k}].hop[{j}]"),
            ));
        }
    }

    let mut role_bindings = BTreeMap::new();
    role_bindings.insert("source".into(), vec![node_id(graph, src)]);
    role_bindings.insert("source_account".into(), vec![node_id(graph, src_account)]);
    role_bindings.insert("destinations".into(), ids(graph, &destinations));
    role_bindings.insert("destination_accounts".into(), ids(graph, &dest_accounts));
    role_bindings.insert(
        "layering_intermediaries".into(),
        ids(graph, &intermediaries.iter().copied().collect::<Vec<_>>()),
    );

    let mut bound_entities = vec![src];
    bound_entities.extend(destinations.iter().copied());

    Ok(DraftInstance {
        role_bindings,
        tagged_edges: tagged,
        bound_entities,
        params: ResolvedParams::OverseasTransfers {
            transfer_count: (cfg.transfer_count.lo(), cfg.transfer_count.hi()),
            transfer_amount: (cfg.transfer_amount.lo(), cfg.transfer_amount.hi()),
            destination_count: (cfg.destination_count.lo(), cfg.destination_count.hi()),
            timing: timing_label.to_string(),
            period_secs: period,
            period_epsilon_secs: cfg.period_epsilon.get(),
            burst_window_secs: cfg.burst_window.get(),
            reporting_threshold: ctx.threshold_cents as f64 / 100.0,
            layering: LayeringResolved::from_params(&layering),
        },
    })
}

/// Rapid fund movement: sub-threshold wire transfers fan into a high-risk
/// individual's accounts inside a bounded window, then 85-95% of the inflow
/// leaves as cash withdrawals, the whole instance within the max span.
pub(crate) fn inject_rapid_movement(
    ctx: &InjectCtx,
    cfg: &RapidMovementConfig,
    used: &BTreeSet<NodeIdx>,
    rng: &mut RngStream,
) -> Result<DraftInstance, PatternError> {
    let graph = ctx.graph;
    let mut bene_pool = cluster_union(
        graph,
        &[
            ClusterId::HighRiskAge,
            ClusterId::HighRiskOccupation,
            ClusterId::HighRiskJurisdiction,
        ],
    );
    bene_pool.retain(|&e| {
        is_individual(graph, e) && !used.contains(&e) && graph.owner_accounts(e).len() >= 2
    });
    let beneficiary = pick_one(&mut bene_pool, rng).ok_or(PatternError::NoEligibleBeneficiary)?;
    let home = graph.nodes[beneficiary as usize].country_code.clone();

    let mut exclude = used.clone();
    exclude.insert(beneficiary);
    let (mut priority, mut fallback) = overseas_pools(graph, &home, false, &exclude);
    let n_sampled = rng.random_range(cfg.inflow_count.lo()..=cfg.inflow_count.hi()) as usize;
    let mut sources = pick_k(&mut priority, n_sampled, rng);
    if sources.len() < n_sampled {
        fallback.retain(|e| !sources.contains(e));
        let extra = pick_k(&mut fallback, n_sampled - sources.len(), rng);
        sources.extend(extra);
    }
    if (sources.len() as u32) < cfg.inflow_count.lo().max(2) {
        return Err(PatternError::NoEligibleBeneficiary);
    }
    let n = sources.len();

    // Time budget inside the max span: inflow window, dispersal delay,
    // withdrawal spread, and (when layering) lead room for inbound chains.
    let span_cap = cfg.max_span.get();
    let inflow_window = cfg.inflow_window.get();
    let layering = LayeringParams::from_config(&cfg.layering);
    let lead_needed = if layering.enabled {
        layering.hops_max as i64 * layering.delay_min_secs + 3_600
    } else {
        0
    };
    let delay_cap = (span_cap - inflow_window - lead_needed - 2 * 3_600 - MARGIN_SECS)
        .min(24 * 3_600)
        .max(cfg.outflow_delay_min.get());
    let delay = rng.random_range(cfg.outflow_delay_min.get()..=delay_cap);
    let wspan_cap = (span_cap - inflow_window - delay - lead_needed - MARGIN_SECS).max(3_600);
    let wspan = rng.random_range(3_600..=wspan_cap);
    let lead_budget = (span_cap - inflow_window - delay - wspan - MARGIN_SECS).max(0);
    let layering = layering.clamp_delays(lead_budget);

    let t0 = sample_start(ctx.window, lead_budget, inflow_window + delay + wspan, rng)
        .ok_or(PatternError::WindowTooShort(Typology::RapidMovement))?;
    let arrivals = schedule_burst(n, inflow_window, t0, rng)?;

    let accounts = graph.owner_accounts(beneficiary);
    let pool = ctx.layering_pool(&layering);
    let mut tagged = Vec::new();
    let mut intermediaries = BTreeSet::new();
    let mut total_in = 0i64;
    let mut receiving: Vec<NodeIdx> = Vec::new();
    for (k, (&source, &arrival)) in sources.iter().zip(arrivals.iter()).enumerate() {
        let amount = sub_threshold_cents(ctx.threshold_cents, rng);
        let from = pick_account(graph, source, rng);
        let to = accounts[k % accounts.len()];
        if !receiving.contains(&to) {
            receiving.push(to);
        }
        let legs = apply_layering(
            graph,
            from,
            to,
            amount,
            arrival,
            ChainAnchor::Arrival,
            &layering,
            pool,
            rng,
        )?;
        // The inflow the beneficiary sees is the post-decay arrival amount.
        total_in += legs.last().unwrap().amount_cents;
        intermediaries.extend(chain_intermediaries(&legs));
        for (j, leg) in legs.iter().enumerate() {
            tagged.push((
                PendingEdge::transaction(
                    leg.from,
                    leg.to,
                    leg.amount_cents,
                    leg.timestamp,
                    TxCategory::Transfer,
                    true,
                ),
                format!("inflow[{k}].hop[{j}]"),
            ));
        }
    }

    let ratio = interior_ratio(cfg.outflow_ratio.lo(), cfg.outflow_ratio.hi(), rng);
    let total_out = (total_in as f64 * ratio).round() as i64;
    let m = rng.random_range(cfg.withdrawal_count.lo()..=cfg.withdrawal_count.hi()) as usize;
    let weights: Vec<i64> = (0..m).map(|_| rng.random_range(50..=150)).collect();
    let weight_sum: i64 = weights.iter().sum();
    let mut out_amounts = Vec::with_capacity(m);
    let mut assigned = 0i64;
    for (i, w) in weights.iter().enumerate() {
        let a = if i + 1 == m {
            total_out - assigned
        } else {
            total_out * w / weight_sum
        };
        assigned += a;
        out_amounts.push(a);
    }
    let out_start = *arrivals.last().unwrap() + delay;
    let out_times = schedule_burst(m, wspan, out_start, rng)?;
    let cash_account = graph.cash_account_by_owner[&beneficiary];
    for (i, (&a, &t)) in out_amounts.iter().zip(out_times.iter()).enumerate() {
        let from = receiving[i % receiving.len()];
        tagged.push((
            PendingEdge::transaction(from, cash_account, a, t, TxCategory::Withdrawal, true),
            format!("withdrawal[{i}]"),
        ));
    }

    let mut role_bindings = BTreeMap::new();
    role_bindings.insert("beneficiary".into(), vec![node_id(graph, beneficiary)]);
    role_bindings.insert("beneficiary_accounts".into(), ids(graph, &receiving));
    role_bindings.insert("cash_account".into(), vec![node_id(graph, cash_account)]);
    role_bindings.insert("sources".into(), ids(graph, &sources));
    role_bindings.insert(
        "layering_intermediaries".into(),
        ids(graph, &intermediaries.iter().copied().collect::<Vec<_>>()),
    );

    let mut bound_entities = vec![beneficiary];
    bound_entities.extend(sources.iter().copied());

    Ok(DraftInstance {
        role_bindings,
        tagged_edges: tagged,
        bound_entities,
        params: ResolvedParams::RapidMovement {
            inflow_count: (cfg.inflow_count.lo(), cfg.inflow_count.hi()),
            inflow_window_secs: inflow_window,
            outflow_delay_min_secs: cfg.outflow_delay_min.get(),
            outflow_ratio: (cfg.outflow_ratio.lo(), cfg.outflow_ratio.hi()),
            max_span_secs: span_cap,
            reporting_threshold: ctx.threshold_cents as f64 / 100.0,
            layering: LayeringResolved::from_params(&layering),
        },
    })
}

/// Front business: a high-risk business deposits large cash amounts across
/// its accounts in a short window; each deposit is followed 0.5-6h later by
/// an overseas transfer of 80-100% of it, destinations in distinct countries.
pub(crate) fn inject_front_business(
    ctx: &InjectCtx,
    cfg: &FrontBusinessConfig,
    used: &BTreeSet<NodeIdx>,
    rng: &mut RngStream,
) -> Result<DraftInstance, PatternError> {
    let graph = ctx.graph;
    let mut biz_pool = cluster_union(
        graph,
        &[
            ClusterId::CashIntensiveBusiness,
            ClusterId::VerySmallCompany,
            ClusterId::HighRiskJurisdiction,
        ],
    );
    biz_pool.retain(|&e| {
        if !is_business(graph, e) || used.contains(&e) {
            return false;
        }
        let accounts = graph.owner_accounts(e);
        if accounts.len() < 2 {
            return false;
        }
        let mut institutions = BTreeSet::new();
        for &a in accounts {
            if let NodeKind::Account { institution, .. } = graph.nodes[a as usize].kind {
                institutions.insert(institution);
            }
        }
        institutions.len() >= 2
    });
    let business = pick_one(&mut biz_pool, rng).ok_or(PatternError::NoEligibleBusiness)?;
    let home = graph.nodes[business as usize].country_code.clone();

    // Overseas destination businesses, each in a distinct country.
    let mut exclude = used.clone();
    exclude.insert(business);
    let (priority, fallback) = overseas_pools(graph, &home, true, &exclude);
    let k_sampled =
        rng.random_range(cfg.destination_count.lo()..=cfg.destination_count.hi()) as usize;
    let shuffled_priority = shuffled(priority, rng);
    let shuffled_fallback = shuffled(fallback, rng);
    let mut destinations = Vec::new();
    let mut countries = BTreeSet::new();
    for cand in shuffled_priority.into_iter().chain(shuffled_fallback) {
        if destinations.len() == k_sampled {
            break;
        }
        if countries.insert(graph.nodes[cand as usize].country_code.clone()) {
            destinations.push(cand);
        }
    }
    if (destinations.len() as u32) < cfg.destination_count.lo() {
        return Err(PatternError::InsufficientOverseasBusinesses);
    }
    let dest_accounts: Vec<NodeIdx> = destinations
        .iter()
        .map(|&d| pick_account(graph, d, rng))
        .collect();

    let layering = LayeringParams::from_config(&cfg.layering);
    let chain_span = if layering.enabled {
        layering.max_chain_span()
    } else {
        0
    };
    let span_after =
        cfg.deposit_window.get() + cfg.transfer_delay.hi().get() + chain_span + MARGIN_SECS;
    let t0 = sample_start(ctx.window, 0, span_after, rng)
        .ok_or(PatternError::WindowTooShort(Typology::FrontBusiness))?;

    let n = rng.random_range(cfg.deposit_count.lo()..=cfg.deposit_count.hi()) as usize;
    let deposit_times = schedule_burst(n, cfg.deposit_window.get(), t0, rng)?;
    let accounts = graph.owner_accounts(business);
    let amount_lo = to_cents(cfg.deposit_amount.lo());
    let amount_hi = to_cents(cfg.deposit_amount.hi());

    let pool = ctx.layering_pool(&layering);
    let mut tagged = Vec::new();
    let mut intermediaries = BTreeSet::new();
    for (k, &t) in deposit_times.iter().enumerate() {
        let deposit = rng.random_range(amount_lo..=amount_hi);
        let into = accounts[k % accounts.len()];
        tagged.push((
            PendingEdge::transaction(graph.cash_node, into, deposit, t, TxCategory::Deposit, true),
            format!("deposit[{k}]"),
        ));

        let delay = rng.random_range(cfg.transfer_delay.lo().get()..=cfg.transfer_delay.hi().get());
        let ratio = interior_ratio(cfg.transfer_ratio.lo(), cfg.transfer_ratio.hi(), rng);
        let amount = (deposit as f64 * ratio).round() as i64;
        let dst = dest_accounts[k % dest_accounts.len()];
        let legs = apply_layering(
            graph,
            into,
            dst,
            amount,
            t + delay,
            ChainAnchor::Start,
            &layering,
            pool,
            rng,
        )?;
        intermediaries.extend(chain_intermediaries(&legs));
        for (j, leg) in legs.iter().enumerate() {
            tagged.push((
                PendingEdge::transaction(
                    leg.from,
                    leg.to,
                    leg.amount_cents,
                    leg.timestamp,
                    TxCategory::Transfer,
                    true,
                ),
                format!("transfer[{k}].hop[{j}]"),
            ));
        }
    }

    let mut role_bindings = BTreeMap::new();
    role_bindings.insert("business".into(), vec![node_id(graph, business)]);
    role_bindings.insert("business_accounts".into(), ids(graph, accounts));
    role_bindings.insert("destinations".into(), ids(graph, &destinations));
    role_bindings.insert("destination_accounts".into(), ids(graph, &dest_accounts));
    role_bindings.insert(
        "layering_intermediaries".into(),
        ids(graph, &intermediaries.iter().copied().collect::<Vec<_>>()),
    );

    let mut bound_entities = vec![business];
    bound_entities.extend(destinations.iter().copied());

    Ok(DraftInstance {
        role_bindings,
        tagged_edges: tagged,
        bound_entities,
        params: ResolvedParams::FrontBusiness {
            deposit_count: (cfg.deposit_count.lo(), cfg.deposit_count.hi()),
            deposit_amount: (cfg.deposit_amount.lo(), cfg.deposit_amount.hi()),
            deposit_window_secs: cfg.deposit_window.get(),
            transfer_delay_secs: (cfg.transfer_delay.lo().get(), cfg.transfer_delay.hi().get()),
            transfer_ratio: (cfg.transfer_ratio.lo(), cfg.transfer_ratio.hi()),
            destination_count: (cfg.destination_count.lo(), cfg.destination_count.hi()),
            layering: LayeringResolved::from_params(&layering),
        },
    })
}

/// Synchronised transactions: attribute-diverse coordinators receive
/// structured cash deposits inside a tight window, then each forwards
/// 85-95% of its deposits to a common recipient. No layering.
pub(crate) fn inject_synchronised(
    ctx: &InjectCtx,
    cfg: &SynchronisedConfig,
    used: &BTreeSet<NodeIdx>,
    rng: &mut RngStream,
) -> Result<DraftInstance, PatternError> {
    let graph = ctx.graph;
    let target = rng.random_range(cfg.coordinator_count.lo()..=cfg.coordinator_count.hi()) as usize;

    let pool: Vec<NodeIdx> = graph
        .nodes
        .iter()
        .filter(|n| {
            matches!(n.kind, NodeKind::Individual { .. })
                && !used.contains(&n.idx)
                && !graph.owner_accounts(n.idx).is_empty()
        })
        .map(|n| n.idx)
        .collect();
    let candidates = shuffled(pool, rng);

    // Coordinators must appear unrelated: no two share all three of
    // (age group, occupation, country).
    let attrs = |idx: NodeIdx| -> (u8, u16, &str) {
        match &graph.nodes[idx as usize].kind {
            NodeKind::Individual {
                age_group,
                occupation,
                ..
            } => (
                *age_group as u8,
                *occupation,
                graph.nodes[idx as usize].country_code.as_str(),
            ),
            _ => unreachable!(),
        }
    };
    let mut coordinators: Vec<NodeIdx> = Vec::new();
    for cand in candidates {
        if coordinators.len() == target {
            break;
        }
        let ca = attrs(cand);
        if coordinators.iter().all(|&c| attrs(c) != ca) {
            coordinators.push(cand);
        }
    }
    if (coordinators.len() as u32) < cfg.coordinator_count.lo() {
        return Err(PatternError::InsufficientCoordinators);
    }

    // Recipient, high-risk-jurisdiction cluster preferred.
    let coordinator_set: BTreeSet<NodeIdx> = coordinators.iter().copied().collect();
    let mut recipient_pool: Vec<NodeIdx> = graph.clusters[&ClusterId::HighRiskJurisdiction]
        .iter()
        .copied()
        .filter(|e| {
            !used.contains(e)
                && !coordinator_set.contains(e)
                && !graph.owner_accounts(*e).is_empty()
        })
        .collect();
    let recipient = match pick_one(&mut recipient_pool, rng) {
        Some(r) => r,
        None => {
            let mut any: Vec<NodeIdx> = graph
                .nodes
                .iter()
                .filter(|n| {
                    n.is_entity()
                        && !used.contains(&n.idx)
                        && !coordinator_set.contains(&n.idx)
                        && !graph.owner_accounts(n.idx).is_empty()
                })
                .map(|n| n.idx)
                .collect();
            pick_one(&mut any, rng).ok_or(PatternError::InsufficientCoordinators)?
        }
    };
    let recipient_account = pick_account(graph, recipient, rng);

    let span_after = cfg.sync_window.get() + cfg.transfer_delay.hi().get() + MARGIN_SECS;
    let t0 = sample_start(ctx.window, 0, span_after, rng)
        .ok_or(PatternError::WindowTooShort(Typology::Synchronised))?;

    let mut tagged = Vec::new();
    let mut coordinator_accounts = Vec::with_capacity(coordinators.len());
    for (c, &coord) in coordinators.iter().enumerate() {
        let account = pick_account(graph, coord, rng);
        coordinator_accounts.push(account);
        let ndep =
            rng.random_range(cfg.deposits_per_coordinator.lo()..=cfg.deposits_per_coordinator.hi());
        let mut total = 0i64;
        let mut last_deposit = t0;
        for d in 0..ndep {
            let amount = sub_threshold_cents(ctx.threshold_cents, rng);
            let at = t0 + rng.random_range(0..=cfg.sync_window.get());
            last_deposit = last_deposit.max(at);
            total += amount;
            tagged.push((
                PendingEdge::transaction(
                    graph.cash_node,
                    account,
                    amount,
                    at,
                    TxCategory::Deposit,
                    true,
                ),
                format!("coordinator[{c}].deposit[{d}]"),
            ));
        }
        let ratio = interior_ratio(cfg.transfer_ratio.lo(), cfg.transfer_ratio.hi(), rng);
        let amount = (total as f64 * ratio).round() as i64;
        let at = last_deposit
            + rng.random_range(cfg.transfer_delay.lo().get()..=cfg.transfer_delay.hi().get());
        tagged.push((
            PendingEdge::transaction(
                account,
                recipient_account,
                amount,
                at,
                TxCategory::Transfer,
                true,
            ),
            format!("coordinator[{c}].transfer"),
        ));
    }

    let mut role_bindings = BTreeMap::new();
    role_bindings.insert("coordinators".into(), ids(graph, &coordinators));
    role_bindings.insert(
        "coordinator_accounts".into(),
        ids(graph, &coordinator_accounts),
    );
    role_bindings.insert("recipient".into(), vec![node_id(graph, recipient)]);
    role_bindings.insert(
        "recipient_account".into(),
        vec![node_id(graph, recipient_account)],
    );

    let mut bound_entities = coordinators.clone();
    bound_entities.push(recipient);

    Ok(DraftInstance {
        role_bindings,
        tagged_edges: tagged,
        bound_entities,
        params: ResolvedParams::Synchronised {
            coordinator_count: (cfg.coordinator_count.lo(), cfg.coordinator_count.hi()),
            sync_window_secs: cfg.sync_window.get(),
            transfer_delay_secs: (cfg.transfer_delay.lo().get(), cfg.transfer_delay.hi().get()),
            transfer_ratio: (cfg.transfer_ratio.lo(), cfg.transfer_ratio.hi()),
            reporting_threshold: ctx.threshold_cents as f64 / 100.0,
        },
    })
}

/// U-turn: funds leave a high-risk source through a chain of mule
/// intermediaries (at least one in a high-risk jurisdiction), shrinking
/// 1-3% per hop, and 70-90% of the remainder returns to a different
/// account of the same source entity.
pub(crate) fn inject_u_turn(
    ctx: &InjectCtx,
    cfg: &UTurnConfig,
    used: &BTreeSet<NodeIdx>,
    rng: &mut RngStream,
) -> Result<DraftInstance, PatternError> {
    let graph = ctx.graph;
    let mut src_pool = cluster_union(
        graph,
        &[
            ClusterId::HighRiskAge,
            ClusterId::HighRiskOccupation,
            ClusterId::HighRiskJurisdiction,
            ClusterId::CashIntensiveBusiness,
            ClusterId::VerySmallCompany,
        ],
    );
    src_pool.retain(|&e| {
        if used.contains(&e) {
            return false;
        }
        let own = graph.owner_accounts(e).len();
        if own >= 2 {
            return true;
        }
        // An individual with one account can still close the loop through a
        // business it owns.
        own >= 1
            && graph
                .businesses_by_owner
                .get(&e)
                .is_some_and(|bs| bs.iter().any(|b| !graph.owner_accounts(*b).is_empty()))
    });
    let source =
        pick_one(&mut src_pool, rng).ok_or(PatternError::NoEligibleSource(Typology::UTurn))?;

    let own = graph.owner_accounts(source);
    let (outbound, return_account, return_via_business) = if own.len() >= 2 {
        let a = own[rng.random_range(0..own.len())];
        let mut b = own[rng.random_range(0..own.len())];
        while b == a {
            b = own[rng.random_range(0..own.len())];
        }
        (a, b, None)
    } else {
        let businesses = &graph.businesses_by_owner[&source];
        let with_accounts: Vec<NodeIdx> = businesses
            .iter()
            .copied()
            .filter(|b| !graph.owner_accounts(*b).is_empty())
            .collect();
        let biz = with_accounts[rng.random_range(0..with_accounts.len())];
        (own[0], pick_account(graph, biz, rng), Some(biz))
    };

    let n_entities = rng.random_range(cfg.chain_entities.lo()..=cfg.chain_entities.hi()) as usize;
    let n_intermediaries = n_entities - 1;
    let mut pool = cluster_union(
        graph,
        &[
            ClusterId::YoungAdult18To24,
            ClusterId::Elderly65Plus,
            ClusterId::HighRiskOccupation,
            ClusterId::HighRiskJurisdiction,
        ],
    );
    pool.retain(|&e| {
        is_individual(graph, e)
            && e != source
            && !used.contains(&e)
            && !graph.owner_accounts(e).is_empty()
    });
    let mut intermediaries = pick_k(&mut pool, n_intermediaries, rng);
    if intermediaries.len() < n_intermediaries {
        return Err(PatternError::PoolExhausted {
            needed: n_intermediaries,
            available: intermediaries.len(),
        });
    }
    // The path must cross at least one high-risk jurisdiction.
    if !intermediaries
        .iter()
        .any(|&i| graph.nodes[i as usize].high_risk_country)
    {
        let mut hrj: Vec<NodeIdx> = graph.clusters[&ClusterId::HighRiskJurisdiction]
            .iter()
            .copied()
            .filter(|&e| {
                is_individual(graph, e)
                    && e != source
                    && !used.contains(&e)
                    && !intermediaries.contains(&e)
                    && !graph.owner_accounts(e).is_empty()
            })
            .collect();
        match pick_one(&mut hrj, rng) {
            Some(repl) => {
                let pos = rng.random_range(0..intermediaries.len());
                intermediaries[pos] = repl;
            }
            None => {
                return Err(PatternError::PoolExhausted {
                    needed: 1,
                    available: 0,
                });
            }
        }
    }
    let intermediary_accounts: Vec<NodeIdx> = intermediaries
        .iter()
        .map(|&i| pick_account(graph, i, rng))
        .collect();

    // Delays first, then a start that fits the realized span.
    let delays: Vec<i64> = (0..n_intermediaries)
        .map(|_| rng.random_range(cfg.hop_delay.lo().get()..=cfg.hop_delay.hi().get()))
        .collect();
    let span: i64 = delays.iter().sum();
    let t0 = sample_start(ctx.window, 0, span + MARGIN_SECS, rng)
        .ok_or(PatternError::WindowTooShort(Typology::UTurn))?;

    let initial =
        rng.random_range(to_cents(cfg.initial_amount.lo())..=to_cents(cfg.initial_amount.hi()));
    let fee_margin = ((cfg.hop_fee.hi() - cfg.hop_fee.lo()) * 0.05).min(5e-4);
    let fees: Vec<f64> = (0..n_intermediaries.saturating_sub(1))
        .map(|_| rng.random_range(cfg.hop_fee.lo() + fee_margin..=cfg.hop_fee.hi() - fee_margin))
        .collect();
    let fee_product: f64 = fees.iter().map(|f| 1.0 - f).product();
    // The return ratio applies to the post-fee remainder; it is sampled so
    // that the amount landing back also stays within the configured ratio
    // range of the initial amount.
    let ratio_lo = cfg
        .return_ratio
        .lo()
        .max(cfg.return_ratio.lo() / fee_product);
    let ratio_margin = ((cfg.return_ratio.hi() - ratio_lo) * 0.05).min(0.003);
    let return_ratio =
        rng.random_range(ratio_lo + ratio_margin..=cfg.return_ratio.hi() - ratio_margin);

    let route: Vec<NodeIdx> = std::iter::once(outbound)
        .chain(intermediary_accounts.iter().copied())
        .chain(std::iter::once(return_account))
        .collect();
    let mut tagged = Vec::new();
    let mut amount = initial;
    let mut t = t0;
    for (j, pair) in route.windows(2).enumerate() {
        let role = if j + 1 == route.len() - 1 {
            "return".to_string()
        } else {
            format!("hop[{j}]")
        };
        tagged.push((
            PendingEdge::transaction(pair[0], pair[1], amount, t, TxCategory::Transfer, true),
            role,
        ));
        if j < delays.len() {
            t += delays[j];
        }
        if j < fees.len() {
            amount = (amount as f64 * (1.0 - fees[j])).round() as i64;
        } else if j + 2 == route.len() - 1 {
            // Next edge is the return leg.
            amount = (amount as f64 * return_ratio).round() as i64;
        }
    }

    let mut role_bindings = BTreeMap::new();
    role_bindings.insert("source".into(), vec![node_id(graph, source)]);
    role_bindings.insert("outbound_account".into(), vec![node_id(graph, outbound)]);
    role_bindings.insert(
        "return_account".into(),
        vec![node_id(graph, return_account)],
    );
    role_bindings.insert("intermediaries".into(), ids(graph, &intermediaries));
    role_bindings.insert(
        "intermediary_accounts".into(),
        ids(graph, &intermediary_accounts),
    );
    if let Some(biz) = return_via_business {
        role_bindings.insert("return_business".into(), vec![node_id(graph, biz)]);
    }

    let mut bound_entities = vec![source];
    bound_entities.extend(intermediaries.iter().copied());
    if let Some(biz) = return_via_business {
        bound_entities.push(biz);
    }

    Ok(DraftInstance {
        role_bindings,
        tagged_edges: tagged,
        bound_entities,
        params: ResolvedParams::UTurn {
            chain_entities: (cfg.chain_entities.lo(), cfg.chain_entities.hi()),
            initial_amount: (cfg.initial_amount.lo(), cfg.initial_amount.hi()),
            hop_delay_secs: (cfg.hop_delay.lo().get(), cfg.hop_delay.hi().get()),
            hop_fee: (cfg.hop_fee.lo(), cfg.hop_fee.hi()),
            return_ratio: (cfg.return_ratio.lo(), cfg.return_ratio.hi()),
        },
    })
}
