//! Layering: routing a transfer through intermediary accounts with per-hop
//! amount decay and inter-hop delays.

use rand::Rng;

use super::PatternError;
use crate::model::{Graph, NodeIdx};
use crate::rng::RngStream;

/// Resolved layering parameters for one pattern, in seconds and fractions.
#[derive(Debug, Clone, Copy)]
pub struct LayeringParams {
    pub enabled: bool,
    pub hops_min: u32,
    pub hops_max: u32,
    pub decay_min: f64,
    pub decay_max: f64,
    pub delay_min_secs: i64,
    pub delay_max_secs: i64,
    pub high_risk_pool: bool,
}

impl LayeringParams {
    pub fn from_config(cfg: &crate::config::LayeringConfig) -> Self {
        Self {
            enabled: cfg.enabled,
            hops_min: cfg.hops.lo(),
            hops_max: cfg.hops.hi(),
            decay_min: cfg.decay.lo(),
            decay_max: cfg.decay.hi(),
            delay_min_secs: cfg.hop_delay.lo().get(),
            delay_max_secs: cfg.hop_delay.hi().get(),
            high_risk_pool: cfg.pool == crate::config::LayeringPool::HighRiskCluster,
        }
    }

    /// Largest time the whole chain can stretch beyond its anchor.
    pub fn max_chain_span(&self) -> i64 {
        self.hops_max as i64 * self.delay_max_secs
    }

    /// Copy with the per-hop delay ceiling clamped so a full chain fits
    /// within `budget_secs`. The configured minimum is kept.
    pub fn clamp_delays(&self, budget_secs: i64) -> Self {
        let mut out = *self;
        if self.enabled && self.hops_max > 0 {
            let per_hop = (budget_secs / self.hops_max as i64).max(self.delay_min_secs);
            out.delay_max_secs = out.delay_max_secs.min(per_hop);
        }
        out
    }
}

/// Whether `time` pins the start of the chain (funds depart at `time`) or
/// its arrival (funds land at `time`, hops are scheduled backwards).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainAnchor {
    Start,
    Arrival,
}

/// One leg of a layered transfer.
#[derive(Debug, Clone, Copy)]
pub struct ChainLeg {
    pub from: NodeIdx,
    pub to: NodeIdx,
    pub amount_cents: i64,
    pub timestamp: i64,
}

/// Routes `amount_cents` from `src` to `dst` through sampled intermediary
/// accounts. Disabled layering yields the single base leg. Amounts decay at
/// every hop; legs are emitted in chronological order (hop index order).
#[allow(clippy::too_many_arguments)]
pub fn apply_layering(
    graph: &Graph,
    src: NodeIdx,
    dst: NodeIdx,
    amount_cents: i64,
    time: i64,
    anchor: ChainAnchor,
    params: &LayeringParams,
    pool: &[NodeIdx],
    rng: &mut RngStream,
) -> Result<Vec<ChainLeg>, PatternError> {
    debug_assert!(src != dst);
    if !params.enabled {
        return Ok(vec![ChainLeg {
            from: src,
            to: dst,
            amount_cents,
            timestamp: time,
        }]);
    }

    let hops = rng.random_range(params.hops_min..=params.hops_max) as usize;
    if hops == 0 {
        return Ok(vec![ChainLeg {
            from: src,
            to: dst,
            amount_cents,
            timestamp: time,
        }]);
    }

    // Intermediaries must be distinct from src, dst, and each other.
    let owner_src = graph.owner_of_account(src);
    let owner_dst = graph.owner_of_account(dst);
    let mut intermediaries = Vec::with_capacity(hops);
    let mut attempts = 0usize;
    while intermediaries.len() < hops {
        attempts += 1;
        if attempts > pool.len().saturating_mul(4) + 64 {
            return Err(PatternError::PoolExhausted {
                needed: hops,
                available: intermediaries.len(),
            });
        }
        if pool.is_empty() {
            return Err(PatternError::PoolExhausted {
                needed: hops,
                available: 0,
            });
        }
        let candidate = pool[rng.random_range(0..pool.len())];
        if candidate == src
            || candidate == dst
            || graph.owner_of_account(candidate) == owner_src
            || graph.owner_of_account(candidate) == owner_dst
            || intermediaries.contains(&candidate)
        {
            continue;
        }
        intermediaries.push(candidate);
    }

    // Sample decay and delay for each hop transition. Decay is drawn from
    // the interior of the configured range so that cent rounding can never
    // push an observed ratio outside the validated bounds.
    let span = params.decay_max - params.decay_min;
    let margin = (span * 0.01).min(1e-4);
    let mut decays = Vec::with_capacity(hops);
    let mut delays = Vec::with_capacity(hops);
    for _ in 0..hops {
        decays.push(rng.random_range(params.decay_min + margin..=params.decay_max - margin));
        delays.push(rng.random_range(params.delay_min_secs..=params.delay_max_secs));
    }

    let start = match anchor {
        ChainAnchor::Start => time,
        ChainAnchor::Arrival => time - delays.iter().sum::<i64>(),
    };

    let mut legs = Vec::with_capacity(hops + 1);
    let mut amount = amount_cents;
    let mut t = start;
    let route: Vec<NodeIdx> = std::iter::once(src)
        .chain(intermediaries.iter().copied())
        .chain(std::iter::once(dst))
        .collect();
    for (i, pair) in route.windows(2).enumerate() {
        legs.push(ChainLeg {
            from: pair[0],
            to: pair[1],
            amount_cents: amount,
            timestamp: t,
        });
        if i < hops {
            amount = ((amount as f64) * decays[i]).round() as i64;
            t += delays[i];
        }
    }
    Ok(legs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_graph_config;
    use crate::population::generate_population;
    use crate::rng::SeedTree;

    fn graph_and_pool() -> (Graph, Vec<NodeIdx>) {
        let cfg = parse_graph_config("master_seed: 5\nindividual_count: 60\n", "t").unwrap();
        let tree = SeedTree::new(cfg.master_seed);
        let graph =
            generate_population(&cfg, &cfg.risk_weights, &mut tree.stream("population")).unwrap();
        let pool = graph.regular_accounts.clone();
        (graph, pool)
    }

    fn params() -> LayeringParams {
        LayeringParams {
            enabled: true,
            hops_min: 2,
            hops_max: 5,
            decay_min: 0.95,
            decay_max: 0.99,
            delay_min_secs: 3600,
            delay_max_secs: 48 * 3600,
            high_risk_pool: false,
        }
    }

    #[test]
    fn disabled_layering_is_identity() {
        let (graph, pool) = graph_and_pool();
        let mut rng = SeedTree::new(1).stream("l");
        let p = LayeringParams {
            enabled: false,
            ..params()
        };
        let legs = apply_layering(
            &graph,
            pool[0],
            pool[1],
            123_456,
            999,
            ChainAnchor::Start,
            &p,
            &pool,
            &mut rng,
        )
        .unwrap();
        assert_eq!(legs.len(), 1);
        assert_eq!(legs[0].amount_cents, 123_456);
        assert_eq!(legs[0].timestamp, 999);
    }

    #[test]
    fn fixed_decay_products() {
        // Two intermediaries at decay 0.99: 10000.00 -> 9900.00 -> 9801.00.
        let (graph, pool) = graph_and_pool();
        let mut rng = SeedTree::new(2).stream("l");
        let p = LayeringParams {
            hops_min: 2,
            hops_max: 2,
            decay_min: 0.99,
            decay_max: 0.99,
            ..params()
        };
        let legs = apply_layering(
            &graph,
            pool[0],
            pool[1],
            1_000_000,
            0,
            ChainAnchor::Start,
            &p,
            &pool,
            &mut rng,
        )
        .unwrap();
        let amounts: Vec<i64> = legs.iter().map(|l| l.amount_cents).collect();
        assert_eq!(amounts, vec![1_000_000, 990_000, 980_100]);
    }

    #[test]
    fn hop_delays_within_bounds_and_amounts_decrease() {
        let (graph, pool) = graph_and_pool();
        let mut rng = SeedTree::new(3).stream("l");
        let p = params();
        for i in 0..20 {
            let legs = apply_layering(
                &graph,
                pool[i],
                pool[i + 21],
                2_000_000,
                1_000_000,
                ChainAnchor::Start,
                &p,
                &pool,
                &mut rng,
            )
            .unwrap();
            assert!(legs.len() >= 3 && legs.len() <= 6);
            for w in legs.windows(2) {
                let gap = w[1].timestamp - w[0].timestamp;
                assert!((3600..=48 * 3600).contains(&gap), "delay {gap}");
                assert!(w[1].amount_cents < w[0].amount_cents);
                let ratio = w[1].amount_cents as f64 / w[0].amount_cents as f64;
                assert!((0.95..=0.99).contains(&ratio), "decay {ratio}");
            }
        }
    }

    #[test]
    fn arrival_anchor_lands_on_time() {
        let (graph, pool) = graph_and_pool();
        let mut rng = SeedTree::new(4).stream("l");
        let legs = apply_layering(
            &graph,
            pool[0],
            pool[1],
            500_000,
            2_000_000,
            ChainAnchor::Arrival,
            &params(),
            &pool,
            &mut rng,
        )
        .unwrap();
        assert_eq!(legs.last().unwrap().timestamp, 2_000_000);
        assert!(legs[0].timestamp < 2_000_000);
    }

    #[test]
    fn intermediaries_are_distinct() {
        let (graph, pool) = graph_and_pool();
        let mut rng = SeedTree::new(5).stream("l");
        let legs = apply_layering(
            &graph,
            pool[0],
            pool[1],
            500_000,
            0,
            ChainAnchor::Start,
            &LayeringParams {
                hops_min: 5,
                hops_max: 5,
                ..params()
            },
            &pool,
            &mut rng,
        )
        .unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for leg in &legs {
            seen.insert(leg.from);
        }
        seen.insert(legs.last().unwrap().to);
        assert_eq!(seen.len(), legs.len() + 1, "route revisits an account");
    }

    #[test]
    fn exhausted_pool_errors() {
        let (graph, pool) = graph_and_pool();
        let mut rng = SeedTree::new(6).stream("l");
        let tiny = vec![pool[0], pool[1]];
        let err = apply_layering(
            &graph,
            pool[0],
            pool[1],
            500_000,
            0,
            ChainAnchor::Start,
            &LayeringParams {
                hops_min: 4,
                hops_max: 4,
                ..params()
            },
            &tiny,
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, PatternError::PoolExhausted { .. }));
    }

    #[test]
    fn clamp_delays_fits_budget() {
        let p = params().clamp_delays(10 * 3600);
        assert_eq!(p.delay_max_secs, 2 * 3600);
        assert_eq!(p.delay_min_secs, 3600);
    }
}
