//! Core graph data structures: typed nodes, the edge tuple, risk scoring,
//! and the cluster index used for targeted entity selection.
//!
//! Amounts are integer minor units and timestamps are unix seconds
//! throughout, so every arithmetic step is bit-exact across runs.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{AccountCategory, AgeGroup, Gender};
use crate::config::RiskWeights;
use crate::rng::RngStream;

/// Index into the node store; rendered ids (`I000123`) exist only at the
/// boundary so hot paths stay on dense integers.
pub type NodeIdx = u32;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("operation not defined for entity type {0}")]
    UnsupportedEntityType(&'static str),
    #[error("unknown cluster `{0}`")]
    UnknownCluster(String),
    #[error("edge references missing node index {0}")]
    DanglingEndpoint(NodeIdx),
    #[error("timestamp {ts} outside simulation window [{start}, {end})")]
    OutOfWindow { ts: i64, start: i64, end: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeType {
    Individual,
    Business,
    Account,
    Institution,
    Cash,
}

impl NodeType {
    pub fn label(self) -> &'static str {
        match self {
            NodeType::Individual => "individual",
            NodeType::Business => "business",
            NodeType::Account => "account",
            NodeType::Institution => "institution",
            NodeType::Cash => "cash",
        }
    }
}

/// Type-specific attribute payloads.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Individual {
        name: String,
        age_group: AgeGroup,
        /// Index into [`crate::catalog::OCCUPATIONS`].
        occupation: u16,
        gender: Gender,
    },
    Business {
        /// Index into [`crate::catalog::BUSINESS_CATEGORIES`].
        category: u16,
        incorporation_year: i32,
        employees: u32,
    },
    Account {
        category: AccountCategory,
        owner: NodeIdx,
        institution: NodeIdx,
    },
    Institution {
        name: String,
    },
    /// The single global cash node: source of deposits of unknown origin.
    Cash,
}

impl NodeKind {
    pub fn node_type(&self) -> NodeType {
        match self {
            NodeKind::Individual { .. } => NodeType::Individual,
            NodeKind::Business { .. } => NodeType::Business,
            NodeKind::Account { .. } => NodeType::Account,
            NodeKind::Institution { .. } => NodeType::Institution,
            NodeKind::Cash => NodeType::Cash,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityNode {
    pub idx: NodeIdx,
    /// Stable rendered identifier (type prefix + zero-padded counter).
    pub node_id: String,
    pub kind: NodeKind,
    pub country_code: String,
    /// Whether the entity's country is flagged high-risk in the run config.
    pub high_risk_country: bool,
    pub creation_year: i32,
    pub is_fraudulent: bool,
    /// Internal selection variable; excluded from exports.
    pub risk_score: f64,
}

impl EntityNode {
    pub fn node_type(&self) -> NodeType {
        self.kind.node_type()
    }

    pub fn is_entity(&self) -> bool {
        matches!(
            self.kind,
            NodeKind::Individual { .. } | NodeKind::Business { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Transaction,
    Ownership,
}

impl Relation {
    pub fn label(self) -> &'static str {
        match self {
            Relation::Transaction => "transaction",
            Relation::Ownership => "ownership",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxCategory {
    Payment,
    Transfer,
    Deposit,
    Withdrawal,
    Salary,
}

impl TxCategory {
    pub fn label(self) -> &'static str {
        match self {
            TxCategory::Payment => "payment",
            TxCategory::Transfer => "transfer",
            TxCategory::Deposit => "deposit",
            TxCategory::Withdrawal => "withdrawal",
            TxCategory::Salary => "salary",
        }
    }
}

/// The edge tuple: source, target, relation, amount, timestamp, inter-arrival
/// delta, category, fraud flag. `seq` is the provisional insertion number;
/// the final exported `edge_id` is assigned after the global merge sort.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransactionEdge {
    pub seq: u64,
    pub source: NodeIdx,
    pub target: NodeIdx,
    pub relation: Relation,
    /// Minor units (cents).
    pub amount_cents: i64,
    /// Unix seconds.
    pub timestamp: i64,
    /// Seconds since the source's previous transaction; recomputed at
    /// assembly over the merged sequence.
    pub time_since_prev: i64,
    pub category: TxCategory,
    pub is_fraud: bool,
}

/// An edge before insertion (no sequence number yet).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingEdge {
    pub source: NodeIdx,
    pub target: NodeIdx,
    pub relation: Relation,
    pub amount_cents: i64,
    pub timestamp: i64,
    pub category: TxCategory,
    pub is_fraud: bool,
}

impl PendingEdge {
    pub fn transaction(
        source: NodeIdx,
        target: NodeIdx,
        amount_cents: i64,
        timestamp: i64,
        category: TxCategory,
        is_fraud: bool,
    ) -> Self {
        Self {
            source,
            target,
            relation: Relation::Transaction,
            amount_cents,
            timestamp,
            category,
            is_fraud,
        }
    }
}

/// Cluster labels: single risk factors, the composites the pattern selectors
/// actually query, plus the bookkeeping clusters `legit` and `fraud`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterId {
    Legit,
    Fraud,
    HighRiskAge,
    HighRiskOccupation,
    HighRiskJurisdiction,
    CashIntensiveBusiness,
    VerySmallCompany,
    YoungAdult18To24,
    Elderly65Plus,
    /// (young adult or elderly) in a high-risk jurisdiction.
    VulnerableAgeHighRiskJurisdiction,
    /// High-risk occupation in a high-risk jurisdiction.
    OccupationHighRiskJurisdiction,
    /// Cash-intensive category and at most five employees.
    CashIntensiveSmallCompany,
}

impl ClusterId {
    pub const ALL: [ClusterId; 12] = [
        ClusterId::Legit,
        ClusterId::Fraud,
        ClusterId::HighRiskAge,
        ClusterId::HighRiskOccupation,
        ClusterId::HighRiskJurisdiction,
        ClusterId::CashIntensiveBusiness,
        ClusterId::VerySmallCompany,
        ClusterId::YoungAdult18To24,
        ClusterId::Elderly65Plus,
        ClusterId::VulnerableAgeHighRiskJurisdiction,
        ClusterId::OccupationHighRiskJurisdiction,
        ClusterId::CashIntensiveSmallCompany,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ClusterId::Legit => "legit",
            ClusterId::Fraud => "fraud",
            ClusterId::HighRiskAge => "high_risk_age",
            ClusterId::HighRiskOccupation => "high_risk_occupation",
            ClusterId::HighRiskJurisdiction => "high_risk_jurisdiction",
            ClusterId::CashIntensiveBusiness => "cash_intensive_business",
            ClusterId::VerySmallCompany => "very_small_company",
            ClusterId::YoungAdult18To24 => "young_adult_18_24",
            ClusterId::Elderly65Plus => "elderly_65_plus",
            ClusterId::VulnerableAgeHighRiskJurisdiction => {
                "vulnerable_age_and_high_risk_jurisdiction"
            }
            ClusterId::OccupationHighRiskJurisdiction => "high_risk_occupation_and_jurisdiction",
            ClusterId::CashIntensiveSmallCompany => "cash_intensive_small_company",
        }
    }
}

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RiskFactor {
    HighRiskAge,
    HighRiskOccupation,
    HighRiskJurisdiction,
    CashIntensive,
    VerySmallCompany,
}

/// Risk factor indicators for an individual or business.
fn risk_factors(node: &EntityNode) -> Result<Vec<RiskFactor>, &'static str> {
    let mut factors = Vec::new();
    match &node.kind {
        NodeKind::Individual {
            age_group,
            occupation,
            ..
        } => {
            if age_group.is_high_risk() {
                factors.push(RiskFactor::HighRiskAge);
            }
            if crate::catalog::OCCUPATIONS[*occupation as usize].high_risk {
                factors.push(RiskFactor::HighRiskOccupation);
            }
        }
        NodeKind::Business {
            category,
            employees,
            ..
        } => {
            if crate::catalog::BUSINESS_CATEGORIES[*category as usize].cash_intensive {
                factors.push(RiskFactor::CashIntensive);
            }
            if *employees <= 5 {
                factors.push(RiskFactor::VerySmallCompany);
            }
        }
        NodeKind::Account { .. } => return Err("account"),
        NodeKind::Institution { .. } => return Err("institution"),
        NodeKind::Cash => return Err("cash"),
    }
    if node.high_risk_country {
        factors.push(RiskFactor::HighRiskJurisdiction);
    }
    Ok(factors)
}

/// Weighted risk combination: `min(base + sum(w_i * f_i), cap)`.
pub fn risk_score(node: &EntityNode, weights: &RiskWeights) -> Result<f64, ModelError> {
    let factors = risk_factors(node).map_err(ModelError::UnsupportedEntityType)?;
    let base = match node.kind {
        NodeKind::Individual { .. } => weights.individual_base,
        NodeKind::Business { .. } => weights.business_base,
        _ => unreachable!("filtered by risk_factors"),
    };
    let sum: f64 = factors
        .iter()
        .map(|f| match f {
            RiskFactor::HighRiskAge => weights.high_risk_age,
            RiskFactor::HighRiskOccupation => weights.high_risk_occupation,
            RiskFactor::HighRiskJurisdiction => weights.high_risk_jurisdiction,
            RiskFactor::CashIntensive => weights.cash_intensive_category,
            RiskFactor::VerySmallCompany => weights.very_small_company,
        })
        .sum();
    Ok((base + sum).min(weights.cap))
}

/// Every single-factor cluster whose indicator holds, the matching
/// composites, and `legit`/`fraud` per the fraud label. Never empty.
pub fn assign_clusters(node: &EntityNode) -> Result<Vec<ClusterId>, ModelError> {
    let factors = risk_factors(node).map_err(ModelError::UnsupportedEntityType)?;
    let mut clusters = Vec::new();
    if node.is_fraudulent {
        clusters.push(ClusterId::Fraud);
    } else {
        clusters.push(ClusterId::Legit);
    }
    let has = |f: RiskFactor| factors.contains(&f);

    if let NodeKind::Individual { age_group, .. } = &node.kind {
        match age_group {
            AgeGroup::From18To24 => clusters.push(ClusterId::YoungAdult18To24),
            AgeGroup::Over65 => clusters.push(ClusterId::Elderly65Plus),
            _ => {}
        }
    }
    if has(RiskFactor::HighRiskAge) {
        clusters.push(ClusterId::HighRiskAge);
    }
    if has(RiskFactor::HighRiskOccupation) {
        clusters.push(ClusterId::HighRiskOccupation);
    }
    if has(RiskFactor::HighRiskJurisdiction) {
        clusters.push(ClusterId::HighRiskJurisdiction);
    }
    if has(RiskFactor::CashIntensive) {
        clusters.push(ClusterId::CashIntensiveBusiness);
    }
    if has(RiskFactor::VerySmallCompany) {
        clusters.push(ClusterId::VerySmallCompany);
    }
    if has(RiskFactor::HighRiskAge) && has(RiskFactor::HighRiskJurisdiction) {
        clusters.push(ClusterId::VulnerableAgeHighRiskJurisdiction);
    }
    if has(RiskFactor::HighRiskOccupation) && has(RiskFactor::HighRiskJurisdiction) {
        clusters.push(ClusterId::OccupationHighRiskJurisdiction);
    }
    if has(RiskFactor::CashIntensive) && has(RiskFactor::VerySmallCompany) {
        clusters.push(ClusterId::CashIntensiveSmallCompany);
    }
    Ok(clusters)
}

/// Directed heterogeneous graph under construction: node store, edge list,
/// and the cluster index over individuals and businesses.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    pub nodes: Vec<EntityNode>,
    pub edges: Vec<TransactionEdge>,
    /// Members sorted by (risk desc, idx asc) for deterministic selection.
    pub clusters: BTreeMap<ClusterId, Vec<NodeIdx>>,
    pub cash_node: NodeIdx,
    /// `[start, end)` unix seconds.
    pub window: (i64, i64),
    /// Non-cash account indices per owner entity.
    pub accounts_by_owner: BTreeMap<NodeIdx, Vec<NodeIdx>>,
    /// All non-cash accounts in creation order (the uniform layering pool).
    pub regular_accounts: Vec<NodeIdx>,
    /// Dedicated cash account per owner entity.
    pub cash_account_by_owner: BTreeMap<NodeIdx, NodeIdx>,
    /// Businesses owned per individual.
    pub businesses_by_owner: BTreeMap<NodeIdx, Vec<NodeIdx>>,
    next_seq: u64,
}

impl Graph {
    pub fn new(window: (i64, i64)) -> Self {
        let mut clusters = BTreeMap::new();
        for id in ClusterId::ALL {
            clusters.insert(id, Vec::new());
        }
        Self {
            window,
            clusters,
            ..Default::default()
        }
    }

    pub fn node(&self, idx: NodeIdx) -> &EntityNode {
        &self.nodes[idx as usize]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn push_node(&mut self, mut node: EntityNode) -> NodeIdx {
        let idx = self.nodes.len() as NodeIdx;
        node.idx = idx;
        self.nodes.push(node);
        idx
    }

    /// Appends a validated transaction or ownership edge, assigning the next
    /// monotone sequence number. `time_since_prev` is finalized later.
    pub fn insert_transaction(&mut self, edge: PendingEdge) -> Result<u64, ModelError> {
        if edge.source as usize >= self.nodes.len() {
            return Err(ModelError::DanglingEndpoint(edge.source));
        }
        if edge.target as usize >= self.nodes.len() {
            return Err(ModelError::DanglingEndpoint(edge.target));
        }
        if edge.relation == Relation::Transaction
            && !(self.window.0..self.window.1).contains(&edge.timestamp)
        {
            return Err(ModelError::OutOfWindow {
                ts: edge.timestamp,
                start: self.window.0,
                end: self.window.1,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.edges.push(TransactionEdge {
            seq,
            source: edge.source,
            target: edge.target,
            relation: edge.relation,
            amount_cents: edge.amount_cents,
            timestamp: edge.timestamp,
            time_since_prev: 0,
            category: edge.category,
            is_fraud: edge.is_fraud,
        });
        Ok(seq)
    }

    /// Rebuilds cluster membership for one entity from its current
    /// attributes. Used after population assembly and after fraud marking.
    pub fn reindex_entity(&mut self, idx: NodeIdx) -> Result<(), ModelError> {
        let assigned = assign_clusters(self.node(idx))?;
        for (cluster, members) in self.clusters.iter_mut() {
            let should_contain = assigned.contains(cluster);
            let pos = members.iter().position(|m| *m == idx);
            match (should_contain, pos) {
                (true, None) => members.push(idx),
                (false, Some(p)) => {
                    members.remove(p);
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Sorts every cluster by (risk desc, idx asc); call once after bulk
    /// population so later removals keep the order stable.
    pub fn sort_clusters(&mut self) {
        let scores: Vec<f64> = self.nodes.iter().map(|n| n.risk_score).collect();
        for members in self.clusters.values_mut() {
            members.sort_by(|a, b| {
                scores[*b as usize]
                    .partial_cmp(&scores[*a as usize])
                    .unwrap()
                    .then(a.cmp(b))
            });
        }
    }

    /// Marks an entity fraudulent: drops it from `legit`, adds it to `fraud`.
    /// Other cluster memberships are retained.
    pub fn mark_fraudulent(&mut self, idx: NodeIdx) {
        if self.nodes[idx as usize].is_fraudulent {
            return;
        }
        self.nodes[idx as usize].is_fraudulent = true;
        if !self.nodes[idx as usize].is_entity() {
            return;
        }
        let legit = self.clusters.get_mut(&ClusterId::Legit).unwrap();
        if let Some(pos) = legit.iter().position(|m| *m == idx) {
            legit.remove(pos);
        }
        let score = self.nodes[idx as usize].risk_score;
        let fraud = self.clusters.get_mut(&ClusterId::Fraud).unwrap();
        let scores = &self.nodes;
        let insert_at = fraud
            .binary_search_by(|m| {
                scores[*m as usize]
                    .risk_score
                    .partial_cmp(&score)
                    .unwrap()
                    .reverse()
                    .then(m.cmp(&idx))
            })
            .unwrap_or_else(|p| p);
        fraud.insert(insert_at, idx);
    }

    /// Draws up to `k` members of a cluster, excluding `exclude`, as a pure
    /// function of (cluster contents, exclude, rng state). When the cluster
    /// is exhausted, all remaining members are returned in index order
    /// (risk desc, idx asc).
    pub fn select_from_cluster(
        &self,
        cluster: ClusterId,
        k: usize,
        exclude: &dyn Fn(NodeIdx) -> bool,
        rng: &mut RngStream,
    ) -> Result<Vec<NodeIdx>, ModelError> {
        let members = self
            .clusters
            .get(&cluster)
            .ok_or_else(|| ModelError::UnknownCluster(cluster.label().to_string()))?;
        let mut candidates: Vec<NodeIdx> =
            members.iter().copied().filter(|m| !exclude(*m)).collect();
        if k == 0 {
            return Ok(Vec::new());
        }
        if candidates.len() <= k {
            return Ok(candidates);
        }
        // Partial Fisher-Yates over the (risk desc, idx asc) ordered list.
        for i in 0..k {
            let j = rng.random_range(i..candidates.len());
            candidates.swap(i, j);
        }
        candidates.truncate(k);
        Ok(candidates)
    }

    /// All non-cash accounts of an owner entity.
    pub fn owner_accounts(&self, owner: NodeIdx) -> &[NodeIdx] {
        self.accounts_by_owner
            .get(&owner)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn owner_of_account(&self, account: NodeIdx) -> Option<NodeIdx> {
        match self.node(account).kind {
            NodeKind::Account { owner, .. } => Some(owner),
            _ => None,
        }
    }
}
