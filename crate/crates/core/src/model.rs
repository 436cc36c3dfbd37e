//! Agents, valuations, instances, bids and outcomes.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::num::Num;

pub type AgentId = usize;

/// Largest ground set an explicit valuation may be defined over.
pub const EXPLICIT_LIMIT: usize = 24;
/// Largest agent count for the exhaustive valuation checks.
pub const EXHAUSTIVE_LIMIT: usize = 24;
/// Hard cap imposed by the bitmask representation of agent sets.
pub const MAX_AGENTS: usize = 64;

/// A set of agent ids, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct AgentSet(u64);

impl AgentSet {
    pub const fn empty() -> Self {
        AgentSet(0)
    }

    pub const fn from_bits(bits: u64) -> Self {
        AgentSet(bits)
    }

    /// `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_AGENTS);
        if n == 64 {
            AgentSet(u64::MAX)
        } else {
            AgentSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(i: AgentId) -> Self {
        AgentSet(1u64 << i)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, i: AgentId) -> bool {
        i < MAX_AGENTS && self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: AgentId) {
        self.0 |= 1u64 << i;
    }

    pub fn remove(&mut self, i: AgentId) {
        self.0 &= !(1u64 << i);
    }

    pub fn with(self, i: AgentId) -> Self {
        AgentSet(self.0 | 1u64 << i)
    }

    pub fn without(self, i: AgentId) -> Self {
        AgentSet(self.0 & !(1u64 << i))
    }

    pub fn union(self, other: AgentSet) -> Self {
        AgentSet(self.0 | other.0)
    }

    pub fn intersection(self, other: AgentSet) -> Self {
        AgentSet(self.0 & other.0)
    }

    pub fn difference(self, other: AgentSet) -> Self {
        AgentSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: AgentSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in increasing id order.
    pub fn iter(self) -> impl Iterator<Item = AgentId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(i)
        })
    }

    /// Lexicographic order on the sorted id lists, so `{0,2} < {1}`.
    pub fn lex_cmp(self, other: AgentSet) -> std::cmp::Ordering {
        self.iter().cmp(other.iter())
    }
}

impl FromIterator<AgentId> for AgentSet {
    fn from_iter<I: IntoIterator<Item = AgentId>>(iter: I) -> Self {
        let mut s = AgentSet::empty();
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl fmt::Display for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Agent {
    pub id: AgentId,
    pub cost: Num,
}

/// Weighted coverage function: `v(S)` is the total weight of the elements
/// covered by some agent in `S`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coverage {
    /// Element names and weights.
    pub elements: Vec<(String, Num)>,
    /// Per agent, indices into `elements`.
    pub covers: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Valuation {
    Additive(Vec<Num>),
    /// `table[mask]` is the value of the subset with that bitmask.
    Explicit { n: usize, table: Vec<Num> },
    Coverage(Coverage),
}

impl Valuation {
    /// Builds an explicit valuation from `(set, value)` pairs; every subset
    /// of `{0..n}` must be listed exactly once except the empty set, which
    /// may be omitted and must otherwise be zero.
    pub fn explicit(n: usize, entries: impl IntoIterator<Item = (AgentSet, Num)>) -> Result<Valuation> {
        if n > EXPLICIT_LIMIT {
            return Err(Error::TooLarge { what: "explicit valuation", n, limit: EXPLICIT_LIMIT });
        }
        let size = 1usize << n;
        let mut table: Vec<Option<Num>> = vec![None; size];
        table[0] = Some(Num::zero());
        for (set, value) in entries {
            let mask = set.bits() as usize;
            if mask >= size {
                return Err(Error::MalformedValuation(format!("set {set} mentions an agent outside 0..{n}")));
            }
            if value.is_negative() {
                return Err(Error::MalformedValuation(format!("negative value for {set}")));
            }
            if mask == 0 {
                if !value.is_zero() {
                    return Err(Error::MalformedValuation("value of the empty set must be 0".into()));
                }
                continue;
            }
            if table[mask].is_some() {
                return Err(Error::MalformedValuation(format!("set {set} listed twice")));
            }
            table[mask] = Some(value);
        }
        let mut out = Vec::with_capacity(size);
        for (mask, v) in table.into_iter().enumerate() {
            match v {
                Some(v) => out.push(v),
                None => {
                    return Err(Error::MalformedValuation(format!(
                        "no value for set {}",
                        AgentSet::from_bits(mask as u64)
                    )))
                }
            }
        }
        Ok(Valuation::Explicit { n, table: out })
    }

    /// Number of agents the valuation is defined over.
    pub fn ground_size(&self) -> usize {
        match self {
            Valuation::Additive(v) => v.len(),
            Valuation::Explicit { n, .. } => *n,
            Valuation::Coverage(c) => c.covers.len(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Valuation::Additive(_) => "additive",
            Valuation::Explicit { .. } => "explicit",
            Valuation::Coverage(_) => "coverage",
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Valuation::Additive(v) => {
                if let Some(i) = v.iter().position(Num::is_negative) {
                    return Err(Error::MalformedValuation(format!("agent {i} has a negative value")));
                }
            }
            Valuation::Explicit { n, table } => {
                if table.len() != 1usize << n {
                    return Err(Error::MalformedValuation(format!(
                        "explicit table has {} entries, expected {}",
                        table.len(),
                        1usize << n
                    )));
                }
                if !table[0].is_zero() {
                    return Err(Error::MalformedValuation("value of the empty set must be 0".into()));
                }
                if table.iter().any(Num::is_negative) {
                    return Err(Error::MalformedValuation("negative set value".into()));
                }
            }
            Valuation::Coverage(c) => {
                if c.elements.iter().any(|(_, w)| w.is_negative()) {
                    return Err(Error::MalformedValuation("negative element weight".into()));
                }
                for (i, cov) in c.covers.iter().enumerate() {
                    if let Some(&e) = cov.iter().find(|&&e| e >= c.elements.len()) {
                        return Err(Error::MalformedValuation(format!("agent {i} covers unknown element #{e}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `v(S)`.
pub fn evaluate(valuation: &Valuation, s: AgentSet) -> Result<Num> {
    match valuation {
        Valuation::Additive(v) => {
            if let Some(i) = s.iter().find(|&i| i >= v.len()) {
                return Err(Error::Precondition(format!("agent {i} is outside the ground set")));
            }
            Ok(s.iter().map(|i| &v[i]).sum())
        }
        Valuation::Explicit { table, .. } => table
            .get(s.bits() as usize)
            .cloned()
            .ok_or_else(|| Error::MalformedValuation(format!("no value for set {s}"))),
        Valuation::Coverage(c) => {
            let mut seen = vec![false; c.elements.len()];
            let mut total = Num::zero();
            for i in s.iter() {
                let cov = c
                    .covers
                    .get(i)
                    .ok_or_else(|| Error::Precondition(format!("agent {i} is outside the ground set")))?;
                for &e in cov {
                    if !std::mem::replace(&mut seen[e], true) {
                        total += &c.elements[e].1;
                    }
                }
            }
            Ok(total)
        }
    }
}

/// `m_S(i) = v(S ∪ {i}) − v(S)`.
pub fn marginal(valuation: &Valuation, s: AgentSet, i: AgentId) -> Result<Num> {
    if s.contains(i) {
        return Ok(Num::zero());
    }
    Ok(evaluate(valuation, s.with(i))? - evaluate(valuation, s)?)
}

/// A pair of sets violating `v(S) + v(T) ≥ v(S∩T) + v(S∪T)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubmodularityWitness {
    pub s: AgentSet,
    pub t: AgentSet,
}

fn exhaustive_table(valuation: &Valuation, n: usize) -> Result<Vec<Num>> {
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge { what: "exhaustive valuation check", n, limit: EXHAUSTIVE_LIMIT });
    }
    (0..1u64 << n).map(|m| evaluate(valuation, AgentSet::from_bits(m))).collect()
}

/// Exhaustive submodularity test. Uses the local form
/// `v(R+i) + v(R+j) ≥ v(R) + v(R+i+j)`, which is equivalent to the pairwise
/// definition; a failure is reported as the pair `(R+i, R+j)`.
pub fn check_submodular(valuation: &Valuation, n: usize) -> Result<Option<SubmodularityWitness>> {
    let table = exhaustive_table(valuation, n)?;
    for r in 0..1u64 << n {
        for i in 0..n {
            if r >> i & 1 == 1 {
                continue;
            }
            for j in i + 1..n {
                if r >> j & 1 == 1 {
                    continue;
                }
                let (ri, rj) = (r | 1 << i, r | 1 << j);
                let rij = ri | 1 << j;
                let lhs = &table[ri as usize] + &table[rj as usize];
                let rhs = &table[r as usize] + &table[rij as usize];
                if lhs < rhs {
                    return Ok(Some(SubmodularityWitness { s: AgentSet::from_bits(ri), t: AgentSet::from_bits(rj) }));
                }
            }
        }
    }
    Ok(None)
}

/// Exhaustive test that `v` is nondecreasing under inclusion.
pub fn check_monotone_valuation(valuation: &Valuation, n: usize) -> Result<bool> {
    let table = exhaustive_table(valuation, n)?;
    for s in 0..1u64 << n {
        for i in 0..n {
            if s >> i & 1 == 0 && table[(s | 1 << i) as usize] < table[s as usize] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Declared costs, one per agent.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BidProfile(Vec<Num>);

impl BidProfile {
    pub fn new(bids: Vec<Num>) -> Result<Self> {
        if let Some(i) = bids.iter().position(Num::is_negative) {
            return Err(Error::Precondition(format!("agent {i} has a negative bid")));
        }
        Ok(BidProfile(bids))
    }

    pub fn get(&self, i: AgentId) -> &Num {
        &self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Num] {
        &self.0
    }

    /// The same profile with agent `i` bidding `bid` instead.
    pub fn with_bid(&self, i: AgentId, bid: Num) -> BidProfile {
        let mut v = self.0.clone();
        v[i] = bid;
        BidProfile(v)
    }

    pub fn set(&mut self, i: AgentId, bid: Num) {
        self.0[i] = bid;
    }

    /// `Σ_{i∈S} b_i`.
    pub fn total(&self, s: AgentSet) -> Num {
        s.iter().map(|i| &self.0[i]).sum()
    }
}

/// Precomputed subset values, shared by the exhaustive optimum searches.
#[derive(Clone, Debug)]
pub struct SubsetTable {
    pub values: Vec<Num>,
    /// Feasible masks sorted by value descending, ties by the
    /// lexicographically smallest set.
    pub order: Vec<u32>,
}

/// Largest agent count for which the subset table is cached.
pub const TABLE_LIMIT: usize = 16;

/// Common interface of plain and heterogeneous instances.
pub trait Market: Sync {
    fn budget(&self) -> &Num;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// `v(S)` for an arbitrary set of agent ids.
    fn value(&self, s: AgentSet) -> Result<Num>;
    /// Whether `S` respects the structural constraint (one item per type
    /// for heterogeneous instances; always true otherwise).
    fn structurally_feasible(&self, s: AgentSet) -> bool;
    fn true_costs(&self) -> BidProfile;
    /// Cached subset table, if the instance is small enough.
    fn subset_table(&self) -> Option<&SubsetTable>;
    fn singleton_value(&self, i: AgentId) -> Result<Num> {
        self.value(AgentSet::singleton(i))
    }
}

fn build_table<M: Market + ?Sized>(m: &M) -> Option<SubsetTable> {
    let n = m.len();
    if n > TABLE_LIMIT {
        return None;
    }
    let values: Vec<Num> = (0..1u64 << n).map(|s| m.value(AgentSet::from_bits(s))).collect::<Result<_>>().ok()?;
    let mut order: Vec<u32> =
        (0..1u32 << n).filter(|&s| m.structurally_feasible(AgentSet::from_bits(u64::from(s)))).collect();
    order.sort_by(|&a, &b| {
        values[b as usize]
            .cmp(&values[a as usize])
            .then_with(|| AgentSet::from_bits(u64::from(a)).lex_cmp(AgentSet::from_bits(u64::from(b))))
    });
    Some(SubsetTable { values, order })
}

/// Budget, agents with true costs, and a valuation over them.
#[derive(Debug)]
pub struct Instance {
    budget: Num,
    agents: Vec<Agent>,
    valuation: Valuation,
    table: OnceLock<Option<SubsetTable>>,
}

impl Clone for Instance {
    fn clone(&self) -> Self {
        Instance {
            budget: self.budget.clone(),
            agents: self.agents.clone(),
            valuation: self.valuation.clone(),
            table: self.table.clone(),
        }
    }
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.budget == other.budget && self.agents == other.agents && self.valuation == other.valuation
    }
}

impl Instance {
    /// Agent `i` gets id `i` and cost `costs[i]`.
    pub fn new(budget: Num, costs: Vec<Num>, valuation: Valuation) -> Result<Instance> {
        if !budget.is_positive() {
            return Err(Error::InvalidInstance("budget must be positive".into()));
        }
        if costs.len() > MAX_AGENTS {
            return Err(Error::TooLarge { what: "instance", n: costs.len(), limit: MAX_AGENTS });
        }
        if let Some(i) = costs.iter().position(Num::is_negative) {
            return Err(Error::InvalidInstance(format!("agent {i} has a negative cost")));
        }
        if valuation.ground_size() != costs.len() {
            return Err(Error::InvalidInstance(format!(
                "valuation covers {} agents but the instance has {}",
                valuation.ground_size(),
                costs.len()
            )));
        }
        valuation.validate()?;
        let agents = costs.into_iter().enumerate().map(|(id, cost)| Agent { id, cost }).collect();
        Ok(Instance { budget, agents, valuation, table: OnceLock::new() })
    }

    /// Additive instance from parallel value and cost lists.
    pub fn additive(budget: Num, values: Vec<Num>, costs: Vec<Num>) -> Result<Instance> {
        Instance::new(budget, costs, Valuation::Additive(values))
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn valuation(&self) -> &Valuation {
        &self.valuation
    }

    /// Per-agent values, if the valuation is additive.
    pub fn additive_values(&self) -> Option<&[Num]> {
        match &self.valuation {
            Valuation::Additive(v) => Some(v),
            _ => None,
        }
    }

    /// The same instance under a different budget.
    pub fn with_budget(&self, budget: Num) -> Result<Instance> {
        Instance::new(budget, self.agents.iter().map(|a| a.cost.clone()).collect(), self.valuation.clone())
    }
}

impl Market for Instance {
    fn budget(&self) -> &Num {
        &self.budget
    }

    fn len(&self) -> usize {
        self.agents.len()
    }

    fn value(&self, s: AgentSet) -> Result<Num> {
        evaluate(&self.valuation, s)
    }

    fn structurally_feasible(&self, _s: AgentSet) -> bool {
        true
    }

    fn true_costs(&self) -> BidProfile {
        BidProfile(self.agents.iter().map(|a| a.cost.clone()).collect())
    }

    fn subset_table(&self) -> Option<&SubsetTable> {
        self.table.get_or_init(|| build_table(self)).as_ref()
    }

    fn singleton_value(&self, i: AgentId) -> Result<Num> {
        match &self.valuation {
            Valuation::Additive(v) => Ok(v[i].clone()),
            _ => self.value(AgentSet::singleton(i)),
        }
    }
}

/// An item of a heterogeneous knapsack instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeteroItem {
    pub id: AgentId,
    pub cost: Num,
    pub value: Num,
    /// Type index in `0..m`.
    pub ty: usize,
}

/// Knapsack where at most one item of each type may be selected.
#[derive(Debug)]
pub struct HeteroInstance {
    budget: Num,
    items: Vec<HeteroItem>,
    type_labels: Vec<String>,
    table: OnceLock<Option<SubsetTable>>,
}

impl Clone for HeteroInstance {
    fn clone(&self) -> Self {
        HeteroInstance {
            budget: self.budget.clone(),
            items: self.items.clone(),
            type_labels: self.type_labels.clone(),
            table: self.table.clone(),
        }
    }
}

impl PartialEq for HeteroInstance {
    fn eq(&self, other: &Self) -> bool {
        self.budget == other.budget && self.items == other.items && self.type_labels == other.type_labels
    }
}

impl HeteroInstance {
    /// Items are `(cost, value, type)`; item `i` gets id `i`. Types are
    /// labelled by their index.
    pub fn new(budget: Num, items: Vec<(Num, Num, usize)>) -> Result<HeteroInstance> {
        let m = items.iter().map(|t| t.2 + 1).max().unwrap_or(0);
        let labels = (0..m).map(|t| t.to_string()).collect();
        HeteroInstance::with_labels(budget, items, labels)
    }

    pub fn with_labels(budget: Num, items: Vec<(Num, Num, usize)>, type_labels: Vec<String>) -> Result<HeteroInstance> {
        if !budget.is_positive() {
            return Err(Error::InvalidInstance("budget must be positive".into()));
        }
        if items.len() > MAX_AGENTS {
            return Err(Error::TooLarge { what: "instance", n: items.len(), limit: MAX_AGENTS });
        }
        let mut out = Vec::with_capacity(items.len());
        for (id, (cost, value, ty)) in items.into_iter().enumerate() {
            if cost.is_negative() {
                return Err(Error::InvalidInstance(format!("item {id} has a negative cost")));
            }
            if value.is_negative() {
                return Err(Error::MalformedValuation(format!("item {id} has a negative value")));
            }
            if ty >= type_labels.len() {
                return Err(Error::InvalidInstance(format!("item {id} has unknown type #{ty}")));
            }
            out.push(HeteroItem { id, cost, value, ty });
        }
        Ok(HeteroInstance { budget, items: out, type_labels, table: OnceLock::new() })
    }

    pub fn items(&self) -> &[HeteroItem] {
        &self.items
    }

    pub fn type_count(&self) -> usize {
        self.type_labels.len()
    }

    pub fn type_labels(&self) -> &[String] {
        &self.type_labels
    }

    pub fn with_budget(&self, budget: Num) -> Result<HeteroInstance> {
        HeteroInstance::with_labels(
            budget,
            self.items.iter().map(|it| (it.cost.clone(), it.value.clone(), it.ty)).collect(),
            self.type_labels.clone(),
        )
    }
}

impl Market for HeteroInstance {
    fn budget(&self) -> &Num {
        &self.budget
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn value(&self, s: AgentSet) -> Result<Num> {
        if let Some(i) = s.iter().find(|&i| i >= self.items.len()) {
            return Err(Error::Precondition(format!("item {i} is outside the instance")));
        }
        Ok(s.iter().map(|i| &self.items[i].value).sum())
    }

    fn structurally_feasible(&self, s: AgentSet) -> bool {
        let mut seen = 0u64;
        for i in s.iter() {
            let bit = 1u64 << self.items[i].ty;
            if seen & bit != 0 {
                return false;
            }
            seen |= bit;
        }
        true
    }

    fn true_costs(&self) -> BidProfile {
        BidProfile(self.items.iter().map(|it| it.cost.clone()).collect())
    }

    fn subset_table(&self) -> Option<&SubsetTable> {
        self.table.get_or_init(|| build_table(self)).as_ref()
    }

    fn singleton_value(&self, i: AgentId) -> Result<Num> {
        Ok(self.items[i].value.clone())
    }
}

/// Either kind of instance, as produced by the file parser.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyInstance {
    Plain(Instance),
    Hetero(HeteroInstance),
}

impl AnyInstance {
    pub fn as_market(&self) -> &dyn Market {
        match self {
            AnyInstance::Plain(i) => i,
            AnyInstance::Hetero(h) => h,
        }
    }
}

/// A deterministic mechanism's result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub winners: AgentSet,
    pub payments: BTreeMap<AgentId, Num>,
    pub value: Num,
    pub total_payment: Num,
}

impl Outcome {
    /// Checks that payments are given exactly for the winners.
    pub fn new(winners: AgentSet, payments: BTreeMap<AgentId, Num>, value: Num) -> Result<Outcome> {
        let paid: AgentSet = payments.keys().copied().collect();
        if paid != winners {
            return Err(Error::ContractViolation(format!("payments given to {paid} but winners are {winners}")));
        }
        let total_payment = payments.values().sum();
        Ok(Outcome { winners, payments, value, total_payment })
    }

    pub fn empty() -> Outcome {
        Outcome { winners: AgentSet::empty(), payments: BTreeMap::new(), value: Num::zero(), total_payment: Num::zero() }
    }
}

/// A probability distribution over deterministic outcomes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomizedOutcome {
    pub branches: Vec<(Num, Outcome)>,
}

impl RandomizedOutcome {
    pub fn new(branches: Vec<(Num, Outcome)>) -> Result<RandomizedOutcome> {
        if branches.iter().any(|(p, _)| !p.is_positive()) {
            return Err(Error::ContractViolation("branch probabilities must be positive".into()));
        }
        let total: Num = branches.iter().map(|(p, _)| p).sum();
        if total != Num::one() {
            return Err(Error::ContractViolation(format!("branch probabilities sum to {total}")));
        }
        Ok(RandomizedOutcome { branches })
    }

    pub fn expected_value(&self) -> Num {
        self.branches.iter().map(|(p, o)| p * &o.value).sum()
    }

    pub fn expected_payment(&self) -> Num {
        self.branches.iter().map(|(p, o)| p * &o.total_payment).sum()
    }
}
