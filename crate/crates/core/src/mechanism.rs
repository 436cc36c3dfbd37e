//! Mechanism traits and helpers shared by every mechanism family.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{AgentId, AgentSet, BidProfile, Market, Outcome, RandomizedOutcome};
use crate::num::Num;
use crate::verify::threshold::threshold_payment;

/// A deterministic allocation rule: declared costs in, winner set out.
pub trait AllocationRule<M: Market + ?Sized>: Sync {
    fn name(&self) -> &str;
    fn allocate(&self, market: &M, bids: &BidProfile) -> Result<AgentSet>;
}

/// A deterministic mechanism: allocation plus payments.
pub trait Mechanism<M: Market + ?Sized>: Sync {
    fn name(&self) -> &str;
    fn run(&self, market: &M, bids: &BidProfile) -> Result<Outcome>;
}

/// A universally truthful mechanism, returned as an explicit distribution
/// over deterministic outcomes.
pub trait RandomizedMechanism<M: Market + ?Sized>: Sync {
    fn name(&self) -> &str;
    fn run(&self, market: &M, bids: &BidProfile) -> Result<RandomizedOutcome>;
}

/// Which branch of a two-branch mechanism fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Singleton(AgentId),
    Greedy,
    Empty,
}

/// Agents whose bid does not exceed the budget.
pub fn eligible<M: Market + ?Sized>(market: &M, bids: &BidProfile) -> AgentSet {
    check_profile(market, bids);
    let b = market.budget();
    (0..market.len()).filter(|&i| bids.get(i) <= b).collect()
}

fn check_profile<M: Market + ?Sized>(market: &M, bids: &BidProfile) {
    assert_eq!(bids.len(), market.len(), "bid profile does not match the instance");
}

/// `i*`: the candidate with the largest singleton value, smallest id on ties.
pub fn best_singleton<M: Market + ?Sized>(market: &M, candidates: AgentSet) -> Result<Option<AgentId>> {
    let mut best: Option<(AgentId, Num)> = None;
    for i in candidates.iter() {
        let v = market.singleton_value(i)?;
        if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
            best = Some((i, v));
        }
    }
    Ok(best.map(|(i, _)| i))
}

/// Compares `gain_a / bid_a` against `gain_b / bid_b` without dividing.
/// A zero gain is a zero ratio whatever the bid; otherwise a zero bid is an
/// infinite ratio, and two infinite ratios tie.
pub fn ratio_cmp(gain_a: &Num, bid_a: &Num, gain_b: &Num, bid_b: &Num) -> Ordering {
    match (gain_a.is_zero(), gain_b.is_zero()) {
        (true, true) => return Ordering::Equal,
        (true, false) => return Ordering::Less,
        (false, true) => return Ordering::Greater,
        (false, false) => {}
    }
    match (bid_a.is_zero(), bid_b.is_zero()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => (gain_a * bid_b).cmp(&(gain_b * bid_a)),
    }
}

/// Sorts `ids` by `gain/bid` descending, ties by smaller id.
pub fn sort_by_ratio(ids: &mut [AgentId], gains: &[Num], bids: &BidProfile) {
    ids.sort_by(|&a, &b| {
        ratio_cmp(&gains[b], bids.get(b), &gains[a], bids.get(a)).then(a.cmp(&b))
    });
}

/// Outcome paying the whole budget to a single winner.
pub fn singleton_outcome<M: Market + ?Sized>(market: &M, i: AgentId) -> Result<Outcome> {
    let mut p = BTreeMap::new();
    p.insert(i, market.budget().clone());
    Outcome::new(AgentSet::singleton(i), p, market.singleton_value(i)?)
}

/// Runs `rule` and pays every winner its threshold bid under the same rule
/// (the upper bracket end, or `B` when the agent wins at any feasible bid).
pub fn threshold_outcome<M, R>(rule: &R, market: &M, bids: &BidProfile) -> Result<Outcome>
where
    M: Market + ?Sized,
    R: AllocationRule<M> + ?Sized,
{
    let winners = rule.allocate(market, bids)?;
    let mut payments = BTreeMap::new();
    for i in winners.iter() {
        let t = threshold_payment(rule, market, bids, i)?;
        let p = t.payment(market.budget()).ok_or_else(|| {
            Error::NonMonotone(format!("{} selects agent {i} at its bid but at no bid in [0, B]", rule.name()))
        })?;
        payments.insert(i, p);
    }
    Outcome::new(winners, payments, market.value(winners)?)
}

/// The rule that returns `{i*}` alone.
#[derive(Clone, Copy, Debug, Default)]
pub struct MaxSingleton;

impl<M: Market + ?Sized> AllocationRule<M> for MaxSingleton {
    fn name(&self) -> &str {
        "max-singleton"
    }

    fn allocate(&self, market: &M, bids: &BidProfile) -> Result<AgentSet> {
        Ok(best_singleton(market, eligible(market, bids))?.map_or(AgentSet::empty(), AgentSet::singleton))
    }
}

impl<M: Market + ?Sized> Mechanism<M> for MaxSingleton {
    fn name(&self) -> &str {
        "max-singleton"
    }

    fn run(&self, market: &M, bids: &BidProfile) -> Result<Outcome> {
        match best_singleton(market, eligible(market, bids))? {
            Some(i) => singleton_outcome(market, i),
            None => Ok(Outcome::empty()),
        }
    }
}

/// Two-branch distribution `(p, {i*} paid B)` and `(1 − p, rest)`.
pub(crate) fn singleton_mix<M: Market + ?Sized>(
    market: &M,
    bids: &BidProfile,
    p_singleton: Num,
    rest: Outcome,
) -> Result<RandomizedOutcome> {
    let single = match best_singleton(market, eligible(market, bids))? {
        Some(i) => singleton_outcome(market, i)?,
        None => Outcome::empty(),
    };
    let q = Num::one() - &p_singleton;
    RandomizedOutcome::new(vec![(p_singleton, single), (q, rest)])
}

/// Which instances a mechanism accepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Any monotone submodular valuation.
    Submodular,
    /// Additive valuations only.
    Knapsack,
    /// Heterogeneous knapsack instances.
    Hetero,
}

/// Every mechanism reachable by name from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MechanismKind {
    GreedySm,
    RandomSm,
    DetSm,
    GreK,
    MechK,
    RmK,
    GreH,
    Mhk,
    Rmhk,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 9] = [
        MechanismKind::GreedySm,
        MechanismKind::RandomSm,
        MechanismKind::DetSm,
        MechanismKind::GreK,
        MechanismKind::MechK,
        MechanismKind::RmK,
        MechanismKind::GreH,
        MechanismKind::Mhk,
        MechanismKind::Rmhk,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MechanismKind::GreedySm => "greedy-sm",
            MechanismKind::RandomSm => "random-sm",
            MechanismKind::DetSm => "det-sm",
            MechanismKind::GreK => "gre-k",
            MechanismKind::MechK => "mech-k",
            MechanismKind::RmK => "rm-k",
            MechanismKind::GreH => "gre-h",
            MechanismKind::Mhk => "mhk",
            MechanismKind::Rmhk => "rmhk",
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, MechanismKind::RandomSm | MechanismKind::RmK | MechanismKind::Rmhk)
    }

    pub fn family(self) -> Family {
        match self {
            MechanismKind::GreedySm | MechanismKind::RandomSm | MechanismKind::DetSm => Family::Submodular,
            MechanismKind::GreK | MechanismKind::MechK | MechanismKind::RmK => Family::Knapsack,
            MechanismKind::GreH | MechanismKind::Mhk | MechanismKind::Rmhk => Family::Hetero,
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MechanismKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| Error::Unsupported {
            mechanism: s.to_string(),
            reason: format!(
                "unknown mechanism; expected one of {}",
                MechanismKind::ALL.map(MechanismKind::as_str).join(", ")
            ),
        })
    }
}
