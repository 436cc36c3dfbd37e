//! Heterogeneous knapsack: at most one item per type.
//!
//! Each type contributes a chain of items along the upper-left convex hull of
//! its `(cost, value)` points, starting from the empty choice at the origin.
//! Moving one step along a chain swaps the current item of that type for the
//! next one, at the price of the cost difference. Both the fractional optimum
//! and the greedy walk visit chain steps across all types by decreasing slope.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::Result;
use crate::mechanism::{
    best_singleton, eligible, singleton_mix, singleton_outcome, threshold_outcome, AllocationRule, Branch, Mechanism,
    RandomizedMechanism,
};
use crate::model::{AgentId, AgentSet, BidProfile, HeteroInstance, Market, Outcome, RandomizedOutcome};
use crate::num::Num;
use crate::real::consts;

/// Slope `dv / dc` of a hull segment; `dc = 0` is an infinite slope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slope {
    pub dv: Num,
    pub dc: Num,
}

impl Slope {
    pub fn is_infinite(&self) -> bool {
        self.dc.is_zero()
    }

    /// The slope as a number, if finite.
    pub fn value(&self) -> Option<Num> {
        (!self.is_infinite()).then(|| &self.dv / &self.dc)
    }
}

impl Ord for Slope {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_infinite(), other.is_infinite()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => (&self.dv * &other.dc).cmp(&(&other.dv * &self.dc)),
        }
    }
}

impl PartialOrd for Slope {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One step of a type's chain: from `prev` (or the origin) to `item`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainLink {
    pub item: AgentId,
    pub ty: usize,
    pub prev: Option<AgentId>,
    pub tangent: Slope,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HullChain {
    /// Per type, links in chain order.
    pub chains: Vec<Vec<ChainLink>>,
    /// All links by decreasing tangent, ties by `(type, item)`.
    pub order: Vec<ChainLink>,
}

/// Builds the per-type hull chains over `candidates` with `bids` as costs.
pub fn build_hull_chains(h: &HeteroInstance, bids: &BidProfile, candidates: AgentSet) -> HullChain {
    let mut chains = vec![Vec::new(); h.type_count()];
    for (ty, chain) in chains.iter_mut().enumerate() {
        let members: Vec<AgentId> = candidates.iter().filter(|&i| h.items()[i].ty == ty).collect();
        let mut last: Option<AgentId> = None;
        loop {
            let (c_last, v_last) = match last {
                Some(l) => (bids.get(l).clone(), h.items()[l].value.clone()),
                None => (Num::zero(), Num::zero()),
            };
            let mut best: Option<(AgentId, Slope)> = None;
            for &i in &members {
                let v = &h.items()[i].value;
                if *v <= v_last {
                    continue;
                }
                let slope = Slope { dv: v - &v_last, dc: (bids.get(i) - &c_last).abs() };
                let better = match &best {
                    None => true,
                    Some((b, bs)) => match slope.cmp(bs) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        // Farther point first, then smaller id.
                        Ordering::Equal => {
                            let bv = &h.items()[*b].value;
                            v > bv || (v == bv && i < *b)
                        }
                    },
                };
                if better {
                    best = Some((i, slope));
                }
            }
            let Some((k, tangent)) = best else { break };
            chain.push(ChainLink { item: k, ty, prev: last, tangent });
            last = Some(k);
        }
    }
    let mut order: Vec<ChainLink> = chains.iter().flatten().cloned().collect();
    order.sort_by(|a, b| b.tangent.cmp(&a.tangent).then(a.ty.cmp(&b.ty)).then(a.item.cmp(&b.item)));
    HullChain { chains, order }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionalSolution {
    /// Nonzero fractions only.
    pub alpha: BTreeMap<AgentId, Num>,
    pub value: Num,
    pub spend: Num,
}

impl FractionalSolution {
    /// Feasibility plus the optimum's shape: at most two nonzero fractions
    /// per type, and at most one type with two.
    pub fn satisfies_structure(&self, h: &HeteroInstance, bids: &BidProfile) -> bool {
        let mut per_type: Vec<(usize, Num)> = vec![(0, Num::zero()); h.type_count()];
        for (&i, a) in &self.alpha {
            if a.is_negative() || *a > Num::one() {
                return false;
            }
            let e = &mut per_type[h.items()[i].ty];
            e.0 += 1;
            e.1 += a;
        }
        let spend: Num = self.alpha.iter().map(|(&i, a)| a * bids.get(i)).sum();
        let value: Num = self.alpha.iter().map(|(&i, a)| a * &h.items()[i].value).sum();
        per_type.iter().all(|(k, s)| *k <= 2 && *s <= Num::one())
            && per_type.iter().filter(|(k, _)| *k == 2).count() <= 1
            && spend == self.spend
            && value == self.value
            && spend <= *h.budget()
    }
}

fn cost_of(bids: &BidProfile, item: Option<AgentId>) -> Num {
    item.map_or(Num::zero(), |i| bids.get(i).clone())
}

fn value_of(h: &HeteroInstance, item: Option<AgentId>) -> Num {
    item.map_or(Num::zero(), |i| h.items()[i].value.clone())
}

/// Fractional optimum over `candidates`: walk the merged chain order, paying
/// only the cost difference when a type's item is upgraded, and split the
/// first step that does not fit between it and its predecessor.
pub fn fhk(h: &HeteroInstance, bids: &BidProfile, candidates: AgentSet) -> FractionalSolution {
    let budget = h.budget();
    let hull = build_hull_chains(h, bids, candidates);
    let mut alpha: BTreeMap<AgentId, Num> = BTreeMap::new();
    let mut spend = Num::zero();
    for link in &hull.order {
        let reduced = bids.get(link.item) - &cost_of(bids, link.prev);
        if &(&spend + &reduced) <= budget {
            if let Some(p) = link.prev {
                alpha.remove(&p);
            }
            alpha.insert(link.item, Num::one());
            spend += &reduced;
            continue;
        }
        let a = (budget - &spend) / &reduced;
        if a.is_positive() {
            let rest = Num::one() - &a;
            alpha.insert(link.item, a);
            if let Some(p) = link.prev {
                alpha.insert(p, rest);
            }
            spend = budget.clone();
        }
        break;
    }
    let value = alpha.iter().map(|(&i, a)| a * &h.items()[i].value).sum();
    FractionalSolution { alpha, value, spend }
}

/// Result of the greedy walk with deletions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreHTrace {
    /// Items in the order they were accepted (replaced ones included).
    pub accepted: Vec<AgentId>,
    pub winners: AgentSet,
    /// For each accepted item, the item of its type it replaced.
    pub replaced: BTreeMap<AgentId, Option<AgentId>>,
    pub stop: Option<AgentId>,
}

/// Greedy with deletions: step `k` replaces the current item `l` of its type
/// while `c_k − c_l ≤ B·(v_k − v_l) / (v_k − v_l + v(S))`.
pub fn gre_h(h: &HeteroInstance, bids: &BidProfile) -> GreHTrace {
    let budget = h.budget();
    let hull = build_hull_chains(h, bids, eligible(h, bids));
    let mut trace = GreHTrace { accepted: vec![], winners: AgentSet::empty(), replaced: BTreeMap::new(), stop: None };
    let mut v_s = Num::zero();
    for link in &hull.order {
        let rc = bids.get(link.item) - &cost_of(bids, link.prev);
        let rv = &h.items()[link.item].value - &value_of(h, link.prev);
        let total = &rv + &v_s;
        if !(total.is_positive() && &rc * &total <= budget * &rv) {
            trace.stop = Some(link.item);
            break;
        }
        if let Some(p) = link.prev {
            trace.winners.remove(p);
        }
        trace.winners.insert(link.item);
        trace.accepted.push(link.item);
        trace.replaced.insert(link.item, link.prev);
        v_s = total;
    }
    trace
}

/// Greedy with deletions as a mechanism with threshold payments.
#[derive(Clone, Copy, Debug, Default)]
pub struct GreH;

impl AllocationRule<HeteroInstance> for GreH {
    fn name(&self) -> &str {
        "gre-h"
    }

    fn allocate(&self, h: &HeteroInstance, bids: &BidProfile) -> Result<AgentSet> {
        Ok(gre_h(h, bids).winners)
    }
}

impl Mechanism<HeteroInstance> for GreH {
    fn name(&self) -> &str {
        "gre-h"
    }

    fn run(&self, h: &HeteroInstance, bids: &BidProfile) -> Result<Outcome> {
        threshold_outcome(self, h, bids)
    }
}

/// `{i*}` when `(1+√2)·v_{i*} ≥ fhk(A∖{i*})`, else greedy with deletions.
#[derive(Clone, Copy, Debug, Default)]
pub struct Mhk;

impl Mhk {
    pub fn branch(&self, h: &HeteroInstance, bids: &BidProfile) -> Result<Branch> {
        let a = eligible(h, bids);
        let Some(star) = best_singleton(h, a)? else {
            return Ok(Branch::Empty);
        };
        let rest = fhk(h, bids, a.without(star));
        if consts::one_plus_sqrt2() * &h.items()[star].value >= rest.value {
            Ok(Branch::Singleton(star))
        } else {
            Ok(Branch::Greedy)
        }
    }
}

impl AllocationRule<HeteroInstance> for Mhk {
    fn name(&self) -> &str {
        "mhk"
    }

    fn allocate(&self, h: &HeteroInstance, bids: &BidProfile) -> Result<AgentSet> {
        match self.branch(h, bids)? {
            Branch::Singleton(i) => Ok(AgentSet::singleton(i)),
            Branch::Greedy => Ok(gre_h(h, bids).winners),
            Branch::Empty => Ok(AgentSet::empty()),
        }
    }
}

impl Mechanism<HeteroInstance> for Mhk {
    fn name(&self) -> &str {
        "mhk"
    }

    fn run(&self, h: &HeteroInstance, bids: &BidProfile) -> Result<Outcome> {
        match self.branch(h, bids)? {
            Branch::Singleton(i) => singleton_outcome(h, i),
            Branch::Greedy => threshold_outcome(self, h, bids),
            Branch::Empty => Ok(Outcome::empty()),
        }
    }
}

/// `{i*}` with probability 1/3, otherwise greedy with deletions.
#[derive(Clone, Copy, Debug, Default)]
pub struct Rmhk;

impl RandomizedMechanism<HeteroInstance> for Rmhk {
    fn name(&self) -> &str {
        "rmhk"
    }

    fn run(&self, h: &HeteroInstance, bids: &BidProfile) -> Result<RandomizedOutcome> {
        let greedy = threshold_outcome(&GreH, h, bids)?;
        singleton_mix(h, bids, Num::ratio(1, 3), greedy)
    }
}
