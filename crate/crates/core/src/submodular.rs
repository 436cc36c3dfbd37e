//! Mechanisms for monotone submodular valuations.

use std::cmp::Ordering;

use crate::error::Result;
use crate::mechanism::{
    best_singleton, eligible, ratio_cmp, Branch, singleton_mix, singleton_outcome, threshold_outcome, AllocationRule,
    Mechanism, RandomizedMechanism,
};
use crate::model::{AgentId, AgentSet, BidProfile, Market, Outcome, RandomizedOutcome};
use crate::num::Num;
use crate::real::consts;
use crate::verify::opt::{BruteForce, OptOracle};

/// The greedy walk: agents by decreasing marginal value per unit of bid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreedyTrace {
    pub order: Vec<AgentId>,
    /// `m_k = v(S_{k-1} ∪ {k}) − v(S_{k-1})` along `order`.
    pub marginals: Vec<Num>,
    /// The accepted prefix.
    pub winners: AgentSet,
    /// Position in `order` of the first rejected agent.
    pub stop_index: Option<usize>,
}

fn value_of<M: Market + ?Sized>(market: &M, s: AgentSet) -> Result<Num> {
    match market.subset_table() {
        Some(t) => Ok(t.values[s.bits() as usize].clone()),
        None => market.value(s),
    }
}

/// Extends the greedy order one agent at a time until `accept` says stop.
/// `accept(agent, marginal)` sees agents in greedy order.
fn greedy_walk<M: Market + ?Sized>(
    market: &M,
    bids: &BidProfile,
    mut accept: impl FnMut(AgentId, &Num) -> bool,
) -> Result<GreedyTrace> {
    let mut remaining: Vec<AgentId> = eligible(market, bids).iter().collect();
    let mut taken = AgentSet::empty();
    let mut base = value_of(market, taken)?;
    let mut trace = GreedyTrace { order: vec![], marginals: vec![], winners: AgentSet::empty(), stop_index: None };
    while !remaining.is_empty() {
        let mut best: Option<(usize, Num)> = None;
        for (pos, &j) in remaining.iter().enumerate() {
            let m = value_of(market, taken.with(j))? - &base;
            let better = match &best {
                None => true,
                Some((bp, bm)) => ratio_cmp(&m, bids.get(j), bm, bids.get(remaining[*bp])).is_gt(),
            };
            if better {
                best = Some((pos, m));
            }
        }
        let (pos, m) = best.expect("remaining is non-empty");
        let k = remaining.remove(pos);
        taken.insert(k);
        base += &m;
        let ok = accept(k, &m);
        trace.order.push(k);
        trace.marginals.push(m);
        if !ok {
            trace.stop_index = Some(trace.order.len() - 1);
            return Ok(trace);
        }
        trace.winners.insert(k);
    }
    Ok(trace)
}

/// Full greedy order over the agents bidding at most `B`; ties by smaller
/// id, zero bids first.
pub fn greedy_order<M: Market + ?Sized>(market: &M, bids: &BidProfile) -> Result<GreedyTrace> {
    let mut t = greedy_walk(market, bids, |_, _| true)?;
    t.winners = AgentSet::empty();
    Ok(t)
}

/// Greedy with the proportional-share stopping rule: agent `k` is added while
/// `b_k ≤ cap · m_k / Σ_{i∈S∪{k}} m_i`.
pub fn greedy_sm<M: Market + ?Sized>(market: &M, bids: &BidProfile, cap: &Num) -> Result<GreedyTrace> {
    let mut sum = Num::zero();
    greedy_walk(market, bids, |k, m| {
        sum += m;
        sum.is_positive() && bids.get(k) * &sum <= cap * m
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionalGreedyResult {
    /// Number of agents taken whole.
    pub ell: usize,
    pub integral_value: Num,
    /// Budget spent on the partially taken agent.
    pub frac_cost: Num,
    pub frac_value: Num,
    pub total: Num,
}

/// Greedy under the full budget `B`, taking the first agent that does not
/// fit fractionally.
pub fn fractional_greedy_sm<M: Market + ?Sized>(market: &M, bids: &BidProfile) -> Result<FractionalGreedyResult> {
    let trace = greedy_order(market, bids)?;
    let budget = market.budget();
    let mut spent = Num::zero();
    let mut integral_value = Num::zero();
    for (pos, (&k, m)) in trace.order.iter().zip(&trace.marginals).enumerate() {
        let c = bids.get(k);
        if &(&spent + c) <= budget {
            spent += c;
            integral_value += m;
            continue;
        }
        let frac_cost = budget - &spent;
        let frac_value = m * &frac_cost / c;
        let total = &integral_value + &frac_value;
        return Ok(FractionalGreedyResult { ell: pos, integral_value, frac_cost, frac_value, total });
    }
    Ok(FractionalGreedyResult {
        ell: trace.order.len(),
        total: integral_value.clone(),
        integral_value,
        frac_cost: Num::zero(),
        frac_value: Num::zero(),
    })
}

/// `greedy_sm` with cap `B/2` as an allocation rule.
#[derive(Clone, Copy, Debug, Default)]
pub struct GreedySm;

impl<M: Market + ?Sized> AllocationRule<M> for GreedySm {
    fn name(&self) -> &str {
        "greedy-sm"
    }

    fn allocate(&self, market: &M, bids: &BidProfile) -> Result<AgentSet> {
        Ok(greedy_sm(market, bids, &market.budget().half())?.winners)
    }
}

impl<M: Market + ?Sized> Mechanism<M> for GreedySm {
    fn name(&self) -> &str {
        "greedy-sm"
    }

    fn run(&self, market: &M, bids: &BidProfile) -> Result<Outcome> {
        threshold_outcome(self, market, bids)
    }
}

/// `{i*}` with probability 2/5, otherwise the greedy allocation with cap `B/2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomMechSm;

impl<M: Market + ?Sized> RandomizedMechanism<M> for RandomMechSm {
    fn name(&self) -> &str {
        "random-sm"
    }

    fn run(&self, market: &M, bids: &BidProfile) -> Result<RandomizedOutcome> {
        let greedy = threshold_outcome(&GreedySm, market, bids)?;
        singleton_mix(market, bids, Num::ratio(2, 5), greedy)
    }
}

/// Deterministic mechanism: `{i*}` when `x·v(i*) ≥ opt(A∖{i*})`, else the
/// greedy allocation with cap `B/2`.
#[derive(Clone, Copy, Debug)]
pub struct DetMechSm<O = BruteForce> {
    pub oracle: O,
}

impl Default for DetMechSm<BruteForce> {
    fn default() -> Self {
        DetMechSm { oracle: BruteForce }
    }
}

impl<O: OptOracle> DetMechSm<O> {
    pub fn new(oracle: O) -> Self {
        DetMechSm { oracle }
    }

    pub fn branch<M: Market>(&self, market: &M, bids: &BidProfile) -> Result<Branch> {
        let a = eligible(market, bids);
        let Some(star) = best_singleton(market, a)? else {
            return Ok(Branch::Empty);
        };
        let rest = self.oracle.opt(market, bids, a.without(star), market.budget())?;
        let star_value = market.singleton_value(star)?;
        if consts::DET_SM_FACTOR.scaled_cmp(&star_value, &rest.value)? != Ordering::Less {
            Ok(Branch::Singleton(star))
        } else {
            Ok(Branch::Greedy)
        }
    }
}

impl<M: Market, O: OptOracle> AllocationRule<M> for DetMechSm<O> {
    fn name(&self) -> &str {
        "det-sm"
    }

    fn allocate(&self, market: &M, bids: &BidProfile) -> Result<AgentSet> {
        match self.branch(market, bids)? {
            Branch::Singleton(i) => Ok(AgentSet::singleton(i)),
            Branch::Greedy => GreedySm.allocate(market, bids),
            Branch::Empty => Ok(AgentSet::empty()),
        }
    }
}

impl<M: Market, O: OptOracle> Mechanism<M> for DetMechSm<O> {
    fn name(&self) -> &str {
        "det-sm"
    }

    fn run(&self, market: &M, bids: &BidProfile) -> Result<Outcome> {
        match self.branch(market, bids)? {
            Branch::Singleton(i) => singleton_outcome(market, i),
            Branch::Greedy => threshold_outcome(self, market, bids),
            Branch::Empty => Ok(Outcome::empty()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coverage, Instance, Valuation};
    use crate::verify::threshold::{threshold_payment, ThresholdKind};

    fn ints(v: &[i64]) -> Vec<Num> {
        v.iter().map(|&x| Num::from_integer(x)).collect()
    }

    fn k1() -> Instance {
        Instance::additive(Num::from_integer(10), ints(&[6, 5, 4]), ints(&[2, 3, 5])).unwrap()
    }

    fn coverage3() -> Instance {
        let one = Num::one();
        let v = Valuation::Coverage(Coverage {
            elements: vec![("x".into(), one.clone()), ("y".into(), one.clone()), ("z".into(), one.clone())],
            covers: vec![vec![0, 1], vec![1, 2], vec![2]],
        });
        Instance::new(Num::from_integer(10), vec![one.clone(), one.clone(), one], v).unwrap()
    }

    /// Independent restatement of the greedy loop over a plain ratio sort,
    /// valid for additive valuations.
    fn additive_greedy_oracle(values: &[i64], costs: &[i64], cap_num: i64, cap_den: i64) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| (values[b] * costs[a]).cmp(&(values[a] * costs[b])).then(a.cmp(&b)));
        let mut sum = 0;
        let mut out = vec![];
        for i in idx {
            sum += values[i];
            if costs[i] * sum * cap_den <= cap_num * values[i] {
                out.push(i);
            } else {
                break;
            }
        }
        out.sort();
        out
    }

    #[test]
    fn greedy_order_examples() {
        let k = k1();
        let t = greedy_order(&k, &k.true_costs()).unwrap();
        assert_eq!(t.order, vec![0, 1, 2]);
        assert_eq!(t.marginals, ints(&[6, 5, 4]));
        let tie = Instance::additive(Num::from_integer(10), ints(&[2, 2]), ints(&[1, 1])).unwrap();
        assert_eq!(greedy_order(&tie, &tie.true_costs()).unwrap().order, vec![0, 1]);
        let c = coverage3();
        let t = greedy_order(&c, &c.true_costs()).unwrap();
        assert_eq!(t.order, vec![0, 1, 2]);
        assert_eq!(t.marginals, ints(&[2, 1, 0]));
    }

    #[test]
    fn greedy_sm_examples() {
        let k = k1();
        let t = greedy_sm(&k, &k.true_costs(), &Num::from_integer(5)).unwrap();
        assert_eq!(t.winners, AgentSet::singleton(0));
        assert_eq!(t.stop_index, Some(1));
        assert_eq!(additive_greedy_oracle(&[6, 5, 4], &[2, 3, 5], 5, 1), vec![0]);

        let one = |c: i64| Instance::additive(Num::from_integer(10), ints(&[3]), ints(&[c])).unwrap();
        assert_eq!(GreedySm.allocate(&one(5), &one(5).true_costs()).unwrap(), AgentSet::singleton(0));
        assert!(GreedySm.allocate(&one(6), &one(6).true_costs()).unwrap().is_empty());

        let empty = Instance::additive(Num::from_integer(10), vec![], vec![]).unwrap();
        assert!(GreedySm.allocate(&empty, &empty.true_costs()).unwrap().is_empty());
    }

    #[test]
    fn fractional_greedy_examples() {
        let k = k1();
        let r = fractional_greedy_sm(&k, &k.true_costs()).unwrap();
        assert_eq!((r.ell, r.total), (3, Num::from_integer(15)));
        let k8 = k.with_budget(Num::from_integer(8)).unwrap();
        let r = fractional_greedy_sm(&k8, &k8.true_costs()).unwrap();
        assert_eq!(r.ell, 2);
        assert_eq!(r.frac_cost, Num::from_integer(3));
        assert_eq!(r.total, Num::ratio(67, 5));
        let empty = Instance::additive(Num::one(), vec![], vec![]).unwrap();
        assert_eq!(fractional_greedy_sm(&empty, &empty.true_costs()).unwrap().total, Num::zero());
    }

    #[test]
    fn random_mech_sm_examples() {
        let k = k1();
        let r = RandomMechSm.run(&k, &k.true_costs()).unwrap();
        assert_eq!(r.branches.len(), 2);
        assert_eq!(r.branches[0].0, Num::ratio(2, 5));
        assert_eq!(r.branches[0].1.winners, AgentSet::singleton(0));
        assert_eq!(r.branches[0].1.total_payment, Num::from_integer(10));
        assert_eq!(r.branches[1].1.winners, AgentSet::singleton(0));
        assert_eq!(r.expected_value(), Num::from_integer(6));

        let single = Instance::additive(Num::from_integer(10), ints(&[4]), ints(&[1])).unwrap();
        let r = RandomMechSm.run(&single, &single.true_costs()).unwrap();
        assert_eq!(r.expected_value(), Num::from_integer(4));
    }

    #[test]
    fn det_mech_sm_examples() {
        let single = Instance::additive(Num::from_integer(4), ints(&[5]), ints(&[3])).unwrap();
        let o = DetMechSm::default().run(&single, &single.true_costs()).unwrap();
        assert_eq!((o.winners, o.total_payment), (AgentSet::singleton(0), Num::from_integer(4)));

        let k = k1();
        let o = DetMechSm::default().run(&k, &k.true_costs()).unwrap();
        assert_eq!((o.winners, o.total_payment), (AgentSet::singleton(0), Num::from_integer(10)));

        let many = Instance::additive(Num::from_integer(2), vec![Num::one(); 20], vec![Num::ratio(1, 10); 20]).unwrap();
        let mech = DetMechSm::default();
        assert_eq!(mech.branch(&many, &many.true_costs()).unwrap(), Branch::Greedy);
        let w = GreedySm.allocate(&many, &many.true_costs()).unwrap();
        assert_eq!(w, AgentSet::full(10));
    }

    #[test]
    fn single_agent_threshold_is_half_budget() {
        let one = Instance::additive(Num::from_integer(10), ints(&[3]), ints(&[1])).unwrap();
        let t = threshold_payment(&GreedySm, &one, &one.true_costs(), 0).unwrap();
        assert_eq!(t.kind, ThresholdKind::Threshold { lo: Num::from_integer(5), hi: Num::from_integer(5) });
    }

    #[test]
    fn greedy_matches_additive_oracle_on_a_grid() {
        for a in 1..6i64 {
            for b in 1..6i64 {
                let values = [6, 5, 4, 3];
                let costs = [a, b, 2, 3];
                let inst = Instance::additive(
                    Num::from_integer(10),
                    ints(&values),
                    ints(&costs),
                )
                .unwrap();
                let got: Vec<usize> = greedy_sm(&inst, &inst.true_costs(), &Num::from_integer(5)).unwrap().winners.iter().collect();
                assert_eq!(got, additive_greedy_oracle(&values, &costs, 5, 1), "costs {costs:?}");
            }
        }
    }
}
