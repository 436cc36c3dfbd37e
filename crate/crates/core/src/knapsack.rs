//! Mechanisms for additive valuations (knapsack).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mechanism::{
    best_singleton, eligible, singleton_mix, Branch, singleton_outcome, sort_by_ratio, AllocationRule, Mechanism,
    RandomizedMechanism,
};
use crate::model::{AgentId, AgentSet, BidProfile, Instance, Market, Outcome, RandomizedOutcome};
use crate::num::Num;
use crate::real::consts;
use crate::verify::threshold::bisect;

fn values<'a>(inst: &'a Instance, mechanism: &str) -> Result<&'a [Num]> {
    inst.additive_values().ok_or_else(|| Error::Unsupported {
        mechanism: mechanism.to_string(),
        reason: format!("needs an additive valuation, got {}", inst.valuation().kind()),
    })
}

/// Result of the knapsack greedy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreTrace {
    /// Eligible agents by decreasing `v_i / b_i`.
    pub order: Vec<AgentId>,
    pub winners: AgentSet,
    /// First rejected agent, if the walk stopped early.
    pub stop: Option<AgentId>,
}

/// Greedy with the full budget: agent `k` is added while
/// `b_k ≤ B · v_k / Σ_{i∈S∪{k}} v_i`.
pub fn gre_knapsack(inst: &Instance, bids: &BidProfile) -> Result<GreTrace> {
    let v = values(inst, "gre-k")?;
    gre_over(v, bids, eligible(inst, bids), inst.budget())
}

fn gre_over(v: &[Num], bids: &BidProfile, candidates: AgentSet, budget: &Num) -> Result<GreTrace> {
    let mut order: Vec<AgentId> = candidates.iter().collect();
    sort_by_ratio(&mut order, v, bids);
    let mut winners = AgentSet::empty();
    let mut sum = Num::zero();
    for &k in &order {
        sum += &v[k];
        if !(sum.is_positive() && bids.get(k) * &sum <= budget * &v[k]) {
            return Ok(GreTrace { order, winners, stop: Some(k) });
        }
        winners.insert(k);
    }
    Ok(GreTrace { order, winners, stop: None })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnapsackFractionalOpt {
    pub value: Num,
    /// Nonzero fractions only.
    pub fractions: BTreeMap<AgentId, Num>,
    pub split_agent: Option<AgentId>,
}

/// Fractional knapsack over `candidates` by ratio order.
pub fn fopt_knapsack(values: &[Num], bids: &BidProfile, candidates: AgentSet, budget: &Num) -> KnapsackFractionalOpt {
    let mut order: Vec<AgentId> = candidates.iter().collect();
    sort_by_ratio(&mut order, values, bids);
    let mut spent = Num::zero();
    let mut value = Num::zero();
    let mut fractions = BTreeMap::new();
    for k in order {
        let c = bids.get(k);
        if &(&spent + c) <= budget {
            spent += c;
            value += &values[k];
            fractions.insert(k, Num::one());
            continue;
        }
        let alpha = (budget - &spent) / c;
        if alpha.is_positive() {
            value += &values[k] * &alpha;
            fractions.insert(k, alpha);
        }
        return KnapsackFractionalOpt { value, fractions, split_agent: Some(k) };
    }
    KnapsackFractionalOpt { value, fractions, split_agent: None }
}

/// Step-2 test shared by the deterministic knapsack mechanisms:
/// `(1+√2)·v_{i*} ≥ fopt(A∖{i*})`.
fn singleton_branch(inst: &Instance, v: &[Num], bids: &BidProfile) -> Branch {
    let a = eligible(inst, bids);
    let Some(star) = best_singleton(inst, a).expect("additive values are total") else {
        return Branch::Empty;
    };
    let rest = fopt_knapsack(v, bids, a.without(star), inst.budget());
    if consts::one_plus_sqrt2() * &v[star] >= rest.value {
        Branch::Singleton(star)
    } else {
        Branch::Greedy
    }
}

/// Largest bid of `agent` (others fixed) at which the step-2 test still
/// fails; the lower bracket end.
pub fn q_threshold(inst: &Instance, bids: &BidProfile, agent: AgentId) -> Result<Num> {
    let v = values(inst, "mech-k")?;
    let mut profile = bids.clone();
    let r = bisect(inst.budget(), |b| {
        profile.set(agent, b.clone());
        Ok(singleton_branch(inst, v, &profile) == Branch::Greedy)
    })?;
    Ok(r.lower(inst.budget()))
}

fn check_trace(inst: &Instance, bids: &BidProfile, s: AgentSet, stop: Option<AgentId>) -> Result<GreTrace> {
    let t = gre_knapsack(inst, bids)?;
    if t.winners != s || t.stop != stop {
        return Err(Error::ContractViolation(format!(
            "winners {s} with stop {stop:?} are not the greedy prefix {} with stop {:?}",
            t.winners, t.stop
        )));
    }
    Ok(t)
}

fn greedy_terms(v: &[Num], bids: &BidProfile, budget: &Num, t: &GreTrace) -> BTreeMap<AgentId, Num> {
    let total: Num = t.winners.iter().map(|i| &v[i]).sum();
    let mut out = BTreeMap::new();
    for i in t.winners.iter() {
        let mut p = budget * &v[i] / &total;
        if let Some(k) = t.stop {
            if v[k].is_positive() {
                p = p.min(&v[i] * bids.get(k) / &v[k]);
            }
        }
        out.insert(i, p);
    }
    out
}

/// Payments of the greedy alone:
/// `p_i = min{v_i·b_{k+1}/v_{k+1}, B·v_i/Σ_{j∈S} v_j}`, the first term
/// dropped when nobody was rejected.
pub fn gre_payments(
    inst: &Instance,
    bids: &BidProfile,
    s: AgentSet,
    stop: Option<AgentId>,
) -> Result<BTreeMap<AgentId, Num>> {
    let v = values(inst, "gre-k")?;
    let t = check_trace(inst, bids, s, stop)?;
    Ok(greedy_terms(v, bids, inst.budget(), &t))
}

/// Payments of the greedy branch of the deterministic mechanism: the greedy
/// terms, further capped by `q_i` for every winner other than `i*` when the
/// step-2 test fails at these bids.
pub fn knapsack_payment_formula(
    inst: &Instance,
    bids: &BidProfile,
    s: AgentSet,
    stop: Option<AgentId>,
) -> Result<BTreeMap<AgentId, Num>> {
    let v = values(inst, "mech-k")?;
    let t = check_trace(inst, bids, s, stop)?;
    let mut out = greedy_terms(v, bids, inst.budget(), &t);
    if singleton_branch(inst, v, bids) == Branch::Greedy {
        let star = best_singleton(inst, eligible(inst, bids))?;
        for (&i, p) in out.iter_mut() {
            if Some(i) != star {
                let q = q_threshold(inst, bids, i)?;
                if q < *p {
                    *p = q;
                }
            }
        }
    }
    Ok(out)
}

/// The knapsack greedy as a mechanism.
#[derive(Clone, Copy, Debug, Default)]
pub struct GreKnapsack;

impl AllocationRule<Instance> for GreKnapsack {
    fn name(&self) -> &str {
        "gre-k"
    }

    fn allocate(&self, inst: &Instance, bids: &BidProfile) -> Result<AgentSet> {
        Ok(gre_knapsack(inst, bids)?.winners)
    }
}

fn gre_outcome(inst: &Instance, bids: &BidProfile) -> Result<Outcome> {
    let t = gre_knapsack(inst, bids)?;
    let p = gre_payments(inst, bids, t.winners, t.stop)?;
    Outcome::new(t.winners, p, inst.value(t.winners)?)
}

impl Mechanism<Instance> for GreKnapsack {
    fn name(&self) -> &str {
        "gre-k"
    }

    fn run(&self, inst: &Instance, bids: &BidProfile) -> Result<Outcome> {
        gre_outcome(inst, bids)
    }
}

/// `{i*}` when `(1+√2)·v_{i*} ≥ fopt(A∖{i*})`, else the knapsack greedy.
#[derive(Clone, Copy, Debug, Default)]
pub struct MechKnapsack;

impl MechKnapsack {
    pub fn branch(&self, inst: &Instance, bids: &BidProfile) -> Result<Branch> {
        Ok(singleton_branch(inst, values(inst, "mech-k")?, bids))
    }
}

impl AllocationRule<Instance> for MechKnapsack {
    fn name(&self) -> &str {
        "mech-k"
    }

    fn allocate(&self, inst: &Instance, bids: &BidProfile) -> Result<AgentSet> {
        match self.branch(inst, bids)? {
            Branch::Singleton(i) => Ok(AgentSet::singleton(i)),
            Branch::Greedy => Ok(gre_knapsack(inst, bids)?.winners),
            Branch::Empty => Ok(AgentSet::empty()),
        }
    }
}

impl Mechanism<Instance> for MechKnapsack {
    fn name(&self) -> &str {
        "mech-k"
    }

    fn run(&self, inst: &Instance, bids: &BidProfile) -> Result<Outcome> {
        match self.branch(inst, bids)? {
            Branch::Singleton(i) => singleton_outcome(inst, i),
            Branch::Greedy => {
                let t = gre_knapsack(inst, bids)?;
                let p = knapsack_payment_formula(inst, bids, t.winners, t.stop)?;
                Outcome::new(t.winners, p, inst.value(t.winners)?)
            }
            Branch::Empty => Ok(Outcome::empty()),
        }
    }
}

/// `{i*}` with probability 1/3, otherwise the knapsack greedy.
#[derive(Clone, Copy, Debug, Default)]
pub struct RmKnapsack;

impl RandomizedMechanism<Instance> for RmKnapsack {
    fn name(&self) -> &str {
        "rm-k"
    }

    fn run(&self, inst: &Instance, bids: &BidProfile) -> Result<RandomizedOutcome> {
        let greedy = gre_outcome(inst, bids)?;
        singleton_mix(inst, bids, Num::ratio(1, 3), greedy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::threshold::{threshold_payment, ThresholdKind};

    fn ints(v: &[i64]) -> Vec<Num> {
        v.iter().map(|&x| Num::from_integer(x)).collect()
    }

    fn k1() -> Instance {
        Instance::additive(Num::from_integer(10), ints(&[6, 5, 4]), ints(&[2, 3, 5])).unwrap()
    }

    fn k2() -> Instance {
        Instance::additive(Num::from_integer(10), ints(&[6, 5, 4]), ints(&[4, 5, 5])).unwrap()
    }

    #[test]
    fn gre_examples() {
        let t = gre_knapsack(&k1(), &k1().true_costs()).unwrap();
        assert_eq!((t.winners, t.stop), ([0, 1].into_iter().collect(), Some(2)));
        let t = gre_knapsack(&k2(), &k2().true_costs()).unwrap();
        assert_eq!((t.winners, t.stop), (AgentSet::singleton(0), Some(1)));
        let one = Instance::additive(Num::from_integer(3), ints(&[1]), ints(&[3])).unwrap();
        assert_eq!(GreKnapsack.allocate(&one, &one.true_costs()).unwrap(), AgentSet::singleton(0));
    }

    #[test]
    fn fopt_examples() {
        let k = k1();
        let v = k.additive_values().unwrap();
        let f = fopt_knapsack(v, &k.true_costs(), AgentSet::full(3), &Num::from_integer(10));
        assert_eq!((f.value, f.split_agent), (Num::from_integer(15), None));
        let f = fopt_knapsack(v, &k.true_costs(), AgentSet::full(3), &Num::from_integer(8));
        assert_eq!(f.value, Num::ratio(67, 5));
        assert_eq!(f.split_agent, Some(2));
        assert_eq!(f.fractions[&2], Num::ratio(3, 5));
        let f = fopt_knapsack(v, &k.true_costs(), AgentSet::empty(), &Num::from_integer(8));
        assert_eq!(f.value, Num::zero());
    }

    #[test]
    fn payment_formula_examples() {
        let k = k1();
        let p = gre_payments(&k, &k.true_costs(), [0, 1].into_iter().collect(), Some(2)).unwrap();
        assert_eq!(p[&0], Num::ratio(60, 11));
        assert_eq!(p[&1], Num::ratio(50, 11));
        assert_eq!(p.values().sum::<Num>(), Num::from_integer(10));
        // Step 2 holds on K1, so the q terms do not apply.
        assert_eq!(knapsack_payment_formula(&k, &k.true_costs(), [0, 1].into_iter().collect(), Some(2)).unwrap(), p);

        let k = k2();
        let p = knapsack_payment_formula(&k, &k.true_costs(), AgentSet::singleton(0), Some(1)).unwrap();
        assert_eq!(p[&0], Num::from_integer(6));

        let one = Instance::additive(Num::from_integer(7), ints(&[2]), ints(&[1])).unwrap();
        let p = knapsack_payment_formula(&one, &one.true_costs(), AgentSet::singleton(0), None).unwrap();
        assert_eq!(p[&0], Num::from_integer(7));

        let err = gre_payments(&k1(), &k1().true_costs(), AgentSet::singleton(1), Some(2)).unwrap_err();
        assert!(matches!(err, Error::ContractViolation(_)));
    }

    #[test]
    fn formula_matches_bisection_on_k1_and_k2() {
        let k = k1();
        let t = threshold_payment(&GreKnapsack, &k, &k.true_costs(), 0).unwrap();
        assert_eq!(t.kind, ThresholdKind::Threshold { lo: Num::ratio(60, 11), hi: Num::ratio(60, 11) });
        let k = k2();
        let t = threshold_payment(&GreKnapsack, &k, &k.true_costs(), 0).unwrap();
        assert_eq!(t.kind, ThresholdKind::Threshold { lo: Num::from_integer(6), hi: Num::from_integer(6) });
    }

    #[test]
    fn mech_knapsack_examples() {
        let k = k1();
        let o = MechKnapsack.run(&k, &k.true_costs()).unwrap();
        assert_eq!((o.winners, o.total_payment, o.value), (AgentSet::singleton(0), Num::from_integer(10), Num::from_integer(6)));
        let one = Instance::additive(Num::from_integer(7), ints(&[2]), ints(&[1])).unwrap();
        let o = MechKnapsack.run(&one, &one.true_costs()).unwrap();
        assert_eq!((o.winners, o.total_payment), (AgentSet::singleton(0), Num::from_integer(7)));
        // Agent 1 of K1 never wins: the singleton branch holds for every bid.
        let t = threshold_payment(&MechKnapsack, &k, &k.true_costs(), 1).unwrap();
        assert_eq!(t.kind, ThresholdKind::NeverWins);
    }

    #[test]
    fn lb3_corner_takes_the_singleton() {
        let inst = Instance::additive(
            Num::one(),
            vec![Num::sqrt2(), Num::one(), Num::one()],
            vec![Num::ratio(1, 100); 3],
        )
        .unwrap();
        let o = MechKnapsack.run(&inst, &inst.true_costs()).unwrap();
        assert_eq!(o.winners, AgentSet::singleton(0));
        assert_eq!(o.value, Num::sqrt2());
    }

    #[test]
    fn rm_knapsack_examples() {
        let k = k1();
        let r = RmKnapsack.run(&k, &k.true_costs()).unwrap();
        assert_eq!(r.expected_value(), Num::ratio(28, 3));
        assert_eq!(&r.branches[0].0 + r.branches[1].0.clone(), Num::one());
        let one = Instance::additive(Num::from_integer(7), ints(&[2]), ints(&[1])).unwrap();
        assert_eq!(RmKnapsack.run(&one, &one.true_costs()).unwrap().expected_value(), Num::from_integer(2));
    }

    #[test]
    fn greedy_branch_payments_match_bisection() {
        // i* = 0 and fopt(A∖{0}) = 9 > (1+√2)·3, so the greedy branch runs
        // and every agent wins with payment B·3/12 = 1.
        let inst = Instance::additive(Num::from_integer(4), ints(&[3, 3, 3, 3]), ints(&[1, 1, 1, 1])).unwrap();
        let bids = inst.true_costs();
        assert_eq!(MechKnapsack.branch(&inst, &bids).unwrap(), Branch::Greedy);
        // fopt(A∖{0}) = 6 + 3·min(1, 2/b_1) stays above 7.25 up to b_1 = 4.
        assert_eq!(q_threshold(&inst, &bids, 1).unwrap(), Num::from_integer(4));
        let o = MechKnapsack.run(&inst, &bids).unwrap();
        for i in 0..4 {
            assert_eq!(o.payments[&i], Num::one());
            let t = threshold_payment(&MechKnapsack, &inst, &bids, i).unwrap();
            assert_eq!(t.payment(inst.budget()).unwrap(), Num::one());
        }
    }
}
