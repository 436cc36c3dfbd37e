//! Executable versions of the truthfulness, budget and approximation
//! guarantees. Each check returns `Ok(None)` on success and a replayable
//! witness on failure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hetero::{fhk, gre_h, GreH};
use crate::knapsack::{fopt_knapsack, gre_knapsack};
use crate::mechanism::{best_singleton, eligible, AllocationRule, MechanismKind};
use crate::model::{evaluate, marginal, AgentId, AgentSet, AnyInstance, BidProfile, HeteroInstance, Instance, Market, Outcome, Valuation};
use crate::registry::{check_applicable, run, RuleKind};
use crate::num::Num;
use crate::real::{consts, Real};
use crate::submodular::{fractional_greedy_sm, greedy_sm, GreedySm};
use crate::verify::opt::{brute_force_opt, structured_fractional_opt_hetero};
use crate::verify::report::PropertyReport;
use crate::verify::threshold::threshold_payment;

/// A failed check, with enough detail to replay it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness(pub String);

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub type Check = Result<Option<Witness>>;

fn fail(msg: String) -> Check {
    Ok(Some(Witness(msg)))
}

fn profile_text(bids: &BidProfile) -> String {
    let parts: Vec<String> = bids.as_slice().iter().map(ToString::to_string).collect();
    format!("[{}]", parts.join(" "))
}

/// Tolerance `2^-50 · B` used for bisection-derived quantities.
pub fn payment_tolerance(budget: &Num) -> Num {
    budget * &Num::pow2_neg(50)
}

/// How bid perturbations are sampled by [`check_monotone_allocation`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    /// Perturbed bids per agent per profile.
    pub points: usize,
    /// Random bid profiles checked in addition to the true costs.
    pub extra_profiles: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points: 32, extra_profiles: 1 }
    }
}

fn jitter(rng: &mut ChaCha8Rng) -> Num {
    Num::ratio(rng.gen_range(0..1024), 1024)
}

/// Samples bid profiles and checks that winners keep winning when they lower
/// their bid and losers keep losing when they raise it. Winners are moved to
/// jittered points of `[0, b)`, losers to jittered points of `(b, B]`.
pub fn check_monotone_allocation<M, R>(rule: &R, market: &M, grid: GridSpec, seed: u64) -> Check
where
    M: Market + ?Sized,
    R: AllocationRule<M> + ?Sized,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = market.budget().clone();
    let mut profiles = vec![market.true_costs()];
    for _ in 0..grid.extra_profiles {
        let bids = (0..market.len()).map(|_| &budget * &Num::ratio(rng.gen_range(0..=72), 64)).collect();
        profiles.push(BidProfile::new(bids)?);
    }
    let steps = grid.points as i64;
    for bids in &profiles {
        let winners = rule.allocate(market, bids)?;
        for i in 0..market.len() {
            let b = bids.get(i).clone();
            let won = winners.contains(i);
            if (won && b.is_zero()) || (!won && b >= budget) {
                continue;
            }
            for k in 0..steps {
                let u = jitter(&mut rng);
                let moved = if won {
                    &b * &((Num::from_integer(k) + u) / Num::from_integer(steps))
                } else {
                    &b + &(&budget - &b) * ((Num::from_integer(k + 1) - u) / Num::from_integer(steps))
                };
                let after = rule.allocate(market, &bids.with_bid(i, moved.clone()))?;
                if after.contains(i) != won {
                    return fail(format!(
                        "{}: agent {i} {} at bid {b} but {} at bid {moved}; bids {} winners {winners} then {after}",
                        rule.name(),
                        if won { "wins" } else { "loses" },
                        if won { "loses" } else { "wins" },
                        profile_text(bids),
                    ));
                }
            }
        }
    }
    Ok(None)
}

/// Total payment at most `B`, and every winner paid at least its bid.
pub fn check_budget_feasible(outcome: &Outcome, bids: &BidProfile, budget: &Num) -> Check {
    if outcome.total_payment > *budget {
        return fail(format!("total payment {} exceeds budget {budget}", outcome.total_payment));
    }
    for (&i, p) in &outcome.payments {
        if p < bids.get(i) {
            return fail(format!("agent {i} is paid {p} below its bid {}", bids.get(i)));
        }
    }
    Ok(None)
}

/// Threshold of each winner of the `B/2` greedy is at most
/// `m_j · B / v(S)`, up to the bisection tolerance.
pub fn check_greedy_payment_bound<M: Market + ?Sized>(market: &M, bids: &BidProfile) -> Check {
    let budget = market.budget();
    let trace = greedy_sm(market, bids, &budget.half())?;
    let v_s = market.value(trace.winners)?;
    let tol = payment_tolerance(budget);
    for (pos, &j) in trace.order.iter().enumerate() {
        if !trace.winners.contains(j) {
            continue;
        }
        let t = threshold_payment(&GreedySm, market, bids, j)?;
        let paid = t.payment(budget).expect("winner has a threshold");
        let bound = &trace.marginals[pos] * budget / &v_s;
        if paid > &bound + &tol {
            return fail(format!("agent {j}: threshold {paid} exceeds m_j·B/v(S) = {bound}; bids {}", profile_text(bids)));
        }
    }
    Ok(None)
}

/// Thresholds of greedy-with-deletions winners: at most
/// `(v_j − v_l)·B/v(S) + c_l` with `l` the item `j` replaced, and at most
/// `v_j·B/v(S)`.
pub fn check_hetero_payment_bound(h: &HeteroInstance, bids: &BidProfile) -> Check {
    let budget = h.budget();
    let trace = gre_h(h, bids);
    if trace.winners.is_empty() {
        return Ok(None);
    }
    let v_s = h.value(trace.winners)?;
    let tol = payment_tolerance(budget);
    for j in trace.winners.iter() {
        let t = threshold_payment(&GreH, h, bids, j)?;
        let paid = t.payment(budget).expect("winner has a threshold");
        let vj = &h.items()[j].value;
        let (vl, cl) = match trace.replaced[&j] {
            Some(l) => (h.items()[l].value.clone(), bids.get(l).clone()),
            None => (Num::zero(), Num::zero()),
        };
        let swap_bound = (vj - &vl) * budget / &v_s + &cl;
        let plain_bound = vj * budget / &v_s;
        if paid > &swap_bound + &tol {
            return fail(format!("item {j}: threshold {paid} exceeds swap bound {swap_bound}; bids {}", profile_text(bids)));
        }
        if paid > &plain_bound + &tol {
            return fail(format!("item {j}: threshold {paid} exceeds v_j·B/v(S) = {plain_bound}; bids {}", profile_text(bids)));
        }
    }
    Ok(None)
}

/// `(v(T) − v(S)) / (c(T) − c(S)) ≤ max_{t∈T∖S} m_S(t)/c_t` for `S ⊂ T`.
pub fn check_lemma_average(valuation: &Valuation, costs: &BidProfile, s: AgentSet, t: AgentSet) -> Result<bool> {
    if !s.is_subset(t) || s == t {
        return Err(Error::Precondition(format!("{s} is not a proper subset of {t}")));
    }
    let dc = costs.total(t) - costs.total(s);
    if !dc.is_positive() {
        return Err(Error::Precondition(format!("c({t}) − c({s}) = {dc} is not positive")));
    }
    let dv = evaluate(valuation, t)? - evaluate(valuation, s)?;
    for x in t.difference(s).iter() {
        let m = marginal(valuation, s, x)?;
        // dv/dc ≤ m/c_x, with c_x = 0 an infinite ratio.
        if &dv * costs.get(x) <= &m * &dc {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Samples `count` nested pairs `S ⊂ T` with `c(T) > c(S)` and checks the
/// averaging inequality on each.
pub fn check_lemma_average_sampled<M: Market + ?Sized>(
    market: &M,
    valuation: &Valuation,
    costs: &BidProfile,
    count: usize,
    seed: u64,
) -> Check {
    let n = market.len();
    if n == 0 {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = AgentSet::full(n).bits();
    for _ in 0..count {
        let t = AgentSet::from_bits(rng.gen_range(1..=full));
        let s = AgentSet::from_bits(rng.gen_range(0..=full) & t.bits());
        if s == t || costs.total(t) <= costs.total(s) {
            continue;
        }
        if !check_lemma_average(valuation, costs, s, t)? {
            return fail(format!("averaging inequality fails for S={s} T={t}; costs {}", profile_text(costs)));
        }
    }
    Ok(None)
}

/// `opt ≤ e/(e−1) · (3·v(greedy) + 2·v(i*))`, greedy with cap `B/2`.
pub fn check_opt_bound<M: Market + ?Sized>(market: &M, bids: &BidProfile) -> Check {
    let a = eligible(market, bids);
    let opt = brute_force_opt(market, bids, a, market.budget())?.value;
    let greedy = market.value(greedy_sm(market, bids, &market.budget().half())?.winners)?;
    let star = match best_singleton(market, a)? {
        Some(i) => market.singleton_value(i)?,
        None => Num::zero(),
    };
    let inner = Num::from_integer(3) * &greedy + Num::from_integer(2) * &star;
    let rhs = consts::e_over_e_minus_one() * Real::from(inner);
    if !Real::from(&opt).le(&rhs)? {
        return fail(format!("opt {opt} exceeds e/(e−1)·(3·{greedy} + 2·{star})"));
    }
    Ok(None)
}

/// `fgre ≥ (1 − 1/e)·opt`.
pub fn check_fractional_greedy<M: Market + ?Sized>(market: &M, bids: &BidProfile) -> Check {
    let opt = brute_force_opt(market, bids, eligible(market, bids), market.budget())?.value;
    let fg = fractional_greedy_sm(market, bids)?.total;
    let rhs = consts::one_minus_inv_e() * Real::from(&opt);
    if !Real::from(&fg).ge(&rhs)? {
        return fail(format!("fractional greedy {fg} below (1 − 1/e)·{opt}"));
    }
    Ok(None)
}

/// When the knapsack greedy stops early: `fopt(A) < 2·v(S) + v_{i*}`.
/// Passes vacuously when the greedy takes everyone or when no eligible
/// agent has positive value (both sides are then zero).
pub fn check_knapsack_chain(inst: &Instance, bids: &BidProfile) -> Check {
    let v = inst.additive_values().ok_or_else(|| Error::Unsupported {
        mechanism: "gre-k".into(),
        reason: "needs an additive valuation".into(),
    })?;
    let t = gre_knapsack(inst, bids)?;
    if t.stop.is_none() {
        return Ok(None);
    }
    let a = eligible(inst, bids);
    let fopt = fopt_knapsack(v, bids, a, inst.budget()).value;
    if fopt.is_zero() {
        return Ok(None);
    }
    let star = best_singleton(inst, a)?.map_or(Num::zero(), |i| v[i].clone());
    let vs: Num = t.winners.iter().map(|i| &v[i]).sum();
    let rhs = Num::from_integer(2) * &vs + &star;
    if fopt >= rhs {
        return fail(format!("fopt {fopt} is not below 2·{vs} + {star}"));
    }
    Ok(None)
}

/// If `i` wins under two different own bids, the winner set is the same.
pub fn check_output_stability(inst: &Instance, bids: &BidProfile, agent: AgentId, other_bid: &Num) -> Check {
    let a = gre_knapsack(inst, bids)?.winners;
    let alt = bids.with_bid(agent, other_bid.clone());
    let b = gre_knapsack(inst, &alt)?.winners;
    if a.contains(agent) && b.contains(agent) && a != b {
        return fail(format!("agent {agent} wins with sets {a} and {b}; bids {}", profile_text(bids)));
    }
    Ok(None)
}

/// The hull-based fractional optimum equals the structured oracle exactly.
pub fn check_fhk_optimal(h: &HeteroInstance, bids: &BidProfile) -> Check {
    let a = eligible(h, bids);
    let fast = fhk(h, bids, a);
    let slow = structured_fractional_opt_hetero(h, bids, a, h.budget())?;
    if fast.value != slow {
        return fail(format!("fhk {} differs from the structured optimum {slow}; bids {}", fast.value, profile_text(bids)));
    }
    if !fast.satisfies_structure(h, bids) {
        return fail(format!("fhk solution {:?} is not a hull solution; bids {}", fast.alpha, profile_text(bids)));
    }
    Ok(None)
}

/// Every applicable check on one instance at truthful bids.
pub fn all_checks(id: &str, inst: &AnyInstance, seed: u64) -> Result<Vec<PropertyReport>> {
    let mut out = Vec::new();
    let market = inst.as_market();
    let bids = market.true_costs();
    let mut push = |name: &str, check: Check| -> Result<()> {
        out.push(PropertyReport::from_check(name, id, check)?);
        Ok(())
    };
    for rule in RuleKind::ALL.into_iter().filter(|r| r.applies_to(inst)) {
        let check = match inst {
            AnyInstance::Plain(i) => check_monotone_allocation(rule.plain().expect("plain rule"), i, GridSpec::default(), seed),
            AnyInstance::Hetero(h) => check_monotone_allocation(rule.hetero().expect("hetero rule"), h, GridSpec::default(), seed),
        };
        push(&format!("monotone/{rule}"), check)?;
    }
    for kind in MechanismKind::ALL {
        if check_applicable(kind, inst).is_err() {
            continue;
        }
        let result = run(kind, inst, &bids)?;
        let mut check = Ok(None);
        for (_, outcome) in result.branches() {
            check = check_budget_feasible(outcome, &bids, market.budget());
            if !matches!(check, Ok(None)) {
                break;
            }
        }
        push(&format!("budget/{kind}"), check)?;
    }
    match inst {
        AnyInstance::Plain(i) => {
            push("lemma-average", check_lemma_average_sampled(i, i.valuation(), &bids, 64, seed))?;
            push("greedy-payment-bound", check_greedy_payment_bound(i, &bids))?;
            push("opt-bound", check_opt_bound(i, &bids))?;
            push("fractional-greedy", check_fractional_greedy(i, &bids))?;
            if i.additive_values().is_some() {
                push("knapsack-chain", check_knapsack_chain(i, &bids))?;
            }
        }
        AnyInstance::Hetero(h) => {
            push("hetero-payment-bound", check_hetero_payment_bound(h, &bids))?;
            push("fhk-optimal", check_fhk_optimal(h, &bids))?;
        }
    }
    Ok(out)
}
