//! Exhaustive optimum oracles.

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::model::{AgentSet, BidProfile, HeteroInstance, Market};
use crate::num::{floor_rational, Num};

/// Most agents the exhaustive search accepts.
pub const BRUTE_FORCE_LIMIT: usize = 20;
/// Limits of the structured heterogeneous oracle.
pub const STRUCTURED_ITEM_LIMIT: usize = 10;
pub const STRUCTURED_TYPE_LIMIT: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptResult {
    pub value: Num,
    pub set: AgentSet,
}

/// Computes `opt(candidates)` for a fixed cost vector and budget.
pub trait OptOracle: Sync {
    fn opt(&self, market: &dyn Market, costs: &BidProfile, candidates: AgentSet, budget: &Num) -> Result<OptResult>;
}

/// Exhaustive enumeration; see [`brute_force_opt`].
#[derive(Clone, Copy, Debug, Default)]
pub struct BruteForce;

impl OptOracle for BruteForce {
    fn opt(&self, market: &dyn Market, costs: &BidProfile, candidates: AgentSet, budget: &Num) -> Result<OptResult> {
        brute_force_opt(market, costs, candidates, budget)
    }
}

/// Costs scaled to integers by their common denominator.
struct ScaledCosts {
    costs: Vec<i128>,
    budget: i128,
}

impl ScaledCosts {
    fn new(costs: &BidProfile, candidates: AgentSet, budget: &Num) -> Option<ScaledCosts> {
        let b = budget.as_rational()?;
        let mut lcm = b.denom().clone();
        for i in candidates.iter() {
            lcm = lcm.lcm(costs.get(i).as_rational()?.denom());
        }
        let scale = BigRational::from_integer(lcm);
        let mut out = vec![0i128; costs.len()];
        for i in candidates.iter() {
            let r = costs.get(i).as_rational()? * &scale;
            out[i] = i128::from(r.to_integer().to_i64()?);
        }
        let budget = i128::from(floor_rational(&(b * &scale)).to_i64()?);
        Some(ScaledCosts { costs: out, budget })
    }

    fn fits(&self, s: AgentSet) -> bool {
        let mut total = 0i128;
        for i in s.iter() {
            total += self.costs[i];
            if total > self.budget {
                return false;
            }
        }
        true
    }
}

/// `max v(S)` over `S ⊆ candidates` with `Σ_{i∈S} c_i ≤ budget` (and the
/// instance's structural constraint). Ties go to the lexicographically
/// smallest set.
pub fn brute_force_opt<M: Market + ?Sized>(
    market: &M,
    costs: &BidProfile,
    candidates: AgentSet,
    budget: &Num,
) -> Result<OptResult> {
    if candidates.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { what: "exhaustive optimum", n: candidates.len(), limit: BRUTE_FORCE_LIMIT });
    }
    if let Some(table) = market.subset_table() {
        let scaled = ScaledCosts::new(costs, candidates, budget);
        for &mask in &table.order {
            let s = AgentSet::from_bits(u64::from(mask));
            if !s.is_subset(candidates) {
                continue;
            }
            let fits = match &scaled {
                Some(sc) => sc.fits(s),
                None => costs.total(s) <= *budget,
            };
            if fits {
                return Ok(OptResult { value: table.values[mask as usize].clone(), set: s });
            }
        }
        unreachable!("the empty set is always feasible");
    }
    let ids: Vec<usize> = candidates.iter().collect();
    let mut best = OptResult { value: market.value(AgentSet::empty())?, set: AgentSet::empty() };
    search(market, costs, budget, &ids, 0, AgentSet::empty(), Num::zero(), &mut best)?;
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
fn search<M: Market + ?Sized>(
    market: &M,
    costs: &BidProfile,
    budget: &Num,
    ids: &[usize],
    k: usize,
    s: AgentSet,
    spent: Num,
    best: &mut OptResult,
) -> Result<()> {
    if k == ids.len() {
        if market.structurally_feasible(s) {
            let v = market.value(s)?;
            if v > best.value || (v == best.value && s.lex_cmp(best.set).is_lt()) {
                *best = OptResult { value: v, set: s };
            }
        }
        return Ok(());
    }
    let i = ids[k];
    let with = &spent + costs.get(i);
    if with <= *budget && market.structurally_feasible(s.with(i)) {
        search(market, costs, budget, ids, k + 1, s.with(i), with, best)?;
    }
    search(market, costs, budget, ids, k + 1, s, spent, best)
}

/// Best fractional value of a heterogeneous instance by enumerating the
/// solution shapes an optimum can take: one point per type, with at most one
/// type mixing two of its points (the empty choice included).
pub fn structured_fractional_opt_hetero(
    h: &HeteroInstance,
    costs: &BidProfile,
    candidates: AgentSet,
    budget: &Num,
) -> Result<Num> {
    if candidates.len() > STRUCTURED_ITEM_LIMIT {
        return Err(Error::TooLarge { what: "structured fractional oracle", n: candidates.len(), limit: STRUCTURED_ITEM_LIMIT });
    }
    if h.type_count() > STRUCTURED_TYPE_LIMIT {
        return Err(Error::TooLarge { what: "structured fractional oracle (types)", n: h.type_count(), limit: STRUCTURED_TYPE_LIMIT });
    }
    // Per type, the available (cost, value) points; index 0 is the empty choice.
    let mut points: Vec<Vec<(Num, Num)>> = vec![vec![(Num::zero(), Num::zero())]; h.type_count()];
    for i in candidates.iter() {
        let it = &h.items()[i];
        points[it.ty].push((costs.get(i).clone(), it.value.clone()));
    }
    let m = points.len();
    let mut best = Num::zero();
    let mut pick = vec![0usize; m];
    loop {
        let cost: Num = (0..m).map(|t| &points[t][pick[t]].0).sum();
        let value: Num = (0..m).map(|t| &points[t][pick[t]].1).sum();
        if cost <= *budget && value > best {
            best = value.clone();
        }
        for t in 0..m {
            let (ca, va) = &points[t][pick[t]];
            let rest_cost = &cost - ca;
            let rest_value = &value - va;
            let room = budget - &rest_cost;
            if room.is_negative() {
                continue;
            }
            for (q, (cb, vb)) in points[t].iter().enumerate() {
                if q == pick[t] {
                    continue;
                }
                if let Some(v) = best_mix(ca, va, cb, vb, &room) {
                    let total = &rest_value + &v;
                    if total > best {
                        best = total;
                    }
                }
            }
        }
        // Advance the mixed-radix counter over picks.
        let mut t = 0;
        while t < m {
            pick[t] += 1;
            if pick[t] < points[t].len() {
                break;
            }
            pick[t] = 0;
            t += 1;
        }
        if t == m {
            break;
        }
    }
    Ok(best)
}

/// `max λ·va + (1−λ)·vb` subject to `λ·ca + (1−λ)·cb ≤ room`, `λ ∈ [0,1]`.
fn best_mix(ca: &Num, va: &Num, cb: &Num, vb: &Num, room: &Num) -> Option<Num> {
    let (lo, hi) = if ca == cb {
        if cb > room {
            return None;
        }
        (Num::zero(), Num::one())
    } else if ca > cb {
        if cb > room {
            return None;
        }
        let cap = (room - cb) / (ca - cb);
        (Num::zero(), cap.min(Num::one()))
    } else {
        if ca > room {
            return None;
        }
        let floor = (cb - room) / (cb - ca);
        (floor.max(Num::zero()), Num::one())
    };
    let at = |l: &Num| l * va + (Num::one() - l) * vb;
    Some(at(&lo).max(at(&hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Instance, Valuation};

    fn ints(v: &[i64]) -> Vec<Num> {
        v.iter().map(|&x| Num::from_integer(x)).collect()
    }

    fn k1() -> Instance {
        Instance::additive(Num::from_integer(10), ints(&[6, 5, 4]), ints(&[2, 3, 5])).unwrap()
    }

    fn h1() -> HeteroInstance {
        HeteroInstance::new(
            Num::from_integer(6),
            vec![(Num::from_integer(2), Num::from_integer(4), 0), (Num::from_integer(5), Num::from_integer(6), 0), (Num::from_integer(3), Num::from_integer(3), 1)],
        )
        .unwrap()
    }

    #[test]
    fn k1_optima() {
        let k = k1();
        let c = k.true_costs();
        let r = brute_force_opt(&k, &c, AgentSet::full(3), &Num::from_integer(10)).unwrap();
        assert_eq!((r.value, r.set), (Num::from_integer(15), AgentSet::full(3)));
        let r = brute_force_opt(&k, &c, AgentSet::full(3), &Num::from_integer(4)).unwrap();
        assert_eq!((r.value, r.set), (Num::from_integer(6), AgentSet::singleton(0)));
        let r = brute_force_opt(&k, &c, AgentSet::empty(), &Num::from_integer(4)).unwrap();
        assert_eq!((r.value, r.set), (Num::zero(), AgentSet::empty()));
    }

    #[test]
    fn ties_prefer_lexicographically_smallest() {
        // {0,2} and {1} both have value 2 and fit; {0,2} sorts first.
        let k = Instance::additive(Num::from_integer(2), ints(&[1, 2, 1]), ints(&[1, 2, 1])).unwrap();
        let r = brute_force_opt(&k, &k.true_costs(), AgentSet::full(3), &Num::from_integer(2)).unwrap();
        assert_eq!(r.set, [0, 2].into_iter().collect());
    }

    #[test]
    fn table_and_search_paths_agree() {
        // 18 agents: beyond the table limit, so the recursive search runs.
        let n = 18;
        let values: Vec<Num> = (0..n).map(|i| Num::from_integer((i * 7 % 5 + 1) as i64)).collect();
        let costs: Vec<Num> = (0..n).map(|i| Num::ratio((i * 3 % 4 + 1) as i64, 2)).collect();
        let big = Instance::additive(Num::from_integer(3), values.clone(), costs.clone()).unwrap();
        assert!(big.subset_table().is_none());
        let small = Instance::additive(Num::from_integer(3), values[..12].to_vec(), costs[..12].to_vec()).unwrap();
        let sub = AgentSet::full(12);
        let a = brute_force_opt(&big, &big.true_costs(), sub, &Num::from_integer(3)).unwrap();
        let b = brute_force_opt(&small, &small.true_costs(), sub, &Num::from_integer(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn refuses_large_inputs() {
        let k = Instance::new(Num::one(), vec![Num::one(); 21], Valuation::Additive(vec![Num::one(); 21])).unwrap();
        let err = brute_force_opt(&k, &k.true_costs(), AgentSet::full(21), &Num::one()).unwrap_err();
        assert!(matches!(err, Error::TooLarge { limit: 20, .. }));
    }

    #[test]
    fn hetero_brute_force_respects_types() {
        let h = h1();
        let r = brute_force_opt(&h, &h.true_costs(), AgentSet::full(3), &Num::from_integer(6)).unwrap();
        assert_eq!(r.value, Num::from_integer(7));
        let r = brute_force_opt(&h, &h.true_costs(), AgentSet::full(3), &Num::from_integer(100)).unwrap();
        assert_eq!(r.value, Num::from_integer(9));
    }

    #[test]
    fn structured_oracle_examples() {
        let h = h1();
        let c = h.true_costs();
        assert_eq!(structured_fractional_opt_hetero(&h, &c, AgentSet::full(3), &Num::from_integer(6)).unwrap(), Num::ratio(23, 3));
        assert_eq!(structured_fractional_opt_hetero(&h, &c, AgentSet::full(3), &Num::ratio(17, 2)).unwrap(), Num::from_integer(9));
        let single = HeteroInstance::new(Num::from_integer(2), vec![(Num::from_integer(3), Num::from_integer(6), 0)]).unwrap();
        assert_eq!(
            structured_fractional_opt_hetero(&single, &single.true_costs(), AgentSet::full(1), &Num::from_integer(2)).unwrap(),
            Num::from_integer(4)
        );
    }

    #[test]
    fn structured_oracle_beats_coarse_grid_on_h1() {
        // Grid over (α_a1, α_a2, α_b1) in steps of 1/12 never exceeds the oracle
        // and gets within a step of it.
        let h = h1();
        let best = structured_fractional_opt_hetero(&h, &h.true_costs(), AgentSet::full(3), &Num::from_integer(6)).unwrap();
        let mut grid_best = Num::zero();
        for a in 0..=12i64 {
            for b in 0..=12 - a {
                for c in 0..=12i64 {
                    let (a, b, c) = (Num::ratio(a, 12), Num::ratio(b, 12), Num::ratio(c, 12));
                    let cost = &a * Num::from_integer(2) + &b * Num::from_integer(5) + &c * Num::from_integer(3);
                    if cost <= Num::from_integer(6) {
                        let v = a * Num::from_integer(4) + b * Num::from_integer(6) + c * Num::from_integer(3);
                        grid_best = grid_best.max(v);
                    }
                }
            }
        }
        assert!(grid_best <= best);
        assert_eq!(grid_best, Num::ratio(23, 3));
    }
}
