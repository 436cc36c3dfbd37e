//! Lower-bound instance families and probes that run mechanisms over them.

use crate::error::{Error, Result};
use crate::mechanism::AllocationRule;
use crate::model::{BidProfile, Instance, Market};
use crate::num::Num;
use crate::verify::opt::brute_force_opt;
use crate::verify::report::Ratio;
use crate::verify::threshold::{threshold_payment, ThresholdKind};

/// A finite distribution over instances.
#[derive(Clone, Debug)]
pub struct WeightedInstanceFamily {
    pub description: String,
    pub members: Vec<(Num, Instance)>,
}

impl WeightedInstanceFamily {
    pub fn new(description: impl Into<String>, members: Vec<(Num, Instance)>) -> Result<Self> {
        let total: Num = members.iter().map(|(p, _)| p).sum();
        if total != Num::one() || members.iter().any(|(p, _)| !p.is_positive()) {
            return Err(Error::InvalidInstance(format!("family probabilities must be positive and sum to 1, got {total}")));
        }
        Ok(WeightedInstanceFamily { description: description.into(), members })
    }
}

/// Expected `opt/value`; `infinite` is set when some member with positive
/// probability has a positive optimum and zero mechanism value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpectedRatio {
    pub value: Num,
    pub infinite: bool,
}

impl ExpectedRatio {
    pub fn as_ratio(&self) -> Ratio {
        if self.infinite {
            Ratio::Infinite
        } else {
            Ratio::Finite(self.value.clone())
        }
    }
}

/// `Σ p · opt/value` over the family, with `value_of` giving the mechanism's
/// (expected) value on an instance at truthful bids.
pub fn expected_ratio_under_distribution(
    family: &WeightedInstanceFamily,
    mut value_of: impl FnMut(&Instance) -> Result<Num>,
) -> Result<ExpectedRatio> {
    let mut value = Num::zero();
    let mut infinite = false;
    for (p, inst) in &family.members {
        let costs = inst.true_costs();
        let opt = brute_force_opt(inst, &costs, crate::mechanism::eligible(inst, &costs), inst.budget())?.value;
        match Ratio::of(&opt, &value_of(inst)?) {
            Ratio::Finite(r) => value += p * &r,
            Ratio::Infinite => infinite = true,
        }
    }
    Ok(ExpectedRatio { value, infinite })
}

/// Convenience wrapper for a deterministic allocation rule.
pub fn expected_ratio_of_rule<R: AllocationRule<Instance> + ?Sized>(
    rule: &R,
    family: &WeightedInstanceFamily,
) -> Result<ExpectedRatio> {
    expected_ratio_under_distribution(family, |inst| inst.value(rule.allocate(inst, &inst.true_costs())?))
}

/// `2 − ε − (1−ε)/(n−1)`: no truthful budget-feasible deterministic
/// mechanism does better in expectation on [`yao_distribution`].
pub fn yao_bound(n: u32, eps: &Num) -> Num {
    Num::from_integer(2) - eps - (Num::one() - eps) / Num::from_integer(i64::from(n) - 1)
}

/// Two unit-value items. With total probability `1−ε` the costs lie on the
/// anti-diagonal `(kB/n, (n−k)B/n)`, `k = 1..n−1`; with total probability `ε`
/// they are `(iB/n, jB/n)` with `i + j > n`, `i, j ≤ n−1`, each such point
/// weighted `2ε/((n−1)(n−2))`.
pub fn yao_distribution(n: u32, eps: &Num, budget: &Num) -> Result<WeightedInstanceFamily> {
    if n < 3 {
        return Err(Error::Precondition(format!("yao family needs n ≥ 3, got {n}")));
    }
    if !eps.is_positive() || *eps >= Num::one() || !budget.is_positive() {
        return Err(Error::Precondition(format!("yao family needs 0 < eps < 1 and B > 0, got eps={eps} B={budget}")));
    }
    let nn = i64::from(n);
    let unit = budget / &Num::from_integer(nn);
    let point = |i: i64, j: i64| {
        Instance::additive(
            budget.clone(),
            vec![Num::one(), Num::one()],
            vec![&unit * &Num::from_integer(i), &unit * &Num::from_integer(j)],
        )
    };
    let p1 = (Num::one() - eps) / Num::from_integer(nn - 1);
    let p2 = Num::from_integer(2) * eps / Num::from_integer((nn - 1) * (nn - 2));
    let mut members = Vec::new();
    for k in 1..nn {
        members.push((p1.clone(), point(k, nn - k)?));
    }
    for i in 1..nn {
        for j in 1..nn {
            if i + j > nn {
                members.push((p2.clone(), point(i, j)?));
            }
        }
    }
    WeightedInstanceFamily::new(format!("yao n={n} eps={eps} B={budget}"), members)
}

/// Where a three-item grid point came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lb3Region {
    /// `c₃ = 7/10`, `c₂` sweeping `(1/5, 3/10)`.
    HighThird,
    /// `c₂ = 7/10`, `c₃` sweeping the sub-interval found in the first region.
    HighSecond,
    /// All costs `1/100`.
    Corner,
}

/// One instance of the three-item family: `B = 1`, values `(√2, 1, 1)`.
#[derive(Clone, Debug)]
pub struct Lb3Point {
    pub region: Lb3Region,
    pub instance: Instance,
}

fn lb3_instance(c1: Num, c2: Num, c3: Num) -> Result<Instance> {
    Instance::additive(Num::one(), vec![Num::sqrt2(), Num::one(), Num::one()], vec![c1, c2, c3])
}

fn sweep(lo: &Num, hi: &Num, resolution: u32) -> Vec<Num> {
    let steps = Num::from_integer(i64::from(resolution) + 1);
    (1..=i64::from(resolution)).map(|k| lo + &((hi - lo) * Num::from_integer(k) / steps.clone())).collect()
}

fn c1_grid(resolution: u32) -> Vec<Num> {
    let r = i64::from(resolution);
    (1..=r).map(|k| Num::ratio(5 * k, 4 * r)).collect()
}

/// Threshold of item 0 given the other two costs; zero when it never wins.
pub fn lb3_p1<R: AllocationRule<Instance> + ?Sized>(rule: &R, c2: &Num, c3: &Num) -> Result<Num> {
    let inst = lb3_instance(Num::zero(), c2.clone(), c3.clone())?;
    let t = threshold_payment(rule, &inst, &inst.true_costs(), 0)?;
    Ok(match t.kind {
        ThresholdKind::NeverWins => Num::zero(),
        _ => t.payment(inst.budget()).expect("item 0 wins somewhere"),
    })
}

/// `p₁(c₂, c₃) < 1 − c₂`.
fn lb3_predicate(p1: &Num, c2: &Num) -> bool {
    *p1 < Num::one() - c2
}

/// Result of probing one mechanism on the three-item family.
#[derive(Clone, Debug)]
pub struct Lb3Report {
    pub mechanism: String,
    pub points: usize,
    pub max_ratio: Ratio,
    pub argmax: Vec<Num>,
    /// `(c₂, c₃, p₁)` for every cost pair where `p₁ < 1 − c₂`.
    pub predicate_hits: Vec<(Num, Num, Num)>,
}

/// Builds the three-item family. `c₁` sweeps `k·(5/4)/R`; points with
/// `c₁ > 1` keep item 0, which is then priced out of the budget.
pub fn lb3_family<R: AllocationRule<Instance> + ?Sized>(rule: &R, resolution: u32) -> Result<(Vec<Lb3Point>, Vec<(Num, Num, Num)>)> {
    if resolution < 16 {
        return Err(Error::Precondition(format!("grid resolution must be at least 16, got {resolution}")));
    }
    let seven = Num::ratio(7, 10);
    let mut points = Vec::new();
    let mut hits = Vec::new();
    let mut first_hit: Option<(Num, Num)> = None;

    for c2 in sweep(&Num::ratio(1, 5), &Num::ratio(3, 10), resolution) {
        let p1 = lb3_p1(rule, &c2, &seven)?;
        if lb3_predicate(&p1, &c2) {
            if first_hit.is_none() {
                let slack = Num::one() - &c2 - &p1;
                first_hit = Some((c2.clone(), slack));
            }
            hits.push((c2.clone(), seven.clone(), p1));
        }
        for c1 in c1_grid(resolution) {
            points.push(Lb3Point { region: Lb3Region::HighThird, instance: lb3_instance(c1, c2.clone(), seven.clone())? });
        }
    }

    let (lo, hi) = match first_hit {
        Some((c, x)) => {
            let hi = (&c + &x).min(Num::ratio(3, 10));
            (c, hi)
        }
        None => (Num::ratio(1, 5), Num::ratio(3, 10)),
    };
    for c3 in sweep(&lo, &hi, resolution) {
        let p1 = lb3_p1(rule, &seven, &c3)?;
        if lb3_predicate(&p1, &seven) {
            hits.push((seven.clone(), c3.clone(), p1));
        }
        for c1 in c1_grid(resolution) {
            points.push(Lb3Point { region: Lb3Region::HighSecond, instance: lb3_instance(c1, seven.clone(), c3.clone())? });
        }
    }

    let eps = Num::ratio(1, 100);
    points.push(Lb3Point { region: Lb3Region::Corner, instance: lb3_instance(eps.clone(), eps.clone(), eps)? });
    Ok((points, hits))
}

/// Runs `rule` over the family at truthful bids and reports the worst
/// `opt/value` together with the predicate hits.
pub fn lb3_probe<R: AllocationRule<Instance> + ?Sized>(rule: &R, resolution: u32) -> Result<Lb3Report> {
    let (points, predicate_hits) = lb3_family(rule, resolution)?;
    let mut max_ratio = Ratio::Finite(Num::zero());
    let mut argmax = Vec::new();
    for p in &points {
        let inst = &p.instance;
        let costs: BidProfile = inst.true_costs();
        let opt = brute_force_opt(inst, &costs, crate::mechanism::eligible(inst, &costs), inst.budget())?.value;
        let value = inst.value(rule.allocate(inst, &costs)?)?;
        let ratio = Ratio::of(&opt, &value);
        if ratio > max_ratio {
            max_ratio = ratio;
            argmax = costs.as_slice().to_vec();
        }
    }
    Ok(Lb3Report { mechanism: rule.name().to_string(), points: points.len(), max_ratio, argmax, predicate_hits })
}
