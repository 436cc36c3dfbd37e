//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::process::{Command, ExitCode};
use std::time::Instant;

use budgetmech::adversarial::{expected_ratio_of_rule, lb3_probe, yao_bound, yao_distribution};
use budgetmech::hetero::fhk;
use budgetmech::knapsack::{gre_knapsack, gre_payments, knapsack_payment_formula, GreKnapsack, MechKnapsack};
use budgetmech::mechanism::{eligible, MaxSingleton};
use budgetmech::real::Real;
use budgetmech::suite::{generate, generate_distinct_ratio, SuiteFamily, SuiteInstance, MAX_SUITE_AGENTS};
use budgetmech::verify::checks::{all_checks, check_monotone_allocation, GridSpec};
use budgetmech::verify::report::{approximation_report, worst_ratio, PropertyReport, Ratio};
use budgetmech::verify::threshold::threshold_payment;
use budgetmech::{
    AgentSet, AllocationRule, AnyInstance, BidProfile, Branch, HeteroInstance, Instance, Market, MechanismKind, Num,
    Result,
};

const SUITE_SIZE: usize = 500;
const SUITE_SEED: u64 = 20_240_601;
const CHECK_SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ints(v: &[i64]) -> Vec<Num> {
    v.iter().map(|&x| Num::from_integer(x)).collect()
}

fn k1() -> Instance {
    Instance::additive(Num::from_integer(10), ints(&[6, 5, 4]), ints(&[2, 3, 5])).unwrap()
}

fn k2() -> Instance {
    Instance::additive(Num::from_integer(10), ints(&[6, 5, 4]), ints(&[4, 5, 5])).unwrap()
}

fn h1() -> HeteroInstance {
    HeteroInstance::new(
        Num::from_integer(6),
        vec![(Num::from_integer(2), Num::from_integer(4), 0), (Num::from_integer(5), Num::from_integer(6), 0), (Num::from_integer(3), Num::from_integer(3), 1)],
    )
    .unwrap()
}

fn dec(r: &Ratio) -> String {
    r.to_decimal(6).unwrap_or_else(|e| e.to_string())
}

struct Suites {
    by_family: Vec<(SuiteFamily, Vec<SuiteInstance>)>,
}

impl Suites {
    fn get(&self, f: SuiteFamily) -> &[SuiteInstance] {
        &self.by_family.iter().find(|(g, _)| *g == f).unwrap().1
    }
}

/// Reports of [`all_checks`] over every suite, grouped by property prefix.
struct CheckResults {
    by_property: BTreeMap<String, Vec<(SuiteFamily, PropertyReport)>>,
}

impl CheckResults {
    fn run(suites: &Suites) -> Result<Self> {
        let mut by_property: BTreeMap<String, Vec<(SuiteFamily, PropertyReport)>> = BTreeMap::new();
        for (family, suite) in &suites.by_family {
            for s in suite {
                for r in all_checks(&s.id, &s.instance, CHECK_SEED)? {
                    let key = r.property.split('/').next().unwrap().to_string();
                    by_property.entry(key).or_default().push((*family, r));
                }
            }
        }
        Ok(CheckResults { by_property })
    }

    fn summarize(&self, property: &str, families: &[SuiteFamily]) -> (usize, Option<&PropertyReport>) {
        let rows: Vec<&PropertyReport> = self
            .by_property
            .get(property)
            .map(|v| v.iter().filter(|(f, _)| families.contains(f)).map(|(_, r)| r).collect())
            .unwrap_or_default();
        (rows.len(), rows.into_iter().find(|r| !r.pass))
    }

    fn criterion(&self, properties: &[(&str, &[SuiteFamily])]) -> Outcome {
        let mut parts = Vec::new();
        let mut pass = true;
        for (p, fams) in properties {
            let (n, failure) = self.summarize(p, fams);
            match failure {
                Some(r) => {
                    pass = false;
                    parts.push(format!("{p}: {r}"));
                }
                None if n == 0 => {
                    pass = false;
                    parts.push(format!("{p}: no applicable checks ran"));
                }
                None => parts.push(format!("{p} {n}/{n}")),
            }
        }
        outcome(pass, parts.join("; "))
    }
}

fn criterion_1(suites: &Suites) -> Result<Outcome> {
    let start = Instant::now();
    let plan: [(MechanismKind, SuiteFamily, Real, &str); 6] = [
        (MechanismKind::RandomSm, SuiteFamily::Submodular, Real::from(Num::ratio(791, 100)), "7.91"),
        (MechanismKind::DetSm, SuiteFamily::Submodular, Real::from(Num::ratio(834, 100)), "8.34"),
        (MechanismKind::MechK, SuiteFamily::Additive, Real::from(Num::from_integer(2) + Num::sqrt2()), "2+sqrt2"),
        (MechanismKind::Mhk, SuiteFamily::Hetero, Real::from(Num::from_integer(2) + Num::sqrt2()), "2+sqrt2"),
        (MechanismKind::RmK, SuiteFamily::Additive, Real::from(3), "3"),
        (MechanismKind::Rmhk, SuiteFamily::Hetero, Real::from(3), "3"),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (kind, family, bound, label) in plan {
        let rows = approximation_report(kind, suites.get(family))?;
        let worst = worst_ratio(&rows).expect("non-empty suite");
        let ok = rows.len() == SUITE_SIZE && worst.ratio.within(&bound)?;
        pass &= ok;
        parts.push(format!("{kind} max {} <= {label} on {} {family}{}", dec(&worst.ratio), rows.len(), if ok { "" } else { " VIOLATED" }));
    }
    let secs = start.elapsed().as_secs_f64();
    let fast = secs < 120.0;
    parts.push(format!("{secs:.1}s"));
    Ok(outcome(pass && fast, parts.join("; ")))
}

/// Greedy with the full budget, ranked by `v·b` descending: raising a bid
/// can move an agent to the front.
struct PlantedBug;

impl AllocationRule<Instance> for PlantedBug {
    fn name(&self) -> &str {
        "planted-bug"
    }

    fn allocate(&self, inst: &Instance, bids: &BidProfile) -> Result<AgentSet> {
        let v = inst.additive_values().expect("additive");
        let mut ids: Vec<usize> = eligible(inst, bids).iter().collect();
        ids.sort_by(|&a, &b| (&v[b] * bids.get(b)).cmp(&(&v[a] * bids.get(a))).then(b.cmp(&a)));
        let mut s = AgentSet::empty();
        let mut spend = Num::zero();
        for i in ids {
            let next = &spend + bids.get(i);
            if next > *inst.budget() {
                break;
            }
            spend = next;
            s.insert(i);
        }
        Ok(s)
    }
}

fn criterion_3(checks: &CheckResults) -> Result<Outcome> {
    use SuiteFamily::*;
    let base = checks.criterion(&[("monotone", &[Additive, Submodular, Hetero])]);
    let rules: std::collections::BTreeSet<String> = checks.by_property["monotone"].iter().map(|(_, r)| r.property.clone()).collect();
    let k = k2();
    let caught = check_monotone_allocation(&PlantedBug, &k, GridSpec::default(), CHECK_SEED)?;
    let planted_wins_at_7 = PlantedBug.allocate(&k, &k.true_costs().with_bid(2, Num::from_integer(7)))?.contains(2);
    let ok = base.pass && rules.len() == 7 && caught.is_some() && planted_wins_at_7;
    let witness = caught.map_or("planted bug NOT detected".to_string(), |w| format!("planted bug caught: {w}"));
    Ok(outcome(ok, format!("{}; {} rules; {witness}", base.detail, rules.len())))
}

fn criterion_6(checks: &CheckResults) -> Outcome {
    let base = checks.criterion(&[("fhk-optimal", &[SuiteFamily::Hetero])]);
    let h = h1();
    let c = h.true_costs();
    let v = fhk(&h, &c, eligible(&h, &c)).value;
    let ok = base.pass && v == Num::ratio(23, 3);
    outcome(ok, format!("{}; H1 at B=6 gives {v}", base.detail))
}

fn criterion_7() -> Result<Outcome> {
    let k = k1();
    let c = k.true_costs();
    let t = gre_knapsack(&k, &c)?;
    let p = gre_payments(&k, &c, t.winners, t.stop)?;
    let total: Num = p.values().sum();
    let k1_ok = p.get(&0) == Some(&Num::ratio(60, 11)) && p.get(&1) == Some(&Num::ratio(50, 11)) && total == Num::from_integer(10);

    let r = lb3_probe(&MechKnapsack, 32)?;
    let target = Num::one() + Num::sqrt2();
    let corner = r.argmax.is_empty() || r.max_ratio == Ratio::Finite(target.clone());
    let e = Num::ratio(1, 100);
    let ci = Instance::additive(Num::one(), vec![Num::sqrt2(), Num::one(), Num::one()], vec![e.clone(), e.clone(), e])?;
    let cc = ci.true_costs();
    let corner_value = ci.value(MechKnapsack.allocate(&ci, &cc)?)?;
    let corner_opt = budgetmech::verify::opt::brute_force_opt(&ci, &cc, eligible(&ci, &cc), ci.budget())?.value;
    let corner_ratio = Ratio::of(&corner_opt, &corner_value);
    let near = match &r.max_ratio {
        Ratio::Finite(x) => (x - &Num::ratio(24142, 10000)).abs() <= Num::ratio(1, 1000),
        Ratio::Infinite => false,
    };
    let ok = k1_ok && corner && near && corner_ratio == Ratio::Finite(target);
    Ok(outcome(
        ok,
        format!(
            "K1 payments {:?} total {total}; lb3 max ratio {} ({}) over {} points, corner ratio {}",
            p.values().map(ToString::to_string).collect::<Vec<_>>(),
            r.max_ratio,
            dec(&r.max_ratio),
            r.points,
            corner_ratio
        ),
    ))
}

fn criterion_8() -> Result<Outcome> {
    let eps = Num::ratio(1, 100);
    let family = yao_distribution(100, &eps, &Num::one())?;
    let bound = yao_bound(100, &eps);
    let mech = expected_ratio_of_rule(&MechKnapsack, &family)?;
    let single = expected_ratio_of_rule(&MaxSingleton, &family)?;
    let greedy = expected_ratio_of_rule(&GreKnapsack, &family)?;
    let ok = !mech.infinite
        && mech.value == Num::ratio(199, 100)
        && mech.value >= bound
        && [&single, &greedy].iter().all(|r| !r.infinite && r.value >= bound);
    Ok(outcome(
        ok,
        format!("mech-k {} >= {bound}; rm-k branches: singleton {}, greedy {}", mech.value, single.value, greedy.value),
    ))
}

fn criterion_9() -> Result<Outcome> {
    let suite = generate_distinct_ratio(SUITE_SEED, 200, 8)?;
    let mut compared = 0usize;
    let mut worst = Num::zero();
    let mut failure = None;
    for s in &suite {
        let AnyInstance::Plain(i) = &s.instance else { unreachable!() };
        let bids = i.true_costs();
        let tol = i.budget() * &Num::pow2_neg(50);
        let t = gre_knapsack(i, &bids)?;
        let mut pairs: Vec<(&dyn AllocationRule<Instance>, BTreeMap<usize, Num>)> =
            vec![(&GreKnapsack, gre_payments(i, &bids, t.winners, t.stop)?)];
        if matches!(MechKnapsack.branch(i, &bids)?, Branch::Greedy) {
            pairs.push((&MechKnapsack, knapsack_payment_formula(i, &bids, t.winners, t.stop)?));
        }
        for (rule, formula) in pairs {
            for (j, p) in formula {
                let b = threshold_payment(rule, i, &bids, j)?.payment(i.budget()).expect("winner");
                let gap = (&b - &p).abs();
                compared += 1;
                if gap > tol && failure.is_none() {
                    failure = Some(format!("{} agent {j} on {}: formula {p}, bisection {b}", rule.name(), s.id));
                }
                worst = worst.max(gap / i.budget().clone());
            }
        }
    }
    Ok(match failure {
        Some(f) => outcome(false, f),
        None => outcome(compared > 0, format!("{compared} payments on 200 instances, max gap {}·B", worst.to_f64())),
    })
}

fn criterion_10() -> Outcome {
    let bench = || Command::new(env!("CARGO_BIN_EXE_budgetmech")).args(["bench", "--seed", "7"]).output();
    match (bench(), bench()) {
        (Ok(a), Ok(b)) => {
            let same = a.stdout == b.stdout && !a.stdout.is_empty();
            outcome(same && a.status.success(), format!("{} bytes, identical: {same}, exit {:?}", a.stdout.len(), a.status.code()))
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, format!("could not run the binary: {e}")),
    }
}

fn main() -> ExitCode {
    let suites = Suites {
        by_family: SuiteFamily::ALL
            .into_iter()
            .map(|f| (f, generate(f, SUITE_SEED, SUITE_SIZE, MAX_SUITE_AGENTS).expect("suite generation")))
            .collect(),
    };
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let lift = |r: Result<Outcome>| r.unwrap_or_else(|e| outcome(false, format!("error: {e}")));

    results.push((1, "ratio bounds", lift(criterion_1(&suites))));
    let checks = CheckResults::run(&suites);
    let checks = match checks {
        Ok(c) => Some(c),
        Err(e) => {
            for (n, name) in [(2, "budget feasibility"), (3, "truthfulness"), (4, "lemma suite"), (5, "fractional greedy"), (6, "fractional hull optimum")] {
                results.push((n, name, outcome(false, format!("error: {e}"))));
            }
            None
        }
    };
    if let Some(c) = &checks {
        use SuiteFamily::*;
        results.push((2, "budget feasibility", c.criterion(&[("budget", &[Additive, Submodular, Hetero])])));
        results.push((3, "truthfulness", lift(criterion_3(c))));
        results.push((
            4,
            "lemma suite",
            c.criterion(&[
                ("lemma-average", &[Additive, Submodular]),
                ("greedy-payment-bound", &[Additive, Submodular]),
                ("hetero-payment-bound", &[Hetero]),
                ("opt-bound", &[Additive, Submodular]),
                ("knapsack-chain", &[Additive]),
            ]),
        ));
        results.push((5, "fractional greedy", c.criterion(&[("fractional-greedy", &[Submodular])])));
        results.push((6, "fractional hull optimum", criterion_6(c)));
    }
    results.push((7, "exact fixtures", lift(criterion_7())));
    results.push((8, "hard distribution", lift(criterion_8())));
    results.push((9, "payment formula vs bisection", lift(criterion_9())));
    results.push((10, "determinism", criterion_10()));

    results.sort_by_key(|r| r.0);
    let mut all = true;
    for (n, name, o) in &results {
        all &= o.pass;
        println!("{} criterion {n} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
