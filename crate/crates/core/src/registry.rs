//! Runs any mechanism by name on either kind of instance.

use crate::error::{Error, Result};
use crate::hetero::{GreH, Mhk, Rmhk};
use crate::knapsack::{GreKnapsack, MechKnapsack, RmKnapsack};
use crate::mechanism::{AllocationRule, Family, MaxSingleton, Mechanism, MechanismKind, RandomizedMechanism};
use crate::model::{AgentSet, AnyInstance, BidProfile, Instance, Outcome, RandomizedOutcome};
use crate::num::Num;
use crate::real::{consts, Real};
use crate::submodular::{DetMechSm, GreedySm, RandomMechSm};

/// Result of running a mechanism by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunResult {
    Deterministic(Outcome),
    Randomized(RandomizedOutcome),
}

impl RunResult {
    pub fn expected_value(&self) -> Num {
        match self {
            RunResult::Deterministic(o) => o.value.clone(),
            RunResult::Randomized(r) => r.expected_value(),
        }
    }

    /// Every outcome with its probability; a deterministic result has one.
    pub fn branches(&self) -> Vec<(Num, &Outcome)> {
        match self {
            RunResult::Deterministic(o) => vec![(Num::one(), o)],
            RunResult::Randomized(r) => r.branches.iter().map(|(p, o)| (p.clone(), o)).collect(),
        }
    }
}

/// The deterministic allocation rules checked for monotonicity. Each
/// randomized mechanism mixes two of these.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    MaxSingleton,
    GreedySm,
    DetSm,
    GreK,
    MechK,
    GreH,
    Mhk,
}

impl RuleKind {
    pub const ALL: [RuleKind; 7] = [
        RuleKind::MaxSingleton,
        RuleKind::GreedySm,
        RuleKind::DetSm,
        RuleKind::GreK,
        RuleKind::MechK,
        RuleKind::GreH,
        RuleKind::Mhk,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleKind::MaxSingleton => "max-singleton",
            RuleKind::GreedySm => "greedy-sm",
            RuleKind::DetSm => "det-sm",
            RuleKind::GreK => "gre-k",
            RuleKind::MechK => "mech-k",
            RuleKind::GreH => "gre-h",
            RuleKind::Mhk => "mhk",
        }
    }

    /// Whether the rule accepts `inst`.
    pub fn applies_to(self, inst: &AnyInstance) -> bool {
        match (self, inst) {
            (RuleKind::MaxSingleton, _) => true,
            (RuleKind::GreedySm | RuleKind::DetSm, AnyInstance::Plain(_)) => true,
            (RuleKind::GreK | RuleKind::MechK, AnyInstance::Plain(i)) => i.additive_values().is_some(),
            (RuleKind::GreH | RuleKind::Mhk, AnyInstance::Hetero(_)) => true,
            _ => false,
        }
    }

    /// The rule as a trait object over a plain instance.
    pub fn plain(self) -> Option<&'static dyn AllocationRule<Instance>> {
        static DET: DetMechSm = DetMechSm { oracle: crate::verify::opt::BruteForce };
        Some(match self {
            RuleKind::MaxSingleton => &MaxSingleton,
            RuleKind::GreedySm => &GreedySm,
            RuleKind::DetSm => &DET,
            RuleKind::GreK => &GreKnapsack,
            RuleKind::MechK => &MechKnapsack,
            _ => return None,
        })
    }

    /// The rule as a trait object over a heterogeneous instance.
    pub fn hetero(self) -> Option<&'static dyn AllocationRule<crate::model::HeteroInstance>> {
        Some(match self {
            RuleKind::MaxSingleton => &MaxSingleton,
            RuleKind::GreH => &GreH,
            RuleKind::Mhk => &Mhk,
            _ => return None,
        })
    }
}

impl std::fmt::Display for RuleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl MechanismKind {
    /// Proven worst-case `opt/value` (expected value for randomized
    /// mechanisms), if the mechanism has one.
    pub fn ratio_bound(self) -> Option<Real> {
        use MechanismKind as K;
        match self {
            K::RandomSm => Some(consts::random_sm_ratio()),
            K::DetSm => Some(consts::det_sm_ratio()),
            K::MechK | K::Mhk => Some(Real::from(consts::two_plus_sqrt2())),
            K::RmK | K::Rmhk => Some(Real::from(3)),
            K::GreedySm | K::GreK | K::GreH => None,
        }
    }

    /// Mechanisms that accept every instance of `family`.
    pub fn for_suite(family: crate::suite::SuiteFamily) -> Vec<MechanismKind> {
        use crate::suite::SuiteFamily as F;
        MechanismKind::ALL
            .into_iter()
            .filter(|k| match family {
                F::Additive => k.family() != Family::Hetero,
                F::Submodular => k.family() == Family::Submodular,
                F::Hetero => k.family() == Family::Hetero,
            })
            .collect()
    }

    /// The deterministic rule this mechanism allocates by, if any.
    pub fn rule(self) -> Option<RuleKind> {
        match self {
            MechanismKind::GreedySm => Some(RuleKind::GreedySm),
            MechanismKind::DetSm => Some(RuleKind::DetSm),
            MechanismKind::GreK => Some(RuleKind::GreK),
            MechanismKind::MechK => Some(RuleKind::MechK),
            MechanismKind::GreH => Some(RuleKind::GreH),
            MechanismKind::Mhk => Some(RuleKind::Mhk),
            _ => None,
        }
    }
}

fn unsupported(kind: MechanismKind, reason: &str) -> Error {
    Error::Unsupported { mechanism: kind.as_str().to_string(), reason: reason.to_string() }
}

/// Errors when `kind` cannot run on `inst`.
pub fn check_applicable(kind: MechanismKind, inst: &AnyInstance) -> Result<()> {
    match (kind.family(), inst) {
        (Family::Submodular, AnyInstance::Plain(_)) => Ok(()),
        (Family::Knapsack, AnyInstance::Plain(i)) if i.additive_values().is_some() => Ok(()),
        (Family::Knapsack, AnyInstance::Plain(_)) => Err(unsupported(kind, "needs an additive valuation")),
        (Family::Hetero, AnyInstance::Hetero(_)) => Ok(()),
        (Family::Hetero, _) => Err(unsupported(kind, "needs a typed (heterogeneous) instance")),
        (_, AnyInstance::Hetero(_)) => Err(unsupported(kind, "does not handle per-type constraints")),
    }
}

/// Runs `kind` on `inst` at `bids`.
pub fn run(kind: MechanismKind, inst: &AnyInstance, bids: &BidProfile) -> Result<RunResult> {
    check_applicable(kind, inst)?;
    use MechanismKind as K;
    Ok(match inst {
        AnyInstance::Plain(i) => match kind {
            K::GreedySm => RunResult::Deterministic(Mechanism::run(&GreedySm, i, bids)?),
            K::RandomSm => RunResult::Randomized(RandomizedMechanism::run(&RandomMechSm, i, bids)?),
            K::DetSm => RunResult::Deterministic(Mechanism::run(&DetMechSm::default(), i, bids)?),
            K::GreK => RunResult::Deterministic(Mechanism::run(&GreKnapsack, i, bids)?),
            K::MechK => RunResult::Deterministic(Mechanism::run(&MechKnapsack, i, bids)?),
            K::RmK => RunResult::Randomized(RandomizedMechanism::run(&RmKnapsack, i, bids)?),
            _ => unreachable!("checked above"),
        },
        AnyInstance::Hetero(h) => match kind {
            K::GreH => RunResult::Deterministic(Mechanism::run(&GreH, h, bids)?),
            K::Mhk => RunResult::Deterministic(Mechanism::run(&Mhk, h, bids)?),
            K::Rmhk => RunResult::Randomized(RandomizedMechanism::run(&Rmhk, h, bids)?),
            _ => unreachable!("checked above"),
        },
    })
}

/// Winner set of a deterministic rule.
pub fn allocate(rule: RuleKind, inst: &AnyInstance, bids: &BidProfile) -> Result<AgentSet> {
    let none = || Error::Unsupported { mechanism: rule.as_str().into(), reason: "not applicable to this instance".into() };
    if !rule.applies_to(inst) {
        return Err(none());
    }
    match inst {
        AnyInstance::Plain(i) => rule.plain().ok_or_else(none)?.allocate(i, bids),
        AnyInstance::Hetero(h) => rule.hetero().ok_or_else(none)?.allocate(h, bids),
    }
}
