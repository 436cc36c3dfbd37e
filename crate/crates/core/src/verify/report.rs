//! Report rows produced by property checks and approximation runs.

use std::fmt;

use crate::error::Result;
use crate::mechanism::{eligible, MechanismKind};
use crate::num::Num;
use crate::real::Real;
use crate::registry::run;
use crate::suite::SuiteInstance;
use crate::verify::opt::brute_force_opt;

use super::checks::Check;

/// Outcome of one property check on one instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyReport {
    pub property: String,
    pub instance: String,
    pub pass: bool,
    pub witness: Option<String>,
}

impl PropertyReport {
    pub fn from_check(property: impl Into<String>, instance: impl Into<String>, check: Check) -> Result<Self> {
        let witness = check?;
        Ok(PropertyReport {
            property: property.into(),
            instance: instance.into(),
            pass: witness.is_none(),
            witness: witness.map(|w| w.0),
        })
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {} on {}", self.property, self.instance)?;
        if let Some(w) = &self.witness {
            write!(f, ": {w}")?;
        }
        Ok(())
    }
}

/// `opt / value`, infinite when a positive optimum meets a zero value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ratio {
    Finite(Num),
    Infinite,
}

impl Ratio {
    /// An optimum of zero gives ratio 1 whatever the mechanism procured.
    pub fn of(opt: &Num, value: &Num) -> Ratio {
        if opt.is_zero() {
            Ratio::Finite(Num::one())
        } else if value.is_zero() {
            Ratio::Infinite
        } else {
            Ratio::Finite(opt / value)
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Ratio::Finite(_))
    }

    /// Whether the ratio is at most `bound`.
    pub fn within(&self, bound: &Real) -> Result<bool> {
        match self {
            Ratio::Finite(r) => Real::from(r).le(bound),
            Ratio::Infinite => Ok(false),
        }
    }

    /// Decimal rendering with `digits` fractional digits, or `inf`.
    pub fn to_decimal(&self, digits: u32) -> Result<String> {
        match self {
            Ratio::Finite(r) => Real::from(r).to_decimal(digits),
            Ratio::Infinite => Ok("inf".to_string()),
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(r) => write!(f, "{r}"),
            Ratio::Infinite => f.write_str("inf"),
        }
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self, other) {
            (Ratio::Infinite, Ratio::Infinite) => Equal,
            (Ratio::Infinite, _) => Greater,
            (_, Ratio::Infinite) => Less,
            (Ratio::Finite(a), Ratio::Finite(b)) => a.cmp(b),
        }
    }
}

/// One mechanism on one instance against the optimum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioRow {
    pub instance: String,
    pub mechanism: String,
    pub value: Num,
    pub opt: Num,
    pub ratio: Ratio,
}

impl RatioRow {
    pub fn new(instance: impl Into<String>, mechanism: impl Into<String>, value: Num, opt: Num) -> Self {
        let ratio = Ratio::of(&opt, &value);
        RatioRow { instance: instance.into(), mechanism: mechanism.into(), value, opt, ratio }
    }
}

/// Largest ratio among `rows`, or `None` when empty.
pub fn worst_ratio(rows: &[RatioRow]) -> Option<&RatioRow> {
    rows.iter().max_by(|a, b| a.ratio.cmp(&b.ratio).then_with(|| b.instance.cmp(&a.instance)))
}

/// Value of `kind` at truthful bids against the optimum, per instance.
/// Randomized mechanisms contribute their exact expected value.
pub fn approximation_report(kind: MechanismKind, suite: &[SuiteInstance]) -> Result<Vec<RatioRow>> {
    suite
        .iter()
        .map(|s| {
            let m = s.instance.as_market();
            let bids = m.true_costs();
            let value = run(kind, &s.instance, &bids)?.expected_value();
            let opt = brute_force_opt(m, &bids, eligible(m, &bids), m.budget())?.value;
            Ok(RatioRow::new(s.id.clone(), kind.as_str(), value, opt))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::checks::Witness;

    #[test]
    fn ratio_conventions() {
        assert_eq!(Ratio::of(&Num::zero(), &Num::zero()), Ratio::Finite(Num::one()));
        assert_eq!(Ratio::of(&Num::one(), &Num::zero()), Ratio::Infinite);
        assert_eq!(Ratio::of(&Num::from_integer(9), &Num::from_integer(6)), Ratio::Finite(Num::ratio(3, 2)));
        assert!(Ratio::Infinite > Ratio::Finite(Num::from_integer(1000)));
        assert_eq!(Ratio::Infinite.to_decimal(30).unwrap(), "inf");
    }

    #[test]
    fn worst_ratio_picks_first_instance_on_ties() {
        let rows = vec![
            RatioRow::new("a", "m", Num::one(), Num::from_integer(2)),
            RatioRow::new("b", "m", Num::one(), Num::from_integer(2)),
            RatioRow::new("c", "m", Num::one(), Num::one()),
        ];
        assert_eq!(worst_ratio(&rows).unwrap().instance, "a");
    }

    #[test]
    fn report_display() {
        let r = PropertyReport::from_check("budget", "k1", Ok(Some(Witness("overpaid".into())))).unwrap();
        assert!(!r.pass);
        assert_eq!(r.to_string(), "FAIL budget on k1: overpaid");
    }
}
