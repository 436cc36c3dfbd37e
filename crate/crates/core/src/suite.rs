//! Seeded random instance suites.
//!
//! Instance `k` of a suite is drawn from ChaCha8 seeded with the suite seed
//! on stream `k`, so any single instance can be regenerated in isolation.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{AgentSet, AnyInstance, Coverage, HeteroInstance, Instance, Valuation};
use crate::num::Num;

/// Largest instance produced by the generators.
pub const MAX_SUITE_AGENTS: usize = 10;
/// Largest type count of heterogeneous instances.
pub const MAX_SUITE_TYPES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SuiteFamily {
    Additive,
    Submodular,
    Hetero,
}

impl SuiteFamily {
    pub const ALL: [SuiteFamily; 3] = [SuiteFamily::Additive, SuiteFamily::Submodular, SuiteFamily::Hetero];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteFamily::Additive => "additive",
            SuiteFamily::Submodular => "submodular",
            SuiteFamily::Hetero => "hetero",
        }
    }
}

impl fmt::Display for SuiteFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown family {s:?}; expected additive, submodular or hetero")))
    }
}

/// A generated instance with a stable id.
#[derive(Clone, Debug)]
pub struct SuiteInstance {
    pub id: String,
    pub instance: AnyInstance,
}

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Multiple of 1/8 in `[0, 5]`, zero with probability 1/40.
fn cost(rng: &mut ChaCha8Rng) -> Num {
    if rng.gen_ratio(1, 40) {
        Num::zero()
    } else {
        Num::ratio(rng.gen_range(1..=40), 8)
    }
}

/// Integer value in `[1, 20]`, zero with probability 1/20.
fn value(rng: &mut ChaCha8Rng) -> Num {
    if rng.gen_ratio(1, 20) {
        Num::zero()
    } else {
        Num::from_integer(rng.gen_range(1..=20))
    }
}

fn budget(rng: &mut ChaCha8Rng) -> Num {
    Num::ratio(rng.gen_range(4..=40), 4)
}

fn size(rng: &mut ChaCha8Rng, max_n: usize) -> usize {
    rng.gen_range(1..=max_n.clamp(1, MAX_SUITE_AGENTS))
}

pub fn random_additive(rng: &mut ChaCha8Rng, max_n: usize) -> Result<Instance> {
    let n = size(rng, max_n);
    let b = budget(rng);
    let values = (0..n).map(|_| value(rng)).collect();
    let costs = (0..n).map(|_| cost(rng)).collect();
    Instance::additive(b, values, costs)
}

/// Additive instance with positive costs and pairwise distinct `v_i/c_i`.
pub fn random_distinct_ratio_additive(rng: &mut ChaCha8Rng, max_n: usize) -> Result<Instance> {
    loop {
        let n = size(rng, max_n);
        let b = budget(rng);
        let values: Vec<Num> = (0..n).map(|_| Num::from_integer(rng.gen_range(1..=20))).collect();
        let costs: Vec<Num> = (0..n).map(|_| Num::ratio(rng.gen_range(1..=40), 8)).collect();
        let mut ratios: Vec<Num> = values.iter().zip(&costs).map(|(v, c)| v / c).collect();
        ratios.sort();
        if ratios.windows(2).all(|w| w[0] != w[1]) {
            return Instance::additive(b, values, costs);
        }
    }
}

/// Weighted coverage over up to 8 elements.
fn random_coverage(rng: &mut ChaCha8Rng, n: usize) -> Valuation {
    let m = rng.gen_range(2..=8);
    let elements = (0..m).map(|k| (format!("e{k}"), Num::from_integer(rng.gen_range(1..=10)))).collect();
    let covers = (0..n)
        .map(|_| (0..m).filter(|_| rng.gen_ratio(1, 3)).collect())
        .collect();
    Valuation::Coverage(Coverage { elements, covers })
}

/// `v(S) = min(cap, Σ_{i∈S} w_i)`, tabulated explicitly.
fn random_budget_additive(rng: &mut ChaCha8Rng, n: usize) -> Result<Valuation> {
    let weights: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=12)).collect();
    let total: i64 = weights.iter().sum();
    let cap = rng.gen_range(1..=total.max(1));
    let entries = (0..1u64 << n).map(|bits| {
        let s = AgentSet::from_bits(bits);
        let sum: i64 = s.iter().map(|i| weights[i]).sum();
        (s, Num::from_integer(sum.min(cap)))
    });
    Valuation::explicit(n, entries)
}

/// Coverage with probability 2/3, budget-additive otherwise.
pub fn random_submodular(rng: &mut ChaCha8Rng, max_n: usize) -> Result<Instance> {
    let n = size(rng, max_n);
    let b = budget(rng);
    let costs = (0..n).map(|_| cost(rng)).collect();
    let valuation = if rng.gen_ratio(2, 3) { random_coverage(rng, n) } else { random_budget_additive(rng, n)? };
    Instance::new(b, costs, valuation)
}

pub fn random_hetero(rng: &mut ChaCha8Rng, max_n: usize, max_types: usize) -> Result<HeteroInstance> {
    let n = size(rng, max_n);
    let m = rng.gen_range(1..=max_types.clamp(1, MAX_SUITE_TYPES).min(n));
    let b = budget(rng);
    let items = (0..n)
        .map(|i| {
            // Every type gets at least one item.
            let ty = if i < m { i } else { rng.gen_range(0..m) };
            (cost(rng), value(rng), ty)
        })
        .collect();
    HeteroInstance::new(b, items)
}

/// Instance `index` of the suite `(family, seed)`.
pub fn suite_instance(family: SuiteFamily, seed: u64, index: u64, max_n: usize) -> Result<SuiteInstance> {
    let mut rng = rng_for(seed, index);
    let instance = match family {
        SuiteFamily::Additive => AnyInstance::Plain(random_additive(&mut rng, max_n)?),
        SuiteFamily::Submodular => AnyInstance::Plain(random_submodular(&mut rng, max_n)?),
        SuiteFamily::Hetero => AnyInstance::Hetero(random_hetero(&mut rng, max_n, MAX_SUITE_TYPES)?),
    };
    Ok(SuiteInstance { id: format!("{family}-{seed}-{index}"), instance })
}

/// `count` instances of one family.
pub fn generate(family: SuiteFamily, seed: u64, count: usize, max_n: usize) -> Result<Vec<SuiteInstance>> {
    (0..count as u64).map(|k| suite_instance(family, seed, k, max_n)).collect()
}

/// `count` additive instances with distinct value/cost ratios.
pub fn generate_distinct_ratio(seed: u64, count: usize, max_n: usize) -> Result<Vec<SuiteInstance>> {
    (0..count as u64)
        .map(|k| {
            let inst = random_distinct_ratio_additive(&mut rng_for(seed, k), max_n)?;
            Ok(SuiteInstance { id: format!("distinct-{seed}-{k}"), instance: AnyInstance::Plain(inst) })
        })
        .collect()
}
