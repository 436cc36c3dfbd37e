use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use budgetmech::adversarial::{expected_ratio_of_rule, expected_ratio_under_distribution, lb3_probe, yao_bound, yao_distribution};
use budgetmech::io::csv::RATIO_DIGITS;
use budgetmech::io::{parse_instance, write_report, ReportRow};
use budgetmech::registry::{run as run_mechanism, RunResult};
use budgetmech::suite::{generate, SuiteFamily, SuiteInstance, MAX_SUITE_AGENTS};
use budgetmech::verify::checks::all_checks;
use budgetmech::verify::report::{approximation_report, Ratio};
use budgetmech::{AnyInstance, Error, Market, MechanismKind, Num};

use crate::{render, Status};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(PathBuf, std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::NonMonotone(_) | Error::ContractViolation(_)) => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn load(path: &Path) -> Result<AnyInstance> {
    parse_instance(&read(path)?).map_err(|e| CliError::Io(path.to_path_buf(), std::io::Error::other(e.to_string())))
}

fn status(all_pass: bool) -> Status {
    if all_pass {
        Status::Pass
    } else {
        Status::Violation
    }
}

/// Uniform draw from `[0, 1)` with 63 random bits.
fn unit_draw(rng: &mut ChaCha8Rng) -> Num {
    Num::from_integer((rng.next_u64() >> 1) as i64) * Num::pow2_neg(63)
}

pub fn run(kind: MechanismKind, path: &Path, sample_seed: Option<u64>) -> Result<Status> {
    let inst = load(path)?;
    let bids = inst.as_market().true_costs();
    let result = run_mechanism(kind, &inst, &bids)?;
    match (sample_seed, &result) {
        (Some(seed), RunResult::Randomized(d)) => {
            let u = unit_draw(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut acc = Num::zero();
            let last = d.branches.len() - 1;
            for (k, (p, o)) in d.branches.iter().enumerate() {
                acc += p;
                if u < acc || k == last {
                    print!("{}", render::sampled(kind.as_str(), k, p, o));
                    break;
                }
            }
        }
        _ => print!("{}", render::result(kind.as_str(), &result)),
    }
    Ok(Status::Pass)
}

fn instance_paths(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = fs::read_dir(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    let mut out = Vec::new();
    for e in entries {
        let p = e.map_err(|e| CliError::Io(path.to_path_buf(), e))?.path();
        if p.extension().is_some_and(|x| x == "toml") {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn print_rows(rows: &[ReportRow], as_json: bool) -> Result<()> {
    if as_json {
        let items: Vec<serde_json::Value> = rows
            .iter()
            .map(|r| {
                let ratio = r.ratio.as_ref().map(|x| x.to_decimal(RATIO_DIGITS)).transpose()?;
                Ok(json!({
                    "instance": r.instance,
                    "mechanism": r.mechanism,
                    "value": r.value.as_ref().map(ToString::to_string),
                    "opt": r.opt.as_ref().map(ToString::to_string),
                    "ratio": ratio,
                    "pass": r.pass,
                    "witness": r.witness,
                }))
            })
            .collect::<std::result::Result<_, Error>>()?;
        println!("{}", serde_json::to_string_pretty(&items).expect("json values serialize"));
    } else {
        print!("{}", write_report(rows)?);
    }
    Ok(())
}

pub fn verify(path: &Path, seed: u64, as_json: bool) -> Result<Status> {
    let mut rows = Vec::new();
    for p in instance_paths(path)? {
        let inst = load(&p)?;
        let id = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
        for r in all_checks(&id, &inst, seed)? {
            rows.push(ReportRow::from(&r));
        }
    }
    let ok = rows.iter().all(|r| r.pass == Some(true));
    print_rows(&rows, as_json)?;
    Ok(status(ok))
}

/// Ratio rows for every mechanism applicable to `family`, instance-major,
/// with `pass` set where the mechanism has a proven bound.
pub fn bench_rows(suite: &[SuiteInstance], family: SuiteFamily) -> Result<Vec<ReportRow>> {
    let kinds = MechanismKind::for_suite(family);
    let mut per_kind = Vec::new();
    for &k in &kinds {
        per_kind.push(approximation_report(k, suite)?);
    }
    let mut rows = Vec::new();
    for i in 0..suite.len() {
        for (k, table) in kinds.iter().zip(&per_kind) {
            let r = &table[i];
            let mut row = ReportRow::from(r);
            if let Some(bound) = k.ratio_bound() {
                row.pass = Some(r.ratio.within(&bound)?);
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn bench(seed: u64, count: usize, family: SuiteFamily, as_json: bool) -> Result<Status> {
    let suite = generate(family, seed, count, MAX_SUITE_AGENTS)?;
    let rows = bench_rows(&suite, family)?;
    let ok = rows.iter().all(|r| r.pass != Some(false));
    print_rows(&rows, as_json)?;
    Ok(status(ok))
}

fn ratio_text(r: &Ratio) -> Result<String> {
    Ok(match r {
        Ratio::Finite(x) => format!("{x} ({})", r.to_decimal(RATIO_DIGITS)?),
        Ratio::Infinite => "inf".into(),
    })
}

pub fn probe_lb3(grid: u32, kind: MechanismKind) -> Result<Status> {
    let rule = kind.rule().and_then(|r| r.plain()).ok_or_else(|| Error::Unsupported {
        mechanism: kind.as_str().into(),
        reason: "the three-item probe needs a deterministic mechanism for additive instances".into(),
    })?;
    let r = lb3_probe(rule, grid)?;
    println!("mechanism: {}", r.mechanism);
    println!("grid points: {}", r.points);
    println!("max ratio: {}", ratio_text(&r.max_ratio)?);
    let costs: Vec<String> = r.argmax.iter().map(ToString::to_string).collect();
    println!("at costs: {}", costs.join(" "));
    println!("predicate hits: {}", r.predicate_hits.len());
    for (c2, c3, p1) in &r.predicate_hits {
        println!("  c2={c2} c3={c3} p1={p1}");
    }
    Ok(Status::Pass)
}

pub fn probe_yao(n: u32, eps: &Num, budget: &Num, kind: MechanismKind) -> Result<Status> {
    let family = yao_distribution(n, eps, budget)?;
    let expected = match kind.rule().and_then(|r| r.plain()) {
        Some(rule) => expected_ratio_of_rule(rule, &family)?,
        None => expected_ratio_under_distribution(&family, |inst| {
            let any = AnyInstance::Plain(inst.clone());
            Ok(run_mechanism(kind, &any, &inst.true_costs())?.expected_value())
        })?,
    };
    let bound = yao_bound(n, eps);
    let ratio = expected.as_ratio();
    println!("mechanism: {kind}");
    println!("family: {}", family.description);
    println!("members: {}", family.members.len());
    println!("expected ratio: {}", ratio_text(&ratio)?);
    println!("lower bound: {bound}");
    // Randomized mechanisms are not bound by the deterministic limit.
    let ok = kind.is_randomized() || ratio >= Ratio::Finite(bound);
    println!("consistent: {}", if ok { "yes" } else { "no" });
    Ok(status(ok))
}
