use std::fmt::Write as _;

use budgetmech::registry::RunResult;
use budgetmech::{Num, Outcome};

pub fn outcome(out: &mut String, o: &Outcome) {
    writeln!(out, "winners: {}", o.winners).unwrap();
    writeln!(out, "value: {}", o.value).unwrap();
    for (i, p) in &o.payments {
        writeln!(out, "payment {i}: {p}").unwrap();
    }
    writeln!(out, "total payment: {}", o.total_payment).unwrap();
}

pub fn result(mechanism: &str, r: &RunResult) -> String {
    let mut out = format!("mechanism: {mechanism}\n");
    match r {
        RunResult::Deterministic(o) => outcome(&mut out, o),
        RunResult::Randomized(d) => {
            for (k, (p, o)) in d.branches.iter().enumerate() {
                writeln!(out, "branch {k} with probability {p}").unwrap();
                outcome(&mut out, o);
            }
            writeln!(out, "expected value: {}", d.expected_value()).unwrap();
            writeln!(out, "expected payment: {}", d.expected_payment()).unwrap();
        }
    }
    out
}

pub fn sampled(mechanism: &str, index: usize, p: &Num, o: &Outcome) -> String {
    let mut out = format!("mechanism: {mechanism}\nsampled branch {index} with probability {p}\n");
    outcome(&mut out, o);
    out
}
