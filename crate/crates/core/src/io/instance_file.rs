//! TOML instance files.
//!
//! ```toml
//! budget = "10"
//!
//! [valuation]
//! kind = "additive"
//!
//! [[agents]]
//! id = 0
//! cost = "2"
//! value = "6"
//! ```
//!
//! Numbers are strings (`"7/10"`, `"0.7"`, `"1+sqrt2"`) or integers; TOML
//! floats are rejected. Giving any agent a `type` makes the instance a
//! heterogeneous knapsack. Coverage valuations list weighted
//! `[[valuation.elements]]` and give each agent a `covers` list; explicit
//! valuations list `[[valuation.table]]` entries with `set` and `value`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use crate::error::{Error, Result};
use crate::model::{AgentSet, AnyInstance, Coverage, HeteroInstance, Instance, Valuation};
use crate::num::Num;

#[derive(Deserialize)]
#[serde(untagged)]
enum NumLit {
    Int(i64),
    Str(String),
    Float(f64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Label {
    Int(i64),
    Str(String),
}

impl Label {
    fn text(&self) -> String {
        match self {
            Label::Int(i) => i.to_string(),
            Label::Str(s) => s.clone(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    budget: Spanned<NumLit>,
    types: Option<Vec<Label>>,
    valuation: Option<Spanned<ValuationDoc>>,
    #[serde(default)]
    agents: Vec<Spanned<AgentDoc>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    id: Spanned<i64>,
    cost: Spanned<NumLit>,
    value: Option<Spanned<NumLit>>,
    #[serde(rename = "type")]
    ty: Option<Label>,
    covers: Option<Spanned<Vec<String>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValuationDoc {
    kind: Spanned<String>,
    elements: Option<Vec<ElementDoc>>,
    table: Option<Vec<EntryDoc>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementDoc {
    name: Spanned<String>,
    weight: Spanned<NumLit>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDoc {
    set: Spanned<Vec<i64>>,
    value: Spanned<NumLit>,
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].matches('\n').count() + 1
    }

    fn err(&self, span: Range<usize>, field: &str, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line(span), field: field.to_string(), message: message.into() }
    }

    fn num(&self, lit: &Spanned<NumLit>, field: &str) -> Result<Num> {
        match lit.get_ref() {
            NumLit::Int(i) => Ok(Num::from_integer(*i)),
            NumLit::Str(s) => s.parse().map_err(|_| self.err(lit.span(), field, format!("malformed number {s:?}"))),
            NumLit::Float(f) => Err(self.err(
                lit.span(),
                field,
                format!("float {f} is not exact; write it as a string such as \"{f}\" or a fraction \"p/q\""),
            )),
        }
    }
}

/// Parses an instance file.
pub fn parse_instance(text: &str) -> Result<AnyInstance> {
    let ctx = Ctx { text };
    let doc: Doc = toml::from_str(text).map_err(|e| {
        let span = e.span().unwrap_or(0..0);
        let msg = e.message().trim().to_string();
        let field = msg
            .split('`')
            .nth(1)
            .filter(|_| msg.contains("field"))
            .unwrap_or("document")
            .to_string();
        ctx.err(span, &field, msg)
    })?;

    let budget = ctx.num(&doc.budget, "budget")?;
    if !budget.is_positive() {
        return Err(ctx.err(doc.budget.span(), "budget", "budget must be positive"));
    }

    let n = doc.agents.len();
    let mut slots: Vec<Option<&AgentDoc>> = vec![None; n];
    for a in &doc.agents {
        let id = *a.get_ref().id.get_ref();
        let span = a.get_ref().id.span();
        if id < 0 || id as usize >= n {
            return Err(ctx.err(span, "id", format!("agent id {id} out of range; ids must be 0..{}", n.saturating_sub(1))));
        }
        if slots[id as usize].is_some() {
            return Err(ctx.err(span, "id", format!("duplicate agent id {id}")));
        }
        slots[id as usize] = Some(a.get_ref());
    }
    let agents: Vec<&AgentDoc> = slots.into_iter().map(|a| a.expect("ids are a permutation")).collect();

    let mut costs = Vec::with_capacity(n);
    for a in &agents {
        let c = ctx.num(&a.cost, "cost")?;
        if c.is_negative() {
            return Err(ctx.err(a.cost.span(), "cost", format!("negative cost {c} for agent {}", a.id.get_ref())));
        }
        costs.push(c);
    }

    let Some(val) = &doc.valuation else {
        return Err(Error::Parse { line: 1, field: "valuation".into(), message: "missing valuation".into() });
    };
    let v = val.get_ref();
    let kind = v.kind.get_ref().as_str();
    let kind_err = |msg: String| ctx.err(v.kind.span(), "kind", msg);
    if v.elements.is_some() && kind != "coverage" {
        return Err(kind_err(format!("`elements` only applies to coverage valuations, not {kind}")));
    }
    if v.table.is_some() && kind != "explicit" {
        return Err(kind_err(format!("`table` only applies to explicit valuations, not {kind}")));
    }
    for a in &agents {
        if a.value.is_some() && kind != "additive" {
            return Err(ctx.err(a.value.as_ref().unwrap().span(), "value", format!("agent values only apply to additive valuations, not {kind}")));
        }
        if a.covers.is_some() && kind != "coverage" {
            return Err(ctx.err(a.covers.as_ref().unwrap().span(), "covers", format!("`covers` only applies to coverage valuations, not {kind}")));
        }
    }

    let hetero = agents.iter().any(|a| a.ty.is_some());
    if hetero && kind != "additive" {
        return Err(kind_err("typed agents need an additive valuation".into()));
    }

    let values = |agents: &[&AgentDoc]| -> Result<Vec<Num>> {
        agents
            .iter()
            .map(|a| match &a.value {
                Some(v) => ctx.num(v, "value"),
                None => Err(ctx.err(a.id.span(), "value", format!("agent {} has no value", a.id.get_ref()))),
            })
            .collect()
    };

    if hetero {
        let mut labels: Vec<String> = doc.types.iter().flatten().map(Label::text).collect();
        let mut items = Vec::with_capacity(n);
        let vs = values(&agents)?;
        for ((a, c), v) in agents.iter().zip(costs).zip(vs) {
            let Some(ty) = &a.ty else {
                return Err(ctx.err(a.id.span(), "type", format!("agent {} has no type while others do", a.id.get_ref())));
            };
            let t = ty.text();
            let idx = match labels.iter().position(|l| *l == t) {
                Some(i) => i,
                None if doc.types.is_some() => {
                    return Err(ctx.err(a.id.span(), "type", format!("type {t:?} is not declared in `types`")));
                }
                None => {
                    labels.push(t);
                    labels.len() - 1
                }
            };
            items.push((c, v, idx));
        }
        return Ok(AnyInstance::Hetero(HeteroInstance::with_labels(budget, items, labels)?));
    }
    if doc.types.is_some() {
        return Err(Error::Parse { line: 1, field: "types".into(), message: "`types` given but no agent has a type".into() });
    }

    let valuation = match kind {
        "additive" => Valuation::Additive(values(&agents)?),
        "coverage" => {
            let mut elements = Vec::new();
            let mut index = BTreeMap::new();
            for e in v.elements.iter().flatten() {
                let name = e.name.get_ref().clone();
                if index.insert(name.clone(), elements.len()).is_some() {
                    return Err(ctx.err(e.name.span(), "name", format!("duplicate element {name:?}")));
                }
                let w = ctx.num(&e.weight, "weight")?;
                if w.is_negative() {
                    return Err(ctx.err(e.weight.span(), "weight", format!("negative weight for element {name:?}")));
                }
                elements.push((name, w));
            }
            let mut covers = Vec::with_capacity(n);
            for a in &agents {
                let mut c = Vec::new();
                if let Some(list) = &a.covers {
                    for name in list.get_ref() {
                        let &k = index
                            .get(name)
                            .ok_or_else(|| ctx.err(list.span(), "covers", format!("unknown element {name:?}")))?;
                        if !c.contains(&k) {
                            c.push(k);
                        }
                    }
                }
                covers.push(c);
            }
            Valuation::Coverage(Coverage { elements, covers })
        }
        "explicit" => {
            let mut entries = Vec::new();
            for e in v.table.iter().flatten() {
                let mut set = AgentSet::empty();
                for &i in e.set.get_ref() {
                    if i < 0 || i as usize >= n {
                        return Err(ctx.err(e.set.span(), "set", format!("agent {i} is not in the instance")));
                    }
                    set.insert(i as usize);
                }
                entries.push((set, ctx.num(&e.value, "value")?));
            }
            Valuation::explicit(n, entries).map_err(|e| ctx.err(v.kind.span(), "table", e.to_string()))?
        }
        other => return Err(kind_err(format!("unknown valuation kind {other:?}; expected additive, explicit or coverage"))),
    };
    Ok(AnyInstance::Plain(Instance::new(budget, costs, valuation)?))
}

fn quote(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn num(n: &Num) -> String {
    quote(&n.to_string())
}

/// Writes an instance in the format read by [`parse_instance`].
pub fn serialize_instance(inst: &AnyInstance) -> String {
    let mut out = String::new();
    let budget = inst.as_market().budget();
    writeln!(out, "budget = {}", num(budget)).unwrap();
    match inst {
        AnyInstance::Hetero(h) => {
            let labels: Vec<String> = h.type_labels().iter().map(|l| quote(l)).collect();
            writeln!(out, "types = [{}]", labels.join(", ")).unwrap();
            out.push_str("\n[valuation]\nkind = \"additive\"\n");
            for it in h.items() {
                writeln!(
                    out,
                    "\n[[agents]]\nid = {}\ncost = {}\nvalue = {}\ntype = {}",
                    it.id,
                    num(&it.cost),
                    num(&it.value),
                    quote(&h.type_labels()[it.ty])
                )
                .unwrap();
            }
        }
        AnyInstance::Plain(i) => {
            out.push_str("\n[valuation]\n");
            match i.valuation() {
                Valuation::Additive(_) => out.push_str("kind = \"additive\"\n"),
                Valuation::Coverage(c) => {
                    out.push_str("kind = \"coverage\"\n");
                    for (name, w) in &c.elements {
                        writeln!(out, "\n[[valuation.elements]]\nname = {}\nweight = {}", quote(name), num(w)).unwrap();
                    }
                }
                Valuation::Explicit { table, .. } => {
                    out.push_str("kind = \"explicit\"\n");
                    for (mask, v) in table.iter().enumerate().skip(1) {
                        let set: Vec<String> = AgentSet::from_bits(mask as u64).iter().map(|k| k.to_string()).collect();
                        writeln!(out, "\n[[valuation.table]]\nset = [{}]\nvalue = {}", set.join(", "), num(v)).unwrap();
                    }
                }
            }
            for a in i.agents() {
                writeln!(out, "\n[[agents]]\nid = {}\ncost = {}", a.id, num(&a.cost)).unwrap();
                match i.valuation() {
                    Valuation::Additive(v) => writeln!(out, "value = {}", num(&v[a.id])).unwrap(),
                    Valuation::Coverage(c) => {
                        let names: Vec<String> = c.covers[a.id].iter().map(|&k| quote(&c.elements[k].0)).collect();
                        writeln!(out, "covers = [{}]", names.join(", ")).unwrap();
                    }
                    Valuation::Explicit { .. } => {}
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Market;

    const K1: &str = r#"
budget = 10

[valuation]
kind = "additive"

[[agents]]
id = 0
cost = "2"
value = 6

[[agents]]
id = 1
cost = 3
value = "5"

[[agents]]
id = 2
cost = "5"
value = "4"
"#;

    fn plain(a: AnyInstance) -> Instance {
        match a {
            AnyInstance::Plain(i) => i,
            AnyInstance::Hetero(_) => panic!("expected a plain instance"),
        }
    }

    #[test]
    fn parses_k1() {
        let i = plain(parse_instance(K1).unwrap());
        assert_eq!(i.budget(), &Num::from_integer(10));
        assert_eq!(i.len(), 3);
        assert_eq!(i.additive_values().unwrap()[1], Num::from_integer(5));
    }

    #[test]
    fn decimal_strings_are_exact() {
        let text = K1.replace("cost = \"2\"", "cost = \"0.7\"");
        let i = plain(parse_instance(&text).unwrap());
        assert_eq!(i.true_costs().get(0), &Num::ratio(7, 10));
        let text = K1.replace("cost = \"2\"", "cost = \"7/10\"");
        assert_eq!(plain(parse_instance(&text).unwrap()).true_costs().get(0), &Num::ratio(7, 10));
    }

    #[test]
    fn floats_are_rejected_with_line() {
        let text = K1.replace("cost = \"2\"", "cost = 0.7");
        match parse_instance(&text) {
            Err(Error::Parse { line, field, .. }) => {
                assert_eq!(line, 9);
                assert_eq!(field, "cost");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids() {
        let text = K1.replace("id = 2", "id = 1");
        let e = parse_instance(&text).unwrap_err();
        assert!(e.to_string().contains("duplicate agent id"), "{e}");
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(parse_instance(&K1.replace("cost = \"5\"", "cost = \"-5\"")).is_err());
        assert!(parse_instance(&K1.replace("cost = \"5\"", "cost = \"5x\"")).is_err());
        assert!(parse_instance(&K1.replace("[valuation]\nkind = \"additive\"", "")).unwrap_err().to_string().contains("missing valuation"));
        let unknown = parse_instance(&K1.replace("value = 6", "value = 6\ncolour = \"red\""));
        assert!(matches!(unknown, Err(Error::Parse { .. })));
        assert!(parse_instance(&K1.replace("kind = \"additive\"", "kind = \"xor\"")).is_err());
    }

    #[test]
    fn hetero_and_roundtrip() {
        let text = r#"
budget = "6"

[valuation]
kind = "additive"

[[agents]]
id = 0
cost = 1
value = 2
type = "a"

[[agents]]
id = 1
cost = "3"
value = "5"
type = "a"

[[agents]]
id = 2
cost = "2"
value = "3"
type = "b"
"#;
        let h = parse_instance(text).unwrap();
        let AnyInstance::Hetero(hh) = &h else { panic!() };
        assert_eq!(hh.type_labels(), &["a".to_string(), "b".to_string()]);
        assert_eq!(parse_instance(&serialize_instance(&h)).unwrap(), h);
    }

    #[test]
    fn coverage_and_explicit_roundtrip() {
        let cov = Instance::new(
            Num::from_integer(3),
            vec![Num::one(), Num::ratio(1, 2)],
            Valuation::Coverage(Coverage {
                elements: vec![("x".into(), Num::one()), ("y \"q\"".into(), Num::sqrt2())],
                covers: vec![vec![0, 1], vec![1]],
            }),
        )
        .unwrap();
        let a = AnyInstance::Plain(cov);
        assert_eq!(parse_instance(&serialize_instance(&a)).unwrap(), a);

        let ex = Valuation::explicit(
            2,
            vec![(AgentSet::singleton(0), Num::one()), (AgentSet::singleton(1), Num::one()), (AgentSet::full(2), Num::ratio(3, 2))],
        )
        .unwrap();
        let b = AnyInstance::Plain(Instance::new(Num::one(), vec![Num::one(), Num::one()], ex).unwrap());
        assert_eq!(parse_instance(&serialize_instance(&b)).unwrap(), b);
    }
}
