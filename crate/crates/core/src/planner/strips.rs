//! Breadth-first search over a typed STRIPS domain and problem given as PDDL
//! text. Covers the subset the rescue domains use: positive conjunctive
//! preconditions and goals, add and delete effects, flat types.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StripsError {
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("missing section {0}")]
    Missing(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l) => Some(l),
            Sexp::Atom(_) => None,
        }
    }

    fn head(&self) -> Option<&str> {
        self.list()?.first()?.atom()
    }
}

fn parse_sexp(text: &str) -> Result<Sexp, StripsError> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut word = String::new();
    let flush = |word: &mut String, stack: &mut Vec<Vec<Sexp>>| {
        if !word.is_empty() {
            stack.last_mut().expect("stack").push(Sexp::Atom(word.to_lowercase()));
            word.clear();
        }
    };
    for line in text.lines() {
        let line = line.split(';').next().unwrap_or("");
        for c in line.chars() {
            match c {
                '(' => {
                    flush(&mut word, &mut stack);
                    stack.push(Vec::new());
                }
                ')' => {
                    flush(&mut word, &mut stack);
                    let done = stack.pop().ok_or(StripsError::Unbalanced)?;
                    stack.last_mut().ok_or(StripsError::Unbalanced)?.push(Sexp::List(done));
                }
                c if c.is_whitespace() => flush(&mut word, &mut stack),
                c => word.push(c),
            }
        }
        flush(&mut word, &mut stack);
    }
    if stack.len() != 1 {
        return Err(StripsError::Unbalanced);
    }
    let mut top = stack.pop().expect("root");
    if top.len() != 1 {
        return Err(StripsError::Unsupported("expected one top-level form".into()));
    }
    Ok(top.remove(0))
}

/// `?a ?b - t ?c - u` as `(name, type)` pairs; untyped names get `object`.
fn typed_list(items: &[Sexp]) -> Result<Vec<(String, String)>, StripsError> {
    let mut out = Vec::new();
    let mut pending = Vec::new();
    let mut iter = items.iter();
    while let Some(item) = iter.next() {
        let a = item
            .atom()
            .ok_or_else(|| StripsError::Unsupported("nested typed list".into()))?;
        if a == "-" {
            let ty = iter
                .next()
                .and_then(Sexp::atom)
                .ok_or_else(|| StripsError::Unsupported("dangling type marker".into()))?;
            out.extend(pending.drain(..).map(|n: String| (n, ty.to_string())));
        } else {
            pending.push(a.to_string());
        }
    }
    out.extend(pending.into_iter().map(|n| (n, "object".to_string())));
    Ok(out)
}

type Fact = Vec<String>;

#[derive(Debug, Clone, Default)]
struct Effects {
    add: Vec<Fact>,
    del: Vec<Fact>,
}

#[derive(Debug, Clone)]
struct Schema {
    name: String,
    params: Vec<(String, String)>,
    pre: Vec<Fact>,
    eff: Effects,
}

fn fact(s: &Sexp) -> Result<Fact, StripsError> {
    let l = s
        .list()
        .ok_or_else(|| StripsError::Unsupported("expected an atom formula".into()))?;
    l.iter()
        .map(|x| x.atom().map(str::to_string))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| StripsError::Unsupported("nested formula".into()))
}

fn conjunction(s: &Sexp) -> Result<Vec<Fact>, StripsError> {
    match s.head() {
        Some("and") => s.list().expect("list")[1..].iter().map(fact).collect(),
        Some("not" | "or" | "imply" | "forall" | "exists") => Err(StripsError::Unsupported(s.head().unwrap().into())),
        _ if s.list().is_some_and(|l| l.is_empty()) => Ok(Vec::new()),
        _ => Ok(vec![fact(s)?]),
    }
}

fn effects(s: &Sexp) -> Result<Effects, StripsError> {
    let items: Vec<&Sexp> = match s.head() {
        Some("and") => s.list().expect("list")[1..].iter().collect(),
        _ => vec![s],
    };
    let mut e = Effects::default();
    for item in items {
        if item.head() == Some("not") {
            let inner = item
                .list()
                .expect("list")
                .get(1)
                .ok_or(StripsError::Missing("negated fact"))?;
            e.del.push(fact(inner)?);
        } else {
            e.add.push(fact(item)?);
        }
    }
    Ok(e)
}

fn sections<'a>(root: &'a Sexp, key: &str) -> Vec<&'a [Sexp]> {
    root.list()
        .unwrap_or(&[])
        .iter()
        .filter(|s| s.head() == Some(key))
        .filter_map(|s| s.list())
        .map(|l| &l[1..])
        .collect()
}

fn parse_domain(text: &str) -> Result<Vec<Schema>, StripsError> {
    let root = parse_sexp(text)?;
    let mut schemas = Vec::new();
    for body in sections(&root, ":action") {
        let name = body
            .first()
            .and_then(Sexp::atom)
            .ok_or(StripsError::Missing("action name"))?
            .to_string();
        let mut params = Vec::new();
        let mut pre = Vec::new();
        let mut eff = Effects::default();
        let mut i = 1;
        while i + 1 < body.len() {
            let key = body[i].atom().unwrap_or("");
            let value = &body[i + 1];
            match key {
                ":parameters" => params = typed_list(value.list().unwrap_or(&[]))?,
                ":precondition" => pre = conjunction(value)?,
                ":effect" => eff = effects(value)?,
                other => return Err(StripsError::Unsupported(other.to_string())),
            }
            i += 2;
        }
        schemas.push(Schema { name, params, pre, eff });
    }
    Ok(schemas)
}

struct ProblemSpec {
    objects: Vec<(String, String)>,
    init: BTreeSet<Fact>,
    goal: Vec<Fact>,
}

fn parse_problem(text: &str) -> Result<ProblemSpec, StripsError> {
    let root = parse_sexp(text)?;
    let objects = sections(&root, ":objects")
        .first()
        .map(|o| typed_list(o))
        .transpose()?
        .unwrap_or_default();
    let init = sections(&root, ":init")
        .first()
        .ok_or(StripsError::Missing(":init"))?
        .iter()
        .map(fact)
        .collect::<Result<_, _>>()?;
    let goal = sections(&root, ":goal")
        .first()
        .and_then(|g| g.first())
        .map(conjunction)
        .transpose()?
        .ok_or(StripsError::Missing(":goal"))?;
    Ok(ProblemSpec { objects, init, goal })
}

type State = BTreeSet<Fact>;

fn bind(f: &Fact, env: &BTreeMap<&str, &str>) -> Fact {
    f.iter()
        .map(|t| env.get(t.as_str()).map_or_else(|| t.clone(), |v| v.to_string()))
        .collect()
}

/// Parameter bindings satisfying all preconditions in `state`.
fn applicable<'a>(
    schema: &'a Schema,
    state: &'a State,
    types: &'a BTreeMap<String, String>,
) -> Vec<BTreeMap<&'a str, &'a str>> {
    fn extend<'a>(
        pre: &'a [Fact],
        state: &'a State,
        env: BTreeMap<&'a str, &'a str>,
        out: &mut Vec<BTreeMap<&'a str, &'a str>>,
    ) {
        let Some((first, rest)) = pre.split_first() else {
            out.push(env);
            return;
        };
        for f in state.iter().filter(|f| f.len() == first.len() && f[0] == first[0]) {
            let mut e = env.clone();
            let ok = first.iter().zip(f.iter()).skip(1).all(|(p, v)| {
                if p.starts_with('?') {
                    match e.get(p.as_str()) {
                        Some(bound) => *bound == v.as_str(),
                        None => {
                            e.insert(p.as_str(), v.as_str());
                            true
                        }
                    }
                } else {
                    p == v
                }
            });
            if ok {
                extend(rest, state, e, out);
            }
        }
    }
    let mut out = Vec::new();
    extend(&schema.pre, state, BTreeMap::new(), &mut out);
    out.retain(|env| {
        schema.params.iter().all(|(p, ty)| {
            env.get(p.as_str())
                .is_some_and(|v| ty == "object" || types.get(*v).is_some_and(|t| t == ty))
        })
    });
    out
}

/// A shortest plan as grounded action strings, or `None` if the goal is unreachable within `limit` expanded states.
pub fn solve(domain: &str, problem: &str, limit: usize) -> Result<Option<Vec<String>>, StripsError> {
    let schemas = parse_domain(domain)?;
    let p = parse_problem(problem)?;
    let types: BTreeMap<String, String> = p.objects.into_iter().collect();
    let satisfied = |s: &State| p.goal.iter().all(|g| s.contains(g));

    let mut seen: HashSet<State> = HashSet::new();
    let mut queue: VecDeque<(State, Vec<String>)> = VecDeque::new();
    seen.insert(p.init.clone());
    queue.push_back((p.init, Vec::new()));
    while let Some((state, steps)) = queue.pop_front() {
        if satisfied(&state) {
            return Ok(Some(steps));
        }
        if seen.len() > limit {
            return Ok(None);
        }
        for schema in &schemas {
            for env in applicable(schema, &state, &types) {
                let mut next = state.clone();
                for d in &schema.eff.del {
                    next.remove(&bind(d, &env));
                }
                for a in &schema.eff.add {
                    next.insert(bind(a, &env));
                }
                if seen.insert(next.clone()) {
                    let args: Vec<&str> = schema.params.iter().map(|(p, _)| env[p.as_str()]).collect();
                    let mut s = steps.clone();
                    s.push(format!("({} {})", schema.name, args.join(" ")));
                    queue.push_back((next, s));
                }
            }
        }
    }
    Ok(None)
}
