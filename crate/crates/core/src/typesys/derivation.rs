use super::{parse_mtype, parse_type, pattern_type_unchecked, MType, TypeEnv, TypeError, TypeExpr};
use crate::syntax::{
    parse_pattern, parse_term, print_pattern, print_term_raw, Name, Pattern, Position, Step, Term,
};
use serde_json::{json, Map, Value};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Rule {
    Ax,
    Many,
    Abs,
    App,
    Pair,
    Sub,
    VarPat,
    PairPat,
}

impl Rule {
    pub const ALL: [Rule; 8] = [
        Rule::Ax,
        Rule::Many,
        Rule::Abs,
        Rule::App,
        Rule::Pair,
        Rule::Sub,
        Rule::VarPat,
        Rule::PairPat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Ax => "ax",
            Rule::Many => "many",
            Rule::Abs => "abs",
            Rule::App => "app",
            Rule::Pair => "pair",
            Rule::Sub => "sub",
            Rule::VarPat => "varpat",
            Rule::PairPat => "pairpat",
        }
    }

    pub fn from_name(s: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.name() == s)
    }

    /// Rules concluding `Γ ⊩ p : A`.
    pub fn is_pattern_rule(self) -> bool {
        matches!(self, Rule::VarPat | Rule::PairPat)
    }

    /// Rules concluding `Γ ⊢ t : σ`.
    pub fn is_type_rule(self) -> bool {
        !self.is_pattern_rule() && self != Rule::Many
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Subject {
    Term(Term),
    Pattern(Pattern),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Object {
    Type(TypeExpr),
    Bag(MType),
}

/// A typing derivation. Premise layout by rule:
/// `abs: [body, pattern]`, `app: [fun, many]`, `pair: [many, many]`,
/// `sub: [body, pattern, many]`, `many: [one per bag member]`, `pairpat: [left, right]`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Derivation {
    pub rule: Rule,
    pub env: TypeEnv,
    pub subject: Subject,
    pub object: Object,
    pub premises: Vec<Derivation>,
}

/// The conclusion of a derivation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Judgment {
    pub env: TypeEnv,
    pub subject: Subject,
    pub object: Object,
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.subject, &self.object) {
            (Subject::Term(t), Object::Type(s)) => {
                write!(f, "{} |- {} : {}", self.env, print_term_raw(t), s)
            }
            (Subject::Term(t), Object::Bag(a)) => {
                write!(f, "{} |- {} : {}", self.env, print_term_raw(t), a)
            }
            (Subject::Pattern(p), Object::Bag(a)) => write!(f, "{} ||- {} : {}", self.env, p, a),
            (Subject::Pattern(p), Object::Type(s)) => write!(f, "{} ||- {} : {}", self.env, p, s),
        }
    }
}

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
#[error("invalid `{rule}` node at premise path {}: {reason}", path_label(.path))]
pub struct CheckError {
    pub path: Vec<usize>,
    pub rule: Rule,
    pub reason: String,
}

fn path_label(path: &[usize]) -> String {
    if path.is_empty() {
        "root".into()
    } else {
        path.iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }
}

impl Derivation {
    pub fn ax(x: Name, s: TypeExpr) -> Derivation {
        Derivation {
            rule: Rule::Ax,
            env: TypeEnv::single(x.clone(), MType::single(s.clone())),
            subject: Subject::Term(Term::Var(x)),
            object: Object::Type(s),
            premises: Vec::new(),
        }
    }

    /// `many` over derivations of `t`; no premises gives `∅ ⊢ t : []`.
    pub fn many(t: Term, premises: Vec<Derivation>) -> Derivation {
        let env = premises.iter().fold(TypeEnv::new(), |e, d| e.sum(&d.env));
        let bag = premises.iter().map(|d| d.ty().clone()).collect();
        Derivation {
            rule: Rule::Many,
            env,
            subject: Subject::Term(t),
            object: Object::Bag(bag),
            premises,
        }
    }

    pub fn abs(p: Pattern, body: Derivation) -> Derivation {
        let pat = Derivation::pattern(&body.env.restrict(&p), &p);
        let object = TypeExpr::arrow(pat.bag().clone(), body.ty().clone());
        Derivation {
            rule: Rule::Abs,
            env: body.env.without(&p),
            subject: Subject::Term(Term::abs(p, body.term().clone())),
            object: Object::Type(object),
            premises: vec![body, pat],
        }
    }

    pub fn app(fun: Derivation, arg: Derivation) -> Result<Derivation, TypeError> {
        let TypeExpr::Arrow(a, s) = fun.ty() else {
            return Err(TypeError::Invalid(format!(
                "function typed by non-arrow {}",
                fun.ty()
            )));
        };
        if a != arg.bag() {
            return Err(TypeError::Invalid(format!(
                "argument has {} where {} is expected",
                arg.bag(),
                a
            )));
        }
        Ok(Derivation {
            rule: Rule::App,
            env: fun.env.sum(&arg.env),
            subject: Subject::Term(Term::app(fun.term().clone(), arg.term().clone())),
            object: Object::Type((**s).clone()),
            premises: vec![fun, arg],
        })
    }

    pub fn pair(left: Derivation, right: Derivation) -> Derivation {
        Derivation {
            rule: Rule::Pair,
            env: left.env.sum(&right.env),
            subject: Subject::Term(Term::pair(left.term().clone(), right.term().clone())),
            object: Object::Type(TypeExpr::Product(left.bag().clone(), right.bag().clone())),
            premises: vec![left, right],
        }
    }

    pub fn sub(body: Derivation, p: Pattern, arg: Derivation) -> Result<Derivation, TypeError> {
        let pat = Derivation::pattern(&body.env.restrict(&p), &p);
        if pat.bag() != arg.bag() {
            return Err(TypeError::Invalid(format!(
                "pattern {} receives {} but the argument has {}",
                p,
                pat.bag(),
                arg.bag()
            )));
        }
        Ok(Derivation {
            rule: Rule::Sub,
            env: body.env.without(&p).sum(&arg.env),
            subject: Subject::Term(Term::matching(body.term().clone(), p, arg.term().clone())),
            object: Object::Type(body.ty().clone()),
            premises: vec![body, pat, arg],
        })
    }

    /// The unique derivation of `Γ ⊩ p : A`, for `dom(Γ) ⊆ var(p)`.
    pub fn pattern(env: &TypeEnv, p: &Pattern) -> Derivation {
        match p {
            Pattern::Var(x) => Derivation {
                rule: Rule::VarPat,
                env: env.clone(),
                subject: Subject::Pattern(p.clone()),
                object: Object::Bag(env.get(x)),
                premises: Vec::new(),
            },
            Pattern::Pair(p1, p2) => {
                let d1 = Derivation::pattern(&env.restrict(p1), p1);
                let d2 = Derivation::pattern(&env.restrict(p2), p2);
                Derivation {
                    rule: Rule::PairPat,
                    env: env.clone(),
                    subject: Subject::Pattern(p.clone()),
                    object: Object::Bag(pattern_type_unchecked(env, p)),
                    premises: vec![d1, d2],
                }
            }
        }
    }

    /// The subject of a term judgment.
    pub fn term(&self) -> &Term {
        match &self.subject {
            Subject::Term(t) => t,
            Subject::Pattern(p) => panic!("pattern node `{p}` has no term subject"),
        }
    }

    /// The type of a `⊢ t : σ` node.
    pub fn ty(&self) -> &TypeExpr {
        match &self.object {
            Object::Type(s) => s,
            Object::Bag(a) => panic!("node typed by bag {a} has no single type"),
        }
    }

    /// The bag of a `many` or pattern node.
    pub fn bag(&self) -> &MType {
        match &self.object {
            Object::Bag(a) => a,
            Object::Type(s) => panic!("node typed by {s} has no bag"),
        }
    }

    pub fn judgment(&self) -> Judgment {
        Judgment {
            env: self.env.clone(),
            subject: self.subject.clone(),
            object: self.object.clone(),
        }
    }

    pub fn to_json(&self) -> Value {
        let env: Map<String, Value> = self
            .env
            .iter()
            .map(|(x, a)| {
                (
                    x.to_string(),
                    Value::from(a.items().iter().map(|t| t.to_string()).collect::<Vec<_>>()),
                )
            })
            .collect();
        let subject = match &self.subject {
            Subject::Term(t) => print_term_raw(t),
            Subject::Pattern(p) => print_pattern(p),
        };
        let object = match &self.object {
            Object::Type(s) => Value::from(s.to_string()),
            Object::Bag(a) => {
                Value::from(a.items().iter().map(|t| t.to_string()).collect::<Vec<_>>())
            }
        };
        json!({
            "rule": self.rule.name(),
            "env": env,
            "subject": subject,
            "object": object,
            "premises": self.premises.iter().map(Derivation::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Derivation, TypeError> {
        let bad = |m: &str| TypeError::Invalid(format!("malformed derivation JSON: {m}"));
        let rule = v
            .get("rule")
            .and_then(Value::as_str)
            .and_then(Rule::from_name)
            .ok_or_else(|| bad("missing or unknown `rule`"))?;
        let mut env = TypeEnv::new();
        for (x, a) in v
            .get("env")
            .and_then(Value::as_object)
            .ok_or_else(|| bad("missing `env`"))?
        {
            let name = Name::new(x)?;
            env.set(
                name,
                bag_from_json(a).ok_or_else(|| bad("environment entry"))??,
            );
        }
        let subj = v
            .get("subject")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing `subject`"))?;
        let subject = if rule.is_pattern_rule() {
            Subject::Pattern(parse_pattern(subj)?)
        } else {
            Subject::Term(parse_term(subj)?)
        };
        let obj = v.get("object").ok_or_else(|| bad("missing `object`"))?;
        let object = if rule.is_type_rule() {
            Object::Type(parse_type(
                obj.as_str().ok_or_else(|| bad("`object` must be a type"))?,
            )?)
        } else {
            Object::Bag(bag_from_json(obj).ok_or_else(|| bad("`object` must be a list of types"))??)
        };
        let premises = v
            .get("premises")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing `premises`"))?
            .iter()
            .map(Derivation::from_json)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Derivation {
            rule,
            env,
            subject,
            object,
            premises,
        })
    }
}

fn bag_from_json(v: &Value) -> Option<Result<MType, TypeError>> {
    let items = v.as_array()?;
    let strs: Option<Vec<&str>> = items.iter().map(Value::as_str).collect();
    let strs = strs?;
    Some(parse_mtype(&format!("[{}]", strs.join(", "))))
}

/// Validates every node of `d` against its rule.
pub fn check_derivation(d: &Derivation) -> Result<Judgment, CheckError> {
    check(d, &mut Vec::new())?;
    Ok(d.judgment())
}

fn check(d: &Derivation, path: &mut Vec<usize>) -> Result<(), CheckError> {
    for (i, p) in d.premises.iter().enumerate() {
        path.push(i);
        check(p, path)?;
        path.pop();
    }
    check_node(d).map_err(|reason| CheckError {
        path: path.clone(),
        rule: d.rule,
        reason,
    })
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn arity(d: &Derivation, n: usize) -> Result<(), String> {
    ensure(d.premises.len() == n, || {
        format!("expected {n} premises, found {}", d.premises.len())
    })
}

/// Premise is `Γ ⊢ t : σ` for the given `t`; returns `σ`.
fn typed<'a>(d: &'a Derivation, t: &Term, what: &str) -> Result<&'a TypeExpr, String> {
    let Object::Type(s) = &d.object else {
        return Err(format!("{what} premise must conclude a single type"));
    };
    ensure(d.rule.is_type_rule(), || {
        format!("{what} premise uses rule `{}`", d.rule)
    })?;
    ensure(d.subject == Subject::Term(t.clone()), || {
        format!("{what} premise has a different subject")
    })?;
    Ok(s)
}

/// Premise is a `many` node for `t`; returns its bag.
fn many<'a>(d: &'a Derivation, t: &Term, what: &str) -> Result<&'a MType, String> {
    ensure(d.rule == Rule::Many, || {
        format!("{what} premise must use `many`, found `{}`", d.rule)
    })?;
    ensure(d.subject == Subject::Term(t.clone()), || {
        format!("{what} premise has a different subject")
    })?;
    match &d.object {
        Object::Bag(a) => Ok(a),
        Object::Type(_) => Err(format!("{what} premise must conclude a bag")),
    }
}

/// Premise is a pattern judgment for `p`; returns its bag.
fn pat<'a>(d: &'a Derivation, p: &Pattern, what: &str) -> Result<&'a MType, String> {
    ensure(d.rule.is_pattern_rule(), || {
        format!("{what} premise must type a pattern")
    })?;
    ensure(d.subject == Subject::Pattern(p.clone()), || {
        format!("{what} premise has a different pattern")
    })?;
    match &d.object {
        Object::Bag(a) => Ok(a),
        Object::Type(_) => Err(format!("{what} premise must conclude a bag")),
    }
}

fn check_node(d: &Derivation) -> Result<(), String> {
    let env_is = |e: &TypeEnv| {
        ensure(&d.env == e, || {
            format!("environment should be `{e}`, found `{}`", d.env)
        })
    };
    let obj_is = |o: Object| {
        let shown = match &o {
            Object::Type(s) => s.to_string(),
            Object::Bag(a) => a.to_string(),
        };
        ensure(d.object == o, || format!("conclusion should be {shown}"))
    };
    match (d.rule, &d.subject) {
        (Rule::Ax, Subject::Term(Term::Var(x))) => {
            arity(d, 0)?;
            let Object::Type(s) = &d.object else {
                return Err("axiom must conclude a single type".into());
            };
            env_is(&TypeEnv::single(x.clone(), MType::single(s.clone())))
        }
        (Rule::Many, Subject::Term(t)) => {
            let mut env = TypeEnv::new();
            let mut bag = Vec::new();
            for p in &d.premises {
                bag.push(typed(p, t, "many")?.clone());
                env = env.sum(&p.env);
            }
            obj_is(Object::Bag(MType::new(bag)))?;
            env_is(&env)
        }
        (Rule::Abs, Subject::Term(Term::Abs(p, b))) => {
            arity(d, 2)?;
            let s = typed(&d.premises[0], b, "body")?;
            let a = pat(&d.premises[1], p, "pattern")?;
            let genv = &d.premises[0].env;
            ensure(d.premises[1].env == genv.restrict(p), || {
                "pattern environment must be the body's restricted to the pattern".into()
            })?;
            obj_is(Object::Type(TypeExpr::arrow(a.clone(), s.clone())))?;
            env_is(&genv.without(p))
        }
        (Rule::App, Subject::Term(Term::App(f, u))) => {
            arity(d, 2)?;
            let ft = typed(&d.premises[0], f, "function")?;
            let a = many(&d.premises[1], u, "argument")?;
            let TypeExpr::Arrow(dom, s) = ft else {
                return Err(format!("function typed by non-arrow {ft}"));
            };
            ensure(dom == a, || {
                format!("argument has {a} where {dom} is expected")
            })?;
            obj_is(Object::Type((**s).clone()))?;
            env_is(&d.premises[0].env.sum(&d.premises[1].env))
        }
        (Rule::Pair, Subject::Term(Term::Pair(l, r))) => {
            arity(d, 2)?;
            let a = many(&d.premises[0], l, "left")?;
            let b = many(&d.premises[1], r, "right")?;
            obj_is(Object::Type(TypeExpr::Product(a.clone(), b.clone())))?;
            env_is(&d.premises[0].env.sum(&d.premises[1].env))
        }
        (Rule::Sub, Subject::Term(Term::Match(b, p, u))) => {
            arity(d, 3)?;
            let s = typed(&d.premises[0], b, "body")?;
            let a = pat(&d.premises[1], p, "pattern")?;
            let a2 = many(&d.premises[2], u, "argument")?;
            let genv = &d.premises[0].env;
            ensure(d.premises[1].env == genv.restrict(p), || {
                "pattern environment must be the body's restricted to the pattern".into()
            })?;
            ensure(a == a2, || {
                format!("pattern receives {a} but the argument has {a2}")
            })?;
            obj_is(Object::Type(s.clone()))?;
            env_is(&genv.without(p).sum(&d.premises[2].env))
        }
        (Rule::VarPat, Subject::Pattern(Pattern::Var(x))) => {
            arity(d, 0)?;
            let Object::Bag(a) = &d.object else {
                return Err("pattern judgment must conclude a bag".into());
            };
            env_is(&TypeEnv::single(x.clone(), a.clone()))
        }
        (Rule::PairPat, Subject::Pattern(pp @ Pattern::Pair(p, q))) => {
            arity(d, 2)?;
            ensure(pp.is_linear(), || {
                "pattern components share a variable".into()
            })?;
            let a = pat(&d.premises[0], p, "left")?;
            let b = pat(&d.premises[1], q, "right")?;
            obj_is(Object::Bag(MType::single(TypeExpr::Product(
                a.clone(),
                b.clone(),
            ))))?;
            env_is(&d.premises[0].env.sum(&d.premises[1].env))
        }
        (r, _) => Err(format!("rule `{r}` does not apply to this subject")),
    }
}

/// Number of nodes other than `many`. Pattern nodes are counted so that the
/// measure drops on every typed reduction step, including pair matching.
pub fn meas(d: &Derivation) -> usize {
    let own = usize::from(d.rule != Rule::Many);
    own + d.premises.iter().map(meas).sum::<usize>()
}

/// Positions of the subject covered by a term rule somewhere in `d`.
pub fn typed_occurrences(d: &Derivation) -> BTreeSet<Position> {
    let mut out = BTreeSet::new();
    occurrences(d, &Position::root(), &mut out);
    out
}

fn occurrences(d: &Derivation, at: &Position, out: &mut BTreeSet<Position>) {
    let steps: &[Option<Step>] = match d.rule {
        Rule::Many => {
            for p in &d.premises {
                occurrences(p, at, out);
            }
            return;
        }
        Rule::VarPat | Rule::PairPat => return,
        Rule::Ax => &[],
        Rule::Abs => &[Some(Step::AbsBody), None],
        Rule::App => &[Some(Step::AppFun), Some(Step::AppArg)],
        Rule::Pair => &[Some(Step::PairLeft), Some(Step::PairRight)],
        Rule::Sub => &[Some(Step::MatchBody), None, Some(Step::MatchArg)],
    };
    out.insert(at.clone());
    for (p, s) in d.premises.iter().zip(steps) {
        if let Some(s) = s {
            occurrences(p, &at.child(*s), out);
        }
    }
}
