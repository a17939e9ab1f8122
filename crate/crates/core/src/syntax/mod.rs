//! Terms, patterns, names, positions and the α-machinery.

mod anf;
mod parse;
mod print;

pub use anf::{anf_leq, anf_lub, is_anf, AnfError};
pub use parse::{parse_pattern, parse_term, SyntaxError};
pub use print::{canonical_rename, print_pattern, print_term, print_term_raw};

pub(crate) use anf::{is_l, join};
pub(crate) use parse::{Lexer, Tok};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// A variable name: a letter followed by letters or digits; `fail` is reserved.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Result<Name, SyntaxError> {
        if Name::valid(s) {
            Ok(Name(Arc::from(s)))
        } else {
            Err(SyntaxError::new(0, format!("invalid variable name `{s}`")))
        }
    }

    pub fn valid(s: &str) -> bool {
        let mut cs = s.chars();
        match cs.next() {
            Some(c) if c.is_ascii_alphabetic() => {}
            _ => return false,
        }
        cs.all(|c| c.is_ascii_alphanumeric()) && s != "fail"
    }

    /// Unchecked constructor for internally generated names.
    pub(crate) fn raw(s: impl Into<Arc<str>>) -> Name {
        Name(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Picks `stem{k}` for the smallest `k ≥ 1` not rejected by `taken`, where
/// `stem` is `base` without its trailing digits.
pub fn fresh_name(base: &Name, taken: impl Fn(&Name) -> bool) -> Name {
    let stem = base.as_str().trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "v" } else { stem };
    (1..)
        .map(|k| Name::raw(format!("{stem}{k}")))
        .find(|n| !taken(n))
        .expect("unbounded name supply")
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Pattern {
    Var(Name),
    Pair(Box<Pattern>, Box<Pattern>),
}

impl Pattern {
    pub fn var(n: &str) -> Pattern {
        Pattern::Var(Name::new(n).expect("valid name"))
    }

    pub fn pair(p: Pattern, q: Pattern) -> Pattern {
        Pattern::Pair(Box::new(p), Box::new(q))
    }

    /// Variables in left-to-right order.
    pub fn vars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Name>) {
        match self {
            Pattern::Var(x) => out.push(x.clone()),
            Pattern::Pair(p, q) => {
                p.collect_vars(out);
                q.collect_vars(out);
            }
        }
    }

    pub fn binds(&self, x: &Name) -> bool {
        match self {
            Pattern::Var(y) => y == x,
            Pattern::Pair(p, q) => p.binds(x) || q.binds(x),
        }
    }

    pub fn is_linear(&self) -> bool {
        let vs = self.vars();
        let set: BTreeSet<_> = vs.iter().collect();
        set.len() == vs.len()
    }

    /// `p # q`: no shared variables.
    pub fn disjoint(&self, other: &Pattern) -> bool {
        let vs = self.vars();
        other.vars().iter().all(|v| !vs.contains(v))
    }

    /// Number of pattern nodes.
    pub fn size(&self) -> usize {
        match self {
            Pattern::Var(_) => 1,
            Pattern::Pair(p, q) => 1 + p.size() + q.size(),
        }
    }

    pub fn is_pair(&self) -> bool {
        matches!(self, Pattern::Pair(..))
    }

    pub fn same_shape(&self, other: &Pattern) -> bool {
        match (self, other) {
            (Pattern::Var(_), Pattern::Var(_)) => true,
            (Pattern::Pair(a, b), Pattern::Pair(c, d)) => a.same_shape(c) && b.same_shape(d),
            _ => false,
        }
    }

    pub fn rename(&self, map: &[(Name, Name)]) -> Pattern {
        match self {
            Pattern::Var(x) => Pattern::Var(
                map.iter()
                    .find(|(a, _)| a == x)
                    .map(|(_, b)| b.clone())
                    .unwrap_or_else(|| x.clone()),
            ),
            Pattern::Pair(p, q) => Pattern::pair(p.rename(map), q.rename(map)),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_pattern(self))
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Var(Name),
    Abs(Pattern, Box<Term>),
    Pair(Box<Term>, Box<Term>),
    App(Box<Term>, Box<Term>),
    /// `body[pattern/arg]`
    Match(Box<Term>, Pattern, Box<Term>),
    Fail,
    Omega,
}

impl Term {
    pub fn var(n: &str) -> Term {
        Term::Var(Name::new(n).expect("valid name"))
    }

    pub fn abs(p: Pattern, body: Term) -> Term {
        Term::Abs(p, Box::new(body))
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn matching(body: Term, p: Pattern, arg: Term) -> Term {
        Term::Match(Box::new(body), p, Box::new(arg))
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Term::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Term::Abs(p, b) => {
                let n = bound.len();
                bound.extend(p.vars());
                b.collect_free(bound, out);
                bound.truncate(n);
            }
            Term::Pair(a, b) | Term::App(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Term::Match(b, p, a) => {
                a.collect_free(bound, out);
                let n = bound.len();
                bound.extend(p.vars());
                b.collect_free(bound, out);
                bound.truncate(n);
            }
            Term::Fail | Term::Omega => {}
        }
    }

    pub fn is_free(&self, x: &Name) -> bool {
        match self {
            Term::Var(y) => y == x,
            Term::Abs(p, b) => !p.binds(x) && b.is_free(x),
            Term::Pair(a, b) | Term::App(a, b) => a.is_free(x) || b.is_free(x),
            Term::Match(b, p, a) => a.is_free(x) || (!p.binds(x) && b.is_free(x)),
            Term::Fail | Term::Omega => false,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn has_omega(&self) -> bool {
        match self {
            Term::Omega => true,
            Term::Var(_) | Term::Fail => false,
            Term::Abs(_, b) => b.has_omega(),
            Term::Pair(a, b) | Term::App(a, b) | Term::Match(a, _, b) => {
                a.has_omega() || b.has_omega()
            }
        }
    }

    /// Number of term constructors; `Ω` and pattern nodes count zero.
    pub fn size(&self) -> usize {
        match self {
            Term::Omega => 0,
            Term::Var(_) | Term::Fail => 1,
            Term::Abs(_, b) => 1 + b.size(),
            Term::Pair(a, b) | Term::App(a, b) | Term::Match(a, _, b) => 1 + a.size() + b.size(),
        }
    }

    /// Every name occurring anywhere, bound or free.
    pub fn all_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Var(x) => {
                out.insert(x.clone());
            }
            Term::Abs(p, b) => {
                out.extend(p.vars());
                b.collect_names(out);
            }
            Term::Pair(a, b) | Term::App(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
            Term::Match(b, p, a) => {
                out.extend(p.vars());
                b.collect_names(out);
                a.collect_names(out);
            }
            Term::Fail | Term::Omega => {}
        }
    }

    pub fn subterm(&self, pos: &Position) -> Option<&Term> {
        let mut cur = self;
        for s in &pos.0 {
            cur = match (s, cur) {
                (Step::AbsBody, Term::Abs(_, b)) => b,
                (Step::PairLeft, Term::Pair(a, _)) => a,
                (Step::PairRight, Term::Pair(_, b)) => b,
                (Step::AppFun, Term::App(a, _)) => a,
                (Step::AppArg, Term::App(_, b)) => b,
                (Step::MatchBody, Term::Match(b, _, _)) => b,
                (Step::MatchArg, Term::Match(_, _, a)) => a,
                _ => return None,
            };
        }
        Some(cur)
    }

    /// Rebuilds the term with the subterm at `pos` replaced by `f(subterm)`.
    pub fn map_at<E>(
        &self,
        pos: &[Step],
        f: &mut impl FnMut(&Term) -> Result<Term, E>,
    ) -> Option<Result<Term, E>> {
        let Some((s, rest)) = pos.split_first() else {
            return Some(f(self));
        };
        Some(Ok(match (s, self) {
            (Step::AbsBody, Term::Abs(p, b)) => match b.map_at(rest, f)? {
                Ok(b) => Term::abs(p.clone(), b),
                Err(e) => return Some(Err(e)),
            },
            (Step::PairLeft, Term::Pair(a, b)) => match a.map_at(rest, f)? {
                Ok(a) => Term::pair(a, (**b).clone()),
                Err(e) => return Some(Err(e)),
            },
            (Step::PairRight, Term::Pair(a, b)) => match b.map_at(rest, f)? {
                Ok(b) => Term::pair((**a).clone(), b),
                Err(e) => return Some(Err(e)),
            },
            (Step::AppFun, Term::App(a, b)) => match a.map_at(rest, f)? {
                Ok(a) => Term::app(a, (**b).clone()),
                Err(e) => return Some(Err(e)),
            },
            (Step::AppArg, Term::App(a, b)) => match b.map_at(rest, f)? {
                Ok(b) => Term::app((**a).clone(), b),
                Err(e) => return Some(Err(e)),
            },
            (Step::MatchBody, Term::Match(b, p, a)) => match b.map_at(rest, f)? {
                Ok(b) => Term::matching(b, p.clone(), (**a).clone()),
                Err(e) => return Some(Err(e)),
            },
            (Step::MatchArg, Term::Match(b, p, a)) => match a.map_at(rest, f)? {
                Ok(a) => Term::matching((**b).clone(), p.clone(), a),
                Err(e) => return Some(Err(e)),
            },
            _ => return None,
        }))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

/// A child selector.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Step {
    AbsBody,
    PairLeft,
    PairRight,
    AppFun,
    AppArg,
    MatchBody,
    MatchArg,
}

impl Step {
    pub fn label(self) -> &'static str {
        match self {
            Step::AbsBody => "body",
            Step::PairLeft => "left",
            Step::PairRight => "right",
            Step::AppFun => "fun",
            Step::AppArg => "arg",
            Step::MatchBody => "mbody",
            Step::MatchArg => "marg",
        }
    }

    pub fn from_label(s: &str) -> Option<Step> {
        [
            Step::AbsBody,
            Step::PairLeft,
            Step::PairRight,
            Step::AppFun,
            Step::AppArg,
            Step::MatchBody,
            Step::MatchArg,
        ]
        .into_iter()
        .find(|st| st.label() == s)
    }
}

/// A path from the root to a subterm.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Position(pub Vec<Step>);

impl Position {
    pub fn root() -> Position {
        Position(Vec::new())
    }

    pub fn child(&self, s: Step) -> Position {
        let mut v = self.0.clone();
        v.push(s);
        Position(v)
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parse(s: &str) -> Option<Position> {
        if s == "root" {
            return Some(Position::root());
        }
        s.split('.')
            .map(Step::from_label)
            .collect::<Option<Vec<_>>>()
            .map(Position)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("root");
        }
        let parts: Vec<_> = self.0.iter().map(|s| s.label()).collect();
        f.write_str(&parts.join("."))
    }
}

/// What to do when a substitution meets a binder.
pub(crate) enum BinderPlan {
    /// Nothing to substitute underneath.
    Skip,
    /// Continue into the scope with `sigma`, after renaming the listed binder variables.
    Enter {
        sigma: BTreeMap<Name, Term>,
        renames: Vec<(Name, Name)>,
    },
}

/// Decides how the simultaneous substitution `sigma` crosses the binder `p` whose
/// scope is `body`. Binder variables free in the substituted terms are renamed.
pub(crate) fn plan_binder(p: &Pattern, body: &Term, sigma: &BTreeMap<Name, Term>) -> BinderPlan {
    let fvb = body.free_vars();
    let mut inner: BTreeMap<Name, Term> = sigma
        .iter()
        .filter(|(k, _)| !p.binds(k) && fvb.contains(*k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if inner.is_empty() {
        return BinderPlan::Skip;
    }
    let range: BTreeSet<Name> = inner.values().flat_map(|t| t.free_vars()).collect();
    let pv = p.vars();
    let mut taken: BTreeSet<Name> = range.clone();
    taken.extend(fvb);
    taken.extend(pv.iter().cloned());
    taken.extend(inner.keys().cloned());
    let mut renames = Vec::new();
    for v in pv {
        if range.contains(&v) {
            let v2 = fresh_name(&v, |n| taken.contains(n));
            taken.insert(v2.clone());
            inner.insert(v.clone(), Term::Var(v2.clone()));
            renames.push((v, v2));
        }
    }
    BinderPlan::Enter {
        sigma: inner,
        renames,
    }
}

/// Capture-avoiding simultaneous substitution.
pub fn substitute_all(t: &Term, sigma: &BTreeMap<Name, Term>) -> Term {
    if sigma.is_empty() {
        return t.clone();
    }
    match t {
        Term::Var(x) => sigma.get(x).cloned().unwrap_or_else(|| t.clone()),
        Term::Fail | Term::Omega => t.clone(),
        Term::Pair(a, b) => Term::pair(substitute_all(a, sigma), substitute_all(b, sigma)),
        Term::App(a, b) => Term::app(substitute_all(a, sigma), substitute_all(b, sigma)),
        Term::Abs(p, b) => match plan_binder(p, b, sigma) {
            BinderPlan::Skip => t.clone(),
            BinderPlan::Enter { sigma, renames } => {
                Term::abs(p.rename(&renames), substitute_all(b, &sigma))
            }
        },
        Term::Match(b, p, a) => {
            let a2 = substitute_all(a, sigma);
            match plan_binder(p, b, sigma) {
                BinderPlan::Skip => Term::matching((**b).clone(), p.clone(), a2),
                BinderPlan::Enter { sigma, renames } => {
                    Term::matching(substitute_all(b, &sigma), p.rename(&renames), a2)
                }
            }
        }
    }
}

/// `t{x/u}`.
pub fn substitute(t: &Term, x: &Name, u: &Term) -> Term {
    let mut sigma = BTreeMap::new();
    sigma.insert(x.clone(), u.clone());
    substitute_all(t, &sigma)
}

/// Renames each variable of `p` that lies in `avoid` to a fresh name.
/// `body` is the scope of `p`.
pub(crate) fn binder_renames(
    p: &Pattern,
    body: &Term,
    avoid: &BTreeSet<Name>,
) -> Vec<(Name, Name)> {
    let pv = p.vars();
    if pv.iter().all(|v| !avoid.contains(v)) {
        return Vec::new();
    }
    let mut taken: BTreeSet<Name> = avoid.clone();
    taken.extend(body.free_vars());
    taken.extend(pv.iter().cloned());
    let mut out = Vec::new();
    for v in pv {
        if avoid.contains(&v) {
            let v2 = fresh_name(&v, |n| taken.contains(n));
            taken.insert(v2.clone());
            out.push((v, v2));
        }
    }
    out
}

pub(crate) fn renaming_map(renames: &[(Name, Name)]) -> BTreeMap<Name, Term> {
    renames
        .iter()
        .map(|(a, b)| (a.clone(), Term::Var(b.clone())))
        .collect()
}

/// Renames the binders of the outer matching chain of `t` away from `avoid`.
pub(crate) fn freshen_chain(t: &Term, avoid: &BTreeSet<Name>) -> Term {
    match t {
        Term::Match(b, p, a) => {
            let renames = binder_renames(p, b, avoid);
            let b2 = substitute_all(b, &renaming_map(&renames));
            Term::matching(freshen_chain(&b2, avoid), p.rename(&renames), (**a).clone())
        }
        _ => t.clone(),
    }
}

/// A term split as `L⟦core⟧`; `chain` lists matchings innermost first.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ListCtxDecomp {
    pub chain: Vec<(Pattern, Term)>,
    pub core: Term,
}

impl ListCtxDecomp {
    pub fn plug(&self, core: Term) -> Term {
        self.chain.iter().fold(core, |acc, (p, a)| {
            Term::matching(acc, p.clone(), a.clone())
        })
    }

    pub fn rebuild(&self) -> Term {
        self.plug(self.core.clone())
    }
}

pub fn split_list_context(t: &Term) -> ListCtxDecomp {
    let mut chain = Vec::new();
    let mut cur = t;
    while let Term::Match(b, p, a) = cur {
        chain.push((p.clone(), (**a).clone()));
        cur = b;
    }
    chain.reverse();
    ListCtxDecomp {
        chain,
        core: cur.clone(),
    }
}

/// The innermost non-matching subterm of `t`.
pub fn list_core(t: &Term) -> &Term {
    let mut cur = t;
    while let Term::Match(b, _, _) = cur {
        cur = b;
    }
    cur
}

/// α-equivalence.
pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    alpha_walk(a, b, false, &mut Vec::new(), &mut Vec::new())
}

/// Resolves a variable against a scope stack of (name, binder id).
fn resolve(scope: &[(Name, usize)], x: &Name) -> Option<usize> {
    scope.iter().rev().find(|(n, _)| n == x).map(|(_, id)| *id)
}

/// Shared α-aware walk. With `omega_bottom`, `Ω` on the left matches anything.
pub(crate) fn alpha_walk(
    a: &Term,
    b: &Term,
    omega_bottom: bool,
    sa: &mut Vec<(Name, usize)>,
    sb: &mut Vec<(Name, usize)>,
) -> bool {
    match (a, b) {
        (Term::Omega, _) if omega_bottom => true,
        (Term::Omega, Term::Omega) | (Term::Fail, Term::Fail) => true,
        (Term::Var(x), Term::Var(y)) => match (resolve(sa, x), resolve(sb, y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (Term::Abs(p, s), Term::Abs(q, t)) => {
            if !p.same_shape(q) {
                return false;
            }
            let (na, nb) = (sa.len(), sb.len());
            bind_pair(p, q, sa, sb);
            let r = alpha_walk(s, t, omega_bottom, sa, sb);
            sa.truncate(na);
            sb.truncate(nb);
            r
        }
        (Term::Pair(a1, a2), Term::Pair(b1, b2)) | (Term::App(a1, a2), Term::App(b1, b2)) => {
            alpha_walk(a1, b1, omega_bottom, sa, sb) && alpha_walk(a2, b2, omega_bottom, sa, sb)
        }
        (Term::Match(s, p, u), Term::Match(t, q, v)) => {
            if !p.same_shape(q) || !alpha_walk(u, v, omega_bottom, sa, sb) {
                return false;
            }
            let (na, nb) = (sa.len(), sb.len());
            bind_pair(p, q, sa, sb);
            let r = alpha_walk(s, t, omega_bottom, sa, sb);
            sa.truncate(na);
            sb.truncate(nb);
            r
        }
        _ => false,
    }
}

fn bind_pair(p: &Pattern, q: &Pattern, sa: &mut Vec<(Name, usize)>, sb: &mut Vec<(Name, usize)>) {
    for (x, y) in p.vars().into_iter().zip(q.vars()) {
        // both stacks grow in lockstep, so the depth identifies the binder
        let id = sa.len();
        sa.push((x, id));
        sb.push((y, id));
    }
}
