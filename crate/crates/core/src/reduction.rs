//! The nine rewrite rules, their contextual closure, strategies, form
//! classifiers and reduction graphs.

use crate::syntax::{
    fresh_name, freshen_chain, is_anf, list_core, print_term, split_list_context, substitute,
    substitute_all, Name, Pattern, Position, Step, Term,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub enum RuleId {
    Beta,
    Subst,
    MatchPair,
    MatchAbs,
    PairApp,
    MatchFail,
    ListFail,
    AppFail,
    AbsFail,
}

impl RuleId {
    pub const ALL: [RuleId; 9] = [
        RuleId::Beta,
        RuleId::Subst,
        RuleId::MatchPair,
        RuleId::MatchAbs,
        RuleId::PairApp,
        RuleId::MatchFail,
        RuleId::ListFail,
        RuleId::AppFail,
        RuleId::AbsFail,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleId::Beta => "Beta",
            RuleId::Subst => "Subst",
            RuleId::MatchPair => "MatchPair",
            RuleId::MatchAbs => "MatchAbs",
            RuleId::PairApp => "PairApp",
            RuleId::MatchFail => "MatchFail",
            RuleId::ListFail => "ListFail",
            RuleId::AppFail => "AppFail",
            RuleId::AbsFail => "AbsFail",
        }
    }

    /// Rules whose contractum is `fail`.
    pub fn is_failure(self) -> bool {
        !matches!(self, RuleId::Beta | RuleId::Subst | RuleId::MatchPair)
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("reduction is undefined on terms containing `_`")]
    OmegaPresent,
    #[error("no subterm at position {0}")]
    BadPosition(Position),
    #[error("no redex at position {0}")]
    NotARedex(Position),
    #[error("rule {rule} does not apply at position {pos}")]
    RuleMismatch { rule: RuleId, pos: Position },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StepRecord {
    pub rule: RuleId,
    pub position: Position,
    pub before: Term,
    pub after: Term,
}

impl StepRecord {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "rule": self.rule.name(),
            "position": self.position.to_string(),
            "before": print_term(&self.before),
            "after": print_term(&self.after),
        })
    }
}

impl fmt::Display for StepRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} @ {} : {} → {}",
            self.rule, self.position, self.before, self.after
        )
    }
}

/// Rules whose left-hand side matches `t` at the root, in rule order.
pub fn root_rules(t: &Term) -> Vec<RuleId> {
    let mut out = Vec::new();
    match t {
        Term::App(f, _) => match list_core(f) {
            Term::Abs(..) => out.push(RuleId::Beta),
            Term::Pair(..) => out.push(RuleId::PairApp),
            Term::Fail if matches!(**f, Term::Fail) => out.push(RuleId::AppFail),
            _ => {}
        },
        Term::Match(_, p, u) => {
            match p {
                Pattern::Var(_) => out.push(RuleId::Subst),
                Pattern::Pair(..) => match list_core(u) {
                    Term::Pair(..) => out.push(RuleId::MatchPair),
                    Term::Abs(..) => out.push(RuleId::MatchAbs),
                    Term::Fail if matches!(**u, Term::Fail) => out.push(RuleId::MatchFail),
                    _ => {}
                },
            }
            if matches!(list_core(t), Term::Fail) {
                out.push(RuleId::ListFail);
            }
        }
        Term::Abs(_, b) if matches!(**b, Term::Fail) => out.push(RuleId::AbsFail),
        _ => {}
    }
    out
}

/// Contracts the root redex of `t` by `rule`; `None` when the rule does not match.
pub fn contract(t: &Term, rule: RuleId) -> Option<Term> {
    if !root_rules(t).contains(&rule) {
        return None;
    }
    if rule.is_failure() {
        return Some(Term::Fail);
    }
    Some(match (rule, t) {
        (RuleId::Beta, Term::App(f, u)) => {
            let f = freshen_chain(f, &u.free_vars());
            let d = split_list_context(&f);
            let Term::Abs(p, body) = &d.core else {
                unreachable!()
            };
            d.plug(Term::matching((**body).clone(), p.clone(), (**u).clone()))
        }
        (RuleId::Subst, Term::Match(s, Pattern::Var(x), u)) => substitute(s, x, u),
        (RuleId::MatchPair, Term::Match(s, Pattern::Pair(p1, p2), u)) => {
            let mut avoid = s.free_vars();
            avoid.extend(p1.vars());
            avoid.extend(p2.vars());
            let u = freshen_chain(u, &avoid);
            let d = split_list_context(&u);
            let Term::Pair(u1, u2) = &d.core else {
                unreachable!()
            };
            // the second binder scopes over the first argument, so it must not capture it
            let renames = second_binder_renames(p2, &u1.free_vars(), &avoid);
            let sigma: BTreeMap<Name, Term> = renames
                .iter()
                .map(|(a, b)| (a.clone(), Term::Var(b.clone())))
                .collect();
            let s = substitute_all(s, &sigma);
            let inner = Term::matching(s, (**p1).clone(), (**u1).clone());
            d.plug(Term::matching(inner, p2.rename(&renames), (**u2).clone()))
        }
        _ => return None,
    })
}

/// Renames for the variables of `p2` that would capture free variables of the
/// first pair component once the matching is split in two.
pub(crate) fn second_binder_renames(
    p2: &Pattern,
    fv1: &BTreeSet<Name>,
    avoid: &BTreeSet<Name>,
) -> Vec<(Name, Name)> {
    let mut taken = fv1.clone();
    taken.extend(avoid.iter().cloned());
    let mut renames = Vec::new();
    for v in p2.vars() {
        if fv1.contains(&v) {
            let v2 = fresh_name(&v, |n| taken.contains(n));
            taken.insert(v2.clone());
            renames.push((v, v2));
        }
    }
    renames
}

/// The first applicable rule at the root and its contractum.
pub fn root_step(t: &Term) -> Result<Option<(RuleId, Term)>, ReductionError> {
    if t.has_omega() {
        return Err(ReductionError::OmegaPresent);
    }
    Ok(root_rules(t)
        .first()
        .map(|&r| (r, contract(t, r).expect("matched rule contracts"))))
}

/// Every redex in preorder: a node before its children, children left to right
/// in printed order.
pub fn redex_positions(t: &Term) -> Result<Vec<(Position, RuleId)>, ReductionError> {
    if t.has_omega() {
        return Err(ReductionError::OmegaPresent);
    }
    let mut out = Vec::new();
    collect_redexes(t, &mut Vec::new(), &mut out);
    Ok(out)
}

fn collect_redexes(t: &Term, path: &mut Vec<Step>, out: &mut Vec<(Position, RuleId)>) {
    for r in root_rules(t) {
        out.push((Position(path.clone()), r));
    }
    let mut visit = |s: Step, c: &Term, path: &mut Vec<Step>| {
        path.push(s);
        collect_redexes(c, path, out);
        path.pop();
    };
    match t {
        Term::Abs(_, b) => visit(Step::AbsBody, b, path),
        Term::Pair(a, b) => {
            visit(Step::PairLeft, a, path);
            visit(Step::PairRight, b, path);
        }
        Term::App(a, b) => {
            visit(Step::AppFun, a, path);
            visit(Step::AppArg, b, path);
        }
        Term::Match(b, _, a) => {
            visit(Step::MatchBody, b, path);
            visit(Step::MatchArg, a, path);
        }
        Term::Var(_) | Term::Fail | Term::Omega => {}
    }
}

pub fn is_normal(t: &Term) -> bool {
    fn go(t: &Term) -> bool {
        root_rules(t).is_empty()
            && match t {
                Term::Abs(_, b) => go(b),
                Term::Pair(a, b) | Term::App(a, b) | Term::Match(a, _, b) => go(a) && go(b),
                Term::Var(_) | Term::Fail | Term::Omega => true,
            }
    }
    go(t)
}

/// Rewrites the redex at `pos` with the first rule that applies there.
pub fn step_at(t: &Term, pos: &Position) -> Result<Term, ReductionError> {
    let sub = t
        .subterm(pos)
        .ok_or_else(|| ReductionError::BadPosition(pos.clone()))?;
    if sub.has_omega() || t.has_omega() {
        return Err(ReductionError::OmegaPresent);
    }
    let rule = *root_rules(sub)
        .first()
        .ok_or_else(|| ReductionError::NotARedex(pos.clone()))?;
    step_with(t, pos, rule)
}

/// Rewrites the redex at `pos` with the given rule.
pub fn step_with(t: &Term, pos: &Position, rule: RuleId) -> Result<Term, ReductionError> {
    if t.has_omega() {
        return Err(ReductionError::OmegaPresent);
    }
    t.map_at(&pos.0, &mut |s: &Term| {
        contract(s, rule).ok_or_else(|| ReductionError::RuleMismatch {
            rule,
            pos: pos.clone(),
        })
    })
    .ok_or_else(|| ReductionError::BadPosition(pos.clone()))?
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Strategy {
    LeftmostOutermost,
    Random(u64),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Outcome {
    NormalForm { term: Term, trace: Vec<StepRecord> },
    OutOfFuel { term: Term, trace: Vec<StepRecord> },
}

impl Outcome {
    pub fn term(&self) -> &Term {
        match self {
            Outcome::NormalForm { term, .. } | Outcome::OutOfFuel { term, .. } => term,
        }
    }

    pub fn trace(&self) -> &[StepRecord] {
        match self {
            Outcome::NormalForm { trace, .. } | Outcome::OutOfFuel { trace, .. } => trace,
        }
    }

    pub fn is_normal_form(&self) -> bool {
        matches!(self, Outcome::NormalForm { .. })
    }
}

/// One leftmost-outermost step, or `None` at a normal form.
pub fn lo_step(t: &Term) -> Result<Option<StepRecord>, ReductionError> {
    if t.has_omega() {
        return Err(ReductionError::OmegaPresent);
    }
    let mut path = Vec::new();
    Ok(first_redex(t, &mut path).map(|(pos, rule)| {
        let after = step_with(t, &pos, rule).expect("located redex contracts");
        StepRecord {
            rule,
            position: pos,
            before: t.clone(),
            after,
        }
    }))
}

fn first_redex(t: &Term, path: &mut Vec<Step>) -> Option<(Position, RuleId)> {
    if let Some(&r) = root_rules(t).first() {
        return Some((Position(path.clone()), r));
    }
    let children: Vec<(Step, &Term)> = match t {
        Term::Abs(_, b) => vec![(Step::AbsBody, b)],
        Term::Pair(a, b) => vec![(Step::PairLeft, a), (Step::PairRight, b)],
        Term::App(a, b) => vec![(Step::AppFun, a), (Step::AppArg, b)],
        Term::Match(b, _, a) => vec![(Step::MatchBody, b), (Step::MatchArg, a)],
        Term::Var(_) | Term::Fail | Term::Omega => vec![],
    };
    for (s, c) in children {
        path.push(s);
        if let Some(found) = first_redex(c, path) {
            return Some(found);
        }
        path.pop();
    }
    None
}

/// Iterates single steps under `strategy` until a normal form or `fuel` steps.
pub fn reduce(t: &Term, strategy: Strategy, fuel: usize) -> Result<Outcome, ReductionError> {
    if t.has_omega() {
        return Err(ReductionError::OmegaPresent);
    }
    let mut rng = match strategy {
        Strategy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Strategy::LeftmostOutermost => None,
    };
    let mut cur = t.clone();
    let mut trace = Vec::new();
    loop {
        let next = match rng.as_mut() {
            None => lo_step(&cur)?,
            Some(rng) => {
                let redexes = redex_positions(&cur)?;
                redexes.choose(rng).map(|(pos, rule)| {
                    let after = step_with(&cur, pos, *rule).expect("listed redex contracts");
                    StepRecord {
                        rule: *rule,
                        position: pos.clone(),
                        before: cur.clone(),
                        after,
                    }
                })
            }
        };
        let Some(rec) = next else {
            return Ok(Outcome::NormalForm { term: cur, trace });
        };
        if trace.len() == fuel {
            return Ok(Outcome::OutOfFuel { term: cur, trace });
        }
        cur = rec.after.clone();
        trace.push(rec);
    }
}

/// Grammar membership flags. All but `anf` are false on terms containing `_`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize)]
pub struct Classification {
    pub normal: bool,
    pub canonical: bool,
    pub pure_canonical: bool,
    pub k_form: bool,
    pub anf: bool,
}

pub fn classify(t: &Term) -> Classification {
    let anf = is_anf(t);
    if t.has_omega() {
        return Classification {
            anf,
            ..Default::default()
        };
    }
    Classification {
        normal: is_nf(t),
        canonical: is_canonical(t),
        pure_canonical: is_pure_canonical(t),
        k_form: is_k(t),
        anf,
    }
}

// Normal forms: N ::= fail | O, O ::= M | λp.O | ⟨N,N⟩ | O[⟨p,q⟩/M],
// M ::= x | M N | M[⟨p,q⟩/M]. An argument may be `fail`, since `x fail` has no redex.
fn is_nf(t: &Term) -> bool {
    matches!(t, Term::Fail) || is_o(t)
}

fn is_o(t: &Term) -> bool {
    match t {
        Term::Abs(_, b) => is_o(b),
        Term::Pair(a, b) => is_nf(a) && is_nf(b),
        Term::Match(b, p, a) if p.is_pair() && is_m(a) => is_o(b),
        _ => is_m(t),
    }
}

fn is_m(t: &Term) -> bool {
    match t {
        Term::Var(_) => true,
        Term::App(f, a) => is_m(f) && is_nf(a),
        Term::Match(b, p, a) => p.is_pair() && is_m(b) && is_m(a),
        _ => false,
    }
}

/// `J ::= λp.J | ⟨t,t⟩ | K | J[⟨p,q⟩/K]`
pub fn is_canonical(t: &Term) -> bool {
    !t.has_omega() && j(t)
}

fn j(t: &Term) -> bool {
    match t {
        Term::Abs(_, b) => j(b),
        Term::Pair(..) => true,
        Term::Match(b, p, a) if p.is_pair() && k(a) && j(b) => true,
        _ => k(t),
    }
}

/// `K ::= x | K t | K[⟨p,q⟩/K]`
pub fn is_k(t: &Term) -> bool {
    !t.has_omega() && k(t)
}

fn k(t: &Term) -> bool {
    match t {
        Term::Var(_) => true,
        Term::App(f, _) => k(f),
        Term::Match(b, p, a) => p.is_pair() && k(b) && k(a),
        _ => false,
    }
}

/// `J′ ::= λp.J′ | ⟨t,t⟩ | K′ | J′[⟨p,q⟩/K′]`
pub fn is_pure_canonical(t: &Term) -> bool {
    !t.has_omega() && jp(t)
}

fn jp(t: &Term) -> bool {
    match t {
        Term::Abs(_, b) => jp(b),
        Term::Pair(..) => true,
        Term::Match(b, p, a) => p.is_pair() && kp(a) && jp(b),
        _ => kp(t),
    }
}

/// `K′ ::= x | K′ t`
pub fn is_pure_k(t: &Term) -> bool {
    !t.has_omega() && kp(t)
}

fn kp(t: &Term) -> bool {
    match t {
        Term::Var(_) => true,
        Term::App(f, _) => kp(f),
        _ => false,
    }
}

/// `(applications, total pattern size)`; decreases on every non-substitution step.
pub fn nu(t: &Term) -> (usize, usize) {
    match t {
        Term::Var(_) | Term::Fail | Term::Omega => (0, 0),
        Term::Abs(p, b) => {
            let (a, s) = nu(b);
            (a, s + p.size())
        }
        Term::Pair(x, y) => {
            let (a1, s1) = nu(x);
            let (a2, s2) = nu(y);
            (a1 + a2, s1 + s2)
        }
        Term::App(x, y) => {
            let (a1, s1) = nu(x);
            let (a2, s2) = nu(y);
            (a1 + a2 + 1, s1 + s2)
        }
        Term::Match(x, p, y) => {
            let (a1, s1) = nu(x);
            let (a2, s2) = nu(y);
            (a1 + a2, s1 + s2 + p.size())
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub rule: RuleId,
    pub position: Position,
}

/// All reducts of a term up to α, explored breadth first.
#[derive(Clone, Debug)]
pub struct RedGraph {
    pub nodes: Vec<Term>,
    pub edges: Vec<GraphEdge>,
    pub truncated: bool,
}

impl RedGraph {
    pub fn record(&self, e: &GraphEdge) -> StepRecord {
        StepRecord {
            rule: e.rule,
            position: e.position.clone(),
            before: self.nodes[e.from].clone(),
            after: self.nodes[e.to].clone(),
        }
    }

    /// `None` when the graph is truncated. A complete finite graph is confluent
    /// iff every node reaches exactly one terminal strongly connected component.
    pub fn confluent(&self) -> Option<bool> {
        if self.truncated {
            return None;
        }
        let n = self.nodes.len();
        let mut succ = vec![Vec::new(); n];
        for e in &self.edges {
            succ[e.from].push(e.to);
        }
        let comp = tarjan(&succ);
        let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
        // tarjan numbers components in reverse topological order: successors first
        let mut bottom: Vec<Option<usize>> = vec![None; ncomp];
        let mut members = vec![Vec::new(); ncomp];
        for v in 0..n {
            members[comp[v]].push(v);
        }
        for c in 0..ncomp {
            let mut reached: Option<usize> = None;
            for &v in &members[c] {
                for &w in &succ[v] {
                    if comp[w] == c {
                        continue;
                    }
                    let b = bottom[comp[w]].expect("successor component processed");
                    match reached {
                        None => reached = Some(b),
                        Some(r) if r != b => return Some(false),
                        _ => {}
                    }
                }
            }
            bottom[c] = Some(reached.unwrap_or(c));
        }
        Some(true)
    }
}

/// Strongly connected components; component ids are assigned sinks first.
fn tarjan(succ: &[Vec<usize>]) -> Vec<usize> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        // iterative depth-first search: (node, next successor slot)
        let mut work = vec![(root, 0usize)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = work.last_mut() {
            if *i < succ[v].len() {
                let w = succ[v][*i];
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(u, _)) = work.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// Breadth-first closure of one-step reducts, identified up to α. Exploration
/// stops at depth `fuel` or after `node_cap` nodes, marking the graph truncated.
pub fn reduction_graph(t: &Term, fuel: usize, node_cap: usize) -> Result<RedGraph, ReductionError> {
    if t.has_omega() {
        return Err(ReductionError::OmegaPresent);
    }
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut nodes = vec![t.clone()];
    let mut depth = vec![0usize];
    index.insert(print_term(t), 0);
    let mut edges = Vec::new();
    let mut truncated = false;
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let redexes = redex_positions(&nodes[i])?;
        if redexes.is_empty() {
            continue;
        }
        if depth[i] >= fuel {
            truncated = true;
            continue;
        }
        let mut seen_here = BTreeSet::new();
        for (pos, rule) in redexes {
            let after = step_with(&nodes[i], &pos, rule)?;
            let key = print_term(&after);
            let j = match index.get(&key) {
                Some(&j) => j,
                None => {
                    if nodes.len() >= node_cap {
                        truncated = true;
                        continue;
                    }
                    let j = nodes.len();
                    index.insert(key, j);
                    nodes.push(after);
                    depth.push(depth[i] + 1);
                    queue.push_back(j);
                    j
                }
            };
            if seen_here.insert((j, rule, pos.clone())) {
                edges.push(GraphEdge {
                    from: i,
                    to: j,
                    rule,
                    position: pos,
                });
            }
        }
    }
    Ok(RedGraph {
        nodes,
        edges,
        truncated,
    })
}
