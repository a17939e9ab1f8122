//! Derivation-level counterparts of substitution and reduction, synthesis of
//! typings for canonical forms, purification and minimal approximants.

use super::derivation::{typed_occurrences, Derivation, Rule};
use super::{pattern_type, MType, TypeError, TypeExpr};
use crate::reduction::{is_canonical, is_k, root_rules, second_binder_renames, step_with, RuleId};
use crate::syntax::{
    binder_renames, join, plan_binder, substitute_all, BinderPlan, Name, Pattern, Position, Step,
    Term,
};
use std::collections::{BTreeMap, BTreeSet};

fn invalid(msg: impl Into<String>) -> TypeError {
    TypeError::Invalid(msg.into())
}

/// What a substituted variable becomes inside a derivation.
#[derive(Clone)]
enum Repl {
    /// Axioms draw a derivation of matching type from the pool.
    Pool(usize),
    Rename(Name),
}

struct Subst {
    pools: Vec<(Term, Vec<Derivation>)>,
}

impl Subst {
    fn term_sigma(&self, sigma: &BTreeMap<Name, Repl>) -> BTreeMap<Name, Term> {
        sigma
            .iter()
            .map(|(x, r)| {
                let t = match r {
                    Repl::Pool(i) => self.pools[*i].0.clone(),
                    Repl::Rename(y) => Term::Var(y.clone()),
                };
                (x.clone(), t)
            })
            .collect()
    }

    /// Follows `plan_binder` exactly, so the result's subject equals the
    /// term-level substitution.
    fn enter(
        &self,
        p: &Pattern,
        body: &Term,
        sigma: &BTreeMap<Name, Repl>,
    ) -> Option<(BTreeMap<Name, Repl>, Vec<(Name, Name)>)> {
        match plan_binder(p, body, &self.term_sigma(sigma)) {
            BinderPlan::Skip => None,
            BinderPlan::Enter {
                sigma: inner,
                renames,
            } => {
                let mut out: BTreeMap<Name, Repl> = inner
                    .keys()
                    .filter(|k| !p.binds(k))
                    .map(|k| (k.clone(), sigma[k].clone()))
                    .collect();
                for (v, v2) in &renames {
                    out.insert(v.clone(), Repl::Rename(v2.clone()));
                }
                Some((out, renames))
            }
        }
    }

    fn go(
        &mut self,
        d: &Derivation,
        sigma: &BTreeMap<Name, Repl>,
    ) -> Result<Derivation, TypeError> {
        if sigma.is_empty() {
            return Ok(d.clone());
        }
        let t = d.term();
        match (d.rule, t) {
            (Rule::Ax, Term::Var(x)) => match sigma.get(x) {
                None => Ok(d.clone()),
                Some(Repl::Rename(y)) => Ok(Derivation::ax(y.clone(), d.ty().clone())),
                Some(Repl::Pool(i)) => {
                    let pool = &mut self.pools[*i].1;
                    let k = pool.iter().position(|u| u.ty() == d.ty()).ok_or_else(|| {
                        invalid(format!("no derivation of type {} left for `{x}`", d.ty()))
                    })?;
                    Ok(pool.remove(k))
                }
            },
            (Rule::Many, _) => {
                let t2 = substitute_all(t, &self.term_sigma(sigma));
                let prems = d
                    .premises
                    .iter()
                    .map(|p| self.go(p, sigma))
                    .collect::<Result<_, _>>()?;
                Ok(Derivation::many(t2, prems))
            }
            (Rule::Abs, Term::Abs(p, b)) => match self.enter(p, b, sigma) {
                None => Ok(d.clone()),
                Some((inner, renames)) => {
                    let body = self.go(&d.premises[0], &inner)?;
                    Ok(Derivation::abs(p.rename(&renames), body))
                }
            },
            (Rule::App, _) => {
                let f = self.go(&d.premises[0], sigma)?;
                let a = self.go(&d.premises[1], sigma)?;
                Derivation::app(f, a)
            }
            (Rule::Pair, _) => {
                let l = self.go(&d.premises[0], sigma)?;
                let r = self.go(&d.premises[1], sigma)?;
                Ok(Derivation::pair(l, r))
            }
            (Rule::Sub, Term::Match(b, p, _)) => {
                let arg = self.go(&d.premises[2], sigma)?;
                match self.enter(p, b, sigma) {
                    None => Derivation::sub(d.premises[0].clone(), p.clone(), arg),
                    Some((inner, renames)) => {
                        let body = self.go(&d.premises[0], &inner)?;
                        Derivation::sub(body, p.rename(&renames), arg)
                    }
                }
            }
            _ => Err(invalid(format!(
                "cannot substitute into a `{}` node",
                d.rule
            ))),
        }
    }
}

/// From `Γ; x:A ⊢ t : τ` and a `many` derivation of `u : A`, builds
/// `Γ + Γu ⊢ t{x/u} : τ`.
pub fn subst_derivation(
    pt: &Derivation,
    x: &Name,
    pu: &Derivation,
) -> Result<Derivation, TypeError> {
    if pu.rule != Rule::Many {
        return Err(invalid("the substituted derivation must be a `many` node"));
    }
    if pt.env.get(x) != *pu.bag() {
        return Err(invalid(format!(
            "`{x}` is used at {} but the argument has {}",
            pt.env.get(x),
            pu.bag()
        )));
    }
    let mut s = Subst {
        pools: vec![(pu.term().clone(), pu.premises.clone())],
    };
    let sigma = BTreeMap::from([(x.clone(), Repl::Pool(0))]);
    let out = s.go(pt, &sigma)?;
    if !s.pools[0].1.is_empty() {
        return Err(invalid(format!("unused argument derivations for `{x}`")));
    }
    Ok(out)
}

fn rename_derivation(d: &Derivation, renames: &[(Name, Name)]) -> Result<Derivation, TypeError> {
    let sigma = renames
        .iter()
        .map(|(a, b)| (a.clone(), Repl::Rename(b.clone())))
        .collect();
    Subst { pools: Vec::new() }.go(d, &sigma)
}

/// Derivation counterpart of renaming a matching chain's binders away from `avoid`.
fn freshen_chain_d(d: &Derivation, avoid: &BTreeSet<Name>) -> Result<Derivation, TypeError> {
    match (d.rule, d.term()) {
        (Rule::Sub, Term::Match(b, p, _)) => {
            let renames = binder_renames(p, b, avoid);
            let body = rename_derivation(&d.premises[0], &renames)?;
            let body = freshen_chain_d(&body, avoid)?;
            Derivation::sub(body, p.rename(&renames), d.premises[2].clone())
        }
        _ => Ok(d.clone()),
    }
}

/// Splits a chain of `sub` nodes into (pattern, argument) pairs, innermost first, and the core.
fn peel_chain(d: Derivation) -> (Vec<(Pattern, Derivation)>, Derivation) {
    let mut chain = Vec::new();
    let mut cur = d;
    while cur.rule == Rule::Sub {
        let Term::Match(_, p, _) = cur.term().clone() else {
            unreachable!()
        };
        let mut prems = cur.premises;
        let arg = prems.pop().expect("sub has three premises");
        prems.pop();
        chain.push((p, arg));
        cur = prems.pop().expect("sub has three premises");
    }
    chain.reverse();
    (chain, cur)
}

fn wrap_chain(
    core: Derivation,
    chain: Vec<(Pattern, Derivation)>,
) -> Result<Derivation, TypeError> {
    chain
        .into_iter()
        .try_fold(core, |acc, (p, a)| Derivation::sub(acc, p, a))
}

/// Rewrites the derivation along a reduction step at `pos`, using the first
/// rule that applies there.
pub fn step_derivation(d: &Derivation, pos: &Position) -> Result<Derivation, TypeError> {
    let sub = d
        .term()
        .subterm(pos)
        .ok_or_else(|| invalid(format!("no subterm at {pos}")))?;
    let rule = *root_rules(sub)
        .first()
        .ok_or_else(|| invalid(format!("no redex at {pos}")))?;
    step_derivation_with(d, pos, rule)
}

/// Rewrites the derivation along the step by `rule` at `pos`.
pub fn step_derivation_with(
    d: &Derivation,
    pos: &Position,
    rule: RuleId,
) -> Result<Derivation, TypeError> {
    step_rec(d, &pos.0, rule)
}

fn step_rec(d: &Derivation, path: &[Step], rule: RuleId) -> Result<Derivation, TypeError> {
    if d.rule == Rule::Many {
        let t2 = step_with(d.term(), &Position(path.to_vec()), rule)
            .map_err(|e| invalid(e.to_string()))?;
        let prems = d
            .premises
            .iter()
            .map(|p| step_rec(p, path, rule))
            .collect::<Result<_, _>>()?;
        return Ok(Derivation::many(t2, prems));
    }
    let Some((s, rest)) = path.split_first() else {
        return step_root(d, rule);
    };
    let pr = &d.premises;
    match (d.rule, d.term(), s) {
        (Rule::Abs, Term::Abs(p, _), Step::AbsBody) => {
            Ok(Derivation::abs(p.clone(), step_rec(&pr[0], rest, rule)?))
        }
        (Rule::App, _, Step::AppFun) => {
            Derivation::app(step_rec(&pr[0], rest, rule)?, pr[1].clone())
        }
        (Rule::App, _, Step::AppArg) => {
            Derivation::app(pr[0].clone(), step_rec(&pr[1], rest, rule)?)
        }
        (Rule::Pair, _, Step::PairLeft) => Ok(Derivation::pair(
            step_rec(&pr[0], rest, rule)?,
            pr[1].clone(),
        )),
        (Rule::Pair, _, Step::PairRight) => Ok(Derivation::pair(
            pr[0].clone(),
            step_rec(&pr[1], rest, rule)?,
        )),
        (Rule::Sub, Term::Match(_, p, _), Step::MatchBody) => {
            Derivation::sub(step_rec(&pr[0], rest, rule)?, p.clone(), pr[2].clone())
        }
        (Rule::Sub, Term::Match(_, p, _), Step::MatchArg) => {
            Derivation::sub(pr[0].clone(), p.clone(), step_rec(&pr[2], rest, rule)?)
        }
        _ => Err(invalid(format!(
            "position step `{}` does not fit a `{}` node",
            s.label(),
            d.rule
        ))),
    }
}

fn step_root(d: &Derivation, rule: RuleId) -> Result<Derivation, TypeError> {
    let t = d.term();
    if !root_rules(t).contains(&rule) {
        return Err(invalid(format!("{rule} does not apply at this node")));
    }
    if rule.is_failure() {
        return Err(invalid(format!(
            "failure rule {rule} at a typed occurrence"
        )));
    }
    let pr = &d.premises;
    match (rule, t) {
        (RuleId::Beta, Term::App(_, u)) => {
            let f = freshen_chain_d(&pr[0], &u.free_vars())?;
            let (chain, core) = peel_chain(f);
            let Term::Abs(p, _) = core.term().clone() else {
                return Err(invalid("beta redex without an abstraction"));
            };
            let body = core.premises.into_iter().next().expect("abs has a body");
            wrap_chain(Derivation::sub(body, p, pr[1].clone())?, chain)
        }
        (RuleId::Subst, Term::Match(_, Pattern::Var(x), _)) => subst_derivation(&pr[0], x, &pr[2]),
        (RuleId::MatchPair, Term::Match(s, Pattern::Pair(p1, p2), _)) => {
            let [ud] = pr[2].premises.as_slice() else {
                return Err(invalid("pair pattern argument must be typed once"));
            };
            let mut avoid = s.free_vars();
            avoid.extend(p1.vars());
            avoid.extend(p2.vars());
            let (chain, core) = peel_chain(freshen_chain_d(ud, &avoid)?);
            let Term::Pair(u1, _) = core.term() else {
                return Err(invalid("pair matching without a pair"));
            };
            let renames = second_binder_renames(p2, &u1.free_vars(), &avoid);
            let body = rename_derivation(&pr[0], &renames)?;
            let mut halves = core.premises.into_iter();
            let (m1, m2) = (halves.next().expect("left"), halves.next().expect("right"));
            let inner = Derivation::sub(body, (**p1).clone(), m1)?;
            wrap_chain(Derivation::sub(inner, p2.rename(&renames), m2)?, chain)
        }
        _ => Err(invalid(format!("{rule} does not apply at this node"))),
    }
}

/// A derivation for a canonical form. `𝒦`-forms take `target` when given;
/// everything else uses the atom `a` as the tail of head-variable types.
pub fn synth_canonical(t: &Term, target: Option<&TypeExpr>) -> Result<Derivation, TypeError> {
    if !is_canonical(t) {
        return Err(invalid(format!("`{t}` is not a canonical form")));
    }
    match target {
        Some(s) if is_k(t) => synth_k(t, s),
        _ => synth_j(t, &TypeExpr::atom("a")),
    }
}

/// Like [`synth_canonical`], with `tail` as the result type of every head
/// variable outside matching arguments.
pub fn synth_canonical_with_tail(t: &Term, tail: &TypeExpr) -> Result<Derivation, TypeError> {
    if !is_canonical(t) {
        return Err(invalid(format!("`{t}` is not a canonical form")));
    }
    synth_j(t, tail)
}

fn synth_j(t: &Term, tail: &TypeExpr) -> Result<Derivation, TypeError> {
    if is_k(t) {
        return synth_k(t, tail);
    }
    match t {
        Term::Abs(p, b) => Ok(Derivation::abs(p.clone(), synth_j(b, tail)?)),
        Term::Pair(a, b) => Ok(Derivation::pair(
            Derivation::many((**a).clone(), Vec::new()),
            Derivation::many((**b).clone(), Vec::new()),
        )),
        Term::Match(b, p, k) => synth_match(synth_j(b, tail)?, p, k),
        _ => Err(invalid(format!("`{t}` is not a canonical form"))),
    }
}

fn synth_k(t: &Term, s: &TypeExpr) -> Result<Derivation, TypeError> {
    match t {
        Term::Var(x) => Ok(Derivation::ax(x.clone(), s.clone())),
        Term::App(f, a) => {
            let fd = synth_k(f, &TypeExpr::arrow(MType::empty(), s.clone()))?;
            Derivation::app(fd, Derivation::many((**a).clone(), Vec::new()))
        }
        Term::Match(b, p, k) => synth_match(synth_k(b, s)?, p, k),
        _ => Err(invalid(format!("`{t}` is not a head-variable form"))),
    }
}

/// Types `k` at the product the pattern demands and closes the matching.
fn synth_match(body: Derivation, p: &Pattern, k: &Term) -> Result<Derivation, TypeError> {
    let a = pattern_type(&body.env.restrict(p), p)?;
    let [pi] = a.items() else {
        return Err(invalid(format!(
            "pattern `{p}` does not force a single product"
        )));
    };
    let kd = synth_k(k, pi)?;
    Derivation::sub(body, p.clone(), Derivation::many(k.clone(), vec![kd]))
}

/// Rewires nested matchings `t0[p/u[q/v]]` into `t0[p/u][q/v]`, giving a pure
/// canonical form typed with the same judgment.
pub fn purify(t: &Term, d: &Derivation) -> Result<(Term, Derivation), TypeError> {
    if d.term() != t {
        return Err(invalid("derivation subject differs from the term"));
    }
    if !is_canonical(t) {
        return Err(invalid(format!("`{t}` is not a canonical form")));
    }
    let out = purify_j(d)?;
    Ok((out.term().clone(), out))
}

fn purify_j(d: &Derivation) -> Result<Derivation, TypeError> {
    if is_k(d.term()) {
        return purify_k(d);
    }
    match (d.rule, d.term()) {
        (Rule::Abs, Term::Abs(p, _)) => Ok(Derivation::abs(p.clone(), purify_j(&d.premises[0])?)),
        (Rule::Pair, _) => Ok(d.clone()),
        (Rule::Sub, Term::Match(_, p, _)) => {
            float_matching(purify_j(&d.premises[0])?, p, &d.premises[2])
        }
        _ => Err(invalid(format!(
            "unexpected `{}` node in a canonical form",
            d.rule
        ))),
    }
}

/// Returns a derivation of `L⟦k′⟧` with `k′` and every chain argument pure.
fn purify_k(d: &Derivation) -> Result<Derivation, TypeError> {
    match (d.rule, d.term()) {
        (Rule::Ax, _) => Ok(d.clone()),
        (Rule::App, Term::App(_, u)) => {
            let f = freshen_chain_d(&purify_k(&d.premises[0])?, &u.free_vars())?;
            let (chain, core) = peel_chain(f);
            wrap_chain(Derivation::app(core, d.premises[1].clone())?, chain)
        }
        (Rule::Sub, Term::Match(_, p, _)) => {
            float_matching(purify_k(&d.premises[0])?, p, &d.premises[2])
        }
        _ => Err(invalid(format!(
            "unexpected `{}` node in a head-variable form",
            d.rule
        ))),
    }
}

/// `b[p/L⟦k⟧]` becomes `b[p/k]L`, with `L`'s binders renamed clear of `b` and `p`.
fn float_matching(
    body: Derivation,
    p: &Pattern,
    arg: &Derivation,
) -> Result<Derivation, TypeError> {
    let [kd] = arg.premises.as_slice() else {
        return Err(invalid("pair pattern argument must be typed once"));
    };
    let mut avoid = body.term().free_vars();
    avoid.extend(p.vars());
    let k = freshen_chain_d(&purify_k(kd)?, &avoid)?;
    let (chain, core) = peel_chain(k);
    let inner = Derivation::sub(
        body,
        p.clone(),
        Derivation::many(core.term().clone(), vec![core]),
    )?;
    wrap_chain(inner, chain)
}

/// `𝒜(Π)`: typed parts kept, untyped arguments replaced by `Ω`, and the
/// branches of each `many` joined.
pub fn minimal_approximant(d: &Derivation) -> Result<Term, TypeError> {
    if !d.rule.is_type_rule() && d.rule != Rule::Many {
        return Err(invalid("pattern judgments have no approximant"));
    }
    let t = d.term();
    for pos in typed_occurrences(d) {
        let sub = t
            .subterm(&pos)
            .expect("typed occurrence inside the subject");
        if !root_rules(sub).is_empty() {
            return Err(invalid(format!(
                "subject has a redex at typed occurrence {pos}"
            )));
        }
    }
    approx(d)
}

fn approx(d: &Derivation) -> Result<Term, TypeError> {
    let pr = &d.premises;
    Ok(match (d.rule, d.term()) {
        (Rule::Ax, t) => t.clone(),
        (Rule::Abs, Term::Abs(p, _)) => Term::abs(p.clone(), approx(&pr[0])?),
        (Rule::App, _) => Term::app(approx(&pr[0])?, approx(&pr[1])?),
        (Rule::Pair, _) => Term::pair(approx(&pr[0])?, approx(&pr[1])?),
        (Rule::Sub, Term::Match(_, p, _)) => {
            Term::matching(approx(&pr[0])?, p.clone(), approx(&pr[2])?)
        }
        (Rule::Many, _) => {
            let mut acc = Term::Omega;
            for p in pr {
                acc =
                    join(&acc, &approx(p)?).ok_or_else(|| invalid("incompatible approximants"))?;
            }
            acc
        }
        _ => return Err(invalid(format!("malformed `{}` node", d.rule))),
    })
}

/// Moves `d` onto `target`, a term above its subject in the approximation
/// order: untyped parts take the target's subterms and binders take the
/// target's names.
pub fn transport(d: &Derivation, target: &Term) -> Result<Derivation, TypeError> {
    transport_rec(d, target, &mut Vec::new())
}

fn transport_rec(
    d: &Derivation,
    target: &Term,
    scope: &mut Vec<(Name, Name)>,
) -> Result<Derivation, TypeError> {
    let mismatch = || invalid(format!("cannot move a `{}` node onto `{target}`", d.rule));
    let pr = &d.premises;
    let bind = |scope: &mut Vec<(Name, Name)>, p: &Pattern, q: &Pattern| {
        scope.extend(p.vars().into_iter().zip(q.vars()));
    };
    match (d.rule, d.term(), target) {
        (Rule::Many, _, _) => {
            let prems = pr
                .iter()
                .map(|p| transport_rec(p, target, scope))
                .collect::<Result<_, _>>()?;
            Ok(Derivation::many(target.clone(), prems))
        }
        (Rule::Ax, Term::Var(x), Term::Var(y)) => {
            let mapped = scope
                .iter()
                .rev()
                .find(|(a, _)| a == x)
                .map_or(x, |(_, b)| b);
            if mapped != y {
                return Err(mismatch());
            }
            Ok(Derivation::ax(y.clone(), d.ty().clone()))
        }
        (Rule::Abs, Term::Abs(p, _), Term::Abs(q, tb)) if p.same_shape(q) => {
            let n = scope.len();
            bind(scope, p, q);
            let body = transport_rec(&pr[0], tb, scope);
            scope.truncate(n);
            Ok(Derivation::abs(q.clone(), body?))
        }
        (Rule::App, _, Term::App(tf, ta)) => Derivation::app(
            transport_rec(&pr[0], tf, scope)?,
            transport_rec(&pr[1], ta, scope)?,
        ),
        (Rule::Pair, _, Term::Pair(ta, tb)) => Ok(Derivation::pair(
            transport_rec(&pr[0], ta, scope)?,
            transport_rec(&pr[1], tb, scope)?,
        )),
        (Rule::Sub, Term::Match(_, p, _), Term::Match(tb, q, tu)) if p.same_shape(q) => {
            let arg = transport_rec(&pr[2], tu, scope)?;
            let n = scope.len();
            bind(scope, p, q);
            let body = transport_rec(&pr[0], tb, scope);
            scope.truncate(n);
            Derivation::sub(body?, q.clone(), arg)
        }
        _ => Err(mismatch()),
    }
}
