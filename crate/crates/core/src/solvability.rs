//! Solvability: find a canonical form, type it with a product tail, check
//! that the environment and argument bags are inhabited, and build a
//! verified head context.

use crate::inhabitation::inhabit_mset;
use crate::reduction::{is_canonical, lo_step, ReductionError};
use crate::syntax::{print_term, print_term_raw, Name, Pattern, Term};
use crate::typesys::{
    fin, synth_canonical, synth_canonical_with_tail, Derivation, Judgment, MType, TypeEnv,
    TypeError, TypeExpr,
};
use serde_json::{json, Value};
use std::fmt;

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("witness `{0}` is not closed")]
    OpenWitness(String),
}

/// `(λx_k.…((λx_1.□) u_1)…) u_k) v_1 … v_m`
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct HeadCtx {
    /// `(x_i, u_i)`, innermost first.
    pub binders: Vec<(Name, Term)>,
    pub args: Vec<Term>,
}

impl HeadCtx {
    pub fn hole() -> HeadCtx {
        HeadCtx::default()
    }

    pub fn plug(&self, t: &Term) -> Term {
        let inner = self.binders.iter().fold(t.clone(), |acc, (x, u)| {
            Term::app(Term::abs(Pattern::Var(x.clone()), acc), u.clone())
        });
        self.args
            .iter()
            .fold(inner, |acc, v| Term::app(acc, v.clone()))
    }
}

impl fmt::Display for HeadCtx {
    /// The hole prints as `[]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term_raw(&self.plug(&Term::Var(Name::raw("[]")))))
    }
}

/// A typing `Γ ⊢ c : C₁ → … → Cₙ → σ` with `σ` a product.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CandidateTyping {
    pub env: TypeEnv,
    pub args: Vec<MType>,
    pub tail: TypeExpr,
    pub derivation: Derivation,
}

impl CandidateTyping {
    pub fn ty(&self) -> TypeExpr {
        TypeExpr::arrows(self.args.iter().cloned(), self.tail.clone())
    }

    /// Environment bags in name order, then argument bags.
    fn bags(&self) -> impl Iterator<Item = &MType> {
        self.env.iter().map(|(_, a)| a).chain(&self.args)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FailedTyping {
    pub typing: CandidateTyping,
    /// The first bag with no closed inhabitant.
    pub uninhabited: MType,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SolveVerdict {
    Solvable {
        canonical: Term,
        witness: HeadCtx,
        typing: Judgment,
        reduct: Term,
    },
    UnsolvableWithinBound {
        canonical: Term,
        failed: Vec<FailedTyping>,
    },
    Unknown {
        reason: String,
    },
}

impl SolveVerdict {
    pub fn is_solvable(&self) -> bool {
        matches!(self, SolveVerdict::Solvable { .. })
    }

    pub fn to_json(&self) -> Value {
        match self {
            SolveVerdict::Solvable {
                canonical,
                witness,
                typing,
                reduct,
            } => json!({
                "verdict": "solvable",
                "canonical": print_term(canonical),
                "witness": witness.to_string(),
                "typing": typing.to_string(),
                "reduct": print_term(reduct),
            }),
            SolveVerdict::UnsolvableWithinBound { canonical, failed } => json!({
                "verdict": "unsolvable-within-bound",
                "canonical": print_term(canonical),
                "failed": failed.iter().map(|f| json!({
                    "env": f.typing.env.to_string(),
                    "type": f.typing.ty().to_string(),
                    "uninhabited": f.uninhabited.to_string(),
                })).collect::<Vec<_>>(),
            }),
            SolveVerdict::Unknown { reason } => json!({ "verdict": "unknown", "reason": reason }),
        }
    }
}

/// Reduces leftmost-outermost until a canonical form appears.
pub fn find_canonical(t: &Term, fuel: usize) -> Result<Option<(Term, Derivation)>, SolveError> {
    let mut cur = t.clone();
    for step in 0..=fuel {
        if is_canonical(&cur) {
            let d = synth_canonical(&cur, None)?;
            return Ok(Some((cur, d)));
        }
        if step == fuel {
            break;
        }
        match lo_step(&cur)? {
            Some(rec) => cur = rec.after,
            None => break,
        }
    }
    Ok(None)
}

/// Product tails tried for head variables outside matchings, simplest first.
fn tails(bound: usize) -> Vec<TypeExpr> {
    let o = || MType::single(TypeExpr::o());
    let mut out = vec![TypeExpr::o()];
    let mut k = 1;
    while out.len() <= bound {
        let ok = MType::new(vec![TypeExpr::o(); k]);
        out.push(TypeExpr::Product(ok.clone(), MType::empty()));
        out.push(TypeExpr::Product(MType::empty(), ok));
        if k == 1 {
            out.push(TypeExpr::Product(o(), o()));
        }
        k += 1;
    }
    out.truncate(bound + 1);
    out
}

/// Typings of a canonical form with a product tail: the minimal one first,
/// then up to `bound` refinements of the tail demanded from head variables.
pub fn candidate_typings(c: &Term, bound: usize) -> Result<Vec<CandidateTyping>, SolveError> {
    if !is_canonical(c) {
        return Err(TypeError::Invalid(format!("`{c}` is not a canonical form")).into());
    }
    let mut out: Vec<CandidateTyping> = Vec::new();
    for tail in tails(bound) {
        let d = synth_canonical_with_tail(c, &tail)?;
        let (args, last) = d.ty().unarrow();
        debug_assert_eq!(fin(d.ty()), last);
        if !last.is_product() {
            continue;
        }
        let cand = CandidateTyping {
            env: d.env.clone(),
            args,
            tail: last,
            derivation: d,
        };
        if !out
            .iter()
            .any(|o| o.env == cand.env && o.args == cand.args && o.tail == cand.tail)
        {
            out.push(cand);
        }
    }
    Ok(out)
}

/// Replaces every `Ω` by `fail`.
fn instantiate(t: &Term) -> Term {
    match t {
        Term::Omega => Term::Fail,
        Term::Var(_) | Term::Fail => t.clone(),
        Term::Abs(p, b) => Term::abs(p.clone(), instantiate(b)),
        Term::Pair(a, b) => Term::pair(instantiate(a), instantiate(b)),
        Term::App(a, b) => Term::app(instantiate(a), instantiate(b)),
        Term::Match(b, p, a) => Term::matching(instantiate(b), p.clone(), instantiate(a)),
    }
}

/// Binds each variable to its witness (in the given order, innermost first),
/// then applies the argument witnesses. `Ω` in witnesses becomes `fail`.
pub fn build_head_context(env: &[(Name, Term)], args: &[Term]) -> Result<HeadCtx, SolveError> {
    let close = |t: &Term| {
        if t.is_closed() {
            Ok(instantiate(t))
        } else {
            Err(SolveError::OpenWitness(print_term(t)))
        }
    };
    Ok(HeadCtx {
        binders: env
            .iter()
            .map(|(x, u)| Ok((x.clone(), close(u)?)))
            .collect::<Result<_, SolveError>>()?,
        args: args.iter().map(close).collect::<Result<_, _>>()?,
    })
}

/// The first pair reached from `H⟦t⟧` by leftmost-outermost reduction.
pub fn witness_reduct(h: &HeadCtx, t: &Term, fuel: usize) -> Option<Term> {
    let mut cur = h.plug(t);
    if !cur.is_closed() || cur.has_omega() {
        return None;
    }
    for step in 0..=fuel {
        if matches!(cur, Term::Pair(..)) {
            return Some(cur);
        }
        if step == fuel {
            break;
        }
        cur = lo_step(&cur).ok()??.after;
    }
    None
}

pub fn verify_witness(h: &HeadCtx, t: &Term, fuel: usize) -> bool {
    witness_reduct(h, t, fuel).is_some()
}

fn witness(a: &MType) -> Option<Term> {
    inhabit_mset(&TypeEnv::new(), a)
        .members()
        .first()
        .map(|i| i.term.clone())
}

pub fn solve(t: &Term, fuel: usize, bound: usize) -> Result<SolveVerdict, SolveError> {
    if t.has_omega() {
        return Err(ReductionError::OmegaPresent.into());
    }
    let Some((canonical, _)) = find_canonical(t, fuel)? else {
        return Ok(SolveVerdict::Unknown {
            reason: format!("no canonical form within {fuel} steps"),
        });
    };
    let mut failed = Vec::new();
    let mut unverified = false;
    for cand in candidate_typings(&canonical, bound)? {
        if let Some(bad) = cand.bags().find(|a| witness(a).is_none()) {
            failed.push(FailedTyping {
                uninhabited: bad.clone(),
                typing: cand.clone(),
            });
            continue;
        }
        let env: Vec<(Name, Term)> = cand
            .env
            .iter()
            .map(|(x, a)| (x.clone(), witness(a).expect("checked above")))
            .collect();
        let args: Vec<Term> = cand
            .args
            .iter()
            .map(|a| witness(a).expect("checked above"))
            .collect();
        let h = build_head_context(&env, &args)?;
        match witness_reduct(&h, t, fuel) {
            Some(reduct) => {
                return Ok(SolveVerdict::Solvable {
                    canonical,
                    witness: h,
                    typing: cand.derivation.judgment(),
                    reduct,
                })
            }
            None => unverified = true,
        }
    }
    if unverified {
        return Ok(SolveVerdict::Unknown {
            reason: format!("witness did not reach a pair within {fuel} steps"),
        });
    }
    Ok(SolveVerdict::UnsolvableWithinBound { canonical, failed })
}
