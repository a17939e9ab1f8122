//! Approximate normal forms: `a ::= Ω | N`, `N ::= λp.N | ⟨a,b⟩ | L | N[⟨p,q⟩/L]`,
//! `L ::= x | L a`, ordered by the contextual closure of `Ω ≤ a`.

use super::{alpha_walk, fresh_name, substitute_all, Name, Pattern, Term};
use std::collections::{BTreeMap, BTreeSet};

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum AnfError {
    #[error("not an approximate normal form: {0}")]
    NotAnf(String),
}

pub fn is_anf(t: &Term) -> bool {
    matches!(t, Term::Omega) || is_n(t)
}

fn is_n(t: &Term) -> bool {
    match t {
        Term::Abs(_, b) => is_n(b),
        Term::Pair(a, b) => is_anf(a) && is_anf(b),
        Term::Match(b, p, a) => p.is_pair() && is_n(b) && is_l(a),
        _ => is_l(t),
    }
}

pub(crate) fn is_l(t: &Term) -> bool {
    match t {
        Term::Var(_) => true,
        Term::App(f, a) => is_l(f) && is_anf(a),
        _ => false,
    }
}

fn require(t: &Term) -> Result<(), AnfError> {
    if is_anf(t) {
        Ok(())
    } else {
        Err(AnfError::NotAnf(super::print_term(t)))
    }
}

pub fn anf_leq(a: &Term, b: &Term) -> Result<bool, AnfError> {
    require(a)?;
    require(b)?;
    Ok(leq(a, b))
}

/// `a ≤ b` up to α, for arbitrary terms.
pub(crate) fn leq(a: &Term, b: &Term) -> bool {
    alpha_walk(a, b, true, &mut Vec::new(), &mut Vec::new())
}

/// Least upper bound; `Ok(None)` when the family is not compatible.
pub fn anf_lub(items: &[Term]) -> Result<Option<Term>, AnfError> {
    for t in items {
        require(t)?;
    }
    let mut acc = Term::Omega;
    for t in items {
        match join(&acc, t) {
            Some(j) => acc = j,
            None => return Ok(None),
        }
    }
    Ok(Some(acc))
}

/// Binary join of two terms under the order generated by `Ω ≤ t`.
pub(crate) fn join(a: &Term, b: &Term) -> Option<Term> {
    if matches!(a, Term::Omega) {
        return Some(b.clone());
    }
    if matches!(b, Term::Omega) {
        return Some(a.clone());
    }
    let mut free: BTreeSet<Name> = a.free_vars();
    free.extend(b.free_vars());
    let mut j = Joiner {
        free,
        sa: Vec::new(),
        sb: Vec::new(),
    };
    j.go(a, b)
}

struct Joiner {
    free: BTreeSet<Name>,
    /// (name in a, name in result)
    sa: Vec<(Name, Name)>,
    /// (name in b, name in result)
    sb: Vec<(Name, Name)>,
}

fn lookup(scope: &[(Name, Name)], x: &Name) -> Option<Name> {
    scope
        .iter()
        .rev()
        .find(|(a, _)| a == x)
        .map(|(_, r)| r.clone())
}

/// Applies the in-scope renaming to a subterm copied into the result.
fn transfer(t: &Term, scope: &[(Name, Name)]) -> Term {
    let mut sigma = BTreeMap::new();
    for x in t.free_vars() {
        if let Some(r) = lookup(scope, &x) {
            if r != x {
                sigma.insert(x, Term::Var(r));
            }
        }
    }
    substitute_all(t, &sigma)
}

impl Joiner {
    fn go(&mut self, a: &Term, b: &Term) -> Option<Term> {
        match (a, b) {
            (Term::Omega, Term::Omega) => Some(Term::Omega),
            (Term::Omega, t) => Some(transfer(t, &self.sb)),
            (t, Term::Omega) => Some(transfer(t, &self.sa)),
            (Term::Fail, Term::Fail) => Some(Term::Fail),
            (Term::Var(x), Term::Var(y)) => {
                let rx = lookup(&self.sa, x).unwrap_or_else(|| x.clone());
                let ry = lookup(&self.sb, y).unwrap_or_else(|| y.clone());
                (rx == ry).then_some(Term::Var(rx))
            }
            (Term::Pair(a1, a2), Term::Pair(b1, b2)) => {
                Some(Term::pair(self.go(a1, b1)?, self.go(a2, b2)?))
            }
            (Term::App(a1, a2), Term::App(b1, b2)) => {
                Some(Term::app(self.go(a1, b1)?, self.go(a2, b2)?))
            }
            (Term::Abs(p, s), Term::Abs(q, t)) => {
                if !p.same_shape(q) {
                    return None;
                }
                let (na, nb) = (self.sa.len(), self.sb.len());
                let r = self.bind(p, q);
                let body = self.go(s, t);
                self.sa.truncate(na);
                self.sb.truncate(nb);
                Some(Term::abs(r, body?))
            }
            (Term::Match(s, p, u), Term::Match(t, q, v)) => {
                if !p.same_shape(q) {
                    return None;
                }
                let arg = self.go(u, v)?;
                let (na, nb) = (self.sa.len(), self.sb.len());
                let r = self.bind(p, q);
                let body = self.go(s, t);
                self.sa.truncate(na);
                self.sb.truncate(nb);
                Some(Term::matching(body?, r, arg))
            }
            _ => None,
        }
    }

    /// Chooses result names for corresponding binders, keeping `p`'s names when safe.
    fn bind(&mut self, p: &Pattern, q: &Pattern) -> Pattern {
        let mut map = Vec::new();
        for (x, y) in p.vars().into_iter().zip(q.vars()) {
            let taken = |n: &Name| {
                self.free.contains(n)
                    || self.sa.iter().any(|(_, r)| r == n)
                    || self.sb.iter().any(|(_, r)| r == n)
                    || map.iter().any(|(_, r): &(Name, Name)| r == n)
            };
            let r = if taken(&x) {
                fresh_name(&x, taken)
            } else {
                x.clone()
            };
            map.push((x, r));
            let _ = y;
        }
        for ((x, r), y) in map.iter().zip(q.vars()) {
            self.sa.push((x.clone(), r.clone()));
            self.sb.push((y, r.clone()));
        }
        p.rename(&map)
    }
}
