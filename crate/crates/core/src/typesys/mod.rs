//! Non-idempotent intersection types: types, multiset types, environments,
//! pattern typing and typing derivations.

mod derivation;
mod transform;

pub use derivation::{
    check_derivation, meas, typed_occurrences, CheckError, Derivation, Judgment, Object, Rule,
    Subject,
};
pub use transform::{
    minimal_approximant, purify, step_derivation, step_derivation_with, subst_derivation,
    synth_canonical, synth_canonical_with_tail, transport,
};

use crate::syntax::{Lexer, Name, Pattern, SyntaxError, Tok};
use std::collections::BTreeMap;
use std::fmt;

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum TypeError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("environment mentions `{0}`, which the pattern does not bind")]
    PatternDomain(Name),
    #[error("pattern `{0}` does not occur in `{1}`")]
    NotOccurring(Pattern, Pattern),
    #[error("multiset {0} is not a singleton product, as pattern `{1}` requires")]
    ShapeMismatch(MType, Pattern),
    #[error("{0}")]
    Invalid(String),
}

/// `σ ::= α | ⟨A,B⟩ | A → σ`. The derived order puts atoms before products
/// before arrows, which fixes the printed order inside bags.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum TypeExpr {
    Atom(Name),
    Product(MType, MType),
    Arrow(MType, Box<TypeExpr>),
}

/// A finite bag of types, stored sorted so that equality ignores order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct MType(Vec<TypeExpr>);

/// Variables mapped to nonempty bags; absent means `[]`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct TypeEnv(BTreeMap<Name, MType>);

impl TypeExpr {
    pub fn atom(n: &str) -> TypeExpr {
        TypeExpr::Atom(Name::new(n).expect("valid atom name"))
    }

    /// `o = ⟨[],[]⟩`.
    pub fn o() -> TypeExpr {
        TypeExpr::Product(MType::empty(), MType::empty())
    }

    pub fn arrow(a: MType, s: TypeExpr) -> TypeExpr {
        TypeExpr::Arrow(a, Box::new(s))
    }

    /// `A₁ → … → Aₙ → tail`.
    pub fn arrows(args: impl IntoIterator<Item = MType>, tail: TypeExpr) -> TypeExpr {
        let args: Vec<MType> = args.into_iter().collect();
        args.into_iter()
            .rev()
            .fold(tail, |acc, a| TypeExpr::arrow(a, acc))
    }

    /// Splits into argument bags and the non-arrow tail.
    pub fn unarrow(&self) -> (Vec<MType>, TypeExpr) {
        let mut args = Vec::new();
        let mut cur = self;
        while let TypeExpr::Arrow(a, s) = cur {
            args.push(a.clone());
            cur = s;
        }
        (args, cur.clone())
    }

    pub fn is_product(&self) -> bool {
        matches!(self, TypeExpr::Product(..))
    }

    pub fn measure(&self) -> usize {
        match self {
            TypeExpr::Atom(_) => 1,
            TypeExpr::Product(a, b) => a.measure() + b.measure() + 1,
            TypeExpr::Arrow(a, s) => a.measure() + s.measure() + 1,
        }
    }
}

/// Strips arrows down to the tail.
pub fn fin(t: &TypeExpr) -> TypeExpr {
    match t {
        TypeExpr::Arrow(_, s) => fin(s),
        other => other.clone(),
    }
}

impl MType {
    pub fn new(mut items: Vec<TypeExpr>) -> MType {
        items.sort();
        MType(items)
    }

    pub fn empty() -> MType {
        MType(Vec::new())
    }

    pub fn single(t: TypeExpr) -> MType {
        MType(vec![t])
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn items(&self) -> &[TypeExpr] {
        &self.0
    }

    /// Distinct members, in order.
    pub fn distinct(&self) -> Vec<&TypeExpr> {
        let mut out: Vec<&TypeExpr> = self.0.iter().collect();
        out.dedup();
        out
    }

    pub fn union(&self, other: &MType) -> MType {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        MType::new(v)
    }

    /// Multiset inclusion.
    pub fn sub(&self, other: &MType) -> bool {
        let mut rest = other.clone();
        self.0.iter().all(|t| match rest.remove_one(t) {
            Some(r) => {
                rest = r;
                true
            }
            None => false,
        })
    }

    /// Removes one occurrence of `t`.
    pub fn remove_one(&self, t: &TypeExpr) -> Option<MType> {
        let i = self.0.iter().position(|s| s == t)?;
        let mut v = self.0.clone();
        v.remove(i);
        Some(MType(v))
    }

    pub fn count(&self, t: &TypeExpr) -> usize {
        self.0.iter().filter(|s| *s == t).count()
    }

    pub fn measure(&self) -> usize {
        1 + self.0.iter().map(TypeExpr::measure).sum::<usize>()
    }

    /// `[⟨A,B⟩]` as `(A, B)`.
    pub fn as_single_product(&self) -> Option<(&MType, &MType)> {
        match self.0.as_slice() {
            [TypeExpr::Product(a, b)] => Some((a, b)),
            _ => None,
        }
    }
}

pub fn mtype_union(a: &MType, b: &MType) -> MType {
    a.union(b)
}

pub fn mtype_sub(a: &MType, b: &MType) -> bool {
    a.sub(b)
}

impl FromIterator<TypeExpr> for MType {
    fn from_iter<I: IntoIterator<Item = TypeExpr>>(iter: I) -> MType {
        MType::new(iter.into_iter().collect())
    }
}

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv(BTreeMap::new())
    }

    pub fn single(x: Name, a: MType) -> TypeEnv {
        let mut e = TypeEnv::new();
        e.set(x, a);
        e
    }

    /// Binds `x`; an empty bag removes the binding.
    pub fn set(&mut self, x: Name, a: MType) {
        if a.is_empty() {
            self.0.remove(&x);
        } else {
            self.0.insert(x, a);
        }
    }

    pub fn get(&self, x: &Name) -> MType {
        self.0.get(x).cloned().unwrap_or_default()
    }

    pub fn contains(&self, x: &Name) -> bool {
        self.0.contains_key(x)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dom(&self) -> impl Iterator<Item = &Name> {
        self.0.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &MType)> {
        self.0.iter()
    }

    pub fn sum(&self, other: &TypeEnv) -> TypeEnv {
        let mut out = self.clone();
        for (x, a) in &other.0 {
            let b = out.get(x).union(a);
            out.set(x.clone(), b);
        }
        out
    }

    /// `Γ|p`
    pub fn restrict(&self, p: &Pattern) -> TypeEnv {
        TypeEnv(
            self.0
                .iter()
                .filter(|(x, _)| p.binds(x))
                .map(|(x, a)| (x.clone(), a.clone()))
                .collect(),
        )
    }

    /// `Γ \ Δ`: drops the bindings of every variable in `dom(Δ)`.
    pub fn minus(&self, other: &TypeEnv) -> TypeEnv {
        TypeEnv(
            self.0
                .iter()
                .filter(|(x, _)| !other.contains(x))
                .map(|(x, a)| (x.clone(), a.clone()))
                .collect(),
        )
    }

    /// Drops the variables bound by `p`.
    pub fn without(&self, p: &Pattern) -> TypeEnv {
        TypeEnv(
            self.0
                .iter()
                .filter(|(x, _)| !p.binds(x))
                .map(|(x, a)| (x.clone(), a.clone()))
                .collect(),
        )
    }

    pub fn measure(&self) -> usize {
        self.0.values().map(MType::measure).sum()
    }

    pub fn rename(&self, from: &Name, to: &Name) -> TypeEnv {
        let mut out = self.clone();
        if let Some(a) = out.0.remove(from) {
            out.set(to.clone(), a);
        }
        out
    }
}

pub fn env_sum(a: &TypeEnv, b: &TypeEnv) -> TypeEnv {
    a.sum(b)
}

pub fn env_restrict(a: &TypeEnv, p: &Pattern) -> TypeEnv {
    a.restrict(p)
}

pub fn env_minus(a: &TypeEnv, b: &TypeEnv) -> TypeEnv {
    a.minus(b)
}

impl FromIterator<(Name, MType)> for TypeEnv {
    fn from_iter<I: IntoIterator<Item = (Name, MType)>>(iter: I) -> TypeEnv {
        let mut e = TypeEnv::new();
        for (x, a) in iter {
            let b = e.get(&x).union(&a);
            e.set(x, b);
        }
        e
    }
}

/// The unique `A` with `Γ ⊩ p : A`.
pub fn pattern_type(env: &TypeEnv, p: &Pattern) -> Result<MType, TypeError> {
    if let Some(x) = env.dom().find(|x| !p.binds(x)) {
        return Err(TypeError::PatternDomain(x.clone()));
    }
    Ok(pattern_type_unchecked(env, p))
}

pub(crate) fn pattern_type_unchecked(env: &TypeEnv, p: &Pattern) -> MType {
    match p {
        Pattern::Var(x) => env.get(x),
        Pattern::Pair(p1, p2) => MType::single(TypeExpr::Product(
            pattern_type_unchecked(env, p1),
            pattern_type_unchecked(env, p2),
        )),
    }
}

/// `A^p_q`: the part of `A` that the subpattern `q` of `p` receives.
pub fn pattern_project(a: &MType, p: &Pattern, q: &Pattern) -> Result<MType, TypeError> {
    if p == q {
        return Ok(a.clone());
    }
    match p {
        Pattern::Var(_) => Err(TypeError::NotOccurring(q.clone(), p.clone())),
        Pattern::Pair(p1, p2) => {
            let in1 = occurs(q, p1);
            if !in1 && !occurs(q, p2) {
                return Err(TypeError::NotOccurring(q.clone(), p.clone()));
            }
            let (b, c) = a
                .as_single_product()
                .ok_or_else(|| TypeError::ShapeMismatch(a.clone(), p.clone()))?;
            if in1 {
                pattern_project(b, p1, q)
            } else {
                pattern_project(c, p2, q)
            }
        }
    }
}

fn occurs(q: &Pattern, p: &Pattern) -> bool {
    q == p
        || match p {
            Pattern::Pair(a, b) => occurs(q, a) || occurs(q, b),
            Pattern::Var(_) => false,
        }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Atom(n) => write!(f, "{n}"),
            TypeExpr::Product(a, b) if a.is_empty() && b.is_empty() => f.write_str("o"),
            TypeExpr::Product(a, b) => write!(f, "<{a},{b}>"),
            TypeExpr::Arrow(a, s) => write!(f, "{a}->{s}"),
        }
    }
}

impl fmt::Display for MType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Display for TypeEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (x, a)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}:{a}")?;
        }
        Ok(())
    }
}

pub fn print_type(t: &TypeExpr) -> String {
    t.to_string()
}

pub fn parse_type(src: &str) -> Result<TypeExpr, TypeError> {
    let mut lx = Lexer::new(src)?;
    let t = type_expr(&mut lx)?;
    lx.finish()?;
    Ok(t)
}

pub fn parse_mtype(src: &str) -> Result<MType, TypeError> {
    let mut lx = Lexer::new(src)?;
    let a = mtype(&mut lx)?;
    lx.finish()?;
    Ok(a)
}

pub fn parse_env(src: &str) -> Result<TypeEnv, TypeError> {
    let mut lx = Lexer::new(src)?;
    let e = env(&mut lx)?;
    lx.finish()?;
    Ok(e)
}

pub(crate) fn type_expr(lx: &mut Lexer) -> Result<TypeExpr, SyntaxError> {
    match lx.peek().clone() {
        Tok::LBrack => {
            let a = mtype(lx)?;
            lx.expect(&Tok::Arrow)?;
            Ok(TypeExpr::arrow(a, type_expr(lx)?))
        }
        Tok::Lt => {
            lx.bump();
            let a = mtype(lx)?;
            lx.expect(&Tok::Comma)?;
            let b = mtype(lx)?;
            lx.expect(&Tok::Gt)?;
            Ok(TypeExpr::Product(a, b))
        }
        Tok::Ident(s) if s == "o" => {
            lx.bump();
            Ok(TypeExpr::o())
        }
        Tok::Ident(_) => Ok(TypeExpr::Atom(lx.name()?)),
        _ => Err(lx.error("expected a type")),
    }
}

pub(crate) fn mtype(lx: &mut Lexer) -> Result<MType, SyntaxError> {
    lx.expect(&Tok::LBrack)?;
    let mut items = Vec::new();
    if !lx.eat(&Tok::RBrack) {
        loop {
            items.push(type_expr(lx)?);
            if lx.eat(&Tok::RBrack) {
                break;
            }
            lx.expect(&Tok::Comma)?;
        }
    }
    Ok(MType::new(items))
}

/// `x:[…], y:[…]`, possibly empty.
pub(crate) fn env(lx: &mut Lexer) -> Result<TypeEnv, SyntaxError> {
    let mut e = TypeEnv::new();
    while matches!(lx.peek(), Tok::Ident(_)) {
        let at = lx.pos();
        let x = lx.name()?;
        lx.expect(&Tok::Colon)?;
        let a = mtype(lx)?;
        if e.contains(&x) {
            return Err(SyntaxError::new(at, format!("`{x}` is bound twice")));
        }
        e.set(x, a);
        if !lx.eat(&Tok::Comma) {
            break;
        }
    }
    Ok(e)
}

/// Parses `ENV |- ? : TYPE`.
pub fn parse_query(src: &str) -> Result<(TypeEnv, TypeExpr), TypeError> {
    let mut lx = Lexer::new(src)?;
    let e = env(&mut lx)?;
    lx.expect(&Tok::Turnstile)?;
    lx.expect(&Tok::Question)?;
    lx.expect(&Tok::Colon)?;
    let t = type_expr(&mut lx)?;
    lx.finish()?;
    Ok((e, t))
}
