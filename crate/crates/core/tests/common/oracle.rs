//! Brute-force enumeration and typing of approximate normal forms, written
//! without the library's derivation machinery. Terms share subterms through
//! `Rc`; each typing consumes a pool of variable assumptions and yields the
//! approximant of the derivation it found.

use lambdap::syntax::{Name, Pattern, Term};
use lambdap::typesys::{MType, TypeEnv, TypeExpr};
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

/// Variables are indices: free names first, then binders `v0, v1, …`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Pat {
    V(u32),
    P(u32, u32),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum T {
    Var(u32),
    Omega,
    Abs(Pat, Rc<T>),
    Pair(Rc<T>, Rc<T>),
    App(Rc<T>, Rc<T>),
    Match(Rc<T>, Pat, Rc<T>),
}

/// Remaining assumptions, indexed by variable.
type Pool = Vec<Vec<TypeExpr>>;

fn take(pool: &Pool, x: u32, s: &TypeExpr) -> Pool {
    let mut p = pool.clone();
    let bag = &mut p[x as usize];
    let i = bag.iter().position(|t| t == s).unwrap();
    bag.remove(i);
    p
}

/// Assumptions introduced by a pattern receiving bag `a`.
fn bind(p: Pat, a: &MType) -> Option<Vec<(u32, Vec<TypeExpr>)>> {
    match p {
        Pat::V(x) => Some(vec![(x, a.items().to_vec())]),
        Pat::P(x, y) => {
            let [TypeExpr::Product(b, c)] = a.items() else {
                return None;
            };
            Some(vec![(x, b.items().to_vec()), (y, c.items().to_vec())])
        }
    }
}

fn extend(pool: &Pool, binds: &[(u32, Vec<TypeExpr>)]) -> Pool {
    let mut p = pool.clone();
    for (x, a) in binds {
        let x = *x as usize;
        if p.len() <= x {
            p.resize(x + 1, Vec::new());
        }
        debug_assert!(p[x].is_empty());
        p[x] = a.clone();
    }
    p
}

fn consumed(pool: &Pool, binds: &[(u32, Vec<TypeExpr>)]) -> bool {
    binds
        .iter()
        .all(|(x, _)| pool.get(*x as usize).map_or(true, Vec::is_empty))
}

fn exhausted(pool: &Pool) -> bool {
    pool.iter().all(Vec::is_empty)
}

/// `Ω ⊔ t = t`; otherwise structural.
fn join(a: &Rc<T>, b: &Rc<T>) -> Option<Rc<T>> {
    Some(match (&**a, &**b) {
        (T::Omega, _) => b.clone(),
        (_, T::Omega) => a.clone(),
        (T::Var(x), T::Var(y)) if x == y => a.clone(),
        (T::Abs(p, s), T::Abs(q, t)) if p == q => Rc::new(T::Abs(*p, join(s, t)?)),
        (T::Pair(a1, a2), T::Pair(b1, b2)) => Rc::new(T::Pair(join(a1, b1)?, join(a2, b2)?)),
        (T::App(a1, a2), T::App(b1, b2)) => Rc::new(T::App(join(a1, b1)?, join(a2, b2)?)),
        (T::Match(a1, p, a2), T::Match(b1, q, b2)) if p == q => {
            Rc::new(T::Match(join(a1, b1)?, *p, join(a2, b2)?))
        }
        _ => return None,
    })
}

/// Typings of `t` at `s`: remaining pool and approximant.
fn check(pool: &Pool, t: &Rc<T>, s: &TypeExpr) -> Vec<(Pool, Rc<T>)> {
    match (&**t, s) {
        (T::Abs(p, body), TypeExpr::Arrow(a, tau)) => {
            let Some(binds) = bind(*p, a) else {
                return vec![];
            };
            check(&extend(pool, &binds), body, tau)
                .into_iter()
                .filter(|(rest, _)| consumed(rest, &binds))
                .map(|(rest, ab)| (rest, Rc::new(T::Abs(*p, ab))))
                .collect()
        }
        (T::Pair(l, r), TypeExpr::Product(a, b)) => {
            let mut out = Vec::new();
            for (p1, al) in check_bag(pool, l, a) {
                for (p2, ar) in check_bag(&p1, r, b) {
                    out.push((p2, Rc::new(T::Pair(al.clone(), ar))));
                }
            }
            out
        }
        (T::Abs(..) | T::Pair(..), _) => vec![],
        (T::Match(body, p, u), _) => {
            let mut out = Vec::new();
            for (p1, ut, au) in synth(pool, u) {
                let Some(binds) = bind(*p, &MType::single(ut)) else {
                    continue;
                };
                for (p2, ab) in check(&extend(&p1, &binds), body, s) {
                    if consumed(&p2, &binds) {
                        out.push((p2, Rc::new(T::Match(ab, *p, au.clone()))));
                    }
                }
            }
            out
        }
        _ => synth(pool, t)
            .into_iter()
            .filter(|(_, ty, _)| ty == s)
            .map(|(p, _, a)| (p, a))
            .collect(),
    }
}

/// Typings of a term in head position, whose type is read off its head variable.
fn synth(pool: &Pool, t: &Rc<T>) -> Vec<(Pool, TypeExpr, Rc<T>)> {
    match &**t {
        T::Var(x) => {
            let bag = pool.get(*x as usize).map(Vec::as_slice).unwrap_or(&[]);
            let mut out: Vec<(Pool, TypeExpr, Rc<T>)> = Vec::new();
            for s in bag {
                if !out.iter().any(|(_, seen, _)| seen == s) {
                    out.push((take(pool, *x, s), s.clone(), t.clone()));
                }
            }
            out
        }
        T::App(f, u) => {
            let mut out = Vec::new();
            for (p1, ft, af) in synth(pool, f) {
                let TypeExpr::Arrow(a, tau) = &ft else {
                    continue;
                };
                for (p2, au) in check_bag(&p1, u, a) {
                    out.push((p2, (**tau).clone(), Rc::new(T::App(af.clone(), au))));
                }
            }
            out
        }
        T::Match(body, p, u) => {
            let mut out = Vec::new();
            for (p1, ut, au) in synth(pool, u) {
                let Some(binds) = bind(*p, &MType::single(ut)) else {
                    continue;
                };
                for (p2, bt, ab) in synth(&extend(&p1, &binds), body) {
                    if consumed(&p2, &binds) {
                        out.push((p2, bt, Rc::new(T::Match(ab, *p, au.clone()))));
                    }
                }
            }
            out
        }
        _ => vec![],
    }
}

/// Typings of `t` at every element of `a`, joined.
fn check_bag(pool: &Pool, t: &Rc<T>, a: &MType) -> Vec<(Pool, Rc<T>)> {
    let mut acc = vec![(pool.clone(), Rc::new(T::Omega))];
    for s in a.items() {
        let mut next = Vec::new();
        for (p, approx) in &acc {
            for (p2, a2) in check(p, t, s) {
                if let Some(j) = join(approx, &a2) {
                    next.push((p2, j));
                }
            }
        }
        acc = next;
    }
    acc
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    /// `J′ ::= λp.J′ | ⟨N,N⟩ | K′ | J′[⟨p,q⟩/K′]`
    J,
    /// `K′ ::= x | K′ N`
    K,
    /// Redex-free terms with `Ω`, without `fail`.
    N,
    /// `M ::= x | M N | M[⟨p,q⟩/M]`
    M,
}

/// Head, matching-body and matching-argument kinds of a production.
fn split(kind: Kind) -> (Kind, Kind, Kind) {
    match kind {
        Kind::J => (Kind::K, Kind::J, Kind::K),
        Kind::K => (Kind::K, Kind::K, Kind::K),
        Kind::N => (Kind::M, Kind::N, Kind::M),
        Kind::M => (Kind::M, Kind::M, Kind::M),
    }
}

/// Sizes above this are streamed instead of stored.
const STORED: usize = 6;

/// Pure-canonical approximate normal forms by size (`Ω` counts zero), over
/// fixed free names. Binders are numbered by depth, so α-variants appear
/// once. Patterns are a variable or a pair of variables.
pub struct AnfEnum {
    free: Vec<Name>,
    env: Pool,
    memo: RefCell<HashMap<(Kind, usize, usize), Rc<Vec<Rc<T>>>>>,
}

impl AnfEnum {
    /// The free names are those of `env`, which also types them.
    pub fn new(env: &TypeEnv) -> AnfEnum {
        let free: Vec<Name> = env.dom().cloned().collect();
        let pool = free.iter().map(|x| env.get(x).items().to_vec()).collect();
        AnfEnum {
            free,
            env: pool,
            memo: RefCell::new(HashMap::new()),
        }
    }

    fn nfree(&self) -> u32 {
        self.free.len() as u32
    }

    /// Calls `f` on every pure-canonical anf of `size`.
    pub fn each_pure_canonical(&self, size: usize, f: &mut dyn FnMut(&Rc<T>)) {
        self.each(Kind::J, size, 0, &mut |t| f(&t))
    }

    /// Approximants of all derivations of `env ⊢ t : s` that use the environment exactly.
    pub fn approximants(&self, t: &Rc<T>, s: &TypeExpr) -> Vec<Rc<T>> {
        let mut out: Vec<Rc<T>> = Vec::new();
        for (rest, a) in check(&self.env, t, s) {
            if exhausted(&rest) && !out.contains(&a) {
                out.push(a);
            }
        }
        out
    }

    /// Whether `t` is the approximant of one of its own derivations.
    pub fn is_own_approximant(&self, t: &Rc<T>, s: &TypeExpr) -> bool {
        check(&self.env, t, s)
            .iter()
            .any(|(rest, a)| exhausted(rest) && a == t)
    }

    fn name(&self, i: u32) -> Name {
        match self.free.get(i as usize) {
            Some(n) => n.clone(),
            None => Name::new(&format!("v{}", i - self.nfree())).unwrap(),
        }
    }

    fn pattern(&self, p: Pat) -> Pattern {
        match p {
            Pat::V(x) => Pattern::Var(self.name(x)),
            Pat::P(x, y) => Pattern::pair(Pattern::Var(self.name(x)), Pattern::Var(self.name(y))),
        }
    }

    pub fn to_term(&self, t: &T) -> Term {
        match t {
            T::Var(x) => Term::Var(self.name(*x)),
            T::Omega => Term::Omega,
            T::Abs(p, b) => Term::abs(self.pattern(*p), self.to_term(b)),
            T::Pair(a, b) => Term::pair(self.to_term(a), self.to_term(b)),
            T::App(a, b) => Term::app(self.to_term(a), self.to_term(b)),
            T::Match(b, p, a) => Term::matching(self.to_term(b), self.pattern(*p), self.to_term(a)),
        }
    }

    fn patterns(&self, bound: usize) -> [(Pat, usize); 2] {
        let v = self.nfree() + bound as u32;
        [(Pat::V(v), 1), (Pat::P(v, v + 1), 2)]
    }

    fn each(&self, kind: Kind, size: usize, bound: usize, f: &mut dyn FnMut(Rc<T>)) {
        if size <= STORED {
            self.gen(kind, size, bound)
                .iter()
                .for_each(|t| f(t.clone()));
            return;
        }
        let (head, body_kind, arg_kind) = split(kind);
        for k in 1..size - 1 {
            self.each(head, k, bound, &mut |h| {
                self.each(Kind::N, size - 1 - k, bound, &mut |x| {
                    f(Rc::new(T::App(h.clone(), x)))
                })
            });
        }
        if kind != Kind::K {
            let (p, _) = self.patterns(bound)[1];
            for k in 1..size - 1 {
                self.each(body_kind, k, bound + 2, &mut |b| {
                    self.each(arg_kind, size - 1 - k, bound, &mut |a| {
                        f(Rc::new(T::Match(b.clone(), p, a)))
                    })
                });
            }
        }
        if matches!(kind, Kind::J | Kind::N) {
            for (p, n) in self.patterns(bound) {
                self.each(kind, size - 1, bound + n, &mut |b| f(Rc::new(T::Abs(p, b))));
            }
            for k in 0..size {
                self.each(Kind::N, k, bound, &mut |l| {
                    self.each(Kind::N, size - 1 - k, bound, &mut |r| {
                        f(Rc::new(T::Pair(l.clone(), r)))
                    })
                });
            }
        }
    }

    fn gen(&self, kind: Kind, size: usize, bound: usize) -> Rc<Vec<Rc<T>>> {
        if let Some(v) = self.memo.borrow().get(&(kind, size, bound)) {
            return Rc::clone(v);
        }
        let mut out = Vec::new();
        if size == 0 && kind == Kind::N {
            out.push(Rc::new(T::Omega));
        }
        if size == 1 {
            out.extend((0..self.nfree() + bound as u32).map(|i| Rc::new(T::Var(i))));
        }
        if size >= 1 {
            let (head, body_kind, arg_kind) = split(kind);
            for k in 1..size.saturating_sub(1) {
                let fs = self.gen(head, k, bound);
                let xs = self.gen(Kind::N, size - 1 - k, bound);
                for f in fs.iter() {
                    for x in xs.iter() {
                        out.push(Rc::new(T::App(f.clone(), x.clone())));
                    }
                }
            }
            if kind != Kind::K {
                let (p, _) = self.patterns(bound)[1];
                for k in 1..size.saturating_sub(1) {
                    let args = self.gen(arg_kind, size - 1 - k, bound);
                    let bodies = self.gen(body_kind, k, bound + 2);
                    for b in bodies.iter() {
                        for a in args.iter() {
                            out.push(Rc::new(T::Match(b.clone(), p, a.clone())));
                        }
                    }
                }
            }
            if matches!(kind, Kind::J | Kind::N) {
                for (p, n) in self.patterns(bound) {
                    for b in self.gen(kind, size - 1, bound + n).iter() {
                        out.push(Rc::new(T::Abs(p, b.clone())));
                    }
                }
                for k in 0..size {
                    let ls = self.gen(Kind::N, k, bound);
                    let rs = self.gen(Kind::N, size - 1 - k, bound);
                    for l in ls.iter() {
                        for r in rs.iter() {
                            out.push(Rc::new(T::Pair(l.clone(), r.clone())));
                        }
                    }
                }
            }
        }
        let out = Rc::new(out);
        self.memo
            .borrow_mut()
            .insert((kind, size, bound), Rc::clone(&out));
        out
    }
}
