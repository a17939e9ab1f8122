//! Goal-directed inhabitation: given `Γ` and `σ`, every anf `a` with
//! `Π ▷ Γ ⊢ a : σ` and `a = 𝒜(Π)`.

use crate::syntax::{is_l, join, print_term, Name, Pattern, Term};
use crate::typesys::{fin, transport, Derivation, MType, TypeEnv, TypeExpr};
use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum InhabError {
    #[error("`{0}` is not a head-variable spine")]
    NotAHead(String),
    #[error("`{0}` does not inhabit the given head judgment")]
    NotAnInhabitant(String),
}

/// A pattern together with the environment it binds.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PatResult {
    pub env: TypeEnv,
    pub pattern: Pattern,
}

/// An anf with a derivation whose minimal approximant it is.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Inhabitant {
    pub term: Term,
    pub derivation: Derivation,
}

/// Inhabitants deduplicated up to α and sorted by canonical printing.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct InhabSet {
    members: Vec<Inhabitant>,
}

impl InhabSet {
    fn from_vec(mut v: Vec<Inhabitant>) -> InhabSet {
        let mut keyed: Vec<(String, Inhabitant)> =
            v.drain(..).map(|i| (print_term(&i.term), i)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.dedup_by(|a, b| a.0 == b.0);
        InhabSet {
            members: keyed.into_iter().map(|(_, i)| i).collect(),
        }
    }

    pub fn members(&self) -> &[Inhabitant] {
        &self.members
    }

    pub fn anfs(&self) -> Vec<&Term> {
        self.members.iter().map(|i| &i.term).collect()
    }

    /// Canonical printings, in order.
    pub fn printed(&self) -> Vec<String> {
        self.members.iter().map(|i| print_term(&i.term)).collect()
    }

    /// Membership up to α.
    pub fn contains(&self, t: &Term) -> bool {
        let key = print_term(t);
        self.members.iter().any(|i| print_term(&i.term) == key)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Inhabitant> {
        self.members.iter()
    }
}

static MEASURE_CHECKS: AtomicU64 = AtomicU64::new(0);

/// How many call edges have had their goal measure checked so far.
pub fn measure_checks() -> u64 {
    MEASURE_CHECKS.load(Ordering::Relaxed)
}

/// Size of a `T` or `L` goal.
pub fn goal_measure(env: &TypeEnv, s: &TypeExpr) -> usize {
    env.measure() + s.measure()
}

/// Size of an `M` goal.
pub fn mset_goal_measure(env: &TypeEnv, a: &MType) -> usize {
    env.measure() + a.measure()
}

/// Aborts unless the measure strictly decreases along a call edge.
fn edge(from: usize, to: usize) {
    MEASURE_CHECKS.fetch_add(1, Ordering::Relaxed);
    assert!(
        to < from,
        "inhabitation goal measure did not decrease: {from} -> {to}"
    );
}

fn fresh_var(forbidden: &BTreeSet<Name>) -> Name {
    (0..)
        .map(|k| Name::raw(format!("x{k}")))
        .find(|n| !forbidden.contains(n))
        .expect("unbounded name supply")
}

/// Every `(Δ, p)` with `Δ ⊩ p : A` and no variable of `p` in `forbidden`.
pub fn patterns_for(a: &MType, forbidden: &BTreeSet<Name>) -> Vec<PatResult> {
    let x = fresh_var(forbidden);
    let mut out = vec![PatResult {
        env: TypeEnv::single(x.clone(), a.clone()),
        pattern: Pattern::Var(x),
    }];
    if let Some((b, c)) = a.as_single_product() {
        for left in patterns_for(b, forbidden) {
            let mut f2 = forbidden.clone();
            f2.extend(left.pattern.vars());
            for right in patterns_for(c, &f2) {
                out.push(PatResult {
                    env: left.env.sum(&right.env),
                    pattern: Pattern::pair(left.pattern.clone(), right.pattern),
                });
            }
        }
    }
    out
}

/// Ordered `k`-tuples of environments summing to `g`, each once.
pub fn env_splits(g: &TypeEnv, k: usize) -> Vec<Vec<TypeEnv>> {
    if k == 0 {
        return if g.is_empty() {
            vec![Vec::new()]
        } else {
            Vec::new()
        };
    }
    let mut acc = vec![vec![TypeEnv::new(); k]];
    for (x, bag) in g.iter() {
        let parts = bag_splits(bag, k);
        acc = acc
            .into_iter()
            .flat_map(|envs| {
                parts.iter().map(move |p| {
                    let mut e = envs.clone();
                    for (slot, b) in e.iter_mut().zip(p) {
                        slot.set(x.clone(), b.clone());
                    }
                    e
                })
            })
            .collect();
    }
    acc
}

/// Ordered `k`-tuples of bags whose union is `a`.
fn bag_splits(a: &MType, k: usize) -> Vec<Vec<MType>> {
    let mut acc: Vec<Vec<Vec<TypeExpr>>> = vec![vec![Vec::new(); k]];
    for t in a.distinct() {
        let c = a.count(t);
        let comps = compositions(c, k);
        acc = acc
            .into_iter()
            .flat_map(|slots| {
                comps.iter().map(move |comp| {
                    let mut s = slots.clone();
                    for (slot, &m) in s.iter_mut().zip(comp) {
                        slot.extend(std::iter::repeat_n(t.clone(), m));
                    }
                    s
                })
            })
            .collect();
    }
    acc.into_iter()
        .map(|s| s.into_iter().map(MType::new).collect())
        .collect()
}

/// `k`-tuples of naturals summing to `n`.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return if n == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    if k == 1 {
        return vec![vec![n]];
    }
    (0..=n)
        .flat_map(|first| {
            compositions(n - first, k - 1)
                .into_iter()
                .map(move |mut rest| {
                    rest.insert(0, first);
                    rest
                })
        })
        .collect()
}

type Memo<K> = HashMap<K, Rc<Vec<Inhabitant>>>;

#[derive(Default)]
struct Solver {
    terms: Memo<(TypeEnv, TypeExpr)>,
    msets: Memo<(TypeEnv, MType)>,
}

fn without_one(g: &TypeEnv, x: &Name, s: &TypeExpr) -> TypeEnv {
    let mut rest = g.clone();
    rest.set(
        x.clone(),
        g.get(x).remove_one(s).expect("member of the bag"),
    );
    rest
}

fn head(x: &Name, s: &TypeExpr) -> Inhabitant {
    Inhabitant {
        term: Term::Var(x.clone()),
        derivation: Derivation::ax(x.clone(), s.clone()),
    }
}

impl Solver {
    /// `T(Γ, σ)`
    fn t(&mut self, g: &TypeEnv, s: &TypeExpr, parent: usize) -> Rc<Vec<Inhabitant>> {
        let me = goal_measure(g, s);
        edge(parent, me);
        let key = (g.clone(), s.clone());
        if let Some(r) = self.terms.get(&key) {
            return r.clone();
        }
        let mut out = Vec::new();
        if let TypeExpr::Arrow(a, tau) = s {
            edge(me, a.measure());
            let dom: BTreeSet<Name> = g.dom().cloned().collect();
            for pr in patterns_for(a, &dom) {
                for b in self.t(&g.sum(&pr.env), tau, me).iter() {
                    out.push(Inhabitant {
                        term: Term::abs(pr.pattern.clone(), b.term.clone()),
                        derivation: Derivation::abs(pr.pattern.clone(), b.derivation.clone()),
                    });
                }
            }
        }
        if let TypeExpr::Product(a, b) = s {
            for split in env_splits(g, 2) {
                let left = self.m(&split[0], a, me);
                if left.is_empty() {
                    continue;
                }
                let right = self.m(&split[1], b, me);
                for l in left.iter() {
                    for r in right.iter() {
                        out.push(Inhabitant {
                            term: Term::pair(l.term.clone(), r.term.clone()),
                            derivation: Derivation::pair(
                                l.derivation.clone(),
                                r.derivation.clone(),
                            ),
                        });
                    }
                }
            }
        }
        for (x, bag) in g.iter() {
            for s2 in bag.distinct() {
                let rest = without_one(g, x, s2);
                self.l(head(x, s2), &rest, s2, s, me, &mut out);
            }
        }
        for (x, bag) in g.iter() {
            for s2 in bag.distinct() {
                let f = fin(s2);
                if !f.is_product() {
                    continue;
                }
                let rest = without_one(g, x, s2);
                let fbag = MType::single(f.clone());
                let dom: BTreeSet<Name> = g.dom().cloned().collect();
                for split in env_splits(&rest, 2) {
                    let (g0, lam) = (&split[0], &split[1]);
                    let mut cs = Vec::new();
                    self.l(head(x, s2), g0, s2, &f, me, &mut cs);
                    if cs.is_empty() {
                        continue;
                    }
                    edge(me, fbag.measure());
                    for pr in patterns_for(&fbag, &dom)
                        .into_iter()
                        .filter(|pr| pr.pattern.is_pair())
                    {
                        for b in self.t(&pr.env.sum(lam), s, me).iter() {
                            for c in &cs {
                                let arg =
                                    Derivation::many(c.term.clone(), vec![c.derivation.clone()]);
                                let derivation =
                                    Derivation::sub(b.derivation.clone(), pr.pattern.clone(), arg)
                                        .expect("pattern typed at the head's product");
                                out.push(Inhabitant {
                                    term: Term::matching(
                                        b.term.clone(),
                                        pr.pattern.clone(),
                                        c.term.clone(),
                                    ),
                                    derivation,
                                });
                            }
                        }
                    }
                }
            }
        }
        let r = Rc::new(InhabSet::from_vec(out).members);
        self.terms.insert(key, r.clone());
        r
    }

    /// `L^b(Γ, σ) ▷ τ`, where `b` has type `σ`.
    fn l(
        &mut self,
        b: Inhabitant,
        g: &TypeEnv,
        s: &TypeExpr,
        tau: &TypeExpr,
        parent: usize,
        out: &mut Vec<Inhabitant>,
    ) {
        let me = goal_measure(g, s);
        edge(parent, me);
        if let TypeExpr::Arrow(a, s2) = s {
            for split in env_splits(g, 2) {
                for arg in self.m(&split[0], a, me).iter() {
                    let derivation = Derivation::app(b.derivation.clone(), arg.derivation.clone())
                        .expect("argument typed at the head's domain");
                    let next = Inhabitant {
                        term: Term::app(b.term.clone(), arg.term.clone()),
                        derivation,
                    };
                    self.l(next, &split[1], s2, tau, me, out);
                }
            }
        }
        if g.is_empty() && s == tau {
            out.push(b);
        }
    }

    /// `M(Γ, A)`; members carry `many` derivations.
    fn m(&mut self, g: &TypeEnv, a: &MType, parent: usize) -> Rc<Vec<Inhabitant>> {
        let me = mset_goal_measure(g, a);
        edge(parent, me);
        let key = (g.clone(), a.clone());
        if let Some(r) = self.msets.get(&key) {
            return r.clone();
        }
        let mut out = Vec::new();
        if a.is_empty() {
            if g.is_empty() {
                out.push(Inhabitant {
                    term: Term::Omega,
                    derivation: Derivation::many(Term::Omega, Vec::new()),
                });
            }
        } else {
            for split in env_splits(g, a.len()) {
                let mut partial: Vec<(Term, Vec<Derivation>)> = vec![(Term::Omega, Vec::new())];
                for (gi, si) in split.iter().zip(a.items()) {
                    if partial.is_empty() {
                        break;
                    }
                    let ts = self.t(gi, si, me);
                    let mut next = Vec::new();
                    for (acc, ds) in &partial {
                        for inh in ts.iter() {
                            if let Some(j) = join(acc, &inh.term) {
                                let mut ds2 = ds.clone();
                                ds2.push(inh.derivation.clone());
                                next.push((j, ds2));
                            }
                        }
                    }
                    partial = next;
                }
                for (j, ds) in partial {
                    let prems = ds
                        .iter()
                        .map(|d| transport(d, &j).expect("component lies below the join"))
                        .collect();
                    out.push(Inhabitant {
                        derivation: Derivation::many(j.clone(), prems),
                        term: j,
                    });
                }
            }
        }
        let r = Rc::new(InhabSet::from_vec(out).members);
        self.msets.insert(key, r.clone());
        r
    }
}

/// `T(Γ, σ)`
pub fn inhabit(g: &TypeEnv, s: &TypeExpr) -> InhabSet {
    InhabSet {
        members: Solver::default().t(g, s, usize::MAX).to_vec(),
    }
}

/// `M(Γ, A)`
pub fn inhabit_mset(g: &TypeEnv, a: &MType) -> InhabSet {
    InhabSet {
        members: Solver::default().m(g, a, usize::MAX).to_vec(),
    }
}

/// `L^b_Δ(Γ, σ) ▷ τ` for a head spine `b` inhabiting `Δ ⊢ b : σ`.
pub fn head_search(
    b: &Term,
    delta: &TypeEnv,
    g: &TypeEnv,
    s: &TypeExpr,
    tau: &TypeExpr,
) -> Result<InhabSet, InhabError> {
    if !is_l(b) {
        return Err(InhabError::NotAHead(print_term(b)));
    }
    let mut solver = Solver::default();
    let start = match b {
        Term::Var(x) if *delta == TypeEnv::single(x.clone(), MType::single(s.clone())) => {
            head(x, s)
        }
        _ => {
            let key = print_term(b);
            solver
                .t(delta, s, usize::MAX)
                .iter()
                .find(|i| print_term(&i.term) == key)
                .cloned()
                .ok_or_else(|| InhabError::NotAnInhabitant(key))?
        }
    };
    let mut out = Vec::new();
    solver.l(start, g, s, tau, usize::MAX, &mut out);
    Ok(InhabSet::from_vec(out))
}

pub fn is_inhabited_mset(a: &MType) -> bool {
    !inhabit_mset(&TypeEnv::new(), a).is_empty()
}

/// Every binding's bag is inhabited by a closed anf.
pub fn is_inhabited_env(g: &TypeEnv) -> bool {
    g.iter().all(|(_, a)| is_inhabited_mset(a))
}

/// A closed anf inhabiting `A`, if any.
pub fn inhabited_witness(a: &MType) -> Option<Term> {
    inhabit_mset(&TypeEnv::new(), a)
        .members
        .into_iter()
        .next()
        .map(|i| i.term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_term, print_pattern};
    use crate::typesys::{
        check_derivation, minimal_approximant, parse_env, parse_mtype, parse_type, Object,
    };

    fn ty(s: &str) -> TypeExpr {
        parse_type(s).unwrap()
    }

    fn m(s: &str) -> MType {
        parse_mtype(s).unwrap()
    }

    fn printed(set: &InhabSet) -> Vec<String> {
        let mut v = set.printed();
        v.sort();
        v
    }

    fn expect(set: &InhabSet, terms: &[&str]) {
        let mut want: Vec<String> = terms
            .iter()
            .map(|s| print_term(&parse_term(s).unwrap()))
            .collect();
        want.sort();
        assert_eq!(printed(set), want);
    }

    fn sound(g: &TypeEnv, s: &TypeExpr, set: &InhabSet) {
        for i in set.iter() {
            let j = check_derivation(&i.derivation).unwrap();
            assert_eq!(&j.env, g);
            assert_eq!(j.object, Object::Type(s.clone()));
            assert_eq!(&minimal_approximant(&i.derivation).unwrap(), &i.term);
        }
    }

    #[test]
    fn pattern_enumeration() {
        let none = BTreeSet::new();
        let r = patterns_for(&MType::empty(), &none);
        assert_eq!(r.len(), 1);
        assert_eq!(print_pattern(&r[0].pattern), "x0");
        assert!(r[0].env.is_empty());

        let r = patterns_for(&m("[o]"), &none);
        let shown: Vec<String> = r
            .iter()
            .map(|p| format!("{} {}", p.env, p.pattern))
            .collect();
        assert_eq!(shown, ["x0:[o] x0", " <x0,x1>"]);

        assert_eq!(patterns_for(&m("[a, b]"), &none).len(), 1);

        let forb: BTreeSet<Name> = [Name::new("x0").unwrap()].into();
        assert_eq!(
            print_pattern(&patterns_for(&m("[o]"), &forb)[1].pattern),
            "<x1,x2>"
        );
    }

    #[test]
    fn splits() {
        let g = parse_env("x:[a]").unwrap();
        assert_eq!(env_splits(&g, 2).len(), 2);
        let g = parse_env("x:[a,a]").unwrap();
        assert_eq!(env_splits(&g, 2).len(), 3);
        assert_eq!(
            env_splits(&TypeEnv::new(), 2),
            vec![vec![TypeEnv::new(), TypeEnv::new()]]
        );
        assert_eq!(env_splits(&TypeEnv::new(), 0).len(), 1);
        assert!(env_splits(&g, 0).is_empty());
        let g = parse_env("x:[a,b], y:[c]").unwrap();
        assert_eq!(env_splits(&g, 3).len(), 27);
    }

    #[test]
    fn example_goals() {
        let g = TypeEnv::new();
        let s = ty("[[a]->a]->[a]->a");
        let r = inhabit(&g, &s);
        expect(&r, &["\\x.\\y.x y", "\\x.x"]);
        sound(&g, &s, &r);

        let s = ty("[[]->a]->a");
        let r = inhabit(&g, &s);
        expect(&r, &["\\x.x _"]);
        sound(&g, &s, &r);

        assert!(inhabit(&g, &ty("a")).is_empty());
    }

    #[test]
    fn case_three_contains_listed_outputs() {
        let g = TypeEnv::new();
        let s = ty("[[o]->o, o]->o");
        let r = inhabit(&g, &s);
        sound(&g, &s, &r);
        for a in [
            "\\x.x x",
            "\\x.x[<y,z>/x <_,_>]",
            "\\x.(x <_,_>)[<y,z>/x]",
            "\\x.<_,_>[<y,z>/x x]",
            "\\x.<_,_>[<y,z>/x][<w,s>/x <_,_>]",
            "\\x.<_,_>[<y,z>/x <_,_>][<w,s>/x]",
        ] {
            assert!(
                r.contains(&parse_term(a).unwrap()),
                "{a} missing from {:?}",
                r.printed()
            );
        }
    }

    #[test]
    fn multisets() {
        let g = TypeEnv::new();
        expect(&inhabit_mset(&g, &MType::empty()), &["_"]);
        expect(&inhabit_mset(&g, &m("[o]")), &["<_,_>"]);
        assert!(inhabit_mset(&g, &m("[o, []->o]")).is_empty());
        assert!(inhabit_mset(&parse_env("x:[a]").unwrap(), &MType::empty()).is_empty());
        let r = inhabit_mset(&g, &m("[<[[a]->a],[]>, <[],[[]->o]>]"));
        expect(&r, &["<\\x.x, \\y.<_,_>>"]);
        for i in r.iter() {
            check_derivation(&i.derivation).unwrap();
            assert_eq!(minimal_approximant(&i.derivation).unwrap(), i.term);
        }
    }

    #[test]
    fn head_searches() {
        let x = Name::new("x").unwrap();
        let t = |s: &str| parse_term(s).unwrap();
        let single = |s: &str| TypeEnv::single(x.clone(), MType::single(ty(s)));
        let r = head_search(&t("x"), &single("a"), &TypeEnv::new(), &ty("a"), &ty("a")).unwrap();
        expect(&r, &["x"]);
        let r = head_search(
            &t("x"),
            &single("[]->a"),
            &TypeEnv::new(),
            &ty("[]->a"),
            &ty("a"),
        )
        .unwrap();
        expect(&r, &["x _"]);
        let r = head_search(
            &t("x"),
            &single("[a]->a"),
            &parse_env("y:[a]").unwrap(),
            &ty("[a]->a"),
            &ty("a"),
        )
        .unwrap();
        expect(&r, &["x y"]);
        assert!(head_search(
            &t("\\y.y"),
            &TypeEnv::new(),
            &TypeEnv::new(),
            &ty("a"),
            &ty("a")
        )
        .is_err());
    }

    #[test]
    fn inhabitedness() {
        assert!(is_inhabited_mset(&MType::empty()));
        assert_eq!(inhabited_witness(&MType::empty()), Some(Term::Omega));
        assert!(!is_inhabited_mset(&m("[o, []->o]")));
        let w = inhabited_witness(&m("[[]->[]->o]")).unwrap();
        assert_eq!(print_term(&w), "\\x0.\\x1.<_,_>");
        assert!(is_inhabited_env(&parse_env("x:[o], y:[[]->o]").unwrap()));
        assert!(!is_inhabited_env(&parse_env("x:[o, []->o]").unwrap()));
    }

    #[test]
    fn measure_is_checked() {
        let before = measure_checks();
        inhabit(&TypeEnv::new(), &ty("[[a]->a]->[a]->a"));
        assert!(measure_checks() > before);
    }
}
