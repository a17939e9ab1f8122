//! Random well-typed derivations built bottom-up from the typing rules.

use lambdap::syntax::{parse_term, Name, Pattern, Term};
use lambdap::typesys::{check_derivation, Derivation, MType, TypeExpr};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 5] = ["x", "y", "z", "u", "v"];

/// Closed and open subjects placed where the type system ignores them.
const UNTYPED: [&str; 12] = [
    "fail",
    "x",
    "(\\a.a) b",
    "(\\<a,b>.a) (\\c.c)",
    "(\\x.x x) (\\x.x x)",
    "z[<a,b>/<y,fail>]",
    "fail u",
    "z[<a,b>/\\c.c]",
    "<x,y> z",
    "z[<a,b>/fail]",
    "fail[<a,b>/y]",
    "\\a.fail",
];

pub struct DerivGen {
    rng: ChaCha8Rng,
}

fn var(s: &str) -> Name {
    Name::new(s).unwrap()
}

impl DerivGen {
    pub fn new(seed: u64) -> DerivGen {
        DerivGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn pick_var(&mut self) -> Name {
        var(VARS.choose(&mut self.rng).unwrap())
    }

    fn pattern(&mut self) -> Pattern {
        if self.rng.gen_bool(0.6) {
            Pattern::Var(self.pick_var())
        } else {
            let mut vs = VARS.to_vec();
            vs.shuffle(&mut self.rng);
            Pattern::pair(Pattern::Var(var(vs[0])), Pattern::Var(var(vs[1])))
        }
    }

    pub fn ty(&mut self, depth: usize) -> TypeExpr {
        let k = if depth == 0 {
            self.rng.gen_range(0..3)
        } else {
            self.rng.gen_range(0..5)
        };
        match k {
            0 => TypeExpr::atom("a"),
            1 => TypeExpr::atom("b"),
            2 => TypeExpr::o(),
            3 => TypeExpr::arrow(self.bag(depth - 1), self.ty(depth - 1)),
            _ => TypeExpr::Product(self.bag(depth - 1), self.bag(depth - 1)),
        }
    }

    pub fn bag(&mut self, depth: usize) -> MType {
        let n = self.rng.gen_range(0..3);
        MType::new((0..n).map(|_| self.ty(depth)).collect())
    }

    fn untyped(&mut self) -> Term {
        parse_term(UNTYPED.choose(&mut self.rng).unwrap()).unwrap()
    }

    /// A `many` node for `a`.
    pub fn bag_deriv(&mut self, a: &MType, depth: usize) -> Derivation {
        if a.is_empty() {
            return Derivation::many(self.untyped(), vec![]);
        }
        let first = &a.items()[0];
        if depth > 0 && a.items().iter().all(|s| s == first) && self.rng.gen_bool(0.6) {
            let d = self.typed(first, depth - 1);
            return Derivation::many(d.term().clone(), vec![d; a.len()]);
        }
        let x = self.pick_var();
        Derivation::many(
            Term::Var(x.clone()),
            a.items()
                .iter()
                .map(|s| Derivation::ax(x.clone(), s.clone()))
                .collect(),
        )
    }

    /// A derivation with object `s`, often containing a redex.
    pub fn typed(&mut self, s: &TypeExpr, depth: usize) -> Derivation {
        let choice = if depth == 0 {
            0
        } else {
            self.rng.gen_range(0..7)
        };
        match (choice, s) {
            (1, TypeExpr::Arrow(a, t)) if a.is_empty() => {
                let body = self.typed(t, depth - 1);
                let fresh = VARS.iter().map(|v| var(v)).find(|v| !body.env.contains(v));
                match fresh {
                    Some(x) => Derivation::abs(Pattern::Var(x), body),
                    None => Derivation::ax(self.pick_var(), s.clone()),
                }
            }
            (1, TypeExpr::Arrow(a, t)) if a.len() == 1 && a.items()[0] == **t => {
                let x = self.pick_var();
                Derivation::abs(Pattern::Var(x.clone()), Derivation::ax(x, (**t).clone()))
            }
            (2, TypeExpr::Product(a, b)) => {
                let l = self.bag_deriv(a, depth - 1);
                let r = self.bag_deriv(b, depth - 1);
                Derivation::pair(l, r)
            }
            (3, _) => {
                // (λp.t) u
                let body = self.typed(s, depth - 1);
                let f = Derivation::abs(self.pattern(), body);
                let TypeExpr::Arrow(a, _) = f.ty().clone() else {
                    unreachable!()
                };
                let arg = self.bag_deriv(&a, depth - 1);
                Derivation::app(f, arg).unwrap()
            }
            (4, _) => {
                // t[p/u]
                let body = self.typed(s, depth - 1);
                let p = self.pattern();
                let pat = Derivation::pattern(&body.env.restrict(&p), &p);
                let a = pat.bag().clone();
                let arg = if p.is_pair() && a.len() == 1 && self.rng.gen_bool(0.7) {
                    let TypeExpr::Product(l, r) = &a.items()[0] else {
                        unreachable!()
                    };
                    let pd = Derivation::pair(
                        self.bag_deriv(l, depth - 1),
                        self.bag_deriv(r, depth - 1),
                    );
                    Derivation::many(pd.term().clone(), vec![pd])
                } else {
                    self.bag_deriv(&a, depth - 1)
                };
                Derivation::sub(body, p, arg).unwrap()
            }
            (5, _) => {
                // x applied to arguments
                let a = self.bag(1);
                let x = self.pick_var();
                let f = Derivation::ax(x, TypeExpr::arrow(a.clone(), s.clone()));
                let arg = self.bag_deriv(&a, depth - 1);
                Derivation::app(f, arg).unwrap()
            }
            (6, _) => {
                // t[<u,v>/w]: a list context around a typed term
                let d = self.typed(s, depth - 1);
                let p = Pattern::pair(Pattern::Var(var("u")), Pattern::Var(var("v")));
                let pat = Derivation::pattern(&d.env.restrict(&p), &p);
                let arg = self.bag_deriv(&pat.bag().clone(), 0);
                Derivation::sub(d, p, arg).unwrap()
            }
            _ => Derivation::ax(self.pick_var(), s.clone()),
        }
    }

    /// A checked derivation whose subject has at most `max_size` constructors.
    pub fn checked(&mut self, max_size: usize) -> Derivation {
        loop {
            let depth = self.rng.gen_range(1..4);
            let s = self.ty(1);
            let d = self.typed(&s, depth);
            if d.term().size() <= max_size && check_derivation(&d).is_ok() {
                return d;
            }
        }
    }
}
