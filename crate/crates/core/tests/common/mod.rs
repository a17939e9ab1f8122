#![allow(dead_code)]

pub mod derivations;
pub mod oracle;

use lambdap::syntax::{Name, Pattern, Term};
use lambdap::typesys::{MType, TypeExpr};
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

pub fn name(s: &str) -> Name {
    Name::new(s).unwrap()
}

/// Sizes above this are streamed instead of stored.
const STORED: usize = 6;

/// Exhaustive enumeration of terms by size over a fixed variable pool.
/// Patterns are a variable or a pair of two distinct pool variables.
pub struct Enumerator {
    vars: Vec<Name>,
    patterns: Vec<(Pattern, u32)>,
    closed: bool,
    fail: bool,
    memo: RefCell<HashMap<(usize, u32), Rc<Vec<Term>>>>,
}

impl Enumerator {
    /// `closed` restricts variable occurrences to those bound above them;
    /// `fail` adds the failure constant as an atom.
    pub fn new(vars: &[&str], closed: bool, fail: bool) -> Enumerator {
        let vars: Vec<Name> = vars.iter().map(|v| name(v)).collect();
        let mut patterns = Vec::new();
        for (i, x) in vars.iter().enumerate() {
            patterns.push((Pattern::Var(x.clone()), 1 << i));
        }
        for (i, x) in vars.iter().enumerate() {
            for (j, y) in vars.iter().enumerate() {
                if i != j {
                    patterns.push((
                        Pattern::pair(Pattern::Var(x.clone()), Pattern::Var(y.clone())),
                        (1 << i) | (1 << j),
                    ));
                }
            }
        }
        Enumerator {
            vars,
            patterns,
            closed,
            fail,
            memo: RefCell::new(HashMap::new()),
        }
    }

    fn scope(&self, scope: u32) -> u32 {
        if self.closed {
            scope
        } else {
            (1 << self.vars.len()) - 1
        }
    }

    /// Calls `f` on every term of exactly `size` constructors.
    pub fn each(&self, size: usize, f: &mut dyn FnMut(Term)) {
        self.each_in(size, 0, f)
    }

    pub fn count(&self, size: usize) -> usize {
        let mut n = 0;
        self.each(size, &mut |_| n += 1);
        n
    }

    fn each_in(&self, size: usize, scope: u32, f: &mut dyn FnMut(Term)) {
        let scope = self.scope(scope);
        if size <= STORED {
            self.stored(size, scope).iter().for_each(|t| f(t.clone()));
            return;
        }
        for (p, bits) in &self.patterns {
            self.each_in(size - 1, scope | bits, &mut |b| f(Term::abs(p.clone(), b)));
        }
        for k in 1..size - 1 {
            self.each_in(k, scope, &mut |l| {
                self.each_in(size - 1 - k, scope, &mut |r| {
                    f(Term::pair(l.clone(), r.clone()));
                    f(Term::app(l.clone(), r));
                })
            });
            for (p, bits) in &self.patterns {
                self.each_in(k, scope | bits, &mut |b| {
                    self.each_in(size - 1 - k, scope, &mut |r| {
                        f(Term::matching(b.clone(), p.clone(), r))
                    })
                });
            }
        }
    }

    fn stored(&self, size: usize, scope: u32) -> Rc<Vec<Term>> {
        let scope = self.scope(scope);
        if let Some(v) = self.memo.borrow().get(&(size, scope)) {
            return Rc::clone(v);
        }
        let mut out = Vec::new();
        if size == 1 {
            for (i, x) in self.vars.iter().enumerate() {
                if scope & (1 << i) != 0 {
                    out.push(Term::Var(x.clone()));
                }
            }
            if self.fail {
                out.push(Term::Fail);
            }
        } else if size >= 2 {
            for (p, bits) in &self.patterns {
                for b in self.stored(size - 1, scope | bits).iter() {
                    out.push(Term::abs(p.clone(), b.clone()));
                }
            }
            for k in 1..size - 1 {
                let left = self.stored(k, scope);
                let right = self.stored(size - 1 - k, scope);
                for l in left.iter() {
                    for r in right.iter() {
                        out.push(Term::pair(l.clone(), r.clone()));
                        out.push(Term::app(l.clone(), r.clone()));
                    }
                }
                for (p, bits) in &self.patterns {
                    let bodies = self.stored(k, scope | bits);
                    for b in bodies.iter() {
                        for r in right.iter() {
                            out.push(Term::matching(b.clone(), p.clone(), r.clone()));
                        }
                    }
                }
            }
        }
        let out = Rc::new(out);
        self.memo
            .borrow_mut()
            .insert((size, scope), Rc::clone(&out));
        out
    }
}

/// Bags of at most `max` elements drawn from `items`, without repetition up to order.
pub fn bags(items: &[TypeExpr], max: usize) -> Vec<MType> {
    let mut out = vec![MType::empty()];
    let mut frontier: Vec<(usize, Vec<TypeExpr>)> = vec![(0, vec![])];
    for _ in 0..max {
        let mut next = Vec::new();
        for (start, v) in &frontier {
            for (i, item) in items.iter().enumerate().skip(*start) {
                let mut w = v.clone();
                w.push(item.clone());
                out.push(MType::new(w.clone()));
                next.push((i, w));
            }
        }
        frontier = next;
    }
    out
}

/// Types over the atom `a` and `o`: arrows from bags of up to two smaller
/// types, and products of bags of up to one smaller type.
pub fn types(depth: usize) -> Vec<TypeExpr> {
    let mut out = vec![TypeExpr::atom("a"), TypeExpr::o()];
    if depth == 0 {
        return out;
    }
    let sub = types(depth - 1);
    for b in bags(&sub, 2) {
        for t in &sub {
            out.push(TypeExpr::arrow(b.clone(), t.clone()));
        }
    }
    for l in bags(&sub, 1) {
        for r in bags(&sub, 1) {
            out.push(TypeExpr::Product(l.clone(), r));
        }
    }
    out.sort();
    out.dedup();
    out
}
