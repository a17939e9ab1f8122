use super::{Name, Pattern, Term};
use std::collections::BTreeSet;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Top,
    Fun,
    Arg,
    Postfix,
}

/// Prints with the names exactly as stored.
pub fn print_term_raw(t: &Term) -> String {
    let mut out = String::new();
    write_term(t, Ctx::Top, &mut out);
    out
}

/// Prints after renaming every binder to `x0, x1, …` in textual order, so
/// α-equivalent terms print identically.
pub fn print_term(t: &Term) -> String {
    print_term_raw(&canonical_rename(t))
}

pub fn print_pattern(p: &Pattern) -> String {
    let mut out = String::new();
    write_pattern(p, &mut out);
    out
}

fn write_pattern(p: &Pattern, out: &mut String) {
    match p {
        Pattern::Var(x) => out.push_str(x.as_str()),
        Pattern::Pair(a, b) => {
            out.push('<');
            write_pattern(a, out);
            out.push(',');
            write_pattern(b, out);
            out.push('>');
        }
    }
}

fn write_term(t: &Term, ctx: Ctx, out: &mut String) {
    let parens = match t {
        Term::Abs(..) => ctx != Ctx::Top,
        Term::App(..) => matches!(ctx, Ctx::Arg | Ctx::Postfix),
        _ => false,
    };
    if parens {
        out.push('(');
    }
    match t {
        Term::Var(x) => out.push_str(x.as_str()),
        Term::Fail => out.push_str("fail"),
        Term::Omega => out.push('_'),
        Term::Abs(p, b) => {
            out.push('\\');
            write_pattern(p, out);
            out.push('.');
            write_term(b, Ctx::Top, out);
        }
        Term::Pair(a, b) => {
            out.push('<');
            write_term(a, Ctx::Top, out);
            out.push(',');
            write_term(b, Ctx::Top, out);
            out.push('>');
        }
        Term::App(f, a) => {
            write_term(f, Ctx::Fun, out);
            out.push(' ');
            write_term(a, Ctx::Arg, out);
        }
        Term::Match(b, p, a) => {
            write_term(b, Ctx::Postfix, out);
            out.push('[');
            write_pattern(p, out);
            out.push('/');
            write_term(a, Ctx::Top, out);
            out.push(']');
        }
    }
    if parens {
        out.push(')');
    }
}

/// Renames every binder variable to `x{i}`, numbering them in the order they
/// appear in the printed text and skipping names free in the term.
pub fn canonical_rename(t: &Term) -> Term {
    let free = t.free_vars();
    let mut names = NameSupply {
        free,
        cache: Vec::new(),
        next: 0,
    };
    let mut scope = Vec::new();
    let mut counter = 0;
    rename(t, &mut scope, &mut counter, &mut names)
}

struct NameSupply {
    free: BTreeSet<Name>,
    cache: Vec<Name>,
    next: usize,
}

impl NameSupply {
    fn nth(&mut self, i: usize) -> Name {
        while self.cache.len() <= i {
            let n = Name::raw(format!("x{}", self.next));
            self.next += 1;
            if !self.free.contains(&n) {
                self.cache.push(n);
            }
        }
        self.cache[i].clone()
    }
}

fn binder_count(t: &Term) -> usize {
    match t {
        Term::Var(_) | Term::Fail | Term::Omega => 0,
        Term::Abs(p, b) => p.vars().len() + binder_count(b),
        Term::Pair(a, b) | Term::App(a, b) => binder_count(a) + binder_count(b),
        Term::Match(b, p, a) => binder_count(b) + p.vars().len() + binder_count(a),
    }
}

fn bind(
    p: &Pattern,
    start: usize,
    names: &mut NameSupply,
    scope: &mut Vec<(Name, Name)>,
) -> Pattern {
    let vs = p.vars();
    let mut map = Vec::new();
    for (i, v) in vs.into_iter().enumerate() {
        let n = names.nth(start + i);
        scope.push((v.clone(), n.clone()));
        map.push((v, n));
    }
    p.rename(&map)
}

fn rename(
    t: &Term,
    scope: &mut Vec<(Name, Name)>,
    counter: &mut usize,
    names: &mut NameSupply,
) -> Term {
    match t {
        Term::Var(x) => match scope.iter().rev().find(|(a, _)| a == x) {
            Some((_, b)) => Term::Var(b.clone()),
            None => t.clone(),
        },
        Term::Fail | Term::Omega => t.clone(),
        Term::Abs(p, b) => {
            let n = scope.len();
            let p2 = bind(p, *counter, names, scope);
            *counter += p.vars().len();
            let b2 = rename(b, scope, counter, names);
            scope.truncate(n);
            Term::abs(p2, b2)
        }
        Term::Pair(a, b) => {
            let a2 = rename(a, scope, counter, names);
            let b2 = rename(b, scope, counter, names);
            Term::pair(a2, b2)
        }
        Term::App(a, b) => {
            let a2 = rename(a, scope, counter, names);
            let b2 = rename(b, scope, counter, names);
            Term::app(a2, b2)
        }
        Term::Match(b, p, a) => {
            // the body is printed before the pattern
            let n = scope.len();
            let start = *counter + binder_count(b);
            let p2 = bind(p, start, names, scope);
            let b2 = rename(b, scope, counter, names);
            scope.truncate(n);
            *counter = start + p.vars().len();
            let a2 = rename(a, scope, counter, names);
            Term::matching(b2, p2, a2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{alpha_eq, parse_term};

    fn round(s: &str) -> String {
        print_term(&parse_term(s).unwrap())
    }

    #[test]
    fn examples() {
        assert_eq!(round("\\x.x"), "\\x0.x0");
        assert_eq!(print_term(&Term::Fail), "fail");
        assert_eq!(print_term(&Term::Omega), "_");
        assert_eq!(round("\\x y.x y"), "\\x0.\\x1.x0 x1");
    }

    #[test]
    fn parenthesization() {
        assert_eq!(round("(\\x.x) y"), "(\\x0.x0) y");
        assert_eq!(round("f (g h)"), "f (g h)");
        assert_eq!(round("(f g) h"), "f g h");
        assert_eq!(round("(f g)[a/b]"), "(f g)[x0/b]");
        assert_eq!(round("f (\\x.x)"), "f (\\x0.x0)");
        assert_eq!(round("f x[a/b]"), "f x[x0/b]");
        assert_eq!(round("(\\x.x)[a/b]"), "(\\x0.x0)[x1/b]");
    }

    #[test]
    fn binders_skip_free_names() {
        assert_eq!(round("\\y.x0 y"), "\\x1.x0 x1");
    }

    #[test]
    fn matching_numbering_follows_text() {
        let s = round("\\x.<_,_>[<y,z>/x][<w,s>/x <_,_>]");
        assert_eq!(s, "\\x0.<_,_>[<x1,x2>/x0][<x3,x4>/x0 <_,_>]");
    }

    #[test]
    fn canonical_is_alpha_equivalent() {
        for s in [
            "\\x.\\x.x",
            "x[<x,y>/x]",
            "\\<a,b>.(\\a.b a)[c/a]",
            "(\\y.x0 y) x1",
        ] {
            let t = parse_term(s).unwrap();
            let c = canonical_rename(&t);
            assert!(alpha_eq(&t, &c), "{s}");
            assert!(alpha_eq(&parse_term(&print_term(&t)).unwrap(), &t), "{s}");
        }
    }
}
