use super::{Name, Pattern, Term};

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
#[error("syntax error at offset {pos}: {msg}")]
pub struct SyntaxError {
    pub pos: usize,
    pub msg: String,
}

impl SyntaxError {
    pub fn new(pos: usize, msg: impl Into<String>) -> SyntaxError {
        SyntaxError {
            pos,
            msg: msg.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Backslash,
    Dot,
    Lt,
    Gt,
    Comma,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Slash,
    Underscore,
    Arrow,
    Colon,
    Turnstile,
    Question,
    Ident(String),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
            other => format!("{other:?}"),
        }
    }
}

/// Tokenizer shared by the term, type and query grammars.
pub(crate) struct Lexer {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Lexer {
    pub(crate) fn new(src: &str) -> Result<Lexer, SyntaxError> {
        let mut toks = Vec::new();
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            let start = i;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            if c.is_ascii_alphabetic() {
                while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            if src[i..].starts_with('λ') {
                i += 'λ'.len_utf8();
                toks.push((Tok::Backslash, start));
                continue;
            }
            let two = src.get(i..i + 2);
            let tok = match (c, two) {
                ('-', Some("->")) => {
                    i += 1;
                    Tok::Arrow
                }
                ('|', Some("|-")) => {
                    i += 1;
                    Tok::Turnstile
                }
                ('\\', _) => Tok::Backslash,
                ('.', _) => Tok::Dot,
                ('<', _) => Tok::Lt,
                ('>', _) => Tok::Gt,
                (',', _) => Tok::Comma,
                ('(', _) => Tok::LParen,
                (')', _) => Tok::RParen,
                ('[', _) => Tok::LBrack,
                (']', _) => Tok::RBrack,
                ('/', _) => Tok::Slash,
                ('_', _) => Tok::Underscore,
                (':', _) => Tok::Colon,
                ('?', _) => Tok::Question,
                _ => {
                    let ch = src[i..].chars().next().unwrap_or('?');
                    return Err(SyntaxError::new(i, format!("unexpected character `{ch}`")));
                }
            };
            i += 1;
            toks.push((tok, start));
        }
        toks.push((Tok::Eof, src.len()));
        Ok(Lexer { toks, at: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    pub(crate) fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, t: &Tok) -> Result<(), SyntaxError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {}, found {}",
                t.describe(),
                self.peek().describe()
            )))
        }
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> SyntaxError {
        SyntaxError::new(self.pos(), msg)
    }

    pub(crate) fn finish(&self) -> Result<(), SyntaxError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(format!("unexpected {}", self.peek().describe())))
        }
    }

    pub(crate) fn name(&mut self) -> Result<Name, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) if s != "fail" => {
                self.bump();
                Ok(Name::raw(s))
            }
            other => Err(self.error(format!("expected a variable, found {}", other.describe()))),
        }
    }
}

pub fn parse_term(src: &str) -> Result<Term, SyntaxError> {
    let mut lx = Lexer::new(src)?;
    let t = term(&mut lx)?;
    lx.finish()?;
    Ok(t)
}

pub fn parse_pattern(src: &str) -> Result<Pattern, SyntaxError> {
    let mut lx = Lexer::new(src)?;
    let p = pattern(&mut lx)?;
    lx.finish()?;
    Ok(p)
}

pub(crate) fn term(lx: &mut Lexer) -> Result<Term, SyntaxError> {
    if lx.eat(&Tok::Backslash) {
        let mut pats = vec![pattern(lx)?];
        while *lx.peek() != Tok::Dot {
            pats.push(pattern(lx)?);
        }
        lx.expect(&Tok::Dot)?;
        let body = term(lx)?;
        return Ok(pats.into_iter().rev().fold(body, |b, p| Term::abs(p, b)));
    }
    let mut t = postfix(lx)?;
    while starts_atom(lx.peek()) {
        let a = postfix(lx)?;
        t = Term::app(t, a);
    }
    Ok(t)
}

fn starts_atom(t: &Tok) -> bool {
    matches!(t, Tok::Ident(_) | Tok::Underscore | Tok::Lt | Tok::LParen)
}

fn postfix(lx: &mut Lexer) -> Result<Term, SyntaxError> {
    let mut t = atom(lx)?;
    while lx.eat(&Tok::LBrack) {
        let p = pattern(lx)?;
        lx.expect(&Tok::Slash)?;
        let u = term(lx)?;
        lx.expect(&Tok::RBrack)?;
        t = Term::matching(t, p, u);
    }
    Ok(t)
}

fn atom(lx: &mut Lexer) -> Result<Term, SyntaxError> {
    match lx.peek().clone() {
        Tok::Ident(s) if s == "fail" => {
            lx.bump();
            Ok(Term::Fail)
        }
        Tok::Ident(s) => {
            lx.bump();
            Ok(Term::Var(Name::raw(s)))
        }
        Tok::Underscore => {
            lx.bump();
            Ok(Term::Omega)
        }
        Tok::Lt => {
            lx.bump();
            let a = term(lx)?;
            lx.expect(&Tok::Comma)?;
            let b = term(lx)?;
            lx.expect(&Tok::Gt)?;
            Ok(Term::pair(a, b))
        }
        Tok::LParen => {
            lx.bump();
            let t = term(lx)?;
            lx.expect(&Tok::RParen)?;
            Ok(t)
        }
        other => Err(lx.error(format!("expected a term, found {}", other.describe()))),
    }
}

pub(crate) fn pattern(lx: &mut Lexer) -> Result<Pattern, SyntaxError> {
    let start = lx.pos();
    let p = pattern_inner(lx)?;
    if !p.is_linear() {
        return Err(SyntaxError::new(
            start,
            format!("pattern `{p}` is not linear"),
        ));
    }
    Ok(p)
}

fn pattern_inner(lx: &mut Lexer) -> Result<Pattern, SyntaxError> {
    if lx.eat(&Tok::Lt) {
        let p = pattern_inner(lx)?;
        lx.expect(&Tok::Comma)?;
        let q = pattern_inner(lx)?;
        lx.expect(&Tok::Gt)?;
        Ok(Pattern::pair(p, q))
    } else {
        Ok(Pattern::Var(lx.name()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    #[test]
    fn identity() {
        assert_eq!(
            parse_term("\\x.x").unwrap(),
            Term::abs(Pattern::var("x"), v("x"))
        );
        assert_eq!(parse_term("λx.x").unwrap(), parse_term("\\x.x").unwrap());
    }

    #[test]
    fn failure_example() {
        let t = parse_term("(\\<z1,z2>.z1)(\\y.y)").unwrap();
        let f = Term::abs(
            Pattern::pair(Pattern::var("z1"), Pattern::var("z2")),
            v("z1"),
        );
        assert_eq!(t, Term::app(f, Term::abs(Pattern::var("y"), v("y"))));
    }

    #[test]
    fn application_is_left_associative_and_postfix_binds_tighter() {
        let t = parse_term("x y z[a/b]").unwrap();
        let expected = Term::app(
            Term::app(v("x"), v("y")),
            Term::matching(v("z"), Pattern::var("a"), v("b")),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn multi_binder_lambda_and_comments() {
        let t = parse_term("\\x <y,z>. x # trailing comment\n").unwrap();
        let expected = Term::abs(
            Pattern::var("x"),
            Term::abs(Pattern::pair(Pattern::var("y"), Pattern::var("z")), v("x")),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn lambda_body_extends_right() {
        let t = parse_term("\\x.x y").unwrap();
        assert_eq!(t, Term::abs(Pattern::var("x"), Term::app(v("x"), v("y"))));
    }

    #[test]
    fn constants() {
        assert_eq!(parse_term("fail").unwrap(), Term::Fail);
        assert_eq!(
            parse_term("<_, fail>").unwrap(),
            Term::pair(Term::Omega, Term::Fail)
        );
    }

    #[test]
    fn rejects_non_linear_patterns() {
        let e = parse_term("\\<x,x>.x").unwrap_err();
        assert!(e.msg.contains("linear"), "{e}");
        assert!(parse_term("y[<a,a>/z]").is_err());
    }

    #[test]
    fn reports_positions() {
        let e = parse_term("x )").unwrap_err();
        assert_eq!(e.pos, 2);
        assert!(parse_term("\\.x").is_err());
        assert!(parse_term("x $").is_err());
        assert!(parse_term("\\fail.x").is_err());
    }
}
