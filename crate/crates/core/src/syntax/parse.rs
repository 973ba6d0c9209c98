//! Recursive-descent parser for terms, inequalities and meta-formulas.

use thiserror::Error;

use super::{meet, join, restricted_sorts, Ineq, Meta, Restriction, Sort, Term};
use crate::signature::{Signature, LATTICE_OPS};

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    SyntaxError { pos: usize, msg: String },
    #[error("unknown connective `{0}`")]
    UnknownConnective(String),
    #[error("connective `{name}` expects {expected} arguments, got {got}")]
    ArityError { name: String, expected: usize, got: usize },
}

struct P<'a> {
    s: &'a [u8],
    pos: usize,
    sig: &'a Signature,
}

type R<T> = Result<T, ParseError>;

fn ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'#' || c == b'\''
}

impl<'a> P<'a> {
    fn err<T>(&self, msg: &str) -> R<T> {
        Err(ParseError::SyntaxError { pos: self.pos, msg: msg.to_string() })
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek_str(&mut self, t: &str) -> bool {
        self.ws();
        self.s[self.pos..].starts_with(t.as_bytes())
    }

    fn eat(&mut self, t: &str) -> bool {
        if self.peek_str(t) {
            self.pos += t.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &str) -> R<()> {
        if self.eat(t) { Ok(()) } else { self.err(&format!("expected `{t}`")) }
    }

    /// Keyword followed by a non-identifier character.
    fn eat_kw(&mut self, kw: &str) -> bool {
        self.ws();
        let end = self.pos + kw.len();
        if self.s[self.pos..].starts_with(kw.as_bytes()) && (end >= self.s.len() || !ident_char(self.s[end])) {
            self.pos = end;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> R<String> {
        self.ws();
        let start = self.pos;
        if self.pos < self.s.len() && ident_start(self.s[self.pos]) {
            self.pos += 1;
            while self.pos < self.s.len() && ident_char(self.s[self.pos]) {
                self.pos += 1;
            }
            Ok(String::from_utf8_lossy(&self.s[start..self.pos]).into_owned())
        } else {
            self.err("expected identifier")
        }
    }

    fn at_end(&mut self) -> bool {
        self.ws();
        self.pos >= self.s.len()
    }

    // term := join (binop term)?
    fn term(&mut self) -> R<Term> {
        let lhs = self.join_level()?;
        for op in LATTICE_OPS {
            // `<-` must not swallow the `<` of a following `<=`.
            let save = self.pos;
            if self.eat(op) {
                let rhs = self.term()?;
                let name = self.sig.resolve(op).expect("lattice op").to_string();
                return Ok(Term::App(name, vec![lhs, rhs]));
            }
            self.pos = save;
        }
        Ok(lhs)
    }

    fn join_level(&mut self) -> R<Term> {
        let lhs = self.meet_level()?;
        if self.eat("\\/") {
            let rhs = self.join_level()?;
            return Ok(join(lhs, rhs));
        }
        Ok(lhs)
    }

    fn meet_level(&mut self) -> R<Term> {
        let lhs = self.atom()?;
        if self.eat("/\\") {
            let rhs = self.meet_level()?;
            return Ok(meet(lhs, rhs));
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> R<Term> {
        self.ws();
        if self.eat("(") {
            let t = self.term()?;
            self.expect(")")?;
            return Ok(t);
        }
        if self.eat("#") {
            return Ok(Term::Nom(self.ident()?));
        }
        if self.eat("*") {
            return Ok(Term::Conom(self.ident()?));
        }
        let save = self.pos;
        let name = self.ident()?;
        match name.as_str() {
            "top" => return Ok(Term::Top),
            "bot" => return Ok(Term::Bot),
            _ => {}
        }
        if self.eat("(") {
            let mut args = Vec::new();
            if !self.eat(")") {
                loop {
                    args.push(self.term()?);
                    if self.eat(")") {
                        break;
                    }
                    if !self.eat(",") {
                        // `box(p q)`: a second argument without a comma.
                        let before = self.pos;
                        if self.term().is_ok() {
                            let got = args.len() + 1;
                            return self.arity_or_unknown(&name, got, save);
                        }
                        self.pos = before;
                        return self.err("expected `,` or `)`");
                    }
                }
            }
            if name == "k" || name == "l" {
                if args.len() != 1 {
                    return Err(ParseError::ArityError { name, expected: 1, got: args.len() });
                }
                let a = Box::new(args.pop().expect("one"));
                return Ok(if name == "k" { Term::Kappa(a) } else { Term::Lambda(a) });
            }
            let canon = self.sig.resolve(&name).ok_or_else(|| ParseError::UnknownConnective(name.clone()))?;
            let c = self.sig.conn(canon);
            if c.arity() != args.len() {
                return Err(ParseError::ArityError { name, expected: c.arity(), got: args.len() });
            }
            return Ok(Term::App(canon.to_string(), args));
        }
        Ok(Term::Var(name))
    }

    fn arity_or_unknown(&self, name: &str, got: usize, _at: usize) -> R<Term> {
        match self.sig.get(name) {
            None => Err(ParseError::UnknownConnective(name.to_string())),
            Some(c) => Err(ParseError::ArityError { name: name.to_string(), expected: c.arity(), got }),
        }
    }

    fn ineq_or_neg(&mut self) -> R<Meta> {
        let lhs = self.term()?;
        if self.eat("!<=") {
            let rhs = self.term()?;
            return Ok(Meta::NegIneq(Ineq::new(lhs, rhs)));
        }
        if self.eat("<=") {
            let rhs = self.term()?;
            return Ok(Meta::Ineq(Ineq::new(lhs, rhs)));
        }
        self.err("expected `<=` or `!<=`")
    }

    // meta := disj (==> meta)?
    fn meta(&mut self) -> R<Meta> {
        if let Some(q) = self.quantifier()? {
            return Ok(q);
        }
        let lhs = self.disj()?;
        if self.eat("==>") {
            let rhs = self.meta()?;
            return Ok(Meta::imp(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> R<Meta> {
        let mut items = vec![self.conj()?];
        while self.eat("||") {
            items.push(self.conj()?);
        }
        Ok(if items.len() == 1 { items.pop().expect("one") } else { Meta::Or(items) })
    }

    fn conj(&mut self) -> R<Meta> {
        let mut items = vec![self.unary()?];
        while self.eat("&&") {
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 { items.pop().expect("one") } else { Meta::And(items) })
    }

    fn unary(&mut self) -> R<Meta> {
        if self.eat("~~") {
            return Ok(Meta::Not(Box::new(self.unary()?)));
        }
        if let Some(q) = self.quantifier()? {
            return Ok(q);
        }
        let save = self.pos;
        match self.ineq_or_neg() {
            Ok(m) => return Ok(m),
            Err(e) => {
                self.pos = save;
                if self.eat_kw("true") {
                    return Ok(Meta::And(vec![]));
                }
                if self.eat_kw("false") {
                    return Ok(Meta::Or(vec![]));
                }
                if self.eat("(") {
                    let m = self.meta()?;
                    self.expect(")")?;
                    return Ok(m);
                }
                Err(e)
            }
        }
    }

    fn sort(&mut self) -> R<Sort> {
        let s = self.ident()?;
        match s.as_str() {
            "nom" => Ok(Sort::Nom),
            "conom" => Ok(Sort::Conom),
            _ => self.err("expected `nom` or `conom`"),
        }
    }

    fn quantifier(&mut self) -> R<Option<Meta>> {
        let save = self.pos;
        let universal = if self.eat_kw("A") || self.peek_str("A[") && self.eat("A") {
            true
        } else if self.eat_kw("E") || self.peek_str("E[") && self.eat("E") {
            false
        } else {
            return Ok(None);
        };
        if self.eat("[") {
            let mut vars = Vec::new();
            loop {
                let sort = if self.eat("#") {
                    Sort::Nom
                } else if self.eat("*") {
                    Sort::Conom
                } else {
                    return self.err("expected `#name` or `*name`");
                };
                vars.push((sort, self.ident()?));
                if !self.eat(",") {
                    break;
                }
            }
            self.expect(">")?;
            self.ws();
            let mut conn = None;
            for op in LATTICE_OPS {
                if self.s[self.pos..].starts_with(op.as_bytes()) {
                    self.pos += op.len();
                    conn = Some(op.to_string());
                    break;
                }
            }
            let conn = match conn {
                Some(c) => c,
                None => self.ident()?,
            };
            let canon = self.sig.resolve(&conn).ok_or_else(|| ParseError::UnknownConnective(conn.clone()))?;
            let c = self.sig.conn(canon);
            if c.arity() != vars.len() {
                return Err(ParseError::ArityError { name: conn, expected: c.arity(), got: vars.len() });
            }
            let expected = restricted_sorts(self.sig, canon);
            if expected != vars.iter().map(|(s, _)| *s).collect::<Vec<_>>() {
                return self.err("bound variable sorts do not match the connective");
            }
            let restrictor = self.term()?;
            self.expect("]")?;
            self.expect(".")?;
            let body = Box::new(self.meta()?);
            let r = Restriction { vars, conn: canon.to_string(), restrictor };
            return Ok(Some(if universal { Meta::RForall(r, body) } else { Meta::RExists(r, body) }));
        }
        let name = match self.ident() {
            Ok(n) => n,
            Err(_) => {
                self.pos = save;
                return Ok(None);
            }
        };
        if !self.eat(":") {
            self.pos = save;
            return Ok(None);
        }
        let sort = self.sort()?;
        self.expect(".")?;
        let body = Box::new(self.meta()?);
        Ok(Some(if universal { Meta::Forall(sort, name, body) } else { Meta::Exists(sort, name, body) }))
    }
}

fn finish<T>(p: &mut P<'_>, v: T) -> R<T> {
    if p.at_end() { Ok(v) } else { p.err("trailing input") }
}

pub fn parse_term(text: &str, sig: &Signature) -> R<Term> {
    let mut p = P { s: text.as_bytes(), pos: 0, sig };
    let t = p.term()?;
    finish(&mut p, t)
}

pub fn parse_ineq(text: &str, sig: &Signature) -> R<Ineq> {
    let mut p = P { s: text.as_bytes(), pos: 0, sig };
    let lhs = p.term()?;
    p.expect("<=")?;
    let rhs = p.term()?;
    finish(&mut p, Ineq::new(lhs, rhs))
}

pub fn parse_meta(text: &str, sig: &Signature) -> R<Meta> {
    let mut p = P { s: text.as_bytes(), pos: 0, sig };
    let m = p.meta()?;
    finish(&mut p, m)
}
