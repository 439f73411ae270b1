//! Surface syntax for sorts and terms.
//!
//! ```text
//! sort  ::= "o" | "(" sort ")" | sort "->" sort        (right-associative)
//! term  ::= atom+                                      (left-associative application)
//! atom  ::= constant | ident | ident ":" sort
//!         | "(" term ")" | "\" ident ":" sort "." term
//! ident ::= letter (letter | digit | "_")*             (constant names excluded)
//! ```
//!
//! Line comments start with `--`. Bound variables take their sorts from the
//! binder; a free variable must be annotated (`x:o` or `x:(o->o)`) at its
//! first occurrence, later occurrences may omit the annotation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::sort::{Signature, Sort};
use crate::term::Term;

/// Syntax or sort error with a 1-based line/column position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Lambda,
    Colon,
    Dot,
    LParen,
    RParen,
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{}'", s),
            Tok::Lambda => write!(f, "'\\'"),
            Tok::Colon => write!(f, "':'"),
            Tok::Dot => write!(f, "'.'"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::Arrow => write!(f, "'->'"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek_char() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('-') if self.src[self.pos..].starts_with("--") => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn next_tok(&mut self) -> Result<(Tok, u32, u32), ParseError> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek_char() else {
            return Ok((Tok::Eof, line, col));
        };
        let tok = match c {
            '\\' | 'λ' => {
                self.bump();
                Tok::Lambda
            }
            ':' => {
                self.bump();
                Tok::Colon
            }
            '.' => {
                self.bump();
                Tok::Dot
            }
            '(' => {
                self.bump();
                Tok::LParen
            }
            ')' => {
                self.bump();
                Tok::RParen
            }
            '-' => {
                self.bump();
                match self.peek_char() {
                    Some('>') => {
                        self.bump();
                        Tok::Arrow
                    }
                    _ => return Err(self.err("expected '->'")),
                }
            }
            c if c.is_alphabetic() => {
                let mut s = String::new();
                while let Some(c) = self.peek_char() {
                    if c.is_alphanumeric() || c == '_' {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            c => return Err(self.err(alloc::format!("unexpected character '{}'", c))),
        };
        Ok((tok, line, col))
    }

    fn tokenize(mut self) -> Result<Vec<(Tok, u32, u32)>, ParseError> {
        let mut out = Vec::new();
        loop {
            let t = self.next_tok()?;
            let eof = t.0 == Tok::Eof;
            out.push(t);
            if eof {
                return Ok(out);
            }
        }
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, u32, u32)>,
    idx: usize,
    sig: &'a Signature,
    /// binder stack, innermost last
    scope: Vec<(String, Sort)>,
    /// sorts of free variables seen so far
    free: BTreeMap<String, Sort>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    fn here(&self) -> (u32, u32) {
        let (_, l, c) = self.toks[self.idx];
        (l, c)
    }

    fn err_here(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.idx].0.clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok) -> Result<(), ParseError> {
        if self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.err_here(alloc::format!("expected {}, found {}", want, self.peek())))
        }
    }

    // sort ::= sort_atom ("->" sort)?
    fn sort(&mut self) -> Result<Sort, ParseError> {
        let left = self.sort_atom()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let right = self.sort()?;
            Ok(Sort::arrow(left, right))
        } else {
            Ok(left)
        }
    }

    fn sort_atom(&mut self) -> Result<Sort, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "o" => {
                self.bump();
                Ok(Sort::Base)
            }
            Tok::LParen => {
                self.bump();
                let s = self.sort()?;
                self.expect(&Tok::RParen)?;
                Ok(s)
            }
            other => Err(self.err_here(alloc::format!("expected a sort, found {}", other))),
        }
    }

    fn atom_starts(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::LParen | Tok::Lambda)
    }

    // term ::= atom+
    fn term(&mut self) -> Result<Term, ParseError> {
        if !self.atom_starts() {
            return Err(self.err_here(alloc::format!("expected a term, found {}", self.peek())));
        }
        let mut acc = self.atom()?;
        while self.atom_starts() {
            let arg = self.atom()?;
            let fun_sort = acc.sort().map_err(|e| self.err_here(alloc::format!("{}", e)))?;
            let arg_sort = arg.sort().map_err(|e| self.err_here(alloc::format!("{}", e)))?;
            match fun_sort {
                Sort::Arrow(p, _) if *p == arg_sort => {}
                Sort::Arrow(p, _) => {
                    return Err(self.err_here(alloc::format!(
                        "sort mismatch in application: expected {}, got {}",
                        p, arg_sort
                    )))
                }
                Sort::Base => {
                    return Err(self.err_here("cannot apply a term of sort o".to_string()))
                }
            }
            acc = Term::app(acc, arg);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Lambda => {
                self.bump();
                let name = match self.bump() {
                    Tok::Ident(s) => s,
                    other => {
                        return Err(self.err_here(alloc::format!(
                            "expected a variable name after '\\', found {}",
                            other
                        )))
                    }
                };
                if self.sig.is_constant(&name) {
                    return Err(
                        self.err_here(alloc::format!("'{}' is a constant, not a variable", name))
                    );
                }
                self.expect(&Tok::Colon)?;
                let sort = self.sort()?;
                self.expect(&Tok::Dot)?;
                self.scope.push((name.clone(), sort.clone()));
                let body = self.term()?;
                self.scope.pop();
                Ok(Term::lam(&name, sort, body))
            }
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(t) = Term::constant(self.sig, &name) {
                    if *self.peek() == Tok::Colon {
                        return Err(self
                            .err_here(alloc::format!("'{}' is a constant; it cannot be annotated", name)));
                    }
                    return Ok(t);
                }
                let bound = self
                    .scope
                    .iter()
                    .rev()
                    .find(|(n, _)| *n == name)
                    .map(|(_, s)| s.clone());
                if *self.peek() == Tok::Colon {
                    self.bump();
                    let sort = self.sort()?;
                    if let Some(bs) = bound {
                        if bs != sort {
                            return Err(self.err_here(alloc::format!(
                                "variable {} is bound with sort {}, not {}",
                                name, bs, sort
                            )));
                        }
                        return Ok(Term::var(&name, bs));
                    }
                    if let Some(prev) = self.free.get(&name) {
                        if *prev != sort {
                            return Err(self.err_here(alloc::format!(
                                "free variable {} was annotated with sort {}, not {}",
                                name, prev, sort
                            )));
                        }
                    }
                    self.free.insert(name.clone(), sort.clone());
                    return Ok(Term::var(&name, sort));
                }
                if let Some(bs) = bound {
                    return Ok(Term::var(&name, bs));
                }
                if let Some(s) = self.free.get(&name) {
                    return Ok(Term::var(&name, s.clone()));
                }
                Err(self.err_here(alloc::format!(
                    "free variable {} must be annotated at its first use (e.g. {}:o)",
                    name, name
                )))
            }
            other => Err(self.err_here(alloc::format!("expected a term, found {}", other))),
        }
    }
}

/// Parses a term; returns a well-sorted `Term` or the first error.
pub fn parse_term(src: &str, sig: &Signature) -> Result<Term, ParseError> {
    let toks = Lexer::new(src).tokenize()?;
    let mut p = Parser {
        toks,
        idx: 0,
        sig,
        scope: Vec::new(),
        free: BTreeMap::new(),
    };
    let t = p.term()?;
    if *p.peek() != Tok::Eof {
        return Err(p.err_here(alloc::format!("unexpected {} after term", p.peek())));
    }
    debug_assert!(t.is_well_sorted());
    Ok(t)
}

pub fn parse_sort(src: &str) -> Result<Sort, ParseError> {
    let toks = Lexer::new(src).tokenize()?;
    // sorts never consult the signature
    let sig = Signature::new([], "a").expect("empty signature");
    let mut p = Parser {
        toks,
        idx: 0,
        sig: &sig,
        scope: Vec::new(),
        free: BTreeMap::new(),
    };
    let s = p.sort()?;
    if *p.peek() != Tok::Eof {
        return Err(p.err_here(alloc::format!("unexpected {} after sort", p.peek())));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn sig() -> Signature {
        Signature::standard()
    }

    #[test]
    fn parses_constants() {
        let t = parse_term("e", &sig()).unwrap();
        assert_eq!(t, Term::constant(&sig(), "e").unwrap());
        assert_eq!(t.sort().unwrap(), Sort::Base);
    }

    #[test]
    fn parses_application_of_lambda_to_constant() {
        let t = parse_term("(\\y:(o->o). y e) a", &sig()).unwrap();
        assert_eq!(t.sort().unwrap(), Sort::Base);
        match &t {
            Term::App(fun, arg) => {
                assert!(matches!(fun.as_ref(), Term::Lam(..)));
                assert!(matches!(arg.as_ref(), Term::Const(name, _) if name == "a"));
            }
            _ => panic!("expected application"),
        }
    }

    #[test]
    fn application_is_left_associative() {
        let t = parse_term("b e (a e)", &sig()).unwrap();
        assert_eq!(format!("{}", t), "b e (a e)");
        assert_eq!(t.sort().unwrap(), Sort::Base);
    }

    #[test]
    fn arrow_is_right_associative() {
        assert_eq!(
            parse_sort("o->o->o").unwrap(),
            Sort::arrow(Sort::Base, Sort::arrow(Sort::Base, Sort::Base))
        );
        assert_eq!(
            parse_sort("(o->o)->o").unwrap(),
            Sort::arrow(Sort::arrow(Sort::Base, Sort::Base), Sort::Base)
        );
    }

    #[test]
    fn reports_positions_on_syntax_errors() {
        let err = parse_term("a (", &sig()).unwrap_err();
        assert_eq!((err.line, err.col), (1, 4));
        let err = parse_term("\n\n  )", &sig()).unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn reports_sort_errors() {
        let err = parse_term("a a", &sig()).unwrap_err();
        assert!(err.message.contains("sort mismatch"), "{}", err.message);
        let err = parse_term("e e", &sig()).unwrap_err();
        assert!(err.message.contains("cannot apply"), "{}", err.message);
    }

    #[test]
    fn free_vars_need_annotation_at_first_use() {
        assert!(parse_term("x", &sig()).is_err());
        let t = parse_term("b x:o x", &sig()).unwrap();
        assert_eq!(t.free_vars().len(), 1);
        let err = parse_term("b x:o x:(o->o)", &sig()).unwrap_err();
        assert!(err.message.contains("annotated"), "{}", err.message);
    }

    #[test]
    fn constants_cannot_be_bound_or_annotated() {
        assert!(parse_term("\\a:o. a", &sig()).is_err());
        assert!(parse_term("e:o", &sig()).is_err());
    }

    #[test]
    fn comments_are_skipped() {
        let t = parse_term("a -- applies a\n  e -- to e", &sig()).unwrap();
        assert_eq!(format!("{}", t), "a e");
    }

    #[test]
    fn shadowing_binds_to_nearest_binder() {
        let t = parse_term("\\x:o. (\\x:(o->o). x) a", &sig()).unwrap();
        assert_eq!(t.sort().unwrap(), Sort::arrow(Sort::Base, parse_sort("o->o").unwrap()));
    }

    #[test]
    fn lambda_sort_annotation_without_parens() {
        let t = parse_term("\\y:o->o. y e", &sig()).unwrap();
        assert_eq!(t.sort().unwrap(), parse_sort("(o->o)->o").unwrap());
    }
}
