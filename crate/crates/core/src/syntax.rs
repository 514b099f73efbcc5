//! Concrete syntax: lexer, term parser, CAC declarations and resolution of
//! raw terms against a symbol table.

use std::collections::HashMap;
use std::fmt;

use crate::term::{Binder, Sort, Term, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Star,
    BoxSort,
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Colon,
    Define,
    Dot,
    Comma,
    Semi,
    Bar,
    Arrow,
    LongArrow,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Star => f.write_str("*"),
            Tok::BoxSort => f.write_str("[]"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::LBrack => f.write_str("["),
            Tok::RBrack => f.write_str("]"),
            Tok::LBrace => f.write_str("{"),
            Tok::RBrace => f.write_str("}"),
            Tok::Colon => f.write_str(":"),
            Tok::Define => f.write_str(":="),
            Tok::Dot => f.write_str("."),
            Tok::Comma => f.write_str(","),
            Tok::Semi => f.write_str(";"),
            Tok::Bar => f.write_str("|"),
            Tok::Arrow => f.write_str("->"),
            Tok::LongArrow => f.write_str("-->"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

fn is_punct(c: char) -> bool {
    matches!(c, '(' | ')' | '[' | ']' | '{' | '}' | ':' | '.' | ',' | ';' | '|')
}

pub fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let at = |k: usize| chars.get(i + k).copied();
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '(' && at(1) == Some('*') && at(2) != Some(')') {
            let mut depth = 0usize;
            loop {
                if i >= chars.len() {
                    return Err(ParseError { line: l0, col: c0, message: "unterminated comment".into() });
                }
                if chars[i] == '(' && at_idx(&chars, i + 1) == Some('*') {
                    depth += 1;
                    advance(&mut i, &mut line, &mut col, 2);
                } else if chars[i] == '*' && at_idx(&chars, i + 1) == Some(')') {
                    depth -= 1;
                    advance(&mut i, &mut line, &mut col, 2);
                    if depth == 0 {
                        break;
                    }
                } else {
                    advance(&mut i, &mut line, &mut col, 1);
                }
            }
            continue;
        }
        let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line: l0, col: c0 });
        let (tok, n) = match c {
            '[' if at(1) == Some(']') => (Tok::BoxSort, 2),
            ':' if at(1) == Some('=') => (Tok::Define, 2),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBrack, 1),
            ']' => (Tok::RBrack, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            ':' => (Tok::Colon, 1),
            '.' => (Tok::Dot, 1),
            ',' => (Tok::Comma, 1),
            ';' => (Tok::Semi, 1),
            '|' => (Tok::Bar, 1),
            '□' => (Tok::BoxSort, 1),
            '⇒' | '→' => (Tok::Arrow, 1),
            _ => {
                let start = i;
                let mut j = i;
                while j < chars.len() && !chars[j].is_whitespace() && !is_punct(chars[j]) {
                    j += 1;
                }
                let word: String = chars[start..j].iter().collect();
                let tok = match word.as_str() {
                    "*" | "⋆" => Tok::Star,
                    "->" => Tok::Arrow,
                    "-->" => Tok::LongArrow,
                    _ => Tok::Ident(word),
                };
                (tok, j - start)
            }
        };
        push(&mut out, tok);
        advance(&mut i, &mut line, &mut col, n);
    }
    Ok(out)
}

fn at_idx(chars: &[char], i: usize) -> Option<char> {
    chars.get(i).copied()
}

/// Term as written, before names are resolved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Raw {
    Star,
    Box,
    Ident(String),
    App(Box<Raw>, Box<Raw>),
    Prod(String, Box<Raw>, Box<Raw>),
    Abs(String, Box<Raw>, Box<Raw>),
    Arrow(Box<Raw>, Box<Raw>),
    /// CIC⁻ only: `Ind(X:A){C₁, …}`.
    Ind(String, Box<Raw>, Vec<Raw>),
    /// CIC⁻ only: `Constr(i, I)`.
    Constr(usize, Box<Raw>),
    /// CIC⁻ only: `Elim(I; Q; a⃗; c){f⃗}`.
    Elim { ind: Box<Raw>, motive: Box<Raw>, indices: Vec<Raw>, scrutinee: Box<Raw>, branches: Vec<Raw> },
}

impl Raw {
    /// Identifiers in the term that are not bound inside it.
    pub fn free_idents(&self, out: &mut Vec<String>) {
        self.free_idents_in(&mut Vec::new(), out)
    }

    fn free_idents_in(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match self {
            Raw::Star | Raw::Box => {}
            Raw::Ident(x) => {
                if !bound.contains(x) && !out.contains(x) {
                    out.push(x.clone());
                }
            }
            Raw::App(a, b) | Raw::Arrow(a, b) => {
                a.free_idents_in(bound, out);
                b.free_idents_in(bound, out);
            }
            Raw::Prod(x, a, b) | Raw::Abs(x, a, b) => {
                a.free_idents_in(bound, out);
                bound.push(x.clone());
                b.free_idents_in(bound, out);
                bound.pop();
            }
            Raw::Ind(x, a, cs) => {
                a.free_idents_in(bound, out);
                bound.push(x.clone());
                for c in cs {
                    c.free_idents_in(bound, out);
                }
                bound.pop();
            }
            Raw::Constr(_, i) => i.free_idents_in(bound, out),
            Raw::Elim { ind, motive, indices, scrutinee, branches } => {
                for t in [ind, motive, scrutinee] {
                    t.free_idents_in(bound, out);
                }
                for t in indices.iter().chain(branches) {
                    t.free_idents_in(bound, out);
                }
            }
        }
    }
}

pub struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    /// Accept `Ind`, `Constr` and `Elim` term formers.
    pub cic: bool,
}

impl Parser {
    pub fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser { toks: lex(src)?, pos: 0, cic: false })
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|s| &s.tok)
    }

    pub fn line(&self) -> usize {
        self.toks.get(self.pos).or(self.toks.last()).map(|s| s.line).unwrap_or(1)
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = match self.toks.get(self.pos) {
            Some(s) => (s.line, s.col),
            None => self.toks.last().map(|s| (s.line, s.col + 1)).unwrap_or((1, 1)),
        };
        ParseError { line, col, message: message.into() }
    }

    pub fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{t}`, found {}", self.describe())))
        }
    }

    pub fn describe(&self) -> String {
        match self.peek() {
            Some(t) => format!("`{t}`"),
            None => "end of input".to_string(),
        }
    }

    pub fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected a name, found {}", self.describe()))),
        }
    }

    pub fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// `( x₁ … xₙ :` or `[ x₁ … xₙ :` ahead.
    fn binder_ahead(&self, open: &Tok) -> bool {
        if self.peek() != Some(open) {
            return false;
        }
        let mut k = 1;
        while let Some(Tok::Ident(_)) = self.peek_at(k) {
            k += 1;
        }
        k > 1 && self.peek_at(k) == Some(&Tok::Colon)
    }

    fn binder_group(&mut self, close: &Tok) -> Result<(Vec<String>, Raw), ParseError> {
        self.next();
        let mut names = Vec::new();
        while let Some(Tok::Ident(_)) = self.peek() {
            names.push(self.ident()?);
        }
        self.expect(&Tok::Colon)?;
        let ty = self.term()?;
        self.expect(close)?;
        Ok((names, ty))
    }

    pub fn term(&mut self) -> Result<Raw, ParseError> {
        if self.binder_ahead(&Tok::LParen) || self.binder_ahead(&Tok::LBrack) {
            let is_prod = self.peek() == Some(&Tok::LParen);
            let close = if is_prod { Tok::RParen } else { Tok::RBrack };
            let (names, ty) = self.binder_group(&close)?;
            let body = self.term()?;
            return Ok(names.into_iter().rev().fold(body, |acc, x| {
                if is_prod {
                    Raw::Prod(x, Box::new(ty.clone()), Box::new(acc))
                } else {
                    Raw::Abs(x, Box::new(ty.clone()), Box::new(acc))
                }
            }));
        }
        let lhs = self.app()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.term()?;
            return Ok(Raw::Arrow(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Some(Tok::Ident(s)) => !self.is_reserved(s),
            Some(Tok::Star | Tok::BoxSort | Tok::LParen) => true,
            Some(Tok::LBrack) => !self.clause_ahead(),
            _ => false,
        }
    }

    fn is_reserved(&self, s: &str) -> bool {
        matches!(s, "motive" | "for")
    }

    /// `[env:` or `[rho:` opens a rule clause, not an abstraction.
    pub fn clause_ahead(&self) -> bool {
        self.peek() == Some(&Tok::LBrack)
            && matches!(self.peek_at(1), Some(Tok::Ident(s)) if s == "env" || s == "rho")
            && self.peek_at(2) == Some(&Tok::Colon)
    }

    fn app(&mut self) -> Result<Raw, ParseError> {
        let mut t = self.atom()?;
        loop {
            if self.binder_ahead(&Tok::LBrack) && !self.clause_ahead() {
                let arg = self.term()?;
                t = Raw::App(Box::new(t), Box::new(arg));
                break;
            }
            if !self.starts_atom() {
                break;
            }
            let a = self.atom()?;
            t = Raw::App(Box::new(t), Box::new(a));
        }
        Ok(t)
    }

    fn atom(&mut self) -> Result<Raw, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Star) => {
                self.next();
                Ok(Raw::Star)
            }
            Some(Tok::BoxSort) => {
                self.next();
                Ok(Raw::Box)
            }
            Some(Tok::LParen) if !self.binder_ahead(&Tok::LParen) => {
                self.next();
                let t = self.term()?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            Some(Tok::LParen) | Some(Tok::LBrack) if !self.clause_ahead() => self.term(),
            Some(Tok::Ident(s)) if self.cic && self.peek_at(1) == Some(&Tok::LParen) && is_cic_former(&s) => {
                self.cic_former(&s)
            }
            Some(Tok::Ident(s)) if !self.is_reserved(&s) => {
                self.next();
                Ok(Raw::Ident(s))
            }
            _ => Err(self.error(format!("expected a term, found {}", self.describe()))),
        }
    }

    fn cic_former(&mut self, kw: &str) -> Result<Raw, ParseError> {
        self.next();
        self.expect(&Tok::LParen)?;
        match kw {
            "Ind" => {
                let x = self.ident()?;
                self.expect(&Tok::Colon)?;
                let a = self.term()?;
                self.expect(&Tok::RParen)?;
                self.expect(&Tok::LBrace)?;
                let cs = self.comma_terms(&Tok::RBrace)?;
                Ok(Raw::Ind(x, Box::new(a), cs))
            }
            "Constr" => {
                let line_err = self.error("expected a constructor number");
                let i = match self.next() {
                    Some(Tok::Ident(s)) => s.parse::<usize>().map_err(|_| line_err.clone())?,
                    _ => return Err(line_err),
                };
                if i == 0 {
                    return Err(line_err);
                }
                self.expect(&Tok::Comma)?;
                let ind = self.term()?;
                self.expect(&Tok::RParen)?;
                Ok(Raw::Constr(i, Box::new(ind)))
            }
            _ => {
                let ind = self.term()?;
                self.expect(&Tok::Semi)?;
                let motive = self.term()?;
                self.expect(&Tok::Semi)?;
                let mut indices = Vec::new();
                while self.peek() != Some(&Tok::Semi) {
                    indices.push(self.atom()?);
                }
                self.expect(&Tok::Semi)?;
                let scrutinee = self.term()?;
                self.expect(&Tok::RParen)?;
                self.expect(&Tok::LBrace)?;
                let branches = self.comma_terms(&Tok::RBrace)?;
                Ok(Raw::Elim {
                    ind: Box::new(ind),
                    motive: Box::new(motive),
                    indices,
                    scrutinee: Box::new(scrutinee),
                    branches,
                })
            }
        }
    }

    fn comma_terms(&mut self, close: &Tok) -> Result<Vec<Raw>, ParseError> {
        let mut out = Vec::new();
        if self.eat(close) {
            return Ok(out);
        }
        loop {
            out.push(self.term()?);
            if self.eat(close) {
                return Ok(out);
            }
            self.expect(&Tok::Comma)?;
        }
    }

    /// Binder groups `(x:T)(y z:U)…`.
    pub fn telescope(&mut self) -> Result<Vec<(String, Raw)>, ParseError> {
        let mut out = Vec::new();
        while self.binder_ahead(&Tok::LParen) {
            let (names, ty) = self.binder_group(&Tok::RParen)?;
            out.extend(names.into_iter().map(|x| (x, ty.clone())));
        }
        Ok(out)
    }
}

fn is_cic_former(s: &str) -> bool {
    matches!(s, "Ind" | "Constr" | "Elim")
}

pub fn parse_term(src: &str) -> Result<Raw, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    p.eat(&Tok::Dot);
    if !p.at_end() {
        return Err(p.error(format!("unexpected {} after the term", p.describe())));
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RecursorRequest {
    /// `recursor NAME for C.`: a declared symbol with its rules.
    Declared,
    /// `recursor weak NAME for C.`: generate the canonical weak recursor.
    Weak,
    /// `recursor strong NAME for C motive M.`
    Strong(Raw),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Symbol { name: String, ty: Raw, constant: bool, line: usize },
    Rule { lhs: Raw, rhs: Raw, env: Option<Vec<(String, Raw)>>, rho: Vec<(String, Raw)>, line: usize },
    Inductive {
        name: String,
        params: Vec<(String, Raw)>,
        indices: Vec<(String, Raw)>,
        constructors: Vec<(String, Raw)>,
        line: usize,
    },
    Monotone { name: String, plus: Vec<usize>, minus: Vec<usize>, line: usize },
    Recursor { name: String, target: String, request: RecursorRequest, line: usize },
}

impl Item {
    pub fn line(&self) -> usize {
        match self {
            Item::Symbol { line, .. }
            | Item::Rule { line, .. }
            | Item::Inductive { line, .. }
            | Item::Monotone { line, .. }
            | Item::Recursor { line, .. } => *line,
        }
    }
}

/// Parse a CAC signature file.
pub fn parse_cac(src: &str) -> Result<Vec<Item>, ParseError> {
    let mut p = Parser::new(src)?;
    let mut items = Vec::new();
    while !p.at_end() {
        items.push(parse_item(&mut p)?);
    }
    Ok(items)
}

fn parse_item(p: &mut Parser) -> Result<Item, ParseError> {
    let line = p.line();
    let kw = p.ident().map_err(|_| p.error(format!("expected a declaration keyword, found {}", p.describe())))?;
    let item = match kw.as_str() {
        "symbol" | "constant" => {
            let name = p.ident()?;
            p.expect(&Tok::Colon)?;
            let ty = p.term()?;
            Item::Symbol { name, ty, constant: kw == "constant", line }
        }
        "rule" => {
            let lhs = p.term()?;
            p.expect(&Tok::LongArrow)?;
            let rhs = p.term()?;
            let mut env = None;
            let mut rho = Vec::new();
            while p.clause_ahead() {
                p.next();
                let which = p.ident()?;
                p.expect(&Tok::Colon)?;
                loop {
                    if p.peek() == Some(&Tok::RBrack) || p.peek() == Some(&Tok::Semi) {
                        break;
                    }
                    let x = p.ident()?;
                    if which == "env" {
                        p.expect(&Tok::Colon)?;
                        let ty = p.term()?;
                        env.get_or_insert_with(Vec::new).push((x, ty));
                    } else {
                        p.expect(&Tok::Define)?;
                        rho.push((x, p.term()?));
                    }
                    if !p.eat(&Tok::Comma) {
                        break;
                    }
                }
                if which == "env" && env.is_none() {
                    env = Some(Vec::new());
                }
                if p.eat(&Tok::Semi) {
                    // `[env: … ; rho: …]` in one bracket
                    let which = p.ident()?;
                    if which != "rho" {
                        return Err(p.error("expected `rho:` after `;`"));
                    }
                    p.expect(&Tok::Colon)?;
                    while p.peek() != Some(&Tok::RBrack) {
                        let x = p.ident()?;
                        p.expect(&Tok::Define)?;
                        rho.push((x, p.term()?));
                        if !p.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                p.expect(&Tok::RBrack)?;
            }
            Item::Rule { lhs, rhs, env, rho, line }
        }
        "inductive" => {
            let name = p.ident()?;
            let params = if p.keyword("params") { p.telescope()? } else { Vec::new() };
            let indices = if p.keyword("indices") { p.telescope()? } else { Vec::new() };
            p.expect(&Tok::Define)?;
            p.eat(&Tok::Bar);
            let mut constructors = Vec::new();
            loop {
                let c = p.ident()?;
                p.expect(&Tok::Colon)?;
                constructors.push((c, p.term()?));
                if !p.eat(&Tok::Bar) {
                    break;
                }
            }
            Item::Inductive { name, params, indices, constructors, line }
        }
        "monotone" => {
            let name = p.ident()?;
            let (mut plus, mut minus) = (Vec::new(), Vec::new());
            while p.eat(&Tok::LParen) {
                let s = p.ident()?;
                let (sign, digits) = s.split_at(s.char_indices().nth(1).map(|(i, _)| i).unwrap_or(s.len()));
                let i: usize = digits.parse().map_err(|_| p.error(format!("expected +N or -N, found {s}")))?;
                match sign {
                    "+" => plus.push(i),
                    "-" => minus.push(i),
                    _ => return Err(p.error(format!("expected +N or -N, found {s}"))),
                }
                p.expect(&Tok::RParen)?;
            }
            Item::Monotone { name, plus, minus, line }
        }
        "recursor" => {
            let mode = if p.keyword("weak") {
                Some(false)
            } else if p.keyword("strong") {
                Some(true)
            } else {
                None
            };
            let name = p.ident()?;
            if !p.keyword("for") {
                return Err(p.error(format!("expected `for`, found {}", p.describe())));
            }
            let target = p.ident()?;
            let request = match mode {
                None => RecursorRequest::Declared,
                Some(false) => RecursorRequest::Weak,
                Some(true) => {
                    if !p.keyword("motive") {
                        return Err(p.error(format!("expected `motive`, found {}", p.describe())));
                    }
                    RecursorRequest::Strong(p.term()?)
                }
            };
            Item::Recursor { name, target, request, line }
        }
        other => return Err(ParseError { line, col: 1, message: format!("unknown declaration `{other}`") }),
    };
    p.expect(&Tok::Dot)?;
    Ok(item)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ResolveError {
    Unbound(String),
    Unexpected(&'static str),
}

impl fmt::Display for ResolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolveError::Unbound(x) => write!(f, "unknown name {x}"),
            ResolveError::Unexpected(what) => write!(f, "{what} is not a CAC term"),
        }
    }
}

/// Names visible when resolving: symbols and free variables with their
/// sorts.
pub struct Scope<'a> {
    pub is_symbol: &'a dyn Fn(&str) -> bool,
    pub vars: HashMap<String, Sort>,
    /// Unknown names become object variables instead of errors.
    pub open: bool,
}

impl<'a> Scope<'a> {
    pub fn new(is_symbol: &'a dyn Fn(&str) -> bool) -> Scope<'a> {
        Scope { is_symbol, vars: HashMap::new(), open: false }
    }

    pub fn resolve(&self, raw: &Raw) -> Result<Term, ResolveError> {
        self.resolve_in(raw, &mut Vec::new())
    }

    fn resolve_in(&self, raw: &Raw, bound: &mut Vec<(String, Var)>) -> Result<Term, ResolveError> {
        Ok(match raw {
            Raw::Star => Term::star(),
            Raw::Box => Term::kind_box(),
            Raw::Ident(x) => {
                if let Some((_, v)) = bound.iter().rev().find(|(y, _)| y == x) {
                    v.term()
                } else if let Some(s) = self.vars.get(x) {
                    Var::new(x, *s).term()
                } else if (self.is_symbol)(x) {
                    Term::sym(x)
                } else if self.open {
                    Var::object(x).term()
                } else {
                    return Err(ResolveError::Unbound(x.clone()));
                }
            }
            Raw::App(f, a) => Term::app(self.resolve_in(f, bound)?, self.resolve_in(a, bound)?),
            Raw::Arrow(a, b) => Term::arrow(self.resolve_in(a, bound)?, self.resolve_in(b, bound)?),
            Raw::Prod(x, a, b) | Raw::Abs(x, a, b) => {
                let dom = self.resolve_in(a, bound)?;
                // Internal names contain NUL, so they never meet user names.
                let v = Var::new(&format!("{x}\u{0}{}", bound.len()), Sort::of_annotation(&dom));
                bound.push((x.clone(), v.clone()));
                let body = self.resolve_in(b, bound);
                bound.pop();
                let body = body?.close(&v.name);
                let binder = Binder::new(x, v.sort);
                if matches!(raw, Raw::Prod(..)) {
                    Term::Prod(binder, dom.into(), body.into())
                } else {
                    Term::Abs(binder, dom.into(), body.into())
                }
            }
            Raw::Ind(..) => return Err(ResolveError::Unexpected("Ind")),
            Raw::Constr(..) => return Err(ResolveError::Unexpected("Constr")),
            Raw::Elim { .. } => return Err(ResolveError::Unexpected("Elim")),
        })
    }
}
