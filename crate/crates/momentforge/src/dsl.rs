//! Text format for describing an operator optimization problem.
//!
//! A problem file declares indexed letter families, degree-2 rewrite rules
//! (with index variables), named signed symmetry generators, evaluation
//! directives, a polynomial objective, the relaxation level, and tuning
//! options. [`parse_problem`] compiles the text into a [`ProblemDefinition`];
//! [`print_problem`] renders a definition back to text such that parsing the
//! output reproduces the definition exactly.
//!
//! ```text
//! # two dichotomic observables per site
//! letters A[0..1] hermitian
//! letters B[0..1] hermitian
//! rule A[x]*A[x] -> 1
//! rule B[x]*B[x] -> 1
//! rule B[x]*A[y] -> A[y]*B[x]
//! generator swap: A[x] -> B[x], B[x] -> A[x]
//! objective A[0]*B[0] + A[0]*B[1] + A[1]*B[0] - A[1]*B[1]
//! level 1
//! ```

use std::collections::HashMap;
use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::algebra::{Alphabet, Letter, LetterId, Polynomial, SignedWord, Word};
use crate::evaluation::EvaluationRules;
use crate::rewrite::{RewriteSystem, RewriteSystemBuilder, RuleCode};
use crate::symmetry::{GeneralizedPermutation, PermGroup};

/// Hard limit on the number of letters a file may declare.
pub const MAX_LETTERS: usize = 4096;
/// Hard limit on letter-pair candidates examined while expanding rule patterns.
const MAX_RULE_WORK: usize = 1 << 22;

const KEYWORDS: &[&str] = &[
    "letters", "rule", "generator", "evaluation", "objective", "level", "split", "option",
    "constraint", "hermitian", "adjoint", "all", "real", "transpose", "cyclic",
];

/// A parse or compile failure, with the 1-based source position it refers to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

fn err<T>(line: usize, col: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, col, message: message.into() })
}

/// Caps and tolerances a problem file can override with `option` lines.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemOptions {
    /// Maximum ambient group order enumerated from the declared generators.
    pub group_cap: usize,
    /// Maximum number of words in the generating basis.
    pub basis_cap: usize,
    /// Maximum orbit size explored per canonical-representative search.
    pub closure_cap: usize,
    /// Largest off-diagonal coupling tolerated when splitting a block.
    pub coupling_tol: f64,
}

impl Default for ProblemOptions {
    fn default() -> ProblemOptions {
        ProblemOptions {
            group_cap: 1_000_000,
            basis_cap: 1_000_000,
            closure_cap: 1_000_000,
            coupling_tol: 1e-12,
        }
    }
}

/// One `letters` declaration: a family of indexed letters, either Hermitian
/// or paired with a distinct adjoint family of the same shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LetterDecl {
    pub family: String,
    /// Inclusive index ranges, one per dimension; empty for a bare letter.
    pub ranges: Vec<(i64, i64)>,
    /// `Some(name)` when the declaration reads `letters F[..] adjoint G[..]`.
    pub adjoint_family: Option<String>,
}

/// A fully compiled problem: everything the relaxation pipeline needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemDefinition {
    pub alphabet: Alphabet,
    pub letter_decls: Vec<LetterDecl>,
    pub rewrite: RewriteSystem,
    /// Declared symmetry generators, in declaration order.
    pub generators: Vec<(String, GeneralizedPermutation)>,
    pub evaluation: EvaluationRules,
    /// The objective polynomial, already in normal form.
    pub objective: Polynomial,
    pub level: usize,
    /// Name of the generator to block-diagonalize under, if any.
    pub split: Option<String>,
    pub options: ProblemOptions,
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum TokKind {
    Ident(String),
    Int(String),
    Float(String),
    LBrack,
    RBrack,
    LParen,
    RParen,
    Comma,
    Star,
    Plus,
    Minus,
    Slash,
    Colon,
    Arrow,
    DotDot,
    Newline,
}

#[derive(Clone, Debug)]
struct Tok {
    kind: TokKind,
    line: usize,
    col: usize,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Ident(s) => format!("`{s}`"),
            TokKind::Int(s) | TokKind::Float(s) => format!("`{s}`"),
            TokKind::LBrack => "`[`".into(),
            TokKind::RBrack => "`]`".into(),
            TokKind::LParen => "`(`".into(),
            TokKind::RParen => "`)`".into(),
            TokKind::Comma => "`,`".into(),
            TokKind::Star => "`*`".into(),
            TokKind::Plus => "`+`".into(),
            TokKind::Minus => "`-`".into(),
            TokKind::Slash => "`/`".into(),
            TokKind::Colon => "`:`".into(),
            TokKind::Arrow => "`->`".into(),
            TokKind::DotDot => "`..`".into(),
            TokKind::Newline => "end of line".into(),
        }
    }
}

/// Tokenizes the whole input. Newlines become statement separators except
/// inside parentheses or brackets, which continue the logical line.
fn lex(text: &str) -> Result<Vec<Tok>, ParseError> {
    let mut toks = Vec::new();
    let mut depth: usize = 0;
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let mut line = 1;
    let mut col = 1;
    let push = |toks: &mut Vec<Tok>, kind: TokKind, line: usize, col: usize| {
        toks.push(Tok { kind, line, col });
    };
    while pos < chars.len() {
        let c = chars[pos];
        let (tline, tcol) = (line, col);
        match c {
            '#' => {
                while pos < chars.len() && chars[pos] != '\n' {
                    pos += 1;
                    col += 1;
                }
            }
            '\n' => {
                if depth == 0 {
                    push(&mut toks, TokKind::Newline, tline, tcol);
                }
                pos += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                pos += 1;
                col += 1;
            }
            '[' => {
                depth += 1;
                push(&mut toks, TokKind::LBrack, tline, tcol);
                pos += 1;
                col += 1;
            }
            ']' => {
                depth = depth.saturating_sub(1);
                push(&mut toks, TokKind::RBrack, tline, tcol);
                pos += 1;
                col += 1;
            }
            '(' => {
                depth += 1;
                push(&mut toks, TokKind::LParen, tline, tcol);
                pos += 1;
                col += 1;
            }
            ')' => {
                depth = depth.saturating_sub(1);
                push(&mut toks, TokKind::RParen, tline, tcol);
                pos += 1;
                col += 1;
            }
            ',' => {
                push(&mut toks, TokKind::Comma, tline, tcol);
                pos += 1;
                col += 1;
            }
            '*' => {
                push(&mut toks, TokKind::Star, tline, tcol);
                pos += 1;
                col += 1;
            }
            '+' => {
                push(&mut toks, TokKind::Plus, tline, tcol);
                pos += 1;
                col += 1;
            }
            '-' => {
                if pos + 1 < chars.len() && chars[pos + 1] == '>' {
                    push(&mut toks, TokKind::Arrow, tline, tcol);
                    pos += 2;
                    col += 2;
                } else {
                    push(&mut toks, TokKind::Minus, tline, tcol);
                    pos += 1;
                    col += 1;
                }
            }
            '/' => {
                push(&mut toks, TokKind::Slash, tline, tcol);
                pos += 1;
                col += 1;
            }
            ':' => {
                push(&mut toks, TokKind::Colon, tline, tcol);
                pos += 1;
                col += 1;
            }
            '.' => {
                if pos + 1 < chars.len() && chars[pos + 1] == '.' {
                    push(&mut toks, TokKind::DotDot, tline, tcol);
                    pos += 2;
                    col += 2;
                } else {
                    return err(tline, tcol, "unexpected character `.`");
                }
            }
            c if c.is_ascii_digit() => {
                let start = pos;
                while pos < chars.len() && chars[pos].is_ascii_digit() {
                    pos += 1;
                    col += 1;
                }
                let mut is_float = false;
                // A fractional part, but not the `..` of a range.
                if pos + 1 < chars.len() && chars[pos] == '.' && chars[pos + 1].is_ascii_digit() {
                    is_float = true;
                    pos += 1;
                    col += 1;
                    while pos < chars.len() && chars[pos].is_ascii_digit() {
                        pos += 1;
                        col += 1;
                    }
                }
                // Exponent: `e`/`E`, optional sign, digits.
                if pos < chars.len() && (chars[pos] == 'e' || chars[pos] == 'E') {
                    let mut probe = pos + 1;
                    if probe < chars.len() && (chars[probe] == '+' || chars[probe] == '-') {
                        probe += 1;
                    }
                    if probe < chars.len() && chars[probe].is_ascii_digit() {
                        is_float = true;
                        while pos < probe {
                            pos += 1;
                            col += 1;
                        }
                        while pos < chars.len() && chars[pos].is_ascii_digit() {
                            pos += 1;
                            col += 1;
                        }
                    }
                }
                let text: String = chars[start..pos].iter().collect();
                let kind = if is_float { TokKind::Float(text) } else { TokKind::Int(text) };
                push(&mut toks, kind, tline, tcol);
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = pos;
                while pos < chars.len() && (chars[pos].is_alphanumeric() || chars[pos] == '_') {
                    pos += 1;
                    col += 1;
                }
                let text: String = chars[start..pos].iter().collect();
                push(&mut toks, TokKind::Ident(text), tline, tcol);
            }
            other => return err(tline, tcol, format!("unexpected character `{other}`")),
        }
    }
    push(&mut toks, TokKind::Newline, line, col);
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Statement AST
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum PatIndex {
    Lit(i64),
    Var(String),
}

/// A letter reference in a pattern or expression: family name plus indices,
/// which may be variables in rule and generator patterns.
#[derive(Clone, Debug, PartialEq)]
struct PatFactor {
    family: String,
    indices: Vec<PatIndex>,
    line: usize,
    col: usize,
}

#[derive(Clone, Debug)]
enum RuleRhs {
    Zero,
    Factors(Vec<PatFactor>),
}

#[derive(Clone, Debug)]
enum EvalScope {
    All,
    Families(Vec<String>),
}

#[derive(Clone, Debug)]
enum Expr {
    Num(BigRational),
    Letter(PatFactor),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>, usize, usize),
}

#[derive(Clone, Debug)]
enum Stmt {
    Letters(LetterDecl),
    Rule { lhs: Vec<PatFactor>, rhs: RuleRhs },
    Generator { name: String, maps: Vec<(PatFactor, bool, PatFactor)> },
    Transpose(EvalScope),
    Cyclic(EvalScope),
    Objective(Expr),
    Level(usize),
    Split(String),
    Option { key: String, value: String },
}

struct PosStmt {
    stmt: Stmt,
    line: usize,
    col: usize,
}

// ---------------------------------------------------------------------------
// Statement parser
// ---------------------------------------------------------------------------

struct Cursor<'a> {
    toks: &'a [Tok],
    at: usize,
    end_line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at)
    }

    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.at);
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        match self.peek() {
            Some(t) => (t.line, t.col),
            None => (self.end_line, self.end_col),
        }
    }

    fn expect(&mut self, kind: &TokKind, what: &str) -> Result<(), ParseError> {
        let (line, col) = self.here();
        match self.next() {
            Some(t) if t.kind == *kind => Ok(()),
            Some(t) => err(t.line, t.col, format!("expected {what}, found {}", t.kind.describe())),
            None => err(line, col, format!("expected {what}, found end of line")),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize, usize), ParseError> {
        let (line, col) = self.here();
        match self.next() {
            Some(Tok { kind: TokKind::Ident(s), line, col }) => Ok((s.clone(), *line, *col)),
            Some(t) => err(t.line, t.col, format!("expected {what}, found {}", t.kind.describe())),
            None => err(line, col, format!("expected {what}, found end of line")),
        }
    }

    fn done(&self) -> bool {
        self.at >= self.toks.len()
    }

    fn expect_done(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => err(t.line, t.col, format!("unexpected {}", t.kind.describe())),
        }
    }
}

fn parse_i64(text: &str, line: usize, col: usize) -> Result<i64, ParseError> {
    text.parse::<i64>()
        .map_err(|_| ParseError { line, col, message: format!("integer literal `{text}` out of range") })
}

/// `name` or `name[i, j]` where each index is an integer or a variable.
fn parse_factor(cur: &mut Cursor) -> Result<PatFactor, ParseError> {
    let (family, line, col) = cur.ident("a letter name")?;
    let mut indices = Vec::new();
    if let Some(Tok { kind: TokKind::LBrack, .. }) = cur.peek() {
        cur.next();
        loop {
            let (iline, icol) = cur.here();
            match cur.next() {
                Some(Tok { kind: TokKind::Int(s), line, col }) => {
                    indices.push(PatIndex::Lit(parse_i64(s, *line, *col)?));
                }
                Some(Tok { kind: TokKind::Minus, .. }) => {
                    let (nline, ncol) = cur.here();
                    match cur.next() {
                        Some(Tok { kind: TokKind::Int(s), line, col }) => {
                            indices.push(PatIndex::Lit(-parse_i64(s, *line, *col)?));
                        }
                        _ => return err(nline, ncol, "expected an integer after `-`"),
                    }
                }
                Some(Tok { kind: TokKind::Ident(v), .. }) => {
                    indices.push(PatIndex::Var(v.clone()));
                }
                Some(t) => {
                    return err(t.line, t.col, format!("expected an index, found {}", t.kind.describe()))
                }
                None => return err(iline, icol, "expected an index, found end of line"),
            }
            match cur.next() {
                Some(Tok { kind: TokKind::Comma, .. }) => continue,
                Some(Tok { kind: TokKind::RBrack, .. }) => break,
                Some(t) => {
                    return err(t.line, t.col, format!("expected `,` or `]`, found {}", t.kind.describe()))
                }
                None => return err(line, col, "unterminated index list"),
            }
        }
    }
    Ok(PatFactor { family, indices, line, col })
}

/// `lo..hi` with optional `-` on either bound.
fn parse_range(cur: &mut Cursor) -> Result<(i64, i64), ParseError> {
    let bound = |cur: &mut Cursor| -> Result<i64, ParseError> {
        let (line, col) = cur.here();
        let neg = matches!(cur.peek(), Some(Tok { kind: TokKind::Minus, .. }));
        if neg {
            cur.next();
        }
        match cur.next() {
            Some(Tok { kind: TokKind::Int(s), line, col }) => {
                let v = parse_i64(s, *line, *col)?;
                Ok(if neg { -v } else { v })
            }
            Some(t) => err(t.line, t.col, format!("expected a range bound, found {}", t.kind.describe())),
            None => err(line, col, "expected a range bound, found end of line"),
        }
    };
    let lo = bound(cur)?;
    cur.expect(&TokKind::DotDot, "`..`")?;
    let hi = bound(cur)?;
    Ok((lo, hi))
}

/// `Name` or `Name[lo..hi, lo..hi]` in a `letters` declaration.
fn parse_family_shape(cur: &mut Cursor) -> Result<(String, Vec<(i64, i64)>), ParseError> {
    let (family, line, col) = cur.ident("a family name")?;
    if KEYWORDS.contains(&family.as_str()) {
        return err(line, col, format!("`{family}` is a reserved word"));
    }
    let mut ranges = Vec::new();
    if let Some(Tok { kind: TokKind::LBrack, .. }) = cur.peek() {
        cur.next();
        loop {
            let (rline, rcol) = cur.here();
            ranges.push(parse_range(cur)?);
            if ranges.len() > 4 {
                return err(rline, rcol, "letter families support at most 4 index dimensions");
            }
            match cur.next() {
                Some(Tok { kind: TokKind::Comma, .. }) => continue,
                Some(Tok { kind: TokKind::RBrack, .. }) => break,
                Some(t) => {
                    return err(t.line, t.col, format!("expected `,` or `]`, found {}", t.kind.describe()))
                }
                None => return err(line, col, "unterminated range list"),
            }
        }
    }
    Ok((family, ranges))
}

fn parse_letters(cur: &mut Cursor) -> Result<Stmt, ParseError> {
    let (family, ranges) = parse_family_shape(cur)?;
    let (kline, kcol) = cur.here();
    let (kw, kwline, kwcol) = cur.ident("`hermitian` or `adjoint`")?;
    let decl = match kw.as_str() {
        "hermitian" => LetterDecl { family, ranges, adjoint_family: None },
        "adjoint" => {
            let (partner, pranges) = parse_family_shape(cur)?;
            if partner == family || pranges != ranges {
                return err(
                    kwline,
                    kwcol,
                    "adjoint declaration is not an involution: the partner family must be distinct and have the same index ranges",
                );
            }
            LetterDecl { family, ranges, adjoint_family: Some(partner) }
        }
        other => return err(kline, kcol, format!("expected `hermitian` or `adjoint`, found `{other}`")),
    };
    cur.expect_done()?;
    Ok(Stmt::Letters(decl))
}

fn parse_rule(cur: &mut Cursor) -> Result<Stmt, ParseError> {
    let (lline, lcol) = cur.here();
    let mut lhs = vec![parse_factor(cur)?];
    while let Some(Tok { kind: TokKind::Star, .. }) = cur.peek() {
        cur.next();
        lhs.push(parse_factor(cur)?);
    }
    if lhs.len() != 2 {
        return err(lline, lcol, "left-hand side must have degree two");
    }
    cur.expect(&TokKind::Arrow, "`->`")?;
    let (rline, rcol) = cur.here();
    let rhs = match cur.peek() {
        Some(Tok { kind: TokKind::Int(s), .. }) if s == "0" => {
            cur.next();
            RuleRhs::Zero
        }
        Some(Tok { kind: TokKind::Int(s), .. }) if s == "1" => {
            cur.next();
            RuleRhs::Factors(Vec::new())
        }
        Some(Tok { kind: TokKind::Minus, .. }) => {
            return err(rline, rcol, "replacements cannot carry a sign")
        }
        _ => {
            let mut factors = vec![parse_factor(cur)?];
            while let Some(Tok { kind: TokKind::Star, .. }) = cur.peek() {
                cur.next();
                factors.push(parse_factor(cur)?);
            }
            if factors.len() > 2 {
                return err(rline, rcol, "right-hand side must have degree at most two");
            }
            RuleRhs::Factors(factors)
        }
    };
    cur.expect_done()?;
    // Every variable on the right must be bound on the left.
    let bound: Vec<&str> = lhs
        .iter()
        .flat_map(|f| f.indices.iter())
        .filter_map(|i| match i {
            PatIndex::Var(v) => Some(v.as_str()),
            PatIndex::Lit(_) => None,
        })
        .collect();
    if let RuleRhs::Factors(factors) = &rhs {
        for f in factors {
            for idx in &f.indices {
                if let PatIndex::Var(v) = idx {
                    if !bound.contains(&v.as_str()) {
                        return err(f.line, f.col, format!("unbound index variable `{v}` on right-hand side"));
                    }
                }
            }
        }
    }
    Ok(Stmt::Rule { lhs, rhs })
}

fn parse_generator(cur: &mut Cursor) -> Result<Stmt, ParseError> {
    let (name, nline, ncol) = cur.ident("a generator name")?;
    if KEYWORDS.contains(&name.as_str()) {
        return err(nline, ncol, format!("`{name}` is a reserved word"));
    }
    cur.expect(&TokKind::Colon, "`:`")?;
    let mut maps = Vec::new();
    loop {
        let lhs = parse_factor(cur)?;
        cur.expect(&TokKind::Arrow, "`->`")?;
        let negate = matches!(cur.peek(), Some(Tok { kind: TokKind::Minus, .. }));
        if negate {
            cur.next();
        }
        let rhs = parse_factor(cur)?;
        // Right-side variables must be bound by this map's left side.
        let bound: Vec<&str> = lhs
            .indices
            .iter()
            .filter_map(|i| match i {
                PatIndex::Var(v) => Some(v.as_str()),
                PatIndex::Lit(_) => None,
            })
            .collect();
        for idx in &rhs.indices {
            if let PatIndex::Var(v) = idx {
                if !bound.contains(&v.as_str()) {
                    return err(rhs.line, rhs.col, format!("unbound index variable `{v}` on right-hand side"));
                }
            }
        }
        maps.push((lhs, negate, rhs));
        match cur.peek() {
            Some(Tok { kind: TokKind::Comma, .. }) => {
                cur.next();
            }
            None => break,
            Some(t) => {
                return err(t.line, t.col, format!("expected `,` or end of line, found {}", t.kind.describe()))
            }
        }
    }
    Ok(Stmt::Generator { name, maps })
}

fn parse_eval_scope(cur: &mut Cursor) -> Result<EvalScope, ParseError> {
    let (first, line, col) = cur.ident("`all` or a family name")?;
    if first == "all" {
        cur.expect_done()?;
        return Ok(EvalScope::All);
    }
    if KEYWORDS.contains(&first.as_str()) {
        return err(line, col, format!("`{first}` is a reserved word"));
    }
    let mut families = vec![first];
    while !cur.done() {
        let (fam, fline, fcol) = cur.ident("a family name")?;
        if KEYWORDS.contains(&fam.as_str()) {
            return err(fline, fcol, format!("`{fam}` is a reserved word"));
        }
        families.push(fam);
    }
    Ok(EvalScope::Families(families))
}

fn parse_evaluation(cur: &mut Cursor) -> Result<Stmt, ParseError> {
    let (kind, line, col) = cur.ident("`real`, `transpose`, or `cyclic`")?;
    match kind.as_str() {
        "real" => {
            cur.expect_done()?;
            // Adjoint identification is always on; the directive documents it.
            Ok(Stmt::Transpose(EvalScope::Families(Vec::new())))
        }
        "transpose" => Ok(Stmt::Transpose(parse_eval_scope(cur)?)),
        "cyclic" => Ok(Stmt::Cyclic(parse_eval_scope(cur)?)),
        other => err(line, col, format!("expected `real`, `transpose`, or `cyclic`, found `{other}`")),
    }
}

// Expression grammar:  expr := term (('+'|'-') term)*
//                      term := unary (('*'|'/') unary)*
//                     unary := '-' unary | atom
//                      atom := number | letter | '(' expr ')'
fn parse_expr(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let mut acc = parse_term(cur)?;
    loop {
        match cur.peek() {
            Some(Tok { kind: TokKind::Plus, .. }) => {
                cur.next();
                let rhs = parse_term(cur)?;
                acc = Expr::Add(Box::new(acc), Box::new(rhs));
            }
            Some(Tok { kind: TokKind::Minus, .. }) => {
                cur.next();
                let rhs = parse_term(cur)?;
                acc = Expr::Sub(Box::new(acc), Box::new(rhs));
            }
            _ => return Ok(acc),
        }
    }
}

fn parse_term(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let mut acc = parse_unary(cur)?;
    loop {
        match cur.peek() {
            Some(Tok { kind: TokKind::Star, .. }) => {
                cur.next();
                let rhs = parse_unary(cur)?;
                acc = Expr::Mul(Box::new(acc), Box::new(rhs));
            }
            Some(Tok { kind: TokKind::Slash, line, col }) => {
                let (line, col) = (*line, *col);
                cur.next();
                let rhs = parse_unary(cur)?;
                acc = Expr::Div(Box::new(acc), Box::new(rhs), line, col);
            }
            _ => return Ok(acc),
        }
    }
}

fn parse_unary(cur: &mut Cursor) -> Result<Expr, ParseError> {
    if let Some(Tok { kind: TokKind::Minus, .. }) = cur.peek() {
        cur.next();
        return Ok(Expr::Neg(Box::new(parse_unary(cur)?)));
    }
    parse_atom(cur)
}

fn rational_from_float_text(text: &str, line: usize, col: usize) -> Result<BigRational, ParseError> {
    let (mantissa, exponent) = match text.split_once(['e', 'E']) {
        Some((m, e)) => (m, e),
        None => (text, "0"),
    };
    let exp: i64 = exponent
        .parse()
        .map_err(|_| ParseError { line, col, message: format!("exponent `{exponent}` out of range") })?;
    if exp.abs() > 4096 {
        return err(line, col, format!("exponent `{exponent}` out of range"));
    }
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    let digits: String = format!("{int_part}{frac_part}");
    let numer = BigInt::parse_bytes(digits.as_bytes(), 10)
        .ok_or_else(|| ParseError { line, col, message: format!("malformed number `{text}`") })?;
    let scale = frac_part.len() as i64;
    let net = exp - scale;
    let ten = BigInt::from(10);
    if net >= 0 {
        Ok(BigRational::from(numer * ten.pow(net as u32)))
    } else {
        Ok(BigRational::new(numer, ten.pow((-net) as u32)))
    }
}

fn parse_atom(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let (line, col) = cur.here();
    match cur.peek() {
        Some(Tok { kind: TokKind::Int(s), line, col }) => {
            let (s, line, col) = (s.clone(), *line, *col);
            cur.next();
            let numer = BigInt::parse_bytes(s.as_bytes(), 10)
                .ok_or_else(|| ParseError { line, col, message: format!("malformed number `{s}`") })?;
            Ok(Expr::Num(BigRational::from(numer)))
        }
        Some(Tok { kind: TokKind::Float(s), line, col }) => {
            let (s, line, col) = (s.clone(), *line, *col);
            cur.next();
            Ok(Expr::Num(rational_from_float_text(&s, line, col)?))
        }
        Some(Tok { kind: TokKind::LParen, .. }) => {
            cur.next();
            let inner = parse_expr(cur)?;
            cur.expect(&TokKind::RParen, "`)`")?;
            Ok(inner)
        }
        Some(Tok { kind: TokKind::Ident(_), .. }) => {
            let factor = parse_factor(cur)?;
            for idx in &factor.indices {
                if let PatIndex::Var(v) = idx {
                    return err(
                        factor.line,
                        factor.col,
                        format!("index variables such as `{v}` are not allowed in the objective"),
                    );
                }
            }
            Ok(Expr::Letter(factor))
        }
        Some(t) => err(t.line, t.col, format!("expected a term, found {}", t.kind.describe())),
        None => err(line, col, "expected a term, found end of line"),
    }
}

fn parse_statement(cur: &mut Cursor) -> Result<Stmt, ParseError> {
    let (line, col) = cur.here();
    let head = match cur.next() {
        Some(Tok { kind: TokKind::Ident(s), .. }) => s.clone(),
        Some(t) => {
            return err(t.line, t.col, format!("expected a declaration keyword, found {}", t.kind.describe()))
        }
        None => return err(line, col, "expected a declaration keyword"),
    };
    match head.as_str() {
        "letters" => parse_letters(cur),
        "rule" => parse_rule(cur),
        "generator" => {
            let stmt = parse_generator(cur)?;
            cur.expect_done()?;
            Ok(stmt)
        }
        "evaluation" => parse_evaluation(cur),
        "objective" => {
            let expr = parse_expr(cur)?;
            cur.expect_done()?;
            Ok(Stmt::Objective(expr))
        }
        "level" => {
            let (nline, ncol) = cur.here();
            match cur.next() {
                Some(Tok { kind: TokKind::Int(s), line, col }) => {
                    let n: usize = s.parse().map_err(|_| ParseError {
                        line: *line,
                        col: *col,
                        message: format!("level `{s}` out of range"),
                    })?;
                    if n == 0 {
                        return err(*line, *col, "level must be at least 1");
                    }
                    cur.expect_done()?;
                    Ok(Stmt::Level(n))
                }
                Some(t) => err(t.line, t.col, format!("expected a level, found {}", t.kind.describe())),
                None => err(nline, ncol, "expected a level, found end of line"),
            }
        }
        "split" => {
            let (name, _, _) = cur.ident("a generator name")?;
            cur.expect_done()?;
            Ok(Stmt::Split(name))
        }
        "option" => {
            let (key, _, _) = cur.ident("an option name")?;
            let (vline, vcol) = cur.here();
            let value = match cur.next() {
                Some(Tok { kind: TokKind::Int(s), .. }) => s.clone(),
                Some(Tok { kind: TokKind::Float(s), .. }) => s.clone(),
                Some(Tok { kind: TokKind::Ident(s), .. }) => s.clone(),
                Some(t) => {
                    return err(t.line, t.col, format!("expected an option value, found {}", t.kind.describe()))
                }
                None => return err(vline, vcol, "expected an option value, found end of line"),
            };
            cur.expect_done()?;
            Ok(Stmt::Option { key, value })
        }
        "constraint" => err(
            line,
            col,
            "constraint declarations are not supported; encode constraints as rewrite rules",
        ),
        other => err(line, col, format!("unknown declaration `{other}`")),
    }
}

fn parse_statements(text: &str) -> Result<Vec<PosStmt>, ParseError> {
    let toks = lex(text)?;
    let mut stmts = Vec::new();
    let mut start = 0;
    for i in 0..toks.len() {
        if toks[i].kind != TokKind::Newline {
            continue;
        }
        if i > start {
            let slice = &toks[start..i];
            let mut cur = Cursor {
                toks: slice,
                at: 0,
                end_line: toks[i].line,
                end_col: toks[i].col,
            };
            let (line, col) = (slice[0].line, slice[0].col);
            let stmt = parse_statement(&mut cur)?;
            stmts.push(PosStmt { stmt, line, col });
        }
        start = i + 1;
    }
    Ok(stmts)
}

// ---------------------------------------------------------------------------
// Compilation
// ---------------------------------------------------------------------------

/// Enumerates the concrete index tuples of a declaration, row-major.
fn enumerate_indices(ranges: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let mut tuples: Vec<Vec<i64>> = vec![Vec::new()];
    for &(lo, hi) in ranges {
        let mut next = Vec::new();
        for t in &tuples {
            for v in lo..=hi {
                let mut t = t.clone();
                t.push(v);
                next.push(t);
            }
        }
        tuples = next;
    }
    tuples
}

fn decl_size(ranges: &[(i64, i64)]) -> Option<usize> {
    let mut size: usize = 1;
    for &(lo, hi) in ranges {
        if lo > hi {
            return None;
        }
        let span = (hi - lo).checked_add(1)? as usize;
        size = size.checked_mul(span)?;
        if size > MAX_LETTERS {
            return Some(size);
        }
    }
    Some(size)
}

fn match_factor(pat: &PatFactor, letter: &Letter, bind: &mut HashMap<String, i64>) -> bool {
    if pat.family != letter.family || pat.indices.len() != letter.indices.len() {
        return false;
    }
    for (p, &v) in pat.indices.iter().zip(letter.indices.iter()) {
        match p {
            PatIndex::Lit(w) => {
                if *w != v {
                    return false;
                }
            }
            PatIndex::Var(name) => match bind.get(name) {
                Some(&bound) => {
                    if bound != v {
                        return false;
                    }
                }
                None => {
                    bind.insert(name.clone(), v);
                }
            },
        }
    }
    true
}

/// Resolves a pattern factor under a variable binding to a concrete letter.
fn resolve_factor(
    pat: &PatFactor,
    bind: &HashMap<String, i64>,
    alphabet: &Alphabet,
) -> Result<LetterId, ParseError> {
    let mut indices = Vec::with_capacity(pat.indices.len());
    for idx in &pat.indices {
        match idx {
            PatIndex::Lit(v) => indices.push(*v),
            PatIndex::Var(name) => match bind.get(name) {
                Some(&v) => indices.push(v),
                None => {
                    return err(pat.line, pat.col, format!("unbound index variable `{name}`"))
                }
            },
        }
    }
    match alphabet.find(&pat.family, &indices) {
        Some(id) => Ok(id),
        None => {
            let shown = PatFactor {
                family: pat.family.clone(),
                indices: indices.iter().map(|&v| PatIndex::Lit(v)).collect(),
                line: pat.line,
                col: pat.col,
            };
            err(pat.line, pat.col, format!("unknown letter `{}`", display_pat(&shown)))
        }
    }
}

fn display_pat(pat: &PatFactor) -> String {
    if pat.indices.is_empty() {
        return pat.family.clone();
    }
    let idx: Vec<String> = pat
        .indices
        .iter()
        .map(|i| match i {
            PatIndex::Lit(v) => v.to_string(),
            PatIndex::Var(v) => v.clone(),
        })
        .collect();
    format!("{}[{}]", pat.family, idx.join(", "))
}

fn build_alphabet(
    decls: &[(LetterDecl, usize, usize)],
) -> Result<(Alphabet, Vec<LetterDecl>), ParseError> {
    let mut letters: Vec<Letter> = Vec::new();
    let mut adjoint: Vec<LetterId> = Vec::new();
    let mut families: Vec<String> = Vec::new();
    let mut out = Vec::new();
    for (decl, line, col) in decls {
        let (line, col) = (*line, *col);
        for fam in [Some(&decl.family), decl.adjoint_family.as_ref()].into_iter().flatten() {
            if families.contains(fam) {
                return err(line, col, format!("duplicate letter family `{fam}`"));
            }
            families.push(fam.clone());
        }
        let size = match decl_size(&decl.ranges) {
            Some(s) => s,
            None => return err(line, col, "empty index range in letter declaration"),
        };
        let total = letters.len()
            + size
                .checked_mul(if decl.adjoint_family.is_some() { 2 } else { 1 })
                .unwrap_or(usize::MAX);
        if total > MAX_LETTERS {
            return err(line, col, format!("too many letters: the limit is {MAX_LETTERS}"));
        }
        let tuples = enumerate_indices(&decl.ranges);
        match &decl.adjoint_family {
            None => {
                for t in &tuples {
                    letters.push(Letter { family: decl.family.clone(), indices: t.clone() });
                    adjoint.push(letters.len() as LetterId);
                }
            }
            Some(partner) => {
                let base = letters.len();
                let k = tuples.len();
                for t in &tuples {
                    letters.push(Letter { family: decl.family.clone(), indices: t.clone() });
                }
                for t in &tuples {
                    letters.push(Letter { family: partner.clone(), indices: t.clone() });
                }
                for pos in 0..k {
                    adjoint.push((base + k + pos + 1) as LetterId);
                }
                for pos in 0..k {
                    adjoint.push((base + pos + 1) as LetterId);
                }
            }
        }
        out.push(decl.clone());
    }
    let alphabet = Alphabet::new(letters, adjoint)
        .map_err(|e| ParseError { line: 1, col: 1, message: format!("{e}") })?;
    Ok((alphabet, out))
}

fn compile_rules(
    alphabet: &Alphabet,
    rules: &[(Vec<PatFactor>, RuleRhs, usize, usize)],
) -> Result<RewriteSystem, ParseError> {
    let mut builder = RewriteSystemBuilder::new(alphabet.clone());
    let n = alphabet.size() as LetterId;
    let mut work: usize = 0;
    for (lhs, rhs, line, col) in rules {
        let (line, col) = (*line, *col);
        for i in 1..=n {
            let mut bind_i = HashMap::new();
            if !match_factor(&lhs[0], alphabet.letter(i), &mut bind_i) {
                continue;
            }
            for j in 1..=n {
                work += 1;
                if work > MAX_RULE_WORK {
                    return err(line, col, "rule expansion exceeds the internal work limit");
                }
                if builder.has_rule(i, j) {
                    continue; // an earlier rule already claimed this pair
                }
                let mut bind = bind_i.clone();
                if !match_factor(&lhs[1], alphabet.letter(j), &mut bind) {
                    continue;
                }
                let replacement = match rhs {
                    RuleRhs::Zero => SignedWord::zero(),
                    RuleRhs::Factors(factors) => {
                        let mut ids = Vec::with_capacity(factors.len());
                        for f in factors {
                            ids.push(resolve_factor(f, &bind, alphabet)?);
                        }
                        SignedWord::positive(Word::from_letters(ids))
                    }
                };
                if let SignedWord::Term { word, .. } = &replacement {
                    if word.letters() == [i, j] {
                        continue; // the pair maps to itself: leave it untouched
                    }
                }
                builder
                    .set_rule(i, j, &replacement)
                    .map_err(|e| ParseError { line, col, message: format!("{e}") })?;
            }
        }
    }
    let first_rule_pos = rules.first().map(|(_, _, l, c)| (*l, *c)).unwrap_or((1, 1));
    builder.build().map_err(|e| ParseError {
        line: first_rule_pos.0,
        col: first_rule_pos.1,
        message: format!("{e}"),
    })
}

fn compile_generator(
    alphabet: &Alphabet,
    rewrite: &RewriteSystem,
    name: &str,
    maps: &[(PatFactor, bool, PatFactor)],
    line: usize,
    col: usize,
) -> Result<GeneralizedPermutation, ParseError> {
    let n = alphabet.size();
    let mut images: Vec<Option<i32>> = vec![None; n];
    for (lhs, negate, rhs) in maps {
        for i in 1..=n as LetterId {
            let mut bind = HashMap::new();
            if !match_factor(lhs, alphabet.letter(i), &mut bind) {
                continue;
            }
            if images[i as usize - 1].is_some() {
                continue; // first matching map wins
            }
            let target = resolve_factor(rhs, &bind, alphabet)?;
            let v = target as i32;
            images[i as usize - 1] = Some(if *negate { -v } else { v });
        }
    }
    let images: Vec<i32> = images
        .into_iter()
        .enumerate()
        .map(|(k, v)| v.unwrap_or((k + 1) as i32))
        .collect();
    let g = GeneralizedPermutation::new(images)
        .map_err(|e| ParseError { line, col, message: format!("generator `{name}`: {e}") })?;
    if !g.commutes_with_adjoint(alphabet) {
        return err(line, col, format!("generator `{name}` does not commute with the adjoint"));
    }
    match rewrite.check_compatibility(&g) {
        Ok(true) => Ok(g),
        Ok(false) => err(line, col, format!("generator `{name}` does not preserve the rewrite rules")),
        Err(e) => err(line, col, format!("generator `{name}`: {e}")),
    }
}

fn compile_expr(
    expr: &Expr,
    alphabet: &Alphabet,
    rewrite: &RewriteSystem,
) -> Result<Polynomial, ParseError> {
    match expr {
        Expr::Num(c) => Ok(Polynomial::constant(c.clone())),
        Expr::Letter(f) => {
            let id = resolve_factor(f, &HashMap::new(), alphabet)?;
            Ok(Polynomial::from_signed_word(&SignedWord::positive(Word::single(id))))
        }
        Expr::Neg(e) => Ok(compile_expr(e, alphabet, rewrite)?.neg()),
        Expr::Add(a, b) => {
            Ok(compile_expr(a, alphabet, rewrite)?.add(&compile_expr(b, alphabet, rewrite)?))
        }
        Expr::Sub(a, b) => {
            Ok(compile_expr(a, alphabet, rewrite)?.sub(&compile_expr(b, alphabet, rewrite)?))
        }
        Expr::Mul(a, b) => {
            let a = compile_expr(a, alphabet, rewrite)?;
            let b = compile_expr(b, alphabet, rewrite)?;
            rewrite
                .mul_poly(&a, &b)
                .map_err(|e| ParseError { line: 1, col: 1, message: format!("{e}") })
        }
        Expr::Div(a, b, line, col) => {
            let a = compile_expr(a, alphabet, rewrite)?;
            let b = compile_expr(b, alphabet, rewrite)?;
            let divisor = constant_value(&b)
                .ok_or_else(|| ParseError {
                    line: *line,
                    col: *col,
                    message: "division is only supported by a constant".into(),
                })?;
            if divisor.is_zero() {
                return err(*line, *col, "division by zero");
            }
            Ok(a.scale(&(BigRational::one() / divisor)))
        }
    }
}

fn constant_value(p: &Polynomial) -> Option<BigRational> {
    if p.is_zero() {
        return Some(BigRational::zero());
    }
    if p.num_terms() == 1 {
        let (word, coef) = p.terms().next().unwrap();
        if word.is_empty() {
            return Some(coef.clone());
        }
    }
    None
}

/// Parses and compiles a problem file.
pub fn parse_problem(text: &str) -> Result<ProblemDefinition, ParseError> {
    let stmts = parse_statements(text)?;
    let eof_line = text.lines().count().max(1);

    // Bucket statements by kind; compilation runs in dependency order, so
    // declarations may appear in any order in the file.
    let mut letter_stmts = Vec::new();
    let mut rule_stmts = Vec::new();
    let mut gen_stmts = Vec::new();
    let mut eval_stmts = Vec::new();
    let mut objective_stmt: Option<(Expr, usize, usize)> = None;
    let mut level_stmt: Option<(usize, usize, usize)> = None;
    let mut split_stmt: Option<(String, usize, usize)> = None;
    let mut option_stmts = Vec::new();
    for ps in stmts {
        let (line, col) = (ps.line, ps.col);
        match ps.stmt {
            Stmt::Letters(decl) => letter_stmts.push((decl, line, col)),
            Stmt::Rule { lhs, rhs } => rule_stmts.push((lhs, rhs, line, col)),
            Stmt::Generator { name, maps } => gen_stmts.push((name, maps, line, col)),
            Stmt::Transpose(scope) => eval_stmts.push((false, scope, line, col)),
            Stmt::Cyclic(scope) => eval_stmts.push((true, scope, line, col)),
            Stmt::Objective(expr) => {
                if objective_stmt.is_some() {
                    return err(line, col, "duplicate objective declaration");
                }
                objective_stmt = Some((expr, line, col));
            }
            Stmt::Level(n) => {
                if level_stmt.is_some() {
                    return err(line, col, "duplicate level declaration");
                }
                level_stmt = Some((n, line, col));
            }
            Stmt::Split(name) => {
                if split_stmt.is_some() {
                    return err(line, col, "duplicate split declaration");
                }
                split_stmt = Some((name, line, col));
            }
            Stmt::Option { key, value } => option_stmts.push((key, value, line, col)),
        }
    }

    let (alphabet, letter_decls) = build_alphabet(&letter_stmts)?;
    let rewrite = compile_rules(&alphabet, &rule_stmts)?;

    let mut generators: Vec<(String, GeneralizedPermutation)> = Vec::new();
    for (name, maps, line, col) in &gen_stmts {
        if generators.iter().any(|(n, _)| n == name) {
            return err(*line, *col, format!("duplicate generator `{name}`"));
        }
        let g = compile_generator(&alphabet, &rewrite, name, maps, *line, *col)?;
        generators.push((name.clone(), g));
    }

    let mut evaluation = EvaluationRules::real();
    for (cyclic, scope, line, col) in &eval_stmts {
        let pred = match scope {
            EvalScope::All => EvaluationRules::predicate_all(&alphabet),
            EvalScope::Families(fams) if fams.is_empty() => continue, // `evaluation real`
            EvalScope::Families(fams) => {
                for fam in fams {
                    if !alphabet.letters().iter().any(|l| &l.family == fam) {
                        return err(*line, *col, format!("unknown letter family `{fam}`"));
                    }
                }
                EvaluationRules::predicate_from_families(&alphabet, fams)
            }
        };
        if *cyclic {
            evaluation.cyclic_predicates.push(pred);
        } else {
            evaluation.transpose_predicates.push(pred);
        }
    }

    let (expr, oline, ocol) = match objective_stmt {
        Some(o) => o,
        None => return err(eof_line, 1, "missing objective"),
    };
    let raw = compile_expr(&expr, &alphabet, &rewrite)?;
    let objective = rewrite
        .normalize_poly(&raw)
        .map_err(|e| ParseError { line: oline, col: ocol, message: format!("{e}") })?;
    let adjoint_nf = rewrite
        .normalize_poly(&objective.adjoint(&alphabet))
        .map_err(|e| ParseError { line: oline, col: ocol, message: format!("{e}") })?;
    if objective != adjoint_nf {
        return err(oline, ocol, "objective is not self-adjoint");
    }

    let level = level_stmt.map(|(n, _, _)| n).unwrap_or(1);
    if objective.degree() > 2 * level {
        return err(
            oline,
            ocol,
            format!("objective degree {} exceeds 2*level = {}", objective.degree(), 2 * level),
        );
    }

    let split = match split_stmt {
        None => None,
        Some((name, line, col)) => {
            let g = match generators.iter().find(|(n, _)| n == &name) {
                Some((_, g)) => g,
                None => return err(line, col, format!("unknown generator `{name}` in split declaration")),
            };
            if PermGroup::element_order(g) != 2 {
                return err(line, col, format!("split generator `{name}` must have order two"));
            }
            Some(name)
        }
    };

    let mut options = ProblemOptions::default();
    let mut seen_keys: Vec<String> = Vec::new();
    for (key, value, line, col) in &option_stmts {
        if seen_keys.contains(key) {
            return err(*line, *col, format!("duplicate option `{key}`"));
        }
        seen_keys.push(key.clone());
        let parse_usize = |v: &str| -> Result<usize, ParseError> {
            v.parse().map_err(|_| ParseError {
                line: *line,
                col: *col,
                message: format!("option `{key}` expects a positive integer, found `{v}`"),
            })
        };
        match key.as_str() {
            "group_cap" => options.group_cap = parse_usize(value)?.max(1),
            "basis_cap" => options.basis_cap = parse_usize(value)?.max(1),
            "closure_cap" => options.closure_cap = parse_usize(value)?.max(1),
            "coupling_tol" => {
                let v: f64 = value.parse().map_err(|_| ParseError {
                    line: *line,
                    col: *col,
                    message: format!("option `coupling_tol` expects a number, found `{value}`"),
                })?;
                if !v.is_finite() || v <= 0.0 {
                    return err(*line, *col, "option `coupling_tol` must be a positive finite number");
                }
                options.coupling_tol = v;
            }
            other => return err(*line, *col, format!("unknown option `{other}`")),
        }
    }

    Ok(ProblemDefinition {
        alphabet,
        letter_decls,
        rewrite,
        generators,
        evaluation,
        objective,
        level,
        split,
        options,
    })
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

fn dsl_letter(alphabet: &Alphabet, id: LetterId) -> String {
    let l = alphabet.letter(id);
    if l.indices.is_empty() {
        return l.family.clone();
    }
    let idx: Vec<String> = l.indices.iter().map(|v| v.to_string()).collect();
    format!("{}[{}]", l.family, idx.join(", "))
}

fn dsl_word(alphabet: &Alphabet, word: &Word) -> String {
    if word.is_empty() {
        return "1".into();
    }
    let parts: Vec<String> = word.letters().iter().map(|&id| dsl_letter(alphabet, id)).collect();
    parts.join("*")
}

fn dsl_ranges(ranges: &[(i64, i64)]) -> String {
    if ranges.is_empty() {
        return String::new();
    }
    let parts: Vec<String> = ranges.iter().map(|(lo, hi)| format!("{lo}..{hi}")).collect();
    format!("[{}]", parts.join(", "))
}

fn dsl_rational(c: &BigRational) -> String {
    if c.denom().is_one() {
        format!("{}", c.numer())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn dsl_polynomial(alphabet: &Alphabet, p: &Polynomial) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, (word, coef)) in p.terms().enumerate() {
        let mag = coef.abs();
        let negative = coef.is_negative();
        if k == 0 {
            if negative {
                out.push('-');
            }
        } else if negative {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        let mut parts: Vec<String> = Vec::new();
        if !mag.is_one() || word.is_empty() {
            parts.push(dsl_rational(&mag));
        }
        for &id in word.letters() {
            parts.push(dsl_letter(alphabet, id));
        }
        out.push_str(&parts.join("*"));
    }
    out
}

/// Renders a problem definition back to source text. The output is
/// deterministic, and `parse_problem(print_problem(pd))` equals `pd`.
pub fn print_problem(pd: &ProblemDefinition) -> String {
    let mut out = String::new();
    let a = &pd.alphabet;
    for decl in &pd.letter_decls {
        match &decl.adjoint_family {
            None => {
                out.push_str(&format!("letters {}{} hermitian\n", decl.family, dsl_ranges(&decl.ranges)))
            }
            Some(partner) => out.push_str(&format!(
                "letters {}{} adjoint {}{}\n",
                decl.family,
                dsl_ranges(&decl.ranges),
                partner,
                dsl_ranges(&decl.ranges)
            )),
        }
    }
    let n = a.size() as LetterId;
    for i in 1..=n {
        for j in 1..=n {
            let lhs = format!("{}*{}", dsl_letter(a, i), dsl_letter(a, j));
            match pd.rewrite.code(i, j) {
                RuleCode::Preserve => {}
                RuleCode::SetZero => out.push_str(&format!("rule {lhs} -> 0\n")),
                RuleCode::RemoveBoth => out.push_str(&format!("rule {lhs} -> 1\n")),
                RuleCode::Swap => out.push_str(&format!(
                    "rule {lhs} -> {}*{}\n",
                    dsl_letter(a, j),
                    dsl_letter(a, i)
                )),
                RuleCode::KeepFirstDropSecond => {
                    out.push_str(&format!("rule {lhs} -> {}\n", dsl_letter(a, i)))
                }
                RuleCode::Custom => {
                    let w = pd.rewrite.custom_replacement(i, j).expect("custom rule has a replacement");
                    out.push_str(&format!("rule {lhs} -> {}\n", dsl_word(a, w)));
                }
            }
        }
    }
    for (name, g) in &pd.generators {
        let mut maps: Vec<String> = Vec::new();
        for i in 1..=n {
            let v = g.images()[i as usize - 1];
            if v == i as i32 {
                continue;
            }
            let sign = if v < 0 { "-" } else { "" };
            maps.push(format!(
                "{} -> {}{}",
                dsl_letter(a, i),
                sign,
                dsl_letter(a, v.unsigned_abs() as LetterId)
            ));
        }
        if maps.is_empty() {
            maps.push(format!("{} -> {}", dsl_letter(a, 1), dsl_letter(a, 1)));
        }
        out.push_str(&format!("generator {name}: {}\n", maps.join(", ")));
    }
    let scope_text = |pred: &[bool]| -> String {
        if pred.iter().all(|&b| b) {
            return "all".into();
        }
        let mut fams: Vec<&str> = Vec::new();
        for (k, l) in a.letters().iter().enumerate() {
            if pred[k] && !fams.contains(&l.family.as_str()) {
                fams.push(&l.family);
            }
        }
        fams.join(" ")
    };
    for pred in &pd.evaluation.transpose_predicates {
        out.push_str(&format!("evaluation transpose {}\n", scope_text(pred)));
    }
    for pred in &pd.evaluation.cyclic_predicates {
        out.push_str(&format!("evaluation cyclic {}\n", scope_text(pred)));
    }
    out.push_str(&format!("objective {}\n", dsl_polynomial(a, &pd.objective)));
    out.push_str(&format!("level {}\n", pd.level));
    if let Some(split) = &pd.split {
        out.push_str(&format!("split {split}\n"));
    }
    let defaults = ProblemOptions::default();
    if pd.options.group_cap != defaults.group_cap {
        out.push_str(&format!("option group_cap {}\n", pd.options.group_cap));
    }
    if pd.options.basis_cap != defaults.basis_cap {
        out.push_str(&format!("option basis_cap {}\n", pd.options.basis_cap));
    }
    if pd.options.closure_cap != defaults.closure_cap {
        out.push_str(&format!("option closure_cap {}\n", pd.options.closure_cap));
    }
    if pd.options.coupling_tol != defaults.coupling_tol {
        out.push_str(&format!("option coupling_tol {:?}\n", pd.options.coupling_tol));
    }
    out
}
