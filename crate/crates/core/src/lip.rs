//! Lipschitz scalar fields as expression trees with certified constants.
//!
//! A [`LipFunction`] is an evaluable expression on a declared box together
//! with two certificates: an upper bound on its Lipschitz constant over the
//! box and an upper bound on its sup norm there. Certificates propagate
//! through the closure rules
//!
//! - sum: constants and sup bounds add,
//! - scalar multiple: both scale by `|lambda|`,
//! - product: `c_{fg} <= c_f ||g|| + c_g ||f||`, `||fg|| <= ||f|| ||g||`,
//! - distance to a point (or to a finite set): constant 1,
//! - precomposition with an affine map: the constant multiplies by the map's
//!   certified ratio, the sup bound carries over.
//!
//! Leaf sup bounds carry a 1e-12 slack so that evaluation at points produced
//! by long chains of composed affine maps stays below the certificate.

use std::collections::BTreeMap;
use std::fmt;

use crate::affine::AffineMap;
use crate::graph::VertexId;
use crate::metric::{box_contains, euclid, BoundingBox};
use crate::{Error, Result};

const LEAF_SUP_SLACK: f64 = 1e-12;
const BOX_EVAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
enum Expr {
    Const(f64),
    Coord(usize),
    Add(Box<Expr>, Box<Expr>),
    Scale(f64, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    DistTo(Vec<f64>),
    DistToSet(Vec<Vec<f64>>),
    Precompose(AffineMap, Box<Expr>),
}

impl Expr {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(k) => *k,
            Expr::Coord(i) => x[*i],
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Scale(l, a) => l * a.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::DistTo(p) => euclid(x, p),
            Expr::DistToSet(pts) => pts
                .iter()
                .map(|p| euclid(x, p))
                .fold(f64::INFINITY, f64::min),
            Expr::Precompose(map, f) => {
                let y = map.apply(x).expect("dimension checked at construction");
                f.eval(&y)
            }
        }
    }

    /// The exact constant value when the expression is constant by structure.
    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(k) => Some(*k),
            Expr::Precompose(_, f) => f.as_const(),
            _ => None,
        }
    }
}

/// An evaluable scalar field on a declared box with certified Lipschitz
/// constant and sup-norm bound.
#[derive(Debug, Clone)]
pub struct LipFunction {
    expr: Expr,
    domain: BoundingBox,
    lip: f64,
    sup: f64,
}

impl LipFunction {
    /// The constant function.
    pub fn constant(domain: BoundingBox, value: f64) -> Self {
        LipFunction {
            expr: Expr::Const(value),
            sup: value.abs(),
            lip: 0.0,
            domain,
        }
    }

    /// The coordinate projection `x -> x_i`.
    pub fn coordinate(domain: BoundingBox, i: usize) -> Result<Self> {
        if i >= domain.len() {
            return Err(Error::InvalidArgument(format!(
                "coordinate {i} out of range for dimension {}",
                domain.len()
            )));
        }
        let sup = domain[i][0].abs().max(domain[i][1].abs()) + LEAF_SUP_SLACK;
        Ok(LipFunction {
            expr: Expr::Coord(i),
            domain,
            lip: 1.0,
            sup,
        })
    }

    /// Distance to a fixed point; Lipschitz constant 1.
    pub fn dist_to(domain: BoundingBox, p: Vec<f64>) -> Result<Self> {
        if p.len() != domain.len() {
            return Err(Error::DimensionMismatch(p.len(), domain.len()));
        }
        let sup = corner_max_dist(&domain, &p) + LEAF_SUP_SLACK;
        Ok(LipFunction {
            expr: Expr::DistTo(p),
            domain,
            lip: 1.0,
            sup,
        })
    }

    /// Distance to a finite point set (a minimum of distance functions);
    /// Lipschitz constant 1.
    pub fn dist_to_set(domain: BoundingBox, pts: Vec<Vec<f64>>) -> Result<Self> {
        if pts.is_empty() {
            return Err(Error::InvalidArgument("point set must be nonempty".into()));
        }
        if pts.iter().any(|p| p.len() != domain.len()) {
            return Err(Error::DimensionMismatch(pts[0].len(), domain.len()));
        }
        // min_j d(x, p_j) <= d(x, p_i) for each i, so the smallest single-point
        // sup bound is a sound bound for the minimum.
        let sup = pts
            .iter()
            .map(|p| corner_max_dist(&domain, p))
            .fold(f64::INFINITY, f64::min)
            + LEAF_SUP_SLACK;
        Ok(LipFunction {
            expr: Expr::DistToSet(pts),
            domain,
            lip: 1.0,
            sup,
        })
    }

    /// Pointwise sum; both operands must be declared on the same box.
    pub fn add(&self, other: &LipFunction) -> Result<Self> {
        self.check_same_domain(other)?;
        Ok(LipFunction {
            expr: Expr::Add(Box::new(self.expr.clone()), Box::new(other.expr.clone())),
            domain: self.domain.clone(),
            lip: self.lip + other.lip,
            sup: self.sup + other.sup,
        })
    }

    /// Scalar multiple.
    pub fn scale(&self, lambda: f64) -> Self {
        LipFunction {
            expr: Expr::Scale(lambda, Box::new(self.expr.clone())),
            domain: self.domain.clone(),
            lip: lambda.abs() * self.lip,
            sup: lambda.abs() * self.sup,
        }
    }

    /// Pointwise product; both operands must be declared on the same box.
    pub fn mul(&self, other: &LipFunction) -> Result<Self> {
        self.check_same_domain(other)?;
        Ok(LipFunction {
            expr: Expr::Mul(Box::new(self.expr.clone()), Box::new(other.expr.clone())),
            domain: self.domain.clone(),
            lip: self.lip * other.sup + other.lip * self.sup,
            sup: self.sup * other.sup,
        })
    }

    /// Precomposition `f . map` on a new domain whose image under `map` must
    /// lie inside the current domain. The certified constant multiplies by the
    /// map's certified ratio.
    pub fn precompose(&self, map: &AffineMap, domain: BoundingBox) -> Result<Self> {
        if map.dim_out() != self.domain.len() {
            return Err(Error::DimensionMismatch(map.dim_out(), self.domain.len()));
        }
        let image = map.image_box(&domain)?;
        for (iv, target) in image.iter().zip(&self.domain) {
            if iv[0] < target[0] - BOX_EVAL_TOL || iv[1] > target[1] + BOX_EVAL_TOL {
                return Err(Error::OutOfBox(format!(
                    "image [{}, {}] escapes declared box [{}, {}]",
                    iv[0], iv[1], target[0], target[1]
                )));
            }
        }
        Ok(LipFunction {
            expr: Expr::Precompose(map.clone(), Box::new(self.expr.clone())),
            domain,
            lip: self.lip * map.certified_ratio(),
            sup: self.sup,
        })
    }

    /// Declared box.
    pub fn domain(&self) -> &BoundingBox {
        &self.domain
    }

    /// Certified Lipschitz constant on the declared box.
    pub fn lip(&self) -> f64 {
        self.lip
    }

    /// Certified sup-norm bound on the declared box.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    /// The exact constant value when the function is constant by structure.
    pub fn as_const(&self) -> Option<f64> {
        self.expr.as_const()
    }

    /// Evaluates at a point of the declared box.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if !box_contains(&self.domain, x, BOX_EVAL_TOL) {
            return Err(Error::OutOfBox(format!("{x:?} not in {:?}", self.domain)));
        }
        Ok(self.expr.eval(x))
    }

    fn check_same_domain(&self, other: &LipFunction) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::InvalidArgument(
                "operands must be declared on the same box".into(),
            ));
        }
        Ok(())
    }
}

/// Largest distance from `p` to the box (attained at a corner).
fn corner_max_dist(bx: &[[f64; 2]], p: &[f64]) -> f64 {
    bx.iter()
        .zip(p)
        .map(|(iv, pi)| {
            let d = (iv[0] - pi).abs().max((iv[1] - pi).abs());
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// A scalar field per vertex, i.e. an element of the direct sum of the
/// per-vertex Lipschitz algebras. Absent vertices mean the zero function.
#[derive(Debug, Clone, Default)]
pub struct LipFamily {
    entries: BTreeMap<VertexId, LipFunction>,
}

impl LipFamily {
    /// Empty family (zero everywhere).
    pub fn new() -> Self {
        LipFamily::default()
    }

    /// Builds from explicit per-vertex entries.
    pub fn from_entries(entries: BTreeMap<VertexId, LipFunction>) -> Self {
        LipFamily { entries }
    }

    /// Adds or replaces the entry at a vertex.
    pub fn insert(&mut self, v: VertexId, f: LipFunction) {
        self.entries.insert(v, f);
    }

    /// The function at `v`, when present (absent = zero).
    pub fn get(&self, v: VertexId) -> Option<&LipFunction> {
        self.entries.get(&v)
    }

    /// All entries in vertex order.
    pub fn entries(&self) -> impl Iterator<Item = (VertexId, &LipFunction)> {
        self.entries.iter().map(|(v, f)| (*v, f))
    }

    /// Max certified Lipschitz constant over the vertices.
    pub fn lip_max(&self) -> f64 {
        self.entries
            .values()
            .map(LipFunction::lip)
            .fold(0.0, f64::max)
    }

    /// Max certified sup bound over the vertices.
    pub fn sup_max(&self) -> f64 {
        self.entries
            .values()
            .map(LipFunction::sup)
            .fold(0.0, f64::max)
    }

    /// Pointwise product family (per-vertex products, zero absorbing).
    pub fn mul(&self, other: &LipFamily) -> Result<LipFamily> {
        let mut entries = BTreeMap::new();
        for (v, f) in &self.entries {
            if let Some(g) = other.entries.get(v) {
                entries.insert(*v, f.mul(g)?);
            }
        }
        Ok(LipFamily { entries })
    }

    /// Pointwise linear combination `lambda * self + other` where both sides
    /// are present; one-sided entries are carried through.
    pub fn axpy(&self, lambda: f64, other: &LipFamily) -> Result<LipFamily> {
        let mut entries = BTreeMap::new();
        for (v, f) in &self.entries {
            let scaled = f.scale(lambda);
            match other.entries.get(v) {
                Some(g) => {
                    entries.insert(*v, scaled.add(g)?);
                }
                None => {
                    entries.insert(*v, scaled);
                }
            }
        }
        for (v, g) in &other.entries {
            if !self.entries.contains_key(v) {
                entries.insert(*v, g.clone());
            }
        }
        Ok(LipFamily { entries })
    }
}

/// Parses the small expression grammar used by section files and the CLI:
///
/// ```text
/// expr   := term (('+' | '-') term)*
/// term   := factor ('*' factor)*
/// factor := number | 'x' index | 'dist' '(' number (',' number)* ')'
///         | '(' expr ')' | '-' factor
/// ```
///
/// Every function the grammar can produce carries certified constants on the
/// supplied box.
pub fn parse_expr(text: &str, domain: &BoundingBox) -> Result<LipFunction> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        domain,
    };
    let f = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(Error::Parse(format!(
            "unexpected trailing input in `{text}`"
        )));
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Coord(usize),
    Dist,
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(x) => write!(f, "{x}"),
            Token::Coord(i) => write!(f, "x{i}"),
            Token::Dist => write!(f, "dist"),
            Token::LParen => write!(f, "("),
            Token::RParen => write!(f, ")"),
            Token::Comma => write!(f, ","),
            Token::Plus => write!(f, "+"),
            Token::Minus => write!(f, "-"),
            Token::Star => write!(f, "*"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            ',' => {
                tokens.push(Token::Comma);
                i += 1;
            }
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star);
                i += 1;
            }
            'x' => {
                let start = i + 1;
                let mut end = start;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
                if end == start {
                    return Err(Error::Parse(
                        "`x` must be followed by a coordinate index".into(),
                    ));
                }
                let idx: usize = text[start..end]
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad coordinate index: {e}")))?;
                tokens.push(Token::Coord(idx));
                i = end;
            }
            'd' => {
                if text[i..].starts_with("dist") {
                    tokens.push(Token::Dist);
                    i += 4;
                } else {
                    return Err(Error::Parse(format!(
                        "unexpected input at `{}`",
                        &text[i..]
                    )));
                }
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                let mut end = i;
                while end < bytes.len() {
                    let b = bytes[end] as char;
                    if b.is_ascii_digit() || b == '.' {
                        end += 1;
                    } else if (b == 'e' || b == 'E')
                        && end + 1 < bytes.len()
                        && ((bytes[end + 1] as char).is_ascii_digit()
                            || bytes[end + 1] == b'-'
                            || bytes[end + 1] == b'+')
                    {
                        end += 2;
                    } else {
                        break;
                    }
                }
                let value: f64 = text[start..end].parse().map_err(|e| {
                    Error::Parse(format!("bad number `{}`: {e}", &text[start..end]))
                })?;
                tokens.push(Token::Num(value));
                i = end;
            }
            _ => return Err(Error::Parse(format!("unexpected character `{c}`"))),
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    domain: &'a BoundingBox,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<Token> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Parse("unexpected end of expression".into()))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, t: Token) -> Result<()> {
        let got = self.next()?;
        if got != t {
            return Err(Error::Parse(format!("expected `{t}`, got `{got}`")));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<LipFunction> {
        let mut acc = self.term()?;
        while let Some(op) = self.peek() {
            match op {
                Token::Plus => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?)?;
                }
                Token::Minus => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?.scale(-1.0))?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<LipFunction> {
        let mut acc = self.factor()?;
        while self.peek() == Some(&Token::Star) {
            self.pos += 1;
            acc = acc.mul(&self.factor()?)?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<LipFunction> {
        match self.next()? {
            Token::Num(x) => Ok(LipFunction::constant(self.domain.clone(), x)),
            Token::Coord(i) => LipFunction::coordinate(self.domain.clone(), i),
            Token::Minus => Ok(self.factor()?.scale(-1.0)),
            Token::LParen => {
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Token::Dist => {
                self.expect(Token::LParen)?;
                let mut coords = Vec::new();
                loop {
                    match self.next()? {
                        Token::Num(x) => coords.push(x),
                        Token::Minus => match self.next()? {
                            Token::Num(x) => coords.push(-x),
                            other => {
                                return Err(Error::Parse(format!(
                                    "expected number after `-`, got `{other}`"
                                )))
                            }
                        },
                        other => {
                            return Err(Error::Parse(format!("expected number, got `{other}`")))
                        }
                    }
                    match self.next()? {
                        Token::Comma => continue,
                        Token::RParen => break,
                        other => {
                            return Err(Error::Parse(format!("expected `,` or `)`, got `{other}`")))
                        }
                    }
                }
                LipFunction::dist_to(self.domain.clone(), coords)
            }
            other => Err(Error::Parse(format!("unexpected token `{other}`"))),
        }
    }
}
