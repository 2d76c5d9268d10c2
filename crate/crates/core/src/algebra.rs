//! Symbolic Cuntz-Krieger calculus on words `S_alpha S_beta^*` and the
//! level-k diagonal approximants of the canonical representation of the
//! function algebra inside the graph algebra.
//!
//! Generators: one partial isometry `S_e` per edge and one projection `P_v`
//! per vertex, subject to `S_e^* S_e = P_{r(e)}` and
//! `P_v = sum_{s(f)=v} S_f S_f^*`. Products of words reduce by prefix
//! cancellation, so every element is a finite complex combination of
//! monomials `S_alpha S_beta^*` with `r(alpha) = r(beta)` in a unique normal
//! form at a given depth.
//!
//! The representation of a Lipschitz family `a` is built only through its
//! level-k approximants
//! `a_k = sum_{alpha in E^k} mu0_{r(alpha)}(a_{s(alpha)} . phi_alpha) S_alpha S_alpha^*`:
//! diagonal elements whose norm is exactly the largest coefficient modulus
//! (the projections are orthogonal). Every quantitative claim about the limit
//! is checked here as a finite-level inequality with explicit constants.

use std::fmt::Write as _;

use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::affine::geom_pow;
use crate::graph::{EdgeId, Graph, Path, Severity, ValidationReport, VertexId};
use crate::lip::LipFamily;
use crate::measure::StateFamily;
use crate::system::MWGraph;
use crate::transport::state_diameter_max;
use crate::{fmt_g17, Error, Result};

/// Largest expansion/realization depth; term counts grow like `|E|^depth`.
pub const DEPTH_BUDGET: usize = 12;

/// A word in the path groupoid: either the empty word at a vertex or a path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Word {
    /// Empty word at a vertex; `S_word = P_v`-side identity.
    Vertex(VertexId),
    /// A nonempty composable edge sequence.
    Path(Path),
}

impl Word {
    /// Start vertex.
    pub fn source(&self) -> VertexId {
        match self {
            Word::Vertex(v) => *v,
            Word::Path(p) => p.source(),
        }
    }

    /// End vertex.
    pub fn range(&self) -> VertexId {
        match self {
            Word::Vertex(v) => *v,
            Word::Path(p) => p.range(),
        }
    }

    /// Word length.
    pub fn len(&self) -> usize {
        match self {
            Word::Vertex(_) => 0,
            Word::Path(p) => p.len(),
        }
    }

    /// True for the empty word.
    pub fn is_empty(&self) -> bool {
        matches!(self, Word::Vertex(_))
    }

    fn edges(&self) -> &[EdgeId] {
        match self {
            Word::Vertex(_) => &[],
            Word::Path(p) => p.edges(),
        }
    }

    /// The remainder `w'` with `other = self w'`, when `self` is a prefix.
    fn strip_prefix(&self, other: &Word, g: &Graph) -> Option<Word> {
        if self.source() != other.source() || self.len() > other.len() {
            return None;
        }
        if self.edges() != &other.edges()[..self.len()] {
            return None;
        }
        let rest = &other.edges()[self.len()..];
        if rest.is_empty() {
            Some(Word::Vertex(other.range()))
        } else {
            Some(Word::Path(g.path(rest).expect("suffix of a path composes")))
        }
    }

    /// Concatenation `self . other` (requires `r(self) = s(other)`).
    fn append(&self, other: &Word, g: &Graph) -> Result<Word> {
        if self.range() != other.source() {
            return Err(Error::NotComposable("word ranges do not match".into()));
        }
        if other.is_empty() {
            return Ok(self.clone());
        }
        if self.is_empty() {
            return Ok(other.clone());
        }
        let mut edges = self.edges().to_vec();
        edges.extend_from_slice(other.edges());
        Ok(Word::Path(g.path(&edges)?))
    }
}

/// A monomial `S_alpha S_beta^*` with `r(alpha) = r(beta)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CKMonomial {
    alpha: Word,
    beta: Word,
}

impl CKMonomial {
    /// Builds a monomial, checking the terminal vertices agree.
    pub fn new(alpha: Word, beta: Word) -> Result<Self> {
        if alpha.range() != beta.range() {
            return Err(Error::NotComposable(
                "monomial words must share their terminal vertex".into(),
            ));
        }
        Ok(CKMonomial { alpha, beta })
    }

    /// The generator `S_e`.
    pub fn s_edge(g: &Graph, e: EdgeId) -> Self {
        let path = g.path(&[e]).expect("single edge is a path");
        CKMonomial {
            beta: Word::Vertex(path.range()),
            alpha: Word::Path(path),
        }
    }

    /// The vertex projection `P_v`.
    pub fn projection(v: VertexId) -> Self {
        CKMonomial {
            alpha: Word::Vertex(v),
            beta: Word::Vertex(v),
        }
    }

    /// Left word (the un-starred side).
    pub fn alpha(&self) -> &Word {
        &self.alpha
    }

    /// Right word (the starred side).
    pub fn beta(&self) -> &Word {
        &self.beta
    }

    /// The adjoint monomial `S_beta S_alpha^*`.
    pub fn adjoint(&self) -> Self {
        CKMonomial {
            alpha: self.beta.clone(),
            beta: self.alpha.clone(),
        }
    }

    /// Is this `S_alpha S_alpha^*` with `|alpha| = level`?
    pub fn is_diagonal_at(&self, level: usize) -> bool {
        self.alpha == self.beta && self.alpha.len() == level
    }
}

/// Product of two monomials by prefix cancellation:
/// `(S_a S_b^*)(S_g S_d^*)` is `S_{a g'} S_d^*` when `g = b g'`,
/// `S_a S_{d b'}^*` when `b = g b'`, and zero otherwise.
pub fn monomial_mul(g: &Graph, x: &CKMonomial, y: &CKMonomial) -> CKElement {
    match monomial_product(g, x, y) {
        Some(m) => CKElement::from_monomial(m, Complex64::new(1.0, 0.0)),
        None => CKElement::zero(),
    }
}

/// Allocation-light core of [`monomial_mul`]: the product monomial, or `None`
/// for zero.
fn monomial_product(g: &Graph, x: &CKMonomial, y: &CKMonomial) -> Option<CKMonomial> {
    if let Some(rest) = x.beta.strip_prefix(&y.alpha, g) {
        let alpha = x
            .alpha
            .append(&rest, g)
            .expect("ranges match by construction");
        return Some(CKMonomial::new(alpha, y.beta.clone()).expect("terminal vertices agree"));
    }
    if let Some(rest) = y.alpha.strip_prefix(&x.beta, g) {
        let beta = y
            .beta
            .append(&rest, g)
            .expect("ranges match by construction");
        return Some(CKMonomial::new(x.alpha.clone(), beta).expect("terminal vertices agree"));
    }
    None
}

/// A finite complex combination of monomials in normal form (no explicit
/// zero coefficients, canonical monomial order).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CKElement {
    terms: BTreeMap<CKMonomial, Complex64>,
}

impl CKElement {
    /// The zero element.
    pub fn zero() -> Self {
        CKElement::default()
    }

    /// A single monomial with coefficient.
    pub fn from_monomial(m: CKMonomial, z: Complex64) -> Self {
        let mut e = CKElement::zero();
        e.accumulate(m, z);
        e
    }

    /// The generator `S_e` as an element.
    pub fn s_edge(g: &Graph, e: EdgeId) -> Self {
        CKElement::from_monomial(CKMonomial::s_edge(g, e), Complex64::new(1.0, 0.0))
    }

    /// The projection `P_v` as an element.
    pub fn projection(v: VertexId) -> Self {
        CKElement::from_monomial(CKMonomial::projection(v), Complex64::new(1.0, 0.0))
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&CKMonomial, Complex64)> {
        self.terms.iter().map(|(m, z)| (m, *z))
    }

    /// Number of stored monomials.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// True when no terms remain.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn accumulate(&mut self, m: CKMonomial, z: Complex64) {
        use std::collections::btree_map::Entry;
        if z == Complex64::new(0.0, 0.0) {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(slot) => {
                slot.insert(z);
            }
            Entry::Occupied(mut slot) => {
                let sum = *slot.get() + z;
                if sum == Complex64::new(0.0, 0.0) {
                    slot.remove();
                } else {
                    *slot.get_mut() = sum;
                }
            }
        }
    }

    /// Sum.
    pub fn add(&self, other: &CKElement) -> CKElement {
        let mut out = self.clone();
        for (m, z) in &other.terms {
            out.accumulate(m.clone(), *z);
        }
        out
    }

    /// Difference.
    pub fn sub(&self, other: &CKElement) -> CKElement {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Scalar multiple.
    pub fn scale(&self, z: Complex64) -> CKElement {
        let mut out = CKElement::zero();
        for (m, w) in &self.terms {
            out.accumulate(m.clone(), z * w);
        }
        out
    }

    /// Adjoint: reverses every monomial and conjugates coefficients.
    pub fn adjoint(&self) -> CKElement {
        let mut out = CKElement::zero();
        for (m, z) in &self.terms {
            out.accumulate(m.adjoint(), z.conj());
        }
        out
    }

    /// Product, reducing monomial pairs by prefix cancellation.
    pub fn mul(&self, other: &CKElement, g: &Graph) -> CKElement {
        let mut out = CKElement::zero();
        for (x, zx) in &self.terms {
            for (y, zy) in &other.terms {
                if let Some(m) = monomial_product(g, x, y) {
                    out.accumulate(m, zx * zy);
                }
            }
        }
        out
    }

    /// Rewrites every monomial so its diagonal content sits at `depth`, via
    /// repeated substitution of `P_v = sum_{s(f)=v} S_f S_f^*`: the monomial
    /// `S_a S_b^*` becomes `sum_gamma S_{a gamma} S_{b gamma}^*` over all
    /// paths `gamma` of length `depth - min(|a|, |b|)` out of `r(a)`.
    ///
    /// The depth budget is capped at 12: term counts grow like `|E|^depth`.
    pub fn vertex_expand(&self, g: &Graph, depth: usize) -> Result<CKElement> {
        if depth > DEPTH_BUDGET {
            return Err(Error::InvalidArgument(format!(
                "expansion depth {depth} exceeds the budget of {DEPTH_BUDGET}"
            )));
        }
        let mut out = CKElement::zero();
        for (m, z) in &self.terms {
            let base = m.alpha.len().min(m.beta.len());
            if depth < base {
                return Err(Error::InvalidArgument(format!(
                    "cannot expand a depth-{base} monomial to depth {depth}"
                )));
            }
            if depth == base {
                out.accumulate(m.clone(), *z);
                continue;
            }
            let v = m.alpha.range();
            if g.edges_out(v).is_empty() {
                return Err(Error::InvalidSystem(format!(
                    "vertex {} is a sink; expansion is blocked",
                    g.vertex_name(v)
                )));
            }
            for gamma in g.paths_of_length(depth - base, Some(v))? {
                let ext = Word::Path(gamma);
                let alpha = m.alpha.append(&ext, g)?;
                let beta = m.beta.append(&ext, g)?;
                out.accumulate(CKMonomial::new(alpha, beta)?, *z);
            }
        }
        Ok(out)
    }

    /// Extracts a diagonal element at the given level. Errors if any stored
    /// term is not of the form `S_alpha S_alpha^*` with `|alpha| = level`.
    pub fn to_diagonal(&self, level: usize) -> Result<DiagonalElement> {
        let mut coeffs = BTreeMap::new();
        for (m, z) in &self.terms {
            if !m.is_diagonal_at(level) {
                return Err(Error::InvalidArgument(format!(
                    "term is not diagonal at level {level}: {m:?}"
                )));
            }
            match &m.alpha {
                Word::Path(p) => {
                    coeffs.insert(p.clone(), *z);
                }
                Word::Vertex(_) => {
                    return Err(Error::InvalidArgument(
                        "vertex projections carry no level".into(),
                    ))
                }
            }
        }
        Ok(DiagonalElement { level, coeffs })
    }
}

/// A combination `sum_alpha c_alpha S_alpha S_alpha^*` over paths of one
/// fixed length. Missing paths mean coefficient zero; explicitly computed
/// zeros are kept. Because the projections are orthogonal, the norm is the
/// maximum coefficient modulus, exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalElement {
    level: usize,
    coeffs: BTreeMap<Path, Complex64>,
}

impl DiagonalElement {
    /// The zero element at a level.
    pub fn zero(level: usize) -> Self {
        DiagonalElement {
            level,
            coeffs: BTreeMap::new(),
        }
    }

    /// Builds from explicit path coefficients.
    pub fn from_coeffs(level: usize, coeffs: BTreeMap<Path, Complex64>) -> Result<Self> {
        if coeffs.keys().any(|p| p.len() != level) {
            return Err(Error::InvalidArgument(
                "all paths must have the element's level as length".into(),
            ));
        }
        Ok(DiagonalElement { level, coeffs })
    }

    /// The level (common path length).
    pub fn level(&self) -> usize {
        self.level
    }

    /// Stored coefficients in path order.
    pub fn coeffs(&self) -> impl Iterator<Item = (&Path, Complex64)> {
        self.coeffs.iter().map(|(p, z)| (p, *z))
    }

    /// Coefficient at a path (0 when absent).
    pub fn coeff(&self, path: &Path) -> Complex64 {
        self.coeffs
            .get(path)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Exact norm: the largest coefficient modulus (0 for the zero element).
    pub fn norm(&self) -> f64 {
        self.coeffs.values().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Copies each coefficient to every length-`k` extension of its path:
    /// the identity rewriting of the element at a deeper level.
    pub fn refine(&self, g: &Graph, k: usize) -> Result<DiagonalElement> {
        if k < self.level {
            return Err(Error::InvalidArgument(format!(
                "cannot refine level {} down to {k}",
                self.level
            )));
        }
        if k == self.level {
            return Ok(self.clone());
        }
        let mut coeffs = BTreeMap::new();
        for (alpha, z) in &self.coeffs {
            for beta in g.paths_of_length(k - self.level, Some(alpha.range()))? {
                let mut edges = alpha.edges().to_vec();
                edges.extend_from_slice(beta.edges());
                coeffs.insert(g.path(&edges)?, *z);
            }
        }
        Ok(DiagonalElement { level: k, coeffs })
    }

    /// Difference of two elements at the same level (absent = 0).
    pub fn sub(&self, other: &DiagonalElement) -> Result<DiagonalElement> {
        if self.level != other.level {
            return Err(Error::InvalidArgument(format!(
                "level mismatch: {} vs {}",
                self.level, other.level
            )));
        }
        let mut coeffs = self.coeffs.clone();
        for (p, z) in &other.coeffs {
            let entry = coeffs.entry(p.clone()).or_insert(Complex64::new(0.0, 0.0));
            *entry -= z;
        }
        Ok(DiagonalElement {
            level: self.level,
            coeffs,
        })
    }

    /// Pointwise (diagonal) product at the same level.
    pub fn pointwise_mul(&self, other: &DiagonalElement) -> Result<DiagonalElement> {
        if self.level != other.level {
            return Err(Error::InvalidArgument(format!(
                "level mismatch: {} vs {}",
                self.level, other.level
            )));
        }
        let mut coeffs = BTreeMap::new();
        for (p, z) in &self.coeffs {
            if let Some(w) = other.coeffs.get(p) {
                coeffs.insert(p.clone(), z * w);
            }
        }
        Ok(DiagonalElement {
            level: self.level,
            coeffs,
        })
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> DiagonalElement {
        DiagonalElement {
            level: self.level,
            coeffs: self
                .coeffs
                .iter()
                .map(|(p, z)| (p.clone(), z.conj()))
                .collect(),
        }
    }

    /// Linear combination `lambda * self + other` at a common level.
    pub fn axpy(&self, lambda: Complex64, other: &DiagonalElement) -> Result<DiagonalElement> {
        if self.level != other.level {
            return Err(Error::InvalidArgument(format!(
                "level mismatch: {} vs {}",
                self.level, other.level
            )));
        }
        let mut coeffs: BTreeMap<Path, Complex64> = self
            .coeffs
            .iter()
            .map(|(p, z)| (p.clone(), lambda * z))
            .collect();
        for (p, z) in &other.coeffs {
            let entry = coeffs.entry(p.clone()).or_insert(Complex64::new(0.0, 0.0));
            *entry += z;
        }
        Ok(DiagonalElement {
            level: self.level,
            coeffs,
        })
    }

    /// The element as a full CK element (diagonal monomials).
    pub fn to_ck(&self) -> CKElement {
        let mut out = CKElement::zero();
        for (p, z) in &self.coeffs {
            out.accumulate(
                CKMonomial {
                    alpha: Word::Path(p.clone()),
                    beta: Word::Path(p.clone()),
                },
                *z,
            );
        }
        out
    }

    /// CSV rows `path,re,im` with dash-joined edge identifiers, 17 significant
    /// digits, in canonical path order.
    pub fn to_csv(&self, g: &Graph) -> String {
        let mut out = String::from("path,re,im\n");
        for (p, z) in &self.coeffs {
            let _ = writeln!(out, "{},{},{}", p.display(g), fmt_g17(z.re), fmt_g17(z.im));
        }
        out
    }
}

/// The level-k approximant of the canonical representation of a Lipschitz
/// family: coefficient `mu0_{r(alpha)}(a_{s(alpha)} . phi_alpha)` at each
/// `alpha` in `E^k`.
pub fn ia_approx(
    m: &MWGraph,
    a: &LipFamily,
    mu0: &StateFamily,
    k: usize,
) -> Result<DiagonalElement> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "approximation level must be >= 1".into(),
        ));
    }
    let mut coeffs = BTreeMap::new();
    for alpha in m.graph().paths_of_length(k, None)? {
        let value = match a.get(alpha.source()) {
            Some(field) => {
                let composed = m.lip_compose(field, &alpha)?;
                mu0.get(alpha.range())?.eval(&composed)?
            }
            None => 0.0,
        };
        coeffs.insert(alpha, Complex64::new(value, 0.0));
    }
    Ok(DiagonalElement { level: k, coeffs })
}

/// Gap between the level-`mlev` approximant (refined to level `klev`) and the
/// level-`klev` approximant, with its certified bound
/// `c^mlev * diam_L * c_a`. The gap never exceeds the bound.
pub fn ia_gap(
    m: &MWGraph,
    a: &LipFamily,
    mu0: &StateFamily,
    mlev: usize,
    klev: usize,
) -> Result<(f64, f64)> {
    if mlev >= klev {
        return Err(Error::InvalidArgument("need mlev < klev".into()));
    }
    let coarse = ia_approx(m, a, mu0, mlev)?;
    let fine = ia_approx(m, a, mu0, klev)?;
    let gap = coarse.refine(m.graph(), klev)?.sub(&fine)?.norm();
    let bound = geom_pow(m.global_ratio(), mlev) * state_diameter_max(m) * a.lip_max();
    Ok((gap, bound))
}

/// Multiplicativity defect at level k:
/// `|| a_k(ab) - a_k(a) a_k(b) ||` with the diagonal (pointwise) product.
pub fn hom_defect(
    m: &MWGraph,
    a: &LipFamily,
    b: &LipFamily,
    mu0: &StateFamily,
    k: usize,
) -> Result<f64> {
    let product = ia_approx(m, &a.mul(b)?, mu0, k)?;
    let split = ia_approx(m, a, mu0, k)?.pointwise_mul(&ia_approx(m, b, mu0, k)?)?;
    Ok(product.sub(&split)?.norm())
}

/// Covariance defect for one edge: compares the level-k coefficient at
/// `e alpha'` against the level-(k-1) coefficient of the pulled-back family
/// at `alpha'`. The two are the same number up to floating-point assembly,
/// so the defect is at most 1e-12 on any validated system.
pub fn covariance_defect(
    m: &MWGraph,
    a: &LipFamily,
    mu0: &StateFamily,
    e: EdgeId,
    k: usize,
) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidArgument(
            "covariance defect needs k >= 2".into(),
        ));
    }
    let lhs = ia_approx(m, a, mu0, k)?;
    // a_{s(e)} . phi_e as a family supported at r(e) (zero elsewhere).
    let mut pulled = LipFamily::new();
    if let Some(field) = a.get(m.graph().source(e)) {
        let edge_path = m.graph().path(&[e])?;
        pulled.insert(m.graph().range(e), m.lip_compose(field, &edge_path)?);
    }
    let rhs = ia_approx(m, &pulled, mu0, k - 1)?;
    let mut defect = 0.0f64;
    for alpha in m.graph().paths_of_length(k - 1, Some(m.graph().range(e)))? {
        let mut edges = vec![e];
        edges.extend_from_slice(alpha.edges());
        let extended = m.graph().path(&edges)?;
        defect = defect.max((lhs.coeff(&extended) - rhs.coeff(&alpha)).norm());
    }
    Ok(defect)
}

/// Norms of the approximants of a family that (approximately) vanishes on the
/// invariant set: `(||a_k||)_{k=1..kmax}`. Each value obeys
/// `||a_k|| <= c^k D c_a + eta` where `eta` bounds `|a|` on the invariant set.
pub fn ideal_norms(m: &MWGraph, a: &LipFamily, mu0: &StateFamily, kmax: usize) -> Result<Vec<f64>> {
    (1..=kmax)
        .map(|k| Ok(ia_approx(m, a, mu0, k)?.norm()))
        .collect()
}

/// The [`ideal_norms`] sequence as a convergence table with columns
/// `k,diag_norm,bound`, where the bound is `c^k c_a D + eta` and `eta` is the
/// caller's certificate for `sup |a|` over the invariant set.
pub fn ideal_norms_csv(
    m: &MWGraph,
    a: &LipFamily,
    mu0: &StateFamily,
    kmax: usize,
    eta: f64,
) -> Result<String> {
    let c = m.global_ratio();
    let d = m.space_diameter();
    let mut out = String::from("k,diag_norm,bound\n");
    for (i, value) in ideal_norms(m, a, mu0, kmax)?.iter().enumerate() {
        let k = i + 1;
        let bound = geom_pow(c, k) * a.lip_max() * d + eta;
        let _ = writeln!(out, "{k},{},{}", fmt_g17(*value), fmt_g17(bound));
    }
    Ok(out)
}

/// Verifies the defining relations inside the rewriting engine:
/// `S_e^* S_e = P_{r(e)}` for every edge, `P_v = sum_{s(f)=v} S_f S_f^*` for
/// every vertex, and the edge-matrix form
/// `S_e^* S_e = sum_f A(e,f) S_f S_f^*`. Returns a report; all identities
/// must hold exactly.
pub fn ck_identity_check(g: &Graph) -> ValidationReport {
    let mut report = ValidationReport::default();
    let matrix = g.edge_matrix();

    for e in g.edge_ids() {
        let s_e = CKElement::s_edge(g, e);
        let product = s_e.adjoint().mul(&s_e, g);
        let expected = CKElement::projection(g.range(e));
        if product != expected {
            report.push(
                Severity::Error,
                format!("S_e* S_e != P_r(e) for edge {}", g.edge_name(e)),
            );
        }

        // Edge-matrix form at depth 1.
        let lhs = match product.vertex_expand(g, 1) {
            Ok(x) => x,
            Err(err) => {
                report.push(Severity::Error, format!("expansion failed: {err}"));
                continue;
            }
        };
        let mut rhs = CKElement::zero();
        for f in g.edge_ids() {
            if matrix[e.0][f.0] == 1 {
                let s_f = CKElement::s_edge(g, f);
                rhs = rhs.add(&s_f.mul(&s_f.adjoint(), g));
            }
        }
        if lhs != rhs {
            report.push(
                Severity::Error,
                format!(
                    "S_e* S_e != sum_f A(e,f) S_f S_f* for edge {}",
                    g.edge_name(e)
                ),
            );
        }
    }

    for v in g.vertices() {
        let lhs = match CKElement::projection(v).vertex_expand(g, 1) {
            Ok(x) => x,
            Err(err) => {
                report.push(Severity::Error, format!("expansion failed: {err}"));
                continue;
            }
        };
        let mut rhs = CKElement::zero();
        for &f in g.edges_out(v) {
            let s_f = CKElement::s_edge(g, f);
            rhs = rhs.add(&s_f.mul(&s_f.adjoint(), g));
        }
        if lhs != rhs {
            report.push(
                Severity::Error,
                format!(
                    "P_v != sum_{{s(f)=v}} S_f S_f* at vertex {}",
                    g.vertex_name(v)
                ),
            );
        }
    }
    report
}
