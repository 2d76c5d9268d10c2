//! The edge-indexed bimodule of a system at finite resolution: one Lipschitz
//! section per edge, module actions, the algebra-valued inner product, the
//! rank-one decomposition of the left action, and the linear map sending
//! sections into the symbolic path algebra.
//!
//! A section assigns to each edge `e` a scalar field on the box at `r(e)`
//! (absent = zero). The right action multiplies pointwise at `r(e)`, the left
//! action pulls the field at `s(e)` back through the edge map, and the inner
//! product `<xi, eta>` collects `conj(xi_e) eta_e` at each vertex over the
//! edges ranging there. Sections here are real-valued, so conjugation is the
//! identity; complex coefficients live in the path algebra.
//!
//! `ix_approx` realizes a section inside the path algebra at level k as
//! `sum_e S_e a_k(xi_e)`, with monomials `S_{e alpha} S_alpha^*`. Its
//! quantitative contracts (inner products, bimodule compatibility) are checked
//! by the defect operations below, exactly for basis sections and within
//! geometric envelopes for general Lipschitz ones.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::algebra::{ia_approx, CKElement, CKMonomial, DiagonalElement, Word};
use crate::graph::EdgeId;
use crate::lip::{parse_expr, LipFamily, LipFunction};
use crate::measure::StateFamily;
use crate::system::MWGraph;
use crate::{Error, Result};

/// An element of the edge-indexed bimodule: a Lipschitz section per edge,
/// each declared on the box at `r(e)`. Absent edges are the zero section.
#[derive(Debug, Clone, Default)]
pub struct CorrElement {
    sections: BTreeMap<EdgeId, LipFunction>,
}

impl CorrElement {
    /// The zero element.
    pub fn zero() -> Self {
        CorrElement::default()
    }

    /// Builds from explicit per-edge sections, checking each declared box.
    pub fn new(m: &MWGraph, sections: BTreeMap<EdgeId, LipFunction>) -> Result<Self> {
        for (e, f) in &sections {
            let expected = m.bounds(m.graph().range(*e));
            if f.domain() != expected {
                return Err(Error::InvalidArgument(format!(
                    "section at edge {} must be declared on the box at r(e)",
                    m.graph().edge_name(*e)
                )));
            }
        }
        Ok(CorrElement { sections })
    }

    /// The basis section at one edge: constant 1 at `e`, absent elsewhere.
    pub fn basis_delta(m: &MWGraph, e: EdgeId) -> Result<Self> {
        if e.0 >= m.graph().edge_count() {
            return Err(Error::UnknownEdge(format!("#{}", e.0)));
        }
        let bx = m.bounds(m.graph().range(e)).clone();
        let mut sections = BTreeMap::new();
        sections.insert(e, LipFunction::constant(bx, 1.0));
        Ok(CorrElement { sections })
    }

    /// The section at an edge, when present.
    pub fn section(&self, e: EdgeId) -> Option<&LipFunction> {
        self.sections.get(&e)
    }

    /// All sections in edge order.
    pub fn sections(&self) -> impl Iterator<Item = (EdgeId, &LipFunction)> {
        self.sections.iter().map(|(e, f)| (*e, f))
    }

    /// Sum of sections (edgewise).
    pub fn add(&self, other: &CorrElement) -> Result<CorrElement> {
        let mut sections = self.sections.clone();
        for (e, g) in &other.sections {
            match sections.remove(e) {
                Some(f) => {
                    sections.insert(*e, f.add(g)?);
                }
                None => {
                    sections.insert(*e, g.clone());
                }
            }
        }
        Ok(CorrElement { sections })
    }

    /// Right action by a family: `(xi . a)_e = xi_e * a_{r(e)}` pointwise.
    pub fn right_action(&self, m: &MWGraph, a: &LipFamily) -> Result<CorrElement> {
        let mut sections = BTreeMap::new();
        for (e, f) in &self.sections {
            if let Some(g) = a.get(m.graph().range(*e)) {
                sections.insert(*e, f.mul(g)?);
            }
        }
        Ok(CorrElement { sections })
    }

    /// Left action by a family: `(a . xi)_e = (a_{s(e)} . phi_e) * xi_e`.
    pub fn left_action(&self, m: &MWGraph, a: &LipFamily) -> Result<CorrElement> {
        let mut sections = BTreeMap::new();
        for (e, f) in &self.sections {
            if let Some(g) = a.get(m.graph().source(*e)) {
                let edge_path = m.graph().path(&[*e])?;
                let pulled = m.lip_compose(g, &edge_path)?;
                sections.insert(*e, pulled.mul(f)?);
            }
        }
        Ok(CorrElement { sections })
    }

    /// Algebra-valued inner product: at vertex `v`, the sum over edges with
    /// `r(e) = v` of `conj(xi_e) eta_e` (sections are real, so the
    /// conjugation is the identity).
    pub fn inner_product(&self, m: &MWGraph, other: &CorrElement) -> Result<LipFamily> {
        let mut family = LipFamily::new();
        for v in m.graph().vertices() {
            let mut acc: Option<LipFunction> = None;
            for &e in m.graph().edges_in(v) {
                let (Some(f), Some(g)) = (self.sections.get(&e), other.sections.get(&e)) else {
                    continue;
                };
                let term = f.mul(g)?;
                acc = Some(match acc {
                    None => term,
                    Some(sum) => sum.add(&term)?,
                });
            }
            if let Some(sum) = acc {
                family.insert(v, sum);
            }
        }
        Ok(family)
    }

    /// Pointwise defect against another element on the per-vertex seed nets:
    /// the largest absolute difference of sections across all edges and net
    /// points. Zero means the elements agree everywhere observable.
    pub fn net_defect(&self, m: &MWGraph, other: &CorrElement) -> Result<f64> {
        let mut worst = 0.0f64;
        for e in m.graph().edge_ids() {
            let net = m.space(m.graph().range(e)).seed();
            for p in net.points() {
                let a = match self.sections.get(&e) {
                    Some(f) => f.eval(p)?,
                    None => 0.0,
                };
                let b = match other.sections.get(&e) {
                    Some(f) => f.eval(p)?,
                    None => 0.0,
                };
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }

    /// Loads an element from JSON mapping edge ids to expression strings in
    /// the section grammar (constants, coordinates `x0..`, `+`, `*`,
    /// `dist(p)`), each parsed on the box at `r(e)`.
    pub fn from_json(m: &MWGraph, text: &str) -> Result<Self> {
        let file: BTreeMap<String, String> = serde_json::from_str(text)?;
        let mut sections = BTreeMap::new();
        for (edge_name, expr) in file {
            let e = m.graph().edge(&edge_name)?;
            let bx = m.bounds(m.graph().range(e)).clone();
            sections.insert(e, parse_expr(&expr, &bx)?);
        }
        Ok(CorrElement { sections })
    }
}

/// A rank-one operator `z -> x . <y, z>`.
#[derive(Debug, Clone)]
pub struct RankOnePair {
    /// Left leg (multiplies the inner product from the right action side).
    pub x: CorrElement,
    /// Right leg (pairs with the argument).
    pub y: CorrElement,
}

impl RankOnePair {
    /// Applies the operator: `right_action(x, <y, z>)`.
    pub fn apply(&self, m: &MWGraph, z: &CorrElement) -> Result<CorrElement> {
        let pairing = self.y.inner_product(m, z)?;
        self.x.right_action(m, &pairing)
    }
}

/// Writes the left action of a family as a finite sum of rank-one operators
/// `Theta_{x^e, delta^e}` with `x^e = (a_{s(e)} . phi_e) delta^e`. The sum of
/// the returned operators reproduces `left_action(a, .)` pointwise.
pub fn phi_decompose(m: &MWGraph, a: &LipFamily) -> Result<Vec<RankOnePair>> {
    let mut pairs = Vec::new();
    for e in m.graph().edge_ids() {
        let delta = CorrElement::basis_delta(m, e)?;
        let x = delta.left_action(m, a)?;
        pairs.push(RankOnePair { x, y: delta });
    }
    Ok(pairs)
}

/// Applies a sum of rank-one operators to an element.
pub fn apply_rank_one_sum(
    m: &MWGraph,
    pairs: &[RankOnePair],
    z: &CorrElement,
) -> Result<CorrElement> {
    let mut acc = CorrElement::zero();
    for pair in pairs {
        acc = acc.add(&pair.apply(m, z)?)?;
    }
    Ok(acc)
}

/// Level-k realization of a section inside the path algebra:
/// `sum_e S_e a_k(xi_e)`, i.e. monomials `S_{e alpha} S_alpha^*` with
/// coefficient `mu0_{r(alpha)}(xi_e . phi_alpha)` over `alpha in E^k(r(e))`.
pub fn ix_approx(m: &MWGraph, xi: &CorrElement, mu0: &StateFamily, k: usize) -> Result<CKElement> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "approximation level must be >= 1".into(),
        ));
    }
    if k > crate::algebra::DEPTH_BUDGET {
        return Err(Error::InvalidArgument(format!(
            "realization level {k} exceeds the depth budget of {}",
            crate::algebra::DEPTH_BUDGET
        )));
    }
    let g = m.graph();
    let mut out = CKElement::zero();
    for (e, section) in xi.sections() {
        for alpha in g.paths_of_length(k, Some(g.range(e)))? {
            let composed = m.lip_compose(section, &alpha)?;
            let coeff = mu0.get(alpha.range())?.eval(&composed)?;
            let mut extended = vec![e];
            extended.extend_from_slice(alpha.edges());
            let monomial = CKMonomial::new(Word::Path(g.path(&extended)?), Word::Path(alpha))?;
            out = out.add(&CKElement::from_monomial(
                monomial,
                Complex64::new(coeff, 0.0),
            ));
        }
    }
    Ok(out)
}

/// Inner-product defect of the level-k realization:
/// `|| ix(xi)* ix(eta) - a_k(<xi, eta>) ||` as a diagonal element at level k.
/// Exact zero for basis sections; bounded by
/// `c^k D sum_e (c_{xi_e} ||eta_e|| + c_{eta_e} ||xi_e||)` in general.
pub fn toeplitz_defect(
    m: &MWGraph,
    xi: &CorrElement,
    eta: &CorrElement,
    mu0: &StateFamily,
    k: usize,
) -> Result<f64> {
    let g = m.graph();
    let lhs = ix_approx(m, xi, mu0, k)?
        .adjoint()
        .mul(&ix_approx(m, eta, mu0, k)?, g);
    let rhs = ia_approx(m, &xi.inner_product(m, eta)?, mu0, k)?;
    let diff = lhs.sub(&rhs.to_ck());
    if diff.is_zero() {
        return Ok(0.0);
    }
    Ok(diff.to_diagonal(k)?.norm())
}

/// Bimodule defects of the level-k realization at matched depth:
/// `|| ix(xi . a) - ix(xi) a_k(a) ||` and `|| ix(a . xi) - a_{k+1}(a) ix(xi) ||`,
/// both measured coefficientwise in normal form. Exact (up to 1e-12 float
/// assembly) under Dirac state families, geometric-envelope small otherwise.
pub fn bimodule_defects(
    m: &MWGraph,
    xi: &CorrElement,
    a: &LipFamily,
    mu0: &StateFamily,
    k: usize,
) -> Result<(f64, f64)> {
    let g = m.graph();

    // Right: ix(xi . a) vs ix(xi) * ia(a) at level k.
    let right_lhs = ix_approx(m, &xi.right_action(m, a)?, mu0, k)?;
    let right_rhs = ix_approx(m, xi, mu0, k)?.mul(&ia_approx(m, a, mu0, k)?.to_ck(), g);
    let right = ck_max_coeff(&right_lhs.sub(&right_rhs));

    // Left: ix(a . xi) vs ia(a) * ix(xi), with the outer approximant at level
    // k+1 so the product lands at matched depth k.
    let left_lhs = ix_approx(m, &xi.left_action(m, a)?, mu0, k)?;
    let left_rhs = ia_approx(m, a, mu0, k + 1)?
        .to_ck()
        .mul(&ix_approx(m, xi, mu0, k)?, g);
    let left = ck_max_coeff(&left_lhs.sub(&left_rhs));

    Ok((right, left))
}

/// Largest coefficient modulus of an element in normal form. For the diagonal
/// and shifted-diagonal elements produced here this is the exact norm.
fn ck_max_coeff(x: &CKElement) -> f64 {
    x.terms().map(|(_, z)| z.norm()).fold(0.0, f64::max)
}

/// Checks `ix(delta^e)` against the depth-expanded generator `S_e`, exactly.
pub fn delta_matches_depth_expanded_generator(
    m: &MWGraph,
    e: EdgeId,
    mu0: &StateFamily,
    k: usize,
) -> Result<bool> {
    let g = m.graph();
    let realized = ix_approx(m, &CorrElement::basis_delta(m, e)?, mu0, k)?;
    let expanded = CKElement::s_edge(g, e).vertex_expand(g, k)?;
    Ok(realized == expanded)
}

/// The diagonal approximant of a vertex family against the realization: used
/// by callers that need `<xi, eta>` as a diagonal element directly.
pub fn inner_product_approx(
    m: &MWGraph,
    xi: &CorrElement,
    eta: &CorrElement,
    mu0: &StateFamily,
    k: usize,
) -> Result<DiagonalElement> {
    ia_approx(m, &xi.inner_product(m, eta)?, mu0, k)
}
