//! Finite-dimensional von Neumann algebras as direct sums of full matrix
//! blocks, with effects, projections, the center, matrix units, abelian
//! projections, central carriers, and the per-block normalized trace.
//!
//! Every finite-dimensional von Neumann algebra is *-isomorphic to
//! `⊕ᵢ M_{nᵢ}(ℂ)`, so a spec carries only the ordered list of block sizes;
//! blocks of size one make up the commutative summand.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, ComplexMatrix};

/// Ordered list of matrix-block sizes `(n₁, …, n_k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpecWire", into = "SpecWire")]
pub struct AlgebraSpec {
    blocks: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SpecWire {
    blocks: Vec<usize>,
}

impl TryFrom<SpecWire> for AlgebraSpec {
    type Error = Error;
    fn try_from(w: SpecWire) -> Result<Self> {
        AlgebraSpec::new(w.blocks)
    }
}

impl From<AlgebraSpec> for SpecWire {
    fn from(s: AlgebraSpec) -> SpecWire {
        SpecWire { blocks: s.blocks }
    }
}

impl AlgebraSpec {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::SchemaError("spec needs at least one block".into()));
        }
        if blocks.contains(&0) {
            return Err(Error::SchemaError("block sizes must be positive".into()));
        }
        Ok(AlgebraSpec { blocks })
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_size(&self, i: usize) -> usize {
        self.blocks[i]
    }

    /// Linear dimension `Σ nᵢ²`.
    pub fn linear_dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    /// True when every block has size one.
    pub fn is_commutative(&self) -> bool {
        self.blocks.iter().all(|&n| n == 1)
    }

    /// Restriction to a subset of blocks, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> Result<AlgebraSpec> {
        let blocks = indices
            .iter()
            .map(|&i| {
                self.blocks.get(i).copied().ok_or(Error::BadIndex {
                    index: i,
                    blocks: self.blocks.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        AlgebraSpec::new(blocks)
    }
}

/// Block-diagonal element of the algebra: one dense matrix per block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ElementWire", into = "ElementWire")]
pub struct AlgebraElement {
    spec: AlgebraSpec,
    parts: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct ElementWire {
    spec: AlgebraSpec,
    parts: Vec<ComplexMatrix>,
}

impl TryFrom<ElementWire> for AlgebraElement {
    type Error = Error;
    fn try_from(w: ElementWire) -> Result<Self> {
        AlgebraElement::new(w.spec, w.parts)
    }
}

impl From<AlgebraElement> for ElementWire {
    fn from(x: AlgebraElement) -> ElementWire {
        ElementWire {
            spec: x.spec,
            parts: x.parts,
        }
    }
}

impl AlgebraElement {
    pub fn new(spec: AlgebraSpec, parts: Vec<ComplexMatrix>) -> Result<Self> {
        if parts.len() != spec.block_count() {
            return Err(Error::SpecMismatch {
                context: format!("{} parts for {} blocks", parts.len(), spec.block_count()),
            });
        }
        for (i, (part, &n)) in parts.iter().zip(spec.blocks()).enumerate() {
            if part.dim() != n {
                return Err(Error::SpecMismatch {
                    context: format!(
                        "part {} is {}x{}, expected {n}x{n}",
                        i + 1,
                        part.dim(),
                        part.dim()
                    ),
                });
            }
        }
        Ok(AlgebraElement { spec, parts })
    }

    pub fn zero(spec: &AlgebraSpec) -> Self {
        let parts = spec
            .blocks()
            .iter()
            .map(|&n| ComplexMatrix::zeros(n))
            .collect();
        AlgebraElement {
            spec: spec.clone(),
            parts,
        }
    }

    pub fn identity(spec: &AlgebraSpec) -> Self {
        let parts = spec
            .blocks()
            .iter()
            .map(|&n| ComplexMatrix::identity(n))
            .collect();
        AlgebraElement {
            spec: spec.clone(),
            parts,
        }
    }

    pub fn spec(&self) -> &AlgebraSpec {
        &self.spec
    }

    pub fn parts(&self) -> &[ComplexMatrix] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> &ComplexMatrix {
        &self.parts[i]
    }

    pub fn part_mut(&mut self, i: usize) -> &mut ComplexMatrix {
        &mut self.parts[i]
    }

    pub fn into_parts(self) -> Vec<ComplexMatrix> {
        self.parts
    }

    fn zip_parts<F: Fn(&ComplexMatrix, &ComplexMatrix) -> ComplexMatrix>(
        &self,
        other: &AlgebraElement,
        f: F,
    ) -> AlgebraElement {
        assert_eq!(self.spec, other.spec, "algebra specs must agree");
        AlgebraElement {
            spec: self.spec.clone(),
            parts: self
                .parts
                .iter()
                .zip(&other.parts)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &AlgebraElement) -> AlgebraElement {
        self.zip_parts(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &AlgebraElement) -> AlgebraElement {
        self.zip_parts(other, |a, b| a.sub(b))
    }

    /// Blockwise matrix product.
    pub fn mul(&self, other: &AlgebraElement) -> AlgebraElement {
        self.zip_parts(other, |a, b| a.mul(b))
    }

    pub fn scale(&self, s: f64) -> AlgebraElement {
        self.map_parts(|p| p.scale(s))
    }

    pub fn scale_c(&self, s: Complex64) -> AlgebraElement {
        self.map_parts(|p| p.scale_c(s))
    }

    pub fn adjoint(&self) -> AlgebraElement {
        self.map_parts(|p| p.adjoint())
    }

    pub fn hermitian_part(&self) -> AlgebraElement {
        self.map_parts(|p| p.hermitian_part())
    }

    pub fn map_parts<F: Fn(&ComplexMatrix) -> ComplexMatrix>(&self, f: F) -> AlgebraElement {
        AlgebraElement {
            spec: self.spec.clone(),
            parts: self.parts.iter().map(f).collect(),
        }
    }

    pub fn try_map_parts<F: Fn(&ComplexMatrix) -> Result<ComplexMatrix>>(
        &self,
        f: F,
    ) -> Result<AlgebraElement> {
        Ok(AlgebraElement {
            spec: self.spec.clone(),
            parts: self.parts.iter().map(f).collect::<Result<Vec<_>>>()?,
        })
    }

    pub fn try_map_parts_indexed<F: Fn(usize, &ComplexMatrix) -> Result<ComplexMatrix>>(
        &self,
        f: F,
    ) -> Result<AlgebraElement> {
        Ok(AlgebraElement {
            spec: self.spec.clone(),
            parts: self
                .parts
                .iter()
                .enumerate()
                .map(|(i, p)| f(i, p))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    /// Square root of the summed squared block norms.
    pub fn frobenius_norm(&self) -> f64 {
        self.parts
            .iter()
            .map(|p| p.frobenius_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn frobenius_dist(&self, other: &AlgebraElement) -> f64 {
        self.sub(other).frobenius_norm()
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.parts
            .iter()
            .map(|p| p.hermitian_defect().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Scale-aware blockwise approximate equality.
    pub fn approx_eq(&self, other: &AlgebraElement, tol: f64) -> bool {
        self.spec == other.spec
            && self.parts.iter().zip(&other.parts).all(|(a, b)| {
                a.frobenius_dist(b) <= tol * a.frobenius_norm().max(b.frobenius_norm()).max(1.0)
            })
    }

    /// Largest blockwise Hermitian operator norm.
    pub fn op_norm_hermitian(&self, tol: f64) -> Result<f64> {
        let mut worst = 0.0f64;
        for p in &self.parts {
            worst = worst.max(p.op_norm_hermitian(tol)?);
        }
        Ok(worst)
    }
}

/// Positive element majorized by the identity, blockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Effect {
    inner: AlgebraElement,
}

impl Effect {
    /// Validates hermiticity and the spectral bounds `[-tol, 1 + tol]` per block.
    pub fn new(inner: AlgebraElement, tol: f64) -> Result<Self> {
        for (i, part) in inner.parts().iter().enumerate() {
            let defect = part.hermitian_defect();
            if defect > tol {
                return Err(Error::NotEffect {
                    context: format!("block {}: Hermitian defect {defect:.3e}", i + 1),
                });
            }
            let eig = herm_eig(part, tol)?;
            for &l in &eig.eigenvalues {
                if l < -tol || l > 1.0 + tol {
                    return Err(Error::NotEffect {
                        context: format!("block {}: eigenvalue {l:.6e}", i + 1),
                    });
                }
            }
        }
        Ok(Effect { inner })
    }

    /// Skips validation; the caller guarantees the effect invariants.
    pub fn new_unchecked(inner: AlgebraElement) -> Self {
        Effect { inner }
    }

    pub fn identity(spec: &AlgebraSpec) -> Self {
        Effect {
            inner: AlgebraElement::identity(spec),
        }
    }

    pub fn zero(spec: &AlgebraSpec) -> Self {
        Effect {
            inner: AlgebraElement::zero(spec),
        }
    }

    pub fn as_element(&self) -> &AlgebraElement {
        &self.inner
    }

    pub fn into_element(self) -> AlgebraElement {
        self.inner
    }

    pub fn spec(&self) -> &AlgebraSpec {
        self.inner.spec()
    }

    pub fn part(&self, i: usize) -> &ComplexMatrix {
        self.inner.part(i)
    }
}

impl AsRef<AlgebraElement> for Effect {
    fn as_ref(&self) -> &AlgebraElement {
        &self.inner
    }
}

/// Self-adjoint idempotent, blockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Projection {
    inner: Effect,
}

impl Projection {
    /// Validates `‖P² − P‖_F ≤ tol` and `‖P − Pᴴ‖_F ≤ tol` per block.
    pub fn new(element: AlgebraElement, tol: f64) -> Result<Self> {
        for (i, part) in element.parts().iter().enumerate() {
            let herm = part.hermitian_defect();
            if herm > tol {
                return Err(Error::NotProjection {
                    context: format!("block {}: Hermitian defect {herm:.3e}", i + 1),
                });
            }
            let idem = part.mul(part).frobenius_dist(part);
            if idem > tol {
                return Err(Error::NotProjection {
                    context: format!("block {}: idempotency defect {idem:.3e}", i + 1),
                });
            }
        }
        Ok(Projection {
            inner: Effect::new_unchecked(element),
        })
    }

    pub fn new_unchecked(element: AlgebraElement) -> Self {
        Projection {
            inner: Effect::new_unchecked(element),
        }
    }

    pub fn identity(spec: &AlgebraSpec) -> Self {
        Projection {
            inner: Effect::identity(spec),
        }
    }

    pub fn zero(spec: &AlgebraSpec) -> Self {
        Projection {
            inner: Effect::zero(spec),
        }
    }

    pub fn as_effect(&self) -> &Effect {
        &self.inner
    }

    pub fn as_element(&self) -> &AlgebraElement {
        self.inner.as_element()
    }

    pub fn spec(&self) -> &AlgebraSpec {
        self.inner.spec()
    }

    pub fn part(&self, i: usize) -> &ComplexMatrix {
        self.inner.part(i)
    }
}

impl AsRef<AlgebraElement> for Projection {
    fn as_ref(&self) -> &AlgebraElement {
        self.inner.as_element()
    }
}

/// Tolerances, trial counts, and the master seed used by samplers and checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Tolerance for equality-style residual checks.
    pub eq_tol: f64,
    /// Tolerance for spectral (positivity) checks.
    pub psd_tol: f64,
    /// Number of randomized trials per check.
    pub trials: usize,
    /// Master seed; sub-streams are split off per trial.
    pub seed: u64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            eq_tol: 1e-9,
            psd_tol: 1e-10,
            trials: 200,
            seed: 42,
        }
    }
}

impl ToleranceConfig {
    pub fn with_seed(seed: u64) -> Self {
        ToleranceConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eq_tol <= 0.0
            || self.psd_tol <= 0.0
            || self.eq_tol.is_nan()
            || self.psd_tol.is_nan()
        {
            return Err(Error::InvariantError("tolerances must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvariantError("trials must be positive".into()));
        }
        Ok(())
    }
}

/// Classification flags produced by [`classify_element`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementFlags {
    pub is_effect: bool,
    pub is_projection: bool,
    pub is_central: bool,
    pub is_abelian_projection: bool,
}

/// Central effect `λ·I`.
pub fn scalar_element(spec: &AlgebraSpec, lambda: f64) -> Result<Effect> {
    if !(0.0..=1.0).contains(&lambda) || lambda.is_nan() {
        return Err(Error::BadScalar { value: lambda });
    }
    Ok(Effect::new_unchecked(
        AlgebraElement::identity(spec).scale(lambda),
    ))
}

/// Numerically classifies a raw element.
///
/// Centrality means each part is within `eq_tol` of a scalar multiple of its
/// block identity; an abelian projection has at most one eigenvalue ≥ 0.5
/// per block (rank ≤ 1, given the projection invariant).
pub fn classify_element(x: &AlgebraElement, cfg: &ToleranceConfig) -> ElementFlags {
    let tol = cfg.eq_tol;
    let mut is_effect = true;
    let mut is_projection = true;
    let mut is_central = true;
    let mut abelian = true;

    for part in x.parts() {
        let n = part.dim();
        if part.hermitian_defect() > tol {
            is_effect = false;
            is_projection = false;
        }
        if part.mul(part).frobenius_dist(part) > tol {
            is_projection = false;
        }
        let mean = part.trace() / n as f64;
        let scalar = ComplexMatrix::identity(n).scale_c(mean);
        if part.frobenius_dist(&scalar) > tol {
            is_central = false;
        }
        if is_effect {
            match herm_eig(&part.hermitian_part(), tol) {
                Ok(eig) => {
                    if eig.eigenvalues.iter().any(|&l| l < -tol || l > 1.0 + tol) {
                        is_effect = false;
                    }
                    if eig.eigenvalues.iter().filter(|&&l| l >= 0.5).count() > 1 {
                        abelian = false;
                    }
                }
                Err(_) => is_effect = false,
            }
        }
    }

    ElementFlags {
        is_effect,
        is_projection,
        is_central,
        is_abelian_projection: is_projection && abelian,
    }
}

/// The minimal central projections: one block indicator per block.
pub fn center_projections(spec: &AlgebraSpec) -> Vec<Projection> {
    (0..spec.block_count())
        .map(|i| {
            let mut e = AlgebraElement::zero(spec);
            *e.part_mut(i) = ComplexMatrix::identity(spec.block_size(i));
            Projection::new_unchecked(e)
        })
        .collect()
}

/// Smallest central projection dominating `p`: the indicator of the blocks
/// where `p` is nonzero (block Frobenius norm above `tol`).
pub fn central_carrier(p: &Projection, tol: f64) -> Projection {
    let spec = p.spec();
    let mut out = AlgebraElement::zero(spec);
    for i in 0..spec.block_count() {
        if p.part(i).frobenius_norm() > tol {
            *out.part_mut(i) = ComplexMatrix::identity(spec.block_size(i));
        }
    }
    Projection::new_unchecked(out)
}

/// Self-adjoint system of matrix units spanning one block.
#[derive(Debug, Clone)]
pub struct MatrixUnitSystem {
    block: usize,
    n: usize,
    units: Vec<AlgebraElement>,
}

impl MatrixUnitSystem {
    pub fn block(&self) -> usize {
        self.block
    }

    pub fn block_dim(&self) -> usize {
        self.n
    }

    /// The unit `E_{jk}` (zero-based indices within the block).
    pub fn unit(&self, j: usize, k: usize) -> &AlgebraElement {
        &self.units[j * self.n + k]
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &AlgebraElement)> {
        let n = self.n;
        self.units
            .iter()
            .enumerate()
            .map(move |(idx, e)| ((idx / n, idx % n), e))
    }
}

/// Standard matrix units `e_j e_kᴴ` embedded in block `i` (zero-based).
pub fn matrix_units(spec: &AlgebraSpec, i: usize) -> Result<MatrixUnitSystem> {
    if i >= spec.block_count() {
        return Err(Error::BadIndex {
            index: i,
            blocks: spec.block_count(),
        });
    }
    let n = spec.block_size(i);
    let mut units = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let mut e = AlgebraElement::zero(spec);
            e.part_mut(i)[(j, k)] = Complex64::ONE;
            units.push(e);
        }
    }
    Ok(MatrixUnitSystem { block: i, n, units })
}

/// Normalized trace per block: component `i` is `tr(xᵢ)/nᵢ`.
pub fn trace_per_block(x: &AlgebraElement) -> Vec<Complex64> {
    x.parts()
        .iter()
        .zip(x.spec().blocks())
        .map(|(p, &n)| p.trace() / n as f64)
        .collect()
}

/// Central projections covering the blocks of each distinct size; the values
/// partition the identity.
pub fn type_partition(spec: &AlgebraSpec) -> BTreeMap<usize, Projection> {
    let mut out = BTreeMap::new();
    for distinct in spec
        .blocks()
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
    {
        let mut e = AlgebraElement::zero(spec);
        for (i, &n) in spec.blocks().iter().enumerate() {
            if n == distinct {
                *e.part_mut(i) = ComplexMatrix::identity(n);
            }
        }
        out.insert(distinct, Projection::new_unchecked(e));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(blocks: &[usize]) -> AlgebraSpec {
        AlgebraSpec::new(blocks.to_vec()).unwrap()
    }

    #[test]
    fn spec_invariants() {
        assert!(AlgebraSpec::new(vec![]).is_err());
        assert!(AlgebraSpec::new(vec![2, 0]).is_err());
        assert_eq!(spec(&[2, 3]).linear_dim(), 13);
        assert!(spec(&[1, 1]).is_commutative());
        assert!(!spec(&[1, 2]).is_commutative());
    }

    #[test]
    fn scalar_element_examples() {
        let s = spec(&[2, 3]);
        let one = scalar_element(&s, 1.0).unwrap();
        assert!(one
            .as_element()
            .approx_eq(&AlgebraElement::identity(&s), 1e-15));
        let zero = scalar_element(&s, 0.0).unwrap();
        assert!(zero.as_element().frobenius_norm() <= 1e-15);

        let half = scalar_element(&spec(&[1, 2]), 0.5).unwrap();
        assert_eq!(half.part(0)[(0, 0)].re, 0.5);
        assert_eq!(half.part(1)[(1, 1)].re, 0.5);
        assert!(matches!(
            scalar_element(&s, 1.5),
            Err(Error::BadScalar { .. })
        ));

        let cfg = ToleranceConfig::default();
        assert!(classify_element(half.as_element(), &cfg).is_central);
    }

    #[test]
    fn classify_examples() {
        let cfg = ToleranceConfig::default();
        let s = spec(&[2]);

        let half = scalar_element(&s, 0.5).unwrap();
        let flags = classify_element(half.as_element(), &cfg);
        assert!(flags.is_effect && flags.is_central && !flags.is_projection);

        let m = ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        let p = AlgebraElement::new(s.clone(), vec![m]).unwrap();
        let flags = classify_element(&p, &cfg);
        assert!(flags.is_projection && flags.is_abelian_projection && !flags.is_central);

        let bad =
            AlgebraElement::new(s.clone(), vec![ComplexMatrix::diagonal(&[1.2, 0.0])]).unwrap();
        assert!(!classify_element(&bad, &cfg).is_effect);

        // Identity in M2 is a projection but not abelian (rank 2).
        let id = AlgebraElement::identity(&s);
        let flags = classify_element(&id, &cfg);
        assert!(flags.is_projection && !flags.is_abelian_projection);
    }

    #[test]
    fn center_projection_properties() {
        let s = spec(&[1, 1, 2]);
        let centers = center_projections(&s);
        assert_eq!(centers.len(), 3);
        let sum = centers
            .iter()
            .fold(AlgebraElement::zero(&s), |acc, p| acc.add(p.as_element()));
        assert!(sum.approx_eq(&AlgebraElement::identity(&s), 1e-15));
        for (i, p) in centers.iter().enumerate() {
            for (j, q) in centers.iter().enumerate() {
                let prod = p.as_element().mul(q.as_element());
                if i == j {
                    assert!(prod.approx_eq(p.as_element(), 1e-15));
                } else {
                    assert!(prod.frobenius_norm() <= 1e-15);
                }
            }
            // Fixed points of the central carrier.
            let carrier = central_carrier(p, 1e-9);
            assert!(carrier.as_element().approx_eq(p.as_element(), 1e-15));
        }
    }

    #[test]
    fn central_carrier_examples() {
        let s = spec(&[2, 3]);
        let mut e = AlgebraElement::zero(&s);
        e.part_mut(0)[(0, 0)] = Complex64::ONE;
        let p = Projection::new(e, 1e-10).unwrap();
        let carrier = central_carrier(&p, 1e-9);
        assert!(carrier.part(0).frobenius_dist(&ComplexMatrix::identity(2)) <= 1e-15);
        assert!(carrier.part(1).frobenius_norm() <= 1e-15);

        let z = Projection::zero(&s);
        assert!(central_carrier(&z, 1e-9).as_element().frobenius_norm() <= 1e-15);

        // Two equivalent (rank-1, same-block) abelian projections share a carrier.
        let mut e2 = AlgebraElement::zero(&s);
        e2.part_mut(0)[(1, 1)] = Complex64::ONE;
        let q = Projection::new(e2, 1e-10).unwrap();
        assert!(central_carrier(&q, 1e-9)
            .as_element()
            .approx_eq(carrier.as_element(), 1e-15));
    }

    #[test]
    fn matrix_unit_relations() {
        let s = spec(&[2]);
        let units = matrix_units(&s, 0).unwrap();
        let e12 = units.unit(0, 1);
        let e21 = units.unit(1, 0);
        let e11 = units.unit(0, 0);
        assert!(e12.mul(e21).approx_eq(e11, 1e-15));
        let sum = e11.add(units.unit(1, 1));
        assert!(sum.approx_eq(&AlgebraElement::identity(&s), 1e-15));
        assert!(e12.adjoint().approx_eq(e21, 1e-15));

        let s2 = spec(&[2, 3]);
        let units2 = matrix_units(&s2, 1).unwrap();
        assert_eq!(units2.iter().count(), 9);
        for (_, u) in units2.iter() {
            assert!(u.part(0).frobenius_norm() <= 1e-15);
        }
        assert!(matches!(matrix_units(&s2, 2), Err(Error::BadIndex { .. })));
    }

    #[test]
    fn full_unit_relations_hold_exactly() {
        let s = spec(&[3]);
        let units = matrix_units(&s, 0).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    for m in 0..3 {
                        let prod = units.unit(j, k).mul(units.unit(l, m));
                        if k == l {
                            assert!(prod.approx_eq(units.unit(j, m), 1e-15));
                        } else {
                            assert!(prod.frobenius_norm() == 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn trace_per_block_examples() {
        let s = spec(&[3]);
        let tr = trace_per_block(&AlgebraElement::identity(&s));
        assert!((tr[0].re - 1.0).abs() <= 1e-15);

        let s2 = spec(&[2]);
        let x = AlgebraElement::new(s2, vec![ComplexMatrix::diagonal(&[1.0, 0.0])]).unwrap();
        assert!((trace_per_block(&x)[0].re - 0.5).abs() <= 1e-15);
    }

    #[test]
    fn trace_is_tracial() {
        use crate::sampling;
        let s = spec(&[2, 3]);
        let mut rng = sampling::stream_rng(11, 0);
        for _ in 0..10 {
            let x = sampling::effect_on(&s, &mut rng).into_element();
            let y = sampling::effect_on(&s, &mut rng).into_element();
            let txy = trace_per_block(&x.mul(&y));
            let tyx = trace_per_block(&y.mul(&x));
            for (a, b) in txy.iter().zip(&tyx) {
                assert!((a - b).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn type_partition_examples() {
        let s = spec(&[1, 1, 2, 2, 3]);
        let parts = type_partition(&s);
        assert_eq!(parts.len(), 3);
        assert!(parts[&1].part(0).frobenius_norm() > 0.5);
        assert!(parts[&1].part(2).frobenius_norm() <= 1e-15);
        assert!(parts[&2].part(2).frobenius_norm() > 0.5);
        assert!(parts[&3].part(4).frobenius_norm() > 0.5);
        let sum = parts
            .values()
            .fold(AlgebraElement::zero(&s), |acc, p| acc.add(p.as_element()));
        assert!(sum.approx_eq(&AlgebraElement::identity(&s), 1e-15));

        let single = type_partition(&spec(&[4]));
        assert!(single[&4]
            .as_element()
            .approx_eq(&AlgebraElement::identity(&spec(&[4])), 1e-15));
    }

    #[test]
    fn effect_validation() {
        let s = spec(&[2]);
        let ok =
            AlgebraElement::new(s.clone(), vec![ComplexMatrix::diagonal(&[0.3, 0.9])]).unwrap();
        assert!(Effect::new(ok, 1e-10).is_ok());
        let over =
            AlgebraElement::new(s.clone(), vec![ComplexMatrix::diagonal(&[1.2, 0.0])]).unwrap();
        assert!(matches!(
            Effect::new(over, 1e-10),
            Err(Error::NotEffect { .. })
        ));
        let neg = AlgebraElement::new(s, vec![ComplexMatrix::diagonal(&[-0.2, 0.5])]).unwrap();
        assert!(Effect::new(neg, 1e-10).is_err());
    }

    #[test]
    fn projection_validation() {
        let s = spec(&[2]);
        let half = AlgebraElement::identity(&s).scale(0.5);
        assert!(matches!(
            Projection::new(half, 1e-9),
            Err(Error::NotProjection { .. })
        ));
    }

    #[test]
    fn element_json_round_trip_is_bit_exact() {
        let s = spec(&[1, 2]);
        let mut e = AlgebraElement::zero(&s);
        e.part_mut(0)[(0, 0)] = Complex64::new(0.1 + 0.2, -1.0 / 3.0);
        e.part_mut(1)[(0, 1)] = Complex64::new(std::f64::consts::PI, 1e-300);
        let json = serde_json::to_string(&e).unwrap();
        let back: AlgebraElement = serde_json::from_str(&json).unwrap();
        for (a, b) in e.parts().iter().zip(back.parts()) {
            for i in 0..a.dim() {
                for j in 0..a.dim() {
                    assert_eq!(a[(i, j)].re.to_bits(), b[(i, j)].re.to_bits());
                    assert_eq!(a[(i, j)].im.to_bits(), b[(i, j)].im.to_bits());
                }
            }
        }
    }
}
