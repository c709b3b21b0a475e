//! Constructors, combinators, and serialization for sequential isomorphisms.
//!
//! A [`MapDescriptor`] is a serializable recipe: unitary conjugation and
//! transpose-then-conjugation (with a block permutation), per-coordinate
//! power maps on commutative blocks, direct sums, and compositions. Building
//! a descriptor yields a [`SequentialMapOracle`], an opaque effect-to-effect
//! callable. The analyzer only ever evaluates oracles; attached descriptors
//! are ground truth for tests, which is what makes recovery tests blind.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, AlgebraSpec, Effect, ToleranceConfig};
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, ComplexMatrix};
use crate::sampling;

/// Unitarity tolerance enforced when building an oracle from a descriptor.
pub const BUILD_UNITARITY_TOL: f64 = 1e-10;
/// Laxer unitarity tolerance applied when loading a descriptor from disk.
pub const LOAD_UNITARITY_TOL: f64 = 1e-8;

/// Serializes zero-based index vectors as 1-based arrays (wire convention).
pub(crate) fn serialize_one_based<S: serde::Serializer>(
    v: &[usize],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    one_based::serialize(v, s)
}

mod one_based {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&i| i + 1).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
        let raw: Vec<usize> = Vec::deserialize(d)?;
        raw.iter()
            .map(|&i| {
                i.checked_sub(1)
                    .ok_or_else(|| serde::de::Error::custom("indices are 1-based"))
            })
            .collect()
    }
}

/// One summand of a direct-sum descriptor: which source blocks it consumes,
/// which target blocks it fills (paired positionally), and the sub-map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectSumPart {
    #[serde(with = "one_based")]
    pub source_blocks: Vec<usize>,
    #[serde(with = "one_based")]
    pub target_blocks: Vec<usize>,
    pub map: MapDescriptor,
}

/// Serializable construction recipe for a sequential isomorphism.
///
/// Permutations are stored zero-based and serialized one-based; `perm[i]` is
/// the target block receiving source block `i`. Unitaries are indexed by
/// target block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapDescriptor {
    /// `Xᵢ ↦ U_{σ(i)} Xᵢ U_{σ(i)}ᴴ` placed at block `σ(i)`.
    Unitary {
        #[serde(with = "one_based")]
        perm: Vec<usize>,
        unitaries: Vec<ComplexMatrix>,
    },
    /// `Xᵢ ↦ U_{σ(i)} Xᵢᵀ U_{σ(i)}ᴴ` placed at block `σ(i)`.
    Transpose {
        #[serde(with = "one_based")]
        perm: Vec<usize>,
        unitaries: Vec<ComplexMatrix>,
    },
    /// `xᵢ ↦ xᵢ^{pᵢ}` on an all-size-one spec.
    Power { exponents: Vec<f64> },
    /// Disjoint sub-maps acting on disjoint sets of blocks.
    DirectSum { parts: Vec<DirectSumPart> },
    /// `outer ∘ inner`.
    Compose {
        outer: Box<MapDescriptor>,
        inner: Box<MapDescriptor>,
    },
}

fn check_permutation(perm: &[usize], len: usize) -> Result<()> {
    if perm.len() != len {
        return Err(Error::DescriptorInvalid(format!(
            "permutation has {} entries for {} blocks",
            perm.len(),
            len
        )));
    }
    let mut seen = vec![false; len];
    for &p in perm {
        if p >= len || seen[p] {
            return Err(Error::DescriptorInvalid(
                "perm is not a bijection onto the block range".into(),
            ));
        }
        seen[p] = true;
    }
    Ok(())
}

fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    u.adjoint()
        .mul(u)
        .frobenius_dist(&ComplexMatrix::identity(u.dim()))
}

impl MapDescriptor {
    /// Validates the descriptor invariants; `unitarity_tol` distinguishes the
    /// stricter build-time check from the load-time check.
    pub fn validate(&self, unitarity_tol: f64) -> Result<()> {
        match self {
            MapDescriptor::Unitary { perm, unitaries }
            | MapDescriptor::Transpose { perm, unitaries } => {
                check_permutation(perm, unitaries.len())?;
                for (j, u) in unitaries.iter().enumerate() {
                    let defect = unitarity_defect(u);
                    if defect > unitarity_tol {
                        return Err(Error::DescriptorInvalid(format!(
                            "unitary {} deviates from unitarity by {defect:.3e}",
                            j + 1
                        )));
                    }
                }
                Ok(())
            }
            MapDescriptor::Power { exponents } => {
                if exponents.is_empty() {
                    return Err(Error::DescriptorInvalid(
                        "power map needs at least one exponent".into(),
                    ));
                }
                for (i, &p) in exponents.iter().enumerate() {
                    if p <= 0.0 || !p.is_finite() {
                        return Err(Error::DescriptorInvalid(format!(
                            "exponent {} must be positive, got {p}",
                            i + 1
                        )));
                    }
                }
                Ok(())
            }
            MapDescriptor::DirectSum { parts } => {
                if parts.is_empty() {
                    return Err(Error::DescriptorInvalid(
                        "direct sum needs at least one part".into(),
                    ));
                }
                for part in parts {
                    part.map.validate(unitarity_tol)?;
                    let src = part.map.source_spec()?;
                    let tgt = part.map.target_spec()?;
                    if part.source_blocks.len() != src.block_count()
                        || part.target_blocks.len() != tgt.block_count()
                    {
                        return Err(Error::DescriptorInvalid(
                            "part block lists must match the sub-map block counts".into(),
                        ));
                    }
                }
                // Source and target lists must each tile their block ranges.
                self.source_spec()?;
                self.target_spec()?;
                Ok(())
            }
            MapDescriptor::Compose { outer, inner } => {
                outer.validate(unitarity_tol)?;
                inner.validate(unitarity_tol)?;
                if inner.target_spec()? != outer.source_spec()? {
                    return Err(Error::DescriptorInvalid(
                        "composition specs do not chain".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// The source algebra spec implied by the descriptor.
    pub fn source_spec(&self) -> Result<AlgebraSpec> {
        match self {
            MapDescriptor::Unitary { perm, unitaries }
            | MapDescriptor::Transpose { perm, unitaries } => {
                check_permutation(perm, unitaries.len())?;
                AlgebraSpec::new(perm.iter().map(|&t| unitaries[t].dim()).collect())
            }
            MapDescriptor::Power { exponents } => AlgebraSpec::new(vec![1; exponents.len()]),
            MapDescriptor::DirectSum { parts } => {
                scatter_spec(parts, |p| (&p.source_blocks, p.map.source_spec()))
            }
            MapDescriptor::Compose { inner, .. } => inner.source_spec(),
        }
    }

    /// The target algebra spec implied by the descriptor.
    pub fn target_spec(&self) -> Result<AlgebraSpec> {
        match self {
            MapDescriptor::Unitary { unitaries, .. }
            | MapDescriptor::Transpose { unitaries, .. } => {
                AlgebraSpec::new(unitaries.iter().map(|u| u.dim()).collect())
            }
            MapDescriptor::Power { exponents } => AlgebraSpec::new(vec![1; exponents.len()]),
            MapDescriptor::DirectSum { parts } => {
                scatter_spec(parts, |p| (&p.target_blocks, p.map.target_spec()))
            }
            MapDescriptor::Compose { outer, .. } => outer.target_spec(),
        }
    }
}

fn scatter_spec<'a, F>(parts: &'a [DirectSumPart], pick: F) -> Result<AlgebraSpec>
where
    F: Fn(&'a DirectSumPart) -> (&'a Vec<usize>, Result<AlgebraSpec>),
{
    let mut sizes: Vec<Option<usize>> = Vec::new();
    for part in parts {
        let (indices, sub) = pick(part);
        let sub = sub?;
        if indices.len() != sub.block_count() {
            return Err(Error::DescriptorInvalid(
                "part block list length does not match its sub-map".into(),
            ));
        }
        for (&g, &n) in indices.iter().zip(sub.blocks()) {
            if g >= sizes.len() {
                sizes.resize(g + 1, None);
            }
            if sizes[g].is_some() {
                return Err(Error::DescriptorInvalid(format!(
                    "block {} is claimed by two direct-sum parts",
                    g + 1
                )));
            }
            sizes[g] = Some(n);
        }
    }
    let blocks = sizes
        .into_iter()
        .enumerate()
        .map(|(g, s)| {
            s.ok_or_else(|| {
                Error::DescriptorInvalid(format!("block {} is covered by no part", g + 1))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    AlgebraSpec::new(blocks)
}

/// Pure evaluation of a validated descriptor on a raw element.
fn eval_descriptor(d: &MapDescriptor, x: &AlgebraElement) -> AlgebraElement {
    match d {
        MapDescriptor::Unitary { perm, unitaries } => {
            let target = d.target_spec().expect("validated descriptor");
            let mut out = AlgebraElement::zero(&target);
            for (i, part) in x.parts().iter().enumerate() {
                let t = perm[i];
                let u = &unitaries[t];
                *out.part_mut(t) = u.mul(part).mul(&u.adjoint());
            }
            out
        }
        MapDescriptor::Transpose { perm, unitaries } => {
            let target = d.target_spec().expect("validated descriptor");
            let mut out = AlgebraElement::zero(&target);
            for (i, part) in x.parts().iter().enumerate() {
                let t = perm[i];
                let u = &unitaries[t];
                *out.part_mut(t) = u.mul(&part.transpose()).mul(&u.adjoint());
            }
            out
        }
        MapDescriptor::Power { exponents } => {
            let mut out = x.clone();
            for (i, &p) in exponents.iter().enumerate() {
                let v = x.part(i)[(0, 0)].re.clamp(0.0, 1.0);
                out.part_mut(i)[(0, 0)] = num_complex::Complex64::new(v.powf(p), 0.0);
            }
            out
        }
        MapDescriptor::DirectSum { parts } => {
            let target = d.target_spec().expect("validated descriptor");
            let mut out = AlgebraElement::zero(&target);
            for part in parts {
                let sub_src = part.map.source_spec().expect("validated descriptor");
                let gathered = AlgebraElement::new(
                    sub_src,
                    part.source_blocks
                        .iter()
                        .map(|&g| x.part(g).clone())
                        .collect(),
                )
                .expect("validated descriptor");
                let image = eval_descriptor(&part.map, &gathered);
                for (pos, &g) in part.target_blocks.iter().enumerate() {
                    *out.part_mut(g) = image.part(pos).clone();
                }
            }
            out
        }
        MapDescriptor::Compose { outer, inner } => {
            eval_descriptor(outer, &eval_descriptor(inner, x))
        }
    }
}

type OracleFn = dyn Fn(&Effect) -> AlgebraElement + Send + Sync;

/// Opaque effect-to-effect callable between two algebras.
///
/// `descriptor` is carried for test ground truth only; analysis code must
/// work through `eval` alone. Outputs are validated lazily by [`apply_map`],
/// never clamped, so broken oracles stay observable.
#[derive(Clone)]
pub struct SequentialMapOracle {
    source: AlgebraSpec,
    target: AlgebraSpec,
    eval: Arc<OracleFn>,
    descriptor: Option<MapDescriptor>,
}

impl fmt::Debug for SequentialMapOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SequentialMapOracle")
            .field("source", &self.source.blocks())
            .field("target", &self.target.blocks())
            .field("descriptor", &self.descriptor.as_ref().map(kind_name))
            .finish()
    }
}

fn kind_name(d: &MapDescriptor) -> &'static str {
    match d {
        MapDescriptor::Unitary { .. } => "unitary",
        MapDescriptor::Transpose { .. } => "transpose",
        MapDescriptor::Power { .. } => "power",
        MapDescriptor::DirectSum { .. } => "direct_sum",
        MapDescriptor::Compose { .. } => "compose",
    }
}

impl SequentialMapOracle {
    /// Wraps an arbitrary callable as an opaque oracle.
    pub fn from_fn<F>(source: AlgebraSpec, target: AlgebraSpec, f: F) -> Self
    where
        F: Fn(&Effect) -> AlgebraElement + Send + Sync + 'static,
    {
        SequentialMapOracle {
            source,
            target,
            eval: Arc::new(f),
            descriptor: None,
        }
    }

    pub fn source(&self) -> &AlgebraSpec {
        &self.source
    }

    pub fn target(&self) -> &AlgebraSpec {
        &self.target
    }

    pub fn descriptor(&self) -> Option<&MapDescriptor> {
        self.descriptor.as_ref()
    }

    /// Raw evaluation without output validation.
    pub fn eval_raw(&self, a: &Effect) -> AlgebraElement {
        (self.eval)(a)
    }

    /// Validated evaluation; see [`apply_map`].
    pub fn apply(&self, a: &Effect, cfg: &ToleranceConfig) -> Result<Effect> {
        apply_map(self, a, cfg)
    }
}

/// Builds the oracle realized by a descriptor.
pub fn build_map(d: &MapDescriptor) -> Result<SequentialMapOracle> {
    d.validate(BUILD_UNITARITY_TOL)?;
    let source = d.source_spec()?;
    let target = d.target_spec()?;
    let recipe = d.clone();
    Ok(SequentialMapOracle {
        source,
        target,
        eval: Arc::new(move |a: &Effect| eval_descriptor(&recipe, a.as_element())),
        descriptor: Some(d.clone()),
    })
}

/// Evaluates the oracle and validates that the output is an effect on the
/// target spec, reporting the offending eigenvalue otherwise.
pub fn apply_map(m: &SequentialMapOracle, a: &Effect, cfg: &ToleranceConfig) -> Result<Effect> {
    if a.spec() != &m.source {
        return Err(Error::SpecMismatch {
            context: format!(
                "effect on {:?}, oracle source {:?}",
                a.spec().blocks(),
                m.source.blocks()
            ),
        });
    }
    let raw = m.eval_raw(a);
    if raw.spec() != &m.target {
        return Err(Error::SpecMismatch {
            context: format!(
                "oracle returned {:?}, target is {:?}",
                raw.spec().blocks(),
                m.target.blocks()
            ),
        });
    }
    let tol = cfg.psd_tol;
    for (i, part) in raw.parts().iter().enumerate() {
        if part.hermitian_defect() > tol {
            return Err(Error::OracleRangeError {
                block: i + 1,
                eigenvalue: f64::NAN,
            });
        }
        let eig = herm_eig(part, tol)?;
        for &l in &eig.eigenvalues {
            if l < -tol || l > 1.0 + tol {
                return Err(Error::OracleRangeError {
                    block: i + 1,
                    eigenvalue: l,
                });
            }
        }
    }
    Ok(Effect::new_unchecked(raw))
}

/// How [`combine_maps`] glues its parts together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineKind {
    DirectSum,
    Compose,
}

/// Direct sum (block-concatenating, in order) or composition (first part
/// outermost) of oracles. The combined descriptor is recorded when every
/// part carries one.
pub fn combine_maps(
    kind: CombineKind,
    parts: Vec<SequentialMapOracle>,
) -> Result<SequentialMapOracle> {
    if parts.is_empty() {
        return Err(Error::SpecMismatch {
            context: "combine_maps needs at least one part".into(),
        });
    }
    match kind {
        CombineKind::DirectSum => {
            let mut src_blocks = Vec::new();
            let mut tgt_blocks = Vec::new();
            for p in &parts {
                src_blocks.extend_from_slice(p.source().blocks());
                tgt_blocks.extend_from_slice(p.target().blocks());
            }
            let source = AlgebraSpec::new(src_blocks)?;
            let target = AlgebraSpec::new(tgt_blocks)?;

            let descriptor = if parts.iter().all(|p| p.descriptor.is_some()) {
                let mut ds_parts = Vec::new();
                let mut s_off = 0;
                let mut t_off = 0;
                for p in &parts {
                    let ks = p.source().block_count();
                    let kt = p.target().block_count();
                    ds_parts.push(DirectSumPart {
                        source_blocks: (s_off..s_off + ks).collect(),
                        target_blocks: (t_off..t_off + kt).collect(),
                        map: p.descriptor.clone().unwrap(),
                    });
                    s_off += ks;
                    t_off += kt;
                }
                Some(MapDescriptor::DirectSum { parts: ds_parts })
            } else {
                None
            };

            let evals: Vec<(AlgebraSpec, Arc<OracleFn>)> = parts
                .iter()
                .map(|p| (p.source().clone(), p.eval.clone()))
                .collect();
            let target_inner = target.clone();
            let eval = Arc::new(move |a: &Effect| {
                let mut out_parts = Vec::new();
                let mut s_off = 0;
                for (sub_src, f) in &evals {
                    let ks = sub_src.block_count();
                    let gathered = AlgebraElement::new(
                        sub_src.clone(),
                        (s_off..s_off + ks).map(|g| a.part(g).clone()).collect(),
                    )
                    .expect("spec checked at combine time");
                    let image = f(&Effect::new_unchecked(gathered));
                    out_parts.extend(image.into_parts());
                    s_off += ks;
                }
                AlgebraElement::new(target_inner.clone(), out_parts)
                    .expect("spec checked at combine time")
            });
            Ok(SequentialMapOracle {
                source,
                target,
                eval,
                descriptor,
            })
        }
        CombineKind::Compose => {
            for pair in parts.windows(2) {
                if pair[0].source() != pair[1].target() {
                    return Err(Error::SpecMismatch {
                        context: format!(
                            "composition chain breaks: {:?} vs {:?}",
                            pair[0].source().blocks(),
                            pair[1].target().blocks()
                        ),
                    });
                }
            }
            let source = parts.last().unwrap().source().clone();
            let target = parts.first().unwrap().target().clone();
            let descriptor = if parts.iter().all(|p| p.descriptor.is_some()) {
                let mut iter = parts.iter().rev();
                let mut acc = iter.next().unwrap().descriptor.clone().unwrap();
                for p in iter {
                    acc = MapDescriptor::Compose {
                        outer: Box::new(p.descriptor.clone().unwrap()),
                        inner: Box::new(acc),
                    };
                }
                Some(acc)
            } else {
                None
            };
            let evals: Vec<Arc<OracleFn>> = parts.iter().map(|p| p.eval.clone()).collect();
            let eval = Arc::new(move |a: &Effect| {
                let mut current = a.as_element().clone();
                for f in evals.iter().rev() {
                    current = f(&Effect::new_unchecked(current));
                }
                current
            });
            Ok(SequentialMapOracle {
                source,
                target,
                eval,
                descriptor,
            })
        }
    }
}

/// Worst sequential-axiom residual over sampled effect pairs, with the
/// worst pair kept for diagnosis.
#[derive(Debug, Clone, Serialize)]
pub struct AxiomSample {
    pub max_residual: f64,
    pub worst: Option<(Effect, Effect)>,
}

/// Samples `‖φ(A∘B) − φ(A)∘φ(B)‖_F` over `cfg.trials` seeded effect pairs.
pub fn sample_sequential_axiom(
    m: &SequentialMapOracle,
    cfg: &ToleranceConfig,
) -> Result<AxiomSample> {
    let mut max_residual = 0.0f64;
    let mut worst = None;
    for trial in 0..cfg.trials {
        let mut rng = sampling::stream_rng(cfg.seed, trial as u64);
        let a = sampling::effect_on(m.source(), &mut rng);
        let b = sampling::effect_on(m.source(), &mut rng);
        let ab = crate::sequential::seq_product(&a, &b, cfg)?;
        let lhs = apply_map(m, &ab, cfg)?;
        let fa = apply_map(m, &a, cfg)?;
        let fb = apply_map(m, &b, cfg)?;
        let rhs = crate::sequential::seq_product(&fa, &fb, cfg)?;
        let residual = lhs.as_element().frobenius_dist(rhs.as_element());
        if residual > max_residual {
            max_residual = residual;
            worst = Some((a, b));
        }
    }
    Ok(AxiomSample {
        max_residual,
        worst,
    })
}

/// Parses a descriptor JSON document, returning the implied source spec and
/// the validated descriptor.
///
/// Accepts either a bare descriptor or a `{"spec": …, "map": …}` pair; in
/// the latter case the embedded spec is cross-checked against the one the
/// descriptor implies.
pub fn parse_descriptor_json(text: &str) -> Result<(AlgebraSpec, MapDescriptor)> {
    #[derive(Deserialize)]
    struct Pair {
        spec: AlgebraSpec,
        map: MapDescriptor,
    }
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
        Error::SchemaError(format!("line {}, column {}: {}", e.line(), e.column(), e))
    })?;
    let (declared, descriptor) = if value.get("map").is_some() {
        let pair: Pair =
            serde_json::from_value(value).map_err(|e| Error::SchemaError(e.to_string()))?;
        (Some(pair.spec), pair.map)
    } else {
        let d: MapDescriptor =
            serde_json::from_value(value).map_err(|e| Error::SchemaError(e.to_string()))?;
        (None, d)
    };
    descriptor
        .validate(LOAD_UNITARITY_TOL)
        .map_err(|e| match e {
            Error::DescriptorInvalid(msg) => Error::InvariantError(msg),
            other => other,
        })?;
    let implied = descriptor.source_spec()?;
    if let Some(declared) = declared {
        if declared != implied {
            return Err(Error::InvariantError(format!(
                "declared spec {:?} does not match the descriptor's source {:?}",
                declared.blocks(),
                implied.blocks()
            )));
        }
    }
    Ok((implied, descriptor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_unitary;
    use num_complex::Complex64;

    fn spec(blocks: &[usize]) -> AlgebraSpec {
        AlgebraSpec::new(blocks.to_vec()).unwrap()
    }

    fn identity_descriptor(n: usize) -> MapDescriptor {
        MapDescriptor::Unitary {
            perm: vec![0],
            unitaries: vec![ComplexMatrix::identity(n)],
        }
    }

    #[test]
    fn identity_oracle_fixes_effects() {
        let cfg = ToleranceConfig::default();
        let m = build_map(&identity_descriptor(3)).unwrap();
        let mut rng = sampling::stream_rng(1, 0);
        let a = sampling::effect_on(m.source(), &mut rng);
        let out = m.apply(&a, &cfg).unwrap();
        assert!(out.as_element().frobenius_dist(a.as_element()) <= 1e-14);
    }

    #[test]
    fn transpose_conjugates_hermitian_entries() {
        let cfg = ToleranceConfig::default();
        let d = MapDescriptor::Transpose {
            perm: vec![0],
            unitaries: vec![ComplexMatrix::identity(2)],
        };
        let m = build_map(&d).unwrap();
        let mut part = ComplexMatrix::zeros(2);
        part[(0, 0)] = Complex64::new(0.5, 0.0);
        part[(1, 1)] = Complex64::new(0.5, 0.0);
        part[(0, 1)] = Complex64::new(0.0, 0.25);
        part[(1, 0)] = Complex64::new(0.0, -0.25);
        let a = Effect::new(
            AlgebraElement::new(spec(&[2]), vec![part.clone()]).unwrap(),
            1e-9,
        )
        .unwrap();
        let out = m.apply(&a, &cfg).unwrap();
        assert!(out.part(0).frobenius_dist(&part.transpose()) <= 1e-15);
        assert_eq!(out.part(0)[(0, 1)], Complex64::new(0.0, -0.25));
    }

    #[test]
    fn power_map_is_pointwise() {
        let cfg = ToleranceConfig::default();
        let d = MapDescriptor::Power {
            exponents: vec![2.0, 0.5],
        };
        let m = build_map(&d).unwrap();
        let x = AlgebraElement::new(
            spec(&[1, 1]),
            vec![
                ComplexMatrix::diagonal(&[0.49]),
                ComplexMatrix::diagonal(&[0.49]),
            ],
        )
        .unwrap();
        let out = m.apply(&Effect::new(x, 1e-9).unwrap(), &cfg).unwrap();
        assert!((out.part(0)[(0, 0)].re - 0.2401).abs() <= 1e-15);
        assert!((out.part(1)[(0, 0)].re - 0.7).abs() <= 1e-15);
    }

    #[test]
    fn built_oracles_fix_zero_and_identity() {
        let cfg = ToleranceConfig::default();
        let u = random_unitary(3, 5);
        let descriptors = vec![
            MapDescriptor::Unitary {
                perm: vec![0],
                unitaries: vec![u.clone()],
            },
            MapDescriptor::Transpose {
                perm: vec![0],
                unitaries: vec![u],
            },
        ];
        for d in descriptors {
            let m = build_map(&d).unwrap();
            let z = m.apply(&Effect::zero(m.source()), &cfg).unwrap();
            assert!(z.as_element().frobenius_norm() <= 1e-12);
            let i = m.apply(&Effect::identity(m.source()), &cfg).unwrap();
            assert!(
                i.as_element()
                    .frobenius_dist(&AlgebraElement::identity(m.target()))
                    <= 1e-12
            );
        }
    }

    #[test]
    fn unitary_conjugation_preserves_spectra() {
        let cfg = ToleranceConfig::default();
        let d = MapDescriptor::Unitary {
            perm: vec![0],
            unitaries: vec![random_unitary(4, 17)],
        };
        let m = build_map(&d).unwrap();
        let mut rng = sampling::stream_rng(2, 0);
        let a = sampling::effect_on(m.source(), &mut rng);
        let out = m.apply(&a, &cfg).unwrap();
        let before = herm_eig(a.part(0), 1e-9).unwrap().eigenvalues;
        let after = herm_eig(out.part(0), 1e-9).unwrap().eigenvalues;
        for (x, y) in before.iter().zip(&after) {
            assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn block_permutation_moves_blocks() {
        let cfg = ToleranceConfig::default();
        let d = MapDescriptor::Unitary {
            perm: vec![1, 0],
            unitaries: vec![ComplexMatrix::identity(2), ComplexMatrix::identity(2)],
        };
        let m = build_map(&d).unwrap();
        let mut x = AlgebraElement::zero(&spec(&[2, 2]));
        x.part_mut(0)[(0, 0)] = Complex64::new(0.75, 0.0);
        let out = m.apply(&Effect::new(x, 1e-9).unwrap(), &cfg).unwrap();
        assert_eq!(out.part(1)[(0, 0)].re, 0.75);
        assert!(out.part(0).frobenius_norm() <= 1e-15);
    }

    #[test]
    fn inverse_compositions_give_identity() {
        let cfg = ToleranceConfig::default();
        let u = random_unitary(3, 23);
        let fwd = build_map(&MapDescriptor::Unitary {
            perm: vec![0],
            unitaries: vec![u.clone()],
        })
        .unwrap();
        let bwd = build_map(&MapDescriptor::Unitary {
            perm: vec![0],
            unitaries: vec![u.adjoint()],
        })
        .unwrap();
        let composed = combine_maps(CombineKind::Compose, vec![bwd, fwd]).unwrap();
        let mut rng = sampling::stream_rng(6, 0);
        let a = sampling::effect_on(composed.source(), &mut rng);
        let out = composed.apply(&a, &cfg).unwrap();
        assert!(out.as_element().frobenius_dist(a.as_element()) <= 1e-10);

        let p = build_map(&MapDescriptor::Power {
            exponents: vec![2.0, 0.5],
        })
        .unwrap();
        let pinv = build_map(&MapDescriptor::Power {
            exponents: vec![0.5, 2.0],
        })
        .unwrap();
        let composed = combine_maps(CombineKind::Compose, vec![pinv, p]).unwrap();
        let a = sampling::effect_on(composed.source(), &mut rng);
        let out = composed.apply(&a, &cfg).unwrap();
        assert!(out.as_element().frobenius_dist(a.as_element()) <= 1e-10);
    }

    #[test]
    fn direct_sum_of_identities_is_identity() {
        let cfg = ToleranceConfig::default();
        let parts = vec![
            build_map(&identity_descriptor(2)).unwrap(),
            build_map(&identity_descriptor(3)).unwrap(),
        ];
        let m = combine_maps(CombineKind::DirectSum, parts).unwrap();
        assert_eq!(m.source().blocks(), &[2, 3]);
        let mut rng = sampling::stream_rng(7, 0);
        let a = sampling::effect_on(m.source(), &mut rng);
        let out = m.apply(&a, &cfg).unwrap();
        assert!(out.as_element().frobenius_dist(a.as_element()) <= 1e-14);
        assert!(m.descriptor().is_some());
    }

    #[test]
    fn sequential_axiom_sampler() {
        let cfg = ToleranceConfig {
            trials: 50,
            ..Default::default()
        };
        let m = build_map(&MapDescriptor::Unitary {
            perm: vec![0],
            unitaries: vec![random_unitary(3, 31)],
        })
        .unwrap();
        let report = sample_sequential_axiom(&m, &cfg).unwrap();
        assert!(report.max_residual <= 1e-9, "{}", report.max_residual);

        let p = build_map(&MapDescriptor::Power {
            exponents: vec![2.0, 0.5],
        })
        .unwrap();
        let report = sample_sequential_axiom(&p, &cfg).unwrap();
        assert!(report.max_residual <= 1e-9, "{}", report.max_residual);

        // Corrupted oracle: shift by 0.05·I and clamp back into the interval.
        let s = spec(&[2]);
        let s2 = s.clone();
        let corrupted = SequentialMapOracle::from_fn(s.clone(), s, move |a| {
            let shifted = a
                .as_element()
                .add(&AlgebraElement::identity(&s2).scale(0.05));
            shifted
                .try_map_parts(|p| {
                    let eig = herm_eig(p, 1e-8)?;
                    Ok(eig.rebuild_with(|l| l.clamp(0.0, 1.0)))
                })
                .unwrap()
        });
        let report = sample_sequential_axiom(&corrupted, &cfg).unwrap();
        assert!(report.max_residual > 1e-3, "{}", report.max_residual);
        assert!(report.worst.is_some());
    }

    #[test]
    fn oracle_range_violations_are_reported() {
        let cfg = ToleranceConfig::default();
        let s = spec(&[2]);
        let s2 = s.clone();
        let broken = SequentialMapOracle::from_fn(s.clone(), s, move |_| {
            AlgebraElement::identity(&s2).scale(1.5)
        });
        let err = broken
            .apply(&Effect::identity(broken.source()), &cfg)
            .unwrap_err();
        assert!(matches!(err, Error::OracleRangeError { .. }));
    }

    #[test]
    fn descriptor_validation_catches_bad_inputs() {
        let bad_perm = MapDescriptor::Unitary {
            perm: vec![0, 0],
            unitaries: vec![ComplexMatrix::identity(2), ComplexMatrix::identity(2)],
        };
        assert!(matches!(
            build_map(&bad_perm),
            Err(Error::DescriptorInvalid(_))
        ));

        let skewed = ComplexMatrix::from_real_rows(&[&[1.0, 0.1], &[0.0, 1.0]]).unwrap();
        let bad_unitary = MapDescriptor::Unitary {
            perm: vec![0],
            unitaries: vec![skewed],
        };
        assert!(matches!(
            build_map(&bad_unitary),
            Err(Error::DescriptorInvalid(_))
        ));

        let bad_exponent = MapDescriptor::Power {
            exponents: vec![-1.0],
        };
        assert!(matches!(
            build_map(&bad_exponent),
            Err(Error::DescriptorInvalid(_))
        ));
    }

    #[test]
    fn descriptor_json_round_trip() {
        let d = MapDescriptor::DirectSum {
            parts: vec![
                DirectSumPart {
                    source_blocks: vec![0, 1],
                    target_blocks: vec![0, 1],
                    map: MapDescriptor::Power {
                        exponents: vec![0.5, 2.0],
                    },
                },
                DirectSumPart {
                    source_blocks: vec![2],
                    target_blocks: vec![2],
                    map: MapDescriptor::Transpose {
                        perm: vec![0],
                        unitaries: vec![random_unitary(2, 3)],
                    },
                },
            ],
        };
        let json = serde_json::to_string_pretty(&d).unwrap();
        assert!(json.contains("\"kind\": \"direct_sum\""));
        let (s, back) = parse_descriptor_json(&json).unwrap();
        assert_eq!(s.blocks(), &[1, 1, 2]);
        assert_eq!(back, d);
    }

    #[test]
    fn parse_rejects_schema_and_invariant_errors() {
        assert!(matches!(
            parse_descriptor_json("{"),
            Err(Error::SchemaError(_))
        ));
        assert!(matches!(
            parse_descriptor_json(r#"{"kind":"power","exponents":[-1.0]}"#),
            Err(Error::InvariantError(_))
        ));
        let (s, _) = parse_descriptor_json(r#"{"kind":"power","exponents":[1.0]}"#).unwrap();
        assert_eq!(s.blocks(), &[1]);
    }
}
