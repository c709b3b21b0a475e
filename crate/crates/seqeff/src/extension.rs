//! Constructive engines behind the analyzer: extend an effect-level oracle
//! to a full linear map, recover the normal form of a commutative oracle,
//! and split a Jordan map into multiplicative and antimultiplicative blocks
//! with explicit unitaries.
//!
//! The linear extension follows a three-stage pipeline: positive elements are
//! handled by norm-scaling the oracle, self-adjoint elements by splitting
//! into positive and negative parts, and general elements by real/imaginary
//! decomposition. Since the oracle is only defined on effects, basis elements
//! are probed through the affine shift `S ↦ (S + ‖S‖I)/(2‖S‖)` and the shift
//! is inverted after evaluation; additivity and homogeneity diagnostics
//! certify that the inversion was legitimate.

use serde::Serialize;

use crate::algebra::{
    center_projections, matrix_units, AlgebraElement, AlgebraSpec, Effect, ToleranceConfig,
};
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, ComplexMatrix};
use crate::morphisms::SequentialMapOracle;
use crate::sampling;
use num_complex::Complex64;

/// Stream-id offsets so the diagnostic samplers draw independent streams.
const STREAM_ADDITIVITY: u64 = 1 << 20;
const STREAM_HOMOGENEITY: u64 = 2 << 20;
const STREAM_ORDER: u64 = 3 << 20;
const STREAM_JORDAN: u64 = 4 << 20;

/// Residuals gathered while assembling and checking a linear extension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtensionDiagnostics {
    /// Worst `‖φ(A+B) − φ(A) − φ(B)‖_F` over sampled summable pairs.
    pub additivity_residual: f64,
    /// Worst `‖φ(λA) − λφ(A)‖_F` over sampled effects and the λ grid.
    pub homogeneity_residual: f64,
    /// Sampled comparable pairs whose images fail to stay ordered.
    pub order_violations: usize,
    /// Worst `‖Φ(H²) − Φ(H)²‖_F` over sampled self-adjoint contractions.
    pub jordan_residual: f64,
}

/// Real-linear operator on the self-adjoint coordinate space, extended
/// complex-linearly, together with its certification diagnostics.
#[derive(Debug, Clone)]
pub struct LinearExtension {
    source: AlgebraSpec,
    target: AlgebraSpec,
    /// Row-major `dim × dim` matrix over the self-adjoint coordinates.
    matrix: Vec<f64>,
    dim: usize,
    pub diagnostics: ExtensionDiagnostics,
}

// --- self-adjoint coordinates ---------------------------------------------
//
// Per block of size n the basis is: the diagonal units E_jj, then for j < k
// the pair (E_jk + E_kj)/2 and i(E_kj − E_jk)/2. Coordinates of a Hermitian
// S are d_j = Re S_jj, a_jk = 2 Re S_jk, b_jk = −2 Im S_jk.

pub(crate) fn sa_dim(spec: &AlgebraSpec) -> usize {
    spec.linear_dim()
}

pub(crate) fn sa_coords(x: &AlgebraElement) -> Vec<f64> {
    let mut out = Vec::with_capacity(sa_dim(x.spec()));
    for part in x.parts() {
        let n = part.dim();
        for j in 0..n {
            out.push(part[(j, j)].re);
        }
        for j in 0..n {
            for k in (j + 1)..n {
                out.push(2.0 * part[(j, k)].re);
                out.push(-2.0 * part[(j, k)].im);
            }
        }
    }
    out
}

pub(crate) fn sa_from_coords(spec: &AlgebraSpec, coords: &[f64]) -> AlgebraElement {
    let mut out = AlgebraElement::zero(spec);
    let mut idx = 0;
    for b in 0..spec.block_count() {
        let n = spec.block_size(b);
        let part = out.part_mut(b);
        for j in 0..n {
            part[(j, j)] = Complex64::new(coords[idx], 0.0);
            idx += 1;
        }
        for j in 0..n {
            for k in (j + 1)..n {
                let a = coords[idx];
                let bb = coords[idx + 1];
                idx += 2;
                part[(j, k)] = Complex64::new(a / 2.0, -bb / 2.0);
                part[(k, j)] = Complex64::new(a / 2.0, bb / 2.0);
            }
        }
    }
    out
}

/// The `idx`-th basis element together with its operator norm (1 for the
/// diagonal units, 1/2 for the symmetrized off-diagonal pairs).
fn sa_basis_element(spec: &AlgebraSpec, idx: usize) -> (AlgebraElement, f64) {
    let mut coords = vec![0.0; sa_dim(spec)];
    coords[idx] = 1.0;
    let elem = sa_from_coords(spec, &coords);
    let mut pos = 0;
    for b in 0..spec.block_count() {
        let n = spec.block_size(b);
        if idx < pos + n {
            return (elem, 1.0);
        }
        pos += n * n;
        if idx < pos {
            return (elem, 0.5);
        }
    }
    unreachable!("basis index out of range")
}

impl LinearExtension {
    pub fn source(&self) -> &AlgebraSpec {
        &self.source
    }

    pub fn target(&self) -> &AlgebraSpec {
        &self.target
    }

    pub fn coordinate_dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    fn apply_coords(&self, coords: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for (r, slot) in out.iter_mut().enumerate() {
            let row = &self.matrix[r * d..(r + 1) * d];
            *slot = row.iter().zip(coords).map(|(m, c)| m * c).sum();
        }
        out
    }

    /// Complex-linear action on an arbitrary element via the real/imaginary
    /// split `x = H₁ + iH₂`.
    pub fn apply_element(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        if x.spec() != &self.source {
            return Err(Error::SpecMismatch {
                context: format!(
                    "element on {:?}, extension source {:?}",
                    x.spec().blocks(),
                    self.source.blocks()
                ),
            });
        }
        let h1 = x.hermitian_part();
        let h2 = x.sub(&x.adjoint()).scale_c(Complex64::new(0.0, -0.5));
        let img1 = sa_from_coords(&self.target, &self.apply_coords(&sa_coords(&h1)));
        let img2 = sa_from_coords(&self.target, &self.apply_coords(&sa_coords(&h2)));
        Ok(img1.add(&img2.scale_c(Complex64::I)))
    }
}

/// Assembles the linear extension of an effect-level oracle and certifies it
/// with sampled additivity, homogeneity, order, and Jordan diagnostics.
///
/// Fails with [`Error::NotEIsomorphism`] when the additivity residual
/// exceeds `100·cfg.eq_tol`, which is how non-extendable sequential
/// automorphisms (power maps with exponent ≠ 1) announce themselves.
pub fn extend_to_linear(m: &SequentialMapOracle, cfg: &ToleranceConfig) -> Result<LinearExtension> {
    let source = m.source().clone();
    let target = m.target().clone();
    if sa_dim(&source) != sa_dim(&target) {
        return Err(Error::SpecMismatch {
            context: "source and target have different linear dimension".into(),
        });
    }
    let d = sa_dim(&source);

    let phi_id = m.apply(&Effect::identity(&source), cfg)?.into_element();

    let mut matrix = vec![0.0; d * d];
    for c in 0..d {
        let (s, opn) = sa_basis_element(&source, c);
        // Affine shift into the effect interval and its inverse.
        let probe = Effect::new_unchecked(
            s.scale(1.0 / (2.0 * opn))
                .add(&AlgebraElement::identity(&source).scale(0.5)),
        );
        let image = m.apply(&probe, cfg)?.into_element();
        let psi = image
            .scale(2.0 * opn)
            .sub(&phi_id.scale(opn))
            .hermitian_part();
        for (r, v) in sa_coords(&psi).into_iter().enumerate() {
            matrix[r * d + c] = v;
        }
    }

    let mut ext = LinearExtension {
        source: source.clone(),
        target,
        matrix,
        dim: d,
        diagnostics: ExtensionDiagnostics {
            additivity_residual: 0.0,
            homogeneity_residual: 0.0,
            order_violations: 0,
            jordan_residual: 0.0,
        },
    };

    let mut additivity = 0.0f64;
    for t in 0..cfg.trials {
        let mut rng = sampling::stream_rng(cfg.seed, STREAM_ADDITIVITY + t as u64);
        let (a, b) = sampling::summable_pair(&source, &mut rng);
        let sum = Effect::new_unchecked(a.as_element().add(b.as_element()));
        let lhs = m.apply(&sum, cfg)?.into_element();
        let rhs = m
            .apply(&a, cfg)?
            .into_element()
            .add(m.apply(&b, cfg)?.as_element());
        additivity = additivity.max(lhs.frobenius_dist(&rhs));
    }

    let mut homogeneity = 0.0f64;
    let homog_trials = cfg.trials.div_ceil(9).max(1);
    for t in 0..homog_trials {
        let mut rng = sampling::stream_rng(cfg.seed, STREAM_HOMOGENEITY + t as u64);
        let a = sampling::effect_on(&source, &mut rng);
        let fa = m.apply(&a, cfg)?.into_element();
        for step in 1..=9 {
            let lambda = step as f64 / 10.0;
            let scaled = Effect::new_unchecked(a.as_element().scale(lambda));
            let lhs = m.apply(&scaled, cfg)?.into_element();
            homogeneity = homogeneity.max(lhs.frobenius_dist(&fa.scale(lambda)));
        }
    }

    let order_tol = 100.0 * cfg.psd_tol;
    let mut order_violations = 0usize;
    for t in 0..cfg.trials {
        let mut rng = sampling::stream_rng(cfg.seed, STREAM_ORDER + t as u64);
        let (a, b) = sampling::comparable_pair(&source, &mut rng);
        let fa = m.apply(&a, cfg)?.into_element();
        let fb = m.apply(&b, cfg)?.into_element();
        let diff = fb.sub(&fa);
        for part in diff.parts() {
            let eig = herm_eig(&part.hermitian_part(), 1e-6)?;
            if eig.eigenvalues.first().copied().unwrap_or(0.0) < -order_tol {
                order_violations += 1;
                break;
            }
        }
    }

    let mut jordan = 0.0f64;
    for t in 0..cfg.trials {
        let mut rng = sampling::stream_rng(cfg.seed, STREAM_JORDAN + t as u64);
        let e = sampling::effect_on(&source, &mut rng);
        let h = e
            .as_element()
            .scale(2.0)
            .sub(&AlgebraElement::identity(&source));
        let lhs = ext.apply_element(&h.mul(&h))?;
        let img = ext.apply_element(&h)?;
        jordan = jordan.max(lhs.frobenius_dist(&img.mul(&img)));
    }

    ext.diagnostics = ExtensionDiagnostics {
        additivity_residual: additivity,
        homogeneity_residual: homogeneity,
        order_violations,
        jordan_residual: jordan,
    };

    if additivity > 100.0 * cfg.eq_tol {
        return Err(Error::NotEIsomorphism {
            residual: additivity,
        });
    }
    Ok(ext)
}

/// Normal form of a commutative sequential isomorphism: a coordinate
/// permutation and positive exponents, with the worst deviation of the
/// oracle from the recovered form over a probe grid.
///
/// `perm[j]` is the source coordinate feeding target coordinate `j`, and
/// `exponents[j]` is applied there: `φ(f)_j = f_{perm[j]}^{exponents[j]}`.
#[derive(Debug, Clone, Serialize)]
pub struct CommutativeRecovery {
    #[serde(serialize_with = "crate::morphisms::serialize_one_based")]
    pub perm: Vec<usize>,
    pub exponents: Vec<f64>,
    pub residual: f64,
}

fn comm_values(e: &Effect) -> Vec<f64> {
    e.as_element()
        .parts()
        .iter()
        .map(|p| p[(0, 0)].re)
        .collect()
}

fn comm_effect(spec: &AlgebraSpec, values: &[f64]) -> Effect {
    let mut e = AlgebraElement::zero(spec);
    for (i, &v) in values.iter().enumerate() {
        e.part_mut(i)[(0, 0)] = Complex64::new(v, 0.0);
    }
    Effect::new_unchecked(e)
}

/// Probes a commutative oracle with indicator-supported effects and reads
/// off the permutation and the exponents, cross-validating each exponent at
/// a second probe level.
pub fn commutative_recover(
    m: &SequentialMapOracle,
    cfg: &ToleranceConfig,
) -> Result<CommutativeRecovery> {
    let source = m.source().clone();
    let target = m.target().clone();
    if !source.is_commutative() || !target.is_commutative() {
        return Err(Error::NotCommutativeSpec {
            context: format!("source {:?}, target {:?}", source.blocks(), target.blocks()),
        });
    }
    let k = source.block_count();
    if target.block_count() != k {
        return Err(Error::NotCommutativeSpec {
            context: "source and target block counts differ".into(),
        });
    }

    let probe_at = |i: usize, v: f64| -> Vec<f64> {
        let mut vals = vec![1.0; k];
        vals[i] = v;
        vals
    };

    let mut perm = vec![usize::MAX; k];
    let mut exponents = vec![0.0; k];
    for i in 0..k {
        let g = comm_values(&m.apply(&comm_effect(&source, &probe_at(i, 0.5)), cfg)?);
        let moved: Vec<usize> = (0..k).filter(|&j| (g[j] - 1.0).abs() > 1e-6).collect();
        let j = match moved.as_slice() {
            [j] => *j,
            [] => {
                return Err(Error::RecoveryFailed(format!(
                    "probe at coordinate {} moved no target coordinate",
                    i + 1
                )))
            }
            _ => {
                return Err(Error::RecoveryFailed(format!(
                    "probe at coordinate {} moved {} target coordinates",
                    i + 1,
                    moved.len()
                )))
            }
        };
        if perm[j] != usize::MAX {
            return Err(Error::RecoveryFailed(format!(
                "target coordinate {} is hit by two probes",
                j + 1
            )));
        }
        if g[j] <= 0.0 || g[j] >= 1.0 {
            return Err(Error::RecoveryFailed(format!(
                "probe image {:.6e} outside (0, 1)",
                g[j]
            )));
        }
        let p = g[j].ln() / 0.5f64.ln();

        // Cross-validate at a second probe level to reject non-power maps.
        let g2 = comm_values(&m.apply(&comm_effect(&source, &probe_at(i, 0.25)), cfg)?);
        if g2[j] <= 0.0 || g2[j] >= 1.0 {
            return Err(Error::RecoveryFailed(format!(
                "second probe image {:.6e} outside (0, 1)",
                g2[j]
            )));
        }
        let p2 = g2[j].ln() / 0.25f64.ln();
        if (p - p2).abs() > 1e-6 {
            return Err(Error::RecoveryFailed(format!(
                "exponent estimates disagree: {p:.9} vs {p2:.9}"
            )));
        }
        perm[j] = i;
        exponents[j] = p;
    }

    // Low-discrepancy grid of strictly positive probe effects.
    let mut residual = 0.0f64;
    for g in 0..100 {
        let vals: Vec<f64> = (0..k)
            .map(|i| {
                let x = (g as f64 + 1.0) * 0.618_033_988_749_895 + i as f64 * 0.414_213_562_373_095;
                0.02 + 0.96 * x.fract()
            })
            .collect();
        let img = comm_values(&m.apply(&comm_effect(&source, &vals), cfg)?);
        for j in 0..k {
            let expect = vals[perm[j]].powf(exponents[j]);
            residual = residual.max((img[j] - expect).abs());
        }
    }

    Ok(CommutativeRecovery {
        perm,
        exponents,
        residual,
    })
}

/// Per-block behavior of a split Jordan map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Scalar,
    Multiplicative,
    Antimultiplicative,
}

/// A Jordan map split into blockwise normal forms: for each source block its
/// target block, its kind, and a phase-normalized unitary realizing
/// `X ↦ UXUᴴ` (multiplicative) or `X ↦ UXᵀUᴴ` (antimultiplicative).
#[derive(Debug, Clone, Serialize)]
pub struct JordanSplit {
    #[serde(serialize_with = "crate::morphisms::serialize_one_based")]
    pub correspondence: Vec<usize>,
    pub kinds: Vec<BlockKind>,
    pub unitaries: Vec<ComplexMatrix>,
    pub residual: f64,
}

const KIND_PASS_TOL: f64 = 1e-6;
const KIND_FAIL_TOL: f64 = 1e-3;
const UNITARY_RECOVERY_TOL: f64 = 1e-9;
const CORRESPONDENCE_TOL: f64 = 1e-6;

/// Splits a certified linear extension into multiplicative and
/// antimultiplicative blocks and recovers the conjugating unitaries by the
/// matrix-unit method.
pub fn split_jordan(phi: &LinearExtension, _cfg: &ToleranceConfig) -> Result<JordanSplit> {
    if phi.diagnostics.jordan_residual > 1e-7 {
        return Err(Error::NotJordan(format!(
            "jordan residual {:.3e} exceeds 1e-7",
            phi.diagnostics.jordan_residual
        )));
    }
    let source = phi.source().clone();
    let target = phi.target().clone();
    let k_src = source.block_count();
    let k_tgt = target.block_count();

    // Block correspondence from the images of the minimal central projections.
    let mut correspondence = vec![usize::MAX; k_src];
    let mut hit = vec![false; k_tgt];
    let mut residual = 0.0f64;
    for (b, c) in center_projections(&source).iter().enumerate() {
        let image = phi.apply_element(c.as_element())?;
        let mut matched = None;
        for j in 0..k_tgt {
            let part = image.part(j);
            let d_id = part.frobenius_dist(&ComplexMatrix::identity(part.dim()));
            let d_zero = part.frobenius_norm();
            if d_id <= CORRESPONDENCE_TOL {
                if matched.is_some() {
                    return Err(Error::NotJordan(format!(
                        "central projection {} maps onto several blocks",
                        b + 1
                    )));
                }
                matched = Some(j);
                residual = residual.max(d_id);
            } else if d_zero > CORRESPONDENCE_TOL {
                return Err(Error::NotJordan(format!(
                    "image of central projection {} is not a minimal central projection \
                     (block {} has mass {d_zero:.3e})",
                    b + 1,
                    j + 1
                )));
            } else {
                residual = residual.max(d_zero);
            }
        }
        let j = matched.ok_or_else(|| {
            Error::NotJordan(format!(
                "central projection {} has no identity block in its image",
                b + 1
            ))
        })?;
        if hit[j] {
            return Err(Error::NotJordan(format!(
                "target block {} matched twice",
                j + 1
            )));
        }
        if target.block_size(j) != source.block_size(b) {
            return Err(Error::NotJordan(format!(
                "block {} (size {}) maps to block {} (size {})",
                b + 1,
                source.block_size(b),
                j + 1,
                target.block_size(j)
            )));
        }
        hit[j] = true;
        correspondence[b] = j;
    }

    let mut kinds = Vec::with_capacity(k_src);
    let mut unitaries = Vec::with_capacity(k_src);
    for (b, &j) in correspondence.iter().enumerate() {
        let n = source.block_size(b);
        if n == 1 {
            kinds.push(BlockKind::Scalar);
            unitaries.push(ComplexMatrix::identity(1));
            continue;
        }
        let units = matrix_units(&source, b)?;
        let img_e00 = phi.apply_element(units.unit(0, 0))?;
        let img_e01 = phi.apply_element(units.unit(0, 1))?;

        // E00·E01 = E01 and E01·E00 = 0 separate the two product orders.
        let forward = img_e01.frobenius_dist(&img_e00.mul(&img_e01));
        let reversed = img_e01.frobenius_dist(&img_e01.mul(&img_e00));
        let kind = if forward < KIND_PASS_TOL && reversed > KIND_FAIL_TOL {
            BlockKind::Multiplicative
        } else if reversed < KIND_PASS_TOL && forward > KIND_FAIL_TOL {
            BlockKind::Antimultiplicative
        } else {
            return Err(Error::AmbiguousKind {
                block: b + 1,
                forward,
                reversed,
            });
        };

        // Matrix-unit reconstruction: w spans the range of Φ(E₁₁); the
        // columns are Φ(E_{j1})·w (transposed units for the anti kind).
        let p1 = img_e00.part(j).hermitian_part();
        let eig = herm_eig(&p1, 1e-6)?;
        let top = *eig.eigenvalues.last().unwrap();
        if (top - 1.0).abs() > 1e-4 {
            return Err(Error::NotJordan(format!(
                "image of a rank-one unit in block {} has top eigenvalue {top:.6}",
                b + 1
            )));
        }
        let w = eig.basis.column(n - 1);
        let mut u = ComplexMatrix::zeros(n);
        for col in 0..n {
            let src_unit = match kind {
                BlockKind::Multiplicative => units.unit(col, 0),
                BlockKind::Antimultiplicative => units.unit(0, col),
                BlockKind::Scalar => unreachable!(),
            };
            let img = phi.apply_element(src_unit)?;
            let v = img.part(j).matvec(&w);
            for r in 0..n {
                u[(r, col)] = v[r];
            }
        }
        if let Some(r) = (0..n).find(|&r| u[(r, 0)].norm() > 1e-8) {
            let pivot = u[(r, 0)];
            u = u.scale_c(pivot.conj() / pivot.norm());
        }
        let defect = u
            .adjoint()
            .mul(&u)
            .frobenius_dist(&ComplexMatrix::identity(n));
        if defect > UNITARY_RECOVERY_TOL {
            return Err(Error::NotJordan(format!(
                "recovered matrix for block {} deviates from unitarity by {defect:.3e}",
                b + 1
            )));
        }
        kinds.push(kind);
        unitaries.push(u);
    }

    // Exact check on a full basis: a linear map is pinned down by its action
    // on the basis, so this certifies the normal form everywhere.
    let mut pos = 0usize;
    for b in 0..k_src {
        let n = source.block_size(b);
        let j = correspondence[b];
        let u = &unitaries[b];
        for local in 0..n * n {
            let (s, _) = sa_basis_element(&source, pos + local);
            let img = phi.apply_element(&s)?;
            let sb = s.part(b);
            let nf_part = match kinds[b] {
                BlockKind::Scalar => sb.clone(),
                BlockKind::Multiplicative => u.mul(sb).mul(&u.adjoint()),
                BlockKind::Antimultiplicative => u.mul(&sb.transpose()).mul(&u.adjoint()),
            };
            let mut expected = AlgebraElement::zero(&target);
            *expected.part_mut(j) = nf_part;
            residual = residual.max(img.frobenius_dist(&expected));
        }
        pos += n * n;
    }

    Ok(JordanSplit {
        correspondence,
        kinds,
        unitaries,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_unitary;
    use crate::morphisms::{build_map, MapDescriptor};

    fn spec(blocks: &[usize]) -> AlgebraSpec {
        AlgebraSpec::new(blocks.to_vec()).unwrap()
    }

    fn quick_cfg(seed: u64) -> ToleranceConfig {
        ToleranceConfig {
            trials: 60,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn sa_coords_round_trip() {
        let s = spec(&[2, 3]);
        let mut rng = sampling::stream_rng(1, 0);
        for _ in 0..5 {
            let h = sampling::effect_on(&s, &mut rng).into_element();
            let coords = sa_coords(&h);
            assert_eq!(coords.len(), 13);
            let back = sa_from_coords(&s, &coords);
            assert!(back.frobenius_dist(&h) <= 1e-14);
        }
    }

    #[test]
    fn transpose_extension_is_the_transpose_operator() {
        let cfg = quick_cfg(3);
        let m = build_map(&MapDescriptor::Transpose {
            perm: vec![0],
            unitaries: vec![ComplexMatrix::identity(2)],
        })
        .unwrap();
        let ext = extend_to_linear(&m, &cfg).unwrap();
        assert!(ext.diagnostics.jordan_residual <= 1e-10);
        assert!(ext.diagnostics.additivity_residual <= 1e-10);
        assert_eq!(ext.diagnostics.order_violations, 0);

        let mut rng = sampling::stream_rng(5, 0);
        for _ in 0..10 {
            let x = sampling::effect_on(m.source(), &mut rng).into_element();
            let out = ext.apply_element(&x).unwrap();
            assert!(out.part(0).frobenius_dist(&x.part(0).transpose()) <= 1e-10);
        }
        // Unital.
        let id = AlgebraElement::identity(m.source());
        assert!(ext.apply_element(&id).unwrap().frobenius_dist(&id) <= 1e-9);
    }

    #[test]
    fn extension_matches_oracle_on_fresh_effects() {
        let cfg = quick_cfg(11);
        let m = build_map(&MapDescriptor::Unitary {
            perm: vec![0, 1],
            unitaries: vec![random_unitary(2, 8), random_unitary(3, 9)],
        })
        .unwrap();
        let ext = extend_to_linear(&m, &cfg).unwrap();
        let mut rng = sampling::stream_rng(77, 0);
        for _ in 0..50 {
            let a = sampling::effect_on(m.source(), &mut rng);
            let via_ext = ext.apply_element(a.as_element()).unwrap();
            let via_oracle = m.apply(&a, &cfg).unwrap();
            assert!(via_ext.frobenius_dist(via_oracle.as_element()) <= 1e-8);
        }
    }

    #[test]
    fn antiisomorphism_extension_reverses_products() {
        let cfg = quick_cfg(13);
        let m = build_map(&MapDescriptor::Transpose {
            perm: vec![0],
            unitaries: vec![random_unitary(3, 21)],
        })
        .unwrap();
        let ext = extend_to_linear(&m, &cfg).unwrap();
        let mut rng = sampling::stream_rng(6, 0);
        for _ in 0..10 {
            let a = sampling::effect_on(m.source(), &mut rng).into_element();
            let b = sampling::effect_on(m.source(), &mut rng).into_element();
            let lhs = ext.apply_element(&a.mul(&b)).unwrap();
            let rhs = ext
                .apply_element(&b)
                .unwrap()
                .mul(&ext.apply_element(&a).unwrap());
            assert!(lhs.frobenius_dist(&rhs) <= 1e-10);
        }
    }

    #[test]
    fn power_map_is_not_an_e_isomorphism() {
        let cfg = quick_cfg(17);
        let m = build_map(&MapDescriptor::Power {
            exponents: vec![2.0],
        })
        .unwrap();
        let err = extend_to_linear(&m, &cfg).unwrap_err();
        match err {
            Error::NotEIsomorphism { residual } => assert!(residual > 1e-3),
            other => panic!("expected NotEIsomorphism, got {other:?}"),
        }
    }

    #[test]
    fn commutative_recovery_worked_example() {
        let cfg = quick_cfg(19);
        // x ↦ (x₂^0.5, x₁, x₃²)
        let s = spec(&[1, 1, 1]);
        let m = SequentialMapOracle::from_fn(s.clone(), s.clone(), move |a| {
            let v = comm_values(a);
            comm_effect(
                &AlgebraSpec::new(vec![1, 1, 1]).unwrap(),
                &[v[1].sqrt(), v[0], v[2] * v[2]],
            )
            .into_element()
        });
        let rec = commutative_recover(&m, &cfg).unwrap();
        assert_eq!(rec.perm, vec![1, 0, 2]);
        assert!((rec.exponents[0] - 0.5).abs() <= 1e-9);
        assert!((rec.exponents[1] - 1.0).abs() <= 1e-9);
        assert!((rec.exponents[2] - 2.0).abs() <= 1e-9);
        assert!(rec.residual <= 1e-9);
    }

    #[test]
    fn commutative_recovery_of_identity() {
        let cfg = quick_cfg(23);
        let m = build_map(&MapDescriptor::Power {
            exponents: vec![1.0, 1.0],
        })
        .unwrap();
        let rec = commutative_recover(&m, &cfg).unwrap();
        assert_eq!(rec.perm, vec![0, 1]);
        assert!(rec.exponents.iter().all(|&p| (p - 1.0).abs() <= 1e-12));
    }

    #[test]
    fn commutative_recovery_rejects_noncommutative_specs() {
        let cfg = quick_cfg(29);
        let m = build_map(&MapDescriptor::Unitary {
            perm: vec![0],
            unitaries: vec![ComplexMatrix::identity(2)],
        })
        .unwrap();
        assert!(matches!(
            commutative_recover(&m, &cfg),
            Err(Error::NotCommutativeSpec { .. })
        ));
    }

    #[test]
    fn commutative_recovery_rejects_non_power_oracles() {
        let cfg = quick_cfg(31);
        let s = spec(&[1]);
        // Multiplicative-looking but not a power map: logistic-style warp.
        let m = SequentialMapOracle::from_fn(s.clone(), s.clone(), move |a| {
            let v = comm_values(a);
            comm_effect(
                &AlgebraSpec::new(vec![1]).unwrap(),
                &[v[0] * (2.0 - v[0]).min(1.0) * 0.9],
            )
            .into_element()
        });
        assert!(matches!(
            commutative_recover(&m, &cfg),
            Err(Error::RecoveryFailed(_))
        ));
    }

    #[test]
    fn split_recovers_pauli_x_conjugation() {
        let cfg = quick_cfg(37);
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let m = build_map(&MapDescriptor::Unitary {
            perm: vec![0],
            unitaries: vec![x.clone()],
        })
        .unwrap();
        let ext = extend_to_linear(&m, &cfg).unwrap();
        let split = split_jordan(&ext, &cfg).unwrap();
        assert_eq!(split.kinds, vec![BlockKind::Multiplicative]);
        assert!(split.unitaries[0].frobenius_dist(&x) <= 1e-10);
        assert!(split.residual <= 1e-10);
    }

    #[test]
    fn split_recovers_transpose_normal_form() {
        let cfg = quick_cfg(41);
        let m = build_map(&MapDescriptor::Transpose {
            perm: vec![0],
            unitaries: vec![ComplexMatrix::identity(2)],
        })
        .unwrap();
        let ext = extend_to_linear(&m, &cfg).unwrap();
        let split = split_jordan(&ext, &cfg).unwrap();
        assert_eq!(split.kinds, vec![BlockKind::Antimultiplicative]);
        assert!(split.unitaries[0].frobenius_dist(&ComplexMatrix::identity(2)) <= 1e-10);
    }

    #[test]
    fn split_of_identity_extension() {
        let cfg = quick_cfg(43);
        let m = build_map(&MapDescriptor::Unitary {
            perm: vec![0, 1],
            unitaries: vec![ComplexMatrix::identity(2), ComplexMatrix::identity(2)],
        })
        .unwrap();
        let ext = extend_to_linear(&m, &cfg).unwrap();
        let split = split_jordan(&ext, &cfg).unwrap();
        assert_eq!(split.correspondence, vec![0, 1]);
        assert_eq!(
            split.kinds,
            vec![BlockKind::Multiplicative, BlockKind::Multiplicative]
        );
        for u in &split.unitaries {
            assert!(u.frobenius_dist(&ComplexMatrix::identity(2)) <= 1e-10);
        }
    }

    #[test]
    fn split_handles_block_swap() {
        let cfg = quick_cfg(47);
        let u0 = random_unitary(2, 51);
        let u1 = random_unitary(2, 52);
        let m = build_map(&MapDescriptor::Unitary {
            perm: vec![1, 0],
            unitaries: vec![u0, u1],
        })
        .unwrap();
        let ext = extend_to_linear(&m, &cfg).unwrap();
        let split = split_jordan(&ext, &cfg).unwrap();
        assert_eq!(split.correspondence, vec![1, 0]);
    }
}
