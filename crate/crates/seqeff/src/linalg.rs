//! Dense complex matrix primitives.
//!
//! Everything downstream (effects, sequential products, map recovery) reduces
//! to Hermitian eigendecompositions of small dense matrices, so this module
//! keeps its own self-contained solver instead of pulling in a BLAS binding:
//! a cyclic Jacobi scheme for Hermitian matrices, spectral matrix functions
//! built on it, and seeded random generation of unitaries and effects.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Maximum number of cyclic Jacobi sweeps before giving up.
const MAX_SWEEPS: usize = 100;

/// Off-diagonal convergence threshold, relative to the Frobenius norm.
const OFF_DIAG_REL_TOL: f64 = 1e-13;

/// Modulus below which a vector entry is ignored when fixing eigenvector phases.
const PHASE_PIVOT_TOL: f64 = 1e-12;

/// A square matrix of `Complex64` entries, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        ComplexMatrix {
            n,
            entries: vec![Complex64::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    /// Builds a matrix from nested rows, checking squareness and finiteness.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::SchemaError(
                "matrix must have at least one row".into(),
            ));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::SchemaError(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    n
                )));
            }
            for z in &row {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::SchemaError(format!(
                        "non-finite entry in row {}",
                        i + 1
                    )));
                }
            }
            entries.extend(row);
        }
        Ok(ComplexMatrix { n, entries })
    }

    /// Convenience constructor from real-valued rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Rank-one matrix `v vᴴ`.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, other.n, "matrix dimensions must agree");
        let n = self.n;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.n, v.len());
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, other.n);
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        ComplexMatrix { n: self.n, entries }
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, other.n);
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        ComplexMatrix { n: self.n, entries }
    }

    pub fn scale(&self, s: f64) -> ComplexMatrix {
        self.scale_c(Complex64::new(s, 0.0))
    }

    pub fn scale_c(&self, s: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            n: self.n,
            entries: self.entries.iter().map(|a| a * s).collect(),
        }
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn frobenius_dist(&self, other: &ComplexMatrix) -> f64 {
        self.sub(other).frobenius_norm()
    }

    /// Frobenius norm of `M - Mᴴ`.
    pub fn hermitian_defect(&self) -> f64 {
        self.sub(&self.adjoint()).frobenius_norm()
    }

    /// Symmetrized copy `(M + Mᴴ)/2`.
    pub fn hermitian_part(&self) -> ComplexMatrix {
        self.add(&self.adjoint()).scale(0.5)
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn commutator_norm(&self, other: &ComplexMatrix) -> f64 {
        self.mul(other).frobenius_dist(&other.mul(self))
    }

    /// Largest eigenvalue magnitude of a Hermitian matrix.
    pub fn op_norm_hermitian(&self, tol: f64) -> Result<f64> {
        let eig = herm_eig(self, tol)?;
        Ok(eig
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, &l| acc.max(l.abs())))
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.n + j]
    }
}

// Wire format: rows of [re, im] pairs. serde_json prints f64 with the
// shortest round-tripping decimal, so serialization is bit-exact.
impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| [self[(i, j)].re, self[(i, j)].im])
                    .collect()
            })
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let rows = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|[re, im]| Complex64::new(re, im))
                    .collect()
            })
            .collect();
        ComplexMatrix::from_rows(rows).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues and
/// a unitary whose columns are the matching eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub basis: ComplexMatrix,
}

impl EigenSystem {
    /// Rebuilds `basis · diag(f(λ)) · basisᴴ`.
    pub fn rebuild_with<F: Fn(f64) -> f64>(&self, f: F) -> ComplexMatrix {
        let n = self.basis.dim();
        let mut out = ComplexMatrix::zeros(n);
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let fl = f(l);
            if fl == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.basis[(i, k)];
                for j in 0..n {
                    out[(i, j)] += vi * self.basis[(j, k)].conj() * fl;
                }
            }
        }
        // Kill the rounding asymmetry so spectral functions stay Hermitian.
        out.hermitian_part()
    }
}

fn off_diag_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
///
/// The input must satisfy `‖M − Mᴴ‖_F ≤ tol`; it is symmetrized before the
/// iteration so the residual asymmetry cannot bias the result.
pub fn herm_eig(m: &ComplexMatrix, tol: f64) -> Result<EigenSystem> {
    let defect = m.hermitian_defect();
    if defect > tol {
        return Err(Error::NotHermitian { defect, tol });
    }
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let thresh = OFF_DIAG_REL_TOL * a.frobenius_norm();

    if n > 1 {
        let mut converged = false;
        for _sweep in 0..MAX_SWEEPS {
            if off_diag_norm(&a) <= thresh {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let abs = apq.norm();
                    if abs < 1e-300 {
                        continue;
                    }
                    let phase = apq / abs;
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let tau = (aqq - app) / (2.0 * abs);
                    // Smaller-magnitude root of t² − 2τt − 1 = 0.
                    let t = if tau >= 0.0 {
                        -1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let sp = phase.scale(s);

                    // A <- A·U, i.e. mix columns p and q.
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * c + akq * sp.conj();
                        a[(k, q)] = -akp * sp + akq * c;
                    }
                    // A <- Uᴴ·A, i.e. mix rows p and q.
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = apk * c + aqk * sp;
                        a[(q, k)] = -apk * sp.conj() + aqk * c;
                    }
                    // Accumulate V <- V·U.
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * c + vkq * sp.conj();
                        v[(k, q)] = -vkp * sp + vkq * c;
                    }
                }
            }
        }
        if !converged && off_diag_norm(&a) > thresh {
            return Err(Error::NoConvergence {
                sweeps: MAX_SWEEPS,
                off: off_diag_norm(&a),
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut basis = ComplexMatrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        if let Some(pivot) = col.iter().find(|z| z.norm() > PHASE_PIVOT_TOL) {
            let factor = pivot.conj() / pivot.norm();
            for z in &mut col {
                *z *= factor;
            }
        }
        for i in 0..n {
            basis[(i, dst)] = col[i];
        }
    }

    Ok(EigenSystem { eigenvalues, basis })
}

fn spectral_map<F: Fn(f64) -> f64>(m: &ComplexMatrix, tol: f64, f: F) -> Result<ComplexMatrix> {
    let eig = herm_eig(m, tol)?;
    if let Some(&l) = eig.eigenvalues.iter().find(|&&l| l < -tol) {
        return Err(Error::NotPsd { eigenvalue: l, tol });
    }
    Ok(eig.rebuild_with(|l| f(l.max(0.0))))
}

/// Positive-semidefinite square root via the spectral decomposition.
///
/// Eigenvalues within `tol` of zero (from round-off) are clamped to zero
/// before the square root is taken.
pub fn psd_sqrt(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    spectral_map(m, tol, f64::sqrt)
}

/// Fractional power `λ ↦ λ^p` of a positive-semidefinite matrix, with `0^p = 0`.
pub fn psd_power(m: &ComplexMatrix, p: f64, tol: f64) -> Result<ComplexMatrix> {
    if p <= 0.0 || p.is_nan() {
        return Err(Error::BadExponent { exponent: p });
    }
    spectral_map(m, tol, |l| l.powf(p))
}

/// Standard complex Gaussian (Ginibre) entry.
fn ginibre_entry<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im).scale(std::f64::consts::FRAC_1_SQRT_2)
}

/// Haar-distributed unitary drawn from an explicit RNG.
///
/// Orthonormalizes an i.i.d. complex Gaussian matrix by modified Gram–Schmidt
/// with a second pass; the triangular factor then has a positive real
/// diagonal, which fixes the phase freedom and makes the result Haar.
pub fn random_unitary_with<R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix {
    assert!(n >= 1, "dimension must be positive");
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for _ in 0..n {
        loop {
            let mut col: Vec<Complex64> = (0..n).map(|_| ginibre_entry(rng)).collect();
            for _pass in 0..2 {
                for prev in &cols {
                    let proj: Complex64 = prev.iter().zip(&col).map(|(p, c)| p.conj() * c).sum();
                    for (c, p) in col.iter_mut().zip(prev) {
                        *c -= proj * p;
                    }
                }
            }
            let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for z in &mut col {
                    *z /= norm;
                }
                cols.push(col);
                break;
            }
        }
    }
    let mut u = ComplexMatrix::zeros(n);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            u[(i, j)] = col[i];
        }
    }
    u
}

/// Deterministic Haar-distributed unitary for a given seed.
pub fn random_unitary(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_unitary_with(n, &mut rng)
}

/// Random effect matrix drawn from an explicit RNG: `U·diag(t)·Uᴴ` with the
/// `tᵢ` uniform on [0, 1] and `U` Haar.
pub fn random_effect_matrix_with<R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix {
    let u = random_unitary_with(n, rng);
    let t: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut z = Complex64::ZERO;
            for (k, &tk) in t.iter().enumerate() {
                z += u[(i, k)] * u[(j, k)].conj() * tk;
            }
            out[(i, j)] = z;
        }
    }
    out.hermitian_part()
}

/// Deterministic random effect matrix for a given seed.
pub fn random_effect_matrix(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_effect_matrix_with(n, &mut rng)
}
