//! Seeded random generation of algebra elements for randomized checks.
//!
//! All samplers draw from an explicit ChaCha RNG; counter-based splitting
//! (`stream_rng`) derives independent per-trial streams from a master seed,
//! so randomized suites are reproducible and safe to parallelize.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{AlgebraElement, AlgebraSpec, Effect, Projection};
use crate::linalg::{
    herm_eig, psd_sqrt, random_effect_matrix_with, random_unitary_with, ComplexMatrix,
};

/// Independent RNG stream `stream` split off the master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Random effect: each block drawn as `U·diag(t)·Uᴴ`, `t` uniform on [0, 1].
pub fn effect_on<R: Rng>(spec: &AlgebraSpec, rng: &mut R) -> Effect {
    let parts = spec
        .blocks()
        .iter()
        .map(|&n| random_effect_matrix_with(n, rng))
        .collect();
    Effect::new_unchecked(AlgebraElement::new(spec.clone(), parts).unwrap())
}

/// Random unit vector with complex Gaussian entries.
pub fn unit_vector<R: Rng>(n: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Random projection: a random effect with its spectrum rounded to {0, 1}.
pub fn projection_on<R: Rng>(spec: &AlgebraSpec, rng: &mut R) -> Projection {
    let parts = spec
        .blocks()
        .iter()
        .map(|&n| {
            let e = random_effect_matrix_with(n, rng);
            let eig = herm_eig(&e, 1e-9).expect("random effect is Hermitian");
            eig.rebuild_with(|l| if l >= 0.5 { 1.0 } else { 0.0 })
        })
        .collect();
    Projection::new_unchecked(AlgebraElement::new(spec.clone(), parts).unwrap())
}

/// Random central effect: an independent uniform scalar per block.
pub fn central_effect_on<R: Rng>(spec: &AlgebraSpec, rng: &mut R) -> Effect {
    let parts = spec
        .blocks()
        .iter()
        .map(|&n| ComplexMatrix::identity(n).scale(rng.random::<f64>()))
        .collect();
    Effect::new_unchecked(AlgebraElement::new(spec.clone(), parts).unwrap())
}

/// Random abelian projection: rank ≤ 1 in every block, nonzero overall.
pub fn abelian_projection_on<R: Rng>(spec: &AlgebraSpec, rng: &mut R) -> Projection {
    loop {
        let mut any = false;
        let parts: Vec<ComplexMatrix> = spec
            .blocks()
            .iter()
            .map(|&n| {
                if rng.random::<f64>() < 0.5 {
                    any = true;
                    // Size-1 blocks stay exact so powers of the entries
                    // cannot amplify round-off.
                    if n == 1 {
                        ComplexMatrix::identity(1)
                    } else {
                        ComplexMatrix::outer(&unit_vector(n, rng))
                    }
                } else {
                    ComplexMatrix::zeros(n)
                }
            })
            .collect();
        if any {
            return Projection::new_unchecked(AlgebraElement::new(spec.clone(), parts).unwrap());
        }
    }
}

/// Sub-projection of `q`: spanned by a random subset of `q`'s range basis.
pub fn subprojection_of<R: Rng>(q: &Projection, rng: &mut R) -> Projection {
    let spec = q.spec();
    let parts = (0..spec.block_count())
        .map(|i| {
            let part = q.part(i);
            let n = part.dim();
            let eig = herm_eig(part, 1e-8).expect("projection is Hermitian");
            let mut out = ComplexMatrix::zeros(n);
            for (k, &l) in eig.eigenvalues.iter().enumerate() {
                if l >= 0.5 && rng.random::<f64>() < 0.5 {
                    let col = eig.basis.column(k);
                    out = out.add(&ComplexMatrix::outer(&col));
                }
            }
            out.hermitian_part()
        })
        .collect();
    Projection::new_unchecked(AlgebraElement::new(spec.clone(), parts).unwrap())
}

/// Pair of exactly orthogonal projections built from a shared random basis.
pub fn orthogonal_projection_pair<R: Rng>(
    spec: &AlgebraSpec,
    rng: &mut R,
) -> (Projection, Projection) {
    let mut first = AlgebraElement::zero(spec);
    let mut second = AlgebraElement::zero(spec);
    for (i, &n) in spec.blocks().iter().enumerate() {
        if n == 1 {
            match rng.random_range(0..3) {
                0 => *first.part_mut(i) = ComplexMatrix::identity(1),
                1 => *second.part_mut(i) = ComplexMatrix::identity(1),
                _ => {}
            }
            continue;
        }
        let u = random_unitary_with(n, rng);
        let mut a = ComplexMatrix::zeros(n);
        let mut b = ComplexMatrix::zeros(n);
        for k in 0..n {
            let col = u.column(k);
            match rng.random_range(0..3) {
                0 => a = a.add(&ComplexMatrix::outer(&col)),
                1 => b = b.add(&ComplexMatrix::outer(&col)),
                _ => {}
            }
        }
        *first.part_mut(i) = a.hermitian_part();
        *second.part_mut(i) = b.hermitian_part();
    }
    (
        Projection::new_unchecked(first),
        Projection::new_unchecked(second),
    )
}

fn sandwich(a: &Effect, b: &Effect) -> AlgebraElement {
    let spec = a.spec().clone();
    let parts = a
        .as_element()
        .parts()
        .iter()
        .zip(b.as_element().parts())
        .map(|(pa, pb)| {
            let s = psd_sqrt(pa, 1e-8).expect("sampled effect is psd");
            s.mul(pb).mul(&s).hermitian_part()
        })
        .collect();
    AlgebraElement::new(spec, parts).unwrap()
}

/// Effects `(a, b)` with `a + b ≤ I`: `b = (I−a)^{1/2}·c·(I−a)^{1/2}`.
pub fn summable_pair<R: Rng>(spec: &AlgebraSpec, rng: &mut R) -> (Effect, Effect) {
    let a = effect_on(spec, rng);
    let c = effect_on(spec, rng);
    let complement = Effect::new_unchecked(AlgebraElement::identity(spec).sub(a.as_element()));
    let b = Effect::new_unchecked(sandwich(&complement, &c));
    (a, b)
}

/// Effects `(a, b)` with `a ≤ b`: `a = b^{1/2}·c·b^{1/2}`.
pub fn comparable_pair<R: Rng>(spec: &AlgebraSpec, rng: &mut R) -> (Effect, Effect) {
    let b = effect_on(spec, rng);
    let c = effect_on(spec, rng);
    let a = Effect::new_unchecked(sandwich(&b, &c));
    (a, b)
}

/// Exactly commuting effects: `b` is a polynomial in `a`.
pub fn commuting_pair<R: Rng>(spec: &AlgebraSpec, rng: &mut R) -> (Effect, Effect) {
    let a = effect_on(spec, rng);
    let b = match rng.random_range(0..3) {
        0 => a.as_element().mul(a.as_element()),
        1 => AlgebraElement::identity(spec).sub(a.as_element()),
        _ => a
            .as_element()
            .mul(a.as_element())
            .add(a.as_element())
            .scale(0.5),
    };
    (a, Effect::new_unchecked(b.hermitian_part()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{classify_element, ToleranceConfig};

    fn spec(blocks: &[usize]) -> AlgebraSpec {
        AlgebraSpec::new(blocks.to_vec()).unwrap()
    }

    #[test]
    fn stream_splitting_is_deterministic_and_independent() {
        let a: Vec<f64> = (0..4).map(|_| stream_rng(9, 1).random()).collect();
        let b: Vec<f64> = (0..4).map(|_| stream_rng(9, 1).random()).collect();
        assert_eq!(a[0], b[0]);
        let c: f64 = stream_rng(9, 2).random();
        assert_ne!(a[0], c);
    }

    #[test]
    fn sampled_values_satisfy_their_invariants() {
        let s = spec(&[2, 3]);
        let cfg = ToleranceConfig::default();
        let mut rng = stream_rng(5, 0);
        for _ in 0..10 {
            let e = effect_on(&s, &mut rng);
            assert!(Effect::new(e.into_element(), 1e-9).is_ok());

            let p = projection_on(&s, &mut rng);
            assert!(Projection::new(p.as_element().clone(), 1e-9).is_ok());

            let z = central_effect_on(&s, &mut rng);
            assert!(classify_element(z.as_element(), &cfg).is_central);

            let ab = abelian_projection_on(&s, &mut rng);
            assert!(classify_element(ab.as_element(), &cfg).is_abelian_projection);

            let (p1, p2) = orthogonal_projection_pair(&s, &mut rng);
            assert!(p1.as_element().mul(p2.as_element()).frobenius_norm() <= 1e-12);

            let q = projection_on(&s, &mut rng);
            let sub = subprojection_of(&q, &mut rng);
            assert!(
                q.as_element()
                    .mul(sub.as_element())
                    .frobenius_dist(sub.as_element())
                    <= 1e-12
            );

            let (a, b) = summable_pair(&s, &mut rng);
            let sum = a.as_element().add(b.as_element());
            assert!(Effect::new(sum, 1e-9).is_ok());

            let (a, b) = comparable_pair(&s, &mut rng);
            // b − a is psd.
            let diff = b.as_element().sub(a.as_element());
            for part in diff.parts() {
                let eig = herm_eig(part, 1e-9).unwrap();
                assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10));
            }

            let (a, b) = commuting_pair(&s, &mut rng);
            for (pa, pb) in a.as_element().parts().iter().zip(b.as_element().parts()) {
                assert!(pa.commutator_norm(pb) <= 1e-12);
            }
        }
    }
}
