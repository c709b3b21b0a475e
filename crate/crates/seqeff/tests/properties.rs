//! Property-based invariants for the numerical core and the wire formats.
//! Strategies generate seeds and shapes; all matrix data comes from the
//! crate's own seeded generators so failures reproduce exactly.

use proptest::prelude::*;

use seqeff::algebra::{
    classify_element, matrix_units, AlgebraElement, AlgebraSpec, Effect, ToleranceConfig,
};
use seqeff::linalg::{
    herm_eig, psd_power, psd_sqrt, random_effect_matrix, random_unitary, ComplexMatrix,
};
use seqeff::morphisms::{build_map, sample_sequential_axiom, DirectSumPart, MapDescriptor};
use seqeff::sampling;
use seqeff::selftest::denman_beavers_sqrt;
use seqeff::sequential::seq_product;

fn hermitian_from_seed(n: usize, seed: u64) -> ComplexMatrix {
    // Random effect stretched into a generic Hermitian matrix.
    let e = random_effect_matrix(n, seed);
    let shift = ComplexMatrix::identity(n).scale(0.5);
    e.sub(&shift).scale(4.0).hermitian_part()
}

fn positive_definite_from_seed(n: usize, seed: u64) -> ComplexMatrix {
    use rand::Rng;
    let mut rng = sampling::stream_rng(seed, 7);
    let u = seqeff::linalg::random_unitary_with(n, &mut rng);
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut z = num_complex::Complex64::ZERO;
            for k in 0..n {
                // Spectrum in [0.1, 1.1]; deterministic per (seed, k).
                let t = 0.1 + ((seed as usize + k) % 10) as f64 / 10.0;
                z += u[(i, k)] * u[(j, k)].conj() * t;
            }
            out[(i, j)] = z;
        }
    }
    let _ = rng.random::<f64>();
    out.hermitian_part()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn psd_sqrt_squares_back(n in 1usize..=8, seed in 0u64..1000) {
        let m = random_effect_matrix(n, seed).scale(3.0);
        let r = psd_sqrt(&m, 1e-10).unwrap();
        let defect = r.mul(&r).frobenius_dist(&m);
        prop_assert!(defect <= 1e-9 * m.frobenius_norm().max(1.0), "defect {defect:.3e}");
    }

    #[test]
    fn psd_power_round_trips(n in 1usize..=6, seed in 0u64..1000, p_idx in 0usize..3) {
        let p = [0.5, 2.0, 3.0][p_idx];
        let m = positive_definite_from_seed(n, seed);
        let forward = psd_power(&m, p, 1e-10).unwrap();
        let back = psd_power(&forward, 1.0 / p, 1e-10).unwrap();
        let defect = back.frobenius_dist(&m);
        prop_assert!(defect <= 1e-8 * m.frobenius_norm().max(1.0), "defect {defect:.3e}");
    }

    #[test]
    fn herm_eig_reconstructs(n in 1usize..=16, seed in 0u64..1000) {
        let m = hermitian_from_seed(n, seed);
        let eig = herm_eig(&m, 1e-9).unwrap();
        let rebuilt = eig.rebuild_with(|l| l);
        let defect = rebuilt.frobenius_dist(&m);
        prop_assert!(defect <= 1e-10 * m.frobenius_norm().max(1.0), "defect {defect:.3e}");
        // Ascending eigenvalues and a unitary basis.
        for w in eig.eigenvalues.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        let unit = eig.basis.adjoint().mul(&eig.basis);
        prop_assert!(unit.frobenius_dist(&ComplexMatrix::identity(n)) <= 1e-11 * n as f64);
    }

    #[test]
    fn spectral_and_iterative_sqrt_agree(n in 1usize..=6, seed in 0u64..500) {
        let m = positive_definite_from_seed(n, seed);
        let spectral = psd_sqrt(&m, 1e-10).unwrap();
        let iterative = denman_beavers_sqrt(&m, 100).unwrap();
        prop_assert!(spectral.frobenius_dist(&iterative) <= 1e-8);
    }

    #[test]
    fn element_json_round_trip_is_bit_exact(seed in 0u64..1000) {
        let spec = AlgebraSpec::new(vec![1, 2, 3]).unwrap();
        let mut rng = sampling::stream_rng(seed, 0);
        let e = sampling::effect_on(&spec, &mut rng);
        let json = serde_json::to_string(e.as_element()).unwrap();
        let back: AlgebraElement = serde_json::from_str(&json).unwrap();
        for (a, b) in e.as_element().parts().iter().zip(back.parts()) {
            for i in 0..a.dim() {
                for j in 0..a.dim() {
                    prop_assert_eq!(a[(i, j)].re.to_bits(), b[(i, j)].re.to_bits());
                    prop_assert_eq!(a[(i, j)].im.to_bits(), b[(i, j)].im.to_bits());
                }
            }
        }
    }

    #[test]
    fn built_oracles_satisfy_the_sequential_axiom(seed in 0u64..200, case in 0usize..4) {
        let cfg = ToleranceConfig { trials: 30, seed, ..Default::default() };
        let d = match case {
            0 => MapDescriptor::Unitary {
                perm: vec![0, 1],
                unitaries: vec![random_unitary(3, seed), random_unitary(3, seed + 1)],
            },
            1 => MapDescriptor::Transpose {
                perm: vec![1, 0],
                unitaries: vec![random_unitary(2, seed), random_unitary(2, seed + 1)],
            },
            2 => MapDescriptor::Power { exponents: vec![0.5 + (seed % 20) as f64 / 10.0, 1.0] },
            _ => MapDescriptor::DirectSum {
                parts: vec![
                    DirectSumPart {
                        source_blocks: vec![0],
                        target_blocks: vec![0],
                        map: MapDescriptor::Power { exponents: vec![2.0] },
                    },
                    DirectSumPart {
                        source_blocks: vec![1],
                        target_blocks: vec![1],
                        map: MapDescriptor::Transpose {
                            perm: vec![0],
                            unitaries: vec![random_unitary(3, seed + 2)],
                        },
                    },
                ],
            },
        };
        let m = build_map(&d).unwrap();
        let report = sample_sequential_axiom(&m, &cfg).unwrap();
        prop_assert!(report.max_residual <= 1e-9, "residual {:.3e}", report.max_residual);
    }

    #[test]
    fn commutative_seq_product_is_pointwise(seed in 0u64..1000, k in 1usize..5) {
        let spec = AlgebraSpec::new(vec![1; k]).unwrap();
        let cfg = ToleranceConfig::default();
        let mut rng = sampling::stream_rng(seed, 1);
        let a = sampling::effect_on(&spec, &mut rng);
        let b = sampling::effect_on(&spec, &mut rng);
        let ab = seq_product(&a, &b, &cfg).unwrap();
        for i in 0..k {
            let plain = a.part(i)[(0, 0)].re * b.part(i)[(0, 0)].re;
            prop_assert!((ab.part(i)[(0, 0)].re - plain).abs() <= 1e-13);
        }
    }

    #[test]
    fn centrality_matches_matrix_unit_commutation(seed in 0u64..500, central in proptest::bool::ANY) {
        let spec = AlgebraSpec::new(vec![2, 3]).unwrap();
        let cfg = ToleranceConfig::default();
        let mut rng = sampling::stream_rng(seed, 2);
        let x = if central {
            sampling::central_effect_on(&spec, &mut rng).into_element()
        } else {
            sampling::effect_on(&spec, &mut rng).into_element()
        };
        let classified = classify_element(&x, &cfg).is_central;

        let mut commutes = true;
        for b in 0..spec.block_count() {
            let units = matrix_units(&spec, b).unwrap();
            for (_, u) in units.iter() {
                if x.mul(u).frobenius_dist(&u.mul(&x)) > cfg.eq_tol {
                    commutes = false;
                }
            }
        }
        prop_assert_eq!(classified, commutes);
    }

    #[test]
    fn abelian_iff_compressions_commute(seed in 0u64..300) {
        let spec = AlgebraSpec::new(vec![2, 3]).unwrap();
        let cfg = ToleranceConfig::default();
        let mut rng = sampling::stream_rng(seed, 3);
        let p = if seed % 2 == 0 {
            sampling::abelian_projection_on(&spec, &mut rng)
        } else {
            sampling::projection_on(&spec, &mut rng)
        };
        let flagged = classify_element(p.as_element(), &cfg).is_abelian_projection;

        // Compressions P·E·P of 20 random effects must mutually commute
        // exactly when P is abelian.
        let compressed: Vec<AlgebraElement> = (0..20)
            .map(|_| {
                let e = sampling::effect_on(&spec, &mut rng);
                p.as_element().mul(e.as_element()).mul(p.as_element())
            })
            .collect();
        let mut commuting = true;
        for i in 0..compressed.len() {
            for j in (i + 1)..compressed.len() {
                let lhs = compressed[i].mul(&compressed[j]);
                let rhs = compressed[j].mul(&compressed[i]);
                if lhs.frobenius_dist(&rhs) > cfg.eq_tol {
                    commuting = false;
                }
            }
        }
        prop_assert_eq!(flagged, commuting, "flagged {} vs compressions {}", flagged, commuting);
    }

    #[test]
    fn effects_survive_validation(seed in 0u64..1000) {
        let spec = AlgebraSpec::new(vec![2, 3]).unwrap();
        let mut rng = sampling::stream_rng(seed, 4);
        let e = sampling::effect_on(&spec, &mut rng);
        prop_assert!(Effect::new(e.into_element(), 1e-9).is_ok());
    }
}
