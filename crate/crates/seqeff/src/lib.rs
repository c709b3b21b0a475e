//! Finite-dimensional von Neumann algebra effects with the sequential
//! product, and a blind analyzer that decomposes sequential isomorphisms
//! into a commutative power-map part, a multiplicative part, and an
//! antimultiplicative part.

pub mod algebra;
pub mod analyzer;
pub mod error;
pub mod extension;
pub mod linalg;
pub mod morphisms;
pub mod sampling;
pub mod selftest;
pub mod sequential;

pub use algebra::{
    center_projections, central_carrier, classify_element, matrix_units, scalar_element,
    trace_per_block, type_partition, AlgebraElement, AlgebraSpec, Effect, ElementFlags,
    MatrixUnitSystem, Projection, ToleranceConfig,
};
// pub use analyzer::{block_correspondence, decompose, lemma_suite, DecompositionReport, LemmaReport};
pub use error::{Error, Result};
pub use extension::{
    commutative_recover, extend_to_linear, split_jordan, BlockKind, CommutativeRecovery,
    JordanSplit, LinearExtension,
};
pub use linalg::{
    herm_eig, psd_power, psd_sqrt, random_effect_matrix, random_unitary, ComplexMatrix, EigenSystem,
};
pub use morphisms::{
    apply_map, build_map, combine_maps, parse_descriptor_json, sample_sequential_axiom,
    AxiomSample, CombineKind, DirectSumPart, MapDescriptor, SequentialMapOracle,
};
pub use sequential::{
    commutation_witness, proj_relations, seq_product, CommutationWitness, ProjRelations,
};
