//! Ground-truth oracles and structural checks: brute-force enumeration,
//! transfer-matrix marginals, conditional-independence tests, minimal
//! I-maps, chordality, the factor-graph view and exact sampling.

pub mod ci;
pub mod graph;
pub mod joint;
pub mod transfer;

pub use ci::{
    ci_test, ci_violation, markov_blanket, minimal_imap, pmap_check_reciprocal, ImapMethod, IntervalCheck,
    MarkovBlanket, PmapReport, DEFAULT_CI_TOL,
};
pub use graph::{build_factor_graph, chordality_check, Factor, FactorGraph, FactorKind, UndirectedGraphSkeleton};
pub use joint::{exact_marginals_bruteforce, joint_table, JointTable, DEFAULT_ENUMERATION_CAP};
pub use transfer::{exact_marginals_transfer, sample_joint};
