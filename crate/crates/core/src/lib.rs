//! Multivariate orthogonal polynomial systems built from moment functionals,
//! their vector three-term relations, and linear structure relations
//! `Q_n = P_n + M_n P_{n-1}` between two such systems.
//!
//! Directions and multi-index components are zero-based in the API.

pub mod acceptance;
pub mod construct;
pub mod error;
pub mod families;
pub mod indexing;
pub mod linrel;
pub mod manifest;
pub mod matrixkit;
pub mod moments;
pub mod poly;
pub mod report;
pub mod ttr;

pub use error::{Error, Result};
pub use indexing::{enumerate_indices, joint_matrix, rank_count, GradedBasis, MultiIndex, ShiftMatrix};
pub use matrixkit::{numeric_rank, Matrix};
pub use poly::{Poly, UniPoly};
pub use construct::{gram_schmidt_monic, GramBlocks, GsOptions, PolySystem, Rho};
pub use moments::{FamilySpec, MomentFunctional};
pub use ttr::{ThreeTermData, Generated};
pub use linrel::{LinearRelation, RankClass};
