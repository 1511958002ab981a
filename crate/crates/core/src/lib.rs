//! Random d-dimensional simplicial complexes with a complete (d-1)-skeleton:
//! sampling, collapse and cores, homology ranks, shadows, the Poisson d-tree
//! local limit and the threshold numerics that predict their behaviour.

pub mod boundary;
pub mod collapse;
pub mod combinatorics;
pub mod complex;
pub mod error;
pub mod homology;
pub mod incidence;
pub mod linalg;
pub mod rng;
pub mod sampling;
pub mod stats;
pub mod sweep;
pub mod thresholds;
pub mod tree;

pub use combinatorics::{face_rank, face_unrank, FaceId};
pub use complex::{boundary_faces, Complex};
pub use error::{Error, Result};
