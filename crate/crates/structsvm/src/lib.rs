//! Structured SVM training with bi-criteria surrogate losses.
//!
//! The crate is organized around a 2D view of structured labels: for a fixed
//! model and training example, every candidate label maps to a point
//! `(h, g)` combining a margin-side score and a loss-side score. Surrogate
//! losses are quasi-concave bivariate functions over that plane, and
//! loss-augmented inference reduces to geometric searches driven by a
//! `λ`-oracle (a rescaled margin-rescaling argmax).
//!
//! Module map:
//! - [`geometry`]: label points, segments, sorted hull state, golden-section
//!   maximization, contour tangents.
//! - [`loss`]: the surrogate-loss families, their gradients, and axiom checks.
//! - [`oracle`]: λ-oracle backends (enumeration, chain Viterbi), slope-window
//!   constrained queries, ban lists, and adversarial test constructions.
//! - [`search`]: product-objective searches (binary, bisecting, angular) with
//!   suboptimality certificates.
//! - [`hull`]: convex hull search for arbitrary bi-criteria losses, plus
//!   integral recovery via ban lists.
//! - [`model`] / [`train`]: linear structured models, SGD training,
//!   prediction, metrics, serialization.
//! - [`hierarchy`]: normalized hierarchical SVM, α-weight solvers, the shared
//!   Frobenius norm machinery.
//! - [`synth`]: deterministic synthetic data generators.
//! - [`dataio`]: plain-text dataset and report formats.

pub mod dataio;
pub mod geometry;
pub mod hierarchy;
pub mod hull;
pub mod loss;
pub mod model;
pub mod oracle;
pub mod search;
pub mod synth;
pub mod train;

pub use geometry::{HullState, LabelPoint, Segment};
pub use loss::BiCriteriaLoss;
pub use oracle::{LabelId, Lambda, OracleAnswer, SlopeWindow};
pub use search::SearchResult;
