//! Negative type, distorted negative type and Euclidean distortion of finite
//! semi-metric spaces.

pub mod certificate;
pub mod classical;
pub mod closed_forms;
pub mod distorted;
pub mod distortion;
pub mod embedding;
pub mod error;
pub(crate) mod linalg;
pub mod metric;
pub(crate) mod search;

pub use certificate::{certificate_ratio, distorted_inequality_slack, PsdCertificate};
pub use classical::{p_negative_type, supremal_negative_type, NegTypeVerdict, Status, SupremalType};
pub use distortion::{dual_certificate_search, min_distortion, DistortionReport, Method, SolverOptions};
pub use embedding::{embedding_stats, gram_to_embedding, Embedding, EmbeddingStats};
pub use error::{Error, Result};
pub use metric::{standard_space, Family, GraphSpec, SemiMetricSpace};
pub use closed_forms::{family_c2, family_supremal, hamming_reference, identify_family, kmn_reference, simplex_embedding};
pub use distorted::{distorted_p_negative_type, gap_estimate, gap_oracle, DistortedVerdict, GapEstimate, Rationale, VerdictEngine};
pub use distortion::{search_certificate, CertificateSearch};
