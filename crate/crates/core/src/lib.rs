//! Model-robust Q_B evaluation and construction of two-level screening designs.
//!
//! A design is an N×m matrix of ±1 factor settings. Its aliasing is summarised
//! by the generalized word counts `b_k` (sums of squared J-characteristics over
//! all k-factor effects), and the Q_B criterion is a prior-weighted linear
//! combination of those counts. The crate covers:
//!
//! * [`design`]: design matrices, model-matrix expansion and `XᵀX`.
//! * [`wordcounts`]: exact J-characteristics and word counts.
//! * [`criteria`]: Q_B (general, first-order, second-order), prior sums,
//!   E(s²), UE(s²) and A_s efficiency.
//! * [`optimizer`]: multi-restart coordinate exchange with incremental updates.
//! * [`theory`]: level-balance interval tables and block-pattern checks for
//!   N ≡ 2 (mod 4).
//! * [`projection`]: f-factor projection estimability and mean A_s tables.
//! * [`sweep`]: Q_B over a grid of priors, with argmin crossovers.
//! * [`fixtures`]: reference designs and information matrices.

pub mod criteria;
pub mod design;
mod error;
pub mod fixtures;
pub mod optimizer;
pub mod projection;
pub mod rng;
pub mod sweep;
pub mod theory;
pub mod wordcounts;

pub use criteria::{AsOutcome, Prior, PriorSums, XiWeights};
pub use design::{BalanceProfile, Design, InfoMatrix, ModelMatrix, ModelOrder, Term};
pub use error::{Error, Result};
pub use optimizer::{OptResult, OptimizerConfig};
pub use wordcounts::WordCounts;

/// Exact rational used for word counts and interval endpoints.
pub type Rational = num_rational::Ratio<i64>;
