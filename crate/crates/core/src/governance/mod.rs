//! Delegation classification and the tier transition state machine.

pub mod evidence;
pub mod levels;
pub mod matrix;
pub mod policy;
pub mod transition;

pub use evidence::{derive_capability_rating, CycleSummary, EvidenceLedger, LedgerError};
pub use levels::{Assessment, CapabilityRating, Level, Tier};
pub use matrix::{classify, enumerate_matrix, Classification, MatchedRule, RuleId};
pub use policy::TransitionPolicy;
pub use transition::{
    apply_demotion, apply_promotion, check_promotion, DemotionTrigger, PromotionBlocker,
    PromotionEligibility, TransitionError, TransitionEvent, TransitionKind, Trigger,
};
