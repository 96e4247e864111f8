//! Derivation lineage, reuse and remix rewards, and merging remixes back.

mod ledger;
mod merge;

pub use ledger::{
    active_badge, passive_badge, Badge, Catalog, Grant, LedgerError, LineageRecord, MergeOutcome,
    ModuleCounters, ModuleRecord, RewardEvent, RewardKind, RewardLedger, RewardsSummary,
    SnapshotContent, VersionSnapshot, ACTIVE_REMIX_POINTS, ACTIVE_REUSE_POINTS, BADGE_THRESHOLDS,
    MERGE_ACCEPTED_POINTS, PASSIVE_REMIXED_POINTS, PASSIVE_REUSED_POINTS,
};
pub use merge::{merge, MergeAttribute, MergeConflict, MergeResult, MergeSubject};
