//! The module catalog with lineage tracking and the reward ledger.
//!
//! Every operation takes its timestamps and new identifiers as arguments,
//! so replaying the same calls reproduces the same catalog.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::merge::{merge, MergeResult};
use crate::h5p::H5pPackage;
use crate::model::{
    CompositionGraph, CompositionId, ContentId, ContentRef, ModuleDescriptor, ModuleId, UserId,
};
use crate::registry::ModuleRegistry;

pub const ACTIVE_REMIX_POINTS: u32 = 3;
pub const ACTIVE_REUSE_POINTS: u32 = 2;
pub const MERGE_ACCEPTED_POINTS: u32 = 5;
pub const PASSIVE_REMIXED_POINTS: u32 = 1;
pub const PASSIVE_REUSED_POINTS: u32 = 1;

/// Counts at which both badge families are awarded.
pub const BADGE_THRESHOLDS: [u32; 3] = [10, 50, 200];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RewardKind {
    ActiveReuse,
    ActiveRemix,
    PassiveReused,
    PassiveRemixed,
    MergeAccepted,
}

impl RewardKind {
    pub const ALL: [RewardKind; 5] = [
        RewardKind::ActiveReuse,
        RewardKind::ActiveRemix,
        RewardKind::PassiveReused,
        RewardKind::PassiveRemixed,
        RewardKind::MergeAccepted,
    ];

    pub fn points(self) -> u32 {
        match self {
            RewardKind::ActiveReuse => ACTIVE_REUSE_POINTS,
            RewardKind::ActiveRemix => ACTIVE_REMIX_POINTS,
            RewardKind::PassiveReused => PASSIVE_REUSED_POINTS,
            RewardKind::PassiveRemixed => PASSIVE_REMIXED_POINTS,
            RewardKind::MergeAccepted => MERGE_ACCEPTED_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RewardEvent {
    pub kind: RewardKind,
    pub points: u32,
    pub subject: ModuleId,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Badge {
    pub badge_id: String,
    pub awarded_at: DateTime<Utc>,
}

/// Badge for remixing `n` modules.
pub fn active_badge(n: u32) -> String {
    format!("remixed {n} modules!")
}

/// Badge for authoring a module remixed `n` times.
pub fn passive_badge(n: u32) -> String {
    format!("{n} remixes!")
}

/// One user's append-only event list and badges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RewardLedger {
    pub user_id: UserId,
    pub events: Vec<RewardEvent>,
    pub badges: Vec<Badge>,
}

impl RewardLedger {
    pub fn new(user_id: UserId) -> Self {
        RewardLedger {
            user_id,
            events: Vec::new(),
            badges: Vec::new(),
        }
    }

    pub fn total_points(&self) -> u64 {
        self.events.iter().map(|e| u64::from(e.points)).sum()
    }

    pub fn has_badge(&self, badge_id: &str) -> bool {
        self.badges.iter().any(|b| b.badge_id == badge_id)
    }

    fn count(&self, kind: RewardKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

/// Points granted to one user by one operation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Grant {
    pub user_id: UserId,
    pub event: RewardEvent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LineageRecord {
    pub module_id: ModuleId,
    pub parent_id: Option<ModuleId>,
    /// Parent version the module was derived from.
    pub fork_point_version: Option<u32>,
    pub reuse_count: u32,
    pub remix_count: u32,
}

/// What a module held at one version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VersionSnapshot {
    pub title: String,
    pub content: SnapshotContent,
}

/// Package content is immutable per content id, so atomic snapshots only
/// name it; composite snapshots hold the whole graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SnapshotContent {
    Atomic(ContentId),
    Composite(CompositionGraph),
}

impl SnapshotContent {
    /// Equality ignoring the composition identifier.
    fn same_as(&self, other: &SnapshotContent) -> bool {
        match (self, other) {
            (SnapshotContent::Atomic(a), SnapshotContent::Atomic(b)) => a == b,
            (SnapshotContent::Composite(a), SnapshotContent::Composite(b)) => {
                a.with_composition_id(b.composition_id().clone()) == *b
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModuleRecord {
    pub descriptor: ModuleDescriptor,
    pub published: bool,
    pub lineage: LineageRecord,
    pub history: BTreeMap<u32, VersionSnapshot>,
    /// Set once the first publish of a derivative has paid out.
    pub settled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("unknown module {0}")]
    UnknownModule(ModuleId),
    #[error("unknown composition {0}")]
    UnknownComposition(CompositionId),
    #[error("unknown content {0}")]
    UnknownContent(ContentId),
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("module {0} already exists")]
    DuplicateModule(ModuleId),
    #[error("title must not be empty")]
    EmptyTitle,
    #[error("module {0} has the wrong kind for this operation")]
    KindMismatch(ModuleId),
    #[error("module {remix} was not derived from {original}")]
    UnrelatedHistories { original: ModuleId, remix: ModuleId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutcome {
    pub result: MergeResult,
    /// The original's new version when the merge was applied.
    pub new_version: Option<u32>,
    pub grants: Vec<Grant>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModuleCounters {
    pub reuse_count: u32,
    pub remix_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RewardsSummary {
    pub user_id: UserId,
    pub total_points: u64,
    pub points_by_kind: BTreeMap<RewardKind, u64>,
    pub badges: Vec<Badge>,
    /// Counters of every module the user authored.
    pub per_module: BTreeMap<ModuleId, ModuleCounters>,
}

/// Modules, their content, lineage and every user's rewards.
///
/// Packages are not serialized; a persisted catalog gets them back through
/// [`Catalog::insert_package`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Catalog {
    modules: BTreeMap<ModuleId, ModuleRecord>,
    compositions: BTreeMap<CompositionId, CompositionGraph>,
    #[serde(skip)]
    /// Shared so that cloning a catalog does not copy package bytes.
    packages: BTreeMap<ContentId, Arc<H5pPackage>>,
    users: BTreeSet<UserId>,
    ledgers: BTreeMap<UserId, RewardLedger>,
    reuses: BTreeSet<(ModuleId, CompositionId)>,
}

impl Catalog {
    pub fn new() -> Self {
        Catalog::default()
    }

    /// Returns false if the user was already known.
    pub fn register_user(&mut self, user: &UserId) -> bool {
        self.ledgers
            .entry(user.clone())
            .or_insert_with(|| RewardLedger::new(user.clone()));
        self.users.insert(user.clone())
    }

    pub fn has_user(&self, user: &UserId) -> bool {
        self.users.contains(user)
    }

    /// Stores package content. Content is immutable once stored.
    pub fn insert_package(&mut self, content_id: ContentId, package: H5pPackage) {
        self.packages.entry(content_id).or_insert_with(|| Arc::new(package));
    }

    pub fn content_ids(&self) -> impl Iterator<Item = &ContentId> {
        self.packages.keys()
    }

    /// Content ids referenced by some module version but not stored.
    pub fn missing_content(&self) -> BTreeSet<ContentId> {
        self.modules
            .values()
            .flat_map(|r| r.history.values())
            .filter_map(|s| match &s.content {
                SnapshotContent::Atomic(id) if !self.packages.contains_key(id) => Some(id.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn record(&self, id: &ModuleId) -> Option<&ModuleRecord> {
        self.modules.get(id)
    }

    pub fn records(&self) -> impl Iterator<Item = &ModuleRecord> {
        self.modules.values()
    }

    pub fn lineage(&self, id: &ModuleId) -> Option<&LineageRecord> {
        self.modules.get(id).map(|r| &r.lineage)
    }

    pub fn ledger(&self, user: &UserId) -> Option<&RewardLedger> {
        self.ledgers.get(user)
    }

    /// The module backed by `composition`, if any.
    pub fn composition_module(&self, composition: &CompositionId) -> Option<&ModuleRecord> {
        self.modules
            .values()
            .find(|r| r.descriptor.content.composition() == Some(composition))
    }

    /// Adds an atomic module at version 1. Its content must be stored.
    pub fn create_atomic(&mut self, descriptor: ModuleDescriptor) -> Result<(), LedgerError> {
        let ContentRef::Atomic(content) = &descriptor.content else {
            return Err(LedgerError::KindMismatch(descriptor.module_id));
        };
        if !self.packages.contains_key(content) {
            return Err(LedgerError::UnknownContent(content.clone()));
        }
        let snapshot = SnapshotContent::Atomic(content.clone());
        self.create(descriptor, snapshot)
    }

    /// Adds a composite module at version 1 together with its graph.
    pub fn create_composite(
        &mut self,
        descriptor: ModuleDescriptor,
        graph: CompositionGraph,
    ) -> Result<(), LedgerError> {
        if descriptor.content.composition() != Some(graph.composition_id()) {
            return Err(LedgerError::KindMismatch(descriptor.module_id));
        }
        if self.compositions.contains_key(graph.composition_id()) {
            return Err(LedgerError::DuplicateModule(descriptor.module_id));
        }
        let snapshot = SnapshotContent::Composite(graph.clone());
        self.create(descriptor, snapshot)?;
        self.compositions.insert(graph.composition_id().clone(), graph);
        Ok(())
    }

    fn create(&mut self, mut descriptor: ModuleDescriptor, content: SnapshotContent) -> Result<(), LedgerError> {
        if descriptor.title.trim().is_empty() {
            return Err(LedgerError::EmptyTitle);
        }
        if self.modules.contains_key(&descriptor.module_id) {
            return Err(LedgerError::DuplicateModule(descriptor.module_id));
        }
        descriptor.version = 1;
        descriptor.parent_id = None;
        self.register_user(&descriptor.author_id);
        let snapshot = VersionSnapshot {
            title: descriptor.title.clone(),
            content,
        };
        self.modules.insert(
            descriptor.module_id.clone(),
            ModuleRecord {
                lineage: LineageRecord {
                    module_id: descriptor.module_id.clone(),
                    parent_id: None,
                    fork_point_version: None,
                    reuse_count: 0,
                    remix_count: 0,
                },
                history: BTreeMap::from([(1, snapshot)]),
                descriptor,
                published: false,
                settled: false,
            },
        );
        Ok(())
    }

    /// Replaces a composite module's graph, returning the new version.
    pub fn update_composition(&mut self, id: &ModuleId, graph: CompositionGraph) -> Result<u32, LedgerError> {
        let record = self.modules.get(id).ok_or_else(|| LedgerError::UnknownModule(id.clone()))?;
        if record.descriptor.content.composition() != Some(graph.composition_id()) {
            return Err(LedgerError::KindMismatch(id.clone()));
        }
        self.compositions.insert(graph.composition_id().clone(), graph.clone());
        Ok(self.bump(id, |_, content| *content = SnapshotContent::Composite(graph)))
    }

    /// Points an atomic module at new, already stored content.
    pub fn update_package(&mut self, id: &ModuleId, content: ContentId) -> Result<u32, LedgerError> {
        let record = self.modules.get(id).ok_or_else(|| LedgerError::UnknownModule(id.clone()))?;
        if !matches!(record.descriptor.content, ContentRef::Atomic(_)) {
            return Err(LedgerError::KindMismatch(id.clone()));
        }
        if !self.packages.contains_key(&content) {
            return Err(LedgerError::UnknownContent(content));
        }
        let record = self.modules.get_mut(id).expect("checked above");
        record.descriptor.content = ContentRef::Atomic(content.clone());
        Ok(self.bump(id, |_, c| *c = SnapshotContent::Atomic(content)))
    }

    pub fn rename(&mut self, id: &ModuleId, title: &str) -> Result<u32, LedgerError> {
        if title.trim().is_empty() {
            return Err(LedgerError::EmptyTitle);
        }
        if !self.modules.contains_key(id) {
            return Err(LedgerError::UnknownModule(id.clone()));
        }
        let record = self.modules.get_mut(id).expect("checked above");
        record.descriptor.title = title.to_owned();
        Ok(self.bump(id, |t, _| *t = title.to_owned()))
    }

    /// Records a new version from the latest snapshot, edited by `edit`.
    fn bump(&mut self, id: &ModuleId, edit: impl FnOnce(&mut String, &mut SnapshotContent)) -> u32 {
        let record = self.modules.get_mut(id).expect("caller checked the module");
        let mut snapshot = record.history[&record.descriptor.version].clone();
        edit(&mut snapshot.title, &mut snapshot.content);
        record.descriptor.version += 1;
        record.history.insert(record.descriptor.version, snapshot);
        record.descriptor.version
    }

    /// Parent, grandparent, ... of `id`, nearest first.
    pub fn ancestors(&self, id: &ModuleId) -> Vec<ModuleId> {
        let mut chain = Vec::new();
        let mut seen = BTreeSet::from([id.clone()]);
        let mut current = self.modules.get(id).and_then(|r| r.lineage.parent_id.clone());
        while let Some(parent) = current {
            if !seen.insert(parent.clone()) {
                break;
            }
            current = self.modules.get(&parent).and_then(|r| r.lineage.parent_id.clone());
            chain.push(parent);
        }
        chain
    }

    /// Deep-copies a published module for `author`. The copy is
    /// unpublished, at version 1, and remembers the parent version it
    /// forked from. Rewards wait until the copy is first published.
    pub fn derive(
        &mut self,
        id: &ModuleId,
        author: &UserId,
        new_id: ModuleId,
    ) -> Result<ModuleDescriptor, LedgerError> {
        let parent = self
            .modules
            .get(id)
            .filter(|r| r.published)
            .ok_or_else(|| LedgerError::UnknownModule(id.clone()))?;
        if self.modules.contains_key(&new_id) {
            return Err(LedgerError::DuplicateModule(new_id));
        }
        let content = match &parent.descriptor.content {
            ContentRef::Atomic(content) => ContentRef::Atomic(content.clone()),
            ContentRef::Composite(_) => ContentRef::Composite(CompositionId::new(new_id.as_str())),
        };
        if let ContentRef::Composite(composition) = &content {
            if self.compositions.contains_key(composition) {
                return Err(LedgerError::DuplicateModule(new_id));
            }
        }
        let descriptor = ModuleDescriptor {
            module_id: new_id.clone(),
            title: parent.descriptor.title.clone(),
            author_id: author.clone(),
            content: content.clone(),
            content_type: parent.descriptor.content_type.clone(),
            licence: parent.descriptor.licence,
            version: 1,
            parent_id: Some(id.clone()),
        };
        let fork_point = parent.descriptor.version;
        let snapshot = match (&parent.history[&fork_point].content, &content) {
            (SnapshotContent::Composite(graph), ContentRef::Composite(composition)) => {
                let copy = graph.with_composition_id(composition.clone());
                self.compositions.insert(composition.clone(), copy.clone());
                SnapshotContent::Composite(copy)
            }
            (other, _) => other.clone(),
        };
        self.register_user(author);
        self.modules.insert(
            new_id.clone(),
            ModuleRecord {
                descriptor: descriptor.clone(),
                published: false,
                lineage: LineageRecord {
                    module_id: new_id,
                    parent_id: Some(id.clone()),
                    fork_point_version: Some(fork_point),
                    reuse_count: 0,
                    remix_count: 0,
                },
                history: BTreeMap::from([(
                    1,
                    VersionSnapshot {
                        title: descriptor.title.clone(),
                        content: snapshot,
                    },
                )]),
                settled: false,
            },
        );
        Ok(descriptor)
    }

    /// Whether a derivative differs from the parent version it forked from.
    pub fn is_modified(&self, id: &ModuleId) -> Result<bool, LedgerError> {
        let record = self.modules.get(id).ok_or_else(|| LedgerError::UnknownModule(id.clone()))?;
        let (Some(parent), Some(fork)) = (&record.lineage.parent_id, record.lineage.fork_point_version) else {
            return Ok(false);
        };
        let base = self
            .modules
            .get(parent)
            .and_then(|p| p.history.get(&fork))
            .ok_or_else(|| LedgerError::UnknownModule(parent.clone()))?;
        let current = &record.history[&record.descriptor.version];
        Ok(current.title != base.title || !current.content.same_as(&base.content))
    }

    /// Makes a module visible to others. The first publish of a derivative
    /// pays out: as a remix when it was modified, as a reuse otherwise.
    pub fn publish(&mut self, id: &ModuleId, at: DateTime<Utc>) -> Result<Vec<Grant>, LedgerError> {
        let modified = self.is_modified(id)?;
        let record = self.modules.get_mut(id).expect("is_modified checked the module");
        record.published = true;
        if record.settled {
            return Ok(Vec::new());
        }
        record.settled = true;
        let Some(parent) = record.lineage.parent_id.clone() else {
            return Ok(Vec::new());
        };
        let actor = record.descriptor.author_id.clone();
        if self.modules[&parent].descriptor.author_id == actor {
            return Ok(Vec::new());
        }
        let chain = self.ancestors(id);
        let mut grants = Vec::new();

        if modified {
            self.grant(&actor, RewardKind::ActiveRemix, &parent, at, &mut grants);
            for ancestor in &chain {
                let author = self.modules[ancestor].descriptor.author_id.clone();
                if author != actor {
                    self.grant(&author, RewardKind::PassiveRemixed, ancestor, at, &mut grants);
                }
            }
            let parent_record = self.modules.get_mut(&parent).expect("ancestors exist");
            parent_record.lineage.remix_count += 1;
            let count = parent_record.lineage.remix_count;
            let parent_author = parent_record.descriptor.author_id.clone();
            if BADGE_THRESHOLDS.contains(&count) {
                self.award(&parent_author, passive_badge(count), at);
            }
            let remixes = self.ledgers[&actor].count(RewardKind::ActiveRemix) as u32;
            if BADGE_THRESHOLDS.contains(&remixes) {
                self.award(&actor, active_badge(remixes), at);
            }
        } else {
            self.pay_reuse(&actor, &parent, &chain[1..], at, &mut grants);
        }
        Ok(grants)
    }

    /// Notes that `user` placed `id` into `composition`. Counted once per
    /// (module, composition); reusing your own module earns nothing.
    pub fn record_reuse(
        &mut self,
        id: &ModuleId,
        composition: &CompositionId,
        user: &UserId,
        at: DateTime<Utc>,
    ) -> Result<Vec<Grant>, LedgerError> {
        let record = self.modules.get(id).ok_or_else(|| LedgerError::UnknownModule(id.clone()))?;
        if !self.compositions.contains_key(composition) {
            return Err(LedgerError::UnknownComposition(composition.clone()));
        }
        if &record.descriptor.author_id == user {
            return Ok(Vec::new());
        }
        if !record.published {
            return Err(LedgerError::UnknownModule(id.clone()));
        }
        if !self.reuses.insert((id.clone(), composition.clone())) {
            return Ok(Vec::new());
        }
        self.register_user(user);
        let chain = self.ancestors(id);
        let mut grants = Vec::new();
        self.pay_reuse(user, id, &chain, at, &mut grants);
        Ok(grants)
    }

    /// `module` is used as-is by `actor`; `module` and its `ancestors` pay
    /// out passively.
    fn pay_reuse(
        &mut self,
        actor: &UserId,
        module: &ModuleId,
        ancestors: &[ModuleId],
        at: DateTime<Utc>,
        grants: &mut Vec<Grant>,
    ) {
        let record = self.modules.get_mut(module).expect("reused module exists");
        record.lineage.reuse_count += 1;
        self.grant(actor, RewardKind::ActiveReuse, module, at, grants);
        for source in std::iter::once(module).chain(ancestors) {
            let author = self.modules[source].descriptor.author_id.clone();
            if &author != actor {
                self.grant(&author, RewardKind::PassiveReused, source, at, grants);
            }
        }
    }

    /// Merges a remix back into the module it was derived from. A clean
    /// merge that changes the original bumps its version and rewards the
    /// remix author.
    pub fn merge_remix(
        &mut self,
        original: &ModuleId,
        remix: &ModuleId,
        at: DateTime<Utc>,
    ) -> Result<MergeOutcome, LedgerError> {
        let o = self.modules.get(original).ok_or_else(|| LedgerError::UnknownModule(original.clone()))?;
        let r = self.modules.get(remix).ok_or_else(|| LedgerError::UnknownModule(remix.clone()))?;
        if r.lineage.parent_id.as_ref() != Some(original) {
            return Err(LedgerError::UnrelatedHistories {
                original: original.clone(),
                remix: remix.clone(),
            });
        }
        let fork = r.lineage.fork_point_version.expect("derived modules record a fork point");
        let unrelated = || LedgerError::UnrelatedHistories {
            original: original.clone(),
            remix: remix.clone(),
        };
        let base = match o.history.get(&fork).map(|s| &s.content) {
            Some(SnapshotContent::Composite(graph)) => graph,
            _ => return Err(unrelated()),
        };
        let (Some(ours), Some(theirs)) = (self.module_graph(original), self.module_graph(remix)) else {
            return Err(LedgerError::KindMismatch(original.clone()));
        };
        let result = merge(ours, theirs, base);
        let remix_author = r.descriptor.author_id.clone();
        let original_author = o.descriptor.author_id.clone();

        let mut grants = Vec::new();
        let mut new_version = None;
        if result.is_clean() && &result.merged != ours {
            new_version = Some(self.update_composition(original, result.merged.clone())?);
            if remix_author != original_author {
                self.grant(&remix_author, RewardKind::MergeAccepted, original, at, &mut grants);
            }
        }
        Ok(MergeOutcome {
            result,
            new_version,
            grants,
        })
    }

    fn grant(
        &mut self,
        user: &UserId,
        kind: RewardKind,
        subject: &ModuleId,
        at: DateTime<Utc>,
        grants: &mut Vec<Grant>,
    ) {
        let event = RewardEvent {
            kind,
            points: kind.points(),
            subject: subject.clone(),
            at,
        };
        self.register_user(user);
        self.ledgers
            .get_mut(user)
            .expect("registered above")
            .events
            .push(event.clone());
        grants.push(Grant {
            user_id: user.clone(),
            event,
        });
    }

    fn award(&mut self, user: &UserId, badge_id: String, at: DateTime<Utc>) {
        self.register_user(user);
        let ledger = self.ledgers.get_mut(user).expect("registered above");
        if !ledger.has_badge(&badge_id) {
            ledger.badges.push(Badge {
                badge_id,
                awarded_at: at,
            });
        }
    }

    pub fn rewards_summary(&self, user: &UserId) -> Result<RewardsSummary, LedgerError> {
        if !self.users.contains(user) {
            return Err(LedgerError::UnknownUser(user.clone()));
        }
        let ledger = &self.ledgers[user];
        let mut points_by_kind: BTreeMap<RewardKind, u64> = BTreeMap::new();
        for event in &ledger.events {
            *points_by_kind.entry(event.kind).or_default() += u64::from(event.points);
        }
        let per_module = self
            .modules
            .values()
            .filter(|r| &r.descriptor.author_id == user)
            .map(|r| {
                let counters = ModuleCounters {
                    reuse_count: r.lineage.reuse_count,
                    remix_count: r.lineage.remix_count,
                };
                (r.descriptor.module_id.clone(), counters)
            })
            .collect();
        Ok(RewardsSummary {
            user_id: user.clone(),
            total_points: ledger.total_points(),
            points_by_kind,
            badges: ledger.badges.clone(),
            per_module,
        })
    }
}

impl ModuleRegistry for Catalog {
    fn module(&self, id: &ModuleId) -> Option<&ModuleDescriptor> {
        self.modules.get(id).map(|r| &r.descriptor)
    }

    fn composition(&self, id: &CompositionId) -> Option<&CompositionGraph> {
        self.compositions.get(id)
    }

    fn package(&self, id: &ContentId) -> Option<&H5pPackage> {
        self.packages.get(id).map(|p| &**p)
    }
}
