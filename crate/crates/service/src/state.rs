//! The service's whole state and the mutations that change it.
//!
//! [`State::apply`] is deterministic: ids, timestamps and password hashes
//! are chosen before a mutation is built, so replaying the log rebuilds the
//! same state.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Days, NaiveDate, Utc};
use modcanvas_core::analysis::validate_transitive;
use modcanvas_core::model::{
    module_contains, CompositionGraph, CompositionId, ContentRef, ModelError, ModuleDescriptor,
    ModuleId, ModuleKind, OutcomeRecord, ReviewItemId, SessionId, SessionState, SessionStatus,
    UserId,
};
use modcanvas_core::registry::ModuleRegistry;
use modcanvas_core::remix::{Catalog, Grant, LedgerError, MergeOutcome, ModuleRecord};
use modcanvas_core::scheduler::{review, ReviewItem};
use modcanvas_core::session::{aggregate_outcome, start_session_with_id, submit_outcome};
use serde::{Deserialize, Serialize};

use crate::accounts::{valid_avatar_name, Avatar, PublicAccount, UserAccount};
use crate::chat::{ChatCatalog, ChatMessage};
use crate::error::ServiceError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "camelCase")]
pub enum Favourite {
    Module(ModuleId),
    Avatar(UserId),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct State {
    pub catalog: Catalog,
    pub accounts: BTreeMap<UserId, UserAccount>,
    pub logons: BTreeMap<String, UserId>,
    pub likes: BTreeSet<(UserId, ModuleId)>,
    pub favourites: BTreeMap<UserId, BTreeSet<Favourite>>,
    pub chats: Vec<ChatMessage>,
    pub runs: BTreeMap<SessionId, SessionState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Mutation {
    #[serde(rename_all = "camelCase")]
    Register {
        user_id: UserId,
        logon_id: String,
        password_hash: String,
        email: Option<String>,
        avatar_name: String,
        locale: String,
    },
    /// The package itself is stored before the mutation is applied.
    #[serde(rename_all = "camelCase")]
    ImportAtomic { descriptor: ModuleDescriptor },
    #[serde(rename_all = "camelCase")]
    CreateComposite {
        descriptor: ModuleDescriptor,
        graph: CompositionGraph,
    },
    #[serde(rename_all = "camelCase")]
    UpdateComposition {
        module_id: ModuleId,
        expected_version: u32,
        graph: CompositionGraph,
        actor: UserId,
        at: DateTime<Utc>,
    },
    #[serde(rename_all = "camelCase")]
    Publish {
        module_id: ModuleId,
        actor: UserId,
        at: DateTime<Utc>,
    },
    #[serde(rename_all = "camelCase")]
    Derive {
        module_id: ModuleId,
        actor: UserId,
        new_id: ModuleId,
    },
    #[serde(rename_all = "camelCase")]
    Merge {
        original: ModuleId,
        remix: ModuleId,
        actor: UserId,
        at: DateTime<Utc>,
    },
    #[serde(rename_all = "camelCase")]
    Like { user: UserId, module_id: ModuleId },
    #[serde(rename_all = "camelCase")]
    Favourite { user: UserId, target: Favourite },
    #[serde(rename_all = "camelCase")]
    Chat { message: ChatMessage },
    #[serde(rename_all = "camelCase")]
    StartRun {
        session_id: SessionId,
        composition_id: CompositionId,
        user: UserId,
    },
    /// Exactly one of `outcome` and `child_run` is set.
    #[serde(rename_all = "camelCase")]
    SubmitOutcome {
        session_id: SessionId,
        actor: UserId,
        outcome: Option<OutcomeRecord>,
        child_run: Option<SessionId>,
        at: DateTime<Utc>,
    },
    #[serde(rename_all = "camelCase")]
    Review {
        user: UserId,
        item_id: ReviewItemId,
        grade: u8,
        today: NaiveDate,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    Registered {
        account: PublicAccount,
        /// Set when another avatar already has the chosen name.
        notice: Option<String>,
    },
    Module(ModuleDescriptor),
    Updated { version: u32, grants: Vec<Grant> },
    Published { grants: Vec<Grant> },
    Merged(MergeOutcome),
    Liked { likes: usize },
    Favourited,
    Chat(ChatMessage),
    Run(SessionState),
    Reviewed(ReviewItem),
}

/// One entry of a search response.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "entry", rename_all = "camelCase")]
pub enum SearchEntry {
    #[serde(rename_all = "camelCase")]
    Module {
        module_id: ModuleId,
        title: String,
        kind: ModuleKind,
        content_type: String,
        author_id: UserId,
        likes: usize,
        favourite: bool,
    },
    /// Always last: the offer to author something new instead.
    #[serde(rename_all = "camelCase")]
    CreateNew {
        query: String,
        type_filter: Option<String>,
    },
}

impl State {
    pub fn account(&self, user: &UserId) -> Result<&UserAccount, ServiceError> {
        self.accounts
            .get(user)
            .ok_or_else(|| ServiceError::Ledger(LedgerError::UnknownUser(user.clone())))
    }

    pub fn user_by_logon(&self, logon_id: &str) -> Option<&UserAccount> {
        self.logons.get(logon_id).and_then(|u| self.accounts.get(u))
    }

    /// A module `user` may see: published, or their own.
    pub fn visible_module(&self, id: &ModuleId, user: &UserId) -> Result<&ModuleRecord, ServiceError> {
        self.catalog
            .record(id)
            .filter(|r| r.published || &r.descriptor.author_id == user)
            .ok_or_else(|| ServiceError::Ledger(LedgerError::UnknownModule(id.clone())))
    }

    pub fn owned_module(&self, id: &ModuleId, user: &UserId) -> Result<&ModuleRecord, ServiceError> {
        let record = self.visible_module(id, user)?;
        if &record.descriptor.author_id != user {
            return Err(ServiceError::Forbidden(format!("module {id} belongs to another author")));
        }
        Ok(record)
    }

    /// The module whose content is `composition`, if `user` may see it.
    pub fn visible_composition(
        &self,
        composition: &CompositionId,
        user: &UserId,
    ) -> Result<&ModuleRecord, ServiceError> {
        let unknown = || ServiceError::Ledger(LedgerError::UnknownComposition(composition.clone()));
        let record = self.catalog.composition_module(composition).ok_or_else(unknown)?;
        self.visible_module(&record.descriptor.module_id, user)
            .map_err(|_| unknown())
    }

    pub fn like_count(&self, module: &ModuleId) -> usize {
        self.likes.iter().filter(|(_, m)| m == module).count()
    }

    pub fn avatar_name_taken(&self, name: &str) -> bool {
        self.accounts.values().any(|a| a.avatar.name == name.trim())
    }

    /// Case-insensitive title match, ranked favourites first, then by like
    /// count, title and module id. The create-new marker comes last.
    pub fn search(&self, query: &str, type_filter: Option<&str>, user: &UserId) -> Vec<SearchEntry> {
        let needle = query.trim().to_lowercase();
        let filter = type_filter.map(str::to_lowercase);
        let favourites = self.favourites.get(user);
        let mut likes: BTreeMap<&ModuleId, usize> = BTreeMap::new();
        for (_, module) in &self.likes {
            *likes.entry(module).or_default() += 1;
        }
        let mut hits: Vec<(bool, usize, &ModuleDescriptor)> = self
            .catalog
            .records()
            .filter(|r| r.published || &r.descriptor.author_id == user)
            .map(|r| &r.descriptor)
            .filter(|d| d.title.to_lowercase().contains(&needle))
            .filter(|d| filter.as_deref().map_or(true, |f| matches_type(d, f)))
            .map(|d| {
                let favourite = favourites
                    .is_some_and(|f| f.contains(&Favourite::Module(d.module_id.clone())));
                (favourite, likes.get(&d.module_id).copied().unwrap_or(0), d)
            })
            .collect();
        hits.sort_by(|a, b| {
            b.0.cmp(&a.0)
                .then(b.1.cmp(&a.1))
                .then_with(|| a.2.title.cmp(&b.2.title))
                .then_with(|| a.2.module_id.cmp(&b.2.module_id))
        });
        let mut entries: Vec<SearchEntry> = hits
            .into_iter()
            .map(|(favourite, likes, d)| SearchEntry::Module {
                module_id: d.module_id.clone(),
                title: d.title.clone(),
                kind: d.kind(),
                content_type: d.content_type.clone(),
                author_id: d.author_id.clone(),
                likes,
                favourite,
            })
            .collect();
        entries.push(SearchEntry::CreateNew {
            query: query.to_owned(),
            type_filter: type_filter.map(str::to_owned),
        });
        entries
    }

    pub fn apply(&mut self, mutation: Mutation) -> Result<Effect, ServiceError> {
        match mutation {
            Mutation::Register {
                user_id,
                logon_id,
                password_hash,
                email,
                avatar_name,
                locale,
            } => {
                if self.logons.contains_key(&logon_id) {
                    return Err(ServiceError::LogonIdTaken(logon_id));
                }
                if !valid_avatar_name(&avatar_name) {
                    return Err(ServiceError::InvalidAvatarName);
                }
                if !ChatCatalog::shared().locales.contains(&locale) {
                    return Err(ServiceError::BadRequest(format!("unsupported locale {locale}")));
                }
                let notice = self
                    .avatar_name_taken(&avatar_name)
                    .then(|| format!("another avatar is already called {}", avatar_name.trim()));
                let account = UserAccount {
                    user_id: user_id.clone(),
                    logon_id: logon_id.clone(),
                    password_hash,
                    email,
                    avatar: Avatar::new(avatar_name.trim()),
                    locale,
                    reviews: BTreeMap::new(),
                    version: 1,
                };
                let public = PublicAccount::from(&account);
                self.catalog.register_user(&user_id);
                self.logons.insert(logon_id, user_id.clone());
                self.accounts.insert(user_id, account);
                Ok(Effect::Registered {
                    account: public,
                    notice,
                })
            }
            Mutation::ImportAtomic { descriptor } => {
                self.account(&descriptor.author_id)?;
                self.catalog.create_atomic(descriptor.clone())?;
                Ok(Effect::Module(descriptor))
            }
            Mutation::CreateComposite { descriptor, graph } => {
                self.account(&descriptor.author_id)?;
                graph.check_invariants()?;
                self.catalog.create_composite(descriptor.clone(), graph)?;
                Ok(Effect::Module(descriptor))
            }
            Mutation::UpdateComposition {
                module_id,
                expected_version,
                graph,
                actor,
                at,
            } => self.update_composition(&module_id, expected_version, graph, &actor, at),
            Mutation::Publish { module_id, actor, at } => {
                let record = self.owned_module(&module_id, &actor)?;
                if let Some(graph) = self.catalog.module_graph(&record.descriptor.module_id) {
                    let reports = validate_transitive(graph, &self.catalog);
                    if let Some(report) = reports.into_values().find(|r| r.has_errors()) {
                        return Err(ServiceError::ValidationErrors(report));
                    }
                }
                let grants = self.catalog.publish(&module_id, at)?;
                Ok(Effect::Published { grants })
            }
            Mutation::Derive {
                module_id,
                actor,
                new_id,
            } => {
                self.account(&actor)?;
                let descriptor = self.catalog.derive(&module_id, &actor, new_id)?;
                Ok(Effect::Module(descriptor))
            }
            Mutation::Merge {
                original,
                remix,
                actor,
                at,
            } => {
                self.owned_module(&original, &actor)?;
                self.visible_module(&remix, &actor)?;
                let outcome = self.catalog.merge_remix(&original, &remix, at)?;
                Ok(Effect::Merged(outcome))
            }
            Mutation::Like { user, module_id } => {
                self.account(&user)?;
                self.visible_module(&module_id, &user)?;
                self.likes.insert((user, module_id.clone()));
                Ok(Effect::Liked {
                    likes: self.like_count(&module_id),
                })
            }
            Mutation::Favourite { user, target } => {
                self.account(&user)?;
                let known = match &target {
                    Favourite::Module(id) => self.visible_module(id, &user).is_ok(),
                    Favourite::Avatar(id) => self.accounts.contains_key(id),
                };
                if !known {
                    let name = match &target {
                        Favourite::Module(id) => id.to_string(),
                        Favourite::Avatar(id) => id.to_string(),
                    };
                    return Err(ServiceError::UnknownTarget(name));
                }
                self.favourites.entry(user).or_default().insert(target);
                Ok(Effect::Favourited)
            }
            Mutation::Chat { message } => {
                self.account(&message.from_user)?;
                self.account(&message.to_user)?;
                ChatCatalog::shared().check_slots(&message.template_id, &message.slots)?;
                for (slot, module) in &message.slots {
                    if self.visible_module(module, &message.from_user).is_err() {
                        return Err(crate::chat::ChatError::UnresolvedSlot(slot.clone()).into());
                    }
                }
                self.chats.push(message.clone());
                Ok(Effect::Chat(message))
            }
            Mutation::StartRun {
                session_id,
                composition_id,
                user,
            } => {
                self.account(&user)?;
                self.visible_composition(&composition_id, &user)?;
                if self.runs.contains_key(&session_id) {
                    return Err(ServiceError::BadRequest(format!("run {session_id} exists")));
                }
                let run = start_session_with_id(session_id.clone(), &composition_id, &user, &self.catalog)?;
                self.runs.insert(session_id, run.clone());
                Ok(Effect::Run(run))
            }
            Mutation::SubmitOutcome {
                session_id,
                actor,
                outcome,
                child_run,
                at,
            } => self.submit(&session_id, &actor, outcome, child_run, at),
            Mutation::Review {
                user,
                item_id,
                grade,
                today,
            } => {
                let account = self
                    .accounts
                    .get_mut(&user)
                    .ok_or_else(|| ServiceError::Ledger(LedgerError::UnknownUser(user.clone())))?;
                let item = account
                    .reviews
                    .get(&item_id)
                    .ok_or_else(|| ServiceError::NotFound(format!("review item {item_id}")))?;
                let next = review(item, grade, today)?;
                account.reviews.insert(item_id, next.clone());
                account.version += 1;
                Ok(Effect::Reviewed(next))
            }
        }
    }

    fn update_composition(
        &mut self,
        module_id: &ModuleId,
        expected_version: u32,
        graph: CompositionGraph,
        actor: &UserId,
        at: DateTime<Utc>,
    ) -> Result<Effect, ServiceError> {
        let record = self.owned_module(module_id, actor)?;
        let current = record.descriptor.version;
        if current != expected_version {
            return Err(ServiceError::VersionConflict {
                expected: expected_version.into(),
                current: current.into(),
            });
        }
        let Some(composition) = record.descriptor.content.composition().cloned() else {
            return Err(LedgerError::KindMismatch(module_id.clone()).into());
        };
        if graph.composition_id() != &composition {
            return Err(ServiceError::BadRequest(format!(
                "graph is for composition {}, module {module_id} holds {composition}",
                graph.composition_id()
            )));
        }
        graph.check_invariants()?;
        let before: BTreeSet<ModuleId> = self
            .catalog
            .composition(&composition)
            .map(|g| g.nodes().map(|n| n.module_ref.clone()).collect())
            .unwrap_or_default();
        let mut added = BTreeSet::new();
        for node in graph.nodes() {
            let module = &node.module_ref;
            if module_contains(&self.catalog, module, &composition) {
                return Err(ModelError::CyclicComposition(module.clone()).into());
            }
            if let Some(used) = self.catalog.record(module) {
                if !used.published && &used.descriptor.author_id != actor {
                    return Err(ServiceError::Forbidden(format!("module {module} is not published")));
                }
                if !before.contains(module) && &used.descriptor.author_id != actor {
                    added.insert(module.clone());
                }
            }
        }
        let version = self.catalog.update_composition(module_id, graph)?;
        let mut grants = Vec::new();
        for module in &added {
            grants.extend(self.catalog.record_reuse(module, &composition, actor, at)?);
        }
        Ok(Effect::Updated { version, grants })
    }

    fn submit(
        &mut self,
        session_id: &SessionId,
        actor: &UserId,
        outcome: Option<OutcomeRecord>,
        child_run: Option<SessionId>,
        at: DateTime<Utc>,
    ) -> Result<Effect, ServiceError> {
        let run = self
            .runs
            .get(session_id)
            .ok_or_else(|| ServiceError::NotFound(format!("run {session_id}")))?;
        if &run.user_id != actor {
            return Err(ServiceError::Forbidden(format!("run {session_id} belongs to another user")));
        }
        let graph = self
            .catalog
            .composition(&run.composition_id)
            .ok_or_else(|| LedgerError::UnknownComposition(run.composition_id.clone()))?;
        let outcome = match (outcome, child_run) {
            (Some(outcome), None) => outcome,
            (None, Some(child_id)) => {
                let child = self
                    .runs
                    .get(&child_id)
                    .filter(|c| &c.user_id == actor)
                    .ok_or_else(|| ServiceError::NotFound(format!("run {child_id}")))?;
                let expected = graph
                    .node(&run.current_node)
                    .and_then(|n| self.catalog.module_graph(&n.module_ref))
                    .map(|g| g.composition_id());
                if expected != Some(&child.composition_id) {
                    return Err(ServiceError::BadRequest(format!(
                        "run {child_id} is not a run of the composition at node {}",
                        run.current_node
                    )));
                }
                aggregate_outcome(child, run.current_node.clone())?
            }
            _ => {
                return Err(ServiceError::BadRequest(
                    "give either an outcome or a finished child run".into(),
                ))
            }
        };
        let next = submit_outcome(run, graph, outcome)?;
        if next.status == SessionStatus::Finished {
            let due = at.date_naive() + Days::new(1);
            let learned: Vec<ModuleId> = next
                .trace
                .iter()
                .filter_map(|o| graph.node(&o.node_id))
                .map(|n| n.module_ref.clone())
                .filter(|m| {
                    self.catalog
                        .module(m)
                        .is_some_and(|d| matches!(d.content, ContentRef::Atomic(_)))
                })
                .collect();
            let account = self.accounts.get_mut(actor).expect("run users have accounts");
            for module in learned {
                let item_id = ReviewItemId::new(module.as_str());
                if !account.reviews.contains_key(&item_id) {
                    account.reviews.insert(item_id.clone(), ReviewItem::new(item_id, module, due));
                    account.version += 1;
                }
            }
        }
        self.runs.insert(session_id.clone(), next.clone());
        Ok(Effect::Run(next))
    }
}

fn matches_type(descriptor: &ModuleDescriptor, filter: &str) -> bool {
    let kind = match descriptor.kind() {
        ModuleKind::Atomic => "atomic",
        ModuleKind::Composite => "composite",
    };
    descriptor.content_type.to_lowercase() == filter || kind == filter
}
