//! Restricted chat: every message is a catalog template whose slots name
//! modules. There is no free text.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use modcanvas_core::model::{ModuleId, UserId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUILTIN: &str = include_str!("../locales/chat.toml");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChatError {
    #[error("unknown template {0}")]
    UnknownTemplate(String),
    #[error("slot {0} is missing, unexpected or names no module")]
    UnresolvedSlot(String),
    #[error("no text for locale {0}")]
    UnknownLocale(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Template {
    pub slots: Vec<String>,
    pub text: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatCatalog {
    pub locales: Vec<String>,
    pub templates: BTreeMap<String, Template>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChatMessage {
    pub message_id: String,
    pub from_user: UserId,
    pub to_user: UserId,
    pub template_id: String,
    pub slots: BTreeMap<String, ModuleId>,
    pub sent_at: DateTime<Utc>,
}

impl ChatCatalog {
    /// The built-in catalog, parsed once.
    pub fn shared() -> &'static ChatCatalog {
        static CATALOG: OnceLock<ChatCatalog> = OnceLock::new();
        CATALOG.get_or_init(ChatCatalog::builtin)
    }

    pub fn builtin() -> ChatCatalog {
        let catalog: ChatCatalog = toml::from_str(BUILTIN).expect("built-in chat catalog parses");
        debug_assert!(catalog.problems().is_empty());
        catalog
    }

    /// Templates lacking a locale, or whose text and slot list disagree.
    pub fn problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for (id, template) in &self.templates {
            for locale in &self.locales {
                let Some(text) = template.text.get(locale) else {
                    problems.push(format!("{id}: no {locale} text"));
                    continue;
                };
                for slot in &template.slots {
                    if !text.contains(&format!("{{{slot}}}")) {
                        problems.push(format!("{id}/{locale}: slot {slot} not used"));
                    }
                }
                if placeholders(text) != template.slots.len() {
                    problems.push(format!("{id}/{locale}: placeholders and slots differ"));
                }
            }
        }
        problems
    }

    /// Checks that `slots` fill exactly the template's slots.
    pub fn check_slots(
        &self,
        template_id: &str,
        slots: &BTreeMap<String, ModuleId>,
    ) -> Result<&Template, ChatError> {
        let template = self
            .templates
            .get(template_id)
            .ok_or_else(|| ChatError::UnknownTemplate(template_id.to_owned()))?;
        if let Some(missing) = template.slots.iter().find(|s| !slots.contains_key(*s)) {
            return Err(ChatError::UnresolvedSlot(missing.clone()));
        }
        if let Some(extra) = slots.keys().find(|k| !template.slots.contains(k)) {
            return Err(ChatError::UnresolvedSlot(extra.clone()));
        }
        Ok(template)
    }

    /// Renders a message in `locale`, using `title` to name slot modules.
    pub fn render(
        &self,
        message: &ChatMessage,
        locale: &str,
        title: impl Fn(&ModuleId) -> Option<String>,
    ) -> Result<String, ChatError> {
        let template = self.check_slots(&message.template_id, &message.slots)?;
        let mut text = template
            .text
            .get(locale)
            .ok_or_else(|| ChatError::UnknownLocale(locale.to_owned()))?
            .clone();
        for (slot, module) in &message.slots {
            let name = title(module).ok_or_else(|| ChatError::UnresolvedSlot(slot.clone()))?;
            text = text.replace(&format!("{{{slot}}}"), &name);
        }
        Ok(text)
    }
}

fn placeholders(text: &str) -> usize {
    text.matches('{').count()
}
