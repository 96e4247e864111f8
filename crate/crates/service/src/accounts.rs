//! User accounts, otter avatars and password hashing.

use std::collections::BTreeMap;

use password_hash::rand_core::OsRng;
use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::{Algorithm, Argon2, Params, Version};
use modcanvas_core::model::{ReviewItemId, UserId};
use modcanvas_core::scheduler::ReviewItem;
use serde::{Deserialize, Serialize};

use crate::config::HashParams;

pub const MIN_PASSWORD_CHARS: usize = 8;
pub const MAX_AVATAR_NAME_CHARS: usize = 32;
pub const AVATAR_SPECIES: &str = "otter";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Avatar {
    pub name: String,
    pub species: String,
    /// Cosmetic key to option id.
    pub customization: BTreeMap<String, String>,
}

impl Avatar {
    pub fn new(name: &str) -> Avatar {
        Avatar {
            name: name.to_owned(),
            species: AVATAR_SPECIES.into(),
            customization: BTreeMap::from([
                ("fur".to_string(), "brown".to_string()),
                ("hat".to_string(), "none".to_string()),
            ]),
        }
    }
}

pub fn valid_avatar_name(name: &str) -> bool {
    let chars = name.trim().chars().count();
    (1..=MAX_AVATAR_NAME_CHARS).contains(&chars)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UserAccount {
    pub user_id: UserId,
    pub logon_id: String,
    pub password_hash: String,
    pub email: Option<String>,
    pub avatar: Avatar,
    pub locale: String,
    /// Spaced-repetition items, one per module the user has learned.
    pub reviews: BTreeMap<ReviewItemId, ReviewItem>,
    pub version: u64,
}

/// The account as other users and the owner see it: no hash, no reviews.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PublicAccount {
    pub user_id: UserId,
    pub logon_id: String,
    pub avatar: Avatar,
    pub locale: String,
}

impl From<&UserAccount> for PublicAccount {
    fn from(a: &UserAccount) -> Self {
        PublicAccount {
            user_id: a.user_id.clone(),
            logon_id: a.logon_id.clone(),
            avatar: a.avatar.clone(),
            locale: a.locale.clone(),
        }
    }
}

fn hasher(params: HashParams) -> Result<Argon2<'static>, argon2::Error> {
    let params = Params::new(params.memory_kib, params.iterations, params.parallelism, None)?;
    Ok(Argon2::new(Algorithm::Argon2id, Version::V0x13, params))
}

/// A salted Argon2id hash in PHC string form.
pub fn hash_password(password: &str, params: HashParams) -> Result<String, String> {
    let salt = SaltString::generate(&mut OsRng);
    hasher(params)
        .map_err(|e| e.to_string())?
        .hash_password(password.as_bytes(), &salt)
        .map(|h| h.to_string())
        .map_err(|e| e.to_string())
}

/// Checks `password` against a stored hash; the hash carries its own
/// parameters.
pub fn verify_password(password: &str, hash: &str) -> bool {
    PasswordHash::new(hash)
        .map(|parsed| Argon2::default().verify_password(password.as_bytes(), &parsed).is_ok())
        .unwrap_or(false)
}
