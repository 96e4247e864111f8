//! Service configuration: an optional TOML file, then `MODCANVAS_*`
//! environment variables on top.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config file {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("environment variable {name}={value:?} is not valid: {reason}")]
    Env {
        name: String,
        value: String,
        reason: String,
    },
}

/// Argon2id cost parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HashParams {
    pub memory_kib: u32,
    pub iterations: u32,
    pub parallelism: u32,
}

impl Default for HashParams {
    fn default() -> Self {
        HashParams {
            memory_kib: 19 * 1024,
            iterations: 2,
            parallelism: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub host: String,
    pub port: u16,
    pub store_path: PathBuf,
    /// Locale for users who did not pick one.
    pub default_locale: String,
    /// Mutations between snapshots.
    pub snapshot_every: u64,
    pub hash: HashParams,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            host: "127.0.0.1".into(),
            port: 8080,
            store_path: PathBuf::from("modcanvas-data"),
            default_locale: "en".into(),
            snapshot_every: 256,
            hash: HashParams::default(),
        }
    }
}

impl Config {
    /// Reads `file` if given and applies overrides from `env`.
    pub fn load(
        file: Option<&Path>,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Config, ConfigError> {
        let mut config = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.to_owned(),
                    source,
                })?;
                toml::from_str(&text).map_err(|source| ConfigError::Parse {
                    path: path.to_owned(),
                    source,
                })?
            }
            None => Config::default(),
        };
        config.apply_env(env)?;
        Ok(config)
    }

    /// Loads from the process environment.
    pub fn from_process(file: Option<&Path>) -> Result<Config, ConfigError> {
        Config::load(file, |name| std::env::var(name).ok())
    }

    fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(name: &str, value: String) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e: T::Err| ConfigError::Env {
                name: name.into(),
                reason: e.to_string(),
                value,
            })
        }
        if let Some(v) = env("MODCANVAS_HOST") {
            self.host = v;
        }
        if let Some(v) = env("MODCANVAS_PORT") {
            self.port = parse("MODCANVAS_PORT", v)?;
        }
        if let Some(v) = env("MODCANVAS_STORE_PATH") {
            self.store_path = PathBuf::from(v);
        }
        if let Some(v) = env("MODCANVAS_DEFAULT_LOCALE") {
            self.default_locale = v;
        }
        if let Some(v) = env("MODCANVAS_SNAPSHOT_EVERY") {
            self.snapshot_every = parse("MODCANVAS_SNAPSHOT_EVERY", v)?;
        }
        if let Some(v) = env("MODCANVAS_HASH_MEMORY_KIB") {
            self.hash.memory_kib = parse("MODCANVAS_HASH_MEMORY_KIB", v)?;
        }
        if let Some(v) = env("MODCANVAS_HASH_ITERATIONS") {
            self.hash.iterations = parse("MODCANVAS_HASH_ITERATIONS", v)?;
        }
        if let Some(v) = env("MODCANVAS_HASH_PARALLELISM") {
            self.hash.parallelism = parse("MODCANVAS_HASH_PARALLELISM", v)?;
        }
        Ok(())
    }

    pub fn socket_addr(&self) -> Result<SocketAddr, std::net::AddrParseError> {
        format!("{}:{}", self.host, self.port).parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn file_then_environment() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("modcanvas.toml");
        std::fs::write(&path, "port = 9000\nstore_path = \"/srv/mc\"\n[hash]\niterations = 3\n").unwrap();
        let env: HashMap<&str, &str> = HashMap::from([("MODCANVAS_PORT", "9100")]);
        let config = Config::load(Some(&path), |k| env.get(k).map(|v| v.to_string())).unwrap();
        assert_eq!(config.port, 9100);
        assert_eq!(config.store_path, PathBuf::from("/srv/mc"));
        assert_eq!(config.hash.iterations, 3);
        assert_eq!(config.hash.memory_kib, HashParams::default().memory_kib);
    }

    #[test]
    fn bad_values_are_reported() {
        let err = Config::load(None, |k| (k == "MODCANVAS_PORT").then(|| "eighty".to_string()));
        assert!(matches!(err, Err(ConfigError::Env { .. })));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "colour = \"blue\"\n").unwrap();
        assert!(matches!(Config::load(Some(&path), |_| None), Err(ConfigError::Parse { .. })));
    }
}
