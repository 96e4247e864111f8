use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::semantics::SemanticsField;

/// `{machineName, majorVersion, minorVersion}` as used in dependency lists.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LibraryRef {
    pub machine_name: String,
    pub major_version: u32,
    pub minor_version: u32,
}

impl LibraryRef {
    pub fn new(machine_name: impl Into<String>, major_version: u32, minor_version: u32) -> Self {
        LibraryRef {
            machine_name: machine_name.into(),
            major_version,
            minor_version,
        }
    }

    /// Directory holding the library inside an archive, e.g. `H5P.Text-1.1`.
    pub fn dir_name(&self) -> String {
        format!(
            "{}-{}.{}",
            self.machine_name, self.major_version, self.minor_version
        )
    }

    /// Form used in content documents, e.g. `H5P.Text 1.1`.
    pub fn uber_name(&self) -> String {
        format!(
            "{} {}.{}",
            self.machine_name, self.major_version, self.minor_version
        )
    }

    /// Parses the `Machine.Name 1.2` form.
    pub fn parse_uber_name(text: &str) -> Option<LibraryRef> {
        let (name, version) = text.trim().split_once(' ')?;
        let (major, minor) = version.split_once('.')?;
        Some(LibraryRef::new(name, major.parse().ok()?, minor.parse().ok()?))
    }

    pub fn version(&self) -> (u32, u32) {
        (self.major_version, self.minor_version)
    }

    /// A library satisfies a reference when the machine names agree and its
    /// version is at least the requested one.
    pub fn is_satisfied_by(&self, library: &LibraryDefinition) -> bool {
        library.machine_name == self.machine_name
            && (library.major_version, library.minor_version) >= self.version()
    }
}

impl fmt::Display for LibraryRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.uber_name())
    }
}

/// Parsed `h5p.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct H5pManifest {
    pub title: String,
    pub language: String,
    pub main_library: String,
    pub embed_types: Vec<String>,
    pub preloaded_dependencies: Vec<LibraryRef>,
    pub license: String,
    /// Keys this model does not interpret, kept for the writer.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl H5pManifest {
    /// The dependency entry naming the main library.
    pub fn main_library_ref(&self) -> Option<&LibraryRef> {
        self.preloaded_dependencies
            .iter()
            .filter(|d| d.machine_name == self.main_library)
            .max_by_key(|d| d.version())
    }
}

/// Parsed `library.json` plus the library's `semantics.json`.
#[derive(Debug, Clone, PartialEq)]
pub struct LibraryDefinition {
    pub machine_name: String,
    pub title: String,
    pub major_version: u32,
    pub minor_version: u32,
    pub patch_version: u32,
    pub runnable: bool,
    pub preloaded_script_assets: Vec<String>,
    pub preloaded_style_assets: Vec<String>,
    pub preloaded_dependencies: Vec<LibraryRef>,
    pub semantics: Vec<SemanticsField>,
    pub extra: BTreeMap<String, Value>,
}

impl LibraryDefinition {
    pub fn library_ref(&self) -> LibraryRef {
        LibraryRef::new(&self.machine_name, self.major_version, self.minor_version)
    }

    pub fn dir_name(&self) -> String {
        self.library_ref().dir_name()
    }

    pub fn full_version(&self) -> (u32, u32, u32) {
        (self.major_version, self.minor_version, self.patch_version)
    }
}

/// In-memory model of a `.h5p` archive.
#[derive(Debug, Clone, PartialEq)]
pub struct H5pPackage {
    pub manifest: H5pManifest,
    /// Keyed by [`LibraryDefinition::dir_name`].
    pub libraries: BTreeMap<String, LibraryDefinition>,
    /// `content/content.json`.
    pub content: Value,
    /// Every other archive entry, by archive path.
    pub assets: BTreeMap<String, Vec<u8>>,
}

impl H5pPackage {
    pub fn new(manifest: H5pManifest, content: Value) -> Self {
        H5pPackage {
            manifest,
            libraries: BTreeMap::new(),
            content,
            assets: BTreeMap::new(),
        }
    }

    pub fn insert_library(&mut self, library: LibraryDefinition) {
        self.libraries.insert(library.dir_name(), library);
    }

    /// Highest-versioned library satisfying `reference`.
    pub fn resolve(&self, reference: &LibraryRef) -> Option<&LibraryDefinition> {
        self.libraries
            .values()
            .filter(|l| reference.is_satisfied_by(l))
            .max_by_key(|l| l.full_version())
    }

    pub fn main_library(&self) -> Option<&LibraryDefinition> {
        self.manifest
            .main_library_ref()
            .and_then(|r| self.resolve(r))
    }

    /// Content assets (under `content/`) keyed by their path relative to
    /// the content directory.
    pub fn content_assets(&self) -> impl Iterator<Item = (&str, &[u8])> {
        self.assets.iter().filter_map(|(path, bytes)| {
            path.strip_prefix("content/")
                .map(|rel| (rel, bytes.as_slice()))
        })
    }
}
