//! `.h5p` zip archives to and from [`H5pPackage`].

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Cursor, Read, Write};

use serde_json::{Map, Value};
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use super::package::{H5pManifest, H5pPackage, LibraryDefinition, LibraryRef};
use super::semantics::{check_semantics, parse_semantics, semantics_to_json, validate_content_with};
use super::{Diagnostic, H5pError};

const MANIFEST: &str = "h5p.json";
const CONTENT: &str = "content/content.json";
const LIBRARY_FILE: &str = "library.json";
const SEMANTICS_FILE: &str = "semantics.json";

/// Parses a `.h5p` archive and checks every package invariant.
///
/// Entries other than the manifest, the content document and library
/// definitions are kept verbatim in [`H5pPackage::assets`].
pub fn read_package(bytes: &[u8]) -> Result<H5pPackage, H5pError> {
    let mut entries = read_entries(bytes)?;

    let manifest_bytes = entries.remove(MANIFEST).ok_or(H5pError::MissingManifest)?;
    let manifest = parse_manifest(&manifest_bytes)?;

    let content = match entries.remove(CONTENT) {
        Some(bytes) => serde_json::from_slice(&bytes).map_err(|e| H5pError::MalformedManifest {
            file: CONTENT.into(),
            diagnostics: vec![Diagnostic {
                path: "/".into(),
                message: e.to_string(),
            }],
        })?,
        None => {
            return Err(H5pError::MalformedManifest {
                file: CONTENT.into(),
                diagnostics: vec![Diagnostic {
                    path: "/".into(),
                    message: "content document is missing".into(),
                }],
            })
        }
    };

    let library_dirs: Vec<String> = entries
        .keys()
        .filter_map(|name| name.strip_suffix(&format!("/{LIBRARY_FILE}")))
        .filter(|dir| !dir.contains('/'))
        .map(str::to_owned)
        .collect();

    let mut package = H5pPackage::new(manifest, content);
    for dir in library_dirs {
        let library_path = format!("{dir}/{LIBRARY_FILE}");
        let semantics_path = format!("{dir}/{SEMANTICS_FILE}");
        let library_bytes = entries.remove(&library_path).unwrap_or_default();
        let semantics_bytes = entries.remove(&semantics_path);
        let library = parse_library(&library_path, &library_bytes, &semantics_path, semantics_bytes.as_deref())?;
        if package.libraries.contains_key(&library.dir_name()) {
            return Err(H5pError::MalformedManifest {
                file: library_path,
                diagnostics: vec![Diagnostic {
                    path: "/machineName".into(),
                    message: format!("library {} is defined twice", library.library_ref()),
                }],
            });
        }
        package.insert_library(library);
    }
    package.assets = entries;

    check_package(&package)?;
    Ok(package)
}

/// Serializes `package` into a deterministic archive: fixed entry order
/// and timestamps, so equal packages give byte-identical output.
pub fn write_package(package: &H5pPackage) -> Result<Vec<u8>, H5pError> {
    check_package(package)?;

    let mut writer = ZipWriter::new(Cursor::new(Vec::new()));
    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(DateTime::default())
        .unix_permissions(0o644);
    let mut put = |name: &str, bytes: &[u8]| {
        writer
            .start_file(name, options)
            .and_then(|_| writer.write_all(bytes).map_err(Into::into))
            .expect("writing to memory cannot fail");
    };

    let mut written: BTreeSet<&str> = BTreeSet::new();
    put(MANIFEST, &pretty(&manifest_to_json(&package.manifest)));
    put(CONTENT, &pretty(&package.content));
    for (name, bytes) in package.assets.iter().filter(|(n, _)| n.starts_with("content/")) {
        put(name, bytes);
        written.insert(name);
    }
    for (dir, library) in &package.libraries {
        put(&format!("{dir}/{LIBRARY_FILE}"), &pretty(&library_to_json(library)));
        put(
            &format!("{dir}/{SEMANTICS_FILE}"),
            &pretty(&semantics_to_json(&library.semantics)),
        );
        let prefix = format!("{dir}/");
        for (name, bytes) in package.assets.iter().filter(|(n, _)| n.starts_with(&prefix)) {
            put(name, bytes);
            written.insert(name);
        }
    }
    for (name, bytes) in &package.assets {
        if !written.contains(name.as_str()) {
            put(name, bytes);
        }
    }
    drop(put);
    Ok(writer
        .finish()
        .expect("finishing an in-memory archive cannot fail")
        .into_inner())
}

/// Checks the package invariants: well-formed names and paths, every
/// dependency resolving inside the package, well-formed semantics, and
/// content conforming to the main library's semantics.
pub fn check_package(package: &H5pPackage) -> Result<(), H5pError> {
    check_manifest(&package.manifest)?;

    for (dir, library) in &package.libraries {
        let file = format!("{dir}/{LIBRARY_FILE}");
        let mut diagnostics = library_diagnostics(library);
        if dir != &library.dir_name() {
            diagnostics.push(Diagnostic {
                path: "/".into(),
                message: format!("stored under {dir} but named {}", library.dir_name()),
            });
        }
        if !diagnostics.is_empty() {
            return Err(H5pError::MalformedManifest { file, diagnostics });
        }
        let schema = check_semantics(&library.semantics);
        if !schema.is_empty() {
            return Err(H5pError::SemanticsViolation {
                file: format!("{dir}/{SEMANTICS_FILE}"),
                diagnostics: schema,
            });
        }
    }

    for dependency in &package.manifest.preloaded_dependencies {
        if package.resolve(dependency).is_none() {
            return Err(H5pError::DanglingDependency {
                file: MANIFEST.into(),
                dependency: dependency.clone(),
            });
        }
    }
    for (dir, library) in &package.libraries {
        for dependency in &library.preloaded_dependencies {
            if package.resolve(dependency).is_none() {
                return Err(H5pError::DanglingDependency {
                    file: format!("{dir}/{LIBRARY_FILE}"),
                    dependency: dependency.clone(),
                });
            }
        }
    }

    for name in package.assets.keys() {
        if !is_safe_path(name) || is_reserved(name, package) {
            return Err(H5pError::UnsafePath(name.clone()));
        }
    }

    let main = package.main_library().ok_or_else(|| H5pError::DanglingDependency {
        file: MANIFEST.into(),
        dependency: LibraryRef::new(&package.manifest.main_library, 0, 0),
    })?;
    let violations = validate_content_with(&package.content, &main.semantics, package);
    if !violations.is_empty() {
        return Err(H5pError::SemanticsViolation {
            file: CONTENT.into(),
            diagnostics: violations
                .into_iter()
                .map(|d| Diagnostic {
                    path: d.path,
                    message: format!("{:?}: {}", d.issue, d.message),
                })
                .collect(),
        });
    }
    Ok(())
}

fn read_entries(bytes: &[u8]) -> Result<BTreeMap<String, Vec<u8>>, H5pError> {
    let mut archive =
        ZipArchive::new(Cursor::new(bytes)).map_err(|e| H5pError::NotAnArchive(e.to_string()))?;
    let mut entries = BTreeMap::new();
    for index in 0..archive.len() {
        let mut file = archive
            .by_index(index)
            .map_err(|e| H5pError::NotAnArchive(e.to_string()))?;
        if file.is_dir() {
            continue;
        }
        let name = file.name().to_owned();
        if !is_safe_path(&name) {
            return Err(H5pError::UnsafePath(name));
        }
        let mut data = Vec::with_capacity(file.size().min(1 << 20) as usize);
        file.read_to_end(&mut data)
            .map_err(|e| H5pError::NotAnArchive(format!("{name}: {e}")))?;
        entries.insert(name, data);
    }
    Ok(entries)
}

/// Relative, forward-slash, with no empty, `.` or `..` segments.
fn is_safe_path(path: &str) -> bool {
    !path.is_empty()
        && !path.contains('\\')
        && !path.contains(':')
        && path
            .split('/')
            .all(|segment| !segment.is_empty() && segment != "." && segment != "..")
}

/// Asset names that would be read back as something other than an asset.
fn is_reserved(name: &str, package: &H5pPackage) -> bool {
    if name == MANIFEST || name == CONTENT {
        return true;
    }
    match name.split_once('/') {
        Some((dir, file)) => {
            file == LIBRARY_FILE || (file == SEMANTICS_FILE && package.libraries.contains_key(dir))
        }
        None => false,
    }
}

pub(crate) fn is_machine_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '-')
}

fn pretty(value: &Value) -> Vec<u8> {
    serde_json::to_vec_pretty(value).expect("JSON values always serialize")
}

fn check_manifest(manifest: &H5pManifest) -> Result<(), H5pError> {
    let mut diagnostics = Vec::new();
    if !is_machine_name(&manifest.main_library) {
        diagnostics.push(Diagnostic {
            path: "/mainLibrary".into(),
            message: format!("{:?} is not a machine name", manifest.main_library),
        });
    }
    if manifest.main_library_ref().is_none() {
        diagnostics.push(Diagnostic {
            path: "/mainLibrary".into(),
            message: "main library is not among the preloaded dependencies".into(),
        });
    }
    for (i, dependency) in manifest.preloaded_dependencies.iter().enumerate() {
        if !is_machine_name(&dependency.machine_name) {
            diagnostics.push(Diagnostic {
                path: format!("/preloadedDependencies/{i}/machineName"),
                message: format!("{:?} is not a machine name", dependency.machine_name),
            });
        }
    }
    if diagnostics.is_empty() {
        Ok(())
    } else {
        Err(H5pError::MalformedManifest {
            file: MANIFEST.into(),
            diagnostics,
        })
    }
}

fn library_diagnostics(library: &LibraryDefinition) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    if !is_machine_name(&library.machine_name) {
        diagnostics.push(Diagnostic {
            path: "/machineName".into(),
            message: format!("{:?} is not a machine name", library.machine_name),
        });
    }
    let assets = [
        ("preloadedJs", &library.preloaded_script_assets),
        ("preloadedCss", &library.preloaded_style_assets),
    ];
    for (key, paths) in assets {
        for (i, path) in paths.iter().enumerate() {
            if !is_safe_path(path) {
                diagnostics.push(Diagnostic {
                    path: format!("/{key}/{i}/path"),
                    message: format!("{path:?} is not a relative archive path"),
                });
            }
        }
    }
    for (i, dependency) in library.preloaded_dependencies.iter().enumerate() {
        if !is_machine_name(&dependency.machine_name) {
            diagnostics.push(Diagnostic {
                path: format!("/preloadedDependencies/{i}/machineName"),
                message: format!("{:?} is not a machine name", dependency.machine_name),
            });
        }
    }
    diagnostics
}

/// Field-by-field reader over a JSON object that collects diagnostics
/// instead of stopping at the first problem.
struct Fields {
    rest: Map<String, Value>,
    diagnostics: Vec<Diagnostic>,
}

impl Fields {
    fn new(value: Value) -> Result<Self, Vec<Diagnostic>> {
        match value {
            Value::Object(rest) => Ok(Fields {
                rest,
                diagnostics: Vec::new(),
            }),
            _ => Err(vec![Diagnostic {
                path: "/".into(),
                message: "expected a JSON object".into(),
            }]),
        }
    }

    fn problem(&mut self, key: &str, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            path: format!("/{key}"),
            message: message.into(),
        });
    }

    fn string(&mut self, key: &str, required: bool) -> String {
        match self.rest.remove(key) {
            Some(Value::String(s)) => s,
            None if !required => String::new(),
            None => {
                self.problem(key, "required field is missing");
                String::new()
            }
            Some(_) => {
                self.problem(key, "expected text");
                String::new()
            }
        }
    }

    fn version(&mut self, key: &str) -> u32 {
        match self.rest.remove(key) {
            Some(value) => match value.as_u64().and_then(|v| u32::try_from(v).ok()) {
                Some(v) => v,
                None => {
                    self.problem(key, "expected a non-negative integer");
                    0
                }
            },
            None => {
                self.problem(key, "required field is missing");
                0
            }
        }
    }

    fn flag(&mut self, key: &str) -> bool {
        match self.rest.remove(key) {
            None => false,
            Some(Value::Bool(b)) => b,
            Some(Value::Number(n)) if n.as_u64() == Some(0) => false,
            Some(Value::Number(n)) if n.as_u64() == Some(1) => true,
            Some(_) => {
                self.problem(key, "expected a boolean or 0/1");
                false
            }
        }
    }

    fn strings(&mut self, key: &str, required: bool) -> Vec<String> {
        match self.rest.remove(key) {
            None if !required => Vec::new(),
            None => {
                self.problem(key, "required field is missing");
                Vec::new()
            }
            Some(Value::Array(items)) => {
                let mut out = Vec::new();
                for (i, item) in items.into_iter().enumerate() {
                    match item {
                        Value::String(s) => out.push(s),
                        _ => self.problem(&format!("{key}/{i}"), "expected text"),
                    }
                }
                out
            }
            Some(_) => {
                self.problem(key, "expected a list");
                Vec::new()
            }
        }
    }

    /// `[{"path": "..."}]`, the shape of `preloadedJs` and `preloadedCss`.
    fn paths(&mut self, key: &str) -> Vec<String> {
        match self.rest.remove(key) {
            None => Vec::new(),
            Some(Value::Array(items)) => {
                let mut out = Vec::new();
                for (i, item) in items.into_iter().enumerate() {
                    match item.get("path").and_then(Value::as_str) {
                        Some(path) => out.push(path.to_owned()),
                        None => self.problem(&format!("{key}/{i}/path"), "expected text"),
                    }
                }
                out
            }
            Some(_) => {
                self.problem(key, "expected a list");
                Vec::new()
            }
        }
    }

    fn dependencies(&mut self, key: &str, required: bool) -> Vec<LibraryRef> {
        let items = match self.rest.remove(key) {
            None if !required => return Vec::new(),
            None => {
                self.problem(key, "required field is missing");
                return Vec::new();
            }
            Some(Value::Array(items)) => items,
            Some(_) => {
                self.problem(key, "expected a list");
                return Vec::new();
            }
        };
        let mut out = Vec::new();
        for (i, item) in items.into_iter().enumerate() {
            let prefix = format!("{key}/{i}");
            match Fields::new(item) {
                Ok(mut inner) => {
                    let reference = LibraryRef {
                        machine_name: inner.string("machineName", true),
                        major_version: inner.version("majorVersion"),
                        minor_version: inner.version("minorVersion"),
                    };
                    if inner.diagnostics.is_empty() {
                        out.push(reference);
                    }
                    for d in inner.diagnostics {
                        self.diagnostics.push(Diagnostic {
                            path: format!("/{prefix}{}", d.path),
                            message: d.message,
                        });
                    }
                }
                Err(_) => self.problem(&prefix, "expected a library reference object"),
            }
        }
        out
    }

    fn finish<T>(self, file: &str, value: T) -> Result<(T, Map<String, Value>), H5pError> {
        if self.diagnostics.is_empty() {
            Ok((value, self.rest))
        } else {
            Err(H5pError::MalformedManifest {
                file: file.into(),
                diagnostics: self.diagnostics,
            })
        }
    }
}

fn json_object(file: &str, bytes: &[u8]) -> Result<Fields, H5pError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| H5pError::MalformedManifest {
        file: file.into(),
        diagnostics: vec![Diagnostic {
            path: "/".into(),
            message: e.to_string(),
        }],
    })?;
    Fields::new(value).map_err(|diagnostics| H5pError::MalformedManifest {
        file: file.into(),
        diagnostics,
    })
}

fn parse_manifest(bytes: &[u8]) -> Result<H5pManifest, H5pError> {
    let mut fields = json_object(MANIFEST, bytes)?;
    let mut manifest = H5pManifest {
        title: fields.string("title", true),
        language: fields.string("language", true),
        main_library: fields.string("mainLibrary", true),
        embed_types: fields.strings("embedTypes", true),
        preloaded_dependencies: fields.dependencies("preloadedDependencies", true),
        license: fields.string("license", false),
        extra: BTreeMap::new(),
    };
    let (_, rest) = fields.finish(MANIFEST, ())?;
    manifest.extra = rest.into_iter().collect();
    Ok(manifest)
}

fn manifest_to_json(manifest: &H5pManifest) -> Value {
    let mut object: Map<String, Value> = manifest.extra.clone().into_iter().collect();
    object.insert("title".into(), manifest.title.clone().into());
    object.insert("language".into(), manifest.language.clone().into());
    object.insert("mainLibrary".into(), manifest.main_library.clone().into());
    object.insert("embedTypes".into(), manifest.embed_types.clone().into());
    object.insert(
        "preloadedDependencies".into(),
        serde_json::to_value(&manifest.preloaded_dependencies).expect("references serialize"),
    );
    if !manifest.license.is_empty() {
        object.insert("license".into(), manifest.license.clone().into());
    }
    Value::Object(object)
}

fn parse_library(
    file: &str,
    bytes: &[u8],
    semantics_file: &str,
    semantics: Option<&[u8]>,
) -> Result<LibraryDefinition, H5pError> {
    let mut fields = json_object(file, bytes)?;
    let mut library = LibraryDefinition {
        machine_name: fields.string("machineName", true),
        title: fields.string("title", true),
        major_version: fields.version("majorVersion"),
        minor_version: fields.version("minorVersion"),
        patch_version: fields.version("patchVersion"),
        runnable: fields.flag("runnable"),
        preloaded_script_assets: fields.paths("preloadedJs"),
        preloaded_style_assets: fields.paths("preloadedCss"),
        preloaded_dependencies: fields.dependencies("preloadedDependencies", false),
        semantics: Vec::new(),
        extra: BTreeMap::new(),
    };
    let (_, rest) = fields.finish(file, ())?;
    library.extra = rest.into_iter().collect();

    let diagnostics = library_diagnostics(&library);
    if !diagnostics.is_empty() {
        return Err(H5pError::MalformedManifest {
            file: file.into(),
            diagnostics,
        });
    }

    if let Some(bytes) = semantics {
        let document: Value =
            serde_json::from_slice(bytes).map_err(|e| H5pError::SemanticsViolation {
                file: semantics_file.into(),
                diagnostics: vec![Diagnostic {
                    path: "/".into(),
                    message: e.to_string(),
                }],
            })?;
        library.semantics =
            parse_semantics(&document).map_err(|diagnostics| H5pError::SemanticsViolation {
                file: semantics_file.into(),
                diagnostics,
            })?;
    }
    Ok(library)
}

fn library_to_json(library: &LibraryDefinition) -> Value {
    let paths = |list: &[String]| -> Value {
        list.iter()
            .map(|p| serde_json::json!({ "path": p }))
            .collect::<Vec<_>>()
            .into()
    };
    let mut object: Map<String, Value> = library.extra.clone().into_iter().collect();
    object.insert("machineName".into(), library.machine_name.clone().into());
    object.insert("title".into(), library.title.clone().into());
    object.insert("majorVersion".into(), library.major_version.into());
    object.insert("minorVersion".into(), library.minor_version.into());
    object.insert("patchVersion".into(), library.patch_version.into());
    object.insert("runnable".into(), u8::from(library.runnable).into());
    if !library.preloaded_script_assets.is_empty() {
        object.insert("preloadedJs".into(), paths(&library.preloaded_script_assets));
    }
    if !library.preloaded_style_assets.is_empty() {
        object.insert("preloadedCss".into(), paths(&library.preloaded_style_assets));
    }
    if !library.preloaded_dependencies.is_empty() {
        object.insert(
            "preloadedDependencies".into(),
            serde_json::to_value(&library.preloaded_dependencies).expect("references serialize"),
        );
    }
    Value::Object(object)
}
