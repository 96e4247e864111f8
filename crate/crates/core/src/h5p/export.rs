//! Compiles a composition into a single H5P package.
//!
//! The package's main library is a generated player whose content document
//! carries the canonical graph at `/composition` and one embedded
//! sub-content per node at `/subContents`. Sub-content is copied, with its
//! media moved under `content/{nodeId}/`.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};
use thiserror::Error;

use super::package::{H5pManifest, H5pPackage, LibraryDefinition, LibraryRef};
use super::semantics::{FieldDetail, SemanticsField};
use super::{check_package, H5pError};
use crate::analysis::{validate, ValidationReport};
use crate::model::{CompositionGraph, CompositionId, ContentRef, ModuleId, NodeId};
use crate::registry::ModuleRegistry;

pub const PLAYER_MACHINE_NAME: &str = "Modcanvas.CompositionPlayer";
const PLAYER_SCRIPT: &str = "scripts/player.js";
const PLAYER_SOURCE: &str = "\
// Walks the embedded composition graph, mounting one sub-content at a time
// in the single attachment node it is given.
var H5P = H5P || {};
H5P.ModcanvasCompositionPlayer = function (params, contentId) {
  this.params = params;
  this.contentId = contentId;
};
";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExportError {
    #[error("composition {composition} has {} validation error(s)", .report.errors.len())]
    ExportBlocked {
        composition: CompositionId,
        report: ValidationReport,
    },
    #[error("node {node} references {module}, which has no package")]
    MissingPackage { node: NodeId, module: ModuleId },
    #[error("composition {0} contains itself")]
    CyclicComposition(CompositionId),
    #[error("exported package is invalid: {0}")]
    Package(#[from] H5pError),
    #[error("package does not embed a composition: {0}")]
    NotAComposition(String),
}

/// An exported package plus notes about dependency version conflicts.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportedPackage {
    pub package: H5pPackage,
    pub diagnostics: Vec<String>,
}

/// The generated player library.
pub fn player_library() -> LibraryDefinition {
    let text = |name: &str| SemanticsField::new(name, name, FieldDetail::Text);
    let group = |name: &str, fields: Vec<SemanticsField>| {
        SemanticsField::new(name, name, FieldDetail::Group { fields })
    };
    let list = |name: &str, entity: &str, item: SemanticsField| {
        SemanticsField::new(
            name,
            name,
            FieldDetail::List {
                entity: entity.into(),
                item: Box::new(item),
                min: None,
                max: None,
            },
        )
    };
    let node = group(
        "node",
        vec![text("nodeId"), text("moduleRef"), text("displayLabel").optional()],
    );
    let edge = group(
        "edge",
        vec![
            text("from"),
            text("to"),
            text("condition").optional(),
            SemanticsField::new(
                "priority",
                "priority",
                FieldDetail::Number {
                    min: Some(0.0),
                    max: None,
                },
            ),
        ],
    );
    let sub_content = group(
        "subContent",
        vec![
            text("nodeId"),
            SemanticsField::new("content", "content", FieldDetail::Library { options: vec![] }),
        ],
    );
    LibraryDefinition {
        machine_name: PLAYER_MACHINE_NAME.into(),
        title: "Composition player".into(),
        major_version: 1,
        minor_version: 0,
        patch_version: 0,
        runnable: true,
        preloaded_script_assets: vec![PLAYER_SCRIPT.into()],
        preloaded_style_assets: vec![],
        preloaded_dependencies: vec![],
        semantics: vec![
            group(
                "composition",
                vec![
                    text("compositionId"),
                    text("startNodeId"),
                    list("nodes", "node", node),
                    list("edges", "edge", edge),
                ],
            ),
            list("subContents", "subContent", sub_content),
        ],
        extra: BTreeMap::new(),
    }
}

/// Exports `graph` and, recursively, every composition nested in it.
///
/// Every graph involved must validate without errors and every atomic
/// module must have a package. When two packages need different versions
/// of a library the highest is kept, with a diagnostic if the majors differ.
pub fn export_composition(
    graph: &CompositionGraph,
    registry: &dyn ModuleRegistry,
) -> Result<ExportedPackage, ExportError> {
    let player = player_library();
    let mut builder = Builder {
        registry,
        libraries: BTreeMap::new(),
        conflicts: BTreeSet::new(),
        manifest_names: BTreeSet::new(),
        assets: BTreeMap::new(),
        stack: Vec::new(),
    };
    builder.add_library(&player, [(PLAYER_SCRIPT.to_owned(), PLAYER_SOURCE.as_bytes().to_vec())]);
    builder.manifest_names.insert(PLAYER_MACHINE_NAME.to_owned());
    let content = builder.compose(graph, "")?;

    let preloaded_dependencies = builder
        .manifest_names
        .iter()
        .map(|name| builder.libraries[name].0.library_ref())
        .collect();
    let manifest = H5pManifest {
        title: format!("Composition {}", graph.composition_id()),
        language: "und".into(),
        main_library: PLAYER_MACHINE_NAME.into(),
        embed_types: vec!["iframe".into()],
        preloaded_dependencies,
        license: "CC BY-SA".into(),
        extra: BTreeMap::new(),
    };
    let mut package = H5pPackage::new(manifest, content);
    package.assets = builder.assets;
    for (library, assets) in builder.libraries.into_values() {
        let dir = library.dir_name();
        for (path, bytes) in assets {
            package.assets.insert(format!("{dir}/{path}"), bytes);
        }
        package.insert_library(library);
    }
    check_package(&package)?;
    Ok(ExportedPackage {
        package,
        diagnostics: builder.conflicts.into_iter().collect(),
    })
}

/// The composition graph embedded in a package produced by
/// [`export_composition`].
pub fn extract_composition(package: &H5pPackage) -> Result<CompositionGraph, ExportError> {
    if package.manifest.main_library != PLAYER_MACHINE_NAME {
        return Err(ExportError::NotAComposition(format!(
            "main library is {}",
            package.manifest.main_library
        )));
    }
    let document = package
        .content
        .get("composition")
        .ok_or_else(|| ExportError::NotAComposition("no /composition in content".into()))?;
    serde_json::from_value(document.clone()).map_err(|e| ExportError::NotAComposition(e.to_string()))
}

struct Builder<'r> {
    registry: &'r dyn ModuleRegistry,
    /// Chosen library per machine name, with its assets relative to the
    /// library directory.
    libraries: BTreeMap<String, (LibraryDefinition, Vec<(String, Vec<u8>)>)>,
    conflicts: BTreeSet<String>,
    manifest_names: BTreeSet<String>,
    assets: BTreeMap<String, Vec<u8>>,
    stack: Vec<CompositionId>,
}

impl Builder<'_> {
    fn compose(&mut self, graph: &CompositionGraph, prefix: &str) -> Result<Value, ExportError> {
        let id = graph.composition_id().clone();
        if self.stack.contains(&id) {
            return Err(ExportError::CyclicComposition(id));
        }
        let report = validate(graph, self.registry);
        if report.has_errors() {
            return Err(ExportError::ExportBlocked {
                composition: id,
                report,
            });
        }
        self.stack.push(id);

        let mut sub_contents = Vec::new();
        for node in graph.nodes() {
            if node.module_ref.is_builtin() {
                continue;
            }
            let missing = || ExportError::MissingPackage {
                node: node.node_id.clone(),
                module: node.module_ref.clone(),
            };
            let module = self.registry.module(&node.module_ref).ok_or_else(missing)?;
            let node_prefix = format!("{prefix}{}/", node.node_id);
            let content = match &module.content {
                ContentRef::Atomic(content_id) => {
                    let package = self.registry.package(content_id).ok_or_else(missing)?;
                    let main = package.main_library().ok_or_else(missing)?;
                    self.absorb(package);
                    let mut params = package.content.clone();
                    let media: BTreeSet<&str> = package.content_assets().map(|(p, _)| p).collect();
                    rewrite_paths(&mut params, &media, &node_prefix);
                    for (path, bytes) in package.content_assets() {
                        self.assets
                            .insert(format!("content/{node_prefix}{path}"), bytes.to_vec());
                    }
                    json!({ "library": main.library_ref().uber_name(), "params": params })
                }
                ContentRef::Composite(composition_id) => {
                    let nested = self.registry.composition(composition_id).ok_or_else(missing)?;
                    let params = self.compose(nested, &node_prefix)?;
                    json!({
                        "library": LibraryRef::new(PLAYER_MACHINE_NAME, 1, 0).uber_name(),
                        "params": params,
                    })
                }
            };
            sub_contents.push(json!({ "nodeId": node.node_id, "content": content }));
        }

        self.stack.pop();
        Ok(json!({
            "composition": serde_json::to_value(graph).expect("graphs always serialize"),
            "subContents": sub_contents,
        }))
    }

    fn absorb(&mut self, package: &H5pPackage) {
        for library in package.libraries.values() {
            let prefix = format!("{}/", library.dir_name());
            let assets = package
                .assets
                .iter()
                .filter_map(|(path, bytes)| {
                    path.strip_prefix(&prefix).map(|rel| (rel.to_owned(), bytes.clone()))
                })
                .collect::<Vec<_>>();
            self.add_library(library, assets);
        }
        for dependency in &package.manifest.preloaded_dependencies {
            self.manifest_names.insert(dependency.machine_name.clone());
        }
    }

    fn add_library(
        &mut self,
        library: &LibraryDefinition,
        assets: impl IntoIterator<Item = (String, Vec<u8>)>,
    ) {
        if let Some((kept, _)) = self.libraries.get(&library.machine_name) {
            if kept.major_version != library.major_version {
                let (low, high) = if kept.full_version() < library.full_version() {
                    (kept.library_ref(), library.library_ref())
                } else {
                    (library.library_ref(), kept.library_ref())
                };
                self.conflicts.insert(format!(
                    "{}: major versions differ ({} and {}), using {}",
                    library.machine_name,
                    low.uber_name(),
                    high.uber_name(),
                    high.uber_name()
                ));
            }
            if kept.full_version() >= library.full_version() {
                return;
            }
        }
        self.libraries.insert(
            library.machine_name.clone(),
            (library.clone(), assets.into_iter().collect()),
        );
    }
}

/// Prefixes every `path` value that names one of the package's own media
/// files, leaving external URLs untouched.
fn rewrite_paths(value: &mut Value, media: &BTreeSet<&str>, prefix: &str) {
    match value {
        Value::Object(object) => {
            if let Some(Value::String(path)) = object.get_mut("path") {
                if media.contains(path.as_str()) {
                    *path = format!("{prefix}{path}");
                }
            }
            for child in object.values_mut() {
                rewrite_paths(child, media, prefix);
            }
        }
        Value::Array(items) => {
            for item in items {
                rewrite_paths(item, media, prefix);
            }
        }
        _ => {}
    }
}
