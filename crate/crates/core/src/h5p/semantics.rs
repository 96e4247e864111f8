//! `semantics.json` schemas and validation of content documents against them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::package::{LibraryDefinition, LibraryRef};
use super::Diagnostic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldType {
    Text,
    Number,
    Boolean,
    Group,
    List,
    Select,
    Library,
    Image,
    Video,
    Audio,
}

impl FieldType {
    pub fn name(self) -> &'static str {
        match self {
            FieldType::Text => "text",
            FieldType::Number => "number",
            FieldType::Boolean => "boolean",
            FieldType::Group => "group",
            FieldType::List => "list",
            FieldType::Select => "select",
            FieldType::Library => "library",
            FieldType::Image => "image",
            FieldType::Video => "video",
            FieldType::Audio => "audio",
        }
    }

    fn from_name(name: &str) -> Option<FieldType> {
        serde_json::from_value(Value::String(name.to_owned())).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectOption {
    pub value: Value,
    pub label: String,
}

/// Type-specific part of a semantics field.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldDetail {
    Text,
    Number {
        min: Option<f64>,
        max: Option<f64>,
    },
    Boolean,
    Group {
        fields: Vec<SemanticsField>,
    },
    /// An ordered group of `item` entries, each called `entity` in editors.
    List {
        entity: String,
        item: Box<SemanticsField>,
        min: Option<f64>,
        max: Option<f64>,
    },
    Select {
        options: Vec<SelectOption>,
    },
    /// Embedded sub-content; `options` lists allowed libraries as uber
    /// names, empty meaning any.
    Library {
        options: Vec<String>,
    },
    Image,
    Video,
    Audio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticsField {
    pub name: String,
    pub label: String,
    pub optional: bool,
    pub default: Option<Value>,
    pub detail: FieldDetail,
    /// Keys this model does not interpret (`description`, `widget`, ...).
    pub extra: BTreeMap<String, Value>,
}

impl SemanticsField {
    pub fn new(name: impl Into<String>, label: impl Into<String>, detail: FieldDetail) -> Self {
        SemanticsField {
            name: name.into(),
            label: label.into(),
            optional: false,
            default: None,
            detail,
            extra: BTreeMap::new(),
        }
    }

    pub fn optional(mut self) -> Self {
        self.optional = true;
        self
    }

    pub fn field_type(&self) -> FieldType {
        match self.detail {
            FieldDetail::Text => FieldType::Text,
            FieldDetail::Number { .. } => FieldType::Number,
            FieldDetail::Boolean => FieldType::Boolean,
            FieldDetail::Group { .. } => FieldType::Group,
            FieldDetail::List { .. } => FieldType::List,
            FieldDetail::Select { .. } => FieldType::Select,
            FieldDetail::Library { .. } => FieldType::Library,
            FieldDetail::Image => FieldType::Image,
            FieldDetail::Video => FieldType::Video,
            FieldDetail::Audio => FieldType::Audio,
        }
    }
}

/// Parses a `semantics.json` document.
pub fn parse_semantics(document: &Value) -> Result<Vec<SemanticsField>, Vec<Diagnostic>> {
    let mut diagnostics = Vec::new();
    let fields = match document.as_array() {
        Some(items) => parse_siblings(items, "", &mut diagnostics),
        None => {
            diagnostics.push(Diagnostic {
                path: "/".into(),
                message: "semantics must be an array of fields".into(),
            });
            Vec::new()
        }
    };
    if diagnostics.is_empty() {
        Ok(fields)
    } else {
        Err(diagnostics)
    }
}

fn parse_siblings(
    items: &[Value],
    parent: &str,
    diagnostics: &mut Vec<Diagnostic>,
) -> Vec<SemanticsField> {
    let mut names = BTreeSet::new();
    let mut fields = Vec::new();
    for (i, item) in items.iter().enumerate() {
        if let Some(field) = parse_field(item, &format!("{parent}/{i}"), parent, diagnostics) {
            if !names.insert(field.name.clone()) {
                diagnostics.push(Diagnostic {
                    path: format!("{parent}/{}", field.name),
                    message: "field name repeated among siblings".into(),
                });
            }
            fields.push(field);
        }
    }
    fields
}

fn parse_field(
    value: &Value,
    fallback_path: &str,
    parent: &str,
    diagnostics: &mut Vec<Diagnostic>,
) -> Option<SemanticsField> {
    let Some(object) = value.as_object() else {
        diagnostics.push(Diagnostic {
            path: fallback_path.to_owned(),
            message: "field must be an object".into(),
        });
        return None;
    };
    let mut extra: BTreeMap<String, Value> = object.clone().into_iter().collect();
    let mut take = |key: &str| extra.remove(key);

    let name = match take("name") {
        Some(Value::String(n)) if !n.is_empty() => n,
        _ => {
            diagnostics.push(Diagnostic {
                path: fallback_path.to_owned(),
                message: "field needs a non-empty name".into(),
            });
            return None;
        }
    };
    let path = format!("{parent}/{name}");
    let mut problem = |message: &str| {
        diagnostics.push(Diagnostic {
            path: path.clone(),
            message: message.to_owned(),
        })
    };

    let kind = match take("type") {
        Some(Value::String(t)) => match FieldType::from_name(&t) {
            Some(kind) => kind,
            None => {
                problem(&format!("unknown field type '{t}'"));
                return None;
            }
        },
        _ => {
            problem("field needs a type");
            return None;
        }
    };
    let label = match take("label") {
        None => String::new(),
        Some(Value::String(l)) => l,
        Some(_) => {
            problem("label must be text");
            String::new()
        }
    };
    let optional = match take("optional") {
        None => false,
        Some(Value::Bool(b)) => b,
        Some(_) => {
            problem("optional must be a boolean");
            false
        }
    };
    let default = take("default").filter(|v| !v.is_null());
    let mut bound = |key: &str| match take(key) {
        None => None,
        Some(Value::Number(n)) => n.as_f64(),
        Some(_) => {
            problem(&format!("{key} must be a number"));
            None
        }
    };
    let (min, max) = match kind {
        FieldType::Number | FieldType::List => (bound("min"), bound("max")),
        _ => (None, None),
    };

    let detail = match kind {
        FieldType::Text => FieldDetail::Text,
        FieldType::Boolean => FieldDetail::Boolean,
        FieldType::Image => FieldDetail::Image,
        FieldType::Video => FieldDetail::Video,
        FieldType::Audio => FieldDetail::Audio,
        FieldType::Number => FieldDetail::Number { min, max },
        FieldType::Group => {
            let children = match take("fields") {
                Some(Value::Array(items)) => parse_siblings(&items, &path, diagnostics),
                _ => Vec::new(),
            };
            if children.is_empty() {
                diagnostics.push(Diagnostic {
                    path: path.clone(),
                    message: "group needs at least one field".into(),
                });
            }
            FieldDetail::Group { fields: children }
        }
        FieldType::List => {
            let entity = match take("entity") {
                Some(Value::String(e)) => e,
                _ => String::new(),
            };
            if entity.trim().is_empty() {
                diagnostics.push(Diagnostic {
                    path: path.clone(),
                    message: "list needs a non-empty entity name".into(),
                });
            }
            let item = match take("field") {
                Some(item) => parse_field(&item, &format!("{path}/field"), &path, diagnostics),
                None => {
                    diagnostics.push(Diagnostic {
                        path: path.clone(),
                        message: "list needs an item field".into(),
                    });
                    None
                }
            };
            let item = item?;
            FieldDetail::List {
                entity,
                item: Box::new(item),
                min,
                max,
            }
        }
        FieldType::Select => {
            let mut options = Vec::new();
            match take("options") {
                Some(Value::Array(items)) => {
                    for option in items {
                        match option.as_object() {
                            Some(o) if o.contains_key("value") => options.push(SelectOption {
                                value: o["value"].clone(),
                                label: o
                                    .get("label")
                                    .and_then(Value::as_str)
                                    .unwrap_or_default()
                                    .to_owned(),
                            }),
                            _ => diagnostics.push(Diagnostic {
                                path: path.clone(),
                                message: "select option needs a value".into(),
                            }),
                        }
                    }
                }
                _ => diagnostics.push(Diagnostic {
                    path: path.clone(),
                    message: "select needs an options list".into(),
                }),
            }
            FieldDetail::Select { options }
        }
        FieldType::Library => {
            let options = match take("options") {
                None => Vec::new(),
                Some(Value::Array(items)) => items
                    .iter()
                    .filter_map(|o| o.as_str().map(str::to_owned))
                    .collect(),
                Some(_) => {
                    diagnostics.push(Diagnostic {
                        path: path.clone(),
                        message: "library options must be a list of library names".into(),
                    });
                    Vec::new()
                }
            };
            FieldDetail::Library { options }
        }
    };

    Some(SemanticsField {
        name,
        label,
        optional,
        default,
        detail,
        extra,
    })
}

/// Schema-level checks on an already-built field list: non-empty list
/// entities, non-empty groups, unique sibling names.
pub fn check_semantics(fields: &[SemanticsField]) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    check_siblings(fields, "", &mut diagnostics);
    diagnostics
}

fn check_siblings(fields: &[SemanticsField], parent: &str, out: &mut Vec<Diagnostic>) {
    let mut names = BTreeSet::new();
    for field in fields {
        let path = format!("{parent}/{}", field.name);
        if field.name.is_empty() {
            out.push(Diagnostic {
                path: path.clone(),
                message: "field needs a non-empty name".into(),
            });
        } else if !names.insert(&field.name) {
            out.push(Diagnostic {
                path: path.clone(),
                message: "field name repeated among siblings".into(),
            });
        }
        match &field.detail {
            FieldDetail::Group { fields } => {
                if fields.is_empty() {
                    out.push(Diagnostic {
                        path: path.clone(),
                        message: "group needs at least one field".into(),
                    });
                }
                check_siblings(fields, &path, out);
            }
            FieldDetail::List { entity, item, .. } => {
                if entity.trim().is_empty() {
                    out.push(Diagnostic {
                        path: path.clone(),
                        message: "list needs a non-empty entity name".into(),
                    });
                }
                check_siblings(std::slice::from_ref(item), &path, out);
            }
            _ => {}
        }
    }
}

/// Renders fields back to `semantics.json` form.
pub fn semantics_to_json(fields: &[SemanticsField]) -> Value {
    Value::Array(fields.iter().map(field_to_json).collect())
}

fn field_to_json(field: &SemanticsField) -> Value {
    let mut object: Map<String, Value> = field.extra.clone().into_iter().collect();
    object.insert("name".into(), Value::String(field.name.clone()));
    object.insert("type".into(), Value::String(field.field_type().name().into()));
    object.insert("label".into(), Value::String(field.label.clone()));
    if field.optional {
        object.insert("optional".into(), Value::Bool(true));
    }
    if let Some(default) = &field.default {
        object.insert("default".into(), default.clone());
    }
    let put_bound = |object: &mut Map<String, Value>, key: &str, bound: &Option<f64>| {
        // Whole bounds are written as integers, as authoring tools do.
        let number = bound.and_then(|b| {
            if b.fract() == 0.0 && b.abs() < 1e15 {
                Some(serde_json::Number::from(b as i64))
            } else {
                serde_json::Number::from_f64(b)
            }
        });
        if let Some(n) = number {
            object.insert(key.into(), Value::Number(n));
        }
    };
    match &field.detail {
        FieldDetail::Number { min, max } => {
            put_bound(&mut object, "min", min);
            put_bound(&mut object, "max", max);
        }
        FieldDetail::Group { fields } => {
            object.insert("fields".into(), semantics_to_json(fields));
        }
        FieldDetail::List {
            entity,
            item,
            min,
            max,
        } => {
            object.insert("entity".into(), Value::String(entity.clone()));
            object.insert("field".into(), field_to_json(item));
            put_bound(&mut object, "min", min);
            put_bound(&mut object, "max", max);
        }
        FieldDetail::Select { options } => {
            let options = options
                .iter()
                .map(|o| serde_json::json!({"value": o.value, "label": o.label}))
                .collect();
            object.insert("options".into(), Value::Array(options));
        }
        FieldDetail::Library { options } => {
            if !options.is_empty() {
                let options = options.iter().cloned().map(Value::String).collect();
                object.insert("options".into(), Value::Array(options));
            }
        }
        FieldDetail::Text
        | FieldDetail::Boolean
        | FieldDetail::Image
        | FieldDetail::Video
        | FieldDetail::Audio => {}
    }
    Value::Object(object)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ContentIssue {
    /// The document root is not an object.
    NotAnObject,
    MissingField,
    TypeMismatch,
    RangeViolation,
    UnknownOption,
    /// A library field names a library the schema does not allow.
    LibraryNotAllowed,
    /// A library field names a library absent from the package.
    UnknownLibrary,
}

/// A content problem at a JSON-pointer path, e.g. `/score`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContentDiagnostic {
    pub issue: ContentIssue,
    pub path: String,
    pub message: String,
}

impl fmt::Display for ContentDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}: {}", self.issue, self.path, self.message)
    }
}

/// Library lookup used to descend into embedded sub-content.
pub trait LibraryLookup {
    fn find(&self, reference: &LibraryRef) -> Option<&LibraryDefinition>;
}

impl LibraryLookup for super::H5pPackage {
    fn find(&self, reference: &LibraryRef) -> Option<&LibraryDefinition> {
        self.resolve(reference)
    }
}

/// Validates `content` against `semantics`. An empty result means the
/// content conforms. Embedded library content is checked for shape only.
pub fn validate_content(content: &Value, semantics: &[SemanticsField]) -> Vec<ContentDiagnostic> {
    let mut checker = Checker {
        lookup: None,
        out: Vec::new(),
    };
    checker.document(content, semantics, "");
    checker.out
}

/// Like [`validate_content`], but descends into embedded library content
/// using the schemas `lookup` provides.
pub fn validate_content_with(
    content: &Value,
    semantics: &[SemanticsField],
    lookup: &dyn LibraryLookup,
) -> Vec<ContentDiagnostic> {
    let mut checker = Checker {
        lookup: Some(lookup),
        out: Vec::new(),
    };
    checker.document(content, semantics, "");
    checker.out
}

struct Checker<'a> {
    lookup: Option<&'a dyn LibraryLookup>,
    out: Vec<ContentDiagnostic>,
}

impl Checker<'_> {
    fn report(&mut self, issue: ContentIssue, path: &str, message: impl Into<String>) {
        self.out.push(ContentDiagnostic {
            issue,
            path: if path.is_empty() { "/".into() } else { path.to_owned() },
            message: message.into(),
        });
    }

    fn document(&mut self, content: &Value, fields: &[SemanticsField], path: &str) {
        match content.as_object() {
            Some(object) => self.fields(object, fields, path),
            None => self.report(ContentIssue::NotAnObject, path, "content must be an object"),
        }
    }

    fn fields(&mut self, object: &Map<String, Value>, fields: &[SemanticsField], path: &str) {
        for field in fields {
            let field_path = format!("{path}/{}", field.name);
            match object.get(&field.name) {
                None | Some(Value::Null) => {
                    if !field.optional {
                        self.report(ContentIssue::MissingField, &field_path, "required field is missing");
                    }
                }
                Some(value) => self.value(value, field, &field_path),
            }
        }
    }

    fn mismatch(&mut self, path: &str, expected: &str) {
        self.report(ContentIssue::TypeMismatch, path, format!("expected {expected}"));
    }

    fn value(&mut self, value: &Value, field: &SemanticsField, path: &str) {
        match &field.detail {
            FieldDetail::Text => {
                if !value.is_string() {
                    self.mismatch(path, "text");
                }
            }
            FieldDetail::Boolean => {
                if !value.is_boolean() {
                    self.mismatch(path, "a boolean");
                }
            }
            FieldDetail::Number { min, max } => match value.as_f64() {
                None => self.mismatch(path, "a number"),
                Some(n) => self.bounds(n, *min, *max, path, "value"),
            },
            FieldDetail::Group { fields } => match value.as_object() {
                Some(object) => self.fields(object, fields, path),
                None => self.mismatch(path, "a group object"),
            },
            FieldDetail::List { item, min, max, .. } => match value.as_array() {
                Some(items) => {
                    self.bounds(items.len() as f64, *min, *max, path, "item count");
                    for (i, entry) in items.iter().enumerate() {
                        self.value(entry, item, &format!("{path}/{i}"));
                    }
                }
                None => self.mismatch(path, "a list"),
            },
            FieldDetail::Select { options } => {
                if !options.iter().any(|o| &o.value == value) {
                    self.report(ContentIssue::UnknownOption, path, format!("{value} is not an option"));
                }
            }
            FieldDetail::Library { options } => self.library(value, options, path),
            FieldDetail::Image => {
                if !has_path(value) {
                    self.mismatch(path, "an image object with a path");
                }
            }
            FieldDetail::Video | FieldDetail::Audio => {
                let ok = match value {
                    Value::Array(sources) => sources.iter().all(has_path),
                    other => has_path(other),
                };
                if !ok {
                    self.mismatch(path, "media sources with paths");
                }
            }
        }
    }

    fn bounds(&mut self, n: f64, min: Option<f64>, max: Option<f64>, path: &str, what: &str) {
        if min.is_some_and(|m| n < m) || max.is_some_and(|m| n > m) {
            let range = format!(
                "{}..{}",
                min.map(|m| m.to_string()).unwrap_or_default(),
                max.map(|m| m.to_string()).unwrap_or_default()
            );
            self.report(
                ContentIssue::RangeViolation,
                path,
                format!("{what} {n} outside {range}"),
            );
        }
    }

    fn library(&mut self, value: &Value, options: &[String], path: &str) {
        let Some(object) = value.as_object() else {
            return self.mismatch(path, "a library object");
        };
        let reference = object
            .get("library")
            .and_then(Value::as_str)
            .and_then(LibraryRef::parse_uber_name);
        let Some(reference) = reference else {
            return self.mismatch(&format!("{path}/library"), "a library name like 'H5P.Text 1.1'");
        };
        let params = object.get("params");
        if !params.is_some_and(Value::is_object) {
            return self.mismatch(&format!("{path}/params"), "a params object");
        }
        let allowed = options.is_empty()
            || options.iter().any(|o| {
                LibraryRef::parse_uber_name(o)
                    .map_or(o == &reference.machine_name, |r| r.machine_name == reference.machine_name)
            });
        if !allowed {
            self.report(
                ContentIssue::LibraryNotAllowed,
                &format!("{path}/library"),
                format!("{} is not allowed here", reference.machine_name),
            );
            return;
        }
        let Some(lookup) = self.lookup else { return };
        match lookup.find(&reference) {
            Some(library) => {
                let semantics = library.semantics.clone();
                self.document(params.unwrap(), &semantics, &format!("{path}/params"));
            }
            None => self.report(
                ContentIssue::UnknownLibrary,
                &format!("{path}/library"),
                format!("{reference} is not in the package"),
            ),
        }
    }
}

fn has_path(value: &Value) -> bool {
    value.get("path").is_some_and(Value::is_string)
}
