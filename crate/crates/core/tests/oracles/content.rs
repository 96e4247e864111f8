//! A direct walk of content against raw semantics JSON. Covers the scalar,
//! group, list, select and image field types and reports `(kind, path)`
//! pairs, where kind is one of `missing`, `type`, `range`, `option`.

use serde_json::Value;

pub fn check(content: &Value, semantics: &Value) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    match content.as_object() {
        Some(_) => fields(content, semantics.as_array().unwrap(), "", &mut out),
        None => out.push(("type", "/".to_string())),
    }
    out.sort();
    out
}

fn fields(object: &Value, schema: &[Value], path: &str, out: &mut Vec<(&'static str, String)>) {
    for field in schema {
        let name = field["name"].as_str().unwrap();
        let here = format!("{path}/{name}");
        let value = &object[name];
        if value.is_null() {
            if field["optional"] != Value::Bool(true) {
                out.push(("missing", here));
            }
        } else {
            one(value, field, &here, out);
        }
    }
}

fn out_of_range(n: f64, field: &Value) -> bool {
    field["min"].as_f64().is_some_and(|m| n < m) || field["max"].as_f64().is_some_and(|m| n > m)
}

fn one(value: &Value, field: &Value, path: &str, out: &mut Vec<(&'static str, String)>) {
    match field["type"].as_str().unwrap() {
        "text" if !value.is_string() => out.push(("type", path.into())),
        "boolean" if !value.is_boolean() => out.push(("type", path.into())),
        "number" => match value.as_f64() {
            None => out.push(("type", path.into())),
            Some(n) if out_of_range(n, field) => out.push(("range", path.into())),
            Some(_) => {}
        },
        "group" => {
            if value.is_object() {
                fields(value, field["fields"].as_array().unwrap(), path, out);
            } else {
                out.push(("type", path.into()));
            }
        }
        "list" => match value.as_array() {
            None => out.push(("type", path.into())),
            Some(items) => {
                if out_of_range(items.len() as f64, field) {
                    out.push(("range", path.into()));
                }
                for (i, item) in items.iter().enumerate() {
                    one(item, &field["field"], &format!("{path}/{i}"), out);
                }
            }
        },
        "select" => {
            let options = field["options"].as_array().unwrap();
            if !options.iter().any(|o| &o["value"] == value) {
                out.push(("option", path.into()));
            }
        }
        "image" if !value["path"].is_string() => out.push(("type", path.into())),
        _ => {}
    }
}
