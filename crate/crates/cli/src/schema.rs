//! Minimal structural JSON schema checker.
//!
//! The shipped schemas use a small, fixed vocabulary: `type` (string or
//! list of strings among object/array/number/integer/string/boolean/
//! null), `required` plus `properties` for objects, and `items` for
//! arrays. Unknown keys in instances are allowed; the schemas pin the
//! report shape, not every field.

use serde_json::Value;

/// Checks `value` against `schema`, returning the path of the first
/// mismatch.
pub fn validate(schema: &Value, value: &Value) -> Result<(), String> {
    validate_at(schema, value, "$")
}

fn type_name(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn matches_type(name: &str, value: &Value) -> bool {
    match name {
        "integer" => value.as_f64().is_some_and(|v| v.fract() == 0.0),
        "number" => value.is_number(),
        other => type_name(value) == other,
    }
}

fn validate_at(schema: &Value, value: &Value, path: &str) -> Result<(), String> {
    let Some(obj) = schema.as_object() else {
        return Err(format!("{path}: schema node is not an object"));
    };
    if let Some(ty) = obj.get("type") {
        let names: Vec<&str> = match ty {
            Value::String(s) => vec![s.as_str()],
            Value::Array(list) => list.iter().filter_map(Value::as_str).collect(),
            _ => return Err(format!("{path}: malformed schema type")),
        };
        if !names.iter().any(|n| matches_type(n, value)) {
            return Err(format!(
                "{path}: expected {}, found {}",
                names.join(" or "),
                type_name(value)
            ));
        }
    }
    if let Some(required) = obj.get("required").and_then(Value::as_array) {
        let Some(map) = value.as_object() else {
            return Err(format!("{path}: required fields on a non-object"));
        };
        for name in required.iter().filter_map(Value::as_str) {
            if !map.contains_key(name) {
                return Err(format!("{path}: missing required field {name:?}"));
            }
        }
    }
    if let Some(props) = obj.get("properties").and_then(Value::as_object) {
        if let Some(map) = value.as_object() {
            for (name, sub) in props {
                if let Some(field) = map.get(name) {
                    validate_at(sub, field, &format!("{path}.{name}"))?;
                }
            }
        }
    }
    if let Some(items) = obj.get("items") {
        if let Some(list) = value.as_array() {
            for (i, item) in list.iter().enumerate() {
                validate_at(items, item, &format!("{path}[{i}]"))?;
            }
        }
    }
    Ok(())
}

/// Loads a schema shipped under the repository's `schemas/` directory.
pub fn load_shipped(name: &str) -> Result<Value, String> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas")
        .join(name);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read schema {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("schema {name} is not valid JSON: {e}"))
}
