//! JSON and table rendering. Tables print numbers with the same text as the
//! JSON, so both views always carry identical values.

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

pub struct Outcome {
    pub json: Value,
    /// Replaces the generic table when set.
    pub table: Option<String>,
    pub code: u8,
}

impl Outcome {
    pub fn new(value: &impl Serialize) -> Result<Self, CliError> {
        Ok(Self {
            json: serde_json::to_value(value).map_err(|e| CliError::Internal(e.to_string()))?,
            table: None,
            code: 0,
        })
    }

    pub fn with_code(mut self, code: u8) -> Self {
        self.code = code;
        self
    }

    pub fn with_table(mut self, table: String) -> Self {
        self.table = Some(table);
        self
    }

    pub fn render(&self, pretty: bool) -> String {
        if !pretty {
            let mut s = serde_json::to_string_pretty(&self.json).expect("values serialize");
            s.push('\n');
            return s;
        }
        if let Some(t) = &self.table {
            return t.clone();
        }
        let mut rows = Vec::new();
        flatten("", &self.json, &mut rows);
        let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let pad = width - k.chars().count();
            out.push_str(&format!("{k}{}  {v}\n", " ".repeat(pad)));
        }
        out
    }
}

fn is_matrix(map: &serde_json::Map<String, Value>) -> bool {
    map.len() == 4 && ["rows", "cols", "re", "im"].iter().all(|k| map.contains_key(*k))
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) if is_matrix(map) => {
            rows.push((prefix.to_string(), format!("{}x{} matrix (JSON only)", map["rows"], map["cols"])));
        }
        Value::Object(map) => {
            for (k, child) in map {
                flatten(&key(k), child, rows);
            }
        }
        Value::Array(items) if items.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let joined: Vec<String> = items.iter().map(scalar).collect();
            rows.push((prefix.to_string(), format!("[{}]", joined.join(", "))));
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), child, rows);
            }
        }
        other => rows.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn table_reuses_json_numbers() {
        let o = Outcome::new(&json!({"a": {"b": 0.1 + 0.2, "c": [1, 2]}, "m": {"rows": 1, "cols": 1, "re": [1.0], "im": [0.0]}}))
            .unwrap();
        let t = o.render(true);
        assert!(t.contains("a.b  0.30000000000000004"));
        assert!(t.contains("a.c  [1, 2]"));
        assert!(t.contains("1x1 matrix"));
        assert!(o.render(false).contains("0.30000000000000004"));
    }
}
