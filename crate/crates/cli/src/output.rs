//! Output files with provenance headers, written atomically.

use std::io::Write;
use std::path::{Path, PathBuf};

use ckn_core::{CknParams, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::spec::RunSpec;

pub struct Header<'a> {
    pub spec: &'a RunSpec,
    pub params: &'a CknParams,
}

impl Header<'_> {
    fn value(&self) -> Value {
        json!({
            "tool": concat!("ckn-lab ", env!("CARGO_PKG_VERSION")),
            "run_spec": self.spec,
            "params": self.params,
        })
    }

    /// `#` comment lines for CSV files: one JSON document per line.
    pub fn comments(&self) -> Vec<String> {
        let v = self.value();
        vec![
            format!("tool: {}", v["tool"].as_str().unwrap_or_default()),
            format!("run_spec: {}", v["run_spec"]),
            format!("params: {}", v["params"]),
        ]
    }
}

/// `{"header": ..., <body fields>}` pretty-printed with a trailing newline.
pub fn json_document<T: Serialize>(header: &Header, body: &T) -> Result<String> {
    let mut doc = serde_json::Map::new();
    doc.insert("header".into(), header.value());
    match serde_json::to_value(body)? {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("result".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
    text.push('\n');
    Ok(text)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(dir: &Path, name: &str, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut out = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut out)?;
        out.flush()?;
    }
    tmp.as_file().sync_all()?;
    let target = dir.join(name);
    tmp.persist(&target).map_err(|e| e.error)?;
    Ok(target)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, header: &Header, body: &T) -> Result<PathBuf> {
    let text = json_document(header, body)?;
    write_atomic(dir, name, |out| Ok(out.write_all(text.as_bytes())?))
}
