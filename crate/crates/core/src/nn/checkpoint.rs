//! On-disk parameter snapshots.
//!
//! A checkpoint is a directory holding `manifest.txt` (UTF-8 `key = value`
//! lines) and one `<name>.bin` blob per tensor of little-endian `f64`s in
//! row-major order. Manifest keys are `tensor.<name>` with a shape such as
//! `256x8`, or `meta.<key>` with free-form text.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::tensor::Tensor;
use crate::{Error, Result};

pub const MANIFEST: &str = "manifest.txt";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub tensors: BTreeMap<String, Tensor>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
        && !name.starts_with('.')
}

impl Checkpoint {
    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) {
        self.tensors.insert(name.into(), t);
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor> {
        self.tensors.get(name).ok_or_else(|| Error::Checkpoint(format!("missing tensor `{name}`")))
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Checkpoint(format!("missing meta key `{key}`")))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut manifest = String::from("# d2ac checkpoint\nformat = f64-le-row-major\n");
        for (k, v) in &self.meta {
            if !valid_name(k) || v.contains('\n') {
                return Err(Error::Checkpoint(format!("unserializable meta entry `{k}`")));
            }
            manifest.push_str(&format!("meta.{k} = {v}\n"));
        }
        for (name, t) in &self.tensors {
            if !valid_name(name) {
                return Err(Error::Checkpoint(format!("invalid tensor name `{name}`")));
            }
            let shape: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
            manifest.push_str(&format!("tensor.{name} = {}\n", shape.join("x")));
            let mut blob = Vec::with_capacity(t.len() * 8);
            for v in t.data() {
                blob.extend_from_slice(&v.to_le_bytes());
            }
            fs::write(dir.join(format!("{name}.bin")), blob)?;
        }
        fs::write(dir.join(MANIFEST), manifest)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST))?;
        let mut ck = Checkpoint::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Checkpoint(format!("manifest line {}: expected `key = value`", lineno + 1)))?;
            if key == "format" {
                if value != "f64-le-row-major" {
                    return Err(Error::Checkpoint(format!("unsupported format `{value}`")));
                }
            } else if let Some(k) = key.strip_prefix("meta.") {
                ck.meta.insert(k.to_string(), value.to_string());
            } else if let Some(name) = key.strip_prefix("tensor.") {
                if !valid_name(name) {
                    return Err(Error::Checkpoint(format!("invalid tensor name `{name}`")));
                }
                let shape = value
                    .split('x')
                    .map(|d| d.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Checkpoint(format!("bad shape `{value}` for `{name}`: {e}")))?;
                let blob = fs::read(dir.join(format!("{name}.bin")))?;
                let n: usize = shape.iter().product();
                if blob.len() != n * 8 {
                    return Err(Error::Checkpoint(format!(
                        "`{name}` blob has {} bytes, shape {value} needs {}",
                        blob.len(),
                        n * 8
                    )));
                }
                let data = blob.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
                ck.tensors.insert(name.to_string(), Tensor::from_vec(&shape, data)?);
            } else {
                return Err(Error::Checkpoint(format!("manifest line {}: unknown key `{key}`", lineno + 1)));
            }
        }
        Ok(ck)
    }
}
