use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use vizgen_core::cost::CostBreakdown;
use vizgen_core::difftree::{Binding, TreeId};
use vizgen_core::mapping::InterfaceSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceVersion {
    pub version_id: String,
    pub dataset: String,
    pub spec: InterfaceSpec,
    pub cost: CostBreakdown,
    /// Query texts exactly as submitted.
    pub query_log_snapshot: Vec<String>,
    pub created_at: DateTime<Utc>,
    pub last_bindings: BTreeMap<TreeId, Binding>,
}

/// Versions in creation order, optionally mirrored to a JSON-lines file.
/// Each line is a full version record; a later line for the same id
/// supersedes earlier ones.
#[derive(Debug, Default)]
pub struct VersionStore {
    versions: Vec<InterfaceVersion>,
    file: Option<PathBuf>,
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

impl VersionStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Replays `path` if it exists and appends every later change to it.
    pub fn open(path: &Path) -> io::Result<Self> {
        let mut store = Self {
            versions: Vec::new(),
            file: Some(path.to_path_buf()),
        };
        if !path.exists() {
            return Ok(store);
        }
        for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: InterfaceVersion = serde_json::from_str(&line)
                .map_err(|e| invalid(format!("{}:{}: {e}", path.display(), i + 1)))?;
            let next = version_id(store.versions.len() + 1);
            match store
                .versions
                .iter_mut()
                .find(|x| x.version_id == v.version_id)
            {
                Some(slot) => *slot = v,
                None if v.version_id == next => store.versions.push(v),
                None => {
                    return Err(invalid(format!(
                        "{}:{}: version {} out of sequence",
                        path.display(),
                        i + 1,
                        v.version_id
                    )))
                }
            }
        }
        Ok(store)
    }

    fn persist(&self, v: &InterfaceVersion) -> io::Result<()> {
        let Some(path) = &self.file else {
            return Ok(());
        };
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        let mut line = serde_json::to_string(v).map_err(|e| invalid(e.to_string()))?;
        line.push('\n');
        f.write_all(line.as_bytes())
    }

    pub fn create(
        &mut self,
        dataset: &str,
        spec: InterfaceSpec,
        cost: CostBreakdown,
        query_log_snapshot: Vec<String>,
    ) -> io::Result<&InterfaceVersion> {
        let v = InterfaceVersion {
            version_id: version_id(self.versions.len() + 1),
            dataset: dataset.to_string(),
            last_bindings: spec.defaults.clone(),
            spec,
            cost,
            query_log_snapshot,
            created_at: Utc::now(),
        };
        self.persist(&v)?;
        self.versions.push(v);
        Ok(self.versions.last().expect("just pushed"))
    }

    pub fn get(&self, id: &str) -> Option<&InterfaceVersion> {
        self.versions.iter().find(|v| v.version_id == id)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.versions
            .iter()
            .map(|v| v.version_id.as_str())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.versions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.versions.is_empty()
    }

    /// Returns false when the version does not exist.
    pub fn set_bindings(&mut self, id: &str, tree: TreeId, binding: Binding) -> io::Result<bool> {
        let Some(i) = self.versions.iter().position(|v| v.version_id == id) else {
            return Ok(false);
        };
        if self.versions[i].last_bindings.get(&tree) == Some(&binding) {
            return Ok(true);
        }
        self.versions[i].last_bindings.insert(tree, binding);
        self.persist(&self.versions[i])?;
        Ok(true)
    }
}

pub fn version_id(n: usize) -> String {
    format!("V{n}")
}
