use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use vizgen_core::relational::{csv_files, Catalog, RelationalError};

/// Named catalogs loaded once at startup.
#[derive(Debug, Clone, Default)]
pub struct Datasets {
    catalogs: BTreeMap<String, Arc<Catalog>>,
}

impl Datasets {
    /// Every subdirectory of `dir` holding CSV files becomes a dataset named
    /// after the subdirectory. CSV files directly in `dir` form a dataset
    /// named after `dir` itself.
    pub fn load(dir: &Path) -> Result<Self, RelationalError> {
        let io = |source| RelationalError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut out = Self::default();
        if !csv_files(dir)?.is_empty() {
            let name = dir
                .canonicalize()
                .map_err(io)?
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or("default")
                .to_string();
            out.insert(name, Catalog::from_dir(dir)?);
        }
        let mut subdirs: Vec<_> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        subdirs.sort();
        for sub in subdirs {
            if csv_files(&sub)?.is_empty() {
                continue;
            }
            let name = sub
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default()
                .to_string();
            out.insert(name, Catalog::from_dir(&sub)?);
        }
        Ok(out)
    }

    pub fn insert(&mut self, name: impl Into<String>, catalog: Catalog) {
        self.catalogs.insert(name.into(), Arc::new(catalog));
    }

    pub fn get(&self, name: &str) -> Option<Arc<Catalog>> {
        self.catalogs.get(name).cloned()
    }

    pub fn names(&self) -> Vec<String> {
        self.catalogs.keys().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.catalogs.is_empty()
    }
}
