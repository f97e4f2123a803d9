use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::value::{parse_decimal, ColumnType, Value};
use super::RelationalError;

/// Distinct-count cutoff under which a column is considered categorical.
pub const CATEGORICAL_THRESHOLD: usize = 20;
/// Distinct-count cutoff under which the full domain is kept as a sample.
pub const DOMAIN_SAMPLE_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnStats {
    pub distinct_count: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// Sorted distinct values; only present when `distinct_count <= DOMAIN_SAMPLE_CAP`.
    pub domain_sample: Option<Vec<Value>>,
    pub low_cardinality: bool,
}

impl ColumnStats {
    fn compute(ty: ColumnType, cells: impl Iterator<Item = Value>) -> Self {
        let distinct: BTreeSet<Value> = cells.collect();
        let distinct_count = distinct.len();
        let (min, max) = match ty {
            ColumnType::Num => {
                let nums = distinct.iter().filter_map(Value::as_num);
                let min = nums.clone().reduce(f64::min);
                let max = nums.reduce(f64::max);
                (min, max)
            }
            ColumnType::Str => (None, None),
        };
        Self {
            distinct_count,
            min,
            max,
            domain_sample: (distinct_count <= DOMAIN_SAMPLE_CAP)
                .then(|| distinct.into_iter().collect()),
            low_cardinality: distinct_count <= CATEGORICAL_THRESHOLD,
        }
    }

    /// Whether `value` can occur in this column, judged from the sample when
    /// available and from the numeric range otherwise.
    pub fn may_contain(&self, value: &Value) -> bool {
        if let Some(sample) = &self.domain_sample {
            return sample.binary_search(value).is_ok();
        }
        match (value, self.min, self.max) {
            (Value::Num(v), Some(lo), Some(hi)) => lo <= *v && *v <= hi,
            _ => false,
        }
    }

    pub fn range_contains(&self, value: f64) -> bool {
        matches!((self.min, self.max), (Some(lo), Some(hi)) if lo <= value && value <= hi)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Column {
    pub name: String,
    pub ty: ColumnType,
    pub stats: ColumnStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    #[serde(skip)]
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    /// Builds a table from raw string cells, inferring column types and
    /// computing statistics.
    pub fn from_records(
        name: &str,
        header: Vec<String>,
        records: Vec<Vec<String>>,
    ) -> Result<Self, RelationalError> {
        let format = |message: String| RelationalError::Format {
            table: name.to_string(),
            message,
        };
        let mut seen = BTreeSet::new();
        for h in &header {
            if h.is_empty() {
                return Err(format("empty header name".into()));
            }
            if !seen.insert(h.as_str()) {
                return Err(format(format!("duplicate header name `{h}`")));
            }
        }
        if records.is_empty() {
            return Err(RelationalError::EmptyTable(name.to_string()));
        }
        for (i, r) in records.iter().enumerate() {
            if r.len() != header.len() {
                return Err(format(format!(
                    "row {} has {} fields, expected {}",
                    i + 1,
                    r.len(),
                    header.len()
                )));
            }
        }

        let mut types = Vec::with_capacity(header.len());
        for (c, col) in header.iter().enumerate() {
            let non_empty: Vec<&str> = records
                .iter()
                .map(|r| r[c].as_str())
                .filter(|s| !s.is_empty())
                .collect();
            let numeric =
                !non_empty.is_empty() && non_empty.iter().all(|s| parse_decimal(s).is_some());
            if numeric && non_empty.len() != records.len() {
                return Err(format(format!("empty cell in numeric column `{col}`")));
            }
            types.push(if numeric {
                ColumnType::Num
            } else {
                ColumnType::Str
            });
        }

        let rows: Vec<Vec<Value>> = records
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .zip(&types)
                    .map(|(cell, ty)| match ty {
                        ColumnType::Num => Value::num(parse_decimal(&cell).unwrap_or_default()),
                        ColumnType::Str => Value::Str(cell),
                    })
                    .collect()
            })
            .collect();

        let columns = header
            .into_iter()
            .zip(&types)
            .enumerate()
            .map(|(c, (name, ty))| Column {
                name,
                ty: *ty,
                stats: ColumnStats::compute(*ty, rows.iter().map(|r| r[c].clone())),
            })
            .collect();

        Ok(Self {
            name: name.to_string(),
            columns,
            rows,
        })
    }

    pub fn from_csv_reader<R: Read>(name: &str, reader: R) -> Result<Self, RelationalError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let format = |e: csv::Error| RelationalError::Format {
            table: name.to_string(),
            message: e.to_string(),
        };
        let header: Vec<String> = rdr
            .headers()
            .map_err(format)?
            .iter()
            .map(str::to_string)
            .collect();
        let mut records = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(format)?;
            records.push(rec.iter().map(str::to_string).collect());
        }
        Self::from_records(name, header, records)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }
}

/// Immutable-after-load collection of tables.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Catalog {
    pub tables: BTreeMap<String, Table>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, table: Table) -> &Table {
        let name = table.name.clone();
        self.tables.insert(name.clone(), table);
        &self.tables[&name]
    }

    pub fn load_csv(
        &mut self,
        path: impl AsRef<Path>,
        table_name: &str,
    ) -> Result<&Table, RelationalError> {
        let path = path.as_ref();
        let io = |source| RelationalError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = std::fs::File::open(path).map_err(io)?;
        let table = Table::from_csv_reader(table_name, file)?;
        Ok(self.insert(table))
    }

    /// Loads every `*.csv` file in `dir`; table names are the file stems.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, RelationalError> {
        let dir = dir.as_ref();
        let mut catalog = Self::new();
        for path in csv_files(dir)? {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            catalog.load_csv(&path, &stem)?;
        }
        Ok(catalog)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.get(name)
    }

    pub fn column(&self, table: &str, column: &str) -> Option<&Column> {
        self.table(table)?.column(column)
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

/// Sorted list of CSV files directly inside `dir`.
pub fn csv_files(dir: &Path) -> Result<Vec<PathBuf>, RelationalError> {
    let io = |source| RelationalError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
        })
        .collect();
    files.sort();
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(csv: &str) -> Result<Table, RelationalError> {
        Table::from_csv_reader("T", csv.as_bytes())
    }

    #[test]
    fn infers_numeric_columns_and_counts_distinct() {
        let t = table("p,a,b\n1,1,4\n2,1,5\n2,2,5\n").unwrap();
        assert!(t.columns.iter().all(|c| c.ty == ColumnType::Num));
        assert_eq!(t.column("p").unwrap().stats.distinct_count, 2);
        let a = &t.column("a").unwrap().stats;
        assert_eq!((a.min, a.max), (Some(1.0), Some(2.0)));
        assert_eq!(
            a.domain_sample,
            Some(vec![Value::num(1.0), Value::num(2.0)])
        );
        assert!(a.low_cardinality);
    }

    #[test]
    fn mixed_cells_force_str() {
        let t = table("c\nx\n3\n").unwrap();
        assert_eq!(t.columns[0].ty, ColumnType::Str);
        assert_eq!(t.rows[1][0], Value::str("3"));
    }

    #[test]
    fn thirty_distinct_values_are_not_low_cardinality() {
        let mut csv = String::from("v\n");
        for i in 0..30 {
            csv.push_str(&format!("{i}\n"));
        }
        let t = table(&csv).unwrap();
        let s = &t.columns[0].stats;
        assert_eq!(s.distinct_count, 30);
        assert!(!s.low_cardinality);
        assert!(s.domain_sample.is_some());
    }

    #[test]
    fn sample_is_dropped_above_cap() {
        let mut csv = String::from("v\n");
        for i in 0..100 {
            csv.push_str(&format!("{i}\n"));
        }
        let s = table(&csv).unwrap().columns[0].stats.clone();
        assert!(s.domain_sample.is_none());
        assert!(s.may_contain(&Value::num(50.0)));
        assert!(!s.may_contain(&Value::num(500.0)));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            table("a,b\n1\n"),
            Err(RelationalError::Format { .. })
        ));
        assert!(matches!(
            table("a,a\n1,2\n"),
            Err(RelationalError::Format { .. })
        ));
        assert!(matches!(
            table("a,b\n"),
            Err(RelationalError::EmptyTable(_))
        ));
        assert!(matches!(
            table("a,b\n1,2\n,3\n"),
            Err(RelationalError::Format { .. })
        ));
    }

    #[test]
    fn empty_cells_survive_in_str_columns() {
        let t = table("s,n\nx,1\n,2\n").unwrap();
        assert_eq!(t.columns[0].ty, ColumnType::Str);
        assert_eq!(t.rows[1][0], Value::str(""));
    }

    #[test]
    fn missing_file_is_io_error() {
        let mut c = Catalog::new();
        let err = c.load_csv("/nonexistent/file.csv", "x").unwrap_err();
        assert!(matches!(err, RelationalError::Io { .. }));
    }
}
