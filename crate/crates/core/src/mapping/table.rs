use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("{table}: {source}")]
    Csv { table: String, source: csv::Error },
    #[error("{table}: row {row} has {got} fields, header has {want}")]
    Ragged { table: String, row: usize, got: usize, want: usize },
    #[error("{table}: duplicate column {column}")]
    DuplicateColumn { table: String, column: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// A named table of strings; the empty string stands for NULL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<String>) -> Self {
        Table { name: name.into(), columns, rows: Vec::new() }
    }

    pub fn with_rows(mut self, rows: Vec<Vec<String>>) -> Self {
        self.rows = rows;
        self
    }

    pub fn column_index(&self, column: &str) -> Option<usize> {
        let column = column.trim();
        self.columns.iter().position(|c| c.eq_ignore_ascii_case(column))
    }

    /// Reads RFC 4180 CSV. Header cells may be bare (`ID`) or qualified with
    /// the table name (`EARTh.ID`). A row whose field count differs from the
    /// header is an error.
    pub fn from_csv(name: &str, reader: impl Read) -> Result<Table, TableError> {
        let (table, mut skipped) = Table::read_csv(name, reader, false)?;
        match skipped.pop() {
            Some(e) => Err(e),
            None => Ok(table),
        }
    }

    /// Like [`Table::from_csv`] but drops ragged rows and returns them as
    /// warnings.
    pub fn from_csv_lenient(name: &str, reader: impl Read) -> Result<(Table, Vec<TableError>), TableError> {
        Table::read_csv(name, reader, true)
    }

    fn read_csv(name: &str, reader: impl Read, lenient: bool) -> Result<(Table, Vec<TableError>), TableError> {
        let err = |source| TableError::Csv { table: name.to_string(), source };
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
        let mut columns = Vec::new();
        for h in rdr.headers().map_err(err)? {
            let h = h.trim();
            let bare = match h.split_once('.') {
                Some((t, c)) if t.trim().eq_ignore_ascii_case(name) => c.trim(),
                _ => h,
            };
            if columns.iter().any(|c: &String| c.eq_ignore_ascii_case(bare)) {
                return Err(TableError::DuplicateColumn { table: name.to_string(), column: bare.to_string() });
            }
            columns.push(bare.to_string());
        }
        let mut rows = Vec::new();
        let mut skipped = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(err)?;
            if rec.len() != columns.len() {
                skipped.push(TableError::Ragged { table: name.to_string(), row: i + 1, got: rec.len(), want: columns.len() });
                if lenient {
                    continue;
                }
                break;
            }
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok((Table { name: name.to_string(), columns, rows }, skipped))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

/// Tables keyed by lowercased name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TableSet {
    tables: BTreeMap<String, Table>,
}

impl TableSet {
    pub fn new() -> Self {
        TableSet::default()
    }

    pub fn insert(&mut self, table: Table) {
        self.tables.insert(table.name.to_ascii_lowercase(), table);
    }

    pub fn get(&self, name: &str) -> Option<&Table> {
        self.tables.get(&name.trim().to_ascii_lowercase())
    }

    pub fn tables(&self) -> impl Iterator<Item = &Table> {
        self.tables.values()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Loads every `*.csv` in `dir`; the file stem names the table.
    pub fn load_dir(dir: &Path) -> Result<TableSet, TableError> {
        let mut set = TableSet::new();
        for (stem, p) in csv_files(dir)? {
            set.insert(Table::from_csv(&stem, std::fs::File::open(&p)?)?);
        }
        Ok(set)
    }

    /// Like [`TableSet::load_dir`] but skips ragged rows, returning them as
    /// warnings.
    pub fn load_dir_lenient(dir: &Path) -> Result<(TableSet, Vec<TableError>), TableError> {
        let mut set = TableSet::new();
        let mut warnings = Vec::new();
        for (stem, p) in csv_files(dir)? {
            let (t, w) = Table::from_csv_lenient(&stem, std::fs::File::open(&p)?)?;
            set.insert(t);
            warnings.extend(w);
        }
        Ok((set, warnings))
    }

    pub fn save_dir(&self, dir: &Path) -> Result<(), TableError> {
        std::fs::create_dir_all(dir)?;
        for t in self.tables.values() {
            std::fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv())?;
        }
        Ok(())
    }
}

fn csv_files(dir: &Path) -> Result<Vec<(String, std::path::PathBuf)>, TableError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|p| (p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string(), p))
        .collect())
}
