//! CSV ingestion and emission.
//!
//! UTF-8, comma-separated, mandatory header row. Lines starting with `#`
//! (schema-version headers on emitted files) are skipped on read. Cells equal
//! to a missing token (after trimming) are masked out; below-detection markers
//! are treated as missing, not as zero.

use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use super::{ClassLabel, DataError, DataMatrix, LabeledDataset};

/// Tokens treated as "value absent" by default.
pub const DEFAULT_MISSING_TOKENS: [&str; 4] = ["", "NA", "ND", "BDL"];

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub missing_tokens: Vec<String>,
    /// When true, the first column holds row ids instead of data.
    pub row_id_column: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            missing_tokens: DEFAULT_MISSING_TOKENS.iter().map(|s| s.to_string()).collect(),
            row_id_column: false,
        }
    }
}

/// Load a numeric CSV table with the given missing tokens.
pub fn load_csv(path: impl AsRef<Path>, missing_tokens: &[String]) -> Result<DataMatrix, DataError> {
    let options = CsvOptions {
        missing_tokens: missing_tokens.to_vec(),
        ..CsvOptions::default()
    };
    load_csv_with(path, &options)
}

pub fn load_csv_with(path: impl AsRef<Path>, options: &CsvOptions) -> Result<DataMatrix, DataError> {
    let raw = read_file(path.as_ref())?;
    parse_csv(raw.as_slice(), options)
}

/// Load a table whose `label_column` holds class labels; the remaining columns
/// become the feature matrix, which must be fully observed.
pub fn load_labeled_csv(
    path: impl AsRef<Path>,
    options: &CsvOptions,
    label_column: &str,
) -> Result<LabeledDataset, DataError> {
    let raw = read_file(path.as_ref())?;
    labeled_from_matrix(parse_csv_keeping_text(raw.as_slice(), options, label_column)?)
}

fn read_file(path: &Path) -> Result<Vec<u8>, DataError> {
    match std::fs::read(path) {
        Ok(bytes) => Ok(bytes),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(DataError::FileNotFound(path.display().to_string()))
        }
        Err(e) => Err(DataError::Io {
            path: path.display().to_string(),
            source: e,
        }),
    }
}

/// Parse CSV bytes into a `DataMatrix`.
pub fn parse_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<DataMatrix, DataError> {
    let (header, rows) = read_records(reader, options)?;
    let n_cols = header.len();
    let n_rows = rows.len();
    let mut values = Array2::from_elem((n_rows, n_cols), f64::NAN);
    let mut mask = Array2::from_elem((n_rows, n_cols), false);
    let mut row_ids = Vec::with_capacity(n_rows);
    for (r, (id, fields)) in rows.into_iter().enumerate() {
        row_ids.push(id);
        for (c, field) in fields.into_iter().enumerate() {
            match parse_cell(&field, r, c, &options.missing_tokens)? {
                Some(v) => {
                    values[[r, c]] = v;
                    mask[[r, c]] = true;
                }
                None => {}
            }
        }
    }
    DataMatrix::new(values, mask, header, row_ids)
}

// Like parse_csv but holds one named column out as raw text (the labels).
struct TextColumnTable {
    matrix: DataMatrix,
    text: Vec<String>,
}

fn parse_csv_keeping_text<R: Read>(
    reader: R,
    options: &CsvOptions,
    text_column: &str,
) -> Result<TextColumnTable, DataError> {
    let (header, rows) = read_records(reader, options)?;
    let label_idx = header
        .iter()
        .position(|h| h == text_column)
        .ok_or_else(|| DataError::NoSuchColumn(text_column.to_string()))?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let n_cols = feature_names.len();
    let n_rows = rows.len();
    let mut values = Array2::from_elem((n_rows, n_cols), f64::NAN);
    let mut mask = Array2::from_elem((n_rows, n_cols), false);
    let mut row_ids = Vec::with_capacity(n_rows);
    let mut text = Vec::with_capacity(n_rows);
    for (r, (id, fields)) in rows.into_iter().enumerate() {
        row_ids.push(id);
        let mut c = 0;
        for (i, field) in fields.into_iter().enumerate() {
            if i == label_idx {
                let trimmed = field.trim();
                if is_missing(trimmed, &options.missing_tokens) {
                    return Err(DataError::MissingLabel(r));
                }
                text.push(trimmed.to_string());
                continue;
            }
            if let Some(v) = parse_cell(&field, r, c, &options.missing_tokens)? {
                values[[r, c]] = v;
                mask[[r, c]] = true;
            }
            c += 1;
        }
    }
    let matrix = DataMatrix::new(values, mask, feature_names, row_ids)?;
    Ok(TextColumnTable { matrix, text })
}

fn labeled_from_matrix(table: TextColumnTable) -> Result<LabeledDataset, DataError> {
    let labels = table
        .text
        .iter()
        .map(|s| ClassLabel::from_str(s))
        .collect::<Result<Vec<_>, _>>()?;
    LabeledDataset::new(table.matrix, labels)
}

type RawRow = (String, Vec<String>);

fn read_records<R: Read>(
    reader: R,
    options: &CsvOptions,
) -> Result<(Vec<String>, Vec<RawRow>), DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);

    let mut records = rdr.records();
    let header_record = match records.next() {
        Some(Ok(rec)) => rec,
        Some(Err(e)) => {
            return Err(DataError::Io {
                path: "<csv>".into(),
                source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
            })
        }
        None => return Err(DataError::EmptyTable),
    };
    let arity = header_record.len();
    let skip = usize::from(options.row_id_column);
    let header: Vec<String> = header_record
        .iter()
        .skip(skip)
        .map(|h| h.trim().to_string())
        .collect();

    let mut rows = Vec::new();
    for (r, record) in records.enumerate() {
        let record = record.map_err(|e| DataError::Io {
            path: "<csv>".into(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
        })?;
        if record.len() != arity {
            return Err(DataError::RaggedRow {
                row: r,
                expected: arity,
                found: record.len(),
            });
        }
        let id = if options.row_id_column {
            record.get(0).unwrap_or("").trim().to_string()
        } else {
            format!("r{r}")
        };
        let fields = record.iter().skip(skip).map(|f| f.to_string()).collect();
        rows.push((id, fields));
    }
    if rows.is_empty() {
        return Err(DataError::EmptyTable);
    }
    Ok((header, rows))
}

fn is_missing(trimmed: &str, tokens: &[String]) -> bool {
    tokens.iter().any(|t| t == trimmed)
}

fn parse_cell(
    field: &str,
    row: usize,
    col: usize,
    missing_tokens: &[String],
) -> Result<Option<f64>, DataError> {
    let trimmed = field.trim();
    if is_missing(trimmed, missing_tokens) {
        return Ok(None);
    }
    trimmed
        .parse::<f64>()
        .map(Some)
        .map_err(|_| DataError::UnparsableCell {
            row,
            col,
            token: trimmed.to_string(),
        })
}

impl DataMatrix {
    /// Serialize to CSV. Masked cells are written as `missing_token`; floats
    /// use the shortest representation that round-trips exactly.
    pub fn to_csv_string(&self, missing_token: &str, include_row_ids: bool) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = Vec::with_capacity(self.n_cols() + 1);
        if include_row_ids {
            header.push("id");
        }
        header.extend(self.col_names().iter().map(|s| s.as_str()));
        wtr.write_record(&header).expect("in-memory write");
        for r in 0..self.n_rows() {
            let mut record: Vec<String> = Vec::with_capacity(self.n_cols() + 1);
            if include_row_ids {
                record.push(self.row_ids()[r].clone());
            }
            for c in 0..self.n_cols() {
                record.push(match self.get(r, c) {
                    Some(v) => format!("{v}"),
                    None => missing_token.to_string(),
                });
            }
            wtr.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf8")
    }

    pub fn write_csv(
        &self,
        path: impl AsRef<Path>,
        missing_token: &str,
        include_row_ids: bool,
    ) -> Result<(), DataError> {
        std::fs::write(
            path.as_ref(),
            self.to_csv_string(missing_token, include_row_ids),
        )
        .map_err(|e| DataError::Io {
            path: path.as_ref().display().to_string(),
            source: e,
        })
    }
}
