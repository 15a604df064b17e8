//! Dataset model, column roles and CSV ingestion.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Which CSV columns play which part in the target transformations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ColumnRoles {
    pub target: String,
    #[serde(default)]
    pub subject: Option<String>,
    #[serde(default)]
    pub time: Option<String>,
    #[serde(default)]
    pub frame: Option<String>,
    #[serde(default)]
    pub trial: Option<String>,
    #[serde(default)]
    pub context: Vec<String>,
    #[serde(default)]
    pub price_index: Option<String>,
}

impl ColumnRoles {
    pub fn new(target: impl Into<String>) -> Self {
        Self {
            target: target.into(),
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let roles: ColumnRoles =
            serde_json::from_str(text).map_err(|e| Error::InvalidRoles(e.to_string()))?;
        roles.validate()?;
        Ok(roles)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target.is_empty() {
            return Err(Error::InvalidRoles("target column name is empty".into()));
        }
        if self.named().skip(1).any(|(_, c)| c == self.target) {
            return Err(Error::InvalidRoles(format!(
                "target column \"{}\" is also assigned another role",
                self.target
            )));
        }
        Ok(())
    }

    /// Every `(role, column)` pair, target first.
    pub fn named(&self) -> impl Iterator<Item = (&'static str, &str)> {
        let singles = [
            ("target", Some(self.target.as_str())),
            ("subject", self.subject.as_deref()),
            ("time", self.time.as_deref()),
            ("frame", self.frame.as_deref()),
            ("trial", self.trial.as_deref()),
            ("price_index", self.price_index.as_deref()),
        ];
        singles
            .into_iter()
            .filter_map(|(r, c)| c.map(|c| (r, c)))
            .chain(self.context.iter().map(|c| ("context", c.as_str())))
    }

    fn is_key_column(&self, name: &str) -> bool {
        [&self.subject, &self.trial, &self.time]
            .iter()
            .any(|r| r.as_deref() == Some(name))
    }
}

/// Per-row side information a contextual transform consumes next to `y`.
#[derive(Debug, Clone, Copy)]
pub enum Side<'a> {
    None,
    Keys(&'a [String]),
    Values(&'a [f64]),
    Matrix(&'a Matrix),
}

impl Side<'_> {
    pub fn len(&self) -> Option<usize> {
        match self {
            Side::None => None,
            Side::Keys(k) => Some(k.len()),
            Side::Values(v) => Some(v.len()),
            Side::Matrix(m) => Some(m.nrows()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    target: Vec<f64>,
    column_names: Vec<String>,
    roles: ColumnRoles,
    subject: Option<Vec<String>>,
    trial: Option<Vec<String>>,
    time: Option<Vec<String>>,
    frame: Option<Vec<f64>>,
    price_index: Option<Vec<f64>>,
    context: Option<Matrix>,
    dropped_rows: usize,
    source_rows: Vec<usize>,
}

impl Dataset {
    /// In-memory dataset without role columns. The target is named `"y"`.
    pub fn new(features: Matrix, target: Vec<f64>, column_names: Vec<String>) -> Result<Self> {
        let n = target.len();
        if n == 0 {
            return Err(Error::NoRows { dropped: 0 });
        }
        if features.nrows() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: features.nrows(),
            });
        }
        if column_names.len() != features.ncols() {
            return Err(Error::LengthMismatch {
                expected: features.ncols(),
                got: column_names.len(),
            });
        }
        if let Some(i) = target.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(i, "non-finite target"));
        }
        if features.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature value".into()));
        }
        Ok(Self {
            features,
            target,
            column_names,
            roles: ColumnRoles::new("y"),
            subject: None,
            trial: None,
            time: None,
            frame: None,
            price_index: None,
            context: None,
            dropped_rows: 0,
            source_rows: (0..n).collect(),
        })
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                got: len,
            });
        }
        Ok(())
    }

    pub fn with_subject(mut self, keys: Vec<String>) -> Result<Self> {
        self.check_len(keys.len())?;
        self.roles.subject = Some("subject".into());
        self.subject = Some(keys);
        Ok(self)
    }

    pub fn with_trial(mut self, keys: Vec<String>) -> Result<Self> {
        self.check_len(keys.len())?;
        self.roles.trial = Some("trial".into());
        self.trial = Some(keys);
        Ok(self)
    }

    pub fn with_time(mut self, keys: Vec<String>) -> Result<Self> {
        self.check_len(keys.len())?;
        self.roles.time = Some("time".into());
        self.time = Some(keys);
        Ok(self)
    }

    pub fn with_frame(mut self, frame: Vec<f64>) -> Result<Self> {
        self.check_len(frame.len())?;
        self.roles.frame = Some("frame".into());
        self.frame = Some(frame);
        Ok(self)
    }

    pub fn with_price_index(mut self, index: Vec<f64>) -> Result<Self> {
        self.check_len(index.len())?;
        self.roles.price_index = Some("price_index".into());
        self.price_index = Some(index);
        Ok(self)
    }

    pub fn with_context(mut self, context: Matrix) -> Result<Self> {
        self.check_len(context.nrows())?;
        self.roles.context = (0..context.ncols())
            .map(|j| format!("context{j}"))
            .collect();
        self.context = Some(context);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.target.len()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn roles(&self) -> &ColumnRoles {
        &self.roles
    }

    pub fn subject(&self) -> Option<&[String]> {
        self.subject.as_deref()
    }

    pub fn trial(&self) -> Option<&[String]> {
        self.trial.as_deref()
    }

    pub fn time(&self) -> Option<&[String]> {
        self.time.as_deref()
    }

    pub fn frame(&self) -> Option<&[f64]> {
        self.frame.as_deref()
    }

    pub fn price_index(&self) -> Option<&[f64]> {
        self.price_index.as_deref()
    }

    pub fn context(&self) -> Option<&Matrix> {
        self.context.as_ref()
    }

    /// Rows dropped during ingestion because of missing or unparseable values.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    /// Zero-based data-row numbers (header excluded) of the rows that were kept.
    pub fn source_rows(&self) -> &[usize] {
        &self.source_rows
    }

    /// Returns a copy with the target replaced; used to re-score perturbed data.
    pub fn with_target(&self, target: Vec<f64>) -> Result<Self> {
        self.check_len(target.len())?;
        let mut out = self.clone();
        out.target = target;
        Ok(out)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        let pick_s = |v: &Option<Vec<String>>| {
            v.as_ref()
                .map(|v| indices.iter().map(|&i| v[i].clone()).collect())
        };
        let pick_f =
            |v: &Option<Vec<f64>>| v.as_ref().map(|v| indices.iter().map(|&i| v[i]).collect());
        Dataset {
            features: self.features.select_rows(indices),
            target: indices.iter().map(|&i| self.target[i]).collect(),
            column_names: self.column_names.clone(),
            roles: self.roles.clone(),
            subject: pick_s(&self.subject),
            trial: pick_s(&self.trial),
            time: pick_s(&self.time),
            frame: pick_f(&self.frame),
            price_index: pick_f(&self.price_index),
            context: self.context.as_ref().map(|c| c.select_rows(indices)),
            dropped_rows: 0,
            source_rows: indices.iter().map(|&i| self.source_rows[i]).collect(),
        }
    }
}

const MISSING_MARKERS: [&str; 8] = ["", "NA", "N/A", "NaN", "nan", "?", "null", "NULL"];

fn is_missing(cell: &str) -> bool {
    MISSING_MARKERS.contains(&cell.trim())
}

fn parse_number(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    if is_missing(cell) {
        return None;
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a headed CSV file and resolves the column roles.
///
/// Rows with a missing or unparseable value in any used column are dropped and
/// counted. Feature columns that are not entirely numeric are one-hot encoded
/// with their categories in lexicographic order; subject, trial and time key
/// columns are kept as side information and not used as features.
pub fn load_csv(path: impl AsRef<Path>, roles: &ColumnRoles) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, roles)
}

pub fn read_csv<R: std::io::Read>(reader: R, roles: &ColumnRoles) -> Result<Dataset> {
    roles.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let index_of = |name: &str| headers.iter().position(|h| h == name);
    for (_, column) in roles.named() {
        if index_of(column).is_none() {
            return Err(Error::MissingRoleColumn(column.to_owned()));
        }
    }
    let records = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;

    let target_col = index_of(&roles.target).expect("checked above");
    let numeric_role_cols: Vec<usize> = [&roles.frame, &roles.price_index]
        .into_iter()
        .flatten()
        .chain(roles.context.iter())
        .map(|c| index_of(c).expect("checked above"))
        .collect();
    let key_cols: Vec<usize> = [&roles.subject, &roles.trial, &roles.time]
        .into_iter()
        .flatten()
        .map(|c| index_of(c).expect("checked above"))
        .collect();
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&j| j != target_col && !roles.is_key_column(&headers[j]))
        .collect();
    // a feature column is numeric when every present cell parses
    let numeric: Vec<bool> = feature_cols
        .iter()
        .map(|&j| {
            records
                .iter()
                .map(|r| r.get(j).unwrap_or(""))
                .filter(|c| !is_missing(c))
                .all(|c| c.trim().parse::<f64>().is_ok())
        })
        .collect();
    for (&j, &is_num) in feature_cols.iter().zip(&numeric) {
        if !is_num && numeric_role_cols.contains(&j) {
            return Err(Error::InvalidRoles(format!(
                "role column \"{}\" must be numeric",
                headers[j]
            )));
        }
    }

    let keep: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            let cell = |j: usize| r.get(j).unwrap_or("");
            parse_number(cell(target_col)).is_some()
                && key_cols.iter().all(|&j| !is_missing(cell(j)))
                && feature_cols.iter().zip(&numeric).all(|(&j, &is_num)| {
                    if is_num {
                        parse_number(cell(j)).is_some()
                    } else {
                        !is_missing(cell(j))
                    }
                })
        })
        .map(|(i, _)| i)
        .collect();
    let dropped = records.len() - keep.len();
    if keep.is_empty() {
        return Err(Error::NoRows { dropped });
    }

    let text = |i: usize, j: usize| records[i].get(j).unwrap_or("").trim().to_owned();
    let number = |i: usize, j: usize| parse_number(records[i].get(j).unwrap_or("")).unwrap();

    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut column_names = Vec::new();
    for (&j, &is_num) in feature_cols.iter().zip(&numeric) {
        if is_num {
            columns.push(keep.iter().map(|&i| number(i, j)).collect());
            column_names.push(headers[j].clone());
        } else {
            let categories: BTreeSet<String> = keep.iter().map(|&i| text(i, j)).collect();
            for cat in &categories {
                columns.push(
                    keep.iter()
                        .map(|&i| if text(i, j) == *cat { 1.0 } else { 0.0 })
                        .collect(),
                );
                column_names.push(format!("{}={}", headers[j], cat));
            }
        }
    }
    let features = if columns.is_empty() {
        Matrix::zeros(keep.len(), 0)
    } else {
        Matrix::from_columns(&columns)?
    };

    let keys_of = |name: &Option<String>| {
        name.as_ref().map(|c| {
            let j = index_of(c).expect("checked above");
            keep.iter().map(|&i| text(i, j)).collect::<Vec<_>>()
        })
    };
    let values_of = |name: &Option<String>| {
        name.as_ref().map(|c| {
            let j = index_of(c).expect("checked above");
            keep.iter().map(|&i| number(i, j)).collect::<Vec<_>>()
        })
    };
    let context = if roles.context.is_empty() {
        None
    } else {
        let cols: Vec<Vec<f64>> = roles
            .context
            .iter()
            .map(|c| {
                let j = index_of(c).expect("checked above");
                keep.iter().map(|&i| number(i, j)).collect()
            })
            .collect();
        Some(Matrix::from_columns(&cols)?)
    };

    Ok(Dataset {
        features,
        target: keep.iter().map(|&i| number(i, target_col)).collect(),
        column_names,
        roles: roles.clone(),
        subject: keys_of(&roles.subject),
        trial: keys_of(&roles.trial),
        time: keys_of(&roles.time),
        frame: values_of(&roles.frame),
        price_index: values_of(&roles.price_index),
        context,
        dropped_rows: dropped,
        source_rows: keep,
    })
}

/// Total order over time keys: numeric when every key parses as a number,
/// lexicographic otherwise (ISO dates sort correctly that way).
pub fn compare_time_keys(keys: &[String]) -> impl Fn(&str, &str) -> Ordering {
    let all_numeric = keys.iter().all(|k| k.trim().parse::<f64>().is_ok());
    move |a: &str, b: &str| {
        if all_numeric {
            let (x, y) = (a.trim().parse::<f64>(), b.trim().parse::<f64>());
            if let (Ok(x), Ok(y)) = (x, y) {
                return x.total_cmp(&y);
            }
        }
        a.cmp(b)
    }
}

/// Position of each row in time order; ties keep their input order.
pub fn time_ranks(keys: &[String]) -> Vec<usize> {
    let cmp = compare_time_keys(keys);
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| cmp(&keys[a], &keys[b]));
    let mut ranks = vec![0; keys.len()];
    for (rank, i) in order.into_iter().enumerate() {
        ranks[i] = rank;
    }
    ranks
}

/// Groups row indices by key, in key order.
pub(crate) fn group_rows(keys: &[String]) -> BTreeMap<&str, Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        groups.entry(k.as_str()).or_default().push(i);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, roles: &ColumnRoles) -> Result<Dataset> {
        read_csv(text.as_bytes(), roles)
    }

    #[test]
    fn three_rows_one_feature() {
        let ds = load("x,y\n1,2\n2,4\n3,6\n", &ColumnRoles::new("y")).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.d(), 1);
        assert_eq!(ds.target(), &[2.0, 4.0, 6.0]);
        assert_eq!(ds.dropped_rows(), 0);
    }

    #[test]
    fn empty_target_is_dropped() {
        let ds = load("x,y\n1,2\n2,\n3,6\n", &ColumnRoles::new("y")).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.dropped_rows(), 1);
        assert_eq!(ds.source_rows(), &[0, 2]);
    }

    #[test]
    fn absent_role_column() {
        let mut roles = ColumnRoles::new("y");
        roles.subject = Some("z".into());
        let err = load("x,y\n1,2\n", &roles).unwrap_err();
        assert!(err.to_string().contains("missing role column"), "{err}");
    }

    #[test]
    fn target_cannot_double_as_role() {
        let mut roles = ColumnRoles::new("y");
        roles.frame = Some("y".into());
        assert!(matches!(roles.validate(), Err(Error::InvalidRoles(_))));
    }

    #[test]
    fn zero_usable_rows() {
        let err = load("x,y\n1,\n2,abc\n", &ColumnRoles::new("y")).unwrap_err();
        assert!(matches!(err, Error::NoRows { dropped: 2 }));
    }

    #[test]
    fn categorical_columns_are_one_hot_sorted() {
        let ds = load(
            "c,x,y\nb,1,1\na,2,2\nc,3,3\nb,4,4\n",
            &ColumnRoles::new("y"),
        )
        .unwrap();
        assert_eq!(ds.column_names(), &["c=a", "c=b", "c=c", "x"]);
        assert_eq!(ds.features().row(0), &[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(ds.features().row(1), &[1.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn missing_feature_drops_row() {
        let ds = load("x,y\n1,2\n?,4\n3,6\n", &ColumnRoles::new("y")).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.dropped_rows(), 1);
    }

    #[test]
    fn key_roles_are_side_information() {
        let roles = ColumnRoles::from_json(
            r#"{"target":"y","subject":"who","time":"t","frame":"r","context":["c"]}"#,
        )
        .unwrap();
        let ds = load("who,t,r,c,y\nann,2001,2,0.5,1\nbob,2000,4,1.5,2\n", &roles).unwrap();
        assert_eq!(ds.subject().unwrap(), &["ann", "bob"]);
        assert_eq!(ds.time().unwrap(), &["2001", "2000"]);
        assert_eq!(ds.frame().unwrap(), &[2.0, 4.0]);
        assert_eq!(ds.context().unwrap().column(0), vec![0.5, 1.5]);
        assert_eq!(ds.column_names(), &["r", "c"]);
    }

    #[test]
    fn ingestion_is_deterministic() {
        let text = "c,x,y\nb,1,1\na,2,2\nc,3,\n";
        let a = load(text, &ColumnRoles::new("y")).unwrap();
        let b = load(text, &ColumnRoles::new("y")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn numeric_time_keys_sort_numerically() {
        let keys: Vec<String> = ["10", "9", "100"].iter().map(|s| s.to_string()).collect();
        assert_eq!(time_ranks(&keys), vec![1, 0, 2]);
        let keys: Vec<String> = ["b", "a", "a"].iter().map(|s| s.to_string()).collect();
        assert_eq!(time_ranks(&keys), vec![2, 0, 1]);
    }
}
