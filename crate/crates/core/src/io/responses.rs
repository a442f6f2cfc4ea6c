use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{line_of, InputError};
use crate::model::{Agent, ItemType, Status};

const RATING_PREFIX: &str = "rating_";

/// Sidecar that renames source columns to the expected header, e.g.
/// `{"columns": {"Year": "status", "CS101 (01)": "rating_CS 101_01"}}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub columns: BTreeMap<String, String>,
}

impl ColumnMap {
    pub fn load(path: &Path) -> Result<Self, InputError> {
        let file = File::open(path).map_err(|source| InputError::File { path: path.to_path_buf(), source })?;
        serde_json::from_reader(file).map_err(|e| InputError::Mapping(e.to_string()))
    }

    fn rename<'a>(&'a self, header: &'a str) -> &'a str {
        self.columns.get(header.trim()).map_or(header.trim(), String::as_str)
    }
}

/// Reads respondents. Rating columns absent from the file, and empty cells,
/// mean the default rating 1. `course_max` is capped at the status limit.
pub fn read_responses(reader: impl Read, items: &[ItemType], map: Option<&ColumnMap>) -> Result<Vec<Agent>, InputError> {
    let default_map = ColumnMap::default();
    let map = map.unwrap_or(&default_map);
    let mut rdr = csv::Reader::from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| map.rename(h).to_string()).collect();
    let find = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| InputError::MissingColumn(name.into()));
    let (id_col, status_col, max_col) = (find("student_id")?, find("status")?, find("course_max")?);

    let by_key: HashMap<String, usize> = items.iter().enumerate().map(|(g, it)| (it.key(), g)).collect();
    let mut rating_cols = Vec::new();
    for (c, h) in headers.iter().enumerate() {
        if let Some(key) = h.strip_prefix(RATING_PREFIX) {
            let g = *by_key.get(key).ok_or_else(|| InputError::UnknownCourse(h.clone()))?;
            rating_cols.push((c, g));
        }
    }

    let mut agents = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        let field = |c: usize| record.get(c).unwrap_or("").trim();
        let status: Status = field(status_col)
            .parse()
            .map_err(|_| InputError::UnknownStatus { line, value: field(status_col).to_string() })?;
        let course_max: u32 = field(max_col).parse().map_err(|_| InputError::Malformed {
            line,
            msg: format!("course_max `{}` is not a non-negative integer", field(max_col)),
        })?;
        let mut ratings = vec![1u8; items.len()];
        for &(c, g) in &rating_cols {
            let raw = field(c);
            if raw.is_empty() {
                continue;
            }
            ratings[g] = raw.parse().ok().filter(|r| (1..=8).contains(r)).ok_or_else(|| InputError::RatingOutOfRange {
                line,
                column: headers[c].clone(),
                value: raw.to_string(),
            })?;
        }
        agents.push(Agent {
            id: agents.len(),
            student_id: field(id_col).to_string(),
            status,
            ratings,
            course_max: course_max.min(status.load_limit()),
        });
    }
    Ok(agents)
}

pub fn load_responses(path: &Path, items: &[ItemType], map: Option<&ColumnMap>) -> Result<Vec<Agent>, InputError> {
    let file = File::open(path).map_err(|source| InputError::File { path: path.to_path_buf(), source })?;
    read_responses(file, items, map)
}

pub fn write_responses(agents: &[Agent], items: &[ItemType], writer: impl Write) -> Result<(), InputError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["student_id".to_string(), "status".into(), "course_max".into()];
    header.extend(items.iter().map(|g| format!("{RATING_PREFIX}{}", g.key())));
    w.write_record(&header)?;
    for a in agents {
        let mut row = vec![a.student_id.clone(), a.status.to_string(), a.course_max.to_string()];
        row.extend((0..items.len()).map(|g| a.rating(g).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
