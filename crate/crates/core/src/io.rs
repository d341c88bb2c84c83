//! CSV and JSON encodings of streaming problems.
//!
//! CSV: header `artist,<user ids...>`, then one `<artist id>,<counts...>`
//! row per artist. No quoting; ids must not contain commas. The CSV form
//! carries no fee, so parsed problems get a fee of one.
//!
//! JSON: `{"artists":[..], "users":[..], "streams":[[..]], "fee":"p/q"}`
//! with `fee` optional (default one, integers accepted).

use std::path::Path;
use std::str::FromStr;

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::problem::{ProblemError, StreamingProblem};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Guesses from a file extension; `None` for anything else.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}, field {field}: {message}")]
    Field {
        line: usize,
        field: usize,
        message: String,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("input is not UTF-8")]
    Encoding,
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Wire form of a problem; also embedded in verdict and report JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemJson {
    pub artists: Vec<String>,
    pub users: Vec<String>,
    pub streams: Vec<Vec<u64>>,
    #[serde(with = "rational::serde_text", default = "Rational::one")]
    pub fee: Rational,
}

impl From<&StreamingProblem> for ProblemJson {
    fn from(p: &StreamingProblem) -> Self {
        Self {
            artists: p.artists().to_vec(),
            users: p.users().to_vec(),
            streams: p.streams().to_vec(),
            fee: p.fee().clone(),
        }
    }
}

impl TryFrom<ProblemJson> for StreamingProblem {
    type Error = ProblemError;

    fn try_from(raw: ProblemJson) -> Result<Self, Self::Error> {
        StreamingProblem::new(raw.artists, raw.users, raw.streams, raw.fee)
    }
}

pub fn parse_problem(bytes: &[u8], format: Format) -> Result<StreamingProblem, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|_| ParseError::Encoding)?;
    match format {
        Format::Csv => parse_csv(text),
        Format::Json => {
            let raw: ProblemJson =
                serde_json::from_str(text).map_err(|e| ParseError::Json(e.to_string()))?;
            Ok(StreamingProblem::try_from(raw)?)
        }
    }
}

pub fn serialize_problem(problem: &StreamingProblem, format: Format) -> Vec<u8> {
    match format {
        Format::Csv => to_csv(problem).into_bytes(),
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(&ProblemJson::from(problem))
                .expect("problem JSON is always serializable");
            out.push(b'\n');
            out
        }
    }
}

fn parse_csv(text: &str) -> Result<StreamingProblem, ParseError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .map(|(k, l)| (k + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let (header_line, header) = lines.next().ok_or(ParseError::Line {
        line: 1,
        message: "missing header row".to_string(),
    })?;
    let mut fields = header.split(',').map(str::trim);
    let corner = fields.next().unwrap_or_default();
    if corner != "artist" {
        return Err(ParseError::Field {
            line: header_line,
            field: 1,
            message: format!("expected \"artist\", found {corner:?}"),
        });
    }
    let users: Vec<String> = fields.map(str::to_string).collect();
    if let Some(k) = users.iter().position(String::is_empty) {
        return Err(ParseError::Field {
            line: header_line,
            field: k + 2,
            message: "empty user id".to_string(),
        });
    }

    let mut artists = Vec::new();
    let mut streams = Vec::new();
    for (line, row) in lines {
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        if cells.len() != users.len() + 1 {
            return Err(ParseError::Line {
                line,
                message: format!("expected {} fields, found {}", users.len() + 1, cells.len()),
            });
        }
        if cells[0].is_empty() {
            return Err(ParseError::Field {
                line,
                field: 1,
                message: "empty artist id".to_string(),
            });
        }
        artists.push(cells[0].to_string());
        let counts = cells[1..]
            .iter()
            .enumerate()
            .map(|(k, cell)| {
                cell.parse::<u64>().map_err(|_| ParseError::Field {
                    line,
                    field: k + 2,
                    message: format!("expected a nonnegative integer, found {cell:?}"),
                })
            })
            .collect::<Result<Vec<u64>, _>>()?;
        streams.push(counts);
    }
    Ok(StreamingProblem::new(
        artists,
        users,
        streams,
        Rational::one(),
    )?)
}

fn to_csv(problem: &StreamingProblem) -> String {
    let mut out = String::from("artist");
    for u in problem.users() {
        out.push(',');
        out.push_str(u);
    }
    out.push('\n');
    for (artist, row) in problem.artists().iter().zip(problem.streams()) {
        out.push_str(artist);
        for t in row {
            out.push(',');
            out.push_str(&t.to_string());
        }
        out.push('\n');
    }
    out
}
