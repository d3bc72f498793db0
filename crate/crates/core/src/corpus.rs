//! Programming word problems: the corpus wire format, text rendering and the
//! statement / format-and-constraints split used by the ablation experiments.
//!
//! A corpus file holds one JSON object per line:
//!
//! ```text
//! {"id":"1A","title":"Theatre Square","time_limit_s":1,"memory_limit_mb":256,
//!  "statement":"...","input_spec":"...","output_spec":"...","notes":"...","tags":["math"]}
//! ```
//!
//! `notes` may be absent. Unknown fields are ignored with a warning.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

const KNOWN_FIELDS: [&str; 9] = [
    "id",
    "title",
    "time_limit_s",
    "memory_limit_mb",
    "statement",
    "input_spec",
    "output_spec",
    "notes",
    "tags",
];

/// One programming word problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub title: String,
    pub time_limit_s: f64,
    pub memory_limit_mb: u64,
    pub statement: String,
    pub input_spec: String,
    pub output_spec: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    pub tags: BTreeSet<String>,
}

/// Which portion of a problem is fed to a classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TextPart {
    #[default]
    Full,
    StatementOnly,
    IoAndConstraints,
}

impl fmt::Display for TextPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TextPart::Full => "full",
            TextPart::StatementOnly => "statement",
            TextPart::IoAndConstraints => "io",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemText {
    pub text: String,
    pub part: TextPart,
}

impl Problem {
    /// Checks the content invariants a problem must satisfy before it can be
    /// rendered or used for training.
    pub fn validate(&self) -> Result<()> {
        let bad = |message: &str| Error::InvalidProblem {
            id: self.id.clone(),
            message: message.to_string(),
        };
        if self.id.trim().is_empty() {
            return Err(bad("empty id"));
        }
        for (name, value) in [
            ("statement", &self.statement),
            ("input_spec", &self.input_spec),
            ("output_spec", &self.output_spec),
        ] {
            if value.trim().is_empty() {
                return Err(bad(&format!("empty {name}")));
            }
        }
        if !(self.time_limit_s.is_finite() && self.time_limit_s > 0.0) {
            return Err(bad("time_limit_s must be positive"));
        }
        if self.memory_limit_mb == 0 {
            return Err(bad("memory_limit_mb must be positive"));
        }
        Ok(())
    }

    /// The two-line constraint header, phrased so it tokenizes like prose.
    pub fn constraint_line(&self) -> String {
        format!(
            "time limit per test: {} seconds\nmemory limit per test: {} megabytes",
            self.time_limit_s, self.memory_limit_mb
        )
    }

    /// The complete problem as a solver would read it.
    pub fn full_text(&self) -> Result<ProblemText> {
        self.validate()?;
        let mut text = format!(
            "{}\n{}\n{}\n{}\n{}",
            self.title,
            self.constraint_line(),
            self.statement,
            self.input_spec,
            self.output_spec
        );
        if let Some(notes) = &self.notes {
            text.push('\n');
            text.push_str(notes);
        }
        Ok(ProblemText {
            text,
            part: TextPart::Full,
        })
    }

    /// Splits the problem into its narrative part (statement plus notes) and
    /// its format part (constraints plus input and output specification).
    /// The title belongs to neither.
    pub fn component_split(&self) -> Result<(ProblemText, ProblemText)> {
        self.validate()?;
        let mut statement = self.statement.clone();
        if let Some(notes) = &self.notes {
            statement.push('\n');
            statement.push_str(notes);
        }
        let io = format!(
            "{}\n{}\n{}",
            self.constraint_line(),
            self.input_spec,
            self.output_spec
        );
        Ok((
            ProblemText {
                text: statement,
                part: TextPart::StatementOnly,
            },
            ProblemText {
                text: io,
                part: TextPart::IoAndConstraints,
            },
        ))
    }

    pub fn text(&self, part: TextPart) -> Result<ProblemText> {
        match part {
            TextPart::Full => self.full_text(),
            TextPart::StatementOnly => Ok(self.component_split()?.0),
            TextPart::IoAndConstraints => Ok(self.component_split()?.1),
        }
    }
}

fn take_string(obj: &Map<String, Value>, field: &'static str, line: usize) -> Result<String> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(Error::MissingField { field, line }),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Err(Error::Malformed {
            line,
            message: format!("field {field} must be a string, found {other}"),
        }),
    }
}

/// Parses a single corpus record. Structural problems (bad JSON, missing or
/// mistyped fields, non-positive limits) are errors; empty text fields and
/// empty tag lists are accepted here and handled by raw filtering.
pub fn parse_record(raw: &str, line: usize) -> Result<Problem> {
    let value: Value = serde_json::from_str(raw).map_err(|e| Error::Malformed {
        line,
        message: e.to_string(),
    })?;
    let Value::Object(obj) = value else {
        return Err(Error::Malformed {
            line,
            message: "record is not an object".into(),
        });
    };
    for key in obj.keys() {
        if !KNOWN_FIELDS.contains(&key.as_str()) {
            log::warn!("line {line}: ignoring unknown field {key:?}");
        }
    }

    let id = take_string(&obj, "id", line)?;
    let title = take_string(&obj, "title", line)?;
    let time_limit_s = match obj.get("time_limit_s") {
        None | Some(Value::Null) => {
            return Err(Error::MissingField {
                field: "time_limit_s",
                line,
            })
        }
        Some(v) => v
            .as_f64()
            .filter(|t| t.is_finite() && *t > 0.0)
            .ok_or_else(|| Error::Malformed {
                line,
                message: format!("time_limit_s must be a positive number, found {v}"),
            })?,
    };
    let memory_limit_mb = match obj.get("memory_limit_mb") {
        None | Some(Value::Null) => {
            return Err(Error::MissingField {
                field: "memory_limit_mb",
                line,
            })
        }
        Some(v) => v
            .as_u64()
            .filter(|m| *m > 0)
            .ok_or_else(|| Error::Malformed {
                line,
                message: format!("memory_limit_mb must be a positive integer, found {v}"),
            })?,
    };
    let statement = take_string(&obj, "statement", line)?;
    let input_spec = take_string(&obj, "input_spec", line)?;
    let output_spec = take_string(&obj, "output_spec", line)?;
    let notes = match obj.get("notes") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(other) => {
            return Err(Error::Malformed {
                line,
                message: format!("field notes must be a string, found {other}"),
            })
        }
    };
    let tags = match obj.get("tags") {
        None | Some(Value::Null) => {
            return Err(Error::MissingField {
                field: "tags",
                line,
            })
        }
        Some(Value::Array(items)) => {
            let mut tags = BTreeSet::new();
            for item in items {
                let Value::String(tag) = item else {
                    return Err(Error::Malformed {
                        line,
                        message: format!("tags must be strings, found {item}"),
                    });
                };
                if !tags.insert(tag.clone()) {
                    return Err(Error::Malformed {
                        line,
                        message: format!("duplicate tag {tag:?}"),
                    });
                }
            }
            tags
        }
        Some(other) => {
            return Err(Error::Malformed {
                line,
                message: format!("tags must be an array, found {other}"),
            })
        }
    };

    Ok(Problem {
        id,
        title,
        time_limit_s,
        memory_limit_mb,
        statement,
        input_spec,
        output_spec,
        notes,
        tags,
    })
}

/// Parses corpus text; blank lines are skipped, line numbers are 1-based.
pub fn parse_corpus_str(content: &str) -> Result<Vec<Problem>> {
    let mut seen = HashSet::new();
    let mut problems = Vec::new();
    for (idx, raw) in content.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let problem = parse_record(raw, idx + 1)?;
        if !seen.insert(problem.id.clone()) {
            return Err(Error::DuplicateId(problem.id));
        }
        problems.push(problem);
    }
    Ok(problems)
}

pub fn parse_corpus(path: impl AsRef<Path>) -> Result<Vec<Problem>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus_str(&content)
}

/// Renders one record in the corpus wire format (no trailing newline).
pub fn render_record(problem: &Problem) -> String {
    serde_json::to_string(problem).expect("problem serialization cannot fail")
}

pub fn render_corpus(problems: &[Problem]) -> String {
    let mut out = String::new();
    for p in problems {
        out.push_str(&render_record(p));
        out.push('\n');
    }
    out
}

pub fn write_corpus(path: impl AsRef<Path>, problems: &[Problem]) -> Result<()> {
    write_atomic(path.as_ref(), render_corpus(problems).as_bytes())
}

/// Writes through a sibling temporary file and renames it into place.
/// Parent directories are created as needed.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
