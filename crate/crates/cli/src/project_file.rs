//! Text project files.
//!
//! A project file is TOML with `[[activity]]` and `[[risk]]` tables and one
//! `[precedence]` table holding either `edges = [["successor", "predecessor"], ...]`
//! or `matrix = ["0 0 0", "1 0 0", ...]`, one row per activity in file order,
//! where a `1` in row `i`, column `j` makes activity `j` a predecessor of
//! activity `i`.
//!
//! ```toml
//! [[activity]]
//! id = "A1"
//! name = "Excavation"
//! duration = "triangular(2, 3, 5)"
//! fixed_cost = 100.0
//! variable_cost_rate = 20.0
//!
//! [[risk]]
//! id = "R1"
//! probability = 0.3
//! kind = "duration"
//! target = "A1"
//! impact = "uniform(1, 2)"
//! ```

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use mcrisk_core::model::{Activity, Distribution, Precedence, ProjectSpec, RiskEvent, RiskKind};
use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

/// 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl Location {
    fn of(text: &str, offset: usize) -> Self {
        let before = &text[..offset.min(text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Location { line, column }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Error)]
pub enum ProjectFileError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{location}: {message}")]
    Syntax { location: Location, message: String },
    #[error("{location}: unknown field `{field}`")]
    UnknownField { location: Location, field: String },
    #[error("{location}: duplicate id `{id}` (first defined at {first})")]
    DuplicateId {
        location: Location,
        id: String,
        first: Location,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    activity: Vec<RawActivity>,
    #[serde(default)]
    risk: Vec<RawRisk>,
    precedence: Option<Spanned<RawPrecedence>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActivity {
    id: Spanned<String>,
    #[serde(default)]
    name: String,
    duration: Spanned<String>,
    #[serde(default)]
    fixed_cost: Number,
    #[serde(default)]
    variable_cost_rate: Number,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRisk {
    id: Spanned<String>,
    #[serde(default)]
    name: String,
    probability: Number,
    kind: Spanned<String>,
    target: Spanned<String>,
    impact: Spanned<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrecedence {
    edges: Option<Vec<Spanned<(String, String)>>>,
    matrix: Option<Vec<Spanned<String>>>,
}

/// TOML integers and floats both accepted where a number is expected.
#[derive(Deserialize, Clone, Copy)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
}

impl Default for Number {
    fn default() -> Self {
        Number::Float(0.0)
    }
}

impl Number {
    fn value(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Float(x) => x,
        }
    }
}

fn syntax(text: &str, span: Range<usize>, message: impl Into<String>) -> ProjectFileError {
    ProjectFileError::Syntax {
        location: Location::of(text, span.start),
        message: message.into(),
    }
}

fn from_toml_error(text: &str, e: toml::de::Error) -> ProjectFileError {
    let location = Location::of(text, e.span().map_or(0, |s| s.start));
    let message = e.message().to_string();
    if let Some(rest) = message.strip_prefix("unknown field `") {
        let field = rest.split('`').next().unwrap_or_default().to_string();
        return ProjectFileError::UnknownField { location, field };
    }
    ProjectFileError::Syntax { location, message }
}

fn distribution(
    text: &str,
    field: &Spanned<String>,
    what: &str,
) -> Result<Distribution, ProjectFileError> {
    let law: Distribution = field
        .get_ref()
        .parse()
        .map_err(|e| syntax(text, field.span(), format!("{what}: {e}")))?;
    law.check()
        .map_err(|e| syntax(text, field.span(), format!("{what}: {e}")))?;
    Ok(law)
}

fn matrix_row(
    text: &str,
    row: &Spanned<String>,
    index: usize,
    id: &str,
    n: usize,
) -> Result<Vec<u8>, ProjectFileError> {
    let cells: Vec<&str> = row
        .get_ref()
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .collect();
    if cells.len() != n {
        return Err(syntax(
            text,
            row.span(),
            format!(
                "matrix row {} (`{id}`) has {} entries, expected {n}",
                index + 1,
                cells.len()
            ),
        ));
    }
    cells
        .iter()
        .map(|c| match *c {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(syntax(
                text,
                row.span(),
                format!(
                    "matrix row {} (`{id}`): entry `{other}` is not 0 or 1",
                    index + 1
                ),
            )),
        })
        .collect()
}

/// Parses project text. Every error carries the location of the offending
/// field.
pub fn parse_project_str(text: &str) -> Result<ProjectSpec, ProjectFileError> {
    let raw: RawFile = toml::from_str(text).map_err(|e| from_toml_error(text, e))?;

    let mut seen: HashMap<String, Location> = HashMap::new();
    let mut claim = |id: &Spanned<String>| -> Result<(), ProjectFileError> {
        let location = Location::of(text, id.span().start);
        match seen.get(id.get_ref()) {
            Some(&first) => Err(ProjectFileError::DuplicateId {
                location,
                id: id.get_ref().clone(),
                first,
            }),
            None => {
                seen.insert(id.get_ref().clone(), location);
                Ok(())
            }
        }
    };

    let mut activities = Vec::with_capacity(raw.activity.len());
    for a in &raw.activity {
        claim(&a.id)?;
        let duration = distribution(text, &a.duration, "duration")?;
        activities.push(
            Activity::new(a.id.get_ref(), &a.name, duration)
                .with_costs(a.fixed_cost.value(), a.variable_cost_rate.value()),
        );
    }

    let mut risks = Vec::with_capacity(raw.risk.len());
    for r in &raw.risk {
        claim(&r.id)?;
        let kind = match r.kind.get_ref().as_str() {
            "duration" => RiskKind::Duration,
            "cost" => RiskKind::Cost,
            other => {
                return Err(syntax(
                    text,
                    r.kind.span(),
                    format!("risk kind `{other}` is not `duration` or `cost`"),
                ))
            }
        };
        risks.push(RiskEvent {
            id: r.id.get_ref().clone(),
            name: r.name.clone(),
            probability: r.probability.value(),
            impact: distribution(text, &r.impact, "impact")?,
            kind,
            target: r.target.get_ref().clone(),
        });
    }

    let mut precedences = Vec::new();
    if let Some(p) = &raw.precedence {
        match (&p.get_ref().edges, &p.get_ref().matrix) {
            (Some(_), Some(_)) => {
                return Err(syntax(
                    text,
                    p.span(),
                    "precedence takes either `edges` or `matrix`, not both",
                ))
            }
            (Some(edges), None) => {
                for e in edges {
                    let (s, q) = e.get_ref();
                    precedences.push(Precedence::new(s, q));
                }
            }
            (None, Some(rows)) => {
                let n = activities.len();
                if rows.len() != n {
                    return Err(syntax(
                        text,
                        p.span(),
                        format!("matrix has {} rows for {n} activities", rows.len()),
                    ));
                }
                for (i, row) in rows.iter().enumerate() {
                    let cells = matrix_row(text, row, i, &activities[i].id, n)?;
                    for (j, &c) in cells.iter().enumerate() {
                        if c == 1 {
                            precedences.push(Precedence::new(&activities[i].id, &activities[j].id));
                        }
                    }
                }
            }
            (None, None) => {}
        }
    }

    Ok(ProjectSpec {
        activities,
        precedences,
        risks,
    })
}

pub fn parse_project(path: &Path) -> Result<ProjectSpec, ProjectFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ProjectFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_project_str(&text)
}

fn quoted(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn number(x: f64) -> String {
    toml::Value::Float(x).to_string()
}

/// Writes `spec` as a project file. Precedences are written as edges, in
/// order.
pub fn render(spec: &ProjectSpec) -> String {
    let mut out = String::new();
    for a in &spec.activities {
        out.push_str("[[activity]]\n");
        out.push_str(&format!("id = {}\n", quoted(&a.id)));
        out.push_str(&format!("name = {}\n", quoted(&a.name)));
        out.push_str(&format!("duration = {}\n", quoted(&a.duration.to_string())));
        out.push_str(&format!("fixed_cost = {}\n", number(a.fixed_cost)));
        out.push_str(&format!(
            "variable_cost_rate = {}\n\n",
            number(a.variable_cost_rate)
        ));
    }
    for r in &spec.risks {
        out.push_str("[[risk]]\n");
        out.push_str(&format!("id = {}\n", quoted(&r.id)));
        out.push_str(&format!("name = {}\n", quoted(&r.name)));
        out.push_str(&format!("probability = {}\n", number(r.probability)));
        out.push_str(&format!("kind = {}\n", quoted(r.kind.as_str())));
        out.push_str(&format!("target = {}\n", quoted(&r.target)));
        out.push_str(&format!("impact = {}\n\n", quoted(&r.impact.to_string())));
    }
    out.push_str("[precedence]\nedges = [\n");
    for p in &spec.precedences {
        out.push_str(&format!(
            "  [{}, {}],\n",
            quoted(&p.successor),
            quoted(&p.predecessor)
        ));
    }
    out.push_str("]\n");
    out
}

#[derive(Debug, Error)]
pub enum MatrixImportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("matrix has no header row")]
    Empty,
}

/// Reads a precedence matrix exported as CSV: a header row of activity ids
/// (first cell ignored), then one row per activity starting with its id.
/// Blank cells are 0. Activities get `point(0)` durations and no costs.
pub fn import_matrix_csv(text: &str) -> Result<ProjectSpec, MatrixImportError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(if text.lines().next().is_some_and(|l| l.contains('\t')) {
            b'\t'
        } else {
            b','
        })
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = records.next().ok_or(MatrixImportError::Empty)??;
    let ids: Vec<String> = header
        .iter()
        .skip(1)
        .map(|s| s.trim().to_string())
        .collect();
    let n = ids.len();
    let mut matrix = vec![vec![0u8; n]; n];
    let mut filled = vec![false; n];
    for (k, rec) in records.enumerate() {
        let rec = rec?;
        let row = k + 2;
        let id = rec.get(0).unwrap_or_default().trim();
        if id.is_empty() && rec.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        let i = ids
            .iter()
            .position(|x| x == id)
            .ok_or_else(|| MatrixImportError::Row {
                row,
                message: format!("`{id}` is not in the header"),
            })?;
        if std::mem::replace(&mut filled[i], true) {
            return Err(MatrixImportError::Row {
                row,
                message: format!("`{id}` appears twice"),
            });
        }
        if rec.len() > n + 1 {
            return Err(MatrixImportError::Row {
                row,
                message: format!("{} entries, expected at most {n}", rec.len() - 1),
            });
        }
        for (j, cell) in rec.iter().skip(1).enumerate() {
            matrix[i][j] = match cell.trim() {
                "" | "0" => 0,
                "1" => 1,
                other => {
                    return Err(MatrixImportError::Row {
                        row,
                        message: format!("entry `{other}` in column `{}` is not 0 or 1", ids[j]),
                    })
                }
            };
        }
    }
    let activities = ids
        .iter()
        .map(|id| Activity::new(id.as_str(), id.as_str(), Distribution::point(0.0)))
        .collect();
    ProjectSpec::from_matrix(activities, &matrix, Vec::new()).map_err(|e| MatrixImportError::Row {
        row: 1,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
[[activity]]
id = "S"
duration = "point(0)"

[[activity]]
id = "A"
name = "Work"
duration = "uniform(1, 3)"
fixed_cost = 10
variable_cost_rate = 2.5

[[activity]]
id = "E"
duration = "point(0)"

[[risk]]
id = "R"
probability = 0.25
kind = "cost"
target = "A"
impact = "point(4)"

[precedence]
matrix = [
  "0 0 0",
  "1 0 0",
  "0 1 0",
]
"#;

    #[test]
    fn parses_matrix_form() {
        let spec = parse_project_str(SMALL).unwrap();
        assert_eq!(spec.activities.len(), 3);
        assert_eq!(spec.activities[1].fixed_cost, 10.0);
        assert_eq!(spec.activities[1].variable_cost_rate, 2.5);
        assert_eq!(
            spec.precedences,
            vec![Precedence::new("A", "S"), Precedence::new("E", "A")]
        );
        assert_eq!(spec.risks[0].kind, RiskKind::Cost);
        assert_eq!(parse_project_str(&render(&spec)).unwrap(), spec);
    }

    #[test]
    fn errors_carry_locations() {
        let bad = SMALL.replace(
            "variable_cost_rate = 2.5",
            "variable_cost_rate = 2.5\ncolour = 1",
        );
        match parse_project_str(&bad) {
            Err(ProjectFileError::UnknownField { location, field }) => {
                assert_eq!(field, "colour");
                assert_eq!(location.line, 12);
            }
            other => panic!("{other:?}"),
        }
        let dup = SMALL.replace("id = \"R\"", "id = \"A\"");
        match parse_project_str(&dup) {
            Err(ProjectFileError::DuplicateId {
                location,
                id,
                first,
            }) => {
                assert_eq!(id, "A");
                assert_eq!(first.line, 7);
                assert_eq!(location.line, 18);
            }
            other => panic!("{other:?}"),
        }
        let short = SMALL.replace("\"1 0 0\"", "\"1 0\"");
        let e = parse_project_str(&short).unwrap_err();
        assert!(matches!(e, ProjectFileError::Syntax { .. }));
        assert!(e.to_string().contains("row 2 (`A`)"), "{e}");
        let law = SMALL.replace("uniform(1, 3)", "uniform(3, 1)");
        let e = parse_project_str(&law).unwrap_err();
        assert!(e.to_string().starts_with("line 9"), "{e}");
        assert!(matches!(
            parse_project_str("[[activity]\n"),
            Err(ProjectFileError::Syntax { .. })
        ));
    }

    #[test]
    fn imports_square_matrix() {
        let csv = "Precedentes,A0,A1,A2\nA0,0,0,0\nA1,1,,\nA2,,1,\n";
        let spec = import_matrix_csv(csv).unwrap();
        assert_eq!(
            spec.precedences,
            vec![Precedence::new("A1", "A0"), Precedence::new("A2", "A1")]
        );
        assert!(import_matrix_csv("x,A\nB,1\n").is_err());
        assert!(import_matrix_csv("x,A\nA,2\n").is_err());
    }
}
