//! Scrapes integer `parameter` declarations out of HLS-generated Verilog.
//!
//! Only the assignment form is recognised:
//! `parameter [integer] [[msb:lsb]] NAME = <int>` with an optional trailing
//! `,`, `;` or `)`. Integers may be plain decimal or sized/based literals
//! (`32'd64`, `'h40`). Line comments are ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

pub const BURSTCOUNT_WIDTH: &str = "BURSTCOUNT_WIDTH";
pub const MAX_THREADS: &str = "MAX_THREADS";

static DECLARATION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?x)
        \bparameter\b \s+
        (?: (?:integer|int|signed|unsigned) \s+ )?
        (?: \[ [^\]]* \] \s* )?
        (?P<name> [A-Za-z_][A-Za-z0-9_$]* ) \s* = \s*
        (?P<value> [0-9][0-9_]* (?: \s* '[sS]?[dDhHbBoO] \s* [0-9a-fA-F_]+ )? | '[sS]?[dDhHbBoO] \s* [0-9a-fA-F_]+ )
        (?P<tail> \s* (?: [,;)] | $ ) )
        ",
    )
    .expect("valid declaration pattern")
});

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamHit {
    pub value: u64,
    pub source: String,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for ParamHit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{} = {}", self.source, self.line, self.column, self.value)
    }
}

#[derive(Debug, Error)]
pub enum RtlError {
    #[error("no parameter names requested")]
    NoNames,
    #[error("parameter {name} has conflicting values: {}", format_hits(.hits))]
    ConflictingValues { name: String, hits: Vec<ParamHit> },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_hits(hits: &[ParamHit]) -> String {
    hits.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Every accepted declaration, grouped by parameter name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RtlParamExtract {
    hits: BTreeMap<String, Vec<ParamHit>>,
}

impl RtlParamExtract {
    /// Consistent value of `name`, if it was declared anywhere.
    pub fn get(&self, name: &str) -> Option<u64> {
        self.hits.get(name).and_then(|h| h.first()).map(|h| h.value)
    }

    pub fn hits(&self, name: &str) -> &[ParamHit] {
        self.hits.get(name).map_or(&[], Vec::as_slice)
    }

    /// All hits in name order, then source order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &ParamHit)> {
        self.hits
            .iter()
            .flat_map(|(n, hits)| hits.iter().map(move |h| (n.as_str(), h)))
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    fn merge(&mut self, other: RtlParamExtract) {
        for (name, hits) in other.hits {
            self.hits.entry(name).or_default().extend(hits);
        }
    }

    fn check_conflicts(self) -> Result<Self, RtlError> {
        for (name, hits) in &self.hits {
            if hits.iter().any(|h| h.value != hits[0].value) {
                return Err(RtlError::ConflictingValues {
                    name: name.clone(),
                    hits: hits.clone(),
                });
            }
        }
        Ok(self)
    }
}

fn parse_literal(lit: &str) -> Option<u64> {
    let lit: String = lit.chars().filter(|c| !c.is_whitespace() && *c != '_').collect();
    match lit.split_once('\'') {
        None => lit.parse().ok(),
        Some((_size, based)) => {
            let based = based.trim_start_matches(['s', 'S']);
            let mut chars = based.chars();
            let radix = match chars.next()?.to_ascii_lowercase() {
                'd' => 10,
                'h' => 16,
                'b' => 2,
                'o' => 8,
                _ => return None,
            };
            u64::from_str_radix(chars.as_str(), radix).ok()
        }
    }
}

fn scan(text: &str, source: &str, names: &[&str]) -> RtlParamExtract {
    let mut out = RtlParamExtract::default();
    for (idx, raw) in text.lines().enumerate() {
        let code = raw.split("//").next().unwrap_or("");
        for cap in DECLARATION.captures_iter(code) {
            let name = &cap["name"];
            if !names.contains(&name) {
                continue;
            }
            let Some(value) = parse_literal(&cap["value"]) else {
                continue;
            };
            let column = code[..cap.get(0).map_or(0, |m| m.start())].chars().count() + 1;
            out.hits.entry(name.to_string()).or_default().push(ParamHit {
                value,
                source: source.to_string(),
                line: idx + 1,
                column,
            });
        }
    }
    out
}

/// Extracts the requested parameters from one text. `source` names the
/// text in locations.
pub fn extract_rtl_params(text: &str, source: &str, names: &[&str]) -> Result<RtlParamExtract, RtlError> {
    if names.is_empty() {
        return Err(RtlError::NoNames);
    }
    scan(text, source, names).check_conflicts()
}

/// Extracts from several files, merged in lexicographic path order.
pub fn extract_rtl_files<P: AsRef<Path>>(paths: &[P], names: &[&str]) -> Result<RtlParamExtract, RtlError> {
    if names.is_empty() {
        return Err(RtlError::NoNames);
    }
    let mut sorted: Vec<&Path> = paths.iter().map(AsRef::as_ref).collect();
    sorted.sort();
    let mut merged = RtlParamExtract::default();
    for path in sorted {
        let text = std::fs::read_to_string(path).map_err(|source| RtlError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        merged.merge(scan(&text, &path.display().to_string(), names));
    }
    merged.check_conflicts()
}
