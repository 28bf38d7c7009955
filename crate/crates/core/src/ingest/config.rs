//! Kernel config files.
//!
//! The format is TOML with a fixed schema:
//!
//! ```toml
//! schema_version = 1
//!
//! [dram]
//! dq = 8            # bytes
//! bl = 8            # beats
//! f_mem = 933.3e6   # Hz
//! t_rcd = 13.5e-9   # s
//! t_rp = 13.5e-9    # s
//! t_wr = 15e-9      # s
//!
//! [kernel]
//! name = "vector_add"
//! delta = 1         # optional, default stride for every LSU
//! f = 16            # optional, default vectorization for every LSU
//!
//! [[lsu]]
//! kind = "aligned"  # aligned | non_aligned | write_ack | cache | prefetching | atomic
//! ls_width = 64
//! burst_cnt = 4
//! max_th = 64
//! ls_acc = 1048576
//! ls_bytes = 4
//! delta = 1                     # optional, overrides kernel.delta
//! f = 16                        # optional, overrides kernel.f
//! atomic_val_constant = false   # optional
//! ```
//!
//! Integer fields reject floats; real fields accept either. Unknown keys are
//! errors. Every error carries the dotted key path and a line/column.

use std::fmt::{self, Write as _};
use std::ops::Range;
use std::path::Path;

use toml::de::{DeTable, DeValue};
use toml::Spanned;

use crate::gmi::{LsuKind, ATOMIC_WIDTH, MAX_BURST_CNT};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DramSection {
    pub dq: u32,
    pub bl: u32,
    pub f_mem: f64,
    pub t_rcd: f64,
    pub t_rp: f64,
    pub t_wr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSection {
    pub name: String,
    pub delta: Option<u32>,
    pub f: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsuSection {
    pub kind: LsuKind,
    pub ls_width: u32,
    pub burst_cnt: u32,
    pub max_th: u32,
    pub ls_acc: u64,
    pub ls_bytes: u32,
    pub delta: Option<u32>,
    pub f: Option<u32>,
    pub atomic_val_constant: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    pub schema_version: u32,
    pub dram: DramSection,
    pub kernel: KernelSection,
    pub lsus: Vec<LsuSection>,
}

impl KernelConfig {
    pub fn lsu_delta(&self, i: usize) -> u32 {
        self.lsus[i].delta.or(self.kernel.delta).unwrap_or(1)
    }

    pub fn lsu_f(&self, i: usize) -> u32 {
        self.lsus[i].f.or(self.kernel.f).unwrap_or(1)
    }

    pub fn lsu_atomic_val_constant(&self, i: usize) -> bool {
        self.lsus[i].atomic_val_constant.unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigErrorKind {
    Syntax(String),
    MissingKey,
    UnknownKey,
    TypeMismatch {
        expected: &'static str,
        found: &'static str,
    },
    InvalidValue(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub kind: ConfigErrorKind,
    /// Dotted key path, e.g. `lsu[2].ls_width`.
    pub path: String,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.column)?;
        match &self.kind {
            ConfigErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ConfigErrorKind::MissingKey => write!(f, "missing key `{}`", self.path),
            ConfigErrorKind::UnknownKey => write!(f, "unknown key `{}`", self.path),
            ConfigErrorKind::TypeMismatch { expected, found } => {
                write!(f, "`{}` must be {expected}, found {found}", self.path)
            }
            ConfigErrorKind::InvalidValue(why) => write!(f, "invalid `{}`: {why}", self.path),
        }
    }
}

/// All problems found in one document, optionally tied to a file name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors {
    pub file: Option<String>,
    pub errors: Vec<ConfigError>,
}

impl ConfigErrors {
    pub fn with_file(mut self, path: &Path) -> Self {
        self.file = Some(path.display().to_string());
        self
    }

    pub fn contains(&self, kind: &ConfigErrorKind, path: &str) -> bool {
        self.errors.iter().any(|e| &e.kind == kind && e.path == path)
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.errors.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            if let Some(file) = &self.file {
                write!(f, "{file}:")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    fn new(text: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        Self { starts }
    }

    fn locate(&self, text: &str, offset: usize) -> (usize, usize) {
        let line = self.starts.partition_point(|&s| s <= offset).max(1);
        let start = self.starts[line - 1];
        let end = offset.min(text.len());
        let column = text.get(start..end).map_or(end - start, |s| s.chars().count()) + 1;
        (line, column)
    }
}

struct Walker<'t> {
    text: &'t str,
    lines: LineIndex,
    errors: Vec<ConfigError>,
}

type Table<'i> = DeTable<'i>;

impl<'t> Walker<'t> {
    fn push(&mut self, kind: ConfigErrorKind, path: &str, span: Range<usize>) {
        let (line, column) = self.lines.locate(self.text, span.start);
        self.errors.push(ConfigError {
            kind,
            path: path.to_string(),
            line,
            column,
        });
    }

    fn reject_unknown(&mut self, table: &Table<'_>, prefix: &str, allowed: &[&str]) {
        for (key, _) in table.iter() {
            if !allowed.contains(&key.get_ref().as_ref()) {
                let path = join(prefix, key.get_ref());
                self.push(ConfigErrorKind::UnknownKey, &path, key.span());
            }
        }
    }

    fn field<'a, 'i>(
        &mut self,
        table: &'a Table<'i>,
        span: &Range<usize>,
        prefix: &str,
        key: &str,
        required: bool,
    ) -> Option<&'a Spanned<DeValue<'i>>> {
        let v = table.get(key);
        if v.is_none() && required {
            self.push(ConfigErrorKind::MissingKey, &join(prefix, key), span.clone());
        }
        v
    }

    fn mismatch(&mut self, path: &str, expected: &'static str, v: &Spanned<DeValue<'_>>) {
        self.push(
            ConfigErrorKind::TypeMismatch {
                expected,
                found: v.get_ref().type_str(),
            },
            path,
            v.span(),
        );
    }

    fn integer(&mut self, path: &str, v: &Spanned<DeValue<'_>>, min: u64, max: u64) -> Option<u64> {
        let DeValue::Integer(i) = v.get_ref() else {
            self.mismatch(path, "an integer", v);
            return None;
        };
        let parsed = i64::from_str_radix(i.as_str(), i.radix()).ok();
        match parsed {
            Some(n) if n >= 0 && (n as u64) >= min && (n as u64) <= max => Some(n as u64),
            _ => {
                self.push(
                    ConfigErrorKind::InvalidValue(format!("expected an integer in {min}..={max}")),
                    path,
                    v.span(),
                );
                None
            }
        }
    }

    fn positive_real(&mut self, path: &str, v: &Spanned<DeValue<'_>>) -> Option<f64> {
        let x = match v.get_ref() {
            DeValue::Float(x) => x.as_str().replace('_', "").parse::<f64>().ok(),
            DeValue::Integer(i) => i64::from_str_radix(i.as_str(), i.radix()).ok().map(|n| n as f64),
            _ => {
                self.mismatch(path, "a number", v);
                return None;
            }
        };
        match x {
            Some(x) if x.is_finite() && x > 0.0 => Some(x),
            _ => {
                self.push(
                    ConfigErrorKind::InvalidValue("expected a finite positive number".into()),
                    path,
                    v.span(),
                );
                None
            }
        }
    }

    fn req_int(
        &mut self,
        t: &Table<'_>,
        span: &Range<usize>,
        prefix: &str,
        key: &str,
        min: u64,
        max: u64,
    ) -> Option<u64> {
        let v = self.field(t, span, prefix, key, true)?;
        self.integer(&join(prefix, key), v, min, max)
    }

    fn opt_int(
        &mut self,
        t: &Table<'_>,
        span: &Range<usize>,
        prefix: &str,
        key: &str,
        min: u64,
        max: u64,
    ) -> Result<Option<u64>, ()> {
        match self.field(t, span, prefix, key, false) {
            None => Ok(None),
            Some(v) => self.integer(&join(prefix, key), v, min, max).map(Some).ok_or(()),
        }
    }

    fn req_real(&mut self, t: &Table<'_>, span: &Range<usize>, prefix: &str, key: &str) -> Option<f64> {
        let v = self.field(t, span, prefix, key, true)?;
        self.positive_real(&join(prefix, key), v)
    }

    fn table<'a, 'i>(&mut self, path: &str, v: &'a Spanned<DeValue<'i>>) -> Option<&'a Table<'i>> {
        match v.get_ref() {
            DeValue::Table(t) => Some(t),
            _ => {
                self.mismatch(path, "a table", v);
                None
            }
        }
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

const U32: u64 = u32::MAX as u64;
const U64: u64 = i64::MAX as u64;

/// Parses and validates a kernel config document.
pub fn parse_config(text: &str) -> Result<KernelConfig, ConfigErrors> {
    let mut w = Walker {
        text,
        lines: LineIndex::new(text),
        errors: Vec::new(),
    };
    let root = match DeTable::parse(text) {
        Ok(root) => root,
        Err(e) => {
            let span = e.span().unwrap_or(0..0);
            w.push(ConfigErrorKind::Syntax(e.message().to_string()), "", span);
            return Err(ConfigErrors {
                file: None,
                errors: w.errors,
            });
        }
    };
    let root_span = 0..0;
    let root = root.get_ref();
    w.reject_unknown(root, "", &["schema_version", "dram", "kernel", "lsu"]);

    if let Some(v) = w.req_int(root, &root_span, "", "schema_version", 0, U32) {
        if v != u64::from(SCHEMA_VERSION) {
            let span = root.get("schema_version").map(|s| s.span()).unwrap_or(0..0);
            w.push(
                ConfigErrorKind::InvalidValue(format!("unsupported schema version {v}, expected {SCHEMA_VERSION}")),
                "schema_version",
                span,
            );
        }
    }

    let dram = parse_dram(&mut w, root, &root_span);
    let kernel = parse_kernel(&mut w, root, &root_span);
    let lsus = parse_lsus(&mut w, root, &root_span, kernel.as_ref());

    match (dram, kernel, lsus) {
        (Some(dram), Some(kernel), Some(lsus)) if w.errors.is_empty() => Ok(KernelConfig {
            schema_version: SCHEMA_VERSION,
            dram,
            kernel,
            lsus,
        }),
        _ => Err(ConfigErrors {
            file: None,
            errors: w.errors,
        }),
    }
}

fn parse_dram(w: &mut Walker<'_>, root: &Table<'_>, root_span: &Range<usize>) -> Option<DramSection> {
    let v = w.field(root, root_span, "", "dram", true)?;
    let span = v.span();
    let t = w.table("dram", v)?;
    w.reject_unknown(t, "dram", &["dq", "bl", "f_mem", "t_rcd", "t_rp", "t_wr"]);
    let dq = w.req_int(t, &span, "dram", "dq", 1, U32);
    let bl = w.req_int(t, &span, "dram", "bl", 1, U32);
    let f_mem = w.req_real(t, &span, "dram", "f_mem");
    let t_rcd = w.req_real(t, &span, "dram", "t_rcd");
    let t_rp = w.req_real(t, &span, "dram", "t_rp");
    let t_wr = w.req_real(t, &span, "dram", "t_wr");
    let (dq, bl) = (dq?, bl?);
    if !(dq * bl).is_power_of_two() {
        let at = t.get("bl").map(|s| s.span()).unwrap_or(span);
        w.push(
            ConfigErrorKind::InvalidValue(format!("dq*bl = {} must be a power of two", dq * bl)),
            "dram.bl",
            at,
        );
        return None;
    }
    Some(DramSection {
        dq: dq as u32,
        bl: bl as u32,
        f_mem: f_mem?,
        t_rcd: t_rcd?,
        t_rp: t_rp?,
        t_wr: t_wr?,
    })
}

fn parse_kernel(w: &mut Walker<'_>, root: &Table<'_>, root_span: &Range<usize>) -> Option<KernelSection> {
    let v = w.field(root, root_span, "", "kernel", true)?;
    let span = v.span();
    let t = w.table("kernel", v)?;
    w.reject_unknown(t, "kernel", &["name", "delta", "f"]);
    let name = match w.field(t, &span, "kernel", "name", true) {
        Some(v) => match v.get_ref() {
            DeValue::String(s) if !s.trim().is_empty() => Some(s.to_string()),
            DeValue::String(_) => {
                w.push(
                    ConfigErrorKind::InvalidValue("name must not be empty".into()),
                    "kernel.name",
                    v.span(),
                );
                None
            }
            _ => {
                w.mismatch("kernel.name", "a string", v);
                None
            }
        },
        None => None,
    };
    let delta = w.opt_int(t, &span, "kernel", "delta", 1, U32);
    let f = w.opt_int(t, &span, "kernel", "f", 1, U32);
    Some(KernelSection {
        name: name?,
        delta: delta.ok()?.map(|d| d as u32),
        f: f.ok()?.map(|d| d as u32),
    })
}

fn parse_lsus(
    w: &mut Walker<'_>,
    root: &Table<'_>,
    root_span: &Range<usize>,
    kernel: Option<&KernelSection>,
) -> Option<Vec<LsuSection>> {
    let v = w.field(root, root_span, "", "lsu", true)?;
    let DeValue::Array(items) = v.get_ref() else {
        w.mismatch("lsu", "an array of tables", v);
        return None;
    };
    if items.is_empty() {
        w.push(
            ConfigErrorKind::InvalidValue("at least one LSU is required".into()),
            "lsu",
            v.span(),
        );
        return None;
    }
    let mut out = Vec::with_capacity(items.len());
    let mut ok = true;
    for (i, item) in items.iter().enumerate() {
        let prefix = format!("lsu[{i}]");
        match parse_lsu(w, &prefix, item, kernel) {
            Some(l) => out.push(l),
            None => ok = false,
        }
    }
    ok.then_some(out)
}

fn parse_lsu(
    w: &mut Walker<'_>,
    prefix: &str,
    item: &Spanned<DeValue<'_>>,
    kernel: Option<&KernelSection>,
) -> Option<LsuSection> {
    let span = item.span();
    let t = w.table(prefix, item)?;
    w.reject_unknown(
        t,
        prefix,
        &[
            "kind",
            "ls_width",
            "burst_cnt",
            "max_th",
            "ls_acc",
            "ls_bytes",
            "delta",
            "f",
            "atomic_val_constant",
        ],
    );
    let kind = match w.field(t, &span, prefix, "kind", true) {
        Some(v) => match v.get_ref() {
            DeValue::String(s) => {
                let kind = LsuKind::from_config_name(s);
                if kind.is_none() {
                    let names: Vec<_> = LsuKind::ALL.iter().map(|k| k.config_name()).collect();
                    w.push(
                        ConfigErrorKind::InvalidValue(format!(
                            "unknown LSU kind `{s}`, expected one of {}",
                            names.join(", ")
                        )),
                        &join(prefix, "kind"),
                        v.span(),
                    );
                }
                kind
            }
            _ => {
                w.mismatch(&join(prefix, "kind"), "a string", v);
                None
            }
        },
        None => None,
    };
    let ls_width = w.req_int(t, &span, prefix, "ls_width", 1, U32);
    let burst_cnt = w.req_int(t, &span, prefix, "burst_cnt", 0, u64::from(MAX_BURST_CNT));
    let max_th = w.req_int(t, &span, prefix, "max_th", 1, U32);
    let ls_acc = w.req_int(t, &span, prefix, "ls_acc", 1, U64);
    let ls_bytes = w.req_int(t, &span, prefix, "ls_bytes", 1, U32);
    let delta = w.opt_int(t, &span, prefix, "delta", 1, U32);
    let f = w.opt_int(t, &span, prefix, "f", 1, U32);
    let atomic_val_constant = match w.field(t, &span, prefix, "atomic_val_constant", false) {
        None => Ok(None),
        Some(v) => match v.get_ref() {
            DeValue::Boolean(b) => Ok(Some(*b)),
            _ => {
                w.mismatch(&join(prefix, "atomic_val_constant"), "a boolean", v);
                Err(())
            }
        },
    };

    let lsu = LsuSection {
        kind: kind?,
        ls_width: ls_width? as u32,
        burst_cnt: burst_cnt? as u32,
        max_th: max_th? as u32,
        ls_acc: ls_acc?,
        ls_bytes: ls_bytes? as u32,
        delta: delta.ok()?.map(|d| d as u32),
        f: f.ok()?.map(|d| d as u32),
        atomic_val_constant: atomic_val_constant.ok()?,
    };

    if lsu.kind == LsuKind::AtomicPipelined {
        let mut fine = true;
        for (key, value) in [("ls_width", lsu.ls_width), ("ls_bytes", lsu.ls_bytes)] {
            if value != ATOMIC_WIDTH {
                let at = t.get(key).map(|s| s.span()).unwrap_or(span.clone());
                w.push(
                    ConfigErrorKind::InvalidValue(format!("atomic LSUs operate on {ATOMIC_WIDTH}-byte integers")),
                    &join(prefix, key),
                    at,
                );
                fine = false;
            }
        }
        let inherited = kernel.and_then(|k| k.delta);
        let effective = lsu.delta.or(inherited).unwrap_or(1);
        if effective != 1 {
            let (path, at) = match t.get("delta") {
                Some(v) => (join(prefix, "delta"), v.span()),
                None => ("kernel.delta".to_string(), span.clone()),
            };
            w.push(
                ConfigErrorKind::InvalidValue("atomic LSUs always have stride 1".into()),
                &path,
                at,
            );
            fine = false;
        }
        if !fine {
            return None;
        }
    }
    Some(lsu)
}

fn real(x: f64) -> String {
    // Debug keeps a decimal point or exponent, so the value stays a TOML float.
    format!("{x:?}")
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Canonical text form; `parse_config(&serialize_config(c)) == Ok(c)`.
pub fn serialize_config(cfg: &KernelConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "schema_version = {}", cfg.schema_version);
    let d = &cfg.dram;
    let _ = writeln!(s, "\n[dram]");
    let _ = writeln!(s, "dq = {}", d.dq);
    let _ = writeln!(s, "bl = {}", d.bl);
    let _ = writeln!(s, "f_mem = {}", real(d.f_mem));
    let _ = writeln!(s, "t_rcd = {}", real(d.t_rcd));
    let _ = writeln!(s, "t_rp = {}", real(d.t_rp));
    let _ = writeln!(s, "t_wr = {}", real(d.t_wr));
    let k = &cfg.kernel;
    let _ = writeln!(s, "\n[kernel]");
    let _ = writeln!(s, "name = {}", escape(&k.name));
    if let Some(delta) = k.delta {
        let _ = writeln!(s, "delta = {delta}");
    }
    if let Some(f) = k.f {
        let _ = writeln!(s, "f = {f}");
    }
    for l in &cfg.lsus {
        let _ = writeln!(s, "\n[[lsu]]");
        let _ = writeln!(s, "kind = \"{}\"", l.kind.config_name());
        let _ = writeln!(s, "ls_width = {}", l.ls_width);
        let _ = writeln!(s, "burst_cnt = {}", l.burst_cnt);
        let _ = writeln!(s, "max_th = {}", l.max_th);
        let _ = writeln!(s, "ls_acc = {}", l.ls_acc);
        let _ = writeln!(s, "ls_bytes = {}", l.ls_bytes);
        if let Some(delta) = l.delta {
            let _ = writeln!(s, "delta = {delta}");
        }
        if let Some(f) = l.f {
            let _ = writeln!(s, "f = {f}");
        }
        if let Some(c) = l.atomic_val_constant {
            let _ = writeln!(s, "atomic_val_constant = {c}");
        }
    }
    s
}
