//! Parser-output records and corpus files.
//!
//! A record is one s-expression:
//!
//! ```text
//! (record
//!   (utterance tuesday afternoon the ninth be okay for me that)
//!   (quality bad)
//!   (complete no)
//!   (partial ((sentence-type *fragment) (when ((frame *simple-time) (day 9)))))
//!   (partial-symbols nt-simple-time nt-day)
//!   (skipped (fs ((frame *that))) (symbols nt-that) (words that))
//!   (gold ((sentence-type *state) (frame *free) ...)))
//! ```
//!
//! `partial`, `partial-symbols`, `skipped` and `gold` are optional. A corpus
//! file is any number of records.

use std::fmt::Write as _;

use thiserror::Error;

use crate::fstruct::{fs_from_sexp, FeatureStructure};
use crate::sexp::{self, is_atom_char, write_quoted, Sexp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("record {index}: {message} (byte {offset})")]
pub struct RecordError {
    /// 0-based position of the record in its file.
    pub index: usize,
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseQuality {
    #[default]
    Good,
    Bad,
}

impl ParseQuality {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseQuality::Good => "good",
            ParseQuality::Bad => "bad",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SkippedSegment {
    pub fs: FeatureStructure,
    pub symbols: Vec<String>,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParserOutput {
    pub utterance: Vec<String>,
    pub partial: Option<FeatureStructure>,
    pub partial_symbols: Vec<String>,
    pub skipped: Vec<SkippedSegment>,
    pub quality: ParseQuality,
    pub parsed_completely: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorpusRecord {
    pub output: ParserOutput,
    pub gold: Option<FeatureStructure>,
}

struct Ctx {
    index: usize,
}

impl Ctx {
    fn err(&self, offset: usize, message: impl Into<String>) -> RecordError {
        RecordError {
            index: self.index,
            offset,
            message: message.into(),
        }
    }
}

/// Reads every record in a corpus file.
pub fn read_corpus(text: &str) -> Result<Vec<CorpusRecord>, RecordError> {
    let forms = sexp::read_all(text).map_err(|e| RecordError {
        index: 0,
        offset: e.offset,
        message: e.message,
    })?;
    forms
        .iter()
        .enumerate()
        .map(|(index, form)| record_from_sexp(form, &Ctx { index }))
        .collect()
}

/// Reads a file holding exactly one record.
pub fn read_record(text: &str) -> Result<CorpusRecord, RecordError> {
    let mut records = read_corpus(text)?;
    match records.len() {
        1 => Ok(records.pop().unwrap()),
        n => Err(RecordError {
            index: 0,
            offset: 0,
            message: format!("expected one record, found {n}"),
        }),
    }
}

fn words_of(items: &[Sexp], ctx: &Ctx) -> Result<Vec<String>, RecordError> {
    items
        .iter()
        .map(|item| match item {
            Sexp::Atom { text, .. } | Sexp::Str { text, .. } => Ok(text.clone()),
            Sexp::List { offset, .. } => Err(ctx.err(*offset, "expected a word")),
        })
        .collect()
}

fn fs_field(items: &[Sexp], offset: usize, ctx: &Ctx) -> Result<FeatureStructure, RecordError> {
    match items {
        [form] => fs_from_sexp(form).map_err(|e| ctx.err(e.offset(), e.to_string())),
        _ => Err(ctx.err(offset, "expected exactly one feature structure")),
    }
}

fn record_from_sexp(form: &Sexp, ctx: &Ctx) -> Result<CorpusRecord, RecordError> {
    let items = form
        .as_list()
        .ok_or_else(|| ctx.err(form.offset(), "expected (record ...)"))?;
    match items.first().and_then(Sexp::as_atom) {
        Some(head) if head.eq_ignore_ascii_case("record") => {}
        _ => return Err(ctx.err(form.offset(), "expected (record ...)")),
    }
    let mut out = CorpusRecord::default();
    let mut seen_quality = false;
    for field in &items[1..] {
        let parts = field
            .as_list()
            .ok_or_else(|| ctx.err(field.offset(), "expected (field ...)"))?;
        let (name, rest) = parts
            .split_first()
            .ok_or_else(|| ctx.err(field.offset(), "empty field"))?;
        let name = name
            .as_atom()
            .ok_or_else(|| ctx.err(name.offset(), "field name must be a symbol"))?;
        let po = &mut out.output;
        match name.to_ascii_lowercase().as_str() {
            "utterance" => po.utterance = words_of(rest, ctx)?,
            "quality" => {
                po.quality = match rest.first().and_then(Sexp::as_atom) {
                    Some(q) if q.eq_ignore_ascii_case("good") && rest.len() == 1 => {
                        ParseQuality::Good
                    }
                    Some(q) if q.eq_ignore_ascii_case("bad") && rest.len() == 1 => {
                        ParseQuality::Bad
                    }
                    _ => return Err(ctx.err(field.offset(), "quality must be good or bad")),
                };
                seen_quality = true;
            }
            "complete" => {
                po.parsed_completely = match rest.first().and_then(Sexp::as_atom) {
                    Some(v) if v.eq_ignore_ascii_case("yes") && rest.len() == 1 => true,
                    Some(v) if v.eq_ignore_ascii_case("no") && rest.len() == 1 => false,
                    _ => return Err(ctx.err(field.offset(), "complete must be yes or no")),
                }
            }
            "partial" => po.partial = Some(fs_field(rest, field.offset(), ctx)?),
            "partial-symbols" => po.partial_symbols = words_of(rest, ctx)?,
            "skipped" => po.skipped.push(segment_from_sexp(rest, field.offset(), ctx)?),
            "gold" => out.gold = Some(fs_field(rest, field.offset(), ctx)?),
            other => return Err(ctx.err(field.offset(), format!("unknown field `{other}`"))),
        }
    }
    if !seen_quality {
        return Err(ctx.err(form.offset(), "missing (quality ...)"));
    }
    if out.output.parsed_completely && !out.output.skipped.is_empty() {
        return Err(ctx.err(form.offset(), "a complete parse cannot have skipped segments"));
    }
    Ok(out)
}

fn segment_from_sexp(items: &[Sexp], offset: usize, ctx: &Ctx) -> Result<SkippedSegment, RecordError> {
    let mut seg = SkippedSegment::default();
    let mut has_fs = false;
    for field in items {
        let parts = field
            .as_list()
            .ok_or_else(|| ctx.err(field.offset(), "expected (fs ...), (symbols ...) or (words ...)"))?;
        let Some((name, rest)) = parts.split_first() else {
            return Err(ctx.err(field.offset(), "empty field"));
        };
        match name.as_atom().map(str::to_ascii_lowercase).as_deref() {
            Some("fs") => {
                seg.fs = fs_field(rest, field.offset(), ctx)?;
                has_fs = true;
            }
            Some("symbols") => seg.symbols = words_of(rest, ctx)?,
            Some("words") => seg.words = words_of(rest, ctx)?,
            _ => return Err(ctx.err(field.offset(), "unknown skipped-segment field")),
        }
    }
    if !has_fs {
        return Err(ctx.err(offset, "skipped segment without (fs ...)"));
    }
    Ok(seg)
}

fn write_words(out: &mut String, words: &[String]) {
    for w in words {
        out.push(' ');
        if !w.is_empty() && w.bytes().all(is_atom_char) {
            out.push_str(w);
        } else {
            write_quoted(out, w).unwrap();
        }
    }
}

impl CorpusRecord {
    /// Multi-line text that [`read_record`] reads back unchanged.
    pub fn to_text(&self) -> String {
        let po = &self.output;
        let mut out = String::from("(record\n  (utterance");
        write_words(&mut out, &po.utterance);
        out.push_str(")\n");
        writeln!(out, "  (quality {})", po.quality.as_str()).unwrap();
        writeln!(out, "  (complete {})", if po.parsed_completely { "yes" } else { "no" }).unwrap();
        if let Some(p) = &po.partial {
            writeln!(out, "  (partial {p})").unwrap();
        }
        if !po.partial_symbols.is_empty() {
            out.push_str("  (partial-symbols");
            write_words(&mut out, &po.partial_symbols);
            out.push_str(")\n");
        }
        for seg in &po.skipped {
            write!(out, "  (skipped (fs {})", seg.fs).unwrap();
            out.push_str(" (symbols");
            write_words(&mut out, &seg.symbols);
            out.push_str(") (words");
            write_words(&mut out, &seg.words);
            out.push_str("))\n");
        }
        if let Some(g) = &self.gold {
            writeln!(out, "  (gold {g})").unwrap();
        }
        out.pop();
        out.push_str(")\n");
        out
    }
}

/// Renders a corpus file, one blank line between records.
pub fn write_corpus(records: &[CorpusRecord]) -> String {
    records
        .iter()
        .map(CorpusRecord::to_text)
        .collect::<Vec<_>>()
        .join("\n")
}
