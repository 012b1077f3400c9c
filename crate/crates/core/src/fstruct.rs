//! Typed feature structures: the interlingua instances that the parser
//! produces and the repair engine rebuilds.
//!
//! The textual format is the parenthesized slot list used throughout the
//! interlingua literature:
//!
//! ```text
//! ((sentence-type *state)
//!  (frame *free)
//!  (who ((frame *i)))
//!  (when ((frame *special-time) (specifier (*multiple* all-range next)))))
//! ```
//!
//! Symbols are case-insensitive and stored lowercase. Structures keep slot
//! insertion order, which only matters for printing; [`FeatureStructure::equiv`]
//! ignores it.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::sexp::{self, Sexp, SexpError};

pub const MULTIPLE_MARKER: &str = "*multiple*";
pub const FRAME: &str = "frame";
pub const SENTENCE_TYPE: &str = "sentence-type";
pub const SPEECH_ACT: &str = "speech-act";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FsError {
    #[error(transparent)]
    Syntax(#[from] SexpError),
    #[error("duplicate slot `{slot}` at byte {offset}")]
    DuplicateSlot { slot: String, offset: usize },
    #[error("slot `{slot}` has no value at byte {offset}")]
    EmptySlotValue { slot: String, offset: usize },
    #[error("{message} at byte {offset}")]
    Malformed { message: String, offset: usize },
}

impl FsError {
    pub fn offset(&self) -> usize {
        match self {
            FsError::Syntax(e) => e.offset,
            FsError::DuplicateSlot { offset, .. }
            | FsError::EmptySlotValue { offset, .. }
            | FsError::Malformed { offset, .. } => *offset,
        }
    }

    fn malformed(offset: usize, message: impl Into<String>) -> Self {
        FsError::Malformed {
            message: message.into(),
            offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("path is empty")]
    Empty,
    #[error("`{0}` does not address a structure")]
    NotAStructure(String),
    #[error("`{0}` does not address a multiple value")]
    NotMultiple(String),
    #[error("index out of range at `{0}`")]
    IndexOutOfRange(String),
    #[error("cannot nest a multiple value inside another")]
    NestedMultiple,
    #[error("invalid path syntax: {0}")]
    Syntax(String),
}

/// A case-insensitive identifier, stored lowercase.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(String);

impl Symbol {
    /// Canonicalizes `text`; `None` if it is empty, contains delimiter
    /// characters, or would read back as an integer.
    pub fn new(text: &str) -> Option<Symbol> {
        if text.is_empty() || !text.bytes().all(sexp::is_atom_char) || parse_int(text).is_some() {
            return None;
        }
        Some(Symbol(text.to_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl PartialEq<str> for Symbol {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for Symbol {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// Shorthand used by tests and fixtures; panics on an invalid symbol.
pub fn sym(text: &str) -> Symbol {
    Symbol::new(text).unwrap_or_else(|| panic!("invalid symbol {text:?}"))
}

fn parse_int(text: &str) -> Option<i64> {
    let digits = text.strip_prefix(['+', '-']).unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomicValue {
    Symbol(Symbol),
    Integer(i64),
    String(String),
}

impl AtomicValue {
    pub fn symbol(text: &str) -> AtomicValue {
        AtomicValue::Symbol(sym(text))
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match self {
            AtomicValue::Symbol(s) => Some(s),
            _ => None,
        }
    }

    /// Reads a bare word the way the structure reader reads an atom.
    pub fn parse(text: &str) -> Option<AtomicValue> {
        AtomicValue::from_atom(text, 0).ok()
    }

    fn from_atom(text: &str, offset: usize) -> Result<AtomicValue, FsError> {
        if let Some(n) = parse_int(text) {
            return Ok(AtomicValue::Integer(n));
        }
        Symbol::new(text)
            .map(AtomicValue::Symbol)
            .ok_or_else(|| FsError::malformed(offset, format!("invalid atom `{text}`")))
    }
}

impl fmt::Display for AtomicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomicValue::Symbol(s) => write!(f, "{s}"),
            AtomicValue::Integer(n) => write!(f, "{n}"),
            AtomicValue::String(s) => sexp::write_quoted(f, s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotValue {
    Atomic(AtomicValue),
    Structure(FeatureStructure),
    /// Ordered alternatives; at least two elements, none of them `Multiple`.
    Multiple(Vec<SlotValue>),
}

impl SlotValue {
    /// Builds a multiple value, splicing nested multiples and collapsing a
    /// single element to itself. `None` for an empty list.
    pub fn multiple(values: Vec<SlotValue>) -> Option<SlotValue> {
        let mut flat = Vec::with_capacity(values.len());
        for v in values {
            match v {
                SlotValue::Multiple(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => None,
            1 => flat.pop(),
            _ => Some(SlotValue::Multiple(flat)),
        }
    }

    pub fn as_structure(&self) -> Option<&FeatureStructure> {
        match self {
            SlotValue::Structure(fs) => Some(fs),
            _ => None,
        }
    }

    pub fn as_atomic(&self) -> Option<&AtomicValue> {
        match self {
            SlotValue::Atomic(a) => Some(a),
            _ => None,
        }
    }

    /// Order-insensitive on structure slots, order-sensitive on multiples.
    pub fn equiv(&self, other: &SlotValue) -> bool {
        match (self, other) {
            (SlotValue::Atomic(a), SlotValue::Atomic(b)) => a == b,
            (SlotValue::Structure(a), SlotValue::Structure(b)) => a.equiv(b),
            (SlotValue::Multiple(a), SlotValue::Multiple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.equiv(y))
            }
            _ => false,
        }
    }
}

impl From<AtomicValue> for SlotValue {
    fn from(a: AtomicValue) -> Self {
        SlotValue::Atomic(a)
    }
}

impl From<FeatureStructure> for SlotValue {
    fn from(fs: FeatureStructure) -> Self {
        SlotValue::Structure(fs)
    }
}

impl fmt::Display for SlotValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotValue::Atomic(a) => write!(f, "{a}"),
            SlotValue::Structure(fs) => write!(f, "{fs}"),
            SlotValue::Multiple(items) => {
                f.write_str("(")?;
                f.write_str(MULTIPLE_MARKER)?;
                for item in items {
                    write!(f, " {item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureStructure {
    slots: Vec<(Symbol, SlotValue)>,
}

impl FeatureStructure {
    pub fn new() -> Self {
        Self::default()
    }

    /// `((frame <frame>))`.
    pub fn with_frame(frame: &Symbol) -> Self {
        let mut fs = Self::new();
        fs.set(frame_slot(), SlotValue::Atomic(AtomicValue::Symbol(frame.clone())));
        fs
    }

    pub fn slots(&self) -> impl Iterator<Item = (&Symbol, &SlotValue)> {
        self.slots.iter().map(|(k, v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn get(&self, slot: &str) -> Option<&SlotValue> {
        self.slots.iter().find(|(k, _)| k == slot).map(|(_, v)| v)
    }

    fn get_mut(&mut self, slot: &str) -> Option<&mut SlotValue> {
        self.slots.iter_mut().find(|(k, _)| k == slot).map(|(_, v)| v)
    }

    /// Replaces the value of an existing slot in place, or appends a new one.
    pub fn set(&mut self, slot: Symbol, value: SlotValue) {
        match self.get_mut(slot.as_str()) {
            Some(v) => *v = value,
            None => self.slots.push((slot, value)),
        }
    }

    /// Like [`set`](Self::set) but a new slot goes first.
    pub fn set_front(&mut self, slot: Symbol, value: SlotValue) {
        match self.get_mut(slot.as_str()) {
            Some(v) => *v = value,
            None => self.slots.insert(0, (slot, value)),
        }
    }

    pub fn remove(&mut self, slot: &str) -> Option<SlotValue> {
        let idx = self.slots.iter().position(|(k, _)| k == slot)?;
        Some(self.slots.remove(idx).1)
    }

    pub fn frame(&self) -> Option<&Symbol> {
        self.get(FRAME)?.as_atomic()?.as_symbol()
    }

    pub fn sentence_type(&self) -> Option<&Symbol> {
        self.get(SENTENCE_TYPE)?.as_atomic()?.as_symbol()
    }

    /// Slot-order-insensitive equality.
    pub fn equiv(&self, other: &FeatureStructure) -> bool {
        self.slots.len() == other.slots.len()
            && self
                .slots
                .iter()
                .all(|(k, v)| other.get(k.as_str()).is_some_and(|w| v.equiv(w)))
    }

    pub fn get_path(&self, path: &FeaturePath) -> Option<&SlotValue> {
        let (first, rest) = path.elems.split_first()?;
        let mut value = step(self.get(first.slot.as_str())?, first.index)?;
        for elem in rest {
            let fs = value.as_structure()?;
            value = step(fs.get(elem.slot.as_str())?, elem.index)?;
        }
        Some(value)
    }

    /// Returns a copy with `value` stored at `path`; every other slot is kept.
    pub fn set_path(&self, path: &FeaturePath, value: SlotValue) -> Result<FeatureStructure, PathError> {
        let mut out = self.clone();
        out.set_path_mut(path, value)?;
        Ok(out)
    }

    pub fn set_path_mut(&mut self, path: &FeaturePath, value: SlotValue) -> Result<(), PathError> {
        let (last, prefix) = path.elems.split_last().ok_or(PathError::Empty)?;
        let mut node = self;
        for elem in prefix {
            let here = elem.to_string();
            let v = node
                .get_mut(elem.slot.as_str())
                .ok_or_else(|| PathError::NotAStructure(here.clone()))?;
            let v = step_mut(v, elem.index, &here)?;
            node = match v {
                SlotValue::Structure(fs) => fs,
                _ => return Err(PathError::NotAStructure(here)),
            };
        }
        match last.index {
            None => node.set(last.slot.clone(), value),
            Some(i) => {
                if matches!(value, SlotValue::Multiple(_)) {
                    return Err(PathError::NestedMultiple);
                }
                let here = last.to_string();
                match node.get_mut(last.slot.as_str()) {
                    Some(SlotValue::Multiple(items)) => {
                        let slot = items.get_mut(i).ok_or(PathError::IndexOutOfRange(here))?;
                        *slot = value;
                    }
                    _ => return Err(PathError::NotMultiple(here)),
                }
            }
        }
        Ok(())
    }

    /// Copy with the slot at `path` removed (absent paths are a no-op).
    pub fn remove_path(&self, path: &FeaturePath) -> FeatureStructure {
        let mut out = self.clone();
        if let Some((last, prefix)) = path.elems.split_last() {
            if last.index.is_none() {
                let parent = if prefix.is_empty() {
                    Some(&mut out)
                } else {
                    match out.get_path_mut(prefix) {
                        Some(SlotValue::Structure(fs)) => Some(fs),
                        _ => None,
                    }
                };
                if let Some(parent) = parent {
                    parent.remove(last.slot.as_str());
                }
            }
        }
        out
    }

    fn get_path_mut(&mut self, elems: &[PathElem]) -> Option<&mut SlotValue> {
        let (first, rest) = elems.split_first()?;
        let mut value = step_mut(self.get_mut(first.slot.as_str())?, first.index, "").ok()?;
        for elem in rest {
            let fs = match value {
                SlotValue::Structure(fs) => fs,
                _ => return None,
            };
            value = step_mut(fs.get_mut(elem.slot.as_str())?, elem.index, "").ok()?;
        }
        Some(value)
    }

    /// One `(path, atom)` pair per atomic leaf.
    pub fn flatten(&self) -> BTreeSet<(FeaturePath, AtomicValue)> {
        let mut out = BTreeSet::new();
        let mut prefix = Vec::new();
        flatten_into(self, &mut prefix, &mut out);
        out
    }

    /// `self` followed by every nested structure, pre-order, with the path
    /// that reaches it (empty for `self`).
    pub fn constituents_with_paths(&self) -> Vec<(FeaturePath, &FeatureStructure)> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        collect_constituents(self, &mut prefix, &mut out);
        out
    }

    pub fn constituents(&self) -> Vec<&FeatureStructure> {
        self.constituents_with_paths().into_iter().map(|(_, fs)| fs).collect()
    }
}

fn frame_slot() -> Symbol {
    Symbol(FRAME.to_string())
}

fn step(value: &SlotValue, index: Option<usize>) -> Option<&SlotValue> {
    match (value, index) {
        (SlotValue::Multiple(items), Some(i)) => items.get(i),
        (_, Some(_)) => None,
        (v, None) => Some(v),
    }
}

fn step_mut<'a>(
    value: &'a mut SlotValue,
    index: Option<usize>,
    here: &str,
) -> Result<&'a mut SlotValue, PathError> {
    match (value, index) {
        (SlotValue::Multiple(items), Some(i)) => {
            items.get_mut(i).ok_or_else(|| PathError::IndexOutOfRange(here.to_string()))
        }
        (_, Some(_)) => Err(PathError::NotMultiple(here.to_string())),
        (v, None) => Ok(v),
    }
}

fn flatten_into(
    fs: &FeatureStructure,
    prefix: &mut Vec<PathElem>,
    out: &mut BTreeSet<(FeaturePath, AtomicValue)>,
) {
    for (slot, value) in &fs.slots {
        match value {
            SlotValue::Multiple(items) => {
                for (i, item) in items.iter().enumerate() {
                    prefix.push(PathElem::indexed(slot.clone(), i));
                    flatten_value(item, prefix, out);
                    prefix.pop();
                }
            }
            other => {
                prefix.push(PathElem::slot(slot.clone()));
                flatten_value(other, prefix, out);
                prefix.pop();
            }
        }
    }
}

fn flatten_value(
    value: &SlotValue,
    prefix: &mut Vec<PathElem>,
    out: &mut BTreeSet<(FeaturePath, AtomicValue)>,
) {
    match value {
        SlotValue::Atomic(a) => {
            out.insert((FeaturePath { elems: prefix.clone() }, a.clone()));
        }
        SlotValue::Structure(fs) => flatten_into(fs, prefix, out),
        // Only reachable for malformed nested multiples; keep them visible.
        SlotValue::Multiple(items) => items.iter().for_each(|v| flatten_value(v, prefix, out)),
    }
}

fn collect_constituents<'a>(
    fs: &'a FeatureStructure,
    prefix: &mut Vec<PathElem>,
    out: &mut Vec<(FeaturePath, &'a FeatureStructure)>,
) {
    out.push((FeaturePath { elems: prefix.clone() }, fs));
    for (slot, value) in &fs.slots {
        match value {
            SlotValue::Structure(inner) => {
                prefix.push(PathElem::slot(slot.clone()));
                collect_constituents(inner, prefix, out);
                prefix.pop();
            }
            SlotValue::Multiple(items) => {
                for (i, item) in items.iter().enumerate() {
                    if let SlotValue::Structure(inner) = item {
                        prefix.push(PathElem::indexed(slot.clone(), i));
                        collect_constituents(inner, prefix, out);
                        prefix.pop();
                    }
                }
            }
            SlotValue::Atomic(_) => {}
        }
    }
}

impl fmt::Display for FeatureStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, (slot, value)) in self.slots.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "({slot} {value})")?;
        }
        f.write_str(")")
    }
}

impl FromStr for FeatureStructure {
    type Err = FsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        read_fs(s)
    }
}

/// Parses one feature structure in the parenthesized wire format.
pub fn read_fs(text: &str) -> Result<FeatureStructure, FsError> {
    fs_from_sexp(&sexp::read_one(text)?)
}

/// Canonical single-line rendering; `read_fs(&print_fs(fs)) == *fs`.
pub fn print_fs(fs: &FeatureStructure) -> String {
    fs.to_string()
}

pub(crate) fn fs_from_sexp(form: &Sexp) -> Result<FeatureStructure, FsError> {
    let items = form
        .as_list()
        .ok_or_else(|| FsError::malformed(form.offset(), "expected a parenthesized slot list"))?;
    let mut fs = FeatureStructure::new();
    for item in items {
        let parts = item
            .as_list()
            .ok_or_else(|| FsError::malformed(item.offset(), "expected `(slot value)`"))?;
        let (name, rest) = parts
            .split_first()
            .ok_or_else(|| FsError::malformed(item.offset(), "empty slot"))?;
        let name_text = name
            .as_atom()
            .ok_or_else(|| FsError::malformed(name.offset(), "slot name must be a symbol"))?;
        let slot = Symbol::new(name_text).ok_or_else(|| {
            FsError::malformed(name.offset(), format!("invalid slot name `{name_text}`"))
        })?;
        if fs.get(slot.as_str()).is_some() {
            return Err(FsError::DuplicateSlot {
                slot: slot.0,
                offset: item.offset(),
            });
        }
        let value = match rest {
            [] => {
                return Err(FsError::EmptySlotValue {
                    slot: slot.0,
                    offset: item.offset(),
                })
            }
            [value] => value_from_sexp(value, false)?,
            [_, extra, ..] => {
                return Err(FsError::malformed(
                    extra.offset(),
                    format!("slot `{slot}` has more than one value; use (*multiple* ...)"),
                ))
            }
        };
        fs.slots.push((slot, value));
    }
    Ok(fs)
}

fn value_from_sexp(form: &Sexp, inside_multiple: bool) -> Result<SlotValue, FsError> {
    match form {
        Sexp::Atom { text, offset } => Ok(SlotValue::Atomic(AtomicValue::from_atom(text, *offset)?)),
        Sexp::Str { text, .. } => Ok(SlotValue::Atomic(AtomicValue::String(text.clone()))),
        Sexp::List { items, offset } => {
            let is_multiple = items
                .first()
                .and_then(Sexp::as_atom)
                .is_some_and(|a| a.eq_ignore_ascii_case(MULTIPLE_MARKER));
            if !is_multiple {
                return fs_from_sexp(form).map(SlotValue::Structure);
            }
            if inside_multiple {
                return Err(FsError::malformed(*offset, "nested *multiple* value"));
            }
            let values = items[1..]
                .iter()
                .map(|v| value_from_sexp(v, true))
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() < 2 {
                return Err(FsError::malformed(*offset, "*multiple* needs at least two values"));
            }
            Ok(SlotValue::Multiple(values))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathElem {
    pub slot: Symbol,
    pub index: Option<usize>,
}

impl PathElem {
    pub fn slot(slot: Symbol) -> Self {
        PathElem { slot, index: None }
    }

    pub fn indexed(slot: Symbol, index: usize) -> Self {
        PathElem {
            slot,
            index: Some(index),
        }
    }
}

impl fmt::Display for PathElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}[{i}]", self.slot),
            None => write!(f, "{}", self.slot),
        }
    }
}

/// Slot names from the root, written `when.specifier[1]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeaturePath {
    pub elems: Vec<PathElem>,
}

impl FeaturePath {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn of(slots: &[&str]) -> Self {
        FeaturePath {
            elems: slots.iter().map(|s| PathElem::slot(sym(s))).collect(),
        }
    }

    pub fn is_root(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn child(&self, slot: Symbol) -> FeaturePath {
        let mut out = self.clone();
        out.elems.push(PathElem::slot(slot));
        out
    }

    pub fn join(&self, tail: &FeaturePath) -> FeaturePath {
        let mut out = self.clone();
        out.elems.extend(tail.elems.iter().cloned());
        out
    }

    pub fn last_slot(&self) -> Option<&Symbol> {
        self.elems.last().map(|e| &e.slot)
    }

    pub fn parent(&self) -> Option<FeaturePath> {
        let (_, prefix) = self.elems.split_last()?;
        Some(FeaturePath {
            elems: prefix.to_vec(),
        })
    }
}

impl fmt::Display for FeaturePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.elems.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl FromStr for FeaturePath {
    type Err = PathError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Ok(FeaturePath::root());
        }
        let mut elems = Vec::new();
        for part in s.split('.') {
            let (name, index) = match part.strip_suffix(']').and_then(|p| p.split_once('[')) {
                Some((name, idx)) => {
                    let i = idx.parse().map_err(|_| PathError::Syntax(part.to_string()))?;
                    (name, Some(i))
                }
                None => (part, None),
            };
            let slot = Symbol::new(name).ok_or_else(|| PathError::Syntax(part.to_string()))?;
            elems.push(PathElem { slot, index });
        }
        Ok(FeaturePath { elems })
    }
}
