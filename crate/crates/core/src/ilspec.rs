//! The interlingua specification: a subsumption hierarchy over structural
//! types (`<NAME>`) whose leaves pin a frame symbol and a typed slot
//! inventory, plus enumerated atomic classes (`[NAME]`).
//!
//! Spec file syntax, one parenthesized form per rule:
//!
//! ```text
//! (root <EVENT>)
//! (sentence-types *state *query-if)
//! (atomic [DEGREE] very somewhat)
//! (atomic [NUMBER] :integer)
//! (<TEMPORAL> = <SIMPLE-TIME> <INTERVAL>)
//! (<BUSY> = ((frame *busy) (who <FRAME>) (when <TEMPORAL>) (degree [DEGREE])))
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::fstruct::{
    AtomicValue, FeaturePath, FeatureStructure, SlotValue, Symbol, FRAME, SENTENCE_TYPE, SPEECH_ACT,
};
use crate::sexp::{self, Sexp, SexpError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error(transparent)]
    Syntax(#[from] SexpError),
    #[error("{message} at byte {offset}")]
    Malformed { message: String, offset: usize },
    #[error("rule {rule}: undefined type {name}")]
    Undefined { rule: String, name: String },
    #[error("type {0} is defined twice")]
    DuplicateType(String),
    #[error("frame {frame} is owned by both {first} and {second}")]
    DuplicateFrame {
        frame: String,
        first: String,
        second: String,
    },
    #[error("subsumption cycle through {0}")]
    Cycle(String),
    #[error("no (root <TYPE>) directive")]
    MissingRoot,
    #[error("unknown type {0}")]
    UnknownType(String),
    #[error("{name} covers {leaves} leaf types; pick one")]
    AmbiguousTemplate { name: String, leaves: usize },
    #[error("{0} has no leaf type")]
    NoLeaf(String),
}

fn malformed(offset: usize, message: impl Into<String>) -> SpecError {
    SpecError::Malformed {
        message: message.into(),
        offset,
    }
}

/// `<NAME>` for structural types, `[NAME]` for atomic classes. Stored
/// uppercase with its brackets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeName(String);

impl TypeName {
    pub fn parse(text: &str) -> Option<TypeName> {
        let structural = text.starts_with('<') && text.ends_with('>');
        let atomic = text.starts_with('[') && text.ends_with(']');
        if text.len() < 3 || !(structural || atomic) {
            return None;
        }
        let inner = &text[1..text.len() - 1];
        if !inner.bytes().all(sexp::is_atom_char) || inner.contains(['<', '>', '[', ']']) {
            return None;
        }
        Some(TypeName(text.to_uppercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_structural(&self) -> bool {
        self.0.starts_with('<')
    }

    pub fn is_atomic_class(&self) -> bool {
        self.0.starts_with('[')
    }
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Panicking constructor for fixtures.
pub fn ty(text: &str) -> TypeName {
    TypeName::parse(text).unwrap_or_else(|| panic!("invalid type name {text:?}"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomicClass {
    Any,
    Integer,
    Enumerated(BTreeSet<AtomicValue>),
}

impl AtomicClass {
    pub fn contains(&self, value: &AtomicValue) -> bool {
        match self {
            AtomicClass::Any => true,
            AtomicClass::Integer => matches!(value, AtomicValue::Integer(_)),
            AtomicClass::Enumerated(set) => set.contains(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafRule {
    pub name: TypeName,
    pub frame: Symbol,
    /// Declared slots in file order.
    pub slots: Vec<(Symbol, TypeName)>,
}

impl LeafRule {
    pub fn slot_type(&self, slot: &str) -> Option<&TypeName> {
        self.slots.iter().find(|(s, _)| s == slot).map(|(_, t)| t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecRule {
    Union { name: TypeName, members: Vec<TypeName> },
    Leaf(LeafRule),
}

impl SpecRule {
    pub fn name(&self) -> &TypeName {
        match self {
            SpecRule::Union { name, .. } => name,
            SpecRule::Leaf(leaf) => &leaf.name,
        }
    }
}

/// An unfilled declared slot of some node in a structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenSlot {
    /// Path of the slot itself (node path + slot name).
    pub path: FeaturePath,
    pub frame: Symbol,
    pub slot: Symbol,
    pub allowed: TypeName,
}

impl OpenSlot {
    pub fn node_path(&self) -> FeaturePath {
        self.path.parent().unwrap_or_default()
    }
}

#[derive(Debug, Clone)]
pub struct InterlinguaSpec {
    rules: BTreeMap<TypeName, SpecRule>,
    /// Rule names in file order.
    order: Vec<TypeName>,
    atomic: BTreeMap<TypeName, AtomicClass>,
    sentence_types: Vec<Symbol>,
    root: TypeName,
    frame_owner: BTreeMap<Symbol, TypeName>,
    /// Reflexive-transitive closure of union membership.
    below: BTreeMap<TypeName, BTreeSet<TypeName>>,
    /// Leaves under each structural type, depth-first in member order.
    leaves_below: BTreeMap<TypeName, Vec<TypeName>>,
}

impl InterlinguaSpec {
    pub fn load(text: &str) -> Result<InterlinguaSpec, SpecError> {
        load_spec(text)
    }

    pub fn root(&self) -> &TypeName {
        &self.root
    }

    pub fn sentence_types(&self) -> &[Symbol] {
        &self.sentence_types
    }

    pub fn rule(&self, name: &TypeName) -> Option<&SpecRule> {
        self.rules.get(name)
    }

    pub fn rules(&self) -> impl Iterator<Item = &SpecRule> {
        self.order.iter().map(|n| &self.rules[n])
    }

    pub fn atomic_class(&self, name: &TypeName) -> Option<&AtomicClass> {
        self.atomic.get(name)
    }

    pub fn leaf(&self, name: &TypeName) -> Option<&LeafRule> {
        match self.rules.get(name)? {
            SpecRule::Leaf(l) => Some(l),
            SpecRule::Union { .. } => None,
        }
    }

    pub fn is_defined(&self, name: &TypeName) -> bool {
        self.rules.contains_key(name) || self.atomic.contains_key(name)
    }

    /// All leaf rules in file order.
    pub fn leaves(&self) -> impl Iterator<Item = &LeafRule> {
        self.rules().filter_map(|r| match r {
            SpecRule::Leaf(l) => Some(l),
            SpecRule::Union { .. } => None,
        })
    }

    /// Leaf types under `name` (itself if a leaf), depth-first in member order.
    pub fn leaves_under(&self, name: &TypeName) -> &[TypeName] {
        self.leaves_below.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn subsumes(&self, general: &TypeName, specific: &TypeName) -> Result<bool, SpecError> {
        for n in [general, specific] {
            if !self.is_defined(n) {
                return Err(SpecError::UnknownType(n.to_string()));
            }
        }
        Ok(self.subsumes_defined(general, specific))
    }

    /// [`subsumes`](Self::subsumes) for names already known to be defined;
    /// undefined names are simply unrelated.
    pub fn subsumes_defined(&self, general: &TypeName, specific: &TypeName) -> bool {
        general == specific || self.below.get(general).is_some_and(|s| s.contains(specific))
    }

    pub fn leaf_type_of(&self, fs: &FeatureStructure) -> Option<&TypeName> {
        self.frame_owner.get(fs.frame()?)
    }

    pub fn leaf_for_frame(&self, frame: &Symbol) -> Option<&LeafRule> {
        self.leaf(self.frame_owner.get(frame)?)
    }

    pub fn conforms(&self, fs: &FeatureStructure, t: &TypeName) -> Result<bool, SpecError> {
        if !self.is_defined(t) {
            return Err(SpecError::UnknownType(t.to_string()));
        }
        Ok(self.conforms_node(fs, t, true))
    }

    fn conforms_node(&self, fs: &FeatureStructure, t: &TypeName, root: bool) -> bool {
        let Some(leaf) = self.leaf_type_of(fs).and_then(|l| self.leaf(l)) else {
            return false;
        };
        if !self.subsumes_defined(t, &leaf.name) {
            return false;
        }
        fs.slots().all(|(slot, value)| match slot.as_str() {
            FRAME => true,
            SENTENCE_TYPE if root => value
                .as_atomic()
                .and_then(AtomicValue::as_symbol)
                .is_some_and(|s| self.sentence_types.contains(s)),
            SPEECH_ACT if root => true,
            name => leaf
                .slot_type(name)
                .is_some_and(|declared| self.value_conforms(value, declared)),
        })
    }

    pub fn value_conforms(&self, value: &SlotValue, t: &TypeName) -> bool {
        match value {
            SlotValue::Atomic(a) => self.atomic.get(t).is_some_and(|class| class.contains(a)),
            SlotValue::Structure(fs) => t.is_structural() && self.conforms_node(fs, t, false),
            SlotValue::Multiple(items) => items.iter().all(|v| self.value_conforms(v, t)),
        }
    }

    /// Unfilled declared slots of every typed node, pre-order, declaration
    /// order within a node.
    pub fn open_slots(&self, fs: &FeatureStructure) -> Vec<OpenSlot> {
        let mut out = Vec::new();
        for (node_path, node) in fs.constituents_with_paths() {
            let Some(leaf) = self.leaf_type_of(node).and_then(|l| self.leaf(l)) else {
                continue;
            };
            for (slot, allowed) in &leaf.slots {
                if node.get(slot.as_str()).is_none() {
                    out.push(OpenSlot {
                        path: node_path.child(slot.clone()),
                        frame: leaf.frame.clone(),
                        slot: slot.clone(),
                        allowed: allowed.clone(),
                    });
                }
            }
        }
        out
    }

    /// `((frame *f))` for the single leaf under `t`.
    pub fn template_for(&self, t: &TypeName) -> Result<FeatureStructure, SpecError> {
        if !self.rules.contains_key(t) {
            return Err(SpecError::UnknownType(t.to_string()));
        }
        match self.leaves_under(t) {
            [] => Err(SpecError::NoLeaf(t.to_string())),
            [leaf] => Ok(FeatureStructure::with_frame(&self.leaf(leaf).expect("leaf").frame)),
            many => Err(SpecError::AmbiguousTemplate {
                name: t.to_string(),
                leaves: many.len(),
            }),
        }
    }

    /// The largest part of `fs` that conforms to `leaf`: the leaf's frame
    /// plus every declared slot whose value (recursively pruned) conforms.
    pub fn coerce(&self, fs: &FeatureStructure, leaf: &TypeName) -> Option<FeatureStructure> {
        let rule = self.leaf(leaf)?;
        let mut out = FeatureStructure::with_frame(&rule.frame);
        for (slot, value) in fs.slots() {
            if slot == FRAME {
                continue;
            }
            let Some(declared) = rule.slot_type(slot.as_str()) else {
                continue;
            };
            if let Some(v) = self.coerce_value(value, declared) {
                out.set(slot.clone(), v);
            }
        }
        Some(out)
    }

    fn coerce_value(&self, value: &SlotValue, declared: &TypeName) -> Option<SlotValue> {
        match value {
            SlotValue::Atomic(a) => self
                .atomic
                .get(declared)
                .filter(|c| c.contains(a))
                .map(|_| value.clone()),
            SlotValue::Structure(inner) => {
                let leaf = self.leaf_type_of(inner)?;
                if !declared.is_structural() || !self.subsumes_defined(declared, leaf) {
                    return None;
                }
                self.coerce(inner, leaf).map(SlotValue::Structure)
            }
            SlotValue::Multiple(items) => SlotValue::multiple(
                items
                    .iter()
                    .filter_map(|v| self.coerce_value(v, declared))
                    .collect(),
            ),
        }
    }

    /// Every declared (frame, slot) pair, in file order.
    pub fn frame_slot_pairs(&self) -> Vec<(Symbol, Symbol)> {
        self.leaves()
            .flat_map(|l| l.slots.iter().map(move |(s, _)| (l.frame.clone(), s.clone())))
            .collect()
    }
}

pub fn load_spec(text: &str) -> Result<InterlinguaSpec, SpecError> {
    let forms = sexp::read_all(text)?;
    let mut rules: BTreeMap<TypeName, SpecRule> = BTreeMap::new();
    let mut order = Vec::new();
    let mut atomic = BTreeMap::new();
    let mut sentence_types = Vec::new();
    let mut root = None;

    for form in &forms {
        let items = form
            .as_list()
            .ok_or_else(|| malformed(form.offset(), "expected a parenthesized rule"))?;
        let head = items
            .first()
            .and_then(Sexp::as_atom)
            .ok_or_else(|| malformed(form.offset(), "rule must start with a name or directive"))?;
        match head.to_ascii_lowercase().as_str() {
            "root" => {
                let [_, name] = items else {
                    return Err(malformed(form.offset(), "(root <TYPE>) takes one type"));
                };
                root = Some(type_name(name)?);
            }
            "sentence-types" => {
                for item in &items[1..] {
                    let s = item
                        .as_atom()
                        .and_then(Symbol::new)
                        .ok_or_else(|| malformed(item.offset(), "sentence type must be a symbol"))?;
                    sentence_types.push(s);
                }
            }
            "atomic" => {
                let name = items
                    .get(1)
                    .ok_or_else(|| malformed(form.offset(), "(atomic [NAME] ...) needs a name"))
                    .and_then(type_name)?;
                if !name.is_atomic_class() {
                    return Err(malformed(form.offset(), "atomic classes are written [NAME]"));
                }
                let class = atomic_class(&items[2..], form.offset())?;
                if atomic.insert(name.clone(), class).is_some() {
                    return Err(SpecError::DuplicateType(name.to_string()));
                }
            }
            _ => {
                let rule = parse_rule(items, form.offset())?;
                let name = rule.name().clone();
                if rules.insert(name.clone(), rule).is_some() {
                    return Err(SpecError::DuplicateType(name.to_string()));
                }
                order.push(name);
            }
        }
    }

    let root = root.ok_or(SpecError::MissingRoot)?;
    build(rules, order, atomic, sentence_types, root)
}

fn type_name(form: &Sexp) -> Result<TypeName, SpecError> {
    form.as_atom()
        .and_then(TypeName::parse)
        .ok_or_else(|| malformed(form.offset(), "expected <TYPE> or [CLASS]"))
}

fn atomic_class(items: &[Sexp], offset: usize) -> Result<AtomicClass, SpecError> {
    match items {
        [] => Err(malformed(offset, "atomic class needs members, :any or :integer")),
        [single] if single.as_atom().is_some_and(|a| a.eq_ignore_ascii_case(":any")) => {
            Ok(AtomicClass::Any)
        }
        [single] if single.as_atom().is_some_and(|a| a.eq_ignore_ascii_case(":integer")) => {
            Ok(AtomicClass::Integer)
        }
        members => {
            let mut set = BTreeSet::new();
            for m in members {
                let text = m.to_string();
                let fs = crate::fstruct::read_fs(&format!("((x {text}))"))
                    .map_err(|_| malformed(m.offset(), format!("invalid atom {text}")))?;
                match fs.get("x") {
                    Some(SlotValue::Atomic(a)) => set.insert(a.clone()),
                    _ => return Err(malformed(m.offset(), format!("invalid atom {text}"))),
                };
            }
            Ok(AtomicClass::Enumerated(set))
        }
    }
}

fn parse_rule(items: &[Sexp], offset: usize) -> Result<SpecRule, SpecError> {
    let name = type_name(&items[0])?;
    if !name.is_structural() {
        return Err(malformed(offset, "rule names are written <NAME>"));
    }
    if items.get(1).and_then(Sexp::as_atom) != Some("=") {
        return Err(malformed(offset, format!("rule {name}: expected `=` after the name")));
    }
    let body = &items[2..];
    match body {
        [Sexp::List { items: slots, .. }] => {
            let mut frame = None;
            let mut decl: Vec<(Symbol, TypeName)> = Vec::new();
            for slot in slots {
                let pair = slot.as_list().unwrap_or(&[]);
                let [key, value] = pair else {
                    return Err(malformed(slot.offset(), format!("rule {name}: expected (slot TYPE)")));
                };
                let key = key
                    .as_atom()
                    .and_then(Symbol::new)
                    .ok_or_else(|| malformed(key.offset(), "slot name must be a symbol"))?;
                if key == FRAME {
                    let f = value
                        .as_atom()
                        .and_then(Symbol::new)
                        .filter(|s| s.as_str().starts_with('*'))
                        .ok_or_else(|| malformed(value.offset(), "frame must be a *symbol"))?;
                    frame = Some(f);
                } else {
                    if decl.iter().any(|(k, _)| *k == key) {
                        return Err(malformed(slot.offset(), format!("rule {name}: duplicate slot {key}")));
                    }
                    decl.push((key, type_name(value)?));
                }
            }
            let frame =
                frame.ok_or_else(|| malformed(offset, format!("rule {name}: leaf has no frame")))?;
            Ok(SpecRule::Leaf(LeafRule {
                name,
                frame,
                slots: decl,
            }))
        }
        [] => Err(malformed(offset, format!("rule {name}: empty right-hand side"))),
        members => {
            let members = members.iter().map(type_name).collect::<Result<Vec<_>, _>>()?;
            Ok(SpecRule::Union { name, members })
        }
    }
}

fn build(
    rules: BTreeMap<TypeName, SpecRule>,
    order: Vec<TypeName>,
    atomic: BTreeMap<TypeName, AtomicClass>,
    sentence_types: Vec<Symbol>,
    root: TypeName,
) -> Result<InterlinguaSpec, SpecError> {
    let defined = |n: &TypeName| rules.contains_key(n) || atomic.contains_key(n);

    let mut frame_owner: BTreeMap<Symbol, TypeName> = BTreeMap::new();
    for name in &order {
        match &rules[name] {
            SpecRule::Union { members, .. } => {
                if let Some(m) = members.iter().find(|m| !defined(m)) {
                    return Err(SpecError::Undefined {
                        rule: name.to_string(),
                        name: m.to_string(),
                    });
                }
            }
            SpecRule::Leaf(leaf) => {
                if let Some((_, t)) = leaf.slots.iter().find(|(_, t)| !defined(t)) {
                    return Err(SpecError::Undefined {
                        rule: name.to_string(),
                        name: t.to_string(),
                    });
                }
                if let Some(first) = frame_owner.insert(leaf.frame.clone(), name.clone()) {
                    return Err(SpecError::DuplicateFrame {
                        frame: leaf.frame.to_string(),
                        first: first.to_string(),
                        second: name.to_string(),
                    });
                }
            }
        }
    }
    if !defined(&root) {
        return Err(SpecError::Undefined {
            rule: "root".into(),
            name: root.to_string(),
        });
    }

    // Depth-first closure with cycle detection.
    let mut below: BTreeMap<TypeName, BTreeSet<TypeName>> = BTreeMap::new();
    let mut leaves_below: BTreeMap<TypeName, Vec<TypeName>> = BTreeMap::new();
    for name in &order {
        let mut stack = Vec::new();
        close(name, &rules, &mut below, &mut leaves_below, &mut stack)?;
    }

    Ok(InterlinguaSpec {
        rules,
        order,
        atomic,
        sentence_types,
        root,
        frame_owner,
        below,
        leaves_below,
    })
}

fn close(
    name: &TypeName,
    rules: &BTreeMap<TypeName, SpecRule>,
    below: &mut BTreeMap<TypeName, BTreeSet<TypeName>>,
    leaves_below: &mut BTreeMap<TypeName, Vec<TypeName>>,
    stack: &mut Vec<TypeName>,
) -> Result<(), SpecError> {
    if below.contains_key(name) {
        return Ok(());
    }
    if stack.contains(name) {
        return Err(SpecError::Cycle(name.to_string()));
    }
    let mut set = BTreeSet::new();
    let mut leaves = Vec::new();
    match rules.get(name) {
        Some(SpecRule::Leaf(_)) => leaves.push(name.clone()),
        Some(SpecRule::Union { members, .. }) => {
            stack.push(name.clone());
            for m in members {
                set.insert(m.clone());
                if rules.contains_key(m) {
                    close(m, rules, below, leaves_below, stack)?;
                    set.extend(below[m].iter().cloned());
                    for l in &leaves_below[m] {
                        if !leaves.contains(l) {
                            leaves.push(l.clone());
                        }
                    }
                }
            }
            stack.pop();
        }
        None => {}
    }
    below.insert(name.clone(), set);
    leaves_below.insert(name.clone(), leaves);
    Ok(())
}
