//! Repair hypotheses, the eight fixed strategies and the meta-strategy.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::fstruct::{AtomicValue, FeaturePath, FeatureStructure, SlotValue, Symbol};
use crate::ilspec::{InterlinguaSpec, OpenSlot, TypeName};
use crate::minet::{slot_unit, units, Networks, TRUE_UNIT};
use crate::repairmem::{DynamicRepairMemory, TopLevelPhase};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Hypothesis {
    TopLevelFrame {
        leaf: TypeName,
    },
    SentenceType {
        sentence_type: Symbol,
    },
    CombineChunks {
        members: Vec<usize>,
        result: TypeName,
    },
    InsertChunk {
        chunk: usize,
        /// Path of the constituent inside the chunk; empty for the chunk itself.
        constituent: FeaturePath,
        /// Slot path in the current analysis.
        target: FeaturePath,
        as_type: TypeName,
    },
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::TopLevelFrame { leaf } => write!(f, "top-level-frame {leaf}"),
            Hypothesis::SentenceType { sentence_type } => write!(f, "sentence-type {sentence_type}"),
            Hypothesis::CombineChunks { members, result } => {
                let ids: Vec<String> = members.iter().map(|m| m.to_string()).collect();
                write!(f, "combine {} as {result}", ids.join(","))
            }
            Hypothesis::InsertChunk {
                chunk,
                constituent,
                target,
                as_type,
            } => {
                write!(f, "insert chunk {chunk}")?;
                if !constituent.is_root() {
                    write!(f, " at {constituent}")?;
                }
                write!(f, " into {target} as {as_type}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Approach {
    TopDown,
    BottomUp,
}

impl Approach {
    fn letter(self) -> &'static str {
        match self {
            Approach::TopDown => "td",
            Approach::BottomUp => "bu",
        }
    }
}

/// Answers to the three questions: how the top-level frame is chosen, how
/// constituents are built, and what drives the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Strategy {
    pub q1: Approach,
    pub q2: Approach,
    pub q3: Approach,
}

impl Strategy {
    pub fn all() -> [Strategy; 8] {
        std::array::from_fn(|i| {
            let pick = |bit: usize| if i & bit == 0 { Approach::TopDown } else { Approach::BottomUp };
            Strategy {
                q1: pick(4),
                q2: pick(2),
                q3: pick(1),
            }
        })
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.q1.letter(), self.q2.letter(), self.q3.letter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Policy {
    Fixed(Strategy),
    Meta,
}

impl Policy {
    /// The eight fixed strategies followed by the meta-strategy.
    pub fn all() -> Vec<Policy> {
        let mut out: Vec<Policy> = Strategy::all().into_iter().map(Policy::Fixed).collect();
        out.push(Policy::Meta);
        out
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Fixed(s) => write!(f, "{s}"),
            Policy::Meta => f.write_str("meta"),
        }
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Policy, String> {
        Policy::all()
            .into_iter()
            .find(|p| p.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown policy `{s}`; expected meta or e.g. td-bu-td"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepairConfig {
    pub policy: Policy,
    pub max_questions: usize,
    pub enable_combine: bool,
    pub top_frame_candidates: usize,
    pub lambda: f64,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            policy: Policy::Meta,
            max_questions: 10,
            enable_combine: false,
            top_frame_candidates: 5,
            lambda: crate::minet::DEFAULT_LAMBDA,
        }
    }
}

/// The parser's top-level leaf, when it names an event under the root.
pub fn parser_leaf(drm: &DynamicRepairMemory, spec: &InterlinguaSpec) -> Option<TypeName> {
    spec.leaf_type_of(&drm.current)
        .filter(|l| spec.subsumes_defined(spec.root(), l))
        .cloned()
}

fn leaf_names(types: &[TypeName]) -> BTreeSet<String> {
    types.iter().map(|t| t.to_string()).collect()
}

fn type_of(output: &str) -> TypeName {
    TypeName::parse(output).expect("network outputs are type names")
}

pub fn gen_top_level(
    drm: &DynamicRepairMemory,
    spec: &InterlinguaSpec,
    nets: &Networks,
    cap: usize,
) -> Vec<Hypothesis> {
    let ranked = nets.rank_types(&drm.all_symbols(), spec.leaves_under(spec.root()));
    let mut out: Vec<TypeName> = ranked.iter().take(cap).map(|p| type_of(&p.output)).collect();
    if let Some(leaf) = parser_leaf(drm, spec) {
        if !out.contains(&leaf) {
            out.push(leaf);
        }
    }
    out.into_iter().map(|leaf| Hypothesis::TopLevelFrame { leaf }).collect()
}

pub fn gen_sentence_type(drm: &DynamicRepairMemory, spec: &InterlinguaSpec, nets: &Networks) -> Vec<Hypothesis> {
    let mask: BTreeSet<String> = spec.sentence_types().iter().map(|s| s.to_string()).collect();
    nets.symbols_to_sentence_type
        .predict(&drm.all_symbols(), Some(&mask))
        .into_iter()
        .filter_map(|p| Symbol::new(&p.output))
        .map(|sentence_type| Hypothesis::SentenceType { sentence_type })
        .collect()
}

/// Chunks that may take part in a combination, most recent first.
fn combinable(drm: &DynamicRepairMemory) -> Vec<usize> {
    drm.chunks
        .iter()
        .rev()
        .filter(|c| !c.consumed && c.pending_in.is_none())
        .map(|c| c.id)
        .collect()
}

/// Leaves that have a structural slot for every typed member.
fn combination_targets(drm: &DynamicRepairMemory, spec: &InterlinguaSpec, members: &[usize]) -> Vec<TypeName> {
    spec.leaves()
        .filter(|rule| rule.slots.iter().any(|(_, t)| t.is_structural()))
        .filter(|rule| {
            members.iter().all(|m| {
                let Some(leaf) = drm.chunk(*m).and_then(|c| c.leaf_type.as_ref()) else {
                    return true;
                };
                rule.slots
                    .iter()
                    .any(|(_, t)| t.is_structural() && spec.subsumes_defined(t, leaf))
            })
        })
        .map(|rule| rule.name.clone())
        .collect()
}

pub fn gen_combine(drm: &DynamicRepairMemory, spec: &InterlinguaSpec, nets: &Networks) -> Vec<Hypothesis> {
    let ids = combinable(drm);
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            subsets.push(vec![ids[i], ids[j]]);
        }
    }
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            for k in j + 1..ids.len() {
                subsets.push(vec![ids[i], ids[j], ids[k]]);
            }
        }
    }
    let mut out = Vec::new();
    for mut members in subsets {
        let targets = combination_targets(drm, spec, &members);
        if targets.is_empty() {
            continue;
        }
        let mut symbols = BTreeSet::new();
        for m in &members {
            symbols.extend(drm.chunk(*m).map(|c| c.symbols.clone()).unwrap_or_default());
        }
        let Some(top) = nets.rank_types(&symbols, &targets).into_iter().next() else {
            continue;
        };
        members.sort_unstable();
        out.push(Hypothesis::CombineChunks {
            members,
            result: type_of(&top.output),
        });
    }
    out
}

/// The value an insertion would store, or `None` when it cannot be built.
pub fn insertion_value(h: &Hypothesis, drm: &DynamicRepairMemory, spec: &InterlinguaSpec) -> Option<SlotValue> {
    let Hypothesis::InsertChunk {
        chunk,
        constituent,
        as_type,
        ..
    } = h
    else {
        return None;
    };
    let chunk = drm.chunk(*chunk)?;
    if as_type.is_atomic_class() {
        let [word] = chunk.words.as_slice() else { return None };
        let value = SlotValue::Atomic(AtomicValue::parse(word)?);
        return spec.value_conforms(&value, as_type).then_some(value);
    }
    let node: &FeatureStructure = if constituent.is_root() {
        &chunk.fs
    } else {
        chunk.fs.get_path(constituent)?.as_structure()?
    };
    match spec.leaf_type_of(node) {
        Some(leaf) if leaf == as_type => spec.coerce(node, leaf).map(SlotValue::Structure),
        Some(_) => None,
        None if chunk.leaf_type.is_none() && constituent.is_root() => {
            spec.coerce(node, as_type).map(SlotValue::Structure)
        }
        None => None,
    }
}

fn slot_prior(nets: &Networks, slot: &OpenSlot) -> f64 {
    nets.slot_prior
        .score(&units([TRUE_UNIT]), &slot_unit(&slot.frame, &slot.slot))
}

/// Open slots ranked by the slot-prior network; ties keep declaration order.
fn ranked_slots(drm: &DynamicRepairMemory, spec: &InterlinguaSpec, nets: &Networks) -> Vec<OpenSlot> {
    let mut slots: Vec<(f64, OpenSlot)> = spec
        .open_slots(&drm.current)
        .into_iter()
        .map(|s| (slot_prior(nets, &s), s))
        .collect();
    slots.sort_by(|a, b| b.0.total_cmp(&a.0));
    slots.into_iter().map(|(_, s)| s).collect()
}

/// Insertion candidates from typed chunks: every constituent against every
/// open slot that accepts it, ranked by slot prior plus filler score.
pub fn gen_insert_bottom_up(
    drm: &DynamicRepairMemory,
    spec: &InterlinguaSpec,
    nets: &Networks,
    roots_only: bool,
) -> Vec<Hypothesis> {
    let open: Vec<OpenSlot> = spec
        .open_slots(&drm.current)
        .into_iter()
        .filter(|s| s.allowed.is_structural())
        .collect();
    let mut scored = Vec::new();
    for c in drm.chunks.iter().filter(|c| !c.consumed && c.is_typed()) {
        for (path, node) in c.fs.constituents_with_paths() {
            if (roots_only && !path.is_root()) || drm.is_used(c.id, &path) {
                continue;
            }
            let Some(leaf) = spec.leaf_type_of(node) else { continue };
            for slot in &open {
                if !spec.subsumes_defined(&slot.allowed, leaf) {
                    continue;
                }
                let unit = slot_unit(&slot.frame, &slot.slot);
                let score = slot_prior(nets, slot) + nets.slot_filler.score(&units([unit]), leaf.as_str());
                scored.push((
                    score,
                    Hypothesis::InsertChunk {
                        chunk: c.id,
                        constituent: path.clone(),
                        target: slot.path.clone(),
                        as_type: leaf.clone(),
                    },
                ));
            }
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored
        .into_iter()
        .map(|(_, h)| h)
        .filter(|h| insertion_value(h, drm, spec).is_some())
        .collect()
}

/// Insertion candidates slot by slot: for each likely slot and each likely
/// filler type, first constituents of that definite type, then chunks of
/// unknown type taken to be of that type.
pub fn gen_insert_top_down(
    drm: &DynamicRepairMemory,
    spec: &InterlinguaSpec,
    nets: &Networks,
    roots_only: bool,
) -> Vec<Hypothesis> {
    let mut out = Vec::new();
    let unknown: Vec<_> = drm.chunks.iter().filter(|c| !c.consumed && !c.is_typed()).collect();
    for slot in ranked_slots(drm, spec, nets) {
        if slot.allowed.is_atomic_class() {
            for c in &unknown {
                out.push(Hypothesis::InsertChunk {
                    chunk: c.id,
                    constituent: FeaturePath::root(),
                    target: slot.path.clone(),
                    as_type: slot.allowed.clone(),
                });
            }
            continue;
        }
        let unit = slot_unit(&slot.frame, &slot.slot);
        let mask = leaf_names(spec.leaves_under(&slot.allowed));
        let types: Vec<TypeName> = nets
            .slot_filler
            .predict(&units([unit]), Some(&mask))
            .iter()
            .map(|p| type_of(&p.output))
            .collect();
        for t in &types {
            for c in drm.chunks.iter().filter(|c| !c.consumed && c.is_typed()) {
                for (path, node) in c.fs.constituents_with_paths() {
                    if (roots_only && !path.is_root()) || drm.is_used(c.id, &path) {
                        continue;
                    }
                    if spec.leaf_type_of(node) == Some(t) {
                        out.push(Hypothesis::InsertChunk {
                            chunk: c.id,
                            constituent: path,
                            target: slot.path.clone(),
                            as_type: t.clone(),
                        });
                    }
                }
            }
        }
        for t in &types {
            let mut guesses: Vec<(f64, usize)> = unknown
                .iter()
                .map(|c| {
                    let score = c
                        .type_guesses
                        .iter()
                        .find(|p| p.output == t.as_str())
                        .map_or(f64::NEG_INFINITY, |p| p.score);
                    (score, c.id)
                })
                .collect();
            guesses.sort_by(|a, b| b.0.total_cmp(&a.0));
            for (_, id) in guesses {
                out.push(Hypothesis::InsertChunk {
                    chunk: id,
                    constituent: FeaturePath::root(),
                    target: slot.path.clone(),
                    as_type: t.clone(),
                });
            }
        }
    }
    out.retain(|h| insertion_value(h, drm, spec).is_some());
    out
}

fn first_new(drm: &DynamicRepairMemory, candidates: Vec<Hypothesis>) -> Option<Hypothesis> {
    candidates.into_iter().find(|h| !drm.asked(h))
}

fn decide_top_level(
    drm: &mut DynamicRepairMemory,
    spec: &InterlinguaSpec,
    nets: &Networks,
    config: &RepairConfig,
) {
    let policy = config.policy;
    let parser = parser_leaf(drm, spec);
    let keep = |drm: &mut DynamicRepairMemory| {
        drm.top_level_confirmed = parser.is_some();
        drm.top_level = TopLevelPhase::Done;
    };
    let guesses: Vec<TypeName> = gen_top_level(drm, spec, nets, config.top_frame_candidates)
        .into_iter()
        .filter_map(|h| match h {
            Hypothesis::TopLevelFrame { leaf } => Some(leaf),
            _ => None,
        })
        .collect();
    match policy {
        Policy::Fixed(s) if s.q1 == Approach::TopDown => keep(drm),
        Policy::Fixed(_) => drm.top_level = TopLevelPhase::Asking(guesses),
        Policy::Meta => {
            let top = guesses.first().cloned();
            let good = drm.quality == crate::record::ParseQuality::Good;
            if drm.parsed_completely || (good && parser.is_some() && top == parser) {
                keep(drm);
            } else if !good {
                drm.top_level = TopLevelPhase::Asking(guesses);
            } else {
                let mut list: Vec<TypeName> = parser.iter().cloned().collect();
                list.extend(guesses.into_iter().filter(|g| Some(g) != parser.as_ref()));
                drm.top_level = TopLevelPhase::Asking(list);
            }
        }
    }
}

/// Chooses the next hypothesis to put to the user, or `None` to stop.
/// Records phase decisions (top-level frame kept, bottom-up exhausted) in
/// the repair memory.
pub fn meta_next(
    drm: &mut DynamicRepairMemory,
    spec: &InterlinguaSpec,
    nets: &Networks,
    config: &RepairConfig,
) -> Option<Hypothesis> {
    let policy = config.policy;
    if drm.questions_asked() >= config.max_questions || drm.parsed_completely {
        return None;
    }
    if drm.top_level == TopLevelPhase::Pending {
        decide_top_level(drm, spec, nets, config);
    }
    if let TopLevelPhase::Asking(list) = &drm.top_level {
        if let Some(leaf) = list.iter().find(|l| !drm.asked(&Hypothesis::TopLevelFrame { leaf: (*l).clone() })) {
            return Some(Hypothesis::TopLevelFrame { leaf: leaf.clone() });
        }
        drm.top_level = TopLevelPhase::Done;
    }
    if drm.sentence_type_pending {
        if let Some(h) = first_new(drm, gen_sentence_type(drm, spec, nets)) {
            return Some(h);
        }
        drm.sentence_type_pending = false;
    }
    if spec.open_slots(&drm.current).is_empty() {
        return None;
    }
    let (q2, q3) = match policy {
        Policy::Fixed(s) => (s.q2, Some(s.q3)),
        Policy::Meta if config.enable_combine => (Approach::BottomUp, None),
        Policy::Meta => (Approach::TopDown, None),
    };
    let roots_only = q2 == Approach::BottomUp;
    if q2 == Approach::BottomUp {
        if let Some(h) = first_new(drm, gen_combine(drm, spec, nets)) {
            return Some(h);
        }
    }
    match q3 {
        Some(Approach::BottomUp) => first_new(drm, gen_insert_bottom_up(drm, spec, nets, roots_only)),
        Some(Approach::TopDown) => first_new(drm, gen_insert_top_down(drm, spec, nets, roots_only)),
        None => {
            if !drm.bottom_up_exhausted {
                if let Some(h) = first_new(drm, gen_insert_bottom_up(drm, spec, nets, roots_only)) {
                    return Some(h);
                }
                drm.bottom_up_exhausted = true;
            }
            first_new(drm, gen_insert_top_down(drm, spec, nets, roots_only))
        }
    }
}
