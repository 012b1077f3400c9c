//! Questions, paraphrases, and applying confirmed hypotheses.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::fstruct::{
    sym, AtomicValue, FeaturePath, FeatureStructure, SlotValue, Symbol, FRAME, SENTENCE_TYPE, SPEECH_ACT,
};
use crate::hypgen::{insertion_value, Hypothesis};
use crate::ilspec::InterlinguaSpec;
use crate::minet::{slot_unit, units, NetworkRole, Networks, TRUE_UNIT};
use crate::repairmem::{material, ChunkOrigin, DynamicRepairMemory, TopLevelPhase};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("gloss table line {line}: {message}")]
pub struct GlossError {
    pub line: usize,
    pub message: String,
}

/// English glosses for frames, slots and values.
///
/// Besides plain entries, `about:<frame>` is the noun phrase used when
/// asking about a top-level frame, `pred:<frame>` the predicate used in a
/// sentence paraphrase, `be:<frame>` the verb agreeing with a subject, and
/// `prefix:<slot>` a word placed before the slot's value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Glosses {
    map: BTreeMap<String, String>,
}

impl Glosses {
    pub fn parse(text: &str) -> Result<Glosses, GlossError> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, gloss) = line.split_once('\t').ok_or_else(|| GlossError {
                line: i + 1,
                message: "expected symbol<TAB>gloss".into(),
            })?;
            map.insert(key.trim().to_lowercase(), gloss.trim().to_string());
        }
        Ok(Glosses { map })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    /// Gloss, or the symbol itself in quotes.
    pub fn gloss(&self, key: &str) -> String {
        self.get(key).map_or_else(|| format!("\"{key}\""), str::to_string)
    }

    fn atom(&self, value: &AtomicValue) -> String {
        match value {
            AtomicValue::Symbol(s) => self.get(s.as_str()).unwrap_or(s.as_str()).to_string(),
            AtomicValue::Integer(n) => n.to_string(),
            AtomicValue::String(s) => s.clone(),
        }
    }
}

const ORDINALS: [&str; 31] = [
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
    "eleventh", "twelfth", "thirteenth", "fourteenth", "fifteenth", "sixteenth", "seventeenth",
    "eighteenth", "nineteenth", "twentieth", "twenty-first", "twenty-second", "twenty-third",
    "twenty-fourth", "twenty-fifth", "twenty-sixth", "twenty-seventh", "twenty-eighth",
    "twenty-ninth", "thirtieth", "thirty-first",
];

fn ordinal(n: i64) -> String {
    match usize::try_from(n).ok().and_then(|i| i.checked_sub(1)).and_then(|i| ORDINALS.get(i)) {
        Some(word) => format!("the {word}"),
        None => format!("the {n}th"),
    }
}

/// Slots of a time frame rendered first, in this order.
const TIME_ORDER: [&str; 4] = ["day-of-week", "time-of-day", "day", "hour"];
const WRAPPER: [&str; 3] = [FRAME, SENTENCE_TYPE, SPEECH_ACT];

fn join(parts: Vec<String>) -> String {
    parts.into_iter().filter(|p| !p.is_empty()).collect::<Vec<_>>().join(" ")
}

fn slot_phrase(slot: &Symbol, value: &SlotValue, g: &Glosses) -> String {
    let body = match value {
        SlotValue::Atomic(AtomicValue::Integer(n)) if slot == "day" => ordinal(*n),
        SlotValue::Atomic(AtomicValue::Integer(n)) if slot == "hour" => format!("at {n}"),
        SlotValue::Atomic(a) => g.atom(a),
        SlotValue::Structure(fs) => phrase(fs, g),
        SlotValue::Multiple(items) => join(items.iter().map(|v| slot_phrase(slot, v, g)).collect()),
    };
    match g.get(&format!("prefix:{slot}")) {
        Some(prefix) if !matches!(value, SlotValue::Structure(_)) => format!("{prefix} {body}"),
        _ => body,
    }
}

fn phrase(fs: &FeatureStructure, g: &Glosses) -> String {
    let frame = fs.frame();
    if let Some(f) = frame {
        if g.get(&format!("pred:{f}")).is_some() {
            return clause(fs, g).0;
        }
    }
    let mut parts = Vec::new();
    let is_time = frame.is_some_and(|f| f == "*simple-time");
    if is_time {
        for name in TIME_ORDER {
            if let Some(v) = fs.get(name) {
                parts.push(slot_phrase(&sym(name), v, g));
            }
        }
    } else if let Some(f) = frame {
        parts.push(g.get(f.as_str()).unwrap_or(f.as_str()).to_string());
    }
    for (slot, value) in fs.slots() {
        if WRAPPER.contains(&slot.as_str()) || (is_time && TIME_ORDER.contains(&slot.as_str())) {
            continue;
        }
        parts.push(slot_phrase(slot, value, g));
    }
    join(parts)
}

/// Subject, verb and the rest of an event frame; returns the declarative
/// rendering and the parts for reordering.
fn clause(fs: &FeatureStructure, g: &Glosses) -> (String, [String; 3]) {
    let frame = fs.frame().map(Symbol::as_str).unwrap_or_default();
    let pred = g.get(&format!("pred:{frame}")).unwrap_or(frame).to_string();
    let (subject, be) = match fs.get("who") {
        Some(SlotValue::Structure(who)) => {
            let be = who
                .frame()
                .and_then(|f| g.get(&format!("be:{f}")))
                .unwrap_or("is")
                .to_string();
            (phrase(who, g), be)
        }
        Some(other) => (slot_phrase(&sym("who"), other, g), "is".to_string()),
        None => ("someone".to_string(), "is".to_string()),
    };
    let mut rest = vec![pred];
    for (slot, value) in fs.slots() {
        if WRAPPER.contains(&slot.as_str()) || slot == "who" {
            continue;
        }
        rest.push(slot_phrase(slot, value, g));
    }
    let rest = join(rest);
    (join(vec![subject.clone(), be.clone(), rest.clone()]), [subject, be, rest])
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Left-to-right English rendering of a structure. A top-level event with
/// a sentence type becomes a full sentence.
pub fn paraphrase(fs: &FeatureStructure, g: &Glosses) -> String {
    let event = fs.frame().is_some_and(|f| g.get(&format!("pred:{f}")).is_some());
    match fs.sentence_type().map(Symbol::as_str) {
        Some("*state") if event => format!("{}.", capitalize(&clause(fs, g).0)),
        Some("*query-if") | Some("*query-ref") if event => {
            let [subject, be, rest] = clause(fs, g).1;
            format!("{}?", capitalize(&join(vec![be, subject, rest])))
        }
        _ => phrase(fs, g),
    }
}

/// How a chunk constituent is referred to in a question.
fn describe_insert(h: &Hypothesis, drm: &DynamicRepairMemory, spec: &InterlinguaSpec, g: &Glosses) -> String {
    let Hypothesis::InsertChunk { chunk, .. } = h else {
        return String::new();
    };
    let Some(c) = drm.chunk(*chunk) else {
        return String::new();
    };
    if !c.is_typed() && !c.words.is_empty() {
        return c.words.join(" ");
    }
    match insertion_value(h, drm, spec) {
        Some(SlotValue::Structure(fs)) if c.is_typed() => phrase(&fs, g),
        Some(SlotValue::Atomic(a)) => g.atom(&a),
        _ => c.symbols.join(" "),
    }
}

fn describe_chunk(id: usize, drm: &DynamicRepairMemory, spec: &InterlinguaSpec, g: &Glosses) -> String {
    let Some(c) = drm.chunk(id) else {
        return format!("chunk {id}");
    };
    match &c.leaf_type {
        Some(leaf) => phrase(&spec.coerce(&c.fs, leaf).unwrap_or_else(|| c.fs.clone()), g),
        None if !c.words.is_empty() => format!("\"{}\"", c.words.join(" ")),
        None => format!("\"{}\"", c.symbols.join(" ")),
    }
}

fn list_phrase(mut items: Vec<String>) -> String {
    match items.len() {
        0 => String::new(),
        1 => items.pop().unwrap(),
        _ => {
            let last = items.pop().unwrap();
            format!("{} and {last}", items.join(", "))
        }
    }
}

/// The frame of the node that owns `target`'s slot.
fn owner_frame(current: &FeatureStructure, target: &FeaturePath) -> Option<Symbol> {
    let parent = target.parent()?;
    if parent.is_root() {
        return current.frame().cloned();
    }
    current.get_path(&parent)?.as_structure()?.frame().cloned()
}

/// The yes/no question that confirms `h`.
pub fn render_question(h: &Hypothesis, drm: &DynamicRepairMemory, spec: &InterlinguaSpec, g: &Glosses) -> String {
    match h {
        Hypothesis::TopLevelFrame { leaf } => {
            let frame = spec.leaf(leaf).map(|l| l.frame.to_string()).unwrap_or_else(|| leaf.to_string());
            let about = g
                .get(&format!("about:{frame}"))
                .map_or_else(|| g.gloss(&frame), str::to_string);
            format!("Is your sentence mainly about {about}?")
        }
        Hypothesis::SentenceType { sentence_type } => {
            format!("Is your sentence {}?", g.gloss(sentence_type.as_str()))
        }
        Hypothesis::InsertChunk { chunk, target, as_type, .. } => {
            let mut what = describe_insert(h, drm, spec, g);
            let frame = owner_frame(&drm.current, target)
                .map(|f| g.gloss(f.as_str()))
                .unwrap_or_else(|| "it".to_string());
            let slot = target.last_slot().map(Symbol::as_str).unwrap_or_default();
            let unknown = drm.chunk(*chunk).is_some_and(|c| !c.is_typed());
            if unknown {
                what = format!("\"{what}\"");
                // the guessed type is part of what is being confirmed
                if let Some(leaf) = spec.leaf(as_type) {
                    what = format!("{what}, meaning {},", g.gloss(leaf.frame.as_str()));
                }
            }
            if slot == "who" {
                let what = if unknown { what } else { format!("\"{what}\"") };
                format!("Is it {what} who is {frame} in your sentence?")
            } else {
                format!("Is {what} the {} of {frame} in your sentence?", g.gloss(slot))
            }
        }
        Hypothesis::CombineChunks { members, result } => {
            let parts = members.iter().map(|m| describe_chunk(*m, drm, spec, g)).collect();
            let frame = spec.leaf(result).map(|l| l.frame.to_string()).unwrap_or_else(|| result.to_string());
            format!("Do {} belong together as {}?", list_phrase(parts), g.gloss(&frame))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("hypothesis no longer applies: {0}")]
    Stale(String),
}

fn stale(h: &Hypothesis) -> ApplyError {
    ApplyError::Stale(h.to_string())
}

/// Makes the repair `h` describes and reinforces the networks with it.
pub fn apply_hypothesis(
    h: &Hypothesis,
    drm: &mut DynamicRepairMemory,
    spec: &InterlinguaSpec,
    nets: &mut Networks,
) -> Result<(), ApplyError> {
    match h {
        Hypothesis::TopLevelFrame { leaf } => {
            if spec.leaf_type_of(&drm.current) != Some(leaf) {
                let template = spec.template_for(leaf).map_err(|_| stale(h))?;
                drm.confirmed.extend(material(&template));
                drm.demote_current_ilt(template, spec);
                drm.sentence_type_pending = true;
            }
            drm.top_level_confirmed = true;
            drm.top_level = TopLevelPhase::Done;
            nets.train(NetworkRole::SymbolsToType, &drm.all_symbols(), leaf.as_str());
        }
        Hypothesis::SentenceType { sentence_type } => {
            if !spec.sentence_types().contains(sentence_type) {
                return Err(stale(h));
            }
            let value = SlotValue::Atomic(AtomicValue::Symbol(sentence_type.clone()));
            drm.current.set_front(sym(SENTENCE_TYPE), value);
            drm.confirmed
                .insert((sym(SENTENCE_TYPE), AtomicValue::Symbol(sentence_type.clone())));
            drm.sentence_type_pending = false;
            nets.train(NetworkRole::SymbolsToSentenceType, &drm.all_symbols(), sentence_type.as_str());
        }
        Hypothesis::InsertChunk {
            chunk,
            constituent,
            target,
            as_type,
        } => {
            let slot = spec
                .open_slots(&drm.current)
                .into_iter()
                .find(|s| &s.path == target)
                .ok_or_else(|| stale(h))?;
            if !spec.subsumes_defined(&slot.allowed, as_type) {
                return Err(stale(h));
            }
            let value = insertion_value(h, drm, spec).ok_or_else(|| stale(h))?;
            let c = drm.chunk(*chunk).ok_or_else(|| stale(h))?;
            let unknown = !c.is_typed();
            let symbols = c.symbols.clone();
            drm.current.set_path_mut(target, value.clone()).map_err(|_| stale(h))?;
            if unknown {
                let mut wrap = FeatureStructure::new();
                wrap.set(slot.slot.clone(), value);
                drm.confirmed.extend(material(&wrap));
            }
            drm.used.insert((*chunk, constituent.clone()));
            if constituent.is_root() {
                if let Some(c) = drm.chunk_mut(*chunk) {
                    c.consumed = true;
                }
            }
            let unit = slot_unit(&slot.frame, &slot.slot);
            nets.train(NetworkRole::SlotFiller, &units([unit.clone()]), as_type.as_str());
            nets.train(NetworkRole::SlotPrior, &units([TRUE_UNIT]), &unit);
            if unknown {
                for s in symbols {
                    nets.train(NetworkRole::SymbolToType, &units([s]), as_type.as_str());
                }
                drm.annotate(spec, nets);
            }
        }
        Hypothesis::CombineChunks { members, result } => {
            let rule = spec.leaf(result).ok_or_else(|| stale(h))?.clone();
            if members.iter().any(|m| drm.chunk(*m).is_none_or(|c| c.consumed)) {
                return Err(stale(h));
            }
            let mut fs = FeatureStructure::with_frame(&rule.frame);
            drm.confirmed.extend(material(&fs));
            let new_id = drm.chunks.len() + 1;
            let mut symbols = BTreeSet::new();
            let mut words = Vec::new();
            for m in members {
                let c = drm.chunk(*m).expect("checked above").clone();
                symbols.extend(c.symbols.iter().cloned());
                words.extend(c.words.iter().cloned());
                let placed = match &c.leaf_type {
                    Some(leaf) => rule
                        .slots
                        .iter()
                        .find(|(s, t)| {
                            fs.get(s.as_str()).is_none() && t.is_structural() && spec.subsumes_defined(t, leaf)
                        })
                        .and_then(|(s, _)| Some((s.clone(), SlotValue::Structure(spec.coerce(&c.fs, leaf)?)))),
                    None => match c.words.as_slice() {
                        [word] => AtomicValue::parse(word).and_then(|a| {
                            let v = SlotValue::Atomic(a);
                            rule.slots
                                .iter()
                                .find(|(s, t)| fs.get(s.as_str()).is_none() && spec.value_conforms(&v, t))
                                .map(|(s, _)| (s.clone(), v))
                        }),
                        _ => None,
                    },
                };
                if let Some((slot, value)) = placed {
                    if !c.is_typed() {
                        let mut wrap = FeatureStructure::new();
                        wrap.set(slot.clone(), value.clone());
                        drm.confirmed.extend(material(&wrap));
                    }
                    fs.set(slot, value);
                    drm.used.insert((*m, FeaturePath::root()));
                    let member = drm.chunk_mut(*m).expect("checked above");
                    member.consumed = true;
                    member.pending_in = Some(new_id);
                }
            }
            let symbols: Vec<String> = symbols.into_iter().collect();
            nets.train(
                NetworkRole::SymbolsToType,
                &symbols.iter().cloned().collect(),
                result.as_str(),
            );
            drm.push_chunk(fs, symbols, words, ChunkOrigin::Combined(members.clone()), spec);
        }
    }
    Ok(())
}
