//! Seeded generator for the bundled synthetic corpus.
//!
//! Gold structures are sampled from the spec, then broken up the way a
//! skipping parser would break them: fillers moved into skipped chunks, the
//! top-level frame lost or replaced, a word left uninterpreted, or nothing
//! parsed at all. Parser symbols follow the `nt-<frame>` / `nt-<slot>`
//! convention of the demo grammar.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fstruct::{sym, AtomicValue, FeaturePath, FeatureStructure, SlotValue, FRAME, SENTENCE_TYPE};
use crate::ilspec::{AtomicClass, InterlinguaSpec, TypeName};
use crate::record::{CorpusRecord, ParseQuality, ParserOutput, SkippedSegment};
use crate::repairmem::FRAGMENT;

pub const DEFAULT_SEED: u64 = 1996;
pub const DEFAULT_SIZE: usize = 60;

const NOISE_WORDS: [&str; 5] = ["be", "um", "okay", "though", "well"];

fn leaf_weight(name: &str) -> u32 {
    match name {
        "<SIMPLE-TIME>" => 8,
        "<SPECIAL-TIME>" => 2,
        "<I>" => 5,
        "<YOU>" | "<WE>" | "<MEETING>" => 2,
        "<FREE>" => 3,
        "<BUSY>" | "<MEET>" => 2,
        _ => 1,
    }
}

fn fill_probability(slot: &str, depth: usize) -> f64 {
    match slot {
        "who" => 0.85,
        "when" => 0.9,
        "day-of-week" => 0.7,
        "time-of-day" => 0.5,
        "day" => 0.4,
        "hour" => 0.2,
        _ if depth == 0 => 0.25,
        _ => 0.45,
    }
}

fn word_for_frame(frame: &str) -> Option<&'static str> {
    Some(match frame {
        "*i" => "i",
        "*you" => "you",
        "*we" => "we",
        "*that" => "that",
        "*meeting" => "meeting",
        "*lunch" => "lunch",
        "*free" => "free",
        "*busy" => "busy",
        "*meet" => "meet",
        "*suggest" => "suggest",
        "*length" => "for",
        "*interval" => "from",
        "*relative-time" => "in",
        "*event-time" => "after",
        "*time-list" => "or",
        _ => return None,
    })
}

struct Gen<'a> {
    spec: &'a InterlinguaSpec,
    rng: ChaCha8Rng,
}

impl Gen<'_> {
    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen::<f64>() < p
    }

    fn pick_leaf(&mut self, t: &TypeName) -> TypeName {
        let leaves = self.spec.leaves_under(t);
        let total: u32 = leaves.iter().map(|l| leaf_weight(l.as_str())).sum();
        let mut roll = self.rng.gen_range(0..total);
        for l in leaves {
            let w = leaf_weight(l.as_str());
            if roll < w {
                return l.clone();
            }
            roll -= w;
        }
        unreachable!("weights cover every leaf")
    }

    fn atom(&mut self, slot: &str, class: &TypeName) -> AtomicValue {
        match self.spec.atomic_class(class) {
            Some(AtomicClass::Enumerated(members)) => {
                let members: Vec<&AtomicValue> = members.iter().collect();
                (*members.choose(&mut self.rng).expect("non-empty class")).clone()
            }
            Some(AtomicClass::Integer) => AtomicValue::Integer(match slot {
                "day" => self.rng.gen_range(1..=28),
                "hour" => self.rng.gen_range(1..=12),
                _ => self.rng.gen_range(1..=3),
            }),
            _ => AtomicValue::symbol("x"),
        }
    }

    fn node(&mut self, leaf: &TypeName, depth: usize) -> FeatureStructure {
        let rule = self.spec.leaf(leaf).expect("leaf rule").clone();
        let mut fs = FeatureStructure::with_frame(&rule.frame);
        for (slot, t) in &rule.slots {
            if t.is_structural() && depth >= 2 {
                continue;
            }
            if !self.chance(fill_probability(slot.as_str(), depth)) {
                continue;
            }
            let value = if t.is_structural() {
                let l = self.pick_leaf(t);
                SlotValue::Structure(self.node(&l, depth + 1))
            } else {
                SlotValue::Atomic(self.atom(slot.as_str(), t))
            };
            fs.set(slot.clone(), value);
        }
        if fs.len() == 1 && rule.frame == "*simple-time" {
            let (slot, t) = &rule.slots[0];
            let a = self.atom(slot.as_str(), t);
            fs.set(slot.clone(), SlotValue::Atomic(a));
        }
        fs
    }

    fn sentence_type(&mut self) -> AtomicValue {
        let roll = self.rng.gen::<f64>();
        AtomicValue::symbol(if roll < 0.65 {
            "*state"
        } else if roll < 0.9 {
            "*query-if"
        } else {
            "*query-ref"
        })
    }

    fn gold(&mut self) -> FeatureStructure {
        let leaf = self.pick_leaf(self.spec.root());
        loop {
            let content = self.node(&leaf, 0);
            let fillers = content
                .slots()
                .filter(|(_, v)| matches!(v, SlotValue::Structure(_)))
                .count();
            if fillers >= 2 {
                let mut gold = content;
                gold.set_front(sym(SENTENCE_TYPE), SlotValue::Atomic(self.sentence_type()));
                return gold;
            }
        }
    }
}

/// `nt-<frame>` for every node and `nt-<slot>` for every atomic slot.
pub fn symbols_of(fs: &FeatureStructure) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut push = |s: String| {
        if !out.contains(&s) {
            out.push(s);
        }
    };
    for node in fs.constituents() {
        if let Some(f) = node.frame() {
            push(format!("nt-{}", f.as_str().trim_start_matches('*')));
        }
        for (slot, value) in node.slots() {
            if slot != FRAME && slot != SENTENCE_TYPE && !matches!(value, SlotValue::Structure(_)) {
                push(format!("nt-{slot}"));
            }
        }
    }
    out
}

/// Surface words: a word per lexical frame, then atomic values.
pub fn words_of(fs: &FeatureStructure) -> Vec<String> {
    let mut out = Vec::new();
    for node in fs.constituents() {
        if let Some(w) = node.frame().and_then(|f| word_for_frame(f.as_str())) {
            out.push(w.to_string());
        }
        for (slot, value) in node.slots() {
            if slot == FRAME || slot == SENTENCE_TYPE {
                continue;
            }
            if let SlotValue::Atomic(a) = value {
                out.push(a.to_string());
            }
        }
    }
    out
}

fn segment(fs: FeatureStructure) -> SkippedSegment {
    SkippedSegment {
        symbols: symbols_of(&fs),
        words: words_of(&fs),
        fs,
    }
}

fn word_segment(word: &str) -> SkippedSegment {
    let mut fs = FeatureStructure::new();
    fs.set(sym("value"), SlotValue::Atomic(AtomicValue::symbol(word)));
    SkippedSegment {
        fs,
        symbols: vec![word.to_string()],
        words: vec![word.to_string()],
    }
}

/// Relocatable fillers: single structure values below the root, at most
/// two levels deep.
fn filler_paths(gold: &FeatureStructure) -> Vec<FeaturePath> {
    gold.constituents_with_paths()
        .into_iter()
        .filter(|(p, _)| !p.is_root() && p.len() <= 2 && p.to_string().find('[').is_none())
        .map(|(p, _)| p)
        .collect()
}

fn is_prefix(a: &FeaturePath, b: &FeaturePath) -> bool {
    let mut p = Some(b.clone());
    while let Some(q) = p {
        if &q == a {
            return true;
        }
        p = q.parent();
    }
    false
}

fn value_at(fs: &FeatureStructure, path: &FeaturePath) -> FeatureStructure {
    fs.get_path(path)
        .and_then(SlotValue::as_structure)
        .cloned()
        .expect("filler path names a structure")
}

fn cue(gold: &FeatureStructure) -> Option<&'static str> {
    match gold.sentence_type().map(|s| s.as_str()) {
        Some("*query-if") => Some("nt-aux-first"),
        Some("*query-ref") => Some("nt-wh"),
        _ => None,
    }
}

impl Gen<'_> {
    /// Up to `k` non-overlapping filler paths, shuffled.
    fn choose_paths(&mut self, gold: &FeatureStructure, k: usize) -> Vec<FeaturePath> {
        let mut all = filler_paths(gold);
        all.shuffle(&mut self.rng);
        let mut chosen: Vec<FeaturePath> = Vec::new();
        for p in all {
            if chosen.len() == k {
                break;
            }
            if chosen.iter().all(|c| !is_prefix(c, &p) && !is_prefix(&p, c)) {
                chosen.push(p);
            }
        }
        chosen
    }

    fn partial_symbols(&mut self, partial: &FeatureStructure, gold: &FeatureStructure) -> Vec<String> {
        let mut out = symbols_of(partial);
        if let Some(c) = cue(gold) {
            if self.chance(0.8) {
                out.push(c.to_string());
            }
        }
        out
    }

    fn maybe_noise(&mut self, skipped: &mut Vec<SkippedSegment>) {
        if self.chance(0.25) {
            let w = *NOISE_WORDS.choose(&mut self.rng).unwrap();
            let at = self.rng.gen_range(0..=skipped.len());
            skipped.insert(at, word_segment(w));
        }
    }

    fn relocate(&mut self, gold: &FeatureStructure, unknown_word: bool) -> ParserOutput {
        let k = self.rng.gen_range(1..=3);
        let mut paths = self.choose_paths(gold, k);
        if unknown_word {
            let bare: Vec<FeaturePath> = filler_paths(gold)
                .into_iter()
                .filter(|p| value_at(gold, p).len() == 1)
                .collect();
            if let Some(p) = bare.choose(&mut self.rng) {
                paths.retain(|c| !is_prefix(c, p) && !is_prefix(p, c));
                paths.push(p.clone());
            }
        }
        let mut partial = gold.clone();
        let mut skipped = Vec::new();
        for p in &paths {
            let filler = value_at(gold, p);
            partial = partial.remove_path(p);
            let word = filler.frame().and_then(|f| word_for_frame(f.as_str()));
            match word {
                Some(w) if unknown_word && filler.len() == 1 => skipped.push(word_segment(w)),
                _ => skipped.push(segment(filler)),
            }
        }
        skipped.shuffle(&mut self.rng);
        self.maybe_noise(&mut skipped);
        let quality = if self.chance(0.6) { ParseQuality::Good } else { ParseQuality::Bad };
        ParserOutput {
            utterance: Vec::new(),
            partial_symbols: self.partial_symbols(&partial, gold),
            partial: Some(partial),
            skipped,
            quality,
            parsed_completely: false,
        }
    }

    fn fragment(&mut self, gold: &FeatureStructure) -> Option<ParserOutput> {
        let roots: Vec<_> = gold
            .slots()
            .filter(|(_, v)| matches!(v, SlotValue::Structure(_)))
            .map(|(s, _)| s.clone())
            .collect();
        let kept = roots.choose(&mut self.rng)?.clone();
        let mut partial = FeatureStructure::new();
        partial.set(sym(SENTENCE_TYPE), SlotValue::Atomic(AtomicValue::symbol(FRAGMENT)));
        partial.set(kept.clone(), gold.get(kept.as_str()).unwrap().clone());
        let mut event = gold.clone();
        event.remove(SENTENCE_TYPE);
        event.remove(kept.as_str());
        let mut skipped = Vec::new();
        if self.chance(0.5) {
            if let Some(p) = self.choose_paths(&event, 1).pop() {
                skipped.push(segment(value_at(&event, &p)));
                event = event.remove_path(&p);
            }
        }
        skipped.push(segment(event));
        skipped.shuffle(&mut self.rng);
        self.maybe_noise(&mut skipped);
        Some(ParserOutput {
            utterance: Vec::new(),
            partial_symbols: self.partial_symbols(&partial, gold),
            partial: Some(partial),
            skipped,
            quality: ParseQuality::Bad,
            parsed_completely: false,
        })
    }

    fn wrong_frame(&mut self, gold: &FeatureStructure) -> Option<ParserOutput> {
        let spec = self.spec;
        let gold_leaf = spec.leaf_type_of(gold)?.clone();
        let others: Vec<TypeName> = spec
            .leaves_under(spec.root())
            .iter()
            .filter(|l| **l != gold_leaf)
            .cloned()
            .collect();
        let wrong = others.choose(&mut self.rng)?.clone();
        let rule = spec.leaf(&wrong)?.clone();
        let mut partial = FeatureStructure::new();
        partial.set(sym(SENTENCE_TYPE), gold.get(SENTENCE_TYPE)?.clone());
        partial.set(sym(FRAME), SlotValue::Atomic(AtomicValue::Symbol(rule.frame.clone())));
        let mut skipped = Vec::new();
        let mut rest = FeatureStructure::with_frame(gold.frame()?);
        for (slot, value) in gold.slots() {
            if slot == FRAME || slot == SENTENCE_TYPE {
                continue;
            }
            match rule.slot_type(slot.as_str()) {
                Some(t) if spec.value_conforms(value, t) => partial.set(slot.clone(), value.clone()),
                _ => match value {
                    SlotValue::Structure(fs) => skipped.push(segment(fs.clone())),
                    other => rest.set(slot.clone(), other.clone()),
                },
            }
        }
        if partial.len() <= 2 {
            return None;
        }
        skipped.push(segment(rest));
        skipped.shuffle(&mut self.rng);
        let quality = if self.chance(0.7) { ParseQuality::Bad } else { ParseQuality::Good };
        Some(ParserOutput {
            utterance: Vec::new(),
            partial_symbols: self.partial_symbols(&partial, gold),
            partial: Some(partial),
            skipped,
            quality,
            parsed_completely: false,
        })
    }

    /// A short utterance the parser could not analyse at all.
    fn nil_parse(&mut self) -> (FeatureStructure, ParserOutput) {
        let spec = self.spec;
        let leaf = self.pick_leaf(spec.root());
        let rule = spec.leaf(&leaf).expect("leaf rule").clone();
        let mut gold = FeatureStructure::new();
        gold.set(sym(SENTENCE_TYPE), SlotValue::Atomic(AtomicValue::symbol("*state")));
        gold.set(sym(FRAME), SlotValue::Atomic(AtomicValue::Symbol(rule.frame.clone())));
        let mut words = Vec::new();
        if let Some(t) = rule.slot_type("who") {
            let candidates: Vec<TypeName> = spec
                .leaves_under(t)
                .iter()
                .filter(|l| spec.leaf(l).is_some_and(|r| r.slots.is_empty()))
                .cloned()
                .collect();
            if let Some(who) = candidates.choose(&mut self.rng) {
                let frame = spec.leaf(who).unwrap().frame.clone();
                words.push(word_for_frame(frame.as_str()).unwrap_or("someone").to_string());
                words.push(if frame == "*i" { "am" } else if frame == "*you" || frame == "*we" { "are" } else { "is" }.to_string());
                gold.set(sym("who"), SlotValue::Structure(FeatureStructure::with_frame(&frame)));
            }
        }
        words.extend(word_for_frame(rule.frame.as_str()).map(String::from));
        if let Some(t) = rule.slot_type("degree") {
            if self.chance(0.5) {
                let a = self.atom("degree", t);
                words.insert(words.len().saturating_sub(1), a.to_string());
                gold.set(sym("degree"), SlotValue::Atomic(a));
            }
        }
        let po = ParserOutput {
            utterance: words,
            quality: ParseQuality::Bad,
            ..ParserOutput::default()
        };
        (gold, po)
    }
}

/// `n` records from `spec` with a fixed seed.
pub fn generate(spec: &InterlinguaSpec, n: usize, seed: u64) -> Vec<CorpusRecord> {
    let mut g = Gen {
        spec,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let roll = g.rng.gen::<f64>();
        let (gold, mut po) = if roll < 0.1 {
            g.nil_parse()
        } else {
            let gold = g.gold();
            let po = if roll < 0.45 {
                Some(g.relocate(&gold, false))
            } else if roll < 0.7 {
                g.fragment(&gold)
            } else if roll < 0.85 {
                g.wrong_frame(&gold)
            } else if roll < 0.95 {
                Some(g.relocate(&gold, true))
            } else {
                Some(ParserOutput {
                    utterance: Vec::new(),
                    partial_symbols: symbols_of(&gold),
                    partial: Some(gold.clone()),
                    skipped: Vec::new(),
                    quality: ParseQuality::Good,
                    parsed_completely: true,
                })
            };
            match po {
                Some(po) => (gold, po),
                None => continue,
            }
        };
        if po.utterance.is_empty() {
            po.utterance = utterance(&po);
        }
        out.push(CorpusRecord { output: po, gold: Some(gold) });
    }
    out
}

fn utterance(po: &ParserOutput) -> Vec<String> {
    let mut words = po.partial.as_ref().map(words_of).unwrap_or_default();
    for seg in &po.skipped {
        words.extend(seg.words.iter().cloned());
    }
    words
}
