//! Chunks and the dynamic repair memory: the per-session blackboard every
//! other stage reads and writes.

use std::collections::BTreeSet;

use crate::fstruct::{
    sym, AtomicValue, FeaturePath, FeatureStructure, SlotValue, Symbol, FRAME, SENTENCE_TYPE,
    SPEECH_ACT,
};
use crate::hypgen::Hypothesis;
use crate::ilspec::{InterlinguaSpec, TypeName};
use crate::minet::{Networks, Prediction};
use crate::record::{ParseQuality, ParserOutput};

/// Sentence type given to a partial analysis the parser did not return.
pub const FRAGMENT: &str = "*fragment";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChunkOrigin {
    /// Index into the parser's skipped segments.
    Skipped(usize),
    /// Index into the utterance (nil parse).
    Word(usize),
    /// Content of a partial analysis replaced by a new top-level frame.
    Demoted,
    /// Template built by an accepted combination of these chunk ids.
    Combined(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    /// 1-based, in creation order.
    pub id: usize,
    pub fs: FeatureStructure,
    pub symbols: Vec<String>,
    pub words: Vec<String>,
    pub leaf_type: Option<TypeName>,
    pub consumed: bool,
    pub origin: ChunkOrigin,
    /// Id of the combined chunk this one was placed into.
    pub pending_in: Option<usize>,
    /// Symbol-to-type ranking for chunks of unknown type.
    pub type_guesses: Vec<Prediction>,
}

impl Chunk {
    pub fn is_typed(&self) -> bool {
        self.leaf_type.is_some()
    }

    /// Symbols as a network input set.
    pub fn symbol_set(&self) -> BTreeSet<String> {
        self.symbols.iter().cloned().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Test,
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptEntry {
    pub hypothesis: Hypothesis,
    pub question: String,
    pub answer: bool,
}

/// Where a piece of demoted root-level content came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemotedSlot {
    /// One-element path of the slot in the replaced analysis.
    pub root_path: FeaturePath,
    pub chunk: usize,
    /// Path of the same value inside the chunk.
    pub sub_path: FeaturePath,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopLevelPhase {
    /// Not decided yet.
    Pending,
    /// Candidate frames still to ask about, in order.
    Asking(Vec<TypeName>),
    Done,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicRepairMemory {
    pub utterance: Vec<String>,
    pub current: FeatureStructure,
    pub chunks: Vec<Chunk>,
    pub partial_symbols: Vec<String>,
    pub quality: ParseQuality,
    pub parsed_completely: bool,
    pub hypothesis: Option<Hypothesis>,
    /// `None` until the first question.
    pub status: Option<Status>,
    pub top_level_confirmed: bool,
    pub transcript: Vec<TranscriptEntry>,
    /// (chunk id, constituent path) pairs already inserted somewhere.
    pub used: BTreeSet<(usize, FeaturePath)>,
    pub demoted: Vec<DemotedSlot>,
    /// Wrapper slots dropped when the analysis was demoted.
    pub discarded: Vec<(Symbol, SlotValue)>,
    /// Material the user introduced by confirming templates, sentence
    /// types or single words.
    pub confirmed: BTreeSet<(Symbol, AtomicValue)>,
    pub original: FeatureStructure,
    pub sentence_type_pending: bool,
    pub top_level: TopLevelPhase,
    pub bottom_up_exhausted: bool,
}

/// Every (slot, atomic value) pair anywhere in `fs`, ignoring paths.
pub fn material(fs: &FeatureStructure) -> BTreeSet<(Symbol, AtomicValue)> {
    fs.flatten()
        .into_iter()
        .filter_map(|(path, value)| path.last_slot().cloned().map(|s| (s, value)))
        .collect()
}

fn value_material(slot: &Symbol, value: &SlotValue) -> BTreeSet<(Symbol, AtomicValue)> {
    let mut wrapper = FeatureStructure::new();
    wrapper.set(slot.clone(), value.clone());
    material(&wrapper)
}

/// Builds the repair memory for one parser result.
pub fn initialize(po: &ParserOutput, spec: &InterlinguaSpec) -> DynamicRepairMemory {
    let current = po.partial.clone().unwrap_or_else(|| {
        let mut fs = FeatureStructure::new();
        fs.set(sym(SENTENCE_TYPE), SlotValue::Atomic(AtomicValue::symbol(FRAGMENT)));
        fs
    });
    let mut chunks = Vec::new();
    for (i, seg) in po.skipped.iter().enumerate() {
        chunks.push(Chunk {
            id: chunks.len() + 1,
            fs: seg.fs.clone(),
            symbols: seg.symbols.clone(),
            words: seg.words.clone(),
            leaf_type: spec.leaf_type_of(&seg.fs).cloned(),
            consumed: false,
            origin: ChunkOrigin::Skipped(i),
            pending_in: None,
            type_guesses: Vec::new(),
        });
    }
    if po.partial.is_none() && po.skipped.is_empty() && !po.parsed_completely {
        for (i, w) in po.utterance.iter().enumerate() {
            chunks.push(Chunk {
                id: chunks.len() + 1,
                fs: FeatureStructure::new(),
                symbols: vec![w.clone()],
                words: vec![w.clone()],
                leaf_type: None,
                consumed: false,
                origin: ChunkOrigin::Word(i),
                pending_in: None,
                type_guesses: Vec::new(),
            });
        }
    }
    DynamicRepairMemory {
        utterance: po.utterance.clone(),
        original: current.clone(),
        current,
        chunks,
        partial_symbols: po.partial_symbols.clone(),
        quality: po.quality,
        parsed_completely: po.parsed_completely,
        hypothesis: None,
        status: None,
        top_level_confirmed: false,
        transcript: Vec::new(),
        used: BTreeSet::new(),
        demoted: Vec::new(),
        discarded: Vec::new(),
        confirmed: BTreeSet::new(),
        sentence_type_pending: false,
        top_level: TopLevelPhase::Pending,
        bottom_up_exhausted: false,
    }
}

impl DynamicRepairMemory {
    pub fn questions_asked(&self) -> usize {
        self.transcript.len()
    }

    pub fn chunk(&self, id: usize) -> Option<&Chunk> {
        id.checked_sub(1).and_then(|i| self.chunks.get(i))
    }

    pub fn chunk_mut(&mut self, id: usize) -> Option<&mut Chunk> {
        id.checked_sub(1).and_then(move |i| self.chunks.get_mut(i))
    }

    pub fn unconsumed(&self) -> impl Iterator<Item = &Chunk> {
        self.chunks.iter().filter(|c| !c.consumed)
    }

    /// Parser symbols of the partial analysis and of every skipped
    /// segment, consumed or not.
    pub fn all_symbols(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.partial_symbols.iter().cloned().collect();
        for c in &self.chunks {
            if matches!(c.origin, ChunkOrigin::Skipped(_) | ChunkOrigin::Word(_)) {
                out.extend(c.symbols.iter().cloned());
            }
        }
        out
    }

    /// Whether `h` was asked before and answered no.
    pub fn refuted(&self, h: &Hypothesis) -> bool {
        self.transcript.iter().any(|e| !e.answer && &e.hypothesis == h)
    }

    pub fn asked(&self, h: &Hypothesis) -> bool {
        self.transcript.iter().any(|e| &e.hypothesis == h)
    }

    /// Whether a constituent, or one of its ancestors, was already inserted.
    pub fn is_used(&self, chunk: usize, path: &FeaturePath) -> bool {
        let mut p = Some(path.clone());
        while let Some(q) = p {
            if self.used.contains(&(chunk, q.clone())) {
                return true;
            }
            p = q.parent();
        }
        false
    }

    /// Re-ranks unknown chunks with the symbol-to-type network.
    pub fn annotate(&mut self, spec: &InterlinguaSpec, nets: &Networks) {
        let mask: BTreeSet<String> = spec.leaves().map(|l| l.name.to_string()).collect();
        for c in &mut self.chunks {
            if c.leaf_type.is_none() {
                c.type_guesses = nets.symbol_to_type.predict(&c.symbol_set(), Some(&mask));
            }
        }
    }

    pub fn push_chunk(
        &mut self,
        fs: FeatureStructure,
        symbols: Vec<String>,
        words: Vec<String>,
        origin: ChunkOrigin,
        spec: &InterlinguaSpec,
    ) -> usize {
        let id = self.chunks.len() + 1;
        self.chunks.push(Chunk {
            id,
            leaf_type: spec.leaf_type_of(&fs).cloned(),
            fs,
            symbols,
            words,
            consumed: false,
            origin,
            pending_in: None,
            type_guesses: Vec::new(),
        });
        id
    }

    /// Replaces the current analysis with `template`. Its content moves to
    /// new chunks: one chunk when it has a frame, otherwise one per slot.
    /// The sentence type is discarded and the speech act carried over.
    pub fn demote_current_ilt(&mut self, template: FeatureStructure, spec: &InterlinguaSpec) {
        let old = std::mem::replace(&mut self.current, template);
        let mut content = FeatureStructure::new();
        for (slot, value) in old.slots() {
            if slot == SENTENCE_TYPE {
                self.discarded.push((slot.clone(), value.clone()));
            } else if slot == SPEECH_ACT {
                self.current.set(slot.clone(), value.clone());
            } else {
                content.set(slot.clone(), value.clone());
            }
        }
        if content.is_empty() {
            return;
        }
        let symbols = self.partial_symbols.clone();
        if content.frame().is_some() {
            let slots: Vec<Symbol> = content
                .slots()
                .map(|(s, _)| s.clone())
                .filter(|s| s != FRAME)
                .collect();
            let id = self.push_chunk(content, symbols, Vec::new(), ChunkOrigin::Demoted, spec);
            for s in slots {
                let path = FeaturePath::root().child(s);
                self.demoted.push(DemotedSlot {
                    root_path: path.clone(),
                    chunk: id,
                    sub_path: path,
                });
            }
            return;
        }
        for (slot, value) in content.slots() {
            let root_path = FeaturePath::root().child(slot.clone());
            let (fs, sub_path) = match value {
                SlotValue::Structure(inner) => (inner.clone(), FeaturePath::root()),
                other => {
                    let mut wrap = FeatureStructure::new();
                    wrap.set(slot.clone(), other.clone());
                    (wrap, root_path.clone())
                }
            };
            let id = self.push_chunk(fs, symbols.clone(), Vec::new(), ChunkOrigin::Demoted, spec);
            self.demoted.push(DemotedSlot {
                root_path,
                chunk: id,
                sub_path,
            });
        }
    }

    /// The structure a session ends with: the current analysis plus any
    /// content of a replaced analysis that the user never refuted and that
    /// still fits at its original place.
    pub fn finalize(&self, spec: &InterlinguaSpec) -> FeatureStructure {
        let mut out = self.current.clone();
        if out.sentence_type().is_none() {
            let old = self.discarded.iter().find_map(|(s, v)| {
                (s == SENTENCE_TYPE).then(|| v.as_atomic().and_then(|a| a.as_symbol()).cloned())?
            });
            if let Some(st) = old {
                let refuted = self.refuted(&Hypothesis::SentenceType { sentence_type: st.clone() });
                if spec.sentence_types().contains(&st) && !refuted {
                    out.set_front(sym(SENTENCE_TYPE), SlotValue::Atomic(AtomicValue::Symbol(st)));
                }
            }
        }
        if spec.leaf_type_of(&out).is_none() {
            return out;
        }
        for d in &self.demoted {
            let open = spec.open_slots(&out);
            let Some(slot) = open.iter().find(|o| o.path == d.root_path) else {
                continue;
            };
            let Some(chunk) = self.chunk(d.chunk) else { continue };
            let whole;
            let value = if d.sub_path.is_root() {
                whole = SlotValue::Structure(chunk.fs.clone());
                &whole
            } else {
                let Some(v) = chunk.fs.get_path(&d.sub_path) else { continue };
                v
            };
            let refused = self.transcript.iter().any(|e| {
                !e.answer
                    && matches!(&e.hypothesis, Hypothesis::InsertChunk { chunk, constituent, target, .. }
                        if *chunk == d.chunk && *constituent == d.sub_path && *target == d.root_path)
            });
            if refused {
                continue;
            }
            let fitted = match value {
                SlotValue::Structure(inner) => spec
                    .leaf_type_of(inner)
                    .filter(|leaf| slot.allowed.is_structural() && spec.subsumes_defined(&slot.allowed, leaf))
                    .and_then(|leaf| spec.coerce(inner, &leaf.clone()))
                    .map(SlotValue::Structure),
                other => spec.value_conforms(other, &slot.allowed).then(|| other.clone()),
            };
            if let Some(v) = fitted {
                out.set_path_mut(&d.root_path, v).expect("open slot path");
            }
        }
        out
    }

    /// Checks that no meaning appeared or vanished outside the session's
    /// own bookkeeping: everything the parser produced is still present
    /// (in the analysis, a chunk, or the discard list) and everything
    /// present came from the parser or from a confirmed answer.
    pub fn conservation_holds(&self, original_chunks: &[FeatureStructure]) -> bool {
        let mut before = material(&self.original);
        for fs in original_chunks {
            before.extend(material(fs));
        }
        let mut present = material(&self.current);
        for c in &self.chunks {
            present.extend(material(&c.fs));
        }
        let mut discarded = BTreeSet::new();
        for (s, v) in &self.discarded {
            discarded.extend(value_material(s, v));
        }
        before.iter().all(|p| present.contains(p) || discarded.contains(p))
            && present.iter().all(|p| before.contains(p) || self.confirmed.contains(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fstruct::read_fs;
    use crate::record::SkippedSegment;

    const SPEC: &str = "
        (root <EVENT>)
        (sentence-types *state)
        (atomic [DAY-OF-WEEK] tuesday)
        (atomic [TIME-OF-DAY] afternoon)
        (atomic [NUMBER] :integer)
        (<EVENT> = <FREE>)
        (<FRAME> = <I> <THAT>)
        (<FREE> = ((frame *free) (who <FRAME>) (when <SIMPLE-TIME>)))
        (<I> = ((frame *i)))
        (<THAT> = ((frame *that)))
        (<SIMPLE-TIME> = ((frame *simple-time) (time-of-day [TIME-OF-DAY])
                          (day-of-week [DAY-OF-WEEK]) (day [NUMBER])))";

    fn spec() -> InterlinguaSpec {
        InterlinguaSpec::load(SPEC).unwrap()
    }

    fn seg(fs: &str, symbols: &[&str]) -> SkippedSegment {
        SkippedSegment {
            fs: read_fs(fs).unwrap(),
            symbols: symbols.iter().map(|s| s.to_string()).collect(),
            words: Vec::new(),
        }
    }

    fn sample() -> ParserOutput {
        ParserOutput {
            utterance: "tuesday afternoon the ninth be okay for me that"
                .split(' ')
                .map(String::from)
                .collect(),
            partial: Some(
                read_fs(
                    "((sentence-type *fragment) (when ((frame *simple-time) (time-of-day afternoon) (day-of-week tuesday) (day 9))))",
                )
                .unwrap(),
            ),
            partial_symbols: vec!["nt-simple-time".into()],
            skipped: vec![
                seg("((value be))", &["be"]),
                seg("((frame *free) (who ((frame *i))) (good-bad +))", &["nt-free", "nt-i"]),
                seg("((frame *that))", &["nt-that"]),
            ],
            quality: ParseQuality::Bad,
            parsed_completely: false,
        }
    }

    #[test]
    fn initializes_chunks_from_skipped_segments() {
        let drm = initialize(&sample(), &spec());
        assert_eq!(drm.chunks.len(), 3);
        assert_eq!(drm.chunks[0].leaf_type, None);
        assert_eq!(drm.chunks[1].leaf_type.as_ref().map(|t| t.as_str()), Some("<FREE>"));
        assert_eq!(drm.chunks[2].leaf_type.as_ref().map(|t| t.as_str()), Some("<THAT>"));
        assert_eq!(drm.current.sentence_type().unwrap(), "*fragment");
        assert!(!drm.top_level_confirmed);
        assert_eq!(drm.status, None);
        assert_eq!(drm, initialize(&sample(), &spec()));
    }

    #[test]
    fn nil_parse_makes_word_chunks() {
        let po = ParserOutput {
            utterance: ["i", "am", "free", "on", "tuesday"].map(String::from).to_vec(),
            quality: ParseQuality::Bad,
            ..ParserOutput::default()
        };
        let drm = initialize(&po, &spec());
        assert_eq!(drm.chunks.len(), 5);
        assert!(drm.chunks.iter().all(|c| c.fs.is_empty() && c.symbols == c.words));
        assert_eq!(drm.current, read_fs("((sentence-type *fragment))").unwrap());
    }

    #[test]
    fn complete_parse_has_no_chunks() {
        let po = ParserOutput {
            partial: Some(read_fs("((sentence-type *state) (frame *free))").unwrap()),
            parsed_completely: true,
            ..ParserOutput::default()
        };
        let drm = initialize(&po, &spec());
        assert!(drm.chunks.is_empty());
        assert_eq!(drm.current, po.partial.unwrap());
    }

    #[test]
    fn demotion_moves_root_content_into_a_chunk() {
        let spec = spec();
        let mut drm = initialize(&sample(), &spec);
        drm.demote_current_ilt(read_fs("((frame *free))").unwrap(), &spec);
        assert_eq!(drm.current, read_fs("((frame *free))").unwrap());
        assert_eq!(drm.chunks.len(), 4);
        assert_eq!(
            drm.chunks[3].fs,
            read_fs("((frame *simple-time) (time-of-day afternoon) (day-of-week tuesday) (day 9))").unwrap()
        );
        assert_eq!(drm.chunks[3].id, 4);
        assert_eq!(drm.discarded.len(), 1);
        let originals: Vec<_> = sample().skipped.into_iter().map(|s| s.fs).collect();
        assert!(drm.conservation_holds(&originals));
    }

    #[test]
    fn demoting_an_empty_fragment_adds_nothing() {
        let spec = spec();
        let po = ParserOutput {
            skipped: vec![seg("((frame *that))", &[])],
            ..ParserOutput::default()
        };
        let mut drm = initialize(&po, &spec);
        drm.demote_current_ilt(read_fs("((frame *free))").unwrap(), &spec);
        assert_eq!(drm.chunks.len(), 1);
    }

    #[test]
    fn framed_analysis_demotes_as_one_chunk_and_restores_on_finalize() {
        let spec = spec();
        let po = ParserOutput {
            partial: Some(read_fs("((sentence-type *state) (frame *free) (who ((frame *i))) (mood happy))").unwrap()),
            ..ParserOutput::default()
        };
        let mut drm = initialize(&po, &spec);
        drm.demote_current_ilt(read_fs("((frame *free))").unwrap(), &spec);
        assert_eq!(drm.chunks.len(), 1);
        assert_eq!(drm.demoted.len(), 2);
        let done = drm.finalize(&spec);
        assert!(done.equiv(&read_fs("((sentence-type *state) (frame *free) (who ((frame *i))))").unwrap()));
    }

    #[test]
    fn used_paths_cover_descendants() {
        let mut drm = initialize(&sample(), &spec());
        drm.used.insert((2, FeaturePath::root()));
        assert!(drm.is_used(2, &FeaturePath::of(&["who"])));
        assert!(!drm.is_used(3, &FeaturePath::root()));
    }
}
