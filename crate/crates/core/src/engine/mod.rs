//! Running repair sessions, scoring them, and evaluating whole corpora.

mod eval;
mod service;
pub mod synth;

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::dialogue::{apply_hypothesis, render_question, Glosses};
use crate::fstruct::{AtomicValue, FeatureStructure, SlotValue};
use crate::hypgen::{insertion_value, meta_next, Hypothesis, RepairConfig};
use crate::ilspec::InterlinguaSpec;
use crate::minet::Networks;
use crate::record::ParserOutput;
use crate::repairmem::{initialize, DynamicRepairMemory, Status, TranscriptEntry};

pub use eval::{
    evaluate_corpus, learning_passes, train_from_gold, EvalError, EvalReport, EvalRow, PassStats,
    RecordOutcome, DEFAULT_BUDGETS,
};
pub use service::{ChunkView, QuestionView, ServiceError, SessionService, SessionView};

/// Supplies yes/no answers to repair questions.
pub trait Answerer {
    fn answer(&mut self, question: &str, hypothesis: &Hypothesis, drm: &DynamicRepairMemory) -> bool;
}

/// Answers from a gold structure.
pub struct OracleAnswerer<'a> {
    pub gold: &'a FeatureStructure,
    pub spec: &'a InterlinguaSpec,
}

impl Answerer for OracleAnswerer<'_> {
    fn answer(&mut self, _: &str, hypothesis: &Hypothesis, drm: &DynamicRepairMemory) -> bool {
        oracle_answer(self.gold, hypothesis, drm, self.spec)
    }
}

/// Replays a fixed answer list, then answers `rest`.
pub struct ScriptedAnswerer {
    pub answers: VecDeque<bool>,
    pub rest: bool,
}

impl ScriptedAnswerer {
    pub fn new(answers: impl IntoIterator<Item = bool>, rest: bool) -> Self {
        ScriptedAnswerer {
            answers: answers.into_iter().collect(),
            rest,
        }
    }
}

impl Answerer for ScriptedAnswerer {
    fn answer(&mut self, _: &str, _: &Hypothesis, _: &DynamicRepairMemory) -> bool {
        self.answers.pop_front().unwrap_or(self.rest)
    }
}

/// Prints each question and reads y/n lines. End of input counts as no.
pub struct InteractiveAnswerer<R, W> {
    pub input: R,
    pub output: W,
}

impl<R: BufRead, W: Write> Answerer for InteractiveAnswerer<R, W> {
    fn answer(&mut self, question: &str, _: &Hypothesis, _: &DynamicRepairMemory) -> bool {
        loop {
            let _ = write!(self.output, "{question} [y/n] ");
            let _ = self.output.flush();
            let mut line = String::new();
            match self.input.read_line(&mut line) {
                Ok(0) | Err(_) => return false,
                Ok(_) => {}
            }
            match line.trim().to_ascii_lowercase().as_str() {
                "y" | "yes" => return true,
                "n" | "no" => return false,
                _ => {
                    let _ = writeln!(self.output, "Please answer yes or no.");
                }
            }
        }
    }
}

/// F1 over the flattened (path, value) pairs of the two structures.
pub fn accuracy(candidate: &FeatureStructure, gold: &FeatureStructure) -> f64 {
    let c = candidate.flatten();
    let g = gold.flatten();
    match (c.is_empty(), g.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let hits = c.intersection(&g).count() as f64;
    if hits == 0.0 {
        return 0.0;
    }
    let p = hits / c.len() as f64;
    let r = hits / g.len() as f64;
    2.0 * p * r / (p + r)
}

/// Whether `value` is consistent with the gold filler `gold`.
fn fits(value: &SlotValue, gold: &SlotValue) -> bool {
    match (value, gold) {
        (SlotValue::Atomic(a), SlotValue::Atomic(b)) => a == b,
        (SlotValue::Structure(s), SlotValue::Structure(t)) => s.flatten().is_subset(&t.flatten()),
        (SlotValue::Multiple(items), SlotValue::Multiple(_)) => items.iter().all(|v| fits(v, gold)),
        (v, SlotValue::Multiple(items)) => items.iter().any(|g| fits(v, g)),
        _ => false,
    }
}

/// Whether any atom anywhere under `fs` equals `atom`.
fn contains_atom(fs: &FeatureStructure, atom: &AtomicValue) -> bool {
    fs.flatten().iter().any(|(_, a)| a == atom)
}

/// The answer a cooperative speaker who meant `gold` would give.
pub fn oracle_answer(
    gold: &FeatureStructure,
    h: &Hypothesis,
    drm: &DynamicRepairMemory,
    spec: &InterlinguaSpec,
) -> bool {
    match h {
        Hypothesis::TopLevelFrame { leaf } => spec.leaf_type_of(gold) == Some(leaf),
        Hypothesis::SentenceType { sentence_type } => gold.sentence_type() == Some(sentence_type),
        Hypothesis::InsertChunk { target, .. } => {
            let (Some(value), Some(g)) = (insertion_value(h, drm, spec), gold.get_path(target)) else {
                return false;
            };
            fits(&value, g)
        }
        Hypothesis::CombineChunks { members, result } => {
            let Some(frame) = spec.leaf(result).map(|l| &l.frame) else {
                return false;
            };
            gold.constituents().into_iter().any(|node| {
                node.frame() == Some(frame)
                    && members.iter().all(|m| {
                        let Some(c) = drm.chunk(*m) else { return false };
                        match &c.leaf_type {
                            Some(leaf) => spec.coerce(&c.fs, leaf).is_some_and(|fs| {
                                let v = SlotValue::Structure(fs);
                                node.slots().any(|(_, g)| fits(&v, g))
                            }),
                            None => match c.words.as_slice() {
                                [word] => AtomicValue::parse(word).is_some_and(|a| contains_atom(node, &a)),
                                _ => false,
                            },
                        }
                    })
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("no question is waiting for an answer")]
    NoOutstandingQuestion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    /// 1-based position in the session.
    pub seq: usize,
    pub text: String,
    pub hypothesis: Hypothesis,
}

/// One repair dialogue, advanced one question at a time.
#[derive(Debug, Clone)]
pub struct Session {
    pub drm: DynamicRepairMemory,
    pub config: RepairConfig,
    pending: Option<Question>,
    finished: bool,
}

impl Session {
    pub fn new(po: &ParserOutput, spec: &InterlinguaSpec, nets: &Networks, config: RepairConfig) -> Session {
        let mut drm = initialize(po, spec);
        drm.annotate(spec, nets);
        Session {
            drm,
            config,
            pending: None,
            finished: false,
        }
    }

    /// The outstanding question, choosing a new one if none is waiting.
    /// `None` once the session is over.
    pub fn next_question(&mut self, spec: &InterlinguaSpec, nets: &Networks, glosses: &Glosses) -> Option<&Question> {
        if self.pending.is_none() && !self.finished {
            match meta_next(&mut self.drm, spec, nets, &self.config) {
                None => self.finished = true,
                Some(h) => {
                    let text = render_question(&h, &self.drm, spec, glosses);
                    self.drm.hypothesis = Some(h.clone());
                    self.drm.status = Some(Status::Test);
                    self.pending = Some(Question {
                        seq: self.drm.questions_asked() + 1,
                        text,
                        hypothesis: h,
                    });
                }
            }
        }
        self.pending.as_ref()
    }

    pub fn outstanding(&self) -> Option<&Question> {
        self.pending.as_ref()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Records the answer to the outstanding question and, on yes, applies
    /// the repair and reinforces `nets`.
    pub fn answer(&mut self, yes: bool, spec: &InterlinguaSpec, nets: &mut Networks) -> Result<(), SessionError> {
        let q = self.pending.take().ok_or(SessionError::NoOutstandingQuestion)?;
        self.drm.transcript.push(TranscriptEntry {
            hypothesis: q.hypothesis.clone(),
            question: q.text,
            answer: yes,
        });
        let passed = yes && apply_hypothesis(&q.hypothesis, &mut self.drm, spec, nets).is_ok();
        self.drm.status = Some(if passed { Status::Pass } else { Status::Fail });
        Ok(())
    }

    /// Ends the session early; no further questions are offered.
    pub fn stop(&mut self) {
        self.pending = None;
        self.finished = true;
    }

    pub fn result(&self, spec: &InterlinguaSpec) -> FeatureStructure {
        self.drm.finalize(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub final_ilt: FeatureStructure,
    pub questions_used: usize,
    /// Position of the last yes answer; 0 when nothing was confirmed.
    pub questions_to_converge: usize,
    pub transcript: Vec<TranscriptEntry>,
    pub accuracy_before: Option<f64>,
    pub accuracy_after: Option<f64>,
}

/// Runs a whole session against `answerer`.
pub fn run_session(
    po: &ParserOutput,
    spec: &InterlinguaSpec,
    nets: &mut Networks,
    glosses: &Glosses,
    answerer: &mut dyn Answerer,
    config: &RepairConfig,
    gold: Option<&FeatureStructure>,
) -> SessionResult {
    let mut session = Session::new(po, spec, nets, config.clone());
    let before = session.drm.current.clone();
    while let Some(q) = session.next_question(spec, nets, glosses) {
        let q = q.clone();
        let yes = answerer.answer(&q.text, &q.hypothesis, &session.drm);
        session.answer(yes, spec, nets).expect("question outstanding");
    }
    let final_ilt = session.result(spec);
    let transcript = session.drm.transcript;
    SessionResult {
        accuracy_before: gold.map(|g| accuracy(&before, g)),
        accuracy_after: gold.map(|g| accuracy(&final_ilt, g)),
        questions_used: transcript.len(),
        questions_to_converge: transcript.iter().rposition(|e| e.answer).map_or(0, |i| i + 1),
        final_ilt,
        transcript,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fstruct::read_fs;

    #[test]
    fn accuracy_edge_cases() {
        let a = read_fs("((frame *free) (who ((frame *i))))").unwrap();
        let b = read_fs("((frame *busy))").unwrap();
        let e = FeatureStructure::new();
        assert_eq!(accuracy(&a, &a), 1.0);
        assert_eq!(accuracy(&a, &b), 0.0);
        assert_eq!(accuracy(&e, &e), 1.0);
        assert_eq!(accuracy(&e, &a), 0.0);
        let c = read_fs("((frame *free))").unwrap();
        // P = 1, R = 1/2
        assert!((accuracy(&c, &a) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fits_handles_multiple_values() {
        let gold = read_fs("((s (*multiple* a b)))").unwrap();
        let v = read_fs("((s a))").unwrap();
        assert!(fits(v.get("s").unwrap(), gold.get("s").unwrap()));
        let w = read_fs("((s c))").unwrap();
        assert!(!fits(w.get("s").unwrap(), gold.get("s").unwrap()));
    }
}
