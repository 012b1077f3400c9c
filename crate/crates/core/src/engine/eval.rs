use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::{run_session, OracleAnswerer};
use crate::dialogue::Glosses;
use crate::fstruct::{FeatureStructure, SlotValue};
use crate::hypgen::{Policy, RepairConfig};
use crate::ilspec::InterlinguaSpec;
use crate::minet::{slot_unit, units, NetworkRole, Networks, TRUE_UNIT};
use crate::record::CorpusRecord;

pub const DEFAULT_BUDGETS: [usize; 4] = [0, 5, 10, 25];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("record {index} has no gold structure")]
    MissingGold { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordOutcome {
    pub policy: Policy,
    pub budget: usize,
    pub record: usize,
    pub before: f64,
    pub after: f64,
    pub questions: usize,
    pub questions_to_converge: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub policy: Policy,
    pub budget: usize,
    pub accuracy_before: f64,
    pub accuracy_after: f64,
    pub mean_questions: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub outcomes: Vec<RecordOutcome>,
}

impl EvalReport {
    pub fn row(&self, policy: Policy, budget: usize) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.policy == policy && r.budget == budget)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("policy\tbudget\taccuracy-before\taccuracy-after\tmean-questions\n");
        for r in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{:.4}\t{:.4}\t{:.2}",
                r.policy, r.budget, r.accuracy_before, r.accuracy_after, r.mean_questions
            )
            .unwrap();
        }
        out
    }
}

fn golds(records: &[CorpusRecord]) -> Result<Vec<&FeatureStructure>, EvalError> {
    records
        .iter()
        .enumerate()
        .map(|(index, r)| r.gold.as_ref().ok_or(EvalError::MissingGold { index }))
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Oracle sessions for every policy and budget. Each (policy, budget) pass
/// starts from a copy of `nets`; with `persistent` the copy carries
/// reinforcement from one record to the next, otherwise every record starts
/// from `nets` again.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_corpus(
    records: &[CorpusRecord],
    spec: &InterlinguaSpec,
    nets: &Networks,
    glosses: &Glosses,
    budgets: &[usize],
    policies: &[Policy],
    base: &RepairConfig,
    persistent: bool,
) -> Result<EvalReport, EvalError> {
    let golds = golds(records)?;
    let mut report = EvalReport::default();
    for &policy in policies {
        for &budget in budgets {
            let config = RepairConfig {
                policy,
                max_questions: budget,
                ..base.clone()
            };
            let mut shared = nets.clone();
            let mut outcomes = Vec::new();
            for (i, (rec, gold)) in records.iter().zip(&golds).enumerate() {
                let mut private;
                let local = if persistent {
                    &mut shared
                } else {
                    private = nets.clone();
                    &mut private
                };
                let mut oracle = OracleAnswerer { gold, spec };
                let res = run_session(&rec.output, spec, local, glosses, &mut oracle, &config, Some(gold));
                outcomes.push(RecordOutcome {
                    policy,
                    budget,
                    record: i,
                    before: res.accuracy_before.unwrap_or_default(),
                    after: res.accuracy_after.unwrap_or_default(),
                    questions: res.questions_used,
                    questions_to_converge: res.questions_to_converge,
                });
            }
            report.rows.push(EvalRow {
                policy,
                budget,
                accuracy_before: mean(outcomes.iter().map(|o| o.before)),
                accuracy_after: mean(outcomes.iter().map(|o| o.after)),
                mean_questions: mean(outcomes.iter().map(|o| o.questions as f64)),
            });
            report.outcomes.extend(outcomes);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassStats {
    pub total_questions: usize,
    pub total_to_converge: usize,
    pub mean_after: f64,
}

/// Runs the corpus `passes` times in a row with reinforcement carried
/// across records and passes.
pub fn learning_passes(
    records: &[CorpusRecord],
    spec: &InterlinguaSpec,
    nets: &mut Networks,
    glosses: &Glosses,
    config: &RepairConfig,
    passes: usize,
) -> Result<Vec<PassStats>, EvalError> {
    let golds = golds(records)?;
    let mut out = Vec::new();
    for _ in 0..passes {
        let mut stats = PassStats {
            total_questions: 0,
            total_to_converge: 0,
            mean_after: 0.0,
        };
        let mut afters = Vec::new();
        for (rec, gold) in records.iter().zip(&golds) {
            let mut oracle = OracleAnswerer { gold, spec };
            let res = run_session(&rec.output, spec, nets, glosses, &mut oracle, config, Some(gold));
            stats.total_questions += res.questions_used;
            stats.total_to_converge += res.questions_to_converge;
            afters.push(res.accuracy_after.unwrap_or_default());
        }
        stats.mean_after = mean(afters.into_iter());
        out.push(stats);
    }
    Ok(out)
}

/// Training events read directly off gold structures: parser symbols to
/// the top-level leaf and sentence type, and every filled slot to its
/// filler type and to the slot prior. Returns the number of events.
pub fn train_from_gold(records: &[CorpusRecord], spec: &InterlinguaSpec, nets: &mut Networks) -> usize {
    let mut events = 0;
    for rec in records {
        let Some(gold) = &rec.gold else { continue };
        let mut symbols: BTreeSet<String> = rec.output.partial_symbols.iter().cloned().collect();
        for seg in &rec.output.skipped {
            symbols.extend(seg.symbols.iter().cloned());
        }
        if rec.output.partial.is_none() && rec.output.skipped.is_empty() {
            symbols.extend(rec.output.utterance.iter().cloned());
        }
        if let Some(leaf) = spec.leaf_type_of(gold) {
            nets.train(NetworkRole::SymbolsToType, &symbols, leaf.as_str());
            events += 1;
        }
        if let Some(st) = gold.sentence_type() {
            nets.train(NetworkRole::SymbolsToSentenceType, &symbols, st.as_str());
            events += 1;
        }
        for node in gold.constituents() {
            let Some(rule) = spec.leaf_type_of(node).and_then(|l| spec.leaf(l)) else {
                continue;
            };
            for (slot, _) in &rule.slots {
                let Some(value) = node.get(slot.as_str()) else { continue };
                let unit = slot_unit(&rule.frame, slot);
                nets.train(NetworkRole::SlotPrior, &units([TRUE_UNIT]), &unit);
                events += 1;
                let fillers: Vec<&SlotValue> = match value {
                    SlotValue::Multiple(items) => items.iter().collect(),
                    v => vec![v],
                };
                for f in fillers {
                    if let Some(leaf) = f.as_structure().and_then(|fs| spec.leaf_type_of(fs)) {
                        nets.train(NetworkRole::SlotFiller, &units([unit.clone()]), leaf.as_str());
                        events += 1;
                    }
                }
            }
        }
    }
    events
}
