//! The bundled scheduling-domain spec, glosses and corpora.

use crate::dialogue::Glosses;
use crate::engine::synth;
use crate::engine::train_from_gold;
use crate::hypgen::RepairConfig;
use crate::ilspec::InterlinguaSpec;
use crate::minet::Networks;
use crate::record::{read_corpus, read_record, write_corpus, CorpusRecord};

pub const SPEC: &str = include_str!("../data/demo.spec");
pub const GLOSSES: &str = include_str!("../data/glosses.tsv");
/// The fragmented "Tuesday afternoon the ninth" parse with its gold.
pub const FIGURE: &str = include_str!("../data/figure.rec");
pub const SYNTHETIC: &str = include_str!("../data/synthetic.rec");

pub fn spec() -> InterlinguaSpec {
    InterlinguaSpec::load(SPEC).expect("bundled spec loads")
}

pub fn glosses() -> Glosses {
    Glosses::parse(GLOSSES).expect("bundled glosses load")
}

pub fn figure() -> CorpusRecord {
    read_record(FIGURE).expect("bundled figure record loads")
}

pub fn synthetic() -> Vec<CorpusRecord> {
    read_corpus(SYNTHETIC).expect("bundled corpus loads")
}

/// The text of the bundled corpus, regenerated from the spec.
pub fn synthetic_text(spec: &InterlinguaSpec, n: usize, seed: u64) -> String {
    format!(
        "; {n} records generated from the demo spec with seed {seed}.\n\n{}",
        write_corpus(&synth::generate(spec, n, seed))
    )
}

/// Seed and size of the training corpus behind [`trained_networks`]. It is
/// generated apart from the bundled evaluation corpus so that evaluation
/// does not run on training material.
pub const TRAINING_SEED: u64 = 7;
pub const TRAINING_SIZE: usize = 600;

/// Networks trained offline on the gold side of a generated training corpus.
pub fn trained_networks(spec: &InterlinguaSpec) -> Networks {
    let mut nets = Networks::for_spec(spec, RepairConfig::default().lambda);
    train_from_gold(&synth::generate(spec, TRAINING_SIZE, TRAINING_SEED), spec, &mut nets);
    nets
}
