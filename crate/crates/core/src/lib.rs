//! Interactive repair of fragmented interlingua parses.
//!
//! A parser that skips over parts of an utterance returns a partial
//! feature structure plus analyses of the skipped fragments. This crate
//! rebuilds a complete meaning representation from those pieces: the
//! interlingua specification constrains where fragments may go, a set of
//! mutual-information networks ranks the candidates, and every repair is
//! confirmed with a yes/no question before it is applied.

pub mod demo;
pub mod dialogue;
pub mod engine;
pub mod fstruct;
pub mod hypgen;
pub mod ilspec;
pub mod minet;
pub mod record;
pub mod repairmem;
pub mod sexp;

pub use fstruct::{
    print_fs, read_fs, AtomicValue, FeaturePath, FeatureStructure, FsError, PathElem, PathError,
    SlotValue, Symbol,
};
