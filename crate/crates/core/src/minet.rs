//! Count-backed mutual-information networks.
//!
//! Each network maps a set of active input units to a ranked list of output
//! units. The weight between input `c` and output `v` is
//! `log[P(v|c) / P(v)]` (the symmetric form of `log[P(c|v) / P(c)]`), estimated
//! from integer co-occurrence counts with add-λ smoothing. An output's score
//! is its log prior plus the summed weights of the active inputs.
//!
//! Inputs that have never been seen carry no evidence: their weight is
//! exactly zero, so a brand-new symbol falls back to the prior ranking.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::fstruct::Symbol;
use crate::ilspec::{InterlinguaSpec, TypeName};

pub const DEFAULT_LAMBDA: f64 = 0.5;
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MiError {
    #[error("unsupported model format version {0}")]
    Version(String),
    #[error("corrupt model at line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

fn corrupt(line: usize, message: impl Into<String>) -> MiError {
    MiError::Corrupt {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub output: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiNetwork {
    lambda: f64,
    inputs: BTreeMap<String, u64>,
    outputs: BTreeMap<String, u64>,
    joint: BTreeMap<(String, String), u64>,
    total: u64,
}

impl Default for MiNetwork {
    fn default() -> Self {
        MiNetwork::new(DEFAULT_LAMBDA)
    }
}

impl MiNetwork {
    pub fn new(lambda: f64) -> Self {
        assert!(lambda > 0.0 && lambda.is_finite(), "smoothing constant must be positive");
        MiNetwork {
            lambda,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            joint: BTreeMap::new(),
            total: 0,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn input_count(&self, c: &str) -> u64 {
        self.inputs.get(c).copied().unwrap_or(0)
    }

    pub fn output_count(&self, v: &str) -> u64 {
        self.outputs.get(v).copied().unwrap_or(0)
    }

    pub fn joint_count(&self, c: &str, v: &str) -> u64 {
        self.joint.get(&(c.to_string(), v.to_string())).copied().unwrap_or(0)
    }

    pub fn inputs(&self) -> impl Iterator<Item = (&str, u64)> {
        self.inputs.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn outputs(&self) -> impl Iterator<Item = (&str, u64)> {
        self.outputs.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn joints(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.joint.iter().map(|((c, v), n)| (c.as_str(), v.as_str(), *n))
    }

    /// Adds output units with zero counts.
    pub fn register_outputs<I, S>(&mut self, outputs: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        for v in outputs {
            self.outputs.entry(v.into()).or_insert(0);
        }
    }

    /// Adds input units with zero counts; they contribute no evidence until trained.
    pub fn register_inputs<I, S>(&mut self, inputs: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        for c in inputs {
            self.inputs.entry(c.into()).or_insert(0);
        }
    }

    fn vocab(&self) -> f64 {
        self.outputs.len() as f64
    }

    /// Smoothed log prior `log P̂(v)`.
    pub fn log_prior(&self, v: &str) -> f64 {
        let l = self.lambda;
        ((self.output_count(v) as f64 + l) / (self.total as f64 + l * self.vocab())).ln()
    }

    /// Evidence input `c` lends to output `v`; exactly 0 for an unseen input.
    pub fn mi(&self, c: &str, v: &str) -> f64 {
        let n_c = self.input_count(c);
        if n_c == 0 {
            return 0.0;
        }
        let l = self.lambda;
        let k = self.vocab();
        let p_v_given_c = (self.joint_count(c, v) as f64 + l) / (n_c as f64 + l * k);
        let p_v = (self.output_count(v) as f64 + l) / (self.total as f64 + l * k);
        (p_v_given_c / p_v).ln()
    }

    pub fn score<S>(&self, active: &BTreeSet<S>, v: &str) -> f64
    where
        S: AsRef<str> + Ord,
    {
        active
            .iter()
            .fold(self.log_prior(v), |acc, c| acc + self.mi(c.as_ref(), v))
    }

    /// Ranks `mask ∩ outputs` (all outputs when `mask` is `None`) by score,
    /// ties broken by output name.
    pub fn predict<S>(&self, active: &BTreeSet<S>, mask: Option<&BTreeSet<String>>) -> Vec<Prediction>
    where
        S: AsRef<str> + Ord,
    {
        let mut scored: Vec<(String, f64)> = self
            .outputs
            .keys()
            .filter(|v| mask.is_none_or(|m| m.contains(*v)))
            .map(|v| (v.clone(), self.score(active, v)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored
            .into_iter()
            .enumerate()
            .map(|(i, (output, score))| Prediction {
                output,
                score,
                rank: i + 1,
            })
            .collect()
    }

    /// One training event. Each distinct active input is counted once.
    pub fn train<S>(&mut self, active: &BTreeSet<S>, correct: &str)
    where
        S: AsRef<str> + Ord,
    {
        *self.outputs.entry(correct.to_string()).or_insert(0) += 1;
        self.total += 1;
        for c in active {
            let c = c.as_ref().to_string();
            *self.joint.entry((c.clone(), correct.to_string())).or_insert(0) += 1;
            *self.inputs.entry(c).or_insert(0) += 1;
        }
    }

    /// Text serialization; `load(&save())` reproduces the network exactly.
    pub fn save(&self) -> String {
        let mut out = String::new();
        writeln!(out, "mi-network {FORMAT_VERSION}").unwrap();
        writeln!(out, "lambda {}", self.lambda).unwrap();
        writeln!(out, "total {}", self.total).unwrap();
        for (v, n) in &self.outputs {
            writeln!(out, "output\t{}\t{n}", escape(v)).unwrap();
        }
        for (c, n) in &self.inputs {
            writeln!(out, "input\t{}\t{n}", escape(c)).unwrap();
        }
        for ((c, v), n) in &self.joint {
            writeln!(out, "joint\t{}\t{}\t{n}", escape(c), escape(v)).unwrap();
        }
        out
    }

    pub fn load(text: &str) -> Result<MiNetwork, MiError> {
        Self::load_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)))
    }

    fn load_lines<'a>(mut lines: impl Iterator<Item = (usize, &'a str)>) -> Result<MiNetwork, MiError> {
        let (n, header) = lines.next().ok_or_else(|| corrupt(1, "empty model"))?;
        match header.strip_prefix("mi-network ") {
            Some(v) if v.trim() == FORMAT_VERSION.to_string() => {}
            Some(v) => return Err(MiError::Version(v.trim().to_string())),
            None => return Err(corrupt(n, "missing `mi-network` header")),
        }
        let (n, lambda_line) = lines.next().ok_or_else(|| corrupt(n + 1, "missing lambda"))?;
        let lambda: f64 = lambda_line
            .strip_prefix("lambda ")
            .and_then(|s| s.trim().parse().ok())
            .filter(|l: &f64| *l > 0.0 && l.is_finite())
            .ok_or_else(|| corrupt(n, "bad lambda line"))?;
        let (n, total_line) = lines.next().ok_or_else(|| corrupt(n + 1, "missing total"))?;
        let total: u64 = total_line
            .strip_prefix("total ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| corrupt(n, "bad total line"))?;

        let mut net = MiNetwork::new(lambda);
        let mut last = n;
        for (n, line) in lines {
            last = n;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let count = |s: &str| s.parse::<u64>().map_err(|_| corrupt(n, "bad count"));
            match fields.as_slice() {
                ["output", v, c] => {
                    if net.outputs.insert(unescape(v), count(c)?).is_some() {
                        return Err(corrupt(n, "duplicate output"));
                    }
                }
                ["input", v, c] => {
                    if net.inputs.insert(unescape(v), count(c)?).is_some() {
                        return Err(corrupt(n, "duplicate input"));
                    }
                }
                ["joint", c, v, k] => {
                    let key = (unescape(c), unescape(v));
                    if net.joint.insert(key, count(k)?).is_some() {
                        return Err(corrupt(n, "duplicate joint entry"));
                    }
                }
                _ => return Err(corrupt(n, format!("unrecognized line `{line}`"))),
            }
        }
        net.total = total;
        net.check_counts().map_err(|m| corrupt(last, m))?;
        Ok(net)
    }

    /// Verifies the marginal identities that training maintains.
    pub fn check_counts(&self) -> Result<(), String> {
        let out_sum: u64 = self.outputs.values().sum();
        if out_sum != self.total {
            return Err(format!("output counts sum to {out_sum}, total is {}", self.total));
        }
        let mut row_sums: BTreeMap<&str, u64> = BTreeMap::new();
        for ((c, v), n) in &self.joint {
            if !self.outputs.contains_key(v) {
                return Err(format!("joint entry for unknown output {v}"));
            }
            *row_sums.entry(c).or_insert(0) += n;
        }
        for (c, n) in &self.inputs {
            let s = row_sums.get(c.as_str()).copied().unwrap_or(0);
            if s != *n {
                return Err(format!("input {c}: joint counts sum to {s}, marginal is {n}"));
            }
        }
        if let Some(c) = row_sums.keys().find(|c| !self.inputs.contains_key(**c)) {
            return Err(format!("joint entry for unknown input {c}"));
        }
        Ok(())
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Input unit of the slot-filler network and output unit of the slot-prior
/// network: `*frame:slot`.
pub fn slot_unit(frame: &Symbol, slot: &Symbol) -> String {
    format!("{frame}:{slot}")
}

/// The single input unit of the slot-prior network.
pub const TRUE_UNIT: &str = "true";

/// Which of the five networks a unit or training event belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NetworkRole {
    /// Parser symbol (or raw word) of an untyped chunk → type.
    SymbolToType,
    /// `(frame, slot)` → filler type.
    SlotFiller,
    /// Set of parser symbols → type; top-level frames and chunk combination.
    SymbolsToType,
    /// Set of parser symbols → sentence type.
    SymbolsToSentenceType,
    /// Constant `true` → `(frame, slot)` likely to be filled.
    SlotPrior,
}

impl NetworkRole {
    pub const ALL: [NetworkRole; 5] = [
        NetworkRole::SymbolToType,
        NetworkRole::SlotFiller,
        NetworkRole::SymbolsToType,
        NetworkRole::SymbolsToSentenceType,
        NetworkRole::SlotPrior,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NetworkRole::SymbolToType => "symbol-to-type",
            NetworkRole::SlotFiller => "slot-filler",
            NetworkRole::SymbolsToType => "symbols-to-type",
            NetworkRole::SymbolsToSentenceType => "symbols-to-sentence-type",
            NetworkRole::SlotPrior => "slot-prior",
        }
    }

    pub fn from_name(name: &str) -> Option<NetworkRole> {
        NetworkRole::ALL.into_iter().find(|r| r.name() == name)
    }
}

/// The five networks the repair engine consults.
#[derive(Debug, Clone, PartialEq)]
pub struct Networks {
    pub symbol_to_type: MiNetwork,
    pub slot_filler: MiNetwork,
    pub symbols_to_type: MiNetwork,
    pub symbols_to_sentence_type: MiNetwork,
    pub slot_prior: MiNetwork,
}

impl Networks {
    /// Empty networks whose output vocabularies cover the spec.
    pub fn for_spec(spec: &InterlinguaSpec, lambda: f64) -> Networks {
        let leaf_names: Vec<String> = spec.leaves().map(|l| l.name.to_string()).collect();
        let mut nets = Networks {
            symbol_to_type: MiNetwork::new(lambda),
            slot_filler: MiNetwork::new(lambda),
            symbols_to_type: MiNetwork::new(lambda),
            symbols_to_sentence_type: MiNetwork::new(lambda),
            slot_prior: MiNetwork::new(lambda),
        };
        nets.symbol_to_type.register_outputs(leaf_names.iter().cloned());
        nets.slot_filler.register_outputs(leaf_names.iter().cloned());
        nets.symbols_to_type.register_outputs(leaf_names);
        nets.symbols_to_sentence_type
            .register_outputs(spec.sentence_types().iter().map(|s| s.to_string()));
        nets.slot_prior
            .register_outputs(spec.frame_slot_pairs().iter().map(|(f, s)| slot_unit(f, s)));
        nets.slot_prior.register_inputs([TRUE_UNIT]);
        nets
    }

    pub fn get(&self, role: NetworkRole) -> &MiNetwork {
        match role {
            NetworkRole::SymbolToType => &self.symbol_to_type,
            NetworkRole::SlotFiller => &self.slot_filler,
            NetworkRole::SymbolsToType => &self.symbols_to_type,
            NetworkRole::SymbolsToSentenceType => &self.symbols_to_sentence_type,
            NetworkRole::SlotPrior => &self.slot_prior,
        }
    }

    pub fn get_mut(&mut self, role: NetworkRole) -> &mut MiNetwork {
        match role {
            NetworkRole::SymbolToType => &mut self.symbol_to_type,
            NetworkRole::SlotFiller => &mut self.slot_filler,
            NetworkRole::SymbolsToType => &mut self.symbols_to_type,
            NetworkRole::SymbolsToSentenceType => &mut self.symbols_to_sentence_type,
            NetworkRole::SlotPrior => &mut self.slot_prior,
        }
    }

    /// Applies one training event to the network named by `role`.
    pub fn train(&mut self, role: NetworkRole, active: &BTreeSet<String>, correct: &str) {
        self.get_mut(role).train(active, correct);
    }

    /// Ranks types for a set of parser symbols, restricted to `mask`.
    pub fn rank_types(&self, symbols: &BTreeSet<String>, mask: &[TypeName]) -> Vec<Prediction> {
        let mask: BTreeSet<String> = mask.iter().map(|t| t.to_string()).collect();
        self.symbols_to_type.predict(symbols, Some(&mask))
    }

    pub fn save(&self) -> String {
        let mut out = format!("repair-model {FORMAT_VERSION}\n");
        for role in NetworkRole::ALL {
            writeln!(out, "[{}]", role.name()).unwrap();
            out.push_str(&self.get(role).save());
        }
        out
    }

    pub fn load(text: &str) -> Result<Networks, MiError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
        match lines.next() {
            Some((_, h)) if h.trim() == format!("repair-model {FORMAT_VERSION}") => {}
            Some((_, h)) if h.starts_with("repair-model ") => {
                return Err(MiError::Version(h["repair-model ".len()..].trim().to_string()))
            }
            _ => return Err(corrupt(1, "missing `repair-model` header")),
        }
        let mut found: BTreeMap<NetworkRole, MiNetwork> = BTreeMap::new();
        while let Some((n, line)) = lines.next() {
            if line.trim().is_empty() {
                continue;
            }
            let name = line
                .strip_prefix('[')
                .and_then(|l| l.strip_suffix(']'))
                .ok_or_else(|| corrupt(n, "expected [network-name]"))?;
            let role = NetworkRole::from_name(name)
                .ok_or_else(|| corrupt(n, format!("unknown network {name}")))?;
            let mut body = Vec::new();
            while let Some((_, l)) = lines.peek() {
                if l.starts_with('[') {
                    break;
                }
                body.push(lines.next().unwrap());
            }
            let net = MiNetwork::load_lines(body.into_iter())?;
            if found.insert(role, net).is_some() {
                return Err(corrupt(n, format!("network {name} appears twice")));
            }
        }
        let mut take = |role: NetworkRole| {
            found
                .remove(&role)
                .ok_or_else(|| corrupt(0, format!("missing network {}", role.name())))
        };
        Ok(Networks {
            symbol_to_type: take(NetworkRole::SymbolToType)?,
            slot_filler: take(NetworkRole::SlotFiller)?,
            symbols_to_type: take(NetworkRole::SymbolsToType)?,
            symbols_to_sentence_type: take(NetworkRole::SymbolsToSentenceType)?,
            slot_prior: take(NetworkRole::SlotPrior)?,
        })
    }
}

/// Builds a set of owned units from anything string-like.
pub fn units<I, S>(items: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    items.into_iter().map(Into::into).collect()
}
