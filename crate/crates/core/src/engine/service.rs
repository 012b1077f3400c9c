use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::Serialize;
use thiserror::Error;

use super::Session;
use crate::dialogue::{paraphrase, Glosses};
use crate::hypgen::RepairConfig;
use crate::ilspec::InterlinguaSpec;
use crate::minet::Networks;
use crate::record::{read_record, RecordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(u64),
    #[error("no question is waiting for an answer")]
    NoOutstandingQuestion,
    #[error("answer is for question {got} but question {expected} is outstanding")]
    OutOfOrder { expected: usize, got: usize },
    #[error(transparent)]
    BadRecord(#[from] RecordError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuestionView {
    pub seq: usize,
    pub text: String,
    pub hypothesis: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChunkView {
    pub id: usize,
    pub fs: String,
    pub leaf_type: Option<String>,
    pub consumed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptView {
    pub question: String,
    pub hypothesis: String,
    pub answer: bool,
}

/// Snapshot of one session for clients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionView {
    pub id: u64,
    /// `awaiting-answer` or `done`.
    pub status: &'static str,
    pub utterance: Vec<String>,
    pub question: Option<QuestionView>,
    /// The current analysis while running, the final one when done.
    pub ilt: String,
    pub paraphrase: String,
    pub chunks: Vec<ChunkView>,
    pub transcript: Vec<TranscriptView>,
}

/// Sessions over shared networks. Each session is locked on its own; the
/// networks sit behind one reader-writer lock taken for writing only while
/// an answer is applied.
pub struct SessionService {
    spec: InterlinguaSpec,
    glosses: Glosses,
    config: RepairConfig,
    nets: RwLock<Networks>,
    next_id: AtomicU64,
    sessions: Mutex<HashMap<u64, Arc<Mutex<Session>>>>,
}

impl SessionService {
    pub fn new(spec: InterlinguaSpec, nets: Networks, glosses: Glosses, config: RepairConfig) -> Self {
        SessionService {
            spec,
            glosses,
            config,
            nets: RwLock::new(nets),
            next_id: AtomicU64::new(1),
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn networks(&self) -> Networks {
        self.nets.read().unwrap().clone()
    }

    fn session(&self, id: u64) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions
            .lock()
            .unwrap()
            .get(&id)
            .cloned()
            .ok_or(ServiceError::UnknownSession(id))
    }

    fn view(&self, id: u64, session: &mut Session) -> SessionView {
        {
            let nets = self.nets.read().unwrap();
            session.next_question(&self.spec, &nets, &self.glosses);
        }
        let done = session.is_finished();
        let ilt = if done {
            session.result(&self.spec)
        } else {
            session.drm.current.clone()
        };
        SessionView {
            id,
            status: if done { "done" } else { "awaiting-answer" },
            utterance: session.drm.utterance.clone(),
            question: session.outstanding().map(|q| QuestionView {
                seq: q.seq,
                text: q.text.clone(),
                hypothesis: q.hypothesis.to_string(),
            }),
            paraphrase: paraphrase(&ilt, &self.glosses),
            ilt: ilt.to_string(),
            chunks: session
                .drm
                .chunks
                .iter()
                .map(|c| ChunkView {
                    id: c.id,
                    fs: c.fs.to_string(),
                    leaf_type: c.leaf_type.as_ref().map(|t| t.to_string()),
                    consumed: c.consumed,
                })
                .collect(),
            transcript: session
                .drm
                .transcript
                .iter()
                .map(|e| TranscriptView {
                    question: e.question.clone(),
                    hypothesis: e.hypothesis.to_string(),
                    answer: e.answer,
                })
                .collect(),
        }
    }

    /// Starts a session from one record in the corpus text format; any
    /// gold structure in the record is ignored.
    pub fn create(&self, record: &str) -> Result<SessionView, ServiceError> {
        let rec = read_record(record)?;
        let mut session = {
            let nets = self.nets.read().unwrap();
            Session::new(&rec.output, &self.spec, &nets, self.config.clone())
        };
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let view = self.view(id, &mut session);
        self.sessions
            .lock()
            .unwrap()
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    pub fn question(&self, id: u64) -> Result<SessionView, ServiceError> {
        let s = self.session(id)?;
        let mut session = s.lock().unwrap();
        Ok(self.view(id, &mut session))
    }

    /// Answers the outstanding question. When `seq` is given it must name
    /// that question.
    pub fn answer(&self, id: u64, yes: bool, seq: Option<usize>) -> Result<SessionView, ServiceError> {
        let s = self.session(id)?;
        let mut session = s.lock().unwrap();
        let expected = session
            .outstanding()
            .map(|q| q.seq)
            .ok_or(ServiceError::NoOutstandingQuestion)?;
        if let Some(got) = seq.filter(|g| *g != expected) {
            return Err(ServiceError::OutOfOrder { expected, got });
        }
        {
            let mut nets = self.nets.write().unwrap();
            session
                .answer(yes, &self.spec, &mut nets)
                .map_err(|_| ServiceError::NoOutstandingQuestion)?;
        }
        Ok(self.view(id, &mut session))
    }

    /// Gives up on the remaining questions.
    pub fn stop(&self, id: u64) -> Result<SessionView, ServiceError> {
        let s = self.session(id)?;
        let mut session = s.lock().unwrap();
        session.stop();
        Ok(self.view(id, &mut session))
    }

    /// The session's structure as it would be returned now.
    pub fn result(&self, id: u64) -> Result<SessionView, ServiceError> {
        let s = self.session(id)?;
        let mut session = s.lock().unwrap();
        let mut view = self.view(id, &mut session);
        if !session.is_finished() {
            let ilt = session.result(&self.spec);
            view.paraphrase = paraphrase(&ilt, &self.glosses);
            view.ilt = ilt.to_string();
        }
        Ok(view)
    }
}
