//! Live sessions: the shared engine behind a single-writer lock, with
//! lossless in-order fan-out of events to subscribers.

use std::collections::BTreeMap;
use std::sync::{Mutex, MutexGuard};

use spkfix_core::engine::{AuditLog, Engine, EngineToggles, SessionEvent, Snapshot};
use spkfix_core::feedback::TextGateway;
use spkfix_core::model::{Embedding, RevisionSource, Segment, SessionConfig, SpeakerId};
use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver, UnboundedSender};

struct Inner {
    engine: Engine,
    llm: Box<dyn TextGateway + Send>,
    subscribers: Vec<UnboundedSender<SessionEvent>>,
}

impl Inner {
    fn publish(&mut self, events: &[SessionEvent]) {
        self.subscribers
            .retain(|tx| events.iter().all(|e| tx.send(e.clone()).is_ok()));
    }
}

/// One meeting. All mutations take the same lock, so every caller observes
/// a single total order of events.
pub struct Session {
    inner: Mutex<Inner>,
}

impl Session {
    pub fn open(
        cfg: SessionConfig,
        toggles: EngineToggles,
        seeds: BTreeMap<SpeakerId, Vec<Embedding>>,
        llm: Box<dyn TextGateway + Send>,
    ) -> spkfix_core::Result<Self> {
        let engine = Engine::open(cfg, toggles, seeds)?;
        Ok(Self { inner: Mutex::new(Inner { engine, llm, subscribers: Vec::new() }) })
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        // A panic while holding the lock leaves the engine consistent: every
        // engine operation validates before it mutates.
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn push_segment(&self, segment: Segment) -> Vec<SessionEvent> {
        let mut g = self.lock();
        let Inner { engine, llm, .. } = &mut *g;
        let events = engine.push_segment(segment, llm.as_mut());
        g.publish(&events);
        events
    }

    pub fn push_feedback(&self, text: &str) -> Vec<SessionEvent> {
        self.push_feedback_from(text, RevisionSource::User)
    }

    pub fn push_feedback_from(&self, text: &str, source: RevisionSource) -> Vec<SessionEvent> {
        let mut g = self.lock();
        let Inner { engine, llm, .. } = &mut *g;
        let events = engine.push_feedback(text, source, llm.as_mut());
        g.publish(&events);
        events
    }

    pub fn snapshot(&self) -> Snapshot {
        self.lock().engine.snapshot()
    }

    /// Snapshot plus a receiver for every later event, taken atomically so
    /// nothing is missed or duplicated between the two.
    pub fn subscribe(&self) -> (Snapshot, UnboundedReceiver<SessionEvent>) {
        let mut g = self.lock();
        let (tx, rx) = unbounded_channel();
        g.subscribers.push(tx);
        (g.engine.snapshot(), rx)
    }

    pub fn audit_log(&self) -> AuditLog {
        self.lock().engine.audit_log()
    }

    pub fn with_engine<R>(&self, f: impl FnOnce(&Engine) -> R) -> R {
        f(&self.lock().engine)
    }
}
