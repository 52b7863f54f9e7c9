//! Agent runtime: chat sessions over a pluggable backend, JSON extraction
//! from replies, and the validate-repair retry loop.

mod backend;
mod json;
mod repair;

use std::sync::Arc;

pub use backend::{
    cache_key, BackendConfig, BackendError, BackendKind, CachedBackend, ChatBackend, HttpBackend, Message, MockBackend,
    Role, TranscriptEntry,
};
pub use json::{extract_json, ExtractError};
pub use repair::{repair_loop, RepairError, RepairReport, RepairStatus, DEFAULT_MAX_ATTEMPTS};

/// Conversation state for one agent role. History is append-only.
pub struct ChatSession {
    messages: Vec<Message>,
    backend: Arc<dyn ChatBackend>,
}

impl ChatSession {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        Self {
            messages: Vec::new(),
            backend,
        }
    }

    pub fn with_system(backend: Arc<dyn ChatBackend>, system: impl Into<String>) -> Self {
        Self {
            messages: vec![Message::system(system)],
            backend,
        }
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    /// Sends `user_message` and returns the reply verbatim. Both messages are
    /// appended only when the backend succeeds.
    pub fn complete(&mut self, user_message: impl Into<String>) -> Result<String, BackendError> {
        self.messages.push(Message::user(user_message));
        match self.backend.complete(&self.messages) {
            Ok(reply) => {
                self.messages.push(Message::assistant(reply.clone()));
                Ok(reply)
            }
            Err(e) => {
                self.messages.pop();
                Err(e)
            }
        }
    }
}

/// Builds the backend described by `config`, wrapping live backends in the
/// completion cache when `cache_dir` is given.
pub fn backend_from_config(
    config: &BackendConfig,
    cache_dir: Option<&std::path::Path>,
) -> Result<Arc<dyn ChatBackend>, BackendError> {
    config.validate()?;
    match config.kind {
        BackendKind::Mock => {
            let path = config.transcript_path.as_deref().expect("validated");
            Ok(Arc::new(MockBackend::from_file(path)?))
        }
        BackendKind::Live => {
            let http = HttpBackend::from_config(config)?;
            Ok(match cache_dir {
                Some(dir) => Arc::new(CachedBackend::new(http, dir, config.model_name.clone())),
                None => Arc::new(http),
            })
        }
    }
}
