use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BackendError, ChatSession};
use crate::prompt::PromptText;
use crate::report::Violation;

pub const DEFAULT_MAX_ATTEMPTS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepairStatus {
    Ok,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub attempts: u32,
    /// One entry per completion; a successful final attempt records `[]`.
    pub violations_per_attempt: Vec<Vec<Violation>>,
    pub final_status: RepairStatus,
}

impl RepairReport {
    pub fn last_violations(&self) -> &[Violation] {
        self.violations_per_attempt.last().map_or(&[], Vec::as_slice)
    }
}

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("max_attempts must be at least 1")]
    InvalidMaxAttempts,
    #[error("no valid reply after {} attempts", report.attempts)]
    Exhausted { report: RepairReport },
    #[error("backend failed on attempt {}: {source}", report.attempts + 1)]
    Backend { source: BackendError, report: RepairReport },
}

impl RepairError {
    pub fn report(&self) -> Option<&RepairReport> {
        match self {
            RepairError::InvalidMaxAttempts => None,
            RepairError::Exhausted { report } | RepairError::Backend { report, .. } => Some(report),
        }
    }
}

pub(crate) fn repair_message(violations: &[Violation]) -> String {
    let mut msg = String::from("Your previous reply does not satisfy the required output format.\nViolations:\n");
    for v in violations {
        msg.push_str("- ");
        msg.push_str(&v.to_string());
        msg.push('\n');
    }
    msg.push_str("Please reply again with the corrected, complete JSON object in the final output JSON format.");
    msg
}

/// Sends `prompt`, checks the reply with `contract`, and feeds violations
/// back until a reply passes or `max_attempts` completions have been used.
pub fn repair_loop<T, F>(
    session: &mut ChatSession,
    prompt: &PromptText,
    max_attempts: u32,
    mut contract: F,
) -> Result<(T, RepairReport), RepairError>
where
    F: FnMut(&str) -> Result<T, Vec<Violation>>,
{
    if max_attempts == 0 {
        return Err(RepairError::InvalidMaxAttempts);
    }
    let mut report = RepairReport {
        attempts: 0,
        violations_per_attempt: Vec::new(),
        final_status: RepairStatus::Exhausted,
    };
    let mut message = prompt.text();
    while report.attempts < max_attempts {
        let reply = match session.complete(message.as_str()) {
            Ok(r) => r,
            Err(source) => return Err(RepairError::Backend { source, report }),
        };
        report.attempts += 1;
        match contract(&reply) {
            Ok(value) => {
                report.violations_per_attempt.push(Vec::new());
                report.final_status = RepairStatus::Ok;
                return Ok((value, report));
            }
            Err(violations) => {
                message = repair_message(&violations);
                report.violations_per_attempt.push(violations);
            }
        }
    }
    Err(RepairError::Exhausted { report })
}
