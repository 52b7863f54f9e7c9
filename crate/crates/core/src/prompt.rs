//! Prompt templates with `{{name}}` placeholders.
//!
//! The template files under `templates/` are the literal prompts sent to the
//! agents; nothing outside the placeholders is ever rewritten.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DESCRIPTION_TEMPLATE: &str = include_str!("../templates/description.txt");
pub const ANALYST_TEMPLATE: &str = include_str!("../templates/analyst.txt");
pub const DESIGNER_TEMPLATE: &str = include_str!("../templates/designer.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateId {
    Description,
    Analyst,
    Designer,
}

impl TemplateId {
    pub fn source(self) -> &'static str {
        match self {
            TemplateId::Description => DESCRIPTION_TEMPLATE,
            TemplateId::Analyst => ANALYST_TEMPLATE,
            TemplateId::Designer => DESIGNER_TEMPLATE,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TemplateId::Description => "description",
            TemplateId::Analyst => "analyst",
            TemplateId::Designer => "designer",
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("placeholder `{{{{{0}}}}}` has no binding")]
    MissingBinding(String),
    #[error("binding `{0}` does not match any placeholder")]
    UnusedBinding(String),
    #[error("unterminated placeholder at byte {0}")]
    Unterminated(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Literal(String),
    Slot { name: String, value: String },
}

/// A fully substituted prompt. Remembers where each value was spliced in so
/// the original template can be recovered with [`PromptText::reblank`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptText {
    template_id: TemplateId,
    pieces: Vec<Piece>,
}

impl PromptText {
    pub fn template_id(&self) -> TemplateId {
        self.template_id
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for piece in &self.pieces {
            match piece {
                Piece::Literal(s) => out.push_str(s),
                Piece::Slot { value, .. } => out.push_str(value),
            }
        }
        out
    }

    /// The prompt with every substituted value replaced by its placeholder.
    pub fn reblank(&self) -> String {
        let mut out = String::new();
        for piece in &self.pieces {
            match piece {
                Piece::Literal(s) => out.push_str(s),
                Piece::Slot { name, .. } => {
                    out.push_str("{{");
                    out.push_str(name);
                    out.push_str("}}");
                }
            }
        }
        out
    }
}

impl fmt::Display for PromptText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

/// Placeholder names in order of appearance.
pub fn placeholders(template: &str) -> Result<Vec<String>, TemplateError> {
    Ok(split(template)?
        .into_iter()
        .filter_map(|p| match p {
            Piece::Slot { name, .. } => Some(name),
            Piece::Literal(_) => None,
        })
        .collect())
}

fn split(template: &str) -> Result<Vec<Piece>, TemplateError> {
    let mut pieces = Vec::new();
    let mut rest = template;
    let mut offset = 0;
    while let Some(open) = rest.find("{{") {
        let close = rest[open..]
            .find("}}")
            .ok_or(TemplateError::Unterminated(offset + open))?;
        if open > 0 {
            pieces.push(Piece::Literal(rest[..open].to_string()));
        }
        pieces.push(Piece::Slot {
            name: rest[open + 2..open + close].trim().to_string(),
            value: String::new(),
        });
        offset += open + close + 2;
        rest = &rest[open + close + 2..];
    }
    if !rest.is_empty() {
        pieces.push(Piece::Literal(rest.to_string()));
    }
    Ok(pieces)
}

/// Substitutes every placeholder of `id`'s template. Every placeholder must
/// be bound and every binding used.
pub fn render(id: TemplateId, bindings: &[(&str, &str)]) -> Result<PromptText, TemplateError> {
    let mut pieces = split(id.source())?;
    let mut used = vec![false; bindings.len()];
    for piece in &mut pieces {
        if let Piece::Slot { name, value } = piece {
            let (pos, (_, bound)) = bindings
                .iter()
                .enumerate()
                .find(|(_, (k, _))| k == name)
                .ok_or_else(|| TemplateError::MissingBinding(name.clone()))?;
            used[pos] = true;
            *value = (*bound).to_string();
        }
    }
    if let Some(pos) = used.iter().position(|u| !u) {
        return Err(TemplateError::UnusedBinding(bindings[pos].0.to_string()));
    }
    Ok(PromptText {
        template_id: id,
        pieces,
    })
}
