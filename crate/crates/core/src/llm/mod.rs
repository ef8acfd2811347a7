//! Language-model side of the loop: prompts, the JSON response contract,
//! budgets, and in-process backends.

mod backends;
mod prompt;
mod response;

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backends::{sample_params_random, HeuristicBackend, RandomBackend};
pub use prompt::{
    build_param_prompt, build_prompt, render_trace, PromptBundle, BACKTRACK_QUESTIONS, BACKTRACK_SYSTEM,
    SCRATCH_QUESTIONS, SCRATCH_SYSTEM,
};
pub use response::{parse_response, render_response, LlmResponse};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("query budget exhausted")]
    BudgetExhausted,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

/// Prompt variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Repair the previous plan incrementally.
    Backtrack,
    /// Regenerate the whole plan every iteration.
    FromScratch,
}

/// Anything that turns a prompt into completion text.
///
/// Implementations retry transport-level failures internally; an `Ok` is a
/// delivered completion.
pub trait LlmBackend {
    fn complete(&mut self, prompt: &PromptBundle) -> Result<String, LlmError>;
}

impl<B: LlmBackend + ?Sized> LlmBackend for alloc::boxed::Box<B> {
    fn complete(&mut self, prompt: &PromptBundle) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

/// Caps the number of delivered completions and counts them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryBudget {
    pub remaining: u32,
    pub delivered: u32,
}

impl QueryBudget {
    pub fn new(limit: u32) -> Self {
        Self {
            remaining: limit,
            delivered: 0,
        }
    }
}

/// One physical query. Only a delivered completion is charged to the budget.
pub fn query<B: LlmBackend + ?Sized>(
    backend: &mut B,
    prompt: &PromptBundle,
    budget: &mut QueryBudget,
) -> Result<String, LlmError> {
    if budget.remaining == 0 {
        return Err(LlmError::BudgetExhausted);
    }
    let text = backend.complete(prompt)?;
    budget.remaining -= 1;
    budget.delivered += 1;
    Ok(text)
}

/// Replays canned completions in order and fails once they run out.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    responses: VecDeque<String>,
    served: usize,
}

impl ScriptedBackend {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            responses: responses.into_iter().map(Into::into).collect(),
            served: 0,
        }
    }

    pub fn served(&self) -> usize {
        self.served
    }

    pub fn remaining(&self) -> Vec<String> {
        self.responses.iter().cloned().collect()
    }
}

impl LlmBackend for ScriptedBackend {
    fn complete(&mut self, _prompt: &PromptBundle) -> Result<String, LlmError> {
        let next = self.responses.pop_front().ok_or_else(|| {
            LlmError::Backend(alloc::format!("replay exhausted after {} responses", self.served))
        })?;
        self.served += 1;
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prompt() -> PromptBundle {
        PromptBundle {
            system_message: "s".into(),
            user_message: "u".into(),
        }
    }

    #[test]
    fn scripted_replays_then_fails() {
        let mut b = ScriptedBackend::new(["only"]);
        let mut budget = QueryBudget::new(5);
        assert_eq!(query(&mut b, &prompt(), &mut budget).unwrap(), "only");
        assert!(matches!(query(&mut b, &prompt(), &mut budget), Err(LlmError::Backend(_))));
        assert_eq!(budget.delivered, 1);
        assert_eq!(budget.remaining, 4);
    }

    #[test]
    fn zero_budget_is_exhausted() {
        let mut b = ScriptedBackend::new(["x"]);
        let mut budget = QueryBudget::new(0);
        assert_eq!(query(&mut b, &prompt(), &mut budget), Err(LlmError::BudgetExhausted));
        assert_eq!(b.served(), 0);
    }
}
