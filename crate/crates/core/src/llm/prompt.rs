use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Strategy;
use crate::actions::{ActionRegistry, ActionSchema, GroundAction, format_action};
use crate::bench::ScenarioSpec;
use crate::planner::FeedbackTrace;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_message: String,
    pub user_message: String,
}

impl PromptBundle {
    /// Hex SHA-256 of both messages, for logs.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.system_message.as_bytes());
        h.update([0u8]);
        h.update(self.user_message.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

const SYSTEM_PREFIX: &str = "You control a robot arm and write action plans that achieve a goal. \
Each request gives you the task, the initial state and the feedback the motion planner produced for \
your earlier plans.";

pub const BACKTRACK_SYSTEM: &str = "Starting from your last plan, correct the plan incrementally so that every \
action has a feasible motion. You may choose new parameters for the action that failed, or undo actions that \
already succeeded before it.";

pub const SCRATCH_SYSTEM: &str = "Discard your last plan and generate a plan from scratch.";

const TASK_INTRO: &str = "Pack boxes from the table into a basket with a single robot arm. The robot base is at \
(0, 0) facing the positive x-axis; the positive z-axis points up.";

const ACTIONS_INTRO: &str = "Available actions take a list of objects and a dictionary of continuous parameters:";

const OUTPUT_INTRO: &str = "Think step by step. Explain why the last plan failed, then give the new plan. \
Address these questions:";

pub const BACKTRACK_QUESTIONS: &str = "(i) Why did the last plan fail? \
(ii) Would different parameters for the failed action fix it? \
(iii) Must any successful actions before the failed one be undone?";

pub const SCRATCH_QUESTIONS: &str = "(i) Why did the last plan fail? \
(ii) How will the new plan, written from scratch, reach the goal?";

const JSON_INTRO: &str = "Reply with a single JSON object of this form:";

const JSON_EXAMPLE: &str = "{\n  \"Reasoning\": \"The last plan failed because ...\",\n  \
\"Full Plan\": [\"pick(['red_box'], {})\", \"place(['red_box'], {'x': 0.51, 'y': 0.02, 'theta': 0.00})\", ...]\n}";

fn range_num(v: f64) -> String {
    if v == libm::trunc(v) {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

fn describe_schema(schema: &ActionSchema) -> String {
    match schema.name.as_str() {
        "pick" => "- pick([obj], {}): grasp obj; takes no parameters.".into(),
        _ => {
            let ranges: Vec<String> = schema
                .params
                .iter()
                .map(|(n, r)| format!("\"{n}\": [{}, {}]", range_num(r.lo), range_num(r.hi)))
                .collect();
            let prose: Vec<String> = schema
                .params
                .iter()
                .map(|(n, r)| format!("{n} ranges ({}, {})", range_num(r.lo), range_num(r.hi)))
                .collect();
            let head = format!("- {}([obj], {{{}}})", schema.name, ranges.join(", "));
            if schema.name == "place" {
                let (last, rest) = prose.split_last().unwrap_or((&prose[0], &[]));
                format!(
                    "{head}: set obj down centred at (x, y) with heading theta, where {}, and {}.",
                    rest.join(", "),
                    last
                )
            } else {
                format!("{head}: {}.", prose.join(", "))
            }
        }
    }
}

fn task_description(scenario: &ScenarioSpec) -> String {
    let mut out = String::from(TASK_INTRO);
    out.push_str(&format!(
        " The goal is to place every one of the following objects fully inside the basket: {}.\n",
        scenario.goal.target_objects.join(", ")
    ));
    out.push_str(ACTIONS_INTRO);
    for schema in ActionRegistry::default().schemas() {
        out.push('\n');
        out.push_str(&describe_schema(schema));
    }
    out
}

/// One line per (action, feedback) pair, grouped by attempt, oldest first.
pub fn render_trace(trace: &FeedbackTrace) -> String {
    let mut out = String::new();
    for (i, rec) in trace.records().enumerate() {
        out.push_str(&format!("Attempt {}:\n", i + 1));
        for line in rec.lines() {
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

/// Zero-shot prompt: system message, then task description, initial state,
/// feedback trace and output format, in that order.
pub fn build_prompt(strategy: Strategy, scenario: &ScenarioSpec, s0_text: &str, trace: &FeedbackTrace) -> PromptBundle {
    let (system_extra, questions) = match strategy {
        Strategy::Backtrack => (BACKTRACK_SYSTEM, BACKTRACK_QUESTIONS),
        Strategy::FromScratch => (SCRATCH_SYSTEM, SCRATCH_QUESTIONS),
    };
    let user_message = format!(
        "Task description: {}\n\nInitial state:\n{}\nMotion planning feedback trace:\n{}\nOutput format: {} {}\n{}\n{}",
        task_description(scenario),
        s0_text,
        render_trace(trace),
        OUTPUT_INTRO,
        questions,
        JSON_INTRO,
        JSON_EXAMPLE,
    );
    PromptBundle {
        system_message: format!("{SYSTEM_PREFIX} {system_extra}"),
        user_message,
    }
}

/// Prompt for choosing only the continuous parameters of a fixed action
/// sequence. `feedback` carries the previous attempt's outcome when enabled.
pub fn build_param_prompt(
    scenario: &ScenarioSpec,
    s0_text: &str,
    skeleton: &[GroundAction],
    feedback: Option<&[String]>,
) -> PromptBundle {
    let steps: Vec<String> = skeleton
        .iter()
        .map(|a| match a.kind() {
            Some(crate::actions::ActionKind::Place) => {
                format!("place(['{}'], {{'x': ?, 'y': ?, 'theta': ?}})", a.objects[0])
            }
            _ => format_action(a),
        })
        .collect();
    let mut user_message = format!(
        "Task description: {}\n\nInitial state:\n{}\nThe action sequence is fixed:\n{}\n\
Select the parameters of every place action so that the whole sequence is feasible.\n",
        task_description(scenario),
        s0_text,
        steps.join("\n"),
    );
    if let Some(lines) = feedback {
        user_message.push_str("Motion planning feedback from the previous attempt:\n");
        for l in lines {
            user_message.push_str(l);
            user_message.push('\n');
        }
    }
    user_message.push_str(&format!(
        "Output format: Return the complete sequence with parameters filled in. {JSON_INTRO}\n{JSON_EXAMPLE}"
    ));
    PromptBundle {
        system_message: format!("{SYSTEM_PREFIX} You select continuous action parameters for a fixed plan."),
        user_message,
    }
}
