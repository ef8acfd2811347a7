use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;
use serde_json::Value;

use super::LlmError;
use crate::actions::{format_action, parse_action, GroundAction};

#[derive(Debug, Clone, PartialEq)]
pub struct LlmResponse {
    pub raw: String,
    pub reasoning: String,
    pub plan: Vec<GroundAction>,
}

fn first_json_object(raw: &str) -> Option<serde_json::Map<String, Value>> {
    let mut from = 0;
    while let Some(off) = raw[from..].find('{') {
        let start = from + off;
        let mut stream = serde_json::Deserializer::from_str(&raw[start..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            return Some(map);
        }
        from = start + 1;
    }
    None
}

/// Reads the first JSON object in `raw`, ignoring surrounding prose and
/// code fences.
pub fn parse_response(raw: &str) -> Result<LlmResponse, LlmError> {
    let map = first_json_object(raw)
        .ok_or_else(|| LlmError::MalformedResponse("no JSON object found".into()))?;
    let reasoning = match map.get("Reasoning") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(LlmError::MalformedResponse("\"Reasoning\" must be a string".into())),
        None => return Err(LlmError::MalformedResponse("missing key \"Reasoning\"".into())),
    };
    let items = match map.get("Full Plan") {
        Some(Value::Array(items)) => items,
        Some(_) => return Err(LlmError::MalformedResponse("\"Full Plan\" must be an array".into())),
        None => return Err(LlmError::MalformedResponse("missing key \"Full Plan\"".into())),
    };
    if items.is_empty() {
        return Err(LlmError::MalformedResponse("\"Full Plan\" is empty".into()));
    }
    let mut plan = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let Value::String(text) = item else {
            return Err(LlmError::MalformedResponse(format!(
                "plan step {} is not a string",
                i + 1
            )));
        };
        let action = parse_action(text)
            .map_err(|e| LlmError::MalformedResponse(format!("plan step {} {text:?}: {e}", i + 1)))?;
        plan.push(action);
    }
    Ok(LlmResponse {
        raw: raw.to_string(),
        reasoning,
        plan,
    })
}

#[derive(Serialize)]
struct Wire<'a> {
    #[serde(rename = "Reasoning")]
    reasoning: &'a str,
    #[serde(rename = "Full Plan")]
    plan: Vec<String>,
}

/// JSON document in the response contract, actions in canonical form.
pub fn render_response(reasoning: &str, plan: &[GroundAction]) -> String {
    let wire = Wire {
        reasoning,
        plan: plan.iter().map(format_action).collect(),
    };
    serde_json::to_string_pretty(&wire).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "Reasoning": "The last plan failed because ...",
        "Full Plan": ["pick(['red_box'], {})", "place(['red_box'], {'x': 0.51, 'y': 0.02, 'theta': 0.00})"]
    }"#;

    #[test]
    fn parses_documented_example() {
        let r = parse_response(EXAMPLE).unwrap();
        assert_eq!(r.reasoning, "The last plan failed because ...");
        assert_eq!(
            r.plan,
            [
                GroundAction::pick("red_box"),
                GroundAction::place("red_box", 0.51, 0.02, 0.0)
            ]
        );
    }

    #[test]
    fn tolerates_fences_and_prose() {
        let raw = alloc::format!("Sure! Here is the plan {{not json}}:\n```json\n{EXAMPLE}\n```\nGood luck.");
        assert_eq!(parse_response(&raw).unwrap().plan.len(), 2);
    }

    #[test]
    fn rejects_empty_plan_and_missing_keys() {
        for raw in [
            r#"{"Reasoning": "", "Full Plan": []}"#,
            r#"{"Full Plan": ["pick(['a'], {})"]}"#,
            r#"{"Reasoning": "x"}"#,
            r#"{"Reasoning": "x", "Full Plan": ["fly(['a'], {})"]}"#,
            r#"{"Reasoning": "x", "Full Plan": [3]}"#,
            "no braces at all",
        ] {
            assert!(matches!(parse_response(raw), Err(LlmError::MalformedResponse(_))), "{raw}");
        }
    }

    #[test]
    fn render_round_trips() {
        let plan = [
            GroundAction::pick("a"),
            GroundAction::place("a", 0.5, -0.25, 1.5),
        ];
        let text = render_response("because", &plan);
        let back = parse_response(&text).unwrap();
        assert_eq!(back.plan, plan);
        assert_eq!(back.reasoning, "because");
        assert!(text.find("Reasoning").unwrap() < text.find("Full Plan").unwrap());
    }
}
