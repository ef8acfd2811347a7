//! The plan language spoken between the language model and the planner.
//!
//! Surface grammar (whitespace allowed between all tokens, quotes may be
//! single or double):
//!
//! ```text
//! action  = ident "(" objects [ "," params ] ")"
//! objects = "[" [ string { "," string } [ "," ] ] "]"
//! params  = "{" [ pair { "," pair } [ "," ] ] "}"
//! pair    = string ":" number
//! ident   = letter { letter | digit | "_" }
//! number  = [ "+" | "-" ] digits [ "." digits ] [ ( "e" | "E" ) [ "+" | "-" ] digits ]
//! ```
//!
//! A successfully parsed action has already been checked against its schema:
//! arity, parameter names and parameter ranges.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmt::fixed2;
use crate::geometry::Pose2;
use crate::world::WorldState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("syntax error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unknown action '{0}'")]
    Schema(String),
    #[error("{0}")]
    Validation(String),
    #[error("unknown object '{0}'")]
    UnknownObject(String),
}

/// Closed real interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
}

impl ParamRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    pub object_arity: usize,
    pub params: Vec<(String, ParamRange)>,
}

impl ActionSchema {
    pub fn range(&self, param: &str) -> Option<ParamRange> {
        self.params.iter().find(|(n, _)| n == param).map(|(_, r)| *r)
    }
}

pub const X_RANGE: ParamRange = ParamRange::new(0.0, 1.0);
pub const Y_RANGE: ParamRange = ParamRange::new(-1.0, 1.0);
/// Two-decimal bound, deliberately not ±π.
#[allow(clippy::approx_constant)]
pub const THETA_RANGE: ParamRange = ParamRange::new(-3.14, 3.14);

pub fn pick_schema() -> ActionSchema {
    ActionSchema {
        name: "pick".into(),
        object_arity: 1,
        params: Vec::new(),
    }
}

pub fn place_schema() -> ActionSchema {
    ActionSchema {
        name: "place".into(),
        object_arity: 1,
        params: alloc::vec![
            ("x".into(), X_RANGE),
            ("y".into(), Y_RANGE),
            ("theta".into(), THETA_RANGE),
        ],
    }
}

/// Registry of known schemas. Ships with `pick` and `place`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionRegistry {
    schemas: Vec<ActionSchema>,
}

impl Default for ActionRegistry {
    fn default() -> Self {
        Self {
            schemas: alloc::vec![pick_schema(), place_schema()],
        }
    }
}

impl ActionRegistry {
    pub fn with_schemas(schemas: Vec<ActionSchema>) -> Self {
        Self { schemas }
    }

    pub fn get(&self, name: &str) -> Option<&ActionSchema> {
        self.schemas.iter().find(|s| s.name == name)
    }

    pub fn schemas(&self) -> &[ActionSchema] {
        &self.schemas
    }

    /// Checks arity and parameters, returning the action with its
    /// parameters reordered to schema order.
    pub fn validate(
        &self,
        name: &str,
        objects: Vec<String>,
        params: Vec<(String, f64)>,
    ) -> Result<GroundAction, ActionError> {
        let schema = self
            .get(name)
            .ok_or_else(|| ActionError::Schema(name.to_string()))?;
        if objects.len() != schema.object_arity {
            return Err(ActionError::Validation(format!(
                "{name} expects {} object(s), got {}",
                schema.object_arity,
                objects.len()
            )));
        }
        if let Some(o) = objects
            .iter()
            .find(|o| o.is_empty() || o.contains(['\'', '"']) || o.chars().any(char::is_control))
        {
            return Err(ActionError::Validation(format!("invalid object name {o:?}")));
        }
        for (i, (k, _)) in params.iter().enumerate() {
            if params[..i].iter().any(|(p, _)| p == k) {
                return Err(ActionError::Validation(format!("duplicate parameter '{k}'")));
            }
            if schema.range(k).is_none() {
                return Err(ActionError::Validation(format!(
                    "{name} has no parameter '{k}'"
                )));
            }
        }
        let mut ordered = Vec::with_capacity(schema.params.len());
        for (p, range) in &schema.params {
            let v = params
                .iter()
                .find(|(k, _)| k == p)
                .map(|(_, v)| *v)
                .ok_or_else(|| ActionError::Validation(format!("{name} is missing parameter '{p}'")))?;
            if !v.is_finite() || !range.contains(v) {
                return Err(ActionError::Validation(format!(
                    "parameter '{p}' = {v} is outside [{}, {}]",
                    fixed2(range.lo),
                    fixed2(range.hi)
                )));
            }
            ordered.push((p.clone(), v));
        }
        Ok(GroundAction {
            name: name.to_string(),
            objects,
            params: ordered,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    Pick,
    Place,
}

/// A schema instantiated with objects and parameter values (schema order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundAction {
    pub name: String,
    pub objects: Vec<String>,
    pub params: Vec<(String, f64)>,
}

impl GroundAction {
    pub fn pick(object: &str) -> Self {
        Self {
            name: "pick".into(),
            objects: alloc::vec![object.into()],
            params: Vec::new(),
        }
    }

    pub fn place(object: &str, x: f64, y: f64, theta: f64) -> Self {
        Self {
            name: "place".into(),
            objects: alloc::vec![object.into()],
            params: alloc::vec![("x".into(), x), ("y".into(), y), ("theta".into(), theta)],
        }
    }

    pub fn kind(&self) -> Option<ActionKind> {
        match self.name.as_str() {
            "pick" => Some(ActionKind::Pick),
            "place" => Some(ActionKind::Place),
            _ => None,
        }
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn place_pose(&self) -> Option<Pose2> {
        Some(Pose2::new(self.param("x")?, self.param("y")?, self.param("theta")?))
    }
}

impl core::fmt::Display for GroundAction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&format_action(self))
    }
}

/// Canonical rendering: single quotes, two-decimal values in schema order.
pub fn format_action(a: &GroundAction) -> String {
    let objects: Vec<String> = a.objects.iter().map(|o| format!("'{o}'")).collect();
    let params: Vec<String> = a
        .params
        .iter()
        .map(|(k, v)| format!("'{k}': {}", fixed2(*v)))
        .collect();
    format!("{}([{}], {{{}}})", a.name, objects.join(", "), params.join(", "))
}

pub fn parse_action(text: &str) -> Result<GroundAction, ActionError> {
    parse_action_with(&ActionRegistry::default(), text)
}

pub fn parse_action_with(registry: &ActionRegistry, text: &str) -> Result<GroundAction, ActionError> {
    let mut c = Cursor::new(text);
    c.ws();
    let name = c.ident()?;
    c.ws();
    c.expect('(')?;
    c.ws();
    let objects = c.string_list()?;
    c.ws();
    let mut params = Vec::new();
    if c.eat(',') {
        c.ws();
        params = c.param_map()?;
        c.ws();
    }
    c.expect(')')?;
    c.ws();
    if !c.at_end() {
        return Err(c.error("trailing characters after action"));
    }
    registry.validate(name, objects, params)
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let ch = self.peek()?;
        self.pos += ch.len_utf8();
        Some(ch)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn error(&self, message: &str) -> ActionError {
        ActionError::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn ws(&mut self) {
        while matches!(self.peek(), Some(ch) if ch.is_whitespace()) {
            self.bump();
        }
    }

    fn eat(&mut self, ch: char) -> bool {
        if self.peek() == Some(ch) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, ch: char) -> Result<(), ActionError> {
        if self.eat(ch) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{ch}'")))
        }
    }

    fn ident(&mut self) -> Result<&'a str, ActionError> {
        let start = self.pos;
        match self.peek() {
            Some(ch) if ch.is_ascii_alphabetic() || ch == '_' => {}
            _ => return Err(self.error("expected action name")),
        }
        while matches!(self.peek(), Some(ch) if ch.is_ascii_alphanumeric() || ch == '_') {
            self.bump();
        }
        Ok(&self.src[start..self.pos])
    }

    fn string(&mut self) -> Result<String, ActionError> {
        let quote = match self.peek() {
            Some(q @ ('\'' | '"')) => q,
            _ => return Err(self.error("expected quoted string")),
        };
        self.bump();
        let start = self.pos;
        loop {
            match self.bump() {
                Some(ch) if ch == quote => break,
                Some('\n') | None => {
                    return Err(ActionError::Parse {
                        offset: start,
                        message: "unterminated string".into(),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(self.src[start..self.pos - 1].to_string())
    }

    fn string_list(&mut self) -> Result<Vec<String>, ActionError> {
        self.expect('[')?;
        let mut out = Vec::new();
        loop {
            self.ws();
            if self.eat(']') {
                return Ok(out);
            }
            out.push(self.string()?);
            self.ws();
            if !self.eat(',') {
                self.ws();
                self.expect(']')?;
                return Ok(out);
            }
        }
    }

    fn number(&mut self) -> Result<f64, ActionError> {
        let start = self.pos;
        if matches!(self.peek(), Some('+' | '-')) {
            self.bump();
        }
        let digits = |c: &mut Self| {
            let s = c.pos;
            while matches!(c.peek(), Some(ch) if ch.is_ascii_digit()) {
                c.bump();
            }
            c.pos > s
        };
        let int = digits(self);
        let mut frac = false;
        if self.eat('.') {
            frac = digits(self);
        }
        if !int && !frac {
            return Err(ActionError::Parse {
                offset: start,
                message: "expected number".into(),
            });
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            self.bump();
            if matches!(self.peek(), Some('+' | '-')) {
                self.bump();
            }
            if !digits(self) {
                return Err(self.error("malformed exponent"));
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map_err(|_| ActionError::Parse {
                offset: start,
                message: "malformed number".into(),
            })
    }

    fn param_map(&mut self) -> Result<Vec<(String, f64)>, ActionError> {
        self.expect('{')?;
        let mut out = Vec::new();
        loop {
            self.ws();
            if self.eat('}') {
                return Ok(out);
            }
            let key = self.string()?;
            self.ws();
            self.expect(':')?;
            self.ws();
            let v = self.number()?;
            out.push((key, v));
            self.ws();
            if !self.eat(',') {
                self.ws();
                self.expect('}')?;
                return Ok(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Applicability {
    Applicable,
    Inapplicable(String),
}

/// Symbolic preconditions: `pick` needs an empty gripper and a resting
/// object, `place` needs the named object in hand.
pub fn applicable(s: &WorldState, a: &GroundAction) -> Result<Applicability, ActionError> {
    let Some(name) = a.objects.first() else {
        return Ok(Applicability::Inapplicable("no object given".into()));
    };
    let obj = s
        .objects
        .get(name)
        .ok_or_else(|| ActionError::UnknownObject(name.clone()))?;
    Ok(match a.kind() {
        Some(ActionKind::Pick) if s.holding.is_some() => Applicability::Inapplicable("gripper occupied".into()),
        Some(ActionKind::Pick) if obj.held => Applicability::Inapplicable(format!("{name} is already held")),
        Some(ActionKind::Pick) => Applicability::Applicable,
        Some(ActionKind::Place) if s.holding.as_deref() == Some(name.as_str()) => Applicability::Applicable,
        Some(ActionKind::Place) => Applicability::Inapplicable(format!("{name} is not held")),
        None => Applicability::Inapplicable(format!("no rule for action '{}'", a.name)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoxShape, OrientedBox2};
    use crate::world::{Basket, ObjectState, Reach};
    use alloc::vec;

    #[test]
    fn parses_pick_literal() {
        let a = parse_action("pick(['red_box'], {})").unwrap();
        assert_eq!(a, GroundAction::pick("red_box"));
    }

    #[test]
    fn parses_place_literal() {
        let a = parse_action("place(['red_box'], {'x': 0.51, 'y': 0.02, 'theta': 0.00})").unwrap();
        assert_eq!(a, GroundAction::place("red_box", 0.51, 0.02, 0.0));
    }

    #[test]
    fn tolerant_of_whitespace_quotes_and_order() {
        let a = parse_action("  place( [ \"red_box\" ] ,{ \"theta\":0, 'y' : -0.5,'x':1 , } ) ").unwrap();
        assert_eq!(a, GroundAction::place("red_box", 1.0, -0.5, 0.0));
        assert_eq!(parse_action("pick(['a'])").unwrap(), GroundAction::pick("a"));
    }

    #[test]
    fn out_of_range_is_validation_error() {
        let err = parse_action("place(['red_box'], {'x': 1.5, 'y': 0, 'theta': 0})").unwrap_err();
        assert!(matches!(err, ActionError::Validation(_)), "{err:?}");
        // theta bound is the literal 3.14, not π
        assert!(parse_action("place(['a'], {'x': 0.5, 'y': 0, 'theta': 3.1416})").is_err());
        assert!(parse_action("place(['a'], {'x': 0.5, 'y': 0, 'theta': -3.14})").is_ok());
    }

    #[test]
    fn schema_and_arity_errors() {
        assert_eq!(
            parse_action("push(['a'], {})").unwrap_err(),
            ActionError::Schema("push".into())
        );
        assert!(matches!(
            parse_action("pick(['a', 'b'], {})").unwrap_err(),
            ActionError::Validation(_)
        ));
        assert!(matches!(
            parse_action("place(['a'], {'x': 0.5, 'y': 0})").unwrap_err(),
            ActionError::Validation(_)
        ));
        assert!(matches!(
            parse_action("place(['a'], {'x': 0.5, 'y': 0, 'theta': 0, 'z': 1})").unwrap_err(),
            ActionError::Validation(_)
        ));
        assert!(matches!(
            parse_action("place(['a'], {'x': 0.5, 'x': 0.5, 'y': 0, 'theta': 0})").unwrap_err(),
            ActionError::Validation(_)
        ));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        for bad in ["", "pick", "pick(['a'", "pick([a], {})", "pick(['a'], {'x': })", "pick(['a'], {}) extra", "place(['a'], {'x': nan})"] {
            assert!(matches!(parse_action(bad), Err(ActionError::Parse { .. })), "{bad}");
        }
        match parse_action("pick(['a'] {})") {
            Err(ActionError::Parse { offset, .. }) => assert_eq!(offset, 11),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn canonical_format() {
        assert_eq!(format_action(&GroundAction::pick("red_box")), "pick(['red_box'], {})");
        assert_eq!(
            format_action(&GroundAction::place("red_box", 0.5149, 0.02, 0.0)),
            "place(['red_box'], {'x': 0.51, 'y': 0.02, 'theta': 0.00})"
        );
    }

    fn state(holding: Option<&str>) -> WorldState {
        let shape = BoxShape::new(0.1, 0.1, 0.1).unwrap();
        let objs = vec![
            ObjectState {
                name: "a".into(),
                shape,
                pose: Pose2::new(0.3, 0.4, 0.0),
                held: holding == Some("a"),
            },
            ObjectState {
                name: "b".into(),
                shape,
                pose: Pose2::new(0.3, -0.4, 0.0),
                held: false,
            },
        ];
        let basket = Basket {
            interior: OrientedBox2::new(Pose2::new(0.5, 0.0, 0.0), 0.2, 0.2).unwrap(),
            wall_thickness: 0.02,
        };
        WorldState::new(objs, basket, Reach::default()).unwrap()
    }

    #[test]
    fn preconditions() {
        assert_eq!(applicable(&state(None), &GroundAction::pick("a")).unwrap(), Applicability::Applicable);
        assert_eq!(
            applicable(&state(Some("a")), &GroundAction::pick("b")).unwrap(),
            Applicability::Inapplicable("gripper occupied".into())
        );
        assert!(matches!(
            applicable(&state(None), &GroundAction::place("a", 0.5, 0.0, 0.0)).unwrap(),
            Applicability::Inapplicable(_)
        ));
        assert_eq!(
            applicable(&state(Some("a")), &GroundAction::place("a", 0.5, 0.0, 0.0)).unwrap(),
            Applicability::Applicable
        );
        assert_eq!(
            applicable(&state(None), &GroundAction::pick("zzz")).unwrap_err(),
            ActionError::UnknownObject("zzz".into())
        );
    }
}
