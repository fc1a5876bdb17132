//! Sociolinguistic language cards.
//!
//! A card describes a linguistic entity along eight sociolinguistic criteria
//! and records variation-related risks for five NLP domains. Cards are YAML
//! (or JSON) documents:
//!
//! ```yaml
//! entity_name: Luxembourgish
//! version: "1.0"
//! criteria:
//!   sociolinguistic_setting:
//!     text: ...
//!     sources: [...]      # optional
//!   ...
//! nlp_domain_notes:
//!   data: ...
//!   ...
//! notes: ...              # optional
//! ```
//!
//! Criteria may also be given as a plain string. Validation checks presence
//! and shape only; the content is free prose.

use std::fmt::{self, Write as _};

use serde::Serialize;
use serde_yaml::{Mapping, Value};
use thiserror::Error;

pub const CRITERIA: [&str; 8] = [
    "sociolinguistic_setting",
    "institutional_support",
    "structural_independence",
    "degree_of_codification",
    "domain_specificity",
    "school_education",
    "communicative_range",
    "attitudes_and_ideologies",
];

pub const NLP_DOMAINS: [&str; 5] = ["data", "preprocessing", "modelling", "evaluation", "usage"];

const TOP_LEVEL: [&str; 5] = ["entity_name", "version", "criteria", "nlp_domain_notes", "notes"];

pub const PLACEHOLDER_PREFIX: &str = "<fill in:";
pub const NOT_ASSESSED: &str = "not assessed";

/// The Luxembourgish example card shipped with the crate.
pub const LUXEMBOURGISH_CARD: &str = include_str!("../fixtures/luxembourgish_card.yaml");

#[derive(Debug, Error)]
pub enum CardError {
    #[error("card does not parse: {0}")]
    Parse(String),
    #[error("entity name must not be empty")]
    EmptyName,
    #[error("card is invalid ({} violations): {}", .0.len(), .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub key: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.rule)
    }
}

fn violation(key: impl Into<String>, rule: impl Into<String>) -> Violation {
    Violation {
        key: key.into(),
        rule: rule.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriterionEntry {
    pub text: String,
    pub sources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageCard {
    pub entity_name: String,
    pub version: String,
    /// In canonical criteria order.
    pub criteria: Vec<(String, CriterionEntry)>,
    /// In canonical domain order.
    pub nlp_domain_notes: Vec<(String, String)>,
    pub notes: Option<String>,
}

pub fn parse_document(text: &str) -> Result<Value, CardError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let json: serde_json::Value = serde_json::from_str(text).map_err(|e| CardError::Parse(e.to_string()))?;
        serde_yaml::to_value(json).map_err(|e| CardError::Parse(e.to_string()))
    } else {
        serde_yaml::from_str(text).map_err(|e| CardError::Parse(e.to_string()))
    }
}

fn is_placeholder(s: &str) -> bool {
    s.trim_start().starts_with(PLACEHOLDER_PREFIX)
}

fn get<'a>(map: &'a Mapping, key: &str) -> Option<&'a Value> {
    map.get(Value::String(key.to_string()))
}

fn check_unknown_keys(map: &Mapping, allowed: &[&str], prefix: &str, out: &mut Vec<Violation>) {
    for k in map.keys() {
        match k.as_str() {
            Some(name) if allowed.contains(&name) => {}
            Some(name) => out.push(violation(format!("{prefix}{name}"), "unknown key")),
            None => out.push(violation(format!("{prefix}{k:?}"), "non-string key")),
        }
    }
}

fn check_text(value: &str, key: &str, empty_rule: &str, out: &mut Vec<Violation>) {
    if value.trim().is_empty() {
        out.push(violation(key, empty_rule));
    } else if is_placeholder(value) {
        out.push(violation(key, "placeholder"));
    }
}

/// All schema violations of a parsed document; empty iff the card is valid.
pub fn validate_value(doc: &Value) -> Vec<Violation> {
    let mut out = Vec::new();
    let Some(root) = doc.as_mapping() else {
        out.push(violation("<root>", "expected a mapping"));
        return out;
    };
    check_unknown_keys(root, &TOP_LEVEL, "", &mut out);

    for key in ["entity_name", "version"] {
        match get(root, key) {
            None => out.push(violation(key, "missing key")),
            Some(Value::String(s)) => check_text(s, key, "empty value", &mut out),
            Some(_) => out.push(violation(key, "expected a string")),
        }
    }

    match get(root, "criteria") {
        None => out.push(violation("criteria", "missing key")),
        Some(Value::Mapping(criteria)) => {
            check_unknown_keys(criteria, &CRITERIA, "criteria.", &mut out);
            for name in CRITERIA {
                let key = format!("criteria.{name}");
                match get(criteria, name) {
                    None => out.push(violation(key, "missing criterion")),
                    Some(Value::String(s)) => check_text(s, &key, "empty criterion", &mut out),
                    Some(Value::Mapping(m)) => {
                        check_unknown_keys(m, &["text", "sources"], &format!("{key}."), &mut out);
                        match get(m, "text") {
                            Some(Value::String(s)) => check_text(s, &key, "empty criterion", &mut out),
                            Some(Value::Null) | None => out.push(violation(key.clone(), "empty criterion")),
                            Some(_) => out.push(violation(format!("{key}.text"), "expected a string")),
                        }
                        match get(m, "sources") {
                            None | Some(Value::Null) => {}
                            Some(Value::Sequence(items)) if items.iter().all(|i| i.as_str().is_some_and(|s| !s.trim().is_empty())) => {}
                            Some(_) => out.push(violation(format!("{key}.sources"), "expected a list of non-empty strings")),
                        }
                    }
                    Some(Value::Null) => out.push(violation(key, "empty criterion")),
                    Some(_) => out.push(violation(key, "expected text or a mapping with text/sources")),
                }
            }
        }
        Some(_) => out.push(violation("criteria", "expected a mapping")),
    }

    match get(root, "nlp_domain_notes") {
        None => out.push(violation("nlp_domain_notes", "missing key")),
        Some(Value::Mapping(notes)) => {
            check_unknown_keys(notes, &NLP_DOMAINS, "nlp_domain_notes.", &mut out);
            for name in NLP_DOMAINS {
                let key = format!("nlp_domain_notes.{name}");
                match get(notes, name) {
                    None => out.push(violation(key, "missing domain")),
                    Some(Value::String(s)) => check_text(s, &key, "empty note", &mut out),
                    Some(Value::Null) => out.push(violation(key, "empty note")),
                    Some(_) => out.push(violation(key, "expected a string")),
                }
            }
        }
        Some(_) => out.push(violation("nlp_domain_notes", "expected a mapping")),
    }

    match get(root, "notes") {
        None | Some(Value::String(_)) => {}
        Some(_) => out.push(violation("notes", "expected a string")),
    }
    out
}

pub fn validate_card(text: &str) -> Result<Vec<Violation>, CardError> {
    Ok(validate_value(&parse_document(text)?))
}

/// Parses and validates a card.
pub fn parse_card(text: &str) -> Result<LanguageCard, CardError> {
    let doc = parse_document(text)?;
    let violations = validate_value(&doc);
    if !violations.is_empty() {
        return Err(CardError::Invalid(violations));
    }
    let root = doc.as_mapping().expect("validated");
    let string = |m: &Mapping, k: &str| get(m, k).and_then(Value::as_str).unwrap_or_default().to_string();
    let criteria_map = get(root, "criteria").and_then(Value::as_mapping).expect("validated");
    let criteria = CRITERIA
        .iter()
        .map(|&name| {
            let entry = match get(criteria_map, name).expect("validated") {
                Value::String(s) => CriterionEntry {
                    text: s.clone(),
                    sources: vec![],
                },
                Value::Mapping(m) => CriterionEntry {
                    text: string(m, "text"),
                    sources: get(m, "sources")
                        .and_then(Value::as_sequence)
                        .map(|items| items.iter().filter_map(Value::as_str).map(str::to_string).collect())
                        .unwrap_or_default(),
                },
                _ => unreachable!("validated"),
            };
            (name.to_string(), entry)
        })
        .collect();
    let notes_map = get(root, "nlp_domain_notes").and_then(Value::as_mapping).expect("validated");
    let nlp_domain_notes = NLP_DOMAINS
        .iter()
        .map(|&name| (name.to_string(), string(notes_map, name)))
        .collect();
    Ok(LanguageCard {
        entity_name: string(root, "entity_name"),
        version: string(root, "version"),
        criteria,
        nlp_domain_notes,
        notes: get(root, "notes").and_then(Value::as_str).map(str::to_string),
    })
}

fn heading(key: &str) -> String {
    let spaced = key.replace('_', " ");
    let mut chars = spaced.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Human-readable Markdown rendering: one `##` section per criterion, then one
/// per NLP domain, in canonical order.
pub fn render_card(card: &LanguageCard) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Language card: {} (version {})", card.entity_name, card.version);
    if let Some(notes) = &card.notes {
        let _ = writeln!(out, "\n_Notes:_ {}", notes.trim());
    }
    for (name, entry) in &card.criteria {
        let _ = writeln!(out, "\n## {}\n\n{}", heading(name), entry.text.trim());
        if !entry.sources.is_empty() {
            let _ = writeln!(out, "\nSources: {}", entry.sources.join("; "));
        }
    }
    for (name, note) in &card.nlp_domain_notes {
        let _ = writeln!(out, "\n## NLP domain: {}\n\n{}", heading(name), note.trim());
    }
    out
}

/// A YAML skeleton with every required key holding placeholder text.
pub fn new_card_template(entity_name: &str) -> Result<String, CardError> {
    let name = entity_name.trim();
    if name.is_empty() {
        return Err(CardError::EmptyName);
    }
    let mut out = String::new();
    let _ = writeln!(out, "entity_name: {}", yaml_scalar(name));
    let _ = writeln!(out, "version: \"0.1\"");
    let _ = writeln!(out, "criteria:");
    for c in CRITERIA {
        let _ = writeln!(out, "  {c}:");
        let _ = writeln!(out, "    text: \"{PLACEHOLDER_PREFIX} {} of {}>\"", heading(c).to_lowercase(), escape(name));
        let _ = writeln!(out, "    sources: []");
    }
    let _ = writeln!(out, "nlp_domain_notes:");
    for d in NLP_DOMAINS {
        let _ = writeln!(
            out,
            "  {d}: \"{PLACEHOLDER_PREFIX} variation risks for {d}, or '{NOT_ASSESSED}'>\""
        );
    }
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn yaml_scalar(s: &str) -> String {
    format!("\"{}\"", escape(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_card_is_valid() {
        assert_eq!(validate_card(LUXEMBOURGISH_CARD).unwrap(), vec![]);
        let card = parse_card(LUXEMBOURGISH_CARD).unwrap();
        assert_eq!(card.entity_name, "Luxembourgish");
        let support = &card.criteria[1].1.text;
        assert!(support.contains("national language") && support.contains("2023"));
    }

    #[test]
    fn missing_criterion_is_one_violation() {
        let mut doc = parse_document(LUXEMBOURGISH_CARD).unwrap();
        doc["criteria"]
            .as_mapping_mut()
            .unwrap()
            .remove("communicative_range");
        let v = validate_value(&doc);
        assert_eq!(v, vec![violation("criteria.communicative_range", "missing criterion")]);
    }

    #[test]
    fn empty_criterion() {
        let mut doc = parse_document(LUXEMBOURGISH_CARD).unwrap();
        doc["criteria"]["school_education"] = Value::String(String::new());
        assert_eq!(
            validate_value(&doc),
            vec![violation("criteria.school_education", "empty criterion")]
        );
    }

    #[test]
    fn unknown_keys_are_violations() {
        let mut doc = parse_document(LUXEMBOURGISH_CARD).unwrap();
        doc.as_mapping_mut()
            .unwrap()
            .insert("rating".into(), Value::from(5));
        assert_eq!(validate_value(&doc), vec![violation("rating", "unknown key")]);
    }

    #[test]
    fn json_cards_are_accepted() {
        let doc = parse_document(LUXEMBOURGISH_CARD).unwrap();
        let json = serde_json::to_string(&doc).unwrap();
        assert_eq!(validate_card(&json).unwrap(), vec![]);
        assert!(matches!(validate_card("{not json"), Err(CardError::Parse(_))));
    }

    #[test]
    fn template_has_all_keys_and_fails_validation() {
        let t = new_card_template("Luxembourgish").unwrap();
        let doc = parse_document(&t).unwrap();
        assert_eq!(doc["criteria"].as_mapping().unwrap().len(), 8);
        let v = validate_card(&t).unwrap();
        assert_eq!(v.len(), 13);
        assert!(v.iter().all(|x| x.rule == "placeholder"));
        assert_eq!(t, new_card_template("Luxembourgish").unwrap());
        assert!(matches!(new_card_template("  "), Err(CardError::EmptyName)));
        // quoting survives odd names
        let odd = new_card_template("Lëtzebuergesch: \"Platt\"").unwrap();
        assert_eq!(parse_document(&odd).unwrap()["entity_name"], "Lëtzebuergesch: \"Platt\"");
    }

    #[test]
    fn render_is_sectioned_and_stable() {
        let card = parse_card(LUXEMBOURGISH_CARD).unwrap();
        let text = render_card(&card);
        assert_eq!(text, render_card(&card));
        let sections: Vec<&str> = text.lines().filter(|l| l.starts_with("## ")).collect();
        assert_eq!(sections.len(), 13);
        assert_eq!(sections[0], "## Sociolinguistic setting");
        assert_eq!(sections[7], "## Attitudes and ideologies");
        assert_eq!(sections[8], "## NLP domain: Data");
        assert_eq!(sections[12], "## NLP domain: Usage");
    }

    #[test]
    fn not_assessed_domain_is_valid() {
        let mut doc = parse_document(LUXEMBOURGISH_CARD).unwrap();
        doc["nlp_domain_notes"]["usage"] = Value::String(NOT_ASSESSED.into());
        assert!(validate_value(&doc).is_empty());
    }
}
