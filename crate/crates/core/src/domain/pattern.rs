//! Clause-level check for the INCOSE-style requirement shape
//! `The <subject> shall <action> [<object>] [<qualifier>], when <condition>`.
//!
//! This is a token heuristic, not a grammar: it looks for a non-empty subject
//! clause, the modal `shall` as a whole word, and a clause after the modal
//! that starts with something verb-like.

use serde::{Deserialize, Serialize};

pub const MISSING_SUBJECT: &str = "subject";
pub const MISSING_SHALL: &str = "shall";
pub const MISSING_ACTION: &str = "action";
pub const MISSING_CONDITION: &str = "condition";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternCheck {
    pub matched: bool,
    pub missing: Vec<String>,
    pub subject: Option<String>,
    pub action: Option<String>,
    pub condition: Option<String>,
}

// Words that cannot open the action clause.
const NON_VERBS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "all", "any", "each", "every", "some",
    "no", "its", "their", "our", "my", "your", "his", "her", "to", "of", "in", "on", "at", "by",
    "for", "with", "from", "into", "onto", "over", "under", "and", "or", "but", "nor", "if",
    "when", "it", "they", "he", "she", "we", "you", "i", "shall", "should", "must", "will",
    "may", "can", "could", "would", "might",
];

// Tokens allowed between `shall` and the verb.
const VERB_PREFIXES: &[&str] = &["not", "also", "only", "always", "never", "still"];

pub fn validate_pattern(text: &str) -> PatternCheck {
    let Some((shall_start, shall_end)) = find_shall(text) else {
        return PatternCheck {
            matched: false,
            missing: vec![MISSING_SHALL.to_string()],
            subject: None,
            action: None,
            condition: None,
        };
    };

    let mut missing = Vec::new();

    let subject = text[..shall_start].trim();
    let subject = if subject.chars().any(char::is_alphabetic) {
        Some(subject.to_string())
    } else {
        missing.push(MISSING_SUBJECT.to_string());
        None
    };

    let rest = text[shall_end..].trim();
    let (action_part, condition) = split_condition(rest);

    let action_part = action_part.trim().trim_end_matches(['.', ';', '!']).trim();
    let action = if starts_with_verb(action_part) {
        Some(action_part.to_string())
    } else {
        missing.push(MISSING_ACTION.to_string());
        None
    };

    let condition = match condition {
        Some(c) if c.chars().any(char::is_alphabetic) => Some(c),
        Some(_) => {
            missing.push(MISSING_CONDITION.to_string());
            None
        }
        None => None,
    };

    PatternCheck {
        matched: missing.is_empty(),
        missing,
        subject,
        action,
        condition,
    }
}

/// Byte span of the first whole-word, case-insensitive `shall`.
fn find_shall(text: &str) -> Option<(usize, usize)> {
    let lower = text.to_ascii_lowercase();
    let bytes = lower.as_bytes();
    let mut from = 0;
    while let Some(pos) = lower[from..].find("shall") {
        let start = from + pos;
        let end = start + "shall".len();
        let before_ok = start == 0 || !is_word_byte(bytes[start - 1]);
        let after_ok = end == bytes.len() || !is_word_byte(bytes[end]);
        if before_ok && after_ok {
            return Some((start, end));
        }
        from = end;
    }
    None
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'-' || b >= 0x80
}

/// Splits a trailing `, when <condition>` clause off the action clause.
fn split_condition(rest: &str) -> (&str, Option<String>) {
    let lower = rest.to_ascii_lowercase();
    match lower.rfind(", when") {
        Some(idx)
            if lower[idx + ", when".len()..]
                .chars()
                .next()
                .is_none_or(|c| !c.is_alphanumeric()) =>
        {
            let condition = rest[idx + ", when".len()..]
                .trim()
                .trim_end_matches(['.', ';', '!'])
                .trim()
                .to_string();
            (&rest[..idx], Some(condition))
        }
        _ => (rest, None),
    }
}

fn starts_with_verb(clause: &str) -> bool {
    let mut words = clause
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()));
    loop {
        let Some(word) = words.next() else {
            return false;
        };
        if word.is_empty() {
            return false;
        }
        let lower = word.to_lowercase();
        if VERB_PREFIXES.contains(&lower.as_str()) || (lower.ends_with("ly") && lower.len() > 4) {
            continue;
        }
        return word.chars().all(char::is_alphabetic) && !NON_VERBS.contains(&lower.as_str());
    }
}
