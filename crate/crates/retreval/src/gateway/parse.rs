//! Tolerant parsers for model output.
//!
//! Models drift from requested formats, so every parser here has a documented
//! fallback instead of failing the episode: scores default to 0.5, candidate
//! lists may come back short or empty, and unparseable complexity estimates
//! fall back to the middle of the scale.

use std::collections::BTreeMap;

use crate::refine::{CritiqueDimension, CritiqueReport};

/// Parse outcome carrying whether the primary format matched; callers record
/// a trace warning when it did not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub parsed: bool,
}

fn first_number_from(text: &str, start: usize) -> Option<f64> {
    let bytes = text.as_bytes();
    let mut i = start;
    while i < bytes.len() {
        let b = bytes[i];
        let starts_decimal = b == b'.'
            && i + 1 < bytes.len()
            && bytes[i + 1].is_ascii_digit()
            && (i == 0 || !bytes[i - 1].is_ascii_digit());
        if b.is_ascii_digit() || starts_decimal {
            let begin = i;
            let mut seen_dot = b == b'.';
            i += 1;
            while i < bytes.len() {
                let c = bytes[i];
                if c.is_ascii_digit() {
                    i += 1;
                } else if c == b'.' && !seen_dot && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                    seen_dot = true;
                    i += 1;
                } else {
                    break;
                }
            }
            let slice = &text[begin..i];
            let normalized = if slice.starts_with('.') {
                format!("0{slice}")
            } else {
                slice.to_string()
            };
            if let Ok(v) = normalized.parse::<f64>() {
                return Some(v);
            }
        }
        i += 1;
    }
    None
}

fn first_number(text: &str) -> Option<f64> {
    first_number_from(text, 0)
}

fn find_marker(text: &str, marker: &str) -> Option<usize> {
    let lower = text.to_lowercase();
    lower.find(&marker.to_lowercase()).map(|i| i + marker.len())
}

/// Extract a unit-interval score from free-form critic text.
///
/// The first number after a `score` marker wins; without a marker, the first
/// number anywhere. Values in (1, 10] are read as a 10-point scale and divided
/// by 10; the result clamps to [0, 1]. No number at all yields 0.5 with
/// `parsed == false`.
pub fn parse_score(text: &str) -> Parsed<f64> {
    let raw = match find_marker(text, "score") {
        Some(after) => first_number_from(text, after).or_else(|| first_number(text)),
        None => first_number(text),
    };
    match raw {
        Some(value) => {
            let scaled = if value > 1.0 && value <= 10.0 {
                value / 10.0
            } else {
                value
            };
            Parsed {
                value: scaled.clamp(0.0, 1.0),
                parsed: true,
            }
        }
        None => Parsed {
            value: 0.5,
            parsed: false,
        },
    }
}

/// Canonical score rendering; `parse_score` inverts it exactly.
pub fn format_score(score: f64) -> String {
    format!("score: {score:.2}")
}

/// Extract a 1-5 complexity level. Falls back to 3 when no integer appears.
pub fn parse_complexity(text: &str) -> Parsed<u8> {
    let raw = match find_marker(text, "complexity") {
        Some(after) => first_number_from(text, after).or_else(|| first_number(text)),
        None => first_number(text),
    };
    match raw {
        Some(value) => Parsed {
            value: (value.trunc() as i64).clamp(1, 5) as u8,
            parsed: true,
        },
        None => Parsed {
            value: 3,
            parsed: false,
        },
    }
}

fn is_list_delimiter(line: &str) -> Option<String> {
    let trimmed = line.trim_start();
    // `thought` is ASCII, so the byte-length prefix check is boundary-safe
    if let Some(head) = trimmed.get(..7) {
        if head.eq_ignore_ascii_case("thought") {
            let rest = trimmed[7..].trim_start();
            let digit_count = rest.bytes().take_while(|b| b.is_ascii_digit()).count();
            if digit_count > 0 {
                if let Some(stripped) = rest[digit_count..].trim_start().strip_prefix(':') {
                    return Some(stripped.trim().to_string());
                }
            }
            return None;
        }
    }
    let digit_count = trimmed.bytes().take_while(|b| b.is_ascii_digit()).count();
    if digit_count > 0 {
        let after = &trimmed[digit_count..];
        if let Some(stripped) = after.strip_prefix('.').or_else(|| after.strip_prefix(')')) {
            return Some(stripped.trim().to_string());
        }
    }
    None
}

/// Extract up to `expected` delimited thoughts.
///
/// Accepts the canonical `THOUGHT n:` format and plain `1.` / `1)` numbered
/// lists. A thought continues across lines until the next delimiter. Returns
/// an empty list (never an error) when nothing parses; the controller treats
/// that as a dead branch.
pub fn parse_candidates(text: &str, expected: usize) -> Vec<String> {
    let mut thoughts: Vec<String> = Vec::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        if let Some(head) = is_list_delimiter(line) {
            if let Some(done) = current.take() {
                thoughts.push(done);
            }
            current = Some(head);
        } else if let Some(buf) = current.as_mut() {
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                buf.push(' ');
                buf.push_str(trimmed);
            }
        }
    }
    if let Some(done) = current.take() {
        thoughts.push(done);
    }
    thoughts
        .into_iter()
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .take(expected)
        .collect()
}

const SECTION_HEADERS: [&str; 7] = [
    "SCORE",
    "RATIONALE",
    "SUGGESTIONS",
    "COHERENCE",
    "CORRECTNESS",
    "COMPLETENESS",
    "CLARITY",
];

fn section_of(line: &str) -> Option<(&'static str, String)> {
    let trimmed = line.trim_start();
    for header in SECTION_HEADERS {
        let len = header.len();
        let Some(head) = trimmed.get(..len) else { continue };
        if head.eq_ignore_ascii_case(header) {
            let rest = trimmed[len..].trim_start();
            if let Some(body) = rest.strip_prefix(':') {
                return Some((header, body.trim().to_string()));
            }
        }
    }
    None
}

fn bullet_of(line: &str) -> Option<String> {
    let trimmed = line.trim_start();
    trimmed
        .strip_prefix("- ")
        .or_else(|| trimmed.strip_prefix("* "))
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
}

/// Parse a structured critique (`SCORE` / `RATIONALE` / `SUGGESTIONS` /
/// per-dimension notes). Missing sections come back empty; the score falls
/// back per [`parse_score`], with `parsed` reporting whether it was explicit.
pub fn parse_critique(text: &str) -> Parsed<CritiqueReport> {
    let score = parse_score(text);
    let mut rationale = String::new();
    let mut suggestions: Vec<String> = Vec::new();
    let mut dimension_notes: BTreeMap<CritiqueDimension, String> = BTreeMap::new();
    let mut in_suggestions = false;

    for line in text.lines() {
        if let Some((header, body)) = section_of(line) {
            in_suggestions = false;
            match header {
                "RATIONALE" => rationale = body,
                "SUGGESTIONS" => {
                    in_suggestions = true;
                    if let Some(b) = bullet_of(&body) {
                        suggestions.push(b);
                    } else if !body.is_empty() {
                        suggestions.push(body);
                    }
                }
                "COHERENCE" => {
                    dimension_notes.insert(CritiqueDimension::LogicalCoherence, body);
                }
                "CORRECTNESS" => {
                    dimension_notes.insert(CritiqueDimension::Correctness, body);
                }
                "COMPLETENESS" => {
                    dimension_notes.insert(CritiqueDimension::Completeness, body);
                }
                "CLARITY" => {
                    dimension_notes.insert(CritiqueDimension::Clarity, body);
                }
                _ => {}
            }
        } else if in_suggestions {
            if let Some(b) = bullet_of(line) {
                suggestions.push(b);
            }
        }
    }

    if rationale.is_empty() {
        // Unstructured critic output: keep the raw text as the rationale so
        // feedback extraction still has material.
        let compact = text.trim();
        if !compact.is_empty() && !compact.to_uppercase().starts_with("SCORE") {
            rationale = compact.to_string();
        }
    }

    Parsed {
        value: CritiqueReport {
            quality_score: score.value,
            rationale,
            suggestions,
            dimension_notes,
        },
        parsed: score.parsed,
    }
}

/// Parse a yes/no verdict. Checks a `verdict:` marker first, then the first
/// standalone yes/no token. `None` when neither appears.
pub fn parse_yes_no(text: &str) -> Option<bool> {
    let lower = text.to_lowercase();
    if let Some(after) = find_marker(&lower, "verdict") {
        let rest = lower[after..].trim_start_matches(|c: char| c == ':' || c.is_whitespace());
        if rest.starts_with("yes") {
            return Some(true);
        }
        if rest.starts_with("no") {
            return Some(false);
        }
    }
    for token in lower.split(|c: char| !c.is_ascii_alphabetic()) {
        match token {
            "yes" | "correct" => return Some(true),
            "no" | "incorrect" | "wrong" => return Some(false),
            _ => {}
        }
    }
    None
}

/// Lines starting with `- ` or `* `, at most `max` of them.
pub fn parse_bullets(text: &str, max: usize) -> Vec<String> {
    text.lines().filter_map(bullet_of).take(max).collect()
}

/// First integer following a case-insensitive label.
pub fn parse_labeled_int(text: &str, label: &str) -> Option<i64> {
    let after = find_marker(text, label)?;
    first_number_from(text, after).map(|v| v.trunc() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_with_marker() {
        let p = parse_score("score: 0.85 - solid algebra");
        assert!(p.parsed);
        assert!((p.value - 0.85).abs() < 1e-12);
    }

    #[test]
    fn score_ten_scale_ratio() {
        let p = parse_score("8/10");
        assert!(p.parsed);
        assert!((p.value - 0.8).abs() < 1e-12);
    }

    #[test]
    fn score_missing_falls_back() {
        let p = parse_score("no digits here");
        assert!(!p.parsed);
        assert_eq!(p.value, 0.5);
    }

    #[test]
    fn score_clamps_out_of_scale() {
        assert_eq!(parse_score("score: 42").value, 1.0);
        assert_eq!(parse_score("SCORE: 1.0").value, 1.0);
        assert_eq!(parse_score("score: .85").value, 0.85);
    }

    #[test]
    fn score_roundtrips_canonical_format_on_grid() {
        for i in 0..=100 {
            let s = i as f64 / 100.0;
            let p = parse_score(&format_score(s));
            assert!(p.parsed);
            assert!((p.value - s).abs() < 1e-9, "s={s} got {}", p.value);
        }
    }

    #[test]
    fn complexity_cases() {
        assert_eq!(parse_complexity("complexity: 4").value, 4);
        let clamped = parse_complexity("7");
        assert!(clamped.parsed);
        assert_eq!(clamped.value, 5);
        let fallback = parse_complexity("???");
        assert!(!fallback.parsed);
        assert_eq!(fallback.value, 3);
    }

    #[test]
    fn candidates_canonical_format() {
        let text = "THOUGHT 1: isolate x\nTHOUGHT 2: substitute\nTHOUGHT 3: verify";
        let got = parse_candidates(text, 3);
        assert_eq!(got, vec!["isolate x", "substitute", "verify"]);
    }

    #[test]
    fn candidates_truncate_to_expected() {
        let text = "1. a\n2. b\n3. c\n4. d\n5. e";
        assert_eq!(parse_candidates(text, 3), vec!["a", "b", "c"]);
    }

    #[test]
    fn candidates_empty_on_prose() {
        let text = "I think the best approach would be to consider the problem carefully.";
        assert!(parse_candidates(text, 3).is_empty());
    }

    #[test]
    fn candidates_join_continuation_lines() {
        let text = "THOUGHT 1: first part\ncontinues here\nTHOUGHT 2: second";
        assert_eq!(
            parse_candidates(text, 2),
            vec!["first part continues here", "second"]
        );
    }

    #[test]
    fn critique_full_format() {
        let text = "SCORE: 0.7\nRATIONALE: sound but terse\nSUGGESTIONS:\n- show the algebra\n- check units\nCOHERENCE: fine\nCORRECTNESS: ok\nCOMPLETENESS: thin\nCLARITY: fine";
        let p = parse_critique(text);
        assert!(p.parsed);
        let c = p.value;
        assert!((c.quality_score - 0.7).abs() < 1e-12);
        assert_eq!(c.rationale, "sound but terse");
        assert_eq!(c.suggestions, vec!["show the algebra", "check units"]);
        assert_eq!(c.dimension_notes.len(), 4);
    }

    #[test]
    fn critique_unstructured_keeps_text_as_rationale() {
        let p = parse_critique("this step is weak, fix the arithmetic");
        assert!(!p.parsed);
        assert_eq!(p.value.quality_score, 0.5);
        assert!(p.value.rationale.contains("fix the arithmetic"));
    }

    #[test]
    fn yes_no_parses() {
        assert_eq!(parse_yes_no("verdict: yes - looks right"), Some(true));
        assert_eq!(parse_yes_no("verdict: no"), Some(false));
        assert_eq!(parse_yes_no("The answer is correct."), Some(true));
        assert_eq!(parse_yes_no("hmm"), None);
    }

    #[test]
    fn bullets_and_labeled_ints() {
        assert_eq!(
            parse_bullets("- one\n- two\n- three", 2),
            vec!["one", "two"]
        );
        assert_eq!(parse_labeled_int("correctness: 9, meaning: 7", "correctness"), Some(9));
        assert_eq!(parse_labeled_int("nothing", "score"), None);
    }

    #[test]
    fn parsers_tolerate_non_ascii() {
        let text = "THOUGHT 1: čísla sčítáme\nTHOUGHT 2: Đánh giá kết quả";
        assert_eq!(parse_candidates(text, 2).len(), 2);
        let p = parse_score("skóre: žádné, SCORE: 0.7");
        assert!((p.value - 0.7).abs() < 1e-12);
        parse_critique("İSTANBUL\nSCORE: 0.4\nRATIONALE: üzgünüm");
    }

    proptest::proptest! {
        // model output is untrusted; no input may make a parser panic
        #[test]
        fn parsers_never_panic(text in "\\PC{0,300}") {
            let _ = parse_score(&text);
            let _ = parse_complexity(&text);
            let _ = parse_candidates(&text, 4);
            let _ = parse_critique(&text);
            let _ = parse_yes_no(&text);
            let _ = parse_bullets(&text, 3);
            let _ = parse_labeled_int(&text, "score");
        }
    }
}
