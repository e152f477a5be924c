//! Model response parsing.
//!
//! Two shapes are accepted. The object shape is
//! `{"interpretations": [{"meaning", "context", "confidence"}, ...]}` (or a
//! bare array of such items), possibly wrapped in prose or a code fence.
//! The line shape is blocks of `INTERP:` / `CONTEXT:` / `CONFIDENCE:`
//! lines separated by `---`. The object shape is tried first.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::interp::{RawInterpretation, Source};

struct Draft {
    meaning: String,
    context: String,
    confidence: Option<f64>,
}

pub fn parse_llm_response(raw: &str) -> Result<Vec<RawInterpretation>> {
    let drafts = match parse_structured(raw) {
        Some(d) if !d.is_empty() => d,
        _ => parse_lines(raw),
    };
    if drafts.is_empty() {
        return Err(Error::MalformedResponse {
            raw: raw.to_string(),
        });
    }
    let default = 1.0 / drafts.len() as f64;
    Ok(drafts
        .into_iter()
        .map(|d| RawInterpretation {
            meaning: d.meaning,
            context_label: d.context,
            confidence: d.confidence.unwrap_or(default).clamp(0.0, 1.0),
            source: Source::Llm,
        })
        .collect())
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn json_candidates(raw: &str) -> Vec<&str> {
    let mut out = vec![raw.trim()];
    for (open, close) in [('{', '}'), ('[', ']')] {
        if let (Some(s), Some(e)) = (raw.find(open), raw.rfind(close)) {
            if s < e {
                out.push(&raw[s..=e]);
            }
        }
    }
    out
}

fn parse_structured(raw: &str) -> Option<Vec<Draft>> {
    let value = json_candidates(raw)
        .into_iter()
        .find_map(|c| serde_json::from_str::<Value>(c).ok())?;
    let items = match &value {
        Value::Array(items) => items,
        Value::Object(map) => map.get("interpretations")?.as_array()?,
        _ => return None,
    };
    Some(
        items
            .iter()
            .filter_map(|item| {
                let obj = item.as_object()?;
                let field = |keys: &[&str]| keys.iter().find_map(|k| obj.get(*k));
                let meaning =
                    collapse_ws(field(&["meaning", "interpretation", "interp"])?.as_str()?);
                if meaning.is_empty() {
                    return None;
                }
                let context = field(&["context", "context_label", "condition"])
                    .and_then(Value::as_str)
                    .map(collapse_ws)
                    .unwrap_or_default();
                let confidence = field(&["confidence", "weight"]).and_then(|v| match v {
                    Value::Number(n) => n.as_f64(),
                    Value::String(s) => parse_confidence(s),
                    _ => None,
                });
                Some(Draft {
                    meaning,
                    context,
                    confidence,
                })
            })
            .collect(),
    )
}

/// First number in the value; a trailing `%` divides by 100.
fn parse_confidence(s: &str) -> Option<f64> {
    let s = s.trim();
    let start = s.find(|c: char| c.is_ascii_digit() || c == '.' || c == '-')?;
    let tail = &s[start..];
    let end = tail
        .char_indices()
        .find(|&(i, c)| !(c.is_ascii_digit() || c == '.' || (i == 0 && c == '-')))
        .map_or(tail.len(), |(i, _)| i);
    let v: f64 = tail[..end].parse().ok()?;
    let v = if tail[end..].trim_start().starts_with('%') {
        v / 100.0
    } else {
        v
    };
    v.is_finite().then_some(v)
}

#[derive(Clone, Copy, PartialEq)]
enum Key {
    Interp,
    Context,
    Confidence,
}

fn split_key(line: &str) -> Option<(Key, &str)> {
    let l = line
        .trim()
        .trim_start_matches(|c: char| c == '*' || c == '#' || c == '-' || c.is_whitespace());
    let (k, rest) = l.split_once(':')?;
    let key = match k
        .trim()
        .trim_matches('*')
        .trim()
        .to_ascii_uppercase()
        .as_str()
    {
        "INTERP" | "INTERPRETATION" => Key::Interp,
        "CONTEXT" => Key::Context,
        "CONFIDENCE" => Key::Confidence,
        _ => return None,
    };
    Some((key, rest.trim().trim_start_matches('*').trim()))
}

fn parse_lines(raw: &str) -> Vec<Draft> {
    #[derive(Default)]
    struct Block {
        interp: String,
        context: String,
        confidence: String,
    }
    let mut blocks: Vec<Block> = vec![Block::default()];
    let mut current: Option<Key> = None;
    for line in raw.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with("---") {
            blocks.push(Block::default());
            current = None;
            continue;
        }
        let block = blocks.last_mut().expect("non-empty");
        match split_key(line) {
            Some((Key::Interp, v)) => {
                if !block.interp.is_empty() {
                    blocks.push(Block::default());
                }
                let block = blocks.last_mut().expect("non-empty");
                block.interp.push_str(v);
                current = Some(Key::Interp);
            }
            Some((Key::Context, v)) => {
                block.context.push_str(v);
                current = Some(Key::Context);
            }
            Some((Key::Confidence, v)) => {
                block.confidence.push_str(v);
                current = Some(Key::Confidence);
            }
            None if !trimmed.is_empty() => {
                let target = match current {
                    Some(Key::Interp) => &mut block.interp,
                    Some(Key::Context) => &mut block.context,
                    _ => continue,
                };
                target.push(' ');
                target.push_str(trimmed);
            }
            None => current = None,
        }
    }
    blocks
        .into_iter()
        .filter_map(|b| {
            let meaning = collapse_ws(&b.interp);
            (!meaning.is_empty()).then(|| Draft {
                meaning,
                context: collapse_ws(&b.context),
                confidence: parse_confidence(&b.confidence),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EXAMPLE_1: &str = r#"{
  "id": "lex_en_01",
  "interpretations": [
    {
      "meaning": "I observed her pet duck (the bird).",
      "context": "noun-reading",
      "confidence": 0.5
    },
    {
      "meaning": "I saw her lower her head quickly.",
      "context": "verb-reading",
      "confidence": 0.5
    }
  ]
}"#;

    const EXAMPLE_2: &str = r#"{
  "id": "str_en_01",
  "interpretations": [
    {
      "meaning": "The speaker was wearing pajamas when they shot the elephant.",
      "context": "PP attaches to subject",
      "confidence": 0.7
    },
    {
      "meaning": "The elephant was inside the speaker's pajamas when it was shot.",
      "context": "PP attaches to object",
      "confidence": 0.3
    }
  ]
}"#;

    #[test]
    fn json_block_with_ids() {
        let out = parse_llm_response(EXAMPLE_1).unwrap();
        assert_eq!(
            out,
            [
                RawInterpretation::new(
                    "I observed her pet duck (the bird).",
                    "noun-reading",
                    0.5,
                    Source::Llm
                ),
                RawInterpretation::new(
                    "I saw her lower her head quickly.",
                    "verb-reading",
                    0.5,
                    Source::Llm
                ),
            ]
        );
    }

    #[test]
    fn json_block_structural() {
        let out = parse_llm_response(EXAMPLE_2).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].confidence, 0.7);
        assert_eq!(out[1].confidence, 0.3);
        assert_eq!(out[0].context_label, "PP attaches to subject");
    }

    #[test]
    fn json_wrapped_in_prose_and_fence() {
        let raw = format!("Here you go:\n```json\n{EXAMPLE_1}\n```\nHope that helps.");
        assert_eq!(parse_llm_response(&raw).unwrap().len(), 2);
        let arr = r#"[{"interpretation": "a reading", "context": "c", "confidence": "70%"}]"#;
        let out = parse_llm_response(arr).unwrap();
        assert_eq!(out[0].meaning, "a reading");
        assert!((out[0].confidence - 0.7).abs() < 1e-12);
    }

    #[test]
    fn line_format() {
        let raw = "INTERP: The bank of a river.
CONTEXT: geography
CONFIDENCE: 0.6
---
INTERP: A financial institution
that holds deposits.
CONTEXT: finance
CONFIDENCE: 1.4
---";
        let out = parse_llm_response(raw).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].meaning, "The bank of a river.");
        assert_eq!(out[0].context_label, "geography");
        assert_eq!(out[0].confidence, 0.6);
        assert_eq!(
            out[1].meaning,
            "A financial institution that holds deposits."
        );
        assert_eq!(out[1].confidence, 1.0, "clamped");
    }

    #[test]
    fn line_format_markdown_and_missing_confidence() {
        let raw = "**INTERP:** first reading\n**CONTEXT:** a\nINTERP: second reading\nCONTEXT: b\nINTERP: third\n";
        let out = parse_llm_response(raw).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|i| (i.confidence - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(out[0].meaning, "first reading");
        assert_eq!(out[1].context_label, "b");
    }

    #[test]
    fn malformed() {
        let err = parse_llm_response("no interpretations here").unwrap_err();
        match err {
            Error::MalformedResponse { raw } => assert_eq!(raw, "no interpretations here"),
            other => panic!("unexpected {other}"),
        }
        assert!(parse_llm_response(r#"{"interpretations": []}"#).is_err());
        assert!(parse_llm_response("").is_err());
    }

    #[test]
    fn negative_confidence_clamped() {
        let out = parse_llm_response(r#"[{"meaning": "m", "context": "c", "confidence": -0.5}]"#)
            .unwrap();
        assert_eq!(out[0].confidence, 0.0);
    }
}
