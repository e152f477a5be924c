use serde::Serialize;

use crate::error::{Error, Result};
use crate::lexicon::FeatureVector;

const HEAD: &str = "Given the text: \"";
const CONFLICT_NOTE: &str = "Note: This text contains potential ambiguity markers.";
const BODY: &str = "List ALL possible interpretations as distinct meanings.
For each interpretation, provide:
1. The interpretation (a clear restatement of one possible meaning)
2. The context/condition under which this interpretation holds
3. Confidence weight from 0.0 to 1.0

Format each as:
INTERP: [interpretation]
CONTEXT: [context]
CONFIDENCE: [0.0-1.0]
---";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InterpPrompt {
    pub text: String,
    pub conflict_note_included: bool,
    pub rendered: String,
}

/// Renders the interpretation-enumeration prompt. The ambiguity note line
/// is included only when the feature vector has any bit set.
pub fn build_prompt(text: &str, fv: &FeatureVector) -> Result<InterpPrompt> {
    if text.trim().is_empty() {
        return Err(Error::EmptyInput);
    }
    let note = fv.has_conflict();
    let mut rendered = String::with_capacity(HEAD.len() + text.len() + BODY.len() + 64);
    rendered.push_str(HEAD);
    rendered.push_str(text);
    rendered.push_str("\"\n\n");
    if note {
        rendered.push_str(CONFLICT_NOTE);
        rendered.push_str("\n\n");
    }
    rendered.push_str(BODY);
    Ok(InterpPrompt {
        text: text.to_string(),
        conflict_note_included: note,
        rendered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{LanguageSelector, MarkerLexicon};

    const EXPECTED_WITH_NOTE: &str = "Given the text: \"Maybe I'll go.\"

Note: This text contains potential ambiguity markers.

List ALL possible interpretations as distinct meanings.
For each interpretation, provide:
1. The interpretation (a clear restatement of one possible meaning)
2. The context/condition under which this interpretation holds
3. Confidence weight from 0.0 to 1.0

Format each as:
INTERP: [interpretation]
CONTEXT: [context]
CONFIDENCE: [0.0-1.0]
---";

    #[test]
    fn no_note_without_markers() {
        let fv = MarkerLexicon::builtin()
            .detect("I saw her duck.", LanguageSelector::En)
            .unwrap();
        let p = build_prompt("I saw her duck.", &fv).unwrap();
        assert!(!p.conflict_note_included);
        assert!(!p.rendered.contains("ambiguity markers"));
        assert!(p
            .rendered
            .starts_with("Given the text: \"I saw her duck.\"\n\nList ALL"));
    }

    #[test]
    fn note_with_hedge() {
        let fv = MarkerLexicon::builtin()
            .detect("Maybe I'll go.", LanguageSelector::En)
            .unwrap();
        let p = build_prompt("Maybe I'll go.", &fv).unwrap();
        assert!(p.conflict_note_included);
        assert_eq!(p.rendered, EXPECTED_WITH_NOTE);
    }

    #[test]
    fn empty_text_rejected() {
        assert!(matches!(
            build_prompt("", &FeatureVector::empty()),
            Err(Error::EmptyInput)
        ));
    }
}
