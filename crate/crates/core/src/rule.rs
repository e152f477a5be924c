//! Rule-based interpretation extraction: clause segmentation at explicit
//! contradiction markers and hedge-scope expansion.

use crate::interp::{RawInterpretation, Source};
use crate::lexicon::{FeatureVector, MarkerCategory, MarkerHit};
use crate::text;

pub const HEDGE_POSITIVE: &str = "hedge-scope-pos";
pub const HEDGE_NEGATIVE: &str = "hedge-scope-neg";
const NON_COMMITMENT_PREFIX: &str = "it is possible that not: ";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub text: String,
    pub context_label: &'static str,
}

fn non_ws_len(s: &str) -> usize {
    s.chars().filter(|c| !c.is_whitespace()).count()
}

fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let (bs, be) = text::char_to_byte_range(text, start, end);
    &text[bs..be]
}

/// Splits `text` at every adversative/contrastive/concessive hit. The
/// first segment takes the first marker's pre-label; a segment after a
/// marker takes that marker's post-label. Overlapping hits are reduced to
/// the earliest; segments with fewer than two non-whitespace chars are
/// dropped.
pub fn segment_at_markers(text: &str, hits: &[MarkerHit]) -> Vec<Segment> {
    let mut cuts: Vec<&MarkerHit> = hits
        .iter()
        .filter(|h| h.entry.category().is_explicit_contradiction())
        .collect();
    cuts.sort_by_key(|h| (h.span.start, std::cmp::Reverse(h.span.end)));
    let mut kept: Vec<&MarkerHit> = Vec::with_capacity(cuts.len());
    for h in cuts {
        if kept.last().is_none_or(|p| h.span.start >= p.span.end) {
            kept.push(h);
        }
    }
    let Some(first) = kept.first() else {
        return Vec::new();
    };

    let total = text.chars().count();
    let mut pieces = Vec::with_capacity(kept.len() + 1);
    pieces.push((0, first.span.start, first.entry.category().pre_label()));
    for (i, h) in kept.iter().enumerate() {
        let end = kept.get(i + 1).map_or(total, |n| n.span.start);
        pieces.push((h.span.end, end, h.entry.category().post_label()));
    }

    pieces
        .into_iter()
        .filter_map(|(s, e, label)| {
            let seg = char_slice(text, s, e).trim();
            (non_ws_len(seg) >= 2).then(|| Segment {
                text: seg.to_string(),
                context_label: label,
            })
        })
        .collect()
}

/// Text with every hedging hit removed and whitespace collapsed.
fn strip_hedges(text: &str, fv: &FeatureVector) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut keep = vec![true; chars.len()];
    for h in fv.hits() {
        if h.entry.category() == MarkerCategory::Hedging {
            for k in &mut keep[h.span.start..h.span.end] {
                *k = false;
            }
        }
    }
    let stripped: String = chars
        .iter()
        .zip(&keep)
        .filter_map(|(c, k)| k.then_some(*c))
        .collect();
    let collapsed = stripped.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_start_matches(|c: char| c == ',' || c == '、' || c.is_whitespace())
        .trim_end_matches(|c: char| c == ',' || c == '、' || c.is_whitespace())
        .to_string()
}

/// Two readings of a hedged proposition: asserted and not asserted.
fn hedge_variants(text: &str, fv: &FeatureVector) -> Vec<RawInterpretation> {
    let proposition = strip_hedges(text, fv);
    if non_ws_len(&proposition) < 2 {
        return Vec::new();
    }
    vec![
        RawInterpretation::new(proposition.clone(), HEDGE_POSITIVE, 0.5, Source::Rule),
        RawInterpretation::new(
            format!("{NON_COMMITMENT_PREFIX}{proposition}"),
            HEDGE_NEGATIVE,
            0.5,
            Source::Rule,
        ),
    ]
}

/// Rule extraction over a detected feature vector.
///
/// Explicit-contradiction markers win: when they yield two or more
/// segments each becomes an interpretation at confidence `1/n`. Otherwise
/// a hedging hit yields the two hedge-scope variants. Epistemic, modal,
/// coordination and scope hits produce nothing here.
pub fn rule_extract(text: &str, fv: &FeatureVector) -> Vec<RawInterpretation> {
    if !fv.has_conflict() {
        return Vec::new();
    }
    let segments = segment_at_markers(text, fv.hits());
    if segments.len() < 2 && fv.bit(MarkerCategory::Hedging) {
        let variants = hedge_variants(text, fv);
        if !variants.is_empty() {
            return variants;
        }
    }
    let n = segments.len() as f64;
    segments
        .into_iter()
        .map(|s| RawInterpretation::new(s.text, s.context_label, 1.0 / n, Source::Rule))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{LanguageSelector, MarkerLexicon};

    fn fv(text: &str, lang: LanguageSelector) -> FeatureVector {
        MarkerLexicon::builtin().detect(text, lang).unwrap()
    }

    fn segs(text: &str) -> Vec<(String, &'static str)> {
        let f = fv(text, LanguageSelector::Auto);
        segment_at_markers(text, f.hits())
            .into_iter()
            .map(|s| (s.text, s.context_label))
            .collect()
    }

    #[test]
    fn single_adversative_split() {
        assert_eq!(
            segs("I love them, but being with them hurts"),
            [
                ("I love them,".to_string(), "pre-adv"),
                ("being with them hurts".to_string(), "post-adv")
            ]
        );
    }

    #[test]
    fn two_adversatives_give_three_segments() {
        // hand split: |He is tired,| but |he keeps going,| yet |he never rests.|
        assert_eq!(
            segs("He is tired, but he keeps going, yet he never rests."),
            [
                ("He is tired,".to_string(), "pre-adv"),
                ("he keeps going,".to_string(), "post-adv"),
                ("he never rests.".to_string(), "post-adv"),
            ]
        );
    }

    #[test]
    fn mixed_categories_use_nearest_marker_labels() {
        assert_eq!(
            segs("It is fast. On the other hand, it is loud, but cheap."),
            [
                ("It is fast.".to_string(), "contrast-A"),
                (", it is loud,".to_string(), "contrast-B"),
                ("cheap.".to_string(), "post-adv"),
            ]
        );
    }

    #[test]
    fn leading_marker_drops_empty_segment() {
        assert_eq!(
            segs("But I did not go."),
            [("I did not go.".to_string(), "post-adv")]
        );
        assert!(segs("The cat sat on the mat.").is_empty());
    }

    #[test]
    fn degenerate_segments_dropped() {
        assert_eq!(
            segs("A but b is fine"),
            [("b is fine".to_string(), "post-adv")]
        );
    }

    #[test]
    fn japanese_example() {
        let text = "Yametai kedo yametakunai";
        let out = rule_extract(text, &fv(text, LanguageSelector::Jp));
        assert_eq!(
            out,
            [
                RawInterpretation::new("Yametai", "pre-adv", 0.5, Source::Rule),
                RawInterpretation::new("yametakunai", "post-adv", 0.5, Source::Rule),
            ]
        );
        let text = "行きたいけど行きたくない";
        let out = rule_extract(text, &fv(text, LanguageSelector::Auto));
        assert_eq!(out[0].meaning, "行きたい");
        assert_eq!(out[1].meaning, "行きたくない");
    }

    #[test]
    fn no_markers_no_rules() {
        let t = "The cat sat on the mat.";
        assert!(rule_extract(t, &fv(t, LanguageSelector::En)).is_empty());
    }

    #[test]
    fn epistemic_only_produces_nothing() {
        let t = "I think I made the right choice.";
        let f = fv(t, LanguageSelector::En);
        assert!(f.bit(MarkerCategory::Epistemic));
        assert!(rule_extract(t, &f).is_empty());
    }

    #[test]
    fn hedge_expansion() {
        let t = "Maybe I should apply for that position.";
        let out = rule_extract(t, &fv(t, LanguageSelector::En));
        assert_eq!(
            out,
            [
                RawInterpretation::new(
                    "I should apply for that position.",
                    HEDGE_POSITIVE,
                    0.5,
                    Source::Rule
                ),
                RawInterpretation::new(
                    "it is possible that not: I should apply for that position.",
                    HEDGE_NEGATIVE,
                    0.5,
                    Source::Rule
                ),
            ]
        );
        let t = "Ashita wa ame ga furu kamoshirenai";
        let out = rule_extract(t, &fv(t, LanguageSelector::Jp));
        assert_eq!(out[0].meaning, "Ashita wa ame ga furu");
        let t = "明日は雨が降るかもしれない";
        let out = rule_extract(t, &fv(t, LanguageSelector::Auto));
        assert_eq!(out[0].meaning, "明日は雨が降る");
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn bare_hedge_is_degenerate() {
        let t = "Maybe.";
        assert!(rule_extract(t, &fv(t, LanguageSelector::En)).is_empty());
    }

    #[test]
    fn adversative_takes_priority_over_hedge() {
        let t = "Maybe I will go, but I am tired.";
        let out = rule_extract(t, &fv(t, LanguageSelector::En));
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].context_label, "pre-adv");
    }
}
