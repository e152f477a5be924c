//! Conflict-marker taxonomy and stage-one conflict detection.
//!
//! A [`MarkerLexicon`] holds surface patterns for English and Japanese,
//! each tagged with one of eight [`MarkerCategory`] values. Detection runs
//! every pattern over an NFKC/lowercase view of the input and reports a
//! [`FeatureVector`]: one presence bit per category plus the matched spans.
//!
//! Pattern syntax: a surface is one or more parts separated by `...`
//! (`"either ... or"`). Word-bounded parts match as contiguous word-token
//! sequences; substring parts match anywhere. Parts must occur in order.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::text::{self, NormalizedText, Token};

pub const CATEGORY_COUNT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerCategory {
    Adversative,
    Contrastive,
    Concessive,
    Hedging,
    Epistemic,
    Modal,
    Coordination,
    Scope,
}

impl MarkerCategory {
    pub const ALL: [MarkerCategory; CATEGORY_COUNT] = [
        MarkerCategory::Adversative,
        MarkerCategory::Contrastive,
        MarkerCategory::Concessive,
        MarkerCategory::Hedging,
        MarkerCategory::Epistemic,
        MarkerCategory::Modal,
        MarkerCategory::Coordination,
        MarkerCategory::Scope,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            MarkerCategory::Adversative => "adversative",
            MarkerCategory::Contrastive => "contrastive",
            MarkerCategory::Concessive => "concessive",
            MarkerCategory::Hedging => "hedging",
            MarkerCategory::Epistemic => "epistemic",
            MarkerCategory::Modal => "modal",
            MarkerCategory::Coordination => "coordination",
            MarkerCategory::Scope => "scope",
        }
    }

    /// Context labels attached to interpretations derived from this
    /// category. Two-label categories are (before-marker, after-marker).
    pub fn context_labels(self) -> &'static [&'static str] {
        match self {
            MarkerCategory::Adversative => &["pre-adv", "post-adv"],
            MarkerCategory::Contrastive => &["contrast-A", "contrast-B"],
            MarkerCategory::Concessive => &["concede", "main"],
            MarkerCategory::Hedging => &["hedge-scope"],
            MarkerCategory::Epistemic => &["epistemic-stance"],
            MarkerCategory::Modal => &["modal-world"],
            MarkerCategory::Coordination => &["coord-A", "coord-B"],
            MarkerCategory::Scope => &["wide-scope", "narrow-scope"],
        }
    }

    /// Adversative, contrastive and concessive markers delimit clauses
    /// that rule extraction splits apart.
    pub fn is_explicit_contradiction(self) -> bool {
        matches!(
            self,
            MarkerCategory::Adversative | MarkerCategory::Contrastive | MarkerCategory::Concessive
        )
    }

    pub fn pre_label(self) -> &'static str {
        self.context_labels()[0]
    }

    pub fn post_label(self) -> &'static str {
        let labels = self.context_labels();
        labels[labels.len() - 1]
    }
}

impl fmt::Display for MarkerCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MarkerCategory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        MarkerCategory::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown marker category {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Jp,
}

impl Language {
    pub fn name(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Jp => "jp",
        }
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "en" => Ok(Language::En),
            "jp" | "ja" => Ok(Language::Jp),
            _ => Err(format!("unknown language {s:?}")),
        }
    }
}

/// Language requested for detection. `Auto` picks Japanese when the text
/// contains kana or CJK ideographs and English otherwise; see
/// [`MarkerLexicon::detect`] for how romanized Japanese is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageSelector {
    En,
    Jp,
    #[default]
    Auto,
}

impl LanguageSelector {
    pub fn resolve(self, text: &str) -> Language {
        match self {
            LanguageSelector::En => Language::En,
            LanguageSelector::Jp => Language::Jp,
            LanguageSelector::Auto => {
                if text::contains_japanese_script(text) {
                    Language::Jp
                } else {
                    Language::En
                }
            }
        }
    }
}

impl From<Language> for LanguageSelector {
    fn from(l: Language) -> Self {
        match l {
            Language::En => LanguageSelector::En,
            Language::Jp => LanguageSelector::Jp,
        }
    }
}

impl FromStr for LanguageSelector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "auto" => Ok(LanguageSelector::Auto),
            other => other.parse::<Language>().map(Into::into),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    WordBounded,
    Substring,
}

impl FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "word-bounded" => Ok(Boundary::WordBounded),
            "substring" => Ok(Boundary::Substring),
            _ => Err(format!("unknown boundary {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MarkerEntry {
    surface: String,
    language: Language,
    category: MarkerCategory,
    boundary: Boundary,
}

impl MarkerEntry {
    /// Builds an entry, normalizing the surface form (NFKC, lowercase,
    /// collapsed whitespace).
    pub fn new(
        surface: &str,
        language: Language,
        category: MarkerCategory,
        boundary: Boundary,
    ) -> std::result::Result<Self, String> {
        let normalized = NormalizedText::new(surface).as_string();
        let surface = normalized.split_whitespace().collect::<Vec<_>>().join(" ");
        if surface.is_empty() {
            return Err("surface is empty".into());
        }
        let entry = MarkerEntry {
            surface,
            language,
            category,
            boundary,
        };
        if entry.parts().iter().any(|p| p.is_empty()) {
            return Err(format!("surface {:?} has an empty part", entry.surface));
        }
        Ok(entry)
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn category(&self) -> MarkerCategory {
        self.category
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    fn parts(&self) -> Vec<String> {
        self.surface
            .split("...")
            .map(|p| p.trim().to_string())
            .collect()
    }
}

/// Half-open span over the chars (Unicode scalar values) of the input text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkerHit {
    pub entry: MarkerEntry,
    pub span: CharSpan,
}

impl Serialize for MarkerHit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("MarkerHit", 6)?;
        st.serialize_field("surface", &self.entry.surface)?;
        st.serialize_field("language", &self.entry.language)?;
        st.serialize_field("category", &self.entry.category)?;
        st.serialize_field("boundary", &self.entry.boundary)?;
        st.serialize_field("start", &self.span.start)?;
        st.serialize_field("end", &self.span.end)?;
        st.end()
    }
}

/// Category presence bits plus the hits that set them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureVector {
    bits: [bool; CATEGORY_COUNT],
    hits: Vec<MarkerHit>,
}

impl FeatureVector {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_hits(mut hits: Vec<MarkerHit>) -> Self {
        hits.sort_by(|a, b| {
            a.span
                .cmp(&b.span)
                .then_with(|| a.entry.category.cmp(&b.entry.category))
                .then_with(|| a.entry.surface.cmp(&b.entry.surface))
        });
        let mut bits = [false; CATEGORY_COUNT];
        for h in &hits {
            bits[h.entry.category.index()] = true;
        }
        FeatureVector { bits, hits }
    }

    pub fn bit(&self, category: MarkerCategory) -> bool {
        self.bits[category.index()]
    }

    pub fn bits(&self) -> &[bool; CATEGORY_COUNT] {
        &self.bits
    }

    pub fn hits(&self) -> &[MarkerHit] {
        &self.hits
    }

    pub fn l1_norm(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn has_conflict(&self) -> bool {
        self.l1_norm() > 0
    }

    pub fn categories(&self) -> impl Iterator<Item = MarkerCategory> + '_ {
        MarkerCategory::ALL.into_iter().filter(|c| self.bit(*c))
    }
}

/// Serializes bits as an ordered `{category: bool}` map.
pub(crate) struct BitsMap<'a>(pub &'a [bool; CATEGORY_COUNT]);

impl Serialize for BitsMap<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(CATEGORY_COUNT))?;
        for c in MarkerCategory::ALL {
            map.serialize_entry(c.name(), &self.0[c.index()])?;
        }
        map.end()
    }
}

impl Serialize for FeatureVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("FeatureVector", 3)?;
        st.serialize_field("bits", &BitsMap(&self.bits))?;
        st.serialize_field("has_conflict", &self.has_conflict())?;
        st.serialize_field("hits", &self.hits)?;
        st.end()
    }
}

#[derive(Debug, Clone)]
enum Part {
    Words(Vec<String>),
    Chars(Vec<char>),
}

#[derive(Debug, Clone)]
struct CompiledEntry {
    parts: Vec<Part>,
}

impl CompiledEntry {
    fn compile(entry: &MarkerEntry) -> Self {
        let parts = entry
            .parts()
            .into_iter()
            .map(|p| match entry.boundary {
                Boundary::WordBounded => {
                    let chars: Vec<char> = p.chars().collect();
                    Part::Words(text::tokenize(&chars).into_iter().map(|t| t.text).collect())
                }
                Boundary::Substring => Part::Chars(p.chars().collect()),
            })
            .collect();
        CompiledEntry { parts }
    }
}

const BUILTIN_VERSION: &str = "builtin-1";

/// (surface, language, category, boundary). Romanized Japanese is written
/// with spaces between words, so it is word-bounded; native-script forms
/// are substring-matched.
const BUILTIN: &[(&str, Language, MarkerCategory, Boundary)] = {
    use Boundary::{Substring as Sub, WordBounded as Word};
    use Language::{En, Jp};
    use MarkerCategory::*;
    &[
        ("but", En, Adversative, Word),
        ("however", En, Adversative, Word),
        ("yet", En, Adversative, Word),
        ("although", En, Adversative, Word),
        ("on the other hand", En, Contrastive, Word),
        ("whereas", En, Contrastive, Word),
        ("even though", En, Concessive, Word),
        ("despite", En, Concessive, Word),
        ("maybe", En, Hedging, Word),
        ("perhaps", En, Hedging, Word),
        ("might", En, Hedging, Word),
        ("i think", En, Epistemic, Word),
        ("i believe", En, Epistemic, Word),
        ("it seems", En, Epistemic, Word),
        ("could", En, Modal, Word),
        ("would", En, Modal, Word),
        ("should", En, Modal, Word),
        ("both ... and", En, Coordination, Word),
        ("either ... or", En, Coordination, Word),
        ("all ... not", En, Scope, Word),
        ("every ... some", En, Scope, Word),
        ("kedo", Jp, Adversative, Word),
        ("demo", Jp, Adversative, Word),
        ("shikashi", Jp, Adversative, Word),
        ("daga", Jp, Adversative, Word),
        ("けど", Jp, Adversative, Sub),
        ("でも", Jp, Adversative, Sub),
        ("しかし", Jp, Adversative, Sub),
        ("だが", Jp, Adversative, Sub),
        ("ippou de", Jp, Contrastive, Word),
        ("hanmen", Jp, Contrastive, Word),
        ("一方で", Jp, Contrastive, Sub),
        ("反面", Jp, Contrastive, Sub),
        ("nimo kakawarazu", Jp, Concessive, Word),
        ("にもかかわらず", Jp, Concessive, Sub),
        ("kamoshirenai", Jp, Hedging, Word),
        ("tabun", Jp, Hedging, Word),
        ("かもしれない", Jp, Hedging, Sub),
        ("たぶん", Jp, Hedging, Sub),
        ("多分", Jp, Hedging, Sub),
        ("to omou", Jp, Epistemic, Word),
        ("ki ga suru", Jp, Epistemic, Word),
        ("と思う", Jp, Epistemic, Sub),
        ("気がする", Jp, Epistemic, Sub),
        ("beki", Jp, Modal, Word),
        ("hazu", Jp, Modal, Word),
        ("darou", Jp, Modal, Word),
        ("べき", Jp, Modal, Sub),
        ("はず", Jp, Modal, Sub),
        ("だろう", Jp, Modal, Sub),
        ("mo ... mo", Jp, Coordination, Word),
        ("ka ... ka", Jp, Coordination, Word),
        ("も...も", Jp, Coordination, Sub),
        ("か...か", Jp, Coordination, Sub),
    ]
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    surface: String,
    language: String,
    category: String,
    #[serde(default)]
    boundary: Option<String>,
}

/// Immutable marker lexicon; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct MarkerLexicon {
    entries: Vec<MarkerEntry>,
    compiled: Vec<CompiledEntry>,
    version: String,
}

impl MarkerLexicon {
    pub fn new(entries: Vec<MarkerEntry>, version: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (index, e) in entries.iter().enumerate() {
            if !seen.insert((e.surface.clone(), e.language, e.category)) {
                return Err(Error::LexiconValidation {
                    index,
                    message: format!(
                        "duplicate entry ({:?}, {}, {})",
                        e.surface,
                        e.language.name(),
                        e.category
                    ),
                });
            }
        }
        let compiled = entries.iter().map(CompiledEntry::compile).collect();
        Ok(MarkerLexicon {
            entries,
            compiled,
            version: version.into(),
        })
    }

    /// The embedded default lexicon.
    pub fn builtin() -> Self {
        let entries = BUILTIN
            .iter()
            .map(|(s, l, c, b)| MarkerEntry::new(s, *l, *c, *b).expect("builtin entry"))
            .collect();
        MarkerLexicon::new(entries, BUILTIN_VERSION).expect("builtin lexicon is valid")
    }

    /// Parses the lexicon file format: a JSON array of
    /// `{surface, language, category, boundary}` objects. `boundary`
    /// defaults to word-bounded.
    pub fn from_json(source: &str) -> Result<Self> {
        let raw: Vec<RawEntry> = serde_json::from_str(source).map_err(|e| Error::LexiconParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let mut entries = Vec::with_capacity(raw.len());
        for (index, r) in raw.into_iter().enumerate() {
            let invalid = |message: String| Error::LexiconValidation { index, message };
            let language = r.language.parse::<Language>().map_err(invalid)?;
            let category = r.category.parse::<MarkerCategory>().map_err(invalid)?;
            let boundary = match r.boundary.as_deref() {
                None => Boundary::WordBounded,
                Some(b) => b.parse::<Boundary>().map_err(invalid)?,
            };
            entries
                .push(MarkerEntry::new(&r.surface, language, category, boundary).map_err(invalid)?);
        }
        MarkerLexicon::new(entries, "file")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("lexicon serializes")
    }

    pub fn entries(&self) -> &[MarkerEntry] {
        &self.entries
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn contains(&self, surface: &str, language: Language, category: MarkerCategory) -> bool {
        self.entries
            .iter()
            .any(|e| e.surface == surface && e.language == language && e.category == category)
    }

    /// Every context label any category in this lexicon can produce.
    pub fn label_vocabulary(&self) -> Vec<&'static str> {
        let mut labels: Vec<&'static str> = Vec::new();
        for c in MarkerCategory::ALL {
            if self.entries.iter().any(|e| e.category == c) {
                labels.extend(c.context_labels());
            }
        }
        labels
    }

    /// Runs every entry for the selected language over `text`.
    ///
    /// `Auto` on text with kana or CJK runs the Japanese entries. On other
    /// text it runs the English entries together with romanized Japanese
    /// ones, so "Yametai kedo yametakunai" still finds "kedo".
    pub fn detect(&self, text: &str, language: LanguageSelector) -> Result<FeatureVector> {
        if text.trim().is_empty() {
            return Err(Error::EmptyInput);
        }
        let lang = language.resolve(text);
        let romanized_too = language == LanguageSelector::Auto && lang == Language::En;
        let norm = NormalizedText::new(text);
        let tokens = text::tokenize(&norm.chars);

        let mut hits = Vec::new();
        for (entry, compiled) in self.entries.iter().zip(&self.compiled) {
            let wanted = entry.language == lang
                || (romanized_too
                    && entry.language == Language::Jp
                    && !text::contains_japanese_script(&entry.surface));
            if !wanted {
                continue;
            }
            for (s, e) in find_all(&compiled.parts, &norm.chars, &tokens) {
                let (start, end) = norm.original_span(s, e);
                hits.push(MarkerHit {
                    entry: entry.clone(),
                    span: CharSpan { start, end },
                });
            }
        }
        Ok(FeatureVector::from_hits(hits))
    }
}

impl Default for MarkerLexicon {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Free-function form of [`MarkerLexicon::detect`].
pub fn detect_conflict_markers(
    text: &str,
    lexicon: &MarkerLexicon,
    language: LanguageSelector,
) -> Result<FeatureVector> {
    lexicon.detect(text, language)
}

/// Occurrences of one part as normalized-char ranges, starting the search
/// at char offset `from`.
fn part_occurrences(
    part: &Part,
    chars: &[char],
    tokens: &[Token],
    from: usize,
) -> Vec<(usize, usize)> {
    match part {
        Part::Words(words) => {
            let n = words.len();
            if n == 0 || tokens.len() < n {
                return Vec::new();
            }
            (0..=tokens.len() - n)
                .filter(|&i| tokens[i].start >= from)
                .filter(|&i| {
                    tokens[i..i + n]
                        .iter()
                        .zip(words)
                        .all(|(t, w)| &t.text == w)
                })
                .map(|i| (tokens[i].start, tokens[i + n - 1].end))
                .collect()
        }
        Part::Chars(pat) => {
            let n = pat.len();
            if n == 0 || chars.len() < n {
                return Vec::new();
            }
            (from..=chars.len().saturating_sub(n))
                .filter(|&i| chars[i..i + n] == pat[..])
                .map(|i| (i, i + n))
                .collect()
        }
    }
}

/// All matches of a (possibly gapped) pattern. For gapped patterns each
/// occurrence of the first part is completed with the nearest following
/// occurrence of every later part.
fn find_all(parts: &[Part], chars: &[char], tokens: &[Token]) -> Vec<(usize, usize)> {
    let Some((first, rest)) = parts.split_first() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    'outer: for (start, mut end) in part_occurrences(first, chars, tokens, 0) {
        for part in rest {
            match part_occurrences(part, chars, tokens, end).first() {
                Some(&(_, e)) => end = e,
                None => continue 'outer,
            }
        }
        out.push((start, end));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn detect(text: &str, lang: LanguageSelector) -> FeatureVector {
        MarkerLexicon::builtin().detect(text, lang).unwrap()
    }

    fn hit_text(text: &str, h: &MarkerHit) -> String {
        text.chars()
            .skip(h.span.start)
            .take(h.span.end - h.span.start)
            .collect()
    }

    #[test]
    fn builtin_covers_taxonomy() {
        let lex = MarkerLexicon::builtin();
        assert!(lex.contains("but", Language::En, MarkerCategory::Adversative));
        assert!(lex.contains("kamoshirenai", Language::Jp, MarkerCategory::Hedging));
        for c in MarkerCategory::ALL {
            assert!(lex
                .entries()
                .iter()
                .any(|e| e.category() == c && e.language() == Language::En));
            assert!(!c.context_labels().is_empty());
        }
        // no Japanese scope markers are shipped
        assert!(!lex
            .entries()
            .iter()
            .any(|e| e.category() == MarkerCategory::Scope && e.language() == Language::Jp));
    }

    #[test]
    fn adversative_but() {
        let text = "I want to quit my job, but I also don't want to quit.";
        let fv = detect(text, LanguageSelector::Auto);
        assert!(fv.bit(MarkerCategory::Adversative));
        assert_eq!(fv.l1_norm(), 1);
        assert_eq!(fv.hits().len(), 1);
        assert_eq!(hit_text(text, &fv.hits()[0]), "but");
        assert_eq!(fv.hits()[0].span, CharSpan { start: 23, end: 26 });
    }

    #[test]
    fn romanized_japanese() {
        let text = "Yametai kedo yametakunai";
        let fv = detect(text, LanguageSelector::Jp);
        assert!(fv.bit(MarkerCategory::Adversative));
        assert_eq!(hit_text(text, &fv.hits()[0]), "kedo");
        // English lexicon does not know "kedo"
        assert!(!detect(text, LanguageSelector::En).has_conflict());
    }

    #[test]
    fn native_script_is_substring_matched() {
        let text = "行きたいけど行きたくない";
        let fv = detect(text, LanguageSelector::Auto);
        assert!(fv.bit(MarkerCategory::Adversative));
        assert_eq!(fv.hits()[0].span, CharSpan { start: 4, end: 6 });
    }

    #[test]
    fn no_markers() {
        let fv = detect("The cat sat on the mat.", LanguageSelector::Auto);
        assert_eq!(fv.bits(), &[false; CATEGORY_COUNT]);
        assert!(fv.hits().is_empty());
        assert!(!fv.has_conflict());
    }

    #[test]
    fn word_boundaries_and_case() {
        assert!(!detect("I like butter and buttons.", LanguageSelector::En).has_conflict());
        assert!(detect("BUT why?", LanguageSelector::En).bit(MarkerCategory::Adversative));
        assert!(detect("ＢＵＴ why?", LanguageSelector::En).bit(MarkerCategory::Adversative));
    }

    #[test]
    fn multiword_and_gapped_markers() {
        let t = "It is cheap. On the other hand, it is slow.";
        let fv = detect(t, LanguageSelector::En);
        assert!(fv.bit(MarkerCategory::Contrastive));
        assert_eq!(hit_text(t, &fv.hits()[0]), "On the other hand");

        let t = "You can have either tea or coffee.";
        let fv = detect(t, LanguageSelector::En);
        assert!(fv.bit(MarkerCategory::Coordination));
        assert_eq!(hit_text(t, &fv.hits()[0]), "either tea or");

        assert!(!detect("Either way.", LanguageSelector::En).bit(MarkerCategory::Coordination));
        assert!(detect("Maybe I will.", LanguageSelector::En).bit(MarkerCategory::Hedging));
    }

    #[test]
    fn hits_sorted_by_start() {
        let fv = detect(
            "Maybe it is fine, but I think it could break, yet",
            LanguageSelector::En,
        );
        assert!(fv
            .hits()
            .windows(2)
            .all(|w| w[0].span.start <= w[1].span.start));
        assert_eq!(fv.l1_norm(), 4);
    }

    #[test]
    fn empty_input_is_an_error() {
        let lex = MarkerLexicon::builtin();
        assert!(matches!(
            lex.detect("", LanguageSelector::Auto),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            lex.detect("  \n", LanguageSelector::En),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn lexicon_file_round_trip() {
        let lex = MarkerLexicon::builtin();
        let again = MarkerLexicon::from_json(&lex.to_json()).unwrap();
        assert_eq!(again.entries(), lex.entries());
    }

    #[test]
    fn lexicon_file_errors() {
        let err = MarkerLexicon::from_json(
            r#"[{"surface": "but", "language": "en", "category": "adversive", "boundary": "word-bounded"}]"#,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::LexiconValidation { index: 0, .. }),
            "{err}"
        );

        let err = MarkerLexicon::from_json("[\n{\"surface\": \"but\",\n oops}]").unwrap_err();
        assert!(matches!(err, Error::LexiconParse { line: 3, .. }), "{err}");

        let dup = r#"[{"surface": "but", "language": "en", "category": "adversative"},
                      {"surface": "BUT", "language": "en", "category": "adversative"}]"#;
        assert!(matches!(
            MarkerLexicon::from_json(dup),
            Err(Error::LexiconValidation { index: 1, .. })
        ));

        let empty = r#"[{"surface": "  ", "language": "en", "category": "hedging"}]"#;
        assert!(MarkerLexicon::from_json(empty).is_err());
    }

    #[test]
    fn custom_lexicon_detects() {
        let lex = MarkerLexicon::from_json(
            r#"[{"surface": "nevertheless", "language": "en", "category": "adversative"}]"#,
        )
        .unwrap();
        let fv = lex
            .detect("It rained. Nevertheless we went out.", LanguageSelector::En)
            .unwrap();
        assert!(fv.bit(MarkerCategory::Adversative));
        assert!(!lex
            .detect("It rained but we went.", LanguageSelector::En)
            .unwrap()
            .has_conflict());
    }
}
