//! Text preparation: cleaning, tokenization, stop-word removal, label
//! encoding and count vectorization.
//!
//! Everything here is a pure function of its inputs. The vocabulary is built
//! from the training split only and indexes terms in lexicographic
//! (codepoint) order, so feature indices are reproducible across runs.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const URL_PATTERN: &str = r"(?:https?://|www\.)\S+";
const MENTION_PATTERN: &str = r"@\w+";
const PUNCT_PATTERN: &str = r"[\p{P}\p{S}]+";
const DIGIT_PATTERN: &str = r"\p{N}+";

const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords/english.txt");
const BENGALI_STOPWORDS: &str = include_str!("../data/stopwords/bengali.txt");

/// A raw document with its class string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub text: String,
    pub label: String,
}

impl LabeledDocument {
    pub fn new(text: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            label: label.into(),
        }
    }
}

/// Language profile selecting the default stop-word list and casing policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    English,
    Bengali,
}

impl Language {
    pub fn default_stopwords(self) -> StopWords {
        match self {
            Language::English => StopWords::parse(ENGLISH_STOPWORDS),
            Language::Bengali => StopWords::parse(BENGALI_STOPWORDS),
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::English => "english",
            Language::Bengali => "bengali",
        })
    }
}

/// One regex substitution step.
#[derive(Debug, Clone)]
pub struct CleanRule {
    pattern: Regex,
    replacement: String,
}

impl CleanRule {
    pub fn new(pattern: &str, replacement: &str) -> Result<Self> {
        let pattern = Regex::new(pattern)
            .map_err(|e| Error::Config(format!("invalid cleaning rule `{pattern}`: {e}")))?;
        Ok(Self {
            pattern,
            replacement: replacement.to_owned(),
        })
    }

    pub fn pattern(&self) -> &str {
        self.pattern.as_str()
    }
}

/// Ordered list of regex substitutions applied by [`clean_text`].
///
/// Whitespace is always collapsed and trimmed after the user rules run.
#[derive(Debug, Clone)]
pub struct CleaningRules {
    rules: Vec<CleanRule>,
}

impl CleaningRules {
    /// Compiles `(pattern, replacement)` pairs. All patterns are validated
    /// here, so a bad rule is reported before any document is touched.
    pub fn from_pairs<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<Self> {
        let rules = pairs
            .iter()
            .map(|(p, r)| CleanRule::new(p.as_ref(), r.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rules })
    }

    pub fn rules(&self) -> &[CleanRule] {
        &self.rules
    }
}

impl Default for CleaningRules {
    /// URLs, user mentions, punctuation/symbols and digits, each replaced by
    /// a space.
    fn default() -> Self {
        Self::from_pairs(&[
            (URL_PATTERN, " "),
            (MENTION_PATTERN, " "),
            (PUNCT_PATTERN, " "),
            (DIGIT_PATTERN, " "),
        ])
        .expect("built-in cleaning rules compile")
    }
}

/// Applies `rules` in order, then collapses runs of whitespace to a single
/// space and trims the ends.
pub fn clean_text(raw: &str, rules: &CleaningRules) -> String {
    let mut text = raw.to_owned();
    for rule in &rules.rules {
        if let std::borrow::Cow::Owned(s) =
            rule.pattern.replace_all(&text, rule.replacement.as_str())
        {
            text = s;
        }
    }
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits on Unicode whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

/// Stop-word set. Latin-script terms match case-insensitively, everything
/// else (e.g. Bengali, which has no case) matches by exact codepoints.
#[derive(Debug, Clone, Default)]
pub struct StopWords {
    exact: HashSet<String>,
    folded: HashSet<String>,
}

impl StopWords {
    /// One term per line; blank lines and lines starting with `#` are skipped.
    pub fn parse(contents: &str) -> Self {
        let mut stops = Self::default();
        for line in contents.lines() {
            let term = line.trim();
            if term.is_empty() || term.starts_with('#') {
                continue;
            }
            stops.insert(term);
        }
        stops
    }

    pub fn load(path: &Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read stop-word file {}: {e}", path.display()))
        })?;
        Ok(Self::parse(&contents))
    }

    pub fn insert(&mut self, term: &str) {
        if is_latin(term) {
            self.folded.insert(term.to_lowercase());
        } else {
            self.exact.insert(term.to_owned());
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        if is_latin(token) {
            self.folded.contains(&token.to_lowercase())
        } else {
            self.exact.contains(token)
        }
    }

    pub fn len(&self) -> usize {
        self.exact.len() + self.folded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<S: AsRef<str>> FromIterator<S> for StopWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut stops = Self::default();
        for term in iter {
            stops.insert(term.as_ref());
        }
        stops
    }
}

// Basic Latin through Latin Extended-B, plus Latin Extended Additional.
fn is_latin(s: &str) -> bool {
    s.chars()
        .filter(|c| c.is_alphabetic())
        .all(|c| c <= '\u{024F}' || ('\u{1E00}'..='\u{1EFF}').contains(&c))
}

/// Order-preserving filter dropping every token found in `stops`.
pub fn remove_stopwords(tokens: &[String], stops: &StopWords) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stops.contains(t))
        .cloned()
        .collect()
}

/// Mapping between the two observed class strings and bits `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    /// Lexicographically smaller class, encoded as 0.
    pub negative: String,
    /// Lexicographically larger class, encoded as 1.
    pub positive: String,
}

impl LabelMap {
    pub fn encode(&self, class: &str) -> Result<u8> {
        if class == self.negative {
            Ok(0)
        } else if class == self.positive {
            Ok(1)
        } else {
            Err(Error::Dataset(format!(
                "unknown class `{class}` (expected `{}` or `{}`)",
                self.negative, self.positive
            )))
        }
    }

    pub fn decode(&self, bit: u8) -> &str {
        if bit == 0 {
            &self.negative
        } else {
            &self.positive
        }
    }
}

/// Encodes exactly two distinct classes as bits: smaller string → 0.
pub fn encode_labels<S: AsRef<str>>(labels: &[S]) -> Result<(Vec<u8>, LabelMap)> {
    let classes: BTreeSet<&str> = labels.iter().map(AsRef::as_ref).collect();
    if classes.len() != 2 {
        let found: Vec<_> = classes.iter().map(|c| format!("`{c}`")).collect();
        return Err(Error::Dataset(format!(
            "expected exactly two classes, found {}: [{}]",
            classes.len(),
            found.join(", ")
        )));
    }
    let mut it = classes.into_iter();
    let map = LabelMap {
        negative: it.next().unwrap().to_owned(),
        positive: it.next().unwrap().to_owned(),
    };
    let bits = labels
        .iter()
        .map(|l| map.encode(l.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok((bits, map))
}

/// Term → column index, with indices assigned in lexicographic term order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn from_sorted(terms: Vec<String>) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { terms, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Two-column `term,index` CSV with a header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Structural(format!("vocabulary csv: {e}"));
        csv.write_record(["term", "index"]).map_err(io)?;
        for (i, term) in self.terms.iter().enumerate() {
            csv.write_record([term.as_str(), &i.to_string()]).map_err(io)?;
        }
        csv.flush()
            .map_err(|e| Error::Structural(format!("vocabulary csv: {e}")))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut csv = csv::Reader::from_reader(reader);
        let mut terms = Vec::new();
        for (row, record) in csv.records().enumerate() {
            let record = record.map_err(|e| Error::Dataset(format!("vocabulary csv: {e}")))?;
            let bad = || Error::Dataset(format!("vocabulary csv: malformed row {}", row + 2));
            let term = record.get(0).ok_or_else(bad)?;
            let index: usize = record.get(1).ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if index != row {
                return Err(Error::Dataset(format!(
                    "vocabulary csv: index {index} on row {} breaks the 0..V sequence",
                    row + 2
                )));
            }
            terms.push(term.to_owned());
        }
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Dataset(
                "vocabulary csv: terms are not in strictly increasing order".into(),
            ));
        }
        Ok(Self::from_sorted(terms))
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(mut terms: Vec<String>) -> Self {
        terms.sort();
        terms.dedup();
        Self::from_sorted(terms)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.terms
    }
}

/// Builds the vocabulary of every distinct token in `corpus`.
pub fn build_vocabulary<S: AsRef<[String]>>(corpus: &[S]) -> Result<Vocabulary> {
    let distinct: BTreeSet<&str> = corpus
        .iter()
        .flat_map(|doc| doc.as_ref().iter().map(String::as_str))
        .collect();
    if distinct.is_empty() {
        return Err(Error::Dataset(
            "cannot build a vocabulary from an empty corpus".into(),
        ));
    }
    Ok(Vocabulary::from_sorted(
        distinct.into_iter().map(str::to_owned).collect(),
    ))
}

/// Term counts of one document over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVector(pub Vec<u32>);

impl CountVector {
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }
}

/// Counts in-vocabulary tokens; out-of-vocabulary tokens are ignored.
pub fn vectorize(tokens: &[String], vocab: &Vocabulary) -> CountVector {
    let mut counts = vec![0u32; vocab.len()];
    for t in tokens {
        if let Some(i) = vocab.index_of(t) {
            counts[i] += 1;
        }
    }
    CountVector(counts)
}

/// The full per-document text path: clean, optionally lowercase, tokenize,
/// drop stop words.
#[derive(Debug, Clone)]
pub struct TextPipeline {
    pub rules: CleaningRules,
    pub stopwords: StopWords,
    pub lowercase: bool,
}

impl TextPipeline {
    pub fn for_language(language: Language) -> Self {
        Self {
            rules: CleaningRules::default(),
            stopwords: language.default_stopwords(),
            lowercase: language == Language::English,
        }
    }

    pub fn tokens(&self, raw: &str) -> Vec<String> {
        let mut cleaned = clean_text(raw, &self.rules);
        if self.lowercase {
            cleaned = cleaned.to_lowercase();
        }
        remove_stopwords(&tokenize(&cleaned), &self.stopwords)
    }
}
