//! Tokenization and coarse part-of-speech tagging.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUILTIN_LEXICON: &str = include_str!("../data/lexicon.tsv");

/// Lowercased word tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    /// Wrap pre-split tokens. Tokens are lowercased; empty tokens are dropped
    /// and tokens containing whitespace are split.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let tokens = tokens
            .into_iter()
            .flat_map(|t| {
                t.as_ref()
                    .split_whitespace()
                    .map(str::to_lowercase)
                    .collect::<Vec<_>>()
            })
            .collect();
        Self { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Split `text` into lowercase word tokens.
///
/// Letters and digits form words; everything else separates them, except an
/// apostrophe with a word character on both sides (`don't`). Curly
/// apostrophes are normalized to `'`.
pub fn tokenize(text: &str) -> TokenSequence {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase().filter(|l| l.is_alphanumeric()));
        } else if is_apostrophe(c)
            && !cur.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            cur.push('\'');
        } else {
            flush(&mut cur, &mut tokens);
        }
    }
    flush(&mut cur, &mut tokens);
    TokenSequence { tokens }
}

fn flush(cur: &mut String, tokens: &mut Vec<String>) {
    let word = cur.trim_end_matches('\'');
    if !word.is_empty() {
        tokens.push(word.to_string());
    }
    cur.clear();
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosTag {
    Verb,
    Noun,
    Pronoun,
    Adverb,
    Adjective,
    Other,
}

impl PosTag {
    /// The five tags whose frequencies become features, in feature order.
    pub const COUNTED: [PosTag; 5] = [
        PosTag::Verb,
        PosTag::Noun,
        PosTag::Pronoun,
        PosTag::Adverb,
        PosTag::Adjective,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Verb => "verb",
            PosTag::Noun => "noun",
            PosTag::Pronoun => "pronoun",
            PosTag::Adverb => "adverb",
            PosTag::Adjective => "adjective",
            PosTag::Other => "other",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = Error;

    /// Accepts the six coarse names and Universal Dependencies tags.
    fn from_str(s: &str) -> Result<Self> {
        let tag = match s.trim().to_ascii_lowercase().as_str() {
            "verb" | "aux" => PosTag::Verb,
            "noun" | "propn" => PosTag::Noun,
            "pronoun" | "pron" => PosTag::Pronoun,
            "adverb" | "adv" => PosTag::Adverb,
            "adjective" | "adj" => PosTag::Adjective,
            "other" | "det" | "adp" | "cconj" | "sconj" | "part" | "intj" | "num" | "punct"
            | "sym" | "x" => PosTag::Other,
            other => return Err(Error::Schema(format!("unknown POS tag {other:?}"))),
        };
        Ok(tag)
    }
}

/// Word lexicon plus ordered suffix fallbacks.
#[derive(Debug, Clone, PartialEq)]
pub struct PosLexicon {
    entries: HashMap<String, PosTag>,
    suffix_rules: Vec<(String, PosTag)>,
    default_tag: PosTag,
}

impl PosLexicon {
    pub fn new(
        entries: HashMap<String, PosTag>,
        suffix_rules: Vec<(String, PosTag)>,
        default_tag: PosTag,
    ) -> Result<Self> {
        if suffix_rules.iter().any(|(s, _)| s.is_empty()) {
            return Err(Error::InvalidArgument("empty suffix rule".into()));
        }
        Ok(Self {
            entries,
            suffix_rules,
            default_tag,
        })
    }

    /// The bundled English lexicon with the standard suffix rules and `noun` default.
    pub fn builtin() -> Self {
        let entries = parse_lexicon(BUILTIN_LEXICON).expect("bundled lexicon parses");
        Self {
            entries,
            suffix_rules: default_suffix_rules(),
            default_tag: PosTag::Noun,
        }
    }

    /// Parse a `word<TAB>tag` file body; uses the default suffix rules and `noun` default.
    pub fn from_tsv(body: &str) -> Result<Self> {
        Ok(Self {
            entries: parse_lexicon(body)?,
            suffix_rules: default_suffix_rules(),
            default_tag: PosTag::Noun,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn tag_word(&self, word: &str) -> PosTag {
        if let Some(&t) = self.entries.get(word) {
            return t;
        }
        self.suffix_rules
            .iter()
            .find(|(suffix, _)| word.len() > suffix.len() && word.ends_with(suffix.as_str()))
            .map(|&(_, t)| t)
            .unwrap_or(self.default_tag)
    }
}

fn default_suffix_rules() -> Vec<(String, PosTag)> {
    [
        ("ly", PosTag::Adverb),
        ("ing", PosTag::Verb),
        ("ed", PosTag::Verb),
        ("ize", PosTag::Verb),
        ("ous", PosTag::Adjective),
        ("ful", PosTag::Adjective),
        ("ive", PosTag::Adjective),
        ("able", PosTag::Adjective),
    ]
    .into_iter()
    .map(|(s, t)| (s.to_string(), t))
    .collect()
}

fn parse_lexicon(body: &str) -> Result<HashMap<String, PosTag>> {
    let mut entries = HashMap::new();
    for (n, line) in body.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (word, tag) = line
            .split_once('\t')
            .ok_or_else(|| Error::Schema(format!("lexicon line {}: expected word<TAB>tag", n + 1)))?;
        let tag: PosTag = tag.parse()?;
        entries.entry(word.trim().to_lowercase()).or_insert(tag);
    }
    Ok(entries)
}

/// `(token, tag)` pairs aligned with a token sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaggedSequence {
    pairs: Vec<(String, PosTag)>,
}

impl TaggedSequence {
    pub fn new(pairs: Vec<(String, PosTag)>) -> Self {
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(String, PosTag)] {
        &self.pairs
    }

    pub fn tags(&self) -> impl Iterator<Item = PosTag> + '_ {
        self.pairs.iter().map(|&(_, t)| t)
    }

    pub fn tokens(&self) -> TokenSequence {
        TokenSequence::from_tokens(self.pairs.iter().map(|(w, _)| w.as_str()))
    }
}

pub fn pos_tag(seq: &TokenSequence, lex: &PosLexicon) -> TaggedSequence {
    TaggedSequence {
        pairs: seq
            .iter()
            .map(|w| (w.to_string(), lex.tag_word(w)))
            .collect(),
    }
}

/// Parse a pre-tagged document: one `token<TAB>tag` per line, blank lines ignored.
pub fn parse_pretagged(body: &str) -> Result<TaggedSequence> {
    let mut pairs = Vec::new();
    for (n, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (tok, tag) = line
            .split_once('\t')
            .ok_or_else(|| Error::Schema(format!("line {}: expected token<TAB>tag", n + 1)))?;
        let tok = tok.trim().to_lowercase();
        if tok.is_empty() || tok.contains(char::is_whitespace) {
            return Err(Error::Schema(format!("line {}: invalid token {tok:?}", n + 1)));
        }
        pairs.push((tok, tag.parse()?));
    }
    Ok(TaggedSequence { pairs })
}
