//! Lexical-richness statistics and the 13-value linguistic feature vector.
//!
//! Every statistic works on word tokens from [`crate::text::tokenize`]. Metrics
//! that are undefined for a given text return a [`MetricError`]; the batch
//! feature builder turns those into missing cells instead of aborting.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::corpus::{Document, FeatureTable};
use crate::error::Result;
use crate::exec::Exec;
use crate::text::{pos_tag, tokenize, PosLexicon, PosTag, TaggedSequence, TokenSequence};

/// Brunet's scaling constant.
pub const BRUNET_A: f64 = 0.172;
/// Segment length for MSTTR.
pub const MSTTR_SEGMENT: usize = 16;
/// Running-TTR cutoff that closes an MTLD factor.
pub const MTLD_THRESHOLD: f64 = 0.72;
/// Sample size for HD-D.
pub const HDD_SAMPLE: usize = 42;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("{metric}: text is empty")]
    EmptyText { metric: &'static str },
    #[error("{metric}: needs at least {needed} tokens, got {got}")]
    TooShort {
        metric: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("{metric}: singular ({reason})")]
    Singular {
        metric: &'static str,
        reason: &'static str,
    },
    #[error("{metric}: undefined ({reason})")]
    Undefined {
        metric: &'static str,
        reason: &'static str,
    },
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
}

type MetricResult<T> = std::result::Result<T, MetricError>;

/// Token, type and hapax counts for one text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LexicalCounts {
    /// N: total words.
    pub total: usize,
    /// V: distinct words.
    pub distinct: usize,
    /// v1: words occurring exactly once.
    pub hapax: usize,
    pub freq: BTreeMap<String, usize>,
}

impl LexicalCounts {
    pub fn from_tokens(seq: &TokenSequence) -> Self {
        let mut freq = BTreeMap::new();
        for t in seq.iter() {
            *freq.entry(t.to_string()).or_insert(0usize) += 1;
        }
        Self::from_freq(freq)
    }

    pub fn from_freq(mut freq: BTreeMap<String, usize>) -> Self {
        freq.retain(|_, c| *c > 0);
        Self {
            total: freq.values().sum(),
            distinct: freq.len(),
            hapax: freq.values().filter(|&&c| c == 1).count(),
            freq,
        }
    }

    /// Counts for a synthetic text whose i-th type occurs `profile[i]` times.
    pub fn from_profile(profile: &[usize]) -> Self {
        Self::from_freq(
            profile
                .iter()
                .enumerate()
                .map(|(i, &c)| (format!("w{i}"), c))
                .collect(),
        )
    }
}

pub fn lexical_counts(seq: &TokenSequence) -> LexicalCounts {
    LexicalCounts::from_tokens(seq)
}

fn require_nonempty(c: &LexicalCounts, metric: &'static str) -> MetricResult<()> {
    if c.total == 0 {
        Err(MetricError::EmptyText { metric })
    } else {
        Ok(())
    }
}

/// Brunet's index `W = N^(V^-a)`. Lower means richer vocabulary.
pub fn brunet_index(c: &LexicalCounts, a: f64) -> MetricResult<f64> {
    require_nonempty(c, "brunet")?;
    Ok((c.total as f64).powf((c.distinct as f64).powf(-a)))
}

/// Honoré's statistic `R = 100 ln N / (1 - v1/V)`.
pub fn honore_statistic(c: &LexicalCounts) -> MetricResult<f64> {
    require_nonempty(c, "honore")?;
    if c.hapax == c.distinct {
        return Err(MetricError::Singular {
            metric: "honore",
            reason: "every word occurs once",
        });
    }
    let denom = 1.0 - c.hapax as f64 / c.distinct as f64;
    Ok(100.0 * (c.total as f64).ln() / denom)
}

/// Shannon word entropy over `log2 N`, both in bits.
pub fn standardized_entropy(c: &LexicalCounts) -> MetricResult<f64> {
    if c.total < 2 {
        return Err(MetricError::TooShort {
            metric: "std_entropy",
            needed: 2,
            got: c.total,
        });
    }
    // H = log2 N - sum f log2 f / N, so the ratio is 1 - sum f log2 f / (N log2 N):
    // exactly 1 when every f is 1 and exactly 0 for a single type
    let n = c.total as f64;
    let s: f64 = c.freq.values().map(|&f| f as f64 * (f as f64).log2()).sum();
    Ok((1.0 - s / (n * n.log2())).clamp(0.0, 1.0))
}

/// Root type-token ratio `V / sqrt(N)`.
pub fn rttr(c: &LexicalCounts) -> MetricResult<f64> {
    require_nonempty(c, "rttr")?;
    Ok(c.distinct as f64 / (c.total as f64).sqrt())
}

/// Plain type-token ratio `V / N`.
pub fn ttr(c: &LexicalCounts) -> MetricResult<f64> {
    require_nonempty(c, "ttr")?;
    Ok(c.distinct as f64 / c.total as f64)
}

fn distinct_count<'a>(words: impl Iterator<Item = &'a str>) -> usize {
    let mut seen: Vec<&str> = words.collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Mean TTR over consecutive full segments of `segment_len` tokens; a trailing
/// partial segment is ignored.
pub fn msttr(seq: &TokenSequence, segment_len: usize) -> MetricResult<f64> {
    if segment_len == 0 {
        return Err(MetricError::InvalidCounts("segment length must be positive".into()));
    }
    if seq.len() < segment_len {
        return Err(MetricError::TooShort {
            metric: "msttr",
            needed: segment_len,
            got: seq.len(),
        });
    }
    let segments: Vec<f64> = seq
        .tokens()
        .chunks_exact(segment_len)
        .map(|seg| distinct_count(seg.iter().map(String::as_str)) as f64 / segment_len as f64)
        .collect();
    Ok(segments.iter().sum::<f64>() / segments.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MtldMode {
    /// Text length over completed factors only.
    #[default]
    Literal,
    /// Adds the fractional trailing factor and averages forward and reversed passes.
    Bidirectional,
}

struct FactorPass {
    completed: usize,
    /// Running TTR of the unfinished trailing factor, if it has any tokens.
    remainder_ttr: Option<f64>,
}

fn factor_pass<'a>(words: impl Iterator<Item = &'a str>, threshold: f64) -> FactorPass {
    let mut seen = std::collections::HashSet::new();
    let mut len = 0usize;
    let mut completed = 0;
    for w in words {
        seen.insert(w);
        len += 1;
        let ttr = seen.len() as f64 / len as f64;
        if ttr <= threshold {
            completed += 1;
            seen.clear();
            len = 0;
        }
    }
    FactorPass {
        completed,
        remainder_ttr: (len > 0).then(|| seen.len() as f64 / len as f64),
    }
}

/// Measure of textual lexical diversity: mean length of segments whose running
/// TTR has dropped to `threshold`.
pub fn mtld(seq: &TokenSequence, threshold: f64, mode: MtldMode) -> MetricResult<f64> {
    if seq.is_empty() {
        return Err(MetricError::EmptyText { metric: "mtld" });
    }
    let n = seq.len() as f64;
    match mode {
        MtldMode::Literal => {
            let pass = factor_pass(seq.iter(), threshold);
            if pass.completed == 0 {
                return Err(MetricError::Undefined {
                    metric: "mtld",
                    reason: "no factor reaches the TTR threshold",
                });
            }
            Ok(n / pass.completed as f64)
        }
        MtldMode::Bidirectional => {
            let score = |pass: FactorPass| {
                let partial = pass
                    .remainder_ttr
                    .map_or(0.0, |t| (1.0 - t) / (1.0 - threshold));
                let factors = pass.completed as f64 + partial;
                (factors > 0.0).then(|| n / factors)
            };
            let fwd = score(factor_pass(seq.iter(), threshold));
            let rev = score(factor_pass(seq.tokens().iter().rev().map(String::as_str), threshold));
            match (fwd, rev) {
                (Some(a), Some(b)) => Ok((a + b) / 2.0),
                _ => Err(MetricError::Undefined {
                    metric: "mtld",
                    reason: "no lexical repetition",
                }),
            }
        }
    }
}

/// Probability that `draws` draws without replacement from `pop` items, of
/// which `successes` are marked, contain no marked item.
///
/// Uses `C(pop-s, d) / C(pop, d) = prod_{i<s} (1 - d/(pop-i))` (or the same
/// product with `s` and `d` swapped), accumulated as a sum of logarithms.
pub fn hypergeom_pmf_zero(pop: usize, successes: usize, draws: usize) -> MetricResult<f64> {
    if successes > pop || draws > pop {
        return Err(MetricError::InvalidCounts(format!(
            "successes {successes} and draws {draws} must not exceed population {pop}"
        )));
    }
    if successes + draws > pop {
        return Ok(0.0);
    }
    let (terms, fixed) = if successes <= draws {
        (successes, draws)
    } else {
        (draws, successes)
    };
    let log_p: f64 = (0..terms)
        .map(|i| (-(fixed as f64) / (pop - i) as f64).ln_1p())
        .sum();
    Ok(log_p.exp())
}

/// HD-D: expected number of distinct types in a random `sample`-token draw.
pub fn hdd(c: &LexicalCounts, sample: usize) -> MetricResult<f64> {
    if c.total < sample {
        return Err(MetricError::TooShort {
            metric: "hdd",
            needed: sample,
            got: c.total,
        });
    }
    c.freq
        .values()
        .map(|&f| hypergeom_pmf_zero(c.total, f, sample).map(|p0| 1.0 - p0))
        .sum()
}

/// Relative frequencies of the counted POS tags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosFrequencies {
    pub verb: f64,
    pub noun: f64,
    pub pronoun: f64,
    pub adverb: f64,
    pub adjective: f64,
}

impl PosFrequencies {
    pub fn as_array(&self) -> [f64; 5] {
        [self.verb, self.noun, self.pronoun, self.adverb, self.adjective]
    }
}

pub fn pos_frequencies(tagged: &TaggedSequence) -> MetricResult<PosFrequencies> {
    if tagged.is_empty() {
        return Err(MetricError::EmptyText { metric: "pos" });
    }
    let n = tagged.len() as f64;
    let share = |tag: PosTag| tagged.tags().filter(|&t| t == tag).count() as f64 / n;
    Ok(PosFrequencies {
        verb: share(PosTag::Verb),
        noun: share(PosTag::Noun),
        pronoun: share(PosTag::Pronoun),
        adverb: share(PosTag::Adverb),
        adjective: share(PosTag::Adjective),
    })
}

/// Column names of the linguistic feature table, in vector order.
pub const LINGUISTIC_FEATURES: [&str; 13] = [
    "brunet",
    "honore",
    "std_entropy",
    "rttr",
    "msttr",
    "mtld",
    "hdd",
    "ttr",
    "verb_freq",
    "noun_freq",
    "pronoun_freq",
    "adverb_freq",
    "adjective_freq",
];

/// The 13 linguistic features of one document; `None` marks an undefined value.
#[derive(Debug, Clone, PartialEq)]
pub struct LinguisticFeatures {
    pub values: [Option<f64>; 13],
}

impl LinguisticFeatures {
    pub fn get(&self, name: &str) -> Option<f64> {
        LINGUISTIC_FEATURES
            .iter()
            .position(|&n| n == name)
            .and_then(|i| self.values[i])
    }

    /// Values with `NaN` in undefined slots.
    pub fn to_row(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }
}

/// Settings for [`linguistic_features`].
#[derive(Debug, Clone, Copy)]
pub struct LinguisticConfig {
    pub brunet_a: f64,
    pub segment_len: usize,
    pub mtld_threshold: f64,
    pub mtld_mode: MtldMode,
    pub hdd_sample: usize,
}

impl Default for LinguisticConfig {
    fn default() -> Self {
        Self {
            brunet_a: BRUNET_A,
            segment_len: MSTTR_SEGMENT,
            mtld_threshold: MTLD_THRESHOLD,
            mtld_mode: MtldMode::Literal,
            hdd_sample: HDD_SAMPLE,
        }
    }
}

fn defined(r: MetricResult<f64>) -> Option<f64> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            log::debug!("{e}");
            None
        }
    }
}

/// Feature vector from an already tagged token sequence.
pub fn linguistic_features(tagged: &TaggedSequence, cfg: &LinguisticConfig) -> LinguisticFeatures {
    let seq = tagged.tokens();
    let c = LexicalCounts::from_tokens(&seq);
    let pos = pos_frequencies(tagged).ok();
    let p = |f: fn(&PosFrequencies) -> f64| pos.as_ref().map(f);
    LinguisticFeatures {
        values: [
            defined(brunet_index(&c, cfg.brunet_a)),
            defined(honore_statistic(&c)),
            defined(standardized_entropy(&c)),
            defined(rttr(&c)),
            defined(msttr(&seq, cfg.segment_len)),
            defined(mtld(&seq, cfg.mtld_threshold, cfg.mtld_mode)),
            defined(hdd(&c, cfg.hdd_sample)),
            defined(ttr(&c)),
            p(|f| f.verb),
            p(|f| f.noun),
            p(|f| f.pronoun),
            p(|f| f.adverb),
            p(|f| f.adjective),
        ],
    }
}

/// Tokenize, tag and score one document.
pub fn linguistic_feature_vector(
    doc: &Document,
    lex: &PosLexicon,
    cfg: &LinguisticConfig,
) -> LinguisticFeatures {
    linguistic_features(&pos_tag(&tokenize(&doc.text), lex), cfg)
}

/// Linguistic feature table for a batch of tagged documents, one row per id.
pub fn linguistic_table(
    ids: &[String],
    tagged: &[TaggedSequence],
    cfg: &LinguisticConfig,
    exec: Exec,
) -> Result<FeatureTable> {
    let rows: Vec<Vec<f64>> = exec.map(tagged, |t| {
        let f = linguistic_features(t, cfg);
        f.to_row()
    });
    let incomplete = rows.iter().filter(|r| r.iter().any(|v| v.is_nan())).count();
    if incomplete > 0 {
        log::warn!("{incomplete} documents have undefined linguistic features");
    }
    FeatureTable::from_rows(
        ids.to_vec(),
        LINGUISTIC_FEATURES.iter().map(|s| s.to_string()).collect(),
        rows,
    )
}
