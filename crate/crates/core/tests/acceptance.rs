//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p adscreen-core --test acceptance`. The process exits
//! non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use adscreen_core::corpus::{load_feature_table, load_labels, load_transcripts, split_indices, AlignMode, TranscriptOptions};
use adscreen_core::evaluation::{
    cross_validate, fit_fold, metrics, stratified_kfold, table2_csv, table2_text, table3_csv, table3_text,
    train_test_evaluate, ConfusionMatrix, CvReport, MetricsReport, TABLE2_HEADER, TABLE3_HEADER,
};
use adscreen_core::learners::{
    best_split, loss_and_gradient, train_logreg, train_svm, Classifier, ForestConfig, LogRegConfig, Matrix, ModelConfig,
    SvmConfig, SvmModel, TrainedModel,
};
use adscreen_core::lexical::*;
use adscreen_core::pipeline::{
    acoustic_input, bert_tfidf_input, linguistic_input, LabeledInput, ModelId, PipelineConfig, PipelineInput,
};
use adscreen_core::selection::{rfe, RfeConfig};
use adscreen_core::text::{pos_tag, tokenize, PosLexicon, PosTag, TaggedSequence, TokenSequence};
use adscreen_core::vectorize::{fit_tfidf, tfidf_table};
use adscreen_core::{Dataset, Exec, FeatureTable, Label};

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn rel_close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * want.abs().max(1.0)
}

fn expect(name: &str, got: f64, want: f64) -> Result<(), String> {
    if rel_close(got, want, 1e-9) {
        Ok(())
    } else {
        Err(format!("{name}: got {got}, want {want}"))
    }
}

fn seq(words: &[&str]) -> TokenSequence {
    TokenSequence::from_tokens(words.iter().copied())
}

fn repeated(word: &str, n: usize) -> TokenSequence {
    TokenSequence::from_tokens(std::iter::repeat_n(word, n))
}

fn distinct(n: usize) -> TokenSequence {
    TokenSequence::from_tokens((0..n).map(|i| format!("t{i}")))
}

/// Tokens for a frequency profile, type `w{i}` repeated `profile[i]` times, in type order.
fn profile_tokens(profile: &[usize]) -> TokenSequence {
    TokenSequence::from_tokens(
        profile
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(format!("w{i}"), c)),
    )
}

fn counts(seq: &TokenSequence) -> LexicalCounts {
    lexical_counts(seq)
}

// ---------------------------------------------------------------- lexical

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::default();
    }
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn exact_p0(pop: usize, successes: usize, draws: usize) -> f64 {
    let num = binomial(pop - successes, draws);
    let den = binomial(pop, draws);
    // scale before converting so both fit comfortably in f64
    let scale = BigUint::from(10u32).pow(30);
    (num * &scale / den).to_f64().unwrap() / scale.to_f64().unwrap()
}

fn exact_hdd(c: &LexicalCounts, sample: usize) -> f64 {
    c.freq.values().map(|&f| 1.0 - exact_p0(c.total, f, sample)).sum()
}

fn monte_carlo_hdd(tokens: &[String], sample: usize, draws: usize, seed: u64) -> f64 {
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut pool: Vec<usize> = tokens
        .iter()
        .map(|t| {
            let n = ids.len();
            *ids.entry(t.as_str()).or_insert(n)
        })
        .collect();
    let mut stamp = vec![usize::MAX; ids.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0usize;
    for d in 0..draws {
        let (picked, _) = pool.partial_shuffle(&mut rng, sample);
        for &t in picked.iter() {
            if stamp[t] != d {
                stamp[t] = d;
                total += 1;
            }
        }
    }
    total as f64 / draws as f64
}

/// Spoken picture description in the style of the transcripts this crate scores.
const PARAGRAPH: &str = "Okay so in the picture there is a kitchen and there is a mother standing at \
the sink and she is drying a dish. The water is running over the sink and it is going onto the floor \
and she does not seem to notice it. Then there is a little boy and he is up on a stool and he is \
reaching up into the cupboard to get the cookies out of the cookie jar. And the stool is tipping over \
so he is going to fall down. His sister is standing next to him and she is reaching up for a cookie \
too and she has her finger up to her mouth like she is telling him to be quiet so the mother does not \
hear them. The cupboard door is open. There are some dishes on the counter, two cups and a plate I \
think. Out the window you can see the garden and some bushes and the path going up to another house. \
The curtains are open. The mother is just looking out the window and the water is still running. So \
the boy is taking the cookies and the girl wants one and the mother is not watching them at all and \
the floor is getting wet. That is what I see in the picture.";

fn lexical_known_answers() -> Outcome {
    // counts
    let c = counts(&seq(&["a", "a", "b"]));
    check!((c.total, c.distinct, c.hapax) == (3, 2, 1), "counts [a,a,b]: {c:?}");
    let c = counts(&TokenSequence::default());
    check!((c.total, c.distinct, c.hapax) == (0, 0, 0), "counts of empty text: {c:?}");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut profile = vec![1usize; 25];
    profile.extend([3usize; 25]);
    let mut toks: Vec<String> = profile_tokens(&profile).tokens().to_vec();
    toks.shuffle(&mut rng);
    let mut tally: HashMap<&str, usize> = HashMap::new();
    for t in &toks {
        *tally.entry(t).or_default() += 1;
    }
    let c = counts(&TokenSequence::from_tokens(toks.iter().cloned()));
    check!(
        (c.total, c.distinct, c.hapax) == (toks.len(), tally.len(), tally.values().filter(|&&n| n == 1).count()),
        "counts disagree with tally"
    );
    check!((c.total, c.distinct, c.hapax) == (100, 50, 25), "100-token profile: {c:?}");

    // brunet
    expect("brunet N=1 V=1", brunet_index(&counts(&seq(&["a"])), BRUNET_A).unwrap(), 1.0)?;
    let c100 = LexicalCounts::from_profile(&profile);
    let direct = (BRUNET_A.mul_add(-(50f64.ln()), 0.0).exp() * 100f64.ln()).exp();
    expect("brunet N=100 V=50", brunet_index(&c100, BRUNET_A).unwrap(), direct)?;
    check!((direct - 10.48).abs() < 0.005, "brunet oracle {direct} not near 10.48");
    let para = counts(&tokenize(PARAGRAPH));
    let w = brunet_index(&para, BRUNET_A).unwrap();
    check!((150..=250).contains(&para.total), "paragraph has {} words", para.total);
    check!((10.0..=20.0).contains(&w), "brunet of a natural paragraph is {w}");
    check!(brunet_index(&LexicalCounts::default(), BRUNET_A).is_err(), "brunet of empty text");

    // honore
    let no_hapax = LexicalCounts::from_profile(&[2; 50]);
    expect("honore v1=0", honore_statistic(&no_hapax).unwrap(), 100.0 * 100f64.ln())?;
    expect("honore v1=25", honore_statistic(&c100).unwrap(), 100.0 * 100f64.ln() / 0.5)?;
    check!(
        matches!(honore_statistic(&LexicalCounts::from_profile(&[1; 10])), Err(MetricError::Singular { .. })),
        "honore with v1 = V must be singular"
    );

    // entropy
    expect("entropy aaaa", standardized_entropy(&counts(&repeated("a", 4))).unwrap(), 0.0)?;
    expect("entropy distinct", standardized_entropy(&counts(&distinct(37))).unwrap(), 1.0)?;
    expect("entropy aabb", standardized_entropy(&counts(&seq(&["a", "a", "b", "b"]))).unwrap(), 0.5)?;
    check!(standardized_entropy(&counts(&seq(&["a"]))).is_err(), "entropy with N=1");

    // rttr
    let c16 = counts(&TokenSequence::from_tokens((0..16).map(|i| format!("t{}", i % 8))));
    expect("rttr 16/8", rttr(&c16).unwrap(), 2.0)?;
    expect("rttr distinct", rttr(&counts(&distinct(49))).unwrap(), 7.0)?;
    expect("rttr N=100 V=50", rttr(&c100).unwrap(), 5.0)?;
    check!(rttr(&LexicalCounts::default()).is_err(), "rttr of empty text");

    // msttr
    expect("msttr identical", msttr(&repeated("a", 16), MSTTR_SEGMENT).unwrap(), 0.0625)?;
    let mut two = distinct(16).tokens().to_vec();
    two.extend(repeated("z", 16).tokens().iter().cloned());
    expect("msttr two segments", msttr(&TokenSequence::from_tokens(two), MSTTR_SEGMENT).unwrap(), 0.53125)?;
    expect("msttr distinct", msttr(&distinct(16), MSTTR_SEGMENT).unwrap(), 1.0)?;
    check!(msttr(&distinct(15), MSTTR_SEGMENT).is_err(), "msttr below one segment");

    // mtld
    let s = seq(&["a", "b", "c", "d", "e", "a", "a", "a", "a", "a"]);
    expect("mtld two factors", mtld(&s, MTLD_THRESHOLD, MtldMode::Literal).unwrap(), 5.0)?;
    check!(
        matches!(mtld(&distinct(30), MTLD_THRESHOLD, MtldMode::Literal), Err(MetricError::Undefined { .. })),
        "mtld of all-distinct text must be undefined"
    );
    expect("mtld repeated", mtld(&repeated("a", 10), MTLD_THRESHOLD, MtldMode::Literal).unwrap(), 2.0)?;

    // hypergeometric kernel
    expect("p0 certain", hypergeom_pmf_zero(42, 42, 42).unwrap(), 0.0)?;
    expect("p0 vacuous", hypergeom_pmf_zero(42, 0, 17).unwrap(), 1.0)?;
    let want = binomial(47, 42).to_f64().unwrap() / binomial(50, 42).to_f64().unwrap();
    expect("p0 50/3/42", hypergeom_pmf_zero(50, 3, 42).unwrap(), want)?;
    let mut worst_p0: f64 = 0.0;
    for _ in 0..200 {
        let pop = rng.random_range(42..=500);
        let s = rng.random_range(0..=pop);
        let d = rng.random_range(0..=pop.min(60));
        let got = hypergeom_pmf_zero(pop, s, d).unwrap();
        let exact = exact_p0(pop, s, d);
        worst_p0 = worst_p0.max((got - exact).abs());
    }
    check!(worst_p0 <= 1e-9, "hypergeometric kernel off by {worst_p0:e}");

    // hdd
    expect("hdd identical", hdd(&counts(&repeated("a", 42)), HDD_SAMPLE).unwrap(), 1.0)?;
    expect("hdd distinct", hdd(&counts(&distinct(42)), HDD_SAMPLE).unwrap(), 42.0)?;
    check!(
        matches!(hdd(&counts(&distinct(41)), HDD_SAMPLE), Err(MetricError::TooShort { .. })),
        "hdd below 42 tokens must be an error"
    );
    let mut worst_exact: f64 = 0.0;
    let mut worst_mc: f64 = 0.0;
    for (i, n) in [42usize, 50, 97, 180, 333, 500].into_iter().enumerate() {
        let mut words: Vec<String> = (0..n)
            .map(|_| {
                // Zipf-like draw over 150 types
                let r: f64 = rng.random();
                format!("w{}", (150f64.powf(r) - 1.0) as usize)
            })
            .collect();
        words.shuffle(&mut rng);
        let c = counts(&TokenSequence::from_tokens(words.iter().cloned()));
        let got = hdd(&c, HDD_SAMPLE).unwrap();
        worst_exact = worst_exact.max((got - exact_hdd(&c, HDD_SAMPLE)).abs());
        let mc = monte_carlo_hdd(&words, HDD_SAMPLE, 100_000, 1000 + i as u64);
        worst_mc = worst_mc.max((got - mc).abs());
    }
    check!(worst_exact <= 1e-9, "hdd off the exact oracle by {worst_exact:e}");
    check!(worst_mc <= 0.01, "hdd off the Monte-Carlo estimate by {worst_mc}");

    // pos
    let tagged = TaggedSequence::new(vec![("he".into(), PosTag::Pronoun), ("runs".into(), PosTag::Verb)]);
    let f = pos_frequencies(&tagged).unwrap().as_array();
    check!(f == [0.5, 0.0, 0.5, 0.0, 0.0], "pos [he,runs]: {f:?}");
    let other = TaggedSequence::new((0..5).map(|i| (format!("x{i}"), PosTag::Other)).collect());
    check!(pos_frequencies(&other).unwrap().as_array() == [0.0; 5], "all-other tags");
    let ten = TaggedSequence::new(
        (0..10)
            .map(|i| (format!("x{i}"), if i < 3 { PosTag::Noun } else { PosTag::Other }))
            .collect(),
    );
    expect("noun 3/10", pos_frequencies(&ten).unwrap().noun, 0.3)?;
    check!(pos_frequencies(&TaggedSequence::new(vec![])).is_err(), "pos of empty text");

    // full vector
    let cfg = LinguisticConfig::default();
    let tags = [PosTag::Verb, PosTag::Noun, PosTag::Pronoun, PosTag::Adverb, PosTag::Adjective, PosTag::Other];
    let words = profile_tokens(&profile);
    let tagged = TaggedSequence::new(
        words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.to_string(), tags[i % tags.len()]))
            .collect(),
    );
    let v = linguistic_features(&tagged, &cfg);
    let oracle = [
        ("brunet", direct),
        ("honore", 100.0 * 100f64.ln() / 0.5),
        ("rttr", 5.0),
        ("ttr", 0.5),
        ("hdd", exact_hdd(&c100, 42)),
        ("verb_freq", 17.0 / 100.0),
        ("adjective_freq", 16.0 / 100.0),
    ];
    for (name, want) in oracle {
        expect(name, v.get(name).unwrap(), want)?;
    }
    let h: f64 = c100.freq.values().map(|&n| n as f64 / 100.0).map(|p| -p * p.log2()).sum();
    expect("std_entropy", v.get("std_entropy").unwrap(), h / 100f64.log2())?;
    let segs: f64 = words.tokens().chunks(16).filter(|s| s.len() == 16).map(|s| {
        s.iter().collect::<BTreeSet<_>>().len() as f64 / 16.0
    }).sum::<f64>() / 6.0;
    expect("msttr", v.get("msttr").unwrap(), segs)?;

    let empty = linguistic_features(&TaggedSequence::new(vec![]), &cfg);
    check!(LINGUISTIC_FEATURES.iter().all(|n| empty.get(n).is_none()), "empty document must be fully undefined");
    let same = linguistic_features(
        &TaggedSequence::new((0..42).map(|_| ("the".to_string(), PosTag::Other)).collect()),
        &cfg,
    );
    check!(same.get("brunet").is_some(), "brunet of 42 identical words");
    expect("honore 42 identical", same.get("honore").unwrap(), 100.0 * 42f64.ln())?;
    expect("hdd 42 identical", same.get("hdd").unwrap(), 1.0)?;

    Ok(format!(
        "hdd exact err {worst_exact:.1e}, Monte-Carlo err {worst_mc:.4}, brunet(paragraph) {w:.2}"
    ))
}

// ------------------------------------------------------------ monotonicity

/// Random profile with `v` types summing to `n` (requires v <= n).
fn random_profile(rng: &mut ChaCha8Rng, n: usize, v: usize) -> Vec<usize> {
    let mut p = vec![1usize; v];
    for _ in 0..n - v {
        let i = rng.random_range(0..v);
        p[i] += 1;
    }
    p
}

/// Profile with exactly `v1` hapaxes among `v` types summing to `n`.
fn hapax_profile(rng: &mut ChaCha8Rng, n: usize, v: usize, v1: usize) -> Vec<usize> {
    let rich = v - v1;
    let mut p = vec![1usize; v1];
    let mut rest = vec![2usize; rich];
    for _ in 0..n - v1 - 2 * rich {
        let i = rng.random_range(0..rich);
        rest[i] += 1;
    }
    p.extend(rest);
    p
}

fn monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let trials = 200;
    for _ in 0..trials {
        let n = rng.random_range(10..3000);
        let v1 = rng.random_range(1..n);
        let v2 = rng.random_range(v1 + 1..=n);
        let a = brunet_index(&LexicalCounts::from_profile(&random_profile(&mut rng, n, v1)), BRUNET_A).unwrap();
        let b = brunet_index(&LexicalCounts::from_profile(&random_profile(&mut rng, n, v2)), BRUNET_A).unwrap();
        check!(a > b, "brunet not decreasing: N={n} V {v1}->{v2}: {a} -> {b}");
    }
    for _ in 0..trials {
        let n = rng.random_range(20..3000);
        // v <= n/2 leaves room for any hapax count below the singular v1 = V
        let v = rng.random_range(3..=n / 2);
        let a = rng.random_range(0..v - 1);
        let b = rng.random_range(a + 1..v);
        let ra = honore_statistic(&LexicalCounts::from_profile(&hapax_profile(&mut rng, n, v, a))).unwrap();
        let rb = honore_statistic(&LexicalCounts::from_profile(&hapax_profile(&mut rng, n, v, b))).unwrap();
        check!(ra < rb, "honore not increasing: N={n} V={v} v1 {a}->{b}: {ra} -> {rb}");
    }
    // honore across different V at fixed N, ordered by v1/V
    for _ in 0..trials {
        let n = rng.random_range(40..2000);
        let va = rng.random_range(2..=n / 3);
        let vb = rng.random_range(2..=n / 3);
        let ha = rng.random_range(0..va);
        let hb = rng.random_range(0..vb);
        let (ra, rb) = (ha as f64 / va as f64, hb as f64 / vb as f64);
        if ra == rb {
            continue;
        }
        let xa = honore_statistic(&LexicalCounts::from_profile(&hapax_profile(&mut rng, n, va, ha))).unwrap();
        let xb = honore_statistic(&LexicalCounts::from_profile(&hapax_profile(&mut rng, n, vb, hb))).unwrap();
        check!((ra < rb) == (xa < xb), "honore order disagrees with v1/V: {ra} vs {rb}, {xa} vs {xb}");
    }
    let mut ends = (0, 0);
    for t in 0..trials {
        let n = rng.random_range(2..500);
        let v = match t % 4 {
            0 => 1,
            1 => n,
            _ => rng.random_range(1..=n),
        };
        let c = LexicalCounts::from_profile(&random_profile(&mut rng, n, v));
        let e = standardized_entropy(&c).unwrap();
        check!((0.0..=1.0).contains(&e), "entropy {e} outside [0,1] for N={n} V={v}");
        check!((e == 1.0) == (v == n), "entropy {e} with N={n} V={v}: max iff all distinct");
        check!((e == 0.0) == (v == 1), "entropy {e} with V={v}: zero iff one type");
        ends.0 += usize::from(v == 1);
        ends.1 += usize::from(v == n);
    }

    // permutation behaviour
    let lex = PosLexicon::builtin();
    let cfg = LinguisticConfig::default();
    for _ in 0..trials {
        let n = rng.random_range(42..300);
        let v = rng.random_range(2..=n / 2);
        let mut words = profile_tokens(&random_profile(&mut rng, n, v)).tokens().to_vec();
        let base = linguistic_features(&pos_tag(&TokenSequence::from_tokens(words.iter().cloned()), &lex), &cfg);
        words.shuffle(&mut rng);
        let perm = linguistic_features(&pos_tag(&TokenSequence::from_tokens(words.iter().cloned()), &lex), &cfg);
        for name in ["brunet", "honore", "std_entropy", "rttr", "hdd", "ttr", "verb_freq", "noun_freq"] {
            check!(base.get(name) == perm.get(name), "{name} changed under permutation");
        }
    }
    let mut block = distinct(16).tokens().to_vec();
    block.extend(repeated("z", 16).tokens().iter().cloned());
    let mut mixed = Vec::new();
    for w in &block[..16] {
        mixed.push(w.clone());
        mixed.push("z".to_string());
    }
    let (a, b) = (TokenSequence::from_tokens(block), TokenSequence::from_tokens(mixed));
    check!(rttr(&counts(&a)).unwrap() == rttr(&counts(&b)).unwrap(), "rttr differs across a permutation");
    let (ma, mb) = (msttr(&a, 16).unwrap(), msttr(&b, 16).unwrap());
    check!(ma != mb, "msttr should be order-sensitive: {ma} vs {mb}");
    let fwd = seq(&["a", "b", "c", "d", "e", "a", "a", "a", "a", "a"]);
    let perm = seq(&["a", "a", "a", "a", "a", "a", "b", "c", "d", "e"]);
    let (ta, tb) = (
        mtld(&fwd, MTLD_THRESHOLD, MtldMode::Literal).unwrap(),
        mtld(&perm, MTLD_THRESHOLD, MtldMode::Literal).unwrap(),
    );
    check!(ta != tb, "mtld should be order-sensitive: {ta} vs {tb}");

    Ok(format!(
        "{trials} profiles per property, entropy endpoints hit {}/{} times, msttr {ma} vs {mb}, mtld {ta} vs {tb}",
        ends.0, ends.1
    ))
}

// ------------------------------------------------------------------ tf-idf

fn tfidf_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let vocab: Vec<String> = (0..40).map(|i| format!("term{i:02}")).collect();
    let docs: Vec<TokenSequence> = (0..50)
        .map(|_| {
            let len = rng.random_range(0..60);
            let spread = rng.random_range(1..=vocab.len());
            TokenSequence::from_tokens((0..len).map(|_| vocab[rng.random_range(0..spread)].clone()))
        })
        .collect();
    let ids: Vec<String> = (0..50).map(|i| format!("d{i}")).collect();
    let model = fit_tfidf(&docs, 1).map_err(|e| e.to_string())?;
    let table = tfidf_table(&model, &ids, &docs, Exec::Serial).map_err(|e| e.to_string())?;

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for d in &docs {
        for t in d.tokens().iter().collect::<BTreeSet<_>>() {
            *df.entry(t).or_default() += 1;
        }
    }
    let terms: Vec<&str> = df.keys().copied().collect();
    check!(table.columns() == terms.as_slice(), "vocabulary differs from the brute-force term list");
    let n = docs.len() as f64;
    let mut worst: f64 = 0.0;
    for (r, d) in docs.iter().enumerate() {
        for (c, t) in terms.iter().enumerate() {
            let tf = d.tokens().iter().filter(|x| x.as_str() == *t).count() as f64;
            let want = tf * (n / df[t] as f64).ln();
            worst = worst.max((table.get(r, c) - want).abs());
        }
    }
    check!(worst <= 1e-12, "max deviation {worst:e}");
    Ok(format!("{} docs x {} terms, max deviation {worst:.1e}", docs.len(), terms.len()))
}

// ------------------------------------------------------------- classifiers

static SVM_RUNS: Mutex<Vec<(String, f64, f64, f64)>> = Mutex::new(Vec::new());

fn svm(name: &str, x: &Matrix, y: &[Label], cfg: &SvmConfig) -> SvmModel {
    let m = train_svm(x, y, cfg, Exec::default()).expect("svm trains");
    let max_alpha = m.alphas().fold(0.0, f64::max);
    let min_alpha = m.alphas().fold(f64::INFINITY, f64::min);
    SVM_RUNS
        .lock()
        .unwrap()
        .push((name.to_string(), min_alpha, max_alpha - m.c, m.equality_residual()));
    m
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn blobs(rng: &mut ChaCha8Rng, n: usize, sep: f64) -> (Matrix, Vec<Label>) {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let l = if i % 2 == 0 { Label::Ad } else { Label::Cn };
        let c = if l == Label::Ad { sep } else { -sep };
        rows.push(vec![c + gaussian(rng), c + gaussian(rng)]);
        y.push(l);
    }
    (Matrix::from_rows(&rows).unwrap(), y)
}

fn circles(rng: &mut ChaCha8Rng, n: usize) -> (Matrix, Vec<Label>) {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let l = if i % 2 == 0 { Label::Ad } else { Label::Cn };
        let r = if l == Label::Ad { 0.5 } else { 1.5 } + 0.1 * gaussian(rng);
        let t = rng.random_range(0.0..std::f64::consts::TAU);
        rows.push(vec![r * t.cos(), r * t.sin()]);
        y.push(l);
    }
    (Matrix::from_rows(&rows).unwrap(), y)
}

fn xor(rng: &mut ChaCha8Rng, n: usize) -> (Matrix, Vec<Label>) {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let (sx, sy) = [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)][i % 4];
        rows.push(vec![sx * rng.random_range(0.05..1.0), sy * rng.random_range(0.05..1.0)]);
        y.push(if i % 4 < 2 { Label::Ad } else { Label::Cn });
    }
    (Matrix::from_rows(&rows).unwrap(), y)
}

fn accuracy(pred: &[Label], truth: &[Label]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

fn cv_accuracy(cfg: &ModelConfig, x: &Matrix, y: &[Label], k: usize, seed: u64) -> f64 {
    let folds = stratified_kfold(y, k, seed).unwrap();
    let mut hits = 0usize;
    for test in &folds {
        let train: Vec<usize> = (0..y.len()).filter(|i| !test.contains(i)).collect();
        let ty: Vec<Label> = train.iter().map(|&i| y[i]).collect();
        let model = TrainedModel::train(cfg, &x.select_rows(&train), &ty, Exec::default()).unwrap();
        let pred = model.predict(&x.select_rows(test), Exec::default()).unwrap();
        hits += test.iter().zip(&pred).filter(|(&i, p)| y[i] == **p).count();
    }
    hits as f64 / y.len() as f64
}

fn classifier_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);

    // (a) gradient check
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (n, p) = (30, 5);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| gaussian(&mut rng)).collect()).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<Label> = (0..n).map(|_| if rng.random_bool(0.5) { Label::Ad } else { Label::Cn }).collect();
        let w: Vec<f64> = (0..p).map(|_| gaussian(&mut rng)).collect();
        let b = gaussian(&mut rng);
        let l2 = 1e-2;
        let (_, gw, gb) = loss_and_gradient(&x, &y, &w, b, l2);
        let h = 1e-5;
        let loss = |w: &[f64], b: f64| loss_and_gradient(&x, &y, w, b, l2).0;
        let mut fd = Vec::with_capacity(p + 1);
        for j in 0..p {
            let (mut up, mut dn) = (w.clone(), w.clone());
            up[j] += h;
            dn[j] -= h;
            fd.push((loss(&up, b) - loss(&dn, b)) / (2.0 * h));
        }
        fd.push((loss(&w, b + h) - loss(&w, b - h)) / (2.0 * h));
        let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
        let diff = analytic.iter().zip(&fd).map(|(a, f)| (a - f).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(diff / scale);
    }
    check!(worst < 1e-5, "gradient relative error {worst:e}");

    // (b) separable training sets
    let (x, y) = blobs(&mut rng, 200, 2.0);
    let lr = train_logreg(&x, &y, &LogRegConfig::default()).unwrap();
    let pred: Vec<Label> = x.iter_rows().map(|r| if lr.predict_proba(r) > 0.5 { Label::Ad } else { Label::Cn }).collect();
    let lr_blobs = accuracy(&pred, &y);
    check!(lr_blobs >= 0.95, "logreg on blobs: {lr_blobs}");
    let (cx, cy) = circles(&mut rng, 200);
    let model = svm("circles", &cx, &cy, &SvmConfig::default());
    let pred: Vec<Label> = cx.iter_rows().map(|r| if model.decision(r) > 0.0 { Label::Ad } else { Label::Cn }).collect();
    let svm_circles = accuracy(&pred, &cy);
    check!(svm_circles >= 0.95, "degree-4 svm on circles: {svm_circles}");

    // (c) xor
    let (xx, xy) = xor(&mut rng, 200);
    let rf = cv_accuracy(&ModelConfig::Forest(ForestConfig { seed: 5, ..Default::default() }), &xx, &xy, 5, 3);
    let lr = cv_accuracy(&ModelConfig::LogReg(LogRegConfig::default()), &xx, &xy, 5, 3);
    check!(rf >= 0.90, "forest CV accuracy on xor: {rf}");
    check!(lr <= 0.65, "logreg CV accuracy on xor: {lr}");
    Ok(format!(
        "grad err {worst:.1e}, logreg blobs {lr_blobs:.3}, svm circles {svm_circles:.3}, xor CV forest {rf:.3} / logreg {lr:.3}"
    ))
}

fn svm_feasibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for (i, c) in [0.01, 0.1, 1.0, 10.0, 100.0].into_iter().enumerate() {
        let (x, y) = blobs(&mut rng, 120, 0.6);
        svm(&format!("overlap C={c}"), &x, &y, &SvmConfig { c, ..Default::default() });
        let (x, y) = xor(&mut rng, 80 + 20 * i);
        svm(&format!("xor C={c}"), &x, &y, &SvmConfig { c, ..Default::default() });
        for degree in [1, 2, 3] {
            let (x, y) = circles(&mut rng, 100);
            svm(&format!("circles d={degree} C={c}"), &x, &y, &SvmConfig { c, degree, ..Default::default() });
        }
    }
    let runs = SVM_RUNS.lock().unwrap();
    let mut worst_eq: f64 = 0.0;
    for (name, min_alpha, over_c, residual) in runs.iter() {
        check!(*min_alpha >= 0.0, "{name}: negative multiplier {min_alpha}");
        check!(*over_c <= 0.0, "{name}: multiplier exceeds C by {over_c:e}");
        check!(*residual < 1e-6, "{name}: |sum alpha y| = {residual:e}");
        worst_eq = worst_eq.max(*residual);
    }
    Ok(format!("{} runs, max |sum alpha y| {worst_eq:.1e}", runs.len()))
}

// -------------------------------------------------------------- best split

/// Weighted Gini times n/2 as an exact fraction: la*lc/nl + ra*rc/nr.
fn split_cost(la: i128, lc: i128, ra: i128, rc: i128) -> (i128, i128) {
    let (nl, nr) = (la + lc, ra + rc);
    (la * lc * nr + ra * rc * nl, nl * nr)
}

fn exhaustive_split(x: &Matrix, y: &[Label]) -> Option<(usize, f64)> {
    let ad = y.iter().filter(|l| l.is_positive()).count() as i128;
    let cn = y.len() as i128 - ad;
    let mut best = (ad * cn, y.len() as i128);
    let mut choice = None;
    for f in 0..x.cols() {
        let mut values: Vec<f64> = (0..x.rows()).map(|i| x.get(i, f)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let left = |i: usize| x.get(i, f) <= t;
            let count = |side: bool, pos: bool| {
                (0..x.rows()).filter(|&i| left(i) == side && y[i].is_positive() == pos).count() as i128
            };
            let cost = split_cost(count(true, true), count(true, false), count(false, true), count(false, false));
            if cost.0 * best.1 < best.0 * cost.1 {
                best = cost;
                choice = Some((f, t));
            }
        }
    }
    choice
}

fn best_split_exhaustive() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let mut none = 0;
    for trial in 0..100 {
        let p = rng.random_range(1..=4);
        let levels = rng.random_range(2..=8);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..p).map(|_| rng.random_range(0..levels) as f64 / 4.0).collect())
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let bias = rng.random_range(0.1..0.9);
        let y: Vec<Label> = (0..20).map(|_| if rng.random_bool(bias) { Label::Ad } else { Label::Cn }).collect();
        let got = best_split(&x, &y, &(0..20).collect::<Vec<_>>(), &(0..p).collect::<Vec<_>>())
            .map(|s| (s.feature, s.threshold));
        let want = exhaustive_split(&x, &y);
        check!(got == want, "instance {trial}: best_split {got:?}, enumeration {want:?}");
        none += usize::from(want.is_none());
    }
    Ok(format!("100 instances agree ({none} without an improving split)"))
}

// --------------------------------------------------------------------- rfe

fn planted_table(rng: &mut ChaCha8Rng, n: usize, informative: usize, noise: usize) -> (Dataset, Vec<String>) {
    let p = informative + noise;
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    let planted: Vec<usize> = order[..informative].to_vec();
    let beta: Vec<f64> = (0..informative).map(|i| [1.0, -1.2, 0.9, 1.1, -0.8][i % 5]).collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..p).map(|_| gaussian(rng)).collect();
        let z: f64 = planted.iter().zip(&beta).map(|(&j, b)| b * row[j]).sum::<f64>() + 0.5 * gaussian(rng);
        labels.push(if z > 0.0 { Label::Ad } else { Label::Cn });
        rows.push(row);
    }
    let columns: Vec<String> = (0..p).map(|j| format!("c{j:02}")).collect();
    let ids = (0..n).map(|i| format!("r{i:03}")).collect();
    let table = FeatureTable::from_rows(ids, columns.clone(), rows).unwrap();
    (Dataset::new(table, labels).unwrap(), planted.iter().map(|&j| columns[j].clone()).collect())
}

fn rfe_recovery() -> Outcome {
    let results: Vec<usize> = Exec::default().map_range(20, |trial| {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + trial as u64);
        let (data, planted) = planted_table(&mut rng, 300, 5, 45);
        let mask = rfe(&data, &RfeConfig::new(5)).unwrap();
        planted.iter().filter(|c| mask.kept.contains(c)).count()
    });
    let good = results.iter().filter(|&&k| k >= 4).count();
    check!(good >= 18, "only {good}/20 trials kept 4 or more planted columns: {results:?}");
    Ok(format!("{good}/20 trials kept >= 4/5 (kept per trial {results:?})"))
}

// -------------------------------------------------------------- evaluation

fn labeled(table: FeatureTable, labels: Vec<Label>, tokens: Option<Vec<TokenSequence>>) -> LabeledInput {
    LabeledInput::new(PipelineInput::new(table, tokens).unwrap(), labels).unwrap()
}

fn evaluation_harness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(53);

    // fold balance
    for _ in 0..300 {
        let k = rng.random_range(2..=10);
        let n = rng.random_range(2 * k..=300);
        let n_ad = rng.random_range(k..=n - k);
        let mut labels: Vec<Label> = (0..n).map(|i| if i < n_ad { Label::Ad } else { Label::Cn }).collect();
        labels.shuffle(&mut rng);
        let folds = stratified_kfold(&labels, k, rng.random()).map_err(|e| e.to_string())?;
        let mut seen: Vec<usize> = folds.iter().flatten().copied().collect();
        seen.sort_unstable();
        check!(seen == (0..n).collect::<Vec<_>>(), "folds do not partition {n} rows");
        for class in Label::ALL {
            let per: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == class).count()).collect();
            let spread = per.iter().max().unwrap() - per.iter().min().unwrap();
            check!(spread <= 1, "class {class} fold sizes {per:?} (n={n}, k={k})");
        }
    }

    // metric identities
    for _ in 0..1000 {
        let cm = ConfusionMatrix {
            tp: rng.random_range(0..40),
            fp: rng.random_range(0..40),
            tn: rng.random_range(0..40),
            fn_: rng.random_range(0..40),
        };
        if cm.total() == 0 {
            continue;
        }
        let m = metrics(&cm).unwrap();
        if let (Some(p), Some(r), Some(f)) = (m.precision, m.recall, m.f1) {
            let direct = 2.0 * cm.tp as f64 / (2 * cm.tp + cm.fp + cm.fn_) as f64;
            check!((f - direct).abs() < 1e-12, "f1 {f} vs 2tp/(2tp+fp+fn) {direct} for {cm:?}");
            if p + r > 0.0 {
                let harmonic = 2.0 / (1.0 / p + 1.0 / r);
                check!(p == 0.0 || r == 0.0 || (f - harmonic).abs() < 1e-12, "f1 not the harmonic mean for {cm:?}");
            }
        }
        check!(cm.swapped().swapped() == cm, "swap is not an involution for {cm:?}");
        let s = metrics(&cm.swapped()).unwrap();
        check!(s.per_class[0].precision == m.per_class[1].precision, "swap exchanges class rows");
        check!(s.per_class[1].f1 == m.per_class[0].f1, "swap exchanges class rows");
        check!(s.recall == m.specificity && s.specificity == m.recall, "swap exchanges recall and specificity");
        check!(s.accuracy == m.accuracy, "swap keeps accuracy");
    }

    // label shuffle
    let n = 100;
    let rows: Vec<Vec<f64>> = (0..n).map(|i| {
        let c = if i % 2 == 0 { 1.5 } else { -1.5 };
        (0..6).map(|_| c + gaussian(&mut rng)).collect()
    }).collect();
    let mut labels: Vec<Label> = (0..n).map(|i| if i % 2 == 0 { Label::Ad } else { Label::Cn }).collect();
    labels.shuffle(&mut rng);
    let table = FeatureTable::from_rows(
        (0..n).map(|i| format!("r{i:03}")).collect(),
        (0..6).map(|j| format!("f{j}")).collect(),
        rows,
    )
    .unwrap();
    let data = labeled(table.clone(), labels, None);
    let mut shuffled = Vec::new();
    for c in Classifier::ALL {
        let cfg = PipelineConfig::new(ModelId::Linguistic, c, 7);
        let acc = cross_validate(&cfg, &data, 5, 7).map_err(|e| e.to_string())?.pooled.accuracy;
        check!((0.35..=0.65).contains(&acc), "{c} shuffled-label CV accuracy {acc}");
        shuffled.push(format!("{} {acc:.2}", c.short_name()));
    }

    // leakage canary
    let docs: Vec<TokenSequence> = (0..n)
        .map(|i| TokenSequence::from_tokens((0..20).map(|j| format!("w{}", (i * 7 + j * 3) % 50))))
        .collect();
    let labels: Vec<Label> = (0..n).map(|i| if i % 3 == 0 { Label::Ad } else { Label::Cn }).collect();
    let folds = stratified_kfold(&labels, 5, 1).unwrap();
    let test = &folds[2];
    let train: Vec<usize> = (0..n).filter(|i| !test.contains(i)).collect();
    // a few missing cells, on train and test rows alike, so the imputer is exercised
    let holes = |t: &FeatureTable| {
        let rows = (0..t.n_rows())
            .map(|i| {
                let mut r = t.row(i).to_vec();
                if i % 7 == 0 {
                    let j = i % r.len();
                    r[j] = f64::NAN;
                }
                r
            })
            .collect();
        FeatureTable::from_rows(t.ids().to_vec(), t.columns().to_vec(), rows).unwrap()
    };
    let wide = FeatureTable::from_rows(
        table.ids().to_vec(),
        (0..768).map(|j| format!("e{j}")).collect(),
        (0..n).map(|_| (0..768).map(|_| gaussian(&mut rng)).collect()).collect(),
    )
    .unwrap();
    let mut canaries = 0;
    for (model_id, dense, tokens) in [
        (ModelId::Acoustic, holes(&table), None),
        (ModelId::Linguistic, holes(&table), None),
        (ModelId::BertTfidf, holes(&wide), Some(docs.clone())),
    ] {
        for c in Classifier::ALL {
            let mut cfg = PipelineConfig::new(model_id, c, 3);
            if model_id == ModelId::Acoustic {
                cfg.rfe = Some(RfeConfig::new(3));
            }
            let clean = labeled(dense.clone(), labels.clone(), tokens.clone());
            let poisoned_rows = (0..n)
                .map(|i| {
                    let row = dense.row(i).iter();
                    if test.contains(&i) { row.map(|v| v * 1e3 + 17.0).collect() } else { row.copied().collect() }
                })
                .collect();
            let poisoned_table =
                FeatureTable::from_rows(dense.ids().to_vec(), dense.columns().to_vec(), poisoned_rows).unwrap();
            let poisoned_tokens = tokens.clone().map(|t| {
                t.into_iter()
                    .enumerate()
                    .map(|(i, s)| if test.contains(&i) { TokenSequence::from_tokens(["leak", "leak", "canary"]) } else { s })
                    .collect()
            });
            let mut poisoned_labels = labels.clone();
            for &i in test {
                poisoned_labels[i] = poisoned_labels[i].other();
            }
            let poisoned = labeled(poisoned_table, poisoned_labels, poisoned_tokens);
            let a = fit_fold(&cfg, &clean, &train).map_err(|e| e.to_string())?;
            let b = fit_fold(&cfg, &poisoned, &train).map_err(|e| e.to_string())?;
            check!(a.to_text() == b.to_text(), "{model_id} {c}: fitted pipeline depends on test rows");
            check!(a.preprocess.tfidf.as_ref().is_none_or(|t| t.column("canary").is_none()), "test tokens reached the vocabulary");
            canaries += 1;
        }
    }
    Ok(format!(
        "300 fold layouts, 1000 confusion matrices, shuffled CV accuracy [{}], {canaries} leakage canaries",
        shuffled.join(", ")
    ))
}

// ------------------------------------------------------------- end to end

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/tests/fixtures")
}

/// 40 x 768 embedding rows for the fixture ids, mildly class-shifted.
fn embeddings40(ids: &[String], labels: &[Label]) -> FeatureTable {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let rows = labels
        .iter()
        .map(|l| {
            let shift = if *l == Label::Ad { 0.3 } else { -0.3 };
            (0..768).map(|j| if j < 8 { shift } else { 0.0 } + gaussian(&mut rng)).collect()
        })
        .collect();
    FeatureTable::from_rows(ids.to_vec(), (0..768).map(|j| format!("e{j}")).collect(), rows).unwrap()
}

struct Corpus {
    inputs: Vec<(ModelId, LabeledInput)>,
}

fn load_corpus() -> Result<Corpus, String> {
    let dir = fixtures();
    let err = |e: adscreen_core::Error| e.to_string();
    let docs = load_transcripts(&dir.join("transcripts"), TranscriptOptions::default()).map_err(err)?;
    let labels = load_labels(&dir.join("labels.csv")).map_err(err)?;
    let egemaps = load_feature_table(&dir.join("egemaps.csv"), Some(88)).map_err(err)?;
    check!(docs.len() == 40 && egemaps.n_rows() == 40, "fixture corpus should have 40 documents");

    let three = load_feature_table(&dir.join("embeddings3.csv"), Some(768)).map_err(err)?;
    let head: Vec<_> = docs.iter().take(3).cloned().collect();
    let small = adscreen_core::DocumentSet::new(head).map_err(err)?;
    check!(bert_tfidf_input(&small, &three).map_err(err)?.dense.n_cols() == 768, "3-row embedding fixture");

    let lex = PosLexicon::builtin();
    let ling = linguistic_input(&docs, &lex, &LinguisticConfig::default(), Exec::default()).map_err(err)?;
    let ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
    let doc_labels: Vec<Label> = ids.iter().map(|id| labels.get(id).unwrap()).collect();
    let fused = bert_tfidf_input(&docs, &embeddings40(&ids, &doc_labels)).map_err(err)?;
    let align = |i: PipelineInput| LabeledInput::align(i, &labels, AlignMode::Strict).map_err(err);
    Ok(Corpus {
        inputs: vec![
            (ModelId::Acoustic, align(acoustic_input(egemaps).map_err(err)?)?),
            (ModelId::Linguistic, align(ling)?),
            (ModelId::BertTfidf, align(fused)?),
        ],
    })
}

fn run_cv(corpus: &Corpus, exec: Exec) -> Result<(Vec<CvReport>, String, String), String> {
    let mut reports = Vec::new();
    for (model_id, data) in &corpus.inputs {
        for c in Classifier::ALL {
            let mut cfg = PipelineConfig::new(*model_id, c, 42);
            cfg.exec = exec;
            reports.push(cross_validate(&cfg, data, 5, 42).map_err(|e| e.to_string())?);
        }
    }
    let groups: Vec<(ModelId, Vec<&CvReport>)> = ModelId::ALL
        .iter()
        .enumerate()
        .map(|(m, id)| (*id, reports[3 * m..3 * m + 3].iter().collect()))
        .collect();
    let text = table2_text(&groups);
    let csv = table2_csv(&groups);
    Ok((reports, text, csv))
}

fn cells(line: &str) -> Vec<&str> {
    line.split("  ").map(str::trim).filter(|c| !c.is_empty()).collect()
}

fn end_to_end() -> Outcome {
    let corpus = load_corpus()?;
    let (a, text_a, csv_a) = run_cv(&corpus, Exec::default())?;
    let (b, text_b, csv_b) = run_cv(&corpus, Exec::default())?;
    let (c, text_c, _) = run_cv(&corpus, Exec::Serial)?;
    for ((x, y), z) in a.iter().zip(&b).zip(&c) {
        check!(x.to_text() == y.to_text() && x.to_csv() == y.to_csv(), "{}: reports differ between runs", x.description);
        check!(x.to_text() == z.to_text(), "{}: serial and parallel reports differ", x.description);
    }
    check!(text_a == text_b && csv_a == csv_b && text_a == text_c, "table 2 differs between runs");

    // table 2: header, then a model line and LR / RF / SVM rows per model
    let lines: Vec<&str> = text_a.lines().collect();
    check!(lines.len() == 1 + 3 * 4, "table 2 has {} lines", lines.len());
    check!(cells(lines[0]) == TABLE2_HEADER, "table 2 header {:?}", cells(lines[0]));
    for (m, id) in ModelId::ALL.iter().enumerate() {
        check!(cells(lines[1 + 4 * m]) == [id.title()], "table 2 model line {:?}", lines[1 + 4 * m]);
        for (j, short) in ["LR", "RF", "SVM"].iter().enumerate() {
            let row = cells(lines[2 + 4 * m + j]);
            check!(row.len() == 6 && row[0] == *short, "table 2 row {row:?}");
            check!(row[1..].iter().all(|v| v.len() == 5 && v.parse::<f64>().is_ok()), "table 2 values {row:?}");
        }
    }
    check!(csv_a.lines().count() == 1 + 9, "table 2 csv rows");

    // table 3: two class rows per model on a held-out split
    let mut held: Vec<(ModelId, MetricsReport)> = Vec::new();
    for (model_id, data) in &corpus.inputs {
        let (train, test) = split_indices(&data.labels, 0.7, 42, true).map_err(|e| e.to_string())?;
        let cfg = PipelineConfig::new(*model_id, Classifier::LogReg, 42);
        let r = train_test_evaluate(&cfg, &data.subset(&train), &data.subset(&test)).map_err(|e| e.to_string())?;
        check!(r.confusion.total() == test.len(), "test split size");
        held.push((*model_id, r));
    }
    let rows: Vec<(ModelId, &MetricsReport)> = held.iter().map(|(m, r)| (*m, r)).collect();
    let t3 = table3_text(&rows);
    let lines: Vec<&str> = t3.lines().collect();
    check!(lines.len() == 1 + 2 * 3, "table 3 has {} lines", lines.len());
    check!(cells(lines[0]) == TABLE3_HEADER, "table 3 header {:?}", cells(lines[0]));
    for m in 0..3 {
        let first = cells(lines[1 + 2 * m]);
        let second = cells(lines[2 + 2 * m]);
        check!(first.len() == 6 && first[1] == "non-AD", "table 3 row {first:?}");
        check!(second.len() == 4 && second[0] == "AD", "table 3 row {second:?}");
    }
    check!(table3_csv(&rows).lines().count() == 1 + 6, "table 3 csv rows");
    Ok(format!("{} cv reports identical over 3 runs, table 2 and table 3 layouts match", a.len()))
}

// ------------------------------------------------------------------ runner

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { name: "lexical known answers", budget: Some(Duration::from_secs(5)), run: lexical_known_answers },
        Criterion { name: "lexical monotonicity", budget: None, run: monotonicity },
        Criterion { name: "tf-idf brute-force equivalence", budget: None, run: tfidf_oracle },
        Criterion { name: "classifier sanity", budget: Some(Duration::from_secs(60)), run: classifier_sanity },
        Criterion { name: "svm dual feasibility", budget: None, run: svm_feasibility },
        Criterion { name: "best split vs enumeration", budget: None, run: best_split_exhaustive },
        Criterion { name: "rfe planted recovery", budget: Some(Duration::from_secs(30)), run: rfe_recovery },
        Criterion { name: "evaluation harness", budget: None, run: evaluation_harness },
        Criterion { name: "end-to-end determinism", budget: None, run: end_to_end },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        let outcome = match (outcome, c.budget) {
            (Ok(_), Some(b)) if took > b => Err(format!("took {took:.2?}, budget {b:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS  {:<32} {:>9.2?}  {detail}", c.name, took),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:<32} {:>9.2?}  {why}", c.name, took);
            }
        }
    }
    println!("\nacceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
