//! The three end-to-end models: fold-fitted preprocessing plus a classifier.
//!
//! Fitting order: mean imputation of the dense block, TF-IDF over training
//! tokens (model 3 only, concatenated after the embeddings), z-scoring, optional
//! RFE, then the classifier. Every fitted step sees training rows only.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{align_dataset, AlignMode, DocumentSet, FeatureTable, Label, LabelMap};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::learners::persist::{read_model_from, Lines};
use crate::learners::{write_model, Classifier, Matrix, ModelConfig, TrainedModel};
use crate::lexical::{linguistic_table, LinguisticConfig};
use crate::selection::{apply_mask, rfe, FeatureMask, RfeConfig};
use crate::text::{pos_tag, tokenize, PosLexicon, TokenSequence};
use crate::corpus::EMBEDDING_WIDTH;
use crate::vectorize::{concat_features, fit_tfidf, tfidf_table, FeatureBlock, MeanImputer, Standardizer, TfIdfModel};

/// RFE target used for the acoustic model.
pub const ACOUSTIC_RFE_TARGET: usize = 51;

const MAGIC: &str = "adscreen-pipeline";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelId {
    #[serde(rename = "model1_acoustic")]
    Acoustic,
    #[serde(rename = "model2_linguistic")]
    Linguistic,
    #[serde(rename = "model3_bert_tfidf")]
    BertTfidf,
}

impl ModelId {
    pub const ALL: [ModelId; 3] = [ModelId::Acoustic, ModelId::Linguistic, ModelId::BertTfidf];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Acoustic => "model1_acoustic",
            ModelId::Linguistic => "model2_linguistic",
            ModelId::BertTfidf => "model3_bert_tfidf",
        }
    }

    /// `Model 1` etc.
    pub fn title(self) -> &'static str {
        match self {
            ModelId::Acoustic => "Model 1",
            ModelId::Linguistic => "Model 2",
            ModelId::BertTfidf => "Model 3",
        }
    }

    fn uses_tokens(self) -> bool {
        self == ModelId::BertTfidf
    }
}

impl std::str::FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "model1_acoustic" | "acoustic" | "model1" | "egemaps" => Ok(ModelId::Acoustic),
            "model2_linguistic" | "linguistic" | "model2" => Ok(ModelId::Linguistic),
            "model3_bert_tfidf" | "bert_tfidf" | "model3" | "fused" => Ok(ModelId::BertTfidf),
            other => Err(Error::InvalidArgument(format!(
                "unknown model {other:?} (expected model1_acoustic, model2_linguistic or model3_bert_tfidf)"
            ))),
        }
    }
}

impl std::fmt::Display for ModelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where RFE is fitted during cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RfeMode {
    /// Inside every training fold.
    #[default]
    Nested,
    /// Once on all labelled rows before splitting; leaks test folds into
    /// selection and exists for comparison only.
    Global,
}

impl std::str::FromStr for RfeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nested" => Ok(RfeMode::Nested),
            "global" => Ok(RfeMode::Global),
            other => Err(Error::InvalidArgument(format!(
                "unknown RFE mode {other:?} (expected nested or global)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub model_id: ModelId,
    pub model: ModelConfig,
    pub rfe: Option<RfeConfig>,
    pub rfe_mode: RfeMode,
    /// Precomputed mask used instead of running RFE.
    pub mask: Option<FeatureMask>,
    /// TF-IDF minimum document frequency (model 3).
    pub min_df: usize,
    pub exec: Exec,
}

impl PipelineConfig {
    /// Defaults for a model/classifier pair; the acoustic model gets RFE to 51.
    pub fn new(model_id: ModelId, classifier: Classifier, seed: u64) -> Self {
        Self {
            model_id,
            model: ModelConfig::default_for(classifier, seed),
            rfe: (model_id == ModelId::Acoustic).then(|| RfeConfig::new(ACOUSTIC_RFE_TARGET)),
            rfe_mode: RfeMode::Nested,
            mask: None,
            min_df: 1,
            exec: Exec::default(),
        }
    }

    pub fn classifier(&self) -> Classifier {
        self.model.classifier()
    }

    /// One-line summary for report headers.
    pub fn describe(&self) -> String {
        let mut s = format!("{} {}", self.model_id, self.classifier());
        if let Some(m) = &self.mask {
            write!(s, " mask={}", m.kept.len()).unwrap();
        } else if let Some(r) = &self.rfe {
            write!(s, " rfe={}", r.target).unwrap();
            if self.rfe_mode == RfeMode::Global {
                s.push_str(" global");
            }
        }
        if self.model_id.uses_tokens() {
            write!(s, " min_df={}", self.min_df).unwrap();
        }
        s
    }
}

/// Unlabelled model inputs: a dense block plus, for model 3, the token stream per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineInput {
    pub dense: FeatureTable,
    pub tokens: Option<Vec<TokenSequence>>,
}

impl PipelineInput {
    pub fn new(dense: FeatureTable, tokens: Option<Vec<TokenSequence>>) -> Result<Self> {
        if let Some(t) = &tokens {
            if t.len() != dense.n_rows() {
                return Err(Error::Schema(format!(
                    "{} token sequences for {} rows",
                    t.len(),
                    dense.n_rows()
                )));
            }
        }
        Ok(Self { dense, tokens })
    }

    pub fn ids(&self) -> &[String] {
        self.dense.ids()
    }

    pub fn len(&self) -> usize {
        self.dense.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn subset(&self, idx: &[usize]) -> PipelineInput {
        PipelineInput {
            dense: self.dense.select_rows(idx),
            tokens: self
                .tokens
                .as_ref()
                .map(|t| idx.iter().map(|&i| t[i].clone()).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInput {
    pub input: PipelineInput,
    pub labels: Vec<Label>,
}

impl LabeledInput {
    pub fn new(input: PipelineInput, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != input.len() {
            return Err(Error::Schema(format!(
                "{} labels for {} rows",
                labels.len(),
                input.len()
            )));
        }
        Ok(Self { input, labels })
    }

    /// Attach labels by id, keeping input row order.
    pub fn align(input: PipelineInput, labels: &LabelMap, mode: AlignMode) -> Result<Self> {
        let aligned = align_dataset(&input.dense, labels, mode)?;
        let keep: Vec<usize> = aligned
            .dataset
            .table
            .ids()
            .iter()
            .map(|id| input.ids().iter().position(|x| x == id).unwrap())
            .collect();
        let input = if keep.len() == input.len() { input } else { input.subset(&keep) };
        Self::new(input, aligned.dataset.labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        self.input.ids()
    }

    pub fn subset(&self, idx: &[usize]) -> LabeledInput {
        LabeledInput {
            input: self.input.subset(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Acoustic input: the eGeMAPS table as is.
pub fn acoustic_input(table: FeatureTable) -> Result<PipelineInput> {
    PipelineInput::new(table, None)
}

/// Linguistic input: the 13-feature table computed per transcript.
pub fn linguistic_input(docs: &DocumentSet, lex: &PosLexicon, cfg: &LinguisticConfig, exec: Exec) -> Result<PipelineInput> {
    let ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
    let tagged = exec.map(docs.as_slice(), |d| pos_tag(&tokenize(&d.text), lex));
    PipelineInput::new(linguistic_table(&ids, &tagged, cfg, exec)?, None)
}

/// Fused input: embeddings reordered to the transcript ids, plus transcript tokens.
pub fn bert_tfidf_input(docs: &DocumentSet, embeddings: &FeatureTable) -> Result<PipelineInput> {
    if embeddings.n_cols() != EMBEDDING_WIDTH {
        return Err(Error::Schema(format!(
            "expected {EMBEDDING_WIDTH} embedding columns, found {}",
            embeddings.n_cols()
        )));
    }
    let mut idx = Vec::with_capacity(docs.len());
    for d in docs.iter() {
        let i = embeddings
            .ids()
            .iter()
            .position(|x| *x == d.id)
            .ok_or_else(|| Error::Schema(format!("no embedding row for transcript {}", d.id)))?;
        idx.push(i);
    }
    if embeddings.n_rows() != docs.len() {
        log::warn!(
            "{} embedding rows have no transcript and are ignored",
            embeddings.n_rows() - docs.len()
        );
    }
    let tokens = docs.iter().map(|d| tokenize(&d.text)).collect();
    PipelineInput::new(embeddings.select_rows(&idx), Some(tokens))
}

/// Preprocessing state fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub model_id: ModelId,
    /// Dense input columns, in the order the imputer expects them.
    pub input_columns: Vec<String>,
    pub imputer: MeanImputer,
    pub tfidf: Option<TfIdfModel>,
    pub standardizer: Standardizer,
    pub mask: FeatureMask,
}

impl Preprocessor {
    /// Fit every step on `train` and return the transformed training table.
    pub fn fit(cfg: &PipelineConfig, train: &LabeledInput) -> Result<(Self, FeatureTable)> {
        let dense = &train.input.dense;
        let imputer = MeanImputer::fit(dense);
        let tfidf = if cfg.model_id.uses_tokens() {
            let tokens = require_tokens(&train.input)?;
            Some(fit_tfidf(tokens, cfg.min_df)?)
        } else {
            None
        };
        let joined = join_blocks(cfg.model_id, &imputer, tfidf.as_ref(), &train.input, cfg.exec)?;
        let standardizer = Standardizer::fit(&joined)?;
        let z = standardizer.apply(&joined)?;
        let mask = match (&cfg.mask, &cfg.rfe) {
            (Some(m), _) => m.clone(),
            (None, Some(r)) if r.target < z.n_cols() => {
                let d = crate::corpus::Dataset::new(z.clone(), train.labels.clone())?;
                rfe(&d, r)?
            }
            (None, Some(r)) => {
                log::info!("RFE target {} >= {} columns; keeping all", r.target, z.n_cols());
                FeatureMask::identity(z.columns())
            }
            (None, None) => FeatureMask::identity(z.columns()),
        };
        let out = apply_mask(&mask, &z)?;
        Ok((
            Self {
                model_id: cfg.model_id,
                input_columns: dense.columns().to_vec(),
                imputer,
                tfidf,
                standardizer,
                mask,
            },
            out,
        ))
    }

    /// Mask from RFE over every row of `data`, for [`RfeMode::Global`].
    pub fn global_mask(cfg: &PipelineConfig, data: &LabeledInput) -> Result<FeatureMask> {
        let cfg = PipelineConfig { mask: None, ..cfg.clone() };
        Ok(Self::fit(&cfg, data)?.0.mask)
    }

    /// Apply the fitted steps to new rows.
    pub fn transform(&self, input: &PipelineInput, exec: Exec) -> Result<FeatureTable> {
        let idx = self
            .input_columns
            .iter()
            .map(|c| {
                input
                    .dense
                    .column_index(c)
                    .ok_or_else(|| Error::Schema(format!("missing feature column {c}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let ordered = PipelineInput {
            dense: input.dense.select_columns(&idx),
            tokens: input.tokens.clone(),
        };
        let joined = join_blocks(self.model_id, &self.imputer, self.tfidf.as_ref(), &ordered, exec)?;
        apply_mask(&self.mask, &self.standardizer.apply(&joined)?)
    }
}

/// `bert_*` embedding columns followed by `tfidf_*` term columns.
pub fn fuse_bert_tfidf(embeddings: &FeatureTable, tfidf: &FeatureTable) -> Result<FeatureTable> {
    concat_features(&[
        FeatureBlock { name: "bert", table: embeddings, width: Some(EMBEDDING_WIDTH) },
        FeatureBlock { name: "tfidf", table: tfidf, width: None },
    ])
}

fn require_tokens(input: &PipelineInput) -> Result<&[TokenSequence]> {
    input
        .tokens
        .as_deref()
        .ok_or_else(|| Error::Schema("this model needs transcript tokens".into()))
}

fn join_blocks(
    model_id: ModelId,
    imputer: &MeanImputer,
    tfidf: Option<&TfIdfModel>,
    input: &PipelineInput,
    exec: Exec,
) -> Result<FeatureTable> {
    let dense = imputer.apply(&input.dense)?;
    match tfidf {
        Some(model) => {
            let tokens = require_tokens(input)?;
            let t = tfidf_table(model, input.ids(), tokens, exec)?;
            debug_assert_eq!(model_id, ModelId::BertTfidf);
            fuse_bert_tfidf(&dense, &t)
        }
        None => Ok(dense),
    }
}

/// Preprocessing plus classifier, ready to score new rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    pub preprocess: Preprocessor,
    pub model: TrainedModel,
}

impl FittedPipeline {
    pub fn fit(cfg: &PipelineConfig, train: &LabeledInput) -> Result<Self> {
        crate::corpus::require_both_classes(&train.labels)?;
        let (preprocess, x) = Preprocessor::fit(cfg, train)?;
        let model = TrainedModel::train(&cfg.model, &Matrix::from_table(&x)?, &train.labels, cfg.exec)?;
        Ok(Self { preprocess, model })
    }

    pub fn predict_scores(&self, input: &PipelineInput, exec: Exec) -> Result<Vec<f64>> {
        let x = self.preprocess.transform(input, exec)?;
        self.model.predict_scores(&Matrix::from_table(&x)?, exec)
    }

    pub fn predict(&self, input: &PipelineInput, exec: Exec) -> Result<Vec<Label>> {
        let t = self.model.threshold();
        Ok(self
            .predict_scores(input, exec)?
            .into_iter()
            .map(|s| crate::learners::label_for(s, t))
            .collect())
    }

    /// Text model file: a header line with the preprocessing state as JSON,
    /// followed by the classifier block.
    pub fn to_text(&self) -> String {
        let json = serde_json::to_string(&self.preprocess).expect("preprocessor serializes");
        format!("{MAGIC} {FORMAT_VERSION}\npreprocess {json}\n{}", write_model(&self.model))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let (n, toks) = lines.expect(MAGIC)?;
        if toks != [FORMAT_VERSION.to_string().as_str()] {
            return Err(Error::Schema(format!(
                "model file line {}: unsupported pipeline version {toks:?}",
                n + 1
            )));
        }
        let (n, toks) = lines.expect("preprocess")?;
        let preprocess: Preprocessor = serde_json::from_str(&toks.join(" "))
            .map_err(|e| Error::Schema(format!("model file line {}: {e}", n + 1)))?;
        let model = read_model_from(&mut lines)?;
        if model.n_features() != preprocess.mask.kept.len() {
            return Err(Error::Schema(format!(
                "classifier expects {} features but preprocessing yields {}",
                model.n_features(),
                preprocess.mask.kept.len()
            )));
        }
        Ok(Self { preprocess, model })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| match e {
            Error::Schema(m) => Error::load(path, m),
            other => other,
        })
    }
}
