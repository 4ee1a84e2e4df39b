//! Labeled text ingestion, stratified train/eval splitting and same-label grouping.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::ngram::{extract_ngrams, tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Hallucinated,
    Factual,
}

impl Label {
    /// 1 for the positive (hallucinated) class, 0 otherwise.
    pub fn as_binary(self) -> u8 {
        match self {
            Label::Hallucinated => 1,
            Label::Factual => 0,
        }
    }

    pub fn from_binary(b: u8) -> Self {
        if b == 0 {
            Label::Factual
        } else {
            Label::Hallucinated
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Hallucinated => "hallucinated",
            Label::Factual => "factual",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    General,
    Dialogue,
    Summary,
    #[default]
    Other,
}

impl Subset {
    pub fn as_str(self) -> &'static str {
        match self {
            Subset::General => "general",
            Subset::Dialogue => "dialogue",
            Subset::Summary => "summary",
            Subset::Other => "other",
        }
    }
}

impl std::str::FromStr for Subset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Subset::General),
            "dialogue" => Ok(Subset::Dialogue),
            "summary" => Ok(Subset::Summary),
            "other" => Ok(Subset::Other),
            other => Err(Error::InvalidArgument(format!("unknown subset `{other}`"))),
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub subset: Subset,
    /// Text a reference-based baseline compares against, when the record provides one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

/// Where a document's baseline reference text comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceSource {
    /// The opposite-label text of the same record, falling back to the context field.
    #[default]
    Paired,
    /// Always the context field.
    Context,
}

/// Field mapping from a JSONL record to documents.
///
/// Either `text_field` + `label_field` (one document per line) or
/// `hallucinated_field` + `factual_field` (two documents per line) must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaDescriptor {
    #[serde(default)]
    pub subset: Subset,
    #[serde(default)]
    pub text_field: Option<String>,
    #[serde(default)]
    pub label_field: Option<String>,
    #[serde(default = "default_hallucinated_values")]
    pub hallucinated_values: Vec<String>,
    #[serde(default = "default_factual_values")]
    pub factual_values: Vec<String>,
    #[serde(default)]
    pub hallucinated_field: Option<String>,
    #[serde(default)]
    pub factual_field: Option<String>,
    #[serde(default)]
    pub context_field: Option<String>,
    #[serde(default)]
    pub reference: ReferenceSource,
}

fn default_hallucinated_values() -> Vec<String> {
    ["hallucinated", "yes", "true", "1"]
        .map(String::from)
        .to_vec()
}

fn default_factual_values() -> Vec<String> {
    ["factual", "no", "false", "0"].map(String::from).to_vec()
}

impl Default for SchemaDescriptor {
    fn default() -> Self {
        Self::identity(Subset::Other)
    }
}

enum Layout<'a> {
    Labeled {
        text: &'a str,
        label: &'a str,
    },
    Paired {
        hallucinated: &'a str,
        factual: &'a str,
    },
}

impl SchemaDescriptor {
    /// `{"text": ..., "label": ...}` records.
    pub fn identity(subset: Subset) -> Self {
        SchemaDescriptor {
            subset,
            text_field: Some("text".into()),
            label_field: Some("label".into()),
            hallucinated_values: default_hallucinated_values(),
            factual_values: default_factual_values(),
            hallucinated_field: None,
            factual_field: None,
            context_field: None,
            reference: ReferenceSource::Paired,
        }
    }

    fn paired(subset: Subset, hallucinated: &str, factual: &str, context: &str) -> Self {
        SchemaDescriptor {
            subset,
            text_field: None,
            label_field: None,
            hallucinated_field: Some(hallucinated.into()),
            factual_field: Some(factual.into()),
            context_field: Some(context.into()),
            reference: ReferenceSource::Context,
            ..Self::identity(subset)
        }
    }

    /// Named presets matching the released HaluEval files.
    pub fn preset(name: &str) -> Option<Self> {
        let s = match name {
            "identity" | "text-label" => Self::identity(Subset::Other),
            "halueval-general" => SchemaDescriptor {
                text_field: Some("chatgpt_response".into()),
                label_field: Some("hallucination".into()),
                context_field: Some("user_query".into()),
                reference: ReferenceSource::Context,
                ..Self::identity(Subset::General)
            },
            "halueval-dialogue" => Self::paired(
                Subset::Dialogue,
                "hallucinated_response",
                "right_response",
                "knowledge",
            ),
            "halueval-summary" => Self::paired(
                Subset::Summary,
                "hallucinated_summary",
                "right_summary",
                "document",
            ),
            _ => return None,
        };
        Some(s)
    }

    /// Resolves a preset name or reads a TOML/JSON descriptor file.
    pub fn resolve(spec: &str) -> Result<Self> {
        if let Some(s) = Self::preset(spec) {
            return Ok(s);
        }
        let path = Path::new(spec);
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: SchemaDescriptor = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&raw).map_err(|e| Error::Schema(e.to_string()))?
        } else {
            toml::from_str(&raw).map_err(|e| Error::Schema(e.to_string()))?
        };
        schema.layout()?;
        Ok(schema)
    }

    fn layout(&self) -> Result<Layout<'_>> {
        match (
            &self.text_field,
            &self.label_field,
            &self.hallucinated_field,
            &self.factual_field,
        ) {
            (Some(text), Some(label), None, None) => Ok(Layout::Labeled { text, label }),
            (None, None, Some(h), Some(f)) => Ok(Layout::Paired {
                hallucinated: h,
                factual: f,
            }),
            _ => Err(Error::Schema(
                "set either text_field + label_field or hallucinated_field + factual_field".into(),
            )),
        }
    }

    fn classify(&self, line: usize, field: &str, value: &Value) -> Result<Label> {
        let raw = match value {
            Value::String(s) => s.trim().to_lowercase(),
            other => other.to_string().to_lowercase(),
        };
        let matches = |set: &[String]| set.iter().any(|v| v.eq_ignore_ascii_case(&raw));
        if matches(&self.hallucinated_values) {
            Ok(Label::Hallucinated)
        } else if matches(&self.factual_values) {
            Ok(Label::Factual)
        } else {
            Err(Error::UnknownLabel {
                line,
                field: field.to_owned(),
                value: value.to_string(),
            })
        }
    }
}

fn string_field(obj: &serde_json::Map<String, Value>, line: usize, field: &str) -> Result<String> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Null) | None => Err(Error::MissingField {
            line,
            field: field.to_owned(),
        }),
        // Dialogue histories and similar fields may be arrays; keep their text.
        Some(Value::Array(items)) => Ok(items
            .iter()
            .map(|v| match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .collect::<Vec<_>>()
            .join(" ")),
        Some(other) => Ok(other.to_string()),
    }
}

/// Reads JSONL records through `schema`. Blank lines are ignored, as are
/// documents whose text is blank after trimming.
pub fn parse_jsonl<R: BufRead>(reader: R, schema: &SchemaDescriptor) -> Result<Vec<Document>> {
    let layout = schema.layout()?;
    let mut docs = Vec::new();
    let mut skipped = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(format!("<line {lineno}>"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| Error::MalformedJson {
            line: lineno,
            message: e.to_string(),
        })?;
        let Value::Object(obj) = value else {
            return Err(Error::MalformedJson {
                line: lineno,
                message: "expected a JSON object".into(),
            });
        };
        let context = match &schema.context_field {
            Some(f) => Some(string_field(&obj, lineno, f)?),
            None => None,
        };
        let mut emit = |text: String, label: Label, paired: Option<String>| {
            if text.trim().is_empty() {
                skipped += 1;
                return;
            }
            let reference = match schema.reference {
                ReferenceSource::Paired => paired.or_else(|| context.clone()),
                ReferenceSource::Context => context.clone(),
            };
            docs.push(Document {
                id: format!("{lineno}:{label}"),
                text,
                label,
                subset: schema.subset,
                reference,
            });
        };
        match layout {
            Layout::Labeled { text, label } => {
                let t = string_field(&obj, lineno, text)?;
                let raw = obj.get(label).ok_or_else(|| Error::MissingField {
                    line: lineno,
                    field: label.to_owned(),
                })?;
                let l = schema.classify(lineno, label, raw)?;
                emit(t, l, None);
            }
            Layout::Paired {
                hallucinated,
                factual,
            } => {
                let h = string_field(&obj, lineno, hallucinated)?;
                let f = string_field(&obj, lineno, factual)?;
                emit(h.clone(), Label::Hallucinated, Some(f.clone()));
                emit(f, Label::Factual, Some(h));
            }
        }
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} documents with blank text");
    }
    Ok(docs)
}

pub fn load_jsonl(path: impl AsRef<Path>, schema: &SchemaDescriptor) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(BufReader::new(file), schema).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

/// Stable 64-bit key of `(seed, id)`; FNV-1a over the id then a splitmix64 finalizer.
pub(crate) fn shuffle_key(seed: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn shuffled(mut docs: Vec<Document>, seed: u64) -> Vec<Document> {
    docs.sort_by_cached_key(|d| (shuffle_key(seed, &d.id), d.id.clone()));
    docs
}

fn partition_by_label(docs: &[Document]) -> BTreeMap<Label, Vec<Document>> {
    let mut by_label: BTreeMap<Label, Vec<Document>> = BTreeMap::new();
    for d in docs {
        by_label.entry(d.label).or_default().push(d.clone());
    }
    by_label
}

/// Stratified, seeded 80/20-style split. Each side is returned in shuffled order.
pub fn split_train_eval(
    docs: &[Document],
    cfg: &SplitConfig,
) -> Result<(Vec<Document>, Vec<Document>)> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction must lie in (0, 1), got {}",
            cfg.train_fraction
        )));
    }
    let by_label = partition_by_label(docs);
    let frac = cfg.train_fraction;
    let total = (frac * docs.len() as f64 + 1e-9).floor() as usize;

    // Largest-remainder apportionment of the train total across labels.
    let mut quotas: Vec<(Label, usize, f64)> = by_label
        .iter()
        .map(|(&l, v)| {
            let exact = frac * v.len() as f64;
            let base = (exact + 1e-9).floor();
            (l, base as usize, exact - base)
        })
        .collect();
    let assigned: usize = quotas.iter().map(|q| q.1).sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| quotas[b].2.total_cmp(&quotas[a].2).then(a.cmp(&b)));
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        quotas[i].1 += 1;
    }

    let mut train = Vec::new();
    let mut eval = Vec::new();
    for (label, mut count, _) in quotas {
        let members = shuffled(by_label[&label].clone(), cfg.seed);
        let n = members.len();
        if n >= 2 {
            count = count.clamp(1, n - 1);
        }
        let mut it = members.into_iter();
        train.extend(it.by_ref().take(count));
        eval.extend(it);
    }
    Ok((shuffled(train, cfg.seed), shuffled(eval, cfg.seed)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledGroup {
    pub members: Vec<Document>,
    pub label: Label,
    pub group_size_target: usize,
}

/// Splits documents by label, shuffles each label by `seed`, and chunks into
/// blocks of `group_size`. A trailing partial block is kept.
pub fn group_by_label(
    docs: &[Document],
    group_size: usize,
    seed: u64,
) -> Result<Vec<LabeledGroup>> {
    if group_size < 1 {
        return Err(Error::InvalidArgument(
            "group size must be at least 1".into(),
        ));
    }
    if let Some(d) = docs.iter().find(|d| d.text.trim().is_empty()) {
        return Err(Error::InvalidArgument(format!(
            "document {} has blank text",
            d.id
        )));
    }
    let mut groups = Vec::new();
    for (label, members) in partition_by_label(docs) {
        let members = shuffled(members, seed);
        for chunk in members.chunks(group_size) {
            groups.push(LabeledGroup {
                members: chunk.to_vec(),
                label,
                group_size_target: group_size,
            });
        }
    }
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub subset: Subset,
    pub label: Label,
    pub documents: usize,
    pub avg_length: f64,
    pub avg_repeated_ngrams: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n: usize,
    pub rows: Vec<StatsRow>,
}

impl CorpusStats {
    pub fn row(&self, subset: Subset, label: Label) -> Option<&StatsRow> {
        self.rows
            .iter()
            .find(|r| r.subset == subset && r.label == label)
    }

    /// Aligned plain-text table, one row per (subset, label).
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<10} {:<13} {:>9} {:>12} {:>16}\n",
            "subset",
            "label",
            "documents",
            "avg_length",
            format!("avg_rep_{}gram", self.n)
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<10} {:<13} {:>9} {:>12.4} {:>16.4}\n",
                r.subset.as_str(),
                r.label.as_str(),
                r.documents,
                r.avg_length,
                r.avg_repeated_ngrams
            ));
        }
        out
    }
}

/// Number of distinct n-grams occurring at least twice in `tokens`.
pub fn repeated_ngram_count(text: &str, n: usize) -> Result<usize> {
    let grams = extract_ngrams(&tokenize(text), n)?;
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    for g in &grams {
        *counts.entry(g.as_slice()).or_default() += 1;
    }
    Ok(counts.values().filter(|&&c| c >= 2).count())
}

/// Mean token length and mean repeated n-gram count per (subset, label).
pub fn corpus_stats(docs: &[Document], n: usize) -> Result<CorpusStats> {
    let mut acc: BTreeMap<(Subset, Label), (usize, usize, usize)> = BTreeMap::new();
    for d in docs {
        let len = tokenize(&d.text).len();
        let rep = repeated_ngram_count(&d.text, n)?;
        let e = acc.entry((d.subset, d.label)).or_default();
        e.0 += 1;
        e.1 += len;
        e.2 += rep;
    }
    let rows = acc
        .into_iter()
        .map(|((subset, label), (count, len, rep))| StatsRow {
            subset,
            label,
            documents: count,
            avg_length: len as f64 / count as f64,
            avg_repeated_ngrams: rep as f64 / count as f64,
        })
        .collect();
    Ok(CorpusStats { n, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    pub(crate) fn doc(id: &str, label: Label, text: &str) -> Document {
        Document {
            id: id.into(),
            text: text.into(),
            label,
            subset: Subset::Other,
            reference: None,
        }
    }

    fn docs(n_h: usize, n_f: usize) -> Vec<Document> {
        (0..n_h)
            .map(|i| doc(&format!("h{i}"), Label::Hallucinated, "some text"))
            .chain((0..n_f).map(|i| doc(&format!("f{i}"), Label::Factual, "other text")))
            .collect()
    }

    #[test]
    fn identity_schema_line() {
        let input = br#"{"text":"a b","label":"factual"}"#;
        let out = parse_jsonl(&input[..], &SchemaDescriptor::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].label, Label::Factual);
        assert_eq!(out[0].text, "a b");
        assert_eq!(out[0].id, "1:factual");
    }

    #[test]
    fn empty_input_is_empty_list() {
        assert!(parse_jsonl(&b""[..], &SchemaDescriptor::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn halueval_dialogue_record_yields_two_documents() {
        let rec = r#"{"knowledge": "Iron Man is starring Robert Downey Jr.", "dialogue_history": "[Human]: Do you like Iron Man [Assistant]: Sure do!", "right_response": "Robert Downey Jr. is in it.", "hallucinated_response": "Iron Man stars Chris Evans."}"#;
        let schema = SchemaDescriptor::preset("halueval-dialogue").unwrap();
        let out = parse_jsonl(rec.as_bytes(), &schema).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].label, Label::Hallucinated);
        assert_eq!(out[1].label, Label::Factual);
        assert_eq!(out[0].id, "1:hallucinated");
        assert_eq!(out[1].id, "1:factual");
        for d in &out {
            assert_eq!(
                d.reference.as_deref(),
                Some("Iron Man is starring Robert Downey Jr.")
            );
        }
        assert_eq!(out[0].subset, Subset::Dialogue);

        let paired = SchemaDescriptor {
            reference: ReferenceSource::Paired,
            ..schema
        };
        let out = parse_jsonl(rec.as_bytes(), &paired).unwrap();
        assert_eq!(
            out[0].reference.as_deref(),
            Some("Robert Downey Jr. is in it.")
        );
        assert_eq!(
            out[1].reference.as_deref(),
            Some("Iron Man stars Chris Evans.")
        );
    }

    #[test]
    fn halueval_general_record() {
        let rec = concat!(
            r#"{"ID": "1", "user_query": "q?", "chatgpt_response": "an answer", "hallucination": "no", "hallucination_spans": []}"#,
            "\n",
            r#"{"ID": "2", "user_query": "q2?", "chatgpt_response": "made up", "hallucination": "yes", "hallucination_spans": ["made up"]}"#
        );
        let schema = SchemaDescriptor::preset("halueval-general").unwrap();
        let out = parse_jsonl(rec.as_bytes(), &schema).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].label, Label::Factual);
        assert_eq!(out[1].label, Label::Hallucinated);
        assert_eq!(out[1].reference.as_deref(), Some("q2?"));
    }

    #[test]
    fn load_errors_name_line_and_field() {
        let bad = "{\"text\":\"a\",\"label\":\"factual\"}\n{oops\n";
        match parse_jsonl(bad.as_bytes(), &SchemaDescriptor::default()) {
            Err(Error::MalformedJson { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let missing = "{\"text\":\"a\"}\n";
        let err = parse_jsonl(missing.as_bytes(), &SchemaDescriptor::default()).unwrap_err();
        assert!(matches!(err, Error::MissingField { line: 1, ref field } if field == "label"));
        assert!(err.to_string().contains("label"));
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_jsonl("/nonexistent/data.jsonl", &SchemaDescriptor::default()).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/data.jsonl"));
    }

    #[test]
    fn schema_needs_exactly_one_layout() {
        let s = SchemaDescriptor {
            hallucinated_field: Some("x".into()),
            ..SchemaDescriptor::default()
        };
        assert!(parse_jsonl(&b""[..], &s).is_err());
        let toml_src = "subset = \"summary\"\nhallucinated_field = \"h\"\nfactual_field = \"f\"\n";
        let parsed: SchemaDescriptor = toml::from_str(toml_src).unwrap();
        assert_eq!(parsed.subset, Subset::Summary);
        assert!(parsed.layout().is_ok());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = docs(5, 5);
        let cfg = SplitConfig::default();
        let (train, eval) = split_train_eval(&d, &cfg).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(eval.len(), 2);
        assert!(eval.iter().any(|x| x.label == Label::Hallucinated));
        assert!(eval.iter().any(|x| x.label == Label::Factual));
        let again = split_train_eval(&d, &cfg).unwrap();
        assert_eq!((train, eval), again);
        assert!(matches!(
            split_train_eval(&[], &cfg),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn split_depends_on_seed() {
        let d = docs(50, 50);
        let ids = |v: &[Document]| v.iter().map(|d| d.id.clone()).collect::<HashSet<_>>();
        let (a, _) = split_train_eval(
            &d,
            &SplitConfig {
                train_fraction: 0.8,
                seed: 1,
            },
        )
        .unwrap();
        let (b, _) = split_train_eval(
            &d,
            &SplitConfig {
                train_fraction: 0.8,
                seed: 2,
            },
        )
        .unwrap();
        assert_eq!(a.len(), 80);
        assert_ne!(ids(&a), ids(&b));
    }

    #[test]
    fn split_ignores_input_order() {
        let d = docs(7, 9);
        let mut r = d.clone();
        r.reverse();
        let cfg = SplitConfig {
            train_fraction: 0.8,
            seed: 11,
        };
        assert_eq!(
            split_train_eval(&d, &cfg).unwrap(),
            split_train_eval(&r, &cfg).unwrap()
        );
    }

    #[test]
    fn grouping_examples() {
        let four: Vec<_> = (0..4)
            .map(|i| doc(&format!("f{i}"), Label::Factual, "x y"))
            .collect();
        let g = group_by_label(&four, 2, 0).unwrap();
        assert_eq!(g.len(), 2);
        assert!(g
            .iter()
            .all(|g| g.members.len() == 2 && g.label == Label::Factual));

        let d = docs(3, 2);
        assert_eq!(group_by_label(&d, 1, 0).unwrap().len(), 5);

        let five: Vec<_> = (0..5)
            .map(|i| doc(&format!("h{i}"), Label::Hallucinated, "x y"))
            .collect();
        let sizes: Vec<usize> = group_by_label(&five, 2, 3)
            .unwrap()
            .iter()
            .map(|g| g.members.len())
            .collect();
        assert_eq!(sizes, vec![2, 2, 1]);

        assert!(group_by_label(&five, 0, 0).is_err());
    }

    #[test]
    fn repeated_bigrams() {
        assert_eq!(repeated_ngram_count("a b a b a", 2).unwrap(), 2);
        assert_eq!(repeated_ngram_count("a b c", 2).unwrap(), 0);
    }

    #[test]
    fn stats_mean_length() {
        let d = vec![
            doc("1", Label::Factual, "a b c d"),
            doc("2", Label::Factual, "a b c d e f"),
        ];
        let s = corpus_stats(&d, 2).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.rows[0].avg_length, 5.0);
        assert!(s.to_table().contains("factual"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn corpus() -> impl Strategy<Value = Vec<Document>> {
            proptest::collection::vec(any::<bool>(), 1..60).prop_map(|labels| {
                labels
                    .into_iter()
                    .enumerate()
                    .map(|(i, h)| {
                        let l = if h {
                            Label::Hallucinated
                        } else {
                            Label::Factual
                        };
                        doc(&format!("{i}:{l}"), l, "t")
                    })
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn split_is_partition(d in corpus(), seed in any::<u64>()) {
                let (tr, ev) = split_train_eval(&d, &SplitConfig { train_fraction: 0.8, seed }).unwrap();
                let mut all: Vec<_> = tr.iter().chain(&ev).map(|x| x.id.clone()).collect();
                all.sort();
                let mut want: Vec<_> = d.iter().map(|x| x.id.clone()).collect();
                want.sort();
                prop_assert_eq!(all, want);
                for label in [Label::Hallucinated, Label::Factual] {
                    if d.iter().filter(|x| x.label == label).count() >= 5 {
                        prop_assert!(tr.iter().any(|x| x.label == label));
                        prop_assert!(ev.iter().any(|x| x.label == label));
                    }
                }
            }

            #[test]
            fn groups_partition_and_homogeneous(d in corpus(), m in 1usize..8, seed in any::<u64>()) {
                let groups = group_by_label(&d, m, seed).unwrap();
                let mut seen: Vec<_> = groups.iter().flat_map(|g| g.members.iter().map(|x| x.id.clone())).collect();
                seen.sort();
                let mut want: Vec<_> = d.iter().map(|x| x.id.clone()).collect();
                want.sort();
                prop_assert_eq!(seen, want);
                for g in &groups {
                    prop_assert!(!g.members.is_empty() && g.members.len() <= m);
                    prop_assert!(g.members.iter().all(|x| x.label == g.label));
                }
            }
        }
    }
}
