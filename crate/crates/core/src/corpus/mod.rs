//! Synthetic multi-silo BIO corpus generation, splits and file I/O.
//!
//! Each silo draws templated report sentences; adverse-event spans are
//! labeled B I.., everything else O. All silos share one adverse-event
//! lexicon but resample its frequencies through a per-silo Zipf exponent,
//! and each silo holds vaccine brand names that appear nowhere else. Silo
//! sizes follow the benchmark ladder scaled by `scale`, preserving the
//! large/small imbalance that drives the federation experiments.

pub mod conll;
pub mod lexicon;

pub use conll::{format_conll, parse_conll, read_conll, write_conll};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::tagger::{BioTag, Sentence, PAD_INDEX, UNK_INDEX};

/// Stable silo identifier; aggregation and reports order by it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SiloId(pub String);

impl SiloId {
    pub fn new(id: impl Into<String>) -> Self {
        SiloId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SiloId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A sentence before vocabulary encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSentence {
    pub tokens: Vec<String>,
    pub labels: Vec<BioTag>,
}

/// Closed vocabulary over a generated corpus plus the two reserved entries.
#[derive(Debug, Clone)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Build from every token of `silos`, sorted for determinism.
    pub fn build(silos: &[RawSiloData]) -> Vocab {
        let mut unique: Vec<&str> = silos
            .iter()
            .flat_map(|silo| silo.splits.iter())
            .flatten()
            .flat_map(|sentence| sentence.tokens.iter().map(String::as_str))
            .collect::<HashSet<&str>>()
            .into_iter()
            .collect();
        unique.sort_unstable();

        let mut words = Vec::with_capacity(unique.len() + 2);
        words.push("<pad>".to_string());
        words.push("<unk>".to_string());
        words.extend(unique.into_iter().map(String::from));
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocab { words, index }
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }

    pub fn token_index(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(UNK_INDEX)
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.words.get(index).map(String::as_str)
    }

    pub fn encode(&self, raw: &RawSentence) -> Result<Sentence> {
        let tokens: Vec<usize> = raw.tokens.iter().map(|t| self.token_index(t)).collect();
        Sentence::new(tokens, raw.labels.clone())
    }
}

/// Names of the four splits, in ratio order.
pub const SPLIT_NAMES: [&str; 4] = ["train", "validation", "tune", "test"];

/// Default split proportions.
pub const DEFAULT_SPLIT_RATIOS: [f64; 4] = [0.6, 0.1, 0.1, 0.2];

/// Benchmark silo sentence ladder before scaling.
pub const BENCHMARK_SENTENCE_LADDER: [u64; 10] =
    [42207, 12688, 10848, 11366, 6664, 1751, 1413, 426, 206, 161];

/// One silo's generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiloProfile {
    pub id: SiloId,
    /// Unscaled sentence count; the generated count is `round(base * scale)`.
    pub base_sentences: u64,
    /// Brand names private to this silo.
    pub vaccine_names: Vec<String>,
    /// Zipf exponent reshaping the shared adverse-event frequencies.
    pub ae_skew: f64,
}

/// Full corpus description; serializable as a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub scale: f64,
    pub seed: u64,
    pub silos: Vec<SiloProfile>,
    /// Shared adverse-event phrases, 1-4 tokens each.
    pub adverse_events: Vec<String>,
    /// Filler vocabulary for template `{f}` slots.
    pub filler: Vec<String>,
}

impl CorpusSpec {
    /// The benchmark spec: ten silos on the sentence ladder, built-in
    /// lexicons, per-silo skew exponents sampled in [0.8, 1.4] from `seed`.
    pub fn benchmark(seed: u64) -> CorpusSpec {
        let ids = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];
        let silos = BENCHMARK_SENTENCE_LADDER
            .iter()
            .enumerate()
            .map(|(i, &base)| {
                let mut rng = seeded(derive_seed(seed, "ae-skew", &[i as u64]));
                SiloProfile {
                    id: SiloId::new(format!("silo-{}", ids[i])),
                    base_sentences: base,
                    vaccine_names: lexicon::VACCINE_NAMES[i]
                        .iter()
                        .map(|s| s.to_string())
                        .collect(),
                    ae_skew: rng.random_range(0.8..1.4),
                }
            })
            .collect();
        CorpusSpec {
            scale: 0.1,
            seed,
            silos,
            adverse_events: lexicon::ADVERSE_EVENTS.iter().map(|s| s.to_string()).collect(),
            filler: lexicon::FILLER_WORDS.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Scaled sentence count for one silo.
    pub fn scaled_count(&self, profile: &SiloProfile) -> usize {
        (profile.base_sentences as f64 * self.scale).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::Generation("scale must be a positive finite number".into()));
        }
        if self.silos.is_empty() {
            return Err(Error::Generation("corpus needs at least one silo".into()));
        }
        let mut ids = HashSet::new();
        let mut all_vaccines: HashSet<&str> = HashSet::new();
        for profile in &self.silos {
            if profile.id.as_str().is_empty() {
                return Err(Error::Generation("silo id must be non-empty".into()));
            }
            if !ids.insert(profile.id.clone()) {
                return Err(Error::Generation(format!("duplicate silo id {}", profile.id)));
            }
            if profile.vaccine_names.is_empty() {
                return Err(Error::Generation(format!(
                    "silo {} has no vaccine names",
                    profile.id
                )));
            }
            for name in &profile.vaccine_names {
                if !all_vaccines.insert(name.as_str()) {
                    return Err(Error::Generation(format!(
                        "vaccine name {name:?} appears in more than one silo"
                    )));
                }
            }
            if !(profile.ae_skew > 0.0) || !profile.ae_skew.is_finite() {
                return Err(Error::Generation(format!(
                    "silo {} has invalid skew exponent {}",
                    profile.id, profile.ae_skew
                )));
            }
            // Ten sentences is the documented minimum: below that the
            // 60/10/10/20 cut cannot keep all four splits non-empty with
            // headroom. The benchmark ladder bottoms out at 16.
            let n = self.scaled_count(profile);
            if n < 10 {
                return Err(Error::Generation(format!(
                    "scale {} yields only {n} sentences for silo {} (minimum 10)",
                    self.scale, profile.id
                )));
            }
        }
        if self.adverse_events.is_empty() {
            return Err(Error::Generation("adverse-event lexicon is empty".into()));
        }
        for phrase in &self.adverse_events {
            let tokens = phrase.split_whitespace().count();
            if !(1..=4).contains(&tokens) {
                return Err(Error::Generation(format!(
                    "adverse-event span {phrase:?} must be 1..=4 tokens"
                )));
            }
        }
        if self.filler.is_empty() {
            return Err(Error::Generation("filler lexicon is empty".into()));
        }
        Ok(())
    }

    /// Normalized adverse-event frequency distribution for a skew exponent.
    pub fn ae_distribution(&self, skew: f64) -> Vec<f64> {
        let mut weights: Vec<f64> = (0..self.adverse_events.len())
            .map(|rank| ((rank + 1) as f64).powf(-skew))
            .collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        weights
    }
}

/// One silo's generated raw sentences, already split.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSiloData {
    pub id: SiloId,
    /// Indexed like [`SPLIT_NAMES`].
    pub splits: [Vec<RawSentence>; 4],
}

impl RawSiloData {
    pub fn total_sentences(&self) -> usize {
        self.splits.iter().map(Vec::len).sum()
    }
}

/// One silo's encoded splits, ready for training.
#[derive(Debug, Clone)]
pub struct SiloDataset {
    pub id: SiloId,
    pub train: Vec<Sentence>,
    pub validation: Vec<Sentence>,
    pub tune: Vec<Sentence>,
    pub test: Vec<Sentence>,
}

impl SiloDataset {
    pub fn split(&self, name: &str) -> Option<&[Sentence]> {
        match name {
            "train" => Some(&self.train),
            "validation" => Some(&self.validation),
            "tune" => Some(&self.tune),
            "test" => Some(&self.test),
            _ => None,
        }
    }
}

/// A generated corpus: raw text for files, encoded datasets for training.
#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub vocab: Vocab,
    pub raw: Vec<RawSiloData>,
    pub datasets: Vec<SiloDataset>,
}

enum Piece {
    Word(String),
    Filler,
    Vaccine,
    AdverseEvent,
}

struct Template {
    pieces: Vec<Piece>,
    ae_slots: usize,
}

fn parse_templates() -> Vec<Template> {
    lexicon::TEMPLATES
        .iter()
        .map(|text| {
            let pieces: Vec<Piece> = text
                .split_whitespace()
                .map(|word| match word {
                    "{ae}" => Piece::AdverseEvent,
                    "{vx}" => Piece::Vaccine,
                    "{f}" => Piece::Filler,
                    other => Piece::Word(other.to_string()),
                })
                .collect();
            let ae_slots = pieces
                .iter()
                .filter(|p| matches!(p, Piece::AdverseEvent))
                .count();
            Template { pieces, ae_slots }
        })
        .collect()
}

/// Draw an index from cumulative weights.
fn draw_index(cumulative: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

fn generate_silo_sentences(
    spec: &CorpusSpec,
    profile: &SiloProfile,
    count: usize,
    templates: &[Template],
    rng: &mut ChaCha8Rng,
) -> Vec<RawSentence> {
    // Cumulative Zipf weights over the shared lexicon, reskewed per silo.
    let mut ae_cumulative = spec.ae_distribution(profile.ae_skew);
    for i in 1..ae_cumulative.len() {
        ae_cumulative[i] += ae_cumulative[i - 1];
    }
    let mut count_cumulative = lexicon::ENTITY_COUNT_WEIGHTS.to_vec();
    for i in 1..count_cumulative.len() {
        count_cumulative[i] += count_cumulative[i - 1];
    }
    let by_slots: Vec<Vec<&Template>> = (0..=2)
        .map(|n| templates.iter().filter(|t| t.ae_slots == n).collect())
        .collect();

    let mut sentences = Vec::with_capacity(count);
    for _ in 0..count {
        let slots = draw_index(&count_cumulative, rng);
        let group = &by_slots[slots];
        let template = group[rng.random_range(0..group.len())];

        let mut tokens = Vec::new();
        let mut labels = Vec::new();
        for piece in &template.pieces {
            match piece {
                Piece::Word(word) => {
                    tokens.push(word.clone());
                    labels.push(BioTag::O);
                }
                Piece::Filler => {
                    let word = &spec.filler[rng.random_range(0..spec.filler.len())];
                    tokens.push(word.clone());
                    labels.push(BioTag::O);
                }
                Piece::Vaccine => {
                    let name =
                        &profile.vaccine_names[rng.random_range(0..profile.vaccine_names.len())];
                    tokens.push(name.clone());
                    labels.push(BioTag::O);
                }
                Piece::AdverseEvent => {
                    let phrase = &spec.adverse_events[draw_index(&ae_cumulative, rng)];
                    for (i, word) in phrase.split_whitespace().enumerate() {
                        tokens.push(word.to_string());
                        labels.push(if i == 0 { BioTag::B } else { BioTag::I });
                    }
                }
            }
        }
        sentences.push(RawSentence { tokens, labels });
    }
    sentences
}

/// Generate the full corpus described by `spec`: per-silo sentences, seeded
/// splits and the closed vocabulary over everything.
pub fn generate(spec: &CorpusSpec) -> Result<GeneratedCorpus> {
    spec.validate()?;
    let templates = parse_templates();

    let mut raw = Vec::with_capacity(spec.silos.len());
    for (index, profile) in spec.silos.iter().enumerate() {
        let count = spec.scaled_count(profile);
        let mut rng = seeded(derive_seed(spec.seed, "corpus-silo", &[index as u64]));
        let sentences = generate_silo_sentences(spec, profile, count, &templates, &mut rng);
        let split_seed = derive_seed(spec.seed, "corpus-split", &[index as u64]);
        let mut parts = split(sentences, &DEFAULT_SPLIT_RATIOS, split_seed)?;
        let test = parts.pop().unwrap();
        let tune = parts.pop().unwrap();
        let validation = parts.pop().unwrap();
        let train = parts.pop().unwrap();
        raw.push(RawSiloData {
            id: profile.id.clone(),
            splits: [train, validation, tune, test],
        });
    }

    let (vocab, datasets) = encode_silos(&raw)?;
    Ok(GeneratedCorpus { vocab, raw, datasets })
}

/// Seeded shuffle followed by a contiguous cut into `ratios.len()` parts.
///
/// Sizes follow the largest-remainder rule, so each part is within one item
/// of its exact share; parts are disjoint and exhaustive.
pub fn split<T>(mut items: Vec<T>, ratios: &[f64], seed: u64) -> Result<Vec<Vec<T>>> {
    if ratios.is_empty() {
        return Err(Error::Split("need at least one ratio".into()));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Split(format!("ratios sum to {total}, expected 1")));
    }
    let sizes = split_sizes(items.len(), ratios);
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::Split(format!(
            "{} sentences are too few for non-empty splits with ratios {ratios:?}",
            items.len()
        )));
    }

    use rand::seq::SliceRandom;
    items.shuffle(&mut seeded(seed));

    let mut out = Vec::with_capacity(sizes.len());
    let mut rest = items;
    for &size in &sizes[..sizes.len() - 1] {
        let tail = rest.split_off(size);
        out.push(rest);
        rest = tail;
    }
    out.push(rest);
    Ok(out)
}

/// Largest-remainder apportionment of `n` items.
fn split_sizes(n: usize, ratios: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(n - assigned) {
        sizes[i] += 1;
    }
    sizes
}

/// Build the closed vocabulary and encode every split of every silo.
pub fn encode_silos(raw: &[RawSiloData]) -> Result<(Vocab, Vec<SiloDataset>)> {
    let vocab = Vocab::build(raw);
    let mut datasets = Vec::with_capacity(raw.len());
    for silo in raw {
        let encode_all = |sentences: &[RawSentence]| -> Result<Vec<Sentence>> {
            sentences.iter().map(|s| vocab.encode(s)).collect()
        };
        datasets.push(SiloDataset {
            id: silo.id.clone(),
            train: encode_all(&silo.splits[0])?,
            validation: encode_all(&silo.splits[1])?,
            tune: encode_all(&silo.splits[2])?,
            test: encode_all(&silo.splits[3])?,
        });
    }
    Ok((vocab, datasets))
}

/// Write one `<silo>.<split>.conll` file per silo and split under `dir`.
pub fn write_corpus_files(raw: &[RawSiloData], dir: &Path) -> Result<()> {
    for silo in raw {
        for (split_index, name) in SPLIT_NAMES.iter().enumerate() {
            let path = dir.join(format!("{}.{}.conll", silo.id, name));
            write_conll(&silo.splits[split_index], &path)?;
        }
    }
    Ok(())
}

/// Read every `<silo>.<split>.conll` under `dir` back into silo data,
/// sorted by silo id. Each discovered silo must provide all four splits.
pub fn read_corpus_files(dir: &Path) -> Result<Vec<RawSiloData>> {
    let mut found: BTreeMap<String, [Option<Vec<RawSentence>>; 4]> = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = match path.file_name().and_then(|n| n.to_str()) {
            Some(n) if n.ends_with(".conll") => n.trim_end_matches(".conll"),
            _ => continue,
        };
        let Some((silo, split_name)) = name.rsplit_once('.') else {
            continue;
        };
        let Some(split_index) = SPLIT_NAMES.iter().position(|s| *s == split_name) else {
            return Err(Error::config(format!("unknown split in file name {name:?}")));
        };
        found.entry(silo.to_string()).or_default()[split_index] = Some(read_conll(&path)?);
    }
    if found.is_empty() {
        return Err(Error::config(format!("no .conll files under {}", dir.display())));
    }
    let mut silos = Vec::with_capacity(found.len());
    for (id, splits) in found {
        let mut complete = Vec::with_capacity(4);
        for (i, split) in splits.into_iter().enumerate() {
            complete.push(split.ok_or_else(|| {
                Error::config(format!("silo {id} is missing its {} split", SPLIT_NAMES[i]))
            })?);
        }
        let [train, validation, tune, test]: [Vec<RawSentence>; 4] =
            complete.try_into().expect("exactly four splits");
        silos.push(RawSiloData { id: SiloId::new(id), splits: [train, validation, tune, test] });
    }
    Ok(silos)
}

// `Vocab::build` guarantees the reserved indices; keep them in one place.
const _: () = {
    assert!(PAD_INDEX == 0);
    assert!(UNK_INDEX == 1);
};
