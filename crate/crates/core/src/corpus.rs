//! Posts, human annotations, stratified sampling, and the complete
//! items × raters annotation matrix that all agreement statistics consume.

use crate::label::SentimentLabel;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

/// Thread depth of a post. Replies nested deeper than one level collapse
/// into `L2plus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PostLevel {
    /// Starts a new thread.
    L0,
    /// Direct reply to a thread starter.
    L1,
    /// Reply to a reply, at any depth.
    L2plus,
}

impl PostLevel {
    pub const ALL: [PostLevel; 3] = [PostLevel::L0, PostLevel::L1, PostLevel::L2plus];

    /// File representation: `"0"`, `"1"`, `"2+"`.
    pub fn as_str(&self) -> &'static str {
        match self {
            PostLevel::L0 => "0",
            PostLevel::L1 => "1",
            PostLevel::L2plus => "2+",
        }
    }

    /// Parse the file representation. Plain integers ≥ 2 collapse into `L2plus`.
    pub fn parse(s: &str) -> Option<PostLevel> {
        match s.trim() {
            "0" => Some(PostLevel::L0),
            "1" => Some(PostLevel::L1),
            "2+" => Some(PostLevel::L2plus),
            other => match other.parse::<u32>() {
                Ok(n) if n >= 2 => Some(PostLevel::L2plus),
                _ => None,
            },
        }
    }
}

impl fmt::Display for PostLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One community message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    pub id: String,
    pub text: String,
    pub level: PostLevel,
    pub community: String,
}

/// A sentiment judgement from one rater (human or model) on one post.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub post_id: String,
    pub rater_id: String,
    pub label: SentimentLabel,
}

/// Input file format for posts and annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Jsonl,
    Csv,
}

impl FileFormat {
    /// Infer from the file extension; anything that is not `.csv` is JSONL.
    pub fn from_path(path: &Path) -> FileFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FileFormat::Csv,
            _ => FileFormat::Jsonl,
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate post id {0:?}")]
    DuplicateId(String),
    #[error("unknown label {0:?} (expected negative, neutral, or positive)")]
    UnknownLabel(String),
    #[error("duplicate annotation for post {post_id:?} by rater {rater_id:?}")]
    DuplicatePair { post_id: String, rater_id: String },
    #[error("sample of {requested} requested but only {available} posts available")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("incomplete design: {} missing (post, rater) pairs, first {:?}", missing.len(), missing.first())]
    IncompleteDesign { missing: Vec<(String, String)> },
    #[error("matrix needs at least 1 item and 2 raters, got {items} item(s) and {raters} rater(s)")]
    InvalidMatrixShape { items: usize, raters: usize },
}

/// An id-unique collection of posts, in load order.
#[derive(Debug, Clone, Default)]
pub struct PostSet {
    posts: Vec<Post>,
    by_id: HashMap<String, usize>,
}

impl PostSet {
    pub fn new() -> PostSet {
        PostSet::default()
    }

    /// Build from a vector, rejecting duplicate ids.
    pub fn from_posts(posts: Vec<Post>) -> Result<PostSet, CorpusError> {
        let mut set = PostSet::new();
        for post in posts {
            set.push(post)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, post: Post) -> Result<(), CorpusError> {
        if self.by_id.contains_key(&post.id) {
            return Err(CorpusError::DuplicateId(post.id));
        }
        self.by_id.insert(post.id.clone(), self.posts.len());
        self.posts.push(post);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Post> {
        self.by_id.get(id).map(|&i| &self.posts[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Post> {
        self.posts.iter()
    }

    /// Per-level population counts in `PostLevel::ALL` order.
    pub fn level_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for post in &self.posts {
            let idx = PostLevel::ALL.iter().position(|l| *l == post.level).unwrap();
            counts[idx] += 1;
        }
        counts
    }
}

/// A (post, rater)-unique collection of annotations, in load order.
#[derive(Debug, Clone, Default)]
pub struct AnnotationSet {
    annotations: Vec<Annotation>,
    pairs: HashSet<(String, String)>,
}

impl AnnotationSet {
    pub fn new() -> AnnotationSet {
        AnnotationSet::default()
    }

    pub fn from_annotations(annotations: Vec<Annotation>) -> Result<AnnotationSet, CorpusError> {
        let mut set = AnnotationSet::new();
        for ann in annotations {
            set.push(ann)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, ann: Annotation) -> Result<(), CorpusError> {
        let key = (ann.post_id.clone(), ann.rater_id.clone());
        if !self.pairs.insert(key) {
            return Err(CorpusError::DuplicatePair {
                post_id: ann.post_id,
                rater_id: ann.rater_id,
            });
        }
        self.annotations.push(ann);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Annotation> {
        self.annotations.iter()
    }

    /// All distinct rater ids, lexicographically sorted.
    pub fn rater_ids(&self) -> Vec<String> {
        let ids: BTreeSet<&str> = self.annotations.iter().map(|a| a.rater_id.as_str()).collect();
        ids.into_iter().map(String::from).collect()
    }
}

/// Complete items × raters label grid. Items and raters are ordered
/// lexicographically by id so every downstream report is byte-stable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationMatrix {
    items: Vec<String>,
    raters: Vec<String>,
    cells: Vec<SentimentLabel>, // row-major, item × rater
}

impl AnnotationMatrix {
    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn raters(&self) -> &[String] {
        &self.raters
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_raters(&self) -> usize {
        self.raters.len()
    }

    pub fn label(&self, item: usize, rater: usize) -> SentimentLabel {
        self.cells[item * self.raters.len() + rater]
    }

    /// One rater's labels in item order.
    pub fn column(&self, rater: usize) -> Vec<SentimentLabel> {
        (0..self.items.len()).map(|i| self.label(i, rater)).collect()
    }

    /// All labels given to one item.
    pub fn row(&self, item: usize) -> &[SentimentLabel] {
        let w = self.raters.len();
        &self.cells[item * w..(item + 1) * w]
    }

    /// Flatten back into annotations (item-major, rater order within item).
    pub fn to_annotations(&self) -> Vec<Annotation> {
        let mut out = Vec::with_capacity(self.items.len() * self.raters.len());
        for (i, item) in self.items.iter().enumerate() {
            for (r, rater) in self.raters.iter().enumerate() {
                out.push(Annotation {
                    post_id: item.clone(),
                    rater_id: rater.clone(),
                    label: self.label(i, r),
                });
            }
        }
        out
    }

    /// Append one extra rater column, e.g. a model acting as an annotator.
    /// `labels` must be aligned with `items()`.
    pub fn with_added_rater(
        &self,
        rater_id: &str,
        labels: &[SentimentLabel],
    ) -> Result<AnnotationMatrix, CorpusError> {
        if labels.len() != self.items.len() {
            return Err(CorpusError::IncompleteDesign {
                missing: self
                    .items
                    .iter()
                    .skip(labels.len())
                    .map(|it| (it.clone(), rater_id.to_string()))
                    .collect(),
            });
        }
        let mut raters = self.raters.clone();
        raters.push(rater_id.to_string());
        let w = self.raters.len();
        let mut cells = Vec::with_capacity(self.items.len() * (w + 1));
        for i in 0..self.items.len() {
            cells.extend_from_slice(&self.cells[i * w..(i + 1) * w]);
            cells.push(labels[i]);
        }
        Ok(AnnotationMatrix {
            items: self.items.clone(),
            raters,
            cells,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PostRecord {
    id: String,
    text: String,
    level: String,
    community: String,
}

#[derive(Serialize, Deserialize)]
struct AnnotationRecord {
    post_id: String,
    rater_id: String,
    label: String,
}

fn validate_post(rec: PostRecord, line: usize) -> Result<Post, CorpusError> {
    if rec.text.trim().is_empty() {
        return Err(CorpusError::Parse {
            line,
            msg: format!("post {:?} has empty text", rec.id),
        });
    }
    let level = PostLevel::parse(&rec.level).ok_or_else(|| CorpusError::Parse {
        line,
        msg: format!("invalid level {:?} (expected \"0\", \"1\", or \"2+\")", rec.level),
    })?;
    Ok(Post {
        id: rec.id,
        text: rec.text,
        level,
        community: rec.community,
    })
}

/// Load posts from a JSONL or CSV file. Lines starting with `#` are
/// provenance comments and are skipped.
pub fn load_posts(path: &Path, format: FileFormat) -> Result<PostSet, CorpusError> {
    let mut set = PostSet::new();
    match format {
        FileFormat::Jsonl => {
            let reader = BufReader::new(fs::File::open(path)?);
            for (idx, line) in reader.lines().enumerate() {
                let line = line?;
                let lineno = idx + 1;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                let rec: PostRecord =
                    serde_json::from_str(trimmed).map_err(|e| CorpusError::Parse {
                        line: lineno,
                        msg: e.to_string(),
                    })?;
                set.push(validate_post(rec, lineno)?)?;
            }
        }
        FileFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .comment(Some(b'#'))
                .from_path(path)
                .map_err(csv_io)?;
            for result in reader.deserialize() {
                let rec: PostRecord = result.map_err(|e| CorpusError::Parse {
                    line: csv_line(&e),
                    msg: e.to_string(),
                })?;
                set.push(validate_post(rec, 0)?)?;
            }
        }
    }
    Ok(set)
}

/// Load annotations from a JSONL or CSV file (format inferred from the
/// extension). Labels parse case-insensitively into the closed label set.
pub fn load_annotations(path: &Path) -> Result<AnnotationSet, CorpusError> {
    let mut set = AnnotationSet::new();
    let mut push = |rec: AnnotationRecord| -> Result<(), CorpusError> {
        let label = SentimentLabel::parse(&rec.label)
            .ok_or_else(|| CorpusError::UnknownLabel(rec.label.clone()))?;
        set.push(Annotation {
            post_id: rec.post_id,
            rater_id: rec.rater_id,
            label,
        })
    };
    match FileFormat::from_path(path) {
        FileFormat::Jsonl => {
            let reader = BufReader::new(fs::File::open(path)?);
            for (idx, line) in reader.lines().enumerate() {
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                let rec: AnnotationRecord =
                    serde_json::from_str(trimmed).map_err(|e| CorpusError::Parse {
                        line: idx + 1,
                        msg: e.to_string(),
                    })?;
                push(rec)?;
            }
        }
        FileFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .comment(Some(b'#'))
                .from_path(path)
                .map_err(csv_io)?;
            for result in reader.deserialize() {
                let rec: AnnotationRecord = result.map_err(|e| CorpusError::Parse {
                    line: csv_line(&e),
                    msg: e.to_string(),
                })?;
                push(rec)?;
            }
        }
    }
    Ok(set)
}

/// Write posts as JSONL or CSV. `header` lines, when given, are emitted as
/// `#`-prefixed provenance comments.
pub fn write_posts(
    path: &Path,
    posts: &PostSet,
    format: FileFormat,
    header: Option<&str>,
) -> Result<(), CorpusError> {
    let mut file = fs::File::create(path)?;
    if let Some(header) = header {
        for line in header.lines() {
            writeln!(file, "# {line}")?;
        }
    }
    match format {
        FileFormat::Jsonl => {
            for post in posts.iter() {
                let rec = PostRecord {
                    id: post.id.clone(),
                    text: post.text.clone(),
                    level: post.level.as_str().to_string(),
                    community: post.community.clone(),
                };
                writeln!(file, "{}", serde_json::to_string(&rec).expect("serializable"))?;
            }
        }
        FileFormat::Csv => {
            let mut writer = csv::Writer::from_writer(file);
            for post in posts.iter() {
                writer
                    .serialize(PostRecord {
                        id: post.id.clone(),
                        text: post.text.clone(),
                        level: post.level.as_str().to_string(),
                        community: post.community.clone(),
                    })
                    .map_err(csv_io)?;
            }
            writer.flush()?;
        }
    }
    Ok(())
}

/// Write annotations as JSONL, with optional `#` provenance header lines.
pub fn write_annotations(
    path: &Path,
    annotations: &[Annotation],
    header: Option<&str>,
) -> Result<(), CorpusError> {
    let mut file = fs::File::create(path)?;
    if let Some(header) = header {
        for line in header.lines() {
            writeln!(file, "# {line}")?;
        }
    }
    for ann in annotations {
        let rec = AnnotationRecord {
            post_id: ann.post_id.clone(),
            rater_id: ann.rater_id.clone(),
            label: ann.label.name().to_string(),
        };
        writeln!(file, "{}", serde_json::to_string(&rec).expect("serializable"))?;
    }
    Ok(())
}

fn csv_io(e: csv::Error) -> CorpusError {
    CorpusError::Parse {
        line: csv_line(&e),
        msg: e.to_string(),
    }
}

fn csv_line(e: &csv::Error) -> usize {
    e.position().map(|p| p.line() as usize).unwrap_or(0)
}

/// Draw `n` posts without replacement, allocating per-level counts
/// proportionally to the population's level shares by largest-remainder
/// rounding. Deterministic for a fixed `(posts, n, seed)` triple; the
/// result is sorted lexicographically by post id.
pub fn stratified_sample(posts: &PostSet, n: usize, seed: u64) -> Result<PostSet, CorpusError> {
    if n > posts.len() {
        return Err(CorpusError::SampleTooLarge {
            requested: n,
            available: posts.len(),
        });
    }

    // Strata in level order, each sorted by id so the draw depends only on
    // the set of posts, not their file order.
    let mut strata: [Vec<&Post>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for post in posts.iter() {
        let idx = PostLevel::ALL.iter().position(|l| *l == post.level).unwrap();
        strata[idx].push(post);
    }
    for stratum in &mut strata {
        stratum.sort_by(|a, b| a.id.cmp(&b.id));
    }

    let quotas = largest_remainder_quotas(&strata.each_ref().map(|s| s.len()), n);

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut selected: Vec<Post> = Vec::with_capacity(n);
    for (stratum, &quota) in strata.iter().zip(quotas.iter()) {
        let mut indices: Vec<usize> = (0..stratum.len()).collect();
        // Partial Fisher-Yates: the first `quota` slots are a uniform draw
        // without replacement.
        for i in 0..quota {
            let j = rng.gen_range(i..indices.len());
            indices.swap(i, j);
        }
        for &idx in indices.iter().take(quota) {
            selected.push(stratum[idx].clone());
        }
    }
    selected.sort_by(|a, b| a.id.cmp(&b.id));
    PostSet::from_posts(selected)
}

/// Integer largest-remainder apportionment of `n` over `counts`-sized strata.
fn largest_remainder_quotas(counts: &[usize; 3], n: usize) -> [usize; 3] {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return [0, 0, 0];
    }
    let mut quotas = [0usize; 3];
    let mut remainders = [(0usize, 0usize); 3]; // (remainder numerator, stratum index)
    let mut allocated = 0;
    for (i, &count) in counts.iter().enumerate() {
        quotas[i] = n * count / total;
        remainders[i] = (n * count % total, i);
        allocated += quotas[i];
    }
    // Largest remainder first; ties broken by level order for determinism.
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut leftover = n - allocated;
    for &(rem, idx) in &remainders {
        if leftover == 0 {
            break;
        }
        // rem == 0 implies an exact quota; skip so empty strata never gain.
        if rem > 0 {
            quotas[idx] += 1;
            leftover -= 1;
        }
    }
    debug_assert_eq!(leftover, 0, "remainder exceeds strata with nonzero remainders");
    quotas
}

/// Assemble the complete matrix for `posts` from `annotations`.
/// Annotations for posts outside `posts` are ignored so a sampled subset can
/// be evaluated against a larger annotation file. Every rater appearing in
/// the annotation set must cover every post.
pub fn build_matrix(
    annotations: &AnnotationSet,
    posts: &PostSet,
) -> Result<AnnotationMatrix, CorpusError> {
    let mut items: Vec<String> = posts.iter().map(|p| p.id.clone()).collect();
    items.sort();
    let raters = annotations.rater_ids();

    if items.is_empty() || raters.len() < 2 {
        return Err(CorpusError::InvalidMatrixShape {
            items: items.len(),
            raters: raters.len(),
        });
    }

    let item_index: HashMap<&str, usize> =
        items.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let rater_index: HashMap<&str, usize> =
        raters.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();

    let mut cells: Vec<Option<SentimentLabel>> = vec![None; items.len() * raters.len()];
    for ann in annotations.iter() {
        let Some(&i) = item_index.get(ann.post_id.as_str()) else {
            continue;
        };
        let r = rater_index[ann.rater_id.as_str()];
        cells[i * raters.len() + r] = Some(ann.label);
    }

    let mut missing = Vec::new();
    for (i, item) in items.iter().enumerate() {
        for (r, rater) in raters.iter().enumerate() {
            if cells[i * raters.len() + r].is_none() {
                missing.push((item.clone(), rater.clone()));
            }
        }
    }
    if !missing.is_empty() {
        return Err(CorpusError::IncompleteDesign { missing });
    }

    Ok(AnnotationMatrix {
        items,
        raters,
        cells: cells.into_iter().map(|c| c.unwrap()).collect(),
    })
}
