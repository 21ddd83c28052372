//! Relation features for RS-tree nodes and a gain-ratio decision tree
//! over them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model_io::ModelFile;
use crate::semrules::{match_rules, Element, Lexicon, RuleKind};
use crate::tree::RSTree;
use crate::types::{DiscourseRelation, Edu};

/// Feature names in record order: six cataphoric, then fourteen anaphoric.
pub const FEATURE_NAMES: [&str; 20] = [
    "cat:Subject",
    "cat:Object",
    "cat:Preposition",
    "cat:Nucleus",
    "cat:Marker-Before",
    "cat:Marker-After",
    "ana:Subject",
    "ana:Absence-of-Subject",
    "ana:Object",
    "ana:Absence-of-Object",
    "ana:Preposition",
    "ana:Absence-of-Preposition",
    "ana:Nucleus",
    "ana:Modifier-Nucleus",
    "ana:Head",
    "ana:Absence-of-Head",
    "ana:Modifier-Head",
    "ana:Absence-of-Modifier-Head",
    "ana:Marker-Before",
    "ana:Marker-After",
];

pub const CAT_MARKER_BEFORE: usize = 4;
pub const CAT_MARKER_AFTER: usize = 5;
pub const ANA_MARKER_BEFORE: usize = 18;
pub const ANA_MARKER_AFTER: usize = 19;

pub fn is_marker_feature(i: usize) -> bool {
    matches!(i, CAT_MARKER_BEFORE | CAT_MARKER_AFTER | ANA_MARKER_BEFORE | ANA_MARKER_AFTER)
}

fn cat_index(e: Element) -> Option<usize> {
    match e {
        Element::Subject => Some(0),
        Element::Object => Some(1),
        Element::Preposition => Some(2),
        Element::Nucleus => Some(3),
        Element::MarkerBefore => Some(CAT_MARKER_BEFORE),
        Element::MarkerAfter => Some(CAT_MARKER_AFTER),
        _ => None,
    }
}

fn ana_index(e: Element) -> usize {
    6 + Element::ALL.iter().position(|&x| x == e).expect("element in catalog")
}

/// Binary elements hold `0`/`1`; marker elements hold a token or the empty
/// string.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureRecord {
    values: Vec<String>,
}

impl Default for FeatureRecord {
    fn default() -> Self {
        FeatureRecord {
            values: (0..FEATURE_NAMES.len())
                .map(|i| if is_marker_feature(i) { String::new() } else { "0".into() })
                .collect(),
        }
    }
}

impl FeatureRecord {
    pub fn new(values: Vec<String>) -> Result<Self> {
        if values.len() != FEATURE_NAMES.len() {
            return Err(Error::invalid(format!("feature record has {} values, expected 20", values.len())));
        }
        for (i, v) in values.iter().enumerate() {
            if !is_marker_feature(i) && v != "0" && v != "1" {
                return Err(Error::invalid(format!("{} must be 0 or 1, found `{v}`", FEATURE_NAMES[i])));
            }
        }
        Ok(FeatureRecord { values })
    }

    pub fn value(&self, i: usize) -> &str {
        &self.values[i]
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn by_name(&self, name: &str) -> Option<&str> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.value(i))
    }

    fn set_bit(&mut self, i: usize) {
        self.values[i] = "1".into();
    }

    fn set_marker(&mut self, i: usize, token: &str) {
        if self.values[i].is_empty() {
            self.values[i] = token.to_string();
        }
    }

    /// True when either pairing marker element is filled.
    pub fn has_marker(&self) -> bool {
        [CAT_MARKER_BEFORE, CAT_MARKER_AFTER, ANA_MARKER_BEFORE, ANA_MARKER_AFTER]
            .iter()
            .any(|&i| !self.values[i].is_empty())
    }
}

/// One side of a relation: a single EDU or the promotion EDUs of a subtree.
#[derive(Clone, Debug)]
pub struct Unit<'a> {
    pub edus: Vec<&'a Edu>,
    pub internal: bool,
}

impl<'a> Unit<'a> {
    pub fn edu(edu: &'a Edu) -> Self {
        Unit { edus: vec![edu], internal: false }
    }

    /// The promotion EDUs of `node`, looked up by position.
    pub fn node(node: &RSTree, edus: &'a [Edu]) -> Result<Self> {
        let picked = node
            .promotion
            .iter()
            .map(|&p| {
                edus.iter()
                    .find(|e| e.position == p)
                    .ok_or_else(|| Error::invalid(format!("tree refers to missing EDU {p}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Unit { edus: picked, internal: !node.is_leaf() })
    }
}

/// Features of the ordered pair. Several promotion EDUs combine by
/// element-wise maximum; marker elements keep the first token found.
pub fn extract_relation_features(cat: &Unit, ana: &Unit, lexicon: &Lexicon) -> FeatureRecord {
    let mut rec = FeatureRecord::default();
    let skip_absence = cat.internal || ana.internal;
    for c in &cat.edus {
        for a in &ana.edus {
            for m in match_rules(c, a, lexicon) {
                let info = m.rule.info();
                match info.kind {
                    RuleKind::Absence if skip_absence => {}
                    RuleKind::Absence | RuleKind::Repetition => {
                        info.cat.iter().filter_map(|&e| cat_index(e)).for_each(|i| rec.set_bit(i));
                        info.ana.iter().for_each(|&e| rec.set_bit(ana_index(e)));
                    }
                    RuleKind::Addition => {
                        let token = &m.binding[0];
                        rec.set_marker(CAT_MARKER_AFTER, token);
                        rec.set_marker(ANA_MARKER_BEFORE, token);
                    }
                }
            }
        }
    }
    rec
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        class: DiscourseRelation,
        counts: BTreeMap<DiscourseRelation, usize>,
    },
    Split {
        feature: usize,
        branches: BTreeMap<String, Node>,
        /// Branch taken by values unseen in training.
        default: String,
        counts: BTreeMap<DiscourseRelation, usize>,
    },
}

impl Node {
    pub fn counts(&self) -> &BTreeMap<DiscourseRelation, usize> {
        match self {
            Node::Leaf { counts, .. } | Node::Split { counts, .. } => counts,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { branches, .. } => branches.values().map(Node::leaf_count).sum(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
}

impl ModelFile for DecisionTree {
    const FORMAT: &'static str = "rst-dtree";
    const VERSION: u32 = 1;

    fn validate(&self) -> Result<()> {
        fn check(n: &Node, used: &mut Vec<usize>) -> Result<()> {
            match n {
                Node::Leaf { counts, .. } if counts.values().sum::<usize>() == 0 => {
                    Err(Error::InvalidModel("leaf without training records".into()))
                }
                Node::Leaf { .. } => Ok(()),
                Node::Split { feature, branches, default, counts } => {
                    if *feature >= FEATURE_NAMES.len() || used.contains(feature) {
                        return Err(Error::InvalidModel(format!("bad or repeated test on feature {feature}")));
                    }
                    if !branches.contains_key(default) {
                        return Err(Error::InvalidModel("default branch is missing".into()));
                    }
                    let mut sum: BTreeMap<DiscourseRelation, usize> = BTreeMap::new();
                    for b in branches.values() {
                        for (k, v) in b.counts() {
                            *sum.entry(*k).or_default() += v;
                        }
                    }
                    if &sum != counts {
                        return Err(Error::InvalidModel("branch counts do not add up".into()));
                    }
                    used.push(*feature);
                    for b in branches.values() {
                        check(b, used)?;
                    }
                    used.pop();
                    Ok(())
                }
            }
        }
        check(&self.root, &mut Vec::new())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    pub min_leaf: usize,
    /// Confidence factor of pessimistic pruning; `None` disables pruning.
    pub confidence: Option<f64>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { min_leaf: 1, confidence: Some(0.25) }
    }
}

/// Candidate ratios seen at one split during induction.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitTrace {
    pub records: usize,
    pub chosen: usize,
    pub gain_ratios: Vec<(usize, f64)>,
}

fn entropy<'a>(counts: impl Iterator<Item = &'a usize> + Clone) -> f64 {
    let total: usize = counts.clone().sum();
    if total == 0 {
        return 0.0;
    }
    counts
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}

fn class_counts(ix: &[usize], labels: &[DiscourseRelation]) -> BTreeMap<DiscourseRelation, usize> {
    let mut m = BTreeMap::new();
    for &i in ix {
        *m.entry(labels[i]).or_default() += 1;
    }
    m
}

fn majority(counts: &BTreeMap<DiscourseRelation, usize>) -> DiscourseRelation {
    let mut best = None;
    for (&k, &v) in counts {
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((k, v));
        }
    }
    best.expect("nonempty counts").0
}

fn partition<'r>(ix: &[usize], records: &'r [FeatureRecord], f: usize) -> BTreeMap<&'r str, Vec<usize>> {
    let mut m: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &i in ix {
        m.entry(records[i].value(f)).or_default().push(i);
    }
    m
}

/// Information gain ratio of splitting `ix` on feature `f`, or `None` when
/// the feature is constant there.
pub fn gain_ratio(ix: &[usize], records: &[FeatureRecord], labels: &[DiscourseRelation], f: usize) -> Option<f64> {
    let parts = partition(ix, records, f);
    if parts.len() < 2 {
        return None;
    }
    let n = ix.len() as f64;
    let base = entropy(class_counts(ix, labels).values());
    let mut remainder = 0.0;
    let mut split_info = 0.0;
    for part in parts.values() {
        let p = part.len() as f64 / n;
        remainder += p * entropy(class_counts(part, labels).values());
        split_info -= p * p.log2();
    }
    Some((base - remainder) / split_info)
}

fn grow(
    ix: &[usize],
    records: &[FeatureRecord],
    labels: &[DiscourseRelation],
    used: &mut Vec<usize>,
    params: &TreeParams,
    trace: &mut Vec<SplitTrace>,
) -> Node {
    let counts = class_counts(ix, labels);
    let leaf = |counts: BTreeMap<DiscourseRelation, usize>| Node::Leaf { class: majority(&counts), counts };
    if counts.len() == 1 || ix.len() < 2 * params.min_leaf.max(1) {
        return leaf(counts);
    }
    let mut ratios = Vec::new();
    for f in 0..FEATURE_NAMES.len() {
        if used.contains(&f) {
            continue;
        }
        let parts = partition(ix, records, f);
        if parts.values().any(|p| p.len() < params.min_leaf) {
            continue;
        }
        if let Some(r) = gain_ratio(ix, records, labels, f) {
            ratios.push((f, r));
        }
    }
    let Some(&(feature, _)) = ratios
        .iter()
        .fold(None, |best: Option<&(usize, f64)>, c| match best {
            Some(b) if b.1 >= c.1 => Some(b),
            _ => Some(c),
        })
    else {
        return leaf(counts);
    };
    trace.push(SplitTrace { records: ix.len(), chosen: feature, gain_ratios: ratios.clone() });
    let parts: Vec<(String, Vec<usize>)> = partition(ix, records, feature)
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let mut default = parts[0].0.clone();
    let mut default_size = parts[0].1.len();
    for (k, v) in &parts {
        if v.len() > default_size {
            default = k.clone();
            default_size = v.len();
        }
    }
    used.push(feature);
    let branches = parts
        .into_iter()
        .map(|(k, sub)| (k, grow(&sub, records, labels, used, params, trace)))
        .collect();
    used.pop();
    Node::Split { feature, branches, default, counts }
}

/// Upper confidence bound on the error rate of `e` errors in `n` records.
pub fn pessimistic_rate(e: f64, n: f64, confidence: f64) -> f64 {
    let z = Normal::standard().inverse_cdf(1.0 - confidence);
    let f = e / n;
    let z2 = z * z;
    (f + z2 / (2.0 * n) + z * (f / n - f * f / n + z2 / (4.0 * n * n)).max(0.0).sqrt()) / (1.0 + z2 / n)
}

fn leaf_estimate(counts: &BTreeMap<DiscourseRelation, usize>, cf: f64) -> f64 {
    let n: usize = counts.values().sum();
    let e = n - counts[&majority(counts)];
    n as f64 * pessimistic_rate(e as f64, n as f64, cf)
}

/// Pessimistic error estimate of a (sub)tree: sum over its leaves.
pub fn estimated_errors(node: &Node, confidence: f64) -> f64 {
    match node {
        Node::Leaf { counts, .. } => leaf_estimate(counts, confidence),
        Node::Split { branches, .. } => branches.values().map(|b| estimated_errors(b, confidence)).sum(),
    }
}

fn prune(node: Node, cf: f64) -> Node {
    match node {
        Node::Leaf { .. } => node,
        Node::Split { feature, branches, default, counts } => {
            let branches: BTreeMap<String, Node> = branches.into_iter().map(|(k, b)| (k, prune(b, cf))).collect();
            let subtree: f64 = branches.values().map(|b| estimated_errors(b, cf)).sum();
            if leaf_estimate(&counts, cf) <= subtree {
                Node::Leaf { class: majority(&counts), counts }
            } else {
                Node::Split { feature, branches, default, counts }
            }
        }
    }
}

pub fn train_decision_tree_traced(
    records: &[FeatureRecord],
    labels: &[DiscourseRelation],
    params: &TreeParams,
) -> Result<(DecisionTree, Vec<SplitTrace>)> {
    if records.is_empty() {
        return Err(Error::invalid("no training records"));
    }
    if records.len() != labels.len() {
        return Err(Error::invalid("records and labels differ in length"));
    }
    if let Some(cf) = params.confidence {
        if !(cf > 0.0 && cf < 1.0) {
            return Err(Error::Config("pruning confidence must lie in (0, 1)".into()));
        }
    }
    let ix: Vec<usize> = (0..records.len()).collect();
    let mut trace = Vec::new();
    let mut root = grow(&ix, records, labels, &mut Vec::new(), params, &mut trace);
    if let Some(cf) = params.confidence {
        root = prune(root, cf);
    }
    Ok((DecisionTree { root }, trace))
}

pub fn train_decision_tree(records: &[FeatureRecord], labels: &[DiscourseRelation], params: &TreeParams) -> Result<DecisionTree> {
    Ok(train_decision_tree_traced(records, labels, params)?.0)
}

/// Class and training distribution of the leaf the record reaches.
pub fn predict_relation<'t>(tree: &'t DecisionTree, record: &FeatureRecord) -> (DiscourseRelation, &'t BTreeMap<DiscourseRelation, usize>) {
    let mut node = &tree.root;
    loop {
        match node {
            Node::Leaf { class, counts } => return (*class, counts),
            Node::Split { feature, branches, default, .. } => {
                node = branches.get(record.value(*feature)).unwrap_or(&branches[default]);
            }
        }
    }
}

/// Labels every internal node bottom-up; returns the tree and the status
/// sets in labeling order.
pub fn label_tree(
    tree: &RSTree,
    classifier: &DecisionTree,
    edus: &[Edu],
    lexicon: &Lexicon,
) -> Result<(RSTree, Vec<BTreeSet<usize>>)> {
    fn walk(
        t: &mut RSTree,
        classifier: &DecisionTree,
        edus: &[Edu],
        lexicon: &Lexicon,
        order: &mut Vec<BTreeSet<usize>>,
    ) -> Result<()> {
        let Some((l, r)) = t.children_mut() else {
            return Ok(());
        };
        walk(l, classifier, edus, lexicon, order)?;
        walk(r, classifier, edus, lexicon, order)?;
        let rec = extract_relation_features(&Unit::node(l, edus)?, &Unit::node(r, edus)?, lexicon);
        let (class, _) = predict_relation(classifier, &rec);
        let promotion = if class.is_multinuclear() {
            l.promotion.union(&r.promotion).copied().collect()
        } else {
            l.promotion.clone()
        };
        t.relation = Some(class);
        t.promotion = promotion;
        order.push(t.status.clone());
        Ok(())
    }
    let mut out = tree.clone();
    let mut order = Vec::new();
    walk(&mut out, classifier, edus, lexicon, &mut order)?;
    Ok((crate::rstree::promote(out), order))
}

/// A training example read off a gold tree node.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledRecord {
    pub status: BTreeSet<usize>,
    pub record: FeatureRecord,
    pub relation: DiscourseRelation,
}

/// Records for every relation-bearing internal node of a gold tree.
pub fn gold_records(tree: &RSTree, edus: &[Edu], lexicon: &Lexicon) -> Result<Vec<LabeledRecord>> {
    let mut out = Vec::new();
    for node in tree.internal_nodes() {
        let (Some(l), Some(r), Some(rel)) = (node.left(), node.right(), node.relation) else {
            continue;
        };
        let record = extract_relation_features(&Unit::node(l, edus)?, &Unit::node(r, edus)?, lexicon);
        out.push(LabeledRecord { status: node.status.clone(), record, relation: rel });
    }
    Ok(out)
}

const EMPTY: &str = "-";

pub fn write_records(records: &[(FeatureRecord, DiscourseRelation)]) -> String {
    let mut out = FEATURE_NAMES.join("\t") + "\trelation\n";
    for (r, rel) in records {
        let cols: Vec<&str> = r.values.iter().map(|v| if v.is_empty() { EMPTY } else { v.as_str() }).collect();
        out.push_str(&cols.join("\t"));
        out.push('\t');
        out.push_str(rel.as_str());
        out.push('\n');
    }
    out
}

/// Reads the tab-separated record format; a header line is optional.
pub fn parse_records(text: &str) -> Result<Vec<(FeatureRecord, DiscourseRelation)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') || line.starts_with(FEATURE_NAMES[0]) {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != FEATURE_NAMES.len() + 1 {
            return Err(Error::parse(n + 1, format!("expected 21 columns, found {}", cols.len())));
        }
        let values = cols[..20]
            .iter()
            .map(|c| if *c == EMPTY { String::new() } else { c.to_string() })
            .collect();
        let rec = FeatureRecord::new(values).map_err(|e| Error::parse(n + 1, e.to_string()))?;
        let rel = cols[20].parse().map_err(|e: Error| Error::parse(n + 1, e.to_string()))?;
        out.push((rec, rel));
    }
    Ok(out)
}
