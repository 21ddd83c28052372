//! Segmentation, tree and relation evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::tree::RSTree;
use crate::types::DiscourseRelation;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrMetrics {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
    pub recall: f64,
    pub precision: f64,
    /// Set when a denominator was zero and the ratio reported as 0.
    pub degenerate: bool,
}

impl PrMetrics {
    pub fn new(correct: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        PrMetrics {
            correct,
            predicted,
            gold,
            recall: ratio(correct, gold),
            precision: ratio(correct, predicted),
            degenerate: predicted == 0 || gold == 0,
        }
    }

    /// Micro-average: counts are summed.
    pub fn merge(self, other: PrMetrics) -> PrMetrics {
        PrMetrics::new(self.correct + other.correct, self.predicted + other.predicted, self.gold + other.gold)
    }

    pub fn f1(&self) -> f64 {
        let s = self.precision + self.recall;
        if s == 0.0 {
            0.0
        } else {
            2.0 * self.precision * self.recall / s
        }
    }
}

impl Default for PrMetrics {
    fn default() -> Self {
        PrMetrics::new(0, 0, 0)
    }
}

/// Exact-span matches of `[start, end)` spans over the same token stream.
pub fn segmentation_metrics(predicted: &[(usize, usize)], gold: &[(usize, usize)]) -> Result<PrMetrics> {
    let extent = |s: &[(usize, usize)]| s.iter().map(|x| x.1).max();
    if !predicted.is_empty() && !gold.is_empty() && extent(predicted) != extent(gold) {
        return Err(Error::invalid("predicted and gold spans cover different token streams"));
    }
    if predicted.iter().chain(gold).any(|s| s.0 >= s.1) {
        return Err(Error::invalid("empty or inverted span"));
    }
    let gold_set: BTreeSet<_> = gold.iter().collect();
    let correct = predicted.iter().collect::<BTreeSet<_>>().intersection(&gold_set).count();
    Ok(PrMetrics::new(correct, predicted.len(), gold.len()))
}

/// Internal nodes matched by status set.
pub fn tree_metrics(predicted: &RSTree, gold: &RSTree) -> Result<PrMetrics> {
    if predicted.status != gold.status {
        return Err(Error::invalid(format!(
            "trees span different EDUs: {:?} vs {:?}",
            predicted.status, gold.status
        )));
    }
    let gold_nodes: BTreeSet<&BTreeSet<usize>> = gold.internal_nodes().into_iter().map(|n| &n.status).collect();
    let pred = predicted.internal_nodes();
    let correct = pred.iter().filter(|n| gold_nodes.contains(&n.status)).count();
    Ok(PrMetrics::new(correct, pred.len(), gold_nodes.len()))
}

/// Token extent of a node, given each leaf position's span.
pub fn node_extent(node: &RSTree, spans: &BTreeMap<usize, (usize, usize)>) -> Result<(usize, usize)> {
    let lookup = |p: &usize| spans.get(p).ok_or_else(|| Error::invalid(format!("no span for EDU {p}")));
    let first = lookup(node.status.first().expect("a node has leaves"))?;
    let last = lookup(node.status.last().expect("a node has leaves"))?;
    Ok((first.0, last.1))
}

/// Token extents of every internal node.
pub fn node_spans(tree: &RSTree, spans: &BTreeMap<usize, (usize, usize)>) -> Result<BTreeSet<(usize, usize)>> {
    tree.internal_nodes().into_iter().map(|n| node_extent(n, spans)).collect()
}

/// Internal nodes matched by token extent, for trees over different
/// segmentations of the same text.
pub fn span_tree_metrics(
    predicted: &RSTree,
    predicted_spans: &BTreeMap<usize, (usize, usize)>,
    gold: &RSTree,
    gold_spans: &BTreeMap<usize, (usize, usize)>,
) -> Result<PrMetrics> {
    let p = node_spans(predicted, predicted_spans)?;
    let g = node_spans(gold, gold_spans)?;
    Ok(PrMetrics::new(p.intersection(&g).count(), p.len(), g.len()))
}

/// Status sets of the internal nodes only one of the trees has.
pub fn tree_diff(predicted: &RSTree, gold: &RSTree) -> (Vec<BTreeSet<usize>>, Vec<BTreeSet<usize>>) {
    let set = |t: &RSTree| t.internal_nodes().into_iter().map(|n| n.status.clone()).collect::<BTreeSet<_>>();
    let (p, g) = (set(predicted), set(gold));
    (p.difference(&g).cloned().collect(), g.difference(&p).cloned().collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    /// `None` for an empty partition.
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }

    fn add(&mut self, ok: bool) {
        self.total += 1;
        self.correct += ok as usize;
    }
}

/// Per-relation accuracy split by marker presence (keyed by gold label).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RelationReport {
    pub without_marker: BTreeMap<DiscourseRelation, Tally>,
    pub with_marker: BTreeMap<DiscourseRelation, Tally>,
    pub overall: Tally,
}

impl RelationReport {
    pub fn cell(&self, relation: DiscourseRelation, marker: bool) -> Option<f64> {
        let part = if marker { &self.with_marker } else { &self.without_marker };
        part.get(&relation).and_then(Tally::accuracy)
    }

    pub fn partition(&self, marker: bool) -> Tally {
        let part = if marker { &self.with_marker } else { &self.without_marker };
        part.values().fold(Tally::default(), |a, t| Tally { correct: a.correct + t.correct, total: a.total + t.total })
    }
}

pub fn relation_accuracy(
    predicted: &[DiscourseRelation],
    gold: &[DiscourseRelation],
    marker: &[bool],
) -> Result<RelationReport> {
    if predicted.len() != gold.len() || gold.len() != marker.len() {
        return Err(Error::invalid("predicted, gold and marker lists differ in length"));
    }
    let mut report = RelationReport::default();
    for ((p, g), &m) in predicted.iter().zip(gold).zip(marker) {
        let part = if m { &mut report.with_marker } else { &mut report.without_marker };
        part.entry(*g).or_default().add(p == g);
        report.overall.add(p == g);
    }
    Ok(report)
}

fn pct(x: Option<f64>) -> String {
    x.map_or("none".to_string(), |v| format!("{:.1}", 100.0 * v))
}

/// Tab-separated metrics report.
pub fn format_report(segmentation: Option<&PrMetrics>, tree: Option<&PrMetrics>, relations: Option<&RelationReport>) -> String {
    let mut out = String::from("metric\tcorrect\tpredicted\tgold\trecall\tprecision\n");
    for (name, m) in [("edu", segmentation), ("tree", tree)] {
        if let Some(m) = m {
            let _ = writeln!(
                out,
                "{name}\t{}\t{}\t{}\t{:.4}\t{:.4}{}",
                m.correct,
                m.predicted,
                m.gold,
                m.recall,
                m.precision,
                if m.degenerate { "\tdegenerate" } else { "" }
            );
        }
    }
    if let Some(r) = relations {
        out.push_str("\nrelation\twithout-marker\twith-marker\n");
        for rel in DiscourseRelation::ALL {
            let _ = writeln!(out, "{rel}\t{}\t{}", pct(r.cell(*rel, false)), pct(r.cell(*rel, true)));
        }
        let _ = writeln!(
            out,
            "total\t{}\t{}\noverall\t{}\t{}/{}",
            pct(r.partition(false).accuracy()),
            pct(r.partition(true).accuracy()),
            pct(r.overall.accuracy()),
            r.overall.correct,
            r.overall.total
        );
    }
    out
}
