//! Training and end-to-end evaluation over a corpus with gold trees.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::PipelineConfig;
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::eval::{format_report, node_extent, relation_accuracy, segmentation_metrics, PrMetrics, RelationReport};
use crate::hmm::HmmModel;
use crate::relation::{gold_records, label_tree, train_decision_tree, DecisionTree};
use crate::rstree::{build_tree, to_distance};
use crate::segmentation::{
    build_vtt_table, gold_edus, group_constituents, identify_phrases, segment_edus, train_edu_hmm,
    train_phrase_hmm, GrammarRuleTable, VttTable,
};
use crate::semrules::{similarity_matrix, Lexicon, SimilarityConfig};
use crate::tree::{DocTree, RSTree};
use crate::types::{Edu, MarkerSide, TagAlphabet};

/// Grouped EDUs of a document with their token extents in the document.
#[derive(Clone, Debug, PartialEq)]
pub struct DocumentEdus {
    pub edus: Vec<Edu>,
    pub spans: BTreeMap<usize, (usize, usize)>,
    pub diagnostics: Vec<String>,
}

impl DocumentEdus {
    fn push_sequence(&mut self, edus: Vec<Edu>, offset: usize) {
        for e in edus {
            self.spans.insert(e.position, (offset + e.span.0, offset + e.span.1));
            self.edus.push(e);
        }
    }

    pub fn span_list(&self) -> Vec<(usize, usize)> {
        self.spans.values().copied().collect()
    }
}

fn doc_name(doc: &Document, i: usize) -> String {
    doc.id.clone().unwrap_or_else(|| format!("doc-{}", i + 1))
}

pub fn gold_document(doc: &Document, rules: &GrammarRuleTable) -> Result<DocumentEdus> {
    let mut out = DocumentEdus { edus: Vec::new(), spans: BTreeMap::new(), diagnostics: Vec::new() };
    let mut offset = 0;
    for seq in &doc.sequences {
        let edus = gold_edus(seq, out.edus.len() + 1)?
            .into_iter()
            .map(|e| group_constituents(e, rules, &VttTable::default()))
            .collect();
        out.push_sequence(edus, offset);
        offset += seq.len();
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct TrainedModels {
    pub phrase: HmmModel,
    pub edu: HmmModel,
    pub vtt: VttTable,
    pub relations: DecisionTree,
}

/// Segments and groups every sequence of a document.
pub fn analyze_document(doc: &Document, phrase: &HmmModel, edu: &HmmModel, vtt: &VttTable, rules: &GrammarRuleTable) -> Result<DocumentEdus> {
    let mut out = DocumentEdus { edus: Vec::new(), spans: BTreeMap::new(), diagnostics: Vec::new() };
    let mut offset = 0;
    for seq in &doc.sequences {
        let tokens = seq.tagged();
        let phrases = identify_phrases(phrase, &tokens, rules)?;
        out.diagnostics.extend(phrases.diagnostics.iter().cloned());
        let seg = segment_edus(edu, &tokens, &phrases, out.edus.len() + 1)?;
        let grouped = seg.edus.into_iter().map(|e| group_constituents(e, rules, vtt)).collect();
        out.push_sequence(grouped, offset);
        offset += seq.len();
    }
    Ok(out)
}

/// Unlabeled tree over a document's EDUs.
pub fn document_tree(edus: &[Edu], lexicon: &Lexicon, sim: &SimilarityConfig, cfg: &PipelineConfig) -> Result<RSTree> {
    match edus {
        [] => Err(Error::invalid("document has no EDUs")),
        [only] => Ok(RSTree::leaf(only.position)),
        _ => {
            let s = similarity_matrix(edus, lexicon, sim)?;
            let positions: Vec<usize> = edus.iter().map(|e| e.position).collect();
            build_tree(&positions, &to_distance(&s), cfg.method, cfg.adjacency)
        }
    }
}

fn gold_tree_map(trees: &[DocTree]) -> BTreeMap<&str, &RSTree> {
    trees.iter().map(|t| (t.doc.as_str(), &t.tree)).collect()
}

/// Trains all four models on documents with gold labels and trees.
pub fn train_models(
    docs: &[&Document],
    trees: &[DocTree],
    cfg: &PipelineConfig,
    alphabet: &TagAlphabet,
    rules: &GrammarRuleTable,
    lexicon: &Lexicon,
) -> Result<TrainedModels> {
    let owned: Vec<Document> = docs.iter().map(|d| (*d).clone()).collect();
    let phrase = train_phrase_hmm(&owned, alphabet, cfg.lexical, cfg.smoothing)?;
    let edu = train_edu_hmm(&owned, rules, cfg.smoothing)?;
    let gold_trees = gold_tree_map(trees);
    let mut all_edus = Vec::new();
    let mut records = Vec::new();
    let mut labels = Vec::new();
    for (i, doc) in docs.iter().enumerate() {
        let gold = gold_document(doc, rules)?;
        let name = doc_name(doc, i);
        let tree = gold_trees
            .get(name.as_str())
            .ok_or_else(|| Error::invalid(format!("no gold tree for document {name}")))?;
        for r in gold_records(tree, &gold.edus, lexicon)? {
            records.push(r.record);
            labels.push(r.relation);
        }
        all_edus.extend(gold.edus);
    }
    let vtt = build_vtt_table(&all_edus);
    let relations = train_decision_tree(&records, &labels, &cfg.tree.params())?;
    Ok(TrainedModels { phrase, edu, vtt, relations })
}

/// Seeded train/test partition of document indices; each side keeps input
/// order and is non-empty when there are two or more documents.
pub fn split_documents(n: usize, split: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = if n < 2 { n } else { ((split * n as f64).round() as usize).clamp(1, n - 1) };
    let (mut train, mut test) = (idx[..k].to_vec(), idx[k..].to_vec());
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub predicted: Vec<DocTree>,
    pub segmentation: PrMetrics,
    pub tree: PrMetrics,
    pub relations: RelationReport,
    pub report: String,
}

/// Scores one labeled prediction against gold; relations are compared on
/// the predicted nodes whose token extent matches a gold node.
pub struct DocumentScore {
    pub segmentation: PrMetrics,
    pub tree: PrMetrics,
    pub predicted_relations: Vec<crate::types::DiscourseRelation>,
    pub gold_relations: Vec<crate::types::DiscourseRelation>,
    pub markers: Vec<bool>,
}

pub fn score_document(
    predicted: &RSTree,
    pred: &DocumentEdus,
    gold_tree: &RSTree,
    gold: &DocumentEdus,
    lexicon: &Lexicon,
) -> Result<DocumentScore> {
    let segmentation = segmentation_metrics(&pred.span_list(), &gold.span_list())?;
    let mut gold_nodes = BTreeMap::new();
    for node in gold_tree.internal_nodes() {
        let Some(r) = node.right() else { continue };
        let span = node_extent(node, &gold.spans)?;
        let marker = gold
            .edus
            .iter()
            .find(|e| e.position == r.first())
            .and_then(|e| e.marker(MarkerSide::Before))
            .is_some_and(|m| lexicon.is_marker(m));
        gold_nodes.insert(span, (node.relation, marker));
    }
    let mut out = DocumentScore {
        segmentation,
        tree: PrMetrics::default(),
        predicted_relations: Vec::new(),
        gold_relations: Vec::new(),
        markers: Vec::new(),
    };
    let mut correct = 0;
    let pred_nodes = predicted.internal_nodes();
    for node in &pred_nodes {
        let span = node_extent(node, &pred.spans)?;
        if let Some(&(rel, marker)) = gold_nodes.get(&span) {
            correct += 1;
            if let (Some(p), Some(rel)) = (node.relation, rel) {
                out.predicted_relations.push(p);
                out.gold_relations.push(rel);
                out.markers.push(marker);
            }
        }
    }
    out.tree = PrMetrics::new(correct, pred_nodes.len(), gold_tree.internal_count());
    Ok(out)
}

/// Split, train, then segment, build, label and score the held-out documents.
pub fn run_pipeline(
    docs: &[Document],
    trees: &[DocTree],
    cfg: &PipelineConfig,
    alphabet: &TagAlphabet,
    rules: &GrammarRuleTable,
    lexicon: &Lexicon,
) -> Result<PipelineOutput> {
    if docs.len() < 2 {
        return Err(Error::invalid("the pipeline needs at least two documents"));
    }
    let (train_ix, test_ix) = split_documents(docs.len(), cfg.split, cfg.seed);
    let train: Vec<&Document> = train_ix.iter().map(|&i| &docs[i]).collect();
    let models = train_models(&train, trees, cfg, alphabet, rules, lexicon)?;
    let sim = cfg.similarity();
    let gold_trees = gold_tree_map(trees);

    let mut predicted = Vec::new();
    let mut segmentation = PrMetrics::default();
    let mut tree = PrMetrics::default();
    let (mut p_rel, mut g_rel, mut marks) = (Vec::new(), Vec::new(), Vec::new());
    for &i in &test_ix {
        let doc = &docs[i];
        let name = doc_name(doc, i);
        let in_doc = |e: Error| Error::invalid(format!("document {name}: {e}"));
        let pred = analyze_document(doc, &models.phrase, &models.edu, &models.vtt, rules).map_err(in_doc)?;
        let gold = gold_document(doc, rules).map_err(in_doc)?;
        let bare = document_tree(&pred.edus, lexicon, &sim, cfg).map_err(in_doc)?;
        let (labeled, _) = label_tree(&bare, &models.relations, &pred.edus, lexicon).map_err(in_doc)?;
        let gold_tree = gold_trees
            .get(name.as_str())
            .ok_or_else(|| Error::invalid(format!("no gold tree for document {name}")))?;
        let score = score_document(&labeled, &pred, gold_tree, &gold, lexicon).map_err(in_doc)?;
        segmentation = segmentation.merge(score.segmentation);
        tree = tree.merge(score.tree);
        p_rel.extend(score.predicted_relations);
        g_rel.extend(score.gold_relations);
        marks.extend(score.markers);
        predicted.push(DocTree { doc: name, tree: labeled });
    }
    let relations = relation_accuracy(&p_rel, &g_rel, &marks)?;
    let report = format_report(Some(&segmentation), Some(&tree), Some(&relations));
    Ok(PipelineOutput {
        train: train_ix.iter().map(|&i| doc_name(&docs[i], i)).collect(),
        test: test_ix.iter().map(|&i| doc_name(&docs[i], i)).collect(),
        predicted,
        segmentation,
        tree,
        relations,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_seeded_and_disjoint() {
        let (a, b) = split_documents(10, 0.68, 5);
        assert_eq!((a.len(), b.len()), (7, 3));
        assert_eq!(split_documents(10, 0.68, 5), (a.clone(), b.clone()));
        assert!(a.iter().all(|i| !b.contains(i)));
        let (a, b) = split_documents(2, 0.99, 1);
        assert_eq!((a.len(), b.len()), (1, 1));
    }
}
