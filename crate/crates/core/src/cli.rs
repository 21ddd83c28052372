//! Command-line driver.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::corpus::{parse_corpus, write_corpus, CorpusToken, Document, Sequence};
use crate::error::{Error, Result};
use crate::eval::{format_report, relation_accuracy, tree_metrics, PrMetrics};
use crate::hmm::{baum_welch, BaumWelchConfig, HmmModel};
use crate::model_io::{load_model, serialize_model, ModelFile};
use crate::pipeline::{document_tree, gold_document, run_pipeline, score_document, DocumentEdus};
use crate::relation::{gold_records, label_tree, train_decision_tree, write_records, DecisionTree};
use crate::rstree::LinkageMethod;
use crate::segmentation::{
    build_vtt_table, group_constituents, identify_phrases, phrase_symbol, phrase_training_data,
    segment_edus, train_edu_hmm, train_phrase_hmm, VttTable,
};
use crate::semrules::similarity_matrix;
use crate::synth::{generate, GeneratorSpec};
use crate::tree::{load_tree_file, serialize_tree_file, DocTree, RSTree};
use crate::types::{EduRole, TagAlphabet};

#[derive(Parser, Debug)]
#[command(name = "rhetoric", version, about = "Discourse segmentation, RS trees and relation labeling")]
pub struct Cli {
    /// Pipeline config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Command-line values that replace config entries.
#[derive(Args, Debug, Default)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub split: Option<f64>,
    #[arg(long, global = true)]
    pub max_distance: Option<usize>,
    #[arg(long, global = true)]
    pub method: Option<LinkageMethod>,
    /// Allow merges of non-adjacent clusters.
    #[arg(long, global = true)]
    pub no_adjacency: bool,
    #[arg(long, global = true)]
    pub tags: Option<PathBuf>,
    #[arg(long, global = true)]
    pub grammar: Option<PathBuf>,
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Supervised phrase-label HMM from a labeled corpus.
    TrainPhraseHmm {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Emit `TAG:surface` symbols.
        #[arg(long)]
        lexical: bool,
        #[arg(long)]
        smoothing: Option<f64>,
        /// Refine with Baum-Welch on the corpus symbols.
        #[arg(long)]
        refine: bool,
    },
    /// Supervised EDU-label HMM over phrase chunks.
    TrainEduHmm {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        smoothing: Option<f64>,
    },
    /// Phrase labels, EDU labels and grouped roles for a POS-tagged corpus.
    Segment {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        phrase_model: PathBuf,
        #[arg(long)]
        edu_model: PathBuf,
        #[arg(long)]
        vtt: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Vtt object/indirect-object table from a labeled corpus.
    BuildVtt {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Similarity matrix of each document.
    Analyze {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Unlabeled RS tree of each document.
    BuildTree {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Relation decision tree from gold trees.
    TrainRelations {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        trees: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the training records.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Relation labels for every internal node.
    Label {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        trees: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tree, relation and (with corpora) segmentation metrics.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        predicted: PathBuf,
        /// Gold-labeled corpus; enables segmentation and marker split.
        #[arg(long)]
        gold_corpus: Option<PathBuf>,
        /// Segmented corpus the predicted trees were built on.
        #[arg(long)]
        predicted_corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic corpus, gold trees, lexicon and planted rules.
    Synth {
        /// Generator spec (TOML); defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train on a seeded split and evaluate on the rest.
    Pipeline {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        trees: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// An error tagged with the stage that raised it.
#[derive(Debug)]
pub struct Failure {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.error)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match &self.error {
            Error::Config(_) => 1,
            e if e.is_model_error() => 3,
            _ => 2,
        }
    }
}

trait Stage<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, Failure>;
}

impl<T> Stage<T> for Result<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, Failure> {
        self.map_err(|error| Failure { stage, error })
    }
}

type Outcome = std::result::Result<(), Failure>;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn in_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io { .. } => e,
        other => Error::invalid(format!("{}: {other}", path.display())),
    })
}

fn load_corpus(path: &Path, alphabet: &TagAlphabet) -> Result<Vec<Document>> {
    let text = read(path)?;
    in_file(path, parse_corpus(&text, alphabet))
}

fn load<M: ModelFile>(path: &Path) -> Result<M> {
    let text = read(path)?;
    load_model(&text).map_err(|e| match e {
        Error::Json(err) => Error::InvalidModel(format!("{}: {err}", path.display())),
        Error::InvalidModel(m) => Error::InvalidModel(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn load_trees(path: &Path) -> Result<Vec<DocTree>> {
    let text = read(path)?;
    in_file(path, load_tree_file(&text))
}

fn doc_id(doc: &Document, i: usize) -> String {
    doc.id.clone().unwrap_or_else(|| format!("doc-{}", i + 1))
}

fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.split {
        cfg.split = v;
    }
    if let Some(v) = o.max_distance {
        cfg.max_distance = v;
    }
    if let Some(v) = o.method {
        cfg.method = v;
    }
    if o.no_adjacency {
        cfg.adjacency = false;
    }
    for (slot, v) in [(&mut cfg.paths.tags, &o.tags), (&mut cfg.paths.grammar, &o.grammar), (&mut cfg.paths.lexicon, &o.lexicon)] {
        if v.is_some() {
            slot.clone_from(v);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Outcome {
    let cfg = resolve_config(&cli).at("config")?;
    let alphabet = cfg.alphabet().at("config")?;
    let rules = cfg.grammar().at("config")?;
    let lexicon = cfg.lexicon().at("config")?;
    let sim = cfg.similarity();

    match cli.command {
        Command::TrainPhraseHmm { corpus, out, lexical, smoothing, refine } => {
            let docs = load_corpus(&corpus, &alphabet).at("corpus")?;
            let lexical = lexical || cfg.lexical;
            let mut model = train_phrase_hmm(&docs, &alphabet, lexical, smoothing.unwrap_or(cfg.smoothing)).at("hmm")?;
            if refine {
                let obs: Vec<Vec<String>> = docs
                    .iter()
                    .flat_map(|d| &d.sequences)
                    .map(|s| s.tagged().iter().map(|t| phrase_symbol(t, lexical)).collect())
                    .collect();
                let bw = BaumWelchConfig {
                    eval: phrase_training_data(&docs, lexical).at("hmm")?,
                    keep_unused_states: true,
                    ..BaumWelchConfig::default()
                };
                let (refined, report) = baum_welch(&model, &obs, &bw).at("hmm")?;
                eprintln!(
                    "baum-welch: {} iterations, stop {:?}, accuracy {:?}",
                    report.iterations, report.stop, report.accuracy
                );
                model = refined;
            }
            write(&out, &serialize_model(&model)).at("output")
        }
        Command::TrainEduHmm { corpus, out, smoothing } => {
            let docs = load_corpus(&corpus, &alphabet).at("corpus")?;
            let model = train_edu_hmm(&docs, &rules, smoothing.unwrap_or(cfg.smoothing)).at("hmm")?;
            write(&out, &serialize_model(&model)).at("output")
        }
        Command::Segment { corpus, phrase_model, edu_model, vtt, out } => {
            let docs = load_corpus(&corpus, &alphabet).at("corpus")?;
            let phrase: HmmModel = load(&phrase_model).at("model")?;
            let edu: HmmModel = load(&edu_model).at("model")?;
            let vtt: VttTable = match vtt {
                Some(p) => load(&p).at("model")?,
                None => VttTable::default(),
            };
            let mut labeled = Vec::with_capacity(docs.len());
            for (i, doc) in docs.iter().enumerate() {
                let name = doc_id(doc, i);
                let mut sequences = Vec::new();
                let mut position = 1;
                for (k, seq) in doc.sequences.iter().enumerate() {
                    let at = |e: Error| Error::invalid(format!("document {name}, sentence {}: {e}", k + 1));
                    let tokens = seq.tagged();
                    let phrases = identify_phrases(&phrase, &tokens, &rules).map_err(at).at("segmentation")?;
                    for d in &phrases.diagnostics {
                        eprintln!("segmentation: document {name}, sentence {}: {d}", k + 1);
                    }
                    let seg = segment_edus(&edu, &tokens, &phrases, position).map_err(at).at("segmentation")?;
                    position += seg.edus.len();
                    let mut roles = BTreeMap::new();
                    for e in seg.edus {
                        let grouped = group_constituents(e, &rules, &vtt);
                        for g in &grouped.groups {
                            for t in &g.tokens {
                                roles.insert(t.token.index, g.role);
                            }
                        }
                    }
                    let out_tokens = seq
                        .tokens
                        .iter()
                        .zip(&phrases.labels)
                        .zip(&seg.labels)
                        .map(|((t, &p), l)| CorpusToken {
                            token: t.token.clone(),
                            phrase: Some(p),
                            role: Some(*roles.get(&t.token.index).unwrap_or(&EduRole::Marker)),
                            begin: Some(l.begin),
                        })
                        .collect();
                    sequences.push(Sequence { tokens: out_tokens });
                }
                labeled.push(Document { id: doc.id.clone(), meta: doc.meta.clone(), sequences });
            }
            write(&out, &write_corpus(&labeled)).at("output")
        }
        Command::BuildVtt { corpus, out } => {
            let docs = load_corpus(&corpus, &alphabet).at("corpus")?;
            let mut edus = Vec::new();
            for d in &docs {
                edus.extend(gold_document(d, &rules).at("segmentation")?.edus);
            }
            write(&out, &serialize_model(&build_vtt_table(&edus))).at("output")
        }
        Command::Analyze { corpus, out } => {
            let docs = load_corpus(&corpus, &alphabet).at("corpus")?;
            let mut text = String::new();
            for (i, d) in docs.iter().enumerate() {
                let edus = gold_document(d, &rules).at("segmentation")?.edus;
                if edus.len() < 2 {
                    continue;
                }
                let s = similarity_matrix(&edus, &lexicon, &sim).at("semrules")?;
                let positions: Vec<usize> = edus.iter().map(|e| e.position).collect();
                text.push_str(&format!("# doc={}\n{}\n", doc_id(d, i), s.to_tsv(&positions)));
            }
            match out {
                Some(p) => write(&p, &text).at("output"),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::BuildTree { corpus, out } => {
            let docs = load_corpus(&corpus, &alphabet).at("corpus")?;
            let mut trees = Vec::with_capacity(docs.len());
            for (i, d) in docs.iter().enumerate() {
                let edus = gold_document(d, &rules).at("segmentation")?.edus;
                let tree = document_tree(&edus, &lexicon, &sim, &cfg)
                    .map_err(|e| Error::invalid(format!("document {}: {e}", doc_id(d, i))))
                    .at("rstree")?;
                trees.push(DocTree { doc: doc_id(d, i), tree });
            }
            write(&out, &serialize_tree_file(&trees)).at("output")
        }
        Command::TrainRelations { corpus, trees, out, records } => {
            let docs = load_corpus(&corpus, &alphabet).at("corpus")?;
            let gold = tree_index(load_trees(&trees).at("trees")?);
            let mut rows = Vec::new();
            for (i, d) in docs.iter().enumerate() {
                let name = doc_id(d, i);
                let tree = gold.get(&name).ok_or_else(|| Error::invalid(format!("no tree for document {name}"))).at("trees")?;
                let edus = gold_document(d, &rules).at("segmentation")?.edus;
                for r in gold_records(tree, &edus, &lexicon).at("relation")? {
                    rows.push((r.record, r.relation));
                }
            }
            let (recs, labels): (Vec<_>, Vec<_>) = rows.iter().cloned().unzip();
            let model = train_decision_tree(&recs, &labels, &cfg.tree.params()).at("relation")?;
            if let Some(p) = records {
                write(&p, &write_records(&rows)).at("output")?;
            }
            write(&out, &serialize_model(&model)).at("output")
        }
        Command::Label { corpus, trees, model, out } => {
            let docs = load_corpus(&corpus, &alphabet).at("corpus")?;
            let bare = tree_index(load_trees(&trees).at("trees")?);
            let classifier: DecisionTree = load(&model).at("model")?;
            let mut labeled = Vec::new();
            for (i, d) in docs.iter().enumerate() {
                let name = doc_id(d, i);
                let Some(tree) = bare.get(&name) else { continue };
                let edus = gold_document(d, &rules).at("segmentation")?.edus;
                let (tree, _) = label_tree(tree, &classifier, &edus, &lexicon).at("relation")?;
                labeled.push(DocTree { doc: name, tree });
            }
            write(&out, &serialize_tree_file(&labeled)).at("output")
        }
        Command::Evaluate { gold, predicted, gold_corpus, predicted_corpus, out } => {
            let gold_trees = load_trees(&gold).at("trees")?;
            let pred_trees = tree_index(load_trees(&predicted).at("trees")?);
            let report = match gold_corpus {
                Some(gc) => {
                    let gdocs = load_corpus(&gc, &alphabet).at("corpus")?;
                    let pdocs = match predicted_corpus {
                        Some(pc) => load_corpus(&pc, &alphabet).at("corpus")?,
                        None => gdocs.clone(),
                    };
                    evaluate_with_corpora(&gold_trees, &pred_trees, &gdocs, &pdocs, &rules, &lexicon)?
                }
                None => evaluate_trees(&gold_trees, &pred_trees)?,
            };
            match out {
                Some(p) => write(&p, &report).at("output"),
                None => {
                    print!("{report}");
                    Ok(())
                }
            }
        }
        Command::Synth { spec, out_dir } => {
            let mut spec = match spec {
                Some(p) => GeneratorSpec::load(&p).at("synth")?,
                None => GeneratorSpec::default(),
            };
            if let Some(s) = cli.overrides.seed {
                spec.seed = s;
            }
            let corpus = generate(&spec, &rules, &alphabet).at("synth")?;
            write(&out_dir.join("corpus.tsv"), &write_corpus(&corpus.corpus())).at("output")?;
            write(&out_dir.join("trees.json"), &serialize_tree_file(&corpus.trees())).at("output")?;
            write(&out_dir.join("lexicon.tsv"), &corpus.lexicon.to_text()).at("output")?;
            write(&out_dir.join("planted.tsv"), &corpus.planted_tsv()).at("output")
        }
        Command::Pipeline { corpus, trees, out_dir } => {
            let docs = load_corpus(&corpus, &alphabet).at("corpus")?;
            let gold = load_trees(&trees).at("trees")?;
            let result = run_pipeline(&docs, &gold, &cfg, &alphabet, &rules, &lexicon).at("pipeline")?;
            write(&out_dir.join("predicted.json"), &serialize_tree_file(&result.predicted)).at("output")?;
            write(&out_dir.join("report.tsv"), &result.report).at("output")?;
            print!("{}", result.report);
            Ok(())
        }
    }
}

fn tree_index(trees: Vec<DocTree>) -> BTreeMap<String, RSTree> {
    trees.into_iter().map(|t| (t.doc, t.tree)).collect()
}

/// Status-matched trees; relations on the matched nodes, all counted unmarked.
fn evaluate_trees(gold: &[DocTree], predicted: &BTreeMap<String, RSTree>) -> std::result::Result<String, Failure> {
    let mut tree = PrMetrics::default();
    let (mut p, mut g) = (Vec::new(), Vec::new());
    for gt in gold {
        let pt = predicted
            .get(&gt.doc)
            .ok_or_else(|| Error::invalid(format!("no predicted tree for document {}", gt.doc)))
            .at("eval")?;
        tree = tree.merge(
            tree_metrics(pt, &gt.tree)
                .map_err(|e| Error::invalid(format!("document {}: {e}", gt.doc)))
                .at("eval")?,
        );
        let gold_rel: BTreeMap<_, _> = gt.tree.internal_nodes().into_iter().map(|n| (n.status.clone(), n.relation)).collect();
        for n in pt.internal_nodes() {
            if let (Some(pr), Some(Some(gr))) = (n.relation, gold_rel.get(&n.status)) {
                p.push(pr);
                g.push(*gr);
            }
        }
    }
    let marks = vec![false; p.len()];
    let rel = relation_accuracy(&p, &g, &marks).at("eval")?;
    Ok(format_report(None, Some(&tree), Some(&rel)))
}

fn evaluate_with_corpora(
    gold: &[DocTree],
    predicted: &BTreeMap<String, RSTree>,
    gold_docs: &[Document],
    pred_docs: &[Document],
    rules: &crate::segmentation::GrammarRuleTable,
    lexicon: &crate::semrules::Lexicon,
) -> std::result::Result<String, Failure> {
    let index = |docs: &[Document]| -> BTreeMap<String, Document> {
        docs.iter().enumerate().map(|(i, d)| (doc_id(d, i), d.clone())).collect()
    };
    let (gd, pd) = (index(gold_docs), index(pred_docs));
    let mut seg = PrMetrics::default();
    let mut tree = PrMetrics::default();
    let (mut p, mut g, mut m) = (Vec::new(), Vec::new(), Vec::new());
    for gt in gold {
        let missing = |what: &str| Error::invalid(format!("no {what} for document {}", gt.doc));
        let pt = predicted.get(&gt.doc).ok_or_else(|| missing("predicted tree")).at("eval")?;
        let gdoc = gd.get(&gt.doc).ok_or_else(|| missing("gold corpus entry")).at("eval")?;
        let pdoc = pd.get(&gt.doc).ok_or_else(|| missing("predicted corpus entry")).at("eval")?;
        let gold_edus: DocumentEdus = gold_document(gdoc, rules).at("segmentation")?;
        let pred_edus: DocumentEdus = gold_document(pdoc, rules).at("segmentation")?;
        let score = score_document(pt, &pred_edus, &gt.tree, &gold_edus, lexicon)
            .map_err(|e| Error::invalid(format!("document {}: {e}", gt.doc)))
            .at("eval")?;
        seg = seg.merge(score.segmentation);
        tree = tree.merge(score.tree);
        p.extend(score.predicted_relations);
        g.extend(score.gold_relations);
        m.extend(score.markers);
    }
    let rel = relation_accuracy(&p, &g, &m).at("eval")?;
    Ok(format_report(Some(&seg), Some(&tree), Some(&rel)))
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("rhetoric: {f}");
            f.exit_code()
        }
    }
}
