mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::linkage::{agglomerate, distance, random_pair};
use common::{all_sequences, edu, fixture_corpus, fixture_trees, names, random_distances, relative_close, villagers, RawModel};
use rhetoric::config::PipelineConfig;
use rhetoric::eval::{span_tree_metrics, tree_metrics};
use rhetoric::hmm::{baum_welch, estimate_supervised, BaumWelchConfig, HmmModel, LabeledSequence, StopReason};
use rhetoric::pipeline::{gold_document, run_pipeline};
use rhetoric::relation::{
    estimated_errors, extract_relation_features, predict_relation, train_decision_tree, train_decision_tree_traced,
    FeatureRecord, TreeParams, Unit, ANA_MARKER_BEFORE, FEATURE_NAMES,
};
use rhetoric::rstree::{build_tree_traced, linkage_distance, LinkageMethod};
use rhetoric::segmentation::{group_constituents, grouped_form, train_phrase_hmm, GrammarRuleTable, VttEntry, VttTable};
use rhetoric::semrules::{
    absence_feature, addition_feature, match_rules, repetition_feature, score_rule, similarity_matrix, Element, Lexicon,
    RuleKind, SemanticRule, SimilarityConfig,
};
use rhetoric::synth::{generate, GeneratorSpec};
use rhetoric::tree::RSTree;
use rhetoric::types::{DiscourseRelation, Edu, EduRole, PhraseLabel, TagAlphabet};

type Outcome = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn sample(rng: &mut impl Rng, row: &[f64]) -> usize {
    let mut u: f64 = rng.gen();
    for (i, &p) in row.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    row.len() - 1
}

fn sample_sequence(rng: &mut impl Rng, m: &RawModel, len: usize) -> Vec<usize> {
    let mut s = sample(rng, &m.initial);
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(sample(rng, &m.emit[s]));
        s = sample(rng, &m.trans[s]);
    }
    out
}

fn tag_model_path() -> Outcome {
    let docs = fixture_corpus("borrow_book.tsv");
    let alphabet = TagAlphabet::default();
    let tags = train_phrase_hmm(&docs, &alphabet, false, 0.0).map_err(|e| e.to_string())?;
    let (path, _) = tags.viterbi(&["NCMN", "XVMM", "VACT", "NCMN", "CNIT", "DDAC"]).map_err(|e| e.to_string())?;
    ensure!(path == ["H", "Aux1", "Nuc", "H", "D", "D"], "decoded {path:?}");
    let lexical = train_phrase_hmm(&docs, &alphabet, true, 0.0).map_err(|e| e.to_string())?;
    let borrow = lexical.emission_by_name("Nuc", "VACT:ยืม");
    let buy = lexical.emission_by_name("Nuc", "VACT:ซื้อ");
    ensure!(borrow == Some(2.0 / 3.0), "p(borrow|Nuc) = {borrow:?}");
    ensure!(buy == Some(1.0 / 3.0), "p(buy|Nuc) = {buy:?}");
    Ok(())
}

fn viterbi_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..1000 {
        let (k, m) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let raw = RawModel::random(&mut rng, k, m);
        let model = raw.model();
        let obs: Vec<usize> = (0..rng.gen_range(1..=5)).map(|_| rng.gen_range(0..m)).collect();
        let best = all_sequences(k, obs.len())
            .iter()
            .map(|p| raw.path_probability(p, &obs))
            .fold(0.0, f64::max);
        let (path, logp) = model.viterbi(&names("o", &obs)).map_err(|e| e.to_string())?;
        let decoded: Vec<usize> = path.iter().map(|s| s[1..].parse().unwrap()).collect();
        ensure!(relative_close(logp.exp(), best, 1e-12), "case {case}: {} vs {best}", logp.exp());
        let own = raw.path_probability(&decoded, &obs);
        ensure!(relative_close(own, best, 1e-12), "case {case}: decoded path scores {own}, best {best}");
    }
    Ok(())
}

fn forward_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..100 {
        let (k, m, len) = (rng.gen_range(1..=4), rng.gen_range(1..=3), rng.gen_range(1..=4));
        let model = RawModel::random(&mut rng, k, m).model();
        let mut total = 0.0;
        for obs in all_sequences(m, len) {
            total += model.forward_likelihood(&names("o", &obs)).map_err(|e| e.to_string())?;
        }
        ensure!((total - 1.0).abs() <= 1e-9, "case {case}: total {total}");
    }
    Ok(())
}

fn baum_welch_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let truth = RawModel::random(&mut rng, 3, 3);
    let data: Vec<Vec<String>> = (0..6).map(|_| names("o", &sample_sequence(&mut rng, &truth, 8))).collect();
    for init in 0..100 {
        let k = rng.gen_range(2..=3);
        let start = RawModel::random(&mut rng, k, 3).model();
        let cfg = BaumWelchConfig { epsilon: 0.0, max_iter: 15, ..BaumWelchConfig::default() };
        let (_, report) = baum_welch(&start, &data, &cfg).map_err(|e| e.to_string())?;
        for w in report.log_likelihood.windows(2) {
            ensure!(w[1] >= w[0] - 1e-9, "init {init}: likelihood fell from {} to {}", w[0], w[1]);
        }
    }

    // Each state owns one symbol, so the posterior equals the labeling.
    let states = names("q", &[0, 1, 2]);
    let symbols = names("o", &[0, 1, 2]);
    let labeled: Vec<LabeledSequence> = (0..8)
        .map(|_| {
            let path: Vec<usize> = (0..rng.gen_range(3..9)).map(|_| rng.gen_range(0..3)).collect();
            LabeledSequence::new(names("q", &path), names("o", &path))
        })
        .collect();
    let mle = estimate_supervised(&states, &symbols, &labeled, 0.0).map_err(|e| e.to_string())?;
    let obs: Vec<Vec<String>> = labeled.iter().map(|s| s.symbols.clone()).collect();
    let one = BaumWelchConfig { max_iter: 1, ..BaumWelchConfig::default() };
    let (after, _) = baum_welch(&mle, &obs, &one).map_err(|e| e.to_string())?;
    let max_diff = |a: &HmmModel, b: &HmmModel| {
        let n = a.states().len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((a.transition(i, j) - b.transition(i, j)).abs());
            }
            for s in 0..a.symbols().len() {
                worst = worst.max((a.emission(i, s) - b.emission(i, s)).abs());
            }
        }
        worst
    };
    let moved = max_diff(&mle, &after);
    ensure!(moved <= 1e-9, "supervised estimate moved by {moved}");

    for run in 0..20 {
        let start = RawModel::random(&mut rng, 3, 3).model();
        let cfg = BaumWelchConfig { epsilon: 0.02, max_iter: 500, ..BaumWelchConfig::default() };
        let (_, report) = baum_welch(&start, &data, &cfg).map_err(|e| e.to_string())?;
        ensure!(report.stop == StopReason::Converged, "run {run}: stopped by {:?}", report.stop);
        ensure!(report.final_delta <= 0.02, "run {run}: final delta {}", report.final_delta);
        let early = &report.deltas[..report.deltas.len() - 1];
        ensure!(early.iter().all(|&d| d > 0.02), "run {run}: kept iterating after a small step");
    }
    Ok(())
}

fn semantic_rule_values() -> Outcome {
    let [e1, e2, e3] = villagers();
    let lexicon = Lexicon::default();
    let rule = |n| SemanticRule::by_name(n).ok_or(format!("no rule {n}"));

    let (c, a) = absence_feature(&e1, &e2, rule("Φ(S,S)")?, 3).map_err(|e| e.to_string())?;
    ensure!(c.get(Element::Subject) == 2.0 / 3.0, "Subject = {}", c.get(Element::Subject));
    ensure!(
        a.get(Element::AbsenceOfSubject) == 2.0 / 3.0,
        "Absence of Subject = {}",
        a.get(Element::AbsenceOfSubject)
    );

    let (c, a) = repetition_feature(&e1, &e3, rule("я(O,S)")?, 3).map_err(|e| e.to_string())?;
    ensure!(c.get(Element::Object) == 1.0 / 27.0, "Object = {}", c.get(Element::Object));
    ensure!(a.get(Element::Subject) == 1.0 / 27.0, "Subject = {}", a.get(Element::Subject));

    let m = match_rules(&e1, &e2, &lexicon);
    let add = m.iter().find(|r| r.rule.kind() == RuleKind::Addition).ok_or("no addition rule matched")?;
    let (c, a) = addition_feature(add.rule).map_err(|e| e.to_string())?;
    let marks = [Element::MarkerBefore, Element::MarkerAfter];
    let filled: Vec<f64> = marks.iter().flat_map(|&e| [c.get(e), a.get(e)]).filter(|&v| v != 0.0).collect();
    ensure!(!filled.is_empty() && filled.iter().all(|&v| v == 1.0), "marker elements {filled:?}");

    let cfg = SimilarityConfig::default();
    for kind in [RuleKind::Absence, RuleKind::Repetition, RuleKind::Addition] {
        for dist in 4..12 {
            ensure!(score_rule(&c, &a, kind, dist, &cfg) == 0.0, "{kind:?} scores at distance {dist}");
        }
    }
    // Same clause repeated: every pair repeats everything.
    let same: Vec<Edu> = (1..=7)
        .map(|p| {
            edu(p, &[("ชาวบ้าน", "NCMN", PhraseLabel::Head, EduRole::Subject), ("ประกอบ", "VACT", PhraseLabel::Nucleus, EduRole::TransitiveVerb)])
        })
        .collect();
    let s = similarity_matrix(&same, &lexicon, &cfg).map_err(|e| e.to_string())?;
    for i in 0..same.len() {
        for j in i + 1..same.len() {
            let v = s.get(i, j);
            ensure!((j - i >= 4) == (v == 0.0), "pair ({i},{j}) at distance {} scores {v}", j - i);
        }
    }
    Ok(())
}

fn linkage_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut cases = 0;
    for instance in 0..120 {
        let n = rng.gen_range(2..=6);
        let d = random_distances(&mut rng, n);
        let positions: Vec<usize> = (0..n).collect();
        for method in LinkageMethod::ALL {
            let (a, b) = random_pair(&mut rng, n);
            let direct = linkage_distance(&a.to_tree(), &b.to_tree(), method, &d).map_err(|e| e.to_string())?;
            let oracle = distance(&a, &b, method, &d);
            ensure!(relative_close(direct, oracle, 1e-12), "{method} instance {instance}: {direct} vs {oracle}");
            for adjacency in [true, false] {
                let (tree, merges) = build_tree_traced(&positions, &d, method, adjacency).map_err(|e| e.to_string())?;
                let (expected, steps) = agglomerate(n, &d, method, adjacency);
                ensure!(tree == expected.to_tree(), "{method} instance {instance} adjacency {adjacency}: trees differ");
                for (mg, st) in merges.iter().zip(&steps) {
                    ensure!(
                        mg.left == st.left && mg.right == st.right,
                        "{method} instance {instance}: merged {:?}+{:?}, expected {:?}+{:?}",
                        mg.left,
                        mg.right,
                        st.left,
                        st.right
                    );
                    ensure!(
                        relative_close(mg.distance, st.distance, 1e-12) || (mg.distance - st.distance).abs() < 1e-14,
                        "{method} instance {instance}: merge distance {} vs {}",
                        mg.distance,
                        st.distance
                    );
                }
                cases += 1;
            }
        }
    }
    ensure!(cases >= 500, "only {cases} cases");
    Ok(())
}

fn clustering_metrics() -> Outcome {
    let rules = GrammarRuleTable::default();
    let gold = &fixture_trees("clustering_gold.json")[0].tree;
    let mv = &fixture_trees("clustering_minimum_variance.json")[0].tree;
    let m = tree_metrics(mv, gold).map_err(|e| e.to_string())?;
    ensure!((m.correct, m.predicted, m.gold) == (9, 9, 9), "minimum variance {m:?}");
    ensure!(m.precision == 1.0 && m.recall == 1.0, "minimum variance {m:?}");

    let upgma = &fixture_trees("clustering_unweighted_average.json")[0].tree;
    let spans = |name: &str| gold_document(&fixture_corpus(name)[0], &rules).map(|d| d.spans);
    let gold_spans = spans("clustering_gold.tsv").map_err(|e| e.to_string())?;
    let upgma_spans = spans("clustering_unweighted_average.tsv").map_err(|e| e.to_string())?;
    let m = span_tree_metrics(upgma, &upgma_spans, gold, &gold_spans).map_err(|e| e.to_string())?;
    ensure!((m.correct, m.predicted, m.gold) == (6, 10, 9), "unweighted average {m:?}");
    ensure!(m.precision == 6.0 / 10.0 && m.recall == 6.0 / 9.0, "unweighted average {m:?}");
    Ok(())
}

fn grouping_golden() -> Outcome {
    use EduRole::*;
    use PhraseLabel::*;
    let rules = GrammarRuleTable::default();
    let e = edu(
        1,
        &[
            ("เพื่อน", "NCMN", Head, Subject),
            ("จะขอ", "XVMM", PreAuxiliary, TransitiveVerb),
            ("ยืม", "VACT", Nucleus, TransitiveVerb),
            ("หนังสือ", "NCMN", Head, Object),
            ("เล่ม", "CNIT", Determinative, Object),
            ("นี้", "DDAC", Determinative, Object),
        ],
    );
    let g = group_constituents(e, &rules, &VttTable::default());
    ensure!(grouped_form(&g) == "NP_S-(V,V)_t-(NP,NP,NP)_O", "grouped as {}", grouped_form(&g));
    ensure!(g.rule.as_deref() == Some("NP_O-NP_S-Vt-NP_O"), "rule {:?}", g.rule);

    let fronted = || {
        edu(
            2,
            &[
                ("หนังสือ", "NCMN", Head, Object),
                ("พ่อ", "NCMN", Head, Subject),
                ("ให้", "VACT", Nucleus, DitransitiveVerb),
                ("น้อง", "NCMN", Head, IndirectObject),
            ],
        )
    };
    let mut vtt = VttTable::default();
    vtt.insert("ให้", "หนังสือ", VttEntry { object: 0.1, indirect: 0.9 });
    vtt.insert("ให้", "น้อง", VttEntry { object: 0.8, indirect: 0.2 });
    let g = group_constituents(fronted(), &rules, &vtt);
    ensure!(g.arrangement.as_deref() == Some("I-S-Vtt-O"), "resolved to {:?}", g.arrangement);
    ensure!(g.groups[0].role == IndirectObject && g.groups[3].role == Object, "roles {}", g.role_pattern());
    let mut vtt = VttTable::default();
    vtt.insert("ให้", "หนังสือ", VttEntry { object: 0.9, indirect: 0.1 });
    vtt.insert("ให้", "น้อง", VttEntry { object: 0.2, indirect: 0.8 });
    let g = group_constituents(fronted(), &rules, &vtt);
    ensure!(g.arrangement.as_deref() == Some("O-S-Vtt-I"), "kept {:?}", g.arrangement);
    Ok(())
}

fn relation_feature_golden() -> Outcome {
    let [e1, e2, e3] = villagers();
    let lexicon = Lexicon::default();
    let r = extract_relation_features(&Unit::edu(&e1), &Unit::edu(&e2), &lexicon);
    let get = |r: &FeatureRecord, n: &str| r.by_name(n).unwrap_or("?").to_string();
    ensure!(get(&r, "cat:Subject") == "1", "cat:Subject = {}", get(&r, "cat:Subject"));
    ensure!(get(&r, "ana:Absence-of-Subject") == "1", "ana:Absence-of-Subject = {}", get(&r, "ana:Absence-of-Subject"));
    ensure!(get(&r, "cat:Marker-After") == "และ", "cat:Marker-After = {}", get(&r, "cat:Marker-After"));
    ensure!(get(&r, "ana:Marker-Before") == "และ", "ana:Marker-Before = {}", get(&r, "ana:Marker-Before"));

    let r = extract_relation_features(&Unit::edu(&e1), &Unit::edu(&e3), &lexicon);
    ensure!(get(&r, "cat:Object") == "1", "cat:Object = {}", get(&r, "cat:Object"));
    ensure!(get(&r, "ana:Subject") == "1", "ana:Subject = {}", get(&r, "ana:Subject"));

    let node = RSTree::join(RSTree::leaf(1), RSTree::leaf(3)).map_err(|e| e.to_string())?;
    let edus = [e1.clone(), e3.clone()];
    let internal = Unit::node(&node, &edus).map_err(|e| e.to_string())?;
    ensure!(internal.internal, "a joined node must count as internal");
    let r = extract_relation_features(&internal, &Unit::edu(&e2), &lexicon);
    ensure!(get(&r, "ana:Absence-of-Subject") == "0", "absence rule applied to an internal unit");
    ensure!(get(&r, "ana:Marker-Before") == "และ", "marker lost for an internal unit");
    Ok(())
}

fn entropy(labels: &[DiscourseRelation]) -> f64 {
    let mut counts: BTreeMap<DiscourseRelation, f64> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1.0;
    }
    let n = labels.len() as f64;
    counts.values().map(|&c| -(c / n) * (c / n).log2()).sum()
}

fn oracle_gain_ratio(records: &[FeatureRecord], labels: &[DiscourseRelation], f: usize) -> Option<f64> {
    let mut parts: BTreeMap<&str, Vec<DiscourseRelation>> = BTreeMap::new();
    for (r, &l) in records.iter().zip(labels) {
        parts.entry(r.value(f)).or_default().push(l);
    }
    if parts.len() < 2 {
        return None;
    }
    let n = labels.len() as f64;
    let remainder: f64 = parts.values().map(|p| p.len() as f64 / n * entropy(p)).sum();
    let split: f64 = parts.values().map(|p| -(p.len() as f64 / n) * (p.len() as f64 / n).log2()).sum();
    Some((entropy(labels) - remainder) / split)
}

fn synthetic_records(rng: &mut impl Rng, n: usize, noise: f64) -> (Vec<FeatureRecord>, Vec<DiscourseRelation>) {
    let mut records = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n {
        let mut values: Vec<String> = FEATURE_NAMES.iter().map(|_| "0".to_string()).collect();
        for (i, v) in values.iter_mut().enumerate() {
            if rhetoric::relation::is_marker_feature(i) {
                v.clear();
            } else if rng.gen_bool(0.5) {
                *v = "1".into();
            }
        }
        values[ANA_MARKER_BEFORE] = ["", "แต่", "และ"].choose(rng).unwrap().to_string();
        let label = if values[ANA_MARKER_BEFORE] == "แต่" {
            DiscourseRelation::Contrast
        } else if values[0] == "1" {
            DiscourseRelation::Reason
        } else {
            DiscourseRelation::Time
        };
        let label = if rng.gen_bool(noise) { *DiscourseRelation::ALL.choose(rng).unwrap() } else { label };
        records.push(FeatureRecord::new(values).unwrap());
        labels.push(label);
    }
    (records, labels)
}

fn decision_tree_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let unpruned = TreeParams { min_leaf: 1, confidence: None };
    let (records, labels) = synthetic_records(&mut rng, 40, 0.0);
    let (tree, trace) = train_decision_tree_traced(&records, &labels, &unpruned).map_err(|e| e.to_string())?;
    let hits = records.iter().zip(&labels).filter(|(r, l)| predict_relation(&tree, r).0 == **l).count();
    ensure!(hits == 40, "unpruned tree fits {hits}/40");

    let root = trace.first().ok_or("no split recorded")?;
    let best = (0..FEATURE_NAMES.len())
        .filter_map(|f| oracle_gain_ratio(&records, &labels, f))
        .fold(f64::NEG_INFINITY, f64::max);
    let chosen = oracle_gain_ratio(&records, &labels, root.chosen).ok_or("root split on a constant feature")?;
    ensure!((chosen - best).abs() <= 1e-9, "root feature scores {chosen}, best is {best}");
    for &(f, ratio) in &root.gain_ratios {
        let oracle = oracle_gain_ratio(&records, &labels, f).unwrap_or(f64::NAN);
        ensure!((ratio - oracle).abs() <= 1e-9, "{}: {ratio} vs {oracle}", FEATURE_NAMES[f]);
    }

    for case in 0..30 {
        let (records, labels) = synthetic_records(&mut rng, 60, 0.3);
        let full = train_decision_tree(&records, &labels, &unpruned).map_err(|e| e.to_string())?;
        for cf in [0.1, 0.25, 0.5] {
            let params = TreeParams { min_leaf: 1, confidence: Some(cf) };
            let pruned = train_decision_tree(&records, &labels, &params).map_err(|e| e.to_string())?;
            let (before, after) = (estimated_errors(&full.root, cf), estimated_errors(&pruned.root, cf));
            ensure!(after <= before + 1e-9, "case {case} cf {cf}: {after} > {before}");
        }
    }
    Ok(())
}

fn synthetic_reproduction() -> Outcome {
    let rules = GrammarRuleTable::default();
    let alphabet = TagAlphabet::default();
    let spec = GeneratorSpec::default();
    ensure!(spec.documents >= 50, "only {} documents", spec.documents);
    let corpus = generate(&spec, &rules, &alphabet).map_err(|e| e.to_string())?;
    let out = run_pipeline(&corpus.corpus(), &corpus.trees(), &PipelineConfig::default(), &alphabet, &rules, &corpus.lexicon)
        .map_err(|e| e.to_string())?;
    let rel = out.relations.overall.accuracy().unwrap_or(0.0);
    println!(
        "    segmentation recall {:.3}, tree P {:.3} R {:.3}, relations {rel:.3}",
        out.segmentation.recall, out.tree.precision, out.tree.recall
    );
    ensure!(out.segmentation.recall >= 0.95, "segmentation recall {}", out.segmentation.recall);
    ensure!(out.tree.precision >= 0.90 && out.tree.recall >= 0.90, "tree {:?}", out.tree);
    ensure!(rel >= 0.90, "relation accuracy {rel}");
    Ok(())
}

fn cli(args: &[&str]) -> i32 {
    rhetoric::cli::main_with_args(std::iter::once("rhetoric").chain(args.iter().copied()).map(std::ffi::OsString::from))
}

fn pipeline_run(data: &Path, out: &Path) -> Outcome {
    let p = |f: &str| data.join(f).display().to_string();
    let code = cli(&[
        "pipeline",
        "--corpus",
        &p("corpus.tsv"),
        "--trees",
        &p("trees.json"),
        "--lexicon",
        &p("lexicon.tsv"),
        "--out-dir",
        &out.display().to_string(),
    ]);
    ensure!(code == 0, "pipeline exited with {code}");
    Ok(())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("data");
    let code = cli(&["synth", "--out-dir", &data.display().to_string()]);
    ensure!(code == 0, "synth exited with {code}");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    pipeline_run(&data, &a)?;
    pipeline_run(&data, &b)?;
    let mut files: Vec<_> = std::fs::read_dir(&a).map_err(|e| e.to_string())?.map(|e| e.unwrap().file_name()).collect();
    files.sort();
    ensure!(!files.is_empty(), "pipeline wrote nothing");
    for f in files {
        let x = std::fs::read(a.join(&f)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(&f)).map_err(|e| format!("{f:?}: {e}"))?;
        ensure!(x == y, "{f:?} differs between runs");
    }
    Ok(())
}

fn main() {
    let criteria: Vec<(&str, Option<Duration>, fn() -> Outcome)> = vec![
        ("tag model golden path", Some(Duration::from_secs(1)), tag_model_path),
        ("viterbi against exhaustive search", Some(Duration::from_secs(30)), viterbi_oracle),
        ("forward probabilities sum to one", None, forward_normalization),
        ("baum-welch monotone, fixed point, stopping rule", None, baum_welch_properties),
        ("semantic rule golden values", None, semantic_rule_values),
        ("linkage methods against definitions", None, linkage_oracle),
        ("tree metrics on the fixtures", None, clustering_metrics),
        ("grouping and vtt disambiguation", None, grouping_golden),
        ("relation feature golden cases", None, relation_feature_golden),
        ("decision tree properties", None, decision_tree_properties),
        ("synthetic end-to-end reproduction", Some(Duration::from_secs(120)), synthetic_reproduction),
        ("pipeline determinism", None, determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(()), Some(l)) if elapsed > l => Err(format!("took {elapsed:?}, limit {l:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(()) => println!("PASS {:>2} {name} ({:.2?})", i + 1, elapsed),
            Err(why) => {
                println!("FAIL {:>2} {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
