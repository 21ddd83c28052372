//! Seeded synthetic corpora with gold phrase labels, EDU labels, trees and
//! relations.
//!
//! Every EDU after the first opens with the cue of the relation it
//! completes: the relation of the node whose right child it starts. Each
//! internal node below the root contributes one word to the noun-phrase
//! modifiers of all EDUs it spans, so EDUs that share a deeper subtree
//! share more words. The rule mix adds omitted subjects or repeated heads.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusToken, Document, Sequence};
use crate::error::{Error, Result};
use crate::rstree::promote;
use crate::segmentation::GrammarRuleTable;
use crate::semrules::Lexicon;
use crate::tree::{DocTree, RSTree};
use crate::types::{DiscourseRelation, EduRole, PhraseKind, PhraseLabel, TagAlphabet, TaggedToken};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleMix {
    pub absence: f64,
    pub repetition: f64,
    pub addition: f64,
}

impl Default for RuleMix {
    fn default() -> Self {
        RuleMix { absence: 0.0, repetition: 0.0, addition: 1.0 }
    }
}

/// The cue that signals a relation: a discourse marker or a key phrase.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationCue {
    pub relation: DiscourseRelation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marker: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
}

impl RelationCue {
    fn token(&self) -> &str {
        self.marker.as_deref().or(self.key.as_deref()).unwrap_or_default()
    }
}

fn marker_cue(relation: DiscourseRelation, word: &str) -> RelationCue {
    RelationCue { relation, marker: Some(word.into()), key: None }
}

fn key_cue(relation: DiscourseRelation, phrase: &str) -> RelationCue {
    RelationCue { relation, marker: None, key: Some(phrase.into()) }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub documents: usize,
    pub min_edus: usize,
    pub max_edus: usize,
    /// Upper bound on EDUs per sentence.
    pub max_sentence_edus: usize,
    pub rule_mix: RuleMix,
    /// EDU arrangement name to weight.
    pub arrangements: BTreeMap<String, f64>,
    pub np_patterns: Vec<String>,
    pub vp_patterns: Vec<String>,
    pub relations: Vec<RelationCue>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        use DiscourseRelation::*;
        GeneratorSpec {
            seed: 7,
            documents: 60,
            min_edus: 8,
            max_edus: 12,
            max_sentence_edus: 3,
            rule_mix: RuleMix::default(),
            arrangements: BTreeMap::from([("S-Vt-O".to_string(), 1.0)]),
            np_patterns: ["H-Mi-Q-D-Ma", "H-Mi-D-Q-Ma", "H-Q-Mi-D-Ma"].map(String::from).to_vec(),
            vp_patterns: ["Nuc-M", "Aux1-Nuc-M", "Nuc-M-Aux2", "Aux1-Nuc-M-Aux2"].map(String::from).to_vec(),
            relations: vec![
                marker_cue(Consent, "และ"),
                marker_cue(Example, "เช่น"),
                marker_cue(Characteristic, "โดย"),
                key_cue(Summary, "สรุปว่า"),
                marker_cue(Condition, "ถ้า"),
                marker_cue(Option, "หรือ"),
                marker_cue(Time, "เมื่อ"),
                marker_cue(Reason, "เพราะ"),
                key_cue(Explanation, "กล่าวคือ"),
                marker_cue(Contrast, "แต่"),
            ],
        }
    }
}

impl GeneratorSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: GeneratorSpec = toml::from_str(text).map_err(|e| Error::Config(format!("generator spec: {e}")))?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading generator spec {}", path.display()), e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("generator spec serializes")
    }

    pub fn validate(&self, rules: &GrammarRuleTable) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let w = &self.rule_mix;
        if [w.absence, w.repetition, w.addition].iter().any(|x| !x.is_finite() || *x < 0.0)
            || w.absence + w.repetition + w.addition <= 0.0
        {
            return bad("rule-mix weights must be non-negative and not all zero".into());
        }
        if self.documents == 0 || self.min_edus < 2 || self.min_edus > self.max_edus || self.max_sentence_edus == 0 {
            return bad("need documents ≥ 1, 2 ≤ min_edus ≤ max_edus and max_sentence_edus ≥ 1".into());
        }
        if self.arrangements.is_empty() || self.arrangements.values().any(|x| !x.is_finite() || *x < 0.0) {
            return bad("arrangement weights must be non-negative".into());
        }
        if self.arrangements.values().sum::<f64>() <= 0.0 {
            return bad("arrangement weights are all zero".into());
        }
        for name in self.arrangements.keys() {
            if !rules.edu.iter().any(|a| &a.name() == name) {
                return bad(format!("arrangement `{name}` is not in the EDU table"));
            }
        }
        for (kind, list) in [(PhraseKind::Np, &self.np_patterns), (PhraseKind::Vp, &self.vp_patterns)] {
            if list.is_empty() {
                return bad(format!("no {kind} templates"));
            }
            for p in list {
                if rules.phrase_kind(&parse_labels(p)?) != Some(kind) {
                    return bad(format!("`{p}` is not a {kind} arrangement"));
                }
            }
        }
        if self.relations.is_empty() {
            return bad("relation map is empty".into());
        }
        for cue in &self.relations {
            if cue.marker.is_some() == cue.key.is_some() {
                return bad(format!("relation {} needs exactly one of marker or key", cue.relation));
            }
        }
        Ok(())
    }

    /// Markers and key phrases of the relation map.
    pub fn lexicon(&self) -> Lexicon {
        let mut lex = Lexicon::default();
        for cue in &self.relations {
            if let Some(m) = &cue.marker {
                lex.markers.insert(m.clone());
            }
            if let Some(k) = &cue.key {
                lex.key_phrases.insert(k.clone());
            }
        }
        lex
    }
}

fn parse_labels(pattern: &str) -> Result<Vec<PhraseLabel>> {
    pattern.split('-').map(str::parse).collect()
}

/// A rule the generator planted between two EDUs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlantedRule {
    pub cat: usize,
    pub ana: usize,
    pub rule: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDocument {
    pub document: Document,
    /// Gold tree with relations and promotions.
    pub tree: RSTree,
    pub planted: Vec<PlantedRule>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub documents: Vec<SyntheticDocument>,
    pub lexicon: Lexicon,
}

impl SyntheticCorpus {
    pub fn corpus(&self) -> Vec<Document> {
        self.documents.iter().map(|d| d.document.clone()).collect()
    }

    pub fn trees(&self) -> Vec<DocTree> {
        self.documents
            .iter()
            .map(|d| DocTree {
                doc: d.document.id.clone().unwrap_or_default(),
                tree: d.tree.clone(),
            })
            .collect()
    }

    /// `doc<TAB>cat<TAB>ana<TAB>rule` lines.
    pub fn planted_tsv(&self) -> String {
        let mut out = String::from("doc\tcat\tana\trule\n");
        for d in &self.documents {
            for p in &d.planted {
                let _ = writeln!(out, "{}\t{}\t{}\t{}", d.document.id.as_deref().unwrap_or(""), p.cat, p.ana, p.rule);
            }
        }
        out
    }
}

fn tags_for(label: PhraseLabel) -> &'static [&'static str] {
    use PhraseLabel::*;
    match label {
        Head => &["NCMN", "NPRP", "PPRS"],
        IntransitiveModifier => &["VATT"],
        AdjunctiveModifier => &["RPRE"],
        Quantifier => &["DCNM"],
        Determinative => &["DDAC", "CNIT"],
        Nucleus => &["VACT", "VSTA"],
        PreAuxiliary => &["XVMM", "XVBM", "NEG"],
        PostAuxiliary => &["XVAE"],
        Modifier => &["ADVN"],
        Marker | Start | End => &["CONJ"],
    }
}

/// Random binary tree over `lo..=hi` with left sizes drawn from the middle
/// third, keeping depth logarithmic.
fn random_tree(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> RSTree {
    if lo == hi {
        return RSTree::leaf(lo);
    }
    let size = hi - lo + 1;
    let a = (size / 3).max(1);
    let b = (2 * size / 3).clamp(a, size - 1);
    let left = rng.gen_range(a..=b);
    let l = random_tree(rng, lo, lo + left - 1);
    let r = random_tree(rng, lo + left, hi);
    RSTree::join(l, r).expect("disjoint spans")
}

fn assign_relations(t: &mut RSTree, rng: &mut ChaCha8Rng, cues: &[RelationCue]) {
    let pick = cues[rng.gen_range(0..cues.len())].relation;
    if let Some((l, r)) = t.children_mut() {
        assign_relations(l, rng, cues);
        assign_relations(r, rng, cues);
        t.relation = Some(pick);
    }
}

/// For each EDU, the relation whose right child it starts.
fn completed_relations(t: &RSTree, out: &mut BTreeMap<usize, DiscourseRelation>) {
    if let (Some(l), Some(r)) = (t.left(), t.right()) {
        if let Some(rel) = t.relation {
            out.insert(r.first(), rel);
        }
        completed_relations(l, out);
        completed_relations(r, out);
    }
}

/// Word ids of the non-root internal nodes above each EDU, outermost first.
fn ancestor_words(t: &RSTree, depth: usize, stack: &mut Vec<String>, next: &mut usize, out: &mut BTreeMap<usize, Vec<String>>) {
    if t.is_leaf() {
        out.insert(t.first(), stack.clone());
        return;
    }
    let pushed = depth > 0;
    if pushed {
        stack.push(format!("w{next}"));
        *next += 1;
    }
    for c in [t.left(), t.right()].into_iter().flatten() {
        ancestor_words(c, depth + 1, stack, next, out);
    }
    if pushed {
        stack.pop();
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Planted {
    Absence,
    Repetition,
    Addition,
}

struct EduPlan {
    roles: Vec<EduRole>,
    cue: Option<String>,
    /// Head shared with the previous EDU, placed in the first noun slot.
    shared_head: Option<String>,
}

struct Builder<'a> {
    spec: &'a GeneratorSpec,
    alphabet: &'a TagAlphabet,
    rng: ChaCha8Rng,
    next: usize,
}

impl Builder<'_> {
    fn fresh(&mut self) -> String {
        self.next += 1;
        format!("w{}", self.next - 1)
    }

    fn token(&mut self, surface: String, label: PhraseLabel, role: EduRole, begin: bool) -> Result<CorpusToken> {
        let options = tags_for(label);
        let code = options[self.rng.gen_range(0..options.len())];
        let tag = self
            .alphabet
            .tag(code)
            .ok_or_else(|| Error::Config(format!("tag alphabet lacks `{code}`")))?;
        Ok(CorpusToken {
            token: TaggedToken { surface, tag, index: 0 },
            phrase: Some(label),
            role: Some(role),
            begin: Some(begin),
        })
    }

    fn pick<'s>(&mut self, list: &'s [String]) -> &'s str {
        &list[self.rng.gen_range(0..list.len())]
    }

    /// Tokens of one EDU plus the head word of each noun role.
    fn edu(&mut self, plan: &EduPlan, mut words: Vec<String>) -> Result<(Vec<CorpusToken>, BTreeMap<EduRole, String>)> {
        words.reverse();
        let mut out = Vec::new();
        let mut heads = BTreeMap::new();
        if let Some(cue) = &plan.cue {
            out.push(self.token(cue.clone(), PhraseLabel::Marker, EduRole::Marker, true)?);
        }
        let mut shared = plan.shared_head.clone();
        for &role in &plan.roles {
            let list = if role.is_noun() { &self.spec.np_patterns } else { &self.spec.vp_patterns };
            let pattern = parse_labels(self.pick(list))?;
            for label in pattern {
                let surface = match label {
                    PhraseLabel::Head => {
                        let w = shared.take().unwrap_or_else(|| self.fresh());
                        heads.insert(role, w.clone());
                        w
                    }
                    l if l.is_noun_modifier() => words.pop().unwrap_or_else(|| self.fresh()),
                    _ => self.fresh(),
                };
                let begin = out.is_empty();
                out.push(self.token(surface, label, role, begin)?);
            }
        }
        Ok((out, heads))
    }
}

fn roles_of(name: &str) -> Result<Vec<EduRole>> {
    name.split('-').map(str::parse).collect()
}

/// The arrangement without its subject, when the table has it.
fn without_subject(roles: &[EduRole], rules: &GrammarRuleTable) -> Option<Vec<EduRole>> {
    let dropped: Vec<EduRole> = roles.iter().copied().filter(|&r| r != EduRole::Subject).collect();
    (dropped.len() < roles.len() && rules.edu_arrangement(&dropped).is_some()).then_some(dropped)
}

fn slot_name(role: EduRole) -> &'static str {
    match role {
        EduRole::Subject => "S",
        EduRole::Object => "O",
        _ => "Prep",
    }
}

/// Φ antecedent preference for a missing subject.
fn absence_rule(prev: &[EduRole]) -> Option<String> {
    [EduRole::Subject, EduRole::Object, EduRole::IndirectObject]
        .into_iter()
        .find(|r| prev.contains(r))
        .map(|r| format!("Φ({},S)", slot_name(r)))
}

pub fn generate(spec: &GeneratorSpec, rules: &GrammarRuleTable, alphabet: &TagAlphabet) -> Result<SyntheticCorpus> {
    spec.validate(rules)?;
    let arrangements: Vec<(Vec<EduRole>, f64)> = spec
        .arrangements
        .iter()
        .map(|(k, &w)| Ok((roles_of(k)?, w)))
        .collect::<Result<_>>()?;
    let arrangement_dist = WeightedIndex::new(arrangements.iter().map(|a| a.1)).map_err(|e| Error::Config(e.to_string()))?;
    let m = &spec.rule_mix;
    let mix = WeightedIndex::new([m.absence, m.repetition, m.addition]).map_err(|e| Error::Config(e.to_string()))?;
    let cue_of: BTreeMap<DiscourseRelation, &RelationCue> = spec.relations.iter().map(|c| (c.relation, c)).collect();
    let lexicon = spec.lexicon();

    let mut b = Builder {
        spec,
        alphabet,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        next: 0,
    };
    let mut documents = Vec::with_capacity(spec.documents);
    for d in 0..spec.documents {
        b.next = 0;
        let n = b.rng.gen_range(spec.min_edus..=spec.max_edus);
        let mut tree = random_tree(&mut b.rng, 1, n);
        assign_relations(&mut tree, &mut b.rng, &spec.relations);
        let tree = promote(tree);
        let mut completes = BTreeMap::new();
        completed_relations(&tree, &mut completes);
        let mut words = BTreeMap::new();
        ancestor_words(&tree, 0, &mut Vec::new(), &mut b.next, &mut words);

        let mut planted = Vec::new();
        let mut edus: Vec<Vec<CorpusToken>> = Vec::with_capacity(n);
        let mut prev_roles: Vec<EduRole> = Vec::new();
        let mut prev_heads: BTreeMap<EduRole, String> = BTreeMap::new();
        for pos in 1..=n {
            let mut roles = arrangements[arrangement_dist.sample(&mut b.rng)].0.clone();
            let kind = if pos == 1 {
                None
            } else {
                Some([Planted::Absence, Planted::Repetition, Planted::Addition][mix.sample(&mut b.rng)])
            };
            let mut shared_head = None;
            match kind {
                Some(Planted::Absence) => {
                    if let Some(r) = without_subject(&roles, rules) {
                        roles = r;
                    }
                    if !roles.contains(&EduRole::Subject) {
                        if let Some(rule) = absence_rule(&prev_roles) {
                            planted.push(PlantedRule { cat: pos - 1, ana: pos, rule });
                        }
                    }
                }
                Some(Planted::Repetition) => {
                    let source = [EduRole::Object, EduRole::Subject, EduRole::IndirectObject]
                        .into_iter()
                        .find(|r| prev_heads.contains_key(r));
                    let target = roles.iter().copied().find(|r| r.is_noun());
                    if let (Some(s), Some(t)) = (source, target) {
                        shared_head = prev_heads.get(&s).cloned();
                        planted.push(PlantedRule {
                            cat: pos - 1,
                            ana: pos,
                            rule: format!("я({},{})", slot_name(s), slot_name(t)),
                        });
                    }
                }
                Some(Planted::Addition) | None => {}
            }
            let cue = completes.get(&pos).map(|r| cue_of[r]);
            if let Some(c) = cue {
                let rule = if c.marker.is_some() { "Д(Marker,Before)" } else { "Д(KeyPhrase,Before)" };
                planted.push(PlantedRule { cat: pos - 1, ana: pos, rule: rule.into() });
            }
            let plan = EduPlan {
                roles: roles.clone(),
                cue: cue.map(|c| c.token().to_string()),
                shared_head,
            };
            let (tokens, heads) = b.edu(&plan, words.remove(&pos).unwrap_or_default())?;
            edus.push(tokens);
            prev_roles = roles;
            prev_heads = heads;
        }

        let mut sequences = Vec::new();
        let mut iter = edus.into_iter().peekable();
        while iter.peek().is_some() {
            let k = b.rng.gen_range(1..=spec.max_sentence_edus);
            let mut tokens: Vec<CorpusToken> = iter.by_ref().take(k).flatten().collect();
            for (i, t) in tokens.iter_mut().enumerate() {
                t.token.index = i;
            }
            sequences.push(Sequence { tokens });
        }
        let id = format!("synth-{:04}", d + 1);
        let meta = BTreeMap::from([("seed".to_string(), spec.seed.to_string())]);
        documents.push(SyntheticDocument {
            document: Document { id: Some(id), meta, sequences },
            tree,
            planted,
        });
    }
    Ok(SyntheticCorpus { documents, lexicon })
}
