//! POS-tagged tokens to phrase constituents, EDU labels, EDU boundaries and
//! grouped EDUs.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Sequence};
use crate::error::{Error, Result};
use crate::hmm::{estimate_supervised, HmmModel, LabeledSequence};
use crate::model_io::ModelFile;
use crate::types::{
    Edu, EduLabel, EduRole, EduToken, PhraseKind, PhraseLabel, TagAlphabet, TaggedToken,
};

const DEFAULT_GRAMMAR: &str = include_str!("../data/grammar.tsv");

/// One row of the EDU arrangement table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EduArrangement {
    pub roles: Vec<EduRole>,
    pub rule: String,
}

impl EduArrangement {
    pub fn name(&self) -> String {
        join(self.roles.iter().map(|r| r.as_str()))
    }
}

/// EDU, NP and VP arrangement tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrammarRuleTable {
    pub edu: Vec<EduArrangement>,
    pub np: Vec<Vec<PhraseLabel>>,
    pub vp: Vec<Vec<PhraseLabel>>,
}

fn join<'a>(parts: impl Iterator<Item = &'a str>) -> String {
    parts.collect::<Vec<_>>().join("-")
}

fn parse_pattern<T: std::str::FromStr<Err = Error>>(text: &str, line: usize) -> Result<Vec<T>> {
    text.split('-')
        .map(|p| p.trim().parse().map_err(|e: Error| Error::parse(line, e.to_string())))
        .collect()
}

impl Default for GrammarRuleTable {
    fn default() -> Self {
        GrammarRuleTable::parse(DEFAULT_GRAMMAR).expect("bundled grammar table is valid")
    }
}

impl GrammarRuleTable {
    /// Tab-separated rows `edu<TAB>arrangement<TAB>rule`, `np<TAB>pattern` or
    /// `vp<TAB>pattern`; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = GrammarRuleTable {
            edu: Vec::new(),
            np: Vec::new(),
            vp: Vec::new(),
        };
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            match (cols[0], cols.len()) {
                ("edu", 3) => table.edu.push(EduArrangement {
                    roles: parse_pattern(cols[1], line_no)?,
                    rule: cols[2].trim().to_string(),
                }),
                ("np", 2) | ("vp", 2) => {
                    let pattern: Vec<PhraseLabel> = parse_pattern(cols[1], line_no)?;
                    let want = if cols[0] == "np" { PhraseKind::Np } else { PhraseKind::Vp };
                    if pattern.iter().any(|l| l.kind() != Some(want)) {
                        return Err(Error::parse(line_no, format!("`{}` mixes phrase kinds", cols[1])));
                    }
                    if cols[0] == "np" {
                        table.np.push(pattern);
                    } else {
                        table.vp.push(pattern);
                    }
                }
                _ => return Err(Error::parse(line_no, "expected an edu, np or vp row")),
            }
        }
        if table.edu.is_empty() || table.np.is_empty() || table.vp.is_empty() {
            return Err(Error::Config("grammar table needs edu, np and vp rows".into()));
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading grammar table {}", path.display()), e))?;
        Self::parse(&text)
    }

    /// The NP or VP kind whose table contains `pattern`.
    pub fn phrase_kind(&self, pattern: &[PhraseLabel]) -> Option<PhraseKind> {
        if self.np.iter().any(|p| p == pattern) {
            Some(PhraseKind::Np)
        } else if self.vp.iter().any(|p| p == pattern) {
            Some(PhraseKind::Vp)
        } else {
            None
        }
    }

    /// First EDU arrangement row whose role sequence equals `roles`.
    pub fn edu_arrangement(&self, roles: &[EduRole]) -> Option<&EduArrangement> {
        self.edu.iter().find(|a| a.roles == roles)
    }
}

/// A chunk produced by phrase identification.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phrase {
    pub kind: PhraseKind,
    /// Token range `[start, end)` within the sentence.
    pub span: (usize, usize),
    /// Arrangement matched against the phrase tables, e.g. `H-D`.
    pub arrangement: String,
    /// False when no table row matched and the token became a singleton.
    pub matched: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhraseAnalysis {
    pub labels: Vec<PhraseLabel>,
    pub phrases: Vec<Phrase>,
    pub diagnostics: Vec<String>,
}

/// Phrase-model symbol for a token: the POS tag, or `TAG:surface` for a
/// lexicalized model.
pub fn phrase_symbol(token: &TaggedToken, lexical: bool) -> String {
    if lexical {
        format!("{}:{}", token.tag, token.surface)
    } else {
        token.tag.to_string()
    }
}

/// Collapses runs of identical labels. Heads are kept apart, since each
/// head opens its own noun phrase.
fn collapse(labels: &[PhraseLabel]) -> Vec<PhraseLabel> {
    let mut out: Vec<PhraseLabel> = Vec::with_capacity(labels.len());
    for &l in labels {
        if out.last() != Some(&l) || l == PhraseLabel::Head {
            out.push(l);
        }
    }
    out
}

/// Longest-match chunking of a label sequence, left to right.
pub fn chunk_phrases(labels: &[PhraseLabel], rules: &GrammarRuleTable) -> (Vec<Phrase>, Vec<String>) {
    let mut phrases = Vec::new();
    let mut diagnostics = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        if labels[i] == PhraseLabel::Marker {
            phrases.push(Phrase {
                kind: PhraseKind::Marker,
                span: (i, i + 1),
                arrangement: "Marker".into(),
                matched: true,
            });
            i += 1;
            continue;
        }
        let limit = labels[i..]
            .iter()
            .position(|&l| l == PhraseLabel::Marker)
            .map_or(labels.len(), |p| i + p);
        let found = (i + 1..=limit).rev().find_map(|j| {
            let pattern = collapse(&labels[i..j]);
            rules.phrase_kind(&pattern).map(|k| (j, k, pattern))
        });
        match found {
            Some((j, kind, pattern)) => {
                phrases.push(Phrase {
                    kind,
                    span: (i, j),
                    arrangement: join(pattern.iter().map(|l| l.as_str())),
                    matched: true,
                });
                i = j;
            }
            None => {
                let label = labels[i];
                diagnostics.push(format!(
                    "token {i}: label `{label}` starts no phrase arrangement; kept as a singleton"
                ));
                phrases.push(Phrase {
                    kind: label.kind().unwrap_or(PhraseKind::Np),
                    span: (i, i + 1),
                    arrangement: label.to_string(),
                    matched: false,
                });
                i += 1;
            }
        }
    }
    (phrases, diagnostics)
}

fn is_lexical(model: &HmmModel) -> bool {
    model.symbols().iter().any(|s| s.contains(':'))
}

/// Viterbi phrase labels followed by longest-match chunking.
pub fn identify_phrases(
    model: &HmmModel,
    sentence: &[TaggedToken],
    rules: &GrammarRuleTable,
) -> Result<PhraseAnalysis> {
    let lexical = is_lexical(model);
    let obs: Vec<String> = sentence.iter().map(|t| phrase_symbol(t, lexical)).collect();
    let (path, _) = model.viterbi(&obs)?;
    let labels = path
        .iter()
        .map(|s| s.parse::<PhraseLabel>())
        .collect::<Result<Vec<_>>>()?;
    let (phrases, diagnostics) = chunk_phrases(&labels, rules);
    Ok(PhraseAnalysis {
        labels,
        phrases,
        diagnostics,
    })
}

/// EDU-model symbol of a chunk: its kind.
pub fn edu_symbol(kind: PhraseKind) -> String {
    kind.to_string()
}

pub fn phrase_states() -> Vec<String> {
    PhraseLabel::ALL
        .iter()
        .filter(|l| !l.is_virtual())
        .map(|l| l.to_string())
        .collect()
}

pub fn edu_states() -> Vec<String> {
    EduLabel::all().iter().map(|l| l.to_string()).collect()
}

pub fn edu_symbols() -> Vec<String> {
    PhraseKind::ALL.iter().map(|&k| edu_symbol(k)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segmentation {
    pub labels: Vec<EduLabel>,
    pub edus: Vec<Edu>,
}

/// Splits labeled tokens into EDUs at every segment-initial label.
pub fn split_edus(tokens: &[TaggedToken], phrases: &[PhraseLabel], labels: &[EduLabel], first_position: usize) -> Vec<Edu> {
    let mut edus = Vec::new();
    let mut current: Vec<EduToken> = Vec::new();
    for ((tok, &phrase), &label) in tokens.iter().zip(phrases).zip(labels) {
        if label.begin && !current.is_empty() {
            edus.push(Edu::from_tokens(first_position + edus.len(), std::mem::take(&mut current)));
        }
        current.push(EduToken {
            token: tok.clone(),
            phrase,
            role: label.role,
        });
    }
    if !current.is_empty() {
        edus.push(Edu::from_tokens(first_position + edus.len(), current));
    }
    edus
}

/// Viterbi EDU labels over the phrase chunks, expanded to tokens: a
/// chunk's first token takes the chunk label, the rest continue its role.
/// Positions start at `first_position`.
pub fn segment_edus(
    model: &HmmModel,
    sentence: &[TaggedToken],
    phrases: &PhraseAnalysis,
    first_position: usize,
) -> Result<Segmentation> {
    let obs: Vec<String> = phrases.phrases.iter().map(|p| edu_symbol(p.kind)).collect();
    let (path, _) = model.viterbi(&obs)?;
    let mut labels = Vec::with_capacity(sentence.len());
    for (chunk, state) in phrases.phrases.iter().zip(&path) {
        let label: EduLabel = state.parse()?;
        labels.push(label);
        for _ in chunk.span.0 + 1..chunk.span.1 {
            labels.push(EduLabel::new(label.role, false));
        }
    }
    let edus = split_edus(sentence, &phrases.labels, &labels, first_position);
    Ok(Segmentation { labels, edus })
}

/// Probabilities of a term filling O or I of a ditransitive verb.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VttTable {
    entries: BTreeMap<String, BTreeMap<String, VttEntry>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VttEntry {
    pub object: f64,
    pub indirect: f64,
}

/// Value used for pairs the table has never seen.
pub const UNSEEN_VTT: f64 = 0.5;

impl VttTable {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn get(&self, verb: &str, term: &str) -> Option<VttEntry> {
        self.entries.get(verb)?.get(term).copied()
    }

    /// p(term fills `role` | verb), with [`UNSEEN_VTT`] for unseen pairs.
    pub fn probability(&self, verb: &str, term: &str, role: EduRole) -> f64 {
        match (self.get(verb, term), role) {
            (Some(e), EduRole::Object) => e.object,
            (Some(e), EduRole::IndirectObject) => e.indirect,
            _ => UNSEEN_VTT,
        }
    }

    pub fn insert(&mut self, verb: &str, term: &str, entry: VttEntry) {
        self.entries
            .entry(verb.to_string())
            .or_default()
            .insert(term.to_string(), entry);
    }
}

impl ModelFile for VttTable {
    const FORMAT: &'static str = "rst-vtt";
    const VERSION: u32 = 1;

    fn validate(&self) -> Result<()> {
        for (verb, terms) in &self.entries {
            for (term, e) in terms {
                let ok = |p: f64| (0.0..=1.0).contains(&p);
                if !ok(e.object) || !ok(e.indirect) {
                    return Err(Error::InvalidModel(format!(
                        "Vtt probability outside [0,1] for ({verb}, {term})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The nucleus of a verb group, falling back to its first token.
fn verb_word(group: &crate::types::ConstituentGroup) -> &str {
    group
        .tokens
        .iter()
        .find(|t| t.phrase == PhraseLabel::Nucleus)
        .unwrap_or(&group.tokens[0])
        .token
        .surface
        .as_str()
}

/// The head of a noun group, falling back to its first token.
fn head_word(group: &crate::types::ConstituentGroup) -> &str {
    group
        .tokens
        .iter()
        .find(|t| t.phrase == PhraseLabel::Head)
        .unwrap_or(&group.tokens[0])
        .token
        .surface
        .as_str()
}

/// Relative frequencies of O and I fillers per (verb, head term).
pub fn build_vtt_table(edus: &[Edu]) -> VttTable {
    let mut counts: BTreeMap<(String, String), (f64, f64)> = BTreeMap::new();
    for edu in edus {
        let Some(verb) = edu.groups.iter().find(|g| g.role == EduRole::DitransitiveVerb) else {
            continue;
        };
        let verb = verb_word(verb);
        for g in &edu.groups {
            let slot = match g.role {
                EduRole::Object => 0,
                EduRole::IndirectObject => 1,
                _ => continue,
            };
            let c = counts.entry((verb.to_string(), head_word(g).to_string())).or_default();
            if slot == 0 {
                c.0 += 1.0;
            } else {
                c.1 += 1.0;
            }
        }
    }
    let mut table = VttTable::default();
    for ((verb, term), (o, i)) in counts {
        table.insert(&verb, &term, VttEntry { object: o / (o + i), indirect: i / (o + i) });
    }
    table
}

const AMBIGUOUS: [[EduRole; 4]; 2] = [
    [EduRole::Object, EduRole::Subject, EduRole::DitransitiveVerb, EduRole::IndirectObject],
    [EduRole::IndirectObject, EduRole::Subject, EduRole::DitransitiveVerb, EduRole::Object],
];

/// Assigns the best-matching EDU arrangement. The two fronted-object Vtt
/// readings are decided by the Vtt table; ties keep table order.
pub fn group_constituents(mut edu: Edu, rules: &GrammarRuleTable, vtt: &VttTable) -> Edu {
    let roles: Vec<EduRole> = edu.groups.iter().map(|g| g.role).collect();
    let mut chosen = roles.clone();
    if let Some(k) = AMBIGUOUS.iter().position(|a| a[..] == roles[..]) {
        let verb = verb_word(&edu.groups[2]).to_string();
        let first = head_word(&edu.groups[0]).to_string();
        let last = head_word(&edu.groups[3]).to_string();
        let score = |r: &[EduRole; 4]| {
            vtt.probability(&verb, &first, r[0]) * vtt.probability(&verb, &last, r[3])
        };
        let (a, b) = (score(&AMBIGUOUS[0]), score(&AMBIGUOUS[1]));
        let best = if b > a { 1 } else { 0 };
        if best != k {
            chosen = AMBIGUOUS[best].to_vec();
            for (g, &role) in edu.groups.iter_mut().zip(&chosen) {
                g.role = role;
                g.tokens.iter_mut().for_each(|t| t.role = role);
            }
        }
    }
    match rules.edu_arrangement(&chosen) {
        Some(a) => {
            edu.arrangement = Some(a.name());
            edu.rule = Some(a.rule.clone());
            edu.ungrouped = false;
        }
        None => {
            edu.arrangement = None;
            edu.rule = None;
            edu.ungrouped = true;
        }
    }
    edu
}

/// Bracketed group form such as `NP_S-(V,V)_t-(NP,NP,NP)_O`.
pub fn grouped_form(edu: &Edu) -> String {
    let parts: Vec<String> = edu
        .groups
        .iter()
        .map(|g| {
            let (unit, sub) = match g.role {
                EduRole::IntransitiveVerb => ("V", "i"),
                EduRole::TransitiveVerb => ("V", "t"),
                EduRole::DitransitiveVerb => ("V", "tt"),
                r => ("NP", r.as_str()),
            };
            if g.tokens.len() == 1 {
                format!("{unit}_{sub}")
            } else {
                format!("({})_{sub}", vec![unit; g.tokens.len()].join(","))
            }
        })
        .collect();
    parts.join("-")
}

fn missing(what: &str, line: usize) -> Error {
    Error::invalid(format!("token {line} has no gold {what} label"))
}

/// Gold phrase-label sequences, one per sentence.
pub fn phrase_training_data(docs: &[Document], lexical: bool) -> Result<Vec<LabeledSequence>> {
    let mut out = Vec::new();
    for seq in docs.iter().flat_map(|d| &d.sequences) {
        let mut states = Vec::with_capacity(seq.len());
        let mut symbols = Vec::with_capacity(seq.len());
        for t in &seq.tokens {
            let p = t.phrase.ok_or_else(|| missing("phrase", t.token.index))?;
            states.push(p.to_string());
            symbols.push(phrase_symbol(&t.token, lexical));
        }
        out.push(LabeledSequence { states, symbols });
    }
    Ok(out)
}

/// Gold EDU-label sequences over the chunks of the gold phrase labels;
/// each chunk takes the label of its first token.
pub fn edu_training_data(docs: &[Document], rules: &GrammarRuleTable) -> Result<Vec<LabeledSequence>> {
    let mut out = Vec::new();
    for seq in docs.iter().flat_map(|d| &d.sequences) {
        let mut phrases = Vec::with_capacity(seq.len());
        let mut labels = Vec::with_capacity(seq.len());
        for t in &seq.tokens {
            phrases.push(t.phrase.ok_or_else(|| missing("phrase", t.token.index))?);
            labels.push(t.edu_label().ok_or_else(|| missing("EDU", t.token.index))?);
        }
        let (chunks, _) = chunk_phrases(&phrases, rules);
        out.push(LabeledSequence {
            states: chunks.iter().map(|c| labels[c.span.0].to_string()).collect(),
            symbols: chunks.iter().map(|c| edu_symbol(c.kind)).collect(),
        });
    }
    Ok(out)
}

/// Supervised phrase model. Tag symbols span the whole alphabet; lexical
/// symbols span the observed `TAG:surface` pairs.
pub fn train_phrase_hmm(
    docs: &[Document],
    alphabet: &TagAlphabet,
    lexical: bool,
    smoothing: f64,
) -> Result<HmmModel> {
    let data = phrase_training_data(docs, lexical)?;
    let symbols: Vec<String> = if lexical {
        data.iter()
            .flat_map(|s| s.symbols.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    } else {
        alphabet.iter().map(str::to_string).collect()
    };
    estimate_supervised(&phrase_states(), &symbols, &data, smoothing)
}

pub fn train_edu_hmm(docs: &[Document], rules: &GrammarRuleTable, smoothing: f64) -> Result<HmmModel> {
    let data = edu_training_data(docs, rules)?;
    estimate_supervised(&edu_states(), &edu_symbols(), &data, smoothing)
}

/// EDUs read off the gold columns of a sentence.
pub fn gold_edus(seq: &Sequence, first_position: usize) -> Result<Vec<Edu>> {
    let mut phrases = Vec::with_capacity(seq.len());
    let mut labels = Vec::with_capacity(seq.len());
    for t in &seq.tokens {
        phrases.push(t.phrase.ok_or_else(|| missing("phrase", t.token.index))?);
        labels.push(t.edu_label().ok_or_else(|| missing("EDU", t.token.index))?);
    }
    Ok(split_edus(&seq.tagged(), &phrases, &labels, first_position))
}

/// Gold EDUs of a whole document, numbered from 1 and grouped.
pub fn gold_document_edus(doc: &Document, rules: &GrammarRuleTable) -> Result<Vec<Edu>> {
    let mut edus = Vec::new();
    for seq in &doc.sequences {
        for edu in gold_edus(seq, edus.len() + 1)? {
            edus.push(group_constituents(edu, rules, &VttTable::default()));
        }
    }
    Ok(edus)
}
