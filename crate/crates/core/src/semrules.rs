//! Absence (Φ), Repetition (я) and Addition (Д) rules between an ordered
//! EDU pair, their feature vectors and scores, and CombSum similarity.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{ConstituentGroup, Edu, EduRole, MarkerSide, PhraseLabel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleKind {
    Absence,
    Repetition,
    Addition,
}

/// Constituent slots referenced by the rule catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Subject,
    Object,
    /// The indirect-object (prepositional) noun phrase.
    Prep,
    Nucleus,
    /// Modifier of the verb nucleus.
    VerbModifier,
    /// Head of a nomen phrase.
    Head,
    /// Modifiers of a nomen head.
    HeadModifier,
}

/// Elements of the 14-element EDU feature vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Subject,
    AbsenceOfSubject,
    Object,
    AbsenceOfObject,
    Preposition,
    AbsenceOfPreposition,
    Nucleus,
    ModifierNucleus,
    Head,
    AbsenceOfHead,
    ModifierHead,
    AbsenceOfModifierHead,
    MarkerBefore,
    MarkerAfter,
}

impl Element {
    pub const ALL: [Element; 14] = [
        Element::Subject,
        Element::AbsenceOfSubject,
        Element::Object,
        Element::AbsenceOfObject,
        Element::Preposition,
        Element::AbsenceOfPreposition,
        Element::Nucleus,
        Element::ModifierNucleus,
        Element::Head,
        Element::AbsenceOfHead,
        Element::ModifierHead,
        Element::AbsenceOfModifierHead,
        Element::MarkerBefore,
        Element::MarkerAfter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Element::Subject => "Subject",
            Element::AbsenceOfSubject => "Absence-of-Subject",
            Element::Object => "Object",
            Element::AbsenceOfObject => "Absence-of-Object",
            Element::Preposition => "Preposition",
            Element::AbsenceOfPreposition => "Absence-of-Preposition",
            Element::Nucleus => "Nucleus",
            Element::ModifierNucleus => "Modifier-Nucleus",
            Element::Head => "Head",
            Element::AbsenceOfHead => "Absence-of-Head",
            Element::ModifierHead => "Modifier-Head",
            Element::AbsenceOfModifierHead => "Absence-of-Modifier-Head",
            Element::MarkerBefore => "Marker-Before",
            Element::MarkerAfter => "Marker-After",
        }
    }
}

impl Slot {
    pub fn element(self) -> Element {
        slot_el(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector(pub [f64; 14]);

impl Default for FeatureVector {
    fn default() -> Self {
        FeatureVector([0.0; 14])
    }
}

impl FeatureVector {
    pub fn get(&self, e: Element) -> f64 {
        self.0[e as usize]
    }

    pub fn set(&mut self, e: Element, v: f64) {
        self.0[e as usize] = v;
    }

    pub fn magnitude(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Catalog entry. `cat`/`ana` list the vector elements the rule fills.
#[derive(Debug)]
pub struct RuleInfo {
    pub kind: RuleKind,
    pub name: &'static str,
    pub cat: &'static [Element],
    pub ana: &'static [Element],
    test: Test,
}

#[derive(Debug)]
enum Test {
    /// Every pair repeats; no `without` pair repeats; `bare` nomen groups.
    Repeat {
        pairs: &'static [(Slot, Slot)],
        without: &'static [(Slot, Slot)],
        bare: bool,
    },
    Absent { cat: Slot, ana: Slot },
    AbsentHead { modified: bool },
    AbsentHeadModifier,
    Marker(MarkerSide),
    KeyPhrase(MarkerSide),
}

use Element as E;
use Slot::*;

macro_rules! rep {
    ($name:literal, [$(($a:ident, $b:ident)),+], without [$(($c:ident, $d:ident)),*], $bare:literal) => {
        RuleInfo {
            kind: RuleKind::Repetition,
            name: $name,
            cat: &[$(slot_el($a)),+],
            ana: &[$(slot_el($b)),+],
            test: Test::Repeat { pairs: &[$(($a, $b)),+], without: &[$(($c, $d)),*], bare: $bare },
        }
    };
}

macro_rules! abs {
    ($name:literal, $a:ident, $b:ident) => {
        RuleInfo {
            kind: RuleKind::Absence,
            name: $name,
            cat: &[slot_el($a)],
            ana: &[slot_abs($b)],
            test: Test::Absent { cat: $a, ana: $b },
        }
    };
}

const fn slot_el(s: Slot) -> Element {
    match s {
        Subject => E::Subject,
        Object => E::Object,
        Prep => E::Preposition,
        Nucleus => E::Nucleus,
        VerbModifier => E::ModifierNucleus,
        Head => E::Head,
        HeadModifier => E::ModifierHead,
    }
}

const fn slot_abs(s: Slot) -> Element {
    match s {
        Subject => E::AbsenceOfSubject,
        Object => E::AbsenceOfObject,
        Prep => E::AbsenceOfPreposition,
        Head => E::AbsenceOfHead,
        _ => E::AbsenceOfModifierHead,
    }
}

/// The 19 repetition, 11 absence and 4 addition rules.
pub static CATALOG: [RuleInfo; 34] = [
    rep!("я(S,S)", [(Subject, Subject)], without [], false),
    rep!("я(O,S)", [(Object, Subject)], without [], false),
    rep!("я(S,O)", [(Subject, Object)], without [], false),
    rep!("я(O,O)", [(Object, Object)], without [], false),
    rep!("я(S,Prep)", [(Subject, Prep)], without [], false),
    rep!("я(O,Prep)", [(Object, Prep)], without [], false),
    rep!("я(Prep,S)", [(Prep, Subject)], without [], false),
    rep!("я(Prep,O)", [(Prep, Object)], without [], false),
    rep!("я((S,Prep),(S,Prep))", [(Subject, Subject), (Prep, Prep)], without [], false),
    rep!("я((O,Prep),(S,Prep))", [(Object, Subject), (Prep, Prep)], without [], false),
    rep!("я((Prep,Prep),(S,Prep))", [(Prep, Subject), (Prep, Prep)], without [], false),
    rep!("я((S,Prep),(O,Prep))", [(Subject, Object), (Prep, Prep)], without [], false),
    rep!("я((O,Prep),(O,Prep))", [(Object, Object), (Prep, Prep)], without [], false),
    rep!("я((Prep,Prep),(O,Prep))", [(Prep, Object), (Prep, Prep)], without [], false),
    rep!("я(OnlyH,OnlyH)", [(Head, Head)], without [], true),
    rep!("я(H,M)", [(Head, HeadModifier)], without [], false),
    rep!("я(OnlyM,OnlyNuc)", [(VerbModifier, Nucleus)], without [], false),
    rep!("я(OnlyM,OnlyM)", [(VerbModifier, VerbModifier)], without [(Nucleus, Nucleus)], false),
    rep!("я((Nuc,M),(Nuc,M))", [(Nucleus, Nucleus), (VerbModifier, VerbModifier)], without [], false),
    abs!("Φ(S,S)", Subject, Subject),
    abs!("Φ(O,S)", Object, Subject),
    abs!("Φ(S,O)", Subject, Object),
    abs!("Φ(O,O)", Object, Object),
    RuleInfo {
        kind: RuleKind::Absence,
        name: "Φ(OnlyH,H)",
        cat: &[E::Head],
        ana: &[E::AbsenceOfHead],
        test: Test::AbsentHead { modified: false },
    },
    RuleInfo {
        kind: RuleKind::Absence,
        name: "Φ((H,M),H)",
        cat: &[E::Head, E::ModifierHead],
        ana: &[E::AbsenceOfHead],
        test: Test::AbsentHead { modified: true },
    },
    RuleInfo {
        kind: RuleKind::Absence,
        name: "Φ((H,M),M)",
        cat: &[E::Head, E::ModifierHead],
        ana: &[E::AbsenceOfModifierHead],
        test: Test::AbsentHeadModifier,
    },
    abs!("Φ(S,Prep)", Subject, Prep),
    abs!("Φ(O,Prep)", Object, Prep),
    abs!("Φ(Prep,S)", Prep, Subject),
    abs!("Φ(Prep,O)", Prep, Object),
    RuleInfo {
        kind: RuleKind::Addition,
        name: "Д(Marker,After)",
        cat: &[E::MarkerAfter],
        ana: &[E::MarkerBefore],
        test: Test::Marker(MarkerSide::After),
    },
    RuleInfo {
        kind: RuleKind::Addition,
        name: "Д(Marker,Before)",
        cat: &[E::MarkerAfter],
        ana: &[E::MarkerBefore],
        test: Test::Marker(MarkerSide::Before),
    },
    RuleInfo {
        kind: RuleKind::Addition,
        name: "Д(KeyPhrase,After)",
        cat: &[E::MarkerAfter],
        ana: &[E::MarkerBefore],
        test: Test::KeyPhrase(MarkerSide::After),
    },
    RuleInfo {
        kind: RuleKind::Addition,
        name: "Д(KeyPhrase,Before)",
        cat: &[E::MarkerAfter],
        ana: &[E::MarkerBefore],
        test: Test::KeyPhrase(MarkerSide::Before),
    },
];

/// A rule from [`CATALOG`], identified by index.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SemanticRule(usize);

impl SemanticRule {
    pub fn all() -> impl Iterator<Item = SemanticRule> {
        (0..CATALOG.len()).map(SemanticRule)
    }

    pub fn by_name(name: &str) -> Option<SemanticRule> {
        CATALOG.iter().position(|r| r.name == name).map(SemanticRule)
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn info(self) -> &'static RuleInfo {
        &CATALOG[self.0]
    }

    pub fn kind(self) -> RuleKind {
        self.info().kind
    }

    pub fn name(self) -> &'static str {
        self.info().name
    }
}

impl fmt::Debug for SemanticRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for SemanticRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A matched rule with the words or marker that triggered it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleMatch {
    pub rule: SemanticRule,
    /// Shared words for repetition, the marker or key phrase for addition.
    pub binding: Vec<String>,
}

/// Discourse markers and key phrases recognized by the addition rules.
/// An empty marker list accepts every token labeled as a marker that is
/// not a key phrase.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexicon {
    pub markers: BTreeSet<String>,
    pub key_phrases: BTreeSet<String>,
}

impl Lexicon {
    /// Lines `marker<TAB>word` or `key<TAB>phrase`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lex = Lexicon::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('\t') {
                Some(("marker", w)) if !w.trim().is_empty() => {
                    lex.markers.insert(w.trim().to_string());
                }
                Some(("key", w)) if !w.trim().is_empty() => {
                    lex.key_phrases.insert(w.trim().to_string());
                }
                _ => return Err(Error::parse(n + 1, "expected `marker<TAB>word` or `key<TAB>phrase`")),
            }
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading lexicon {}", path.display()), e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in &self.markers {
            out.push_str(&format!("marker\t{m}\n"));
        }
        for k in &self.key_phrases {
            out.push_str(&format!("key\t{k}\n"));
        }
        out
    }

    pub fn is_marker(&self, word: &str) -> bool {
        !self.key_phrases.contains(word) && (self.markers.is_empty() || self.markers.contains(word))
    }
}

fn groups(edu: &Edu, role: EduRole) -> impl Iterator<Item = &ConstituentGroup> {
    edu.groups.iter().filter(move |g| g.role == role)
}

fn has(edu: &Edu, role: EduRole) -> bool {
    edu.groups.iter().any(|g| g.role == role)
}

/// Content words filling a slot.
pub fn slot_words(edu: &Edu, slot: Slot) -> Vec<&str> {
    let role_words = |role| {
        groups(edu, role)
            .flat_map(|g| &g.tokens)
            .filter(|t| !t.phrase.is_auxiliary())
            .map(|t| t.token.surface.as_str())
            .collect()
    };
    let labeled = |verb: bool, pred: &dyn Fn(PhraseLabel) -> bool| {
        edu.groups
            .iter()
            .filter(|g| if verb { g.role.is_verb() } else { g.role == EduRole::Nomen })
            .flat_map(|g| &g.tokens)
            .filter(|t| pred(t.phrase))
            .map(|t| t.token.surface.as_str())
            .collect()
    };
    match slot {
        Subject => role_words(EduRole::Subject),
        Object => role_words(EduRole::Object),
        Prep => role_words(EduRole::IndirectObject),
        Nucleus => labeled(true, &|p| p == PhraseLabel::Nucleus),
        VerbModifier => labeled(true, &|p| p == PhraseLabel::Modifier),
        Head => labeled(false, &|p| p == PhraseLabel::Head),
        HeadModifier => labeled(false, &PhraseLabel::is_noun_modifier),
    }
}

fn shared(cat: &Edu, a: Slot, ana: &Edu, b: Slot) -> Vec<String> {
    let theirs: BTreeSet<&str> = slot_words(ana, b).into_iter().collect();
    let mut out: Vec<String> = slot_words(cat, a)
        .into_iter()
        .filter(|w| theirs.contains(w))
        .map(str::to_string)
        .collect();
    out.dedup();
    out
}

fn slot_role(s: Slot) -> EduRole {
    match s {
        Subject => EduRole::Subject,
        Object => EduRole::Object,
        Prep => EduRole::IndirectObject,
        _ => EduRole::Nomen,
    }
}

/// Whether the anaphoric EDU's verb licenses the slot.
fn licensed(ana: &Edu, slot: Slot) -> bool {
    let Some(v) = ana.verb_group() else { return false };
    match slot {
        Subject => true,
        Object => matches!(v.role, EduRole::TransitiveVerb | EduRole::DitransitiveVerb),
        Prep => v.role == EduRole::DitransitiveVerb,
        _ => false,
    }
}

/// Antecedent preference for each missing slot.
fn antecedents(missing: Slot) -> &'static [Slot] {
    match missing {
        Subject => &[Subject, Object, Prep],
        Object => &[Object, Subject, Prep],
        Prep => &[Subject, Object],
        _ => &[],
    }
}

fn has_noun_phrase(edu: &Edu) -> bool {
    edu.groups.iter().any(|g| g.role.is_noun())
}

fn first_content(edu: &Edu) -> Option<&str> {
    edu.content_words().first().copied()
}

fn last_content(edu: &Edu) -> Option<&str> {
    edu.content_words().last().copied()
}

fn marker_of<'a>(edu: &'a Edu, side: MarkerSide, lexicon: &Lexicon) -> Option<&'a str> {
    edu.marker(side).filter(|m| lexicon.is_marker(m))
}

/// A key phrase in the marker slot or at the content edge facing the other EDU.
fn key_phrase<'a>(cat: &'a Edu, ana: &'a Edu, side: MarkerSide, lexicon: &Lexicon) -> Option<&'a str> {
    let (marker, edge) = match side {
        MarkerSide::After => (cat.marker(side), last_content(cat)),
        MarkerSide::Before => (ana.marker(side), first_content(ana)),
    };
    [marker, edge].into_iter().flatten().find(|w| lexicon.key_phrases.contains(*w))
}

fn test_rule(info: &RuleInfo, cat: &Edu, ana: &Edu, lexicon: &Lexicon) -> Option<Vec<String>> {
    match &info.test {
        Test::Repeat { pairs, without, bare } => {
            if *bare {
                let bare_nomen = |e: &Edu| {
                    has(e, EduRole::Nomen) && slot_words(e, HeadModifier).is_empty()
                };
                if !bare_nomen(cat) || !bare_nomen(ana) {
                    return None;
                }
            }
            let mut words = Vec::new();
            for &(a, b) in pairs.iter() {
                let w = shared(cat, a, ana, b);
                if w.is_empty() {
                    return None;
                }
                words.extend(w);
            }
            if without.iter().any(|&(a, b)| !shared(cat, a, ana, b).is_empty()) {
                return None;
            }
            Some(words)
        }
        Test::Absent { cat: c, ana: a } => {
            if has(ana, slot_role(*a)) || !licensed(ana, *a) {
                return None;
            }
            let antecedent = antecedents(*a).iter().find(|&&s| has(cat, slot_role(s)))?;
            (antecedent == c).then(Vec::new)
        }
        Test::AbsentHead { modified } => {
            if has_noun_phrase(ana) || slot_words(cat, Head).is_empty() {
                return None;
            }
            (slot_words(cat, HeadModifier).is_empty() != *modified).then(Vec::new)
        }
        Test::AbsentHeadModifier => {
            let ok = !slot_words(cat, Head).is_empty()
                && !slot_words(cat, HeadModifier).is_empty()
                && has(ana, EduRole::Nomen)
                && slot_words(ana, HeadModifier).is_empty();
            ok.then(Vec::new)
        }
        Test::Marker(side) => {
            let after = marker_of(cat, MarkerSide::After, lexicon);
            let m = match side {
                MarkerSide::After => after,
                MarkerSide::Before if after.is_none() => marker_of(ana, MarkerSide::Before, lexicon),
                MarkerSide::Before => None,
            }?;
            Some(vec![m.to_string()])
        }
        Test::KeyPhrase(side) => {
            let after = key_phrase(cat, ana, MarkerSide::After, lexicon);
            let k = match side {
                MarkerSide::After => after,
                MarkerSide::Before if after.is_none() => key_phrase(cat, ana, MarkerSide::Before, lexicon),
                MarkerSide::Before => None,
            }?;
            Some(vec![k.to_string()])
        }
    }
}

/// Every catalog rule that holds for the ordered pair, in catalog order.
pub fn match_rules(cat: &Edu, ana: &Edu, lexicon: &Lexicon) -> Vec<RuleMatch> {
    SemanticRule::all()
        .filter_map(|rule| {
            test_rule(rule.info(), cat, ana, lexicon).map(|binding| RuleMatch { rule, binding })
        })
        .collect()
}

/// `N − d` and `N`, so callers can divide once.
fn proximity(cat: &Edu, ana: &Edu, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid("document has no EDUs"));
    }
    let d = cat.position.abs_diff(ana.position);
    Ok((n.saturating_sub(d) as f64, n as f64))
}

fn filled(info: &RuleInfo, value: f64) -> (FeatureVector, FeatureVector) {
    let mut c = FeatureVector::default();
    let mut a = FeatureVector::default();
    info.cat.iter().for_each(|&e| c.set(e, value));
    info.ana.iter().for_each(|&e| a.set(e, value));
    (c, a)
}

fn expect_kind(rule: SemanticRule, kind: RuleKind) -> Result<()> {
    if rule.kind() != kind {
        return Err(Error::invalid(format!("{rule} is not a {kind:?} rule")));
    }
    Ok(())
}

/// Feature vectors for a matched Φ rule: `1 − d/N` in the filled elements.
pub fn absence_feature(cat: &Edu, ana: &Edu, rule: SemanticRule, n: usize) -> Result<(FeatureVector, FeatureVector)> {
    expect_kind(rule, RuleKind::Absence)?;
    let (num, den) = proximity(cat, ana, n)?;
    Ok(filled(rule.info(), num / den))
}

/// Number of content words of `edu` that also occur in `other`, and the
/// content-word total of `edu`.
pub fn repeated_words(edu: &Edu, other: &Edu) -> (usize, usize) {
    let theirs: BTreeSet<&str> = other.content_words().into_iter().collect();
    let words = edu.content_words();
    (words.iter().filter(|w| theirs.contains(*w)).count(), words.len())
}

/// Feature vectors for a matched я rule:
/// `(1 − d/N)·(r_cat/w_cat)·(r_ana/w_ana)`.
pub fn repetition_feature(cat: &Edu, ana: &Edu, rule: SemanticRule, n: usize) -> Result<(FeatureVector, FeatureVector)> {
    expect_kind(rule, RuleKind::Repetition)?;
    let (rc, wc) = repeated_words(cat, ana);
    let (ra, wa) = repeated_words(ana, cat);
    if wc == 0 || wa == 0 {
        return Err(Error::invalid("an EDU without content words cannot repeat"));
    }
    let (num, den) = proximity(cat, ana, n)?;
    let v = (num * (rc * ra) as f64) / (den * (wc * wa) as f64);
    Ok(filled(rule.info(), v))
}

/// Feature vectors for a matched Д rule: the paired marker elements are 1.
pub fn addition_feature(rule: SemanticRule) -> Result<(FeatureVector, FeatureVector)> {
    expect_kind(rule, RuleKind::Addition)?;
    Ok(filled(rule.info(), 1.0))
}

pub fn rule_features(cat: &Edu, ana: &Edu, rule: SemanticRule, n: usize) -> Result<(FeatureVector, FeatureVector)> {
    match rule.kind() {
        RuleKind::Absence => absence_feature(cat, ana, rule, n),
        RuleKind::Repetition => repetition_feature(cat, ana, rule, n),
        RuleKind::Addition => addition_feature(rule),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimilarityConfig {
    /// Pairs at this EDU distance or more score zero.
    pub max_distance: usize,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig { max_distance: 4 }
    }
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_distance == 0 {
            return Err(Error::Config("max distance must be at least 1".into()));
        }
        Ok(())
    }
}

/// Product of magnitudes for Φ/я, sum for Д; zero at distance ≥ MD.
pub fn score_rule(cat: &FeatureVector, ana: &FeatureVector, kind: RuleKind, distance: usize, cfg: &SimilarityConfig) -> f64 {
    if distance >= cfg.max_distance {
        return 0.0;
    }
    match kind {
        RuleKind::Absence | RuleKind::Repetition => cat.magnitude() * ana.magnitude(),
        RuleKind::Addition => cat.magnitude() + ana.magnitude(),
    }
}

/// Raw score of every rule for every ordered pair `i < j` of a document.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleScores {
    pub n: usize,
    /// `scores[i][j][r]` for `i < j`; other cells stay empty.
    pub scores: Vec<Vec<Vec<f64>>>,
}

pub fn rule_scores(edus: &[Edu], lexicon: &Lexicon, cfg: &SimilarityConfig) -> Result<RuleScores> {
    cfg.validate()?;
    let n = edus.len();
    let mut scores = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let (cat, ana) = (&edus[i], &edus[j]);
            let distance = cat.position.abs_diff(ana.position);
            let mut row = vec![0.0; CATALOG.len()];
            if distance < cfg.max_distance {
                for m in match_rules(cat, ana, lexicon) {
                    let (vc, va) = rule_features(cat, ana, m.rule, n)?;
                    row[m.rule.index()] = score_rule(&vc, &va, m.rule.kind(), distance, cfg);
                }
            }
            scores[i][j] = row;
        }
    }
    Ok(RuleScores { n, scores })
}

/// Symmetric similarity matrix with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    /// Tab-separated dump with EDU positions as row and column headers.
    pub fn to_tsv(&self, positions: &[usize]) -> String {
        let mut out = String::from("edu");
        for p in positions {
            out.push_str(&format!("\t{p}"));
        }
        out.push('\n');
        for (i, row) in self.values.iter().enumerate() {
            out.push_str(&positions[i].to_string());
            for v in row {
                out.push_str(&format!("\t{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// CombSum of per-rule min–max normalized scores over the document.
pub fn combine(raw: &RuleScores, edus: &[Edu], cfg: &SimilarityConfig) -> SimilarityMatrix {
    let n = raw.n;
    let mut values = vec![vec![0.0; n]; n];
    for r in 0..CATALOG.len() {
        let cells = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        let (lo, hi) = cells
            .clone()
            .map(|(i, j)| raw.scores[i][j][r])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)));
        if hi <= lo {
            continue;
        }
        for (i, j) in cells {
            values[i][j] += (raw.scores[i][j][r] - lo) / (hi - lo);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if edus[i].position.abs_diff(edus[j].position) >= cfg.max_distance {
                values[i][j] = 0.0;
            }
            values[j][i] = values[i][j];
        }
    }
    SimilarityMatrix { values }
}

pub fn similarity_matrix(edus: &[Edu], lexicon: &Lexicon, cfg: &SimilarityConfig) -> Result<SimilarityMatrix> {
    if edus.len() < 2 {
        return Err(Error::invalid("similarity needs at least two EDUs"));
    }
    let raw = rule_scores(edus, lexicon, cfg)?;
    Ok(combine(&raw, edus, cfg))
}

/// Similarity of the pair at indices `cat < ana` within `edus`.
pub fn similarity(cat: usize, ana: usize, edus: &[Edu], lexicon: &Lexicon, cfg: &SimilarityConfig) -> Result<f64> {
    if cat >= ana || ana >= edus.len() {
        return Err(Error::invalid("similarity needs an ordered pair of document EDUs"));
    }
    Ok(similarity_matrix(edus, lexicon, cfg)?.get(cat, ana))
}
