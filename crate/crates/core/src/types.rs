//! Shared domain vocabulary: POS tags, tokens, constituent labels, EDUs and
//! discourse relations.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ORCHID-style POS categories. CONJ stands in for the ORCHID conjunction
/// tags so that the sample corpora read naturally.
pub const DEFAULT_TAGS: [&str; 44] = [
    "NPRP", "NCNM", "NONM", "NLBL", "NCMN", "NTTL", "PPRS", "PDMN", "PNTR", "PREL", "VACT", "VSTA",
    "VATT", "XVBM", "XVAM", "XVMM", "XVBB", "XVAE", "DDAN", "DDAC", "DDBQ", "DDAQ", "DIAC", "DIBQ",
    "DIAQ", "DCNM", "DONM", "ADVN", "ADVI", "ADVP", "ADVS", "CNIT", "CLTV", "CMTR", "CFQC", "CVBL",
    "CONJ", "RPRE", "INT", "FIXN", "FIXV", "EAFF", "NEG", "PUNC",
];

/// A POS tag code. Only constructed through [`TagAlphabet::tag`], so every
/// value is a member of the alphabet it came from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PosTag(String);

impl PosTag {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The finite set of POS tags accepted in a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagAlphabet {
    tags: BTreeSet<String>,
}

impl Default for TagAlphabet {
    fn default() -> Self {
        TagAlphabet {
            tags: DEFAULT_TAGS.iter().map(|t| t.to_string()).collect(),
        }
    }
}

impl TagAlphabet {
    pub fn new<I, S>(tags: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tags: BTreeSet<String> = tags.into_iter().map(Into::into).collect();
        if tags.is_empty() {
            return Err(Error::Config("empty tag alphabet".into()));
        }
        if let Some(bad) = tags.iter().find(|t| t.is_empty() || t.contains(char::is_whitespace)) {
            return Err(Error::Config(format!("malformed tag `{bad}`")));
        }
        Ok(TagAlphabet { tags })
    }

    /// One tag per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading tag alphabet {}", path.display()), e))?;
        Self::parse(&text)
    }

    pub fn contains(&self, code: &str) -> bool {
        self.tags.contains(code)
    }

    pub fn tag(&self, code: &str) -> Option<PosTag> {
        self.contains(code).then(|| PosTag(code.to_string()))
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tags.iter().map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub surface: String,
    pub tag: PosTag,
    pub index: usize,
}

/// Closed enumerations that round-trip through their display names.
macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident, $kind:literal { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(
                #[serde(rename = $text)]
                $variant,
            )+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(Error::UnknownLabel { kind: $kind, value: s.to_string() }),
                }
            }
        }
    };
}

label_enum! {
    /// Constituent roles inside noun and verb phrases, plus discourse markers
    /// and the two virtual anchor states.
    PhraseLabel, "phrase label" {
        Head => "H",
        IntransitiveModifier => "Mi",
        AdjunctiveModifier => "Ma",
        Quantifier => "Q",
        Determinative => "D",
        Nucleus => "Nuc",
        PreAuxiliary => "Aux1",
        PostAuxiliary => "Aux2",
        Modifier => "M",
        Marker => "Marker",
        Start => "Start",
        End => "End",
    }
}

impl PhraseLabel {
    pub fn kind(self) -> Option<PhraseKind> {
        use PhraseLabel::*;
        match self {
            Head | IntransitiveModifier | AdjunctiveModifier | Quantifier | Determinative => {
                Some(PhraseKind::Np)
            }
            Nucleus | PreAuxiliary | PostAuxiliary | Modifier => Some(PhraseKind::Vp),
            Marker => Some(PhraseKind::Marker),
            Start | End => None,
        }
    }

    pub fn is_virtual(self) -> bool {
        matches!(self, PhraseLabel::Start | PhraseLabel::End)
    }

    /// Noun-phrase modifiers (everything in an NP except the head).
    pub fn is_noun_modifier(self) -> bool {
        use PhraseLabel::*;
        matches!(
            self,
            IntransitiveModifier | AdjunctiveModifier | Quantifier | Determinative
        )
    }

    pub fn is_auxiliary(self) -> bool {
        matches!(self, PhraseLabel::PreAuxiliary | PhraseLabel::PostAuxiliary)
    }
}

label_enum! {
    PhraseKind, "phrase kind" {
        Np => "NP",
        Vp => "VP",
        Marker => "Marker",
    }
}

label_enum! {
    /// Functional role of a constituent inside an EDU.
    EduRole, "EDU role" {
        Subject => "S",
        Object => "O",
        IndirectObject => "I",
        Nomen => "N",
        IntransitiveVerb => "Vi",
        TransitiveVerb => "Vt",
        DitransitiveVerb => "Vtt",
        Marker => "Marker",
    }
}

impl EduRole {
    pub fn is_verb(self) -> bool {
        matches!(
            self,
            EduRole::IntransitiveVerb | EduRole::TransitiveVerb | EduRole::DitransitiveVerb
        )
    }

    pub fn is_noun(self) -> bool {
        matches!(
            self,
            EduRole::Subject | EduRole::Object | EduRole::IndirectObject | EduRole::Nomen
        )
    }
}

/// An EDU role with a segment-initial flag. A new EDU starts at every label
/// whose `begin` flag is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EduLabel {
    pub role: EduRole,
    pub begin: bool,
}

impl EduLabel {
    pub fn new(role: EduRole, begin: bool) -> Self {
        EduLabel { role, begin }
    }

    /// Every (role, flag) combination, begin labels first.
    pub fn all() -> Vec<EduLabel> {
        [true, false]
            .into_iter()
            .flat_map(|b| EduRole::ALL.iter().map(move |&r| EduLabel::new(r, b)))
            .collect()
    }
}

impl fmt::Display for EduLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", if self.begin { "B" } else { "I" }, self.role)
    }
}

impl FromStr for EduLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownLabel {
            kind: "EDU label",
            value: s.to_string(),
        };
        let (flag, role) = s.split_once('-').ok_or_else(bad)?;
        let begin = match flag {
            "B" => true,
            "I" => false,
            _ => return Err(bad()),
        };
        Ok(EduLabel::new(role.parse().map_err(|_| bad())?, begin))
    }
}

label_enum! {
    /// The ten discourse relations.
    DiscourseRelation, "discourse relation" {
        Consent => "consent",
        Example => "example",
        Characteristic => "characteristic",
        Summary => "summary",
        Condition => "condition",
        Option => "option",
        Time => "time",
        Reason => "reason",
        Explanation => "explanation",
        Contrast => "contrast",
    }
}

impl DiscourseRelation {
    /// Relations whose children are all nuclei.
    pub fn is_multinuclear(self) -> bool {
        matches!(self, DiscourseRelation::Contrast)
    }
}

label_enum! {
    MarkerSide, "marker side" {
        Before => "Before",
        After => "After",
    }
}

/// A token inside an EDU with its phrase-level and EDU-level labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EduToken {
    pub token: TaggedToken,
    pub phrase: PhraseLabel,
    pub role: EduRole,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstituentGroup {
    pub role: EduRole,
    pub tokens: Vec<EduToken>,
}

impl ConstituentGroup {
    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.token.surface.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marker {
    pub surface: String,
    pub side: MarkerSide,
}

/// A segmented elementary discourse unit.
///
/// `groups` holds the merged content constituents in text order; marker
/// tokens live in `markers`. Together they cover the token span exactly once.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edu {
    pub position: usize,
    pub groups: Vec<ConstituentGroup>,
    pub markers: Vec<Marker>,
    /// Matched arrangement (e.g. `S-Vt-O`), when grouping succeeded.
    pub arrangement: Option<String>,
    /// Grammar rule of the matched arrangement.
    pub rule: Option<String>,
    /// Set when no arrangement matched.
    pub ungrouped: bool,
    /// First and one-past-last token index of the span in its sequence.
    pub span: (usize, usize),
}

impl Edu {
    /// Builds an EDU from labeled tokens: markers at the edges become
    /// Before/After markers (inner markers attach Before), and adjacent
    /// same-role tokens merge into one group.
    pub fn from_tokens(position: usize, tokens: Vec<EduToken>) -> Edu {
        let span = match (tokens.first(), tokens.last()) {
            (Some(a), Some(b)) => (a.token.index, b.token.index + 1),
            _ => (0, 0),
        };
        let last_content = tokens.iter().rposition(|t| t.role != EduRole::Marker);
        let mut groups: Vec<ConstituentGroup> = Vec::new();
        let mut markers = Vec::new();
        for (i, tok) in tokens.into_iter().enumerate() {
            if tok.role == EduRole::Marker {
                let side = match last_content {
                    Some(lc) if i > lc => MarkerSide::After,
                    _ => MarkerSide::Before,
                };
                markers.push(Marker {
                    surface: tok.token.surface.clone(),
                    side,
                });
                continue;
            }
            match groups.last_mut() {
                Some(g) if g.role == tok.role => g.tokens.push(tok),
                _ => groups.push(ConstituentGroup {
                    role: tok.role,
                    tokens: vec![tok],
                }),
            }
        }
        Edu {
            position,
            groups,
            markers,
            arrangement: None,
            rule: None,
            ungrouped: false,
            span,
        }
    }

    /// Role sequence of the content groups, joined with `-`.
    pub fn role_pattern(&self) -> String {
        self.groups
            .iter()
            .map(|g| g.role.as_str())
            .collect::<Vec<_>>()
            .join("-")
    }

    pub fn group(&self, role: EduRole) -> Option<&ConstituentGroup> {
        self.groups.iter().find(|g| g.role == role)
    }

    pub fn verb_group(&self) -> Option<&ConstituentGroup> {
        self.groups.iter().find(|g| g.role.is_verb())
    }

    pub fn marker(&self, side: MarkerSide) -> Option<&str> {
        let mut it = self.markers.iter().filter(|m| m.side == side);
        match side {
            MarkerSide::Before => it.next(),
            MarkerSide::After => it.next_back(),
        }
        .map(|m| m.surface.as_str())
    }

    /// All tokens of the EDU in text order, markers included.
    pub fn token_count(&self) -> usize {
        self.span.1 - self.span.0
    }

    /// Content words: everything except markers and auxiliaries.
    pub fn content_words(&self) -> Vec<&str> {
        self.groups
            .iter()
            .flat_map(|g| g.tokens.iter())
            .filter(|t| !t.phrase.is_auxiliary())
            .map(|t| t.token.surface.as_str())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_alphabet_has_named_tags() {
        let a = TagAlphabet::default();
        assert_eq!(a.len(), 44);
        for t in ["NCMN", "VACT", "PPRS", "DDAC", "CNIT", "NEG", "XVMM", "CONJ"] {
            assert!(a.contains(t), "{t}");
        }
        assert!(a.tag("XYZ").is_none());
    }

    #[test]
    fn enumerations_reject_unknown_values() {
        assert!("Hx".parse::<PhraseLabel>().is_err());
        assert!("Vx".parse::<EduRole>().is_err());
        assert!("love".parse::<DiscourseRelation>().is_err());
        assert!("X-S".parse::<EduLabel>().is_err());
        assert_eq!("B-Vtt".parse::<EduLabel>().unwrap(), EduLabel::new(EduRole::DitransitiveVerb, true));
        for r in DiscourseRelation::ALL {
            assert_eq!(r.as_str().parse::<DiscourseRelation>().unwrap(), *r);
        }
    }

    #[test]
    fn edu_from_tokens_splits_markers_and_groups() {
        let a = TagAlphabet::default();
        let mk = |i: usize, s: &str, tag: &str, p: PhraseLabel, r: EduRole| EduToken {
            token: TaggedToken { surface: s.into(), tag: a.tag(tag).unwrap(), index: i },
            phrase: p,
            role: r,
        };
        let edu = Edu::from_tokens(
            2,
            vec![
                mk(4, "and", "CONJ", PhraseLabel::Marker, EduRole::Marker),
                mk(5, "guard", "VACT", PhraseLabel::Nucleus, EduRole::TransitiveVerb),
                mk(6, "wealth", "NCMN", PhraseLabel::Head, EduRole::Object),
                mk(7, "this", "DDAC", PhraseLabel::Determinative, EduRole::Object),
            ],
        );
        assert_eq!(edu.role_pattern(), "Vt-O");
        assert_eq!(edu.marker(MarkerSide::Before), Some("and"));
        assert_eq!(edu.marker(MarkerSide::After), None);
        assert_eq!(edu.span, (4, 8));
        assert_eq!(edu.content_words(), vec!["guard", "wealth", "this"]);
    }
}
