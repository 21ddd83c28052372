//! Pipeline configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::TreeParams;
use crate::rstree::LinkageMethod;
use crate::segmentation::GrammarRuleTable;
use crate::semrules::{Lexicon, SimilarityConfig};
use crate::types::TagAlphabet;

/// Resource files; unset entries fall back to the built-in tables.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub tags: Option<PathBuf>,
    pub grammar: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeSettings {
    pub min_leaf: usize,
    pub prune: bool,
    pub confidence: f64,
}

impl Default for TreeSettings {
    fn default() -> Self {
        TreeSettings { min_leaf: 1, prune: true, confidence: 0.25 }
    }
}

impl TreeSettings {
    pub fn params(&self) -> TreeParams {
        TreeParams {
            min_leaf: self.min_leaf,
            confidence: self.prune.then_some(self.confidence),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Fraction of documents used for training.
    pub split: f64,
    pub max_distance: usize,
    pub method: LinkageMethod,
    pub adjacency: bool,
    /// Phrase model over `TAG:surface` symbols instead of tags.
    pub lexical: bool,
    /// Additive smoothing of the supervised HMM counts.
    pub smoothing: f64,
    pub paths: Paths,
    pub tree: TreeSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 424,
            split: 424.0 / 624.0,
            max_distance: 4,
            method: LinkageMethod::SingleLinkage,
            adjacency: true,
            lexical: false,
            smoothing: 0.0,
            paths: Paths::default(),
            tree: TreeSettings::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("pipeline config: {e}")))
    }

    /// Reads and validates a config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.paths.tags, &mut cfg.paths.grammar, &mut cfg.paths.lexicon].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.similarity().validate()?;
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::Config(format!("split {} is outside (0, 1)", self.split)));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(Error::Config("smoothing must be a non-negative number".into()));
        }
        if self.tree.min_leaf == 0 || !(self.tree.confidence > 0.0 && self.tree.confidence < 1.0) {
            return Err(Error::Config("tree needs min_leaf ≥ 1 and confidence in (0, 1)".into()));
        }
        for p in [&self.paths.tags, &self.paths.grammar, &self.paths.lexicon].into_iter().flatten() {
            if !p.is_file() {
                return Err(Error::Config(format!("referenced file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn similarity(&self) -> SimilarityConfig {
        SimilarityConfig { max_distance: self.max_distance }
    }

    pub fn alphabet(&self) -> Result<TagAlphabet> {
        self.paths.tags.as_deref().map_or_else(|| Ok(TagAlphabet::default()), TagAlphabet::load)
    }

    pub fn grammar(&self) -> Result<GrammarRuleTable> {
        self.paths.grammar.as_deref().map_or_else(|| Ok(GrammarRuleTable::default()), GrammarRuleTable::load)
    }

    pub fn lexicon(&self) -> Result<Lexicon> {
        self.paths.lexicon.as_deref().map_or_else(|| Ok(Lexicon::default()), Lexicon::load)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_checks() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let cfg = PipelineConfig::from_toml("method = \"minimum-variance\"\nmax_distance = 3\n").unwrap();
        assert_eq!((cfg.method, cfg.max_distance), (LinkageMethod::MinimumVariance, 3));
        assert!(PipelineConfig::from_toml("method = \"centroid\"").is_err());
        assert!(PipelineConfig::from_toml("bogus = 1").is_err());
        let bad = PipelineConfig { split: 1.0, ..PipelineConfig::default() };
        assert!(bad.validate().is_err());
        let bad = PipelineConfig { max_distance: 0, ..PipelineConfig::default() };
        assert!(bad.validate().is_err());
        let mut missing = PipelineConfig::default();
        missing.paths.lexicon = Some("/nonexistent/lexicon.tsv".into());
        assert!(missing.validate().is_err());
    }
}
