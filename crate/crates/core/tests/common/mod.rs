#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::Rng;
use rhetoric::corpus::{parse_corpus, Document};
use rhetoric::hmm::HmmModel;
use rhetoric::tree::{load_tree_file, DocTree, RSTree};
use rhetoric::types::{Edu, EduRole, EduToken, PhraseLabel, TagAlphabet, TaggedToken};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fixtures").join(name)
}

pub fn fixture_corpus(name: &str) -> Vec<Document> {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    parse_corpus(&text, &TagAlphabet::default()).unwrap()
}

pub fn fixture_trees(name: &str) -> Vec<DocTree> {
    load_tree_file(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

pub fn edu(position: usize, spec: &[(&str, &str, PhraseLabel, EduRole)]) -> Edu {
    let a = TagAlphabet::default();
    let tokens = spec
        .iter()
        .enumerate()
        .map(|(i, &(w, tag, phrase, role))| EduToken {
            token: TaggedToken { surface: w.into(), tag: a.tag(tag).unwrap(), index: i },
            phrase,
            role,
        })
        .collect();
    Edu::from_tokens(position, tokens)
}

/// Three EDUs: a full clause, one with its subject left out after a
/// marker, and one whose subject repeats the first object.
pub fn villagers() -> [Edu; 3] {
    use EduRole::*;
    use PhraseLabel::*;
    [
        edu(1, &[("ชาวบ้าน", "NCMN", Head, Subject), ("ประกอบ", "VACT", Nucleus, TransitiveVerb), ("อุตสาหกรรมในครอบครัว", "NCMN", Head, Object)]),
        edu(2, &[("และ", "CONJ", PhraseLabel::Marker, EduRole::Marker), ("หวงแหวน", "VACT", Nucleus, TransitiveVerb), ("สมบัติของชาติ", "NCMN", Head, Object)]),
        edu(3, &[("อุตสาหกรรมในครอบครัว", "NCMN", Head, Subject), ("จึงเป็น", "VSTA", Nucleus, TransitiveVerb), ("สมบัติของชาติ", "NCMN", Head, Object)]),
    ]
}

pub fn stochastic_row(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

pub struct RawModel {
    pub initial: Vec<f64>,
    pub trans: Vec<Vec<f64>>,
    pub emit: Vec<Vec<f64>>,
}

impl RawModel {
    pub fn random(rng: &mut impl Rng, states: usize, symbols: usize) -> RawModel {
        RawModel {
            initial: stochastic_row(rng, states),
            trans: (0..states).map(|_| stochastic_row(rng, states)).collect(),
            emit: (0..states).map(|_| stochastic_row(rng, symbols)).collect(),
        }
    }

    pub fn model(&self) -> HmmModel {
        let states = (0..self.initial.len()).map(|i| format!("q{i}")).collect();
        let symbols = (0..self.emit[0].len()).map(|i| format!("o{i}")).collect();
        HmmModel::new(states, symbols, self.initial.clone(), self.trans.clone(), self.emit.clone()).unwrap()
    }

    pub fn path_probability(&self, path: &[usize], obs: &[usize]) -> f64 {
        let mut p = self.initial[path[0]] * self.emit[path[0]][obs[0]];
        for t in 1..obs.len() {
            p *= self.trans[path[t - 1]][path[t]] * self.emit[path[t]][obs[t]];
        }
        p
    }
}

/// Every sequence of length `len` over `0..base`.
pub fn all_sequences(base: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..base).map(move |x| {
                    let mut t = s.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}

pub fn names(prefix: &str, ix: &[usize]) -> Vec<String> {
    ix.iter().map(|i| format!("{prefix}{i}")).collect()
}

pub fn relative_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Symmetric matrix with a zero diagonal and entries in (0, 1).
pub fn random_distances(rng: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let x = rng.gen_range(0.01..1.0);
            d[i][j] = x;
            d[j][i] = x;
        }
    }
    d
}

pub fn members(t: &RSTree) -> BTreeSet<usize> {
    t.status.clone()
}
pub mod linkage;
