//! Agglomerative construction of RS trees over EDU distances.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semrules::SimilarityMatrix;
use crate::tree::RSTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LinkageMethod {
    SingleLinkage,
    UnweightedArithmeticAverage,
    NeighborJoining,
    WeightedArithmeticAverage,
    MinimumVariance,
}

impl LinkageMethod {
    pub const ALL: [LinkageMethod; 5] = [
        LinkageMethod::SingleLinkage,
        LinkageMethod::UnweightedArithmeticAverage,
        LinkageMethod::NeighborJoining,
        LinkageMethod::WeightedArithmeticAverage,
        LinkageMethod::MinimumVariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LinkageMethod::SingleLinkage => "single-linkage",
            LinkageMethod::UnweightedArithmeticAverage => "unweighted-average",
            LinkageMethod::NeighborJoining => "neighbor-joining",
            LinkageMethod::WeightedArithmeticAverage => "weighted-average",
            LinkageMethod::MinimumVariance => "minimum-variance",
        }
    }
}

impl fmt::Display for LinkageMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkageMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LinkageMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownLabel {
                kind: "linkage method",
                value: s.to_string(),
            })
    }
}

impl TryFrom<String> for LinkageMethod {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LinkageMethod> for String {
    fn from(m: LinkageMethod) -> String {
        m.name().to_string()
    }
}

/// `d = 1 − s/s_max`; all ones when the matrix is zero. Diagonal is zero.
pub fn to_distance(s: &SimilarityMatrix) -> Vec<Vec<f64>> {
    let n = s.len();
    let max = s.values.iter().flatten().copied().fold(0.0, f64::max);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else if max > 0.0 {
                        1.0 - s.get(i, j) / max
                    } else {
                        1.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Merge-history weight of every member: `2^-depth` in the cluster tree.
fn depth_weights(t: &RSTree, w: f64, out: &mut Vec<(usize, f64)>) {
    match (t.left(), t.right()) {
        (Some(l), Some(r)) => {
            depth_weights(l, w / 2.0, out);
            depth_weights(r, w / 2.0, out);
        }
        _ => out.push((t.first(), w)),
    }
}

fn within(t: &RSTree, d: &[Vec<f64>]) -> f64 {
    let m: Vec<usize> = t.status.iter().copied().collect();
    let mut s = 0.0;
    for (k, &i) in m.iter().enumerate() {
        for &j in &m[k + 1..] {
            s += d[i][j] * d[i][j];
        }
    }
    s
}

fn nj(a: &RSTree, b: &RSTree, d: &[Vec<f64>]) -> f64 {
    if let (Some(l), Some(r)) = (a.left(), a.right()) {
        return (nj(l, b, d) + nj(r, b, d) - nj(l, r, d)) / 2.0;
    }
    if let (Some(l), Some(r)) = (b.left(), b.right()) {
        return (nj(a, l, d) + nj(a, r, d) - nj(l, r, d)) / 2.0;
    }
    d[a.first()][b.first()]
}

/// Distance between two clusters given as trees over matrix indices.
/// The cluster trees carry the merge history used by the weighted and
/// neighbor-joining definitions.
pub fn linkage_distance(a: &RSTree, b: &RSTree, method: LinkageMethod, d: &[Vec<f64>]) -> Result<f64> {
    if !a.status.is_disjoint(&b.status) {
        return Err(Error::invalid("linkage between overlapping clusters"));
    }
    if a.status.iter().chain(&b.status).any(|&i| i >= d.len()) {
        return Err(Error::invalid("cluster member outside the distance matrix"));
    }
    let pairs = || a.status.iter().flat_map(|&i| b.status.iter().map(move |&j| d[i][j]));
    let n = (a.status.len() * b.status.len()) as f64;
    Ok(match method {
        LinkageMethod::SingleLinkage => pairs().fold(f64::INFINITY, f64::min),
        LinkageMethod::UnweightedArithmeticAverage => pairs().sum::<f64>() / n,
        LinkageMethod::WeightedArithmeticAverage => {
            let (mut wa, mut wb) = (Vec::new(), Vec::new());
            depth_weights(a, 1.0, &mut wa);
            depth_weights(b, 1.0, &mut wb);
            wa.iter()
                .flat_map(|&(i, x)| wb.iter().map(move |&(j, y)| x * y * d[i][j]))
                .sum()
        }
        LinkageMethod::MinimumVariance => {
            let (na, nb) = (a.status.len() as f64, b.status.len() as f64);
            let cross: f64 = pairs().map(|x| x * x).sum();
            let (wa, wb) = (within(a, d), within(b, d));
            let delta = (wa + wb + cross) / (na + nb) - wa / na - wb / nb;
            (2.0 * delta).max(0.0).sqrt()
        }
        LinkageMethod::NeighborJoining => nj(a, b, d),
    })
}

/// Criteria this close count as tied; neighbor joining ties exactly on
/// three clusters, up to rounding.
const TIE_TOLERANCE: f64 = 1e-12;

/// One agglomeration step.
#[derive(Clone, Debug, PartialEq)]
pub struct Merge {
    pub left: BTreeSet<usize>,
    pub right: BTreeSet<usize>,
    /// Linkage distance between the merged clusters.
    pub distance: f64,
}

struct Active {
    tree: RSTree,
    /// Row in the working distance table.
    slot: usize,
}

/// Lance–Williams update for the cluster formed from `a` and `b`, against
/// `c`. Minimum variance works on squared distances.
fn update(method: LinkageMethod, dac: f64, dbc: f64, dab: f64, na: f64, nb: f64, nc: f64) -> f64 {
    match method {
        LinkageMethod::SingleLinkage => dac.min(dbc),
        LinkageMethod::UnweightedArithmeticAverage => (na * dac + nb * dbc) / (na + nb),
        LinkageMethod::WeightedArithmeticAverage => (dac + dbc) / 2.0,
        LinkageMethod::MinimumVariance => ((na + nc) * dac + (nb + nc) * dbc - nc * dab) / (na + nb + nc),
        LinkageMethod::NeighborJoining => (dac + dbc - dab) / 2.0,
    }
}

/// Agglomerates until one cluster remains; leaves are labeled with
/// `positions[i]` for matrix row `i`. Returns the tree and the merge trace.
pub fn build_tree_traced(
    positions: &[usize],
    d: &[Vec<f64>],
    method: LinkageMethod,
    adjacency: bool,
) -> Result<(RSTree, Vec<Merge>)> {
    let n = positions.len();
    if n == 0 {
        return Err(Error::invalid("no EDUs to cluster"));
    }
    if d.len() != n || d.iter().any(|r| r.len() != n) {
        return Err(Error::invalid(format!("distance matrix is not {n}x{n}")));
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("EDU positions must be strictly increasing"));
    }
    let squared = method == LinkageMethod::MinimumVariance;
    let mut table: Vec<Vec<f64>> = d
        .iter()
        .map(|r| r.iter().map(|&x| if squared { x * x } else { x }).collect())
        .collect();
    let mut active: Vec<Active> = (0..n).map(|i| Active { tree: RSTree::leaf(i), slot: i }).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    while active.len() > 1 {
        let m = active.len();
        let row_sums: Vec<f64> = (0..m)
            .map(|x| (0..m).filter(|&y| y != x).map(|y| table[active[x].slot][active[y].slot]).sum())
            .collect();
        let mut best: Option<(f64, usize, usize, usize)> = None;
        for x in 0..m {
            let ys: Vec<usize> = if adjacency { (x + 1..m.min(x + 2)).collect() } else { (x + 1..m).collect() };
            for y in ys {
                let dist = table[active[x].slot][active[y].slot];
                let crit = if method == LinkageMethod::NeighborJoining {
                    (m as f64 - 2.0) * dist - row_sums[x] - row_sums[y]
                } else {
                    dist
                };
                let size = active[x].tree.leaf_count() + active[y].tree.leaf_count();
                let better = match best {
                    None => true,
                    Some((c, bx, _, bs)) => {
                        let tol = TIE_TOLERANCE * c.abs().max(1.0);
                        crit < c - tol || (crit <= c + tol && (x < bx || (x == bx && size < bs)))
                    }
                };
                if better {
                    best = Some((crit, x, y, size));
                }
            }
        }
        let (_, x, y, _) = best.expect("at least one admissible pair");
        let (sa, sb) = (active[x].slot, active[y].slot);
        let dab = table[sa][sb];
        let (na, nb) = (active[x].tree.leaf_count() as f64, active[y].tree.leaf_count() as f64);
        for (z, other) in active.iter().enumerate() {
            if z == x || z == y {
                continue;
            }
            let sc = other.slot;
            let v = update(method, table[sa][sc], table[sb][sc], dab, na, nb, other.tree.leaf_count() as f64);
            table[sa][sc] = v;
            table[sc][sa] = v;
        }
        let b = active.remove(y);
        let a = active.remove(x);
        merges.push(Merge {
            left: a.tree.status.clone(),
            right: b.tree.status.clone(),
            distance: if squared { dab.max(0.0).sqrt() } else { dab },
        });
        let joined = RSTree::join(a.tree, b.tree)?;
        let at = active.partition_point(|c| c.tree.first() < joined.first());
        active.insert(at, Active { tree: joined, slot: sa });
    }
    let tree = active.pop().expect("one cluster remains").tree;
    let relabel = |i: usize| positions[i];
    let merges = merges
        .into_iter()
        .map(|m| Merge {
            left: m.left.iter().map(|&i| relabel(i)).collect(),
            right: m.right.iter().map(|&i| relabel(i)).collect(),
            distance: m.distance,
        })
        .collect();
    Ok((tree.relabel(&relabel), merges))
}

pub fn build_tree(positions: &[usize], d: &[Vec<f64>], method: LinkageMethod, adjacency: bool) -> Result<RSTree> {
    Ok(build_tree_traced(positions, d, method, adjacency)?.0)
}

/// Recomputes promotion sets bottom-up: the left child's promotion, or the
/// union of both children under a multinuclear relation.
pub fn promote(mut tree: RSTree) -> RSTree {
    fn walk(t: &mut RSTree) {
        let relation = t.relation;
        let promo = match t.children_mut() {
            None => None,
            Some((l, r)) => {
                walk(l);
                walk(r);
                Some(if relation.is_some_and(|x| x.is_multinuclear()) {
                    l.promotion.union(&r.promotion).copied().collect()
                } else {
                    l.promotion.clone()
                })
            }
        };
        t.promotion = promo.unwrap_or_else(|| t.status.clone());
    }
    walk(&mut tree);
    tree
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::DiscourseRelation;

    fn matrix(n: usize, f: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { f(i.min(j), i.max(j)) }).collect())
            .collect()
    }

    #[test]
    fn method_names_round_trip() {
        for m in LinkageMethod::ALL {
            assert_eq!(m.name().parse::<LinkageMethod>().unwrap(), m);
        }
        assert!("complete".parse::<LinkageMethod>().is_err());
    }

    #[test]
    fn distance_from_similarity() {
        let s = SimilarityMatrix { values: vec![vec![0.0, 2.0], vec![2.0, 0.0]] };
        assert_eq!(to_distance(&s)[0][1], 0.0);
        let z = SimilarityMatrix { values: vec![vec![0.0; 3]; 3] };
        assert!(to_distance(&z).iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, &x)| x == if i == j { 0.0 } else { 1.0 })));
    }

    #[test]
    fn hand_linkages() {
        let d = matrix(3, |i, j| match (i, j) {
            (0, 2) => 0.2,
            (1, 2) => 0.6,
            _ => 0.5,
        });
        let a = RSTree::join(RSTree::leaf(0), RSTree::leaf(1)).unwrap();
        let b = RSTree::leaf(2);
        assert_eq!(linkage_distance(&a, &b, LinkageMethod::SingleLinkage, &d).unwrap(), 0.2);
        assert!((linkage_distance(&a, &b, LinkageMethod::UnweightedArithmeticAverage, &d).unwrap() - 0.4).abs() < 1e-15);
        for m in LinkageMethod::ALL {
            let x = linkage_distance(&RSTree::leaf(0), &RSTree::leaf(1), m, &d).unwrap();
            assert!((x - 0.5).abs() < 1e-15, "{m}");
        }
        assert!(linkage_distance(&a, &a, LinkageMethod::SingleLinkage, &d).is_err());
    }

    #[test]
    fn two_leaves_make_one_node() {
        let t = build_tree(&[1, 2], &matrix(2, |_, _| 0.3), LinkageMethod::SingleLinkage, true).unwrap();
        assert_eq!(t.internal_count(), 1);
        assert_eq!(t.status, BTreeSet::from([1, 2]));
    }

    #[test]
    fn incremental_update_matches_direct_linkage() {
        let d = matrix(6, |i, j| ((i * 7 + j * 3) % 5) as f64 / 5.0 + 0.1);
        for m in LinkageMethod::ALL {
            for adjacency in [true, false] {
                let (_, merges) = build_tree_traced(&[0, 1, 2, 3, 4, 5], &d, m, adjacency).unwrap();
                // Rebuild the clusters and compare each recorded distance.
                let mut clusters: Vec<RSTree> = (0..6).map(RSTree::leaf).collect();
                for mg in merges {
                    let ia = clusters.iter().position(|c| c.status == mg.left).unwrap();
                    let a = clusters.remove(ia);
                    let ib = clusters.iter().position(|c| c.status == mg.right).unwrap();
                    let b = clusters.remove(ib);
                    let direct = linkage_distance(&a, &b, m, &d).unwrap();
                    assert!((direct - mg.distance).abs() < 1e-12, "{m}: {direct} vs {}", mg.distance);
                    clusters.push(RSTree::join(a, b).unwrap());
                }
            }
        }
    }

    #[test]
    fn promotion_policy() {
        let mut t = RSTree::join(RSTree::leaf(1), RSTree::leaf(2)).unwrap();
        assert_eq!(promote(t.clone()).promotion, BTreeSet::from([1]));
        t.relation = Some(DiscourseRelation::Contrast);
        assert_eq!(promote(t).promotion, BTreeSet::from([1, 2]));
        assert_eq!(promote(RSTree::leaf(4)).promotion, BTreeSet::from([4]));
    }
}
