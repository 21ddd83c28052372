use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rhetoric::rstree::LinkageMethod;
use rhetoric::tree::RSTree;

/// Cluster with its merge history, kept apart from the library tree type.
#[derive(Clone, Debug)]
pub enum Cluster {
    Leaf(usize),
    Join(Box<Cluster>, Box<Cluster>),
}

impl Cluster {
    pub fn points(&self) -> Vec<usize> {
        match self {
            Cluster::Leaf(i) => vec![*i],
            Cluster::Join(a, b) => {
                let mut v = a.points();
                v.extend(b.points());
                v
            }
        }
    }

    pub fn set(&self) -> BTreeSet<usize> {
        self.points().into_iter().collect()
    }

    pub fn first(&self) -> usize {
        *self.points().iter().min().unwrap()
    }

    pub fn to_tree(&self) -> RSTree {
        match self {
            Cluster::Leaf(i) => RSTree::leaf(*i),
            Cluster::Join(a, b) => RSTree::join(a.to_tree(), b.to_tree()).unwrap(),
        }
    }
}

fn within_ess(points: &[usize], d: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for (k, &i) in points.iter().enumerate() {
        for &j in &points[k + 1..] {
            s += d[i][j] * d[i][j];
        }
    }
    s / points.len() as f64
}

/// Inter-cluster distance straight from each method's definition.
pub fn distance(a: &Cluster, b: &Cluster, method: LinkageMethod, d: &[Vec<f64>]) -> f64 {
    let (pa, pb) = (a.points(), b.points());
    match method {
        LinkageMethod::SingleLinkage => {
            let mut best = f64::INFINITY;
            for &i in &pa {
                for &j in &pb {
                    if d[i][j] < best {
                        best = d[i][j];
                    }
                }
            }
            best
        }
        LinkageMethod::UnweightedArithmeticAverage => {
            let mut s = 0.0;
            for &i in &pa {
                for &j in &pb {
                    s += d[i][j];
                }
            }
            s / (pa.len() * pb.len()) as f64
        }
        LinkageMethod::WeightedArithmeticAverage => match (a, b) {
            (Cluster::Join(l, r), _) => (distance(l, b, method, d) + distance(r, b, method, d)) / 2.0,
            (_, Cluster::Join(l, r)) => (distance(a, l, method, d) + distance(a, r, method, d)) / 2.0,
            (Cluster::Leaf(i), Cluster::Leaf(j)) => d[*i][*j],
        },
        LinkageMethod::MinimumVariance => {
            let mut union = pa.clone();
            union.extend(&pb);
            let increase = within_ess(&union, d) - within_ess(&pa, d) - within_ess(&pb, d);
            (2.0 * increase).max(0.0).sqrt()
        }
        LinkageMethod::NeighborJoining => match (a, b) {
            (Cluster::Join(l, r), _) => {
                (distance(l, b, method, d) + distance(r, b, method, d) - distance(l, r, method, d)) / 2.0
            }
            (_, Cluster::Join(l, r)) => {
                (distance(a, l, method, d) + distance(a, r, method, d) - distance(l, r, method, d)) / 2.0
            }
            (Cluster::Leaf(i), Cluster::Leaf(j)) => d[*i][*j],
        },
    }
}

pub struct Step {
    pub left: BTreeSet<usize>,
    pub right: BTreeSet<usize>,
    pub distance: f64,
}

/// Greedy agglomeration that re-evaluates every candidate pair from
/// scratch at each step. Near ties go to the earlier, then smaller, pair.
pub fn agglomerate(n: usize, d: &[Vec<f64>], method: LinkageMethod, adjacency: bool) -> (Cluster, Vec<Step>) {
    let mut active: Vec<Cluster> = (0..n).map(Cluster::Leaf).collect();
    let mut steps = Vec::new();
    while active.len() > 1 {
        active.sort_by_key(Cluster::first);
        let m = active.len();
        let dist = |x: usize, y: usize| distance(&active[x], &active[y], method, d);
        let row: Vec<f64> = (0..m).map(|x| (0..m).filter(|&y| y != x).map(|y| dist(x, y)).sum()).collect();
        let mut best: Option<(f64, usize, usize, usize)> = None;
        for x in 0..m {
            for y in x + 1..m {
                if adjacency && y != x + 1 {
                    continue;
                }
                let crit = if method == LinkageMethod::NeighborJoining {
                    (m as f64 - 2.0) * dist(x, y) - row[x] - row[y]
                } else {
                    dist(x, y)
                };
                let size = active[x].points().len() + active[y].points().len();
                let better = best.is_none_or(|(c, bx, _, bs)| {
                    let tol = 1e-12 * f64::abs(c).max(1.0);
                    crit < c - tol || (crit <= c + tol && (x < bx || (x == bx && size < bs)))
                });
                if better {
                    best = Some((crit, x, y, size));
                }
            }
        }
        let (_, x, y, _) = best.unwrap();
        let distance = dist(x, y);
        let b = active.remove(y);
        let a = active.remove(x);
        steps.push(Step { left: a.set(), right: b.set(), distance });
        active.push(Cluster::Join(Box::new(a), Box::new(b)));
    }
    (active.pop().unwrap(), steps)
}

/// Two disjoint clusters with random merge histories over `0..n`.
pub fn random_pair(rng: &mut impl Rng, n: usize) -> (Cluster, Cluster) {
    let mut pts: Vec<usize> = (0..n).collect();
    pts.shuffle(rng);
    let cut = rng.gen_range(1..n);
    (random_cluster(rng, &pts[..cut]), random_cluster(rng, &pts[cut..]))
}

fn random_cluster(rng: &mut impl Rng, pts: &[usize]) -> Cluster {
    let mut parts: Vec<Cluster> = pts.iter().map(|&i| Cluster::Leaf(i)).collect();
    while parts.len() > 1 {
        let i = rng.gen_range(0..parts.len());
        let a = parts.swap_remove(i);
        let j = rng.gen_range(0..parts.len());
        let b = parts.swap_remove(j);
        parts.push(Cluster::Join(Box::new(a), Box::new(b)));
    }
    parts.pop().unwrap()
}
