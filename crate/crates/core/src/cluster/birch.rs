use serde::{Deserialize, Serialize};

use super::kmeans::lloyd;
use super::{nearest, squared_distance, validate_rows, Algorithm, ClusterModel, ModelState, K};
use crate::{Error, Result};

/// Clustering feature: point count, linear sum and per-dimension squared sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringFeature {
    pub n: u64,
    pub ls: Vec<f64>,
    pub ss: Vec<f64>,
}

impl ClusteringFeature {
    pub fn empty(dim: usize) -> Self {
        ClusteringFeature {
            n: 0,
            ls: vec![0.0; dim],
            ss: vec![0.0; dim],
        }
    }

    pub fn from_point(x: &[f64]) -> Self {
        ClusteringFeature {
            n: 1,
            ls: x.to_vec(),
            ss: x.iter().map(|v| v * v).collect(),
        }
    }

    pub fn from_points(points: &[Vec<f64>]) -> Self {
        let mut cf = ClusteringFeature::empty(points.first().map_or(0, Vec::len));
        for p in points {
            cf.add_point(p);
        }
        cf
    }

    pub fn add_point(&mut self, x: &[f64]) {
        self.n += 1;
        for ((l, s), v) in self.ls.iter_mut().zip(self.ss.iter_mut()).zip(x) {
            *l += v;
            *s += v * v;
        }
    }

    pub fn merge(&mut self, other: &ClusteringFeature) {
        self.n += other.n;
        for (a, b) in self.ls.iter_mut().zip(&other.ls) {
            *a += b;
        }
        for (a, b) in self.ss.iter_mut().zip(&other.ss) {
            *a += b;
        }
    }

    pub fn merged(&self, other: &ClusteringFeature) -> ClusteringFeature {
        let mut m = self.clone();
        m.merge(other);
        m
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.ls.iter().map(|l| l / n).collect()
    }

    /// Root-mean-square distance of members to the centroid.
    pub fn radius(&self) -> f64 {
        let n = self.n as f64;
        self.ls
            .iter()
            .zip(&self.ss)
            .map(|(l, s)| (s / n - (l / n) * (l / n)).max(0.0))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BirchOptions {
    pub branching: usize,
    pub threshold: f64,
}

impl Default for BirchOptions {
    fn default() -> Self {
        BirchOptions {
            branching: 50,
            threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(Vec<ClusteringFeature>),
    Inner(Vec<(ClusteringFeature, usize)>),
}

/// Height-balanced CF tree held in an arena.
#[derive(Debug, Clone)]
pub struct CfTree {
    nodes: Vec<Node>,
    root: usize,
    branching: usize,
    threshold: f64,
}

impl CfTree {
    pub fn new(opts: &BirchOptions) -> Result<Self> {
        if !(opts.threshold > 0.0 && opts.threshold.is_finite()) {
            return Err(Error::config("birch.threshold", "must be positive"));
        }
        if opts.branching < 2 {
            return Err(Error::config("birch.branching", "must be at least 2"));
        }
        Ok(CfTree {
            nodes: vec![Node::Leaf(Vec::new())],
            root: 0,
            branching: opts.branching,
            threshold: opts.threshold,
        })
    }

    pub fn insert(&mut self, x: &[f64]) {
        if let Some((a, b)) = self.insert_at(self.root, x) {
            let root = self.nodes.len();
            self.nodes.push(Node::Inner(vec![a, b]));
            self.root = root;
        }
    }

    /// Inserts below `node`; on overflow returns the two replacement entries.
    fn insert_at(
        &mut self,
        node: usize,
        x: &[f64],
    ) -> Option<((ClusteringFeature, usize), (ClusteringFeature, usize))> {
        let branching = self.branching;
        let threshold = self.threshold;
        match &mut self.nodes[node] {
            Node::Leaf(entries) => {
                let point = ClusteringFeature::from_point(x);
                let closest = closest_entry(entries.iter(), x);
                match closest {
                    Some(i) if entries[i].merged(&point).radius() <= threshold => {
                        entries[i].add_point(x);
                    }
                    _ => entries.push(point),
                }
                if entries.len() <= branching {
                    return None;
                }
                let all = std::mem::take(entries);
                let (left, right) = split(all, |e| e);
                self.nodes[node] = Node::Leaf(left);
                let sibling = self.nodes.len();
                self.nodes.push(Node::Leaf(right));
                Some(((self.summary(node), node), (self.summary(sibling), sibling)))
            }
            Node::Inner(entries) => {
                let i = closest_entry(entries.iter().map(|(cf, _)| cf), x)
                    .expect("inner nodes are never empty");
                let child = entries[i].1;
                entries[i].0.add_point(x);
                let split_child = self.insert_at(child, x);
                let Node::Inner(entries) = &mut self.nodes[node] else {
                    unreachable!()
                };
                if let Some((a, b)) = split_child {
                    entries[i] = a;
                    entries.push(b);
                }
                if entries.len() <= branching {
                    return None;
                }
                let all = std::mem::take(entries);
                let (left, right) = split(all, |(cf, _)| cf);
                self.nodes[node] = Node::Inner(left);
                let sibling = self.nodes.len();
                self.nodes.push(Node::Inner(right));
                Some(((self.summary(node), node), (self.summary(sibling), sibling)))
            }
        }
    }

    fn summary(&self, node: usize) -> ClusteringFeature {
        let mut cf: Option<ClusteringFeature> = None;
        let mut add = |c: &ClusteringFeature| match &mut cf {
            Some(acc) => acc.merge(c),
            None => cf = Some(c.clone()),
        };
        match &self.nodes[node] {
            Node::Leaf(e) => e.iter().for_each(&mut add),
            Node::Inner(e) => e.iter().for_each(|(c, _)| add(c)),
        }
        cf.expect("split nodes are never empty")
    }

    /// Leaf sub-clusters in tree order.
    pub fn leaves(&self) -> Vec<ClusteringFeature> {
        let mut out = Vec::new();
        self.collect_leaves(self.root, &mut out);
        out
    }

    fn collect_leaves(&self, node: usize, out: &mut Vec<ClusteringFeature>) {
        match &self.nodes[node] {
            Node::Leaf(e) => out.extend(e.iter().cloned()),
            Node::Inner(e) => e.iter().for_each(|(_, c)| self.collect_leaves(*c, out)),
        }
    }

    /// CF of every point inserted so far.
    pub fn root_summary(&self) -> Option<ClusteringFeature> {
        let leaves = self.leaves();
        let mut it = leaves.into_iter();
        let first = it.next()?;
        Some(it.fold(first, |mut acc, cf| {
            acc.merge(&cf);
            acc
        }))
    }
}

fn closest_entry<'a>(
    entries: impl Iterator<Item = &'a ClusteringFeature>,
    x: &[f64],
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, cf) in entries.enumerate() {
        let d = squared_distance(&cf.centroid(), x);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Splits around the farthest pair of entry centroids.
fn split<T>(entries: Vec<T>, cf: impl Fn(&T) -> &ClusteringFeature) -> (Vec<T>, Vec<T>) {
    let centroids: Vec<Vec<f64>> = entries.iter().map(|e| cf(e).centroid()).collect();
    let (mut sa, mut sb, mut far) = (0, 1, -1.0);
    for i in 0..centroids.len() {
        for j in i + 1..centroids.len() {
            let d = squared_distance(&centroids[i], &centroids[j]);
            if d > far {
                (sa, sb, far) = (i, j, d);
            }
        }
    }
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for (i, e) in entries.into_iter().enumerate() {
        let da = squared_distance(&centroids[i], &centroids[sa]);
        let db = squared_distance(&centroids[i], &centroids[sb]);
        if i == sa || (i != sb && da <= db) {
            left.push(e);
        } else {
            right.push(e);
        }
    }
    (left, right)
}

/// Builds a CF tree and clusters its leaf sub-clusters with weighted k-means.
pub fn fit_birch(rows: &[Vec<f64>], opts: &BirchOptions) -> Result<ClusterModel> {
    let mut tree = CfTree::new(opts)?;
    validate_rows(rows, 2)?;
    for r in rows {
        tree.insert(r);
    }
    let leaves = tree.leaves();
    if leaves.len() < K {
        return Err(Error::Fit(format!(
            "only {} sub-cluster(s) at threshold {}; lower the threshold",
            leaves.len(),
            opts.threshold
        )));
    }
    let points: Vec<Vec<f64>> = leaves.iter().map(ClusteringFeature::centroid).collect();
    let weights: Vec<f64> = leaves.iter().map(|cf| cf.n as f64).collect();
    let init = farthest_pair_init(&points, &weights);
    let (centroids, _, _) = lloyd(&points, &weights, init, 300, 1e-10);
    if rows.iter().all(|r| nearest(&centroids, r) == nearest(&centroids, &rows[0])) {
        return Err(Error::Fit("global phase left a cluster empty".into()));
    }
    ClusterModel::finish(
        Algorithm::Birch,
        rows,
        ModelState::Birch {
            centroids,
            leaves,
            branching: opts.branching,
            threshold: opts.threshold,
        },
    )
}

/// First seed: the point farthest from the weighted mean; second: the point
/// farthest from the first. Independent of insertion order up to ties.
fn farthest_pair_init(points: &[Vec<f64>], weights: &[f64]) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let total: f64 = weights.iter().sum();
    let mut mean = vec![0.0; dim];
    for (p, w) in points.iter().zip(weights) {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += w * v / total;
        }
    }
    let farthest_from = |c: &[f64]| {
        let mut best = 0;
        for i in 1..points.len() {
            if squared_distance(&points[i], c) > squared_distance(&points[best], c) {
                best = i;
            }
        }
        best
    };
    let a = farthest_from(&mean);
    let b = farthest_from(&points[a]);
    vec![points[a].clone(), points[b].clone()]
}
