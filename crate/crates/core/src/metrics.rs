//! Network metrics over a [`CollaborationNetwork`].
//!
//! Path-based metrics treat an edge of weight `w` as a link of length `1/w`:
//! heavier collaboration means closer stakeholders. Distances that agree to a
//! relative tolerance of 1e-12 are treated as equal, so tied shortest paths
//! are all counted.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rayon::prelude::*;
use serde::Serialize;

use crate::graph::CollaborationNetwork;
use crate::identity::StakeholderId;

const DISTANCE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Centrality {
    pub out_degree: f64,
    pub betweenness: f64,
    pub closeness: f64,
}

pub type CentralityTable = BTreeMap<StakeholderId, Centrality>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphStats {
    pub average_clustering_coefficient: f64,
    pub graph_density: f64,
    pub vertex_count: usize,
    pub edge_count: usize,
}

/// Vertices in id order with adjacency lists of (target, length).
struct Indexed<'a> {
    ids: Vec<&'a StakeholderId>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl<'a> Indexed<'a> {
    fn new(net: &'a CollaborationNetwork) -> Self {
        let ids: Vec<&StakeholderId> = net.vertices().iter().collect();
        let index: BTreeMap<&StakeholderId, usize> =
            ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for ((s, t), w) in net.edges() {
            adj[index[s]].push((index[t], 1.0 / w));
        }
        Indexed { ids, adj }
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    fn to_map(&self, values: Vec<f64>) -> BTreeMap<StakeholderId, f64> {
        self.ids
            .iter()
            .map(|id| (*id).clone())
            .zip(values)
            .collect()
    }
}

fn same_distance(a: f64, b: f64) -> bool {
    (a - b).abs() <= DISTANCE_RTOL * a.abs().max(b.abs())
}

#[derive(PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct ShortestPaths {
    /// Vertices in the order they were settled (non-decreasing distance).
    settled: Vec<usize>,
    dist: Vec<f64>,
    sigma: Vec<f64>,
    preds: Vec<Vec<usize>>,
}

/// Dijkstra from `source`, counting shortest paths.
fn shortest_paths(g: &Indexed<'_>, source: usize) -> ShortestPaths {
    let n = g.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0; n];
    let mut preds = vec![Vec::new(); n];
    let mut done = vec![false; n];
    let mut settled = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();

    dist[source] = 0.0;
    sigma[source] = 1.0;
    heap.push(Reverse((Dist(0.0), source)));

    while let Some(Reverse((Dist(d), v))) = heap.pop() {
        if done[v] || d > dist[v] {
            continue;
        }
        done[v] = true;
        settled.push(v);
        for &(w, len) in &g.adj[v] {
            if done[w] {
                continue;
            }
            let candidate = d + len;
            if dist[w].is_infinite() || (candidate < dist[w] && !same_distance(candidate, dist[w]))
            {
                dist[w] = candidate;
                sigma[w] = sigma[v];
                preds[w].clear();
                preds[w].push(v);
                heap.push(Reverse((Dist(candidate), w)));
            } else if same_distance(candidate, dist[w]) {
                sigma[w] += sigma[v];
                preds[w].push(v);
            }
        }
    }
    ShortestPaths {
        settled,
        dist,
        sigma,
        preds,
    }
}

/// Sum of outgoing edge weights (node strength).
pub fn out_degree_centrality(net: &CollaborationNetwork) -> BTreeMap<StakeholderId, f64> {
    let mut out: BTreeMap<StakeholderId, f64> =
        net.vertices().iter().map(|v| (v.clone(), 0.0)).collect();
    for ((s, _), w) in net.edges() {
        *out.get_mut(s).expect("edge endpoint is a vertex") += w;
    }
    out
}

/// Unnormalized directed betweenness (Brandes). Endpoints are excluded and
/// unreachable pairs contribute nothing.
pub fn betweenness_centrality(net: &CollaborationNetwork) -> BTreeMap<StakeholderId, f64> {
    let g = Indexed::new(net);
    let n = g.len();
    let per_source: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let sp = shortest_paths(&g, s);
            let mut delta = vec![0.0; n];
            for &w in sp.settled.iter().rev() {
                for &v in &sp.preds[w] {
                    delta[v] += sp.sigma[v] / sp.sigma[w] * (1.0 + delta[w]);
                }
            }
            delta[s] = 0.0;
            delta
        })
        .collect();

    let mut scores = vec![0.0; n];
    for delta in &per_source {
        for (acc, d) in scores.iter_mut().zip(delta) {
            *acc += d;
        }
    }
    g.to_map(scores)
}

/// Closeness with the component adjustment for disconnected graphs:
/// `(r / (n-1)) * (r / sum of distances to the r reachable vertices)`.
/// Vertices that reach nobody score 0.
pub fn closeness_centrality(net: &CollaborationNetwork) -> BTreeMap<StakeholderId, f64> {
    let g = Indexed::new(net);
    let n = g.len();
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|s| {
            let sp = shortest_paths(&g, s);
            let reachable = sp.settled.len() - 1;
            if reachable == 0 {
                return 0.0;
            }
            let total: f64 = sp.settled.iter().map(|&v| sp.dist[v]).sum();
            let r = reachable as f64;
            (r / (n - 1) as f64) * (r / total)
        })
        .collect();
    g.to_map(scores)
}

/// Mean local clustering coefficient on the undirected, unweighted
/// projection. Vertices with fewer than two neighbours count as 0.
pub fn average_clustering_coefficient(net: &CollaborationNetwork) -> f64 {
    let n = net.vertex_count();
    if n == 0 {
        return 0.0;
    }
    let mut neighbours: BTreeMap<&StakeholderId, BTreeSet<&StakeholderId>> = net
        .vertices()
        .iter()
        .map(|v| (v, BTreeSet::new()))
        .collect();
    for (s, t) in net.edges().keys() {
        neighbours.get_mut(s).expect("vertex").insert(t);
        neighbours.get_mut(t).expect("vertex").insert(s);
    }
    let total: f64 = neighbours
        .values()
        .map(|nb| {
            let k = nb.len();
            if k < 2 {
                return 0.0;
            }
            let nb: Vec<&&StakeholderId> = nb.iter().collect();
            let mut links = 0usize;
            for (i, u) in nb.iter().enumerate() {
                for w in &nb[i + 1..] {
                    if neighbours[**u].contains(**w) {
                        links += 1;
                    }
                }
            }
            2.0 * links as f64 / (k * (k - 1)) as f64
        })
        .sum();
    total / n as f64
}

/// Directed simple-graph density `m / (n (n-1))`; 0 below two vertices.
pub fn graph_density(net: &CollaborationNetwork) -> f64 {
    let n = net.vertex_count();
    if n < 2 {
        return 0.0;
    }
    net.edge_count() as f64 / (n * (n - 1)) as f64
}

pub fn centrality_table(net: &CollaborationNetwork) -> CentralityTable {
    let out = out_degree_centrality(net);
    let betweenness = betweenness_centrality(net);
    let closeness = closeness_centrality(net);
    out.into_iter()
        .map(|(id, out_degree)| {
            let c = Centrality {
                out_degree,
                betweenness: betweenness[&id],
                closeness: closeness[&id],
            };
            (id, c)
        })
        .collect()
}

pub fn graph_stats(net: &CollaborationNetwork) -> GraphStats {
    GraphStats {
        average_clustering_coefficient: average_clustering_coefficient(net),
        graph_density: graph_density(net),
        vertex_count: net.vertex_count(),
        edge_count: net.edge_count(),
    }
}
