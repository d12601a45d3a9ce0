#![allow(dead_code)]

pub mod tracker;

use std::collections::BTreeMap;

use ecograph::graph::{CollaborationNetwork, IssueContribution};
use ecograph::StakeholderId;
use num_rational::Ratio;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TIE_RTOL: f64 = 1e-12;

pub fn sid(s: &str) -> StakeholderId {
    StakeholderId::new(s).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random directed graph on up to `max_n` vertices. Half the graphs draw
/// weights from a small power-of-two set so that tied shortest paths are
/// common and exact.
pub fn random_graph(rng: &mut ChaCha8Rng, max_n: usize) -> CollaborationNetwork {
    let n = rng.gen_range(1..=max_n);
    let p: f64 = rng.gen_range(0.1..0.9);
    let discrete = rng.gen_bool(0.5);
    let mut net = CollaborationNetwork::new("R0.0");
    for i in 0..n {
        net.add_vertex(sid(&format!("v{i}")));
    }
    for a in 0..n {
        for b in 0..n {
            if a == b || !rng.gen_bool(p) {
                continue;
            }
            let w = if discrete {
                [0.25, 0.5, 1.0, 2.0][rng.gen_range(0..4)]
            } else {
                rng.gen_range(0.05..3.0)
            };
            net.add_weight(sid(&format!("v{a}")), sid(&format!("v{b}")), w)
                .unwrap();
        }
    }
    net
}

pub fn random_shares(rng: &mut ChaCha8Rng, max_k: usize) -> IssueContribution {
    let k = rng.gen_range(1..=max_k);
    let shares = (0..k)
        .map(|i| (sid(&format!("org{i}")), rng.gen_range(1..2000) as f64))
        .collect();
    IssueContribution {
        issue_key: "X-1".into(),
        shares,
    }
}

/// Vertex ids in order and the length matrix (1/weight, infinity if absent).
pub fn lengths(net: &CollaborationNetwork) -> (Vec<StakeholderId>, Vec<Vec<f64>>) {
    let ids: Vec<StakeholderId> = net.vertices().iter().cloned().collect();
    let n = ids.len();
    let pos = |id: &StakeholderId| ids.iter().position(|x| x == id).unwrap();
    let mut len = vec![vec![f64::INFINITY; n]; n];
    for ((s, t), w) in net.edges() {
        len[pos(s)][pos(t)] = 1.0 / w;
    }
    (ids, len)
}

pub fn floyd_warshall(len: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = len.len();
    let mut d = len.to_vec();
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

pub fn closeness_oracle(net: &CollaborationNetwork) -> BTreeMap<StakeholderId, f64> {
    let (ids, len) = lengths(net);
    let d = floyd_warshall(&len);
    let n = ids.len();
    ids.iter()
        .enumerate()
        .map(|(v, id)| {
            let reach: Vec<f64> = (0..n)
                .filter(|&u| u != v && d[v][u].is_finite())
                .map(|u| d[v][u])
                .collect();
            let score = if reach.is_empty() {
                0.0
            } else {
                let r = reach.len() as f64;
                (r / (n - 1) as f64) * (r / reach.iter().sum::<f64>())
            };
            (id.clone(), score)
        })
        .collect()
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_RTOL * a.abs().max(b.abs())
}

/// Betweenness by enumerating every simple path between every ordered pair.
pub fn betweenness_oracle(net: &CollaborationNetwork) -> BTreeMap<StakeholderId, f64> {
    let (ids, len) = lengths(net);
    let n = ids.len();
    let mut score = vec![0.0; n];

    struct Walk<'a> {
        len: &'a [Vec<f64>],
        on_path: Vec<bool>,
        path: Vec<usize>,
    }

    impl Walk<'_> {
        fn visit(&mut self, v: usize, dist: f64, f: &mut dyn FnMut(usize, f64, &[usize])) {
            f(v, dist, &self.path);
            for u in 0..self.len.len() {
                if self.on_path[u] || self.len[v][u].is_infinite() {
                    continue;
                }
                self.on_path[u] = true;
                self.path.push(u);
                self.visit(u, dist + self.len[v][u], f);
                self.path.pop();
                self.on_path[u] = false;
            }
        }
    }

    for s in 0..n {
        let mut walk = Walk {
            len: &len,
            on_path: vec![false; n],
            path: vec![s],
        };
        walk.on_path[s] = true;
        let mut best = vec![f64::INFINITY; n];
        walk.visit(s, 0.0, &mut |v, d, _| {
            if d < best[v] {
                best[v] = d;
            }
        });
        let mut count = vec![0u64; n];
        let mut through = vec![vec![0u64; n]; n];
        walk.visit(s, 0.0, &mut |t, d, path| {
            if t != s && same(d, best[t]) {
                count[t] += 1;
                for &v in &path[1..path.len() - 1] {
                    through[t][v] += 1;
                }
            }
        });
        for t in 0..n {
            if count[t] == 0 {
                continue;
            }
            for v in 0..n {
                score[v] += through[t][v] as f64 / count[t] as f64;
            }
        }
    }
    ids.into_iter().zip(score).collect()
}

/// Average clustering coefficient over the undirected projection, computed
/// exactly by enumerating vertex triples.
pub fn acc_oracle(net: &CollaborationNetwork) -> Ratio<i64> {
    let ids: Vec<&StakeholderId> = net.vertices().iter().collect();
    let n = ids.len();
    if n == 0 {
        return Ratio::from_integer(0);
    }
    let adjacent = |a: usize, b: usize| {
        net.edges().contains_key(&(ids[a].clone(), ids[b].clone()))
            || net.edges().contains_key(&(ids[b].clone(), ids[a].clone()))
    };
    let mut triangles = vec![0i64; n];
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                if adjacent(a, b) && adjacent(b, c) && adjacent(a, c) {
                    triangles[a] += 1;
                    triangles[b] += 1;
                    triangles[c] += 1;
                }
            }
        }
    }
    let mut total = Ratio::from_integer(0);
    for (v, &tri) in triangles.iter().enumerate() {
        let k = (0..n).filter(|&u| u != v && adjacent(u, v)).count() as i64;
        if k >= 2 {
            total += Ratio::new(2 * tri, k * (k - 1));
        }
    }
    total / n as i64
}

pub fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
