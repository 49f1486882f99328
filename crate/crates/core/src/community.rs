//! Louvain modularity optimization over weighted snapshots, top-community
//! selection, and intra/cross labeling of pairs.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphSnapshot, NodeId};

/// Result of a Louvain run: one community id per snapshot node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    node_to_comm: Vec<u32>,
    sizes: Vec<usize>,
    /// Weighted modularity Q of the final assignment on the input graph.
    pub modularity: f64,
    /// Objective value recorded after each local-move pass; non-decreasing.
    pub pass_modularity: Vec<f64>,
}

impl CommunityAssignment {
    pub fn community_of(&self, u: NodeId) -> Option<u32> {
        self.node_to_comm.get(u.index()).copied()
    }

    pub fn community_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.node_to_comm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_to_comm.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.node_to_comm
    }

    /// Members of community `c`, ascending.
    pub fn members(&self, c: u32) -> Vec<NodeId> {
        self.node_to_comm
            .iter()
            .enumerate()
            .filter(|(_, &cc)| cc == c)
            .map(|(i, _)| NodeId(i as u32))
            .collect()
    }

    fn from_membership(node_to_comm: Vec<u32>, modularity: f64, passes: Vec<f64>) -> Self {
        let n_comm = node_to_comm.iter().copied().max().map_or(0, |m| m as usize + 1);
        let mut sizes = vec![0usize; n_comm];
        for &c in &node_to_comm {
            sizes[c as usize] += 1;
        }
        CommunityAssignment {
            node_to_comm,
            sizes,
            modularity,
            pass_modularity: passes,
        }
    }
}

/// Weighted modularity Q of an assignment over the snapshot:
/// Q = sum_c [ S_in(c)/(2m) - (S_tot(c)/(2m))^2 ] with m the total edge weight.
pub fn modularity(g: &GraphSnapshot, node_to_comm: &[u32]) -> Result<f64> {
    if node_to_comm.len() != g.id_space() {
        let missing = node_to_comm.len().min(g.id_space()) as u32;
        return Err(Error::Unassigned(missing));
    }
    let m: f64 = g.total_weight();
    if m == 0.0 {
        return Err(Error::EmptyGraph);
    }
    let n_comm = node_to_comm.iter().copied().max().unwrap_or(0) as usize + 1;
    let mut internal = vec![0.0f64; n_comm]; // 2 * intra weight
    let mut tot = vec![0.0f64; n_comm]; // sum of weighted degrees
    for u in g.all_nodes() {
        let cu = node_to_comm[u.index()] as usize;
        let (ns, ws) = g.neighbors_weighted(u);
        for (&v, &w) in ns.iter().zip(ws) {
            tot[cu] += w as f64;
            if node_to_comm[v.index()] as usize == cu {
                internal[cu] += w as f64;
            }
        }
    }
    let two_m = 2.0 * m;
    let q = (0..n_comm)
        .map(|c| internal[c] / two_m - (tot[c] / two_m).powi(2))
        .sum();
    Ok(q)
}

/// The Louvain working graph: adjacency with self-loops, used across
/// aggregation levels. Self-loop weight is the aggregated intra-community
/// weight, counted once; degrees count it twice.
struct WorkGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_loop: Vec<f64>,
    degree: Vec<f64>,
    total: f64,
}

impl WorkGraph {
    fn from_snapshot(g: &GraphSnapshot) -> Self {
        let n = g.id_space();
        let mut adj = vec![Vec::new(); n];
        let mut degree = vec![0.0; n];
        let mut total = 0.0;
        for (u, v, w) in g.edges() {
            let w = w as f64;
            adj[u.index()].push((v.index(), w));
            adj[v.index()].push((u.index(), w));
            degree[u.index()] += w;
            degree[v.index()] += w;
            total += w;
        }
        WorkGraph {
            adj,
            self_loop: vec![0.0; n],
            degree,
            total,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn objective(&self, node_to_comm: &[usize], resolution: f64) -> f64 {
        let n_comm = node_to_comm.iter().copied().max().unwrap_or(0) + 1;
        let mut internal = vec![0.0f64; n_comm];
        let mut tot = vec![0.0f64; n_comm];
        for u in 0..self.len() {
            let cu = node_to_comm[u];
            tot[cu] += self.degree[u];
            internal[cu] += 2.0 * self.self_loop[u];
            for &(v, w) in &self.adj[u] {
                if node_to_comm[v] == cu {
                    internal[cu] += w;
                }
            }
        }
        let two_m = 2.0 * self.total;
        (0..n_comm)
            .map(|c| internal[c] / two_m - resolution * (tot[c] / two_m).powi(2))
            .sum()
    }

    /// One local-move phase: sweeps of seeded-shuffled node visits until no
    /// node moves. A node moves only on strictly positive gain over staying;
    /// equal-gain candidates resolve to the lowest community id.
    fn local_move(&self, rng: &mut ChaCha8Rng, resolution: f64) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut node_to_comm: Vec<usize> = (0..n).collect();
        let mut comm_tot: Vec<f64> = self.degree.clone();
        let two_m = 2.0 * self.total;
        let mut order: Vec<usize> = (0..n).collect();
        let mut any_move = false;
        let mut weights_to: HashMap<usize, f64> = HashMap::new();

        loop {
            let mut moved = 0usize;
            order.shuffle(rng);
            for &u in &order {
                let cur = node_to_comm[u];
                weights_to.clear();
                for &(v, w) in &self.adj[u] {
                    *weights_to.entry(node_to_comm[v]).or_insert(0.0) += w;
                }
                // Remove u from its community before comparing destinations.
                comm_tot[cur] -= self.degree[u];
                let gain = |c: usize| -> f64 {
                    let k_uc = weights_to.get(&c).copied().unwrap_or(0.0);
                    k_uc - resolution * comm_tot[c] * self.degree[u] / two_m
                };
                let stay = gain(cur);
                let mut candidates: Vec<usize> =
                    weights_to.keys().copied().filter(|&c| c != cur).collect();
                candidates.sort_unstable();
                let mut best_c = cur;
                let mut best_gain = stay;
                for c in candidates {
                    let gc = gain(c);
                    if gc > best_gain + GAIN_EPS {
                        best_gain = gc;
                        best_c = c;
                    }
                }
                comm_tot[best_c] += self.degree[u];
                if best_c != cur {
                    node_to_comm[u] = best_c;
                    moved += 1;
                    any_move = true;
                }
            }
            if moved == 0 {
                break;
            }
        }
        (node_to_comm, any_move)
    }

    /// Collapse communities into supernodes; intra weight becomes self-loops.
    /// Returns the aggregated graph and the compact community relabeling.
    fn aggregate(&self, node_to_comm: &[usize]) -> (WorkGraph, Vec<usize>) {
        let mut seen: Vec<usize> = node_to_comm.to_vec();
        seen.sort_unstable();
        seen.dedup();
        let compact: HashMap<usize, usize> =
            seen.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let k = seen.len();

        let mut self_loop = vec![0.0f64; k];
        let mut agg: Vec<HashMap<usize, f64>> = vec![HashMap::new(); k];
        for u in 0..self.len() {
            let cu = compact[&node_to_comm[u]];
            self_loop[cu] += self.self_loop[u];
            for &(v, w) in &self.adj[u] {
                if v < u {
                    continue; // each undirected edge once
                }
                let cv = compact[&node_to_comm[v]];
                if cu == cv {
                    self_loop[cu] += w;
                } else {
                    *agg[cu].entry(cv).or_insert(0.0) += w;
                    *agg[cv].entry(cu).or_insert(0.0) += w;
                }
            }
        }
        let mut adj: Vec<Vec<(usize, f64)>> = Vec::with_capacity(k);
        let mut degree = vec![0.0f64; k];
        for (c, map) in agg.into_iter().enumerate() {
            let mut row: Vec<(usize, f64)> = map.into_iter().collect();
            row.sort_unstable_by_key(|&(v, _)| v);
            degree[c] = row.iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self_loop[c];
            adj.push(row);
        }
        let relabel: Vec<usize> = node_to_comm.iter().map(|c| compact[c]).collect();
        (
            WorkGraph {
                adj,
                self_loop,
                degree,
                total: self.total,
            },
            relabel,
        )
    }
}

const GAIN_EPS: f64 = 1e-12;

/// Modularity-gain convergence tolerance per pass.
pub const LOUVAIN_TOLERANCE: f64 = 1e-7;

/// Louvain community detection: local-move plus aggregation passes repeated
/// until the per-pass modularity gain falls below [`LOUVAIN_TOLERANCE`].
/// Deterministic under a fixed seed (node visit order is seeded-shuffled).
pub fn louvain(g: &GraphSnapshot, seed: u64, resolution: f64) -> Result<CommunityAssignment> {
    if g.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = WorkGraph::from_snapshot(g);
    // membership[i]: current supernode of original node i.
    let mut membership: Vec<usize> = (0..g.id_space()).collect();
    let mut passes: Vec<f64> = Vec::new();
    let mut prev_q = work.objective(&membership, resolution);

    loop {
        let (node_to_comm, any_move) = work.local_move(&mut rng, resolution);
        let q = work.objective(&node_to_comm, resolution);
        passes.push(q);
        let relabel_membership = |membership: &mut Vec<usize>, relabel: &[usize]| {
            for m in membership.iter_mut() {
                *m = relabel[*m];
            }
        };
        if !any_move || q - prev_q < LOUVAIN_TOLERANCE {
            // Fold the final level in even when below tolerance.
            let (_, relabel) = work.aggregate(&node_to_comm);
            relabel_membership(&mut membership, &relabel);
            break;
        }
        prev_q = q;
        let (next, relabel) = work.aggregate(&node_to_comm);
        relabel_membership(&mut membership, &relabel);
        work = next;
    }

    // Renumber by first occurrence over ascending node index.
    let mut renumber: HashMap<usize, u32> = HashMap::new();
    let mut final_comm = Vec::with_capacity(membership.len());
    for &c in &membership {
        let next_id = renumber.len() as u32;
        let id = *renumber.entry(c).or_insert(next_id);
        final_comm.push(id);
    }
    let q_final = modularity(g, &final_comm)?;
    Ok(CommunityAssignment::from_membership(final_comm, q_final, passes))
}

/// Communities ordered by size descending, ties broken by the smallest
/// contained node index; returns the top `k` induced node sets.
/// Asking for more communities than exist returns all of them with a warning.
pub fn select_top_communities(assignment: &CommunityAssignment, k: usize) -> Vec<Vec<NodeId>> {
    assert!(k >= 1, "k must be >= 1");
    let n_comm = assignment.community_count();
    if k > n_comm {
        log::warn!("requested top-{k} communities but only {n_comm} exist; returning all");
    }
    let mut order: Vec<(usize, u32, NodeId)> = (0..n_comm as u32)
        .map(|c| {
            let members = assignment.members(c);
            let min_node = members.first().copied().unwrap_or(NodeId(u32::MAX));
            (members.len(), c, min_node)
        })
        .collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.2.cmp(&b.2)));
    order
        .into_iter()
        .take(k)
        .map(|(_, c, _)| assignment.members(c))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairCommunity {
    Intra,
    Cross,
}

/// Intra iff both endpoints share a community id.
pub fn label_pair_community(
    assignment: &CommunityAssignment,
    u: NodeId,
    v: NodeId,
) -> Result<PairCommunity> {
    let cu = assignment.community_of(u).ok_or(Error::Unassigned(u.0))?;
    let cv = assignment.community_of(v).ok_or(Error::Unassigned(v.0))?;
    Ok(if cu == cv {
        PairCommunity::Intra
    } else {
        PairCommunity::Cross
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::YearRange;

    fn snapshot_of(pairs: &[(u32, u32)], id_space: usize) -> GraphSnapshot {
        GraphSnapshot::from_weighted_pairs(
            pairs.iter().map(|&(a, b)| (NodeId(a), NodeId(b), 1)),
            id_space,
            YearRange::new(2000, 2000),
        )
    }

    fn clique(nodes: std::ops::Range<u32>) -> Vec<(u32, u32)> {
        let ns: Vec<u32> = nodes.collect();
        let mut out = Vec::new();
        for i in 0..ns.len() {
            for j in (i + 1)..ns.len() {
                out.push((ns[i], ns[j]));
            }
        }
        out
    }

    #[test]
    fn five_clique_is_one_community() {
        let g = snapshot_of(&clique(0..5), 5);
        let a = louvain(&g, 0, 1.0).unwrap();
        assert_eq!(a.community_count(), 1);
        assert_eq!(a.sizes(), &[5]);
    }

    #[test]
    fn empty_graph_is_an_error() {
        let g = snapshot_of(&[], 4);
        assert!(matches!(louvain(&g, 0, 1.0), Err(Error::EmptyGraph)));
    }

    #[test]
    fn two_four_cliques_recover_planted_split() {
        let mut pairs = clique(0..4);
        pairs.extend(clique(4..8));
        pairs.push((3, 4)); // bridge
        let g = snapshot_of(&pairs, 8);
        for seed in 0..10 {
            let a = louvain(&g, seed, 1.0).unwrap();
            assert_eq!(a.community_count(), 2, "seed {seed}");
            let c0 = a.community_of(NodeId(0)).unwrap();
            for n in 1..4 {
                assert_eq!(a.community_of(NodeId(n)).unwrap(), c0);
            }
            let c1 = a.community_of(NodeId(4)).unwrap();
            assert_ne!(c0, c1);
            for n in 5..8 {
                assert_eq!(a.community_of(NodeId(n)).unwrap(), c1);
            }
        }
    }

    /// Enumerate all set partitions of `n` elements as restricted-growth strings.
    fn all_partitions(n: usize) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; n];
        fn rec(i: usize, max_used: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if i == cur.len() {
                out.push(cur.clone());
                return;
            }
            for c in 0..=max_used + 1 {
                cur[i] = c;
                rec(i + 1, max_used.max(c), cur, out);
            }
        }
        rec(1, 0, &mut cur, &mut out);
        out
    }

    #[test]
    fn louvain_matches_brute_force_on_two_four_cliques() {
        let mut pairs = clique(0..4);
        pairs.extend(clique(4..8));
        pairs.push((3, 4));
        let g = snapshot_of(&pairs, 8);

        // Brute-force modularity maximization over all 4140 partitions.
        let mut best_q = f64::NEG_INFINITY;
        let mut best = Vec::new();
        for p in all_partitions(8) {
            let q = modularity(&g, &p).unwrap();
            if q > best_q {
                best_q = q;
                best = p;
            }
        }
        // The optimum is the planted clique split.
        assert_eq!(best[..4], [best[0]; 4][..]);
        assert_eq!(best[4..], [best[4]; 4][..]);
        assert_ne!(best[0], best[4]);

        let a = louvain(&g, 3, 1.0).unwrap();
        assert!((a.modularity - best_q).abs() < 1e-12);
    }

    #[test]
    fn modularity_identity_partition_is_zero() {
        for pairs in [clique(0..4), vec![(0, 1), (1, 2), (2, 3)]] {
            let g = snapshot_of(&pairs, 4);
            let q = modularity(&g, &[0, 0, 0, 0]).unwrap();
            assert!(q.abs() < 1e-15);
        }
    }

    #[test]
    fn modularity_two_disjoint_triangles() {
        let mut pairs = clique(0..3);
        pairs.extend(clique(3..6));
        let g = snapshot_of(&pairs, 6);
        let q = modularity(&g, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!((q - 0.5).abs() < 1e-15);
    }

    #[test]
    fn modularity_singleton_triangle() {
        let g = snapshot_of(&clique(0..3), 3);
        let q = modularity(&g, &[0, 1, 2]).unwrap();
        assert!((q - (-1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn modularity_missing_node_error() {
        let g = snapshot_of(&clique(0..3), 3);
        assert!(matches!(modularity(&g, &[0, 1]), Err(Error::Unassigned(_))));
    }

    #[test]
    fn weighted_modularity_uses_weights() {
        // Same topology, different weights: Q must differ.
        let g1 = GraphSnapshot::from_weighted_pairs(
            [(NodeId(0), NodeId(1), 1), (NodeId(1), NodeId(2), 1), (NodeId(2), NodeId(3), 1)],
            4,
            YearRange::new(2000, 2000),
        );
        let g2 = GraphSnapshot::from_weighted_pairs(
            [(NodeId(0), NodeId(1), 5), (NodeId(1), NodeId(2), 1), (NodeId(2), NodeId(3), 5)],
            4,
            YearRange::new(2000, 2000),
        );
        let part = [0u32, 0, 1, 1];
        let q1 = modularity(&g1, &part).unwrap();
        let q2 = modularity(&g2, &part).unwrap();
        assert!((q1 - q2).abs() > 1e-6);
    }

    #[test]
    fn passes_are_monotone_and_final_matches_recomputation() {
        let mut pairs = clique(0..10);
        pairs.extend(clique(10..20));
        pairs.push((9, 10));
        pairs.extend([(0, 15), (3, 12)]);
        let g = snapshot_of(&pairs, 20);
        let a = louvain(&g, 42, 1.0).unwrap();
        for w in a.pass_modularity.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        let recomputed = modularity(&g, a.as_slice()).unwrap();
        assert!((a.modularity - recomputed).abs() < 1e-9);
        // Better than the singleton partition.
        let singleton: Vec<u32> = (0..20).collect();
        assert!(a.modularity >= modularity(&g, &singleton).unwrap());
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let mut pairs = clique(0..6);
        pairs.extend(clique(6..12));
        pairs.extend([(0, 6), (1, 7), (5, 11)]);
        let g = snapshot_of(&pairs, 12);
        let a = louvain(&g, 9, 1.0).unwrap();
        let b = louvain(&g, 9, 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn planted_partition_two_ten_cliques_all_seeds() {
        let mut pairs = clique(0..10);
        pairs.extend(clique(10..20));
        pairs.push((0, 10));
        let g = snapshot_of(&pairs, 20);
        for seed in 0..10 {
            let a = louvain(&g, seed, 1.0).unwrap();
            assert_eq!(a.community_count(), 2, "seed {seed}");
            let c0 = a.community_of(NodeId(0)).unwrap();
            assert!((0..10).all(|n| a.community_of(NodeId(n)).unwrap() == c0));
            let c1 = a.community_of(NodeId(10)).unwrap();
            assert!((10..20).all(|n| a.community_of(NodeId(n)).unwrap() == c1));
            assert_ne!(c0, c1);
        }
    }

    #[test]
    fn top_community_selection_and_ties() {
        // Sizes [10, 7, 3].
        let mut pairs = clique(0..10);
        pairs.extend(clique(10..17));
        pairs.extend(clique(17..20));
        let g = snapshot_of(&pairs, 20);
        let a = louvain(&g, 1, 1.0).unwrap();
        let top = select_top_communities(&a, 1);
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].len(), 10);
        let top2 = select_top_communities(&a, 2);
        assert_eq!(top2[1].len(), 7);
        // k beyond the community count returns everything.
        let all = select_top_communities(&a, 10);
        assert_eq!(all.len(), a.community_count());

        // Size tie: the community containing the smaller node index first.
        let mut tied = clique(0..5);
        tied.extend(clique(5..10));
        let g2 = snapshot_of(&tied, 10);
        let a2 = louvain(&g2, 0, 1.0).unwrap();
        let top = select_top_communities(&a2, 1);
        assert!(top[0].contains(&NodeId(0)));
    }

    #[test]
    fn pair_labels_and_intra_rate() {
        let mut pairs = clique(0..4);
        pairs.extend(clique(4..8));
        pairs.push((3, 4));
        let g = snapshot_of(&pairs, 8);
        let a = louvain(&g, 0, 1.0).unwrap();
        assert_eq!(
            label_pair_community(&a, NodeId(0), NodeId(1)).unwrap(),
            PairCommunity::Intra
        );
        assert_eq!(
            label_pair_community(&a, NodeId(0), NodeId(7)).unwrap(),
            PairCommunity::Cross
        );
        assert!(label_pair_community(&a, NodeId(0), NodeId(99)).is_err());

        let batch = [
            (NodeId(0), NodeId(1)),
            (NodeId(1), NodeId(2)),
            (NodeId(5), NodeId(6)),
            (NodeId(2), NodeId(6)),
        ];
        let intra = batch
            .iter()
            .filter(|&&(u, v)| label_pair_community(&a, u, v).unwrap() == PairCommunity::Intra)
            .count();
        assert_eq!(intra as f64 / batch.len() as f64, 0.75);
    }
}
