//! Temporal edge ingest and immutable windowed graph snapshots.
//!
//! Author string ids are interned into dense indices at ingest (first-seen
//! order). Snapshots store adjacency in CSR form with sorted neighbor lists
//! and aggregated co-authorship weights, which every downstream module
//! (heuristics, candidates, community detection, walks) reads concurrently.

use std::collections::HashMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node index. Contiguous from 0 within one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Opaque external author identifier (e.g. an OpenAlex author URI tail).
pub type AuthorId = String;

/// Bijective mapping between external string ids and dense indices,
/// assigned in first-seen order during ingest.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<AuthorId>,
    index: HashMap<AuthorId, NodeId>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Intern `id`, returning its dense index (existing or newly assigned).
    pub fn intern(&mut self, id: &str) -> NodeId {
        if let Some(&n) = self.index.get(id) {
            return n;
        }
        let n = NodeId(self.ids.len() as u32);
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), n);
        n
    }

    pub fn get(&self, id: &str) -> Option<NodeId> {
        self.index.get(id).copied()
    }

    pub fn name(&self, node: NodeId) -> Option<&str> {
        self.ids.get(node.index()).map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &str)> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, s)| (NodeId(i as u32), s.as_str()))
    }
}

/// Inclusive calendar-year range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl YearRange {
    pub fn new(start: i32, end: i32) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, year: i32) -> bool {
        year >= self.start && year <= self.end
    }

    pub fn overlaps(&self, other: &YearRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.start, self.end)
    }
}

impl std::fmt::Display for YearRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

/// Undirected author pair with year and co-authorship count.
/// Canonical orientation: `u < v` under dense-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalEdge {
    pub u: NodeId,
    pub v: NodeId,
    pub year: i32,
    pub weight: u32,
}

/// Canonicalized temporal edge list plus the id mapping it was built under.
#[derive(Debug, Clone, Default)]
pub struct EdgeTable {
    pub edges: Vec<TemporalEdge>,
    pub ids: IdMap,
}

impl EdgeTable {
    /// Year span covered by the edges, if any.
    pub fn year_span(&self) -> Option<YearRange> {
        let min = self.edges.iter().map(|e| e.year).min()?;
        let max = self.edges.iter().map(|e| e.year).max()?;
        Some(YearRange::new(min, max))
    }
}

/// Row-accounting counters returned by [`ingest_edges`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub accepted_rows: u64,
    pub self_loops_rejected: u64,
    pub out_of_range_dropped: u64,
    /// Rows merged into an existing (u, v, year) entry by weight summation.
    pub duplicates_merged: u64,
}

/// Read a temporal edge CSV (`src,dst,year,weight`; weight optional, default 1).
///
/// Rows are canonicalized to `u < v` under first-seen dense-index order,
/// duplicate `(u, v, year)` rows sum their weights, self-loops are counted
/// and skipped, and rows outside `year_range` are dropped. Lines starting
/// with `#` (provenance headers on re-ingested exports) are ignored.
pub fn ingest_edges(path: &Path, year_range: Option<YearRange>) -> Result<(EdgeTable, IngestStats)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_edges_reader(BufReader::new(file), year_range)
}

pub fn ingest_edges_reader<R: Read>(
    reader: R,
    year_range: Option<YearRange>,
) -> Result<(EdgeTable, IngestStats)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader);

    let mut ids = IdMap::new();
    let mut agg: HashMap<(NodeId, NodeId, i32), u32> = HashMap::new();
    let mut stats = IngestStats::default();

    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(Error::MalformedRow {
                    line,
                    message: e.to_string(),
                });
            }
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() < 3 {
            return Err(Error::MalformedRow {
                line,
                message: format!("expected at least 3 fields, got {}", record.len()),
            });
        }
        let src = record.get(0).unwrap_or("").trim();
        let dst = record.get(1).unwrap_or("").trim();
        if src.is_empty() || dst.is_empty() {
            return Err(Error::MalformedRow {
                line,
                message: "empty src or dst id".into(),
            });
        }
        let year: i32 = record
            .get(2)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::MalformedRow {
                line,
                message: format!("unparseable year `{}`", record.get(2).unwrap_or("")),
            })?;
        let weight: u32 = match record.get(3).map(str::trim) {
            None | Some("") => 1,
            Some(w) => w.parse().map_err(|_| Error::MalformedRow {
                line,
                message: format!("unparseable weight `{w}`"),
            })?,
        };
        if weight == 0 {
            return Err(Error::MalformedRow {
                line,
                message: "weight must be >= 1".into(),
            });
        }

        if let Some(range) = &year_range {
            if !range.contains(year) {
                stats.out_of_range_dropped += 1;
                continue;
            }
        }
        if src == dst {
            stats.self_loops_rejected += 1;
            continue;
        }
        let a = ids.intern(src);
        let b = ids.intern(dst);
        if a == b {
            stats.self_loops_rejected += 1;
            continue;
        }
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        match agg.entry((u, v, year)) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                *e.get_mut() += weight;
                stats.duplicates_merged += 1;
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(weight);
            }
        }
        stats.accepted_rows += 1;
    }

    let mut edges: Vec<TemporalEdge> = agg
        .into_iter()
        .map(|((u, v, year), weight)| TemporalEdge { u, v, year, weight })
        .collect();
    edges.sort_unstable_by_key(|e| (e.u, e.v, e.year));

    Ok((EdgeTable { edges, ids }, stats))
}

/// Write edges back out in the same CSV schema `ingest_edges` reads.
pub fn export_edges<W: Write>(table: &EdgeTable, mut w: W) -> Result<()> {
    let io_err = |e: std::io::Error| Error::io("<edge export>", e);
    writeln!(w, "src,dst,year,weight").map_err(io_err)?;
    for e in &table.edges {
        let u = table.ids.name(e.u).ok_or(Error::UnknownNode(e.u.0))?;
        let v = table.ids.name(e.v).ok_or(Error::UnknownNode(e.v.0))?;
        writeln!(w, "{u},{v},{},{}", e.year, e.weight).map_err(io_err)?;
    }
    Ok(())
}

/// Immutable adjacency view of one time window (CSR layout).
///
/// The adjacency domain covers the full dense-id space of the dataset, so
/// authors without edges inside the window are legal arguments everywhere
/// and simply have degree 0. `node_count` reports nodes with degree >= 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSnapshot {
    window: YearRange,
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    weights: Vec<u32>,
    edge_count: usize,
    node_count: usize,
}

impl GraphSnapshot {
    /// Aggregate all edges with `year` inside `window` into one snapshot.
    /// The same pair appearing in several years sums its weights.
    pub fn build(table: &EdgeTable, window: YearRange) -> Self {
        Self::from_weighted_pairs(
            table
                .edges
                .iter()
                .filter(|e| window.contains(e.year))
                .map(|e| (e.u, e.v, e.weight)),
            table.ids.len(),
            window,
        )
    }

    /// Build from pre-canonicalized `(u, v, weight)` pairs (`u != v`).
    /// Duplicate pairs sum their weights.
    pub fn from_weighted_pairs<I>(pairs: I, id_space: usize, window: YearRange) -> Self
    where
        I: IntoIterator<Item = (NodeId, NodeId, u32)>,
    {
        let mut agg: HashMap<(NodeId, NodeId), u32> = HashMap::new();
        for (a, b, w) in pairs {
            debug_assert!(a != b, "self-loops are rejected at ingest");
            let key = if a < b { (a, b) } else { (b, a) };
            *agg.entry(key).or_insert(0) += w;
        }
        let edge_count = agg.len();

        let mut degree = vec![0usize; id_space];
        for &(u, v) in agg.keys() {
            degree[u.index()] += 1;
            degree[v.index()] += 1;
        }
        let mut offsets = Vec::with_capacity(id_space + 1);
        offsets.push(0usize);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        let mut neighbors = vec![NodeId(0); total];
        let mut weights = vec![0u32; total];
        let mut cursor = offsets[..id_space].to_vec();
        for (&(u, v), &w) in &agg {
            neighbors[cursor[u.index()]] = v;
            weights[cursor[u.index()]] = w;
            cursor[u.index()] += 1;
            neighbors[cursor[v.index()]] = u;
            weights[cursor[v.index()]] = w;
            cursor[v.index()] += 1;
        }
        // Sort each neighbor run ascending, carrying weights along.
        for u in 0..id_space {
            let (lo, hi) = (offsets[u], offsets[u + 1]);
            if hi - lo > 1 {
                let mut zipped: Vec<(NodeId, u32)> = neighbors[lo..hi]
                    .iter()
                    .copied()
                    .zip(weights[lo..hi].iter().copied())
                    .collect();
                zipped.sort_unstable_by_key(|&(n, _)| n);
                for (i, (n, w)) in zipped.into_iter().enumerate() {
                    neighbors[lo + i] = n;
                    weights[lo + i] = w;
                }
            }
        }
        let node_count = degree.iter().filter(|&&d| d > 0).count();

        GraphSnapshot {
            window,
            offsets,
            neighbors,
            weights,
            edge_count,
            node_count,
        }
    }

    pub fn window(&self) -> YearRange {
        self.window
    }

    /// Size of the dense-id space the adjacency is defined over.
    pub fn id_space(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of nodes with at least one edge in the window.
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn contains(&self, u: NodeId) -> bool {
        u.index() < self.id_space()
    }

    fn check(&self, u: NodeId) -> Result<()> {
        if self.contains(u) {
            Ok(())
        } else {
            Err(Error::UnknownNode(u.0))
        }
    }

    /// Sorted neighbor list of `u`. Panics if `u` is out of the id space.
    #[inline]
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        let (lo, hi) = (self.offsets[u.index()], self.offsets[u.index() + 1]);
        &self.neighbors[lo..hi]
    }

    /// Neighbor list paired with aggregated weights.
    pub fn neighbors_weighted(&self, u: NodeId) -> (&[NodeId], &[u32]) {
        let (lo, hi) = (self.offsets[u.index()], self.offsets[u.index() + 1]);
        (&self.neighbors[lo..hi], &self.weights[lo..hi])
    }

    #[inline]
    pub fn degree(&self, u: NodeId) -> usize {
        self.offsets[u.index() + 1] - self.offsets[u.index()]
    }

    /// Fallible neighbor access for operations with an unknown-node error contract.
    pub fn try_neighbors(&self, u: NodeId) -> Result<&[NodeId]> {
        self.check(u)?;
        Ok(self.neighbors(u))
    }

    pub fn try_degree(&self, u: NodeId) -> Result<usize> {
        self.check(u)?;
        Ok(self.degree(u))
    }

    #[inline]
    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Aggregated weight of edge (u, v), if adjacent.
    pub fn edge_weight(&self, u: NodeId, v: NodeId) -> Option<u32> {
        let (ns, ws) = self.neighbors_weighted(u);
        ns.binary_search(&v).ok().map(|i| ws[i])
    }

    /// All node ids in the adjacency domain (including degree-0 nodes).
    pub fn all_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.id_space() as u32).map(NodeId)
    }

    /// Nodes with degree >= 1 in the window.
    pub fn active_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.all_nodes().filter(move |&u| self.degree(u) > 0)
    }

    /// Canonical (u < v) edge iterator with aggregated weights.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, u32)> + '_ {
        self.all_nodes().flat_map(move |u| {
            let (ns, ws) = self.neighbors_weighted(u);
            ns.iter()
                .zip(ws.iter())
                .filter(move |(&v, _)| u < v)
                .map(move |(&v, &w)| (u, v, w))
        })
    }

    /// Canonical pair set as a sorted vector (test and classification helper).
    pub fn edge_pairs(&self) -> Vec<(NodeId, NodeId)> {
        self.edges().map(|(u, v, _)| (u, v)).collect()
    }

    /// Sum of all edge weights.
    pub fn total_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w as f64).sum()
    }

    /// Write the adjacency as CSV rows `src,dst,weight` keyed by external ids,
    /// sorted lexicographically. The output is invariant under dense-index
    /// permutation, so re-ingesting an exported edge file reproduces it.
    pub fn export_csv<W: Write>(&self, ids: &IdMap, mut w: W) -> Result<()> {
        let io_err = |e: std::io::Error| Error::io("<snapshot export>", e);
        let mut rows: Vec<(String, String, u32)> = self
            .edges()
            .map(|(u, v, wt)| {
                let a = ids.name(u).unwrap_or("").to_string();
                let b = ids.name(v).unwrap_or("").to_string();
                if a <= b {
                    (a, b, wt)
                } else {
                    (b, a, wt)
                }
            })
            .collect();
        rows.sort();
        writeln!(w, "src,dst,weight").map_err(io_err)?;
        for (a, b, wt) in rows {
            writeln!(w, "{a},{b},{wt}").map_err(io_err)?;
        }
        Ok(())
    }

    /// Binary snapshot dump: magic, window, CSR arrays, then the id table.
    /// Deterministic byte-for-byte for identical inputs.
    pub fn export_binary<W: Write>(&self, ids: &IdMap, w: W) -> Result<()> {
        let io_err = |e: std::io::Error| Error::io("<snapshot export>", e);
        let mut w = BufWriter::new(w);
        w.write_all(SNAPSHOT_MAGIC).map_err(io_err)?;
        w.write_all(&self.window.start.to_le_bytes()).map_err(io_err)?;
        w.write_all(&self.window.end.to_le_bytes()).map_err(io_err)?;
        w.write_all(&(self.id_space() as u64).to_le_bytes()).map_err(io_err)?;
        w.write_all(&(self.neighbors.len() as u64).to_le_bytes()).map_err(io_err)?;
        for &o in &self.offsets {
            w.write_all(&(o as u64).to_le_bytes()).map_err(io_err)?;
        }
        for &n in &self.neighbors {
            w.write_all(&n.0.to_le_bytes()).map_err(io_err)?;
        }
        for &wt in &self.weights {
            w.write_all(&wt.to_le_bytes()).map_err(io_err)?;
        }
        w.write_all(&(ids.len() as u64).to_le_bytes()).map_err(io_err)?;
        for (_, name) in ids.iter() {
            let bytes = name.as_bytes();
            w.write_all(&(bytes.len() as u32).to_le_bytes()).map_err(io_err)?;
            w.write_all(bytes).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    pub fn import_binary<R: Read>(r: R) -> Result<(Self, IdMap)> {
        let mut r = BufReader::new(r);
        let io_err = |e: std::io::Error| Error::io("<snapshot import>", e);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io_err)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::Other("bad snapshot magic".into()));
        }
        let mut buf4 = [0u8; 4];
        let mut buf8 = [0u8; 8];
        r.read_exact(&mut buf4).map_err(io_err)?;
        let start = i32::from_le_bytes(buf4);
        r.read_exact(&mut buf4).map_err(io_err)?;
        let end = i32::from_le_bytes(buf4);
        r.read_exact(&mut buf8).map_err(io_err)?;
        let id_space = u64::from_le_bytes(buf8) as usize;
        r.read_exact(&mut buf8).map_err(io_err)?;
        let half_edges = u64::from_le_bytes(buf8) as usize;

        let mut offsets = Vec::with_capacity(id_space + 1);
        for _ in 0..=id_space {
            r.read_exact(&mut buf8).map_err(io_err)?;
            offsets.push(u64::from_le_bytes(buf8) as usize);
        }
        let mut neighbors = Vec::with_capacity(half_edges);
        for _ in 0..half_edges {
            r.read_exact(&mut buf4).map_err(io_err)?;
            neighbors.push(NodeId(u32::from_le_bytes(buf4)));
        }
        let mut weights = Vec::with_capacity(half_edges);
        for _ in 0..half_edges {
            r.read_exact(&mut buf4).map_err(io_err)?;
            weights.push(u32::from_le_bytes(buf4));
        }
        r.read_exact(&mut buf8).map_err(io_err)?;
        let n_ids = u64::from_le_bytes(buf8) as usize;
        let mut ids = IdMap::new();
        for _ in 0..n_ids {
            r.read_exact(&mut buf4).map_err(io_err)?;
            let len = u32::from_le_bytes(buf4) as usize;
            let mut s = vec![0u8; len];
            r.read_exact(&mut s).map_err(io_err)?;
            ids.intern(&String::from_utf8(s).map_err(|e| Error::Other(e.to_string()))?);
        }

        let node_count = (0..id_space).filter(|&u| offsets[u + 1] > offsets[u]).count();
        let edge_count = half_edges / 2;
        Ok((
            GraphSnapshot {
                window: YearRange::new(start, end),
                offsets,
                neighbors,
                weights,
                edge_count,
                node_count,
            },
            ids,
        ))
    }
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"LPSNAP01";

/// Sorted-slice intersection size; the shared kernel for CN-family heuristics.
#[inline]
pub fn intersection_count(a: &[NodeId], b: &[NodeId]) -> usize {
    let (mut i, mut j, mut n) = (0usize, 0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// True if the sorted slices share at least one element (early exit).
#[inline]
pub fn intersects(a: &[NodeId], b: &[NodeId]) -> bool {
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}
