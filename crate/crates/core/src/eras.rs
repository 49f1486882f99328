//! Era definitions, growth statistics, boundary detection, and
//! continued/new/dropped edge classification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeTable, GraphSnapshot, NodeId, YearRange};

/// Named train/eval split of the temporal edge stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EraConfig {
    pub name: String,
    pub train_windows: Vec<YearRange>,
    pub eval_window: YearRange,
}

impl EraConfig {
    pub fn new(
        name: impl Into<String>,
        train_windows: Vec<YearRange>,
        eval_window: YearRange,
    ) -> Result<Self> {
        let era = EraConfig {
            name: name.into(),
            train_windows,
            eval_window,
        };
        era.validate()?;
        Ok(era)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |message: &str| Error::InvalidEra {
            name: self.name.clone(),
            message: message.into(),
        };
        if self.train_windows.is_empty() {
            return Err(invalid("at least one train window required"));
        }
        let mut windows = self.train_windows.clone();
        windows.push(self.eval_window);
        for w in &windows {
            if w.start > w.end {
                return Err(invalid("window start exceeds end"));
            }
        }
        for i in 0..windows.len() {
            for j in (i + 1)..windows.len() {
                if windows[i].overlaps(&windows[j]) {
                    return Err(invalid("windows within one era must not overlap"));
                }
            }
        }
        let latest_train_end = self.train_windows.iter().map(|w| w.end).max().unwrap();
        if self.eval_window.start <= latest_train_end {
            return Err(invalid(
                "eval window must start strictly after the latest train window ends",
            ));
        }
        Ok(())
    }

    /// Union of the train windows as a single inclusive span.
    /// Training snapshots merge multiple windows with weight summation.
    pub fn train_span(&self) -> YearRange {
        let start = self.train_windows.iter().map(|w| w.start).min().unwrap();
        let end = self.train_windows.iter().map(|w| w.end).max().unwrap();
        YearRange::new(start, end)
    }

    /// Build the merged training snapshot (multi-window union, weights summed).
    pub fn train_snapshot(&self, table: &EdgeTable) -> GraphSnapshot {
        let span = self.train_span();
        GraphSnapshot::from_weighted_pairs(
            table
                .edges
                .iter()
                .filter(|e| self.train_windows.iter().any(|w| w.contains(e.year)))
                .map(|e| (e.u, e.v, e.weight)),
            table.ids.len(),
            span,
        )
    }

    pub fn eval_snapshot(&self, table: &EdgeTable) -> GraphSnapshot {
        GraphSnapshot::build(table, self.eval_window)
    }
}

/// The three-era default split used throughout the toolkit; overridable
/// through the run config.
pub fn default_eras() -> Vec<EraConfig> {
    vec![
        EraConfig::new(
            "era1",
            vec![YearRange::new(2004, 2005), YearRange::new(2006, 2007)],
            YearRange::new(2008, 2009),
        )
        .unwrap(),
        EraConfig::new(
            "era2",
            vec![
                YearRange::new(2010, 2011),
                YearRange::new(2012, 2013),
                YearRange::new(2014, 2015),
            ],
            YearRange::new(2016, 2017),
        )
        .unwrap(),
        EraConfig::new(
            "era3",
            vec![YearRange::new(2018, 2019), YearRange::new(2020, 2021)],
            YearRange::new(2022, 2023),
        )
        .unwrap(),
    ]
}

/// Edge fate across the train/eval split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeClass {
    /// Present in both the training and evaluation periods.
    Continued,
    /// Present in the evaluation period only.
    New,
    /// Present in the training period only.
    Dropped,
}

impl std::fmt::Display for EdgeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EdgeClass::Continued => write!(f, "continued"),
            EdgeClass::New => write!(f, "new"),
            EdgeClass::Dropped => write!(f, "dropped"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub continued: usize,
    pub new: usize,
    pub dropped: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.continued + self.new + self.dropped
    }
}

/// Classification of every pair in train ∪ eval, sorted by canonical pair.
#[derive(Debug, Clone, Default)]
pub struct EdgeClassification {
    entries: Vec<((NodeId, NodeId), EdgeClass)>,
    counts: ClassCounts,
}

impl EdgeClassification {
    pub fn class_of(&self, u: NodeId, v: NodeId) -> Option<EdgeClass> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.entries
            .binary_search_by_key(&key, |(p, _)| *p)
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn counts(&self) -> ClassCounts {
        self.counts
    }

    pub fn iter(&self) -> impl Iterator<Item = ((NodeId, NodeId), EdgeClass)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All pairs with the given class, in canonical order.
    pub fn pairs_with_class(&self, class: EdgeClass) -> Vec<(NodeId, NodeId)> {
        self.entries
            .iter()
            .filter(|(_, c)| *c == class)
            .map(|(p, _)| *p)
            .collect()
    }
}

/// Classify every pair appearing in either snapshot:
/// both -> Continued, eval only -> New, train only -> Dropped.
pub fn classify_edges(train: &GraphSnapshot, eval: &GraphSnapshot) -> EdgeClassification {
    let train_pairs = train.edge_pairs();
    let eval_pairs = eval.edge_pairs();
    let mut entries = Vec::with_capacity(train_pairs.len() + eval_pairs.len());

    let (mut i, mut j) = (0usize, 0usize);
    while i < train_pairs.len() || j < eval_pairs.len() {
        let next = match (train_pairs.get(i), eval_pairs.get(j)) {
            (Some(&t), Some(&e)) => match t.cmp(&e) {
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                    (t, EdgeClass::Continued)
                }
                std::cmp::Ordering::Less => {
                    i += 1;
                    (t, EdgeClass::Dropped)
                }
                std::cmp::Ordering::Greater => {
                    j += 1;
                    (e, EdgeClass::New)
                }
            },
            (Some(&t), None) => {
                i += 1;
                (t, EdgeClass::Dropped)
            }
            (None, Some(&e)) => {
                j += 1;
                (e, EdgeClass::New)
            }
            (None, None) => unreachable!(),
        };
        entries.push(next);
    }

    let mut counts = ClassCounts::default();
    for (_, c) in &entries {
        match c {
            EdgeClass::Continued => counts.continued += 1,
            EdgeClass::New => counts.new += 1,
            EdgeClass::Dropped => counts.dropped += 1,
        }
    }
    EdgeClassification { entries, counts }
}

/// Scale statistics for one aggregation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub window: YearRange,
    pub authors: usize,
    pub edges: usize,
    pub avg_degree: f64,
    /// Edge count ratio vs the previous window; absent for the first window
    /// or when the previous window is empty.
    pub edge_growth: Option<f64>,
    pub edges_per_author: f64,
}

/// Per-window author/edge counts, average degree, growth ratio vs the
/// previous window, and edges-per-author.
pub fn window_stats(table: &EdgeTable, windows: &[YearRange]) -> Vec<WindowStats> {
    let rows: Vec<(YearRange, usize, usize)> = windows
        .iter()
        .map(|&window| {
            // Distinct pairs, not per-year multi-rows.
            let mut pairs: BTreeMap<(NodeId, NodeId), ()> = BTreeMap::new();
            let mut authors: BTreeMap<NodeId, ()> = BTreeMap::new();
            for e in table.edges.iter().filter(|e| window.contains(e.year)) {
                pairs.insert((e.u, e.v), ());
                authors.insert(e.u, ());
                authors.insert(e.v, ());
            }
            (window, authors.len(), pairs.len())
        })
        .collect();
    stats_from_counts(&rows)
}

/// Growth arithmetic over pre-counted `(window, authors, edges)` rows.
/// Lets callers evaluate growth directly from published or cached counts.
pub fn stats_from_counts(rows: &[(YearRange, usize, usize)]) -> Vec<WindowStats> {
    let mut out = Vec::with_capacity(rows.len());
    let mut prev_edges: Option<usize> = None;
    for &(window, authors, edges) in rows {
        let avg_degree = if authors > 0 {
            2.0 * edges as f64 / authors as f64
        } else {
            0.0
        };
        let edge_growth = match prev_edges {
            Some(p) if p > 0 => Some(edges as f64 / p as f64),
            _ => None,
        };
        out.push(WindowStats {
            window,
            authors,
            edges,
            avg_degree,
            edge_growth,
            edges_per_author: if authors > 0 {
                edges as f64 / authors as f64
            } else {
                0.0
            },
        });
        prev_edges = Some(edges);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// Edge growth at or above the spike threshold.
    Spike,
    /// Edge growth at or below the deceleration threshold while author
    /// growth outpaces edge growth.
    Deceleration,
}

/// A detected era boundary between `before` and `after` windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    /// Index into the stats list of the window whose growth triggered the flag.
    pub window_index: usize,
    pub before: YearRange,
    pub after: YearRange,
    pub kind: BoundaryKind,
    pub edge_growth: f64,
    pub author_growth: Option<f64>,
}

/// Flag boundaries from growth inflections: a spike (edge growth >= `spike`)
/// or a deceleration (edge growth <= `decel` while author growth exceeds
/// edge growth). The boundary sits before the triggering window.
pub fn detect_boundaries(stats: &[WindowStats], spike: f64, decel: f64) -> Vec<Boundary> {
    let mut out = Vec::new();
    for i in 1..stats.len() {
        let Some(edge_growth) = stats[i].edge_growth else {
            continue;
        };
        let author_growth = if stats[i - 1].authors > 0 {
            Some(stats[i].authors as f64 / stats[i - 1].authors as f64)
        } else {
            None
        };
        let kind = if edge_growth >= spike {
            Some(BoundaryKind::Spike)
        } else if edge_growth <= decel && author_growth.map_or(false, |a| a > edge_growth) {
            Some(BoundaryKind::Deceleration)
        } else {
            None
        };
        if let Some(kind) = kind {
            out.push(Boundary {
                window_index: i,
                before: stats[i - 1].window,
                after: stats[i].window,
                kind,
                edge_growth,
                author_growth,
            });
        }
    }
    out
}

pub const DEFAULT_SPIKE_THRESHOLD: f64 = 2.0;
pub const DEFAULT_DECEL_THRESHOLD: f64 = 1.0;
