//! Author metadata profiles: the carrier for metadata features and LLM prompts.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AuthorId, IdMap, NodeId};

/// Per-year work/citation counts, as reported by the OpenAlex API.
/// Optional sidecar data used by era-restricted prompt variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearCounts {
    pub year: i32,
    pub works_count: u64,
    pub cited_by_count: u64,
}

/// Metadata record for one author.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorProfile {
    pub id: AuthorId,
    #[serde(default)]
    pub display_name: String,
    #[serde(default)]
    pub institution: String,
    #[serde(default)]
    pub country_code: String,
    #[serde(default)]
    pub continent: String,
    #[serde(default)]
    pub works_count: u64,
    #[serde(default)]
    pub cited_by_count: u64,
    /// Ordered most-salient-first; no duplicates.
    #[serde(default)]
    pub concepts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ethnicity: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub counts_by_year: Vec<YearCounts>,
}

impl AuthorProfile {
    pub fn new(id: impl Into<AuthorId>) -> Self {
        AuthorProfile {
            id: id.into(),
            display_name: String::new(),
            institution: String::new(),
            country_code: String::new(),
            continent: String::new(),
            works_count: 0,
            cited_by_count: 0,
            concepts: Vec::new(),
            ethnicity: None,
            counts_by_year: Vec::new(),
        }
    }
}

/// Profiles keyed by external author id, with a dense-index lookup helper.
#[derive(Debug, Clone, Default)]
pub struct ProfileStore {
    by_id: HashMap<AuthorId, AuthorProfile>,
}

impl ProfileStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, profile: AuthorProfile) -> Option<AuthorProfile> {
        self.by_id.insert(profile.id.clone(), profile)
    }

    pub fn get(&self, id: &str) -> Option<&AuthorProfile> {
        self.by_id.get(id)
    }

    /// Profile of a graph node, resolved through the id map. `None` is an
    /// explicit missing-profile marker; callers must not substitute zeros.
    pub fn for_node<'a>(&'a self, ids: &IdMap, node: NodeId) -> Option<&'a AuthorProfile> {
        ids.name(node).and_then(|name| self.get(name))
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &AuthorProfile> {
        self.by_id.values()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileIngestStats {
    pub records: u64,
    pub duplicate_ids: u64,
}

/// Read a JSON-Lines profile file (one object per author).
///
/// Duplicate ids keep the last record and emit a warning; a record without
/// an `id` field is a fatal per-line error. Missing optional fields default
/// to empty/absent. Blank lines and `#` comment lines are skipped.
pub fn ingest_profiles(path: &Path) -> Result<(ProfileStore, ProfileIngestStats)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_profiles_reader(BufReader::new(file))
}

pub fn ingest_profiles_reader<R: Read>(reader: R) -> Result<(ProfileStore, ProfileIngestStats)> {
    let mut store = ProfileStore::new();
    let mut stats = ProfileIngestStats::default();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = (i + 1) as u64;
        let line = line.map_err(|e| Error::io("<profiles>", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(trimmed).map_err(|e| Error::MalformedRow {
                line: line_no,
                message: e.to_string(),
            })?;
        if value.get("id").and_then(|v| v.as_str()).is_none() {
            return Err(Error::MalformedRow {
                line: line_no,
                message: "missing required `id` field".into(),
            });
        }
        let profile: AuthorProfile =
            serde_json::from_value(value).map_err(|e| Error::MalformedRow {
                line: line_no,
                message: e.to_string(),
            })?;
        stats.records += 1;
        if store.insert(profile).is_some() {
            stats.duplicate_ids += 1;
            log::warn!("duplicate profile id at line {line_no}; last record wins");
        }
    }
    Ok((store, stats))
}

/// Write profiles as JSON Lines, sorted by id for deterministic output.
pub fn export_profiles<W: Write>(store: &ProfileStore, mut w: W) -> Result<()> {
    let mut profiles: Vec<&AuthorProfile> = store.iter().collect();
    profiles.sort_by(|a, b| a.id.cmp(&b.id));
    for p in profiles {
        serde_json::to_writer(&mut w, p)?;
        writeln!(w).map_err(|e| Error::io("<profiles export>", e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_record_roundtrips() {
        let line = r#"{"id":"A1","display_name":"Ada","institution":"X Lab","country_code":"GB","continent":"Europe","works_count":10,"cited_by_count":99,"concepts":["ML","CV","NLP","IR","HCI"],"ethnicity":"White"}"#;
        let (store, stats) = ingest_profiles_reader(line.as_bytes()).unwrap();
        assert_eq!(stats.records, 1);
        let p = store.get("A1").unwrap();
        assert_eq!(p.concepts.len(), 5);
        assert_eq!(p.concepts[0], "ML");
        assert_eq!(p.ethnicity.as_deref(), Some("White"));
    }

    #[test]
    fn missing_ethnicity_stays_absent() {
        let line = r#"{"id":"A1","display_name":"Ada","works_count":1,"cited_by_count":2,"concepts":[]}"#;
        let (store, _) = ingest_profiles_reader(line.as_bytes()).unwrap();
        let p = store.get("A1").unwrap();
        assert!(p.ethnicity.is_none());
        assert!(p.institution.is_empty());
    }

    #[test]
    fn duplicate_id_last_wins_with_warning_count() {
        let lines = concat!(
            r#"{"id":"A1","display_name":"First"}"#, "\n",
            r#"{"id":"A2","display_name":"Other"}"#, "\n",
            r#"{"id":"A1","display_name":"Second"}"#, "\n",
        );
        let (store, stats) = ingest_profiles_reader(lines.as_bytes()).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(stats.duplicate_ids, 1);
        assert_eq!(store.get("A1").unwrap().display_name, "Second");
    }

    #[test]
    fn missing_id_is_fatal_with_line() {
        let lines = concat!(
            r#"{"id":"A1"}"#, "\n",
            r#"{"display_name":"NoId"}"#, "\n",
        );
        let err = ingest_profiles_reader(lines.as_bytes()).unwrap_err();
        match err {
            Error::MalformedRow { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn export_import_identity() {
        let mut store = ProfileStore::new();
        let mut p = AuthorProfile::new("A9");
        p.display_name = "Zo\u{eb}".into();
        p.concepts = vec!["Machine learning".into(), "Graphs".into()];
        p.counts_by_year = vec![YearCounts { year: 2005, works_count: 3, cited_by_count: 7 }];
        store.insert(p.clone());
        let mut buf = Vec::new();
        export_profiles(&store, &mut buf).unwrap();
        let (store2, _) = ingest_profiles_reader(buf.as_slice()).unwrap();
        assert_eq!(store2.get("A9"), Some(&p));
    }
}
