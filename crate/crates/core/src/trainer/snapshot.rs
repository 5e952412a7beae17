//! Text snapshot of a [`RewriteTable`].
//!
//! ```text
//! #version=1
//! #config: alpha=0.5 beta=0.2 tau=2 t=60 min_count=5 abandonment=zero-click
//! #records=123456
//! #built_at=1600086399
//! rocks and\troxanne\t6\t0.6
//! ```
//!
//! Entries are sorted by query and keys are unique, so equal tables always
//! serialize to identical bytes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::rewrite::fingerprint;
use super::{RewriteEntry, RewriteTable, TableMetadata, TrainerConfig};
use crate::error::{Error, Result};
use crate::query::{normalize, NormalizedQuery};

pub const SNAPSHOT_VERSION: u32 = 1;

pub(crate) fn to_snapshot_string(table: &RewriteTable) -> String {
    let meta = table.metadata();
    let mut out = String::with_capacity(64 + table.len() * 48);
    let _ = writeln!(out, "#version={}", meta.version);
    let _ = writeln!(out, "#config: {}", format_config(&meta.config));
    let _ = writeln!(out, "#records={}", meta.records);
    let _ = writeln!(out, "#built_at={}", meta.built_at);
    for (q, e) in table.sorted_entries() {
        let _ = writeln!(out, "{q}\t{}\t{}\t{}", e.correction, e.pair_count, e.ratio);
    }
    out
}

fn format_config(c: &TrainerConfig) -> String {
    let mut s = format!(
        "alpha={} beta={} tau={} t={} min_count={} abandonment={}",
        c.alpha,
        c.beta,
        c.tau,
        c.t_window,
        c.min_query_count,
        c.abandonment.as_str()
    );
    if let Some(x) = c.tau_normalized {
        let _ = write!(s, " tau_normalized={x}");
    }
    s
}

fn parse_config(s: &str, line: usize) -> Result<TrainerConfig> {
    let bad = |reason: String| Error::SnapshotCorrupt { line, reason };
    let mut c = TrainerConfig::default();
    for token in s.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| bad(format!("config token {token:?} lacks '='")))?;
        let invalid = |_| bad(format!("bad value for {key}: {value:?}"));
        match key {
            "alpha" => c.alpha = value.parse().map_err(invalid)?,
            "beta" => c.beta = value.parse().map_err(invalid)?,
            "tau" => c.tau = value.parse().map_err(|_| bad(format!("bad tau {value:?}")))?,
            "t" => c.t_window = value.parse().map_err(|_| bad(format!("bad t {value:?}")))?,
            "min_count" => {
                c.min_query_count = value.parse().map_err(|_| bad(format!("bad min_count {value:?}")))?
            }
            "abandonment" => c.abandonment = value.parse().map_err(invalid)?,
            "tau_normalized" => {
                c.tau_normalized = Some(value.parse().map_err(|_| bad(format!("bad tau_normalized {value:?}")))?)
            }
            other => return Err(bad(format!("unknown config key {other:?}"))),
        }
    }
    Ok(c)
}

fn header_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.strip_prefix('#')?.strip_prefix(key)?.strip_prefix('=')
}

/// Parses snapshot text, rejecting version mismatches, duplicate or unsorted
/// keys, self-rewrites and non-canonical queries.
pub fn parse_snapshot(text: &str) -> Result<RewriteTable> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let corrupt = |line: usize, reason: &str| Error::SnapshotCorrupt {
        line,
        reason: reason.to_owned(),
    };

    let (n, first) = lines.next().ok_or_else(|| corrupt(1, "empty snapshot"))?;
    let found = header_value(first, "version").ok_or_else(|| corrupt(n, "missing #version header"))?;
    if found.parse::<u32>().ok() != Some(SNAPSHOT_VERSION) {
        return Err(Error::SnapshotVersion {
            found: found.to_owned(),
            expected: SNAPSHOT_VERSION,
        });
    }

    let mut config = None;
    let mut records = None;
    let mut built_at = 0;
    let mut entries: HashMap<NormalizedQuery, RewriteEntry> = HashMap::new();
    let mut previous: Option<NormalizedQuery> = None;

    let mut in_header = true;
    for (n, line) in lines {
        if in_header {
            if let Some(rest) = line.strip_prefix("#config:") {
                config = Some(parse_config(rest, n)?);
                continue;
            } else if let Some(v) = header_value(line, "records") {
                records = Some(v.parse().map_err(|_| corrupt(n, "bad #records"))?);
                continue;
            } else if let Some(v) = header_value(line, "built_at") {
                built_at = v.parse().map_err(|_| corrupt(n, "bad #built_at"))?;
                continue;
            }
            in_header = false;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [query, correction, count, ratio] = fields[..] else {
            return Err(corrupt(n, "expected 4 tab-separated fields"));
        };
        let canonical = |s: &str| match normalize(s) {
            Ok(q) if q.as_str() == s => Ok(q),
            _ => Err(corrupt(n, "query is not in normalized form")),
        };
        let query = canonical(query)?;
        let correction = canonical(correction)?;
        if query == correction {
            return Err(corrupt(n, "entry rewrites a query to itself"));
        }
        if let Some(prev) = &previous {
            if *prev == query {
                return Err(corrupt(n, "duplicate query"));
            }
            if *prev > query {
                return Err(corrupt(n, "entries are not sorted by query"));
            }
        }
        let pair_count = count.parse().map_err(|_| corrupt(n, "bad pair count"))?;
        let ratio: f64 = ratio.parse().map_err(|_| corrupt(n, "bad ratio"))?;
        if !(0.0..=1.0).contains(&ratio) {
            return Err(corrupt(n, "ratio outside [0, 1]"));
        }
        previous = Some(query.clone());
        entries.insert(
            query,
            RewriteEntry {
                correction,
                pair_count,
                ratio,
            },
        );
    }

    let metadata = TableMetadata {
        version: SNAPSHOT_VERSION,
        config: config.ok_or_else(|| corrupt(1, "missing #config header"))?,
        records: records.ok_or_else(|| corrupt(1, "missing #records header"))?,
        built_at,
    };
    Ok(RewriteTable::from_parts(entries, metadata, fingerprint(text.as_bytes())))
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<RewriteTable> {
    let path = path.as_ref();
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(Error::SnapshotMissing(path.to_owned()))
        }
        Err(e) => return Err(e.into()),
    };
    parse_snapshot(&text)
}

/// Writes the snapshot through a temporary file in the target directory and
/// renames it into place, so readers never see a partial file.
pub fn write_snapshot(table: &RewriteTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(to_snapshot_string(table).as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

impl RewriteTable {
    pub fn to_snapshot_string(&self) -> String {
        to_snapshot_string(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> NormalizedQuery {
        normalize(s).unwrap()
    }

    fn entry(c: &str, n: u64, r: f64) -> RewriteEntry {
        RewriteEntry {
            correction: q(c),
            pair_count: n,
            ratio: r,
        }
    }

    fn meta() -> TableMetadata {
        TableMetadata {
            version: SNAPSHOT_VERSION,
            config: TrainerConfig::default(),
            records: 42,
            built_at: 1_600_000_000,
        }
    }

    fn three() -> RewriteTable {
        RewriteTable::new(
            [
                (q("rocks and"), entry("roxanne", 6, 0.6)),
                (q("how stores"), entry("house tours", 9, 0.45)),
                (q("look out music"), entry("work out music", 7, 1.0 / 3.0)),
            ],
            meta(),
        )
    }

    #[test]
    fn canonical_text() {
        let text = three().to_snapshot_string();
        let expected = "#version=1\n\
            #config: alpha=0.5 beta=0.2 tau=2 t=60 min_count=5 abandonment=zero-click\n\
            #records=42\n\
            #built_at=1600000000\n\
            how stores\thouse tours\t9\t0.45\n\
            look out music\twork out music\t7\t0.3333333333333333\n\
            rocks and\troxanne\t6\t0.6\n";
        assert_eq!(text, expected);
        let parsed = parse_snapshot(&text).unwrap();
        assert_eq!(parsed.len(), 3);
        assert_eq!(parsed, three());
        assert_eq!(parsed.version_tag(), three().version_tag());
    }

    #[test]
    fn header_only_is_empty_table() {
        let t = parse_snapshot(&RewriteTable::empty(TrainerConfig::default()).to_snapshot_string()).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn rejects_duplicates_and_disorder() {
        let head = "#version=1\n#config: alpha=0.5\n#records=1\n";
        let dup = format!("{head}a\tb\t1\t0.5\na\tc\t1\t0.5\n");
        let unsorted = format!("{head}b\tc\t1\t0.5\na\tc\t1\t0.5\n");
        let selfmap = format!("{head}a\ta\t1\t0.5\n");
        let fields = format!("{head}a\tb\t1\n");
        let upper = format!("{head}A\tb\t1\t0.5\n");
        for (text, needle) in [
            (dup, "duplicate"),
            (unsorted, "sorted"),
            (selfmap, "itself"),
            (fields, "fields"),
            (upper, "normalized"),
        ] {
            match parse_snapshot(&text) {
                Err(Error::SnapshotCorrupt { reason, .. }) => assert!(reason.contains(needle), "{reason}"),
                other => panic!("expected corrupt error, got {other:?}"),
            }
        }
    }

    #[test]
    fn rejects_other_versions() {
        let err = parse_snapshot("#version=2\n#config: \n#records=0\n").unwrap_err();
        assert!(matches!(err, Error::SnapshotVersion { .. }));
    }

    #[test]
    fn missing_file_is_distinct() {
        let err = load_snapshot("/nonexistent/snapshot.tsv").unwrap_err();
        assert!(matches!(err, Error::SnapshotMissing(_)));
    }

    #[test]
    fn atomic_write_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.tsv");
        write_snapshot(&three(), &path).unwrap();
        let loaded = load_snapshot(&path).unwrap();
        assert_eq!(loaded, three());
        assert_eq!(std::fs::read_to_string(&path).unwrap(), three().to_snapshot_string());
    }

    proptest! {
        #[test]
        fn snapshot_round_trip(
            rows in prop::collection::btree_map("[a-z]{1,6}( [a-z]{1,6}){0,2}", ("[a-z]{1,8}", 1u64..1000, 1u64..1000), 0..30),
            alpha in 0u32..=100,
            tau in 0u32..6,
        ) {
            let entries: Vec<_> = rows
                .into_iter()
                .filter(|(k, (c, _, _))| k != c)
                .map(|(k, (c, n, d))| (q(&k), entry(&c, n, n.min(d) as f64 / d.max(n) as f64)))
                .collect();
            let mut m = meta();
            m.config.alpha = format!("{}", alpha as f64 / 100.0).parse().unwrap();
            m.config.tau = tau;
            let table = RewriteTable::new(entries, m);
            let text = table.to_snapshot_string();
            let parsed = parse_snapshot(&text).unwrap();
            prop_assert_eq!(&parsed, &table);
            prop_assert_eq!(parsed.to_snapshot_string(), text);
        }
    }
}
