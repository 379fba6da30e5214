use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use super::GatewayError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub content: String,
    pub model: String,
}

/// Recorded responses keyed by request fingerprint.
///
/// On disk: `{ "entries": { "<hex fingerprint>": { "content": ..., "model": ... } } }`
/// with keys written in sorted order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cassette {
    #[serde(deserialize_with = "deserialize_entries")]
    entries: BTreeMap<String, CassetteEntry>,
}

impl Cassette {
    pub fn from_json(json: &str) -> Result<Self, String> {
        let cassette: Cassette = serde_json::from_str(json).map_err(|e| e.to_string())?;
        if let Some(bad) = cassette.entries.keys().find(|k| !is_fingerprint(k)) {
            return Err(format!("`{bad}` is not a hex SHA-256 fingerprint"));
        }
        Ok(cassette)
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let load_err = |message: String| GatewayError::CassetteLoad {
            path: path.display().to_string(),
            message,
        };
        let json = std::fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        Cassette::from_json(&json).map_err(load_err)
    }

    pub fn to_json(&self) -> String {
        let mut json = serde_json::to_string_pretty(self).expect("cassette serializes");
        json.push('\n');
        json
    }

    /// Writes via a temporary file in the same directory and renames it into
    /// place, so readers never observe a partially written cassette.
    pub fn save(&self, path: &Path) -> Result<(), GatewayError> {
        write_atomic(path, self.to_json().as_bytes()).map_err(|source| {
            GatewayError::CassetteWrite {
                path: path.display().to_string(),
                source,
            }
        })
    }

    pub fn get(&self, fingerprint: &str) -> Option<&CassetteEntry> {
        self.entries.get(fingerprint)
    }

    /// Inserts or overwrites; returns the previous entry.
    pub fn insert(&mut self, fingerprint: String, entry: CassetteEntry) -> Option<CassetteEntry> {
        self.entries.insert(fingerprint, entry)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &CassetteEntry)> {
        self.entries.iter()
    }

    pub fn entries_mut(&mut self) -> impl Iterator<Item = (&String, &mut CassetteEntry)> {
        self.entries.iter_mut()
    }
}

fn is_fingerprint(key: &str) -> bool {
    key.len() == 64 && key.bytes().all(|b| b.is_ascii_hexdigit())
}

/// Writes `bytes` to `path` through a same-directory temp file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

// JSON objects may repeat keys; a repeated fingerprint is only tolerated when
// it maps to the same response.
fn deserialize_entries<'de, D>(deserializer: D) -> Result<BTreeMap<String, CassetteEntry>, D::Error>
where
    D: Deserializer<'de>,
{
    struct EntriesVisitor;

    impl<'de> Visitor<'de> for EntriesVisitor {
        type Value = BTreeMap<String, CassetteEntry>;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a map from fingerprint to recorded response")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
            let mut entries = BTreeMap::new();
            while let Some((key, value)) = map.next_entry::<String, CassetteEntry>()? {
                if let Some(previous) = entries.get(&key) {
                    if previous != &value {
                        return Err(serde::de::Error::custom(format!(
                            "conflicting responses recorded for fingerprint {key}"
                        )));
                    }
                }
                entries.insert(key, value);
            }
            Ok(entries)
        }
    }

    deserializer.deserialize_map(EntriesVisitor)
}
