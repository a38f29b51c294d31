use std::collections::HashMap;

use thiserror::Error;

const BUILTIN: &str = include_str!("../../assets/synonyms.txt");

#[derive(Debug, Error, PartialEq)]
pub enum SynonymError {
    #[error("line {line}: expected `canonical: alias, alias`")]
    Malformed { line: usize },
    #[error("line {line}: `{alias}` already maps to `{existing}`")]
    Conflict {
        line: usize,
        alias: String,
        existing: String,
    },
}

/// Maps tag and detector vocabulary onto shared canonical names.
#[derive(Debug, Clone, Default)]
pub struct SynonymTable {
    canonical: HashMap<String, String>,
}

fn key(label: &str) -> String {
    label.trim().to_lowercase()
}

impl SynonymTable {
    /// The table shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("bundled synonym table parses")
    }

    pub fn parse(text: &str) -> Result<Self, SynonymError> {
        let mut canonical: HashMap<String, String> = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (head, tail) = line.split_once(':').ok_or(SynonymError::Malformed { line: n + 1 })?;
            let head = key(head);
            if head.is_empty() {
                return Err(SynonymError::Malformed { line: n + 1 });
            }
            let aliases = tail.split(',').map(key).filter(|a| !a.is_empty());
            for alias in std::iter::once(head.clone()).chain(aliases) {
                match canonical.get(&alias) {
                    Some(existing) if *existing != head => {
                        return Err(SynonymError::Conflict {
                            line: n + 1,
                            alias,
                            existing: existing.clone(),
                        })
                    }
                    _ => {
                        canonical.insert(alias, head.clone());
                    }
                }
            }
        }
        Ok(Self { canonical })
    }

    /// Canonical form of `label`; unknown labels map to themselves
    /// (lowercased and trimmed).
    pub fn normalize(&self, label: &str) -> String {
        let k = key(label);
        self.canonical.get(&k).cloned().unwrap_or(k)
    }
}
