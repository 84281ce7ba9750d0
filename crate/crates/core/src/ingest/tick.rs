use std::collections::HashMap;
use std::io::BufRead;

use super::IngestError;

/// Reclassified tick type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TickClass {
    Successful,
    Unsuccessful,
    Ambiguous,
}

impl TickClass {
    fn parse(s: &str) -> Option<TickClass> {
        match s.trim().to_ascii_lowercase().as_str() {
            "successful" | "success" => Some(TickClass::Successful),
            "unsuccessful" | "failure" => Some(TickClass::Unsuccessful),
            "ambiguous" => Some(TickClass::Ambiguous),
            _ => None,
        }
    }
}

const DEFAULT_SUCCESSFUL: &[&str] = &[
    "onsight",
    "flash",
    "redpoint",
    "pinkpoint",
    "clean",
    "send",
    "top rope clean",
];

const DEFAULT_UNSUCCESSFUL: &[&str] = &["dog", "hang dog", "attempt", "retreat", "working", "top rope with rest"];

/// Case-insensitive map from tick strings to classes. Unknown ticks are
/// ambiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TickMapping {
    classes: HashMap<String, TickClass>,
}

impl Default for TickMapping {
    fn default() -> Self {
        let classes = DEFAULT_SUCCESSFUL
            .iter()
            .map(|t| (t.to_string(), TickClass::Successful))
            .chain(
                DEFAULT_UNSUCCESSFUL
                    .iter()
                    .map(|t| (t.to_string(), TickClass::Unsuccessful)),
            )
            .collect();
        Self { classes }
    }
}

impl TickMapping {
    pub fn empty() -> Self {
        Self {
            classes: HashMap::new(),
        }
    }

    pub fn insert(&mut self, tick: &str, class: TickClass) {
        self.classes.insert(normalize(tick), class);
    }

    pub fn get(&self, tick: &str) -> TickClass {
        self.classes
            .get(&normalize(tick))
            .copied()
            .unwrap_or(TickClass::Ambiguous)
    }

    /// Reads a mapping file with one `tick_string,class` pair per line.
    ///
    /// Blank lines and lines starting with `#` are skipped. The file replaces
    /// the default table entirely.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, IngestError> {
        let mut mapping = TickMapping::empty();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (tick, class) = trimmed.rsplit_once(',').ok_or_else(|| IngestError::TickMapping {
                line: i + 1,
                message: format!("expected `tick_string,class`, got `{trimmed}`"),
            })?;
            let class = TickClass::parse(class).ok_or_else(|| IngestError::TickMapping {
                line: i + 1,
                message: format!("unknown class `{}`", class.trim()),
            })?;
            mapping.insert(tick, class);
        }
        Ok(mapping)
    }
}

fn normalize(tick: &str) -> String {
    tick.trim().to_lowercase()
}

pub fn classify_tick(tick_type: &str, mapping: &TickMapping) -> TickClass {
    mapping.get(tick_type)
}
