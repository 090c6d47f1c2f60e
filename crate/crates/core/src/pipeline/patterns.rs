use std::path::Path;

use thiserror::Error;

use super::ilike::{LikePattern, PatternError};

/// Pattern set shipped with the crate.
pub const DEFAULT_PATTERNS: &str = include_str!("../../data/sup_patterns.tsv");

/// Only format version understood by [`SupPatternSet::parse`].
pub const PATTERN_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PatternSetError {
    #[error("patterns file not found: {0}")]
    NotFound(String),
    #[error("reading patterns file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Pattern { line: usize, source: PatternError },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryPattern {
    pub category: String,
    pub pattern: LikePattern,
}

/// Ordered, labelled `ILIKE` patterns defining the SUP predicate.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SupPatternSet {
    entries: Vec<CategoryPattern>,
}

impl SupPatternSet {
    pub fn new(entries: Vec<CategoryPattern>) -> Self {
        SupPatternSet { entries }
    }

    /// The built-in keyword classes.
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_PATTERNS).expect("built-in pattern file is valid")
    }

    pub fn from_path(path: &Path) -> Result<Self, PatternSetError> {
        if !path.exists() {
            return Err(PatternSetError::NotFound(path.display().to_string()));
        }
        let text = std::fs::read_to_string(path).map_err(|source| PatternSetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parse the tab-separated pattern format: `#` comments, a
    /// `version<TAB>1` line, then `category<TAB>pattern` lines.
    pub fn parse(text: &str) -> Result<Self, PatternSetError> {
        let mut version_seen = false;
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let (left, right) =
                trimmed
                    .split_once('\t')
                    .ok_or_else(|| PatternSetError::Syntax {
                        line,
                        message: "expected `category<TAB>pattern`".into(),
                    })?;
            if !version_seen {
                if left.trim() != "version" || right.trim() != PATTERN_FORMAT_VERSION.to_string() {
                    return Err(PatternSetError::Syntax {
                        line,
                        message: format!("expected `version\\t{PATTERN_FORMAT_VERSION}` header"),
                    });
                }
                version_seen = true;
                continue;
            }
            let pattern = LikePattern::compile(right)
                .map_err(|source| PatternSetError::Pattern { line, source })?;
            entries.push(CategoryPattern {
                category: left.trim().to_string(),
                pattern,
            });
        }
        if !version_seen {
            return Err(PatternSetError::Syntax {
                line: 0,
                message: "missing version header".into(),
            });
        }
        Ok(SupPatternSet { entries })
    }

    pub fn entries(&self) -> &[CategoryPattern] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Category of the first pattern matching `name`, if any.
    pub fn classify(&self, name: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.pattern.matches(name))
            .map(|e| e.category.as_str())
    }
}

/// SUP predicate: `Some(category)` iff `name` matches a pattern in the set.
pub fn classify_sup<'a>(name: &str, patterns: &'a SupPatternSet) -> Option<&'a str> {
    patterns.classify(name)
}
