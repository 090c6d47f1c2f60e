//! Case-insensitive SQL `LIKE` matching (`ILIKE`).
//!
//! `%` matches any sequence of characters, `_` exactly one character and `\`
//! makes the following character literal. Both pattern and text are compared
//! after simple case folding, so `LUFTBALLON`, `Luftballon` and `luftballon`
//! are equal, and so are `Ä`/`ä` or `ẞ`/`ß`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("pattern {0:?} ends with an unterminated escape")]
    UnterminatedEscape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token {
    Literal(char),
    AnyOne,
    AnyMany,
}

/// A compiled `ILIKE` pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LikePattern {
    source: String,
    tokens: Vec<Token>,
}

/// Simple (one-to-one) case folding.
pub fn fold_char(c: char) -> char {
    match c {
        'ς' => 'σ',
        'ſ' => 's',
        'ẞ' => 'ß',
        _ => {
            let mut lower = c.to_lowercase();
            match (lower.next(), lower.next()) {
                (Some(l), None) => l,
                _ => c,
            }
        }
    }
}

impl LikePattern {
    pub fn compile(pattern: &str) -> Result<Self, PatternError> {
        let mut tokens = Vec::with_capacity(pattern.len());
        let mut chars = pattern.chars();
        while let Some(c) = chars.next() {
            let token = match c {
                '%' => {
                    if tokens.last() == Some(&Token::AnyMany) {
                        continue;
                    }
                    Token::AnyMany
                }
                '_' => Token::AnyOne,
                '\\' => match chars.next() {
                    Some(escaped) => Token::Literal(fold_char(escaped)),
                    None => return Err(PatternError::UnterminatedEscape(pattern.to_string())),
                },
                other => Token::Literal(fold_char(other)),
            };
            tokens.push(token);
        }
        Ok(LikePattern {
            source: pattern.to_string(),
            tokens,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.source
    }

    /// Whether the whole of `text` matches.
    pub fn matches(&self, text: &str) -> bool {
        let text: Vec<char> = text.chars().map(fold_char).collect();
        let tokens = &self.tokens;
        let (mut t, mut p) = (0, 0);
        // Resume point after the most recent `%`: (token index, text index).
        let mut resume: Option<(usize, usize)> = None;

        while t < text.len() {
            match tokens.get(p) {
                Some(Token::AnyOne) => {
                    p += 1;
                    t += 1;
                }
                Some(Token::Literal(c)) if *c == text[t] => {
                    p += 1;
                    t += 1;
                }
                Some(Token::AnyMany) => {
                    p += 1;
                    resume = Some((p, t));
                }
                _ => match resume {
                    Some((rp, rt)) => {
                        p = rp;
                        t = rt + 1;
                        resume = Some((rp, rt + 1));
                    }
                    None => return false,
                },
            }
        }
        tokens[p..].iter().all(|tok| *tok == Token::AnyMany)
    }
}

impl fmt::Display for LikePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}
