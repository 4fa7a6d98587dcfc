//! The `key = value` text format shared by config and preset files.
//!
//! One entry per line, split at the first `=`, both sides trimmed. Lines
//! whose first non-blank character is `#` are comments; a `#` anywhere else
//! is part of the value, so colours can be written bare (`bin-color-0 = #0b1033`).
//! Values may be wrapped in double quotes.

use std::collections::HashSet;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct KvError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    /// 1-based line number.
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse(text: &str) -> Result<Vec<Entry>, KvError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(KvError { line, message: format!("expected `key = value`, found '{trimmed}'") });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(KvError { line, message: "missing key before '='".into() });
        }
        let mut value = value.trim();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        }
        if !seen.insert(key.to_string()) {
            return Err(KvError { line, message: format!("duplicate key '{key}'") });
        }
        out.push(Entry { line, key: key.to_string(), value: value.to_string() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_blank_lines_and_bare_hashes() {
        let text = "# header\n\n  trigger-val = 55\nbin-color-0 = #0b1033\nname = \"my preset\"\n";
        let entries = parse(text).unwrap();
        assert_eq!(entries.len(), 3);
        assert_eq!(entries[0], Entry { line: 3, key: "trigger-val".into(), value: "55".into() });
        assert_eq!(entries[1].value, "#0b1033");
        assert_eq!(entries[2].value, "my preset");
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(parse("a = 1\nnonsense\n").unwrap_err().line, 2);
        assert_eq!(parse("a = 1\n = 2").unwrap_err().line, 2);
        assert_eq!(parse("a = 1\na = 2").unwrap_err().line, 2);
    }

    #[test]
    fn empty_input_is_empty() {
        assert!(parse("").unwrap().is_empty());
    }
}
