//! Flat `key = value` files with optional `[section]` headers.
//!
//! ```text
//! # comment
//! name = crit01
//! [parameters]
//! n_modes = 256
//! ```
//!
//! Keys before the first header live in the root section `""`. Blank lines and
//! lines starting with `#` or `;` are ignored; values are trimmed and may not
//! be empty. A key may appear once per section.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate key `{key}` in section [{section}]")]
    Duplicate { line: usize, section: String, key: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigDoc {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut doc = ConfigDoc::default();
        let mut current = String::new();
        doc.sections.insert(current.clone(), BTreeMap::new());
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax { line, message: "unterminated section header".into() })?
                    .trim();
                if name.is_empty() || !valid_key(name) {
                    return Err(ConfigError::Syntax { line, message: format!("bad section name `{name}`") });
                }
                current = name.to_string();
                doc.sections.entry(current.clone()).or_default();
                continue;
            }
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line, message: "expected `key = value`".into() })?;
            let (k, v) = (k.trim(), v.trim());
            if !valid_key(k) {
                return Err(ConfigError::Syntax { line, message: format!("bad key `{k}`") });
            }
            if v.is_empty() {
                return Err(ConfigError::Syntax { line, message: format!("empty value for `{k}`") });
            }
            let sec = doc.sections.get_mut(&current).unwrap();
            if sec.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::Duplicate { line, section: current.clone(), key: k.to_string() });
            }
        }
        Ok(doc)
    }

    pub fn section(&self, name: &str) -> Option<&BTreeMap<String, String>> {
        self.sections.get(name)
    }

    pub fn root(&self) -> &BTreeMap<String, String> {
        &self.sections[""]
    }

    pub fn section_names(&self) -> impl Iterator<Item = &str> {
        self.sections.keys().map(|s| s.as_str())
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        self.sections.entry(section.to_string()).or_default().insert(key.to_string(), value.to_string());
    }

    /// Canonical text: sections and keys sorted, one `key = value` per line.
    /// Parsing the output gives back an equal document.
    pub fn to_canonical(&self) -> String {
        let mut out = String::new();
        for (name, entries) in &self.sections {
            if entries.is_empty() && !name.is_empty() {
                out.push_str(&format!("[{name}]\n"));
                continue;
            }
            if !name.is_empty() {
                out.push_str(&format!("[{name}]\n"));
            }
            for (k, v) in entries {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}

fn valid_key(k: &str) -> bool {
    !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let d = ConfigDoc::parse("# top\nname = a\n\n[parameters]\nn_modes = 64 \n; x\ngamma=1.75\n").unwrap();
        assert_eq!(d.root()["name"], "a");
        assert_eq!(d.section("parameters").unwrap()["gamma"], "1.75");
        assert_eq!(d.section("parameters").unwrap()["n_modes"], "64");
        assert!(d.section("missing").is_none());
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(ConfigDoc::parse("just words"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(ConfigDoc::parse("[open\n"), Err(ConfigError::Syntax { .. })));
        assert!(matches!(ConfigDoc::parse("a =\n"), Err(ConfigError::Syntax { .. })));
        assert!(matches!(ConfigDoc::parse("a = 1\na = 2"), Err(ConfigError::Duplicate { line: 2, .. })));
        // the same key may appear in different sections
        assert!(ConfigDoc::parse("a = 1\n[s]\na = 2").is_ok());
    }
}
