//! Minimal INI reader for `[section]` headers and `key = value` lines; `#`
//! and `;` start comment lines. Keys before the first header belong to
//! section `""`.

use std::collections::BTreeMap;

use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ini {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Ini {
    /// Parses `text`; duplicate keys and malformed lines are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut ini = Ini::default();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {}: unterminated section header", n + 1)))?;
                section = name.trim().to_ascii_lowercase();
                ini.sections.entry(section.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", n + 1)));
            }
            let entries = ini.sections.entry(section.clone()).or_default();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}` in [{section}]", n + 1)));
            }
        }
        Ok(ini)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    /// Keys of `section` in sorted order.
    pub fn keys(&self, section: &str) -> impl Iterator<Item = &str> {
        self.sections.get(section).into_iter().flat_map(|s| s.keys().map(String::as_str))
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.sections.entry(section.to_string()).or_default().insert(key.to_string(), value.into());
    }

    /// Serializes with sections and keys in sorted order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, entries) in &self.sections {
            if !name.is_empty() {
                out.push_str(&format!("[{name}]\n"));
            }
            for (k, v) in entries {
                out.push_str(&format!("{k} = {v}\n"));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let ini = Ini::parse("top = 1\n# c\n[Grid]\nn = 2\n ; x\nspacing= 0.5 \n[step]\nh=1e-3").unwrap();
        assert_eq!(ini.get("", "top"), Some("1"));
        assert_eq!(ini.get("grid", "n"), Some("2"));
        assert_eq!(ini.get("grid", "spacing"), Some("0.5"));
        assert_eq!(ini.get("step", "h"), Some("1e-3"));
        assert_eq!(ini.get("step", "missing"), None);
    }

    #[test]
    fn malformed_lines() {
        assert!(Ini::parse("[grid\nn=2").is_err());
        assert!(Ini::parse("[grid]\nn 2").is_err());
        assert!(Ini::parse("[grid]\nn=2\nn=3").is_err());
        assert!(Ini::parse("[grid]\n=3").is_err());
    }

    #[test]
    fn text_round_trip() {
        let ini = Ini::parse("[b]\ny = 2\nx = 1\n[a]\nz = 3\n").unwrap();
        assert_eq!(Ini::parse(&ini.to_text()).unwrap(), ini);
    }
}
