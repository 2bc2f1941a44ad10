//! Minimal sectioned `key = value` reader.
//!
//! `#` and `;` start comments, `[name]` opens a section, and every key must live
//! inside a section. Duplicate keys are rejected so a typo cannot silently shadow a
//! value.

use std::collections::BTreeMap;

use crate::config::ConfigError;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

pub type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

pub fn parse(text: &str) -> Result<Sections, ConfigError> {
    let mut sections = Sections::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| {
                ConfigError::new(format!("line {line_no}"), "unterminated section header")
            })?;
            let name = name.trim().to_string();
            if name.is_empty() {
                return Err(ConfigError::new(
                    format!("line {line_no}"),
                    "empty section name",
                ));
            }
            if sections.contains_key(&name) {
                return Err(ConfigError::new(name, "section appears twice"));
            }
            sections.insert(name.clone(), BTreeMap::new());
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(format!("line {line_no}"), "expected `key = value`"))?;
        let key = key.trim();
        let section = current.as_ref().ok_or_else(|| {
            ConfigError::new(key, format!("line {line_no}: key outside any section"))
        })?;
        if key.is_empty() {
            return Err(ConfigError::new(format!("line {line_no}"), "empty key"));
        }
        let entries = sections.get_mut(section).expect("section inserted above");
        let full = format!("{section}.{key}");
        if entries.contains_key(key) {
            return Err(ConfigError::new(full, "key appears twice"));
        }
        entries.insert(
            key.to_string(),
            Entry {
                value: value.trim().to_string(),
                line: line_no,
            },
        );
    }
    Ok(sections)
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(pos) => &line[..pos],
        None => line,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_sections_and_comments() {
        let s = parse("# top\n[process]\nkind = x ; trailing\n\n[output]\nformat=json\n").unwrap();
        assert_eq!(s["process"]["kind"].value, "x");
        assert_eq!(s["output"]["format"].line, 6);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse("kind = x\n").is_err());
        assert!(parse("[a\n").is_err());
        assert!(parse("[a]\nk = 1\nk = 2\n").is_err());
        assert!(parse("[a]\n[a]\n").is_err());
        assert!(parse("[a]\njust text\n").is_err());
    }
}
