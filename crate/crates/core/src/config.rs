//! Plain-text `key = value` configuration with `[section]` headers.
//!
//! Sections may repeat (scene files use one `[sphere]`/`[box]`/`[plane]`
//! block per primitive). `#` starts a comment. Keys before the first header
//! belong to the unnamed section `""`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geom::Vec3;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigDoc {
    pub sections: Vec<Section>,
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = ConfigDoc {
            sections: vec![Section::default()],
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::parse(i + 1, "unterminated section header"))?;
                doc.sections.push(Section {
                    name: name.trim().to_string(),
                    entries: Vec::new(),
                });
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected `key = value`, got `{line}`")))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::parse(i + 1, "empty key"));
            }
            doc.sections
                .last_mut()
                .expect("at least one section")
                .entries
                .push((k.to_string(), v.trim().to_string()));
        }
        if doc.sections[0].entries.is_empty() {
            doc.sections.remove(0);
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&crate::io::read_to_string(path)?)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Named section, or an empty one if absent.
    pub fn section_or_empty(&self, name: &str) -> Section {
        self.section(name).cloned().unwrap_or_else(|| Section {
            name: name.to_string(),
            entries: Vec::new(),
        })
    }

    pub fn section_mut(&mut self, name: &str) -> &mut Section {
        if let Some(i) = self.sections.iter().position(|s| s.name == name) {
            return &mut self.sections[i];
        }
        self.sections.push(Section {
            name: name.to_string(),
            entries: Vec::new(),
        });
        self.sections.last_mut().unwrap()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            if !s.name.is_empty() {
                let _ = writeln!(out, "[{}]", s.name);
            }
            for (k, v) in &s.entries {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }
}

impl Section {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            entries: Vec::new(),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    fn qualified(&self, key: &str) -> String {
        if self.name.is_empty() {
            key.to_string()
        } else {
            format!("{}.{}", self.name, key)
        }
    }

    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::config(self.qualified(key), format!("cannot parse `{v}`"))),
        }
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parse_opt(key)?
            .ok_or_else(|| Error::config(self.qualified(key), "missing"))
    }

    pub fn floats(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        v.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::config(self.qualified(key), format!("bad number `{t}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub fn fixed<const N: usize>(&self, key: &str) -> Result<Option<[f64; N]>> {
        match self.floats(key)? {
            None => Ok(None),
            Some(v) if v.len() == N => {
                let mut out = [0.0; N];
                out.copy_from_slice(&v);
                Ok(Some(out))
            }
            Some(v) => Err(Error::config(
                self.qualified(key),
                format!("expected {N} numbers, found {}", v.len()),
            )),
        }
    }

    pub fn vec3(&self, key: &str) -> Result<Option<Vec3>> {
        Ok(self.fixed::<3>(key)?.map(Vec3::from))
    }

    pub fn require_vec3(&self, key: &str) -> Result<Vec3> {
        self.vec3(key)?
            .ok_or_else(|| Error::config(self.qualified(key), "missing"))
    }

    pub fn error(&self, key: &str, message: impl Into<String>) -> Error {
        Error::config(self.qualified(key), message)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeated_sections_and_comments() {
        let doc = ConfigDoc::parse(
            "seed = 3\n# c\n[sphere]\ncenter = 0 0 1 # inline\nradius=2\n[sphere]\nradius = 1\n",
        )
        .unwrap();
        assert_eq!(doc.sections.len(), 3);
        assert_eq!(doc.sections[0].get("seed"), Some("3"));
        assert_eq!(doc.sections[1].vec3("center").unwrap(), Some(Vec3::new(0.0, 0.0, 1.0)));
        assert_eq!(doc.sections[2].require::<f64>("radius").unwrap(), 1.0);
        let again = ConfigDoc::parse(&doc.to_text()).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn errors_name_the_key() {
        let doc = ConfigDoc::parse("[train]\niterations = many\n").unwrap();
        let err = doc.section("train").unwrap().require::<usize>("iterations").unwrap_err();
        match err {
            Error::Config { key, .. } => assert_eq!(key, "train.iterations"),
            e => panic!("{e:?}"),
        }
        assert!(ConfigDoc::parse("[oops\n").is_err());
        assert!(ConfigDoc::parse("novalue\n").is_err());
    }
}
