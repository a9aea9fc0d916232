use std::collections::BTreeSet;
use std::fs;
use std::path::{Component, Path, PathBuf};

use crate::error::{Error, Result};

/// One `relative-path label [group]` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: String,
    pub group: Option<String>,
    /// 1-based line number in the manifest file.
    pub line: usize,
}

/// A list of labelled images under a root directory.
///
/// The text format has one `relative-path label [group]` entry per line.
/// Blank lines and lines starting with `#` are ignored. A first line
/// holding a single integer is read as an entry count, as in Outex problem
/// files, and checked against the number of entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub root: PathBuf,
    pub source: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Reads a manifest; relative paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Manifest::parse(&text, root, path)
    }

    /// Like [`Manifest::load`] with an explicit image root.
    pub fn load_with_root(path: impl AsRef<Path>, root: impl Into<PathBuf>) -> Result<Self> {
        let mut m = Manifest::load(path)?;
        m.root = root.into();
        Ok(m)
    }

    pub fn parse(text: &str, root: impl Into<PathBuf>, source: impl Into<PathBuf>) -> Result<Self> {
        let source = source.into();
        let err = |line: usize, message: String| Error::Manifest {
            path: source.clone(),
            line,
            message,
        };
        let mut entries = Vec::new();
        let mut declared: Option<(usize, usize)> = None;
        let mut seen_content = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !seen_content && fields.len() == 1 {
                let n = fields[0]
                    .parse()
                    .map_err(|_| err(line_no, format!("expected `path label [group]`, got {line:?}")))?;
                declared = Some((n, line_no));
                seen_content = true;
                continue;
            }
            seen_content = true;
            if !(2..=3).contains(&fields.len()) {
                return Err(err(line_no, format!("expected `path label [group]`, got {line:?}")));
            }
            let path = PathBuf::from(fields[0]);
            let escapes = path.is_absolute()
                || path
                    .components()
                    .any(|c| matches!(c, Component::ParentDir | Component::RootDir | Component::Prefix(_)));
            if escapes {
                return Err(err(line_no, format!("path {:?} must stay under the root", fields[0])));
            }
            entries.push(ManifestEntry {
                path,
                label: fields[1].to_string(),
                group: fields.get(2).map(|g| g.to_string()),
                line: line_no,
            });
        }
        if let Some((n, line)) = declared {
            if n != entries.len() {
                return Err(err(
                    line,
                    format!("header declares {n} entries, found {}", entries.len()),
                ));
            }
        }
        if entries.is_empty() {
            return Err(err(0, "manifest has no entries".into()));
        }
        Ok(Manifest {
            root: root.into(),
            source,
            entries,
        })
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries matching `keep`, with the same root and source.
    pub fn filtered(&self, keep: impl Fn(&ManifestEntry) -> bool) -> Manifest {
        Manifest {
            root: self.root.clone(),
            source: self.source.clone(),
            entries: self.entries.iter().filter(|e| keep(e)).cloned().collect(),
        }
    }
}

/// Raw manifest labels interned to `0..C`.
///
/// Labels are ordered numerically when every label is an integer and
/// lexicographically otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    names: Vec<String>,
}

impl LabelSet {
    pub fn from_manifest(m: &Manifest) -> Self {
        let set: BTreeSet<&str> = m.entries.iter().map(|e| e.label.as_str()).collect();
        let mut names: Vec<String> = set.into_iter().map(str::to_string).collect();
        if names.iter().all(|n| n.parse::<i64>().is_ok()) {
            names.sort_by_key(|n| n.parse::<i64>().unwrap());
        }
        LabelSet { names }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.names.iter().position(|n| n == label)
    }

    /// Interned labels of every entry; fails on labels outside the set.
    pub fn intern(&self, m: &Manifest) -> Result<Vec<usize>> {
        m.entries
            .iter()
            .map(|e| {
                self.index(&e.label).ok_or_else(|| Error::Manifest {
                    path: m.source.clone(),
                    line: e.line,
                    message: format!("label {:?} does not occur in the training manifest", e.label),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outex_style_header_and_groups() {
        let text = "3\n000000.pgm 0\n000001.pgm 0\n# note\n\nimgs/000002.pgm 1 a\n";
        let m = Manifest::parse(text, "/data", "train.txt").unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.entries[2].group.as_deref(), Some("a"));
        assert_eq!(m.resolve(&m.entries[2]), PathBuf::from("/data/imgs/000002.pgm"));
        assert_eq!(m.entries[2].line, 6);
    }

    #[test]
    fn malformed_manifests() {
        assert!(Manifest::parse("4\na.pgm 0\n", ".", "m").is_err());
        assert!(Manifest::parse("a.pgm\n", ".", "m").is_err());
        assert!(Manifest::parse("a.pgm 0 g extra\n", ".", "m").is_err());
        assert!(Manifest::parse("../a.pgm 0\n", ".", "m").is_err());
        assert!(Manifest::parse("/etc/a.pgm 0\n", ".", "m").is_err());
        assert!(Manifest::parse("# nothing\n", ".", "m").is_err());
        let e = Manifest::parse("a 0\nb\n", ".", "m.txt").unwrap_err();
        assert!(e.to_string().contains("m.txt:2"), "{e}");
    }

    #[test]
    fn labels_intern_numerically() {
        let m = Manifest::parse("a 10\nb 2\nc 2\nd 7\n", ".", "m").unwrap();
        let labels = LabelSet::from_manifest(&m);
        assert_eq!(labels.names(), &["2", "7", "10"]);
        assert_eq!(labels.intern(&m).unwrap(), vec![2, 0, 0, 1]);
        let other = Manifest::parse("x 3\n", ".", "t").unwrap();
        assert!(labels.intern(&other).is_err());
        let named = Manifest::parse("a wood\nb cork\n", ".", "m").unwrap();
        assert_eq!(LabelSet::from_manifest(&named).names(), &["cork", "wood"]);
    }
}
