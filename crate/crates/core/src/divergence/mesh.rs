use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::word_tokens;
use crate::xml::{ends_with, squash, walk, Node};

use super::DivergenceError;

/// Descriptor names keyed by their normalised form: lowercase word tokens
/// joined by single spaces, so "Neoplasms, Experimental" is stored as
/// "neoplasms experimental".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeshVocabulary {
    descriptors: BTreeMap<String, MeshDescriptor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDescriptor {
    pub name: String,
    pub tree_numbers: Vec<String>,
}

pub fn normalize_term(term: &str) -> String {
    word_tokens(term).join(" ")
}

impl MeshVocabulary {
    pub fn from_descriptors(items: impl IntoIterator<Item = MeshDescriptor>) -> Self {
        let mut v = Self::default();
        for d in items {
            v.insert(d);
        }
        v
    }

    fn insert(&mut self, d: MeshDescriptor) {
        let key = normalize_term(&d.name);
        if key.is_empty() {
            return;
        }
        let entry = self.descriptors.entry(key).or_insert_with(|| MeshDescriptor { name: d.name.clone(), tree_numbers: vec![] });
        for t in d.tree_numbers {
            if !entry.tree_numbers.contains(&t) {
                entry.tree_numbers.push(t);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.descriptors.contains_key(&normalize_term(term))
    }

    pub fn get(&self, term: &str) -> Option<&MeshDescriptor> {
        self.descriptors.get(&normalize_term(term))
    }

    pub fn tree_numbers(&self, term: &str) -> &[String] {
        self.get(term).map_or(&[], |d| d.tree_numbers.as_slice())
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &MeshDescriptor> {
        self.descriptors.values()
    }
}

/// Reads NLM descriptor XML or the plain-text form: one descriptor per
/// line, optionally followed by tab-separated tree numbers.
pub fn load_mesh_vocabulary(path: &Path) -> Result<MeshVocabulary, DivergenceError> {
    let text = std::fs::read_to_string(path).map_err(|source| DivergenceError::Io { path: path.to_path_buf(), source })?;
    parse_mesh_vocabulary(&text)
}

pub fn parse_mesh_vocabulary(text: &str) -> Result<MeshVocabulary, DivergenceError> {
    let vocab = if text.trim_start().starts_with('<') { parse_xml(text)? } else { parse_plain(text) };
    if vocab.is_empty() {
        return Err(DivergenceError::EmptyVocabulary);
    }
    Ok(vocab)
}

fn parse_plain(text: &str) -> MeshVocabulary {
    MeshVocabulary::from_descriptors(text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).map(|line| {
        let mut cols = line.split('\t').map(str::trim);
        let name = cols.next().unwrap_or_default().to_string();
        let tree_numbers = cols.flat_map(|c| c.split(';')).map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect();
        MeshDescriptor { name, tree_numbers }
    }))
}

fn parse_xml(text: &str) -> Result<MeshVocabulary, DivergenceError> {
    let mut vocab = MeshVocabulary::default();
    let mut name = String::new();
    let mut trees: Vec<String> = Vec::new();
    let mut tree = String::new();
    let mut saw_root = false;
    walk(text, |stack, node| {
        if stack.len() == 1 && matches!(node, Node::Open) {
            if stack[0] != "DescriptorRecordSet" {
                return Err(format!("expected <DescriptorRecordSet>, found <{}>", stack[0]));
            }
            saw_root = true;
        }
        match node {
            Node::Text(t) if ends_with(stack, &["DescriptorRecord", "DescriptorName", "String"]) => name.push_str(t),
            Node::Text(t) if ends_with(stack, &["DescriptorRecord", "TreeNumberList", "TreeNumber"]) => tree.push_str(t),
            Node::Close if ends_with(stack, &["DescriptorRecord", "TreeNumberList", "TreeNumber"]) => {
                trees.push(squash(&std::mem::take(&mut tree)));
            }
            Node::Close if ends_with(stack, &["DescriptorRecordSet", "DescriptorRecord"]) => {
                let n = squash(&std::mem::take(&mut name));
                if n.is_empty() {
                    return Err("descriptor record without DescriptorName/String".into());
                }
                vocab.insert(MeshDescriptor { name: n, tree_numbers: std::mem::take(&mut trees) });
            }
            _ => {}
        }
        Ok(())
    })?;
    if !saw_root {
        return Err(DivergenceError::EmptyVocabulary);
    }
    Ok(vocab)
}

/// Runs of one to three adjacent tokens from `doc_tokens` that name a
/// descriptor and contain at least one unique term. Sorted, deduplicated.
pub fn mesh_novelty(unique: &BTreeSet<String>, doc_tokens: &[String], vocab: &MeshVocabulary) -> Vec<String> {
    let mut found = BTreeSet::new();
    for t in unique {
        if vocab.contains(t) {
            found.insert(normalize_term(t));
        }
    }
    for n in 2..=3 {
        for w in doc_tokens.windows(n) {
            if w.iter().any(|t| unique.contains(t)) {
                let phrase = w.join(" ");
                if vocab.contains(&phrase) {
                    found.insert(phrase);
                }
            }
        }
    }
    found.into_iter().collect()
}
