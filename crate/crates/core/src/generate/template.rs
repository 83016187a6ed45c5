use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GenerateError;

const V1: [(&str, &str); 10] = [
    ("profile_system", include_str!("../../templates/v1/profile_system.txt")),
    ("example", include_str!("../../templates/v1/example.txt")),
    ("mesh_user", include_str!("../../templates/v1/mesh_user.txt")),
    ("mesh_section", include_str!("../../templates/v1/mesh_section.txt")),
    ("condense_system", include_str!("../../templates/v1/condense_system.txt")),
    ("condense_user", include_str!("../../templates/v1/condense_user.txt")),
    ("merge_user", include_str!("../../templates/v1/merge_user.txt")),
    ("final_user", include_str!("../../templates/v1/final_user.txt")),
    ("paraphrase_system", include_str!("../../templates/v1/paraphrase_system.txt")),
    ("example_json", include_str!("../../templates/v1/example.json")),
];

/// Names every template set must provide.
pub const TEMPLATE_NAMES: [&str; 9] = [
    "profile_system",
    "example",
    "mesh_user",
    "mesh_section",
    "condense_system",
    "condense_user",
    "merge_user",
    "final_user",
    "paraphrase_system",
];

/// The one-shot example shown before the researcher's own material.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneShotExample {
    pub instructions: String,
    pub material: String,
    pub profile: String,
}

impl OneShotExample {
    pub fn load(path: &Path) -> Result<Self, GenerateError> {
        let text = std::fs::read_to_string(path).map_err(|e| GenerateError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| GenerateError::Config(format!("{}: {e}", path.display())))
    }
}

/// A versioned set of prompt templates using `{{PLACEHOLDER}}` syntax.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub version: String,
    templates: BTreeMap<String, String>,
    pub example: OneShotExample,
}

impl TemplateSet {
    pub fn builtin_v1() -> Self {
        let mut templates: BTreeMap<String, String> = V1.iter().map(|(k, v)| (k.to_string(), v.trim_end().to_string())).collect();
        let example = serde_json::from_str(&templates.remove("example_json").unwrap()).expect("built-in example is valid JSON");
        Self { version: "v1".into(), templates, example }
    }

    /// Reads `<name>.txt` for every template name and `example.json` from a directory.
    pub fn load(dir: &Path) -> Result<Self, GenerateError> {
        let mut templates = BTreeMap::new();
        for name in TEMPLATE_NAMES {
            let path = dir.join(format!("{name}.txt"));
            let text = std::fs::read_to_string(&path).map_err(|e| GenerateError::Config(format!("{}: {e}", path.display())))?;
            templates.insert(name.to_string(), text.trim_end().to_string());
        }
        let version = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(Self { version, templates, example: OneShotExample::load(&dir.join("example.json"))? })
    }

    pub fn with_example(mut self, example: OneShotExample) -> Self {
        self.example = example;
        self
    }

    pub fn get(&self, name: &str) -> &str {
        self.templates.get(name).map(String::as_str).unwrap_or_default()
    }

    pub fn render(&self, name: &str, vars: &[(&str, &str)]) -> Result<String, GenerateError> {
        render(self.get(name), vars).map_err(|m| GenerateError::Template(format!("{name}: {m}")))
    }

    pub fn example_block(&self) -> Result<String, GenerateError> {
        self.render(
            "example",
            &[
                ("EXAMPLE_INSTRUCTIONS", &self.example.instructions),
                ("EXAMPLE_MATERIAL", &self.example.material),
                ("EXAMPLE_PROFILE", &self.example.profile),
            ],
        )
    }
}

fn is_placeholder_name(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || b == b'_')
}

/// Substitutes `{{NAME}}` placeholders in one pass, so substituted values are
/// never re-scanned. `{{STAGE_k}}` placeholders are left for run time; any
/// other unknown placeholder is an error.
pub fn render(template: &str, vars: &[(&str, &str)]) -> Result<String, String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) if is_placeholder_name(&after[..end]) => {
                let name = &after[..end];
                if let Some((_, v)) = vars.iter().find(|(k, _)| *k == name) {
                    out.push_str(v);
                } else if name.starts_with("STAGE_") {
                    out.push_str(&rest[start..start + 4 + end]);
                } else {
                    return Err(format!("no value for placeholder {{{{{name}}}}}"));
                }
                rest = &after[end + 2..];
            }
            _ => {
                out.push_str("{{");
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// Stage indices referenced as `{{STAGE_k}}`, in order of appearance.
pub fn stage_refs(text: &str) -> Vec<usize> {
    let mut refs = Vec::new();
    let mut rest = text;
    while let Some(i) = rest.find("{{STAGE_") {
        let after = &rest[i + 8..];
        let digits: String = after.chars().take_while(char::is_ascii_digit).collect();
        if !digits.is_empty() && after[digits.len()..].starts_with("}}") {
            refs.push(digits.parse().unwrap());
        }
        rest = after;
    }
    refs
}

pub fn stage_placeholder(k: usize) -> String {
    format!("{{{{STAGE_{k}}}}}")
}
