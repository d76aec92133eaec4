//! Loading architecture descriptions from TOML.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ArchitectureSpec;

const BUILTINS: [(&str, &str); 4] = [
    ("baseline-pim", include_str!("../configs/baseline-pim.toml")),
    ("hetero-pim", include_str!("../configs/hetero-pim.toml")),
    ("hybrid-pim", include_str!("../configs/hybrid-pim.toml")),
    ("hh-pim", include_str!("../configs/hh-pim.toml")),
];

/// Names accepted by [`builtin_architecture`], in comparison order.
pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(name, _)| *name)
}

pub fn builtin_architecture(name: &str) -> Result<ArchitectureSpec> {
    let key = name.to_ascii_lowercase();
    let (_, text) = BUILTINS
        .iter()
        .find(|(n, _)| *n == key)
        .ok_or_else(|| Error::InvalidParameter(format!("no builtin architecture `{name}`")))?;
    parse_architecture(text)
}

/// Raw TOML text of a builtin, for writing default config files.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    let key = name.to_ascii_lowercase();
    BUILTINS.iter().find(|(n, _)| *n == key).map(|(_, t)| *t)
}

pub fn parse_architecture(text: &str) -> Result<ArchitectureSpec> {
    let arch: ArchitectureSpec = toml::from_str(text).map_err(|e| {
        let location = e.span().map(|span| line_col(text, span.start));
        Error::Config {
            message: e.message().to_string(),
            location,
        }
    })?;
    arch.validate()?;
    Ok(arch)
}

/// Loads a file path, or falls back to a builtin name when no such file exists.
pub fn load_architecture(spec: &str) -> Result<ArchitectureSpec> {
    let path = Path::new(spec);
    if path.exists() {
        parse_architecture(&std::fs::read_to_string(path)?)
    } else {
        builtin_architecture(spec)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, col)
}
