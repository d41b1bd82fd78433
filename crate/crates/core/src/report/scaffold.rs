//! Skeleton for a new study crate.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const FILES: [(&str, &str); 5] = [
    (
        "src/main.rs",
        include_str!("../../templates/study/src/main.rs"),
    ),
    (
        "src/model_functions.rs",
        include_str!("../../templates/study/src/model_functions.rs"),
    ),
    (
        "src/method_functions.rs",
        include_str!("../../templates/study/src/method_functions.rs"),
    ),
    (
        "src/eval_functions.rs",
        include_str!("../../templates/study/src/eval_functions.rs"),
    ),
    (
        "writeup.md",
        include_str!("../../templates/study/writeup.md"),
    ),
];

/// Cargo package name derived from a directory name.
pub fn package_name(path: &Path) -> Result<String> {
    let base = path.file_name().and_then(|s| s.to_str()).ok_or_else(|| {
        Error::InvalidArgument(format!("{} has no usable final component", path.display()))
    })?;
    let name: String = base
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect();
    if !name.starts_with(|c: char| c.is_ascii_alphabetic()) {
        return Err(Error::InvalidArgument(format!(
            "study directory name {base:?} must start with a letter"
        )));
    }
    Ok(name)
}

fn manifest(name: &str) -> String {
    let core = env!("CARGO_MANIFEST_DIR").replace('\\', "/");
    format!(
        "[package]\nname = \"{name}\"\nversion = \"0.1.0\"\nedition = \"2021\"\n\n\
         [dependencies]\nsimstudy = {{ path = \"{core}\" }}\n\n[workspace]\n"
    )
}

/// Writes a study crate with model, method and metric stubs and a report
/// template into `path`, which must be missing or empty. Returns the files
/// written.
pub fn create_scaffold(path: &Path) -> Result<Vec<PathBuf>> {
    let name = package_name(path)?;
    if path.exists() {
        let mut entries = fs::read_dir(path).map_err(|e| Error::io(path, e))?;
        if entries.next().is_some() {
            return Err(Error::InvalidArgument(format!(
                "{} is not empty",
                path.display()
            )));
        }
    }
    fs::create_dir_all(path.join("src")).map_err(|e| Error::io(path, e))?;
    let mut written = Vec::new();
    let cargo = path.join("Cargo.toml");
    fs::write(&cargo, manifest(&name)).map_err(|e| Error::io(&cargo, e))?;
    written.push(cargo);
    for (rel, content) in FILES {
        let p = path.join(rel);
        fs::write(&p, content).map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }
    Ok(written)
}
