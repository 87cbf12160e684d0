//! Dataset lookup for the acceptance suite in `tests/acceptance.rs`.

use std::path::{Path, PathBuf};

/// Directory holding TU files for `name`: `$GRAPH_JEPA_DATA_DIR/<name>`,
/// then `data/<name>` in this crate and in the workspace root.
pub fn find_tu_dataset(name: &str) -> Option<PathBuf> {
    let here = Path::new(env!("CARGO_MANIFEST_DIR"));
    std::env::var_os("GRAPH_JEPA_DATA_DIR")
        .map(|root| PathBuf::from(root).join(name))
        .into_iter()
        .chain([here.join("data").join(name), here.join("../../data").join(name)])
        .find(|dir| dir.join(format!("{name}_A.txt")).exists())
}
