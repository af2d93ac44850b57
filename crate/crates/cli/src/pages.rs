//! Input discovery and parallel page processing.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use rayon::prelude::*;

/// Expand inputs into a sorted file list. Directories contribute their
/// `.html`/`.htm` files, recursively; plain files are taken as given.
pub fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found = Vec::new();
            walk(input, &mut found).with_context(|| format!("reading {}", input.display()))?;
            found.sort();
            out.extend(found);
        } else {
            out.push(input.clone());
        }
    }
    Ok(out)
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            walk(&path, out)?;
        } else if path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"))
        {
            out.push(path);
        }
    }
    Ok(())
}

/// Page identifier used in records: the file stem.
pub fn page_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub struct PageOutcome<T> {
    pub path: PathBuf,
    pub elapsed: Duration,
    pub result: Result<T>,
}

/// Read and process every file on the rayon pool; results keep input order.
pub fn process_all<T, F>(files: &[PathBuf], f: F) -> Vec<PageOutcome<T>>
where
    T: Send,
    F: Fn(&Path, &[u8]) -> Result<T> + Sync,
{
    files
        .par_iter()
        .map(|path| {
            let start = Instant::now();
            let result = std::fs::read(path)
                .with_context(|| format!("reading {}", path.display()))
                .and_then(|bytes| f(path, &bytes));
            PageOutcome {
                path: path.clone(),
                elapsed: start.elapsed(),
                result,
            }
        })
        .collect()
}

pub fn mean_ms<T>(outcomes: &[PageOutcome<T>]) -> f64 {
    let ok: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.result.is_ok())
        .map(|o| o.elapsed.as_secs_f64() * 1000.0)
        .collect();
    if ok.is_empty() {
        0.0
    } else {
        ok.iter().sum::<f64>() / ok.len() as f64
    }
}
