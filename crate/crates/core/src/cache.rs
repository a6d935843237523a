//! On-disk spectrum cache laid out as `<dir>/<problem digest>/<params digest>.{csv,json}`.
//!
//! The CSV holds the eigenvalues in the same format the `spectrum` command
//! prints; the JSON holds the window, the certificate, the solver parameters
//! and the SHA-256 of the CSV. A larger window replaces a smaller one; a
//! request below a stored window is served from it by truncation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::format::{sha256_hex, SCHEMA_VERSION};
use crate::graph::BoundaryContactProblem;
use crate::spectra::{
    eigenvalues, solver_params, CertificateEntry, SolverOptions, SolverParams, Spectrum,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    schema_version: u32,
    digest: String,
    params_digest: String,
    window: (f64, f64),
    params: SolverParams,
    certificate: Vec<CertificateEntry>,
    csv_sha256: String,
}

/// How a request was served.
#[derive(Debug, Clone, PartialEq)]
pub enum CacheStatus {
    Hit,
    Miss,
    /// A stored entry existed with a smaller window and was superseded.
    Extended,
    /// A stored entry failed validation and was recomputed.
    Corrupt(String),
}

#[derive(Debug, Clone)]
pub struct SpectrumCache {
    root: PathBuf,
}

enum Stored {
    Missing,
    Bad(String),
    Found(Spectrum),
}

impl SpectrumCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn paths(&self, digest: &str, params_digest: &str) -> (PathBuf, PathBuf) {
        let dir = self.root.join(digest);
        (
            dir.join(format!("{params_digest}.csv")),
            dir.join(format!("{params_digest}.json")),
        )
    }

    fn read(&self, digest: &str, params: &SolverParams) -> Stored {
        let params_digest = params.digest();
        let (csv_path, json_path) = self.paths(digest, &params_digest);
        if !json_path.exists() && !csv_path.exists() {
            return Stored::Missing;
        }
        let (json, csv) = match (
            fs::read_to_string(&json_path),
            fs::read_to_string(&csv_path),
        ) {
            (Ok(j), Ok(c)) => (j, c),
            (Err(e), _) | (_, Err(e)) => return Stored::Bad(format!("unreadable entry: {e}")),
        };
        let entry: Entry = match serde_json::from_str(&json) {
            Ok(e) => e,
            Err(e) => return Stored::Bad(format!("malformed metadata: {e}")),
        };
        if entry.schema_version != SCHEMA_VERSION {
            return Stored::Bad(format!("schema version {}", entry.schema_version));
        }
        if entry.digest != digest || entry.params_digest != params_digest || entry.params != *params
        {
            return Stored::Bad("digest mismatch".into());
        }
        if sha256_hex(csv.as_bytes()) != entry.csv_sha256 {
            return Stored::Bad("eigenvalue file does not match its checksum".into());
        }
        let eigen = match Spectrum::eigenvalues_from_csv(&csv) {
            Ok(e) => e,
            Err(e) => return Stored::Bad(e.to_string()),
        };
        let spectrum = Spectrum {
            digest: entry.digest,
            eigenvalues: eigen,
            window: entry.window,
            certificate: entry.certificate,
            params: entry.params,
        };
        if !spectrum.certificate_consistent() {
            return Stored::Bad("certificate does not match the eigenvalues".into());
        }
        Stored::Found(spectrum)
    }

    /// Writes `spectrum`, replacing any entry for the same problem and parameters.
    pub fn store(&self, spectrum: &Spectrum) -> Result<()> {
        let params_digest = spectrum.params.digest();
        let (csv_path, json_path) = self.paths(&spectrum.digest, &params_digest);
        let csv = spectrum.to_csv();
        let entry = Entry {
            schema_version: SCHEMA_VERSION,
            digest: spectrum.digest.clone(),
            params_digest,
            window: spectrum.window,
            params: spectrum.params.clone(),
            certificate: spectrum.certificate.clone(),
            csv_sha256: sha256_hex(csv.as_bytes()),
        };
        let mut json = serde_json::to_string_pretty(&entry).expect("cache entries serialize");
        json.push('\n');
        fs::create_dir_all(csv_path.parent().expect("entry paths have a parent"))?;
        write_atomic(&csv_path, csv.as_bytes())?;
        write_atomic(&json_path, json.as_bytes())?;
        Ok(())
    }

    /// The spectrum of `problem` up to `lambda_hi`, from the cache when a stored
    /// window covers it and freshly computed (and stored) otherwise.
    pub fn spectrum(
        &self,
        problem: &BoundaryContactProblem,
        lambda_hi: f64,
        opts: &SolverOptions,
    ) -> Result<(Spectrum, CacheStatus)> {
        let digest = problem.canonical_hash();
        let params = solver_params(problem, opts);
        let status = match self.read(&digest, &params) {
            Stored::Found(s) if s.lambda_hi() >= lambda_hi => {
                let s = if s.lambda_hi() > lambda_hi {
                    s.truncated(lambda_hi)
                } else {
                    s
                };
                return Ok((s, CacheStatus::Hit));
            }
            Stored::Found(_) => CacheStatus::Extended,
            Stored::Missing => CacheStatus::Miss,
            Stored::Bad(reason) => CacheStatus::Corrupt(reason),
        };
        let spectrum = eigenvalues(problem, lambda_hi, opts)?;
        self.store(&spectrum)?;
        Ok((spectrum, status))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("entry");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
