use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use ruby_qsl::dynamics::StateVector;
use ruby_qsl::hamiltonian::C64;
use ruby_qsl::hilbert::ConstrainedBasis;

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const STATE_FORMAT: &str = "ruby-qsl-state";
pub const STATE_FORMAT_VERSION: u32 = 1;

/// Tool version and configuration hash carried by every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(config_hash: String) -> Self {
        Self {
            tool_version: VERSION.into(),
            config_hash,
        }
    }

    /// First line of text outputs.
    pub fn comment(&self) -> String {
        format!("# ruby-qsl {} config {}", self.tool_version, self.config_hash)
    }

    pub fn header(&self) -> Vec<(&'static str, String)> {
        vec![
            ("tool_version", self.tool_version.clone()),
            ("config_hash", self.config_hash.clone()),
        ]
    }
}

#[derive(Serialize)]
pub struct Stamped<'a, T: Serialize> {
    #[serde(flatten)]
    pub provenance: &'a Provenance,
    #[serde(flatten)]
    pub body: T,
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, prov: &Provenance, body: T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&Stamped { provenance: prov, body }).expect("output serialises");
    write_text(path, &(text + "\n"))
}

/// CSV with the provenance comment as its first line.
pub fn write_csv(path: &Path, prov: &Provenance, csv: &str) -> Result<(), CliError> {
    write_text(path, &format!("{}\n{csv}", prov.comment()))
}

#[derive(Serialize, Deserialize)]
pub struct StateFile {
    pub format: String,
    pub format_version: u32,
    pub tool_version: String,
    pub config_hash: String,
    pub endpoint: f64,
    pub n_sites: usize,
    pub dim: usize,
    /// `[re, im]` per basis state in canonical order.
    pub amplitudes: Vec<[f64; 2]>,
}

pub fn write_state(path: &Path, prov: &Provenance, endpoint: f64, psi: &StateVector) -> Result<(), CliError> {
    let f = StateFile {
        format: STATE_FORMAT.into(),
        format_version: STATE_FORMAT_VERSION,
        tool_version: prov.tool_version.clone(),
        config_hash: prov.config_hash.clone(),
        endpoint,
        n_sites: psi.basis().n_sites(),
        dim: psi.dim(),
        amplitudes: psi.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
    };
    write_text(path, &serde_json::to_string(&f).expect("state serialises"))
}

/// Reads a state written for the same lattice and model.
pub fn read_state(path: &Path, basis: &Arc<ConstrainedBasis>) -> Result<(f64, StateVector), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let f: StateFile =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if f.format != STATE_FORMAT || f.format_version != STATE_FORMAT_VERSION {
        return Err(CliError::Input(format!("{}: not a v{STATE_FORMAT_VERSION} state file", path.display())));
    }
    if f.n_sites != basis.n_sites() || f.dim != basis.dim() || f.amplitudes.len() != basis.dim() {
        return Err(CliError::Input(format!(
            "{}: state has {} sites / dimension {}, configuration gives {} / {}",
            path.display(),
            f.n_sites,
            f.dim,
            basis.n_sites(),
            basis.dim()
        )));
    }
    let amps = f.amplitudes.iter().map(|&[re, im]| C64::new(re, im)).collect();
    Ok((f.endpoint, StateVector::new(Arc::clone(basis), amps)?))
}

pub fn endpoint_tag(k: usize) -> String {
    format!("{k:02}")
}
