//! Run manifests: every run directory carries a manifest.json recording the
//! tool version, the command, the fully resolved configuration, input
//! hashes, timing, every warning the run emitted, and the verdicts. The
//! manifest alone suffices to reproduce the run.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::spectral::Field;
use crate::Result;

/// Reproducibility record of one run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Subcommand plus its arguments as invoked.
    pub command: String,
    /// Fully resolved configuration, defaults included.
    pub config: BTreeMap<String, String>,
    /// SHA-256 of every input file, keyed by role.
    pub input_hashes: BTreeMap<String, String>,
    pub started_unix: u64,
    pub wall_seconds: f64,
    /// Every warning emitted anywhere during the run.
    pub warnings: Vec<String>,
    /// Named outcomes: verify verdicts, solver verdicts, fit results.
    pub verdicts: BTreeMap<String, String>,
    #[serde(skip)]
    t0: Instant,
}

impl RunManifest {
    pub fn new(command: String) -> RunManifest {
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            config: BTreeMap::new(),
            input_hashes: BTreeMap::new(),
            started_unix,
            wall_seconds: 0.0,
            warnings: Vec::new(),
            verdicts: BTreeMap::new(),
            t0: Instant::now(),
        }
    }

    /// Record a warning; exact duplicates collapse to one entry.
    pub fn warn(&mut self, message: String) {
        if !self.warnings.contains(&message) {
            self.warnings.push(message);
        }
    }

    pub fn verdict(&mut self, name: &str, value: impl ToString) {
        self.verdicts.insert(name.to_string(), value.to_string());
    }

    pub fn input_hash(&mut self, role: &str, hash: String) {
        self.input_hashes.insert(role.to_string(), hash);
    }

    /// Stamp the elapsed time and write manifest.json into the run dir.
    pub fn write(&mut self, dir: &Path) -> Result<()> {
        self.wall_seconds = self.t0.elapsed().as_secs_f64();
        let text = serde_json::to_string_pretty(self)
            .expect("manifest serialization cannot fail");
        std::fs::write(dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

/// Periodic-wraparound guard: warn when more than 1e-6 of a field's
/// absolute mass sits within 10% of the domain boundary.
pub fn boundary_mass_warning(f: &Field) -> Option<String> {
    let grid = f.grid();
    let edge = 0.9 * grid.half_width();
    let mut total = 0.0;
    let mut near = 0.0;
    for (idx, v) in f.values().iter().enumerate() {
        let (ix, iy) = grid.unflatten(idx);
        let a = v.abs();
        total += a;
        let mut coord = grid.coord(ix).abs();
        if grid.dim() == 2 {
            coord = coord.max(grid.coord(iy).abs());
        }
        if coord >= edge {
            near += a;
        }
    }
    if total > 0.0 && near > 1e-6 * total {
        Some(format!(
            "{:.2e} of the field's absolute mass lies within 10% of the domain \
             boundary; periodic wraparound may contaminate the result",
            near / total
        ))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    #[test]
    fn centered_bump_raises_no_boundary_warning() {
        let grid = Grid::new(1, 256, 16.0).unwrap();
        let f = Field::from_fn_1d(grid, |x| (-x * x).exp()).unwrap();
        assert!(boundary_mass_warning(&f).is_none());
    }

    #[test]
    fn edge_bump_raises_the_boundary_warning() {
        let grid = Grid::new(1, 256, 16.0).unwrap();
        let f = Field::from_fn_1d(grid, |x| (-(x - 15.0) * (x - 15.0)).exp()).unwrap();
        let warning = boundary_mass_warning(&f).unwrap();
        assert!(warning.contains("boundary"));
    }

    #[test]
    fn manifest_json_carries_warnings_config_and_verdicts() {
        let mut m = RunManifest::new("solve".into());
        m.config.insert("alpha".into(), "0.5".into());
        m.warn("halved once".into());
        m.warn("halved once".into());
        m.verdict("solve", "Converged");
        m.input_hash("datum", "abc123".into());
        let dir = std::env::temp_dir().join("fracheat-manifest-test");
        std::fs::create_dir_all(&dir).unwrap();
        m.write(&dir).unwrap();
        let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
        let json: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(json["config"]["alpha"], "0.5");
        assert_eq!(json["warnings"].as_array().unwrap().len(), 1);
        assert_eq!(json["verdicts"]["solve"], "Converged");
        assert_eq!(json["input_hashes"]["datum"], "abc123");
        assert!(json["wall_seconds"].as_f64().unwrap() >= 0.0);
        assert!(json["tool_version"].as_str().unwrap().contains('.'));
    }
}
