//! Scene inputs for baking and validation: a library scene or a lattice dump.

use std::path::{Path, PathBuf};

use headbake_core::decoder::{DecoderConfig, DecoderWeights};
use headbake_core::field::library::{self, default_rigging, SceneConfig};
use headbake_core::field::FieldScene;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::lattice_io;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SceneSource {
    Named(String),
    Lattice(PathBuf),
}

impl SceneSource {
    /// Paths (anything with a separator or a `.hbl` extension) are lattice
    /// dumps; everything else names a library scene.
    pub fn parse(s: &str) -> Self {
        let p = Path::new(s);
        if s.contains(std::path::MAIN_SEPARATOR) || s.contains('/') || p.extension().is_some_and(|e| e == "hbl") {
            SceneSource::Lattice(p.to_path_buf())
        } else {
            SceneSource::Named(s.to_string())
        }
    }
}

impl std::fmt::Display for SceneSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SceneSource::Named(n) => f.write_str(n),
            SceneSource::Lattice(p) => write!(f, "{}", p.display()),
        }
    }
}

pub struct LoadedScene {
    pub scene: FieldScene,
    /// `sha256:` digest of the scene descriptor.
    pub provenance: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn provenance_of(descriptor: &str) -> String {
    format!("sha256:{}", sha256_hex(descriptor.as_bytes()))
}

/// Loads a scene. Lattice dumps take their basis count and feature width
/// from the file and their rigging from the synthetic default.
pub fn load_scene(source: &SceneSource, cfg: &SceneConfig) -> CliResult<LoadedScene> {
    let scene = match source {
        SceneSource::Named(name) => library::by_name(name, cfg)?,
        SceneSource::Lattice(path) => {
            let bytes = std::fs::read(path).map_err(|e| CliError::config(crate::error::FormatError::io(path, e)))?;
            let lattice = lattice_io::decode_lattice(&bytes).map_err(CliError::data)?;
            let cfg = SceneConfig {
                n_bases: lattice.n_bases,
                feature_dim: lattice.feature_dim,
                ..cfg.clone()
            };
            let descriptor = format!(
                "lattice;sha256={};levels={}:{}..{};expr={};seed={};template={}",
                sha256_hex(&bytes),
                cfg.n_levels,
                cfg.level_lo,
                cfg.level_hi,
                cfg.n_expr,
                cfg.seed,
                cfg.template_vertices
            );
            let (deformation, template) = default_rigging(&cfg);
            lattice.into_scene("lattice", &descriptor, cfg.levels(), Box::new(deformation), template)?
        }
    };
    let provenance = provenance_of(&scene.descriptor);
    Ok(LoadedScene { scene, provenance })
}

/// The appearance decoder paired with a scene. Trained weights are not part
/// of this tool; a seeded decoder stands in.
pub fn scene_decoder(scene: &FieldScene, seed: u64) -> DecoderWeights {
    DecoderWeights::random(
        &DecoderConfig {
            n_bases: scene.n_bases(),
            feature_dim: scene.feature_dim(),
            expr_dim: scene.template.n_expr,
            ..DecoderConfig::default()
        },
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use headbake_core::field::lattice::LatticeField;

    fn small() -> SceneConfig {
        SceneConfig {
            n_levels: 2,
            n_bases: 2,
            feature_dim: 2,
            n_expr: 3,
            template_vertices: 32,
            ..SceneConfig::default()
        }
    }

    #[test]
    fn parse_distinguishes_paths() {
        assert_eq!(SceneSource::parse("sphere-shell"), SceneSource::Named("sphere-shell".into()));
        assert!(matches!(SceneSource::parse("dump.hbl"), SceneSource::Lattice(_)));
        assert!(matches!(SceneSource::parse("./x"), SceneSource::Lattice(_)));
    }

    #[test]
    fn provenance_tracks_configuration() {
        let a = load_scene(&SceneSource::Named("sphere-shell".into()), &small()).unwrap();
        let b = load_scene(&SceneSource::Named("sphere-shell".into()), &small()).unwrap();
        let c = load_scene(&SceneSource::Named("sphere-shell".into()), &SceneConfig { seed: 1, ..small() }).unwrap();
        assert_eq!(a.provenance, b.provenance);
        assert_ne!(a.provenance, c.provenance);
        assert!(a.provenance.starts_with("sha256:") && a.provenance.len() == 7 + 64);
    }

    #[test]
    fn unknown_scene_is_config_error() {
        let e = load_scene(&SceneSource::Named("teapot".into()), &small()).err().unwrap();
        assert_eq!(e.kind, crate::error::ExitKind::Config);
        let e = load_scene(&SceneSource::Lattice("/nonexistent/x.hbl".into()), &small()).err().unwrap();
        assert_eq!(e.kind, crate::error::ExitKind::Config);
    }

    #[test]
    fn lattice_scene_loads_with_file_dimensions() {
        let named = library::sphere_shell(&small());
        let lattice = LatticeField::sample_from(&named, [9, 9, 9]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.hbl");
        lattice_io::save_lattice(&lattice, &path).unwrap();
        let cfg = SceneConfig { n_bases: 7, ..small() };
        let loaded = load_scene(&SceneSource::Lattice(path.clone()), &cfg).unwrap();
        assert_eq!(loaded.scene.n_bases(), 2);
        assert_eq!(loaded.scene.levels, named.levels);
        std::fs::write(&path, b"HBLATTIC-junk").unwrap();
        let e = load_scene(&SceneSource::Lattice(path), &cfg).err().unwrap();
        assert_eq!(e.kind, crate::error::ExitKind::Data);
    }
}
