//! TOML scene files and the built-in desk scene.
//!
//! ```toml
//! [system]            # optional; desk-scale values when absent
//! carrier_frequency = 28e9
//! bandwidth = 1e9
//! num_subcarriers = 64
//! num_tx = 32
//! num_rx = 32
//!
//! [material]          # optional; even split
//! alpha_r = 0.7071067811865476
//! alpha_s = 0.7071067811865476
//!
//! [target]
//! vertices = [[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0], [-2.0, 2.0]]
//!
//! [[stations]]
//! name = "bs0"
//! position = [0.0, 6.0]
//! # boresight = [0.0, -1.0]   defaults to facing the target centroid
//! role = "both"
//!
//! [raytrace]          # optional
//! facet_length = 0.1
//! random_scatter_phase = false
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::scene::{
    validate_scene, BaseStation, ConvexPolygon, Material, Role, Scene, SceneError, SystemConfig,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSpec {
    pub name: String,
    pub position: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boresight: Option<[f64; 2]>,
    #[serde(default)]
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// Counter-clockwise or clockwise; reordered on load.
    pub vertices: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RaytraceSpec {
    /// Facet length in metres; ten wavelengths when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub facet_length: Option<f64>,
    /// Draw an independent uniform phase per facet for every trial.
    pub random_scatter_phase: bool,
}

/// Scene file contents before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default = "SystemConfig::desk_scale")]
    pub system: SystemConfig,
    #[serde(default)]
    pub material: Material,
    /// Absent for noise-only runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    pub stations: Vec<StationSpec>,
    #[serde(default)]
    pub raytrace: RaytraceSpec,
}

/// A validated scene plus the ray tracing options that came with it.
#[derive(Debug, Clone)]
pub struct SceneSetup {
    pub scene: Scene,
    pub raytrace: RaytraceSpec,
}

impl SceneSpec {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scene spec serializes")
    }

    /// A 4 m square centred at the origin, watched by three stations spaced
    /// 120 degrees apart on a 6 m circle, all facing the centre. Station 0
    /// sits above the top edge; stations 1 and 2 look at the lower corners.
    pub fn desk() -> Self {
        let stations = [90.0f64, 210.0, 330.0]
            .iter()
            .enumerate()
            .map(|(k, az)| {
                let (s, c) = az.to_radians().sin_cos();
                StationSpec {
                    name: format!("bs{k}"),
                    position: [6.0 * c, 6.0 * s],
                    boresight: None,
                    role: Role::Both,
                }
            })
            .collect();
        Self {
            system: SystemConfig::desk_scale(),
            material: Material::default(),
            target: Some(TargetSpec {
                vertices: vec![[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0], [-2.0, 2.0]],
            }),
            stations,
            raytrace: RaytraceSpec::default(),
        }
    }

    pub fn build(&self) -> Result<SceneSetup, ConfigError> {
        if self.stations.is_empty() {
            return Err(ConfigError::Invalid("scene has no base stations".into()));
        }
        if let Some(len) = self.raytrace.facet_length {
            if !(len > 0.0 && len.is_finite()) {
                return Err(ConfigError::Invalid(format!(
                    "facet_length must be positive, got {len}"
                )));
            }
        }
        let target = self
            .target
            .as_ref()
            .map(|t| ConvexPolygon::new(t.vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect()))
            .transpose()?;
        let aim = target.as_ref().map_or(Vec2::zeros(), |t| t.centroid());
        let stations = self
            .stations
            .iter()
            .map(|s| {
                let position = Vec2::new(s.position[0], s.position[1]);
                match s.boresight {
                    Some(b) => BaseStation::new(&s.name, position, Vec2::new(b[0], b[1]), s.role),
                    None => BaseStation::facing(&s.name, position, aim, s.role),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let scene = validate_scene(self.system, stations, target, self.material)?;
        Ok(SceneSetup {
            scene,
            raytrace: self.raytrace,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_round_trips_through_toml() {
        let spec = SceneSpec::desk();
        let back = SceneSpec::from_toml(&spec.to_toml()).unwrap();
        assert_eq!(back, spec);
        let setup = back.build().unwrap();
        assert_eq!(setup.scene.stations().len(), 3);
        let bs0 = setup.scene.station(0);
        assert!((bs0.boresight() - Vec2::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let text = r#"
            [target]
            vertices = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
            [[stations]]
            name = "a"
            position = [5.0, 5.0]
        "#;
        let setup = SceneSpec::from_toml(text).unwrap().build().unwrap();
        assert_eq!(*setup.scene.system(), SystemConfig::desk_scale());
        assert_eq!(setup.scene.station(0).role, Role::Both);
    }

    #[test]
    fn system_spacing_and_power_optional() {
        let text = r#"
            [system]
            carrier_frequency = 60e9
            bandwidth = 2e9
            num_subcarriers = 32
            num_tx = 16
            num_rx = 16
            [[stations]]
            name = "a"
            position = [5.0, 5.0]
        "#;
        let spec = SceneSpec::from_toml(text).unwrap();
        assert_eq!(spec.system, SystemConfig::new(60e9, 2e9, 32, 16, 16));
        let text = text.replace("num_rx = 16", "num_rx = 16\ntx_power = 2.0");
        assert_eq!(SceneSpec::from_toml(&text).unwrap().system.tx_power, 2.0);
    }

    #[test]
    fn bad_material_rejected() {
        let mut spec = SceneSpec::desk();
        spec.material = Material {
            alpha_r: 0.9,
            alpha_s: 0.9,
        };
        assert!(matches!(
            spec.build(),
            Err(ConfigError::Scene(SceneError::EnergyConservationViolated(
                _
            )))
        ));
    }

    #[test]
    fn unknown_key_rejected() {
        let text = "[[stations]]\nname = \"a\"\nposition = [1.0, 1.0]\ncolour = 3\n";
        assert!(matches!(
            SceneSpec::from_toml(text),
            Err(ConfigError::Toml(_))
        ));
    }
}
