//! World geometry: system parameters, base stations with uniform linear
//! arrays, the convex polygon target and its material.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{cross, perp, Segment, Vec2, SPEED_OF_LIGHT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("target polygon is not strictly convex: {0}")]
    NonConvexTarget(String),
    #[error("material violates energy conservation: alpha_r^2 + alpha_s^2 = {0}")]
    EnergyConservationViolated(f64),
    #[error("base station `{0}` lies inside the target")]
    BsInsideTarget(String),
    #[error("bad system configuration: {0}")]
    BadSystemConfig(String),
}

/// Radio and array parameters shared by every base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "SystemFile")]
pub struct SystemConfig {
    /// Carrier frequency, Hz.
    pub carrier_frequency: f64,
    /// Total bandwidth, Hz.
    pub bandwidth: f64,
    pub num_subcarriers: usize,
    pub num_tx: usize,
    pub num_rx: usize,
    /// Array element spacing, m.
    pub element_spacing: f64,
    /// Total transmit power, W.
    pub tx_power: f64,
}

/// On-disk form, where spacing and power may be left out.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    carrier_frequency: f64,
    bandwidth: f64,
    num_subcarriers: usize,
    num_tx: usize,
    num_rx: usize,
    element_spacing: Option<f64>,
    tx_power: Option<f64>,
}

impl From<SystemFile> for SystemConfig {
    fn from(f: SystemFile) -> Self {
        let base = Self::new(
            f.carrier_frequency,
            f.bandwidth,
            f.num_subcarriers,
            f.num_tx,
            f.num_rx,
        );
        Self {
            element_spacing: f.element_spacing.unwrap_or(base.element_spacing),
            tx_power: f.tx_power.unwrap_or(base.tx_power),
            ..base
        }
    }
}

impl SystemConfig {
    /// Half-wavelength spacing and 1 W transmit power.
    pub fn new(
        carrier_frequency: f64,
        bandwidth: f64,
        num_subcarriers: usize,
        num_tx: usize,
        num_rx: usize,
    ) -> Self {
        Self {
            carrier_frequency,
            bandwidth,
            num_subcarriers,
            num_tx,
            num_rx,
            element_spacing: SPEED_OF_LIGHT / carrier_frequency / 2.0,
            tx_power: 1.0,
        }
    }

    /// 32x32 antennas and 64 subcarriers at 28 GHz / 1 GHz.
    pub fn desk_scale() -> Self {
        Self::new(28e9, 1e9, 64, 32, 32)
    }

    /// 128x128 antennas and 256 subcarriers at 28 GHz / 1 GHz.
    pub fn paper_scale() -> Self {
        Self::new(28e9, 1e9, 256, 128, 128)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.bandwidth / self.num_subcarriers as f64
    }

    /// Element spacing in wavelengths, `d / lambda`.
    pub fn spacing_ratio(&self) -> f64 {
        self.element_spacing / self.wavelength()
    }

    /// Longest delay the subcarrier grid resolves without wrapping, `Nc / B`.
    pub fn max_delay(&self) -> f64 {
        self.num_subcarriers as f64 / self.bandwidth
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: &str| Err(SceneError::BadSystemConfig(m.to_string()));
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        if !finite_pos(self.carrier_frequency) {
            return bad("carrier frequency must be positive");
        }
        if !finite_pos(self.bandwidth) {
            return bad("bandwidth must be positive");
        }
        if self.num_subcarriers < 2 || self.num_tx < 2 || self.num_rx < 2 {
            return bad("subcarrier and antenna counts must be at least 2");
        }
        if !finite_pos(self.element_spacing) {
            return bad("element spacing must be positive");
        }
        if !finite_pos(self.tx_power) {
            return bad("transmit power must be positive");
        }
        Ok(())
    }

    /// Check an explicitly supplied subcarrier spacing against `B / Nc`.
    pub fn check_subcarrier_spacing(&self, delta_f: f64) -> Result<(), SceneError> {
        let expected = self.subcarrier_spacing();
        if ((delta_f - expected) / expected).abs() > 1e-9 {
            return Err(SceneError::BadSystemConfig(format!(
                "subcarrier spacing {delta_f} Hz does not match B/Nc = {expected} Hz"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Transmitter,
    Receiver,
    #[default]
    Both,
}

impl Role {
    pub fn transmits(self) -> bool {
        matches!(self, Role::Transmitter | Role::Both)
    }

    pub fn receives(self) -> bool {
        matches!(self, Role::Receiver | Role::Both)
    }
}

/// A base station with a uniform linear array.
///
/// Array-frame angles are measured from the boresight, positive toward the
/// array tangent, which is the boresight rotated 90 degrees counter-clockwise.
/// Element `n` sits at `position + n * d * tangent`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseStation {
    pub name: String,
    pub position: Vec2,
    boresight: Vec2,
    pub role: Role,
}

impl BaseStation {
    /// The boresight is normalized; a zero boresight is rejected.
    pub fn new(
        name: impl Into<String>,
        position: Vec2,
        boresight: Vec2,
        role: Role,
    ) -> Result<Self, SceneError> {
        let name = name.into();
        let norm = boresight.norm();
        if !(norm.is_finite() && norm > 0.0) || !position.iter().all(|v| v.is_finite()) {
            return Err(SceneError::BadSystemConfig(format!(
                "base station `{name}` needs a finite position and non-zero boresight"
            )));
        }
        Ok(Self {
            name,
            position,
            boresight: boresight / norm,
            role,
        })
    }

    /// Station at `position` looking at `target`.
    pub fn facing(
        name: impl Into<String>,
        position: Vec2,
        target: Vec2,
        role: Role,
    ) -> Result<Self, SceneError> {
        Self::new(name, position, target - position, role)
    }

    pub fn boresight(&self) -> Vec2 {
        self.boresight
    }

    pub fn tangent(&self) -> Vec2 {
        perp(&self.boresight)
    }

    pub fn element_position(&self, index: usize, spacing: f64) -> Vec2 {
        self.position + self.tangent() * (index as f64 * spacing)
    }

    /// World direction of the array-frame angle `theta`.
    pub fn direction(&self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        self.boresight * c + self.tangent() * s
    }

    /// Array-frame angle of the direction from the station toward `point`.
    pub fn angle_to(&self, point: &Vec2) -> f64 {
        let v = point - self.position;
        v.dot(&self.tangent()).atan2(v.dot(&self.boresight))
    }

    /// True when `point` lies strictly in front of the array.
    pub fn sees(&self, point: &Vec2) -> bool {
        (point - self.position).dot(&self.boresight) > 0.0
    }
}

/// A strictly convex polygon stored counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    /// Clockwise input is reversed to counter-clockwise.
    pub fn new(mut vertices: Vec<Vec2>) -> Result<Self, SceneError> {
        if vertices.len() < 3 {
            return Err(SceneError::NonConvexTarget(format!(
                "{} vertices, need at least 3",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.iter().all(|x| x.is_finite())) {
            return Err(SceneError::NonConvexTarget("non-finite vertex".into()));
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        let mut turning = 0.0;
        for i in 0..n {
            let e1 = vertices[(i + 1) % n] - vertices[i];
            let e2 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
            let c = cross(&e1, &e2);
            if c <= 0.0 {
                return Err(SceneError::NonConvexTarget(format!(
                    "turn at vertex {} has cross product {c}",
                    (i + 1) % n
                )));
            }
            turning += c.atan2(e1.dot(&e2));
        }
        // a self-intersecting star turns more than once
        if (turning - std::f64::consts::TAU).abs() > 1e-6 {
            return Err(SceneError::NonConvexTarget(format!(
                "total turning {turning} rad, polygon winds more than once"
            )));
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned square centred at `center`.
    pub fn square(center: Vec2, side: f64) -> Result<Self, SceneError> {
        let h = side / 2.0;
        Self::new(vec![
            center + Vec2::new(-h, -h),
            center + Vec2::new(h, -h),
            center + Vec2::new(h, h),
            center + Vec2::new(-h, h),
        ])
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn num_edges(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge(&self, i: usize) -> Segment {
        let n = self.vertices.len();
        Segment::new(self.vertices[i % n], self.vertices[(i + 1) % n])
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        (0..self.vertices.len()).map(move |i| self.edge(i))
    }

    /// Outward unit normal of edge `i`.
    pub fn outward_normal(&self, i: usize) -> Vec2 {
        let d = self.edge(i).direction();
        Vec2::new(d.y, -d.x)
    }

    pub fn centroid(&self) -> Vec2 {
        let sum: Vec2 = self.vertices.iter().sum();
        sum / self.vertices.len() as f64
    }

    /// Inside or on the boundary.
    pub fn contains(&self, p: &Vec2) -> bool {
        self.edges()
            .all(|e| cross(&(e.end - e.start), &(p - e.start)) >= 0.0)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }
}

fn signed_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| cross(&vertices[i], &vertices[(i + 1) % n]))
        .sum::<f64>()
        / 2.0
}

/// Surface reflection and scattering attenuation coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub alpha_r: f64,
    pub alpha_s: f64,
}

impl Material {
    pub fn new(alpha_r: f64, alpha_s: f64) -> Result<Self, SceneError> {
        let m = Self { alpha_r, alpha_s };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let total = self.alpha_r * self.alpha_r + self.alpha_s * self.alpha_s;
        if (total - 1.0).abs() > 1e-12 || total.is_nan() || self.alpha_r < 0.0 || self.alpha_s < 0.0
        {
            return Err(SceneError::EnergyConservationViolated(total));
        }
        Ok(())
    }
}

impl Default for Material {
    /// Even split of the reflected and scattered energy.
    fn default() -> Self {
        Self {
            alpha_r: 0.5f64.sqrt(),
            alpha_s: 0.5f64.sqrt(),
        }
    }
}

/// A validated, immutable scene.
#[derive(Debug, Clone)]
pub struct Scene {
    system: SystemConfig,
    stations: Vec<BaseStation>,
    target: Option<ConvexPolygon>,
    material: Material,
}

impl Scene {
    pub fn system(&self) -> &SystemConfig {
        &self.system
    }

    pub fn stations(&self) -> &[BaseStation] {
        &self.stations
    }

    pub fn station(&self, i: usize) -> &BaseStation {
        &self.stations[i]
    }

    pub fn target(&self) -> Option<&ConvexPolygon> {
        self.target.as_ref()
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    /// Same scene with different system parameters.
    pub fn with_system(&self, system: SystemConfig) -> Result<Scene, SceneError> {
        validate_scene(
            system,
            self.stations.clone(),
            self.target.clone(),
            self.material,
        )
    }
}

/// Check every invariant and assemble a [`Scene`]. `target` may be absent
/// for noise-only experiments.
pub fn validate_scene(
    system: SystemConfig,
    stations: Vec<BaseStation>,
    target: Option<ConvexPolygon>,
    material: Material,
) -> Result<Scene, SceneError> {
    system.validate()?;
    material.validate()?;
    if let Some(poly) = &target {
        if let Some(bs) = stations.iter().find(|bs| poly.contains(&bs.position)) {
            return Err(SceneError::BsInsideTarget(bs.name.clone()));
        }
    }
    Ok(Scene {
        system,
        stations,
        target,
        material,
    })
}
