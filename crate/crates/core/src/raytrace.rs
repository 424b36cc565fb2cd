//! First-order propagation paths between a transmitting and a receiving base
//! station: Lambertian scattering off surface microfacets and the specular
//! reflection built from a mirror source.
//!
//! The target surface is discretized deterministically: every polygon edge is
//! cut into equal facets no longer than the requested facet length. For a
//! single convex polygon a facet is unoccluded exactly when its outward
//! normal faces both stations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{Vec2, SPEED_OF_LIGHT};
use crate::scene::{BaseStation, Scene};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RaytraceError {
    #[error("facet length must be positive, got {0}")]
    InvalidFacetLength(f64),
    #[error("found {0} specular reflection paths; a convex target admits at most one")]
    MultipleReflectionPaths(usize),
}

/// One piece of a polygon edge acting as a point scatterer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroFacet {
    pub center: Vec2,
    /// Outward unit normal of the parent edge.
    pub normal: Vec2,
    /// Facet length, m.
    pub length: f64,
    pub edge: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum PathKind {
    Scatter,
    Reflect,
}

impl PathKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PathKind::Scatter => "scatter",
            PathKind::Reflect => "reflect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathOrigin {
    Facet(MicroFacet),
    Specular {
        point: Vec2,
        normal: Vec2,
        edge: usize,
    },
}

/// A single propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub kind: PathKind,
    /// Propagation delay, s.
    pub tau: f64,
    /// Angle of arrival at the receive array, rad from boresight.
    pub aoa: f64,
    /// Angle of departure at the transmit array, rad from boresight.
    pub aod: f64,
    /// Complex amplitude gain, `|beta|^2 = P_R / P_T`.
    pub beta: Complex64,
    pub origin: PathOrigin,
}

impl PathRecord {
    /// World position of the scattering or reflection point.
    pub fn point(&self) -> Vec2 {
        match self.origin {
            PathOrigin::Facet(f) => f.center,
            PathOrigin::Specular { point, .. } => point,
        }
    }

    pub fn edge(&self) -> usize {
        match self.origin {
            PathOrigin::Facet(f) => f.edge,
            PathOrigin::Specular { edge, .. } => edge,
        }
    }

    pub fn power_gain(&self) -> f64 {
        self.beta.norm_sqr()
    }
}

/// How scatter path amplitudes are phased.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScatterPhase {
    /// Real non-negative gains; the only phase is the propagation delay.
    #[default]
    Deterministic,
    /// An extra i.i.d. uniform phase per facet, drawn from the given seed.
    Random(u64),
}

/// Received power of the Lambertian scattering model.
#[allow(clippy::too_many_arguments)]
pub fn scatter_power(
    alpha_s: f64,
    tx_power: f64,
    wavelength: f64,
    d1: f64,
    d2: f64,
    cos_incident: f64,
    cos_scatter: f64,
    facet_length: f64,
) -> f64 {
    alpha_s * alpha_s * tx_power * wavelength * wavelength / (16.0 * PI.powi(3) * d1 * d1 * d2 * d2)
        * cos_incident
        * cos_scatter
        * facet_length
}

/// Received power of the specular reflection over total path length `d1 + d2`.
pub fn reflection_power(alpha_r: f64, tx_power: f64, wavelength: f64, path_length: f64) -> f64 {
    let four_pi = 4.0 * PI;
    alpha_r * alpha_r * tx_power * wavelength * wavelength
        / (four_pi * four_pi * path_length * path_length)
}

/// Cut every edge of the target into facets of length at most `facet_len`.
pub fn microfacets(scene: &Scene, facet_len: f64) -> Result<Vec<MicroFacet>, RaytraceError> {
    if !(facet_len > 0.0 && facet_len.is_finite()) {
        return Err(RaytraceError::InvalidFacetLength(facet_len));
    }
    let Some(poly) = scene.target() else {
        return Ok(Vec::new());
    };
    let mut facets = Vec::new();
    for (i, edge) in poly.edges().enumerate() {
        let len = edge.length();
        let count = (len / facet_len).ceil().max(1.0) as usize;
        let piece = len / count as f64;
        let dir = edge.direction();
        let normal = poly.outward_normal(i);
        facets.extend((0..count).map(|k| MicroFacet {
            center: edge.start + dir * ((k as f64 + 0.5) * piece),
            normal,
            length: piece,
            edge: i,
        }));
    }
    Ok(facets)
}

/// All doubly-visible scattering paths from `tx` to `rx`.
///
/// Facets outside either array's front half-plane are skipped, so every
/// returned angle lies in `(-pi/2, pi/2)`.
pub fn enumerate_scatter_paths(
    scene: &Scene,
    tx: &BaseStation,
    rx: &BaseStation,
    facet_len: f64,
    phase: ScatterPhase,
) -> Result<Vec<PathRecord>, RaytraceError> {
    let facets = microfacets(scene, facet_len)?;
    let sys = scene.system();
    let lambda = sys.wavelength();
    let alpha_s = scene.material().alpha_s;
    let mut rng = match phase {
        ScatterPhase::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        ScatterPhase::Deterministic => None,
    };

    let mut paths = Vec::new();
    for facet in facets {
        let to_tx = tx.position - facet.center;
        let to_rx = rx.position - facet.center;
        let d1 = to_tx.norm();
        let d2 = to_rx.norm();
        let cos_i = facet.normal.dot(&to_tx) / d1;
        let cos_s = facet.normal.dot(&to_rx) / d2;
        // draw even for rejected facets so the phase of a facet does not
        // depend on which other facets are visible
        let extra = rng.as_mut().map(|r| r.random::<f64>() * 2.0 * PI);
        if !(cos_i > 0.0 && cos_s > 0.0) || !tx.sees(&facet.center) || !rx.sees(&facet.center) {
            continue;
        }
        let p_r = scatter_power(
            alpha_s,
            sys.tx_power,
            lambda,
            d1,
            d2,
            cos_i,
            cos_s,
            facet.length,
        );
        let amp = (p_r / sys.tx_power).sqrt();
        let beta = match extra {
            Some(ph) => Complex64::from_polar(amp, ph),
            None => Complex64::new(amp, 0.0),
        };
        paths.push(PathRecord {
            kind: PathKind::Scatter,
            tau: (d1 + d2) / SPEED_OF_LIGHT,
            aoa: rx.angle_to(&facet.center),
            aod: tx.angle_to(&facet.center),
            beta,
            origin: PathOrigin::Facet(facet),
        });
    }
    Ok(paths)
}

/// The specular reflection path from `tx` to `rx`, if any edge produces one.
pub fn find_reflection_path(
    scene: &Scene,
    tx: &BaseStation,
    rx: &BaseStation,
) -> Result<Option<PathRecord>, RaytraceError> {
    let Some(poly) = scene.target() else {
        return Ok(None);
    };
    let sys = scene.system();
    let lambda = sys.wavelength();
    let alpha_r = scene.material().alpha_r;

    let mut found = Vec::new();
    for (i, edge) in poly.edges().enumerate() {
        let n = poly.outward_normal(i);
        let h_tx = n.dot(&(tx.position - edge.start));
        let h_rx = n.dot(&(rx.position - edge.start));
        if !(h_tx > 0.0 && h_rx > 0.0) {
            continue;
        }
        let mirror = tx.position - n * (2.0 * h_tx);
        // the mirror sits at signed height -h_tx, rx at +h_rx
        let t = h_tx / (h_tx + h_rx);
        let point = mirror + (rx.position - mirror) * t;
        let dir = edge.end - edge.start;
        let s = (point - edge.start).dot(&dir) / dir.norm_squared();
        if !(0.0..=1.0).contains(&s) || !tx.sees(&point) || !rx.sees(&point) {
            continue;
        }
        let d1 = (point - tx.position).norm();
        let d2 = (rx.position - point).norm();
        let p_r = reflection_power(alpha_r, sys.tx_power, lambda, d1 + d2);
        found.push(PathRecord {
            kind: PathKind::Reflect,
            tau: (d1 + d2) / SPEED_OF_LIGHT,
            aoa: rx.angle_to(&point),
            aod: tx.angle_to(&point),
            beta: Complex64::new((p_r / sys.tx_power).sqrt(), 0.0),
            origin: PathOrigin::Specular {
                point,
                normal: n,
                edge: i,
            },
        });
    }
    // a reflection landing exactly on a shared vertex is reported by both
    // adjacent edges only if their normals coincide, which convexity forbids
    match found.len() {
        0 => Ok(None),
        1 => Ok(found.pop()),
        k => Err(RaytraceError::MultipleReflectionPaths(k)),
    }
}

/// Scatter paths plus the reflection path, if present.
pub fn trace_all(
    scene: &Scene,
    tx: &BaseStation,
    rx: &BaseStation,
    facet_len: f64,
    phase: ScatterPhase,
) -> Result<Vec<PathRecord>, RaytraceError> {
    let mut paths = enumerate_scatter_paths(scene, tx, rx, facet_len, phase)?;
    paths.extend(find_reflection_path(scene, tx, rx)?);
    Ok(paths)
}

/// Default facet length, ten wavelengths.
pub fn default_facet_length(scene: &Scene) -> f64 {
    10.0 * scene.system().wavelength()
}

/// Write paths as CSV with columns `kind,tau,aoa,aod,abs_beta,x,y`.
pub fn write_paths_csv<W: std::io::Write>(paths: &[PathRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "tau", "aoa", "aod", "abs_beta", "x", "y"])?;
    for p in paths {
        let pt = p.point();
        w.write_record([
            p.kind.as_str().to_string(),
            p.tau.to_string(),
            p.aoa.to_string(),
            p.aod.to_string(),
            p.beta.norm().to_string(),
            pt.x.to_string(),
            pt.y.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{validate_scene, ConvexPolygon, Material, Role, SystemConfig};

    fn scene_with(poly: ConvexPolygon, mat: Material) -> Scene {
        validate_scene(SystemConfig::desk_scale(), vec![], Some(poly), mat).unwrap()
    }

    fn square10() -> ConvexPolygon {
        ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(10.0, 0.0),
            Vec2::new(10.0, 10.0),
            Vec2::new(0.0, 10.0),
        ])
        .unwrap()
    }

    fn bs(x: f64, y: f64, look: Vec2) -> BaseStation {
        BaseStation::facing("bs", Vec2::new(x, y), look, Role::Both).unwrap()
    }

    #[test]
    fn facet_facing_both_yields_path() {
        let scene = scene_with(square10(), Material::default());
        let tx = bs(0.0, -5.0, Vec2::new(5.0, 0.0));
        let rx = bs(10.0, -5.0, Vec2::new(5.0, 0.0));
        let paths =
            enumerate_scatter_paths(&scene, &tx, &rx, 0.5, ScatterPhase::Deterministic).unwrap();
        assert!(!paths.is_empty());
        // only the bottom edge (normal -y) faces both stations
        assert!(paths.iter().all(|p| p.edge() == 0));
        let at5 = paths
            .iter()
            .find(|p| (p.point() - Vec2::new(5.25, 0.0)).norm() < 1e-9)
            .expect("facet near (5,0)");
        assert!(at5.beta.re > 0.0 && at5.beta.im == 0.0);
    }

    #[test]
    fn facet_facing_away_has_no_path() {
        // single facet square edge y=10 faces +y; stations below see nothing of it
        let scene = scene_with(square10(), Material::default());
        let tx = bs(0.0, -5.0, Vec2::new(5.0, 0.0));
        let rx = bs(10.0, -5.0, Vec2::new(5.0, 0.0));
        let paths =
            enumerate_scatter_paths(&scene, &tx, &rx, 0.5, ScatterPhase::Deterministic).unwrap();
        assert!(paths.iter().all(|p| p.edge() != 2));
    }

    #[test]
    fn monostatic_reflection_symmetry() {
        let scene = scene_with(square10(), Material::default());
        let b = bs(5.0, -5.0, Vec2::new(5.0, 0.0));
        let r = find_reflection_path(&scene, &b, &b).unwrap().unwrap();
        assert!((r.point() - Vec2::new(5.0, 0.0)).norm() < 1e-12);
        assert!((r.tau * SPEED_OF_LIGHT - 10.0).abs() < 1e-9);
        assert!(r.aoa.abs() < 1e-12 && r.aod.abs() < 1e-12);
    }

    #[test]
    fn no_reflection_without_facing_edge() {
        // stations inside the wedge behind a vertex see two edges only at
        // grazing; put them where no edge normal faces both
        let scene = scene_with(square10(), Material::default());
        let tx = bs(-5.0, 5.0, Vec2::new(5.0, 5.0));
        let rx = bs(15.0, 5.0, Vec2::new(5.0, 5.0));
        assert!(find_reflection_path(&scene, &tx, &rx).unwrap().is_none());
    }

    #[test]
    fn random_phase_keeps_magnitude() {
        let scene = scene_with(square10(), Material::default());
        let tx = bs(0.0, -5.0, Vec2::new(5.0, 0.0));
        let rx = bs(10.0, -5.0, Vec2::new(5.0, 0.0));
        let a =
            enumerate_scatter_paths(&scene, &tx, &rx, 0.5, ScatterPhase::Deterministic).unwrap();
        let b = enumerate_scatter_paths(&scene, &tx, &rx, 0.5, ScatterPhase::Random(7)).unwrap();
        assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(&b) {
            assert!((p.beta.norm() - q.beta.norm()).abs() < 1e-18);
        }
    }

    #[test]
    fn bad_facet_length() {
        let scene = scene_with(square10(), Material::default());
        assert!(microfacets(&scene, 0.0).is_err());
        let f = microfacets(&scene, 3.0).unwrap();
        // 10 m edges cut into 4 pieces of 2.5 m
        assert_eq!(f.len(), 16);
        assert!(f.iter().all(|x| (x.length - 2.5).abs() < 1e-12));
    }
}
