//! Lidar simulation: beam-pattern generation, CPU ray casting against
//! scene meshes, and per-return received intensity with threshold ray
//! drop.
//!
//! The intensity of a return combines Gaussian-beam divergence, the
//! footprint area at range, a surface BRDF (Lambert or Oren-Nayar), the
//! effective backscatter cross section and the static radar equation.

pub mod bvh;

use std::any::Any;
use std::collections::HashMap;

use nalgebra::{Point3, Vector3};
use thiserror::Error;

use crate::attr::AttrValue;
use crate::components::{expect_float, Transform};
use crate::ecs::{Component, EcsError, EntityId, NamedComponent, Processor, World};
use crate::scene::{Material, Mesh, PointCloud, ReflectanceModel};

pub use bvh::{raycast, RayHit, SceneIndex, SceneTriangle};

#[derive(Debug, Error)]
pub enum LidarError {
    #[error("{name} must be positive, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },
    #[error("reflectivity must be in [0, 1], got {0}")]
    ReflectivityOutOfRange(f64),
    #[error("incidence angle {0} rad is at or beyond grazing (pi/2)")]
    GrazingAngle(f64),
    #[error("range must be positive, got {0}")]
    NonPositiveRange(f64),
    #[error("beam pattern must contain at least one direction")]
    EmptyPattern,
}

// ---------------------------------------------------------------------------
// Intensity model
// ---------------------------------------------------------------------------

/// Full beamwidth of a Gaussian beam: `4 * wavelength / (pi * aperture)`.
pub fn beamwidth(wavelength: f64, aperture: f64) -> Result<f64, LidarError> {
    if !(wavelength > 0.0) {
        return Err(LidarError::NonPositiveInput { name: "wavelength", value: wavelength });
    }
    if !(aperture > 0.0) {
        return Err(LidarError::NonPositiveInput { name: "aperture", value: aperture });
    }
    Ok(4.0 * wavelength / (std::f64::consts::PI * aperture))
}

/// Circular laser footprint area at slant range R:
/// `pi * R^2 * beamwidth^2 / 4`.
pub fn footprint_area(range: f64, beamwidth: f64) -> f64 {
    std::f64::consts::PI * range * range * beamwidth * beamwidth / 4.0
}

/// Lambertian BRDF: `reflectivity / pi`.
pub fn brdf_lambert(reflectivity: f64) -> Result<f64, LidarError> {
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(LidarError::ReflectivityOutOfRange(reflectivity));
    }
    Ok(reflectivity / std::f64::consts::PI)
}

/// Oren-Nayar BRDF for RMS slope `roughness` at incidence `theta`:
///
/// A = 1 - 0.5 s^2 / (s^2 + 0.33), B = 0.45 s^2 / (s^2 + 0.09),
/// f_r = (rho / pi) * (A + B sin(theta) tan(theta)).
pub fn brdf_oren_nayar(
    reflectivity: f64,
    roughness: f64,
    theta: f64,
) -> Result<f64, LidarError> {
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(LidarError::ReflectivityOutOfRange(reflectivity));
    }
    if roughness < 0.0 {
        return Err(LidarError::NonPositiveInput { name: "roughness", value: roughness });
    }
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(LidarError::GrazingAngle(theta));
    }
    let s2 = roughness * roughness;
    let a = 1.0 - 0.5 * s2 / (s2 + 0.33);
    let b = 0.45 * s2 / (s2 + 0.09);
    Ok(reflectivity / std::f64::consts::PI * (a + b * theta.sin() * theta.tan()))
}

/// Effective backscatter cross section:
/// `4 pi * cos(theta) * footprint_area(R) * f_r`.
pub fn backscatter_cross_section(theta: f64, range: f64, brdf: f64, beamwidth: f64) -> f64 {
    4.0 * std::f64::consts::PI * theta.cos() * footprint_area(range, beamwidth) * brdf
}

/// Static radar (lidar) equation:
/// `I = P_t D_rx^2 / (4 pi R^4 bw^2) * eta_opt * eta_atm * sigma_bs`.
pub fn received_intensity(
    power: f64,
    aperture: f64,
    range: f64,
    beamwidth: f64,
    eta_opt: f64,
    eta_atm: f64,
    cross_section: f64,
) -> Result<f64, LidarError> {
    if !(range > 0.0) {
        return Err(LidarError::NonPositiveRange(range));
    }
    let denom = 4.0 * std::f64::consts::PI * range.powi(4) * beamwidth * beamwidth;
    Ok(power * aperture * aperture / denom * eta_opt * eta_atm * cross_section)
}

/// Evaluates the whole chain for one return: BRDF at the hit material,
/// then backscatter cross section, then the radar equation.
pub fn return_intensity(
    power: f64,
    aperture: f64,
    wavelength: f64,
    eta_opt: f64,
    eta_atm: f64,
    material: &Material,
    theta: f64,
    range: f64,
) -> Result<f64, LidarError> {
    let bw = beamwidth(wavelength, aperture)?;
    let brdf = match material.model {
        ReflectanceModel::Lambert => brdf_lambert(material.reflectivity)?,
        ReflectanceModel::OrenNayar => {
            brdf_oren_nayar(material.reflectivity, material.roughness, theta)?
        }
    };
    let sigma = backscatter_cross_section(theta, range, brdf, bw);
    received_intensity(power, aperture, range, bw, eta_opt, eta_atm, sigma)
}

// ---------------------------------------------------------------------------
// Beam patterns
// ---------------------------------------------------------------------------

/// Builds unit beam directions from azimuth/elevation angle lists in
/// degrees: `(cos el cos az, cos el sin az, sin el)`, elevation-major.
pub fn make_beam_pattern(
    azimuths_deg: &[f64],
    elevations_deg: &[f64],
) -> Result<Vec<Vector3<f64>>, LidarError> {
    if azimuths_deg.is_empty() || elevations_deg.is_empty() {
        return Err(LidarError::EmptyPattern);
    }
    for &a in azimuths_deg.iter().chain(elevations_deg.iter()) {
        if !a.is_finite() {
            return Err(LidarError::NonPositiveInput { name: "angle", value: a });
        }
    }
    let mut dirs = Vec::with_capacity(azimuths_deg.len() * elevations_deg.len());
    for &el in elevations_deg {
        let el = el.to_radians();
        for &az in azimuths_deg {
            let az = az.to_radians();
            dirs.push(Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()));
        }
    }
    Ok(dirs)
}

/// `count` evenly spaced values from `start` (inclusive) to `stop`
/// (exclusive); the range form of beam-pattern angle specs.
pub fn linspace_exclusive(start: f64, stop: f64, count: usize) -> Vec<f64> {
    let step = (stop - start) / count as f64;
    (0..count).map(|i| start + step * i as f64).collect()
}

// ---------------------------------------------------------------------------
// Component
// ---------------------------------------------------------------------------

/// Sensor parameters plus the static beam pattern, attached to a lidar
/// entity next to a Transform and an output PointCloud.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarConfig {
    /// Laser wavelength in meters.
    pub wavelength: f64,
    /// Receiver aperture diameter in meters.
    pub aperture: f64,
    /// Transmitted power in watts.
    pub transmit_power: f64,
    pub eta_opt: f64,
    pub eta_atm: f64,
    /// Returns with intensity below this (same computed unit as the radar
    /// equation output) are dropped.
    pub drop_threshold: f64,
    pub max_range: f64,
    /// Unit direction vectors in the sensor frame.
    pub beam_directions: Vec<Vector3<f64>>,
}

impl Default for LidarConfig {
    fn default() -> Self {
        LidarConfig {
            wavelength: 905e-9,
            aperture: 0.025,
            transmit_power: 1.0,
            eta_opt: 1.0,
            eta_atm: 1.0,
            drop_threshold: 0.0,
            max_range: 200.0,
            beam_directions: Vec::new(),
        }
    }
}

impl NamedComponent for LidarConfig {
    const NAME: &'static str = "LidarConfig";
}

impl Component for LidarConfig {
    fn type_name(&self) -> &'static str {
        Self::NAME
    }

    fn attribute_names(&self) -> &'static [&'static str] {
        &[
            "wavelength",
            "aperture",
            "transmit_power",
            "eta_opt",
            "eta_atm",
            "drop_threshold",
            "max_range",
            "beam_directions",
        ]
    }

    fn attribute(&self, name: &str) -> Option<AttrValue> {
        match name {
            "wavelength" => Some(AttrValue::Float(self.wavelength)),
            "aperture" => Some(AttrValue::Float(self.aperture)),
            "transmit_power" => Some(AttrValue::Float(self.transmit_power)),
            "eta_opt" => Some(AttrValue::Float(self.eta_opt)),
            "eta_atm" => Some(AttrValue::Float(self.eta_atm)),
            "drop_threshold" => Some(AttrValue::Float(self.drop_threshold)),
            "max_range" => Some(AttrValue::Float(self.max_range)),
            "beam_directions" => {
                let mut data = Vec::with_capacity(self.beam_directions.len() * 3);
                for d in &self.beam_directions {
                    data.extend_from_slice(&[d.x, d.y, d.z]);
                }
                Some(AttrValue::FloatArray { dims: vec![self.beam_directions.len(), 3], data })
            }
            _ => None,
        }
    }

    fn set_attribute(&mut self, name: &str, value: AttrValue) -> Result<(), String> {
        match name {
            "beam_directions" => match value {
                AttrValue::FloatArray { dims, data } if dims.len() == 2 && dims[1] == 3 => {
                    let dirs: Vec<Vector3<f64>> = data
                        .chunks_exact(3)
                        .map(|c| Vector3::new(c[0], c[1], c[2]))
                        .collect();
                    for d in &dirs {
                        if (d.norm() - 1.0).abs() > 1e-12 {
                            return Err(format!(
                                "beam directions must be unit vectors, got norm {}",
                                d.norm()
                            ));
                        }
                    }
                    self.beam_directions = dirs;
                    Ok(())
                }
                other => Err(format!("expected a Kx3 float array, got {}", other.kind())),
            },
            _ => {
                let v = expect_float(&value)?;
                match name {
                    "wavelength" | "aperture" | "transmit_power" | "max_range" => {
                        if !(v > 0.0) {
                            return Err(format!("{name} must be > 0, got {v}"));
                        }
                    }
                    "eta_opt" | "eta_atm" => {
                        if !(v > 0.0 && v <= 1.0) {
                            return Err(format!("{name} must be in (0, 1], got {v}"));
                        }
                    }
                    "drop_threshold" => {
                        if v < 0.0 {
                            return Err(format!("drop_threshold must be >= 0, got {v}"));
                        }
                    }
                    _ => return Err(format!("LidarConfig has no attribute {name:?}")),
                }
                match name {
                    "wavelength" => self.wavelength = v,
                    "aperture" => self.aperture = v,
                    "transmit_power" => self.transmit_power = v,
                    "eta_opt" => self.eta_opt = v,
                    "eta_atm" => self.eta_atm = v,
                    "drop_threshold" => self.drop_threshold = v,
                    "max_range" => self.max_range = v,
                    _ => unreachable!(),
                }
                Ok(())
            }
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

// ---------------------------------------------------------------------------
// Scan processor
// ---------------------------------------------------------------------------

/// Casts every beam of each lidar entity through the scene, evaluates the
/// intensity chain per hit, drops returns below the threshold and writes
/// the survivors (world frame, beam order) into the lidar's PointCloud.
pub struct LidarScan {
    target: Option<String>,
}

impl LidarScan {
    pub fn new(target: Option<String>) -> Self {
        LidarScan { target }
    }
}

impl Processor for LidarScan {
    fn name(&self) -> &str {
        "LidarScan"
    }

    fn reads(&self) -> &'static [&'static str] {
        &["LidarConfig", "Transform", "Mesh", "Material"]
    }

    fn writes(&self) -> &'static [&'static str] {
        &["PointCloud"]
    }

    fn step(&mut self, world: &World) -> Result<(), EcsError> {
        for lidar_entity in world.query(&["LidarConfig", "Transform"]) {
            if let Some(name) = &self.target {
                if world.entity_name(lidar_entity) != Some(name.as_str()) {
                    continue;
                }
            }
            // The output cloud must already be attached; processors never
            // change component presence.
            if !world.has_component(lidar_entity, PointCloud::NAME) {
                return Err(EcsError::MissingComponent {
                    entity: lidar_entity,
                    component: PointCloud::NAME.into(),
                });
            }
            let cfg = world.component_ref::<LidarConfig>(lidar_entity)?.clone();
            let (origin, rotation) = {
                let tr = world.component_ref::<Transform>(lidar_entity)?;
                let origin = Point3::new(tr.world[(0, 3)], tr.world[(1, 3)], tr.world[(2, 3)]);
                (origin, tr.world.fixed_view::<3, 3>(0, 0).into_owned())
            };

            // Snapshot the scene: world-space triangles plus per-entity
            // materials, looked up lazily on hit.
            let mut placed: Vec<(Mesh, nalgebra::Matrix4<f64>, EntityId)> = Vec::new();
            let mut materials: HashMap<EntityId, Option<Material>> = HashMap::new();
            for scene_entity in world.query(&["Mesh", "Transform"]) {
                if scene_entity == lidar_entity {
                    continue;
                }
                let mesh = world.component_ref::<Mesh>(scene_entity)?.clone();
                let tr = world.component_ref::<Transform>(scene_entity)?.world;
                placed.push((mesh, tr, scene_entity));
                let material = if world.has_component(scene_entity, Material::NAME) {
                    Some(world.component_ref::<Material>(scene_entity)?.clone())
                } else {
                    None
                };
                materials.insert(scene_entity, material);
            }
            let index =
                SceneIndex::from_meshes(placed.iter().map(|(m, t, e)| (m, t, *e)));

            let chain_err = |e: LidarError| EcsError::Attribute {
                component: LidarConfig::NAME.into(),
                attribute: "scan".into(),
                message: e.to_string(),
            };

            let mut points = Vec::new();
            let mut intensities = Vec::new();
            for dir in &cfg.beam_directions {
                let world_dir = rotation * dir;
                let Some(hit) = index.cast(&origin, &world_dir, cfg.max_range) else {
                    continue;
                };
                if hit.incidence >= std::f64::consts::FRAC_PI_2 {
                    continue; // grazing: no physical return
                }
                let material = materials
                    .get(&hit.entity)
                    .and_then(|m| m.as_ref())
                    .ok_or(EcsError::MissingComponent {
                        entity: hit.entity,
                        component: Material::NAME.into(),
                    })?;
                let intensity = return_intensity(
                    cfg.transmit_power,
                    cfg.aperture,
                    cfg.wavelength,
                    cfg.eta_opt,
                    cfg.eta_atm,
                    material,
                    hit.incidence,
                    hit.range,
                )
                .map_err(chain_err)?;
                if intensity >= cfg.drop_threshold {
                    points.push(hit.point);
                    intensities.push(intensity);
                }
            }

            let mut cloud = world.component_mut::<PointCloud>(lidar_entity)?;
            cloud.points = points;
            cloud.intensity = intensities;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::Time;
    use crate::scene::make_plane;
    use std::f64::consts::PI;

    // Oracle for the whole chain: substituting the cross section into the
    // radar equation collapses it to
    //   I = P D^2 pi cos(theta) f_r eta_opt eta_atm / (4 R^2).
    fn closed_form(p: f64, d: f64, theta: f64, fr: f64, eo: f64, ea: f64, r: f64) -> f64 {
        p * d * d * PI * theta.cos() * fr * eo * ea / (4.0 * r * r)
    }

    #[test]
    fn beamwidth_hand_value_and_scaling() {
        // 4 * 905e-9 / (pi * 0.025), evaluated independently.
        let oracle = 4.0 * 905e-9 / (PI * 0.025);
        let got = beamwidth(905e-9, 0.025).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle);
        assert!((got - 4.6091e-5).abs() / got < 1e-4);
        let halved = beamwidth(905e-9, 0.05).unwrap();
        assert!((halved - got / 2.0).abs() < 1e-18);
        assert!(matches!(beamwidth(0.0, 0.025), Err(LidarError::NonPositiveInput { .. })));
    }

    #[test]
    fn footprint_zero_hand_value_and_quadratic_scaling() {
        assert_eq!(footprint_area(0.0, 1e-3), 0.0);
        let bw = beamwidth(905e-9, 0.025).unwrap();
        let oracle = PI * 100.0 * bw * bw / 4.0;
        let got = footprint_area(10.0, bw);
        assert!((got - oracle).abs() <= 1e-15 * oracle.abs());
        assert!((got - 1.6687e-7).abs() / got < 1e-3);
        assert!((footprint_area(20.0, bw) - 4.0 * got).abs() < 1e-15);
    }

    #[test]
    fn lambert_brdf_values() {
        assert!((brdf_lambert(1.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert_eq!(brdf_lambert(0.0).unwrap(), 0.0);
        assert!(matches!(brdf_lambert(1.5), Err(LidarError::ReflectivityOutOfRange(_))));
    }

    #[test]
    fn oren_nayar_reduces_to_lambert_for_smooth_surfaces() {
        for theta in [0.0, 0.3, 1.2] {
            let on = brdf_oren_nayar(0.7, 0.0, theta).unwrap();
            let lambert = brdf_lambert(0.7).unwrap();
            assert_eq!(on, lambert);
        }
    }

    #[test]
    fn oren_nayar_spot_value() {
        // Hand-derived: s2 = 0.25, A = 1 - 0.125/0.58 = 0.78448...,
        // B = 0.1125/0.34 = 0.33088..., f_r = (A + B*sin45*tan45)/pi.
        let s2: f64 = 0.25;
        let a = 1.0 - 0.5 * s2 / (s2 + 0.33);
        let b = 0.45 * s2 / (s2 + 0.09);
        assert!((a - 0.78448).abs() < 1e-4);
        assert!((b - 0.33088).abs() < 1e-4);
        let theta = PI / 4.0;
        let oracle = (a + b * theta.sin() * theta.tan()) / PI;
        let got = brdf_oren_nayar(1.0, 0.5, theta).unwrap();
        assert_eq!(got, oracle);
        assert!((got - 0.32417).abs() < 1e-4);
    }

    #[test]
    fn oren_nayar_at_normal_incidence_drops_the_retro_term() {
        let got = brdf_oren_nayar(1.0, 0.5, 0.0).unwrap();
        let s2: f64 = 0.25;
        let a = 1.0 - 0.5 * s2 / (s2 + 0.33);
        assert_eq!(got, a / PI);
    }

    #[test]
    fn oren_nayar_rejects_grazing() {
        assert!(matches!(
            brdf_oren_nayar(1.0, 0.5, PI / 2.0),
            Err(LidarError::GrazingAngle(_))
        ));
    }

    #[test]
    fn backscatter_cancellation_at_normal_incidence() {
        // Lambert rho=1: sigma = 4 pi A_fp / pi = 4 A_fp exactly.
        let bw = beamwidth(905e-9, 0.025).unwrap();
        let fr = brdf_lambert(1.0).unwrap();
        let sigma = backscatter_cross_section(0.0, 10.0, fr, bw);
        let afp = footprint_area(10.0, bw);
        assert!((sigma - 4.0 * afp).abs() <= 1e-12 * sigma);
        assert!((sigma - 6.675e-7).abs() / sigma < 1e-3);
        // cos(theta) kills the cross section at grazing.
        let near_grazing = backscatter_cross_section(PI / 2.0 - 1e-9, 10.0, fr, bw);
        assert!(near_grazing < sigma * 1e-8);
    }

    #[test]
    fn radar_equation_hand_value() {
        // P=1, D=0.025, lambda=905e-9, eta=1, theta=0, Lambert rho=1, R=10:
        // closed form gives exactly 0.025^2/(4*100)/1 ... = 1.5625e-6.
        let bw = beamwidth(905e-9, 0.025).unwrap();
        let fr = brdf_lambert(1.0).unwrap();
        let sigma = backscatter_cross_section(0.0, 10.0, fr, bw);
        let i = received_intensity(1.0, 0.025, 10.0, bw, 1.0, 1.0, sigma).unwrap();
        let oracle = closed_form(1.0, 0.025, 0.0, fr, 1.0, 1.0, 10.0);
        assert!((i - oracle).abs() <= 1e-12 * oracle);
        assert!((i - 1.5625e-6).abs() / 1.5625e-6 < 1e-6);
    }

    #[test]
    fn intensity_follows_inverse_square_after_footprint_substitution() {
        let bw = beamwidth(905e-9, 0.025).unwrap();
        let fr = brdf_lambert(0.8).unwrap();
        let at = |r: f64| {
            let sigma = backscatter_cross_section(0.0, r, fr, bw);
            received_intensity(1.0, 0.025, r, bw, 1.0, 1.0, sigma).unwrap()
        };
        let ratio = at(20.0) / at(10.0);
        assert!((ratio - 0.25).abs() < 1e-12);
    }

    #[test]
    fn intensity_is_nonnegative_and_falls_with_range() {
        let m = Material { reflectivity: 0.7, roughness: 0.3, model: ReflectanceModel::OrenNayar };
        let theta = 0.4;
        let mut previous = f64::INFINITY;
        for r in [1.0, 2.0, 5.0, 10.0, 50.0, 200.0] {
            let i = return_intensity(2.0, 0.03, 905e-9, 0.9, 0.8, &m, theta, r).unwrap();
            assert!(i >= 0.0);
            assert!(i < previous, "intensity must fall with range");
            previous = i;
        }
    }

    #[test]
    fn eta_scales_linearly() {
        let m = Material { reflectivity: 1.0, roughness: 0.0, model: ReflectanceModel::Lambert };
        let full = return_intensity(1.0, 0.025, 905e-9, 1.0, 1.0, &m, 0.0, 10.0).unwrap();
        let half = return_intensity(1.0, 0.025, 905e-9, 1.0, 0.5, &m, 0.0, 10.0).unwrap();
        assert_eq!(half, full * 0.5);
        assert!(matches!(
            return_intensity(1.0, 0.025, 905e-9, 1.0, 1.0, &m, 0.0, 0.0),
            Err(LidarError::NonPositiveRange(_))
        ));
    }

    #[test]
    fn chain_equals_closed_form_across_parameters() {
        let mut s = 99u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let rho = next();
            let sigma_r = next() * 2.0;
            let theta = next() * (PI / 2.0 - 1e-3);
            let r = 1.0 + next() * 99.0;
            let lam = 400e-9 + next() * 1200e-9;
            let d = 0.005 + next() * 0.1;
            let p = 0.1 + next() * 10.0;
            let eo = 0.05 + next() * 0.95;
            let ea = 0.05 + next() * 0.95;
            let bw = beamwidth(lam, d).unwrap();
            let fr = brdf_oren_nayar(rho, sigma_r, theta).unwrap();
            let sig = backscatter_cross_section(theta, r, fr, bw);
            let i = received_intensity(p, d, r, bw, eo, ea, sig).unwrap();
            let oracle = closed_form(p, d, theta, fr, eo, ea, r);
            assert!(
                (i - oracle).abs() <= 1e-12 * oracle.abs().max(f64::MIN_POSITIVE),
                "chain {i} vs closed form {oracle}"
            );
        }
    }

    #[test]
    fn oren_nayar_retro_term_is_monotone_in_incidence() {
        // The retroreflection term B sin(theta) tan(theta) is non-negative
        // and grows with theta, so f_r never falls below its theta=0 value
        // and is non-decreasing toward grazing. (It does dip below plain
        // Lambert near normal incidence because A < 1.)
        let at_normal = brdf_oren_nayar(0.6, 0.4, 0.0).unwrap();
        let mut previous = at_normal;
        for theta in [0.1, 0.5, 1.0, 1.4] {
            let on = brdf_oren_nayar(0.6, 0.4, theta).unwrap();
            assert!(on >= at_normal);
            assert!(on >= previous);
            previous = on;
        }
        assert!(at_normal < brdf_lambert(0.6).unwrap());
    }

    #[test]
    fn beam_pattern_single_directions() {
        let dirs = make_beam_pattern(&[0.0], &[0.0]).unwrap();
        assert_eq!(dirs.len(), 1);
        assert!((dirs[0] - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        let dirs = make_beam_pattern(&[90.0], &[0.0]).unwrap();
        assert!((dirs[0] - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
        let up = make_beam_pattern(&[0.0], &[90.0]).unwrap();
        assert!((up[0] - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn beam_pattern_grid_count_and_order() {
        let az = linspace_exclusive(0.0, 360.0, 360);
        assert_eq!(az.len(), 360);
        assert_eq!(az[0], 0.0);
        assert_eq!(az[359], 359.0);
        let dirs = make_beam_pattern(&az, &[0.0]).unwrap();
        assert_eq!(dirs.len(), 360);
        // elevation-major: two elevations of three azimuths each
        let grid = make_beam_pattern(&[0.0, 10.0, 20.0], &[-5.0, 5.0]).unwrap();
        assert_eq!(grid.len(), 6);
        assert!(grid[0].z < 0.0 && grid[2].z < 0.0 && grid[3].z > 0.0);
        assert!(matches!(make_beam_pattern(&[], &[0.0]), Err(LidarError::EmptyPattern)));
    }

    fn scan_world(threshold: f64) -> (World, EntityId) {
        let mut w = World::new();
        let lidar = w.create_entity(Some("lidar")).unwrap();
        let wall = w.create_entity(Some("wall")).unwrap();
        let clock = w.create_entity(Some("clock")).unwrap();

        let mut cfg = LidarConfig::default();
        cfg.drop_threshold = threshold;
        cfg.beam_directions = make_beam_pattern(&[0.0], &[0.0]).unwrap(); // +x
        w.attach(lidar, cfg).unwrap();
        w.attach(lidar, Transform::default()).unwrap();
        w.attach(lidar, PointCloud::default()).unwrap();

        // Plane normal +z rotated to face -x, then pushed to x = +5.
        let mut tr = Transform::default();
        let face_ray = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Vector3::y_axis(),
            PI / 2.0,
        )
        .to_homogeneous();
        tr.world = face_ray;
        tr.world[(0, 3)] = 5.0;
        w.attach(wall, make_plane(4.0, 4.0).unwrap()).unwrap();
        w.attach(wall, tr).unwrap();
        w.attach(
            wall,
            Material { reflectivity: 1.0, roughness: 0.0, model: ReflectanceModel::Lambert },
        )
        .unwrap();

        w.attach(clock, Time::default()).unwrap();
        w.register_processor(Box::new(LidarScan::new(None)));
        (w, lidar)
    }

    #[test]
    fn single_ray_return_matches_the_chain() {
        let (mut w, lidar) = scan_world(0.0);
        w.step(&mut []).unwrap();
        let cloud = w.component_ref::<PointCloud>(lidar).unwrap();
        assert_eq!(cloud.points.len(), 1);
        let m = Material { reflectivity: 1.0, roughness: 0.0, model: ReflectanceModel::Lambert };
        let expected = return_intensity(1.0, 0.025, 905e-9, 1.0, 1.0, &m, 0.0, 5.0).unwrap();
        assert!((cloud.intensity[0] - expected).abs() <= 1e-15 * expected);
        assert!((cloud.points[0] - Point3::new(5.0, 0.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn threshold_above_intensity_drops_everything() {
        let (mut w, lidar) = scan_world(1.0); // chain value is ~1.56e-5 at 5 m
        w.step(&mut []).unwrap();
        let cloud = w.component_ref::<PointCloud>(lidar).unwrap();
        assert!(cloud.points.is_empty());
        assert!(cloud.intensity.is_empty());
    }

    #[test]
    fn hit_without_material_is_an_error() {
        let mut w = World::new();
        let lidar = w.create_entity(Some("lidar")).unwrap();
        let wall = w.create_entity(Some("wall")).unwrap();
        let mut cfg = LidarConfig::default();
        cfg.beam_directions = make_beam_pattern(&[0.0], &[0.0]).unwrap();
        w.attach(lidar, cfg).unwrap();
        w.attach(lidar, Transform::default()).unwrap();
        w.attach(lidar, PointCloud::default()).unwrap();
        let mut tr = Transform::default();
        tr.world = nalgebra::Rotation3::from_axis_angle(&nalgebra::Vector3::y_axis(), PI / 2.0)
            .to_homogeneous();
        tr.world[(0, 3)] = 5.0;
        w.attach(wall, make_plane(4.0, 4.0).unwrap()).unwrap();
        w.attach(wall, tr).unwrap();
        w.register_processor(Box::new(LidarScan::new(None)));
        match w.step(&mut []) {
            Err(EcsError::MissingComponent { component, .. }) => {
                assert_eq!(component, "Material");
            }
            other => panic!("expected MissingComponent, got {other:?}"),
        }
    }

    #[test]
    fn two_targets_show_the_inverse_square_law() {
        // One beam forward to a wall at 10 m, one backward to a wall at
        // 20 m; both perpendicular to their ray, identical material.
        let mut w = World::new();
        let lidar = w.create_entity(Some("lidar")).unwrap();
        let front = w.create_entity(Some("front")).unwrap();
        let back = w.create_entity(Some("back")).unwrap();

        let mut cfg = LidarConfig::default();
        cfg.max_range = 100.0;
        cfg.beam_directions = make_beam_pattern(&[0.0, 180.0], &[0.0]).unwrap();
        w.attach(lidar, cfg).unwrap();
        w.attach(lidar, Transform::default()).unwrap();
        w.attach(lidar, PointCloud::default()).unwrap();

        let material =
            Material { reflectivity: 0.9, roughness: 0.0, model: ReflectanceModel::Lambert };
        let face = nalgebra::Rotation3::from_axis_angle(&nalgebra::Vector3::y_axis(), PI / 2.0)
            .to_homogeneous();
        let mut tr_front = Transform::default();
        tr_front.world = face;
        tr_front.world[(0, 3)] = 10.0;
        w.attach(front, make_plane(2.0, 2.0).unwrap()).unwrap();
        w.attach(front, tr_front).unwrap();
        w.attach(front, material.clone()).unwrap();

        let mut tr_back = Transform::default();
        tr_back.world = face;
        tr_back.world[(0, 3)] = -20.0;
        w.attach(back, make_plane(2.0, 2.0).unwrap()).unwrap();
        w.attach(back, tr_back).unwrap();
        w.attach(back, material).unwrap();

        w.register_processor(Box::new(LidarScan::new(None)));
        w.step(&mut []).unwrap();

        let cloud = w.component_ref::<PointCloud>(lidar).unwrap();
        assert_eq!(cloud.points.len(), 2);
        let ratio = cloud.intensity[0] / cloud.intensity[1];
        assert!((ratio - 4.0).abs() < 1e-9, "ratio {ratio}");
    }

    #[test]
    fn raising_the_threshold_never_adds_points() {
        let mesh = make_plane(40.0, 40.0).unwrap();
        let mut below = Transform::default();
        below.world[(2, 3)] = -2.0;
        let mut w = World::new();
        let lidar = w.create_entity(Some("lidar")).unwrap();
        let ground = w.create_entity(Some("ground")).unwrap();
        let mut cfg = LidarConfig::default();
        cfg.beam_directions = make_beam_pattern(
            &linspace_exclusive(0.0, 360.0, 36),
            &[-60.0, -45.0, -30.0, -20.0, -10.0],
        )
        .unwrap();
        w.attach(lidar, cfg).unwrap();
        w.attach(lidar, Transform::default()).unwrap();
        w.attach(lidar, PointCloud::default()).unwrap();
        w.attach(ground, mesh).unwrap();
        w.attach(ground, below).unwrap();
        w.attach(
            ground,
            Material { reflectivity: 0.8, roughness: 0.3, model: ReflectanceModel::OrenNayar },
        )
        .unwrap();
        w.register_processor(Box::new(LidarScan::new(None)));

        let mut counts = Vec::new();
        for k in 0..20 {
            let threshold = k as f64 * 2e-6;
            w.component_mut::<LidarConfig>(lidar).unwrap().drop_threshold = threshold;
            w.step(&mut []).unwrap();
            counts.push(w.component_ref::<PointCloud>(lidar).unwrap().points.len());
        }
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "counts {counts:?}");
        assert!(counts[0] > 0);
    }
}
