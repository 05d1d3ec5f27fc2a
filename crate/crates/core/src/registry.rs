//! The back-end factory registry.
//!
//! Every algorithm variant the configuration language can name lives
//! behind one of three factory shapes, registered under a dotted module
//! path: component factories produce blank component instances,
//! processor factories build pipeline stages from their arguments, and
//! initializer functions compute attribute values at build time.
//! [`Registry::builtin`] registers everything this crate ships; projects
//! embedding the library can add their own entries next to them.

use std::collections::BTreeMap;

use crate::attr::AttrValue;
use crate::config::ConfigValue;
use crate::ecs::{Component, Processor};
use crate::lidar;
use crate::motion::{self, Waypoint};
use crate::scene;

pub type ComponentFactory = Box<dyn Fn() -> Box<dyn Component> + Send + Sync>;
pub type ProcessorFactory = Box<dyn Fn(&FnArgs) -> Result<Box<dyn Processor>, String> + Send + Sync>;
pub type FunctionFactory = Box<dyn Fn(&FnArgs) -> Result<InitValue, String> + Send + Sync>;

/// What an initializer function hands back: a single attribute value, or
/// a bundle of named attributes applied together (e.g. mesh vertices and
/// triangles from one loader call).
#[derive(Debug, Clone, PartialEq)]
pub enum InitValue {
    Value(AttrValue),
    Bundle(BTreeMap<String, AttrValue>),
}

/// Named arguments for processor factories and initializer functions.
#[derive(Debug, Clone, Default)]
pub struct FnArgs {
    entries: Vec<(String, ConfigValue)>,
}

impl FnArgs {
    /// Builds from config pairs, rejecting nested initializer calls.
    pub fn from_pairs(pairs: &[(String, ConfigValue)]) -> Result<Self, String> {
        for (name, value) in pairs {
            if matches!(value, ConfigValue::Call { .. }) {
                return Err(format!("argument {name:?} must not be an initializer call"));
            }
        }
        Ok(FnArgs { entries: pairs.to_vec() })
    }

    pub fn insert(&mut self, name: &str, value: ConfigValue) {
        self.entries.push((name.to_string(), value));
    }

    pub fn get(&self, name: &str) -> Option<&ConfigValue> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// Errors when any argument name is outside the allowed set.
    pub fn expect_keys(&self, allowed: &[&str]) -> Result<(), String> {
        for (name, _) in &self.entries {
            if !allowed.contains(&name.as_str()) {
                return Err(format!("unexpected argument {name:?} (allowed: {allowed:?})"));
            }
        }
        Ok(())
    }

    pub fn get_f64(&self, name: &str) -> Result<f64, String> {
        match self.get(name) {
            Some(ConfigValue::Float(f)) => Ok(*f),
            Some(ConfigValue::Int(i)) => Ok(*i as f64),
            Some(other) => Err(format!("argument {name:?} must be a number, got {other:?}")),
            None => Err(format!("missing argument {name:?}")),
        }
    }

    pub fn get_f64_or(&self, name: &str, default: f64) -> Result<f64, String> {
        match self.get(name) {
            None => Ok(default),
            Some(_) => self.get_f64(name),
        }
    }

    pub fn get_u64(&self, name: &str) -> Result<u64, String> {
        match self.get(name) {
            Some(ConfigValue::Int(i)) if *i >= 0 => Ok(*i as u64),
            Some(other) => {
                Err(format!("argument {name:?} must be a non-negative integer, got {other:?}"))
            }
            None => Err(format!("missing argument {name:?}")),
        }
    }

    pub fn get_text(&self, name: &str) -> Result<String, String> {
        match self.get(name) {
            Some(ConfigValue::Text(s)) => Ok(s.clone()),
            Some(other) => Err(format!("argument {name:?} must be text, got {other:?}")),
            None => Err(format!("missing argument {name:?}")),
        }
    }

    pub fn get_text_opt(&self, name: &str) -> Result<Option<String>, String> {
        match self.get(name) {
            None => Ok(None),
            Some(_) => self.get_text(name).map(Some),
        }
    }

    /// Angle spec: either a list of numbers (degrees) or a range mapping
    /// `{start, stop, count}` with an exclusive stop.
    pub fn get_angles(&self, name: &str) -> Result<Vec<f64>, String> {
        match self.get(name) {
            Some(ConfigValue::List(items)) => items
                .iter()
                .map(|v| match v {
                    ConfigValue::Float(f) => Ok(*f),
                    ConfigValue::Int(i) => Ok(*i as f64),
                    other => Err(format!("angles in {name:?} must be numbers, got {other:?}")),
                })
                .collect(),
            Some(ConfigValue::Map(entries)) => {
                let sub = FnArgs { entries: entries.clone() };
                sub.expect_keys(&["start", "stop", "count"])?;
                let start = sub.get_f64("start")?;
                let stop = sub.get_f64("stop")?;
                let count = sub.get_u64("count")? as usize;
                if count == 0 {
                    return Err(format!("range {name:?} needs count > 0"));
                }
                Ok(lidar::linspace_exclusive(start, stop, count))
            }
            Some(other) => {
                Err(format!("argument {name:?} must be a list or range map, got {other:?}"))
            }
            None => Err(format!("missing argument {name:?}")),
        }
    }

    /// Waypoint list: a sequence of `[x, y]` pairs.
    pub fn get_waypoints(&self, name: &str) -> Result<Vec<Waypoint>, String> {
        let items = match self.get(name) {
            Some(ConfigValue::List(items)) => items,
            Some(other) => {
                return Err(format!("argument {name:?} must be a list, got {other:?}"))
            }
            None => return Err(format!("missing argument {name:?}")),
        };
        let scalar = |v: &ConfigValue| -> Result<f64, String> {
            match v {
                ConfigValue::Float(f) => Ok(*f),
                ConfigValue::Int(i) => Ok(*i as f64),
                other => Err(format!("waypoint coordinates must be numbers, got {other:?}")),
            }
        };
        items
            .iter()
            .map(|item| match item {
                ConfigValue::List(pair) if pair.len() == 2 => {
                    Ok(Waypoint { x: scalar(&pair[0])?, y: scalar(&pair[1])? })
                }
                other => Err(format!("waypoints must be [x, y] pairs, got {other:?}")),
            })
            .collect()
    }
}

/// Maps dotted module paths to back-end factories.
pub struct Registry {
    components: BTreeMap<String, ComponentFactory>,
    processors: BTreeMap<String, ProcessorFactory>,
    functions: BTreeMap<String, FunctionFactory>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            components: BTreeMap::new(),
            processors: BTreeMap::new(),
            functions: BTreeMap::new(),
        }
    }

    pub fn register_component<F>(&mut self, path: &str, factory: F)
    where
        F: Fn() -> Box<dyn Component> + Send + Sync + 'static,
    {
        self.components.insert(path.to_string(), Box::new(factory));
    }

    pub fn register_processor<F>(&mut self, path: &str, factory: F)
    where
        F: Fn(&FnArgs) -> Result<Box<dyn Processor>, String> + Send + Sync + 'static,
    {
        self.processors.insert(path.to_string(), Box::new(factory));
    }

    pub fn register_function<F>(&mut self, path: &str, factory: F)
    where
        F: Fn(&FnArgs) -> Result<InitValue, String> + Send + Sync + 'static,
    {
        self.functions.insert(path.to_string(), Box::new(factory));
    }

    pub fn component(&self, path: &str) -> Option<&ComponentFactory> {
        self.components.get(path)
    }

    pub fn processor(&self, path: &str) -> Option<&ProcessorFactory> {
        self.processors.get(path)
    }

    pub fn function(&self, path: &str) -> Option<&FunctionFactory> {
        self.functions.get(path)
    }

    /// What a path is registered as, for diagnostics.
    pub fn kind_of(&self, path: &str) -> Option<&'static str> {
        if self.components.contains_key(path) {
            Some("component")
        } else if self.processors.contains_key(path) {
            Some("processor")
        } else if self.functions.contains_key(path) {
            Some("function")
        } else {
            None
        }
    }

    /// The full built-in library: every shipped component, processor and
    /// initializer function under its `gemini.*` module path.
    pub fn builtin() -> Self {
        let mut reg = Registry::empty();

        // -- components ----------------------------------------------------
        reg.register_component("gemini.components.time", || {
            Box::new(crate::components::Time::default())
        });
        reg.register_component("gemini.components.transform", || {
            Box::new(crate::components::Transform::default())
        });
        reg.register_component("gemini.components.mesh", || Box::new(scene::Mesh::default()));
        reg.register_component("gemini.components.point_cloud", || {
            Box::new(scene::PointCloud::default())
        });
        reg.register_component("gemini.components.line_set", || {
            Box::new(scene::LineSet::default())
        });
        reg.register_component("gemini.components.material", || {
            Box::new(scene::Material::default())
        });
        reg.register_component("gemini.components.trajectory", || {
            Box::new(motion::Trajectory::default())
        });
        reg.register_component("gemini.components.sine_sea_state", || {
            Box::new(motion::SineSeaState::default())
        });
        reg.register_component("gemini.components.ar2_sea_state", || {
            Box::new(motion::Ar2SeaState::default())
        });
        reg.register_component("gemini.components.lidar", || {
            Box::new(lidar::LidarConfig::default())
        });

        // -- processors ----------------------------------------------------
        reg.register_processor("gemini.processors.update_time", |args| {
            args.expect_keys(&["entity"])?;
            Ok(Box::new(motion::UpdateTime::new()))
        });
        reg.register_processor("gemini.processors.rotate_frame", |args| {
            args.expect_keys(&["entity", "angular_velocity"])?;
            let omega = args.get_f64("angular_velocity")?;
            Ok(Box::new(scene::RotateFrame::new(omega, args.get_text_opt("entity")?)))
        });
        reg.register_processor("gemini.processors.trajectory_reader", |args| {
            args.expect_keys(&["entity"])?;
            Ok(Box::new(motion::TrajectoryReader::new(args.get_text_opt("entity")?)))
        });
        reg.register_processor("gemini.processors.sine_sea_state", |args| {
            args.expect_keys(&["entity"])?;
            Ok(Box::new(motion::SineSeaStateStep::new(args.get_text_opt("entity")?)))
        });
        reg.register_processor("gemini.processors.ar2_sea_state", |args| {
            args.expect_keys(&["entity"])?;
            Ok(Box::new(motion::Ar2SeaStateStep::new(args.get_text_opt("entity")?)))
        });
        reg.register_processor("gemini.processors.lidar_scan", |args| {
            args.expect_keys(&["entity"])?;
            Ok(Box::new(lidar::LidarScan::new(args.get_text_opt("entity")?)))
        });

        // -- initializer functions ------------------------------------------
        reg.register_function("gemini.init.load_mesh", |args| {
            args.expect_keys(&["path"])?;
            let path = args.get_text("path")?;
            let mesh = scene::load_mesh(std::path::Path::new(&path)).map_err(|e| e.to_string())?;
            Ok(mesh_bundle(&mesh))
        });
        reg.register_function("gemini.init.make_plane", |args| {
            args.expect_keys(&["width", "depth"])?;
            let mesh = scene::make_plane(args.get_f64("width")?, args.get_f64("depth")?)
                .map_err(|e| e.to_string())?;
            Ok(mesh_bundle(&mesh))
        });
        reg.register_function("gemini.init.make_icosphere", |args| {
            args.expect_keys(&["radius", "subdivisions"])?;
            let mesh = scene::make_icosphere(
                args.get_f64("radius")?,
                args.get_u64("subdivisions")? as u32,
            )
            .map_err(|e| e.to_string())?;
            Ok(mesh_bundle(&mesh))
        });
        reg.register_function("gemini.init.load_trajectory", |args| {
            args.expect_keys(&["path"])?;
            let path = args.get_text("path")?;
            let traj =
                motion::load_trajectory(std::path::Path::new(&path)).map_err(|e| e.to_string())?;
            Ok(trajectory_bundle(&traj))
        });
        reg.register_function("gemini.init.plan_trajectory", |args| {
            args.expect_keys(&["waypoints", "path", "speed", "dt", "t0"])?;
            let waypoints = if args.get("waypoints").is_some() {
                args.get_waypoints("waypoints")?
            } else {
                let path = args.get_text("path").map_err(|_| {
                    "plan_trajectory needs either waypoints or a path".to_string()
                })?;
                motion::load_waypoints(std::path::Path::new(&path)).map_err(|e| e.to_string())?
            };
            let traj = motion::plan_trajectory(
                &waypoints,
                args.get_f64("speed")?,
                args.get_f64("dt")?,
                args.get_f64_or("t0", 0.0)?,
            )
            .map_err(|e| e.to_string())?;
            Ok(trajectory_bundle(&traj))
        });
        reg.register_function("gemini.init.make_beam_pattern", |args| {
            args.expect_keys(&["azimuths", "elevations"])?;
            let az = args.get_angles("azimuths")?;
            let el = args.get_angles("elevations")?;
            let dirs = lidar::make_beam_pattern(&az, &el).map_err(|e| e.to_string())?;
            let mut data = Vec::with_capacity(dirs.len() * 3);
            for d in &dirs {
                data.extend_from_slice(&[d.x, d.y, d.z]);
            }
            Ok(InitValue::Value(AttrValue::FloatArray { dims: vec![dirs.len(), 3], data }))
        });
        reg.register_function("gemini.init.pose", |args| {
            args.expect_keys(&["x", "y", "z", "roll", "pitch", "yaw"])?;
            let (x, y, z) = (
                args.get_f64_or("x", 0.0)?,
                args.get_f64_or("y", 0.0)?,
                args.get_f64_or("z", 0.0)?,
            );
            let (roll, pitch, yaw) = (
                args.get_f64_or("roll", 0.0)?,
                args.get_f64_or("pitch", 0.0)?,
                args.get_f64_or("yaw", 0.0)?,
            );
            let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Vector3::z_axis(), yaw)
                * nalgebra::Rotation3::from_axis_angle(&nalgebra::Vector3::y_axis(), pitch)
                * nalgebra::Rotation3::from_axis_angle(&nalgebra::Vector3::x_axis(), roll);
            let mut m = rot.to_homogeneous();
            m[(0, 3)] = x;
            m[(1, 3)] = y;
            m[(2, 3)] = z;
            Ok(InitValue::Value(crate::components::Transform::matrix_to_attr(&m)))
        });

        reg
    }
}

fn mesh_bundle(mesh: &scene::Mesh) -> InitValue {
    let mut bundle = BTreeMap::new();
    let as_component: &dyn Component = mesh;
    bundle.insert("vertices".to_string(), as_component.attribute("vertices").unwrap());
    bundle.insert("triangles".to_string(), as_component.attribute("triangles").unwrap());
    InitValue::Bundle(bundle)
}

fn trajectory_bundle(traj: &motion::Trajectory) -> InitValue {
    let mut bundle = BTreeMap::new();
    let as_component: &dyn Component = traj;
    for name in ["timestamps", "x", "y", "heading"] {
        bundle.insert(name.to_string(), as_component.attribute(name).unwrap());
    }
    InitValue::Bundle(bundle)
}
