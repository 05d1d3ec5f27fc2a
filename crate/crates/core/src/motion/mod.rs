//! Waypoint-based trajectory planning, trajectory sampling and
//! resampling, the trajectory-reader processor, time stepping, and the
//! sea-state disturbance models (see [`seastate`]).

pub mod seastate;

use std::any::Any;
use std::path::Path;

use nalgebra::Matrix4;
use thiserror::Error;

use crate::attr::{wrap_angle, AttrValue};
use crate::components::{Time, Transform};
use crate::ecs::{time_entity, Component, EcsError, NamedComponent, Processor, World};
use crate::scene::rotation_z;

pub use seastate::{ar2_next, check_stationary, Ar2SeaState, Ar2SeaStateStep, SineSeaState,
                   SineSeaStateStep};

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("waypoint segment {index} is degenerate (coincident endpoints)")]
    DegenerateSegment { index: usize },
    #[error("speed must be > 0, got {0}")]
    InvalidSpeed(f64),
    #[error("time step must be > 0, got {0}")]
    InvalidTimeStep(f64),
    #[error("need at least 2 waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("waypoint {0} has non-finite coordinates")]
    NonFiniteWaypoint(usize),
    #[error("timestamps must be strictly increasing")]
    NonMonotonicTimestamps,
    #[error("AR(2) coefficients a1={a1}, a2={a2} are not stationary")]
    NonStationaryCoefficients { a1: f64, a2: f64 },
    #[error("line {line}: {message}")]
    TrajectoryFormat { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Planar waypoint in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
}

/// Sampled planar pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

/// Timestamped planar poses. Headings are stored wrapped to `(-pi, pi]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub timestamps: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub heading: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn pose_at(&self, index: usize) -> Pose {
        Pose { x: self.x[index], y: self.y[index], heading: self.heading[index] }
    }

    fn check(&self) -> Result<(), String> {
        let n = self.timestamps.len();
        if self.x.len() != n || self.y.len() != n || self.heading.len() != n {
            return Err("timestamps, x, y and heading must have equal lengths".into());
        }
        if n == 0 {
            return Err("trajectory must hold at least one sample".into());
        }
        // The negated form also rejects NaN timestamps.
        if self.timestamps.windows(2).any(|w| !(w[1] > w[0]))
            || self.timestamps.iter().any(|t| !t.is_finite())
        {
            return Err("timestamps must be finite and strictly increasing".into());
        }
        Ok(())
    }
}

impl NamedComponent for Trajectory {
    const NAME: &'static str = "Trajectory";
}

impl Component for Trajectory {
    fn type_name(&self) -> &'static str {
        Self::NAME
    }

    fn attribute_names(&self) -> &'static [&'static str] {
        &["timestamps", "x", "y", "heading"]
    }

    fn attribute(&self, name: &str) -> Option<AttrValue> {
        let data = match name {
            "timestamps" => &self.timestamps,
            "x" => &self.x,
            "y" => &self.y,
            "heading" => &self.heading,
            _ => return None,
        };
        Some(AttrValue::float_vector(data.clone()))
    }

    fn set_attribute(&mut self, name: &str, value: AttrValue) -> Result<(), String> {
        let data = match value {
            AttrValue::FloatArray { ref dims, ref data } if dims.len() == 1 => data.clone(),
            other => return Err(format!("expected a float vector, got {}", other.kind())),
        };
        match name {
            "timestamps" => self.timestamps = data,
            "x" => self.x = data,
            "y" => self.y = data,
            "heading" => self.heading = data.into_iter().map(wrap_angle).collect(),
            _ => return Err(format!("Trajectory has no attribute {name:?}")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), String> {
        self.check()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

// ---------------------------------------------------------------------------
// Planning and sampling
// ---------------------------------------------------------------------------

/// Interpolates through the waypoint polyline at constant speed.
///
/// Samples land on `t0, t0+dt, ...`; the final waypoint is always included
/// as the last sample (off the dt grid when the total path length is not a
/// multiple of `speed * dt`). Each sample's heading is the direction of
/// the segment it lies on; at a corner the later segment wins.
pub fn plan_trajectory(
    waypoints: &[Waypoint],
    speed: f64,
    dt: f64,
    t0: f64,
) -> Result<Trajectory, MotionError> {
    if waypoints.len() < 2 {
        return Err(MotionError::TooFewWaypoints(waypoints.len()));
    }
    if let Some(i) = waypoints.iter().position(|w| !(w.x.is_finite() && w.y.is_finite())) {
        return Err(MotionError::NonFiniteWaypoint(i));
    }
    if !(speed > 0.0) || !speed.is_finite() {
        return Err(MotionError::InvalidSpeed(speed));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(MotionError::InvalidTimeStep(dt));
    }

    // Cumulative arc length at each waypoint.
    let mut cumulative = Vec::with_capacity(waypoints.len());
    cumulative.push(0.0);
    for (i, pair) in waypoints.windows(2).enumerate() {
        let len = ((pair[1].x - pair[0].x).powi(2) + (pair[1].y - pair[0].y).powi(2)).sqrt();
        if len < 1e-12 {
            return Err(MotionError::DegenerateSegment { index: i });
        }
        cumulative.push(cumulative[i] + len);
    }
    let total = *cumulative.last().unwrap();

    let pose_at_arc = |s: f64| -> Pose {
        let s = s.clamp(0.0, total);
        let mut seg = cumulative.partition_point(|&c| c <= s);
        seg = seg.saturating_sub(1).min(waypoints.len() - 2);
        let a = waypoints[seg];
        let b = waypoints[seg + 1];
        let seg_len = cumulative[seg + 1] - cumulative[seg];
        let along = (s - cumulative[seg]) / seg_len;
        Pose {
            x: a.x + (b.x - a.x) * along,
            y: a.y + (b.y - a.y) * along,
            heading: wrap_angle((b.y - a.y).atan2(b.x - a.x)),
        }
    };

    let mut traj = Trajectory::default();
    let mut push = |t: f64, pose: Pose| {
        traj.timestamps.push(t);
        traj.x.push(pose.x);
        traj.y.push(pose.y);
        traj.heading.push(pose.heading);
    };

    let mut k: u64 = 0;
    loop {
        let s = speed * (k as f64) * dt;
        if s > total * (1.0 + 1e-12) + 1e-12 {
            break;
        }
        push(t0 + (k as f64) * dt, pose_at_arc(s));
        k += 1;
    }
    let last_s = speed * ((k - 1) as f64) * dt;
    if total - last_s > 1e-9 * total.max(1.0) {
        push(t0 + total / speed, pose_at_arc(total));
    }
    Ok(traj)
}

/// Samples a pose at time `t`: linear in x and y, shortest-arc in heading.
/// Times outside the trajectory clamp to the boundary pose.
///
/// Panics if the trajectory is empty.
pub fn sample_trajectory(traj: &Trajectory, t: f64) -> Pose {
    assert!(!traj.is_empty(), "cannot sample an empty trajectory");
    match traj
        .timestamps
        .binary_search_by(|ts| ts.partial_cmp(&t).expect("sample time must be finite"))
    {
        Ok(i) => traj.pose_at(i),
        Err(0) => traj.pose_at(0),
        Err(i) if i == traj.len() => traj.pose_at(traj.len() - 1),
        Err(i) => {
            let (t0, t1) = (traj.timestamps[i - 1], traj.timestamps[i]);
            let alpha = (t - t0) / (t1 - t0);
            let (a, b) = (traj.pose_at(i - 1), traj.pose_at(i));
            let delta = wrap_angle(b.heading - a.heading);
            Pose {
                x: a.x + (b.x - a.x) * alpha,
                y: a.y + (b.y - a.y) * alpha,
                heading: wrap_angle(a.heading + delta * alpha),
            }
        }
    }
}

/// Resamples a trajectory at the given timestamps.
///
/// Resampling at the original timestamps reproduces the original data; an
/// empty timestamp list yields an empty trajectory (the only place a
/// zero-length trajectory is produced).
pub fn resample(traj: &Trajectory, timestamps: &[f64]) -> Result<Trajectory, MotionError> {
    if timestamps.iter().any(|t| !t.is_finite())
        || timestamps.windows(2).any(|w| !(w[1] > w[0]))
    {
        return Err(MotionError::NonMonotonicTimestamps);
    }
    let mut out = Trajectory::default();
    for &t in timestamps {
        let pose = sample_trajectory(traj, t);
        out.timestamps.push(t);
        out.x.push(pose.x);
        out.y.push(pose.y);
        out.heading.push(pose.heading);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Trajectory CSV
// ---------------------------------------------------------------------------

/// Parses the `t,x,y,heading` CSV format (header required, radians).
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory, MotionError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "t,x,y,heading")) => {}
        Some((i, other)) => {
            return Err(MotionError::TrajectoryFormat {
                line: i + 1,
                message: format!("expected header \"t,x,y,heading\", got {other:?}"),
            })
        }
        None => {
            return Err(MotionError::TrajectoryFormat { line: 1, message: "empty file".into() })
        }
    }
    let mut traj = Trajectory::default();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| MotionError::TrajectoryFormat {
                line: i + 1,
                message: format!("bad row {line:?}"),
            })?;
        if fields.len() != 4 {
            return Err(MotionError::TrajectoryFormat {
                line: i + 1,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        traj.timestamps.push(fields[0]);
        traj.x.push(fields[1]);
        traj.y.push(fields[2]);
        traj.heading.push(wrap_angle(fields[3]));
    }
    if traj.timestamps.iter().any(|t| !t.is_finite())
        || traj.timestamps.windows(2).any(|w| !(w[1] > w[0]))
    {
        return Err(MotionError::NonMonotonicTimestamps);
    }
    Ok(traj)
}

pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,x,y,heading\n");
    for i in 0..traj.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            traj.timestamps[i], traj.x[i], traj.y[i], traj.heading[i]
        ));
    }
    out
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory, MotionError> {
    parse_trajectory_csv(&std::fs::read_to_string(path)?)
}

/// Parses a waypoint CSV (`x,y` header), as produced by external planning
/// tools whose paths we only play back.
pub fn parse_waypoints_csv(text: &str) -> Result<Vec<Waypoint>, MotionError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "x,y")) => {}
        Some((i, other)) => {
            return Err(MotionError::TrajectoryFormat {
                line: i + 1,
                message: format!("expected header \"x,y\", got {other:?}"),
            })
        }
        None => {
            return Err(MotionError::TrajectoryFormat { line: 1, message: "empty file".into() })
        }
    }
    let mut waypoints = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| MotionError::TrajectoryFormat {
                line: i + 1,
                message: format!("bad row {line:?}"),
            })?;
        if fields.len() != 2 {
            return Err(MotionError::TrajectoryFormat {
                line: i + 1,
                message: format!("expected 2 fields, got {}", fields.len()),
            });
        }
        waypoints.push(Waypoint { x: fields[0], y: fields[1] });
    }
    Ok(waypoints)
}

pub fn load_waypoints(path: &Path) -> Result<Vec<Waypoint>, MotionError> {
    parse_waypoints_csv(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Processors
// ---------------------------------------------------------------------------

/// Advances the single world clock by its increment each iteration.
#[derive(Debug, Default)]
pub struct UpdateTime;

impl UpdateTime {
    pub fn new() -> Self {
        UpdateTime
    }
}

impl Processor for UpdateTime {
    fn name(&self) -> &str {
        "UpdateTime"
    }

    fn reads(&self) -> &'static [&'static str] {
        &["Time"]
    }

    fn writes(&self) -> &'static [&'static str] {
        &["Time"]
    }

    fn step(&mut self, world: &World) -> Result<(), EcsError> {
        let clock = time_entity(world)?;
        let mut time = world.component_mut::<Time>(clock)?;
        time.current_time += time.increment_step;
        Ok(())
    }
}

/// Places entities according to their trajectory at the current time:
/// translation (x, y, 0) and rotation Rz(heading). Sea-state processors
/// registered after this one compose their disturbance on top.
pub struct TrajectoryReader {
    target: Option<String>,
}

impl TrajectoryReader {
    pub fn new(target: Option<String>) -> Self {
        TrajectoryReader { target }
    }
}

impl Processor for TrajectoryReader {
    fn name(&self) -> &str {
        "TrajectoryReader"
    }

    fn reads(&self) -> &'static [&'static str] {
        &["Time", "Trajectory"]
    }

    fn writes(&self) -> &'static [&'static str] {
        &["Transform"]
    }

    fn step(&mut self, world: &World) -> Result<(), EcsError> {
        let clock = time_entity(world)?;
        let now = world.component_ref::<Time>(clock)?.current_time;
        for entity in world.query(&["Trajectory", "Transform"]) {
            if let Some(name) = &self.target {
                if world.entity_name(entity) != Some(name.as_str()) {
                    continue;
                }
            }
            let pose = {
                let traj = world.component_ref::<Trajectory>(entity)?;
                sample_trajectory(&traj, now)
            };
            let mut m: Matrix4<f64> = rotation_z(pose.heading);
            m[(0, 3)] = pose.x;
            m[(1, 3)] = pose.y;
            m[(2, 3)] = 0.0;
            world.component_mut::<Transform>(entity)?.world = m;
        }
        Ok(())
    }
}
