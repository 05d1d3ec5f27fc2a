//! 3D primitive components (point cloud, line set, mesh), lidar material
//! properties, mesh ingestion (ASCII OFF and a triangles-only OBJ subset),
//! procedural test geometry and the rotating-frame processor.

use std::any::Any;
use std::io::Write;
use std::path::Path;

use nalgebra::{Matrix4, Point3, Rotation3, Vector3};
use thiserror::Error;

use crate::attr::AttrValue;
use crate::components::{expect_float, expect_text, Transform};
use crate::ecs::{time_entity, Component, EcsError, NamedComponent, Processor, World};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("line {line}: face is not a triangle")]
    NonTriangleFace { line: usize },
    #[error("line {line}: vertex index out of range")]
    IndexOutOfRange { line: usize },
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("face {0} has zero area")]
    DegenerateFace(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Components
// ---------------------------------------------------------------------------

/// Discrete spatial samples without connectivity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
    /// Received intensity per point; empty when no intensity is carried.
    pub intensity: Vec<f64>,
}

impl PointCloud {
    pub fn validate_shape(&self) -> Result<(), String> {
        if !self.intensity.is_empty() && self.intensity.len() != self.points.len() {
            return Err(format!(
                "intensity length {} does not match point count {}",
                self.intensity.len(),
                self.points.len()
            ));
        }
        if self.intensity.iter().any(|i| *i < 0.0) {
            return Err("intensities must be non-negative".into());
        }
        Ok(())
    }
}

impl NamedComponent for PointCloud {
    const NAME: &'static str = "PointCloud";
}

impl Component for PointCloud {
    fn type_name(&self) -> &'static str {
        Self::NAME
    }

    fn attribute_names(&self) -> &'static [&'static str] {
        &["points", "intensity"]
    }

    fn attribute(&self, name: &str) -> Option<AttrValue> {
        match name {
            "points" => Some(points_to_attr(&self.points)),
            "intensity" => Some(AttrValue::float_vector(self.intensity.clone())),
            _ => None,
        }
    }

    fn set_attribute(&mut self, name: &str, value: AttrValue) -> Result<(), String> {
        match name {
            "points" => {
                self.points = points_from_attr(&value)?;
                Ok(())
            }
            "intensity" => match value {
                AttrValue::FloatArray { dims, data } if dims.len() == 1 => {
                    self.intensity = data;
                    Ok(())
                }
                other => Err(format!("expected a float vector, got {}", other.kind())),
            },
            _ => Err(format!("PointCloud has no attribute {name:?}")),
        }
    }

    fn validate(&self) -> Result<(), String> {
        self.validate_shape()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

/// Points plus index pairs defining which points are linked.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LineSet {
    pub points: Vec<Point3<f64>>,
    pub lines: Vec<[u64; 2]>,
}

impl LineSet {
    pub fn validate_shape(&self) -> Result<(), String> {
        let n = self.points.len() as u64;
        for (i, l) in self.lines.iter().enumerate() {
            if l[0] >= n || l[1] >= n {
                return Err(format!("line {i} references a missing point"));
            }
            if l[0] == l[1] {
                return Err(format!("line {i} is degenerate"));
            }
        }
        Ok(())
    }
}

impl NamedComponent for LineSet {
    const NAME: &'static str = "LineSet";
}

impl Component for LineSet {
    fn type_name(&self) -> &'static str {
        Self::NAME
    }

    fn attribute_names(&self) -> &'static [&'static str] {
        &["points", "lines"]
    }

    fn attribute(&self, name: &str) -> Option<AttrValue> {
        match name {
            "points" => Some(points_to_attr(&self.points)),
            "lines" => Some(AttrValue::UintArray {
                dims: vec![self.lines.len(), 2],
                data: self.lines.iter().flatten().copied().collect(),
            }),
            _ => None,
        }
    }

    fn set_attribute(&mut self, name: &str, value: AttrValue) -> Result<(), String> {
        match name {
            "points" => {
                self.points = points_from_attr(&value)?;
                Ok(())
            }
            "lines" => {
                self.lines = index_pairs_from_attr(&value)?;
                Ok(())
            }
            _ => Err(format!("LineSet has no attribute {name:?}")),
        }
    }

    fn validate(&self) -> Result<(), String> {
        self.validate_shape()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

/// Triangle mesh: vertices in meters plus index triples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[u64; 3]>,
}

impl Mesh {
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[u64; 3]>) -> Result<Self, SceneError> {
        let mesh = Mesh { vertices, triangles };
        mesh.validate_shape()
            .map_err(|m| SceneError::InvalidDimension(m))?;
        Ok(mesh)
    }

    pub fn validate_shape(&self) -> Result<(), String> {
        let n = self.vertices.len() as u64;
        for v in &self.vertices {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err("vertex coordinates must be finite".into());
            }
        }
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&idx| idx >= n) {
                return Err(format!("triangle {i} references a missing vertex"));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(format!("triangle {i} repeats a vertex index"));
            }
        }
        Ok(())
    }
}

impl NamedComponent for Mesh {
    const NAME: &'static str = "Mesh";
}

impl Component for Mesh {
    fn type_name(&self) -> &'static str {
        Self::NAME
    }

    fn attribute_names(&self) -> &'static [&'static str] {
        &["vertices", "triangles"]
    }

    fn attribute(&self, name: &str) -> Option<AttrValue> {
        match name {
            "vertices" => Some(points_to_attr(&self.vertices)),
            "triangles" => Some(AttrValue::UintArray {
                dims: vec![self.triangles.len(), 3],
                data: self.triangles.iter().flatten().copied().collect(),
            }),
            _ => None,
        }
    }

    fn set_attribute(&mut self, name: &str, value: AttrValue) -> Result<(), String> {
        match name {
            "vertices" => {
                self.vertices = points_from_attr(&value)?;
                Ok(())
            }
            "triangles" => {
                self.triangles = index_triples_from_attr(&value)?;
                Ok(())
            }
            _ => Err(format!("Mesh has no attribute {name:?}")),
        }
    }

    fn validate(&self) -> Result<(), String> {
        self.validate_shape()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

/// Reflectance model selector for [`Material`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReflectanceModel {
    Lambert,
    OrenNayar,
}

impl ReflectanceModel {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "lambert" => Ok(ReflectanceModel::Lambert),
            "oren_nayar" => Ok(ReflectanceModel::OrenNayar),
            other => Err(format!("unknown reflectance model {other:?}")),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ReflectanceModel::Lambert => "lambert",
            ReflectanceModel::OrenNayar => "oren_nayar",
        }
    }
}

/// Surface reflectance parameters used by the lidar intensity chain.
/// Uniform per entity.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    /// Reflectivity rho in [0, 1].
    pub reflectivity: f64,
    /// RMS slope roughness sigma, >= 0; ignored for the Lambert model.
    pub roughness: f64,
    pub model: ReflectanceModel,
}

impl Default for Material {
    fn default() -> Self {
        Material { reflectivity: 0.5, roughness: 0.0, model: ReflectanceModel::Lambert }
    }
}

impl NamedComponent for Material {
    const NAME: &'static str = "Material";
}

impl Component for Material {
    fn type_name(&self) -> &'static str {
        Self::NAME
    }

    fn attribute_names(&self) -> &'static [&'static str] {
        &["reflectivity", "roughness", "model"]
    }

    fn attribute(&self, name: &str) -> Option<AttrValue> {
        match name {
            "reflectivity" => Some(AttrValue::Float(self.reflectivity)),
            "roughness" => Some(AttrValue::Float(self.roughness)),
            "model" => Some(AttrValue::Text(self.model.as_str().to_string())),
            _ => None,
        }
    }

    fn set_attribute(&mut self, name: &str, value: AttrValue) -> Result<(), String> {
        match name {
            "reflectivity" => {
                let v = expect_float(&value)?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!("reflectivity must be in [0, 1], got {v}"));
                }
                self.reflectivity = v;
                Ok(())
            }
            "roughness" => {
                let v = expect_float(&value)?;
                if v < 0.0 {
                    return Err(format!("roughness must be >= 0, got {v}"));
                }
                self.roughness = v;
                Ok(())
            }
            "model" => {
                self.model = ReflectanceModel::parse(&expect_text(&value)?)?;
                Ok(())
            }
            _ => Err(format!("Material has no attribute {name:?}")),
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

fn points_to_attr(points: &[Point3<f64>]) -> AttrValue {
    let mut data = Vec::with_capacity(points.len() * 3);
    for p in points {
        data.extend_from_slice(&[p.x, p.y, p.z]);
    }
    AttrValue::FloatArray { dims: vec![points.len(), 3], data }
}

fn points_from_attr(value: &AttrValue) -> Result<Vec<Point3<f64>>, String> {
    match value {
        AttrValue::FloatArray { dims, data } if dims.len() == 2 && dims[1] == 3 => Ok(data
            .chunks_exact(3)
            .map(|c| Point3::new(c[0], c[1], c[2]))
            .collect()),
        other => Err(format!("expected an Nx3 float64 array, got {:?}", other.dims())),
    }
}

fn index_triples_from_attr(value: &AttrValue) -> Result<Vec<[u64; 3]>, String> {
    match value {
        AttrValue::UintArray { dims, data } if dims.len() == 2 && dims[1] == 3 => {
            Ok(data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
        }
        other => Err(format!("expected an Mx3 uint64 array, got {}", other.kind())),
    }
}

fn index_pairs_from_attr(value: &AttrValue) -> Result<Vec<[u64; 2]>, String> {
    match value {
        AttrValue::UintArray { dims, data } if dims.len() == 2 && dims[1] == 2 => {
            Ok(data.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
        }
        other => Err(format!("expected an Lx2 uint64 array, got {}", other.kind())),
    }
}

// ---------------------------------------------------------------------------
// Mesh ingestion
// ---------------------------------------------------------------------------

/// Loads an ASCII OFF or triangles-only OBJ mesh, picking the parser from
/// the file extension (content-sniffed when the extension is unknown).
pub fn load_mesh(path: &Path) -> Result<Mesh, SceneError> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
        Some(ext) if ext == "off" => parse_off(&text),
        Some(ext) if ext == "obj" => parse_obj(&text),
        _ => {
            if text.lines().find(|l| !l.trim().is_empty()) == Some("OFF") {
                parse_off(&text)
            } else {
                parse_obj(&text)
            }
        }
    }
}

/// Parses ASCII OFF (0-based indices, triangles only).
pub fn parse_off(text: &str) -> Result<Mesh, SceneError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, "OFF")) => {}
        Some((line, other)) => {
            return Err(SceneError::ParseError {
                line,
                message: format!("expected OFF header, got {other:?}"),
            })
        }
        None => return Err(SceneError::ParseError { line: 1, message: "empty file".into() }),
    }
    let (line, counts) = lines
        .next()
        .ok_or(SceneError::ParseError { line: 1, message: "missing counts line".into() })?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| SceneError::ParseError { line, message: "bad counts line".into() })?;
    if counts.len() < 2 {
        return Err(SceneError::ParseError { line, message: "bad counts line".into() });
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines
            .next()
            .ok_or(SceneError::ParseError { line, message: "missing vertex line".into() })?;
        let coords: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| SceneError::ParseError { line, message: "bad vertex line".into() })?;
        if coords.len() != 3 {
            return Err(SceneError::ParseError { line, message: "vertex needs 3 coordinates".into() });
        }
        vertices.push(Point3::new(coords[0], coords[1], coords[2]));
    }

    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = lines
            .next()
            .ok_or(SceneError::ParseError { line, message: "missing face line".into() })?;
        let fields: Vec<u64> = l
            .split_whitespace()
            .map(|t| t.parse::<u64>())
            .collect::<Result<_, _>>()
            .map_err(|_| SceneError::ParseError { line, message: "bad face line".into() })?;
        if fields.first() != Some(&3) || fields.len() != 4 {
            return Err(SceneError::NonTriangleFace { line });
        }
        let tri = [fields[1], fields[2], fields[3]];
        if tri.iter().any(|&i| i >= vertices.len() as u64) {
            return Err(SceneError::IndexOutOfRange { line });
        }
        triangles.push(tri);
    }
    Mesh::new(vertices, triangles).map_err(|e| SceneError::ParseError {
        line: 1,
        message: e.to_string(),
    })
}

/// Parses the triangles-only OBJ subset: `v` and `f` records with 1-based
/// indices; `f` tokens may carry `/vt/vn` suffixes, which are ignored.
pub fn parse_obj(text: &str) -> Result<Mesh, SceneError> {
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<(usize, [u64; 3])> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let mut tokens = l.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| SceneError::ParseError { line, message: "bad vertex".into() })?;
                if coords.len() < 3 {
                    return Err(SceneError::ParseError {
                        line,
                        message: "vertex needs 3 coordinates".into(),
                    });
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<&str> = tokens.collect();
                if idx.len() != 3 {
                    return Err(SceneError::NonTriangleFace { line });
                }
                let mut tri = [0u64; 3];
                for (k, tok) in idx.iter().enumerate() {
                    let first = tok.split('/').next().unwrap_or("");
                    let v: i64 = first.parse().map_err(|_| SceneError::ParseError {
                        line,
                        message: format!("bad face index {tok:?}"),
                    })?;
                    if v < 1 {
                        return Err(SceneError::IndexOutOfRange { line });
                    }
                    tri[k] = (v - 1) as u64;
                }
                faces.push((line, tri));
            }
            _ => {} // vn, vt, o, g, s, usemtl, ... are ignored
        }
    }
    let n = vertices.len() as u64;
    let mut triangles = Vec::with_capacity(faces.len());
    for (line, tri) in faces {
        if tri.iter().any(|&i| i >= n) {
            return Err(SceneError::IndexOutOfRange { line });
        }
        triangles.push(tri);
    }
    Mesh::new(vertices, triangles).map_err(|e| SceneError::ParseError {
        line: 1,
        message: e.to_string(),
    })
}

// ---------------------------------------------------------------------------
// Procedural geometry
// ---------------------------------------------------------------------------

/// Two triangles in the z=0 plane, centered at the origin, normals +z.
pub fn make_plane(width: f64, depth: f64) -> Result<Mesh, SceneError> {
    if !(width > 0.0 && depth > 0.0) {
        return Err(SceneError::InvalidDimension(format!(
            "plane needs positive width and depth, got {width} x {depth}"
        )));
    }
    let (hw, hd) = (width / 2.0, depth / 2.0);
    let vertices = vec![
        Point3::new(-hw, -hd, 0.0),
        Point3::new(hw, -hd, 0.0),
        Point3::new(hw, hd, 0.0),
        Point3::new(-hw, hd, 0.0),
    ];
    let triangles = vec![[0, 1, 2], [0, 2, 3]];
    Mesh::new(vertices, triangles)
}

/// Icosphere of the given radius: an icosahedron subdivided `subdivisions`
/// times, yielding `10 * 4^s + 2` vertices.
pub fn make_icosphere(radius: f64, subdivisions: u32) -> Result<Mesh, SceneError> {
    if !(radius > 0.0) {
        return Err(SceneError::InvalidDimension(format!("radius must be > 0, got {radius}")));
    }
    if subdivisions > 6 {
        return Err(SceneError::InvalidDimension(format!(
            "subdivisions must be <= 6, got {subdivisions}"
        )));
    }
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = vec![
        Vector3::new(-1.0, phi, 0.0),
        Vector3::new(1.0, phi, 0.0),
        Vector3::new(-1.0, -phi, 0.0),
        Vector3::new(1.0, -phi, 0.0),
        Vector3::new(0.0, -1.0, phi),
        Vector3::new(0.0, 1.0, phi),
        Vector3::new(0.0, -1.0, -phi),
        Vector3::new(0.0, 1.0, -phi),
        Vector3::new(phi, 0.0, -1.0),
        Vector3::new(phi, 0.0, 1.0),
        Vector3::new(-phi, 0.0, -1.0),
        Vector3::new(-phi, 0.0, 1.0),
    ]
    .into_iter()
    .map(|v| v.normalize())
    .collect();

    let mut triangles: Vec<[u64; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    use std::collections::BTreeMap;
    for _ in 0..subdivisions {
        let mut midpoints: BTreeMap<(u64, u64), u64> = BTreeMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for tri in &triangles {
            let mut mid = [0u64; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoints.entry(key).or_insert_with(|| {
                    let m = (vertices[a as usize] + vertices[b as usize]).normalize();
                    vertices.push(m);
                    (vertices.len() - 1) as u64
                });
            }
            next.push([tri[0], mid[0], mid[2]]);
            next.push([tri[1], mid[1], mid[0]]);
            next.push([tri[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        triangles = next;
    }

    let vertices = vertices
        .into_iter()
        .map(|v| Point3::from(v * radius))
        .collect();
    Mesh::new(vertices, triangles)
}

// ---------------------------------------------------------------------------
// Geometry helpers
// ---------------------------------------------------------------------------

/// Unit normal of a face under right-hand winding.
pub fn face_normal(mesh: &Mesh, face_index: usize) -> Result<Vector3<f64>, SceneError> {
    let tri = mesh.triangles.get(face_index).ok_or_else(|| {
        SceneError::InvalidDimension(format!("face index {face_index} out of range"))
    })?;
    let [a, b, c] = [
        mesh.vertices[tri[0] as usize],
        mesh.vertices[tri[1] as usize],
        mesh.vertices[tri[2] as usize],
    ];
    let n = (b - a).cross(&(c - a));
    let norm = n.norm();
    if norm == 0.0 {
        return Err(SceneError::DegenerateFace(face_index));
    }
    Ok(n / norm)
}

/// Applies a homogeneous transform to a set of points: p' = R p + t.
pub fn transform_points(t: &Matrix4<f64>, points: &[Point3<f64>]) -> Vec<Point3<f64>> {
    let r = t.fixed_view::<3, 3>(0, 0);
    let trans = Vector3::new(t[(0, 3)], t[(1, 3)], t[(2, 3)]);
    points
        .iter()
        .map(|p| Point3::from(r * p.coords + trans))
        .collect()
}

/// Homogeneous rotation about the z axis.
pub fn rotation_z(angle: f64) -> Matrix4<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), angle).to_homogeneous()
}

// ---------------------------------------------------------------------------
// Processor
// ---------------------------------------------------------------------------

/// Spins entities around their local z axis, driven by the world clock:
/// `world = Rz(angular_velocity * currentTime) * local`.
pub struct RotateFrame {
    angular_velocity: f64,
    target: Option<String>,
}

impl RotateFrame {
    pub fn new(angular_velocity: f64, target: Option<String>) -> Self {
        RotateFrame { angular_velocity, target }
    }
}

impl Processor for RotateFrame {
    fn name(&self) -> &str {
        "RotateFrame"
    }

    fn reads(&self) -> &'static [&'static str] {
        &["Time", "Transform"]
    }

    fn writes(&self) -> &'static [&'static str] {
        &["Transform"]
    }

    fn step(&mut self, world: &World) -> Result<(), EcsError> {
        let clock = time_entity(world)?;
        let t = world.component_ref::<crate::components::Time>(clock)?.current_time;
        let rot = rotation_z(self.angular_velocity * t);
        for entity in world.query(&["Transform"]) {
            if let Some(name) = &self.target {
                if world.entity_name(entity) != Some(name.as_str()) {
                    continue;
                }
            }
            let mut tr = world.component_mut::<Transform>(entity)?;
            tr.world = rot * tr.local;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Point-cloud export
// ---------------------------------------------------------------------------

/// Writes an ASCII PLY with `x y z intensity` properties. Points without
/// recorded intensity get 0.
pub fn write_point_cloud_ply<W: Write>(cloud: &PointCloud, sink: &mut W) -> std::io::Result<()> {
    writeln!(sink, "ply")?;
    writeln!(sink, "format ascii 1.0")?;
    writeln!(sink, "element vertex {}", cloud.points.len())?;
    writeln!(sink, "property double x")?;
    writeln!(sink, "property double y")?;
    writeln!(sink, "property double z")?;
    writeln!(sink, "property double intensity")?;
    writeln!(sink, "end_header")?;
    for (i, p) in cloud.points.iter().enumerate() {
        let intensity = cloud.intensity.get(i).copied().unwrap_or(0.0);
        writeln!(sink, "{} {} {} {}", p.x, p.y, p.z, intensity)?;
    }
    Ok(())
}
