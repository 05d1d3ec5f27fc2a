//! Core built-in components: the simulation clock and rigid transforms.

use std::any::Any;

use nalgebra::Matrix4;

use crate::attr::AttrValue;
use crate::ecs::{Component, NamedComponent};

/// Simulation clock, held by exactly one entity per world.
#[derive(Debug, Clone, PartialEq)]
pub struct Time {
    pub current_time: f64,
    pub increment_step: f64,
}

impl Default for Time {
    fn default() -> Self {
        Time { current_time: 0.0, increment_step: 0.1 }
    }
}

impl NamedComponent for Time {
    const NAME: &'static str = "Time";
}

impl Component for Time {
    fn type_name(&self) -> &'static str {
        Self::NAME
    }

    fn attribute_names(&self) -> &'static [&'static str] {
        &["currentTime", "increment_step"]
    }

    fn attribute(&self, name: &str) -> Option<AttrValue> {
        match name {
            "currentTime" => Some(AttrValue::Float(self.current_time)),
            "increment_step" => Some(AttrValue::Float(self.increment_step)),
            _ => None,
        }
    }

    fn set_attribute(&mut self, name: &str, value: AttrValue) -> Result<(), String> {
        match name {
            "currentTime" => {
                self.current_time = expect_float(&value)?;
                Ok(())
            }
            "increment_step" => {
                let v = expect_float(&value)?;
                if !(v > 0.0) {
                    return Err(format!("increment_step must be > 0, got {v}"));
                }
                self.increment_step = v;
                Ok(())
            }
            _ => Err(format!("Time has no attribute {name:?}")),
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

/// World and local placement as 4x4 homogeneous matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Transform {
    pub world: Matrix4<f64>,
    pub local: Matrix4<f64>,
}

impl Default for Transform {
    fn default() -> Self {
        Transform { world: Matrix4::identity(), local: Matrix4::identity() }
    }
}

impl Transform {
    /// Row-major flattening of a matrix for logging and configs.
    pub fn matrix_to_attr(m: &Matrix4<f64>) -> AttrValue {
        let mut data = Vec::with_capacity(16);
        for r in 0..4 {
            for c in 0..4 {
                data.push(m[(r, c)]);
            }
        }
        AttrValue::FloatArray { dims: vec![4, 4], data }
    }

    pub fn matrix_from_attr(value: &AttrValue) -> Result<Matrix4<f64>, String> {
        match value {
            AttrValue::FloatArray { dims, data } if dims == &[4, 4] && data.len() == 16 => {
                let mut m = Matrix4::zeros();
                for r in 0..4 {
                    for c in 0..4 {
                        m[(r, c)] = data[r * 4 + c];
                    }
                }
                Ok(m)
            }
            other => Err(format!("expected a 4x4 float64 array, got {}", other.kind())),
        }
    }

    /// Homogeneous-matrix sanity: bottom row (0,0,0,1) and an orthonormal
    /// rotation block, both within 1e-9.
    pub fn check_homogeneous(m: &Matrix4<f64>) -> Result<(), String> {
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        let expected = [0.0, 0.0, 0.0, 1.0];
        for (got, want) in bottom.iter().zip(expected.iter()) {
            if (got - want).abs() > 1e-9 {
                return Err(format!("bottom row must be (0,0,0,1), got {bottom:?}"));
            }
        }
        let r = m.fixed_view::<3, 3>(0, 0);
        let rtr = r.transpose() * r;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                if (rtr[(i, j)] - want).abs() > 1e-9 {
                    return Err("rotation block is not orthonormal within 1e-9".to_string());
                }
            }
        }
        Ok(())
    }
}

impl NamedComponent for Transform {
    const NAME: &'static str = "Transform";
}

impl Component for Transform {
    fn type_name(&self) -> &'static str {
        Self::NAME
    }

    fn attribute_names(&self) -> &'static [&'static str] {
        &["world", "local"]
    }

    fn attribute(&self, name: &str) -> Option<AttrValue> {
        match name {
            "world" => Some(Self::matrix_to_attr(&self.world)),
            "local" => Some(Self::matrix_to_attr(&self.local)),
            _ => None,
        }
    }

    fn set_attribute(&mut self, name: &str, value: AttrValue) -> Result<(), String> {
        let m = Self::matrix_from_attr(&value)?;
        Self::check_homogeneous(&m)?;
        match name {
            "world" => {
                self.world = m;
                Ok(())
            }
            "local" => {
                self.local = m;
                Ok(())
            }
            _ => Err(format!("Transform has no attribute {name:?}")),
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

pub(crate) fn expect_float(value: &AttrValue) -> Result<f64, String> {
    match value {
        AttrValue::Float(v) => Ok(*v),
        AttrValue::Int(v) => Ok(*v as f64),
        other => Err(format!("expected float64, got {}", other.kind())),
    }
}

pub(crate) fn expect_int(value: &AttrValue) -> Result<i64, String> {
    match value {
        AttrValue::Int(v) => Ok(*v),
        other => Err(format!("expected int64, got {}", other.kind())),
    }
}

pub(crate) fn expect_text(value: &AttrValue) -> Result<String, String> {
    match value {
        AttrValue::Text(v) => Ok(v.clone()),
        other => Err(format!("expected text, got {}", other.kind())),
    }
}

/// Expects a rank-1 float array of exactly `len` elements.
pub(crate) fn expect_float_vector(value: &AttrValue, len: usize) -> Result<Vec<f64>, String> {
    match value {
        AttrValue::FloatArray { dims, data } if dims.len() == 1 && dims[0] == len => {
            Ok(data.clone())
        }
        AttrValue::FloatArray { dims, .. } => {
            Err(format!("expected a length-{len} vector, got dims {dims:?}"))
        }
        other => Err(format!("expected float64 array, got {}", other.kind())),
    }
}
