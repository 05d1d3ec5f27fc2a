//! Semantic attribute values.
//!
//! Every component attribute is one of a small set of semantic types: a
//! float64/int64 scalar, a boolean, UTF-8 text, or an N-dimensional
//! float64/int64/uint64 array with explicit dims. This is the complete set
//! of shapes the state log knows how to encode, and the currency the
//! configuration layer uses to populate components.

use std::fmt;

/// A single attribute value in one of the supported semantic types.
#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    /// Row-major float64 array. `data.len()` must equal the product of `dims`.
    FloatArray { dims: Vec<usize>, data: Vec<f64> },
    /// Row-major int64 array.
    IntArray { dims: Vec<usize>, data: Vec<i64> },
    /// Row-major uint64 array.
    UintArray { dims: Vec<usize>, data: Vec<u64> },
}

/// The type of an [`AttrValue`] without its payload. Used by the config
/// layer to coerce literals against a component's declared attribute types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrKind {
    Float,
    Int,
    Bool,
    Text,
    FloatArray,
    IntArray,
    UintArray,
}

impl fmt::Display for AttrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AttrKind::Float => "float64",
            AttrKind::Int => "int64",
            AttrKind::Bool => "bool",
            AttrKind::Text => "text",
            AttrKind::FloatArray => "float64 array",
            AttrKind::IntArray => "int64 array",
            AttrKind::UintArray => "uint64 array",
        };
        f.write_str(s)
    }
}

impl AttrValue {
    pub fn kind(&self) -> AttrKind {
        match self {
            AttrValue::Float(_) => AttrKind::Float,
            AttrValue::Int(_) => AttrKind::Int,
            AttrValue::Bool(_) => AttrKind::Bool,
            AttrValue::Text(_) => AttrKind::Text,
            AttrValue::FloatArray { .. } => AttrKind::FloatArray,
            AttrValue::IntArray { .. } => AttrKind::IntArray,
            AttrValue::UintArray { .. } => AttrKind::UintArray,
        }
    }

    /// Array rank; scalars are rank 0.
    pub fn rank(&self) -> usize {
        self.dims().len()
    }

    pub fn dims(&self) -> &[usize] {
        match self {
            AttrValue::FloatArray { dims, .. }
            | AttrValue::IntArray { dims, .. }
            | AttrValue::UintArray { dims, .. } => dims,
            _ => &[],
        }
    }

    /// Checks that array payload lengths match the product of their dims.
    pub fn shape_is_consistent(&self) -> bool {
        fn prod(dims: &[usize]) -> usize {
            dims.iter().product()
        }
        match self {
            AttrValue::FloatArray { dims, data } => data.len() == prod(dims),
            AttrValue::IntArray { dims, data } => data.len() == prod(dims),
            AttrValue::UintArray { dims, data } => data.len() == prod(dims),
            _ => true,
        }
    }

    pub fn as_float(&self) -> Option<f64> {
        match self {
            AttrValue::Float(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            AttrValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            AttrValue::Bool(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            AttrValue::Text(v) => Some(v),
            _ => None,
        }
    }

    /// Convenience constructor for a rank-1 float array.
    pub fn float_vector(data: Vec<f64>) -> Self {
        AttrValue::FloatArray { dims: vec![data.len()], data }
    }

    /// Convenience constructor for a rank-2 float array.
    pub fn float_matrix(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        AttrValue::FloatArray { dims: vec![rows, cols], data }
    }
}

/// Wraps an angle to the half-open interval `(-pi, pi]`.
///
/// `-pi` maps to `+pi`, which makes the exact-pi tie-break deterministic
/// (counter-clockwise) everywhere headings are interpolated.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    if w <= -std::f64::consts::PI {
        w += two_pi;
    }
    w
}
