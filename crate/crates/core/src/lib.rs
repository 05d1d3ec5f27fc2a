//! Configuration-driven entity-component-system simulation framework.
//!
//! Applications are declared in YAML configuration files that bind
//! command names to back-end factories and describe every entity,
//! component and processor. Running a world produces a deterministic
//! SHA-256 state log whose committed form doubles as an acceptance test.
//! Built-in payloads cover trajectory playback, sea-state disturbances
//! and a physically based lidar intensity model.

pub use nalgebra;

pub mod attr;
pub mod components;
pub mod config;
pub mod ecs;
pub mod lidar;
pub mod motion;
pub mod registry;
pub mod scene;
pub mod statelog;

pub use attr::{AttrKind, AttrValue};
pub use ecs::{Component, EcsError, EntityId, NamedComponent, Processor, StepObserver, World};
pub use registry::{FnArgs, InitValue, Registry};
