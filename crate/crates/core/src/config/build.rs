//! Turns a flattened configuration document into a runnable world.
//!
//! Entities are created in description order; components are instantiated
//! from registry factories and populated attribute by attribute (literals
//! coerced against the component's declared types, initializer calls
//! evaluated through the registry); processors are registered in
//! description order.

use crate::attr::{AttrKind, AttrValue};
use crate::ecs::{Component, EcsError, World};
use crate::registry::{FnArgs, InitValue, Registry};

use super::{CommandKind, ConfigDocument, ConfigError, ConfigValue};

pub fn build_world(doc: &ConfigDocument, registry: &Registry) -> Result<World, ConfigError> {
    if !doc.is_flattened() {
        return Err(ConfigError::Structure(
            "document still contains imports; resolve them before building".into(),
        ));
    }
    doc.validate_references()?;

    let mut world = World::new();
    for inv in &doc.description {
        let binding = doc
            .commands
            .get(&inv.command)
            .ok_or_else(|| ConfigError::UnknownCommand(inv.command.clone()))?;
        match binding.kind {
            CommandKind::Entity => {
                let name = inv.target.as_deref().ok_or_else(|| {
                    ConfigError::Structure(format!(
                        "entity command {} needs an entity name",
                        inv.command
                    ))
                })?;
                if !inv.attributes.is_empty() {
                    return Err(ConfigError::Structure(format!(
                        "entity command {} takes no attributes",
                        inv.command
                    )));
                }
                world.create_entity(Some(name)).map_err(|e| match e {
                    EcsError::DuplicateName(n) => ConfigError::NameCollision(n),
                    other => ConfigError::Ecs(other),
                })?;
            }
            CommandKind::Component => {
                let target = inv.target.as_deref().ok_or_else(|| {
                    ConfigError::Structure(format!(
                        "component command {} needs a target entity",
                        inv.command
                    ))
                })?;
                let entity = world
                    .entity_by_name(target)
                    .ok_or_else(|| ConfigError::UnknownTarget(target.to_string()))?;
                let factory = registry.component(&binding.module_path).ok_or(
                    ConfigError::UnknownModulePath {
                        path: binding.module_path.clone(),
                        kind: "component",
                    },
                )?;
                let mut component = factory();
                for (attr_name, value) in &inv.attributes {
                    apply_attribute(
                        doc,
                        registry,
                        component.as_mut(),
                        &inv.command,
                        attr_name,
                        value,
                    )?;
                }
                component.validate().map_err(|message| {
                    ConfigError::AttributeTypeMismatch {
                        command: inv.command.clone(),
                        attribute: "*".into(),
                        message,
                    }
                })?;
                world.attach_component(entity, component)?;
            }
            CommandKind::Processor => {
                let factory = registry.processor(&binding.module_path).ok_or(
                    ConfigError::UnknownModulePath {
                        path: binding.module_path.clone(),
                        kind: "processor",
                    },
                )?;
                let mut args = FnArgs::from_pairs(&inv.attributes).map_err(|cause| {
                    ConfigError::InitializerFailure { function: inv.command.clone(), cause }
                })?;
                if let Some(target) = &inv.target {
                    args.insert("entity", ConfigValue::Text(target.clone()));
                }
                let processor = factory(&args).map_err(|cause| {
                    ConfigError::InitializerFailure { function: inv.command.clone(), cause }
                })?;
                world.register_processor(processor);
            }
            CommandKind::Function => {
                return Err(ConfigError::Structure(format!(
                    "function command {} can only appear as an attribute value",
                    inv.command
                )));
            }
        }
    }
    Ok(world)
}

fn apply_attribute(
    doc: &ConfigDocument,
    registry: &Registry,
    component: &mut dyn Component,
    command: &str,
    attr_name: &str,
    value: &ConfigValue,
) -> Result<(), ConfigError> {
    let mismatch = |attribute: &str, message: String| ConfigError::AttributeTypeMismatch {
        command: command.to_string(),
        attribute: attribute.to_string(),
        message,
    };

    match value {
        ConfigValue::Call { function, args } => {
            let binding = doc
                .commands
                .get(function)
                .ok_or_else(|| ConfigError::UnknownCommand(function.clone()))?;
            if binding.kind != CommandKind::Function {
                return Err(ConfigError::Structure(format!(
                    "command {function} is a {}, not a function",
                    binding.kind.as_str()
                )));
            }
            let factory = registry.function(&binding.module_path).ok_or(
                ConfigError::UnknownModulePath {
                    path: binding.module_path.clone(),
                    kind: "function",
                },
            )?;
            let fn_args = FnArgs::from_pairs(args).map_err(|cause| {
                ConfigError::InitializerFailure { function: function.clone(), cause }
            })?;
            let produced = factory(&fn_args).map_err(|cause| ConfigError::InitializerFailure {
                function: function.clone(),
                cause,
            })?;
            match produced {
                InitValue::Value(v) => component
                    .set_attribute(attr_name, v)
                    .map_err(|m| mismatch(attr_name, m)),
                InitValue::Bundle(map) => {
                    if !map.contains_key(attr_name) {
                        return Err(ConfigError::InitializerFailure {
                            function: function.clone(),
                            cause: format!(
                                "initializer produced {:?} but was assigned to {attr_name:?}",
                                map.keys().collect::<Vec<_>>()
                            ),
                        });
                    }
                    for (name, v) in map {
                        component
                            .set_attribute(&name, v)
                            .map_err(|m| mismatch(&name, m))?;
                    }
                    Ok(())
                }
            }
        }
        literal => {
            let current = component
                .attribute(attr_name)
                .ok_or_else(|| mismatch(attr_name, "no such attribute".into()))?;
            let coerced =
                coerce(literal, current.kind()).map_err(|m| mismatch(attr_name, m))?;
            component
                .set_attribute(attr_name, coerced)
                .map_err(|m| mismatch(attr_name, m))
        }
    }
}

/// Coerces a literal config value into the target attribute kind.
fn coerce(value: &ConfigValue, target: AttrKind) -> Result<AttrValue, String> {
    match (value, target) {
        (ConfigValue::Float(f), AttrKind::Float) => Ok(AttrValue::Float(*f)),
        (ConfigValue::Int(i), AttrKind::Float) => Ok(AttrValue::Float(*i as f64)),
        (ConfigValue::Int(i), AttrKind::Int) => Ok(AttrValue::Int(*i)),
        (ConfigValue::Bool(b), AttrKind::Bool) => Ok(AttrValue::Bool(*b)),
        (ConfigValue::Text(s), AttrKind::Text) => Ok(AttrValue::Text(s.clone())),
        (ConfigValue::List(_), AttrKind::FloatArray) => {
            let (dims, data) = flatten_numeric(value)?;
            Ok(AttrValue::FloatArray { dims, data })
        }
        (ConfigValue::List(_), AttrKind::IntArray) => {
            let (dims, data) = flatten_integer(value)?;
            Ok(AttrValue::IntArray { dims, data })
        }
        (ConfigValue::List(_), AttrKind::UintArray) => {
            let (dims, data) = flatten_integer(value)?;
            let udata = data
                .into_iter()
                .map(|i| u64::try_from(i).map_err(|_| format!("negative index {i}")))
                .collect::<Result<_, _>>()?;
            Ok(AttrValue::UintArray { dims, data: udata })
        }
        (other, target) => Err(format!("cannot use {other:?} for a {target} attribute")),
    }
}

/// Flattens nested lists of numbers into (dims, row-major data), checking
/// rectangularity.
fn flatten_numeric(value: &ConfigValue) -> Result<(Vec<usize>, Vec<f64>), String> {
    fn walk(
        value: &ConfigValue,
        depth: usize,
        dims: &mut Vec<usize>,
        data: &mut Vec<f64>,
    ) -> Result<(), String> {
        match value {
            ConfigValue::List(items) => {
                if dims.len() == depth {
                    dims.push(items.len());
                } else if dims[depth] != items.len() {
                    return Err("ragged nested list".into());
                }
                for item in items {
                    walk(item, depth + 1, dims, data)?;
                }
                Ok(())
            }
            ConfigValue::Float(f) => {
                if dims.len() != depth {
                    return Err("mixed scalars and lists at one nesting level".into());
                }
                data.push(*f);
                Ok(())
            }
            ConfigValue::Int(i) => {
                if dims.len() != depth {
                    return Err("mixed scalars and lists at one nesting level".into());
                }
                data.push(*i as f64);
                Ok(())
            }
            other => Err(format!("expected numbers, got {other:?}")),
        }
    }
    let mut dims = Vec::new();
    let mut data = Vec::new();
    walk(value, 0, &mut dims, &mut data)?;
    Ok((dims, data))
}

fn flatten_integer(value: &ConfigValue) -> Result<(Vec<usize>, Vec<i64>), String> {
    fn walk(
        value: &ConfigValue,
        depth: usize,
        dims: &mut Vec<usize>,
        data: &mut Vec<i64>,
    ) -> Result<(), String> {
        match value {
            ConfigValue::List(items) => {
                if dims.len() == depth {
                    dims.push(items.len());
                } else if dims[depth] != items.len() {
                    return Err("ragged nested list".into());
                }
                for item in items {
                    walk(item, depth + 1, dims, data)?;
                }
                Ok(())
            }
            ConfigValue::Int(i) => {
                if dims.len() != depth {
                    return Err("mixed scalars and lists at one nesting level".into());
                }
                data.push(*i);
                Ok(())
            }
            other => Err(format!("expected integers, got {other:?}")),
        }
    }
    let mut dims = Vec::new();
    let mut data = Vec::new();
    walk(value, 0, &mut dims, &mut data)?;
    Ok((dims, data))
}
