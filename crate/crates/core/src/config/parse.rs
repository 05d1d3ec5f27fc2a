//! YAML front end for configuration documents.
//!
//! The accepted grammar is a YAML subset: mappings, sequences and scalars,
//! no anchors and no tags. Exactly three top-level keys are understood:
//! `commands`, `configurations` and `description`.

use serde_yaml::{Mapping, Value};

use super::{
    CommandBinding, CommandInvocation, CommandKind, ConfigDocument, ConfigError, ConfigValue,
    ImportRef,
};

pub fn parse_config(text: &str) -> Result<ConfigDocument, ConfigError> {
    let value: Value = serde_yaml::from_str(text).map_err(|e| {
        let loc = e.location();
        ConfigError::SyntaxError {
            line: loc.as_ref().map(|l| l.line()).unwrap_or(0),
            column: loc.as_ref().map(|l| l.column()).unwrap_or(0),
            message: e.to_string(),
        }
    })?;

    let mut doc = ConfigDocument::default();
    let root = match value {
        Value::Null => return Ok(doc),
        Value::Mapping(m) => m,
        other => {
            return Err(ConfigError::Structure(format!(
                "top level must be a mapping, got {}",
                type_name(&other)
            )))
        }
    };

    for (key, section) in root {
        let key = as_str(&key)
            .ok_or_else(|| ConfigError::Structure("top-level keys must be strings".into()))?;
        match key {
            "commands" => parse_commands(&section, &mut doc)?,
            "configurations" => parse_configurations(&section, &mut doc)?,
            "description" => parse_description(&section, &mut doc)?,
            other => return Err(ConfigError::UnknownSection(other.to_string())),
        }
    }
    Ok(doc)
}

fn parse_commands(section: &Value, doc: &mut ConfigDocument) -> Result<(), ConfigError> {
    let map = match section {
        Value::Null => return Ok(()),
        Value::Mapping(m) => m,
        other => {
            return Err(ConfigError::Structure(format!(
                "commands must be a mapping, got {}",
                type_name(other)
            )))
        }
    };
    for (name, body) in map {
        let name = as_str(name)
            .ok_or_else(|| ConfigError::Structure("command names must be strings".into()))?
            .to_string();
        let body = expect_mapping(body, "command binding")?;
        let mut kind: Option<String> = None;
        let mut module = String::new();
        for (k, v) in body {
            match as_str(k) {
                Some("kind") => {
                    kind = Some(
                        as_str(v)
                            .ok_or_else(|| {
                                ConfigError::Structure(format!("kind of {name} must be a string"))
                            })?
                            .to_string(),
                    )
                }
                Some("module") => {
                    module = as_str(v)
                        .ok_or_else(|| {
                            ConfigError::Structure(format!("module of {name} must be a string"))
                        })?
                        .to_string()
                }
                _ => {
                    return Err(ConfigError::Structure(format!(
                        "command {name} has an unexpected key"
                    )))
                }
            }
        }
        let kind_str =
            kind.ok_or_else(|| ConfigError::Structure(format!("command {name} needs a kind")))?;
        let kind = CommandKind::parse(&kind_str).ok_or(ConfigError::UnknownCommandKind {
            command: name.clone(),
            kind: kind_str,
        })?;
        if doc.commands.insert(name.clone(), CommandBinding { kind, module_path: module }).is_some()
        {
            return Err(ConfigError::NameCollision(format!("command {name}")));
        }
    }
    Ok(())
}

fn parse_configurations(section: &Value, doc: &mut ConfigDocument) -> Result<(), ConfigError> {
    let list = match section {
        Value::Null => return Ok(()),
        Value::Sequence(s) => s,
        other => {
            return Err(ConfigError::Structure(format!(
                "configurations must be a sequence, got {}",
                type_name(other)
            )))
        }
    };
    for item in list {
        match item {
            Value::String(path) => {
                doc.configurations.push(ImportRef { path: path.clone(), prefix: None })
            }
            Value::Mapping(m) => {
                let mut path = None;
                let mut prefix = None;
                for (k, v) in m {
                    match as_str(k) {
                        Some("path") => path = as_str(v).map(String::from),
                        Some("prefix") => prefix = as_str(v).map(String::from),
                        _ => {
                            return Err(ConfigError::Structure(
                                "imports accept only path and prefix keys".into(),
                            ))
                        }
                    }
                }
                let path = path
                    .ok_or_else(|| ConfigError::Structure("import needs a path".into()))?;
                doc.configurations.push(ImportRef { path, prefix });
            }
            other => {
                return Err(ConfigError::Structure(format!(
                    "import entries must be strings or mappings, got {}",
                    type_name(other)
                )))
            }
        }
    }
    Ok(())
}

fn parse_description(section: &Value, doc: &mut ConfigDocument) -> Result<(), ConfigError> {
    let list = match section {
        Value::Null => return Ok(()),
        Value::Sequence(s) => s,
        other => {
            return Err(ConfigError::Structure(format!(
                "description must be a sequence, got {}",
                type_name(other)
            )))
        }
    };
    for item in list {
        let map = expect_mapping(item, "description entry")?;
        if map.len() != 1 {
            return Err(ConfigError::Structure(
                "each description entry must be a single-key map naming one command".into(),
            ));
        }
        let (command, body) = map.iter().next().unwrap();
        let command = as_str(command)
            .ok_or_else(|| ConfigError::Structure("command names must be strings".into()))?
            .to_string();
        let mut target = None;
        let mut attributes = Vec::new();
        match body {
            Value::Null => {}
            Value::Mapping(m) => {
                for (k, v) in m {
                    let k = as_str(k).ok_or_else(|| {
                        ConfigError::Structure(format!("attribute names of {command} must be strings"))
                    })?;
                    if k == "entity" {
                        target = Some(
                            as_str(v)
                                .ok_or_else(|| {
                                    ConfigError::Structure(format!(
                                        "entity of {command} must be a string"
                                    ))
                                })?
                                .to_string(),
                        );
                    } else {
                        attributes.push((k.to_string(), to_config_value(v)?));
                    }
                }
            }
            other => {
                return Err(ConfigError::Structure(format!(
                    "body of {command} must be a mapping, got {}",
                    type_name(other)
                )))
            }
        }
        doc.description.push(CommandInvocation { command, target, attributes });
    }
    Ok(())
}

fn to_config_value(value: &Value) -> Result<ConfigValue, ConfigError> {
    match value {
        Value::Bool(b) => Ok(ConfigValue::Bool(*b)),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(ConfigValue::Int(i))
            } else if let Some(f) = n.as_f64() {
                Ok(ConfigValue::Float(f))
            } else {
                Err(ConfigError::Structure(format!("unrepresentable number {n}")))
            }
        }
        Value::String(s) => Ok(ConfigValue::Text(s.clone())),
        Value::Sequence(items) => Ok(ConfigValue::List(
            items.iter().map(to_config_value).collect::<Result<_, _>>()?,
        )),
        Value::Mapping(m) => {
            if m.contains_key(&Value::String("function".into())) {
                let mut function = None;
                let mut args = Vec::new();
                for (k, v) in m {
                    match as_str(k) {
                        Some("function") => {
                            function = Some(
                                as_str(v)
                                    .ok_or_else(|| {
                                        ConfigError::Structure(
                                            "function name must be a string".into(),
                                        )
                                    })?
                                    .to_string(),
                            )
                        }
                        Some("args") => match v {
                            Value::Null => {}
                            Value::Mapping(argmap) => {
                                for (ak, av) in argmap {
                                    let ak = as_str(ak).ok_or_else(|| {
                                        ConfigError::Structure(
                                            "argument names must be strings".into(),
                                        )
                                    })?;
                                    args.push((ak.to_string(), to_config_value(av)?));
                                }
                            }
                            other => {
                                return Err(ConfigError::Structure(format!(
                                    "args must be a mapping, got {}",
                                    type_name(other)
                                )))
                            }
                        },
                        _ => {
                            return Err(ConfigError::Structure(
                                "initializer calls accept only function and args keys".into(),
                            ))
                        }
                    }
                }
                Ok(ConfigValue::Call { function: function.unwrap(), args })
            } else {
                let mut entries = Vec::new();
                for (k, v) in m {
                    let k = as_str(k).ok_or_else(|| {
                        ConfigError::Structure("mapping keys must be strings".into())
                    })?;
                    entries.push((k.to_string(), to_config_value(v)?));
                }
                Ok(ConfigValue::Map(entries))
            }
        }
        Value::Null => Err(ConfigError::Structure("null values are not allowed".into())),
        Value::Tagged(_) => Err(ConfigError::Structure("YAML tags are not supported".into())),
    }
}

fn expect_mapping<'a>(value: &'a Value, what: &str) -> Result<&'a Mapping, ConfigError> {
    match value {
        Value::Mapping(m) => Ok(m),
        other => Err(ConfigError::Structure(format!(
            "{what} must be a mapping, got {}",
            type_name(other)
        ))),
    }
}

fn as_str(value: &Value) -> Option<&str> {
    value.as_str()
}

fn type_name(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "bool",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Sequence(_) => "sequence",
        Value::Mapping(_) => "mapping",
        Value::Tagged(_) => "tagged value",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_with_one_binding() {
        let doc = parse_config("commands:\n  Entity: {kind: entity}\ndescription: []\n").unwrap();
        assert_eq!(doc.commands.len(), 1);
        assert_eq!(doc.commands["Entity"].kind, CommandKind::Entity);
        assert!(doc.description.is_empty());
        assert!(doc.is_flattened());
    }

    #[test]
    fn unknown_top_level_section_is_rejected() {
        assert!(matches!(
            parse_config("commands: {}\nextras: {}\n"),
            Err(ConfigError::UnknownSection(s)) if s == "extras"
        ));
    }

    #[test]
    fn unknown_command_kind_is_rejected() {
        assert!(matches!(
            parse_config("commands:\n  Widget: {kind: gizmo, module: x}\n"),
            Err(ConfigError::UnknownCommandKind { command, kind })
                if command == "Widget" && kind == "gizmo"
        ));
    }

    #[test]
    fn bad_yaml_reports_position() {
        let err = parse_config("commands:\n  - ]oops\n").unwrap_err();
        match err {
            ConfigError::SyntaxError { line, .. } => assert!(line >= 1),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn description_entries_carry_targets_and_attributes() {
        let text = "commands:\n  Time: {kind: component, module: gemini.components.time}\ndescription:\n  - Time: {entity: clock, currentTime: 0.0, increment_step: 0.1}\n";
        let doc = parse_config(text).unwrap();
        let inv = &doc.description[0];
        assert_eq!(inv.command, "Time");
        assert_eq!(inv.target.as_deref(), Some("clock"));
        assert_eq!(inv.attributes.len(), 2);
        assert_eq!(inv.attributes[0], ("currentTime".into(), ConfigValue::Float(0.0)));
        assert_eq!(inv.attributes[1], ("increment_step".into(), ConfigValue::Float(0.1)));
    }

    #[test]
    fn initializer_calls_parse_into_call_values() {
        let text = "commands:\n  Mesh: {kind: component, module: gemini.components.mesh}\n  Ico: {kind: function, module: gemini.init.make_icosphere}\ndescription:\n  - Mesh:\n      entity: ball\n      vertices: {function: Ico, args: {radius: 1.0, subdivisions: 2}}\n";
        let doc = parse_config(text).unwrap();
        match &doc.description[0].attributes[0].1 {
            ConfigValue::Call { function, args } => {
                assert_eq!(function, "Ico");
                assert_eq!(args.len(), 2);
            }
            other => panic!("expected a call, got {other:?}"),
        }
    }

    #[test]
    fn multi_key_description_entry_is_rejected() {
        let text = "description:\n  - Alpha: {}\n    Beta: {}\n";
        assert!(matches!(parse_config(text), Err(ConfigError::Structure(_))));
    }

    #[test]
    fn commented_out_lines_simply_vanish() {
        let text = "commands:\n  Entity: {kind: entity}\ndescription:\n  - Entity: {entity: a}\n#  - Entity: {entity: b}\n";
        let doc = parse_config(text).unwrap();
        assert_eq!(doc.description.len(), 1);
    }

    #[test]
    fn empty_text_is_an_empty_document() {
        let doc = parse_config("").unwrap();
        assert!(doc.commands.is_empty() && doc.description.is_empty());
    }
}
