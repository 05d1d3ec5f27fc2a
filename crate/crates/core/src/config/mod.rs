//! Configuration documents: parsing, import resolution, world building
//! and pipeline-graph export.
//!
//! A document has three sections. `commands` binds names to back-end
//! factories (entities, components, processors, initializer functions),
//! `configurations` imports other documents, and `description` invokes
//! commands to declare every entity, component and processor of an
//! application. Building the document yields a ready-to-run [`World`].

mod build;
mod graph;
mod parse;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::ecs::EcsError;

pub use crate::registry::{FnArgs, InitValue, Registry};
pub use build::build_world;
pub use graph::{NodeKind, PipelineGraph};
pub use parse::parse_config;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    SyntaxError { line: usize, column: usize, message: String },
    #[error("unknown top-level section {0:?}")]
    UnknownSection(String),
    #[error("command {command:?} has unknown kind {kind:?}")]
    UnknownCommandKind { command: String, kind: String },
    #[error("invocation references undeclared command {0:?}")]
    UnknownCommand(String),
    #[error("import cycle through {0:?}")]
    ImportCycle(String),
    #[error("cannot import {path:?}: {cause}")]
    MissingImport { path: String, cause: String },
    #[error("name collision on {0:?}")]
    NameCollision(String),
    #[error("module path {path:?} is not registered as a {kind}")]
    UnknownModulePath { path: String, kind: &'static str },
    #[error("{command}.{attribute}: {message}")]
    AttributeTypeMismatch { command: String, attribute: String, message: String },
    #[error("initializer {function:?} failed: {cause}")]
    InitializerFailure { function: String, cause: String },
    #[error("invocation targets unknown entity {0:?}")]
    UnknownTarget(String),
    #[error("malformed document: {0}")]
    Structure(String),
    #[error(transparent)]
    Ecs(#[from] EcsError),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// The four command kinds of the configuration language.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Entity,
    Component,
    Processor,
    Function,
}

impl CommandKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "entity" => Some(CommandKind::Entity),
            "component" => Some(CommandKind::Component),
            "processor" => Some(CommandKind::Processor),
            "function" => Some(CommandKind::Function),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CommandKind::Entity => "entity",
            CommandKind::Component => "component",
            CommandKind::Processor => "processor",
            CommandKind::Function => "function",
        }
    }
}

/// Binds a command name to a back-end factory. `module_path` is empty for
/// the entity kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandBinding {
    pub kind: CommandKind,
    pub module_path: String,
}

/// One entry of the `configurations` section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportRef {
    pub path: String,
    /// Entity names from the import are prefixed with `<prefix>/`.
    pub prefix: Option<String>,
}

/// A literal or structured value appearing in a description body.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    List(Vec<ConfigValue>),
    /// An initializer-function invocation: `{function: Name, args: {...}}`.
    Call { function: String, args: Vec<(String, ConfigValue)> },
    /// A plain mapping (used e.g. for range specs in function args).
    Map(Vec<(String, ConfigValue)>),
}

/// One command invocation from the description section.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandInvocation {
    pub command: String,
    /// Entity name: the created entity for entity commands, the
    /// attachment target for components, an optional scope for processors.
    pub target: Option<String>,
    /// Attribute assignments in document order.
    pub attributes: Vec<(String, ConfigValue)>,
}

/// A parsed configuration document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigDocument {
    pub commands: BTreeMap<String, CommandBinding>,
    pub configurations: Vec<ImportRef>,
    pub description: Vec<CommandInvocation>,
}

impl ConfigDocument {
    /// True once every import has been folded in.
    pub fn is_flattened(&self) -> bool {
        self.configurations.is_empty()
    }

    /// Checks that every invocation (and every initializer call in its
    /// attributes) references a declared command.
    pub fn validate_references(&self) -> Result<(), ConfigError> {
        fn walk_value(doc: &ConfigDocument, value: &ConfigValue) -> Result<(), ConfigError> {
            match value {
                ConfigValue::Call { function, args } => {
                    if !doc.commands.contains_key(function) {
                        return Err(ConfigError::UnknownCommand(function.clone()));
                    }
                    for (_, v) in args {
                        walk_value(doc, v)?;
                    }
                    Ok(())
                }
                ConfigValue::List(items) => {
                    items.iter().try_for_each(|v| walk_value(doc, v))
                }
                ConfigValue::Map(entries) => {
                    entries.iter().try_for_each(|(_, v)| walk_value(doc, v))
                }
                _ => Ok(()),
            }
        }
        for inv in &self.description {
            if !self.commands.contains_key(&inv.command) {
                return Err(ConfigError::UnknownCommand(inv.command.clone()));
            }
            for (_, value) in &inv.attributes {
                walk_value(self, value)?;
            }
        }
        Ok(())
    }
}

/// Source of imported configuration texts.
///
/// `load` receives the importing document's resolved key (None for the
/// root) and the path as written, and returns a resolved key for cycle
/// detection plus the text.
pub trait ConfigLoader {
    fn load(&self, from: Option<&str>, path: &str) -> Result<(String, String), String>;
}

/// Loads imports from the filesystem, resolving relative paths against
/// the importing file's directory.
pub struct FileLoader;

impl ConfigLoader for FileLoader {
    fn load(&self, from: Option<&str>, path: &str) -> Result<(String, String), String> {
        let candidate = match from {
            Some(parent) => Path::new(parent)
                .parent()
                .unwrap_or_else(|| Path::new(""))
                .join(path),
            None => PathBuf::from(path),
        };
        let key = candidate
            .canonicalize()
            .unwrap_or(candidate.clone())
            .to_string_lossy()
            .into_owned();
        let text = std::fs::read_to_string(&candidate).map_err(|e| e.to_string())?;
        Ok((key, text))
    }
}

/// In-memory loader for tests: path strings map directly to texts.
pub struct MapLoader(pub BTreeMap<String, String>);

impl ConfigLoader for MapLoader {
    fn load(&self, _from: Option<&str>, path: &str) -> Result<(String, String), String> {
        self.0
            .get(path)
            .map(|text| (path.to_string(), text.clone()))
            .ok_or_else(|| "not found".to_string())
    }
}

/// Resolves every import into a single flattened document.
///
/// Imported command bindings are merged (conflicting redefinitions are
/// collisions), imported invocations precede local ones, and imported
/// entity names gain the import's `<prefix>/`. Resolving an already
/// flattened document is the identity.
pub fn resolve_imports(
    doc: &ConfigDocument,
    loader: &dyn ConfigLoader,
) -> Result<ConfigDocument, ConfigError> {
    resolve_imports_from(doc, None, loader)
}

/// As [`resolve_imports`], with the root document's resolved key supplied
/// so direct self-imports are caught immediately.
pub fn resolve_imports_from(
    doc: &ConfigDocument,
    root_key: Option<&str>,
    loader: &dyn ConfigLoader,
) -> Result<ConfigDocument, ConfigError> {
    let mut stack: Vec<String> = root_key.map(|k| vec![k.to_string()]).unwrap_or_default();
    let flat = resolve_rec(doc, root_key, loader, &mut stack)?;
    check_entity_collisions(&flat)?;
    Ok(flat)
}

fn resolve_rec(
    doc: &ConfigDocument,
    from_key: Option<&str>,
    loader: &dyn ConfigLoader,
    stack: &mut Vec<String>,
) -> Result<ConfigDocument, ConfigError> {
    let mut out = ConfigDocument {
        commands: doc.commands.clone(),
        configurations: Vec::new(),
        description: Vec::new(),
    };
    for import in &doc.configurations {
        let (key, text) =
            loader
                .load(from_key, &import.path)
                .map_err(|cause| ConfigError::MissingImport { path: import.path.clone(), cause })?;
        if stack.contains(&key) {
            return Err(ConfigError::ImportCycle(import.path.clone()));
        }
        let child = parse_config(&text)?;
        stack.push(key.clone());
        let child_flat = resolve_rec(&child, Some(&key), loader, stack)?;
        stack.pop();

        for (name, binding) in child_flat.commands {
            match out.commands.get(&name) {
                Some(existing) if *existing != binding => {
                    return Err(ConfigError::NameCollision(format!("command {name}")));
                }
                _ => {
                    out.commands.insert(name, binding);
                }
            }
        }
        for inv in child_flat.description {
            out.description.push(apply_prefix(inv, import.prefix.as_deref()));
        }
    }
    out.description.extend(doc.description.iter().cloned());
    Ok(out)
}

fn apply_prefix(mut inv: CommandInvocation, prefix: Option<&str>) -> CommandInvocation {
    if let Some(prefix) = prefix {
        if let Some(target) = inv.target.take() {
            inv.target = Some(format!("{prefix}/{target}"));
        }
    }
    inv
}

fn check_entity_collisions(doc: &ConfigDocument) -> Result<(), ConfigError> {
    let mut seen = std::collections::BTreeSet::new();
    for inv in &doc.description {
        let is_entity = doc
            .commands
            .get(&inv.command)
            .map(|b| b.kind == CommandKind::Entity)
            .unwrap_or(false);
        if is_entity {
            if let Some(name) = &inv.target {
                if !seen.insert(name.clone()) {
                    return Err(ConfigError::NameCollision(name.clone()));
                }
            }
        }
    }
    Ok(())
}

/// Reads, parses and flattens a configuration file.
pub fn load_document(path: &Path) -> Result<ConfigDocument, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let doc = parse_config(&text)?;
    let key = path
        .canonicalize()
        .unwrap_or_else(|_| path.to_path_buf())
        .to_string_lossy()
        .into_owned();
    resolve_imports_from(&doc, Some(&key), &FileLoader)
}

/// Builds the pipeline graph for a flattened document by constructing the
/// world and reading component placement plus processor data-flow
/// declarations from it.
pub fn emit_pipeline_graph(
    doc: &ConfigDocument,
    registry: &Registry,
) -> Result<PipelineGraph, ConfigError> {
    let world = build_world(doc, registry)?;
    Ok(PipelineGraph::from_world(&world))
}
