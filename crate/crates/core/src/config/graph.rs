//! The data-pipeline graph: component instances and processors as nodes,
//! processor reads/writes as directed edges, exportable as DOT text.

use std::collections::BTreeSet;

use crate::ecs::World;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Drawn as a regular rectangle.
    Component,
    /// Drawn as a rounded rectangle.
    Processor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub label: String,
    pub kind: NodeKind,
}

/// Directed data-flow graph with deterministic node and edge order
/// (lexicographic by label). Cycles are expected, e.g. a time-update
/// processor reading and writing the same clock.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<(String, String)>,
}

impl PipelineGraph {
    /// Collects component instances (labelled `entity/Type`) and pipeline
    /// processors from a built world. An edge runs component -> processor
    /// for every declared read and processor -> component for every write.
    pub fn from_world(world: &World) -> Self {
        let mut nodes = Vec::new();

        let entity_label = |entity: crate::ecs::EntityId| -> String {
            world
                .entity_name(entity)
                .map(String::from)
                .unwrap_or_else(|| format!("entity{}", entity))
        };

        // Component instance nodes.
        let mut instances: Vec<(String, String)> = Vec::new(); // (type, label)
        for &entity in world.entities() {
            for type_name in world.component_types() {
                if world.has_component(entity, type_name) {
                    let label = format!("{}/{}", entity_label(entity), type_name);
                    instances.push((type_name.to_string(), label.clone()));
                    nodes.push(GraphNode { label, kind: NodeKind::Component });
                }
            }
        }

        // Processor nodes, deduplicated by ordinal suffix.
        let mut processor_labels = Vec::new();
        let mut used: BTreeSet<String> = BTreeSet::new();
        for processor in world.pipeline() {
            let base = processor.name().to_string();
            let mut label = base.clone();
            let mut ordinal = 2;
            while !used.insert(label.clone()) {
                label = format!("{base}#{ordinal}");
                ordinal += 1;
            }
            processor_labels.push(label.clone());
            nodes.push(GraphNode { label, kind: NodeKind::Processor });
        }

        let mut edges: BTreeSet<(String, String)> = BTreeSet::new();
        for (processor, label) in world.pipeline().iter().zip(&processor_labels) {
            for read in processor.reads() {
                for (type_name, instance) in &instances {
                    if type_name == read {
                        edges.insert((instance.clone(), label.clone()));
                    }
                }
            }
            for write in processor.writes() {
                for (type_name, instance) in &instances {
                    if type_name == write {
                        edges.insert((label.clone(), instance.clone()));
                    }
                }
            }
        }

        nodes.sort_by(|a, b| a.label.cmp(&b.label));
        PipelineGraph { nodes, edges: edges.into_iter().collect() }
    }

    /// True when some directed cycle exists (depth-first search over the
    /// adjacency built from `edges`).
    pub fn has_cycle(&self) -> bool {
        use std::collections::BTreeMap;
        let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (from, to) in &self.edges {
            adjacency.entry(from).or_default().push(to);
        }
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let mut marks: BTreeMap<&str, Mark> = BTreeMap::new();
        for node in &self.nodes {
            marks.insert(&node.label, Mark::New);
        }
        fn visit<'a>(
            node: &'a str,
            adjacency: &BTreeMap<&'a str, Vec<&'a str>>,
            marks: &mut BTreeMap<&'a str, Mark>,
        ) -> bool {
            match marks.get(node) {
                Some(Mark::Active) => return true,
                Some(Mark::Done) | None => return false,
                Some(Mark::New) => {}
            }
            marks.insert(node, Mark::Active);
            if let Some(next) = adjacency.get(node) {
                for n in next {
                    if visit(n, adjacency, marks) {
                        return true;
                    }
                }
            }
            marks.insert(node, Mark::Done);
            false
        }
        let labels: Vec<&str> = self.nodes.iter().map(|n| n.label.as_str()).collect();
        labels.iter().any(|l| visit(l, &adjacency, &mut marks))
    }

    /// DOT-format text: LF line endings, nodes sorted lexicographically,
    /// byte-identical across invocations on the same graph.
    pub fn to_dot(&self) -> String {
        fn escape(s: &str) -> String {
            s.replace('\\', "\\\\").replace('"', "\\\"")
        }
        let mut out = String::from("digraph pipeline {\n");
        for node in &self.nodes {
            let attrs = match node.kind {
                NodeKind::Component => "[shape=box]",
                NodeKind::Processor => "[shape=box, style=rounded]",
            };
            out.push_str(&format!("    \"{}\" {};\n", escape(&node.label), attrs));
        }
        for (from, to) in &self.edges {
            out.push_str(&format!("    \"{}\" -> \"{}\";\n", escape(from), escape(to)));
        }
        out.push_str("}\n");
        out
    }
}
