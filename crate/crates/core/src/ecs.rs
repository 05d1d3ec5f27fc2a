//! The ECS runtime: entity identity, component storage with attribute
//! reflection, and a strictly sequential processor scheduler.
//!
//! Entities are bare identifiers, components are pure data behind the
//! [`Component`] trait, and processors hold all per-iteration logic. The
//! scheduler runs processors in registration order and observers after
//! them, which is what makes state evolution reproducible enough to hash.

use std::any::Any;
use std::cell::{Ref, RefCell, RefMut};
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::attr::AttrValue;

/// Unique entity identifier, assigned sequentially from 1 within a [`World`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(pub u64);

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum EcsError {
    #[error("entity name {0:?} is already in use")]
    DuplicateName(String),
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("entity {entity} already has a {component} component")]
    DuplicateComponent { entity: EntityId, component: String },
    #[error("entity {entity} has no {component} component")]
    MissingComponent { entity: EntityId, component: String },
    #[error("{component} on entity {entity} is already borrowed")]
    BorrowConflict { entity: EntityId, component: String },
    #[error("{component} is stored as a different concrete type than requested")]
    TypeMismatch { component: String },
    #[error("expected exactly one entity with a Time component, found {0}")]
    AmbiguousTime(usize),
    #[error("{component}.{attribute}: {message}")]
    Attribute { component: String, attribute: String, message: String },
}

/// Data contract for component types.
///
/// A component is a fixed, ordered set of named attributes, each carrying
/// one of the semantic types in [`AttrValue`]. The reflection methods are
/// what the state log and the configuration builder operate on; typed
/// access goes through [`World::component_ref`] / [`World::component_mut`].
pub trait Component: Any + Send {
    /// Component type name as it appears in logs and configs, e.g. `"Time"`.
    fn type_name(&self) -> &'static str;

    /// Attribute names in their fixed declaration order.
    fn attribute_names(&self) -> &'static [&'static str];

    /// Current value of a named attribute, `None` for unknown names.
    fn attribute(&self, name: &str) -> Option<AttrValue>;

    /// Sets a named attribute, checking type, shape and per-attribute
    /// invariants. Returns a human-readable message on rejection.
    fn set_attribute(&mut self, name: &str, value: AttrValue) -> Result<(), String>;

    /// Cross-attribute invariant check, run after a batch of sets.
    fn validate(&self) -> Result<(), String> {
        Ok(())
    }

    fn as_any(&self) -> &dyn Any;
    fn as_any_mut(&mut self) -> &mut dyn Any;
}

/// Statically named component type, for typed lookups.
pub trait NamedComponent: Component + Sized {
    const NAME: &'static str;
}

/// Per-iteration logic. Processors read and write component data only;
/// they never touch entity identity (enforced by the `&World` receiver).
pub trait Processor: Send {
    /// Stable instance name used in diagnostics and the pipeline graph.
    fn name(&self) -> &str;

    /// Component type names this processor reads (pipeline graph edges in).
    fn reads(&self) -> &'static [&'static str] {
        &[]
    }

    /// Component type names this processor writes (pipeline graph edges out).
    fn writes(&self) -> &'static [&'static str] {
        &[]
    }

    fn step(&mut self, world: &World) -> Result<(), EcsError>;
}

/// Invoked once per successful iteration, after every processor has run.
pub trait StepObserver {
    fn after_step(&mut self, world: &World) -> Result<(), EcsError>;
}

type Store = HashMap<EntityId, RefCell<Box<dyn Component>>>;

/// The ECS container: entities, per-type component stores, and the
/// ordered processor pipeline.
///
/// A world is confined to one executor at a time. It may be moved between
/// threads but never shared mutably; component access is guarded by
/// runtime borrow checks so aliasing bugs surface as errors, not UB.
pub struct World {
    next_id: u64,
    entities: Vec<EntityId>,
    names: HashMap<String, EntityId>,
    entity_names: HashMap<EntityId, String>,
    stores: BTreeMap<String, Store>,
    pipeline: Vec<Box<dyn Processor>>,
    iteration: u64,
}

impl Default for World {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("World")
            .field("entities", &self.entities.len())
            .field("component_types", &self.stores.keys().collect::<Vec<_>>())
            .field("processors", &self.pipeline.iter().map(|p| p.name()).collect::<Vec<_>>())
            .field("iteration", &self.iteration)
            .finish()
    }
}

impl World {
    pub fn new() -> Self {
        World {
            next_id: 1,
            entities: Vec::new(),
            names: HashMap::new(),
            entity_names: HashMap::new(),
            stores: BTreeMap::new(),
            pipeline: Vec::new(),
            iteration: 1,
        }
    }

    /// Creates a fresh entity; ids are sequential from 1 and never reused.
    pub fn create_entity(&mut self, name: Option<&str>) -> Result<EntityId, EcsError> {
        if let Some(n) = name {
            if self.names.contains_key(n) {
                return Err(EcsError::DuplicateName(n.to_string()));
            }
        }
        let id = EntityId(self.next_id);
        self.next_id += 1;
        self.entities.push(id);
        if let Some(n) = name {
            self.names.insert(n.to_string(), id);
            self.entity_names.insert(id, n.to_string());
        }
        Ok(id)
    }

    pub fn contains(&self, entity: EntityId) -> bool {
        entity.0 >= 1 && entity.0 < self.next_id
    }

    /// Entities in ascending id order.
    pub fn entities(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn entity_by_name(&self, name: &str) -> Option<EntityId> {
        self.names.get(name).copied()
    }

    pub fn entity_name(&self, entity: EntityId) -> Option<&str> {
        self.entity_names.get(&entity).map(|s| s.as_str())
    }

    pub fn attach_component(
        &mut self,
        entity: EntityId,
        component: Box<dyn Component>,
    ) -> Result<(), EcsError> {
        if !self.contains(entity) {
            return Err(EcsError::UnknownEntity(entity));
        }
        let type_name = component.type_name().to_string();
        let store = self.stores.entry(type_name.clone()).or_default();
        if store.contains_key(&entity) {
            return Err(EcsError::DuplicateComponent { entity, component: type_name });
        }
        store.insert(entity, RefCell::new(component));
        Ok(())
    }

    /// Sugar over [`World::attach_component`] for concrete component values.
    pub fn attach<C: Component>(&mut self, entity: EntityId, component: C) -> Result<(), EcsError> {
        self.attach_component(entity, Box::new(component))
    }

    pub fn has_component(&self, entity: EntityId, type_name: &str) -> bool {
        self.stores
            .get(type_name)
            .map(|s| s.contains_key(&entity))
            .unwrap_or(false)
    }

    /// Component type names present in the world, ascending byte order.
    pub fn component_types(&self) -> impl Iterator<Item = &str> {
        self.stores.keys().map(|s| s.as_str())
    }

    fn cell(&self, entity: EntityId, type_name: &str) -> Result<&RefCell<Box<dyn Component>>, EcsError> {
        if !self.contains(entity) {
            return Err(EcsError::UnknownEntity(entity));
        }
        self.stores
            .get(type_name)
            .and_then(|s| s.get(&entity))
            .ok_or_else(|| EcsError::MissingComponent { entity, component: type_name.to_string() })
    }

    /// Read view of a component by type name.
    pub fn component_dyn(
        &self,
        entity: EntityId,
        type_name: &str,
    ) -> Result<Ref<'_, dyn Component>, EcsError> {
        let cell = self.cell(entity, type_name)?;
        let borrow = cell
            .try_borrow()
            .map_err(|_| EcsError::BorrowConflict { entity, component: type_name.to_string() })?;
        Ok(Ref::map(borrow, |b| b.as_ref()))
    }

    /// Write view of a component by type name.
    pub fn component_dyn_mut(
        &self,
        entity: EntityId,
        type_name: &str,
    ) -> Result<RefMut<'_, dyn Component>, EcsError> {
        let cell = self.cell(entity, type_name)?;
        let borrow = cell
            .try_borrow_mut()
            .map_err(|_| EcsError::BorrowConflict { entity, component: type_name.to_string() })?;
        Ok(RefMut::map(borrow, |b| b.as_mut()))
    }

    /// Typed read view; the single-writer rule is checked at runtime.
    pub fn component_ref<C: NamedComponent>(&self, entity: EntityId) -> Result<Ref<'_, C>, EcsError> {
        let cell = self.cell(entity, C::NAME)?;
        let borrow = cell
            .try_borrow()
            .map_err(|_| EcsError::BorrowConflict { entity, component: C::NAME.to_string() })?;
        if !(**borrow).as_any().is::<C>() {
            return Err(EcsError::TypeMismatch { component: C::NAME.to_string() });
        }
        Ok(Ref::map(borrow, |b| b.as_any().downcast_ref::<C>().unwrap()))
    }

    /// Typed write view; at most one may exist at a time per component.
    pub fn component_mut<C: NamedComponent>(&self, entity: EntityId) -> Result<RefMut<'_, C>, EcsError> {
        let cell = self.cell(entity, C::NAME)?;
        let borrow = cell
            .try_borrow_mut()
            .map_err(|_| EcsError::BorrowConflict { entity, component: C::NAME.to_string() })?;
        if !(**borrow).as_any().is::<C>() {
            return Err(EcsError::TypeMismatch { component: C::NAME.to_string() });
        }
        Ok(RefMut::map(borrow, |b| b.as_any_mut().downcast_mut::<C>().unwrap()))
    }

    /// All entities holding every required component type, ascending id.
    /// An empty filter matches every entity.
    pub fn query(&self, required: &[&str]) -> Vec<EntityId> {
        self.entities
            .iter()
            .copied()
            .filter(|e| required.iter().all(|t| self.has_component(*e, t)))
            .collect()
    }

    /// Appends a processor; the pipeline runs in registration order.
    pub fn register_processor(&mut self, processor: Box<dyn Processor>) {
        self.pipeline.push(processor);
    }

    pub fn pipeline(&self) -> &[Box<dyn Processor>] {
        &self.pipeline
    }

    /// The iteration number the next `step` will execute (starts at 1).
    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Runs one iteration: every processor in order, then every observer.
    ///
    /// On the first processor or observer error the iteration counter is
    /// left unincremented and remaining observers are skipped.
    pub fn step(&mut self, observers: &mut [&mut dyn StepObserver]) -> Result<(), EcsError> {
        let mut pipeline = std::mem::take(&mut self.pipeline);
        let mut result = Ok(());
        for processor in pipeline.iter_mut() {
            result = processor.step(self);
            if result.is_err() {
                break;
            }
        }
        self.pipeline = pipeline;
        result?;
        for observer in observers.iter_mut() {
            observer.after_step(self)?;
        }
        self.iteration += 1;
        Ok(())
    }

    /// Calls [`World::step`] exactly `iterations` times.
    pub fn run(
        &mut self,
        iterations: u64,
        observers: &mut [&mut dyn StepObserver],
    ) -> Result<(), EcsError> {
        for _ in 0..iterations {
            self.step(observers)?;
        }
        Ok(())
    }
}

/// Finds the single entity holding a `Time` component.
///
/// Shared by every time-driven processor so that a missing or ambiguous
/// clock fails the same way everywhere.
pub fn time_entity(world: &World) -> Result<EntityId, EcsError> {
    let holders = world.query(&["Time"]);
    match holders.len() {
        1 => Ok(holders[0]),
        0 => Err(EcsError::MissingComponent {
            entity: EntityId(0),
            component: "Time".to_string(),
        }),
        n => Err(EcsError::AmbiguousTime(n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::{Time, Transform};

    #[test]
    fn entity_ids_are_sequential_from_one() {
        let mut w = World::new();
        assert_eq!(w.create_entity(None).unwrap(), EntityId(1));
        assert_eq!(w.create_entity(None).unwrap(), EntityId(2));
    }

    #[test]
    fn duplicate_entity_name_is_rejected() {
        let mut w = World::new();
        w.create_entity(Some("os")).unwrap();
        assert!(matches!(
            w.create_entity(Some("os")),
            Err(EcsError::DuplicateName(_))
        ));
    }

    #[test]
    fn attach_and_get_round_trip() {
        let mut w = World::new();
        let _frame = w.create_entity(Some("frame")).unwrap();
        let clock = w.create_entity(Some("clock")).unwrap();
        w.attach(clock, Time { current_time: 0.0, increment_step: 0.1 }).unwrap();
        let t = w.component_ref::<Time>(clock).unwrap();
        assert_eq!(t.current_time, 0.0);
    }

    #[test]
    fn duplicate_component_is_rejected() {
        let mut w = World::new();
        let e = w.create_entity(None).unwrap();
        w.attach(e, Time::default()).unwrap();
        assert!(matches!(
            w.attach(e, Time::default()),
            Err(EcsError::DuplicateComponent { .. })
        ));
    }

    #[test]
    fn missing_component_and_unknown_entity() {
        let mut w = World::new();
        let e = w.create_entity(None).unwrap();
        w.create_entity(None).unwrap();
        assert!(matches!(
            w.component_ref::<Transform>(e),
            Err(EcsError::MissingComponent { .. })
        ));
        assert!(matches!(
            w.component_ref::<Time>(EntityId(99)),
            Err(EcsError::UnknownEntity(_))
        ));
    }

    #[test]
    fn mutations_through_view_are_visible() {
        let mut w = World::new();
        let e = w.create_entity(None).unwrap();
        w.attach(e, Time { current_time: 0.0, increment_step: 0.1 }).unwrap();
        w.component_mut::<Time>(e).unwrap().current_time = 4.0;
        assert_eq!(w.component_ref::<Time>(e).unwrap().current_time, 4.0);
    }

    #[test]
    fn query_matches_table_one_world() {
        // Entity 1 holds Transform + Mesh, entity 2 holds Time.
        let mut w = World::new();
        let frame = w.create_entity(None).unwrap();
        let clock = w.create_entity(None).unwrap();
        w.attach(frame, Transform::default()).unwrap();
        w.attach(frame, crate::scene::Mesh::default()).unwrap();
        w.attach(clock, Time::default()).unwrap();

        assert_eq!(w.query(&[]), vec![frame, clock]);
        assert_eq!(w.query(&["Transform"]), vec![frame]);
        assert_eq!(w.query(&["Transform", "Mesh"]), vec![frame]);
        assert!(w.query(&["Transform", "Time"]).is_empty());
    }

    #[test]
    fn single_writer_is_enforced_at_runtime() {
        let mut w = World::new();
        let e = w.create_entity(None).unwrap();
        w.attach(e, Time::default()).unwrap();
        let _guard = w.component_mut::<Time>(e).unwrap();
        assert!(matches!(
            w.component_ref::<Time>(e),
            Err(EcsError::BorrowConflict { .. })
        ));
    }

    struct AddOne;
    impl Processor for AddOne {
        fn name(&self) -> &str {
            "AddOne"
        }
        fn step(&mut self, world: &World) -> Result<(), EcsError> {
            for e in world.query(&["Time"]) {
                world.component_mut::<Time>(e)?.current_time += 1.0;
            }
            Ok(())
        }
    }

    struct Double;
    impl Processor for Double {
        fn name(&self) -> &str {
            "Double"
        }
        fn step(&mut self, world: &World) -> Result<(), EcsError> {
            for e in world.query(&["Time"]) {
                world.component_mut::<Time>(e)?.current_time *= 2.0;
            }
            Ok(())
        }
    }

    struct Failing;
    impl Processor for Failing {
        fn name(&self) -> &str {
            "Failing"
        }
        fn step(&mut self, _world: &World) -> Result<(), EcsError> {
            Err(EcsError::AmbiguousTime(7))
        }
    }

    struct CountObserver {
        iterations: Vec<u64>,
    }
    impl StepObserver for CountObserver {
        fn after_step(&mut self, world: &World) -> Result<(), EcsError> {
            self.iterations.push(world.iteration());
            Ok(())
        }
    }

    #[test]
    fn processors_run_in_registration_order() {
        // (0 + 1) * 2 = 2 if AddOne runs first; 0 * 2 + 1 = 1 otherwise.
        let mut w = World::new();
        let e = w.create_entity(None).unwrap();
        w.attach(e, Time { current_time: 0.0, increment_step: 1.0 }).unwrap();
        w.register_processor(Box::new(AddOne));
        w.register_processor(Box::new(Double));
        w.step(&mut []).unwrap();
        assert_eq!(w.component_ref::<Time>(e).unwrap().current_time, 2.0);
    }

    #[test]
    fn empty_pipeline_step_is_a_noop_on_data() {
        let mut w = World::new();
        let e = w.create_entity(None).unwrap();
        w.attach(e, Time { current_time: 0.5, increment_step: 0.1 }).unwrap();
        w.step(&mut []).unwrap();
        assert_eq!(w.component_ref::<Time>(e).unwrap().current_time, 0.5);
        assert_eq!(w.iteration(), 2);
    }

    #[test]
    fn observer_sees_iteration_one_on_first_step() {
        let mut w = World::new();
        let mut obs = CountObserver { iterations: vec![] };
        w.step(&mut [&mut obs]).unwrap();
        w.step(&mut [&mut obs]).unwrap();
        assert_eq!(obs.iterations, vec![1, 2]);
    }

    #[test]
    fn processor_error_leaves_counter_and_skips_observers() {
        let mut w = World::new();
        let e = w.create_entity(None).unwrap();
        w.attach(e, Time::default()).unwrap();
        w.register_processor(Box::new(AddOne));
        w.register_processor(Box::new(Failing));
        let mut obs = CountObserver { iterations: vec![] };
        assert!(w.step(&mut [&mut obs]).is_err());
        assert_eq!(w.iteration(), 1);
        assert!(obs.iterations.is_empty());
    }

    #[test]
    fn run_zero_iterations_mutates_nothing() {
        let mut w = World::new();
        let e = w.create_entity(None).unwrap();
        w.attach(e, Time { current_time: 0.25, increment_step: 0.1 }).unwrap();
        w.register_processor(Box::new(AddOne));
        w.run(0, &mut []).unwrap();
        assert_eq!(w.component_ref::<Time>(e).unwrap().current_time, 0.25);
        assert_eq!(w.iteration(), 1);
    }

    #[test]
    fn component_presence_is_stable_across_steps() {
        let mut w = World::new();
        let e = w.create_entity(None).unwrap();
        w.attach(e, Time::default()).unwrap();
        w.register_processor(Box::new(AddOne));
        let before: Vec<String> = w.component_types().map(String::from).collect();
        w.run(3, &mut []).unwrap();
        let after: Vec<String> = w.component_types().map(String::from).collect();
        assert_eq!(before, after);
        assert_eq!(w.entities().len(), 1);
    }
}
