//! Module resolution used by validation, editing and export.

use std::collections::BTreeMap;

use crate::h5p::H5pPackage;
use crate::model::{CompositionGraph, CompositionId, ContentId, ContentRef, ModuleDescriptor, ModuleId};

/// Read access to modules and the content behind them.
pub trait ModuleRegistry {
    fn module(&self, id: &ModuleId) -> Option<&ModuleDescriptor>;
    fn composition(&self, id: &CompositionId) -> Option<&CompositionGraph>;
    fn package(&self, id: &ContentId) -> Option<&H5pPackage>;

    /// Whether a node may reference `id`. The built-in start module always resolves.
    fn resolves(&self, id: &ModuleId) -> bool {
        id.is_builtin() || self.module(id).is_some()
    }

    /// The graph behind a composite module.
    fn module_graph(&self, id: &ModuleId) -> Option<&CompositionGraph> {
        self.module(id)
            .and_then(|m| m.content.composition())
            .and_then(|c| self.composition(c))
    }
}

/// A plain in-memory registry.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    modules: BTreeMap<ModuleId, ModuleDescriptor>,
    compositions: BTreeMap<CompositionId, CompositionGraph>,
    packages: BTreeMap<ContentId, H5pPackage>,
}

impl Registry {
    pub fn insert_module(&mut self, module: ModuleDescriptor) {
        self.modules.insert(module.module_id.clone(), module);
    }

    pub fn insert_composition(&mut self, module: ModuleDescriptor, graph: CompositionGraph) {
        self.compositions.insert(graph.composition_id().clone(), graph);
        self.insert_module(module);
    }

    /// Registers an atomic module backed by `package`.
    ///
    /// # Panics
    /// If `module` is not atomic.
    pub fn insert_package(&mut self, module: ModuleDescriptor, package: H5pPackage) {
        let ContentRef::Atomic(content) = &module.content else {
            panic!("module {} is not atomic", module.module_id);
        };
        self.packages.insert(content.clone(), package);
        self.insert_module(module);
    }

    /// Replaces a stored graph, keyed by its own composition id.
    pub fn update_composition(&mut self, graph: CompositionGraph) {
        self.compositions.insert(graph.composition_id().clone(), graph);
    }
}

impl ModuleRegistry for Registry {
    fn module(&self, id: &ModuleId) -> Option<&ModuleDescriptor> {
        self.modules.get(id)
    }

    fn composition(&self, id: &CompositionId) -> Option<&CompositionGraph> {
        self.compositions.get(id)
    }

    fn package(&self, id: &ContentId) -> Option<&H5pPackage> {
        self.packages.get(id)
    }
}
