use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{EngineError, ModelError};
use crate::model::{make_calendar, validate_node, Calendar, NodeSpec, Time, TopicDecl, Valuation};
use crate::rta::{generate_dm, RtaModuleSpec};
use crate::wellformed::{check_composable, Verdict, WellformednessReport};

/// Role of a node inside the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Dm { module: usize },
    Ac { module: usize },
    Sc { module: usize },
    Free,
    /// A free node modelling the physical plant. Plants fire after every
    /// other node of the same instant.
    Plant,
}

#[derive(Debug, Clone)]
pub struct NodeEntry {
    pub spec: NodeSpec,
    pub kind: NodeKind,
}

/// A composed RTA system. Nodes are indexed in the default intra-instant
/// firing order: decision modules, then other nodes, then plants, each
/// group sorted by name.
#[derive(Clone)]
pub struct SystemSpec {
    pub topics: BTreeMap<String, TopicDecl>,
    pub modules: Vec<RtaModuleSpec>,
    pub nodes: Vec<NodeEntry>,
    pub index: BTreeMap<String, usize>,
    pub acnodes: BTreeMap<String, String>,
    pub scnodes: BTreeMap<String, String>,
    pub system_inputs: BTreeSet<String>,
    pub system_outputs: BTreeSet<String>,
    pub horizon: Time,
    pub calendar: Calendar,
    /// Static well-formedness verdicts per module, when computed.
    pub reports: BTreeMap<String, WellformednessReport>,
    /// Per module: node indices of (dm, ac, sc).
    pub(crate) module_nodes: Vec<(usize, usize, usize)>,
}

impl fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemSpec")
            .field("topics", &self.topics.keys().collect::<Vec<_>>())
            .field("nodes", &self.nodes.iter().map(|n| &n.spec.name).collect::<Vec<_>>())
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

impl SystemSpec {
    pub fn builder() -> SystemBuilder {
        SystemBuilder::default()
    }

    pub fn node(&self, name: &str) -> Option<&NodeEntry> {
        self.index.get(name).map(|&i| &self.nodes[i])
    }

    pub fn node_index(&self, name: &str) -> Result<usize, EngineError> {
        self.index.get(name).copied().ok_or_else(|| EngineError::UnknownNode(name.to_string()))
    }

    /// `(dm, ac, sc)` node indices of module `m`.
    pub fn module_nodes(&self, m: usize) -> (usize, usize, usize) {
        self.module_nodes[m]
    }

    pub fn default_valuation(&self) -> Valuation {
        let mut v = Valuation::new();
        for (name, decl) in &self.topics {
            v.insert(name.clone(), decl.default.clone());
        }
        v
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Assembles and validates a [`SystemSpec`].
#[derive(Default)]
pub struct SystemBuilder {
    topics: Vec<TopicDecl>,
    modules: Vec<RtaModuleSpec>,
    free: Vec<NodeSpec>,
    plants: Vec<NodeSpec>,
    reports: BTreeMap<String, WellformednessReport>,
}

impl SystemBuilder {
    pub fn topic(mut self, decl: TopicDecl) -> Self {
        self.topics.push(decl);
        self
    }

    pub fn topics(mut self, decls: impl IntoIterator<Item = TopicDecl>) -> Self {
        self.topics.extend(decls);
        self
    }

    pub fn module(mut self, m: RtaModuleSpec) -> Self {
        self.modules.push(m);
        self
    }

    pub fn node(mut self, n: NodeSpec) -> Self {
        self.free.push(n);
        self
    }

    pub fn plant(mut self, n: NodeSpec) -> Self {
        self.plants.push(n);
        self
    }

    pub fn report(mut self, r: WellformednessReport) -> Self {
        self.reports.insert(r.subject.clone(), r);
        self
    }

    pub fn build(self, horizon: Time) -> Result<SystemSpec, EngineError> {
        let mut topics = BTreeMap::new();
        for t in self.topics {
            t.validate()?;
            if topics.insert(t.name.clone(), t.clone()).is_some() {
                return Err(ModelError::Duplicate(t.name).into());
            }
        }
        let free_all: Vec<NodeSpec> = self.free.iter().chain(&self.plants).cloned().collect();
        if let Verdict::Fail { witness } = check_composable(&self.modules, &free_all) {
            return Err(EngineError::NotComposable(witness));
        }

        let mut entries: Vec<NodeEntry> = Vec::new();
        let mut acnodes = BTreeMap::new();
        let mut scnodes = BTreeMap::new();
        for (i, m) in self.modules.iter().enumerate() {
            let dm = generate_dm(m)?;
            acnodes.insert(dm.name.clone(), m.ac.name.clone());
            scnodes.insert(dm.name.clone(), m.sc.name.clone());
            entries.push(NodeEntry { spec: dm, kind: NodeKind::Dm { module: i } });
            entries.push(NodeEntry { spec: m.ac.clone(), kind: NodeKind::Ac { module: i } });
            entries.push(NodeEntry { spec: m.sc.clone(), kind: NodeKind::Sc { module: i } });
        }
        entries.extend(self.free.into_iter().map(|spec| NodeEntry { spec, kind: NodeKind::Free }));
        entries.extend(self.plants.into_iter().map(|spec| NodeEntry { spec, kind: NodeKind::Plant }));

        let names: BTreeSet<String> = topics.keys().cloned().collect();
        let mut seen = BTreeSet::new();
        for e in &entries {
            validate_node(&e.spec, &names)?;
            if !seen.insert(e.spec.name.clone()) {
                return Err(ModelError::Duplicate(e.spec.name.clone()).into());
            }
        }
        for m in &self.modules {
            if !names.contains(&m.state_topic) {
                return Err(ModelError::UnknownTopic { node: m.dm_name.clone(), topic: m.state_topic.clone() }.into());
            }
        }

        let class = |k: &NodeKind| match k {
            NodeKind::Dm { .. } => 0,
            NodeKind::Plant => 2,
            _ => 1,
        };
        entries.sort_by(|a, b| class(&a.kind).cmp(&class(&b.kind)).then_with(|| a.spec.name.cmp(&b.spec.name)));
        let index: BTreeMap<String, usize> =
            entries.iter().enumerate().map(|(i, e)| (e.spec.name.clone(), i)).collect();
        let module_nodes = self
            .modules
            .iter()
            .map(|m| (index[&m.dm_name], index[&m.ac.name], index[&m.sc.name]))
            .collect();

        let system_outputs: BTreeSet<String> = entries.iter().flat_map(|e| e.spec.outputs.iter().cloned()).collect();
        let system_inputs = names.difference(&system_outputs).cloned().collect();
        let calendar = if entries.is_empty() {
            Calendar::default()
        } else {
            make_calendar(entries.iter().map(|e| &e.spec), horizon)?
        };
        Ok(SystemSpec {
            topics,
            modules: self.modules,
            nodes: entries,
            index,
            acnodes,
            scnodes,
            system_inputs,
            system_outputs,
            horizon,
            calendar,
            reports: self.reports,
            module_nodes,
        })
    }
}
