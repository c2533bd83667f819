//! Domain types for problems, reasoning trees, and the complexity-to-configuration mapping.
//!
//! A [`ReasoningTree`] is a rooted tree of [`ReasoningNode`]s. The root holds the
//! problem statement; every other node holds one intermediate reasoning step.
//! Nodes are soft-deleted via the `pruned` flag so that episode traces stay
//! complete and replayable.

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::refine::CritiqueReport;

/// Task domain of a problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Math,
    Creative,
    Other,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Math => write!(f, "math"),
            Domain::Creative => write!(f, "creative"),
            Domain::Other => write!(f, "other"),
        }
    }
}

/// One problem instance to solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub statement: String,
    pub domain: Domain,
    /// Ground-truth answer for math problems, when known.
    pub reference_answer: Option<String>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl Problem {
    /// Build a problem, rejecting empty statements.
    pub fn new(id: impl Into<String>, statement: impl Into<String>, domain: Domain) -> Result<Self> {
        let statement = statement.into();
        if statement.trim().is_empty() {
            return Err(Error::invalid_argument("problem statement must be non-empty"));
        }
        Ok(Problem {
            id: id.into(),
            statement,
            domain,
            reference_answer: None,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_reference_answer(mut self, answer: impl Into<String>) -> Self {
        self.reference_answer = Some(answer.into());
        self
    }
}

/// LLM-estimated problem complexity on a 1-5 scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    /// Always within `[1, 5]`.
    pub level: u8,
    pub rationale: String,
}

impl ComplexityEstimate {
    pub fn new(level: u8, rationale: impl Into<String>) -> Result<Self> {
        if !(1..=5).contains(&level) {
            return Err(Error::invalid_argument(format!(
                "complexity level {level} outside [1,5]"
            )));
        }
        Ok(ComplexityEstimate {
            level,
            rationale: rationale.into(),
        })
    }
}

/// Search-tree shape and termination parameters for one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Maximum node depth; the root sits at depth 0.
    pub max_depth: u32,
    /// Children requested per expanded node.
    pub branching: u32,
    /// Nodes retained per tree level after pruning.
    pub prune_k: usize,
    /// Refinement-loop rewrite cap per node.
    pub max_refinements: u32,
    /// Self-critique score at which refinement stops.
    pub quality_threshold: f64,
    /// Combined score at which the episode converges with high confidence.
    pub convergence_score: f64,
    /// Hard stop on episode loop iterations.
    pub max_iterations: u32,
}

impl TreeConfig {
    fn validate(&self) -> Result<()> {
        if self.max_depth < 1 || self.branching < 1 || self.prune_k < 1 || self.max_iterations < 1 {
            return Err(Error::invalid_argument(
                "max_depth, branching, prune_k and max_iterations must be >= 1",
            ));
        }
        if !(0.0..=1.0).contains(&self.quality_threshold) {
            return Err(Error::invalid_argument("quality_threshold must be in [0,1]"));
        }
        if !(self.convergence_score > 0.0 && self.convergence_score <= 1.0) {
            return Err(Error::invalid_argument("convergence_score must be in (0,1]"));
        }
        Ok(())
    }
}

/// Optional overrides applied on top of the complexity-derived configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigOverrides {
    pub max_depth: Option<u32>,
    pub branching: Option<u32>,
    pub prune_k: Option<usize>,
    pub max_refinements: Option<u32>,
    pub quality_threshold: Option<f64>,
    pub convergence_score: Option<f64>,
    pub max_iterations: Option<u32>,
}

/// Map an estimated complexity level to a tree configuration.
///
/// Depth/branching rows: levels 1-2 get (2, 2), level 3 gets (3, 3), levels
/// 4 and 5 get branching 4 with depth equal to the level. Pruning keeps 3
/// nodes per level up to complexity 3 and 4 above it. `max_iterations`
/// defaults to `max_depth + 2` unless overridden.
pub fn config_for_complexity(level: u8, overrides: &ConfigOverrides) -> Result<TreeConfig> {
    let (depth, branching) = match level {
        1 | 2 => (2, 2),
        3 => (3, 3),
        4 => (4, 4),
        5 => (5, 4),
        other => {
            return Err(Error::invalid_argument(format!(
                "complexity level {other} outside [1,5]"
            )))
        }
    };
    let prune_k = if level <= 3 { 3 } else { 4 };

    let max_depth = overrides.max_depth.unwrap_or(depth);
    let config = TreeConfig {
        max_depth,
        branching: overrides.branching.unwrap_or(branching),
        prune_k: overrides.prune_k.unwrap_or(prune_k),
        max_refinements: overrides.max_refinements.unwrap_or(3),
        quality_threshold: overrides.quality_threshold.unwrap_or(0.8),
        convergence_score: overrides.convergence_score.unwrap_or(0.95),
        max_iterations: overrides.max_iterations.unwrap_or(max_depth + 2),
    };
    config.validate()?;
    Ok(config)
}

/// Worst-case non-root node count for a configuration:
/// sum over depths 1..=max_depth of branching^depth.
pub fn max_node_bound(config: &TreeConfig) -> u64 {
    (1..=config.max_depth)
        .map(|d| (config.branching as u64).pow(d))
        .sum()
}

/// Identifier of one node, unique across trees built from distinct problems.
///
/// Formatted as `<problem id>.n<sequence>`, so ids are deterministic and
/// readable in exported traces.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl NodeId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// One thought in the reasoning tree, with its refinement history and scores.
#[derive(Debug, Clone)]
pub struct ReasoningNode {
    pub id: NodeId,
    pub thought: String,
    /// 0 for the root; parent depth + 1 otherwise.
    pub depth: u32,
    /// Number of rewrite passes applied by the refinement loop.
    pub refinement_count: u32,
    pub critique_history: Vec<CritiqueReport>,
    pub local_score: Option<f64>,
    pub cross_score: Option<f64>,
    pub combined_score: Option<f64>,
    pub children: Vec<NodeId>,
    pub parent_id: Option<NodeId>,
    pub pruned: bool,
    /// Monotone creation index; the tie-breaker everywhere.
    pub created_seq: u64,
}

/// Node store with parent/child links, a frontier view, and pruning marks.
#[derive(Debug, Clone)]
pub struct ReasoningTree {
    nodes: IndexMap<NodeId, ReasoningNode>,
    root_id: NodeId,
    next_seq: u64,
    problem_id: String,
}

impl ReasoningTree {
    /// Create a tree whose single root node holds the problem statement.
    pub fn new_tree(problem: &Problem) -> Self {
        let root_id = NodeId(format!("{}.n0", problem.id));
        let root = ReasoningNode {
            id: root_id.clone(),
            thought: problem.statement.clone(),
            depth: 0,
            refinement_count: 0,
            critique_history: Vec::new(),
            local_score: None,
            cross_score: None,
            combined_score: None,
            children: Vec::new(),
            parent_id: None,
            pruned: false,
            created_seq: 0,
        };
        let mut nodes = IndexMap::new();
        nodes.insert(root_id.clone(), root);
        ReasoningTree {
            nodes,
            root_id,
            next_seq: 1,
            problem_id: problem.id.clone(),
        }
    }

    pub fn root_id(&self) -> &NodeId {
        &self.root_id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, id: &NodeId) -> Option<&ReasoningNode> {
        self.nodes.get(id)
    }

    pub fn get_mut(&mut self, id: &NodeId) -> Option<&mut ReasoningNode> {
        self.nodes.get_mut(id)
    }

    /// Nodes in creation order.
    pub fn iter(&self) -> impl Iterator<Item = &ReasoningNode> {
        self.nodes.values()
    }

    /// Append a child thought under `parent_id`.
    ///
    /// Fails if the parent is unknown or already pruned; pruned subtrees are
    /// never expanded.
    pub fn add_child(&mut self, parent_id: &NodeId, thought: impl Into<String>) -> Result<NodeId> {
        let parent = self
            .nodes
            .get(parent_id)
            .ok_or_else(|| Error::not_found(format!("node {parent_id}")))?;
        if parent.pruned {
            return Err(Error::invalid_state(format!(
                "cannot add a child under pruned node {parent_id}"
            )));
        }
        let depth = parent.depth + 1;
        let seq = self.next_seq;
        self.next_seq += 1;
        let id = NodeId(format!("{}.n{}", self.problem_id, seq));
        let node = ReasoningNode {
            id: id.clone(),
            thought: thought.into(),
            depth,
            refinement_count: 0,
            critique_history: Vec::new(),
            local_score: None,
            cross_score: None,
            combined_score: None,
            children: Vec::new(),
            parent_id: Some(parent_id.clone()),
            pruned: false,
            created_seq: seq,
        };
        self.nodes
            .get_mut(parent_id)
            .expect("parent existence checked above")
            .children
            .push(id.clone());
        self.nodes.insert(id.clone(), node);
        Ok(id)
    }

    /// Non-pruned structural leaves with depth below `max_depth`, in creation order.
    pub fn frontier(&self, max_depth: u32) -> Vec<NodeId> {
        let mut ids: Vec<&ReasoningNode> = self
            .nodes
            .values()
            .filter(|n| !n.pruned && n.children.is_empty() && n.depth < max_depth)
            .collect();
        ids.sort_by_key(|n| n.created_seq);
        ids.into_iter().map(|n| n.id.clone()).collect()
    }

    /// A node is an effective leaf when it is not pruned and has no
    /// surviving (non-pruned) children.
    pub fn is_effective_leaf(&self, node: &ReasoningNode) -> bool {
        !node.pruned
            && node
                .children
                .iter()
                .all(|c| self.nodes.get(c).map(|n| n.pruned).unwrap_or(true))
    }

    /// Scored effective leaves, in creation order.
    pub fn scored_leaves(&self) -> Vec<&ReasoningNode> {
        let mut leaves: Vec<&ReasoningNode> = self
            .nodes
            .values()
            .filter(|n| self.is_effective_leaf(n) && n.combined_score.is_some())
            .collect();
        leaves.sort_by_key(|n| n.created_seq);
        leaves
    }

    /// Path from the root to the highest-combined-score effective leaf.
    ///
    /// Ties break toward the earlier-created leaf. Fails when no scored leaf
    /// exists.
    pub fn trace_best_path(&self) -> Result<Vec<&ReasoningNode>> {
        let leaves = self.scored_leaves();
        let best = leaves
            .iter()
            .max_by(|a, b| {
                let sa = a.combined_score.unwrap_or(0.0);
                let sb = b.combined_score.unwrap_or(0.0);
                sa.partial_cmp(&sb)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    // On score ties prefer the earlier creation; max_by keeps
                    // the later element on Equal, so order by reversed seq.
                    .then(b.created_seq.cmp(&a.created_seq))
            })
            .copied()
            .ok_or_else(|| Error::invalid_state("no scored non-pruned leaf in tree"))?;

        let mut path = vec![best];
        let mut current = best;
        while let Some(parent_id) = &current.parent_id {
            let parent = self
                .nodes
                .get(parent_id)
                .ok_or_else(|| Error::invalid_state(format!("dangling parent id {parent_id}")))?;
            path.push(parent);
            current = parent;
        }
        path.reverse();
        Ok(path)
    }

    /// Count of pruned nodes.
    pub fn pruned_count(&self) -> usize {
        self.nodes.values().filter(|n| n.pruned).count()
    }

    /// Verify depth and linkage invariants over the whole tree.
    /// Used by tests and the acceptance suite.
    pub fn check_integrity(&self) -> Result<()> {
        for node in self.nodes.values() {
            match &node.parent_id {
                None => {
                    if node.id != self.root_id || node.depth != 0 {
                        return Err(Error::invalid_state("non-root node without parent"));
                    }
                }
                Some(pid) => {
                    let parent = self
                        .nodes
                        .get(pid)
                        .ok_or_else(|| Error::invalid_state(format!("missing parent {pid}")))?;
                    if node.depth != parent.depth + 1 {
                        return Err(Error::invalid_state(format!(
                            "node {} depth {} but parent depth {}",
                            node.id, node.depth, parent.depth
                        )));
                    }
                    if !parent.children.contains(&node.id) {
                        return Err(Error::invalid_state(format!(
                            "node {} missing from parent child list",
                            node.id
                        )));
                    }
                }
            }
            for child in &node.children {
                if !self.nodes.contains_key(child) {
                    return Err(Error::invalid_state(format!("dangling child id {child}")));
                }
            }
        }
        Ok(())
    }
}
