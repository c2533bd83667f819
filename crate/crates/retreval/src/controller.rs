//! The episode loop: complexity estimation, expansion, refinement, scoring,
//! top-k pruning, convergence, traceback, final-answer synthesis, and the
//! memory update.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::parse::parse_candidates;
use crate::gateway::prompts::{build_generation_prompt, estimate_complexity};
use crate::gateway::provider::{ChatProvider, PromptRequest, RoleTag, TracingProvider};
use crate::gateway::templates::PromptTemplates;
use crate::memory::ReflexionMemory;
use crate::model::{config_for_complexity, ConfigOverrides, NodeId, Problem, ReasoningTree, TreeConfig};
use crate::refine::{refine_node, NodeContext};
use crate::score::{default_criteria, score_node, DualScore, ScoreWeights};
use crate::trace::{ConvergedReason, RunTrace, TraceHandle};

/// Best-score deltas below this count as "no improvement" for the plateau check.
pub const PLATEAU_EPSILON: f64 = 1e-6;

pub const RESULT_SCHEMA_VERSION: u32 = 1;

/// Mutable episode state; exposed so tests can inspect the finished tree.
#[derive(Debug, Clone)]
pub struct EpisodeState {
    pub tree: ReasoningTree,
    pub config: TreeConfig,
    pub iteration: u32,
    /// One entry per loop iteration: the best scored-leaf score so far.
    pub best_score_history: Vec<f64>,
    pub call_count: usize,
    pub converged_reason: Option<ConvergedReason>,
}

/// Aggregate counters for one episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub nodes_created: usize,
    pub nodes_pruned: usize,
    pub calls_by_role: BTreeMap<String, u64>,
    pub wall_time_ms: u64,
}

/// Outcome of solving one problem with one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionResult {
    pub problem_id: String,
    pub method: String,
    pub final_answer: String,
    pub best_path: Vec<NodeId>,
    /// Combined score of the winning leaf; absent for baseline methods.
    pub best_score: Option<f64>,
    pub converged_reason: Option<ConvergedReason>,
    pub stats: RunStats,
}

/// Soft per-episode budget for loop-phase calls:
/// `prune_k * max_depth * (max_refinements + 2)`.
///
/// Fixed overhead (complexity estimate, final synthesis, up to two memory
/// extraction calls) is accounted separately. Exceeding the budget emits a
/// trace warning; it never stops the episode.
pub fn call_budget(config: &TreeConfig) -> u64 {
    config.prune_k as u64 * config.max_depth as u64 * (config.max_refinements as u64 + 2)
}

/// Roles whose calls count against the loop-phase budget.
pub fn loop_phase_calls(trace: &RunTrace) -> u64 {
    trace
        .calls()
        .filter(|(role, _, _)| {
            matches!(
                role,
                RoleTag::Generate | RoleTag::SelfCritique | RoleTag::Refine | RoleTag::CrossScore
            )
        })
        .count() as u64
}

/// Result of pruning one tree level.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    pub retained: Vec<NodeId>,
    pub pruned: Vec<NodeId>,
}

/// Keep the top-k nodes at `depth` by combined score and mark the rest
/// pruned. Ties break toward earlier creation. Every non-pruned node at the
/// level must already be scored.
pub fn prune_level(tree: &mut ReasoningTree, depth: u32, k: usize) -> Result<PruneOutcome> {
    let mut level: Vec<(NodeId, f64, u64)> = Vec::new();
    for node in tree.iter() {
        if node.depth == depth && !node.pruned {
            let score = node.combined_score.ok_or_else(|| {
                Error::invalid_state(format!("unscored node {} at depth {depth}", node.id))
            })?;
            level.push((node.id.clone(), score, node.created_seq));
        }
    }
    level.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.2.cmp(&b.2))
    });
    let retained: Vec<NodeId> = level.iter().take(k).map(|(id, _, _)| id.clone()).collect();
    let pruned: Vec<NodeId> = level.iter().skip(k).map(|(id, _, _)| id.clone()).collect();
    for id in &pruned {
        tree.get_mut(id).expect("level node exists").pruned = true;
    }
    Ok(PruneOutcome { retained, pruned })
}

/// First matching termination reason, checked in the order: high confidence,
/// exhausted depth, score plateau, iteration limit. `None` while the episode
/// should continue. Requires at least one completed iteration.
pub fn check_convergence(state: &EpisodeState) -> Option<ConvergedReason> {
    check_convergence_with_exhausted(state, &BTreeSet::new())
}

fn check_convergence_with_exhausted(
    state: &EpisodeState,
    exhausted: &BTreeSet<NodeId>,
) -> Option<ConvergedReason> {
    let best = *state.best_score_history.last()?;
    if best >= state.config.convergence_score {
        return Some(ConvergedReason::HighConfidence);
    }
    let frontier_empty = state
        .tree
        .frontier(state.config.max_depth)
        .iter()
        .all(|id| exhausted.contains(id));
    if frontier_empty {
        return Some(ConvergedReason::MaxDepth);
    }
    let history = &state.best_score_history;
    if history.len() >= 3 {
        let n = history.len();
        let d1 = (history[n - 1] - history[n - 2]).abs();
        let d2 = (history[n - 2] - history[n - 3]).abs();
        if d1 < PLATEAU_EPSILON && d2 < PLATEAU_EPSILON {
            return Some(ConvergedReason::Plateau);
        }
    }
    if state.iteration >= state.config.max_iterations {
        return Some(ConvergedReason::IterationLimit);
    }
    None
}

/// Episode driver. Holds the provider, templates, and scoring configuration
/// shared across problems.
pub struct Solver {
    provider: Arc<dyn ChatProvider>,
    /// Distinct provider for cross-score calls; defaults to `provider`.
    critic_provider: Option<Arc<dyn ChatProvider>>,
    templates: PromptTemplates,
    weights: ScoreWeights,
    criteria: Vec<String>,
    /// Children processed concurrently per iteration. 1 = fully sequential,
    /// which golden-trace tests require.
    parallelism: usize,
}

impl Solver {
    pub fn new(provider: Arc<dyn ChatProvider>) -> Self {
        Solver {
            provider,
            critic_provider: None,
            templates: PromptTemplates::default(),
            weights: ScoreWeights::default(),
            criteria: default_criteria(),
            parallelism: 4,
        }
    }

    pub fn with_templates(mut self, templates: PromptTemplates) -> Self {
        self.templates = templates;
        self
    }

    pub fn with_weights(mut self, weights: ScoreWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_critic_provider(mut self, provider: Arc<dyn ChatProvider>) -> Self {
        self.critic_provider = Some(provider);
        self
    }

    pub fn with_parallelism(mut self, parallelism: usize) -> Self {
        self.parallelism = parallelism.max(1);
        self
    }

    pub fn sequential(self) -> Self {
        self.with_parallelism(1)
    }

    pub fn templates(&self) -> &PromptTemplates {
        &self.templates
    }

    /// Solve one problem end to end, updating `memory` afterwards.
    pub fn solve(
        &self,
        problem: &Problem,
        memory: &mut ReflexionMemory,
        overrides: &ConfigOverrides,
        trace: &TraceHandle,
    ) -> Result<SolutionResult> {
        self.solve_with_state(problem, memory, overrides, trace)
            .map(|(result, _)| result)
    }

    /// As [`Self::solve`], additionally returning the final episode state for
    /// structural inspection.
    pub fn solve_with_state(
        &self,
        problem: &Problem,
        memory: &mut ReflexionMemory,
        overrides: &ConfigOverrides,
        trace: &TraceHandle,
    ) -> Result<(SolutionResult, EpisodeState)> {
        let start = Instant::now();
        let traced: Arc<dyn ChatProvider> =
            Arc::new(TracingProvider::new(self.provider.clone(), trace.clone()));
        let critic: Arc<dyn ChatProvider> = match &self.critic_provider {
            Some(p) => Arc::new(TracingProvider::new(p.clone(), trace.clone())),
            None => traced.clone(),
        };

        let estimate = estimate_complexity(&*traced, problem, &self.templates, trace)?;
        let config = config_for_complexity(estimate.level, overrides)?;
        trace.note(format!(
            "complexity {} -> depth {} branching {} k {} refinements {}",
            estimate.level, config.max_depth, config.branching, config.prune_k, config.max_refinements
        ));

        let memory_ctx = memory.retrieval_context();
        let mut state = EpisodeState {
            tree: ReasoningTree::new_tree(problem),
            config: config.clone(),
            iteration: 0,
            best_score_history: Vec::new(),
            call_count: 0,
            converged_reason: None,
        };
        let mut exhausted: BTreeSet<NodeId> = BTreeSet::new();
        let mut suggestions: BTreeMap<NodeId, Vec<String>> = BTreeMap::new();
        let budget = call_budget(&config);
        let mut budget_warned = false;

        loop {
            state.iteration += 1;
            let frontier: Vec<NodeId> = state
                .tree
                .frontier(config.max_depth)
                .into_iter()
                .filter(|id| !exhausted.contains(id))
                .collect();

            let mut new_children: Vec<NodeId> = Vec::new();
            for parent_id in &frontier {
                let chain = chain_text(&state.tree, parent_id)?;
                let parent_suggestions = suggestions.get(parent_id).cloned().unwrap_or_default();
                let request = build_generation_prompt(
                    &chain,
                    &memory_ctx,
                    problem,
                    config.branching as usize,
                    &parent_suggestions,
                    &self.templates,
                )?;
                let completion = traced.complete(&request)?;
                let thoughts = parse_candidates(&completion.text, config.branching as usize);
                if thoughts.is_empty() {
                    exhausted.insert(parent_id.clone());
                    trace.note(format!("dead branch: no parseable candidates under {parent_id}"));
                    continue;
                }
                for thought in thoughts {
                    new_children.push(state.tree.add_child(parent_id, thought)?);
                }
            }

            if new_children.is_empty() {
                let best = best_leaf_score(&state.tree)
                    .or_else(|| state.best_score_history.last().copied())
                    .unwrap_or(0.0);
                state.best_score_history.push(best);
                trace.note("dead end: no parseable candidates at any frontier node");
                state.converged_reason = Some(ConvergedReason::MaxDepth);
                trace.record_convergence(ConvergedReason::MaxDepth, state.iteration);
                break;
            }

            let outcomes =
                self.process_children(&state.tree, &new_children, problem, &traced, &critic, &config)?;
            for (id, node, dual) in outcomes {
                trace.record_score(&id, dual.local, dual.cross, dual.combined);
                suggestions.insert(id.clone(), dual.critic_suggestions.clone());
                *state
                    .tree
                    .get_mut(&id)
                    .expect("child id added this iteration") = node;
            }

            let mut depths: Vec<u32> = new_children
                .iter()
                .filter_map(|id| state.tree.get(id).map(|n| n.depth))
                .collect();
            depths.sort_unstable();
            depths.dedup();
            for depth in depths {
                let outcome = prune_level(&mut state.tree, depth, config.prune_k)?;
                trace.record_prune(depth, &outcome.retained, &outcome.pruned);
            }

            let best = best_leaf_score(&state.tree).unwrap_or(0.0);
            state.best_score_history.push(best);
            state.call_count = trace.call_count();

            if !budget_warned {
                let spent = loop_phase_calls(&trace.snapshot());
                if spent > budget {
                    trace.warn(format!(
                        "loop-phase provider calls ({spent}) exceed the soft budget ({budget})"
                    ));
                    budget_warned = true;
                }
            }

            if let Some(reason) = check_convergence_with_exhausted(&state, &exhausted) {
                state.converged_reason = Some(reason);
                trace.record_convergence(reason, state.iteration);
                break;
            }
        }

        let (best_path, best_score, path_text) = match state.tree.trace_best_path() {
            Ok(path) => {
                let ids: Vec<NodeId> = path.iter().map(|n| n.id.clone()).collect();
                let score = path
                    .last()
                    .and_then(|n| n.combined_score)
                    .unwrap_or(0.0);
                let text = path
                    .iter()
                    .skip(1)
                    .enumerate()
                    .map(|(i, n)| format!("{}. {}", i + 1, n.thought))
                    .collect::<Vec<_>>()
                    .join("\n");
                let text = if text.is_empty() {
                    "(no reasoning steps)".to_string()
                } else {
                    text
                };
                (ids, score, text)
            }
            Err(_) => {
                trace.warn("no scored leaf at episode end; synthesizing from the problem alone");
                (
                    vec![state.tree.root_id().clone()],
                    0.0,
                    "(no reasoning steps)".to_string(),
                )
            }
        };

        let answer_prompt = self.templates.render(
            "final_answer",
            &[("problem", problem.statement.as_str()), ("path", path_text.as_str())],
        )?;
        let answer = traced
            .complete(&PromptRequest::new(RoleTag::FinalAnswer, answer_prompt))?
            .text
            .trim()
            .to_string();

        memory.record_episode(
            &state.tree,
            problem,
            &best_path,
            best_score,
            state.iteration as u64,
            &*traced,
            &self.templates,
            trace,
        )?;

        state.call_count = trace.call_count();
        let snapshot = trace.snapshot();
        let result = SolutionResult {
            problem_id: problem.id.clone(),
            method: "retreval".to_string(),
            final_answer: answer,
            best_path,
            best_score: Some(best_score),
            converged_reason: state.converged_reason,
            stats: RunStats {
                nodes_created: state.tree.len() - 1,
                nodes_pruned: state.tree.pruned_count(),
                calls_by_role: snapshot.calls_by_role(),
                wall_time_ms: start.elapsed().as_millis() as u64,
            },
        };
        Ok((result, state))
    }

    /// Refine and score a batch of freshly created children. Work runs on up
    /// to `parallelism` threads; results come back in input order and all
    /// tree mutation stays with the caller.
    fn process_children(
        &self,
        tree: &ReasoningTree,
        ids: &[NodeId],
        problem: &Problem,
        provider: &Arc<dyn ChatProvider>,
        critic: &Arc<dyn ChatProvider>,
        config: &TreeConfig,
    ) -> Result<Vec<(NodeId, crate::model::ReasoningNode, DualScore)>> {
        let jobs: Vec<(NodeId, crate::model::ReasoningNode, String)> = ids
            .iter()
            .map(|id| {
                let node = tree.get(id).expect("child id valid").clone();
                let parent = node.parent_id.clone().expect("children have parents");
                let chain = chain_text(tree, &parent)?;
                Ok((id.clone(), node, chain))
            })
            .collect::<Result<_>>()?;

        let run_one = |(id, mut node, chain): (NodeId, crate::model::ReasoningNode, String)| {
            // Each worker records its provider calls and warnings through the
            // shared trace handle; a private handle only collects the
            // refinement notes we do not need twice.
            let scratch = TraceHandle::new(&id.0, "scratch");
            let ctx = NodeContext {
                problem,
                parent_chain: &chain,
            };
            refine_node(
                &mut node,
                &ctx,
                &**provider,
                &self.templates,
                &scratch,
                config.max_refinements,
                config.quality_threshold,
            )?;
            let dual = score_node(
                &mut node,
                &ctx,
                &**provider,
                &**critic,
                &self.templates,
                &scratch,
                self.weights,
                &self.criteria,
            )?;
            Ok::<_, Error>((id, node, dual, scratch.snapshot()))
        };

        let mut raw: Vec<(NodeId, crate::model::ReasoningNode, DualScore, RunTrace)> =
            Vec::with_capacity(jobs.len());
        if self.parallelism <= 1 || jobs.len() <= 1 {
            for job in jobs {
                raw.push(run_one(job)?);
            }
        } else {
            for chunk in jobs.chunks(self.parallelism).map(|c| c.to_vec()) {
                let results: Vec<Result<_>> = std::thread::scope(|scope| {
                    let handles: Vec<_> = chunk
                        .into_iter()
                        .map(|job| scope.spawn(|| run_one(job)))
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("worker panicked"))
                        .collect()
                });
                for result in results {
                    raw.push(result?);
                }
            }
        }

        Ok(raw
            .into_iter()
            .map(|(id, node, dual, _)| (id, node, dual))
            .collect())
    }
}

/// Best combined score over scored effective leaves, if any.
fn best_leaf_score(tree: &ReasoningTree) -> Option<f64> {
    tree.scored_leaves()
        .iter()
        .filter_map(|n| n.combined_score)
        .fold(None, |acc, s| Some(acc.map_or(s, |a: f64| a.max(s))))
}

/// Root-to-node thoughts rendered as numbered lines.
fn chain_text(tree: &ReasoningTree, node_id: &NodeId) -> Result<String> {
    let mut chain = Vec::new();
    let mut current = tree
        .get(node_id)
        .ok_or_else(|| Error::not_found(format!("node {node_id}")))?;
    chain.push(current.thought.as_str());
    while let Some(parent_id) = &current.parent_id {
        current = tree
            .get(parent_id)
            .ok_or_else(|| Error::invalid_state(format!("dangling parent {parent_id}")))?;
        chain.push(current.thought.as_str());
    }
    chain.reverse();
    Ok(chain
        .iter()
        .enumerate()
        .map(|(i, t)| format!("{}. {}", i, t))
        .collect::<Vec<_>>()
        .join("\n"))
}
