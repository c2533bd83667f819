//! Per-node iterative self-refinement.
//!
//! Each new node goes through a critique/rewrite loop before scoring: the
//! node is critiqued, and unless the critique's quality score clears the
//! threshold, actionable feedback is extracted and the thought rewritten.
//! Every issued critique is appended to the node's history, including the
//! final one that ends the loop, so the last history entry always reflects
//! the most recent assessment and doubles as the node's self-evaluation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::parse::parse_critique;
use crate::gateway::provider::{ChatProvider, PromptRequest, RoleTag};
use crate::gateway::templates::PromptTemplates;
use crate::model::{Problem, ReasoningNode};
use crate::trace::TraceHandle;

/// Minimum successive-score difference still considered an improvement.
pub const NO_IMPROVEMENT_EPSILON: f64 = 0.01;

/// Critique dimensions reported by the self-critic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CritiqueDimension {
    LogicalCoherence,
    Correctness,
    Completeness,
    Clarity,
}

/// Critic output: numeric quality score, rationale, and suggested fixes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CritiqueReport {
    /// Always within [0, 1].
    pub quality_score: f64,
    pub rationale: String,
    pub suggestions: Vec<String>,
    pub dimension_notes: BTreeMap<CritiqueDimension, String>,
}

/// Problem framing shared by the refinement and scoring calls for one node.
#[derive(Debug, Clone, Copy)]
pub struct NodeContext<'a> {
    pub problem: &'a Problem,
    /// Root-to-parent thought chain, already rendered as text.
    pub parent_chain: &'a str,
}

/// Turn a critique into rewrite instructions.
///
/// Suggestions join in order; an empty suggestion list falls back to the
/// rationale; a fully empty critique yields a generic directive plus a trace
/// warning.
pub fn extract_actionable_feedback(critique: &CritiqueReport, trace: &TraceHandle) -> String {
    if !critique.suggestions.is_empty() {
        return critique.suggestions.join("\n");
    }
    if !critique.rationale.trim().is_empty() {
        return critique.rationale.clone();
    }
    trace.warn("critique carried no suggestions or rationale; using generic feedback");
    "Improve the rigor and clarity of this reasoning step.".to_string()
}

/// Run the self-refinement loop on one node.
///
/// At most `max_refinements` rewrites are performed. The loop stops when a
/// critique clears `quality_threshold`, when the rewrite budget is exhausted,
/// or when no improvement is detected (successive quality scores within
/// [`NO_IMPROVEMENT_EPSILON`] and a rewrite that leaves the text unchanged).
/// With `max_refinements == 0` the node returns untouched and no provider
/// call is made.
pub fn refine_node(
    node: &mut ReasoningNode,
    ctx: &NodeContext<'_>,
    provider: &dyn ChatProvider,
    templates: &PromptTemplates,
    trace: &TraceHandle,
    max_refinements: u32,
    quality_threshold: f64,
) -> Result<()> {
    if node.pruned {
        return Err(Error::invalid_state(format!(
            "cannot refine pruned node {}",
            node.id
        )));
    }
    if max_refinements == 0 {
        return Ok(());
    }

    let mut previous_score: Option<f64> = None;
    loop {
        let critique_prompt = templates.render(
            "self_critique",
            &[
                ("problem", &ctx.problem.statement),
                ("chain", ctx.parent_chain),
                ("thought", &node.thought),
            ],
        )?;
        let completion =
            provider.complete(&PromptRequest::new(RoleTag::SelfCritique, critique_prompt))?;
        let parsed = parse_critique(&completion.text);
        if !parsed.parsed {
            trace.warn(format!(
                "self-critique score unparseable for node {}, defaulting to 0.5",
                node.id
            ));
        }
        let critique = parsed.value;
        let score = critique.quality_score;
        node.critique_history.push(critique);

        if score >= quality_threshold {
            break;
        }
        if node.refinement_count >= max_refinements {
            break;
        }

        let critique_ref = node
            .critique_history
            .last()
            .expect("critique pushed above");
        let feedback = extract_actionable_feedback(critique_ref, trace);
        let refine_prompt = templates.render(
            "refine",
            &[
                ("problem", &ctx.problem.statement),
                ("thought", &node.thought),
                ("feedback", &feedback),
            ],
        )?;
        let rewritten = provider.complete(&PromptRequest::new(RoleTag::Refine, refine_prompt))?;
        let new_thought = rewritten.text.trim().to_string();

        let identical = new_thought == node.thought || new_thought.is_empty();
        if new_thought.is_empty() {
            trace.warn(format!("rewrite for node {} was empty; keeping prior text", node.id));
        } else {
            node.thought = new_thought;
        }
        node.refinement_count += 1;

        let stagnant = previous_score
            .map(|p| (score - p).abs() < NO_IMPROVEMENT_EPSILON)
            .unwrap_or(false);
        if identical && stagnant {
            trace.note(format!(
                "no improvement detected for node {}; stopping refinement early",
                node.id
            ));
            break;
        }
        previous_score = Some(score);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::scripted::{ScriptedProvider, ScriptedRule};
    use crate::model::{Domain, ReasoningTree};

    fn setup() -> (Problem, ReasoningTree) {
        let problem = Problem::new("p1", "Compute 3 * 7", Domain::Math).unwrap();
        let tree = ReasoningTree::new_tree(&problem);
        (problem, tree)
    }

    fn child(tree: &mut ReasoningTree, thought: &str) -> ReasoningNode {
        let root = tree.root_id().clone();
        let id = tree.add_child(&root, thought).unwrap();
        tree.get(&id).unwrap().clone()
    }

    fn run(
        node: &mut ReasoningNode,
        problem: &Problem,
        provider: &dyn ChatProvider,
        trace: &TraceHandle,
        max_refinements: u32,
    ) {
        let ctx = NodeContext {
            problem,
            parent_chain: "",
        };
        refine_node(
            node,
            &ctx,
            provider,
            &PromptTemplates::default(),
            trace,
            max_refinements,
            0.8,
        )
        .unwrap();
    }

    #[test]
    fn threshold_met_on_first_critique() {
        let (problem, mut tree) = setup();
        let mut node = child(&mut tree, "multiply directly");
        let provider = ScriptedProvider::from_rules(vec![ScriptedRule::fallback(
            "SCORE: 0.9\nRATIONALE: clean",
        )]);
        let trace = TraceHandle::new("p1", "test");
        let traced = crate::gateway::TracingProvider::new(
            std::sync::Arc::new(provider),
            trace.clone(),
        );
        run(&mut node, &problem, &traced, &trace, 3);

        assert_eq!(node.refinement_count, 0);
        assert_eq!(node.thought, "multiply directly");
        assert_eq!(node.critique_history.len(), 1);
        assert_eq!(trace.call_count(), 1);
    }

    #[test]
    fn threshold_never_met_runs_exact_call_sequence() {
        let (problem, mut tree) = setup();
        let mut node = child(&mut tree, "guess");
        let provider = ScriptedProvider::from_rules(vec![
            ScriptedRule::new(RoleTag::SelfCritique, "SCORE: 0.3\nRATIONALE: weak\nSUGGESTIONS:\n- be precise"),
            ScriptedRule::new(RoleTag::Refine, "improved guess a").once(),
            ScriptedRule::new(RoleTag::Refine, "improved guess b").once(),
            ScriptedRule::new(RoleTag::Refine, "improved guess c").once(),
            ScriptedRule::fallback("unused"),
        ]);
        let trace = TraceHandle::new("p1", "test");
        let traced = crate::gateway::TracingProvider::new(
            std::sync::Arc::new(provider),
            trace.clone(),
        );
        run(&mut node, &problem, &traced, &trace, 3);

        assert_eq!(node.refinement_count, 3);
        assert_eq!(node.thought, "improved guess c");
        // loop-entry critique runs once more after the final rewrite
        assert_eq!(node.critique_history.len(), 4);
        let roles: Vec<String> = trace
            .snapshot()
            .calls()
            .map(|(role, _, _)| role.to_string())
            .collect();
        assert_eq!(
            roles,
            vec![
                "self_critique",
                "refine",
                "self_critique",
                "refine",
                "self_critique",
                "refine",
                "self_critique"
            ]
        );
    }

    #[test]
    fn zero_refinements_makes_zero_calls() {
        let (problem, mut tree) = setup();
        let mut node = child(&mut tree, "as is");
        let provider = ScriptedProvider::from_rules(vec![ScriptedRule::fallback("anything")]);
        let trace = TraceHandle::new("p1", "test");
        let traced = crate::gateway::TracingProvider::new(
            std::sync::Arc::new(provider),
            trace.clone(),
        );
        run(&mut node, &problem, &traced, &trace, 0);
        assert_eq!(trace.call_count(), 0);
        assert_eq!(node.thought, "as is");
        assert!(node.critique_history.is_empty());
    }

    #[test]
    fn no_improvement_stops_early() {
        let (problem, mut tree) = setup();
        let mut node = child(&mut tree, "start");
        // Scores differ by 0.005 (< epsilon) and the second rewrite repeats
        // the first one's text, so the loop must stop with budget remaining.
        let provider = ScriptedProvider::from_rules(vec![
            ScriptedRule::new(RoleTag::SelfCritique, "SCORE: 0.50\nSUGGESTIONS:\n- again").once(),
            ScriptedRule::new(RoleTag::SelfCritique, "SCORE: 0.505\nSUGGESTIONS:\n- again"),
            ScriptedRule::new(RoleTag::Refine, "same text"),
            ScriptedRule::fallback("unused"),
        ]);
        let trace = TraceHandle::new("p1", "test");
        let traced = crate::gateway::TracingProvider::new(
            std::sync::Arc::new(provider),
            trace.clone(),
        );
        run(&mut node, &problem, &traced, &trace, 5);

        assert_eq!(node.refinement_count, 2);
        assert_eq!(node.thought, "same text");
        assert_eq!(trace.call_count(), 4); // 2 critiques + 2 rewrites
    }

    #[test]
    fn pruned_node_rejected() {
        let (problem, mut tree) = setup();
        let mut node = child(&mut tree, "x");
        node.pruned = true;
        let provider = ScriptedProvider::from_rules(vec![ScriptedRule::fallback("y")]);
        let trace = TraceHandle::new("p1", "test");
        let ctx = NodeContext {
            problem: &problem,
            parent_chain: "",
        };
        let err = refine_node(
            &mut node,
            &ctx,
            &provider,
            &PromptTemplates::default(),
            &trace,
            3,
            0.8,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidState(_)));
    }

    #[test]
    fn feedback_extraction_fallbacks() {
        let trace = TraceHandle::new("p1", "test");
        let full = CritiqueReport {
            quality_score: 0.4,
            rationale: "too terse".into(),
            suggestions: vec!["expand step".into(), "check signs".into()],
            dimension_notes: BTreeMap::new(),
        };
        assert_eq!(
            extract_actionable_feedback(&full, &trace),
            "expand step\ncheck signs"
        );

        let rationale_only = CritiqueReport {
            suggestions: vec![],
            ..full.clone()
        };
        assert_eq!(extract_actionable_feedback(&rationale_only, &trace), "too terse");

        let empty = CritiqueReport {
            quality_score: 0.4,
            rationale: "".into(),
            suggestions: vec![],
            dimension_notes: BTreeMap::new(),
        };
        let generic = extract_actionable_feedback(&empty, &trace);
        assert!(generic.contains("rigor and clarity"));
        assert_eq!(trace.snapshot().warnings().len(), 1);
    }
}
