//! Dual scoring of refined nodes and the weighted combination.
//!
//! Each node gets a local score (the reasoning agent's own assessment, taken
//! from its final self-critique) and a cross score (a separate external-critic
//! call). The combined score weights them 0.6/0.4 by default and drives both
//! pruning and best-path selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::parse::parse_critique;
use crate::gateway::provider::{ChatProvider, PromptRequest, RoleTag};
use crate::gateway::templates::{numbered_list, PromptTemplates};
use crate::model::ReasoningNode;
use crate::refine::NodeContext;
use crate::trace::TraceHandle;

/// The five dimensions the external critic is asked to aggregate.
pub const SCORING_CRITERIA: [&str; 5] = [
    "Logical validity: soundness of the reasoning steps",
    "Progress toward solution: how much closer this step gets to an answer",
    "Coherence: internal consistency",
    "Correctness: factual and computational accuracy",
    "Innovation: novel insights or approaches",
];

/// Weights for the local/cross combination. Must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub local: f64,
    pub cross: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        ScoreWeights {
            local: 0.6,
            cross: 0.4,
        }
    }
}

impl ScoreWeights {
    pub fn new(local: f64, cross: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&local) || !(0.0..=1.0).contains(&cross) {
            return Err(Error::invalid_argument("weights must lie in [0,1]"));
        }
        if (local + cross - 1.0).abs() > 1e-9 {
            return Err(Error::invalid_argument("weights must sum to 1"));
        }
        Ok(ScoreWeights { local, cross })
    }

    pub fn combine(&self, local: f64, cross: f64) -> Result<f64> {
        for (name, v) in [("local", local), ("cross", cross)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid_argument(format!(
                    "{name} score {v} outside [0,1]"
                )));
            }
        }
        Ok(self.local * local + self.cross * cross)
    }
}

/// Combine a local and a cross score with the default 0.6/0.4 weights.
pub fn combined_score(local: f64, cross: f64) -> Result<f64> {
    ScoreWeights::default().combine(local, cross)
}

/// Both scores for one node plus the critic's commentary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualScore {
    pub local: f64,
    pub cross: f64,
    /// Equals `weights.local * local + weights.cross * cross` within 1e-9.
    pub combined: f64,
    pub critic_rationale: String,
    /// Forwarded into the next level's generation prompt.
    pub critic_suggestions: Vec<String>,
}

/// Score a refined node.
///
/// The local score reuses the final self-critique from the refinement loop;
/// when no critique exists (refinement disabled) a dedicated self-evaluation
/// call on `agent` supplies it. The cross score always comes from a separate
/// prompt to `critic` (the same backend unless a distinct critic is
/// configured) enumerating the scoring criteria. The node's three score
/// fields are updated in place.
#[allow(clippy::too_many_arguments)]
pub fn score_node(
    node: &mut ReasoningNode,
    ctx: &NodeContext<'_>,
    agent: &dyn ChatProvider,
    critic: &dyn ChatProvider,
    templates: &PromptTemplates,
    trace: &TraceHandle,
    weights: ScoreWeights,
    criteria: &[String],
) -> Result<DualScore> {
    let local = match node.critique_history.last() {
        Some(critique) => critique.quality_score,
        None => {
            let prompt = templates.render(
                "self_critique",
                &[
                    ("problem", &ctx.problem.statement),
                    ("chain", ctx.parent_chain),
                    ("thought", &node.thought),
                ],
            )?;
            let completion = agent.complete(&PromptRequest::new(RoleTag::SelfCritique, prompt))?;
            let parsed = parse_critique(&completion.text);
            if !parsed.parsed {
                trace.warn(format!(
                    "self-evaluation score unparseable for node {}, defaulting to 0.5",
                    node.id
                ));
            }
            parsed.value.quality_score
        }
    };

    let prompt = templates.render(
        "cross_score",
        &[
            ("problem", &ctx.problem.statement),
            ("chain", ctx.parent_chain),
            ("thought", &node.thought),
            ("criteria", &numbered_list(criteria)),
        ],
    )?;
    let completion = critic.complete(&PromptRequest::new(RoleTag::CrossScore, prompt))?;
    let critic = parse_critique(&completion.text);
    if !critic.parsed {
        trace.warn(format!(
            "cross score unparseable for node {}, defaulting to 0.5",
            node.id
        ));
    }
    let cross = critic.value.quality_score;

    let combined = weights.combine(local, cross)?;
    node.local_score = Some(local);
    node.cross_score = Some(cross);
    node.combined_score = Some(combined);

    Ok(DualScore {
        local,
        cross,
        combined,
        critic_rationale: critic.value.rationale,
        critic_suggestions: critic.value.suggestions,
    })
}

/// Default criteria as owned strings, for configs that want to edit them.
pub fn default_criteria() -> Vec<String> {
    SCORING_CRITERIA.iter().map(|s| s.to_string()).collect()
}
