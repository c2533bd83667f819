//! Prompt construction for each pipeline role.

use crate::error::Result;
use crate::gateway::parse::parse_complexity;
use crate::gateway::provider::{ChatProvider, PromptRequest, RoleTag};
use crate::gateway::templates::{numbered_list, PromptTemplates};
use crate::memory::MemoryContext;
use crate::model::{ComplexityEstimate, Problem};
use crate::trace::TraceHandle;

/// Ask the provider for a 1-5 complexity estimate.
///
/// Out-of-range levels clamp; unparseable output falls back to level 3 with a
/// trace warning.
pub fn estimate_complexity(
    provider: &dyn ChatProvider,
    problem: &Problem,
    templates: &PromptTemplates,
    trace: &TraceHandle,
) -> Result<ComplexityEstimate> {
    let prompt = templates.render("complexity", &[("problem", &problem.statement)])?;
    let completion = provider.complete(&PromptRequest::new(RoleTag::Complexity, prompt))?;
    let parsed = parse_complexity(&completion.text);
    if !parsed.parsed {
        trace.warn(format!(
            "complexity estimate unparseable, falling back to level 3: {:?}",
            completion.text.chars().take(80).collect::<String>()
        ));
    }
    Ok(ComplexityEstimate {
        level: parsed.value,
        rationale: completion.text.trim().to_string(),
    })
}

/// Build the child-generation prompt.
///
/// Sections appear in a fixed order: problem statement, root-to-parent
/// thought chain, numbered insights, numbered failure constraints, strategy
/// references, critic suggestions for this branch, and the instruction to
/// emit exactly `n_children` candidates. Empty sections render as "(none)".
pub fn build_generation_prompt(
    parent_chain: &str,
    memory_ctx: &MemoryContext,
    problem: &Problem,
    n_children: usize,
    critic_suggestions: &[String],
    templates: &PromptTemplates,
) -> Result<PromptRequest> {
    let chain = if parent_chain.trim().is_empty() {
        "(at the start)".to_string()
    } else {
        parent_chain.to_string()
    };
    let prompt = templates.render(
        "generate",
        &[
            ("problem", &problem.statement),
            ("chain", &chain),
            ("insights", &numbered_list(&memory_ctx.insight_list)),
            ("failures", &numbered_list(&memory_ctx.failure_constraints)),
            ("strategies", &numbered_list(&memory_ctx.strategy_references)),
            ("suggestions", &numbered_list(critic_suggestions)),
            ("n_children", &n_children.to_string()),
        ],
    )?;
    Ok(PromptRequest::new(RoleTag::Generate, prompt))
}
