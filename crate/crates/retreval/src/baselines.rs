//! Reference baseline methods run under the same provider configuration:
//! ReAct thought-action-observation cycles, Reflexion retry-with-reflection,
//! and Self-Refine feedback loops.
//!
//! Actions in ReAct are declarative text (no tool execution) and none of the
//! baselines read or write the cross-problem reflexion memory; Reflexion's
//! reflections live only for the duration of one problem.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::controller::{RunStats, SolutionResult};
use crate::error::Result;
use crate::gateway::parse::parse_yes_no;
use crate::gateway::provider::{ChatProvider, PromptRequest, RoleTag, TracingProvider};
use crate::gateway::templates::PromptTemplates;
use crate::model::Problem;
use crate::trace::TraceHandle;

/// Which baseline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    React,
    Reflexion,
    SelfRefine,
}

impl std::fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BaselineMethod::React => "react",
            BaselineMethod::Reflexion => "reflexion",
            BaselineMethod::SelfRefine => "self_refine",
        };
        write!(f, "{s}")
    }
}

/// Baseline settings; all three methods cap at `max_cycles` (default 3).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub max_cycles: u32,
}

impl BaselineConfig {
    pub fn new(method: BaselineMethod) -> Self {
        BaselineConfig {
            method,
            max_cycles: 3,
        }
    }
}

/// Dispatch to the configured baseline.
pub fn baseline_solve(
    problem: &Problem,
    provider: Arc<dyn ChatProvider>,
    config: &BaselineConfig,
    templates: &PromptTemplates,
    trace: &TraceHandle,
) -> Result<SolutionResult> {
    if config.max_cycles < 1 {
        return Err(crate::error::Error::invalid_argument(
            "max_cycles must be >= 1",
        ));
    }
    match config.method {
        BaselineMethod::React => react_solve(problem, provider, config, templates, trace),
        BaselineMethod::Reflexion => reflexion_solve(problem, provider, config, templates, trace),
        BaselineMethod::SelfRefine => self_refine_solve(problem, provider, config, templates, trace),
    }
}

fn finish(
    problem: &Problem,
    method: BaselineMethod,
    answer: String,
    trace: &TraceHandle,
    start: Instant,
) -> SolutionResult {
    SolutionResult {
        problem_id: problem.id.clone(),
        method: method.to_string(),
        final_answer: answer,
        best_path: Vec::new(),
        best_score: None,
        converged_reason: None,
        stats: RunStats {
            nodes_created: 0,
            nodes_pruned: 0,
            calls_by_role: trace.snapshot().calls_by_role(),
            wall_time_ms: start.elapsed().as_millis() as u64,
        },
    }
}

/// Linear thought -> action -> observation cycles, at most `max_cycles`, then
/// one final-answer call. Stops early when the observation declares SOLVED.
/// No state survives across problems.
pub fn react_solve(
    problem: &Problem,
    provider: Arc<dyn ChatProvider>,
    config: &BaselineConfig,
    templates: &PromptTemplates,
    trace: &TraceHandle,
) -> Result<SolutionResult> {
    let start = Instant::now();
    let traced = TracingProvider::new(provider, trace.clone());
    let mut history = String::new();

    for cycle in 1..=config.max_cycles {
        let rendered_history = if history.is_empty() { "(none yet)" } else { &history };
        let thought = traced
            .complete(&PromptRequest::new(
                RoleTag::Generate,
                templates.render(
                    "react_thought",
                    &[("problem", problem.statement.as_str()), ("history", rendered_history)],
                )?,
            ))?
            .text;
        let with_thought = format!("{history}Cycle {cycle}:\nThought: {}\n", thought.trim());
        let action = traced
            .complete(&PromptRequest::new(
                RoleTag::Generate,
                templates.render(
                    "react_action",
                    &[("problem", problem.statement.as_str()), ("history", with_thought.as_str())],
                )?,
            ))?
            .text;
        let with_action = format!("{with_thought}Action: {}\n", action.trim());
        let observation = traced
            .complete(&PromptRequest::new(
                RoleTag::Generate,
                templates.render(
                    "react_observation",
                    &[("problem", problem.statement.as_str()), ("history", with_action.as_str())],
                )?,
            ))?
            .text;
        history = format!("{with_action}Observation: {}\n\n", observation.trim());

        if observation.to_uppercase().contains("SOLVED") {
            trace.note(format!("react declared the problem solved in cycle {cycle}"));
            break;
        }
    }

    let answer = traced
        .complete(&PromptRequest::new(
            RoleTag::FinalAnswer,
            templates.render(
                "react_answer",
                &[("problem", problem.statement.as_str()), ("history", history.as_str())],
            )?,
        ))?
        .text
        .trim()
        .to_string();

    Ok(finish(problem, BaselineMethod::React, answer, trace, start))
}

/// Attempt -> self-evaluate -> reflect loop, at most `max_cycles` attempts.
/// Reflections accumulate in attempt-local memory only and are injected into
/// each subsequent attempt's prompt; the memory is dropped with the problem.
pub fn reflexion_solve(
    problem: &Problem,
    provider: Arc<dyn ChatProvider>,
    config: &BaselineConfig,
    templates: &PromptTemplates,
    trace: &TraceHandle,
) -> Result<SolutionResult> {
    let start = Instant::now();
    let traced = TracingProvider::new(provider, trace.clone());
    let mut reflections: Vec<String> = Vec::new();
    let mut answer = String::new();

    for attempt in 1..=config.max_cycles {
        let reflections_text = if reflections.is_empty() {
            "(none)".to_string()
        } else {
            reflections
                .iter()
                .enumerate()
                .map(|(i, r)| format!("{}. {r}", i + 1))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let attempt_text = traced
            .complete(&PromptRequest::new(
                RoleTag::Generate,
                templates.render(
                    "reflexion_attempt",
                    &[
                        ("problem", problem.statement.as_str()),
                        ("reflections", reflections_text.as_str()),
                    ],
                )?,
            ))?
            .text
            .trim()
            .to_string();
        answer = attempt_text.clone();

        let verdict_text = traced
            .complete(&PromptRequest::new(
                RoleTag::SelfCritique,
                templates.render(
                    "reflexion_eval",
                    &[("problem", problem.statement.as_str()), ("attempt", attempt_text.as_str())],
                )?,
            ))?
            .text;
        let judged_correct = match parse_yes_no(&verdict_text) {
            Some(v) => v,
            None => {
                trace.warn("reflexion self-evaluation unparseable; treating attempt as failed");
                false
            }
        };
        if judged_correct {
            trace.note(format!("reflexion attempt {attempt} self-judged correct"));
            break;
        }
        if attempt < config.max_cycles {
            let reflection = traced
                .complete(&PromptRequest::new(
                    RoleTag::InsightExtract,
                    templates.render(
                        "reflexion_reflect",
                        &[("problem", problem.statement.as_str()), ("attempt", attempt_text.as_str())],
                    )?,
                ))?
                .text
                .trim()
                .to_string();
            reflections.push(reflection);
        }
    }

    Ok(finish(problem, BaselineMethod::Reflexion, answer, trace, start))
}

/// Initial solution plus at most `max_cycles` feedback -> rewrite passes on a
/// single path. Stops early when the feedback declares the solution
/// SATISFACTORY.
pub fn self_refine_solve(
    problem: &Problem,
    provider: Arc<dyn ChatProvider>,
    config: &BaselineConfig,
    templates: &PromptTemplates,
    trace: &TraceHandle,
) -> Result<SolutionResult> {
    let start = Instant::now();
    let traced = TracingProvider::new(provider, trace.clone());

    let mut solution = traced
        .complete(&PromptRequest::new(
            RoleTag::Generate,
            templates.render(
                "self_refine_initial",
                &[("problem", problem.statement.as_str())],
            )?,
        ))?
        .text
        .trim()
        .to_string();

    for cycle in 1..=config.max_cycles {
        let feedback = traced
            .complete(&PromptRequest::new(
                RoleTag::SelfCritique,
                templates.render(
                    "self_refine_feedback",
                    &[("problem", problem.statement.as_str()), ("solution", solution.as_str())],
                )?,
            ))?
            .text;
        if feedback.to_uppercase().contains("SATISFACTORY") {
            trace.note(format!("self-refine feedback satisfied in cycle {cycle}"));
            break;
        }
        solution = traced
            .complete(&PromptRequest::new(
                RoleTag::Refine,
                templates.render(
                    "self_refine_rewrite",
                    &[
                        ("problem", problem.statement.as_str()),
                        ("solution", solution.as_str()),
                        ("feedback", feedback.as_str()),
                    ],
                )?,
            ))?
            .text
            .trim()
            .to_string();
    }

    Ok(finish(problem, BaselineMethod::SelfRefine, solution, trace, start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::scripted::{ScriptedProvider, ScriptedRule};
    use crate::model::Domain;

    fn problem(id: &str, text: &str) -> Problem {
        Problem::new(id, text, Domain::Math).unwrap()
    }

    #[test]
    fn react_single_cycle_uses_four_calls() {
        let provider = ScriptedProvider::from_rules(vec![
            ScriptedRule::new(RoleTag::Generate, "observation: SOLVED, the answer is 4")
                .with_pattern("Observation:"),
            ScriptedRule::new(RoleTag::Generate, "a step"),
            ScriptedRule::new(RoleTag::FinalAnswer, "4"),
            ScriptedRule::fallback("unused"),
        ]);
        let trace = TraceHandle::new("p1", "react");
        let config = BaselineConfig::new(BaselineMethod::React);
        let result = react_solve(
            &problem("p1", "2+2?"),
            Arc::new(provider),
            &config,
            &PromptTemplates::default(),
            &trace,
        )
        .unwrap();
        assert_eq!(trace.call_count(), 4);
        assert_eq!(result.final_answer, "4");
        assert_eq!(result.method, "react");
    }

    #[test]
    fn react_caps_at_three_cycles() {
        let provider = ScriptedProvider::from_rules(vec![
            ScriptedRule::new(RoleTag::Generate, "still working"),
            ScriptedRule::new(RoleTag::FinalAnswer, "best effort"),
            ScriptedRule::fallback("unused"),
        ]);
        let trace = TraceHandle::new("p1", "react");
        let config = BaselineConfig::new(BaselineMethod::React);
        react_solve(
            &problem("p1", "2+2?"),
            Arc::new(provider),
            &config,
            &PromptTemplates::default(),
            &trace,
        )
        .unwrap();
        // 3 cycles * 3 calls + 1 answer
        assert_eq!(trace.call_count(), 10);
    }

    #[test]
    fn react_is_stateless_across_problems() {
        let run = |problem_text: &str| {
            let provider = ScriptedProvider::from_rules(vec![
                ScriptedRule::new(RoleTag::Generate, "SOLVED").with_pattern("Observation:"),
                ScriptedRule::new(RoleTag::Generate, "step"),
                ScriptedRule::fallback("done"),
            ]);
            let trace = TraceHandle::new("p", "react");
            react_solve(
                &problem("p", problem_text),
                Arc::new(provider),
                &BaselineConfig::new(BaselineMethod::React),
                &PromptTemplates::default(),
                &trace,
            )
            .unwrap();
            trace.snapshot()
        };
        let _first = run("UNIQUE_FIRST_MARKER problem");
        let second = run("a different problem");
        for (_, prompt, _) in second.calls() {
            assert!(!prompt.contains("UNIQUE_FIRST_MARKER"));
        }
    }

    #[test]
    fn reflexion_first_attempt_correct_skips_reflection() {
        let provider = ScriptedProvider::from_rules(vec![
            ScriptedRule::new(RoleTag::Generate, "the answer is 4"),
            ScriptedRule::new(RoleTag::SelfCritique, "verdict: yes"),
            ScriptedRule::fallback("unused"),
        ]);
        let trace = TraceHandle::new("p1", "reflexion");
        let result = reflexion_solve(
            &problem("p1", "2+2?"),
            Arc::new(provider),
            &BaselineConfig::new(BaselineMethod::Reflexion),
            &PromptTemplates::default(),
            &trace,
        )
        .unwrap();
        assert_eq!(trace.call_count(), 2);
        assert_eq!(result.final_answer, "the answer is 4");
    }

    #[test]
    fn reflexion_failed_attempts_inject_reflections() {
        let provider = ScriptedProvider::from_rules(vec![
            ScriptedRule::new(RoleTag::Generate, "attempt text"),
            ScriptedRule::new(RoleTag::SelfCritique, "verdict: no"),
            ScriptedRule::new(RoleTag::InsightExtract, "REFLECTION_MARKER avoid guessing"),
            ScriptedRule::fallback("unused"),
        ]);
        let trace = TraceHandle::new("p1", "reflexion");
        reflexion_solve(
            &problem("p1", "2+2?"),
            Arc::new(provider),
            &BaselineConfig::new(BaselineMethod::Reflexion),
            &PromptTemplates::default(),
            &trace,
        )
        .unwrap();
        // 3 attempts + 3 evals + 2 reflections
        assert_eq!(trace.call_count(), 8);
        let snapshot = trace.snapshot();
        let attempt_prompts: Vec<&str> = snapshot
            .calls()
            .filter(|(role, _, _)| **role == RoleTag::Generate)
            .map(|(_, prompt, _)| prompt)
            .collect();
        assert_eq!(attempt_prompts.len(), 3);
        assert!(!attempt_prompts[0].contains("REFLECTION_MARKER"));
        assert!(attempt_prompts[1].contains("REFLECTION_MARKER"));
        assert!(attempt_prompts[2].contains("REFLECTION_MARKER"));
    }

    #[test]
    fn reflexion_memory_does_not_leak_across_problems() {
        let build = || {
            ScriptedProvider::from_rules(vec![
                ScriptedRule::new(RoleTag::Generate, "attempt"),
                ScriptedRule::new(RoleTag::SelfCritique, "verdict: no"),
                ScriptedRule::new(RoleTag::InsightExtract, "LEAKY_REFLECTION"),
                ScriptedRule::fallback("unused"),
            ])
        };
        let trace1 = TraceHandle::new("p1", "reflexion");
        reflexion_solve(
            &problem("p1", "first"),
            Arc::new(build()),
            &BaselineConfig::new(BaselineMethod::Reflexion),
            &PromptTemplates::default(),
            &trace1,
        )
        .unwrap();
        let trace2 = TraceHandle::new("p2", "reflexion");
        reflexion_solve(
            &problem("p2", "second"),
            Arc::new(build()),
            &BaselineConfig::new(BaselineMethod::Reflexion),
            &PromptTemplates::default(),
            &trace2,
        )
        .unwrap();
        let snapshot = trace2.snapshot();
        let first_attempt_prompt = snapshot
            .calls()
            .find(|(role, _, _)| **role == RoleTag::Generate)
            .map(|(_, p, _)| p.to_string())
            .unwrap();
        assert!(first_attempt_prompt.contains("(none)"));
    }

    #[test]
    fn self_refine_satisfied_immediately() {
        let provider = ScriptedProvider::from_rules(vec![
            ScriptedRule::new(RoleTag::Generate, "solution v1"),
            ScriptedRule::new(RoleTag::SelfCritique, "SATISFACTORY"),
            ScriptedRule::fallback("unused"),
        ]);
        let trace = TraceHandle::new("p1", "self_refine");
        let result = self_refine_solve(
            &problem("p1", "2+2?"),
            Arc::new(provider),
            &BaselineConfig::new(BaselineMethod::SelfRefine),
            &PromptTemplates::default(),
            &trace,
        )
        .unwrap();
        assert_eq!(trace.call_count(), 2);
        assert_eq!(result.final_answer, "solution v1");
    }

    #[test]
    fn self_refine_caps_at_three_cycles_single_path() {
        let provider = ScriptedProvider::from_rules(vec![
            ScriptedRule::new(RoleTag::Generate, "solution v1"),
            ScriptedRule::new(RoleTag::SelfCritique, "needs work"),
            ScriptedRule::new(RoleTag::Refine, "solution improved"),
            ScriptedRule::fallback("unused"),
        ]);
        let trace = TraceHandle::new("p1", "self_refine");
        let result = self_refine_solve(
            &problem("p1", "2+2?"),
            Arc::new(provider),
            &BaselineConfig::new(BaselineMethod::SelfRefine),
            &PromptTemplates::default(),
            &trace,
        )
        .unwrap();
        // 1 initial + 3 * (feedback + rewrite)
        assert_eq!(trace.call_count(), 7);
        assert_eq!(result.final_answer, "solution improved");
        // single path: no tree nodes, no pruning in the trace
        assert_eq!(result.best_path.len(), 0);
        assert!(trace
            .snapshot()
            .entries
            .iter()
            .all(|e| !matches!(e, crate::trace::TraceEntry::LevelPruned { .. })));
    }
}
