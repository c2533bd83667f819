//! LLM-judge evaluation of benchmark outputs.
//!
//! Math outputs get a single 0-9 quality score from the judge plus, when a
//! reference answer exists, a locally computed exact-match flag (no judge call
//! involved in the comparison). Creative outputs get three 1-10 scores whose
//! mean becomes the overall value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::parse::parse_labeled_int;
use crate::gateway::provider::{ChatProvider, PromptRequest, RoleTag};
use crate::gateway::templates::PromptTemplates;
use crate::model::Domain;
use crate::trace::TraceHandle;

pub const VERDICT_SCHEMA_VERSION: u32 = 1;

/// Which judging rubric to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskType {
    Math,
    Creative,
}

impl std::str::FromStr for TaskType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "math" => Ok(TaskType::Math),
            "creative" => Ok(TaskType::Creative),
            other => Err(Error::invalid_argument(format!("unknown task type {other:?}"))),
        }
    }
}

/// One output awaiting judgment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeItem {
    pub problem_id: String,
    pub method: String,
    pub statement: String,
    pub domain: Domain,
    pub reference_answer: Option<String>,
    pub final_answer: String,
}

/// Judge output for one (problem, method) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub problem_id: String,
    pub method: String,
    pub domain: Domain,
    /// False when the judge response could not be parsed; such verdicts are
    /// excluded from aggregates and counted in the report.
    pub scored: bool,
    /// Local normalized comparison against the reference answer (math only).
    pub exact_match: Option<bool>,
    pub correctness: Option<u8>,
    pub meaningfulness: Option<u8>,
    pub creativeness: Option<u8>,
    /// Math: the judge's 0-9 quality score. Creative: mean of the three
    /// criterion scores.
    pub overall: Option<f64>,
    pub rationale: String,
}

/// Normalized string/number comparison for math answers.
///
/// Both sides are trimmed, lowercased, and stripped of a trailing period;
/// values that parse as numbers compare numerically, so "42.0" matches "42".
pub fn exact_answer_match(output: &str, reference: &str) -> bool {
    let normalize = |s: &str| s.trim().trim_end_matches('.').trim().to_lowercase();
    let a = normalize(output);
    let b = normalize(reference);
    if let (Ok(x), Ok(y)) = (a.parse::<f64>(), b.parse::<f64>()) {
        return (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0);
    }
    let squeeze = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
    squeeze(&a) == squeeze(&b)
}

fn judge_math(
    item: &JudgeItem,
    provider: &dyn ChatProvider,
    templates: &PromptTemplates,
    trace: &TraceHandle,
) -> Result<JudgeVerdict> {
    let exact_match = item
        .reference_answer
        .as_deref()
        .map(|reference| exact_answer_match(&item.final_answer, reference));

    let prompt = templates.render(
        "judge_math",
        &[
            ("problem", item.statement.as_str()),
            ("reference", item.reference_answer.as_deref().unwrap_or("")),
            ("answer", item.final_answer.as_str()),
        ],
    )?;
    let completion = provider.complete(&PromptRequest::new(RoleTag::Judge, prompt))?;
    let score = parse_labeled_int(&completion.text, "score");
    let scored = score.is_some();
    if !scored {
        trace.warn(format!(
            "judge response unparseable for {} / {}; verdict left unscored",
            item.problem_id, item.method
        ));
    }
    Ok(JudgeVerdict {
        problem_id: item.problem_id.clone(),
        method: item.method.clone(),
        domain: Domain::Math,
        scored,
        exact_match,
        correctness: None,
        meaningfulness: None,
        creativeness: None,
        overall: score.map(|s| s.clamp(0, 9) as f64),
        rationale: completion.text.trim().to_string(),
    })
}

fn judge_creative(
    item: &JudgeItem,
    provider: &dyn ChatProvider,
    templates: &PromptTemplates,
    trace: &TraceHandle,
) -> Result<JudgeVerdict> {
    let prompt = templates.render(
        "judge_creative",
        &[
            ("problem", item.statement.as_str()),
            ("answer", item.final_answer.as_str()),
        ],
    )?;
    let completion = provider.complete(&PromptRequest::new(RoleTag::Judge, prompt))?;
    let get = |label: &str| {
        parse_labeled_int(&completion.text, label).map(|v| v.clamp(1, 10) as u8)
    };
    let correctness = get("correctness");
    let meaningfulness = get("meaningfulness");
    let creativeness = get("creativeness");
    let scored = correctness.is_some() && meaningfulness.is_some() && creativeness.is_some();
    if !scored {
        trace.warn(format!(
            "judge response missing criteria for {} / {}; verdict left unscored",
            item.problem_id, item.method
        ));
    }
    let overall = match (correctness, meaningfulness, creativeness) {
        (Some(c), Some(m), Some(k)) => Some((c as f64 + m as f64 + k as f64) / 3.0),
        _ => None,
    };
    Ok(JudgeVerdict {
        problem_id: item.problem_id.clone(),
        method: item.method.clone(),
        domain: Domain::Creative,
        scored,
        exact_match: None,
        correctness,
        meaningfulness,
        creativeness,
        overall,
        rationale: completion.text.trim().to_string(),
    })
}

/// Judge every item under the given rubric. Judge parse failures produce
/// unscored verdicts; other provider errors propagate.
pub fn judge_evaluate(
    items: &[JudgeItem],
    provider: &dyn ChatProvider,
    task_type: TaskType,
    templates: &PromptTemplates,
    trace: &TraceHandle,
) -> Result<Vec<JudgeVerdict>> {
    items
        .iter()
        .map(|item| match task_type {
            TaskType::Math => judge_math(item, provider, templates, trace),
            TaskType::Creative => judge_creative(item, provider, templates, trace),
        })
        .collect()
}

/// On-disk verdict collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictFile {
    pub schema_version: u32,
    pub verdicts: Vec<JudgeVerdict>,
}

impl VerdictFile {
    pub fn new(verdicts: Vec<JudgeVerdict>) -> Self {
        VerdictFile {
            schema_version: VERDICT_SCHEMA_VERSION,
            verdicts,
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let text =
            serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Serialization(e.to_string()))
    }
}
