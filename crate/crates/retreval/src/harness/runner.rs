//! Resumable batch execution of (problem, method) pairs.
//!
//! Each pair writes a RunTrace and a result file under
//! `<out_dir>/<method>/`. Pairs whose result file already exists are skipped
//! on rerun, so an interrupted benchmark continues where it stopped with zero
//! repeated provider calls. ReTreVal runs problems strictly in dataset order
//! against a single memory file so cross-problem learning accrues; the
//! memoryless baselines have no such constraint.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_solve, BaselineConfig, BaselineMethod};
use crate::controller::{SolutionResult, Solver};
use crate::error::{Error, Result};
use crate::gateway::provider::ChatProvider;
use crate::gateway::templates::PromptTemplates;
use crate::memory::ReflexionMemory;
use crate::model::{ConfigOverrides, Problem};
use crate::trace::TraceHandle;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const RESULT_FILE_SCHEMA_VERSION: u32 = 1;

/// A runnable method name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Retreval,
    React,
    Reflexion,
    SelfRefine,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Retreval,
        Method::React,
        Method::Reflexion,
        Method::SelfRefine,
    ];

    pub fn baseline(self) -> Option<BaselineMethod> {
        match self {
            Method::Retreval => None,
            Method::React => Some(BaselineMethod::React),
            Method::Reflexion => Some(BaselineMethod::Reflexion),
            Method::SelfRefine => Some(BaselineMethod::SelfRefine),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Retreval => "retreval",
            Method::React => "react",
            Method::Reflexion => "reflexion",
            Method::SelfRefine => "self_refine",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "retreval" => Ok(Method::Retreval),
            "react" => Ok(Method::React),
            "reflexion" => Ok(Method::Reflexion),
            "self_refine" | "self-refine" => Ok(Method::SelfRefine),
            other => Err(Error::invalid_argument(format!("unknown method {other:?}"))),
        }
    }
}

/// Per-pair outcome recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PairStatus {
    /// Solved in this run.
    Completed,
    /// Result file already existed; no provider calls made.
    Skipped,
    /// Provider failure; the partial trace is still on disk.
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub problem_id: String,
    pub method: Method,
    #[serde(flatten)]
    pub status: PairStatus,
    pub trace_file: PathBuf,
    pub result_file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub entries: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Result file contents: the problem is embedded so judging needs no separate
/// dataset lookup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub schema_version: u32,
    pub problem: Problem,
    pub result: SolutionResult,
}

impl ResultFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let text =
            serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Benchmark settings.
#[derive(Debug, Clone)]
pub struct BenchmarkOptions {
    pub methods: Vec<Method>,
    pub out_dir: PathBuf,
    pub memory_path: PathBuf,
    pub overrides: ConfigOverrides,
    /// Worker threads per episode for ReTreVal; 1 forces sequential runs.
    pub parallelism: usize,
    /// Cycle cap shared by all baselines.
    pub baseline_max_cycles: u32,
}

impl BenchmarkOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        let out_dir = out_dir.into();
        BenchmarkOptions {
            methods: vec![Method::Retreval],
            memory_path: out_dir.join("memory.toml"),
            out_dir,
            overrides: ConfigOverrides::default(),
            parallelism: 1,
            baseline_max_cycles: 3,
        }
    }
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn pair_paths(out_dir: &Path, method: Method, problem_id: &str) -> (PathBuf, PathBuf) {
    let stem = sanitize(problem_id);
    let dir = out_dir.join(method.to_string());
    (
        dir.join(format!("{stem}.trace.json")),
        dir.join(format!("{stem}.result.json")),
    )
}

/// Execute every (problem, method) pair, resuming past completed pairs.
pub fn run_benchmark(
    problems: &[Problem],
    provider: Arc<dyn ChatProvider>,
    templates: &PromptTemplates,
    options: &BenchmarkOptions,
) -> Result<RunManifest> {
    std::fs::create_dir_all(&options.out_dir)?;
    let manifest_path = options.out_dir.join("manifest.json");
    let mut manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        entries: Vec::new(),
    };

    for &method in &options.methods {
        // ReTreVal accrues memory across problems; reload it per method run.
        let mut memory = if method == Method::Retreval {
            Some(ReflexionMemory::load_or_default(&options.memory_path)?)
        } else {
            None
        };

        for problem in problems {
            let (trace_file, result_file) = pair_paths(&options.out_dir, method, &problem.id);
            if result_file.exists() {
                manifest.entries.push(ManifestEntry {
                    problem_id: problem.id.clone(),
                    method,
                    status: PairStatus::Skipped,
                    trace_file,
                    result_file,
                });
                manifest.save(&manifest_path)?;
                continue;
            }

            let trace = TraceHandle::new(&problem.id, method.to_string());
            let outcome = match method.baseline() {
                None => {
                    let solver = Solver::new(provider.clone())
                        .with_templates(templates.clone())
                        .with_parallelism(options.parallelism);
                    let memory = memory.as_mut().expect("retreval runs carry memory");
                    let result = solver.solve(problem, memory, &options.overrides, &trace);
                    if result.is_ok() {
                        memory.save(&options.memory_path)?;
                    }
                    result
                }
                Some(baseline) => {
                    let config = BaselineConfig {
                        method: baseline,
                        max_cycles: options.baseline_max_cycles,
                    };
                    baseline_solve(problem, provider.clone(), &config, templates, &trace)
                }
            };

            trace.write_to(&trace_file)?;
            let status = match outcome {
                Ok(result) => {
                    ResultFile {
                        schema_version: RESULT_FILE_SCHEMA_VERSION,
                        problem: problem.clone(),
                        result,
                    }
                    .save(&result_file)?;
                    PairStatus::Completed
                }
                Err(err) => PairStatus::Failed {
                    error: err.to_string(),
                },
            };
            manifest.entries.push(ManifestEntry {
                problem_id: problem.id.clone(),
                method,
                status,
                trace_file,
                result_file,
            });
            manifest.save(&manifest_path)?;
        }
    }

    Ok(manifest)
}

/// Collect judge inputs from a finished run directory.
pub fn load_judge_items(out_dir: &Path) -> Result<Vec<crate::harness::judge::JudgeItem>> {
    let manifest = RunManifest::load(&out_dir.join("manifest.json"))?;
    let mut items = Vec::new();
    for entry in &manifest.entries {
        if matches!(entry.status, PairStatus::Failed { .. }) {
            continue;
        }
        if !entry.result_file.exists() {
            continue;
        }
        let file = ResultFile::load(&entry.result_file)?;
        items.push(crate::harness::judge::JudgeItem {
            problem_id: file.problem.id.clone(),
            method: file.result.method.clone(),
            statement: file.problem.statement.clone(),
            domain: file.problem.domain,
            reference_answer: file.problem.reference_answer.clone(),
            final_answer: file.result.final_answer.clone(),
        });
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::provider::{Completion, PromptRequest};
    use crate::gateway::scripted::{ScriptedProvider, ScriptedRule};
    use crate::gateway::RoleTag;
    use crate::model::Domain;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting {
        inner: ScriptedProvider,
        calls: AtomicUsize,
    }

    impl ChatProvider for Counting {
        fn complete(&self, request: &PromptRequest) -> Result<Completion> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.inner.complete(request)
        }
    }

    fn full_script() -> ScriptedProvider {
        ScriptedProvider::from_rules(vec![
            ScriptedRule::new(RoleTag::Complexity, "complexity: 1"),
            ScriptedRule::new(RoleTag::Generate, "THOUGHT 1: a\nTHOUGHT 2: b"),
            ScriptedRule::new(RoleTag::SelfCritique, "SCORE: 0.9"),
            ScriptedRule::new(RoleTag::CrossScore, "score: 0.96"),
            ScriptedRule::new(RoleTag::FinalAnswer, "42"),
            ScriptedRule::new(RoleTag::InsightExtract, "- keep it simple"),
            ScriptedRule::fallback("step"),
        ])
    }

    fn problems() -> Vec<Problem> {
        vec![
            Problem::new("q1", "first question", Domain::Math).unwrap(),
            Problem::new("q2", "second question", Domain::Math).unwrap(),
        ]
    }

    #[test]
    fn two_by_two_run_writes_traces_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let options = BenchmarkOptions {
            methods: vec![Method::Retreval, Method::React],
            ..BenchmarkOptions::new(dir.path())
        };
        let manifest = run_benchmark(
            &problems(),
            Arc::new(full_script()),
            &PromptTemplates::default(),
            &options,
        )
        .unwrap();
        assert_eq!(manifest.entries.len(), 4);
        assert!(manifest
            .entries
            .iter()
            .all(|e| matches!(e.status, PairStatus::Completed)));
        for entry in &manifest.entries {
            assert!(entry.trace_file.exists());
            assert!(entry.result_file.exists());
        }
        assert!(dir.path().join("manifest.json").exists());
        assert!(dir.path().join("memory.toml").exists());

        let items = load_judge_items(dir.path()).unwrap();
        assert_eq!(items.len(), 4);
    }

    #[test]
    fn rerun_skips_completed_pairs_with_zero_calls() {
        let dir = tempfile::tempdir().unwrap();
        let options = BenchmarkOptions {
            methods: vec![Method::Retreval],
            ..BenchmarkOptions::new(dir.path())
        };
        run_benchmark(
            &problems(),
            Arc::new(full_script()),
            &PromptTemplates::default(),
            &options,
        )
        .unwrap();

        let counting = Arc::new(Counting {
            inner: full_script(),
            calls: AtomicUsize::new(0),
        });
        let manifest = run_benchmark(
            &problems(),
            counting.clone(),
            &PromptTemplates::default(),
            &options,
        )
        .unwrap();
        assert_eq!(counting.calls.load(Ordering::SeqCst), 0);
        assert!(manifest
            .entries
            .iter()
            .all(|e| matches!(e.status, PairStatus::Skipped)));
    }

    #[test]
    fn partial_run_resumes_only_missing_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let options = BenchmarkOptions {
            methods: vec![Method::SelfRefine],
            ..BenchmarkOptions::new(dir.path())
        };
        // complete only q1 by running a one-problem slice
        run_benchmark(
            &problems()[..1],
            Arc::new(full_script()),
            &PromptTemplates::default(),
            &options,
        )
        .unwrap();

        let counting = Arc::new(Counting {
            inner: full_script(),
            calls: AtomicUsize::new(0),
        });
        let manifest =
            run_benchmark(&problems(), counting.clone(), &PromptTemplates::default(), &options)
                .unwrap();
        let statuses: Vec<&PairStatus> = manifest.entries.iter().map(|e| &e.status).collect();
        assert!(matches!(statuses[0], PairStatus::Skipped));
        assert!(matches!(statuses[1], PairStatus::Completed));
        assert!(counting.calls.load(Ordering::SeqCst) > 0);
    }

    #[test]
    fn provider_failure_marks_pair_failed_and_continues() {
        struct FailOn2 {
            inner: ScriptedProvider,
        }
        impl ChatProvider for FailOn2 {
            fn complete(&self, request: &PromptRequest) -> Result<Completion> {
                if request.prompt.contains("second question") {
                    return Err(Error::ProviderUnavailable("boom".into()));
                }
                self.inner.complete(request)
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let options = BenchmarkOptions {
            methods: vec![Method::React],
            ..BenchmarkOptions::new(dir.path())
        };
        let manifest = run_benchmark(
            &problems(),
            Arc::new(FailOn2 { inner: full_script() }),
            &PromptTemplates::default(),
            &options,
        )
        .unwrap();
        assert!(matches!(manifest.entries[0].status, PairStatus::Completed));
        assert!(matches!(manifest.entries[1].status, PairStatus::Failed { .. }));
        // the failed pair still left a trace file behind
        assert!(manifest.entries[1].trace_file.exists());
        assert!(!manifest.entries[1].result_file.exists());
    }

    #[test]
    fn retreval_memory_flows_into_later_problems() {
        let dir = tempfile::tempdir().unwrap();
        let options = BenchmarkOptions {
            methods: vec![Method::Retreval],
            ..BenchmarkOptions::new(dir.path())
        };
        let provider = ScriptedProvider::from_rules(vec![
            ScriptedRule::new(RoleTag::Complexity, "complexity: 1"),
            ScriptedRule::new(RoleTag::Generate, "THOUGHT 1: a\nTHOUGHT 2: b"),
            ScriptedRule::new(RoleTag::SelfCritique, "SCORE: 0.9"),
            ScriptedRule::new(RoleTag::CrossScore, "score: 0.96"),
            ScriptedRule::new(RoleTag::FinalAnswer, "42"),
            ScriptedRule::new(RoleTag::InsightExtract, "- MEMORY_BEACON insight"),
            ScriptedRule::fallback("step"),
        ]);
        run_benchmark(&problems(), Arc::new(provider), &PromptTemplates::default(), &options)
            .unwrap();

        let trace2 =
            crate::trace::RunTrace::load(&dir.path().join("retreval").join("q2.trace.json"))
                .unwrap();
        let generation_prompts: Vec<&str> = trace2
            .calls()
            .filter(|(role, _, _)| **role == RoleTag::Generate)
            .map(|(_, prompt, _)| prompt)
            .collect();
        assert!(generation_prompts
            .iter()
            .any(|p| p.contains("MEMORY_BEACON insight")));
    }
}
