//! Benchmark harness CLI: run methods over a dataset, judge the outputs,
//! and render report tables.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use retreval::gateway::{ChatProvider, HttpProvider, PromptTemplates, ProviderConfig, ScriptedProvider};
use retreval::harness::{
    generate_creative_prompts, judge_evaluate, load_dataset, load_judge_items, run_benchmark,
    save_dataset, summarize, write_report, BenchmarkOptions, Method, PairStatus, TaskType,
    VerdictFile,
};
use retreval::model::ConfigOverrides;
use retreval::trace::TraceHandle;

#[derive(Parser)]
#[command(name = "retreval", version, about = "Tree-of-thoughts reasoning benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ProviderArgs {
    /// OpenAI-compatible base URL, e.g. http://localhost:11434/v1
    #[arg(long)]
    endpoint: Option<String>,

    /// Model name sent with each request
    #[arg(long, default_value = "qwen2.5:7b")]
    model: String,

    /// Environment variable holding the API key
    #[arg(long, default_value = "OPENAI_API_KEY")]
    api_key_env: String,

    /// Request timeout in seconds
    #[arg(long, default_value_t = 120)]
    timeout_secs: u64,

    /// Extra attempts after the first on transport failure
    #[arg(long, default_value_t = 2)]
    max_retries: u32,

    /// TOML script file: run against the deterministic mock provider instead
    /// of a live endpoint
    #[arg(long)]
    script: Option<PathBuf>,
}

impl ProviderArgs {
    fn build(&self) -> anyhow::Result<Arc<dyn ChatProvider>> {
        if let Some(script) = &self.script {
            let provider = ScriptedProvider::load(script)
                .with_context(|| format!("loading script {}", script.display()))?;
            return Ok(Arc::new(provider));
        }
        let endpoint = self
            .endpoint
            .as_deref()
            .context("either --endpoint or --script is required")?;
        let config = ProviderConfig::new(endpoint, &self.model)?
            .with_api_key(std::env::var(&self.api_key_env).ok())
            .with_timeout(Duration::from_secs(self.timeout_secs))
            .with_max_retries(self.max_retries);
        Ok(Arc::new(HttpProvider::new(config)?))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Execute methods over a dataset, writing traces, results, and a manifest
    Run {
        /// JSONL dataset path
        #[arg(long)]
        dataset: PathBuf,

        /// Comma-separated methods: retreval,react,reflexion,self_refine (or "all")
        #[arg(long, default_value = "retreval")]
        methods: String,

        /// Output directory for traces, results, and the manifest
        #[arg(long)]
        out_dir: PathBuf,

        /// Reflexion memory file (defaults to <out_dir>/memory.toml)
        #[arg(long)]
        memory_file: Option<PathBuf>,

        /// Sampling seed forwarded to backends that support it
        #[arg(long)]
        seed: Option<u64>,

        /// Force fully sequential episodes (required for reproducible traces)
        #[arg(long, conflicts_with = "parallel")]
        sequential: bool,

        /// Concurrent children per episode iteration
        #[arg(long, default_value_t = 4)]
        parallel: usize,

        /// Directory of prompt template overrides (*.txt)
        #[arg(long)]
        template_dir: Option<PathBuf>,

        #[command(flatten)]
        provider: ProviderArgs,
    },

    /// Judge the outputs of a finished run
    Judge {
        /// Run directory written by `run`
        #[arg(long)]
        results_dir: PathBuf,

        /// math or creative
        #[arg(long)]
        task_type: String,

        /// Verdicts output path (defaults to <results_dir>/verdicts.json)
        #[arg(long)]
        out: Option<PathBuf>,

        /// Directory of prompt template overrides (*.txt)
        #[arg(long)]
        template_dir: Option<PathBuf>,

        #[command(flatten)]
        provider: ProviderArgs,
    },

    /// Summarize verdicts into report tables
    Report {
        /// One or more verdicts.json files
        #[arg(long, required = true, num_args = 1..)]
        verdicts: Vec<PathBuf>,

        /// Output directory for report.txt and the CSV files
        #[arg(long)]
        out_dir: PathBuf,
    },

    /// Generate a seeded creative-writing dataset
    GenCreative {
        #[arg(long)]
        count: usize,

        #[arg(long, default_value_t = 42)]
        seed: u64,

        /// JSONL output path
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_templates(dir: &Option<PathBuf>) -> anyhow::Result<PromptTemplates> {
    match dir {
        Some(path) => {
            PromptTemplates::from_dir(path).with_context(|| format!("reading {}", path.display()))
        }
        None => Ok(PromptTemplates::default()),
    }
}

fn parse_methods(spec: &str) -> anyhow::Result<Vec<Method>> {
    if spec.trim() == "all" {
        return Ok(Method::ALL.to_vec());
    }
    let mut methods = Vec::new();
    for part in spec.split(',') {
        let method: Method = part.parse()?;
        if !methods.contains(&method) {
            methods.push(method);
        }
    }
    if methods.is_empty() {
        bail!("no methods given");
    }
    Ok(methods)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            dataset,
            methods,
            out_dir,
            memory_file,
            seed,
            sequential,
            parallel,
            template_dir,
            provider,
        } => {
            let records = load_dataset(&dataset)?;
            let problems: Vec<_> = records
                .into_iter()
                .map(|r| r.into_problem())
                .collect::<retreval::Result<_>>()?;
            let templates = load_templates(&template_dir)?;
            let backend = provider.build()?;
            let backend: Arc<dyn ChatProvider> = match seed {
                Some(seed) => Arc::new(SeededProvider { inner: backend, seed }),
                None => backend,
            };
            let options = BenchmarkOptions {
                methods: parse_methods(&methods)?,
                memory_path: memory_file.unwrap_or_else(|| out_dir.join("memory.toml")),
                out_dir: out_dir.clone(),
                overrides: ConfigOverrides::default(),
                parallelism: if sequential { 1 } else { parallel },
                baseline_max_cycles: 3,
            };
            let manifest = run_benchmark(&problems, backend, &templates, &options)?;
            let (done, skipped, failed) =
                manifest
                    .entries
                    .iter()
                    .fold((0, 0, 0), |(d, s, f), e| match e.status {
                        PairStatus::Completed => (d + 1, s, f),
                        PairStatus::Skipped => (d, s + 1, f),
                        PairStatus::Failed { .. } => (d, s, f + 1),
                    });
            println!(
                "run finished: {done} completed, {skipped} skipped, {failed} failed -> {}",
                out_dir.display()
            );
            if failed > 0 {
                std::process::exit(1);
            }
        }

        Command::Judge {
            results_dir,
            task_type,
            out,
            template_dir,
            provider,
        } => {
            let task: TaskType = task_type.parse()?;
            let items = load_judge_items(&results_dir)?;
            if items.is_empty() {
                bail!("no completed results found in {}", results_dir.display());
            }
            let templates = load_templates(&template_dir)?;
            let backend = provider.build()?;
            let trace = TraceHandle::new("judge-session", "judge");
            let traced = retreval::gateway::TracingProvider::new(backend, trace.clone());
            let verdicts = judge_evaluate(&items, &traced, task, &templates, &trace)?;
            let out = out.unwrap_or_else(|| results_dir.join("verdicts.json"));
            VerdictFile::new(verdicts.clone()).save(&out)?;
            trace.write_to(&results_dir.join("judge.trace.json"))?;
            let unscored = verdicts.iter().filter(|v| !v.scored).count();
            println!(
                "judged {} outputs ({unscored} unscored) -> {}",
                verdicts.len(),
                out.display()
            );
        }

        Command::Report { verdicts, out_dir } => {
            let mut all = Vec::new();
            for path in &verdicts {
                all.extend(VerdictFile::load(path)?.verdicts);
            }
            let summary = summarize(&all)?;
            write_report(&summary, &out_dir)?;
            println!(
                "{}",
                std::fs::read_to_string(out_dir.join("report.txt"))?
            );
            println!("report written to {}", out_dir.display());
        }

        Command::GenCreative { count, seed, out } => {
            let records = generate_creative_prompts(count, seed)?;
            save_dataset(&records, &out)?;
            println!("wrote {count} creative prompts -> {}", out.display());
        }
    }
    Ok(())
}

/// Provider wrapper that stamps a fixed sampling seed onto every request.
struct SeededProvider {
    inner: Arc<dyn ChatProvider>,
    seed: u64,
}

impl ChatProvider for SeededProvider {
    fn complete(
        &self,
        request: &retreval::gateway::PromptRequest,
    ) -> retreval::Result<retreval::gateway::Completion> {
        let mut request = request.clone();
        request.seed = Some(self.seed);
        self.inner.complete(&request)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}
