//! ReTreVal: adaptive tree-of-thoughts search with per-node self-refinement,
//! dual critique scoring, top-k pruning, and cross-problem reflexion memory,
//! over a pluggable chat-completion backend.
//!
//! The crate also ships the ReAct, Reflexion, and Self-Refine baselines and a
//! benchmark/judging/reporting harness; the `retreval` binary in the sibling
//! CLI crate wraps all of it.
//!
//! Quick tour:
//! - [`model`]: problems, reasoning trees, and the complexity-to-config map
//! - [`gateway`]: provider trait, HTTP and scripted backends, prompts, parsers
//! - [`refine`]: the per-node critique/rewrite loop
//! - [`score`]: dual (local + cross) scoring and the weighted combination
//! - [`memory`]: bounded insight/failure queues persisting across problems
//! - [`controller`]: the episode loop and convergence logic
//! - [`baselines`]: ReAct / Reflexion / Self-Refine under the same provider
//! - [`harness`]: datasets, benchmark runner, LLM judge, report tables
//! - [`trace`]: replayable per-episode records

pub mod baselines;
pub mod controller;
pub mod error;
pub mod gateway;
pub mod harness;
pub mod memory;
pub mod model;
pub mod refine;
pub mod score;
pub mod trace;

pub use controller::{call_budget, check_convergence, prune_level, SolutionResult, Solver};
pub use error::{Error, Result};
pub use gateway::{ChatProvider, HttpProvider, PromptTemplates, ProviderConfig, ScriptedProvider};
pub use memory::ReflexionMemory;
pub use model::{config_for_complexity, max_node_bound, Problem, ReasoningTree, TreeConfig};
pub use trace::{ConvergedReason, RunTrace, TraceHandle};
