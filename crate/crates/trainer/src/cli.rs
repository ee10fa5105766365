//! Command line entry points.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use rescue_core::goal_reasoner::GoalType;
use rescue_core::planner::domain_text;
use rescue_core::service::{validate_ruleset, Command, RunReport, Session};
use rescue_core::sim::generate::{generate, preset, PRESETS};
use rescue_core::sim::ScenarioConfig;

use crate::server::{bundled_ruleset, router, AppState};

#[derive(Debug, Parser)]
#[command(
    name = "rescue-trainer",
    version,
    about = "Train goal-reasoning rules for a rescue simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run a scenario headless and write a report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Ruleset file, or one of `default`, `test_city`, `kobe`.
        #[arg(long, default_value = "default")]
        ruleset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides the scenario's step limit.
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Writes domain files and per-step problem files here.
        #[arg(long)]
        emit_pddl: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Milliseconds between steps of a running session.
        #[arg(long, default_value_t = 100)]
        tick_ms: u64,
    },
    /// Check that a ruleset parses and is consistent.
    ValidateRuleset { file: PathBuf },
    /// Write a generated scenario.
    GenerateScenario {
        #[arg(long, default_value = "test-city")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Cmd::Run {
            scenario,
            ruleset,
            seed,
            steps,
            report,
            emit_pddl,
        } => {
            let config = ScenarioConfig::load(&scenario)?;
            let text = ruleset_text(&ruleset)?;
            let report_data = run_headless(config, &text, seed, steps, emit_pddl.as_deref())?;
            let json = serde_json::to_string_pretty(&report_data)?;
            match report {
                Some(path) => std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?,
                None => println!("{json}"),
            }
            Ok(())
        }
        Cmd::Serve { port, tick_ms } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let app = router(AppState::new(Duration::from_millis(tick_ms)));
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
                eprintln!("listening on {}", listener.local_addr()?);
                axum::serve(listener, app).await?;
                Ok(())
            })
        }
        Cmd::ValidateRuleset { file } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let kb = validate_ruleset(&text)?;
            let trees = kb.trees().count();
            let rules: usize = kb.trees().map(|(_, _, t)| t.len()).sum();
            println!("ok: {trees} trees, {rules} rules");
            Ok(())
        }
        Cmd::GenerateScenario {
            preset: name,
            seed,
            out,
        } => {
            let Some(counts) = preset(&name) else {
                let known: Vec<_> = PRESETS.iter().map(|(n, _)| *n).collect();
                bail!("unknown preset `{name}`; known: {}", known.join(", "));
            };
            std::fs::write(&out, generate(&name, counts, seed).to_json())
                .with_context(|| format!("writing {}", out.display()))?;
            Ok(())
        }
    }
}

/// Reads a ruleset path, falling back to a bundled name.
pub fn ruleset_text(arg: &str) -> anyhow::Result<String> {
    let path = Path::new(arg);
    if path.exists() {
        return std::fs::read_to_string(path).with_context(|| format!("reading {arg}"));
    }
    match bundled_ruleset(arg) {
        Some(text) => Ok(text.to_string()),
        None => bail!("no ruleset file or bundled ruleset named `{arg}`"),
    }
}

/// Runs to the step limit. With `pddl_dir`, writes the four domains and every
/// problem committed along the way.
pub fn run_headless(
    mut config: ScenarioConfig,
    ruleset: &str,
    seed: u64,
    steps: Option<u64>,
    pddl_dir: Option<&Path>,
) -> anyhow::Result<RunReport> {
    if let Some(n) = steps {
        config.limits.steps = n;
    }
    let mut session = Session::new("cli", config, ruleset, seed)?;
    if let Some(dir) = pddl_dir {
        std::fs::create_dir_all(dir)?;
        for g in GoalType::ALL {
            std::fs::write(dir.join(format!("{}_domain.pddl", g.as_str())), domain_text(g))?;
        }
        write_problems(&session, 0, dir)?;
    }
    session.control(Command::Start)?;
    while session.run_tick().is_some() {
        if let Some(dir) = pddl_dir {
            write_problems(&session, session.time(), dir)?;
        }
    }
    Ok(session.report())
}

fn write_problems(session: &Session, t: u64, dir: &Path) -> anyhow::Result<()> {
    for (name, text) in session.pddl_problems(t)? {
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}
