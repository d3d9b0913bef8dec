use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use wh_bench::config::{ExperimentConfig, ExperimentId};
use wh_bench::runner::{run, RunOptions};
use wh_core::algo::{equivalent, level_component, minimize, stabilizer_generators, DEFAULT_VERTEX_CAP};
use wh_core::currents::{
    certify_filling, characteristic_current, counting_current, uniform_current, FillingInput, FillingMethod,
    WeightTable,
};
use wh_core::fsmc::RationalChain;
use wh_core::graph::{GammaChain, MarkedGraph, Preset};
use wh_core::minimality::{detect_mlew, estimate_distortion, Detection, MleParams};
use wh_core::walks::{rng_from_seed, uniform_cyclic_word};
use wh_core::{CyclicWord, MoveSet};

/// Whitehead's algorithm, minimality detection and geodesic-current tables.
#[derive(Parser)]
#[command(name = "wh", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize a cyclic word by steepest descent.
    Min {
        word: String,
        #[arg(long)]
        rank: Option<usize>,
    },
    /// Decide whether two cyclic words lie in the same orbit.
    Equiv {
        first: String,
        second: String,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap: usize,
    },
    /// List the minimal-length classes in the orbit of a word.
    Orbit {
        word: String,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap: usize,
    },
    /// Stabilizer generators of the minimized class.
    Stab {
        word: String,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap: usize,
    },
    /// Run the linear-time (M, λ, ε)-minimality detector.
    MleDetect {
        word: String,
        #[arg(long, short = 'm')]
        m: usize,
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        epsilon: String,
        #[arg(long)]
        rank: Option<usize>,
    },
    /// Estimate the distortion spectrum of the uniform current.
    Spectrum {
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = 1000)]
        length: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        radius: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Finite-depth current tables.
    Current {
        kind: CurrentKind,
        /// Word for the counting current.
        word: Option<String>,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        /// Chain preset for the characteristic current.
        #[arg(long)]
        preset: Option<String>,
        /// Graph file for the characteristic current.
        #[arg(long, requires = "chain")]
        graph: Option<PathBuf>,
        /// Chain file for the characteristic current.
        #[arg(long, requires = "graph")]
        chain: Option<PathBuf>,
        /// Report flip and switch violations.
        #[arg(long)]
        check: bool,
        /// Try to certify that the current is filling.
        #[arg(long)]
        filling: bool,
    },
    /// Run an experiment from a configuration file.
    Bench {
        experiment: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        resume: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CurrentKind {
    Counting,
    Uniform,
    Characteristic,
}

fn class(s: &str) -> Result<CyclicWord> {
    CyclicWord::parse(s).with_context(|| format!("invalid word {s:?}"))
}

fn move_set(rank: Option<usize>, words: &[&CyclicWord]) -> Result<MoveSet> {
    let needed = words.iter().map(|c| c.min_rank()).max().unwrap_or(1).max(2);
    let rank = rank.unwrap_or(needed);
    if rank < needed {
        bail!("rank {rank} is smaller than the rank {needed} the input needs");
    }
    Ok(MoveSet::new(rank)?)
}

fn table_json(t: &WeightTable) -> Value {
    json!({
        "depth": t.depth(),
        "length_norm": t.length_norm().to_string(),
        "weights": t.lines(),
    })
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Min { word, rank } => {
            let c = class(&word)?;
            let moves = move_set(rank, &[&c])?;
            let m = minimize(&moves, &c);
            json!({
                "input": c.to_string(),
                "result": m.result.to_string(),
                "length": m.result.len(),
                "steps": m.steps,
                "witness": m.witness.to_record(&moves),
            })
        }
        Command::Equiv {
            first,
            second,
            rank,
            cap,
        } => {
            let (a, b) = (class(&first)?, class(&second)?);
            let moves = move_set(rank, &[&a, &b])?;
            let eq = equivalent(&moves, &a, &b, cap)?;
            json!({
                "first": a.to_string(),
                "second": b.to_string(),
                "equivalent": eq.equivalent,
                "minimal_lengths": [eq.minimal_lengths.0, eq.minimal_lengths.1],
                "witness": eq.witness.map(|w| w.to_record(&moves)),
            })
        }
        Command::Orbit { word, rank, cap } => {
            let c = class(&word)?;
            let moves = move_set(rank, &[&c])?;
            let m = minimize(&moves, &c);
            let comp = level_component(&moves, &m.result, cap)?;
            json!({
                "input": c.to_string(),
                "minimal": m.result.to_string(),
                "level": comp.level,
                "size": comp.len(),
                "classes": comp.vertices.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            })
        }
        Command::Stab { word, rank, cap } => {
            let c = class(&word)?;
            let moves = move_set(rank, &[&c])?;
            let m = minimize(&moves, &c);
            let st = stabilizer_generators(&moves, &m.result, cap)?;
            json!({
                "input": c.to_string(),
                "class": m.result.to_string(),
                "component_size": st.component_size,
                "edges": st.edge_count,
                "loops": st.loops.iter().map(|w| w.to_record(&moves)).collect::<Vec<_>>(),
            })
        }
        Command::MleDetect {
            word,
            m,
            lambda,
            epsilon,
            rank,
        } => {
            let c = class(&word)?;
            let moves = move_set(rank, &[&c])?;
            let params = MleParams::parse(m, &lambda, &epsilon)?;
            match detect_mlew(&moves, &c, &params)? {
                Detection::Minimal(set) => json!({
                    "input": c.to_string(),
                    "minimal": true,
                    "classes": set.classes.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                    "witnesses": set.witnesses.iter().map(|w| w.to_record(&moves)).collect::<Vec<_>>(),
                }),
                Detection::NotMinimal(v) => json!({
                    "input": c.to_string(),
                    "minimal": false,
                    "violation": v,
                    "reason": v.to_string(),
                }),
            }
        }
        Command::Spectrum {
            rank,
            length,
            samples,
            radius,
            seed,
        } => {
            let moves = MoveSet::new(rank)?;
            let mut rng = rng_from_seed(seed);
            let stream = std::iter::repeat_with(|| uniform_cyclic_word(rank, length, &mut rng));
            serde_json::to_value(estimate_distortion(&moves, stream, radius, samples, seed)?)?
        }
        Command::Current {
            kind,
            word,
            depth,
            rank,
            preset,
            graph,
            chain,
            check,
            filling,
        } => {
            let mut chain_input: Option<GammaChain> = None;
            let mut word_input: Option<CyclicWord> = None;
            let table = match kind {
                CurrentKind::Counting => {
                    let c = class(word.as_deref().ok_or_else(|| anyhow!("counting needs a word"))?)?;
                    let t = counting_current(&c, rank.max(c.min_rank()), depth)?;
                    word_input = Some(c);
                    t
                }
                CurrentKind::Uniform => uniform_current(rank, depth)?,
                CurrentKind::Characteristic => {
                    let gc = match (preset, graph, chain) {
                        (Some(p), _, _) => Preset::parse(&p)
                            .ok_or_else(|| anyhow!("unknown preset {p:?}"))?
                            .build(rank)?,
                        (None, Some(g), Some(c)) => {
                            let g = MarkedGraph::from_json(&std::fs::read_to_string(&g)?)?;
                            let c = RationalChain::from_json(&std::fs::read_to_string(&c)?)?;
                            GammaChain::new(g, c)?
                        }
                        _ => bail!("characteristic needs --preset or --graph with --chain"),
                    };
                    let t = characteristic_current(&gc, depth)?;
                    chain_input = Some(gc);
                    t
                }
            };
            let mut out = table_json(&table);
            if check {
                out["flip_violations"] = json!(table.flip_violations());
                out["switch_violations"] = json!(table.switch_violations());
                out["valid"] = json!(table.is_valid());
            }
            if filling {
                let verdict = match (&word_input, &chain_input) {
                    (Some(c), _) => certify_filling(FillingInput::Word(c), &FillingMethod::ThreeSubword)?,
                    (_, Some(gc)) => {
                        certify_filling(FillingInput::Chain(gc), &FillingMethod::FsmcXF { case3_path: None })?
                    }
                    _ => certify_filling(FillingInput::Table(&table), &FillingMethod::FullSupportDepth)?,
                };
                out["filling"] = serde_json::to_value(verdict)?;
            }
            out
        }
        Command::Bench {
            experiment,
            config,
            resume,
        } => {
            let id = ExperimentId::parse(&experiment).ok_or_else(|| anyhow!("unknown experiment {experiment:?}"))?;
            let cfg = ExperimentConfig::load(&config)?;
            if cfg.experiment != id {
                bail!("config is for {}, not {}", cfg.experiment.name(), id.name());
            }
            let report = run(
                &cfg,
                &RunOptions {
                    resume,
                    ..Default::default()
                },
            )?;
            json!({
                "experiment": id.name(),
                "executed": report.executed,
                "reused": report.reused,
                "records": report.records_path,
                "csv": report.csv_path,
                "summary_file": report.summary_path,
                "summary": report.summary,
            })
        }
    };
    let text = serde_json::to_string_pretty(&out)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}
