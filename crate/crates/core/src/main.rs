use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use skillgroup::gate::{run_gate, GateAnnotations, Retriever};
use skillgroup::{extract_schema, load_library, Ablation, Config, Dictionary, Engine, PoolParams};

#[derive(Parser)]
#[command(name = "skillgroup", version, about = "Group-structured skill retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build pool.json from a library directory holding skills.json and edges.json.
    BuildPool {
        library_dir: PathBuf,
        #[arg(long, default_value = "pool.json")]
        out: PathBuf,
        /// Build groups on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Answer one query with an execution contract.
    Retrieve {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        query: String,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, conflicts_with = "text")]
        json: bool,
        #[arg(long)]
        text: bool,
        /// Append the decision log.
        #[arg(long)]
        trace: bool,
    },
    /// Score a retriever against gate annotations in both modes.
    Gate {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long, default_value = "grouped")]
        retriever: String,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Dump internals as JSON.
    Inspect {
        #[command(subcommand)]
        what: Inspect,
    },
}

#[derive(Subcommand)]
enum Inspect {
    /// Parsed query schema and high-confidence facets.
    Schema {
        #[arg(long)]
        query: String,
        /// Adds the library vocabulary to recognition.
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModeArg::CriticalOverride)]
        mode: ModeArg,
    },
    /// Pool summary.
    Pool {
        #[arg(long)]
        pool: PathBuf,
    },
    /// One group by id.
    Group {
        id: String,
        #[arg(long)]
        pool: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    InstructionAuto,
    CriticalOverride,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ablation variant; may repeat.
    #[arg(long = "ablate")]
    ablate: Vec<String>,
}

#[derive(Serialize)]
struct Provenance {
    source: String,
    ablations: Vec<&'static str>,
    effective: Config,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<(Config, Provenance)> {
        let (mut cfg, source) = match &self.config {
            Some(p) => (Config::load(p)?, p.display().to_string()),
            None => (Config::default(), "default".to_string()),
        };
        for a in &self.ablate {
            cfg = cfg.ablate(a.parse::<Ablation>()?);
        }
        let prov = Provenance {
            source,
            ablations: cfg.active_ablations(),
            effective: cfg.clone(),
        };
        Ok((cfg, prov))
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildPool { library_dir, out, sequential } => {
            let dict = Dictionary::default();
            let lib = load_library(&library_dir)?;
            let params = PoolParams { parallel: !sequential, ..PoolParams::default() };
            let engine = Engine::build(lib, dict, params);
            write(&out, &engine.to_pool_json())?;
            let pool = &engine.pool;
            println!(
                "skills={} groups={} group_edges={} index_skills={} index_facets={} out={}",
                engine.lib.skills().len(),
                pool.groups.len(),
                pool.graph.edges.len(),
                pool.index.by_skill.len(),
                pool.index.by_facet.len(),
                out.display()
            );
        }
        Command::Retrieve { pool, query, config, json: as_json, text: _, trace } => {
            let (cfg, prov) = config.resolve()?;
            let engine = Engine::load(&pool)?;
            let r = skillgroup::retrieve(&engine, &query, &cfg);
            if as_json {
                #[derive(Serialize)]
                struct Out<'a> {
                    plan: &'a Option<skillgroup::pipeline::GroupPlan>,
                    skills: &'a [skillgroup::pipeline::PresentedSkill],
                    debt: &'a [String],
                    contract: &'a skillgroup::ExecutionContract,
                    contract_text: &'a str,
                    #[serde(skip_serializing_if = "Option::is_none")]
                    trace: Option<&'a [skillgroup::pipeline::TraceEvent]>,
                    config: Provenance,
                }
                print!(
                    "{}",
                    json(&Out {
                        plan: &r.plan,
                        skills: &r.skills,
                        debt: &r.debt,
                        contract: &r.contract,
                        contract_text: &r.contract_text,
                        trace: trace.then_some(r.trace.as_slice()),
                        config: prov,
                    })
                );
            } else {
                print!("{}", r.contract_text);
                if trace {
                    println!("\nTRACE");
                    for e in &r.trace {
                        println!("{}", serde_json::to_string(e)?);
                    }
                }
            }
        }
        Command::Gate { pool, annotations, retriever, config, out_dir } => {
            let (cfg, prov) = config.resolve()?;
            let retriever: Retriever = retriever.parse()?;
            let engine = Engine::load(&pool)?;
            let text = fs::read_to_string(&annotations)
                .with_context(|| format!("reading {}", annotations.display()))?;
            let ann = GateAnnotations::from_json(&text)?;
            let report = run_gate(&ann, &engine, retriever, &cfg)?;
            write(&out_dir.join("gate_report.csv"), &report.to_csv()?)?;
            #[derive(Serialize)]
            struct Out<'a> {
                report: &'a skillgroup::GateReport,
                config: Provenance,
            }
            write(&out_dir.join("gate_report.json"), &json(&Out { report: &report, config: prov }))?;
            for m in &report.modes {
                println!("retriever={} {}", report.retriever, m.summary_line());
            }
        }
        Command::Inspect { what } => match what {
            Inspect::Schema { query, pool, mode } => {
                let (dict, vocab) = match pool {
                    Some(p) => {
                        let e = Engine::load(p)?;
                        let v = e.vocabulary().clone();
                        (e.dict, v)
                    }
                    None => (Dictionary::default(), Default::default()),
                };
                let mode = match mode {
                    ModeArg::InstructionAuto => skillgroup::Mode::InstructionAuto,
                    ModeArg::CriticalOverride => skillgroup::Mode::CriticalOverride,
                };
                let schema = extract_schema(&query, &dict, &vocab);
                let high = skillgroup::high_confidence_facets(&schema, mode);
                print!("{}", json(&serde_json::json!({ "schema": schema, "high_confidence": high })));
            }
            Inspect::Pool { pool } => {
                let e = Engine::load(&pool)?;
                let sizes: Vec<usize> = (1..=e.params.k_max)
                    .map(|k| e.groups().iter().filter(|g| g.size() == k).count())
                    .collect();
                print!(
                    "{}",
                    json(&serde_json::json!({
                        "version": e.version(),
                        "skills": e.lib.skills().len(),
                        "skill_edges": e.lib.graph().edges().len(),
                        "groups": e.groups().len(),
                        "groups_by_size": sizes,
                        "group_edges": e.pool.graph.edges.len(),
                        "index_skills": e.pool.index.by_skill.len(),
                        "index_facets": e.pool.index.by_facet.len(),
                    }))
                );
            }
            Inspect::Group { id, pool } => {
                let e = Engine::load(&pool)?;
                let Some(g) = e.group_by_id(&id) else {
                    bail!("unknown group `{id}`");
                };
                print!("{}", json(g));
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
