//! papb: plug and play benchmarking for HDP clusters.
//!
//! The subcommands chain into a pipeline: `plug` turns a cluster descriptor
//! into container build files, `plan` records a workload selection, `play`
//! executes it against a scenario or a real command, `report` prices the
//! results and emits plot tables, and `cost` evaluates the billing formula
//! for a single run.
//!
//! Machine-readable output goes to files and standard output; progress and
//! warnings go to standard error. Exit codes: 0 success, 2 configuration or
//! validation error, 3 partial benchmark failure (results still written).

use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use papb_core::catalog::Catalog;
use papb_core::cluster::{
    detect_environment, load_descriptor, workload_node_count, ClusterDescriptor, NodeRole,
};
use papb_core::cost::{compute_cost, price_plan, price_with_rates, CostModel, Money, PricedPlan};
use papb_core::harness::{
    aggregate_runs, run_plan, Clock, Executor, RunResult, Scenario, ShellExecutor, SimClock,
    SimulatedExecutor, WallClock,
};
use papb_core::plan::{load_plan, parse_answers, plan_all, resolve_plan, save_plan};
use papb_core::recipe::{deployment_profile, emit_recipe_text, render_recipe, NodeKind};
use papb_core::report::{emit_plot_data, emit_results, parse_results, BenchmarkReport, ReportMeta};

#[derive(Parser)]
#[command(name = "papb", version, about = "plug and play benchmarking for HDP clusters")]
struct Cli {
    /// Directory generated files land in
    #[arg(long, global = true, env = "PAPB_OUT", default_value = "papb-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect the cluster environment and write Dockerfile + run.sh
    Plug(PlugArgs),
    /// Select workloads and write a plan file
    Plan(PlanArgs),
    /// Execute a plan and write a results file
    Play(PlayArgs),
    /// Price results files and write plot tables
    Report(ReportArgs),
    /// Evaluate the cost formula for one run
    Cost(CostArgs),
}

#[derive(Args)]
struct PlugArgs {
    /// Cluster descriptor JSON
    #[arg(long)]
    cluster: PathBuf,
    /// Kind of node the container targets: gateway or normal
    #[arg(long, value_parser = parse_node_kind)]
    node_kind: NodeKind,
    /// Cluster host normal nodes sync Hadoop binaries from
    #[arg(long)]
    source_node: Option<String>,
}

#[derive(Args)]
struct PlanArgs {
    /// Select the whole catalog at default scale
    #[arg(long, conflicts_with = "answers")]
    all: bool,
    /// Scripted answers file; standard input when absent
    #[arg(long)]
    answers: Option<PathBuf>,
    /// Where the plan lands (default <out>/plan.json)
    #[arg(long)]
    plan: Option<PathBuf>,
}

#[derive(Args)]
struct PlayArgs {
    /// Cluster descriptor; supplies the node count when --nodes is absent
    #[arg(long)]
    cluster: Option<PathBuf>,
    /// Workload node count
    #[arg(long)]
    nodes: Option<u32>,
    /// Scenario file driving the simulated executor
    #[arg(long, conflicts_with = "exec_template")]
    scenario: Option<PathBuf>,
    /// Command template run per workload; {workload}, {nodes} and {run}
    /// are substituted
    #[arg(long)]
    exec_template: Option<String>,
    /// Plan file from `papb plan`
    #[arg(long, conflicts_with = "all")]
    plan: Option<PathBuf>,
    /// Run the whole catalog at default scale
    #[arg(long)]
    all: bool,
    /// Overrides the scenario seed
    #[arg(long, conflicts_with = "exec_template")]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Results files from `papb play`, one per cluster size
    #[arg(required = true)]
    results: Vec<PathBuf>,
    /// Cluster descriptor whose nodes are billed
    #[arg(long)]
    cluster: Option<PathBuf>,
    /// Cost model JSON; built-in rates when absent
    #[arg(long)]
    cost_model: Option<PathBuf>,
    /// SKU billed when no cluster descriptor is given
    #[arg(long, default_value = "STANDARD_DS14_V2")]
    sku: String,
}

#[derive(Args)]
struct CostArgs {
    /// Billable node count
    #[arg(short, long = "nodes")]
    n: u32,
    /// Per-node monthly rate
    #[arg(long)]
    cpm: f64,
    /// Duration in seconds
    #[arg(short, long = "duration", allow_hyphen_values = true)]
    t: f64,
}

fn parse_node_kind(text: &str) -> Result<NodeKind, String> {
    match text {
        "gateway" => Ok(NodeKind::Gateway),
        "normal" => Ok(NodeKind::Normal),
        other => Err(format!("unknown node kind {other:?}: use gateway or normal")),
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Plug(args) => cmd_plug(&cli.out, &args),
        Command::Plan(args) => cmd_plan(&cli.out, &args),
        Command::Play(args) => cmd_play(&cli.out, &args),
        Command::Report(args) => cmd_report(&cli.out, &args),
        Command::Cost(args) => cmd_cost(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("papb: {err:#}");
            2
        }
    }
}

fn cmd_plug(out: &Path, args: &PlugArgs) -> Result<i32> {
    let desc = load_cluster(&args.cluster)?;
    if let Some(source) = &args.source_node {
        if !desc.nodes.iter().any(|n| &n.hostname == source) {
            bail!("source node {source:?} is not in the cluster descriptor");
        }
    }
    let profile = detect_environment(&desc)?;
    let recipe = render_recipe(&profile, args.node_kind, args.source_node.as_deref())?;
    recipe
        .validate()
        .map_err(|msg| anyhow!("invalid recipe: {msg}"))?;
    let text = emit_recipe_text(&recipe);
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    let dockerfile = out.join("Dockerfile");
    let run_sh = out.join("run.sh");
    write_file(&dockerfile, &text.dockerfile)?;
    write_file(&run_sh, &text.run_script)?;
    mark_executable(&run_sh)?;
    let figures = deployment_profile(args.node_kind);
    eprintln!("wrote {} and {}", dockerfile.display(), run_sh.display());
    eprintln!(
        "{} node image: about {}, deploys in {}",
        args.node_kind.container_name(),
        figures.image_size,
        figures.deploy_time
    );
    Ok(0)
}

fn cmd_plan(out: &Path, args: &PlanArgs) -> Result<i32> {
    let catalog = Catalog::builtin();
    let entries = if args.all {
        plan_all(&catalog)
    } else {
        parse_answers(&catalog, read_answer_lines(args.answers.as_deref(), &catalog)?)?
    };
    let path = match &args.plan {
        Some(path) => path.clone(),
        None => {
            std::fs::create_dir_all(out)
                .with_context(|| format!("creating output directory {}", out.display()))?;
            out.join("plan.json")
        }
    };
    save_plan(&entries, &path)?;
    eprintln!("plan: {} workloads -> {}", entries.len(), path.display());
    Ok(0)
}

fn cmd_play(out: &Path, args: &PlayArgs) -> Result<i32> {
    let desc = match &args.cluster {
        Some(path) => Some(load_cluster(path)?),
        None => None,
    };
    let nodes = match (args.nodes, &desc) {
        (Some(n), _) => n,
        (None, Some(desc)) => workload_node_count(desc),
        (None, None) => bail!("pass --nodes or --cluster so the node count is known"),
    };
    if nodes == 0 {
        bail!("node count must be positive");
    }

    let catalog = Catalog::builtin();
    let plan = if args.all {
        plan_all(&catalog)
    } else if let Some(path) = &args.plan {
        load_plan(path)?
    } else {
        parse_answers(&catalog, read_answer_lines(None, &catalog)?)?
    };
    if plan.is_empty() {
        bail!("the plan selects no workloads");
    }
    let entries = resolve_plan(&catalog, &plan)?;

    let conf_dir = out.join("conf");
    std::fs::create_dir_all(&conf_dir)
        .with_context(|| format!("creating config directory {}", conf_dir.display()))?;
    for entry in &entries {
        write_file(
            &conf_dir.join(format!("{}.conf", entry.spec.id)),
            &entry.config.to_conf_text(),
        )?;
    }

    let (mut executor, mut clock, scenario_seed): (Box<dyn Executor>, Box<dyn Clock>, Option<u64>) =
        match (&args.scenario, &args.exec_template) {
            (Some(path), None) => {
                let mut scenario = Scenario::load(path)?;
                if let Some(seed) = args.seed {
                    scenario.seed = seed;
                }
                let seed = scenario.seed;
                (
                    Box::new(SimulatedExecutor { scenario }),
                    Box::new(SimClock::default()),
                    Some(seed),
                )
            }
            (None, Some(template)) => (
                Box::new(ShellExecutor {
                    template: template.clone(),
                }),
                Box::new(WallClock),
                None,
            ),
            _ => bail!("pass --scenario for simulated runs or --exec-template for real ones"),
        };

    let started_at = clock.now();
    let runs = run_plan(&entries, executor.as_mut(), nodes, clock.as_mut())?;
    let (aggregates, exhausted) = aggregate_runs(&runs);
    for id in &exhausted {
        eprintln!("warning: every run of {id} failed; no aggregate emitted");
    }
    let run_count = runs.len();
    let failed = runs.iter().filter(|r| !r.success).count();
    let aggregate_count = aggregates.len();
    let mut results = runs;
    results.extend(aggregates);

    let meta = ReportMeta {
        cluster: desc
            .as_ref()
            .map_or_else(|| "unspecified".to_string(), |d| d.name_node_host.clone()),
        region: desc
            .as_ref()
            .map_or_else(|| "unspecified".to_string(), |d| d.region.clone()),
        node_count: nodes,
        scenario_seed,
        started_at,
    };
    let report = BenchmarkReport::new(meta, results);
    let path = out.join(format!("results-n{nodes}.jsonl"));
    emit_results(&report, &path)?;
    eprintln!(
        "{run_count} runs ({failed} failed), {aggregate_count} aggregates; results: {}",
        path.display()
    );
    Ok(if failed > 0 { 3 } else { 0 })
}

fn cmd_report(out: &Path, args: &ReportArgs) -> Result<i32> {
    let model = match &args.cost_model {
        Some(path) => CostModel::load(path)?,
        None => CostModel::builtin(),
    };
    let desc = match &args.cluster {
        Some(path) => Some(load_cluster(path)?),
        None => None,
    };
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;

    let mut priced_reports = Vec::new();
    let mut grand_micros = 0i64;
    for path in &args.results {
        let mut report = parse_results(path)
            .with_context(|| format!("reading results {}", path.display()))?;
        let aggregates: Vec<RunResult> = report.aggregates().cloned().collect();
        let priced = price_aggregates(
            &aggregates,
            report.meta.node_count,
            desc.as_ref(),
            &args.sku,
            &model,
        )?;
        report.apply_pricing(priced);
        grand_micros += report.total_cost.micros();
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("results");
        emit_results(&report, out.join(format!("{stem}.priced.jsonl")))?;
        println!("{} {} {}", path.display(), model.currency, report.total_cost);
        priced_reports.push(report);
    }

    let refs: Vec<&BenchmarkReport> = priced_reports.iter().collect();
    let tables = emit_plot_data(&refs)?;
    for id in &tables.dropped_workloads {
        eprintln!("warning: {id} is missing from some results file; dropped from the plot tables");
    }
    write_file(&out.join("cost.csv"), &tables.cost_csv)?;
    write_file(&out.join("time.csv"), &tables.time_csv)?;
    if args.results.len() > 1 {
        println!("total {} {}", model.currency, Money::from_micros(grand_micros));
    }
    Ok(0)
}

/// Prices one report's aggregates. A descriptor whose workload node count
/// matches the report is billed node for node; a uniform descriptor at a
/// different size is rescaled to the report's count; without a descriptor
/// the `--sku` rate covers every node.
fn price_aggregates(
    aggregates: &[RunResult],
    nodes: u32,
    desc: Option<&ClusterDescriptor>,
    sku: &str,
    model: &CostModel,
) -> Result<PricedPlan> {
    if let Some(desc) = desc {
        if workload_node_count(desc) == nodes {
            return Ok(price_plan(aggregates, desc, model)?);
        }
        let mut skus: Vec<&str> = desc
            .nodes
            .iter()
            .filter(|n| n.role != NodeRole::Gateway)
            .map(|n| n.vm_sku.as_str())
            .collect();
        skus.sort_unstable();
        skus.dedup();
        let [only] = skus.as_slice() else {
            bail!("cluster bills mixed SKUs; cannot rescale it to {nodes} nodes");
        };
        let rate = model.rate(only)?;
        return Ok(price_with_rates(
            aggregates,
            &vec![rate; nodes as usize],
            model,
        )?);
    }
    let rate = model.rate(sku)?;
    Ok(price_with_rates(
        aggregates,
        &vec![rate; nodes as usize],
        model,
    )?)
}

fn cmd_cost(args: &CostArgs) -> Result<i32> {
    if args.n == 0 {
        bail!("node count must be positive");
    }
    if !args.cpm.is_finite() || args.cpm <= 0.0 {
        bail!("--cpm must be positive");
    }
    if !args.t.is_finite() || args.t < 0.0 {
        bail!("duration must be non-negative");
    }
    let cost = compute_cost(args.n, args.cpm, args.t, &CostModel::builtin())?;
    println!("{cost:.4}");
    Ok(0)
}

fn load_cluster(path: &Path) -> Result<ClusterDescriptor> {
    load_descriptor(path).with_context(|| format!("loading cluster descriptor {}", path.display()))
}

/// Collects answer lines from a file, or interactively from standard input
/// with the grammar prompted on standard error.
fn read_answer_lines(path: Option<&Path>, catalog: &Catalog) -> Result<Vec<String>> {
    let text = match path {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("reading answers {}", path.display()))?,
        None => {
            let ids: Vec<&str> = catalog.ids().collect();
            eprintln!("workloads: {}", ids.join(" "));
            eprintln!("pick ids separated by spaces, or answer \"all\";");
            eprintln!("then optionally \"set <workload> <param> <value>\"; finish with \"done\"");
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .context("reading answers from standard input")?;
            text
        }
    };
    Ok(text.lines().map(str::to_string).collect())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn mark_executable(path: &Path) -> Result<()> {
    use std::os::unix::fs::PermissionsExt;
    let mut perms = std::fs::metadata(path)
        .with_context(|| format!("inspecting {}", path.display()))?
        .permissions();
    perms.set_mode(perms.mode() | 0o111);
    std::fs::set_permissions(path, perms).with_context(|| format!("chmod {}", path.display()))
}
