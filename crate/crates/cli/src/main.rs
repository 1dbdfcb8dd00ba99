use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use cellx::egraph::{default_rules, parse_rules, EGraph, RewriteRule, Snapshot};
use cellx::graphify::egraph_to_graph;
use cellx::miner::MiningParams;
use cellx::pipeline::{self, RunConfig, Saturated};
use cellx::selector::{reduction_pct, Strategy};
use cellx::{make_adder, parse_library, parse_netlist, serialize_netlist, CellLibrary, Netlist};

#[derive(Parser)]
#[command(name = "cellx", version, about = "Grow a standard cell library with mined complex cells")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Saturate, mine, select and write the extended library and netlist.
    Extend(ExtendArgs),
    /// Saturate only; writes saturation.json and egraph.json.
    Saturate(SaturateArgs),
    /// Mine a netlist or a saved e-graph; writes patterns.json and candidates.json.
    Mine(MineArgs),
    /// Compare an original and an extended netlist.
    Report(ReportArgs),
    /// Write a ripple-carry adder netlist.
    Adder(AdderArgs),
}

#[derive(Args, Clone)]
struct Inputs {
    /// Mapped netlist document.
    #[arg(long)]
    netlist: Option<PathBuf>,
    /// Cell library document; the bundled library when omitted.
    #[arg(long)]
    lib: Option<PathBuf>,
    /// Rewrite rule file; the bundled rules when omitted.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// JSON file with defaults for any of the numeric options.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write pattern_graph.dot.
    #[arg(long)]
    dot: bool,
    /// Circuit name in reports; the netlist file stem by default.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args, Clone, Default)]
struct Mining {
    #[arg(long)]
    min_support: Option<usize>,
    /// Maximum gates per pattern.
    #[arg(long)]
    max_size: Option<usize>,
    /// Maximum inputs per pattern.
    #[arg(long)]
    max_inputs: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    max_enodes: Option<usize>,
}

#[derive(Args)]
struct ExtendArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    mining: Mining,
    /// Maximum number of new cells.
    #[arg(long)]
    max_cells: Option<usize>,
    /// Search all subsets instead of greedy selection.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SaturateArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    mining: Mining,
}

#[derive(Args)]
struct MineArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    mining: Mining,
    /// Saved e-graph to mine instead of saturating `--netlist`.
    #[arg(long)]
    egraph: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    netlist: PathBuf,
    #[arg(long)]
    lib: Option<PathBuf>,
    #[arg(long)]
    extended_netlist: PathBuf,
    #[arg(long)]
    extended_lib: PathBuf,
}

#[derive(Args)]
struct AdderArgs {
    #[arg(long)]
    width: usize,
    #[arg(long)]
    lib: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Keys accepted in a `--config` file.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    min_support: Option<usize>,
    max_size: Option<usize>,
    max_inputs: Option<usize>,
    max_iterations: Option<usize>,
    max_enodes: Option<usize>,
    max_cells: Option<usize>,
    seed: Option<u64>,
    exhaustive: Option<bool>,
}

/// Bad invocation: exits 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn read_path(flag: &str, path: &Path) -> anyhow::Result<String> {
    if !path.exists() {
        return Err(usage(format!("{flag}: no such file `{}`", path.display())));
    }
    fs::read_to_string(path).with_context(|| format!("{flag}: reading `{}`", path.display()))
}

fn load_library(path: Option<&Path>) -> anyhow::Result<CellLibrary> {
    match path {
        Some(p) => parse_library(&read_path("--lib", p)?).context("[load] library"),
        None => Ok(CellLibrary::default_library()),
    }
}

fn load_rules(path: Option<&Path>, lib: &CellLibrary) -> anyhow::Result<Vec<RewriteRule>> {
    match path {
        Some(p) => parse_rules(&read_path("--rules", p)?, lib).context("[load] rules"),
        None => default_rules(lib).context("[load] bundled rules"),
    }
}

fn load_netlist(path: Option<&Path>, lib: &CellLibrary) -> anyhow::Result<Netlist> {
    let p = path.ok_or_else(|| usage("--netlist is required"))?;
    parse_netlist(&read_path("--netlist", p)?, lib).context("[load] netlist")
}

fn load_config(path: Option<&Path>) -> anyhow::Result<ConfigFile> {
    match path {
        Some(p) => serde_json::from_str(&read_path("--config", p)?).map_err(|e| usage(format!("--config: {e}"))),
        None => Ok(ConfigFile::default()),
    }
}

fn circuit_name(inputs: &Inputs) -> String {
    inputs.name.clone().unwrap_or_else(|| {
        inputs
            .netlist
            .as_deref()
            .and_then(|p| p.file_stem())
            .map_or_else(|| "design".to_string(), |s| s.to_string_lossy().into_owned())
    })
}

fn run_config(inputs: &Inputs, m: &Mining, file: &ConfigFile) -> anyhow::Result<RunConfig> {
    let d = MiningParams::default();
    let mining = MiningParams {
        min_support: m.min_support.or(file.min_support).unwrap_or(d.min_support),
        max_gates: m.max_size.or(file.max_size).unwrap_or(d.max_gates),
        max_inputs: m.max_inputs.or(file.max_inputs).unwrap_or(d.max_inputs),
        ..d
    };
    mining.validate().map_err(|e| usage(e.to_string()))?;
    let mut cfg = RunConfig { name: circuit_name(inputs), mining, ..RunConfig::default() };
    let iterations = m.max_iterations.or(file.max_iterations);
    let enodes = m.max_enodes.or(file.max_enodes);
    if iterations.is_some() || enodes.is_some() {
        let mut l = cellx::egraph::SaturationLimits::default();
        if let Some(i) = iterations {
            l.max_iterations = i;
        }
        if let Some(n) = enodes {
            l.max_enodes = n;
        }
        cfg.limits = Some(l);
    }
    Ok(cfg)
}

fn saturate_stage(netlist: &Netlist, lib: &CellLibrary, rules: &[RewriteRule], cfg: &RunConfig) -> anyhow::Result<Saturated> {
    let t = Instant::now();
    let sat = pipeline::saturate_netlist(netlist, lib, rules, cfg.limits.as_ref()).context("[saturate]")?;
    log::info!("[saturate] {:?}", t.elapsed());
    Ok(sat)
}

fn cmd_extend(a: ExtendArgs) -> anyhow::Result<()> {
    let file = load_config(a.inputs.config.as_deref())?;
    let lib = load_library(a.inputs.lib.as_deref())?;
    let rules = load_rules(a.inputs.rules.as_deref(), &lib)?;
    let netlist = load_netlist(a.inputs.netlist.as_deref(), &lib)?;
    let mut cfg = run_config(&a.inputs, &a.mining, &file)?;
    cfg.max_cells = a.max_cells.or(file.max_cells).unwrap_or(cfg.max_cells);
    cfg.seed = a.seed.or(file.seed).unwrap_or(0);
    if a.exhaustive || file.exhaustive == Some(true) {
        cfg.strategy = Strategy::Exhaustive;
    }

    let sat = saturate_stage(&netlist, &lib, &rules, &cfg)?;
    let t = Instant::now();
    let mined = pipeline::mine_candidates::<f64>(&sat, &lib, &cfg.mining).context("[mine]")?;
    log::info!("[mine] {:?}", t.elapsed());
    let t = Instant::now();
    let extension =
        pipeline::apply_candidates(&netlist, &lib, &sat, &mined.candidates, &mined.model, mined.stats(), &cfg)
            .context("[select]")?;
    log::info!("[select] {:?}", t.elapsed());
    let run = pipeline::RunOutput { saturated: sat, mined, extension };
    pipeline::write_outputs(&a.inputs.out, &run, a.inputs.dot).context("[emit]")?;
    let r = &run.extension.report;
    println!(
        "{}: area {:.2} -> {:.2} ({:.2}%), gates {} -> {}, {} new cells",
        r.circuit,
        r.original_area,
        r.extended_area,
        r.reduction_pct,
        r.gates_original,
        r.gates_extended,
        r.cells.len()
    );
    Ok(())
}

fn cmd_saturate(a: SaturateArgs) -> anyhow::Result<()> {
    let file = load_config(a.inputs.config.as_deref())?;
    let lib = load_library(a.inputs.lib.as_deref())?;
    let rules = load_rules(a.inputs.rules.as_deref(), &lib)?;
    let netlist = load_netlist(a.inputs.netlist.as_deref(), &lib)?;
    let cfg = run_config(&a.inputs, &a.mining, &file)?;
    let sat = saturate_stage(&netlist, &lib, &rules, &cfg)?;
    let out = &a.inputs.out;
    fs::create_dir_all(out).with_context(|| format!("[emit] creating `{}`", out.display()))?;
    pipeline::write_file(out, "saturation.json", &pipeline::saturation_json(&sat)).context("[emit]")?;
    pipeline::write_file(out, "egraph.json", &pipeline::egraph_json(&sat)).context("[emit]")?;
    if a.inputs.dot {
        pipeline::write_file(out, "pattern_graph.dot", &sat.graph.to_dot()).context("[emit]")?;
    }
    println!("{}", serde_json::to_string(&sat.report)?);
    Ok(())
}

fn cmd_mine(a: MineArgs) -> anyhow::Result<()> {
    let file = load_config(a.inputs.config.as_deref())?;
    let lib = load_library(a.inputs.lib.as_deref())?;
    let cfg = run_config(&a.inputs, &a.mining, &file)?;
    let sat = match &a.egraph {
        Some(p) => {
            let snap: Snapshot =
                serde_json::from_str(&read_path("--egraph", p)?).context("[load] e-graph snapshot")?;
            let egraph = EGraph::from_snapshot(&snap, &lib).context("[load] e-graph snapshot")?;
            let graph = egraph_to_graph(&egraph, &lib).context("[graphify]")?;
            let report = cellx::egraph::SaturationReport {
                iterations: 0,
                enodes: egraph.node_count(),
                classes: egraph.class_count(),
                stop_reason: cellx::egraph::StopReason::Saturated,
            };
            Saturated { egraph, report, graph }
        }
        None => {
            let rules = load_rules(a.inputs.rules.as_deref(), &lib)?;
            let netlist = load_netlist(a.inputs.netlist.as_deref(), &lib)?;
            saturate_stage(&netlist, &lib, &rules, &cfg)?
        }
    };
    let t = Instant::now();
    let mined = pipeline::mine_candidates::<f64>(&sat, &lib, &cfg.mining).context("[mine]")?;
    log::info!("[mine] {:?}", t.elapsed());
    let out = &a.inputs.out;
    fs::create_dir_all(out).with_context(|| format!("[emit] creating `{}`", out.display()))?;
    pipeline::write_file(out, "patterns.json", &pipeline::patterns_json(&sat, &mined.result)).context("[emit]")?;
    let cands: Vec<_> = mined.candidates.iter().map(|c| cellx::selector::CellReport::new(c, 0)).collect();
    pipeline::write_file(out, "candidates.json", &serde_json::to_string_pretty(&cands)?).context("[emit]")?;
    if a.inputs.dot {
        pipeline::write_file(out, "pattern_graph.dot", &sat.graph.to_dot()).context("[emit]")?;
    }
    println!("{}", serde_json::to_string(&mined.stats())?);
    Ok(())
}

fn cmd_report(a: ReportArgs) -> anyhow::Result<()> {
    let lib = load_library(a.lib.as_deref())?;
    let ext_lib = parse_library(&read_path("--extended-lib", &a.extended_lib)?).context("[load] extended library")?;
    let orig = parse_netlist(&read_path("--netlist", &a.netlist)?, &lib).context("[load] netlist")?;
    let ext = parse_netlist(&read_path("--extended-netlist", &a.extended_netlist)?, &ext_lib)
        .context("[load] extended netlist")?;
    cellx::selector::check_equivalence(&orig, &lib, &ext, &ext_lib, 64, 0).context("[verify]")?;
    let (oa, ea) = (orig.area(&lib), ext.area(&ext_lib));
    let v = serde_json::json!({
        "original_area": cellx::scalar::round2(oa),
        "extended_area": cellx::scalar::round2(ea),
        "reduction_pct": reduction_pct(oa, ea),
        "depth_original": orig.depth(),
        "depth_extended": ext.depth(),
        "gates_original": orig.gate_count(),
        "gates_extended": ext.gate_count(),
    });
    println!("{}", serde_json::to_string_pretty(&v)?);
    Ok(())
}

fn cmd_adder(a: AdderArgs) -> anyhow::Result<()> {
    let lib = load_library(a.lib.as_deref())?;
    let n = make_adder(a.width, &lib).map_err(|e| usage(format!("--width: {e}")))?;
    let text = serialize_netlist(&n, &lib);
    match a.out {
        Some(p) => fs::write(&p, text).with_context(|| format!("writing `{}`", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CELLX_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    let res = match cli.cmd {
        Cmd::Extend(a) => cmd_extend(a),
        Cmd::Saturate(a) => cmd_saturate(a),
        Cmd::Mine(a) => cmd_mine(a),
        Cmd::Report(a) => cmd_report(a),
        Cmd::Adder(a) => cmd_adder(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
