//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input or usage, 2 runtime failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use spkfix_core::feedback::TextGateway;
use spkfix_core::metrics::{compute_der, Mapping, MetricsReport, Timeline};
use spkfix_core::model::{DisplayMode, SessionConfig};
use spkfix_core::simulator::{
    run_meeting, sweep, synth_meeting, MeetingBundle, RunSpec, RunToggles, SweepGrid, SweepResult, SynthParams,
};
use spkfix_core::engine::EngineToggles;

use crate::bundle::{discover_bundles, load_bundle, read_text, sha256_hex, write_bundle, write_text, LoadedBundle};
use crate::config::Settings;
use crate::error::{Error, Result};
use crate::formats::{parse_rttm, parse_seeds, write_segments, write_timeline_rttm};
use crate::gateway::GatewaySpec;
use crate::session::Session;

/// File name of the reproducibility manifest written next to every output set.
pub const RUN_MANIFEST: &str = "run-manifest.json";

#[derive(Debug, Parser)]
#[command(name = "spkfix", version, about = "Speaker-attribution correction: simulate, sweep, score and serve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one meeting bundle through the engine and score it.
    Simulate(SimulateArgs),
    /// Run a parameter grid over a set of bundles.
    Sweep(SweepArgs),
    /// Score a hypothesis RTTM against a reference RTTM.
    Evaluate(EvaluateArgs),
    /// Generate synthetic meeting bundles.
    Synth(SynthArgs),
    /// Host a live session over HTTP and WebSocket.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set loop.interval=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        for o in &self.overrides {
            s.set_override(o)?;
        }
        Ok(s)
    }
}

#[derive(Debug, Args)]
pub struct GatewayArgs {
    /// HTTP text-generation endpoint.
    #[arg(long, value_name = "URL", conflicts_with = "mock")]
    pub gateway: Option<String>,
    /// Offline gateway: `echo`, `rules` or `scripted:<path>`.
    #[arg(long, value_name = "NAME")]
    pub mock: Option<String>,
}

impl GatewayArgs {
    fn spec(&self, settings: &Settings) -> Result<GatewaySpec> {
        if let Some(url) = &self.gateway {
            return Ok(GatewaySpec::Http {
                endpoint: url.clone(),
                token_env: settings.llm_token_env.clone().unwrap_or_else(|| crate::gateway::TOKEN_ENV.to_string()),
            });
        }
        match &self.mock {
            Some(m) => GatewaySpec::parse_mock(m),
            None => settings.gateway(),
        }
    }
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Enable sliding-window refinement (default).
    #[arg(long, overrides_with = "no_swm")]
    pub swm: bool,
    /// Disable sliding-window refinement.
    #[arg(long)]
    pub no_swm: bool,
    /// Online-enrollment cap per speaker; 0 disables online enrollment.
    #[arg(long, value_name = "N")]
    pub oe: Option<usize>,
    /// Segments between display ticks.
    #[arg(long, value_name = "I")]
    pub interval: Option<usize>,
    /// Correction budget per session.
    #[arg(long, value_name = "N")]
    pub limit: Option<usize>,
    /// Display mode: `summary` or `conversation`.
    #[arg(long, value_name = "MODE")]
    pub display: Option<String>,
}

impl PipelineArgs {
    fn swm_enabled(&self) -> bool {
        !self.no_swm
    }

    /// Resolved config and engine toggles.
    fn resolve(&self, settings: &Settings) -> Result<(SessionConfig, EngineToggles)> {
        let swm = self.swm_enabled();
        let mut s = settings.clone();
        if let Some(n) = self.oe {
            s.max_online_enrollments = Some(n);
        }
        if let Some(i) = self.interval {
            s.interval = Some(i);
        }
        if let Some(l) = self.limit {
            s.correction_limit = Some(l);
        }
        if let Some(d) = &self.display {
            s.display_mode = Some(
                DisplayMode::parse(d)
                    .ok_or_else(|| Error::Validation(format!("unknown display mode `{d}` (summary, conversation)")))?,
            );
        }
        let cfg = s.session_config(swm)?;
        let toggles = EngineToggles { swm, online_enrollment: cfg.max_online_enrollments > 0 };
        Ok((cfg, toggles))
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Scoring collar in seconds.
    #[arg(long, value_name = "SECONDS")]
    pub collar: Option<f64>,
    /// Speaker mapping: `identity` or `optimal`.
    #[arg(long, value_name = "MAPPING")]
    pub mapping: Option<String>,
}

impl ScoreArgs {
    fn apply(&self, settings: &mut Settings) -> Result<()> {
        if let Some(c) = self.collar {
            settings.collar = Some(c);
        }
        if let Some(m) = &self.mapping {
            settings.mapping = Some(parse_mapping(m)?);
        }
        Ok(())
    }
}

fn parse_mapping(m: &str) -> Result<Mapping> {
    Mapping::parse(m).ok_or_else(|| Error::Validation(format!("unknown mapping `{m}` (identity, optimal)")))
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Meeting bundle directory.
    #[arg(long)]
    pub bundle: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[command(flatten)]
    pub gateway: GatewayArgs,
    /// Deterministic oracle user (default).
    #[arg(long, overrides_with = "gateway_user")]
    pub oracle_user: bool,
    /// Simulate the user through the text gateway instead of the oracle.
    #[arg(long)]
    pub gateway_user: bool,
    /// Never send feedback.
    #[arg(long)]
    pub no_corrections: bool,
    /// Run seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for report, hypothesis, transcript and audit log.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// A bundle directory or a directory of bundles. Repeatable.
    #[arg(long = "bundles", required = true)]
    pub bundles: Vec<PathBuf>,
    /// Grid definition (TOML).
    #[arg(long)]
    pub grid: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub gateway: GatewayArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Reference RTTM.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Hypothesis RTTM.
    #[arg(long)]
    pub hyp: PathBuf,
    #[command(flatten)]
    pub score: ScoreArgs,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory; with `--count` above 1 it holds one bundle per meeting.
    #[arg(long)]
    pub out: PathBuf,
    /// Generator parameters (TOML); flags below override it.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of meetings, with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long)]
    pub speakers: Option<usize>,
    /// Meeting length in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub merge_rate: Option<f64>,
    #[arg(long)]
    pub confusion_rate: Option<f64>,
    #[arg(long)]
    pub vote_noise: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Take enrollment seeds from this bundle.
    #[arg(long, conflicts_with = "seeds", required_unless_present = "seeds")]
    pub bundle: Option<PathBuf>,
    /// Enrollment seeds (JSONL).
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub gateway: GatewayArgs,
    /// Listen address.
    #[arg(long, default_value = "127.0.0.1:7070")]
    pub listen: String,
}

/// Everything needed to rerun a command and get identical outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub gateway: GatewaySpec,
    pub config: serde_json::Value,
    /// Input path → SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output file name → SHA-256.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    fn new(command: &str, gateway: &GatewaySpec, config: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            argv: std::env::args().collect(),
            gateway: gateway.clone(),
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    fn add_bundle(&mut self, b: &LoadedBundle) {
        for entry in b.manifest.files.values() {
            self.inputs.insert(b.dir.join(&entry.path).display().to_string(), entry.sha256.clone());
        }
    }

    /// Writes `text` under `dir` and records its checksum.
    fn emit(&mut self, dir: &Path, name: &str, text: &str) -> Result<()> {
        write_text(&dir.join(name), text)?;
        self.outputs.insert(name.to_string(), sha256_hex(text.as_bytes()));
        Ok(())
    }

    fn finish(self, dir: &Path) -> Result<()> {
        write_text(&dir.join(RUN_MANIFEST), &pretty(&self))
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable output") + "\n"
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "na".to_string(), |x| format!("{x:.6}"))
}

/// `key=value` lines for a metrics report.
pub fn report_lines(r: &MetricsReport) -> String {
    let mut s = String::new();
    for (k, v) in [
        ("der", format!("{:.6}", r.der)),
        ("miss", format!("{:.6}", r.miss)),
        ("fa", format!("{:.6}", r.fa)),
        ("conf", format!("{:.6}", r.conf)),
        ("t_total", format!("{:.6}", r.t_total)),
        ("t_miss", format!("{:.6}", r.t_miss)),
        ("t_fa", format!("{:.6}", r.t_fa)),
        ("t_conf", format!("{:.6}", r.t_conf)),
        ("im_der", fmt_opt(r.im_der)),
        ("im_serr", fmt_opt(r.im_serr)),
        ("collar", format!("{}", r.collar)),
        ("mapping", r.mapping.as_str().to_string()),
    ] {
        s.push_str(&format!("{k}={v}\n"));
    }
    s
}

/// Parses and runs a command line, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Synth(a) => synth(a),
        Command::Serve(a) => serve(a),
    }
}

fn load(dir: &Path) -> Result<LoadedBundle> {
    let b = load_bundle(dir)?;
    for w in &b.warnings {
        log::warn!("{}: {w}", dir.display());
    }
    Ok(b)
}

fn build_gateway(spec: &GatewaySpec) -> Result<Box<dyn TextGateway + Send>> {
    if let GatewaySpec::Http { token_env, .. } = spec {
        if std::env::var(token_env).is_err() {
            log::warn!("{token_env} is not set; calling the gateway without a token");
        }
    }
    spec.build()
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut settings = a.config.settings()?;
    a.score.apply(&mut settings)?;
    let (cfg, engine_toggles) = a.pipeline.resolve(&settings)?;
    let gw = a.gateway.spec(&settings)?;
    let loaded = load(&a.bundle)?;
    let toggles = RunToggles {
        swm: engine_toggles.swm,
        oe: engine_toggles.online_enrollment,
        corrections: !a.no_corrections,
        oracle_user: !a.gateway_user,
    };
    let spec = RunSpec { mapping: settings.mapping(), ..RunSpec::new(cfg, toggles, a.seed) };
    let mut llm = build_gateway(&gw)?;
    let baseline = run_meeting(&loaded.bundle, &spec.baseline_of(), &mut *llm)?;
    let mut outcome = run_meeting(&loaded.bundle, &spec, &mut *llm)?;
    outcome.report = spkfix_core::simulator::meeting_row(&outcome, &baseline.report).report;

    let mut text = format!("meeting={}\nrun={}\n", outcome.meeting_id, toggles.label());
    text.push_str(&report_lines(&outcome.report));
    text.push_str(&format!(
        "corrections={}\nsplits={}\nminutes={:.6}\n",
        outcome.corrections_applied, outcome.splits, outcome.minutes
    ));
    print!("{text}");

    if let Some(out) = &a.out {
        let mut m = RunManifest::new("simulate", &gw, serde_json::to_value(&spec).expect("spec serializes"));
        m.add_bundle(&loaded);
        m.emit(out, "report.txt", &text)?;
        m.emit(out, "report.json", &pretty(&outcome.report))?;
        let hyp = Timeline::from_segments(outcome.transcript.segments());
        m.emit(out, "hyp.rttm", &write_timeline_rttm(&outcome.meeting_id, &hyp))?;
        m.emit(out, "transcript.jsonl", &write_segments(outcome.transcript.segments()))?;
        m.emit(out, "audit.json", &pretty(&outcome.audit))?;
        m.finish(out)?;
    }
    Ok(())
}

/// Grid file layout. Toggle sets are `+`-joined names from `swm`, `oe`,
/// `oracle` (corrections by the oracle user) and `gateway` (corrections by
/// the gateway-simulated user); `baseline` is the empty set.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mapping: Option<String>,
    #[serde(default)]
    pub display_modes: Vec<String>,
    #[serde(default)]
    pub intervals: Vec<usize>,
    #[serde(default)]
    pub correction_limits: Vec<usize>,
    #[serde(default)]
    pub online_enrollments: Vec<usize>,
    #[serde(default)]
    pub toggles: Vec<String>,
}

pub fn parse_toggles(s: &str) -> Result<RunToggles> {
    let mut t = RunToggles { swm: false, oe: false, corrections: false, oracle_user: true };
    if s.trim() == "baseline" {
        return Ok(t);
    }
    for part in s.split('+').map(str::trim) {
        match part {
            "swm" => t.swm = true,
            "oe" => t.oe = true,
            "oracle" => t.corrections = true,
            "gateway" => {
                t.corrections = true;
                t.oracle_user = false;
            }
            _ => return Err(Error::Validation(format!("unknown toggle `{part}` in `{s}`"))),
        }
    }
    Ok(t)
}

impl GridFile {
    pub fn into_grid(self, base: SessionConfig, settings: &Settings) -> Result<SweepGrid> {
        let mut g = SweepGrid::new(base);
        g.seed = self.seed;
        g.mapping = match &self.mapping {
            Some(m) => parse_mapping(m)?,
            None => settings.mapping(),
        };
        g.display_modes = self
            .display_modes
            .iter()
            .map(|d| DisplayMode::parse(d).ok_or_else(|| Error::Validation(format!("unknown display mode `{d}`"))))
            .collect::<Result<_>>()?;
        g.intervals = self.intervals;
        g.correction_limits = self.correction_limits;
        g.online_enrollments = self.online_enrollments;
        g.toggles = self.toggles.iter().map(|s| parse_toggles(s)).collect::<Result<_>>()?;
        for p in g.points() {
            p.config(&g.base).validate()?;
        }
        Ok(g)
    }
}

/// One line per grid point.
pub fn sweep_lines(r: &SweepResult) -> String {
    let mut s = String::new();
    for p in &r.points {
        let a = &p.aggregate;
        s.push_str(&format!(
            "run={} display={} interval={} limit={} oe={} mean_der={:.6} im_der={} im_serr={} t={} p={} corrections_per_min={:.6}\n",
            p.point.toggles.label(),
            p.point.display_mode.as_str(),
            p.point.interval,
            p.point.correction_limit,
            p.point.max_online_enrollments,
            a.mean_der,
            fmt_opt(a.mean_im_der),
            fmt_opt(a.mean_im_serr),
            fmt_opt(a.significance.as_ref().map(|x| x.t_stat)),
            a.significance.as_ref().map_or_else(|| "na".to_string(), |x| format!("{:.3e}", x.p_one_sided)),
            a.corrections_per_minute,
        ));
    }
    s
}

fn sweep_cmd(a: SweepArgs) -> Result<()> {
    let settings = a.config.settings()?;
    let base = settings.session_config(true)?;
    let grid_text = read_text(&a.grid)?;
    let file: GridFile = toml::from_str(&grid_text).map_err(|e| Error::Config(format!("{}: {e}", a.grid.display())))?;
    let grid = file.into_grid(base, &settings)?;
    let gw = a.gateway.spec(&settings)?;

    let mut loaded = Vec::new();
    for root in &a.bundles {
        for dir in discover_bundles(root)? {
            loaded.push(load(&dir)?);
        }
    }
    let bundles: Vec<MeetingBundle> = loaded.iter().map(|l| l.bundle.clone()).collect();
    let mut llm = build_gateway(&gw)?;
    let result = sweep(&bundles, &grid, &mut *llm)?;

    let lines = sweep_lines(&result);
    print!("{lines}");
    let mut m = RunManifest::new("sweep", &gw, serde_json::to_value(&grid).expect("grid serializes"));
    m.inputs.insert(a.grid.display().to_string(), sha256_hex(grid_text.as_bytes()));
    for l in &loaded {
        m.add_bundle(l);
    }
    m.emit(&a.out, "sweep.json", &pretty(&result))?;
    m.emit(&a.out, "sweep.txt", &lines)?;
    m.finish(&a.out)
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let mut settings = Settings::default();
    a.score.apply(&mut settings)?;
    let rf = a.reference.display().to_string();
    let hf = a.hyp.display().to_string();
    let reference = parse_rttm(&read_text(&a.reference)?, &rf)?;
    let hyp = parse_rttm(&read_text(&a.hyp)?, &hf)?;
    let report = compute_der(
        &Timeline::from_reference(&reference),
        &Timeline::from_reference(&hyp),
        settings.collar.unwrap_or(0.0),
        settings.mapping(),
    )?;
    if a.json {
        print!("{}", pretty(&report));
    } else {
        print!("{}", report_lines(&report));
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut p = match &a.params {
        Some(path) => toml::from_str::<SynthParams>(&read_text(path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        None => SynthParams::default(),
    };
    if let Some(v) = a.seed {
        p.seed = v;
    }
    if let Some(v) = a.speakers {
        p.speakers = v;
    }
    if let Some(v) = a.duration {
        p.duration = v;
    }
    if let Some(v) = a.merge_rate {
        p.merge_rate = v;
    }
    if let Some(v) = a.confusion_rate {
        p.confusion_rate = v;
    }
    if let Some(v) = a.vote_noise {
        p.vote_noise = v;
    }
    if a.count == 0 {
        return Err(Error::Validation("--count must be at least 1".to_string()));
    }
    let mut m = RunManifest::new("synth", &GatewaySpec::Echo, serde_json::to_value(&p).expect("params serialize"));
    for k in 0..a.count {
        let params = SynthParams { seed: p.seed + k, ..p.clone() };
        let bundle = synth_meeting(&params)?;
        let dir = if a.count == 1 { a.out.clone() } else { a.out.join(&bundle.meeting_id) };
        let manifest = write_bundle(&dir, &bundle)?;
        let rel = dir.strip_prefix(&a.out).unwrap_or(&dir);
        for e in manifest.files.values() {
            m.outputs.insert(rel.join(&e.path).display().to_string(), e.sha256.clone());
        }
        println!("{}", dir.display());
    }
    m.finish(&a.out)
}

fn serve(a: ServeArgs) -> Result<()> {
    let settings = a.config.settings()?;
    let (cfg, toggles) = a.pipeline.resolve(&settings)?;
    let seeds = match (&a.bundle, &a.seeds) {
        (Some(dir), _) => load(dir)?.bundle.seeds,
        (None, Some(path)) => parse_seeds(&read_text(path)?, &path.display().to_string(), None)?,
        (None, None) => unreachable!("clap requires one of --bundle/--seeds"),
    };
    let gw = a.gateway.spec(&settings)?;
    let session = Arc::new(Session::open(cfg, toggles, seeds, build_gateway(&gw)?)?);
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Runtime(e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&a.listen)
            .await
            .map_err(|e| Error::Runtime(format!("bind {}: {e}", a.listen)))?;
        let addr = listener.local_addr().map_err(|e| Error::Runtime(e.to_string()))?;
        println!("listening on {addr}");
        crate::server::serve(session, listener).await.map_err(|e| Error::Runtime(e.to_string()))
    })
}
