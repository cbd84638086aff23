use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use eqlearn::dnvi::StageSolver;
use eqlearn::eval::{
    exploiter_train, exploitability, measure_exploitability, play_match, ExactOptions, ExploiterConfig,
    FirstActionPolicy, MatchConfig, MatchReport, Policy, SearchParams, UniformPolicy,
};
use eqlearn::explore::{DoConfig, GeneratorKind};
use eqlearn::matrix::{exact_ne_2p0s, nash_conv, solve_restricted, RmConfig};
use eqlearn::microdip::{render_dot, render_text, MicroDip};
use eqlearn::rng::rng_from;
use eqlearn::runner::{build_game, peek_checkpoint, train, Checkpoint, GameInstance, ProposalMode, RunConfig};
use eqlearn::stogame::{Game, TabularGame};
use eqlearn::{with_game, StageGame};

#[derive(Parser)]
#[command(name = "eqlearn", version, about = "Equilibrium learning for simultaneous-move games")]
struct Cli {
    #[command(flatten)]
    opts: Overrides,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

impl OnOff {
    fn on(self) -> bool {
        matches!(self, Self::On)
    }
}

/// Global flags. Each one overrides the matching field of the run
/// configuration (from `--config`, a checkpoint, or the defaults).
#[derive(Args, Default)]
struct Overrides {
    /// Run configuration JSON file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// duel9, arena16, tri12, microdip, pennies, chain or random.
    #[arg(long, global = true)]
    game: Option<String>,
    /// Game parameters as inline JSON, e.g. '{"max_turns": 3}'.
    #[arg(long, global = true)]
    game_params: Option<String>,
    #[arg(long, global = true)]
    episodes: Option<usize>,
    #[arg(long, global = true)]
    pretrain_episodes: Option<usize>,
    /// Regret matching iterations per stage game.
    #[arg(long, global = true)]
    rm_iters: Option<usize>,
    /// Proposal draws per state and player.
    #[arg(long, global = true)]
    num_samples: Option<usize>,
    /// Candidates kept per state and player.
    #[arg(long, global = true)]
    num_candidates: Option<usize>,
    #[arg(long, global = true)]
    per_unit_cap: Option<usize>,
    /// Constant exploration rate for every turn.
    #[arg(long, global = true)]
    explore_eps: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    buffer_capacity: Option<usize>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    #[arg(long, global = true)]
    max_train_ratio: Option<f64>,
    #[arg(long, global = true)]
    publish_interval: Option<usize>,
    #[arg(long, global = true)]
    metrics_interval: Option<usize>,
    #[arg(long, global = true)]
    checkpoint_interval: Option<usize>,
    /// normal or npu.
    #[arg(long, global = true)]
    proposal_mode: Option<String>,
    /// Double-oracle generator: none, uniform, local or full.
    #[arg(long, global = true)]
    do_gen: Option<String>,
    #[arg(long, global = true)]
    do_pool: Option<usize>,
    #[arg(long, global = true)]
    do_topk: Option<usize>,
    #[arg(long, global = true)]
    do_eps: Option<f64>,
    #[arg(long, global = true)]
    do_iters: Option<usize>,
    /// Base actions for local modification.
    #[arg(long, global = true)]
    do_nd: Option<usize>,
    /// Write double-oracle checks as JSON lines.
    #[arg(long, global = true)]
    do_trace: bool,
    #[arg(long, global = true)]
    exploitability_probe: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pretrain, then run self-play training.
    Train,
    /// Play a trained agent against a baseline; optionally compute its exact exploitability.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// uniform, first, or a checkpoint path.
        #[arg(long, default_value = "uniform")]
        opponent: String,
        #[arg(long, default_value_t = 100)]
        games: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Exhaustive best-response exploitability (tiny games only).
        #[arg(long)]
        exact: bool,
    },
    /// Train a best-response exploiter against a frozen agent and measure it.
    Exploit {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Exploiter training episodes.
        #[arg(long, default_value_t = 500)]
        train_episodes: usize,
        #[arg(long, default_value_t = 100)]
        games: usize,
        #[arg(long, default_value_t = 3)]
        victim_samples: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Match between agents, one per seat: uniform, first, or checkpoint paths.
    Headtohead {
        #[arg(long = "agent", required = true)]
        agents: Vec<String>,
        #[arg(long, default_value_t = 100)]
        games: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Solve a normal-form game given as {"players", "payoffs"} JSON.
    SolveMatrix {
        /// JSON file, or - for stdin.
        input: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        iters: usize,
        #[arg(long, value_enum, default_value = "on")]
        optimism: OnOff,
        #[arg(long, value_enum, default_value = "on")]
        linear: OnOff,
    },
    /// Most likely proposal actions at a state.
    InspectProposal {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 0)]
        player: usize,
        /// Hex-encoded state; the initial state by default.
        #[arg(long)]
        state: Option<String>,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Most visited value-table entries.
    DumpValues {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 20)]
        top: usize,
    },
    /// Print a micro-dip state as text and write it as Graphviz DOT.
    Render {
        /// Hex-encoded state; the initial state by default.
        #[arg(long)]
        state: Option<String>,
        /// DOT output path; `<out-dir>/state.dot` by default.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
}

/// Human-readable states for reports.
trait Describe: Game + 'static {
    fn describe_state(&self, s: &Self::State) -> String;
}

impl Describe for MicroDip {
    fn describe_state(&self, s: &Self::State) -> String {
        render_text(&self.map, s)
    }
}

impl Describe for TabularGame {
    fn describe_state(&self, s: &Self::State) -> String {
        format!("state {s}")
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Result<Vec<u8>> {
    if s.len() % 2 != 0 {
        bail!("hex state has odd length");
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).map_err(|e| anyhow!("bad hex state: {e}")))
        .collect()
}

impl Overrides {
    fn base_config(&self) -> Result<Option<RunConfig>> {
        let Some(path) = &self.config else { return Ok(None) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(Some(RunConfig::from_json(&text)?))
    }

    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        macro_rules! set {
            ($($flag:ident => $field:expr),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() { $field = v; })*
            };
        }
        if let Some(g) = &self.game {
            if *g != cfg.game {
                cfg.game_params = json!({});
            }
            cfg.game = g.clone();
        }
        if let Some(p) = &self.game_params {
            cfg.game_params = serde_json::from_str(p).context("--game-params is not valid JSON")?;
        }
        set!(
            seed => cfg.seed,
            workers => cfg.workers,
            episodes => cfg.episodes,
            pretrain_episodes => cfg.pretrain_episodes,
            rm_iters => cfg.solver.iterations,
            num_samples => cfg.num_samples,
            num_candidates => cfg.num_candidates,
            alpha => cfg.alpha,
            buffer_capacity => cfg.buffer_capacity,
            batch_size => cfg.batch_size,
            max_train_ratio => cfg.max_train_ratio,
            publish_interval => cfg.publish_interval,
            metrics_interval => cfg.metrics_interval,
            checkpoint_interval => cfg.checkpoint_interval,
        );
        if self.per_unit_cap.is_some() {
            cfg.per_unit_cap = self.per_unit_cap;
        }
        if let Some(e) = self.explore_eps {
            cfg.explore.base = e;
            cfg.explore.first_turns.clear();
        }
        if let Some(m) = &self.proposal_mode {
            cfg.proposal_mode = m.parse::<ProposalMode>()?;
        }
        let tweaks = self.do_pool.is_some()
            || self.do_topk.is_some()
            || self.do_eps.is_some()
            || self.do_iters.is_some()
            || self.do_nd.is_some();
        match self.do_gen.as_deref() {
            Some("none") => {
                if tweaks {
                    bail!("--do-gen none conflicts with other --do-* flags");
                }
                cfg.double_oracle = None;
            }
            Some(g) => {
                let generator: GeneratorKind = g.parse()?;
                cfg.double_oracle.get_or_insert_with(DoConfig::training).generator = generator;
            }
            None => {}
        }
        if tweaks {
            let d = cfg.double_oracle.get_or_insert_with(DoConfig::training);
            set!(
                do_pool => d.pool_size,
                do_topk => d.top_k,
                do_eps => d.epsilon,
                do_iters => d.iterations,
                do_nd => d.base_count,
            );
        }
        cfg.do_trace |= self.do_trace;
        cfg.exploitability_probe |= self.exploitability_probe;
        cfg.validate()?;
        Ok(())
    }

    /// Configuration for commands that start from scratch.
    fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = self.base_config()?.unwrap_or_default();
        self.apply(&mut cfg)?;
        Ok(cfg)
    }

    /// Configuration stored in a checkpoint, with flags applied on top.
    fn checkpoint_config(&self, path: &Path) -> Result<RunConfig> {
        let mut cfg = match self.base_config()? {
            Some(c) => c,
            None => {
                let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
                peek_checkpoint(&bytes)?.1
            }
        };
        self.apply(&mut cfg)?;
        Ok(cfg)
    }
}

fn search_params(cfg: &RunConfig) -> SearchParams {
    SearchParams {
        num_samples: cfg.num_samples,
        num_candidates: cfg.num_candidates,
        per_unit_cap: cfg.per_unit_cap,
        solver: StageSolver::RegretMatching(cfg.solver.clone()),
        double_oracle: cfg.double_oracle.clone(),
    }
}

fn load_agent<G: Describe>(game: &G, spec: &str, cfg: &RunConfig) -> Result<Arc<dyn Policy<G>>> {
    Ok(match spec {
        "uniform" => Arc::new(UniformPolicy { cap: 4096 }),
        "first" => Arc::new(FirstActionPolicy),
        path => {
            let ckpt = Checkpoint::load(game, Path::new(path)).with_context(|| format!("loading {path}"))?;
            Arc::new(ckpt.agent(path, search_params(cfg))?)
        }
    })
}

fn write_report<A>(out_dir: Option<&Path>, report: &MatchReport<A>, extra: Value) -> Result<Value> {
    let mut summary = report.summary_json();
    if let (Value::Object(m), Value::Object(e)) = (&mut summary, extra) {
        m.extend(e);
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("matches.csv"), report.to_csv())?;
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(summary)
}

fn match_config(games: usize, seed: u64, threads: usize) -> MatchConfig {
    MatchConfig {
        threads,
        ..MatchConfig::new(games, seed)
    }
}

fn cmd_train<G: Describe>(game: &G, cfg: &RunConfig, out_dir: &Path) -> Result<Value> {
    let out = train(game, cfg, Some(out_dir))?;
    let s = &out.stats;
    Ok(json!({
        "game": game.name(),
        "out_dir": out_dir.display().to_string(),
        "checkpoint": out_dir.join("checkpoint.bin").display().to_string(),
        "episodes": s.episodes,
        "produced": s.produced,
        "consumed": s.consumed,
        "snapshots": s.snapshots,
        "value_states": out.checkpoint.values.len(),
        "root_value": out.checkpoint.values.get(&game.initial_state()),
    }))
}

fn cmd_evaluate<G: Describe>(
    game: &G,
    cfg: &RunConfig,
    checkpoint: &Path,
    opponent: &str,
    mcfg: &MatchConfig,
    exact: bool,
    out_dir: Option<&Path>,
) -> Result<Value> {
    let agent = load_agent(game, &checkpoint.display().to_string(), cfg)?;
    let opp = load_agent(game, opponent, cfg)?;
    let mut seats: Vec<&dyn Policy<G>> = vec![&*agent];
    seats.extend(std::iter::repeat_n(&*opp, game.num_players() - 1));
    let report = play_match(game, &seats, mcfg)?;
    let mut extra = json!({ "opponent": opponent });
    if exact {
        let opts = ExactOptions {
            seed: cfg.seed,
            ..ExactOptions::default()
        };
        let r = exploitability(game, &*agent, opts)?;
        extra["exploitability"] = json!({
            "nash_conv": r.nash_conv,
            "profile": r.profile,
            "best_responses": r.best_responses,
        });
    }
    write_report(out_dir, &report, extra)
}

fn cmd_exploit<G: Describe>(
    game: &G,
    cfg: &RunConfig,
    checkpoint: &Path,
    train_episodes: usize,
    victim_samples: usize,
    mcfg: &MatchConfig,
    out_dir: Option<&Path>,
) -> Result<Value> {
    let victim = load_agent(game, &checkpoint.display().to_string(), cfg)?;
    let ecfg = ExploiterConfig {
        episodes: train_episodes,
        num_samples: cfg.num_samples,
        num_candidates: cfg.num_candidates,
        victim_samples,
        double_oracle: cfg.double_oracle.clone(),
        ..ExploiterConfig::default()
    };
    let mut rng = rng_from(cfg.seed);
    let exploiter = exploiter_train(game, Arc::clone(&victim), &ecfg, &mut rng)?;
    let report = measure_exploitability(game, &*victim, &exploiter, mcfg)?;
    write_report(out_dir, &report, json!({ "exploiter_episodes": train_episodes }))
}

fn cmd_headtohead<G: Describe>(
    game: &G,
    cfg: &RunConfig,
    specs: &[String],
    mcfg: &MatchConfig,
    out_dir: Option<&Path>,
) -> Result<Value> {
    let agents = specs
        .iter()
        .map(|s| load_agent(game, s, cfg))
        .collect::<Result<Vec<_>>>()?;
    let seats: Vec<&dyn Policy<G>> = agents.iter().map(|a| &**a).collect();
    let report = play_match(game, &seats, mcfg)?;
    write_report(out_dir, &report, json!({}))
}

fn cmd_inspect<G: Describe>(game: &G, checkpoint: &Path, player: usize, state: Option<&str>, top: usize) -> Result<Value> {
    let ckpt = Checkpoint::load(game, checkpoint)?;
    let s = match state {
        Some(h) => game.decode_state(&unhex(h)?)?,
        None => game.initial_state(),
    };
    if player >= game.num_players() {
        bail!("player {player} out of range");
    }
    let model = ckpt.frozen.as_ref().unwrap_or(&ckpt.proposal);
    let mut actions = match model.normalized(&s, player) {
        Some(list) => list,
        None => Vec::new(),
    };
    actions.sort_by(|a, b| b.1.total_cmp(&a.1));
    actions.truncate(top);
    Ok(json!({
        "state": hex(&game.encode_state(&s)),
        "player": player,
        "known": !actions.is_empty(),
        "actions": actions.iter().map(|(a, p)| json!({
            "action": game.describe_action(a),
            "probability": p,
        })).collect::<Vec<_>>(),
    }))
}

fn cmd_dump_values<G: Describe>(game: &G, checkpoint: &Path, top: usize) -> Result<Value> {
    let ckpt = Checkpoint::load(game, checkpoint)?;
    let mut entries: Vec<_> = ckpt
        .values
        .entries()
        .map(|(s, e)| (e.visits, game.encode_state(s), s, e))
        .collect();
    entries.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    entries.truncate(top);
    Ok(json!({
        "game": ckpt.game,
        "states": ckpt.values.len(),
        "entries": entries.iter().map(|(visits, bytes, s, e)| json!({
            "state": hex(bytes),
            "turn": game.turn(s),
            "visits": visits,
            "values": e.values,
            "text": game.describe_state(s),
        })).collect::<Vec<_>>(),
    }))
}

fn game_from(cfg: &RunConfig) -> Result<GameInstance> {
    Ok(build_game(&cfg.game, &cfg.game_params)?)
}

fn run(cli: Cli) -> Result<Value> {
    let o = &cli.opts;
    let out_dir = o.out_dir.as_deref();
    match &cli.cmd {
        Cmd::Train => {
            let cfg = o.run_config()?;
            let dir = out_dir
                .map(Path::to_owned)
                .unwrap_or_else(|| PathBuf::from("runs").join(&cfg.game));
            with_game!(&game_from(&cfg)?, g => cmd_train(g, &cfg, &dir))
        }
        Cmd::Evaluate {
            checkpoint,
            opponent,
            games,
            threads,
            exact,
        } => {
            let cfg = o.checkpoint_config(checkpoint)?;
            let mcfg = match_config(*games, cfg.seed, *threads);
            with_game!(&game_from(&cfg)?, g => cmd_evaluate(g, &cfg, checkpoint, opponent, &mcfg, *exact, out_dir))
        }
        Cmd::Exploit {
            checkpoint,
            train_episodes,
            games,
            victim_samples,
            threads,
        } => {
            let cfg = o.checkpoint_config(checkpoint)?;
            let mcfg = match_config(*games, cfg.seed, *threads);
            with_game!(&game_from(&cfg)?, g => cmd_exploit(g, &cfg, checkpoint, *train_episodes, *victim_samples, &mcfg, out_dir))
        }
        Cmd::Headtohead { agents, games, threads } => {
            let first_ckpt = agents.iter().find(|a| *a != "uniform" && *a != "first");
            let cfg = match first_ckpt {
                Some(p) if o.game.is_none() => o.checkpoint_config(Path::new(p))?,
                _ => o.run_config()?,
            };
            let mcfg = match_config(*games, cfg.seed, *threads);
            with_game!(&game_from(&cfg)?, g => cmd_headtohead(g, &cfg, agents, &mcfg, out_dir))
        }
        Cmd::SolveMatrix {
            input,
            iters,
            optimism,
            linear,
        } => {
            let text = if input.as_os_str() == "-" {
                std::io::read_to_string(std::io::stdin())?
            } else {
                std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?
            };
            let game = StageGame::from_json(&serde_json::from_str(&text)?)?;
            let mut solver = o.run_config()?.solver;
            solver.iterations = *iters;
            solver.rm = RmConfig {
                linear: linear.on(),
                optimism: optimism.on(),
            };
            let seed = o.seed.unwrap_or(0);
            let eq = solve_restricted(&game, &solver, &mut rng_from(seed))?;
            let mut out = json!({
                "strategies": eq.strategies.iter().map(|s| s.probs().to_vec()).collect::<Vec<_>>(),
                "values": eq.values,
                "iterations": eq.iterations_run,
                "nash_conv": nash_conv(&game, &eq.strategies)?,
                "seed": seed,
            });
            if game.num_players() == 2 && game.find_constant_sum()?.is_some() {
                let ex = exact_ne_2p0s(&game)?;
                out["exact"] = json!({
                    "strategies": ex.strategies.iter().map(|s| s.probs().to_vec()).collect::<Vec<_>>(),
                    "values": ex.values,
                });
            }
            Ok(out)
        }
        Cmd::InspectProposal {
            checkpoint,
            player,
            state,
            top,
        } => {
            let cfg = o.checkpoint_config(checkpoint)?;
            with_game!(&game_from(&cfg)?, g => cmd_inspect(g, checkpoint, *player, state.as_deref(), *top))
        }
        Cmd::DumpValues { checkpoint, top } => {
            let cfg = o.checkpoint_config(checkpoint)?;
            with_game!(&game_from(&cfg)?, g => cmd_dump_values(g, checkpoint, *top))
        }
        Cmd::Render { state, dot } => {
            let cfg = o.run_config()?;
            let GameInstance::MicroDip(g) = game_from(&cfg)? else {
                bail!("render needs a micro-dip game, not '{}'", cfg.game);
            };
            let s = match state {
                Some(h) => g.decode_state(&unhex(h)?)?,
                None => g.initial_state(),
            };
            let text = render_text(&g.map, &s);
            let path = match (dot, out_dir) {
                (Some(p), _) => p.clone(),
                (None, Some(d)) => {
                    std::fs::create_dir_all(d)?;
                    d.join("state.dot")
                }
                (None, None) => PathBuf::from("state.dot"),
            };
            std::fs::write(&path, render_dot(&g.map, &s))?;
            Ok(json!({ "text": text, "dot": path.display().to_string(), "state": hex(&g.encode_state(&s)) }))
        }
    }
}

fn error_json(e: &anyhow::Error) -> Value {
    let kind = e
        .chain()
        .find_map(|c| c.downcast_ref::<eqlearn::Error>())
        .map_or("error", eqlearn::Error::kind);
    json!({ "error": kind, "message": format!("{e:#}") })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let render = matches!(cli.cmd, Cmd::Render { .. });
    match run(cli) {
        Ok(v) => {
            let out = if render {
                log::info!("wrote {}", v["dot"]);
                v["text"].as_str().unwrap_or_default().to_owned()
            } else {
                serde_json::to_string_pretty(&v).expect("output serializes")
            };
            // a closed pipe (e.g. `| head`) is not an error
            let _ = writeln!(std::io::stdout(), "{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}
