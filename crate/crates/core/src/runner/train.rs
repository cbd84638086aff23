use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Mutex, RwLock};
use std::thread::ThreadId;
use std::time::Duration;

use serde_json::json;

use super::buffer::ReplayBuffer;
use super::checkpoint::Checkpoint;
use super::config::{ProposalMode, RunConfig};
use super::metrics::{IntervalStats, MetricsRow, MetricsSink};
use crate::dnvi::{pretrain_episode, selfplay_episode, StageSolver, TrainTarget, ValueTable};
use crate::error::{Error, Result};
use crate::eval::{exploitability, AgentHandle, ExactOptions, SearchParams};
use crate::explore::DoLogEntry;
use crate::proposal::ProposalModel;
use crate::rng::{derive, derived_rng, EPISODE, PRETRAIN, TRAINER, WORKER};
use crate::stogame::Game;

/// Tables published to the workers. Never mutated once published.
pub struct Snapshot<G: Game> {
    pub values: Arc<ValueTable<G::State>>,
    pub proposal: Arc<ProposalModel<G::State, G::Action>>,
    pub version: u64,
}

impl<G: Game> Clone for Snapshot<G> {
    fn clone(&self) -> Self {
        Self {
            values: Arc::clone(&self.values),
            proposal: Arc::clone(&self.proposal),
            version: self.version,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainStats {
    pub pretrain_targets: u64,
    pub episodes: u64,
    /// Targets pushed to the buffer.
    pub produced: u64,
    /// Targets drawn from the buffer and applied.
    pub consumed: u64,
    pub batches: u64,
    /// Times the trainer stopped because consumed would exceed the ratio.
    pub throttle_events: u64,
    pub snapshots: u64,
    pub buffer_len: usize,
    pub buffer_evicted: u64,
}

pub struct TrainOutcome<G: Game> {
    pub checkpoint: Checkpoint<G>,
    pub metrics: Vec<MetricsRow>,
    pub stats: TrainStats,
}

impl<G: Game> TrainOutcome<G> {
    /// Search agent over the final tables, with the proposal the workers
    /// used.
    pub fn agent(&self, label: &str, search: SearchParams) -> Result<AgentHandle<G>> {
        self.checkpoint.agent(label, search)
    }
}

impl<G: Game> Checkpoint<G> {
    pub fn agent(&self, label: &str, search: SearchParams) -> Result<AgentHandle<G>> {
        let proposal = self.frozen.as_ref().unwrap_or(&self.proposal).clone();
        AgentHandle::new(label, Arc::new(proposal), Arc::new(self.values.clone()), search, None)
    }
}

/// Summary of one finished self-play episode.
struct EpisodeReport {
    index: usize,
    turns: usize,
    targets: usize,
    root_value: f64,
    do_added: usize,
    do_calls: usize,
    do_log: Vec<DoLogEntry>,
}

/// Live tables. Only the thread that created them may write.
pub(crate) struct Learner<G: Game> {
    pub(crate) values: ValueTable<G::State>,
    pub(crate) proposal: ProposalModel<G::State, G::Action>,
    pub(crate) owner: ThreadId,
}

impl<G: Game> Learner<G> {
    pub(crate) fn apply(&mut self, cfg: &RunConfig, t: &TrainTarget<G::State, G::Action>) -> Result<()> {
        debug_assert_eq!(
            std::thread::current().id(),
            self.owner,
            "live tables written outside the trainer thread"
        );
        let alpha = cfg.learning_rate(self.values.visits(&t.state));
        self.values.apply(&t.state, &t.values, alpha)?;
        for (p, pt) in t.policies.iter().enumerate() {
            if !pt.actions.is_empty() {
                self.proposal.update_toward(&t.state, p, &pt.actions, &pt.probs, 1.0)?;
            }
        }
        Ok(())
    }
}

struct Run<'a, G: Game> {
    game: &'a G,
    cfg: &'a RunConfig,
    out_dir: Option<PathBuf>,
    learner: Learner<G>,
    frozen: Option<Arc<ProposalModel<G::State, G::Action>>>,
    snapshot: Snapshot<G>,
    stats: TrainStats,
    interval: IntervalStats,
    sink: MetricsSink,
    trainer_rng: crate::rng::GameRng,
    hook: &'a mut dyn FnMut(&Snapshot<G>),
}

impl<G: Game> Run<'_, G> {
    fn publish(&mut self) {
        let proposal = match &self.frozen {
            Some(f) => Arc::clone(f),
            None => Arc::new(self.learner.proposal.clone()),
        };
        self.snapshot = Snapshot {
            values: Arc::new(self.learner.values.clone()),
            proposal,
            version: self.snapshot.version + 1,
        };
        self.stats.snapshots += 1;
        (self.hook)(&self.snapshot);
    }

    fn checkpoint(&self) -> Checkpoint<G> {
        Checkpoint {
            game: self.game.name().to_owned(),
            config: self.cfg.clone(),
            version: self.snapshot.version,
            episodes: self.stats.episodes,
            values: self.learner.values.clone(),
            proposal: self.learner.proposal.clone(),
            frozen: self.frozen.as_deref().cloned(),
        }
    }

    fn save(&self, name: &str) -> Result<()> {
        if let Some(dir) = &self.out_dir {
            self.checkpoint().save(self.game, &dir.join(name))?;
        }
        Ok(())
    }

    fn probe(&self) -> Option<f64> {
        if !self.cfg.exploitability_probe {
            return None;
        }
        let proposal = self
            .frozen
            .as_deref()
            .cloned()
            .unwrap_or_else(|| self.learner.proposal.clone());
        let search = SearchParams {
            num_samples: self.cfg.num_samples,
            num_candidates: self.cfg.num_candidates,
            per_unit_cap: self.cfg.per_unit_cap,
            solver: StageSolver::RegretMatching(self.cfg.solver.clone()),
            double_oracle: None,
        };
        let opts = ExactOptions {
            seed: self.cfg.seed,
            ..ExactOptions::default()
        };
        let result = AgentHandle::new("probe", Arc::new(proposal), Arc::new(self.learner.values.clone()), search, None)
            .and_then(|agent| exploitability(self.game, &agent, opts));
        match result {
            Ok(r) => Some(r.nash_conv),
            Err(e) => {
                log::warn!("exploitability probe skipped: {e}");
                None
            }
        }
    }

    fn trace(&self, report: &EpisodeReport) {
        let (true, Some(dir)) = (self.cfg.do_trace, &self.out_dir) else { return };
        if report.do_log.is_empty() {
            return;
        }
        let path = dir.join("do_trace.jsonl");
        let write = || -> std::io::Result<()> {
            let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
            for entry in &report.do_log {
                let mut v = serde_json::to_value(entry).expect("log entry serializes");
                v["episode"] = json!(report.index);
                writeln!(f, "{v}")?;
            }
            Ok(())
        };
        if let Err(e) = write() {
            log::warn!("cannot write {}: {e}", path.display());
        }
    }

    fn on_episode(&mut self, report: EpisodeReport, buffer_len: usize) -> Result<()> {
        self.trace(&report);
        self.stats.episodes += 1;
        self.stats.produced += report.targets as u64;
        self.interval.episodes += 1;
        self.interval.turns += report.turns;
        self.interval.root_value += report.root_value;
        self.interval.do_added += report.do_added;
        self.interval.do_calls += report.do_calls;
        let done = self.stats.episodes as usize;
        if done % self.cfg.publish_interval == 0 {
            self.publish();
        }
        if done % self.cfg.metrics_interval == 0 || done == self.cfg.episodes {
            let row = self.interval.row(self.sink.rows.len(), done, buffer_len, self.probe());
            self.sink.record(row);
            self.interval = IntervalStats::default();
        }
        if done % self.cfg.checkpoint_interval == 0 && done != self.cfg.episodes {
            self.save(&format!("checkpoint_{done:06}.bin"))?;
        }
        Ok(())
    }

    fn may_train(&self) -> bool {
        let next = self.stats.consumed + self.cfg.batch_size as u64;
        next as f64 <= self.cfg.max_train_ratio * self.stats.produced as f64
    }

    fn train_batch(&mut self, batch: Vec<TrainTarget<G::State, G::Action>>) -> Result<()> {
        for t in &batch {
            self.learner.apply(self.cfg, t)?;
        }
        self.stats.consumed += batch.len() as u64;
        self.stats.batches += 1;
        Ok(())
    }

    fn throttle(&mut self) {
        self.stats.throttle_events += 1;
        self.interval.throttled = true;
    }

    fn pretrain(&mut self) -> Result<()> {
        let solver = StageSolver::RegretMatching(self.cfg.solver.clone());
        for e in 0..self.cfg.pretrain_episodes {
            let mut rng = derived_rng(self.cfg.seed, PRETRAIN, e as u64);
            let (_, targets) =
                pretrain_episode(self.game, &self.learner.values, self.cfg.num_candidates, &solver, 0, &mut rng)?;
            for t in &targets {
                self.learner.apply(self.cfg, t)?;
            }
            self.stats.pretrain_targets += targets.len() as u64;
        }
        Ok(())
    }

    fn sequential(&mut self) -> Result<()> {
        let mut buffer = ReplayBuffer::new(self.cfg.buffer_capacity);
        let worker_seed = derive(self.cfg.seed, WORKER, 0);
        let spcfg = self.cfg.selfplay();
        for e in 0..self.cfg.episodes {
            let mut rng = derived_rng(worker_seed, EPISODE, e as u64);
            let snap = self.snapshot.clone();
            let ep = selfplay_episode(self.game, &snap.values, &snap.proposal, &spcfg, snap.version, &mut rng)?;
            let report = EpisodeReport {
                index: e,
                turns: ep.trajectory.len(),
                targets: ep.targets.len(),
                root_value: ep.targets.first().map_or(0.0, |t| t.values[0]),
                do_added: ep.do_added,
                do_calls: ep.do_calls,
                do_log: ep.do_log,
            };
            buffer.extend(ep.targets);
            self.on_episode(report, buffer.len())?;
            while self.may_train() {
                let batch = buffer.sample_batch(self.cfg.batch_size, &mut self.trainer_rng);
                self.train_batch(batch)?;
            }
            if !buffer.is_empty() {
                self.throttle();
            }
        }
        self.stats.buffer_len = buffer.len();
        self.stats.buffer_evicted = buffer.evicted();
        Ok(())
    }

    fn threaded(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let game = self.game;
        let buffer = Mutex::new(ReplayBuffer::new(cfg.buffer_capacity));
        let shared = RwLock::new(self.snapshot.clone());
        let next = AtomicUsize::new(0);
        let stop = AtomicBool::new(false);
        let spcfg = cfg.selfplay();
        let (tx, rx) = mpsc::channel::<Result<EpisodeReport>>();
        let mut failure: Option<Error> = None;
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..cfg.workers)
                .map(|w| {
                    let tx = tx.clone();
                    let (buffer, shared, next, stop, spcfg) = (&buffer, &shared, &next, &stop, &spcfg);
                    scope.spawn(move || {
                        let worker_seed = derive(cfg.seed, WORKER, w as u64);
                        while !stop.load(Ordering::Relaxed) {
                            let e = next.fetch_add(1, Ordering::Relaxed);
                            if e >= cfg.episodes {
                                break;
                            }
                            let snap = shared.read().expect("snapshot lock").clone();
                            let mut rng = derived_rng(worker_seed, EPISODE, e as u64);
                            let msg = selfplay_episode(game, &snap.values, &snap.proposal, spcfg, snap.version, &mut rng)
                                .map(|ep| {
                                    let report = EpisodeReport {
                                        index: e,
                                        turns: ep.trajectory.len(),
                                        targets: ep.targets.len(),
                                        root_value: ep.targets.first().map_or(0.0, |t| t.values[0]),
                                        do_added: ep.do_added,
                                        do_calls: ep.do_calls,
                                        do_log: ep.do_log,
                                    };
                                    buffer.lock().expect("buffer lock").extend(ep.targets);
                                    report
                                });
                            let failed = msg.is_err();
                            if tx.send(msg).is_err() || failed {
                                break;
                            }
                        }
                    })
                })
                .collect();
            drop(tx);
            let mut finished = false;
            'outer: loop {
                loop {
                    match rx.try_recv() {
                        Ok(Ok(report)) => {
                            let len = buffer.lock().expect("buffer lock").len();
                            let before = self.snapshot.version;
                            if let Err(e) = self.on_episode(report, len) {
                                failure = Some(e);
                                break 'outer;
                            }
                            if self.snapshot.version != before {
                                *shared.write().expect("snapshot lock") = self.snapshot.clone();
                            }
                        }
                        Ok(Err(e)) => {
                            failure = Some(e);
                            break 'outer;
                        }
                        Err(mpsc::TryRecvError::Empty) => break,
                        Err(mpsc::TryRecvError::Disconnected) => {
                            finished = true;
                            break;
                        }
                    }
                }
                if self.may_train() {
                    let batch = buffer
                        .lock()
                        .expect("buffer lock")
                        .sample_batch(cfg.batch_size, &mut self.trainer_rng);
                    if let Err(e) = self.train_batch(batch) {
                        failure = Some(e);
                        break;
                    }
                } else if finished {
                    break;
                } else {
                    self.throttle();
                    std::thread::sleep(Duration::from_millis(1));
                }
            }
            stop.store(true, Ordering::Relaxed);
            for h in handles {
                if h.join().is_err() && failure.is_none() {
                    failure = Some(Error::Worker("self-play worker panicked".into()));
                }
            }
        });
        let b = buffer.into_inner().expect("buffer lock");
        self.stats.buffer_len = b.len();
        self.stats.buffer_evicted = b.evicted();
        match failure {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Pretraining followed by producer/consumer self-play. With an output
/// directory, writes metrics, periodic checkpoints and `checkpoint.bin`.
pub fn train<G: Game>(game: &G, cfg: &RunConfig, out_dir: Option<&Path>) -> Result<TrainOutcome<G>> {
    train_with_hook(game, cfg, out_dir, &mut |_| {})
}

/// [`train`] calling `hook` on every published snapshot.
pub fn train_with_hook<G: Game>(
    game: &G,
    cfg: &RunConfig,
    out_dir: Option<&Path>,
    hook: &mut dyn FnMut(&Snapshot<G>),
) -> Result<TrainOutcome<G>> {
    cfg.validate()?;
    let sink = match out_dir {
        Some(d) => MetricsSink::create(d)?,
        None => MetricsSink::memory(),
    };
    let learner = Learner {
        values: ValueTable::for_game(game),
        proposal: ProposalModel::new(cfg.smoothing),
        owner: std::thread::current().id(),
    };
    let snapshot = Snapshot {
        values: Arc::new(learner.values.clone()),
        proposal: Arc::new(learner.proposal.clone()),
        version: 0,
    };
    let mut run = Run {
        game,
        cfg,
        out_dir: out_dir.map(Path::to_owned),
        learner,
        frozen: None,
        snapshot,
        stats: TrainStats::default(),
        interval: IntervalStats::default(),
        sink,
        trainer_rng: derived_rng(cfg.seed, TRAINER, 0),
        hook,
    };
    run.pretrain()?;
    if cfg.proposal_mode == ProposalMode::Npu {
        run.frozen = Some(Arc::new(run.learner.proposal.clone()));
    }
    run.publish();
    let result = if cfg.workers == 1 { run.sequential() } else { run.threaded() };
    if let Err(e) = result {
        if let Err(save) = run.save("checkpoint_partial.bin") {
            log::error!("partial checkpoint failed: {save}");
        }
        return Err(e);
    }
    run.save("checkpoint.bin")?;
    let root = run.learner.values.get(&game.initial_state()).to_vec();
    let s = &run.stats;
    run.sink.finish(&json!({
        "game": game.name(),
        "seed": cfg.seed,
        "workers": cfg.workers,
        "pretrain_targets": s.pretrain_targets,
        "episodes": s.episodes,
        "produced": s.produced,
        "consumed": s.consumed,
        "batches": s.batches,
        "throttle_events": s.throttle_events,
        "snapshots": s.snapshots,
        "buffer_len": s.buffer_len,
        "value_states": run.learner.values.len(),
        "proposal_entries": run.learner.proposal.len(),
        "root_value": root,
        "metrics_rows": run.sink.rows.len(),
    }));
    Ok(TrainOutcome {
        checkpoint: run.checkpoint(),
        metrics: std::mem::take(&mut run.sink.rows),
        stats: run.stats,
    })
}
