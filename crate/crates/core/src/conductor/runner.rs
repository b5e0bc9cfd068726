use std::sync::{Arc, MutexGuard};
use std::time::Duration;

use super::engine::{Conductor, ConductorConfig, RunMetrics};
use super::framelog::{LogLine, RunHeader};
use super::mode::ModePolicy;
use super::ConductorError;
use crate::analytics::{aggregate_run_metrics, MetricsRow, RunLog};
use crate::fuzzy::{RuleBase, RuleStore};
use crate::habitat::{Habitat, Scenario, Suite};
use crate::meshbus::{Broker, Bus, ClientId, Frame, LossModel, SharedBus};

/// How a scenario is driven.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub policy: ModePolicy,
    /// Rule base each run starts from; caregiver edits never leak between runs.
    pub rules: RuleBase,
    /// Keep a replayable frame log in the outcome.
    pub record_frames: bool,
    /// Publish on this bus (so remote clients can watch) instead of a private one.
    pub bus: Option<SharedBus>,
    /// Scenario seconds per wall-clock second; `None` runs flat out.
    pub pace: Option<f64>,
    pub seed: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            policy: ModePolicy::default(),
            rules: RuleBase::bundled_default(),
            record_frames: false,
            bus: None,
            pace: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub row: MetricsRow,
    pub log: RunLog,
    pub metrics: RunMetrics,
    pub frames: Vec<LogLine>,
}

struct Driver {
    bus: SharedBus,
    habitat_id: ClientId,
    conductor_id: ClientId,
    frames: Option<Vec<LogLine>>,
}

impl Driver {
    fn lock(&self) -> MutexGuard<'_, Bus> {
        self.bus.lock().expect("bus poisoned")
    }

    fn publish(
        &mut self,
        t: f64,
        from: ClientId,
        frame: Frame,
        conductor: &mut Conductor,
    ) -> Result<(), ConductorError> {
        let (dropped, lost) = {
            let mut bus = self.lock();
            let dropped = bus.publish(from, frame.clone())?;
            (dropped, bus.broker_mut().take_dropped())
        };
        conductor.note_dropped(t, lost);
        if let Some(log) = &mut self.frames {
            let client = if from == self.conductor_id { "conductor" } else { "habitat" };
            log.push(LogLine::Out { t, client: client.to_string(), dropped, frame });
        }
        Ok(())
    }

    /// Delivers queued frames to the conductor until it stops answering.
    fn settle(&mut self, t: f64, conductor: &mut Conductor) -> Result<(), ConductorError> {
        loop {
            let inbox = self.lock().drain(self.conductor_id);
            if inbox.is_empty() {
                return Ok(());
            }
            for frame in inbox {
                let replies = conductor.receive(t, &frame);
                if let Some(log) = &mut self.frames {
                    log.push(LogLine::In { t, frame });
                }
                for r in replies {
                    self.publish(t, self.conductor_id, r, conductor)?;
                }
            }
        }
    }
}

/// Runs one scenario to completion: each tick the simulator publishes, the
/// conductor consumes its inbox and decides, and the simulator picks up the
/// resulting device and game commands.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutcome, ConductorError> {
    let mut scenario = scenario.clone();
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    let n = scenario.devices.len().max(1) as u32;
    let loss = LossModel::new(scenario.loss_probability, n, n, scenario.seed)?;
    let bus = match &opts.bus {
        Some(b) => {
            b.lock().expect("bus poisoned").broker_mut().set_loss_model(loss)?;
            b.clone()
        }
        None => Bus::new(Broker::new(loss)).shared(),
    };
    let cfg = ConductorConfig::from_scenario(&scenario, opts.policy);
    let store = Arc::new(RuleStore::new(opts.rules.clone()));
    let mut conductor = Conductor::new(cfg.clone(), store);
    let mut habitat = Habitat::new(scenario.clone());

    let (habitat_id, conductor_id) = {
        let mut b = bus.lock().expect("bus poisoned");
        let h = b.connect_local(&format!("habitat:{}", scenario.name));
        let c = b.connect_local(&format!("conductor:{}", scenario.name));
        for f in Habitat::subscriptions() {
            b.subscribe(h, f)?;
        }
        for f in Conductor::subscriptions() {
            b.subscribe(c, f)?;
        }
        (h, c)
    };
    let mut d = Driver { bus, habitat_id, conductor_id, frames: None };
    if opts.record_frames {
        d.frames = Some(vec![LogLine::Header(RunHeader {
            scenario: scenario.name.clone(),
            policy: opts.policy,
            config: cfg,
            rules: opts.rules.to_document(),
        })]);
    }
    // Stale retained state from a previous run on a shared bus is not ours.
    d.lock().drain(conductor_id);

    let result = drive(&mut d, &mut habitat, &mut conductor, opts);
    {
        let mut b = d.lock();
        b.detach(habitat_id);
        b.detach(conductor_id);
    }
    let end = result?;
    conductor.finish(end);

    let mut log = RunLog::new(scenario.name.clone(), opts.policy.as_str());
    log.events = conductor.take_events();
    let row = aggregate_run_metrics(std::slice::from_ref(&log))?.remove(0);
    Ok(RunOutcome { row, log, metrics: conductor.metrics().clone(), frames: d.frames.unwrap_or_default() })
}

fn drive(
    d: &mut Driver,
    habitat: &mut Habitat,
    conductor: &mut Conductor,
    opts: &RunOptions,
) -> Result<f64, ConductorError> {
    for f in conductor.initial_frames() {
        d.publish(0.0, d.conductor_id, f, conductor)?;
    }
    for f in d.lock().drain(d.habitat_id) {
        habitat.receive(&f);
    }
    let dt = habitat.scenario().tick_seconds;
    let mut t = 0.0;
    while !habitat.is_finished() {
        t = habitat.clock().now();
        for f in habitat.step() {
            d.publish(t, d.habitat_id, f, conductor)?;
        }
        d.settle(t, conductor)?;
        if let Some(log) = &mut d.frames {
            log.push(LogLine::Tick { t });
        }
        for f in conductor.tick(t)? {
            d.publish(t, d.conductor_id, f, conductor)?;
        }
        d.settle(t, conductor)?;
        for f in d.lock().drain(d.habitat_id) {
            habitat.receive(&f);
        }
        if let Some(speed) = opts.pace.filter(|s| *s > 0.0) {
            std::thread::sleep(Duration::from_secs_f64(dt / speed));
        }
    }
    Ok(t)
}

/// Runs every scenario of a suite in order.
pub fn run_suite(suite: &Suite, opts: &RunOptions) -> Result<Vec<RunOutcome>, ConductorError> {
    suite
        .runs
        .iter()
        .map(|s| {
            log::info!("running {}", s.name);
            run_scenario(s, opts)
        })
        .collect()
}
