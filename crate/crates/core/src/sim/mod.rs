//! Deterministic discrete-event simulation of one road segment with one
//! RSU and a CA behind it.
//!
//! All randomness (beacon phases, channel loss) comes from a single
//! ChaCha stream seeded by the configuration, so a `(config, seed)` pair
//! always produces byte-identical logs and metrics.

mod compare;
mod config;
mod log;
mod metrics;
mod scheduler;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use compare::{compare, ComparisonReport, ScenarioKey};
pub use config::{AdversarySpec, CrlRequestSpec, Mode, PresenceSpan, ReportSpec, SimConfig, MAX_VEHICLES};
pub use log::{vehicle_agent, EventLog, EventRecord};
pub use metrics::{IsolationRecord, Metrics, MessageClass};
pub use scheduler::Scheduler;

use crate::certs::ReasonCode;
use crate::crypto::DigestBackend;
use crate::messages::{
    category_lookup, CrlBroadcast, CrlEntry, MessageCategory, WireMessage,
};
use crate::protocol::{
    CollectOutcome, Deployment, OrderOutcome, ReceiveDecision, RevocationCheck, RsuStats, Timing, VehicleSpec,
    WarningOutcome, RSU_ID,
};

use config::to_ms;

/// Ids used to pad the baseline CRL beyond the configured adversaries.
pub const FILLER_ID_BASE: u64 = 2_000_000_000;

const BEACON_CATEGORY: u16 = 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("scenario setup failed: {0}")]
    Setup(String),
    #[error("runs are not comparable: {0}")]
    IncomparableRuns(String),
}

/// Agent states at the end of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalState {
    pub on_road: Vec<u64>,
    pub adversary_lists: BTreeMap<u64, Vec<u64>>,
    pub erased: Vec<u64>,
    pub rsu: RsuStats,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub log: EventLog,
    pub metrics: Metrics,
    pub final_state: FinalState,
}

/// Runs the configured mode.
pub fn run(cfg: &SimConfig) -> Result<(EventLog, Metrics), SimError> {
    simulate(cfg).map(|o| (o.log, o.metrics))
}

/// Runs the same scenario with the periodic-CRL baseline.
pub fn run_baseline(cfg: &SimConfig) -> Result<(EventLog, Metrics), SimError> {
    run(&cfg.with_mode(Mode::CrlBaseline))
}

pub fn simulate(cfg: &SimConfig) -> Result<SimOutput, SimError> {
    cfg.validate()?;
    Engine::new(cfg)?.run()
}

/// Seeded baseline CRL: configured adversaries first, then filler ids.
pub fn seeded_crl(cfg: &SimConfig) -> Vec<CrlEntry> {
    let mut ids: Vec<u64> = cfg.adversaries.iter().map(|a| a.id).collect();
    ids.sort_unstable();
    let fillers = (0..).map(|i| FILLER_ID_BASE + i);
    ids.into_iter()
        .chain(fillers)
        .take(cfg.crl_seed_size as usize)
        .map(|accused_id| CrlEntry {
            accused_id,
            timestamp: 0,
            reason: ReasonCode::BogusTrafficInformation,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Endpoint {
    Vehicle(u64),
    Rsu,
    Ca,
}

impl Endpoint {
    fn agent(self) -> String {
        match self {
            Endpoint::Vehicle(id) => vehicle_agent(id),
            Endpoint::Rsu => "rsu".to_string(),
            Endpoint::Ca => "ca".to_string(),
        }
    }
}

enum Event {
    Join(u64),
    Leave(u64),
    Beacon(u64),
    Report(u64),
    WindowTick,
    CrlTick,
    CrlRequest(u64),
    Deliver {
        to: Endpoint,
        msg: Arc<WireMessage>,
        digest: Arc<str>,
    },
}

struct Engine {
    cfg: SimConfig,
    dep: Deployment,
    sched: Scheduler<Event>,
    rng: ChaCha8Rng,
    on_road: BTreeSet<u64>,
    log: EventLog,
    metrics: Metrics,
    baseline_crl: Vec<CrlEntry>,
    beacon_category: MessageCategory,
    report_category: Option<MessageCategory>,
    phases: BTreeMap<u64, (u64, u64)>,
    end_ms: u64,
}

impl Engine {
    fn new(cfg: &SimConfig) -> Result<Engine, SimError> {
        let specs: Vec<_> = (0..cfg.vehicles)
            .map(|id| VehicleSpec {
                id,
                compliant: cfg.adversary(id).is_none_or(|a| a.compliant),
            })
            .collect();
        let timing = Timing {
            freshness_s: cfg.freshness_window_s,
            presence_s: cfg.presence_window_s,
            observation_s: cfg.observation_window_s,
        };
        let dep = Deployment::new(Arc::new(DigestBackend), &specs, cfg.duration_s + 1, cfg.al_capacity, timing)
            .map_err(|e| SimError::Setup(e.to_string()))?;
        let beacon_category = category_lookup(BEACON_CATEGORY).map_err(|e| SimError::Setup(e.to_string()))?;
        let report_category = match &cfg.report {
            Some(r) => Some(category_lookup(r.category).map_err(|e| SimError::Setup(e.to_string()))?),
            None => None,
        };

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let beacon_ms = to_ms(cfg.beacon_period_s);
        let report_ms = cfg.report.as_ref().map_or(1, |r| to_ms(r.period_s));
        let phases = (0..cfg.vehicles)
            .map(|id| (id, (rng.random_range(0..beacon_ms), rng.random_range(0..report_ms))))
            .collect();

        let mut metrics = Metrics::new(cfg.mode, ScenarioKey::of(cfg));
        for a in &cfg.adversaries {
            let mut rec = IsolationRecord::default();
            if cfg.mode == Mode::CrlBaseline && seeded_crl(cfg).iter().any(|e| e.accused_id == a.id) {
                rec.revoked_ms = Some(0);
            }
            metrics.isolation.insert(a.id, rec);
        }

        let mut engine = Engine {
            baseline_crl: match cfg.mode {
                Mode::CrlBaseline => seeded_crl(cfg),
                Mode::AdversaryList => Vec::new(),
            },
            cfg: cfg.clone(),
            dep,
            sched: Scheduler::new(),
            rng,
            on_road: BTreeSet::new(),
            log: EventLog::default(),
            metrics,
            beacon_category,
            report_category,
            phases,
            end_ms: cfg.duration_s * 1000,
        };
        engine.schedule_initial();
        Ok(engine)
    }

    fn schedule_initial(&mut self) {
        let spans: BTreeMap<u64, &PresenceSpan> = self.cfg.schedule.iter().map(|s| (s.vehicle, s)).collect();
        for id in 0..self.cfg.vehicles {
            let (join, leave) = spans
                .get(&id)
                .map_or((0, None), |s| (to_ms(s.join_s), s.leave_s.map(to_ms)));
            self.sched.schedule(join, Event::Join(id));
            if let Some(leave) = leave {
                self.sched.schedule(leave, Event::Leave(id));
            }
        }
        match self.cfg.mode {
            Mode::AdversaryList => self.sched.schedule(self.cfg.observation_window_s * 1000, Event::WindowTick),
            Mode::CrlBaseline => self.sched.schedule(0, Event::CrlTick),
        }
        for r in self.cfg.crl_requests.clone() {
            self.sched.schedule(to_ms(r.at_s), Event::CrlRequest(r.vehicle));
        }
    }

    fn run(mut self) -> Result<SimOutput, SimError> {
        while let Some((t, event)) = self.sched.pop() {
            if t >= self.end_ms {
                break;
            }
            self.handle(t, event);
        }
        Ok(self.finish())
    }

    fn finish(mut self) -> SimOutput {
        for (id, v) in &self.dep.vehicles {
            self.metrics.decrypt_count.insert(*id, v.counters.decrypts);
            self.metrics.al_lookup_count += v.counters.al_lookups;
            self.metrics.crl_lookup_count += v.counters.crl_lookups;
        }
        self.metrics.accusations_dropped = self.dep.rsu.stats.accusations_dropped;
        self.metrics.crl = match self.cfg.mode {
            Mode::AdversaryList => self.dep.ca.crl().to_vec(),
            Mode::CrlBaseline => self.baseline_crl.clone(),
        };
        let final_state = FinalState {
            on_road: self.on_road.iter().copied().collect(),
            adversary_lists: self
                .dep
                .vehicles
                .iter()
                .map(|(id, v)| (*id, v.adversary_list().ids()))
                .collect(),
            erased: self
                .dep
                .vehicles
                .iter()
                .filter(|(_, v)| v.credentials_erased())
                .map(|(id, _)| *id)
                .collect(),
            rsu: self.dep.rsu.stats,
        };
        SimOutput {
            log: self.log,
            metrics: self.metrics,
            final_state,
        }
    }

    fn handle(&mut self, t: u64, event: Event) {
        match event {
            Event::Join(id) => self.on_join(t, id),
            Event::Leave(id) => self.on_leave(t, id),
            Event::Beacon(id) => self.on_beacon(t, id),
            Event::Report(id) => self.on_report(t, id),
            Event::WindowTick => self.on_window(t),
            Event::CrlTick => self.on_crl_tick(t),
            Event::CrlRequest(id) => self.on_crl_request(t, id),
            Event::Deliver { to, msg, digest } => {
                self.metrics.deliveries += 1;
                match to {
                    Endpoint::Vehicle(id) => self.deliver_to_vehicle(t, id, &msg, &digest),
                    Endpoint::Rsu => self.deliver_to_rsu(t, &msg, &digest),
                    Endpoint::Ca => self.deliver_to_ca(t, &msg, &digest),
                }
            }
        }
    }

    // -- traffic generation ------------------------------------------------

    fn on_join(&mut self, t: u64, id: u64) {
        self.on_road.insert(id);
        self.log.push(EventRecord::new(t, vehicle_agent(id), "join"));
        let (beacon_phase, report_phase) = self.phases[&id];
        self.sched.schedule(t + beacon_phase, Event::Beacon(id));
        if self.report_category.is_some() {
            self.sched.schedule(t + report_phase, Event::Report(id));
        }
    }

    fn on_leave(&mut self, t: u64, id: u64) {
        if !self.on_road.remove(&id) {
            return;
        }
        self.log.push(EventRecord::new(t, vehicle_agent(id), "leave"));
        if self.cfg.mode == Mode::AdversaryList {
            let departed = BTreeSet::from([id]);
            for other in self.on_road.clone() {
                let v = self.dep.vehicle_mut(other);
                if v.purge_departed(&departed) > 0 {
                    let al = v.adversary_list().ids();
                    self.log
                        .push(EventRecord::new(t, vehicle_agent(other), "purge").subject(id).al(al));
                }
            }
        }
        self.check_isolation(t);
    }

    fn on_beacon(&mut self, t: u64, id: u64) {
        if !self.on_road.contains(&id) {
            return;
        }
        let category = self.beacon_category;
        self.send_data(t, id, category, 0);
        self.sched.schedule(t + to_ms(self.cfg.beacon_period_s), Event::Beacon(id));
    }

    fn on_report(&mut self, t: u64, id: u64) {
        let (Some(category), Some(spec)) = (self.report_category, self.cfg.report.clone()) else {
            return;
        };
        if !self.on_road.contains(&id) {
            return;
        }
        let claim = self.cfg.adversary(id).map_or(spec.claim, |a| a.false_claim);
        self.send_data(t, id, category, claim);
        self.sched.schedule(t + to_ms(spec.period_s), Event::Report(id));
    }

    fn send_data(&mut self, t: u64, id: u64, category: MessageCategory, claim: i64) {
        let composed = self.dep.vehicles[&id].compose(&self.dep.env, category, claim, t / 1000);
        match composed {
            Ok(msg) => {
                let to = self.broadcast_targets(Some(id), true);
                self.transmit(t, Endpoint::Vehicle(id), to, WireMessage::Data(msg), true);
            }
            Err(e) => self.log.push(
                EventRecord::new(t, vehicle_agent(id), "compose_failed").decision(e.to_string()),
            ),
        }
    }

    fn on_window(&mut self, t: u64) {
        let now = t / 1000;
        for id in self.on_road.clone() {
            let out = self.dep.vehicles.get_mut(&id).expect("on-road vehicle exists").close_window(&self.dep.env, now);
            for (sender, _) in &out.contradictions {
                if let Some(rec) = self.metrics.isolation.get_mut(sender) {
                    rec.first_contradiction_ms.get_or_insert(t);
                }
            }
            if !out.contradictions.is_empty() {
                self.log.push(
                    EventRecord::new(t, vehicle_agent(id), "window")
                        .decision(format!("contradictions={}", out.contradictions.len())),
                );
            }
            for (accused, sealed) in out.accusations {
                self.metrics.accusations_sent += 1;
                self.log
                    .push(EventRecord::new(t, vehicle_agent(id), "accuse").subject(accused));
                self.transmit(
                    t,
                    Endpoint::Vehicle(id),
                    vec![Endpoint::Rsu],
                    WireMessage::VehicleAccusation(sealed),
                    true,
                );
            }
        }
        self.sched
            .schedule(t + self.cfg.observation_window_s * 1000, Event::WindowTick);
    }

    fn on_crl_tick(&mut self, t: u64) {
        self.sched.schedule(t + to_ms(self.cfg.crl_broadcast_period_s), Event::CrlTick);
        if self.on_road.is_empty() {
            return;
        }
        let built = CrlBroadcast::build(
            self.dep.env.crypto(),
            &self.dep.rsu.keys().private_key,
            RSU_ID,
            t / 1000,
            self.baseline_crl.clone(),
        );
        match built {
            Ok(b) => {
                let to = self.broadcast_targets(None, false);
                self.transmit(t, Endpoint::Rsu, to, WireMessage::CrlBroadcast(b), true);
            }
            Err(e) => self
                .log
                .push(EventRecord::new(t, "rsu", "crl_broadcast_failed").decision(e.to_string())),
        }
    }

    fn on_crl_request(&mut self, t: u64, id: u64) {
        if !self.on_road.contains(&id) {
            return;
        }
        let req = crate::messages::CrlRequest { requester_id: id };
        self.transmit(t, Endpoint::Vehicle(id), vec![Endpoint::Rsu], WireMessage::CrlRequest(req), true);
    }

    // -- channel ----------------------------------------------------------

    fn broadcast_targets(&self, sender: Option<u64>, include_rsu: bool) -> Vec<Endpoint> {
        let mut to: Vec<Endpoint> = self
            .on_road
            .iter()
            .filter(|id| Some(**id) != sender)
            .map(|id| Endpoint::Vehicle(*id))
            .collect();
        if include_rsu {
            to.push(Endpoint::Rsu);
        }
        to
    }

    /// Puts one frame on the channel. Bytes are counted once per send;
    /// wireless deliveries are subject to the configured loss.
    fn transmit(&mut self, t: u64, from: Endpoint, to: Vec<Endpoint>, msg: WireMessage, wireless: bool) {
        let frame = msg.encode_wire();
        let kind = msg.kind();
        self.metrics.record_send(MessageClass::of(kind), frame.len());
        let digest: Arc<str> = hex::encode(&Sha256::digest(&frame)[..8]).into();
        self.log.push(
            EventRecord::new(t, from.agent(), "send")
                .message(kind.label())
                .digest(&digest),
        );
        let decoded = match WireMessage::decode_wire(&frame) {
            Ok(m) => Arc::new(m),
            Err(e) => {
                self.log
                    .push(EventRecord::new(t, "channel", "corrupt").decision(e.to_string()));
                return;
            }
        };
        let at = t + self.cfg.delivery_delay_ms;
        for endpoint in to {
            if wireless && self.cfg.loss_probability > 0.0 && self.rng.random::<f64>() < self.cfg.loss_probability {
                self.metrics.lost += 1;
                self.log.push(
                    EventRecord::new(t, "channel", "lost")
                        .message(kind.label())
                        .decision(endpoint.agent())
                        .digest(&digest),
                );
                continue;
            }
            self.sched.schedule(
                at,
                Event::Deliver {
                    to: endpoint,
                    msg: Arc::clone(&decoded),
                    digest: Arc::clone(&digest),
                },
            );
        }
    }

    // -- receivers ----------------------------------------------------------

    fn deliver_to_vehicle(&mut self, t: u64, id: u64, msg: &WireMessage, digest: &str) {
        if !self.on_road.contains(&id) {
            return;
        }
        let now = t / 1000;
        let agent = vehicle_agent(id);
        let check = match self.cfg.mode {
            Mode::AdversaryList => RevocationCheck::AdversaryList,
            Mode::CrlBaseline => RevocationCheck::Crl,
        };
        let env = &self.dep.env;
        let v = self.dep.vehicles.get_mut(&id).expect("on-road vehicle exists");
        match msg {
            WireMessage::Data(m) => {
                let out = v.receive(env, m, now, check);
                let counters = v.counters;
                let mut rec = EventRecord::new(t, agent, "receive")
                    .message("data")
                    .decision(out.decision.label())
                    .subject(m.sender_id)
                    .digest(digest)
                    .counters(counters);
                if out.decision == ReceiveDecision::NewAdversaryDetected && check == RevocationCheck::AdversaryList {
                    rec = rec.al(v.adversary_list().ids());
                }
                self.log.push(rec);
                match out.decision {
                    ReceiveDecision::Accept => {
                        if self.is_revoked(m.sender_id) {
                            self.metrics.acceptance_of_adversary_count += 1;
                        }
                        if self
                            .metrics
                            .isolation
                            .get(&m.sender_id)
                            .is_some_and(|r| r.isolated_ms.is_some())
                        {
                            self.metrics.acceptance_after_isolation_count += 1;
                        }
                    }
                    ReceiveDecision::NewAdversaryDetected => {
                        if let Some(w) = out.warning {
                            self.metrics.warnings_sent += 1;
                            let to = self.broadcast_targets(Some(id), false);
                            self.transmit(t, Endpoint::Vehicle(id), to, WireMessage::Warning(w), true);
                        }
                        self.check_isolation(t);
                    }
                    _ => {}
                }
            }
            WireMessage::Warning(w) => {
                let out = v.process_warning(env, w, now);
                let mut rec = EventRecord::new(t, agent, "warning")
                    .message("warning")
                    .decision(warning_label(out))
                    .subject(w.adversary_id)
                    .digest(digest);
                if matches!(out, WarningOutcome::Recorded { .. }) {
                    rec = rec.al(v.adversary_list().ids());
                }
                self.log.push(rec);
                self.check_isolation(t);
            }
            WireMessage::Order(o) => {
                let out = v.apply_order(env, o, now);
                let mut rec = EventRecord::new(t, agent, "order")
                    .message("order")
                    .decision(order_label(out))
                    .digest(digest)
                    .counters(v.counters);
                if let OrderOutcome::Recorded { adversary } = out {
                    rec = rec.subject(adversary).al(v.adversary_list().ids());
                }
                self.log.push(rec);
                self.check_isolation(t);
            }
            WireMessage::CrlBroadcast(b) => {
                let ok = v.apply_crl_broadcast(env, b);
                self.log.push(
                    EventRecord::new(t, agent, "crl_update")
                        .message("crl_broadcast")
                        .decision(if ok { "applied" } else { "rejected" })
                        .digest(digest),
                );
                self.check_isolation(t);
            }
            WireMessage::CrlResponse(r) => self.log.push(
                EventRecord::new(t, agent, "crl_response")
                    .message("crl_response")
                    .decision(format!("entries={}", r.entries.len()))
                    .digest(digest),
            ),
            other => self.log.push(
                EventRecord::new(t, agent, "unexpected")
                    .message(other.kind().label())
                    .digest(digest),
            ),
        }
    }

    fn deliver_to_rsu(&mut self, t: u64, msg: &WireMessage, digest: &str) {
        let now = t / 1000;
        let env = &self.dep.env;
        match msg {
            WireMessage::Data(m) => self.dep.rsu.observe_presence(m.sender_id, now),
            WireMessage::VehicleAccusation(ct) => {
                let out = self.dep.rsu.collect(env, ct, now);
                let rec = EventRecord::new(t, "rsu", "collect")
                    .message("vehicle_accusation")
                    .digest(digest);
                let rec = match &out {
                    CollectOutcome::Counted {
                        accused,
                        accusers,
                        present,
                    } => rec
                        .subject(*accused)
                        .decision(format!("counted {accusers}/{present}")),
                    CollectOutcome::Forward { accused, .. } => rec.subject(*accused).decision("forward"),
                    CollectOutcome::Absorbed { accused } => rec.subject(*accused).decision("absorbed"),
                    CollectOutcome::Dropped(why) => rec.decision(format!("dropped {why:?}")),
                };
                self.log.push(rec);
                if let CollectOutcome::Forward { sealed, .. } = out {
                    self.transmit(t, Endpoint::Rsu, vec![Endpoint::Ca], WireMessage::RsuAccusation(sealed), false);
                }
            }
            WireMessage::Order(o) => match self.dep.rsu.execute(env, o, now) {
                Ok(orders) => {
                    let accused = orders.accused_id;
                    self.log.push(
                        EventRecord::new(t, "rsu", "execute")
                            .message("order")
                            .subject(accused)
                            .decision("executed")
                            .digest(digest),
                    );
                    let av = Endpoint::Vehicle(accused);
                    self.transmit(t, Endpoint::Rsu, vec![av], WireMessage::Order(orders.erase), true);
                    self.transmit(t, Endpoint::Rsu, vec![av], WireMessage::Order(orders.insert), true);
                    let to = self.broadcast_targets(None, false);
                    self.transmit(t, Endpoint::Rsu, to, WireMessage::Order(orders.add), true);
                }
                Err(why) => self.log.push(
                    EventRecord::new(t, "rsu", "execute")
                        .message("order")
                        .decision(format!("dropped {why:?}"))
                        .digest(digest),
                ),
            },
            WireMessage::CrlRequest(r) => {
                let resp = self.dep.rsu.serve_crl(r);
                self.transmit(
                    t,
                    Endpoint::Rsu,
                    vec![Endpoint::Vehicle(r.requester_id)],
                    WireMessage::CrlResponse(resp),
                    true,
                );
            }
            other => self.log.push(
                EventRecord::new(t, "rsu", "unexpected")
                    .message(other.kind().label())
                    .digest(digest),
            ),
        }
    }

    fn deliver_to_ca(&mut self, t: u64, msg: &WireMessage, digest: &str) {
        let WireMessage::RsuAccusation(ct) = msg else {
            self.log.push(
                EventRecord::new(t, "ca", "unexpected")
                    .message(msg.kind().label())
                    .digest(digest),
            );
            return;
        };
        let rec = EventRecord::new(t, "ca", "accusation")
            .message("rsu_accusation")
            .digest(digest);
        match self.dep.ca.process_accusation(&self.dep.env, ct, t / 1000) {
            Ok(Some(order)) => {
                let accused = self.dep.ca.crl().last().map(|e| e.accused_id);
                if let Some(rec) = accused.and_then(|a| self.metrics.isolation.get_mut(&a)) {
                    rec.revoked_ms.get_or_insert(t);
                }
                let mut rec = rec.decision("revoked");
                if let Some(a) = accused {
                    rec = rec.subject(a);
                }
                self.log.push(rec);
                self.transmit(t, Endpoint::Ca, vec![Endpoint::Rsu], WireMessage::Order(order), false);
            }
            Ok(None) => self.log.push(rec.decision("duplicate")),
            Err(why) => self.log.push(rec.decision(format!("dropped {why:?}"))),
        }
    }

    // -- bookkeeping ------------------------------------------------------

    fn is_revoked(&self, id: u64) -> bool {
        match self.cfg.mode {
            Mode::AdversaryList => self.dep.ca.is_revoked(id),
            Mode::CrlBaseline => self.baseline_crl.iter().any(|e| e.accused_id == id),
        }
    }

    fn knows_adversary(&self, vehicle: u64, adversary: u64) -> bool {
        let v = &self.dep.vehicles[&vehicle];
        match self.cfg.mode {
            Mode::AdversaryList => v.adversary_list().contains(adversary),
            Mode::CrlBaseline => v.latest_crl().is_some_and(|c| c.contains(&adversary)),
        }
    }

    /// An adversary is isolated once every other vehicle on the road would
    /// ignore it.
    fn check_isolation(&mut self, t: u64) {
        let pending: Vec<u64> = self
            .metrics
            .isolation
            .iter()
            .filter(|(_, r)| r.isolated_ms.is_none())
            .map(|(id, _)| *id)
            .collect();
        for a in pending {
            let mut others = self.on_road.iter().filter(|v| **v != a).peekable();
            if others.peek().is_none() {
                continue;
            }
            if others.all(|v| self.knows_adversary(*v, a)) {
                if let Some(rec) = self.metrics.isolation.get_mut(&a) {
                    rec.isolated_ms = Some(t);
                }
                self.log.push(EventRecord::new(t, "channel", "isolated").subject(a));
            }
        }
    }
}

fn warning_label(o: WarningOutcome) -> &'static str {
    match o {
        WarningOutcome::Recorded { .. } => "recorded",
        WarningOutcome::DroppedStale => "dropped_stale",
        WarningOutcome::DroppedAdversaryIssuer => "dropped_adversary_issuer",
        WarningOutcome::DroppedInvalidIssuer => "dropped_invalid_issuer",
        WarningOutcome::DroppedBadSignature => "dropped_bad_signature",
        WarningOutcome::DroppedSelf => "dropped_self",
    }
}

fn order_label(o: OrderOutcome) -> &'static str {
    match o {
        OrderOutcome::Recorded { .. } => "recorded",
        OrderOutcome::CredentialsErased => "credentials_erased",
        OrderOutcome::AdversaryCertInstalled => "adversary_cert_installed",
        OrderOutcome::IgnoredNonCompliant => "ignored_non_compliant",
        OrderOutcome::IgnoredSelf => "ignored_self",
        OrderOutcome::DroppedWrongRecipient => "dropped_wrong_recipient",
        OrderOutcome::DroppedBadSignature => "dropped_bad_signature",
        OrderOutcome::DroppedStale => "dropped_stale",
        OrderOutcome::DroppedReplay => "dropped_replay",
        OrderOutcome::DroppedInvalid => "dropped_invalid",
    }
}
