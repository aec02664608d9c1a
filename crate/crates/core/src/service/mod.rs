//! Live task execution behind a line-delimited JSON protocol.
//!
//! A [`Service`] holds read-only bundles and a table of sessions. Each session is behind its
//! own lock, so turns of one session are serialized while different sessions proceed in
//! parallel. Sessions idle for longer than the configured timeout are dropped.

pub mod protocol;
pub mod server;
pub mod session;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::domain::DemoSequence;
use crate::error::{Error, Result};
use crate::pipeline::{infer_type_offline, TrainedBundle, PROTOCOL_VERSION};

pub use protocol::{
    ActionInfo, ErrorBody, PriorSource, Reply, Request, Response, SessionView, Status, TranscriptView, TurnRecord,
    TurnResult,
};
pub use server::serve;
pub use session::{Session, SessionState};

pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceConfig {
    pub idle_timeout: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            idle_timeout: DEFAULT_IDLE_TIMEOUT,
        }
    }
}

pub struct Service {
    bundles: BTreeMap<String, Arc<TrainedBundle>>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    config: ServiceConfig,
    counter: AtomicU64,
    salt: u64,
}

impl Service {
    pub fn new(bundles: impl IntoIterator<Item = (String, TrainedBundle)>, config: ServiceConfig) -> Self {
        Self {
            bundles: bundles.into_iter().map(|(id, b)| (id, Arc::new(b))).collect(),
            sessions: Mutex::new(HashMap::new()),
            config,
            counter: AtomicU64::new(0),
            salt: rand::random(),
        }
    }

    pub fn bundle_ids(&self) -> Vec<String> {
        self.bundles.keys().cloned().collect()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session table").len()
    }

    pub fn create(&self, bundle: Option<&str>, prior: &PriorSource) -> Result<SessionView> {
        self.expire_idle();
        let (bundle_id, bundle) = match bundle {
            Some(id) => self
                .bundles
                .get_key_value(id)
                .ok_or_else(|| Error::NotFound(format!("bundle '{id}'")))?,
            None if self.bundles.len() == 1 => self.bundles.iter().next().expect("one bundle"),
            None => return Err(Error::InvalidArgument(format!("name a bundle: {}", self.bundle_ids().join(", ")))),
        };
        let belief = match prior {
            PriorSource::Uniform => {
                let k = bundle.momdp.n_types();
                vec![1.0 / k as f64; k]
            }
            PriorSource::OfflinePosterior { sequences } => {
                let alphabet = &bundle.domain.alphabet;
                let demos = sequences
                    .iter()
                    .map(|seq| {
                        seq.iter()
                            .map(|l| alphabet.id_of(l).ok_or_else(|| Error::NotFound(format!("action '{l}'"))))
                            .collect::<Result<Vec<_>>>()
                            .map(DemoSequence::new)
                    })
                    .collect::<Result<Vec<_>>>()?;
                infer_type_offline(bundle, &demos)?
            }
            PriorSource::Explicit { belief } => belief.clone(),
        };
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let id = format!("{:016x}", splitmix(self.salt ^ n));
        let session = Session::new(id.clone(), bundle_id.clone(), Arc::clone(bundle), belief)?;
        let view = SessionView {
            session: id.clone(),
            bundle: bundle_id.clone(),
            protocol_version: PROTOCOL_VERSION,
            types: bundle.labels(),
            alphabet: bundle
                .domain
                .alphabet
                .records()
                .iter()
                .map(|r| ActionInfo {
                    label: r.label.clone(),
                    actor: r.actor,
                })
                .collect(),
            steps: bundle.domain.task_steps.clone(),
            status: status(&session),
        };
        self.sessions
            .lock()
            .expect("session table")
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    pub fn act(&self, session: &str, action: &str) -> Result<TurnResult> {
        let handle = self.session(session)?;
        let mut s = handle.lock().expect("session");
        s.last_used = Instant::now();
        let human = match s.bundle().domain.alphabet.id_of(action) {
            Some(h) => h,
            None if s.state == SessionState::Terminal => return Err(Error::SessionComplete(s.id.clone())),
            None => {
                let domain = &s.bundle().domain;
                return Err(Error::IllegalAction {
                    action: action.to_string(),
                    step: domain.task_steps[s.board()].clone(),
                    legal: s.legal().iter().map(|&h| domain.alphabet.label(h).to_string()).collect(),
                });
            }
        };
        let before = s.turns.len();
        s.submit(human)?;
        Ok(TurnResult {
            session: s.id.clone(),
            turns: records(&s, before),
            status: status(&s),
        })
    }

    pub fn transcript(&self, session: &str) -> Result<TranscriptView> {
        let handle = self.session(session)?;
        let mut s = handle.lock().expect("session");
        s.last_used = Instant::now();
        Ok(TranscriptView {
            session: s.id.clone(),
            prior: s.prior.clone(),
            turns: records(&s, 0),
            status: status(&s),
        })
    }

    pub fn handle(&self, request: Request) -> Response {
        let reply = match request {
            Request::Create { bundle, prior } => self.create(bundle.as_deref(), &prior).map(Reply::Create),
            Request::Act { session, action } => self.act(&session, &action).map(Reply::Act),
            Request::Transcript { session } => self.transcript(&session).map(Reply::Transcript),
        };
        match reply {
            Ok(r) => Response::success(r),
            Err(e) => Response::failure(&e),
        }
    }

    /// One request line in, one response line out (without the newline).
    pub fn handle_line(&self, line: &str) -> String {
        let response = match serde_json::from_str::<Request>(line) {
            Ok(request) => self.handle(request),
            Err(e) => Response::failure(&Error::Json(e)),
        };
        serde_json::to_string(&response).expect("responses serialize")
    }

    /// Drops sessions idle for longer than the timeout. Runs before every `create` and
    /// session lookup.
    pub fn expire_idle(&self) {
        let timeout = self.config.idle_timeout;
        let mut table = self.sessions.lock().expect("session table");
        table.retain(|_, s| match s.try_lock() {
            Ok(s) => s.last_used.elapsed() <= timeout,
            // In use right now, so not idle.
            Err(_) => true,
        });
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>> {
        self.expire_idle();
        self.sessions
            .lock()
            .expect("session table")
            .get(id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("session '{id}'")))
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn status(s: &Session) -> Status {
    let b = s.bundle();
    let label = |h: usize| b.domain.alphabet.label(h).to_string();
    Status {
        step: b.momdp.steps[s.step].clone(),
        robot_action: s.pending.map(|a| b.momdp.actions[a].clone()),
        board: b.momdp.steps[s.board()].clone(),
        belief: s.belief.clone(),
        state: s.state,
        terminal: s.state == SessionState::Terminal,
        legal: s.legal().into_iter().map(label).collect(),
    }
}

fn records(s: &Session, from: usize) -> Vec<TurnRecord> {
    let m = &s.bundle().momdp;
    (from..s.turns.len())
        .map(|i| {
            let t = &s.turns[i];
            let after = match s.turns.get(i + 1) {
                Some(next) => next.belief.clone().expect("session turns carry beliefs"),
                None => s.belief.clone(),
            };
            TurnRecord {
                index: i,
                step: m.steps[t.step].clone(),
                belief: t.belief.clone().expect("session turns carry beliefs"),
                robot_action: m.actions[t.action].clone(),
                human_action: m.observations[t.observation].clone(),
                next: m.steps[t.next].clone(),
                belief_after: after,
                belief_reset: t.belief_reset,
            }
        })
        .collect()
}
