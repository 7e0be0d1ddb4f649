use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use log::{debug, info, warn};

use super::log::{ClickLog, LogEntry};
use super::protocol::*;
use crate::click_model::{ClickDensity, ClickLearner};
use crate::config::EngineConfig;
use crate::error::Result;
use crate::keyboard::{Applied, KeyAction, Keyboard, Layout};
use crate::language_prior::{CorpusIndex, PriorConfig};
use crate::selector::{ClockId, PhaseHeuristic, Period, Round, SlotPhases, Threshold};

/// Selections between automatic density saves.
pub const DEFAULT_AUTOSAVE_EVERY: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOptions {
    pub engine: EngineConfig,
    pub prior: PriorConfig,
    /// Where the density is loaded from at start and saved to. `None` keeps
    /// it in memory only.
    pub density_path: Option<PathBuf>,
    /// Zero disables autosave.
    pub autosave_every: usize,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            engine: EngineConfig::default(),
            prior: PriorConfig::default(),
            density_path: None,
            autosave_every: DEFAULT_AUTOSAVE_EVERY,
        }
    }
}

type Clock = Box<dyn FnMut() -> u64 + Send>;

/// One user's live session: the keyboard text, the learning density and the
/// round in progress. Transport-agnostic; feed it envelopes with
/// [`Session::handle`].
pub struct Session {
    options: SessionOptions,
    index: Arc<CorpusIndex>,
    learner: ClickLearner,
    keyboard: Keyboard,
    layout: Layout,
    round: Round,
    round_id: u64,
    period: Period,
    threshold: Threshold,
    heuristic: Arc<dyn PhaseHeuristic>,
    greeted: bool,
    last_seq_in: Option<u64>,
    seq_out: u64,
    deferred_period: Option<i32>,
    since_save: usize,
    clock: Clock,
    click_log: Option<ClickLog<Box<dyn Write + Send>>>,
    winners: Vec<WinnerInfo>,
}

impl Session {
    /// Loads the density from `options.density_path` when that file exists,
    /// otherwise starts from the default density.
    pub fn new(options: SessionOptions, index: Arc<CorpusIndex>) -> Result<Self> {
        options.engine.validate()?;
        let period = options.engine.period()?;
        let density = match &options.density_path {
            Some(path) if path.exists() => {
                info!("loading click density from {}", path.display());
                ClickDensity::load(path)?
            }
            _ => ClickDensity::new(period.seconds(), options.engine.bin_count, options.engine.lambda)?,
        };
        Self::with_density(options, index, density)
    }

    pub fn with_density(options: SessionOptions, index: Arc<CorpusIndex>, mut density: ClickDensity) -> Result<Self> {
        options.engine.validate()?;
        options.prior.validate()?;
        let period = options.engine.period()?;
        density.set_period(period.seconds())?;
        let learner = ClickLearner::new(density, options.engine.n_delay);
        let keyboard = Keyboard::new();
        let layout = keyboard.layout(&index, &options.prior);
        let threshold = Threshold {
            alpha: options.engine.alpha,
            overrides: options.engine.alpha_overrides.clone(),
        };
        let heuristic: Arc<dyn PhaseHeuristic> = Arc::new(SlotPhases);
        let round = Round::start(layout.clock_set(), period, threshold.clone(), learner.density(), heuristic.clone());
        let start = Instant::now();
        Ok(Self {
            options,
            index,
            learner,
            keyboard,
            layout,
            round,
            round_id: 0,
            period,
            threshold,
            heuristic,
            greeted: false,
            last_seq_in: None,
            seq_out: 0,
            deferred_period: None,
            since_save: 0,
            clock: Box::new(move || start.elapsed().as_millis() as u64),
            click_log: None,
            winners: Vec::new(),
        })
    }

    /// Replaces the millisecond clock stamped on outgoing envelopes.
    pub fn set_clock(&mut self, clock: impl FnMut() -> u64 + Send + 'static) {
        self.clock = Box::new(clock);
    }

    /// Starts recording clicks and period requests, preceded by a header that
    /// holds the configuration and the current density.
    pub fn record_to(&mut self, sink: Box<dyn Write + Send>) -> Result<()> {
        let log = ClickLog::start(sink, &self.options.engine, &self.options.prior, self.learner.density())?;
        self.click_log = Some(log);
        Ok(())
    }

    pub fn options(&self) -> &SessionOptions {
        &self.options
    }

    pub fn text(&self) -> &str {
        self.keyboard.text()
    }

    pub fn learner(&self) -> &ClickLearner {
        &self.learner
    }

    pub fn round(&self) -> &Round {
        &self.round
    }

    pub fn round_id(&self) -> u64 {
        self.round_id
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn period(&self) -> Period {
        self.period
    }

    /// Winners so far, oldest first.
    pub fn winners(&self) -> &[WinnerInfo] {
        &self.winners
    }

    /// Decodes one frame body and handles it. Malformed input yields an
    /// error reply; the session carries on.
    pub fn handle_bytes(&mut self, bytes: &[u8]) -> Vec<Envelope> {
        match decode(bytes) {
            Ok(env) => self.handle(env),
            Err(e) => {
                warn!("malformed message: {e}");
                vec![self.error("malformed", e.to_string())]
            }
        }
    }

    pub fn handle(&mut self, env: Envelope) -> Vec<Envelope> {
        if env.v != PROTOCOL_VERSION {
            return vec![self.error(
                "version",
                format!("protocol version {} not supported (expected {PROTOCOL_VERSION})", env.v),
            )];
        }
        if let Some(last) = self.last_seq_in {
            if env.seq <= last {
                return vec![self.error("sequence", format!("seq {} after {last}", env.seq))];
            }
        }
        self.last_seq_in = Some(env.seq);
        match env.body {
            Body::Hello(hello) => {
                debug!("hello from {:?}", hello.client);
                self.greeted = true;
                let config = self.config_info(hello.client_time_ms);
                vec![self.envelope(Body::Config(config)), self.state()]
            }
            _ if !self.greeted => vec![self.error("not_greeted", "send hello first".into())],
            Body::Click(click) => self.on_click(click.t_ms),
            Body::PeriodChanged(change) => self.on_period_request(change.period_index),
            other => vec![self.error("unexpected_kind", format!("{} is sent by the server", other.kind()))],
        }
    }

    fn on_click(&mut self, t_ms: f64) -> Vec<Envelope> {
        if !t_ms.is_finite() {
            return vec![self.error("bad_click", format!("click time {t_ms}"))];
        }
        if let Err(e) = self.log(LogEntry::Click { t_ms, round: self.round_id }) {
            warn!("click log write failed: {e}");
        }
        self.round.register_click(t_ms / 1000.0, self.learner.density());
        if let Some(id) = self.round.check_winner() {
            return self.finish_round(Some(id));
        }
        if self.round.clicks() >= self.options.engine.max_clicks {
            warn!("round {} abandoned after {} clicks", self.round_id, self.round.clicks());
            return self.finish_round(None);
        }
        vec![self.state()]
    }

    fn on_period_request(&mut self, j: i32) -> Vec<Envelope> {
        let seconds = match Period::from_index(j) {
            Ok(p) => p.seconds(),
            Err(e) => return vec![self.error("bad_period", e.to_string())],
        };
        if let Err(e) = self.log(LogEntry::Period { period_index: j, round: self.round_id }) {
            warn!("click log write failed: {e}");
        }
        if self.round.clicks() > 0 {
            self.deferred_period = Some(j);
            let body = Body::PeriodChanged(PeriodChange {
                period_index: j,
                period_s: Some(seconds),
                applied: false,
            });
            return vec![self.envelope(body)];
        }
        self.apply_period(j);
        vec![self.period_changed(), self.state()]
    }

    fn apply_period(&mut self, j: i32) {
        let seconds = self
            .round
            .set_period(j, self.learner.density())
            .expect("period index validated");
        self.period = self.round.period();
        self.learner
            .density_mut()
            .set_period(seconds)
            .expect("periods are positive");
    }

    fn period_changed(&mut self) -> Envelope {
        self.envelope(Body::PeriodChanged(PeriodChange {
            period_index: self.period.index(),
            period_s: Some(self.period.seconds()),
            applied: true,
        }))
    }

    fn finish_round(&mut self, winner: Option<ClockId>) -> Vec<Envelope> {
        let mut out = Vec::new();
        if let Some(id) = winner {
            let action = self.layout.action(id).expect("winner is on screen").clone();
            let clicks = self.round.clicks();
            let applied = self.keyboard.apply(&action);
            let info = WinnerInfo {
                round: self.round_id,
                clock_id: id,
                label: action.label(),
                clicks,
                text: self.keyboard.text().to_string(),
            };
            debug!("round {} won by {id} ({}) after {clicks} clicks", self.round_id, info.label);
            self.winners.push(info.clone());
            out.push(self.envelope(Body::Winner(info)));
            match applied {
                Applied::Undone(reverted) => {
                    let discarded = reverted && self.learner.discard_last().is_some();
                    let body = Body::UndoApplied(UndoApplied {
                        text: self.keyboard.text().to_string(),
                        discarded,
                    });
                    out.push(self.envelope(body));
                }
                _ => {
                    debug_assert!(!matches!(action, KeyAction::Undo));
                    let offsets = self.round.offsets(id).expect("winner is in the round").to_vec();
                    self.learner.stage_selection(id, offsets);
                    self.autosave();
                }
            }
        }
        self.round_id += 1;
        if let Some(j) = self.deferred_period.take() {
            self.apply_period(j);
            out.push(self.period_changed());
        }
        self.layout = self.keyboard.layout(&self.index, &self.options.prior);
        self.round = Round::start(
            self.layout.clock_set(),
            self.period,
            self.threshold.clone(),
            self.learner.density(),
            self.heuristic.clone(),
        );
        out.push(self.state());
        out
    }

    fn autosave(&mut self) {
        if self.options.autosave_every == 0 {
            return;
        }
        self.since_save += 1;
        if self.since_save >= self.options.autosave_every {
            self.since_save = 0;
            if let Some(path) = &self.options.density_path {
                match self.learner.density().save(path) {
                    Ok(()) => debug!("autosaved density to {}", path.display()),
                    Err(e) => warn!("autosave to {} failed: {e}", path.display()),
                }
            }
        }
    }

    /// Commits every pending selection and writes the density, if a path
    /// was configured. Called when the transport ends.
    pub fn finish(&mut self) -> Result<()> {
        self.learner.flush();
        if let Some(log) = &mut self.click_log {
            log.flush()?;
        }
        if let Some(path) = &self.options.density_path {
            self.learner.density().save(path)?;
            info!("saved click density to {}", path.display());
        }
        Ok(())
    }

    fn log(&mut self, entry: LogEntry) -> Result<()> {
        match &mut self.click_log {
            Some(log) => log.append(&entry),
            None => Ok(()),
        }
    }

    fn config_info(&mut self, echo: f64) -> ConfigInfo {
        let engine = &self.options.engine;
        ConfigInfo {
            protocol_version: PROTOCOL_VERSION,
            period_index: self.period.index(),
            period_s: self.period.seconds(),
            alpha: engine.alpha,
            lambda: engine.lambda,
            bin_count: engine.bin_count,
            n_delay: engine.n_delay,
            server_time_ms: (self.clock)(),
            echo_client_time_ms: echo,
        }
    }

    /// Current round as seen by a client.
    pub fn state_view(&self) -> StateView {
        let posterior = self.round.posterior();
        let clocks = self
            .round
            .phases()
            .zip(posterior)
            .map(|((id, phase), (_, p))| ClockView {
                id,
                label: self.layout.action(id).map(KeyAction::label).unwrap_or_default(),
                phase_s: phase,
                posterior: p,
            })
            .collect();
        StateView {
            round: self.round_id,
            clicks: self.round.clicks(),
            text: self.keyboard.text().to_string(),
            period_index: self.period.index(),
            period_s: self.period.seconds(),
            clocks,
        }
    }

    fn state(&mut self) -> Envelope {
        let view = self.state_view();
        self.envelope(Body::State(view))
    }

    fn error(&mut self, code: &str, message: String) -> Envelope {
        self.envelope(Body::Error(ErrorInfo {
            code: code.to_string(),
            message,
        }))
    }

    fn envelope(&mut self, body: Body) -> Envelope {
        self.seq_out += 1;
        Envelope::new(self.seq_out, (self.clock)(), body)
    }
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("round_id", &self.round_id)
            .field("text", &self.keyboard.text())
            .field("greeted", &self.greeted)
            .finish_non_exhaustive()
    }
}
