//! Sequential decision loops over a fixed observation schedule.
//!
//! Every run is a sequence of [`Session::ask`] / [`Session::tell`] calls, so
//! driving a session by hand with the same observations reproduces
//! [`run`] exactly.

mod config;
mod decide;
mod schedule;
mod session;
mod trace;

pub use config::{BOConfig, TwoStepMethod};
pub use schedule::{starting_times, Schedule};
pub use session::{PendingDecision, Session, SESSION_FORMAT, SESSION_VERSION};
pub use trace::{RunTrace, StepRecord};

use crate::error::{Error, Result};
use crate::gp::Dataset;

/// A black-box objective over normalized inputs.
pub trait Oracle {
    fn dim(&self) -> usize;
    /// One (possibly noisy) observation at normalized `x` and time `t`.
    fn evaluate(&mut self, x: &[f64], t: f64) -> Result<f64>;
}

/// Runs `config` over `schedule`. Oracle failures end the run and are
/// recorded in [`RunTrace::failure`].
pub fn run(
    oracle: &mut dyn Oracle,
    data: Dataset,
    schedule: Schedule,
    config: BOConfig,
) -> Result<RunTrace> {
    if oracle.dim() != data.dim() {
        return Err(Error::InvalidArgument(format!(
            "oracle dimension {} does not match data dimension {}",
            oracle.dim(),
            data.dim()
        )));
    }
    let mut session = Session::new(config, data, schedule)?;
    while !session.is_complete() {
        let (x, t) = session.ask()?;
        let y = match oracle.evaluate(&x, t) {
            Ok(y) if y.is_finite() => y,
            Ok(y) => return Ok(failed(&session, format!("oracle returned {y} at t = {t}"))),
            Err(e) => return Ok(failed(&session, format!("oracle failed at t = {t}: {e}"))),
        };
        session.tell(y)?;
    }
    Ok(session.trace())
}

fn failed(session: &Session, message: String) -> RunTrace {
    log::warn!("{message}");
    let mut trace = session.trace();
    trace.failure = Some(message);
    trace
}

/// Generic myopic loop: maximize the acquisition at each scheduled time.
pub fn run_myopic(
    oracle: &mut dyn Oracle,
    data: Dataset,
    schedule: Schedule,
    config: BOConfig,
) -> Result<RunTrace> {
    if config.is_lookahead() {
        return Err(Error::InvalidArgument(
            "run_myopic needs a myopic acquisition".into(),
        ));
    }
    run(oracle, data, schedule, config)
}

/// Recursive two-step lookahead: maximize the two-step acquisition with
/// horizon `T` before the horizon, then the value function at `T`.
pub fn run_recursive_two_step(
    oracle: &mut dyn Oracle,
    data: Dataset,
    schedule: Schedule,
    config: BOConfig,
) -> Result<RunTrace> {
    if !config.is_lookahead() {
        return Err(Error::InvalidArgument(
            "run_recursive_two_step needs a lookahead acquisition".into(),
        ));
    }
    run(oracle, data, schedule, config)
}
