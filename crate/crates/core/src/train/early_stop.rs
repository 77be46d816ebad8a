//! The overfitting early-stop controller.
//!
//! Training is evaluated periodically against a fixed statistic threshold.
//! An evaluation below the threshold is a pass: the model is checkpointed
//! and the violation counter resets. An evaluation at or above it is a
//! violation; once `grace` violations occur in a row, training terminates
//! and the most recent passing checkpoint is restored. The controller is
//! pure — it never looks inside the checkpoints — so its full behavior is
//! verified by exhaustive scripted traces.

use crate::error::{Error, Result};

/// Outcome of one observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// Statistic below threshold: checkpointed, violations reset.
    Pass,
    /// Statistic at or above threshold, grace not yet used up.
    Violation,
    /// Grace exhausted: stop training and restore the best checkpoint.
    Stop,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Pass => "pass",
            Decision::Violation => "violation",
            Decision::Stop => "stop",
        }
    }
}

/// One line of the early-stop history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStopEvent {
    pub epoch: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub decision: Decision,
}

/// The controller, generic over whatever a checkpoint is.
#[derive(Debug, Clone)]
pub struct EarlyStop<C> {
    threshold: f64,
    grace: usize,
    violations: usize,
    best: Option<(usize, C)>,
    log: Vec<EarlyStopEvent>,
}

impl<C> EarlyStop<C> {
    pub fn new(threshold: f64, grace: usize) -> Result<Self> {
        if grace == 0 {
            return Err(Error::Config("grace must be at least 1".into()));
        }
        if !threshold.is_finite() {
            return Err(Error::Config(format!(
                "threshold {threshold} must be finite"
            )));
        }
        Ok(EarlyStop {
            threshold,
            grace,
            violations: 0,
            best: None,
            log: Vec::new(),
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Feeds one evaluation. `checkpoint` is only invoked on a pass.
    pub fn observe(
        &mut self,
        epoch: usize,
        statistic: f64,
        checkpoint: impl FnOnce() -> C,
    ) -> Decision {
        let decision = if statistic < self.threshold {
            self.violations = 0;
            self.best = Some((epoch, checkpoint()));
            Decision::Pass
        } else {
            self.violations += 1;
            if self.violations >= self.grace {
                Decision::Stop
            } else {
                Decision::Violation
            }
        };
        self.log.push(EarlyStopEvent {
            epoch,
            statistic,
            threshold: self.threshold,
            decision,
        });
        decision
    }

    /// Epoch of the most recent passing checkpoint, if any.
    pub fn best_epoch(&self) -> Option<usize> {
        self.best.as_ref().map(|(e, _)| *e)
    }

    pub fn events(&self) -> &[EarlyStopEvent] {
        &self.log
    }

    /// Consumes the controller: the most recent passing checkpoint (if any
    /// evaluation passed) and the full history.
    pub fn finish(self) -> (Option<(usize, C)>, Vec<EarlyStopEvent>) {
        (self.best, self.log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Drives a controller with a scripted pass/fail sequence: `true` means
    /// the statistic falls below the threshold. Returns the decisions, the
    /// restored checkpoint label, and how many observations were consumed.
    fn run_script(script: &[bool], grace: usize) -> (Vec<Decision>, Option<usize>, usize) {
        let mut stop = EarlyStop::new(0.5, grace).unwrap();
        let mut decisions = Vec::new();
        let mut consumed = 0;
        for (i, &pass) in script.iter().enumerate() {
            let stat = if pass { 0.0 } else { 1.0 };
            let d = stop.observe(i + 1, stat, || i + 1);
            decisions.push(d);
            consumed += 1;
            if d == Decision::Stop {
                break;
            }
        }
        let (best, _) = stop.finish();
        (decisions, best.map(|(_, label)| label), consumed)
    }

    #[test]
    fn low_high_high_stops_and_restores_the_first_checkpoint() {
        let (decisions, restored, consumed) = run_script(&[true, false, false], 2);
        assert_eq!(
            decisions,
            vec![Decision::Pass, Decision::Violation, Decision::Stop]
        );
        assert_eq!(consumed, 3);
        assert_eq!(restored, Some(1));
    }

    #[test]
    fn alternating_violations_never_stop() {
        let script = [false, true, false, true, false, true, false, true];
        let (decisions, restored, consumed) = run_script(&script, 2);
        assert_eq!(consumed, script.len(), "no early termination");
        assert!(decisions.iter().all(|d| *d != Decision::Stop));
        assert_eq!(restored, Some(8), "latest passing evaluation wins");
    }

    #[test]
    fn all_failures_leave_no_checkpoint() {
        let (decisions, restored, consumed) = run_script(&[false, false], 2);
        assert_eq!(decisions, vec![Decision::Violation, Decision::Stop]);
        assert_eq!(consumed, 2);
        assert_eq!(restored, None);
    }

    /// Independent oracle for a scripted trace: the controller must stop at
    /// the first position ending a run of `grace` consecutive failures, and
    /// restore the latest pass seen before stopping (or in the whole script
    /// when it never stops).
    fn oracle(script: &[bool], grace: usize) -> (Option<usize>, Option<usize>, usize) {
        let mut run = 0;
        let mut stop_at = None;
        let mut consumed = script.len();
        for (i, &pass) in script.iter().enumerate() {
            run = if pass { 0 } else { run + 1 };
            if run == grace {
                stop_at = Some(i);
                consumed = i + 1;
                break;
            }
        }
        let restored = script[..consumed]
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(|(i, _)| i + 1)
            .next_back();
        (stop_at.map(|i| i + 1), restored, consumed)
    }

    #[test]
    fn exhaustive_traces_up_to_length_eight_match_the_oracle() {
        let grace = 2;
        for len in 1..=8usize {
            for bits in 0..(1u32 << len) {
                let script: Vec<bool> = (0..len).map(|i| bits >> i & 1 == 1).collect();
                let (decisions, restored, consumed) = run_script(&script, grace);
                let (want_stop, want_restored, want_consumed) = oracle(&script, grace);
                assert_eq!(consumed, want_consumed, "script {script:?}");
                assert_eq!(restored, want_restored, "script {script:?}");
                let stopped = decisions.last() == Some(&Decision::Stop);
                assert_eq!(stopped, want_stop.is_some(), "script {script:?}");
                if let Some(at) = want_stop {
                    assert_eq!(consumed, at, "script {script:?}");
                }
            }
        }
    }

    #[test]
    fn grace_of_one_stops_on_the_first_failure() {
        let (decisions, restored, _) = run_script(&[true, true, false, true], 1);
        assert_eq!(
            decisions,
            vec![Decision::Pass, Decision::Pass, Decision::Stop]
        );
        assert_eq!(restored, Some(2));
    }

    #[test]
    fn zero_grace_is_rejected() {
        assert!(EarlyStop::<()>::new(0.5, 0).is_err());
        assert!(EarlyStop::<()>::new(f64::NAN, 2).is_err());
    }
}
