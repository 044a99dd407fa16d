use super::{Scheme, SolverSettings};

/// Outcome of one increment attempt, as seen by the step controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Cut,
    Converged {
        scheme: Scheme,
        macro_iterations: usize,
        /// Largest per-RVE micro iteration count in the increment.
        max_micro_iterations: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepDecision {
    /// Retry the same target with the reduced step.
    Retry {
        dt: f64,
    },
    Grow {
        dt: f64,
    },
    Hold {
        dt: f64,
    },
    Abort,
}

impl StepDecision {
    pub fn dt(self) -> Option<f64> {
        match self {
            StepDecision::Retry { dt } | StepDecision::Grow { dt } | StepDecision::Hold { dt } => Some(dt),
            StepDecision::Abort => None,
        }
    }
}

/// Cut on failure, grow after an easy increment, otherwise hold.
///
/// An increment is easy when every RVE converged within `⌈n_max/2⌉` micro
/// iterations (staggered) or the macro loop within `⌈max_macro_iter/2⌉`
/// iterations (monolithic).
pub fn adapt_step(outcome: StepOutcome, dt: f64, settings: &SolverSettings) -> StepDecision {
    match outcome {
        StepOutcome::Cut => {
            let dt = settings.cut_factor * dt;
            if dt < settings.dt_min {
                StepDecision::Abort
            } else {
                StepDecision::Retry { dt }
            }
        }
        StepOutcome::Converged {
            scheme,
            macro_iterations,
            max_micro_iterations,
        } => {
            let easy = if scheme.is_monolithic() {
                macro_iterations <= settings.max_macro_iter.div_ceil(2)
            } else {
                max_micro_iterations <= settings.n_max.div_ceil(2)
            };
            if easy && dt < settings.dt_max {
                StepDecision::Grow {
                    dt: (settings.growth_factor * dt).min(settings.dt_max),
                }
            } else {
                StepDecision::Hold { dt }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn staggered(max_micro: usize) -> StepOutcome {
        StepOutcome::Converged {
            scheme: Scheme::Staggered,
            macro_iterations: 3,
            max_micro_iterations: max_micro,
        }
    }

    #[test]
    fn cut_halves_and_retries() {
        let s = SolverSettings::default();
        assert_eq!(adapt_step(StepOutcome::Cut, 0.1, &s), StepDecision::Retry { dt: 0.05 });
    }

    #[test]
    fn cut_below_minimum_aborts() {
        let s = SolverSettings {
            dt_min: 0.06,
            dt_initial: 0.1,
            ..Default::default()
        };
        assert_eq!(adapt_step(StepOutcome::Cut, 0.1, &s), StepDecision::Abort);
    }

    #[test]
    fn staggered_thresholds() {
        let s = SolverSettings::default();
        assert_eq!(
            adapt_step(staggered(2), 0.1, &s),
            StepDecision::Grow {
                dt: 0.15000000000000002
            }
        );
        assert_eq!(adapt_step(staggered(6), 0.1, &s).dt(), Some(1.5 * 0.1));
        assert_eq!(adapt_step(staggered(7), 0.1, &s), StepDecision::Hold { dt: 0.1 });
        assert_eq!(adapt_step(staggered(8), 0.1, &s), StepDecision::Hold { dt: 0.1 });
        assert_eq!(adapt_step(staggered(12), 0.1, &s), StepDecision::Hold { dt: 0.1 });
    }

    #[test]
    fn growth_is_capped() {
        let s = SolverSettings::default();
        assert_eq!(adapt_step(staggered(1), 0.2, &s), StepDecision::Grow { dt: 0.25 });
        assert_eq!(adapt_step(staggered(1), 0.25, &s), StepDecision::Hold { dt: 0.25 });
    }

    #[test]
    fn monolithic_uses_macro_iterations() {
        let s = SolverSettings::default();
        let outcome = |k| StepOutcome::Converged {
            scheme: Scheme::MonolithicStored,
            macro_iterations: k,
            max_micro_iterations: 1,
        };
        assert!(matches!(adapt_step(outcome(8), 0.1, &s), StepDecision::Grow { .. }));
        assert_eq!(adapt_step(outcome(9), 0.1, &s), StepDecision::Hold { dt: 0.1 });
    }

    #[test]
    fn odd_budget_rounds_up() {
        let s = SolverSettings {
            n_max: 7,
            ..Default::default()
        };
        assert!(matches!(adapt_step(staggered(4), 0.1, &s), StepDecision::Grow { .. }));
        assert_eq!(adapt_step(staggered(5), 0.1, &s), StepDecision::Hold { dt: 0.1 });
    }
}
