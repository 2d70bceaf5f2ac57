//! Time signals used to drive simulations.

use rand::Rng;

use crate::friction::ParamError;

/// A scalar signal of time. Implemented by [`InputSignal`] and by plain
/// closures, so tests and callers can pass `|t| ...` directly.
pub trait Signal {
    fn eval(&self, t: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Signal for F {
    fn eval(&self, t: f64) -> f64 {
        self(t)
    }
}

/// Config-constructible input signals.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSignal {
    Constant(f64),
    /// `amplitude * sin(2 pi freq_hz t + phase) + offset`
    Sinusoid {
        amplitude: f64,
        freq_hz: f64,
        phase: f64,
        offset: f64,
    },
    /// 0 until `start`, then `rate * (t - start)`, held constant from `hold` on.
    Ramp {
        rate: f64,
        start: f64,
        hold: f64,
    },
    /// Piecewise-linear table; constant extrapolation outside the knots.
    Table(Vec<(f64, f64)>),
}

impl InputSignal {
    /// Validates structural invariants (table times strictly increasing,
    /// ramp hold not before start).
    pub fn validate(&self) -> Result<(), ParamError> {
        match self {
            InputSignal::Table(knots) => {
                if knots.is_empty() {
                    return Err(ParamError {
                        name: "input.times",
                        requirement: "non-empty",
                        value: 0.0,
                    });
                }
                for w in knots.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(ParamError {
                            name: "input.times",
                            requirement: "strictly increasing",
                            value: w[1].0,
                        });
                    }
                }
                Ok(())
            }
            InputSignal::Ramp { start, hold, .. } => {
                if hold < start {
                    return Err(ParamError {
                        name: "input.hold",
                        requirement: ">= input.start",
                        value: *hold,
                    });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Exact range of the signal over `[0, t_end]`, per variant.
    pub fn range(&self, t_end: f64) -> (f64, f64) {
        match self {
            InputSignal::Constant(c) => (*c, *c),
            InputSignal::Sinusoid {
                amplitude, offset, ..
            } => (offset - amplitude.abs(), offset + amplitude.abs()),
            InputSignal::Ramp { rate, start, hold } => {
                let t_top = hold.min(t_end).max(*start);
                let peak = rate * (t_top - start);
                (peak.min(0.0), peak.max(0.0))
            }
            InputSignal::Table(knots) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                // linear interpolation attains extremes at knots (or clamped ends)
                lo = lo.min(self.eval(0.0)).min(self.eval(t_end));
                hi = hi.max(self.eval(0.0)).max(self.eval(t_end));
                for &(t, v) in knots {
                    if t >= 0.0 && t <= t_end {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                (lo, hi)
            }
        }
    }
}

impl Signal for InputSignal {
    fn eval(&self, t: f64) -> f64 {
        match self {
            InputSignal::Constant(c) => *c,
            InputSignal::Sinusoid {
                amplitude,
                freq_hz,
                phase,
                offset,
            } => amplitude * (2.0 * std::f64::consts::PI * freq_hz * t + phase).sin() + offset,
            InputSignal::Ramp { rate, start, hold } => {
                let t_eff = t.min(*hold);
                if t_eff <= *start {
                    0.0
                } else {
                    rate * (t_eff - start)
                }
            }
            InputSignal::Table(knots) => {
                if knots.is_empty() {
                    return 0.0;
                }
                if t <= knots[0].0 {
                    return knots[0].1;
                }
                if t >= knots[knots.len() - 1].0 {
                    return knots[knots.len() - 1].1;
                }
                let i = knots.partition_point(|&(tk, _)| tk <= t);
                let (t0, v0) = knots[i - 1];
                let (t1, v1) = knots[i];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }
}

/// Smooth multi-tone signal `offset + sum a_j sin(2 pi f_j t + phi_j)`,
/// the workhorse of the randomized property suites.
#[derive(Debug, Clone)]
pub struct SumOfSines {
    pub offset: f64,
    /// `(amplitude, freq_hz, phase)` per tone.
    pub terms: Vec<(f64, f64, f64)>,
}

impl SumOfSines {
    /// Draws a random signal with `n_terms` tones, total amplitude at most
    /// `amp_total`, frequencies in `freq_range`, and the given offset range.
    /// With `offset_range` bounded away from zero by more than `amp_total`
    /// the signal never crosses zero.
    pub fn random<R: Rng>(
        rng: &mut R,
        n_terms: usize,
        offset_range: (f64, f64),
        amp_total: f64,
        freq_range: (f64, f64),
    ) -> Self {
        let offset = rng.random_range(offset_range.0..=offset_range.1);
        let mut weights: Vec<f64> = (0..n_terms).map(|_| rng.random_range(0.1..1.0)).collect();
        let wsum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w *= amp_total / wsum;
        }
        let terms = weights
            .into_iter()
            .map(|a| {
                (
                    a,
                    rng.random_range(freq_range.0..=freq_range.1),
                    rng.random_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        Self { offset, terms }
    }

    /// Largest attainable |value| over any horizon.
    pub fn amplitude_bound(&self) -> f64 {
        self.offset.abs() + self.terms.iter().map(|(a, _, _)| a.abs()).sum::<f64>()
    }
}

impl Signal for SumOfSines {
    fn eval(&self, t: f64) -> f64 {
        let mut v = self.offset;
        for &(a, f, phi) in &self.terms {
            v += a * (std::f64::consts::TAU * f * t + phi).sin();
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn table_interpolates_and_clamps() {
        let s = InputSignal::Table(vec![(0.0, 1.0), (1.0, 3.0), (2.0, 0.0)]);
        s.validate().unwrap();
        assert_eq!(s.eval(-1.0), 1.0);
        assert_relative_eq!(s.eval(0.5), 2.0);
        assert_relative_eq!(s.eval(1.5), 1.5);
        assert_eq!(s.eval(5.0), 0.0);
        assert_eq!(s.range(2.0), (0.0, 3.0));
    }

    #[test]
    fn table_rejects_non_increasing_times() {
        let s = InputSignal::Table(vec![(0.0, 1.0), (0.0, 3.0)]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn ramp_holds() {
        let s = InputSignal::Ramp {
            rate: 2.5,
            start: 1.0,
            hold: 41.0,
        };
        assert_eq!(s.eval(0.5), 0.0);
        assert_relative_eq!(s.eval(21.0), 50.0);
        assert_relative_eq!(s.eval(100.0), 100.0);
        assert_eq!(s.range(100.0), (0.0, 100.0));
    }
}
