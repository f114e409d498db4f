//! Threshold freezing at exponential times.
//!
//! Under [`Schedule::Exponential`] the thresholds that gate the urn are
//! refreshed only at the integer times `floor(q^j)`, `j >= 1`, and held
//! constant in between. Powers of `q` are evaluated exactly: every `f64` is
//! `m * 2^e` with integer `m`, so `floor(q^j)` is an integer shift of `m^j`.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UrnError};
use crate::scalar::Scalar;
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// Gating thresholds follow the live estimates after every step.
    EveryStep,
    /// Gating thresholds refresh at `floor(q^j)` only.
    Exponential { q: f64 },
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Schedule::EveryStep => Ok(()),
            Schedule::Exponential { q } => check_q(q),
        }
    }
}

fn check_q(q: f64) -> Result<()> {
    if q.is_finite() && q > 1.0 {
        Ok(())
    } else {
        Err(UrnError::Config(format!("q must satisfy q > 1, got {q}")))
    }
}

/// Iterator over `floor(q^j)` for `j = start, start + 1, ...`, computed exactly.
#[derive(Debug, Clone)]
pub struct PowerFloors {
    mantissa: BigUint,
    power: BigUint,
    /// `q = mantissa * 2^exponent`
    exponent: i64,
    j: u64,
}

impl PowerFloors {
    pub fn new(q: f64, start: u64) -> Result<Self> {
        check_q(q)?;
        let bits = q.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let mut mant = (bits & ((1u64 << 52) - 1)) | (1u64 << 52);
        let mut exponent = raw_exp - 1075;
        let tz = mant.trailing_zeros();
        mant >>= tz;
        exponent += tz as i64;
        let mantissa = BigUint::from(mant);
        let power = mantissa.pow(start as u32);
        Ok(Self { mantissa, power, exponent, j: start })
    }

    /// Exact test of `q^j <= n` for the current `j`.
    fn current_at_most(&self, n: u64) -> bool {
        let shift = self.exponent * self.j as i64;
        if shift >= 0 {
            (&self.power << (shift as u64)) <= BigUint::from(n)
        } else {
            self.power <= (BigUint::from(n) << ((-shift) as u64))
        }
    }

    fn current(&self) -> u64 {
        let shift = self.exponent * self.j as i64;
        let value = if shift >= 0 {
            &self.power << (shift as u64)
        } else {
            &self.power >> ((-shift) as u64)
        };
        u64::try_from(value).unwrap_or(u64::MAX)
    }
}

impl Iterator for PowerFloors {
    /// `(j, floor(q^j))`
    type Item = (u64, u64);

    fn next(&mut self) -> Option<Self::Item> {
        let item = (self.j, self.current());
        self.power *= &self.mantissa;
        self.j += 1;
        Some(item)
    }
}

/// Sorted, deduplicated `{floor(q^j) : j >= 1, floor(q^j) <= n_max}`.
pub fn update_times(q: f64, n_max: u64) -> Result<Vec<u64>> {
    let mut times: Vec<u64> = PowerFloors::new(q, 1)?
        .map(|(_, t)| t)
        .take_while(|&t| t <= n_max)
        .collect();
    times.dedup();
    Ok(times)
}

/// `floor(log_q n)` by exact comparison of powers, for `n >= 1`.
pub fn k_n(q: f64, n: u64) -> Result<u64> {
    if n == 0 {
        return Err(UrnError::Domain("k_n is defined for n >= 1".into()));
    }
    let mut powers = PowerFloors::new(q, 1)?;
    let mut k = 0;
    while powers.current_at_most(n) {
        k = powers.j;
        powers.next();
    }
    Ok(k)
}

/// Live and frozen thresholds of one trajectory, plus the running mean of
/// the frozen values that centers the allocation proportion.
#[derive(Debug, Clone)]
pub struct ThresholdState<F> {
    schedule: Schedule,
    live: [F; 2],
    frozen: [F; 2],
    upcoming: Option<PowerFloors>,
    next_update: Option<u64>,
    last_n: u64,
    rho_bar_acc: [CompensatedSum<F>; 2],
}

impl<F: Scalar> ThresholdState<F> {
    /// `initial` plays the role of both the live and frozen thresholds
    /// before the first step.
    pub fn new(schedule: Schedule, initial: [F; 2]) -> Result<Self> {
        schedule.validate()?;
        if !(initial[0] >= initial[1]) {
            return Err(UrnError::Config(format!(
                "thresholds must satisfy rho1 >= rho2, got ({}, {})",
                initial[0], initial[1]
            )));
        }
        let (upcoming, next_update) = match schedule {
            Schedule::EveryStep => (None, None),
            Schedule::Exponential { q } => {
                let mut it = PowerFloors::new(q, 1)?;
                let first = it.next().map(|(_, t)| t);
                (Some(it), first)
            }
        };
        Ok(Self {
            schedule,
            live: initial,
            frozen: initial,
            upcoming,
            next_update,
            last_n: 0,
            rho_bar_acc: [CompensatedSum::new(), CompensatedSum::new()],
        })
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    /// Latest live estimates `(rho1_hat, rho2_hat)`.
    pub fn live(&self) -> [F; 2] {
        self.live
    }

    /// Frozen thresholds `(rho1_tilde, rho2_tilde)`; equal to the live ones
    /// under [`Schedule::EveryStep`].
    pub fn frozen(&self) -> [F; 2] {
        self.frozen
    }

    /// Thresholds that gate the next draw.
    pub fn active(&self) -> [F; 2] {
        self.frozen
    }

    /// Steps folded in so far.
    pub fn steps(&self) -> u64 {
        self.last_n
    }

    /// Next time the frozen values will refresh, if any.
    pub fn next_update(&self) -> Option<u64> {
        self.next_update
    }

    /// Records the end of step `n` with live estimates `live`.
    ///
    /// The threshold that was active during step `n` enters the running
    /// mean first; then the live values are stored and, at an update time,
    /// copied into the frozen ones.
    pub fn advance(&mut self, n: u64, live: [F; 2]) -> Result<()> {
        if n != self.last_n + 1 {
            return Err(UrnError::Usage(format!(
                "threshold schedule expected step {}, got {n}",
                self.last_n + 1
            )));
        }
        self.rho_bar_acc[0].add(self.frozen[0]);
        self.rho_bar_acc[1].add(self.frozen[1]);
        self.last_n = n;
        self.live = live;
        match self.schedule {
            Schedule::EveryStep => self.frozen = live,
            Schedule::Exponential { .. } => {
                if self.next_update == Some(n) {
                    // Nothing has been observed before step 1, so a freeze
                    // there keeps the initial thresholds.
                    if n > 1 {
                        self.frozen = live;
                    }
                    let it = self.upcoming.as_mut().expect("exponential schedule has times");
                    self.next_update = it.by_ref().map(|(_, t)| t).find(|&t| t > n);
                }
            }
        }
        Ok(())
    }

    /// Mean of the active thresholds over the elapsed steps, per arm.
    pub fn rho_bar(&self) -> Option<[F; 2]> {
        (self.last_n > 0).then(|| {
            let n = F::lit(self.last_n as f64);
            [self.rho_bar_acc[0].value() / n, self.rho_bar_acc[1].value() / n]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_time_examples() {
        assert_eq!(update_times(1.25, 10).unwrap(), vec![1, 2, 3, 4, 5, 7, 9]);
        assert_eq!(update_times(2.0, 8).unwrap(), vec![2, 4, 8]);
        assert!(update_times(10.0, 5).unwrap().is_empty());
        assert!(update_times(1.0, 5).is_err());
        assert!(update_times(0.9, 5).is_err());
    }

    #[test]
    fn update_times_match_float_enumeration_for_small_j() {
        // 1.25^j = 5^j / 4^j is exact in f64 while 5^j < 2^53.
        let times = update_times(1.25, 100_000).unwrap();
        let mut expected: Vec<u64> = (1..=22).map(|j| 1.25f64.powi(j).floor() as u64).collect();
        expected.dedup();
        assert_eq!(&times[..expected.len()], &expected[..]);
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn k_n_examples() {
        assert_eq!(k_n(1.25, 200).unwrap(), 23);
        assert_eq!(k_n(2.0, 8).unwrap(), 3);
        assert_eq!(k_n(2.0, 7).unwrap(), 2);
        assert_eq!(k_n(2.0, 1).unwrap(), 0);
        assert_eq!(k_n(3.0, 9).unwrap(), 2);
        // 1.25^3 = 1.953 > 1 even though floor(1.25^3) = 1
        assert_eq!(k_n(1.25, 1).unwrap(), 0);
        assert_eq!(k_n(1.25, 2).unwrap(), 3);
    }

    #[test]
    fn k_n_is_exact_at_power_boundaries() {
        for q in [1.5f64, 2.0, 1.25, 3.0] {
            for n in 1..2000u64 {
                let k = k_n(q, n).unwrap() as i32;
                // these q have short binary expansions, so f64 powers are exact here
                assert!(q.powi(k) <= n as f64 && q.powi(k + 1) > n as f64, "q={q} n={n}");
            }
        }
    }

    #[test]
    fn exponential_freezes_only_at_update_times() {
        let mut ts = ThresholdState::new(Schedule::Exponential { q: 2.0 }, [0.6, 0.4]).unwrap();
        ts.advance(1, [0.9, 0.1]).unwrap();
        assert_eq!(ts.frozen(), [0.6, 0.4]);
        ts.advance(2, [0.65, 0.35]).unwrap();
        assert_eq!(ts.frozen(), [0.65, 0.35]);
        ts.advance(3, [0.5, 0.2]).unwrap();
        ts.advance(4, [0.7, 0.4]).unwrap();
        assert_eq!(ts.frozen(), [0.7, 0.4]);
        ts.advance(5, [0.8, 0.5]).unwrap();
        assert_eq!(ts.frozen(), [0.7, 0.4]);
        assert_eq!(ts.live(), [0.8, 0.5]);
        assert_eq!(ts.next_update(), Some(8));
    }

    #[test]
    fn every_step_tracks_live() {
        let mut ts = ThresholdState::new(Schedule::EveryStep, [0.6, 0.4]).unwrap();
        for n in 1..10 {
            let live = [0.5 + n as f64 / 100.0, 0.3];
            ts.advance(n, live).unwrap();
            assert_eq!(ts.frozen(), live);
        }
    }

    #[test]
    fn advance_rejects_skips_and_repeats() {
        let mut ts = ThresholdState::new(Schedule::EveryStep, [0.6, 0.4]).unwrap();
        ts.advance(1, [0.6, 0.4]).unwrap();
        assert!(matches!(ts.advance(1, [0.6, 0.4]), Err(UrnError::Usage(_))));
        assert!(matches!(ts.advance(3, [0.6, 0.4]), Err(UrnError::Usage(_))));
    }

    #[test]
    fn rho_bar_examples() {
        let mut ts = ThresholdState::<f64>::new(Schedule::Exponential { q: 1.25 }, [0.6, 0.6]).unwrap();
        assert_eq!(ts.rho_bar(), None);
        for n in 1..=50 {
            ts.advance(n, [0.6, 0.6]).unwrap();
            assert!((ts.rho_bar().unwrap()[0] - 0.6).abs() < 1e-15);
        }
        let mut ts = ThresholdState::<f64>::new(Schedule::EveryStep, [0.5, 0.5]).unwrap();
        ts.advance(1, [0.7, 0.7]).unwrap();
        ts.advance(2, [0.7, 0.7]).unwrap();
        assert!((ts.rho_bar().unwrap()[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn rejects_unordered_initial_thresholds() {
        assert!(ThresholdState::new(Schedule::EveryStep, [0.3, 0.4]).is_err());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn frozen_value_is_the_capture_at_the_last_update(
            q in 1.05f64..3.0,
            lives in proptest::collection::vec(0.5f64..0.99, 1..300),
        ) {
            let mut ts = ThresholdState::new(Schedule::Exponential { q }, [0.6, 0.4]).unwrap();
            let times = update_times(q, lives.len() as u64).unwrap();
            let mut prev_acc = 0.0;
            for (i, &l) in lives.iter().enumerate() {
                let n = i as u64 + 1;
                let before = ts.active()[0];
                ts.advance(n, [l, 0.1]).unwrap();
                // Agreement with the floor(log_q n) form. The two forms differ
                // only at n = floor(q^(k_n + 1)) with q^(k_n + 1) not an
                // integer, where the schedule has already refreshed.
                let k = k_n(q, n).unwrap();
                let mut powers = PowerFloors::new(q, k).unwrap();
                let mut capture = powers.next().unwrap().1;
                let following = powers.next().unwrap().1;
                if following == n {
                    capture = n;
                }
                let expected = if capture > 1 && times.contains(&capture) {
                    lives[capture as usize - 1]
                } else {
                    0.6
                };
                prop_assert_eq!(ts.frozen()[0], expected);
                // n * bar_n - (n - 1) * bar_{n-1} = active value during step n
                let acc = ts.rho_bar().unwrap()[0] * n as f64;
                prop_assert!((acc - prev_acc - before).abs() < 1e-12);
                prev_acc = acc;
                prop_assert!(ts.frozen()[0] >= ts.frozen()[1]);
            }
        }
    }
}
