//! Epoch schedules and interval planning, evaluated exactly.

use std::cmp::Ordering;

use num_bigint::BigUint;

use super::EngineError;

/// Largest epoch count accepted by [`compute_theorem2_schedule`].
pub const MAX_SCHEDULE_EPOCHS: u64 = 10_000_000;
/// Largest worker count accepted by the schedule and planner.
pub const MAX_WORKERS: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    FixedInterval,
    Theorem2,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epoch {
    pub length: u64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochSchedule {
    pub mode: ScheduleMode,
    pub epochs: Vec<Epoch>,
}

impl EpochSchedule {
    pub fn explicit(lengths: &[u64], rates: &[f64]) -> Result<Self, EngineError> {
        if lengths.len() != rates.len() {
            return Err(EngineError::InvalidConfig(format!(
                "schedule has {} lengths but {} rates",
                lengths.len(),
                rates.len()
            )));
        }
        let schedule = Self {
            mode: ScheduleMode::Explicit,
            epochs: lengths
                .iter()
                .zip(rates)
                .map(|(&length, &gamma)| Epoch { length, gamma })
                .collect(),
        };
        schedule.validate()?;
        Ok(schedule)
    }

    /// `epochs` epochs of length `interval` at a constant rate.
    pub fn fixed_interval(interval: u64, gamma: f64, epochs: u64) -> Result<Self, EngineError> {
        let schedule = Self {
            mode: ScheduleMode::FixedInterval,
            epochs: vec![
                Epoch {
                    length: interval,
                    gamma
                };
                epochs as usize
            ],
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.epochs.is_empty() {
            return Err(EngineError::InvalidConfig("schedule has no epochs".into()));
        }
        for (s, e) in self.epochs.iter().enumerate() {
            if e.length == 0 {
                return Err(EngineError::InvalidConfig(format!(
                    "epoch {} has length 0",
                    s + 1
                )));
            }
            if !(e.gamma > 0.0 && e.gamma.is_finite()) {
                return Err(EngineError::InvalidConfig(format!(
                    "epoch {} has non-positive rate {}",
                    s + 1,
                    e.gamma
                )));
            }
        }
        Ok(())
    }

    /// `T = Σ_s K^s`.
    pub fn total_iterations(&self) -> u64 {
        self.epochs.iter().map(|e| e.length).sum()
    }
}

/// `K^s = ⌈s^{1/3}/N⌉` and `γ^s = N/s^{2/3}` for `s = 1..=epochs`.
///
/// Lengths are exact integers; rates are the correctly rounded `f64` values.
pub fn compute_theorem2_schedule(workers: u64, epochs: u64) -> Result<EpochSchedule, EngineError> {
    if workers == 0 || epochs == 0 {
        return Err(EngineError::InvalidConfig(
            "schedule needs at least one worker and one epoch".into(),
        ));
    }
    if epochs > MAX_SCHEDULE_EPOCHS || workers > MAX_WORKERS {
        return Err(EngineError::ScheduleTooLarge {
            epochs,
            cap: MAX_SCHEDULE_EPOCHS,
        });
    }
    let epochs = (1..=epochs)
        .map(|s| Epoch {
            length: theorem2_length(workers, s),
            gamma: theorem2_rate(workers, s),
        })
        .collect();
    Ok(EpochSchedule {
        mode: ScheduleMode::Theorem2,
        epochs,
    })
}

/// Smallest `c` with `c³ ≥ s`.
fn ceil_cbrt(s: u64) -> u64 {
    let mut c = (s as f64).cbrt().round() as u64;
    while (c as u128).pow(3) < s as u128 {
        c += 1;
    }
    while c > 0 && ((c - 1) as u128).pow(3) >= s as u128 {
        c -= 1;
    }
    c
}

/// `⌈s^{1/3}/N⌉ = ⌈⌈s^{1/3}⌉/N⌉`.
pub fn theorem2_length(workers: u64, s: u64) -> u64 {
    ceil_cbrt(s).div_ceil(workers).max(1)
}

/// Compares `N/s^{2/3}` with `num · 2^exp` by cubing both sides.
fn cmp_rate(workers: u64, s: u64, num: u128, exp: i64) -> Ordering {
    let lhs = BigUint::from(workers).pow(3u32);
    let rhs = BigUint::from(num).pow(3u32) * BigUint::from(s).pow(2u32);
    let shift = 3 * exp;
    if shift >= 0 {
        lhs.cmp(&(rhs << (shift as u64)))
    } else {
        (lhs << ((-shift) as u64)).cmp(&rhs)
    }
}

/// `(mantissa, exponent)` with `x = mantissa · 2^exponent`, for finite `x > 0`.
fn decompose(x: f64) -> (u128, i64) {
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp_bits == 0 {
        (frac as u128, -1074)
    } else {
        ((frac | (1u64 << 52)) as u128, exp_bits - 1075)
    }
}

/// Exact midpoint of two positive doubles as `num · 2^exp`.
fn midpoint(a: f64, b: f64) -> (u128, i64) {
    let (ma, ea) = decompose(a);
    let (mb, eb) = decompose(b);
    let e = ea.min(eb);
    let num = (ma << (ea - e)) + (mb << (eb - e));
    (num, e - 1)
}

/// Correctly rounded (ties-to-even) `N / s^{2/3}`.
pub fn theorem2_rate(workers: u64, s: u64) -> f64 {
    let mut g = workers as f64 / (s as f64).cbrt().powi(2);
    loop {
        let up = g.next_up();
        let (num, exp) = midpoint(g, up);
        match cmp_rate(workers, s, num, exp) {
            Ordering::Greater => {
                g = up;
                continue;
            }
            Ordering::Equal => {
                if decompose(g).0 & 1 == 1 {
                    g = up;
                }
                break;
            }
            Ordering::Less => {}
        }
        let down = g.next_down();
        let (num, exp) = midpoint(down, g);
        match cmp_rate(workers, s, num, exp) {
            Ordering::Less => g = down,
            Ordering::Equal => {
                if decompose(g).0 & 1 == 1 {
                    g = down;
                }
                break;
            }
            Ordering::Greater => break,
        }
    }
    g
}

/// Largest `I ≥ 1` with `I ≤ T^{1/4}/N^{3/4}`, i.e. `I⁴N³ ≤ T`.
pub fn plan_interval(iterations: u64, workers: u64) -> u64 {
    let admissible = |i: u64| (i as u128).pow(4) * (workers as u128).pow(3) <= iterations as u128;
    let mut i = ((iterations as f64).powf(0.25) / (workers as f64).powf(0.75)).floor() as u64;
    i = i.max(1);
    while i > 1 && !admissible(i) {
        i -= 1;
    }
    while admissible(i + 1) {
        i += 1;
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem2_examples() {
        let s = compute_theorem2_schedule(2, 27).unwrap();
        assert_eq!(
            s.epochs[0],
            Epoch {
                length: 1,
                gamma: 2.0
            }
        );
        assert_eq!(
            s.epochs[7],
            Epoch {
                length: 1,
                gamma: 0.5
            }
        );
        assert_eq!(s.epochs[26].length, 2);
        assert_eq!(s.epochs[26].gamma, 2.0 / 9.0);

        let one = compute_theorem2_schedule(1, 27).unwrap();
        assert_eq!(one.epochs[0].length, 1);
        assert_eq!(one.epochs[7].length, 2);
        assert_eq!(one.epochs[26].length, 3);

        let four = compute_theorem2_schedule(4, 1).unwrap();
        assert_eq!(
            four.epochs[0],
            Epoch {
                length: 1,
                gamma: 4.0
            }
        );
        assert_eq!(four.total_iterations(), 1);
    }

    #[test]
    fn rates_non_increasing() {
        let s = compute_theorem2_schedule(3, 2000).unwrap();
        assert!(s.epochs.windows(2).all(|w| w[1].gamma <= w[0].gamma));
        assert!(s.epochs.iter().all(|e| e.length >= 1));
    }

    #[test]
    fn schedule_caps() {
        assert!(matches!(
            compute_theorem2_schedule(1, MAX_SCHEDULE_EPOCHS + 1),
            Err(EngineError::ScheduleTooLarge { .. })
        ));
        assert!(compute_theorem2_schedule(0, 3).is_err());
    }

    #[test]
    fn ceil_cbrt_boundaries() {
        assert_eq!(ceil_cbrt(1), 1);
        assert_eq!(ceil_cbrt(8), 2);
        assert_eq!(ceil_cbrt(9), 3);
        assert_eq!(ceil_cbrt(27), 3);
        assert_eq!(ceil_cbrt(28), 4);
    }

    #[test]
    fn plan_interval_examples() {
        assert_eq!(plan_interval(65_536, 4), 5);
        assert_eq!(plan_interval(100_000_000, 1), 100);
        assert_eq!(plan_interval(7, 7), 1);
        assert_eq!(plan_interval(4096, 4), 2);
        assert_eq!(plan_interval(1 << 18, 4), 8);
    }

    #[test]
    fn explicit_schedule_validation() {
        assert!(EpochSchedule::explicit(&[1, 2], &[0.1]).is_err());
        assert!(EpochSchedule::explicit(&[0], &[0.1]).is_err());
        assert!(EpochSchedule::explicit(&[3], &[-1.0]).is_err());
        assert_eq!(
            EpochSchedule::explicit(&[3, 4], &[0.1, 0.2])
                .unwrap()
                .total_iterations(),
            7
        );
    }
}
