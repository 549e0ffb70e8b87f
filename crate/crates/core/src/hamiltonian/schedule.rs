use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ω(t), Δ(t) for quasi-adiabatic preparation: a linear Ω ramp-on at fixed
/// `delta_min`, a cubic Δ sweep from `delta_min` towards `delta_max` at
/// constant `omega_max`, then an optional linear Ω ramp-down at the final
/// detuning.
///
/// The cubic is the Hermite polynomial with zero slope at both ends. A sweep
/// stopped early at some endpoint keeps only the fraction `sweep_fraction`
/// of the cubic segment (see [`SweepSchedule::truncated_at`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSchedule {
    pub omega_max: f64,
    pub t_ramp_on: f64,
    pub t_sweep: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    #[serde(default)]
    pub t_ramp_down: f64,
    #[serde(default = "full_sweep")]
    pub sweep_fraction: f64,
}

fn full_sweep() -> f64 {
    1.0
}

/// Zero-slope cubic on `[0, 1]`.
pub fn cubic(s: f64) -> f64 {
    s * s * (3.0 - 2.0 * s)
}

const TIME_SLACK: f64 = 1e-12;

impl SweepSchedule {
    /// Lab-units schedule used for the array experiments (rad/μs, μs):
    /// Ω = 2π·1.4 reached after 0.25 μs, Δ from −2π·4 to 6Ω over 2 μs, 0.2 μs
    /// ramp-down. The breakpoints are a reconstruction, not tabulated values.
    pub fn lab_default() -> Self {
        let omega = 2.0 * std::f64::consts::PI * 1.4;
        Self {
            omega_max: omega,
            t_ramp_on: 0.25,
            t_sweep: 2.0,
            delta_min: -2.0 * std::f64::consts::PI * 4.0,
            delta_max: 6.0 * omega,
            t_ramp_down: 0.2,
            sweep_fraction: 1.0,
        }
    }

    /// Dimensionless schedule for exact-diagonalisation sweeps with Ω₀ = 1:
    /// total duration `omega_t`, the first tenth of it an Ω ramp-on at
    /// Δ = −2, then a cubic up to Δ = 5, no ramp-down.
    pub fn ed_default(omega_t: f64) -> Self {
        Self {
            omega_max: 1.0,
            t_ramp_on: 0.1 * omega_t,
            t_sweep: 0.9 * omega_t,
            delta_min: -2.0,
            delta_max: 5.0,
            t_ramp_down: 0.0,
            sweep_fraction: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega_max,
            self.t_ramp_on,
            self.t_sweep,
            self.delta_min,
            self.delta_max,
            self.t_ramp_down,
            self.sweep_fraction,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("schedule contains non-finite values".into()));
        }
        if self.omega_max < 0.0 || self.t_ramp_on < 0.0 || self.t_sweep < 0.0 || self.t_ramp_down < 0.0 {
            return Err(Error::InvalidArgument("schedule durations and omega_max must be nonnegative".into()));
        }
        if self.delta_max < self.delta_min {
            return Err(Error::InvalidArgument("delta_max must be at least delta_min".into()));
        }
        if !(0.0..=1.0).contains(&self.sweep_fraction) {
            return Err(Error::InvalidArgument("sweep_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }

    fn t_cubic(&self) -> f64 {
        self.t_sweep * self.sweep_fraction
    }

    pub fn t_total(&self) -> f64 {
        self.t_ramp_on + self.t_cubic() + self.t_ramp_down
    }

    fn delta_at_fraction(&self, s: f64) -> f64 {
        self.delta_min + (self.delta_max - self.delta_min) * cubic(s)
    }

    /// Detuning at the end of the (possibly truncated) cubic.
    pub fn final_delta(&self) -> f64 {
        self.delta_at_fraction(self.sweep_fraction)
    }

    /// `(Ω(t), Δ(t))`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let total = self.t_total();
        if !(t >= -TIME_SLACK && t <= total + TIME_SLACK) {
            return Err(Error::InvalidArgument(format!("t = {t} outside [0, {total}]")));
        }
        let t = t.clamp(0.0, total);
        if t < self.t_ramp_on {
            return Ok((self.omega_max * t / self.t_ramp_on, self.delta_min));
        }
        let t = t - self.t_ramp_on;
        if t <= self.t_cubic() {
            let s = if self.t_sweep > 0.0 { t / self.t_sweep } else { 0.0 };
            return Ok((self.omega_max, self.delta_at_fraction(s)));
        }
        let t = t - self.t_cubic();
        let omega = self.omega_max * (1.0 - t / self.t_ramp_down).max(0.0);
        Ok((omega, self.final_delta()))
    }

    /// The same schedule stopped where the cubic reaches `delta_end`, with the
    /// ramp-down (if any) applied from there.
    pub fn truncated_at(&self, delta_end: f64) -> Result<Self> {
        self.validate()?;
        let (lo, hi) = (self.delta_min, self.delta_max);
        let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if delta_end < lo - tol || delta_end > hi + tol {
            return Err(Error::InvalidArgument(format!(
                "endpoint Δ = {delta_end} outside the sweep range [{lo}, {hi}]"
            )));
        }
        let target = if hi > lo { ((delta_end - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
        let (mut a, mut b) = (0.0f64, 1.0f64);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if cubic(m) < target {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(Self {
            sweep_fraction: 0.5 * (a + b),
            ..self.clone()
        })
    }

    /// Truncation at an endpoint given as Δ/Ω in units of `omega_max`.
    pub fn truncated_at_ratio(&self, ratio: f64) -> Result<Self> {
        self.truncated_at(ratio * self.omega_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched() -> SweepSchedule {
        SweepSchedule {
            omega_max: 2.0,
            t_ramp_on: 1.0,
            t_sweep: 4.0,
            delta_min: -3.0,
            delta_max: 9.0,
            t_ramp_down: 0.5,
            sweep_fraction: 1.0,
        }
    }

    #[test]
    fn segment_boundaries() {
        let s = sched();
        assert_eq!(s.eval(0.0).unwrap(), (0.0, -3.0));
        assert_eq!(s.eval(1.0).unwrap(), (2.0, -3.0));
        assert_eq!(s.eval(5.0).unwrap(), (2.0, 9.0));
        let (o, d) = s.eval(5.5).unwrap();
        assert!(o.abs() < 1e-15 && d == 9.0);
        assert!(s.eval(5.6).is_err());
        assert!(s.eval(-0.1).is_err());
    }

    #[test]
    fn mid_sweep_matches_reference_polynomial() {
        let s = sched();
        for k in 0..=20 {
            let t = 1.0 + 4.0 * k as f64 / 20.0;
            let u = (t - 1.0) / 4.0;
            let reference = -3.0 + 12.0 * (3.0 * u * u - 2.0 * u * u * u);
            assert!((s.eval(t).unwrap().1 - reference).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation() {
        let s = sched();
        let cut = s.truncated_at(3.0).unwrap();
        assert!((cut.final_delta() - 3.0).abs() < 1e-12);
        assert!((cut.sweep_fraction - 0.5).abs() < 1e-12);
        assert!((cut.t_total() - 3.5).abs() < 1e-12);
        assert!(s.truncated_at(10.0).is_err());
        assert!((s.truncated_at_ratio(1.5).unwrap().final_delta() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn lab_default_is_valid() {
        let s = SweepSchedule::lab_default();
        s.validate().unwrap();
        assert!((s.t_total() - 2.45).abs() < 1e-12);
        assert!(s.truncated_at_ratio(4.0).is_ok());
    }
}
