//! Contact sensing and cycle-level gait controllers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::{GaitProgram, RobotMorphology, MAX_VERTICAL_AMPLITUDE};

/// Default SISO gain (rad per unit duty error).
pub const SISO_GAIN: f64 = 3.2;
/// Extra reach granted to a Stop-and-Wait retry, as a fraction of leg length.
pub const RETRY_REACH_FACTOR: f64 = 0.2;

/// Intended and realized contacts over a window, indexed `[step][foot]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SensorFrame {
    pub intended: Vec<Vec<bool>>,
    pub realized: Vec<Vec<bool>>,
}

impl SensorFrame {
    pub fn is_empty(&self) -> bool {
        self.realized.iter().all(|r| r.is_empty())
    }

    /// Feet that lost at least one intended contact in the window.
    pub fn lost_feet(&self) -> Vec<usize> {
        let n = self.intended.first().map_or(0, |r| r.len());
        (0..n)
            .filter(|&f| {
                self.intended
                    .iter()
                    .zip(&self.realized)
                    .any(|(i, r)| i[f] && !r[f])
            })
            .collect()
    }
}

/// Fraction of (step, foot) samples in contact.
pub fn measure_duty(frame: &SensorFrame) -> Result<f64> {
    let total: usize = frame.realized.iter().map(|r| r.len()).sum();
    if total == 0 {
        return Err(Error::InsufficientSamples("empty sensor frame".into()));
    }
    let on = frame.realized.iter().flatten().filter(|&&b| b).count();
    Ok(on as f64 / total as f64)
}

/// Vertical wave amplitude for the next cycle: `clamp(gain (d − d̂), 0, π/3)`.
pub fn siso_update(desired: f64, measured: f64, gain: f64) -> f64 {
    (gain * (desired - measured)).clamp(0.0, MAX_VERTICAL_AMPLITUDE)
}

/// Feet to retry: those that lost a contact in the window and have not
/// retried yet this cycle.
pub fn stop_and_wait(frame: &SensorFrame, retried: &[bool]) -> Vec<usize> {
    frame
        .lost_feet()
        .into_iter()
        .filter(|&f| !retried.get(f).copied().unwrap_or(false))
        .collect()
}

/// Gait amplitudes for the next cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerDecision {
    pub vertical_amplitude: f64,
    pub body_amplitude: f64,
    pub shoulder_amplitude: f64,
}

impl ControllerDecision {
    pub fn keep(gait: &GaitProgram) -> Self {
        ControllerDecision {
            vertical_amplitude: gait.vertical_amplitude,
            body_amplitude: gait.body_amplitude,
            shoulder_amplitude: gait.shoulder_amplitude,
        }
    }

    /// The decision applied to a gait, clamped to `A_p ∈ [0, π/3]`,
    /// `A_b ∈ [0, body_limit]` and `A_leg ∈ [0, π/2]`.
    pub fn apply(&self, gait: &GaitProgram, body_limit: f64) -> GaitProgram {
        let fin = |v: f64, fallback: f64| if v.is_finite() { v } else { fallback };
        GaitProgram {
            vertical_amplitude: fin(self.vertical_amplitude, 0.0).clamp(0.0, MAX_VERTICAL_AMPLITUDE),
            body_amplitude: fin(self.body_amplitude, 0.0).clamp(0.0, body_limit.max(0.0)),
            shoulder_amplitude: fin(self.shoulder_amplitude, gait.shoulder_amplitude)
                .clamp(0.0, std::f64::consts::FRAC_PI_2),
            ..gait.clone()
        }
    }
}

/// A policy consulted once per cycle with the sensor frame of that cycle.
pub trait Controller: Send + Sync {
    fn name(&self) -> &'static str;

    fn decide(&self, frame: &SensorFrame, gait: &GaitProgram) -> Result<ControllerDecision>;

    /// Extra reach (cm) for one retry per foot per cycle after a lost
    /// contact, if the policy retries.
    fn retry_reach(&self, _morph: &RobotMorphology) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OpenLoop;

impl Controller for OpenLoop {
    fn name(&self) -> &'static str {
        "open_loop"
    }

    fn decide(&self, _frame: &SensorFrame, gait: &GaitProgram) -> Result<ControllerDecision> {
        Ok(ControllerDecision::keep(gait))
    }
}

/// Duty-factor feedback on the vertical wave amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Siso {
    pub gain: f64,
    pub desired_duty: f64,
}

impl Default for Siso {
    fn default() -> Self {
        Siso {
            gain: SISO_GAIN,
            desired_duty: 0.5,
        }
    }
}

impl Controller for Siso {
    fn name(&self) -> &'static str {
        "siso"
    }

    fn decide(&self, frame: &SensorFrame, gait: &GaitProgram) -> Result<ControllerDecision> {
        let measured = measure_duty(frame)?;
        Ok(ControllerDecision {
            vertical_amplitude: siso_update(self.desired_duty, measured, self.gain),
            ..ControllerDecision::keep(gait)
        })
    }
}

/// Open-loop gait with one extended-reach retry per lost contact.
#[derive(Debug, Clone, Copy, Default)]
pub struct StopAndWait;

impl Controller for StopAndWait {
    fn name(&self) -> &'static str {
        "stop_and_wait"
    }

    fn decide(&self, _frame: &SensorFrame, gait: &GaitProgram) -> Result<ControllerDecision> {
        Ok(ControllerDecision::keep(gait))
    }

    fn retry_reach(&self, morph: &RobotMorphology) -> Option<f64> {
        Some(RETRY_REACH_FACTOR * morph.leg_length)
    }
}

/// One row of a decision table: inputs `(duty, body amplitude)` and
/// amplitude increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub duty: f64,
    pub a_b: f64,
    pub d_a_p: f64,
    pub d_a_b: f64,
    pub d_a_leg: f64,
}

/// Externally supplied policy: nearest table row on the input grid.
///
/// CSV columns: `duty,a_b,d_a_p,d_a_b,d_a_leg`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableMimo {
    pub rows: Vec<TableRow>,
}

const TABLE_HEADER: [&str; 5] = ["duty", "a_b", "d_a_p", "d_a_b", "d_a_leg"];

impl TableMimo {
    pub fn from_csv(text: &str) -> Result<TableMimo> {
        let ctx = "decision table";
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::parse(ctx, "empty table"))?
            .split(',')
            .map(str::trim)
            .collect();
        if header != TABLE_HEADER {
            return Err(Error::parse(ctx, format!("header must be {}", TABLE_HEADER.join(","))));
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let v: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(ctx, format!("row {}: {e}", k + 1)))?;
            if v.len() != 5 || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::parse(ctx, format!("row {} needs 5 finite values", k + 1)));
            }
            rows.push(TableRow {
                duty: v[0],
                a_b: v[1],
                d_a_p: v[2],
                d_a_b: v[3],
                d_a_leg: v[4],
            });
        }
        if rows.is_empty() {
            return Err(Error::parse(ctx, "no rows"));
        }
        Ok(TableMimo { rows })
    }

    pub fn load(path: &Path) -> Result<TableMimo> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TableMimo::from_csv(&text)
    }

    fn lookup(&self, duty: f64, a_b: f64) -> &TableRow {
        // ties go to the earlier row
        let mut best = &self.rows[0];
        let mut best_d = f64::INFINITY;
        for r in &self.rows {
            let d = (r.duty - duty).powi(2) + (r.a_b - a_b).powi(2);
            if d < best_d {
                best = r;
                best_d = d;
            }
        }
        best
    }
}

impl Controller for TableMimo {
    fn name(&self) -> &'static str {
        "table_mimo"
    }

    fn decide(&self, frame: &SensorFrame, gait: &GaitProgram) -> Result<ControllerDecision> {
        let duty = measure_duty(frame)?;
        let row = self.lookup(duty, gait.body_amplitude);
        Ok(ControllerDecision {
            vertical_amplitude: gait.vertical_amplitude + row.d_a_p,
            body_amplitude: gait.body_amplitude + row.d_a_b,
            shoulder_amplitude: gait.shoulder_amplitude + row.d_a_leg,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    fn frame(intended: Vec<Vec<bool>>, realized: Vec<Vec<bool>>) -> SensorFrame {
        SensorFrame { intended, realized }
    }

    #[test]
    fn duty_counts() {
        let all = vec![vec![true, false]; 4];
        assert_eq!(measure_duty(&frame(all.clone(), all.clone())).unwrap(), 0.5);
        let none = vec![vec![false, false]; 4];
        assert_eq!(measure_duty(&frame(all.clone(), none)).unwrap(), 0.0);
        let half = vec![vec![true, false], vec![false, false], vec![true, false], vec![false, false]];
        assert_eq!(measure_duty(&frame(all, half)).unwrap(), 0.25);
        assert!(measure_duty(&SensorFrame::default()).is_err());
    }

    #[test]
    fn siso_examples() {
        assert_eq!(siso_update(0.5, 0.5, SISO_GAIN), 0.0);
        assert!((siso_update(0.5, 0.4, SISO_GAIN) - 0.32).abs() < 1e-12);
        assert_eq!(siso_update(0.5, 0.1, SISO_GAIN), FRAC_PI_3);
        assert_eq!(siso_update(0.3, 0.5, SISO_GAIN), 0.0);
    }

    #[test]
    fn retries_once_per_lost_foot() {
        let f = frame(vec![vec![true, true, false]], vec![vec![true, false, false]]);
        assert_eq!(stop_and_wait(&f, &[false; 3]), vec![1]);
        assert!(stop_and_wait(&f, &[false, true, false]).is_empty());
        let ok = frame(vec![vec![true, true]], vec![vec![true, true]]);
        assert!(stop_and_wait(&ok, &[false; 2]).is_empty());
    }

    #[test]
    fn builtin_delegation() {
        let m = RobotMorphology::default();
        let g = GaitProgram::for_morphology(&m).with_body_amplitude(0.8);
        let f = frame(vec![vec![true, false]; 10], (0..10).map(|k| vec![k % 2 == 0, false]).collect());
        assert_eq!(OpenLoop.decide(&f, &g).unwrap(), ControllerDecision::keep(&g));
        let siso = Siso::default().decide(&f, &g).unwrap();
        assert_eq!(siso.vertical_amplitude, siso_update(0.5, 0.25, SISO_GAIN));
        assert_eq!(siso.body_amplitude, 0.8);
        assert_eq!(StopAndWait.retry_reach(&m), Some(0.2 * 8.4));
        assert_eq!(OpenLoop.retry_reach(&m), None);
    }

    #[test]
    fn identity_table_is_open_loop() {
        let t = TableMimo::from_csv("duty,a_b,d_a_p,d_a_b,d_a_leg\n0,0,0,0,0\n0.5,1,0,0,0\n").unwrap();
        let m = RobotMorphology::default();
        let g = GaitProgram::for_morphology(&m).with_body_amplitude(0.6).with_vertical_amplitude(0.2);
        let f = frame(vec![vec![true; 4]; 3], vec![vec![true, false, true, true]; 3]);
        assert_eq!(t.decide(&f, &g).unwrap(), OpenLoop.decide(&f, &g).unwrap());
    }

    #[test]
    fn table_lookup_nearest() {
        let t = TableMimo::from_csv("duty,a_b,d_a_p,d_a_b,d_a_leg\n0.5,0,0,0,0\n0.2,0,0.3,-0.1,0\n").unwrap();
        assert_eq!(t.lookup(0.25, 0.0).d_a_p, 0.3);
        assert_eq!(t.lookup(0.45, 0.0).d_a_p, 0.0);
    }

    #[test]
    fn malformed_tables_rejected() {
        assert!(TableMimo::from_csv("").is_err());
        assert!(TableMimo::from_csv("duty,a_b\n0,0\n").is_err());
        assert!(TableMimo::from_csv("duty,a_b,d_a_p,d_a_b,d_a_leg\n").is_err());
        assert!(TableMimo::from_csv("duty,a_b,d_a_p,d_a_b,d_a_leg\n0,0,x,0,0\n").is_err());
        assert!(TableMimo::from_csv("duty,a_b,d_a_p,d_a_b,d_a_leg\n0,0,0,0\n").is_err());
    }

    #[test]
    fn decisions_are_clamped() {
        let m = RobotMorphology::default();
        let g = GaitProgram::for_morphology(&m);
        let wild = ControllerDecision {
            vertical_amplitude: 5.0,
            body_amplitude: 3.0,
            shoulder_amplitude: -1.0,
        };
        let out = wild.apply(&g, 1.1);
        assert_eq!(out.vertical_amplitude, FRAC_PI_3);
        assert_eq!(out.body_amplitude, 1.1);
        assert_eq!(out.shoulder_amplitude, 0.0);
        out.validate().unwrap();
    }
}
