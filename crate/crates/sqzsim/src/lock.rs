//! Sequential three-loop lock acquisition: OPO cavity length, pump phase,
//! local-oscillator phase.
//!
//! The loops form a dependency chain. The pump-phase error signal only
//! carries slope once the cavity resonates (parametric gain collapses to 1
//! off resonance), and the LO error references the pump-locked control
//! sidebands, so each loop engages only after its dependency reports locked.
//! The simulation advances all three plants on a common timestep with the
//! analytic error signals from [`crate::control`]; disturbances enter as
//! seeded random walks, so identical seeds reproduce trajectories bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::control::{lo_phase_error, opo_length_error, pump_phase_error, PiServo, ServoConfig};
use crate::error::Result;
use crate::opo::{amplify_control_field, ControlField, OpoParams};
use crate::sideband::CarrierConfig;

pub const LOOPS: [LoopId; 3] = [LoopId::OpoLength, LoopId::PumpPhase, LoopId::LoPhase];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopId {
    OpoLength,
    PumpPhase,
    LoPhase,
}

impl LoopId {
    pub fn name(&self) -> &'static str {
        match self {
            LoopId::OpoLength => "opo_length",
            LoopId::PumpPhase => "pump_phase",
            LoopId::LoPhase => "lo_phase",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LockStatus {
    Unlocked,
    Acquiring,
    Locked,
}

impl LockStatus {
    pub fn name(&self) -> &'static str {
        match self {
            LockStatus::Unlocked => "unlocked",
            LockStatus::Acquiring => "acquiring",
            LockStatus::Locked => "locked",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopState {
    pub status: LockStatus,
    /// Sliding RMS of the loop residual (linewidths for the length loop,
    /// radians for the phase loops).
    pub residual_rms: f64,
}

/// Status and residuals of the full chain at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockChainState {
    pub opo_length: LoopState,
    pub pump_phase: LoopState,
    pub lo_phase: LoopState,
}

impl LockChainState {
    pub fn loop_state(&self, id: LoopId) -> LoopState {
        match id {
            LoopId::OpoLength => self.opo_length,
            LoopId::PumpPhase => self.pump_phase,
            LoopId::LoPhase => self.lo_phase,
        }
    }

    /// Dependency invariant: a loop may engage only while its dependency is
    /// locked.
    pub fn ordering_ok(&self) -> bool {
        let pump_needs = self.pump_phase.status == LockStatus::Unlocked
            || self.opo_length.status == LockStatus::Locked;
        let lo_needs = self.lo_phase.status == LockStatus::Unlocked
            || self.pump_phase.status == LockStatus::Locked;
        pump_needs && lo_needs
    }

    pub fn all_locked(&self) -> bool {
        self.opo_length.status == LockStatus::Locked
            && self.pump_phase.status == LockStatus::Locked
            && self.lo_phase.status == LockStatus::Locked
    }
}

/// Per-loop servo tuning, disturbance level and lock threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopTuning {
    pub servo: ServoConfig,
    /// Random-walk strength of the free-running disturbance, in loop units
    /// per sqrt(second).
    pub walk_sigma: f64,
    /// Sliding-RMS residual below which the loop counts as locked.
    pub lock_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartCondition {
    /// All plants start on their lock points (and report locked immediately).
    AtLockPoints,
    /// Detuning and phases start at seeded random values.
    RandomPhases,
}

/// Physical system plus loop electronics for the acquisition simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockSystem {
    pub opo: OpoParams,
    pub control_field: ControlField,
    pub lo: CarrierConfig,
    pub length: LoopTuning,
    pub pump: LoopTuning,
    pub lo_phase: LoopTuning,
    pub start: StartCondition,
}

/// Timing of the acquisition run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionSchedule {
    /// Servo timestep in s.
    pub dt: f64,
    /// Abort acquisition after this much simulated time.
    pub acquire_timeout_s: f64,
    /// Continue this long after the chain locks, accumulating residuals.
    pub hold_s: f64,
    /// Time constant of the sliding residual RMS used for lock detection.
    pub rms_window_s: f64,
    /// Record one trajectory point every this many steps.
    pub sample_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub state: LockChainState,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AcquisitionOutcome {
    /// All loops locked; `lock_times` are the first-lock instants per loop in
    /// chain order and `t_all_locked` the first instant the full chain held.
    AllLocked {
        t_all_locked: f64,
        lock_times: [f64; 3],
    },
    /// Not locked within the timeout; reports the loops still pending.
    TimedOut { pending: Vec<LoopId> },
}

/// Result record of an acquisition run.
#[derive(Debug, Clone, PartialEq)]
pub struct LockTrajectory {
    pub points: Vec<TrajectoryPoint>,
    pub outcome: AcquisitionOutcome,
    pub final_state: LockChainState,
    /// RMS residual per loop over the hold phase (chain order); NaN when the
    /// chain never locked.
    pub hold_residual_rms: [f64; 3],
    /// Number of sampled states violating the dependency ordering (always 0
    /// by construction; recorded so reports can prove it).
    pub ordering_violations: usize,
}

/// Fold an angle to its distance from the nearest multiple of `period`.
fn fold(value: f64, period: f64) -> f64 {
    value - period * (value / period).round()
}

struct LoopSim {
    tuning: LoopTuning,
    servo: PiServo,
    disturbance: f64,
    command: f64,
    rms_sq: f64,
    status: LockStatus,
    first_lock: Option<f64>,
}

impl LoopSim {
    fn new(tuning: LoopTuning, disturbance: f64, locked: bool) -> Self {
        Self {
            tuning,
            servo: PiServo::new(),
            disturbance,
            command: 0.0,
            rms_sq: 0.0,
            status: if locked {
                LockStatus::Locked
            } else {
                LockStatus::Unlocked
            },
            first_lock: if locked { Some(0.0) } else { None },
        }
    }

    fn value(&self) -> f64 {
        self.disturbance - self.command
    }

    fn state(&self) -> LoopState {
        LoopState {
            status: self.status,
            residual_rms: self.rms_sq.sqrt(),
        }
    }
}

/// Run the sequential acquisition and hold simulation.
pub fn acquire_locks(
    system: &LockSystem,
    schedule: &AcquisitionSchedule,
    seed: u64,
) -> Result<LockTrajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = schedule.dt;
    let sqrt_dt = dt.sqrt();
    let beta = (dt / schedule.rms_window_s).min(1.0);

    let start_locked = system.start == StartCondition::AtLockPoints;
    let (d0, phi0, theta0) = if start_locked {
        (0.0, 0.0, 0.0)
    } else {
        (
            rng.random_range(-0.5..0.5),
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        )
    };
    let mut loops = [
        LoopSim::new(system.length, d0, start_locked),
        LoopSim::new(system.pump, phi0, start_locked),
        LoopSim::new(system.lo_phase, theta0, start_locked),
    ];

    let total_steps =
        ((schedule.acquire_timeout_s + schedule.hold_s) / dt).ceil() as usize;
    let mut points = Vec::with_capacity(total_steps / schedule.sample_every.max(1) + 8);
    let mut ordering_violations = 0usize;
    let mut t_all_locked: Option<f64> = None;
    let mut hold_sq = [0.0f64; 3];
    let mut hold_n = 0u64;

    for step in 0..total_steps {
        let t = step as f64 * dt;

        // Free-running disturbances walk regardless of loop state; draws are
        // unconditional to keep the stream layout independent of tuning.
        for sim in loops.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            sim.disturbance += sim.tuning.walk_sigma * sqrt_dt * z;
        }

        let detuning = loops[0].value();
        let phi = loops[1].value();
        let theta = loops[2].value();

        // Cavity detuning starves the pump buildup, collapsing the
        // parametric action the two phase loops rely on.
        let x_eff = system.opo.x / (1.0 + detuning * detuning);
        let g_eff = ((1.0 + x_eff) / (1.0 - x_eff)).powi(2);
        let pair = amplify_control_field(&system.control_field, g_eff, phi)?;

        let errors = [
            opo_length_error(detuning),
            pump_phase_error(&system.control_field, g_eff, phi),
            lo_phase_error(&pair, &system.lo, theta),
        ];
        let residuals = [
            detuning,
            fold(phi, std::f64::consts::PI),
            fold(theta, std::f64::consts::PI),
        ];

        let mut dependency_locked = true;
        for (i, sim) in loops.iter_mut().enumerate() {
            let engaged = dependency_locked;
            if engaged {
                if sim.status == LockStatus::Unlocked {
                    sim.status = LockStatus::Acquiring;
                }
                sim.command = sim.servo.step(errors[i], &sim.tuning.servo, dt);
            } else if sim.status != LockStatus::Unlocked {
                // Dependency dropped: release the loop entirely.
                sim.status = LockStatus::Unlocked;
                sim.servo.reset();
                sim.command = 0.0;
            }

            sim.rms_sq += beta * (residuals[i] * residuals[i] - sim.rms_sq);
            let rms = sim.rms_sq.sqrt();
            if engaged {
                if sim.status == LockStatus::Acquiring && rms < sim.tuning.lock_threshold {
                    sim.status = LockStatus::Locked;
                    sim.first_lock.get_or_insert(t);
                } else if sim.status == LockStatus::Locked
                    && rms > 3.0 * sim.tuning.lock_threshold
                {
                    sim.status = LockStatus::Acquiring;
                }
            }
            dependency_locked = sim.status == LockStatus::Locked;
        }

        let chain = LockChainState {
            opo_length: loops[0].state(),
            pump_phase: loops[1].state(),
            lo_phase: loops[2].state(),
        };
        if !chain.ordering_ok() {
            ordering_violations += 1;
        }
        if chain.all_locked() {
            if t_all_locked.is_none() {
                t_all_locked = Some(t);
            }
            hold_sq
                .iter_mut()
                .zip(residuals)
                .for_each(|(acc, r)| *acc += r * r);
            hold_n += 1;
        }
        if step % schedule.sample_every.max(1) == 0 || step + 1 == total_steps {
            points.push(TrajectoryPoint { t, state: chain });
        }
        // Give up if nothing locked in time; keep holding otherwise.
        if t_all_locked.is_none() && t > schedule.acquire_timeout_s {
            break;
        }
    }

    let final_state = LockChainState {
        opo_length: loops[0].state(),
        pump_phase: loops[1].state(),
        lo_phase: loops[2].state(),
    };
    let hold_residual_rms = if hold_n > 0 {
        [
            (hold_sq[0] / hold_n as f64).sqrt(),
            (hold_sq[1] / hold_n as f64).sqrt(),
            (hold_sq[2] / hold_n as f64).sqrt(),
        ]
    } else {
        [f64::NAN; 3]
    };
    let outcome = match t_all_locked {
        Some(t) => AcquisitionOutcome::AllLocked {
            t_all_locked: t,
            lock_times: [
                loops[0].first_lock.unwrap_or(f64::NAN),
                loops[1].first_lock.unwrap_or(f64::NAN),
                loops[2].first_lock.unwrap_or(f64::NAN),
            ],
        },
        None => AcquisitionOutcome::TimedOut {
            pending: LOOPS
                .iter()
                .zip(&loops)
                .filter(|(_, sim)| sim.status != LockStatus::Locked)
                .map(|(id, _)| *id)
                .collect(),
        },
    };

    Ok(LockTrajectory {
        points,
        outcome,
        final_state,
        hold_residual_rms,
        ordering_violations,
    })
}
