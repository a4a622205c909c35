//! Calibrated open-system noise model and density-matrix simulator.

pub mod calibration;
pub mod channel;
pub mod density;
pub mod simulator;

pub use calibration::{DeviceCalibration, GateCalibration, QubitCalibration, Readout, ZzCoupling, FALCON_EDGES};
pub use channel::{
    amplitude_damping, avg_gate_fidelity, depolarizing, depolarizing_param, phase_damping, relaxation,
    relaxation_params, DepolarizingParam, KrausChannel,
};
pub use density::DensityMatrix;
pub use simulator::{apply_readout, evolve, simulate, NoiseReport, SimOptions, SimulationResult};
