//! Device calibration data: coherence times, readout response, and per-gate
//! error rates and durations.
//!
//! Infinite coherence times are written as `null` in JSON.

use serde::{Deserialize, Serialize};

use crate::circuit::{Gate, GateDurations, GateKind};
use crate::error::{Error, Result};
use crate::noise::channel::check_coherence_times;

mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Readout error for one qubit: a symmetric flip probability or a full
/// row-stochastic block `r[prepared][measured]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Readout {
    Symmetric(f64),
    Matrix([[f64; 2]; 2]),
}

impl Default for Readout {
    fn default() -> Self {
        Readout::Symmetric(0.0)
    }
}

impl Readout {
    /// Row-stochastic block `r[prepared][measured]`.
    pub fn block(&self) -> [[f64; 2]; 2] {
        match *self {
            Readout::Symmetric(e) => [[1.0 - e, e], [e, 1.0 - e]],
            Readout::Matrix(m) => m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for row in self.block() {
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (row[0] + row[1] - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidCalibration(format!("readout block {:?} is not stochastic", self.block())));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitCalibration {
    #[serde(with = "inf_as_null")]
    pub t1_us: f64,
    #[serde(with = "inf_as_null")]
    pub t2_us: f64,
    #[serde(default)]
    pub readout: Readout,
}

/// Error and duration of one gate kind. Without `qubits` the entry applies
/// to every qubit (or pair); a qubit-specific entry takes precedence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateCalibration {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<Vec<usize>>,
    pub error: f64,
    pub duration_us: f64,
}

/// Static `ξ Z⊗Z` coupling between two qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZzCoupling {
    pub pair: [usize; 2],
    pub xi_rad_per_us: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceCalibration {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub qubits: Vec<QubitCalibration>,
    pub gates: Vec<GateCalibration>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zz: Vec<ZzCoupling>,
}

const JAKARTA: &str = include_str!("../../fixtures/jakarta.json");
const NAIROBI: &str = include_str!("../../fixtures/nairobi.json");

impl DeviceCalibration {
    pub fn from_json(json: &str) -> Result<Self> {
        let calib: Self = serde_json::from_str(json).map_err(|e| Error::InvalidCalibration(e.to_string()))?;
        calib.validate()?;
        Ok(calib)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("calibration serializes")
    }

    /// Seven-qubit fixture built from the Jakarta device-wide mean values.
    pub fn jakarta() -> Self {
        Self::from_json(JAKARTA).expect("bundled fixture is valid")
    }

    /// Seven-qubit fixture built from the Nairobi device-wide mean values.
    pub fn nairobi() -> Self {
        Self::from_json(NAIROBI).expect("bundled fixture is valid")
    }

    /// Same durations as `self` but with infinite coherence times, zero gate
    /// error, no readout error and no ZZ coupling.
    pub fn noiseless(&self) -> Self {
        Self {
            name: Some("noiseless".into()),
            qubits: self
                .qubits
                .iter()
                .map(|_| QubitCalibration { t1_us: f64::INFINITY, t2_us: f64::INFINITY, readout: Readout::default() })
                .collect(),
            gates: self.gates.iter().map(|g| GateCalibration { error: 0.0, ..g.clone() }).collect(),
            zz: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.qubits.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits.is_empty() {
            return Err(Error::InvalidCalibration("no qubits".into()));
        }
        for (i, q) in self.qubits.iter().enumerate() {
            check_coherence_times(q.t1_us, q.t2_us)
                .map_err(|e| Error::InvalidCalibration(format!("qubit {i}: {e}")))?;
            q.readout.validate()?;
        }
        for g in &self.gates {
            if !(0.0..1.0).contains(&g.error) {
                return Err(Error::InvalidCalibration(format!("{} error {} is outside [0, 1)", g.kind, g.error)));
            }
            if !(g.duration_us >= 0.0 && g.duration_us.is_finite()) {
                return Err(Error::InvalidCalibration(format!("{} duration {} is invalid", g.kind, g.duration_us)));
            }
            if let Some(qs) = &g.qubits {
                if qs.iter().any(|&q| q >= self.width()) {
                    return Err(Error::InvalidCalibration(format!("{} refers to qubits {qs:?}", g.kind)));
                }
            }
        }
        for z in &self.zz {
            if z.pair[0] == z.pair[1] || z.pair.iter().any(|&q| q >= self.width()) || !z.xi_rad_per_us.is_finite() {
                return Err(Error::InvalidCalibration(format!("invalid ZZ coupling {:?}", z.pair)));
            }
        }
        Ok(())
    }

    /// Calibration entry for a gate on specific qubits. Exact qubit matches
    /// win over order-insensitive matches, which win over generic entries.
    pub fn gate(&self, kind: &str, qubits: &[usize]) -> Result<&GateCalibration> {
        let same_set = |qs: &[usize]| qs.len() == qubits.len() && qs.iter().all(|q| qubits.contains(q));
        let candidates = || self.gates.iter().filter(|g| g.kind == kind);
        candidates()
            .find(|g| g.qubits.as_deref() == Some(qubits))
            .or_else(|| candidates().find(|g| g.qubits.as_deref().is_some_and(same_set)))
            .or_else(|| candidates().find(|g| g.qubits.is_none()))
            .ok_or_else(|| Error::UnknownGateKind { kind: kind.to_string(), qubits: qubits.to_vec() })
    }

    /// Gate error for `gate`; idles carry none.
    pub fn gate_error(&self, gate: &Gate) -> Result<f64> {
        match gate.kind {
            GateKind::Idle(_) => Ok(0.0),
            k => Ok(self.gate(k.name(), &gate.qubits)?.error),
        }
    }

    /// `ξ` for a pair, summing duplicate entries.
    pub fn zz_strength(&self, a: usize, b: usize) -> f64 {
        self.zz
            .iter()
            .filter(|z| (z.pair[0] == a && z.pair[1] == b) || (z.pair[0] == b && z.pair[1] == a))
            .map(|z| z.xi_rad_per_us)
            .sum()
    }

    /// Multiplies every gate error by `factor`, capping just below 1.
    pub fn with_gate_error_scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for g in &mut out.gates {
            g.error = (g.error * factor).min(1.0 - 1e-12);
        }
        out
    }

    /// Scales gate errors of one kind only.
    pub fn with_kind_error_scale(&self, kind: &str, factor: f64) -> Self {
        let mut out = self.clone();
        for g in out.gates.iter_mut().filter(|g| g.kind == kind) {
            g.error = (g.error * factor).min(1.0 - 1e-12);
        }
        out
    }

    /// `T1 → T1/λ1`, `T2 → T2/λ2` on every qubit. Fails when the result
    /// violates `T2 ≤ 2 T1`.
    pub fn rescale_times(&self, lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 > 0.0 && lambda2 > 0.0) {
            return Err(Error::InvalidArgument(format!("scale factors ({lambda1}, {lambda2}) must be positive")));
        }
        let mut out = self.clone();
        for q in &mut out.qubits {
            q.t1_us /= lambda1;
            q.t2_us /= lambda2;
        }
        out.validate()?;
        Ok(out)
    }

    /// Uniform ZZ strength on each listed pair.
    pub fn with_zz(&self, pairs: &[[usize; 2]], xi_rad_per_us: f64) -> Self {
        let mut out = self.clone();
        out.zz = pairs.iter().map(|&pair| ZzCoupling { pair, xi_rad_per_us }).collect();
        out
    }
}

impl GateDurations for DeviceCalibration {
    fn duration(&self, gate: &Gate) -> Result<f64> {
        match gate.kind {
            GateKind::Idle(d) => Ok(d),
            k => Ok(self.gate(k.name(), &gate.qubits)?.duration_us),
        }
    }
}

/// Coupling map of the seven-qubit heavy-hex devices.
pub const FALCON_EDGES: [[usize; 2]; 6] = [[0, 1], [1, 2], [1, 3], [3, 5], [4, 5], [5, 6]];
