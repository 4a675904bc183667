//! Incident/outgoing decomposition of recorded runs.
//!
//! For every channel (cell, face, field) the incident port part and the
//! outgoing node part are defined recursively:
//! `in(t) = port(t) - out(t - τ/2)`, `out(t + τ/2) = node(t + τ/2) - in(t)`,
//! starting from `out = 0`. The diagnostic re-evaluates both reconstruction
//! identities and records the worst relative mismatch.

use thiserror::Error;

use crate::state::{FieldId, FieldState, NUM_FIELDS};

/// Relative tolerance of the reconstruction identities.
pub const RECONSTRUCTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Channel {
    pub cell: usize,
    pub face: usize,
    pub field: FieldId,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatteringError {
    #[error("reconstruction mismatch {mismatch:e} at step {step}, cell {} face {} field {}", channel.cell, channel.face, channel.field.name())]
    ReconstructionMismatch { step: u64, channel: Channel, mismatch: f64 },
    #[error("diagnostic sized for {expected} cells, state has {found}")]
    SizeMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone)]
pub struct ScatteringDiagnostic {
    incident: [Vec<[f64; 6]>; NUM_FIELDS],
    outgoing: [Vec<[f64; 6]>; NUM_FIELDS],
    connections: u64,
    reflections: u64,
    /// Largest relative mismatch seen so far.
    pub worst: f64,
}

impl ScatteringDiagnostic {
    pub fn new(num_cells: usize) -> Self {
        ScatteringDiagnostic {
            incident: std::array::from_fn(|_| vec![[0.0; 6]; num_cells]),
            outgoing: std::array::from_fn(|_| vec![[0.0; 6]; num_cells]),
            connections: 0,
            reflections: 0,
            worst: 0.0,
        }
    }

    pub fn incident(&self, field: FieldId) -> &[[f64; 6]] {
        &self.incident[field.index()]
    }

    pub fn outgoing(&self, field: FieldId) -> &[[f64; 6]] {
        &self.outgoing[field.index()]
    }

    fn check_size(&self, state: &FieldState) -> Result<(), ScatteringError> {
        let expected = self.incident[0].len();
        if state.num_cells() == expected {
            Ok(())
        } else {
            Err(ScatteringError::SizeMismatch { expected, found: state.num_cells() })
        }
    }

    fn check(
        &mut self,
        step: u64,
        channel: Channel,
        reconstructed: f64,
        actual: f64,
        parts: [f64; 2],
    ) -> Result<(), ScatteringError> {
        let scale = actual.abs().max(parts[0].abs()).max(parts[1].abs()).max(f64::MIN_POSITIVE);
        let mismatch = (reconstructed - actual).abs() / scale;
        self.worst = self.worst.max(mismatch);
        if mismatch > RECONSTRUCTION_TOL {
            return Err(ScatteringError::ReconstructionMismatch { step, channel, mismatch });
        }
        Ok(())
    }

    /// Record the ports written by a connection step.
    pub fn after_connection(&mut self, state: &FieldState) -> Result<(), ScatteringError> {
        self.check_size(state)?;
        for field in FieldId::ALL {
            let f = field.index();
            for cell in 0..state.num_cells() {
                for face in 0..6 {
                    let port = state.port[f][cell][face];
                    let out = self.outgoing[f][cell][face];
                    let inc = port - out;
                    self.incident[f][cell][face] = inc;
                    self.check(self.connections, Channel { cell, face, field }, out + inc, port, [out, inc])?;
                }
            }
        }
        self.connections += 1;
        Ok(())
    }

    /// Record the nodes written by a reflection step.
    pub fn after_reflection(&mut self, state: &FieldState) -> Result<(), ScatteringError> {
        self.check_size(state)?;
        for field in FieldId::ALL {
            let f = field.index();
            for cell in 0..state.num_cells() {
                let node = state.node[f][cell];
                for face in 0..6 {
                    let inc = self.incident[f][cell][face];
                    let out = node - inc;
                    self.outgoing[f][cell][face] = out;
                    self.check(self.reflections, Channel { cell, face, field }, inc + out, node, [inc, out])?;
                }
            }
        }
        self.reflections += 1;
        Ok(())
    }
}
