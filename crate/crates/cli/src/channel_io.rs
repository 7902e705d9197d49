//! JSON channel files.
//!
//! A classical map is stored as its row-major matrix, entry `[a'][a] = φ(a'|a)`,
//! so columns sum to 1. A quantum channel is stored as a dilation: the joint
//! unitary `U` on system ⊗ ancilla and the ancilla state `beta`, each entry a
//! `[re, im]` pair. Sampled qubit channels also carry their grid coordinates.

use std::path::Path;

use retrodict_core::classical::StochasticMatrix;
use retrodict_core::linalg::{CMat, RMat, C64};
use retrodict_core::quantum::{self, DensityOperator, Dilation, KrausChannel};
use retrodict_core::samplers::SampledQubitChannel;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ChannelFile {
    Classical {
        dim: usize,
        matrix: Vec<Vec<f64>>,
    },
    Dilation {
        dim: usize,
        ancilla_dim: usize,
        #[serde(rename = "U")]
        unitary: Vec<Vec<[f64; 2]>>,
        beta: Vec<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coords: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cell: Option<[usize; 2]>,
    },
}

#[derive(Debug, Clone)]
pub enum Channel {
    Classical(StochasticMatrix),
    Quantum { dilation: Dilation, kraus: KrausChannel },
}

fn pairs_of(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn square(rows: &[Vec<f64>], n: usize, what: &str) -> std::result::Result<RMat, String> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(format!("{what} must be {n}x{n}"));
    }
    Ok(RMat::from_fn(n, n, |i, j| rows[i][j]))
}

fn complex_square(rows: &[Vec<[f64; 2]>], n: usize, what: &str) -> std::result::Result<CMat, String> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(format!("{what} must be {n}x{n}"));
    }
    Ok(CMat::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

impl ChannelFile {
    pub fn from_classical(map: &StochasticMatrix) -> Self {
        ChannelFile::Classical { dim: map.dim(), matrix: map.rows() }
    }

    pub fn from_dilation(dil: &Dilation) -> Self {
        ChannelFile::Dilation {
            dim: dil.dim(),
            ancilla_dim: dil.ancilla_dim(),
            unitary: pairs_of(dil.unitary()),
            beta: pairs_of(dil.beta().matrix()),
            coords: None,
            cell: None,
        }
    }

    pub fn from_sampled(s: &SampledQubitChannel) -> Self {
        match Self::from_dilation(&s.dilation) {
            ChannelFile::Dilation { dim, ancilla_dim, unitary, beta, .. } => ChannelFile::Dilation {
                dim,
                ancilla_dim,
                unitary,
                beta,
                coords: Some([s.coords.0, s.coords.1]),
                cell: Some([s.cell.0, s.cell.1]),
            },
            ChannelFile::Classical { .. } => unreachable!(),
        }
    }

    pub fn into_channel(self) -> std::result::Result<Channel, String> {
        match self {
            ChannelFile::Classical { dim, matrix } => {
                let m = square(&matrix, dim, "matrix")?;
                StochasticMatrix::new(m).map(Channel::Classical).map_err(|e| e.to_string())
            }
            ChannelFile::Dilation { dim, ancilla_dim, unitary, beta, .. } => {
                let u = complex_square(&unitary, dim * ancilla_dim, "U")?;
                let beta = complex_square(&beta, ancilla_dim, "beta")?;
                let beta = DensityOperator::new(beta).map_err(|e| e.to_string())?;
                let dilation = Dilation::new(dim, u, beta).map_err(|e| e.to_string())?;
                let kraus = quantum::dilation_to_kraus(&dilation).map_err(|e| e.to_string())?;
                Ok(Channel::Quantum { dilation, kraus })
            }
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("channel serializes");
        s.push('\n');
        s
    }
}

pub fn read_channel(path: &Path) -> Result<Channel> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: ChannelFile = serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))?;
    file.into_channel().map_err(|m| CliError::parse(path, m))
}
