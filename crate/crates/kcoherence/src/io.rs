//! JSON formats for states, certificates, maps, reports and witnesses.
//!
//! Complex numbers are `[re, im]` pairs and matrices are lists of rows.

use std::fs;
use std::path::Path;

use kcoherence_core::maps::{build_two_outcome, KCoherencePreservingMap, TwoOutcomeMap};
use kcoherence_core::oracles::CertificateComponent;
use kcoherence_core::{
    CMatrix, CoherenceLevel, ConversionReport, DensityOperator, IkCertificate, NonIsolationWitness, PureState, C64,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub type Complex = [f64; 2];

fn to_pair(z: C64) -> Complex {
    [z.re, z.im]
}

fn from_pair(p: &Complex) -> C64 {
    C64::new(p[0], p[1])
}

pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<Complex>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| to_pair(m[(i, j)])).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &[Vec<Complex>]) -> Result<CMatrix, String> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(format!("expected a square matrix, got {n} rows of uneven length"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| from_pair(&rows[i][j])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub dim: usize,
    pub coeffs: Vec<Complex>,
}

impl StateJson {
    pub fn from_state(state: &PureState) -> Self {
        Self {
            dim: state.dim(),
            coeffs: state.coeffs().iter().copied().map(to_pair).collect(),
        }
    }

    pub fn to_state(&self) -> Result<PureState, CliError> {
        if self.coeffs.len() != self.dim {
            return Err(CliError::parse(format!(
                "dim is {} but {} coefficients were given",
                self.dim,
                self.coeffs.len()
            )));
        }
        PureState::new(self.coeffs.iter().map(from_pair).collect()).map_err(CliError::invalid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentJson {
    pub weight: f64,
    pub coeffs: Vec<Complex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub level: usize,
    pub components: Vec<ComponentJson>,
    pub residual: f64,
}

impl CertificateJson {
    pub fn from_certificate(cert: &IkCertificate) -> Self {
        Self {
            level: cert.level.k(),
            components: cert
                .components
                .iter()
                .map(|c| ComponentJson {
                    weight: c.weight,
                    coeffs: c.state.coeffs().iter().copied().map(to_pair).collect(),
                })
                .collect(),
            residual: cert.residual,
        }
    }

    pub fn to_certificate(&self) -> Result<IkCertificate, CliError> {
        let components = self
            .components
            .iter()
            .map(|c| {
                let state = PureState::new(c.coeffs.iter().map(from_pair).collect()).map_err(CliError::invalid)?;
                Ok(CertificateComponent {
                    weight: c.weight,
                    state,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let dim = components.first().map_or(self.level, |c| c.state.dim());
        let level = CoherenceLevel::new(self.level, dim).map_err(CliError::invalid)?;
        Ok(IkCertificate {
            level,
            components,
            residual: self.residual,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapJson {
    pub level: usize,
    pub scale: f64,
    pub effect: Vec<Vec<Complex>>,
    pub out1: Vec<Vec<Complex>>,
    pub out2: Vec<Vec<Complex>>,
}

impl MapJson {
    pub fn from_two_outcome(map: &TwoOutcomeMap, level: CoherenceLevel) -> Self {
        Self {
            level: level.k(),
            scale: map.scale(),
            effect: matrix_to_rows(map.effect()),
            out1: matrix_to_rows(map.out1().matrix()),
            out2: matrix_to_rows(map.out2().matrix()),
        }
    }

    pub fn from_map(map: &KCoherencePreservingMap) -> Self {
        Self::from_two_outcome(&map.base, map.level)
    }

    /// Rebuilds the map, re-running the construction checks.
    pub fn to_map(&self) -> Result<(TwoOutcomeMap, CoherenceLevel), CliError> {
        let effect = rows_to_matrix(&self.effect).map_err(CliError::parse)?;
        let density = |rows: &[Vec<Complex>]| -> Result<DensityOperator, CliError> {
            DensityOperator::new(rows_to_matrix(rows).map_err(CliError::parse)?).map_err(CliError::invalid)
        };
        let map = build_two_outcome(effect, density(&self.out1)?, density(&self.out2)?, self.scale)
            .map_err(CliError::invalid)?;
        let level = CoherenceLevel::new(self.level, map.dim()).map_err(CliError::invalid)?;
        Ok((map, level))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub dim: usize,
    pub level: usize,
    pub source: StateJson,
    pub target: StateJson,
    pub g_source: f64,
    pub r_target: f64,
    pub ratio: f64,
    pub p_max: f64,
    pub deterministic_feasible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapJson>,
}

impl ReportJson {
    pub fn from_report(report: &ConversionReport) -> Self {
        Self {
            dim: report.source.dim(),
            level: report.level.k(),
            source: StateJson::from_state(&report.source),
            target: StateJson::from_state(&report.target),
            g_source: report.g_source,
            r_target: report.r_target,
            ratio: report.ratio,
            p_max: report.p_max,
            deterministic_feasible: report.deterministic_feasible,
            map: report.map.as_ref().map(MapJson::from_map),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub level: usize,
    pub witness: StateJson,
    pub target: StateJson,
    pub g_witness: f64,
    pub r_target: f64,
    pub threshold: f64,
    pub map: MapJson,
}

impl WitnessJson {
    pub fn from_witness(w: &NonIsolationWitness) -> Self {
        Self {
            level: w.map.level.k(),
            witness: StateJson::from_state(&w.source),
            target: StateJson::from_state(&w.map.target),
            g_witness: w.g_source,
            r_target: w.map.r_target,
            threshold: w.threshold,
            map: MapJson::from_map(&w.map),
        }
    }
}

pub fn parse_state(text: &str) -> Result<PureState, CliError> {
    let raw: StateJson = serde_json::from_str(text).map_err(|e| CliError::parse(e.to_string()))?;
    raw.to_state()
}

pub fn state_to_json(state: &PureState) -> String {
    to_json(&StateJson::from_state(state))
}

pub fn read_state(path: &Path) -> Result<PureState, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_state(&text).map_err(|e| e.in_file(path))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}
