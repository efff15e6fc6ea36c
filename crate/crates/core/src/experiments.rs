//! Parameter sweeps behind the CLI's `experiment` subcommands.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csqbc::{
    binomial_stderr, honest_commitment, simulate_miner_cheat, simulate_voter_cheat, CommitValue, CsqbcError,
    CsqbcParams, DecodeResult,
};
use crate::qba::{estimate_success, AdversaryModel, CopySource, CurveRow, QbaError, CURVE_HEADER};
use crate::quantum::{prepare_aharonov, DensityMatrix, QuantumError, AHARONOV_QUBITS, EQ_TOL, PSD_TOL};
use crate::rng::trial_rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("nothing to sweep")]
    EmptySweep,
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Csqbc(#[from] CsqbcError),
    #[error(transparent)]
    Qba(#[from] QbaError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// A row that can be written as one CSV line.
pub trait CsvRow {
    fn header() -> &'static str;
    fn csv(&self) -> String;
}

/// A `# ` comment line, the header, then one line per row.
pub fn to_csv<R: CsvRow>(rows: &[R], comment: &str) -> String {
    let mut out = format!("# {comment}\n{}\n", R::header());
    for r in rows {
        out.push_str(&r.csv());
        out.push('\n');
    }
    out
}

impl CsvRow for CurveRow {
    fn header() -> &'static str {
        CURVE_HEADER
    }

    fn csv(&self) -> String {
        CurveRow::csv(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsqbcRow {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub success_rate: f64,
    pub stderr: f64,
}

impl CsvRow for CsqbcRow {
    fn header() -> &'static str {
        "n,m,trials,success_rate,stderr"
    }

    fn csv(&self) -> String {
        format!("{},{},{},{},{}", self.n, self.m, self.trials, self.success_rate, self.stderr)
    }
}

/// Fraction of honest two-bit commitments that open to the committed value.
pub fn run_experiment_csqbc<R: Rng + ?Sized>(
    n_values: &[usize],
    m: usize,
    trials: usize,
    rng: &mut R,
) -> Result<Vec<CsqbcRow>, ExperimentError> {
    if n_values.is_empty() {
        return Err(ExperimentError::EmptySweep);
    }
    if trials == 0 {
        return Err(ExperimentError::NoTrials);
    }
    let params = n_values
        .iter()
        .map(|&n| CsqbcParams::new(n, m, 1))
        .collect::<Result<Vec<_>, _>>()?;
    let base: u64 = rng.gen();
    params
        .iter()
        .enumerate()
        .map(|(point, p)| {
            let ok = (0..trials as u32)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(base, point as u32, t);
                    let value = CommitValue::new(rng.gen_range(0..4))?;
                    let (record, _) = honest_commitment(p, value, &mut rng)?;
                    Ok(record.decode()? == DecodeResult::Bits(value))
                })
                .collect::<Result<Vec<bool>, CsqbcError>>()?
                .into_iter()
                .filter(|&b| b)
                .count();
            let rate = ok as f64 / trials as f64;
            Ok(CsqbcRow {
                n: p.n,
                m,
                trials,
                success_rate: rate,
                stderr: binomial_stderr(rate, trials),
            })
        })
        .collect()
}

pub fn run_experiment_qba<R: Rng + ?Sized>(
    copies: &[usize],
    lambda: f64,
    adversary: AdversaryModel,
    trials: usize,
    source: CopySource,
    rng: &mut R,
) -> Result<Vec<CurveRow>, ExperimentError> {
    Ok(estimate_success(copies, lambda, adversary, trials, source, rng)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub p: f64,
    pub fidelity: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
    pub hermitian: bool,
}

impl CsvRow for FidelityRow {
    fn header() -> &'static str {
        "p,fidelity,trace,min_eigenvalue,hermitian"
    }

    fn csv(&self) -> String {
        format!("{},{},{},{},{}", self.p, self.fidelity, self.trace, self.min_eigenvalue, self.hermitian)
    }
}

/// Depolarize every qubit of `|A><A|` with strength `p` and compare to the ideal state.
pub fn run_experiment_fidelity(noise_levels: &[f64]) -> Result<Vec<FidelityRow>, ExperimentError> {
    if noise_levels.is_empty() {
        return Err(ExperimentError::EmptySweep);
    }
    let ideal = DensityMatrix::from_pure(&prepare_aharonov());
    noise_levels
        .iter()
        .map(|&p| {
            let mut rho = ideal.clone();
            for q in 0..AHARONOV_QUBITS {
                rho = rho.depolarize(q, p)?;
                rho.validate()?;
            }
            Ok(FidelityRow {
                p,
                fidelity: DensityMatrix::fidelity(&rho, &ideal)?,
                trace: rho.trace().re,
                min_eigenvalue: rho.min_eigenvalue(),
                hermitian: rho.is_hermitian(EQ_TOL) && rho.min_eigenvalue() >= -PSD_TOL,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheatMode {
    Voter,
    Miner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheatRow {
    pub mode: CheatMode,
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub success_rate: f64,
    pub stderr: f64,
    /// `(1/2)^n` for the voter, `1/(m+1)` for the miner.
    pub analytic: f64,
    /// Voter: exact rate of the played forgery. Miner: the same `1/(m+1)`.
    pub predicted: f64,
    /// Voter: rate a record-aware voter would reach. Miner: detection rate.
    pub secondary: f64,
}

impl CsvRow for CheatRow {
    fn header() -> &'static str {
        "mode,n,m,trials,success_rate,stderr,analytic,predicted,secondary"
    }

    fn csv(&self) -> String {
        let mode = match self.mode {
            CheatMode::Voter => "voter",
            CheatMode::Miner => "miner",
        };
        format!(
            "{mode},{},{},{},{},{},{},{},{}",
            self.n, self.m, self.trials, self.success_rate, self.stderr, self.analytic, self.predicted, self.secondary
        )
    }
}

/// Cheat rates over every `(n, m)` pair.
pub fn run_experiment_cheat<R: Rng + ?Sized>(
    mode: CheatMode,
    n_values: &[usize],
    m_values: &[usize],
    trials: usize,
    rng: &mut R,
) -> Result<Vec<CheatRow>, ExperimentError> {
    if n_values.is_empty() || m_values.is_empty() {
        return Err(ExperimentError::EmptySweep);
    }
    if trials == 0 {
        return Err(ExperimentError::NoTrials);
    }
    let mut rows = vec![];
    for &n in n_values {
        for &m in m_values {
            let params = CsqbcParams::new(n, m, 1)?;
            let row = match mode {
                CheatMode::Voter => {
                    let r = simulate_voter_cheat(&params, trials, rng)?;
                    CheatRow {
                        mode,
                        n,
                        m,
                        trials,
                        success_rate: r.success_rate(),
                        stderr: r.stderr(),
                        analytic: 0.5f64.powi(n as i32),
                        predicted: r.predicted,
                        secondary: r.informed_rate(),
                    }
                }
                CheatMode::Miner => {
                    let r = simulate_miner_cheat(&params, trials, rng)?;
                    CheatRow {
                        mode,
                        n,
                        m,
                        trials,
                        success_rate: r.success_rate(),
                        stderr: r.stderr(),
                        analytic: 1.0 / (m + 1) as f64,
                        predicted: 1.0 / (m + 1) as f64,
                        secondary: r.detection_rate(),
                    }
                }
            };
            rows.push(row);
        }
    }
    Ok(rows)
}
