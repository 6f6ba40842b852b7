//! Monte Carlo BLER estimation over scenarios, Eb/N0 sweeps, confidence
//! intervals, CSV reporting, and curve comparison.
//!
//! Reproducibility contract: every trial derives its RNG from
//! `(scenario seed, grid index, trial index)` as an independent ChaCha8
//! stream, so results are bit-identical regardless of thread count or
//! scheduling. Within a trial the draw order is fixed: message, channel
//! noise, then the attack realization (jamming vector or shift offset).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::Perturbation;
use crate::autoencoder::TrainedAutoencoder;
use crate::channel::{awgn, cyclic_shift, gaussian_jamming, ChannelConfig};
use crate::classical::ModulatedCodebook;
use crate::{Error, Result};

/// The communication system being measured.
#[derive(Debug, Clone)]
pub enum SystemUnderTest {
    Autoencoder(Arc<TrainedAutoencoder>),
    Classical(Arc<ModulatedCodebook>),
    /// Synthetic decoder that errs with a known probability; used to
    /// validate the estimator itself.
    ErrorStub { error_prob: f64 },
}

impl SystemUnderTest {
    pub fn autoencoder(model: TrainedAutoencoder) -> Self {
        SystemUnderTest::Autoencoder(Arc::new(model))
    }

    pub fn classical() -> Self {
        SystemUnderTest::Classical(Arc::new(ModulatedCodebook::new()))
    }

    pub fn label(&self) -> String {
        match self {
            SystemUnderTest::Autoencoder(m) => m.model_id(),
            SystemUnderTest::Classical(_) => "classical".into(),
            SystemUnderTest::ErrorStub { .. } => "error_stub".into(),
        }
    }

    fn message_count(&self) -> usize {
        match self {
            SystemUnderTest::Autoencoder(m) => m.arch.message_count(),
            SystemUnderTest::Classical(cb) => cb.len(),
            SystemUnderTest::ErrorStub { .. } => 0,
        }
    }
}

/// Attack applied at the receiver input.
#[derive(Debug, Clone)]
pub enum AttackModel {
    None,
    /// Power-matched Gaussian jamming; a fresh vector every trial.
    Jamming { p_power: f64 },
    /// A fixed stored perturbation, optionally shifted per trial.
    Fixed {
        label: String,
        perturbation: Arc<Perturbation>,
    },
}

impl AttackModel {
    pub fn fixed(label: impl Into<String>, perturbation: Perturbation) -> Self {
        AttackModel::Fixed {
            label: label.into(),
            perturbation: Arc::new(perturbation),
        }
    }

    pub fn label(&self) -> String {
        match self {
            AttackModel::None => "none".into(),
            AttackModel::Jamming { .. } => "jamming".into(),
            AttackModel::Fixed { label, .. } => format!("perturbation:{label}"),
        }
    }
}

/// Shift policy for fixed perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftPolicy {
    None,
    /// Uniformly random cyclic shift over the n complex positions, drawn
    /// fresh every trial.
    UniformRandom,
}

impl fmt::Display for ShiftPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShiftPolicy::None => write!(f, "none"),
            ShiftPolicy::UniformRandom => write!(f, "uniform_random"),
        }
    }
}

/// One Monte Carlo operating point: system x attack x shift x channel.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub system: SystemUnderTest,
    pub attack: AttackModel,
    pub shift_policy: ShiftPolicy,
    pub channel: ChannelConfig,
    pub psr_db: Option<f64>,
    pub trials: u64,
    pub seed: u64,
    /// Position within a sweep; feeds the per-trial RNG stream derivation.
    pub grid_index: u64,
}

impl Scenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        system: SystemUnderTest,
        attack: AttackModel,
        shift_policy: ShiftPolicy,
        channel: ChannelConfig,
        psr_db: Option<f64>,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        let scenario = Scenario {
            id: id.into(),
            system,
            attack,
            shift_policy,
            channel,
            psr_db,
            trials,
            seed,
            grid_index: 0,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config(format!(
                "scenario '{}': trials must be at least 1",
                self.id
            )));
        }
        match &self.system {
            SystemUnderTest::Autoencoder(m) => {
                if m.arch.n != self.channel.n || m.arch.k != self.channel.k {
                    return Err(Error::Config(format!(
                        "scenario '{}': model is (n={}, k={}) but the channel is (n={}, k={})",
                        self.id, m.arch.n, m.arch.k, self.channel.n, self.channel.k
                    )));
                }
            }
            SystemUnderTest::Classical(_) => {
                if self.channel.k != 4 || self.channel.n != 7 {
                    return Err(Error::Config(format!(
                        "scenario '{}': the classical baseline is a (7,4) code",
                        self.id
                    )));
                }
            }
            SystemUnderTest::ErrorStub { error_prob } => {
                if !(0.0..=1.0).contains(error_prob) {
                    return Err(Error::Config(format!(
                        "scenario '{}': stub error probability must lie in [0, 1]",
                        self.id
                    )));
                }
            }
        }
        match &self.attack {
            AttackModel::None => {}
            AttackModel::Jamming { p_power } => {
                if !(*p_power >= 0.0 && p_power.is_finite()) {
                    return Err(Error::Config(format!(
                        "scenario '{}': jamming power must be nonnegative",
                        self.id
                    )));
                }
            }
            AttackModel::Fixed { perturbation, .. } => {
                if perturbation.signal_len() != self.channel.signal_len() {
                    return Err(Error::Config(format!(
                        "scenario '{}': perturbation length {} does not match 2n = {}",
                        self.id,
                        perturbation.signal_len(),
                        self.channel.signal_len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Copy of this scenario at a different Eb/N0 grid position.
    pub fn at_grid_point(&self, ebno_db: f64, grid_index: u64) -> Result<Scenario> {
        let mut s = self.clone();
        s.channel = ChannelConfig::new(ebno_db, self.channel.k, self.channel.n)?;
        s.grid_index = grid_index;
        Ok(s)
    }

    /// Transmit codebook of the system, indexed by message (`None` for the
    /// estimator stub).
    fn system_codebook(&self) -> Result<Option<Vec<Vec<f64>>>> {
        match &self.system {
            SystemUnderTest::Autoencoder(m) => Ok(Some(m.codebook()?)),
            SystemUnderTest::Classical(cb) => {
                Ok(Some((0..cb.len()).map(|s| cb.vector(s).to_vec()).collect()))
            }
            SystemUnderTest::ErrorStub { .. } => Ok(None),
        }
    }

    fn trial_rng(&self, trial_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((self.grid_index << 44) | trial_index);
        rng
    }

    /// Runs one trial; returns whether a block error occurred. Fully
    /// determined by `(seed, grid_index, trial_index)`.
    pub fn run_trial(&self, trial_index: u64) -> Result<bool> {
        let codebook = self.system_codebook()?;
        self.trial_with_codebook(codebook.as_deref(), trial_index)
    }

    fn trial_with_codebook(
        &self,
        codebook: Option<&[Vec<f64>]>,
        trial_index: u64,
    ) -> Result<bool> {
        let mut rng = self.trial_rng(trial_index);

        if let SystemUnderTest::ErrorStub { error_prob } = &self.system {
            return Ok(rng.random::<f64>() < *error_prob);
        }
        let codebook = codebook.expect("non-stub systems have a codebook");

        let s = rng.random_range(0..self.system.message_count());
        let x = &codebook[s];
        let noise = awgn(x.len(), self.channel.sigma2, &mut rng);

        let mut y: Vec<f64> = x.iter().zip(&noise).map(|(a, b)| a + b).collect();
        match &self.attack {
            AttackModel::None => {}
            AttackModel::Jamming { p_power } => {
                let jam = gaussian_jamming(y.len(), *p_power, &mut rng);
                for (yi, ji) in y.iter_mut().zip(&jam) {
                    *yi += ji;
                }
            }
            AttackModel::Fixed { perturbation, .. } => {
                let applied = match self.shift_policy {
                    ShiftPolicy::None => perturbation.vector.clone(),
                    ShiftPolicy::UniformRandom => {
                        let r = rng.random_range(0..self.channel.n);
                        cyclic_shift(&perturbation.vector, r)?
                    }
                };
                for (yi, pi) in y.iter_mut().zip(&applied) {
                    *yi += pi;
                }
            }
        }

        let s_hat = match &self.system {
            SystemUnderTest::Autoencoder(m) => m.decode(&y)?.1,
            SystemUnderTest::Classical(cb) => cb.mld_decode(&y),
            SystemUnderTest::ErrorStub { .. } => unreachable!(),
        };
        Ok(s_hat != s)
    }

    /// Descriptor used in curves, CSV rows, and reports.
    pub fn meta(&self) -> ScenarioMeta {
        ScenarioMeta {
            id: self.id.clone(),
            system: self.system.label(),
            attack: self.attack.label(),
            shift_policy: self.shift_policy.to_string(),
            psr_db: self.psr_db,
            seed: self.seed,
        }
    }
}

/// One BLER estimate with a 95% normal-approximation confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlerPoint {
    pub ebno_db: f64,
    pub bler: f64,
    pub ci95: f64,
    pub trials: u64,
    pub errors: u64,
}

impl BlerPoint {
    pub fn new(ebno_db: f64, errors: u64, trials: u64) -> Self {
        let b = errors as f64 / trials as f64;
        BlerPoint {
            ebno_db,
            bler: b,
            ci95: 1.96 * (b * (1.0 - b) / trials as f64).sqrt(),
            trials,
            errors,
        }
    }

    pub fn lower(&self) -> f64 {
        (self.bler - self.ci95).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.bler + self.ci95
    }

    /// One-sided 95% upper bound when no errors were observed (rule of
    /// three), `None` otherwise.
    pub fn rule_of_three_upper(&self) -> Option<f64> {
        (self.errors == 0).then(|| 3.0 / self.trials as f64)
    }
}

/// Scenario descriptor carried alongside curve data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub id: String,
    pub system: String,
    pub attack: String,
    pub shift_policy: String,
    pub psr_db: Option<f64>,
    pub seed: u64,
}

/// BLER estimates over an Eb/N0 grid for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlerCurve {
    pub scenario: ScenarioMeta,
    pub points: Vec<BlerPoint>,
}

impl BlerCurve {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ebno_db).collect()
    }
}

/// Estimates the BLER of one scenario, parallelizing over trials.
pub fn estimate_bler(scenario: &Scenario) -> Result<BlerPoint> {
    scenario.validate()?;
    let codebook = scenario.system_codebook()?;
    let errors: u64 = (0..scenario.trials)
        .into_par_iter()
        .map(|t| {
            scenario
                .trial_with_codebook(codebook.as_deref(), t)
                .map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(BlerPoint::new(scenario.channel.ebno_db, errors, scenario.trials))
}

/// One BLER point per grid value, sharing the scenario seed with per-point
/// stream derivation. The grid must be nonempty and strictly increasing.
pub fn sweep(scenario: &Scenario, ebno_grid_db: &[f64]) -> Result<BlerCurve> {
    if ebno_grid_db.is_empty() {
        return Err(Error::Argument("Eb/N0 grid must be nonempty".into()));
    }
    if ebno_grid_db.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Argument(
            "Eb/N0 grid must be strictly increasing".into(),
        ));
    }
    let mut points = Vec::with_capacity(ebno_grid_db.len());
    for (gi, ebno) in ebno_grid_db.iter().enumerate() {
        let point_scenario = scenario.at_grid_point(*ebno, gi as u64)?;
        points.push(estimate_bler(&point_scenario)?);
    }
    Ok(BlerCurve {
        scenario: scenario.meta(),
        points,
    })
}

// --- comparison ----------------------------------------------------------

/// Per-grid-point comparison of two curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointComparison {
    pub ebno_db: f64,
    pub bler_a: f64,
    pub ci_a: f64,
    pub bler_b: f64,
    pub ci_b: f64,
    /// `bler_a / bler_b`, absent when the denominator is zero.
    pub ratio: Option<f64>,
    /// A dominates B with non-overlapping 95% CIs.
    pub a_gt_b_ci: bool,
    /// B dominates A with non-overlapping 95% CIs.
    pub b_gt_a_ci: bool,
}

/// Comparison of one named curve pair over the shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub a: String,
    pub b: String,
    pub points: Vec<PointComparison>,
}

/// Ratio table plus CI-aware dominance flags for named scenario pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub pairs: Vec<PairComparison>,
}

/// Compares named curve pairs point by point. All referenced curves must
/// share the same Eb/N0 grid.
pub fn compare_report(
    curves: &[BlerCurve],
    pairs: &[(String, String)],
) -> Result<ComparisonReport> {
    let mut by_id: BTreeMap<&str, &BlerCurve> = BTreeMap::new();
    for c in curves {
        if by_id.insert(c.scenario.id.as_str(), c).is_some() {
            return Err(Error::Argument(format!(
                "duplicate scenario id '{}'",
                c.scenario.id
            )));
        }
    }
    let lookup = |id: &str| -> Result<&BlerCurve> {
        by_id.get(id).copied().ok_or_else(|| {
            let available: Vec<&str> = by_id.keys().copied().collect();
            Error::Argument(format!(
                "unknown scenario id '{id}'; available: {}",
                available.join(", ")
            ))
        })
    };

    let mut out = Vec::with_capacity(pairs.len());
    for (a_id, b_id) in pairs {
        let a = lookup(a_id)?;
        let b = lookup(b_id)?;
        if a.grid() != b.grid() {
            return Err(Error::Argument(format!(
                "curves '{a_id}' and '{b_id}' have mismatched Eb/N0 grids"
            )));
        }
        let points = a
            .points
            .iter()
            .zip(&b.points)
            .map(|(pa, pb)| PointComparison {
                ebno_db: pa.ebno_db,
                bler_a: pa.bler,
                ci_a: pa.ci95,
                bler_b: pb.bler,
                ci_b: pb.ci95,
                ratio: (pb.bler > 0.0).then(|| pa.bler / pb.bler),
                a_gt_b_ci: pa.lower() > pb.upper(),
                b_gt_a_ci: pb.lower() > pa.upper(),
            })
            .collect();
        out.push(PairComparison {
            a: a_id.clone(),
            b: b_id.clone(),
            points,
        });
    }
    Ok(ComparisonReport { pairs: out })
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for pair in &self.pairs {
            writeln!(f, "pair: {} vs {}", pair.a, pair.b)?;
            writeln!(
                f,
                "{:>8}  {:>12}  {:>12}  {:>10}  dominance",
                "Eb/N0", pair.a, pair.b, "ratio"
            )?;
            for p in &pair.points {
                let ratio = match p.ratio {
                    Some(r) => format!("{r:.4}"),
                    None => "inf".into(),
                };
                let flag = if p.a_gt_b_ci {
                    "a > b"
                } else if p.b_gt_a_ci {
                    "b > a"
                } else {
                    "-"
                };
                writeln!(
                    f,
                    "{:>8}  {:>12.6e}  {:>12.6e}  {:>10}  {}",
                    p.ebno_db, p.bler_a, p.bler_b, ratio, flag
                )?;
            }
        }
        Ok(())
    }
}

// --- CSV ------------------------------------------------------------------

pub const CSV_HEADER: &str =
    "scenario_id,system,attack,shift_policy,psr_db,ebno_db,trials,errors,bler,ci95,seed,note";

/// Renders curves as CSV, one row per BLER point. Zero-error points carry a
/// rule-of-three upper bound in the trailing note column.
pub fn curves_to_csv(curves: &[BlerCurve]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for curve in curves {
        let m = &curve.scenario;
        let psr = m.psr_db.map(|v| v.to_string()).unwrap_or_default();
        for p in &curve.points {
            let note = p
                .rule_of_three_upper()
                .map(|u| format!("rule_of_three_upper={u}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                m.id,
                m.system,
                m.attack,
                m.shift_policy,
                psr,
                p.ebno_db,
                p.trials,
                p.errors,
                p.bler,
                p.ci95,
                m.seed,
                note
            ));
        }
    }
    out
}

/// Parses curves back from the CSV form, grouping rows by scenario id in
/// order of first appearance.
pub fn curves_from_csv(text: &str) -> Result<Vec<BlerCurve>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Argument("empty CSV".into()))?;
    if header.trim() != CSV_HEADER {
        return Err(Error::Argument(format!(
            "unexpected CSV header '{}'",
            header.trim()
        )));
    }
    let mut order: Vec<String> = Vec::new();
    let mut curves: BTreeMap<String, BlerCurve> = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(Error::Argument(format!(
                "CSV row {}: expected 12 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_f64 = |v: &str, what: &str| -> Result<f64> {
            v.parse::<f64>().map_err(|_| {
                Error::Argument(format!("CSV row {}: bad {what} '{v}'", lineno + 2))
            })
        };
        let parse_u64 = |v: &str, what: &str| -> Result<u64> {
            v.parse::<u64>().map_err(|_| {
                Error::Argument(format!("CSV row {}: bad {what} '{v}'", lineno + 2))
            })
        };
        let psr_db = if fields[4].is_empty() {
            None
        } else {
            Some(parse_f64(fields[4], "psr_db")?)
        };
        let ebno_db = parse_f64(fields[5], "ebno_db")?;
        let trials = parse_u64(fields[6], "trials")?;
        let errors = parse_u64(fields[7], "errors")?;
        let seed = parse_u64(fields[10], "seed")?;
        let id = fields[0].to_string();
        let entry = curves.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            BlerCurve {
                scenario: ScenarioMeta {
                    id,
                    system: fields[1].to_string(),
                    attack: fields[2].to_string(),
                    shift_policy: fields[3].to_string(),
                    psr_db,
                    seed,
                },
                points: Vec::new(),
            }
        });
        entry.points.push(BlerPoint::new(ebno_db, errors, trials));
    }
    let out: Vec<BlerCurve> = order.into_iter().map(|id| curves.remove(&id).unwrap()).collect();
    for curve in &out {
        if curve.points.windows(2).any(|w| !(w[0].ebno_db < w[1].ebno_db)) {
            return Err(Error::Argument(format!(
                "curve '{}' has a non-increasing Eb/N0 grid",
                curve.scenario.id
            )));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
