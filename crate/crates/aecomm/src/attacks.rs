//! Adversarial perturbation crafting.
//!
//! Three attack surfaces are provided:
//!
//! - [`fgm_perturbation`] — a per-input perturbation along the normalized
//!   loss gradient, with a geometric line search for the smallest scaling
//!   that flips the decoder's decision;
//! - [`craft_universal`] — an input-agnostic perturbation built by
//!   iteratively folding per-input perturbations into a single vector under
//!   a power budget;
//! - [`craft_shift_invariant`] — a perturbation that stays effective under
//!   unknown cyclic time offsets, obtained as the principal right singular
//!   direction of a pool of shift-screened universal perturbations.
//!
//! All crafting is driven by an explicit seed in [`AttackConfig`]; identical
//! (model, config) inputs produce bit-identical perturbations.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autoencoder::TrainedAutoencoder;
use crate::channel::{awgn, cyclic_shift, ChannelConfig};
use crate::evaluation::{AttackModel, Scenario, ShiftPolicy, SystemUnderTest};
use crate::util::{l2_norm, norm_sq};
use crate::{Error, Result};

/// Which crafting algorithm produced a perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Universal,
    ShiftInvariant,
}

/// Crafting parameters. `seed` drives all randomness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    /// Iterations of the universal-perturbation loop.
    pub number_of_samples: usize,
    /// Pool size I of candidate perturbations for shift-invariant crafting.
    pub pool_size: usize,
    /// Number t of screened candidates kept for the SVD.
    pub keep_count: usize,
    /// Monte Carlo trials per candidate when screening shifted BLER.
    pub screening_trials: usize,
    /// Keep the t candidates with the *lowest* shifted-attack BLER instead
    /// of the highest. Off by default: a strong attack yields a high BLER.
    pub select_lowest_bler: bool,
    /// Points on the geometric line-search grid for the FGM scaling.
    pub line_search_points: usize,
    /// Ratio of the smallest line-search scaling to the cap.
    pub line_search_span: f64,
    pub seed: u64,
}

impl AttackConfig {
    /// Defaults with an explicit seed.
    pub fn with_seed(seed: u64) -> Self {
        AttackConfig {
            number_of_samples: 10,
            pool_size: 100,
            keep_count: 10,
            screening_trials: 2000,
            select_lowest_bler: false,
            line_search_points: 25,
            line_search_span: 1e-3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.number_of_samples == 0 {
            return Err(Error::Config("number_of_samples must be at least 1".into()));
        }
        if self.keep_count == 0 || self.keep_count > self.pool_size {
            return Err(Error::Config(format!(
                "keep_count {} must satisfy 1 <= t <= pool_size {}",
                self.keep_count, self.pool_size
            )));
        }
        if self.screening_trials == 0 {
            return Err(Error::Config("screening_trials must be at least 1".into()));
        }
        if self.line_search_points < 2 {
            return Err(Error::Config("line search needs at least 2 points".into()));
        }
        if !(self.line_search_span > 0.0 && self.line_search_span < 1.0) {
            return Err(Error::Config("line_search_span must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Where a perturbation came from and how it was crafted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub attack: AttackKind,
    pub substitute_model: String,
    pub seed: u64,
    /// Channel noise variance assumed while crafting.
    pub crafting_sigma2: f64,
    pub config: AttackConfig,
    /// For universal crafting: how many FGM updates were folded in.
    pub updates_applied: Option<usize>,
    /// Set when the crafting loop never produced an update and the
    /// perturbation is all zero.
    pub warning_no_updates: bool,
}

/// A crafted perturbation with its power budget and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub vector: Vec<f64>,
    pub p_power: f64,
    pub provenance: Provenance,
}

impl Perturbation {
    /// Enforces the budget invariant `||vector||^2 <= p_power + 1e-9`.
    pub fn new(vector: Vec<f64>, p_power: f64, provenance: Provenance) -> Result<Self> {
        let sq = norm_sq(&vector);
        if sq > p_power + 1e-9 {
            return Err(Error::Numeric(format!(
                "perturbation power {sq} exceeds budget {p_power}"
            )));
        }
        Ok(Perturbation {
            vector,
            p_power,
            provenance,
        })
    }

    pub fn signal_len(&self) -> usize {
        self.vector.len()
    }
}

pub const PERTURBATION_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct PerturbationFile {
    format_version: u32,
    vector: Vec<f64>,
    p_power: f64,
    provenance: Provenance,
}

impl Perturbation {
    pub fn to_json(&self) -> Result<String> {
        let file = PerturbationFile {
            format_version: PERTURBATION_FORMAT_VERSION,
            vector: self.vector.clone(),
            p_power: self.p_power,
            provenance: self.provenance.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PerturbationFile = serde_json::from_str(text)?;
        if file.format_version != PERTURBATION_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported perturbation format version {}",
                file.format_version
            )));
        }
        Perturbation::new(file.vector, file.p_power, file.provenance)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Smallest-scaling FGM perturbation that flips the decoder's decision on
/// `w`, or `None` when no grid point flips it (including the zero-gradient
/// case, where the direction is undefined).
///
/// The direction is the normalized gradient of the cross-entropy loss at
/// the true label; the scaling is searched over a geometric grid from
/// `cap * line_search_span` up to `cap`.
pub fn fgm_perturbation(
    model: &TrainedAutoencoder,
    w: &[f64],
    s_true: usize,
    cap: f64,
    config: &AttackConfig,
) -> Result<Option<Vec<f64>>> {
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(Error::Argument("cap must be positive and finite".into()));
    }
    let grad = model.decoder_input_gradient(w, s_true)?;
    let gnorm = l2_norm(&grad);
    if !gnorm.is_finite() {
        return Err(Error::Numeric("gradient is not finite".into()));
    }
    if gnorm == 0.0 {
        return Ok(None);
    }
    let direction: Vec<f64> = grad.iter().map(|g| g / gnorm).collect();
    let (_, baseline) = model.decode(w)?;

    let points = config.line_search_points;
    for i in 0..points {
        let exponent = 1.0 - i as f64 / (points - 1) as f64;
        let alpha = cap * config.line_search_span.powf(exponent);
        let candidate: Vec<f64> = w
            .iter()
            .zip(&direction)
            .map(|(wi, di)| wi + alpha * di)
            .collect();
        let (_, decided) = model.decode(&candidate)?;
        if decided != baseline {
            return Ok(Some(direction.iter().map(|d| alpha * d).collect()));
        }
    }
    Ok(None)
}

/// Crafts an input-agnostic perturbation under the power budget `p_power`.
///
/// Each iteration simulates one transmission (uniform message, fresh noise,
/// current perturbation); when the decoder still classifies it correctly,
/// the smallest flipping FGM perturbation for that received signal is added
/// to the running vector, renormalizing to the budget whenever the sum
/// exceeds it.
pub fn craft_universal(
    model: &TrainedAutoencoder,
    p_power: f64,
    sigma2: f64,
    config: &AttackConfig,
) -> Result<Perturbation> {
    config.validate()?;
    if !(p_power > 0.0 && p_power.is_finite()) {
        return Err(Error::Argument("p_power must be positive and finite".into()));
    }
    if sigma2 < 0.0 {
        return Err(Error::Argument("sigma2 must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let m = model.arch.message_count();
    let len = model.arch.signal_len();
    let cap = p_power.sqrt();

    let mut p = vec![0.0; len];
    let mut updates = 0usize;
    for _ in 0..config.number_of_samples {
        let s = rng.random_range(0..m);
        let noise = awgn(len, sigma2, &mut rng);
        let x = model.encode(s)?;
        let w: Vec<f64> = x
            .iter()
            .zip(&p)
            .zip(&noise)
            .map(|((xi, pi), ni)| xi + pi + ni)
            .collect();
        let (_, s_hat) = model.decode(&w)?;
        if s_hat != s {
            continue;
        }
        let Some(update) = fgm_perturbation(model, &w, s, cap, config)? else {
            continue;
        };
        let mut sum: Vec<f64> = p.iter().zip(&update).map(|(a, b)| a + b).collect();
        let sum_sq = norm_sq(&sum);
        if sum_sq > p_power {
            let scale = p_power.sqrt() / sum_sq.sqrt();
            for v in &mut sum {
                *v *= scale;
            }
        }
        p = sum;
        updates += 1;
    }

    let provenance = Provenance {
        attack: AttackKind::Universal,
        substitute_model: model.model_id(),
        seed: config.seed,
        crafting_sigma2: sigma2,
        config: *config,
        updates_applied: Some(updates),
        warning_no_updates: updates == 0,
    };
    Perturbation::new(p, p_power, provenance)
}

/// BLER on `model` when a uniformly random cyclic shift of `p` is applied
/// each trial. Used to screen shift-invariance of candidate perturbations.
pub fn shifted_attack_bler(
    model: &TrainedAutoencoder,
    p: &[f64],
    sigma2: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Argument("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = model.arch.message_count();
    let n = model.arch.n;
    let len = model.arch.signal_len();
    if p.len() != len {
        return Err(Error::Argument(format!(
            "perturbation length {} does not match 2n = {len}",
            p.len()
        )));
    }
    let codebook = model.codebook()?;
    let mut errors = 0usize;
    for _ in 0..trials {
        let s = rng.random_range(0..m);
        let noise = awgn(len, sigma2, &mut rng);
        let r = rng.random_range(0..n);
        let shifted = cyclic_shift(p, r)?;
        let y: Vec<f64> = codebook[s]
            .iter()
            .zip(&shifted)
            .zip(&noise)
            .map(|((xi, pi), ni)| xi + pi + ni)
            .collect();
        let (_, s_hat) = model.decode(&y)?;
        if s_hat != s {
            errors += 1;
        }
    }
    Ok(errors as f64 / trials as f64)
}

/// Crafts a shift-invariant perturbation on the substitute model.
///
/// Generates `pool_size` universal perturbations with independent seeds,
/// screens each by its shifted-attack BLER on the substitute, keeps the
/// `keep_count` strongest, stacks their normalized vectors, and takes the
/// first right singular vector of the stack. The sign is resolved by
/// evaluating both signs on the substitute; the result is scaled to
/// `sqrt(p_power)`.
pub fn craft_shift_invariant(
    model: &TrainedAutoencoder,
    p_power: f64,
    sigma2: f64,
    config: &AttackConfig,
) -> Result<Perturbation> {
    config.validate()?;
    if !(p_power > 0.0 && p_power.is_finite()) {
        return Err(Error::Argument("p_power must be positive and finite".into()));
    }
    let mut seeder = ChaCha8Rng::seed_from_u64(config.seed);
    let candidate_seeds: Vec<u64> = (0..config.pool_size).map(|_| seeder.next_u64()).collect();
    let screening_seeds: Vec<u64> = (0..config.pool_size).map(|_| seeder.next_u64()).collect();
    let sign_seed = seeder.next_u64();

    // Step 1: the candidate pool.
    let mut candidates = Vec::with_capacity(config.pool_size);
    for seed in &candidate_seeds {
        let sub = AttackConfig {
            seed: *seed,
            ..*config
        };
        candidates.push(craft_universal(model, p_power, sigma2, &sub)?);
    }

    // Step 2: shifted-attack BLER of every candidate on the substitute.
    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(candidates.len());
    for (i, cand) in candidates.iter().enumerate() {
        let bler = shifted_attack_bler(
            model,
            &cand.vector,
            sigma2,
            config.screening_trials,
            screening_seeds[i],
        )?;
        scored.push((i, bler));
    }

    // Step 3: keep the strongest t (ties broken by pool index).
    scored.sort_by(|a, b| {
        let ord = a.1.partial_cmp(&b.1).expect("BLERs are finite");
        if config.select_lowest_bler {
            ord.then(a.0.cmp(&b.0))
        } else {
            ord.reverse().then(a.0.cmp(&b.0))
        }
    });
    let kept: Vec<&Perturbation> = scored
        .iter()
        .take(config.keep_count)
        .map(|(i, _)| &candidates[*i])
        .filter(|c| norm_sq(&c.vector) > 0.0)
        .collect();

    let len = model.arch.signal_len();
    let make_provenance = |warning: bool| Provenance {
        attack: AttackKind::ShiftInvariant,
        substitute_model: model.model_id(),
        seed: config.seed,
        crafting_sigma2: sigma2,
        config: *config,
        updates_applied: None,
        warning_no_updates: warning,
    };
    if kept.is_empty() {
        // Every kept candidate was the zero vector; nothing to decompose.
        return Perturbation::new(vec![0.0; len], p_power, make_provenance(true));
    }

    // Steps 4-5: stack row-normalized candidates and take the SVD.
    let rows: Vec<Vec<f64>> = kept
        .iter()
        .map(|c| {
            let norm = l2_norm(&c.vector);
            c.vector.iter().map(|v| v / norm).collect()
        })
        .collect();
    let v1 = principal_direction(&rows)?;

    // Step 6: resolve the sign on the substitute and scale to the budget.
    let amplitude = p_power.sqrt();
    let plus: Vec<f64> = v1.iter().map(|v| v * amplitude).collect();
    let minus: Vec<f64> = plus.iter().map(|v| -v).collect();
    let bler_plus = shifted_attack_bler(model, &plus, sigma2, config.screening_trials, sign_seed)?;
    let bler_minus =
        shifted_attack_bler(model, &minus, sigma2, config.screening_trials, sign_seed)?;
    let chosen = if bler_minus > bler_plus { minus } else { plus };

    Perturbation::new(chosen, p_power, make_provenance(false))
}

/// First right singular vector of the matrix whose rows are `rows`,
/// normalized to unit length. The sign is whatever the decomposition
/// returns; callers that care must resolve it themselves.
pub fn principal_direction(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let Some(width) = rows.first().map(Vec::len) else {
        return Err(Error::Argument("need at least one row".into()));
    };
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::Argument("rows must have equal lengths".into()));
    }
    let flat: Vec<f64> = rows.iter().flatten().cloned().collect();
    let matrix = DMatrix::from_row_slice(rows.len(), width, &flat);
    let svd = matrix.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut top = 0;
    for i in 1..svd.singular_values.len() {
        if svd.singular_values[i] > svd.singular_values[top] {
            top = i;
        }
    }
    let v1: Vec<f64> = v_t.row(top).iter().cloned().collect();
    let norm = l2_norm(&v1);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Numeric("singular vector is degenerate".into()));
    }
    Ok(v1.iter().map(|v| v / norm).collect())
}

/// Packages a perturbation crafted on a substitute model into a black-box
/// evaluation scenario against `target`. The target is only ever invoked
/// through its decoder, so no gradient access occurs anywhere downstream.
pub fn transfer_attack(
    perturbation: &Perturbation,
    target: SystemUnderTest,
    channel: ChannelConfig,
    shift: ShiftPolicy,
    trials: u64,
    seed: u64,
    id: impl Into<String>,
) -> Result<Scenario> {
    if perturbation.signal_len() != channel.signal_len() {
        return Err(Error::Argument(format!(
            "perturbation length {} does not match channel dimension {}",
            perturbation.signal_len(),
            channel.signal_len()
        )));
    }
    let psr_db = 10.0 * (perturbation.p_power / channel.signal_power()).log10();
    Scenario::new(
        id,
        target,
        AttackModel::fixed("transfer", perturbation.clone()),
        shift,
        channel,
        Some(psr_db),
        trials,
        seed,
    )
}

#[cfg(test)]
mod tests;
