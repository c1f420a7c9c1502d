//! Operating-phase decisions over compiled codebook entries.
//!
//! - [`allocate`]: per-element weighted majority vote over the users'
//!   quantized focusing states. Each vote is weighted by the user's payment
//!   factor and, on elements where some user has high influence, by that
//!   user's own influence on the element.
//! - [`allocate_baseline`]: the same vote with payment factors only.
//! - [`apply_energy_off`]: switches off elements that no active user relies on.
//! - [`admit`]: phase-compatibility gate for a candidate user.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::codebook::CodebookEntry;
use crate::field::RisState;
use crate::math::{wrap_phase, PI, TAU};

pub use crate::math::wrap_phase as wrap;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrchestratorError {
    #[error("no users to allocate")]
    NoUsers,
    #[error("{entries} entries but {tiers} tiers")]
    TierCount { entries: usize, tiers: usize },
    #[error("user {index} has {got} elements, expected {expected}")]
    ElementCount {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("invalid parameter: {0}")]
    Parameter(&'static str),
    #[error("tier {0} outside 1..=5")]
    Tier(u8),
}

pub const TIER_COUNT: usize = 5;

/// Service class (1 = premium) with its voting payment factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tier {
    index: u8,
    payment: f64,
}

impl Tier {
    pub fn new(index: u8, payment: f64) -> Result<Self, OrchestratorError> {
        if !(1..=TIER_COUNT as u8).contains(&index) {
            return Err(OrchestratorError::Tier(index));
        }
        if !(payment > 0.0 && payment.is_finite()) {
            return Err(OrchestratorError::Parameter("payment factor must be positive"));
        }
        Ok(Self { index, payment })
    }

    pub fn index(&self) -> u8 {
        self.index
    }

    pub fn payment(&self) -> f64 {
        self.payment
    }
}

/// Payment factor per tier, tiers 1..=5.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TierTable {
    pub payment: [f64; TIER_COUNT],
}

impl Default for TierTable {
    fn default() -> Self {
        Self {
            payment: [5.0, 4.0, 3.0, 2.0, 1.0],
        }
    }
}

impl TierTable {
    pub fn tier(&self, index: u8) -> Result<Tier, OrchestratorError> {
        if !(1..=TIER_COUNT as u8).contains(&index) {
            return Err(OrchestratorError::Tier(index));
        }
        Tier::new(index, self.payment[index as usize - 1])
    }
}

/// Voting knobs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AllocParams {
    pub tau_low: f64,
    pub tau_high: f64,
    /// Exponent on the payment factor.
    pub tier_exponent: f64,
    /// Exponent on `(epsilon + v)`.
    pub influence_exponent: f64,
    pub epsilon: f64,
    /// Phase resolution; `2^bits` states per element.
    pub bits: u8,
}

impl Default for AllocParams {
    fn default() -> Self {
        Self {
            tau_low: 0.3,
            tau_high: 0.8,
            tier_exponent: 1.0,
            influence_exponent: 1.5,
            epsilon: 1e-3,
            bits: 1,
        }
    }
}

impl AllocParams {
    pub fn with_bits(self, bits: u8) -> Self {
        Self { bits, ..self }
    }

    pub fn levels(&self) -> usize {
        1usize << self.bits
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        if !(0.0..=1.0).contains(&self.tau_low)
            || !(0.0..=1.0).contains(&self.tau_high)
            || self.tau_low >= self.tau_high
        {
            return Err(OrchestratorError::Parameter(
                "thresholds must satisfy 0 <= tau_low < tau_high <= 1",
            ));
        }
        if !(self.tier_exponent >= 0.0 && self.influence_exponent >= 0.0) {
            return Err(OrchestratorError::Parameter("exponents must be non-negative"));
        }
        if !(self.epsilon > 0.0) {
            return Err(OrchestratorError::Parameter("epsilon must be positive"));
        }
        if !(1..=4).contains(&self.bits) {
            return Err(OrchestratorError::Parameter("bits must be in 1..=4"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EEParams {
    pub tau_off: f64,
}

impl Default for EEParams {
    fn default() -> Self {
        Self { tau_off: 0.25 }
    }
}

/// How switched-off elements enter the admission test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OffElementRule {
    /// An off element cannot serve the candidate: mismatch `pi`.
    #[default]
    MaximalMismatch,
    /// Off elements are not eligible for the top-influence subset.
    Exclude,
}

/// Per-tier admission thresholds, indexed by tier - 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissionPolicy {
    /// Phase tolerance as a fraction of `2 pi`.
    pub tolerance: [f64; TIER_COUNT],
    /// Fraction of elements forming the top-influence subset.
    pub select_fraction: [f64; TIER_COUNT],
    /// Fraction of the subset that must match.
    pub accept_fraction: [f64; TIER_COUNT],
    pub off_elements: OffElementRule,
}

impl Default for AdmissionPolicy {
    fn default() -> Self {
        Self {
            tolerance: [0.15, 0.25, 0.30, 0.45, 0.60],
            select_fraction: [0.10; TIER_COUNT],
            accept_fraction: [0.10; TIER_COUNT],
            off_elements: OffElementRule::MaximalMismatch,
        }
    }
}

impl AdmissionPolicy {
    pub fn uniform_tolerance(x: f64) -> Self {
        Self {
            tolerance: [x; TIER_COUNT],
            ..Self::default()
        }
    }
}

/// The state deployed to serve every active user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommonConfig {
    levels: usize,
    states: Vec<u16>,
    on: Vec<bool>,
}

impl CommonConfig {
    pub fn new(levels: usize, states: Vec<u16>, on: Vec<bool>) -> Self {
        assert_eq!(states.len(), on.len());
        debug_assert!(states.iter().all(|s| (*s as usize) < levels));
        Self { levels, states, on }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn states(&self) -> &[u16] {
        &self.states
    }

    pub fn is_on(&self, n: usize) -> bool {
        self.on[n]
    }

    pub fn on_flags(&self) -> &[bool] {
        &self.on
    }

    pub fn off_count(&self) -> usize {
        self.on.iter().filter(|o| !**o).count()
    }

    /// Phase induced by element `n`'s state index.
    pub fn phase(&self, n: usize) -> f64 {
        level_phase(self.states[n] as usize, self.levels)
    }

    pub fn to_state(&self) -> RisState {
        RisState::new(
            self.on.clone(),
            (0..self.len()).map(|n| self.phase(n)).collect(),
        )
    }
}

/// Phase of quantization level `s` out of `levels`, wrapped to `[-pi, pi)`.
pub fn level_phase(s: usize, levels: usize) -> f64 {
    wrap_phase(TAU * s as f64 / levels as f64)
}

/// Nearest level `2 pi s / levels` in circular distance; exact midpoints go to
/// the lower index.
pub fn quantize_phase(phi: f64, levels: usize) -> usize {
    debug_assert!(levels >= 2);
    let w = wrap_phase(phi);
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for s in 0..levels {
        let dist = wrap_phase(w - TAU * s as f64 / levels as f64).abs();
        if dist < best_dist {
            best = s;
            best_dist = dist;
        }
    }
    best
}

pub fn quantize_phases(phases: &[f64], levels: usize) -> Vec<u16> {
    phases
        .iter()
        .map(|p| quantize_phase(*p, levels) as u16)
        .collect()
}

/// Ramp from pure payment-factor voting (0) to influence-weighted voting (1).
pub fn blending_factor(max_influence: f64, tau_low: f64, tau_high: f64) -> f64 {
    if max_influence <= tau_low {
        0.0
    } else if max_influence >= tau_high {
        1.0
    } else {
        (max_influence - tau_low) / (tau_high - tau_low)
    }
}

/// `(1 - eta) PF^a + eta PF^a (eps + v)^b`
pub fn vote_weight(
    payment: f64,
    tier_exponent: f64,
    influence_exponent: f64,
    epsilon: f64,
    eta: f64,
    influence: f64,
) -> f64 {
    let base = libm::pow(payment, tier_exponent);
    (1.0 - eta) * base + eta * base * libm::pow(epsilon + influence, influence_exponent)
}

fn check_users(entries: &[&CodebookEntry], tiers: &[Tier]) -> Result<usize, OrchestratorError> {
    if entries.is_empty() {
        return Err(OrchestratorError::NoUsers);
    }
    if entries.len() != tiers.len() {
        return Err(OrchestratorError::TierCount {
            entries: entries.len(),
            tiers: tiers.len(),
        });
    }
    let n = entries[0].len();
    for (index, e) in entries.iter().enumerate() {
        for got in [e.phases.len(), e.influence.len()] {
            if got != n {
                return Err(OrchestratorError::ElementCount {
                    index,
                    expected: n,
                    got,
                });
            }
        }
    }
    Ok(n)
}

fn vote(
    entries: &[&CodebookEntry],
    tiers: &[Tier],
    params: &AllocParams,
    influence_aware: bool,
) -> Result<CommonConfig, OrchestratorError> {
    params.validate()?;
    let n_elements = check_users(entries, tiers)?;
    let levels = params.levels();
    let quantized: Vec<Vec<u16>> = entries
        .iter()
        .map(|e| quantize_phases(&e.phases, levels))
        .collect();

    let mut states = Vec::with_capacity(n_elements);
    let mut ballots: Vec<(u16, f64)> = Vec::with_capacity(entries.len());
    let mut scores = vec![0.0f64; levels];
    for n in 0..n_elements {
        let eta = if influence_aware {
            let max_v = entries.iter().map(|e| e.influence[n]).fold(0.0, f64::max);
            blending_factor(max_v, params.tau_low, params.tau_high)
        } else {
            0.0
        };
        ballots.clear();
        for ((e, q), tier) in entries.iter().zip(&quantized).zip(tiers) {
            let w = vote_weight(
                tier.payment(),
                params.tier_exponent,
                params.influence_exponent,
                params.epsilon,
                eta,
                e.influence[n],
            );
            ballots.push((q[n], w));
        }
        // canonical summation order keeps the tally independent of user order
        ballots.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        scores.iter_mut().for_each(|s| *s = 0.0);
        for (s, w) in &ballots {
            scores[*s as usize] += w;
        }
        let mut best = 0usize;
        for s in 1..levels {
            if scores[s] > scores[best] {
                best = s;
            }
        }
        states.push(best as u16);
    }
    Ok(CommonConfig::new(levels, states, vec![true; n_elements]))
}

/// Influence-aware weighted majority vote; every element on.
pub fn allocate(
    entries: &[&CodebookEntry],
    tiers: &[Tier],
    params: &AllocParams,
) -> Result<CommonConfig, OrchestratorError> {
    vote(entries, tiers, params, true)
}

/// Payment-factor-only vote (blending factor forced to zero everywhere).
pub fn allocate_baseline(
    entries: &[&CodebookEntry],
    tiers: &[Tier],
    params: &AllocParams,
) -> Result<CommonConfig, OrchestratorError> {
    vote(entries, tiers, params, false)
}

/// Switches off every element whose maximum influence across users is below
/// `tau_off`. On elements keep their state index.
pub fn apply_energy_off(
    cc: &CommonConfig,
    influences: &[&[f64]],
    ee: &EEParams,
) -> Result<CommonConfig, OrchestratorError> {
    for (index, v) in influences.iter().enumerate() {
        if v.len() != cc.len() {
            return Err(OrchestratorError::ElementCount {
                index,
                expected: cc.len(),
                got: v.len(),
            });
        }
    }
    let mut out = cc.clone();
    for n in 0..cc.len() {
        let max_v = influences.iter().map(|v| v[n]).fold(0.0, f64::max);
        if max_v < ee.tau_off {
            out.on[n] = false;
        }
    }
    Ok(out)
}

/// `ceil(fraction * n)`, tolerant of representation error in the product.
pub fn ceil_fraction(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    libm::ceil(x - 1e-9 * x.max(1.0)) as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissionDecision {
    pub admitted: bool,
    /// `|T|`
    pub selected: usize,
    /// Elements of `T` within tolerance.
    pub matched: usize,
    /// Matches needed for admission.
    pub required: usize,
    /// `(element, mismatch)` for every element of `T`, in rank order.
    pub mismatches: Vec<(usize, f64)>,
}

pub fn admit(
    cc: &CommonConfig,
    candidate: &CodebookEntry,
    tier: Tier,
    policy: &AdmissionPolicy,
) -> Result<AdmissionDecision, OrchestratorError> {
    let n = cc.len();
    for got in [candidate.phases.len(), candidate.influence.len()] {
        if got != n {
            return Err(OrchestratorError::ElementCount {
                index: 0,
                expected: n,
                got,
            });
        }
    }
    let t = tier.index() as usize - 1;
    let tolerance = policy.tolerance[t] * TAU;

    let mut ranked: Vec<usize> = match policy.off_elements {
        OffElementRule::MaximalMismatch => (0..n).collect(),
        OffElementRule::Exclude => (0..n).filter(|i| cc.is_on(*i)).collect(),
    };
    ranked.sort_by(|a, b| {
        candidate.influence[*b]
            .total_cmp(&candidate.influence[*a])
            .then(a.cmp(b))
    });
    let subset = ceil_fraction(policy.select_fraction[t], ranked.len()).min(ranked.len());
    ranked.truncate(subset);

    let mismatches: Vec<(usize, f64)> = ranked
        .iter()
        .map(|&i| {
            let d = if cc.is_on(i) {
                wrap_phase(cc.phase(i) - candidate.phases[i]).abs()
            } else {
                PI
            };
            (i, d)
        })
        .collect();
    let matched = mismatches.iter().filter(|(_, d)| *d <= tolerance).count();
    let required = ceil_fraction(policy.accept_fraction[t], subset);
    Ok(AdmissionDecision {
        admitted: matched >= required,
        selected: subset,
        matched,
        required,
        mismatches,
    })
}
