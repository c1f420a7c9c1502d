//! Seeded Monte Carlo experiments over a compiled codebook.
//!
//! Every realization owns a ChaCha8 stream: the cell seed is derived from the
//! run seed and the user count, and the stream id is the realization index.
//! Draws are therefore shared across bit resolutions and across experiments
//! (comparisons are paired), and results do not depend on how realizations
//! are scheduled.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::codebook::{Codebook, CodebookEntry, CodebookError};
use crate::fanout::Fanout;
use crate::field::{snr_db, total_field, FieldError, IncidentSolver, RisState};
use crate::geometry::RisGeometry;
use crate::math::Vec3;
use crate::orchestrator::{
    admit, allocate, allocate_baseline, apply_energy_off, AdmissionPolicy, AllocParams,
    CommonConfig, EEParams, OrchestratorError, Tier, TierTable, TIER_COUNT,
};
use crate::scene::SceneConfig;
use crate::stats::{pearson, spearman, Summary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("cannot draw {requested} distinct users from {available} codebook entries")]
    NotEnoughEntries { requested: usize, available: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Orchestrator(#[from] OrchestratorError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Codebook(#[from] CodebookError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid experiment: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Orchestrator(#[from] OrchestratorError),
    #[error("{experiment} realization {index} (K={users}, bits={bits}): {source}")]
    Realization {
        experiment: &'static str,
        users: usize,
        bits: u8,
        index: usize,
        #[source]
        source: StepError,
    },
}

/// One active user of a realization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UserDraw {
    pub entry: usize,
    /// Tier index, 1..=5.
    pub tier: u8,
    pub user: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Correlation {
    #[default]
    Pearson,
    Spearman,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub realizations: usize,
    pub user_counts: Vec<usize>,
    pub bits: Vec<u8>,
    /// `bits` inside is overridden per cell.
    pub alloc: AllocParams,
    pub ee: EEParams,
    pub admission: AdmissionPolicy,
    /// Switch elements off before testing a candidate.
    pub admission_energy_off: bool,
    pub tiers: TierTable,
    /// Reference losses per tier (dB), echoed into the admission report.
    pub tier_baselines_db: [f64; TIER_COUNT],
    pub correlation: Correlation,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            realizations: 200,
            user_counts: vec![4, 6, 8, 10, 12, 14, 16, 18],
            bits: vec![1, 2, 3, 4],
            alloc: AllocParams::default(),
            ee: EEParams::default(),
            admission: AdmissionPolicy::default(),
            admission_energy_off: true,
            tiers: TierTable::default(),
            tier_baselines_db: [7.81, 10.35, 13.48, 17.00, 19.92],
            correlation: Correlation::Pearson,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.realizations == 0 {
            return Err(EvalError::Config("realizations must be at least 1"));
        }
        if self.user_counts.is_empty() || self.user_counts.contains(&0) {
            return Err(EvalError::Config("user counts must be non-empty and at least 1"));
        }
        if self.bits.is_empty() {
            return Err(EvalError::Config("bits list must be non-empty"));
        }
        for &b in &self.bits {
            self.alloc.with_bits(b).validate()?;
        }
        if !(self.ee.tau_off >= 0.0) {
            return Err(EvalError::Config("tau_off must be non-negative"));
        }
        let p = &self.admission;
        let fractions_ok = p
            .tolerance
            .iter()
            .chain(&p.select_fraction)
            .chain(&p.accept_fraction)
            .all(|x| (0.0..=1.0).contains(x));
        if !fractions_ok {
            return Err(EvalError::Config("admission fractions must lie in [0, 1]"));
        }
        for t in 1..=TIER_COUNT as u8 {
            self.tiers.tier(t)?;
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for realization `realization` of the `users`-user cell.
pub fn realization_rng(seed: u64, users: usize, realization: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(users as u64)));
    rng.set_stream(realization as u64);
    rng
}

/// `users` distinct entries drawn uniformly, each with a uniform tier.
pub fn sample_realization<R: Rng + ?Sized>(
    rng: &mut R,
    codebook: &Codebook,
    users: usize,
) -> Result<Vec<UserDraw>, SampleError> {
    if users > codebook.len() {
        return Err(SampleError::NotEnoughEntries {
            requested: users,
            available: codebook.len(),
        });
    }
    let picks = index::sample(rng, codebook.len(), users);
    Ok(picks
        .into_iter()
        .enumerate()
        .map(|(user, entry)| UserDraw {
            entry,
            tier: rng.gen_range(1..=TIER_COUNT as u8),
            user,
        })
        .collect())
}

/// One more user whose entry differs from every drawn one.
pub fn sample_candidate<R: Rng + ?Sized>(
    rng: &mut R,
    codebook: &Codebook,
    drawn: &[UserDraw],
) -> Result<UserDraw, SampleError> {
    let available = codebook.len().saturating_sub(drawn.len());
    if available == 0 {
        return Err(SampleError::NotEnoughEntries {
            requested: drawn.len() + 1,
            available: codebook.len(),
        });
    }
    let mut taken: Vec<usize> = drawn.iter().map(|d| d.entry).collect();
    taken.sort_unstable();
    let mut entry = rng.gen_range(0..available);
    for t in taken {
        if t <= entry {
            entry += 1;
        }
    }
    Ok(UserDraw {
        entry,
        tier: rng.gen_range(1..=TIER_COUNT as u8),
        user: drawn.len(),
    })
}

/// SNR (dB) at `location` once `cc` is deployed, with the incident field
/// re-solved under that configuration.
pub fn achieved_snr(
    scene: &SceneConfig,
    geometry: &RisGeometry,
    cc: &CommonConfig,
    location: Vec3,
) -> Result<f64, FieldError> {
    let solver = IncidentSolver::new(scene, geometry)?;
    Ok(achieved_snrs(&solver, &cc.to_state(), &[location])?[0])
}

/// SNR (dB) at every location under `state`, sharing one solve.
pub fn achieved_snrs(
    solver: &IncidentSolver<'_>,
    state: &RisState,
    locations: &[Vec3],
) -> Result<Vec<f64>, FieldError> {
    let solution = solver.solve(state)?;
    locations
        .iter()
        .map(|r| Ok(snr_db(total_field(solver.geometry(), state, &solution.field, *r)?)))
        .collect()
}

pub fn snr_loss(entry: &CodebookEntry, achieved: f64) -> f64 {
    entry.optimal_snr - achieved
}

/// Correlation between tier index and loss; `None` when degenerate.
pub fn tier_consistency(tiers: &[u8], losses: &[f64], method: Correlation) -> Option<f64> {
    if tiers.len() < 2 || tiers.len() != losses.len() {
        return None;
    }
    let t: Vec<f64> = tiers.iter().map(|t| *t as f64).collect();
    let r = match method {
        Correlation::Pearson => pearson(&t, losses),
        Correlation::Spearman => spearman(&t, losses),
    }?;
    Some(r.clamp(-1.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Physics,
    Baseline,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Physics, Method::Baseline];

    pub fn name(self) -> &'static str {
        match self {
            Method::Physics => "physics",
            Method::Baseline => "baseline",
        }
    }
}

/// Shared state for running realizations against one codebook.
pub struct Evaluator<'a> {
    codebook: &'a Codebook,
    solver: IncidentSolver<'a>,
    config: &'a ExperimentConfig,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        scene: &SceneConfig,
        geometry: &'a RisGeometry,
        codebook: &'a Codebook,
        config: &'a ExperimentConfig,
    ) -> Result<Self, EvalError> {
        config.validate()?;
        codebook.validate()?;
        codebook.check_scene(scene, geometry)?;
        let solver = IncidentSolver::new(scene, geometry)?;
        Ok(Self {
            codebook,
            solver,
            config,
        })
    }

    pub fn codebook(&self) -> &Codebook {
        self.codebook
    }

    pub fn config(&self) -> &ExperimentConfig {
        self.config
    }

    pub fn solver(&self) -> &IncidentSolver<'a> {
        &self.solver
    }

    fn tiers(&self, draws: &[UserDraw]) -> Result<Vec<Tier>, OrchestratorError> {
        draws.iter().map(|d| self.config.tiers.tier(d.tier)).collect()
    }

    fn entries(&self, draws: &[UserDraw]) -> Vec<&'a CodebookEntry> {
        draws.iter().map(|d| &self.codebook.entries[d.entry]).collect()
    }

    /// Per-user losses under `cc`.
    pub fn losses(&self, cc: &CommonConfig, draws: &[UserDraw]) -> Result<Vec<f64>, FieldError> {
        let entries = self.entries(draws);
        let locations: Vec<Vec3> = entries.iter().map(|e| e.location).collect();
        let achieved = achieved_snrs(&self.solver, &cc.to_state(), &locations)?;
        Ok(entries
            .iter()
            .zip(achieved)
            .map(|(e, a)| snr_loss(e, a))
            .collect())
    }

    pub fn alloc_realization(
        &self,
        users: usize,
        bits: u8,
        realization: usize,
    ) -> Result<AllocRealization, StepError> {
        let mut rng = realization_rng(self.config.seed, users, realization);
        let draws = sample_realization(&mut rng, self.codebook, users)?;
        let tiers = self.tiers(&draws)?;
        let entries = self.entries(&draws);
        let params = self.config.alloc.with_bits(bits);
        let tier_idx: Vec<u8> = draws.iter().map(|d| d.tier).collect();
        let mut losses = [Vec::new(), Vec::new()];
        let mut correlation = [None, None];
        for (slot, method) in Method::ALL.into_iter().enumerate() {
            let cc = match method {
                Method::Physics => allocate(&entries, &tiers, &params)?,
                Method::Baseline => allocate_baseline(&entries, &tiers, &params)?,
            };
            losses[slot] = self.losses(&cc, &draws)?;
            correlation[slot] = tier_consistency(&tier_idx, &losses[slot], self.config.correlation);
        }
        Ok(AllocRealization {
            tiers: tier_idx,
            losses,
            correlation,
        })
    }

    pub fn ee_realization(
        &self,
        users: usize,
        bits: u8,
        realization: usize,
    ) -> Result<EeRealization, StepError> {
        let mut rng = realization_rng(self.config.seed, users, realization);
        let draws = sample_realization(&mut rng, self.codebook, users)?;
        let tiers = self.tiers(&draws)?;
        let entries = self.entries(&draws);
        let cc = allocate(&entries, &tiers, &self.config.alloc.with_bits(bits))?;
        let influences: Vec<&[f64]> = entries.iter().map(|e| e.influence.as_slice()).collect();
        let ee_cc = apply_energy_off(&cc, &influences, &self.config.ee)?;
        let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
        Ok(EeRealization {
            off_fraction: ee_cc.off_count() as f64 / ee_cc.len() as f64,
            loss_with: mean(self.losses(&ee_cc, &draws)?),
            loss_without: mean(self.losses(&cc, &draws)?),
        })
    }

    pub fn admission_realization(
        &self,
        users: usize,
        bits: u8,
        realization: usize,
    ) -> Result<AdmissionRealization, StepError> {
        let mut rng = realization_rng(self.config.seed, users, realization);
        let draws = sample_realization(&mut rng, self.codebook, users)?;
        let candidate = sample_candidate(&mut rng, self.codebook, &draws)?;
        let tiers = self.tiers(&draws)?;
        let entries = self.entries(&draws);
        let mut cc = allocate(&entries, &tiers, &self.config.alloc.with_bits(bits))?;
        if self.config.admission_energy_off {
            let influences: Vec<&[f64]> =
                entries.iter().map(|e| e.influence.as_slice()).collect();
            cc = apply_energy_off(&cc, &influences, &self.config.ee)?;
        }
        let entry = &self.codebook.entries[candidate.entry];
        let tier = self.config.tiers.tier(candidate.tier)?;
        let decision = admit(&cc, entry, tier, &self.config.admission)?;
        let loss = self.losses(&cc, &[candidate])?[0];
        Ok(AdmissionRealization {
            tier: candidate.tier,
            admitted: decision.admitted,
            loss,
        })
    }

    fn cells(&self) -> Vec<(usize, u8)> {
        let mut cells = Vec::new();
        for &k in &self.config.user_counts {
            for &b in &self.config.bits {
                cells.push((k, b));
            }
        }
        cells
    }

    /// Runs `step` for every (cell, realization) and returns results grouped
    /// by cell, in realization order.
    fn sweep<T, X, S>(
        &self,
        experiment: &'static str,
        fanout: &X,
        step: S,
    ) -> Result<Vec<((usize, u8), Vec<T>)>, EvalError>
    where
        T: Send,
        X: Fanout,
        S: Fn(&Self, usize, u8, usize) -> Result<T, StepError> + Sync + Send,
        Self: Sync,
    {
        let cells = self.cells();
        let r = self.config.realizations;
        let results = fanout.map(cells.len() * r, |i| {
            let (users, bits) = cells[i / r];
            step(self, users, bits, i % r)
        });
        let mut out: Vec<((usize, u8), Vec<T>)> =
            cells.iter().map(|c| (*c, Vec::with_capacity(r))).collect();
        for (i, res) in results.into_iter().enumerate() {
            let (users, bits) = cells[i / r];
            let value = res.map_err(|source| EvalError::Realization {
                experiment,
                users,
                bits,
                index: i % r,
                source,
            })?;
            out[i / r].1.push(value);
        }
        Ok(out)
    }

    pub fn run_allocation<X: Fanout>(&self, fanout: &X) -> Result<Vec<AllocCell>, EvalError> {
        let grouped = self.sweep("alloc", fanout, |e, k, b, r| e.alloc_realization(k, b, r))?;
        let mut cells = Vec::new();
        for ((users, bits), runs) in grouped {
            for (slot, method) in Method::ALL.into_iter().enumerate() {
                let mut cell = AllocCell::new(method, users, bits);
                for run in &runs {
                    for (t, loss) in run.tiers.iter().zip(&run.losses[slot]) {
                        cell.tier_loss[*t as usize - 1].push(*loss);
                    }
                    match run.correlation[slot] {
                        Some(c) => cell.correlation.push(c),
                        None => cell.skipped += 1,
                    }
                }
                cells.push(cell);
            }
        }
        Ok(cells)
    }

    pub fn run_energy<X: Fanout>(&self, fanout: &X) -> Result<Vec<EeCell>, EvalError> {
        let grouped = self.sweep("ee", fanout, |e, k, b, r| e.ee_realization(k, b, r))?;
        Ok(grouped
            .into_iter()
            .map(|((users, bits), runs)| EeCell {
                users,
                bits,
                off_fraction: runs.iter().map(|r| r.off_fraction).collect(),
                loss_with: runs.iter().map(|r| r.loss_with).collect(),
                loss_without: runs.iter().map(|r| r.loss_without).collect(),
            })
            .collect())
    }

    pub fn run_admission<X: Fanout>(&self, fanout: &X) -> Result<Vec<AdmissionTier>, EvalError> {
        let grouped = self.sweep("admission", fanout, |e, k, b, r| {
            e.admission_realization(k, b, r)
        })?;
        let mut tiers: Vec<AdmissionTier> = (1..=TIER_COUNT as u8)
            .map(|t| AdmissionTier {
                tier: t,
                accepted: Summary::new(),
                rejected: Summary::new(),
                baseline_db: self.config.tier_baselines_db[t as usize - 1],
            })
            .collect();
        for (_, runs) in grouped {
            for run in runs {
                let slot = &mut tiers[run.tier as usize - 1];
                if run.admitted {
                    slot.accepted.push(run.loss);
                } else {
                    slot.rejected.push(run.loss);
                }
            }
        }
        Ok(tiers)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AllocRealization {
    pub tiers: Vec<u8>,
    /// Indexed like [`Method::ALL`].
    pub losses: [Vec<f64>; 2],
    pub correlation: [Option<f64>; 2],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EeRealization {
    pub off_fraction: f64,
    pub loss_with: f64,
    pub loss_without: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissionRealization {
    pub tier: u8,
    pub admitted: bool,
    pub loss: f64,
}

/// Allocation aggregates for one (method, K, bits) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct AllocCell {
    pub method: Method,
    pub users: usize,
    pub bits: u8,
    pub tier_loss: [Summary; TIER_COUNT],
    pub correlation: Summary,
    /// Realizations without a defined correlation.
    pub skipped: usize,
}

impl AllocCell {
    fn new(method: Method, users: usize, bits: u8) -> Self {
        Self {
            method,
            users,
            bits,
            tier_loss: [Summary::new(); TIER_COUNT],
            correlation: Summary::new(),
            skipped: 0,
        }
    }
}

/// Energy-saving aggregates for one (K, bits) cell; losses are paired.
#[derive(Clone, Debug, PartialEq)]
pub struct EeCell {
    pub users: usize,
    pub bits: u8,
    pub off_fraction: Summary,
    pub loss_with: Summary,
    pub loss_without: Summary,
}

/// Admission outcomes for candidates of one tier, pooled over all cells.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissionTier {
    pub tier: u8,
    pub accepted: Summary,
    pub rejected: Summary,
    pub baseline_db: f64,
}

impl AdmissionTier {
    pub fn total(&self) -> u64 {
        self.accepted.count() + self.rejected.count()
    }

    pub fn ratio(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.accepted.count() as f64 / total as f64)
    }
}

/// Mean loss per tier over the given cells, pooling every sample.
pub fn pooled_tier_loss<'c>(
    cells: impl IntoIterator<Item = &'c AllocCell>,
) -> [Summary; TIER_COUNT] {
    let mut out = [Summary::new(); TIER_COUNT];
    for cell in cells {
        for (acc, s) in out.iter_mut().zip(&cell.tier_loss) {
            acc.merge(s);
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub alloc: Option<Vec<AllocCell>>,
    pub ee: Option<Vec<EeCell>>,
    pub admission: Option<Vec<AdmissionTier>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{compile_codebook, CompileOptions};
    use crate::fanout::Serial;
    use crate::geometry::build_geometry;
    use crate::scene::{PanelSpec, Wall};
    use alloc::string::String;

    fn dummy_codebook(n: usize) -> Codebook {
        Codebook {
            fingerprint: String::new(),
            version: String::new(),
            element_count: 0,
            entries: (0..n)
                .map(|i| CodebookEntry {
                    location: Vec3::new(i as f64, 0.0, 0.0),
                    phases: Vec::new(),
                    influence: Vec::new(),
                    optimal_snr: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn full_draw_is_permutation() {
        let cb = dummy_codebook(17);
        let mut rng = realization_rng(3, 17, 0);
        let draws = sample_realization(&mut rng, &cb, 17).unwrap();
        let mut e: Vec<usize> = draws.iter().map(|d| d.entry).collect();
        e.sort_unstable();
        assert_eq!(e, (0..17).collect::<Vec<_>>());
        assert!(draws.iter().all(|d| (1..=5).contains(&d.tier)));
        assert!(draws.iter().enumerate().all(|(i, d)| d.user == i));
    }

    #[test]
    fn draws_are_reproducible_and_seed_dependent() {
        let cb = dummy_codebook(50);
        let run = |seed| {
            (0..100)
                .map(|r| sample_realization(&mut realization_rng(seed, 5, r), &cb, 5).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn too_many_users() {
        let cb = dummy_codebook(3);
        let err = sample_realization(&mut realization_rng(0, 4, 0), &cb, 4).unwrap_err();
        assert_eq!(
            err,
            SampleError::NotEnoughEntries {
                requested: 4,
                available: 3
            }
        );
    }

    #[test]
    fn candidate_is_fresh() {
        let cb = dummy_codebook(6);
        for r in 0..200 {
            let mut rng = realization_rng(11, 5, r);
            let draws = sample_realization(&mut rng, &cb, 5).unwrap();
            let c = sample_candidate(&mut rng, &cb, &draws).unwrap();
            assert!(c.entry < 6);
            assert!(draws.iter().all(|d| d.entry != c.entry));
        }
        let all = sample_realization(&mut realization_rng(0, 6, 0), &cb, 6).unwrap();
        assert!(sample_candidate(&mut realization_rng(0, 6, 0), &cb, &all).is_err());
    }

    #[test]
    fn consistency_examples() {
        let p = Correlation::Pearson;
        assert!((tier_consistency(&[1, 2, 3, 5], &[1.0, 2.0, 3.0, 4.0], p).unwrap() - 0.9827076298239907).abs() < 1e-12);
        assert_eq!(tier_consistency(&[1, 2, 3], &[3.0, 6.0, 9.0], p), Some(1.0));
        assert_eq!(tier_consistency(&[1, 2, 3], &[9.0, 6.0, 3.0], p), Some(-1.0));
        assert_eq!(tier_consistency(&[1, 2, 3], &[5.0, 5.0, 5.0], p), None);
        assert_eq!(tier_consistency(&[2, 2], &[1.0, 5.0], p), None);
        assert_eq!(tier_consistency(&[2], &[1.0], p), None);
        assert_eq!(
            tier_consistency(&[1, 2, 3], &[1.0, 2.0, 30.0], Correlation::Spearman),
            Some(1.0)
        );
    }

    #[test]
    fn loss_is_difference() {
        let mut e = dummy_codebook(1).entries.remove(0);
        e.optimal_snr = 20.0;
        assert_eq!(snr_loss(&e, 20.0), 0.0);
        assert_eq!(snr_loss(&e, 17.0), 3.0);
    }

    fn small_scene() -> SceneConfig {
        let mut s = SceneConfig::with_panels(vec![
            PanelSpec::centered(Wall::XMin, 4, 4),
            PanelSpec::centered(Wall::YMax, 4, 4),
        ]);
        s.coupling_strength = 0.0;
        s
    }

    #[test]
    fn self_optimum_and_dark_surface() {
        let scene = small_scene();
        let g = build_geometry(&scene).unwrap();
        let loc = Vec3::new(0.6, 0.9, 0.7);
        let cb = compile_codebook(&scene, &[loc], &CompileOptions::default(), &Serial).unwrap();
        let e = &cb.entries[0];
        let solver = IncidentSolver::new(&scene, &g).unwrap();
        let a = achieved_snrs(&solver, &e.state(), &[loc]).unwrap()[0];
        assert!((a - e.optimal_snr).abs() < 1e-9);

        let dark = CommonConfig::new(2, vec![0; g.len()], vec![false; g.len()]);
        assert_eq!(achieved_snr(&scene, &g, &dark, loc).unwrap(), -300.0);

        let quant = crate::orchestrator::quantize_phases(&e.phases, 2);
        let cc = CommonConfig::new(2, quant, vec![true; g.len()]);
        assert!(achieved_snr(&scene, &g, &cc, loc).unwrap() <= e.optimal_snr);
    }

    fn small_setup() -> (SceneConfig, RisGeometry, Codebook) {
        let scene = small_scene();
        let g = build_geometry(&scene).unwrap();
        let locs: Vec<Vec3> = (0..8)
            .map(|i| Vec3::new(0.3 + 0.1 * i as f64, 0.4 + 0.05 * i as f64, 0.75))
            .collect();
        let cb = compile_codebook(&scene, &locs, &CompileOptions::default(), &Serial).unwrap();
        (scene, g, cb)
    }

    #[test]
    fn single_user_cell() {
        let (scene, g, cb) = small_setup();
        let cfg = ExperimentConfig {
            realizations: 1,
            user_counts: vec![1],
            bits: vec![1, 2],
            ..ExperimentConfig::default()
        };
        let ev = Evaluator::new(&scene, &g, &cb, &cfg).unwrap();
        let cells = ev.run_allocation(&Serial).unwrap();
        assert_eq!(cells.len(), 4);
        for cell in &cells {
            assert!(cell.correlation.is_empty());
            assert_eq!(cell.skipped, 1);
            let n: u64 = cell.tier_loss.iter().map(|s| s.count()).sum();
            assert_eq!(n, 1);
        }
    }

    #[test]
    fn energy_off_extremes() {
        let (scene, g, cb) = small_setup();
        let mut cfg = ExperimentConfig {
            realizations: 3,
            user_counts: vec![3],
            bits: vec![1],
            ..ExperimentConfig::default()
        };
        cfg.ee.tau_off = 0.0;
        let cells = Evaluator::new(&scene, &g, &cb, &cfg).unwrap().run_energy(&Serial).unwrap();
        assert_eq!(cells[0].off_fraction.max(), Some(0.0));
        assert_eq!(cells[0].loss_with, cells[0].loss_without);

        cfg.ee.tau_off = 1.0 + 1e-9;
        let cells = Evaluator::new(&scene, &g, &cb, &cfg).unwrap().run_energy(&Serial).unwrap();
        assert_eq!(cells[0].off_fraction.min(), Some(1.0));
        for r in 0..3 {
            let ev = Evaluator::new(&scene, &g, &cb, &cfg).unwrap();
            let draws = sample_realization(&mut realization_rng(cfg.seed, 3, r), &cb, 3).unwrap();
            let expect: f64 = draws.iter().map(|d| cb.entries[d.entry].optimal_snr + 300.0).sum::<f64>() / 3.0;
            let got = ev.ee_realization(3, 1, r).unwrap().loss_with;
            assert!((got - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn vacuous_tolerance_admits_everyone() {
        let (scene, g, cb) = small_setup();
        let cfg = ExperimentConfig {
            realizations: 20,
            user_counts: vec![2, 3],
            bits: vec![1],
            admission: AdmissionPolicy::uniform_tolerance(1.0),
            ..ExperimentConfig::default()
        };
        let tiers = Evaluator::new(&scene, &g, &cb, &cfg)
            .unwrap()
            .run_admission(&Serial)
            .unwrap();
        let total: u64 = tiers.iter().map(|t| t.total()).sum();
        assert_eq!(total, 40);
        for t in &tiers {
            assert!(t.rejected.is_empty());
            if t.total() > 0 {
                assert_eq!(t.ratio(), Some(1.0));
            }
        }
    }

    #[test]
    fn rejects_foreign_codebook() {
        let (scene, g, mut cb) = small_setup();
        cb.fingerprint = String::from("00");
        let cfg = ExperimentConfig::default();
        assert!(matches!(
            Evaluator::new(&scene, &g, &cb, &cfg),
            Err(EvalError::Codebook(CodebookError::FingerprintMismatch { .. }))
        ));
    }

    #[test]
    fn config_guards() {
        let bad = ExperimentConfig {
            realizations: 0,
            ..ExperimentConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig {
            user_counts: vec![0],
            ..ExperimentConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }
}
