//! TOML run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use risorch_core::codebook::{CompileOptions, Smoothing};
use risorch_core::evaluation::{Correlation, ExperimentConfig};
use risorch_core::field::{AxisSpec, GridSpec};
use risorch_core::orchestrator::{
    AdmissionPolicy, AllocParams, EEParams, OffElementRule, TierTable, TIER_COUNT,
};
use risorch_core::scene::{Neighborhood, PanelSpec, SceneConfig, Wall, SPEED_OF_LIGHT};
use risorch_core::Vec3;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: Box<toml::de::Error>,
    },
    #[error("{0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

/// Reflectivity for every wall, or per wall by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reflectivity {
    Uniform(f64),
    PerWall(BTreeMap<String, f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelFile {
    pub wall: String,
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
}

/// `[scene]`; omitted keys take the desk defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room_side: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    /// Absolute position (m).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_position: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_direction: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_beam_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_angle_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_strength: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_reflectivity: Option<Reflectivity>,
    /// Pitch in meters; defaults to a quarter wavelength.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighborhood: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panels: Option<Vec<PanelFile>>,
}

impl SceneFile {
    pub fn to_scene(&self) -> Result<SceneConfig, ConfigError> {
        let mut s = SceneConfig::desk();
        if let Some(l) = self.room_side {
            s.room_side = l;
            // keep the default transmitter at the same relative position
            s.tx_position = Vec3::new(0.2 * l, 0.25 * l, 0.5 * l);
        }
        if let Some(f) = self.frequency {
            s.frequency = f;
        }
        s.element_spacing = self
            .element_spacing
            .unwrap_or(SPEED_OF_LIGHT / s.frequency / 4.0);
        if let Some(p) = self.tx_position {
            s.tx_position = Vec3::from_array(p);
        }
        if let Some(u) = self.tx_direction {
            let u = Vec3::from_array(u);
            let n = u.norm();
            if !(n > 0.0 && n.is_finite()) {
                return invalid("scene.tx_direction must be a non-zero vector");
            }
            s.tx_direction = u.scale(1.0 / n);
        }
        if let Some(m) = self.tx_beam_exponent {
            s.tx_beam_exponent = m;
        }
        if let Some(p) = self.element_angle_exponent {
            s.element_angle_exponent = p;
        }
        if let Some(a) = self.coupling_strength {
            s.coupling_strength = a;
        }
        match &self.wall_reflectivity {
            None => {}
            Some(Reflectivity::Uniform(b)) => s.wall_reflectivity = [*b; 6],
            Some(Reflectivity::PerWall(map)) => {
                for (name, b) in map {
                    let Some(w) = Wall::from_name(name) else {
                        return invalid(format!("unknown wall {name:?} in scene.wall_reflectivity"));
                    };
                    s.wall_reflectivity[w.index()] = *b;
                }
            }
        }
        if let Some(n) = self.neighborhood {
            s.neighborhood = Neighborhood::from_count(n)
                .ok_or_else(|| ConfigError::Invalid(format!("scene.neighborhood must be 4 or 8, got {n}")))?;
        }
        if let Some(panels) = &self.panels {
            s.panels = panels
                .iter()
                .map(|p| {
                    let wall = Wall::from_name(&p.wall).ok_or_else(|| {
                        ConfigError::Invalid(format!("unknown wall {:?} in scene.panels", p.wall))
                    })?;
                    Ok(PanelSpec {
                        wall,
                        rows: p.rows,
                        cols: p.cols,
                        center: p.center,
                    })
                })
                .collect::<Result<_, ConfigError>>()?;
        }
        if let Err(e) = s.validate() {
            return invalid(format!("scene: {e}"));
        }
        Ok(s)
    }

    /// Fully explicit form of `scene`.
    pub fn from_scene(s: &SceneConfig) -> Self {
        let walls = Wall::ALL
            .iter()
            .map(|w| (w.name().to_string(), s.wall_reflectivity[w.index()]))
            .collect();
        Self {
            room_side: Some(s.room_side),
            frequency: Some(s.frequency),
            tx_position: Some(s.tx_position.to_array()),
            tx_direction: Some(s.tx_direction.to_array()),
            tx_beam_exponent: Some(s.tx_beam_exponent),
            element_angle_exponent: Some(s.element_angle_exponent),
            coupling_strength: Some(s.coupling_strength),
            wall_reflectivity: Some(Reflectivity::PerWall(walls)),
            element_spacing: Some(s.element_spacing),
            neighborhood: Some(s.neighborhood.count()),
            panels: Some(
                s.panels
                    .iter()
                    .map(|p| PanelFile {
                        wall: p.wall.name().to_string(),
                        rows: p.rows,
                        cols: p.cols,
                        center: p.center,
                    })
                    .collect(),
            ),
        }
    }
}

/// `[min, max, count]` or a single fixed value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisFile {
    Fixed(f64),
    Range(f64, f64, usize),
}

impl AxisFile {
    pub fn to_axis(self) -> AxisSpec {
        match self {
            AxisFile::Fixed(v) => AxisSpec::fixed(v),
            AxisFile::Range(min, max, count) => AxisSpec { min, max, count },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub x: AxisFile,
    pub y: AxisFile,
    pub z: AxisFile,
}

impl GridFile {
    pub fn to_grid(&self) -> GridSpec {
        GridSpec {
            x: self.x.to_axis(),
            y: self.y.to_axis(),
            z: self.z.to_axis(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomLocations {
    pub count: usize,
    pub seed: u64,
    /// Box corners (m); default keeps 15% of the room side from every wall.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<[f64; 3]>,
}

/// `[codebook]`: exactly one of `locations`, `grid`, `random`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodebookFile {
    /// Codebook directory; relative paths resolve against the output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_rounds: Option<usize>,
    /// `"box3x3"` or `"none"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locations: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomLocations>,
}

impl CodebookFile {
    pub fn options(&self) -> Result<CompileOptions, ConfigError> {
        let mut o = CompileOptions::default();
        if let Some(r) = self.outer_rounds {
            o.outer_rounds = r;
        }
        o.smoothing = match self.smoothing.as_deref() {
            None | Some("box3x3") => Smoothing::Box3x3,
            Some("none") => Smoothing::Identity,
            Some(other) => return invalid(format!("codebook.smoothing: unknown kernel {other:?}")),
        };
        Ok(o)
    }

    pub fn locations(&self, scene: &SceneConfig) -> Result<Vec<Vec3>, ConfigError> {
        let given = [
            self.locations.is_some(),
            self.grid.is_some(),
            self.random.is_some(),
        ];
        if given.iter().filter(|g| **g).count() != 1 {
            return invalid("codebook: specify exactly one of `locations`, `grid`, `random`");
        }
        let points: Vec<Vec3> = if let Some(list) = &self.locations {
            list.iter().map(|p| Vec3::from_array(*p)).collect()
        } else if let Some(grid) = &self.grid {
            let g = grid.to_grid();
            if g.is_empty() {
                return invalid("codebook.grid has an empty axis");
            }
            g.points().collect()
        } else {
            let r = self.random.as_ref().expect("checked above");
            let l = scene.room_side;
            let lo = r.min.unwrap_or([0.15 * l; 3]);
            let hi = r.max.unwrap_or([0.85 * l; 3]);
            if (0..3).any(|i| !(lo[i] < hi[i])) {
                return invalid("codebook.random: min must be below max on every axis");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
            (0..r.count)
                .map(|_| {
                    Vec3::new(
                        rng.gen_range(lo[0]..hi[0]),
                        rng.gen_range(lo[1]..hi[1]),
                        rng.gen_range(lo[2]..hi[2]),
                    )
                })
                .collect()
        };
        if points.is_empty() {
            return invalid("codebook: no locations");
        }
        if let Some(p) = points.iter().find(|p| !scene.contains_strictly(**p)) {
            return invalid(format!(
                "codebook: location ({}, {}, {}) is not strictly inside the room",
                p.x, p.y, p.z
            ));
        }
        Ok(points)
    }
}

/// A scalar applied to every tier or one value per tier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerTier {
    All(f64),
    Each([f64; TIER_COUNT]),
}

impl PerTier {
    fn expand(self) -> [f64; TIER_COUNT] {
        match self {
            PerTier::All(x) => [x; TIER_COUNT],
            PerTier::Each(v) => v,
        }
    }
}

/// `[experiment]`; omitted keys take the defaults of [`ExperimentConfig`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payment: Option<[f64; TIER_COUNT]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub influence_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_off: Option<f64>,
    /// Phase tolerance per tier as a fraction of 2 pi.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<PerTier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub select_fraction: Option<PerTier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accept_fraction: Option<PerTier>,
    /// `"mismatch"` or `"exclude"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub off_elements: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admission_energy_off: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier_baselines_db: Option<[f64; TIER_COUNT]>,
    /// `"pearson"` or `"spearman"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<String>,
}

impl ExperimentFile {
    pub fn to_config(&self) -> Result<ExperimentConfig, ConfigError> {
        let d = ExperimentConfig::default();
        let a = AllocParams::default();
        let p = AdmissionPolicy::default();
        let cfg = ExperimentConfig {
            seed: self.seed.unwrap_or(d.seed),
            realizations: self.realizations.unwrap_or(d.realizations),
            user_counts: self.user_counts.clone().unwrap_or(d.user_counts),
            bits: self.bits.clone().unwrap_or(d.bits),
            alloc: AllocParams {
                tau_low: self.tau_low.unwrap_or(a.tau_low),
                tau_high: self.tau_high.unwrap_or(a.tau_high),
                tier_exponent: self.tier_exponent.unwrap_or(a.tier_exponent),
                influence_exponent: self.influence_exponent.unwrap_or(a.influence_exponent),
                epsilon: self.epsilon.unwrap_or(a.epsilon),
                bits: a.bits,
            },
            ee: EEParams {
                tau_off: self.tau_off.unwrap_or(EEParams::default().tau_off),
            },
            admission: AdmissionPolicy {
                tolerance: self.tolerance.map_or(p.tolerance, PerTier::expand),
                select_fraction: self.select_fraction.map_or(p.select_fraction, PerTier::expand),
                accept_fraction: self.accept_fraction.map_or(p.accept_fraction, PerTier::expand),
                off_elements: match self.off_elements.as_deref() {
                    None | Some("mismatch") => OffElementRule::MaximalMismatch,
                    Some("exclude") => OffElementRule::Exclude,
                    Some(other) => {
                        return invalid(format!("experiment.off_elements: unknown rule {other:?}"))
                    }
                },
            },
            admission_energy_off: self.admission_energy_off.unwrap_or(d.admission_energy_off),
            tiers: self.payment.map_or(d.tiers, |payment| TierTable { payment }),
            tier_baselines_db: self.tier_baselines_db.unwrap_or(d.tier_baselines_db),
            correlation: match self.correlation.as_deref() {
                None | Some("pearson") => Correlation::Pearson,
                Some("spearman") => Correlation::Spearman,
                Some(other) => {
                    return invalid(format!("experiment.correlation: unknown estimator {other:?}"))
                }
            },
        };
        if let Err(e) = cfg.validate() {
            return invalid(format!("experiment: {e}"));
        }
        Ok(cfg)
    }
}

/// `[snrmap]`: the state to deploy and the observation grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrMapFile {
    /// `"entry"`, `"alloc"` or `"dark"`.
    pub source: String,
    /// Codebook entry for `source = "entry"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<usize>,
    /// `[entry, tier]` pairs for `source = "alloc"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub users: Option<Vec<(usize, u8)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_off: Option<bool>,
    pub x: AxisFile,
    pub y: AxisFile,
    pub z: AxisFile,
}

impl SnrMapFile {
    pub fn grid(&self) -> GridSpec {
        GridSpec {
            x: self.x.to_axis(),
            y: self.y.to_axis(),
            z: self.z.to_axis(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    /// Relative paths resolve against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default = "empty_scene")]
    pub scene: SceneFile,
    pub codebook: CodebookFile,
    #[serde(default)]
    pub experiment: ExperimentFile,
    #[serde(default)]
    pub output: OutputFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snrmap: Option<SnrMapFile>,
}

fn empty_scene() -> SceneFile {
    toml::from_str("").expect("every scene key is optional")
}

/// A parsed, validated configuration plus its source text.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub file: RunFile,
    pub text: String,
    /// Directory the config was read from.
    pub base: PathBuf,
    pub scene: SceneConfig,
    pub experiment: ExperimentConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        Self::parse(&text, base).map_err(|e| match e {
            ConfigError::Parse { source, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    pub fn parse(text: &str, base: PathBuf) -> Result<Self, ConfigError> {
        let file: RunFile = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<config>"),
            source: Box::new(e),
        })?;
        let scene = file.scene.to_scene()?;
        let experiment = file.experiment.to_config()?;
        file.codebook.options()?;
        Ok(Self {
            file,
            text: text.to_string(),
            base,
            scene,
            experiment,
        })
    }

    pub fn locations(&self) -> Result<Vec<Vec3>, ConfigError> {
        self.file.codebook.locations(&self.scene)
    }

    pub fn compile_options(&self) -> CompileOptions {
        self.file.codebook.options().expect("validated at load")
    }

    /// `override_dir` (from the command line) wins over `[output] dir`.
    pub fn output_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        match (override_dir, &self.file.output.dir) {
            (Some(d), _) => d.to_path_buf(),
            (None, Some(d)) => self.base.join(d),
            (None, None) => self.base.join("out"),
        }
    }

    pub fn codebook_dir(&self, out: &Path, override_dir: Option<&Path>) -> PathBuf {
        match (override_dir, &self.file.codebook.dir) {
            (Some(d), _) => d.to_path_buf(),
            (None, Some(d)) => out.join(d),
            (None, None) => out.join("codebook"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[codebook]
locations = [[0.5, 0.6, 0.7]]
"#;

    #[test]
    fn minimal_config_is_desk() {
        let c = RunConfig::parse(MINIMAL, PathBuf::from("/cfg")).unwrap();
        assert_eq!(c.scene, SceneConfig::desk());
        assert_eq!(c.experiment, ExperimentConfig::default());
        assert_eq!(c.locations().unwrap(), vec![Vec3::new(0.5, 0.6, 0.7)]);
        assert_eq!(c.output_dir(None), PathBuf::from("/cfg/out"));
        assert_eq!(
            c.codebook_dir(Path::new("/o"), None),
            PathBuf::from("/o/codebook")
        );
    }

    #[test]
    fn exactly_one_location_source() {
        let text = r#"
[codebook]
locations = [[0.5, 0.6, 0.7]]
random = { count = 3, seed = 1 }
"#;
        let c = RunConfig::parse(text, PathBuf::new()).unwrap();
        assert!(c.locations().is_err());
        let c = RunConfig::parse("[codebook]\n", PathBuf::new()).unwrap();
        assert!(c.locations().is_err());
    }

    #[test]
    fn random_locations_are_seeded_and_inside() {
        let text = "[codebook]\nrandom = { count = 50, seed = 42 }\n";
        let c = RunConfig::parse(text, PathBuf::new()).unwrap();
        let a = c.locations().unwrap();
        assert_eq!(a, c.locations().unwrap());
        assert_eq!(a.len(), 50);
        let l = c.scene.room_side;
        assert!(a
            .iter()
            .all(|p| p.to_array().iter().all(|v| *v >= 0.15 * l && *v < 0.85 * l)));
    }

    #[test]
    fn grid_locations() {
        let text = "[codebook]\ngrid = { x = [0.5, 1.0, 2], y = [0.5, 1.0, 3], z = 0.75 }\n";
        let c = RunConfig::parse(text, PathBuf::new()).unwrap();
        assert_eq!(c.locations().unwrap().len(), 6);
    }

    #[test]
    fn scene_overrides() {
        let text = r#"
[scene]
frequency = 3.0e9
coupling_strength = 0.0
wall_reflectivity = { z_min = 0.0 }
neighborhood = 8
panels = [{ wall = "y_max", rows = 2, cols = 3, center = [0.5, 0.6] }]

[codebook]
locations = [[0.5, 0.6, 0.7]]

[experiment]
bits = [2]
tolerance = 1.0
off_elements = "exclude"
"#;
        let c = RunConfig::parse(text, PathBuf::new()).unwrap();
        assert_eq!(c.scene.frequency, 3.0e9);
        assert!((c.scene.element_spacing - SPEED_OF_LIGHT / 3.0e9 / 4.0).abs() < 1e-15);
        assert_eq!(c.scene.wall_reflectivity[Wall::ZMin.index()], 0.0);
        assert_eq!(c.scene.wall_reflectivity[Wall::ZMax.index()], 0.6);
        assert_eq!(c.scene.neighborhood, Neighborhood::Eight);
        assert_eq!(c.scene.panels[0].wall, Wall::YMax);
        assert_eq!(c.experiment.bits, vec![2]);
        assert_eq!(c.experiment.admission.tolerance, [1.0; 5]);
        assert_eq!(c.experiment.admission.off_elements, OffElementRule::Exclude);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "[codebook]\nlocations = [[0.5, 0.6, 0.7]]\n[scene]\nbogus = 1\n",
            "[codebook]\nlocations = [[0.5, 0.6, 0.7]]\n[scene]\nneighborhood = 6\n",
            "[codebook]\nlocations = [[0.5, 0.6, 0.7]]\n[experiment]\nrealizations = 0\n",
            "[codebook]\nlocations = [[0.5, 0.6, 0.7]]\n[experiment]\ncorrelation = \"kendall\"\n",
            "[codebook]\nlocations = [[0.5, 0.6, 0.7]]\nsmoothing = \"gauss\"\n",
        ] {
            assert!(RunConfig::parse(text, PathBuf::new()).is_err(), "{text}");
        }
        let outside = "[codebook]\nlocations = [[0.0, 0.6, 0.7]]\n";
        assert!(RunConfig::parse(outside, PathBuf::new()).unwrap().locations().is_err());
    }

    #[test]
    fn scene_echo_round_trips() {
        let scene = SceneConfig::desk();
        let text = toml::to_string(&SceneFile::from_scene(&scene)).unwrap();
        let back: SceneFile = toml::from_str(&text).unwrap();
        assert_eq!(back.to_scene().unwrap(), scene);
    }
}
