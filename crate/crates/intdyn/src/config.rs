//! Scenario files: a strict TOML schema and its conversion into domain types.
//!
//! Every table rejects unknown keys, so typos surface as configuration errors
//! with the offending field path rather than silently-ignored settings.
//! Numeric fields accept TOML integers and floats interchangeably; float
//! values round-trip bit-exactly through serialization.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Exosystem, GainSet, LmiRegion, Plant, TimeExpr};
use crate::sim::NoiseSpec;

/// Raw file-level schema. Field names match the TOML keys exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub exosystems: Vec<ExosystemBlock>,
    pub plant: PlantBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<GainsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<SynthesisBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimBlock>,
}

/// One forcing channel: `ẇ = S w`, `ξ = Eᵀ w`, `w(0) = w0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExosystemBlock {
    #[serde(rename = "S")]
    pub s: Vec<Vec<f64>>,
    #[serde(rename = "E")]
    pub e: Vec<f64>,
    pub w0: Vec<f64>,
}

/// The forced system: either a constant matrix `A` or a grid of time
/// expressions `A_expr` (with the frozen design matrix `frozen_A`), plus one
/// input vector per forcing channel in `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantBlock {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(rename = "A_expr", default, skip_serializing_if = "Option::is_none")]
    pub a_expr: Option<Vec<Vec<String>>>,
    #[serde(rename = "frozen_A", default, skip_serializing_if = "Option::is_none")]
    pub frozen_a: Option<Vec<Vec<f64>>>,
    #[serde(rename = "N")]
    pub n: Vec<Vec<f64>>,
}

/// Generator gains in block form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsBlock {
    #[serde(rename = "L11")]
    pub l11: Vec<f64>,
    #[serde(rename = "L12")]
    pub l12: Vec<f64>,
    #[serde(rename = "L21")]
    pub l21: Vec<f64>,
    #[serde(rename = "L22")]
    pub l22: Vec<f64>,
    #[serde(rename = "L3")]
    pub l3: f64,
}

/// Pole region: intersection of an optional vertical strip
/// `strip = [hmin, hmax]` and an optional symmetric conic sector with the
/// given inner angle (radians) opening into the left half-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector_inner_angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip: Option<[f64; 2]>,
}

/// Synthesis budgets and search parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisBlock {
    pub gamma0: f64,
    pub nu0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub budget: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability_margin: Option<f64>,
}

/// Simulation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseBlock>,
}

/// Forcing disturbance: `kind` is "none", "sinusoid" (amplitude, frequency
/// in rad/s, optional phase), or "uniform" (amplitude, optional seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

impl NoiseBlock {
    pub fn to_spec(&self) -> Result<NoiseSpec> {
        let require = |field: Option<f64>, name: &str| {
            field.ok_or_else(|| {
                Error::Config(format!(
                    "noise kind \"{}\" requires the field `{}`",
                    self.kind, name
                ))
            })
        };
        match self.kind.as_str() {
            "none" => Ok(NoiseSpec::None),
            "sinusoid" => Ok(NoiseSpec::Sinusoid {
                amplitude: require(self.amplitude, "amplitude")?,
                frequency: require(self.frequency, "frequency")?,
                phase: self.phase.unwrap_or(0.0),
            }),
            "uniform" => Ok(NoiseSpec::Uniform {
                amplitude: require(self.amplitude, "amplitude")?,
                seed: self.seed.unwrap_or(0),
            }),
            other => Err(Error::Config(format!(
                "unknown noise kind \"{other}\" (expected \"none\", \"sinusoid\", or \"uniform\")"
            ))),
        }
    }
}

impl RegionBlock {
    pub fn to_region(&self) -> Result<LmiRegion> {
        let mut members = Vec::new();
        if let Some([hmin, hmax]) = self.strip {
            members.push(LmiRegion::strip(hmin, hmax)?);
        }
        if let Some(angle) = self.sector_inner_angle {
            members.push(LmiRegion::conic_sector(angle)?);
        }
        if members.is_empty() {
            return Err(Error::Config(
                "region must define `strip`, `sector_inner_angle`, or both".to_string(),
            ));
        }
        LmiRegion::intersection(members)
    }
}

/// A parsed, converted scenario ready for the domain layer. Synthesis and
/// simulation settings stay in block form — they parameterize commands, not
/// models.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub exosystems: Vec<Exosystem>,
    pub plant: Plant,
    pub gains: Option<GainSet>,
    pub region: Option<LmiRegion>,
    pub synthesis: Option<SynthesisBlock>,
    pub sim: Option<SimBlock>,
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::Config(format!("{what} must not be empty")));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config(format!(
            "{what} must be rectangular with nonempty rows"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl Scenario {
    pub fn from_file_struct(file: &ScenarioFile) -> Result<Self> {
        let mut exosystems = Vec::with_capacity(file.exosystems.len());
        for (k, block) in file.exosystems.iter().enumerate() {
            let s = matrix_from_rows(&block.s, &format!("exosystems[{k}].S"))?;
            exosystems.push(Exosystem::new(
                s,
                DVector::from_vec(block.e.clone()),
                DVector::from_vec(block.w0.clone()),
            )?);
        }

        let n_list: Vec<DVector<f64>> = file
            .plant
            .n
            .iter()
            .map(|row| DVector::from_vec(row.clone()))
            .collect();
        let plant = match (&file.plant.a, &file.plant.a_expr) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "plant defines both `A` and `A_expr`; use exactly one".to_string(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "plant must define `A` (constant) or `A_expr` (time-varying)".to_string(),
                ))
            }
            (Some(a_rows), None) => {
                let a = matrix_from_rows(a_rows, "plant.A")?;
                if let Some(frozen_rows) = &file.plant.frozen_a {
                    let frozen = matrix_from_rows(frozen_rows, "plant.frozen_A")?;
                    if frozen.shape() != a.shape()
                        || (&frozen - &a).amax() > crate::model::VALIDATION_ABS_TOL
                    {
                        return Err(Error::Config(
                            "plant.frozen_A must equal plant.A when A is constant".to_string(),
                        ));
                    }
                }
                Plant::constant(a, n_list)?
            }
            (None, Some(expr_rows)) => {
                let entries: Vec<Vec<TimeExpr>> = expr_rows
                    .iter()
                    .map(|row| row.iter().map(|text| TimeExpr::parse(text)).collect())
                    .collect::<Result<_>>()?;
                let frozen_rows = file.plant.frozen_a.as_ref().ok_or_else(|| {
                    Error::Config(
                        "a time-varying plant (`A_expr`) requires `frozen_A`".to_string(),
                    )
                })?;
                let frozen = matrix_from_rows(frozen_rows, "plant.frozen_A")?;
                Plant::time_varying(entries, frozen, n_list)?
            }
        };

        let gains = match &file.gains {
            Some(g) => Some(GainSet {
                l11: DVector::from_vec(g.l11.clone()),
                l12: DVector::from_vec(g.l12.clone()),
                l21: DVector::from_vec(g.l21.clone()),
                l22: DVector::from_vec(g.l22.clone()),
                l3: g.l3,
            }),
            None => None,
        };
        let region = file.region.as_ref().map(RegionBlock::to_region).transpose()?;

        Ok(Scenario {
            exosystems,
            plant,
            gains,
            region,
            synthesis: file.synthesis.clone(),
            sim: file.sim.clone(),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_file_struct(&ScenarioFile::parse(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Build the synthesis spec from the scenario's region and synthesis
    /// blocks. Errors when either block is missing.
    pub fn synthesis_spec(&self) -> Result<crate::synthesis::SynthesisSpec> {
        let block = self.synthesis.as_ref().ok_or_else(|| {
            Error::Config("this command needs a [synthesis] block in the scenario".to_string())
        })?;
        let region = self.region.clone().ok_or_else(|| {
            Error::Config("this command needs a [region] block in the scenario".to_string())
        })?;
        let spec = crate::synthesis::SynthesisSpec {
            gamma0: block.gamma0,
            nu0: block.nu0,
            alpha: block.alpha,
            beta: block.beta,
            region,
            budget: block.budget,
            seed: block.seed,
            stability_margin: block
                .stability_margin
                .unwrap_or(crate::synthesis::SynthesisSpec::DEFAULT_STABILITY_MARGIN),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Noise settings from the sim block (no block or no noise means none).
    pub fn noise_spec(&self) -> Result<NoiseSpec> {
        match self.sim.as_ref().and_then(|sim| sim.noise.as_ref()) {
            Some(block) => block.to_spec(),
            None => Ok(NoiseSpec::None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"
[[exosystems]]
S = [[0.0, 1.0], [-1.0, 0.0]]
E = [1.0, 0.0]
w0 = [1.0, 1.0]

[plant]
A = [[0.0]]
N = [[1.0]]
"#;

    #[test]
    fn minimal_scenario_parses() {
        let scenario = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(scenario.exosystems.len(), 1);
        assert_eq!(scenario.plant.n(), 1);
        assert!(scenario.gains.is_none());
        assert!(matches!(scenario.noise_spec(), Ok(NoiseSpec::None)));
    }

    #[test]
    fn integers_deserialize_into_float_fields() {
        let text = MINIMAL.replace("[[0.0]]", "[[0]]");
        let scenario = Scenario::parse(&text).unwrap();
        assert_eq!(scenario.plant.frozen_a[(0, 0)], 0.0);
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_name() {
        let text = format!("{MINIMAL}\n[sim]\ndt = 0.01\nhorizon = 1.0\nstep_count = 7\n");
        match Scenario::parse(&text) {
            Err(Error::Config(msg)) => assert!(msg.contains("step_count"), "message: {msg}"),
            other => panic!("expected Config error, got {other:?}"),
        }
    }

    #[test]
    fn type_errors_carry_the_field_path() {
        let text = MINIMAL.replace("w0 = [1.0, 1.0]", "w0 = \"ones\"");
        match Scenario::parse(&text) {
            Err(Error::Config(msg)) => assert!(msg.contains("w0"), "message: {msg}"),
            other => panic!("expected Config error, got {other:?}"),
        }
    }

    #[test]
    fn plant_matrix_forms_are_mutually_exclusive() {
        let both = MINIMAL.replace(
            "A = [[0.0]]",
            "A = [[0.0]]\nA_expr = [[\"sin(t)\"]]\nfrozen_A = [[0.0]]",
        );
        assert!(matches!(Scenario::parse(&both), Err(Error::Config(_))));

        let neither = MINIMAL.replace("A = [[0.0]]\n", "");
        assert!(matches!(Scenario::parse(&neither), Err(Error::Config(_))));

        let tv_without_frozen = MINIMAL.replace("A = [[0.0]]", "A_expr = [[\"sin(t)\"]]");
        match Scenario::parse(&tv_without_frozen) {
            Err(Error::Config(msg)) => assert!(msg.contains("frozen_A")),
            other => panic!("expected Config error, got {other:?}"),
        }
    }

    #[test]
    fn frozen_matrix_must_match_constant_plant() {
        let text = MINIMAL.replace("A = [[0.0]]", "A = [[0.0]]\nfrozen_A = [[0.5]]");
        assert!(matches!(Scenario::parse(&text), Err(Error::Config(_))));
        let consistent = MINIMAL.replace("A = [[0.0]]", "A = [[0.0]]\nfrozen_A = [[0.0]]");
        assert!(Scenario::parse(&consistent).is_ok());
    }

    #[test]
    fn noise_blocks_convert_and_validate() {
        let sinusoid = NoiseBlock {
            kind: "sinusoid".to_string(),
            amplitude: Some(0.1),
            frequency: Some(0.0),
            phase: Some(1.5),
            seed: None,
        };
        assert_eq!(
            sinusoid.to_spec().unwrap(),
            NoiseSpec::Sinusoid {
                amplitude: 0.1,
                frequency: 0.0,
                phase: 1.5
            }
        );
        let missing = NoiseBlock {
            kind: "uniform".to_string(),
            amplitude: None,
            frequency: None,
            phase: None,
            seed: Some(1),
        };
        match missing.to_spec() {
            Err(Error::Config(msg)) => assert!(msg.contains("amplitude")),
            other => panic!("expected Config error, got {other:?}"),
        }
        let unknown = NoiseBlock {
            kind: "spikes".to_string(),
            amplitude: Some(1.0),
            frequency: None,
            phase: None,
            seed: None,
        };
        assert!(matches!(unknown.to_spec(), Err(Error::Config(_))));
    }

    #[test]
    fn region_block_requires_some_constraint() {
        let empty = RegionBlock {
            sector_inner_angle: None,
            strip: None,
        };
        assert!(matches!(empty.to_region(), Err(Error::Config(_))));
        let strip_only = RegionBlock {
            sector_inner_angle: None,
            strip: Some([-10.0, -1.0]),
        };
        assert_eq!(strip_only.to_region().unwrap().real_interval(), (-10.0, -1.0));
    }

    #[test]
    fn missing_synthesis_block_is_a_config_error() {
        let scenario = Scenario::parse(MINIMAL).unwrap();
        match scenario.synthesis_spec() {
            Err(Error::Config(msg)) => assert!(msg.contains("synthesis")),
            other => panic!("expected Config error, got {other:?}"),
        }
    }

    proptest! {
        /// Serialized scenarios reparse to bit-identical structures, floats
        /// included.
        #[test]
        fn file_round_trip_is_bit_exact(
            s00 in proptest::num::f64::NORMAL,
            e0 in proptest::num::f64::NORMAL,
            w00 in proptest::num::f64::NORMAL,
            a00 in proptest::num::f64::NORMAL,
            n0 in proptest::num::f64::NORMAL,
            dt in 1e-6..1e-1f64,
            horizon in 1.0..100.0f64,
        ) {
            let file = ScenarioFile {
                exosystems: vec![ExosystemBlock {
                    s: vec![vec![s00]],
                    e: vec![e0],
                    w0: vec![w00],
                }],
                plant: PlantBlock {
                    a: Some(vec![vec![a00]]),
                    a_expr: None,
                    frozen_a: None,
                    n: vec![vec![n0]],
                },
                gains: None,
                region: Some(RegionBlock {
                    sector_inner_angle: Some(2.356194490192345),
                    strip: Some([-10.0, -1.0]),
                }),
                synthesis: None,
                sim: Some(SimBlock { dt, horizon, noise: None }),
            };
            let text = file.to_toml().unwrap();
            let back = ScenarioFile::parse(&text).unwrap();
            prop_assert_eq!(back, file);
        }
    }
}
