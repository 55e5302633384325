//! JSON persistence for trained disambiguators.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::burn::{BurnModel, BurnParams, GatingTable, InferenceConfig, GATE_BINS};
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::linear::{LinearModel, LinearParams};
use crate::train::TrainConfig;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InferenceKind {
    Greedy,
    Burn,
}

impl InferenceKind {
    pub fn name(self) -> &'static str {
        match self {
            InferenceKind::Greedy => "greedy",
            InferenceKind::Burn => "burn",
        }
    }
}

impl fmt::Display for InferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(InferenceKind::Greedy),
            "burn" => Ok(InferenceKind::Burn),
            other => Err(Error::InvalidArgument(format!("unknown inference mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Settings a model was trained and is meant to run with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainManifest {
    #[serde(flatten)]
    pub train: TrainConfig,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub context_window: usize,
}

impl TrainManifest {
    pub fn new(train: TrainConfig, inference: InferenceConfig) -> Self {
        TrainManifest {
            train,
            max_iterations: inference.max_iterations,
            convergence_tol: inference.convergence_tol,
            context_window: inference.context_window,
        }
    }

    pub fn inference(&self) -> Result<InferenceConfig> {
        InferenceConfig::new(self.max_iterations, self.convergence_tol, self.context_window)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub inference: InferenceKind,
    pub feature_set: FeatureSet,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub leaky_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gating: Option<Vec<f64>>,
    pub weights: BTreeMap<String, Tensor>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub train_config: Option<TrainManifest>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedModel {
    Linear(LinearModel),
    Burn(BurnModel),
}

fn tensor(shape: Vec<usize>, data: &[f64]) -> Tensor {
    Tensor {
        shape,
        data: data.to_vec(),
    }
}

impl ModelFile {
    pub fn from_linear(model: &LinearModel, feature_set: FeatureSet, train_config: Option<TrainManifest>) -> Self {
        let p = &model.params;
        let mut weights = BTreeMap::new();
        weights.insert("W_l".to_string(), tensor(vec![p.w_local.len()], &p.w_local));
        weights.insert("W_g".to_string(), tensor(vec![p.w_pair.len()], &p.w_pair));
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            inference: InferenceKind::Greedy,
            feature_set,
            h: None,
            leaky_slope: None,
            gating: None,
            weights,
            train_config,
        }
    }

    pub fn from_burn(model: &BurnModel, feature_set: FeatureSet, train_config: Option<TrainManifest>) -> Self {
        let p = &model.params;
        let (d_l, d_g, h) = (p.d_l, p.d_g, p.hidden);
        let mut weights = BTreeMap::new();
        weights.insert("W_l1".to_string(), tensor(vec![d_l, h], &p.w_l1));
        weights.insert("W_l2".to_string(), tensor(vec![h], &p.w_l2));
        weights.insert("W_l3".to_string(), tensor(vec![d_l], &p.w_l3));
        weights.insert("W_g1".to_string(), tensor(vec![d_g, h], &p.w_g1));
        weights.insert("W_g2".to_string(), tensor(vec![h], &p.w_g2));
        weights.insert("W_g3".to_string(), tensor(vec![d_g], &p.w_g3));
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            inference: InferenceKind::Burn,
            feature_set,
            h: Some(h),
            leaky_slope: Some(p.leaky_slope),
            gating: Some(p.gating.values.clone()),
            weights,
            train_config,
        }
    }

    fn weight(&self, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
        let t = self
            .weights
            .get(name)
            .ok_or_else(|| Error::Model(format!("missing weight {name}")))?;
        if t.shape != shape {
            return Err(Error::Model(format!(
                "weight {name} has shape {:?}, expected {:?}",
                t.shape, shape
            )));
        }
        let expected: usize = shape.iter().product();
        if t.data.len() != expected {
            return Err(Error::Model(format!(
                "weight {name} holds {} values, shape needs {expected}",
                t.data.len()
            )));
        }
        if t.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Model(format!("weight {name} has non-finite entries")));
        }
        Ok(t.data.clone())
    }

    pub fn into_model(&self) -> Result<LoadedModel> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format version {}",
                self.format_version
            )));
        }
        let d_l = self.feature_set.unary_dim();
        let d_g = self.feature_set.binary_dim();
        match self.inference {
            InferenceKind::Greedy => Ok(LoadedModel::Linear(LinearModel::new(LinearParams {
                w_local: self.weight("W_l", &[d_l])?,
                w_pair: self.weight("W_g", &[d_g])?,
            }))),
            InferenceKind::Burn => {
                let h = self.h.ok_or_else(|| Error::Model("missing h".into()))?;
                let leaky_slope = self.leaky_slope.ok_or_else(|| Error::Model("missing leaky_slope".into()))?;
                let gating = self.gating.clone().ok_or_else(|| Error::Model("missing gating".into()))?;
                if gating.len() != GATE_BINS || gating.iter().any(|g| !g.is_finite()) {
                    return Err(Error::Model(format!("gating must hold {GATE_BINS} finite values")));
                }
                let params = BurnParams {
                    d_l,
                    d_g,
                    hidden: h,
                    leaky_slope,
                    w_l1: self.weight("W_l1", &[d_l, h])?,
                    w_l2: self.weight("W_l2", &[h])?,
                    w_l3: self.weight("W_l3", &[d_l])?,
                    w_g1: self.weight("W_g1", &[d_g, h])?,
                    w_g2: self.weight("W_g2", &[h])?,
                    w_g3: self.weight("W_g3", &[d_g])?,
                    gating: GatingTable { values: gating },
                };
                let inference = match &self.train_config {
                    Some(m) => m.inference()?,
                    None => InferenceConfig::default(),
                };
                Ok(LoadedModel::Burn(BurnModel::new(params, inference)))
            }
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model file serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: source.line(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burn_round_trip() {
        let model = BurnModel::new(
            BurnParams::init(4, 4, 6, 3),
            InferenceConfig::new(7, 1e-5, 12).unwrap(),
        );
        let manifest = TrainManifest::new(TrainConfig::default(), model.inference);
        let file = ModelFile::from_burn(&model, FeatureSet::Feat, Some(manifest));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        file.save(&path).unwrap();
        let loaded = ModelFile::load(&path).unwrap();
        assert_eq!(loaded, file);
        assert_eq!(loaded.into_model().unwrap(), LoadedModel::Burn(model));
        assert_eq!(fs::read_to_string(&path).unwrap(), loaded.to_json());
    }

    #[test]
    fn linear_round_trip() {
        let model = LinearModel::new(LinearParams {
            w_local: vec![0.25],
            w_pair: vec![-1.5],
        });
        let file = ModelFile::from_linear(&model, FeatureSet::Base, None);
        let json = file.to_json();
        assert!(!json.contains("gating"));
        let back: ModelFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_model().unwrap(), LoadedModel::Linear(model));
    }

    #[test]
    fn shape_errors_detected() {
        let model = LinearModel::new(LinearParams::zeros(FeatureSet::Base));
        let mut file = ModelFile::from_linear(&model, FeatureSet::Feat, None);
        assert!(file.into_model().is_err());
        file.feature_set = FeatureSet::Base;
        assert!(file.into_model().is_ok());
        file.format_version = 99;
        assert!(file.into_model().is_err());
    }

    #[test]
    fn inference_kind_parses() {
        assert_eq!("burn".parse::<InferenceKind>().unwrap(), InferenceKind::Burn);
        assert!("loopy".parse::<InferenceKind>().is_err());
    }
}
