//! JSON configuration schemas and their conversion into domain objects.
//! Rationals travel as "p/q" strings end to end; algebraic coefficients are
//! rational-coefficient lists over the field generator.

use anyhow::{anyhow, bail, Context};
use assouad::affine::{AffineIfs, AffineMap};
use assouad::carpet::BmCarpet;
use assouad::field::NumberField;
use assouad::graph::GraphBudget;
use assouad::ifs::{SimilarityIfs, SimilarityMap};
use assouad::oracle::{
    CascadeOracle, CascadeParams, MeasureOracle, NetIntervalOracle, SalemMode, SalemOracle,
    SalemSchedule, TriadicOracle,
};
use assouad::rational::parse_rational;
use num::BigRational;
use serde::Deserialize;
use std::sync::Arc;

#[derive(Debug, Deserialize)]
pub struct FieldConfig {
    pub min_poly: Vec<i64>,
    /// Two rational strings "p/q" bracketing exactly one real root.
    pub root_interval: [String; 2],
}

impl FieldConfig {
    pub fn build(&self) -> anyhow::Result<Arc<NumberField>> {
        let lo = parse_rational(&self.root_interval[0])?;
        let hi = parse_rational(&self.root_interval[1])?;
        Ok(NumberField::new(&self.min_poly, lo, hi)?)
    }
}

#[derive(Debug, Deserialize)]
pub struct MapConfig {
    /// Coefficients of the contraction ratio over the field generator.
    pub r: Vec<String>,
    /// Coefficients of the translation.
    pub d: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub struct IfsConfig {
    pub field: FieldConfig,
    pub maps: Vec<MapConfig>,
    pub probs: Vec<String>,
}

impl IfsConfig {
    pub fn build(&self) -> anyhow::Result<SimilarityIfs> {
        let field = self.field.build()?;
        let parse_coeffs = |strs: &[String]| -> anyhow::Result<Vec<BigRational>> {
            strs.iter().map(|s| Ok(parse_rational(s)?)).collect()
        };
        let mut maps = Vec::with_capacity(self.maps.len());
        for m in &self.maps {
            maps.push(SimilarityMap {
                ratio: field.element(parse_coeffs(&m.r)?),
                offset: field.element(parse_coeffs(&m.d)?),
            });
        }
        let probs = self
            .probs
            .iter()
            .map(|s| Ok(parse_rational(s)?))
            .collect::<anyhow::Result<Vec<_>>>()?;
        Ok(SimilarityIfs::new(field, maps, probs)?)
    }
}

#[derive(Debug, Deserialize)]
pub struct CarpetConfig {
    pub m: u32,
    pub n: u32,
    pub digits: Vec<(u32, u32)>,
    pub probs: Vec<String>,
}

impl CarpetConfig {
    pub fn build(&self) -> anyhow::Result<BmCarpet> {
        let probs = self
            .probs
            .iter()
            .map(|s| Ok(parse_rational(s)?))
            .collect::<anyhow::Result<Vec<_>>>()?;
        Ok(BmCarpet::new(self.m, self.n, self.digits.clone(), probs)?)
    }
}

#[derive(Debug, Deserialize)]
pub struct AffineMapConfig {
    /// Row-major matrix entries as decimal strings.
    pub a: Vec<String>,
    pub t: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub struct AffineConfig {
    pub dim: usize,
    pub maps: Vec<AffineMapConfig>,
    pub probs: Vec<String>,
}

impl AffineConfig {
    pub fn build(&self) -> anyhow::Result<AffineIfs> {
        let parse_f64s = |strs: &[String]| -> anyhow::Result<Vec<f64>> {
            strs.iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("bad number {s:?}: {e}")))
                .collect()
        };
        let maps = self
            .maps
            .iter()
            .map(|m| Ok(AffineMap { a: parse_f64s(&m.a)?, t: parse_f64s(&m.t)? }))
            .collect::<anyhow::Result<Vec<_>>>()?;
        let probs = self
            .probs
            .iter()
            .map(|s| Ok(parse_rational(s)?))
            .collect::<anyhow::Result<Vec<_>>>()?;
        Ok(AffineIfs::new(self.dim, maps, probs)?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "oracle", rename_all = "kebab-case")]
pub enum OracleConfig {
    Cascade {
        #[serde(default)]
        schedule: Option<CascadeScheduleConfig>,
        #[serde(default)]
        depth_cap: Option<u32>,
    },
    Triadic {
        #[serde(default)]
        depth_cap: Option<u32>,
    },
    SalemMeasure {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        blocks: Option<Vec<(u32, u32)>>,
    },
    SalemSet {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        blocks: Option<Vec<(u32, u32)>>,
    },
    FiniteType {
        ifs: IfsConfig,
        #[serde(default)]
        depth_cap: Option<u32>,
        #[serde(default)]
        max_level: Option<u32>,
        #[serde(default)]
        max_cvs: Option<usize>,
    },
}

#[derive(Debug, Deserialize)]
pub struct CascadeScheduleConfig {
    pub n_j: Vec<u32>,
    pub q_j: Vec<String>,
}

impl OracleConfig {
    pub fn build(&self, seed: u64) -> anyhow::Result<Box<dyn MeasureOracle>> {
        match self {
            OracleConfig::Cascade { schedule, depth_cap } => {
                let params = match schedule {
                    None => CascadeParams::shipped(),
                    Some(s) => {
                        let q = s
                            .q_j
                            .iter()
                            .map(|x| Ok(parse_rational(x)?))
                            .collect::<anyhow::Result<Vec<_>>>()?;
                        CascadeParams::new(s.n_j.clone(), q)?
                    }
                };
                let cap = depth_cap
                    .unwrap_or_else(|| 3 * params.n_j.last().copied().unwrap_or(27));
                Ok(Box::new(CascadeOracle::new(params, cap)?))
            }
            OracleConfig::Triadic { depth_cap } => {
                Ok(Box::new(TriadicOracle::new(depth_cap.unwrap_or(100))))
            }
            OracleConfig::SalemMeasure { seed: s, blocks } => {
                let schedule = match blocks {
                    None => SalemSchedule::shipped(),
                    Some(b) => SalemSchedule::new(b.clone())?,
                };
                Ok(Box::new(SalemOracle::new(s.unwrap_or(seed), SalemMode::MeasureExample, schedule)?))
            }
            OracleConfig::SalemSet { seed: s, blocks } => {
                let schedule = match blocks {
                    None => SalemSchedule::shipped(),
                    Some(b) => SalemSchedule::new(b.clone())?,
                };
                Ok(Box::new(SalemOracle::new(s.unwrap_or(seed), SalemMode::SetExample, schedule)?))
            }
            OracleConfig::FiniteType { ifs, depth_cap, max_level, max_cvs } => {
                let ifs = ifs.build()?;
                let budget = GraphBudget {
                    max_level: max_level.unwrap_or(30),
                    max_cvs: max_cvs.unwrap_or(20_000),
                };
                Ok(Box::new(NetIntervalOracle::new(&ifs, budget, depth_cap.unwrap_or(60))?))
            }
        }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> anyhow::Result<T> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    match serde_json::from_slice::<T>(&bytes) {
        Ok(v) => Ok(v),
        Err(e) => bail!("{}:{}:{}: {e}", path.display(), e.line(), e.column()),
    }
}
