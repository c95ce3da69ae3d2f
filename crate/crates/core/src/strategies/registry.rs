use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcts::{SearchParams, SmsBidder};
use crate::prediction::{iterate_prediction, PredictorParams};
use crate::valuations::Instance;

use super::{
    epe_prediction, CheapestItemBidder, EpeParams, PassStrategy, PointPriceBidder, PricePrediction,
    StraightforwardBidder, Strategy,
};

/// Where a prediction-based strategy gets its initial price vector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionSource {
    #[default]
    FixedPoint,
    Epe,
    Zero,
    Literal(Vec<f64>),
}

/// Parameters understood by the built-in strategies; each ignores the fields
/// it has no use for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyParams {
    pub prediction: PredictionSource,
    pub alpha: f64,
    pub n_act: usize,
    pub r_max: u32,
    pub iterations: Option<u64>,
    pub time_ms: Option<u64>,
    pub seed: u64,
}

impl Default for StrategyParams {
    fn default() -> Self {
        let s = SearchParams::default();
        StrategyParams {
            prediction: PredictionSource::default(),
            alpha: s.alpha,
            n_act: s.n_act,
            r_max: s.r_max,
            iterations: s.iterations,
            time_ms: None,
            seed: 0,
        }
    }
}

impl StrategyParams {
    pub fn search_params(&self) -> SearchParams {
        SearchParams {
            alpha: self.alpha,
            n_act: self.n_act,
            r_max: self.r_max,
            iterations: self.iterations,
            time_budget: self.time_ms.map(Duration::from_millis),
            seed: self.seed,
        }
    }
}

/// An instance plus lazily computed, shared predictions.
pub struct PreparedInstance {
    pub instance: Instance,
    pub predictor: PredictorParams,
    pub epe: EpeParams,
    fixed_point: OnceLock<Result<PricePrediction>>,
    epe_prediction: OnceLock<PricePrediction>,
}

impl PreparedInstance {
    pub fn new(instance: Instance, predictor: PredictorParams) -> Self {
        let epe = EpeParams::for_config(&instance.config);
        PreparedInstance { instance, predictor, epe, fixed_point: OnceLock::new(), epe_prediction: OnceLock::new() }
    }

    pub fn with_epe(mut self, epe: EpeParams) -> Self {
        self.epe = epe;
        self
    }

    /// Seeds the fixed-point prediction instead of computing it.
    pub fn with_fixed_point(self, p: PricePrediction) -> Self {
        let _ = self.fixed_point.set(Ok(p));
        self
    }

    pub fn fixed_point(&self) -> Result<PricePrediction> {
        self.fixed_point
            .get_or_init(|| {
                iterate_prediction(&self.instance.config, &self.instance.profiles, &self.predictor).map(|(p, _)| p)
            })
            .clone()
    }

    pub fn epe(&self) -> PricePrediction {
        self.epe_prediction
            .get_or_init(|| epe_prediction(&self.instance.profiles, &self.instance.config, self.epe))
            .clone()
    }

    pub fn prediction(&self, source: &PredictionSource) -> Result<PricePrediction> {
        let m = self.instance.config.m_items;
        match source {
            PredictionSource::FixedPoint => self.fixed_point(),
            PredictionSource::Epe => Ok(self.epe()),
            PredictionSource::Zero => Ok(PricePrediction::zeros(m)),
            PredictionSource::Literal(p) if p.len() == m && p.iter().all(|x| x.is_finite() && *x >= 0.0) => {
                Ok(PricePrediction(p.clone()))
            }
            PredictionSource::Literal(p) => Err(Error::InvalidConfig(format!(
                "literal prediction needs {m} finite non-negative prices, got {p:?}"
            ))),
        }
    }
}

pub type StrategyFactory =
    Arc<dyn Fn(&PreparedInstance, &StrategyParams) -> Result<Box<dyn Strategy>> + Send + Sync>;

/// Strategy constructors by name. Names are matched case-insensitively.
#[derive(Clone, Default)]
pub struct StrategyRegistry {
    factories: BTreeMap<String, StrategyFactory>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// PASS, SB, PP, EPE, SMS and CHEAPEST.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        let builtins: [(&str, StrategyFactory); 6] = [
            ("PASS", Arc::new(|_, _| Ok(Box::new(PassStrategy) as Box<dyn Strategy>))),
            ("SB", Arc::new(|_, _| Ok(Box::new(StraightforwardBidder) as Box<dyn Strategy>))),
            ("CHEAPEST", Arc::new(|_, _| Ok(Box::new(CheapestItemBidder) as Box<dyn Strategy>))),
            (
                "PP",
                Arc::new(|inst, params| {
                    let prediction = inst.prediction(&params.prediction)?;
                    Ok(Box::new(PointPriceBidder { prediction }) as Box<dyn Strategy>)
                }),
            ),
            ("EPE", Arc::new(|inst, _| Ok(Box::new(PointPriceBidder { prediction: inst.epe() }) as Box<dyn Strategy>))),
            (
                "SMS",
                Arc::new(|inst, params| {
                    let prediction = inst.prediction(&params.prediction)?;
                    let bidder = SmsBidder::new(prediction, params.search_params())
                        .map_err(|e| Error::StrategyConfig { name: "SMS".into(), reason: e.to_string() })?;
                    Ok(Box::new(bidder) as Box<dyn Strategy>)
                }),
            ),
        ];
        for (name, f) in builtins {
            r.register(name, f).expect("builtin names are distinct");
        }
        r
    }

    pub fn register(&mut self, name: &str, factory: StrategyFactory) -> Result<()> {
        let key = name.to_ascii_uppercase();
        if self.factories.contains_key(&key) {
            return Err(Error::DuplicateStrategy(name.to_string()));
        }
        self.factories.insert(key, factory);
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(&name.to_ascii_uppercase())
    }

    pub fn resolve(&self, name: &str, instance: &PreparedInstance, params: &StrategyParams) -> Result<Box<dyn Strategy>> {
        let factory = self
            .factories
            .get(&name.to_ascii_uppercase())
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))?;
        factory(instance, params)
    }

    pub fn names(&self) -> Vec<String> {
        self.factories.keys().cloned().collect()
    }
}
