//! Value functions, the random instance generator, and fixed instances.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::auction::{AuctionConfig, BidderProfile};
use crate::error::{Error, Result};
use crate::items::{ItemSet, MAX_ITEMS};

/// Exhaustive bundle values, indexed by subset bitmask.
///
/// Serialized as `{ "m": .., "table": [..] }` with `table[mask]` the value of
/// the bundle whose bits are set in `mask`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawValueFunction", into = "RawValueFunction")]
pub struct ValueFunction {
    m: usize,
    table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawValueFunction {
    m: usize,
    table: Vec<f64>,
}

impl TryFrom<RawValueFunction> for ValueFunction {
    type Error = Error;

    fn try_from(raw: RawValueFunction) -> Result<Self> {
        ValueFunction::from_table(raw.m, raw.table)
    }
}

impl From<ValueFunction> for RawValueFunction {
    fn from(v: ValueFunction) -> Self {
        RawValueFunction { m: v.m, table: v.table }
    }
}

impl ValueFunction {
    /// Builds a value function from a full table. Checks normalisation and
    /// finiteness; free disposal is checked separately.
    pub fn from_table(m: usize, table: Vec<f64>) -> Result<Self> {
        if m > MAX_ITEMS {
            return Err(Error::TooManyItems { m, max: MAX_ITEMS });
        }
        if table.len() != 1 << m {
            return Err(Error::OutOfDomain(format!(
                "value table has {} entries, expected {}",
                table.len(),
                1usize << m
            )));
        }
        if table[0] != 0.0 {
            return Err(Error::OutOfDomain("value of the empty bundle must be 0".into()));
        }
        if let Some(k) = table.iter().position(|v| !v.is_finite()) {
            return Err(Error::OutOfDomain(format!("non-finite value for bundle {}", ItemSet(k as u32))));
        }
        Ok(ValueFunction { m, table })
    }

    /// Additive values: each item is worth `per_item[j]` independently.
    pub fn additive(per_item: &[f64]) -> Result<Self> {
        let m = per_item.len();
        let table = (0..1u32 << m)
            .map(|mask| ItemSet(mask).iter().map(|j| per_item[j]).sum())
            .collect();
        Self::from_table(m, table)
    }

    pub fn zero(m: usize) -> Self {
        ValueFunction { m, table: vec![0.0; 1 << m] }
    }

    pub fn m_items(&self) -> usize {
        self.m
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    #[inline]
    pub fn value(&self, bundle: ItemSet) -> f64 {
        self.table[bundle.bits() as usize]
    }

    /// First covering pair `(X, X ∪ {j})` with `v(X) > v(X ∪ {j})`, if any.
    pub fn free_disposal_violation(&self) -> Option<(ItemSet, ItemSet)> {
        for mask in 0..self.table.len() as u32 {
            let x = ItemSet(mask);
            for j in ItemSet::full(self.m).difference(x).iter() {
                let mut y = x;
                y.insert(j);
                if self.value(x) > self.value(y) {
                    return Some((x, y));
                }
            }
        }
        None
    }

    /// Whether `X ⊆ Y ⇒ v(X) ≤ v(Y)` holds over the whole lattice.
    pub fn is_free_disposal(&self) -> bool {
        self.free_disposal_violation().is_none()
    }
}

pub fn check_free_disposal(v: &ValueFunction) -> bool {
    v.is_free_disposal()
}

/// Parameters of the random instance family: surplus cap `V` and the budget range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub v_cap: f64,
    pub b_min: f64,
    pub b_max: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams { v_cap: 5.0, b_min: 10.0, b_max: 40.0 }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_cap >= 0.0) || !(self.b_min <= self.b_max) || self.b_min < 0.0 {
            return Err(Error::InvalidConfig(format!("bad generator parameters {self:?}")));
        }
        Ok(())
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Draws a value function bundle by bundle.
///
/// Masks are visited in increasing numeric order, so every `X \ {j}` is
/// filled before `X`. Singletons are uniform on `[0, V]`; larger bundles are
/// uniform on `[L, V + v(X \ {j*}) + v({j*})]` where `L = max_j v(X \ {j})`
/// and `j*` is the lowest index attaining `L`.
pub fn generate_value_function<R: Rng + ?Sized>(m: usize, params: &GeneratorParams, rng: &mut R) -> ValueFunction {
    assert!((1..=MAX_ITEMS).contains(&m), "generator supports 1..={MAX_ITEMS} items");
    let mut table = vec![0.0; 1 << m];
    for mask in 1..table.len() as u32 {
        let x = ItemSet(mask);
        if x.len() == 1 {
            table[mask as usize] = uniform(rng, 0.0, params.v_cap);
            continue;
        }
        let mut lower = f64::NEG_INFINITY;
        let mut best = 0;
        for j in x.iter() {
            let without = table[(mask & !(1 << j)) as usize];
            if without > lower {
                lower = without;
                best = j;
            }
        }
        let upper = params.v_cap + lower + table[1 << best];
        table[mask as usize] = uniform(rng, lower, upper);
    }
    ValueFunction { m, table }
}

/// A complete auction instance: configuration plus every bidder's private data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub config: AuctionConfig,
    pub profiles: Vec<BidderProfile>,
}

impl Instance {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.profiles.len() != self.config.n_bidders {
            return Err(Error::InvalidConfig(format!(
                "{} profiles for {} bidders",
                self.profiles.len(),
                self.config.n_bidders
            )));
        }
        for (i, p) in self.profiles.iter().enumerate() {
            p.validate(i, self.config.m_items)?;
        }
        Ok(())
    }

    pub fn max_budget(&self) -> f64 {
        self.profiles.iter().map(|p| p.budget).fold(0.0, f64::max)
    }
}

/// Draws a full instance: independent budgets and value functions per bidder.
pub fn generate_instance<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    epsilon: f64,
    params: &GeneratorParams,
    rng: &mut R,
) -> Instance {
    let profiles = (0..n)
        .map(|_| {
            let budget = uniform(rng, params.b_min, params.b_max);
            let values = generate_value_function(m, params, rng);
            BidderProfile { budget, values }
        })
        .collect();
    Instance {
        config: AuctionConfig { n_bidders: n, m_items: m, epsilon, rng_seed: 0 },
        profiles,
    }
}

/// The two-item exposure example: bidder 0 treats the items as perfect
/// substitutes worth 12, bidder 1 as perfect complements worth 20 together.
/// `ε = 1`. Budgets of 24 or more behave as unlimited.
pub fn example1_instance(budget_0: f64, budget_1: f64) -> Instance {
    let substitutes = ValueFunction::from_table(2, vec![0.0, 12.0, 12.0, 12.0]).expect("static table");
    let complements = ValueFunction::from_table(2, vec![0.0, 0.0, 0.0, 20.0]).expect("static table");
    Instance {
        config: AuctionConfig { n_bidders: 2, m_items: 2, epsilon: 1.0, rng_seed: 0 },
        profiles: vec![
            BidderProfile { budget: budget_0, values: substitutes },
            BidderProfile { budget: budget_1, values: complements },
        ],
    }
}

/// Budget used for "unlimited" bidders in the exposure example.
pub const EXAMPLE1_UNLIMITED: f64 = 100.0;

/// Two bidders, two items, additive value `l` per item, bid increment `epsilon`.
pub fn demand_reduction_instance(l: f64, epsilon: f64, budget_0: f64, budget_1: f64) -> Instance {
    let values = ValueFunction::additive(&[l, l]).expect("finite values");
    Instance {
        config: AuctionConfig { n_bidders: 2, m_items: 2, epsilon, rng_seed: 0 },
        profiles: vec![
            BidderProfile { budget: budget_0, values: values.clone() },
            BidderProfile { budget: budget_1, values },
        ],
    }
}
