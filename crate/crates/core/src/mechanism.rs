//! The randomized fixed-price mechanism.
//!
//! A run is a pure function of the reported instance, the parameters and a
//! [`CoinRecord`]; all randomness is drawn up front by [`draw_coins`].
//!
//! Outline of [`run_mechanism`]:
//!
//! 1. if the grand-bundle coin is set, sell `M` by second price to everyone;
//! 2. otherwise bidders are split into STAT, UNIFORM and FINAL by the coins;
//! 3. the greedy allocation over STAT fixes the scale `|APX|`;
//! 4. the bins `2^k |APX| / m^2` are cut into `alpha` equal chunks;
//! 5. each chunk runs a uniform-price auction among UNIFORM (at half the
//!    chunk's lowest bin price), which either ends the mechanism or reprices
//!    the items it sold to half the chunk's `r`-th bin price;
//! 6. FINAL bidders face the guessed prices in a last fixed-price auction.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auctions::{
    fixed_price_auction_with, greedy_allocation, second_price_grand_bundle, Allocation, AuctionResult, DemandOracle,
    ExactDemand,
};
use crate::bundle::Bundle;
use crate::error::{input, Error, Result};
use crate::instance::Instance;
use crate::random::bernoulli;
use crate::rational::Rational;

/// `ceil(log2 m)`, at least 1.
fn ceil_log2(m: usize) -> usize {
    let mut l = 0;
    while (1usize << l) < m {
        l += 1;
    }
    l.max(1)
}

/// `ceil(sqrt(log2 m))`, at least 1: the smallest `a` with `2^(a^2) >= m`.
fn default_alpha(m: usize) -> usize {
    let mut a = 1usize;
    while a * a < 64 && (1u128 << (a * a)) < m as u128 {
        a += 1;
    }
    a
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MechanismParams {
    pub alpha: usize,
    pub bin_count: usize,
    pub grand_bundle_prob: Rational,
    pub termination_prob: Rational,
}

impl MechanismParams {
    pub fn for_items(m: usize) -> Self {
        let alpha = default_alpha(m);
        MechanismParams {
            alpha,
            bin_count: (4 * ceil_log2(m)).div_ceil(alpha) * alpha,
            grand_bundle_prob: Rational::new(1, 2),
            termination_prob: Rational::new(1, alpha as i128),
        }
    }

    /// Defaults for `m` items with optional overrides. Unset bin counts are
    /// rounded up to a multiple of `alpha`, unset stop probabilities follow
    /// `1 / alpha`.
    pub fn with_overrides(
        m: usize,
        alpha: Option<usize>,
        bin_count: Option<usize>,
        grand_bundle_prob: Option<Rational>,
        termination_prob: Option<Rational>,
    ) -> Result<Self> {
        let base = MechanismParams::for_items(m);
        let alpha = alpha.unwrap_or(base.alpha);
        if alpha == 0 {
            return input("alpha must be positive");
        }
        let params = MechanismParams {
            alpha,
            bin_count: bin_count.unwrap_or_else(|| (4 * ceil_log2(m)).div_ceil(alpha) * alpha),
            grand_bundle_prob: grand_bundle_prob.unwrap_or(base.grand_bundle_prob),
            termination_prob: termination_prob.unwrap_or(Rational::new(1, alpha as i128)),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha == 0 || self.bin_count == 0 {
            return input("alpha and bin count must be positive");
        }
        if !self.bin_count.is_multiple_of(self.alpha) {
            return input(format!("bin count {} is not a multiple of alpha {}", self.bin_count, self.alpha));
        }
        if self.bin_count > 120 {
            return input("bin count above 120 overflows the price grid");
        }
        for p in [&self.grand_bundle_prob, &self.termination_prob] {
            if p.is_negative() || *p > Rational::one() {
                return input(format!("probability {p} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn bins_per_chunk(&self) -> usize {
        self.bin_count / self.alpha
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Group {
    Stat,
    Uniform,
    Final,
}

/// Every random draw of one run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoinRecord {
    pub grand_bundle_coin: bool,
    pub group_of: Vec<Group>,
    /// Arrival order of the UNIFORM bidders.
    pub pi: Vec<usize>,
    /// 1-based rank of the repricing bin within each chunk.
    pub r: usize,
    pub stop_coin: Vec<bool>,
}

impl CoinRecord {
    pub fn members(&self, group: Group) -> Vec<usize> {
        (0..self.group_of.len()).filter(|&i| self.group_of[i] == group).collect()
    }

    pub fn validate(&self, n: usize, params: &MechanismParams) -> Result<()> {
        if self.group_of.len() != n {
            return input(format!("coins drawn for {} bidders, instance has {n}", self.group_of.len()));
        }
        let mut pi = self.pi.clone();
        pi.sort_unstable();
        if pi != self.members(Group::Uniform) {
            return input("pi is not a permutation of the UNIFORM group");
        }
        if self.r == 0 || self.r > params.bins_per_chunk() {
            return input(format!("r = {} outside [1, {}]", self.r, params.bins_per_chunk()));
        }
        if self.stop_coin.len() != params.alpha {
            return input(format!("expected {} stop coins, got {}", params.alpha, self.stop_coin.len()));
        }
        Ok(())
    }
}

/// Draws a full coin record from `seed`.
///
/// Order of draws: grand-bundle coin; one group per bidder in index order;
/// the shuffle of the UNIFORM bidders (ascending before shuffling); `r`;
/// one stop coin per chunk. Everything is drawn on every run.
pub fn draw_coins(n: usize, params: &MechanismParams, seed: u64) -> CoinRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grand_bundle_coin = bernoulli(&mut rng, &params.grand_bundle_prob);
    let group_of: Vec<Group> = (0..n)
        .map(|_| match rng.gen_range(0..3u8) {
            0 => Group::Stat,
            1 => Group::Uniform,
            _ => Group::Final,
        })
        .collect();
    let mut pi: Vec<usize> = (0..n).filter(|&i| group_of[i] == Group::Uniform).collect();
    pi.shuffle(&mut rng);
    let r = rng.gen_range(1..=params.bins_per_chunk());
    let stop_coin = (0..params.alpha).map(|_| bernoulli(&mut rng, &params.termination_prob)).collect();
    CoinRecord { grand_bundle_coin, group_of, pi, r, stop_coin }
}

/// Geometric price levels `bin_price(k) = 2^k * scale / m^2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinGrid {
    /// `|APX|` rounded up to a power of two.
    pub scale: Rational,
    pub m: usize,
    pub bin_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinPosition {
    BelowRange,
    Bin(usize),
    AboveRange,
}

impl BinGrid {
    pub fn bin_price(&self, k: usize) -> Rational {
        let m = self.m as i128;
        Rational::pow2(k as i32) * self.scale / Rational::from_int(m * m)
    }

    /// Largest bin whose price is at most `q`.
    pub fn bin_of(&self, q: &Rational) -> BinPosition {
        if *q < self.bin_price(1) {
            return BinPosition::BelowRange;
        }
        if *q >= self.bin_price(self.bin_count + 1) {
            return BinPosition::AboveRange;
        }
        let mut k = 1;
        while self.bin_price(k + 1) <= *q {
            k += 1;
        }
        BinPosition::Bin(k)
    }
}

/// Bins `1..=bin_count` cut into `alpha` runs of consecutive bins.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkPlan {
    pub chunks: Vec<Vec<usize>>,
}

/// Smallest power of two (any integer exponent) at least `x > 0`.
fn round_up_pow2(x: &Rational) -> Rational {
    let mut e: i32 = 0;
    let mut p = Rational::one();
    while p < *x {
        e += 1;
        p = Rational::pow2(e);
    }
    while Rational::pow2(e - 1) >= *x {
        e -= 1;
        p = Rational::pow2(e);
    }
    p
}

pub fn build_grid(apx_value: &Rational, m: usize, params: &MechanismParams) -> Result<(BinGrid, ChunkPlan)> {
    if !apx_value.is_positive() {
        return Err(Error::Degenerate("scale estimate is zero".into()));
    }
    let grid = BinGrid { scale: round_up_pow2(apx_value), m, bin_count: params.bin_count };
    let size = params.bins_per_chunk();
    let chunks = (0..params.alpha).map(|k| (k * size + 1..=(k + 1) * size).collect()).collect();
    Ok((grid, ChunkPlan { chunks }))
}

/// Current prices for the final auction; zero until a chunk reprices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GuessedPrices(pub Vec<Rational>);

impl GuessedPrices {
    pub fn zeros(m: usize) -> Self {
        GuessedPrices(vec![Rational::zero(); m])
    }

    pub fn prices(&self) -> &[Rational] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    GrandBundle,
    /// 1-based chunk index whose stop coin ended the run.
    ChunkStop(usize),
    FinalAuction,
}

impl Branch {
    pub fn label(&self) -> String {
        match self {
            Branch::GrandBundle => "grand_bundle".into(),
            Branch::ChunkStop(k) => format!("chunk_stop_{k}"),
            Branch::FinalAuction => "final_auction".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    GrandBundle,
    ScaleEstimate,
    ChunkAuction,
    PriceUpdate,
    FinalAuction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BidderBundle {
    pub bidder: usize,
    pub bundle: Bundle,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub step: Step,
    pub chunk: Option<usize>,
    pub prices: Vec<Rational>,
    pub allocation_delta: Vec<BidderBundle>,
    pub payments: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub coins: CoinRecord,
    pub apx_value: Option<Rational>,
    pub scale: Option<Rational>,
    pub events: Vec<TranscriptEvent>,
    pub final_prices: Option<Vec<Rational>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MechanismOutcome {
    pub allocation: Allocation,
    pub payments: Vec<Rational>,
    pub branch: Branch,
    pub transcript: Transcript,
}

impl MechanismOutcome {
    pub fn welfare(&self, instance: &Instance) -> Rational {
        self.allocation.welfare(instance)
    }
}

fn delta(alloc: &Allocation) -> Vec<BidderBundle> {
    alloc
        .bundles()
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.is_empty())
        .map(|(bidder, b)| BidderBundle { bidder, bundle: b.clone() })
        .collect()
}

fn auction_event(step: Step, chunk: Option<usize>, prices: Vec<Rational>, res: &AuctionResult) -> TranscriptEvent {
    TranscriptEvent { step, chunk, prices, allocation_delta: delta(&res.allocation), payments: res.payments.clone() }
}

pub fn run_mechanism(instance: &Instance, params: &MechanismParams, coins: &CoinRecord) -> Result<MechanismOutcome> {
    run_mechanism_with(&ExactDemand, instance, params, coins)
}

/// Draws coins from `seed` and runs.
pub fn run_seeded(instance: &Instance, params: &MechanismParams, seed: u64) -> Result<MechanismOutcome> {
    let coins = draw_coins(instance.n(), params, seed);
    run_mechanism(instance, params, &coins)
}

pub fn run_mechanism_with(
    oracle: &dyn DemandOracle,
    instance: &Instance,
    params: &MechanismParams,
    coins: &CoinRecord,
) -> Result<MechanismOutcome> {
    params.validate()?;
    coins.validate(instance.n(), params)?;
    let n = instance.n();
    let m = instance.m;
    let mut transcript =
        Transcript { coins: coins.clone(), apx_value: None, scale: None, events: Vec::new(), final_prices: None };

    if coins.grand_bundle_coin {
        let everyone: Vec<usize> = (0..n).collect();
        let res = second_price_grand_bundle(instance, &everyone)?;
        transcript.events.push(auction_event(Step::GrandBundle, None, Vec::new(), &res));
        return Ok(MechanismOutcome {
            allocation: res.allocation,
            payments: res.payments,
            branch: Branch::GrandBundle,
            transcript,
        });
    }

    let apx = greedy_allocation(instance, &coins.members(Group::Stat));
    let apx_value = apx.welfare(instance);
    transcript.apx_value = Some(apx_value);
    transcript.events.push(TranscriptEvent {
        step: Step::ScaleEstimate,
        chunk: None,
        prices: Vec::new(),
        allocation_delta: delta(&apx),
        payments: Vec::new(),
    });

    let all = instance.all_items();
    let mut guessed = GuessedPrices::zeros(m);
    match build_grid(&apx_value, m, params) {
        Ok((grid, plan)) => {
            transcript.scale = Some(grid.scale);
            for (idx, chunk) in plan.chunks.iter().enumerate() {
                let k = idx + 1;
                let lowest = grid.bin_price(chunk[0]);
                let uniform = vec![lowest / Rational::from_int(2); m];
                let res = fixed_price_auction_with(oracle, instance, &coins.pi, &uniform, &all)?;
                transcript.events.push(auction_event(Step::ChunkAuction, Some(k), uniform, &res));
                if coins.stop_coin[idx] {
                    return Ok(MechanismOutcome {
                        allocation: res.allocation,
                        payments: res.payments,
                        branch: Branch::ChunkStop(k),
                        transcript,
                    });
                }
                let repriced = grid.bin_price(chunk[coins.r - 1]) / Rational::from_int(2);
                for j in res.allocation.allocated().iter() {
                    guessed.0[j] = repriced;
                }
                transcript.events.push(TranscriptEvent {
                    step: Step::PriceUpdate,
                    chunk: Some(k),
                    prices: guessed.0.clone(),
                    allocation_delta: Vec::new(),
                    payments: Vec::new(),
                });
            }
        }
        Err(Error::Degenerate(_)) => {}
        Err(e) => return Err(e),
    }

    let finals = coins.members(Group::Final);
    let res = fixed_price_auction_with(oracle, instance, &finals, guessed.prices(), &all)?;
    transcript.events.push(auction_event(Step::FinalAuction, None, guessed.0.clone(), &res));
    transcript.final_prices = Some(guessed.0);
    Ok(MechanismOutcome {
        allocation: res.allocation,
        payments: res.payments,
        branch: Branch::FinalAuction,
        transcript,
    })
}

/// `v_i(S_i) - p_i`, with `v_i` taken from `instance`.
pub fn utility(instance: &Instance, i: usize, outcome: &MechanismOutcome) -> Rational {
    instance.valuation(i).value_unchecked(outcome.allocation.bundle(i)) - outcome.payments[i]
}
