//! Memory-one strategies, the sixteen deterministic ones, and implementation
//! error.
//!
//! Every strategy is stored in its owner's perspective: the state index is
//! `(own previous action, opponent previous action)`. For player 1 that is the
//! joint frame. Player 2's behaviour in the joint frame is obtained with
//! [`MemoryOneStrategy::swap_perspective`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::game::{Action, StateProfile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("unknown strategy {name:?}; expected one of {valid} or a 4-character 0/1 string (order CC,CD,DC,DD) or four comma-separated probabilities")]
    Unknown { name: String, valid: String },
    #[error("case id {0} outside 1..=16")]
    CaseOutOfRange(u8),
}

fn check_prob(p: f64) -> Result<f64, StrategyError> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(StrategyError::ProbabilityOutOfRange(p))
    }
}

/// Cooperation probability for each previous joint state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryOneStrategy {
    coop: [f64; 4],
}

impl MemoryOneStrategy {
    pub fn new(coop: [f64; 4]) -> Result<Self, StrategyError> {
        for p in coop {
            check_prob(p)?;
        }
        Ok(Self { coop })
    }

    pub fn coop_prob(&self, state: StateProfile) -> f64 {
        self.coop[state.index()]
    }

    pub fn probs(&self) -> [f64; 4] {
        self.coop
    }

    /// Exchanges the `CD` and `DC` entries.
    pub fn swap_perspective(&self) -> Self {
        let [cc, cd, dc, dd] = self.coop;
        Self {
            coop: [cc, dc, cd, dd],
        }
    }

    /// Returns `C` with this strategy's probability for `state`.
    ///
    /// Always consumes exactly one draw so that streams stay aligned whatever
    /// the strategy.
    pub fn sample_action<R: Rng + ?Sized>(&self, state: StateProfile, rng: &mut R) -> Action {
        let u: f64 = rng.random();
        if u < self.coop_prob(state) {
            Action::C
        } else {
            Action::D
        }
    }

    /// `Some` when every probability is exactly 0 or 1.
    pub fn to_deterministic(&self) -> Option<DeterministicStrategy> {
        let mut bits = 0u8;
        for (i, p) in self.coop.iter().enumerate() {
            if *p == 1.0 {
                bits |= 1 << (3 - i);
            } else if *p != 0.0 {
                return None;
            }
        }
        Some(DeterministicStrategy { bits })
    }

    pub fn apply_noise(&self, error_prob: f64) -> Result<NoisyStrategy, StrategyError> {
        NoisyStrategy::new(*self, error_prob)
    }
}

impl fmt::Display for MemoryOneStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_deterministic() {
            Some(d) => write!(f, "{}", d.bit_string()),
            None => {
                let [a, b, c, d] = self.coop;
                write!(f, "{a},{b},{c},{d}")
            }
        }
    }
}

impl FromStr for MemoryOneStrategy {
    type Err = StrategyError;

    /// Accepts a name, a 4-character bit string, or `p_CC,p_CD,p_DC,p_DD`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        if text.contains(',') {
            let probs: Vec<f64> = text
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| unknown(text))?;
            let coop: [f64; 4] = probs.try_into().map_err(|_| unknown(text))?;
            return MemoryOneStrategy::new(coop);
        }
        text.parse::<DeterministicStrategy>()
            .map(|d| d.to_memory_one())
    }
}

/// Labels attached to the named rows of the deterministic catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedStrategy {
    AllC,
    Repeat,
    Tft,
    Wsls,
    Grim,
    AntiGrim,
    Awsls,
    Atft,
    AntiRepeat,
    AllD,
}

impl NamedStrategy {
    pub const ALL: [NamedStrategy; 10] = [
        NamedStrategy::AllC,
        NamedStrategy::Repeat,
        NamedStrategy::Tft,
        NamedStrategy::Wsls,
        NamedStrategy::Grim,
        NamedStrategy::AntiGrim,
        NamedStrategy::Awsls,
        NamedStrategy::Atft,
        NamedStrategy::AntiRepeat,
        NamedStrategy::AllD,
    ];

    pub fn bits(self) -> u8 {
        match self {
            NamedStrategy::AllC => 0b1111,
            NamedStrategy::Repeat => 0b1100,
            NamedStrategy::Tft => 0b1010,
            NamedStrategy::Wsls => 0b1001,
            NamedStrategy::Grim => 0b1000,
            NamedStrategy::AntiGrim => 0b0111,
            NamedStrategy::Awsls => 0b0110,
            NamedStrategy::Atft => 0b0101,
            NamedStrategy::AntiRepeat => 0b0011,
            NamedStrategy::AllD => 0b0000,
        }
    }

    /// Display label.
    pub fn label(self) -> &'static str {
        match self {
            NamedStrategy::AllC => "All-C",
            NamedStrategy::Repeat => "Repeat",
            NamedStrategy::Tft => "TFT",
            NamedStrategy::Wsls => "WSLS",
            NamedStrategy::Grim => "Grim",
            NamedStrategy::AntiGrim => "anti-Grim",
            NamedStrategy::Awsls => "AWSLS",
            NamedStrategy::Atft => "ATFT",
            NamedStrategy::AntiRepeat => "anti-Repeat",
            NamedStrategy::AllD => "All-D",
        }
    }

    /// Command-line token.
    pub fn token(self) -> &'static str {
        match self {
            NamedStrategy::AllC => "ALLC",
            NamedStrategy::Repeat => "REPEAT",
            NamedStrategy::Tft => "TFT",
            NamedStrategy::Wsls => "WSLS",
            NamedStrategy::Grim => "GRIM",
            NamedStrategy::AntiGrim => "AGRIM",
            NamedStrategy::Awsls => "AWSLS",
            NamedStrategy::Atft => "ATFT",
            NamedStrategy::AntiRepeat => "AREPEAT",
            NamedStrategy::AllD => "ALLD",
        }
    }

    pub fn from_bits(bits: u8) -> Option<NamedStrategy> {
        Self::ALL.into_iter().find(|n| n.bits() == bits)
    }

    pub fn from_token(token: &str) -> Option<NamedStrategy> {
        let upper = token.to_ascii_uppercase();
        Self::ALL.into_iter().find(|n| n.token() == upper)
    }

    pub fn tokens() -> String {
        Self::ALL.map(|n| n.token()).join(", ")
    }
}

fn unknown(text: &str) -> StrategyError {
    StrategyError::Unknown {
        name: text.to_string(),
        valid: NamedStrategy::tokens(),
    }
}

/// A pure memory-one strategy: one cooperation bit per previous state,
/// most significant bit for `CC`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeterministicStrategy {
    bits: u8,
}

impl DeterministicStrategy {
    pub fn from_bits(bits: u8) -> Self {
        Self { bits: bits & 0b1111 }
    }

    pub fn named(name: NamedStrategy) -> Self {
        Self::from_bits(name.bits())
    }

    pub fn from_actions(actions: [Action; 4]) -> Self {
        let mut bits = 0;
        for (i, a) in actions.iter().enumerate() {
            if *a == Action::C {
                bits |= 1 << (3 - i);
            }
        }
        Self { bits }
    }

    /// Catalog row `case_id`: case 1 is All-C (`1111`), case 16 is All-D.
    pub fn from_case(case_id: u8) -> Result<Self, StrategyError> {
        if !(1..=16).contains(&case_id) {
            return Err(StrategyError::CaseOutOfRange(case_id));
        }
        Ok(Self::from_bits(16 - case_id))
    }

    pub fn case_id(&self) -> u8 {
        16 - self.bits
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn all() -> impl Iterator<Item = DeterministicStrategy> {
        (1..=16).map(|n| Self::from_bits(16 - n))
    }

    pub fn action(&self, state: StateProfile) -> Action {
        if self.cooperates(state) {
            Action::C
        } else {
            Action::D
        }
    }

    pub fn cooperates(&self, state: StateProfile) -> bool {
        (self.bits >> (3 - state.index())) & 1 == 1
    }

    pub fn actions(&self) -> [Action; 4] {
        StateProfile::ALL.map(|s| self.action(s))
    }

    pub fn swap_perspective(&self) -> Self {
        let [cc, cd, dc, dd] = self.actions();
        Self::from_actions([cc, dc, cd, dd])
    }

    pub fn to_memory_one(&self) -> MemoryOneStrategy {
        MemoryOneStrategy {
            coop: StateProfile::ALL.map(|s| if self.cooperates(s) { 1.0 } else { 0.0 }),
        }
    }

    pub fn name(&self) -> Option<NamedStrategy> {
        NamedStrategy::from_bits(self.bits)
    }

    pub fn bit_string(&self) -> String {
        format!("{:04b}", self.bits)
    }

    /// Catalog name when there is one, otherwise the bit string.
    pub fn label(&self) -> String {
        match self.name() {
            Some(n) => n.label().to_string(),
            None => self.bit_string(),
        }
    }
}

impl fmt::Display for DeterministicStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for DeterministicStrategy {
    type Err = StrategyError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let text = text.trim();
        if text.len() == 4 && text.chars().all(|c| c == '0' || c == '1') {
            let bits = u8::from_str_radix(text, 2).map_err(|_| unknown(text))?;
            return Ok(Self::from_bits(bits));
        }
        NamedStrategy::from_token(text)
            .map(Self::named)
            .ok_or_else(|| unknown(text))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrategyCatalogEntry {
    pub case_id: u8,
    pub strategy: DeterministicStrategy,
    pub name: Option<NamedStrategy>,
}

/// The sixteen deterministic strategies ordered by case id.
pub fn catalog() -> Vec<StrategyCatalogEntry> {
    DeterministicStrategy::all()
        .map(|strategy| StrategyCatalogEntry {
            case_id: strategy.case_id(),
            strategy,
            name: strategy.name(),
        })
        .collect()
}

/// A memory-one strategy that executes the opposite of its intended action
/// with probability `error_prob`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyStrategy {
    pub base: MemoryOneStrategy,
    error_prob: f64,
}

impl NoisyStrategy {
    pub fn new(base: MemoryOneStrategy, error_prob: f64) -> Result<Self, StrategyError> {
        check_prob(error_prob)?;
        Ok(Self { base, error_prob })
    }

    pub fn noiseless(base: MemoryOneStrategy) -> Self {
        Self {
            base,
            error_prob: 0.0,
        }
    }

    pub fn error_prob(&self) -> f64 {
        self.error_prob
    }

    /// `(1 - e) p + e (1 - p)` per state.
    pub fn effective(&self) -> MemoryOneStrategy {
        let e = self.error_prob;
        MemoryOneStrategy {
            coop: self.base.coop.map(|p| (1.0 - e) * p + e * (1.0 - p)),
        }
    }

    pub fn swap_perspective(&self) -> Self {
        Self {
            base: self.base.swap_perspective(),
            error_prob: self.error_prob,
        }
    }

    /// Samples the intended action from `intent`, then flips it with the
    /// error probability using `noise`. The noise stream is only drawn from
    /// when the error probability is positive.
    pub fn sample_action<R: Rng + ?Sized, N: Rng + ?Sized>(
        &self,
        state: StateProfile,
        intent: &mut R,
        noise: &mut N,
    ) -> Action {
        let action = self.base.sample_action(state, intent);
        if self.error_prob > 0.0 && noise.random::<f64>() < self.error_prob {
            action.flip()
        } else {
            action
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn catalog_matches_table_rows() {
        let cat = catalog();
        assert_eq!(cat.len(), 16);
        let expect = [
            (1, "1111", Some("All-C")),
            (2, "1110", None),
            (3, "1101", None),
            (4, "1100", Some("Repeat")),
            (5, "1011", None),
            (6, "1010", Some("TFT")),
            (7, "1001", Some("WSLS")),
            (8, "1000", Some("Grim")),
            (9, "0111", Some("anti-Grim")),
            (10, "0110", Some("AWSLS")),
            (11, "0101", Some("ATFT")),
            (12, "0100", None),
            (13, "0011", Some("anti-Repeat")),
            (14, "0010", None),
            (15, "0001", None),
            (16, "0000", Some("All-D")),
        ];
        for (entry, (id, bits, name)) in cat.iter().zip(expect) {
            assert_eq!(entry.case_id, id);
            assert_eq!(entry.strategy.bit_string(), bits);
            assert_eq!(entry.name.map(|n| n.label()), name);
        }
        assert_eq!(cat[13].strategy.label(), "0010");
    }

    #[test]
    fn swap_examples() {
        let swap = |n: NamedStrategy| DeterministicStrategy::named(n).swap_perspective();
        assert_eq!(swap(NamedStrategy::Wsls).bit_string(), "1001");
        assert_eq!(swap(NamedStrategy::Tft).bit_string(), "1100");
        assert_eq!(swap(NamedStrategy::Grim).bit_string(), "1000");
        let tft = DeterministicStrategy::named(NamedStrategy::Tft).to_memory_one();
        assert_eq!(tft.swap_perspective().probs(), [1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn swap_is_involution_on_catalog() {
        for e in catalog() {
            assert_eq!(e.strategy.swap_perspective().swap_perspective(), e.strategy);
            let m = e.strategy.to_memory_one();
            assert_eq!(m.swap_perspective().swap_perspective(), m);
            assert_eq!(
                m.swap_perspective(),
                e.strategy.swap_perspective().to_memory_one()
            );
        }
    }

    #[test]
    fn noise_examples() {
        let grim = DeterministicStrategy::named(NamedStrategy::Grim).to_memory_one();
        let noisy = grim.apply_noise(0.01).unwrap().effective();
        let expect = [0.99, 0.01, 0.01, 0.01];
        for (a, b) in noisy.probs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(grim.apply_noise(0.0).unwrap().effective(), grim);
        assert_eq!(grim.apply_noise(0.5).unwrap().effective().probs(), [0.5; 4]);
        assert_eq!(
            grim.apply_noise(1.5),
            Err(StrategyError::ProbabilityOutOfRange(1.5))
        );
    }

    #[test]
    fn complementary_noise_identity() {
        // e on p equals 1-e on 1-p.
        for e in [0.0, 0.01, 0.3, 0.5, 0.99] {
            for p in [0.0, 0.2, 0.7, 1.0] {
                let a = MemoryOneStrategy::new([p; 4]).unwrap().apply_noise(e).unwrap();
                let b = MemoryOneStrategy::new([1.0 - p; 4])
                    .unwrap()
                    .apply_noise(1.0 - e)
                    .unwrap();
                for (x, y) in a.effective().probs().iter().zip(b.effective().probs()) {
                    assert!((x - y).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn deterministic_sampling_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let alld = DeterministicStrategy::named(NamedStrategy::AllD).to_memory_one();
        let allc = DeterministicStrategy::named(NamedStrategy::AllC).to_memory_one();
        let wsls = DeterministicStrategy::named(NamedStrategy::Wsls);
        for _ in 0..1000 {
            for s in StateProfile::ALL {
                assert_eq!(alld.sample_action(s, &mut rng), Action::D);
                assert_eq!(allc.sample_action(s, &mut rng), Action::C);
                assert_eq!(wsls.to_memory_one().sample_action(s, &mut rng), wsls.action(s));
            }
        }
    }

    #[test]
    fn fair_coin_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let half = MemoryOneStrategy::new([0.5; 4]).unwrap();
        let n = 1_000_000;
        let c = (0..n)
            .filter(|_| half.sample_action(StateProfile::CC, &mut rng) == Action::C)
            .count();
        let freq = c as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.002, "{freq}");
    }

    #[test]
    fn parsing() {
        let s: DeterministicStrategy = "wsls".parse().unwrap();
        assert_eq!(s.bit_string(), "1001");
        let s: DeterministicStrategy = "1010".parse().unwrap();
        assert_eq!(s.name(), Some(NamedStrategy::Tft));
        assert_eq!(
            "AREPEAT".parse::<DeterministicStrategy>().unwrap().bit_string(),
            "0011"
        );
        let err = "nice".parse::<DeterministicStrategy>().unwrap_err();
        assert!(err.to_string().contains("ALLC"));
        let m: MemoryOneStrategy = "0.5,0.25,1,0".parse().unwrap();
        assert_eq!(m.probs(), [0.5, 0.25, 1.0, 0.0]);
        assert!("0.5,2,1,0".parse::<MemoryOneStrategy>().is_err());
        assert_eq!(m.to_string(), "0.5,0.25,1,0");
        assert_eq!("GRIM".parse::<MemoryOneStrategy>().unwrap().to_string(), "1000");
    }

    #[test]
    fn case_ids_round_trip() {
        for n in 1..=16 {
            assert_eq!(DeterministicStrategy::from_case(n).unwrap().case_id(), n);
        }
        assert!(DeterministicStrategy::from_case(0).is_err());
        assert!(DeterministicStrategy::from_case(17).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]
            #[test]
            fn swap_involution_random(p in proptest::array::uniform4(0.0f64..=1.0)) {
                let s = MemoryOneStrategy::new(p).unwrap();
                prop_assert_eq!(s.swap_perspective().swap_perspective(), s);
            }
        }
    }
}
