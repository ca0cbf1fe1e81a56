//! Label-flip backdoor poisoning with a pixel-patch trigger.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Dataset;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, Stream};

/// How the trigger rectangle is painted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerPattern {
    /// Every pixel set to `fill`.
    #[default]
    Solid,
    /// Pixels alternate between `fill` and `1 - fill`, starting with `fill`
    /// at the patch's top-left corner.
    Checkerboard,
}

/// A rectangle written over every channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trigger {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
    pub fill: f64,
    #[serde(default)]
    pub pattern: TriggerPattern,
}

impl Default for Trigger {
    fn default() -> Self {
        Self {
            row: 0,
            col: 0,
            height: 3,
            width: 3,
            fill: 1.0,
            pattern: TriggerPattern::Solid,
        }
    }
}

impl Trigger {
    pub fn validate(&self, image_shape: &[usize]) -> Result<()> {
        let &[_, h, w] = image_shape else {
            return Err(Error::Backdoor(format!(
                "trigger needs [channels, height, width] images, got {image_shape:?}"
            )));
        };
        if self.height == 0
            || self.width == 0
            || self.row + self.height > h
            || self.col + self.width > w
        {
            return Err(Error::Backdoor(format!(
                "trigger {}x{} at ({}, {}) does not fit a {h}x{w} image",
                self.height, self.width, self.row, self.col
            )));
        }
        if !(0.0..=1.0).contains(&self.fill) {
            return Err(Error::Backdoor(format!(
                "trigger fill {} outside [0, 1]",
                self.fill
            )));
        }
        Ok(())
    }

    /// Overwrites the patch in one `[C, H, W]` sample.
    pub fn apply(&self, sample: &mut [f64], image_shape: &[usize]) {
        let (c, h, w) = (image_shape[0], image_shape[1], image_shape[2]);
        for ch in 0..c {
            for y in self.row..self.row + self.height {
                let base = ch * h * w + y * w;
                for x in self.col..self.col + self.width {
                    sample[base + x] = self.value_at(y, x);
                }
            }
        }
    }

    /// Value written at image position `(y, x)` inside the patch.
    pub fn value_at(&self, y: usize, x: usize) -> f64 {
        match self.pattern {
            TriggerPattern::Solid => self.fill,
            TriggerPattern::Checkerboard if (y - self.row + x - self.col).is_multiple_of(2) => {
                self.fill
            }
            TriggerPattern::Checkerboard => 1.0 - self.fill,
        }
    }

    pub fn contains(&self, y: usize, x: usize) -> bool {
        (self.row..self.row + self.height).contains(&y)
            && (self.col..self.col + self.width).contains(&x)
    }
}

/// A non-negative rational in `[0, 1]`, written `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rate {
    num: u64,
    den: u64,
}

impl Rate {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::InvalidArgument(format!(
                "rate {num}/{den} is not in [0, 1]"
            )));
        }
        Ok(Self { num, den })
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Rate per client when the same malicious data is shared by `clients`.
    pub fn split(&self, clients: usize) -> Rate {
        reduce(self.num, self.den * clients as u64)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn reduce(num: u64, den: u64) -> Rate {
    let g = gcd(num, den).max(1);
    Rate {
        num: num / g,
        den: den / g,
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Rate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("rate {s:?} is not of the form num/den"));
        let (n, d) = s.trim().split_once('/').ok_or_else(bad)?;
        let num = n.trim().parse().map_err(|_| bad())?;
        let den = d.trim().parse().map_err(|_| bad())?;
        Rate::new(num, den)
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackdoorSpec {
    #[serde(default = "default_source")]
    pub source_class: usize,
    #[serde(default = "default_target")]
    pub target_class: usize,
    #[serde(default)]
    pub trigger: Trigger,
    /// Poisoned share of a single malicious client's data. With `k`
    /// malicious clients each one receives `malicious_rate / k`.
    #[serde(default = "default_rate")]
    pub malicious_rate: Rate,
    /// Fraction of a malicious client's source-class samples that carry the
    /// trigger (at least one sample is always chosen).
    #[serde(default = "default_fraction")]
    pub trigger_fraction: f64,
}

fn default_source() -> usize {
    1
}
fn default_target() -> usize {
    2
}
fn default_rate() -> Rate {
    Rate { num: 1, den: 3 }
}
fn default_fraction() -> f64 {
    1.0
}

impl Default for BackdoorSpec {
    fn default() -> Self {
        Self {
            source_class: default_source(),
            target_class: default_target(),
            trigger: Trigger::default(),
            malicious_rate: default_rate(),
            trigger_fraction: default_fraction(),
        }
    }
}

impl BackdoorSpec {
    pub fn validate(&self, image_shape: &[usize], num_classes: usize) -> Result<()> {
        if self.source_class == self.target_class {
            return Err(Error::Backdoor(
                "source and target class must differ".into(),
            ));
        }
        if self.source_class >= num_classes || self.target_class >= num_classes {
            return Err(Error::Backdoor(format!(
                "classes {} -> {} out of range for {num_classes} classes",
                self.source_class, self.target_class
            )));
        }
        if !(self.trigger_fraction > 0.0 && self.trigger_fraction <= 1.0) {
            return Err(Error::Backdoor(format!(
                "trigger_fraction must lie in (0, 1], got {}",
                self.trigger_fraction
            )));
        }
        self.trigger.validate(image_shape)
    }
}

/// Client datasets after poisoning.
#[derive(Debug, Clone, PartialEq)]
pub struct Poisoned {
    pub datasets: Vec<Dataset>,
    /// Positions of poisoned samples inside each malicious client's dataset.
    pub malicious_indices: BTreeMap<usize, Vec<usize>>,
}

fn round_div(a: u64, b: u64) -> u64 {
    (2 * a + b) / (2 * b)
}

/// Poisons the datasets of `malicious_ids`.
///
/// For each malicious client a seeded `trigger_fraction` of its source-class
/// samples is designated. Designated samples get the trigger and the target
/// label in place; whole-sample copies of them are then appended until the
/// poisoned share reaches the per-client rate (rounded to the nearest
/// sample). When the rate is reachable without copies only that many
/// designated samples are poisoned. A per-client rate of 1 drops all clean
/// samples and fills the client's original size with copies.
pub fn inject_backdoor(
    clients: &[Dataset],
    spec: &BackdoorSpec,
    malicious_ids: &[usize],
    seed: u64,
) -> Result<Poisoned> {
    let mut datasets = clients.to_vec();
    let mut malicious_indices = BTreeMap::new();
    if malicious_ids.is_empty() || spec.malicious_rate.is_zero() {
        return Ok(Poisoned {
            datasets,
            malicious_indices,
        });
    }
    let rate = spec.malicious_rate.split(malicious_ids.len());
    for &id in malicious_ids {
        let ds = clients
            .get(id)
            .ok_or_else(|| Error::Backdoor(format!("malicious client {id} does not exist")))?;
        spec.validate(ds.sample_shape(), ds.num_classes())?;
        if malicious_indices.contains_key(&id) {
            return Err(Error::Backdoor(format!(
                "malicious client {id} listed twice"
            )));
        }
        let (poisoned, idx) = poison_client(
            ds,
            spec,
            rate,
            derive_seed(seed, Stream::Trigger, id as u64, 0),
        )
        .map_err(|e| match e {
            Error::Backdoor(m) => Error::Backdoor(format!("client {id}: {m}")),
            other => other,
        })?;
        datasets[id] = poisoned;
        malicious_indices.insert(id, idx);
    }
    Ok(Poisoned {
        datasets,
        malicious_indices,
    })
}

fn poison_client(
    ds: &Dataset,
    spec: &BackdoorSpec,
    rate: Rate,
    seed: u64,
) -> Result<(Dataset, Vec<usize>)> {
    let shape = ds.sample_shape().to_vec();
    let mut source: Vec<usize> = (0..ds.len())
        .filter(|&i| ds.labels()[i] == spec.source_class)
        .collect();
    if source.is_empty() {
        return Err(Error::Backdoor(format!(
            "holds no samples of source class {}",
            spec.source_class
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    source.shuffle(&mut rng);
    let designated_count =
        ((spec.trigger_fraction * source.len() as f64).ceil() as usize).clamp(1, source.len());
    let designated = &source[..designated_count];

    let triggered = |i: usize| {
        let mut px = ds.sample(i).to_vec();
        spec.trigger.apply(&mut px, &shape);
        (px, spec.target_class)
    };

    let n = ds.len() as u64;
    let (r, q) = (rate.num(), rate.den());
    let mut samples = ds.to_samples();

    if rate.is_one() {
        let out: Vec<_> = (0..ds.len())
            .map(|k| triggered(designated[k % designated.len()]))
            .collect();
        let idx = (0..out.len()).collect();
        return Ok((Dataset::from_samples(&shape, out, ds.num_classes())?, idx));
    }

    let in_place = round_div(r * n, q);
    if in_place == 0 {
        return Err(Error::Backdoor(format!(
            "rate {rate} is unreachable with {n} samples (rounds to zero poisoned samples)"
        )));
    }
    let mut idx: Vec<usize>;
    if in_place as usize <= designated.len() {
        idx = designated[..in_place as usize].to_vec();
        for &i in &idx {
            samples[i] = triggered(i);
        }
    } else {
        for &i in designated {
            samples[i] = triggered(i);
        }
        idx = designated.to_vec();
        let clean = n - designated.len() as u64;
        let target = round_div(r * clean, q - r).max(designated.len() as u64) as usize;
        for k in 0..target - designated.len() {
            idx.push(samples.len());
            samples.push(triggered(designated[k % designated.len()]));
        }
    }
    idx.sort_unstable();
    Ok((
        Dataset::from_samples(&shape, samples, ds.num_classes())?,
        idx,
    ))
}

/// Every source-class test sample with the trigger applied, labelled as the
/// target class.
pub fn make_backdoor_testset(test: &Dataset, spec: &BackdoorSpec) -> Result<Dataset> {
    spec.validate(test.sample_shape(), test.num_classes())?;
    let shape = test.sample_shape().to_vec();
    let samples: Vec<_> = (0..test.len())
        .filter(|&i| test.labels()[i] == spec.source_class)
        .map(|i| {
            let mut px = test.sample(i).to_vec();
            spec.trigger.apply(&mut px, &shape);
            (px, spec.target_class)
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::Backdoor(format!(
            "test set has no samples of source class {}",
            spec.source_class
        )));
    }
    Dataset::from_samples(&shape, samples, test.num_classes())
}
