//! Storage sets `S = {i : H(U_i | U^{i-1}) >= delta}` by exact enumeration,
//! Monte-Carlo estimation, or the binary erasure proxy.
//!
//! Indices are zero-based throughout the API and on the wire.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::export::{fmt12, Csv};
use crate::measures::Dist;
use crate::polar_core::{check_block_len, exact_joint_conditionals, transform_in_place, ScWorkspace};

/// Parameters of a Monte-Carlo storage-set estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McRecord {
    pub samples: usize,
    pub seed: u64,
    pub guard: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    Exact,
    /// The record is `None` for sets read back from the wire format, which
    /// stores only the tag.
    MonteCarlo(Option<McRecord>),
    Bec,
}

impl Provenance {
    fn tag(&self) -> u8 {
        match self {
            Provenance::Exact => 0,
            Provenance::MonteCarlo(_) => 1,
            Provenance::Bec => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::MonteCarlo(_) => "monte_carlo",
            Provenance::Bec => "bec",
        }
    }
}

/// Per-index conditional entropy with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyEstimate {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StorageSet {
    a: usize,
    n: usize,
    delta: f64,
    indices: Vec<usize>,
    provenance: Provenance,
    estimates: Option<Vec<EntropyEstimate>>,
}

impl StorageSet {
    pub fn new(
        a: usize,
        n: usize,
        delta: f64,
        indices: Vec<usize>,
        provenance: Provenance,
    ) -> Result<Self> {
        crate::measures::check_prime(a)?;
        check_block_len(n)?;
        check_delta(delta)?;
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("storage indices must be strictly increasing");
        }
        if indices.last().is_some_and(|&i| i >= n) {
            return invalid(format!("storage index outside [0, {n})"));
        }
        Ok(Self {
            a,
            n,
            delta,
            indices,
            provenance,
            estimates: None,
        })
    }

    /// Every index of the block.
    pub fn full(a: usize, n: usize, delta: f64) -> Result<Self> {
        Self::new(a, n, delta, (0..n).collect(), Provenance::Exact)
    }

    pub fn with_estimates(mut self, estimates: Vec<EntropyEstimate>) -> Self {
        self.estimates = Some(estimates);
        self
    }

    pub fn alphabet(&self) -> usize {
        self.a
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn estimates(&self) -> Option<&[EntropyEstimate]> {
        self.estimates.as_deref()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn rate(&self) -> f64 {
        self.indices.len() as f64 / self.n as f64
    }

    /// Membership mask of length `n`.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n];
        for &i in &self.indices {
            m[i] = true;
        }
        m
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta {delta} outside (0, 1)"));
    }
    Ok(())
}

fn threshold(estimates: &[EntropyEstimate], cut: impl Fn(&EntropyEstimate) -> f64) -> Vec<usize> {
    estimates
        .iter()
        .enumerate()
        .filter(|(_, e)| e.mean >= cut(e))
        .map(|(i, _)| i)
        .collect()
}

pub fn storage_set_exact(p: &Dist, n: usize, delta: f64) -> Result<StorageSet> {
    check_delta(delta)?;
    let h = exact_joint_conditionals(p, n)?;
    let estimates: Vec<EntropyEstimate> = h
        .iter()
        .map(|&mean| EntropyEstimate { mean, stderr: 0.0 })
        .collect();
    // Absorb rounding in the chain-rule differences.
    let indices = threshold(&estimates, |_| delta - 1e-12);
    Ok(StorageSet::new(p.alphabet(), n, delta, indices, Provenance::Exact)?.with_estimates(estimates))
}

/// SplitMix64 finalizer, used to derive per-sample seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for substream `index` of `seed`. The seed is mixed before the
/// index is folded in, so nearby seeds do not share substreams.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(splitmix64(seed) ^ index))
}

/// Draws `n` symbols i.i.d. from `p` by inverse CDF.
pub fn sample_iid<R: Rng>(p: &Dist, n: usize, rng: &mut R) -> Vec<u32> {
    let last = p.alphabet() - 1;
    (0..n)
        .map(|_| {
            let r: f64 = rng.gen();
            let mut acc = 0.0;
            for (k, &v) in p.probs().iter().enumerate() {
                acc += v;
                if r < acc {
                    return k as u32;
                }
            }
            // Rounding left a sliver above the last cumulative sum.
            (0..=last).rev().find(|&k| p[k] > 0.0).unwrap_or(0) as u32
        })
        .collect()
}

const MC_CHUNK: usize = 32;

/// Unbiased per-index estimates of `H(U_i | U^{i-1})` in base `a` from
/// `samples` source blocks. Bitwise reproducible for a given seed.
///
/// Each sample contributes the entropy of the conditional law along its true
/// prefix rather than the surprisal of the drawn symbol: same mean, lower
/// variance, and bounded by 1, so rare symbols do not skew the standard error.
pub fn estimate_conditional_entropies_mc(
    p: &Dist,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<EntropyEstimate>> {
    check_block_len(n)?;
    if samples == 0 {
        return invalid("at least one sample is required");
    }
    let a = p.alphabet();
    let ln_a = (a as f64).ln();
    let chunks: Vec<(Vec<f64>, Vec<f64>)> = (0..samples.div_ceil(MC_CHUNK))
        .into_par_iter()
        .map(|c| -> Result<(Vec<f64>, Vec<f64>)> {
            let mut ws = ScWorkspace::new(a, n)?;
            let mut sum = vec![0.0; n];
            let mut sq = vec![0.0; n];
            for t in c * MC_CHUNK..((c + 1) * MC_CHUNK).min(samples) {
                let mut rng = substream(seed, t as u64);
                let mut u = sample_iid(p, n, &mut rng);
                transform_in_place(&mut u, a as u32);
                ws.sweep(p, |i, law| {
                    let v = law
                        .iter()
                        .filter(|&&q| q > 0.0)
                        .map(|&q| -q * q.ln())
                        .sum::<f64>()
                        / ln_a;
                    sum[i] += v;
                    sq[i] += v * v;
                    Some(u[i])
                })?;
            }
            Ok((sum, sq))
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for (s, q) in &chunks {
        for i in 0..n {
            sum[i] += s[i];
            sq[i] += q[i];
        }
    }
    let t = samples as f64;
    Ok((0..n)
        .map(|i| {
            let mean = sum[i] / t;
            let stderr = if samples > 1 {
                let var = ((sq[i] - t * mean * mean) / (t - 1.0)).max(0.0);
                (var / t).sqrt()
            } else {
                0.0
            };
            EntropyEstimate { mean, stderr }
        })
        .collect())
}

/// Thresholds Monte-Carlo estimates at `delta - guard * stderr`.
pub fn storage_set_mc(
    p: &Dist,
    n: usize,
    delta: f64,
    samples: usize,
    seed: u64,
    guard: f64,
) -> Result<StorageSet> {
    check_delta(delta)?;
    if !(guard >= 0.0) {
        return invalid(format!("guard {guard} must be nonnegative"));
    }
    let estimates = estimate_conditional_entropies_mc(p, n, samples, seed)?;
    storage_set_from_estimates(p.alphabet(), n, delta, estimates, samples, seed, guard)
}

/// Thresholds precomputed estimates; lets one estimate serve several guards.
pub fn storage_set_from_estimates(
    a: usize,
    n: usize,
    delta: f64,
    estimates: Vec<EntropyEstimate>,
    samples: usize,
    seed: u64,
    guard: f64,
) -> Result<StorageSet> {
    if estimates.len() != n {
        return invalid("one estimate per index is required");
    }
    let indices = threshold(&estimates, |e| delta - guard * e.stderr);
    let record = McRecord { samples, seed, guard };
    Ok(StorageSet::new(a, n, delta, indices, Provenance::MonteCarlo(Some(record)))?
        .with_estimates(estimates))
}

/// How a storage set is obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StorageMethod {
    Exact,
    MonteCarlo { samples: usize, seed: u64, guard: f64 },
    Bec,
    /// Exact when the oracle cap allows, Monte-Carlo otherwise.
    Auto { samples: usize, seed: u64, guard: f64 },
}

pub fn storage_set(p: &Dist, n: usize, delta: f64, method: StorageMethod) -> Result<StorageSet> {
    match method {
        StorageMethod::Exact => storage_set_exact(p, n, delta),
        StorageMethod::MonteCarlo { samples, seed, guard } => {
            storage_set_mc(p, n, delta, samples, seed, guard)
        }
        StorageMethod::Bec => storage_set_bec(p, n, delta),
        StorageMethod::Auto { samples, seed, guard } => {
            check_block_len(n)?;
            if crate::polar_core::check_oracle_cap(p.alphabet(), n).is_ok() {
                storage_set_exact(p, n, delta)
            } else {
                storage_set_mc(p, n, delta, samples, seed, guard)
            }
        }
    }
}

/// Erasure probabilities of the synthesized channels for a root erasure
/// probability `z`, in transform order.
pub fn bec_erasures(z_root: f64, n: usize) -> Result<Vec<f64>> {
    check_block_len(n)?;
    let m = n.trailing_zeros();
    // Leaf i takes the minus branch at depth d when bit m-1-d of i is 0.
    Ok((0..n)
        .map(|i| {
            (0..m).rev().fold(z_root, |z, bit| {
                if (i >> bit) & 1 == 0 {
                    2.0 * z - z * z
                } else {
                    z * z
                }
            })
        })
        .collect())
}

/// Bhattacharyya parameter `2 sqrt(p(0) p(1))` of a binary additive channel.
pub fn bhattacharyya(p: &Dist) -> Result<f64> {
    if p.alphabet() != 2 {
        return Err(Error::UnsupportedAlphabet {
            a: p.alphabet(),
            expected: "2",
        });
    }
    Ok(2.0 * (p[0] * p[1]).sqrt())
}

pub fn storage_set_bec(p: &Dist, n: usize, delta: f64) -> Result<StorageSet> {
    check_delta(delta)?;
    let z = bec_erasures(bhattacharyya(p)?, n)?;
    let estimates: Vec<EntropyEstimate> = z
        .iter()
        .map(|&mean| EntropyEstimate { mean, stderr: 0.0 })
        .collect();
    let indices = threshold(&estimates, |_| delta);
    Ok(StorageSet::new(2, n, delta, indices, Provenance::Bec)?.with_estimates(estimates))
}

fn check_compatible(s1: &StorageSet, s2: &StorageSet) -> Result<()> {
    if s1.a != s2.a || s1.n != s2.n || s1.delta != s2.delta {
        return invalid(format!(
            "storage sets differ in parameters: (a={}, n={}, delta={}) vs (a={}, n={}, delta={})",
            s1.a, s1.n, s1.delta, s2.a, s2.n, s2.delta
        ));
    }
    Ok(())
}

/// Union of storage sets sharing `(a, n, delta)`. The provenance of the
/// result is that of the first set when all agree, otherwise Monte-Carlo.
pub fn union_storage(sets: &[StorageSet]) -> Result<StorageSet> {
    let Some(first) = sets.first() else {
        return invalid("union of an empty list");
    };
    let mut mask = vec![false; first.n];
    let mut provenance = first.provenance;
    for s in sets {
        check_compatible(first, s)?;
        if s.provenance != provenance {
            provenance = Provenance::MonteCarlo(None);
        }
        for &i in &s.indices {
            mask[i] = true;
        }
    }
    let indices = (0..first.n).filter(|&i| mask[i]).collect();
    StorageSet::new(first.a, first.n, first.delta, indices, provenance)
}

/// `inner ⊆ outer`.
pub fn is_nested(inner: &StorageSet, outer: &StorageSet) -> Result<bool> {
    check_compatible(inner, outer)?;
    Ok(inner.indices.iter().all(|&i| outer.contains(i)))
}

const PSET_MAGIC: &[u8; 4] = b"PSET";
const PSET_VERSION: u8 = 1;

/// Serializes to the little-endian PSET format.
pub fn encode_storage_set(s: &StorageSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 4 * s.indices.len());
    out.extend_from_slice(PSET_MAGIC);
    out.push(PSET_VERSION);
    out.extend_from_slice(&(s.a as u16).to_le_bytes());
    out.extend_from_slice(&(s.n as u32).to_le_bytes());
    out.extend_from_slice(&s.delta.to_le_bytes());
    out.push(s.provenance.tag());
    out.extend_from_slice(&(s.indices.len() as u32).to_le_bytes());
    for &i in &s.indices {
        out.extend_from_slice(&(i as u32).to_le_bytes());
    }
    out
}

/// Little-endian cursor that reports the offset of the first bad field.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pub pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn take(&mut self, k: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < k {
            return Err(Error::Format {
                offset: self.pos,
                reason: format!("truncated {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    pub fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    pub fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    pub fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn fail<T>(&self, offset: usize, reason: impl Into<String>) -> Result<T> {
        Err(Error::Format {
            offset,
            reason: reason.into(),
        })
    }

    pub fn expect_magic(&mut self, magic: &[u8; 4], version: u8) -> Result<()> {
        if self.take(4, "magic")? != magic {
            return self.fail(0, format!("bad magic, expected {:?}", std::str::from_utf8(magic).unwrap()));
        }
        let v = self.u8("version")?;
        if v != version {
            return self.fail(4, format!("unsupported version {v}"));
        }
        Ok(())
    }

    /// Reads `u16 a, u32 n` and checks that `a` is prime and `n` a power of two.
    pub fn alphabet_and_len(&mut self) -> Result<(usize, usize)> {
        let at = self.pos;
        let a = self.u16("alphabet size")? as usize;
        if !crate::measures::is_prime(a) {
            return self.fail(at, format!("alphabet size {a} is not a prime"));
        }
        let at = self.pos;
        let n = self.u32("block length")? as usize;
        if n == 0 || !n.is_power_of_two() {
            return self.fail(at, format!("block length {n} is not a power of two"));
        }
        Ok((a, n))
    }
}

pub fn decode_storage_set(bytes: &[u8]) -> Result<StorageSet> {
    let mut r = Reader::new(bytes);
    r.expect_magic(PSET_MAGIC, PSET_VERSION)?;
    let (a, n) = r.alphabet_and_len()?;
    let at = r.pos;
    let delta = r.f64("delta")?;
    if !(delta > 0.0 && delta < 1.0) {
        return r.fail(at, format!("delta {delta} outside (0, 1)"));
    }
    let at = r.pos;
    let provenance = match r.u8("provenance")? {
        0 => Provenance::Exact,
        1 => Provenance::MonteCarlo(None),
        2 => Provenance::Bec,
        t => return r.fail(at, format!("unknown provenance tag {t}")),
    };
    let at = r.pos;
    let count = r.u32("index count")? as usize;
    if count > n {
        return r.fail(at, format!("index count {count} exceeds block length {n}"));
    }
    let mut indices = Vec::with_capacity(count);
    for _ in 0..count {
        let at = r.pos;
        let i = r.u32("index")? as usize;
        if i >= n || indices.last().is_some_and(|&prev| prev >= i) {
            return r.fail(at, format!("index {i} out of order or range"));
        }
        indices.push(i);
    }
    if r.remaining() != 0 {
        return r.fail(r.pos, "trailing bytes");
    }
    StorageSet::new(a, n, delta, indices, provenance)
}

/// `index,entropy,stderr` rows for the stored indices; the entropy columns
/// are empty when the set carries no estimates.
pub fn storage_csv(s: &StorageSet, params: &str) -> String {
    let mut csv = Csv::new(params, "index,entropy,stderr");
    for &i in &s.indices {
        let (h, se) = match &s.estimates {
            Some(e) => (fmt12(e[i].mean), fmt12(e[i].stderr)),
            None => (String::new(), String::new()),
        };
        csv.row(&[i.to_string(), h, se]);
    }
    csv.finish()
}
