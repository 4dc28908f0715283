//! Successive-cancellation decoding, the checker-based adaptive decoder, the
//! universal binary compressor and its container format.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::measures::{binary_dist_with_entropy, Dist};
use crate::polar_core::{argmax_smallest, transform_in_place, ScWorkspace, SymbolBlock};
use crate::storage::{sample_iid, substream, Reader, StorageSet};

/// Candidate source models for the adaptive decoder.
#[derive(Clone, Debug)]
pub struct ModelSet {
    models: Vec<Dist>,
}

impl ModelSet {
    pub fn new(models: Vec<Dist>) -> Result<Self> {
        let Some(first) = models.first() else {
            return invalid("model set is empty");
        };
        if models.iter().any(|m| m.alphabet() != first.alphabet()) {
            return invalid("models have different alphabets");
        }
        Ok(Self { models })
    }

    pub fn models(&self) -> &[Dist] {
        &self.models
    }

    pub fn alphabet(&self) -> usize {
        self.models[0].alphabet()
    }
}

/// Output of a successive-cancellation pass: the completed `u` and `x = u G_n^{-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub u: Vec<u32>,
    pub x: Vec<u32>,
}

/// Fixes observed components and sets every other `u_i` to the argmax of its
/// conditional law, ties toward the smallest symbol.
pub(crate) fn sc_decode(p: &Dist, observed: &[Option<u32>], ws: &mut ScWorkspace) -> Result<Decoded> {
    let mut u = vec![0u32; observed.len()];
    let x = ws
        .sweep(p, |i, law| {
            let s = observed[i].unwrap_or_else(|| argmax_smallest(law));
            u[i] = s;
            Some(s)
        })?
        .expect("decision rule never stops");
    Ok(Decoded { u, x })
}

fn observed_from(s: &StorageSet, values: &[u32], extra: &[(usize, u32)]) -> Result<Vec<Option<u32>>> {
    if values.len() != s.len() {
        return invalid(format!(
            "{} stored symbols supplied for a storage set of size {}",
            values.len(),
            s.len()
        ));
    }
    let a = s.alphabet() as u32;
    let mut obs = vec![None; s.block_len()];
    for (&i, &v) in s.indices().iter().zip(values) {
        if v >= a {
            return invalid(format!("stored symbol {v} outside Z_{a}"));
        }
        obs[i] = Some(v);
    }
    for &(i, v) in extra {
        if v >= a {
            return invalid(format!("checker symbol {v} outside Z_{a}"));
        }
        obs[i] = Some(v);
    }
    Ok(obs)
}

/// Successive-cancellation decoding of `x` from `u[S]` under the prior `p`.
pub fn polar_dec(p: &Dist, s: &StorageSet, u_s: &[u32]) -> Result<SymbolBlock> {
    Ok(SymbolBlock::new(p.alphabet(), polar_dec_full(p, s, u_s)?.x)?)
}

/// [`polar_dec`] returning both `u` and `x`.
pub fn polar_dec_full(p: &Dist, s: &StorageSet, u_s: &[u32]) -> Result<Decoded> {
    if p.alphabet() != s.alphabet() {
        return invalid("model and storage set alphabets differ");
    }
    let obs = observed_from(s, u_s, &[])?;
    sc_decode(p, &obs, &mut ScWorkspace::new(p.alphabet(), s.block_len())?)
}

/// Which observations the winning model decodes with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AdaptVariant {
    /// `u[S]` only.
    #[default]
    StorageOnly,
    /// `u[S ∪ T]`.
    WithCheckers,
}

#[derive(Clone, Debug)]
pub struct AdaptOutcome {
    pub x: SymbolBlock,
    pub model: usize,
    /// Hamming distance on the checkers, per model.
    pub scores: Vec<usize>,
    /// Number of models sharing the minimal score.
    pub tied: usize,
}

/// Decodes `u[S]` under every model, keeps the one whose reconstruction
/// agrees best with the checker symbols `u[T]`; ties are broken uniformly at
/// random with a generator seeded by `seed`.
pub fn polar_dec_adapt(
    models: &ModelSet,
    s: &StorageSet,
    checkers: &[usize],
    u_s: &[u32],
    u_t: &[u32],
    seed: u64,
    variant: AdaptVariant,
) -> Result<AdaptOutcome> {
    let a = models.alphabet();
    if a != s.alphabet() {
        return invalid("model and storage set alphabets differ");
    }
    if checkers.len() != u_t.len() {
        return invalid("one checker symbol per checker index is required");
    }
    if let Some(&i) = checkers.iter().find(|&&i| i >= s.block_len() || s.contains(i)) {
        return invalid(format!("checker index {i} is out of range or stored"));
    }
    let obs = observed_from(s, u_s, &[])?;
    let mut ws = ScWorkspace::new(a, s.block_len())?;
    let mut decoded = Vec::with_capacity(models.models.len());
    let mut scores = Vec::with_capacity(models.models.len());
    for m in &models.models {
        let d = sc_decode(m, &obs, &mut ws)?;
        scores.push(checkers.iter().zip(u_t).filter(|(&i, &v)| d.u[i] != v).count());
        decoded.push(d);
    }
    let best = *scores.iter().min().expect("nonempty model set");
    let winners: Vec<usize> = (0..scores.len()).filter(|&j| scores[j] == best).collect();
    let model = if winners.len() == 1 {
        winners[0]
    } else {
        winners[ChaCha8Rng::seed_from_u64(seed).gen_range(0..winners.len())]
    };
    let x = match variant {
        AdaptVariant::StorageOnly => std::mem::take(&mut decoded[model].x),
        AdaptVariant::WithCheckers => {
            let extra: Vec<(usize, u32)> = checkers.iter().copied().zip(u_t.iter().copied()).collect();
            let obs = observed_from(s, u_s, &extra)?;
            sc_decode(&models.models[model], &obs, &mut ws)?.x
        }
    };
    Ok(AdaptOutcome {
        x: SymbolBlock::new(a, x)?,
        model,
        scores,
        tied: winners.len(),
    })
}

/// Output of the universal compressor for one block.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedBlock {
    pub a: usize,
    pub n: usize,
    pub rate_param: f64,
    pub delta: f64,
    pub storage_bitmap: Vec<bool>,
    pub stored_symbols: Vec<u32>,
    pub checker_indices: Vec<usize>,
    pub checker_symbols: Vec<u32>,
}

impl CompressedBlock {
    pub fn stored_indices(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.storage_bitmap[i]).collect()
    }

    /// `(|S| + |T|) / n`.
    pub fn rate(&self) -> f64 {
        (self.stored_symbols.len() + self.checker_symbols.len()) as f64 / self.n as f64
    }

    fn validate(&self) -> Result<()> {
        crate::measures::check_prime(self.a)?;
        crate::polar_core::check_block_len(self.n)?;
        if self.storage_bitmap.len() != self.n {
            return invalid("bitmap length differs from block length");
        }
        let stored = self.storage_bitmap.iter().filter(|&&b| b).count();
        if stored != self.stored_symbols.len() {
            return invalid("stored symbol count differs from bitmap popcount");
        }
        if self.checker_indices.len() != self.checker_symbols.len() {
            return invalid("checker index and symbol counts differ");
        }
        if self
            .checker_indices
            .iter()
            .any(|&i| i >= self.n || self.storage_bitmap[i])
        {
            return invalid("checker index out of range or stored");
        }
        if self.checker_indices.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("checker indices must be strictly increasing");
        }
        let a = self.a as u32;
        if self.stored_symbols.iter().chain(&self.checker_symbols).any(|&v| v >= a) {
            return invalid("symbol outside the alphabet");
        }
        Ok(())
    }
}

/// The two candidate models `p_0(R), p_1(R)` of entropy `R` bits.
pub fn universal_models(rate_param: f64) -> Result<ModelSet> {
    ModelSet::new(vec![
        binary_dist_with_entropy(rate_param, 0)?,
        binary_dist_with_entropy(rate_param, 1)?,
    ])
}

/// Compresses a binary block: stores `u[S]` for the storage set `s` of
/// `p_0(R)`, plus the checker `u_n` unless it is already stored.
pub fn universal_compress(x: &SymbolBlock, rate_param: f64, s: &StorageSet) -> Result<CompressedBlock> {
    if x.alphabet() != 2 || s.alphabet() != 2 {
        return Err(Error::UnsupportedAlphabet {
            a: x.alphabet().max(s.alphabet()),
            expected: "2",
        });
    }
    if x.len() != s.block_len() {
        return invalid("block length differs from the storage set's");
    }
    if !(0.0..=1.0).contains(&rate_param) {
        return invalid(format!("rate parameter {rate_param} outside [0, 1]"));
    }
    let n = x.len();
    let mut u = x.symbols().to_vec();
    transform_in_place(&mut u, 2);
    let (checker_indices, checker_symbols) = if s.contains(n - 1) {
        (vec![], vec![])
    } else {
        (vec![n - 1], vec![u[n - 1]])
    };
    Ok(CompressedBlock {
        a: 2,
        n,
        rate_param,
        delta: s.delta(),
        storage_bitmap: s.mask(),
        stored_symbols: s.indices().iter().map(|&i| u[i]).collect(),
        checker_indices,
        checker_symbols,
    })
}

/// Reconstructs a block with the adaptive decoder over `p_0(R), p_1(R)`.
pub fn universal_decompress(block: &CompressedBlock, seed: u64) -> Result<AdaptOutcome> {
    block.validate()?;
    if block.a != 2 {
        return Err(Error::UnsupportedAlphabet {
            a: block.a,
            expected: "2",
        });
    }
    let s = StorageSet::new(
        block.a,
        block.n,
        block.delta,
        block.stored_indices(),
        crate::storage::Provenance::MonteCarlo(None),
    )?;
    polar_dec_adapt(
        &universal_models(block.rate_param)?,
        &s,
        &block.checker_indices,
        &block.stored_symbols,
        &block.checker_symbols,
        seed,
        AdaptVariant::StorageOnly,
    )
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.96f64;
    let n = trials as f64;
    let phat = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (phat + z * z / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug)]
pub struct MismatchReport {
    pub errors: usize,
    pub trials: usize,
    pub rate: f64,
    /// 95% Wilson interval.
    pub ci: (f64, f64),
}

impl MismatchReport {
    /// Half-width of the confidence interval.
    pub fn radius(&self) -> f64 {
        0.5 * (self.ci.1 - self.ci.0)
    }
}

/// Empirical `P_e(p1 | p2)`: blocks drawn i.i.d. `p2`, stored on `s` (the
/// storage set of `p1`) and decoded under `p1`.
pub fn estimate_mismatch_error(
    p1: &Dist,
    p2: &Dist,
    s: &StorageSet,
    trials: usize,
    seed: u64,
) -> Result<MismatchReport> {
    if p1.alphabet() != p2.alphabet() || p1.alphabet() != s.alphabet() {
        return invalid("alphabets differ");
    }
    let n = s.block_len();
    let a = p1.alphabet();
    let errors = (0..trials)
        .into_par_iter()
        .map_init(
            || ScWorkspace::new(a, n),
            |ws, t| -> Result<usize> {
                let ws = ws.as_mut().map_err(|e| Error::InvalidArgument(e.to_string()))?;
                let mut rng = substream(seed, t as u64);
                let x = sample_iid(p2, n, &mut rng);
                let mut u = x.clone();
                transform_in_place(&mut u, a as u32);
                let mut obs = vec![None; n];
                for &i in s.indices() {
                    obs[i] = Some(u[i]);
                }
                Ok(usize::from(sc_decode(p1, &obs, ws)?.x != x))
            },
        )
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(MismatchReport {
        errors,
        trials,
        rate: if trials == 0 { 0.0 } else { errors as f64 / trials as f64 },
        ci: wilson_interval(errors, trials),
    })
}

/// Outcome of a batch of universal round trips.
#[derive(Clone, Debug)]
pub struct RoundTripReport {
    pub trials: usize,
    pub successes: usize,
    /// Successful trials in which the chosen model had the source's bias.
    pub correct_side: usize,
    pub rate: f64,
    pub ci: (f64, f64),
}

/// Compresses and reconstructs `trials` blocks drawn i.i.d. `[1 - theta, theta]`.
pub fn round_trip_trials(
    theta: f64,
    rate_param: f64,
    s: &StorageSet,
    trials: usize,
    seed: u64,
) -> Result<RoundTripReport> {
    let source = Dist::bernoulli(theta)?;
    let n = s.block_len();
    let expected_model = usize::from(theta > 0.5);
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(bool, bool, f64)> {
            let mut rng = substream(seed, t as u64);
            let x = SymbolBlock::new(2, sample_iid(&source, n, &mut rng))?;
            let block = universal_compress(&x, rate_param, s)?;
            let out = universal_decompress(&block, seed.wrapping_add(t as u64))?;
            let ok = out.x == x;
            Ok((ok, ok && out.model == expected_model, block.rate()))
        })
        .collect::<Result<Vec<_>>>()?;
    let successes = outcomes.iter().filter(|o| o.0).count();
    Ok(RoundTripReport {
        trials,
        successes,
        correct_side: outcomes.iter().filter(|o| o.1).count(),
        rate: outcomes.first().map_or(0.0, |o| o.2),
        ci: wilson_interval(successes, trials),
    })
}

const PLRC_MAGIC: &[u8; 4] = b"PLRC";
const PLRC_VERSION: u8 = 1;

/// Bits per packed symbol, `ceil(log2 a)`.
pub(crate) fn symbol_width(a: usize) -> u32 {
    usize::BITS - (a - 1).leading_zeros()
}

pub(crate) fn pack_symbols(symbols: &[u32], width: u32, out: &mut Vec<u8>) {
    let start = out.len();
    out.resize(start + (symbols.len() * width as usize).div_ceil(8), 0);
    let mut bit = 0usize;
    for &s in symbols {
        for b in 0..width {
            if (s >> b) & 1 == 1 {
                out[start + (bit >> 3)] |= 1 << (bit & 7);
            }
            bit += 1;
        }
    }
}

fn unpack_symbols(r: &mut Reader, count: usize, a: usize, what: &str) -> Result<Vec<u32>> {
    let width = symbol_width(a);
    let nbytes = (count * width as usize).div_ceil(8);
    let at = r.pos;
    let bytes = r.take(nbytes, what)?;
    let mut out = Vec::with_capacity(count);
    let mut bit = 0usize;
    for _ in 0..count {
        let mut s = 0u32;
        for b in 0..width {
            s |= u32::from((bytes[bit >> 3] >> (bit & 7)) & 1) << b;
            bit += 1;
        }
        if s as usize >= a {
            return r.fail(at + ((bit - 1) >> 3), format!("{what}: symbol {s} outside Z_{a}"));
        }
        out.push(s);
    }
    if bit & 7 != 0 && bytes[bit >> 3] >> (bit & 7) != 0 {
        return r.fail(at + (bit >> 3), format!("{what}: nonzero padding bits"));
    }
    Ok(out)
}

/// Serializes to the PLRC container, with a trailing CRC-32.
pub fn encode_block(b: &CompressedBlock) -> Result<Vec<u8>> {
    b.validate()?;
    if b.checker_indices.len() > u16::MAX as usize {
        return invalid("too many checkers for the container");
    }
    let mut out = Vec::new();
    out.extend_from_slice(PLRC_MAGIC);
    out.push(PLRC_VERSION);
    out.extend_from_slice(&(b.a as u16).to_le_bytes());
    out.extend_from_slice(&(b.n as u32).to_le_bytes());
    out.extend_from_slice(&b.rate_param.to_le_bytes());
    out.extend_from_slice(&b.delta.to_le_bytes());
    out.push(0);
    let start = out.len();
    out.resize(start + b.n.div_ceil(8), 0);
    for (i, &set) in b.storage_bitmap.iter().enumerate() {
        if set {
            out[start + (i >> 3)] |= 1 << (i & 7);
        }
    }
    let width = symbol_width(b.a);
    out.extend_from_slice(&(b.stored_symbols.len() as u32).to_le_bytes());
    pack_symbols(&b.stored_symbols, width, &mut out);
    out.extend_from_slice(&(b.checker_indices.len() as u16).to_le_bytes());
    for &i in &b.checker_indices {
        out.extend_from_slice(&(i as u32).to_le_bytes());
    }
    pack_symbols(&b.checker_symbols, width, &mut out);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

pub fn decode_block(bytes: &[u8]) -> Result<CompressedBlock> {
    let mut r = Reader::new(bytes);
    r.expect_magic(PLRC_MAGIC, PLRC_VERSION)?;
    let (a, n) = r.alphabet_and_len()?;
    let at = r.pos;
    let rate_param = r.f64("rate parameter")?;
    if !(0.0..=1.0).contains(&rate_param) {
        return r.fail(at, format!("rate parameter {rate_param} outside [0, 1]"));
    }
    let at = r.pos;
    let delta = r.f64("delta")?;
    if !(delta > 0.0 && delta < 1.0) {
        return r.fail(at, format!("delta {delta} outside (0, 1)"));
    }
    let at = r.pos;
    let mode = r.u8("storage-set mode")?;
    if mode != 0 {
        return r.fail(at, format!("unsupported storage-set mode {mode}"));
    }
    let at = r.pos;
    let bitmap = r.take(n.div_ceil(8), "bitmap")?;
    let storage_bitmap: Vec<bool> = (0..n).map(|i| (bitmap[i >> 3] >> (i & 7)) & 1 == 1).collect();
    if n & 7 != 0 && bitmap[n >> 3] >> (n & 7) != 0 {
        return r.fail(at + (n >> 3), "bitmap bits set beyond the block length");
    }
    let popcount = storage_bitmap.iter().filter(|&&b| b).count();
    let at = r.pos;
    let count = r.u32("stored-symbol count")? as usize;
    if count != popcount {
        return r.fail(at, format!("stored-symbol count {count} differs from bitmap popcount {popcount}"));
    }
    let stored_symbols = unpack_symbols(&mut r, count, a, "stored symbols")?;
    let checkers = r.u16("checker count")? as usize;
    let mut checker_indices: Vec<usize> = Vec::with_capacity(checkers);
    for _ in 0..checkers {
        let at = r.pos;
        let i = r.u32("checker index")? as usize;
        if i >= n || storage_bitmap[i] || checker_indices.last().is_some_and(|&p| p >= i) {
            return r.fail(at, format!("checker index {i} out of range, stored, or out of order"));
        }
        checker_indices.push(i);
    }
    let checker_symbols = unpack_symbols(&mut r, checkers, a, "checker symbols")?;
    let body_end = r.pos;
    let crc = r.u32("checksum")?;
    if r.remaining() != 0 {
        return r.fail(r.pos, "trailing bytes");
    }
    if crc32fast::hash(&bytes[..body_end]) != crc {
        return r.fail(body_end, "checksum mismatch");
    }
    Ok(CompressedBlock {
        a,
        n,
        rate_param,
        delta,
        storage_bitmap,
        stored_symbols,
        checker_indices,
        checker_symbols,
    })
}
