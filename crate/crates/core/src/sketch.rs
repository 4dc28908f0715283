//! Deterministic polar sketching `phi = I_S G_n` for sparse signals over Z_a,
//! recovery by successive cancellation, and the brute-force search for the
//! smallest universal spike mass.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::codec::{polar_dec, polar_dec_adapt, AdaptOutcome, AdaptVariant, ModelSet};
use crate::error::{invalid, Error, Result};
use crate::measures::{entropy_a, eta, make_spike, sparse_extreme, Dist};
use crate::polar_core::{check_block_len, transform_in_place, SymbolBlock};
use crate::storage::{
    decode_storage_set, encode_storage_set, is_nested, storage_set, StorageMethod, StorageSet,
};

/// How the decoding spike is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchMethod {
    /// The sparsity spike `p_eps` itself.
    KnownDist,
    /// The `<_cp` projection of the sparse family.
    Pcp,
    /// Brute-force search, all hull probes.
    BrutA,
    /// Brute-force search, the single extreme probe.
    BrutB,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BrutVariant {
    A,
    B,
}

/// Parameters of the brute-force search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrutParams {
    pub eta_step: f64,
    /// Resolution of the hull discretization (Variant A).
    pub hull_grid: usize,
    /// Bisection instead of an upward scan.
    pub dichotomic: bool,
}

impl Default for BrutParams {
    fn default() -> Self {
        Self {
            eta_step: 0.005,
            hull_grid: 4,
            dichotomic: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SketchSpec {
    pub a: usize,
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub method: SketchMethod,
    /// Non-special mass of the decoding spike.
    pub eta: f64,
    pub decode_dist: Dist,
    pub storage: StorageSet,
    pub seed: Option<u64>,
}

impl SketchSpec {
    /// Number of measurements `m = |S|`.
    pub fn m(&self) -> usize {
        self.storage.len()
    }
}

fn check_sketch_args(a: usize, epsilon: f64, n: usize) -> Result<()> {
    sparse_extreme(a, epsilon)?;
    check_block_len(n)
}

fn method_seed(method: StorageMethod) -> Option<u64> {
    match method {
        StorageMethod::MonteCarlo { seed, .. } | StorageMethod::Auto { seed, .. } => Some(seed),
        _ => None,
    }
}

pub fn build_sketch_spec(
    a: usize,
    epsilon: f64,
    n: usize,
    delta: f64,
    method: SketchMethod,
    storage_method: StorageMethod,
    brut: BrutParams,
) -> Result<SketchSpec> {
    check_sketch_args(a, epsilon, n)?;
    let (mass, storage) = match method {
        SketchMethod::KnownDist => (epsilon, None),
        SketchMethod::Pcp => (eta(a, epsilon)?, None),
        SketchMethod::BrutA | SketchMethod::BrutB => {
            let variant = if method == SketchMethod::BrutA {
                BrutVariant::A
            } else {
                BrutVariant::B
            };
            let r = brut_univ_sketching(a, epsilon, n, delta, variant, brut, storage_method)?;
            (r.eta_star, Some(r.storage))
        }
    };
    let decode_dist = make_spike(a, 0, mass)?;
    let storage = match storage {
        Some(s) => s,
        None => storage_set(&decode_dist, n, delta, storage_method)?,
    };
    Ok(SketchSpec {
        a,
        n,
        epsilon,
        delta,
        method,
        eta: mass,
        decode_dist,
        storage,
        seed: method_seed(storage_method),
    })
}

/// `y = (x G_n)[S]`.
pub fn sketch(spec: &SketchSpec, x: &SymbolBlock) -> Result<Vec<u32>> {
    if x.alphabet() != spec.a || x.len() != spec.n {
        return invalid(format!(
            "signal over Z_{} of length {} does not match the spec (Z_{}, {})",
            x.alphabet(),
            x.len(),
            spec.a,
            spec.n
        ));
    }
    let mut u = x.symbols().to_vec();
    transform_in_place(&mut u, spec.a as u32);
    Ok(spec.storage.indices().iter().map(|&i| u[i]).collect())
}

pub fn recover(spec: &SketchSpec, y: &[u32]) -> Result<SymbolBlock> {
    if y.len() != spec.m() {
        return invalid(format!("{} measurements supplied, spec has {}", y.len(), spec.m()));
    }
    polar_dec(&spec.decode_dist, &spec.storage, y)
}

/// `n H(p_eps)` in base `a`: the measurement count for a known spike source.
pub fn measurement_count_formula(a: usize, epsilon: f64, n: usize) -> Result<f64> {
    Ok(n as f64 * entropy_a(&make_spike(a, 0, epsilon)?))
}

/// Points `(1 - eps) d_0 + eps sum_k w_k d_k` with `w` on a grid of
/// resolution `resolution` over the simplex of the `a - 1` extremes. With
/// `dedup`, one representative per orbit of the relabellings `k -> g k`,
/// which leave storage sets unchanged.
pub fn spa_hull_grid(a: usize, epsilon: f64, resolution: usize, dedup: bool) -> Result<Vec<Dist>> {
    sparse_extreme(a, epsilon)?;
    if resolution == 0 {
        return invalid("hull grid resolution must be at least 1");
    }
    let parts = a - 1;
    let mut comps = Vec::new();
    let mut cur = vec![0usize; parts];
    compositions(resolution, 0, &mut cur, &mut comps);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for w in comps {
        if dedup {
            let canon = (1..a)
                .map(|g| {
                    let mut img = vec![0usize; parts];
                    for (k, &wk) in w.iter().enumerate() {
                        img[((k + 1) * g) % a - 1] = wk;
                    }
                    img
                })
                .max()
                .expect("a >= 2");
            if !seen.insert(canon) {
                continue;
            }
        }
        let mut probs = vec![1.0 - epsilon];
        probs.extend(w.iter().map(|&k| epsilon * k as f64 / resolution as f64));
        out.push(Dist::new(probs)?);
    }
    Ok(out)
}

fn compositions(total: usize, pos: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == cur.len() {
        cur[pos] = total;
        out.push(cur.clone());
        return;
    }
    for k in (0..=total).rev() {
        cur[pos] = k;
        compositions(total - k, pos + 1, cur, out);
    }
}

#[derive(Clone, Debug)]
pub struct BrutResult {
    pub eta_star: f64,
    /// `eta(a, eps)`, the scan's upper end.
    pub eta_cp: f64,
    pub probes: Vec<Dist>,
    /// True when no scanned mass below `eta_cp` qualified.
    pub fell_back: bool,
    /// Storage set of the returned spike.
    pub storage: StorageSet,
    pub evaluations: usize,
}

/// Smallest spike mass in `[eps, eta(a, eps)]` (on a grid of step
/// `eta_step`) whose storage set contains every probe's storage set, all
/// computed with the same `storage_method`.
pub fn brut_univ_sketching(
    a: usize,
    epsilon: f64,
    n: usize,
    delta: f64,
    variant: BrutVariant,
    params: BrutParams,
    storage_method: StorageMethod,
) -> Result<BrutResult> {
    check_sketch_args(a, epsilon, n)?;
    if !(params.eta_step > 0.0) {
        return invalid("eta step must be positive");
    }
    let probes = match variant {
        BrutVariant::A => spa_hull_grid(a, epsilon, params.hull_grid, true)?,
        BrutVariant::B => vec![sparse_extreme(a, epsilon)?],
    };
    let probe_sets = probes
        .iter()
        .map(|q| storage_set(q, n, delta, storage_method))
        .collect::<Result<Vec<_>>>()?;
    let eta_cp = eta(a, epsilon)?;
    let mut evaluations = 0;
    let mut evaluate = |mass: f64| -> Result<(bool, StorageSet)> {
        evaluations += 1;
        let s = storage_set(&make_spike(a, 0, mass)?, n, delta, storage_method)?;
        let mut ok = true;
        for q in &probe_sets {
            ok &= is_nested(q, &s)?;
        }
        Ok((ok, s))
    };
    let mut grid = vec![epsilon];
    grid.extend(
        (1..)
            .map(|k| epsilon + k as f64 * params.eta_step)
            .take_while(|&m| m < eta_cp - 1e-12),
    );
    if eta_cp > grid[grid.len() - 1] + 1e-12 {
        grid.push(eta_cp);
    }
    let found = if params.dichotomic {
        let first = evaluate(grid[0])?;
        if first.0 {
            Some((0, true, first.1))
        } else {
            let (mut lo, mut hi) = (0usize, grid.len() - 1);
            let (mut found_ok, mut best) = evaluate(grid[hi])?;
            while hi > lo + 1 {
                let mid = (lo + hi) / 2;
                let (ok, s) = evaluate(grid[mid])?;
                if ok {
                    hi = mid;
                    best = s;
                    found_ok = true;
                } else {
                    lo = mid;
                }
            }
            Some((hi, found_ok, best))
        }
    } else {
        let mut hit = None;
        for (k, &m) in grid.iter().enumerate() {
            let (ok, s) = evaluate(m)?;
            if ok || k + 1 == grid.len() {
                hit = Some((k, ok, s));
                if ok {
                    break;
                }
            }
        }
        hit
    };
    let (k, ok, storage) = found.ok_or_else(|| Error::Infeasible("empty eta grid".into()))?;
    Ok(BrutResult {
        eta_star: grid[k],
        eta_cp,
        probes,
        fell_back: !ok,
        storage,
        evaluations,
    })
}

/// JSON sidecar written next to a spec's PSET file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecSidecar {
    pub a: usize,
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub method: SketchMethod,
    pub eta: f64,
    pub seed: Option<u64>,
}

/// Serializes a spec as PSET bytes plus the JSON sidecar.
pub fn save_spec(spec: &SketchSpec) -> Result<(Vec<u8>, String)> {
    let side = SpecSidecar {
        a: spec.a,
        n: spec.n,
        epsilon: spec.epsilon,
        delta: spec.delta,
        method: spec.method,
        eta: spec.eta,
        seed: spec.seed,
    };
    let json = serde_json::to_string_pretty(&side)
        .map_err(|e| Error::InvalidArgument(format!("sidecar serialization: {e}")))?;
    Ok((encode_storage_set(&spec.storage), json))
}

pub fn load_spec(pset: &[u8], sidecar: &str) -> Result<SketchSpec> {
    let storage = decode_storage_set(pset)?;
    let side: SpecSidecar = serde_json::from_str(sidecar).map_err(|e| Error::Format {
        offset: e.column(),
        reason: format!("sidecar: {e}"),
    })?;
    if side.a != storage.alphabet() || side.n != storage.block_len() {
        return invalid("sidecar and storage set disagree on (a, n)");
    }
    Ok(SketchSpec {
        a: side.a,
        n: side.n,
        epsilon: side.epsilon,
        delta: side.delta,
        method: side.method,
        eta: side.eta,
        decode_dist: make_spike(side.a, 0, side.eta)?,
        storage,
        seed: side.seed,
    })
}

/// Sketch with checkers decoded against a discretized model family.
#[derive(Clone, Debug)]
pub struct PatchedSpec {
    pub base: SketchSpec,
    pub models: ModelSet,
    pub checkers: Vec<usize>,
}

/// Adds `checker_count` (default `ceil(sqrt(n))`) checkers to `base`, chosen
/// among the non-stored indices of lowest estimated entropy, and uses the
/// hull grid of resolution `d` at sparsity `epsilon_prime` as the model list.
pub fn build_patched_spec(
    base: SketchSpec,
    epsilon_prime: f64,
    d: usize,
    checker_count: Option<usize>,
) -> Result<PatchedSpec> {
    if epsilon_prime < base.epsilon {
        return invalid("epsilon' must be at least epsilon");
    }
    let models = ModelSet::new(spa_hull_grid(base.a, epsilon_prime, d, false)?)?;
    let want = checker_count.unwrap_or_else(|| (base.n as f64).sqrt().ceil() as usize);
    let mut free: Vec<usize> = (0..base.n).filter(|&i| !base.storage.contains(i)).collect();
    if let Some(est) = base.storage.estimates() {
        free.sort_by(|&i, &j| est[i].mean.total_cmp(&est[j].mean).then(i.cmp(&j)));
    } else {
        free.reverse();
    }
    let mut checkers: Vec<usize> = free.into_iter().take(want).collect();
    checkers.sort_unstable();
    Ok(PatchedSpec {
        base,
        models,
        checkers,
    })
}

/// `(y_S, y_T)`.
pub fn patched_sketch(spec: &PatchedSpec, x: &SymbolBlock) -> Result<(Vec<u32>, Vec<u32>)> {
    let y = sketch(&spec.base, x)?;
    let mut u = x.symbols().to_vec();
    transform_in_place(&mut u, spec.base.a as u32);
    Ok((y, spec.checkers.iter().map(|&i| u[i]).collect()))
}

pub fn patched_recover(
    spec: &PatchedSpec,
    y: &[u32],
    y_checkers: &[u32],
    seed: u64,
    variant: AdaptVariant,
) -> Result<AdaptOutcome> {
    polar_dec_adapt(
        &spec.models,
        &spec.base.storage,
        &spec.checkers,
        y,
        y_checkers,
        seed,
        variant,
    )
}
