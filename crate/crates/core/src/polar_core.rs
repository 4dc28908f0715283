//! The polar transform `u = x G_n` over Z_a, its inverse, successive
//! cancellation, and a brute-force joint-law oracle for short blocks.
//!
//! `G_n` is the Kronecker power of `[[1, 0], [1, 1]]` acting on row vectors,
//! with no bit-reversal. The first half of `u` is `(x_a + x_b) G_{n/2}` and the
//! second half `x_b G_{n/2}`, where `x_a`, `x_b` are the halves of `x`.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::measures::{check_prime, entropy_nats, Dist};

/// Largest `a^n` the exact oracle will enumerate.
pub const ORACLE_CAP: u128 = 1 << 20;

/// A block of `n` symbols over Z_a, `n` a power of two.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolBlock {
    a: usize,
    symbols: Vec<u32>,
}

pub(crate) fn check_block_len(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return invalid(format!("block length {n} is not a power of two"));
    }
    Ok(())
}

impl SymbolBlock {
    pub fn new(a: usize, symbols: Vec<u32>) -> Result<Self> {
        check_prime(a)?;
        check_block_len(symbols.len())?;
        if let Some((i, s)) = symbols.iter().enumerate().find(|(_, &s)| s as usize >= a) {
            return invalid(format!("symbol {s} at position {i} outside Z_{a}"));
        }
        Ok(Self { a, symbols })
    }

    pub fn zeros(a: usize, n: usize) -> Result<Self> {
        Self::new(a, vec![0; n])
    }

    pub fn alphabet(&self) -> usize {
        self.a
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn into_symbols(self) -> Vec<u32> {
        self.symbols
    }
}

/// A conditional law `P(U_i = . | u^{i-1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScMessage {
    pub a: usize,
    pub probs: Vec<f64>,
}

impl ScMessage {
    /// Most likely symbol, ties toward the smallest.
    pub fn argmax(&self) -> u32 {
        argmax_smallest(&self.probs)
    }
}

pub(crate) fn argmax_smallest(probs: &[f64]) -> u32 {
    let mut best = 0;
    for (k, &v) in probs.iter().enumerate().skip(1) {
        if v > probs[best] {
            best = k;
        }
    }
    best as u32
}

/// In-place `u = x G_n` on raw symbols.
pub(crate) fn transform_in_place(sym: &mut [u32], a: u32) {
    let n = sym.len();
    let mut h = n / 2;
    while h >= 1 {
        for base in (0..n).step_by(2 * h) {
            for i in base..base + h {
                sym[i] = (sym[i] + sym[i + h]) % a;
            }
        }
        h /= 2;
    }
}

/// In-place inverse of [`transform_in_place`].
pub(crate) fn inverse_in_place(sym: &mut [u32], a: u32) {
    let n = sym.len();
    let mut h = 1;
    while h < n {
        for base in (0..n).step_by(2 * h) {
            for i in base..base + h {
                sym[i] = (sym[i] + a - sym[i + h]) % a;
            }
        }
        h *= 2;
    }
}

pub fn polar_transform(x: &SymbolBlock) -> SymbolBlock {
    let mut out = x.clone();
    transform_in_place(&mut out.symbols, x.a as u32);
    out
}

pub fn polar_inverse(u: &SymbolBlock) -> SymbolBlock {
    let mut out = u.clone();
    inverse_in_place(&mut out.symbols, u.a as u32);
    out
}

/// Scratch buffers for successive cancellation; reuse one per thread.
#[derive(Clone, Debug)]
pub struct ScWorkspace {
    a: usize,
    n: usize,
    depth: usize,
    msgs: Vec<Vec<f64>>,
    sums: Vec<Vec<u32>>,
}

impl ScWorkspace {
    pub fn new(a: usize, n: usize) -> Result<Self> {
        check_prime(a)?;
        check_block_len(n)?;
        let depth = n.trailing_zeros() as usize;
        Ok(Self {
            a,
            n,
            depth,
            msgs: (0..=depth).map(|k| vec![0.0; (n >> k) * a]).collect(),
            sums: (0..=depth).map(|k| vec![0; n >> k]).collect(),
        })
    }

    pub fn alphabet(&self) -> usize {
        self.a
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    /// Runs a successive-cancellation pass under the i.i.d. prior `p`.
    ///
    /// `decide(i, law)` receives the zero-based index and the conditional law
    /// of `U_i` given the symbols fixed so far, and returns the symbol to fix,
    /// or `None` to stop. Returns the reconstruction `x = u G_n^{-1}` when the
    /// pass completes.
    pub fn sweep<F>(&mut self, p: &Dist, mut decide: F) -> Result<Option<Vec<u32>>>
    where
        F: FnMut(usize, &[f64]) -> Option<u32>,
    {
        if p.alphabet() != self.a {
            return invalid(format!(
                "prior alphabet {} does not match workspace alphabet {}",
                p.alphabet(),
                self.a
            ));
        }
        for chunk in self.msgs[0].chunks_exact_mut(self.a) {
            chunk.copy_from_slice(p.probs());
        }
        if self.descend(0, 0, &mut decide) {
            Ok(Some(self.sums[0].clone()))
        } else {
            Ok(None)
        }
    }

    fn descend<F>(&mut self, level: usize, leaf: usize, decide: &mut F) -> bool
    where
        F: FnMut(usize, &[f64]) -> Option<u32>,
    {
        let a = self.a;
        if level == self.depth {
            return match decide(leaf, &self.msgs[level][..a]) {
                Some(s) => {
                    self.sums[level][0] = s % a as u32;
                    true
                }
                None => false,
            };
        }
        let half = (self.n >> level) / 2;
        {
            let (lo, hi) = self.msgs.split_at_mut(level + 1);
            let (src, dst) = (&lo[level], &mut hi[0]);
            for j in 0..half {
                let x = &src[j * a..(j + 1) * a];
                let y = &src[(j + half) * a..(j + half + 1) * a];
                let out = &mut dst[j * a..(j + 1) * a];
                for (k, slot) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for v in 0..a {
                        acc += x[(k + a - v) % a] * y[v];
                    }
                    *slot = acc;
                }
                normalize(out);
            }
        }
        if !self.descend(level + 1, leaf, decide) {
            return false;
        }
        {
            let (lo, hi) = self.sums.split_at_mut(level + 1);
            lo[level][..half].copy_from_slice(&hi[0][..half]);
        }
        {
            let (lo, hi) = self.msgs.split_at_mut(level + 1);
            let (src, dst) = (&lo[level], &mut hi[0]);
            let s = &self.sums[level];
            for j in 0..half {
                let x = &src[j * a..(j + 1) * a];
                let y = &src[(j + half) * a..(j + half + 1) * a];
                let sj = s[j] as usize;
                let out = &mut dst[j * a..(j + 1) * a];
                for (v, slot) in out.iter_mut().enumerate() {
                    *slot = x[(sj + a - v) % a] * y[v];
                }
                normalize(out);
            }
        }
        if !self.descend(level + 1, leaf + half, decide) {
            return false;
        }
        let (lo, hi) = self.sums.split_at_mut(level + 1);
        let (cur, child) = (&mut lo[level], &hi[0]);
        for j in 0..half {
            let b = child[j];
            cur[j + half] = b;
            cur[j] = (cur[j] + a as u32 - b) % a as u32;
        }
        true
    }
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    if total > 0.0 && total.is_finite() {
        v.iter_mut().for_each(|x| *x /= total);
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
}

/// `P(U_i = . | U^{i-1} = decided)` for `X^n` i.i.d. `p`; `i` is one-based.
pub fn sc_conditional(
    p: &Dist,
    decided: &[u32],
    i: usize,
    workspace: &mut ScWorkspace,
) -> Result<ScMessage> {
    let n = workspace.block_len();
    if i == 0 || i > n {
        return invalid(format!("index {i} outside [1, {n}]"));
    }
    if decided.len() != i - 1 {
        return invalid(format!(
            "decided prefix has length {}, expected {}",
            decided.len(),
            i - 1
        ));
    }
    let mut out = None;
    workspace.sweep(p, |leaf, law| {
        if leaf + 1 == i {
            out = Some(law.to_vec());
            None
        } else {
            Some(decided[leaf])
        }
    })?;
    Ok(ScMessage {
        a: p.alphabet(),
        probs: out.expect("sweep reaches every leaf up to i"),
    })
}

/// The exact law of `U^n = X^n G_n`, indexed with `u_1` as the most
/// significant base-`a` digit.
#[derive(Clone, Debug)]
pub struct JointLaw {
    pub a: usize,
    pub n: usize,
    pub probs: Vec<f64>,
}

impl JointLaw {
    /// Law of `U^i`, `0 <= i <= n`.
    pub fn prefix_marginal(&self, i: usize) -> Vec<f64> {
        let mut cur = self.probs.clone();
        for _ in i..self.n {
            cur = cur.chunks_exact(self.a).map(|c| c.iter().sum()).collect();
        }
        cur
    }

    /// Conditional law of `U_{i}` given `U^{i-1} = prefix` (one-based `i`),
    /// or `None` if the prefix has probability zero.
    pub fn conditional(&self, prefix: &[u32]) -> Option<Vec<f64>> {
        let marg = self.prefix_marginal(prefix.len() + 1);
        let base = prefix.iter().fold(0usize, |acc, &s| acc * self.a + s as usize) * self.a;
        let slice = &marg[base..base + self.a];
        let total: f64 = slice.iter().sum();
        (total > 0.0).then(|| slice.iter().map(|v| v / total).collect())
    }
}

pub(crate) fn check_oracle_cap(a: usize, n: usize) -> Result<()> {
    let needed = (a as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > ORACLE_CAP {
        return Err(Error::ResourceLimit {
            what: "exact oracle enumeration a^n",
            needed,
            cap: ORACLE_CAP,
        });
    }
    Ok(())
}

/// Builds the law by doubling: with `V, V'` i.i.d. copies of the half-length
/// law `L`, `U = (V + V', V')`, so `P(u, u') = L(u - u') L(u')` digitwise.
pub fn exact_joint_law(p: &Dist, n: usize) -> Result<JointLaw> {
    check_block_len(n)?;
    let a = p.alphabet();
    check_oracle_cap(a, n)?;
    let mut law = p.probs().to_vec();
    let mut m = 1;
    while m < n {
        let size = law.len();
        let mut next = vec![0.0; size * size];
        next.par_chunks_mut(size).enumerate().for_each(|(i1, row)| {
            let mut diff_digits = vec![0usize; m];
            let mut rest = i1;
            for d in diff_digits.iter_mut().rev() {
                *d = rest % a;
                rest /= a;
            }
            let mut second = vec![0usize; m];
            let mut diff = i1;
            for (i2, slot) in row.iter_mut().enumerate() {
                *slot = law[diff] * law[i2];
                // Odometer step of the second half; each carry lowers the
                // matching digit of the difference.
                let mut weight = 1;
                for k in (0..m).rev() {
                    if diff_digits[k] == 0 {
                        diff_digits[k] = a - 1;
                        diff += (a - 1) * weight;
                    } else {
                        diff_digits[k] -= 1;
                        diff -= weight;
                    }
                    second[k] += 1;
                    if second[k] < a {
                        break;
                    }
                    second[k] = 0;
                    weight *= a;
                }
            }
        });
        law = next;
        m *= 2;
    }
    Ok(JointLaw { a, n, probs: law })
}

/// Exact `H(U_i | U^{i-1})` in base `a`, `i = 1..n`, by enumeration.
pub fn exact_joint_conditionals(p: &Dist, n: usize) -> Result<Vec<f64>> {
    let law = exact_joint_law(p, n)?;
    Ok(conditional_entropies(&law))
}

pub(crate) fn conditional_entropies(law: &JointLaw) -> Vec<f64> {
    let ln_a = (law.a as f64).ln();
    let mut joint = vec![0.0; law.n + 1];
    let mut cur = law.probs.clone();
    for i in (0..=law.n).rev() {
        joint[i] = entropy_nats(&cur) / ln_a;
        if i > 0 {
            cur = cur.chunks_exact(law.a).map(|c| c.iter().sum()).collect();
        }
    }
    (1..=law.n).map(|i| joint[i] - joint[i - 1]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// `P(u) = prod_j p(x_j)` with `x = u G_n^{-1}`, by enumeration.
    fn enumerated_law(p: &Dist, n: usize) -> Vec<f64> {
        let a = p.alphabet();
        (0..a.pow(n as u32))
            .map(|idx| {
                let mut buf = vec![0u32; n];
                let mut rest = idx;
                for slot in buf.iter_mut().rev() {
                    *slot = (rest % a) as u32;
                    rest /= a;
                }
                inverse_in_place(&mut buf, a as u32);
                buf.iter().map(|&s| p[s as usize]).product()
            })
            .collect()
    }

    #[test]
    fn doubling_matches_enumeration() {
        for (p, n) in [
            (Dist::new(vec![0.9, 0.1]).unwrap(), 8),
            (Dist::new(vec![0.08, 0.36, 0.56]).unwrap(), 4),
            (Dist::new(vec![0.5, 0.2, 0.1, 0.15, 0.05]).unwrap(), 4),
            (Dist::new(vec![0.6, 0.0, 0.4]).unwrap(), 2),
        ] {
            let law = exact_joint_law(&p, n).unwrap();
            for (x, y) in law.probs.iter().zip(enumerated_law(&p, n)) {
                assert_abs_diff_eq!(*x, y, epsilon = 1e-15);
            }
        }
    }

    fn blk(a: usize, s: &[u32]) -> SymbolBlock {
        SymbolBlock::new(a, s.to_vec()).unwrap()
    }

    #[test]
    fn transform_examples() {
        assert_eq!(polar_transform(&blk(2, &[0; 8])).symbols(), &[0; 8]);
        assert_eq!(polar_transform(&blk(2, &[1, 1])).symbols(), &[0, 1]);
        for n in [2usize, 4, 16, 64] {
            let u = polar_transform(&blk(2, &vec![1; n]));
            let mut expected = vec![0; n];
            expected[n - 1] = 1;
            assert_eq!(u.symbols(), &expected[..]);
        }
        assert!(SymbolBlock::new(2, vec![0; 6]).is_err());
        assert!(SymbolBlock::new(3, vec![3, 0]).is_err());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(polar_inverse(&blk(3, &[2, 1])).symbols(), &[1, 1]);
        for bits in 0..16u32 {
            let x: Vec<u32> = (0..4).map(|k| (bits >> k) & 1).collect();
            let b = blk(2, &x);
            assert_eq!(polar_inverse(&b), polar_transform(&b));
        }
    }

    #[test]
    fn transform_matches_kronecker_matrix() {
        // Build G_8 explicitly over Z_3 and multiply.
        let n = 8;
        let mut g = vec![vec![1u32]];
        while g.len() < n {
            let m = g.len();
            let mut next = vec![vec![0u32; 2 * m]; 2 * m];
            for r in 0..m {
                for c in 0..m {
                    next[r][c] = g[r][c];
                    next[r + m][c] = g[r][c];
                    next[r + m][c + m] = g[r][c];
                }
            }
            g = next;
        }
        let x = [2u32, 0, 1, 1, 2, 2, 0, 1];
        let expected: Vec<u32> = (0..n)
            .map(|c| (0..n).map(|r| x[r] * g[r][c]).sum::<u32>() % 3)
            .collect();
        assert_eq!(polar_transform(&blk(3, &x)).symbols(), &expected[..]);
    }

    proptest! {
        #[test]
        fn inverse_round_trip(a in prop::sample::select(vec![2usize, 3, 5]), m in 0usize..=10, seed in any::<u64>()) {
            let n = 1 << m;
            let x: Vec<u32> = (0..n).map(|i| ((seed.wrapping_mul(6364136223846793005).wrapping_add((i as u64).wrapping_mul(1442695040888963407)) >> 33) % a as u64) as u32).collect();
            let b = blk(a, &x);
            prop_assert_eq!(polar_inverse(&polar_transform(&b)), b);
        }

        #[test]
        fn linearity(a in prop::sample::select(vec![2usize, 3, 5, 7]), x in prop::collection::vec(0u32..7, 16), y in prop::collection::vec(0u32..7, 16)) {
            let x: Vec<u32> = x.iter().map(|v| v % a as u32).collect();
            let y: Vec<u32> = y.iter().map(|v| v % a as u32).collect();
            let s: Vec<u32> = x.iter().zip(&y).map(|(p, q)| (p + q) % a as u32).collect();
            let tx = polar_transform(&blk(a, &x));
            let ty = polar_transform(&blk(a, &y));
            let ts = polar_transform(&blk(a, &s));
            let sum: Vec<u32> = tx.symbols().iter().zip(ty.symbols()).map(|(p, q)| (p + q) % a as u32).collect();
            prop_assert_eq!(ts.symbols(), &sum[..]);
        }
    }

    #[test]
    fn sc_examples() {
        let p = Dist::new(vec![0.9, 0.1]).unwrap();
        let mut ws = ScWorkspace::new(2, 2).unwrap();
        let m = sc_conditional(&p, &[], 1, &mut ws).unwrap();
        assert_abs_diff_eq!(m.probs[0], 0.82, epsilon = 1e-12);
        let m = sc_conditional(&p, &[1], 2, &mut ws).unwrap();
        assert_abs_diff_eq!(m.probs[0], 0.5, epsilon = 1e-12);
        let m = sc_conditional(&p, &[0], 2, &mut ws).unwrap();
        assert_abs_diff_eq!(m.probs[0], 0.81 / 0.82, epsilon = 1e-12);
        assert!(sc_conditional(&p, &[], 3, &mut ws).is_err());
        assert!(sc_conditional(&p, &[0, 0], 2, &mut ws).is_err());
    }

    #[test]
    fn sc_full_sweep_reconstructs_x() {
        let p = Dist::new(vec![0.2, 0.5, 0.3]).unwrap();
        let x = blk(3, &[2, 0, 1, 1, 0, 2, 2, 1]);
        let u = polar_transform(&x);
        let mut ws = ScWorkspace::new(3, 8).unwrap();
        let xs = ws.sweep(&p, |i, _| Some(u.symbols()[i])).unwrap().unwrap();
        assert_eq!(&xs[..], x.symbols());
    }

    #[test]
    fn joint_conditionals_examples() {
        let u = Dist::uniform(3).unwrap();
        for h in exact_joint_conditionals(&u, 4).unwrap() {
            assert_abs_diff_eq!(h, 1.0, epsilon = 1e-12);
        }
        let p = Dist::new(vec![0.9, 0.1]).unwrap();
        let h = exact_joint_conditionals(&p, 2).unwrap();
        assert_abs_diff_eq!(h[0], 0.680077, epsilon = 1e-6);
        assert_abs_diff_eq!(h[1], 0.257914, epsilon = 1e-6);
        assert!(matches!(
            exact_joint_conditionals(&Dist::uniform(3).unwrap(), 16),
            Err(Error::ResourceLimit { .. })
        ));
        assert!(exact_joint_conditionals(&p, 16).is_ok());
    }

    #[test]
    fn sc_matches_joint_law_ternary() {
        let p = Dist::new(vec![0.6, 0.3, 0.1]).unwrap();
        let n = 4;
        let law = exact_joint_law(&p, n).unwrap();
        let mut ws = ScWorkspace::new(3, n).unwrap();
        for i in 1..=n {
            for idx in 0..3usize.pow(i as u32 - 1) {
                let prefix: Vec<u32> = (0..i - 1)
                    .rev()
                    .map(|k| ((idx / 3usize.pow(k as u32)) % 3) as u32)
                    .collect();
                if let Some(exact) = law.conditional(&prefix) {
                    let sc = sc_conditional(&p, &prefix, i, &mut ws).unwrap();
                    for (x, y) in sc.probs.iter().zip(&exact) {
                        assert_abs_diff_eq!(x, y, epsilon = 1e-10);
                    }
                }
            }
        }
    }
}
