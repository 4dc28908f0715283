//! Bounds on the storage rate of a single polar storage set serving two
//! sources, and the ternary pair where that rate exceeds both entropies.

use crate::error::{invalid, Error, Result};
use crate::export::{fmt12, Csv};
use crate::measures::{entropy_a, Dist};
use crate::polar_core::exact_joint_conditionals;
use crate::storage::{bec_erasures, bhattacharyya};

/// `H(p^sigma) = H(U_i | U^{i-1})` for the `2^level` synthesized sources.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthEntropyTree {
    pub a: usize,
    pub level: u32,
    pub values: Vec<f64>,
}

impl SynthEntropyTree {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

fn check_level(level: u32) -> Result<usize> {
    if level > 20 {
        return invalid(format!("level {level} is too deep"));
    }
    Ok(1usize << level)
}

pub fn synthesized_entropies(p: &Dist, level: u32) -> Result<SynthEntropyTree> {
    let n = check_level(level)?;
    Ok(SynthEntropyTree {
        a: p.alphabet(),
        level,
        values: exact_joint_conditionals(p, n)?,
    })
}

fn same_alphabet(p: &Dist, q: &Dist) -> Result<()> {
    if p.alphabet() != q.alphabet() {
        return invalid("sources have different alphabets");
    }
    Ok(())
}

/// `2^-l sum_sigma max(H(p^sigma), H(q^sigma))`.
pub fn compound_lower_bound(p: &Dist, q: &Dist, level: u32) -> Result<f64> {
    same_alphabet(p, q)?;
    let tp = synthesized_entropies(p, level)?;
    let tq = synthesized_entropies(q, level)?;
    Ok(max_mean(&tp.values, &tq.values))
}

fn max_mean(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a.max(*b)).sum::<f64>() / x.len() as f64
}

/// Binary upper bound: the erasure entropy of `BEC(max(Z_sigma(P), Z_sigma(Q)))`
/// averaged over `sigma`, i.e. the mean of the larger erasure probability.
pub fn compound_upper_bound_bec(p: &Dist, q: &Dist, level: u32) -> Result<f64> {
    same_alphabet(p, q)?;
    if p.alphabet() != 2 {
        return Err(Error::UnsupportedAlphabet {
            a: p.alphabet(),
            expected: "2",
        });
    }
    let n = check_level(level)?;
    let zp = bec_erasures(bhattacharyya(p)?, n)?;
    let zq = bec_erasures(bhattacharyya(q)?, n)?;
    Ok(max_mean(&zp, &zq))
}

/// `sigma_index,H_p_sigma,H_q_sigma,max` for one level.
pub fn compound_csv(p: &Dist, q: &Dist, level: u32, params: &str) -> Result<String> {
    same_alphabet(p, q)?;
    let tp = synthesized_entropies(p, level)?;
    let tq = synthesized_entropies(q, level)?;
    let mut csv = Csv::new(params, "sigma_index,H_p_sigma,H_q_sigma,max");
    for (i, (x, y)) in tp.values.iter().zip(&tq.values).enumerate() {
        csv.row(&[i.to_string(), fmt12(*x), fmt12(*y), fmt12(x.max(*y))]);
    }
    Ok(csv.finish())
}

/// The ternary pair `p = (0.08, 0.36, 0.56)`, `q = (0.11, 0.62, 0.27)`.
pub fn counterexample_pair() -> (Dist, Dist) {
    (
        Dist::new(vec![0.08, 0.36, 0.56]).expect("valid"),
        Dist::new(vec![0.11, 0.62, 0.27]).expect("valid"),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompoundReport {
    pub h_p: f64,
    pub h_q: f64,
    /// The compound capacity `max(H(p), H(q))`.
    pub c: f64,
    pub level: u32,
    pub lower_bound: f64,
    /// Binary sources only.
    pub upper_bound: Option<f64>,
    pub exceeds: bool,
}

impl CompoundReport {
    fn fields(&self) -> Vec<(String, String)> {
        let mut f = vec![
            ("H_p".to_string(), fmt12(self.h_p)),
            ("H_q".to_string(), fmt12(self.h_q)),
            ("C".to_string(), fmt12(self.c)),
            (format!("lower_bound_l{}", self.level), fmt12(self.lower_bound)),
        ];
        if let Some(u) = self.upper_bound {
            f.push((format!("upper_bound_bec_l{}", self.level), fmt12(u)));
        }
        f.push(("exceeds_C".to_string(), self.exceeds.to_string()));
        f
    }

    /// Aligned `key value` lines.
    pub fn to_text(&self) -> String {
        self.fields()
            .into_iter()
            .map(|(k, v)| format!("{k:<20} {v}\n"))
            .collect()
    }

    pub fn to_csv(&self, params: &str) -> String {
        let (keys, values): (Vec<String>, Vec<String>) = self.fields().into_iter().unzip();
        let mut csv = Csv::new(params, &keys.join(","));
        csv.row(&values);
        csv.finish()
    }
}

pub fn compound_report(p: &Dist, q: &Dist, level: u32) -> Result<CompoundReport> {
    let h_p = entropy_a(p);
    let h_q = entropy_a(q);
    let c = h_p.max(h_q);
    let lower_bound = compound_lower_bound(p, q, level)?;
    let upper_bound = if p.alphabet() == 2 {
        Some(compound_upper_bound_bec(p, q, level)?)
    } else {
        None
    };
    Ok(CompoundReport {
        h_p,
        h_q,
        c,
        level,
        lower_bound,
        upper_bound,
        exceeds: lower_bound > c,
    })
}

/// The report for [`counterexample_pair`] at level 1.
pub fn counterexample_report() -> CompoundReport {
    let (p, q) = counterexample_pair();
    compound_report(&p, &q, 1).expect("level 1 is within the oracle cap")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::circular_convolve;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_tree_is_flat() {
        let t = synthesized_entropies(&Dist::uniform(3).unwrap(), 3).unwrap();
        assert_eq!(t.values.len(), 8);
        for v in t.values {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn level_one_is_convolution_split() {
        let (p, _) = counterexample_pair();
        let pp = circular_convolve(&p, &p).unwrap();
        for (x, y) in pp.probs().iter().zip([0.4096, 0.3712, 0.2192]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
        let t = synthesized_entropies(&p, 1).unwrap();
        let hpp = entropy_a(&pp);
        assert_abs_diff_eq!(t.values[0], hpp, epsilon = 1e-12);
        assert_abs_diff_eq!(t.values[1], 2.0 * entropy_a(&p) - hpp, epsilon = 1e-12);
    }

    #[test]
    fn counterexample_values() {
        let r = counterexample_report();
        assert_abs_diff_eq!(r.h_p, 0.8143, epsilon = 5e-4);
        assert_abs_diff_eq!(r.h_q, 0.8126, epsilon = 5e-4);
        assert_abs_diff_eq!(r.lower_bound, 0.8174, epsilon = 1e-3);
        assert!(r.exceeds);
        // Frozen from an independent evaluation of H(p*p), H(q*q).
        assert_abs_diff_eq!(r.lower_bound, 0.817584, epsilon = 1e-6);
        let (p, q) = counterexample_pair();
        assert_abs_diff_eq!(compound_lower_bound(&p, &q, 2).unwrap(), 0.818500, epsilon = 1e-6);
    }

    #[test]
    fn equal_sources() {
        let p = Dist::new(vec![0.7, 0.2, 0.1]).unwrap();
        assert_abs_diff_eq!(compound_lower_bound(&p, &p, 2).unwrap(), entropy_a(&p), epsilon = 1e-9);
        let h = Dist::uniform(2).unwrap();
        assert_abs_diff_eq!(compound_upper_bound_bec(&h, &h, 3).unwrap(), 1.0, epsilon = 1e-15);
        let z = Dist::point_mass(2, 0).unwrap();
        assert_eq!(compound_upper_bound_bec(&z, &z, 3).unwrap(), 0.0);
        assert!(compound_upper_bound_bec(&p, &p, 1).is_err());
    }

    #[test]
    fn report_formats() {
        let r = counterexample_report();
        let text = r.to_text();
        let line = text.lines().find(|l| l.starts_with("lower_bound_l1")).unwrap();
        assert!(line.split_whitespace().nth(1).unwrap().starts_with("0.81758"));
        let csv = r.to_csv("default");
        assert_eq!(csv.lines().count(), 3);
        let (p, q) = counterexample_pair();
        let c = compound_csv(&p, &q, 1, "level=1").unwrap();
        assert_eq!(c.lines().nth(1), Some("sigma_index,H_p_sigma,H_q_sigma,max"));
        assert_eq!(c.lines().count(), 4);
    }
}
