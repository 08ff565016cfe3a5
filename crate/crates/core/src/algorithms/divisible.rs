//! Divisible split strategy on the paired hardness instance.
//!
//! Every item offers `(1 + alpha) / 2` of itself to class 0, spread equally
//! over the item's class-0 neighbors that still have capacity, and the rest
//! to class 1, spread equally over all of class 1. Class 0's share shrinks to
//! its remaining capacity near saturation.
//!
//! On the hardness instance all class-0 agents of the current prefix carry
//! the same load, so the engine only tracks that common load plus the loads
//! frozen when agents leave the prefix. This makes `n = 10^5` cheap even
//! though the instance itself has about `2 * 10^10` edges.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ids::{AgentId, ClassId, ItemId};
use crate::instance::Instance;
use crate::matching::{FractionalMatching, LOAD_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitParams {
    alpha: f64,
}

impl SplitParams {
    /// `alpha` must lie in `[0, 1]`; `alpha = 1` hands class 0 everything it
    /// can take.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha {alpha} is not in [0, 1]"
            )));
        }
        Ok(SplitParams { alpha })
    }

    /// Inverse of [`SplitParams::beta`]: `alpha = (1 - beta) / (1 + beta)`.
    pub fn from_beta(beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!(
                "beta {beta} is not in [0, 1]"
            )));
        }
        Self::new((1.0 - beta) / (1.0 + beta))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        (1.0 - self.alpha) / (1.0 + self.alpha)
    }

    /// Fraction of each item offered to class 0.
    pub fn class0_offer(&self) -> f64 {
        (1.0 + self.alpha) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ItemSplit {
    pub item: ItemId,
    /// Number of class-0 agents sharing `class0`.
    pub class0_agents: usize,
    pub class0: f64,
    pub class1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitOutcome {
    pub n: usize,
    pub params: SplitParams,
    pub items: Vec<ItemSplit>,
    /// Loads of agents `0..2n`.
    pub agent_loads: Vec<f64>,
    pub class_loads: [f64; 2],
}

impl SplitOutcome {
    /// Class-0 load over class-1 load, or `None` when class 1 received nothing.
    pub fn load_ratio(&self) -> Option<f64> {
        (self.class_loads[1] > 0.0).then(|| self.class_loads[0] / self.class_loads[1])
    }

    /// Replays the split cell by cell. Quadratic in `n`.
    pub fn to_fractional(&self, inst: &Instance) -> Result<FractionalMatching> {
        check_conforming(inst, self.n)?;
        let n = self.n;
        let mut fm = FractionalMatching::empty(inst);
        let mut shares = Vec::new();
        for rec in &self.items {
            shares.clear();
            if rec.class0 > 0.0 {
                let each = rec.class0 / rec.class0_agents as f64;
                shares.extend((0..rec.class0_agents).map(|a| (AgentId(a), each)));
            }
            if rec.class1 > 0.0 {
                let each = rec.class1 / n as f64;
                shares.extend((n..2 * n).map(|a| (AgentId(a), each)));
            }
            fm.frac_assign(inst, rec.item, &shares)?;
        }
        Ok(fm)
    }
}

fn snap(load: f64) -> f64 {
    if load >= 1.0 - LOAD_TOLERANCE {
        1.0
    } else {
        load
    }
}

/// Runs the split on the hardness instance of size `n` without building it.
pub fn simulate_divisible_split(n: usize, params: SplitParams) -> Result<SplitOutcome> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let offer = params.class0_offer();
    let mut agent_loads = vec![0.0; 2 * n];
    let mut items = Vec::with_capacity(2 * n);
    // Common load of the class-0 prefix and of class 1.
    let mut prefix_load: f64 = 0.0;
    let mut class1_load: f64 = 0.0;

    for t in 0..2 * n {
        let pair = t / 2 + 1;
        let prefix = n - pair + 1;
        if t % 2 == 0 && pair > 1 {
            // Agent n - pair + 1 leaves the prefix with the common load.
            agent_loads[prefix] = prefix_load;
        }
        let room0 = prefix as f64 * (1.0 - prefix_load);
        let class0 = offer.min(room0).max(0.0);
        if class0 > 0.0 {
            prefix_load = snap(prefix_load + class0 / prefix as f64);
        }
        let room1 = n as f64 * (1.0 - class1_load);
        let class1 = (1.0 - class0).min(room1).max(0.0);
        if class1 > 0.0 {
            class1_load = snap(class1_load + class1 / n as f64);
        }
        items.push(ItemSplit {
            item: ItemId(t),
            class0_agents: prefix,
            class0,
            class1,
        });
    }
    // The last pair's prefix is agent 0 alone.
    agent_loads[0] = prefix_load;
    for load in &mut agent_loads[n..] {
        *load = class1_load;
    }
    let class0_total: f64 = agent_loads[..n].iter().sum();
    Ok(SplitOutcome {
        n,
        params,
        items,
        agent_loads,
        class_loads: [class0_total, class1_load * n as f64],
    })
}

/// Checks that `inst` is the paired hardness instance of size `n` (up to the
/// name).
fn check_conforming(inst: &Instance, n: usize) -> Result<()> {
    let bad = |msg: String| Err(Error::NonConforming(msg));
    if inst.num_classes() != 2 || inst.num_agents() != 2 * n || inst.num_items() != 2 * n {
        return bad(format!(
            "expected 2 classes, {} agents and {} items",
            2 * n,
            2 * n
        ));
    }
    for a in inst.agents() {
        if inst.class_of(a) != ClassId(a.0 / n) {
            return bad(format!("agent {a} is in the wrong class"));
        }
    }
    for o in inst.items() {
        let pair = o.0 / 2 + 1;
        let c0 = inst.class_neighbors(o, ClassId(0));
        let c1 = inst.class_neighbors(o, ClassId(1));
        let prefix_ok = c0.len() == n - pair + 1 && c0.iter().enumerate().all(|(i, a)| a.0 == i);
        let class1_ok = c1.len() == n && c1.iter().enumerate().all(|(i, a)| a.0 == n + i);
        if !prefix_ok || !class1_ok {
            return bad(format!("item {o} has the wrong neighbors"));
        }
    }
    Ok(())
}

/// Runs the split on an instance that must be the hardness construction and
/// returns the resulting fractional matching.
pub fn run_divisible_split(inst: &Instance, params: SplitParams) -> Result<FractionalMatching> {
    if !inst.num_agents().is_multiple_of(2) || inst.num_agents() == 0 {
        return Err(Error::NonConforming("odd number of agents".into()));
    }
    let n = inst.num_agents() / 2;
    check_conforming(inst, n)?;
    simulate_divisible_split(n, params)?.to_fractional(inst)
}

fn fixed_point_residual(beta: f64) -> f64 {
    (1.0 - (-(1.0 + beta) / 2.0).exp()) * 2.0 / (1.0 + beta) - beta
}

/// Solves `beta = (1 - exp(-(1 + beta) / 2)) * 2 / (1 + beta)` on `[0, 1]` by
/// bisection. Stops once the bracket is narrower than `tol` on each side and
/// the residual is within `tol`.
pub fn solve_divisible_fixed_point(tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    loop {
        let mid = 0.5 * (lo + hi);
        let g = fixed_point_residual(mid);
        if (hi - lo) / 2.0 <= tol && g.abs() <= tol {
            return Ok(mid);
        }
        if hi - lo <= f64::EPSILON {
            return Ok(mid);
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Smallest `i` with `(1 + alpha) / 2 * (H_n - H_{n-i}) >= 1/2`.
pub fn harmonic_stop_index(n: usize, alpha: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} is not in [0, 1]")));
    }
    let scale = (1.0 + alpha) / 2.0;
    let mut tail = 0.0;
    for i in 1..=n {
        tail += 1.0 / (n - i + 1) as f64;
        if scale * tail >= 0.5 {
            return Ok(i);
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_divisible_hardness, gen_upper_triangular};
    use crate::matching::class_loads;

    #[test]
    fn params_bijection() {
        let p = SplitParams::new(1.0 / 3.0).unwrap();
        assert!((p.beta() - 0.5).abs() < 1e-15);
        let q = SplitParams::from_beta(p.beta()).unwrap();
        assert!((q.alpha() - p.alpha()).abs() < 1e-15);
        assert!(SplitParams::new(1.5).is_err());
        assert!(SplitParams::new(-0.1).is_err());
    }

    #[test]
    fn first_item_split() {
        let inst = gen_divisible_hardness(4).unwrap();
        let fm = run_divisible_split(&inst, SplitParams::new(1.0 / 3.0).unwrap()).unwrap();
        for a in 0..4 {
            assert!((fm.cell(AgentId(a), ItemId(0)) - 1.0 / 6.0).abs() < 1e-12);
        }
        for a in 4..8 {
            assert!((fm.cell(AgentId(a), ItemId(0)) - 1.0 / 12.0).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_one_fills_class0_first() {
        let out = simulate_divisible_split(5, SplitParams::new(1.0).unwrap()).unwrap();
        // Class 1 only receives what class 0 has no room for.
        for rec in out.items.iter().filter(|r| r.class1 > 0.0) {
            assert!(rec.class0 < 1.0);
        }
        assert_eq!(out.items[0].class0, 1.0);
        assert_eq!(out.items[0].class1, 0.0);
    }

    #[test]
    fn mass_conservation() {
        let n = 30;
        let inst = gen_divisible_hardness(n).unwrap();
        let params = SplitParams::new(0.2).unwrap();
        let out = simulate_divisible_split(n, params).unwrap();
        let fm = out.to_fractional(&inst).unwrap();
        for o in inst.items() {
            assert!(fm.item_load(o) <= 1.0 + LOAD_TOLERANCE);
        }
        let loads = class_loads(&inst, &fm);
        assert!((loads.iter().sum::<f64>() - fm.total_mass()).abs() < 1e-9);
        assert!((loads[0] - out.class_loads[0]).abs() < 1e-9);
        assert!((loads[1] - out.class_loads[1]).abs() < 1e-9);
        for a in inst.agents() {
            assert!((fm.agent_load(a) - out.agent_loads[a.0]).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_other_instances() {
        let inst = gen_upper_triangular(4).unwrap();
        assert!(matches!(
            run_divisible_split(&inst, SplitParams::new(0.5).unwrap()),
            Err(Error::NonConforming(_))
        ));
    }

    #[test]
    fn fixed_point_endpoints_and_residual() {
        assert!((fixed_point_residual(0.0) - 2.0 * (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        assert!(fixed_point_residual(1.0) < 0.0);
        let beta = solve_divisible_fixed_point(1e-6).unwrap();
        assert!(fixed_point_residual(beta).abs() <= 1e-6);
        assert!((beta - 0.677).abs() < 1e-3);
        assert!(solve_divisible_fixed_point(0.0).is_err());
    }

    #[test]
    fn harmonic_small_cases() {
        assert_eq!(harmonic_stop_index(1, 0.0).unwrap(), 1);
        assert_eq!(harmonic_stop_index(1, 1.0).unwrap(), 1);
        // alpha = 1: H_4 - H_3 = 1/4, + 1/3 = 7/12 >= 1/2.
        assert_eq!(harmonic_stop_index(4, 1.0).unwrap(), 2);
    }
}
