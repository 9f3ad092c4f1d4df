//! Exact checks on finite POMDPs that a pixel policy behaves like the state
//! policy obtained by averaging it over the observation kernel.
//!
//! For a policy `pi(a|o)` and kernel `O(o|s)`, the induced state policy is
//! `pi_xi(a|s) = sum_o pi(a|o) O(o|s)`. The verifier compares, on finite
//! horizons:
//!
//! 1. the per-step conditional action law `P(a_t | s_t)` with `pi_xi`;
//! 2. the law of `(s_0, a_0, ..., s_{H-1}, a_{H-1}, s_H)` under both models;
//! 3. the discounted returns `sum_{t<H} gamma^t r_t`;
//! 4. return gaps between two kernels sharing `(P, r)`;
//! 5. the laws of distance, progress and success computed from per-state
//!    position labels.
//!
//! POMDP quantities are obtained by enumerating `(s, o, a)` sequences; the
//! MDP side enumerates `(s, a)` sequences under the state policy. Neither
//! side reuses the other's intermediate results.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{KeyStream, RngKey};

/// Upper bound on enumerated POMDP trajectories per instance.
pub const MAX_TRAJECTORIES: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("verification failed for instance seed {seed}: {check} deviates by {deviation:e}")]
    VerificationFailed { seed: u64, check: String, deviation: f64 },
}

/// Row-stochastic matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stochastic {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Stochastic {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, TheoryError> {
        if data.len() != rows * cols {
            return Err(TheoryError::DimensionMismatch(format!(
                "{} entries for a {rows}×{cols} table",
                data.len()
            )));
        }
        Ok(Stochastic { rows, cols, data })
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Largest `|row sum - 1|`, or infinity if an entry is negative.
    pub fn max_row_error(&self) -> f64 {
        if self.data.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return f64::INFINITY;
        }
        (0..self.rows)
            .map(|r| (self.row(r).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn random(s: &mut KeyStream, rows: usize, cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            // Exponential weights give a uniform draw on the simplex; some
            // entries are zeroed to exercise sparse rows.
            let mut w: Vec<f64> = (0..cols)
                .map(|_| if s.bernoulli(0.2) { 0.0 } else { s.exponential() })
                .collect();
            if w.iter().all(|&v| v == 0.0) {
                w[s.below(cols as u64) as usize] = 1.0;
            }
            let z: f64 = w.iter().sum();
            data.extend(w.iter().map(|v| v / z));
        }
        Stochastic { rows, cols, data }
    }
}

/// Pixel policy `pi(a|o)`: rows are observations.
pub type PixelPolicy = Stochastic;
/// State policy `pi(a|s)`: rows are states.
pub type StatePolicy = Stochastic;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularPomdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_obs: usize,
    /// `P(s'|s,a)` with row index `s * n_actions + a`.
    pub p: Stochastic,
    /// `r(s,a)` at `s * n_actions + a`.
    pub r: Vec<f64>,
    /// `O(o|s)`.
    pub o: Stochastic,
    pub rho0: Vec<f64>,
    pub gamma: f64,
    pub horizon: usize,
    /// Position label of each state.
    pub x: Vec<i64>,
}

impl TabularPomdp {
    pub fn check(&self) -> Result<(), TheoryError> {
        let dm = |m: String| Err(TheoryError::DimensionMismatch(m));
        if self.p.rows != self.n_states * self.n_actions || self.p.cols != self.n_states {
            return dm("transition table".into());
        }
        if self.o.rows != self.n_states || self.o.cols != self.n_obs {
            return dm("observation kernel".into());
        }
        if self.r.len() != self.n_states * self.n_actions
            || self.rho0.len() != self.n_states
            || self.x.len() != self.n_states
        {
            return dm("reward, initial distribution or labels".into());
        }
        Ok(())
    }

    /// Number of `(s, o, a)` trajectories enumerated for the POMDP law.
    pub fn trajectory_count(&self) -> u64 {
        let branch = (self.n_states * self.n_obs * self.n_actions) as u64;
        branch
            .saturating_pow(self.horizon as u32)
            .saturating_mul((self.n_states * self.n_obs * self.n_actions) as u64)
    }

    /// Same dynamics with a different observation kernel.
    pub fn with_kernel(&self, o: Stochastic) -> TabularPomdp {
        TabularPomdp { n_obs: o.cols, o, ..self.clone() }
    }

    /// A random instance within `|S| <= 4, |O| <= 5, |A| <= 3, H <= 6`,
    /// with the horizon reduced until the trajectory count fits
    /// [`MAX_TRAJECTORIES`].
    pub fn random(key: RngKey) -> TabularPomdp {
        let mut s = key.stream();
        let n_states = s.int_inclusive(2, 4) as usize;
        let n_obs = s.int_inclusive(2, 5) as usize;
        let n_actions = s.int_inclusive(2, 3) as usize;
        let mut horizon = s.int_inclusive(1, 6) as usize;
        let p = Stochastic::random(&mut s, n_states * n_actions, n_states);
        let o = Stochastic::random(&mut s, n_states, n_obs);
        let r = (0..n_states * n_actions).map(|_| s.uniform_range(-1.0, 1.0)).collect();
        let rho0 = {
            let w: Vec<f64> = (0..n_states).map(|_| 0.05 + s.uniform()).collect();
            let z: f64 = w.iter().sum();
            w.iter().map(|v| v / z).collect()
        };
        let gamma = s.uniform_range(0.0, 0.99);
        let x = (0..n_states).map(|_| s.int_inclusive(-3, 3)).collect();
        let mut m = TabularPomdp { n_states, n_actions, n_obs, p, r, o, rho0, gamma, horizon, x };
        while m.trajectory_count() > MAX_TRAJECTORIES {
            horizon -= 1;
            m.horizon = horizon;
        }
        m
    }
}

/// `pi_xi(a|s) = sum_o pi(a|o) O(o|s)`.
pub fn induce_state_policy(o: &Stochastic, pi: &PixelPolicy) -> Result<StatePolicy, TheoryError> {
    if o.cols != pi.rows {
        return Err(TheoryError::DimensionMismatch(format!(
            "kernel has {} observations, policy has {}",
            o.cols, pi.rows
        )));
    }
    let mut data = vec![0.0; o.rows * pi.cols];
    for s in 0..o.rows {
        for ob in 0..o.cols {
            let w = o.at(s, ob);
            for a in 0..pi.cols {
                data[s * pi.cols + a] += pi.at(ob, a) * w;
            }
        }
    }
    Ok(Stochastic { rows: o.rows, cols: pi.cols, data })
}

/// Forward recursion over the joint `(s, o, a)` marginals.
pub fn exact_return_pomdp(m: &TabularPomdp, pi: &PixelPolicy) -> f64 {
    let (ns, na, no) = (m.n_states, m.n_actions, m.n_obs);
    let mut d = m.rho0.clone();
    let mut total = 0.0;
    let mut disc = 1.0;
    for _ in 0..m.horizon {
        let mut next = vec![0.0; ns];
        let mut step = 0.0;
        for s in 0..ns {
            for o in 0..no {
                for a in 0..na {
                    let j = d[s] * m.o.at(s, o) * pi.at(o, a);
                    step += j * m.r[s * na + a];
                    for (sp, n) in next.iter_mut().enumerate() {
                        *n += j * m.p.at(s * na + a, sp);
                    }
                }
            }
        }
        total += disc * step;
        disc *= m.gamma;
        d = next;
    }
    total
}

/// Forward recursion in the latent MDP under a state policy.
pub fn exact_return_mdp(m: &TabularPomdp, pi_s: &StatePolicy) -> f64 {
    let (ns, na) = (m.n_states, m.n_actions);
    let mut d = m.rho0.clone();
    let mut total = 0.0;
    let mut disc = 1.0;
    for _ in 0..m.horizon {
        let mut next = vec![0.0; ns];
        let mut step = 0.0;
        for s in 0..ns {
            for a in 0..na {
                let j = d[s] * pi_s.at(s, a);
                step += j * m.r[s * na + a];
                for (sp, n) in next.iter_mut().enumerate() {
                    *n += j * m.p.at(s * na + a, sp);
                }
            }
        }
        total += disc * step;
        disc *= m.gamma;
        d = next;
    }
    total
}

/// Exhaustive trajectory enumeration: law of state-action paths, indexed in
/// mixed radix `(s_0, a_0, s_1, ..., s_H, a_H)`, and the expected
/// discounted return over `t < H`.
struct Enumeration {
    law: Vec<f64>,
    ret: f64,
}

fn enumerate_pomdp(m: &TabularPomdp, pi: &PixelPolicy) -> Enumeration {
    let (ns, na) = (m.n_states, m.n_actions);
    let mut law = vec![0.0; ns * na * (ns * na).pow(m.horizon as u32)];
    let mut ret = 0.0;
    #[allow(clippy::too_many_arguments)]
    fn rec(
        m: &TabularPomdp,
        pi: &PixelPolicy,
        t: usize,
        s: usize,
        prob: f64,
        acc: f64,
        disc: f64,
        idx: usize,
        law: &mut [f64],
        ret: &mut f64,
    ) {
        let na = m.n_actions;
        if t == m.horizon {
            for o in 0..m.n_obs {
                for a in 0..na {
                    law[idx * na + a] += prob * m.o.at(s, o) * pi.at(o, a);
                }
            }
            *ret += prob * acc;
            return;
        }
        for o in 0..m.n_obs {
            let po = prob * m.o.at(s, o);
            for a in 0..na {
                let pa = po * pi.at(o, a);
                let acc2 = acc + disc * m.r[s * na + a];
                for sp in 0..m.n_states {
                    let idx2 = (idx * na + a) * m.n_states + sp;
                    let psp = pa * m.p.at(s * na + a, sp);
                    rec(m, pi, t + 1, sp, psp, acc2, disc * m.gamma, idx2, law, ret);
                }
            }
        }
    }
    for s0 in 0..ns {
        rec(m, pi, 0, s0, m.rho0[s0], 0.0, 1.0, s0, &mut law, &mut ret);
    }
    Enumeration { law, ret }
}

fn enumerate_mdp(m: &TabularPomdp, pi_s: &StatePolicy) -> Enumeration {
    let (ns, na) = (m.n_states, m.n_actions);
    let mut law = vec![0.0; ns * na * (ns * na).pow(m.horizon as u32)];
    let mut ret = 0.0;
    #[allow(clippy::too_many_arguments)]
    fn rec(
        m: &TabularPomdp,
        pi_s: &StatePolicy,
        t: usize,
        s: usize,
        prob: f64,
        acc: f64,
        disc: f64,
        idx: usize,
        law: &mut [f64],
        ret: &mut f64,
    ) {
        let na = m.n_actions;
        if t == m.horizon {
            for a in 0..na {
                law[idx * na + a] += prob * pi_s.at(s, a);
            }
            *ret += prob * acc;
            return;
        }
        for a in 0..na {
            let pa = prob * pi_s.at(s, a);
            let acc2 = acc + disc * m.r[s * na + a];
            for sp in 0..m.n_states {
                let idx2 = (idx * na + a) * m.n_states + sp;
                rec(m, pi_s, t + 1, sp, pa * m.p.at(s * na + a, sp), acc2, disc * m.gamma, idx2, law, ret);
            }
        }
    }
    for s0 in 0..ns {
        rec(m, pi_s, 0, s0, m.rho0[s0], 0.0, 1.0, s0, &mut law, &mut ret);
    }
    Enumeration { law, ret }
}

/// `P(a_t = a | s_t = s)` from the POMDP joint `(s_t, o_t, a_t)`, for every
/// `t < H` and `s` with positive mass. Returns the largest deviation from
/// `pi_s`.
fn action_law_deviation(m: &TabularPomdp, pi: &PixelPolicy, pi_s: &StatePolicy) -> f64 {
    let (ns, na, no) = (m.n_states, m.n_actions, m.n_obs);
    let mut d = m.rho0.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..m.horizon {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            let mut joint = vec![0.0; na];
            for o in 0..no {
                for (a, j) in joint.iter_mut().enumerate() {
                    *j += d[s] * m.o.at(s, o) * pi.at(o, a);
                }
            }
            if d[s] > 1e-9 {
                for (a, j) in joint.iter().enumerate() {
                    worst = worst.max((j / d[s] - pi_s.at(s, a)).abs());
                }
            }
            for (a, j) in joint.iter().enumerate() {
                for (sp, n) in next.iter_mut().enumerate() {
                    *n += j * m.p.at(s * na + a, sp);
                }
            }
        }
        d = next;
    }
    worst
}

/// Distribution of `x(s_H) - x(s_0)` from a path law.
fn distance_law(m: &TabularPomdp, law: &[f64]) -> BTreeMap<i64, f64> {
    let (ns, na) = (m.n_states, m.n_actions);
    let span = na * (ns * na).pow(m.horizon as u32);
    let mut out = BTreeMap::new();
    for (idx, &p) in law.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let s_last = (idx / na) % ns;
        let s0 = idx / span;
        *out.entry(m.x[s_last] - m.x[s0]).or_insert(0.0) += p;
    }
    out
}

fn map_deviation<K: Ord + Copy>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    a.keys()
        .chain(b.keys())
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Laws of the three trajectory metrics for threshold `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricLaws {
    pub distance: BTreeMap<i64, f64>,
    /// Keyed by distance; the progress value is `distance / d`.
    pub progress: BTreeMap<i64, f64>,
    /// Index 0: failure, 1: success.
    pub success: [f64; 2],
}

fn metric_laws(m: &TabularPomdp, law: &[f64], d: i64) -> MetricLaws {
    let distance = distance_law(m, law);
    let mut progress = BTreeMap::new();
    let mut success = [0.0; 2];
    for (&k, &p) in &distance {
        // Progress values are distinct for distinct distances (d > 0), so the
        // progress law is the distance law relabelled by k / d.
        debug_assert!(d > 0);
        *progress.entry(k).or_insert(0.0) += p;
        success[(k >= d) as usize] += p;
    }
    MetricLaws { distance, progress, success }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub seed: u64,
    pub n_states: usize,
    pub n_actions: usize,
    pub n_obs: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub trajectories: u64,
    pub tol: f64,
    pub row_sum_dev: f64,
    pub action_law_dev: f64,
    pub path_law_dev: f64,
    pub return_dev: f64,
    /// Recursion vs. enumeration on the POMDP side.
    pub oracle_dev: f64,
    pub gap_dev: f64,
    pub distance_dev: f64,
    pub progress_dev: f64,
    pub success_dev: f64,
    pub expectation_dev: f64,
    pub passed: bool,
}

impl Certificate {
    fn checks(&self) -> [(&'static str, f64); 11] {
        [
            ("row sums", self.row_sum_dev),
            ("conditional action law", self.action_law_dev),
            ("state-action law", self.path_law_dev),
            ("return", self.return_dev),
            ("enumeration oracle", self.oracle_dev),
            ("gap identity", self.gap_dev),
            ("distance law", self.distance_dev),
            ("progress law", self.progress_dev),
            ("success law", self.success_dev),
            ("metric expectations", self.expectation_dev),
            ("none", 0.0),
        ]
    }

    pub fn worst(&self) -> (&'static str, f64) {
        self.checks()
            .into_iter()
            .fold(("none", 0.0), |acc, c| if c.1 > acc.1 || c.1.is_nan() { c } else { acc })
    }

    pub fn into_result(self) -> Result<Certificate, TheoryError> {
        if self.passed {
            Ok(self)
        } else {
            let (check, deviation) = self.worst();
            Err(TheoryError::VerificationFailed { seed: self.seed, check: check.into(), deviation })
        }
    }
}

/// Run every check, comparing the POMDP under `pi` with the MDP under
/// `pi_s` (normally the induced policy). `o_alt` is a second kernel for the
/// gap identity and `d` the success threshold.
pub fn certify(
    seed: u64,
    m: &TabularPomdp,
    pi: &PixelPolicy,
    pi_s: &StatePolicy,
    o_alt: &Stochastic,
    d: i64,
    tol: f64,
) -> Result<Certificate, TheoryError> {
    m.check()?;
    if pi.rows != m.n_obs || pi.cols != m.n_actions || pi_s.rows != m.n_states || pi_s.cols != m.n_actions {
        return Err(TheoryError::DimensionMismatch("policy shape".into()));
    }
    let pomdp = enumerate_pomdp(m, pi);
    let mdp = enumerate_mdp(m, pi_s);
    let j_pomdp = exact_return_pomdp(m, pi);
    let j_mdp = exact_return_mdp(m, pi_s);

    let m_alt = m.with_kernel(o_alt.clone());
    let pi_s_alt = induce_state_policy(o_alt, pi)?;
    let gap_pomdp = j_pomdp - exact_return_pomdp(&m_alt, pi);
    let gap_mdp = j_mdp - exact_return_mdp(&m_alt, &pi_s_alt);

    let la = metric_laws(m, &pomdp.law, d);
    let lb = metric_laws(m, &mdp.law, d);
    let mean = |l: &MetricLaws| {
        let dist: f64 = l.distance.iter().map(|(k, p)| *k as f64 * p).sum();
        [dist, dist / d as f64, l.success[1]]
    };

    let mut c = Certificate {
        seed,
        n_states: m.n_states,
        n_actions: m.n_actions,
        n_obs: m.n_obs,
        horizon: m.horizon,
        gamma: m.gamma,
        trajectories: m.trajectory_count(),
        tol,
        row_sum_dev: pi_s.max_row_error(),
        action_law_dev: action_law_deviation(m, pi, pi_s),
        path_law_dev: max_abs_diff(&pomdp.law, &mdp.law),
        return_dev: (j_pomdp - j_mdp).abs().max((pomdp.ret - mdp.ret).abs()),
        oracle_dev: (j_pomdp - pomdp.ret).abs().max((j_mdp - mdp.ret).abs()),
        gap_dev: (gap_pomdp - gap_mdp).abs(),
        distance_dev: map_deviation(&la.distance, &lb.distance),
        progress_dev: map_deviation(&la.progress, &lb.progress),
        success_dev: max_abs_diff(&la.success, &lb.success),
        expectation_dev: max_abs_diff(&mean(&la), &mean(&lb)),
        passed: false,
    };
    c.passed = c.checks().iter().all(|(_, v)| *v <= tol);
    Ok(c)
}

/// All checks for `pi` against its induced state policy.
pub fn verify_equivalence(
    seed: u64,
    m: &TabularPomdp,
    pi: &PixelPolicy,
    o_alt: &Stochastic,
    d: i64,
    tol: f64,
) -> Result<Certificate, TheoryError> {
    let pi_s = induce_state_policy(&m.o, pi)?;
    certify(seed, m, pi, &pi_s, o_alt, d, tol)?.into_result()
}

/// Metric-law checks only: distance, progress and success distributions
/// (and their expectations) under both models.
pub fn verify_trajectory_metrics(
    seed: u64,
    m: &TabularPomdp,
    pi: &PixelPolicy,
    d: i64,
    tol: f64,
) -> Result<Certificate, TheoryError> {
    if d <= 0 {
        return Err(TheoryError::DimensionMismatch("success threshold must be positive".into()));
    }
    let pi_s = induce_state_policy(&m.o, pi)?;
    let c = certify(seed, m, pi, &pi_s, &m.o, d, tol)?;
    let metric_ok = [c.distance_dev, c.progress_dev, c.success_dev, c.expectation_dev]
        .iter()
        .all(|v| *v <= tol);
    if metric_ok {
        Ok(c)
    } else {
        let (check, deviation) = [
            ("distance law", c.distance_dev),
            ("progress law", c.progress_dev),
            ("success law", c.success_dev),
            ("metric expectations", c.expectation_dev),
        ]
        .into_iter()
        .fold(("none", 0.0), |a, b| if b.1 > a.1 { b } else { a });
        Err(TheoryError::VerificationFailed { seed, check: check.into(), deviation })
    }
}

/// A random instance, pixel policy, alternative kernel and threshold.
pub struct Case {
    pub seed: u64,
    pub pomdp: TabularPomdp,
    pub policy: PixelPolicy,
    pub alt_kernel: Stochastic,
    pub threshold: i64,
}

pub fn random_case(seed: u64) -> Case {
    let key = RngKey::from_seed(seed);
    let pomdp = TabularPomdp::random(key.child(0));
    let mut s = key.child(1).stream();
    let policy = Stochastic::random(&mut s, pomdp.n_obs, pomdp.n_actions);
    let alt_kernel = Stochastic::random(&mut s, pomdp.n_states, pomdp.n_obs);
    let threshold = s.int_inclusive(1, 4);
    Case { seed, pomdp, policy, alt_kernel, threshold }
}

/// Certificates for `n` random cases with seeds `seed, seed + 1, ...`.
pub fn verify_random(n: usize, seed: u64, tol: f64) -> Vec<Certificate> {
    use rayon::prelude::*;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let c = random_case(seed.wrapping_add(i));
            let pi_s = induce_state_policy(&c.pomdp.o, &c.policy).expect("shapes agree");
            certify(c.seed, &c.pomdp, &c.policy, &pi_s, &c.alt_kernel, c.threshold, tol)
                .expect("shapes agree")
        })
        .collect()
}

/// `pi_s` with mass `eps` moved between two actions of state `s`.
pub fn perturb_row(pi_s: &StatePolicy, s: usize, eps: f64) -> StatePolicy {
    let mut out = pi_s.clone();
    let row = &mut out.data[s * out.cols..(s + 1) * out.cols];
    let hi = (0..row.len()).max_by(|&i, &j| row[i].total_cmp(&row[j])).unwrap();
    let lo = (hi + 1) % row.len();
    row[hi] -= eps;
    row[lo] += eps;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: usize, cols: usize, v: &[f64]) -> Stochastic {
        Stochastic::new(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn delta_kernel_selects_policy_rows() {
        let o = mat(2, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let pi = mat(3, 2, &[0.1, 0.9, 0.2, 0.8, 0.7, 0.3]);
        let ps = induce_state_policy(&o, &pi).unwrap();
        assert_eq!(ps.row(0), pi.row(2));
        assert_eq!(ps.row(1), pi.row(0));
    }

    #[test]
    fn two_point_mixture() {
        let o = mat(1, 2, &[0.5, 0.5]);
        let pi = mat(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(induce_state_policy(&o, &pi).unwrap().at(0, 0), 0.5);
    }

    #[test]
    fn dimension_mismatch() {
        let o = mat(1, 2, &[0.5, 0.5]);
        let pi = mat(3, 1, &[1.0, 1.0, 1.0]);
        assert!(matches!(induce_state_policy(&o, &pi), Err(TheoryError::DimensionMismatch(_))));
        assert!(Stochastic::new(2, 2, vec![1.0]).is_err());
    }

    #[test]
    fn induced_rows_stochastic_on_random_instances() {
        for seed in 0..1000 {
            let c = random_case(seed);
            let ps = induce_state_policy(&c.pomdp.o, &c.policy).unwrap();
            assert!(ps.max_row_error() <= 1e-12, "seed {seed}");
        }
    }

    fn one_state(horizon: usize, r: f64, gamma: f64) -> TabularPomdp {
        TabularPomdp {
            n_states: 1,
            n_actions: 2,
            n_obs: 1,
            p: mat(2, 1, &[1.0, 1.0]),
            r: vec![r, r],
            o: mat(1, 1, &[1.0]),
            rho0: vec![1.0],
            gamma,
            horizon,
            x: vec![0],
        }
    }

    #[test]
    fn trivial_returns() {
        let pi = mat(1, 2, &[0.3, 0.7]);
        assert_eq!(exact_return_pomdp(&one_state(4, 0.0, 0.9), &pi), 0.0);
        assert_eq!(exact_return_pomdp(&one_state(1, 1.0, 0.9), &pi), 1.0);
    }

    #[test]
    fn gamma_zero_is_one_step() {
        let mut c = random_case(3);
        c.pomdp.gamma = 0.0;
        let ps = induce_state_policy(&c.pomdp.o, &c.policy).unwrap();
        let m = &c.pomdp;
        let expect: f64 = (0..m.n_states)
            .map(|s| m.rho0[s] * (0..m.n_actions).map(|a| ps.at(s, a) * m.r[s * m.n_actions + a]).sum::<f64>())
            .sum();
        assert!((exact_return_mdp(m, &ps) - expect).abs() < 1e-15);
    }

    #[test]
    fn two_state_chain_closed_form() {
        // Action 0 stays, action 1 switches with probability 2p; under the
        // uniform policy the chain switches with probability p per step.
        let (p, gamma, h) = (0.15, 0.9, 7usize);
        let m = TabularPomdp {
            n_states: 2,
            n_actions: 2,
            n_obs: 1,
            p: mat(4, 2, &[1.0, 0.0, 1.0 - 2.0 * p, 2.0 * p, 0.0, 1.0, 2.0 * p, 1.0 - 2.0 * p]),
            r: vec![1.0, 1.0, 0.0, 0.0],
            o: mat(2, 1, &[1.0, 1.0]),
            rho0: vec![1.0, 0.0],
            gamma,
            horizon: h,
            x: vec![0, 1],
        };
        let q = gamma * (1.0 - 2.0 * p);
        let closed = 0.5 * (1.0 - gamma.powi(h as i32)) / (1.0 - gamma) + 0.5 * (1.0 - q.powi(h as i32)) / (1.0 - q);
        let uniform = mat(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        assert!((exact_return_mdp(&m, &uniform) - closed).abs() < 1e-12);
        let pi = mat(1, 2, &[0.5, 0.5]);
        assert!((exact_return_pomdp(&m, &pi) - closed).abs() < 1e-12);
    }

    #[test]
    fn deterministic_point_mass_metrics() {
        let m = TabularPomdp {
            n_states: 2,
            n_actions: 1,
            n_obs: 1,
            p: mat(2, 2, &[0.0, 1.0, 0.0, 1.0]),
            r: vec![0.0, 1.0],
            o: mat(2, 1, &[1.0, 1.0]),
            rho0: vec![1.0, 0.0],
            gamma: 0.5,
            horizon: 3,
            x: vec![0, 5],
        };
        let pi = mat(1, 1, &[1.0]);
        let c = verify_equivalence(0, &m, &pi, &m.o.clone(), 4, 1e-12).unwrap();
        assert!(c.passed);
        assert!(verify_trajectory_metrics(0, &m, &pi, 4, 1e-12).is_ok());
        let law = enumerate_mdp(&m, &mat(2, 1, &[1.0, 1.0])).law;
        let ml = metric_laws(&m, &law, 4);
        assert_eq!(ml.distance, BTreeMap::from([(5, 1.0)]));
        assert_eq!(ml.success, [0.0, 1.0]);
    }

    #[test]
    fn random_cases_pass_and_perturbation_fails() {
        for cert in verify_random(30, 100, 1e-12) {
            assert!(cert.passed, "{cert:?}");
        }
        let c = random_case(7);
        let ps = induce_state_policy(&c.pomdp.o, &c.policy).unwrap();
        let bad = perturb_row(&ps, 0, 1e-3);
        let cert = certify(7, &c.pomdp, &c.policy, &bad, &c.alt_kernel, c.threshold, 1e-12).unwrap();
        assert!(!cert.passed);
        assert!(cert.path_law_dev > 1e-6);
        assert!(matches!(cert.into_result(), Err(TheoryError::VerificationFailed { seed: 7, .. })));
    }

    #[test]
    fn trajectory_cap_respected() {
        for seed in 0..200 {
            let c = random_case(seed);
            assert!(c.pomdp.trajectory_count() <= MAX_TRAJECTORIES);
            assert!(c.pomdp.horizon >= 1);
        }
    }

    proptest! {
        #[test]
        fn induction_is_linear(seed in any::<u64>(), lambda in 0.0f64..=1.0) {
            let c = random_case(seed);
            let mut s = RngKey::from_seed(seed ^ 1).stream();
            let pi2 = Stochastic::random(&mut s, c.policy.rows, c.policy.cols);
            let mix = Stochastic {
                data: c.policy.data.iter().zip(&pi2.data).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect(),
                ..c.policy.clone()
            };
            let a = induce_state_policy(&c.pomdp.o, &c.policy).unwrap();
            let b = induce_state_policy(&c.pomdp.o, &pi2).unwrap();
            let m = induce_state_policy(&c.pomdp.o, &mix).unwrap();
            for i in 0..m.data.len() {
                prop_assert!((m.data[i] - (lambda * a.data[i] + (1.0 - lambda) * b.data[i])).abs() < 1e-12);
            }
        }
    }
}
