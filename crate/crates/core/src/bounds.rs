//! Closed-form convergence estimates and the combinatorial inequalities behind
//! the trap bounds.
//!
//! Inequalities over integer vectors are decided in exact big-integer
//! arithmetic. Sums that grow with `K` are evaluated in the log domain; for
//! `K <= 20` the same sums are also available as exact rationals.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::{ln_binomial, ln_factorial};

use crate::error::{invalid, Result};
use crate::util::{floor_pow, pow_snapped};

/// Largest `K` for which the exact rational route is used.
pub const EXACT_K_LIMIT: usize = 20;

/// Parameters of the trap/equilibrium coexistence bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    /// Constant of the small-trap term; fitted, see [`fit_small_trap_constant`].
    pub cnst: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            alpha: 0.5,
            beta: 0.2,
            sigma: 0.8,
            cnst: 1.0,
        }
    }
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        open_unit("alpha", self.alpha)?;
        open_unit("sigma", self.sigma)?;
        if !(self.beta < self.alpha / 2.0) {
            return Err(invalid(format!("beta must be below alpha/2, got {}", self.beta)));
        }
        if !(self.cnst > 0.0) {
            return Err(invalid(format!("cnst must be positive, got {}", self.cnst)));
        }
        Ok(())
    }
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in (0,1), got {v}")))
    }
}

/// Per-column (or per-row) occupancy counts of a set of profiles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnWeightVector(pub Vec<usize>);

impl ColumnWeightVector {
    /// Total weight `ℓ(c)`.
    pub fn ell(&self) -> usize {
        self.0.iter().sum()
    }

    /// Number of nonzero entries.
    pub fn nonzero(&self) -> usize {
        self.0.iter().filter(|&&x| x > 0).count()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<usize>> for ColumnWeightVector {
    fn from(v: Vec<usize>) -> Self {
        ColumnWeightVector(v)
    }
}

// --- best-response convergence -------------------------------------------

fn check_k(k: usize, min: usize) -> Result<()> {
    if k < min {
        Err(invalid(format!("K must be at least {min}, got {k}")))
    } else {
        Ok(())
    }
}

/// `Σ_{t=1}^{2K-3} Π_{j=1}^{t} (K-1-⌊j/2⌋)/K`.
fn product_sum(k: usize) -> f64 {
    let kf = k as f64;
    let mut prod = 1.0;
    let mut sum = 0.0;
    for j in 1..=(2 * k).saturating_sub(3) {
        prod *= (k - 1 - j / 2) as f64 / kf;
        sum += prod;
    }
    sum
}

fn product_sum_exact(k: usize) -> BigRational {
    let kk = BigInt::from(k);
    let mut prod = BigRational::one();
    let mut sum = BigRational::zero();
    for j in 1..=(2 * k).saturating_sub(3) {
        prod *= BigRational::new(BigInt::from(k - 1 - j / 2), kk.clone());
        sum += &prod;
    }
    sum
}

/// Probability that best-response dynamics converges, from the row/column
/// avoidance recursion: `1/K + (1/K) Σ_{t=1}^{2K-3} Π_{j=1}^{t} (K-1-⌊j/2⌋)/K`.
pub fn brd_convergence_formula(k: usize) -> Result<f64> {
    check_k(k, 2)?;
    let kf = k as f64;
    Ok((1.0 + product_sum(k)) / kf)
}

/// [`brd_convergence_formula`] as an exact rational.
pub fn brd_convergence_formula_exact(k: usize) -> Result<BigRational> {
    check_k(k, 2)?;
    Ok((BigRational::one() + product_sum_exact(k)) / BigRational::from_integer(BigInt::from(k)))
}

/// `1/K + sqrt(π/K)`.
pub fn brd_upper_bound(k: usize) -> f64 {
    let kf = k as f64;
    1.0 / kf + (std::f64::consts::PI / kf).sqrt()
}

/// The chain of upper bounds leading from the product sum to `sqrt(Kπ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannChain {
    pub k: usize,
    /// `Σ_{t=1}^{2K-3} Π_{j=1}^{t} (K-1-⌊j/2⌋)/K`
    pub product_sum: f64,
    /// `Σ_{t=1}^{2K-3} exp(-(1/K) Σ_{j=3}^{t+2} ⌊j/2⌋)`
    pub exp_sum: f64,
    /// `2 Σ_{t=1}^{K-1} exp(-t²/K)`
    pub gaussian_sum: f64,
    /// The same sum stopped at `K-2`, which is empty at `K = 2`.
    pub gaussian_sum_literal: f64,
    /// `sqrt(Kπ)`
    pub integral_bound: f64,
}

impl RiemannChain {
    pub fn holds(&self) -> bool {
        self.product_sum <= self.exp_sum
            && self.exp_sum <= self.gaussian_sum
            && self.gaussian_sum <= self.integral_bound
    }

    /// The chain with the Gaussian sum stopped at `K-2`.
    pub fn holds_literal(&self) -> bool {
        self.product_sum <= self.exp_sum
            && self.exp_sum <= self.gaussian_sum_literal
            && self.gaussian_sum_literal <= self.integral_bound
    }
}

pub fn riemann_chain(k: usize) -> Result<RiemannChain> {
    check_k(k, 2)?;
    let kf = k as f64;
    let mut exp_sum = 0.0;
    let mut floors = 0usize;
    for t in 1..=2 * k - 3 {
        floors += (t + 2) / 2;
        exp_sum += (-(floors as f64) / kf).exp();
    }
    let gauss = |upto: usize| 2.0 * (1..=upto).map(|t| (-((t * t) as f64) / kf).exp()).sum::<f64>();
    Ok(RiemannChain {
        k,
        product_sum: product_sum(k),
        exp_sum,
        gaussian_sum: gauss(k - 1),
        gaussian_sum_literal: gauss(k - 2),
        integral_bound: (kf * std::f64::consts::PI).sqrt(),
    })
}

pub fn riemann_chain_check(k: usize) -> Result<bool> {
    Ok(riemann_chain(k)?.holds())
}

/// Limiting Poisson(1) law of the number of pure equilibria: `e^{-1}/k!`.
pub fn poisson_pne_pmf(k: u64) -> f64 {
    (-1.0 - ln_factorial(k)).exp()
}

// --- exact combinatorial inequalities ------------------------------------

fn factorials(n: usize) -> Vec<BigUint> {
    let mut f = Vec::with_capacity(n + 1);
    f.push(BigUint::one());
    for i in 1..=n {
        let next = &f[i - 1] * BigUint::from(i);
        f.push(next);
    }
    f
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn check_vector(c: &ColumnWeightVector, k: usize, max_entry: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("K must be at least 1"));
    }
    if c.len() != k {
        return Err(invalid(format!("vector has {} entries, expected K = {k}", c.len())));
    }
    if let Some(x) = c.0.iter().find(|&&x| x > max_entry) {
        return Err(invalid(format!("entry {x} exceeds {max_entry}")));
    }
    Ok(())
}

/// `Π c_i!(K-c_i)!` over all entries.
fn factorial_pair_product(c: &[usize], k: usize, f: &[BigUint]) -> BigUint {
    c.iter().map(|&x| &f[x] * &f[k - x]).product()
}

/// Spreading-versus-concentrating bound:
/// `Π c_i!(K-c_i)! <= (m!)^q ((K-m)!)^q (K!)^(K-q)` with `q = ⌊ℓ/m⌋`.
pub fn check_prop_comb(c: &ColumnWeightVector, m: usize, k: usize) -> Result<bool> {
    if m == 0 || m > k {
        return Err(invalid(format!("m must lie in [1, K], got {m}")));
    }
    check_vector(c, k, m)?;
    let f = factorials(k);
    let q = c.ell() / m;
    let lhs = factorial_pair_product(&c.0, k, &f);
    let rhs = (&f[m] * &f[k - m]).pow(q as u32) * f[k].pow((k - q) as u32);
    Ok(lhs <= rhs)
}

/// Both readings of the few-nonzero-columns bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CocombReport {
    /// Product over nonzero entries against
    /// `(ℓ-j+1)!(K-ℓ+j-1)!((K-1)!)^(j-1)(K!)^(ℓ-j)`.
    pub corrected: bool,
    /// Product over all entries against
    /// `(ℓ-j+1)!(K-ℓ+j-1)((K-1)!)^(j-1)(K!)^(ℓ-j)` (no factorial on the second factor).
    pub literal: bool,
}

pub fn cocomb_report(c: &ColumnWeightVector, k: usize) -> Result<CocombReport> {
    check_vector(c, k, k)?;
    let ell = c.ell();
    if ell >= k {
        return Err(invalid(format!("ℓ(c) = {ell} must be below K = {k}")));
    }
    let j = c.nonzero();
    if j == 0 {
        return Err(invalid("c needs at least one nonzero entry"));
    }
    let f = factorials(k);
    let nonzero: Vec<usize> = c.0.iter().copied().filter(|&x| x > 0).collect();
    let common = &f[ell - j + 1] * f[k - 1].pow((j - 1) as u32) * f[k].pow((ell - j) as u32);
    let corrected_rhs = &common * &f[k - ell + j - 1];
    let literal_rhs = &common * BigUint::from(k - ell + j - 1);
    Ok(CocombReport {
        corrected: factorial_pair_product(&nonzero, k, &f) <= corrected_rhs,
        literal: factorial_pair_product(&c.0, k, &f) <= literal_rhs,
    })
}

/// Few-nonzero-columns bound, in the form its downstream use needs: the
/// product runs over the `j` nonzero entries and the second factor is
/// `(K-ℓ+j-1)!`.
pub fn check_prop_cocomb(c: &ColumnWeightVector, k: usize) -> Result<bool> {
    Ok(cocomb_report(c, k)?.corrected)
}

/// `Π binom(m,c_i)/binom(K,c_i) <= (m/K)^ℓ`, cross-multiplied to integers.
pub fn check_prod_ratio(c: &ColumnWeightVector, m: usize, k: usize) -> Result<bool> {
    if m == 0 || m > k {
        return Err(invalid(format!("m must lie in [1, K], got {m}")));
    }
    check_vector(c, k, m)?;
    let ell = c.ell();
    if ell >= k {
        return Err(invalid(format!("ℓ(c) = {ell} must be below K = {k}")));
    }
    let num: BigUint = c.0.iter().map(|&x| binomial(m, x)).product();
    let den: BigUint = c.0.iter().map(|&x| binomial(k, x)).product();
    let lhs = num * BigUint::from(k).pow(ell as u32);
    let rhs = BigUint::from(m).pow(ell as u32) * den;
    Ok(lhs <= rhs)
}

fn shifted(c: &[usize], j: usize, i: usize) -> Vec<usize> {
    let mut t = c.to_vec();
    t[j] += 1;
    t[i] -= 1;
    t
}

/// Ratio of `Π c!(K-c)!` after moving one unit of weight from column `from`
/// to column `to`, computed from the two full products.
pub fn comb_shift_ratio(c: &ColumnWeightVector, to: usize, from: usize, k: usize) -> Result<BigRational> {
    check_vector(c, k, k)?;
    if to == from || c.0[from] == 0 || c.0[to] >= k {
        return Err(invalid("shift needs distinct columns, a nonempty source and room at the target"));
    }
    let f = factorials(k);
    let before = factorial_pair_product(&c.0, k, &f);
    let after = factorial_pair_product(&shifted(&c.0, to, from), k, &f);
    Ok(BigRational::new(after.into(), before.into()))
}

/// Ratio of `Π binom(m,c)/binom(K,c)` after the same weight move.
pub fn prod_ratio_shift_ratio(
    c: &ColumnWeightVector,
    to: usize,
    from: usize,
    m: usize,
    k: usize,
) -> Result<BigRational> {
    check_vector(c, k, m)?;
    if to == from || c.0[from] == 0 || c.0[to] >= m {
        return Err(invalid("shift needs distinct columns, a nonempty source and room at the target"));
    }
    let value = |v: &[usize]| {
        let num: BigUint = v.iter().map(|&x| binomial(m, x)).product();
        let den: BigUint = v.iter().map(|&x| binomial(k, x)).product();
        BigRational::new(num.into(), den.into())
    };
    Ok(value(&shifted(&c.0, to, from)) / value(&c.0))
}

/// Which combinatorial inequality to sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombCheck {
    Comb,
    Cocomb,
    ProdRatio,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SweepSummary {
    pub checked: u64,
    pub violations: u64,
    /// First few counterexamples as `(K, m, c)`.
    pub examples: Vec<(usize, usize, Vec<usize>)>,
}

impl SweepSummary {
    fn record(&mut self, ok: bool, k: usize, m: usize, c: &[usize]) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.examples.len() < 10 {
                self.examples.push((k, m, c.to_vec()));
            }
        }
    }
}

/// Calls `f` on every vector in `[0, hi]^k`.
fn for_each_vector(k: usize, hi: usize, mut f: impl FnMut(&[usize])) {
    let mut c = vec![0usize; k];
    loop {
        f(&c);
        let mut i = 0;
        loop {
            if i == k {
                return;
            }
            if c[i] < hi {
                c[i] += 1;
                break;
            }
            c[i] = 0;
            i += 1;
        }
    }
}

/// Every admissible `(c, m)` for `K` in `1..=k_max`.
pub fn sweep_exhaustive(which: CombCheck, k_max: usize) -> SweepSummary {
    let mut summary = SweepSummary::default();
    for k in 1..=k_max {
        match which {
            CombCheck::Comb => {
                for m in 1..=k {
                    for_each_vector(k, m, |c| {
                        let ok = check_prop_comb(&c.to_vec().into(), m, k).expect("admissible");
                        summary.record(ok, k, m, c);
                    });
                }
            }
            CombCheck::Cocomb => for_each_vector(k, k, |c| {
                let ell: usize = c.iter().sum();
                if ell >= 1 && ell < k {
                    let ok = check_prop_cocomb(&c.to_vec().into(), k).expect("admissible");
                    summary.record(ok, k, 0, c);
                }
            }),
            CombCheck::ProdRatio => {
                for m in 1..=k {
                    for_each_vector(k, m, |c| {
                        if c.iter().sum::<usize>() < k {
                            let ok = check_prod_ratio(&c.to_vec().into(), m, k).expect("admissible");
                            summary.record(ok, k, m, c);
                        }
                    });
                }
            }
        }
    }
    summary
}

/// `cases` random admissible inputs at a fixed `K`.
pub fn sweep_random<R: Rng + ?Sized>(which: CombCheck, k: usize, cases: u64, rng: &mut R) -> SweepSummary {
    let mut summary = SweepSummary::default();
    while summary.checked < cases {
        let m = rng.random_range(1..=k);
        match which {
            CombCheck::Comb => {
                let c: Vec<usize> = (0..k).map(|_| rng.random_range(0..=m)).collect();
                let ok = check_prop_comb(&c.clone().into(), m, k).expect("admissible");
                summary.record(ok, k, m, &c);
            }
            CombCheck::Cocomb => {
                let c = random_light_vector(k, k, rng);
                if c.iter().any(|&x| x > 0) {
                    let ok = check_prop_cocomb(&c.clone().into(), k).expect("admissible");
                    summary.record(ok, k, 0, &c);
                }
            }
            CombCheck::ProdRatio => {
                let c = random_light_vector(k, m, rng);
                let ok = check_prod_ratio(&c.clone().into(), m, k).expect("admissible");
                summary.record(ok, k, m, &c);
            }
        }
    }
    summary
}

/// Random vector in `[0, hi]^k` with total weight below `k`.
fn random_light_vector<R: Rng + ?Sized>(k: usize, hi: usize, rng: &mut R) -> Vec<usize> {
    let total = rng.random_range(0..k);
    let mut c = vec![0usize; k];
    let mut placed = 0;
    while placed < total {
        let i = rng.random_range(0..k);
        if c[i] < hi {
            c[i] += 1;
            placed += 1;
        }
    }
    c
}

// --- asymptotic sums ------------------------------------------------------

fn ln_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn ln_fact(n: usize) -> f64 {
    ln_factorial(n as u64)
}

fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().expect("fits").to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("fits") as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational.
pub fn ln_rational(r: &BigRational) -> f64 {
    let num = r.numer().to_biguint().expect("positive");
    let den = r.denom().to_biguint().expect("positive");
    ln_biguint(&num) - ln_biguint(&den)
}

fn kais1_range(k: usize, alpha: f64) -> Result<usize> {
    if k < 5 {
        return Err(invalid(format!("K must be at least 5, got {k}")));
    }
    open_unit("alpha", alpha)?;
    Ok(floor_pow(k, alpha))
}

/// Natural log of the small-trap union bound
/// `S = Σ_{n=4}^{⌊K^α⌋} Σ_{j=2}^{n-2} (K-n+j-1)!(n-j+1)! / (K^(j-1) j!(K-j)!) · binom(n+K-1, K) · (j/K)^n`,
/// in the log domain. `-inf` when the range is empty.
pub fn kais1_ln_sum(k: usize, alpha: f64) -> Result<f64> {
    let top = kais1_range(k, alpha)?;
    let lk = (k as f64).ln();
    let mut terms = Vec::new();
    for n in 4..=top {
        for j in 2..=n - 2 {
            terms.push(
                ln_fact(k - n + j - 1) + ln_fact(n - j + 1)
                    - (j - 1) as f64 * lk
                    - ln_fact(j)
                    - ln_fact(k - j)
                    + ln_binomial((n + k - 1) as u64, k as u64)
                    + n as f64 * ((j as f64).ln() - lk),
            );
        }
    }
    Ok(ln_sum_exp(&terms))
}

/// The same sum as [`kais1_ln_sum`], exactly.
pub fn kais1_sum_exact(k: usize, alpha: f64) -> Result<BigRational> {
    let top = kais1_range(k, alpha)?;
    let f = factorials(2 * k);
    let big = |x: &BigUint| BigInt::from(x.clone());
    let kk = BigInt::from(k);
    let mut s = BigRational::zero();
    for n in 4..=top {
        for j in 2..=n - 2 {
            let num = big(&(&f[k - n + j - 1] * &f[n - j + 1] * binomial(n + k - 1, k)))
                * BigInt::from(j).pow(n as u32);
            let den = kk.pow((j - 1) as u32) * big(&(&f[j] * &f[k - j])) * kk.pow(n as u32);
            s += BigRational::new(num, den);
        }
    }
    Ok(s)
}

/// `S · K^(3-2α)`; bounded in `K` if the small-trap term decays like `K^(-3+2α)`.
/// Exact for `K <= 20`, log domain above.
pub fn kais1_ratio(k: usize, alpha: f64) -> Result<f64> {
    let scale = (3.0 - 2.0 * alpha) * (k as f64).ln();
    if k <= EXACT_K_LIMIT {
        let s = kais1_sum_exact(k, alpha)?;
        if s.is_zero() {
            return Ok(0.0);
        }
        return Ok((ln_rational(&s) + scale).exp());
    }
    let ln_s = kais1_ln_sum(k, alpha)?;
    Ok(if ln_s == f64::NEG_INFINITY { 0.0 } else { (ln_s + scale).exp() })
}

/// Smallest constant making the small-trap bound hold on `grid`:
/// the largest [`kais1_ratio`] seen.
pub fn fit_small_trap_constant(alpha: f64, grid: &[usize]) -> Result<f64> {
    grid.iter()
        .map(|&k| kais1_ratio(k, alpha))
        .try_fold(0.0f64, |acc, r| Ok(acc.max(r?)))
}

fn kais2_params(k: usize, alpha: f64, beta: f64) -> Result<(usize, usize)> {
    check_k(k, 2)?;
    open_unit("alpha", alpha)?;
    if !(beta < alpha / 2.0) {
        return Err(invalid(format!("beta must be below alpha/2, got {beta}")));
    }
    let n0 = floor_pow(k, alpha);
    let width = floor_pow(k, alpha / 2.0);
    Ok((n0, width))
}

/// Natural log of the large-trap sum
/// `Σ_{n=⌊K^α⌋}^{K²} binom(n+K-1, K) · binom(K, N)^(-⌊n/N⌋)` with `N = ⌊K^(α/2)⌋`.
pub fn kais2_ln_sum(k: usize, alpha: f64, beta: f64) -> Result<f64> {
    let (n0, width) = kais2_params(k, alpha, beta)?;
    let ln_choose = ln_binomial(k as u64, width as u64);
    let terms: Vec<f64> = (n0..=k * k)
        .map(|n| ln_binomial((n + k - 1) as u64, k as u64) - (n / width) as f64 * ln_choose)
        .collect();
    Ok(ln_sum_exp(&terms))
}

/// The same sum as [`kais2_ln_sum`], exactly.
pub fn kais2_sum_exact(k: usize, alpha: f64, beta: f64) -> Result<BigRational> {
    let (n0, width) = kais2_params(k, alpha, beta)?;
    let choose = BigInt::from(binomial(k, width));
    let mut s = BigRational::zero();
    for n in n0..=k * k {
        s += BigRational::new(BigInt::from(binomial(n + k - 1, k)), choose.pow((n / width) as u32));
    }
    Ok(s)
}

/// `ln(sum) - ln(K^(-βK^α))`: negative exactly when the large-trap sum is
/// below `K^(-βK^α)`. Exact for `K <= 20`, log domain above.
pub fn kais2_gap(k: usize, alpha: f64, beta: f64) -> Result<f64> {
    let ln_sum = if k <= EXACT_K_LIMIT {
        ln_rational(&kais2_sum_exact(k, alpha, beta)?)
    } else {
        kais2_ln_sum(k, alpha, beta)?
    };
    Ok(ln_sum + beta * pow_snapped(k, alpha) * (k as f64).ln())
}

/// `ln(n! e^n / (sqrt(2π) n^(n+1/2)))`, with `ln n!` summed term by term
/// under Kahan compensation.
pub fn stirling_remainder(n: u64) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for i in 2..=n {
        let y = (i as f64).ln() - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    let nf = n as f64;
    sum + nf - 0.5 * (2.0 * std::f64::consts::PI).ln() - (nf + 0.5) * nf.ln()
}

/// `e^(1/(12n+1)) < n! e^n / (sqrt(2π) n^(n+1/2)) < e^(1/(12n))`, compared in logs.
pub fn stirling_bounds_check(n: u64) -> Result<bool> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let r = stirling_remainder(n);
    let nf = n as f64;
    Ok(1.0 / (12.0 * nf + 1.0) < r && r < 1.0 / (12.0 * nf))
}

/// `cnst · K^(-3+2α) + K² (1/2)^(K^(α/2)) + K^(-K^α)`.
pub fn theorem2_rhs(k: usize, params: &BoundParams) -> Result<f64> {
    params.validate()?;
    check_k(k, 1)?;
    let kf = k as f64;
    let a = params.alpha;
    Ok(params.cnst * kf.powf(-3.0 + 2.0 * a) + lemma1_bound(k, a / 2.0)? + kf.powf(-pow_snapped(k, a)))
}

/// `K² (1/2)^(K^σ)`.
pub fn lemma1_bound(k: usize, sigma: f64) -> Result<f64> {
    open_unit("sigma", sigma)?;
    check_k(k, 1)?;
    let kf = k as f64;
    Ok(kf * kf * 0.5f64.powf(pow_snapped(k, sigma)))
}
