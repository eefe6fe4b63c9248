//! Infinite families of unsolvable instances `(ak, k, [2^{uk}, d^{vk}, ...])`.
//!
//! For a rational `2 < a < 24/7` we pick `d`, find rational `(u, v)` inside
//! the region cut out by the limit inequalities, and walk the arithmetic
//! progression of `k` that makes `ak`, `s^{ak,k}`, `uk` and `vk` integral.
//! Each emitted instance is verified exactly: it is a valid incomplete
//! instance and Criterion 1 fires on it.

use crate::composition::Composition;
use crate::criteria::{criterion1, CriterionReport};
use crate::instance::IncompleteInstance;
use crate::rational::{ceil, floor, format_rational, Rational};
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FamilyError {
    #[error("a = {0} is outside the open interval (2, 4)")]
    OutOfRange(String),
    #[error("denominator {denominator} of (u, v) shares a factor with 2r^2 = {two_r2}")]
    NonCoprimeDenominator { denominator: BigInt, two_r2: BigInt },
    #[error("k = {k} is not in the progression {k0} mod {modulus}")]
    NotInProgression { k: BigInt, k0: BigInt, modulus: BigInt },
    #[error("k = {k} is too small for the limit inequalities: {reason}")]
    TooSmallK { k: BigInt, reason: String },
    #[error("denominator of a is too large for the prime search: {0}")]
    TooLarge(String),
}

fn r(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn check_range(a: &Rational) -> Result<(), FamilyError> {
    if *a <= r(2) || *a >= r(4) {
        return Err(FamilyError::OutOfRange(format_rational(a)));
    }
    Ok(())
}

/// `d = 1 + ceil(2/(a-2))`, the smallest `d` with `a >= 2d/(d-1)`.
pub fn choose_d(a: &Rational) -> Result<u64, FamilyError> {
    check_range(a)?;
    let d: BigInt = ceil(&(r(2) / (a - r(2)))) + 1u32;
    let d = d.to_u64().expect("a > 2 keeps d small enough").max(3);
    debug_assert!(*a >= r(2 * d as i64) / r(d as i64 - 1));
    Ok(d)
}

/// `h(d) = 4(d-1)d/(2d^2-5d+4)`: the system is solvable only for `a < h(d)`.
pub fn h_bound(d: u64) -> Rational {
    let d = d as i64;
    r(4 * (d - 1) * d) / r(2 * d * d - 5 * d + 4)
}

/// `(u1, v1) = (a - a^2/4, (a^2(d-1) - 2ad)/d^2)`, where the upper bound on
/// `v` meets the Criterion 1 lower bound on the line `u = a - a^2/4`.
pub fn corner_point(a: &Rational, d: u64) -> (Rational, Rational) {
    let dd = r(d as i64);
    let u1 = a - a * a / r(4);
    let v1 = (a * a * (&dd - r(1)) - r(2) * a * &dd) / (&dd * &dd);
    (u1, v1)
}

/// The other intersection `u2` of the two bounding curves.
pub fn second_intersection(a: &Rational, d: u64) -> Rational {
    let dd = r(d as i64);
    let num = a * (&dd - r(2)) * (r(4) * (&dd - r(1)) * &dd - a * (&dd * &dd - r(2) * &dd + r(2)));
    num / (r(4) * (&dd - r(1)) * (&dd - r(1)) * &dd)
}

/// Truth values of the strict inequalities at `(u, v)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Inequalities {
    /// `v > 0`
    pub v_positive: bool,
    /// `v < 1 - u`
    pub below_one_minus_u: bool,
    /// `u > max(0, (d-a)/(d-2))`
    pub u_lower: bool,
    /// `u < a - a^2/4`
    pub u_upper: bool,
    /// `v < f(u)`, the larger root of the slack quadratic at the end of the prefix.
    pub below_f: bool,
    /// `v > ` the smaller root of the same quadratic.
    pub above_lower_root: bool,
    /// `v > 2a - a^2/2 + max(0, (d-1)a^2/d^2 - 2a/d) - 2u`, the Criterion 1 bound.
    pub above_g: bool,
}

impl Inequalities {
    /// The region bounded by `v > 0`, `u < a - a^2/4`, `v < f(u)` and `v > g(u)`.
    pub fn in_s1(&self) -> bool {
        self.v_positive && self.u_upper && self.below_f && self.above_g
    }

    /// The region bounded by `v < 1 - u` and the lower bound on `u`.
    pub fn in_s2(&self) -> bool {
        self.below_one_minus_u && self.u_lower
    }

    pub fn all(&self) -> bool {
        self.in_s1() && self.in_s2() && self.above_lower_root
    }
}

/// `K = 2ad - a^2 - 4du` and `Delta = (2d-a)^2 - 4d(d-2)u`, so that the
/// roots of the quadratic are `(K +- a sqrt(Delta)) / (2d^2)`.
fn quadratic_parts(a: &Rational, d: u64, u: &Rational) -> (Rational, Rational) {
    let dd = r(d as i64);
    let k = r(2) * a * &dd - a * a - r(4) * &dd * u;
    let t = r(2) * &dd - a;
    let delta = &t * &t - r(4) * &dd * (&dd - r(2)) * u;
    (k, delta)
}

/// `g(u)` with the max form.
pub fn g_bound(a: &Rational, d: u64, u: &Rational) -> Rational {
    let dd = r(d as i64);
    let extra = a * a * (&dd - r(1)) / (&dd * &dd) - r(2) * a / &dd;
    let extra = if extra.is_positive() { extra } else { Rational::zero() };
    r(2) * a - a * a / r(2) + extra - r(2) * u
}

/// Exact evaluation; square roots are compared by squaring with sign care.
pub fn check_inequalities(a: &Rational, d: u64, u: &Rational, v: &Rational) -> Inequalities {
    let dd = r(d as i64);
    let (k, delta) = quadratic_parts(a, d, u);
    let l = r(2) * &dd * &dd * v - &k;
    let a2delta = a * a * &delta;
    let real = !delta.is_negative();
    // l < a sqrt(delta)
    let below_f = real && (l.is_negative() || &l * &l < a2delta);
    // l > -a sqrt(delta)
    let above_lower_root =
        real && ((!l.is_negative() && !(l.is_zero() && delta.is_zero())) || (l.is_negative() && &l * &l < a2delta));
    let lower = (&dd - a) / (&dd - r(2));
    let lower = if lower.is_positive() { lower } else { Rational::zero() };
    Inequalities {
        v_positive: v.is_positive(),
        below_one_minus_u: *v < r(1) - u,
        u_lower: *u > lower,
        u_upper: *u < a - a * a / r(4),
        below_f,
        above_lower_root,
        above_g: *v > g_bound(a, d, u),
    }
}

/// The lower root `(K - a sqrt(Delta))/(2d^2)` is `<= 0`, i.e. `K <= a sqrt(Delta)`.
pub fn lower_root_nonpositive(a: &Rational, d: u64, u: &Rational) -> bool {
    let (k, delta) = quadratic_parts(a, d, u);
    !delta.is_negative() && (!k.is_positive() || &k * &k <= a * a * &delta)
}

/// Rational lower bound on `sqrt(x)` within `2^-bits`.
fn sqrt_floor(x: &Rational, bits: u32) -> Rational {
    let scale = BigInt::one() << bits;
    let scaled = floor(&(x * Rational::from_integer(&scale * &scale)));
    Rational::new(scaled.sqrt(), scale)
}

/// Real `(u, v)` strictly inside every inequality, found by stepping inward
/// from the corner: `u = u1 - eps` with `eps` halved until the interval
/// `(g(u), f(u))` opens, then `v` at its midpoint. `None` for `a >= h(d)`.
pub fn find_interior(a: &Rational) -> Result<Option<(Rational, Rational, u64)>, FamilyError> {
    let d = choose_d(a)?;
    if *a >= h_bound(d) {
        return Ok(None);
    }
    let (u1, _) = corner_point(a, d);
    let dd = r(d as i64);
    let lower = (&dd - a) / (&dd - r(2));
    let lower = if lower.is_positive() { lower } else { Rational::zero() };
    let mut eps = (&u1 - &lower) / r(4);
    for _ in 0..256 {
        let u = &u1 - &eps;
        let (k, delta) = quadratic_parts(a, d, &u);
        if !delta.is_negative() {
            let bits = 64 + 2 * (eps.denom().bits() as u32).saturating_sub(eps.numer().bits() as u32);
            let f_lo = (&k + a * sqrt_floor(&delta, bits)) / (r(2) * &dd * &dd);
            let mut lo = g_bound(a, d, &u);
            if lo.is_negative() {
                lo = Rational::zero();
            }
            let one_minus_u = r(1) - &u;
            let hi = if f_lo < one_minus_u { f_lo } else { one_minus_u };
            if lo < hi {
                let v = (&lo + &hi) / r(2);
                if check_inequalities(a, d, &u, &v).all() {
                    return Ok(Some((u, v, d)));
                }
            }
        }
        eps /= r(2);
    }
    Ok(None)
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let (mut dd, mut s) = (n - 1, 0);
    while dd % 2 == 0 {
        dd /= 2;
        s += 1;
    }
    'outer: for a in BASES {
        let mut x = pow_mod(a, dd, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn round_to(x: &Rational, p: u64) -> Rational {
    let pp = Rational::from_integer(BigInt::from(p));
    let scaled = floor(&(x * &pp + Rational::new(BigInt::one(), BigInt::from(2))));
    Rational::new(scaled, BigInt::from(p))
}

/// Number of primes tried after the first one above `2r^2`.
const PRIME_ATTEMPTS: usize = 4096;

/// Rational `(u, v, d)` with common prime denominator `p > 2r^2` satisfying
/// every strict inequality exactly, or `None` when the system has no
/// solution (`a >= h(d)`, which covers every `a >= 24/7`).
pub fn find_uv(a: &Rational) -> Result<Option<(Rational, Rational, u64, u64)>, FamilyError> {
    let Some((u, v, d)) = find_interior(a)? else {
        return Ok(None);
    };
    let rr = a.denom();
    let two_r2 = (rr * rr * 2u32)
        .to_u64()
        .filter(|&x| x < 1 << 62)
        .ok_or_else(|| FamilyError::TooLarge(rr.to_string()))?;
    let mut p = two_r2 + 1;
    let mut tried = 0;
    while tried <= PRIME_ATTEMPTS {
        if is_prime(p) {
            tried += 1;
            let (up, vp) = (round_to(&u, p), round_to(&v, p));
            if check_inequalities(a, d, &up, &vp).all() {
                return Ok(Some((up, vp, d, p)));
            }
        }
        p += 1;
    }
    Ok(None)
}

/// `(k0, modulus)` such that every `k = k0 (mod modulus)` makes `ak`,
/// `a(ak+1)/2`, `uk` and `vk` integers.
pub fn k_progression(a: &Rational, u: &Rational, v: &Rational) -> Result<(BigInt, BigInt), FamilyError> {
    let (m, rr) = (a.numer().clone(), a.denom().clone());
    let r2 = &rr * &rr;
    let two_r2: BigInt = &r2 * 2u32;
    let q = u.denom().lcm(v.denom());
    if !q.gcd(&two_r2).is_one() {
        return Err(FamilyError::NonCoprimeDenominator { denominator: q, two_r2 });
    }
    // m k = -r modulo 2r^2 (odd m) or modulo r^2 (even m).
    let base = if m.is_odd() { two_r2.clone() } else { r2.clone() };
    let inv = mod_inverse(&m, &base).expect("gcd(m, r) = 1 and r odd when m is even");
    let k_r = (-(inv * &rr)).mod_floor(&base);
    // Combine with k = 0 (mod q); base divides 2r^2, so k_r is also a residue mod 2r^2.
    let modulus = &two_r2 * &q;
    let k0 = crt(&k_r, &two_r2, &BigInt::zero(), &q);
    Ok((k0.mod_floor(&modulus), modulus))
}

fn mod_inverse(x: &BigInt, m: &BigInt) -> Option<BigInt> {
    if m.is_one() {
        return Some(BigInt::zero());
    }
    let g = x.extended_gcd(m);
    g.gcd.is_one().then(|| g.x.mod_floor(m))
}

/// `x = a1 (mod m1)`, `x = a2 (mod m2)` for coprime moduli.
fn crt(a1: &BigInt, m1: &BigInt, a2: &BigInt, m2: &BigInt) -> BigInt {
    let inv = mod_inverse(m1, m2).expect("coprime moduli");
    let t = ((a2 - a1) * inv).mod_floor(m2);
    a1 + m1 * t
}

/// Everything needed to emit members of a family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyParams {
    pub a: Rational,
    pub d: u64,
    pub u: Rational,
    pub v: Rational,
    pub p: u64,
    pub k0: BigInt,
    pub modulus: BigInt,
}

/// Solves the inequality system and computes the progression.
pub fn family_params(a: &Rational) -> Result<Option<FamilyParams>, FamilyError> {
    let Some((u, v, d, p)) = find_uv(a)? else {
        return Ok(None);
    };
    let (k0, modulus) = k_progression(a, &u, &v)?;
    Ok(Some(FamilyParams { a: a.clone(), d, u, v, p, k0, modulus }))
}

fn as_integer(x: &Rational, what: &str, k: &BigInt) -> Result<BigInt, FamilyError> {
    if x.is_integer() {
        Ok(x.to_integer())
    } else {
        Err(FamilyError::TooSmallK { k: k.clone(), reason: format!("{what} = {x} is not integral") })
    }
}

/// Builds `(ak, k, [2^{uk}, d^{vk}])` and certifies it.
pub fn emit_instance(params: &FamilyParams, k: &BigInt) -> Result<(IncompleteInstance, CriterionReport), FamilyError> {
    if !k.is_positive() || !(k - &params.k0).mod_floor(&params.modulus).is_zero() {
        return Err(FamilyError::NotInProgression {
            k: k.clone(),
            k0: params.k0.clone(),
            modulus: params.modulus.clone(),
        });
    }
    let kr = Rational::from_integer(k.clone());
    let n = as_integer(&(&params.a * &kr), "ak", k)?;
    let e = as_integer(&(&params.u * &kr), "uk", k)?;
    let f = as_integer(&(&params.v * &kr), "vk", k)?;
    let too_small = |reason: String| FamilyError::TooSmallK { k: k.clone(), reason };
    let prefix = Composition::from_blocks([(2, e), (params.d, f)]).map_err(|e| too_small(e.to_string()))?;
    let inst = IncompleteInstance::new(n, k.clone(), prefix).map_err(|e| too_small(e.to_string()))?;
    match criterion1(&inst) {
        Ok(Some(report)) => Ok((inst, report)),
        Ok(None) => Err(too_small("criterion 1 does not fire".into())),
        Err(e) => Err(too_small(e.to_string())),
    }
}

/// Progression members tried per requested instance before giving up.
pub const MAX_SKIPS: usize = 10_000;

/// The first `count` certified members of the progression.
pub fn generate(params: &FamilyParams, count: usize) -> Vec<(BigInt, IncompleteInstance, CriterionReport)> {
    let mut out = Vec::with_capacity(count);
    let mut k = params.k0.clone();
    if !k.is_positive() {
        k += &params.modulus;
    }
    let mut skips = 0;
    while out.len() < count && skips <= MAX_SKIPS {
        match emit_instance(params, &k) {
            Ok((inst, rep)) => {
                out.push((k.clone(), inst, rep));
                skips = 0;
            }
            Err(_) => skips += 1,
        }
        k += &params.modulus;
    }
    out
}

/// One sample of the region figure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GridPoint {
    pub u: String,
    pub v: String,
    pub in_s1: bool,
    pub in_s2: bool,
}

/// `(resolution+1)^2` samples over `[0, a - a^2/4] x [0, 1]`.
pub fn region_grid(a: &Rational, resolution: u32) -> Result<Vec<GridPoint>, FamilyError> {
    let (u1, _) = corner_point(a, choose_d(a)?);
    region_grid_window(a, (&Rational::zero(), &u1), (&Rational::zero(), &r(1)), resolution)
}

/// Samples over an arbitrary window, rows in parallel.
pub fn region_grid_window(
    a: &Rational,
    (u_lo, u_hi): (&Rational, &Rational),
    (v_lo, v_hi): (&Rational, &Rational),
    resolution: u32,
) -> Result<Vec<GridPoint>, FamilyError> {
    let d = choose_d(a)?;
    let res = resolution.max(1);
    let step = |lo: &Rational, hi: &Rational, i: u32| lo + (hi - lo) * Rational::new(BigInt::from(i), BigInt::from(res));
    Ok((0..=res)
        .into_par_iter()
        .flat_map_iter(|i| {
            let u = step(u_lo, u_hi, i);
            (0..=res).map(move |j| {
                let v = step(v_lo, v_hi, j);
                let ineq = check_inequalities(a, d, &u, &v);
                GridPoint { u: format_rational(&u), v: format_rational(&v), in_s1: ineq.in_s1(), in_s2: ineq.in_s2() }
            })
        })
        .collect())
}

/// Sign helper kept for symmetry with `Signed`.
fn _sign(x: &BigInt) -> Sign {
    x.sign()
}
