#![allow(dead_code)]

use espp::composition::Composition;
use espp::fluid::{FluidProblem, TransferPlan};
use espp::rational::{rat, Rational};
use num_bigint::BigInt;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn below(rng: &mut impl RngCore, n: u64) -> u64 {
    rng.next_u64() % n
}

/// A solvable fluid problem built from a random plan, with that plan.
pub fn random_problem(rng: &mut impl RngCore, max_n: usize, max_k: usize) -> (FluidProblem, TransferPlan) {
    let n = 1 + below(rng, max_n as u64) as usize;
    let k = 1 + below(rng, max_k as u64) as usize;
    let mut sources: Vec<(Rational, Rational)> = (0..n)
        .map(|_| {
            let u = rat(1 + below(rng, 6) as i64, 1 + below(rng, 3) as i64);
            let density = rat(1 + below(rng, 20) as i64, 1 + below(rng, 4) as i64);
            (&density * &u, u)
        })
        .collect();
    sources.sort_by(|x, y| (&y.0 / &y.1).cmp(&(&x.0 / &x.1)));
    let mut w: Vec<Vec<u64>> = (0..n).map(|_| (0..k).map(|_| below(rng, 4)).collect()).collect();
    for row in w.iter_mut() {
        if row.iter().all(|&x| x == 0) {
            row[below(rng, k as u64) as usize] = 1;
        }
    }
    for j in 0..k {
        if w.iter().all(|r| r[j] == 0) {
            w[below(rng, n as u64) as usize][j] = 1;
        }
    }
    let x: Vec<Vec<Rational>> = w
        .iter()
        .map(|r| {
            let total: u64 = r.iter().sum();
            r.iter().map(|&v| rat(v as i64, total as i64)).collect()
        })
        .collect();
    let (a, u): (Vec<Rational>, Vec<Rational>) = sources.into_iter().unzip();
    let mut cols: Vec<(Rational, Rational, usize)> = (0..k)
        .map(|j| {
            let b: Rational = (0..n).map(|i| &a[i] * &x[i][j]).sum();
            let v: Rational = (0..n).map(|i| &u[i] * &x[i][j]).sum();
            (b, v, j)
        })
        .collect();
    cols.sort_by(|p, q| (&q.0 / &q.1).cmp(&(&p.0 / &p.1)));
    let plan = TransferPlan { x: x.iter().map(|r| cols.iter().map(|c| r[c.2].clone()).collect()).collect() };
    let b = cols.iter().map(|c| c.0.clone()).collect();
    let v = cols.iter().map(|c| c.1.clone()).collect();
    (FluidProblem::new(a, u, b, v).expect("constructed problem is valid"), plan)
}

/// Random non-descending composition of `n` into `k` parts, `k <= n`.
pub fn random_composition(rng: &mut impl RngCore, n: u64, k: u64) -> Vec<u64> {
    let mut parts = vec![1u64; k as usize];
    for _ in 0..(n - k) {
        let j = below(rng, k) as usize;
        parts[j] += 1;
    }
    parts.sort_unstable();
    parts
}

/// Divisors `k <= n` of `n(n+1)/2`.
pub fn valid_ks(n: u64) -> Vec<u64> {
    (1..=n).filter(|k| (n * (n + 1) / 2) % k == 0).collect()
}

pub fn comp(parts: &[u64]) -> Composition {
    Composition::from_parts(parts).unwrap()
}

pub fn big(x: u64) -> BigInt {
    BigInt::from(x)
}
