//! Integer helpers: GCD and a growable prime pool.

use crate::error::{Error, Result};

/// Largest sieve limit the prime pool will grow to.
pub const SIEVE_CAP: usize = 1 << 27;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// GCD of a list; 0 for an empty list.
pub fn gcd_all(values: &[u64]) -> u64 {
    values.iter().fold(0, |g, &v| gcd(g, v))
}

/// Primes strictly below `limit` (sieve of Eratosthenes).
pub fn primes_below(limit: usize) -> Vec<u64> {
    if limit < 3 {
        return Vec::new();
    }
    let mut composite = vec![false; limit];
    let mut out = Vec::new();
    for i in 2..limit {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j < limit {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// At least `count` primes, sieving with a geometrically growing limit.
pub fn prime_pool(count: usize) -> Result<Vec<u64>> {
    let mut limit = 64usize;
    loop {
        let primes = primes_below(limit);
        if primes.len() >= count {
            return Ok(primes);
        }
        if limit >= SIEVE_CAP {
            return Err(Error::PrimePoolExhausted {
                needed: count,
                cap: SIEVE_CAP,
            });
        }
        limit = (limit * 4).min(SIEVE_CAP);
    }
}

/// The first `count` primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    let mut pool = prime_pool(count).expect("small prime counts fit under the sieve cap");
    pool.truncate(count);
    pool
}
