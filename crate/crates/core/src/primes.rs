//! Deterministic primality for the prime blocks `(U, 2U]`.

const TRIAL_DIVISION_LIMIT: u64 = 2_000_000;

// Strong-pseudoprime bases that are deterministic for every n < 2^64.
const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n <= TRIAL_DIVISION_LIMIT {
        return trial_division(n);
    }
    for p in [2u64, 3, 5, 7, 11, 13] {
        if n % p == 0 {
            return false;
        }
    }
    miller_rabin(n)
}

fn trial_division(n: u64) -> bool {
    if n < 4 {
        return n >= 2;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

fn miller_rabin(n: u64) -> bool {
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'bases: for &a in &MR_BASES {
        if a % n == 0 {
            continue;
        }
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// Primes `p` with `lo < p <= hi`, ascending.
pub fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    (lo.saturating_add(1)..=hi).filter(|&n| is_prime(n)).collect()
}
