//! Arithmetic in the prime field F_l.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0} is not a supported prime")]
pub struct InvalidPrime(pub u32);

/// A validated prime `l`, small enough that products of residues fit in `u64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prime(u32);

impl Prime {
    pub const TWO: Prime = Prime(2);

    pub fn new(p: u32) -> Result<Self, InvalidPrime> {
        if p < 2 || p > 65_521 || (2..).take_while(|d| d * d <= p).any(|d| p % d == 0) {
            return Err(InvalidPrime(p));
        }
        Ok(Prime(p))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_two(self) -> bool {
        self.0 == 2
    }

    /// `l - 1`, the modulus under which Tate twists are compared.
    #[inline]
    pub fn twist_modulus(self) -> i64 {
        self.0 as i64 - 1
    }

    pub fn twists_agree(self, a: i64, b: i64) -> bool {
        (a - b).rem_euclid(self.twist_modulus()) == 0
    }

    #[inline]
    pub fn reduce(self, n: i64) -> u32 {
        n.rem_euclid(self.0 as i64) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        ((a as u64 + b as u64) % self.0 as u64) as u32
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.0 as u64) as u32
    }

    pub fn pow(self, base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.0;
        let mut b = base % self.0;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    /// `base^exp` for a unit `base` and a possibly negative exponent.
    pub fn pow_signed(self, base: u32, exp: i64) -> Option<u32> {
        if exp >= 0 {
            return Some(self.pow(base, exp as u64));
        }
        let inv = self.inv(base)?;
        Some(self.pow(inv, exp.unsigned_abs()))
    }

    pub fn inv(self, a: u32) -> Option<u32> {
        let a = a % self.0;
        if a == 0 {
            None
        } else {
            Some(self.pow(a, self.0 as u64 - 2))
        }
    }

    /// `(-1)^n` as a residue.
    #[inline]
    pub fn sign(self, n: i64) -> u32 {
        if n.rem_euclid(2) == 0 {
            1 % self.0
        } else {
            self.0 - 1
        }
    }

    /// Prints a residue in the symmetric range, so that `l - 1` reads as `-1`.
    pub fn signed_repr(self, a: u32) -> i64 {
        let a = a as i64;
        if self.0 > 2 && a > self.0 as i64 / 2 {
            a - self.0 as i64
        } else {
            a
        }
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Binomial coefficient `n choose k` reduced mod `l`, for any integer `n`.
///
/// The value is that of the polynomial `n(n-1)...(n-k+1)/k!`. Negative upper
/// indices go through `C(n, k) = (-1)^k C(k - n - 1, k)`, and nonnegative ones
/// through Lucas' theorem.
pub fn binom_mod_ell(n: i64, k: u64, p: Prime) -> u32 {
    if n < 0 {
        let top = (k as i64) - n - 1;
        let v = lucas(top as u64, k, p);
        return p.mul(p.sign(k as i64), v);
    }
    lucas(n as u64, k, p)
}

fn lucas(mut n: u64, mut k: u64, p: Prime) -> u32 {
    let m = p.get() as u64;
    let mut acc = 1 % p.get();
    while k > 0 || n > 0 {
        let (nd, kd) = (n % m, k % m);
        if kd > nd {
            return 0;
        }
        acc = p.mul(acc, small_binom(nd, kd, p));
        n /= m;
        k /= m;
    }
    acc
}

fn small_binom(n: u64, k: u64, p: Prime) -> u32 {
    // n < l here, so k! is a unit.
    let mut num = 1u32;
    let mut den = 1u32;
    for i in 0..k {
        num = p.mul(num, ((n - i) % p.get() as u64) as u32);
        den = p.mul(den, ((i + 1) % p.get() as u64) as u32);
    }
    p.mul(num, p.inv(den).expect("k! is a unit below l"))
}
