//! Dirichlet characters of prime modulus via a discrete-log table.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::primes::{factorize, is_prime, pow_mod};

pub const MAX_MODULUS: u64 = 100_000;

/// Index `j` of the character `chi_j(g^k) = exp(2 pi i j k / (m-1))`; `j = 0` is principal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CharacterIndex(pub u64);

#[derive(Clone, Debug)]
pub struct CharacterGroup {
    modulus: u64,
    generator: u64,
    dlog: Vec<u32>,
    roots: Vec<Complex64>,
}

impl CharacterGroup {
    pub fn new(m: u64) -> Result<CharacterGroup> {
        if !is_prime(m) {
            return Err(Error::NotPrime(m));
        }
        if !(3..=MAX_MODULUS).contains(&m) {
            return Err(Error::ModulusOutOfRange(m, MAX_MODULUS));
        }
        let order = m - 1;
        let qs: Vec<u64> = factorize(order).into_iter().map(|(q, _)| q).collect();
        let generator = (2..m).find(|&g| qs.iter().all(|&q| pow_mod(g, order / q, m) != 1)).unwrap();

        let mut dlog = vec![u32::MAX; m as usize];
        let mut x = 1u64;
        for k in 0..order {
            dlog[x as usize] = k as u32;
            x = x * generator % m;
        }
        let roots = (0..order)
            .map(|k| {
                let (s, c) = (TAU * k as f64 / order as f64).sin_cos();
                Complex64::new(c, s)
            })
            .collect();
        Ok(CharacterGroup { modulus: m, generator, dlog, roots })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    /// Group order `m - 1`.
    pub fn order(&self) -> u64 {
        self.modulus - 1
    }

    pub fn index(&self, j: u64) -> Result<CharacterIndex> {
        if j < self.order() {
            Ok(CharacterIndex(j))
        } else {
            Err(Error::InvalidParameter(format!("character index {j} outside [0, {}]", self.order() - 1)))
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = CharacterIndex> {
        (0..self.order()).map(CharacterIndex)
    }

    /// Discrete log of `n mod m`, or `None` when `m | n`.
    pub fn dlog(&self, n: u64) -> Option<u64> {
        match self.dlog[(n % self.modulus) as usize] {
            u32::MAX => None,
            k => Some(k as u64),
        }
    }

    /// `chi_j(n)`; zero when `m | n`.
    pub fn chi(&self, j: CharacterIndex, n: u64) -> Complex64 {
        match self.dlog(n) {
            None => Complex64::new(0.0, 0.0),
            Some(k) => self.roots[((j.0 as u128 * k as u128) % self.order() as u128) as usize],
        }
    }
}

pub fn build_group(m: u64) -> Result<CharacterGroup> {
    CharacterGroup::new(m)
}

pub fn chi_eval(group: &CharacterGroup, j: CharacterIndex, n: u64) -> Complex64 {
    group.chi(j, n)
}
