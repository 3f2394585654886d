//! Seeded random rationals for generic-point probing.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{Expr, Indet, Q};

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Sampler {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Nonzero rational with small numerator and denominator.
    pub fn rational(&mut self) -> Q {
        let mut n: i64 = 0;
        while n == 0 {
            n = self.rng.gen_range(-40..=40);
        }
        let d: i64 = self.rng.gen_range(1..=9);
        Q::new(BigInt::from(n), BigInt::from(d))
    }

    pub fn small_int(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }

    pub fn f64_in(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Random values for the given indeterminates, assigned in printed-name
    /// order so the result does not depend on interning order.
    pub fn point(&mut self, indets: impl IntoIterator<Item = Indet>) -> HashMap<Indet, Q> {
        let mut v: Vec<(String, Indet)> = indets
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(|i| (i.key(), i))
            .collect();
        v.sort();
        v.into_iter().map(|(_, i)| (i, self.rational())).collect()
    }

    /// A point at which none of `exprs` has a pole.
    pub fn regular_point<'a>(
        &mut self,
        exprs: impl IntoIterator<Item = &'a Expr> + Clone,
    ) -> HashMap<Indet, Q> {
        let indets: BTreeSet<Indet> = exprs.clone().into_iter().flat_map(|e| e.indets()).collect();
        loop {
            let pt = self.point(indets.iter().copied());
            let ok = exprs.clone().into_iter().all(|e| {
                e.den().is_constant()
                    || Expr::from_poly(e.den().clone())
                        .eval(&pt)
                        .is_ok_and(|v| v != Q::from_integer(0.into()))
            });
            if ok {
                return pt;
            }
        }
    }
}
