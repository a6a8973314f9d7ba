//! Size of the relaxed mapping space.
//!
//! A valid mapping is a partial injection from the smaller domain into the
//! larger one, of any size except 1. Summing `C(n, i) * m! / (m - i)!` over
//! `i = 0..=n` counts every partial injection; the `n * m` injections of
//! size 1 are then removed. Exhaustive enumeration agrees with the
//! subtracted count (see the tests), so [`SpaceVariant::ExcludeSingletons`]
//! is the default. [`SpaceVariant::IncludeSingletons`] is the bare sum,
//! which is the figure of 130,922 often quoted for n = m = 7.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceVariant {
    /// Partial injections of every size except 1 (the empty mapping counts).
    #[default]
    ExcludeSingletons,
    /// Every partial injection, size-1 mappings included.
    IncludeSingletons,
}

/// Number of valid mappings between domains of sizes `n` and `m`.
pub fn solution_space_size(n: usize, m: usize) -> Result<u128> {
    solution_space_size_with(n, m, SpaceVariant::ExcludeSingletons)
}

pub fn solution_space_size_with(n: usize, m: usize, variant: SpaceVariant) -> Result<u128> {
    if n == 0 || m == 0 {
        return Err(Error::Input(format!(
            "domain sizes must be at least 1, got n={n}, m={m}"
        )));
    }
    let (small, large) = if n <= m { (n, m) } else { (m, n) };
    let overflow = || Error::Overflow { n, m };

    let mut total: u128 = 0;
    let mut choose: u128 = 1; // C(small, i)
    let mut falling: u128 = 1; // large! / (large - i)!
    for i in 0..=small {
        if i > 0 {
            choose = choose
                .checked_mul((small - i + 1) as u128)
                .ok_or_else(overflow)?
                / i as u128;
            falling = falling
                .checked_mul((large - i + 1) as u128)
                .ok_or_else(overflow)?;
        }
        let term = choose.checked_mul(falling).ok_or_else(overflow)?;
        total = total.checked_add(term).ok_or_else(overflow)?;
    }
    Ok(match variant {
        SpaceVariant::ExcludeSingletons => total - (small as u128) * (large as u128),
        SpaceVariant::IncludeSingletons => total,
    })
}

/// Number of bijections (or, for `n != m`, full injections of the smaller
/// domain into the larger one).
pub fn bijective_space_size(n: usize, m: usize) -> Result<u128> {
    if n == 0 || m == 0 {
        return Err(Error::Input(format!(
            "domain sizes must be at least 1, got n={n}, m={m}"
        )));
    }
    let (small, large) = if n <= m { (n, m) } else { (m, n) };
    let mut out: u128 = 1;
    for k in 0..small {
        out = out
            .checked_mul((large - k) as u128)
            .ok_or(Error::Overflow { n, m })?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Counts partial injections `[0, n) -> [0, m)` by size, by brute force.
    fn enumerate_by_size(n: usize, m: usize) -> Vec<u128> {
        fn go(i: usize, n: usize, m: usize, used: &mut Vec<bool>, size: usize, out: &mut [u128]) {
            if i == n {
                out[size] += 1;
                return;
            }
            go(i + 1, n, m, used, size, out);
            for t in 0..m {
                if !used[t] {
                    used[t] = true;
                    go(i + 1, n, m, used, size + 1, out);
                    used[t] = false;
                }
            }
        }
        let mut out = vec![0; n.min(m) + 1];
        go(0, n, m, &mut vec![false; m], 0, &mut out);
        out
    }

    fn enumerate_valid(n: usize, m: usize) -> u128 {
        enumerate_by_size(n, m)
            .iter()
            .enumerate()
            .filter(|(size, _)| *size != 1)
            .map(|(_, c)| c)
            .sum()
    }

    #[test]
    fn enumeration_matches_subtracted_formula() {
        for n in 1..=4 {
            for m in 1..=4 {
                assert_eq!(
                    solution_space_size(n, m).unwrap(),
                    enumerate_valid(n, m),
                    "n={n} m={m}"
                );
                let all: u128 = enumerate_by_size(n, m).iter().sum();
                assert_eq!(
                    solution_space_size_with(n, m, SpaceVariant::IncludeSingletons).unwrap(),
                    all
                );
            }
        }
    }

    #[test]
    fn two_by_two_has_three_mappings() {
        assert_eq!(solution_space_size(2, 2).unwrap(), 3);
        assert_eq!(solution_space_size(1, 1).unwrap(), 1);
    }

    #[test]
    fn seven_by_seven() {
        assert_eq!(solution_space_size(7, 7).unwrap(), 130_873);
        assert_eq!(
            solution_space_size_with(7, 7, SpaceVariant::IncludeSingletons).unwrap(),
            130_922
        );
        assert_eq!(enumerate_valid(7, 7), 130_873);
        assert_eq!(bijective_space_size(7, 7).unwrap(), 5_040);
    }

    #[test]
    fn symmetric_in_arguments() {
        assert_eq!(solution_space_size(2, 5).unwrap(), solution_space_size(5, 2).unwrap());
        assert_eq!(solution_space_size(3, 4).unwrap(), enumerate_valid(4, 3));
    }

    #[test]
    fn zero_sized_domain_rejected() {
        assert!(solution_space_size(0, 3).is_err());
    }

    #[test]
    fn overflow_reported() {
        assert!(matches!(
            solution_space_size(60, 60),
            Err(Error::Overflow { .. })
        ));
    }
}
