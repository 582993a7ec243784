//! Seeded pseudo-random instance generators.
//!
//! All generators draw from ChaCha8 seeded with the caller's `u64`, so the
//! same arguments always produce the same instance on every platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sat::{Cnf3Instance, E13Instance, Literal};

/// Shuffles tried before the 3SAT-5 generator gives up.
pub const MAX_RETRIES: usize = 10_000;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_literal(rng: &mut ChaCha8Rng, var: usize) -> Literal {
    if rng.gen() {
        Literal::pos(var)
    } else {
        Literal::neg(var)
    }
}

/// 3-CNF in which every variable occurs in exactly five clauses.
///
/// Five slots per variable are shuffled and cut into triples; a shuffle
/// whose triples repeat a variable is discarded and redrawn.
pub fn generate_3sat5(n: usize, seed: u64) -> Result<Cnf3Instance> {
    if n == 0 || !n.is_multiple_of(3) {
        return Err(Error::input(format!(
            "3SAT-5 needs 5n/3 clauses, so n must be a positive multiple of 3 (got {n})"
        )));
    }
    let mut rng = rng(seed);
    let mut slots: Vec<usize> = (1..=n).flat_map(|v| [v; 5]).collect();
    for _ in 0..MAX_RETRIES {
        slots.shuffle(&mut rng);
        let distinct = slots
            .chunks(3)
            .all(|c| c[0] != c[1] && c[0] != c[2] && c[1] != c[2]);
        if distinct {
            let clauses = slots
                .chunks(3)
                .map(|c| c.iter().map(|&v| random_literal(&mut rng, v)).collect())
                .collect();
            return Cnf3Instance::new(n, clauses);
        }
    }
    Err(Error::Construction(format!(
        "no repeat-free 3SAT-5 layout for n={n} after {MAX_RETRIES} shuffles"
    )))
}

/// Default clause count for positive 1-in-3 instances: `⌊9n/13⌋`, clamped to `1..=n`.
pub fn default_e13_clauses(n: usize) -> usize {
    (9 * n / 13).clamp(1, n.max(1))
}

/// Random 6-bounded positive 1-in-3 instance with `m ≤ n` clauses of width
/// `min(3, n)`.
///
/// With `planted`, a hidden assignment is drawn first and every clause gets
/// exactly one of its true variables, so the instance is satisfiable.
pub fn generate_e13(n: usize, m: Option<usize>, planted: bool, seed: u64) -> Result<E13Instance> {
    if n == 0 {
        return Err(Error::input("n must be positive"));
    }
    let m = m.unwrap_or_else(|| default_e13_clauses(n));
    if m == 0 || m > n {
        return Err(Error::input(format!(
            "clause count must lie in 1..={n}, got {m}"
        )));
    }
    let width = n.min(3);
    let mut rng = rng(seed);
    let mut occ = vec![0usize; n + 1];
    let hidden: Vec<bool> = if planted {
        let mut h: Vec<bool> = (0..n).map(|_| rng.gen_ratio(1, 3)).collect();
        // each clause needs one true and width - 1 false variables
        let trues = h.iter().filter(|&&b| b).count();
        if trues == 0 {
            h[rng.gen_range(0..n)] = true;
        }
        while h.iter().filter(|&&b| !b).count() < width - 1 {
            let i = rng.gen_range(0..n);
            if h.iter().filter(|&&b| b).count() > 1 {
                h[i] = false;
            }
        }
        h
    } else {
        Vec::new()
    };
    let mut clauses = Vec::with_capacity(m);
    for _ in 0..m {
        let open = |vars: Vec<usize>, occ: &[usize]| -> Vec<usize> {
            vars.into_iter().filter(|&v| occ[v] < 6).collect()
        };
        let clause: Vec<usize> = if planted {
            let t = open((1..=n).filter(|&v| hidden[v - 1]).collect(), &occ);
            let f = open((1..=n).filter(|&v| !hidden[v - 1]).collect(), &occ);
            let mut c = vec![*t.choose(&mut rng).ok_or_else(|| {
                Error::Construction("planted instance ran out of true slots".into())
            })?];
            let picks: Vec<usize> = f.choose_multiple(&mut rng, width - 1).copied().collect();
            if picks.len() < width - 1 {
                return Err(Error::Construction(
                    "planted instance ran out of false slots".into(),
                ));
            }
            c.extend(picks);
            c
        } else {
            let avail = open((1..=n).collect(), &occ);
            avail.choose_multiple(&mut rng, width).copied().collect()
        };
        if clause.len() != width {
            return Err(Error::Construction("ran out of variable slots".into()));
        }
        for &v in &clause {
            occ[v] += 1;
        }
        clauses.push(clause);
    }
    E13Instance::new(n, clauses)
}

/// Random 3-CNF with distinct variables per clause and at most
/// `max_occurrences` occurrences of each variable.
pub fn generate_bounded_cnf(
    n: usize,
    m: usize,
    max_occurrences: usize,
    seed: u64,
) -> Result<Cnf3Instance> {
    if n < 3 {
        return Err(Error::input(
            "need at least 3 variables for distinct-variable clauses",
        ));
    }
    if 3 * m > max_occurrences * n {
        return Err(Error::input(format!(
            "{m} clauses need {} slots, only {} available",
            3 * m,
            max_occurrences * n
        )));
    }
    let mut rng = rng(seed);
    for _ in 0..MAX_RETRIES {
        let mut occ = vec![0usize; n + 1];
        let mut clauses = Vec::with_capacity(m);
        for _ in 0..m {
            let avail: Vec<usize> = (1..=n).filter(|&v| occ[v] < max_occurrences).collect();
            if avail.len() < 3 {
                break;
            }
            let vars: Vec<usize> = avail.choose_multiple(&mut rng, 3).copied().collect();
            for &v in &vars {
                occ[v] += 1;
            }
            clauses.push(
                vars.into_iter()
                    .map(|v| random_literal(&mut rng, v))
                    .collect(),
            );
        }
        if clauses.len() == m {
            return Cnf3Instance::new(n, clauses);
        }
    }
    Err(Error::Construction(
        "could not place clauses within the occurrence bound".into(),
    ))
}
