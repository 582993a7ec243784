//! Reduction from max 3-CNF (3SAT-5) to 6-bounded max positive 1-in-3 SAT.
//!
//! Each source clause `(a ∨ b ∨ c)` becomes
//! `E1(a, z1, z2), E1(¬b, z1, z3), E1(¬c, z2, z4)` over four fresh variables,
//! after which every literal `x_i` is renamed `w_i`, every `¬x_i` is renamed
//! `y_i`, and the consistency clause `E1(w_i, y_i)` is appended.
//!
//! Variable layout of the output: `w_1..w_n` are `1..=n`, `y_1..y_n` are
//! `n+1..=2n`, and source clause `j` (0-based) owns `z` variables
//! `2n+4j+1 ..= 2n+4j+4`. Output clauses list the three gadget clauses of
//! each source clause in order, followed by the `n` consistency clauses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{int, Rational};
use crate::sat::{Assignment, Cnf3Instance, E13Instance, Literal};

/// Index bookkeeping linking source and reduced instances. All variable and
/// clause indices are 1-based, matching line order in the E13 file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionWitnessMap {
    pub source_vars: usize,
    pub source_clauses: usize,
    /// `w[i]` is the output variable standing for literal `x_{i+1}`.
    pub w: Vec<usize>,
    /// `y[i]` is the output variable standing for literal `¬x_{i+1}`.
    pub y: Vec<usize>,
    /// Fresh variables `z1..z4` of each source clause.
    pub z: Vec<[usize; 4]>,
    /// Output clauses generated from each source clause.
    pub gadget_clauses: Vec<[usize; 3]>,
    /// Output clause `E1(w_i, y_i)` for each source variable.
    pub variable_clauses: Vec<usize>,
}

impl ReductionWitnessMap {
    pub fn target_vars(&self) -> usize {
        2 * self.source_vars + 4 * self.source_clauses
    }

    pub fn target_clauses(&self) -> usize {
        3 * self.source_clauses + self.source_vars
    }

    fn layout(n: usize, m: usize) -> Self {
        ReductionWitnessMap {
            source_vars: n,
            source_clauses: m,
            w: (1..=n).collect(),
            y: (n + 1..=2 * n).collect(),
            z: (0..m)
                .map(|j| {
                    let base = 2 * n + 4 * j;
                    [base + 1, base + 2, base + 3, base + 4]
                })
                .collect(),
            gadget_clauses: (0..m).map(|j| [3 * j + 1, 3 * j + 2, 3 * j + 3]).collect(),
            variable_clauses: (0..n).map(|i| 3 * m + i + 1).collect(),
        }
    }

    /// Output variable carrying the truth value of `lit`.
    pub fn literal_var(&self, lit: Literal) -> usize {
        if lit.positive {
            self.w[lit.var - 1]
        } else {
            self.y[lit.var - 1]
        }
    }
}

/// Source and target gap constants; the target gap is `alpha' / 18`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapLedger {
    #[serde(with = "crate::rational::serde_rational")]
    pub alpha_prime: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub alpha: Rational,
}

impl GapLedger {
    pub fn from_alpha_prime(alpha_prime: Rational) -> Self {
        let alpha = &alpha_prime / int(18);
        GapLedger { alpha_prime, alpha }
    }

    pub fn from_alpha(alpha: Rational) -> Self {
        GapLedger {
            alpha_prime: &alpha * int(18),
            alpha,
        }
    }
}

pub fn reduce(psi: &Cnf3Instance) -> Result<(E13Instance, ReductionWitnessMap)> {
    psi.validate_three_literals()?;
    let map = ReductionWitnessMap::layout(psi.num_vars(), psi.num_clauses());
    let mut clauses = Vec::with_capacity(map.target_clauses());
    for (j, clause) in psi.clauses().iter().enumerate() {
        let [z1, z2, z3, z4] = map.z[j];
        let (a, b, c) = (clause[0], clause[1], clause[2]);
        clauses.push(vec![map.literal_var(a), z1, z2]);
        clauses.push(vec![map.literal_var(b.negated()), z1, z3]);
        clauses.push(vec![map.literal_var(c.negated()), z2, z4]);
    }
    for i in 0..psi.num_vars() {
        clauses.push(vec![map.w[i], map.y[i]]);
    }
    let phi = E13Instance::new(map.target_vars(), clauses)?;
    Ok((phi, map))
}

fn check_map(psi: &Cnf3Instance, map: &ReductionWitnessMap) -> Result<()> {
    if map.source_vars != psi.num_vars() || map.source_clauses != psi.num_clauses() {
        return Err(Error::input("witness map does not belong to this instance"));
    }
    Ok(())
}

/// Extends a source assignment to the reduced instance.
///
/// `w_i = x_i`, `y_i = ¬x_i`, and each clause's `(z1, z2, z3, z4)` is the
/// first setting in `{F,T}^4` order that satisfies the most gadget clauses.
pub fn complete_assignment(
    psi: &Cnf3Instance,
    x: &Assignment,
    map: &ReductionWitnessMap,
) -> Result<Assignment> {
    check_map(psi, map)?;
    if x.len() != psi.num_vars() {
        return Err(Error::input(format!(
            "assignment has {} variables, instance has {}",
            x.len(),
            psi.num_vars()
        )));
    }
    let mut bits = vec![false; map.target_vars()];
    for i in 0..psi.num_vars() {
        bits[map.w[i] - 1] = x.bits[i];
        bits[map.y[i] - 1] = !x.bits[i];
    }
    for (j, clause) in psi.clauses().iter().enumerate() {
        let a = clause[0].eval(x);
        let nb = !clause[1].eval(x);
        let nc = !clause[2].eval(x);
        let exactly_one = |vals: [bool; 3]| vals.iter().filter(|&&v| v).count() == 1;
        let mut best = (0, [false; 4]);
        for code in 0u8..16 {
            let z = [code & 8 != 0, code & 4 != 0, code & 2 != 0, code & 1 != 0];
            let sat = exactly_one([a, z[0], z[1]]) as u8
                + exactly_one([nb, z[0], z[2]]) as u8
                + exactly_one([nc, z[1], z[3]]) as u8;
            if sat > best.0 {
                best = (sat, z);
            }
        }
        for (k, &var) in map.z[j].iter().enumerate() {
            bits[var - 1] = best.1[k];
        }
    }
    Ok(Assignment::new(bits))
}

/// Reads a source assignment off the reduced one: `x_i` is true exactly when
/// `w_i` is true and `y_i` is false.
pub fn lift_assignment(
    phi_assignment: &Assignment,
    map: &ReductionWitnessMap,
) -> Result<Assignment> {
    if phi_assignment.len() != map.target_vars() {
        return Err(Error::input(format!(
            "assignment has {} variables, reduced instance has {}",
            phi_assignment.len(),
            map.target_vars()
        )));
    }
    let bits = (0..map.source_vars)
        .map(|i| phi_assignment.value(map.w[i]) && !phi_assignment.value(map.y[i]))
        .collect();
    Ok(Assignment::new(bits))
}
