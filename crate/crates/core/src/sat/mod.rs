//! Instance models and brute-force optimization oracles for 3-CNF and
//! positive 1-in-3 SAT.
//!
//! Variables are numbered from 1 in instances and files. Assignments are
//! enumerated in lexicographic order with `T` preceding `F`, so the first
//! maximizer found is the lexicographically smallest one under that order.

mod format;

pub use format::{parse_dimacs, parse_e13, write_dimacs, write_e13};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest variable count accepted by the exhaustive oracles by default.
pub const DEFAULT_MAX_ENUM_VARS: usize = 24;

/// Hard limit of the bitmask representation used during enumeration.
const MASK_BITS: usize = 63;

/// A signed CNF literal over variables `1..=n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal {
            var,
            positive: true,
        }
    }

    pub fn neg(var: usize) -> Self {
        Literal {
            var,
            positive: false,
        }
    }

    pub fn negated(self) -> Self {
        Literal {
            var: self.var,
            positive: !self.positive,
        }
    }

    /// DIMACS encoding: `var` or `-var`.
    pub fn to_dimacs(self) -> i64 {
        if self.positive {
            self.var as i64
        } else {
            -(self.var as i64)
        }
    }

    pub fn eval(self, a: &Assignment) -> bool {
        a.bits[self.var - 1] == self.positive
    }
}

/// A CNF formula. Three literals per clause is the shape the gadget reduction
/// consumes; other widths are representable so they can be diagnosed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cnf3Instance {
    num_vars: usize,
    clauses: Vec<Vec<Literal>>,
}

impl Cnf3Instance {
    pub fn new(num_vars: usize, clauses: Vec<Vec<Literal>>) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::input("instance needs at least one variable"));
        }
        for (ci, clause) in clauses.iter().enumerate() {
            for lit in clause {
                if lit.var == 0 || lit.var > num_vars {
                    return Err(Error::input(format!(
                        "clause {} references variable {} outside 1..={}",
                        ci + 1,
                        lit.var,
                        num_vars
                    )));
                }
            }
        }
        Ok(Cnf3Instance { num_vars, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<Literal>] {
        &self.clauses
    }

    /// Fails on the first clause that does not have exactly three literals.
    pub fn validate_three_literals(&self) -> Result<()> {
        match self.clauses.iter().position(|c| c.len() != 3) {
            Some(i) => Err(Error::input(format!(
                "clause {} has {} literals, expected exactly 3",
                i + 1,
                self.clauses[i].len()
            ))),
            None => Ok(()),
        }
    }

    /// Number of literal occurrences of each variable (index 0 is variable 1).
    pub fn occurrence_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_vars];
        for lit in self.clauses.iter().flatten() {
            counts[lit.var - 1] += 1;
        }
        counts
    }

    /// Every clause has three literals and every variable occurs exactly five times.
    pub fn is_3sat5(&self) -> bool {
        self.validate_three_literals().is_ok() && self.occurrence_counts().iter().all(|&c| c == 5)
    }

    pub fn clause_satisfied(&self, clause: usize, a: &Assignment) -> bool {
        self.clauses[clause].iter().any(|l| l.eval(a))
    }

    pub fn unsatisfied_count(&self, a: &Assignment) -> Result<usize> {
        check_len(self.num_vars, a)?;
        Ok((0..self.clauses.len())
            .filter(|&c| !self.clause_satisfied(c, a))
            .count())
    }

    pub fn val(&self, a: &Assignment) -> Result<Rational> {
        if self.clauses.is_empty() {
            return Err(Error::input(
                "val is undefined for an instance without clauses",
            ));
        }
        let unsat = self.unsatisfied_count(a)?;
        Ok(fraction(self.clauses.len() - unsat, self.clauses.len()))
    }
}

/// Positive 1-in-3 SAT: every clause is a set of 1 to 3 distinct variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct E13Instance {
    num_vars: usize,
    clauses: Vec<Vec<usize>>,
}

impl E13Instance {
    /// Clause variable lists are sorted; repeated variables are rejected.
    pub fn new(num_vars: usize, clauses: Vec<Vec<usize>>) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::input("instance needs at least one variable"));
        }
        let mut sorted = Vec::with_capacity(clauses.len());
        for (ci, mut clause) in clauses.into_iter().enumerate() {
            if clause.is_empty() || clause.len() > 3 {
                return Err(Error::input(format!(
                    "clause {} has {} variables, expected 1 to 3",
                    ci + 1,
                    clause.len()
                )));
            }
            clause.sort_unstable();
            if clause.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::input(format!(
                    "clause {} repeats a variable",
                    ci + 1
                )));
            }
            if let Some(&v) = clause.iter().find(|&&v| v == 0 || v > num_vars) {
                return Err(Error::input(format!(
                    "clause {} references variable {} outside 1..={}",
                    ci + 1,
                    v,
                    num_vars
                )));
            }
            sorted.push(clause);
        }
        Ok(E13Instance {
            num_vars,
            clauses: sorted,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<usize>] {
        &self.clauses
    }

    pub fn occurrence_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_vars];
        for &v in self.clauses.iter().flatten() {
            counts[v - 1] += 1;
        }
        counts
    }

    pub fn is_6_bounded(&self) -> bool {
        check_bounded(self, 6).bounded
    }

    pub fn clause_satisfied(&self, clause: usize, a: &Assignment) -> bool {
        self.clauses[clause]
            .iter()
            .filter(|&&v| a.bits[v - 1])
            .count()
            == 1
    }

    pub fn unsatisfied_count(&self, a: &Assignment) -> Result<usize> {
        check_len(self.num_vars, a)?;
        Ok((0..self.clauses.len())
            .filter(|&c| !self.clause_satisfied(c, a))
            .count())
    }

    /// Number of clauses with all three of their variables true.
    pub fn triple_true_count(&self, a: &Assignment) -> usize {
        self.clauses
            .iter()
            .filter(|c| c.len() == 3 && c.iter().all(|&v| a.bits[v - 1]))
            .count()
    }
}

/// A truth assignment; `bits[i]` is the value of variable `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub bits: Vec<bool>,
}

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Assignment { bits }
    }

    pub fn all_false(n: usize) -> Self {
        Assignment {
            bits: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Value of variable `var` (1-based).
    pub fn value(&self, var: usize) -> bool {
        self.bits[var - 1]
    }

    /// The `index`-th assignment of `n` variables in enumeration order
    /// (index 0 is all-true, variable 1 is the most significant position).
    pub fn from_index(n: usize, index: u64) -> Self {
        let bits = (0..n).map(|i| (index >> (n - 1 - i)) & 1 == 0).collect();
        Assignment { bits }
    }

    /// Parses `TFFT` / `1001` strings.
    pub fn parse(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c {
                'T' | 't' | '1' => Ok(true),
                'F' | 'f' | '0' => Ok(false),
                other => Err(Error::input(format!("bad assignment symbol `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Assignment::new)
    }

    /// Every assignment of `n` variables in enumeration order.
    pub fn enumerate(n: usize) -> impl Iterator<Item = Assignment> {
        let total = 1u64 << n;
        (0..total).map(move |i| Assignment::from_index(n, i))
    }
}

impl std::fmt::Display for Assignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "T" } else { "F" })?;
        }
        Ok(())
    }
}

fn check_len(n: usize, a: &Assignment) -> Result<()> {
    if a.len() != n {
        return Err(Error::input(format!(
            "assignment has {} variables, instance has {}",
            a.len(),
            n
        )));
    }
    Ok(())
}

fn fraction(num: usize, den: usize) -> Rational {
    Rational::new((num as i64).into(), (den as i64).into())
}

/// Exactly-one predicate of `clause` (1-based variables) under `a`.
pub fn eval_e1_clause(clause: &[usize], a: &Assignment) -> Result<bool> {
    let mut count = 0;
    for &v in clause {
        if v == 0 || v > a.len() {
            return Err(Error::input(format!(
                "variable {} outside assignment range 1..={}",
                v,
                a.len()
            )));
        }
        count += a.bits[v - 1] as usize;
    }
    Ok(count == 1)
}

/// Fraction of clauses satisfied by `a`.
pub fn val(inst: &E13Instance, a: &Assignment) -> Result<Rational> {
    if inst.num_clauses() == 0 {
        return Err(Error::input(
            "val is undefined for an instance without clauses",
        ));
    }
    let unsat = inst.unsatisfied_count(a)?;
    Ok(fraction(inst.num_clauses() - unsat, inst.num_clauses()))
}

/// Per-variable occurrence counts against a bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub bounded: bool,
    pub counts: Vec<usize>,
}

pub fn check_bounded(inst: &E13Instance, bound: usize) -> BoundCheck {
    let counts = inst.occurrence_counts();
    BoundCheck {
        bounded: counts.iter().all(|&c| c <= bound),
        counts,
    }
}

/// Clause representation used by the enumeration kernels.
enum MaskClause {
    ExactlyOne(u64),
    Disjunction { pos: u64, neg: u64 },
}

impl MaskClause {
    #[inline]
    fn satisfied(&self, truth: u64) -> bool {
        match *self {
            MaskClause::ExactlyOne(m) => (truth & m).count_ones() == 1,
            MaskClause::Disjunction { pos, neg } => (truth & pos) != 0 || (!truth & neg) != 0,
        }
    }
}

/// Maximizes the satisfied-clause count over all `2^n` assignments, returning
/// the count and the enumeration index of the first maximizer.
fn max_satisfied(n: usize, clauses: &[MaskClause]) -> (usize, u64) {
    let total = 1u64 << n;
    let truth_of = |index: u64| !index & ((1u64 << n) - 1);
    // bit (n-1-i) of the truth mask is variable i+1, matching Assignment::from_index
    let chunk = (total / 64).max(1 << 12);
    let starts: Vec<u64> = (0..total).step_by(chunk as usize).collect();
    starts
        .into_par_iter()
        .map(|start| {
            let end = (start + chunk).min(total);
            let mut best = (0usize, start);
            let mut found = false;
            for index in start..end {
                let truth = truth_of(index);
                let sat = clauses.iter().filter(|c| c.satisfied(truth)).count();
                if !found || sat > best.0 {
                    best = (sat, index);
                    found = true;
                    if sat == clauses.len() {
                        break;
                    }
                }
            }
            best
        })
        .reduce(
            || (0, u64::MAX),
            |a, b| {
                if a.1 == u64::MAX {
                    b
                } else if b.1 == u64::MAX {
                    a
                } else if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        )
}

fn var_bit(n: usize, var: usize) -> u64 {
    1u64 << (n - var)
}

fn guard(n: usize, max_vars: usize) -> Result<()> {
    let limit = max_vars.min(MASK_BITS);
    if n > limit {
        return Err(Error::Capacity {
            what: "exhaustive assignment enumeration".into(),
            required: 1u128 << n.min(127),
            budget: 1u128 << limit,
        });
    }
    Ok(())
}

/// Maximum `val` over all assignments, with the first maximizer in
/// enumeration order. Refuses instances with more than `max_vars` variables.
pub fn max_val_with_guard(inst: &E13Instance, max_vars: usize) -> Result<(Rational, Assignment)> {
    if inst.num_clauses() == 0 {
        return Err(Error::input(
            "val is undefined for an instance without clauses",
        ));
    }
    let n = inst.num_vars();
    guard(n, max_vars)?;
    let clauses: Vec<MaskClause> = inst
        .clauses()
        .iter()
        .map(|c| MaskClause::ExactlyOne(c.iter().fold(0, |m, &v| m | var_bit(n, v))))
        .collect();
    let (sat, index) = max_satisfied(n, &clauses);
    Ok((
        fraction(sat, inst.num_clauses()),
        Assignment::from_index(n, index),
    ))
}

pub fn max_val(inst: &E13Instance) -> Result<(Rational, Assignment)> {
    max_val_with_guard(inst, DEFAULT_MAX_ENUM_VARS)
}

/// Disjunctive counterpart of [`max_val_with_guard`].
pub fn max_val_cnf_with_guard(
    inst: &Cnf3Instance,
    max_vars: usize,
) -> Result<(Rational, Assignment)> {
    if inst.num_clauses() == 0 {
        return Err(Error::input(
            "val is undefined for an instance without clauses",
        ));
    }
    let n = inst.num_vars();
    guard(n, max_vars)?;
    let clauses: Vec<MaskClause> = inst
        .clauses()
        .iter()
        .map(|c| {
            let (mut pos, mut neg) = (0, 0);
            for l in c {
                if l.positive {
                    pos |= var_bit(n, l.var);
                } else {
                    neg |= var_bit(n, l.var);
                }
            }
            MaskClause::Disjunction { pos, neg }
        })
        .collect();
    let (sat, index) = max_satisfied(n, &clauses);
    Ok((
        fraction(sat, inst.num_clauses()),
        Assignment::from_index(n, index),
    ))
}

pub fn max_val_cnf(inst: &Cnf3Instance) -> Result<(Rational, Assignment)> {
    max_val_cnf_with_guard(inst, DEFAULT_MAX_ENUM_VARS)
}
