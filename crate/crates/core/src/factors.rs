//! Polynomial factors: atoms, unbiasedness certification, semantic
//! refinement checks, and a classical-only regularization loop.
//!
//! A factor is an ordered list of classical polynomials over one domain;
//! its atoms are the joint level sets. Regularization repeatedly replaces a
//! biased combination's highest-degree participant by its derivatives, with
//! an empirical semantic-refinement certificate instead of a constructive
//! refinement bound.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::bias_of_table;
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::table::{domain_size, FnTable};

/// Combination scans enumerate q^{|B|} coefficient vectors up to this cap.
pub const COMBO_CAP: u128 = 1 << 20;
/// Point scans (refinement, composition) enumerate q^n up to this cap.
pub const POINT_SCAN_CAP: u128 = 1 << 20;

/// An ordered list of defining polynomials over a shared (q, n).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolynomialFactor {
    q: u8,
    n: usize,
    polys: Vec<Poly>,
}

impl PolynomialFactor {
    pub fn new(q: u8, n: usize, polys: Vec<Poly>) -> Result<Self> {
        for p in &polys {
            if p.q() != q {
                return Err(Error::FieldMismatch(q, p.q()));
            }
            if p.n() != n {
                return Err(Error::ArityMismatch {
                    expected: n,
                    got: p.n(),
                });
            }
        }
        Ok(PolynomialFactor { q, n, polys })
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn polys(&self) -> &[Poly] {
        &self.polys
    }

    /// Complexity |B|: the number of defining polynomials.
    pub fn complexity(&self) -> usize {
        self.polys.len()
    }

    pub fn degree(&self) -> Option<u32> {
        self.polys.iter().filter_map(|p| p.degree()).max()
    }

    /// Atom label of a point: the tuple of defining-polynomial values.
    pub fn atom_of(&self, x: &[u8]) -> Result<Vec<u8>> {
        self.polys.iter().map(|p| p.evaluate(x)).collect()
    }

    fn tables(&self) -> Result<Vec<Arc<FnTable>>> {
        self.polys.iter().map(|p| p.table()).collect()
    }

    /// Observed atoms over the whole domain.
    pub fn atom_count(&self) -> Result<u64> {
        let size = domain_size(self.q, self.n);
        if size > POINT_SCAN_CAP {
            return Err(Error::CapExceeded {
                size,
                cap: POINT_SCAN_CAP,
            });
        }
        let tables = self.tables()?;
        let mut seen = std::collections::BTreeSet::new();
        for x in 0..size as u64 {
            let label: Vec<u8> = tables.iter().map(|t| t.value(x)).collect();
            seen.insert(label);
        }
        Ok(seen.len() as u64)
    }

    /// Upper bound q^{|B|} on the number of atoms (all depths are zero).
    pub fn atom_bound(&self) -> u128 {
        (self.q as u128).pow(self.complexity() as u32)
    }
}

/// Result of an unbiasedness scan over all nonzero combinations.
#[derive(Clone, Debug, Serialize)]
pub struct UnbiasednessOutcome {
    pub pass: bool,
    pub epsilon: f64,
    /// First violating coefficient vector in lexicographic order, with its
    /// bias, when the scan fails.
    pub witness: Option<(Vec<u8>, f64)>,
    pub combos_checked: u64,
}

/// Scan every nonzero lambda in F_q^{|B|}: pass iff every combination
/// sum lambda_i P_i has bias below epsilon. Lexicographically first
/// violation is reported. The scan partitions the lambda range across
/// workers and keeps the smallest violating index.
pub fn unbiasedness_check(b: &PolynomialFactor, epsilon: f64) -> Result<UnbiasednessOutcome> {
    let c = b.complexity();
    let q = b.q();
    let combos = (q as u128).pow(c as u32);
    if combos > COMBO_CAP {
        return Err(Error::CapExceeded {
            size: combos,
            cap: COMBO_CAP,
        });
    }
    let tables = b.tables()?;
    let total = combos as u64;
    let field = crate::gf::PrimeField::new(q)?;
    let len = domain_size(q, b.n) as u64;
    let hit = (1..total as u32)
        .into_par_iter()
        .by_exponential_blocks()
        .find_first(|&code| {
            let lambda = decode_lambda(code as u64, q, c);
            let bias = combo_bias(&tables, &lambda, &field, q, b.n, len);
            bias >= epsilon
        })
        .map(|code| code as u64);
    match hit {
        Some(code) => {
            let lambda = decode_lambda(code, q, c);
            let bias = combo_bias(&tables, &lambda, &field, q, b.n, len);
            Ok(UnbiasednessOutcome {
                pass: false,
                epsilon,
                witness: Some((lambda, bias)),
                combos_checked: code,
            })
        }
        None => Ok(UnbiasednessOutcome {
            pass: true,
            epsilon,
            witness: None,
            combos_checked: total.saturating_sub(1),
        }),
    }
}

/// Lexicographic order over lambda vectors: the first coordinate is the
/// most significant digit.
fn decode_lambda(code: u64, q: u8, c: usize) -> Vec<u8> {
    let mut out = vec![0u8; c];
    let mut rest = code;
    for i in (0..c).rev() {
        out[i] = (rest % q as u64) as u8;
        rest /= q as u64;
    }
    out
}

fn combo_bias(
    tables: &[Arc<FnTable>],
    lambda: &[u8],
    field: &crate::gf::PrimeField,
    q: u8,
    n: usize,
    len: u64,
) -> f64 {
    // combination table built value-wise; q = 2 stays in packed words
    if q == 2 {
        let mut words: Option<Vec<u64>> = None;
        for (t, &l) in tables.iter().zip(lambda) {
            if l == 0 {
                continue;
            }
            if let FnTable::Packed { words: w, .. } = t.as_ref() {
                match &mut words {
                    None => words = Some(w.clone()),
                    Some(acc) => {
                        for (a, b) in acc.iter_mut().zip(w) {
                            *a ^= *b;
                        }
                    }
                }
            }
        }
        let words = words.unwrap_or_else(|| vec![0u64; len.div_ceil(64) as usize]);
        let table = FnTable::Packed { n, words };
        return bias_of_table(&table);
    }
    let mut vals = vec![0u8; len as usize];
    for (t, &l) in tables.iter().zip(lambda) {
        if l == 0 {
            continue;
        }
        for (x, v) in vals.iter_mut().enumerate() {
            *v = field.add(*v, field.mul(l, t.value(x as u64)));
        }
    }
    let table = FnTable::Bytes { q, n, vals };
    bias_of_table(&table)
}

/// Semantic and syntactic refinement verdicts of b2 against b1.
#[derive(Clone, Debug, Serialize)]
pub struct RefinesOutcome {
    /// Every pair of points with equal b2 labels has equal b1 labels.
    pub semantic: bool,
    /// Point pair violating semantic refinement, as domain indices.
    pub witness: Option<(u64, u64)>,
    /// The defining list of b2 extends that of b1.
    pub syntactic: bool,
}

/// Decide refinement exactly by scanning all points grouped by b2 label.
pub fn refines(b2: &PolynomialFactor, b1: &PolynomialFactor) -> Result<RefinesOutcome> {
    if b2.q() != b1.q() || b2.n() != b1.n() {
        return Err(Error::Invalid("factors live on different domains".into()));
    }
    let size = domain_size(b2.q(), b2.n());
    if size > POINT_SCAN_CAP {
        return Err(Error::CapExceeded {
            size,
            cap: POINT_SCAN_CAP,
        });
    }
    let syntactic = b2.polys.len() >= b1.polys.len()
        && b2.polys[..b1.polys.len()] == b1.polys[..];
    let t2 = b2.tables()?;
    let t1 = b1.tables()?;
    let mut first_by_label: BTreeMap<Vec<u8>, (u64, Vec<u8>)> = BTreeMap::new();
    for x in 0..size as u64 {
        let l2: Vec<u8> = t2.iter().map(|t| t.value(x)).collect();
        let l1: Vec<u8> = t1.iter().map(|t| t.value(x)).collect();
        match first_by_label.get(&l2) {
            None => {
                first_by_label.insert(l2, (x, l1));
            }
            Some((x0, seen)) => {
                if *seen != l1 {
                    return Ok(RefinesOutcome {
                        semantic: false,
                        witness: Some((*x0, x)),
                        syntactic,
                    });
                }
            }
        }
    }
    Ok(RefinesOutcome {
        semantic: true,
        witness: None,
        syntactic,
    })
}

/// Lookup table realizing f as a function of the factor's atoms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AtomMap {
    pub table: BTreeMap<Vec<u8>, u8>,
}

/// Outcome of composing a factor with a target polynomial.
#[derive(Clone, Debug)]
pub enum ComposeOutcome {
    Function(AtomMap),
    /// Two points in one atom where f disagrees.
    NotAFunction { atom: Vec<u8>, points: (u64, u64) },
}

/// If f is constant on every atom of the factor, return the composition
/// table; otherwise a witness atom with two differing points.
pub fn compose(b: &PolynomialFactor, f: &Poly) -> Result<ComposeOutcome> {
    if f.q() != b.q() || f.n() != b.n() {
        return Err(Error::Invalid(
            "target lives on a different domain than the factor".into(),
        ));
    }
    let size = domain_size(b.q(), b.n());
    if size > POINT_SCAN_CAP {
        return Err(Error::CapExceeded {
            size,
            cap: POINT_SCAN_CAP,
        });
    }
    let tables = b.tables()?;
    let ft = f.table()?;
    let mut map: BTreeMap<Vec<u8>, (u64, u8)> = BTreeMap::new();
    for x in 0..size as u64 {
        let label: Vec<u8> = tables.iter().map(|t| t.value(x)).collect();
        let v = ft.value(x);
        match map.get(&label) {
            None => {
                map.insert(label, (x, v));
            }
            Some(&(x0, seen)) => {
                if seen != v {
                    return Ok(ComposeOutcome::NotAFunction {
                        atom: label,
                        points: (x0, x),
                    });
                }
            }
        }
    }
    Ok(ComposeOutcome::Function(AtomMap {
        table: map.into_iter().map(|(k, (_, v))| (k, v)).collect(),
    }))
}

/// Knobs of the regularization loop.
#[derive(Clone, Debug, Serialize)]
pub struct RegularityPolicy {
    pub epsilon: EpsilonPolicy,
    pub max_rounds: u32,
    /// Derivative directions taken per replacement.
    pub directions: u32,
    /// Extra directions allowed while retrying a round whose replacement
    /// broke semantic refinement.
    pub retry_cap: u32,
    pub seed: u64,
}

impl Default for RegularityPolicy {
    fn default() -> Self {
        RegularityPolicy {
            epsilon: EpsilonPolicy::Fixed(0.3),
            max_rounds: 20,
            directions: 2,
            retry_cap: 4,
            seed: 0,
        }
    }
}

/// The threshold function evaluated at the current complexity.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonPolicy {
    Fixed(f64),
    /// epsilon by complexity, validated decreasing; the last entry covers
    /// all larger complexities.
    Schedule(Vec<f64>),
}

impl EpsilonPolicy {
    pub fn schedule(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("empty epsilon schedule".into()));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Invalid(
                "epsilon schedule must be nonincreasing in complexity".into(),
            ));
        }
        Ok(EpsilonPolicy::Schedule(values))
    }

    pub fn at(&self, complexity: usize) -> f64 {
        match self {
            EpsilonPolicy::Fixed(e) => *e,
            EpsilonPolicy::Schedule(v) => {
                let idx = complexity.min(v.len().saturating_sub(1));
                v[idx]
            }
        }
    }
}

/// One committed round of the loop.
#[derive(Clone, Debug, Serialize)]
pub struct RoundTrace {
    pub round: u32,
    pub witness_lambda: Vec<u8>,
    pub witness_bias: f64,
    pub replaced_index: usize,
    pub replaced_degree: u32,
    pub directions: Vec<Vec<u8>>,
    pub complexity_after: usize,
}

/// Certificate attached to a regularization result.
#[derive(Clone, Debug, Serialize)]
pub struct RegularizeCertificate {
    /// Final unbiasedness verdict from a full combination re-scan.
    pub unbiased: bool,
    pub epsilon_final: f64,
    pub rounds: Vec<RoundTrace>,
    /// Semantic refinement verdict of the output against the input.
    pub refinement_semantic: bool,
    pub refinement_witness: Option<(u64, u64)>,
    /// A round's replacement could not be certified as a refinement even
    /// after direction escalation.
    pub refinement_failed: bool,
    /// Round budget ran out with a biased combination remaining.
    pub not_regular: bool,
    pub final_complexity: usize,
}

/// Regularize a factor: while some nonzero combination is biased, replace
/// the highest-degree participating polynomial (ties to the lowest index)
/// by derivatives in fresh deterministic directions, drop duplicates and
/// constants, and re-check. Each round must certify semantic refinement of
/// the new factor against the previous one; on failure the round retries
/// with one more direction, up to the retry cap.
pub fn regularize(
    b: &PolynomialFactor,
    policy: &RegularityPolicy,
) -> Result<(PolynomialFactor, RegularizeCertificate)> {
    let original = b.clone();
    let mut current = normalize(b);
    let mut rounds = Vec::new();
    let mut refinement_failed = false;
    let mut not_regular = false;
    let mut epsilon_final;

    let mut round = 0u32;
    loop {
        let epsilon = policy.epsilon.at(current.complexity());
        epsilon_final = epsilon;
        let scan = unbiasedness_check(&current, epsilon)?;
        if scan.pass {
            break;
        }
        if round >= policy.max_rounds {
            not_regular = true;
            break;
        }
        round += 1;
        let (lambda, witness_bias) = scan.witness.expect("failed scan carries a witness");
        // highest-degree participant, lowest index on ties
        let replaced_index = lambda
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != 0)
            .max_by(|(i, _), (j, _)| {
                let di = current.polys[*i].degree();
                let dj = current.polys[*j].degree();
                di.cmp(&dj).then(j.cmp(i))
            })
            .map(|(i, _)| i)
            .expect("nonzero lambda");
        let victim = current.polys[replaced_index].clone();
        let replaced_degree = victim.degree().unwrap_or(0);

        let mut committed = false;
        for extra in 0..=policy.retry_cap {
            let want = policy.directions + extra;
            let dirs = fresh_directions(&victim, want, policy.seed);
            let mut next_polys: Vec<Poly> = Vec::new();
            for (i, p) in current.polys.iter().enumerate() {
                if i == replaced_index {
                    for y in &dirs {
                        next_polys.push(crate::analysis::derivative(p, y)?);
                    }
                } else {
                    next_polys.push(p.clone());
                }
            }
            let next = normalize(&PolynomialFactor::new(current.q, current.n, next_polys)?);
            let verdict = refines(&next, &current)?;
            if verdict.semantic {
                rounds.push(RoundTrace {
                    round,
                    witness_lambda: lambda.clone(),
                    witness_bias,
                    replaced_index,
                    replaced_degree,
                    directions: dirs,
                    complexity_after: next.complexity(),
                });
                current = next;
                committed = true;
                break;
            }
        }
        if !committed {
            refinement_failed = true;
            break;
        }
    }

    let final_scan = unbiasedness_check(&current, epsilon_final)?;
    let refinement = refines(&current, &original)?;
    let certificate = RegularizeCertificate {
        unbiased: final_scan.pass,
        epsilon_final,
        rounds,
        refinement_semantic: refinement.semantic,
        refinement_witness: refinement.witness,
        refinement_failed,
        not_regular,
        final_complexity: current.complexity(),
    };
    Ok((current, certificate))
}

/// Drop constants and exact duplicates, keeping first occurrences.
fn normalize(b: &PolynomialFactor) -> PolynomialFactor {
    let mut seen: Vec<Poly> = Vec::new();
    for p in &b.polys {
        if p.is_constant() {
            continue;
        }
        if !seen.contains(p) {
            seen.push(p.clone());
        }
    }
    PolynomialFactor {
        q: b.q,
        n: b.n,
        polys: seen,
    }
}

/// Deterministic direction sequence for a replacement: weight-1 vectors
/// first, then weight-2, then seeded draws, skipping directions whose
/// derivative of the victim is constant.
fn fresh_directions(victim: &Poly, want: u32, seed: u64) -> Vec<Vec<u8>> {
    let q = victim.q();
    let n = victim.n();
    let mut out: Vec<Vec<u8>> = Vec::new();
    let push_if_useful = |out: &mut Vec<Vec<u8>>, y: Vec<u8>| {
        if out.len() >= want as usize || out.contains(&y) {
            return;
        }
        if let Ok(d) = crate::analysis::derivative(victim, &y) {
            if !d.is_constant() {
                out.push(y);
            }
        }
    };
    for i in 0..n {
        for c in 1..q {
            let mut y = vec![0u8; n];
            y[i] = c;
            push_if_useful(&mut out, y);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut y = vec![0u8; n];
            y[i] = 1;
            y[j] = 1;
            push_if_useful(&mut out, y);
        }
    }
    let mut rng = crate::rng::substream(seed, 0xd1f);
    let mut guard = 0;
    while out.len() < want as usize && guard < 512 {
        guard += 1;
        let y = crate::rng::random_point(&mut rng, q, n);
        if y.iter().all(|&v| v == 0) {
            continue;
        }
        push_if_useful(&mut out, y);
    }
    out
}
