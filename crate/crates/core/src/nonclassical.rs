//! Torus-valued polynomials in normal form, with derivative-based degree
//! verification.
//!
//! A value table of a depth-k object lives in (1/q^{k+1}) Z / Z. The shift
//! is fixed at zero throughout. Derivatives are returned as value tables
//! rather than re-encoded in normal form; the degree checker consumes
//! tables, so both representations feed it.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::gf::{PrimeField, TorusValue, MAX_DEPTH};
use crate::poly::Poly;
use crate::table::{add_index, decode_point, domain_size, encode_point};

/// Cap on the exhaustive degree-check enumeration q^{n(d+2)}.
pub const DEGREE_CHECK_CAP: u128 = 1 << 24;

/// A torus-valued polynomial sum of c * |x1|^{d1} ... |xn|^{dn} / q^{k+1}
/// terms, keyed by (exponents, k). Coefficients lie in 1..q, exponents in
/// 0..q with at least one positive entry, and k is at most `MAX_DEPTH`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonclassicalPoly {
    q: u8,
    n: usize,
    coeffs: BTreeMap<(Vec<u8>, u8), u8>,
}

impl NonclassicalPoly {
    pub fn new(q: u8, n: usize, entries: Vec<(Vec<u8>, u8, u8)>) -> Result<Self> {
        PrimeField::new(q)?;
        let mut coeffs = BTreeMap::new();
        for (exps, k, c) in entries {
            if exps.len() != n {
                return Err(Error::ArityMismatch {
                    expected: n,
                    got: exps.len(),
                });
            }
            if exps.iter().any(|&d| d >= q) {
                return Err(Error::Invalid(
                    "normal form exponents must be below q".into(),
                ));
            }
            if exps.iter().all(|&d| d == 0) {
                return Err(Error::Invalid(
                    "normal form terms need a positive exponent sum (shifts are fixed at zero)"
                        .into(),
                ));
            }
            if k > MAX_DEPTH {
                return Err(Error::Invalid(format!(
                    "depth {k} exceeds the supported maximum {MAX_DEPTH}"
                )));
            }
            let c = c % q;
            if c == 0 {
                continue;
            }
            let entry = coeffs.entry((exps, k)).or_insert(0u8);
            *entry = ((*entry as u16 + c as u16) % q as u16) as u8;
        }
        coeffs.retain(|_, &mut c| c != 0);
        Ok(NonclassicalPoly { q, n, coeffs })
    }

    /// Embed a classical polynomial as the depth-0 object x -> |f(x)|/q.
    /// The constant term must vanish since shifts are fixed at zero.
    pub fn from_classical(f: &Poly) -> Result<Self> {
        if f.coeff(&vec![0; f.n()]) != 0 {
            return Err(Error::Invalid(
                "classical embedding requires a zero constant term".into(),
            ));
        }
        let entries = f
            .terms()
            .map(|(e, c)| (e.clone(), 0u8, c))
            .collect();
        NonclassicalPoly::new(f.q(), f.n(), entries)
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<u8>, u8, u8)> {
        self.coeffs.iter().map(|((e, k), &c)| (e, *k, c))
    }

    /// Largest k carrying a nonzero coefficient; 0 for the zero object.
    pub fn depth(&self) -> u8 {
        self.coeffs.keys().map(|(_, k)| *k).max().unwrap_or(0)
    }

    /// Degree read off the normal form: max over terms of
    /// sum(d_i) + k (q - 1).
    pub fn degree(&self) -> u32 {
        self.coeffs
            .keys()
            .map(|(e, k)| e.iter().map(|&d| d as u32).sum::<u32>() + *k as u32 * (self.q as u32 - 1))
            .max()
            .unwrap_or(0)
    }

    /// Exact evaluation; the result carries denominator q^{depth+1}.
    pub fn eval(&self, x: &[u8]) -> Result<TorusValue> {
        if x.len() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let level = self.depth() + 1;
        let den = (self.q as u64).pow(level as u32);
        let mut num = 0u64;
        for ((exps, k), &c) in &self.coeffs {
            let mut t = c as u64 % den;
            for (&xi, &d) in x.iter().zip(exps.iter()) {
                for _ in 0..d {
                    t = t * xi as u64 % den;
                }
            }
            // scale the term from denominator q^{k+1} up to q^level
            let lift = (self.q as u64).pow((level - 1 - k) as u32);
            num = (num + t * lift) % den;
        }
        TorusValue::new(num, self.q, level)
    }

    /// Dense table of exact values.
    pub fn torus_table(&self) -> Result<TorusTable> {
        let size = domain_size(self.q, self.n);
        if size > DEGREE_CHECK_CAP {
            return Err(Error::CapExceeded {
                size,
                cap: DEGREE_CHECK_CAP,
            });
        }
        let level = self.depth() + 1;
        let len = size as u64;
        let mut vals = Vec::with_capacity(len as usize);
        for idx in 0..len {
            let x = decode_point(idx, self.q, self.n);
            vals.push(self.eval(&x)?.numerator() as u32);
        }
        Ok(TorusTable {
            q: self.q,
            n: self.n,
            level,
            vals,
        })
    }

    /// Additive derivative in direction y, as a table of exact torus values.
    pub fn derivative_table(&self, y: &[u8]) -> Result<TorusTable> {
        if y.len() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: y.len(),
            });
        }
        Ok(self.torus_table()?.derivative(encode_point(y, self.q)))
    }

    /// Canonical text: one `c d1 .. dn k` line per term.
    pub fn print(&self) -> String {
        let mut out = String::new();
        for ((exps, k), &c) in &self.coeffs {
            out.push_str(&c.to_string());
            for d in exps {
                out.push(' ');
                out.push_str(&d.to_string());
            }
            out.push(' ');
            out.push_str(&k.to_string());
            out.push('\n');
        }
        out
    }

    /// Parse the line format produced by `print`.
    pub fn parse(text: &str, q: u8, n: usize) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums: Vec<u8> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<u8>().map_err(|_| Error::Parse {
                        pos: lineno,
                        msg: format!("bad number '{t}' on line {}", lineno + 1),
                    })
                })
                .collect::<Result<_>>()?;
            if nums.len() != n + 2 {
                return Err(Error::Parse {
                    pos: lineno,
                    msg: format!(
                        "line {} has {} fields, expected c d1..d{n} k",
                        lineno + 1,
                        nums.len()
                    ),
                });
            }
            let c = nums[0];
            let exps = nums[1..=n].to_vec();
            let k = nums[n + 1];
            entries.push((exps, k, c));
        }
        NonclassicalPoly::new(q, n, entries)
    }
}

/// Dense table of torus numerators at a fixed level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusTable {
    q: u8,
    n: usize,
    level: u8,
    vals: Vec<u32>,
}

impl TorusTable {
    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> u8 {
        self.level
    }

    pub fn len(&self) -> u64 {
        self.vals.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn value(&self, idx: u64) -> TorusValue {
        TorusValue::new(self.vals[idx as usize] as u64, self.q, self.level)
            .expect("level validated at construction")
    }

    pub fn is_identically_zero(&self) -> bool {
        self.vals.iter().all(|&v| v == 0)
    }

    /// Table of x -> t(x + y) - t(x).
    pub fn derivative(&self, y: u64) -> TorusTable {
        let den = (self.q as u64).pow(self.level as u32) as u32;
        let len = self.vals.len() as u64;
        let mut vals = Vec::with_capacity(self.vals.len());
        for x in 0..len {
            let xs = add_index(x, y, self.q, self.n);
            let d = (den + self.vals[xs as usize] - self.vals[x as usize]) % den;
            vals.push(d);
        }
        TorusTable {
            q: self.q,
            n: self.n,
            level: self.level,
            vals,
        }
    }
}

/// Outcome of a degree check.
#[derive(Clone, Debug)]
pub struct DegreeCheck {
    pub holds: bool,
    /// On failure, directions y_1..y_{d+1} and the point x where the
    /// iterated derivative is nonzero.
    pub witness: Option<(Vec<Vec<u8>>, Vec<u8>)>,
    pub mode: CheckMode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckMode {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

/// Exhaustive check that every (d+1)-fold derivative of the table vanishes
/// everywhere. Cost q^{n(d+2)}; guarded by `DEGREE_CHECK_CAP`.
pub fn degree_check_table(table: &TorusTable, d: u32) -> Result<DegreeCheck> {
    let size = domain_size(table.q, table.n);
    let total = size.pow(d + 2);
    if total > DEGREE_CHECK_CAP {
        return Err(Error::CapExceeded {
            size: total,
            cap: DEGREE_CHECK_CAP,
        });
    }
    let mut dirs = Vec::new();
    let witness = search_nonzero(table, d + 1, &mut dirs);
    Ok(DegreeCheck {
        holds: witness.is_none(),
        witness,
        mode: CheckMode::Exhaustive,
    })
}

fn search_nonzero(
    table: &TorusTable,
    depth: u32,
    dirs: &mut Vec<u64>,
) -> Option<(Vec<Vec<u8>>, Vec<u8>)> {
    if depth == 0 {
        let len = table.len();
        for x in 0..len {
            if table.vals[x as usize] != 0 {
                let ds = dirs
                    .iter()
                    .map(|&y| decode_point(y, table.q, table.n))
                    .collect();
                return Some((ds, decode_point(x, table.q, table.n)));
            }
        }
        return None;
    }
    let len = table.len();
    for y in 0..len {
        dirs.push(y);
        let d = table.derivative(y);
        if let Some(w) = search_nonzero(&d, depth - 1, dirs) {
            return Some(w);
        }
        dirs.pop();
    }
    None
}

/// Exhaustive degree check for a normal-form object.
pub fn degree_check(p: &NonclassicalPoly, d: u32) -> Result<DegreeCheck> {
    degree_check_table(&p.torus_table()?, d)
}

/// Sampled degree check: draws random tuples (y_1..y_{d+1}, x) and tests the
/// iterated derivative by direct evaluation. A pass is only evidence over
/// the sampled tuples, and the mode records that.
pub fn degree_check_sampled(
    p: &NonclassicalPoly,
    d: u32,
    samples: u64,
    seed: u64,
) -> Result<DegreeCheck> {
    let mut rng = crate::rng::seeded(seed);
    let m = d as usize + 1;
    for _ in 0..samples {
        let dirs: Vec<Vec<u8>> = (0..m)
            .map(|_| crate::rng::random_point(&mut rng, p.q, p.n))
            .collect();
        let x = crate::rng::random_point(&mut rng, p.q, p.n);
        let v = iterated_derivative_at(p, &dirs, &x)?;
        if !v.is_zero() {
            return Ok(DegreeCheck {
                holds: false,
                witness: Some((dirs, x)),
                mode: CheckMode::Sampled { samples, seed },
            });
        }
    }
    Ok(DegreeCheck {
        holds: true,
        witness: None,
        mode: CheckMode::Sampled { samples, seed },
    })
}

/// (D_{y_1} .. D_{y_m} P)(x) via the alternating sum over subsets of the
/// directions.
fn iterated_derivative_at(
    p: &NonclassicalPoly,
    dirs: &[Vec<u8>],
    x: &[u8],
) -> Result<TorusValue> {
    let field = PrimeField::new(p.q)?;
    let m = dirs.len();
    let mut acc = TorusValue::zero(p.q);
    for mask in 0u64..(1 << m) {
        let mut point = x.to_vec();
        for (i, dir) in dirs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                for (pj, &dj) in point.iter_mut().zip(dir) {
                    *pj = field.add(*pj, dj);
                }
            }
        }
        let v = p.eval(&point)?;
        let sign_positive = (m as u32 - (mask.count_ones())).is_multiple_of(2);
        acc = if sign_positive {
            acc.add(&v)?
        } else {
            acc.sub(&v)?
        };
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// |x1| / 4 over F_2: the canonical depth-1 example.
    fn half_quarter() -> NonclassicalPoly {
        NonclassicalPoly::new(2, 1, vec![(vec![1], 1, 1)]).unwrap()
    }

    #[test]
    fn eval_normal_form_monomials() {
        let p = half_quarter();
        assert_eq!(p.depth(), 1);
        let at1 = p.eval(&[1]).unwrap();
        assert_eq!((at1.numerator(), at1.denominator()), (1, 4));
        assert!(p.eval(&[0]).unwrap().is_zero());

        // classical embedding |x1 x2| / 2
        let c = NonclassicalPoly::new(2, 2, vec![(vec![1, 1], 0, 1)]).unwrap();
        let v = c.eval(&[1, 1]).unwrap();
        assert_eq!((v.numerator(), v.denominator()), (1, 2));
    }

    #[test]
    fn derivative_table_of_depth_one_monomial() {
        let p = half_quarter();
        let d = p.derivative_table(&[1]).unwrap();
        // x = 0: P(1) - P(0) = 1/4; x = 1: P(0) - P(1) = 3/4
        assert_eq!(d.value(0), TorusValue::new(1, 2, 2).unwrap());
        assert_eq!(d.value(1), TorusValue::new(3, 2, 2).unwrap());

        let zero_dir = p.derivative_table(&[0]).unwrap();
        assert!(zero_dir.is_identically_zero());
    }

    #[test]
    fn classical_linear_has_constant_derivative() {
        let f = crate::poly::parse("x1", 3, 1, false).unwrap();
        let p = NonclassicalPoly::from_classical(&f).unwrap();
        for y in 1..3u64 {
            let d = p.torus_table().unwrap().derivative(y);
            let v0 = d.value(0);
            for x in 0..3u64 {
                assert_eq!(d.value(x), v0);
            }
        }
    }

    #[test]
    fn degree_check_depth_one() {
        let p = half_quarter();
        // degree formula: 1 + 1*(2-1) = 2
        assert_eq!(p.degree(), 2);
        let fail = degree_check(&p, 1).unwrap();
        assert!(!fail.holds);
        let (dirs, x) = fail.witness.unwrap();
        // re-verify the witness independently
        let v = iterated_derivative_at(&p, &dirs, &x).unwrap();
        assert!(!v.is_zero());
        let pass = degree_check(&p, 2).unwrap();
        assert!(pass.holds);
    }

    #[test]
    fn degree_check_classical_quadratic() {
        let f = crate::poly::parse("x1*x2", 2, 2, false).unwrap();
        let p = NonclassicalPoly::from_classical(&f).unwrap();
        assert!(degree_check(&p, 2).unwrap().holds);
        assert!(!degree_check(&p, 1).unwrap().holds);
    }

    #[test]
    fn depth_degree_constraint() {
        // any nonzero coefficient at depth k forces degree >= k(q-1)+1
        for q in [2u8, 3] {
            for k in 0..=MAX_DEPTH {
                let p = NonclassicalPoly::new(q, 1, vec![(vec![1], k, 1)]).unwrap();
                assert!(p.degree() > k as u32 * (q as u32 - 1));
            }
        }
    }

    #[test]
    fn depth_zero_matches_classical_evaluation() {
        let f = crate::poly::parse("x1*x2 + x1", 3, 2, false).unwrap();
        let p = NonclassicalPoly::from_classical(&f).unwrap();
        assert_eq!(p.depth(), 0);
        for idx in 0..9u64 {
            let x = decode_point(idx, 3, 2);
            let v = p.eval(&x).unwrap();
            let classical = TorusValue::classical(f.evaluate(&x).unwrap(), 3).unwrap();
            assert_eq!(v, classical);
        }
    }

    #[test]
    fn derivative_drops_degree_exhaustively() {
        // every direction: if P has degree d then D_y P passes the (d-1) check
        let cases = vec![
            NonclassicalPoly::new(2, 2, vec![(vec![1, 1], 0, 1), (vec![1, 0], 1, 1)]).unwrap(),
            NonclassicalPoly::new(3, 1, vec![(vec![2], 0, 2), (vec![1], 1, 1)]).unwrap(),
        ];
        for p in cases {
            let d = p.degree();
            assert!(degree_check(&p, d).unwrap().holds);
            let table = p.torus_table().unwrap();
            for y in 0..table.len() {
                let dt = table.derivative(y);
                let check = degree_check_table(&dt, d.saturating_sub(1)).unwrap();
                assert!(check.holds, "direction {y} violated the degree drop");
            }
        }
    }

    #[test]
    fn sampled_mode_reports_itself() {
        let p = half_quarter();
        let r = degree_check_sampled(&p, 2, 50, 9).unwrap();
        assert!(r.holds);
        assert_eq!(r.mode, CheckMode::Sampled { samples: 50, seed: 9 });
        let r2 = degree_check_sampled(&p, 1, 200, 9).unwrap();
        assert!(!r2.holds);
    }

    #[test]
    fn parse_print_round_trip() {
        let p = NonclassicalPoly::new(
            2,
            2,
            vec![(vec![1, 0], 1, 1), (vec![1, 1], 0, 1)],
        )
        .unwrap();
        let text = p.print();
        let back = NonclassicalPoly::parse(&text, 2, 2).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn construction_guards() {
        // shift-like constant term rejected
        assert!(NonclassicalPoly::new(2, 1, vec![(vec![0], 0, 1)]).is_err());
        // depth above the cap rejected
        assert!(NonclassicalPoly::new(2, 1, vec![(vec![1], 3, 1)]).is_err());
        // exponent not below q rejected
        assert!(NonclassicalPoly::new(2, 1, vec![(vec![2], 0, 1)]).is_err());
    }
}
