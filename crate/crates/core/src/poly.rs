//! Reduced classical multivariate polynomials over F_q, affine maps, and
//! affine subspaces.
//!
//! A `Poly` stores a map from exponent vectors to nonzero coefficients.
//! Every per-variable exponent is kept below q (x^q and x define the same
//! function on F_q), so equality of functions is equality of term maps.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::gf::PrimeField;
use crate::linalg;
use crate::table::{domain_size, FnTable, TABLE_CAP};

/// Reduce an exponent modulo the relation x^q = x. Zero stays zero; for
/// e >= 1 the exponent is congruent mod q-1 in the range 1..=q-1.
#[inline]
fn reduce_exp(e: u32, q: u8) -> u8 {
    if e == 0 {
        0
    } else {
        ((e - 1) % (q as u32 - 1) + 1) as u8
    }
}

/// A reduced polynomial function F_q^n -> F_q.
pub struct Poly {
    q: u8,
    n: usize,
    terms: BTreeMap<Vec<u8>, u8>,
    cache: OnceLock<Arc<FnTable>>,
}

impl Clone for Poly {
    fn clone(&self) -> Self {
        let cache = OnceLock::new();
        if let Some(t) = self.cache.get() {
            let _ = cache.set(Arc::clone(t));
        }
        Poly {
            q: self.q,
            n: self.n,
            terms: self.terms.clone(),
            cache,
        }
    }
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q && self.n == other.n && self.terms == other.terms
    }
}

impl Eq for Poly {}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly(q={}, n={}, {})", self.q, self.n, self)
    }
}

impl Poly {
    pub fn zero(q: u8, n: usize) -> Self {
        Poly {
            q,
            n,
            terms: BTreeMap::new(),
            cache: OnceLock::new(),
        }
    }

    pub fn constant(q: u8, n: usize, c: u8) -> Self {
        let mut p = Poly::zero(q, n);
        if !c.is_multiple_of(q) {
            p.terms.insert(vec![0; n], c % q);
        }
        p
    }

    /// The variable x_{index} (1-based).
    pub fn variable(q: u8, n: usize, index: usize) -> Result<Self> {
        if index == 0 || index > n {
            return Err(Error::Invalid(format!(
                "variable index {index} out of range 1..={n}"
            )));
        }
        let mut exps = vec![0u8; n];
        exps[index - 1] = 1;
        Poly::from_terms(q, n, vec![(exps, 1)])
    }

    /// Build from (exponent vector, coefficient) pairs. Exponents are
    /// reduced, coefficients taken mod q, and zero terms dropped.
    pub fn from_terms(q: u8, n: usize, terms: Vec<(Vec<u8>, u8)>) -> Result<Self> {
        PrimeField::new(q)?;
        let mut map: BTreeMap<Vec<u8>, u8> = BTreeMap::new();
        for (exps, c) in terms {
            if exps.len() != n {
                return Err(Error::ArityMismatch {
                    expected: n,
                    got: exps.len(),
                });
            }
            let reduced: Vec<u8> = exps.iter().map(|&e| reduce_exp(e as u32, q)).collect();
            let entry = map.entry(reduced).or_insert(0);
            *entry = ((*entry as u16 + c as u16) % q as u16) as u8;
        }
        map.retain(|_, &mut c| c != 0);
        Ok(Poly {
            q,
            n,
            terms: map,
            cache: OnceLock::new(),
        })
    }

    #[inline]
    pub fn q(&self) -> u8 {
        self.q
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> PrimeField {
        PrimeField::new(self.q).expect("validated at construction")
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, u8)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exps: &[u8]) -> u8 {
        self.terms.get(exps).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&d| d == 0))
    }

    /// Constant value if the polynomial is constant.
    pub fn constant_value(&self) -> Option<u8> {
        if self.is_constant() {
            Some(self.coeff(&vec![0; self.n]))
        } else {
            None
        }
    }

    /// Total degree; `None` is the degree of the zero polynomial and
    /// compares below every `Some` value, so budget checks of the form
    /// `deg(Q) <= d - 1` hold vacuously for zero remainders.
    pub fn degree(&self) -> Option<u32> {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&d| d as u32).sum())
            .max()
    }

    /// Terms of total degree exactly d.
    pub fn homogeneous_part(&self, d: u32) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e.iter().map(|&x| x as u32).sum::<u32>() == d)
            .map(|(e, &c)| (e.clone(), c))
            .collect();
        Poly {
            q: self.q,
            n: self.n,
            terms,
            cache: OnceLock::new(),
        }
    }

    pub fn evaluate(&self, x: &[u8]) -> Result<u8> {
        if x.len() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let field = self.field();
        let mut acc = 0u8;
        for (exps, &c) in &self.terms {
            let mut t = c;
            for (&xi, &e) in x.iter().zip(exps.iter()) {
                if e > 0 {
                    t = field.mul(t, field.pow(xi, e as u32));
                }
            }
            acc = field.add(acc, t);
        }
        Ok(acc)
    }

    fn check_compatible(&self, other: &Poly) -> Result<()> {
        if self.q != other.q {
            return Err(Error::FieldMismatch(self.q, other.q));
        }
        if self.n != other.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Poly) -> Result<Poly> {
        self.check_compatible(other)?;
        let q = self.q as u16;
        let mut terms = self.terms.clone();
        for (e, &c) in &other.terms {
            let entry = terms.entry(e.clone()).or_insert(0);
            *entry = ((*entry as u16 + c as u16) % q) as u8;
        }
        terms.retain(|_, &mut c| c != 0);
        Ok(Poly {
            q: self.q,
            n: self.n,
            terms,
            cache: OnceLock::new(),
        })
    }

    pub fn sub(&self, other: &Poly) -> Result<Poly> {
        self.add(&other.scale(self.field().neg(1)))
    }

    pub fn scale(&self, c: u8) -> Poly {
        let field = self.field();
        let c = c % self.q;
        let mut terms = BTreeMap::new();
        if c != 0 {
            for (e, &a) in &self.terms {
                terms.insert(e.clone(), field.mul(a, c));
            }
        }
        Poly {
            q: self.q,
            n: self.n,
            terms,
            cache: OnceLock::new(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Result<Poly> {
        self.check_compatible(other)?;
        let field = self.field();
        let mut terms: BTreeMap<Vec<u8>, u8> = BTreeMap::new();
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let exps: Vec<u8> = ea
                    .iter()
                    .zip(eb.iter())
                    .map(|(&a, &b)| reduce_exp(a as u32 + b as u32, self.q))
                    .collect();
                let c = field.mul(ca, cb);
                let entry = terms.entry(exps).or_insert(0);
                *entry = field.add(*entry, c);
            }
        }
        terms.retain(|_, &mut c| c != 0);
        Ok(Poly {
            q: self.q,
            n: self.n,
            terms,
            cache: OnceLock::new(),
        })
    }

    pub fn pow(&self, e: u32) -> Result<Poly> {
        let mut acc = Poly::constant(self.q, self.n, 1);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Substitute variables: result(x) = self(m(x)).
    pub fn substitute(&self, m: &AffineMap) -> Result<Poly> {
        if m.n_out != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: m.n_out,
            });
        }
        if m.q != self.q {
            return Err(Error::FieldMismatch(self.q, m.q));
        }
        // linear polynomial for each output coordinate of m
        let images: Vec<Poly> = (0..self.n)
            .map(|j| {
                let mut terms: Vec<(Vec<u8>, u8)> = Vec::new();
                for k in 0..m.n_in {
                    if m.matrix[j][k] != 0 {
                        let mut e = vec![0u8; m.n_in];
                        e[k] = 1;
                        terms.push((e, m.matrix[j][k]));
                    }
                }
                if m.offset[j] != 0 {
                    terms.push((vec![0u8; m.n_in], m.offset[j]));
                }
                Poly::from_terms(self.q, m.n_in, terms)
            })
            .collect::<Result<_>>()?;

        // memoized powers of each image, up to the exponent actually used
        let mut powers: Vec<Vec<Poly>> = images
            .iter()
            .map(|p| vec![Poly::constant(self.q, m.n_in, 1), p.clone()])
            .collect();
        let mut out = Poly::zero(self.q, m.n_in);
        for (exps, &c) in &self.terms {
            let mut term = Poly::constant(self.q, m.n_in, c);
            for (j, &e) in exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[j].len() <= e as usize {
                    let next = powers[j].last().unwrap().mul(&images[j])?;
                    powers[j].push(next);
                }
                term = term.mul(&powers[j][e as usize])?;
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Restriction to an affine subspace, as a polynomial in dim(v)
    /// variables: result(c) = self(offset + sum c_i basis_i).
    pub fn restrict(&self, v: &AffineSubspace) -> Result<Poly> {
        self.substitute(&v.to_map())
    }

    /// Dense value table, built lazily and shared. Errors when q^n exceeds
    /// the table cap.
    pub fn table(&self) -> Result<Arc<FnTable>> {
        if let Some(t) = self.cache.get() {
            return Ok(Arc::clone(t));
        }
        let size = domain_size(self.q, self.n);
        if size > TABLE_CAP as u128 {
            return Err(Error::CapExceeded {
                size,
                cap: TABLE_CAP as u128,
            });
        }
        let len = size as u64;
        let field = self.field();
        // per-term incremental evaluation over the odometer walk
        let mut vals = vec![0u8; len as usize];
        let mut point = vec![0u8; self.n];
        for idx in 0..len {
            if idx > 0 {
                let mut i = 0;
                loop {
                    point[i] += 1;
                    if point[i] == self.q {
                        point[i] = 0;
                        i += 1;
                    } else {
                        break;
                    }
                }
            }
            let mut acc = 0u8;
            for (exps, &c) in &self.terms {
                let mut t = c;
                for (&xi, &e) in point.iter().zip(exps.iter()) {
                    if e > 0 {
                        t = field.mul(t, field.pow(xi, e as u32));
                        if t == 0 {
                            break;
                        }
                    }
                }
                acc = field.add(acc, t);
            }
            vals[idx as usize] = acc;
        }
        let table = Arc::new(FnTable::from_values(self.q, self.n, vals)?);
        let _ = self.cache.set(Arc::clone(&table));
        Ok(table)
    }

    /// Canonical text form; `parse` inverts it.
    pub fn print(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (exps, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let is_const = exps.iter().all(|&e| e == 0);
            if is_const {
                write!(f, "{c}")?;
                continue;
            }
            let mut lead = true;
            if *c != 1 {
                write!(f, "{c}")?;
                lead = false;
            }
            for (i, &e) in exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !lead {
                    write!(f, "*")?;
                }
                lead = false;
                if e == 1 {
                    write!(f, "x{}", i + 1)?;
                } else {
                    write!(f, "x{}^{}", i + 1, e)?;
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// parsing

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Self {
        Scanner {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn number(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected a number"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse::<u64>()
            .map_err(|_| self.err("number too large"))
    }
}

/// Parse the polynomial grammar:
/// expression := term ('+' term)*; term := coeff? ('*'? var)*;
/// var := 'x' index ('^' power)?; whitespace ignored.
///
/// Coefficients `>= q` are rejected unless `auto_reduce` is set.
pub fn parse(text: &str, q: u8, n: usize, auto_reduce: bool) -> Result<Poly> {
    PrimeField::new(q)?;
    let mut sc = Scanner::new(text);
    let mut terms: Vec<(Vec<u8>, u8)> = Vec::new();
    if sc.peek().is_none() {
        return Err(sc.err("empty polynomial"));
    }
    loop {
        // one term
        let mut coeff: u64 = 1;
        let mut exps_raw = vec![0u32; n];
        let mut saw_anything = false;
        if let Some(b) = sc.peek() {
            if b.is_ascii_digit() {
                coeff = sc.number()?;
                if coeff >= q as u64 && !auto_reduce {
                    return Err(sc.err(format!(
                        "coefficient {coeff} is not reduced mod q={q} (pass the reduce flag to allow)"
                    )));
                }
                saw_anything = true;
            }
        }
        loop {
            match sc.peek() {
                Some(b'*') => {
                    sc.bump();
                }
                Some(b'x') => {}
                _ => break,
            }
            match sc.peek() {
                Some(b'x') => {
                    sc.bump();
                    let idx = sc.number()?;
                    if idx == 0 || idx > n as u64 {
                        return Err(sc.err(format!("variable index {idx} out of range 1..={n}")));
                    }
                    let mut power: u64 = 1;
                    if sc.peek() == Some(b'^') {
                        sc.bump();
                        power = sc.number()?;
                    }
                    exps_raw[(idx - 1) as usize] =
                        exps_raw[(idx - 1) as usize].saturating_add(power.min(u32::MAX as u64) as u32);
                    saw_anything = true;
                }
                _ => return Err(sc.err("expected a variable after '*'")),
            }
        }
        if !saw_anything {
            return Err(sc.err("empty term"));
        }
        let exps: Vec<u8> = exps_raw.iter().map(|&e| reduce_exp(e, q)).collect();
        terms.push((exps, (coeff % q as u64) as u8));
        match sc.peek() {
            None => break,
            Some(b'+') => {
                sc.bump();
            }
            Some(c) => return Err(sc.err(format!("unexpected character '{}'", c as char))),
        }
    }
    Poly::from_terms(q, n, terms)
}

/// Parse a polynomial file: an optional first line `q=<q> n=<n>` followed by
/// the polynomial text. Explicit overrides win over the header.
pub fn parse_poly_file(
    text: &str,
    q_override: Option<u8>,
    n_override: Option<usize>,
    auto_reduce: bool,
) -> Result<Poly> {
    let (header, body) = split_header(text);
    let (hq, hn) = match header {
        Some(h) => {
            let (q, n) = parse_header(h)?;
            (Some(q), Some(n))
        }
        None => (None, None),
    };
    let q = q_override.or(hq).ok_or_else(|| {
        Error::Invalid("no modulus given: pass q explicitly or add a 'q=.. n=..' header".into())
    })?;
    let n = n_override.or(hn).ok_or_else(|| {
        Error::Invalid("no arity given: pass n explicitly or add a 'q=.. n=..' header".into())
    })?;
    parse(body.trim(), q, n, auto_reduce)
}

/// Split an optional `q=.. n=..` first line from a structured text file.
pub fn split_header(text: &str) -> (Option<&str>, &str) {
    let trimmed = text.trim_start();
    if trimmed.starts_with("q=") {
        match trimmed.split_once('\n') {
            Some((h, rest)) => (Some(h.trim()), rest),
            None => (Some(trimmed.trim()), ""),
        }
    } else {
        (None, text)
    }
}

/// Parse a `q=<q> n=<n>` header line.
pub fn parse_header(line: &str) -> Result<(u8, usize)> {
    let mut q = None;
    let mut n = None;
    for part in line.split_whitespace() {
        if let Some(v) = part.strip_prefix("q=") {
            q = Some(v.parse::<u8>().map_err(|_| Error::Parse {
                pos: 0,
                msg: format!("bad q in header: {v}"),
            })?);
        } else if let Some(v) = part.strip_prefix("n=") {
            n = Some(v.parse::<usize>().map_err(|_| Error::Parse {
                pos: 0,
                msg: format!("bad n in header: {v}"),
            })?);
        }
    }
    match (q, n) {
        (Some(q), Some(n)) => Ok((q, n)),
        _ => Err(Error::Parse {
            pos: 0,
            msg: format!("header must contain q=<q> n=<n>, got: {line}"),
        }),
    }
}

// ---------------------------------------------------------------------------
// affine maps and subspaces

/// An affine map F_q^{n_in} -> F_q^{n_out}: x -> M x + b.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    q: u8,
    n_in: usize,
    n_out: usize,
    matrix: Vec<Vec<u8>>, // n_out rows, n_in columns
    offset: Vec<u8>,
    invertible: Option<bool>,
}

impl AffineMap {
    pub fn new(q: u8, matrix: Vec<Vec<u8>>, offset: Vec<u8>) -> Result<Self> {
        let field = PrimeField::new(q)?;
        let n_out = matrix.len();
        if offset.len() != n_out {
            return Err(Error::ArityMismatch {
                expected: n_out,
                got: offset.len(),
            });
        }
        let n_in = matrix.first().map_or(0, |r| r.len());
        for row in &matrix {
            if row.len() != n_in {
                return Err(Error::Invalid("ragged affine matrix".into()));
            }
        }
        let matrix: Vec<Vec<u8>> = matrix
            .into_iter()
            .map(|r| r.into_iter().map(|x| x % q).collect())
            .collect();
        let offset: Vec<u8> = offset.into_iter().map(|x| x % q).collect();
        let invertible = if n_in == n_out {
            Some(linalg::rank(&matrix, &field) == n_in)
        } else {
            None
        };
        Ok(AffineMap {
            q,
            n_in,
            n_out,
            matrix,
            offset,
            invertible,
        })
    }

    pub fn identity(q: u8, n: usize) -> Self {
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| u8::from(i == j)).collect())
            .collect();
        AffineMap::new(q, matrix, vec![0; n]).expect("identity is well formed")
    }

    /// Pure translation x -> x + y.
    pub fn translation(q: u8, y: &[u8]) -> Result<Self> {
        let n = y.len();
        let mut m = AffineMap::identity(q, n);
        m.offset = y.iter().map(|&v| v % q).collect();
        Ok(m)
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn matrix(&self) -> &[Vec<u8>] {
        &self.matrix
    }

    pub fn offset(&self) -> &[u8] {
        &self.offset
    }

    pub fn is_invertible(&self) -> Option<bool> {
        self.invertible
    }

    pub fn apply(&self, x: &[u8]) -> Result<Vec<u8>> {
        if x.len() != self.n_in {
            return Err(Error::ArityMismatch {
                expected: self.n_in,
                got: x.len(),
            });
        }
        let field = PrimeField::new(self.q)?;
        Ok((0..self.n_out)
            .map(|j| {
                let mut acc = self.offset[j];
                for (k, &xk) in x.iter().enumerate() {
                    acc = field.add(acc, field.mul(self.matrix[j][k], xk));
                }
                acc
            })
            .collect())
    }

    /// Inverse map, defined for square full-rank maps.
    pub fn inverse(&self) -> Result<AffineMap> {
        if self.invertible != Some(true) {
            return Err(Error::Invalid("affine map is not invertible".into()));
        }
        let field = PrimeField::new(self.q)?;
        let minv = linalg::invert(&self.matrix, &field)
            .ok_or_else(|| Error::Invalid("affine map is not invertible".into()))?;
        // x = M y + b  =>  y = M^-1 x - M^-1 b
        let neg_off: Vec<u8> = (0..self.n_out)
            .map(|j| {
                let mut acc = 0u8;
                for k in 0..self.n_out {
                    acc = field.add(acc, field.mul(minv[j][k], self.offset[k]));
                }
                field.neg(acc)
            })
            .collect();
        AffineMap::new(self.q, minv, neg_off)
    }
}

/// Substitute an affine map into a polynomial: result(x) = f(m(x)).
pub fn affine_substitute(f: &Poly, m: &AffineMap) -> Result<Poly> {
    f.substitute(m)
}

/// An affine subspace offset + span(basis) of F_q^n with a verified
/// independent basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSubspace {
    q: u8,
    n: usize,
    offset: Vec<u8>,
    basis: Vec<Vec<u8>>,
}

impl AffineSubspace {
    pub fn new(q: u8, n: usize, offset: Vec<u8>, basis: Vec<Vec<u8>>) -> Result<Self> {
        let field = PrimeField::new(q)?;
        if offset.len() != n {
            return Err(Error::ArityMismatch {
                expected: n,
                got: offset.len(),
            });
        }
        for b in &basis {
            if b.len() != n {
                return Err(Error::ArityMismatch {
                    expected: n,
                    got: b.len(),
                });
            }
        }
        let offset: Vec<u8> = offset.into_iter().map(|x| x % q).collect();
        let basis: Vec<Vec<u8>> = basis
            .into_iter()
            .map(|b| b.into_iter().map(|x| x % q).collect())
            .collect();
        if !linalg::independent(&basis, &field) {
            return Err(Error::Invalid("subspace basis is not independent".into()));
        }
        Ok(AffineSubspace {
            q,
            n,
            offset,
            basis,
        })
    }

    pub fn full_space(q: u8, n: usize) -> Self {
        let basis = (0..n)
            .map(|i| {
                let mut e = vec![0u8; n];
                e[i] = 1;
                e
            })
            .collect();
        AffineSubspace::new(q, n, vec![0; n], basis).expect("standard basis")
    }

    pub fn single_point(q: u8, n: usize, point: Vec<u8>) -> Result<Self> {
        AffineSubspace::new(q, n, point, Vec::new())
    }

    /// The coordinate hyperplane {x_var = value} (var is 1-based).
    pub fn coordinate_hyperplane(q: u8, n: usize, var: usize, value: u8) -> Result<Self> {
        if var == 0 || var > n {
            return Err(Error::Invalid(format!(
                "variable index {var} out of range 1..={n}"
            )));
        }
        let mut w = vec![0u8; n];
        w[var - 1] = 1;
        AffineSubspace::hyperplane(q, &w, value)
    }

    /// The hyperplane {x : <w, x> = a}, with the canonical coordinatization
    /// used throughout: basis = echelon kernel basis of w, offset = a * b
    /// where b is the first coordinate vector with <w, b> = 1 scaled to hit a.
    pub fn hyperplane(q: u8, w: &[u8], a: u8) -> Result<Self> {
        let field = PrimeField::new(q)?;
        let n = w.len();
        let Some(pivot) = (0..n).find(|&j| !w[j].is_multiple_of(q)) else {
            return Err(Error::Invalid("hyperplane normal must be nonzero".into()));
        };
        let basis = linalg::kernel_of_functional(w, &field);
        let mut offset = vec![0u8; n];
        offset[pivot] = field.mul(a, field.inv(w[pivot]));
        AffineSubspace::new(q, n, offset, basis)
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn offset(&self) -> &[u8] {
        &self.offset
    }

    pub fn basis(&self) -> &[Vec<u8>] {
        &self.basis
    }

    /// Number of points, q^dim.
    pub fn size(&self) -> u64 {
        (self.q as u64).pow(self.dim() as u32)
    }

    /// The map F_q^dim -> F_q^n sending coordinates to points.
    pub fn to_map(&self) -> AffineMap {
        let matrix: Vec<Vec<u8>> = (0..self.n)
            .map(|j| self.basis.iter().map(|b| b[j]).collect())
            .collect();
        AffineMap::new(self.q, matrix, self.offset.clone()).expect("validated basis")
    }

    /// All points, in odometer order over the coordinates.
    pub fn points(&self) -> Vec<Vec<u8>> {
        let field = PrimeField::new(self.q).unwrap();
        let dim = self.dim();
        let total = self.size();
        let mut out = Vec::with_capacity(total as usize);
        let mut coords = vec![0u8; dim];
        for i in 0..total {
            if i > 0 {
                let mut j = 0;
                loop {
                    coords[j] += 1;
                    if coords[j] == self.q {
                        coords[j] = 0;
                        j += 1;
                    } else {
                        break;
                    }
                }
            }
            let mut p = self.offset.clone();
            for (c, b) in coords.iter().zip(&self.basis) {
                if *c != 0 {
                    for (pj, bj) in p.iter_mut().zip(b) {
                        *pj = field.add(*pj, field.mul(*c, *bj));
                    }
                }
            }
            out.push(p);
        }
        out
    }

    pub fn contains(&self, x: &[u8]) -> Result<bool> {
        if x.len() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let field = PrimeField::new(self.q)?;
        // solve offset + B c = x for c
        let a: Vec<Vec<u8>> = (0..self.n)
            .map(|j| self.basis.iter().map(|b| b[j]).collect())
            .collect();
        let rhs: Vec<u8> = x
            .iter()
            .zip(&self.offset)
            .map(|(&xi, &oi)| field.sub(xi, oi))
            .collect();
        Ok(linalg::solve(&a, &rhs, &field).is_some())
    }
}

// ---------------------------------------------------------------------------
// generators

/// All exponent vectors over n variables with entries < q and total degree
/// at most d, in lexicographic order (last variable fastest).
pub fn monomials_up_to(q: u8, n: usize, d: u32) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; n];
    fn rec(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, i: usize, remaining: u32, q: u8) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        let max_e = remaining.min(q as u32 - 1);
        for e in 0..=max_e {
            cur[i] = e as u8;
            rec(out, cur, i + 1, remaining - e, q);
        }
        cur[i] = 0;
    }
    rec(&mut out, &mut cur, 0, d, q);
    out
}

/// Uniform polynomial of degree <= d: every reduced monomial of total degree
/// at most d receives an independent uniform coefficient. Deterministic in
/// the seed.
pub fn random_poly(q: u8, n: usize, d: u32, seed: u64) -> Result<Poly> {
    use rand::Rng;
    PrimeField::new(q)?;
    let max_d = n as u32 * (q as u32 - 1);
    if d > max_d {
        return Err(Error::Invalid(format!(
            "degree {d} exceeds the maximum reduced degree {max_d} for q={q}, n={n}"
        )));
    }
    let mut rng = crate::rng::seeded(seed);
    let terms: Vec<(Vec<u8>, u8)> = monomials_up_to(q, n, d)
        .into_iter()
        .map(|e| {
            let c = rng.gen_range(0..q);
            (e, c)
        })
        .collect();
    Poly::from_terms(q, n, terms)
}

/// Like `random_poly` but with total degree exactly d (the top coefficient
/// drawn from 1..q for one fixed monomial). Handy for harnesses that need
/// degree-exact instances.
pub fn random_poly_exact_degree(q: u8, n: usize, d: u32, seed: u64) -> Result<Poly> {
    use rand::Rng;
    let p = random_poly(q, n, d, seed)?;
    if p.degree() == Some(d) {
        return Ok(p);
    }
    let mut rng = crate::rng::substream(seed, 0x9e37);
    let monos: Vec<Vec<u8>> = monomials_up_to(q, n, d)
        .into_iter()
        .filter(|e| e.iter().map(|&x| x as u32).sum::<u32>() == d)
        .collect();
    let pick = monos[rng.gen_range(0..monos.len())].clone();
    let c = rng.gen_range(1..q);
    let top = Poly::from_terms(q, n, vec![(pick, c)])?;
    p.add(&top)
}

/// The elementary symmetric polynomial of degree 4 over F_2:
/// the sum of x_i x_j x_k x_l over i < j < k < l.
pub fn s4_generator(n: usize) -> Result<Poly> {
    if n < 4 {
        return Err(Error::Invalid("s4 needs at least 4 variables".into()));
    }
    let mut terms = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    let mut e = vec![0u8; n];
                    e[i] = 1;
                    e[j] = 1;
                    e[k] = 1;
                    e[l] = 1;
                    terms.push((e, 1u8));
                }
            }
        }
    }
    Poly::from_terms(2, n, terms)
}
