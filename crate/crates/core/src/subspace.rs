//! Constant-subspace extraction and subspaces inside iterated sum-difference
//! sets, with certificates re-verified by enumeration.

use std::collections::HashSet;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf::PrimeField;
use crate::poly::{AffineSubspace, Poly};
use crate::table::{add_index, decode_point, domain_size, encode_point};

/// Point sets live on domains up to this size.
pub const POINTSET_CAP: u128 = 1 << 24;
/// Sumset computations cap the domain here.
pub const SUMSET_CAP: u128 = 1 << 20;
/// Subspace enumeration budget for exhaustive search.
const ENUMERATION_CAP: u128 = 1 << 22;
/// Candidate sweep bound for the greedy search.
const GREEDY_SWEEP_CAP: u64 = 4096;

/// Membership bitmap over F_q^n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    q: u8,
    n: usize,
    words: Vec<u64>,
}

impl PointSet {
    pub fn empty(q: u8, n: usize) -> Result<Self> {
        PrimeField::new(q)?;
        let size = domain_size(q, n);
        if size > POINTSET_CAP {
            return Err(Error::CapExceeded {
                size,
                cap: POINTSET_CAP,
            });
        }
        Ok(PointSet {
            q,
            n,
            words: vec![0u64; (size as u64).div_ceil(64) as usize],
        })
    }

    pub fn from_indices(q: u8, n: usize, indices: &[u64]) -> Result<Self> {
        let mut s = PointSet::empty(q, n)?;
        for &i in indices {
            s.insert(i);
        }
        Ok(s)
    }

    pub fn from_points(q: u8, n: usize, points: &[Vec<u8>]) -> Result<Self> {
        let idx: Vec<u64> = points.iter().map(|p| encode_point(p, q)).collect();
        PointSet::from_indices(q, n, &idx)
    }

    /// The n unit vectors of F_q^n.
    pub fn unit_vectors(q: u8, n: usize) -> Result<Self> {
        let pts: Vec<Vec<u8>> = (0..n)
            .map(|i| {
                let mut e = vec![0u8; n];
                e[i] = 1;
                e
            })
            .collect();
        PointSet::from_points(q, n, &pts)
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> u64 {
        (self.q as u64).pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn insert(&mut self, idx: u64) {
        self.words[(idx / 64) as usize] |= 1 << (idx % 64);
    }

    pub fn contains(&self, idx: u64) -> bool {
        self.words[(idx / 64) as usize] >> (idx % 64) & 1 == 1
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn density(&self) -> f64 {
        self.count() as f64 / self.len() as f64
    }

    pub fn support(&self) -> Vec<u64> {
        (0..self.len()).filter(|&i| self.contains(i)).collect()
    }

    /// Pointwise negation {-a : a in A}.
    pub fn negate(&self) -> PointSet {
        if self.q == 2 {
            return self.clone();
        }
        let field = PrimeField::new(self.q).unwrap();
        let mut out = PointSet::empty(self.q, self.n).unwrap();
        for i in self.support() {
            let p = decode_point(i, self.q, self.n);
            let neg: Vec<u8> = p.iter().map(|&x| field.neg(x)).collect();
            out.insert(encode_point(&neg, self.q));
        }
        out
    }

    /// Hex serialization: `q=<q> n=<n>` header plus the bitmap bytes in
    /// little-endian bit order.
    pub fn to_text(&self) -> String {
        let nbytes = (self.len() as usize).div_ceil(8);
        let mut hex = String::with_capacity(nbytes * 2);
        for byte_idx in 0..nbytes {
            let word = self.words[byte_idx / 8];
            let byte = (word >> ((byte_idx % 8) * 8)) as u8;
            hex.push_str(&format!("{byte:02x}"));
        }
        format!("q={} n={}\n{}\n", self.q, self.n, hex)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (header, body) = crate::poly::split_header(text);
        let Some(header) = header else {
            return Err(Error::Parse {
                pos: 0,
                msg: "point set files need a 'q=<q> n=<n>' header".into(),
            });
        };
        let (q, n) = crate::poly::parse_header(header)?;
        let mut s = PointSet::empty(q, n)?;
        let hex: String = body.chars().filter(|c| !c.is_whitespace()).collect();
        let expected = (s.len() as usize).div_ceil(8);
        if hex.len() != expected * 2 {
            return Err(Error::Parse {
                pos: 0,
                msg: format!(
                    "bitmap has {} hex digits, expected {}",
                    hex.len(),
                    expected * 2
                ),
            });
        }
        for (byte_idx, chunk) in hex.as_bytes().chunks(2).enumerate() {
            let s2 = std::str::from_utf8(chunk).unwrap();
            let byte = u8::from_str_radix(s2, 16).map_err(|_| Error::Parse {
                pos: byte_idx,
                msg: format!("bad hex byte '{s2}'"),
            })?;
            s.words[byte_idx / 8] |= (byte as u64) << ((byte_idx % 8) * 8);
        }
        Ok(s)
    }
}

// ---------------------------------------------------------------------------
// sumsets

fn wht_inplace(v: &mut [i64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                let a = v[j];
                let b = v[j + h];
                v[j] = a + b;
                v[j + h] = a - b;
            }
            i += 2 * h;
        }
        h *= 2;
    }
}

/// Support of the XOR-convolution of two indicator sets over F_2^n.
fn xor_sumset(a: &PointSet, b: &PointSet) -> PointSet {
    let len = a.len() as usize;
    let mut va: Vec<i64> = (0..len as u64).map(|i| a.contains(i) as i64).collect();
    let mut vb: Vec<i64> = (0..len as u64).map(|i| b.contains(i) as i64).collect();
    wht_inplace(&mut va);
    wht_inplace(&mut vb);
    for (x, y) in va.iter_mut().zip(&vb) {
        *x *= y;
    }
    wht_inplace(&mut va);
    let mut out = PointSet::empty(2, a.n).unwrap();
    for (i, &c) in va.iter().enumerate() {
        debug_assert!(c % len as i64 == 0);
        if c > 0 {
            out.insert(i as u64);
        }
    }
    out
}

/// Naive set addition for small general-q domains.
fn naive_sumset(a: &PointSet, b: &PointSet) -> Result<PointSet> {
    let sa = a.support();
    let sb = b.support();
    let cost = sa.len() as u128 * sb.len() as u128;
    if cost > 1 << 26 {
        return Err(Error::BudgetInfeasible(format!(
            "naive sumset would touch {cost} pairs"
        )));
    }
    let mut out = PointSet::empty(a.q, a.n)?;
    for &u in &sa {
        for &v in &sb {
            out.insert(add_index(u, v, a.q, a.n));
        }
    }
    Ok(out)
}

fn set_add(a: &PointSet, b: &PointSet) -> Result<PointSet> {
    if a.q == 2 {
        Ok(xor_sumset(a, b))
    } else {
        naive_sumset(a, b)
    }
}

/// Exact membership bitmap of kA - kA.
pub fn sumset(a: &PointSet, k: u32) -> Result<PointSet> {
    if k == 0 || k > 4 {
        return Err(Error::Invalid("sumset order k must be in 1..=4".into()));
    }
    let size = domain_size(a.q, a.n);
    if size > SUMSET_CAP {
        return Err(Error::CapExceeded {
            size,
            cap: SUMSET_CAP,
        });
    }
    if a.is_empty() {
        return PointSet::empty(a.q, a.n);
    }
    let mut acc = a.clone();
    for _ in 1..k {
        acc = set_add(&acc, a)?;
    }
    let neg = acc.negate();
    set_add(&acc, &neg)
}

// ---------------------------------------------------------------------------
// certificates

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertClaim {
    ConstantValue,
    SumsetMembership,
}

/// A subspace claim checked point by point.
#[derive(Clone, Debug)]
pub struct SubspaceCertificate {
    pub subspace: AffineSubspace,
    pub claim: CertClaim,
    pub verified: bool,
    pub checked_points: u64,
    /// The constant value, for constant-value claims that verified.
    pub value: Option<u8>,
    /// Two points with differing values when verification failed.
    pub witness: Option<(Vec<u8>, Vec<u8>)>,
}

impl SubspaceCertificate {
    pub fn dim(&self) -> usize {
        self.subspace.dim()
    }

    /// Wire form with the fixed key set.
    pub fn doc(&self) -> SubspaceCertificateDoc {
        SubspaceCertificateDoc {
            offset: self.subspace.offset().to_vec(),
            basis: self.subspace.basis().to_vec(),
            dim: self.subspace.dim(),
            claim: self.claim,
            value: self.value,
            verified: self.verified,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SubspaceCertificateDoc {
    pub offset: Vec<u8>,
    pub basis: Vec<Vec<u8>>,
    pub dim: usize,
    pub claim: CertClaim,
    pub value: Option<u8>,
    pub verified: bool,
}

/// Check that f is constant on the subspace by enumerating all of its
/// points through the subspace's own point walk.
pub fn verify_constant(f: &Poly, v: &AffineSubspace) -> Result<SubspaceCertificate> {
    if v.q() != f.q() || v.n() != f.n() {
        return Err(Error::Invalid("subspace and polynomial domains differ".into()));
    }
    let size = (v.q() as u128).pow(v.dim() as u32);
    if size > SUMSET_CAP {
        return Err(Error::CapExceeded {
            size,
            cap: SUMSET_CAP,
        });
    }
    let points = v.points();
    let mut value = None;
    let mut first_point: Option<Vec<u8>> = None;
    let mut witness = None;
    let mut checked = 0u64;
    for p in &points {
        let val = f.evaluate(p)?;
        checked += 1;
        match value {
            None => {
                value = Some(val);
                first_point = Some(p.clone());
            }
            Some(seen) if seen != val => {
                witness = Some((first_point.clone().unwrap(), p.clone()));
                break;
            }
            Some(_) => {}
        }
    }
    let verified = witness.is_none();
    Ok(SubspaceCertificate {
        subspace: v.clone(),
        claim: CertClaim::ConstantValue,
        verified,
        checked_points: checked,
        value: if verified { value } else { None },
        witness,
    })
}

// ---------------------------------------------------------------------------
// canonical subspace enumeration

/// Visit the canonical echelon bases of the m-dimensional linear subspaces
/// of F_q^n: pivot columns ascending, each row 1 at its pivot, 0 under other
/// pivots, free entries enumerated in odometer order.
fn visit_linear_subspaces(
    q: u8,
    n: usize,
    m: usize,
    visit: &mut impl FnMut(&[Vec<u8>]) -> bool,
) -> bool {
    if m == 0 {
        return visit(&[]);
    }
    if m > n {
        return false;
    }
    let mut pivots: Vec<usize> = (0..m).collect();
    loop {
        // free slots: (row, column) pairs right of the pivot, not pivots
        let mut slots: Vec<(usize, usize)> = Vec::new();
        for (i, &p) in pivots.iter().enumerate() {
            for c in p + 1..n {
                if !pivots.contains(&c) {
                    slots.push((i, c));
                }
            }
        }
        let total = (q as u128).pow(slots.len() as u32);
        let mut assign = vec![0u8; slots.len()];
        for step in 0..total {
            if step > 0 {
                let mut i = 0;
                loop {
                    assign[i] += 1;
                    if assign[i] == q {
                        assign[i] = 0;
                        i += 1;
                    } else {
                        break;
                    }
                }
            }
            let mut basis = vec![vec![0u8; n]; m];
            for (i, &p) in pivots.iter().enumerate() {
                basis[i][p] = 1;
            }
            for (k, &(i, c)) in slots.iter().enumerate() {
                basis[i][c] = assign[k];
            }
            if visit(&basis) {
                return true;
            }
        }
        // next pivot combination in lexicographic order
        let mut i = m;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if pivots[i] != i + n - m {
                break;
            }
            if i == 0 {
                return false;
            }
        }
        pivots[i] += 1;
        for j in i + 1..m {
            pivots[j] = pivots[j - 1] + 1;
        }
    }
}

/// Count of enumeration steps for the exhaustive affine scan, used as a
/// feasibility guard.
fn affine_enumeration_cost(q: u8, n: usize, m: usize) -> u128 {
    // crude overcount: pivot sets * q^(free slots) * offsets * points
    let mut binom: u128 = 1;
    for i in 0..m {
        binom = binom * (n - i) as u128 / (i + 1) as u128;
    }
    let free_max = m as u128 * (n - m) as u128;
    let qq = q as u128;
    binom
        .saturating_mul(qq.saturating_pow(free_max.min(64) as u32))
        .saturating_mul(qq.pow((n - m) as u32))
        .saturating_mul(qq.pow(m as u32))
}

/// Exhaustive scan for an affine subspace of exactly `target_dim` on which
/// f is constant, in canonical enumeration order. `None` is a certificate
/// of nonexistence at that dimension.
pub fn constant_subspace_exhaustive(
    f: &Poly,
    target_dim: usize,
) -> Result<Option<SubspaceCertificate>> {
    let q = f.q();
    let n = f.n();
    if target_dim > n {
        return Ok(None);
    }
    if affine_enumeration_cost(q, n, target_dim) > ENUMERATION_CAP {
        return Err(Error::BudgetInfeasible(format!(
            "exhaustive scan at dimension {target_dim} over q={q}, n={n}"
        )));
    }
    let table = f.table()?;
    let mut found: Option<(Vec<u8>, Vec<Vec<u8>>)> = None;
    visit_linear_subspaces(q, n, target_dim, &mut |basis| {
        let pivots: Vec<usize> = basis
            .iter()
            .map(|row| row.iter().position(|&x| x == 1).unwrap())
            .collect();
        // canonical coset offsets: zero at every pivot column
        let free_cols: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        let offsets = (q as u64).pow(free_cols.len() as u32);
        let mut offs = vec![0u8; free_cols.len()];
        for step in 0..offsets {
            if step > 0 {
                let mut i = 0;
                loop {
                    offs[i] += 1;
                    if offs[i] == q {
                        offs[i] = 0;
                        i += 1;
                    } else {
                        break;
                    }
                }
            }
            let mut offset = vec![0u8; n];
            for (k, &c) in free_cols.iter().enumerate() {
                offset[c] = offs[k];
            }
            if subspace_is_constant(&table, q, n, &offset, basis) {
                found = Some((offset, basis.to_vec()));
                return true;
            }
        }
        false
    });
    match found {
        None => Ok(None),
        Some((offset, basis)) => {
            let v = AffineSubspace::new(q, n, offset, basis)?;
            let cert = verify_constant(f, &v)?;
            debug_assert!(cert.verified);
            Ok(Some(cert))
        }
    }
}

/// The largest dimension at which the exhaustive scan succeeds, with its
/// certificate. Dimension 0 always succeeds.
pub fn constant_subspace_optimum(f: &Poly) -> Result<SubspaceCertificate> {
    for m in (0..=f.n()).rev() {
        if let Some(cert) = constant_subspace_exhaustive(f, m)? {
            return Ok(cert);
        }
    }
    unreachable!("dimension zero always verifies")
}

fn subspace_is_constant(
    table: &crate::table::FnTable,
    q: u8,
    n: usize,
    offset: &[u8],
    basis: &[Vec<u8>],
) -> bool {
    let offset_idx = encode_point(offset, q);
    let want = table.value(offset_idx);
    let basis_idx: Vec<u64> = basis.iter().map(|b| encode_point(b, q)).collect();
    let dim = basis.len();
    let total = (q as u64).pow(dim as u32);
    let mut coords = vec![0u8; dim];
    let mut idx = offset_idx;
    for step in 1..total {
        // odometer walk updating the point index incrementally
        let mut i = 0;
        loop {
            coords[i] += 1;
            idx = add_index(idx, basis_idx[i], q, n);
            if coords[i] == q {
                coords[i] = 0;
                i += 1;
            } else {
                break;
            }
        }
        let _ = step;
        if table.value(idx) != want {
            return false;
        }
    }
    true
}

/// Greedy constant-subspace search: per round, pick a start point, sweep
/// candidate directions in a seeded deterministic order, and keep each
/// direction that leaves f constant on the enlarged span (checked by
/// enumerating the new cosets). Returns the best verified certificate over
/// all rounds; the dimension is a lower-bound witness with no optimality
/// claim. Domains up to 4096 points get a full sweep, which makes the
/// result maximal under inclusion for that round's order.
pub fn constant_subspace_greedy(f: &Poly, rounds: u32, seed: u64) -> Result<SubspaceCertificate> {
    let q = f.q();
    let n = f.n();
    let table = f.table()?;
    let len = table.len();
    let field = f.field();
    let mut best: Option<(u64, Vec<u64>)> = None;
    for round in 0..rounds.max(1) {
        let mut rng = crate::rng::substream(seed, round as u64);
        let offset_idx = if round == 0 {
            0
        } else {
            rng.gen_range(0..len)
        };
        let want = table.value(offset_idx);
        let candidates: Vec<u64> = if len <= GREEDY_SWEEP_CAP {
            let mut all: Vec<u64> = (1..len).collect();
            // Fisher-Yates with the round's stream
            for i in (1..all.len()).rev() {
                let j = rng.gen_range(0..=i);
                all.swap(i, j);
            }
            all
        } else {
            (0..GREEDY_SWEEP_CAP).map(|_| rng.gen_range(1..len)).collect()
        };
        let mut basis_idx: Vec<u64> = Vec::new();
        let mut points: Vec<u64> = vec![offset_idx];
        let mut member: HashSet<u64> = points.iter().copied().collect();
        for v in candidates {
            // v already in the span iff offset + v is a known point
            if member.contains(&add_index(offset_idx, v, q, n)) {
                continue;
            }
            let mut additions: Vec<u64> = Vec::with_capacity(points.len() * (q as usize - 1));
            let mut ok = true;
            'scales: for c in 1..q {
                let cv = scale_index(v, c, q, n, &field);
                for &p in &points {
                    let np = add_index(p, cv, q, n);
                    if table.value(np) != want {
                        ok = false;
                        break 'scales;
                    }
                    additions.push(np);
                }
            }
            if ok {
                basis_idx.push(v);
                for &np in &additions {
                    member.insert(np);
                }
                points.extend(additions);
            }
        }
        let better = match &best {
            None => true,
            Some((_, b)) => basis_idx.len() > b.len(),
        };
        if better {
            best = Some((offset_idx, basis_idx));
        }
    }
    let (offset_idx, basis_idx) = best.expect("at least one round runs");
    let offset = decode_point(offset_idx, q, n);
    let basis: Vec<Vec<u8>> = basis_idx.iter().map(|&b| decode_point(b, q, n)).collect();
    let v = AffineSubspace::new(q, n, offset, basis)?;
    let cert = verify_constant(f, &v)?;
    debug_assert!(cert.verified);
    Ok(cert)
}

fn scale_index(v: u64, c: u8, q: u8, n: usize, field: &PrimeField) -> u64 {
    if c == 1 {
        return v;
    }
    let p = decode_point(v, q, n);
    let scaled: Vec<u8> = p.iter().map(|&x| field.mul(x, c)).collect();
    encode_point(&scaled, q)
}

/// Best coset shift: maximizes the exact bias of f restricted to v + h over
/// canonical coset representatives. The maximum is at least bias(f) by
/// averaging.
pub fn best_shift(f: &Poly, v: &AffineSubspace) -> Result<(Vec<u8>, f64)> {
    let q = f.q();
    let n = f.n();
    let size = domain_size(q, n);
    if size > SUMSET_CAP {
        return Err(Error::CapExceeded {
            size,
            cap: SUMSET_CAP,
        });
    }
    let table = f.table()?;
    let len = size as u64;
    let basis_idx: Vec<u64> = v.basis().iter().map(|b| encode_point(b, q)).collect();
    let offset_idx = encode_point(v.offset(), q);
    let mut seen = vec![false; len as usize];
    let mut best: Option<(u64, f64)> = None;
    for h in 0..len {
        if seen[h as usize] {
            continue;
        }
        // enumerate the coset v + h, marking its members
        let dim = basis_idx.len();
        let total = (q as u64).pow(dim as u32);
        let mut hist = vec![0u64; q as usize];
        let start = add_index(offset_idx, h, q, n);
        let mut coords = vec![0u8; dim];
        let mut idx = start;
        for step in 0..total {
            if step > 0 {
                let mut i = 0;
                loop {
                    coords[i] += 1;
                    idx = add_index(idx, basis_idx[i], q, n);
                    if coords[i] == q {
                        coords[i] = 0;
                        i += 1;
                    } else {
                        break;
                    }
                }
            }
            seen[idx as usize] = true;
            hist[table.value(idx) as usize] += 1;
        }
        let bias = {
            use num_complex::Complex64;
            let sum: Complex64 = hist
                .iter()
                .enumerate()
                .map(|(val, &cnt)| crate::gf::chi(val as u8, q) * cnt as f64)
                .sum();
            sum.norm() / total as f64
        };
        let better = match best {
            None => true,
            Some((_, b)) => bias > b,
        };
        if better {
            best = Some((h, bias));
        }
    }
    let (h, bias) = best.expect("at least one coset");
    Ok((decode_point(h, q, n), bias))
}

// ---------------------------------------------------------------------------
// subspaces inside sumsets

/// Search for a linear subspace of dimension at least min_dim contained in
/// sumset(A, k). Family order: coordinate subspaces, then seeded random
/// bases drawn from the sumset, then exhaustive canonical enumeration when
/// n <= 5. Largest dimensions first. A `None` is search-budget-relative
/// except when the exhaustive stage ran.
pub fn subspace_in_sumset(
    a: &PointSet,
    k: u32,
    min_dim: usize,
    seed: u64,
) -> Result<Option<SubspaceCertificate>> {
    let s = sumset(a, k)?;
    let q = a.q();
    let n = a.n();
    let support = s.support();
    for m in (min_dim..=n).rev() {
        // stage 1: coordinate subspaces
        if binomial(n, m) <= 1 << 12 {
            let mut found: Option<Vec<Vec<u8>>> = None;
            visit_subsets(n, m, &mut |cols| {
                let basis: Vec<Vec<u8>> = cols
                    .iter()
                    .map(|&c| {
                        let mut e = vec![0u8; n];
                        e[c] = 1;
                        e
                    })
                    .collect();
                if span_inside(&s, &basis) {
                    found = Some(basis);
                    return true;
                }
                false
            });
            if let Some(basis) = found {
                return certify_sumset_subspace(&s, basis).map(Some);
            }
        }
        // stage 2: seeded random bases from the sumset support
        if support.len() >= m && m >= 1 {
            let mut rng = crate::rng::substream(seed, m as u64);
            let field = PrimeField::new(q)?;
            for _ in 0..64 {
                let mut picks: Vec<u64> = Vec::with_capacity(m);
                for _ in 0..m {
                    picks.push(support[rng.gen_range(0..support.len())]);
                }
                let basis: Vec<Vec<u8>> = picks.iter().map(|&i| decode_point(i, q, n)).collect();
                if !crate::linalg::independent(&basis, &field) {
                    continue;
                }
                if span_inside(&s, &basis) {
                    return certify_sumset_subspace(&s, basis).map(Some);
                }
            }
        }
        // stage 3: exhaustive canonical enumeration on small n
        if n <= 5 {
            let mut found: Option<Vec<Vec<u8>>> = None;
            visit_linear_subspaces(q, n, m, &mut |basis| {
                if span_inside(&s, basis) {
                    found = Some(basis.to_vec());
                    return true;
                }
                false
            });
            if let Some(basis) = found {
                return certify_sumset_subspace(&s, basis).map(Some);
            }
        }
    }
    Ok(None)
}

fn binomial(n: usize, m: usize) -> u128 {
    if m > n {
        return 0;
    }
    let mut out: u128 = 1;
    for i in 0..m {
        out = out * (n - i) as u128 / (i + 1) as u128;
    }
    out
}

fn visit_subsets(n: usize, m: usize, visit: &mut impl FnMut(&[usize]) -> bool) {
    fn rec(
        n: usize,
        m: usize,
        start: usize,
        cur: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]) -> bool,
    ) -> bool {
        if cur.len() == m {
            return visit(cur);
        }
        for c in start..n {
            cur.push(c);
            if rec(n, m, c + 1, cur, visit) {
                return true;
            }
            cur.pop();
        }
        false
    }
    let mut cur = Vec::with_capacity(m);
    let _ = rec(n, m, 0, &mut cur, visit);
}

fn span_inside(s: &PointSet, basis: &[Vec<u8>]) -> bool {
    let q = s.q();
    let n = s.n();
    let basis_idx: Vec<u64> = basis.iter().map(|b| encode_point(b, q)).collect();
    let dim = basis.len();
    let total = (q as u64).pow(dim as u32);
    let mut coords = vec![0u8; dim];
    let mut idx = 0u64;
    for step in 0..total {
        if step > 0 {
            let mut i = 0;
            loop {
                coords[i] += 1;
                idx = add_index(idx, basis_idx[i], q, n);
                if coords[i] == q {
                    coords[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
        if !s.contains(idx) {
            return false;
        }
    }
    true
}

fn certify_sumset_subspace(s: &PointSet, basis: Vec<Vec<u8>>) -> Result<SubspaceCertificate> {
    let q = s.q();
    let n = s.n();
    let v = AffineSubspace::new(q, n, vec![0; n], basis)?;
    // independent re-verification through the subspace's own point walk
    let mut checked = 0u64;
    let mut verified = true;
    for p in v.points() {
        checked += 1;
        if !s.contains(encode_point(&p, q)) {
            verified = false;
            break;
        }
    }
    Ok(SubspaceCertificate {
        subspace: v,
        claim: CertClaim::SumsetMembership,
        verified,
        checked_points: checked,
        value: None,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse;

    fn p(text: &str, q: u8, n: usize) -> Poly {
        parse(text, q, n, false).unwrap()
    }

    #[test]
    fn verify_constant_examples() {
        let f = p("x1*x2*x3*x4*x5", 2, 5);
        let v = AffineSubspace::coordinate_hyperplane(2, 5, 1, 0).unwrap();
        let cert = verify_constant(&f, &v).unwrap();
        assert!(cert.verified);
        assert_eq!(cert.value, Some(0));
        assert_eq!(cert.checked_points, 16);

        let point = AffineSubspace::single_point(2, 5, vec![1, 1, 1, 1, 1]).unwrap();
        let cert = verify_constant(&f, &point).unwrap();
        assert!(cert.verified);
        assert_eq!(cert.value, Some(1));

        let x1 = p("x1", 2, 2);
        let full = AffineSubspace::full_space(2, 2);
        let cert = verify_constant(&x1, &full).unwrap();
        assert!(!cert.verified);
        let (a, b) = cert.witness.unwrap();
        assert_ne!(x1.evaluate(&a).unwrap(), x1.evaluate(&b).unwrap());
    }

    #[test]
    fn exhaustive_examples() {
        let zero = Poly::zero(2, 3);
        let cert = constant_subspace_exhaustive(&zero, 3).unwrap().unwrap();
        assert_eq!(cert.dim(), 3);

        let and = p("x1*x2", 2, 2);
        let cert = constant_subspace_exhaustive(&and, 1).unwrap().unwrap();
        assert!(cert.verified);
        assert_eq!(cert.dim(), 1);

        // nonconstant on the full space: no 2-dimensional witness exists
        let x1 = p("x1", 2, 2);
        assert!(constant_subspace_exhaustive(&x1, 2).unwrap().is_none());
    }

    #[test]
    fn exhaustive_enumerates_all_affine_lines() {
        // F_2^2 has 6 affine lines; count them through the enumerator
        let mut lines = 0;
        visit_linear_subspaces(2, 2, 1, &mut |basis| {
            let pivots: Vec<usize> = basis
                .iter()
                .map(|row| row.iter().position(|&x| x == 1).unwrap())
                .collect();
            let free = 2 - pivots.len();
            lines += 2u32.pow(free as u32);
            false
        });
        assert_eq!(lines, 6);
    }

    #[test]
    fn greedy_finds_large_kill_plane() {
        let f = p("x1*x2*x3*x4*x5", 2, 10);
        let cert = constant_subspace_greedy(&f, 2, 7).unwrap();
        assert!(cert.verified);
        assert!(cert.dim() >= 9, "got dimension {}", cert.dim());
    }

    #[test]
    fn greedy_on_constants_reaches_full_dimension() {
        let c = Poly::constant(3, 4, 2);
        let cert = constant_subspace_greedy(&c, 1, 0).unwrap();
        assert_eq!(cert.dim(), 4);
        assert_eq!(cert.value, Some(2));
    }

    #[test]
    fn greedy_never_beats_exhaustive() {
        for seed in 0..12u64 {
            let f = crate::poly::random_poly(2, 4, 3, seed).unwrap();
            let greedy = constant_subspace_greedy(&f, 3, seed).unwrap();
            let opt = constant_subspace_optimum(&f).unwrap();
            assert!(greedy.dim() <= opt.dim(), "seed {seed}");
            assert!(greedy.verified && opt.verified);
        }
        // odd characteristic
        for seed in 0..6u64 {
            let f = crate::poly::random_poly(3, 3, 2, seed).unwrap();
            let greedy = constant_subspace_greedy(&f, 3, seed).unwrap();
            let opt = constant_subspace_optimum(&f).unwrap();
            assert!(greedy.dim() <= opt.dim(), "q=3 seed {seed}");
            assert!(greedy.verified && opt.verified);
        }
    }

    #[test]
    fn best_shift_examples() {
        let f = p("x1*x2", 2, 2);
        let full = AffineSubspace::full_space(2, 2);
        let (h, b) = best_shift(&f, &full).unwrap();
        assert_eq!(h, vec![0, 0]);
        assert!((b - 0.5).abs() < 1e-12);

        // restricted to lines in direction e1, the coset with x2 = 1 has
        // values x1, bias 0; the coset x2 = 0 is constant zero, bias 1
        let line = AffineSubspace::new(2, 2, vec![0, 0], vec![vec![1, 0]]).unwrap();
        let (_, b) = best_shift(&f, &line).unwrap();
        assert!((b - 1.0).abs() < 1e-12);

        // max over cosets is at least the global bias
        for seed in 0..8u64 {
            let f = crate::poly::random_poly(2, 4, 2, seed).unwrap();
            let v = AffineSubspace::new(2, 4, vec![0; 4], vec![vec![1, 0, 1, 0], vec![0, 1, 0, 0]])
                .unwrap();
            let (_, b) = best_shift(&f, &v).unwrap();
            let global = crate::analysis::bias(&f).unwrap().value;
            assert!(b >= global - 1e-9);
        }
    }

    #[test]
    fn sumset_basics() {
        // {0} is fixed by every k
        let zero = PointSet::from_indices(2, 3, &[0]).unwrap();
        for k in 1..=4 {
            let s = sumset(&zero, k).unwrap();
            assert_eq!(s.support(), vec![0]);
        }

        // a subspace is closed under plus and minus
        let sub = PointSet::from_indices(2, 3, &[0, 1, 2, 3]).unwrap();
        for k in 1..=3 {
            assert_eq!(sumset(&sub, k).unwrap(), sub);
        }

        // A - A for A = {0, e1}
        let a = PointSet::from_points(2, 3, &[vec![0, 0, 0], vec![1, 0, 0]]).unwrap();
        let s = sumset(&a, 1).unwrap();
        assert_eq!(s.support(), vec![0, 1]);
    }

    #[test]
    fn sumset_of_unit_vectors_is_even_weight_space() {
        let a = PointSet::unit_vectors(2, 4).unwrap();
        let s = sumset(&a, 2).unwrap();
        let mut expect = Vec::new();
        for i in 0..16u64 {
            if (i.count_ones()) % 2 == 0 {
                expect.push(i);
            }
        }
        assert_eq!(s.support(), expect);
    }

    #[test]
    fn sumset_monotone_with_zero() {
        for seed in 0..6u64 {
            let mut rng = crate::rng::seeded(seed);
            let mut idx: Vec<u64> = (0..5).map(|_| rng.gen_range(0..32)).collect();
            idx.push(0);
            let a = PointSet::from_indices(2, 5, &idx).unwrap();
            let mut prev = sumset(&a, 1).unwrap();
            for k in 2..=4 {
                let next = sumset(&a, k).unwrap();
                for i in prev.support() {
                    assert!(next.contains(i), "seed {seed} k {k}");
                }
                prev = next;
            }
        }
    }

    #[test]
    fn sumset_general_q() {
        let field = PrimeField::new(3).unwrap();
        let a = PointSet::from_points(3, 2, &[vec![1, 0], vec![0, 1]]).unwrap();
        let s = sumset(&a, 1).unwrap();
        // A - A = {0, e1-e2, e2-e1}
        let mut expect: Vec<u64> = vec![0];
        expect.push(encode_point(&[1, field.neg(1)], 3));
        expect.push(encode_point(&[field.neg(1), 1], 3));
        expect.sort();
        assert_eq!(s.support(), expect);
    }

    #[test]
    fn subspace_in_sumset_unit_vectors() {
        let a = PointSet::unit_vectors(2, 4).unwrap();
        let cert = subspace_in_sumset(&a, 2, 3, 1).unwrap().unwrap();
        assert!(cert.verified);
        assert_eq!(cert.dim(), 3);
        assert_eq!(cert.claim, CertClaim::SumsetMembership);
    }

    #[test]
    fn subspace_in_sumset_small_cases() {
        // full space and k = 1
        let full = PointSet::from_indices(2, 2, &[0, 1, 2, 3]).unwrap();
        let cert = subspace_in_sumset(&full, 1, 2, 0).unwrap().unwrap();
        assert_eq!(cert.dim(), 2);

        // A = {0, e1}: A - A = {0, e1} contains span{e1}
        let a = PointSet::from_points(2, 3, &[vec![0, 0, 0], vec![1, 0, 0]]).unwrap();
        let cert = subspace_in_sumset(&a, 1, 1, 0).unwrap().unwrap();
        assert_eq!(cert.dim(), 1);
        assert_eq!(cert.subspace.basis()[0], vec![1, 0, 0]);
    }

    #[test]
    fn pointset_text_round_trip() {
        let a = PointSet::from_indices(2, 4, &[0, 3, 7, 15]).unwrap();
        let text = a.to_text();
        let b = PointSet::from_text(&text).unwrap();
        assert_eq!(a, b);

        let c = PointSet::from_indices(3, 2, &[0, 4, 8]).unwrap();
        assert_eq!(PointSet::from_text(&c.to_text()).unwrap(), c);
    }
}
