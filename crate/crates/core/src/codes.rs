//! Orthogonal space-time block codes.
//!
//! A code maps `n_s` complex symbols onto a `τ_d × n_t` codeword
//! `X = Σ_n (Re(s_n) A_n + i Im(s_n) B_n)`. The catalog holds the scalar code,
//! Alamouti, a rate-3/4 four-port design and two rate-1/2 codes stacked from
//! generalized real orthogonal designs.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::linalg::{
    complex_gaussian_vec, identity, max_abs, max_abs_diff, matrix_to_text, CMat, SparseMat, C64,
    I, ZERO,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CodeId {
    C1,
    C2,
    C4,
    C8,
    C12,
}

impl CodeId {
    pub const ALL: [CodeId; 5] = [CodeId::C1, CodeId::C2, CodeId::C4, CodeId::C8, CodeId::C12];

    /// `(n_t, τ_d, n_s)`.
    pub fn dims(self) -> (usize, usize, usize) {
        match self {
            CodeId::C1 => (1, 1, 1),
            CodeId::C2 => (2, 2, 2),
            CodeId::C4 => (4, 4, 3),
            CodeId::C8 => (8, 16, 8),
            CodeId::C12 => (12, 128, 64),
        }
    }

    pub fn n_t(self) -> usize {
        self.dims().0
    }

    pub fn label(self) -> &'static str {
        match self {
            CodeId::C1 => "1",
            CodeId::C2 => "2",
            CodeId::C4 => "4",
            CodeId::C8 => "8",
            CodeId::C12 => "12",
        }
    }
}

impl fmt::Display for CodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let t = t.strip_prefix(['C', 'c']).unwrap_or(t);
        match t {
            "1" => Ok(CodeId::C1),
            "2" => Ok(CodeId::C2),
            "4" => Ok(CodeId::C4),
            "8" => Ok(CodeId::C8),
            "12" => Ok(CodeId::C12),
            _ => Err(Error::invalid(format!("unknown code `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OstbcCode {
    pub id: CodeId,
    pub n_t: usize,
    pub tau_d: usize,
    pub n_s: usize,
    pub a: Vec<CMat>,
    pub b: Vec<CMat>,
    pub(crate) a_sparse: Vec<SparseMat>,
    pub(crate) b_sparse: Vec<SparseMat>,
    /// Rows of `A_n` (and `B_n`) that carry entries.
    /// `g` with `Σ_k (A_k A_k^H + B_k B_k^H) = g I`, when that holds.
    pub(crate) gram_scale: Option<f64>,
    pub(crate) kernel: QuadKernel,
}

/// One coefficient of a fixed linear map from an `n_t × n_t` matrix to a
/// `τ_d × τ_d` matrix: `out[r, r2] += coef · in[j, j2]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MapTerm {
    pub r: u32,
    pub r2: u32,
    pub j: u32,
    pub j2: u32,
    pub coef: C64,
}

/// Precomputed sparse forms of `S ↦ Σ_k (A_k S A_k^H + B_k S B_k^H)` and
/// `T ↦ Σ_k (A_k T A_k^T − B_k T B_k^T)`, with the row pairs each symbol's
/// quadratic forms can touch.
#[derive(Debug, Clone, Default)]
pub(crate) struct QuadKernel {
    pub gram: Vec<MapTerm>,
    pub pseudo: Vec<MapTerm>,
    pub a_gram_pairs: Vec<Vec<(usize, usize)>>,
    pub b_gram_pairs: Vec<Vec<(usize, usize)>>,
    pub a_pseudo_pairs: Vec<Vec<(usize, usize)>>,
    pub b_pseudo_pairs: Vec<Vec<(usize, usize)>>,
}

impl QuadKernel {
    fn build(a: &[SparseMat], b: &[SparseMat], a_rows: &[Vec<usize>], b_rows: &[Vec<usize>]) -> Self {
        use std::collections::BTreeMap;
        let mut gram: BTreeMap<(u32, u32, u32, u32), C64> = BTreeMap::new();
        let mut pseudo: BTreeMap<(u32, u32, u32, u32), C64> = BTreeMap::new();
        for (sign, list) in [(1.0, a), (-1.0, b)] {
            for sp in list {
                for &(r, j, v) in &sp.entries {
                    for &(r2, j2, v2) in &sp.entries {
                        let key = (r as u32, r2 as u32, j as u32, j2 as u32);
                        *gram.entry(key).or_insert(ZERO) += v * v2.conj();
                        *pseudo.entry(key).or_insert(ZERO) += v * v2 * sign;
                    }
                }
            }
        }
        let collect = |m: BTreeMap<(u32, u32, u32, u32), C64>| -> Vec<MapTerm> {
            m.into_iter()
                .filter(|(_, c)| c.norm() > 1e-14)
                .map(|((r, r2, j, j2), coef)| MapTerm { r, r2, j, j2, coef })
                .collect()
        };
        let gram = collect(gram);
        let pseudo = collect(pseudo);
        let pattern = |terms: &[MapTerm]| -> std::collections::HashSet<(usize, usize)> {
            terms.iter().map(|t| (t.r as usize, t.r2 as usize)).collect()
        };
        let (gp, pp) = (pattern(&gram), pattern(&pseudo));
        let pairs = |rows: &[Vec<usize>], pat: &std::collections::HashSet<(usize, usize)>| -> Vec<Vec<(usize, usize)>> {
            rows.iter()
                .map(|rs| {
                    rs.iter()
                        .flat_map(|&r| rs.iter().map(move |&r2| (r, r2)))
                        .filter(|p| pat.contains(p))
                        .collect()
                })
                .collect()
        };
        QuadKernel {
            a_gram_pairs: pairs(a_rows, &gp),
            b_gram_pairs: pairs(b_rows, &gp),
            a_pseudo_pairs: pairs(a_rows, &pp),
            b_pseudo_pairs: pairs(b_rows, &pp),
            gram,
            pseudo,
        }
    }
}

impl OstbcCode {
    /// Assembles a code from its matrix pairs and checks the shapes.
    pub fn from_matrices(id: CodeId, a: Vec<CMat>, b: Vec<CMat>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::dims("matching non-empty A/B lists", format!("{} and {}", a.len(), b.len())));
        }
        let (tau_d, n_t) = a[0].shape();
        for m in a.iter().chain(b.iter()) {
            if m.shape() != (tau_d, n_t) {
                return Err(Error::dims(format!("{tau_d}x{n_t}"), format!("{}x{}", m.nrows(), m.ncols())));
            }
        }
        let a_sparse: Vec<SparseMat> = a.iter().map(SparseMat::from_dense).collect();
        let b_sparse: Vec<SparseMat> = b.iter().map(SparseMat::from_dense).collect();
        let a_rows: Vec<Vec<usize>> = a_sparse.iter().map(SparseMat::row_support).collect();
        let b_rows: Vec<Vec<usize>> = b_sparse.iter().map(SparseMat::row_support).collect();
        let kernel = QuadKernel::build(&a_sparse, &b_sparse, &a_rows, &b_rows);
        let mut gram = CMat::zeros(tau_d, tau_d);
        for m in a.iter().chain(b.iter()) {
            gram += m * m.adjoint();
        }
        let g = gram[(0, 0)].re;
        let gram_scale = (max_abs_diff(&gram, &identity(tau_d).scale(g)) < 1e-10).then_some(g);
        Ok(OstbcCode {
            id,
            n_t,
            tau_d,
            n_s: a.len(),
            a,
            b,
            a_sparse,
            b_sparse,
            gram_scale,
            kernel,
        })
    }

    /// `(n_s, τ_d)` as an unreduced fraction.
    pub fn code_rate_ratio(&self) -> (usize, usize) {
        (self.n_s, self.tau_d)
    }

    pub fn code_rate(&self) -> f64 {
        self.n_s as f64 / self.tau_d as f64
    }

    /// Per-symbol energy that makes `E[tr(X^H X)] = τ_d`.
    pub fn symbol_energy(&self) -> f64 {
        self.tau_d as f64 / (self.n_s * self.n_t) as f64
    }

    pub fn is_square(&self) -> bool {
        self.tau_d == self.n_t
    }

    pub fn encode(&self, s: &[C64]) -> Result<CMat> {
        if s.len() != self.n_s {
            return Err(Error::dims(self.n_s, s.len()));
        }
        let mut x = CMat::zeros(self.tau_d, self.n_t);
        for (n, sym) in s.iter().enumerate() {
            for &(r, c, v) in &self.a_sparse[n].entries {
                x[(r, c)] += v * sym.re;
            }
            for &(r, c, v) in &self.b_sparse[n].entries {
                x[(r, c)] += v * I * sym.im;
            }
        }
        Ok(x)
    }

    /// Text dump of all `A_n`/`B_n` matrices.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# code {} n_t={} tau_d={} n_s={}\n",
            self.id, self.n_t, self.tau_d, self.n_s
        );
        for (n, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            out.push_str(&format!("A {}\n", n + 1));
            out.push_str(&matrix_to_text(a));
            out.push_str(&format!("B {}\n", n + 1));
            out.push_str(&matrix_to_text(b));
        }
        out
    }
}

/// Builds a code from a codeword map that is linear over the reals.
fn from_codeword_fn(id: CodeId, f: impl Fn(&[C64]) -> CMat) -> Result<OstbcCode> {
    let (_, _, n_s) = id.dims();
    let unit = |n: usize, z: C64| {
        let mut s = vec![ZERO; n_s];
        s[n] = z;
        s
    };
    let a = (0..n_s).map(|n| f(&unit(n, C64::new(1.0, 0.0)))).collect();
    let b = (0..n_s).map(|n| f(&unit(n, I)) * (-I)).collect();
    OstbcCode::from_matrices(id, a, b)
}

pub fn make_code(id: CodeId) -> OstbcCode {
    let built = match id {
        CodeId::C1 => from_codeword_fn(id, |s| CMat::from_element(1, 1, s[0])),
        CodeId::C2 => from_codeword_fn(id, |s| {
            CMat::from_row_slice(2, 2, &[s[0], s[1], -s[1].conj(), s[0].conj()])
        }),
        CodeId::C4 => from_codeword_fn(id, |s| {
            let (s1, s2, s3) = (s[0], s[1], s[2]);
            CMat::from_row_slice(
                4,
                4,
                &[
                    s1, s2, s3, ZERO,
                    -s2.conj(), s1.conj(), ZERO, s3,
                    -s3.conj(), ZERO, s1.conj(), -s2,
                    ZERO, -s3.conj(), s2.conj(), s1,
                ],
            )
        }),
        CodeId::C8 => stacked_design_code(id, 8, 8),
        CodeId::C12 => stacked_design_code(id, 64, 12),
    };
    built.expect("catalog codes are well formed")
}

pub fn make_all_codes() -> Vec<OstbcCode> {
    CodeId::ALL.iter().map(|&id| make_code(id)).collect()
}

/// Rate-1/2 code `X = [G(s); G(s*)] / √2` from a `p × n` real orthogonal design.
fn stacked_design_code(id: CodeId, p: usize, n: usize) -> Result<OstbcCode> {
    let family = hurwitz_radon_family(p)?;
    if family.len() + 1 < n {
        return Err(Error::invalid(format!("p = {p} supports at most {} columns", family.len() + 1)));
    }
    let mut gens = vec![DMatrix::<f64>::identity(p, p)];
    gens.extend(family.into_iter().take(n - 1));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut a = Vec::with_capacity(p);
    let mut b = Vec::with_capacity(p);
    for k in 0..p {
        // Column j of the design is G_j x, so the coefficient of x_k at (r, j) is G_j[r, k].
        let coef = |r: usize, j: usize| gens[j][(r, k)];
        a.push(CMat::from_fn(2 * p, n, |r, j| C64::new(coef(r % p, j) * h, 0.0)));
        b.push(CMat::from_fn(2 * p, n, |r, j| {
            let sign = if r < p { 1.0 } else { -1.0 };
            C64::new(sign * coef(r % p, j) * h, 0.0)
        }));
    }
    OstbcCode::from_matrices(id, a, b)
}

/// Hurwitz–Radon number `ρ(p)` for a power of two `p`.
pub fn hurwitz_radon_number(p: usize) -> Result<usize> {
    if p == 0 || !p.is_power_of_two() || p > 64 {
        return Err(Error::invalid(format!("p must be a power of two in 1..=64, got {p}")));
    }
    let e = p.trailing_zeros() as usize;
    let (a, b) = (e / 4, e % 4);
    Ok(8 * a + (1 << b))
}

// Letters of the Kronecker words: I, R = [[0,1],[-1,0]], P = [[0,1],[1,0]], Q = [[1,0],[0,-1]].
const LETTER_I: u8 = 0;
const LETTER_R: u8 = 1;

fn letter_matrix(l: u8) -> DMatrix<f64> {
    match l {
        0 => DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
        1 => DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
        2 => DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        _ => DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
    }
}

fn anticommute(u: &[u8], v: &[u8]) -> bool {
    let clashes = u
        .iter()
        .zip(v)
        .filter(|(&x, &y)| x != LETTER_I && y != LETTER_I && x != y)
        .count();
    clashes % 2 == 1
}

fn search_words(pool: &[Vec<u8>], need: usize, start: usize, chosen: &mut Vec<usize>) -> bool {
    if chosen.len() == need {
        return true;
    }
    for i in start..pool.len() {
        if chosen.iter().all(|&j| anticommute(&pool[i], &pool[j])) {
            chosen.push(i);
            if search_words(pool, need, i + 1, chosen) {
                return true;
            }
            chosen.pop();
        }
    }
    false
}

/// Anti-symmetric, pairwise anticommuting real orthogonal `p × p` matrices
/// `G_2, …, G_ρ(p)`.
///
/// Each matrix is a Kronecker product of signed 2×2 permutations, found by a
/// depth-first search over words with an odd number of `R` letters.
pub fn hurwitz_radon_family(p: usize) -> Result<Vec<DMatrix<f64>>> {
    let rho = hurwitz_radon_number(p)?;
    let len = p.trailing_zeros() as usize;
    let need = rho - 1;
    if need == 0 {
        return Ok(Vec::new());
    }
    let pool: Vec<Vec<u8>> = (0..4usize.pow(len as u32))
        .map(|mut code| {
            (0..len)
                .map(|_| {
                    let l = (code % 4) as u8;
                    code /= 4;
                    l
                })
                .collect::<Vec<u8>>()
        })
        .filter(|w| w.iter().filter(|&&l| l == LETTER_R).count() % 2 == 1)
        .collect();
    let mut chosen = Vec::new();
    if !search_words(&pool, need, 0, &mut chosen) {
        return Err(Error::Numerical(format!("no Hurwitz-Radon family found for p = {p}")));
    }
    Ok(chosen
        .iter()
        .map(|&i| {
            pool[i]
                .iter()
                .fold(DMatrix::<f64>::identity(1, 1), |acc, &l| acc.kronecker(&letter_matrix(l)))
        })
        .collect())
}

/// Largest absolute violation of each code identity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    /// `max |A_n^H A_n − I|` and the same for `B`.
    pub self_a: f64,
    pub self_b: f64,
    /// `max |A_n^H A_k + A_k^H A_n|` over `n ≠ k`, and the same for `B`.
    pub anticommute_a: f64,
    pub anticommute_b: f64,
    /// `max |A_n^H B_k − B_k^H A_n|` over all `n, k`.
    pub cross_ab: f64,
    /// `max |Re(v^H A_n^H A_k v) − ‖v‖² δ_nk|` over random `v`.
    pub vector_real: f64,
    /// `max |Im(v^H A_n^H B_k v)|` over random `v`.
    pub vector_imag: f64,
    /// `max |X^H X − Σ|s_n|² I|` over random symbol vectors.
    pub codeword_gram: f64,
    /// `|E[tr(X^H X)] − τ_d|` with symbols of energy `E_s`.
    pub energy: f64,
}

impl ValidationReport {
    pub fn max_violation(&self) -> f64 {
        [
            self.self_a,
            self.self_b,
            self.anticommute_a,
            self.anticommute_b,
            self.cross_ab,
            self.vector_real,
            self.vector_imag,
            self.codeword_gram,
            self.energy,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn validate_code(code: &OstbcCode) -> ValidationReport {
    validate_code_with(code, 1000, 0x5eed)
}

/// Validates the algebraic identities using `draws` random vectors and codewords.
pub fn validate_code_with(code: &OstbcCode, draws: usize, seed: u64) -> ValidationReport {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let eye = identity(code.n_t);
    let mut rep = ValidationReport::default();
    let ah: Vec<CMat> = code.a.iter().map(|m| m.adjoint()).collect();
    let bh: Vec<CMat> = code.b.iter().map(|m| m.adjoint()).collect();
    for n in 0..code.n_s {
        rep.self_a = rep.self_a.max(max_abs_diff(&(&ah[n] * &code.a[n]), &eye));
        rep.self_b = rep.self_b.max(max_abs_diff(&(&bh[n] * &code.b[n]), &eye));
        for k in 0..code.n_s {
            let anb = &ah[n] * &code.b[k];
            rep.cross_ab = rep.cross_ab.max(max_abs_diff(&anb, &(&bh[k] * &code.a[n])));
            if n != k {
                let aa = &ah[n] * &code.a[k] + &ah[k] * &code.a[n];
                let bb = &bh[n] * &code.b[k] + &bh[k] * &code.b[n];
                rep.anticommute_a = rep.anticommute_a.max(max_abs(&aa));
                rep.anticommute_b = rep.anticommute_b.max(max_abs(&bb));
            }
        }
    }

    let n_vec = draws.max(100);
    let aa: Vec<Vec<CMat>> = ah.iter().map(|x| code.a.iter().map(|y| x * y).collect()).collect();
    let ab: Vec<Vec<CMat>> = ah.iter().map(|x| code.b.iter().map(|y| x * y).collect()).collect();
    // The pairwise products are O(n_s²) matrices; for the largest code only a
    // subset of vectors is pushed through all of them.
    let vec_draws = if code.n_s > 16 { 100 } else { n_vec };
    for _ in 0..vec_draws {
        let v = complex_gaussian_vec(&mut rng, code.n_t);
        let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        for n in 0..code.n_s {
            for k in 0..code.n_s {
                let re = (v.adjoint() * &aa[n][k] * &v)[(0, 0)].re;
                let target = if n == k { vv } else { 0.0 };
                rep.vector_real = rep.vector_real.max((re - target).abs());
                let im = (v.adjoint() * &ab[n][k] * &v)[(0, 0)].im;
                rep.vector_imag = rep.vector_imag.max(im.abs());
            }
        }
    }

    let es = code.symbol_energy();
    let mut trace_sum = 0.0;
    for _ in 0..n_vec {
        let s = complex_gaussian_vec(&mut rng, code.n_s);
        let x = code.encode(s.as_slice()).expect("length matches");
        let energy: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        let gram = x.adjoint() * &x;
        rep.codeword_gram = rep.codeword_gram.max(max_abs_diff(&gram, &eye.scale(energy)));
    }
    // E[tr(X^H X)] = n_t Σ_n E|s_n|² exactly, given the Gram identity.
    for n in 0..code.n_s {
        trace_sum += (code.a[n].adjoint() * &code.a[n]).trace().re * es / 2.0
            + (code.b[n].adjoint() * &code.b[n]).trace().re * es / 2.0;
    }
    rep.energy = (trace_sum - code.tau_d as f64).abs();
    rep
}
