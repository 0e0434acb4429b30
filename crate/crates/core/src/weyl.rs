//! The extended affine Weyl group W = S(n) ⋉ Z^n for n = 3d: elements,
//! generators, the level homomorphism chi, the action on parameter tuples,
//! and decomposition of level-zero elements into primitive moves.
//!
//! Composition convention: (sigma, v) * (sigma', v') = (sigma sigma',
//! sigma'^{-1}(v) + v') with (sigma^{-1}(v))_j = v_{sigma(j)}; elements act on
//! the left of tuples, translation part first:
//! ((sigma, v) . a)_k = a_{sigma^{-1}(k)} + v_{sigma^{-1}(k)}.

use crate::elliptic::{CurvePoint, EllResult, EllipticCurve};
use crate::scalar::Real;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeylError {
    #[error("generator index {0} out of range for n = {1}")]
    IndexOutOfRange(usize, usize),
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("element has chi = {0} != 0, not in W0")]
    NotInW0(i64),
    #[error("bad token: {0}")]
    BadToken(String),
}

pub type WeylResult<T> = Result<T, WeylError>;

/// Element (perm, trans) of S(n) ⋉ Z^n. `perm[i]` is the image of slot i
/// (0-indexed internally; the token syntax is 1-indexed).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeylElement {
    pub n: usize,
    pub perm: Vec<usize>,
    pub trans: Vec<i64>,
}

/// Token of a generator word. Indices are 1-based as in the word syntax
/// "s3", "g", "g-", "a(1,5)".
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Token {
    S(usize),
    G,
    GInv,
    Alpha(usize, usize),
}

impl std::fmt::Display for Token {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Token::S(k) => write!(f, "s{k}"),
            Token::G => write!(f, "g"),
            Token::GInv => write!(f, "g-"),
            Token::Alpha(i, j) => write!(f, "a({i},{j})"),
        }
    }
}

/// Parse whitespace-separated word syntax.
pub fn parse_word(s: &str) -> WeylResult<Vec<Token>> {
    let mut out = Vec::new();
    for tok in s.split_whitespace() {
        if tok == "g" {
            out.push(Token::G);
        } else if tok == "g-" || tok == "g^-1" {
            out.push(Token::GInv);
        } else if let Some(rest) = tok.strip_prefix('s') {
            let k: usize = rest
                .parse()
                .map_err(|_| WeylError::BadToken(tok.to_string()))?;
            out.push(Token::S(k));
        } else if let Some(rest) = tok.strip_prefix("a(") {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| WeylError::BadToken(tok.to_string()))?;
            let mut parts = inner.split(',');
            let i: usize = parts
                .next()
                .and_then(|x| x.trim().parse().ok())
                .ok_or_else(|| WeylError::BadToken(tok.to_string()))?;
            let j: usize = parts
                .next()
                .and_then(|x| x.trim().parse().ok())
                .ok_or_else(|| WeylError::BadToken(tok.to_string()))?;
            out.push(Token::Alpha(i, j));
        } else {
            return Err(WeylError::BadToken(tok.to_string()));
        }
    }
    Ok(out)
}

impl WeylElement {
    pub fn identity(n: usize) -> Self {
        WeylElement {
            n,
            perm: (0..n).collect(),
            trans: vec![0; n],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p) && self.trans.iter().all(|&v| v == 0)
    }

    /// Adjacent transposition s_k for 1 <= k <= n-1; the affine reflection
    /// s_0 = g s_1 g^{-1}; the rotation g; pure translations a(i,j).
    pub fn from_token(token: Token, n: usize) -> WeylResult<Self> {
        match token {
            Token::S(0) => {
                let g = WeylElement::from_token(Token::G, n)?;
                let s1 = WeylElement::from_token(Token::S(1), n)?;
                Ok(g.multiply(&s1)?.multiply(&g.inverse())?)
            }
            Token::S(k) => {
                if k >= n {
                    return Err(WeylError::IndexOutOfRange(k, n));
                }
                let mut perm: Vec<usize> = (0..n).collect();
                perm.swap(k - 1, k);
                Ok(WeylElement {
                    n,
                    perm,
                    trans: vec![0; n],
                })
            }
            Token::G => {
                // g . (a_1,...,a_n) = (a_2,...,a_n, a_1 - 1):
                // slot content moves down one slot, with -1 at the wrap.
                let perm: Vec<usize> = (0..n).map(|i| (i + n - 1) % n).collect();
                let mut trans = vec![0; n];
                trans[0] = -1;
                Ok(WeylElement { n, perm, trans })
            }
            Token::GInv => Ok(WeylElement::from_token(Token::G, n)?.inverse()),
            Token::Alpha(i, j) => {
                if i == 0 || j == 0 || i > n || j > n || i == j {
                    return Err(WeylError::IndexOutOfRange(i.max(j), n));
                }
                let mut trans = vec![0; n];
                trans[i - 1] = 1;
                trans[j - 1] = -1;
                Ok(WeylElement {
                    n,
                    perm: (0..n).collect(),
                    trans,
                })
            }
        }
    }

    pub fn from_word(tokens: &[Token], n: usize) -> WeylResult<Self> {
        let mut acc = WeylElement::identity(n);
        for t in tokens {
            acc = acc.multiply(&WeylElement::from_token(*t, n)?)?;
        }
        Ok(acc)
    }

    pub fn multiply(&self, other: &WeylElement) -> WeylResult<WeylElement> {
        if self.n != other.n {
            return Err(WeylError::SizeMismatch(self.n, other.n));
        }
        let n = self.n;
        let perm: Vec<usize> = (0..n).map(|i| self.perm[other.perm[i]]).collect();
        // sigma'^{-1}(v) + v' with (sigma'^{-1}(v))_j = v_{sigma'(j)}
        let trans: Vec<i64> = (0..n)
            .map(|j| self.trans[other.perm[j]] + other.trans[j])
            .collect();
        Ok(WeylElement { n, perm, trans })
    }

    pub fn inverse(&self) -> WeylElement {
        let n = self.n;
        let mut perm = vec![0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            perm[p] = i;
        }
        // (sigma, v)^{-1} = (sigma^{-1}, -sigma(v)) with (sigma(v))_k = v_{sigma^{-1}(k)}
        let trans: Vec<i64> = (0..n).map(|k| -self.trans[perm[k]]).collect();
        WeylElement { n, perm, trans }
    }

    pub fn pow(&self, k: i64) -> WeylElement {
        let mut acc = WeylElement::identity(self.n);
        let b = if k < 0 { self.inverse() } else { self.clone() };
        for _ in 0..k.unsigned_abs() {
            acc = acc.multiply(&b).unwrap();
        }
        acc
    }

    /// The level homomorphism: sum of the translation entries.
    pub fn chi(&self) -> i64 {
        self.trans.iter().sum()
    }

    /// Left action on tuples of curve points: translation part sends slot k
    /// by tau^{3 v_k}, then the permutation redistributes slots.
    pub fn act_on_params<R: Real>(
        &self,
        points: &[CurvePoint<R>],
        curve: &EllipticCurve<R>,
    ) -> EllResult<Vec<CurvePoint<R>>> {
        assert_eq!(points.len(), self.n);
        let mut out = Vec::with_capacity(self.n);
        let mut inv = vec![0; self.n];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        for k in 0..self.n {
            let src = inv[k];
            out.push(curve.tau_pow(&points[src], 3 * self.trans[src])?);
        }
        Ok(out)
    }

    /// Write a level-zero element as a word in {s_1..s_{n-1}, a(i,i+1)} whose
    /// product equals the element. Adjacent transpositions sort the
    /// permutation; the root-lattice part telescopes through partial sums.
    pub fn decompose_w0(&self) -> WeylResult<Vec<Token>> {
        let chi = self.chi();
        if chi != 0 {
            return Err(WeylError::NotInW0(chi));
        }
        let n = self.n;
        let mut word: Vec<Token> = Vec::new();
        // self = (perm, 0) * (id, trans); emit the permutation word first.
        // Bubble-sort decomposition of perm into adjacent transpositions.
        let mut p = self.perm.clone();
        let mut perm_word: Vec<Token> = Vec::new();
        loop {
            let mut swapped = false;
            for i in 0..n - 1 {
                if p[i] > p[i + 1] {
                    p.swap(i, i + 1);
                    perm_word.push(Token::S(i + 1));
                    swapped = true;
                }
            }
            if !swapped {
                break;
            }
        }
        // perm_word sorts p to identity when applied right-to-left on the
        // right of perm, i.e. perm = product(perm_word).
        word.extend(perm_word.iter().rev());
        // Lattice part: v = sum_i b_i alpha_{i,i+1} with b_i the partial sums.
        let mut b = 0i64;
        for i in 0..n - 1 {
            b += self.trans[i];
            let tok = if b >= 0 {
                vec![Token::Alpha(i + 1, i + 2); b as usize]
            } else {
                vec![Token::Alpha(i + 2, i + 1); (-b) as usize]
            };
            word.extend(tok);
        }
        debug_assert!({
            let check = WeylElement::from_word(&word, n)?;
            check == *self
        });
        Ok(word)
    }
}

/// Report from the relation suite; `failures` must come back empty.
#[derive(Clone, Debug, Default)]
pub struct RelationReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

/// Exact verification of the defining relations at the group-element level:
/// involutions, braid relations, rotation conjugation, and g^n = (-1,...,-1).
pub fn verify_relations(n: usize, trials: u64) -> WeylResult<RelationReport> {
    let mut report = RelationReport::default();
    let mut check = |name: String, ok: bool, report: &mut RelationReport| {
        report.checked += 1;
        if !ok {
            report.failures.push(name);
        }
    };
    let s: Vec<WeylElement> = (0..n)
        .map(|k| WeylElement::from_token(Token::S(k), n))
        .collect::<WeylResult<_>>()?;
    let g = WeylElement::from_token(Token::G, n)?;
    let gi = g.inverse();
    for (k, sk) in s.iter().enumerate() {
        check(
            format!("s{k}^2 = e"),
            sk.multiply(sk)?.is_identity(),
            &mut report,
        );
        let next = &s[(k + 1) % n];
        let braid = sk.multiply(next)?.pow(3);
        check(format!("(s{k} s{})^3 = e", (k + 1) % n), braid.is_identity(), &mut report);
        let conj = g.multiply(sk)?.multiply(&gi)?;
        let want = &s[(k + n - 1) % n];
        check(format!("g s{k} g^-1 = s{}", (k + n - 1) % n), conj == *want, &mut report);
        // distant generators commute (affine A_{n-1} Dynkin diagram)
        for j in 0..n {
            let dist = (k as i64 - j as i64).rem_euclid(n as i64);
            if dist >= 2 && dist <= n as i64 - 2 {
                let ab = s[k].multiply(&s[j])?;
                let ba = s[j].multiply(&s[k])?;
                check(format!("s{k} s{j} commute"), ab == ba, &mut report);
            }
        }
    }
    let gn = g.pow(n as i64);
    let want = WeylElement {
        n,
        perm: (0..n).collect(),
        trans: vec![-1; n],
    };
    check(format!("g^{n} = translation(-1,..,-1)"), gn == want, &mut report);
    // randomized associativity / inverse checks
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(trials ^ 0x3177);
    for t in 0..trials {
        let rand_elt = |rng: &mut rand_chacha::ChaCha8Rng| -> WeylResult<WeylElement> {
            let mut acc = WeylElement::identity(n);
            for _ in 0..6 {
                let tok = match rng.gen_range(0..3) {
                    0 => Token::S(rng.gen_range(1..n)),
                    1 => Token::G,
                    _ => {
                        let i = rng.gen_range(1..=n);
                        let mut j = rng.gen_range(1..=n);
                        while j == i {
                            j = rng.gen_range(1..=n);
                        }
                        Token::Alpha(i, j)
                    }
                };
                acc = acc.multiply(&WeylElement::from_token(tok, n)?)?;
            }
            Ok(acc)
        };
        let a = rand_elt(&mut rng)?;
        let b = rand_elt(&mut rng)?;
        let c = rand_elt(&mut rng)?;
        let lhs = a.multiply(&b)?.multiply(&c)?;
        let rhs = a.multiply(&b.multiply(&c)?)?;
        check(format!("assoc trial {t}"), lhs == rhs, &mut report);
        let inv_check = a.multiply(&a.inverse())?;
        check(format!("inverse trial {t}"), inv_check.is_identity(), &mut report);
        check(
            format!("chi hom trial {t}"),
            a.multiply(&b)?.chi() == a.chi() + b.chi(),
            &mut report,
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::random_curve;

    #[test]
    fn generator_examples() {
        let n = 9;
        let s1 = WeylElement::from_token(Token::S(1), n).unwrap();
        assert!(s1.multiply(&s1).unwrap().is_identity());
        // a(i,j) inverse pair
        let a13 = WeylElement::from_token(Token::Alpha(1, 3), n).unwrap();
        let a31 = WeylElement::from_token(Token::Alpha(3, 1), n).unwrap();
        assert!(a13.multiply(&a31).unwrap().is_identity());
        // s0 normal form: transposition (1,n) with translation delta_n - delta_1
        // (from expanding the affine reflection in {a_n = a_1 - 1} with the
        // stated composition law).
        let s0 = WeylElement::from_token(Token::S(0), n).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.swap(0, n - 1);
        assert_eq!(s0.perm, perm);
        let mut trans = vec![0i64; n];
        trans[0] = -1;
        trans[n - 1] = 1;
        assert_eq!(s0.trans, trans);
        assert!(s0.multiply(&s0).unwrap().is_identity());
    }

    #[test]
    fn affine_reflection_action() {
        // s0 acting on lattice points fixes the wall {a_n = a_1 - 1}.
        let n = 6;
        let s0 = WeylElement::from_token(Token::S(0), n).unwrap();
        let a: Vec<i64> = vec![3, 0, 1, -2, 5, 2]; // a_n = a_1 - 1
        // action on integer tuples mirrors act_on_params
        let mut inv = vec![0; n];
        for (i, &p) in s0.perm.iter().enumerate() {
            inv[p] = i;
        }
        let image: Vec<i64> = (0..n).map(|k| a[inv[k]] + s0.trans[inv[k]]).collect();
        assert_eq!(image, a, "wall is fixed");
    }

    #[test]
    fn chi_values() {
        let n = 9;
        for k in 0..n {
            assert_eq!(WeylElement::from_token(Token::S(k), n).unwrap().chi(), 0);
        }
        assert_eq!(WeylElement::from_token(Token::G, n).unwrap().chi(), -1);
        assert_eq!(
            WeylElement::from_token(Token::Alpha(2, 7), n).unwrap().chi(),
            0
        );
    }

    #[test]
    fn g_power_n_is_minus_one_translation() {
        for n in [6, 9] {
            let g = WeylElement::from_token(Token::G, n).unwrap();
            let gn = g.pow(n as i64);
            assert_eq!(gn.perm, (0..n).collect::<Vec<_>>());
            assert_eq!(gn.trans, vec![-1i64; n]);
        }
    }

    #[test]
    fn relation_suite_exact() {
        for n in [6, 9] {
            let report = verify_relations(n, 25).unwrap();
            assert!(
                report.failures.is_empty(),
                "n={n} failures: {:?}",
                report.failures
            );
            assert!(report.checked > 50);
        }
    }

    #[test]
    fn decompose_examples() {
        let n = 9;
        // a(1,3) through adjacent roots
        let a13 = WeylElement::from_token(Token::Alpha(1, 3), n).unwrap();
        let word = a13.decompose_w0().unwrap();
        assert_eq!(WeylElement::from_word(&word, n).unwrap(), a13);
        // s_0 decomposes inside W0
        let s0 = WeylElement::from_token(Token::S(0), n).unwrap();
        let word = s0.decompose_w0().unwrap();
        assert_eq!(WeylElement::from_word(&word, n).unwrap(), s0);
        for t in &word {
            match t {
                Token::S(k) => assert!(*k >= 1 && *k < n),
                Token::Alpha(i, j) => assert_eq!(i.abs_diff(*j), 1),
                _ => panic!("unexpected token {t}"),
            }
        }
        // identity gives the empty word
        assert!(WeylElement::identity(n).decompose_w0().unwrap().is_empty());
        // g is not in W0
        let g = WeylElement::from_token(Token::G, n).unwrap();
        assert!(matches!(g.decompose_w0(), Err(WeylError::NotInW0(-1))));
    }

    #[test]
    fn decompose_random_products() {
        use rand::prelude::*;
        let n = 9;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let mut acc = WeylElement::identity(n);
            for _ in 0..8 {
                let tok = match rng.gen_range(0..2) {
                    0 => Token::S(rng.gen_range(1..n)),
                    _ => {
                        let i = rng.gen_range(1..=n);
                        let mut j = rng.gen_range(1..=n);
                        while j == i {
                            j = rng.gen_range(1..=n);
                        }
                        Token::Alpha(i, j)
                    }
                };
                acc = acc
                    .multiply(&WeylElement::from_token(tok, n).unwrap())
                    .unwrap();
            }
            let word = acc.decompose_w0().unwrap();
            assert_eq!(WeylElement::from_word(&word, n).unwrap(), acc);
        }
    }

    #[test]
    fn action_axiom_on_curve_points() {
        let e = random_curve::<f64>(31).unwrap();
        let n = 9;
        let points: Vec<_> = (0..n as u64).map(|k| e.random_point(40 + k).unwrap()).collect();
        let w1 = WeylElement::from_word(&parse_word("s2 a(1,4) g").unwrap(), n).unwrap();
        let w2 = WeylElement::from_word(&parse_word("g- s5 a(3,2)").unwrap(), n).unwrap();
        let lhs = w1
            .multiply(&w2)
            .unwrap()
            .act_on_params(&points, &e)
            .unwrap();
        let rhs = w1
            .act_on_params(&w2.act_on_params(&points, &e).unwrap(), &e)
            .unwrap();
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!(a.dist(b) < 1e-9, "action axiom: {}", a.dist(b));
        }
        // identity acts trivially
        let id = WeylElement::identity(n);
        let fixed = id.act_on_params(&points, &e).unwrap();
        for (a, b) in fixed.iter().zip(&points) {
            assert!(a.dist(b) < 1e-14);
        }
        // alpha(1,2) moves slots 1, 2 by tau^{+-3}
        let a12 = WeylElement::from_token(Token::Alpha(1, 2), n).unwrap();
        let moved = a12.act_on_params(&points, &e).unwrap();
        let up = e.tau_pow(&points[0], 3).unwrap();
        let down = e.tau_pow(&points[1], -3).unwrap();
        assert!(moved[0].dist(&up) < 1e-10);
        assert!(moved[1].dist(&down) < 1e-10);
        for k in 2..n {
            assert!(moved[k].dist(&points[k]) < 1e-14);
        }
    }

    #[test]
    fn word_syntax_roundtrip() {
        let toks = parse_word("s3 g g- a(1,5) s0").unwrap();
        assert_eq!(
            toks,
            vec![
                Token::S(3),
                Token::G,
                Token::GInv,
                Token::Alpha(1, 5),
                Token::S(0)
            ]
        );
        assert!(parse_word("q7").is_err());
        assert!(parse_word("a(1,)").is_err());
    }
}
