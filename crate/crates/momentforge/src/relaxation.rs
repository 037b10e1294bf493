//! Moment-matrix relaxations and their block-diagonal semidefinite programs.
//!
//! Given a rewrite system, an evaluation structure, and a compatible
//! symmetry group, [`build_relaxation`] enumerates a generating basis of
//! normal-form words up to the relaxation level, assigns one index per
//! canonical moment to every cell of the moment matrix (filling whole group
//! orbits at once), and vectorizes the objective. [`assemble_sdp`] turns the
//! result into a sparse dual-form program `maximize b·y` subject to
//! `C + Σ yᵢ Aᵢ ⪰ 0`, and [`split_order2`] block-diagonalizes it in the
//! eigenbasis of an order-2 symmetry.

use crate::algebra::{grlex_compare, LetterId, Polynomial, Sign, SignedWord, Word};
use crate::evaluation::{canonical, ClosureError, EvaluationRules};
use crate::rewrite::{RewriteError, RewriteSystem};
use crate::symmetry::{GeneralizedPermutation, PermGroup};
use nalgebra::DMatrix;
use num::rational::BigRational;
use num::{ToPrimitive, Zero};
use rayon::prelude::*;
use std::collections::HashMap;

/// Sentinel marking a moment-matrix cell whose index is not yet assigned.
const UNASSIGNED: i64 = i64::MAX;

#[derive(Debug, thiserror::Error)]
pub enum RelaxError {
    #[error("generating basis exceeded the cap of {0} words")]
    BasisCapExceeded(usize),
    #[error("objective has degree {degree} but the level-{level} moment matrix only reaches degree {max}")]
    DegreeOverflow { degree: usize, level: usize, max: usize },
    #[error("objective is not representable over the symmetrized moments: {0}")]
    NotRepresentable(String),
    #[error("group element does not act on the generating basis: {0}")]
    BasisAction(String),
    #[error("conflicting moment indices at cell ({row},{col}): {a} vs {b}")]
    Inconsistent { row: usize, col: usize, a: i64, b: i64 },
    #[error("split requires a single-block program")]
    NotSingleBlock,
    #[error("split symmetry must have order exactly 2 on the basis")]
    NotOrderTwo,
    #[error("split produced an empty block")]
    EmptySplitBlock,
    #[error("basis coupling of {max:.3e} exceeds the tolerance {tol:.3e}; the symmetry does not commute with the program")]
    SplitCoupling { max: f64, tol: f64 },
    #[error(transparent)]
    Closure(#[from] ClosureError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

/// All distinct normal-form words of length at most the level, sorted
/// graded-lexicographically. The empty word always sits at position 0.
#[derive(Clone, Debug)]
pub struct GeneratingBasis {
    words: Vec<Word>,
    index: HashMap<Word, usize>,
    level: usize,
    alphabet: crate::algebra::Alphabet,
}

impl GeneratingBasis {
    pub fn generate(
        rs: &RewriteSystem,
        level: usize,
        cap: usize,
    ) -> Result<GeneratingBasis, RelaxError> {
        let n = rs.alphabet().size();
        let mut words: Vec<Word> = vec![Word::empty()];
        let mut frontier: Vec<Word> = vec![Word::empty()];
        for length in 1..=level {
            let mut next: Vec<Word> = Vec::new();
            for stem in &frontier {
                for letter in 1..=n {
                    let extended = stem.concat(&Word::single(letter as LetterId));
                    match rs.normal_form_word(&extended)? {
                        SignedWord::Zero => {}
                        SignedWord::Term { word, .. } => {
                            // Shorter results are normal forms already found
                            // at their own length.
                            if word.len() == length {
                                next.push(word);
                            }
                        }
                    }
                }
            }
            next.sort_by(grlex_compare);
            next.dedup();
            if words.len() + next.len() > cap {
                return Err(RelaxError::BasisCapExceeded(cap));
            }
            words.extend(next.iter().cloned());
            frontier = next;
        }
        words.sort_by(grlex_compare);
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(GeneratingBasis { words, index, level, alphabet: rs.alphabet().clone() })
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn alphabet(&self) -> &crate::algebra::Alphabet {
        &self.alphabet
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &Word {
        &self.words[i]
    }

    pub fn position(&self, w: &Word) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// How the group element permutes basis words, as signed 1-based images:
    /// entry `i` is `±(j+1)` when the element maps word `i` to `±` word `j`.
    pub fn action_of(
        &self,
        g: &GeneralizedPermutation,
        rs: &RewriteSystem,
    ) -> Result<Vec<i32>, RelaxError> {
        let mut images = Vec::with_capacity(self.words.len());
        for w in &self.words {
            let moved = g.apply_signed(&SignedWord::positive(w.clone()), rs)?;
            let (sign, word) = match &moved {
                SignedWord::Zero => {
                    return Err(RelaxError::BasisAction(format!(
                        "image of {} vanishes",
                        rs.alphabet().display_word(w)
                    )))
                }
                SignedWord::Term { sign, word } => (*sign, word),
            };
            let pos = self.position(word).ok_or_else(|| {
                RelaxError::BasisAction(format!(
                    "image {} of {} is outside the basis",
                    rs.alphabet().display_word(word),
                    rs.alphabet().display_word(w)
                ))
            })?;
            images.push(sign.as_i32() * (pos as i32 + 1));
        }
        Ok(images)
    }
}

#[derive(Clone, Debug)]
pub struct RelaxOptions {
    /// Cap on the canonicalization closure per moment class.
    pub closure_cap: usize,
    /// Cap on the generating-basis size.
    pub basis_cap: usize,
}

impl Default for RelaxOptions {
    fn default() -> RelaxOptions {
        RelaxOptions { closure_cap: 1_000_000, basis_cap: 1_000_000 }
    }
}

/// A moment matrix in index form plus the vectorized objective.
///
/// `index_matrix[j][k]` is `±i` when cell `(j,k)` carries moment `i` with
/// that sign, or `0` when the moment vanishes identically. Index 1 is the
/// constant moment (the empty word, pinned to value 1); `moments[i-1]` is
/// the canonical word behind index `i`. The exact objective vector has
/// `objective[i]` multiplying moment `i`, so `objective[1]` is the constant
/// offset and indices `2..` correspond to the free variables.
#[derive(Clone, Debug)]
pub struct MomentRelaxation {
    pub basis: GeneratingBasis,
    pub index_matrix: Vec<Vec<i64>>,
    pub moments: Vec<Word>,
    pub objective: Vec<BigRational>,
}

impl MomentRelaxation {
    /// Number of distinct moments including the constant.
    pub fn num_moments(&self) -> usize {
        self.moments.len()
    }

    /// Number of free variables in the semidefinite program.
    pub fn num_variables(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn constant_offset(&self) -> &BigRational {
        &self.objective[1]
    }
}

pub fn build_relaxation(
    rs: &RewriteSystem,
    group: &PermGroup,
    eval: &EvaluationRules,
    objective: &Polynomial,
    level: usize,
    opts: &RelaxOptions,
) -> Result<MomentRelaxation, RelaxError> {
    let objective = rs.normalize_poly(objective)?;
    if objective.degree() > 2 * level {
        return Err(RelaxError::DegreeOverflow {
            degree: objective.degree(),
            level,
            max: 2 * level,
        });
    }
    let basis = GeneratingBasis::generate(rs, level, opts.basis_cap)?;
    let n = basis.size();

    let actions: Vec<Vec<i32>> = group
        .elements()
        .iter()
        .map(|g| basis.action_of(g, rs))
        .collect::<Result<_, _>>()?;

    // Canonicalize every upper-triangle cell up front; group orbits make
    // many of these redundant, but the work is embarrassingly parallel and
    // the sequential pass below stays deterministic.
    let alphabet = rs.alphabet();
    let cells: Vec<(usize, usize)> =
        (0..n).flat_map(|j| (j..n).map(move |k| (j, k))).collect();
    let canonicals: Vec<SignedWord> = cells
        .par_iter()
        .map(|&(j, k)| {
            let product = basis.word(j).adjoint(alphabet).concat(basis.word(k));
            canonical(&SignedWord::positive(product), group, eval, rs, opts.closure_cap)
        })
        .collect::<Result<_, _>>()?;

    let mut index_matrix = vec![vec![UNASSIGNED; n]; n];
    let mut moments: Vec<Word> = vec![Word::empty()];
    let mut moment_index: HashMap<Word, i64> = HashMap::new();
    moment_index.insert(Word::empty(), 1);

    let set_cell = |m: &mut Vec<Vec<i64>>, r: usize, c: usize, v: i64| {
        let prev = m[r][c];
        if prev != UNASSIGNED && prev != v {
            return Err(RelaxError::Inconsistent { row: r, col: c, a: prev, b: v });
        }
        m[r][c] = v;
        m[c][r] = v;
        Ok(())
    };

    for (&(j, k), canon) in cells.iter().zip(canonicals.iter()) {
        if index_matrix[j][k] != UNASSIGNED {
            continue;
        }
        let entry = match canon {
            SignedWord::Zero => 0,
            SignedWord::Term { sign, word } => {
                let next = moments.len() as i64 + 1;
                let idx = *moment_index.entry(word.clone()).or_insert_with(|| {
                    moments.push(word.clone());
                    next
                });
                sign.as_i32() as i64 * idx
            }
        };
        for action in &actions {
            let rj = action[j];
            let rk = action[k];
            let row = rj.unsigned_abs() as usize - 1;
            let col = rk.unsigned_abs() as usize - 1;
            let orbit_sign = (rj.signum() * rk.signum()) as i64;
            set_cell(&mut index_matrix, row, col, orbit_sign * entry)?;
        }
    }
    debug_assert!(index_matrix.iter().all(|row| row.iter().all(|&v| v != UNASSIGNED)));

    let num_moments = moments.len();
    let mut objective_vec = vec![BigRational::zero(); num_moments + 1];
    let mut vanished_total = BigRational::zero();
    for (word, coeff) in objective.terms() {
        let canon = canonical(
            &SignedWord::positive(word.clone()),
            group,
            eval,
            rs,
            opts.closure_cap,
        )?;
        match canon {
            SignedWord::Zero => vanished_total += coeff,
            SignedWord::Term { sign, word } => {
                let idx = *moment_index.get(&word).ok_or_else(|| {
                    RelaxError::NotRepresentable(format!(
                        "moment {} does not appear in the level-{level} matrix",
                        alphabet.display_word(&word)
                    ))
                })?;
                let signed = match sign {
                    Sign::Plus => coeff.clone(),
                    Sign::Minus => -coeff.clone(),
                };
                objective_vec[idx as usize] += signed;
            }
        }
    }
    if !vanished_total.is_zero() {
        return Err(RelaxError::NotRepresentable(format!(
            "terms with total coefficient {vanished_total} lie in vanishing moment classes"
        )));
    }

    Ok(MomentRelaxation { basis, index_matrix, moments, objective: objective_vec })
}

/// Sparse symmetric matrix stored as upper-triangle entries `(row, col, value)`
/// with `row ≤ col`, 0-based.
#[derive(Clone, Debug, Default)]
pub struct SparseSymMat {
    pub dim: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSymMat {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
        m
    }

    /// Frobenius inner product with a dense symmetric matrix.
    pub fn inner(&self, m: &DMatrix<f64>) -> f64 {
        let mut acc = 0.0;
        for &(r, c, v) in &self.entries {
            acc += v * m[(r, c)];
            if r != c {
                acc += v * m[(c, r)];
            }
        }
        acc
    }

    pub fn from_dense(m: &DMatrix<f64>, drop_below: f64) -> SparseSymMat {
        let dim = m.nrows();
        let mut entries = Vec::new();
        for r in 0..dim {
            for c in r..dim {
                let v = 0.5 * (m[(r, c)] + m[(c, r)]);
                if v.abs() > drop_below {
                    entries.push((r, c, v));
                }
            }
        }
        SparseSymMat { dim, entries }
    }
}

/// A dual-form semidefinite program over one or more diagonal blocks:
/// maximize `b·y` subject to `C + Σ yᵢ Aᵢ ⪰ 0` on every block, plus a
/// constant objective offset carried through from the moment build.
#[derive(Clone, Debug)]
pub struct BlockSdp {
    pub block_dims: Vec<usize>,
    /// Constant matrix, one per block.
    pub c: Vec<SparseSymMat>,
    /// Coefficient matrices: `a[variable][block]`.
    pub a: Vec<Vec<SparseSymMat>>,
    pub b: Vec<f64>,
    pub constant_offset: f64,
}

impl BlockSdp {
    pub fn num_variables(&self) -> usize {
        self.b.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }
}

fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("rational outside f64 range")
}

/// Lowers the index-form moment matrix to numeric data: SDP variable `v`
/// carries moment index `v + 2`, the constant moment becomes `C`.
pub fn assemble_sdp(relax: &MomentRelaxation) -> BlockSdp {
    let n = relax.basis.size();
    let m = relax.num_variables();
    let mut c = SparseSymMat { dim: n, entries: Vec::new() };
    let mut a: Vec<SparseSymMat> =
        vec![SparseSymMat { dim: n, entries: Vec::new() }; m];
    for j in 0..n {
        for k in j..n {
            let idx = relax.index_matrix[j][k];
            if idx == 0 {
                continue;
            }
            let sign = idx.signum() as f64;
            match idx.unsigned_abs() {
                1 => c.entries.push((j, k, sign)),
                i => a[i as usize - 2].entries.push((j, k, sign)),
            }
        }
    }
    let b = (0..m)
        .map(|v| rat_to_f64(&relax.objective[v + 2]))
        .collect();
    BlockSdp {
        block_dims: vec![n],
        c: vec![c],
        a: a.into_iter().map(|m| vec![m]).collect(),
        b,
        constant_offset: rat_to_f64(&relax.objective[1]),
    }
}

/// Splits a single-block program into symmetric and antisymmetric blocks
/// under an order-2 signed permutation of the basis (as returned by
/// [`GeneratingBasis::action_of`]). Every coefficient matrix is conjugated
/// into the eigenbasis; cross-block coupling beyond `coupling_tol` means the
/// permutation is not a symmetry of the program and is reported as an error.
pub fn split_order2(
    sdp: &BlockSdp,
    action: &[i32],
    coupling_tol: f64,
) -> Result<BlockSdp, RelaxError> {
    if sdp.block_dims.len() != 1 {
        return Err(RelaxError::NotSingleBlock);
    }
    let n = sdp.block_dims[0];
    assert_eq!(action.len(), n, "action length must match the block dimension");
    let is_identity = action.iter().enumerate().all(|(i, &v)| v == i as i32 + 1);
    let order_two = (0..n).all(|i| {
        let j = action[i].unsigned_abs() as usize - 1;
        let s = action[i].signum();
        action[j].signum() * s > 0 && action[j].unsigned_abs() as usize == i + 1
    });
    if is_identity || !order_two {
        return Err(RelaxError::NotOrderTwo);
    }

    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut sym_cols: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut anti_cols: Vec<Vec<(usize, f64)>> = Vec::new();
    for i in 0..n {
        let j = action[i].unsigned_abs() as usize - 1;
        let s = action[i].signum() as f64;
        if j == i {
            if s > 0.0 {
                sym_cols.push(vec![(i, 1.0)]);
            } else {
                anti_cols.push(vec![(i, 1.0)]);
            }
        } else if i < j {
            sym_cols.push(vec![(i, inv_sqrt2), (j, s * inv_sqrt2)]);
            anti_cols.push(vec![(i, inv_sqrt2), (j, -s * inv_sqrt2)]);
        }
    }
    let n_sym = sym_cols.len();
    let n_anti = anti_cols.len();
    if n_sym == 0 || n_anti == 0 {
        return Err(RelaxError::EmptySplitBlock);
    }
    let mut u = DMatrix::zeros(n, n_sym + n_anti);
    for (c, col) in sym_cols.iter().chain(anti_cols.iter()).enumerate() {
        for &(r, v) in col {
            u[(r, c)] = v;
        }
    }

    let mut max_coupling = 0.0f64;
    let mut conjugate = |mat: &SparseSymMat| -> (SparseSymMat, SparseSymMat) {
        let dense = u.transpose() * mat.to_dense() * &u;
        for r in 0..n_sym {
            for c in n_sym..n_sym + n_anti {
                max_coupling = max_coupling.max(dense[(r, c)].abs());
            }
        }
        let top = dense.view((0, 0), (n_sym, n_sym)).into_owned();
        let bottom = dense.view((n_sym, n_sym), (n_anti, n_anti)).into_owned();
        (
            SparseSymMat::from_dense(&top, 1e-14),
            SparseSymMat::from_dense(&bottom, 1e-14),
        )
    };

    let (c_sym, c_anti) = conjugate(&sdp.c[0]);
    let mut a = Vec::with_capacity(sdp.a.len());
    for mats in &sdp.a {
        let (s, t) = conjugate(&mats[0]);
        a.push(vec![s, t]);
    }
    if max_coupling > coupling_tol {
        return Err(RelaxError::SplitCoupling { max: max_coupling, tol: coupling_tol });
    }
    Ok(BlockSdp {
        block_dims: vec![n_sym, n_anti],
        c: vec![c_sym, c_anti],
        a,
        b: sdp.b.clone(),
        constant_offset: sdp.constant_offset,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Alphabet;
    use crate::rewrite::tests_support::chsh_fixture;
    use crate::symmetry::test_groups::chsh_symmetry_generators;
    use num::FromPrimitive;

    fn rat(n: i64) -> BigRational {
        BigRational::from_i64(n).unwrap()
    }

    fn chsh_objective() -> Polynomial {
        // A0*B0 + A0*B1 + A1*B0 - A1*B1
        let mut p = Polynomial::zero();
        for (a, b, s) in [(1u16, 3u16, 1), (1, 4, 1), (2, 3, 1), (2, 4, -1)] {
            p.add_term(&SignedWord::positive(Word::from_letters(vec![a, b])), rat(s));
        }
        p
    }

    #[test]
    fn chsh_basis_level_one() {
        let rs = chsh_fixture();
        let basis = GeneratingBasis::generate(&rs, 1, 1000).unwrap();
        assert_eq!(basis.size(), 5);
        assert_eq!(basis.word(0), &Word::empty());
        assert_eq!(basis.words()[1..]
            .iter()
            .map(|w| w.letters().to_vec())
            .collect::<Vec<_>>(),
            vec![vec![1], vec![2], vec![3], vec![4]]);
    }

    #[test]
    fn chsh_basis_level_two_excludes_collapsed_words() {
        let rs = chsh_fixture();
        let basis = GeneratingBasis::generate(&rs, 2, 1000).unwrap();
        // squares collapse and B*A reorders to A*B: 5 + (16 - 4 - 4) words
        assert_eq!(basis.size(), 13);
        assert!(basis.position(&Word::from_letters(vec![1, 1])).is_none());
        assert!(basis.position(&Word::from_letters(vec![3, 1])).is_none());
        assert!(basis.position(&Word::from_letters(vec![1, 3])).is_some());
    }

    #[test]
    fn basis_cap_aborts() {
        let rs = RewriteSystem::free(Alphabet::plain(3));
        assert!(matches!(
            GeneratingBasis::generate(&rs, 4, 20),
            Err(RelaxError::BasisCapExceeded(20))
        ));
    }

    #[test]
    fn chsh_unsymmetrized_structure() {
        let rs = chsh_fixture();
        let group = PermGroup::trivial(4);
        let relax = build_relaxation(
            &rs,
            &group,
            &EvaluationRules::real(),
            &chsh_objective(),
            1,
            &RelaxOptions::default(),
        )
        .unwrap();
        assert_eq!(relax.num_moments(), 11);
        assert_eq!(relax.num_variables(), 10);
        // moment order follows first appearance in a row-major scan
        let names: Vec<String> = relax
            .moments
            .iter()
            .map(|w| rs.alphabet().display_word(w))
            .collect();
        assert_eq!(
            names,
            vec!["1", "A0", "A1", "B0", "B1", "A0*A1", "A0*B0", "A0*B1", "A1*B0", "A1*B1", "B0*B1"]
        );
        let expected = [
            [1, 2, 3, 4, 5],
            [2, 1, 6, 7, 8],
            [3, 6, 1, 9, 10],
            [4, 7, 9, 1, 11],
            [5, 8, 10, 11, 1],
        ];
        for j in 0..5 {
            for k in 0..5 {
                assert_eq!(relax.index_matrix[j][k], expected[j][k]);
            }
        }
        assert_eq!(relax.objective[7], rat(1));
        assert_eq!(relax.objective[8], rat(1));
        assert_eq!(relax.objective[9], rat(1));
        assert_eq!(relax.objective[10], rat(-1));
        assert_eq!(relax.objective[1], rat(0));
    }

    fn chsh_symmetrized() -> (RewriteSystem, PermGroup, MomentRelaxation) {
        let rs = chsh_fixture();
        let group = PermGroup::enumerate(chsh_symmetry_generators(), 1_000_000).unwrap();
        let relax = build_relaxation(
            &rs,
            &group,
            &EvaluationRules::real(),
            &chsh_objective(),
            1,
            &RelaxOptions::default(),
        )
        .unwrap();
        (rs, group, relax)
    }

    #[test]
    fn chsh_symmetrized_structure() {
        let (rs, _, relax) = chsh_symmetrized();
        assert_eq!(relax.num_moments(), 2);
        assert_eq!(rs.alphabet().display_word(&relax.moments[1]), "A0*B0");
        assert_eq!(relax.objective[2], rat(4));
        let expected = [
            [1, 0, 0, 0, 0],
            [0, 1, 0, 2, 2],
            [0, 0, 1, 2, -2],
            [0, 2, 2, 1, 0],
            [0, 2, -2, 0, 1],
        ];
        for j in 0..5 {
            for k in 0..5 {
                assert_eq!(relax.index_matrix[j][k], expected[j][k], "cell ({j},{k})");
            }
        }
    }

    #[test]
    fn moment_matrix_is_group_invariant() {
        let (rs, group, relax) = chsh_symmetrized();
        for g in group.elements() {
            let action = relax.basis.action_of(g, &rs).unwrap();
            for j in 0..relax.basis.size() {
                for k in 0..relax.basis.size() {
                    let rj = action[j];
                    let rk = action[k];
                    let moved = relax.index_matrix[rj.unsigned_abs() as usize - 1]
                        [rk.unsigned_abs() as usize - 1];
                    let sign = (rj.signum() * rk.signum()) as i64;
                    assert_eq!(moved, sign * relax.index_matrix[j][k]);
                }
            }
        }
    }

    #[test]
    fn i3322_basis_counts() {
        let rs = tests_support::i3322_fixture();
        for (level, expect) in [(2usize, 28usize), (3, 88)] {
            let basis = GeneratingBasis::generate(&rs, level, 1_000_000).unwrap();
            assert_eq!(basis.size(), expect, "level {level}");
        }
    }

    #[test]
    fn i3322_level_three_variable_counts_and_split() {
        use crate::symmetry::test_groups::i3322_symmetry_generators;
        let rs = tests_support::i3322_fixture();
        let objective = tests_support::i3322_objective();
        let trivial = build_relaxation(
            &rs,
            &PermGroup::trivial(6),
            &EvaluationRules::real(),
            &objective,
            3,
            &RelaxOptions::default(),
        )
        .unwrap();
        assert_eq!(trivial.num_variables(), 867);
        let group = PermGroup::enumerate(i3322_symmetry_generators(), 1_000_000).unwrap();
        let relax = build_relaxation(
            &rs,
            &group,
            &EvaluationRules::real(),
            &objective,
            3,
            &RelaxOptions::default(),
        )
        .unwrap();
        assert_eq!(relax.num_variables(), 124);
        let sdp = assemble_sdp(&relax);
        // the central involution of the dihedral group balances the blocks
        let center = group
            .elements()
            .iter()
            .find(|g| g.images() == [2, 1, -3, 5, 4, -6])
            .unwrap();
        let action = relax.basis.action_of(center, &rs).unwrap();
        let split = split_order2(&sdp, &action, 1e-12).unwrap();
        assert_eq!(split.block_dims, vec![44, 44]);
    }

    #[test]
    fn assemble_chsh_symmetrized() {
        let (_, _, relax) = chsh_symmetrized();
        let sdp = assemble_sdp(&relax);
        assert_eq!(sdp.block_dims, vec![5]);
        assert_eq!(sdp.b, vec![4.0]);
        assert_eq!(sdp.constant_offset, 0.0);
        let c = sdp.c[0].to_dense();
        assert_eq!(c, DMatrix::identity(5, 5));
        let a = sdp.a[0][0].to_dense();
        let mut expected = DMatrix::zeros(5, 5);
        for (j, k, v) in [(1, 3, 1.0), (1, 4, 1.0), (2, 3, 1.0), (2, 4, -1.0)] {
            expected[(j, k)] = v;
            expected[(k, j)] = v;
        }
        assert_eq!(a, expected);
    }

    #[test]
    fn split_under_global_sign_flip() {
        let (rs, group, relax) = chsh_symmetrized();
        let sdp = assemble_sdp(&relax);
        let flip = group
            .elements()
            .iter()
            .find(|g| g.images() == [-1, -2, -3, -4])
            .unwrap();
        let action = relax.basis.action_of(flip, &rs).unwrap();
        assert_eq!(action, vec![1, -2, -3, -4, -5]);
        let split = split_order2(&sdp, &action, 1e-12).unwrap();
        assert_eq!(split.block_dims, vec![1, 4]);
        // the constant block is [1]; the antisymmetric block keeps the
        // whole correlation structure
        assert_eq!(split.c[0].to_dense()[(0, 0)], 1.0);
        assert_eq!(split.c[1].to_dense(), DMatrix::identity(4, 4));
    }

    #[test]
    fn split_preserves_spectrum() {
        use rand::{Rng, SeedableRng};
        let (rs, group, relax) = chsh_symmetrized();
        let sdp = assemble_sdp(&relax);
        let swap = group
            .elements()
            .iter()
            .find(|g| g.images() == [3, 4, 1, 2])
            .unwrap();
        let action = relax.basis.action_of(swap, &rs).unwrap();
        let split = split_order2(&sdp, &action, 1e-12).unwrap();
        assert_eq!(split.block_dims.iter().sum::<usize>(), 5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let y: Vec<f64> = (0..sdp.b.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut full = sdp.c[0].to_dense();
            for (v, &yv) in y.iter().enumerate() {
                full += sdp.a[v][0].to_dense() * yv;
            }
            let mut full_eigs: Vec<f64> =
                full.symmetric_eigenvalues().iter().copied().collect();
            full_eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut split_eigs: Vec<f64> = Vec::new();
            for blk in 0..2 {
                let mut m = split.c[blk].to_dense();
                for (v, &yv) in y.iter().enumerate() {
                    m += split.a[v][blk].to_dense() * yv;
                }
                split_eigs.extend(m.symmetric_eigenvalues().iter());
            }
            split_eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in full_eigs.iter().zip(split_eigs.iter()) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn split_rejects_non_involutions() {
        let (rs, group, relax) = chsh_symmetrized();
        let sdp = assemble_sdp(&relax);
        let identity = relax
            .basis
            .action_of(&GeneralizedPermutation::identity(4), &rs)
            .unwrap();
        assert!(matches!(
            split_order2(&sdp, &identity, 1e-12),
            Err(RelaxError::NotOrderTwo)
        ));
        // an order-4 element of the ambient group
        let quarter = group
            .elements()
            .iter()
            .find(|g| crate::symmetry::PermGroup::element_order(g) == 4)
            .unwrap();
        if let Ok(action) = relax.basis.action_of(quarter, &rs) {
            assert!(matches!(
                split_order2(&sdp, &action, 1e-12),
                Err(RelaxError::NotOrderTwo)
            ));
        }
    }

    #[test]
    fn split_rejects_non_symmetries() {
        // a permutation that is order 2 on the basis but not a symmetry of
        // the program couples the blocks
        let rs = chsh_fixture();
        let relax = build_relaxation(
            &rs,
            &PermGroup::trivial(4),
            &EvaluationRules::real(),
            &chsh_objective(),
            1,
            &RelaxOptions::default(),
        )
        .unwrap();
        let sdp = assemble_sdp(&relax);
        let swap_a = GeneralizedPermutation::new(vec![2, 1, 3, 4]).unwrap();
        let action = relax.basis.action_of(&swap_a, &rs).unwrap();
        assert!(matches!(
            split_order2(&sdp, &action, 1e-12),
            Err(RelaxError::SplitCoupling { .. })
        ));
    }

    #[test]
    fn degree_overflow_reported() {
        let rs = RewriteSystem::free(Alphabet::plain(2));
        let mut p = Polynomial::zero();
        p.add_term(
            &SignedWord::positive(Word::from_letters(vec![1, 2, 1])),
            rat(1),
        );
        let r = build_relaxation(
            &rs,
            &PermGroup::trivial(2),
            &EvaluationRules::real(),
            &p,
            1,
            &RelaxOptions::default(),
        );
        assert!(matches!(r, Err(RelaxError::DegreeOverflow { degree: 3, .. })));
    }

    #[test]
    fn unrepresentable_objective_reported() {
        let rs = chsh_fixture();
        let group = PermGroup::enumerate(chsh_symmetry_generators(), 1_000_000).unwrap();
        let mut p = Polynomial::zero();
        p.add_term(&SignedWord::positive(Word::single(1)), rat(1));
        let r = build_relaxation(
            &rs,
            &group,
            &EvaluationRules::real(),
            &p,
            1,
            &RelaxOptions::default(),
        );
        assert!(matches!(r, Err(RelaxError::NotRepresentable(_))));
    }
}
