//! Generalized permutations (signed letter maps), their groups, and the
//! symmetry subgroup of an objective polynomial.
//!
//! A generalized permutation maps letter `i` to `±images[i-1]`; it acts on
//! words letter by letter, accumulating signs, and extends to polynomials.
//! Groups are materialized by breadth-first closure under composition with a
//! configurable size cap.

use crate::algebra::{Alphabet, LetterId, Polynomial, Sign, SignedWord, Word};
use crate::evaluation::{canonical, ClosureError, EvaluationRules};
use crate::rewrite::{RewriteError, RewriteSystem};
use num::BigRational;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashSet, VecDeque};

#[derive(Debug, thiserror::Error)]
pub enum GroupError {
    #[error("images {0:?} do not describe a bijection on letters")]
    NotBijection(Vec<i32>),
    #[error("permutation does not commute with the adjoint involution")]
    AdjointMismatch,
    #[error("group enumeration exceeded the cap of {0} elements")]
    CapExceeded(usize),
    #[error("filtered element set is not closed under composition")]
    NotClosed,
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Closure(#[from] ClosureError),
}

/// A signed permutation of the letters: letter `i` maps to the letter
/// `|images[i-1]|` with sign `sgn(images[i-1])`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GeneralizedPermutation {
    images: Vec<i32>, // 1-based magnitudes, never zero
}

impl GeneralizedPermutation {
    pub fn identity(n: usize) -> GeneralizedPermutation {
        GeneralizedPermutation { images: (1..=n as i32).collect() }
    }

    /// Validates that the magnitudes form a bijection on `1..=n`.
    pub fn new(images: Vec<i32>) -> Result<GeneralizedPermutation, GroupError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &v in &images {
            let mag = v.unsigned_abs() as usize;
            if v == 0 || mag == 0 || mag > n || seen[mag - 1] {
                return Err(GroupError::NotBijection(images.clone()));
            }
            seen[mag - 1] = true;
        }
        Ok(GeneralizedPermutation { images })
    }

    pub fn size(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[i32] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &v)| v == i as i32 + 1)
    }

    /// Signed image of a letter; input may itself be signed.
    pub fn apply_letter(&self, letter: i32) -> i32 {
        let img = self.images[(letter.unsigned_abs() - 1) as usize];
        if letter < 0 {
            -img
        } else {
            img
        }
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &GeneralizedPermutation) -> GeneralizedPermutation {
        let images = other.images.iter().map(|&v| self.apply_letter(v)).collect();
        GeneralizedPermutation { images }
    }

    pub fn inverse(&self) -> GeneralizedPermutation {
        let mut images = vec![0; self.images.len()];
        for (i, &v) in self.images.iter().enumerate() {
            let mag = v.unsigned_abs() as usize;
            images[mag - 1] = if v < 0 { -(i as i32 + 1) } else { i as i32 + 1 };
        }
        GeneralizedPermutation { images }
    }

    /// True when `pi(i*) = pi(i)*` for every letter.
    pub fn commutes_with_adjoint(&self, alphabet: &Alphabet) -> bool {
        (1..=self.images.len() as LetterId).all(|i| {
            let lhs = self.apply_letter(alphabet.adjoint_of(i) as i32);
            let img = self.apply_letter(i as i32);
            let rhs_mag = alphabet.adjoint_of(img.unsigned_abs() as LetterId) as i32;
            let rhs = if img < 0 { -rhs_mag } else { rhs_mag };
            lhs == rhs
        })
    }

    /// Letter-by-letter action with sign accumulation, without normalization.
    pub fn apply_signed_raw(&self, w: &SignedWord) -> SignedWord {
        match w {
            SignedWord::Zero => SignedWord::Zero,
            SignedWord::Term { sign, word } => {
                let mut out_sign = *sign;
                let letters = word
                    .letters()
                    .iter()
                    .map(|&l| {
                        let img = self.apply_letter(l as i32);
                        if img < 0 {
                            out_sign = out_sign.flip();
                        }
                        img.unsigned_abs() as LetterId
                    })
                    .collect();
                SignedWord::new(out_sign, Word::from_letters(letters))
            }
        }
    }

    /// Action on a signed word followed by reduction to normal form.
    pub fn apply_signed(
        &self,
        w: &SignedWord,
        rs: &RewriteSystem,
    ) -> Result<SignedWord, RewriteError> {
        rs.normal_form(&self.apply_signed_raw(w))
    }

    /// Action on a polynomial, term by term, with normalization.
    pub fn apply_poly(
        &self,
        p: &Polynomial,
        rs: &RewriteSystem,
    ) -> Result<Polynomial, RewriteError> {
        let mut out = Polynomial::zero();
        for (w, c) in p.terms() {
            let img = self.apply_signed(&SignedWord::positive(w.clone()), rs)?;
            out.add_term(&img, c.clone());
        }
        Ok(out)
    }
}

/// A finite group of generalized permutations with all elements materialized.
/// Element 0 is always the identity; the order of the remaining elements is
/// the deterministic breadth-first discovery order.
#[derive(Clone, Debug)]
pub struct PermGroup {
    generators: Vec<GeneralizedPermutation>,
    elements: Vec<GeneralizedPermutation>,
}

impl PermGroup {
    /// The trivial group on `n` letters.
    pub fn trivial(n: usize) -> PermGroup {
        PermGroup {
            generators: Vec::new(),
            elements: vec![GeneralizedPermutation::identity(n)],
        }
    }

    /// Closes the generating set under composition by breadth-first search,
    /// aborting when more than `cap` elements are discovered.
    pub fn enumerate(
        generators: Vec<GeneralizedPermutation>,
        cap: usize,
    ) -> Result<PermGroup, GroupError> {
        let n = generators.first().map(|g| g.size()).unwrap_or(0);
        if generators.is_empty() {
            return Ok(PermGroup::trivial(n));
        }
        let identity = GeneralizedPermutation::identity(n);
        let mut seen: HashSet<Vec<i32>> = HashSet::new();
        let mut elements = Vec::new();
        let mut queue = VecDeque::new();
        seen.insert(identity.images.clone());
        elements.push(identity.clone());
        queue.push_back(identity);
        while let Some(e) = queue.pop_front() {
            for g in &generators {
                let next = g.compose(&e);
                if seen.insert(next.images.clone()) {
                    if elements.len() >= cap {
                        return Err(GroupError::CapExceeded(cap));
                    }
                    elements.push(next.clone());
                    queue.push_back(next);
                }
            }
        }
        Ok(PermGroup { generators, elements })
    }

    /// Wraps an explicit element list, verifying closure under composition.
    pub fn from_elements(elements: Vec<GeneralizedPermutation>) -> Result<PermGroup, GroupError> {
        let seen: HashSet<&[i32]> = elements.iter().map(|e| e.images.as_slice()).collect();
        if seen.len() != elements.len() {
            return Err(GroupError::NotClosed);
        }
        for a in &elements {
            for b in &elements {
                if !seen.contains(a.compose(b).images.as_slice()) {
                    return Err(GroupError::NotClosed);
                }
            }
        }
        let generators = elements.clone();
        Ok(PermGroup { generators, elements })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[GeneralizedPermutation] {
        &self.elements
    }

    pub fn generators(&self) -> &[GeneralizedPermutation] {
        &self.generators
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }

    /// True when the group is abelian.
    pub fn is_abelian(&self) -> bool {
        self.elements.iter().all(|a| {
            self.elements
                .iter()
                .all(|b| a.compose(b) == b.compose(a))
        })
    }

    /// Smallest `k >= 1` with `g^k = id` for an element of this group.
    pub fn element_order(g: &GeneralizedPermutation) -> usize {
        let mut acc = g.clone();
        let mut k = 1;
        while !acc.is_identity() {
            acc = g.compose(&acc);
            k += 1;
        }
        k
    }
}

/// Rewrites a polynomial into its evaluation-canonical coefficient map:
/// every term is canonicalized under the evaluation rules alone (adjoint and
/// transposition/cyclic predicates, no group), signs folded into exact
/// coefficients. Terms whose moment is forced to zero are dropped.
fn eval_canonical_map(
    p: &Polynomial,
    eval: &EvaluationRules,
    rs: &RewriteSystem,
    cap: usize,
) -> Result<BTreeMap<Vec<LetterId>, BigRational>, ClosureError> {
    use num::Zero as _;
    let trivial = PermGroup::trivial(rs.alphabet().size());
    let mut out: BTreeMap<Vec<LetterId>, BigRational> = BTreeMap::new();
    for (w, c) in p.terms() {
        let canon = canonical(&SignedWord::positive(w.clone()), &trivial, eval, rs, cap)?;
        match canon {
            SignedWord::Zero => {}
            SignedWord::Term { sign, word } => {
                let coef = match sign {
                    Sign::Plus => c.clone(),
                    Sign::Minus => -c.clone(),
                };
                let entry = out
                    .entry(word.letters().to_vec())
                    .or_insert_with(BigRational::zero);
                *entry += coef;
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

/// Extracts the subgroup of `group` that leaves the objective `p` invariant:
/// the elements whose action on `p` has the same evaluation-canonical
/// coefficient map as `p` itself. This is exactly the stabilizer of the
/// partition of the invariant monomial set by canonical-moment equality.
///
/// The invariant monomial set (the closure of the monomials of `p` under the
/// group action) is materialized along the way, bounded by `cap`.
pub fn symmetry_subgroup(
    group: &PermGroup,
    p: &Polynomial,
    eval: &EvaluationRules,
    rs: &RewriteSystem,
    cap: usize,
) -> Result<PermGroup, GroupError> {
    // Materialize the invariant monomial set and check it is closed.
    let mut monomials: HashSet<Word> = HashSet::new();
    let mut queue: VecDeque<Word> = VecDeque::new();
    for (w, _) in p.terms() {
        if monomials.insert(w.clone()) {
            queue.push_back(w.clone());
        }
    }
    while let Some(w) = queue.pop_front() {
        for g in group.elements() {
            let img = g.apply_signed(&SignedWord::positive(w.clone()), rs)?;
            if let SignedWord::Term { word, .. } = img {
                if monomials.len() >= cap {
                    return Err(GroupError::CapExceeded(cap));
                }
                if monomials.insert(word.clone()) {
                    queue.push_back(word);
                }
            }
        }
    }
    for w in &monomials {
        for g in group.elements() {
            if let SignedWord::Term { word, .. } =
                g.apply_signed(&SignedWord::positive(w.clone()), rs)?
            {
                if !monomials.contains(&word) {
                    return Err(GroupError::NotClosed);
                }
            }
        }
    }

    let reference = eval_canonical_map(p, eval, rs, cap)?;
    let flags: Vec<Result<bool, GroupError>> = group
        .elements()
        .par_iter()
        .map(|g| {
            let moved = g.apply_poly(p, rs)?;
            Ok(eval_canonical_map(&moved, eval, rs, cap)? == reference)
        })
        .collect();
    let mut kept = Vec::new();
    for (g, flag) in group.elements().iter().zip(flags) {
        if flag? {
            kept.push(g.clone());
        }
    }
    PermGroup::from_elements(kept)
}


#[cfg(test)]
mod tests {
    use super::test_groups::*;
    use super::*;
    use crate::rewrite::tests_support::chsh_fixture;

    #[test]
    fn compose_and_inverse() {
        let pi3 = GeneralizedPermutation::new(vec![1, -2, 3, 4]).unwrap();
        assert!(pi3.compose(&pi3).is_identity());
        let pi1 = GeneralizedPermutation::new(vec![3, 4, 1, 2]).unwrap();
        assert!(pi1.compose(&pi1.inverse()).is_identity());
        // (pi1 ∘ pi3)(A1) = pi1(-A1) = -B1
        assert_eq!(pi1.compose(&pi3).apply_letter(2), -4);
    }

    #[test]
    fn rejects_non_bijection() {
        assert!(GeneralizedPermutation::new(vec![1, 1, 3, 4]).is_err());
        assert!(GeneralizedPermutation::new(vec![0, 2, 3, 4]).is_err());
        assert!(GeneralizedPermutation::new(vec![5, 2, 3, 4]).is_err());
    }

    #[test]
    fn chsh_ambient_group_has_order_128() {
        let g = PermGroup::enumerate(chsh_ambient_generators(), 1_000_000).unwrap();
        assert_eq!(g.order(), 128);
    }

    #[test]
    fn chsh_symmetry_group_has_order_16() {
        let g = PermGroup::enumerate(chsh_symmetry_generators(), 1_000_000).unwrap();
        assert_eq!(g.order(), 16);
    }

    #[test]
    fn cap_aborts_enumeration() {
        assert!(matches!(
            PermGroup::enumerate(chsh_ambient_generators(), 10),
            Err(GroupError::CapExceeded(10))
        ));
    }

    #[test]
    fn signed_action_flips_sign() {
        let rs = chsh_fixture();
        let pi3 = GeneralizedPermutation::new(vec![1, -2, 3, 4]).unwrap();
        let w = SignedWord::positive(Word::from_letters(vec![2, 4])); // A1 B1
        assert_eq!(
            pi3.apply_signed(&w, &rs).unwrap(),
            SignedWord::negative(Word::from_letters(vec![2, 4]))
        );
        assert!(pi3.apply_signed(&SignedWord::zero(), &rs).unwrap().is_zero());
    }

    #[test]
    fn action_normalizes() {
        let rs = chsh_fixture();
        let pi1 = GeneralizedPermutation::new(vec![3, 4, 1, 2]).unwrap();
        // party swap of A0*B0 gives B0*A0 which normalizes back to A0*B0
        let w = SignedWord::positive(Word::from_letters(vec![1, 3]));
        assert_eq!(pi1.apply_signed(&w, &rs).unwrap(), w);
    }

    #[test]
    fn composition_action_is_homomorphic() {
        use rand::{Rng, SeedableRng};
        let rs = chsh_fixture();
        let gens = chsh_ambient_generators();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = &gens[rng.gen_range(0..gens.len())];
            let b = &gens[rng.gen_range(0..gens.len())];
            let len = rng.gen_range(0..=6);
            let word = Word::from_letters((0..len).map(|_| rng.gen_range(1..=4)).collect());
            let sw = SignedWord::positive(word);
            let via_compose = a.compose(b).apply_signed(&sw, &rs).unwrap();
            let stepwise = a.apply_signed(&b.apply_signed(&sw, &rs).unwrap(), &rs).unwrap();
            assert_eq!(via_compose, stepwise);
        }
    }

    #[test]
    fn i3322_symmetry_group_is_dihedral_of_order_eight() {
        let group = PermGroup::enumerate(i3322_symmetry_generators(), 1_000_000).unwrap();
        assert_eq!(group.order(), 8);
        assert!(!group.is_abelian());
        assert!(group
            .elements()
            .iter()
            .any(|g| PermGroup::element_order(g) == 4));
    }
}
