//! Evaluation equivalences on moments and canonical representatives.
//!
//! Moments of distinct words can be forced equal by the evaluation map: a
//! real evaluation identifies `y[w] = y[w*]`, a transposition predicate
//! reverses-and-adjoints the matching subsequence in place, and a cyclic
//! predicate rotates it by one. Together with the symmetry group action these
//! moves generate an equivalence class per word; the canonical representative
//! is its graded-lexicographic minimum, or zero when the class identifies a
//! word with its own negation.

use crate::algebra::{signed_grlex_compare, LetterId, SignedWord, Word};
use crate::algebra::{Alphabet, Sign};
use crate::rewrite::{RewriteError, RewriteSystem};
use crate::symmetry::PermGroup;
use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};

/// Per-letter predicate: `pred[i-1]` tells whether letter `i` participates.
pub type LetterPredicate = Vec<bool>;

/// The evaluation structure of a problem.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EvaluationRules {
    /// Identify `y[w]` with `y[w*]` (real moments).
    pub real_adjoint: bool,
    /// Subsets of letters that can be transposed in place.
    pub transpose_predicates: Vec<LetterPredicate>,
    /// Subsets of letters whose subsequence can be cyclically rotated.
    pub cyclic_predicates: Vec<LetterPredicate>,
}

impl EvaluationRules {
    /// Real evaluation with no extra predicates; the common case.
    pub fn real() -> EvaluationRules {
        EvaluationRules {
            real_adjoint: true,
            transpose_predicates: Vec::new(),
            cyclic_predicates: Vec::new(),
        }
    }

    pub fn predicate_from_families(alphabet: &Alphabet, families: &[String]) -> LetterPredicate {
        alphabet
            .letters()
            .iter()
            .map(|l| families.iter().any(|f| *f == l.family))
            .collect()
    }

    pub fn predicate_all(alphabet: &Alphabet) -> LetterPredicate {
        vec![true; alphabet.size()]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClosureError {
    #[error("canonicalization closure exceeded the cap of {0} words")]
    CapExceeded(usize),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

/// Reverses the subsequence of letters satisfying the predicate and replaces
/// each by its adjoint, leaving all other positions untouched. The sign is
/// unchanged.
pub fn apply_transpose(
    w: &SignedWord,
    pred: &[bool],
    alphabet: &Alphabet,
) -> SignedWord {
    match w {
        SignedWord::Zero => SignedWord::Zero,
        SignedWord::Term { sign, word } => {
            let mut letters: Vec<LetterId> = word.letters().to_vec();
            let positions: Vec<usize> = (0..letters.len())
                .filter(|&i| pred[(letters[i] - 1) as usize])
                .collect();
            let replaced: Vec<LetterId> = positions
                .iter()
                .rev()
                .map(|&i| alphabet.adjoint_of(letters[i]))
                .collect();
            for (&i, &l) in positions.iter().zip(replaced.iter()) {
                letters[i] = l;
            }
            SignedWord::new(*sign, Word::from_letters(letters))
        }
    }
}

/// Rotates the subsequence of letters satisfying the predicate one step to
/// the left, leaving all other positions untouched. The sign is unchanged.
pub fn apply_cyclic(w: &SignedWord, pred: &[bool]) -> SignedWord {
    match w {
        SignedWord::Zero => SignedWord::Zero,
        SignedWord::Term { sign, word } => {
            let mut letters: Vec<LetterId> = word.letters().to_vec();
            let positions: Vec<usize> = (0..letters.len())
                .filter(|&i| pred[(letters[i] - 1) as usize])
                .collect();
            if positions.len() >= 2 {
                let mut rotated: Vec<LetterId> =
                    positions[1..].iter().map(|&i| letters[i]).collect();
                rotated.push(letters[positions[0]]);
                for (&i, &l) in positions.iter().zip(rotated.iter()) {
                    letters[i] = l;
                }
            }
            SignedWord::new(*sign, Word::from_letters(letters))
        }
    }
}

/// Canonical representative of the moment-equivalence class of `w`: the
/// breadth-first closure of `w` under the adjoint (if the evaluation is
/// real), every group element, and every transposition/cyclic predicate,
/// re-normalizing after each move. Returns the graded-lexicographic minimum,
/// or zero when any unsigned word occurs with both signs (the moment is then
/// forced to vanish) or when the class reaches the zero word.
pub fn canonical(
    w: &SignedWord,
    group: &PermGroup,
    eval: &EvaluationRules,
    rs: &RewriteSystem,
    cap: usize,
) -> Result<SignedWord, ClosureError> {
    let start = rs.normal_form(w)?;
    let (sign, word) = match start {
        SignedWord::Zero => return Ok(SignedWord::Zero),
        SignedWord::Term { sign, word } => (sign, word),
    };
    let alphabet = rs.alphabet();
    let mut seen: HashMap<Word, Sign> = HashMap::new();
    let mut queue: VecDeque<SignedWord> = VecDeque::new();
    let mut minimum = SignedWord::new(sign, word.clone());
    seen.insert(word.clone(), sign);
    queue.push_back(minimum.clone());

    let visit = |sw: SignedWord,
                     seen: &mut HashMap<Word, Sign>,
                     queue: &mut VecDeque<SignedWord>,
                     minimum: &mut SignedWord|
     -> Result<bool, ClosureError> {
        // returns true when the whole class collapses to zero
        match sw {
            SignedWord::Zero => Ok(true),
            SignedWord::Term { sign, word } => {
                match seen.get(&word) {
                    Some(&prev) if prev != sign => return Ok(true),
                    Some(_) => return Ok(false),
                    None => {}
                }
                if seen.len() >= cap {
                    return Err(ClosureError::CapExceeded(cap));
                }
                seen.insert(word.clone(), sign);
                let sw = SignedWord::new(sign, word);
                if signed_grlex_compare(&sw, minimum) == Ordering::Less {
                    *minimum = sw.clone();
                }
                queue.push_back(sw);
                Ok(false)
            }
        }
    };

    while let Some(current) = queue.pop_front() {
        if eval.real_adjoint {
            let img = rs.normal_form(&current.adjoint(alphabet))?;
            if visit(img, &mut seen, &mut queue, &mut minimum)? {
                return Ok(SignedWord::Zero);
            }
        }
        for g in group.elements() {
            let img = g.apply_signed(&current, rs)?;
            if visit(img, &mut seen, &mut queue, &mut minimum)? {
                return Ok(SignedWord::Zero);
            }
        }
        for pred in &eval.transpose_predicates {
            let img = rs.normal_form(&apply_transpose(&current, pred, alphabet))?;
            if visit(img, &mut seen, &mut queue, &mut minimum)? {
                return Ok(SignedWord::Zero);
            }
        }
        for pred in &eval.cyclic_predicates {
            let img = rs.normal_form(&apply_cyclic(&current, pred))?;
            if visit(img, &mut seen, &mut queue, &mut minimum)? {
                return Ok(SignedWord::Zero);
            }
        }
    }
    Ok(minimum)
}
