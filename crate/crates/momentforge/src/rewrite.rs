//! Degree-2 rewrite systems over the free *-monoid.
//!
//! Every rule has a two-letter left-hand side and is stored in an `n x n`
//! code table; replacements have length at most two. Normal forms are
//! computed by a left-to-right scan that backs up one position after each
//! substitution. Confluence is checked empirically by reducing all short
//! words under several randomized rule-application orders.

use crate::algebra::{Alphabet, LetterId, Polynomial, Sign, SignedWord, Word};
use crate::symmetry::GeneralizedPermutation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::HashMap;

/// Action taken on an adjacent letter pair.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RuleCode {
    /// The pair annihilates the whole word.
    SetZero,
    /// No rule applies; the pair is already reduced.
    Preserve,
    /// The pair rewrites to the empty word.
    RemoveBoth,
    /// The pair `(i, j)` rewrites to `(j, i)`.
    Swap,
    /// The pair `(i, j)` rewrites to `i`.
    KeepFirstDropSecond,
    /// The pair rewrites to the word stored in the custom table.
    Custom,
}

#[derive(Debug, thiserror::Error)]
pub enum RewriteError {
    #[error("invalid rule {0}")]
    InvalidRule(String),
    #[error("rewriting exceeded its step budget on word {0:?}; the rule system does not terminate")]
    NonTerminating(Vec<LetterId>),
}

/// A complete degree-2 rewrite system over an alphabet.
#[derive(Clone, PartialEq, Debug)]
pub struct RewriteSystem {
    alphabet: Alphabet,
    codes: Vec<RuleCode>, // row-major n*n, (i, j) at (i-1)*n + (j-1)
    custom: HashMap<(LetterId, LetterId), Word>,
}

/// Incremental construction of a [`RewriteSystem`]: set one concrete rule per
/// letter pair, then validate the whole table with [`RewriteSystemBuilder::build`].
pub struct RewriteSystemBuilder {
    alphabet: Alphabet,
    codes: Vec<RuleCode>,
    custom: HashMap<(LetterId, LetterId), Word>,
}

impl RewriteSystemBuilder {
    pub fn new(alphabet: Alphabet) -> RewriteSystemBuilder {
        let n = alphabet.size();
        RewriteSystemBuilder {
            alphabet,
            codes: vec![RuleCode::Preserve; n * n],
            custom: HashMap::new(),
        }
    }

    fn idx(&self, i: LetterId, j: LetterId) -> usize {
        let n = self.alphabet.size();
        (i as usize - 1) * n + (j as usize - 1)
    }

    pub fn has_rule(&self, i: LetterId, j: LetterId) -> bool {
        self.codes[self.idx(i, j)] != RuleCode::Preserve
    }

    /// Declares the rule `i j -> rhs`, classifying it into a table code.
    /// The right-hand side must be unsigned (rules never change the sign),
    /// have length at most two, and differ from the left-hand side.
    pub fn set_rule(&mut self, i: LetterId, j: LetterId, rhs: &SignedWord) -> Result<(), RewriteError> {
        let name = |id: LetterId| self.alphabet.letter(id).display_name();
        let lhs_name = format!("{}*{}", name(i), name(j));
        let code = match rhs {
            SignedWord::Zero => RuleCode::SetZero,
            SignedWord::Term { sign: Sign::Minus, .. } => {
                return Err(RewriteError::InvalidRule(format!(
                    "{lhs_name}: replacements cannot carry a sign"
                )))
            }
            SignedWord::Term { sign: Sign::Plus, word } => {
                if word.letters() == [i, j] {
                    return Err(RewriteError::InvalidRule(format!(
                        "{lhs_name}: replacement equals the left-hand side"
                    )));
                }
                match word.letters() {
                    [] => RuleCode::RemoveBoth,
                    [a] if *a == i => RuleCode::KeepFirstDropSecond,
                    [a, b] if *a == j && *b == i => RuleCode::Swap,
                    w if w.len() <= 2 => {
                        self.custom.insert((i, j), word.clone());
                        RuleCode::Custom
                    }
                    _ => {
                        return Err(RewriteError::InvalidRule(format!(
                            "{lhs_name}: replacement has length {} but at most 2 is supported",
                            word.len()
                        )))
                    }
                }
            }
        };
        let at = self.idx(i, j);
        self.codes[at] = code;
        Ok(())
    }

    /// Validates that every replacement is itself in normal form and that
    /// rewriting terminates on all rule right-hand sides.
    pub fn build(self) -> Result<RewriteSystem, RewriteError> {
        let rs = RewriteSystem {
            alphabet: self.alphabet,
            codes: self.codes,
            custom: self.custom,
        };
        for (lhs, rhs) in rs.expanded_rules() {
            let nf = rs.normal_form(&rhs)?;
            if nf != rhs {
                return Err(RewriteError::InvalidRule(format!(
                    "replacement for {} is not in normal form",
                    rs.alphabet.display_word(&lhs)
                )));
            }
        }
        Ok(rs)
    }
}

/// Step budget: generous for genuinely terminating systems, small enough to
/// detect rewrite loops quickly.
fn step_budget(len: usize) -> u64 {
    256 + 32 * (len as u64).pow(3)
}

impl RewriteSystem {
    /// The free system: no rules at all.
    pub fn free(alphabet: Alphabet) -> RewriteSystem {
        RewriteSystemBuilder::new(alphabet).build().expect("free system is valid")
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn code(&self, i: LetterId, j: LetterId) -> RuleCode {
        let n = self.alphabet.size();
        self.codes[(i as usize - 1) * n + (j as usize - 1)]
    }

    pub fn custom_replacement(&self, i: LetterId, j: LetterId) -> Option<&Word> {
        self.custom.get(&(i, j))
    }

    /// Number of letter pairs with a rule attached.
    pub fn rule_count(&self) -> usize {
        self.codes.iter().filter(|c| **c != RuleCode::Preserve).count()
    }

    /// All concrete rules `(lhs, rhs)` in the table, in letter-pair order.
    pub fn expanded_rules(&self) -> Vec<(Word, SignedWord)> {
        let n = self.alphabet.size() as LetterId;
        let mut out = Vec::new();
        for i in 1..=n {
            for j in 1..=n {
                let rhs = match self.code(i, j) {
                    RuleCode::Preserve => continue,
                    RuleCode::SetZero => SignedWord::zero(),
                    RuleCode::RemoveBoth => SignedWord::one(),
                    RuleCode::Swap => SignedWord::positive(Word::from_letters(vec![j, i])),
                    RuleCode::KeepFirstDropSecond => SignedWord::positive(Word::single(i)),
                    RuleCode::Custom => {
                        SignedWord::positive(self.custom[&(i, j)].clone())
                    }
                };
                out.push((Word::from_letters(vec![i, j]), rhs));
            }
        }
        out
    }

    /// Reduces a signed word to its normal form. Rules never touch the sign;
    /// the zero element is already normal. Errors only when the rule system
    /// fails to terminate (caught by a step budget).
    pub fn normal_form(&self, w: &SignedWord) -> Result<SignedWord, RewriteError> {
        let (sign, word) = match w {
            SignedWord::Zero => return Ok(SignedWord::Zero),
            SignedWord::Term { sign, word } => (*sign, word),
        };
        let mut letters: Vec<LetterId> = word.letters().to_vec();
        let mut fuel = step_budget(letters.len());
        let mut i = 0usize;
        while letters.len() >= 2 && i + 1 < letters.len() {
            match self.code(letters[i], letters[i + 1]) {
                RuleCode::Preserve => {
                    i += 1;
                    continue;
                }
                RuleCode::SetZero => return Ok(SignedWord::Zero),
                code => {
                    if fuel == 0 {
                        return Err(RewriteError::NonTerminating(word.letters().to_vec()));
                    }
                    fuel -= 1;
                    match code {
                        RuleCode::RemoveBoth => {
                            letters.drain(i..i + 2);
                        }
                        RuleCode::Swap => letters.swap(i, i + 1),
                        RuleCode::KeepFirstDropSecond => {
                            letters.remove(i + 1);
                        }
                        RuleCode::Custom => {
                            let repl = &self.custom[&(letters[i], letters[i + 1])];
                            letters.splice(i..i + 2, repl.letters().iter().copied());
                        }
                        RuleCode::Preserve | RuleCode::SetZero => unreachable!(),
                    }
                    i = i.saturating_sub(1);
                }
            }
        }
        Ok(SignedWord::new(sign, Word::from_letters(letters)))
    }

    /// Normal form of an unsigned word taken with positive sign.
    pub fn normal_form_word(&self, w: &Word) -> Result<SignedWord, RewriteError> {
        self.normal_form(&SignedWord::positive(w.clone()))
    }

    /// Reduces every term of a polynomial to normal form, merging collisions.
    pub fn normalize_poly(&self, p: &Polynomial) -> Result<Polynomial, RewriteError> {
        let mut out = Polynomial::zero();
        for (w, c) in p.terms() {
            let nf = self.normal_form_word(w)?;
            out.add_term(&nf, c.clone());
        }
        Ok(out)
    }

    /// Product of two polynomials with term-wise normalization.
    pub fn mul_poly(&self, a: &Polynomial, b: &Polynomial) -> Result<Polynomial, RewriteError> {
        let mut out = Polynomial::zero();
        for (wa, ca) in a.terms() {
            for (wb, cb) in b.terms() {
                let nf = self.normal_form_word(&wa.concat(wb))?;
                out.add_term(&nf, ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    /// Checks that a signed permutation maps every rewrite rule to a valid
    /// identity: for each rule `v -> w`, the images must share a normal form,
    /// signs included. Rule-level agreement extends to the whole congruence.
    pub fn check_compatibility(&self, pi: &GeneralizedPermutation) -> Result<bool, RewriteError> {
        for (lhs, rhs) in self.expanded_rules() {
            let lhs_img = pi.apply_signed_raw(&SignedWord::positive(lhs));
            let rhs_img = pi.apply_signed_raw(&rhs);
            if self.normal_form(&lhs_img)? != self.normal_form(&rhs_img)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Reduces a word by repeatedly applying a rule at a randomly chosen
    /// applicable position. Returns `None` when the budget is exhausted.
    fn random_reduce(&self, word: &Word, rng: &mut ChaCha8Rng) -> Option<SignedWord> {
        let mut letters: Vec<LetterId> = word.letters().to_vec();
        let mut fuel = step_budget(letters.len());
        loop {
            let mut applicable: Vec<usize> = Vec::new();
            for i in 0..letters.len().saturating_sub(1) {
                if self.code(letters[i], letters[i + 1]) != RuleCode::Preserve {
                    applicable.push(i);
                }
            }
            if applicable.is_empty() {
                return Some(SignedWord::positive(Word::from_letters(letters)));
            }
            if fuel == 0 {
                return None;
            }
            fuel -= 1;
            let i = applicable[rng.gen_range(0..applicable.len())];
            match self.code(letters[i], letters[i + 1]) {
                RuleCode::Preserve => unreachable!(),
                RuleCode::SetZero => return Some(SignedWord::Zero),
                RuleCode::RemoveBoth => {
                    letters.drain(i..i + 2);
                }
                RuleCode::Swap => letters.swap(i, i + 1),
                RuleCode::KeepFirstDropSecond => {
                    letters.remove(i + 1);
                }
                RuleCode::Custom => {
                    let repl = &self.custom[&(letters[i], letters[i + 1])];
                    letters.splice(i..i + 2, repl.letters().iter().copied());
                }
            }
        }
    }

    /// Empirical confluence check: every word up to `max_len` is reduced by
    /// the deterministic scan and under several randomized rule-application
    /// orders; any disagreement is reported with both normal forms.
    pub fn check_confluence(&self, max_len: usize) -> ConfluenceReport {
        const RANDOM_ORDERS: u64 = 4;
        const WORD_CAP: usize = 4_000_000;
        let n = self.alphabet.size() as u128;
        let mut words: Vec<Word> = Vec::new();
        let mut truncated = false;
        'outer: for len in 2..=max_len {
            if n == 0 {
                break;
            }
            let count = n.checked_pow(len as u32).unwrap_or(u128::MAX);
            let mut idx: u128 = 0;
            while idx < count {
                if words.len() >= WORD_CAP {
                    truncated = true;
                    break 'outer;
                }
                let mut letters = vec![0 as LetterId; len];
                let mut rem = idx;
                for p in (0..len).rev() {
                    letters[p] = (rem % n) as LetterId + 1;
                    rem /= n;
                }
                words.push(Word::from_letters(letters));
                idx += 1;
            }
        }
        let words_checked = words.len();
        let mut issues: Vec<ConfluenceIssue> = words
            .par_iter()
            .flat_map_iter(|word| {
                let mut found: Vec<ConfluenceIssue> = Vec::new();
                let reference = match self.normal_form_word(word) {
                    Ok(nf) => nf,
                    Err(_) => {
                        found.push(ConfluenceIssue::NonTerminating { word: word.clone() });
                        return found.into_iter();
                    }
                };
                let mut seed_hash = 0xcbf29ce484222325u64;
                for &l in word.letters() {
                    seed_hash = (seed_hash ^ l as u64).wrapping_mul(0x100000001b3);
                }
                for k in 0..RANDOM_ORDERS {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed_hash.wrapping_add(k));
                    match self.random_reduce(word, &mut rng) {
                        None => {
                            found.push(ConfluenceIssue::NonTerminating { word: word.clone() });
                            break;
                        }
                        Some(nf) if nf != reference => {
                            found.push(ConfluenceIssue::Divergent {
                                word: word.clone(),
                                first: reference.clone(),
                                second: nf,
                            });
                            break;
                        }
                        Some(_) => {}
                    }
                }
                found.into_iter()
            })
            .collect();
        issues.truncate(64); // a handful of witnesses is plenty
        ConfluenceReport { words_checked, issues, truncated }
    }
}

/// One confluence violation witness.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ConfluenceIssue {
    /// Two reduction orders produced distinct normal forms.
    Divergent { word: Word, first: SignedWord, second: SignedWord },
    /// Reduction of this word did not terminate within the step budget.
    NonTerminating { word: Word },
}

/// Result of an empirical confluence check.
#[derive(Clone, Debug)]
pub struct ConfluenceReport {
    pub words_checked: usize,
    pub issues: Vec<ConfluenceIssue>,
    pub truncated: bool,
}

impl ConfluenceReport {
    pub fn is_confluent(&self) -> bool {
        self.issues.is_empty()
    }
}
