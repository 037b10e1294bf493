//! Free *-monoid with signs: letters, words, signed words and polynomials.
//!
//! Letters are 1-based integer ids into an [`Alphabet`]. A [`Word`] is a plain
//! product of letters; a [`SignedWord`] additionally carries a sign or is the
//! distinguished zero element that absorbs products. Polynomials map words to
//! exact rational coefficients.

use num::BigRational;
use num::{One, Signed as _, Zero as _};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// 1-based letter id. Id 0 is never a letter.
pub type LetterId = u16;

/// Sign of a word or letter image, `+1` or `-1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_i32(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn of_i32(v: i32) -> Sign {
        if v < 0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// An unsigned word over the alphabet: a (possibly empty) product of letters.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Word {
    letters: Vec<LetterId>,
}

impl Word {
    pub fn empty() -> Word {
        Word { letters: Vec::new() }
    }

    pub fn from_letters(letters: Vec<LetterId>) -> Word {
        debug_assert!(letters.iter().all(|&l| l != 0));
        Word { letters }
    }

    pub fn single(letter: LetterId) -> Word {
        Word::from_letters(vec![letter])
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[LetterId] {
        &self.letters
    }

    /// Concatenation `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = Vec::with_capacity(self.len() + other.len());
        letters.extend_from_slice(&self.letters);
        letters.extend_from_slice(&other.letters);
        Word { letters }
    }

    /// Reverses the word and maps each letter to its adjoint.
    pub fn adjoint(&self, alphabet: &Alphabet) -> Word {
        let letters = self
            .letters
            .iter()
            .rev()
            .map(|&l| alphabet.adjoint_of(l))
            .collect();
        Word { letters }
    }
}

/// Graded lexicographic comparison: shorter words come first; words of equal
/// length compare lexicographically by letter id from the front.
pub fn grlex_compare(a: &Word, b: &Word) -> Ordering {
    a.len()
        .cmp(&b.len())
        .then_with(|| a.letters.cmp(&b.letters))
}

/// Graded reverse lexicographic comparison: shorter words first; words of
/// equal length compare from the last position backwards with the letter
/// order reversed. Used for polynomial term iteration.
pub fn grevlex_compare(a: &Word, b: &Word) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        for (x, y) in a.letters.iter().rev().zip(b.letters.iter().rev()) {
            match x.cmp(y) {
                Ordering::Equal => continue,
                ord => return ord.reverse(),
            }
        }
        Ordering::Equal
    })
}

/// A word with a sign, or the absorbing zero element.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum SignedWord {
    Zero,
    Term { sign: Sign, word: Word },
}

impl SignedWord {
    pub fn zero() -> SignedWord {
        SignedWord::Zero
    }

    pub fn one() -> SignedWord {
        SignedWord::positive(Word::empty())
    }

    pub fn positive(word: Word) -> SignedWord {
        SignedWord::Term { sign: Sign::Plus, word }
    }

    pub fn negative(word: Word) -> SignedWord {
        SignedWord::Term { sign: Sign::Minus, word }
    }

    pub fn new(sign: Sign, word: Word) -> SignedWord {
        SignedWord::Term { sign, word }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SignedWord::Zero)
    }

    /// Sign, or `None` for zero.
    pub fn sign(&self) -> Option<Sign> {
        match self {
            SignedWord::Zero => None,
            SignedWord::Term { sign, .. } => Some(*sign),
        }
    }

    /// Underlying word, or `None` for zero.
    pub fn word(&self) -> Option<&Word> {
        match self {
            SignedWord::Zero => None,
            SignedWord::Term { word, .. } => Some(word),
        }
    }

    pub fn negate(self) -> SignedWord {
        match self {
            SignedWord::Zero => SignedWord::Zero,
            SignedWord::Term { sign, word } => SignedWord::Term { sign: sign.flip(), word },
        }
    }

    /// Concatenation with sign multiplication; zero absorbs.
    pub fn concat(&self, other: &SignedWord) -> SignedWord {
        match (self, other) {
            (SignedWord::Zero, _) | (_, SignedWord::Zero) => SignedWord::Zero,
            (
                SignedWord::Term { sign: sa, word: wa },
                SignedWord::Term { sign: sb, word: wb },
            ) => SignedWord::Term { sign: *sa * *sb, word: wa.concat(wb) },
        }
    }

    /// Adjoint: reverses the word, adjoints each letter, keeps the sign.
    pub fn adjoint(&self, alphabet: &Alphabet) -> SignedWord {
        match self {
            SignedWord::Zero => SignedWord::Zero,
            SignedWord::Term { sign, word } => SignedWord::Term {
                sign: *sign,
                word: word.adjoint(alphabet),
            },
        }
    }
}

/// Total order on signed words: graded lexicographic on the words, the sign
/// compared last only to make the order total (`+` before `-`).
///
/// Zero is a contract violation here: orderings are only used on the nonzero
/// representatives of equivalence classes.
pub fn signed_grlex_compare(a: &SignedWord, b: &SignedWord) -> Ordering {
    match (a, b) {
        (
            SignedWord::Term { sign: sa, word: wa },
            SignedWord::Term { sign: sb, word: wb },
        ) => grlex_compare(wa, wb).then(sa.cmp(sb)),
        _ => panic!("signed_grlex_compare: zero operand"),
    }
}

/// One letter of an alphabet: a family name plus integer indices, e.g. `A[1]`
/// or `A[1,2]`. Display names are `A1` for single-index letters and `A(1,2)`
/// for multi-index ones.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Letter {
    pub family: String,
    pub indices: Vec<i64>,
}

impl Letter {
    pub fn display_name(&self) -> String {
        match self.indices.len() {
            0 => self.family.clone(),
            1 if self.indices[0] >= 0 => format!("{}{}", self.family, self.indices[0]),
            _ => {
                let idx: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
                format!("{}({})", self.family, idx.join(","))
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AlphabetError {
    #[error("adjoint map is not an involution: letter {0} maps to {1} but {1} maps to {2}")]
    NotInvolution(LetterId, LetterId, LetterId),
    #[error("adjoint map refers to letter {0} which does not exist")]
    BadAdjoint(LetterId),
    #[error("duplicate letter {0}")]
    DuplicateLetter(String),
}

/// The alphabet: an ordered list of letters together with the adjoint
/// involution `i -> i*`. Hermitian letters satisfy `i* = i`.
#[derive(Clone, PartialEq, Debug)]
pub struct Alphabet {
    letters: Vec<Letter>,
    adjoint: Vec<LetterId>, // adjoint[i-1] = i*
}

impl Alphabet {
    /// Builds an alphabet; `adjoint[k]` is the 1-based adjoint of letter `k+1`.
    pub fn new(letters: Vec<Letter>, adjoint: Vec<LetterId>) -> Result<Alphabet, AlphabetError> {
        assert_eq!(letters.len(), adjoint.len());
        let n = letters.len() as u32;
        let mut seen = std::collections::HashSet::new();
        for l in &letters {
            if !seen.insert(l.display_name()) {
                return Err(AlphabetError::DuplicateLetter(l.display_name()));
            }
        }
        for (i, &a) in adjoint.iter().enumerate() {
            if a == 0 || a as u32 > n {
                return Err(AlphabetError::BadAdjoint(a));
            }
            let back = adjoint[(a - 1) as usize];
            if back as usize != i + 1 {
                return Err(AlphabetError::NotInvolution(i as LetterId + 1, a, back));
            }
        }
        Ok(Alphabet { letters, adjoint })
    }

    /// All-Hermitian alphabet (every letter self-adjoint).
    pub fn hermitian(letters: Vec<Letter>) -> Result<Alphabet, AlphabetError> {
        let adjoint = (1..=letters.len() as LetterId).collect();
        Alphabet::new(letters, adjoint)
    }

    /// Convenience for tests: `n` Hermitian letters named `x1..xn`.
    pub fn plain(n: usize) -> Alphabet {
        let letters = (1..=n as i64)
            .map(|i| Letter { family: "x".into(), indices: vec![i] })
            .collect();
        Alphabet::hermitian(letters).expect("plain alphabet is valid")
    }

    pub fn size(&self) -> usize {
        self.letters.len()
    }

    pub fn letter(&self, id: LetterId) -> &Letter {
        &self.letters[(id - 1) as usize]
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn adjoint_of(&self, id: LetterId) -> LetterId {
        self.adjoint[(id - 1) as usize]
    }

    pub fn is_hermitian_letter(&self, id: LetterId) -> bool {
        self.adjoint_of(id) == id
    }

    /// Looks a letter up by family name and indices.
    pub fn find(&self, family: &str, indices: &[i64]) -> Option<LetterId> {
        self.letters
            .iter()
            .position(|l| l.family == family && l.indices == indices)
            .map(|p| p as LetterId + 1)
    }

    /// Renders a word as `A0*B1`, with `1` for the empty word.
    pub fn display_word(&self, word: &Word) -> String {
        if word.is_empty() {
            return "1".to_string();
        }
        word.letters()
            .iter()
            .map(|&l| self.letter(l).display_name())
            .collect::<Vec<_>>()
            .join("*")
    }

    pub fn display_signed(&self, sw: &SignedWord) -> String {
        match sw {
            SignedWord::Zero => "0".to_string(),
            SignedWord::Term { sign: Sign::Plus, word } => self.display_word(word),
            SignedWord::Term { sign: Sign::Minus, word } => {
                format!("-{}", self.display_word(word))
            }
        }
    }
}

/// Key wrapper ordering words grevlex for polynomial term storage.
#[derive(Clone, PartialEq, Eq, Debug)]
struct TermKey(Word);

impl PartialOrd for TermKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TermKey {
    fn cmp(&self, other: &Self) -> Ordering {
        grevlex_compare(&self.0, &other.0)
    }
}

/// A polynomial: finitely many words with exact rational coefficients.
/// Terms iterate in graded reverse lexicographic order. Words are stored as
/// given; callers keep them in normal form.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct Polynomial {
    terms: BTreeMap<TermKey, BigRational>,
}

impl Polynomial {
    pub fn zero() -> Polynomial {
        Polynomial::default()
    }

    pub fn constant(c: BigRational) -> Polynomial {
        let mut p = Polynomial::zero();
        p.add_term(&SignedWord::one(), c);
        p
    }

    pub fn one() -> Polynomial {
        Polynomial::constant(BigRational::one())
    }

    pub fn from_signed_word(sw: &SignedWord) -> Polynomial {
        let mut p = Polynomial::zero();
        p.add_term(sw, BigRational::one());
        p
    }

    /// Adds `coef * sw`; zero words contribute nothing, signs fold into the
    /// coefficient, and terms that cancel to zero are removed.
    pub fn add_term(&mut self, sw: &SignedWord, coef: BigRational) {
        let (sign, word) = match sw {
            SignedWord::Zero => return,
            SignedWord::Term { sign, word } => (*sign, word.clone()),
        };
        let coef = match sign {
            Sign::Plus => coef,
            Sign::Minus => -coef,
        };
        if coef.is_zero() {
            return;
        }
        let key = TermKey(word);
        let cancelled = {
            let entry = self.terms.entry(key.clone()).or_insert_with(BigRational::zero);
            *entry += coef;
            entry.is_zero()
        };
        if cancelled {
            self.terms.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Largest word length, or 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|k| k.0.len()).max().unwrap_or(0)
    }

    /// Terms in grevlex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Word, &BigRational)> {
        self.terms.iter().map(|(k, v)| (&k.0, v))
    }

    pub fn coefficient(&self, word: &Word) -> BigRational {
        self.terms
            .get(&TermKey(word.clone()))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (w, c) in other.terms() {
            out.add_term(&SignedWord::positive(w.clone()), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Polynomial {
        let mut out = Polynomial::zero();
        for (w, c) in self.terms() {
            out.add_term(&SignedWord::positive(w.clone()), -c.clone());
        }
        out
    }

    pub fn scale(&self, factor: &BigRational) -> Polynomial {
        let mut out = Polynomial::zero();
        for (w, c) in self.terms() {
            out.add_term(&SignedWord::positive(w.clone()), c.clone() * factor);
        }
        out
    }

    /// Constant value if the polynomial has no non-constant term.
    pub fn as_constant(&self) -> Option<BigRational> {
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        if self.terms.len() == 1 {
            let (k, v) = self.terms.iter().next().unwrap();
            if k.0.is_empty() {
                return Some(v.clone());
            }
        }
        None
    }

    /// Adjoint: reverses and adjoints every word; coefficients are rational,
    /// so conjugation leaves them unchanged.
    pub fn adjoint(&self, alphabet: &Alphabet) -> Polynomial {
        let mut out = Polynomial::zero();
        for (w, c) in self.terms() {
            out.add_term(&SignedWord::positive(w.adjoint(alphabet)), c.clone());
        }
        out
    }

    /// Renders with terms in grevlex order, e.g. `A0*B0 + 1/4*A1 - B1`.
    pub fn display(&self, alphabet: &Alphabet) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (w, c)) in self.terms().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let body = if w.is_empty() {
                format!("{abs}")
            } else if abs.is_one() {
                alphabet.display_word(w)
            } else {
                format!("{}*{}", abs, alphabet.display_word(w))
            };
            out.push_str(&body);
        }
        out
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => write!(f, "+"),
            Sign::Minus => write!(f, "-"),
        }
    }
}
