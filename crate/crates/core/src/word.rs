//! Reduced words in the free group on two generators `a`, `b`.
//!
//! Text encoding: `a`, `A` (= a⁻¹), `b`, `B` (= b⁻¹), and `e` for the
//! empty word.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// One of the four generator symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    A,
    AInv,
    B,
    BInv,
}

impl Letter {
    /// Fixed enumeration order: a, a⁻¹, b, b⁻¹.
    pub const ALL: [Letter; 4] = [Letter::A, Letter::AInv, Letter::B, Letter::BInv];

    pub fn inverse(self) -> Letter {
        match self {
            Letter::A => Letter::AInv,
            Letter::AInv => Letter::A,
            Letter::B => Letter::BInv,
            Letter::BInv => Letter::B,
        }
    }

    /// Position in [`Letter::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Letter {
        Letter::ALL[i]
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::A => 'a',
            Letter::AInv => 'A',
            Letter::B => 'b',
            Letter::BInv => 'B',
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'a' => Some(Letter::A),
            'A' => Some(Letter::AInv),
            'b' => Some(Letter::B),
            'B' => Some(Letter::BInv),
            _ => None,
        }
    }

    /// The three letters that may follow `self` in a reduced word.
    pub fn successors(self) -> impl Iterator<Item = Letter> {
        let forbidden = self.inverse();
        Letter::ALL.into_iter().filter(move |&l| l != forbidden)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseWordError {
    #[error("invalid letter {0:?} in word (expected a, A, b, B or e)")]
    InvalidLetter(char),
}

/// A freely reduced word. The empty word is the identity `e`.
///
/// Words are reduced on construction, so every value of this type satisfies
/// the no-adjacent-inverses invariant.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedWord {
    letters: Vec<Letter>,
}

impl ReducedWord {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn letter(l: Letter) -> Self {
        Self { letters: vec![l] }
    }

    /// Free reduction of an arbitrary letter sequence (single stack pass).
    pub fn reduce<I: IntoIterator<Item = Letter>>(raw: I) -> Self {
        let mut w = Self::identity();
        for l in raw {
            w.push(l);
        }
        w
    }

    /// Right-multiplies by one letter in place, cancelling if needed.
    pub fn push(&mut self, l: Letter) {
        if self.letters.last() == Some(&l.inverse()) {
            self.letters.pop();
        } else {
            self.letters.push(l);
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn first(&self) -> Option<Letter> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.letters.last().copied()
    }

    pub fn multiply(&self, other: &ReducedWord) -> ReducedWord {
        let cancel = self.cancellation_with(other);
        let mut letters = Vec::with_capacity(self.len() + other.len() - 2 * cancel);
        letters.extend_from_slice(&self.letters[..self.len() - cancel]);
        letters.extend_from_slice(&other.letters[cancel..]);
        ReducedWord { letters }
    }

    /// Number of letter pairs cancelled when forming `self · other`.
    pub fn cancellation_with(&self, other: &ReducedWord) -> usize {
        self.letters
            .iter()
            .rev()
            .zip(other.letters.iter())
            .take_while(|(x, y)| x.inverse() == **y)
            .count()
    }

    pub fn inverse(&self) -> ReducedWord {
        ReducedWord {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    pub fn common_prefix_len(&self, other: &ReducedWord) -> usize {
        self.letters
            .iter()
            .zip(other.letters.iter())
            .take_while(|(x, y)| x == y)
            .count()
    }

    pub fn starts_with(&self, prefix: &ReducedWord) -> bool {
        self.letters.starts_with(&prefix.letters)
    }

    /// The first `n` letters (the whole word if it is shorter).
    pub fn truncated(&self, n: usize) -> ReducedWord {
        ReducedWord {
            letters: self.letters[..n.min(self.len())].to_vec(),
        }
    }

    /// Appends `l`, which must not cancel against the last letter.
    pub fn extended(&self, l: Letter) -> ReducedWord {
        debug_assert_ne!(self.last(), Some(l.inverse()));
        let mut letters = Vec::with_capacity(self.len() + 1);
        letters.extend_from_slice(&self.letters);
        letters.push(l);
        ReducedWord { letters }
    }

    /// All reduced words of length exactly `n`, in lexicographic order with
    /// respect to the letter order a, a⁻¹, b, b⁻¹. There are 4·3ⁿ⁻¹ of them.
    pub fn all_of_length(n: usize) -> Vec<ReducedWord> {
        let mut level = vec![ReducedWord::identity()];
        for _ in 0..n {
            let mut next = Vec::with_capacity(level.len() * 4);
            for w in &level {
                match w.last() {
                    None => next.extend(Letter::ALL.iter().map(|&l| w.extended(l))),
                    Some(last) => next.extend(last.successors().map(|l| w.extended(l))),
                }
            }
            level = next;
        }
        level
    }

    /// All reduced words of length at most `n`, shortest first.
    pub fn all_up_to_length(n: usize) -> Vec<ReducedWord> {
        (0..=n).flat_map(ReducedWord::all_of_length).collect()
    }
}

impl From<Letter> for ReducedWord {
    fn from(l: Letter) -> Self {
        ReducedWord::letter(l)
    }
}

impl FromIterator<Letter> for ReducedWord {
    fn from_iter<I: IntoIterator<Item = Letter>>(iter: I) -> Self {
        ReducedWord::reduce(iter)
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Parses the text encoding. The input is freely reduced, so `"aA"` parses
/// to `e`. A lone `e` (or the empty string) is the identity; `e` is also
/// accepted inside a word and ignored.
impl FromStr for ReducedWord {
    type Err = ParseWordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut w = ReducedWord::identity();
        for c in s.trim().chars() {
            if c == 'e' {
                continue;
            }
            w.push(Letter::from_char(c).ok_or(ParseWordError::InvalidLetter(c))?);
        }
        Ok(w)
    }
}

#[cfg(test)]
pub(crate) fn w(s: &str) -> ReducedWord {
    s.parse().unwrap()
}
