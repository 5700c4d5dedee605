//! Interaction sets: which groups of modes may interact.
//!
//! An [`InteractionSet`] is a downward-closed family of mode subsets that
//! always contains every singleton. Each member `S` frees the natural
//! parameters whose non-origin coordinates are exactly the modes in `S`;
//! every other parameter (except the normalizer) is pinned to zero.
//!
//! Modes are 0-based in the API and 1-based in the text grammar.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::tensor::validate_dims;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionSet {
    order: usize,
    subsets: BTreeSet<Vec<usize>>,
}

fn nonempty_subsets(set: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (1u64..(1u64 << set.len())).map(move |mask| {
        set.iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, &m)| m)
            .collect()
    })
}

/// All `k`-subsets of `0..n`, lexicographically.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        let Some(pos) = (0..k).rev().find(|&i| current[i] < n - k + i) else {
            return out;
        };
        current[pos] += 1;
        for i in pos + 1..k {
            current[i] = current[i - 1] + 1;
        }
    }
}

impl InteractionSet {
    /// Builds the downward closure of `subsets`, plus every singleton.
    pub fn from_subsets<I>(order: usize, subsets: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<usize>>,
    {
        if order == 0 {
            return Err(Error::BadOrder("order must be at least 1".into()));
        }
        if order > 63 {
            return Err(Error::BadOrder(format!("order {order} exceeds 63")));
        }
        let mut closed: BTreeSet<Vec<usize>> = (0..order).map(|d| vec![d]).collect();
        for mut s in subsets {
            s.sort_unstable();
            s.dedup();
            if let Some(&m) = s.iter().find(|&&m| m >= order) {
                return Err(Error::ModeOutOfRange { mode: m + 1, order });
            }
            if s.is_empty() || closed.contains(&s) {
                continue;
            }
            closed.extend(nonempty_subsets(&s));
        }
        Ok(Self {
            order,
            subsets: closed,
        })
    }

    /// All subsets of size at most `m`.
    pub fn m_body(order: usize, m: usize) -> Result<Self> {
        if m == 0 || m > order {
            return Err(Error::BadOrder(format!(
                "body={m} needs 1 <= m <= {order}"
            )));
        }
        Self::from_subsets(order, combinations(order, m))
    }

    /// Singletons plus the cycle pairs `{d, d+1 mod D}`.
    pub fn cyclic(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::BadOrder(format!(
                "cyclic interactions need order >= 2, got {order}"
            )));
        }
        Self::from_subsets(order, (0..order).map(|d| vec![d, (d + 1) % order]))
    }

    /// Power set minus the empty set.
    pub fn full(order: usize) -> Result<Self> {
        Self::m_body(order, order)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// Members in lexicographic order of their sorted mode lists.
    pub fn subsets(&self) -> impl Iterator<Item = &[usize]> {
        self.subsets.iter().map(Vec::as_slice)
    }

    pub fn contains(&self, subset: &[usize]) -> bool {
        self.subsets.contains(subset)
    }

    pub fn is_subset_of(&self, other: &InteractionSet) -> bool {
        self.order == other.order && self.subsets.is_subset(&other.subsets)
    }

    /// Members not strictly contained in another member, lexicographically sorted.
    pub fn maximal_subsets(&self) -> Vec<Vec<usize>> {
        self.subsets
            .iter()
            .filter(|s| {
                !self
                    .subsets
                    .iter()
                    .any(|t| t.len() > s.len() && s.iter().all(|m| t.contains(m)))
            })
            .cloned()
            .collect()
    }

    /// Members as 1-based mode lists.
    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.subsets
            .iter()
            .map(|s| s.iter().map(|m| m + 1).collect())
            .collect()
    }

    fn check_dims(&self, dims: &[usize]) -> Result<()> {
        validate_dims(dims)?;
        if dims.len() != self.order {
            return Err(Error::BadOrder(format!(
                "interaction set has order {} but dims {dims:?} have order {}",
                self.order,
                dims.len()
            )));
        }
        Ok(())
    }

    /// `1 + sum_S prod_{d in S} (I_d - 1)`; the `1` is the normalizer.
    pub fn count_parameters(&self, dims: &[usize]) -> Result<usize> {
        self.check_dims(dims)?;
        Ok(1 + self
            .subsets
            .iter()
            .map(|s| s.iter().map(|&d| dims[d] - 1).product::<usize>())
            .sum::<usize>())
    }

    pub fn basis(&self, dims: &[usize]) -> Result<Basis> {
        self.check_dims(dims)?;
        let strides = crate::tensor::strides(dims);
        let mut indices = Vec::new();
        for s in &self.subsets {
            if s.iter().any(|&d| dims[d] < 2) {
                continue;
            }
            // Odometer over {1..I_d-1} on the modes of s.
            let mut index = vec![0usize; dims.len()];
            for &d in s {
                index[d] = 1;
            }
            'odometer: loop {
                indices.push(index.clone());
                for &d in s.iter().rev() {
                    index[d] += 1;
                    if index[d] < dims[d] {
                        continue 'odometer;
                    }
                    index[d] = 1;
                }
                break;
            }
        }
        indices.sort_unstable();
        let offsets = indices
            .iter()
            .map(|ix| ix.iter().zip(&strides).map(|(i, s)| i * s).sum())
            .collect();
        Ok(Basis {
            dims: dims.to_vec(),
            indices,
            offsets,
        })
    }
}

impl fmt::Display for InteractionSet {
    /// Writes the set in the `--interactions` grammar (tuples of 1-based modes).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tuples: Vec<String> = self
            .subsets
            .iter()
            .filter(|s| s.len() >= 2)
            .map(|s| {
                let modes: Vec<String> = s.iter().map(|m| (m + 1).to_string()).collect();
                format!("({})", modes.join(","))
            })
            .collect();
        if tuples.is_empty() {
            write!(f, "body=1")
        } else {
            write!(f, "{}", tuples.concat())
        }
    }
}

pub fn m_body_set(order: usize, m: usize) -> Result<InteractionSet> {
    InteractionSet::m_body(order, m)
}

pub fn cyclic_set(order: usize) -> Result<InteractionSet> {
    InteractionSet::cyclic(order)
}

pub fn enumerate_basis(s: &InteractionSet, dims: &[usize]) -> Result<Basis> {
    s.basis(dims)
}

pub fn count_parameters(s: &InteractionSet, dims: &[usize]) -> Result<usize> {
    s.count_parameters(dims)
}

/// Free natural-parameter indices of an interaction set, excluding the origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    dims: Vec<usize>,
    indices: Vec<Vec<usize>>,
    offsets: Vec<usize>,
}

impl Basis {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// 0-based multi-indices in lexicographic order.
    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    /// Row-major flat offsets, parallel to [`indices`](Self::indices).
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Parsed `--interactions` text, before it is bound to a tensor order.
///
/// Grammar (modes are 1-based):
///
/// ```text
/// spec   := clause (';' clause)*
/// clause := "body=" INT | "cyclic" | tuple+
/// tuple  := '(' INT (',' INT)+ ')'
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionSpec {
    clauses: Vec<Clause>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Clause {
    Body(usize),
    Cyclic,
    Tuples(Vec<Vec<usize>>),
}

struct Cursor<'a> {
    text: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            position: self.pos,
            message: message.into(),
        })
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn keyword(&mut self, word: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(word.as_bytes()) {
            self.pos += word.len();
            true
        } else {
            false
        }
    }

    fn int(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an integer");
        }
        std::str::from_utf8(&self.text[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(Error::Parse {
                position: start,
                message: "integer out of range".into(),
            })
    }

    fn tuple(&mut self) -> Result<Vec<usize>> {
        self.expect(b'(')?;
        let mut modes = vec![self.int()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            let at = self.pos;
            let m = self.int()?;
            if modes.contains(&m) {
                return Err(Error::Parse {
                    position: at,
                    message: format!("mode {m} repeated in tuple"),
                });
            }
            modes.push(m);
        }
        if modes.len() < 2 {
            return self.err("a tuple needs at least two modes");
        }
        self.expect(b')')?;
        Ok(modes)
    }

    fn clause(&mut self) -> Result<Clause> {
        match self.peek() {
            Some(b'(') => {
                let mut tuples = vec![self.tuple()?];
                while self.peek() == Some(b'(') {
                    tuples.push(self.tuple()?);
                }
                Ok(Clause::Tuples(tuples))
            }
            _ if self.keyword("body=") => Ok(Clause::Body(self.int()?)),
            _ if self.keyword("cyclic") => Ok(Clause::Cyclic),
            _ => self.err("expected 'body=<m>', 'cyclic' or a tuple like (1,2)"),
        }
    }
}

impl InteractionSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cur = Cursor {
            text: text.as_bytes(),
            pos: 0,
        };
        let mut clauses = vec![cur.clause()?];
        while cur.peek() == Some(b';') {
            cur.pos += 1;
            clauses.push(cur.clause()?);
        }
        if cur.peek().is_some() {
            return cur.err("unexpected trailing input");
        }
        Ok(Self { clauses })
    }

    /// Resolves the parsed clauses for a tensor of the given order.
    pub fn resolve(&self, order: usize) -> Result<InteractionSet> {
        let mut subsets: Vec<Vec<usize>> = Vec::new();
        for clause in &self.clauses {
            match clause {
                Clause::Body(m) => subsets.extend(InteractionSet::m_body(order, *m)?.subsets),
                Clause::Cyclic => subsets.extend(InteractionSet::cyclic(order)?.subsets),
                Clause::Tuples(tuples) => {
                    for t in tuples {
                        if let Some(&m) = t.iter().find(|&&m| m == 0 || m > order) {
                            return Err(Error::ModeOutOfRange { mode: m, order });
                        }
                        subsets.push(t.iter().map(|m| m - 1).collect());
                    }
                }
            }
        }
        InteractionSet::from_subsets(order, subsets)
    }
}

/// Parses `text` and binds it to a tensor of the given order.
pub fn parse_spec(text: &str, order: usize) -> Result<InteractionSet> {
    InteractionSpec::parse(text)?.resolve(order)
}
