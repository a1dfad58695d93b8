//! Sparse operator algebra over ladder/Z strings.
//!
//! Operators are finite sums of *strings*: tensor products of on-site letters
//! from `{sigma^+, sigma^-, Z}` (identity elsewhere) with a complex
//! coefficient. The basis is chosen so that every string is an eigenoperator
//! of `ad_N` for any diagonal integer number operator `N`, which makes the
//! homological equation solvable in closed form. Pauli `X` and `Y` expand as
//! `X = sigma^+ + sigma^-`, `Y = -i (sigma^+ - sigma^-)`.
//!
//! Strings with identical support are grouped into a [`LocalTerm`]; an
//! [`ExtensiveOperator`] is a canonical support-keyed collection of terms.
//! All operations are pure: they build new canonical operators and never
//! mutate their inputs.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use once_cell::sync::OnceCell;
use smallvec::SmallVec;

use crate::lattice::{Lattice, Site};
use crate::{Error, Result, MAX_DENSE_SUPPORT};

/// On-site letter. Identity is never stored.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Letter {
    Plus,
    Minus,
    Z,
}

impl Letter {
    pub fn label(self) -> char {
        match self {
            Letter::Plus => '+',
            Letter::Minus => '-',
            Letter::Z => 'Z',
        }
    }

    pub fn from_label(c: char) -> Option<Letter> {
        match c {
            '+' => Some(Letter::Plus),
            '-' => Some(Letter::Minus),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }

    pub fn adjoint(self) -> Letter {
        match self {
            Letter::Plus => Letter::Minus,
            Letter::Minus => Letter::Plus,
            Letter::Z => Letter::Z,
        }
    }
}

/// Product of two letters on the same site, as a sum of scaled letters
/// (`None` denotes the identity). At most two outcomes (`+- -> (1 + Z)/2`).
fn letter_product(a: Letter, b: Letter) -> SmallVec<[(Option<Letter>, f64); 2]> {
    use Letter::*;
    let mut out = SmallVec::new();
    match (a, b) {
        (Z, Z) => out.push((None, 1.0)),
        (Z, Plus) => out.push((Some(Plus), 1.0)),
        (Plus, Z) => out.push((Some(Plus), -1.0)),
        (Z, Minus) => out.push((Some(Minus), -1.0)),
        (Minus, Z) => out.push((Some(Minus), 1.0)),
        (Plus, Plus) | (Minus, Minus) => {}
        (Plus, Minus) => {
            out.push((None, 0.5));
            out.push((Some(Z), 0.5));
        }
        (Minus, Plus) => {
            out.push((None, 0.5));
            out.push((Some(Z), -0.5));
        }
    }
    out
}

/// Canonical letter pattern: site-sorted, identity-free.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Pattern(Vec<(Site, Letter)>);

impl Pattern {
    /// Builds a canonical pattern; rejects duplicate sites.
    pub fn new(mut letters: Vec<(Site, Letter)>) -> Result<Pattern> {
        letters.sort_by(|a, b| a.0.cmp(&b.0));
        for w in letters.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Format(format!(
                    "duplicate site {:?} in letter pattern",
                    w[0].0
                )));
            }
        }
        Ok(Pattern(letters))
    }

    pub fn identity() -> Pattern {
        Pattern(Vec::new())
    }

    pub fn letters(&self) -> &[(Site, Letter)] {
        &self.0
    }

    pub fn support(&self) -> impl Iterator<Item = &Site> {
        self.0.iter().map(|(s, _)| s)
    }

    pub fn support_vec(&self) -> Vec<Site> {
        self.support().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn adjoint(&self) -> Pattern {
        Pattern(
            self.0
                .iter()
                .map(|(s, l)| (s.clone(), l.adjoint()))
                .collect(),
        )
    }

    /// `ad_N` eigenvalue `m` of this string: `[T, N] = m T` for diagonal `N`.
    ///
    /// A `sigma^+` at site `x` contributes `down - up` of the on-site
    /// eigenvalue pair, a `sigma^-` the negative, `Z` nothing.
    pub fn ad_weight(&self, n: &NumberOperator) -> i64 {
        self.0
            .iter()
            .map(|(site, l)| {
                let (up, down) = n.eigenvalues(site);
                match l {
                    Letter::Plus => down - up,
                    Letter::Minus => up - down,
                    Letter::Z => 0,
                }
            })
            .sum()
    }
}

/// A single operator string: a letter pattern with a complex coefficient.
#[derive(Clone, PartialEq, Debug)]
pub struct LadderString {
    pub pattern: Pattern,
    pub coeff: Complex64,
}

impl LadderString {
    pub fn new(pattern: Pattern, coeff: Complex64) -> Self {
        LadderString { pattern, coeff }
    }
}

/// Multiply two patterns; returns the expansion as (pattern, real factor)
/// pairs. The factor multiplies the product of the input coefficients.
fn pattern_product(a: &Pattern, b: &Pattern) -> Vec<(Pattern, f64)> {
    // partials: letters collected so far (sorted by construction) + factor
    let mut partials: Vec<(Vec<(Site, Letter)>, f64)> = vec![(Vec::new(), 1.0)];
    let (mut i, mut j) = (0, 0);
    let (la, lb) = (a.letters(), b.letters());
    while i < la.len() || j < lb.len() {
        if j >= lb.len() || (i < la.len() && la[i].0 < lb[j].0) {
            for p in &mut partials {
                p.0.push(la[i].clone());
            }
            i += 1;
        } else if i >= la.len() || lb[j].0 < la[i].0 {
            for p in &mut partials {
                p.0.push(lb[j].clone());
            }
            j += 1;
        } else {
            let site = la[i].0.clone();
            let outcomes = letter_product(la[i].1, lb[j].1);
            let mut next = Vec::with_capacity(partials.len() * outcomes.len().max(1));
            for (letter, factor) in &outcomes {
                for (letters, f) in &partials {
                    let mut letters = letters.clone();
                    if let Some(l) = letter {
                        letters.push((site.clone(), *l));
                    }
                    next.push((letters, f * factor));
                }
            }
            partials = next;
            if partials.is_empty() {
                return Vec::new();
            }
            i += 1;
            j += 1;
        }
    }
    partials
        .into_iter()
        .map(|(letters, f)| (Pattern(letters), f))
        .collect()
}

/// Strings sharing one exact support, keyed canonically by pattern.
#[derive(Clone, Debug)]
pub struct LocalTerm {
    support: Vec<Site>,
    strings: BTreeMap<Pattern, Complex64>,
    norm_cache: OnceCell<f64>,
}

impl LocalTerm {
    fn new(support: Vec<Site>) -> Self {
        LocalTerm {
            support,
            strings: BTreeMap::new(),
            norm_cache: OnceCell::new(),
        }
    }

    pub fn support(&self) -> &[Site] {
        &self.support
    }

    pub fn size(&self) -> usize {
        self.support.len()
    }

    pub fn strings(&self) -> impl Iterator<Item = (&Pattern, &Complex64)> {
        self.strings.iter()
    }

    pub fn num_strings(&self) -> usize {
        self.strings.len()
    }

    /// Dense matrix of this term on its own support (site-major, up = 0).
    pub fn dense_on_support(&self) -> Result<DMatrix<Complex64>> {
        let k = self.support.len();
        if k > MAX_DENSE_SUPPORT {
            return Err(Error::SupportTooLarge {
                size: k,
                max: MAX_DENSE_SUPPORT,
            });
        }
        let dim = 1usize << k;
        let mut m = DMatrix::zeros(dim, dim);
        for (pattern, coeff) in &self.strings {
            // every string in a term spans the full support
            debug_assert_eq!(pattern.len(), k);
            for col in 0..dim {
                let mut row = 0usize;
                let mut factor = 1.0f64;
                let mut dead = false;
                for (pos, (_, letter)) in pattern.letters().iter().enumerate() {
                    let bit = (col >> (k - 1 - pos)) & 1;
                    let (rbit, f) = match letter {
                        Letter::Z => (bit, if bit == 0 { 1.0 } else { -1.0 }),
                        Letter::Plus => {
                            if bit == 1 {
                                (0, 1.0)
                            } else {
                                dead = true;
                                break;
                            }
                        }
                        Letter::Minus => {
                            if bit == 0 {
                                (1, 1.0)
                            } else {
                                dead = true;
                                break;
                            }
                        }
                    };
                    row |= rbit << (k - 1 - pos);
                    factor *= f;
                }
                if !dead {
                    m[(row, col)] += coeff * factor;
                }
            }
        }
        Ok(m)
    }

    /// Exact operator norm of the term (largest singular value), cached.
    pub fn op_norm(&self) -> Result<f64> {
        if let Some(v) = self.norm_cache.get() {
            return Ok(*v);
        }
        let m = self.dense_on_support()?;
        let v = crate::dense::operator_norm(&m);
        let _ = self.norm_cache.set(v);
        Ok(v)
    }

    /// Upper bound on the operator norm: sum of |coeff| over strings.
    /// Each ladder string has operator norm exactly |coeff|.
    pub fn op_norm_l1(&self) -> f64 {
        self.strings.values().map(|c| c.norm()).sum()
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.strings.iter().all(|(p, c)| {
            let dual = self.strings.get(&p.adjoint()).copied().unwrap_or_default();
            (dual.conj() - c).norm() <= tol
        })
    }
}

/// Extensive operator: canonical support-keyed sum of local terms.
#[derive(Clone, Debug, Default)]
pub struct ExtensiveOperator {
    terms: BTreeMap<Vec<Site>, LocalTerm>,
}

impl ExtensiveOperator {
    pub fn zero() -> Self {
        ExtensiveOperator::default()
    }

    /// `c` times the identity (a single empty-support term).
    pub fn identity_times(c: Complex64) -> Self {
        ExtensiveOperator::from_strings([LadderString::new(Pattern::identity(), c)])
    }

    /// Single string `c * letters`.
    pub fn string(letters: Vec<(Site, Letter)>, c: Complex64) -> Result<Self> {
        Ok(ExtensiveOperator::from_strings([LadderString::new(
            Pattern::new(letters)?,
            c,
        )]))
    }

    /// Builds a canonical operator from strings, merging duplicate patterns
    /// and dropping exact zeros.
    pub fn from_strings<I: IntoIterator<Item = LadderString>>(strings: I) -> Self {
        let mut acc = Accumulator::new();
        for s in strings {
            acc.add(s.pattern, s.coeff);
        }
        acc.into_operator()
    }

    pub fn terms(&self) -> impl Iterator<Item = &LocalTerm> {
        self.terms.values()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn num_strings(&self) -> usize {
        self.terms.values().map(|t| t.strings.len()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// All strings in canonical order.
    pub fn strings(&self) -> impl Iterator<Item = LadderString> + '_ {
        self.terms.values().flat_map(|t| {
            t.strings
                .iter()
                .map(|(p, c)| LadderString::new(p.clone(), *c))
        })
    }

    pub fn max_support(&self) -> usize {
        self.terms.keys().map(|s| s.len()).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .flat_map(|t| t.strings.values())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Number of stored supports that are not nearest-neighbor connected.
    pub fn disconnected_supports(&self) -> usize {
        self.terms
            .keys()
            .filter(|s| !Lattice::is_connected(s))
            .count()
    }

    pub fn add(&self, other: &ExtensiveOperator) -> ExtensiveOperator {
        let mut acc = Accumulator::new();
        for s in self.strings().chain(other.strings()) {
            acc.add(s.pattern, s.coeff);
        }
        acc.into_operator()
    }

    pub fn scale(&self, c: Complex64) -> ExtensiveOperator {
        if c == Complex64::default() {
            return ExtensiveOperator::zero();
        }
        let mut acc = Accumulator::new();
        for s in self.strings() {
            acc.add(s.pattern, s.coeff * c);
        }
        acc.into_operator()
    }

    pub fn adjoint(&self) -> ExtensiveOperator {
        let mut acc = Accumulator::new();
        for s in self.strings() {
            acc.add(s.pattern.adjoint(), s.coeff.conj());
        }
        acc.into_operator()
    }

    /// Operator product `self * other`, exact in the ladder/Z algebra.
    pub fn multiply(&self, other: &ExtensiveOperator) -> ExtensiveOperator {
        let mut acc = Accumulator::new();
        for ta in self.terms.values() {
            for tb in other.terms.values() {
                for (pa, ca) in &ta.strings {
                    for (pb, cb) in &tb.strings {
                        for (pat, f) in pattern_product(pa, pb) {
                            acc.add(pat, ca * cb * f);
                        }
                    }
                }
            }
        }
        acc.into_operator()
    }

    /// Commutator `[self, other] = self * other - other * self`.
    ///
    /// Only support pairs with nonempty intersection contribute; disjointly
    /// supported strings commute.
    pub fn commutator(&self, other: &ExtensiveOperator) -> ExtensiveOperator {
        // index other's supports by site for overlap lookup
        let mut by_site: BTreeMap<&Site, Vec<&Vec<Site>>> = BTreeMap::new();
        for key in other.terms.keys() {
            for site in key {
                by_site.entry(site).or_default().push(key);
            }
        }
        let mut acc = Accumulator::new();
        for (ka, ta) in &self.terms {
            let mut candidates: BTreeSet<&Vec<Site>> = BTreeSet::new();
            for site in ka {
                if let Some(keys) = by_site.get(site) {
                    candidates.extend(keys.iter().copied());
                }
            }
            for kb in candidates {
                let tb = &other.terms[kb];
                for (pa, ca) in &ta.strings {
                    for (pb, cb) in &tb.strings {
                        let c = ca * cb;
                        for (pat, f) in pattern_product(pa, pb) {
                            acc.add(pat, c * f);
                        }
                        for (pat, f) in pattern_product(pb, pa) {
                            acc.add(pat, -c * f);
                        }
                    }
                }
            }
        }
        acc.into_operator()
    }

    /// The extensive local norm `sup_x sum_{S ni x} ||A_S||_op e^{kappa |S|}`.
    ///
    /// Needs `kappa >= 0`. Term norms are exact dense operator norms;
    /// supports larger than [`MAX_DENSE_SUPPORT`] are a hard error.
    /// Empty-support (identity) terms pass through no site and contribute
    /// nothing.
    pub fn kappa_norm(&self, kappa: f64) -> Result<f64> {
        assert!(kappa >= 0.0, "kappa-norms are defined for kappa >= 0");
        let mut per_site: BTreeMap<&Site, f64> = BTreeMap::new();
        for term in self.terms.values() {
            if term.support.is_empty() {
                continue;
            }
            let w = term.op_norm()? * (kappa * term.size() as f64).exp();
            for site in &term.support {
                *per_site.entry(site).or_insert(0.0) += w;
            }
        }
        Ok(per_site.values().fold(0.0, |a, &b| a.max(b)))
    }

    /// Kappa-norm computed with the per-term l1 coefficient bound instead of
    /// dense norms. Always an upper bound; used for ledger accounting where
    /// supports may exceed the dense capability.
    pub fn kappa_norm_l1(&self, kappa: f64) -> f64 {
        let mut per_site: BTreeMap<&Site, f64> = BTreeMap::new();
        for term in self.terms.values() {
            if term.support.is_empty() {
                continue;
            }
            let w = term.op_norm_l1() * (kappa * term.size() as f64).exp();
            for site in &term.support {
                *per_site.entry(site).or_insert(0.0) += w;
            }
        }
        per_site.values().fold(0.0, |a, &b| a.max(b))
    }

    /// Sum over strings of |coeff distance| to the adjoint; 0 for
    /// self-adjoint operators. Upper-bounds the operator norm of `A - A*`.
    pub fn self_adjoint_defect(&self) -> f64 {
        let diff = self.add(&self.adjoint().scale(Complex64::new(-1.0, 0.0)));
        diff.terms.values().map(|t| t.op_norm_l1()).sum()
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.self_adjoint_defect() <= tol
    }
}

/// Canonical accumulator: merges strings by pattern, drops exact zeros,
/// groups by exact support.
pub(crate) struct Accumulator {
    strings: BTreeMap<Pattern, Complex64>,
}

impl Accumulator {
    pub(crate) fn new() -> Self {
        Accumulator {
            strings: BTreeMap::new(),
        }
    }

    pub(crate) fn add(&mut self, pattern: Pattern, coeff: Complex64) {
        if coeff == Complex64::default() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.strings.entry(pattern) {
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
            Entry::Occupied(mut e) => {
                let v = e.get() + coeff;
                if v == Complex64::default() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub(crate) fn into_operator(self) -> ExtensiveOperator {
        let mut terms: BTreeMap<Vec<Site>, LocalTerm> = BTreeMap::new();
        for (pattern, coeff) in self.strings {
            let support = pattern.support_vec();
            terms
                .entry(support.clone())
                .or_insert_with(|| LocalTerm::new(support))
                .strings
                .insert(pattern, coeff);
        }
        ExtensiveOperator { terms }
    }
}

/// Diagonal number operator `N = sum_x N_x` with integer on-site spectrum.
///
/// Each site stores the eigenvalue pair `(up, down)` of `N_x` in the
/// computational basis; the default model is `N_x = Z_x`, i.e. `(1, -1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NumberOperator {
    entries: BTreeMap<Site, (i64, i64)>,
}

impl NumberOperator {
    pub fn new(entries: BTreeMap<Site, (i64, i64)>) -> Self {
        NumberOperator { entries }
    }

    /// `N = sum_x Z_x` over the lattice (total z-magnetization).
    pub fn uniform_z(lattice: &Lattice) -> Self {
        NumberOperator {
            entries: lattice.sites().into_iter().map(|s| (s, (1, -1))).collect(),
        }
    }

    /// On-site eigenvalues at `site`; sites without an entry carry `N_x = 0`.
    pub fn eigenvalues(&self, site: &Site) -> (i64, i64) {
        self.entries.get(site).copied().unwrap_or((0, 0))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Site, &(i64, i64))> {
        self.entries.iter()
    }

    pub fn sites(&self) -> impl Iterator<Item = &Site> {
        self.entries.keys()
    }

    /// `N` as an extensive operator: `N_x = (up+down)/2 * 1 + (up-down)/2 * Z_x`.
    pub fn as_extensive(&self) -> ExtensiveOperator {
        let mut acc = Accumulator::new();
        for (site, (up, down)) in &self.entries {
            let avg = (up + down) as f64 / 2.0;
            let half_gap = (up - down) as f64 / 2.0;
            acc.add(Pattern::identity(), Complex64::new(avg, 0.0));
            acc.add(
                Pattern(vec![(site.clone(), Letter::Z)]),
                Complex64::new(half_gap, 0.0),
            );
        }
        acc.into_operator()
    }

    /// Restriction of `N` to the given sites (for dense oracles on a support).
    pub fn restrict(&self, sites: &[Site]) -> NumberOperator {
        NumberOperator {
            entries: sites
                .iter()
                .map(|s| (s.clone(), self.eigenvalues(s)))
                .collect(),
        }
    }
}
