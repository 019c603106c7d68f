//! Truncated multivariate formal power series over Gaussian rationals.
//!
//! A `TruncatedSeries` stores the part of a formal series of total degree
//! `<= trunc`; everything above is unknown. Operations propagate the
//! guaranteed precision: binary operations return `min` of the inputs,
//! differentiation loses one degree, division by `var^k` loses `k`.
//!
//! Invariants:
//! - no stored coefficient is zero (enforced on every construction),
//! - every stored multi-index has total degree `<= trunc`,
//! - the coefficient map is a `BTreeMap` in lex order, so equality and
//!   hashing are structural and serialization is canonical.
//!
//! Values are immutable after construction; all operations return new series.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::num::{solve_linear_system, GaussianRational};

pub type Expo = Vec<u16>;

/// Valuation of a series: least total degree (or least degree in one
/// variable) of a nonzero term; `Infinite` for the zero series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Valuation {
    Finite(usize),
    Infinite,
}

impl Valuation {
    pub fn at_least(&self, k: usize) -> bool {
        match self {
            Valuation::Finite(v) => *v >= k,
            Valuation::Infinite => true,
        }
    }

    pub fn finite(&self) -> Option<usize> {
        match self {
            Valuation::Finite(v) => Some(*v),
            Valuation::Infinite => None,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    vars: Vec<String>,
    trunc: usize,
    coeffs: BTreeMap<Expo, GaussianRational>,
}

impl TruncatedSeries {
    pub fn zero(vars: &[&str], trunc: usize) -> Self {
        Self {
            vars: vars.iter().map(|s| s.to_string()).collect(),
            trunc,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn zero_like(other: &Self) -> Self {
        Self { vars: other.vars.clone(), trunc: other.trunc, coeffs: BTreeMap::new() }
    }

    pub fn constant(vars: &[&str], trunc: usize, c: GaussianRational) -> Self {
        let mut s = Self::zero(vars, trunc);
        if !c.is_zero() {
            s.coeffs.insert(vec![0; s.vars.len()], c);
        }
        s
    }

    pub fn one(vars: &[&str], trunc: usize) -> Self {
        Self::constant(vars, trunc, GaussianRational::one())
    }

    /// The series `var` itself.
    pub fn variable(vars: &[&str], trunc: usize, var: &str) -> Result<Self> {
        let mut s = Self::zero(vars, trunc);
        let idx = s.var_index(var)?;
        if trunc >= 1 {
            let mut e = vec![0u16; s.vars.len()];
            e[idx] = 1;
            s.coeffs.insert(e, GaussianRational::one());
        }
        Ok(s)
    }

    /// Build from explicit `(exponents, coefficient)` terms. Terms above the
    /// truncation are rejected; duplicate exponents are summed.
    pub fn from_terms(
        vars: &[&str],
        trunc: usize,
        terms: impl IntoIterator<Item = (Expo, GaussianRational)>,
    ) -> Result<Self> {
        let mut s = Self::zero(vars, trunc);
        for (e, c) in terms {
            if e.len() != s.vars.len() {
                return Err(Error::Arity(format!(
                    "exponent {:?} has {} entries for {} variables",
                    e,
                    e.len(),
                    s.vars.len()
                )));
            }
            if degree_of(&e) > trunc {
                return Err(Error::TruncationTooSmall { need: degree_of(&e), have: trunc });
            }
            s.add_term(e, c);
        }
        Ok(s)
    }

    fn add_term(&mut self, e: Expo, c: GaussianRational) {
        if c.is_zero() {
            return;
        }
        match self.coeffs.get_mut(&e) {
            Some(existing) => {
                *existing += &c;
                if existing.is_zero() {
                    self.coeffs.remove(&e);
                }
            }
            None => {
                self.coeffs.insert(e, c);
            }
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Expo, &GaussianRational)> {
        self.coeffs.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn var_index(&self, var: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v == var)
            .ok_or_else(|| Error::UnknownVariable(var.to_string()))
    }

    pub fn coefficient(&self, e: &[u16]) -> GaussianRational {
        self.coeffs.get(e).cloned().unwrap_or_else(GaussianRational::zero)
    }

    pub fn constant_term(&self) -> GaussianRational {
        self.coefficient(&vec![0u16; self.vars.len()])
    }

    fn check_same_ring(&self, other: &Self) -> Result<()> {
        if self.vars != other.vars {
            return Err(Error::VarMismatch {
                expected: self.vars.clone(),
                got: other.vars.clone(),
            });
        }
        Ok(())
    }

    /// Drop terms above a (lower) truncation and record the new bound.
    pub fn truncate_to(&self, trunc: usize) -> Self {
        let trunc = trunc.min(self.trunc);
        Self {
            vars: self.vars.clone(),
            trunc,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(e, _)| degree_of(e) <= trunc)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_ring(other)?;
        let trunc = self.trunc.min(other.trunc);
        let mut out = Self::zero_like(self);
        out.trunc = trunc;
        for (e, c) in &self.coeffs {
            if degree_of(e) <= trunc {
                out.add_term(e.clone(), c.clone());
            }
        }
        for (e, c) in &other.coeffs {
            if degree_of(e) <= trunc {
                out.add_term(e.clone(), c.clone());
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            vars: self.vars.clone(),
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        if c.is_zero() {
            let mut z = Self::zero_like(self);
            z.trunc = self.trunc;
            return z;
        }
        Self {
            vars: self.vars.clone(),
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    /// Cauchy product truncated at `min(trunc_a, trunc_b)`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_ring(other)?;
        let trunc = self.trunc.min(other.trunc);
        let mut out = Self::zero_like(self);
        out.trunc = trunc;
        // Iterate the smaller operand on the outside.
        let (small, big) = if self.coeffs.len() <= other.coeffs.len() {
            (self, other)
        } else {
            (other, self)
        };
        for (ea, ca) in &small.coeffs {
            let da = degree_of(ea);
            if da > trunc {
                continue;
            }
            for (eb, cb) in &big.coeffs {
                if da + degree_of(eb) > trunc {
                    continue;
                }
                let e: Expo = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(e, ca * cb);
            }
        }
        Ok(out)
    }

    /// Multiply by `var^k` (exact; terms pushed above the truncation are
    /// dropped, so this is the left inverse of `divide_by_power` only within
    /// the common precision).
    pub fn mul_by_power(&self, var: &str, k: usize) -> Result<Self> {
        let idx = self.var_index(var)?;
        let mut out = Self::zero_like(self);
        for (e, c) in &self.coeffs {
            if degree_of(e) + k <= self.trunc {
                let mut e2 = e.clone();
                e2[idx] += k as u16;
                out.coeffs.insert(e2, c.clone());
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: usize) -> Result<Self> {
        let mut acc = Self::one(
            &self.vars.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
            self.trunc,
        );
        for _ in 0..n {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Formal partial derivative; the result is guaranteed one degree less.
    pub fn partial_derivative(&self, var: &str) -> Result<Self> {
        let idx = self.var_index(var)?;
        let mut out = Self::zero_like(self);
        out.trunc = self.trunc.saturating_sub(1);
        for (e, c) in &self.coeffs {
            if e[idx] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[idx] -= 1;
            if degree_of(&e2) > out.trunc {
                continue;
            }
            let factor = GaussianRational::from_int(e[idx] as i64);
            out.add_term(e2, c * &factor);
        }
        Ok(out)
    }

    /// Least total degree of a nonzero term.
    pub fn total_valuation(&self) -> Valuation {
        self.coeffs
            .keys()
            .map(|e| degree_of(e))
            .min()
            .map_or(Valuation::Infinite, Valuation::Finite)
    }

    /// Least degree in `var` of a nonzero term.
    pub fn var_valuation(&self, var: &str) -> Result<Valuation> {
        let idx = self.var_index(var)?;
        Ok(self
            .coeffs
            .keys()
            .map(|e| e[idx] as usize)
            .min()
            .map_or(Valuation::Infinite, Valuation::Finite))
    }

    /// Exact quotient by `var^k`. Errors with the offending term when some
    /// monomial has `var`-degree below `k` (a failed factorization claim).
    pub fn divide_by_power(&self, var: &str, k: usize) -> Result<Self> {
        let idx = self.var_index(var)?;
        let mut out = Self::zero_like(self);
        out.trunc = self.trunc.saturating_sub(k);
        for (e, c) in &self.coeffs {
            if (e[idx] as usize) < k {
                return Err(Error::DivisionObstruction {
                    var: var.to_string(),
                    required: k,
                    found: e[idx] as usize,
                    term: e.clone(),
                });
            }
            let mut e2 = e.clone();
            e2[idx] -= k as u16;
            if degree_of(&e2) <= out.trunc {
                out.coeffs.insert(e2, c.clone());
            }
        }
        Ok(out)
    }

    /// Multiplicative inverse of a unit (nonzero constant term), by Newton
    /// iteration `x <- x(2 - a x)`; verified exactly before returning.
    pub fn invert_unit(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(Error::NonUnitConstant);
        }
        let vars: Vec<&str> = self.vars.iter().map(|s| s.as_str()).collect();
        let mut x = Self::constant(&vars, self.trunc, c0.inv());
        let two = Self::constant(&vars, self.trunc, GaussianRational::from_int(2));
        // Valuation of (1 - a x) doubles per step.
        let mut correct: usize = 1;
        while correct <= self.trunc {
            let t = two.sub(&self.mul(&x)?)?;
            x = x.mul(&t)?;
            correct *= 2;
        }
        debug_assert!(self
            .mul(&x)
            .unwrap()
            .sub(&Self::one(&vars, self.trunc))
            .unwrap()
            .is_zero());
        Ok(x)
    }

    /// Coefficient-wise complex conjugation (variables untouched).
    pub fn conjugate(&self) -> Self {
        Self {
            vars: self.vars.clone(),
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|(e, c)| (e.clone(), c.conj())).collect(),
        }
    }

    /// Substitute one series per variable of `self`. All inner series must
    /// live in one common ring and have zero constant term; the result lives
    /// in that ring with truncation `min(self.trunc, min inner trunc)`.
    pub fn compose(&self, inners: &[Self]) -> Result<Self> {
        if inners.len() != self.vars.len() {
            return Err(Error::Arity(format!(
                "compose: {} inner series for {} variables",
                inners.len(),
                self.vars.len()
            )));
        }
        let target = match inners.first() {
            Some(first) => first,
            None => {
                // Nullary series is a constant in an empty ring.
                return Ok(self.clone());
            }
        };
        let mut trunc = self.trunc;
        for (i, inner) in inners.iter().enumerate() {
            target.check_same_ring(inner)?;
            if !inner.constant_term().is_zero() {
                return Err(Error::NonzeroConstantInner(self.vars[i].clone()));
            }
            trunc = trunc.min(inner.trunc);
        }
        let tvars: Vec<&str> = target.vars.iter().map(|s| s.as_str()).collect();
        let mut out = Self::zero(&tvars, trunc);

        // Valuation lower bound per inner series, for pruning.
        let vals: Vec<usize> = inners
            .iter()
            .map(|s| s.total_valuation().finite().unwrap_or(trunc + 1))
            .collect();
        // Lazy power cache per variable.
        let mut powers: Vec<Vec<Self>> = inners
            .iter()
            .map(|s| vec![Self::one(&tvars, trunc), s.truncate_to(trunc)])
            .collect();

        for (e, c) in &self.coeffs {
            let weight: usize = e
                .iter()
                .zip(&vals)
                .map(|(k, v)| (*k as usize).saturating_mul(*v))
                .fold(0usize, usize::saturating_add);
            if weight > trunc {
                continue;
            }
            let mut term = Self::constant(&tvars, trunc, c.clone());
            for (i, &k) in e.iter().enumerate() {
                let k = k as usize;
                if k == 0 {
                    continue;
                }
                while powers[i].len() <= k {
                    let next = powers[i].last().unwrap().mul(&powers[i][1])?;
                    powers[i].push(next);
                }
                term = term.mul(&powers[i][k])?;
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Coefficient of `var^d` as a series in the remaining variables.
    pub fn coeff_of(&self, var: &str, d: usize) -> Result<Self> {
        let idx = self.var_index(var)?;
        let new_vars: Vec<&str> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, v)| v.as_str())
            .collect();
        let mut out = Self::zero(&new_vars, self.trunc.saturating_sub(d));
        for (e, c) in &self.coeffs {
            if e[idx] as usize == d {
                let mut e2 = e.clone();
                e2.remove(idx);
                if degree_of(&e2) <= out.trunc {
                    out.coeffs.insert(e2, c.clone());
                }
            }
        }
        Ok(out)
    }

    /// Reinterpret in a larger ring: every variable of `self` must appear in
    /// `new_vars`; missing variables get exponent zero.
    pub fn extend_vars(&self, new_vars: &[&str]) -> Result<Self> {
        let positions: Vec<usize> = self
            .vars
            .iter()
            .map(|v| {
                new_vars
                    .iter()
                    .position(|n| n == v)
                    .ok_or_else(|| Error::UnknownVariable(v.clone()))
            })
            .collect::<Result<_>>()?;
        let mut out = Self::zero(new_vars, self.trunc);
        for (e, c) in &self.coeffs {
            let mut e2 = vec![0u16; new_vars.len()];
            for (i, &p) in positions.iter().enumerate() {
                e2[p] = e[i];
            }
            out.coeffs.insert(e2, c.clone());
        }
        Ok(out)
    }

    /// Rename variables positionally (same arity, same exponents).
    pub fn rename_vars(&self, new_vars: &[&str]) -> Result<Self> {
        if new_vars.len() != self.vars.len() {
            return Err(Error::Arity(format!(
                "rename: {} names for {} variables",
                new_vars.len(),
                self.vars.len()
            )));
        }
        Ok(Self {
            vars: new_vars.iter().map(|s| s.to_string()).collect(),
            trunc: self.trunc,
            coeffs: self.coeffs.clone(),
        })
    }

    /// Quotient-ring restriction: drop every term whose combined degree in
    /// `vars` exceeds `cap`. Used by the symbolic assemblies to keep
    /// slice-irrelevant monomials from piling up.
    pub fn restrict_group_degree(&self, group: &[&str], cap: usize) -> Result<Self> {
        let idxs: Vec<usize> =
            group.iter().map(|v| self.var_index(v)).collect::<Result<_>>()?;
        let mut out = Self::zero_like(self);
        out.trunc = self.trunc;
        for (e, c) in &self.coeffs {
            let d: usize = idxs.iter().map(|&i| e[i] as usize).sum();
            if d <= cap {
                out.coeffs.insert(e.clone(), c.clone());
            }
        }
        Ok(out)
    }

    /// Canonical text form: header lines with `vars` and `trunc`, then one
    /// line per nonzero term in sorted multi-index order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("vars: {}\n", self.vars.join(" ")));
        s.push_str(&format!("trunc: {}\n", self.trunc));
        for (e, c) in &self.coeffs {
            let es: Vec<String> = e.iter().map(|x| x.to_string()).collect();
            s.push_str(&format!("({}) -> {}\n", es.join(","), c.to_text()));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut vars: Option<Vec<String>> = None;
        let mut trunc: Option<usize> = None;
        let mut terms: Vec<(Expo, GaussianRational)> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("vars:") {
                vars = Some(rest.split_whitespace().map(|s| s.to_string()).collect());
            } else if let Some(rest) = line.strip_prefix("trunc:") {
                trunc = Some(
                    rest.trim()
                        .parse()
                        .map_err(|_| Error::Precondition(format!("bad trunc line: {line}")))?,
                );
            } else if let Some((lhs, rhs)) = line.split_once("->") {
                let lhs = lhs.trim().trim_start_matches('(').trim_end_matches(')');
                let e: Expo = lhs
                    .trim_end_matches(')')
                    .split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<u16>()
                            .map_err(|_| Error::Precondition(format!("bad exponent in: {line}")))
                    })
                    .collect::<Result<_>>()?;
                let c = GaussianRational::parse(rhs.trim())
                    .ok_or_else(|| Error::Precondition(format!("bad coefficient in: {line}")))?;
                terms.push((e, c));
            } else {
                return Err(Error::Precondition(format!("unrecognized line: {line}")));
            }
        }
        let vars = vars.ok_or_else(|| Error::Precondition("missing vars header".into()))?;
        let trunc = trunc.ok_or_else(|| Error::Precondition("missing trunc header".into()))?;
        let vref: Vec<&str> = vars.iter().map(|s| s.as_str()).collect();
        Self::from_terms(&vref, trunc, terms)
    }
}

impl fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0 + O(deg {})", self.trunc + 1);
        }
        let mut parts = Vec::new();
        for (e, c) in self.coeffs.iter().take(24) {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, k)| **k > 0)
                .map(|(i, k)| {
                    if *k == 1 {
                        self.vars[i].clone()
                    } else {
                        format!("{}^{}", self.vars[i], k)
                    }
                })
                .collect();
            let m = if mono.is_empty() { "1".to_string() } else { mono.join("*") };
            parts.push(format!("({})*{}", c.to_text(), m));
        }
        if self.coeffs.len() > 24 {
            parts.push(format!("... {} terms", self.coeffs.len()));
        }
        write!(f, "{} + O(deg {})", parts.join(" + "), self.trunc + 1)
    }
}

pub fn degree_of(e: &[u16]) -> usize {
    e.iter().map(|x| *x as usize).sum()
}

/// Solve `system(x, y) = 0` for `y(x)` with `y(0) = 0` by Newton iteration on
/// truncated series. The ring of each equation is `(x-vars..., y-vars...)`
/// with the trailing `y_count` variables treated as unknowns. Requires the
/// Jacobian in the unknowns to be invertible at the origin; the valuation of
/// the residual doubles each step and the final result is re-verified, so the
/// returned solution satisfies the system exactly to truncation.
pub fn solve_implicit(system: &[TruncatedSeries], y_count: usize) -> Result<Vec<TruncatedSeries>> {
    if system.len() != y_count {
        return Err(Error::Arity(format!(
            "implicit solve needs a square system: {} equations for {} unknowns",
            system.len(),
            y_count
        )));
    }
    if y_count == 0 {
        return Ok(Vec::new());
    }
    let all_vars = system[0].vars().to_vec();
    for eq in system {
        if eq.vars() != all_vars.as_slice() {
            return Err(Error::VarMismatch { expected: all_vars.clone(), got: eq.vars().to_vec() });
        }
    }
    if all_vars.len() < y_count {
        return Err(Error::Arity("fewer variables than unknowns".into()));
    }
    let x_count = all_vars.len() - y_count;
    let trunc = system.iter().map(|s| s.trunc()).min().unwrap();
    let x_vars: Vec<&str> = all_vars[..x_count].iter().map(|s| s.as_str()).collect();
    let y_names: Vec<&str> = all_vars[x_count..].iter().map(|s| s.as_str()).collect();

    for eq in system {
        if !eq.constant_term().is_zero() {
            return Err(Error::Precondition(
                "implicit system does not vanish at the origin".into(),
            ));
        }
    }

    // Jacobian d(system)/d(y) as series, and its constant matrix.
    let mut jac: Vec<Vec<TruncatedSeries>> = Vec::with_capacity(y_count);
    for eq in system {
        let row: Vec<TruncatedSeries> = y_names
            .iter()
            .map(|y| eq.partial_derivative(y))
            .collect::<Result<_>>()?;
        jac.push(row);
    }
    let jac0: Vec<Vec<GaussianRational>> = jac
        .iter()
        .map(|row| row.iter().map(|s| s.constant_term()).collect())
        .collect();
    let probe: Vec<GaussianRational> =
        (0..y_count).map(|_| GaussianRational::zero()).collect();
    if solve_linear_system(&jac0, &probe).is_none() {
        return Err(Error::SingularJacobian);
    }

    let mut y: Vec<TruncatedSeries> =
        (0..y_count).map(|_| TruncatedSeries::zero(&x_vars, trunc)).collect();

    let build_inners = |y: &[TruncatedSeries]| -> Result<Vec<TruncatedSeries>> {
        let mut inners: Vec<TruncatedSeries> = Vec::with_capacity(all_vars.len());
        for xv in &x_vars {
            inners.push(TruncatedSeries::variable(&x_vars, trunc, xv)?);
        }
        inners.extend(y.iter().cloned());
        Ok(inners)
    };

    let mut gained: usize = 1;
    loop {
        let inners = build_inners(&y)?;
        let residual: Vec<TruncatedSeries> = system
            .iter()
            .map(|eq| eq.compose(&inners))
            .collect::<Result<_>>()?;
        if residual.iter().all(|r| r.is_zero()) {
            break;
        }
        if gained > trunc {
            // Newton has converged past the truncation yet the residual is
            // nonzero: the system is inconsistent with y(0) = 0.
            return Err(Error::DegenerateSolve(
                "implicit residual did not vanish at truncation".into(),
            ));
        }
        // Solve J(x, y) * delta = residual over the series ring.
        let jmat: Vec<Vec<TruncatedSeries>> = jac
            .iter()
            .map(|row| row.iter().map(|d| d.compose(&inners)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let delta = solve_series_linear(&jmat, &residual)?;
        for (yi, di) in y.iter_mut().zip(&delta) {
            *yi = yi.sub(di)?.truncate_to(trunc);
        }
        gained *= 2;
    }
    Ok(y)
}

/// Gaussian elimination over the series ring; pivots must be units.
pub fn solve_series_linear(
    a: &[Vec<TruncatedSeries>],
    b: &[TruncatedSeries],
) -> Result<Vec<TruncatedSeries>> {
    let n = a.len();
    let mut m: Vec<Vec<TruncatedSeries>> = a.to_vec();
    let mut rhs: Vec<TruncatedSeries> = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !m[r][col].constant_term().is_zero())
            .ok_or_else(|| Error::DegenerateSolve(format!("no unit pivot in column {col}")))?;
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        perm.swap(col, pivot);
        let inv = m[col][col].invert_unit()?;
        for c in 0..n {
            m[col][c] = m[col][c].mul(&inv)?;
        }
        rhs[col] = rhs[col].mul(&inv)?;
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in 0..n {
                    let t = factor.mul(&m[col][c])?;
                    m[r][c] = m[r][c].sub(&t)?;
                }
                let t = factor.mul(&rhs[col])?;
                rhs[r] = rhs[r].sub(&t)?;
            }
        }
    }
    Ok(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::GaussianRational as QG;

    fn zser(trunc: usize) -> TruncatedSeries {
        TruncatedSeries::variable(&["z"], trunc, "z").unwrap()
    }

    #[test]
    fn add_examples() {
        let z = zser(6);
        assert!(z.add(&z.neg()).unwrap().is_zero());
        let one = TruncatedSeries::one(&["z"], 6);
        let z2 = z.mul(&z).unwrap();
        let lhs = one.add(&z).unwrap().add(&z2).unwrap();
        let expected = TruncatedSeries::from_terms(
            &["z"],
            6,
            vec![
                (vec![0], QG::one()),
                (vec![1], QG::one()),
                (vec![2], QG::one()),
            ],
        )
        .unwrap();
        assert_eq!(lhs, expected);
    }

    #[test]
    fn mul_examples() {
        let one = TruncatedSeries::one(&["z"], 8);
        let z = zser(8);
        let a = one.add(&z).unwrap();
        let b = one.sub(&z).unwrap();
        let prod = a.mul(&b).unwrap();
        let expected = TruncatedSeries::from_terms(
            &["z"],
            8,
            vec![(vec![0], QG::one()), (vec![2], QG::from_int(-1))],
        )
        .unwrap();
        assert_eq!(prod, expected);

        // (1-z) * geometric series = 1 mod degree N+1.
        let geo = TruncatedSeries::from_terms(
            &["z"],
            8,
            (0..=8).map(|n| (vec![n as u16], QG::one())),
        )
        .unwrap();
        assert_eq!(b.mul(&geo).unwrap(), TruncatedSeries::one(&["z"], 8));

        // z*w at trunc 1 vanishes: degree 2 exceeds the truncation.
        let z2 = TruncatedSeries::variable(&["z", "w"], 1, "z").unwrap();
        let w2 = TruncatedSeries::variable(&["z", "w"], 1, "w").unwrap();
        assert!(z2.mul(&w2).unwrap().is_zero());
    }

    #[test]
    fn compose_examples() {
        // compose(w^2, [z + z^2]) at trunc 4 -> z^2 + 2z^3 + z^4
        let w2 = TruncatedSeries::from_terms(&["w"], 4, vec![(vec![2], QG::one())]).unwrap();
        let inner = TruncatedSeries::from_terms(
            &["z"],
            4,
            vec![(vec![1], QG::one()), (vec![2], QG::one())],
        )
        .unwrap();
        let out = w2.compose(&[inner]).unwrap();
        let expected = TruncatedSeries::from_terms(
            &["z"],
            4,
            vec![
                (vec![2], QG::one()),
                (vec![3], QG::from_int(2)),
                (vec![4], QG::one()),
            ],
        )
        .unwrap();
        assert_eq!(out, expected);

        // compose(f, identity) = f
        let f = TruncatedSeries::from_terms(
            &["z"],
            5,
            vec![(vec![0], QG::from_int(3)), (vec![1], QG::i()), (vec![4], QG::from_ratio(1, 7))],
        )
        .unwrap();
        assert_eq!(f.compose(&[zser(5)]).unwrap(), f);

        // exp(log(1+z)) = 1 + z to trunc 8 (classical identity, coefficientwise).
        let mut fact = QG::one();
        let mut exp_terms = vec![(vec![0u16], QG::one())];
        for n in 1..=8u16 {
            fact = &fact * &QG::from_int(n as i64);
            exp_terms.push((vec![n], fact.inv()));
        }
        let exp = TruncatedSeries::from_terms(&["w"], 8, exp_terms).unwrap();
        let log_terms: Vec<(Expo, QG)> = (1..=8u16)
            .map(|n| {
                let sign = if n % 2 == 1 { 1 } else { -1 };
                (vec![n], QG::from_ratio(sign, n as i64))
            })
            .collect();
        let log1p = TruncatedSeries::from_terms(&["z"], 8, log_terms).unwrap();
        let composed = exp.compose(&[log1p]).unwrap();
        let expected = TruncatedSeries::from_terms(
            &["z"],
            8,
            vec![(vec![0], QG::one()), (vec![1], QG::one())],
        )
        .unwrap();
        assert_eq!(composed, expected);
    }

    #[test]
    fn derivative_examples() {
        let z3 = zser(6).pow(3).unwrap();
        let d = z3.partial_derivative("z").unwrap();
        let expected =
            TruncatedSeries::from_terms(&["z"], 5, vec![(vec![2], QG::from_int(3))]).unwrap();
        assert_eq!(d, expected);

        let z = TruncatedSeries::variable(&["z", "w"], 4, "z").unwrap();
        assert!(z.partial_derivative("w").unwrap().is_zero());
        assert!(z.partial_derivative("q").is_err());
    }

    #[test]
    fn valuation_examples() {
        let w = TruncatedSeries::variable(&["w"], 8, "w").unwrap();
        let s = w.pow(3).unwrap().add(&w.pow(5).unwrap()).unwrap();
        assert_eq!(s.total_valuation(), Valuation::Finite(3));
        let zero = TruncatedSeries::zero(&["w"], 8);
        assert_eq!(zero.total_valuation(), Valuation::Infinite);
    }

    #[test]
    fn divide_by_power_examples() {
        let z = TruncatedSeries::variable(&["z", "w"], 6, "z").unwrap();
        let w = TruncatedSeries::variable(&["z", "w"], 6, "w").unwrap();
        let w2z = w.pow(2).unwrap().mul(&z).unwrap();
        assert_eq!(
            w2z.divide_by_power("w", 2).unwrap(),
            z.truncate_to(4)
        );

        let w3 = w.pow(3).unwrap();
        let w4 = w.pow(4).unwrap();
        let q = w3.add(&w4).unwrap().divide_by_power("w", 3).unwrap();
        let expected = TruncatedSeries::from_terms(
            &["z", "w"],
            3,
            vec![(vec![0, 0], QG::one()), (vec![0, 1], QG::one())],
        )
        .unwrap();
        assert_eq!(q, expected);

        let bad = z.add(&w.pow(2).unwrap()).unwrap();
        match bad.divide_by_power("w", 1) {
            Err(Error::DivisionObstruction { var, required, found, .. }) => {
                assert_eq!(var, "w");
                assert_eq!(required, 1);
                assert_eq!(found, 0);
            }
            other => panic!("expected DivisionObstruction, got {other:?}"),
        }
    }

    #[test]
    fn invert_unit_examples() {
        let one = TruncatedSeries::one(&["z"], 7);
        let z = zser(7);
        let inv = one.sub(&z).unwrap().invert_unit().unwrap();
        let geo = TruncatedSeries::from_terms(
            &["z"],
            7,
            (0..=7).map(|n| (vec![n as u16], QG::one())),
        )
        .unwrap();
        assert_eq!(inv, geo);

        let two = TruncatedSeries::constant(&["z"], 7, QG::from_int(2));
        assert_eq!(
            two.invert_unit().unwrap(),
            TruncatedSeries::constant(&["z"], 7, QG::from_ratio(1, 2))
        );

        assert!(zser(7).invert_unit().is_err());
    }

    #[test]
    fn conjugate_examples() {
        let iz = zser(5).scale(&QG::i());
        assert_eq!(iz.conjugate(), zser(5).scale(&QG::i().conj()));
        assert_eq!(iz.conjugate().conjugate(), iz);
    }

    #[test]
    fn solve_implicit_catalan() {
        // y - z - y^2 = 0  =>  y = z + z^2 + 2z^3 + 5z^4 + 14z^5 (Catalan).
        // Oracle: the degree-by-degree recursion c_1 = 1,
        // c_n = sum_{i+j=n} c_i c_j, frozen below.
        let trunc = 5;
        let vars = ["z", "y"];
        let y = TruncatedSeries::variable(&vars, trunc, "y").unwrap();
        let z = TruncatedSeries::variable(&vars, trunc, "z").unwrap();
        let eq = y.sub(&z).unwrap().sub(&y.pow(2).unwrap()).unwrap();
        let sol = solve_implicit(&[eq], 1).unwrap();
        let expected = TruncatedSeries::from_terms(
            &["z"],
            trunc,
            vec![
                (vec![1], QG::one()),
                (vec![2], QG::one()),
                (vec![3], QG::from_int(2)),
                (vec![4], QG::from_int(5)),
                (vec![5], QG::from_int(14)),
            ],
        )
        .unwrap();
        assert_eq!(sol[0], expected);
    }

    #[test]
    fn solve_implicit_identity() {
        let vars = ["z", "y"];
        let y = TruncatedSeries::variable(&vars, 6, "y").unwrap();
        let z = TruncatedSeries::variable(&vars, 6, "z").unwrap();
        let sol = solve_implicit(&[y.sub(&z).unwrap()], 1).unwrap();
        assert_eq!(sol[0], zser(6));
    }

    #[test]
    fn solve_implicit_pair_elimination() {
        // Solve the pair (w - b - a*b*z, w1 - a*b) for (a, b) in terms of
        // (z, w, w1); back-substitution must give a zero residual.
        let vars = ["z", "w", "w1", "a", "b"];
        let trunc = 6;
        let v = |n: &str| TruncatedSeries::variable(&vars, trunc, n).unwrap();
        let (z, w, w1, a, b) = (v("z"), v("w"), v("w1"), v("a"), v("b"));
        let ab = a.mul(&b).unwrap();
        let eq1 = w.sub(&b).unwrap().sub(&ab.mul(&z).unwrap()).unwrap();
        let eq2 = w1.sub(&ab).unwrap();
        let sol = solve_implicit(&[eq1.clone(), eq2.clone()], 2).unwrap();
        // residual check
        let xv = ["z", "w", "w1"];
        let mut inners: Vec<TruncatedSeries> = xv
            .iter()
            .map(|n| TruncatedSeries::variable(&xv, trunc, n).unwrap())
            .collect();
        inners.extend(sol.iter().cloned());
        assert!(eq1.compose(&inners).unwrap().is_zero());
        assert!(eq2.compose(&inners).unwrap().is_zero());
    }

    #[test]
    fn singular_jacobian_rejected() {
        // y^2 - z = 0 has singular Jacobian in y at the origin.
        let vars = ["z", "y"];
        let y = TruncatedSeries::variable(&vars, 4, "y").unwrap();
        let z = TruncatedSeries::variable(&vars, 4, "z").unwrap();
        let eq = y.pow(2).unwrap().sub(&z).unwrap();
        assert!(matches!(solve_implicit(&[eq], 1), Err(Error::SingularJacobian)));
    }

    #[test]
    fn text_round_trip() {
        let s = TruncatedSeries::from_terms(
            &["z", "chi", "tau"],
            5,
            vec![
                (vec![1, 1, 0], QG::from_parts(0, 1, 2, 1)),
                (vec![0, 0, 1], QG::one()),
                (vec![2, 2, 1], QG::from_ratio(-3, 7)),
            ],
        )
        .unwrap();
        let text = s.to_text();
        assert_eq!(TruncatedSeries::from_text(&text).unwrap(), s);
    }
}
