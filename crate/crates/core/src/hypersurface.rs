//! Real-analytic hypersurfaces in C^2 given by truncated defining series.
//!
//! The canonical input is the real defining series `v = F(z, zbar, u)`;
//! Hermitian symmetry of `F` is syntactically checkable, and the complex
//! defining series `w = Theta(z, chi, tau)` is always derived from it by an
//! implicit solve, so the reality condition holds by construction (and is
//! re-checked). Invariants m, p, k are computed from the truncated data and
//! are only meaningful "to truncation": callers certify stability by raising
//! the truncation.

use crate::error::{Error, Result};
use crate::jet::FormalMap;
use crate::num::GaussianRational;
use crate::series::{degree_of, solve_implicit, TruncatedSeries, Valuation};

pub const REAL_VARS: [&str; 3] = ["z", "zbar", "u"];
pub const COMPLEX_VARS: [&str; 3] = ["z", "chi", "tau"];

/// Real defining series `F(z, zbar, u)` of `v = F`, Hermitian-symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct RealDefiningSeries {
    f: TruncatedSeries,
}

impl RealDefiningSeries {
    /// Validates Hermitian symmetry (`F` real-valued), `F(0) = 0` and
    /// `dF(0) = 0` in `(z, zbar)`.
    pub fn new(f: TruncatedSeries) -> Result<Self> {
        if f.vars() != REAL_VARS {
            return Err(Error::VarMismatch {
                expected: REAL_VARS.iter().map(|s| s.to_string()).collect(),
                got: f.vars().to_vec(),
            });
        }
        for (e, c) in f.terms() {
            let swapped = vec![e[1], e[0], e[2]];
            let mirror = f.coefficient(&swapped);
            if mirror != c.conj() {
                return Err(Error::NotHermitian(e.clone()));
            }
        }
        if !f.constant_term().is_zero()
            || !f.coefficient(&[1, 0, 0]).is_zero()
            || !f.coefficient(&[0, 1, 0]).is_zero()
        {
            return Err(Error::Precondition(
                "real defining series must vanish to first order in (z, zbar) at 0".into(),
            ));
        }
        Ok(Self { f })
    }

    pub fn series(&self) -> &TruncatedSeries {
        &self.f
    }

    /// Normal coordinates: `F(z, 0, u) = F(0, zbar, u) = 0`, i.e. every term
    /// carries both `z` and `zbar`.
    pub fn is_normal(&self) -> bool {
        self.f.terms().all(|(e, _)| e[0] >= 1 && e[1] >= 1)
    }
}

/// Complex defining series `Theta(z, chi, tau)` of `w = Theta(z, zbar, wbar)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexDefiningSeries {
    theta: TruncatedSeries,
}

impl ComplexDefiningSeries {
    pub fn new(theta: TruncatedSeries) -> Result<Self> {
        if theta.vars() != COMPLEX_VARS {
            return Err(Error::VarMismatch {
                expected: COMPLEX_VARS.iter().map(|s| s.to_string()).collect(),
                got: theta.vars().to_vec(),
            });
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> &TruncatedSeries {
        &self.theta
    }

    pub fn trunc(&self) -> usize {
        self.theta.trunc()
    }

    /// The coefficient slice `Theta_{kl}(tau)` of `z^k chi^l`, as a series in
    /// one variable `tau`.
    pub fn slice(&self, k: usize, l: usize) -> TruncatedSeries {
        let mut terms = Vec::new();
        for (e, c) in self.theta.terms() {
            if e[0] as usize == k && e[1] as usize == l {
                terms.push((vec![e[2]], c.clone()));
            }
        }
        TruncatedSeries::from_terms(&["tau"], self.theta.trunc().saturating_sub(k + l), terms)
            .expect("slice exponents fit")
    }

    /// Normal coordinates: `Theta(z, 0, tau) = Theta(0, chi, tau) = tau`.
    pub fn is_normal(&self) -> bool {
        self.theta.terms().all(|(e, _)| {
            (e[0] >= 1 && e[1] >= 1) || (e[0] == 0 && e[1] == 0 && e[2] == 1)
        }) && self.theta.coefficient(&[0, 0, 1]) == GaussianRational::one()
    }

    pub fn assert_normal(&self) -> Result<()> {
        if !self.is_normal() {
            let offender = self
                .theta
                .terms()
                .find(|(e, _)| !((e[0] >= 1 && e[1] >= 1) || (e[0] == 0 && e[1] == 0 && e[2] == 1)))
                .map(|(e, _)| e.clone())
                .unwrap_or_else(|| vec![0, 0, 1]);
            return Err(Error::NotNormalCoordinates(offender));
        }
        Ok(())
    }
}

/// Nonminimality of the hypersurface at the origin, to truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nonminimality {
    /// `Theta = tau` to truncation: the Levi form vanishes identically.
    LeviFlat,
    /// Some `Theta_{kl}(0) != 0`: no complex curve through 0 inside M.
    Minimal,
    /// All slices vanish to order `m >= 1` at `tau = 0`.
    Order(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypersurfaceInvariants {
    pub levi_nonflat: bool,
    pub m: Nonminimality,
    /// Pure order; `None` when Levi-flat to truncation.
    pub p: Option<usize>,
    /// Least k with `ord_0 Theta_{k1} = m`; `None` if no such k in range.
    pub k: Option<usize>,
    pub generic_nonminimal: bool,
    /// Truncation the invariants were computed at.
    pub trunc: usize,
}

/// Derive `Theta` from `F` by solving `(w - wbar)/2i = F(z, zbar, (w+wbar)/2)`
/// for `w`. Reality holds by construction and is re-checked exactly.
pub fn complex_from_real(real: &RealDefiningSeries) -> Result<ComplexDefiningSeries> {
    let f = real.series();
    let trunc = f.trunc();
    // Ring (z, chi, tau, y) with y the unknown w.
    let vars = ["z", "chi", "tau", "y"];
    let y = TruncatedSeries::variable(&vars, trunc, "y")?;
    let tau = TruncatedSeries::variable(&vars, trunc, "tau")?;
    let z = TruncatedSeries::variable(&vars, trunc, "z")?;
    let chi = TruncatedSeries::variable(&vars, trunc, "chi")?;
    let half = GaussianRational::from_ratio(1, 2);
    let half_i_inv =
        &GaussianRational::one() / &(&GaussianRational::from_int(2) * &GaussianRational::i());
    // (y - tau)/(2i) - F(z, chi, (y + tau)/2) = 0
    let u_arg = y.add(&tau)?.scale(&half);
    let f_sub = f.compose(&[z, chi, u_arg])?;
    let eq = y.sub(&tau)?.scale(&half_i_inv).sub(&f_sub)?;
    let sol = solve_implicit(&[eq], 1)?;
    let theta = ComplexDefiningSeries::new(sol.into_iter().next().unwrap())?;
    if !check_reality(&theta) {
        return Err(Error::Precondition(
            "derived Theta fails the reality condition (inconsistent input)".into(),
        ));
    }
    Ok(theta)
}

/// Residual of the reality condition: `Theta(z, chi, conj(Theta)(chi, z, w)) - w`
/// as a series in `(z, chi, w)`. Zero iff the reality condition holds.
pub fn reality_residual(t: &ComplexDefiningSeries) -> TruncatedSeries {
    let trunc = t.trunc();
    let ring = ["z", "chi", "w"];
    let z = TruncatedSeries::variable(&ring, trunc, "z").unwrap();
    let chi = TruncatedSeries::variable(&ring, trunc, "chi").unwrap();
    let w = TruncatedSeries::variable(&ring, trunc, "w").unwrap();
    // conj(Theta)(chi, z, w): conjugate coefficients, then swap first two slots.
    let bar = t.theta().conjugate();
    let bar_swapped = bar.compose(&[chi.clone(), z.clone(), w.clone()]).unwrap();
    let lhs = t.theta().compose(&[z, chi, bar_swapped]).unwrap();
    lhs.sub(&w.truncate_to(lhs.trunc())).unwrap()
}

pub fn check_reality(t: &ComplexDefiningSeries) -> bool {
    reality_residual(t).is_zero()
}

/// Nonminimality order m: `min_{k,l >= 1} ord_tau Theta_{kl}`.
pub fn nonminimality_order(t: &ComplexDefiningSeries) -> Result<Nonminimality> {
    t.assert_normal()?;
    let mut min_ord: Option<usize> = None;
    for (e, _) in t.theta().terms() {
        if e[0] >= 1 && e[1] >= 1 {
            let ord = e[2] as usize;
            min_ord = Some(min_ord.map_or(ord, |m| m.min(ord)));
        }
    }
    Ok(match min_ord {
        None => Nonminimality::LeviFlat,
        Some(0) => Nonminimality::Minimal,
        Some(m) => Nonminimality::Order(m),
    })
}

/// Pure order p: `p + 1 = min_{k,l >= 1} (l + ord_0 Theta_{kl})`.
pub fn pure_order(t: &ComplexDefiningSeries) -> Result<usize> {
    t.assert_normal()?;
    let mut min_sum: Option<usize> = None;
    for (e, _) in t.theta().terms() {
        if e[0] >= 1 && e[1] >= 1 {
            let s = e[1] as usize + e[2] as usize;
            min_sum = Some(min_sum.map_or(s, |m| m.min(s)));
        }
    }
    match min_sum {
        None => Err(Error::LeviFlat),
        Some(s) => Ok(s - 1),
    }
}

/// Least `k >= 1` with `ord_0 Theta_{k1} = m`, within the truncation.
pub fn k_nondegeneracy_index(t: &ComplexDefiningSeries, m: usize) -> Option<usize> {
    let trunc = t.trunc();
    for k in 1..=trunc {
        let slice = t.slice(k, 1);
        if let Valuation::Finite(ord) = slice.total_valuation() {
            if ord == m {
                return Some(k);
            }
        }
    }
    None
}

/// All invariants in one report.
pub fn invariants(t: &ComplexDefiningSeries) -> Result<HypersurfaceInvariants> {
    let m = nonminimality_order(t)?;
    let levi_nonflat = m != Nonminimality::LeviFlat;
    let p = if levi_nonflat { Some(pure_order(t)?) } else { None };
    let (k, generic) = match m {
        Nonminimality::Order(ord) => {
            let k = k_nondegeneracy_index(t, ord);
            // Generic: Theta_{11} has exact order m (admissible form).
            let generic = matches!(
                t.slice(1, 1).total_valuation(),
                Valuation::Finite(v) if v == ord
            );
            (k, generic)
        }
        _ => (None, false),
    };
    Ok(HypersurfaceInvariants {
        levi_nonflat,
        m,
        p,
        k,
        generic_nonminimal: generic,
        trunc: t.trunc(),
    })
}

/// Graphing function of the Segre variety with parameters `(a, b)`:
/// `w(z; a, b) = Theta(z, a, b)`, in whatever ring `a` and `b` live in
/// (that ring must contain a variable `z`).
pub fn segre_graphing_function(
    t: &ComplexDefiningSeries,
    a: &TruncatedSeries,
    b: &TruncatedSeries,
) -> Result<TruncatedSeries> {
    let ring: Vec<&str> = a.vars().iter().map(|s| s.as_str()).collect();
    let trunc = a.trunc().min(b.trunc());
    let z = TruncatedSeries::variable(&ring, trunc, "z")?;
    t.theta().compose(&[z, a.clone(), b.clone()])
}

/// The full symbolic Segre family `rho(z, a, b) = Theta(z, a, b)` with the
/// parameters as fresh formal variables.
pub fn segre_family(t: &ComplexDefiningSeries) -> TruncatedSeries {
    t.theta().rename_vars(&["z", "a", "b"]).unwrap()
}

/// Defining series of the image hypersurface `H(M)`.
///
/// Computed from the inverse map `K = H^{-1}` by solving
/// `G~(w*) = Theta(F~(z*, w*), conj F~(chi*, tau*), conj G~(chi*, tau*))`
/// for `w*`. The result must again be in normal coordinates; maps of the
/// form `(z u(z,w), g(w))` with `g` real-coefficient preserve normality.
pub fn transform_hypersurface(
    t: &ComplexDefiningSeries,
    h: &FormalMap,
) -> Result<ComplexDefiningSeries> {
    let trunc = t.trunc().min(h.f().trunc());
    let k = h.inverse(trunc)?;
    let vars = ["z", "chi", "tau", "y"]; // y = unknown w*
    let z = TruncatedSeries::variable(&vars, trunc, "z")?;
    let chi = TruncatedSeries::variable(&vars, trunc, "chi")?;
    let tau = TruncatedSeries::variable(&vars, trunc, "tau")?;
    let y = TruncatedSeries::variable(&vars, trunc, "y")?;
    // K components evaluated at (z*, w*) = (z, y):
    let f_zy = k.f().compose(&[z.clone(), y.clone()])?;
    let g_zy = k.g().compose(&[z, y])?;
    // conjugated K components at (chi*, tau*):
    let fbar_ct = k.f().conjugate().compose(&[chi.clone(), tau.clone()])?;
    let gbar_ct = k.g().conjugate().compose(&[chi, tau])?;
    let rhs = t.theta().compose(&[f_zy, fbar_ct, gbar_ct])?;
    let eq = g_zy.sub(&rhs)?;
    let sol = solve_implicit(&[eq], 1)?;
    let theta_star = ComplexDefiningSeries::new(sol.into_iter().next().unwrap())?;
    theta_star.assert_normal()?;
    if !check_reality(&theta_star) {
        return Err(Error::Precondition(
            "transformed hypersurface fails the reality condition".into(),
        ));
    }
    Ok(theta_star)
}

/// Corpus of hypersurfaces used across tests, the acceptance suite, and the
/// bundled manifests. Each is given by its real defining series.
pub mod corpus {
    use super::*;

    fn real_from_terms(
        trunc: usize,
        terms: Vec<(Vec<u16>, GaussianRational)>,
    ) -> RealDefiningSeries {
        let f = TruncatedSeries::from_terms(&REAL_VARS, trunc, terms).unwrap();
        RealDefiningSeries::new(f).unwrap()
    }

    /// Heisenberg sphere: `v = z zbar`.
    pub fn heisenberg(trunc: usize) -> RealDefiningSeries {
        real_from_terms(trunc, vec![(vec![1, 1, 0], GaussianRational::one())])
    }

    /// Generic m-nonminimal model: `v = u^m z zbar`.
    pub fn generic_nonminimal(m: usize, trunc: usize) -> RealDefiningSeries {
        real_from_terms(trunc, vec![(vec![1, 1, m as u16], GaussianRational::one())])
    }

    /// Exceptional model: `v = u^m z^2 zbar^2` (k-degenerate for every k).
    pub fn exceptional_square(m: usize, trunc: usize) -> RealDefiningSeries {
        real_from_terms(trunc, vec![(vec![2, 2, m as u16], GaussianRational::one())])
    }

    /// k = 2 nondegenerate model: `v = u^m (z^2 zbar + z zbar^2)`.
    pub fn k2_nondegenerate(m: usize, trunc: usize) -> RealDefiningSeries {
        real_from_terms(
            trunc,
            vec![
                (vec![2, 1, m as u16], GaussianRational::one()),
                (vec![1, 2, m as u16], GaussianRational::one()),
            ],
        )
    }

    /// Mixed generic case: `v = u zbar z + u z^2 zbar^2`.
    pub fn mixed_generic(trunc: usize) -> RealDefiningSeries {
        real_from_terms(
            trunc,
            vec![
                (vec![1, 1, 1], GaussianRational::one()),
                (vec![2, 2, 1], GaussianRational::one()),
            ],
        )
    }

    /// Mixed exceptional case with nonvanishing Theta_11: `v = u^2 z zbar + u z^2 zbar^2`
    /// (m = 1 via the (2,2) slice, ord Theta_11 = 2 > m).
    pub fn mixed_exceptional(trunc: usize) -> RealDefiningSeries {
        real_from_terms(
            trunc,
            vec![
                (vec![1, 1, 2], GaussianRational::one()),
                (vec![2, 2, 1], GaussianRational::one()),
            ],
        )
    }

    /// All corpus entries with names, at the given truncation.
    pub fn all(trunc: usize) -> Vec<(&'static str, RealDefiningSeries)> {
        vec![
            ("heisenberg", heisenberg(trunc)),
            ("generic-m1", generic_nonminimal(1, trunc)),
            ("generic-m2", generic_nonminimal(2, trunc)),
            ("generic-m3", generic_nonminimal(3, trunc)),
            ("exceptional-m1", exceptional_square(1, trunc)),
            ("exceptional-m2", exceptional_square(2, trunc)),
            ("mixed-generic", mixed_generic(trunc)),
            ("mixed-exceptional", mixed_exceptional(trunc)),
        ]
    }
}

/// Leading part of a Levi-nonflat check: series is nonflat to truncation iff
/// some mixed term exists. Certification beyond the truncation is impossible
/// from finite data; reports carry the truncation for this reason.
pub fn levi_nonflat_to_truncation(t: &ComplexDefiningSeries) -> bool {
    t.theta().terms().any(|(e, _)| e[0] >= 1 && e[1] >= 1)
}

pub fn theta_total_degree(e: &[u16]) -> usize {
    degree_of(e)
}
