//! Associated differential equations of a hypersurface, produced by
//! eliminating the Segre-family parameters.
//!
//! Three shapes occur:
//! - Levi-nondegenerate at 0: a regular second-order ODE `w'' = Phi(z, w, w')`;
//! - generic m-nonminimal: the singular `w'' = w^m Phi(z, w, w'/w^m)`;
//! - k-nondegenerate: a system of k singular ODEs of orders <= k+1 in which
//!   `zeta = w_k / w^mu` is the distinguished argument.
//!
//! Elimination keeps the parameters `(a, b)` as formal variables, so every
//! factorization claim is machine-checked by exact division; rational
//! sampling is used only for verification, along the formal line
//! `(a, b) = (alpha s, beta s)` which keeps truncation sound.

use crate::error::{Error, Result};
use crate::hypersurface::{segre_family, ComplexDefiningSeries};
use crate::num::GaussianRational;
use crate::series::{solve_implicit, TruncatedSeries, Valuation};

/// Regular second-order ODE `w'' = Phi(z, w, w1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderODE {
    pub phi: TruncatedSeries,
}

/// Singular nonminimal ODE `w'' = w^m Phi(z, w, zeta)`, `zeta = w'/w^m`,
/// with `Phi = O(zeta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularODE {
    pub m: usize,
    pub phi: TruncatedSeries,
}

/// High-order associated system: `w^(j) = Phi_j(z, w, zeta)` for
/// `j = 1..k-1` and `w^(k+1) = Phi(z, w, zeta)`, `zeta = w_k / w^mu`,
/// every right side `O(w^mu zeta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HighOrderSystem {
    pub k: usize,
    pub mu: usize,
    /// `Phi_1 .. Phi_{k-1}`.
    pub lower: Vec<TruncatedSeries>,
    /// `Phi` governing `w^(k+1)`.
    pub top: TruncatedSeries,
    /// Coefficient of `z^0 w^mu zeta^k` in `Phi_1` (Property (*)); the
    /// defining-equation slot `w' = w^mu zeta` plays the role of `Phi_1`
    /// when k = 1.
    pub property_star: GaussianRational,
}

/// A Segre family `w = rho(z, a, b)` with formal parameters, together with
/// the grading exponent `mu` to use in the elimination.
#[derive(Clone, Debug, PartialEq)]
pub struct SegreFamilyData {
    pub rho: TruncatedSeries,
    pub mu: usize,
}

pub const FAMILY_VARS: [&str; 3] = ["z", "a", "b"];
pub const ODE_VARS: [&str; 3] = ["z", "w", "zeta"];
pub const JET1_VARS: [&str; 3] = ["z", "w", "w1"];

#[derive(Clone, Debug)]
pub enum AssociatedSystem {
    Nondegenerate(SecondOrderODE),
    Singular(SingularODE),
    HighOrder(HighOrderSystem),
}

/// Second-order ODE of a Levi-nondegenerate hypersurface: solve
/// `w = rho(z,a,b), w' = rho_z(z,a,b)` for `(a,b)` and substitute into
/// `rho_zz`.
pub fn associate_nondegenerate(t: &ComplexDefiningSeries) -> Result<SecondOrderODE> {
    let rho = segre_family(t);
    let ring = ["z", "w", "w1", "a", "b"];
    let trunc = rho.trunc();
    let rho5 = rho.extend_vars(&ring)?;
    let w = TruncatedSeries::variable(&ring, trunc, "w")?;
    let w1 = TruncatedSeries::variable(&ring, trunc, "w1")?;
    let e1 = rho5.sub(&w)?;
    let e2 = rho5.partial_derivative("z")?.sub(&w1.truncate_to(trunc - 1))?;
    let ab = solve_implicit(&[e1, e2], 2)?;
    let rho_zz = rho
        .partial_derivative("z")?
        .partial_derivative("z")?
        .rename_vars(&["z", "a", "b"])?;
    let z = TruncatedSeries::variable(&JET1_VARS, ab[0].trunc(), "z")?;
    let a_ab = ab[0].rename_vars(&JET1_VARS)?;
    let b_ab = ab[1].rename_vars(&JET1_VARS)?;
    let phi = rho_zz.compose(&[z, a_ab, b_ab])?;
    Ok(SecondOrderODE { phi })
}

/// Shared elimination for singular systems: given the family and `(k, mu)`,
/// produce `A, B` with `a = A(z, w, zeta)`, `b = B(z, w, zeta)` and the
/// substituted derivatives.
fn eliminate_singular(
    family: &SegreFamilyData,
    k: usize,
) -> Result<(Vec<TruncatedSeries>, TruncatedSeries)> {
    let rho = &family.rho;
    let mu = family.mu;
    if rho.vars() != FAMILY_VARS {
        return Err(Error::VarMismatch {
            expected: FAMILY_VARS.iter().map(|s| s.to_string()).collect(),
            got: rho.vars().to_vec(),
        });
    }
    let need = k + mu + 2;
    if rho.trunc() < need {
        return Err(Error::TruncationTooSmall { need, have: rho.trunc() });
    }
    // zeta_expr = (d^k_z rho) / rho^mu, computed through exact division by
    // b^mu; obstruction here means the nondegeneracy claim fails.
    let mut dk = rho.clone();
    for _ in 0..k {
        dk = dk.partial_derivative("z")?;
    }
    let num = dk.divide_by_power("b", mu)?;
    let rho_over_b = rho.divide_by_power("b", 1)?;
    let den_unit = rho_over_b.pow(mu)?.invert_unit()?;
    let zeta_expr = num.mul(&den_unit)?;
    // alpha: the coefficient of a^1 at z^0 b^0 must be nonzero.
    let alpha = zeta_expr.coefficient(&[0, 1, 0]);
    if alpha.is_zero() {
        return Err(Error::NotGeneric);
    }
    // Solve { rho = w, zeta_expr = zeta } for (a, b).
    let ring = ["z", "w", "zeta", "a", "b"];
    let trunc = zeta_expr.trunc();
    let rho5 = rho.truncate_to(trunc).extend_vars(&ring)?;
    let ze5 = zeta_expr.extend_vars(&ring)?;
    let w = TruncatedSeries::variable(&ring, trunc, "w")?;
    let zeta = TruncatedSeries::variable(&ring, trunc, "zeta")?;
    let ab = solve_implicit(&[rho5.sub(&w)?, ze5.sub(&zeta)?], 2)?;
    if !ab[0].var_valuation("zeta")?.at_least(1) {
        return Err(Error::ValuationViolation("parameter a is not O(zeta)".into()));
    }
    if !ab[1].var_valuation("w")?.at_least(1) {
        return Err(Error::ValuationViolation("parameter b is not O(w)".into()));
    }
    Ok((ab, dk))
}

/// Substitute `(A, B)` into `d^j_z rho`, producing `Phi_j(z, w, zeta)`.
fn substituted_derivative(
    rho: &TruncatedSeries,
    j: usize,
    ab: &[TruncatedSeries],
) -> Result<TruncatedSeries> {
    let mut dj = rho.clone();
    for _ in 0..j {
        dj = dj.partial_derivative("z")?;
    }
    let dj = dj.rename_vars(&["z", "a", "b"])?;
    let z = TruncatedSeries::variable(&ODE_VARS, ab[0].trunc(), "z")?;
    dj.compose(&[z, ab[0].clone(), ab[1].clone()])
}

/// Machine check of the factorization `Phi_j = O(w^mu zeta)`.
fn check_factored(phi: &TruncatedSeries, mu: usize, what: &str) -> Result<()> {
    let q = phi.divide_by_power("w", mu).map_err(|e| match e {
        Error::DivisionObstruction { var, required, found, term } => {
            Error::DivisionObstruction { var, required, found, term }
        }
        other => other,
    })?;
    if !q.var_valuation("zeta")?.at_least(1) {
        return Err(Error::ValuationViolation(format!("{what} is not O(zeta) after w^mu")));
    }
    Ok(())
}

/// Singular nonminimal second-order ODE of a generic m-nonminimal
/// hypersurface (Levi-nondegenerate minimal locus).
pub fn associate_nonminimal(t: &ComplexDefiningSeries, m: usize) -> Result<SingularODE> {
    // Genericity: Theta_11 has exact tau-order m.
    match t.slice(1, 1).total_valuation() {
        Valuation::Finite(v) if v == m => {}
        _ => return Err(Error::NotGeneric),
    }
    let family = SegreFamilyData { rho: segre_family(t), mu: m };
    let (ab, _) = eliminate_singular(&family, 1)?;
    let top = substituted_derivative(&family.rho, 2, &ab)?;
    // w'' = w^m Phi with Phi = O(zeta): division is the factorization claim.
    let phi = top.divide_by_power("w", m)?;
    if !phi.var_valuation("zeta")?.at_least(1) {
        return Err(Error::ValuationViolation("Phi is not O(zeta)".into()));
    }
    Ok(SingularODE { m, phi })
}

/// High-order associated system for a k-nondegenerate (or parameter-blown-up)
/// family.
pub fn associate_high_order_family(family: &SegreFamilyData, k: usize) -> Result<HighOrderSystem> {
    let (ab, _) = eliminate_singular(family, k)?;
    let mu = family.mu;
    let mut lower = Vec::with_capacity(k.saturating_sub(1));
    for j in 1..k {
        let phi_j = substituted_derivative(&family.rho, j, &ab)?;
        check_factored(&phi_j, mu, &format!("Phi_{j}"))?;
        lower.push(phi_j);
    }
    let top = substituted_derivative(&family.rho, k + 1, &ab)?;
    check_factored(&top, mu, "Phi")?;
    // Property (*): coefficient of z^0 w^mu zeta^k in Phi_1. For k = 1 the
    // role of Phi_1 is played by the defining relation w' = w^mu zeta, whose
    // coefficient is 1.
    let property_star = if k >= 2 {
        let mut e = vec![0u16; 3];
        e[1] = mu as u16;
        e[2] = k as u16;
        let c = lower[0].coefficient(&e);
        if c.is_zero() {
            return Err(Error::ValuationViolation(
                "Property (*) fails: z^0 w^mu zeta^k coefficient of Phi_1 vanishes".into(),
            ));
        }
        c
    } else {
        GaussianRational::one()
    };
    Ok(HighOrderSystem { k, mu, lower, top, property_star })
}

pub fn associate_high_order(
    t: &ComplexDefiningSeries,
    k: usize,
    mu: usize,
) -> Result<HighOrderSystem> {
    let family = SegreFamilyData { rho: segre_family(t), mu };
    associate_high_order_family(&family, k)
}

/// One verified sample: residual valuations of every equation of the system
/// along the formal parameter line `(a, b) = (alpha s, beta s)`.
#[derive(Clone, Debug)]
pub struct SampleReport {
    pub alpha: GaussianRational,
    pub beta: GaussianRational,
    pub residual_valuations: Vec<Valuation>,
    pub residual_truncs: Vec<usize>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct SegreVerification {
    pub samples: Vec<SampleReport>,
    pub pass: bool,
}

const LINE_VARS: [&str; 2] = ["z", "s"];

/// Graphing function along the sample line, as a series in `(z, s)`.
fn graph_on_line(
    rho: &TruncatedSeries,
    alpha: &GaussianRational,
    beta: &GaussianRational,
) -> Result<TruncatedSeries> {
    let trunc = rho.trunc();
    let z = TruncatedSeries::variable(&LINE_VARS, trunc, "z")?;
    let s = TruncatedSeries::variable(&LINE_VARS, trunc, "s")?;
    rho.compose(&[z, s.scale(alpha), s.scale(beta)])
}

/// Verify that sampled Segre graphs satisfy the associated system, exactly.
///
/// Failures are reported, not thrown; preconditions (zero `b` on a singular
/// system) do error.
pub fn verify_segre_solutions(
    system: &AssociatedSystem,
    t: &ComplexDefiningSeries,
    samples: &[(GaussianRational, GaussianRational)],
) -> Result<SegreVerification> {
    let rho = segre_family(t);
    verify_family_solutions(system, &SegreFamilyData { rho, mu: system_mu(system) }, samples)
}

fn system_mu(system: &AssociatedSystem) -> usize {
    match system {
        AssociatedSystem::Nondegenerate(_) => 0,
        AssociatedSystem::Singular(s) => s.m,
        AssociatedSystem::HighOrder(s) => s.mu,
    }
}

pub fn verify_family_solutions(
    system: &AssociatedSystem,
    family: &SegreFamilyData,
    samples: &[(GaussianRational, GaussianRational)],
) -> Result<SegreVerification> {
    let mut out = Vec::with_capacity(samples.len());
    for (alpha, beta) in samples {
        let report = verify_one_sample(system, family, alpha, beta)?;
        out.push(report);
    }
    let pass = out.iter().all(|r| r.pass);
    Ok(SegreVerification { samples: out, pass })
}

fn dz(series: &TruncatedSeries, j: usize) -> Result<TruncatedSeries> {
    let mut out = series.clone();
    for _ in 0..j {
        out = out.partial_derivative("z")?;
    }
    Ok(out)
}

fn verify_one_sample(
    system: &AssociatedSystem,
    family: &SegreFamilyData,
    alpha: &GaussianRational,
    beta: &GaussianRational,
) -> Result<SampleReport> {
    let w = graph_on_line(&family.rho, alpha, beta)?;
    let z = TruncatedSeries::variable(&LINE_VARS, w.trunc(), "z")?;
    let mut residuals: Vec<TruncatedSeries> = Vec::new();
    match system {
        AssociatedSystem::Nondegenerate(ode) => {
            let w1 = dz(&w, 1)?;
            let w2 = dz(&w, 2)?;
            let rhs = ode.phi.compose(&[z, w.clone(), w1])?;
            residuals.push(w2.sub(&rhs.truncate_to(w2.trunc()))?);
        }
        AssociatedSystem::Singular(ode) => {
            if beta.is_zero() {
                return Err(Error::Precondition(
                    "singular system sample requires nonzero b".into(),
                ));
            }
            let zeta = line_zeta(&w, 1, ode.m)?;
            let rhs = ode
                .phi
                .compose(&[z, w.clone(), zeta])?
                .mul(&w.pow(ode.m)?)?;
            let w2 = dz(&w, 2)?;
            residuals.push(w2.sub(&rhs.truncate_to(w2.trunc()))?);
        }
        AssociatedSystem::HighOrder(sys) => {
            if beta.is_zero() {
                return Err(Error::Precondition(
                    "singular system sample requires nonzero b".into(),
                ));
            }
            let zeta = line_zeta(&w, sys.k, sys.mu)?;
            for (j, phi_j) in sys.lower.iter().enumerate() {
                let rhs = phi_j.compose(&[z.clone(), w.clone(), zeta.clone()])?;
                let lhs = dz(&w, j + 1)?;
                residuals.push(lhs.sub(&rhs.truncate_to(lhs.trunc()))?);
            }
            let rhs = sys.top.compose(&[z, w.clone(), zeta])?;
            let lhs = dz(&w, sys.k + 1)?;
            residuals.push(lhs.sub(&rhs.truncate_to(lhs.trunc()))?);
        }
    }
    let residual_valuations: Vec<Valuation> =
        residuals.iter().map(|r| r.total_valuation()).collect();
    let residual_truncs: Vec<usize> = residuals.iter().map(|r| r.trunc()).collect();
    let pass = residuals.iter().all(|r| r.is_zero());
    Ok(SampleReport {
        alpha: alpha.clone(),
        beta: beta.clone(),
        residual_valuations,
        residual_truncs,
        pass,
    })
}

/// `zeta = w^(k) / w^mu` along the line, via exact division by `s^mu` and a
/// unit inversion; sound because every term of `w^(k)` carries `s^{mu+1}`.
fn line_zeta(w: &TruncatedSeries, k: usize, mu: usize) -> Result<TruncatedSeries> {
    let wk = dz(w, k)?;
    let num = wk.divide_by_power("s", mu)?;
    let den = w.pow(mu)?.divide_by_power("s", mu)?;
    num.mul(&den.invert_unit()?)
}

/// Reality-derived order symmetry (`0 = Theta_{k1}(w) + conj Theta_{1k}(w)`):
/// when `ord_0 Theta_{k1}` is finite it must equal `ord_0 Theta_{1k}`.
pub fn check_slice_order_symmetry(t: &ComplexDefiningSeries, k: usize) -> bool {
    let a = t.slice(k, 1).total_valuation();
    let b = t.slice(1, k).total_valuation();
    a == b
}
