//! Jet prolongation of formal maps of (C^2, 0) and the second-order
//! transformation rule for ODEs `w'' = Psi(z, w, w')`.
//!
//! Jet-space coordinates are `(z, w, w1, ..., wk)`. A prolonged component
//! `G^(j)` is kept as a fraction: numerator series over a power of
//! `DF = F_z + w1 F_w`, which preserves the "rational in w1, polynomial in
//! w2.." structure and avoids losing precision before it is needed.

use crate::error::{Error, Result};
use crate::num::{solve_linear_system, GaussianRational};
use crate::segre_ode::SecondOrderODE;
use crate::series::{solve_implicit, TruncatedSeries};

/// Default cap on the prolongation order; raise via [`prolong_with_limit`].
pub const DEFAULT_MAX_JET_ORDER: usize = 6;

pub const MAP_VARS: [&str; 2] = ["z", "w"];

/// An invertible formal map `H = (F, G)` of (C^2, 0).
#[derive(Clone, Debug, PartialEq)]
pub struct FormalMap {
    f: TruncatedSeries,
    g: TruncatedSeries,
    /// Set by the normalization routines once the map is known to be in one
    /// of the normalized shapes used by the reduction pipeline.
    pub normalized: bool,
}

impl FormalMap {
    pub fn new(f: TruncatedSeries, g: TruncatedSeries) -> Result<Self> {
        for s in [&f, &g] {
            if s.vars() != MAP_VARS {
                return Err(Error::VarMismatch {
                    expected: MAP_VARS.iter().map(|v| v.to_string()).collect(),
                    got: s.vars().to_vec(),
                });
            }
            if !s.constant_term().is_zero() {
                return Err(Error::Precondition("map must fix the origin".into()));
            }
        }
        let map = Self { f, g, normalized: false };
        if !map.is_invertible() {
            return Err(Error::NonInvertibleMap);
        }
        Ok(map)
    }

    pub fn identity(trunc: usize) -> Self {
        Self {
            f: TruncatedSeries::variable(&MAP_VARS, trunc, "z").unwrap(),
            g: TruncatedSeries::variable(&MAP_VARS, trunc, "w").unwrap(),
            normalized: true,
        }
    }

    pub fn f(&self) -> &TruncatedSeries {
        &self.f
    }

    pub fn g(&self) -> &TruncatedSeries {
        &self.g
    }

    pub fn trunc(&self) -> usize {
        self.f.trunc().min(self.g.trunc())
    }

    /// Linear part as a 2x2 matrix [[F_z, F_w], [G_z, G_w]] at 0.
    pub fn linear_part(&self) -> [[GaussianRational; 2]; 2] {
        [
            [self.f.coefficient(&[1, 0]), self.f.coefficient(&[0, 1])],
            [self.g.coefficient(&[1, 0]), self.g.coefficient(&[0, 1])],
        ]
    }

    pub fn is_invertible(&self) -> bool {
        let lp = self.linear_part();
        let det = &(&lp[0][0] * &lp[1][1]) - &(&lp[0][1] * &lp[1][0]);
        !det.is_zero()
    }

    /// `self` after `other`: `(self o other)(p) = self(other(p))`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let inners = [other.f.clone(), other.g.clone()];
        Ok(Self {
            f: self.f.compose(&inners)?,
            g: self.g.compose(&inners)?,
            normalized: false,
        })
    }

    /// Formal inverse by Newton iteration on the pair.
    pub fn inverse(&self, trunc: usize) -> Result<Self> {
        let vars = ["z", "w", "y1", "y2"];
        let y1 = TruncatedSeries::variable(&vars, trunc, "y1")?;
        let y2 = TruncatedSeries::variable(&vars, trunc, "y2")?;
        let z = TruncatedSeries::variable(&vars, trunc, "z")?;
        let w = TruncatedSeries::variable(&vars, trunc, "w")?;
        let fe = self.f.compose(&[y1.clone(), y2.clone()])?;
        let ge = self.g.compose(&[y1, y2])?;
        let sol = solve_implicit(&[fe.sub(&z)?, ge.sub(&w)?], 2)?;
        let mut it = sol.into_iter();
        Ok(Self {
            f: it.next().unwrap(),
            g: it.next().unwrap(),
            normalized: false,
        })
    }

    /// The Jacobian determinant `F_z G_w - F_w G_z` as a series in (z, w).
    pub fn jacobian(&self) -> Result<TruncatedSeries> {
        let fz = self.f.partial_derivative("z")?;
        let fw = self.f.partial_derivative("w")?;
        let gz = self.g.partial_derivative("z")?;
        let gw = self.g.partial_derivative("w")?;
        fz.mul(&gw)?.sub(&fw.mul(&gz)?)
    }
}

pub fn jet_vars(order: usize) -> Vec<String> {
    let mut v: Vec<String> = vec!["z".into(), "w".into()];
    for j in 1..=order {
        v.push(format!("w{j}"));
    }
    v
}

/// Total derivative `D = d_z + w1 d_w + sum_j w_{j+1} d_{w_j}` on a series in
/// jet variables up to `order`; the result uses one more jet variable.
pub fn total_derivative(expr: &TruncatedSeries, order: usize) -> Result<TruncatedSeries> {
    let expected = jet_vars(order);
    if expr.vars() != expected.as_slice() {
        return Err(Error::VarMismatch { expected, got: expr.vars().to_vec() });
    }
    let out_names = jet_vars(order + 1);
    let out_vars: Vec<&str> = out_names.iter().map(|s| s.as_str()).collect();
    let trunc = expr.trunc().saturating_sub(1);
    let lifted = expr.extend_vars(&out_vars)?;
    let mut acc = lifted.partial_derivative("z")?;
    let w1 = TruncatedSeries::variable(&out_vars, trunc, "w1")?;
    acc = acc.add(&w1.mul(&lifted.partial_derivative("w")?.truncate_to(trunc))?)?;
    for j in 1..=order {
        let wj1 = TruncatedSeries::variable(&out_vars, trunc, &format!("w{}", j + 1))?;
        let d = lifted.partial_derivative(&format!("w{j}"))?;
        acc = acc.add(&wj1.mul(&d.truncate_to(trunc))?)?;
    }
    Ok(acc)
}

/// Prolonged map: components `G^(j) = num_j / DF^{2j-1}` in jet variables.
#[derive(Clone, Debug)]
pub struct ProlongedMap {
    pub order: usize,
    /// `num[j]` is the numerator of `G^(j)` (index 0 is `G` itself).
    pub num: Vec<TruncatedSeries>,
    /// Power of `DF` in the denominator of `num[j]`.
    pub den_pow: Vec<usize>,
    /// `DF = F_z + w1 F_w` in the jet ring of order 1.
    pub df: TruncatedSeries,
}

impl ProlongedMap {
    /// Expand `G^(j)` as a single series in `(z, w, w1, ..., wj)`.
    pub fn component(&self, j: usize) -> Result<TruncatedSeries> {
        let names = jet_vars(j.max(1));
        let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let num = self.num[j].extend_vars(&vars)?;
        if self.den_pow[j] == 0 {
            return Ok(num);
        }
        let df = self.df.extend_vars(&vars)?;
        let inv = df.invert_unit()?;
        let mut out = num;
        for _ in 0..self.den_pow[j] {
            out = out.mul(&inv)?;
        }
        Ok(out)
    }
}

pub fn prolong(h: &FormalMap, order: usize) -> Result<ProlongedMap> {
    prolong_with_limit(h, order, DEFAULT_MAX_JET_ORDER)
}

/// Inductive prolongation `G^(j) = D G^(j-1) / D F`.
///
/// With `G^(j-1) = N / DF^d` this is
/// `G^(j) = (DN * DF - d * N * D(DF)) / DF^{d+2}`, so the denominator power
/// grows by 2 per order and the closed forms at orders 1, 2 have powers 1, 3.
pub fn prolong_with_limit(h: &FormalMap, order: usize, max: usize) -> Result<ProlongedMap> {
    if order > max {
        return Err(Error::JetOrderLimit { requested: order, max });
    }
    let jv1 = jet_vars(1);
    let jv1s: Vec<&str> = jv1.iter().map(|s| s.as_str()).collect();
    let fz = h.f.partial_derivative("z")?.extend_vars(&jv1s)?;
    let fw = h.f.partial_derivative("w")?.extend_vars(&jv1s)?;
    let w1 = TruncatedSeries::variable(&jv1s, fz.trunc(), "w1")?;
    let df = fz.add(&w1.mul(&fw)?)?;
    if df.constant_term().is_zero() {
        return Err(Error::NonInvertibleMap);
    }

    let jv0 = jet_vars(0);
    let jv0s: Vec<&str> = jv0.iter().map(|s| s.as_str()).collect();
    let mut num: Vec<TruncatedSeries> = vec![h.g.extend_vars(&jv0s)?];
    let mut den_pow: Vec<usize> = vec![0];

    for j in 1..=order {
        let prev = &num[j - 1];
        let d = den_pow[j - 1];
        let dn = total_derivative(&prev.extend_vars(
            &jet_vars(j - 1).iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        )?, j - 1)?;
        let names = jet_vars(j);
        let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let df_j = df.extend_vars(&vars)?;
        let next = if d == 0 {
            dn
        } else {
            // D(DF) in jet order 1 -> 2.
            let ddf = total_derivative(&df, 1)?.extend_vars(&vars)?;
            let prev_lift = prev.extend_vars(&vars)?;
            let term1 = dn.mul(&df_j)?;
            let term2 = prev_lift
                .mul(&ddf)?
                .scale(&GaussianRational::from_int(d as i64));
            term1.sub(&term2)?
        };
        num.push(next);
        den_pow.push(if d == 0 { 1 } else { d + 2 });
    }
    Ok(ProlongedMap { order, num, den_pow, df })
}

/// Constant terms `c_j(z, w)` of the prolonged components at
/// `w1 = ... = wj = 0`, via the recursion `c_1 = G_z/F_z`,
/// `c_j = d_z(c_{j-1}) / F_z`.
pub fn constant_term_scheme(h: &FormalMap, order: usize) -> Result<Vec<TruncatedSeries>> {
    let fz = h.f.partial_derivative("z")?;
    let fz_inv = fz.invert_unit()?;
    let mut out = Vec::with_capacity(order);
    let mut c = h.g.partial_derivative("z")?.mul(&fz_inv)?;
    out.push(c.clone());
    for _ in 2..=order {
        c = c
            .partial_derivative("z")?
            .mul(&fz_inv.truncate_to(c.trunc().saturating_sub(1)))?;
        out.push(c.clone());
    }
    Ok(out)
}

/// Transport an ODE `w'' = Psi*(z, w, w')` backwards through `H`: returns the
/// `Psi` with `H({w'' = Psi}) = {w'' = Psi*}` as jet-space submanifolds.
///
/// Requires `G_z(0,0) = 0` so that the prolonged map fixes the jet-space
/// origin (otherwise the composition with the target germ is not defined).
pub fn transported_ode(h: &FormalMap, target: &SecondOrderODE) -> Result<SecondOrderODE> {
    if !h.g.coefficient(&[1, 0]).is_zero() {
        return Err(Error::JetOriginNotFixed);
    }
    let psi_star = &target.phi;
    let trunc = h.trunc().min(psi_star.trunc() + 2);
    let names = jet_vars(1);
    let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let lift = |s: &TruncatedSeries| s.extend_vars(&vars);

    let fz = lift(&h.f.partial_derivative("z")?)?;
    let fw = lift(&h.f.partial_derivative("w")?)?;
    let gz = lift(&h.g.partial_derivative("z")?)?;
    let gw = lift(&h.g.partial_derivative("w")?)?;
    let fzz = lift(&h.f.partial_derivative("z")?.partial_derivative("z")?)?;
    let fzw = lift(&h.f.partial_derivative("z")?.partial_derivative("w")?)?;
    let fww = lift(&h.f.partial_derivative("w")?.partial_derivative("w")?)?;
    let gzz = lift(&h.g.partial_derivative("z")?.partial_derivative("z")?)?;
    let gzw = lift(&h.g.partial_derivative("z")?.partial_derivative("w")?)?;
    let gww = lift(&h.g.partial_derivative("w")?.partial_derivative("w")?)?;

    let w1 = TruncatedSeries::variable(&vars, trunc, "w1")?;
    let two = GaussianRational::from_int(2);

    // DF = F_z + w' F_w, DG = G_z + w' G_w.
    let dfs = fz.add(&w1.mul(&fw)?)?;
    let dgs = gz.add(&w1.mul(&gw)?)?;
    let j = fz.mul(&gw)?.sub(&fw.mul(&gz)?)?;
    let j_inv = j.invert_unit()?;

    // I0..I3 of the second-order transformation rule.
    let i0 = gz.mul(&fzz)?.sub(&fz.mul(&gzz)?)?;
    let i1 = gw
        .mul(&fzz)?
        .sub(&fw.mul(&gzz)?)?
        .sub(&fz.mul(&gzw)?.scale(&two))?
        .add(&gz.mul(&fzw)?.scale(&two))?;
    let i2 = gz
        .mul(&fww)?
        .sub(&fz.mul(&gww)?)?
        .sub(&fw.mul(&gzw)?.scale(&two))?
        .add(&gw.mul(&fzw)?.scale(&two))?;
    let i3 = gw.mul(&fww)?.sub(&fw.mul(&gww)?)?;

    // Psi*(F, G, DG/DF)
    let f_lift = lift(&h.f)?;
    let g_lift = lift(&h.g)?;
    let ratio = dgs.mul(&dfs.invert_unit()?)?;
    if !ratio.constant_term().is_zero() {
        return Err(Error::JetOriginNotFixed);
    }
    let psi_comp = psi_star.compose(&[f_lift, g_lift, ratio])?;

    let df3 = dfs.mul(&dfs)?.mul(&dfs)?;
    let sum = df3
        .mul(&psi_comp)?
        .add(&i0)?
        .add(&i1.mul(&w1)?)?
        .add(&i2.mul(&w1.mul(&w1)?)?)?
        .add(&i3.mul(&w1.mul(&w1)?.mul(&w1)?)?)?;
    let psi = j_inv.mul(&sum)?;
    Ok(SecondOrderODE { phi: psi })
}

/// Random invertible maps fixing the jet-space origin (`G_z(0,0) = 0`),
/// polynomial of total degree <= `deg`. Used by the equivalence tests.
pub fn random_map(
    rng: &mut impl rand::Rng,
    trunc: usize,
    deg: usize,
    max_num: i64,
) -> FormalMap {
    loop {
        let mut f_terms = Vec::new();
        let mut g_terms = Vec::new();
        let push_random = |terms: &mut Vec<(Vec<u16>, GaussianRational)>, e: Vec<u16>, rng: &mut dyn rand::RngCore| {
            let num = (rng.next_u64() % (2 * max_num as u64 + 1)) as i64 - max_num;
            let den = (rng.next_u64() % 3 + 1) as i64;
            let imn = (rng.next_u64() % (2 * max_num as u64 + 1)) as i64 - max_num;
            let c = GaussianRational::from_parts(num, den, imn, den + 1);
            if !c.is_zero() {
                terms.push((e, c));
            }
        };
        for dz in 0..=deg as u16 {
            for dw in 0..=(deg as u16 - dz) {
                let d = dz + dw;
                if d == 0 || d as usize > deg {
                    continue;
                }
                if (dz, dw) == (1, 0) || (dz, dw) == (0, 1) {
                    continue; // linear parts handled below
                }
                if rng.gen_bool(0.5) {
                    push_random(&mut f_terms, vec![dz, dw], rng);
                }
                if rng.gen_bool(0.5) && !(dw == 0 && dz == 0) {
                    g_terms.push((vec![dz, dw], GaussianRational::from_ratio(
                        (rng.next_u64() % 5) as i64 - 2,
                        (rng.next_u64() % 2 + 1) as i64,
                    )));
                }
            }
        }
        // Invertible linear part, lower-triangular so G_z(0) = 0.
        let a = (rng.next_u64() % 3) as i64 + 1;
        let d = (rng.next_u64() % 3) as i64 + 1;
        f_terms.push((vec![1, 0], GaussianRational::from_int(a)));
        if rng.gen_bool(0.4) {
            f_terms.push((vec![0, 1], GaussianRational::from_parts(1, 2, 1, 3)));
        }
        g_terms.push((vec![0, 1], GaussianRational::from_int(d)));
        let f = TruncatedSeries::from_terms(&MAP_VARS, trunc, f_terms).unwrap();
        let g = TruncatedSeries::from_terms(&MAP_VARS, trunc, g_terms).unwrap();
        if let Ok(map) = FormalMap::new(f, g) {
            return map;
        }
    }
}

/// Check the linear part is invertible over Q(i) via an exact solve.
pub fn linear_part_invertible(h: &FormalMap) -> bool {
    let lp = h.linear_part();
    let rows = vec![lp[0].to_vec(), lp[1].to_vec()];
    solve_linear_system(&rows, &[GaussianRational::zero(), GaussianRational::zero()]).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::GaussianRational as QG;
    use rand::{RngCore, SeedableRng};

    fn map_zw_plus_w2(trunc: usize) -> FormalMap {
        // H = (z, w + w^2)
        let f = TruncatedSeries::variable(&MAP_VARS, trunc, "z").unwrap();
        let w = TruncatedSeries::variable(&MAP_VARS, trunc, "w").unwrap();
        let g = w.add(&w.pow(2).unwrap()).unwrap();
        FormalMap::new(f, g).unwrap()
    }

    #[test]
    fn total_derivative_examples() {
        let jv = jet_vars(1);
        let vars: Vec<&str> = jv.iter().map(|s| s.as_str()).collect();
        let w = TruncatedSeries::variable(&vars, 6, "w").unwrap();
        let dw = total_derivative(&w, 1).unwrap();
        let jv2 = jet_vars(2);
        let vars2: Vec<&str> = jv2.iter().map(|s| s.as_str()).collect();
        assert_eq!(dw, TruncatedSeries::variable(&vars2, 5, "w1").unwrap());

        // D(z*w1) = w1 + z*w2
        let z = TruncatedSeries::variable(&vars, 6, "z").unwrap();
        let w1 = TruncatedSeries::variable(&vars, 6, "w1").unwrap();
        let expr = z.mul(&w1).unwrap();
        let d = total_derivative(&expr, 1).unwrap();
        let w1b = TruncatedSeries::variable(&vars2, 5, "w1").unwrap();
        let zb = TruncatedSeries::variable(&vars2, 5, "z").unwrap();
        let w2b = TruncatedSeries::variable(&vars2, 5, "w2").unwrap();
        assert_eq!(d, w1b.add(&zb.mul(&w2b).unwrap()).unwrap());
    }

    #[test]
    fn total_derivative_leibniz() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let jv = jet_vars(2);
        let vars: Vec<&str> = jv.iter().map(|s| s.as_str()).collect();
        for _ in 0..10 {
            let rand_series = |rng: &mut rand_chacha::ChaCha8Rng| {
                let mut terms = Vec::new();
                for _ in 0..5 {
                    let e: Vec<u16> = (0..4).map(|_| (rng.next_u64() % 2) as u16).collect();
                    terms.push((
                        e,
                        QG::from_ratio((rng.next_u64() % 7) as i64 - 3, 1 + (rng.next_u64() % 3) as i64),
                    ));
                }
                TruncatedSeries::from_terms(&vars, 6, terms).unwrap()
            };
            let a = rand_series(&mut rng);
            let b = rand_series(&mut rng);
            let dab = total_derivative(&a.mul(&b).unwrap(), 2).unwrap();
            let jv3 = jet_vars(3);
            let vars3: Vec<&str> = jv3.iter().map(|s| s.as_str()).collect();
            let leib = total_derivative(&a, 2)
                .unwrap()
                .mul(&b.extend_vars(&vars3).unwrap().truncate_to(5))
                .unwrap()
                .add(
                    &total_derivative(&b, 2)
                        .unwrap()
                        .mul(&a.extend_vars(&vars3).unwrap().truncate_to(5))
                        .unwrap(),
                )
                .unwrap();
            assert_eq!(dab, leib);
        }
    }

    #[test]
    fn prolong_identity() {
        let h = FormalMap::identity(8);
        let p = prolong(&h, 3).unwrap();
        for j in 1..=3 {
            let comp = p.component(j).unwrap();
            let names = jet_vars(j);
            let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            let wj = TruncatedSeries::variable(&vars, comp.trunc(), &format!("w{j}")).unwrap();
            assert_eq!(comp, wj, "component {j}");
        }
    }

    #[test]
    fn prolong_first_order_hand_example() {
        // H = (z, w + w^2): G^(1) = (1 + 2w) w1.
        let h = map_zw_plus_w2(8);
        let p = prolong(&h, 1).unwrap();
        let comp = p.component(1).unwrap();
        let names = jet_vars(1);
        let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let w = TruncatedSeries::variable(&vars, comp.trunc(), "w").unwrap();
        let w1 = TruncatedSeries::variable(&vars, comp.trunc(), "w1").unwrap();
        let expected = w1
            .mul(&TruncatedSeries::one(&vars, comp.trunc())
                .add(&w.scale(&QG::from_int(2)))
                .unwrap())
            .unwrap();
        assert_eq!(comp, expected);
    }

    #[test]
    fn prolong_matches_explicit_second_order_formula() {
        // G^(2) must match the classical closed form
        //   [(F_z + w1 F_w)(G_zz + 2 w1 G_zw + w1^2 G_ww + w2 G_w)
        //    - (G_z + w1 G_w)(F_zz + 2 w1 F_zw + w1^2 F_ww + w2 F_w)]
        //   / (F_z + w1 F_w)^3
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..6 {
            let h = random_map(&mut rng, 7, 3, 2);
            let p = prolong(&h, 2).unwrap();
            let lhs = p.component(2).unwrap();

            let names = jet_vars(2);
            let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            let lift = |s: &TruncatedSeries| s.extend_vars(&vars).unwrap();
            let d = |s: &TruncatedSeries, v: &str| s.partial_derivative(v).unwrap();
            let two = QG::from_int(2);
            let fz = d(h.f(), "z");
            let fw = d(h.f(), "w");
            let gz = d(h.g(), "z");
            let gw = d(h.g(), "w");
            let trunc = lhs.trunc();
            let w1 = TruncatedSeries::variable(&vars, trunc, "w1").unwrap();
            let w2 = TruncatedSeries::variable(&vars, trunc, "w2").unwrap();
            let df = lift(&fz).add(&w1.mul(&lift(&fw)).unwrap()).unwrap();
            let a = lift(&d(&gz, "z"))
                .add(&w1.mul(&lift(&d(&gz, "w"))).unwrap().scale(&two))
                .unwrap()
                .add(&w1.mul(&w1).unwrap().mul(&lift(&d(&gw, "w"))).unwrap())
                .unwrap()
                .add(&w2.mul(&lift(&gw)).unwrap())
                .unwrap();
            let b = lift(&d(&fz, "z"))
                .add(&w1.mul(&lift(&d(&fz, "w"))).unwrap().scale(&two))
                .unwrap()
                .add(&w1.mul(&w1).unwrap().mul(&lift(&d(&fw, "w"))).unwrap())
                .unwrap()
                .add(&w2.mul(&lift(&fw)).unwrap())
                .unwrap();
            let dg = lift(&gz).add(&w1.mul(&lift(&gw)).unwrap()).unwrap();
            let numerator = df.mul(&a).unwrap().sub(&dg.mul(&b).unwrap()).unwrap();
            let df_inv = df.invert_unit().unwrap();
            let rhs = numerator
                .mul(&df_inv)
                .unwrap()
                .mul(&df_inv)
                .unwrap()
                .mul(&df_inv)
                .unwrap();
            assert_eq!(lhs.truncate_to(rhs.trunc()), rhs.truncate_to(lhs.trunc()));
        }
    }

    #[test]
    fn constant_terms_examples() {
        // Identity: c_j = 0 since G_z = 0.
        let id = FormalMap::identity(8);
        for c in constant_term_scheme(&id, 3).unwrap() {
            assert!(c.is_zero());
        }

        // G carrying z w^m: every c_j divisible by w^m.
        let m = 2usize;
        let z = TruncatedSeries::variable(&MAP_VARS, 8, "z").unwrap();
        let w = TruncatedSeries::variable(&MAP_VARS, 8, "w").unwrap();
        let g = w
            .add(&z.mul(&w.pow(m).unwrap()).unwrap())
            .unwrap();
        let h = FormalMap::new(z.clone(), g).unwrap();
        for c in constant_term_scheme(&h, 3).unwrap() {
            assert!(c.var_valuation("w").unwrap().at_least(m));
        }

        // Agreement with prolong evaluated at w1 = ... = wj = 0.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..4 {
            let h = random_map(&mut rng, 7, 3, 2);
            let cs = constant_term_scheme(&h, 3).unwrap();
            let p = prolong(&h, 3).unwrap();
            for (j, c) in cs.iter().enumerate() {
                let comp = p.component(j + 1).unwrap();
                let mut at_zero = comp;
                for jj in 1..=j + 1 {
                    at_zero = at_zero
                        .coeff_of(&format!("w{jj}"), 0)
                        .unwrap();
                }
                // at_zero now lives in (z, w)
                let c_cut = c.truncate_to(at_zero.trunc());
                assert_eq!(at_zero.truncate_to(c_cut.trunc()), c_cut);
            }
        }
    }

    #[test]
    fn transported_ode_identity() {
        let names = jet_vars(1);
        let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let psi = TruncatedSeries::from_terms(
            &vars,
            6,
            vec![
                (vec![1, 0, 1], QG::from_int(3)),
                (vec![0, 2, 0], QG::i()),
            ],
        )
        .unwrap();
        let ode = SecondOrderODE { phi: psi.clone() };
        let out = transported_ode(&FormalMap::identity(8), &ode).unwrap();
        assert_eq!(out.phi, psi.truncate_to(out.phi.trunc()));
    }

    #[test]
    fn transported_ode_hand_example() {
        // Target w'' = 0 through H = (z, w + w^2):
        // Psi = -2 (w')^2 / (1 + 2w).
        let h = map_zw_plus_w2(8);
        let names = jet_vars(1);
        let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let zero = SecondOrderODE { phi: TruncatedSeries::zero(&vars, 8) };
        let psi = transported_ode(&h, &zero).unwrap().phi;
        let w = TruncatedSeries::variable(&vars, psi.trunc(), "w").unwrap();
        let w1 = TruncatedSeries::variable(&vars, psi.trunc(), "w1").unwrap();
        let expected = w1
            .mul(&w1)
            .unwrap()
            .scale(&QG::from_int(-2))
            .mul(
                &TruncatedSeries::one(&vars, psi.trunc())
                    .add(&w.scale(&QG::from_int(2)))
                    .unwrap()
                    .invert_unit()
                    .unwrap(),
            )
            .unwrap();
        assert_eq!(psi, expected);
    }

    #[test]
    fn transported_ode_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let names = jet_vars(1);
        let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        for _ in 0..5 {
            let h = random_map(&mut rng, 10, 3, 2);
            let hinv = h.inverse(10).unwrap();
            let mut terms = Vec::new();
            for _ in 0..6 {
                let e: Vec<u16> = (0..3).map(|_| (rng.next_u64() % 3) as u16).collect();
                terms.push((
                    e,
                    QG::from_ratio((rng.next_u64() % 9) as i64 - 4, 1 + (rng.next_u64() % 2) as i64),
                ));
            }
            let psi = TruncatedSeries::from_terms(&vars, 6, terms).unwrap();
            let ode = SecondOrderODE { phi: psi.clone() };
            let fwd = transported_ode(&h, &ode).unwrap();
            let back = transported_ode(&hinv, &fwd).unwrap();
            let cut = back.phi.trunc().min(4);
            assert_eq!(back.phi.truncate_to(cut), psi.truncate_to(cut));
        }
    }

    #[test]
    fn functoriality_of_prolongation() {
        // prolong(H1 o H2, k) equals prolong(H1) composed with prolong(H2)
        // as jet-space maps.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let h1 = random_map(&mut rng, 8, 3, 2);
            let h2 = random_map(&mut rng, 8, 3, 2);
            let h12 = h1.compose(&h2).unwrap();
            let k = 3;
            let p12 = prolong(&h12, k).unwrap();
            let p1 = prolong(&h1, k).unwrap();
            let p2 = prolong(&h2, k).unwrap();
            let names = jet_vars(k);
            let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            // Jet map of H2: (F2, G2, G2^(1), ..., G2^(k)) lifted to order-k ring.
            let mut h2_jet: Vec<TruncatedSeries> = vec![
                h2.f().extend_vars(&vars).unwrap(),
                h2.g().extend_vars(&vars).unwrap(),
            ];
            for j in 1..=k {
                h2_jet.push(p2.component(j).unwrap().extend_vars(&vars).unwrap());
            }
            let min_trunc = h2_jet.iter().map(|s| s.trunc()).min().unwrap();
            let h2_jet: Vec<TruncatedSeries> =
                h2_jet.iter().map(|s| s.truncate_to(min_trunc)).collect();
            for j in 1..=k {
                let lhs = p12.component(j).unwrap();
                let g1j = p1.component(j).unwrap().extend_vars(&vars).unwrap();
                let rhs = g1j.compose(&h2_jet[..2 + j]).unwrap();
                let cut = lhs.trunc().min(rhs.trunc()).min(4);
                assert_eq!(lhs.truncate_to(cut), rhs.truncate_to(cut), "order {j}");
            }
        }
    }
}
