//! Entangle-measure attack operators.
//!
//! The forward operator acts on (target qubit ⊗ probe) with the probe
//! starting in level 0:
//!
//! ```text
//! U_E |0,0> = α|0,e_0> + β|1,e_1>
//! U_E |1,0> = β|0,e_2> + α|1,e_3>
//! ```
//!
//! and the backward operator on (returned qubit ⊗ probe):
//!
//! ```text
//! U_F |0,e_ω> = μ_ω|0,e⁰_{0,ω}> + ν_ω|1,e¹_{0,ω}>
//! U_F |1,e_ω> = ν_ω|0,e⁰_{1,ω}> + μ_ω|1,e¹_{1,ω}>
//! ```
//!
//! Probe kets are computational probe levels chosen by a [`ProbeLayout`].
//! Columns not fixed by these relations are filled by Gram-Schmidt over the
//! standard basis.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{Amplitude, Operator};

const PARAM_TOL: f64 = 1e-12;
const ORTHO_TOL: f64 = 1e-12;

/// Assignment of the probe kets `e_ω` and `e^b_{c,ω}` to probe levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeLayout {
    pub dim: usize,
    /// Level of `e_ω`.
    pub e: [usize; 4],
    /// Level of `e^b_{c,ω}`, indexed `[b][c][ω]`.
    pub f: [[[usize; 4]; 2]; 2],
}

impl ProbeLayout {
    /// Every probe ket is level 0; the probe never learns anything.
    pub fn constant(dim: usize) -> Self {
        Self { dim, e: [0; 4], f: [[[0; 4]; 2]; 2] }
    }

    /// `e_ω` is level `ω` and the backward operator leaves the probe level
    /// unchanged.
    pub fn marked(dim: usize) -> Self {
        Self { dim, e: [0, 1, 2, 3], f: [[[0, 1, 2, 3]; 2]; 2] }
    }

    /// `e_ω` is level `ω`; the backward operator writes the returned
    /// qubit's value `c` into the probe as level `2ω + c`. Needs `dim ≥ 8`
    /// and realises any `μ_ω, ν_ω`.
    pub fn wide(dim: usize) -> Self {
        let mut f = [[[0; 4]; 2]; 2];
        for plane in f.iter_mut() {
            for (c, row) in plane.iter_mut().enumerate() {
                for (w, level) in row.iter_mut().enumerate() {
                    *level = 2 * w + c;
                }
            }
        }
        Self { dim, e: [0, 1, 2, 3], f }
    }

    pub fn from_name(name: &str, dim: usize) -> Result<Self> {
        match name {
            "constant" => Ok(Self::constant(dim)),
            "marked" => Ok(Self::marked(dim)),
            "wide" => Ok(Self::wide(dim)),
            other => Err(Error::Parse(format!("unknown probe layout {other:?} (expected constant, marked or wide)"))),
        }
    }

    /// Smallest of constant, marked (d = 4) and wide (d = 8) that can
    /// realise the parameters.
    pub fn default_for(alpha: f64, beta: f64, mu: &[f64; 4], nu: &[f64; 4]) -> Self {
        let backward_plain = mu.iter().zip(nu).all(|(m, n)| m * n == 0.0);
        if alpha * beta == 0.0 && backward_plain && nu.iter().all(|&n| n == 0.0) {
            Self::constant(4)
        } else if backward_plain {
            Self::marked(4)
        } else {
            Self::wide(8)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim < 4 {
            return Err(Error::Validation(format!("probe dimension {} is below 4", self.dim)));
        }
        let levels = self.e.iter().chain(self.f.iter().flatten().flatten());
        if let Some(bad) = levels.copied().find(|&l| l >= self.dim) {
            return Err(Error::Validation(format!("probe level {bad} exceeds dimension {}", self.dim)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu: [f64; 4],
    pub nu: [f64; 4],
    pub layout: ProbeLayout,
}

impl EmParams {
    /// `β = √(1-α²)`.
    pub fn from_alpha(alpha: f64, mu: [f64; 4], nu: [f64; 4], layout: ProbeLayout) -> Self {
        let beta = (1.0 - alpha * alpha).max(0.0).sqrt();
        Self { alpha, beta, mu, nu, layout }
    }

    /// `α = 1`, `ν = 0` with a constant probe: the attack that leaves no
    /// trace and gains nothing.
    pub fn zero_point() -> Self {
        Self { alpha: 1.0, beta: 0.0, mu: [1.0; 4], nu: [0.0; 4], layout: ProbeLayout::constant(4) }
    }

    /// Marked probe, `ν = 0`, target flip amplitude `beta`.
    pub fn marked_with_beta(beta: f64) -> Self {
        let alpha = (1.0 - beta * beta).sqrt();
        Self { alpha, beta, mu: [1.0; 4], nu: [0.0; 4], layout: ProbeLayout::marked(4) }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.alpha, self.beta].into_iter().chain(self.mu).chain(self.nu);
        if vals.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("non-finite attack parameter".into()));
        }
        if (self.alpha.powi(2) + self.beta.powi(2) - 1.0).abs() > PARAM_TOL {
            return Err(Error::Validation(format!(
                "alpha^2 + beta^2 = {} is not 1",
                self.alpha.powi(2) + self.beta.powi(2)
            )));
        }
        for w in 0..4 {
            let s = self.mu[w].powi(2) + self.nu[w].powi(2);
            if (s - 1.0).abs() > PARAM_TOL {
                return Err(Error::Validation(format!("mu_{w}^2 + nu_{w}^2 = {s} is not 1")));
            }
        }
        self.layout.validate()
    }
}

fn real(x: f64) -> Amplitude {
    Complex64::new(x, 0.0)
}

struct ColumnSpec {
    dim: usize,
    columns: BTreeMap<usize, Vec<Amplitude>>,
}

impl ColumnSpec {
    fn new(dim: usize) -> Self {
        Self { dim, columns: BTreeMap::new() }
    }

    /// Fixes `U|input> = Σ coeff |output>`, rejecting conflicting duplicates.
    fn set(&mut self, input: usize, terms: &[(usize, f64)], what: &str) -> Result<()> {
        let mut column = vec![real(0.0); self.dim];
        for &(index, coeff) in terms {
            column[index] += real(coeff);
        }
        if let Some(existing) = self.columns.get(&input) {
            let conflict = existing.iter().zip(&column).any(|(a, b)| (a - b).norm() > ORTHO_TOL);
            if conflict {
                return Err(Error::Validation(format!(
                    "{what}: two relations fix input column {input} differently"
                )));
            }
            return Ok(());
        }
        self.columns.insert(input, column);
        Ok(())
    }

    fn complete(self, what: &str) -> Result<Operator> {
        let fixed: Vec<(usize, Vec<Amplitude>)> = self.columns.into_iter().collect();
        for (a, (ia, ca)) in fixed.iter().enumerate() {
            let norm = dot(ca, ca).re;
            if (norm - 1.0).abs() > ORTHO_TOL {
                return Err(Error::Validation(format!("{what}: image of column {ia} has norm² {norm}")));
            }
            for (ib, cb) in &fixed[a + 1..] {
                if dot(ca, cb).norm() > ORTHO_TOL {
                    return Err(Error::Validation(format!(
                        "{what}: images of columns {ia} and {ib} are not orthogonal; the layout cannot realise these parameters"
                    )));
                }
            }
        }
        let mut basis: Vec<Vec<Amplitude>> = fixed.iter().map(|(_, c)| c.clone()).collect();
        let mut columns: Vec<Option<Vec<Amplitude>>> = vec![None; self.dim];
        for (i, c) in &fixed {
            columns[*i] = Some(c.clone());
        }
        let mut candidates = 0..self.dim;
        for slot in columns.iter_mut().filter(|c| c.is_none()) {
            loop {
                let k = candidates.next().expect("standard basis spans the space");
                let mut v = vec![real(0.0); self.dim];
                v[k] = real(1.0);
                for _ in 0..2 {
                    for b in &basis {
                        let proj = dot(b, &v);
                        for (x, y) in v.iter_mut().zip(b) {
                            *x -= proj * y;
                        }
                    }
                }
                let norm = dot(&v, &v).re.sqrt();
                if norm > 1e-6 {
                    let v: Vec<Amplitude> = v.into_iter().map(|x| x / norm).collect();
                    basis.push(v.clone());
                    *slot = Some(v);
                    break;
                }
            }
        }
        let columns: Vec<Vec<Amplitude>> = columns.into_iter().map(|c| c.expect("filled")).collect();
        Operator::from_columns(&columns)
    }
}

fn dot(a: &[Amplitude], b: &[Amplitude]) -> Amplitude {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Builds `(U_E, U_F)` on (qubit ⊗ probe), qubit most significant.
pub fn build_em_family(params: &EmParams) -> Result<(Operator, Operator)> {
    params.validate()?;
    let layout = &params.layout;
    let d = layout.dim;
    let idx = |target: usize, level: usize| target * d + level;

    let mut ue = ColumnSpec::new(2 * d);
    ue.set(idx(0, 0), &[(idx(0, layout.e[0]), params.alpha), (idx(1, layout.e[1]), params.beta)], "U_E")?;
    ue.set(idx(1, 0), &[(idx(0, layout.e[2]), params.beta), (idx(1, layout.e[3]), params.alpha)], "U_E")?;

    let mut uf = ColumnSpec::new(2 * d);
    for w in 0..4 {
        let (mu, nu) = (params.mu[w], params.nu[w]);
        let f = &layout.f;
        uf.set(idx(0, layout.e[w]), &[(idx(0, f[0][0][w]), mu), (idx(1, f[1][0][w]), nu)], "U_F")?;
        uf.set(idx(1, layout.e[w]), &[(idx(0, f[0][1][w]), nu), (idx(1, f[1][1][w]), mu)], "U_F")?;
    }
    Ok((ue.complete("U_E")?, uf.complete("U_F")?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_point_is_identity_on_probe_level_zero() {
        let (ue, uf) = build_em_family(&EmParams::zero_point()).unwrap();
        let d = 4;
        assert!((ue.get(0, 0) - real(1.0)).norm() < 1e-15);
        assert!((ue.get(d, d) - real(1.0)).norm() < 1e-15);
        assert!((uf.get(0, 0) - real(1.0)).norm() < 1e-15);
        assert!((uf.get(d, d) - real(1.0)).norm() < 1e-15);
        assert!(ue.is_unitary(1e-12) && uf.is_unitary(1e-12));
    }

    #[test]
    fn full_flip_marks_probe() {
        let params = EmParams { alpha: 0.0, beta: 1.0, mu: [1.0; 4], nu: [0.0; 4], layout: ProbeLayout::marked(4) };
        let (ue, _) = build_em_family(&params).unwrap();
        // |0,0> -> |1,e_1>
        let col = ue.column(0);
        assert!((col[4 + 1] - real(1.0)).norm() < 1e-15);
        assert!(col.iter().enumerate().all(|(i, z)| i == 5 || z.norm() < 1e-15));
    }

    #[test]
    fn random_marked_parameters_give_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let mut mu = [1.0; 4];
            let mut nu = [0.0; 4];
            for w in 0..4 {
                // The marked layout only realises μν = 0 per ω.
                if rng.gen_bool(0.5) {
                    mu[w] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                } else {
                    mu[w] = 0.0;
                    nu[w] = 1.0;
                }
            }
            let params = EmParams { alpha: theta.cos(), beta: theta.sin(), mu, nu, layout: ProbeLayout::marked(4) };
            let (ue, uf) = build_em_family(&params).unwrap();
            assert!(ue.is_unitary(1e-12), "{:e}", ue.unitarity_defect());
            assert!(uf.is_unitary(1e-12), "{:e}", uf.unitarity_defect());
        }
    }

    #[test]
    fn wider_probe_realises_general_backward_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let mut mu = [0.0; 4];
            let mut nu = [0.0; 4];
            for w in 0..4 {
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                mu[w] = t.cos();
                nu[w] = t.sin();
            }
            let layout = ProbeLayout::wide(8);
            let params = EmParams { alpha: a.cos(), beta: a.sin(), mu, nu, layout };
            let (ue, uf) = build_em_family(&params).unwrap();
            assert!(ue.is_unitary(1e-12) && uf.is_unitary(1e-12));
        }
    }

    #[test]
    fn default_layout_realises_parameters() {
        let cases = [
            (1.0, 0.0, [1.0; 4], [0.0; 4], 4),
            (0.95, 0.312_249_899_919_967_9, [1.0; 4], [0.0; 4], 4),
            (0.6, 0.8, [0.6; 4], [0.8; 4], 8),
        ];
        for (alpha, beta, mu, nu, dim) in cases {
            let layout = ProbeLayout::default_for(alpha, beta, &mu, &nu);
            assert_eq!(layout.dim, dim);
            let params = EmParams { alpha, beta, mu, nu, layout };
            assert!(build_em_family(&params).is_ok());
        }
        assert_eq!(ProbeLayout::default_for(1.0, 0.0, &[1.0; 4], &[0.0; 4]), ProbeLayout::constant(4));
    }

    #[test]
    fn rejects_unrealisable_or_invalid_parameters() {
        let mut p = EmParams::zero_point();
        p.alpha = 0.8;
        p.beta = 0.6;
        // A constant probe cannot carry a partial flip.
        assert!(matches!(build_em_family(&p), Err(Error::Validation(_))));
        let mut p = EmParams::marked_with_beta(0.3);
        p.mu[2] = 0.5;
        assert!(build_em_family(&p).is_err());
        let mut p = EmParams::marked_with_beta(0.3);
        p.layout.dim = 3;
        assert!(build_em_family(&p).is_err());
        let p = EmParams { alpha: 0.6, beta: 0.8, mu: [0.6; 4], nu: [0.8; 4], layout: ProbeLayout::marked(4) };
        assert!(build_em_family(&p).is_err());
    }
}
