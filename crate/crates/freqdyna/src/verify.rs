//! The spectral verification suite behind the `verify` subcommand.

use std::f64::consts::PI;

use freqdyna_core::rng::{stream, Stream};
use freqdyna_core::spectral::{
    bandlimited_identities, check_connection, f_sin_eval, integrate_sq_derivative, uncertainty_check, BesselJ0,
    Field, Gaussian1D, Grid, OneMinusCos1D, Sine1D,
};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// `|lhs / rhs − 1| ≤ tolerance`.
    Relative,
    /// `lhs ≥ rhs · (1 − tolerance)`.
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub group: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub tolerance: f64,
    pub kind: CheckKind,
    pub pass: bool,
}

impl IdentityCheck {
    fn relative(group: &str, name: String, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let ratio = if rhs == 0.0 && lhs == 0.0 { 1.0 } else { lhs / rhs };
        let pass = (ratio - 1.0).abs() <= tolerance;
        Self { name, group: group.into(), lhs, rhs, ratio, tolerance, kind: CheckKind::Relative, pass }
    }

    fn lower_bound(group: &str, name: String, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let ratio = lhs / rhs;
        let pass = lhs >= rhs * (1.0 - tolerance);
        Self { name, group: group.into(), lhs, rhs, ratio, tolerance, kind: CheckKind::LowerBound, pass }
    }
}

/// Ratio error of one identity over successively doubled grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCheck {
    pub name: String,
    pub grid_points: Vec<usize>,
    pub ratio_errors: Vec<f64>,
    /// Errors strictly decrease with every doubling.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub identities: Vec<IdentityCheck>,
    pub convergence: Vec<ConvergenceCheck>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn group(&self, group: &str) -> impl Iterator<Item = &IdentityCheck> {
        let group = group.to_string();
        self.identities.iter().filter(move |c| c.group == group)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub random_coefficient_sets: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { random_coefficient_sets: 50, seed: 0 }
    }
}

pub const GROUP_FSIN: &str = "fsin-integrals";
pub const GROUP_BANDLIMITED: &str = "bandlimited";
pub const GROUP_CONNECTION: &str = "connection";
pub const GROUP_UNCERTAINTY: &str = "uncertainty";

fn fsin_derivs(x: f64) -> [f64; 3] {
    f_sin_eval(x).expect("quadrature nodes lie in [-2, 2]").as_array()
}

pub fn fsin_integrals() -> Vec<IdentityCheck> {
    let fast = integrate_sq_derivative(fsin_derivs, 1, -2.0, 0.0);
    let slow = integrate_sq_derivative(fsin_derivs, 1, 0.0, 2.0);
    vec![
        IdentityCheck::relative(GROUP_FSIN, "f' energy on [-2,0)".into(), fast, 64.0 * PI * PI, 1e-4),
        IdentityCheck::relative(GROUP_FSIN, "f' energy on [0,2]".into(), slow, PI * PI, 1e-4),
        IdentityCheck::relative(GROUP_FSIN, "fast/slow energy ratio".into(), fast / slow, 64.0, 1e-3),
    ]
}

pub fn bandlimited(opts: &VerifyOptions) -> Vec<IdentityCheck> {
    let mut out = Vec::new();
    let unit = bandlimited_identities(&[1.0], &[0.0]);
    out.push(IdentityCheck::relative(GROUP_BANDLIMITED, "cos x, first order".into(), unit.first.0, unit.first.1, 1e-8));
    out.push(IdentityCheck::relative(GROUP_BANDLIMITED, "cos x, second order".into(), unit.second.0, unit.second.1, 1e-8));
    let mut rng = stream(opts.seed, Stream::Data);
    for set in 0..opts.random_coefficient_sets {
        let n = rng.random_range(1..=8);
        let a: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let c = bandlimited_identities(&a, &b);
        out.push(IdentityCheck::relative(GROUP_BANDLIMITED, format!("set {set} (N={n}), first order"), c.first.0, c.first.1, 1e-6));
        out.push(IdentityCheck::relative(GROUP_BANDLIMITED, format!("set {set} (N={n}), second order"), c.second.0, c.second.1, 1e-6));
    }
    out
}

struct ConnectionCase {
    name: &'static str,
    field: Box<dyn Field>,
    dim: usize,
    lo: f64,
    hi: f64,
    order: u32,
    grids: &'static [usize],
    tolerance: f64,
}

fn connection_cases() -> Vec<ConnectionCase> {
    vec![
        ConnectionCase {
            name: "sin(2πy), order 1",
            field: Box::new(Sine1D { cycles: 1.0 }),
            dim: 1,
            lo: -2.0,
            hi: 2.0,
            order: 1,
            grids: &[1024, 2048, 4096],
            tolerance: 0.05,
        },
        ConnectionCase {
            name: "1-cos(2πy), order 2",
            field: Box::new(OneMinusCos1D { cycles: 1.0 }),
            dim: 1,
            lo: -2.0,
            hi: 2.0,
            order: 2,
            grids: &[1024, 2048, 4096],
            tolerance: 0.05,
        },
        ConnectionCase {
            name: "J0(z|y|), order 1",
            field: Box::new(BesselJ0 { z: BesselJ0::J0_ZERO_2 }),
            dim: 2,
            lo: -1.5,
            hi: 1.5,
            order: 1,
            grids: &[128, 256, 512],
            tolerance: 0.07,
        },
    ]
}

pub fn connections() -> Result<(Vec<IdentityCheck>, Vec<ConvergenceCheck>)> {
    let mut checks = Vec::new();
    let mut convergence = Vec::new();
    for case in connection_cases() {
        let center = vec![0.0; case.dim];
        let mut errors = Vec::new();
        for &n in case.grids {
            let grid = Grid::new(case.dim, n, case.lo, case.hi)?;
            let c = check_connection(case.field.as_ref(), grid, &center, 1.0, case.order)?;
            errors.push((c.ratio - 1.0).abs());
            let grid_name = if case.dim == 1 { format!("{n}") } else { format!("{n}x{n}") };
            // Reported as lhs = quadrature, rhs = spectral, ratio = rhs / lhs.
            let mut check = IdentityCheck::relative(
                GROUP_CONNECTION,
                format!("{} on {grid_name} grid", case.name),
                c.rhs,
                c.lhs,
                case.tolerance,
            );
            check.lhs = c.lhs;
            check.rhs = c.rhs;
            checks.push(check);
        }
        let pass = errors.windows(2).all(|w| w[1] < w[0]);
        convergence.push(ConvergenceCheck {
            name: case.name.to_string(),
            grid_points: case.grids.to_vec(),
            ratio_errors: errors,
            pass,
        });
    }
    Ok((checks, convergence))
}

pub fn uncertainty() -> Result<Vec<IdentityCheck>> {
    let fields: [(&str, Box<dyn Field>); 2] = [
        ("gaussian bump, sigma 0.05", Box::new(Gaussian1D { center: 0.0, sigma: 0.05 })),
        ("sin(8πy)", Box::new(Sine1D { cycles: 4.0 })),
    ];
    fields
        .into_iter()
        .map(|(name, f)| {
            let u = uncertainty_check(f.as_ref(), 0.0)?;
            Ok(IdentityCheck::lower_bound(GROUP_UNCERTAINTY, name.into(), u.product, 0.25, 0.02))
        })
        .collect()
}

pub fn run_suite(opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut identities = fsin_integrals();
    identities.extend(bandlimited(opts));
    let (conn, convergence) = connections()?;
    identities.extend(conn);
    identities.extend(uncertainty()?);
    let pass = identities.iter().all(|c| c.pass) && convergence.iter().all(|c| c.pass);
    Ok(VerifyReport { identities, convergence, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_check_of_zero_against_zero_passes() {
        assert!(IdentityCheck::relative("g", "zero".into(), 0.0, 0.0, 1e-9).pass);
        assert!(!IdentityCheck::relative("g", "off".into(), 1.1, 1.0, 0.05).pass);
        assert!(IdentityCheck::lower_bound("g", "b".into(), 0.2451, 0.25, 0.02).pass);
        assert!(!IdentityCheck::lower_bound("g", "b".into(), 0.2449, 0.25, 0.02).pass);
    }

    #[test]
    fn fsin_and_bandlimited_groups_pass() {
        assert!(fsin_integrals().iter().all(|c| c.pass));
        let b = bandlimited(&VerifyOptions { random_coefficient_sets: 5, seed: 1 });
        assert_eq!(b.len(), 12);
        assert!(b.iter().all(|c| c.pass), "{b:?}");
    }
}
