//! Linear solvers for the per-iteration systems: Jacobi-preconditioned
//! conjugate gradients for SPD matrices and banded LU with partial pivoting
//! for everything else.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, CsrMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Cg,
    Direct,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Cg => "cg",
            Method::Direct => "direct",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final true residual `||Ax - b||_2`.
    pub residual: f64,
    pub method: Method,
    pub success: bool,
}

/// Which solver the stepper uses for its linear systems.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolverKind {
    /// CG, escalating to the direct solver when CG fails.
    #[default]
    Auto,
    Cg,
    Direct,
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(SolverKind::Auto),
            "cg" => Ok(SolverKind::Cg),
            "direct" => Ok(SolverKind::Direct),
            other => Err(format!("unknown solver '{other}' (expected auto, cg or direct)")),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Auto => "auto",
            SolverKind::Cg => "cg",
            SolverKind::Direct => "direct",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Defaults to `10 n` when `None`.
    pub max_iter: Option<usize>,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 0.0,
            max_iter: None,
        }
    }
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64], r: &mut [f64]) {
    a.mul_vec_into(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// Jacobi-preconditioned conjugate gradients started from `x0`.
///
/// Never returns an error: divergence, breakdown and iteration exhaustion are
/// reported through `success = false` so the caller can escalate.
pub fn solve_cg(
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    rtol: f64,
    atol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolveReport) {
    let n = a.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x0.len(), n);

    let threshold = rtol * norm2(b) + atol;
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    residual(a, &x, b, &mut r);
    let mut rnorm = norm2(&r);

    let report = |x: Vec<f64>, iterations, rnorm: f64, success| {
        (
            x,
            SolveReport {
                iterations,
                residual: rnorm,
                method: Method::Cg,
                success,
            },
        )
    };

    if rnorm <= threshold {
        return report(x, 0, rnorm, true);
    }

    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            // Not positive definite along p (or NaN).
            return report(x, iterations, rnorm, false);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = norm2(&r);
        if !rnorm.is_finite() {
            return report(x, iterations, rnorm, false);
        }
        if rnorm <= threshold {
            // Confirm against the true residual; restart if it drifted.
            residual(a, &x, b, &mut r);
            rnorm = norm2(&r);
            if rnorm <= threshold {
                return report(x, iterations, rnorm, true);
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    residual(a, &x, b, &mut r);
    let rnorm = norm2(&r);
    report(x, iterations, rnorm, rnorm <= threshold)
}

/// LU factors of a banded matrix, stored LAPACK `gbtrf` style: column `j`
/// holds rows `j - kl - ku ..= j + kl` with room for pivoting fill-in.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    band: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let (kl, ku) = a.bandwidth();
        let kv = kl + ku;
        let ld = 2 * kl + ku + 1;
        let mut band = vec![0.0; ld * n];
        let idx = |i: usize, j: usize| j * ld + kv + i - j;

        // Pivots are judged against their own column, so identity rows from
        // eliminated constraints do not look singular next to large entries.
        let mut col_max = vec![0.0f64; n];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                band[idx(i, j)] = v;
                col_max[j] = col_max[j].max(v.abs());
            }
        }

        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = band[idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = band[idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > col_max[k] * f64::EPSILON) {
                return Err(Error::SingularPivot { step: k });
            }
            pivots[k] = p;
            let last_col = (k + kv).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    band.swap(idx(k, j), idx(p, j));
                }
            }
            let pivot = band[idx(k, k)];
            for i in k + 1..=last_row {
                band[idx(i, k)] /= pivot;
            }
            for j in k + 1..=last_col {
                let ukj = band[idx(k, j)];
                if ukj == 0.0 {
                    continue;
                }
                let col = j * ld + kv - j;
                for i in k + 1..=last_row {
                    band[col + i] -= band[idx(i, k)] * ukj;
                }
            }
        }

        Ok(Self {
            n,
            kl,
            ku,
            ld,
            band,
            pivots,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, kl, kv, ld) = (self.n, self.kl, self.kl + self.ku, self.ld);
        let idx = |i: usize, j: usize| j * ld + kv + i - j;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for i in k + 1..=(k + kl).min(n.saturating_sub(1)) {
                x[i] -= self.band[idx(i, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            x[k] /= self.band[idx(k, k)];
            let xk = x[k];
            for i in k.saturating_sub(kv)..k {
                x[i] -= self.band[idx(i, k)] * xk;
            }
        }
        x
    }
}

/// Banded LU solve. Symmetric indefinite systems are fine; singular ones
/// are reported with the elimination step where the pivot vanished.
pub fn solve_direct(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    assert_eq!(b.len(), a.dim());
    let lu = BandedLu::factor(a)?;
    let x = lu.solve(b);
    let mut r = vec![0.0; b.len()];
    residual(a, &x, b, &mut r);
    let rnorm = norm2(&r);
    let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let success = rnorm <= 1e-10 * (a.norm_inf() * xmax + bmax) && rnorm.is_finite();
    Ok((
        x,
        SolveReport {
            iterations: 1,
            residual: rnorm,
            method: Method::Direct,
            success,
        },
    ))
}

/// Solves `a x = b` with the requested strategy. A CG run that does not
/// converge comes back with `success = false`; `Auto` then retries directly.
pub fn solve(
    kind: SolverKind,
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    cg: &CgSettings,
) -> Result<(Vec<f64>, SolveReport)> {
    let max_iter = cg.max_iter.unwrap_or(10 * a.dim());
    match kind {
        SolverKind::Direct => solve_direct(a, b),
        SolverKind::Cg => Ok(solve_cg(a, b, x0, cg.rtol, cg.atol, max_iter)),
        SolverKind::Auto => {
            let (x, report) = solve_cg(a, b, x0, cg.rtol, cg.atol, max_iter);
            if report.success {
                Ok((x, report))
            } else {
                solve_direct(a, b)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn random_spd(n: usize, seed: u64) -> CsrMatrix {
        let mut rng = StdRng::seed_from_u64(seed);
        let g: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                d[i][j] = (0..n).map(|k| g[i][k] * g[j][k]).sum::<f64>();
            }
            d[i][i] += n as f64 * 0.1;
        }
        CsrMatrix::from_dense(&d)
    }

    #[test]
    fn cg_identity_one_iteration() {
        let a = CsrMatrix::identity(5);
        let b = [1.0, -2.0, 3.0, 0.5, 7.0];
        let (x, rep) = solve_cg(&a, &b, &[0.0; 5], 1e-12, 0.0, 50);
        assert!(rep.success && rep.iterations <= 1);
        assert_eq!(x, b);
    }

    #[test]
    fn cg_two_by_two() {
        let a = CsrMatrix::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let (x, rep) = solve_cg(&a, &[1.0, 2.0], &[0.0, 0.0], 1e-14, 0.0, 10);
        assert!(rep.success);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn cg_warm_start_exact_returns_immediately() {
        let a = random_spd(20, 3);
        let xs: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&xs);
        let (x, _) = solve_cg(&a, &b, &[0.0; 20], 1e-13, 0.0, 200);
        let (x2, rep) = solve_cg(&a, &b, &x, 1e-12, 0.0, 200);
        assert!(rep.iterations <= 1);
        assert!(x.iter().zip(&x2).all(|(p, q)| (p - q).abs() < 1e-12));
    }

    #[test]
    fn cg_reports_exhaustion() {
        let a = random_spd(30, 4);
        let b = vec![1.0; 30];
        let (_, rep) = solve_cg(&a, &b, &[0.0; 30], 1e-14, 0.0, 2);
        assert!(!rep.success);
        assert_eq!(rep.iterations, 2);
    }

    #[test]
    fn cg_is_deterministic() {
        let a = random_spd(25, 9);
        let b: Vec<f64> = (0..25).map(|i| i as f64).collect();
        let r1 = solve_cg(&a, &b, &[0.0; 25], 1e-12, 0.0, 500);
        let r2 = solve_cg(&a, &b, &[0.0; 25], 1e-12, 0.0, 500);
        assert_eq!(r1.0, r2.0);
        assert_eq!(r1.1, r2.1);
    }

    #[test]
    fn direct_indefinite_diagonal() {
        let a = CsrMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, -3.0]]);
        let (x, rep) = solve_direct(&a, &[2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, -1.0]);
        assert!(rep.success);
    }

    #[test]
    fn direct_singular_column() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 1.0], vec![3.0, 6.0, 2.0]]);
        match solve_direct(&a, &[1.0, 1.0, 1.0]) {
            Err(Error::SingularPivot { step }) => assert_eq!(step, 1),
            other => panic!("expected singular pivot, got {other:?}"),
        }
    }

    #[test]
    fn direct_needs_pivoting() {
        // Zero leading entry forces a row swap.
        let a = CsrMatrix::from_dense(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 2.0], vec![0.0, 2.0, -1.0]]);
        let xs = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&xs);
        let (x, rep) = solve_direct(&a, &b).unwrap();
        assert!(rep.success);
        for (p, q) in x.iter().zip(&xs) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn direct_matches_cg_on_random_spd() {
        let a = random_spd(50, 11);
        let b: Vec<f64> = (0..50).map(|i| (0.3 * i as f64).cos()).collect();
        let (xd, rd) = solve_direct(&a, &b).unwrap();
        let (xc, rc) = solve_cg(&a, &b, &[0.0; 50], 1e-14, 0.0, 1000);
        assert!(rd.success && rc.success);
        let diff: Vec<f64> = xd.iter().zip(&xc).map(|(p, q)| p - q).collect();
        assert!(norm2(&diff) <= 1e-9 * norm2(&xd));
    }

    #[test]
    fn auto_escalates_on_indefinite() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
        let (x, rep) = solve(SolverKind::Auto, &a, &[1.0, 1.0], &[0.0, 0.0], &CgSettings::default()).unwrap();
        assert_eq!(rep.method, Method::Direct);
        assert_eq!(x, vec![1.0, -1.0]);
        assert!(
            !solve(SolverKind::Cg, &a, &[1.0, 1.0], &[0.0, 0.0], &CgSettings::default())
                .unwrap()
                .1
                .success
        );
    }
}
