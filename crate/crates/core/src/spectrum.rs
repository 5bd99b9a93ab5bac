//! Diagonalization, level scans over the cavity frequency, and avoided crossings.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{BasisSpec, OperatorMatrix, SparseMatrix};
use crate::models::{splitting_energy, HamiltonianKind, SystemParams};

/// Matrices with more rows than this go to the Lanczos solver.
pub const DENSE_LIMIT: usize = 2000;

/// Lowest eigenpairs in ascending order; `vectors` has one column per value.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

/// Max absolute row sum, an upper bound on the spectral norm.
fn inf_norm(m: &SparseMatrix) -> f64 {
    (0..m.dim())
        .map(|r| m.row(r).map(|(_, v)| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_request(h: &OperatorMatrix, n_levels: usize) -> Result<()> {
    h.check_hermitian()?;
    if n_levels == 0 {
        return Err(Error::invalid("n_levels must be at least 1"));
    }
    if n_levels > h.dim() {
        return Err(Error::TooManyLevels {
            requested: n_levels,
            dim: h.dim(),
        });
    }
    Ok(())
}

/// Lowest `n_levels` eigenpairs of a Hermitian operator.
///
/// Dense below [`DENSE_LIMIT`], restarted Lanczos above. Every pair is checked
/// against `||H v - lambda v|| <= 1e-9 ||H||`.
pub fn eigenspectrum(h: &OperatorMatrix, n_levels: usize) -> Result<Eigenpairs> {
    check_request(h, n_levels)?;
    let pairs = if h.dim() <= DENSE_LIMIT {
        dense_lowest(h.matrix(), n_levels)
    } else {
        lanczos_lowest(h.matrix(), n_levels)?
    };
    let bound = 1e-9 * inf_norm(h.matrix()).max(f64::MIN_POSITIVE);
    for (k, &lambda) in pairs.values.iter().enumerate() {
        let v = pairs.vectors.column(k).into_owned();
        let hv = h.matrix().mul_vec(v.as_slice());
        let residual = hv
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - b * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual > bound {
            return Err(Error::EigenNotConverged { residual, bound });
        }
    }
    Ok(pairs)
}

/// Lowest eigenvalues only; skips eigenvectors on the dense path.
pub fn eigenvalues(h: &OperatorMatrix, n_levels: usize) -> Result<Vec<f64>> {
    check_request(h, n_levels)?;
    if h.dim() > DENSE_LIMIT {
        return Ok(lanczos_lowest(h.matrix(), n_levels)?.values);
    }
    let mut values: Vec<f64> = if h.matrix().is_real() {
        h.to_dense().map(|v| v.re).symmetric_eigenvalues().iter().copied().collect()
    } else {
        h.to_dense().symmetric_eigenvalues().iter().copied().collect()
    };
    values.sort_by(f64::total_cmp);
    values.truncate(n_levels);
    Ok(values)
}

fn dense_lowest(m: &SparseMatrix, n_levels: usize) -> Eigenpairs {
    let dense = m.to_dense();
    let (values, vectors): (Vec<f64>, DMatrix<C64>) = if m.is_real() {
        let eig = dense.map(|v| v.re).symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.map(|v| C64::new(v, 0.0)))
    } else {
        let eig = dense.symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    select_lowest(&values, &vectors, n_levels)
}

fn select_lowest(values: &[f64], vectors: &DMatrix<C64>, n_levels: usize) -> Eigenpairs {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order.truncate(n_levels);
    let cols: Vec<DVector<C64>> = order.iter().map(|&i| vectors.column(i).into_owned()).collect();
    Eigenpairs {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: DMatrix::from_columns(&cols),
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Two passes of classical Gram-Schmidt against `basis`.
fn orthogonalize(w: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, w);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= c * vi;
            }
        }
    }
}

/// Deterministic start vector with weight on every basis state.
fn start_vector(dim: usize, salt: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|i| {
            let x = ((i * 7919 + salt * 104_729) % 1013) as f64 / 1013.0;
            C64::new(1.0 + 0.5 * x, 0.25 * x)
        })
        .collect();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Restarted Lanczos (Krylov-Schur style, full reorthogonalization) for the
/// lowest `n_levels` eigenpairs.
pub fn lanczos_lowest(m: &SparseMatrix, n_levels: usize) -> Result<Eigenpairs> {
    let dim = m.dim();
    if n_levels > dim {
        return Err(Error::TooManyLevels {
            requested: n_levels,
            dim,
        });
    }
    let max_basis = (2 * n_levels + 40).max(80).min(dim);
    if max_basis == dim {
        return Ok(dense_lowest(m, n_levels));
    }
    let keep = (n_levels + (max_basis - n_levels) / 2).min(max_basis - 1);
    let tol = 1e-11 * inf_norm(m).max(f64::MIN_POSITIVE);

    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_basis);
    let mut images: Vec<Vec<C64>> = Vec::with_capacity(max_basis);
    let mut next = start_vector(dim, 0);
    let mut worst = f64::INFINITY;
    for _restart in 0..500 {
        while basis.len() < max_basis {
            let hv = m.mul_vec(&next);
            let mut w = hv.clone();
            basis.push(next);
            images.push(hv);
            orthogonalize(&mut w, &basis);
            let mut nw = norm(&w);
            let mut salt = 1;
            while nw < 1e-12 * tol.max(1.0) {
                // invariant subspace reached; continue with a fresh direction
                w = start_vector(dim, salt);
                orthogonalize(&mut w, &basis);
                nw = norm(&w);
                salt += 1;
            }
            w.iter_mut().for_each(|x| *x /= nw);
            next = w;
        }
        let k = basis.len();
        let mut t = DMatrix::<C64>::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = dot(&basis[i], &images[j]);
                t[(i, j)] = v;
                t[(j, i)] = v.conj();
            }
        }
        for i in 0..k {
            t[(i, i)] = C64::new(t[(i, i)].re, 0.0);
        }
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let combine = |vs: &[Vec<C64>], col: usize| -> Vec<C64> {
            let s = eig.eigenvectors.column(col);
            let mut out = vec![C64::new(0.0, 0.0); dim];
            for (c, v) in s.iter().zip(vs) {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += c * x;
                }
            }
            out
        };
        let ritz: Vec<(f64, Vec<C64>, Vec<C64>)> = order
            .iter()
            .take(keep)
            .map(|&c| (eig.eigenvalues[c], combine(&basis, c), combine(&images, c)))
            .collect();
        worst = ritz
            .iter()
            .take(n_levels)
            .map(|(l, y, hy)| {
                hy.iter().zip(y).map(|(a, b)| (a - b * *l).norm_sqr()).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max);
        if worst <= tol {
            let cols: Vec<DVector<C64>> = ritz
                .iter()
                .take(n_levels)
                .map(|(_, y, _)| DVector::from_vec(y.clone()))
                .collect();
            return Ok(Eigenpairs {
                values: ritz.iter().take(n_levels).map(|r| r.0).collect(),
                vectors: DMatrix::from_columns(&cols),
            });
        }
        basis.clear();
        images.clear();
        for (_, y, hy) in ritz {
            basis.push(y);
            images.push(hy);
        }
        // the residual direction stays orthogonal to the kept Ritz vectors
        orthogonalize(&mut next, &basis);
        let nn = norm(&next);
        next.iter_mut().for_each(|x| *x /= nn);
    }
    Err(Error::EigenNotConverged {
        residual: worst,
        bound: tol,
    })
}

/// Golden-section search for a minimum of `f` inside `[a, b]`, stopping when
/// `stop(width, best_value)` holds or the bracket stops shrinking in floating point.
pub fn golden_section<F, S>(mut f: F, mut a: f64, mut b: f64, mut stop: S) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
    S: FnMut(f64, f64) -> bool,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..400 {
        let best = fc.min(fd);
        if stop(b - a, best) || !(c < d) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Coarse grid of `n` points followed by golden-section refinement to `abs_tol`.
pub fn minimize_scan<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n: usize, abs_tol: f64) -> f64 {
    let grid: Vec<f64> = linspace(lo, hi, n);
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let i = argmin(&values);
    let a = grid[i.saturating_sub(1)];
    let b = grid[(i + 1).min(n - 1)];
    golden_section(f, a, b, |w, _| w <= abs_tol).0
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

/// Default crossing-study grid: 401 points over `omega_c / omega_q` in `[1.7, 2.3]`.
pub fn default_grid(omega_q: f64) -> Vec<f64> {
    linspace(1.7 * omega_q, 2.3 * omega_q, 401)
}

/// Lowest levels versus the cavity frequency, ground-state subtracted.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelScan {
    pub variable: String,
    pub grid: Vec<f64>,
    /// `levels[i][k]`: level `k` at grid point `i`; `levels[i][0] == 0`.
    pub levels: Vec<Vec<f64>>,
    pub params: SystemParams,
    pub kind: HamiltonianKind,
    pub basis: BasisSpec,
}

fn levels_at(p: &SystemParams, basis: BasisSpec, kind: HamiltonianKind, omega_c: f64, n_levels: usize) -> Result<Vec<f64>> {
    let h = kind.build(&p.with_omega_c(omega_c), basis)?;
    let mut e = eigenvalues(&h, n_levels)?;
    let e0 = e[0];
    e.iter_mut().for_each(|x| *x -= e0);
    Ok(e)
}

/// Diagonalizes at every grid value of `omega_c`, in parallel over the grid.
pub fn scan_cavity_frequency(
    p: &SystemParams,
    basis: BasisSpec,
    kind: HamiltonianKind,
    grid: &[f64],
    n_levels: usize,
) -> Result<LevelScan> {
    if grid.len() < 3 {
        return Err(Error::invalid("a level scan needs at least three grid points"));
    }
    let levels = grid
        .par_iter()
        .map(|&w| levels_at(p, basis, kind, w, n_levels))
        .collect::<Result<Vec<_>>>()?;
    Ok(LevelScan {
        variable: "omega_c".into(),
        grid: grid.to_vec(),
        levels,
        params: *p,
        kind,
        basis,
    })
}

impl LevelScan {
    pub fn n_levels(&self) -> usize {
        self.levels.first().map_or(0, Vec::len)
    }

    /// Rows `scan_value,E1,...,Ek`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (1..=self.n_levels()).map(|k| format!("E{k}")).collect();
        writeln!(out, "scan_value,{}", header.join(","))?;
        for (x, row) in self.grid.iter().zip(&self.levels) {
            let cols: Vec<String> = row.iter().map(|v| format!("{v:.15e}")).collect();
            writeln!(out, "{x:.15e},{}", cols.join(","))?;
        }
        Ok(())
    }

    fn gap_at(&self, pair: (usize, usize), omega_c: f64) -> f64 {
        let n = pair.0.max(pair.1) + 1;
        match levels_at(&self.params, self.basis, self.kind, omega_c, n) {
            Ok(e) => (e[pair.1] - e[pair.0]).abs(),
            Err(_) => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub location: f64,
    pub gap: f64,
    pub pair: (usize, usize),
    /// `|Delta E|` of the lowest crossing from the effective model (`N >= 2`).
    pub analytic_gap: Option<f64>,
}

impl CrossingReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Locates the minimum gap between levels `pair` of a scan.
///
/// The coarse-grid minimum is refined by golden section until the bracket is
/// below `1e-6` relative in the scan variable and below `1e-3` of the current
/// gap, so that crossings much narrower than the grid are resolved.
pub fn find_avoided_crossing(scan: &LevelScan, pair: (usize, usize)) -> Result<CrossingReport> {
    let (lo, hi) = (pair.0.min(pair.1), pair.0.max(pair.1));
    if lo == hi || hi >= scan.n_levels() {
        return Err(Error::invalid(format!(
            "level pair ({}, {}) is not available in a scan of {} levels",
            pair.0,
            pair.1,
            scan.n_levels()
        )));
    }
    let gaps: Vec<f64> = scan.levels.iter().map(|e| (e[hi] - e[lo]).abs()).collect();
    let i = argmin(&gaps);
    let n = gaps.len();
    if i == 0 || i == n - 1 {
        return Err(Error::NoCrossing { lower: lo, upper: hi });
    }
    let (a, b) = {
        let (x, y) = (scan.grid[i - 1], scan.grid[i + 1]);
        (x.min(y), x.max(y))
    };
    let (location, gap) = golden_section(
        |x| scan.gap_at((lo, hi), x),
        a,
        b,
        |width, best| {
            let x_scale = a.abs().max(b.abs());
            width <= 1e-6 * x_scale && width <= 1e-3 * best || width <= 4.0 * f64::EPSILON * x_scale
        },
    );
    let analytic_gap = splitting_energy(&scan.params).ok().map(f64::abs);
    Ok(CrossingReport {
        location,
        gap,
        pair: (lo, hi),
        analytic_gap,
    })
}

/// Indices (ascending) of the two eigenstates with the largest weight on the
/// basis labels `first` and `second`, each `(photons, excitations)`.
pub fn anchored_pair(
    p: &SystemParams,
    basis: BasisSpec,
    kind: HamiltonianKind,
    n_levels: usize,
    first: (usize, usize),
    second: (usize, usize),
) -> Result<(usize, usize)> {
    let h = kind.build(p, basis)?;
    let pairs = eigenspectrum(&h, n_levels)?;
    let ia = basis.index(first.0, first.1);
    let ib = basis.index(second.0, second.1);
    let weight = |k: usize| pairs.vectors[(ia, k)].norm_sqr() + pairs.vectors[(ib, k)].norm_sqr();
    let mut order: Vec<usize> = (0..pairs.values.len()).collect();
    order.sort_by(|&x, &y| weight(y).total_cmp(&weight(x)));
    let (x, y) = (order[0], order[1]);
    Ok((x.min(y), x.max(y)))
}

/// One row of the half-splitting versus atom number comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingRow {
    pub n_atoms: usize,
    pub location: f64,
    pub numeric_half_gap: f64,
    pub analytic_half_gap: f64,
    pub relative_deviation: f64,
}

/// Half-splitting of the lowest crossing, between the levels anchored to
/// `|1, j, -j>` and `|0, j, -j+2>`, for each atom number.
pub fn half_splitting_vs_n(
    p: &SystemParams,
    atom_numbers: &[usize],
    fock_cutoff: usize,
    kind: HamiltonianKind,
) -> Result<Vec<SplittingRow>> {
    atom_numbers
        .par_iter()
        .map(|&n| {
            let pn = p.with_n_atoms(n);
            let basis = BasisSpec::new(n, fock_cutoff)?;
            let resonance = 2.0 * pn.omega_q();
            let n_levels = 6.min(basis.dim());
            let pair = anchored_pair(&pn.with_omega_c(resonance), basis, kind, n_levels, (1, 0), (0, 2))?;
            let grid = default_grid(pn.omega_q());
            let scan = scan_cavity_frequency(&pn, basis, kind, &grid, pair.1 + 1)?;
            let report = find_avoided_crossing(&scan, pair)?;
            let numeric = report.gap / 2.0;
            let analytic = splitting_energy(&pn)?.abs() / 2.0;
            Ok(SplittingRow {
                n_atoms: n,
                location: report.location,
                numeric_half_gap: numeric,
                analytic_half_gap: analytic,
                relative_deviation: (numeric - analytic).abs() / numeric,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::brute_force_embed;
    use crate::models::{build_full_hamiltonian, EffectiveVariant};
    use std::f64::consts::PI;

    #[test]
    fn decoupled_levels() {
        let p = SystemParams::new(2, 1.0, 0.0, 0.0, 1.5).unwrap();
        let b = BasisSpec::new(2, 2).unwrap();
        let h = build_full_hamiltonian(&p, b).unwrap();
        let e = eigenspectrum(&h, 5).unwrap();
        let expected = [-1.0, 0.0, 0.5, 1.0, 1.5];
        for (a, x) in e.values.iter().zip(expected) {
            assert!((a - x).abs() < 1e-12);
        }
    }

    #[test]
    fn request_errors() {
        let b = BasisSpec::new(1, 1).unwrap();
        let h = OperatorMatrix::identity(b);
        assert!(matches!(eigenspectrum(&h, 5), Err(Error::TooManyLevels { .. })));
        let nh = OperatorMatrix::new(
            b,
            SparseMatrix::from_triplets(4, vec![(0, 1, C64::new(1.0, 0.0))]),
            false,
        );
        assert!(matches!(eigenspectrum(&nh, 1), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn two_qubit_oracle_spectrum() {
        let p = SystemParams::from_theta(2, 1.0, 0.4, 0.2, 1.8).unwrap();
        let bf = brute_force_embed(2, 5).unwrap();
        let c = |x: f64| C64::new(x, 0.0);
        let x = &bf.a + &bf.adag;
        let full = &bf.jz * c(p.delta) + &bf.jx * c(p.epsilon) + (&bf.adag * &bf.a) * c(p.omega_c) + &x * &bf.jx * c(2.0 * p.g);
        let projected = bf.project(&full);
        let mut oracle: Vec<f64> = projected.symmetric_eigenvalues().iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        let b = BasisSpec::new(2, 5).unwrap();
        let e = eigenspectrum(&build_full_hamiltonian(&p, b).unwrap(), 10).unwrap();
        for (a, o) in e.values.iter().zip(&oracle) {
            assert!((a - o).abs() <= 1e-10 * o.abs().max(1.0));
        }
    }

    #[test]
    fn lanczos_matches_dense() {
        let p = SystemParams::from_theta(12, 1.0, PI / 5.0, 0.08, 1.97).unwrap();
        let b = BasisSpec::new(12, 20).unwrap();
        let h = build_full_hamiltonian(&p, b).unwrap();
        let dense = dense_lowest(h.matrix(), 8);
        let lz = lanczos_lowest(h.matrix(), 8).unwrap();
        for (a, x) in lz.values.iter().zip(&dense.values) {
            assert!((a - x).abs() < 1e-9, "{a} vs {x}");
        }
        // complex Hermitian input
        let jy = crate::hilbert::collective_spin(b, crate::hilbert::SpinOp::Jy);
        let hc = &h + &jy.scale_real(0.3);
        let dense = dense_lowest(hc.matrix(), 5);
        let lz = lanczos_lowest(hc.matrix(), 5).unwrap();
        for (a, x) in lz.values.iter().zip(&dense.values) {
            assert!((a - x).abs() < 1e-9);
        }
    }

    #[test]
    fn effective_crossing_sits_at_resonance() {
        let p = SystemParams::from_theta(4, 1.0, PI / 6.0, 0.1, 2.0).unwrap();
        let b = BasisSpec::new(4, 3).unwrap();
        let kind = HamiltonianKind::Effective(EffectiveVariant::Dressed);
        let grid = linspace(1.9, 2.1, 41);
        let scan = scan_cavity_frequency(&p, b, kind, &grid, 5).unwrap();
        let pair = anchored_pair(&p, b, kind, 5, (1, 0), (0, 2)).unwrap();
        let r = find_avoided_crossing(&scan, pair).unwrap();
        assert!((r.location - 2.0).abs() < 1e-6);
        assert!((r.gap - r.analytic_gap.unwrap()).abs() < 1e-10);
        for row in &scan.levels {
            assert_eq!(row[0], 0.0);
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn reversed_scan_gives_same_gap() {
        let p = SystemParams::from_theta(3, 1.0, PI / 6.0, 0.05, 2.0).unwrap();
        let b = BasisSpec::new(3, 4).unwrap();
        let grid = linspace(1.95, 2.05, 51);
        let rev: Vec<f64> = grid.iter().rev().copied().collect();
        let s1 = scan_cavity_frequency(&p, b, HamiltonianKind::Full, &grid, 5).unwrap();
        let s2 = scan_cavity_frequency(&p, b, HamiltonianKind::Full, &rev, 5).unwrap();
        let pair = anchored_pair(&p, b, HamiltonianKind::Full, 5, (1, 0), (0, 2)).unwrap();
        let r1 = find_avoided_crossing(&s1, pair).unwrap();
        let r2 = find_avoided_crossing(&s2, pair).unwrap();
        assert!((r1.gap - r2.gap).abs() <= 1e-9 * r1.gap);
        assert!((r1.location - r2.location).abs() < 1e-8);
    }

    #[test]
    fn parity_forbids_crossing_without_epsilon() {
        // eps = 0: |1,-j> and |0,-j+2> have opposite parity and cross exactly
        let p = SystemParams::new(4, 1.0, 0.0, 0.05, 2.0).unwrap();
        let b = BasisSpec::new(4, 4).unwrap();
        let grid = linspace(1.95, 2.05, 51);
        let scan = scan_cavity_frequency(&p, b, HamiltonianKind::Full, &grid, 5).unwrap();
        let pair = anchored_pair(&p.with_omega_c(1.96), b, HamiltonianKind::Full, 5, (1, 0), (0, 2)).unwrap();
        let r = find_avoided_crossing(&scan, pair).unwrap();
        assert!(r.gap < 1e-10, "gap {}", r.gap);
    }

    #[test]
    fn monotone_gap_reports_no_crossing() {
        let p = SystemParams::from_theta(2, 1.0, PI / 6.0, 0.01, 2.0).unwrap();
        let b = BasisSpec::new(2, 2).unwrap();
        let grid = linspace(1.2, 1.5, 11);
        let scan = scan_cavity_frequency(&p, b, HamiltonianKind::Full, &grid, 4).unwrap();
        assert!(matches!(find_avoided_crossing(&scan, (0, 1)), Err(Error::NoCrossing { .. })));
    }

    #[test]
    fn csv_layout() {
        let p = SystemParams::from_theta(2, 1.0, PI / 6.0, 0.01, 2.0).unwrap();
        let b = BasisSpec::new(2, 2).unwrap();
        let scan = scan_cavity_frequency(&p, b, HamiltonianKind::Full, &linspace(1.9, 2.1, 3), 3).unwrap();
        let mut buf = Vec::new();
        scan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "scan_value,E1,E2,E3");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').count(), 4);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section(|x| (x - 0.3).powi(2) + 1.0, 0.0, 1.0, |w, _| w < 1e-10);
        assert!((x - 0.3).abs() < 1e-7 && (fx - 1.0).abs() < 1e-14);
    }
}
