//! Expectation values and squeezing metrics.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{collective_spin, BasisSpec, OperatorMatrix, QuantumState, SpinOp, StateData};

/// `<psi| O |psi>` or `Tr(rho O)`.
pub fn expectation(state: &QuantumState, op: &OperatorMatrix) -> Result<C64> {
    state.basis().ensure_same(&op.basis())?;
    let m = op.matrix();
    Ok(match state.data() {
        StateData::Pure(v) => {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..m.dim() {
                let mut s = C64::new(0.0, 0.0);
                for (c, x) in m.row(r) {
                    s += x * v[c];
                }
                acc += v[r].conj() * s;
            }
            acc
        }
        StateData::Density(rho) => m.iter().map(|(r, c, x)| x * rho[(c, r)]).sum(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqueezingMode {
    /// Transverse direction restricted to the xy-plane.
    XyPlane,
    /// Plane orthogonal to the mean spin.
    General,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingResult {
    pub xi2: f64,
    /// Angle of the optimal direction inside the transverse plane; for
    /// [`SqueezingMode::XyPlane`] this is the Bloch angle from the x axis.
    pub optimal_phi: f64,
    /// Optimal transverse unit vector `n_perp`.
    pub direction: [f64; 3],
    pub mean_spin: [f64; 3],
    /// Minimized transverse variance.
    pub numerator: f64,
    /// Isotropic transverse noise; `optimal_phi` is reported as 0.
    pub degenerate: bool,
}

/// First and symmetrized second moments of the collective spin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinMoments {
    pub mean: Vector3<f64>,
    /// `(<{Ja, Jb}>/2 - <Ja><Jb>)`.
    pub covariance: Matrix3<f64>,
}

impl SpinMoments {
    pub fn variance_along(&self, n: &Vector3<f64>) -> f64 {
        (n.transpose() * self.covariance * n)[(0, 0)]
    }
}

/// Cached collective spin operators for repeated squeezing evaluations.
#[derive(Clone, Debug)]
pub struct SpinObservables {
    basis: BasisSpec,
    first: [OperatorMatrix; 3],
    /// `Ja Jb` for `a <= b` in the order xx, xy, xz, yy, yz, zz.
    second: [OperatorMatrix; 6],
}

impl SpinObservables {
    pub fn new(basis: BasisSpec) -> Self {
        let jx = collective_spin(basis, SpinOp::Jx);
        let jy = collective_spin(basis, SpinOp::Jy);
        let jz = collective_spin(basis, SpinOp::Jz);
        let second = [
            &jx * &jx,
            &jx * &jy,
            &jx * &jz,
            &jy * &jy,
            &jy * &jz,
            &jz * &jz,
        ];
        Self {
            basis,
            first: [jx, jy, jz],
            second,
        }
    }

    pub fn basis(&self) -> BasisSpec {
        self.basis
    }

    pub fn moments(&self, state: &QuantumState) -> Result<SpinMoments> {
        let mut mean = Vector3::zeros();
        for (i, op) in self.first.iter().enumerate() {
            mean[i] = expectation(state, op)?.re;
        }
        let idx = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        let mut cov = Matrix3::zeros();
        for (op, &(a, b)) in self.second.iter().zip(&idx) {
            // Re<Ja Jb> is the symmetrized moment since (Ja Jb)^dag = Jb Ja
            let s = expectation(state, op)?.re - mean[a] * mean[b];
            cov[(a, b)] = s;
            cov[(b, a)] = s;
        }
        Ok(SpinMoments {
            mean,
            covariance: cov,
        })
    }

    pub fn squeezing(&self, state: &QuantumState, mode: SqueezingMode) -> Result<SqueezingResult> {
        let moments = self.moments(state)?;
        squeezing_from_moments(&moments, self.basis.n_atoms(), mode)
    }
}

/// Orthonormal frame `(e1, e2)` of the plane used for minimization.
fn transverse_frame(mean: &Vector3<f64>, mode: SqueezingMode) -> (Vector3<f64>, Vector3<f64>) {
    match mode {
        SqueezingMode::XyPlane => (Vector3::x(), Vector3::y()),
        SqueezingMode::General => {
            let n = mean.normalize();
            let mut e1 = n.cross(&Vector3::z());
            if e1.norm() < 1e-8 {
                e1 = n.cross(&Vector3::x());
            }
            let e1 = e1.normalize();
            let e2 = n.cross(&e1).normalize();
            (e1, e2)
        }
    }
}

/// Wineland `xi^2 = N V_min / |<J>|^2` from precomputed moments.
pub fn squeezing_from_moments(m: &SpinMoments, n_atoms: usize, mode: SqueezingMode) -> Result<SqueezingResult> {
    let length = m.mean.norm();
    let threshold = 1e-9 * n_atoms as f64;
    if !(length > threshold) {
        return Err(Error::VanishingMeanSpin { length, threshold });
    }
    let (e1, e2) = transverse_frame(&m.mean, mode);
    let v11 = m.variance_along(&e1);
    let v22 = m.variance_along(&e2);
    let v12 = (e1.transpose() * m.covariance * e2)[(0, 0)];
    let half_sum = 0.5 * (v11 + v22);
    let radius = 0.5 * ((v11 - v22).powi(2) + 4.0 * v12 * v12).sqrt();
    let v_min = half_sum - radius;
    let degenerate = radius <= 1e-12 * (v11.abs() + v22.abs()).max(f64::MIN_POSITIVE);
    let phi = if degenerate {
        0.0
    } else {
        let alpha = (2.0 * v12).atan2(v11 - v22);
        ((alpha + std::f64::consts::PI) / 2.0).rem_euclid(std::f64::consts::PI)
    };
    let dir = e1 * phi.cos() + e2 * phi.sin();
    Ok(SqueezingResult {
        xi2: n_atoms as f64 * v_min / (length * length),
        optimal_phi: phi,
        direction: [dir.x, dir.y, dir.z],
        mean_spin: [m.mean.x, m.mean.y, m.mean.z],
        numerator: v_min,
        degenerate,
    })
}

/// Wineland squeezing parameter with the transverse direction minimized in closed form.
pub fn wineland_xi2(state: &QuantumState, mode: SqueezingMode) -> Result<SqueezingResult> {
    SpinObservables::new(state.basis()).squeezing(state, mode)
}

/// Both minimization modes plus a flag set when they differ by more than 1%.
pub fn wineland_both(state: &QuantumState) -> Result<(SqueezingResult, SqueezingResult, bool)> {
    let obs = SpinObservables::new(state.basis());
    let m = obs.moments(state)?;
    let n = state.basis().n_atoms();
    let plane = squeezing_from_moments(&m, n, SqueezingMode::XyPlane)?;
    let general = squeezing_from_moments(&m, n, SqueezingMode::General)?;
    let differ = (plane.xi2 - general.xi2).abs() > 0.01 * general.xi2.abs();
    Ok((plane, general, differ))
}

/// `N Var(J.n) / |<J>|^2` for the fixed in-plane direction `n = (cos phi, sin phi, 0)`.
pub fn xi2_along(m: &SpinMoments, n_atoms: usize, phi: f64) -> Result<f64> {
    let length = m.mean.norm();
    let threshold = 1e-9 * n_atoms as f64;
    if !(length > threshold) {
        return Err(Error::VanishingMeanSpin { length, threshold });
    }
    let n = Vector3::new(phi.cos(), phi.sin(), 0.0);
    Ok(n_atoms as f64 * m.variance_along(&n) / (length * length))
}

/// `1 + 2(<b^dag b> - |<b^2>|)`.
pub fn bosonic_xi2(b_number: f64, b_squared: C64) -> f64 {
    1.0 + 2.0 * (b_number - b_squared.norm())
}

/// `10 log10(xi^2)`.
pub fn to_decibels(xi2: f64) -> Result<f64> {
    if !(xi2 > 0.0) {
        return Err(Error::invalid(format!("decibels need a positive squeezing parameter, got {xi2}")));
    }
    Ok(10.0 * xi2.log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{photon, PhotonOp};
    use nalgebra::{DMatrix, DVector};
    use std::f64::consts::PI;

    fn binomial(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    /// Coherent spin state at polar angle `theta` from the south pole and azimuth `phi`.
    fn css(basis: BasisSpec, theta: f64, phi: f64) -> QuantumState {
        let n = basis.n_atoms();
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let terms: Vec<(usize, usize, C64)> = (0..=n)
            .map(|k| {
                let amp = binomial(n, k).sqrt() * c.powi((n - k) as i32) * s.powi(k as i32);
                (0, k, C64::from_polar(amp, k as f64 * phi))
            })
            .collect();
        QuantumState::superposition(basis, &terms).unwrap()
    }

    #[test]
    fn simple_expectations() {
        let b = BasisSpec::new(6, 2).unwrap();
        let jz = collective_spin(b, SpinOp::Jz);
        let g = QuantumState::ground(b);
        assert_eq!(expectation(&g, &jz).unwrap().re, -3.0);
        let one = QuantumState::basis_state(b, 1, 0);
        assert_eq!(expectation(&one, &photon(b, PhotonOp::Number)).unwrap().re, 1.0);
        let other = BasisSpec::new(5, 2).unwrap();
        assert!(expectation(&QuantumState::ground(other), &jz).is_err());
        // density path agrees with the pure path
        let s = css(b, 0.7, 0.3);
        let jx = collective_spin(b, SpinOp::Jx);
        let d = s.to_density();
        assert!((expectation(&s, &jx).unwrap() - expectation(&d, &jx).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn coherent_states_are_unsqueezed() {
        for n in [1, 2, 5, 10, 20] {
            let b = BasisSpec::new(n, 0).unwrap();
            for &(t, p) in &[(0.0, 0.0), (0.4, 1.0), (PI / 2.0, 0.3), (2.5, -2.0), (PI, 0.0)] {
                let r = wineland_xi2(&css(b, t, p), SqueezingMode::General).unwrap();
                assert!((r.xi2 - 1.0).abs() < 1e-8, "N={n} theta={t}: {}", r.xi2);
            }
            let g = wineland_xi2(&QuantumState::ground(b), SqueezingMode::XyPlane).unwrap();
            assert!((g.xi2 - 1.0).abs() < 1e-12);
            assert!(g.degenerate && g.optimal_phi == 0.0);
        }
    }

    #[test]
    fn vanishing_mean_spin_is_an_error() {
        let b = BasisSpec::new(2, 0).unwrap();
        // |j=1, m=0> has <J> = 0
        let s = QuantumState::basis_state(b, 0, 1);
        assert!(matches!(
            wineland_xi2(&s, SqueezingMode::General),
            Err(Error::VanishingMeanSpin { .. })
        ));
    }

    fn pseudo_random_state(basis: BasisSpec, seed: u64) -> QuantumState {
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        // bias toward the south pole so the mean spin stays finite
        let v = DVector::from_fn(basis.dim(), |i, _| {
            let w = 1.0 / (1.0 + i as f64);
            C64::new(w + 0.3 * next(), 0.3 * next())
        });
        QuantumState::pure_normalized(basis, v).unwrap()
    }

    #[test]
    fn closed_form_matches_grid_and_numerator_is_consistent() {
        for seed in 0..20u64 {
            let n = 2 + (seed as usize % 9);
            let b = BasisSpec::new(n, 0).unwrap();
            let s = pseudo_random_state(b, seed);
            let obs = SpinObservables::new(b);
            let m = obs.moments(&s).unwrap();
            for mode in [SqueezingMode::XyPlane, SqueezingMode::General] {
                let r = squeezing_from_moments(&m, n, mode).unwrap();
                let d = Vector3::from(r.direction);
                assert!((m.variance_along(&d) - r.numerator).abs() < 1e-10);
                let (e1, e2) = transverse_frame(&m.mean, mode);
                let steps = 100_000;
                let grid_min = (0..steps)
                    .map(|i| {
                        let a = PI * i as f64 / steps as f64;
                        m.variance_along(&(e1 * a.cos() + e2 * a.sin()))
                    })
                    .fold(f64::INFINITY, f64::min);
                let xi_grid = n as f64 * grid_min / m.mean.norm_squared();
                assert!((xi_grid - r.xi2).abs() < 1e-8, "seed {seed}");
                assert!(r.xi2 >= 0.0);
            }
        }
    }

    #[test]
    fn fixed_direction_is_bounded_by_the_optimum() {
        let b = BasisSpec::new(5, 0).unwrap();
        let s = pseudo_random_state(b, 3);
        let m = SpinObservables::new(b).moments(&s).unwrap();
        let best = squeezing_from_moments(&m, 5, SqueezingMode::XyPlane).unwrap();
        let at = xi2_along(&m, 5, best.optimal_phi).unwrap();
        assert!((at - best.xi2).abs() < 1e-12);
        for k in 0..16 {
            assert!(xi2_along(&m, 5, k as f64 * 0.2).unwrap() >= best.xi2 - 1e-12);
        }
    }

    #[test]
    fn general_mode_is_rotation_covariant() {
        let b = BasisSpec::new(6, 0).unwrap();
        let s = pseudo_random_state(b, 7);
        let before = wineland_xi2(&s, SqueezingMode::General).unwrap();
        let n = Vector3::from(before.mean_spin).normalize();
        let obs = SpinObservables::new(b);
        let gen: DMatrix<C64> = obs.first[0].to_dense() * C64::new(n.x, 0.0)
            + obs.first[1].to_dense() * C64::new(n.y, 0.0)
            + obs.first[2].to_dense() * C64::new(n.z, 0.0);
        let eig = gen.symmetric_eigen();
        let alpha = 0.83;
        let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -alpha * l)));
        let u = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
        let rotated = QuantumState::pure(b, &u * s.as_pure().unwrap()).unwrap();
        let after = wineland_xi2(&rotated, SqueezingMode::General).unwrap();
        assert!((before.xi2 - after.xi2).abs() < 1e-8);
    }

    #[test]
    fn bosonic_values() {
        assert_eq!(bosonic_xi2(0.0, C64::new(0.0, 0.0)), 1.0);
        assert!((bosonic_xi2(0.5, C64::new(0.5, 0.0)) - 1.0).abs() < 1e-15);
        let r: f64 = 1.0;
        let xi = bosonic_xi2(r.sinh().powi(2), C64::new(-r.sinh() * r.cosh(), 0.0));
        assert!((xi - (-2.0 * r).exp()).abs() < 1e-12);
    }

    #[test]
    fn squeezed_vacuum_in_truncated_fock_space() {
        // S(r)|0> expanded in Fock states, moments evaluated by direct summation
        let r: f64 = 1.0;
        let cutoff = 120;
        let mut amps = vec![0.0; cutoff + 1];
        for m in 0..=cutoff / 2 {
            let mut fact_ratio = 1.0; // sqrt((2m)!) / (2^m m!)
            for i in 1..=m {
                fact_ratio *= ((2 * i - 1) as f64 / (2 * i) as f64).sqrt();
            }
            amps[2 * m] = (-r.tanh()).powi(m as i32) * fact_ratio / r.cosh().sqrt();
        }
        let number: f64 = amps.iter().enumerate().map(|(n, a)| n as f64 * a * a).sum();
        let b2: f64 = (2..=cutoff).map(|n| amps[n - 2] * amps[n] * ((n * (n - 1)) as f64).sqrt()).sum();
        assert!((number - r.sinh().powi(2)).abs() < 1e-10);
        let xi = bosonic_xi2(number, C64::new(b2, 0.0));
        assert!((xi - 0.1353352832366127).abs() < 1e-9);
    }

    #[test]
    fn large_n_weak_excitation_matches_bosonic_limit() {
        let n = 20;
        let b = BasisSpec::new(n, 0).unwrap();
        let eps = 0.15;
        let s = QuantumState::superposition(
            b,
            &[(0, 0, C64::new(1.0, 0.0)), (0, 2, C64::new(0.0, -eps))],
        )
        .unwrap();
        let w = wineland_xi2(&s, SqueezingMode::General).unwrap().xi2;
        let jm = collective_spin(b, SpinOp::Jminus);
        let jp = collective_spin(b, SpinOp::Jplus);
        let number = expectation(&s, &(&jp * &jm)).unwrap().re / n as f64;
        let b2 = expectation(&s, &(&jm * &jm)).unwrap() / n as f64;
        let excitations = expectation(&s, &collective_spin(b, SpinOp::Jz)).unwrap().re + n as f64 / 2.0;
        assert!(excitations <= 0.05 * n as f64);
        assert!((w - bosonic_xi2(number, b2)).abs() <= 0.05, "{w} vs {}", bosonic_xi2(number, b2));
    }

    #[test]
    fn decibels() {
        assert_eq!(to_decibels(1.0).unwrap(), 0.0);
        assert!((to_decibels(0.5).unwrap() + 3.0103).abs() < 1e-4);
        assert!((to_decibels(1e-3).unwrap() + 30.0).abs() < 1e-12);
        assert!(to_decibels(0.0).is_err() && to_decibels(-1.0).is_err());
    }
}
