//! Haken-Strobl dynamics on a site network: Liouvillian construction,
//! propagation of density matrices, and direct observables (populations,
//! delocalization entropy, transport efficiency).
//!
//! Units: energies in cm⁻¹, times in ps, rates in ps⁻¹. The Hamiltonian is
//! converted to angular frequency by κ = 2πc with c in cm/ps, so that the
//! trimer eigenperiods come out in ps.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use ndarray::{Array1, Array2};
use num_complex::Complex;
use num_traits::Zero;

use crate::numerics::{self, expm, CMatrix};
use crate::{Error, Result, Scalar};

/// Speed of light in cm/ps.
pub const SPEED_OF_LIGHT_CM_PER_PS: f64 = 0.029_979_245_8;

/// Default conversion constant κ = 2πc in rad·ps⁻¹ per cm⁻¹ (≈ 0.1883651567).
pub fn cm1_to_rad_per_ps<T: Scalar>() -> T {
    T::real(2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_CM_PER_PS)
}

const SYMMETRY_TOL: f64 = 1e-10;

/// Incoherent coupling of one site to an exciton sink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trap<T> {
    /// Exit site, 0-based.
    pub exit_site: usize,
    /// Trapping rate in ps⁻¹.
    pub k_trap: T,
}

/// A site network: Hamiltonian, local dephasing rates, and an optional trap.
#[derive(Debug, Clone)]
pub struct NetworkModel<T: Scalar> {
    hamiltonian: Array2<T>,
    dephasing: Vec<T>,
    trap: Option<Trap<T>>,
    energy_to_angular: T,
}

impl<T: Scalar> NetworkModel<T> {
    pub fn new(hamiltonian: Array2<T>, dephasing: Vec<T>, trap: Option<Trap<T>>) -> Result<Self> {
        let d = hamiltonian.nrows();
        if hamiltonian.ncols() != d || d == 0 {
            return Err(Error::ModelInvalid(format!(
                "hamiltonian must be square and non-empty, got {}x{}",
                d,
                hamiltonian.ncols()
            )));
        }
        let scale = hamiltonian
            .iter()
            .fold(T::one(), |a, &b| a.max(b.abs()));
        for i in 0..d {
            for j in i + 1..d {
                let dev = (hamiltonian[(i, j)] - hamiltonian[(j, i)]).abs();
                if dev > T::real(SYMMETRY_TOL) * scale {
                    return Err(Error::ModelInvalid(format!(
                        "hamiltonian not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        if dephasing.len() != d {
            return Err(Error::ModelInvalid(format!(
                "expected {} dephasing rates, got {}",
                d,
                dephasing.len()
            )));
        }
        if dephasing.iter().any(|g| *g < T::zero() || !g.is_finite()) {
            return Err(Error::ModelInvalid("dephasing rates must be >= 0".into()));
        }
        if let Some(t) = &trap {
            if t.exit_site >= d {
                return Err(Error::ModelInvalid(format!(
                    "exit site {} out of range for {} sites",
                    t.exit_site, d
                )));
            }
            if t.k_trap < T::zero() || !t.k_trap.is_finite() {
                return Err(Error::ModelInvalid("k_trap must be >= 0".into()));
            }
        }
        Ok(Self {
            hamiltonian,
            dephasing,
            trap,
            energy_to_angular: cm1_to_rad_per_ps(),
        })
    }

    pub fn n_sites(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// Hilbert-space dimension: sites plus one sink state when trapped.
    pub fn dim(&self) -> usize {
        self.n_sites() + usize::from(self.trap.is_some())
    }

    pub fn hamiltonian(&self) -> &Array2<T> {
        &self.hamiltonian
    }

    pub fn dephasing(&self) -> &[T] {
        &self.dephasing
    }

    pub fn trap(&self) -> Option<&Trap<T>> {
        self.trap.as_ref()
    }

    pub fn energy_to_angular(&self) -> T {
        self.energy_to_angular
    }

    pub fn with_uniform_dephasing(&self, gamma: T) -> Result<Self> {
        if gamma < T::zero() {
            return Err(Error::ModelInvalid("dephasing rates must be >= 0".into()));
        }
        let mut m = self.clone();
        m.dephasing = vec![gamma; self.n_sites()];
        Ok(m)
    }

    pub fn without_trap(&self) -> Self {
        let mut m = self.clone();
        m.trap = None;
        m
    }

    pub fn with_trap(&self, trap: Trap<T>) -> Result<Self> {
        Self::new(self.hamiltonian.clone(), self.dephasing.clone(), Some(trap))
    }
}

/// Hermitian, PSD, trace-1 state over the site manifold (plus sink if present).
#[derive(Debug, Clone)]
pub struct DensityMatrix<T: Scalar> {
    matrix: CMatrix<T>,
}

impl<T: Scalar> DensityMatrix<T> {
    /// Validating constructor: Hermitian within 1e-10, trace 1 within 1e-9,
    /// eigenvalues >= -1e-10.
    pub fn new(matrix: CMatrix<T>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::StateInvalid("matrix must be square".into()));
        }
        let dev = numerics::hermiticity_deviation(&matrix);
        if dev > T::real(1e-10) {
            return Err(Error::StateInvalid(format!(
                "not Hermitian, deviation {dev:e}"
            )));
        }
        let tr = numerics::trace(&matrix);
        if (tr.re - T::one()).abs() > T::real(1e-9) || tr.im.abs() > T::real(1e-9) {
            return Err(Error::StateInvalid(format!("trace {tr} is not 1")));
        }
        let eigs = numerics::eigvals_hermitian(&matrix)?;
        if let Some(min) = eigs.first() {
            if *min < T::real(-1e-10) {
                return Err(Error::StateInvalid(format!(
                    "negative eigenvalue {min:e}"
                )));
            }
        }
        Ok(Self { matrix })
    }

    /// Exciton localized on one site (0-based).
    pub fn localized(dim: usize, site: usize) -> Result<Self> {
        if site >= dim {
            return Err(Error::IndexOutOfRange {
                index: site,
                len: dim,
            });
        }
        let mut m = Array2::from_elem((dim, dim), Complex::<T>::zero());
        m[(site, site)] = Complex::new(T::one(), T::zero());
        Ok(Self { matrix: m })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let p = T::one() / T::from_usize(dim).expect("dim fits scalar");
        let m = Array2::from_shape_fn((dim, dim), |(i, j)| {
            if i == j {
                Complex::new(p, T::zero())
            } else {
                Complex::zero()
            }
        });
        Self { matrix: m }
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix<T>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Embed a state on the site manifold into the sink-extended space.
    pub fn extend_with_sink(&self) -> Self {
        let d = self.dim();
        let m = Array2::from_shape_fn((d + 1, d + 1), |(i, j)| {
            if i < d && j < d {
                self.matrix[(i, j)]
            } else {
                Complex::zero()
            }
        });
        Self { matrix: m }
    }
}

/// Build the superoperator 𝓛 acting on row-major vectorized density
/// matrices: unitary part −iκ[H,·], site dephasing, and trap dissipators.
pub fn build_liouvillian<T: Scalar>(model: &NetworkModel<T>) -> CMatrix<T> {
    let d0 = model.n_sites();
    let d = model.dim();
    let kappa = model.energy_to_angular();

    // vec_r(A ρ B) = (A ⊗ Bᵀ) vec_r(ρ)
    let kron_term = |a: &CMatrix<T>, b: &CMatrix<T>| -> CMatrix<T> {
        let bt = b.t().to_owned();
        ndarray::linalg::kron(a, &bt)
    };

    let id = numerics::identity::<T>(d);
    let mut h = Array2::from_elem((d, d), Complex::<T>::zero());
    for i in 0..d0 {
        for j in 0..d0 {
            h[(i, j)] = Complex::new(model.hamiltonian[(i, j)], T::zero());
        }
    }
    let minus_i_kappa = Complex::new(T::zero(), -kappa);
    let mut l = (kron_term(&h, &id) - kron_term(&id, &h)).mapv(|z| z * minus_i_kappa);

    let two = T::real(2.0);
    for (i, &g) in model.dephasing.iter().enumerate() {
        if g.is_zero() {
            continue;
        }
        let mut li = Array2::from_elem((d, d), Complex::<T>::zero());
        li[(i, i)] = Complex::new(T::one(), T::zero());
        let jump = kron_term(&li, &li).mapv(|z| z.scale(two * g));
        let left = kron_term(&li, &id).mapv(|z| z.scale(g));
        let right = kron_term(&id, &li).mapv(|z| z.scale(g));
        l = l + jump - left - right;
    }

    if let Some(trap) = &model.trap {
        let k = trap.k_trap;
        if !k.is_zero() {
            let sink = d - 1;
            let mut lt = Array2::from_elem((d, d), Complex::<T>::zero());
            lt[(sink, trap.exit_site)] = Complex::new(T::one(), T::zero());
            let ltd = numerics::dagger(&lt);
            let n_op = ltd.dot(&lt); // |e><e|
            let jump = kron_term(&lt, &ltd).mapv(|z| z.scale(two * k));
            let left = kron_term(&n_op, &id).mapv(|z| z.scale(k));
            let right = kron_term(&id, &n_op).mapv(|z| z.scale(k));
            l = l + jump - left - right;
        }
    }
    l
}

/// Cached exp(𝓛 Δt) acting on vectorized density matrices.
#[derive(Debug, Clone)]
pub struct Propagator<T: Scalar> {
    matrix: CMatrix<T>,
    step: T,
    dim: usize,
}

impl<T: Scalar> Propagator<T> {
    pub fn new(model: &NetworkModel<T>, dt: T) -> Result<Self> {
        if dt <= T::zero() || !dt.is_finite() {
            return Err(Error::InvalidGrid("propagator step must be > 0".into()));
        }
        let l = build_liouvillian(model);
        let scaled = l.mapv(|z| z.scale(dt));
        Ok(Self {
            matrix: expm(&scaled)?,
            step: dt,
            dim: model.dim(),
        })
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn apply(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let d = self.dim;
        debug_assert_eq!(rho.nrows(), d);
        let v = Array1::from_iter(rho.iter().copied());
        let out = self.matrix.dot(&v);
        Array2::from_shape_vec((d, d), out.to_vec()).expect("shape preserved")
    }

    pub fn apply_state(&self, rho: &DensityMatrix<T>) -> DensityMatrix<T> {
        DensityMatrix::from_matrix_unchecked(self.apply(rho.matrix()))
    }
}

/// Concurrent insert-or-get cache of propagators for one model, keyed by step.
pub struct PropagatorCache<T: Scalar> {
    model: NetworkModel<T>,
    map: Mutex<HashMap<u64, Arc<Propagator<T>>>>,
}

impl<T: Scalar> PropagatorCache<T> {
    pub fn new(model: NetworkModel<T>) -> Self {
        Self {
            model,
            map: Mutex::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &NetworkModel<T> {
        &self.model
    }

    pub fn get(&self, dt: T) -> Result<Arc<Propagator<T>>> {
        let key = dt.to_f64().unwrap_or(f64::NAN).to_bits();
        if let Some(p) = self.map.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(p));
        }
        // Built outside the lock; a racing duplicate build is harmless.
        let p = Arc::new(Propagator::new(&self.model, dt)?);
        let mut map = self.map.lock().expect("cache lock");
        Ok(Arc::clone(map.entry(key).or_insert(p)))
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Propagate ρ0 to each point of an ascending time grid (ps).
pub fn evolve<T: Scalar>(
    model: &NetworkModel<T>,
    rho0: &DensityMatrix<T>,
    grid: &[T],
) -> Result<Vec<DensityMatrix<T>>> {
    if rho0.dim() != model.dim() {
        return Err(Error::StateInvalid(format!(
            "state dimension {} does not match model dimension {}",
            rho0.dim(),
            model.dim()
        )));
    }
    if grid.first().map_or(false, |t| *t < T::zero()) {
        return Err(Error::InvalidGrid("grid must start at >= 0".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly ascending".into()));
    }
    let cache = PropagatorCache::new(model.clone());
    let mut out = Vec::with_capacity(grid.len());
    let mut current = rho0.clone();
    let mut t_prev = T::zero();
    for &t in grid {
        let gap = t - t_prev;
        if gap > T::zero() {
            current = cache.get(gap)?.apply_state(&current);
        }
        t_prev = t;
        out.push(current.clone());
    }
    Ok(out)
}

/// Diagonal real parts: site populations, then the sink population if present.
pub fn populations<T: Scalar>(rho: &DensityMatrix<T>) -> Vec<T> {
    rho.matrix().diag().iter().map(|z| z.re).collect()
}

/// Shannon entropy −Σ p ln p of the site populations (sink excluded, no
/// renormalization); 0·ln 0 ≡ 0.
pub fn delocalization<T: Scalar>(rho: &DensityMatrix<T>, n_sites: usize) -> T {
    let mut h = T::zero();
    for z in rho.matrix().diag().iter().take(n_sites) {
        let p = z.re;
        if p > T::zero() {
            h = h - p * p.ln();
        }
    }
    h
}

/// Transport efficiency η(t) = 2 k_trap ∫₀ᵗ p_e(τ) dτ by trapezoidal
/// quadrature of the exit-site population. `step` defaults to 1 fs.
pub fn efficiency<T: Scalar>(
    model: &NetworkModel<T>,
    rho0: &DensityMatrix<T>,
    t: T,
    step: Option<T>,
) -> Result<T> {
    let trap = model.trap().ok_or(Error::NoTrap)?;
    if t < T::zero() {
        return Err(Error::InvalidGrid("time must be >= 0".into()));
    }
    if t.is_zero() {
        return Ok(T::zero());
    }
    let step = step.unwrap_or_else(|| T::real(1e-3));
    if step <= T::zero() {
        return Err(Error::InvalidGrid("quadrature step must be > 0".into()));
    }
    let n = (t / step).ceil().to_usize().unwrap_or(1).max(1);
    let h = t / T::from_usize(n).expect("step count fits scalar");
    let prop = Propagator::new(model, h)?;
    let exit = trap.exit_site;
    let mut samples = Vec::with_capacity(n + 1);
    let mut current = rho0.clone();
    samples.push((T::zero(), current.matrix()[(exit, exit)].re));
    for k in 1..=n {
        current = prop.apply_state(&current);
        let tk = h * T::from_usize(k).expect("index fits scalar");
        samples.push((tk, current.matrix()[(exit, exit)].re));
    }
    let integral = crate::numerics::trapezoid(&samples)?;
    Ok(T::real(2.0) * trap.k_trap * integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    type C = Complex<f64>;

    pub(crate) fn trimer() -> NetworkModel<f64> {
        NetworkModel::new(
            array![[215.0, -104.1, 5.1], [-104.1, 220.0, 32.6], [5.1, 32.6, 0.0]],
            vec![0.0; 3],
            None,
        )
        .unwrap()
    }

    #[test]
    fn kappa_value() {
        let k: f64 = cm1_to_rad_per_ps();
        assert_abs_diff_eq!(k, 0.1883651567, epsilon = 1e-9);
    }

    #[test]
    fn single_site_no_noise_liouvillian_is_zero() {
        let m = NetworkModel::new(array![[100.0]], vec![0.0], None).unwrap();
        let l = build_liouvillian(&m);
        // on-site energy only contributes a commutator that vanishes for 1 site
        let dev = l.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12);
    }

    #[test]
    fn dimer_coherence_decay_rate() {
        // d=2, H=0: rho_12(t) = rho_12(0) exp(-(g1+g2) t)
        let g1 = 3.0;
        let g2 = 5.0;
        let m = NetworkModel::new(array![[0.0, 0.0], [0.0, 0.0]], vec![g1, g2], None).unwrap();
        let rho0 = DensityMatrix::new(array![
            [C::new(0.5, 0.0), C::new(0.5, 0.0)],
            [C::new(0.5, 0.0), C::new(0.5, 0.0)]
        ])
        .unwrap();
        for &t in &[0.05, 0.2, 1.0] {
            let rho = evolve(&m, &rho0, &[t]).unwrap().remove(0);
            let want = 0.5 * (-(g1 + g2) * t).exp();
            assert_abs_diff_eq!(rho.matrix()[(0, 1)].re, want, epsilon = 1e-8);
        }
    }

    #[test]
    fn trimer_eigenperiods() {
        let m = trimer();
        let h = m
            .hamiltonian()
            .mapv(|x| C::new(x, 0.0));
        let eig = crate::numerics::eig_hermitian(&h).unwrap();
        let kappa = m.energy_to_angular();
        let e = &eig.eigenvalues;
        let mut periods = vec![
            2.0 * std::f64::consts::PI / (kappa * (e[2] - e[1])),
            2.0 * std::f64::consts::PI / (kappa * (e[2] - e[0])),
            2.0 * std::f64::consts::PI / (kappa * (e[1] - e[0])),
        ];
        periods.sort_by(f64::total_cmp);
        let mut want = [0.163, 0.100, 0.264];
        want.sort_by(f64::total_cmp);
        for (p, w) in periods.iter().zip(want.iter()) {
            assert_abs_diff_eq!(p, w, epsilon = 0.002);
        }
    }

    #[test]
    fn propagator_semigroup() {
        let m = NetworkModel::new(
            array![[100.0, -20.0], [-20.0, 50.0]],
            vec![4.0, 7.0],
            Some(Trap {
                exit_site: 1,
                k_trap: 2.0,
            }),
        )
        .unwrap();
        let p1 = Propagator::new(&m, 0.05).unwrap();
        let p2 = Propagator::new(&m, 0.10).unwrap();
        let sq = p1.matrix().dot(p1.matrix());
        let dev = (&sq - p2.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-10, "semigroup dev {dev:e}");
    }

    #[test]
    fn zero_liouvillian_propagator_is_identity() {
        let m = NetworkModel::new(array![[0.0]], vec![0.0], None).unwrap();
        let p = Propagator::new(&m, 3.7).unwrap();
        assert_abs_diff_eq!(p.matrix()[(0, 0)].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn unitary_oracle_agreement() {
        // gamma = 0, no trap: evolve agrees with V exp(-i kappa Lambda t) V† rho0 ...
        let m = trimer();
        let rho0 = DensityMatrix::localized(3, 0).unwrap();
        let t = 0.1637;
        let rho = evolve(&m, &rho0, &[t]).unwrap().remove(0);

        let h = m.hamiltonian().mapv(|x| C::new(x, 0.0));
        let eig = crate::numerics::eig_hermitian(&h).unwrap();
        let v = &eig.eigenvectors;
        let kappa = m.energy_to_angular();
        let phases = Array2::from_shape_fn((3, 3), |(i, j)| {
            if i == j {
                C::from_polar(1.0, -kappa * eig.eigenvalues[i] * t)
            } else {
                C::new(0.0, 0.0)
            }
        });
        let u = v.dot(&phases).dot(&crate::numerics::dagger(v));
        let want = u.dot(rho0.matrix()).dot(&crate::numerics::dagger(&u));
        let dev = (rho.matrix() - &want)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-8, "unitary oracle dev {dev:e}");
    }

    #[test]
    fn maximally_mixed_is_stationary_without_trap() {
        let mut m = trimer();
        m = m.with_uniform_dephasing(12.0).unwrap();
        let rho0 = DensityMatrix::maximally_mixed(3);
        let rho = evolve(&m, &rho0, &[0.7]).unwrap().remove(0);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 / 3.0 } else { 0.0 };
                assert_abs_diff_eq!(rho.matrix()[(i, j)].re, want, epsilon = 1e-9);
                assert_abs_diff_eq!(rho.matrix()[(i, j)].im, 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn populations_of_localized_state() {
        let rho = DensityMatrix::<f64>::localized(3, 0).unwrap();
        assert_eq!(populations(&rho), vec![1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(delocalization(&rho, 3), 0.0, epsilon = 1e-15);
        let mixed = DensityMatrix::<f64>::maximally_mixed(3);
        assert_abs_diff_eq!(delocalization(&mixed, 3), 3.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn delocalization_two_of_three_sites() {
        let m = array![
            [C::new(0.5, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)],
            [C::new(0.0, 0.0), C::new(0.5, 0.0), C::new(0.0, 0.0)],
            [C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)]
        ];
        let rho = DensityMatrix::new(m).unwrap();
        assert_abs_diff_eq!(delocalization(&rho, 3), 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn efficiency_zero_rate_or_time() {
        let m = trimer()
            .with_trap(Trap {
                exit_site: 2,
                k_trap: 0.0,
            })
            .unwrap();
        let rho0 = DensityMatrix::localized(4, 0).unwrap();
        assert_abs_diff_eq!(
            efficiency(&m, &rho0, 1.0, None).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            efficiency(&m, &rho0, 0.0, None).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert!(matches!(
            efficiency(&trimer(), &DensityMatrix::localized(3, 0).unwrap(), 1.0, None),
            Err(Error::NoTrap)
        ));
    }

    #[test]
    fn efficiency_matches_sink_population() {
        let m = trimer()
            .with_uniform_dephasing(16.0)
            .unwrap()
            .with_trap(Trap {
                exit_site: 2,
                k_trap: 5.0,
            })
            .unwrap();
        let rho0 = DensityMatrix::localized(4, 0).unwrap();
        let t = 1.0;
        let eta = efficiency(&m, &rho0, t, None).unwrap();
        let rho = evolve(&m, &rho0, &[t]).unwrap().remove(0);
        let sink = rho.matrix()[(3, 3)].re;
        assert_abs_diff_eq!(eta, sink, epsilon = 1e-4);
    }

    #[test]
    fn quadrature_step_convergence_guard() {
        let m = trimer()
            .with_uniform_dephasing(16.0)
            .unwrap()
            .with_trap(Trap {
                exit_site: 2,
                k_trap: 5.0,
            })
            .unwrap();
        let rho0 = DensityMatrix::localized(4, 0).unwrap();
        let e1 = efficiency(&m, &rho0, 0.5, Some(1e-3)).unwrap();
        let e2 = efficiency(&m, &rho0, 0.5, Some(5e-4)).unwrap();
        assert!((e1 - e2).abs() < 1e-5, "step halving moved eta by {}", e1 - e2);
    }

    #[test]
    fn trace_preserved_with_trap() {
        let m = trimer()
            .with_uniform_dephasing(30.0)
            .unwrap()
            .with_trap(Trap {
                exit_site: 2,
                k_trap: 5.0,
            })
            .unwrap();
        let rho0 = DensityMatrix::localized(4, 0).unwrap();
        for rho in evolve(&m, &rho0, &[0.1, 0.5, 2.0, 5.0]).unwrap() {
            let tr = crate::numerics::trace(rho.matrix());
            assert_abs_diff_eq!(tr.re, 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(tr.im, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn propagator_complete_positivity_choi_check() {
        // Choi matrix of the channel rho -> P rho: C = sum_{ij} E_ij (x) K(E_ij)
        let m = NetworkModel::new(
            array![[120.0, -40.0], [-40.0, 60.0]],
            vec![8.0, 2.0],
            None,
        )
        .unwrap();
        let p = Propagator::new(&m, 0.13).unwrap();
        let d = 2;
        let mut choi = Array2::from_elem((d * d, d * d), C::new(0.0, 0.0));
        for i in 0..d {
            for j in 0..d {
                let mut e = Array2::from_elem((d, d), C::new(0.0, 0.0));
                e[(i, j)] = C::new(1.0, 0.0);
                let ke = p.apply(&e);
                for a in 0..d {
                    for b in 0..d {
                        choi[(i * d + a, j * d + b)] += ke[(a, b)];
                    }
                }
            }
        }
        let eigs = crate::numerics::eigvals_hermitian(&choi).unwrap();
        assert!(eigs[0] > -1e-10, "Choi min eigenvalue {:e}", eigs[0]);
    }

    #[test]
    fn cache_insert_or_get() {
        let cache = PropagatorCache::new(trimer());
        let a = cache.get(0.01).unwrap();
        let b = cache.get(0.01).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
        cache.get(0.02).unwrap();
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn model_validation() {
        assert!(NetworkModel::new(array![[0.0, 1.0], [2.0, 0.0]], vec![0.0, 0.0], None).is_err());
        assert!(NetworkModel::new(array![[0.0]], vec![-1.0], None).is_err());
        assert!(NetworkModel::new(
            array![[0.0]],
            vec![0.0],
            Some(Trap {
                exit_site: 5,
                k_trap: 1.0
            })
        )
        .is_err());
    }
}
