//! Entropy-based coherence functionals over decoherence matrices, and the
//! time/ensemble averages tied to transport figures of merit.

use rayon::prelude::*;

use crate::dynamics::{evolve, DensityMatrix, NetworkModel, PropagatorCache};
use crate::histories::{
    build_decoherence_matrix_cached, DecoherenceMatrix, HistorySpec, ProjectionBasis,
    DEFAULT_ENTRY_CAP,
};
use crate::numerics::{cumulative_trapezoid, eigvals_hermitian, trapezoid};
use crate::{Error, Result, Scalar};

/// −Tr[D ln D] over the block eigenvalues. Eigenvalues in [−1e-9, 0) are
/// clipped to zero; anything more negative is a genuine PSD violation.
pub fn von_neumann_entropy<T: Scalar>(d: &DecoherenceMatrix<T>) -> Result<T> {
    let clip = T::real(-1e-9);
    let mut h = T::zero();
    for b in d.blocks() {
        for lam in eigvals_hermitian(b)? {
            if lam < clip {
                return Err(Error::NotPsd {
                    min_eigenvalue: lam.to_f64().unwrap_or(f64::NAN),
                });
            }
            if lam > T::zero() {
                h = h - lam * lam.ln();
            }
        }
    }
    Ok(h)
}

/// Shannon entropy −Σ w ln w with 0·ln 0 ≡ 0. Small negative weights (down
/// to −1e-9) are tolerated as roundoff and skipped.
pub fn shannon_entropy<T: Scalar>(weights: &[T]) -> Result<T> {
    let clip = T::real(-1e-9);
    let mut h = T::zero();
    for &w in weights {
        if w < clip {
            return Err(Error::NotPsd {
                min_eigenvalue: w.to_f64().unwrap_or(f64::NAN),
            });
        }
        if w > T::zero() {
            h = h - w * w.ln();
        }
    }
    Ok(h)
}

/// Coherence C = (h_c − h)/h_c; 0 when h_c < 1e-12 (a single certain
/// history leaves nothing to interfere).
pub fn coherence_c<T: Scalar>(d: &DecoherenceMatrix<T>) -> Result<T> {
    let hc = shannon_entropy(&d.weights())?;
    if hc < T::real(1e-12) {
        return Ok(T::zero());
    }
    let h = von_neumann_entropy(d)?;
    Ok((hc - h) / hc)
}

/// Linear-entropy proxy C_L = Σ_{j≠k}|D_jk|² / (1 − Σ_j D_jj²); 0 when the
/// denominator is below 1e-12.
pub fn coherence_cl<T: Scalar>(d: &DecoherenceMatrix<T>) -> Result<T> {
    let mut off = T::zero();
    let mut diag_sq = T::zero();
    for b in d.blocks() {
        let n = b.nrows();
        for i in 0..n {
            for j in 0..n {
                let v = b[(i, j)].norm_sqr();
                if i == j {
                    diag_sq = diag_sq + v;
                } else {
                    off = off + v;
                }
            }
        }
    }
    let denom = T::one() - diag_sq;
    if denom < T::real(1e-12) {
        return Ok(T::zero());
    }
    Ok(off / denom)
}

/// Linear entropy h_L = 1 − Tr[D²] = 1 − Σ|D_jk|²; lower-bounds the von
/// Neumann entropy.
pub fn linear_entropy<T: Scalar>(d: &DecoherenceMatrix<T>) -> T {
    let mut sq = T::zero();
    for b in d.blocks() {
        for z in b.iter() {
            sq = sq + z.norm_sqr();
        }
    }
    T::one() - sq
}

/// One point of a coherence scan over projection spacings.
#[derive(Debug, Clone, Copy)]
pub struct ScanSample<T> {
    /// Projection spacing Δt (ps).
    pub step: T,
    pub h: T,
    pub h_c: T,
    pub c: T,
    pub c_l: T,
}

/// C, C_L, h, h_c sampled over a Δt grid at fixed basis, N, and dephasing.
#[derive(Debug, Clone)]
pub struct CoherenceScan<T> {
    pub gamma: T,
    pub basis: ProjectionBasis,
    pub n_projections: usize,
    pub samples: Vec<ScanSample<T>>,
}

/// Build a decoherence matrix and evaluate the coherence functionals at each
/// point of `steps`; grid points run in parallel, sharing a propagator cache.
pub fn coherence_scan<T: Scalar>(
    model: &NetworkModel<T>,
    rho0: &DensityMatrix<T>,
    basis: ProjectionBasis,
    n_projections: usize,
    steps: &[T],
    gamma: T,
) -> Result<CoherenceScan<T>> {
    if steps.is_empty() {
        return Err(Error::InvalidGrid("empty spacing grid".into()));
    }
    if steps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "spacing grid must be strictly ascending".into(),
        ));
    }
    let model = model.with_uniform_dephasing(gamma)?;
    let cache = PropagatorCache::new(model);
    let samples: Result<Vec<ScanSample<T>>> = steps
        .par_iter()
        .map(|&dt| {
            let spec = HistorySpec::new(basis, n_projections, dt)?;
            let d = build_decoherence_matrix_cached(&cache, rho0, &spec, DEFAULT_ENTRY_CAP)?;
            let h = von_neumann_entropy(&d)?;
            let h_c = shannon_entropy(&d.weights())?;
            let c = if h_c < T::real(1e-12) {
                T::zero()
            } else {
                (h_c - h) / h_c
            };
            Ok(ScanSample {
                step: dt,
                h,
                h_c,
                c,
                c_l: coherence_cl(&d)?,
            })
        })
        .collect();
    Ok(CoherenceScan {
        gamma,
        basis,
        n_projections,
        samples: samples?,
    })
}

/// Time-averaged coherence Q_{τ_d} = (1/τ_d)∫₀^{τ_d} C(Δt) dΔt.
///
/// C at Δt → 0 is extrapolated as the first sample. The scan must start no
/// later than max(2 fs, τ_d/10) and have spacing at most τ_d/10.
pub fn average_coherence_q<T: Scalar>(scan: &CoherenceScan<T>, tau_d: T) -> Result<T> {
    if tau_d <= T::zero() {
        return Err(Error::InvalidGrid("tau_d must be > 0".into()));
    }
    let max_start = T::real(2e-3).max(tau_d / T::real(10.0));
    let first = scan
        .samples
        .first()
        .ok_or(Error::TooFewSamples(0))?;
    if first.step > max_start {
        return Err(Error::GridTooCoarse(format!(
            "scan starts at {} ps, need <= {} ps for tau_d = {} ps",
            first.step, max_start, tau_d
        )));
    }
    average_over(
        scan.samples.iter().map(|s| (s.step, s.c)),
        tau_d,
        Some(first.c),
    )
}

/// One point of an interference trace: total history duration τ = NΔt.
#[derive(Debug, Clone, Copy)]
pub struct InterferenceSample<T> {
    /// Total duration τ = NΔt (ps).
    pub time: T,
    pub interference: T,
    pub weight_sum: T,
    /// Population oracle p_site(τ) from direct propagation.
    pub population: T,
}

/// Global interference of histories ending at one site, as a function of the
/// history duration.
#[derive(Debug, Clone)]
pub struct InterferenceTrace<T> {
    pub site: usize,
    pub gamma: T,
    pub n_projections: usize,
    pub samples: Vec<InterferenceSample<T>>,
}

/// Positive/negative/total time-split averages of an interference trace.
#[derive(Debug, Clone, Copy)]
pub struct InterferenceAverages<T> {
    pub positive: T,
    pub negative: T,
    pub total: T,
}

/// Sample 𝓘_site(τ) and the summed final weights over a grid of durations
/// τ (each divided into N equal projection steps), plus the direct-propagation
/// population as an oracle.
pub fn interference_trace<T: Scalar>(
    model: &NetworkModel<T>,
    rho0: &DensityMatrix<T>,
    site: usize,
    n_projections: usize,
    times: &[T],
    gamma: T,
) -> Result<InterferenceTrace<T>> {
    if times.is_empty() {
        return Err(Error::InvalidGrid("empty duration grid".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "duration grid must be strictly ascending".into(),
        ));
    }
    let model = model.with_uniform_dephasing(gamma)?;
    let rhos = evolve(&model, rho0, times)?;
    let cache = PropagatorCache::new(model);
    let nn = T::from_usize(n_projections).expect("N fits scalar");
    let samples: Result<Vec<InterferenceSample<T>>> = times
        .par_iter()
        .zip(rhos.par_iter())
        .map(|(&tau, rho)| {
            let spec = HistorySpec::new(ProjectionBasis::Site, n_projections, tau / nn)?;
            let d = build_decoherence_matrix_cached(&cache, rho0, &spec, DEFAULT_ENTRY_CAP)?;
            Ok(InterferenceSample {
                time: tau,
                interference: d.interference(site)?,
                weight_sum: d.final_weight_sum(site)?,
                population: rho.matrix()[(site, site)].re,
            })
        })
        .collect();
    Ok(InterferenceTrace {
        site,
        gamma,
        n_projections,
        samples: samples?,
    })
}

/// ⟨𝓘^±⟩ = (1/τ_trap)∫₀^{τ_trap} max/min(𝓘(τ), 0) dτ, with 𝓘(0) ≡ 0.
pub fn average_interference<T: Scalar>(
    trace: &InterferenceTrace<T>,
    tau_trap: T,
) -> Result<InterferenceAverages<T>> {
    if tau_trap <= T::zero() {
        return Err(Error::InvalidGrid("tau_trap must be > 0".into()));
    }
    let spacing_ok = trace
        .samples
        .first()
        .map_or(false, |s| s.time <= tau_trap / T::real(10.0));
    if !spacing_ok {
        return Err(Error::GridTooCoarse(format!(
            "trace must start within tau_trap/10 = {} ps",
            tau_trap / T::real(10.0)
        )));
    }
    let pts = trace.samples.iter().map(|s| (s.time, s.interference));
    let positive = average_over(
        pts.clone().map(|(t, i)| (t, i.max(T::zero()))),
        tau_trap,
        Some(T::zero()),
    )?;
    let negative = average_over(
        pts.map(|(t, i)| (t, i.min(T::zero()))),
        tau_trap,
        Some(T::zero()),
    )?;
    Ok(InterferenceAverages {
        positive,
        negative,
        total: positive + negative,
    })
}

/// Trapezoid average of (t, y) samples over [0, horizon]. `y0` supplies the
/// value at t = 0 when the grid does not include it; the endpoint is linearly
/// interpolated when the grid straddles the horizon.
fn average_over<T: Scalar>(
    samples: impl Iterator<Item = (T, T)>,
    horizon: T,
    y0: Option<T>,
) -> Result<T> {
    let tol = horizon * T::real(1e-9);
    let mut pts: Vec<(T, T)> = Vec::new();
    if let Some(y) = y0 {
        pts.push((T::zero(), y));
    }
    let mut beyond: Option<(T, T)> = None;
    for (t, y) in samples {
        if t <= horizon + tol {
            pts.push((t, y));
        } else {
            beyond = Some((t, y));
            break;
        }
    }
    let last = *pts.last().ok_or(Error::TooFewSamples(0))?;
    if last.0 < horizon - tol {
        match beyond {
            Some((t1, y1)) => {
                let f = (horizon - last.0) / (t1 - last.0);
                pts.push((horizon, last.1 + (y1 - last.1) * f));
            }
            None => {
                return Err(Error::GridTooCoarse(format!(
                    "samples end at {} ps, before the horizon {} ps",
                    last.0, horizon
                )));
            }
        }
    }
    Ok(trapezoid(&pts)? / horizon)
}

/// One point of an efficiency decomposition trace.
#[derive(Debug, Clone, Copy)]
pub struct EfficiencySample<T> {
    pub time: T,
    /// η(t) = 2 k_trap ∫₀ᵗ p_e from direct propagation.
    pub eta: T,
    /// W(t) = 2 k_trap ∫₀ᵗ w_sum: the classical (decohered) share.
    pub classical: T,
    /// I(t) = 2 k_trap ∫₀ᵗ 𝓘: the interference share.
    pub interference: T,
    /// Sink population oracle.
    pub p_sink: T,
}

/// η(t) split into classical and interference parts via the exit-site
/// decomposition p_e = w_sum + 𝓘.
#[derive(Debug, Clone)]
pub struct EfficiencyTrace<T> {
    pub exit_site: usize,
    pub n_projections: usize,
    pub samples: Vec<EfficiencySample<T>>,
}

/// Decompose the transport efficiency over an ascending time grid. At each
/// grid time t the history set spans [0, t] with N equal steps; the running
/// integrals use trapezoid quadrature on the same grid.
pub fn efficiency_decomposition<T: Scalar>(
    model: &NetworkModel<T>,
    rho0: &DensityMatrix<T>,
    n_projections: usize,
    times: &[T],
) -> Result<EfficiencyTrace<T>> {
    let trap = model.trap().ok_or(Error::NoTrap)?;
    let exit = trap.exit_site;
    let k = trap.k_trap;
    if times.is_empty() {
        return Err(Error::InvalidGrid("empty time grid".into()));
    }
    if times[0] <= T::zero() || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "time grid must be strictly ascending and positive".into(),
        ));
    }
    let rhos = evolve(model, rho0, times)?;
    let cache = PropagatorCache::new(model.clone());
    let nn = T::from_usize(n_projections).expect("N fits scalar");
    let pointwise: Result<Vec<(T, T)>> = times
        .par_iter()
        .map(|&t| {
            let spec = HistorySpec::new(ProjectionBasis::Site, n_projections, t / nn)?;
            let d = build_decoherence_matrix_cached(&cache, rho0, &spec, DEFAULT_ENTRY_CAP)?;
            Ok((d.final_weight_sum(exit)?, d.interference(exit)?))
        })
        .collect();
    let pointwise = pointwise?;

    let p0 = rho0.matrix()[(exit, exit)].re;
    let with_origin = |f: &dyn Fn(usize) -> T, y0: T| -> Vec<(T, T)> {
        let mut v = Vec::with_capacity(times.len() + 1);
        v.push((T::zero(), y0));
        v.extend(times.iter().enumerate().map(|(i, &t)| (t, f(i))));
        v
    };
    let two_k = T::real(2.0) * k;
    let w_int = cumulative_trapezoid(&with_origin(&|i| pointwise[i].0, p0))?;
    let i_int = cumulative_trapezoid(&with_origin(&|i| pointwise[i].1, T::zero()))?;
    let e_int = cumulative_trapezoid(&with_origin(
        &|i| rhos[i].matrix()[(exit, exit)].re,
        p0,
    ))?;
    let sink = model.dim() - 1;
    let samples = times
        .iter()
        .enumerate()
        .map(|(i, &t)| EfficiencySample {
            time: t,
            eta: two_k * e_int[i + 1],
            classical: two_k * w_int[i + 1],
            interference: two_k * i_int[i + 1],
            p_sink: rhos[i].matrix()[(sink, sink)].re,
        })
        .collect();
    Ok(EfficiencyTrace {
        exit_site: exit,
        n_projections,
        samples,
    })
}
