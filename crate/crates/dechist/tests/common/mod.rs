//! Shared fixtures for the integration suites: the trimer model, a random
//! model ensemble, and an independent chain-operator oracle for the unitary
//! case.

use ndarray::{array, Array2};
use num_complex::Complex;
use rand::Rng;

use dechist::dynamics::{DensityMatrix, NetworkModel, Trap};
use dechist::histories::{DecoherenceMatrix, ProjectionBasis, ProjectorFamily};
use dechist::numerics::{dagger, expm, trace, CMatrix};

pub type C = Complex<f64>;

pub fn trimer_hamiltonian() -> Array2<f64> {
    array![
        [215.0, -104.1, 5.1],
        [-104.1, 220.0, 32.6],
        [5.1, 32.6, 0.0]
    ]
}

pub fn trimer(gamma: f64, trap: bool) -> NetworkModel<f64> {
    NetworkModel::new(
        trimer_hamiltonian(),
        vec![gamma; 3],
        trap.then_some(Trap {
            exit_site: 2,
            k_trap: 5.0,
        }),
    )
    .unwrap()
}

pub fn site1(dim: usize) -> DensityMatrix<f64> {
    DensityMatrix::localized(dim, 0).unwrap()
}

/// One random-model case: model, valid initial state, history parameters.
pub struct RandomCase {
    pub model: NetworkModel<f64>,
    pub rho0: DensityMatrix<f64>,
    pub basis: ProjectionBasis,
    pub n: usize,
    pub dt: f64,
}

pub fn random_case<R: Rng>(rng: &mut R) -> RandomCase {
    let d = rng.gen_range(2..=3usize);
    let mut h = Array2::zeros((d, d));
    for i in 0..d {
        for j in i..d {
            let v = rng.gen_range(-300.0..300.0);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let gammas: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..100.0)).collect();
    let trap = rng.gen_bool(0.5).then(|| Trap {
        exit_site: rng.gen_range(0..d),
        k_trap: rng.gen_range(0.0..10.0),
    });
    let trapped = trap.is_some();
    let model = NetworkModel::new(h, gammas, trap).unwrap();

    // rho = A A† / tr, always a valid state
    let a = Array2::from_shape_fn((d, d), |_| {
        C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let mut rho = a.dot(&dagger(&a));
    let tr = trace(&rho).re;
    rho.mapv_inplace(|z| z / tr);
    let rho0 = DensityMatrix::new(rho).unwrap();
    let rho0 = if trapped { rho0.extend_with_sink() } else { rho0 };

    RandomCase {
        model,
        rho0,
        basis: if rng.gen_bool(0.5) {
            ProjectionBasis::Site
        } else {
            ProjectionBasis::Exciton
        },
        n: rng.gen_range(1..=3usize),
        dt: rng.gen_range(0.001..0.3),
    }
}

/// Chain-operator decoherence matrix for purely unitary dynamics:
/// C_j = P_{j_N} U ⋯ P_{j_1} U with U = exp(−iκHΔt), entry Tr[C_j ρ C_k†].
/// Only valid when the model has no dephasing and no trap.
pub fn chain_operator_oracle(
    model: &NetworkModel<f64>,
    rho0: &DensityMatrix<f64>,
    family: &ProjectorFamily<f64>,
    n: usize,
    dt: f64,
) -> Vec<(Vec<usize>, Vec<usize>, C)> {
    assert!(model.dephasing().iter().all(|g| *g == 0.0));
    assert!(model.trap().is_none());
    let kappa = model.energy_to_angular();
    let h = model
        .hamiltonian()
        .mapv(|x| C::new(0.0, -kappa * dt) * x);
    let u = expm(&h).unwrap();

    let db = family.len();
    let mut histories: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..n {
        histories = histories
            .iter()
            .flat_map(|p| {
                (0..db).map(move |j| {
                    let mut q = p.clone();
                    q.push(j);
                    q
                })
            })
            .collect();
    }
    let chain = |hist: &[usize]| -> CMatrix<f64> {
        let mut op = u.clone();
        for (level, &j) in hist.iter().enumerate() {
            let mut p = family.projector(j).dot(&op);
            if level + 1 < hist.len() {
                p = u.dot(&p);
            }
            op = p;
        }
        op
    };
    let mut out = Vec::new();
    for j in &histories {
        let cj = chain(j);
        for k in &histories {
            let ck = chain(k);
            let val = trace(&cj.dot(rho0.matrix()).dot(&dagger(&ck)));
            out.push((j.clone(), k.clone(), val));
        }
    }
    out
}

/// Max Hermiticity deviation over the stored blocks.
pub fn block_hermiticity(d: &DecoherenceMatrix<f64>) -> f64 {
    d.blocks()
        .iter()
        .map(|b| dechist::numerics::hermiticity_deviation(b))
        .fold(0.0, f64::max)
}
