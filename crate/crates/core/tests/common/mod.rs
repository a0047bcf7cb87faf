//! Brute-force reference simulations on full dense matrices (nalgebra).
//!
//! Nothing here calls into the library's own simulator: operators are built
//! on the whole register, measured qubits stay in place as projectors and are
//! traced out at the end, and depolarization is the Pauli twirl.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use pumpgate::CMatrix;

pub type M = DMatrix<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn to_na(m: &CMatrix) -> M {
    let d = m.dim();
    M::from_fn(d, d, |i, j| m[(i, j)])
}

pub fn from_na(m: &M) -> CMatrix {
    let d = m.nrows();
    CMatrix::from_vec(d, (0..d * d).map(|k| m[(k / d, k % d)]).collect())
}

pub fn max_diff(a: &M, b: &M) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn pauli(k: usize) -> M {
    let i = Complex64::i();
    match k {
        0 => M::identity(2, 2),
        1 => M::from_row_slice(2, 2, &[c(0.), c(1.), c(1.), c(0.)]),
        2 => M::from_row_slice(2, 2, &[c(0.), -i, i, c(0.)]),
        _ => M::from_row_slice(2, 2, &[c(1.), c(0.), c(0.), c(-1.)]),
    }
}

pub fn hadamard() -> M {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    M::from_row_slice(2, 2, &[c(h), c(h), c(h), c(-h)])
}

pub fn rx(theta: f64) -> M {
    let (s, co) = (theta / 2.0).sin_cos();
    let mis = Complex64::new(0.0, -s);
    M::from_row_slice(2, 2, &[c(co), mis, mis, c(co)])
}

pub fn cnot() -> M {
    let mut m = M::zeros(4, 4);
    m[(0, 0)] = c(1.);
    m[(1, 1)] = c(1.);
    m[(2, 3)] = c(1.);
    m[(3, 2)] = c(1.);
    m
}

/// `gate` acting on `targets` (first target = most significant gate bit)
/// of an `n`-qubit register, qubit 0 being the most significant bit.
pub fn lift(gate: &M, targets: &[usize], n: usize) -> M {
    let dim = 1usize << n;
    let k = targets.len();
    let bit = |x: usize, q: usize| (x >> (n - 1 - q)) & 1;
    let local = |x: usize| {
        targets
            .iter()
            .enumerate()
            .fold(0, |acc, (pos, &q)| acc | (bit(x, q) << (k - 1 - pos)))
    };
    let rest_mask: usize = (0..n)
        .filter(|q| !targets.contains(q))
        .fold(0, |acc, q| acc | (1 << (n - 1 - q)));
    M::from_fn(dim, dim, |r, col| {
        if r & rest_mask != col & rest_mask {
            c(0.)
        } else {
            gate[(local(r), local(col))]
        }
    })
}

pub fn conj(u: &M, rho: &M) -> M {
    u * rho * u.adjoint()
}

/// `(𝟙/2ᵏ on targets) ⊗ tr_targets ρ` as the uniform Pauli twirl.
pub fn pauli_twirl(rho: &M, targets: &[usize], n: usize) -> M {
    let k = targets.len();
    let count = 4usize.pow(k as u32);
    let mut out = M::zeros(rho.nrows(), rho.ncols());
    for idx in 0..count {
        let mut p = M::identity(rho.nrows(), rho.ncols());
        for (pos, &q) in targets.iter().enumerate() {
            let which = (idx >> (2 * pos)) & 3;
            p = lift(&pauli(which), &[q], n) * p;
        }
        out += conj(&p, rho);
    }
    out / c(count as f64)
}

pub fn noisy(rho: &M, gate: &M, targets: &[usize], n: usize, q: f64) -> M {
    conj(&lift(gate, targets, n), rho) * c(q) + pauli_twirl(rho, targets, n) * c(1.0 - q)
}

pub fn projector(q: usize, b: usize, n: usize) -> M {
    let mut p = M::zeros(2, 2);
    p[(b, b)] = c(1.);
    lift(&p, &[q], n)
}

/// Unnormalized branch of a POVM outcome `k` with reliability `eta` in the Z basis.
pub fn povm_branch(rho: &M, q: usize, k: usize, eta: f64, n: usize) -> M {
    let w = |x: usize| if x == k { eta } else { 1.0 - eta };
    let p0 = projector(q, 0, n);
    let p1 = projector(q, 1, n);
    &p0 * rho * &p0 * c(w(0)) + &p1 * rho * &p1 * c(w(1))
}

pub fn ptrace(rho: &M, keep: &[usize], n: usize) -> M {
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let dk = 1usize << keep.len();
    let bit = |x: usize, q: usize| (x >> (n - 1 - q)) & 1;
    let mut out = M::zeros(dk, dk);
    for r in 0..rho.nrows() {
        for col in 0..rho.ncols() {
            if traced.iter().any(|&q| bit(r, q) != bit(col, q)) {
                continue;
            }
            let li = keep.iter().fold(0, |a, &q| (a << 1) | bit(r, q));
            let lj = keep.iter().fold(0, |a, &q| (a << 1) | bit(col, q));
            out[(li, lj)] += rho[(r, col)];
        }
    }
    out
}

pub fn kron(a: &M, b: &M) -> M {
    a.kronecker(b)
}

/// Bell vectors in the order Φ⁺, Ψ⁺, Ψ⁻, Φ⁻.
pub fn bell_vectors() -> [nalgebra::DVector<Complex64>; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = |a: [f64; 4]| nalgebra::DVector::from_iterator(4, a.iter().map(|&x| c(x)));
    [
        v([h, 0., 0., h]),
        v([0., h, h, 0.]),
        v([0., h, -h, 0.]),
        v([h, 0., 0., -h]),
    ]
}

pub fn bell_diagonal(lambda: [f64; 4]) -> M {
    let mut m = M::zeros(4, 4);
    for (l, v) in lambda.iter().zip(bell_vectors()) {
        m += &v * v.adjoint() * c(*l);
    }
    m
}

pub fn bell_weights(rho: &M) -> [f64; 4] {
    bell_vectors().map(|v| (v.adjoint() * rho * &v)[(0, 0)].re)
}

/// One DEJMPS step on `[A_t, B_t, A_s, B_s]`: returns success probability
/// and the Bell weights of the kept pair after post-selection.
pub fn dejmps_step(target: [f64; 4], source: [f64; 4], q: f64, eta: f64) -> (f64, [f64; 4]) {
    let n = 4;
    let mut rho = kron(&bell_diagonal(target), &bell_diagonal(source));
    let ra = rx(std::f64::consts::FRAC_PI_2);
    let rb = rx(-std::f64::consts::FRAC_PI_2);
    let rot = kron(&kron(&ra, &rb), &kron(&ra, &rb));
    rho = conj(&rot, &rho);
    rho = noisy(&rho, &cnot(), &[0, 2], n, q);
    rho = noisy(&rho, &cnot(), &[1, 3], n, q);
    let mut kept = M::zeros(16, 16);
    for k in 0..2 {
        let a = povm_branch(&rho, 2, k, eta, n);
        kept += povm_branch(&a, 3, k, eta, n);
    }
    let pair = ptrace(&kept, &[0, 1], n);
    let p = pair.trace().re;
    let w = bell_weights(&(pair / c(p)));
    (p, w)
}

/// Choi matrix of the pair-assisted CNOT, built from the 16 inputs |i⟩⟨j|
/// on `[A1, B1]` with the pair on `[A2, B2]`.
pub fn teleported_choi(pair: &M, q: f64, eta: f64) -> M {
    let n = 4;
    let (a1, b1, a2, b2) = (0, 1, 2, 3);
    let x_b2 = lift(&pauli(1), &[b2], n);
    let z_a1 = lift(&pauli(3), &[a1], n);
    let h_b2 = lift(&hadamard(), &[b2], n);
    let mut choi = M::zeros(16, 16);
    for i in 0..4 {
        for j in 0..4 {
            let mut e = M::zeros(4, 4);
            e[(i, j)] = c(1.);
            let mut rho = kron(&e, pair);
            rho = noisy(&rho, &cnot(), &[a1, a2], n, q);
            let mut acc = M::zeros(16, 16);
            for k in 0..2 {
                let b = povm_branch(&rho, a2, k, eta, n);
                acc += if k == 1 { conj(&x_b2, &b) } else { b };
            }
            rho = noisy(&acc, &cnot(), &[b2, b1], n, q);
            // X-basis measurement = Hadamard, Z measurement, Hadamard back
            let rotated = conj(&h_b2, &rho);
            let mut acc = M::zeros(16, 16);
            for k in 0..2 {
                let b = conj(&h_b2, &povm_branch(&rotated, b2, k, eta, n));
                acc += if k == 1 { conj(&z_a1, &b) } else { b };
            }
            let out = ptrace(&acc, &[a1, b1], n);
            for a in 0..4 {
                for b in 0..4 {
                    choi[(i * 4 + a, j * 4 + b)] = out[(a, b)];
                }
            }
        }
    }
    choi
}

pub fn ideal_cnot_choi() -> M {
    let u = cnot();
    let mut choi = M::zeros(16, 16);
    for i in 0..4 {
        for j in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    choi[(i * 4 + a, j * 4 + b)] = u[(a, i)] * u[(b, j)].conj();
                }
            }
        }
    }
    choi
}

pub fn random_lambda<R: rand::Rng>(rng: &mut R, min_fidelity: f64) -> [f64; 4] {
    let f = rng.gen_range(min_fidelity..1.0);
    let mut rest = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
    let s: f64 = rest.iter().sum();
    rest.iter_mut().for_each(|x| *x *= (1.0 - f) / s);
    [f, rest[0], rest[1], rest[2]]
}

/// `G G† / tr` for a complex Gaussian `G` of full rank.
pub fn random_density<R: rand::Rng>(rng: &mut R, n: usize) -> M {
    let d = 1 << n;
    let g = M::from_fn(d, d, |_, _| {
        Complex64::new(
            rng.sample(rand_distr::StandardNormal),
            rng.sample(rand_distr::StandardNormal),
        )
    });
    let rho = &g * g.adjoint();
    let t = rho.trace();
    rho / t
}

pub fn random_hermitian<R: rand::Rng>(rng: &mut R, d: usize) -> M {
    let g = M::from_fn(d, d, |_, _| {
        Complex64::new(
            rng.sample(rand_distr::StandardNormal),
            rng.sample(rand_distr::StandardNormal),
        )
    });
    (&g + g.adjoint()) * c(0.5)
}

pub fn sorted_eigenvalues(m: &M) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
