//! Counter-based deterministic random numbers and sampling helpers.
//!
//! The generator is a 64-bit counter design: the value at counter `t` is a
//! pure function of `(seed, t)`, so shot `t` of a Monte-Carlo run can be drawn
//! on any thread and the merged result is independent of scheduling. All
//! stochastic entry points in the library take an explicit seed.

use nalgebra::{Complex, DMatrix};

use crate::operator::{DensityOperator, HermitianOperator};

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stateless counter-based generator: `u64_at(t)` depends only on `(seed, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn u64_at(&self, counter: u64) -> u64 {
        mix(self.seed.wrapping_add(counter.wrapping_add(1).wrapping_mul(GAMMA)))
    }

    /// Uniform in `[0, 1)` with 53-bit resolution.
    pub fn uniform_at(&self, counter: u64) -> f64 {
        (self.u64_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Derives an independent stream, e.g. one per Monte-Carlo shard.
    pub fn substream(&self, index: u64) -> CounterRng {
        CounterRng {
            seed: mix(self.seed ^ mix(index.wrapping_add(0x5851_F42D_4C95_7F2D))),
        }
    }

    pub fn stream(&self) -> StreamRng {
        StreamRng {
            rng: *self,
            counter: 0,
        }
    }
}

/// Stateful convenience wrapper advancing a counter through a `CounterRng`.
#[derive(Debug, Clone)]
pub struct StreamRng {
    rng: CounterRng,
    counter: u64,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        CounterRng::new(seed).stream()
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = self.rng.u64_at(self.counter);
        self.counter += 1;
        v
    }

    pub fn next_uniform(&mut self) -> f64 {
        let v = self.rng.uniform_at(self.counter);
        self.counter += 1;
        v
    }

    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_uniform()
    }

    /// Standard normal via Box-Muller.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_uniform().max(1e-300);
        let u2 = self.next_uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn next_usize(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Random Hermitian operator with independent standard-normal entries
/// (GUE-like, not normalized).
pub fn random_hermitian(dim: usize, rng: &mut StreamRng) -> HermitianOperator {
    let mut m = DMatrix::<Complex<f64>>::zeros(dim, dim);
    for j in 0..dim {
        m[(j, j)] = Complex::new(rng.next_normal(), 0.0);
        for k in (j + 1)..dim {
            let z = Complex::new(rng.next_normal(), rng.next_normal());
            m[(j, k)] = z;
            m[(k, j)] = z.conj();
        }
    }
    HermitianOperator::new(m).expect("square by construction")
}

/// Random traceless Hermitian operator.
pub fn random_traceless_hermitian(dim: usize, rng: &mut StreamRng) -> HermitianOperator {
    random_hermitian(dim, rng).traceless_part()
}

/// Random strictly positive state: Hilbert-Schmidt-ball sampling
/// `X X^dag / Tr(X X^dag)` with the spectrum shifted away from zero.
pub fn random_density(dim: usize, rng: &mut StreamRng) -> DensityOperator {
    let mut x = DMatrix::<Complex<f64>>::zeros(dim, dim);
    for j in 0..dim {
        for k in 0..dim {
            x[(j, k)] = Complex::new(rng.next_normal(), rng.next_normal());
        }
    }
    let w = &x * x.adjoint();
    let tr: f64 = (0..dim).map(|j| w[(j, j)].re).sum();
    let raw = w.map(|z| z / Complex::new(tr, 0.0));
    // shift the spectrum by delta and renormalize so min eigenvalue >= delta/(1+d*delta)
    let delta = 1e-3;
    let shifted = (raw + DMatrix::identity(dim, dim).map(|z: Complex<f64>| z * delta))
        / Complex::new(1.0 + dim as f64 * delta, 0.0);
    DensityOperator::from_matrix(shifted).expect("shifted spectrum is strictly positive")
}

/// Haar-like random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary(dim: usize, rng: &mut StreamRng) -> DMatrix<Complex<f64>> {
    let mut x = DMatrix::<Complex<f64>>::zeros(dim, dim);
    for j in 0..dim {
        for k in 0..dim {
            x[(j, k)] = Complex::new(rng.next_normal(), rng.next_normal());
        }
    }
    let qr = x.qr();
    qr.q()
}

/// Random unit vector in R^3.
pub fn random_unit3(rng: &mut StreamRng) -> [f64; 3] {
    loop {
        let v = [rng.next_normal(), rng.next_normal(), rng.next_normal()];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-6 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Random point in the open unit ball of R^3, scaled to `max_norm`.
pub fn random_ball3(max_norm: f64, rng: &mut StreamRng) -> [f64; 3] {
    loop {
        let v = [
            rng.next_range(-1.0, 1.0),
            rng.next_range(-1.0, 1.0),
            rng.next_range(-1.0, 1.0),
        ];
        let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if n2 < 1.0 {
            return [v[0] * max_norm, v[1] * max_norm, v[2] * max_norm];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter_values_are_reproducible() {
        let rng = CounterRng::new(42);
        let a: Vec<u64> = (0..8).map(|t| rng.u64_at(t)).collect();
        let b: Vec<u64> = (0..8).map(|t| rng.u64_at(t)).collect();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn substreams_differ_from_parent() {
        let rng = CounterRng::new(7);
        let sub = rng.substream(0);
        assert_ne!(rng.u64_at(0), sub.u64_at(0));
        assert_ne!(rng.substream(1).seed(), sub.seed());
    }

    #[test]
    fn uniform_in_unit_interval() {
        let rng = CounterRng::new(3);
        for t in 0..1000 {
            let u = rng.uniform_at(t);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn random_density_is_valid() {
        let mut s = StreamRng::new(11);
        for d in [2, 3, 5] {
            let rho = random_density(d, &mut s);
            assert!(rho.eigenvalues().iter().all(|&l| l > 0.0));
            let tr: f64 = rho.eigenvalues().iter().sum();
            assert!((tr - 1.0).abs() < 1e-12);
        }
    }
}
