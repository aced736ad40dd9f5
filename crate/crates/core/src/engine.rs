//! Dense statevector simulation, seeded shot sampling and Pauli-trajectory noise.
//!
//! Amplitudes are little-endian: qubit 0 is the least significant bit of the
//! basis index.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, GateKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("shots must be at least 1")]
    ZeroShots,
    #[error("depolarizing probability {0} is outside [0, 1]")]
    BadNoise(f64),
    #[error("marginal needs at least one qubit")]
    EmptySubset,
    #[error("qubit {qubit} is out of range for a {n_qubits}-qubit distribution")]
    BadQubit { qubit: usize, n_qubits: usize },
    #[error("qubit {0} is listed twice")]
    DuplicateQubit(usize),
    #[error("distributions differ in kind or size")]
    Mismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies a 2×2 matrix `[[m00, m01], [m10, m11]]` to `target` on the
    /// subspace where `control` (if any) reads `|1⟩`.
    fn apply_1q(&mut self, target: usize, control: Option<usize>, m: [[Complex64; 2]; 2]) {
        let tbit = 1usize << target;
        let cmask = control.map_or(0, |c| 1usize << c);
        for i in 0..self.amplitudes.len() {
            if i & tbit != 0 || i & cmask != cmask {
                continue;
            }
            let j = i | tbit;
            let a0 = self.amplitudes[i];
            let a1 = self.amplitudes[j];
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    pub fn h(&mut self, target: usize) {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.apply_1q(target, None, [[s, s], [s, -s]]);
    }

    pub fn x(&mut self, target: usize) {
        let tbit = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & tbit == 0 {
                self.amplitudes.swap(i, i | tbit);
            }
        }
    }

    pub fn y(&mut self, target: usize) {
        let zero = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        self.apply_1q(target, None, [[zero, -i], [i, zero]]);
    }

    pub fn z(&mut self, target: usize) {
        let tbit = 1usize << target;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & tbit != 0 {
                *a = -*a;
            }
        }
    }

    /// `RY(θ)|0⟩ = cos(θ/2)|0⟩ + sin(θ/2)|1⟩`.
    pub fn ry(&mut self, target: usize, theta: f64, control: Option<usize>) {
        let (s, c) = (theta / 2.0).sin_cos();
        let c = Complex64::new(c, 0.0);
        let s = Complex64::new(s, 0.0);
        self.apply_1q(target, control, [[c, -s], [s, c]]);
    }

    /// Applies one IR gate. Control-on-zero CRY is executed as
    /// `X(control) · CRY · X(control)`.
    pub fn apply(&mut self, gate: &GateKind) {
        match *gate {
            GateKind::H { target } => self.h(target),
            GateKind::X { target } => self.x(target),
            GateKind::Ry { target, theta } => self.ry(target, theta, None),
            GateKind::Cry {
                control,
                control_value,
                target,
                theta,
            } => {
                if control_value == 0 {
                    self.x(control);
                    self.ry(target, theta, Some(control));
                    self.x(control);
                } else {
                    self.ry(target, theta, Some(control));
                }
            }
        }
    }

    pub fn run(circ: &Circuit) -> Result<Statevector, EngineError> {
        circ.validate()?;
        let mut state = Statevector::zero(circ.n_qubits);
        for gate in &circ.gates {
            state.apply(&gate.kind);
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistKind {
    /// Dense probabilities indexed by basis state.
    Exact(Vec<f64>),
    /// Observed bitstrings and their counts.
    Sampled { counts: BTreeMap<usize, u64>, shots: u64 },
}

/// Outcome statistics over full-register bitstrings.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub n_qubits: usize,
    pub kind: DistKind,
}

impl Distribution {
    pub fn exact(n_qubits: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), 1 << n_qubits);
        Self {
            n_qubits,
            kind: DistKind::Exact(probs),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.kind, DistKind::Exact(_))
    }

    /// Unnormalized mass of the bitstrings accepted by `pred`: probability for
    /// exact distributions, counts for sampled ones.
    pub fn mass(&self, mut pred: impl FnMut(usize) -> bool) -> f64 {
        match &self.kind {
            DistKind::Exact(p) => p
                .iter()
                .enumerate()
                .filter(|(i, _)| pred(*i))
                .map(|(_, p)| *p)
                .sum(),
            DistKind::Sampled { counts, .. } => counts
                .iter()
                .filter(|(i, _)| pred(**i))
                .map(|(_, c)| *c as f64)
                .sum(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match &self.kind {
            DistKind::Exact(p) => p.iter().sum(),
            DistKind::Sampled { shots, .. } => *shots as f64,
        }
    }

    /// Normalized probability of one basis state.
    pub fn probability(&self, index: usize) -> f64 {
        match &self.kind {
            DistKind::Exact(p) => p.get(index).copied().unwrap_or(0.0),
            DistKind::Sampled { counts, shots } => {
                counts.get(&index).copied().unwrap_or(0) as f64 / *shots as f64
            }
        }
    }

    /// Dense normalized probabilities.
    pub fn to_dense(&self) -> Vec<f64> {
        (0..1usize << self.n_qubits).map(|i| self.probability(i)).collect()
    }

    /// Largest absolute probability difference and the bitstring where it occurs.
    pub fn max_abs_diff(&self, other: &Distribution) -> Result<(f64, usize), EngineError> {
        if self.n_qubits != other.n_qubits {
            return Err(EngineError::Mismatch);
        }
        Ok((0..1usize << self.n_qubits)
            .map(|i| ((self.probability(i) - other.probability(i)).abs(), i))
            .fold((0.0, 0), |best, cur| if cur.0 > best.0 { cur } else { best }))
    }

    /// Sums out every qubit not in `qubits`. Bit `k` of the result index is
    /// `qubits[k]` of the input.
    pub fn marginal(&self, qubits: &[usize]) -> Result<Distribution, EngineError> {
        if qubits.is_empty() {
            return Err(EngineError::EmptySubset);
        }
        for (k, &q) in qubits.iter().enumerate() {
            if q >= self.n_qubits {
                return Err(EngineError::BadQubit {
                    qubit: q,
                    n_qubits: self.n_qubits,
                });
            }
            if qubits[..k].contains(&q) {
                return Err(EngineError::DuplicateQubit(q));
            }
        }
        let project = |i: usize| {
            qubits
                .iter()
                .enumerate()
                .fold(0usize, |acc, (k, &q)| acc | (((i >> q) & 1) << k))
        };
        let kind = match &self.kind {
            DistKind::Exact(p) => {
                let mut out = vec![0.0; 1 << qubits.len()];
                for (i, &pi) in p.iter().enumerate() {
                    out[project(i)] += pi;
                }
                DistKind::Exact(out)
            }
            DistKind::Sampled { counts, shots } => {
                let mut out = BTreeMap::new();
                for (&i, &c) in counts {
                    *out.entry(project(i)).or_insert(0) += c;
                }
                DistKind::Sampled {
                    counts: out,
                    shots: *shots,
                }
            }
        };
        Ok(Distribution {
            n_qubits: qubits.len(),
            kind,
        })
    }
}

/// Stochastic Pauli noise: after every gate, each touched qubit receives a
/// uniformly random X, Y or Z with probability `p_depol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub p_depol: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(p_depol: f64, seed: u64) -> Result<Self, EngineError> {
        if !(0.0..=1.0).contains(&p_depol) {
            return Err(EngineError::BadNoise(p_depol));
        }
        Ok(Self { p_depol, seed })
    }
}

/// Derives an independent seed for `(trial, slot)` from a base seed.
///
/// The base seed keys a ChaCha8 generator; `(trial << 8) | slot` selects one of
/// its 2^64 streams, and the first word of that stream is the derived seed.
pub fn derive_seed(base: u64, trial: u64, slot: u8) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream((trial << 8) | u64::from(slot));
    rng.next_u64()
}

pub fn run_exact(circ: &Circuit) -> Result<Distribution, EngineError> {
    let state = Statevector::run(circ)?;
    Ok(Distribution::exact(circ.n_qubits, state.probabilities()))
}

/// Draws `shots` full-register measurements.
///
/// Without noise (or with `p_depol == 0`) the exact distribution is computed
/// once and sampled. With noise every shot evolves its own trajectory, with
/// Pauli draws taken from a generator keyed by `noise.seed` and measurement
/// draws from the generator keyed by `seed`.
pub fn run_sampled(
    circ: &Circuit,
    shots: u64,
    seed: u64,
    noise: Option<NoiseSpec>,
) -> Result<Distribution, EngineError> {
    if shots == 0 {
        return Err(EngineError::ZeroShots);
    }
    circ.validate()?;
    if let Some(spec) = noise {
        NoiseSpec::new(spec.p_depol, spec.seed)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();

    match noise.filter(|n| n.p_depol > 0.0) {
        None => {
            let state = Statevector::run(circ)?;
            let sampler = WeightedIndex::new(state.probabilities()).expect("normalized state");
            for _ in 0..shots {
                *counts.entry(sampler.sample(&mut rng)).or_insert(0u64) += 1;
            }
        }
        Some(spec) => {
            let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed);
            for _ in 0..shots {
                let mut state = Statevector::zero(circ.n_qubits);
                for gate in &circ.gates {
                    state.apply(&gate.kind);
                    for q in gate.kind.qubits() {
                        if noise_rng.random_bool(spec.p_depol) {
                            match noise_rng.random_range(0..3u8) {
                                0 => state.x(q),
                                1 => state.y(q),
                                _ => state.z(q),
                            }
                        }
                    }
                }
                let sampler = WeightedIndex::new(state.probabilities()).expect("normalized state");
                *counts.entry(sampler.sample(&mut rng)).or_insert(0u64) += 1;
            }
        }
    }

    Ok(Distribution {
        n_qubits: circ.n_qubits,
        kind: DistKind::Sampled { counts, shots },
    })
}
