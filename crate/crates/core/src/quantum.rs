//! Target statistics from `N` spin-1/2 particles: pure encodings per sent
//! direction, a POVM with one element per guessed direction, and Born-rule
//! joint probabilities `p_Q(i, j) = p(i) ⟨ψ_i| E_j |ψ_i⟩`.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::directions::{Direction, DirectionSet};
use crate::error::{ensure, Error, Result};
use crate::info::{Distribution, JointDistribution};
use crate::rng::{derive_seed, stream_rng, tags};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const MAX_SPINS: u32 = 12;
const NORM_TOLERANCE: f64 = 1e-10;
const POVM_TOLERANCE: f64 = 1e-9;

fn dim_for(n_spins: u32) -> usize {
    1usize << n_spins
}

/// A normalized state vector of `n_spins` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n_spins: u32,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let dim = amplitudes.len();
        ensure!(
            dim >= 2 && dim.is_power_of_two(),
            "state dimension {dim} is not a power of two"
        );
        let n_spins = dim.trailing_zeros();
        ensure!(
            n_spins <= MAX_SPINS,
            "{n_spins} spins exceeds the limit of {MAX_SPINS}"
        );
        let norm2 = amplitudes.norm_squared();
        ensure!(
            (norm2 - 1.0).abs() <= NORM_TOLERANCE,
            "state norm² is {norm2}, expected 1"
        );
        Ok(PureState {
            n_spins,
            amplitudes,
        })
    }

    pub fn n_spins(&self) -> u32 {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// `⟨ψ| op |ψ⟩`.
    pub fn expectation(&self, op: &CMatrix) -> C64 {
        self.amplitudes.dotc(&(op * &self.amplitudes))
    }
}

/// Single-spin coherent state with Bloch vector `d`.
pub fn spin_state(d: &Direction) -> CVector {
    let theta = d.polar_angle();
    let phi = d.azimuth();
    let (s, c) = (theta / 2.0).sin_cos();
    CVector::from_vec(vec![
        C64::new(c, 0.0),
        C64::from_polar(s, phi),
    ])
}

/// `|d⟩^{⊗N}`.
pub fn product_state(d: &Direction, n_spins: u32) -> Result<PureState> {
    ensure!(
        (1..=MAX_SPINS).contains(&n_spins),
        "spin count must be in 1..={MAX_SPINS}, got {n_spins}"
    );
    let single = spin_state(d);
    let mut v = single.clone();
    for _ in 1..n_spins {
        v = v.kronecker(&single);
    }
    Ok(PureState {
        n_spins,
        amplitudes: v,
    })
}

/// A measurement: positive semidefinite elements summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<CMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        ensure!(!elements.is_empty(), "POVM has no elements");
        let dim = elements[0].nrows();
        ensure!(
            dim >= 2 && dim.is_power_of_two() && dim <= dim_for(MAX_SPINS),
            "POVM dimension {dim} is not a supported power of two"
        );
        let mut sum = CMatrix::zeros(dim, dim);
        for (j, e) in elements.iter().enumerate() {
            ensure!(
                e.nrows() == dim && e.ncols() == dim,
                "POVM element {j} is {}×{}, expected {dim}×{dim}",
                e.nrows(),
                e.ncols()
            );
            ensure!(
                e.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
                "POVM element {j} has non-finite entries"
            );
            let skew = (e - e.adjoint()).camax();
            ensure!(
                skew <= POVM_TOLERANCE,
                "POVM element {j} is not Hermitian (max |E − E†| = {skew:e})"
            );
            let min_eig = SymmetricEigen::new(e.clone())
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            ensure!(
                min_eig >= -POVM_TOLERANCE,
                "POVM element {j} has eigenvalue {min_eig:e} < 0"
            );
            sum += e;
        }
        let defect = (sum - CMatrix::identity(dim, dim)).camax();
        ensure!(
            defect <= POVM_TOLERANCE,
            "POVM elements sum to the identity only within {defect:e}"
        );
        Ok(Povm { elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }
}

/// Projectors onto the computational basis of `n_spins` qubits.
pub fn computational_basis_povm(n_spins: u32) -> Result<Povm> {
    ensure!(
        (1..=MAX_SPINS).contains(&n_spins),
        "spin count must be in 1..={MAX_SPINS}, got {n_spins}"
    );
    let dim = dim_for(n_spins);
    Ok(Povm {
        elements: (0..dim)
            .map(|k| {
                let mut e = CMatrix::zeros(dim, dim);
                e[(k, k)] = C64::new(1.0, 0.0);
                e
            })
            .collect(),
    })
}

/// Sender's directions with prior and encodings, receiver's guesses with a
/// POVM element per guess.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumChannelSpec {
    n_spins: u32,
    inputs: DirectionSet,
    prior: Distribution,
    guesses: DirectionSet,
    encodings: Vec<PureState>,
    povm: Povm,
}

impl QuantumChannelSpec {
    pub fn new(
        n_spins: u32,
        inputs: DirectionSet,
        prior: Distribution,
        guesses: DirectionSet,
        encodings: Vec<PureState>,
        povm: Povm,
    ) -> Result<Self> {
        ensure!(
            (1..=MAX_SPINS).contains(&n_spins),
            "spin count must be in 1..={MAX_SPINS}, got {n_spins}"
        );
        let dim = dim_for(n_spins);
        ensure!(
            prior.len() == inputs.len(),
            "prior has {} entries for {} input directions",
            prior.len(),
            inputs.len()
        );
        ensure!(
            encodings.len() == inputs.len(),
            "{} encodings for {} input directions",
            encodings.len(),
            inputs.len()
        );
        ensure!(
            povm.len() == guesses.len(),
            "{} POVM elements for {} guess directions",
            povm.len(),
            guesses.len()
        );
        for (i, e) in encodings.iter().enumerate() {
            ensure!(
                e.dim() == dim,
                "encoding {i} has dimension {}, expected {dim}",
                e.dim()
            );
        }
        ensure!(
            povm.dim() == dim,
            "POVM dimension {} does not match {n_spins} spins",
            povm.dim()
        );
        Ok(QuantumChannelSpec {
            n_spins,
            inputs,
            prior,
            guesses,
            encodings,
            povm,
        })
    }

    /// Each input direction encoded as `|n⟩^{⊗N}`.
    pub fn with_product_encodings(
        n_spins: u32,
        inputs: DirectionSet,
        prior: Distribution,
        guesses: DirectionSet,
        povm: Povm,
    ) -> Result<Self> {
        let encodings = inputs
            .iter()
            .map(|d| product_state(d, n_spins))
            .collect::<Result<Vec<_>>>()?;
        QuantumChannelSpec::new(n_spins, inputs, prior, guesses, encodings, povm)
    }

    pub fn n_spins(&self) -> u32 {
        self.n_spins
    }

    pub fn inputs(&self) -> &DirectionSet {
        &self.inputs
    }

    pub fn prior(&self) -> &Distribution {
        &self.prior
    }

    pub fn guesses(&self) -> &DirectionSet {
        &self.guesses
    }

    pub fn encodings(&self) -> &[PureState] {
        &self.encodings
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    /// Applies the global rotation `U^{⊗N}` to every encoding and direction,
    /// and conjugates every POVM element by it.
    pub fn rotated(&self, axis: &Direction, angle: f64) -> Result<Self> {
        let u = tensor_power(&spin_rotation(axis, angle), self.n_spins);
        let u_dag = u.adjoint();
        let rotate_set = |set: &DirectionSet| {
            DirectionSet::new(set.iter().map(|d| d.rotated_about(axis, angle)).collect())
        };
        let encodings = self
            .encodings
            .iter()
            .map(|s| PureState {
                n_spins: s.n_spins,
                amplitudes: &u * &s.amplitudes,
            })
            .collect();
        let povm = Povm {
            elements: self.povm.elements.iter().map(|e| &u * e * &u_dag).collect(),
        };
        Ok(QuantumChannelSpec {
            n_spins: self.n_spins,
            inputs: rotate_set(&self.inputs)?,
            prior: self.prior.clone(),
            guesses: rotate_set(&self.guesses)?,
            encodings,
            povm,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpecFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SpecFile::from(self)).expect("specs always serialize")
    }
}

/// `p_Q(i, j) = p(i) ⟨ψ_i| E_j |ψ_i⟩`.
///
/// Each conditional row is rescaled to sum to one, absorbing the POVM
/// completeness slack allowed by [`Povm::new`].
pub fn born_joint(spec: &QuantumChannelSpec) -> Result<JointDistribution> {
    let rows = spec.inputs.len();
    let cols = spec.guesses.len();
    let mut data = Vec::with_capacity(rows * cols);
    for (state, &p) in spec.encodings.iter().zip(spec.prior.probs()) {
        let conditional: Vec<f64> = spec
            .povm
            .elements
            .iter()
            .map(|e| state.expectation(e).re.max(0.0))
            .collect();
        let total: f64 = conditional.iter().sum();
        ensure!(
            (total - 1.0).abs() <= 1e-6,
            "Born probabilities for one input sum to {total}"
        );
        data.extend(conditional.iter().map(|&q| p * q / total));
    }
    JointDistribution::new(rows, cols, data)?.with_labels(spec.inputs.labels(), spec.guesses.labels())
}

/// `exp(−i angle/2 · axis·σ)`, rotating Bloch vectors by `angle` about `axis`.
pub fn spin_rotation(axis: &Direction, angle: f64) -> CMatrix {
    let (s, c) = (angle / 2.0).sin_cos();
    let (nx, ny, nz) = (axis.x(), axis.y(), axis.z());
    // c·I − i s (nx σx + ny σy + nz σz)
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(c, -s * nz),
            C64::new(-s * ny, -s * nx),
            C64::new(s * ny, -s * nx),
            C64::new(c, s * nz),
        ],
    )
}

pub fn tensor_power(m: &CMatrix, n: u32) -> CMatrix {
    let mut out = m.clone();
    for _ in 1..n {
        out = out.kronecker(m);
    }
    out
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Direction {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        if let Ok(d) = Direction::normalized(v[0], v[1], v[2]) {
            return d;
        }
    }
}

fn random_direction_set<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DirectionSet {
    loop {
        if let Ok(set) = DirectionSet::new((0..n).map(|_| random_direction(rng)).collect()) {
            return set;
        }
    }
}

/// Hermitian `S^{-1/2}` for positive definite `S`.
fn inverse_sqrt(s: CMatrix) -> CMatrix {
    let eig = SymmetricEigen::new(s);
    let v = &eig.eigenvectors;
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(l.powf(-0.5), 0.0)));
    v * d * v.adjoint()
}

/// Deterministic random spec for fuzzing: Haar-random encodings, random
/// prior, and a POVM `E_j = S^{-1/2} G_j G_j† S^{-1/2}` with `S = Σ G_j G_j†`.
pub fn random_channel_spec(
    n_spins: u32,
    sizes: (usize, usize),
    seed: u64,
) -> Result<QuantumChannelSpec> {
    ensure!(
        (1..=MAX_SPINS).contains(&n_spins),
        "spin count must be in 1..={MAX_SPINS}, got {n_spins}"
    );
    let (n_inputs, n_guesses) = sizes;
    ensure!(
        n_inputs >= 1 && n_guesses >= 1,
        "direction sets must be nonempty"
    );
    let dim = dim_for(n_spins);
    let mut rng = stream_rng(derive_seed(seed, tags::SPEC, n_spins as u64), 0);

    let inputs = random_direction_set(n_inputs, &mut rng);
    let guesses = random_direction_set(n_guesses, &mut rng);

    let weights: Vec<f64> = (0..n_inputs)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = weights.iter().sum();
    let prior = Distribution::new(weights.iter().map(|w| w / total).collect())?;

    let encodings = (0..n_inputs)
        .map(|_| {
            let v = CVector::from_fn(dim, |_, _| complex_gaussian(&mut rng));
            let norm = v.norm();
            PureState::new(v.unscale(norm))
        })
        .collect::<Result<Vec<_>>>()?;

    let raw: Vec<CMatrix> = (0..n_guesses)
        .map(|_| {
            let g = CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(&mut rng));
            &g * g.adjoint()
        })
        .collect();
    let sum = raw.iter().fold(CMatrix::zeros(dim, dim), |acc, a| acc + a);
    let w = inverse_sqrt(sum);
    let elements = raw
        .iter()
        .map(|a| {
            let e = &w * a * &w;
            (&e + e.adjoint()).scale(0.5)
        })
        .collect();
    let povm = Povm::new(elements)?;
    QuantumChannelSpec::new(n_spins, inputs, prior, guesses, encodings, povm)
}

/// One spin sent from one of two directions in the x–z plane and measured
/// along z, giving a binary symmetric channel with crossover `flip` under a
/// uniform prior. Guesses are `±z`.
pub fn binary_symmetric_spin_spec(flip: f64) -> Result<QuantumChannelSpec> {
    ensure!(
        (0.0..=0.5).contains(&flip),
        "flip probability must be in [0, 1/2], got {flip}"
    );
    // cos²(θ/2) = 1 − flip
    let theta = 2.0 * (1.0 - flip).sqrt().acos();
    let inputs = DirectionSet::new(vec![
        Direction::from_spherical(theta, 0.0),
        Direction::from_spherical(std::f64::consts::PI - theta, 0.0),
    ])?
    .with_labels(vec!["n+".into(), "n-".into()])?;
    let guesses = DirectionSet::new(vec![Direction::PLUS_Z, Direction::MINUS_Z])?
        .with_labels(vec!["+z".into(), "-z".into()])?;
    QuantumChannelSpec::with_product_encodings(
        1,
        inputs,
        Distribution::uniform(2)?,
        guesses,
        computational_basis_povm(1)?,
    )
}

type ComplexPair = [f64; 2];

/// JSON form of a [`QuantumChannelSpec`]; complex numbers are `[re, im]`.
/// Without `encodings` every input is encoded as `|n⟩^{⊗N}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub n_spins: u32,
    pub inputs: DirectionSet,
    pub prior: Distribution,
    pub guesses: DirectionSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encodings: Option<Vec<Vec<ComplexPair>>>,
    pub povm: Vec<Vec<Vec<ComplexPair>>>,
}

fn to_pair(z: &C64) -> ComplexPair {
    [z.re, z.im]
}

impl From<&QuantumChannelSpec> for SpecFile {
    fn from(spec: &QuantumChannelSpec) -> Self {
        SpecFile {
            n_spins: spec.n_spins,
            inputs: spec.inputs.clone(),
            prior: spec.prior.clone(),
            guesses: spec.guesses.clone(),
            encodings: Some(
                spec.encodings
                    .iter()
                    .map(|s| s.amplitudes.iter().map(to_pair).collect())
                    .collect(),
            ),
            povm: spec
                .povm
                .elements
                .iter()
                .map(|e| {
                    e.row_iter()
                        .map(|row| row.iter().map(to_pair).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

impl TryFrom<SpecFile> for QuantumChannelSpec {
    type Error = Error;

    fn try_from(file: SpecFile) -> Result<Self> {
        ensure!(
            (1..=MAX_SPINS).contains(&file.n_spins),
            "spin count must be in 1..={MAX_SPINS}, got {}",
            file.n_spins
        );
        let dim = dim_for(file.n_spins);
        let elements = file
            .povm
            .iter()
            .enumerate()
            .map(|(j, rows)| {
                ensure!(
                    rows.len() == dim && rows.iter().all(|r| r.len() == dim),
                    "POVM element {j} must be {dim}×{dim}"
                );
                Ok(CMatrix::from_fn(dim, dim, |r, c| {
                    let [re, im] = rows[r][c];
                    C64::new(re, im)
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        let povm = Povm::new(elements)?;
        match file.encodings {
            None => QuantumChannelSpec::with_product_encodings(
                file.n_spins,
                file.inputs,
                file.prior,
                file.guesses,
                povm,
            ),
            Some(encodings) => {
                let states = encodings
                    .iter()
                    .enumerate()
                    .map(|(i, amps)| {
                        ensure!(
                            amps.len() == dim,
                            "encoding {i} has {} amplitudes, expected {dim}",
                            amps.len()
                        );
                        PureState::new(CVector::from_iterator(
                            dim,
                            amps.iter().map(|&[re, im]| C64::new(re, im)),
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                QuantumChannelSpec::new(
                    file.n_spins,
                    file.inputs,
                    file.prior,
                    file.guesses,
                    states,
                    povm,
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::mutual_information;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    fn sigma_z_on(k: u32, n: u32) -> CMatrix {
        let id = CMatrix::identity(2, 2);
        let mut z = CMatrix::zeros(2, 2);
        z[(0, 0)] = C64::new(1.0, 0.0);
        z[(1, 1)] = C64::new(-1.0, 0.0);
        let mut out = if k == 0 { z.clone() } else { id.clone() };
        for s in 1..n {
            out = out.kronecker(if s == k { &z } else { &id });
        }
        out
    }

    #[test]
    fn product_state_cases() {
        let up = product_state(&Direction::PLUS_Z, 2).unwrap();
        let expected = [1.0, 0.0, 0.0, 0.0];
        for (a, e) in up.amplitudes().iter().zip(expected) {
            assert!(close(*a, C64::new(e, 0.0)));
        }
        let x = product_state(&Direction::PLUS_X, 1).unwrap();
        assert!(close(x.amplitudes()[0], C64::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(x.amplitudes()[1], C64::new(FRAC_1_SQRT_2, 0.0)));
        assert!(product_state(&Direction::PLUS_X, 0).is_err());
        assert!(product_state(&Direction::PLUS_X, 13).is_err());
    }

    #[test]
    fn product_state_sigma_z_expectations() {
        let d = Direction::normalized(0.3, -0.5, 0.7).unwrap();
        let state = product_state(&d, 3).unwrap();
        for k in 0..3 {
            let e = state.expectation(&sigma_z_on(k, 3));
            assert!((e.re - d.z()).abs() < 1e-12 && e.im.abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_matches_bloch_rotation() {
        let axis = Direction::normalized(1.0, 2.0, -0.5).unwrap();
        let d = Direction::normalized(-0.2, 0.4, 0.9).unwrap();
        let u = spin_rotation(&axis, 1.3);
        let rotated = &u * spin_state(&d);
        let direct = spin_state(&d.rotated_about(&axis, 1.3));
        // equal up to a global phase
        assert!((rotated.dotc(&direct).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_channel_from_z_basis() {
        let spec = QuantumChannelSpec::with_product_encodings(
            1,
            DirectionSet::new(vec![Direction::PLUS_Z, Direction::MINUS_Z]).unwrap(),
            Distribution::uniform(2).unwrap(),
            DirectionSet::new(vec![Direction::PLUS_Z, Direction::MINUS_Z]).unwrap(),
            computational_basis_povm(1).unwrap(),
        )
        .unwrap();
        let j = born_joint(&spec).unwrap();
        assert!((j.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((j.get(1, 1) - 0.5).abs() < 1e-15);
        assert!(j.get(0, 1).abs() < 1e-15);
        assert!((mutual_information(&j) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tilted_input_probability() {
        let spec = QuantumChannelSpec::with_product_encodings(
            1,
            DirectionSet::new(vec![Direction::from_spherical(PI / 3.0, 0.7)]).unwrap(),
            Distribution::uniform(1).unwrap(),
            DirectionSet::new(vec![Direction::PLUS_Z, Direction::MINUS_Z]).unwrap(),
            computational_basis_povm(1).unwrap(),
        )
        .unwrap();
        let j = born_joint(&spec).unwrap();
        assert!((j.get(0, 0) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn binary_symmetric_spin_spec_gives_bsc() {
        let j = born_joint(&binary_symmetric_spin_spec(0.45).unwrap()).unwrap();
        let expected = JointDistribution::binary_symmetric(0.45).unwrap();
        assert!(j.max_abs_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn povm_validation() {
        let mut bad = computational_basis_povm(1).unwrap().elements().to_vec();
        bad[0][(0, 0)] = C64::new(1.5, 0.0);
        assert!(Povm::new(bad.clone()).is_err());
        bad[0][(0, 0)] = C64::new(1.0, 0.0);
        bad[0][(0, 1)] = C64::new(0.0, 0.3);
        assert!(Povm::new(bad).is_err());
        // sums to identity but one element is not PSD
        let e0 = CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(1.2, 0.0), C64::new(0.5, 0.0)]));
        let e1 = CMatrix::identity(2, 2) - &e0;
        assert!(Povm::new(vec![e0, e1]).is_err());
        assert!(Povm::new(vec![]).is_err());
    }

    #[test]
    fn spec_dimension_checks() {
        let set = DirectionSet::new(vec![Direction::PLUS_Z]).unwrap();
        let two = DirectionSet::new(vec![Direction::PLUS_Z, Direction::MINUS_Z]).unwrap();
        let r = QuantumChannelSpec::with_product_encodings(
            2,
            set.clone(),
            Distribution::uniform(1).unwrap(),
            two.clone(),
            computational_basis_povm(1).unwrap(),
        );
        assert!(r.is_err());
        let r = QuantumChannelSpec::with_product_encodings(
            1,
            set,
            Distribution::uniform(2).unwrap(),
            two,
            computational_basis_povm(1).unwrap(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn random_spec_is_deterministic_and_valid() {
        let a = random_channel_spec(3, (4, 5), 17).unwrap();
        let b = random_channel_spec(3, (4, 5), 17).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_channel_spec(3, (4, 5), 18).unwrap());
        Povm::new(a.povm().elements().to_vec()).unwrap();
        let j = born_joint(&a).unwrap();
        assert!((j.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = random_channel_spec(2, (3, 2), 5).unwrap();
        let back = QuantumChannelSpec::from_json(&spec.to_json()).unwrap();
        let (j1, j2) = (born_joint(&spec).unwrap(), born_joint(&back).unwrap());
        assert!(j1.max_abs_diff(&j2).unwrap() < 1e-12);
    }

    #[test]
    fn spec_json_defaults_to_product_encodings() {
        let text = r#"{
            "n_spins": 1,
            "inputs": [[0,0,1],[0,0,-1]],
            "prior": [0.5, 0.5],
            "guesses": [[0,0,1],[0,0,-1]],
            "povm": [[[[1,0],[0,0]],[[0,0],[0,0]]], [[[0,0],[0,0]],[[0,0],[1,0]]]]
        }"#;
        let spec = QuantumChannelSpec::from_json(text).unwrap();
        let j = born_joint(&spec).unwrap();
        assert!((mutual_information(&j) - 1.0).abs() < 1e-12);
        assert!(QuantumChannelSpec::from_json(&text.replace("\"n_spins\": 1", "\"n_spins\": 2")).is_err());
    }
}
