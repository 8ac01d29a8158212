//! Point configurations on `[0,T]×[0,M]` and the driven counting process.
//!
//! The intensity `λ_t = e^{DF(t, X_t)}` depends only on atoms strictly before
//! `t`, so a single forward sweep over the time-ordered atoms resolves the
//! fixed point exactly.

mod malliavin;
mod montecarlo;

pub use malliavin::{
    check_configuration, check_contraction, malliavin_derivative, probe_set, ContractionReport, ContractionViolation,
    MalliavinProbe, ProofCase, LAMBDA_DERIVATIVE_TOL,
};
pub use montecarlo::{
    marginal_test, marginal_tests, martingale_stats, sample_configuration, simulate_paths, transport_sample,
    MarginalReport, MartingaleReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::UlcMeasure;
use crate::semigroup::SemigroupEvaluator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub t: f64,
    pub z: f64,
}

impl Atom {
    pub fn new(t: f64, z: f64) -> Self {
        Atom { t, z }
    }
}

/// Finite configuration `ω = Σᵢ δ_{(tᵢ, zᵢ)}` with strictly increasing times.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointConfiguration {
    atoms: Vec<Atom>,
}

impl PointConfiguration {
    pub fn empty() -> Self {
        PointConfiguration::default()
    }

    /// Accepts atoms already in strictly increasing time order.
    pub fn from_sorted(atoms: Vec<Atom>) -> Result<Self> {
        if let Some(index) = atoms.windows(2).position(|w| !(w[1].t > w[0].t)) {
            return Err(Error::UnsortedAtoms { index: index + 1 });
        }
        Ok(PointConfiguration { atoms })
    }

    /// Sorts by time; an atom tying an earlier-inserted one is pushed up by
    /// one ulp at a time until its time is unique. Returns the number of ties.
    pub fn from_atoms(atoms: Vec<Atom>) -> (Self, usize) {
        let mut config = PointConfiguration::empty();
        let mut ties = 0;
        for atom in atoms {
            if config.insert(atom).1 {
                ties += 1;
            }
        }
        (config, ties)
    }

    /// Inserts one atom in time order; returns its position and whether a
    /// tie was broken.
    pub fn insert(&mut self, mut atom: Atom) -> (usize, bool) {
        let mut tied = false;
        loop {
            let pos = self.atoms.partition_point(|a| a.t < atom.t);
            if self.atoms.get(pos).is_some_and(|a| a.t == atom.t) {
                atom.t = atom.t.next_up();
                tied = true;
                continue;
            }
            self.atoms.insert(pos, atom);
            return (pos, tied);
        }
    }

    /// `ω + δ_extra`, the position of the extra atom, and the tie flag.
    pub fn with_extra(&self, extra: Atom) -> (Self, usize, bool) {
        let mut augmented = self.clone();
        let (index, tied) = augmented.insert(extra);
        (augmented, index, tied)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// A ULC target together with its semigroup evaluator and rectangle.
#[derive(Debug)]
pub struct TransportMap {
    target: UlcMeasure,
    eval: SemigroupEvaluator,
}

impl TransportMap {
    pub fn new(target: UlcMeasure) -> Self {
        let eval = SemigroupEvaluator::for_target(&target);
        TransportMap { target, eval }
    }

    pub fn target(&self) -> &UlcMeasure {
        &self.target
    }

    pub fn evaluator(&self) -> &SemigroupEvaluator {
        &self.eval
    }

    pub fn horizon(&self) -> f64 {
        self.target.horizon()
    }

    /// `M = f(1)/f(0)`.
    pub fn height(&self) -> f64 {
        self.target.height()
    }

    /// `λ(t, k) = P_{T−t}f(k+1) / P_{T−t}f(k)`.
    pub fn intensity(&self, t: f64, k: usize) -> f64 {
        self.eval.intensity(t, k)
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        (0.0..=self.horizon()).contains(&atom.t) && (0.0..=self.height()).contains(&atom.z)
    }

    /// Sweeps the atoms in time order. Atom `i` is accepted iff
    /// `zᵢ ≤ λ(tᵢ, X_{tᵢ})` with `X_{tᵢ}` counting only earlier acceptances;
    /// a zero intensity accepts nothing.
    pub fn drive(&self, config: &PointConfiguration) -> Result<TransportPath> {
        let (horizon, height) = (self.horizon(), self.height());
        let atoms = config.atoms();
        let mut accepted = Vec::with_capacity(atoms.len());
        let mut lambdas = Vec::with_capacity(atoms.len());
        let mut jump_times = Vec::new();
        let mut x = 0usize;
        for atom in atoms {
            if !self.contains(atom) {
                return Err(Error::AtomOutOfRange { t: atom.t, z: atom.z, horizon, height });
            }
            let lambda = self.eval.intensity(atom.t, x);
            let hit = lambda > 0.0 && atom.z <= lambda;
            if hit {
                x += 1;
                jump_times.push(atom.t);
            }
            accepted.push(hit);
            lambdas.push(lambda);
        }
        Ok(TransportPath { horizon, atoms: atoms.to_vec(), accepted, lambda_at_atoms: lambdas, jump_times })
    }
}

/// The driven trajectory of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPath {
    horizon: f64,
    atoms: Vec<Atom>,
    accepted: Vec<bool>,
    lambda_at_atoms: Vec<f64>,
    jump_times: Vec<f64>,
}

impl TransportPath {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn accepted(&self) -> &[bool] {
        &self.accepted
    }

    /// `λ_{tᵢ}` seen by each atom (evaluated at the left limit `X_{tᵢ}`).
    pub fn lambda_at_atoms(&self) -> &[f64] {
        &self.lambda_at_atoms
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    /// Left-continuous `X_s = #{jumps at times < s}`.
    pub fn x_at(&self, s: f64) -> usize {
        self.jump_times.partition_point(|&j| j < s)
    }

    /// `λ_s = λ(s, X_s)`.
    pub fn lambda_at(&self, map: &TransportMap, s: f64) -> f64 {
        map.intensity(s, self.x_at(s))
    }

    /// `X_T`, the transport map's value.
    pub fn final_value(&self) -> usize {
        self.x_at(self.horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::LogConcaveFn;
    use approx::assert_abs_diff_eq;

    fn bernoulli_map() -> TransportMap {
        TransportMap::new(UlcMeasure::bernoulli(0.5, 1.0).unwrap())
    }

    #[test]
    fn empty_configuration_stays_at_zero() {
        let map = bernoulli_map();
        let path = map.drive(&PointConfiguration::empty()).unwrap();
        assert_eq!(path.final_value(), 0);
    }

    #[test]
    fn constant_density_accepts_every_atom() {
        let map = TransportMap::new(UlcMeasure::from_density(&LogConcaveFn::constant(60), 1.0).unwrap());
        assert_abs_diff_eq!(map.height(), 1.0, epsilon = 1e-15);
        let (config, _) = PointConfiguration::from_atoms(vec![
            Atom::new(0.1, 0.99),
            Atom::new(0.4, 0.2),
            Atom::new(0.5, 0.999_999),
            Atom::new(0.9, 0.0),
        ]);
        let path = map.drive(&config).unwrap();
        assert_eq!(path.final_value(), 4);
        assert!(path.accepted().iter().all(|&a| a));
    }

    #[test]
    fn bernoulli_hand_trace() {
        let map = bernoulli_map();
        let config = PointConfiguration::from_sorted(vec![Atom::new(0.2, 0.3), Atom::new(0.8, 0.1)]).unwrap();
        let path = map.drive(&config).unwrap();
        assert_abs_diff_eq!(path.lambda_at_atoms()[0], 1.0 / 1.8, epsilon = 1e-9);
        assert_eq!(path.accepted(), &[true, false]);
        assert_eq!(path.lambda_at_atoms()[1], 0.0);
        assert_eq!(path.final_value(), 1);
        assert_eq!(path.x_at(0.2), 0);
        assert_eq!(path.x_at(0.2000001), 1);
    }

    #[test]
    fn drive_rejects_bad_input() {
        let map = bernoulli_map();
        let config = PointConfiguration::from_sorted(vec![Atom::new(0.2, 1.5)]).unwrap();
        assert!(matches!(map.drive(&config), Err(Error::AtomOutOfRange { .. })));
        assert!(matches!(
            PointConfiguration::from_sorted(vec![Atom::new(0.5, 0.1), Atom::new(0.2, 0.1)]),
            Err(Error::UnsortedAtoms { index: 1 })
        ));
    }

    #[test]
    fn ties_are_broken_by_one_ulp() {
        let (config, ties) = PointConfiguration::from_atoms(vec![Atom::new(0.5, 0.1), Atom::new(0.5, 0.2)]);
        assert_eq!(ties, 1);
        assert_eq!(config.atoms()[0], Atom::new(0.5, 0.1));
        assert_eq!(config.atoms()[1].t, 0.5f64.next_up());
        let (aug, index, tied) = config.with_extra(Atom::new(0.5, 0.3));
        assert!(tied);
        assert_eq!(aug.len(), 3);
        assert_eq!(aug.atoms()[index].z, 0.3);
        assert!(aug.atoms()[index].t > 0.5f64.next_up());
    }

    #[test]
    fn drive_is_deterministic() {
        let map = TransportMap::new(UlcMeasure::binomial(3, 0.5, 1.0).unwrap());
        let (config, _) = PointConfiguration::from_atoms(
            (0..12).map(|i| Atom::new(0.07 * i as f64 + 0.01, (i * 7 % 11) as f64 * 0.27)).collect(),
        );
        let a = map.drive(&config).unwrap();
        let b = map.drive(&config).unwrap();
        assert_eq!(a, b);
        for w in a.jump_times().windows(2) {
            assert!(w[1] > w[0]);
        }
        for &l in a.lambda_at_atoms() {
            assert!(l <= map.height() * (1.0 + 1e-12));
        }
    }
}
