//! Bounded-degree local Hamiltonians on qubit chains.
//!
//! Tensor order is big-endian: qubit 0 is the most significant factor, so a
//! basis index `b` of an `n`-qubit register has qubit `q` in bit `n - 1 - q`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::{self, random, DenseMatrix, StateVector, ONE, ZERO};

/// Default clustering tolerance for the ground eigenvalue.
pub const GROUND_TOL: f64 = 1e-8;

/// A dense operator together with the ordered qubits it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    pub op: DenseMatrix,
    pub sites: Vec<usize>,
}

/// Terms of a local Hamiltonian are plain local operators.
pub type LocalTerm = LocalOperator;

impl LocalOperator {
    pub fn new(op: DenseMatrix, sites: Vec<usize>) -> Result<Self> {
        let dim = 1usize << sites.len();
        if op.nrows() != dim || op.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "operator of shape {:?} on {} sites",
                op.shape(),
                sites.len()
            )));
        }
        let mut sorted = sites.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != sites.len() {
            return Err(Error::BadParams(format!("repeated site in {sites:?}")));
        }
        Ok(Self { op, sites })
    }

    pub fn locality(&self) -> usize {
        self.sites.len()
    }

    pub fn overlaps(&self, other: &LocalOperator) -> bool {
        self.sites.iter().any(|s| other.sites.contains(s))
    }

    pub fn embed(&self, n: usize) -> Result<DenseMatrix> {
        embed_term(self, n)
    }
}

/// Embeds `t` into the full `2^n` space, acting as identity off its support.
pub fn embed_term(t: &LocalTerm, n: usize) -> Result<DenseMatrix> {
    if t.sites.iter().any(|&s| s >= n) {
        return Err(Error::SupportOutOfRange { support: t.sites.clone(), n });
    }
    let k = t.sites.len();
    let dim = 1usize << n;
    let sub = 1usize << k;
    let masks: Vec<usize> = t.sites.iter().map(|&s| 1usize << (n - 1 - s)).collect();
    let support_mask: usize = masks.iter().sum();
    let sub_index = |full: usize| -> usize {
        masks
            .iter()
            .enumerate()
            .filter(|(_, &m)| full & m != 0)
            .map(|(j, _)| 1usize << (k - 1 - j))
            .sum()
    };
    let scatter = |local: usize| -> usize {
        masks
            .iter()
            .enumerate()
            .filter(|(j, _)| local & (1usize << (k - 1 - j)) != 0)
            .map(|(_, &m)| m)
            .sum()
    };
    let scattered: Vec<usize> = (0..sub).map(scatter).collect();
    let mut out = DenseMatrix::zeros(dim, dim);
    for r in 0..dim {
        let rs = sub_index(r);
        let rest = r & !support_mask;
        for (cs, &bits) in scattered.iter().enumerate() {
            out[(r, rest | bits)] = t.op[(rs, cs)];
        }
    }
    Ok(out)
}

/// Restricts an operator of the form `A_S ⊗ I` to the sites `S`, returning
/// `A_S` together with the residual `‖embed(A_S) − A‖_F`.
pub fn restrict(full: &DenseMatrix, sites: &[usize], n: usize) -> Result<(LocalOperator, f64)> {
    let mut sorted = sites.to_vec();
    sorted.sort_unstable();
    let dims = vec![2usize; n];
    let traced = 1usize << (n - sorted.len());
    // Tr_rest of A_S ⊗ I is 2^{n-|S|} A_S.
    let reduced = numerics::partial_trace(full, &sorted, &dims)? / numerics::real(traced as f64);
    let local = LocalOperator::new(reduced, sorted)?;
    let residual = numerics::frobenius(&(local.embed(n)? - full));
    Ok((local, residual))
}

#[derive(Debug, Clone)]
pub struct LocalHamiltonian {
    pub n: usize,
    pub terms: Vec<LocalTerm>,
    /// Support-overlap degree.
    pub degree: usize,
    /// Largest support size.
    pub locality: usize,
}

impl LocalHamiltonian {
    pub fn new(n: usize, terms: Vec<LocalTerm>) -> Result<Self> {
        for t in &terms {
            if t.sites.iter().any(|&s| s >= n) {
                return Err(Error::SupportOutOfRange { support: t.sites.clone(), n });
            }
        }
        let degree = overlap_degree(&terms);
        let locality = terms.iter().map(LocalOperator::locality).max().unwrap_or(0);
        Ok(Self { n, terms, degree, locality })
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn embedded_terms(&self) -> Result<Vec<DenseMatrix>> {
        self.terms.iter().map(|t| t.embed(self.n)).collect()
    }

    /// Largest number of terms acting on a single qubit.
    pub fn site_degree(&self) -> usize {
        (0..self.n)
            .map(|q| self.terms.iter().filter(|t| t.sites.contains(&q)).count())
            .max()
            .unwrap_or(0)
    }

    /// Whether every pair of terms commutes to `tol` (spectral norm).
    pub fn is_commuting(&self, tol: f64) -> Result<bool> {
        let emb = self.embedded_terms()?;
        for i in 0..emb.len() {
            for j in (i + 1)..emb.len() {
                if !self.terms[i].overlaps(&self.terms[j]) {
                    continue;
                }
                if numerics::op_norm(&(&emb[i] * &emb[j] - &emb[j] * &emb[i])) > tol {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn overlap_degree(terms: &[LocalTerm]) -> usize {
    (0..terms.len())
        .map(|m| {
            (0..terms.len())
                .filter(|&o| o != m && terms[m].overlaps(&terms[o]))
                .count()
        })
        .max()
        .unwrap_or(0)
}

pub fn assemble(h: &LocalHamiltonian) -> Result<DenseMatrix> {
    let mut out = DenseMatrix::zeros(h.dim(), h.dim());
    for t in &h.terms {
        out += t.embed(h.n)?;
    }
    Ok(out)
}

/// Maximum over terms of the number of other terms with overlapping support.
pub fn interaction_degree(h: &LocalHamiltonian) -> usize {
    overlap_degree(&h.terms)
}

/// Maximum over terms of the number of other terms that fail to commute with
/// it (spectral norm of the commutator above `tol`).
pub fn commutator_degree(h: &LocalHamiltonian, tol: f64) -> Result<usize> {
    let emb = h.embedded_terms()?;
    let mut best = 0;
    for i in 0..emb.len() {
        let count = (0..emb.len())
            .filter(|&j| {
                j != i
                    && h.terms[i].overlaps(&h.terms[j])
                    && numerics::op_norm(&(&emb[i] * &emb[j] - &emb[j] * &emb[i])) > tol
            })
            .count();
        best = best.max(count);
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct GroundSpaceInfo {
    pub projector: DenseMatrix,
    pub dimension: usize,
    pub ground_energy: f64,
    /// Distance from the ground cluster to the next eigenvalue; zero when the
    /// whole spectrum is one cluster.
    pub gap: f64,
    /// max_m ‖P_H H_m‖.
    pub frustration_residual: f64,
    /// Set when `gap < tol`.
    pub degenerate_gap: bool,
}

impl GroundSpaceInfo {
    pub fn is_frustration_free(&self, tol: f64) -> bool {
        self.frustration_residual <= tol
    }
}

pub fn ground_space(h: &LocalHamiltonian, tol: f64) -> Result<GroundSpaceInfo> {
    let full = assemble(h)?;
    let eig = numerics::eigh(&full)?;
    let e0 = eig.eigenvalues[0];
    let dimension = eig.eigenvalues.iter().take_while(|&&x| x - e0 <= tol).count();
    let gap = eig.eigenvalues.get(dimension).map(|&x| x - e0).unwrap_or(0.0);
    let projector = eig.projector(|x| x - e0 <= tol);
    let mut frustration_residual: f64 = 0.0;
    for t in &h.terms {
        let hm = t.embed(h.n)?;
        frustration_residual = frustration_residual.max(numerics::op_norm(&(&projector * hm)));
    }
    let degenerate_gap = gap < tol;
    if degenerate_gap {
        log::warn!("ground space has degenerate gap {gap:.3e}");
    }
    Ok(GroundSpaceInfo { projector, dimension, ground_energy: e0, gap, frustration_residual, degenerate_gap })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    ZzChain,
    FieldChain,
    RandomFfProjectors,
    CommutingProjectors,
}

impl InstanceKind {
    pub const ALL: [InstanceKind; 4] = [
        InstanceKind::ZzChain,
        InstanceKind::FieldChain,
        InstanceKind::RandomFfProjectors,
        InstanceKind::CommutingProjectors,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InstanceKind::ZzChain => "zz_chain",
            InstanceKind::FieldChain => "field_chain",
            InstanceKind::RandomFfProjectors => "random_ff_projectors",
            InstanceKind::CommutingProjectors => "commuting_projectors",
        }
    }

    /// Every kind in the zoo is frustration-free by construction.
    pub fn is_frustration_free(self) -> bool {
        true
    }

    pub fn is_commuting(self) -> bool {
        !matches!(self, InstanceKind::RandomFfProjectors)
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InstanceKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

pub type InstanceParams = BTreeMap<String, f64>;

/// Largest chain length the instance zoo accepts.
pub const MAX_QUBITS: usize = 12;

/// Builds an instance from the zoo. The only parameter is `n`.
pub fn make_instance(kind: &str, params: &InstanceParams, seed: u64) -> Result<LocalHamiltonian> {
    let kind: InstanceKind = kind.parse()?;
    if let Some(key) = params.keys().find(|k| k.as_str() != "n") {
        return Err(Error::BadParams(format!("unknown parameter `{key}` for {kind}")));
    }
    let n = *params.get("n").ok_or_else(|| Error::BadParams("missing `n`".into()))?;
    if n.fract() != 0.0 || n < 1.0 || n > MAX_QUBITS as f64 {
        return Err(Error::BadParams(format!("n must be an integer in [1, {MAX_QUBITS}], got {n}")));
    }
    build_instance(kind, n as usize, seed)
}

pub fn build_instance(kind: InstanceKind, n: usize, seed: u64) -> Result<LocalHamiltonian> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::BadParams(format!("n must lie in [1, {MAX_QUBITS}], got {n}")));
    }
    let pair_kind = !matches!(kind, InstanceKind::FieldChain);
    if pair_kind && n < 2 {
        return Err(Error::BadParams(format!("{kind} needs at least two qubits")));
    }
    let mut rng = random::rng(seed);
    let terms = match kind {
        InstanceKind::ZzChain => {
            let zz = numerics::kron(&numerics::paulis::z(), &numerics::paulis::z());
            let t = (numerics::identity(4) - zz).scale(0.5);
            (0..n - 1).map(|i| LocalOperator::new(t.clone(), vec![i, i + 1])).collect::<Result<Vec<_>>>()?
        }
        InstanceKind::FieldChain => {
            let t = (numerics::identity(2) - numerics::paulis::z()).scale(0.5);
            (0..n).map(|i| LocalOperator::new(t.clone(), vec![i])).collect::<Result<Vec<_>>>()?
        }
        InstanceKind::RandomFfProjectors => (0..n - 1)
            .map(|i| {
                let mut phi = StateVector::from_fn(4, |_, _| random::gaussian(&mut rng));
                phi[0] = ZERO;
                let norm = phi.norm();
                phi /= numerics::real(norm);
                LocalOperator::new(numerics::outer(&phi, &phi), vec![i, i + 1])
            })
            .collect::<Result<Vec<_>>>()?,
        InstanceKind::CommutingProjectors => (0..n - 1)
            .map(|i| {
                use rand::Rng;
                // Nonempty subset of {01, 10, 11}; |00> is never penalised.
                let mask: u32 = rng.random_range(1..8);
                let mut d = DenseMatrix::zeros(4, 4);
                for b in 0..3 {
                    if mask & (1 << b) != 0 {
                        d[(b + 1, b + 1)] = ONE;
                    }
                }
                LocalOperator::new(d, vec![i, i + 1])
            })
            .collect::<Result<Vec<_>>>()?,
    };
    LocalHamiltonian::new(n, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::paulis::{id, x, z};
    use approx::assert_abs_diff_eq;

    fn params(n: usize) -> InstanceParams {
        BTreeMap::from([("n".to_string(), n as f64)])
    }

    #[test]
    fn embed_single_sites() {
        let t0 = LocalOperator::new(z(), vec![0]).unwrap();
        assert_eq!(t0.embed(2).unwrap(), numerics::kron(&z(), &id()));
        let t1 = LocalOperator::new(z(), vec![1]).unwrap();
        assert_eq!(t1.embed(2).unwrap(), numerics::kron(&id(), &z()));
    }

    #[test]
    fn embed_non_adjacent_pair() {
        let zz = numerics::kron(&z(), &z());
        let t = LocalOperator::new(zz, vec![0, 2]).unwrap();
        let expect = numerics::kron(&numerics::kron(&z(), &id()), &z());
        assert_eq!(t.embed(3).unwrap(), expect);
    }

    #[test]
    fn embed_respects_site_order() {
        // X on site 2, Z on site 0, given in the order [2, 0].
        let xz = numerics::kron(&x(), &z());
        let t = LocalOperator::new(xz, vec![2, 0]).unwrap();
        let expect = numerics::kron(&numerics::kron(&z(), &id()), &x());
        assert_eq!(t.embed(3).unwrap(), expect);
    }

    #[test]
    fn embed_out_of_range() {
        let t = LocalOperator::new(z(), vec![3]).unwrap();
        assert!(matches!(t.embed(2), Err(Error::SupportOutOfRange { .. })));
    }

    #[test]
    fn assemble_examples() {
        let h = LocalHamiltonian::new(1, vec![LocalOperator::new(z(), vec![0]).unwrap()]).unwrap();
        assert_eq!(assemble(&h).unwrap(), z());

        let zz = build_instance(InstanceKind::ZzChain, 2, 0).unwrap();
        let m = assemble(&zz).unwrap();
        for (i, want) in [0.0, 1.0, 1.0, 0.0].iter().enumerate() {
            assert_abs_diff_eq!(m[(i, i)].re, *want, epsilon = 1e-15);
        }
        assert!(numerics::frobenius(&(m.clone() - DenseMatrix::from_diagonal(&m.diagonal()))) < 1e-15);

        let empty = LocalHamiltonian::new(2, vec![]).unwrap();
        assert_eq!(assemble(&empty).unwrap(), DenseMatrix::zeros(4, 4));
    }

    #[test]
    fn degree_examples() {
        let single = LocalHamiltonian::new(1, vec![LocalOperator::new(z(), vec![0]).unwrap()]).unwrap();
        assert_eq!(interaction_degree(&single), 0);
        let zz = build_instance(InstanceKind::ZzChain, 4, 0).unwrap();
        assert_eq!(zz.num_terms(), 3);
        assert_eq!(interaction_degree(&zz), 2);
        let field = build_instance(InstanceKind::FieldChain, 4, 0).unwrap();
        assert_eq!(interaction_degree(&field), 0);
    }

    #[test]
    fn commutator_degree_of_commuting_chain_is_zero() {
        let zz = build_instance(InstanceKind::ZzChain, 4, 0).unwrap();
        assert_eq!(commutator_degree(&zz, 1e-12).unwrap(), 0);
        let ff = build_instance(InstanceKind::RandomFfProjectors, 4, 7).unwrap();
        assert_eq!(commutator_degree(&ff, 1e-12).unwrap(), 2);
    }

    #[test]
    fn ground_space_diagonal() {
        let d = DenseMatrix::from_diagonal(&StateVector::from_vec(vec![ZERO, ONE]));
        let h = LocalHamiltonian::new(1, vec![LocalOperator::new(d, vec![0]).unwrap()]).unwrap();
        let gs = ground_space(&h, GROUND_TOL).unwrap();
        assert_eq!(gs.dimension, 1);
        assert_abs_diff_eq!(gs.gap, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(gs.projector[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(gs.projector[(1, 1)].re, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn ground_space_zz_chain() {
        let h = build_instance(InstanceKind::ZzChain, 3, 0).unwrap();
        let gs = ground_space(&h, GROUND_TOL).unwrap();
        assert_eq!(gs.dimension, 2);
        assert_abs_diff_eq!(gs.gap, 1.0, epsilon = 1e-12);
        assert!(gs.frustration_residual <= 1e-12);
        assert_abs_diff_eq!(gs.projector[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gs.projector[(7, 7)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ground_space_pauli_x() {
        let h = LocalHamiltonian::new(1, vec![LocalOperator::new(x(), vec![0]).unwrap()]).unwrap();
        let gs = ground_space(&h, GROUND_TOL).unwrap();
        assert_eq!(gs.dimension, 1);
        assert_abs_diff_eq!(gs.gap, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gs.projector[(0, 1)].re, -0.5, epsilon = 1e-12);
        // P_- X = -P_-, so the residual is 1: a single frustrated term.
        assert_abs_diff_eq!(gs.frustration_residual, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn instance_examples() {
        let zz = make_instance("zz_chain", &params(4), 0).unwrap();
        assert_eq!(zz.num_terms(), 3);
        assert_eq!(zz.degree, 2);
        assert!(ground_space(&zz, GROUND_TOL).unwrap().frustration_residual <= 1e-12);

        let field = make_instance("field_chain", &params(2), 0).unwrap();
        let gs = ground_space(&field, GROUND_TOL).unwrap();
        assert_eq!(gs.dimension, 1);
        assert_abs_diff_eq!(gs.projector[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(gs.gap, 1.0, epsilon = 1e-14);

        let ff = make_instance("random_ff_projectors", &params(4), 7).unwrap();
        let gs = ground_space(&ff, GROUND_TOL).unwrap();
        assert!(gs.frustration_residual <= 1e-12);
        assert_abs_diff_eq!(gs.projector[(0, 0)].re, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn instance_errors() {
        assert!(matches!(make_instance("ising", &params(3), 0), Err(Error::UnknownKind(_))));
        assert!(matches!(make_instance("zz_chain", &InstanceParams::new(), 0), Err(Error::BadParams(_))));
        assert!(matches!(make_instance("zz_chain", &params(1), 0), Err(Error::BadParams(_))));
        let mut p = params(3);
        p.insert("J".into(), 1.0);
        assert!(matches!(make_instance("zz_chain", &p, 0), Err(Error::BadParams(_))));
    }

    #[test]
    fn instances_are_seed_deterministic() {
        let a = build_instance(InstanceKind::RandomFfProjectors, 4, 7).unwrap();
        let b = build_instance(InstanceKind::RandomFfProjectors, 4, 7).unwrap();
        let c = build_instance(InstanceKind::RandomFfProjectors, 4, 8).unwrap();
        assert_eq!(a.terms, b.terms);
        assert_ne!(a.terms, c.terms);
    }

    #[test]
    fn restrict_recovers_local_factor() {
        let t = LocalOperator::new(numerics::kron(&x(), &z()), vec![1, 2]).unwrap();
        let full = t.embed(4).unwrap();
        let (local, res) = restrict(&full, &[1, 2], 4).unwrap();
        assert!(res < 1e-13);
        assert_eq!(local.sites, vec![1, 2]);
        assert!(numerics::frobenius(&(local.op - numerics::kron(&x(), &z()))) < 1e-14);
    }
}
