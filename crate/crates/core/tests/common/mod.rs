#![allow(dead_code)]

use dlgibbs::hamiltonian::{build_instance, InstanceKind, LocalHamiltonian, LocalOperator};
use dlgibbs::jumps::{self, CouplingKind, CouplingSet, ThermalModel, WeightProfile};
use dlgibbs::numerics::paulis;

pub struct ZooModel {
    pub name: String,
    pub h: LocalHamiltonian,
}

pub fn single_z() -> LocalHamiltonian {
    LocalHamiltonian::new(1, vec![LocalOperator::new(paulis::z(), vec![0]).unwrap()]).unwrap()
}

/// Small instances of every kind, cheap enough for dense superoperators.
pub fn zoo() -> Vec<ZooModel> {
    let mut out = vec![ZooModel { name: "single_z".into(), h: single_z() }];
    for (kind, n, seed) in [
        (InstanceKind::ZzChain, 2, 0),
        (InstanceKind::ZzChain, 3, 0),
        (InstanceKind::FieldChain, 2, 0),
        (InstanceKind::FieldChain, 3, 0),
        (InstanceKind::RandomFfProjectors, 2, 1),
        (InstanceKind::RandomFfProjectors, 3, 2),
        (InstanceKind::CommutingProjectors, 2, 3),
        (InstanceKind::CommutingProjectors, 3, 4),
    ] {
        out.push(ZooModel { name: format!("{kind}/n={n}/seed={seed}"), h: build_instance(kind, n, seed).unwrap() });
    }
    out
}

pub fn davies(h: &LocalHamiltonian, kind: CouplingKind, beta: f64) -> ThermalModel {
    jumps::thermal_model(h, &CouplingSet::single_site(kind, h.n), &WeightProfile::davies_kms(beta)).unwrap()
}

/// Davies model with every term rescaled to ‖𝔥_m‖ ≤ 1.
pub fn davies_normalized(h: &LocalHamiltonian, kind: CouplingKind, beta: f64) -> ThermalModel {
    let w = WeightProfile { normalize: true, ..WeightProfile::davies_kms(beta) };
    jumps::thermal_model(h, &CouplingSet::single_site(kind, h.n), &w).unwrap()
}
