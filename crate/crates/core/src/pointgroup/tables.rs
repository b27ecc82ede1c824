//! Character tables of T_d and O_h, keyed by class signature.

use super::{ClassSignature, CycleType, Irrep};

pub(super) struct ClassColumn {
    pub label: &'static str,
    pub size: usize,
    pub signature: ClassSignature,
}

const fn sig(cycle: CycleType, det: i32, trace: i32) -> ClassSignature {
    ClassSignature { cycle, det, trace }
}

use CycleType::{Identity as Id, ThreeCycle as C3, Transposition as Tr};

pub(super) const TD_CLASSES: [ClassColumn; 5] = [
    ClassColumn { label: "E", size: 1, signature: sig(Id, 1, 3) },
    ClassColumn { label: "8C3", size: 8, signature: sig(C3, 1, 0) },
    ClassColumn { label: "3C2", size: 3, signature: sig(Id, 1, -1) },
    ClassColumn { label: "6S4", size: 6, signature: sig(Tr, -1, -1) },
    ClassColumn { label: "6σd", size: 6, signature: sig(Tr, -1, 1) },
];

pub(super) const TD_CHARACTERS: [(Irrep, [i32; 5]); 5] = [
    (Irrep::A1, [1, 1, 1, 1, 1]),
    (Irrep::A2, [1, 1, 1, -1, -1]),
    (Irrep::E, [2, -1, 2, 0, 0]),
    (Irrep::T1, [3, 0, -1, 1, -1]),
    (Irrep::T2, [3, 0, -1, -1, 1]),
];

pub(super) const OH_CLASSES: [ClassColumn; 10] = [
    ClassColumn { label: "E", size: 1, signature: sig(Id, 1, 3) },
    ClassColumn { label: "8C3", size: 8, signature: sig(C3, 1, 0) },
    ClassColumn { label: "6C2", size: 6, signature: sig(Tr, 1, -1) },
    ClassColumn { label: "6C4", size: 6, signature: sig(Tr, 1, 1) },
    ClassColumn { label: "3C2", size: 3, signature: sig(Id, 1, -1) },
    ClassColumn { label: "i", size: 1, signature: sig(Id, -1, -3) },
    ClassColumn { label: "6S4", size: 6, signature: sig(Tr, -1, -1) },
    ClassColumn { label: "8S6", size: 8, signature: sig(C3, -1, 0) },
    ClassColumn { label: "3σh", size: 3, signature: sig(Id, -1, 1) },
    ClassColumn { label: "6σd", size: 6, signature: sig(Tr, -1, 1) },
];

pub(super) const OH_CHARACTERS: [(Irrep, [i32; 10]); 10] = [
    (Irrep::A1g, [1, 1, 1, 1, 1, 1, 1, 1, 1, 1]),
    (Irrep::A2g, [1, 1, -1, -1, 1, 1, -1, 1, 1, -1]),
    (Irrep::Eg, [2, -1, 0, 0, 2, 2, 0, -1, 2, 0]),
    (Irrep::T1g, [3, 0, -1, 1, -1, 3, 1, 0, -1, -1]),
    (Irrep::T2g, [3, 0, 1, -1, -1, 3, -1, 0, -1, 1]),
    (Irrep::A1u, [1, 1, 1, 1, 1, -1, -1, -1, -1, -1]),
    (Irrep::A2u, [1, 1, -1, -1, 1, -1, 1, -1, -1, 1]),
    (Irrep::Eu, [2, -1, 0, 0, 2, -2, 0, 1, -2, 0]),
    (Irrep::T1u, [3, 0, -1, 1, -1, -3, -1, 0, 1, 1]),
    (Irrep::T2u, [3, 0, 1, -1, -1, -3, 1, 0, 1, -1]),
];
