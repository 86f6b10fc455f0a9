//! Workloads shared by the benchmarks.

use mvops::construct::{gram_schmidt_monic, GramBlocks, GsOptions, PolySystem};
use mvops::moments::{disk, simplex, MomentFunctional};
use mvops::ttr::ThreeTermData;

pub fn disk_functional() -> MomentFunctional {
    disk(0.5).expect("valid parameter")
}

pub fn simplex_functional() -> MomentFunctional {
    simplex(&[0.5, 0.5, 0.5, 0.5]).expect("valid parameter")
}

pub fn mops(u: &MomentFunctional, n: usize) -> (PolySystem, GramBlocks) {
    gram_schmidt_monic(u, n, GsOptions::default()).expect("quasi-definite")
}

pub fn ttr(u: &MomentFunctional, n: usize) -> ThreeTermData {
    let (p, h) = mops(u, n);
    mvops::ttr::compute_ttr(&p, u, &h, 1e-8).expect("orthogonal")
}
