//! Seedable generation of the three ingredient sequences of a Le Page series:
//! Poisson arrivals, real multipliers and i.i.d. step paths.

mod epsilon;
mod gamma;
mod stream;
mod ygen;

pub use epsilon::{EpsilonFamily, EpsilonSpec};
pub(crate) use gamma::next_arrival;
pub use gamma::{gamma_sequence, GammaSequence};
pub use stream::{exp1, open01, RngStream, StreamRng};
pub use ygen::{
    audit_fourth_moment, example1_path, example3_path, gen_path, Example2Spec, FourthMomentAudit, HeightSampler,
    MonotoneGrid, PathPool, PathSampler, YGeneratorSpec,
};
