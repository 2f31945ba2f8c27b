//! Max-min fair transceiver design: the SDR-based asymptotic designs and the
//! iterative joint design driven by Nelder–Mead.

pub mod asymptotic;
pub mod game;
pub mod joint;
pub mod nelder_mead;
pub mod randomize;
pub mod sdr;

pub use asymptotic::{
    asymptotic_design, asymptotic_weights, best_asymptotic, AsymptoticChoice, AsymptoticDesign,
};
pub use joint::{joint_design, joint_design_from, JointResult, MmseEvaluator};
pub use nelder_mead::{nelder_mead, NmOptions, NmResult};
pub use randomize::{randomize, weighted_min_power, Randomized};
pub use sdr::{sdr_solve, SdrSolution};
