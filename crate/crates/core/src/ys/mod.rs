//! Exact simulation of the three-photon Yurke-Stoler interferometer.
//!
//! Amplitudes come from 3x3 permanents of the single-photon network. For
//! `phi = (phi_a + phi_b + phi_c) / 2`, each single-click event with an even
//! number of right clicks has probability `cos^2(phi) / 16`, each odd one
//! `sin^2(phi) / 16`, and each event with one dark party and a doubly-hit
//! detector elsewhere `1/32`; every remaining pattern interferes away.

mod circuit;
mod events;

pub use circuit::{
    beam_splitter, build_circuit, permanent, phase_shifter, ModeUnitary, PhaseSettings, YsError,
    MODES, SOURCE_MODES, UNITARITY_TOL,
};
pub use events::{
    angle_table, correlator, event_probability, event_probability_with, full_distribution,
    postselect_single_click, AngleSet, DetectionEvent, Distribution, EventClass, Postselected,
    OPTIMAL_ANGLES, PHOTONS,
};
