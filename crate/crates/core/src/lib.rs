//! Transport-obstruction triage for first-order planar elliptic systems.
//!
//! The crate analyses systems of the form
//!
//! ```text
//! u_x - alpha v_y = 0
//! v_x + u_y - beta v_y = 0
//! ```
//!
//! detects when the transport obstruction vanishes, solves such rigid systems
//! exactly by characteristics, and measures how a standard Beltrami/Neumann
//! baseline degrades as the ellipticity constant shrinks.

pub mod analysis;
pub mod beltrami;
pub mod bench;
pub mod cli;
pub mod error;
pub mod fields;
pub mod lattice;
pub mod numfmt;
pub mod transport;

pub use error::{Error, Result};
