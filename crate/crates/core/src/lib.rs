pub mod constants;
pub mod error;
pub mod numerics;
pub mod polysphere;
pub mod quadrature;
pub mod conformal;
pub mod solver;
pub mod functional;
pub mod expansion;
pub mod report;
pub mod selftest;
pub mod cli;
