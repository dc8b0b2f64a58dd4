//! Cauchy problems for membrane shape equations: symbolic structure
//! equations, canonical integral curves, strip marching and the
//! cylinder family of closed elastic curves.

pub mod cauchy;
pub mod curve;
pub mod elliptic;
pub mod expr;
pub mod exterior;
pub mod numerics;
pub mod rootfind;
pub mod shape;
pub mod xfunc;
pub mod cylinder;
pub mod strip;
pub mod mesh;
