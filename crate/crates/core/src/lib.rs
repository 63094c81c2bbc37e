//! HeLP constraints for torsion units in integral group rings.
//!
//! The crate covers exact cyclotomic arithmetic ([`cyclo`]), character tables
//! ([`chartab`], [`psl2gen`]), the constraint engine ([`help`]), an exact
//! integer point enumerator ([`lattice`]) prime graph reports ([`pq`]) and the command line front end ([`cli`]).

pub mod arith;
pub mod chartab;
pub mod cli;
pub mod cyclo;
pub mod datasets;
pub mod help;
pub mod lattice;
pub mod pq;
pub mod psl2gen;
