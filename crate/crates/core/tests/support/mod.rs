//! Oracles, generators and drivers shared by the property suites.
#![allow(dead_code)]

pub mod drive;
pub mod oracle;
pub mod strategies;
