pub mod bench;
pub mod cutgen;
pub mod driver;
pub mod files;
pub mod genset;
pub mod lp;
pub mod master;
pub mod milp;
pub mod model;
pub mod mps;
