pub mod cloudsim;
pub mod dsl;
pub mod edgesim;
pub mod modes;
pub mod netsim;
pub mod simkernel;
pub mod synth;
pub mod workloads;
pub mod world;
