pub mod coproduction;
pub mod governance;
pub mod ids;
pub mod interface;
pub mod planning;
pub mod quality;
pub mod registry;
pub mod simulator;
