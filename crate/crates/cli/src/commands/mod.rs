pub mod dataset;
pub mod kernels;
pub mod replay;
pub mod sim;
