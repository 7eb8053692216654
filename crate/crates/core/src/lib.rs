pub mod constraints;
pub mod driver;
pub mod emit;
pub mod gen;
pub mod model;
pub mod onnx;
pub mod osl;
pub mod rng;
pub mod validate;
