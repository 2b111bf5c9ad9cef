//! Single-wing autorotating pod: flat-plate aerodynamics, blade-element
//! momentum analysis, chord-planform optimisation and 6-DOF descent simulation.

pub mod aero;
pub mod bemt;
pub mod config;
pub mod io;
pub mod linalg;
pub mod optimizer;
pub mod planform;
pub mod scalar;
pub mod sixdof;

pub use scalar::Real;

pub type ChordPolynomialF64 = planform::ChordPolynomial<f64>;
pub type ChordPolynomialF32 = planform::ChordPolynomial<f32>;
pub type WingGeometryF64 = planform::WingGeometry<f64>;
pub type WingGeometryF32 = planform::WingGeometry<f32>;
pub type MassModelF64 = planform::MassModel<f64>;
pub type FlowConditionsF64 = bemt::FlowConditions<f64>;
pub type FlowConditionsF32 = bemt::FlowConditions<f32>;
pub type BemtSettingsF64 = bemt::BemtSettings<f64>;
pub type Vec3F64 = linalg::Vec3<f64>;
pub type Mat3F64 = linalg::Mat3<f64>;
pub type SimConfigF64 = sixdof::SimConfig<f64>;
pub type RigidBodyStateF64 = sixdof::RigidBodyState<f64>;
pub type TrajectoryF64 = sixdof::Trajectory<f64>;
pub use config::ToolkitConfig;
