//! Cue-driven autonomous camera direction for a simulated camera rig.
//!
//! Pipeline: [`cue`] turns skeleton frames, hand keypoints and utterances
//! into cues; [`director`] turns cues into shot state and a planning goal;
//! [`planner`] picks the next camera position by constrained minimization;
//! [`servo`] drives the simulated rig there. [`session`] runs the whole chain
//! over recorded or synthetic traces.
//!
//! The numeric core (`scene`, `planner`, `servo`) is generic over the scalar;
//! the aliases below fix it to `f32` or `f64`.

pub mod num;
pub mod scene;
pub mod planner;
pub mod servo;
pub mod cue;
pub mod director;
pub mod session;

pub use num::Real;

pub type Vec3f = scene::Vec3<f32>;
pub type Vec3d = scene::Vec3<f64>;
pub type CameraPosef = scene::CameraPose<f32>;
pub type CameraPosed = scene::CameraPose<f64>;
pub type PolarCoordf = scene::PolarCoord<f32>;
pub type PolarCoordd = scene::PolarCoord<f64>;
pub type PolarBoundsf = scene::PolarBounds<f32>;
pub type PolarBoundsd = scene::PolarBounds<f64>;
pub type PlanningContextf = planner::PlanningContext<f32>;
pub type PlanningContextd = planner::PlanningContext<f64>;
pub type PlannerConfigf = planner::PlannerConfig<f32>;
pub type PlannerConfigd = planner::PlannerConfig<f64>;
pub type ServoSimf = servo::ServoSim<f32>;
pub type ServoSimd = servo::ServoSim<f64>;
pub type ServoConfigf = servo::ServoConfig<f32>;
pub type ServoConfigd = servo::ServoConfig<f64>;
