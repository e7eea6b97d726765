//! Signal sources for the filter bank: epidemic simulations and image/video
//! sequences.

pub mod imaging;
pub mod seirs;

pub use imaging::{
    image_to_joint, joint_to_frames, read_frame_dir, resize_bilinear, video_to_joint, GrayImage,
    PgmFormat,
};
pub use seirs::{seirs_run, seirs_signal, seirs_step, Scenario, SeirsParams, SeirsRun, SeirsState};
