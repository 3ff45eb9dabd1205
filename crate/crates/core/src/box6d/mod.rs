//! 6-DoF oriented bounding boxes: text codec, pose conversion, exact IoU and
//! grounding accuracy.
//!
//! Corner order is fixed by sign pattern over the box axes:
//! `---, --+, -+-, -++, +--, +-+, ++-, +++`, i.e. corner `i` has the x sign
//! in bit 2, y in bit 1 and z in bit 0 of `i` (set bit = `+`).

mod clip;
mod codec;
mod pose;
mod reg;

pub use clip::{intersection_volume, iou};
pub use codec::{format_box, parse_box};
pub use pose::{corners_from_pose, fit_pose_from_corners, OrientedBox, Pose};
pub use reg::{evaluate_grounding, reg_accuracy, GroundingResult, RegReport, REG_IOU_THRESHOLD};

/// Sign of axis `axis` (0 = x) for canonical corner `corner`.
#[inline]
pub(crate) fn corner_sign(corner: usize, axis: usize) -> i8 {
    if corner >> (2 - axis) & 1 == 1 {
        1
    } else {
        -1
    }
}
