//! Axis-angle rotations, kinematic trees and forward kinematics.
//!
//! A pose frame is the concatenation of the 18 body values (6 arm joints)
//! and the 126 hand values (2 x 21 hand joints), three axis-angle components
//! per joint, in tree order.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Number of axis-angle values per body frame.
pub const BODY_DIM: usize = 18;
/// Number of axis-angle values per hand frame (both hands).
pub const HAND_DIM: usize = 126;
/// Arm joints at the front of the tree.
pub const ARM_JOINTS: usize = BODY_DIM / 3;
/// Joints per hand, wrist orientation included.
pub const JOINTS_PER_HAND: usize = 21;
/// Hand joints of both hands.
pub const HAND_JOINTS: usize = HAND_DIM / 3;

/// Below this angle the Rodrigues formula switches to its series expansion.
pub const SMALL_ANGLE: f64 = 1e-8;

/// Axis-angle rotation: direction is the axis, norm is the angle in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle(pub Vector3<f64>);

impl AxisAngle {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        AxisAngle(Vector3::new(x, y, z))
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        AxisAngle(axis.normalize() * angle)
    }

    pub fn from_slice(v: &[f64]) -> Self {
        AxisAngle(Vector3::new(v[0], v[1], v[2]))
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        axis_angle_to_matrix(*self)
    }

    pub fn canonical(&self) -> Self {
        canonicalize(*self)
    }
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rodrigues' formula. Near zero the second-order series is used.
pub fn axis_angle_to_matrix(v: AxisAngle) -> Matrix3<f64> {
    let theta = v.0.norm();
    let k = skew(&v.0);
    if theta < SMALL_ANGLE {
        return Matrix3::identity() + k + 0.5 * k * k;
    }
    let a = theta.sin() / theta;
    let b = (1.0 - theta.cos()) / (theta * theta);
    Matrix3::identity() + a * k + b * k * k
}

/// Returns the equivalent rotation with angle in `[0, pi]`.
///
/// Vectors already within the ball of radius pi are returned unchanged, which
/// makes the map idempotent.
pub fn canonicalize(v: AxisAngle) -> AxisAngle {
    let theta = v.0.norm();
    if theta <= PI {
        return v;
    }
    let axis = v.0 / theta;
    let wrapped = theta.rem_euclid(2.0 * PI);
    if wrapped > PI {
        AxisAngle(-axis * (2.0 * PI - wrapped))
    } else {
        AxisAngle(axis * wrapped)
    }
}

/// Canonicalizes every consecutive 3-vector of `values` in place.
pub fn canonicalize_slice(values: &mut [f64]) {
    for chunk in values.chunks_exact_mut(3) {
        let c = canonicalize(AxisAngle::from_slice(chunk));
        chunk.copy_from_slice(c.0.as_slice());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    /// Rest offset from the parent joint, in skeleton units.
    pub offset: Vector3<f64>,
}

/// Fixed parent/offset skeleton. The first [`ARM_JOINTS`] joints are driven by
/// the body vector, the next [`HAND_JOINTS`] by the hand vector (left hand
/// first).
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicTree {
    joints: Vec<Joint>,
}

impl KinematicTree {
    pub fn new(joints: Vec<Joint>) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::Empty("kinematic tree"));
        }
        for (i, j) in joints.iter().enumerate() {
            match j.parent {
                None => {
                    if i != 0 {
                        return Err(Error::Config(format!(
                            "joint {i} ({}) is a second root; only joint 0 may be ROOT",
                            j.name
                        )));
                    }
                }
                Some(p) => {
                    if p >= i {
                        return Err(Error::Config(format!(
                            "joint {i} ({}) has parent {p}, which does not precede it",
                            j.name
                        )));
                    }
                    let len = j.offset.norm();
                    if !(len > 0.0 && len.is_finite()) {
                        return Err(Error::Config(format!(
                            "joint {i} ({}) has bone length {len}",
                            j.name
                        )));
                    }
                }
            }
        }
        if joints[0].parent.is_some() {
            return Err(Error::Config("joint 0 must be ROOT".into()));
        }
        Ok(KinematicTree { joints })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// Joint indices of both hands.
    pub fn hand_joints(&self) -> std::ops::Range<usize> {
        ARM_JOINTS..ARM_JOINTS + HAND_JOINTS
    }

    /// Indices of the joints named `l_shoulder` and `r_shoulder`.
    pub fn shoulders(&self) -> Result<(usize, usize)> {
        let l = self
            .index_of("l_shoulder")
            .ok_or_else(|| Error::Config("tree has no joint named l_shoulder".into()))?;
        let r = self
            .index_of("r_shoulder")
            .ok_or_else(|| Error::Config("tree has no joint named r_shoulder".into()))?;
        Ok((l, r))
    }

    /// Bone lengths, `None` for the root.
    pub fn bone_lengths(&self) -> Vec<Option<f64>> {
        self.joints
            .iter()
            .map(|j| j.parent.map(|_| j.offset.norm()))
            .collect()
    }

    /// Parses the whitespace-delimited tree format `name parent ox oy oz`,
    /// with parent `-1` for the root and `#` comments.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut joints = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg,
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 5 {
                return Err(err(format!("expected 5 fields, found {}", toks.len())));
            }
            let parent: i64 = toks[1]
                .parse()
                .map_err(|_| err(format!("bad parent index {:?}", toks[1])))?;
            let parent = match parent {
                -1 => None,
                p if p >= 0 => Some(p as usize),
                p => return Err(err(format!("bad parent index {p}"))),
            };
            let mut off = [0.0; 3];
            for (k, t) in toks[2..].iter().enumerate() {
                off[k] = t
                    .parse()
                    .map_err(|_| err(format!("bad offset component {t:?}")))?;
            }
            joints.push(Joint {
                name: toks[0].to_string(),
                parent,
                offset: Vector3::from(off),
            });
        }
        KinematicTree::new(joints)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# name parent ox oy oz\n");
        for j in &self.joints {
            let p = j.parent.map_or(-1, |p| p as i64);
            let _ = writeln!(
                s,
                "{} {} {} {} {}",
                j.name, p, j.offset.x, j.offset.y, j.offset.z
            );
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Bundled reference skeleton: spine root, neck, both shoulders and
    /// elbows, then a 21-joint hand per side. Arms rest along the x axis and
    /// the shoulder-to-shoulder distance is 0.30 units.
    pub fn reference() -> Self {
        let mut joints = Vec::with_capacity(ARM_JOINTS + HAND_JOINTS);
        let mut push = |name: String, parent: Option<usize>, o: [f64; 3]| {
            joints.push(Joint {
                name,
                parent,
                offset: Vector3::from(o),
            });
            joints.len() - 1
        };
        push("spine".into(), None, [0.0, 0.0, 0.0]);
        let neck = push("neck".into(), Some(0), [0.0, 0.12, 0.0]);
        let l_sh = push("l_shoulder".into(), Some(neck), [0.15, 0.0, 0.0]);
        let l_el = push("l_elbow".into(), Some(l_sh), [0.28, 0.0, 0.0]);
        let r_sh = push("r_shoulder".into(), Some(neck), [-0.15, 0.0, 0.0]);
        let r_el = push("r_elbow".into(), Some(r_sh), [-0.28, 0.0, 0.0]);

        // (name, base offset from wrist, unit direction, phalanx lengths)
        let fingers: [(&str, [f64; 3], [f64; 3], [f64; 3]); 5] = [
            ("thumb", [0.025, 0.0, 0.025], [0.6, 0.0, 0.8], [0.035, 0.03, 0.025]),
            ("index", [0.085, 0.0, 0.02], [1.0, 0.0, 0.0], [0.04, 0.025, 0.02]),
            ("middle", [0.09, 0.0, 0.0], [1.0, 0.0, 0.0], [0.045, 0.03, 0.022]),
            ("ring", [0.085, 0.0, -0.018], [1.0, 0.0, 0.0], [0.042, 0.028, 0.02]),
            ("pinky", [0.075, 0.0, -0.035], [1.0, 0.0, 0.0], [0.032, 0.02, 0.018]),
        ];
        for (side, elbow, sign) in [("l", l_el, 1.0), ("r", r_el, -1.0)] {
            let wrist = push(format!("{side}_wrist"), Some(elbow), [sign * 0.26, 0.0, 0.0]);
            for (finger, base, dir, lens) in fingers {
                let mut parent = push(
                    format!("{side}_{finger}1"),
                    Some(wrist),
                    [sign * base[0], base[1], base[2]],
                );
                for (k, len) in lens.iter().enumerate() {
                    parent = push(
                        format!("{side}_{finger}{}", k + 2),
                        Some(parent),
                        [sign * dir[0] * len, dir[1] * len, dir[2] * len],
                    );
                }
            }
        }
        KinematicTree::new(joints).expect("reference tree is valid")
    }
}

/// 3D joint positions, `frames x joints`, in skeleton units.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPositions {
    pub frames: usize,
    pub joints: usize,
    pub positions: Vec<Vector3<f64>>,
}

impl JointPositions {
    pub fn frame(&self, t: usize) -> &[Vector3<f64>] {
        &self.positions[t * self.joints..(t + 1) * self.joints]
    }

    pub fn get(&self, t: usize, j: usize) -> Vector3<f64> {
        self.positions[t * self.joints + j]
    }
}

/// Forward kinematics for body (`T x 18`, row-major) and hands (`T x 126`).
pub fn forward_kinematics(
    tree: &KinematicTree,
    body: &[f64],
    hands: &[f64],
) -> Result<JointPositions> {
    if tree.len() != ARM_JOINTS + HAND_JOINTS {
        return Err(Error::JointCount {
            expected: tree.len(),
            got: ARM_JOINTS + HAND_JOINTS,
        });
    }
    if !body.len().is_multiple_of(BODY_DIM) {
        return Err(Error::shape("body values", "multiple of 18", body.len()));
    }
    if !hands.len().is_multiple_of(HAND_DIM) {
        return Err(Error::shape("hand values", "multiple of 126", hands.len()));
    }
    let frames = body.len() / BODY_DIM;
    if hands.len() / HAND_DIM != frames {
        return Err(Error::FrameMismatch {
            body: frames,
            hands: hands.len() / HAND_DIM,
        });
    }
    let mut angles = Vec::with_capacity(frames * (BODY_DIM + HAND_DIM));
    for t in 0..frames {
        angles.extend_from_slice(&body[t * BODY_DIM..(t + 1) * BODY_DIM]);
        angles.extend_from_slice(&hands[t * HAND_DIM..(t + 1) * HAND_DIM]);
    }
    forward_kinematics_angles(tree, &angles)
}

/// Forward kinematics from per-frame joint angles laid out in tree order
/// (`T x 3J`).
pub fn forward_kinematics_angles(tree: &KinematicTree, angles: &[f64]) -> Result<JointPositions> {
    let per_frame = 3 * tree.len();
    if !angles.len().is_multiple_of(per_frame) {
        return Err(Error::JointCount {
            expected: tree.len(),
            got: angles.len() / 3,
        });
    }
    let frames = angles.len() / per_frame;
    let j_count = tree.len();
    let mut positions = Vec::with_capacity(frames * j_count);
    let mut global = vec![Matrix3::identity(); j_count];
    for t in 0..frames {
        let frame = &angles[t * per_frame..(t + 1) * per_frame];
        let base = positions.len();
        for (i, joint) in tree.joints.iter().enumerate() {
            let local = axis_angle_to_matrix(AxisAngle::from_slice(&frame[3 * i..3 * i + 3]));
            match joint.parent {
                None => {
                    global[i] = local;
                    positions.push(Vector3::zeros());
                }
                Some(p) => {
                    let pos = positions[base + p] + global[p] * joint.offset;
                    global[i] = global[p] * local;
                    positions.push(pos);
                }
            }
        }
    }
    Ok(JointPositions {
        frames,
        joints: j_count,
        positions,
    })
}
