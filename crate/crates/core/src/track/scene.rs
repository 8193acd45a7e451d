use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::beliefs::{ClassFrame, ClassId, Direction, Severity};
use crate::sampling;

/// Lower angle bounds (degrees) of the Easy, Medium and Hard bands.
pub const EASY_DEG: f64 = 15.0;
pub const MEDIUM_DEG: f64 = 35.0;
pub const HARD_DEG: f64 = 60.0;

/// Seven-class label for a signed deviation angle (negative = left).
/// Band lower bounds are inclusive.
pub fn classify_angle(theta_deg: f64) -> ClassId {
    let a = theta_deg.abs();
    let severity = if a < EASY_DEG {
        Severity::Straight
    } else if a < MEDIUM_DEG {
        Severity::Easy
    } else if a < HARD_DEG {
        Severity::Medium
    } else {
        Severity::Hard
    };
    let direction = if theta_deg < 0.0 { Direction::Left } else { Direction::Right };
    ClassFrame::seven_class(direction, severity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeColor {
    Blue,
    Yellow,
    SmallOrange,
    LargeOrange,
}

/// Cone in the vehicle frame (x forward, y left), metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub x: f64,
    pub y: f64,
    pub color: ConeColor,
    #[serde(default)]
    pub fallen: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UncertainKind {
    Random,
    Fallen,
    Confusing,
}

impl UncertainKind {
    pub const ALL: [UncertainKind; 3] = [UncertainKind::Random, UncertainKind::Fallen, UncertainKind::Confusing];

    pub fn name(self) -> &'static str {
        match self {
            UncertainKind::Random => "random",
            UncertainKind::Fallen => "fallen",
            UncertainKind::Confusing => "confusing",
        }
    }
}

impl std::str::FromStr for UncertainKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "random" => Ok(UncertainKind::Random),
            "fallen" => Ok(UncertainKind::Fallen),
            "confusing" => Ok(UncertainKind::Confusing),
            other => Err(crate::Error::Config(format!("unknown uncertain category `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum SceneLabel {
    /// Seven-class curvature label.
    Class(ClassId),
    Uncertain(UncertainKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeScene {
    pub cones: Vec<Cone>,
    /// Chord angle to the centreline at the lookahead distance. `None` for
    /// scenes without a single lane (random scatter).
    pub deviation_angle_deg: Option<f64>,
    pub label: SceneLabel,
}

/// Geometry and noise knobs for the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneParams {
    pub lane_width_m: f64,
    pub lookahead_m: f64,
    pub cone_spacing_m: f64,
    pub min_pairs: usize,
    pub max_pairs: usize,
    /// Std-dev of per-cone position jitter.
    pub position_sigma_m: f64,
    /// Half-width of the uniform lateral offset of the whole lane.
    pub lateral_offset_m: f64,
    /// Largest |angle| drawn for Hard classes.
    pub hard_max_deg: f64,
    /// Per-scene lane width is drawn from `lane_width_m ± lane_width_jitter_m`.
    pub lane_width_jitter_m: f64,
    /// Per-scene cone spacing is drawn from `cone_spacing_m ± spacing_jitter_m`.
    pub spacing_jitter_m: f64,
    /// Half-width of the uniform vehicle yaw relative to the lane, degrees.
    pub yaw_deg: f64,
    /// Probability that a single cone is missing from the scene.
    pub dropout: f64,
    /// Draw class angles uniformly inside the band; otherwise use the nominal angle.
    pub sample_angle: bool,
    pub random_cones: (usize, usize),
    pub fallen_fraction: (f64, f64),
    pub fallen_displacement_m: (f64, f64),
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            lane_width_m: 3.5,
            lookahead_m: 15.0,
            cone_spacing_m: 2.5,
            min_pairs: 5,
            max_pairs: 15,
            position_sigma_m: 0.15,
            lateral_offset_m: 0.4,
            hard_max_deg: 90.0,
            lane_width_jitter_m: 0.5,
            spacing_jitter_m: 0.75,
            yaw_deg: 8.0,
            dropout: 0.15,
            sample_angle: true,
            random_cones: (12, 30),
            fallen_fraction: (0.3, 0.7),
            fallen_displacement_m: (0.5, 1.5),
        }
    }
}

impl SceneParams {
    /// Same geometry without any randomness in positions or angle.
    pub fn noiseless() -> Self {
        SceneParams {
            position_sigma_m: 0.0,
            lateral_offset_m: 0.0,
            lane_width_jitter_m: 0.0,
            spacing_jitter_m: 0.0,
            yaw_deg: 0.0,
            dropout: 0.0,
            sample_angle: false,
            ..SceneParams::default()
        }
    }

    /// Angle interval `[lo, hi)` (by magnitude, degrees) for a severity.
    pub fn band(&self, severity: Severity) -> (f64, f64) {
        match severity {
            Severity::Straight => (0.0, EASY_DEG),
            Severity::Easy => (EASY_DEG, MEDIUM_DEG),
            Severity::Medium => (MEDIUM_DEG, HARD_DEG),
            Severity::Hard => (HARD_DEG, self.hard_max_deg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SceneTarget {
    Class(ClassId),
    Angle(f64),
}

fn sample_class_angle<R: Rng>(class: ClassId, params: &SceneParams, rng: &mut R) -> f64 {
    let frame = ClassFrame::seven();
    let severity = frame.severity(class);
    if !params.sample_angle {
        return frame.angle(class);
    }
    let (lo, hi) = params.band(severity);
    match frame.direction(class) {
        Direction::Straight => {
            let a = rng.gen_range(0.0..hi);
            if rng.gen_bool(0.5) {
                -a
            } else {
                a
            }
        }
        Direction::Left => -rng.gen_range(lo..hi),
        Direction::Right => rng.gen_range(lo..hi),
    }
}

/// Lane centreline with a constant curvature chosen so the chord to the point
/// at `lookahead` metres makes `theta_deg` with the forward axis.
#[derive(Debug, Clone, Copy)]
struct Arc {
    /// Signed curvature, positive = turning left.
    kappa: f64,
}

impl Arc {
    fn for_deviation(theta_deg: f64, lookahead: f64) -> Self {
        // chord angle = κs/2 and chord length = 2 sin(κs/2)/κ = lookahead
        let kappa = -2.0 * (theta_deg * PI / 180.0).sin() / lookahead;
        Arc { kappa }
    }

    fn point(&self, s: f64) -> (f64, f64) {
        if self.kappa.abs() < 1e-12 {
            (s, 0.0)
        } else {
            let k = self.kappa;
            ((k * s).sin() / k, (1.0 - (k * s).cos()) / k)
        }
    }

    fn left_normal(&self, s: f64) -> (f64, f64) {
        let h = self.kappa * s;
        (-h.sin(), h.cos())
    }
}

fn symmetric<R: Rng>(rng: &mut R, half_width: f64) -> f64 {
    if half_width > 0.0 {
        rng.gen_range(-half_width..half_width)
    } else {
        0.0
    }
}

/// Cones of a lane whose centreline chord at the lookahead distance makes
/// `theta_deg` with the vehicle's forward axis. The lane may be yawed
/// relative to the vehicle; the arc is bent so the chord angle stays exact.
fn lane_cones<R: Rng>(theta_deg: f64, params: &SceneParams, rng: &mut R) -> Vec<Cone> {
    let yaw = symmetric(rng, params.yaw_deg);
    let arc = Arc::for_deviation(theta_deg - yaw, params.lookahead_m);
    let (sin_y, cos_y) = (-yaw.to_radians()).sin_cos();
    let pairs = rng.gen_range(params.min_pairs..=params.max_pairs.max(params.min_pairs));
    let spacing = params.cone_spacing_m + symmetric(rng, params.spacing_jitter_m);
    let phase = rng.gen_range(0.0..1.0) * spacing;
    let offset = symmetric(rng, params.lateral_offset_m);
    let half = (params.lane_width_m + symmetric(rng, params.lane_width_jitter_m)) / 2.0;
    let jitter = Normal::new(0.0, params.position_sigma_m.max(0.0)).expect("sigma is finite");
    let mut cones = Vec::with_capacity(2 * pairs);
    for k in 0..pairs {
        let s = spacing * (k as f64 + 1.0) + phase;
        let (cx, cy) = arc.point(s);
        let (nx, ny) = arc.left_normal(s);
        for (side, color) in [(1.0, ConeColor::Blue), (-1.0, ConeColor::Yellow)] {
            let (lx, ly) = (cx + side * half * nx, cy + side * half * ny);
            // Lane frame -> vehicle frame (negative yaw angle = lane rotated left).
            let x = cos_y * lx - sin_y * ly + jitter.sample(rng);
            let y = sin_y * lx + cos_y * ly + offset + jitter.sample(rng);
            let dropped = params.dropout > 0.0 && rng.gen_bool(params.dropout);
            if x >= 0.0 && !dropped {
                cones.push(Cone {
                    x,
                    y,
                    color,
                    fallen: false,
                });
            }
        }
    }
    cones
}

/// Standard labelled scene: blue cones on the left boundary, yellow on the right.
pub fn generate_scene(target: SceneTarget, params: &SceneParams, seed: u64) -> ConeScene {
    let mut rng = sampling::rng(seed);
    let theta = match target {
        SceneTarget::Class(c) => sample_class_angle(c, params, &mut rng),
        SceneTarget::Angle(a) => a,
    };
    ConeScene {
        cones: lane_cones(theta, params, &mut rng),
        deviation_angle_deg: Some(theta),
        label: SceneLabel::Class(classify_angle(theta)),
    }
}

/// Test-only corrupted scene of the given category.
pub fn generate_uncertain(kind: UncertainKind, params: &SceneParams, seed: u64) -> ConeScene {
    let mut rng = sampling::rng(seed);
    let label = SceneLabel::Uncertain(kind);
    match kind {
        UncertainKind::Random => {
            let (lo, hi) = params.random_cones;
            let n = rng.gen_range(lo..=hi.max(lo));
            let cones = (0..n)
                .map(|_| Cone {
                    x: rng.gen_range(0.5..19.5),
                    y: rng.gen_range(-9.5..9.5),
                    color: if rng.gen_bool(0.5) { ConeColor::Blue } else { ConeColor::Yellow },
                    fallen: false,
                })
                .collect();
            ConeScene {
                cones,
                deviation_angle_deg: None,
                label,
            }
        }
        UncertainKind::Fallen => {
            let class = ClassId(rng.gen_range(0..7));
            let theta = sample_class_angle(class, params, &mut rng);
            let mut cones = lane_cones(theta, params, &mut rng);
            let (flo, fhi) = params.fallen_fraction;
            let fraction = rng.gen_range(flo..=fhi);
            let n_fallen = ((fraction * cones.len() as f64).round() as usize).clamp(1, cones.len().max(1));
            let mut idx: Vec<usize> = (0..cones.len()).collect();
            rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), &mut rng);
            let (dlo, dhi) = params.fallen_displacement_m;
            for &i in idx.iter().take(n_fallen) {
                let d = rng.gen_range(dlo..=dhi);
                let dir = rng.gen_range(0.0..2.0 * PI);
                let c = &mut cones[i];
                c.fallen = true;
                c.x = (c.x + d * dir.cos()).max(0.0);
                c.y += d * dir.sin();
            }
            ConeScene {
                cones,
                deviation_angle_deg: Some(theta),
                label,
            }
        }
        UncertainKind::Confusing => {
            let pick = |rng: &mut sampling::Rng, dir: Direction| {
                let severity = [Severity::Easy, Severity::Medium, Severity::Hard][rng.gen_range(0..3)];
                let c = ClassFrame::seven_class(dir, severity);
                sample_class_angle(c, params, rng)
            };
            let left = pick(&mut rng, Direction::Left);
            let right = pick(&mut rng, Direction::Right);
            let mut cones = lane_cones(left, params, &mut rng);
            cones.extend(lane_cones(right, params, &mut rng));
            ConeScene {
                cones,
                deviation_angle_deg: Some(left),
                label,
            }
        }
    }
}
