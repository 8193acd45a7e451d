use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::bus::{topics, Bus, Payload, Subscription};
use super::course::TrackCourse;
use crate::beliefs::{ClassFrame, ClassId, Severity};
use crate::controller::{SpeedController, TierPolicy};
use crate::error::{Error, Result};
use crate::net::Model;
use crate::sampling;
use crate::track::{classify_angle, generate_scene, generate_uncertain, label_in_mode, RasterSpec, SceneParams, SceneTarget};

/// Class → requested wheel speed table (rpm), symmetric in direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub straight_rpm: f64,
    pub easy_rpm: f64,
    pub medium_rpm: f64,
    pub hard_rpm: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            straight_rpm: 1000.0,
            easy_rpm: 800.0,
            medium_rpm: 600.0,
            hard_rpm: 400.0,
        }
    }
}

pub fn plan_speed(class: ClassId, frame: &ClassFrame, planner: &PlannerConfig) -> f64 {
    match frame.severity(class) {
        Severity::Straight => planner.straight_rpm,
        Severity::Easy => planner.easy_rpm,
        Severity::Medium => planner.medium_rpm,
        Severity::Hard => planner.hard_rpm,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// 5 Hz, the camera capture rate.
    pub tick_s: f64,
    pub wheel_radius_m: f64,
    /// Exponential entropy smoothing; 0 gates on the raw per-frame entropy.
    pub smoothing_alpha: f64,
    /// Consecutive stopped ticks before the vehicle is moved to the next segment.
    pub stall_release_ticks: usize,
    pub max_ticks: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            tick_s: 0.2,
            wheel_radius_m: 0.2,
            smoothing_alpha: 0.0,
            stall_release_ticks: 25,
            max_ticks: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time_s: f64,
    pub segment_id: usize,
    pub true_class: String,
    pub predicted_class: String,
    pub entropy_bits: f64,
    pub requested_rpm: f64,
    pub scaled_rpm: f64,
    pub tier: usize,
    pub high_entropy: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub seed: u64,
    pub config_hash: String,
    pub rows: Vec<TraceRow>,
    /// Times the vehicle was released after a prolonged stop.
    pub stall_releases: usize,
}

pub const TRACE_HEADER: &str =
    "time_s,segment_id,true_class,predicted_class,entropy_bits,requested_rpm,scaled_rpm,tier,high_entropy";

impl SimTrace {
    pub fn to_csv(&self) -> String {
        let mut out = format!("# seed={} config_hash={}\n{TRACE_HEADER}\n", self.seed, self.config_hash);
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.time_s,
                r.segment_id,
                r.true_class,
                r.predicted_class,
                r.entropy_bits,
                r.requested_rpm,
                r.scaled_rpm,
                r.tier,
                u8::from(r.high_entropy)
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Config(format!("trace csv: {m}"));
        let mut trace = SimTrace::default();
        let mut saw_header = false;
        for line in text.lines() {
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("seed", v)) => trace.seed = v.parse().map_err(|_| bad(format!("seed `{v}`")))?,
                        Some(("config_hash", v)) => trace.config_hash = v.to_string(),
                        _ => {}
                    }
                }
                continue;
            }
            if !saw_header {
                if line != TRACE_HEADER {
                    return Err(bad("unexpected header".into()));
                }
                saw_header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(bad(format!("expected 9 fields, got {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
            trace.rows.push(TraceRow {
                time_s: num(f[0])?,
                segment_id: f[1].parse().map_err(|_| bad(format!("bad segment `{}`", f[1])))?,
                true_class: f[2].to_string(),
                predicted_class: f[3].to_string(),
                entropy_bits: num(f[4])?,
                requested_rpm: num(f[5])?,
                scaled_rpm: num(f[6])?,
                tier: f[7].parse().map_err(|_| bad(format!("bad tier `{}`", f[7])))?,
                high_entropy: f[8] == "1",
            });
        }
        Ok(trace)
    }
}

/// Everything `run_course` needs besides the course and the model.
#[derive(Debug, Clone, Default)]
pub struct SimSetup {
    pub policy: TierPolicy,
    pub planner: PlannerConfig,
    pub sim: SimConfig,
    pub scene: SceneParams,
    pub raster: RasterSpec,
    pub config_hash: String,
}

/// Result of a closed-loop run: the trace and the full bus transcript.
#[derive(Debug)]
pub struct SimRun {
    pub trace: SimTrace,
    pub bus: Bus,
}

struct CoursePlayer<'a> {
    course: &'a TrackCourse,
    scene: &'a SceneParams,
    seed: u64,
    odom: Subscription,
    position_m: f64,
}

impl CoursePlayer<'_> {
    fn step(&mut self, tick: u64, bus: &mut Bus) -> usize {
        if let Some(m) = bus.poll(self.odom).pop() {
            if let Payload::Odometry { position_m, .. } = m.payload {
                self.position_m = position_m;
            }
        }
        // Perception sees the segment after the one being driven.
        let here = self.course.segment_at(self.position_m).expect("course is non-empty");
        let segment = (here + 1).min(self.course.segments.len() - 1);
        let seg = &self.course.segments[segment];
        let seed = sampling::derive_seed(self.seed, "sim-scene", tick);
        let scene = match seg.corruption.uncertain_kind() {
            None => generate_scene(SceneTarget::Angle(seg.angle_deg), self.scene, seed),
            Some(kind) => generate_uncertain(kind, self.scene, seed),
        };
        bus.publish(topics::SCENE, tick, Payload::Scene { segment, scene });
        segment
    }
}

struct Perception<'a> {
    model: &'a Model,
    raster: &'a RasterSpec,
    scenes: Subscription,
}

impl Perception<'_> {
    fn step(&mut self, tick: u64, bus: &mut Bus) -> Result<()> {
        for m in bus.poll(self.scenes) {
            if let Payload::Scene { scene, .. } = m.payload {
                let pred = self.model.predict(&self.raster.rasterize(&scene))?;
                bus.publish(
                    topics::PREDICTION,
                    tick,
                    Payload::Prediction {
                        class: pred.predicted_class,
                        entropy_bits: pred.entropy_bits,
                    },
                );
            }
        }
        Ok(())
    }
}

struct Planner<'a> {
    frame: &'a ClassFrame,
    table: &'a PlannerConfig,
    predictions: Subscription,
}

impl Planner<'_> {
    fn step(&mut self, tick: u64, bus: &mut Bus) {
        for m in bus.poll(self.predictions) {
            if let Payload::Prediction { class, .. } = m.payload {
                let rpm = plan_speed(class, self.frame, self.table);
                bus.publish(topics::SPEED_REQUEST, tick, Payload::SpeedRequest { rpm });
            }
        }
    }
}

struct SystemController {
    controller: SpeedController,
    predictions: Subscription,
    requests: Subscription,
}

impl SystemController {
    fn step(&mut self, tick: u64, bus: &mut Bus) -> Result<()> {
        let entropy = bus.poll(self.predictions).into_iter().rev().find_map(|m| match m.payload {
            Payload::Prediction { entropy_bits, .. } => Some(entropy_bits),
            _ => None,
        });
        let request = bus.poll(self.requests).into_iter().rev().find_map(|m| match m.payload {
            Payload::SpeedRequest { rpm } => Some(rpm),
            _ => None,
        });
        if let (Some(e), Some(rpm)) = (entropy, request) {
            let cmd = self.controller.command(rpm, e)?;
            bus.publish(topics::SPEED_COMMAND, tick, Payload::SpeedCommand(cmd));
        }
        Ok(())
    }
}

struct Vehicle<'a> {
    course: &'a TrackCourse,
    sim: &'a SimConfig,
    commands: Subscription,
    position_m: f64,
    stopped_ticks: usize,
    stall_releases: usize,
}

impl Vehicle<'_> {
    fn step(&mut self, tick: u64, bus: &mut Bus) {
        let rpm = bus.poll(self.commands).into_iter().rev().find_map(|m| match m.payload {
            Payload::SpeedCommand(c) => Some(c.scaled_rpm),
            _ => None,
        });
        let rpm = rpm.unwrap_or(0.0);
        let speed = rpm / 60.0 * 2.0 * PI * self.sim.wheel_radius_m;
        self.position_m += speed * self.sim.tick_s;
        if rpm == 0.0 {
            self.stopped_ticks += 1;
            if self.stopped_ticks >= self.sim.stall_release_ticks {
                let here = self.course.segment_at(self.position_m).unwrap_or(0);
                self.position_m = self.course.segment_start(here) + self.course.segments[here].length_m;
                self.stopped_ticks = 0;
                self.stall_releases += 1;
            }
        } else {
            self.stopped_ticks = 0;
        }
        let segment = self.course.segment_at(self.position_m).unwrap_or(0);
        bus.publish(
            topics::ODOMETRY,
            tick,
            Payload::Odometry {
                position_m: self.position_m,
                segment,
            },
        );
    }
}

/// Drives `course` in closed loop: scene → perception → planner → system
/// controller → vehicle, one synchronous pass per tick.
pub fn run_course(course: &TrackCourse, model: &Model, setup: &SimSetup, seed: u64) -> Result<SimRun> {
    course.validate()?;
    if model.input_dim() != setup.raster.len() {
        return Err(Error::ModelMismatch(format!(
            "model expects {} inputs, raster produces {}",
            model.input_dim(),
            setup.raster.len()
        )));
    }
    if model.budget.frame_len() != model.frame.len() {
        return Err(Error::ModelMismatch("budget frame differs from model frame".into()));
    }
    let controller = SpeedController::new(setup.policy.clone(), model.frame.max_entropy_bits(), setup.sim.smoothing_alpha)?;

    let mut bus = Bus::new();
    let mut trace = SimTrace {
        seed,
        config_hash: setup.config_hash.clone(),
        ..SimTrace::default()
    };
    if course.segments.is_empty() {
        return Ok(SimRun { trace, bus });
    }

    let mut player = CoursePlayer {
        course,
        scene: &setup.scene,
        seed,
        odom: bus.subscribe(topics::ODOMETRY),
        position_m: 0.0,
    };
    let mut perception = Perception {
        model,
        raster: &setup.raster,
        scenes: bus.subscribe(topics::SCENE),
    };
    let mut planner = Planner {
        frame: &model.frame,
        table: &setup.planner,
        predictions: bus.subscribe(topics::PREDICTION),
    };
    let mut system = SystemController {
        controller,
        predictions: bus.subscribe(topics::PREDICTION),
        requests: bus.subscribe(topics::SPEED_REQUEST),
    };
    let mut vehicle = Vehicle {
        course,
        sim: &setup.sim,
        commands: bus.subscribe(topics::SPEED_COMMAND),
        position_m: 0.0,
        stopped_ticks: 0,
        stall_releases: 0,
    };
    let rec_pred = bus.subscribe(topics::PREDICTION);
    let rec_cmd = bus.subscribe(topics::SPEED_COMMAND);

    let top_bound = setup.policy.top_bound().unwrap_or(f64::INFINITY);
    let total = course.total_length();
    let mut tick = 0u64;
    while vehicle.position_m < total && (tick as usize) < setup.sim.max_ticks {
        let segment = player.step(tick, &mut bus);
        perception.step(tick, &mut bus)?;
        planner.step(tick, &mut bus);
        system.step(tick, &mut bus)?;
        vehicle.step(tick, &mut bus);

        let class = bus
            .poll(rec_pred)
            .into_iter()
            .rev()
            .find_map(|m| match m.payload {
                Payload::Prediction { class, .. } => Some(class),
                _ => None,
            })
            .expect("perception publishes every tick");
        let cmd = bus
            .poll(rec_cmd)
            .into_iter()
            .rev()
            .find_map(|m| match m.payload {
                Payload::SpeedCommand(c) => Some(c),
                _ => None,
            })
            .expect("controller publishes every tick");
        let seg = &course.segments[segment];
        let true_class = match seg.corruption.uncertain_kind() {
            Some(kind) => kind.name().to_string(),
            None => model
                .frame
                .name(label_in_mode(classify_angle(seg.angle_deg), model.frame.mode()))
                .to_string(),
        };
        trace.rows.push(TraceRow {
            time_s: tick as f64 * setup.sim.tick_s,
            segment_id: segment,
            true_class,
            predicted_class: model.frame.name(class).to_string(),
            entropy_bits: cmd.entropy_bits,
            requested_rpm: cmd.requested_rpm,
            scaled_rpm: cmd.scaled_rpm,
            tier: cmd.tier_index,
            high_entropy: cmd.entropy_bits >= top_bound,
        });
        tick += 1;
    }
    trace.stall_releases = vehicle.stall_releases;
    Ok(SimRun { trace, bus })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub segment_id: usize,
    pub ticks: usize,
    pub mean_requested_rpm: f64,
    pub mean_scaled_rpm: f64,
    pub high_entropy_ticks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub ticks: usize,
    pub mean_requested_rpm: f64,
    pub mean_scaled_rpm: f64,
    pub high_entropy_ticks: usize,
    pub full_stop_time_s: f64,
    pub per_segment: Vec<SegmentStats>,
}

/// Requested vs scaled speed per segment plus whole-run totals.
pub fn compare_traces(trace: &SimTrace, tick_s: f64) -> Result<TraceSummary> {
    if trace.rows.is_empty() {
        return Err(Error::Config("cannot summarise an empty trace".into()));
    }
    let mut per: BTreeMap<usize, (usize, f64, f64, usize)> = BTreeMap::new();
    for r in &trace.rows {
        let e = per.entry(r.segment_id).or_default();
        e.0 += 1;
        e.1 += r.requested_rpm;
        e.2 += r.scaled_rpm;
        e.3 += usize::from(r.high_entropy);
    }
    let n = trace.rows.len() as f64;
    Ok(TraceSummary {
        ticks: trace.rows.len(),
        mean_requested_rpm: trace.rows.iter().map(|r| r.requested_rpm).sum::<f64>() / n,
        mean_scaled_rpm: trace.rows.iter().map(|r| r.scaled_rpm).sum::<f64>() / n,
        high_entropy_ticks: trace.rows.iter().filter(|r| r.high_entropy).count(),
        full_stop_time_s: trace
            .rows
            .iter()
            .filter(|r| r.scaled_rpm == 0.0)
            .count() as f64
            * tick_s,
        per_segment: per
            .into_iter()
            .map(|(segment_id, (ticks, req, scaled, high))| SegmentStats {
                segment_id,
                ticks,
                mean_requested_rpm: req / ticks as f64,
                mean_scaled_rpm: scaled / ticks as f64,
                high_entropy_ticks: high,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{ModelKind, NetParams};
    use crate::pipeline::{Corruption, Segment};

    #[test]
    fn planner_table_is_symmetric() {
        let f = ClassFrame::seven();
        let p = PlannerConfig::default();
        assert_eq!(plan_speed(f.straight(), &f, &p), 1000.0);
        assert_eq!(plan_speed(f.id_of("Left-Hard").unwrap(), &f, &p), 400.0);
        for (l, r) in [(0, 6), (1, 5), (2, 4)] {
            assert_eq!(plan_speed(ClassId(l), &f, &p), plan_speed(ClassId(r), &f, &p));
        }
    }

    fn row(seg: usize, req: f64, scaled: f64, tier: usize) -> TraceRow {
        TraceRow {
            time_s: 0.0,
            segment_id: seg,
            true_class: "Straight".into(),
            predicted_class: "Straight".into(),
            entropy_bits: 0.1,
            requested_rpm: req,
            scaled_rpm: scaled,
            tier,
            high_entropy: false,
        }
    }

    #[test]
    fn summary_of_untouched_trace() {
        let trace = SimTrace {
            rows: vec![row(0, 1000.0, 1000.0, 0), row(1, 600.0, 600.0, 0)],
            ..SimTrace::default()
        };
        let s = compare_traces(&trace, 0.2).unwrap();
        assert_eq!(s.mean_scaled_rpm, s.mean_requested_rpm);
        assert_eq!(s.per_segment.len(), 2);
        assert_eq!(s.full_stop_time_s, 0.0);
        assert!(compare_traces(&SimTrace::default(), 0.2).is_err());
    }

    #[test]
    fn csv_round_trips() {
        let mut trace = SimTrace {
            seed: 42,
            config_hash: "abcd".into(),
            rows: vec![row(0, 1000.0, 800.0, 2), row(3, 400.0, 0.0, 4)],
            stall_releases: 0,
        };
        trace.rows[1].high_entropy = true;
        trace.rows[1].entropy_bits = 2.712_345_678_901_234;
        let back = SimTrace::from_csv(&trace.to_csv()).unwrap();
        assert_eq!(back, trace);
    }

    fn random_model(kind: ModelKind) -> Model {
        use crate::beliefs::SetBudget;
        let frame = ClassFrame::seven();
        let budget = std::sync::Arc::new(SetBudget::default_for(&frame));
        let out = Model::output_width(kind, &frame, &budget);
        let mut rng = sampling::rng(5);
        let params = NetParams::random(&[RasterSpec::default().len(), 8, out], &mut rng);
        Model::new(kind, frame, budget, params).unwrap()
    }

    fn course() -> TrackCourse {
        TrackCourse::new(vec![
            Segment::clean(0.0, 40.0),
            Segment::corrupted(0.0, 40.0, Corruption::Random),
            Segment::clean(-70.0, 40.0),
        ])
        .unwrap()
    }

    #[test]
    fn empty_course_gives_empty_trace() {
        let m = random_model(ModelKind::Rsnn);
        let run = run_course(&TrackCourse::default(), &m, &SimSetup::default(), 1).unwrap();
        assert!(run.trace.rows.is_empty());
    }

    #[test]
    fn runs_are_deterministic_and_within_envelope() {
        let m = random_model(ModelKind::Rsnn);
        let a = run_course(&course(), &m, &SimSetup::default(), 9).unwrap();
        let b = run_course(&course(), &m, &SimSetup::default(), 9).unwrap();
        assert_eq!(a.trace.to_csv(), b.trace.to_csv());
        assert_eq!(a.bus.log(), b.bus.log());
        assert!(!a.trace.rows.is_empty());
        for w in a.trace.rows.windows(2) {
            assert!(w[1].time_s > w[0].time_s);
        }
        for r in &a.trace.rows {
            assert!(r.scaled_rpm <= r.requested_rpm);
        }
    }

    #[test]
    fn maximal_uncertainty_stalls_then_releases() {
        // Zero weights give a uniform softmax, i.e. entropy log2(7).
        let mut m = random_model(ModelKind::Softmax);
        m.params = NetParams::zeros(&m.params.sizes());
        let setup = SimSetup::default();
        let run = run_course(&course(), &m, &setup, 3).unwrap();
        assert!(run.trace.rows.iter().all(|r| r.scaled_rpm == 0.0 && r.high_entropy));
        assert_eq!(run.trace.stall_releases, 3);
        assert_eq!(run.trace.rows.len(), 3 * setup.sim.stall_release_ticks);
    }

    #[test]
    fn mismatched_raster_is_rejected() {
        let m = random_model(ModelKind::Rsnn);
        let mut setup = SimSetup::default();
        setup.raster.rows = 16;
        assert!(matches!(run_course(&course(), &m, &setup, 0), Err(Error::ModelMismatch(_))));
    }
}
