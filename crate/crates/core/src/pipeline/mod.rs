//! Closed-loop course simulation over an in-process pub/sub bus.

mod bus;
mod course;
mod sim;

pub use bus::{topics, Bus, Message, Payload, Subscription};
pub use course::{Corruption, Segment, TrackCourse, MAX_COURSE_ANGLE_DEG};
pub use sim::{
    compare_traces, plan_speed, run_course, PlannerConfig, SegmentStats, SimConfig, SimRun, SimSetup, SimTrace,
    TraceRow, TraceSummary, TRACE_HEADER,
};
