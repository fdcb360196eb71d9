//! Turns pipeline steps into outbound messages. The live control loop and
//! [`replay_stream`] share this code, so a recorded session replays to the
//! same message sequence.

use framewright_core::cue::CueEvent;
use framewright_core::session::{
    tick_schedule, Pipeline, PipelineConfig, RecordingRecord, SessionError, SessionTrace, TraceRecord,
};

use crate::protocol::{shot_icon, DirectorSnapshot, Diagnostics, Level, Outbound, RigState};

#[derive(Debug)]
pub struct StreamCore {
    pipeline: Pipeline,
    published: Option<DirectorSnapshot>,
    last_rig: Option<RigState>,
    scratch: Vec<RecordingRecord>,
}

impl StreamCore {
    pub fn new(pipeline: Pipeline) -> Self {
        Self {
            pipeline,
            published: None,
            last_rig: None,
            scratch: Vec::new(),
        }
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    /// Current widget state, whether or not it was published.
    pub fn snapshot(&self) -> DirectorSnapshot {
        let key = self.pipeline.director_state().key();
        let [left, right] = self.pipeline.pointing();
        DirectorSnapshot {
            tick: self.pipeline.tick_index(),
            time: self.pipeline.time(),
            shot: key.shot,
            shot_icon: shot_icon(key.shot).into(),
            left_pointing: left,
            right_pointing: right,
            framing: key.framing,
            angle: key.angle,
            movement: key.movement,
        }
    }

    pub fn last_rig(&self) -> Option<&RigState> {
        self.last_rig.as_ref()
    }

    /// Feeds one input at a tick boundary and returns the cues it produced.
    /// Owed servo steps are not run here; callers finish the tick first.
    pub fn apply(&mut self, record: &TraceRecord) -> Result<Vec<CueEvent>, SessionError> {
        self.scratch.clear();
        let result = self.pipeline.apply(record, &mut self.scratch);
        let cues = self
            .scratch
            .drain(..)
            .filter_map(|r| match r {
                RecordingRecord::Cue { event } => Some(event),
                _ => None,
            })
            .collect();
        result.map(|()| cues)
    }

    /// Plans the next tick and publishes the snapshot if the widgets changed.
    pub fn plan_tick(&mut self, out: &mut Vec<Outbound>) {
        self.scratch.clear();
        self.pipeline.plan_tick(&mut self.scratch);
        self.translate(out);
        self.publish_if_changed(out);
    }

    pub fn servo_step(&mut self, out: &mut Vec<Outbound>) {
        self.scratch.clear();
        self.pipeline.servo_step(&mut self.scratch);
        self.translate(out);
    }

    /// Runs the servo steps the current tick still owes.
    pub fn finish_tick(&mut self, out: &mut Vec<Outbound>) {
        while self.pipeline.substeps_left() > 0 {
            self.servo_step(out);
        }
    }

    pub fn publish_if_changed(&mut self, out: &mut Vec<Outbound>) {
        let snap = self.snapshot();
        if self.published.as_ref().is_none_or(|p| !p.same_widgets(&snap)) {
            self.published = Some(snap.clone());
            out.push(Outbound::DirectorSnapshot(snap));
        }
    }

    fn translate(&mut self, out: &mut Vec<Outbound>) {
        let target = *self.pipeline.target();
        for r in self.scratch.drain(..) {
            match r {
                RecordingRecord::Telemetry(s) => {
                    let rig = RigState {
                        tick: s.tick,
                        time: s.timestamp,
                        pose: s.pose,
                        target,
                        linear_speed: s.linear_speed,
                        angular_speed: s.angular_speed,
                        status: s.status,
                    };
                    self.last_rig = Some(rig);
                    out.push(Outbound::RigState(rig));
                }
                RecordingRecord::Servo { event } => out.push(Outbound::Diagnostics(Diagnostics {
                    level: Level::Warn,
                    code: None,
                    message: "servo limit recovery".into(),
                    ack_seq: None,
                    servo: Some(event),
                })),
                _ => {}
            }
        }
    }
}

/// Outbound messages a live session would have streamed for `trace`,
/// excluding acks. Inputs are applied at their recorded ticks, as in
/// [`framewright_core::session::replay`].
pub fn replay_stream(trace: &SessionTrace, config: &PipelineConfig) -> Result<Vec<Outbound>, SessionError> {
    let mut core = StreamCore::new(Pipeline::for_trace(config, &trace.header)?);
    let period = core.pipeline().config().tick_period();
    let (assigned, last_tick) = tick_schedule(trace, period);
    let mut out = Vec::new();
    let mut next = 0;
    for k in 0..=last_tick {
        while next < trace.records.len() && assigned[next] <= k {
            core.apply(&trace.records[next].record)?;
            next += 1;
        }
        core.plan_tick(&mut out);
        core.finish_tick(&mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use framewright_core::session::{generate, replay, Scenario};

    #[test]
    fn replay_stream_mirrors_the_recording() {
        let trace = generate(Scenario::Lego, 2);
        let cfg = PipelineConfig::default();
        let msgs = replay_stream(&trace, &cfg).unwrap();
        let rec = replay(&trace, &cfg).unwrap();

        let rigs: Vec<_> = msgs
            .iter()
            .filter_map(|m| match m {
                Outbound::RigState(r) => Some((r.tick, r.time, r.pose)),
                _ => None,
            })
            .collect();
        let telemetry: Vec<_> = rec.telemetry().map(|s| (s.tick, s.timestamp, s.pose)).collect();
        assert_eq!(rigs, telemetry);

        let shots: Vec<_> = msgs
            .iter()
            .filter_map(|m| match m {
                Outbound::DirectorSnapshot(s) => Some((s.shot, s.framing, s.angle, s.movement)),
                _ => None,
            })
            .collect();
        let mut states: Vec<_> = rec
            .timeline()
            .iter()
            .map(|s| (s.state.shot, s.state.framing, s.state.angle, s.state.movement))
            .collect();
        states.dedup();
        // Pointing flips may add snapshots without a state change.
        let mut dedup = shots.clone();
        dedup.dedup();
        assert_eq!(dedup, states);
    }

    #[test]
    fn snapshots_report_pointing_hands() {
        let trace = generate(Scenario::Full, 1);
        let msgs = replay_stream(&trace, &PipelineConfig::default()).unwrap();
        let snaps: Vec<&DirectorSnapshot> = msgs
            .iter()
            .filter_map(|m| match m {
                Outbound::DirectorSnapshot(s) => Some(s),
                _ => None,
            })
            .collect();
        assert!(snaps.iter().any(|s| s.left_pointing && s.right_pointing));
        assert!(snaps.iter().any(|s| s.left_pointing && !s.right_pointing));
        assert!(snaps.iter().any(|s| s.right_pointing && !s.left_pointing));
        assert!(snaps.iter().all(|s| s.shot_icon == shot_icon(s.shot)));
    }
}
