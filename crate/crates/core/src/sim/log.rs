use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::DESTINATION_LABELS;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub id: u32,
    pub position: Point,
    pub destination: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub agents: Vec<AgentState>,
}

/// Destination bookkeeping for one spawned pedestrian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpawnRecord {
    pub id: u32,
    pub t: f64,
    pub destination: usize,
    /// Distribution (percent) the destination was drawn from.
    pub distribution: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    pub duration: f64,
    pub log_interval: f64,
    pub frames: Vec<Frame>,
    pub spawns: Vec<SpawnRecord>,
    pub deferred_spawns: usize,
}

pub const TRAJECTORY_HEADER: &str = "t,id,x,y,dest";

impl TrajectoryLog {
    /// The snapshot logged for time `t`: the latest frame at or before `t`
    /// that is less than one log interval old. Frames missing from a file
    /// (no agents) read as empty.
    pub fn snapshot_at(&self, t: f64) -> &[AgentState] {
        let eps = 1e-6;
        let idx = self.frames.partition_point(|f| f.t <= t + eps);
        match idx.checked_sub(1).map(|i| &self.frames[i]) {
            Some(f) if t - f.t < self.log_interval - eps => &f.agents,
            _ => &[],
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TRAJECTORY_HEADER}")?;
        for f in &self.frames {
            for a in &f.agents {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    f.t, a.id, a.position.x, a.position.y, DESTINATION_LABELS[a.destination]
                )?;
            }
        }
        Ok(())
    }

    /// Reads a trajectory CSV. Duration and log interval are not part of the
    /// file format and must be supplied.
    pub fn read_csv<R: BufRead>(r: R, duration: f64, log_interval: f64) -> Result<Self> {
        let mut log = TrajectoryLog {
            duration,
            log_interval,
            ..Default::default()
        };
        let mut lines = r.lines();
        match lines.next().transpose()? {
            Some(h) if h.trim() == TRAJECTORY_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected header `{TRAJECTORY_HEADER}`"),
                })
            }
        }
        let mut dests: std::collections::HashMap<u32, usize> = Default::default();
        for (n, line) in lines.enumerate() {
            let line_no = n + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: line_no, msg };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(perr(format!("expected 5 columns, found {}", cols.len())));
            }
            let num = |s: &str, what: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| perr(format!("invalid {what} `{s}`")))
            };
            let t = num(cols[0], "time")?;
            let id: u32 = cols[1]
                .trim()
                .parse()
                .map_err(|_| perr(format!("invalid id `{}`", cols[1])))?;
            let position = Point::new(num(cols[2], "x")?, num(cols[3], "y")?);
            let destination = DESTINATION_LABELS
                .iter()
                .position(|l| *l == cols[4].trim())
                .ok_or_else(|| perr(format!("invalid destination `{}`", cols[4])))?;
            if *dests.entry(id).or_insert(destination) != destination {
                return Err(perr(format!("pedestrian {id} changes destination")));
            }
            match log.frames.last_mut() {
                Some(f) if f.t == t => f.agents.push(AgentState { id, position, destination }),
                Some(f) if f.t > t => return Err(perr(format!("time {t} goes backwards"))),
                _ => log.frames.push(Frame {
                    t,
                    agents: vec![AgentState { id, position, destination }],
                }),
            }
        }
        Ok(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TrajectoryLog {
        TrajectoryLog {
            duration: 1.0,
            log_interval: 0.4,
            frames: vec![
                Frame {
                    t: 0.0,
                    agents: vec![AgentState { id: 0, position: Point::new(1.5, 0.25), destination: 2 }],
                },
                Frame { t: 0.4, agents: vec![] },
                Frame {
                    t: 0.8,
                    agents: vec![
                        AgentState { id: 0, position: Point::new(1.0 / 3.0, 0.1 + 0.2), destination: 2 },
                        AgentState { id: 1, position: Point::new(-2.0, 7.0), destination: 0 },
                    ],
                },
            ],
            ..Default::default()
        }
    }

    #[test]
    fn csv_round_trip_drops_only_empty_frames() {
        let log = sample();
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let back = TrajectoryLog::read_csv(&buf[..], 1.0, 0.4).unwrap();
        assert_eq!(back.frames.len(), 2);
        assert_eq!(back.frames[0], log.frames[0]);
        assert_eq!(back.frames[1], log.frames[2]);
        assert!(back.snapshot_at(0.4).is_empty());
    }

    #[test]
    fn malformed_row_names_line() {
        let text = "t,id,x,y,dest\n0,1,2,3,L\n0.4,1,zz,3,L\n";
        match TrajectoryLog::read_csv(text.as_bytes(), 1.0, 0.4) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let bad_dest = "t,id,x,y,dest\n0,1,2,3,Q\n";
        assert!(TrajectoryLog::read_csv(bad_dest.as_bytes(), 1.0, 0.4).is_err());
        assert!(TrajectoryLog::read_csv("x,y\n".as_bytes(), 1.0, 0.4).is_err());
    }

    #[test]
    fn snapshot_lookup() {
        let log = sample();
        assert_eq!(log.snapshot_at(0.0).len(), 1);
        assert_eq!(log.snapshot_at(0.2).len(), 1);
        assert_eq!(log.snapshot_at(0.8).len(), 2);
        assert_eq!(log.snapshot_at(1.0).len(), 2);
        assert!(log.snapshot_at(5.0).is_empty());
    }
}
