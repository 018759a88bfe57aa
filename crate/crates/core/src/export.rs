//! CSV and JSON interchange: power-trace datasets, trajectories and
//! program files (lists of motion commands).

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::JointVector;
use crate::motion::{MotionCommand, Trajectory, TrajectorySample};
use crate::power::PowerTrace;
use crate::DOF;

fn numbered(prefix: &str) -> impl Iterator<Item = String> + '_ {
    (1..=DOF).map(move |j| format!("{prefix}{j}"))
}

pub fn power_trace_header() -> Vec<String> {
    std::iter::once("t".to_string())
        .chain(numbered("q"))
        .chain(numbered("qd"))
        .chain(numbered("i"))
        .chain(numbered("temp"))
        .chain(["p_bus", "p_grid", "p_diss", "e_cum"].map(String::from))
        .collect()
}

pub fn trajectory_header() -> Vec<String> {
    std::iter::once("t".to_string())
        .chain(numbered("q"))
        .chain(numbered("qd"))
        .chain(numbered("qdd"))
        .collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

/// Writes one row per sample joining the trajectory with its power trace.
pub fn write_power_trace_csv<W: Write>(out: W, traj: &Trajectory, trace: &PowerTrace) -> Result<()> {
    if traj.samples.len() != trace.samples.len() {
        return Err(Error::InvalidArgument(format!(
            "trajectory has {} samples but the trace has {}",
            traj.samples.len(),
            trace.samples.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(power_trace_header()).map_err(csv_err)?;
    let e_cum = trace.cumulative_grid_energy();
    for ((s, p), e) in traj.samples.iter().zip(&trace.samples).zip(e_cum) {
        let row: Vec<String> = std::iter::once(p.t)
            .chain(s.q.iter().copied())
            .chain(s.qd.iter().copied())
            .chain(p.i_joint)
            .chain(p.temp)
            .chain([p.p_bus, p.p_grid, p.p_dissipated, e])
            .map(|v| v.to_string())
            .collect();
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("write: {e}")))?;
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header()).map_err(csv_err)?;
    for s in &traj.samples {
        let row: Vec<String> = std::iter::once(s.t)
            .chain(s.q.iter().copied())
            .chain(s.qd.iter().copied())
            .chain(s.qdd.iter().copied())
            .map(|v| v.to_string())
            .collect();
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("write: {e}")))?;
    Ok(())
}

/// Reads a trajectory written by [`write_trajectory_csv`]. The sample period
/// is taken from the first two rows and the result is structure-checked.
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Trajectory> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header != trajectory_header() {
        return Err(Error::InvalidTrajectory(format!("unexpected header {header:?}")));
    }
    let mut samples = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let values: Vec<f64> = record
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidTrajectory(format!("row {}: {e}", line + 1)))?;
        let v = |offset: usize| JointVector::from_column_slice(&values[offset..offset + DOF]);
        samples.push(TrajectorySample {
            t: values[0],
            q: v(1),
            qd: v(1 + DOF),
            qdd: v(1 + 2 * DOF),
        });
    }
    if samples.len() < 2 {
        return Err(Error::InvalidTrajectory(format!(
            "need at least 2 rows, got {}",
            samples.len()
        )));
    }
    let traj = Trajectory {
        dt: samples[1].t - samples[0].t,
        samples,
    };
    traj.check_structure()?;
    Ok(traj)
}

pub fn program_to_json(commands: &[MotionCommand]) -> String {
    let mut s = serde_json::to_string_pretty(commands).expect("commands serialize");
    s.push('\n');
    s
}

pub fn program_from_json(text: &str) -> Result<Vec<MotionCommand>> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}
