//! Trajectory CSV interchange.
//!
//! Header: `t,p1,p2,p3,v1,v2,v3,a1,a2,a3,eps1,eps2,eps3,psi,c`, one row per
//! sample, SI units, `%.6f` formatting. Acceleration and slack cells are
//! empty on the final row (they are step quantities); slack and heading
//! columns are empty throughout when the trajectory does not carry them.

use std::io::{self, BufRead, BufReader, Read, Write};

use crate::stl::{GridError, TimeGrid};

use super::{AxisState, DynamicsError, Trajectory};

pub const CSV_HEADER: &str = "t,p1,p2,p3,v1,v2,v3,a1,a2,a3,eps1,eps2,eps3,psi,c";

#[derive(Debug, thiserror::Error)]
pub enum TrajectoryCsvError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("trajectory file is empty")]
    Empty,
    #[error("bad header: expected `{CSV_HEADER}`")]
    Header,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("line {line}: states do not satisfy the double-integrator recurrence")]
    Inconsistent { line: usize },
}

/// Writes `trajectory` with one payload value per sample.
///
/// # Panics
/// Panics when `payload` length differs from the sample count.
pub fn write_trajectory_csv<W: Write>(
    mut out: W,
    trajectory: &Trajectory,
    payload: &[u32],
) -> io::Result<()> {
    let n = trajectory.grid().sample_count();
    assert_eq!(payload.len(), n, "payload length must match the sample count");
    writeln!(out, "{CSV_HEADER}")?;
    for k in 0..n {
        let t = trajectory.grid().time_at(k);
        write!(out, "{:.6}", t)?;
        for axis in 0..3 {
            write!(out, ",{:.6}", trajectory.positions(axis)[k])?;
        }
        for axis in 0..3 {
            write!(out, ",{:.6}", trajectory.velocities(axis)[k])?;
        }
        for axis in 0..3 {
            if k + 1 < n {
                write!(out, ",{:.6}", trajectory.accelerations(axis)[k])?;
            } else {
                write!(out, ",")?;
            }
        }
        for axis in 0..3 {
            match trajectory.slacks() {
                Some(slacks) if k + 1 < n => write!(out, ",{:.6}", slacks[axis][k])?,
                _ => write!(out, ",")?,
            }
        }
        match trajectory.heading() {
            Some(heading) => write!(out, ",{:.6}", heading[k])?,
            None => write!(out, ",")?,
        }
        writeln!(out, ",{:.6}", payload[k] as f64)?;
    }
    Ok(())
}

/// Reads a trajectory plus payload column.
///
/// Every step must satisfy the double-integrator recurrence locally to
/// within the `%.6f` quantization of the file (1e-5); the returned
/// trajectory is the exact rollout of the parsed accelerations from the
/// parsed initial state, which stays within integration-drift distance of
/// the file's samples.
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<(Trajectory, Vec<u32>), TrajectoryCsvError> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines();
    let header = lines.next().ok_or(TrajectoryCsvError::Empty)??;
    if header.trim() != CSV_HEADER {
        return Err(TrajectoryCsvError::Header);
    }

    let mut times = Vec::new();
    let mut positions: [Vec<f64>; 3] = Default::default();
    let mut velocities: [Vec<f64>; 3] = Default::default();
    let mut accelerations: [Vec<Option<f64>>; 3] = Default::default();
    let mut slacks: [Vec<Option<f64>>; 3] = Default::default();
    let mut heading: Vec<Option<f64>> = Vec::new();
    let mut payload = Vec::new();

    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = row + 2;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 15 {
            return Err(TrajectoryCsvError::Parse {
                line: lineno,
                message: format!("expected 15 columns, got {}", cells.len()),
            });
        }
        let num = |cell: &str, what: &str| -> Result<f64, TrajectoryCsvError> {
            cell.trim().parse::<f64>().map_err(|_| TrajectoryCsvError::Parse {
                line: lineno,
                message: format!("bad {what} value `{cell}`"),
            })
        };
        let opt = |cell: &str, what: &str| -> Result<Option<f64>, TrajectoryCsvError> {
            if cell.trim().is_empty() {
                Ok(None)
            } else {
                num(cell, what).map(Some)
            }
        };
        times.push(num(cells[0], "time")?);
        for axis in 0..3 {
            positions[axis].push(num(cells[1 + axis], "position")?);
            velocities[axis].push(num(cells[4 + axis], "velocity")?);
            accelerations[axis].push(opt(cells[7 + axis], "acceleration")?);
            slacks[axis].push(opt(cells[10 + axis], "slack")?);
        }
        heading.push(opt(cells[13], "heading")?);
        payload.push(num(cells[14], "payload")?.round() as u32);
    }

    let samples = times.len();
    if samples < 2 {
        return Err(TrajectoryCsvError::Empty);
    }
    let dt = times[1] - times[0];
    for k in 1..samples {
        if ((times[k] - times[k - 1]) - dt).abs() > 1e-9 {
            return Err(TrajectoryCsvError::Parse {
                line: k + 2,
                message: "non-uniform sampling time".into(),
            });
        }
    }
    let grid = TimeGrid::new(dt, samples)?;

    let accels: [Vec<f64>; 3] = collect_steps(&accelerations, samples, "acceleration")?;
    for axis in 0..3 {
        for k in 0..samples - 1 {
            let p_next = positions[axis][k] + velocities[axis][k] * dt
                + 0.5 * accels[axis][k] * dt * dt;
            let v_next = velocities[axis][k] + accels[axis][k] * dt;
            if (p_next - positions[axis][k + 1]).abs() > 1e-5
                || (v_next - velocities[axis][k + 1]).abs() > 1e-5
            {
                return Err(TrajectoryCsvError::Inconsistent { line: k + 3 });
            }
        }
    }
    let initial = std::array::from_fn(|axis| AxisState::new(positions[axis][0], velocities[axis][0]));
    let trajectory = Trajectory::from_rollout(grid, initial, accels)?;

    let slack_values: Option<[Vec<f64>; 3]> = if slacks
        .iter()
        .all(|axis| axis.iter().take(samples - 1).all(Option::is_some))
    {
        Some(collect_steps(&slacks, samples, "slack")?)
    } else {
        None
    };
    let heading_values: Option<Vec<f64>> = if heading.iter().all(Option::is_some) {
        Some(heading.into_iter().map(Option::unwrap).collect())
    } else {
        None
    };

    let mut trajectory = trajectory;
    if let Some(values) = slack_values {
        trajectory = trajectory.with_slacks(values)?;
    }
    if let Some(values) = heading_values {
        trajectory = trajectory.with_heading(values)?;
    }
    Ok((trajectory, payload))
}

fn collect_steps(
    columns: &[Vec<Option<f64>>; 3],
    samples: usize,
    what: &str,
) -> Result<[Vec<f64>; 3], TrajectoryCsvError> {
    let mut out: [Vec<f64>; 3] = Default::default();
    for axis in 0..3 {
        let mut values = Vec::with_capacity(samples - 1);
        for (k, cell) in columns[axis].iter().take(samples - 1).enumerate() {
            match cell {
                Some(v) => values.push(*v),
                None => {
                    return Err(TrajectoryCsvError::Parse {
                        line: k + 2,
                        message: format!("missing {what} value before the final row"),
                    })
                }
            }
        }
        out[axis] = values;
    }
    Ok(out)
}
