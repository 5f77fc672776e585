//! File formats: CSV writers and the run manifest.
//!
//! Every float is written with 17 significant digits (`{:.16e}`), `.`
//! decimal separator and `\n` line endings, so equal runs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::ensemble::Band;
use crate::lfa::{BasinProbabilityTensor, PairState, TransitionMaps};
use crate::simulate::Trajectory;
use crate::sweep::ErrorSurface;
use crate::Result;

/// 17-significant-digit rendering, enough to round-trip any f64.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Long-format trajectory: `time,host,dim,value`.
pub fn trajectory_csv(trajectory: &Trajectory) -> String {
    let mut out = String::from("time,host,dim,value\n");
    for (k, &time) in trajectory.sample_times.iter().enumerate() {
        for (host, state) in trajectory.states[k].iter().enumerate() {
            for (dim, &value) in state.iter().enumerate() {
                let _ = writeln!(out, "{},{host},{dim},{}", fmt_f64(time), fmt_f64(value));
            }
        }
    }
    out
}

/// Same long format for precomputed `[time][host][dim]` snapshots.
pub fn states_csv(sample_times: &[f64], states: &[Vec<Vec<f64>>]) -> String {
    let mut out = String::from("time,host,dim,value\n");
    for (&time, snapshot) in sample_times.iter().zip(states) {
        for (host, state) in snapshot.iter().enumerate() {
            for (dim, &value) in state.iter().enumerate() {
                let _ = writeln!(out, "{},{host},{dim},{}", fmt_f64(time), fmt_f64(value));
            }
        }
    }
    out
}

/// Event log: `time,i,j`.
pub fn events_csv(trajectory: &Trajectory) -> String {
    let mut out = String::from("time,i,j\n");
    for event in &trajectory.events {
        let _ = writeln!(out, "{},{},{}", fmt_f64(event.time), event.i, event.j);
    }
    out
}

/// Single-host basin probabilities over frequency-scaled time:
/// `t_star,host,basin,probability`.
pub fn singles_csv(t_star_grid: &[f64], path: &[Vec<Vec<f64>>]) -> String {
    let mut out = String::from("t_star,host,basin,probability\n");
    for (&t, snapshot) in t_star_grid.iter().zip(path) {
        for (host, probs) in snapshot.iter().enumerate() {
            for (basin0, &p) in probs.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{host},{},{}",
                    fmt_f64(t),
                    basin0 + 1,
                    fmt_f64(p)
                );
            }
        }
    }
    out
}

/// Pair-state singles in the same format.
pub fn pair_singles_csv(t_star_grid: &[f64], path: &[PairState]) -> String {
    let snapshots: Vec<Vec<Vec<f64>>> = path.iter().map(|s| s.singles.clone()).collect();
    singles_csv(t_star_grid, &snapshots)
}

/// Dense tensor trajectory: `t_star,b0,...,b{H-1},probability`
/// (practical for small tensors only).
pub fn tensor_csv(t_star_grid: &[f64], path: &[BasinProbabilityTensor]) -> String {
    let hosts = path.first().map_or(0, |t| t.dims().len());
    let mut out = String::from("t_star");
    for host in 0..hosts {
        let _ = write!(out, ",b{host}");
    }
    out.push_str(",probability\n");
    for (&t, tensor) in t_star_grid.iter().zip(path) {
        let dims = tensor.dims();
        for (flat, &p) in tensor.data().iter().enumerate() {
            let _ = write!(out, "{}", fmt_f64(t));
            let mut rest = flat;
            let mut labels = vec![0usize; dims.len()];
            for host in (0..dims.len()).rev() {
                labels[host] = rest % dims[host] + 1;
                rest /= dims[host];
            }
            for label in labels {
                let _ = write!(out, ",{label}");
            }
            let _ = writeln!(out, ",{}", fmt_f64(p));
        }
    }
    out
}

/// Sweep surface: `gamma,lambda_tot,error,skipped,reason`.
pub fn surface_csv(surface: &ErrorSurface) -> String {
    let mut out = String::from("gamma,lambda_tot,error,skipped,reason\n");
    for cell in &surface.cells {
        match (&cell.error, &cell.skip_reason) {
            (Some(err), _) => {
                let _ = writeln!(
                    out,
                    "{},{},{},0,",
                    fmt_f64(cell.gamma),
                    fmt_f64(cell.lambda_tot),
                    fmt_f64(*err)
                );
            }
            (None, reason) => {
                let _ = writeln!(
                    out,
                    "{},{},,1,{}",
                    fmt_f64(cell.gamma),
                    fmt_f64(cell.lambda_tot),
                    reason.as_deref().unwrap_or("unknown")
                );
            }
        }
    }
    out
}

/// Percentile band: `time,host,dim,lower,upper`.
pub fn band_csv(sample_times: &[f64], band: &Band) -> String {
    let mut out = String::from("time,host,dim,lower,upper\n");
    for (k, &time) in sample_times.iter().enumerate() {
        for (host, (lo_h, hi_h)) in band.lower[k].iter().zip(&band.upper[k]).enumerate() {
            for (dim, (&lo, &hi)) in lo_h.iter().zip(hi_h).enumerate() {
                let _ = writeln!(
                    out,
                    "{},{host},{dim},{},{}",
                    fmt_f64(time),
                    fmt_f64(lo),
                    fmt_f64(hi)
                );
            }
        }
    }
    out
}

/// Transition maps as JSON: `[{"edge": [i, j], "map": [[a, b, a2, b2], ...]}, ...]`.
pub fn maps_json(maps: &TransitionMaps) -> String {
    let value: Vec<serde_json::Value> = maps
        .entries()
        .iter()
        .map(|(i, j, map)| {
            serde_json::json!({
                "edge": [i, j],
                "map": map
                    .rows()
                    .iter()
                    .map(|&(a, b, a2, b2)| vec![a, b, a2, b2])
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    serde_json::to_string_pretty(&value).expect("maps serialize")
}

/// SHA-256 hex digest of a string (used to fingerprint resolved configs).
pub fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Writes `content` to `dir/name`, creating `dir` as needed.
pub fn write_output(dir: &Path, name: &str, content: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), content)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &v in &[0.0, 1.0, 0.1, 2.0 / 3.0, 1e-300, 12.999999999999998] {
            let text = fmt_f64(v);
            let back: f64 = text.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{text}");
        }
    }

    #[test]
    fn csv_shapes() {
        let trajectory = Trajectory {
            sample_times: vec![0.0, 1.0],
            states: vec![vec![vec![1.0, 2.0]; 2]; 2],
            events: vec![crate::simulate::EventRecord { time: 0.5, i: 0, j: 1 }],
            seed: 7,
            energy_events: None,
        };
        let csv = trajectory_csv(&trajectory);
        assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);
        assert!(csv.starts_with("time,host,dim,value\n"));
        let events = events_csv(&trajectory);
        assert_eq!(events.lines().count(), 2);
        assert!(events.ends_with('\n'));
    }

    #[test]
    fn tensor_csv_labels_are_one_based_row_major() {
        let tensor = BasinProbabilityTensor::delta(vec![2, 3], &[2, 1]).unwrap();
        let csv = tensor_csv(&[0.0], &[tensor]);
        let hit: Vec<&str> = csv
            .lines()
            .filter(|line| line.ends_with(&fmt_f64(1.0)))
            .collect();
        assert_eq!(hit.len(), 1);
        assert!(hit[0].contains(",2,1,"), "{hit:?}");
    }

    #[test]
    fn sha_is_stable() {
        assert_eq!(
            sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
