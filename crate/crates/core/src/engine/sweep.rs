use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use super::sig6;
use super::world::{run, Outcome};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub distance_m: f64,
    pub capture_rate: f64,
    /// Mean over captured runs only.
    pub mean_time_s: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub const HEADER: &'static str = "distance_m,capture_rate,mean_time_s,n";

    /// Locale-independent CSV; an empty `mean_time_s` means nothing was captured.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            let mean = r.mean_time_s.map(sig6).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                sig6(r.distance_m),
                sig6(r.capture_rate),
                mean,
                r.n
            ));
        }
        out
    }

    pub fn row(&self, distance: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.distance_m == distance)
    }
}

/// Run `repeats` episodes per start distance, follower placed behind the leader.
///
/// Distances are sorted ascending and deduplicated; run `i` (in that order,
/// repeats innermost) uses seed `template.seed + i`.
pub fn sweep(template: &Scenario, distances: &[f64], repeats: usize) -> Result<SweepTable> {
    if repeats == 0 {
        return Err(Error::InvalidScenario("repeats must be at least 1".into()));
    }
    if distances.is_empty() || distances.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(Error::InvalidScenario(
            "distances must be a non-empty list of metres >= 0".into(),
        ));
    }
    let mut sorted = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();

    let mut rows = Vec::with_capacity(sorted.len());
    let mut run_index: u64 = 0;
    for &d in &sorted {
        let mut captures = 0;
        let mut total_time = 0.0;
        for _ in 0..repeats {
            let mut s = template.clone().with_follower_behind(d);
            s.seed = template.seed.wrapping_add(run_index);
            run_index += 1;
            let r = run(&s)?;
            if r.outcome == Outcome::Capture {
                captures += 1;
                total_time += r.time_to_capture.unwrap_or(0.0);
            }
        }
        rows.push(SweepRow {
            distance_m: d,
            capture_rate: captures as f64 / repeats as f64,
            mean_time_s: (captures > 0).then(|| total_time / captures as f64),
            n: repeats,
        });
    }
    Ok(SweepTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn same_inputs_same_table() {
        let t = presets::stationary_leader(0.15);
        let a = sweep(&t, &[0.15], 1).unwrap();
        let b = sweep(&t, &[0.15], 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn rows_ascend() {
        let mut t = presets::stationary_leader(0.15);
        t.timeout = 2.0;
        let table = sweep(&t, &[0.3, 0.1, 0.2, 0.1], 1).unwrap();
        let d: Vec<f64> = table.rows.iter().map(|r| r.distance_m).collect();
        assert_eq!(d, vec![0.1, 0.2, 0.3]);
        assert!(table
            .to_csv()
            .starts_with("distance_m,capture_rate,mean_time_s,n\n0.100000,"));
    }

    #[test]
    fn rejects_empty_inputs() {
        let t = presets::stationary_leader(0.15);
        assert!(sweep(&t, &[], 1).is_err());
        assert!(sweep(&t, &[0.1], 0).is_err());
    }
}
