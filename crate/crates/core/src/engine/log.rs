use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use super::world::{EpisodeResult, TickRecord, World};
use crate::error::{Error, Result};

pub const LOG_VERSION: u32 = 1;

/// One line of an episode log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogLine {
    Header {
        v: u32,
        scenario_hash: String,
        seed: u64,
        scenario: Scenario,
    },
    Tick(TickRecord),
    Result(EpisodeResult),
    Abort {
        tick: u64,
        error: String,
    },
}

impl LogLine {
    pub fn header(scenario: &Scenario) -> LogLine {
        LogLine::Header {
            v: LOG_VERSION,
            scenario_hash: scenario.hash(),
            seed: scenario.seed,
            scenario: scenario.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("log lines always serialize")
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

/// Newline-delimited JSON writer.
pub struct LogWriter<W: Write> {
    out: W,
}

impl<W: Write> LogWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn write(&mut self, line: &LogLine) -> Result<()> {
        writeln!(self.out, "{}", line.to_json()).map_err(io_err)
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush().map_err(io_err)?;
        Ok(self.out)
    }
}

/// Run `scenario` to completion, logging every tick. A policy failure is
/// logged as an abort line and returned as the error.
pub fn write_episode<W: Write>(scenario: &Scenario, out: W) -> Result<EpisodeResult> {
    let mut log = LogWriter::new(out);
    log.write(&LogLine::header(scenario))?;
    let mut world = World::new(scenario.clone())?;
    let outcome = world.run_with(|rec| log.write(&LogLine::Tick(rec.clone())));
    match outcome {
        Ok(result) => {
            log.write(&LogLine::Result(result.clone()))?;
            log.finish()?;
            Ok(result)
        }
        Err(e) => {
            if let Error::Policy { tick, .. } = &e {
                log.write(&LogLine::Abort {
                    tick: *tick,
                    error: e.to_string(),
                })?;
                log.finish()?;
            }
            Err(e)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReplayReport {
    Ok {
        ticks: u64,
    },
    Diverged {
        line: usize,
        tick: Option<u64>,
        expected: String,
        actual: String,
    },
}

impl std::fmt::Display for ReplayReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReplayReport::Ok { ticks } => write!(f, "OK, {ticks} ticks"),
            ReplayReport::Diverged {
                line,
                tick,
                expected,
                actual,
            } => {
                match tick {
                    Some(t) => write!(f, "DIVERGED at tick {t} (line {line})")?,
                    None => write!(f, "DIVERGED at line {line}")?,
                }
                write!(f, "\n  logged:   {expected}\n  computed: {actual}")
            }
        }
    }
}

fn malformed(line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedLog {
        line,
        reason: reason.into(),
    }
}

/// Re-run the episode described by a log and compare every line byte for byte.
/// Recorded human drive inputs are fed back at the tick they were consumed.
pub fn replay<R: BufRead>(input: R) -> Result<ReplayReport> {
    let mut lines = input.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| malformed(1, "empty log"))?;
    let first = first.map_err(io_err)?;
    let header: LogLine = serde_json::from_str(&first).map_err(|e| malformed(1, e.to_string()))?;
    let LogLine::Header {
        v,
        scenario_hash,
        seed,
        scenario,
    } = header
    else {
        return Err(malformed(1, "first line is not a header"));
    };
    if v != LOG_VERSION {
        return Err(malformed(1, format!("unsupported log version {v}")));
    }
    if seed != scenario.seed || scenario_hash != scenario.hash() {
        return Ok(ReplayReport::Diverged {
            line: 1,
            tick: None,
            expected: scenario_hash,
            actual: scenario.hash(),
        });
    }

    let mut world = World::new(scenario)?;
    let mut ticks = 0;
    let mut saw_result = false;
    for (idx, text) in lines {
        let line_no = idx + 1;
        let text = text.map_err(io_err)?;
        if text.is_empty() {
            continue;
        }
        if saw_result {
            return Err(malformed(line_no, "content after result line"));
        }
        let logged: LogLine = serde_json::from_str(&text).map_err(|e| malformed(line_no, e.to_string()))?;
        let computed = match &logged {
            LogLine::Tick(rec) => {
                if let Some(input) = rec.transmit.human {
                    world.push_drive(input);
                }
                match world.step() {
                    Ok(r) => {
                        ticks += 1;
                        LogLine::Tick(r)
                    }
                    Err(e @ Error::Policy { .. }) => LogLine::Abort {
                        tick: world.tick(),
                        error: e.to_string(),
                    },
                    Err(e) => return Err(e),
                }
            }
            LogLine::Result(_) => {
                saw_result = true;
                match world.result() {
                    Some(r) => LogLine::Result(r),
                    None => {
                        return Ok(ReplayReport::Diverged {
                            line: line_no,
                            tick: Some(world.tick()),
                            expected: text,
                            actual: "episode still running".into(),
                        })
                    }
                }
            }
            LogLine::Abort { .. } => {
                saw_result = true;
                match world.step() {
                    Err(e @ Error::Policy { .. }) => LogLine::Abort {
                        tick: world.tick(),
                        error: e.to_string(),
                    },
                    Ok(r) => LogLine::Tick(r),
                    Err(e) => return Err(e),
                }
            }
            LogLine::Header { .. } => return Err(malformed(line_no, "second header")),
        };
        let actual = computed.to_json();
        if actual != text {
            let tick = match &logged {
                LogLine::Tick(r) => Some(r.tick),
                _ => Some(world.tick()),
            };
            return Ok(ReplayReport::Diverged {
                line: line_no,
                tick,
                expected: text,
                actual,
            });
        }
    }
    if !saw_result {
        return Err(malformed(ticks as usize + 2, "log ends without a result line"));
    }
    Ok(ReplayReport::Ok { ticks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn logged(s: &Scenario) -> String {
        let mut buf = Vec::new();
        write_episode(s, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn untouched_log_replays() {
        let text = logged(&presets::stationary_leader(0.15));
        let n = text.lines().count() as u64 - 2;
        assert_eq!(replay(text.as_bytes()).unwrap(), ReplayReport::Ok { ticks: n });
    }

    #[test]
    fn edited_tick_is_reported() {
        let text = logged(&presets::stationary_leader(0.15));
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut rec: serde_json::Value = serde_json::from_str(&lines[3]).unwrap();
        rec["separation"] = serde_json::json!(9.0);
        lines[3] = rec.to_string();
        let report = replay(lines.join("\n").as_bytes()).unwrap();
        match report {
            ReplayReport::Diverged { tick, line, .. } => {
                assert_eq!(tick, Some(2));
                assert_eq!(line, 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn edited_scenario_fails_hash() {
        let text = logged(&presets::stationary_leader(0.15));
        let tampered = text.replacen("\"timeout\":", "\"timeout\":1", 1);
        assert!(matches!(
            replay(tampered.as_bytes()).unwrap(),
            ReplayReport::Diverged { line: 1, .. }
        ));
    }

    #[test]
    fn truncated_log_is_malformed() {
        let text = logged(&presets::stationary_leader(0.15));
        let cut: Vec<&str> = text.lines().take(5).collect();
        assert!(matches!(
            replay(cut.join("\n").as_bytes()),
            Err(Error::MalformedLog { .. })
        ));
        assert!(matches!(replay("".as_bytes()), Err(Error::MalformedLog { .. })));
    }

    #[test]
    fn header_carries_hash_and_seed() {
        let s = presets::stationary_leader(0.15);
        let text = logged(&s);
        let header: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(header["kind"], "header");
        assert_eq!(header["scenario_hash"], s.hash());
        assert_eq!(header["seed"], s.seed);
    }

    #[test]
    fn stage_order_in_each_record() {
        let text = logged(&presets::stationary_leader(0.15));
        for line in text.lines().skip(1).filter(|l| l.contains("\"kind\":\"tick\"")) {
            let pos: Vec<usize> = ["\"informational\"", "\"cognitive\"", "\"social\"", "\"physical\""]
                .iter()
                .map(|d| line.find(d).unwrap())
                .collect();
            assert!(pos.windows(2).all(|w| w[0] < w[1]), "{line}");
        }
    }
}
