use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    QubitForward,
    QubitReturn,
    OrderAnnouncement,
    DecoyPositions,
    DecoyOperations,
    CheckResult,
    Abort,
    Publish,
}

/// One classical message or qubit transit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub index: usize,
    pub sender: String,
    pub receiver: String,
    pub kind: EventKind,
    pub payload: String,
    pub decoy: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    enabled: bool,
    next_index: usize,
    events: Vec<TranscriptEvent>,
}

pub fn party_name(party: usize) -> String {
    format!("bob{}", party + 1)
}

pub const DEALER: &str = "alice";
pub const ALL_PARTIES: &str = "all";

impl Transcript {
    pub fn new(enabled: bool) -> Self {
        Self { enabled, ..Self::default() }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    /// Indices advance even when recording is off, so message order can be
    /// compared across runs.
    pub fn push(
        &mut self,
        sender: impl Into<String>,
        receiver: impl Into<String>,
        kind: EventKind,
        payload: impl FnOnce() -> String,
        decoy: Option<bool>,
    ) -> usize {
        let index = self.next_index;
        self.next_index += 1;
        if self.enabled {
            self.events.push(TranscriptEvent {
                index,
                sender: sender.into(),
                receiver: receiver.into(),
                kind,
                payload: payload(),
                decoy,
            });
        }
        index
    }

    pub fn events(&self) -> &[TranscriptEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for event in &self.events {
            serde_json::to_writer(&mut out, event)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn parse_jsonl(text: &str) -> Result<Vec<TranscriptEvent>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(Into::into))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_field_names_are_stable() {
        let mut t = Transcript::new(true);
        t.push(DEALER, party_name(0), EventKind::QubitForward, || "pos=0".into(), Some(true));
        let line = t.to_jsonl();
        assert_eq!(
            line.trim(),
            r#"{"index":0,"sender":"alice","receiver":"bob1","kind":"qubit-forward","payload":"pos=0","decoy":true}"#
        );
        assert_eq!(Transcript::parse_jsonl(&line).unwrap(), t.events());
    }

    #[test]
    fn disabled_transcript_still_counts() {
        let mut t = Transcript::new(false);
        assert_eq!(t.push("a", "b", EventKind::Abort, String::new, None), 0);
        assert_eq!(t.push("a", "b", EventKind::Abort, String::new, None), 1);
        assert!(t.is_empty());
    }
}
