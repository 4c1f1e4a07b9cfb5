use crate::event::{EventKind, Payload, Scalar};
use crate::nodes::StreamMessage;

use super::Step;

/// Payload keys a report always carries; metadata keys may not shadow them.
pub const RESERVED_REPORT_KEYS: [&str; 3] = ["amount", "origin", "sink"];

/// Forwards the stream unchanged and emits a `Report` event on the way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportingConfig {
    /// Label of the party being reported to, e.g. `tax-authority`.
    pub sink: String,
    /// Metadata keys echoed into the report when present.
    pub keys: Vec<String>,
}

impl ReportingConfig {
    pub(super) fn check(&self, problems: &mut Vec<String>) {
        if self.sink.is_empty() {
            problems.push("reporting sink must be non-empty".into());
        }
        for k in &self.keys {
            if RESERVED_REPORT_KEYS.contains(&k.as_str()) {
                problems.push(format!("report key `{k}` is reserved"));
            }
        }
    }

    pub(super) fn receive(&self, msg: &StreamMessage) -> Vec<Step> {
        let mut payload = Payload::new();
        payload.insert("sink".into(), Scalar::from(self.sink.as_str()));
        payload.insert("amount".into(), msg.amount.into());
        payload.insert("origin".into(), (&msg.origin).into());
        for key in &self.keys {
            if let Some(v) = msg.metadata.get(key) {
                payload.insert(key.clone(), v.clone());
            }
        }
        vec![
            Step::Emit {
                kind: EventKind::Report,
                payload,
            },
            Step::Forward {
                output: 0,
                msg: msg.clone(),
            },
        ]
    }
}
