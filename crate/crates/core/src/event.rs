//! Event records and the line-oriented trace export.

use std::collections::BTreeMap;
use std::fmt;

use crate::ledger::{Address, Amount, LedgerEvent};

/// Scalar value carried in event payloads and message metadata.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scalar {
    Int(u128),
    Str(String),
}

impl Scalar {
    pub fn as_int(&self) -> Option<u128> {
        match self {
            Scalar::Int(v) => Some(*v),
            Scalar::Str(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Scalar::Str(s) => Some(s),
            Scalar::Int(_) => None,
        }
    }
}

impl From<Amount> for Scalar {
    fn from(a: Amount) -> Self {
        Scalar::Int(a.units())
    }
}

impl From<u128> for Scalar {
    fn from(v: u128) -> Self {
        Scalar::Int(v)
    }
}

impl From<u64> for Scalar {
    fn from(v: u64) -> Self {
        Scalar::Int(v as u128)
    }
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::Str(s.to_string())
    }
}

impl From<String> for Scalar {
    fn from(s: String) -> Self {
        Scalar::Str(s)
    }
}

impl From<&Address> for Scalar {
    fn from(a: &Address) -> Self {
        Scalar::Str(a.as_str().to_string())
    }
}

fn is_bare(s: &str) -> bool {
    !s.is_empty()
        && !s.bytes().all(|b| b.is_ascii_digit())
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b"_.:/+-".contains(&b))
}

impl fmt::Display for Scalar {
    /// Integers print as digits; strings print bare when unambiguous and
    /// quoted with escapes otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Str(s) if is_bare(s) => f.write_str(s),
            Scalar::Str(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Transfer,
    Approval,
    Sent,
    StreamError,
    Report,
    Released,
    Held,
    Claimed,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Transfer => "Transfer",
            EventKind::Approval => "Approval",
            EventKind::Sent => "Sent",
            EventKind::StreamError => "StreamError",
            EventKind::Report => "Report",
            EventKind::Released => "Released",
            EventKind::Held => "Held",
            EventKind::Claimed => "Claimed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "Transfer" => EventKind::Transfer,
            "Approval" => EventKind::Approval,
            "Sent" => EventKind::Sent,
            "StreamError" => EventKind::StreamError,
            "Report" => EventKind::Report,
            "Released" => EventKind::Released,
            "Held" => EventKind::Held,
            "Claimed" => EventKind::Claimed,
            _ => return None,
        })
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type Payload = BTreeMap<String, Scalar>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRecord {
    pub tx_id: u64,
    pub seq: u32,
    pub emitter: Address,
    pub kind: EventKind,
    pub payload: Payload,
}

impl EventRecord {
    pub fn get(&self, key: &str) -> Option<&Scalar> {
        self.payload.get(key)
    }

    pub fn amount(&self) -> Option<Amount> {
        self.get("amount").and_then(Scalar::as_int).map(Amount::new)
    }

    pub fn str_field(&self, key: &str) -> Option<&str> {
        self.get(key).and_then(Scalar::as_str)
    }
}

impl fmt::Display for EventRecord {
    /// `tx_id=<n> seq=<n> emitter=<addr> kind=<Kind>` followed by the
    /// payload as `key=value` pairs in key order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tx_id={} seq={} emitter={} kind={}",
            self.tx_id,
            self.seq,
            Scalar::from(&self.emitter),
            self.kind
        )?;
        for (k, v) in &self.payload {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Builds a payload from `(key, value)` pairs.
pub fn payload<const N: usize>(pairs: [(&str, Scalar); N]) -> Payload {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Emitter and payload for a ledger event.
pub(crate) fn ledger_event_parts(ev: LedgerEvent) -> (Address, EventKind, Payload) {
    match ev {
        LedgerEvent::Transfer { from, to, amount } => (
            from.clone(),
            EventKind::Transfer,
            payload([
                ("from", (&from).into()),
                ("to", (&to).into()),
                ("amount", amount.into()),
            ]),
        ),
        LedgerEvent::Approval {
            owner,
            spender,
            amount,
        } => (
            owner.clone(),
            EventKind::Approval,
            payload([
                ("owner", (&owner).into()),
                ("spender", (&spender).into()),
                ("amount", amount.into()),
            ]),
        ),
    }
}

/// One line per record, newline terminated.
pub fn export_trace(events: &[EventRecord]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_line_layout_is_fixed() {
        let rec = EventRecord {
            tx_id: 3,
            seq: 1,
            emitter: Address::for_node("r1"),
            kind: EventKind::Report,
            payload: payload([
                ("sink", "tax-authority".into()),
                ("amount", Scalar::Int(100)),
                ("memo", "monthly salary".into()),
                ("ref", "42".into()),
            ]),
        };
        assert_eq!(
            rec.to_string(),
            r#"tx_id=3 seq=1 emitter=node:r1 kind=Report amount=100 memo="monthly salary" ref="42" sink=tax-authority"#
        );
    }
}
