//! Canonical text form of a [`PipelineSpec`].
//!
//! Key order is fixed and every optional value that is set is written out,
//! so `parse(serialize(spec)) == spec` and equal specs serialize to equal
//! bytes.

use std::fmt::Write;

use crate::ledger::Amount;
use crate::templates::{GoalkeeperStrategy, ReleaseAmount, ShareRule, TemplateConfig};

use super::{NodeRole, NodeSpec, PipelineSpec};

fn quote(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

/// Bare key when TOML allows one.
fn key(s: &str) -> String {
    let bare = !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
    if bare {
        s.to_string()
    } else {
        quote(s)
    }
}

/// TOML integers are signed 64-bit; anything larger is written as a digit
/// string, which the parser accepts for amounts.
fn amount(a: Amount) -> String {
    match i64::try_from(a.units()) {
        Ok(_) => a.to_string(),
        Err(_) => quote(&a.to_string()),
    }
}

fn list(items: impl IntoIterator<Item = String>) -> String {
    format!("[{}]", items.into_iter().collect::<Vec<_>>().join(", "))
}

pub fn serialize(spec: &PipelineSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[pipeline]\nname = {}", quote(&spec.name));
    if !spec.initial_balances.is_empty() {
        out.push_str("\n[balances]\n");
        for (account, value) in &spec.initial_balances {
            let _ = writeln!(out, "{} = {}", key(account.as_str()), amount(*value));
        }
    }
    for node in &spec.nodes {
        write_node(&mut out, node);
    }
    out
}

fn write_node(out: &mut String, node: &NodeSpec) {
    let _ = writeln!(out, "\n[[node]]\nid = {}", quote(&node.id));
    let _ = writeln!(out, "kind = {}", quote(node.kind().as_str()));
    match &node.role {
        NodeRole::Originator => {}
        NodeRole::Endpoint(e) => {
            let _ = writeln!(out, "mode = {}", quote(e.mode.as_str()));
            let _ = writeln!(out, "recipient = {}", quote(e.recipient.as_str()));
        }
        NodeRole::Router(t) => {
            let _ = writeln!(out, "template = {}", quote(t.name().as_str()));
        }
    }
    if !node.outputs.is_empty() {
        let outputs = node
            .outputs
            .iter()
            .map(|o| format!("{{ tag = {}, to = {} }}", quote(&o.tag), quote(&o.to)));
        let _ = writeln!(out, "outputs = {}", list(outputs));
    }
    if let NodeRole::Router(t) = &node.role {
        out.push_str("\n[node.config]\n");
        write_config(out, t);
    }
    if !node.error_policy.is_default() {
        out.push_str("\n[node.error_policy]\n");
        for (severity, action) in node.error_policy.overrides() {
            let _ = writeln!(
                out,
                "{} = {}",
                severity.as_str(),
                quote(&action.to_string())
            );
        }
    }
}

fn write_config(out: &mut String, config: &TemplateConfig) {
    match config {
        TemplateConfig::Reporting(c) => {
            let _ = writeln!(out, "sink = {}", quote(&c.sink));
            let _ = writeln!(out, "keys = {}", list(c.keys.iter().map(|k| quote(k))));
        }
        TemplateConfig::TimeLock(c) => {
            let _ = writeln!(out, "start = {}", c.start);
            let _ = writeln!(out, "period = {}", c.period);
            let _ = writeln!(out, "releases = {}", c.releases);
            let per_release = match c.per_release {
                ReleaseAmount::Fixed(a) => amount(a),
                ReleaseAmount::Fraction { num, den } => quote(&format!("{num}/{den}")),
            };
            let _ = writeln!(out, "per_release = {per_release}");
        }
        TemplateConfig::Threshold(c) => {
            let _ = writeln!(out, "threshold = {}", amount(c.threshold));
        }
        TemplateConfig::Distributing(c) => {
            let shares = c.shares.iter().map(|s| {
                let rule = match s.rule {
                    ShareRule::Weight(w) => format!("weight = {}", amount(Amount::new(w as u128))),
                    ShareRule::Fixed(a) => format!("fixed = {}", amount(a)),
                    ShareRule::Residual => "residual = true".to_string(),
                };
                format!("{{ tag = {}, {rule} }}", quote(&s.tag))
            });
            let _ = writeln!(out, "shares = {}", list(shares));
            if c.allow_single {
                out.push_str("allow_single = true\n");
            }
        }
        TemplateConfig::Conditional(c) => {
            let _ = writeln!(out, "predicate = {}", quote(&c.predicate.to_string()));
            let _ = writeln!(out, "on_false = {}", quote(c.on_false.as_str()));
        }
        TemplateConfig::Oracle(c) => {
            let trusted = c.trusted.iter().map(|a| quote(a.as_str()));
            let _ = writeln!(out, "trusted = {}", list(trusted));
        }
        TemplateConfig::Waterfall(c) => {
            let tiers = c.tiers.iter().map(|t| match t.cap {
                Some(cap) => format!("{{ tag = {}, cap = {} }}", quote(&t.tag), amount(cap)),
                None => format!("{{ tag = {} }}", quote(&t.tag)),
            });
            let _ = writeln!(out, "tiers = {}", list(tiers));
        }
        TemplateConfig::Goalkeeper(c) => match &c.strategy {
            GoalkeeperStrategy::RefundToOrigin => out.push_str("strategy = \"refund\"\n"),
            GoalkeeperStrategy::HoldForAdmin(admin) => {
                let _ = writeln!(
                    out,
                    "strategy = \"hold\"\nadmin = {}",
                    quote(admin.as_str())
                );
            }
            GoalkeeperStrategy::ForwardTo(sink) => {
                let _ = writeln!(out, "strategy = \"forward\"\nsink = {}", quote(sink));
            }
        },
    }
}
