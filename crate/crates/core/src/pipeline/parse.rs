//! Pipeline spec reader.
//!
//! The file is TOML with a fixed schema (see `docs/pipeline-format.md`).
//! Parsing is purely syntactic plus schema checks: structural rules such as
//! duplicate ids, arities and cycles are left to [`super::validate`].

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;

use thiserror::Error;
use toml::de::{DeTable, DeValue};
use toml::Spanned;

use crate::ledger::{Address, Amount};
use crate::nodes::{EndpointConfig, EndpointMode, ErrorPolicy, ErrorSeverity, PolicyAction};
use crate::templates::{
    ConditionConfig, DistributionConfig, GoalkeeperConfig, GoalkeeperStrategy, OracleConfig,
    Predicate, ReleaseAmount, ReportingConfig, Share, ShareRule, TemplateConfig, TemplateName,
    ThresholdConfig, Tier, TimeLockConfig, WaterfallConfig,
};

use super::{NodeRole, NodeSpec, OutputSpec, PipelineSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownTemplate,
    UnknownKey,
    MissingKey,
    InvalidValue,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Syntax => "SyntaxError",
            ParseErrorKind::UnknownTemplate => "UnknownTemplate",
            ParseErrorKind::UnknownKey => "UnknownKey",
            ParseErrorKind::MissingKey => "MissingKey",
            ParseErrorKind::InvalidValue => "InvalidValue",
        })
    }
}

/// 1-based line and column of the offending token.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at {line}:{column}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub(crate) type Value<'i> = Spanned<DeValue<'i>>;

/// Byte offsets to line/column.
pub(crate) struct Source<'i> {
    text: &'i str,
}

impl<'i> Source<'i> {
    pub(crate) fn new(text: &'i str) -> Self {
        Source { text }
    }

    pub(crate) fn error(
        &self,
        kind: ParseErrorKind,
        span: Range<usize>,
        message: impl Into<String>,
    ) -> ParseError {
        let at = span.start.min(self.text.len());
        let before = &self.text[..floor_char_boundary(self.text, at)];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ParseError {
            kind,
            line,
            column,
            message: message.into(),
        }
    }

    pub(crate) fn document(&self) -> Result<Spanned<DeTable<'i>>, ParseError> {
        DeTable::parse(self.text).map_err(|e| {
            self.error(
                ParseErrorKind::Syntax,
                e.span().unwrap_or(0..0),
                e.message().trim_end().to_string(),
            )
        })
    }
}

fn floor_char_boundary(s: &str, mut at: usize) -> usize {
    while !s.is_char_boundary(at) {
        at -= 1;
    }
    at
}

/// A table whose keys are consumed one by one; leftovers are unknown keys.
pub(crate) struct Fields<'a, 'i> {
    src: &'a Source<'i>,
    table: &'a DeTable<'i>,
    span: Range<usize>,
    what: Cow<'a, str>,
    used: BTreeSet<&'a str>,
}

impl<'a, 'i> Fields<'a, 'i> {
    pub(crate) fn new(
        src: &'a Source<'i>,
        table: &'a DeTable<'i>,
        span: Range<usize>,
        what: impl Into<Cow<'a, str>>,
    ) -> Self {
        Fields {
            src,
            table,
            span,
            what: what.into(),
            used: BTreeSet::new(),
        }
    }

    pub(crate) fn of(
        src: &'a Source<'i>,
        value: &'a Value<'i>,
        what: impl Into<Cow<'a, str>>,
    ) -> Result<Self, ParseError> {
        let what = what.into();
        match value.get_ref() {
            DeValue::Table(t) => Ok(Fields::new(src, t, value.span(), what)),
            other => Err(src.error(
                ParseErrorKind::InvalidValue,
                value.span(),
                format!("{what} must be a table, found {}", other.type_str()),
            )),
        }
    }

    pub(crate) fn span(&self) -> Range<usize> {
        self.span.clone()
    }

    pub(crate) fn err(
        &self,
        kind: ParseErrorKind,
        span: Range<usize>,
        msg: impl Into<String>,
    ) -> ParseError {
        self.src.error(kind, span, msg)
    }

    pub(crate) fn get(&mut self, key: &'a str) -> Option<&'a Value<'i>> {
        let (k, v) = self.table.get_key_value(key)?;
        self.used.insert(k.get_ref().as_ref());
        Some(v)
    }

    pub(crate) fn require(&mut self, key: &'a str) -> Result<&'a Value<'i>, ParseError> {
        let span = self.span();
        let what = self.what.to_string();
        self.get(key).ok_or_else(|| {
            self.err(
                ParseErrorKind::MissingKey,
                span,
                format!("{what} is missing `{key}`"),
            )
        })
    }

    pub(crate) fn required_string(&mut self, key: &'a str) -> Result<String, ParseError> {
        let v = self.require(key)?;
        self.as_string(key, v)
    }

    pub(crate) fn as_string(&self, key: &str, v: &Value<'i>) -> Result<String, ParseError> {
        match v.get_ref() {
            DeValue::String(s) => Ok(s.to_string()),
            other => Err(self.mismatch(key, "a string", other, v.span())),
        }
    }

    pub(crate) fn address(&mut self, key: &'a str) -> Result<Address, ParseError> {
        let v = self.require(key)?;
        self.as_address(key, v)
    }

    pub(crate) fn as_address(&self, key: &str, v: &Value<'i>) -> Result<Address, ParseError> {
        let s = self.as_string(key, v)?;
        Address::parse(&s).ok_or_else(|| {
            self.err(
                ParseErrorKind::InvalidValue,
                v.span(),
                format!("`{key}` must be a non-empty address"),
            )
        })
    }

    pub(crate) fn bool(&mut self, key: &'a str) -> Result<Option<bool>, ParseError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => match v.get_ref() {
                DeValue::Boolean(b) => Ok(Some(*b)),
                other => Err(self.mismatch(key, "a boolean", other, v.span())),
            },
        }
    }

    pub(crate) fn u64(&mut self, key: &'a str) -> Result<Option<u64>, ParseError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => {
                let n = self.as_u128(key, v)?;
                u64::try_from(n).map(Some).map_err(|_| {
                    self.err(
                        ParseErrorKind::InvalidValue,
                        v.span(),
                        format!("`{key}` does not fit in 64 bits"),
                    )
                })
            }
        }
    }

    pub(crate) fn required_u64(&mut self, key: &'a str) -> Result<u64, ParseError> {
        let span = self.span();
        let what = self.what.to_string();
        self.u64(key)?.ok_or_else(|| {
            self.err(
                ParseErrorKind::MissingKey,
                span,
                format!("{what} is missing `{key}`"),
            )
        })
    }

    pub(crate) fn amount(&mut self, key: &'a str) -> Result<Amount, ParseError> {
        let v = self.require(key)?;
        self.as_u128(key, v).map(Amount::new)
    }

    /// Non-negative integer, or a string of decimal digits for values that
    /// exceed TOML's 64-bit signed integers.
    pub(crate) fn as_u128(&self, key: &str, v: &Value<'i>) -> Result<u128, ParseError> {
        let parsed = match v.get_ref() {
            DeValue::Integer(i) => u128::from_str_radix(i.as_str(), i.radix()).ok(),
            DeValue::String(s) if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) => {
                s.parse().ok()
            }
            other => return Err(self.mismatch(key, "a non-negative integer", other, v.span())),
        };
        parsed.ok_or_else(|| {
            self.err(
                ParseErrorKind::InvalidValue,
                v.span(),
                format!("`{key}` must be a non-negative integer below 2^128"),
            )
        })
    }

    pub(crate) fn array(&mut self, key: &'a str) -> Result<Option<&'a [Value<'i>]>, ParseError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => match v.get_ref() {
                DeValue::Array(a) => Ok(Some(&a[..])),
                other => Err(self.mismatch(key, "an array", other, v.span())),
            },
        }
    }

    fn mismatch(&self, key: &str, want: &str, got: &DeValue<'_>, span: Range<usize>) -> ParseError {
        self.err(
            ParseErrorKind::InvalidValue,
            span,
            format!("`{key}` must be {want}, found {}", got.type_str()),
        )
    }

    /// Fails on the first key that was never read.
    pub(crate) fn finish(self) -> Result<(), ParseError> {
        for (k, _) in self.table.iter() {
            if !self.used.contains(k.get_ref().as_ref()) {
                return Err(self.src.error(
                    ParseErrorKind::UnknownKey,
                    k.span(),
                    format!("unknown key `{}` in {}", k.get_ref(), self.what),
                ));
            }
        }
        Ok(())
    }
}

/// Parses a pipeline spec.
pub fn parse(text: &str) -> Result<PipelineSpec, ParseError> {
    let src = Source::new(text);
    let doc = src.document()?;
    let mut root = Fields::new(&src, doc.get_ref(), 0..0, "document");

    let header = root.require("pipeline")?;
    let mut header = Fields::of(&src, header, "[pipeline]")?;
    let name = header.required_string("name")?;
    header.finish()?;

    let mut spec = PipelineSpec::new(name);
    if let Some(balances) = root.get("balances") {
        let balances = Fields::of(&src, balances, "[balances]")?;
        for (k, v) in balances.table.iter() {
            let account = Address::parse(k.get_ref()).ok_or_else(|| {
                src.error(ParseErrorKind::InvalidValue, k.span(), "empty account name")
            })?;
            let amount = balances.as_u128(k.get_ref(), v)?;
            spec.initial_balances.insert(account, Amount::new(amount));
        }
    }
    if let Some(nodes) = root.array("node")? {
        for node in nodes {
            spec.nodes.push(parse_node(&src, node)?);
        }
    }
    root.finish()?;
    Ok(spec)
}

fn parse_node<'i>(src: &Source<'i>, value: &Value<'i>) -> Result<NodeSpec, ParseError> {
    let empty = DeTable::new();
    let mut f = Fields::of(src, value, "[[node]]")?;
    let id = f.required_string("id")?;
    if id.is_empty() {
        return Err(f.err(
            ParseErrorKind::InvalidValue,
            f.span(),
            "node id must be non-empty",
        ));
    }
    let kind_value = f.require("kind")?;
    let kind = f.as_string("kind", kind_value)?;
    let role = match kind.as_str() {
        "originator" => NodeRole::Originator,
        "endpoint" => {
            let mode_value = f.require("mode")?;
            let mode = f.as_string("mode", mode_value)?;
            let mode = EndpointMode::parse(&mode).ok_or_else(|| {
                f.err(
                    ParseErrorKind::InvalidValue,
                    mode_value.span(),
                    format!("endpoint mode must be `direct` or `claimable`, found `{mode}`"),
                )
            })?;
            NodeRole::Endpoint(EndpointConfig {
                mode,
                recipient: f.address("recipient")?,
            })
        }
        "router" => {
            let t_value = f.require("template")?;
            let t = f.as_string("template", t_value)?;
            let name = TemplateName::parse(&t).ok_or_else(|| {
                f.err(
                    ParseErrorKind::UnknownTemplate,
                    t_value.span(),
                    format!("unknown template `{t}`"),
                )
            })?;
            let config = match f.get("config") {
                Some(v) => Fields::of(src, v, format!("config of `{id}`"))?,
                None => Fields::new(src, &empty, f.span(), format!("config of `{id}`")),
            };
            NodeRole::Router(parse_template(name, config)?)
        }
        other => {
            return Err(f.err(
                ParseErrorKind::InvalidValue,
                kind_value.span(),
                format!("node kind must be originator, router or endpoint, found `{other}`"),
            ))
        }
    };

    let mut node = NodeSpec::new(id.clone(), role);
    if let Some(outputs) = f.array("outputs")? {
        for out in outputs {
            let mut o = Fields::of(src, out, format!("output of `{id}`"))?;
            let tag = o.required_string("tag")?;
            let to = o.required_string("to")?;
            o.finish()?;
            if node.outputs.iter().any(|x| x.tag == tag) {
                return Err(src.error(
                    ParseErrorKind::InvalidValue,
                    out.span(),
                    format!("output tag `{tag}` is declared twice on `{id}`"),
                ));
            }
            node.outputs.push(OutputSpec { tag, to });
        }
    }
    if let Some(policy) = f.get("error_policy") {
        let p = Fields::of(src, policy, format!("error policy of `{id}`"))?;
        node.error_policy = parse_policy(p)?;
    }
    f.finish()?;
    Ok(node)
}

fn parse_policy(mut f: Fields<'_, '_>) -> Result<ErrorPolicy, ParseError> {
    let mut policy = ErrorPolicy::default();
    for severity in [
        ErrorSeverity::Warning,
        ErrorSeverity::Recoverable,
        ErrorSeverity::Fatal,
    ] {
        let Some(v) = f.get(severity.as_str()) else {
            continue;
        };
        let text = f.as_string(severity.as_str(), v)?;
        let action = PolicyAction::parse(&text).ok_or_else(|| {
            f.err(
                ParseErrorKind::InvalidValue,
                v.span(),
                format!("unknown policy action `{text}`"),
            )
        })?;
        match severity {
            ErrorSeverity::Warning => policy.warning = Some(action),
            ErrorSeverity::Recoverable => policy.recoverable = Some(action),
            ErrorSeverity::Fatal => policy.fatal = Some(action),
        }
    }
    f.finish()?;
    Ok(policy)
}

fn parse_template(name: TemplateName, mut f: Fields<'_, '_>) -> Result<TemplateConfig, ParseError> {
    let config = match name {
        TemplateName::Reporting => {
            let sink = f.required_string("sink")?;
            let mut keys = Vec::new();
            if let Some(items) = f.array("keys")? {
                for k in items {
                    keys.push(f.as_string("keys", k)?);
                }
            }
            TemplateConfig::Reporting(ReportingConfig { sink, keys })
        }
        TemplateName::TimeLock => {
            let start = f.u64("start")?.unwrap_or(0);
            let period = f.required_u64("period")?;
            let releases = f.required_u64("releases")?;
            let releases = u32::try_from(releases).map_err(|_| {
                f.err(
                    ParseErrorKind::InvalidValue,
                    f.span(),
                    "`releases` does not fit in 32 bits",
                )
            })?;
            let v = f.require("per_release")?;
            let per_release = parse_release(&f, v)?;
            TemplateConfig::TimeLock(TimeLockConfig {
                start,
                period,
                releases,
                per_release,
            })
        }
        TemplateName::Threshold => TemplateConfig::Threshold(ThresholdConfig {
            threshold: f.amount("threshold")?,
        }),
        TemplateName::Distributing => {
            let mut shares = Vec::new();
            let items = f.array("shares")?.unwrap_or_default();
            for item in items {
                let mut s = Fields::of(f.src, item, "share")?;
                let tag = s.required_string("tag")?;
                let mut rules = Vec::new();
                if let Some(v) = s.get("weight") {
                    let w = s.as_u128("weight", v)?;
                    let w = u64::try_from(w).map_err(|_| {
                        s.err(
                            ParseErrorKind::InvalidValue,
                            v.span(),
                            "`weight` does not fit in 64 bits",
                        )
                    })?;
                    rules.push(ShareRule::Weight(w));
                }
                if let Some(v) = s.get("fixed") {
                    rules.push(ShareRule::Fixed(Amount::new(s.as_u128("fixed", v)?)));
                }
                if s.bool("residual")? == Some(true) {
                    rules.push(ShareRule::Residual);
                }
                if rules.len() != 1 {
                    return Err(s.err(
                        ParseErrorKind::InvalidValue,
                        item.span(),
                        format!(
                            "share `{tag}` needs exactly one of weight, fixed or residual = true"
                        ),
                    ));
                }
                s.finish()?;
                shares.push(Share {
                    tag,
                    rule: rules[0],
                });
            }
            TemplateConfig::Distributing(DistributionConfig {
                shares,
                allow_single: f.bool("allow_single")?.unwrap_or(false),
            })
        }
        TemplateName::Conditional => {
            let v = f.require("predicate")?;
            let text = f.as_string("predicate", v)?;
            let predicate: Predicate =
                text.parse()
                    .map_err(|e: crate::templates::PredicateParseError| {
                        f.err(
                            ParseErrorKind::InvalidValue,
                            v.span(),
                            format!("bad predicate: {e}"),
                        )
                    })?;
            let on_false = match f.get("on_false") {
                None => ErrorSeverity::Recoverable,
                Some(v) => {
                    let s = f.as_string("on_false", v)?;
                    ErrorSeverity::parse(&s).ok_or_else(|| {
                        f.err(
                            ParseErrorKind::InvalidValue,
                            v.span(),
                            format!("unknown severity `{s}`"),
                        )
                    })?
                }
            };
            TemplateConfig::Conditional(ConditionConfig {
                predicate,
                on_false,
            })
        }
        TemplateName::Oracle => {
            let mut trusted = BTreeSet::new();
            for v in f.array("trusted")?.unwrap_or_default() {
                trusted.insert(f.as_address("trusted", v)?);
            }
            TemplateConfig::Oracle(OracleConfig { trusted })
        }
        TemplateName::Waterfall => {
            let mut tiers = Vec::new();
            for item in f.array("tiers")?.unwrap_or_default() {
                let mut t = Fields::of(f.src, item, "tier")?;
                let tag = t.required_string("tag")?;
                let cap = match t.get("cap") {
                    Some(v) => Some(Amount::new(t.as_u128("cap", v)?)),
                    None => None,
                };
                t.finish()?;
                tiers.push(Tier { tag, cap });
            }
            TemplateConfig::Waterfall(WaterfallConfig { tiers })
        }
        TemplateName::Goalkeeper => {
            let v = f.require("strategy")?;
            let strategy = match f.as_string("strategy", v)?.as_str() {
                "refund" => GoalkeeperStrategy::RefundToOrigin,
                "hold" => GoalkeeperStrategy::HoldForAdmin(f.address("admin")?),
                "forward" => GoalkeeperStrategy::ForwardTo(f.required_string("sink")?),
                other => {
                    return Err(f.err(
                        ParseErrorKind::InvalidValue,
                        v.span(),
                        format!(
                            "goalkeeper strategy must be refund, hold or forward, found `{other}`"
                        ),
                    ))
                }
            };
            TemplateConfig::Goalkeeper(GoalkeeperConfig { strategy })
        }
    };
    f.finish()?;
    Ok(config)
}

/// `per_release` is an amount, or a fraction `"p/q"` of the held balance.
fn parse_release(f: &Fields<'_, '_>, v: &Value<'_>) -> Result<ReleaseAmount, ParseError> {
    if let DeValue::String(s) = v.get_ref() {
        if let Some((p, q)) = s.split_once('/') {
            let bad = || {
                f.err(
                    ParseErrorKind::InvalidValue,
                    v.span(),
                    format!("fraction `{s}` must be `p/q` with 64-bit integers"),
                )
            };
            let num = p.trim().parse().map_err(|_| bad())?;
            let den = q.trim().parse().map_err(|_| bad())?;
            return Ok(ReleaseAmount::Fraction { num, den });
        }
    }
    Ok(ReleaseAmount::Fixed(Amount::new(
        f.as_u128("per_release", v)?,
    )))
}

/// Table of metadata scalars: strings stay strings, everything else must
/// be an amount.
pub(crate) fn read_metadata(
    f: &Fields<'_, '_>,
    key: &str,
    v: &Value<'_>,
) -> Result<BTreeMap<String, crate::event::Scalar>, ParseError> {
    let DeValue::Table(t) = v.get_ref() else {
        return Err(f.err(
            ParseErrorKind::InvalidValue,
            v.span(),
            format!("`{key}` must be a table"),
        ));
    };
    let mut out = BTreeMap::new();
    for (k, item) in t.iter() {
        let scalar = match item.get_ref() {
            DeValue::String(s) => crate::event::Scalar::Str(s.to_string()),
            _ => crate::event::Scalar::Int(f.as_u128(k.get_ref(), item)?),
        };
        out.insert(k.get_ref().to_string(), scalar);
    }
    Ok(out)
}
