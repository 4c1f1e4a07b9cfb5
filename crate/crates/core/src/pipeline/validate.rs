use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::nodes::{NodeKind, PolicyAction};
use crate::templates::TemplateName;

use super::{NodeRole, PipelineSpec};

/// Machine-readable validation codes. The spelling is stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValidationCode {
    DuplicateId,
    UnknownTarget,
    CycleDetected,
    ArityViolation,
    BadConfig,
    MultipleOriginators,
    UnreachableNode,
}

impl ValidationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidationCode::DuplicateId => "DuplicateId",
            ValidationCode::UnknownTarget => "UnknownTarget",
            ValidationCode::CycleDetected => "CycleDetected",
            ValidationCode::ArityViolation => "ArityViolation",
            ValidationCode::BadConfig => "BadConfig",
            ValidationCode::MultipleOriginators => "MultipleOriginators",
            ValidationCode::UnreachableNode => "UnreachableNode",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub code: ValidationCode,
    /// Node id, or `from->to` for an edge.
    pub location: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    /// `CODE location: message`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {}",
            self.code.as_str(),
            self.location,
            self.message
        )
    }
}

/// Edge of the pipeline graph: a declared output or an error redirect.
struct Edge {
    from: usize,
    to: usize,
}

/// Checks a spec and returns every problem found; an empty list means the
/// spec can be instantiated.
///
/// Checks run in a fixed order: id uniqueness, edge targets, single
/// originator, arity, acyclicity, template configs, reachability. Redirect
/// targets of error policies count as edges for arity, cycles and
/// reachability.
pub fn validate(spec: &PipelineSpec) -> Vec<ValidationError> {
    let mut errors = Vec::new();
    let mut push = |code, location: &str, message: String| {
        errors.push(ValidationError {
            code,
            location: location.to_string(),
            message,
        })
    };

    // ids; the first occurrence of a duplicated id wins for resolution
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, n) in spec.nodes.iter().enumerate() {
        if index.contains_key(n.id.as_str()) {
            push(
                ValidationCode::DuplicateId,
                &n.id,
                format!("node id `{}` is declared more than once", n.id),
            );
        } else {
            index.insert(&n.id, i);
        }
    }

    // targets
    let mut edges = Vec::new();
    for (i, n) in spec.nodes.iter().enumerate() {
        for o in &n.outputs {
            match index.get(o.to.as_str()) {
                Some(&j) => edges.push(Edge { from: i, to: j }),
                None => push(
                    ValidationCode::UnknownTarget,
                    &format!("{}->{}", n.id, o.to),
                    format!("output `{}` targets unknown node `{}`", o.tag, o.to),
                ),
            }
        }
        for target in n.error_policy.redirect_targets() {
            match index.get(target) {
                Some(&j) => edges.push(Edge { from: i, to: j }),
                None => push(
                    ValidationCode::UnknownTarget,
                    &format!("{}->{}", n.id, target),
                    format!("error policy redirects to unknown node `{target}`"),
                ),
            }
        }
    }

    // originator
    let originators: Vec<usize> = spec
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.kind() == NodeKind::Originator)
        .map(|(i, _)| i)
        .collect();
    if originators.len() != 1 {
        let location = originators
            .get(1)
            .map(|&i| spec.nodes[i].id.as_str())
            .unwrap_or(spec.name.as_str());
        push(
            ValidationCode::MultipleOriginators,
            location,
            format!(
                "expected exactly one originator, found {}",
                originators.len()
            ),
        );
    }

    // arity
    let mut incoming = vec![0usize; spec.nodes.len()];
    for e in &edges {
        incoming[e.to] += 1;
    }
    for (i, n) in spec.nodes.iter().enumerate() {
        if index[n.id.as_str()] != i {
            // shadowed duplicate, already reported
            continue;
        }
        let outs = n.outputs.len();
        let problem = match &n.role {
            NodeRole::Originator if incoming[i] > 0 => {
                Some(format!("originator has {} incoming edges", incoming[i]))
            }
            NodeRole::Originator if outs != 1 => Some(format!(
                "originator must have exactly 1 output, found {outs}"
            )),
            NodeRole::Router(_) if incoming[i] == 0 => Some("router has no incoming edge".into()),
            NodeRole::Router(t) if outs == 0 && !t.allows_no_outputs() => {
                Some("router has no outputs".into())
            }
            NodeRole::Endpoint(_) if incoming[i] == 0 => {
                Some("endpoint has no incoming edge".into())
            }
            NodeRole::Endpoint(_) if outs > 0 => {
                Some(format!("endpoint must have no outputs, found {outs}"))
            }
            _ => None,
        };
        if let Some(message) = problem {
            push(ValidationCode::ArityViolation, &n.id, message);
        }
    }

    // acyclicity: iterative DFS, report each back edge
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); spec.nodes.len()];
    for e in &edges {
        adjacency[e.from].push(e.to);
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Grey,
        Black,
    }
    let mut color = vec![Color::White; spec.nodes.len()];
    for root in 0..spec.nodes.len() {
        if color[root] != Color::White {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        color[root] = Color::Grey;
        while let Some((u, next)) = stack.pop() {
            if let Some(&v) = adjacency[u].get(next) {
                stack.push((u, next + 1));
                match color[v] {
                    Color::White => {
                        color[v] = Color::Grey;
                        stack.push((v, 0));
                    }
                    Color::Grey => push(
                        ValidationCode::CycleDetected,
                        &spec.nodes[u].id,
                        format!(
                            "back edge {} -> {} closes a loop",
                            spec.nodes[u].id, spec.nodes[v].id
                        ),
                    ),
                    Color::Black => {}
                }
            } else {
                color[u] = Color::Black;
            }
        }
    }

    // configs
    for n in &spec.nodes {
        if n.id.is_empty() {
            push(
                ValidationCode::BadConfig,
                &n.id,
                "node id must be non-empty".into(),
            );
        }
        let mut tags = BTreeSet::new();
        for o in &n.outputs {
            if !tags.insert(o.tag.as_str()) {
                push(
                    ValidationCode::BadConfig,
                    &n.id,
                    format!("output tag `{}` is used twice", o.tag),
                );
            }
        }
        if let NodeRole::Router(t) = &n.role {
            let tags: Vec<&str> = n.outputs.iter().map(|o| o.tag.as_str()).collect();
            for message in t.check(&tags) {
                push(ValidationCode::BadConfig, &n.id, message);
            }
        }
        if let Some(action) = &n.error_policy.fatal {
            if *action != PolicyAction::Revert {
                push(
                    ValidationCode::BadConfig,
                    &n.id,
                    format!("fatal errors always revert, `{action}` is not allowed"),
                );
            }
        }
        for target in n.error_policy.redirect_targets() {
            let Some(&j) = index.get(target) else {
                continue;
            };
            let ok = match &spec.nodes[j].role {
                NodeRole::Endpoint(_) => true,
                NodeRole::Router(t) => t.name() == TemplateName::Goalkeeper,
                NodeRole::Originator => false,
            };
            if !ok {
                push(
                    ValidationCode::BadConfig,
                    &n.id,
                    format!(
                        "redirect target `{target}` must be a goalkeeper router or an endpoint"
                    ),
                );
            }
        }
    }

    // reachability
    if let [origin] = originators[..] {
        let mut seen = vec![false; spec.nodes.len()];
        let mut queue = VecDeque::from([origin]);
        seen[origin] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        for (i, n) in spec.nodes.iter().enumerate() {
            // duplicates are already reported and never resolved
            if !seen[i] && index.get(n.id.as_str()) == Some(&i) {
                push(
                    ValidationCode::UnreachableNode,
                    &n.id,
                    "not reachable from the originator".into(),
                );
            }
        }
    }

    errors
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::{Address, Amount};
    use crate::nodes::{EndpointConfig, EndpointMode};
    use crate::pipeline::NodeSpec;
    use crate::templates::{
        DistributionConfig, ReportingConfig, Share, ShareRule, TemplateConfig, ThresholdConfig,
    };

    fn reporting() -> NodeRole {
        NodeRole::Router(TemplateConfig::Reporting(ReportingConfig {
            sink: "tax".into(),
            keys: vec![],
        }))
    }

    fn endpoint(who: &str) -> NodeRole {
        NodeRole::Endpoint(EndpointConfig {
            mode: EndpointMode::Direct,
            recipient: Address::new(who),
        })
    }

    fn codes(spec: &PipelineSpec) -> Vec<ValidationCode> {
        validate(spec).into_iter().map(|e| e.code).collect()
    }

    #[test]
    fn minimal_pipeline_is_valid() {
        let spec = PipelineSpec::new("min")
            .node(NodeSpec::new("o", NodeRole::Originator).output("out", "e"))
            .node(NodeSpec::new("e", endpoint("bob")));
        assert_eq!(validate(&spec), vec![]);
    }

    #[test]
    fn cycle_names_the_back_edge() {
        let spec = PipelineSpec::new("loop")
            .node(NodeSpec::new("o", NodeRole::Originator).output("out", "r1"))
            .node(NodeSpec::new("r1", reporting()).output("out", "r2"))
            .node(NodeSpec::new("r2", reporting()).output("out", "r1"));
        let errs = validate(&spec);
        let cycle: Vec<_> = errs
            .iter()
            .filter(|e| e.code == ValidationCode::CycleDetected)
            .collect();
        assert_eq!(cycle.len(), 1);
        assert_eq!(cycle[0].location, "r2");
        assert!(cycle[0].message.contains("r2 -> r1"));
    }

    #[test]
    fn endpoint_with_output_is_an_arity_violation() {
        let spec = PipelineSpec::new("bad")
            .node(NodeSpec::new("o", NodeRole::Originator).output("out", "e"))
            .node(NodeSpec::new("e", endpoint("bob")).output("x", "f"))
            .node(NodeSpec::new("f", endpoint("carol")));
        assert_eq!(codes(&spec), vec![ValidationCode::ArityViolation]);
    }

    #[test]
    fn distributor_with_one_output_is_bad_config() {
        let dist = NodeRole::Router(TemplateConfig::Distributing(DistributionConfig {
            shares: vec![Share {
                tag: "a".into(),
                rule: ShareRule::Weight(1),
            }],
            allow_single: false,
        }));
        let spec = PipelineSpec::new("d")
            .node(NodeSpec::new("o", NodeRole::Originator).output("out", "d"))
            .node(NodeSpec::new("d", dist).output("a", "e"))
            .node(NodeSpec::new("e", endpoint("bob")));
        let errs = validate(&spec);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].code, ValidationCode::BadConfig);
        assert!(errs[0].message.contains("requires >=2 outputs"));
    }

    #[test]
    fn duplicates_unknown_targets_and_originator_count() {
        let spec = PipelineSpec::new("d")
            .node(NodeSpec::new("o", NodeRole::Originator).output("out", "r1"))
            .node(NodeSpec::new("r1", reporting()).output("out", "ghost"))
            .node(NodeSpec::new("r1", reporting()).output("out", "e"))
            .node(NodeSpec::new("o2", NodeRole::Originator).output("out", "e"))
            .node(NodeSpec::new("e", endpoint("bob")));
        let errs = validate(&spec);
        assert_eq!(errs[0].code, ValidationCode::DuplicateId);
        assert_eq!(errs[0].location, "r1");
        assert_eq!(errs[1].code, ValidationCode::UnknownTarget);
        assert_eq!(errs[1].location, "r1->ghost");
        assert!(errs
            .iter()
            .any(|e| e.code == ValidationCode::MultipleOriginators));
    }

    #[test]
    fn unreachable_nodes_are_errors() {
        let thr = NodeRole::Router(TemplateConfig::Threshold(ThresholdConfig {
            threshold: Amount::new(5),
        }));
        let spec = PipelineSpec::new("u")
            .node(NodeSpec::new("o", NodeRole::Originator).output("out", "e"))
            .node(NodeSpec::new("e", endpoint("bob")))
            .node(NodeSpec::new("island", thr).output("out", "e"));
        let errs = validate(&spec);
        assert_eq!(errs.len(), 2, "{errs:?}");
        assert!(errs
            .iter()
            .any(|e| e.code == ValidationCode::UnreachableNode && e.location == "island"));
    }

    #[test]
    fn display_is_code_location_message() {
        let e = ValidationError {
            code: ValidationCode::CycleDetected,
            location: "r2".into(),
            message: "back edge r2 -> r1 closes a loop".into(),
        };
        assert_eq!(
            e.to_string(),
            "CycleDetected r2: back edge r2 -> r1 closes a loop"
        );
    }
}
