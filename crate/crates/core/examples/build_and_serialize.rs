//! Build a pipeline in code, check it and write it out in the text format.

use streampay::nodes::{EndpointConfig, EndpointMode};
use streampay::pipeline::{parse, serialize, validate, NodeRole, NodeSpec, PipelineSpec};
use streampay::templates::{DistributionConfig, Share, ShareRule, TemplateConfig};
use streampay::Address;

fn endpoint(id: &str, who: &str) -> NodeSpec {
    NodeSpec::new(
        id,
        NodeRole::Endpoint(EndpointConfig {
            mode: EndpointMode::Direct,
            recipient: Address::new(who),
        }),
    )
}

fn main() {
    let split = TemplateConfig::Distributing(DistributionConfig {
        shares: vec![
            Share {
                tag: "a".into(),
                rule: ShareRule::Weight(2),
            },
            Share {
                tag: "b".into(),
                rule: ShareRule::Weight(1),
            },
        ],
        allow_single: false,
    });
    let spec = PipelineSpec::new("two-to-one")
        .node(NodeSpec::new("src", NodeRole::Originator).output("out", "split"))
        .node(
            NodeSpec::new("split", NodeRole::Router(split))
                .output("a", "payA")
                .output("b", "payB"),
        )
        .node(endpoint("payA", "ann"))
        .node(endpoint("payB", "ben"))
        .balance("alice", 300);

    assert!(validate(&spec).is_empty());
    let text = serialize(&spec);
    print!("{text}");
    assert_eq!(parse(&text).unwrap(), spec);
}
