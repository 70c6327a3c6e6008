//! Reader for the line-delimited argument-map format.
//!
//! Every line is one record, either a node or an edge:
//!
//! ```text
//! {"kind":"node","id":"L1","node_kind":"locution","text":"TRUMP: we're losing our jobs","speaker":"TRUMP"}
//! {"kind":"node","id":"I1","node_kind":"information","text":"We're losing our jobs"}
//! {"kind":"node","id":"RA1","node_kind":"inference","text":"Default Inference","scheme_label":"CauseToEffect"}
//! {"kind":"edge","from":"I2","to":"RA1"}
//! ```
//!
//! Node kinds outside the five known ones are kept as [`NodeKind::Opaque`]
//! and ignored by the later stages.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Information,
    Locution,
    Inference,
    Transition,
    Illocution,
    Opaque(String),
}

impl NodeKind {
    fn parse(s: &str) -> NodeKind {
        match s {
            "information" => NodeKind::Information,
            "locution" => NodeKind::Locution,
            "inference" => NodeKind::Inference,
            "transition" => NodeKind::Transition,
            "illocution" => NodeKind::Illocution,
            other => NodeKind::Opaque(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            NodeKind::Information => "information",
            NodeKind::Locution => "locution",
            NodeKind::Inference => "inference",
            NodeKind::Transition => "transition",
            NodeKind::Illocution => "illocution",
            NodeKind::Opaque(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub text: String,
    pub scheme_label: Option<String>,
    pub speaker: Option<String>,
}

impl Node {
    /// Speaker of a locution: the explicit field, else the `NAME:` prefix of
    /// the locution text.
    pub fn speaker(&self) -> Option<&str> {
        if let Some(s) = self.speaker.as_deref() {
            return Some(s.trim());
        }
        let (head, _) = self.text.split_once(':')?;
        let head = head.trim();
        (!head.is_empty() && head.len() <= 40).then_some(head)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
}

/// Wire form of one line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Record {
    Node {
        id: String,
        node_kind: String,
        #[serde(default)]
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scheme_label: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        speaker: Option<String>,
    },
    Edge {
        from: String,
        to: String,
    },
}

#[derive(Debug, Clone, Default)]
pub struct NodeSet {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
}

impl NodeSet {
    /// Builds a node set and checks its structural invariants.
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<NodeSet, CorpusError> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateNode(n.id.clone()));
            }
            if n.scheme_label.is_some() && n.kind != NodeKind::Inference {
                return Err(CorpusError::MisplacedSchemeLabel(n.id.clone()));
            }
        }
        for e in &edges {
            for end in [&e.from, &e.to] {
                if !index.contains_key(end) {
                    return Err(CorpusError::DanglingEdge(end.clone()));
                }
            }
        }
        Ok(NodeSet { nodes, edges, index })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn records(&self) -> Vec<Record> {
        let nodes = self.nodes.iter().map(|n| Record::Node {
            id: n.id.clone(),
            node_kind: n.kind.as_str().to_string(),
            text: n.text.clone(),
            scheme_label: n.scheme_label.clone(),
            speaker: n.speaker.clone(),
        });
        let edges = self.edges.iter().map(|e| Record::Edge { from: e.from.clone(), to: e.to.clone() });
        nodes.chain(edges).collect()
    }

    pub fn from_records(records: Vec<Record>) -> Result<NodeSet, CorpusError> {
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for r in records {
            match r {
                Record::Node { id, node_kind, text, scheme_label, speaker } => {
                    nodes.push(Node { id, kind: NodeKind::parse(&node_kind), text, scheme_label, speaker })
                }
                Record::Edge { from, to } => edges.push(Edge { from, to }),
            }
        }
        NodeSet::new(nodes, edges)
    }
}

/// Parses one argument-map file.
///
/// Syntax errors carry the byte offset of the failure within `raw`; a
/// structurally broken file (dangling edge, duplicate id) names the offending
/// node id.
pub fn parse_nodeset(raw: &[u8]) -> Result<NodeSet, CorpusError> {
    let text = std::str::from_utf8(raw)
        .map_err(|e| CorpusError::Parse { offset: e.valid_up_to(), message: "invalid UTF-8".to_string() })?;
    let mut records = Vec::new();
    let mut offset = 0usize;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let body = line.trim_end_matches(['\n', '\r']);
        if body.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(body)
            .map_err(|e| CorpusError::Parse { offset: start + e.column().saturating_sub(1), message: e.to_string() })?;
        records.push(rec);
    }
    NodeSet::from_records(records)
}

/// Converts an AIF-style nested document (`nodes` / `edges` / `locutions`
/// arrays with `nodeID`, `type`, `fromID`, `toID`) into line records.
///
/// Only the fields the pipeline uses are carried over; the AIF node types map
/// as I → information, L → locution, RA → inference, YA → illocution,
/// TA → transition, and everything else (CA, MA, ...) to an opaque kind.
pub fn aif_to_records(doc: &serde_json::Value) -> Result<Vec<Record>, CorpusError> {
    let bad = |m: &str| CorpusError::Parse { offset: 0, message: m.to_string() };
    let str_field = |v: &serde_json::Value, k: &str| -> Option<String> {
        match v.get(k)? {
            serde_json::Value::String(s) => Some(s.clone()),
            serde_json::Value::Number(n) => Some(n.to_string()),
            _ => None,
        }
    };
    let nodes = doc.get("nodes").and_then(|v| v.as_array()).ok_or_else(|| bad("AIF document without nodes"))?;
    let edges = doc.get("edges").and_then(|v| v.as_array()).ok_or_else(|| bad("AIF document without edges"))?;

    let mut speakers = HashMap::new();
    if let Some(locs) = doc.get("locutions").and_then(|v| v.as_array()) {
        for l in locs {
            if let (Some(id), Some(p)) = (str_field(l, "nodeID"), str_field(l, "personID")) {
                speakers.insert(id, p);
            }
        }
    }

    let mut out = Vec::with_capacity(nodes.len() + edges.len());
    for n in nodes {
        let id = str_field(n, "nodeID").ok_or_else(|| bad("AIF node without nodeID"))?;
        let ty = str_field(n, "type").unwrap_or_default();
        let text = str_field(n, "text").unwrap_or_default();
        let node_kind = match ty.as_str() {
            "I" => "information".to_string(),
            "L" => "locution".to_string(),
            "RA" => "inference".to_string(),
            "YA" => "illocution".to_string(),
            "TA" => "transition".to_string(),
            other => other.to_lowercase(),
        };
        let scheme_label = (ty == "RA").then(|| str_field(n, "scheme").unwrap_or_else(|| text.clone()));
        let speaker = speakers.get(&id).cloned();
        out.push(Record::Node { id, node_kind, text, scheme_label, speaker });
    }
    for e in edges {
        let from = str_field(e, "fromID").ok_or_else(|| bad("AIF edge without fromID"))?;
        let to = str_field(e, "toID").ok_or_else(|| bad("AIF edge without toID"))?;
        out.push(Record::Edge { from, to });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{"kind":"node","id":"I1","node_kind":"information","text":"people are pouring into our country"}
{"kind":"node","id":"I2","node_kind":"information","text":"we're losing our jobs"}
{"kind":"node","id":"RA1","node_kind":"inference","text":"Default Inference","scheme_label":"CauseToEffect"}
{"kind":"edge","from":"I1","to":"RA1"}
{"kind":"edge","from":"RA1","to":"I2"}
"#;

    #[test]
    fn parses_small_map() {
        let ns = parse_nodeset(SMALL.as_bytes()).unwrap();
        assert_eq!(ns.nodes().len(), 3);
        assert_eq!(ns.edges().len(), 2);
        assert_eq!(ns.node("RA1").unwrap().scheme_label.as_deref(), Some("CauseToEffect"));
    }

    #[test]
    fn dangling_edge_names_missing_id() {
        let raw = format!("{SMALL}{}\n", r#"{"kind":"edge","from":"I1","to":"X9"}"#);
        match parse_nodeset(raw.as_bytes()) {
            Err(CorpusError::DanglingEdge(id)) => assert_eq!(id, "X9"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_byte_offset() {
        let good = r#"{"kind":"node","id":"I1","node_kind":"information","text":"a"}"#;
        let raw = format!("{good}\n{{\"kind\":\"node\",\"id\":oops}}\n");
        match parse_nodeset(raw.as_bytes()) {
            Err(CorpusError::Parse { offset, .. }) => {
                // the error lies inside the second line
                assert!(offset > good.len() && offset < raw.len(), "offset {offset}");
                assert_eq!(&raw[offset..offset + 1], "o");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_node_kinds_are_opaque() {
        let raw = r#"{"kind":"node","id":"CA1","node_kind":"conflict","text":"Default Conflict"}"#;
        let ns = parse_nodeset(raw.as_bytes()).unwrap();
        assert_eq!(ns.nodes()[0].kind, NodeKind::Opaque("conflict".into()));
    }

    #[test]
    fn scheme_label_only_on_inference() {
        let raw = r#"{"kind":"node","id":"I1","node_kind":"information","text":"x","scheme_label":"Sign"}"#;
        assert!(matches!(parse_nodeset(raw.as_bytes()), Err(CorpusError::MisplacedSchemeLabel(_))));
    }

    #[test]
    fn invalid_utf8_offset() {
        let mut raw = br#"{"kind":"node","id":"I1","node_kind":"information","text":""#.to_vec();
        let at = raw.len();
        raw.extend_from_slice(&[0xff, b'"', b'}']);
        match parse_nodeset(&raw) {
            Err(CorpusError::Parse { offset, .. }) => assert_eq!(offset, at),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn speaker_from_text_prefix() {
        let n = Node {
            id: "L1".into(),
            kind: NodeKind::Locution,
            text: "CLINTON : we need a fairer economy".into(),
            scheme_label: None,
            speaker: None,
        };
        assert_eq!(n.speaker(), Some("CLINTON"));
    }

    #[test]
    fn aif_conversion() {
        let doc = serde_json::json!({
            "nodes": [
                {"nodeID": "1", "text": "MT : it didn't flow", "type": "L"},
                {"nodeID": "2", "text": "it didn't flow", "type": "I"},
                {"nodeID": "3", "text": "Asserting", "type": "YA"},
                {"nodeID": "4", "text": "Default Inference", "type": "RA", "scheme": "Cause To Effect"},
                {"nodeID": "5", "text": "Default Conflict", "type": "CA"}
            ],
            "edges": [
                {"edgeID": "9", "fromID": "1", "toID": "3"},
                {"edgeID": "10", "fromID": "3", "toID": "2"}
            ],
            "locutions": [{"nodeID": "1", "personID": "MT"}]
        });
        let ns = NodeSet::from_records(aif_to_records(&doc).unwrap()).unwrap();
        assert_eq!(ns.node("1").unwrap().speaker(), Some("MT"));
        assert_eq!(ns.node("4").unwrap().scheme_label.as_deref(), Some("Cause To Effect"));
        assert_eq!(ns.node("5").unwrap().kind, NodeKind::Opaque("ca".into()));
        assert_eq!(ns.edges().len(), 2);
    }
}
