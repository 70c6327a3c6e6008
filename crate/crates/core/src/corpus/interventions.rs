//! Reconstruction of speaker interventions and their arguments.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use super::nodeset::{NodeKind, NodeSet};
use super::scheme::{map_scheme, SchemeId};
use crate::schemes::VariableSlot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SourceDataset {
    US2016,
    MoralMaze,
    #[serde(rename = "other")]
    Other,
}

impl SourceDataset {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceDataset::US2016 => "US2016",
            SourceDataset::MoralMaze => "MoralMaze",
            SourceDataset::Other => "other",
        }
    }

    /// Recognises a dataset from a directory name.
    pub fn from_dir_name(name: &str) -> Option<SourceDataset> {
        match name {
            "US2016" => Some(SourceDataset::US2016),
            "MoralMaze" => Some(SourceDataset::MoralMaze),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Interventions with more propositions than this are split.
    pub split_ceiling: usize,
    /// Interventions with fewer propositions than this are merged forward.
    pub merge_floor: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig { split_ceiling: 12, merge_floor: 2 }
    }
}

/// One speaker turn after splitting and merging.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intervention {
    pub id: String,
    pub speaker: String,
    pub source_dataset: SourceDataset,
    pub propositions: Vec<String>,
    /// Information-node ids, parallel to `propositions`.
    pub proposition_ids: Vec<String>,
    pub arguments: Vec<String>,
}

/// A scheme-labelled argument inside one intervention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentInstance {
    pub id: String,
    pub scheme: SchemeId,
    /// Indices into the owning intervention's propositions: premises first,
    /// the conclusion last.
    pub proposition_refs: Vec<usize>,
    pub intervention_id: String,
    #[serde(default)]
    pub bindings: BTreeMap<VariableSlot, String>,
    #[serde(default)]
    pub discarded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discard_reason: Option<String>,
}

impl ArgumentInstance {
    pub fn premise_refs(&self) -> &[usize] {
        &self.proposition_refs[..self.proposition_refs.len() - 1]
    }

    pub fn conclusion_ref(&self) -> usize {
        *self.proposition_refs.last().expect("arguments link at least two propositions")
    }
}

/// An inference node resolved to its information nodes, before it is placed
/// into an intervention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgumentLink {
    pub inference_id: String,
    pub scheme: SchemeId,
    pub premise_ids: Vec<String>,
    pub conclusion_id: String,
}

impl ArgumentLink {
    pub fn proposition_ids(&self) -> impl Iterator<Item = &str> {
        self.premise_ids.iter().map(String::as_str).chain(std::iter::once(self.conclusion_id.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedInference {
    pub inference_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub arguments: Vec<ArgumentLink>,
    pub skipped: Vec<SkippedInference>,
}

/// Collects one [`ArgumentLink`] per inference node whose scheme label maps
/// onto the canonical scheme set.
///
/// Incoming information nodes are premises and the outgoing one is the
/// conclusion. When that is ambiguous (no outgoing node, or several) the last
/// connected information node becomes the conclusion and a warning is logged.
/// Inference nodes with unmapped labels or fewer than two connected
/// propositions are skipped, one log line each.
pub fn extract_arguments(ns: &NodeSet) -> Extraction {
    let mut incoming: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut outgoing: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut connected: HashMap<&str, Vec<&str>> = HashMap::new();
    let is_info = |id: &str| ns.node(id).is_some_and(|n| n.kind == NodeKind::Information);
    for e in ns.edges() {
        if is_info(&e.from) {
            incoming.entry(e.to.as_str()).or_default().push(e.from.as_str());
            connected.entry(e.to.as_str()).or_default().push(e.from.as_str());
        }
        if is_info(&e.to) {
            outgoing.entry(e.from.as_str()).or_default().push(e.to.as_str());
            connected.entry(e.from.as_str()).or_default().push(e.to.as_str());
        }
    }

    let mut out = Extraction::default();
    for node in ns.nodes().iter().filter(|n| n.kind == NodeKind::Inference) {
        let label = node.scheme_label.as_deref().unwrap_or(&node.text);
        let scheme = match map_scheme(label) {
            Ok(s) => s,
            Err(_) => {
                debug!(node = %node.id, label, "inference without a known scheme skipped");
                out.skipped.push(SkippedInference {
                    inference_id: node.id.clone(),
                    reason: format!("unmapped scheme label {label:?}"),
                });
                continue;
            }
        };
        let id = node.id.as_str();
        let mut all: Vec<&str> = Vec::new();
        for n in connected.get(id).into_iter().flatten() {
            if !all.contains(n) {
                all.push(n);
            }
        }
        if all.len() < 2 {
            warn!(node = %node.id, "scheme-labelled inference links fewer than two propositions");
            out.skipped.push(SkippedInference {
                inference_id: node.id.clone(),
                reason: "fewer than two connected propositions".to_string(),
            });
            continue;
        }
        let outs = outgoing.get(id).map(Vec::as_slice).unwrap_or_default();
        let (premises, conclusion) = if outs.len() == 1 {
            let c = outs[0];
            (all.iter().copied().filter(|n| *n != c).collect::<Vec<_>>(), c)
        } else {
            warn!(node = %node.id, outgoing = outs.len(), "ambiguous argument direction; last connected proposition taken as conclusion");
            let c = *all.last().unwrap();
            (all[..all.len() - 1].to_vec(), c)
        };
        out.arguments.push(ArgumentLink {
            inference_id: node.id.clone(),
            scheme,
            premise_ids: premises.into_iter().map(str::to_string).collect(),
            conclusion_id: conclusion.to_string(),
        });
    }
    out
}

/// Interventions and arguments of one or more node sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub interventions: Vec<Intervention>,
    pub arguments: Vec<ArgumentInstance>,
}

impl Corpus {
    pub fn intervention(&self, id: &str) -> Option<&Intervention> {
        self.interventions.iter().find(|i| i.id == id)
    }

    pub fn argument(&self, id: &str) -> Option<&ArgumentInstance> {
        self.arguments.iter().find(|a| a.id == id)
    }

    pub fn arguments_of<'a>(&'a self, intervention: &'a Intervention) -> impl Iterator<Item = &'a ArgumentInstance> {
        intervention.arguments.iter().filter_map(|id| self.argument(id))
    }

    pub fn extend(&mut self, other: Corpus) {
        self.interventions.extend(other.interventions);
        self.arguments.extend(other.arguments);
    }
}

struct Chunk {
    speaker: String,
    /// (locution id, information node id) per proposition.
    props: Vec<(String, String)>,
    /// Arguments as positions into `props`.
    args: Vec<(ArgumentLink, Vec<usize>)>,
}

impl Chunk {
    fn absorb(&mut self, mut later: Chunk) {
        let shift = self.props.len();
        self.props.append(&mut later.props);
        for (link, refs) in later.args {
            self.args.push((link, refs.into_iter().map(|r| r + shift).collect()));
        }
    }
}

/// Groups locutions into interventions and attaches arguments to them.
///
/// Consecutive locutions by one speaker form a turn. Turns longer than
/// `split_ceiling` propositions are split into balanced chunks at proposition
/// boundaries that no argument crosses; afterwards each intervention shorter
/// than `merge_floor` is merged into the next intervention of the same speaker
/// when only other short interventions lie in between. Arguments whose
/// propositions fall into different turns are skipped and logged.
pub fn build_interventions(ns: &NodeSet, dataset: SourceDataset, cfg: &PreprocessConfig) -> Corpus {
    let anchored = anchor_propositions(ns);

    // turns from consecutive same-speaker locutions
    let mut turns: Vec<Chunk> = Vec::new();
    for (loc_id, speaker, props) in &anchored {
        if props.is_empty() {
            continue;
        }
        let entries = props.iter().map(|p| (loc_id.clone(), p.clone()));
        match turns.last_mut() {
            Some(t) if t.speaker == *speaker => t.props.extend(entries),
            _ => turns.push(Chunk { speaker: speaker.clone(), props: entries.collect(), args: Vec::new() }),
        }
    }

    let mut home: HashMap<&str, (usize, usize)> = HashMap::new();
    for (ti, t) in turns.iter().enumerate() {
        for (pi, (_, prop)) in t.props.iter().enumerate() {
            home.insert(prop.as_str(), (ti, pi));
        }
    }
    let mut placed: Vec<(usize, ArgumentLink, Vec<usize>)> = Vec::new();
    for link in extract_arguments(ns).arguments {
        let locs: Option<Vec<(usize, usize)>> = link.proposition_ids().map(|p| home.get(p).copied()).collect();
        let Some(locs) = locs else {
            warn!(node = %link.inference_id, "argument references propositions without a locution; skipped");
            continue;
        };
        let turn = locs[0].0;
        if locs.iter().any(|(t, _)| *t != turn) {
            warn!(node = %link.inference_id, "argument spans several speaker turns; skipped");
            continue;
        }
        placed.push((turn, link, locs.into_iter().map(|(_, p)| p).collect()));
    }
    for (turn, link, refs) in placed {
        turns[turn].args.push((link, refs));
    }

    let mut chunks: Vec<Chunk> = turns.into_iter().flat_map(|t| split_turn(t, cfg.split_ceiling)).collect();
    merge_short(&mut chunks, cfg.merge_floor);
    assemble(chunks, ns, dataset)
}

/// (locution id, speaker, anchored information node ids) in locution order.
fn anchor_propositions(ns: &NodeSet) -> Vec<(String, String, Vec<String>)> {
    let mut succ: HashMap<&str, Vec<&str>> = HashMap::new();
    for e in ns.edges() {
        succ.entry(e.from.as_str()).or_default().push(e.to.as_str());
    }
    let kind = |id: &str| ns.node(id).map(|n| &n.kind);
    let mut claimed: HashSet<&str> = HashSet::new();
    let mut out = Vec::new();
    for loc in ns.nodes().iter().filter(|n| n.kind == NodeKind::Locution) {
        let mut props = Vec::new();
        for &next in succ.get(loc.id.as_str()).into_iter().flatten() {
            let targets: Vec<&str> = match kind(next) {
                Some(NodeKind::Information) => vec![next],
                Some(NodeKind::Illocution) => succ
                    .get(next)
                    .into_iter()
                    .flatten()
                    .copied()
                    .filter(|t| kind(t) == Some(&NodeKind::Information))
                    .collect(),
                _ => Vec::new(),
            };
            for t in targets {
                if claimed.insert(t) {
                    props.push(t.to_string());
                }
            }
        }
        let speaker = loc.speaker().unwrap_or("UNKNOWN").to_string();
        out.push((loc.id.clone(), speaker, props));
    }
    out
}

/// Positions `c` (cut before proposition `c`) that keep every argument whole.
fn allowed_cuts(n: usize, args: &[(ArgumentLink, Vec<usize>)]) -> Vec<bool> {
    let mut ok = vec![true; n + 1];
    for (_, refs) in args {
        let lo = *refs.iter().min().unwrap();
        let hi = *refs.iter().max().unwrap();
        for c in ok.iter_mut().take(hi + 1).skip(lo + 1) {
            *c = false;
        }
    }
    ok
}

/// Split points for a turn of `n` propositions.
pub(crate) fn split_points(n: usize, ceiling: usize, allowed: &[bool]) -> Vec<usize> {
    let mut cuts = Vec::new();
    if ceiling == 0 {
        return cuts;
    }
    let mut start = 0;
    while n - start > ceiling {
        let rest = n - start;
        let parts = rest.div_ceil(ceiling);
        let ideal = start + rest.div_ceil(parts);
        let within = (start + 1..=start + ceiling).filter(|&c| allowed[c]);
        let best = within.min_by_key(|&c| (c.abs_diff(ideal), c));
        let cut = match best {
            Some(c) => c,
            None => match (start + ceiling + 1..n).find(|&c| allowed[c]) {
                Some(c) => c,
                None => break,
            },
        };
        cuts.push(cut);
        start = cut;
    }
    cuts
}

fn split_turn(turn: Chunk, ceiling: usize) -> Vec<Chunk> {
    let n = turn.props.len();
    if n <= ceiling {
        return vec![turn];
    }
    let cuts = split_points(n, ceiling, &allowed_cuts(n, &turn.args));
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(n);
    let mut chunks: Vec<Chunk> = bounds
        .windows(2)
        .map(|w| Chunk { speaker: turn.speaker.clone(), props: turn.props[w[0]..w[1]].to_vec(), args: Vec::new() })
        .collect();
    for (link, refs) in turn.args {
        let k = bounds.windows(2).position(|w| refs[0] >= w[0] && refs[0] < w[1]).unwrap();
        let base = bounds[k];
        chunks[k].args.push((link, refs.into_iter().map(|r| r - base).collect()));
    }
    chunks
}

fn merge_short(chunks: &mut Vec<Chunk>, floor: usize) {
    let mut slots: Vec<Option<Chunk>> = std::mem::take(chunks).into_iter().map(Some).collect();
    for i in 0..slots.len() {
        while let Some(cur) = slots[i].as_ref() {
            if cur.props.len() >= floor {
                break;
            }
            let speaker = cur.speaker.clone();
            let mut target = None;
            for (j, slot) in slots.iter().enumerate().skip(i + 1) {
                let Some(c) = slot else { continue };
                if c.speaker == speaker {
                    target = Some(j);
                    break;
                }
                if c.props.len() >= floor {
                    break;
                }
            }
            let Some(j) = target else { break };
            let later = slots[j].take().unwrap();
            slots[i].as_mut().unwrap().absorb(later);
        }
    }
    *chunks = slots.into_iter().flatten().collect();
}

fn assemble(chunks: Vec<Chunk>, ns: &NodeSet, dataset: SourceDataset) -> Corpus {
    let mut corpus = Corpus::default();
    let mut used: HashMap<String, usize> = HashMap::new();
    for chunk in chunks {
        let base = format!("{}-{}", dataset.as_str(), chunk.props[0].0);
        let seen = used.entry(base.clone()).or_insert(0);
        *seen += 1;
        let id = if *seen == 1 { base } else { format!("{base}.{seen}") };

        let mut arg_ids = Vec::new();
        for (link, refs) in chunk.args {
            let arg_id = format!("{}-{}", dataset.as_str(), link.inference_id);
            arg_ids.push(arg_id.clone());
            corpus.arguments.push(ArgumentInstance {
                id: arg_id,
                scheme: link.scheme,
                proposition_refs: refs,
                intervention_id: id.clone(),
                bindings: BTreeMap::new(),
                discarded: false,
                discard_reason: None,
            });
        }
        let (propositions, proposition_ids) =
            chunk.props.into_iter().map(|(_, p)| (ns.node(&p).map(|n| n.text.clone()).unwrap_or_default(), p)).unzip();
        corpus.interventions.push(Intervention {
            id,
            speaker: chunk.speaker,
            source_dataset: dataset,
            propositions,
            proposition_ids,
            arguments: arg_ids,
        });
    }
    corpus
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::nodeset::{Edge, Node};

    /// Minimal builder for hand-written maps.
    #[derive(Default)]
    struct MapBuilder {
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        next: usize,
    }

    impl MapBuilder {
        fn node(&mut self, kind: NodeKind, text: &str) -> String {
            self.next += 1;
            let prefix = match kind {
                NodeKind::Information => "I",
                NodeKind::Locution => "L",
                NodeKind::Inference => "RA",
                NodeKind::Illocution => "YA",
                _ => "X",
            };
            let id = format!("{prefix}{}", self.next);
            self.nodes.push(Node { id: id.clone(), kind, text: text.into(), scheme_label: None, speaker: None });
            id
        }

        fn edge(&mut self, from: &str, to: &str) {
            self.edges.push(Edge { from: from.into(), to: to.into() });
        }

        /// One locution asserting `texts`, returns the information ids.
        fn say(&mut self, speaker: &str, texts: &[&str]) -> Vec<String> {
            let loc = self.node(NodeKind::Locution, &format!("{speaker}: ..."));
            self.nodes.last_mut().unwrap().speaker = Some(speaker.into());
            texts
                .iter()
                .map(|t| {
                    let ya = self.node(NodeKind::Illocution, "Asserting");
                    let i = self.node(NodeKind::Information, t);
                    self.edge(&loc, &ya);
                    self.edge(&ya, &i);
                    i
                })
                .collect()
        }

        fn argue(&mut self, label: &str, premises: &[&str], conclusion: &str) -> String {
            let ra = self.node(NodeKind::Inference, "Default Inference");
            self.nodes.last_mut().unwrap().scheme_label = Some(label.into());
            for p in premises {
                self.edge(p, &ra);
            }
            self.edge(&ra, conclusion);
            ra
        }

        fn build(self) -> NodeSet {
            NodeSet::new(self.nodes, self.edges).unwrap()
        }
    }

    #[test]
    fn two_premises_one_conclusion() {
        let mut m = MapBuilder::default();
        let ids = m.say("A", &["p1", "p2", "c"]);
        m.argue("CauseToEffect", &[&ids[0], &ids[1]], &ids[2]);
        let ex = extract_arguments(&m.build());
        assert_eq!(ex.arguments.len(), 1);
        let a = &ex.arguments[0];
        assert_eq!(a.proposition_ids().count(), 3);
        assert_eq!(a.conclusion_id, ids[2]);
    }

    #[test]
    fn unmapped_label_is_skipped_once() {
        let mut m = MapBuilder::default();
        let ids = m.say("A", &["p", "c"]);
        m.argue("Default Inference", &[&ids[0]], &ids[1]);
        let ex = extract_arguments(&m.build());
        assert!(ex.arguments.is_empty());
        assert_eq!(ex.skipped.len(), 1);
    }

    #[test]
    fn underconnected_inference_is_skipped() {
        let mut m = MapBuilder::default();
        let ids = m.say("A", &["p"]);
        let ra = m.node(NodeKind::Inference, "x");
        m.nodes.last_mut().unwrap().scheme_label = Some("Sign".into());
        m.edge(&ids[0], &ra);
        let ex = extract_arguments(&m.build());
        assert!(ex.arguments.is_empty());
        assert_eq!(ex.skipped.len(), 1);
    }

    #[test]
    fn ambiguous_direction_uses_last_connected() {
        let mut m = MapBuilder::default();
        let ids = m.say("A", &["p", "q"]);
        let ra = m.node(NodeKind::Inference, "x");
        m.nodes.last_mut().unwrap().scheme_label = Some("Sign".into());
        m.edge(&ids[0], &ra);
        m.edge(&ids[1], &ra);
        let ex = extract_arguments(&m.build());
        assert_eq!(ex.arguments[0].conclusion_id, ids[1]);
        assert_eq!(ex.arguments[0].premise_ids, vec![ids[0].clone()]);
    }

    #[test]
    fn consecutive_locutions_form_one_intervention() {
        let mut m = MapBuilder::default();
        for i in 0..5 {
            m.say("TRUMP", &[&format!("claim {i}")]);
        }
        let c = build_interventions(&m.build(), SourceDataset::US2016, &PreprocessConfig::default());
        assert_eq!(c.interventions.len(), 1);
        assert_eq!(c.interventions[0].propositions.len(), 5);
        assert_eq!(c.interventions[0].speaker, "TRUMP");
        assert_eq!(c.interventions[0].id, "US2016-L1");
    }

    #[test]
    fn short_turn_merges_across_interjection() {
        let mut m = MapBuilder::default();
        m.say("A", &["a1"]);
        m.say("B", &["mm-hmm"]);
        m.say("A", &["a2", "a3"]);
        m.say("B", &["b1", "b2"]);
        let c = build_interventions(&m.build(), SourceDataset::MoralMaze, &PreprocessConfig::default());
        let shapes: Vec<(&str, usize)> =
            c.interventions.iter().map(|i| (i.speaker.as_str(), i.propositions.len())).collect();
        assert_eq!(shapes, vec![("A", 3), ("B", 3)]);
        assert_eq!(c.interventions[0].propositions, vec!["a1", "a2", "a3"]);
    }

    #[test]
    fn isolated_singleton_stays() {
        let mut m = MapBuilder::default();
        m.say("A", &["a1", "a2"]);
        m.say("B", &["b1"]);
        m.say("A", &["a3", "a4"]);
        let c = build_interventions(&m.build(), SourceDataset::US2016, &PreprocessConfig::default());
        assert_eq!(c.interventions.len(), 3);
    }

    #[test]
    fn long_turn_split_keeps_argument_whole() {
        let mut m = MapBuilder::default();
        let texts: Vec<String> = (1..=30).map(|i| format!("p{i}")).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let ids = m.say("A", &refs);
        // propositions 11..=13 (1-based) form one argument
        m.argue("CauseToEffect", &[&ids[10], &ids[11]], &ids[12]);
        let cfg = PreprocessConfig { split_ceiling: 12, merge_floor: 2 };
        let c = build_interventions(&m.build(), SourceDataset::US2016, &cfg);
        assert_eq!(c.interventions.len(), 3);
        let total: usize = c.interventions.iter().map(|i| i.propositions.len()).sum();
        assert_eq!(total, 30);
        assert!(c.interventions.iter().all(|i| i.propositions.len() <= 12));
        let arg = &c.arguments[0];
        let owner = c.intervention(&arg.intervention_id).unwrap();
        let texts: Vec<&str> = arg.proposition_refs.iter().map(|&r| owner.propositions[r].as_str()).collect();
        assert_eq!(texts, vec!["p11", "p12", "p13"]);
        // chunk ids stay unique although they share a locution
        let ids: HashSet<&str> = c.interventions.iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids.len(), 3);
    }

    #[test]
    fn cross_turn_argument_is_dropped() {
        let mut m = MapBuilder::default();
        let a = m.say("A", &["a1", "a2"]);
        let b = m.say("B", &["b1", "b2"]);
        m.argue("Sign", &[&a[0]], &b[0]);
        let c = build_interventions(&m.build(), SourceDataset::US2016, &PreprocessConfig::default());
        assert!(c.arguments.is_empty());
        assert_eq!(c.interventions.len(), 2);
    }

    /// Brute-force check: for every argument layout, no cut returned by
    /// `split_points` lands strictly inside an argument span.
    #[test]
    fn split_points_never_cross_arguments() {
        let ceiling = 5;
        for n in 6..=14 {
            for lo in 0..n {
                for hi in lo + 1..n.min(lo + 4) {
                    let mut ok = vec![true; n + 1];
                    ok[lo + 1..=hi].fill(false);
                    let cuts = split_points(n, ceiling, &ok);
                    for c in &cuts {
                        assert!(!(lo < *c && *c <= hi), "n={n} span={lo}..={hi} cut={c}");
                    }
                    let mut prev = 0;
                    for &c in cuts.iter().chain(std::iter::once(&n)) {
                        assert!(c > prev);
                        assert!(c - prev <= ceiling + 3, "chunk too long");
                        prev = c;
                    }
                }
            }
        }
    }
}
