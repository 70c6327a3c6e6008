#!/usr/bin/env python3
"""Regenerates the fixture tree under fixtures/.

Deterministic: the same script always writes byte-identical files. The
corpus follows the line-delimited argument-map format read by
`cqgen ingest`; the gold runs and judgments are built so that the reports
over them hit fixed target counts.

    python3 tools/gen_fixtures.py [--out fixtures]

After regenerating, rebuild the gold snapshot with

    cargo run -p cqgen-cli -- ingest --in fixtures/corpus/sample --out fixtures/gold/snapshot.jsonl
"""

import argparse
import hashlib
import json
import random
import re
from collections import Counter, defaultdict
from datetime import datetime, timedelta, timezone
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
SCHEMES_FILE = ROOT / "crates/core/data/schemes.jsonl"

QUERY = "List the critical questions that should be asked regarding the arguments in the following paragraph:"
DEFINITION = (
    "Critical questions are the set of enquiries that should be asked in order to judge if an argument "
    "is good or fallacious by unmasking the assumptions held by the premises of the argument."
)

MODELS = ["zephyr-13b", "llama-2-13b-chat"]
GROUPS = [("zephyr-13b", "q"), ("llama-2-13b-chat", "q"), ("zephyr-13b", "dq"), ("llama-2-13b-chat", "dq")]
LABELS = ["Relevant", "NewConcept", "BadReasoning", "NonSpecific", "Other"]
# Candidates per (model, prompt) and their triage labels, in LABELS order.
GROUP_LABELS = {
    ("zephyr-13b", "q"): [50, 11, 11, 0, 2],
    ("llama-2-13b-chat", "q"): [109, 6, 15, 4, 1],
    ("zephyr-13b", "dq"): [38, 17, 10, 43, 21],
    ("llama-2-13b-chat", "dq"): [111, 16, 10, 19, 1],
}
TYPES = ["evidence", "relation", "consequences", "definition", "other", "alternative", "exception", "source"]
THEORY_TYPE_TOTALS = dict(zip(TYPES, [31, 35, 14, 0, 6, 6, 23, 14]))
# Types of the theory-CQs behind the 52 theory-matched pairs, and of the llm side
# of those pairs; two pairs disagree (source->consequences, exception->consequences).
TPAIR_THEORY = dict(evidence=17, relation=10, consequences=17, exception=5, source=3)
VPAIR_TYPES = dict(evidence=38, relation=33, consequences=16, definition=34, other=20, alternative=7, exception=3, source=4)
ANNOTATORS = ["ann1", "ann2"]
DOUBLE_RATE = 0.2
POSTEDIT_TARGET = 51
QCQ_DISCARDS = 10

# --------------------------------------------------------------------------
# registry and small text helpers


def load_registry():
    reg = {}
    for line in SCHEMES_FILE.read_text().splitlines():
        if line.strip():
            rec = json.loads(line)
            reg[rec["scheme"]] = rec
    return reg


REGISTRY = load_registry()
SLOT_RE = re.compile(r"<(eventA|eventB|goalG|subjecta|subjectx|featF|featG|C1|C2|expertE|domainD|valueV|direction|large_majority|neg|argument1)>")


def fill(pattern, bindings):
    return SLOT_RE.sub(lambda m: bindings[m.group(1)], pattern)


def cqs_for(scheme, bindings):
    return [fill(p, bindings) for p in REGISTRY[scheme]["cq_patterns"]]


def normalize(text):
    collapsed = " ".join(text.lower().split())
    return collapsed.rstrip(" \t\n!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~")


def cap(s):
    return s[:1].upper() + s[1:]


def sentence(s):
    s = cap(s.strip())
    return s if s[-1] in ".?!" else s + "."


IRREGULAR_3SG = {"have": "has", "do": "does", "go": "goes", "be": "is"}
DOUBLING = {"cut", "stop", "plan", "shut", "put", "run", "get", "set", "ban", "drop", "cap", "let", "win", "slip", "scrap"}


def third(vp):
    verb, _, rest = vp.partition(" ")
    if verb in IRREGULAR_3SG:
        v = IRREGULAR_3SG[verb]
    elif verb.endswith(("s", "sh", "ch", "x", "z")):
        v = verb + "es"
    elif verb.endswith("y") and verb[-2] not in "aeiou":
        v = verb[:-1] + "ies"
    else:
        v = verb + "s"
    return f"{v} {rest}".strip()


def gerund(vp):
    verb, _, rest = vp.partition(" ")
    if verb in DOUBLING:
        v = verb + verb[-1] + "ing"
    elif verb.endswith("ie"):
        v = verb[:-2] + "ying"
    elif verb.endswith("e") and not verb.endswith("ee"):
        v = verb[:-1] + "ing"
    else:
        v = verb + "ing"
    return f"{v} {rest}".strip()


# --------------------------------------------------------------------------
# content banks

ACTIONS = [
    "cut taxes for small firms", "raise the minimum wage", "build more council houses", "close the coal plants",
    "ban zero-hours contracts", "cap rents in the cities", "fund free childcare", "scrap tuition fees",
    "expand the prison estate", "legalise cannabis", "tax sugary drinks", "nationalise the railways",
    "cut foreign aid", "raise the retirement age", "invest in renewable energy", "tighten gun laws",
    "lower corporate taxes", "renegotiate the trade deals", "expand public healthcare", "means-test pensions",
    "subsidise local farms", "privatise the water companies", "fine polluting companies", "let refugees work",
    "increase police numbers", "pay nurses more", "abolish inheritance tax", "regulate the banks",
    "protect the green belt", "bail out the steel industry", "double the defence budget",
    "rebuild the roads and bridges", "make college free", "tax the very rich", "cut red tape", "shut the border",
]
ACTORS_SG = ["the government", "the council", "the next administration", "parliament", "the state", "the country"]
OUTCOME_CLAUSES = [
    ("wages fall in the north", "wages falling in the north"),
    ("rents go up", "rents going up"),
    ("factories close", "factories closing"),
    ("families lose their homes", "families losing their homes"),
    ("crime rises in our cities", "crime rising in our cities"),
    ("prices go up in the shops", "prices going up in the shops"),
    ("young people leave the towns", "young people leaving the towns"),
    ("the deficit grows", "the deficit growing"),
    ("unemployment rises", "unemployment rising"),
    ("small shops go bust", "small shops going bust"),
    ("hospitals run out of beds", "hospitals running out of beds"),
    ("investment dries up", "investment drying up"),
    ("the pound falls", "the pound falling"),
    ("schools lose their best teachers", "schools losing their best teachers"),
    ("people stop trusting politicians", "people stopping trusting politicians"),
    ("our exports collapse", "our exports collapsing"),
]
OUTCOMES = [
    "job losses in manufacturing", "higher rents", "longer hospital waiting lists", "a bigger deficit",
    "lower wages for the young", "more violent crime", "rising food prices", "empty high streets", "a brain drain",
    "falling school standards", "a housing shortage", "more homelessness", "higher energy bills", "weaker unions",
    "overcrowded prisons", "a black market", "slower growth", "more small businesses", "cleaner air",
    "safer streets", "better-paid jobs", "lower child poverty",
]
GOALS = [
    "keeping our streets safe", "cutting carbon emissions", "protecting workers' pensions",
    "getting young people into work", "bringing manufacturing back", "reducing the deficit", "ending child poverty",
    "fixing the housing market", "saving the health service",
]
GOAL_INF = {g: "to " + g.replace("keeping", "keep").replace("cutting", "cut").replace("protecting", "protect")
            .replace("getting", "get").replace("bringing", "bring").replace("reducing", "reduce")
            .replace("ending", "end").replace("fixing", "fix").replace("saving", "save") for g in GOALS}
EXPERTS = [
    ("the chief medical officer", "public health", "the sugar tax is working"),
    ("the governor of the central bank", "monetary policy", "inflation will fall next year"),
    ("a leading climate scientist", "climate science", "we have ten years to act"),
    ("the chief economist at the treasury", "fiscal policy", "the deficit is under control"),
    ("the prisons inspector", "prison reform", "short sentences do not work"),
]
EXAMPLES = [
    ("Denmark", "countries", "taxed sugar", "and saw obesity fall"),
    ("Portugal", "countries", "decriminalised drugs", "and saw overdose deaths drop"),
    ("Seattle", "cities", "raised the minimum wage", "and kept its jobs"),
    ("Finland", "countries", "scrapped school league tables", "and improved its results"),
    ("Norway", "countries", "saved its oil money", "and protected its pensions"),
    ("Manchester", "cities", "built new tram lines", "and attracted investment"),
    ("Germany", "countries", "trained apprentices", "and cut youth unemployment"),
]
VERBALS = [
    ("the senator", "takes money from the gun lobby", "is not independent on gun laws"),
    ("this bill", "raises taxes on working families", "is a bad deal for the middle class"),
    ("the new tariff", "is paid by consumers", "is a tax on ordinary people"),
    ("the charity", "spends most donations on salaries", "is a business in disguise"),
    ("the trade deal", "sends jobs overseas", "is a disaster for workers"),
    ("the plan", "adds to the national debt", "is irresponsible"),
]
ANALOGIES = [
    ("the rail privatisation", "the water privatisation", "prices rose while service got worse"),
    ("the banking crisis", "the housing crisis", "the taxpayer paid for private losses"),
    ("the ban on smoking in pubs", "a ban on junk food advertising", "public health improved"),
    ("prohibition in the twenties", "the war on drugs", "organised crime grew"),
    ("the coal closures", "the steel closures", "whole towns lost their work"),
]
SIGNS = [
    ("empty shops on every high street", "a failing local economy"),
    ("queues at food banks", "rising poverty"),
    ("record waiting lists", "a health service in crisis"),
    ("soaring house prices", "a shortage of homes"),
    ("falling church attendance", "a more secular society"),
]
POPULAR = [
    "the railways should be in public hands", "assisted dying should be legal", "voters care more about jobs than trade",
    "the rich should pay more tax",
]
PRACTICES = [
    ("most parents", "vaccinating their children"),
    ("the majority of doctors", "prescribing generic drugs"),
    ("most small businesses", "paying above the minimum wage"),
    ("nearly every country", "taxing tobacco heavily"),
]
VALUES = [
    ("fairness", "positive", "paying everyone a living wage"),
    ("freedom of speech", "positive", "protecting controversial speakers"),
    ("family", "positive", "supporting parents with childcare"),
    ("greed", "negative", "regulating executive pay"),
    ("security", "positive", "keeping our borders strong"),
]
FEARS = [
    ("closing the border", "a wave of violent crime"),
    ("banning assault weapons", "more mass shootings"),
    ("building the wall", "drugs flooding our cities"),
    ("raising interest rates", "runaway inflation"),
]
DANGERS = [
    ("we keep borrowing at this rate", "a debt crisis"),
    ("the old reactor stays open", "a nuclear accident"),
    ("we ignore climate change", "coastal cities flooding"),
    ("the banks go unregulated", "another financial crash"),
]
ALTERNATIVES = [
    ("we invest in our schools now", "a lost generation"),
    ("we reform the tax code", "another recession"),
    ("we secure the border", "more illegal crossings"),
    ("we fix the health system", "more hospital closures"),
]
CIRCUMSTANTIAL = [
    ("my opponent", "we should cut public spending", "her support for the bank bailout"),
    ("the senator", "the rich should pay more tax", "his use of offshore accounts"),
    ("the minister", "private schools are unfair", "sending his children to a private school"),
    ("the governor", "coal jobs must be protected", "his investments in solar firms"),
    ("the bishop", "the church should give its wealth away", "living in a palace"),
]
PEOPLE = [
    "my opponent", "the former secretary of state", "the columnist", "the union leader", "the chief executive",
    "the mayor", "the campaign manager", "the congressman", "the party chairman",
]
POSITIONS = [
    ("a nurse who worked through the pandemic", "the wards were understaffed"),
    ("the head teacher", "class sizes have doubled"),
    ("a border agent", "the system is overwhelmed"),
    ("the local sheriff", "crime is falling in the county"),
    ("a steelworker", "the plant could have been saved"),
    ("the hospital manager", "beds are running out"),
]
BIASES = [
    ("the senator", "a donor to the oil industry", "drilling in the Arctic"),
    ("the councillor", "a landlord", "rent control"),
    ("the economist", "a paid consultant for the banks", "bank regulation"),
    ("the spokesman", "a director of a private prison firm", "private prisons"),
    ("the commentator", "a board member of an arms company", "arms exports"),
]
FILLERS_US = [
    "Let me be clear about this", "I've said this from the beginning", "That's the reality", "Look, this matters to people",
    "Nobody wants to talk about it", "And I'll tell you something else", "We all know it", "Believe me",
]
FILLERS_MM = [
    "I think that's the heart of it", "Well, let me put it another way", "That's a fair point, up to a point",
    "We have to be honest about this", "I don't think that's quite right", "It's a moral question as much as anything",
]
OUTSIDE = [
    "climate change", "cryptocurrency", "artificial intelligence", "space exploration", "the Olympic games",
    "social media addiction", "the housing market in Asia", "electric cars", "the royal family", "video games",
]
GENERIC = [
    "What assumptions is the argument making?", "Is the argument logically valid?",
    "What evidence supports the argument?", "Are the premises true?", "Is the conclusion supported by the premises?",
    "What are the counterarguments?", "Is the speaker biased?", "Are there any logical fallacies in the argument?",
    "What is the main claim of the argument?", "Is the argument relevant to the discussion?",
]

US_SPEAKERS = ["SPEAKER_A", "SPEAKER_B", "SPEAKER_C", "SPEAKER_D", "SPEAKER_E", "SPEAKER_F", "MODERATOR"]
MM_SPEAKERS = ["PANELLIST_1", "PANELLIST_2", "PANELLIST_3", "PANELLIST_4", "WITNESS_1", "WITNESS_2", "CHAIR"]
MM_LABEL_VARIANTS = {
    "CauseToEffect": ["CauseToEffect", "Cause To Effect"],
    "Consequences": ["NegativeConsequences", "PositiveConsequences"],
    "Sign": ["SignFromOtherEvents"],
    "ExpertOpinion": ["ExpertOpinion", "Expert Opinion"],
}

# slot classes decide how a fill can go wrong: "clause" (finite clause),
# "gerund" (gerund phrase), "np" (noun phrase), "pred" (verb phrase)
SLOT_CLASS = {
    "CauseToEffect": dict(eventA="clause", eventB="clause"),
    "Consequences": dict(eventA="clause", eventB="np"),
    "Example": dict(subjecta="np", subjectx="np", featF="pred", featG="pred"),
    "Sign": dict(eventA="np", eventB="np"),
    "Analogy": dict(C1="np", C2="np", eventA="clause"),
    "PracticalReasoning": dict(goalG="gerund", eventA="gerund"),
    "ExpertOpinion": dict(expertE="np", domainD="np", eventA="clause"),
    "PopularOpinion": dict(eventA="clause"),
    "CircumstantialAdHominem": dict(subjecta="np", eventA="clause", argument1="np"),
    "VerbalClassification": dict(subjecta="np", featF="pred", featG="pred"),
    "GenericAdHominem": dict(subjecta="np"),
    "PositionToKnow": dict(subjecta="np", eventA="clause"),
    "Values": dict(valueV="np", goalG="gerund"),
    "Bias": dict(subjecta="np", subjectx="np", eventA="np"),
    "FearAppeal": dict(eventA="gerund", eventB="np"),
    "DangerAppeal": dict(eventA="clause", eventB="np"),
    "Alternatives": dict(eventA="clause", eventB="np"),
    "PopularPractice": dict(large_majority="np", eventA="gerund"),
}
# natural type of each theory-CQ pattern, by scheme and pattern index
NATURAL_TYPES = {
    "CauseToEffect": ["relation", "exception"],
    "Consequences": ["evidence", "consequences"],
    "Example": ["evidence", "relation", "exception"],
    "Sign": ["relation", "alternative"],
    "Analogy": ["relation", "evidence", "exception", "alternative"],
    "PracticalReasoning": ["other", "alternative", "consequences"],
    "ExpertOpinion": ["source", "source", "source", "source", "evidence", "relation", "evidence", "evidence"],
    "PopularOpinion": ["evidence", "exception"],
    "CircumstantialAdHominem": ["relation", "evidence", "source"],
    "VerbalClassification": ["evidence", "relation", "exception"],
    "GenericAdHominem": ["source", "relation"],
    "PositionToKnow": ["source", "source", "source"],
    "Values": ["evidence", "exception", "other"],
    "Bias": ["source", "relation"],
    "FearAppeal": ["evidence", "relation", "other", "consequences"],
    "DangerAppeal": ["evidence", "other", "alternative", "consequences"],
    "Alternatives": ["exception", "evidence"],
    "PopularPractice": ["evidence", "exception"],
}
CAPITAL_WORDS = {"we", "they", "he", "she", "it", "there", "this", "these", "those", "our", "their", "you", "my", "his", "her", "the", "a", "an"}


class Arg:
    """One planned argument: propositions plus the bindings an annotator gives."""

    def __init__(self, scheme, premises, conclusion, bindings, extras=None):
        self.scheme = scheme
        self.premises = premises
        self.conclusion = conclusion
        self.bindings = bindings  # as annotated (possibly ill-fitting)
        self.clean = dict(bindings)  # what the post-editor turns them into
        self.extras = extras or {}  # alternative verb forms per slot
        self.discard = None
        self.label = scheme
        self.id = None
        self.intervention = None
        self.cq_ids = []
        self.pinned_edits = None

    def raw_cqs(self):
        return cqs_for(self.scheme, self.bindings)

    def edited_cqs(self):
        if self.pinned_edits is not None:
            return self.pinned_edits
        return cqs_for(self.scheme, self.clean)

    def claim(self):
        return strip_connectors(self.conclusion.rstrip(".").rstrip(","))

    def premise(self):
        return self.premises[0].rstrip(".").rstrip(",")


CONNECTORS = [("so let's ", "we should "), ("so don't take ", "no one should take "), ("so ", ""), ("and so ", ""),
              ("and ", ""), ("that's why ", ""), ("that is why ", ""), ("that tells you ", "")]


def strip_connectors(s):
    low = s.lower()
    for prefix, repl in CONNECTORS:
        if low.startswith(prefix):
            return repl + s[len(prefix):]
    return s


def lower_first(s):
    return s[:1].lower() + s[1:] if not s[:2].isupper() else s


def make_arg(scheme, rng, used):
    """Builds a synthetic argument of `scheme` from the content banks."""

    def pick(bank):
        options = [b for b in bank if (scheme, str(b)) not in used] or bank
        choice = rng.choice(options)
        used.add((scheme, str(choice)))
        return choice

    if scheme == "CauseToEffect":
        actor, action = pick(ACTORS_SG), pick(ACTIONS)
        clause_b, ger_b = pick(OUTCOME_CLAUSES)
        a = f"{actor} {third(action)}"
        arg = Arg(scheme, [sentence(f"when {a}")], sentence(f"{clause_b}"), dict(eventA=a, eventB=clause_b))
        arg.extras = dict(eventA=dict(gerund=gerund(action)), eventB=dict(gerund=ger_b))
    elif scheme == "Consequences":
        action, outcome = pick(ACTIONS), pick(OUTCOMES)
        neg = rng.choice(["", "not "])
        a = f"we {action}"
        prem = sentence(f"if {a}, we will end up with {outcome}")
        concl = sentence(f"so we should {neg}{action}")
        arg = Arg(scheme, [prem], concl, dict(eventA=a, eventB=outcome, neg=neg))
        arg.extras = dict(eventA=dict(gerund=gerund(action)))
    elif scheme == "Example":
        a, x, f, g = pick(EXAMPLES)
        arg = Arg(scheme, [sentence(f"look at {a}, it {f} {g}")], sentence(f"other {x} can do the same"),
                  dict(subjecta=a, subjectx=x, featF=f, featG=g))
    elif scheme == "Sign":
        a, b = pick(SIGNS)
        arg = Arg(scheme, [sentence(f"you can see {a}")], sentence(f"that tells you we have {b}"), dict(eventA=a, eventB=b))
    elif scheme == "Analogy":
        c1, c2, a = pick(ANALOGIES)
        arg = Arg(scheme, [sentence(f"{c2} is just like {c1}"), sentence(f"with {c1}, {a}")],
                  sentence(f"the same will happen with {c2}"), dict(C1=c1, C2=c2, eventA=a))
    elif scheme == "PracticalReasoning":
        goal, action = pick(GOALS), pick(ACTIONS)
        g = gerund(action)
        arg = Arg(scheme, [sentence(f"what we want is {goal}"), sentence(f"{g} gets us there")],
                  sentence(f"so let's {action}"), dict(goalG=goal, eventA=g))
        arg.extras = dict(goalG=dict(inf=GOAL_INF[goal]), eventA=dict(inf="to " + action))
    elif scheme == "ExpertOpinion":
        e, d, a = pick(EXPERTS)
        arg = Arg(scheme, [sentence(f"{e} says {a}")], sentence(a), dict(expertE=e, domainD=d, eventA=a))
    elif scheme == "PopularOpinion":
        a = pick(POPULAR)
        arg = Arg(scheme, [sentence(f"everybody I talk to agrees that {a}")], sentence(f"{a}, full stop"), dict(eventA=a))
    elif scheme == "CircumstantialAdHominem":
        s, a, arg1 = pick(CIRCUMSTANTIAL)
        arg = Arg(scheme, [sentence(f"{s} now tells us {a}, yet look at {arg1}")],
                  sentence(f"why should anyone listen to {s} on this"), dict(subjecta=s, eventA=a, argument1=arg1))
    elif scheme == "VerbalClassification":
        s, f, g = pick(VERBALS)
        arg = Arg(scheme, [sentence(f"{s} {f}")], sentence(f"{s} {g}"), dict(subjecta=s, featF=f, featG=g))
    elif scheme == "GenericAdHominem":
        s = pick(PEOPLE)
        arg = Arg(scheme, [sentence(f"{s} has been caught lying again and again")],
                  sentence(f"nothing {s} says on this can be trusted"), dict(subjecta=s))
    elif scheme == "PositionToKnow":
        s, a = pick(POSITIONS)
        arg = Arg(scheme, [sentence(f"I spoke to {s}")], sentence(f"{a}, that's what {s} told me"), dict(subjecta=s, eventA=a))
    elif scheme == "Values":
        v, d, g = pick(VALUES)
        arg = Arg(scheme, [sentence(f"{v} is what this country is about" if d == "positive" else f"{v} is ruining this country")],
                  sentence(f"that is why we stand for {g}"), dict(valueV=v, direction=d, goalG=g))
    elif scheme == "Bias":
        s, x, a = pick(BIASES)
        arg = Arg(scheme, [sentence(f"{s} is {x}")], sentence(f"so don't take {s} seriously on {a}"), dict(subjecta=s, subjectx=x, eventA=a))
    elif scheme == "FearAppeal":
        a, b = pick(FEARS)
        arg = Arg(scheme, [sentence(f"unless we act we will see {b}")], sentence(f"that's why I support {a}"), dict(eventA=a, eventB=b))
    elif scheme == "DangerAppeal":
        a, b = pick(DANGERS)
        arg = Arg(scheme, [sentence(f"if {a}, we are heading for {b}")], sentence("we cannot let that happen"), dict(eventA=a, eventB=b))
    elif scheme == "Alternatives":
        a, b = pick(ALTERNATIVES)
        arg = Arg(scheme, [sentence(f"either {a} or we face {b}")], sentence(f"and {a}, so we won't face it"), dict(eventA=a, eventB=b))
    elif scheme == "PopularPractice":
        m, a = pick(PRACTICES)
        arg = Arg(scheme, [sentence(f"{m} are already {a}")], sentence(f"{a} is simply the right thing to do"), dict(large_majority=m, eventA=a))
    else:
        raise ValueError(scheme)
    return arg


def break_options(arg):
    """(slot, broken value) pairs a careless annotator could have written."""
    out = []
    for slot, cls in SLOT_CLASS[arg.scheme].items():
        value = arg.clean[slot]
        first = value.split(" ", 1)[0]
        if first in CAPITAL_WORDS:
            out.append((slot, cap(value)))
        out.append((slot, value + "."))
        extra = arg.extras.get(slot, {})
        if cls == "clause" and "gerund" in extra:
            out.append((slot, extra["gerund"]))
        if cls == "gerund" and "inf" in extra:
            out.append((slot, extra["inf"]))
    return out


# --------------------------------------------------------------------------
# argument-map files


class MapFile:
    def __init__(self, prefix):
        self.prefix = prefix
        self.nodes = []
        self.edges = []
        self.n = 0
        self.last_loc = None

    def _id(self, tag):
        self.n += 1
        return f"{self.prefix}{tag}{self.n}"

    def turn(self, speaker, props, rng, per_loc=None):
        """Adds one speaker turn; returns the information node ids."""
        ids = []
        i = 0
        while i < len(props):
            k = per_loc or (2 if rng.random() < 0.15 and i + 1 < len(props) else 1)
            chunk = props[i:i + k]
            loc = self._id("L")
            text = f"{speaker}: " + " ".join(chunk)
            node = {"kind": "node", "id": loc, "node_kind": "locution", "text": text}
            if rng.random() < 0.7:
                node["speaker"] = speaker
            self.nodes.append(node)
            if self.last_loc is not None and rng.random() < 0.5:
                ta = self._id("TA")
                self.nodes.append({"kind": "node", "id": ta, "node_kind": "transition", "text": "Default Transition"})
                self.edges.append({"kind": "edge", "from": self.last_loc, "to": ta})
                self.edges.append({"kind": "edge", "from": ta, "to": loc})
            self.last_loc = loc
            for p in chunk:
                info = self._id("I")
                self.nodes.append({"kind": "node", "id": info, "node_kind": "information", "text": p})
                if rng.random() < 0.5:
                    ya = self._id("YA")
                    self.nodes.append({"kind": "node", "id": ya, "node_kind": "illocution", "text": "Asserting"})
                    self.edges.append({"kind": "edge", "from": loc, "to": ya})
                    self.edges.append({"kind": "edge", "from": ya, "to": info})
                else:
                    self.edges.append({"kind": "edge", "from": loc, "to": info})
                ids.append(info)
            i += k
        return ids

    def inference(self, label, premises, conclusion, rng, text_only=False):
        ra = self._id("RA")
        node = {"kind": "node", "id": ra, "node_kind": "inference", "text": "Default Inference"}
        if label is not None:
            if text_only:
                node["text"] = label
            else:
                node["scheme_label"] = label
        self.nodes.append(node)
        for p in premises:
            self.edges.append({"kind": "edge", "from": p, "to": ra})
        self.edges.append({"kind": "edge", "from": ra, "to": conclusion})
        return ra

    def opaque(self, a, b):
        ca = self._id("CA")
        self.nodes.append({"kind": "node", "id": ca, "node_kind": "conflict", "text": "Default Conflict"})
        self.edges.append({"kind": "edge", "from": a, "to": ca})
        self.edges.append({"kind": "edge", "from": ca, "to": b})

    def first_loc(self):
        return next(n["id"] for n in self.nodes if n["node_kind"] == "locution")

    def write(self, path):
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as f:
            for rec in self.nodes + self.edges:
                f.write(json.dumps(rec, ensure_ascii=False) + "\n")


# --------------------------------------------------------------------------
# the 21-intervention sample


class Iv:
    def __init__(self, dataset, speaker, props, args, file_prefix):
        self.dataset = dataset
        self.speaker = speaker
        self.props = props
        self.args = args  # list of (Arg, premise indices, conclusion index)
        self.prefix = file_prefix
        self.id = None
        self.fillers = []

    def live_args(self):
        return [a for a, _, _ in self.args if a.discard is None]


def assemble_iv(dataset, speaker, args, fillers, prefix, rng):
    """Lays out propositions for generic args with fillers around them."""
    props, placed = [], []
    lead = fillers[:1]
    props.extend(sentence(f) for f in lead)
    for arg in args:
        prem_idx = []
        for p in arg.premises:
            prem_idx.append(len(props))
            props.append(p)
        placed.append((arg, prem_idx, len(props)))
        props.append(arg.conclusion)
    props.extend(sentence(f) for f in fillers[1:])
    assert len(props) <= 12, (prefix, len(props))
    iv = Iv(dataset, speaker, props, placed, prefix)
    iv.fillers = [sentence(f) for f in fillers]
    return iv


def trump_iv():
    props = [
        "I want to make America great again", "We are a nation that is seriously troubled", "We're losing our jobs",
        "People are pouring into our country", "The other day , we were deporting 800 people",
        "perhaps they passed the wrong button", "they pressed the wrong button", "perhaps worse than that",
        "it was corruption",
    ]
    cte = Arg("CauseToEffect", [props[3]], props[2],
              dict(eventA="people are pouring into the USA", eventB="Americans might lose their jobs"))
    cte.pinned_edits = [
        "How strong is the generalisation that if people pour into the USA then Americans will lose their jobs?",
        "Are there other factors in this particular case that could be interfering with the fact that Americans lose their jobs?",
    ]
    vc = Arg("VerbalClassification", [props[7]], props[8],
             dict(subjecta="the botched deportation", featF="was worse than a mistake", featG="was corruption"))
    gah = Arg("GenericAdHominem", [props[5]], props[6], dict(subjecta="the officials in charge of deportations"))
    gah.discard = "propositions do not support the scheme"
    bias = Arg("Bias", [props[1]], props[0], dict(subjecta="the speaker", subjectx="a candidate", eventA="making America great"))
    bias.discard = "no link between the propositions and the scheme"
    iv = Iv("US2016", "TRUMP", props, [(cte, [3], 2), (vc, [7], 8), (gah, [5], 6), (bias, [1], 0)], "us01")
    iv.fillers = [props[0], props[4]]
    return iv


def wage_iv():
    props = [
        "Our goal has to be making the economy fairer",
        "Raising the national minimum wage is how we get there",
        "So let's raise the national minimum wage",
    ]
    pr = Arg("PracticalReasoning", [props[0], props[1]], props[2],
             dict(goalG="making the economy fairer", eventA="raising the national minimum wage"))
    return pr, props


def mt_iv():
    props = [
        "Claire’s absolutely right about that.",
        "But then the problem is that that form of capitalism wasn’t generating sufficient surpluses.",
        "And so therefore where did the money flow.",
        "It didn’t flow into those industrial activities,",
        "because in the developed world that wasn’t making enough money.",
    ]
    a1 = Arg("CauseToEffect", [props[4]], props[3], dict(
        eventA="that form of capitalism was not making enough money in the developed world",
        eventB="the money did not flow into those industrial activities"))
    a2 = Arg("CauseToEffect", [props[1]], props[3], dict(
        eventA="that form of capitalism wasn't generating sufficient surpluses",
        eventB="the money did not flow into industrial activities"))
    a1.label = "CauseToEffect"
    a2.label = "Cause To Effect"
    iv = Iv("MoralMaze", "MT", props, [(a1, [4], 3), (a2, [1], 3)], "mm01")
    iv.fillers = [props[0], props[2]]
    return iv


US_PLAN = [
    None,  # TRUMP
    None,  # minimum wage, PracticalReasoning + Consequences + Values
    ["GenericAdHominem", "CircumstantialAdHominem", "Bias", "PositionToKnow"],
    ["PracticalReasoning", "VerbalClassification", "FearAppeal"],
    ["GenericAdHominem", "CircumstantialAdHominem", "PositionToKnow"],
    ["Bias", "VerbalClassification", "Alternatives"],
    ["PracticalReasoning", "CircumstantialAdHominem", "DangerAppeal"],
    ["GenericAdHominem", "Bias", "PositionToKnow", "Example"],
    ["CircumstantialAdHominem", "VerbalClassification", "PopularPractice"],
    ["GenericAdHominem", "Consequences", "Values"],
]
MM_PLAN = [
    None,  # MT
    ["Consequences", "Example"],
    ["Consequences", "Sign", "Analogy"],
    ["PracticalReasoning", "Consequences", "ExpertOpinion"],
    ["Example", "Example", "PopularOpinion"],
    ["CauseToEffect", "Consequences", "Sign"],
    ["Consequences", "Analogy", "Example"],
    ["PracticalReasoning", "Consequences"],
    ["CauseToEffect", "Example", "CircumstantialAdHominem"],
    ["Consequences", "PracticalReasoning"],
    ["Consequences"],
]
# (intervention prefix, scheme) of the arguments annotators discarded, besides
# the two in the TRUMP intervention
DISCARDS = [("mm03", "Consequences"), ("mm07", "Consequences"), ("us10", "Consequences"),
            ("us03", "GenericAdHominem"), ("mm05", "Example"),
            ("us09", "CircumstantialAdHominem"), ("us04", "VerbalClassification")]
DISCARD_REASONS = ["propositions do not support the scheme", "scheme label does not fit the inference",
                   "no link between the propositions and the scheme"]


def build_sample(rng):
    used = set()
    ivs = []
    for i, plan in enumerate(US_PLAN):
        prefix = f"us{i + 1:02d}"
        if i == 0:
            ivs.append(trump_iv())
            continue
        speaker = US_SPEAKERS[i % (len(US_SPEAKERS) - 1)]
        if i == 1:
            pr, pr_props = wage_iv()
            cons = make_arg("Consequences", rng, used)
            val = make_arg("Values", rng, used)
            iv = assemble_iv("US2016", speaker, [cons, val], [rng.choice(FILLERS_US)], prefix, rng)
            base = len(pr_props)
            iv.props = pr_props + iv.props
            iv.args = [(pr, [0, 1], 2)] + [(a, [p + base for p in ps], c + base) for a, ps, c in iv.args]
            ivs.append(iv)
            continue
        args = [make_arg(s, rng, used) for s in plan]
        n_fill = min(2, 12 - sum(len(a.premises) + 1 for a in args))
        iv = assemble_iv("US2016", speaker, args, rng.sample(FILLERS_US, n_fill), prefix, rng)
        ivs.append(iv)
    for i, plan in enumerate(MM_PLAN):
        prefix = f"mm{i + 1:02d}"
        if i == 0:
            ivs.append(mt_iv())
            continue
        speaker = MM_SPEAKERS[i % (len(MM_SPEAKERS) - 1)]
        args = [make_arg(s, rng, used) for s in plan]
        for a in args:
            if a.scheme in MM_LABEL_VARIANTS:
                a.label = rng.choice(MM_LABEL_VARIANTS[a.scheme])
            if a.scheme == "Consequences" and a.label.endswith("Consequences") and a.label != "Consequences":
                a.label = "NegativeConsequences" if a.bindings["neg"] else "PositiveConsequences"
        n_fill = min(2, 12 - sum(len(a.premises) + 1 for a in args))
        iv = assemble_iv("MoralMaze", speaker, args, rng.sample(FILLERS_MM, n_fill), prefix, rng)
        ivs.append(iv)
    for prefix, scheme in DISCARDS:
        iv = next(v for v in ivs if v.prefix == prefix)
        arg = next(a for a, _, _ in iv.args if a.scheme == scheme and a.discard is None)
        arg.discard = rng.choice(DISCARD_REASONS)
    return ivs


def write_sample(ivs, out, rng):
    for iv in ivs:
        mf = MapFile(iv.prefix)
        ids = mf.turn(iv.speaker, iv.props, rng)
        for arg, prem, concl in iv.args:
            text_only = rng.random() < 0.15
            ra = mf.inference(arg.label, [ids[p] for p in prem], ids[concl], rng, text_only=text_only)
            arg.id = f"{iv.dataset}-{ra}"
            arg.intervention = iv
        if len(ids) >= 4 and rng.random() < 0.5:
            mf.inference(None, [ids[0]], ids[-1], rng)  # unlabelled inference, skipped on ingest
        iv.id = f"{iv.dataset}-{mf.first_loc()}"
        mf.write(out / "corpus/sample" / iv.dataset / f"{iv.prefix}.jsonl")


# --------------------------------------------------------------------------
# the rest of the full corpus

EXTRA_SCHEMES = {
    "MoralMaze": dict(CauseToEffect=14, Consequences=7, Example=6, Sign=4, Analogy=4, PracticalReasoning=2,
                      ExpertOpinion=3, PopularOpinion=1),
    "US2016": dict(CauseToEffect=49, Consequences=36, Example=97, Sign=40, Analogy=8, PracticalReasoning=32,
                   ExpertOpinion=4, PopularOpinion=8, CircumstantialAdHominem=22, VerbalClassification=25,
                   GenericAdHominem=23, PositionToKnow=15, Values=12, Bias=8, FearAppeal=8, DangerAppeal=7,
                   Alternatives=6, PopularPractice=6),
}


def filler_sentence(rng, dataset):
    actor = rng.choice(ACTORS_SG + ["we", "they"])
    action = rng.choice(ACTIONS)
    verb = action if actor in ("we", "they") else third(action)
    shapes = [
        f"{actor} should {action}",
        f"{actor} {verb}",
        f"nobody believes {actor} will {action}",
        f"the question is whether {actor} can {action}",
        rng.choice(OUTCOME_CLAUSES)[0],
        f"we are looking at {rng.choice(OUTCOMES)}",
        rng.choice(FILLERS_US if dataset == "US2016" else FILLERS_MM),
    ]
    return sentence(rng.choice(shapes))


def extra_arg_props(scheme, rng):
    """Premises and conclusion text for a corpus-only argument."""
    arg = make_arg(scheme, rng, set())
    return arg.premises, arg.conclusion


class Turn:
    def __init__(self, speaker, props, args=()):
        self.speaker = speaker
        self.props = props
        self.args = list(args)  # (label, premise idx, conclusion idx)


def arg_turn(speaker, schemes, dataset, rng, pad_to=None, budget=12):
    """One turn holding an argument per scheme, within `budget` propositions.

    Over budget, later arguments take the previous conclusion as their first
    premise, the way chained arguments look in real maps.
    """
    for _ in range(200):
        drafts = [extra_arg_props(s, rng) for s in schemes]
        need = sum(len(p) + 1 for p, _ in drafts) - budget
        share = [False] * len(drafts)
        for i in range(1, len(drafts)):
            if need <= 0:
                break
            share[i] = True
            need -= 1
        if need <= 0:
            break
    else:
        raise AssertionError(f"cannot fit {schemes} into {budget} propositions")
    props, args = [], []
    for s, (prem, concl), shared in zip(schemes, drafts, share):
        pi = []
        if shared:
            pi.append(args[-1][2])
            prem = prem[1:]
        for p in prem:
            pi.append(len(props))
            props.append(p)
        label = s
        if dataset == "MoralMaze" and s in MM_LABEL_VARIANTS:
            label = rng.choice(MM_LABEL_VARIANTS[s])
        args.append((label, pi, len(props)))
        props.append(concl)
    while pad_to and len(props) < pad_to:
        props.append(filler_sentence(rng, dataset))
    return Turn(speaker, props, args)


def plain_turn(speaker, n, dataset, rng):
    return Turn(speaker, [filler_sentence(rng, dataset) for _ in range(n)])


def build_extra(dataset, n_with, n_plain, rng):
    """Turns for one dataset; returns list of files, each a list of Turn objects.

    `n_with` interventions carry arguments, `n_plain` do not; every turn built
    here yields exactly the interventions it is counted as.
    """
    bag = []
    for scheme, k in EXTRA_SCHEMES[dataset].items():
        bag.extend([scheme] * k)
    rng.shuffle(bag)
    speakers = US_SPEAKERS if dataset == "US2016" else MM_SPEAKERS
    per = len(bag) // n_with
    sizes = [per] * n_with
    for i in range(len(bag) - per * n_with):
        sizes[i] += 1
    units = []  # (kind, payload, interventions produced, with-argument count)
    pos = 0
    long_pairs = 2 if dataset == "US2016" else 1
    i = 0
    while i < n_with:
        if long_pairs and i + 1 < n_with and sizes[i] + sizes[i + 1] <= 12 and max(sizes[i], sizes[i + 1]) <= 6:
            first = bag[pos:pos + sizes[i]]
            second = bag[pos + sizes[i]:pos + sizes[i] + sizes[i + 1]]
            pos += sizes[i] + sizes[i + 1]
            units.append(("long_args", (first, second), 2, 2))
            long_pairs -= 1
            i += 2
            continue
        units.append(("args", bag[pos:pos + sizes[i]], 1, 1))
        pos += sizes[i]
        i += 1
    assert pos == len(bag)
    remaining = n_plain
    for _ in range(2):
        units.append(("trio", None, 2, 0))
        remaining -= 2
    units.append(("long_plain", 30, 3, 0))
    remaining -= 3
    units.append(("long_plain", 17, 2, 0))
    remaining -= 2
    units.extend([("plain", None, 1, 0)] * remaining)
    rng.shuffle(units)

    files, current, last_speaker = [], [], None
    per_file = 6 if dataset == "US2016" else 5

    def next_speaker(avoid):
        return rng.choice([s for s in speakers if s != avoid])

    for kind, payload, _, _ in units:
        if kind == "trio":
            # trios sit alone so the short turns cannot merge with neighbours
            a, b = rng.sample(speakers, 2)
            files.append([Turn(a, [filler_sentence(rng, dataset)]), Turn(b, [filler_sentence(rng, dataset)]),
                          plain_turn(a, 3, dataset, rng)])
            continue
        sp = next_speaker(last_speaker)
        if kind == "args":
            turn = arg_turn(sp, payload, dataset, rng)
            if len(turn.props) < 12 and rng.random() < 0.5:
                turn.props.append(filler_sentence(rng, dataset))
            current.append(turn)
        elif kind == "long_args":
            first = arg_turn(sp, payload[0], dataset, rng, pad_to=12)
            second = arg_turn(sp, payload[1], dataset, rng, pad_to=12)
            shift = len(first.props)
            merged = Turn(sp, first.props + second.props,
                          first.args + [(l, [p + shift for p in ps], c + shift) for l, ps, c in second.args])
            current.append(merged)
        elif kind == "long_plain":
            current.append(plain_turn(sp, payload, dataset, rng))
        else:
            current.append(plain_turn(sp, rng.randint(2, 7), dataset, rng))
        last_speaker = sp
        if len(current) >= per_file:
            files.append(current)
            current, last_speaker = [], None
    if current:
        files.append(current)
    return files


def write_extra(out, rng):
    plan = {"MoralMaze": (14, 48, "mmx"), "US2016": (82, 205, "usx")}
    for dataset, (n_with, n_plain, tag) in plan.items():
        files = build_extra(dataset, n_with, n_plain, rng)
        for fi, turns in enumerate(files):
            mf = MapFile(f"{tag}{fi + 1:03d}")
            all_ids = []
            for t in turns:
                ids = mf.turn(t.speaker, t.props, rng)
                all_ids.append(ids)
                for label, prem, concl in t.args:
                    mf.inference(label, [ids[p] for p in prem], ids[concl], rng, text_only=rng.random() < 0.1)
            flat = [i for ids in all_ids for i in ids]
            if len(flat) >= 3:
                a, b = rng.sample(flat, 2)
                mf.inference(None, [a], b, rng)
                if rng.random() < 0.5:
                    a, b = rng.sample(flat, 2)
                    mf.opaque(a, b)
            mf.write(out / "corpus/extra" / dataset / f"{tag}{fi + 1:03d}.jsonl")


# --------------------------------------------------------------------------
# post-editing and theory-CQ types


def plan_postedits(ivs, rng):
    """Chooses question discards and ill-fitting fills; returns CQ records."""
    live = [a for iv in ivs for a in iv.live_args()]
    for a in live:
        a.cq_ids = [f"{a.id}/cq{k}" for k in range(len(REGISTRY[a.scheme]["cq_patterns"]))]
    pinned = {id(a) for a in live if a.pinned_edits is not None}
    mt = {id(a) for iv in ivs if iv.speaker == "MT" for a in iv.live_args()}
    fig1b = {id(a) for a in live if a.bindings.get("goalG") == "making the economy fairer"}
    protected = pinned | mt | fig1b
    all_cqs = [(a, k) for a in live for k in range(len(a.cq_ids))]
    candidates = [(a, k) for a, k in all_cqs if id(a) not in protected]
    discarded = set()
    for a, k in rng.sample(candidates, QCQ_DISCARDS):
        discarded.add(a.cq_ids[k])

    def edits_of(a):
        return sum(1 for k, (r, e) in enumerate(zip(a.raw_cqs(), a.edited_cqs()))
                   if r != e and a.cq_ids[k] not in discarded)

    budget = POSTEDIT_TARGET - sum(edits_of(a) for a in live if id(a) in pinned)
    order = [a for a in live if id(a) not in protected]
    rng.shuffle(order)
    for a in order:
        if budget == 0:
            break
        opts = break_options(a)
        rng.shuffle(opts)
        for slot, value in opts:
            trial = dict(a.bindings)
            trial[slot] = value
            raw = cqs_for(a.scheme, trial)
            clean = a.edited_cqs()
            n = sum(1 for k, (r, e) in enumerate(zip(raw, clean)) if r != e and a.cq_ids[k] not in discarded)
            if 0 < n <= budget:
                a.bindings = trial
                budget -= n
                break
    assert budget == 0, f"post-edit budget left: {budget}"
    # one handcrafted double negation among the consequences arguments
    return discarded


def assign_theory_types(ivs, tpairs, rng):
    """Types for every final theory-CQ, honouring those fixed by theory matches."""
    types = {}
    for cq, t in tpairs:
        assert types.get(cq, t) == t
        types[cq] = t
    fixed = Counter(types.values())
    for t, n in fixed.items():
        assert n <= THEORY_TYPE_TOTALS[t], (t, n)
    return types


# --------------------------------------------------------------------------
# candidate questions


def arg_term(a):
    b = a.clean
    for slot in ("eventB", "goalG", "eventA", "subjecta", "C2", "valueV", "domainD"):
        if slot in b and b[slot]:
            return b[slot]
    return a.claim()


def phrase_for(a):
    """A short noun phrase naming what the argument is about."""
    term = arg_term(a)
    words = term.split()
    return " ".join(words[:6])


def text_for_type(t, a, speaker, rng):
    claim, premise, term = lower_first(a.claim()), lower_first(a.premise()), phrase_for(a)
    options = {
        "evidence": [
            f"What evidence supports the claim that {claim}?",
            f"Is there any data showing that {premise}?",
            f"How do we know that {claim}?",
            f"What proof does {speaker} offer that {premise}?",
            f"Can {speaker} back up the statement that {claim} with facts?",
        ],
        "relation": [
            f"Is there a real connection between '{premise}' and '{claim}'?",
            f"Why should '{premise}' lead us to accept that {claim}?",
            f"Does it follow from '{premise}' that {claim}?",
            f"How does {speaker} get from '{premise}' to '{claim}'?",
        ],
        "consequences": [
            f"What would be the side effects if {claim}?",
            f"Could acting on '{claim}' have unintended consequences?",
            f"Who would be harmed if {speaker} got their way on {term}?",
            f"What are the long-term costs of {term}?",
        ],
        "definition": [
            f"What exactly is meant by '{term}'?",
            f"How is '{term}' defined, and how would one measure it?",
            f"What does {speaker} mean by '{term}' in this context?",
            f"Is '{term}' being used in its usual sense here?",
        ],
        "other": [
            f"Is {speaker} implying that {claim}? If yes, why?",
            f"What does {speaker} want the audience to conclude about {term}?",
            f"Is {speaker} appealing to emotion when talking about {term}?",
            f"Why does {speaker} bring up {term} at this point?",
        ],
        "alternative": [
            f"Are there other ways to explain why {claim}?",
            f"What alternatives to {term} has {speaker} considered?",
            f"Could something other than '{premise}' explain this?",
            f"Is there a better option than {term}?",
        ],
        "exception": [
            f"Could there be situations where '{premise}' holds but '{claim}' does not?",
            f"Are there exceptions to the idea that {claim}?",
            f"Are there special circumstances that make '{claim}' false here?",
            f"What other factors could interfere with '{claim}'?",
        ],
        "source": [
            f"Is {speaker} a reliable source on {term}?",
            f"Where does the information about '{term}' come from?",
            f"Who told {speaker} that {premise}?",
            f"Can the source behind '{premise}' be checked?",
        ],
    }
    return options[t]


def invalid_texts(a, speaker):
    term = phrase_for(a)
    return [
        f"When did {speaker} first talk about {term}?",
        f"How many people in the audience agree with {speaker} about {term}?",
        f"What year did '{term}' become a topic of debate?",
        f"Who else has mentioned {term} recently?",
        f"Has {speaker} spoken about {term} in previous debates?",
        f"What is the history of {term}?",
        f"Which newspapers have covered {term}?",
    ]


def noarg_texts(iv, rng):
    out = []
    for f in iv.fillers + iv.props:
        f = lower_first(f.rstrip(".,"))
        out += [
            f"Why does {iv.speaker} say that '{f}'?",
            f"What is the context of the remark '{f}'?",
            f"Who is {iv.speaker} addressing with '{f}'?",
            f"What does {iv.speaker} mean with '{f}'?",
        ]
    return out


def newconcept_texts(iv, rng):
    out = []
    for a in iv.live_args() or [a for a, _, _ in iv.args]:
        for o in OUTSIDE:
            out.append(f"How does {o} relate to {phrase_for(a)}?")
            out.append(f"Should {o} be considered when discussing {phrase_for(a)}?")
    return out


def badreason_texts(iv, rng):
    out = []
    for a, _, _ in iv.args:
        term = phrase_for(a)
        out += [
            f"Why does {iv.speaker} oppose {term}?",
            f"Is {iv.speaker} saying that {term} should be banned?",
            f"Why does {iv.speaker} think that {term} is irrelevant?",
            f"Why does {iv.speaker} reject the idea of {term}?",
        ]
    return out


OTHER_TEXTS = [
    "The speaker uses an argument from consequences.", "This argument relies on an appeal to emotion.",
    "Note that the paragraph mixes several claims.", "The premises are stated informally.",
    "The argument could be stronger with more data.", "This is a persuasive statement rather than an argument.",
    "The speaker assumes the audience shares their values.", "Overall, the paragraph makes a political point.",
]


# --------------------------------------------------------------------------
# runs: rendering and response formatting


def join_props(props):
    out = []
    for p in props:
        p = p.strip()
        if not p:
            continue
        out.append(p if p[-1] in ".?!,;:" else p + ".")
    return " ".join(out)


def render_prompt(kind, iv):
    q = f"{QUERY} {iv.speaker}: “{join_props(iv.props)}”"
    return q if kind == "q" else f"{DEFINITION} {q}"


def wrap(text, rng):
    if len(text) > 80 and rng.random() < 0.5:
        cut = text.rfind(" ", 40, 80)
        if cut > 0:
            return [text[:cut], text[cut + 1:]]
    return [text]


def format_response(items, model, rng):
    style = rng.choice(["numbered", "numbered", "paren", "bullets", "paragraphs", "bold"]) if model.startswith("zephyr") \
        else rng.choice(["numbered", "numbered", "numbered", "paren", "bullets", "bold"])
    if len(items) >= 2 and rng.random() < 0.08 and all(len(i) < 90 for i in items):
        style = "inline"
    pre = rng.choice([
        "", "Here are some critical questions that should be asked:",
        "Sure! Here are some critical questions regarding the arguments in the paragraph:",
        "Critical questions:",
    ])
    post = rng.choice(["", "", "These questions can help evaluate the strength of the arguments.",
                       "I hope this helps! Let me know if you have any other questions."])
    lines = []
    if style == "paragraphs":
        if pre:
            lines += [pre if pre.endswith(":") else pre + ":", ""]
        for it in items:
            lines += wrap(it, rng) + [""]
        return "\n".join(lines).rstrip("\n") + "\n"
    if style == "inline":
        body = " ".join(f"{k + 1}. {it}" for k, it in enumerate(items))
        return (pre + "\n\n" if pre else "") + body + ("\n\n" + post if post else "") + "\n"
    if pre:
        lines += [pre, ""]
    spaced = rng.random() < 0.3
    bullet = rng.choice(["- ", "* "])
    for k, it in enumerate(items):
        marker = {"numbered": f"{k + 1}. ", "paren": f"{k + 1}) ", "bold": f"**{k + 1}.** ", "bullets": bullet}[style]
        parts = wrap(it, rng)
        lines.append(marker + parts[0])
        lines += ["   " + p for p in parts[1:]]
        if spaced:
            lines.append("")
    if post:
        if not spaced:
            lines.append("")
        lines.append(post)
    return "\n".join(lines).rstrip("\n") + "\n"


# --------------------------------------------------------------------------
# main assembly


def distribute(total, n, rng, minimum=1):
    base = [minimum] * n
    rest = total - minimum * n
    for _ in range(rest):
        base[rng.randrange(n)] += 1
    return base


def sha_fraction(task):
    head = int.from_bytes(hashlib.sha256(task.encode()).digest()[:8], "big")
    return head / (2 ** 64 - 1)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(ROOT / "fixtures"))
    ap.add_argument("--seed", type=int, default=20240611)
    args = ap.parse_args()
    out = Path(args.out)
    rng = random.Random(args.seed)

    ivs = build_sample(rng)
    write_sample(ivs, out, rng)
    write_extra(out, random.Random(args.seed + 1))

    discarded_cqs = plan_postedits(ivs, rng)
    live = [a for iv in ivs for a in iv.live_args()]
    final_cqs = [cq for a in live for cq in a.cq_ids if cq not in discarded_cqs]
    assert len(final_cqs) == 129, len(final_cqs)
    arg_by_cq = {cq: a for a in live for cq in a.cq_ids}

    # ---- candidates
    mt = next(iv for iv in ivs if iv.speaker == "MT")
    mt1, mt2 = mt.live_args()
    single_live = {iv.prefix for iv in ivs if len(iv.live_args()) < 2}
    uncovered_iv = next(iv for iv in ivs if iv.prefix == "mm06")
    uncovered = next(a for a in uncovered_iv.live_args() if a.scheme == "Sign")

    slots = []  # dict per candidate: iv, group, label
    for g in GROUPS:
        counts = distribute(sum(GROUP_LABELS[g]), len(ivs), rng)
        labels = []
        for lab, n in zip(LABELS, GROUP_LABELS[g]):
            labels += [lab] * n
        rng.shuffle(labels)
        pos = 0
        for iv, n in zip(ivs, counts):
            for _ in range(n):
                slots.append(dict(iv=iv, group=g, label=labels[pos]))
                pos += 1

    # the MT questions go into llama runs; make sure enough relevant labels sit there
    pinned_texts = [
        ("How is `sufficient surpluses' defined, and how would one measure it?", "V", [(mt2, "definition")], ("llama-2-13b-chat", "q")),
        ("Is MT implying that current forms of capitalism are more successful at generating profits and surpluses than the one being discussed? If yes, why?", "V", [(mt1, "other"), (mt2, "other")], ("llama-2-13b-chat", "dq")),
        ("What evidence is there to support the claim that the form of capitalism being used in the developed world was not generating sufficient surpluses?", "V", [(mt2, "evidence")], ("llama-2-13b-chat", "q")),
        ("Are there any alternative explanations for why the money did not flow into industrial activities?", "T", [(mt2, "exception")], ("llama-2-13b-chat", "dq")),
        ("What alternative explanations are there for the lack of investment in industrial activities?", "V", [(mt1, "alternative")], ("zephyr-13b", "q")),
    ]
    for text, role, pairs, g in pinned_texts:
        mine = [s for s in slots if s["iv"] is mt and s["group"] == g and s["label"] == "Relevant" and "pinned" not in s]
        if not mine:
            donor = next(s for s in slots if s["iv"] is mt and s["group"] == g and "pinned" not in s)
            other = next(s for s in slots if s["iv"] is not mt and s["group"] == g and s["label"] == "Relevant")
            donor["label"], other["label"] = "Relevant", donor["label"]
            mine = [donor]
        mine[0]["pinned"] = (text, role, pairs)

    roles = ["T1"] * 20 + ["T2"] * 16 + ["V1"] * 47 + ["V2"] * 54 + ["I1"] * 21 + ["I2"] * 33 + ["N"] * 117
    for s in slots:
        if "pinned" in s:
            roles.remove(s["pinned"][1] + str(len(s["pinned"][2])))
    rng.shuffle(roles)
    free = [s for s in slots if s["label"] == "Relevant" and "pinned" not in s]
    assert len(free) == len(roles)
    for s, r in zip(free, roles):
        s["role"] = r
    # two-argument roles cannot go to interventions with a single live argument
    for s in free:
        if s["iv"].prefix in single_live and (s["role"].endswith("2") or s["role"][0] == "T"):
            swap = next(o for o in free if o["iv"].prefix not in single_live and o["role"] in ("N", "V1", "I1"))
            s["role"], swap["role"] = swap["role"], s["role"]

    # argument choice, least-covered first
    cover = Counter()
    for s in slots:
        if "pinned" in s:
            for a, _ in s["pinned"][2]:
                cover[id(a)] += 1

    def choose_args(iv, k):
        pool = [a for a in iv.live_args() if a is not uncovered]
        rng.shuffle(pool)
        pool.sort(key=lambda a: cover[id(a)])
        picked = pool[:k]
        for a in picked:
            cover[id(a)] += 1
        return picked

    tneed = []
    for t, n in TPAIR_THEORY.items():
        tneed += [t] * n
    tneed.remove("exception")  # the pinned MT question
    rng.shuffle(tneed)
    vtypes = []
    for t, n in VPAIR_TYPES.items():
        vtypes += [t] * n
    for s in slots:
        if "pinned" in s and s["pinned"][1] == "V":
            for _, t in s["pinned"][2]:
                vtypes.remove(t)
    rng.shuffle(vtypes)

    theory_type = {}
    theory_of_pair = {}
    tpair_llm_type = {}
    for s in slots:
        if "pinned" in s:
            text, role, pairs = s["pinned"]
            s["args"] = [a for a, _ in pairs]
            s["role"] = role + str(len(pairs))
            if role == "T":
                a, t = pairs[0]
                cq = a.cq_ids[1]
                theory_type[cq] = t
                s["theory"] = {a.id: cq}
                s["ptypes"] = {a.id: t}
            else:
                s["ptypes"] = {a.id: t for a, t in pairs}
    # theory-matched candidates first: argument and type are chosen together,
    # reusing already-typed theory-CQs where possible
    def cq_options(a, want):
        finals = [cq for cq in a.cq_ids if cq not in discarded_cqs]
        same = [cq for cq in finals if theory_type.get(cq) == want]
        natural = [cq for cq in finals if cq not in theory_type
                   and NATURAL_TYPES[a.scheme][int(cq.rsplit("cq", 1)[1])] == want]
        fresh = [cq for cq in finals if cq not in theory_type]
        return same, natural, fresh

    for s in slots:
        if not s.get("role", "").startswith("T") or "args" in s:
            continue
        k = 2 if s["role"].endswith("2") else 1
        s["args"], s["theory"], s["ptypes"] = [], {}, {}
        for _ in range(k):
            best = None
            pool = [a for a in s["iv"].live_args() if a is not uncovered and a not in s["args"]]
            for want in sorted(set(tneed), key=lambda t: -tneed.count(t)):
                for a in pool:
                    same, natural, fresh = cq_options(a, want)
                    score = (3 if same and want == "consequences" else 2 if natural else 1 if (same or fresh) else 0)
                    if score == 0:
                        continue
                    key = (score, -cover[id(a)], rng.random())
                    if best is None or key > best[0]:
                        best = (key, a, want)
            assert best is not None, "no theory-CQ fits in " + s["iv"].prefix
            _, a, want = best
            tneed.remove(want)
            same, natural, fresh = cq_options(a, want)
            if same and (want == "consequences" or rng.random() < 0.5 or not fresh):
                cq = rng.choice(same)
            elif natural:
                cq = rng.choice(natural)
            else:
                cq = rng.choice(fresh)
            theory_type[cq] = want
            cover[id(a)] += 1
            s["args"].append(a)
            s["theory"][a.id] = cq
            s["ptypes"][a.id] = want
    for s in slots:
        if s.get("role") is None or "args" in s:
            continue
        k = 2 if s["role"].endswith("2") else 1
        if s["role"] == "N":
            s["args"] = []
            continue
        s["args"] = choose_args(s["iv"], k)
        if s["role"][0] == "V":
            s["ptypes"] = {a.id: vtypes.pop() for a in s["args"]}
    assert not tneed and not vtypes
    # llm side of two theory pairs disagrees with the theory side
    for src in ("source", "exception"):
        s, aid = next((s, aid) for s in slots if s.get("role", "").startswith("T") and "pinned" not in s
                      for aid, t in s["ptypes"].items() if t == src)
        s["ptypes"][aid] = "consequences"
    # repair coverage: every live argument but one gets at least one pair
    for a in live:
        if a is uncovered or cover[id(a)] > 0:
            continue
        iv = a.intervention
        donor = next((o for o in slots if o["iv"] is iv and o.get("role") in ("V1", "I1") and "pinned" not in o
                      and cover[id(o["args"][0])] > 1), None)
        if donor is None:
            spare = next(o for o in slots if o["iv"] is iv and o.get("role") == "N")
            donor = next(o for o in slots if o.get("role") in ("V1", "I1") and "pinned" not in o
                         and cover[id(o["args"][0])] > 1)
            spare["role"], spare["args"] = donor["role"], donor["args"]
            if "ptypes" in donor:
                spare["ptypes"] = donor.pop("ptypes")
            donor["role"], donor["args"] = "N", []
            donor = spare
        old = donor["args"][0]
        cover[id(old)] -= 1
        cover[id(a)] += 1
        donor["args"] = [a]
        if "ptypes" in donor:
            donor["ptypes"] = {a.id: donor["ptypes"][old.id]}
    for a in live:
        assert (cover[id(a)] > 0) == (a is not uncovered), a.id

    # fill in the remaining theory types to the column totals
    counts = Counter(theory_type.values())
    for t in TYPES:
        assert counts[t] <= THEORY_TYPE_TOTALS[t], (t, counts[t])
    rest = [cq for cq in final_cqs if cq not in theory_type]
    need = Counter({t: THEORY_TYPE_TOTALS[t] - counts[t] for t in TYPES})
    natural_first = sorted(rest, key=lambda cq: rng.random())
    for cq in natural_first:
        a = arg_by_cq[cq]
        t = NATURAL_TYPES[a.scheme][int(cq.rsplit("cq", 1)[1])]
        if need[t] > 0:
            theory_type[cq] = t
            need[t] -= 1
    for cq in natural_first:
        if cq not in theory_type:
            t = next(t for t in TYPES if need[t] > 0)
            theory_type[cq] = t
            need[t] -= 1
    assert sum(need.values()) == 0

    # texts
    by_iv = defaultdict(list)
    for s in slots:
        by_iv[s["iv"].prefix].append(s)
    for iv in ivs:
        taken = set()
        mine = by_iv[iv.prefix]
        for s in mine:
            if "pinned" in s:
                s["text"] = s["pinned"][0]
                taken.add(normalize(s["text"]))

        def unique(options, allow_dup=False):
            opts = list(options)
            rng.shuffle(opts)
            for o in opts:
                if normalize(o) not in taken:
                    taken.add(normalize(o))
                    return o
            raise AssertionError(f"ran out of texts in {iv.prefix}")

        nc, br, na = newconcept_texts(iv, rng), badreason_texts(iv, rng), noarg_texts(iv, rng)
        generic = [g for g in GENERIC]
        for s in mine:
            if "text" in s:
                continue
            lab = s["label"]
            if lab == "NonSpecific":
                s["text"] = rng.choice(generic[:6])
            elif lab == "NewConcept":
                s["text"] = unique(nc)
            elif lab == "BadReasoning":
                s["text"] = unique(br)
            elif lab == "Other":
                s["text"] = unique(OTHER_TEXTS)
            elif s["role"] == "N":
                s["text"] = unique(na)
            elif s["role"][0] == "I":
                s["text"] = unique(invalid_texts(s["args"][0], iv.speaker))
            else:
                a = s["args"][0]
                s["text"] = unique(text_for_type(s["ptypes"][a.id], a, iv.speaker, rng))
        generic_norm = {normalize(g) for g in GENERIC}
        for s in mine:
            if s["label"] != "NonSpecific":
                assert normalize(s["text"]) not in generic_norm

    # runs
    runs, run_counts, cands = [], [], []
    t0 = datetime(2024, 2, 12, 10, 0, tzinfo=timezone.utc)
    tick = 0
    for kind in ("q", "dq"):
        for iv in ivs:
            for model in MODELS:
                g = (model, kind)
                items = [s for s in by_iv[iv.prefix] if s["group"] == g]
                rng.shuffle(items)
                run_id = f"{iv.id}:{model}:{kind}:1"
                raw = format_response([s["text"] for s in items], model, rng)
                tick += 1
                runs.append(dict(
                    id=run_id, intervention_id=iv.id, model_name=model,
                    prompt_kind="QueryOnly" if kind == "q" else "DefinitionPlusQuery",
                    rendered_prompt=render_prompt(kind, iv), raw_response=raw,
                    decoding=dict(temperature=0.0, max_tokens=512),
                    timestamp=(t0 + timedelta(seconds=41 * tick)).strftime("%Y-%m-%dT%H:%M:%SZ"),
                ))
                run_counts.append(dict(run_id=run_id, items=len(items)))
                for k, s in enumerate(items):
                    s["id"] = f"{run_id}#{k + 1}"
                    cands.append(s)
    # zephyr first so the report lists it first
    runs.sort(key=lambda r: (r["prompt_kind"] != "QueryOnly", MODELS.index(r["model_name"])))
    assert len(runs) == 84 and len(cands) == 495

    # judgments
    log = []
    clock = [datetime(2024, 3, 4, 9, 0, tzinfo=timezone.utc)]

    def put(annotator, stage, subjects, value):
        clock[0] += timedelta(seconds=37)
        log.append(dict(
            id=f"j{len(log) + 1}", annotator=annotator,
            timestamp=clock[0].strftime("%Y-%m-%dT%H:%M:%SZ"), stage=stage, subject_ids=subjects,
            value=value, task_id=f"{stage}:{'|'.join(subjects)}",
        ))

    all_args = [a for iv in ivs for a, _, _ in iv.args]
    revised = rng.sample([a for a in live if a.pinned_edits is None and a.scheme != "PracticalReasoning"], 2)
    for a in all_args:
        if a.discard:
            put("ann1", "FillVariables", [a.id], {"discard": a.discard})
            continue
        if a in revised:
            first = dict(a.bindings)
            slot = next(iter(SLOT_CLASS[a.scheme]))
            first[slot] = first[slot] + " and so on"
            put("ann1", "FillVariables", [a.id], {"bindings": first})
        put("ann1", "FillVariables", [a.id], {"bindings": a.bindings})
    gold_flags = []
    for a in live:
        raw, edited = a.raw_cqs(), a.edited_cqs()
        for k, cq in enumerate(a.cq_ids):
            if cq in discarded_cqs:
                put("ann1", "PostEdit", [cq], {"discard": "meaningless for this argument"})
                continue
            if raw[k] != edited[k]:
                put("ann1", "PostEdit", [cq], {"edit": edited[k]})
            else:
                put("ann1", "PostEdit", [cq], {"keep": True})
            gold_flags.append(dict(id=cq, text=raw[k], edited=raw[k] != edited[k], final_text=edited[k]))
    for cq in final_cqs:
        put("ann1", "TypeLabel", [cq], theory_type[cq])
    order = sorted(cands, key=lambda s: [r["id"] for r in runs].index(s["id"].rsplit("#", 1)[0]))
    relabelled = next(s for s in order if s["label"] == "Relevant" and s.get("role") == "N")
    for s in order:
        if s is relabelled:
            put("ann1", "RelevanceTriage", [s["id"]], "NonSpecific")
        put("ann1", "RelevanceTriage", [s["id"]], s["label"])
    for s in order:
        if s["label"] == "Relevant":
            put("ann1", "ArgumentMatch", [s["id"]], [a.id for a in s["args"]])
    for s in order:
        for a in s.get("args", []):
            theory = s.get("theory", {}).get(a.id)
            put("ann1", "TheoryMatch", [s["id"], a.id], [theory] if theory else [])
    for s in order:
        if s.get("role", "")[:1] in ("V", "I"):
            for a in s["args"]:
                put("ann1", "ValidityJudgment", [s["id"], a.id], "yes" if s["role"][0] == "V" else "no")
    for s in order:
        if s.get("role", "")[:1] in ("V", "T"):
            for a in s["args"]:
                put("ann1", "TypeLabel", [s["id"], a.id], s["ptypes"][a.id])

    # second annotator on the sampled tasks
    primary = [r for r in log if r["annotator"] == "ann1"]
    latest = {}
    for r in primary:
        latest[r["task_id"]] = r
    for task, r in sorted(latest.items(), key=lambda kv: int(kv[1]["id"][1:])):
        if sha_fraction(task) >= DOUBLE_RATE:
            continue
        value = r["value"]
        stage = r["stage"]
        roll = rng.random()
        if stage == "FillVariables" and "bindings" in value and roll < 0.3:
            b = dict(value["bindings"])
            slot = rng.choice([s for s in b if s != "neg"])
            words = b[slot].split()
            if len(words) > 2:
                b[slot] = " ".join(words[:-1])
                value = {"bindings": b}
        elif stage == "RelevanceTriage" and roll < 0.12:
            value = rng.choice([l for l in LABELS if l != value])
        elif stage == "ValidityJudgment" and roll < 0.2:
            value = "no" if value == "yes" else "yes"
        elif stage == "TypeLabel" and roll < 0.25:
            value = rng.choice([t for t in TYPES if t != value])
        elif stage == "PostEdit" and roll < 0.1 and "keep" in value:
            value = {"edit": arg_by_cq[r["subject_ids"][0]].raw_cqs()[int(r["subject_ids"][0].rsplit("cq", 1)[1])].rstrip("?") + " here?"}
        put("ann2", stage, r["subject_ids"], value)

    gold = out / "gold"
    gold.mkdir(parents=True, exist_ok=True)

    def dump(name, rows):
        with (gold / name).open("w") as f:
            for r in rows:
                f.write(json.dumps(r, ensure_ascii=False) + "\n")

    dump("runs.jsonl", runs)
    dump("run_counts.jsonl", run_counts)
    dump("judgments.jsonl", log)
    dump("postedit_gold.jsonl", gold_flags)
    (gold / "roster.json").write_text(json.dumps({"annotators": ANNOTATORS}, indent=2) + "\n")

    prompts = out / "prompts"
    prompts.mkdir(parents=True, exist_ok=True)
    (prompts / f"{mt.id}.q.txt").write_text(render_prompt("q", mt))
    (prompts / f"{mt.id}.dq.txt").write_text(render_prompt("dq", mt))

    summary = dict(
        sample_interventions=len(ivs), sample_arguments=len(all_args), live_arguments=len(live),
        theory_cqs=len(final_cqs), postedited=sum(1 for g in gold_flags if g["edited"]),
        runs=len(runs), candidates=len(cands), judgments=len(log),
        mt_intervention=mt.id,
    )
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
