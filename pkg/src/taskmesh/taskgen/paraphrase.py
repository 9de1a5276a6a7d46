"""Template-bank paraphrasing of commands and sub-task sentences.

Each canonical sentence expands into a finite, deterministic bank of variants:
framing prefixes/suffixes crossed with synonym substitutions of the phrases
the sentence contains. Content anchors (colors, ordinals, counts) are never
substituted, so paraphrases of different sub-tasks stay separable under the
hashing embedder. Banks are split 80/20 into a training slice (sampled while
building datasets) and a held-out slice (used only for evaluation).

A small bank of deliberately vague variants per sentence exercises the
known-ambiguous failure class; those are reported, never asserted.
"""

from ..errors import InvalidArgumentError
from ..seeding import child_seed, rng_for

# Canonical phrase first; alternatives follow. Matching is longest-canonical-first.
SYNONYM_GROUPS = (
    ("navigate to the switch", "head to the switch", "move to the switch",
     "make your way to the switch", "proceed to the switch"),
    ("navigate to the goal area", "head for the goal area", "move to the goal area",
     "proceed to the goal area", "make for the goal area"),
    ("search the highlighted region", "sweep the highlighted region",
     "comb the highlighted area", "scan the region of interest"),
    ("return to base", "head back to base", "go back to base", "come back to base"),
    ("hold position at the base", "stay put at the base", "hold steady at the base"),
    ("defend the position", "guard the position", "hold the position",
     "protect the position"),
    ("wide formation", "spread formation", "loose formation"),
    ("tight formation", "close formation", "compact formation"),
    ("goal room", "objective room", "final room"),
    ("reach your target", "get to your target", "close on your target"),
    ("pick it up", "grab it", "retrieve it", "collect it"),
    ("press it", "hit it", "activate it"),
    ("carrying the flag", "with the flag in tow", "holding the flag"),
    ("proceed to the goal area", "continue to the goal area", "advance to the goal area"),
    ("find", "locate", "search for", "hunt down", "track down"),
    ("head to", "go to", "move to", "make your way to"),
    ("switch", "trigger", "actuator"),
    ("flag", "banner"),
    ("room", "chamber"),
    ("targets", "objects"),
)

PREFIXES = ("", "team, ", "units, ", "robots, ", "everyone, ")
SUFFIXES = ("", " right away", " now", " as briefed", " without delay")

# Vague substitutions for the ambiguous-paraphrase report.
_AMBIGUOUS_SWAPS = (
    ("head to", "make towards"),
    ("navigate to", "drift over to"),
    ("switch", "release plate"),
    ("room", "bay"),
    ("flag", "ring"),
    ("goal", "far end"),
    ("press it", "signal ready when it glows"),
    ("find", "deal with"),
    ("targets", "points"),
)

_BANK_CAP = 80


def _segment(text: str):
    """Split a lowercased sentence into literals and synonym-group slots."""
    lowered = text.lower().rstrip(".").strip()
    spans = []
    for gi, group in enumerate(SYNONYM_GROUPS):
        canon = group[0]
        start = 0
        while True:
            idx = lowered.find(canon, start)
            if idx < 0:
                break
            spans.append((idx, idx + len(canon), gi))
            start = idx + len(canon)
    # Prefer longer matches; drop anything overlapping an already-kept span.
    spans.sort(key=lambda t: (-(t[1] - t[0]), t[0]))
    kept = []
    for span in spans:
        if all(span[1] <= k[0] or span[0] >= k[1] for k in kept):
            kept.append(span)
    kept.sort()
    parts = []
    cursor = 0
    for start, end, gi in kept:
        if start > cursor:
            parts.append(("lit", lowered[cursor:start]))
        parts.append(("group", gi))
        cursor = end
    if cursor < len(lowered):
        parts.append(("lit", lowered[cursor:]))
    return parts


def paraphrase_bank(text: str) -> list[str]:
    """The deterministic variant bank for a canonical sentence."""
    if not text.strip():
        raise InvalidArgumentError("cannot paraphrase empty text")
    parts = _segment(text)
    radices = [len(PREFIXES), len(SUFFIXES)]
    radices.extend(len(SYNONYM_GROUPS[gi]) for kind, gi in parts if kind == "group")
    total = 1
    for r in radices:
        total *= r
    if total <= _BANK_CAP:
        picks = range(total)
    else:
        rng = rng_for(child_seed(0, "bank", text))
        picks = sorted(int(i) for i in rng.choice(total, size=_BANK_CAP, replace=False))
    canonical = text.strip()
    if not canonical.endswith("."):
        canonical += "."
    bank = [canonical[0].upper() + canonical[1:]]
    for flat in picks:
        digits = []
        rem = flat
        for r in radices:
            digits.append(rem % r)
            rem //= r
        prefix = PREFIXES[digits[0]]
        suffix = SUFFIXES[digits[1]]
        slot = 2
        chunks = []
        for kind, payload in parts:
            if kind == "lit":
                chunks.append(payload)
            else:
                chunks.append(SYNONYM_GROUPS[payload][digits[slot]])
                slot += 1
        sentence = prefix + "".join(chunks) + suffix
        sentence = sentence[0].upper() + sentence[1:] + "."
        if sentence != bank[0]:
            bank.append(sentence)
    return bank


def bank_split(text: str, train_fraction: float = 0.8) -> tuple[list[str], list[str]]:
    """Partition a sentence's bank into (training, held-out) slices.

    The split is a property of the sentence alone, so datasets built with any
    seed sample only from the training slice and evaluations on the held-out
    slice are honestly unseen.
    """
    if not 0.0 < train_fraction < 1.0:
        raise InvalidArgumentError("train_fraction must be in (0, 1)")
    bank = paraphrase_bank(text)
    rng = rng_for(child_seed(0, "bank-split", text))
    # the canonical sentence (index 0) always belongs to the training slice
    order = rng.permutation(len(bank) - 1) + 1
    n_train = max(1, min(len(bank) - 1, round(train_fraction * len(bank))))
    train = [bank[0]] + [bank[i] for i in order[:n_train - 1]]
    held = [bank[i] for i in order[n_train - 1:]]
    return train, held


def sample_paraphrase(text: str, rng, held_out: bool = False) -> str:
    """Draw one paraphrase from the training (or held-out) slice."""
    train, held = bank_split(text)
    pool = held if held_out else train
    return pool[int(rng.integers(len(pool)))]


def ambiguous_paraphrases(text: str) -> list[str]:
    """Deliberately vague variants; outcomes are reported, not asserted."""
    lowered = text.lower().rstrip(".").strip()
    out = []
    swapped_all = lowered
    for canon, vague in _AMBIGUOUS_SWAPS:
        if canon in swapped_all:
            swapped_all = swapped_all.replace(canon, vague)
    if swapped_all != lowered:
        out.append("Units, smoothly " + swapped_all + ".")
        out.append(swapped_all[0].upper() + swapped_all[1:] + ", signal when done.")
    return out
