"""Direct preference optimization math and preference-pair export.

The loss over a batch of preference examples is

    L = mean_i [ -log sigmoid(beta * (d_pref_i - d_rej_i)) ]

where d_pref = logp_policy(preferred) - logp_ref(preferred) and d_rej is the
same for the rejected completion.  Only the policy/reference log-ratios
enter, so shifting both log-probs of a completion by a constant changes
nothing.  Gradients are with respect to the two policy log-probs; reference
log-probs are frozen.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path

from .corpus import Comment, Corpus
from .evaluation import MissingPredictionsError


@dataclass(frozen=True)
class DpoConfig:
    beta: float = 0.1

    def __post_init__(self):
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")


@dataclass(frozen=True)
class PreferenceExample:
    """Log-probabilities of one preference pair under policy and reference.

    Log-probs of completions are log of a probability, hence <= 0.
    """

    context_id: str
    logp_policy_preferred: float
    logp_ref_preferred: float
    logp_policy_rejected: float
    logp_ref_rejected: float

    def __post_init__(self):
        for name in ("logp_policy_preferred", "logp_ref_preferred", "logp_policy_rejected", "logp_ref_rejected"):
            value = getattr(self, name)
            if not math.isfinite(value) or value > 0.0:
                raise ValueError(f"{name} must be finite and <= 0, got {value}")


def sigmoid(x: float) -> float:
    """Logistic function, branch-stable for large |x|."""
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def _softplus(t: float) -> float:
    # log(1 + e^t) without overflow; equals -log(sigmoid(-t)).
    if t > 0.0:
        return t + math.log1p(math.exp(-t))
    return math.log1p(math.exp(t))


def _logit(example: PreferenceExample, beta: float) -> float:
    d_pref = example.logp_policy_preferred - example.logp_ref_preferred
    d_rej = example.logp_policy_rejected - example.logp_ref_rejected
    return beta * (d_pref - d_rej)


def dpo_loss(batch: Sequence[PreferenceExample], cfg: DpoConfig = DpoConfig()) -> float:
    """Mean -log sigmoid(beta * (d_pref - d_rej)) over the batch.

    At zero log-ratios each term is -log(1/2) = ln 2.  Loss is positive,
    finite, and decreasing in the preferred-minus-rejected margin.
    """
    if len(batch) == 0:
        raise ValueError("dpo_loss requires a non-empty batch")
    return sum(_softplus(-_logit(ex, cfg.beta)) for ex in batch) / len(batch)


def dpo_grad(batch: Sequence[PreferenceExample], cfg: DpoConfig = DpoConfig()) -> list[tuple[float, float]]:
    """Analytic gradients of dpo_loss for each example, as pairs

        (dL/d logp_policy_preferred, dL/d logp_policy_rejected)
          = (-beta * (1 - s) / N, +beta * (1 - s) / N),   s = sigmoid(logit).

    The two entries are exact negatives; the preferred gradient is <= 0
    (raising the preferred completion's policy log-prob never hurts).
    """
    if len(batch) == 0:
        raise ValueError("dpo_grad requires a non-empty batch")
    n = len(batch)
    grads = []
    for ex in batch:
        g = cfg.beta * (1.0 - sigmoid(_logit(ex, cfg.beta))) / n
        grads.append((-g, g))
    return grads


@dataclass(frozen=True)
class PreferenceSkeleton:
    """A preference pair ready for log-prob scoring by an external trainer:
    the rendered prompt plus the preferred (human) and rejected (machine)
    annotation strings."""

    id: str
    prompt: str
    chosen: str
    rejected: str


def format_cats(terms: Sequence[str]) -> str:
    """Aspect terms joined by ", " in annotation order; "NA" when empty."""
    return ", ".join(terms) if terms else "NA"


def build_preference_set(
    human: Corpus,
    machine: Corpus,
    prompt_builder: Callable[[Comment], str] | None = None,
) -> tuple[list[PreferenceSkeleton], int]:
    """Pair human gold annotations (chosen) against machine predictions
    (rejected) for every comment where the two term sets differ.

    Both corpora must cover the same comment ids, and the machine corpus must
    carry pred_cats.  Comments whose human and machine term sets coincide
    teach nothing and are skipped; the skip count is returned alongside the
    pairs, which follow the human corpus order.
    """
    if prompt_builder is None:
        from .generation import instruction_prompt

        prompt_builder = instruction_prompt
    machine_by_id = {c.id: c for c in machine}
    if {c.id for c in human} != set(machine_by_id):
        raise ValueError("human and machine corpora must cover the same comment ids")
    skeletons: list[PreferenceSkeleton] = []
    skipped = 0
    for c in human:
        m = machine_by_id[c.id]
        if m.pred_cats is None:
            raise MissingPredictionsError(f"machine comment {c.id!r} has no pred_cats")
        if set(c.gold_cats) == set(m.pred_cats):
            skipped += 1
            continue
        skeletons.append(
            PreferenceSkeleton(
                id=c.id,
                prompt=prompt_builder(c),
                chosen=format_cats(c.gold_cats),
                rejected=format_cats(m.pred_cats),
            )
        )
    return skeletons, skipped


def write_preference_jsonl(skeletons: Sequence[PreferenceSkeleton], path: str | Path) -> None:
    """Serialize pairs as JSONL: {"id", "prompt", "chosen", "rejected"}."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for s in skeletons:
            record = {"id": s.id, "prompt": s.prompt, "chosen": s.chosen, "rejected": s.rejected}
            fh.write(json.dumps(record, ensure_ascii=False))
            fh.write("\n")
