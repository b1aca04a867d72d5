"""Preference-loss arithmetic and exporting preference pairs for a DPO trainer."""

import math
import tempfile
from pathlib import Path

from aspect_cluster import (
    Comment,
    Corpus,
    DpoConfig,
    Language,
    PreferenceExample,
    build_preference_set,
    dpo_grad,
    dpo_loss,
    sigmoid,
    write_preference_jsonl,
)

# One preference pair: the policy already likes the preferred completion a
# bit more than the reference does, and the rejected one a bit less.
example = PreferenceExample(
    context_id="demo",
    logp_policy_preferred=-4.2,
    logp_ref_preferred=-5.0,
    logp_policy_rejected=-6.1,
    logp_ref_rejected=-5.5,
)
cfg = DpoConfig(beta=0.1)
print(f"sigmoid(0) = {sigmoid(0.0)}, sigmoid(2) = {sigmoid(2.0):.6f}")
print(f"loss  = {dpo_loss([example], cfg):.6f}")
g_pref, g_rej = dpo_grad([example], cfg)[0]
print(f"grad  = ({g_pref:+.6f} wrt preferred, {g_rej:+.6f} wrt rejected)")

# With zero log-ratios the model has learned nothing yet and the loss is ln 2,
# for any beta.
flat = PreferenceExample("flat", -3.0, -3.0, -8.0, -8.0)
print(f"loss at zero log-ratios = {dpo_loss([flat]):.12f} (ln 2 = {math.log(2):.12f})")

# Export pairs: human annotations are chosen, machine annotations rejected,
# and comments where the two term sets agree are skipped.
human = Corpus(
    name="human",
    comments=(
        Comment(id="c1", language=Language.EN, text="Trains were late again all week.",
                gold_cats=("train delays",)),
        Comment(id="c2", language=Language.EN, text="CPF covers more than people think.",
                gold_cats=("CPF savings",)),
    ),
)
machine = Corpus(
    name="machine",
    comments=(
        Comment(id="c1", language=Language.EN, text="Trains were late again all week.",
                gold_cats=("train delays",), pred_cats=("weather",)),
        Comment(id="c2", language=Language.EN, text="CPF covers more than people think.",
                gold_cats=("CPF savings",), pred_cats=("CPF savings",)),
    ),
)
skeletons, skipped = build_preference_set(human, machine)
print(f"pairs: {len(skeletons)}, skipped (already correct): {skipped}")

out = Path(tempfile.mkdtemp(prefix="aspect-demo-")) / "prefs.jsonl"
write_preference_jsonl(skeletons, out)
print(f"wrote {out}")
record = out.read_text(encoding="utf-8").splitlines()[0]
print(record[:120] + ("..." if len(record) > 120 else ""))
