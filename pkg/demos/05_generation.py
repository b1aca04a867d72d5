"""Render annotation prompts, parse model responses, and run the full
generation loop against a scripted offline client."""

import tempfile
from pathlib import Path

from aspect_cluster import (
    CachedChatClient,
    Comment,
    Corpus,
    Language,
    default_templates,
    format_annotation,
    generate_cats,
    instruction_prompt,
    parse_annotation,
    render_prompt,
)

comment = Comment(
    id="en-42",
    language=Language.EN,
    text="Every other car on the road is a luxury model, yet wages are flat.",
    gold_cats=("luxury cars", "wages"),
)

# The few-shot template for the comment's language, with the comment slotted
# into the final quoted position.
prompt = render_prompt(default_templates()[Language.EN], comment)
print("few-shot prompt tail:")
print("  ..." + prompt[-140:])

# The compact instruction prompt used for exports; the aspect-term wording is
# chosen by a stable hash of the comment id, so it never changes between runs.
print("\ninstruction prompt head:")
print("  " + instruction_prompt(comment)[:110] + "...")

# Parsing tolerates chatter and always takes the LAST bracketed group.
response = (
    "Here is an example first: [ATs: demo | EP: P]\n"
    "For your comment: [ATs: luxury cars, wages, luxury cars | EP: N] done!"
)
annotation = parse_annotation(response)
print(f"\nparsed cats={annotation.cats} polarity={annotation.polarity.value} truncated={annotation.truncated}")
print("formatted back:", format_annotation(annotation))


class ScriptedClient:
    """Offline stand-in for a chat endpoint; HttpChatClient drops in the
    same way against a real one."""

    def complete(self, prompt: str) -> str:
        if "luxury" in prompt:
            return "[ATs: luxury cars, flat wages | EP: N]"
        return "[ATs: NA | EP: C]"


corpus = Corpus(
    name="demo-gen",
    comments=(
        comment,
        Comment(id="en-43", language=Language.EN, text="ok then", gold_cats=()),
    ),
)

cache = Path(tempfile.mkdtemp(prefix="aspect-demo-")) / "responses.jsonl"
client = CachedChatClient(ScriptedClient(), cache)
result = generate_cats(corpus, client)
for c in result.corpus:
    print(f"{c.id}: pred={c.pred_cats} polarity={c.polarity.value}")
print(f"failures: {len(result.failures)}")

# The cache makes reruns idempotent: this pass never calls the client.
replay = generate_cats(corpus, CachedChatClient(None, cache))
print("replay identical:", replay.corpus.comments == result.corpus.comments)
