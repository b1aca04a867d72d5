"""Default prompt bodies for aspect-term annotation.

One few-shot annotation prompt per language, each with a single ``{comment}``
placeholder at the end, plus two instruction bodies used for fine-tuning
style prompts.  The per-language bodies are fixed reference strings and are
reproduced exactly as used, quirks included; do not edit them casually, the
regression tests pin them.
"""

from __future__ import annotations

from .corpus import Language

PROMPT_MS = (
    "Comment Aspect Terms (ATs) mean the main aspects that the comment expresses opinions on, "
    "and Emotional Polarity (EP) means the main emotion of the comment. I need you to help me "
    "annotate main ATs for each Malay comment (no more than 5 ATs), when no ATs are detected, "
    'label "NA". For each comment, annotate EP with Negative (N), Positive (P), and Neutral (C). '
    "Here shows four annotation examples: Example 1. Bn nak sgt slangor tu bukanya apa..terliur "
    "tgk s'gor negeri plg maju hasil negeri billion2 tapi um ... hahaha...ni meols setuju..yelah.."
    "selangor kan paling kaya..rizab berbilion billion.. sebab tak dpt nak sakau dr selangor tu "
    "yang fed gomen sakit...zaman dedulu masa bn pegang bolehlah sakau sikit "
    "[ATs: BN, hasil negara, rizab Selangor, fed gomen | EP: N] Example 2. hahaha...ni meols "
    "setuju..yelah..selangor kan paling kaya..rizab berbilion billion.. sebab tak dpt ... kansss.."
    "meleleh air liur bn slangor nak merompak duit hasil negeri tapi apakan daya tak dapat.. tapi "
    "ada macai desperete dok kait dgn terowong ajaib bagai yg lgsg takde kaitan dgn slangor.. "
    "[ATs: rizab selangor, merompak wang | EP: N] Example 3. The best actor goes to... Kesian "
    "owner moto. JPJ Dah nampak. takpe kasi chan lepas tu lepas GE claim balik. "
    "[ATs: motorcycle owner, JPJ | EP: C] Example 4. Kimarkkkk ko ler jamal tongkol  "
    "[ATs: Jamal | EP: N]\n"
    'Annotate the following comment "{comment}" and return the result as the format of the examples.'
)

PROMPT_CN = (
    "Comment Aspect Terms (ATs) mean the main aspects that the comment expresses opinions on, "
    "and Emotional Polarity (EP) means the main emotion of the comment. I need you to help me "
    "annotate main ATs for each Chinese comment (no more than 5 ATs), when no ATs are detected, "
    'label "NA". For each comment, annotate EP with Negative (N), Positive (P), and Neutral (C). '
    "Here are three annotation examples:\n"
    'Annotate the following comment "..." and return the result as the format of the examples. '
    "Example 1. 太假了……我家那里几乎每人都中了只是没人统计而已 [ATs: 新冠统计 | EP: N] "
    "2. 刚才浙江日增100万转到这条新闻成2983起，真的是太不要脸了，还零死亡，现在就我们那里殡仪馆"
    "死人都全部放在地上，殡仪馆24小时工作。 [ATs: 网络新闻, 浙江新增病例, 死亡率 | EP: N] "
    "Example 3. 呵呵。。。。两声应该明白啥意思 [ATs: NA | EP: C]\n"
    'Annotate the following comment "{comment}" and return the result as the format of the examples.'
)

PROMPT_ID = (
    "Comment Aspect Terms (ATs) mean the main aspects that the comment expresses opinions on, "
    "and Emotional Polarity (EP) means the main emotion of the comment. I need you to help me "
    "annotate main ATs for each Indonesian comment (no more than 5 ATs), when no ATs are "
    'detected, label "NA". For each comment, annotate EP with Negative (N), Positive (P), and '
    "Neutral (C). Here shows three annotation examples: Example 1. jumlah nuklir yang dimilik "
    "sekutu NATO, China dan Rusia lebih dari cukup untuk bikin bumi kiamat "
    "[ATs: NATO, Tiongkok, Rusia, senjata nuklir | EP: N] Example 2. @kampret.strez booster gak "
    "ngaruh utk org yg udah kena + di vaksin. itu dari riset empiris dari israel bbrp bulan lalu. "
    "gw sih rada skeptis utk ambil booster toh mulai bulan ke 3 antibody udh mulai nurun dan "
    "perlu booster lagi dlm 6 bulan.  [ATs: Efek booster, penelitian di Israel | EP: C] "
    "Example 3. kalau di Indonesia kebalik yah di beberapa daerah ada yg maksa kapir pake jilbab "
    "dgn alasan t0l0l pula macam biar gak digigit nyamuk  [AT: Indonesia, hijab, nyamuk | EP: C]\n"
    'Annotate the following comment "{comment}" and return the result as the format of the examples.'
)

PROMPT_EN = (
    "Comment Aspect Terms (ATs) mean the main aspects that the comment expresses opinions on, "
    "and Emotional Polarity (EP) means the main emotion of the comment. I need you to help me "
    "annotate main ATs for each Malay comment (no more than 5 ATs), when no ATs are detected, "
    'label "NA". For each comment, annotate EP with Negative (N), Positive (P), and Neutral (C). '
    "Here shows four annotation examples: Example 1. What it says is that food banks are used to "
    "providing support for those in the poorest 10% of the population but now that segment is "
    "creeping up so that more people are needing help. [ATs: food bank, poor singaporeans | EP: N] "
    "Example 2. Actually, most [people have savings - in the form of CPF]. [ATs: CPF savings | EP: P] "
    "Example 3. And yet every 2 or 3 cars on the road is either bmw or merc [ATs: NA | EP: C]\n"
    'Annotate the following comment "{comment}" and return the result as the format of the examples.'
)

DEFAULT_PROMPT_BODIES: dict[Language, str] = {
    Language.EN: PROMPT_EN,
    Language.CN: PROMPT_CN,
    Language.MS: PROMPT_MS,
    Language.ID: PROMPT_ID,
}

INSTRUCTION_BODY = (
    '{desc} If no opinion is expressed, the aspect terms should be "NA". '
    "Annotate the aspect terms of the following comment: {comment}"
)

LIMIT_INSTRUCTION_BODY = (
    '{desc} If no opinion is expressed, the aspect terms should be "NA". '
    "Annotate the following comments with 1 or 2 aspect terms: {comment}"
)

# Locally authored paraphrases of what a comment aspect term is; one of them
# is substituted into the instruction bodies to diversify fine-tuning
# prompts.
CAT_DESCRIPTIONS: tuple[str, ...] = (
    "Comment aspect terms are the main aspects a comment expresses opinions on.",
    "Aspect terms name the key targets that a comment voices an opinion about.",
    "An aspect term is a word or phrase marking what the comment is commenting on.",
    "Aspect terms capture the principal subjects a commenter takes a stance on.",
    "Comment aspect terms point at the things the comment praises or criticizes.",
    "Aspect terms are the opinionated focal points mentioned in a comment.",
    "An aspect term identifies a specific target of sentiment inside a comment.",
    "Aspect terms summarize which aspects of the story the comment reacts to.",
    "Comment aspect terms are short phrases for the entities a comment judges.",
    "Aspect terms are the discussion points a comment explicitly evaluates.",
    "An aspect term is the anchor of an opinion expressed in the comment.",
    "Aspect terms list the matters on which the commenter expresses a view.",
    "Comment aspect terms denote the opinion targets appearing in the text.",
    "Aspect terms highlight what exactly the commenter is reacting to.",
    "An aspect term is a concise label for one thing the comment appraises.",
    "Aspect terms mark the subjects carrying the comment's sentiment.",
    "Comment aspect terms record the items a comment approves or disapproves of.",
    "Aspect terms are the main objects of evaluation within a comment.",
    "An aspect term tells which facet of the topic the comment weighs in on.",
    "Aspect terms extract the core targets behind a comment's emotions.",
    "Comment aspect terms are the named focuses of the commenter's attitude.",
    "Aspect terms are the particular points a comment argues about.",
    "An aspect term captures one subject toward which the comment shows feeling.",
    "Aspect terms spell out what the opinion in a comment is directed at.",
    "Comment aspect terms pick out the themes a comment takes a position on.",
    "Aspect terms give the concrete referents of the comment's judgments.",
    "An aspect term is the headword of an opinionated remark in the comment.",
    "Aspect terms name what is being assessed when a comment shows sentiment.",
    "Comment aspect terms are the salient targets the commenter cares about.",
    "Aspect terms state the topics on which the comment passes judgment.",
)
