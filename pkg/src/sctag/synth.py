"""Synthetic fixtures: a small post dump with known ground truth, and
character-pattern corpora for training sanity and baseline comparisons.
"""

import html
import random
import string

from .ingest import TaggedDocument

LOWER = string.ascii_lowercase


def tag_signatures(n_tags, rng, length=4, alphabet=LOWER):
    """One distinct pattern per tag; these are the substrings the
    convolutional model must discover. A small alphabet makes the tags
    overlap in character frequency, separating sequence models from
    bag-of-character models."""
    sigs = []
    seen = set()
    while len(sigs) < n_tags:
        s = "".join(rng.choice(alphabet) for _ in range(length))
        if s not in seen:
            seen.add(s)
            sigs.append(s)
    return sigs


def pattern_corpus(
    n_docs,
    n_tags,
    seed=0,
    noise_len=(80, 160),
    insertions=(3, 6),
    tags_per_doc=(1, 3),
    tag_prefix="tag",
    sig_alphabet=LOWER,
):
    """Documents whose tags are defined purely by embedded character patterns.

    Text is one unbroken run of lowercase noise with each tag's signature
    spliced in several times, so word-level n-grams see essentially unique
    tokens while character models see repeated local patterns.
    """
    rng = random.Random(seed)
    sigs = tag_signatures(n_tags, rng, alphabet=sig_alphabet)
    tags = [f"{tag_prefix}{j:02d}" for j in range(n_tags)]
    docs = []
    for i in range(n_docs):
        k = rng.randint(*tags_per_doc)
        chosen = rng.sample(range(n_tags), k)
        text = [rng.choice(LOWER) for _ in range(rng.randint(*noise_len))]
        for j in chosen:
            for _ in range(rng.randint(*insertions)):
                pos = rng.randint(0, len(text))
                text[pos:pos] = list(sigs[j])
        docs.append(
            TaggedDocument(
                post_id=i,
                text="".join(text),
                tags={tags[j] for j in chosen},
                score=0,
                snippet_count=1,
            )
        )
    return docs, tags


def longtail_label_rows(m, q, rarest=20, seed=0):
    """Label rows with a long-tailed positive-count profile; rarest label
    gets exactly `rarest` positives and every sample keeps >= 1 label."""
    rng = random.Random(seed)
    counts = [max(rarest, int(m * 0.3 * (j + 1) ** -0.8)) for j in range(q)]
    counts[-1] = rarest
    rows = [set() for _ in range(m)]
    for j, c in enumerate(counts):
        for i in rng.sample(range(m), c):
            rows[i].add(j)
    for r in rows:
        if not r:
            r.add(rng.randrange(min(3, q)))
    return [tuple(sorted(r)) for r in rows]


_LANG_SNIPPETS = {
    "python": ["for i in range(10): print(i)", "import os\nos.path.join(a, b)"],
    "javascript": ["document.getElementById('x').value;", "const f = (a) => a.map(x => x*2);"],
    "sql": ["SELECT name FROM users WHERE id = 1;", "INSERT INTO t (a, b) VALUES (1, 2);"],
    "html": ["<div class=\"row\"><span>hi</span></div>", "<a href=\"/home\">link</a>"],
    "java": ["public static void main(String[] args)", "System.out.println(\"ok\");"],
}


def fixture_dump(path, n_posts=500, seed=0):
    """Write a small posts-dump XML file with known filter ground truth.

    Returns a manifest dict describing which post ids must survive the
    length/score/tag-frequency filters (length >= 10, score >= 0, tag
    appearing on >= 10 posts). Disjoint drop reasons by pid modulo 10:
    1 -> only sub-10-char snippets, 2 -> negative score, 3 (every 5th)
    -> singleton rare tag.
    """
    rng = random.Random(seed)
    langs = list(_LANG_SNIPPETS)
    rows = []
    manifest = {"surviving_ids": [], "short_only_ids": [], "negative_ids": [], "rare_tag_ids": []}
    tag_counts = {}
    posts = []
    for pid in range(1, n_posts + 1):
        lang = langs[pid % len(langs)]
        tags = {lang}
        snippets = [rng.choice(_LANG_SNIPPETS[lang]), "ab = cd();"]  # second is exactly 10 chars
        short_only = pid % 10 == 1
        if short_only:
            snippets = ["x=1"]  # below the 10-char threshold
        else:
            snippets.append("y = 1")  # a short one that must be dropped, not the post
        score = -1 if pid % 10 == 2 else rng.randint(0, 5)
        if pid % 50 == 3:
            tags = {f"rare-{pid}"}  # appears once, dies in the tag filter
        posts.append((pid, snippets, tags, score, short_only))
    for pid, snippets, tags, score, short_only in posts:
        body = "".join(f"<pre><code>{html.escape(s)}</code></pre>" for s in snippets)
        tag_str = "".join(f"<{t}>" for t in sorted(tags))
        rows.append(
            f'  <row Id="{pid}" PostTypeId="1" Score="{score}" '
            f'Tags="{html.escape(tag_str)}" Body="{html.escape(body)}" />'
        )
        rare = any(t.startswith("rare-") for t in tags)
        if short_only:
            manifest["short_only_ids"].append(pid)
        elif score < 0:
            manifest["negative_ids"].append(pid)
        elif rare:
            manifest["rare_tag_ids"].append(pid)
        else:
            manifest["surviving_ids"].append(pid)
            for t in tags:
                tag_counts[t] = tag_counts.get(t, 0) + 1
    manifest["tag_counts"] = tag_counts
    with open(path, "w", encoding="utf-8") as f:
        f.write('<?xml version="1.0" encoding="utf-8"?>\n<posts>\n')
        f.write("\n".join(rows))
        f.write("\n</posts>\n")
    return manifest
