"""Post-dump ingestion: stream rows, pull code snippets, propagate thread tags.

The dump format is one XML `row` element per post with attributes
Id, ParentId, Body, Score, Tags, PostTypeId. Parsing is line-oriented so a
single malformed record never aborts the stream.
"""

import html
import io
import json
import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Iterable, Iterator, Optional

from .correction import FilterConfig, filter_snippet_length

_ROW_RE = re.compile(rb"<row\b[^>]*/>")
_TAG_RE = re.compile(r"<([^<>]+)>")


class TruncatedDumpError(ValueError):
    def __init__(self, byte_offset):
        super().__init__(f"dump truncated at byte offset {byte_offset}")
        self.byte_offset = byte_offset


@dataclass
class RawPost:
    post_id: int
    thread_id: int
    body_html: str
    score: int
    tags_raw: Optional[str]
    post_kind: str  # "question" or "answer"


@dataclass
class TaggedDocument:
    post_id: int
    text: str
    tags: set
    score: int
    snippet_count: int

    def to_record(self):
        return {
            "id": self.post_id,
            "text": self.text,
            "tags": sorted(self.tags),
            "score": self.score,
            "snippet_count": self.snippet_count,
        }

    @classmethod
    def from_record(cls, rec):
        return cls(rec["id"], rec["text"], set(rec["tags"]), rec["score"], rec["snippet_count"])


@dataclass
class IngestStats:
    skipped_records: int = 0
    orphan_posts: int = 0
    dropped_no_snippets: int = 0
    warnings: list = field(default_factory=list)


_ATTR_RE = re.compile(rb'(\w+)="([^"]*)"')


def _parse_row(raw: bytes) -> Optional[RawPost]:
    attrs = {k.decode(): v.decode("utf-8") for k, v in _ATTR_RE.findall(raw)}
    if "Id" not in attrs or "PostTypeId" not in attrs:
        return None
    try:
        post_id = int(attrs["Id"])
        post_type = int(attrs["PostTypeId"])
        score = int(attrs.get("Score", "0"))
    except ValueError:
        return None
    if post_type == 1:
        kind, thread_id = "question", post_id
    elif post_type == 2:
        kind = "answer"
        if "ParentId" not in attrs:
            return None
        thread_id = int(attrs["ParentId"])
    else:
        return None
    # XML attribute values are entity-encoded exactly once
    body = html.unescape(attrs.get("Body", ""))
    tags_raw = html.unescape(attrs["Tags"]) if "Tags" in attrs and kind == "question" else None
    return RawPost(post_id, thread_id, body, score, tags_raw, kind)


def parse_posts_stream(stream, stats: IngestStats = None) -> Iterator[RawPost]:
    """Yield RawPosts from a binary dump stream in file order.

    Memory stays bounded by the largest single row. Malformed rows are
    skipped and counted; a stream that opens a row but never closes it
    raises TruncatedDumpError with the byte offset.
    """
    if stats is None:
        stats = IngestStats()
    buf = b""
    offset = 0
    while True:
        chunk = stream.read(65536)
        if not chunk:
            break
        buf += chunk
        while True:
            start = buf.find(b"<row")
            if start < 0:
                offset += len(buf)
                buf = b""
                break
            end = buf.find(b"/>", start)
            if end < 0:
                offset += start
                buf = buf[start:]
                break
            raw = buf[start : end + 2]
            if _ROW_RE.fullmatch(raw):
                post = _parse_row(raw)
                if post is None:
                    stats.skipped_records += 1
                else:
                    yield post
            else:
                stats.skipped_records += 1
            offset += end + 2
            buf = buf[end + 2 :]
    if buf.find(b"<row") >= 0:
        raise TruncatedDumpError(offset)


def parse_tags_raw(tags_raw: str) -> set:
    """Decode the delimited tag format '<a><b>' into {a, b}."""
    return set(_TAG_RE.findall(tags_raw or ""))


class _CodeExtractor(HTMLParser):
    """Collects the inner text of every <code> element in document order."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.depth = 0
        self.parts = []
        self.snippets = []

    def handle_starttag(self, tag, attrs):
        if tag == "code":
            self.depth += 1

    def handle_endtag(self, tag):
        if tag == "code" and self.depth:
            self.depth -= 1
            if self.depth == 0:
                self.snippets.append("".join(self.parts))
                self.parts = []

    def handle_data(self, data):
        if self.depth:
            self.parts.append(data)


def extract_snippets(body_html: str, warnings: list = None) -> list:
    """Inner text of each code block, entities decoded, markup stripped."""
    p = _CodeExtractor()
    p.feed(body_html)
    p.close()
    snippets = list(p.snippets)
    if p.depth:
        # unbalanced markup: keep whatever text was collected
        if p.parts:
            snippets.append("".join(p.parts))
        if warnings is not None:
            warnings.append("unbalanced code markup")
    return snippets


def build_thread_tag_index(posts: Iterable[RawPost]) -> dict:
    """First pass: thread_id -> tag set, from questions only."""
    return {
        p.thread_id: parse_tags_raw(p.tags_raw)
        for p in posts
        if p.post_kind == "question" and p.tags_raw
    }


def assign_thread_tags(posts, tag_index, stats: IngestStats = None):
    """Second pass: attach each post's thread tag set; orphans are dropped."""
    for p in posts:
        tags = tag_index.get(p.thread_id)
        if tags:
            yield p, tags
        elif stats is not None:
            stats.orphan_posts += 1


def concatenate_post(snippets, post: RawPost, tags) -> Optional[TaggedDocument]:
    """Join surviving snippets with newlines; empty snippet list yields nothing."""
    if not snippets:
        return None
    return TaggedDocument(
        post_id=post.post_id,
        text="\n".join(snippets),
        tags=set(tags),
        score=post.score,
        snippet_count=len(snippets),
    )


def ingest_dump(path, cfg: FilterConfig = None, stats: IngestStats = None):
    """Two-pass ingestion of a dump file into TaggedDocuments.

    Pass one indexes question tags; pass two extracts, length-filters and
    concatenates snippets. Posts with no surviving snippet are dropped.
    """
    if cfg is None:
        cfg = FilterConfig()
    if stats is None:
        stats = IngestStats()
    with open(path, "rb") as f:
        tag_index = build_thread_tag_index(parse_posts_stream(f, stats))
    with open(path, "rb") as f:
        for post, tags in assign_thread_tags(parse_posts_stream(f, IngestStats()), tag_index, stats):
            snippets = extract_snippets(post.body_html, stats.warnings)
            snippets = filter_snippet_length(snippets, cfg)
            doc = concatenate_post(snippets, post, tags)
            if doc is None:
                stats.dropped_no_snippets += 1
            else:
                yield doc


def write_documents(docs, path):
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for doc in docs:
            f.write(json.dumps(doc.to_record(), ensure_ascii=False) + "\n")
            n += 1
    return n


def read_documents(path) -> Iterator[TaggedDocument]:
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield TaggedDocument.from_record(json.loads(line))
