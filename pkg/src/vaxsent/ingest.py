"""Reddit ingestion: OAuth2 client, rate-limited listing pagination, corpus files.

Downstream stages only ever read the persisted corpus (JSON lines), so the
network half of this module is optional at run time.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator

import requests

logger = logging.getLogger(__name__)

TOKEN_URL = "https://www.reddit.com/api/v1/access_token"
API_BASE = "https://oauth.reddit.com"

DEFAULT_SUBREDDITS = ("IndiaSpeaks", "indianews", "COVID19", "india")
DEFAULT_KEYWORDS = ("covishield", "covaxin", "sputnik", "vaccination")

CORPUS_FIELDS = (
    "comment_id",
    "post_id",
    "subreddit",
    "post_title",
    "selftext",
    "body",
    "score",
    "created_at",
)

MAX_ATTEMPTS = 3
WINDOW_SECONDS = 60.0


class IngestError(Exception):
    pass


class ConfigurationError(IngestError):
    """Missing or invalid settings; raised before any network traffic."""


class CredentialError(IngestError):
    """The API rejected the credentials (HTTP 401). Not retried."""


class RetryableError(IngestError):
    """Network failure or throttling that outlived the retry budget."""


class CorpusFormatError(IngestError):
    pass


@dataclass(frozen=True)
class Comment:
    comment_id: str
    post_id: str
    subreddit: str
    post_title: str
    selftext: str
    body: str
    score: int
    created_at: int  # UTC epoch seconds

    def __post_init__(self):
        if not isinstance(self.comment_id, str) or not self.comment_id:
            raise ValueError("comment_id must be a non-empty string")
        if not isinstance(self.body, str) or not self.body.strip():
            raise ValueError(f"comment {self.comment_id}: body is empty")
        if isinstance(self.score, bool) or not isinstance(self.score, int):
            raise ValueError(f"comment {self.comment_id}: score must be an integer")
        for name in ("post_id", "subreddit", "post_title", "selftext"):
            if not isinstance(getattr(self, name), str):
                raise ValueError(f"comment {self.comment_id}: {name} must be a string")
        object.__setattr__(self, "created_at", to_epoch_seconds(self.created_at))

    def to_record(self) -> dict:
        return {name: getattr(self, name) for name in CORPUS_FIELDS}

    @classmethod
    def from_record(cls, record: dict) -> "Comment":
        if not isinstance(record, dict):
            raise ValueError("record is not an object")
        keys = set(record)
        missing = [f for f in CORPUS_FIELDS if f not in keys]
        if missing:
            raise ValueError(f"missing fields: {', '.join(missing)}")
        return cls(**{f: record[f] for f in CORPUS_FIELDS})


def to_epoch_seconds(value) -> int:
    """Normalize an API timestamp (epoch number or ISO-8601 string) to UTC seconds."""
    if isinstance(value, bool):
        raise ValueError("timestamp must not be boolean")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("timestamp is not finite")
        return int(value)
    if isinstance(value, str):
        dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return int(dt.timestamp())
    raise ValueError(f"unsupported timestamp {value!r}")


@dataclass
class FetchConfig:
    subreddits: list[str] = field(default_factory=lambda: list(DEFAULT_SUBREDDITS))
    keywords: list[str] = field(default_factory=lambda: list(DEFAULT_KEYWORDS))
    max_comments: int = 1000
    rate_limit: int = 60  # requests per minute

    def __post_init__(self):
        if not self.subreddits:
            raise ConfigurationError("fetch.subreddits must be non-empty")
        if not self.keywords:
            raise ConfigurationError("fetch.keywords must be non-empty")
        if self.max_comments < 0:
            raise ConfigurationError("fetch.max_comments must be >= 0")
        if self.rate_limit < 1:
            raise ConfigurationError("fetch.rate_limit must be >= 1")


@dataclass(frozen=True)
class Credentials:
    client_id: str
    client_secret: str
    user_agent: str

    ENV = {
        "client_id": "REDDIT_CLIENT_ID",
        "client_secret": "REDDIT_CLIENT_SECRET",
        "user_agent": "REDDIT_USER_AGENT",
    }

    @classmethod
    def from_env(cls, environ=None) -> "Credentials":
        environ = os.environ if environ is None else environ
        values = {}
        for attr, var in cls.ENV.items():
            value = environ.get(var, "")
            if not value:
                raise ConfigurationError(f"environment variable {var} is not set")
            values[attr] = value
        return cls(**values)

    def validate(self):
        for attr, var in self.ENV.items():
            if not getattr(self, attr):
                raise ConfigurationError(f"{attr} is empty (set {var})")


@dataclass(frozen=True)
class AccessToken:
    value: str
    expires_at: float  # on the client's clock

    def expired(self, now: float) -> bool:
        return now >= self.expires_at


class RateLimiter:
    """Sliding 60 s window: at most ``rate_limit`` acquisitions per window.

    ``clock`` and ``sleep`` are injectable so tests can drive a virtual clock.
    """

    def __init__(self, rate_limit: int, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if rate_limit < 1:
            raise ConfigurationError("rate_limit must be >= 1")
        self.rate_limit = rate_limit
        self.clock = clock
        self.sleep = sleep
        self._stamps: deque[float] = deque()

    def acquire(self):
        while True:
            now = self.clock()
            while self._stamps and now - self._stamps[0] >= WINDOW_SECONDS:
                self._stamps.popleft()
            if len(self._stamps) < self.rate_limit:
                self._stamps.append(now)
                return
            self.sleep(WINDOW_SECONDS - (now - self._stamps[0]))


class RedditClient:
    """Minimal OAuth2 (client-credentials) client for listing endpoints."""

    def __init__(self, creds: Credentials, rate_limit: int = 60, session=None,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        creds.validate()
        self.creds = creds
        self.session = session if session is not None else requests.Session()
        self.clock = clock
        self.sleep = sleep
        self.limiter = RateLimiter(rate_limit, clock, sleep)
        self.token: AccessToken | None = None
        self.requests_made = 0

    def _send(self, method: str, url: str, **kwargs):
        """One HTTP call with rate limiting and the 429/network retry policy."""
        headers = dict(kwargs.pop("headers", {}))
        headers["User-Agent"] = self.creds.user_agent
        last_error = None
        for attempt in range(MAX_ATTEMPTS):
            self.limiter.acquire()
            self.requests_made += 1
            try:
                resp = self.session.request(method, url, headers=headers, timeout=30, **kwargs)
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("network error on %s (attempt %d): %s", url, attempt + 1, exc)
                continue
            if resp.status_code == 429:
                wait = _retry_after(resp)
                logger.warning("rate limited on %s, waiting %.1fs", url, wait)
                last_error = RetryableError(f"HTTP 429 from {url}")
                if attempt + 1 < MAX_ATTEMPTS:
                    self.sleep(wait)
                continue
            return resp
        raise RetryableError(f"giving up on {url} after {MAX_ATTEMPTS} attempts: {last_error}")

    def authenticate(self) -> AccessToken:
        basic = base64.b64encode(
            f"{self.creds.client_id}:{self.creds.client_secret}".encode()
        ).decode()
        resp = self._send(
            "POST",
            TOKEN_URL,
            headers={"Authorization": f"Basic {basic}"},
            data={"grant_type": "client_credentials"},
        )
        if resp.status_code == 401:
            raise CredentialError("token endpoint rejected the client credentials (HTTP 401)")
        if resp.status_code != 200:
            raise RetryableError(f"token endpoint returned HTTP {resp.status_code}")
        payload = resp.json()
        try:
            token = AccessToken(
                value=payload["access_token"],
                expires_at=self.clock() + float(payload.get("expires_in", 3600)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CredentialError(f"malformed token response: {exc}") from exc
        self.token = token
        return token

    def get(self, path: str, params: dict | None = None) -> dict:
        """GET a listing path. A rejected or expired token triggers one re-auth."""
        if self.token is None or self.token.expired(self.clock()):
            self.authenticate()
        reauthed = False
        while True:
            resp = self._send(
                "GET",
                API_BASE + path,
                headers={"Authorization": f"Bearer {self.token.value}"},
                params=params or {},
            )
            if resp.status_code == 401:
                if reauthed:
                    raise CredentialError(f"HTTP 401 on {path} after re-authentication")
                reauthed = True
                self.authenticate()
                continue
            if resp.status_code != 200:
                raise RetryableError(f"HTTP {resp.status_code} on {path}")
            return resp.json()


def _retry_after(resp) -> float:
    for header in ("Retry-After", "x-ratelimit-reset"):
        value = resp.headers.get(header)
        if value is None:
            continue
        try:
            return max(float(value), 0.0)
        except ValueError:
            pass
    return WINDOW_SECONDS


def authenticate(creds: Credentials, session=None, **kwargs) -> tuple[RedditClient, AccessToken]:
    """Validate credentials locally, then run the client-credentials flow."""
    creds.validate()
    client = RedditClient(creds, session=session, **kwargs)
    return client, client.authenticate()


def match_keywords(c: Comment, keywords: Iterable[str]) -> bool:
    keywords = list(keywords)
    if not keywords:
        raise ValueError("keywords must be non-empty")
    body = c.body.lower()
    title = c.post_title.lower()
    return any(k.lower() in body or k.lower() in title for k in keywords)


def _listing(client: RedditClient, path: str, params: dict) -> Iterator[dict]:
    """Walk a listing by its ``after`` cursor, yielding child ``data`` dicts."""
    after = None
    while True:
        page_params = dict(params)
        if after:
            page_params["after"] = after
        payload = client.get(path, page_params)
        data = payload.get("data", {}) if isinstance(payload, dict) else {}
        for child in data.get("children", []) or []:
            if isinstance(child, dict):
                yield child.get("data", {})
        after = data.get("after")
        if not after:
            return


def _walk_comments(node, post: dict) -> Iterator[dict]:
    """Flatten a comment tree (replies nest as listings)."""
    if not isinstance(node, dict):
        yield {"__malformed__": True}
        return
    if node.get("kind") == "Listing":
        for child in node.get("data", {}).get("children", []) or []:
            yield from _walk_comments(child, post)
        return
    if node.get("kind") != "t1":
        return  # "more" stubs and the like
    data = node.get("data")
    if not isinstance(data, dict):
        yield {"__malformed__": True}
        return
    yield data
    replies = data.get("replies")
    if isinstance(replies, dict):
        yield from _walk_comments(replies, post)


def _to_comment(data: dict, post: dict) -> Comment:
    return Comment(
        comment_id=str(data["id"]),
        post_id=str(post["id"]),
        subreddit=str(post.get("subreddit", data.get("subreddit", ""))),
        post_title=str(post.get("title", "")),
        selftext=str(post.get("selftext", "") or ""),
        body=data["body"],
        score=int(data.get("score", 0)),
        created_at=to_epoch_seconds(data["created_utc"]),
    )


@dataclass
class FetchStats:
    skipped: int = 0
    per_keyword: Counter = field(default_factory=Counter)


def fetch_comments(cfg: FetchConfig, client: RedditClient, stats: FetchStats | None = None) -> list[Comment]:
    """Search each subreddit for each keyword and collect matching comments.

    Malformed records are skipped and counted in ``stats.skipped``.
    """
    stats = stats if stats is not None else FetchStats()
    out: dict[str, Comment] = {}
    if cfg.max_comments == 0:
        return []
    for sub in cfg.subreddits:
        for kw in cfg.keywords:
            search = _listing(
                client, f"/r/{sub}/search",
                {"q": kw, "restrict_sr": 1, "limit": 100, "sort": "new"},
            )
            for post in search:
                if not isinstance(post, dict) or "id" not in post:
                    stats.skipped += 1
                    continue
                payload = client.get(f"/comments/{post['id']}", {"limit": 500})
                tree = payload[1] if isinstance(payload, list) and len(payload) > 1 else None
                for data in _walk_comments(tree, post):
                    try:
                        c = _to_comment(data, post)
                    except (KeyError, TypeError, ValueError):
                        stats.skipped += 1
                        continue
                    if c.comment_id in out or not match_keywords(c, cfg.keywords):
                        continue
                    out[c.comment_id] = c
                    if len(out) >= cfg.max_comments:
                        stats.per_keyword.update(keyword_counts(out.values(), cfg.keywords))
                        return list(out.values())
    stats.per_keyword.update(keyword_counts(out.values(), cfg.keywords))
    return list(out.values())


def keyword_counts(comments: Iterable[Comment], keywords: Iterable[str]) -> dict[str, int]:
    """Per-keyword match counts; a comment matching two keywords counts for both."""
    keywords = list(keywords)
    counts = {k: 0 for k in keywords}
    for c in comments:
        for k in keywords:
            if match_keywords(c, [k]):
                counts[k] += 1
    return counts


def save_corpus(comments: Iterable[Comment], path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for c in comments:
            fh.write(json.dumps(c.to_record(), ensure_ascii=False, sort_keys=False))
            fh.write("\n")


def iter_records(path) -> Iterator[tuple[int, dict]]:
    """Yield (1-based line number, parsed object) for each non-blank line."""
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}: line {lineno}: not valid JSON ({exc.msg})") from None


def load_corpus(path) -> list[Comment]:
    comments: list[Comment] = []
    seen: set[str] = set()
    for lineno, record in iter_records(path):
        try:
            c = Comment.from_record(record)
        except (TypeError, ValueError) as exc:
            raise CorpusFormatError(f"{path}: line {lineno}: {exc}") from None
        if c.comment_id in seen:
            raise CorpusFormatError(f"{path}: line {lineno}: duplicate comment_id {c.comment_id!r}")
        seen.add(c.comment_id)
        comments.append(c)
    return comments


__all__ = [
    "AccessToken", "Comment", "ConfigurationError", "CorpusFormatError", "Credentials",
    "CredentialError", "FetchConfig", "FetchStats", "IngestError", "RateLimiter",
    "RedditClient", "RetryableError", "authenticate", "fetch_comments", "keyword_counts",
    "load_corpus", "match_keywords", "save_corpus",
]
