from pathlib import Path

import pytest

from vaxsent.ingest import Comment

DATA = Path(__file__).resolve().parents[1] / "src" / "vaxsent" / "data"


def make_comment(i=1, body="Covaxin works", title="Vaccine thread", **kw) -> Comment:
    fields = dict(comment_id=f"c{i}", post_id="p1", subreddit="india", post_title=title,
                  selftext="", body=body, score=1, created_at=1620000000)
    fields.update(kw)
    return Comment(**fields)


@pytest.fixture
def comment_factory():
    return make_comment


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    lines = test_acceptance.summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
