import sys

from commsuccess.ingest import COMMENT, DAY, POST, CommunityTimeline, Event, extract_early_window
from commsuccess.synth import EPOCH_2014

T0 = EPOCH_2014 + 10 * int(DAY)


def at(day: float) -> int:
    return int(T0 + day * DAY)


def post(eid, author, day, community="c", body="", title="t", score=1):
    return Event(f"t3_{eid}", POST, author, community, at(day), body=body, score=score, title=title)


def comment(eid, author, day, parent, community="c", body="", score=1):
    pid = parent if parent.startswith("t") and "_" in parent else f"t3_{parent}"
    return Event(f"t1_{eid}", COMMENT, author, community, at(day), body=body, score=score, parent_id=pid)


def timeline(events, community="c"):
    return CommunityTimeline.from_events(community, events)


def window(events, k, community="c"):
    w = extract_early_window(timeline(events, community), k)
    assert w is not None
    return w


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, (ok, title) in sorted(mod.RESULTS.items()):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}")
