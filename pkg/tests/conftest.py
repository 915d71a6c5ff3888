import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

import pytest

from veronese_syzygies.betti import compute_betti, compute_position


@pytest.fixture(scope="session")
def quartic():
    """Betti databases of S(b;4), b = 0..3."""
    return {b: compute_betti(b, 4, artinian=True) for b in range(4)}


@pytest.fixture(scope="session")
def quintic_b0():
    """Full Betti database of S(0;5) (relevant range computed from ranks)."""
    return compute_betti(0, 5, artinian=True)


@pytest.fixture(scope="session")
def quintic_b2():
    return compute_betti(2, 5, artinian=True)


@pytest.fixture(scope="session")
def quintic_b3_k41():
    return compute_position(3, 5, 4, 1)


# ---------------------------------------------------------------------------
# acceptance report: one PASS/FAIL line per criterion at the end of the run

_ACCEPTANCE: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, title): test belongs to acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when != "call" and rep.passed:
        return
    n, title = marker.args
    entry = _ACCEPTANCE.setdefault(n, {"title": title, "ok": True, "notes": []})
    ok = rep.passed and not hasattr(rep, "wasxfail")
    entry["ok"] = entry["ok"] and ok
    if rep.when == "call":
        entry["notes"] += [v for k, v in item.user_properties if k == "acceptance"]
    if not ok:
        if hasattr(rep, "wasxfail"):
            reason = f"known failure: {rep.wasxfail}"
        elif hasattr(rep.longrepr, "reprcrash"):
            reason = rep.longrepr.reprcrash.message.splitlines()[0]
        else:
            reason = rep.outcome
        entry["notes"].append(f"{item.name}: {reason}")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        e = _ACCEPTANCE[n]
        line = f"ACCEPTANCE {n} {'PASS' if e['ok'] else 'FAIL'}: {e['title']}"
        if e["notes"]:
            line += " | " + "; ".join(e["notes"])
        terminalreporter.write_line(line)


@pytest.fixture
def note(request):
    """Attach a line of detail to the acceptance report of the current test."""
    return lambda text: request.node.user_properties.append(("acceptance", text))
