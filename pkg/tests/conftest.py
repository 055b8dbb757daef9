import random

import pytest

from cellsim.workloads import EdgeRecord

_ACCEPTANCE: dict[int, list[tuple[str, str]]] = {}


def random_graph(n, m, rng, connected=True):
    """Undirected edge records on vertices 0..n-1; a random spanning tree first when connected."""
    edges = []
    if connected:
        perm = list(range(n))
        rng.shuffle(perm)
        for i in range(1, n):
            edges.append(EdgeRecord(perm[i], perm[rng.randrange(i)]))
    while len(edges) < m:
        edges.append(EdgeRecord(rng.randrange(n), rng.randrange(n)))
    rng.shuffle(edges)
    return edges


@pytest.fixture
def rng():
    return random.Random(1234)


def write_tsv(path, edges, id_base=0):
    with open(path, "w") as fh:
        for e in edges:
            fh.write(f"{e[0] + id_base}\t{e[1] + id_base}\n")
    return path


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    crit = marker.kwargs["criterion"]
    status = "PASS" if rep.passed else "FAIL"
    _ACCEPTANCE.setdefault(crit, []).append((status, item.name))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_ACCEPTANCE):
        checks = _ACCEPTANCE[crit]
        status = "PASS" if all(s == "PASS" for s, _ in checks) else "FAIL"
        names = ", ".join(n for _, n in checks)
        terminalreporter.write_line(f"[{status}] criterion {crit}: {names}")
