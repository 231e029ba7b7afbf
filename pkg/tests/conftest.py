import pytest

from glrmf.network import NetworkSpec, NeuronParams


def chain2(a2=0.0, w=0.5, r=(1.0, 0.2), a1=0.0):
    """Two neurons, 1 -> 2."""
    return NetworkSpec.from_edges([NeuronParams(a1, r[0]), NeuronParams(a2, r[1])],
                                  [(0, 1, w)], hypothesis="H1")


def three_net(w23=0.2):
    """Three-neuron zero-drift network used by the replica checks."""
    params = [NeuronParams(0.0, 1.0), NeuronParams(0.0, 0.3), NeuronParams(0.0, 0.3)]
    return NetworkSpec.from_edges(params, [(0, 1, 0.4), (0, 2, 0.6), (1, 2, w23)],
                                  hypothesis="H1")


def isolated(a=0.0, r=2.0):
    return NetworkSpec.from_edges([NeuronParams(a, r)], [], hypothesis="H1")


@pytest.fixture
def net3():
    return three_net()


# --- acceptance reporting ------------------------------------------------------

_DETAILS = {}


@pytest.fixture
def record(request):
    """Attach a one-line detail string to the running acceptance criterion."""
    def _record(text):
        _DETAILS[request.node.nodeid] = text
    return _record


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance" in rep.nodeid and rep.when == "call":
                name = rep.nodeid.split("::")[-1]
                lines.append((name, outcome.upper()[:4], _DETAILS.get(rep.nodeid, "")))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, status, detail in sorted(lines):
            terminalreporter.write_line(f"{status:4s} {name}: {detail}")
