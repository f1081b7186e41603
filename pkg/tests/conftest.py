import numpy as np
import pytest

from linksim import lattice as lat
from linksim import hilbert as hil


@pytest.fixture(scope="session")
def plaq1():
    return lat.build_plaquette_chain(1)


@pytest.fixture(scope="session")
def plaq2():
    return lat.build_plaquette_chain(2)


@pytest.fixture(scope="session")
def cross5():
    return lat.build_cross()


@pytest.fixture(scope="session")
def basis1(plaq1):
    return hil.full_basis(plaq1)


@pytest.fixture(scope="session")
def basis2(plaq2):
    return hil.full_basis(plaq2)


@pytest.fixture(scope="session")
def sector1(plaq1):
    """Single-plaquette neutral sector: exactly the two flippable states."""
    return hil.enumerate_sector(plaq1, {v.index: 0.0 for v in plaq1.vertices})


@pytest.fixture(scope="session")
def sector2(plaq2):
    """Two-plaquette string sector holding |a>, |b>, |c> of the
    charge-anticharge configuration."""
    return hil.enumerate_sector(plaq2, lat.chain_string_charges(plaq2))


def brute_force_sector(lattice, charges):
    """Independent slow enumeration: loop every bitstring, check each
    vertex sum by hand."""
    states = []
    for s in range(2 ** lattice.n_links):
        ok = True
        for v in lattice.vertices:
            total = sum(((s >> li) & 1) - 0.5 for li in v.links)
            if abs(total - charges[v.index]) > 1e-12:
                ok = False
                break
        if ok:
            states.append(s)
    return states


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)


# ---------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion at session end

_CRITERION_LINES = {}


def record_criterion(number, label, ok, detail=""):
    mark = "PASS" if ok else "FAIL"
    line = f"[criterion {number:>4}] {mark}  {label}" + (f"  ({detail})" if detail else "")
    _CRITERION_LINES[str(number) + label] = line
    return ok


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for key in sorted(_CRITERION_LINES):
        terminalreporter.write_line(_CRITERION_LINES[key])
