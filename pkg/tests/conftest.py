import pytest

from rotorctl.units import LINEAR, SYMMETRIC_TOP, MoleculeParams, angstrom3_to_au


@pytest.fixture(scope="session")
def co():
    # dalpha ~ 3.9 a0^3 (alpha_par - alpha_perp of CO); only laser runs use it
    return MoleculeParams.from_spectroscopic("CO", LINEAR, 1.9313, 0.112, dalpha_au=3.92)


@pytest.fixture(scope="session")
def fictive():
    """The B = 1 model rotor used for target-state studies."""
    return MoleculeParams("fictive", LINEAR, 1.0, 1.0, dalpha=1.0)


@pytest.fixture(scope="session")
def ch3i():
    return MoleculeParams.from_spectroscopic(
        "CH3I", SYMMETRIC_TOP, 0.2502, 1.62, A_cm1=5.17, dalpha_au=angstrom3_to_au(1.8)
    )


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
