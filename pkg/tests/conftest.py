import numpy as np
import pytest

from sbe.measures import preset_measure
from sbe.operators import OperatorFamily


def family(pi_name: str, mu_name: str) -> OperatorFamily:
    return OperatorFamily(
        nu=preset_measure("laplacian-nn"),
        pi=preset_measure(pi_name),
        mu=preset_measure(mu_name),
    )


@pytest.fixture(scope="session")
def fam_bw_ss():
    """Backward difference with the Sasamoto-Spohn product."""
    return family("deriv-backward", "product-sasamoto-spohn")


@pytest.fixture(scope="session")
def fam_bw_pw():
    return family("deriv-backward", "product-pointwise")


@pytest.fixture(scope="session")
def fam_ce_pw():
    return family("deriv-central", "product-pointwise")


@pytest.fixture(scope="session")
def fam_ce_ss():
    return family("deriv-central", "product-sasamoto-spohn")


@pytest.fixture(scope="session")
def all_preset_families(fam_bw_ss, fam_bw_pw, fam_ce_pw, fam_ce_ss):
    return {
        "backward/sasamoto-spohn": fam_bw_ss,
        "backward/pointwise": fam_bw_pw,
        "central/pointwise": fam_ce_pw,
        "central/sasamoto-spohn": fam_ce_ss,
    }


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
