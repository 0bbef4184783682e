import numpy as np
import pytest

from darbouxspec.darboux import DarbouxParams, FuchsianOperator, build_operator


def model_operator(alpha: complex) -> FuchsianOperator:
    """``d z d - alpha d = z d^2 + (1 - alpha) d`` with one finite singular point."""
    alpha = complex(alpha)
    return FuchsianOperator(np.array([0, 1], dtype=complex), np.array([1 - alpha]),
                            np.zeros(1, dtype=complex), points=(0j,), labels=("0",),
                            exponents={"0": (0j, alpha)}, kind="model")


@pytest.fixture(scope="session")
def model_op():
    return model_operator


@pytest.fixture(scope="session")
def slice_params():
    """``a = 0`` at ``x = 1/2``."""
    return DarbouxParams.from_exponents((0, 0, 0, 0), 0.5)


@pytest.fixture(scope="session")
def slice_op(slice_params):
    return build_operator(slice_params)


@pytest.fixture(scope="session")
def imaginary_params():
    """A generic point of the main regime."""
    return DarbouxParams.from_exponents((0.4j, 0.2j, -0.1j, 0.3j), 0.3 + 0.1j)


@pytest.fixture(scope="session")
def imaginary_op(imaginary_params):
    return build_operator(imaginary_params)
