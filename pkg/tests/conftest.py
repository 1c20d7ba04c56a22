import numpy as np
import pytest

from rfharvest import ChannelLink, ChargeCircuit


@pytest.fixture
def bench_circuit():
    """Bench circuit: 750 ohm, 0.68 F, 2.5 V (tau = 510 s, e_max = 2.125 J)."""
    return ChargeCircuit(resistance=750.0, capacitance=0.68, v_max=2.5)


@pytest.fixture
def sim_circuit():
    """Reference simulation circuit: 4 kOhm, 50 mF, 2.5 V (tau = 200 s)."""
    return ChargeCircuit(resistance=4000.0, capacitance=0.05, v_max=2.5)


@pytest.fixture
def reference_link():
    """2.4 GHz over 10 MHz at 10 ft with -174 dBm/Hz noise density."""
    return ChannelLink(frequency=2.4e9, distance=3.048, bandwidth=1.0e7,
                       noise_density=-174.0)


def random_circuit(rng: np.random.Generator) -> ChargeCircuit:
    return ChargeCircuit(
        resistance=float(rng.uniform(100.0, 10000.0)),
        capacitance=float(rng.uniform(0.01, 1.0)),
        v_max=float(rng.uniform(1.0, 5.0)),
    )
