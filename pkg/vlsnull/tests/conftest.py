import logging

import pytest
from bluesky import RunEngine
from bluesky.tests.utils import MsgCollector

from vlsnull.atomprops import vector_polarizability, scalar_polarizability
from vlsnull.protocols import InTrapPlan, DelayedDropPlan


logger = logging.getLogger(__name__)
logger.info("pytest start")
run_engine_logger = logging.getLogger("RunEngine")


@pytest.fixture(scope='function')
def RE():
    """
    Standard logging runengine
    """
    RE = RunEngine({})
    collector = MsgCollector(msg_hook=run_engine_logger.debug)
    RE.msg_hook = collector
    return RE


@pytest.fixture(scope='session')
def alpha_v():
    return vector_polarizability()


@pytest.fixture(scope='session')
def alpha_s():
    return scalar_polarizability()


@pytest.fixture(scope='function')
def in_trap_plan():
    """
    Default in-trap schedule with fewer shots per ellipse
    """
    return InTrapPlan(shots=100)


@pytest.fixture(scope='function')
def drop_plan():
    return DelayedDropPlan(angles=tuple(range(0, 180, 15)), shots=100)
