import datetime as dt

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def odm_text():
    """Small three-area ODM over two days."""
    return "\n".join([
        "date,origin,destination,count",
        "2020-02-03,a,a,80",
        "2020-02-03,a,b,20",
        "2020-02-03,b,c,10",
        "2020-02-03,b,a,5",
        "2020-02-03,b,a,5",
        "2020-02-04,c,a,3",
    ]) + "\n"


def monday(week=0):
    return dt.date(2020, 2, 3) + dt.timedelta(weeks=week)
