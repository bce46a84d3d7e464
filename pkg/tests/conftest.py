import datetime as dt

import numpy as np
import pytest

from claimdur.encoding import ClaimRecord


def record(covariates, duration=1.0, event=True, open_date=dt.date(2009, 6, 1)):
    return ClaimRecord(covariates=covariates, duration_weeks=duration,
                       event=event, open_date=open_date)


@pytest.fixture
def make_record():
    return record


def lifetimes(records):
    return (
        np.asarray([r.duration_weeks for r in records], dtype=float),
        np.asarray([r.event for r in records], dtype=bool),
    )


@pytest.fixture(scope="session")
def linear_dataset():
    """linear-v1 draw shared by the selection and acceptance-adjacent tests."""
    from claimdur import datagen

    config = datagen.linear_v1(n_records=200)
    records, etas = datagen.generate(config)
    return config, records, etas
