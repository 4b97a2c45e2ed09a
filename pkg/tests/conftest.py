import random

import pytest

from tars.data import Basket, PurchaseHistory, parse_transactions

EXAMPLE = """\
01-01 a b g h
01-05 a c d
01-09 a b e f h
01-13 a b c d h
01-17 c d e f g
01-21 e f g
01-25 a b c g h
02-02 b c d
02-06 a c d e f i
02-10 b e f h
02-14 a b c d e f g h
02-22 a b g h i
"""


def example_csv(customer="X") -> str:
    rows = []
    for line in EXAMPLE.splitlines():
        day, *items = line.split()
        rows.extend(f"{customer},2017-{day},{i}" for i in items)
    return "\n".join(rows) + "\n"


@pytest.fixture(scope="session")
def example_dataset():
    return parse_transactions(example_csv())


@pytest.fixture(scope="session")
def example(example_dataset):
    return example_dataset["X"]


@pytest.fixture(scope="session")
def lab(example_dataset):
    """Letter -> item id for the worked example history."""
    return {it.label: i for i, it in example_dataset.items.items()}


def random_history(rng: random.Random, max_baskets=15, max_items=8, cid="r") -> PurchaseHistory:
    n = rng.randint(1, max_baskets)
    m = rng.randint(1, max_items)
    density = rng.uniform(0.2, 0.7)
    t = rng.randint(0, 5)
    baskets = []
    for _ in range(n):
        items = frozenset(i for i in range(m) if rng.random() < density) or frozenset({rng.randrange(m)})
        baskets.append(Basket(t, items))
        t += rng.choice((1, 1, 2, 3, 4, 7, 12))
    return PurchaseHistory(cid, tuple(baskets))


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
