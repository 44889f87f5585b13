from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from balscore.tabular import CategoricalSpace, ContingencyTable, Distribution

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def labels_for(n):
    return [chr(ord("a") + i) for i in range(n)]


@st.composite
def positive_distributions(draw, min_strata=1, max_strata=6, coarse=False):
    """Distributions with p(x, z) > 0 everywhere.

    ``coarse`` draws conditionals from a small grid so that ties between strata
    are frequent.
    """
    n = draw(st.integers(min_strata, max_strata))
    px = [draw(st.integers(1, 20)) for _ in range(n)]
    total = sum(px)
    if coarse:
        grid_z = st.sampled_from([Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)])
        grid_y = st.sampled_from([Fraction(0), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(1)])
    else:
        grid_z = st.integers(1, 99).map(lambda k: Fraction(k, 100))
        grid_y = st.integers(0, 100).map(lambda k: Fraction(k, 100))
    pz = [draw(grid_z) for _ in range(n)]
    py = [(draw(grid_y), draw(grid_y)) for _ in range(n)]
    return Distribution.from_factors(labels_for(n), [Fraction(w, total) for w in px], pz, py)


@st.composite
def positive_tables(draw, min_strata=1, max_strata=6):
    n = draw(st.integers(min_strata, max_strata))
    cells = []
    for _ in range(n):
        row = []
        for _z in (0, 1):
            a = draw(st.integers(0, 30))
            b = draw(st.integers(0 if a else 1, 30))
            row.append((a, b))
        cells.append(row)
    return ContingencyTable(CategoricalSpace(tuple(labels_for(n))), cells)
