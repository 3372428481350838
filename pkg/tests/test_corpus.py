import numpy as np

from pstable.corpus import corpus, radial_corpus


def test_seeded_corpus_is_reproducible():
    a, b = corpus(9, 3, shape=31), corpus(9, 3, shape=31)
    for f, g in zip(a, b):
        assert np.array_equal(f.values, g.values)
    assert not np.array_equal(a[0].values, corpus(10, 1, shape=31)[0].values)


def test_empty_corpus():
    assert corpus(0, 0) == []


def test_fields_vanish_off_the_domain():
    for f in corpus(3, 4, shape=31) + corpus(3, 2, d=2, shape=65):
        assert not np.any(f.values[~f.mask])
        X = f.coords()
        r2 = sum(x * x for x in X)
        assert np.all(f.values[r2 > 0.95 ** 2] == 0.0)
        assert f.values.max() > 0


def test_radial_corpus_profiles():
    for f in radial_corpus(1, 5, n=4):
        assert f.values[-1] == 0.0
        assert np.all(np.diff(f.values) <= 1e-15)
