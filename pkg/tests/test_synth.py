import numpy as np
import pytest

from skewlearn import preprocess
from skewlearn.learners import LearnerSpec, fit, score
from skewlearn.metrics import roc_auc
from skewlearn.synth import HEAD_NECK_COUNTS, SynthSpec, class_means, generate
from skewlearn.tabular import ColumnKind, stratified_holdout


def test_head_neck_training_shape():
    ds = generate(SynthSpec(HEAD_NECK_COUNTS, dims=25, seed=1))
    assert ds.values.shape == (2525, 25)
    assert ds.class_counts().tolist() == list(HEAD_NECK_COUNTS)
    assert ds.class_count == 5


def test_means_pairwise_separation():
    mu = class_means(4, 6, 2.5)
    D = np.sqrt(((mu[:, None] - mu[None]) ** 2).sum(-1))
    assert np.allclose(D[~np.eye(4, dtype=bool)], 2.5)


def test_ordinal_columns_on_five_point_scale():
    ds = generate(SynthSpec((50, 50), dims=10, ordinal_fraction=0.3, seed=0))
    kinds = [c.kind for c in ds.columns]
    assert kinds.count(ColumnKind.ORDINAL) == 3 and kinds[-1] is ColumnKind.ORDINAL
    o = ds.values[:, -3:]
    assert set(np.unique(o)) <= {1.0, 2.0, 3.0, 4.0, 5.0}


def test_missing_rate_zero_is_complete():
    assert generate(SynthSpec((10, 10), dims=3, missing_rate=0.0)).is_complete()


def test_missing_count_is_binomial():
    rate, spec = 0.1, SynthSpec((500, 500), dims=20, missing_rate=0.1, seed=3)
    cells = 1000 * 20
    got = generate(spec).missing_mask().sum()
    sd = np.sqrt(cells * rate * (1 - rate))
    assert abs(got - rate * cells) < 4 * sd


def test_deterministic_in_seed():
    s = SynthSpec((30, 20), dims=4, missing_rate=0.2, seed=5)
    assert generate(s).equals(generate(s))
    assert not generate(s).equals(generate(SynthSpec((30, 20), dims=4, missing_rate=0.2, seed=6)))


@pytest.mark.parametrize("bad", [dict(class_counts=(5,)), dict(class_counts=(5, 0)),
                                 dict(dims=1, class_counts=(2, 2)), dict(missing_rate=1.0),
                                 dict(separation=-1)])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        SynthSpec(**bad)


def _auc(spec, family="logreg", params=None, seed=0):
    ds = generate(spec)
    tr, te = stratified_holdout(ds, 0.3, seed)
    sc = preprocess.fit_scaler(tr)
    tr, te = preprocess.apply(None, sc, tr), preprocess.apply(None, sc, te)
    m = fit(LearnerSpec(family, params or {}, seed=seed), tr)
    return roc_auc(te.labels, score(m, te.values))[2]


def test_no_separation_is_chance():
    aucs = [_auc(SynthSpec((300, 200, 100), dims=6, separation=0.0, seed=s)) for s in range(3)]
    assert abs(np.mean(aucs) - 0.5) < 0.05


@pytest.mark.slow
def test_learnability_grows_with_separation():
    rf = {"n_estimators": 30}
    means = []
    for sep in (0.0, 1.0, 2.0, 4.0):
        means.append(np.mean([_auc(SynthSpec((120, 60, 20), dims=6, separation=sep, seed=s),
                                   "random_forest", rf, s) for s in range(5)]))
    assert all(b >= a for a, b in zip(means, means[1:]))
