import numpy as np
import pytest
from hypothesis import given, strategies as st

from prognosis.errors import CompletenessError, ShapeError
from prognosis.features import (
    INTERACTIONS,
    MAIN_EFFECTS,
    FeatureSet,
    catalog,
    design_matrix,
    expand,
    expand_biomarkers,
    feature_set_by_id,
    feature_set_for_members,
)

finite = st.floats(min_value=0.0, max_value=1e4, allow_nan=False)


def test_catalog_has_six_nested_sets():
    sets = catalog()
    assert [fs.identifier for fs in sets] == [f"set{i}" for i in range(1, 7)]
    assert sets[0].members == ("ldh",)
    assert sets[2].members == MAIN_EFFECTS
    assert sets[4].members == (
        "ldh", "lymphocyte", "hs_crp", "ldh:lymphocyte", "ldh:hs_crp")
    # strictly nested: each set contains the previous one
    for prev, cur in zip(sets, sets[1:]):
        assert set(prev.members) < set(cur.members)
    assert set(sets[5].members) - set(sets[4].members) == {"lymphocyte:hs_crp"}


def test_feature_set_by_id_rejects_unknown():
    with pytest.raises(ShapeError):
        feature_set_by_id("set99")


def test_feature_set_validation():
    with pytest.raises(ShapeError):
        FeatureSet("bad", ("ldh", "creatinine"))
    with pytest.raises(ShapeError):
        FeatureSet("dup", ("ldh", "ldh"))


def test_feature_set_for_members_matches_catalog():
    fs = feature_set_for_members(("ldh", "lymphocyte", "hs_crp",
                                  "ldh:lymphocyte", "ldh:hs_crp"))
    assert fs.identifier == "set5"
    custom = feature_set_for_members(("ldh", "hs_crp"))
    assert custom.identifier.startswith("custom:")
    assert custom.arity == 2


def test_expand_worked_example():
    fs = feature_set_by_id("set5")
    vec = expand_biomarkers(100.0, 20.0, 10.0, fs)
    assert vec.tolist() == [100.0, 20.0, 10.0, 2000.0, 1000.0]


def test_expand_zero_vector():
    fs = feature_set_by_id("set6")
    assert expand_biomarkers(0.0, 0.0, 0.0, fs).tolist() == [0.0] * 6


def test_expand_published_case():
    fs = feature_set_by_id("set5")
    vec = expand_biomarkers(600.0, 5.0, 100.0, fs)
    assert vec.tolist() == [600.0, 5.0, 100.0, 3000.0, 60000.0]


def test_expand_missing_value_names_biomarker():
    fs = feature_set_by_id("set3")
    with pytest.raises(CompletenessError, match="hs_crp"):
        expand({"ldh": 100.0, "lymphocyte": 20.0}, fs)
    # a missing interaction parent is reported too, even if the main effect
    # itself is not in the set
    with pytest.raises(CompletenessError, match="lymphocyte"):
        expand({"ldh": 100.0, "hs_crp": 3.0},
               feature_set_for_members(("ldh", "ldh:lymphocyte")))


@given(ldh=finite, lym=st.floats(0, 100, allow_nan=False), crp=finite)
def test_interaction_slots_are_exact_products(ldh, lym, crp):
    fs = feature_set_by_id("set6")
    vec = expand_biomarkers(ldh, lym, crp, fs)
    assert vec[3] == ldh * lym
    assert vec[4] == ldh * crp
    assert vec[5] == lym * crp


@given(ldh=st.floats(1e-3, 1e3), lym=st.floats(1e-3, 100), crp=st.floats(1e-3, 1e3),
       a=st.floats(0.5, 2.0))
def test_interaction_scaling_property(ldh, lym, crp, a):
    # scaling one parent by a scales its interactions by a but leaves the
    # unrelated interaction untouched
    fs = feature_set_by_id("set6")
    base = expand_biomarkers(ldh, lym, crp, fs)
    scaled = expand_biomarkers(a * ldh, lym, crp, fs)
    assert scaled[3] == pytest.approx(a * base[3], rel=1e-12)
    assert scaled[4] == pytest.approx(a * base[4], rel=1e-12)
    assert scaled[5] == base[5]


def test_expand_is_pure():
    fs = feature_set_by_id("set5")
    v1 = expand_biomarkers(12.5, 33.0, 7.25, fs)
    v2 = expand_biomarkers(12.5, 33.0, 7.25, fs)
    assert np.array_equal(v1, v2)


def test_design_matrix_empty():
    fs = feature_set_by_id("set5")
    assert design_matrix([], fs).shape == (0, 5)
