"""Feature expansion: the three biomarkers plus second-order interaction products.

Feature values stay in raw clinical units everywhere (U/L, %, mg/L); the
published coefficient magnitudes are only meaningful against unstandardized
inputs, so no scaling happens in this module or downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CompletenessError, ShapeError

LDH = "ldh"
LYMPHOCYTE = "lymphocyte"
HS_CRP = "hs_crp"

MAIN_EFFECTS = (LDH, LYMPHOCYTE, HS_CRP)

# interaction name -> (parent, parent)
INTERACTIONS = {
    f"{LDH}:{LYMPHOCYTE}": (LDH, LYMPHOCYTE),
    f"{LDH}:{HS_CRP}": (LDH, HS_CRP),
    f"{LYMPHOCYTE}:{HS_CRP}": (LYMPHOCYTE, HS_CRP),
}


@dataclass(frozen=True)
class FeatureSet:
    """An ordered list of feature names under a stable identifier."""

    identifier: str
    members: tuple[str, ...]

    def __post_init__(self):
        for name in self.members:
            if name not in MAIN_EFFECTS and name not in INTERACTIONS:
                raise ShapeError(f"unknown feature name: {name!r}")
        if len(set(self.members)) != len(self.members):
            raise ShapeError("duplicate feature names in set")

    @property
    def arity(self) -> int:
        return len(self.members)


def catalog() -> list[FeatureSet]:
    """The six nested feature sets, from LDH alone up to all three
    biomarkers with every pairwise interaction."""
    nested = [
        (LDH,),
        (LDH, LYMPHOCYTE),
        (LDH, LYMPHOCYTE, HS_CRP),
        (LDH, LYMPHOCYTE, HS_CRP, f"{LDH}:{LYMPHOCYTE}"),
        (LDH, LYMPHOCYTE, HS_CRP, f"{LDH}:{LYMPHOCYTE}", f"{LDH}:{HS_CRP}"),
        (LDH, LYMPHOCYTE, HS_CRP, f"{LDH}:{LYMPHOCYTE}", f"{LDH}:{HS_CRP}",
         f"{LYMPHOCYTE}:{HS_CRP}"),
    ]
    return [FeatureSet(f"set{i + 1}", members) for i, members in enumerate(nested)]


def feature_set_by_id(identifier: str) -> FeatureSet:
    for fs in catalog():
        if fs.identifier == identifier:
            return fs
    raise ShapeError(f"unknown feature set id: {identifier!r}")


def feature_set_for_members(members) -> FeatureSet:
    """Return the catalog set with these members if one exists, else a
    custom set with a derived identifier."""
    members = tuple(members)
    for fs in catalog():
        if set(fs.members) == set(members):
            return fs
    return FeatureSet("custom:" + "+".join(members), members)


def expand(values: dict, feature_set: FeatureSet) -> np.ndarray:
    """Expand a complete biomarker triple (dict keyed by main-effect name)
    into the ordered feature vector of ``feature_set``.

    Main effects are copied in raw units; interaction slots are the exact
    floating-point product of their two parents.
    """
    out = np.empty(feature_set.arity)
    for i, name in enumerate(feature_set.members):
        if name in INTERACTIONS:
            a, b = INTERACTIONS[name]
            va, vb = values.get(a), values.get(b)
            if va is None or vb is None:
                missing = a if va is None else b
                raise CompletenessError(f"biomarker {missing!r} absent")
            out[i] = va * vb
        else:
            v = values.get(name)
            if v is None:
                raise CompletenessError(f"biomarker {name!r} absent")
            out[i] = v
    return out


def expand_biomarkers(ldh, lymphocyte_pct, hs_crp,
                      feature_set: FeatureSet) -> np.ndarray:
    """expand() from the three raw measurements (lymphocyte is a percentage)."""
    return expand({LDH: ldh, LYMPHOCYTE: lymphocyte_pct, HS_CRP: hs_crp},
                  feature_set)


def expand_record(record, feature_set: FeatureSet) -> np.ndarray:
    """Expand a BiomarkerRecord (duck-typed: .ldh/.lymphocyte_pct/.hs_crp)."""
    return expand(
        {LDH: record.ldh, LYMPHOCYTE: record.lymphocyte_pct, HS_CRP: record.hs_crp},
        feature_set,
    )


def design_matrix(records, feature_set: FeatureSet) -> np.ndarray:
    """Stack expanded feature vectors for a sequence of complete records."""
    if not records:
        return np.empty((0, feature_set.arity))
    return np.vstack([expand_record(r, feature_set) for r in records])
