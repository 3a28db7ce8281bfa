"""The variant matrix: which network elements and constraint families each model uses."""

from dataclasses import dataclass
from typing import FrozenSet, Tuple

from exceptions import InvalidCase, VariantPrerequisiteMissing
from milp import Family
from models import Branch, CaseFile, ModelVariant, StorageUnit, VtlPair
from validation import validate_case

_COMMON = frozenset({Family.UC, Family.LIMIT, Family.RAMP, Family.FLOW, Family.CURT, Family.BALANCE, Family.REF})

VARIANT_FAMILIES = {
    ModelVariant.BASE: _COMMON,
    ModelVariant.PT: _COMMON,
    ModelVariant.BESS: _COMMON | {Family.SOC},
    ModelVariant.VTL: _COMMON | {Family.SOC, Family.VTL},
}


@dataclass(frozen=True)
class EffectiveCase:
    """A case restricted to the elements one variant activates."""

    case: CaseFile
    variant: ModelVariant
    branches: Tuple[Branch, ...]
    storages: Tuple[StorageUnit, ...]
    vtl_pairs: Tuple[VtlPair, ...]
    families: FrozenSet[Family]

    @property
    def storage_in_balance(self) -> bool:
        return bool(self.storages)

    @property
    def options(self):
        return self.case.options


def apply_variant(case: CaseFile, variant) -> EffectiveCase:
    """
    Select the branches, storages and constraint families for ``variant``.

    Raises:
        InvalidCase: the case fails validation
        VariantPrerequisiteMissing: the case lacks what the variant needs
    """
    variant = ModelVariant.parse(variant)
    report = validate_case(case)
    if report.issues:
        raise InvalidCase(report)

    existing = tuple(k for k in case.branches if not k.is_candidate_pt)
    candidates = tuple(k for k in case.branches if k.is_candidate_pt)

    if variant is ModelVariant.PT and not candidates:
        raise VariantPrerequisiteMissing(variant.value, "candidate physical-line branch")
    if variant in (ModelVariant.BESS, ModelVariant.VTL) and not case.storages:
        raise VariantPrerequisiteMissing(variant.value, "storage unit")
    if variant is ModelVariant.VTL and not case.vtl_pairs:
        raise VariantPrerequisiteMissing(variant.value, "VTL pair")

    branches = case.branches if variant is ModelVariant.PT else existing
    storages = case.storages if variant in (ModelVariant.BESS, ModelVariant.VTL) else ()
    pairs = case.vtl_pairs if variant is ModelVariant.VTL else ()

    return EffectiveCase(
        case=case,
        variant=variant,
        branches=branches,
        storages=tuple(storages),
        vtl_pairs=tuple(pairs),
        families=VARIANT_FAMILIES[variant],
    )
