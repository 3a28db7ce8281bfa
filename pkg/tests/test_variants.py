"""Tests for the variant matrix."""

import pytest

from exceptions import InvalidCase, VariantPrerequisiteMissing
from milp import Family
from models import Branch, ModelVariant, ThermalGen
from variants import VARIANT_FAMILIES, apply_variant


class TestApplyVariant:
    """Test which elements each variant activates."""

    def test_base_drops_candidates_and_storage(self, small_case):
        eff = apply_variant(small_case, "base")

        assert eff.variant is ModelVariant.BASE
        assert [k.id for k in eff.branches] == ["ab", "bc"]
        assert eff.storages == ()
        assert eff.vtl_pairs == ()
        assert not eff.storage_in_balance

    def test_pt_keeps_candidate_lines(self, small_case):
        eff = apply_variant(small_case, ModelVariant.PT)

        assert [k.id for k in eff.branches] == ["ab", "bc", "ac"]
        assert eff.storages == ()

    def test_bess_activates_storage_without_pairs(self, small_case):
        eff = apply_variant(small_case, "bess")

        assert [e.id for e in eff.storages] == ["s1", "s2"]
        assert eff.vtl_pairs == ()
        assert Family.SOC in eff.families
        assert Family.VTL not in eff.families

    def test_vtl_activates_pairs(self, small_case):
        eff = apply_variant(small_case, "vtl")

        assert [vt.id for vt in eff.vtl_pairs] == ["vt"]
        assert {Family.SOC, Family.VTL} <= eff.families
        assert [k.id for k in eff.branches] == ["ab", "bc"]

    def test_family_matrix(self):
        common = {Family.UC, Family.LIMIT, Family.RAMP, Family.FLOW, Family.CURT, Family.BALANCE, Family.REF}
        assert VARIANT_FAMILIES[ModelVariant.BASE] == common
        assert VARIANT_FAMILIES[ModelVariant.PT] == common
        assert VARIANT_FAMILIES[ModelVariant.BESS] == common | {Family.SOC}
        assert VARIANT_FAMILIES[ModelVariant.VTL] == common | {Family.SOC, Family.VTL}

    def test_pt_without_candidates(self, case_factory):
        case = case_factory(branches=(Branch("ab", "a", "b", 0.1, 100.0), Branch("bc", "b", "c", 0.1, 100.0)))
        with pytest.raises(VariantPrerequisiteMissing) as exc:
            apply_variant(case, "pt")
        assert exc.value.variant == "pt"

    @pytest.mark.parametrize("variant", ["bess", "vtl"])
    def test_storage_variants_without_storage(self, case_factory, variant):
        case = case_factory(storages=(), vtl_pairs=())
        with pytest.raises(VariantPrerequisiteMissing, match="storage unit"):
            apply_variant(case, variant)

    def test_vtl_without_pairs(self, case_factory):
        with pytest.raises(VariantPrerequisiteMissing, match="VTL pair"):
            apply_variant(case_factory(vtl_pairs=()), "vtl")

    def test_base_needs_nothing_extra(self, case_factory):
        case = case_factory(storages=(), vtl_pairs=(),
                            branches=(Branch("ab", "a", "b", 0.1, 100.0), Branch("bc", "b", "c", 0.1, 100.0)))
        assert apply_variant(case, "base").variant is ModelVariant.BASE

    def test_invalid_case(self, case_factory):
        case = case_factory(thermal_gens=(ThermalGen("g1", "a", 200.0, 100.0, 1.0),))
        with pytest.raises(InvalidCase) as exc:
            apply_variant(case, "base")
        assert exc.value.report.has("ThermalGen", "0 <= p_min <= p_max")

    def test_unknown_variant(self, small_case):
        with pytest.raises(ValueError):
            apply_variant(small_case, "hvdc")
