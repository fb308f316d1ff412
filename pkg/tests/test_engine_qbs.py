"""Query-time resolution: component semantics and group keys."""

import pytest

from conftest import (
    COMPLEX_SUPPLIER,
    FOUR_ROW_SUPPLIER,
    make_instance,
    reference_sale_warehouse,
)
from xwbench.engine_qbs import (
    OTHER,
    component_label,
    label_component,
    resolve_component,
    resolve_group,
)
from xwbench.errors import QueryError, ReferentialError


class TestResolveComponent:
    def test_multi_nation_array_fuses(self, model):
        inst = make_instance("supplier", FOUR_ROW_SUPPLIER)
        component = resolve_component(inst, "nation", model.dimension("supplier"))
        assert component == frozenset({"FRANCE", "GERMANY"})

    def test_rows_agreeing_at_level_collapse_to_atomic(self, model):
        inst = make_instance("supplier", FOUR_ROW_SUPPLIER)
        assert resolve_component(inst, "region", model.dimension("supplier")) == "EUROPE"

    def test_missing_level_goes_to_other(self, model):
        inst = make_instance("part", [{"type2": "ANODIZED", "type1": "TIN"}])
        assert resolve_component(inst, "type3", model.dimension("part")) is OTHER

    def test_single_row_present_value_is_atomic(self, model):
        inst = make_instance("customer", [{"nation": "UNITED STATES",
                                           "region": "AMERICA"}])
        assert resolve_component(inst, "region", model.dimension("customer")) == "AMERICA"

    def test_mixed_present_and_absent_rows_fuse_with_placeholder(self, model):
        # matches what covering-then-fusing produces on the same instance
        inst = make_instance("supplier", COMPLEX_SUPPLIER)
        component = resolve_component(inst, "nation", model.dimension("supplier"))
        assert component == frozenset({"FRANCE", "GERMANY", "INDIA", "Other"})

    def test_instance_granularity(self, model):
        inst = make_instance("supplier", FOUR_ROW_SUPPLIER, ordinal=9)
        assert resolve_component(inst, None, model.dimension("supplier")) == "supplier#9"

    def test_unknown_level_is_query_error(self, model):
        inst = make_instance("supplier", FOUR_ROW_SUPPLIER)
        with pytest.raises(QueryError):
            resolve_component(inst, "type3", model.dimension("supplier"))


class TestResolveGroup:
    def test_reference_fact_under_avg_grouping(self, model):
        warehouse = reference_sale_warehouse()
        grouping = (("supplier", "region"), ("part", "type1"),
                    ("customer", "region"), ("date", "year"))
        key = resolve_group(warehouse.facts[0], grouping,
                            warehouse.instance_index(), model)
        assert key == ("EUROPE", "TIN", "AMERICA", "1998")

    def test_empty_grouping_is_the_unit_key(self, model):
        warehouse = reference_sale_warehouse()
        key = resolve_group(warehouse.facts[0], (), warehouse.instance_index(), model)
        assert key == ()

    def test_dangling_reference(self, model):
        warehouse = reference_sale_warehouse()
        index = warehouse.instance_index()
        index["part"].clear()
        with pytest.raises(ReferentialError):
            resolve_group(warehouse.facts[0], (("part", "type3"),), index, model)

    def test_unknown_dimension(self, model):
        warehouse = reference_sale_warehouse()
        with pytest.raises(QueryError):
            resolve_group(warehouse.facts[0], (("store", "city"),),
                          warehouse.instance_index(), model)


class TestLabels:
    def test_component_labels(self):
        assert component_label("FRANCE") == "FRANCE"
        assert component_label(frozenset({"GERMANY", "FRANCE"})) == "FRANCE+GERMANY"
        assert component_label(OTHER) == "Other"

    def test_label_components_invert(self):
        assert label_component("FRANCE") == "FRANCE"
        assert label_component("FRANCE+GERMANY") == frozenset({"FRANCE", "GERMANY"})
        assert label_component("Other") is OTHER
        assert label_component("EUROPE+Other") == frozenset({"EUROPE", "Other"})

    def test_fused_equality_is_set_equality(self):
        assert frozenset({"A", "B"}) == frozenset({"B", "A"})
        assert component_label(frozenset({"B", "A"})) == component_label(
            frozenset({"A", "B"}))
