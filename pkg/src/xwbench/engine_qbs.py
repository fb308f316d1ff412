"""Query-time summarizability resolution.

Nothing is ever rewritten: while a query streams facts, each fact's group
membership is resolved on the fly from the referenced instance's row array.
Per grouped level the distinct member set decides the component: one member
gives an atomic component, several collapse into a single fused component
(set semantics, so member order never splits groups), and an instance with
no value at all lands in the artificial OTHER component.  A row that is
missing the level while sibling rows carry one contributes the placeholder
member "Other" to the fused set, mirroring what the static engine's
covering+fusing produces, so both engines induce identical group partitions.
"""

from __future__ import annotations

from typing import FrozenSet, Mapping, Sequence, Union

from .errors import QueryError, ReferentialError
from .model import DimensionInstance, DimensionSchema, DwModel, FactRecord

OTHER_LABEL = "Other"


class OtherGroup:
    """Singleton marker for the group of facts missing the grouped level."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "OTHER"


OTHER = OtherGroup()

# A group key component: an atomic value, a fused member set, or OTHER.
Component = Union[str, FrozenSet[str], OtherGroup]
GroupKey = tuple  # tuple[Component, ...]


def resolve_component(inst: DimensionInstance, level: str | None,
                      schema: DimensionSchema) -> Component:
    """The instance's component at the grouped level (None = instance itself)."""
    if level is None:
        return inst.instance_id
    if level not in schema.levels:
        raise QueryError(f"dimension {schema.id!r} has no level {level!r}")
    members = {row.cells.get(level, OTHER_LABEL) for row in inst.rows}
    if len(members) == 1:
        only = next(iter(members))
        return OTHER if only == OTHER_LABEL else only
    return frozenset(members)


def resolve_group(fact: FactRecord, grouping: Sequence[tuple[str, str | None]],
                  instances: Mapping[str, Mapping[str, DimensionInstance]],
                  model: DwModel) -> GroupKey:
    """The fact's group key: one component per grouped dimension, in order."""
    components = []
    for dim_id, level in grouping:
        try:
            schema = model.dimension(dim_id)
        except KeyError:
            raise QueryError(f"unknown dimension {dim_id!r}")
        ref = fact.dim_refs[dim_id]
        inst = instances[dim_id].get(ref)
        if inst is None:
            raise ReferentialError(
                f"fact {fact.fact_id!r} references missing instance {ref!r}")
        components.append(resolve_component(inst, level, schema))
    return tuple(components)


def component_label(component: Component) -> str:
    """Canonical printable form; fused members sort lexicographically."""
    if component is OTHER:
        return OTHER_LABEL
    if isinstance(component, frozenset):
        return "+".join(sorted(component))
    return component


def label_component(label: str) -> Component:
    """Inverse of component_label over this benchmark's value domain."""
    if label == OTHER_LABEL:
        return OTHER
    if "+" in label:
        return frozenset(label.split("+"))
    return label
