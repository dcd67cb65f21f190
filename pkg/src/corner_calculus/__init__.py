"""Exact symbolic local models of manifolds with corners.

Submodules: finsetcat (finite sets and partitions), orthant (charts and monomial
b-maps), arrangement (p-clean families of affine p-submanifolds), blowup (iterated
real blow-up and lifted maps), genprod (generalized products), liealg (the
simplicial Lie algebroid) and cli.
"""

from __future__ import annotations

from .arrangement import (AffinePSub, PCleanFamily, diagonal_family, enumerate_orders, intersect,
                          intersection_closure, is_closed, is_p_clean, is_p_positioned, order_class, relation,
                          size_order, sub_from_equations, three_coplanar_lines)
from .atlas import Atlas
from .blowup import blow_up, check_equivalence, face_lattice, lift_map, resolve
from .errors import DomainError, ModelError, NotPPositioned, PreconditionError, StepError
from .finsetcat import FinSetMap, Partition, bell, compose, enumerate_partitions, partition_join
from .genprod import (ad_construct, boundary_product, bphi_construct, check_axioms, composition_support,
                      fibre_product_model, group_model, scl_construct, simple_support_check, twoscl_construct)
from .liealg import AlgebroidSection, PolyVectorField, anchor, bracket, simplicial_extend
from .orthant import MonomialAffineMap, OrthantChart, classify_map

__all__ = [
    "AffinePSub", "AlgebroidSection", "Atlas", "DomainError", "FinSetMap", "ModelError", "MonomialAffineMap",
    "NotPPositioned", "OrthantChart", "PCleanFamily", "Partition", "PolyVectorField", "PreconditionError",
    "StepError", "ad_construct", "anchor", "bell", "blow_up", "boundary_product", "bphi_construct", "bracket",
    "check_axioms", "check_equivalence", "classify_map", "compose", "composition_support", "diagonal_family",
    "enumerate_orders", "enumerate_partitions", "face_lattice", "fibre_product_model", "group_model", "intersect",
    "intersection_closure", "is_closed", "is_p_clean", "is_p_positioned", "lift_map", "order_class",
    "partition_join", "relation", "resolve", "scl_construct", "simple_support_check", "simplicial_extend",
    "size_order", "sub_from_equations", "three_coplanar_lines", "twoscl_construct",
]
