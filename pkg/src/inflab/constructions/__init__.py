"""Graph families paired with the switch sequences that make them slow."""

from .base import Schedule
from .basic import (BasicMajority, BasicMajorityParams, BasicMinority, BasicMinorityParams,
                    gen_basic_majority, gen_basic_minority)
from .builder import FAMILIES, erdos_renyi, generate
from .gadgets import EdgeGadget, EdgeGadgetParams, gen_edge_gadget
from .opening import gen_opening_tree, opening_recurrence
from .prop import PropBlackBox, StubInstance
from .swap import bipartite_color_swap
from .tower import (GrowingChain, ProportionalTower, ProportionalTowerParams,
                    gen_proportional_tower)

__all__ = [
    "Schedule", "BasicMajority", "BasicMajorityParams", "BasicMinority", "BasicMinorityParams",
    "gen_basic_majority", "gen_basic_minority", "FAMILIES", "erdos_renyi", "generate",
    "EdgeGadget", "EdgeGadgetParams", "gen_edge_gadget", "gen_opening_tree",
    "opening_recurrence", "PropBlackBox", "StubInstance", "bipartite_color_swap",
    "GrowingChain", "ProportionalTower", "ProportionalTowerParams", "gen_proportional_tower",
]
