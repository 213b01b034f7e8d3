"""
Multi-level structures: MRA (lowpass channel re-expanded with one bank),
scattering (every channel re-expanded, with energy pruning) and convnet
(all maps stacked into one multi-channel signal per level).
"""
# stdlib
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union
# lib
import numpy as np
# local
from adaframe.controllers.exceptions import (
    ModeMismatch,
    NoLowpassFlag,
    OutOfRange,
    ShapeNotDivisible,
    UnsupportedCase,
)
from adaframe.tensor import CoeffSet, FilterBank, decompose, reconstruct


__all__ = [
    'DecompTree',
    'MODES',
    'NONLINEARITIES',
    'Node',
    'TreeSpec',
    'build_tree',
    'convnet_decompose',
    'mra_decompose',
    'mra_reconstruct',
    'scatter_decompose',
]

LOGGER = 'adaframe.multilevel'

MODES = ('mra', 'scattering', 'convnet')

NONLINEARITIES: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    'none': lambda v: v,
    'abs': np.abs,
    'relu': lambda v: np.maximum(v, 0.0),
}

BankSchedule = Union[FilterBank, Sequence[Union[FilterBank, Sequence[FilterBank]]]]


@dataclass(eq=False)
class Node:
    level: int
    index: int
    parent: Optional[int]
    path: Tuple[int, ...]
    data: Optional[np.ndarray]
    expanded: bool = False
    pruned: bool = False
    filter_index: Optional[int] = None

    @property
    def energy(self) -> float:
        return float(np.sum(self.data * self.data)) if self.data is not None else 0.0


@dataclass(eq=False)
class DecompTree:
    """
    nodes[0] is the root (the input, not stored); nodes[l] lists the level-l
    nodes in expansion order, each with `parent` indexing nodes[l - 1].
    banks[l - 1] is the bank used to expand level l - 1 nodes: a FilterBank,
    or one FilterBank per expanded node.
    """
    mode: str
    levels: int
    nodes: List[List[Node]]
    banks: List[Union[FilterBank, List[FilterBank]]]
    nonlinearity: str = 'none'
    prune_threshold: float = 0.0
    root_shape: Tuple[int, ...] = ()

    def level(self, level: int) -> List[Node]:
        return self.nodes[level]

    def leaves(self) -> List[Node]:
        return [node for level in self.nodes[1:] for node in level if not node.expanded]

    def coefficient_nodes(self) -> List[Node]:
        """Every non-root node, level-major then by index."""
        return [node for level in self.nodes[1:] for node in level]

    def node_count(self) -> int:
        return sum(len(level) for level in self.nodes[1:])


@dataclass
class TreeSpec:
    """What extract_features builds before flattening."""
    mode: str
    banks: BankSchedule
    levels: int = 1
    nonlinearity: str = 'none'
    prune_threshold: float = 0.0


def _nonlinearity(name: str) -> Callable[[np.ndarray], np.ndarray]:
    try:
        return NONLINEARITIES[name]
    except KeyError:
        raise UnsupportedCase(f'nonlinearity {name!r}, expected one of {sorted(NONLINEARITIES)}')


def _check_levels(levels: int):
    if levels < 1:
        raise OutOfRange(f'levels must be at least 1, got {levels}')


def _root() -> Node:
    return Node(level=0, index=0, parent=None, path=(), data=None, expanded=True)


def _bank_for(banks: BankSchedule, level: int, position: int) -> FilterBank:
    if isinstance(banks, FilterBank):
        return banks
    entry = banks[level - 1]
    if isinstance(entry, FilterBank):
        return entry
    return entry[position]


def _check_mra_bank(A: FilterBank):
    if A.roles[0] != 'lowpass' or A.roles.count('lowpass') != 1:
        raise NoLowpassFlag(A.roles)
    if A.channel_support:
        raise UnsupportedCase('MRA expands scalar signals only')


def mra_decompose(v: np.ndarray, A: FilterBank, levels: int) -> DecompTree:
    """
    Re-decompose the lowpass map `levels` times with A. Level l holds all m
    maps of that scale; only the lowpass node of levels < `levels` is expanded.
    """
    logger = logging.getLogger(f'{LOGGER}.mra_decompose')
    _check_mra_bank(A)
    _check_levels(levels)
    v = np.asarray(v, dtype=float)
    total = tuple(k ** levels for k in A.M)
    if v.ndim != A.d or any(n % k for n, k in zip(v.shape, total)):
        raise ShapeNotDivisible(f'shape {v.shape}, sampling {A.M} over {levels} levels')

    nodes = [[_root()]]
    current = v
    for level in range(1, levels + 1):
        maps = decompose(current, A).maps
        parent = nodes[level - 1][0]
        nodes.append([
            Node(
                level=level,
                index=l,
                parent=0,
                path=parent.path + (l,),
                data=maps[l],
                expanded=(l == 0 and level < levels),
                filter_index=l,
            )
            for l in range(A.m)
        ])
        current = maps[0]
    logger.debug(f'MRA of {v.shape} over {levels} levels with {A.m} filters')
    return DecompTree('mra', levels, nodes, [A] * levels, root_shape=v.shape)


def mra_reconstruct(t: DecompTree, B: FilterBank) -> np.ndarray:
    """Bottom-up reconstruction from the leaves; intermediate lowpass data is ignored."""
    if t.mode != 'mra':
        raise ModeMismatch(t.mode)
    current = t.nodes[t.levels][0].data
    for level in range(t.levels, 0, -1):
        highpass = [node.data for node in t.nodes[level][1:]]
        current = reconstruct(CoeffSet([current] + highpass), B)
    return current


def scatter_decompose(
        v: np.ndarray,
        banks: BankSchedule,
        levels: int,
        nonlinearity: str = 'abs',
        prune_threshold: float = 0.0,
) -> DecompTree:
    """
    Expand every surviving node with the level's bank, after the pointwise
    nonlinearity. A node below `levels` whose energy relative to the input is
    under prune_threshold is marked pruned and kept as a leaf.
    """
    logger = logging.getLogger(f'{LOGGER}.scatter_decompose')
    _check_levels(levels)
    if prune_threshold < 0:
        raise OutOfRange(f'prune threshold must be non-negative, got {prune_threshold}')
    act = _nonlinearity(nonlinearity)
    v = np.asarray(v, dtype=float)
    root_energy = float(np.sum(v * v))

    nodes = [[_root()]]
    used_banks = []
    inputs = [v]
    parents = [nodes[0][0]]
    for level in range(1, levels + 1):
        children, next_inputs, level_banks = [], [], []
        for position, (parent, signal) in enumerate(zip(parents, inputs)):
            bank = _bank_for(banks, level, position)
            level_banks.append(bank)
            maps = decompose(signal, bank).maps
            parent_index = nodes[level - 1].index(parent)
            for l, data in enumerate(maps):
                children.append(Node(
                    level=level,
                    index=len(children),
                    parent=parent_index,
                    path=parent.path + (l,),
                    data=data,
                    filter_index=l,
                ))
        nodes.append(children)
        shared = isinstance(banks, FilterBank) or isinstance(banks[level - 1], FilterBank)
        used_banks.append(level_banks[0] if shared else level_banks)
        if level == levels:
            break
        parents = []
        for node in children:
            ratio = node.energy / root_energy if root_energy > 0 else 0.0
            if ratio < prune_threshold:
                node.pruned = True
                continue
            node.expanded = True
            parents.append(node)
            next_inputs.append(act(node.data))
        inputs = next_inputs
        if not parents:
            logger.debug(f'Every node pruned at level {level}')
            break
    logger.debug(f'Scattering tree with {sum(len(level) for level in nodes[1:])} nodes')
    return DecompTree(
        'scattering',
        levels,
        nodes,
        used_banks,
        nonlinearity=nonlinearity,
        prune_threshold=prune_threshold,
        root_shape=v.shape,
    )


def convnet_decompose(
        v: np.ndarray,
        banks: BankSchedule,
        levels: int,
        nonlinearity: str = 'relu',
) -> DecompTree:
    """
    One node per level: the level's maps stacked filter-major into a
    multi-channel signal, fed (after the nonlinearity) to the next bank.
    """
    _check_levels(levels)
    act = _nonlinearity(nonlinearity)
    v = np.asarray(v, dtype=float)
    nodes = [[_root()]]
    used_banks = []
    current = v
    for level in range(1, levels + 1):
        bank = _bank_for(banks, level, 0)
        stacked = decompose(current, bank).stack(bank.d)
        nodes[level - 1][0].expanded = True
        nodes.append([Node(level=level, index=0, parent=0, path=(0,) * level, data=stacked)])
        used_banks.append(bank)
        current = act(stacked)
    return DecompTree('convnet', levels, nodes, used_banks, nonlinearity=nonlinearity, root_shape=v.shape)


def build_tree(v: np.ndarray, spec: TreeSpec) -> DecompTree:
    if spec.mode == 'mra':
        bank = spec.banks if isinstance(spec.banks, FilterBank) else spec.banks[0]
        return mra_decompose(v, bank, spec.levels)
    if spec.mode == 'scattering':
        return scatter_decompose(v, spec.banks, spec.levels, spec.nonlinearity, spec.prune_threshold)
    if spec.mode == 'convnet':
        return convnet_decompose(v, spec.banks, spec.levels, spec.nonlinearity)
    raise ModeMismatch(spec.mode)
