"""
File formats: the ADF1 binary signal container, binary PGM (P5), the
FilterBankFile JSON document, UEP reports and the DecompTree directory.
"""
# stdlib
import json
import logging
import os
import struct
from pathlib import Path
from typing import Union
# lib
import numpy as np
# local
from adaframe.controllers import FilterBankDocument
from adaframe.controllers.exceptions import (
    InvalidFilterBankDocument,
    MalformedHeader,
    OutOfRange,
    ShapeMismatch,
    UnsupportedMaxval,
)
from adaframe.multilevel import DecompTree, Node
from adaframe.tensor import FilterBank
from adaframe.uep import UepReport
from adaframe.utils import JINJA_ENV, check_template_data


__all__ = [
    'bank_document',
    'read_adf1',
    'read_bank',
    'read_pgm',
    'read_signal',
    'read_tree',
    'render_bank',
    'render_report',
    'write_adf1',
    'write_bank',
    'write_pgm',
    'write_signal',
    'write_tree',
]

LOGGER = 'adaframe.fileio'

ADF1_MAGIC = b'ADF1'
ADF1_PREFIX = struct.Struct('<4sBB')
BANK_TEMPLATE = 'fileio/filter_bank.json.j2'
REPORT_TEMPLATE = 'fileio/uep_report.json.j2'
BANK_VERSION = 1
MANIFEST = 'manifest.json'

PathLike = Union[str, os.PathLike]


# ADF1

def write_adf1(path: PathLike, v: np.ndarray, channel_axis: bool = False):
    """
    magic, ndim (u8), channels (u8), shape (ndim x u32), float64 payload,
    all little-endian. With channel_axis the leading axis of v is the channel
    axis and is not counted in ndim.
    """
    v = np.asarray(v, dtype=float)
    channels = v.shape[0] if channel_axis else 0
    shape = v.shape[1:] if channel_axis else v.shape
    if channel_axis and not 1 <= channels <= 255:
        raise OutOfRange(f'{channels} channels do not fit the ADF1 header')
    if len(shape) > 255:
        raise OutOfRange(f'{len(shape)} axes do not fit the ADF1 header')
    header = ADF1_PREFIX.pack(ADF1_MAGIC, len(shape), channels) + struct.pack(f'<{len(shape)}I', *shape)
    with open(path, 'wb') as handle:
        handle.write(header)
        handle.write(np.ascontiguousarray(v, dtype='<f8').tobytes())


def read_adf1(path: PathLike) -> np.ndarray:
    with open(path, 'rb') as handle:
        raw = handle.read()
    if len(raw) < ADF1_PREFIX.size:
        raise MalformedHeader(f'{path}: {len(raw)} bytes')
    magic, ndim, channels = ADF1_PREFIX.unpack_from(raw)
    if magic != ADF1_MAGIC:
        raise MalformedHeader(f'{path}: magic {magic!r}')
    offset = ADF1_PREFIX.size + 4 * ndim
    if len(raw) < offset:
        raise MalformedHeader(f'{path}: truncated shape')
    shape = struct.unpack_from(f'<{ndim}I', raw, ADF1_PREFIX.size)
    full = ((channels,) if channels else ()) + tuple(shape)
    expected = 8 * int(np.prod(full))
    if len(raw) - offset != expected:
        raise MalformedHeader(f'{path}: payload of {len(raw) - offset} bytes, header says {expected}')
    return np.frombuffer(raw, dtype='<f8', offset=offset).astype(float).reshape(full)


# PGM

def _pgm_tokens(raw: bytes, path):
    """Magic, width, height, maxval and the payload offset of a P5 header."""
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b'#':
            while pos < len(raw) and raw[pos:pos + 1] not in (b'\n', b'\r'):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace() and raw[pos:pos + 1] != b'#':
            pos += 1
        if start == pos:
            raise MalformedHeader(f'{path}: truncated header')
        tokens.append(raw[start:pos])
    # exactly one whitespace byte separates maxval from the raster
    return tokens, pos + 1


def read_pgm(path: PathLike) -> np.ndarray:
    """Binary 8-bit PGM as a (height, width) array in [0, 1]."""
    with open(path, 'rb') as handle:
        raw = handle.read()
    tokens, offset = _pgm_tokens(raw, path)
    if tokens[0] != b'P5':
        raise MalformedHeader(f'{path}: magic {tokens[0]!r}')
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MalformedHeader(f'{path}: non-numeric header field')
    if maxval != 255:
        raise UnsupportedMaxval(maxval)
    data = raw[offset:]
    if width < 1 or height < 1 or len(data) != width * height:
        raise MalformedHeader(f'{path}: {len(data)} raster bytes for {width}x{height}')
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width) / 255.0


def write_pgm(path: PathLike, image: np.ndarray):
    """
    Clamp to [0, 1], scale by 255 and round half away from zero. The header is
    always canonical (magic, size and maxval on their own lines): comments and
    unusual whitespace of a file read with read_pgm are not kept, so only pixel bytes
    round-trip for such files.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ShapeMismatch(f'PGM images are 2D, got shape {image.shape}')
    if not np.all(np.isfinite(image)):
        raise OutOfRange('PGM pixels must be finite')
    pixels = np.floor(np.clip(image, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    height, width = image.shape
    with open(path, 'wb') as handle:
        handle.write(f'P5\n{width} {height}\n255\n'.encode('ascii'))
        handle.write(pixels.tobytes())


def read_signal(path: PathLike) -> np.ndarray:
    if str(path).lower().endswith('.pgm'):
        return read_pgm(path)
    return read_adf1(path)


def write_signal(path: PathLike, v: np.ndarray, channel_axis: bool = False):
    if str(path).lower().endswith('.pgm'):
        write_pgm(path, v)
    else:
        write_adf1(path, v, channel_axis)


# FilterBankFile

def render_bank(bank: FilterBank) -> str:
    logger = logging.getLogger(f'{LOGGER}.render_bank')
    template_data = {
        'version': BANK_VERSION,
        'kind': bank.kind,
        'd': bank.d,
        'm': bank.m,
        'support': list(bank.support),
        'sampling': list(bank.M),
        'roles': list(bank.roles),
        'channel_support': bank.channel_support,
        'channel_sampling': bank.channel_sampling,
        'filters': [list(row) for row in bank.matrix],
    }
    template = JINJA_ENV.get_template(BANK_TEMPLATE)
    template_verified, template_error = check_template_data(template_data, template)
    if not template_verified:
        logger.debug(f'Failed to render filter bank document.\n{template_error}')
        raise InvalidFilterBankDocument(template_error)
    return template.render(**template_data)


def bank_document(bank: FilterBank) -> dict:
    return json.loads(render_bank(bank))


def bank_from_document(document) -> FilterBank:
    success, errors = FilterBankDocument(document)()
    if not success:
        raise InvalidFilterBankDocument('; '.join(errors))
    c = document['channelSupport']
    shape = (document['m'],) + ((c,) if c else ()) + tuple(document['support'])
    return FilterBank(
        taps=np.array(document['filters'], dtype=float).reshape(shape),
        M=tuple(document['samplingDiag']),
        roles=tuple(document['roles']),
        kind=document['kind'],
        channel_support=c,
        channel_sampling=document.get('channelSampling', 0),
    )


def write_bank(path: PathLike, bank: FilterBank):
    Path(path).write_text(render_bank(bank))


def read_bank(path: PathLike) -> FilterBank:
    try:
        document = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise InvalidFilterBankDocument(f'{path}: {e}')
    return bank_from_document(document)


# reports

def render_report(report: UepReport, tolerance: float) -> str:
    template_data = dict(
        time_residual=report.time_residual,
        spectral_residual=report.spectral_residual,
        equation_count=report.equation_count,
        unknown_count=report.unknown_count,
        feasible=report.feasible,
        tolerance=tolerance,
        passed=max(report.time_residual, report.spectral_residual) <= tolerance,
    )
    template = JINJA_ENV.get_template(REPORT_TEMPLATE)
    template_verified, template_error = check_template_data(template_data, template)
    if not template_verified:
        raise InvalidFilterBankDocument(template_error)
    return template.render(**template_data)


# DecompTree

def write_tree(directory: PathLike, tree: DecompTree):
    """manifest.json with topology and banks, one ADF1 file per node."""
    logger = logging.getLogger(f'{LOGGER}.write_tree')
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    d = _spatial_dims(tree)
    entries = []
    count = 0
    for level in tree.nodes[1:]:
        for node in level:
            name = f'node_{count}.adf1'
            channel_axis = node.data.ndim > d
            write_adf1(directory / name, node.data, channel_axis)
            entries.append({
                'level': node.level,
                'index': node.index,
                'parent': node.parent,
                'path': list(node.path),
                'expanded': node.expanded,
                'pruned': node.pruned,
                'filterIndex': node.filter_index,
                'file': name,
            })
            count += 1
    banks = [
        bank_document(entry) if isinstance(entry, FilterBank) else [bank_document(b) for b in entry]
        for entry in tree.banks
    ]
    manifest = {
        'mode': tree.mode,
        'levels': tree.levels,
        'nonlinearity': tree.nonlinearity,
        'pruneThreshold': tree.prune_threshold,
        'rootShape': list(tree.root_shape),
        'nodes': entries,
        'banks': banks,
    }
    (directory / MANIFEST).write_text(json.dumps(manifest, indent=2))
    logger.debug(f'Wrote {count} nodes to {directory}')


def _spatial_dims(tree: DecompTree) -> int:
    first = tree.banks[0]
    return (first if isinstance(first, FilterBank) else first[0]).d


def read_tree(directory: PathLike) -> DecompTree:
    directory = Path(directory)
    try:
        manifest = json.loads((directory / MANIFEST).read_text())
    except json.JSONDecodeError as e:
        raise MalformedHeader(f'{directory / MANIFEST}: {e}')
    try:
        nodes = [[Node(level=0, index=0, parent=None, path=(), data=None, expanded=True)]]
        for _ in range(manifest['levels']):
            nodes.append([])
        for entry in manifest['nodes']:
            nodes[entry['level']].append(Node(
                level=entry['level'],
                index=entry['index'],
                parent=entry['parent'],
                path=tuple(entry['path']),
                data=read_adf1(directory / entry['file']),
                expanded=entry['expanded'],
                pruned=entry['pruned'],
                filter_index=entry['filterIndex'],
            ))
        banks = [
            bank_from_document(entry) if isinstance(entry, dict) else [bank_from_document(b) for b in entry]
            for entry in manifest['banks']
        ]
        return DecompTree(
            mode=manifest['mode'],
            levels=manifest['levels'],
            nodes=[level for level in nodes if level],
            banks=banks,
            nonlinearity=manifest['nonlinearity'],
            prune_threshold=manifest['pruneThreshold'],
            root_shape=tuple(manifest['rootShape']),
        )
    except (KeyError, TypeError, IndexError) as e:
        raise MalformedHeader(f'{directory / MANIFEST}: missing or invalid field {e}')
