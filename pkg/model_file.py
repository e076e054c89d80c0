#!/usr/bin/env python3
"""
LRBS1 model container.

    magic   b'LRBS1'
    blocks  tag (4 ASCII bytes) | payload length (uint64 LE) | payload

    HEAD  UTF-8 JSON: version, dims, lambda, metadata, PCA flags
    MATM  the bilinear matrix
    PXMN / PXBS / PXEV   x-side PCA mean, basis, eigenvalues (optional)
    PZMN / PZBS / PZEV   z-side PCA mean, basis, eigenvalues (optional)
    END.  empty terminator

Array payloads are rows (uint32 LE) | cols (uint32 LE) | float64 LE row-major.
"""

import json
import logging
import struct
from pathlib import Path

import numpy as np

from config import MODEL_MAGIC, MODEL_VERSION
from errors import InputError, ModelFormatError
from linalg import PcaProjection
from optimizer import SimilarityModel
from storage import save_bytes

log = logging.getLogger('lrbs.model')

_BLOCK_HEADER = struct.Struct('<4sQ')
_ARRAY_HEADER = struct.Struct('<II')
_FLOAT = np.dtype('<f8')


def _pack_array(a: np.ndarray) -> bytes:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    return _ARRAY_HEADER.pack(a.shape[0], a.shape[1]) + a.astype(_FLOAT).tobytes(order='C')


def _unpack_array(tag: str, payload: bytes) -> np.ndarray:
    if len(payload) < _ARRAY_HEADER.size:
        raise ModelFormatError(f'{tag} block too short for an array header')
    rows, cols = _ARRAY_HEADER.unpack_from(payload)
    expected = _ARRAY_HEADER.size + rows * cols * _FLOAT.itemsize
    if len(payload) != expected:
        raise ModelFormatError(f'{tag} block holds {len(payload)} bytes, {rows}x{cols} array needs {expected}')
    data = np.frombuffer(payload, dtype=_FLOAT, offset=_ARRAY_HEADER.size, count=rows * cols)
    if not np.all(np.isfinite(data)):
        raise ModelFormatError(f'{tag} block holds non-finite values')
    return data.reshape(rows, cols).astype(np.float64)


def _block(tag: bytes, payload: bytes) -> bytes:
    return _BLOCK_HEADER.pack(tag, len(payload)) + payload


def _pca_blocks(prefix: str, p: PcaProjection) -> list[bytes]:
    return [
        _block(f'{prefix}MN'.encode('ascii'), _pack_array(p.mean[None, :])),
        _block(f'{prefix}BS'.encode('ascii'), _pack_array(p.basis)),
        _block(f'{prefix}EV'.encode('ascii'), _pack_array(p.eigenvalues[None, :])),
    ]


def encode_model(model: SimilarityModel) -> bytes:
    """Serialize a model to the LRBS1 container."""
    header = {
        'version': MODEL_VERSION,
        'rows': int(model.m.shape[0]),
        'cols': int(model.m.shape[1]),
        'lambda': float(model.lam),
        'metadata': {str(k): str(v) for k, v in model.metadata.items()},
        'pca_x': None,
        'pca_z': None,
    }
    blocks = [_block(b'MATM', _pack_array(model.m))]
    for prefix, key, p in (('PX', 'pca_x', model.pca_x), ('PZ', 'pca_z', model.pca_z)):
        if p is not None:
            header[key] = {
                'dim': p.dim,
                'k': p.k,
                'total_variance': float(p.total_variance).hex(),
                'retained_energy': float(p.retained_energy).hex(),
            }
            blocks.extend(_pca_blocks(prefix, p))

    head = json.dumps(header, sort_keys=True).encode('utf-8')
    parts = [MODEL_MAGIC, _block(b'HEAD', head), *blocks, _block(b'END.', b'')]
    return b''.join(parts)


def _read_blocks(payload: bytes) -> dict[str, bytes]:
    if not payload.startswith(MODEL_MAGIC):
        raise ModelFormatError('not an LRBS model file (bad magic)')
    blocks = {}
    offset = len(MODEL_MAGIC)
    while True:
        if offset + _BLOCK_HEADER.size > len(payload):
            raise ModelFormatError('truncated model file: missing END. block')
        raw_tag, length = _BLOCK_HEADER.unpack_from(payload, offset)
        offset += _BLOCK_HEADER.size
        try:
            tag = raw_tag.decode('ascii')
        except UnicodeDecodeError:
            raise ModelFormatError(f'corrupt block tag at byte {offset - _BLOCK_HEADER.size}') from None
        if offset + length > len(payload):
            raise ModelFormatError(f'truncated model file inside {tag} block')
        if tag == 'END.':
            if offset != len(payload):
                raise ModelFormatError('trailing bytes after END. block')
            return blocks
        if tag in blocks:
            raise ModelFormatError(f'duplicate {tag} block')
        blocks[tag] = payload[offset:offset + length]
        offset += length


def _decode_pca(prefix: str, info: dict, blocks: dict[str, bytes]) -> PcaProjection:
    try:
        mean = _unpack_array(f'{prefix}MN', blocks[f'{prefix}MN'])[0]
        basis = _unpack_array(f'{prefix}BS', blocks[f'{prefix}BS'])
        eigenvalues = _unpack_array(f'{prefix}EV', blocks[f'{prefix}EV'])[0]
        total = float.fromhex(info['total_variance'])
        energy = float.fromhex(info['retained_energy'])
    except (KeyError, ValueError, TypeError) as e:
        raise ModelFormatError(f'incomplete {prefix} PCA block set: {e}') from None
    if basis.shape != (mean.size, eigenvalues.size) or basis.shape != (info.get('dim'), info.get('k')):
        raise ModelFormatError(
            f'{prefix} PCA blocks inconsistent: mean {mean.size}, basis {basis.shape}, '
            f'{eigenvalues.size} eigenvalues'
        )
    return PcaProjection(mean=mean, basis=basis, eigenvalues=eigenvalues,
                         total_variance=total, retained_energy=energy)


def decode_model(payload: bytes) -> SimilarityModel:
    """Parse an LRBS1 container."""
    blocks = _read_blocks(payload)
    if 'HEAD' not in blocks or 'MATM' not in blocks:
        raise ModelFormatError('model file lacks HEAD or MATM block')
    try:
        header = json.loads(blocks['HEAD'].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelFormatError(f'unreadable HEAD block: {e}') from None
    if not isinstance(header, dict):
        raise ModelFormatError('HEAD block is not a JSON object')
    if header.get('version') != MODEL_VERSION:
        raise ModelFormatError(f'unsupported model version {header.get("version")}')

    m = _unpack_array('MATM', blocks['MATM'])
    if m.shape != (header.get('rows'), header.get('cols')):
        raise ModelFormatError(f'MATM is {m.shape}, header declares {header.get("rows")}x{header.get("cols")}')

    lam = header.get('lambda', 0.0)
    if isinstance(lam, bool) or not isinstance(lam, (int, float)):
        raise ModelFormatError(f'HEAD lambda is not a number: {lam!r}')
    if not isinstance(header.get('metadata', {}), dict):
        raise ModelFormatError('HEAD metadata is not a JSON object')

    pca = {}
    for prefix, key in (('PX', 'pca_x'), ('PZ', 'pca_z')):
        info = header.get(key)
        if info is not None and not isinstance(info, dict):
            raise ModelFormatError(f'HEAD {key} must be an object or null')
        pca[key] = _decode_pca(prefix, info, blocks) if info else None

    try:
        return SimilarityModel(
            m=m,
            lam=float(lam),
            pca_x=pca['pca_x'],
            pca_z=pca['pca_z'],
            metadata=dict(header.get('metadata', {})),
        )
    except (ValueError, TypeError) as e:
        raise ModelFormatError(f'inconsistent model dimensions: {e}') from None


def save_model(model: SimilarityModel, path: Path) -> None:
    """Write model to path atomically."""
    save_bytes(Path(path), encode_model(model))
    log.info(f'Saved model {model.m.shape[0]}x{model.m.shape[1]} to {path}')


def load_model(path: Path) -> SimilarityModel:
    """Read a model written by save_model."""
    try:
        payload = Path(path).read_bytes()
    except FileNotFoundError:
        raise InputError(f'model file not found: {path}') from None
    return decode_model(payload)
