"""
Utility functions for spectra: deterministic reductions and the
binary and CSV grid formats
"""
import csv
import os

import numpy as np

from kerrvac import __version__
from kerrvac.exceptions import ExtentError, KerrvacError


MAGIC = b'KVSPEC01'
VERSION_BYTES = 16
DIGEST_BYTES = 32
HEADER_BYTES = len(MAGIC) + VERSION_BYTES + DIGEST_BYTES + 3 * 4 * 8
# Grids with more points than this are not exported as CSV
CSV_POINT_LIMIT = 4096


def pairwise_sum(values, axis=None):
    """
    Sum the given values along a fixed binary tree. The result does not
    depend on how the values were produced, only on their order.

    :type values: numpy.ndarray
    :param values: Array of any shape
    :type axis: Union[int, None]
    :param axis: Axis to reduce; all entries, flattened in C order, if None
    :rtype: Union[float, complex, numpy.ndarray]
    :returns: The tree sum of all the entries, or of the entries along axis
    """
    arr = np.asarray(values)
    if axis is None:
        arr = np.ravel(arr)
    else:
        arr = np.moveaxis(arr, axis, 0)
    n = arr.shape[0]
    if n == 0:
        return np.zeros(arr.shape[1:], dtype=arr.dtype)[()]
    size = 1
    while size < n:
        size *= 2
    if size != n:
        pad = np.zeros((size - n,) + arr.shape[1:], dtype=arr.dtype)
        arr = np.concatenate([arr, pad])
    while arr.shape[0] > 1:
        arr = arr.reshape((-1, 2) + arr.shape[1:]).sum(axis=1)
    return arr[0]


def write_commented_csv(fname, fieldnames, rows, config_hash=None):
    """
    Write rows to a CSV file that opens with the config hash and tool
    version as comment lines
    """
    dirname = os.path.dirname(fname)
    if dirname:
        os.makedirs(dirname, exist_ok=True)
    with open(fname, 'w', newline='') as fh:
        fh.write('# config_hash={h}\n'.format(h=config_hash or ''))
        fh.write('# tool_version={v}\n'.format(v=__version__))
        writer = csv.writer(fh, delimiter=',', lineterminator='\n')
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])
    return fname


def read_commented_csv(fname):
    """
    Read back a file written by write_commented_csv.
    Returns the comment mapping and the list of row dicts.
    """
    comments = {}
    with open(fname, newline='') as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith('#'):
            key, _, value = line[1:].strip().partition('=')
            comments[key] = value
        else:
            body.append(line)
    reader = csv.DictReader(body, delimiter=',')
    return comments, list(reader)


def _format_cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def _grid_axes(spectrum):
    if spectrum.kind != 'grid':
        raise KerrvacError(
            'Only grid spectra can be exported, got {k!r}'.format(k=spectrum.kind)
        )
    return spectrum.axes


def write_grid_binary(fname, spectrum, config_digest=None):
    """
    Write a grid spectrum to the flat binary layout:

    magic (8 bytes), tool version (16 bytes, NUL padded), config sha256
    digest (32 raw bytes, zeros if absent), axis counts (4 x int64),
    spacings (4 x float64), origins (4 x float64), then the interleaved
    real/imaginary float64 payload in ω-major order. Everything is
    little-endian.

    :type fname: str
    :param fname: Output file name
    :type spectrum: SpectralAmplitude
    :param spectrum: A grid spectrum
    :type config_digest: Union[str, None]
    :param config_digest: Hex sha256 digest of the run configuration
    :rtype: str
    :returns: The name of the written file
    """
    axes = _grid_axes(spectrum)
    counts = np.array([a.size for a in axes], dtype='<i8')
    spacings = np.array(
        [a[1] - a[0] if a.size > 1 else 0.0 for a in axes], dtype='<f8'
    )
    origins = np.array([a[0] for a in axes], dtype='<f8')
    version = __version__.encode('ascii')[:VERSION_BYTES].ljust(VERSION_BYTES, b'\0')
    digest = bytes.fromhex(config_digest) if config_digest else b'\0' * DIGEST_BYTES
    if len(digest) != DIGEST_BYTES:
        raise KerrvacError(
            'The config digest must be a sha256 hex string',
            context_dict={'digest': config_digest},
        )
    payload = np.ascontiguousarray(spectrum.values, dtype='<c16')
    with open(fname, 'wb') as fh:
        fh.write(MAGIC)
        fh.write(version)
        fh.write(digest)
        fh.write(counts.tobytes())
        fh.write(spacings.tobytes())
        fh.write(origins.tobytes())
        fh.write(payload.tobytes())
    return fname


def read_grid_binary(fname):
    """
    Read a file written by write_grid_binary

    :rtype: Tuple[dict, Tuple[numpy.ndarray, ...], numpy.ndarray]
    :returns: The header fields, the four axes and the complex values
    :raises: KerrvacError
    """
    with open(fname, 'rb') as fh:
        blob = fh.read()
    if blob[:len(MAGIC)] != MAGIC or len(blob) < HEADER_BYTES:
        raise KerrvacError(
            '{f} is not a kerrvac spectrum file'.format(f=fname),
            context_dict={'file': fname},
        )
    pos = len(MAGIC)
    version = blob[pos:pos + VERSION_BYTES].rstrip(b'\0').decode('ascii')
    pos += VERSION_BYTES
    digest = blob[pos:pos + DIGEST_BYTES]
    pos += DIGEST_BYTES
    counts = np.frombuffer(blob, dtype='<i8', count=4, offset=pos)
    pos += 32
    spacings = np.frombuffer(blob, dtype='<f8', count=4, offset=pos)
    pos += 32
    origins = np.frombuffer(blob, dtype='<f8', count=4, offset=pos)
    pos += 32
    total = int(np.prod(counts))
    if len(blob) - pos != 16 * total:
        raise KerrvacError(
            '{f} is truncated: expected {n} values'.format(f=fname, n=total),
            context_dict={'file': fname},
        )
    values = np.frombuffer(blob, dtype='<c16', offset=pos).reshape(tuple(counts))
    axes = tuple(
        o + d * np.arange(n) for o, d, n in zip(origins, spacings, counts)
    )
    header = {
        'tool_version': version,
        'config_digest': None if not any(digest) else digest.hex(),
        'counts': tuple(int(n) for n in counts),
        'spacings': tuple(float(d) for d in spacings),
        'origins': tuple(float(o) for o in origins),
    }
    return header, axes, values.astype(complex)


def write_grid_csv(fname, spectrum, config_hash=None):
    """
    Write a small grid spectrum as CSV with the columns
    omega, kx, ky, kz, re, im

    :raises: ExtentError when the grid has more than CSV_POINT_LIMIT points
    """
    axes = _grid_axes(spectrum)
    size = spectrum.values.size
    if size > CSV_POINT_LIMIT:
        raise ExtentError(
            'Grid of {n} points is too large for CSV export'.format(n=size),
            context_dict={'points': size, 'limit': CSV_POINT_LIMIT},
        )
    mesh = np.meshgrid(*axes, indexing='ij')
    flat = spectrum.values.ravel()
    rows = zip(
        *(m.ravel() for m in mesh), flat.real, flat.imag
    )
    return write_commented_csv(
        fname, ['omega', 'kx', 'ky', 'kz', 're', 'im'], rows, config_hash
    )


__all__ = [
    'CSV_POINT_LIMIT', 'MAGIC', 'pairwise_sum', 'read_commented_csv',
    'read_grid_binary', 'write_commented_csv', 'write_grid_binary',
    'write_grid_csv',
]
