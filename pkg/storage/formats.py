"""
Binary matrix and trace files
Fixed little-endian headers described as numpy structured dtypes, followed
by a raw payload.

Matrix file: magic 'SPI1', degree, p, q (u4 each), then the N first-row
bits packed LSB-first.
Trace file: magic 'SPIV', n (u4), dwell time (f8), ADC bits (u4, 0 when the
ADC was bypassed), seed (u8), then n f8 samples and n u8 missing flags.
"""
import logging
import os
import numpy as np

from config import Config
from services.domain import MeasurementModel, SamplingPlan, VoltageTrace
from services.errors import CorruptFile, IoError
from services.mls import MAX_DEGREE, MIN_DEGREE, CyclicSMatrix, MlsSequence

logger = logging.getLogger(__name__)

MATRIX_MAGIC = b'SPI1'
TRACE_MAGIC = b'SPIV'

MATRIX_HEADER = np.dtype([('magic', 'S4'), ('degree', '<u4'), ('p', '<u4'), ('q', '<u4')])
TRACE_HEADER = np.dtype([
    ('magic', 'S4'),
    ('n', '<u4'),
    ('dwell', '<f8'),
    ('adc_bits', '<u4'),
    ('seed', '<u8'),
])


def _read_bytes(path):
    try:
        with open(path, 'rb') as f:
            return f.read()
    except OSError as e:
        raise IoError(f'cannot read {path}: {e}') from e


def _write_bytes(path, chunks):
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'wb') as f:
            for chunk in chunks:
                f.write(chunk)
    except OSError as e:
        raise IoError(f'cannot write {path}: {e}') from e


def _header(data, dtype, magic, path):
    if len(data) < dtype.itemsize:
        raise CorruptFile(f'{path} is truncated: {len(data)} bytes, header needs {dtype.itemsize}')
    header = np.frombuffer(data, dtype=dtype, count=1)[0]
    if bytes(header['magic']) != magic:
        raise CorruptFile(f'{path} has magic {bytes(header["magic"])!r}, expected {magic!r}')
    return header


def write_matrix(m, path):
    """Store a cyclic S-matrix as its packed first row and tiling"""
    header = np.zeros(1, dtype=MATRIX_HEADER)
    header[0] = (MATRIX_MAGIC, m.degree, m.p, m.q)
    payload = np.packbits(m.first_row.bits, bitorder='little')
    _write_bytes(path, [header.tobytes(), payload.tobytes()])
    logger.debug('Wrote matrix N = %d to %s', m.n, path)
    return path


def read_matrix(path):
    """
    Load a matrix file

    Raises:
        CorruptFile: bad magic, truncated payload, impossible geometry or a
            first row that does not hold 2^(degree-1) ones
    """
    data = _read_bytes(path)
    header = _header(data, MATRIX_HEADER, MATRIX_MAGIC, path)
    degree, p, q = int(header['degree']), int(header['p']), int(header['q'])
    if not MIN_DEGREE <= degree <= MAX_DEGREE:
        raise CorruptFile(f'{path} declares unsupported degree {degree}')
    n = (1 << degree) - 1
    if p * q != n:
        raise CorruptFile(f'{path} declares {p} x {q}, which does not factor N = {n}')

    needed = -(-n // 8)
    size = len(data) - MATRIX_HEADER.itemsize
    if size != needed:
        raise CorruptFile(f'{path} payload has {size} bytes, expected {needed}')
    payload = np.frombuffer(data, dtype=np.uint8, count=needed, offset=MATRIX_HEADER.itemsize)
    bits = np.unpackbits(payload, count=n, bitorder='little')
    if int(bits.sum()) != 1 << (degree - 1):
        raise CorruptFile(f'{path} first row has {int(bits.sum())} ones, expected {1 << (degree - 1)}')
    return CyclicSMatrix(MlsSequence(bits, degree), p, q)


def write_trace(t, path):
    """Store samples, missing flags and the acquisition metadata"""
    header = np.zeros(1, dtype=TRACE_HEADER)
    adc_bits = t.model.adc_bits if t.model.adc_enabled else 0
    header[0] = (TRACE_MAGIC, t.n, t.dwell_T, adc_bits, t.model.rng_seed)
    _write_bytes(path, [
        header.tobytes(),
        t.samples.astype('<f8').tobytes(),
        t.missing.astype(np.uint8).tobytes(),
    ])
    logger.debug('Wrote trace of %d samples to %s', t.n, path)
    return path


def _infer_stride(missing):
    measured = np.flatnonzero(~missing)
    if measured.size < 2 or measured.size == missing.size:
        return 1
    stride = int(measured[1] - measured[0])
    plan_mask = SamplingPlan(missing.size, stride).measured_mask()
    if np.array_equal(plan_mask, ~missing):
        return stride
    logger.warning('⚠ Missing flags follow no fixed stride; recording stride 1')
    return 1


def read_trace(path, gain=1.0, interpolation='linear'):
    """
    Load a trace file

    Gain and interpolation mode are not stored and are taken from the
    caller; the sampling stride is recovered from the missing flags.
    """
    data = _read_bytes(path)
    header = _header(data, TRACE_HEADER, TRACE_MAGIC, path)
    n = int(header['n'])
    expected = TRACE_HEADER.itemsize + 9 * n
    if n < 1 or len(data) != expected:
        raise CorruptFile(f'{path} has {len(data)} bytes, expected {expected} for n = {n}')

    offset = TRACE_HEADER.itemsize
    samples = np.frombuffer(data, dtype='<f8', count=n, offset=offset)
    flags = np.frombuffer(data, dtype=np.uint8, count=n, offset=offset + 8 * n)
    if np.any(flags > 1):
        raise CorruptFile(f'{path} has missing flags other than 0 and 1')
    if not np.all(np.isfinite(samples)):
        raise CorruptFile(f'{path} contains non-finite samples')
    missing = flags.astype(bool)

    adc_bits = int(header['adc_bits'])
    model = MeasurementModel(
        gain=float(gain),
        adc_bits=adc_bits or Config.ADC_BITS,
        adc_enabled=adc_bits > 0,
        dwell_T=float(header['dwell']),
        rng_seed=int(header['seed']),
    )
    plan = SamplingPlan(n, _infer_stride(missing), interpolation)
    return VoltageTrace(samples, missing, model.dwell_T, plan, model)
