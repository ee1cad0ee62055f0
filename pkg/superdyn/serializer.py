import datetime
import enum
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from superdyn import __version__
from superdyn.Dynamics.numkernel import CMatrix, Field
from superdyn.utils.config import config
from superdyn.utils.exceptions import MatrixFileError

_conf = config()
SCHEMA = _conf.default_settings['report_schema']
INDENT = _conf.default_settings['report_indent']


def json_loader(data):
    return json.loads(data.decode())

def json_dumper(data):
    return (json.dumps(data, indent=INDENT, allow_nan=False) + '\n').encode()


loader = json_loader
dumper = json_dumper


def complex_pair(z) -> list:
    z = complex(z)
    return [clean(z.real), clean(z.imag)]


def clean(value):
    """Recursively replace non-finite floats by None so the output stays valid JSON."""
    if isinstance(value, dict):
        return {k: clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, complex):
        return complex_pair(value)
    return value


def matrix_to_dict(A: CMatrix) -> dict:
    data = [[float(z.real), float(z.imag)] for z in A.entries.ravel()]
    return {'dim': A.dim, 'field': A.field_tag.value, 'data': data}


def dump_matrix(A: CMatrix) -> bytes:
    return dumper(matrix_to_dict(A))


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MatrixFileError('%s must be a number, got %r' % (where, value))
    if not math.isfinite(value):
        raise MatrixFileError('%s must be finite' % where)
    return float(value)


def parse_matrix(doc) -> CMatrix:
    """Validate a decoded MatrixFile document and build the matrix."""
    if not isinstance(doc, dict):
        raise MatrixFileError('matrix file must hold a JSON object')
    for key in ('dim', 'field', 'data'):
        if key not in doc:
            raise MatrixFileError('matrix file lacks the "%s" field' % key)

    dim = doc['dim']
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise MatrixFileError('dim must be a positive integer, got %r' % (dim,))
    try:
        field = Field(doc['field'])
    except ValueError:
        raise MatrixFileError('field must be "R" or "C", got %r' % (doc['field'],))

    data = doc['data']
    if not isinstance(data, list) or len(data) != dim * dim:
        raise MatrixFileError('data must list dim^2 = %d entries' % (dim * dim))

    entries = np.empty(dim * dim, dtype=complex)
    for k, entry in enumerate(data):
        where = 'entry %d' % k
        if not isinstance(entry, list) or len(entry) != 2:
            raise MatrixFileError('%s must be a [re, im] pair' % where)
        re, im = _number(entry[0], where), _number(entry[1], where)
        if field is Field.Real and im != 0:
            raise MatrixFileError('%s has nonzero imaginary part in a real matrix' % where)
        entries[k] = complex(re, im)
    return CMatrix(entries.reshape(dim, dim), field)


def load_matrix(path) -> CMatrix:
    """Read a MatrixFile; syntax errors carry the line and column."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise MatrixFileError('cannot read %s: %s' % (path, e.strerror))
    if not raw.strip():
        raise MatrixFileError('%s is empty' % (path,))
    try:
        doc = loader(raw)
    except UnicodeDecodeError:
        raise MatrixFileError('%s is not UTF-8' % (path,))
    except json.JSONDecodeError as e:
        raise MatrixFileError('%s: %s' % (path, e.msg), line=e.lineno, col=e.colno)
    return parse_matrix(doc)


def input_digest(A: CMatrix) -> str:
    return hashlib.sha256(dump_matrix(A)).hexdigest()


def report(command: str, A: CMatrix = None, config_echo: dict = None, **body) -> dict:
    """RunReport skeleton; everything except `timestamp` is reproducible."""
    doc = {
        'schema': SCHEMA,
        'command': command,
        'version': __version__,
    }
    if A is not None:
        doc['input_digest'] = input_digest(A)
        doc['dim'] = A.dim
        doc['field'] = A.field_tag.value
    doc['config'] = clean(config_echo or {})
    doc.update(clean(body))
    doc['timestamp'] = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec='seconds')
    return doc
