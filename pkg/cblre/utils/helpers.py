import hashlib
import re

from .errors import ValidationError

_INT = re.compile(r'^[+-]?\d+$')
_FLOAT = re.compile(r'^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$|^[+-]?inf$')
_LAW = re.compile(r'^\s*([a-z]+)\s*\((.*)\)\s*$')

LAW_ARITY = {
    'normal': 2,
    'exp': 1,
    'const': 1,
    'twopoint': 1,
    'pareto': 2,
}


def coerce_value(text):
    """Turns a raw config value into a bool, int, float, list of numbers or string."""
    value = text.strip()
    lowered = value.lower()
    if lowered in ('true', 'false'):
        return lowered == 'true'
    if _INT.match(value):
        return int(value)
    if _FLOAT.match(lowered):
        return float(value)
    if ',' in value and '(' not in value:
        items = [coerce_value(item) for item in value.split(',')]
        if all(isinstance(item, (int, float)) and not isinstance(item, bool) for item in items):
            return items
    return value


def parse_config_text(text):
    """
    Parses ``key=value`` lines into a flat dict keyed by dotted names.

    Blank lines and lines starting with ``#`` are skipped; a key given twice is an error.
    """
    flat = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        if '=' not in line:
            raise ValidationError(f"line {number}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split('=', 1))
        if not key or any(not segment for segment in key.split('.')):
            raise ValidationError(f"line {number}: malformed key {key!r}")
        if key in flat:
            raise ValidationError(f"line {number}: duplicate key {key}", key=key)
        flat[key] = coerce_value(value)
    return flat


def nest(flat):
    """
    Builds a nested dict from dotted keys. Sections whose keys are all integers become lists
    ordered by index, so ``jumps.0.rate`` and ``jumps.1.rate`` give a two-element list.
    """
    tree = {}
    for key, value in flat.items():
        node = tree
        segments = key.split('.')
        for segment in segments[:-1]:
            child = node.setdefault(segment, {})
            if not isinstance(child, dict):
                raise ValidationError(f"{key} conflicts with a scalar value", key=key)
            node = child
        if segments[-1] in node:
            raise ValidationError(f"{key} conflicts with a section", key=key)
        node[segments[-1]] = value
    return _listify(tree, '')


def _listify(node, prefix):
    if not isinstance(node, dict):
        return node
    out = {k: _listify(v, f"{prefix}{k}.") for k, v in node.items()}
    if out and all(_INT.match(k) for k in out):
        indices = sorted(int(k) for k in out)
        if indices != list(range(len(indices))):
            raise ValidationError(f"{prefix.rstrip('.')} indices must run 0..n-1, got {indices}",
                                  key=prefix.rstrip('.'))
        return [out[str(i)] for i in indices]
    return out


def parse_law(expression):
    """Splits ``name(arg, ...)`` into the law name and its float arguments."""
    if not isinstance(expression, str):
        raise ValidationError(f"law expression must be a string, got {expression!r}")
    match = _LAW.match(expression)
    if not match or match.group(1) not in LAW_ARITY:
        raise ValidationError(f"unknown law expression {expression!r}; expected one of {sorted(LAW_ARITY)}")
    name = match.group(1)
    try:
        args = [float(arg) for arg in match.group(2).split(',')] if match.group(2).strip() else []
    except ValueError:
        raise ValidationError(f"law arguments must be numbers in {expression!r}")
    if len(args) != LAW_ARITY[name]:
        raise ValidationError(f"{name} takes {LAW_ARITY[name]} argument(s), got {len(args)}")
    return name, args


def config_hash(text):
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def format_float(value):
    """Round-trip representation used in every CSV and report."""
    return f"{value:.17g}"
