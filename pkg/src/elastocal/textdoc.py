"""Line-oriented sectioned key/value documents.

The one file format used for project configs, robot specs, marker traces,
plans, manifests and reports:

    # comment
    [section name]
    key = value
    key = other value     # repeated keys are allowed and keep their order

Values are whitespace-separated tokens. On parsing, a single token becomes
int, float or str (in that order of preference); multiple tokens become a
list of such scalars. Floats are written with repr, so numeric values
survive a write/parse round trip bit-exactly.
"""

import os
import tempfile

from .errors import DataFormatError


def _parse_token(tok):
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        return tok


def parse_value(raw):
    toks = raw.split()
    if not toks:
        return ""
    if len(toks) == 1:
        return _parse_token(toks[0])
    return [_parse_token(t) for t in toks]


def _format_scalar(v):
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    v = str(v)
    if any(c.isspace() for c in v):
        raise DataFormatError(f"string values may not contain whitespace: {v!r}")
    return v


def format_value(value):
    if hasattr(value, "tolist"):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        return " ".join(_format_scalar(v) for v in value)
    return _format_scalar(value)


class Section:
    """Ordered multimap of key/value pairs."""

    def __init__(self, name, items=None):
        self.name = name
        self.items = list(items or [])

    def add(self, key, value):
        self.items.append((key, value))

    def keys(self):
        return [k for k, _ in self.items]

    def get(self, key, default=KeyError):
        for k, v in self.items:
            if k == key:
                return v
        if default is KeyError:
            raise DataFormatError(f"section [{self.name}] has no key {key!r}")
        return default

    def get_all(self, key):
        return [v for k, v in self.items if k == key]

    def __contains__(self, key):
        return any(k == key for k, _ in self.items)


class Document:
    """Ordered list of sections; names may repeat."""

    def __init__(self, sections=None):
        self.sections = list(sections or [])

    def add_section(self, name):
        sec = Section(name)
        self.sections.append(sec)
        return sec

    def section(self, name, default=KeyError):
        for sec in self.sections:
            if sec.name == name:
                return sec
        if default is KeyError:
            raise DataFormatError(f"document has no section [{name}]")
        return default

    def sections_named(self, prefix):
        return [s for s in self.sections if s.name.split()[0] == prefix]

    def __contains__(self, name):
        return any(s.name == name for s in self.sections)


def loads(text, source="<string>"):
    doc = Document()
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = doc.add_section(line[1:-1].strip())
            continue
        if "=" not in line:
            raise DataFormatError(f"{source}:{lineno}: expected 'key = value': {raw!r}")
        if current is None:
            raise DataFormatError(f"{source}:{lineno}: key/value before any section")
        key, _, value = line.partition("=")
        current.add(key.strip(), parse_value(value.strip()))
    return doc


def load(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return loads(fh.read(), source=str(path))
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc


def dumps(doc):
    lines = []
    for sec in doc.sections:
        lines.append(f"[{sec.name}]")
        for key, value in sec.items:
            lines.append(f"{key} = {format_value(value)}")
        lines.append("")
    return "\n".join(lines)


def atomic_write_text(path, text):
    """Write via a temp file and rename, so readers never see partials."""
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump(doc, path):
    atomic_write_text(path, dumps(doc))


def from_dict(mapping):
    """Build a Document from {section: {key: value}} or {section: [(k, v)]}."""
    doc = Document()
    for name, content in mapping.items():
        sec = doc.add_section(name)
        items = content.items() if isinstance(content, dict) else content
        for key, value in items:
            sec.add(key, value)
    return doc


def to_dict(doc):
    """Collapse a Document to {section: {key: value}}; repeated keys become
    a list under the key. Inverse of from_dict for our report layouts."""
    out = {}
    for sec in doc.sections:
        if sec.name in out:
            raise DataFormatError(f"duplicate section [{sec.name}]")
        d = {}
        for key, value in sec.items:
            if key in d:
                raise DataFormatError(
                    f"section [{sec.name}]: repeated key {key!r} not representable"
                )
            d[key] = value
        out[sec.name] = d
    return out
