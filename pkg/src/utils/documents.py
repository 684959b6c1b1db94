"""Matrix Documents

JSON documents carrying vectors, matrices, observables, subspaces and maps.
Complex numbers are [re, im] pairs, arrays are nested row-major lists.

Data layout per kind:
    vector: d1*d2 pairs
    matrix: d1 rows of d2 pairs (a coordinate matrix)
    observable: d1*d2 rows of d1*d2 pairs
    subspace: list of orthonormal basis vectors, each d1*d2 pairs
    map: [kraus_plus, kraus_minus], each a list of d2 x d1 matrices
"""

import json
import logging
import math
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from src.core.bipartite import BipartiteDims, CoordMatrix, PureVector, Subspace
from src.core.errors import DocumentError
from src.core.map_bridge import HermPreservingMap

logger = logging.getLogger(__name__)

DocumentKind = Literal["vector", "matrix", "observable", "subspace", "map"]


def _shape(data: Any) -> tuple:
    """Shape of a nested list whose leaves are [re, im] pairs."""
    if isinstance(data, list) and len(data) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in data):
        return ()
    if not isinstance(data, list):
        raise ValueError("complex numbers must be [re, im] pairs")
    if not data:
        return (0,)
    shapes = {_shape(item) for item in data}
    if len(shapes) != 1:
        raise ValueError("ragged array")
    return (len(data),) + shapes.pop()


def _finite(data: Any) -> bool:
    if isinstance(data, list):
        return all(_finite(item) for item in data)
    return math.isfinite(data)


def encode_array(array: np.ndarray) -> Any:
    """Nested [re, im] lists for a complex array."""
    array = np.asarray(array, dtype=complex)
    if array.ndim == 0:
        value = complex(array)
        return [float(value.real), float(value.imag)]
    return [encode_array(item) for item in array]


def decode_array(data: Any) -> np.ndarray:
    """Complex array from nested [re, im] lists."""
    pairs = np.asarray(data, dtype=float)
    if pairs.size == 0:
        return np.zeros(pairs.shape[:-1] if pairs.ndim > 1 else (0,), dtype=complex)
    return pairs[..., 0] + 1j * pairs[..., 1]


class MatrixDocument(BaseModel):
    """A typed array payload with bipartite dims."""

    dims: List[int] = Field(..., min_length=2, max_length=2)
    kind: DocumentKind
    data: Any
    meta: Dict[str, str] = {}

    @field_validator("dims")
    @classmethod
    def _check_dims(cls, value: List[int]) -> List[int]:
        BipartiteDims(d1=value[0], d2=value[1])
        return value

    @model_validator(mode="after")
    def _check_shape(self) -> "MatrixDocument":
        d1, d2 = self.dims
        n = d1 * d2
        if self.kind == "map":
            if not isinstance(self.data, list) or len(self.data) != 2:
                raise ValueError("map data must be [kraus_plus, kraus_minus]")
            for family in self.data:
                shape = _shape(family)
                if shape != (0,) and shape[1:] != (d2, d1):
                    raise ValueError(f"Kraus operators must be {d2}x{d1}, got {shape[1:]}")
        else:
            shape = _shape(self.data)
            if self.kind == "vector" and shape != (n,):
                raise ValueError(f"vector length {shape[0] if shape else 0} does not match "
                                 f"d1*d2 = {n} for dims ({d1}, {d2})")
            if self.kind == "matrix" and shape != (d1, d2):
                raise ValueError(f"matrix shape {shape} does not match ({d1}, {d2})")
            if self.kind == "observable" and shape != (n, n):
                raise ValueError(f"observable shape {shape} does not match ({n}, {n})")
            if self.kind == "subspace" and shape != (0,) and shape[1:] != (n,):
                raise ValueError(f"subspace vectors must have length {n}, got {shape[1:]}")
        if not _finite(self.data):
            raise ValueError("document contains non-finite numbers")
        return self

    @property
    def bipartite_dims(self) -> BipartiteDims:
        return BipartiteDims(d1=self.dims[0], d2=self.dims[1])


def parse_document(text: str) -> MatrixDocument:
    """Parse and validate a JSON document.

    Raises:
        DocumentError: Malformed JSON or inconsistent content
    """
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(f"invalid JSON: {e}") from e
    try:
        return MatrixDocument.model_validate(payload)
    except ValidationError as e:
        messages = "; ".join(error["msg"] for error in e.errors())
        raise DocumentError(f"invalid document: {messages}") from e


def load_document(path: str) -> MatrixDocument:
    """Read and parse a document file."""
    try:
        with open(path, "r") as f:
            text = f.read()
    except OSError as e:
        raise DocumentError(f"cannot read {path}: {e}") from e
    return parse_document(text)


def emit_document(doc: MatrixDocument, indent: Optional[int] = None) -> str:
    """JSON text of a document; floats keep their shortest round-trip repr."""
    return json.dumps(doc.model_dump(), indent=indent)


def _expect(doc: MatrixDocument, kind: str):
    if doc.kind != kind:
        raise DocumentError(f"expected a {kind} document, got {doc.kind}")


def to_vector(doc: MatrixDocument) -> PureVector:
    _expect(doc, "vector")
    return PureVector(doc.bipartite_dims, decode_array(doc.data))


def to_coord_matrix(doc: MatrixDocument) -> CoordMatrix:
    _expect(doc, "matrix")
    return CoordMatrix(doc.bipartite_dims, decode_array(doc.data))


def to_observable(doc: MatrixDocument) -> np.ndarray:
    _expect(doc, "observable")
    return decode_array(doc.data)


def to_subspace(doc: MatrixDocument) -> Subspace:
    _expect(doc, "subspace")
    dims = doc.bipartite_dims
    if not doc.data:
        return Subspace.zero(dims)
    try:
        return Subspace(dims, decode_array(doc.data).T)
    except ValueError as e:
        raise DocumentError(str(e)) from e


def to_herm_map(doc: MatrixDocument) -> HermPreservingMap:
    _expect(doc, "map")
    d1, d2 = doc.dims
    plus, minus = ([decode_array(op) for op in family] for family in doc.data)
    return HermPreservingMap(d1, d2, plus, minus,
                             normalized=doc.meta.get("normalized", "false").lower() == "true")


def vector_document(psi: PureVector, meta: Optional[Dict[str, str]] = None) -> MatrixDocument:
    return MatrixDocument(dims=[psi.dims.d1, psi.dims.d2], kind="vector",
                          data=encode_array(psi.coords), meta=meta or {})


def matrix_document(m: CoordMatrix, meta: Optional[Dict[str, str]] = None) -> MatrixDocument:
    return MatrixDocument(dims=[m.dims.d1, m.dims.d2], kind="matrix",
                          data=encode_array(m.entries), meta=meta or {})


def observable_document(w: np.ndarray, dims: BipartiteDims,
                        meta: Optional[Dict[str, str]] = None) -> MatrixDocument:
    return MatrixDocument(dims=[dims.d1, dims.d2], kind="observable",
                          data=encode_array(w), meta=meta or {})


def subspace_document(v: Subspace, meta: Optional[Dict[str, str]] = None) -> MatrixDocument:
    dims = v.ambient_dims
    return MatrixDocument(dims=[dims.d1, dims.d2], kind="subspace",
                          data=[encode_array(v.columns[:, i]) for i in range(v.dim)], meta=meta or {})


def map_document(lam: HermPreservingMap, meta: Optional[Dict[str, str]] = None) -> MatrixDocument:
    meta = dict(meta or {})
    meta["normalized"] = "true" if lam.normalized else "false"
    return MatrixDocument(dims=[lam.input_dim, lam.output_dim], kind="map",
                          data=[[encode_array(a) for a in lam.kraus_plus],
                                [encode_array(b) for b in lam.kraus_minus]],
                          meta=meta)
