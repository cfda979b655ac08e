"""
Data Loader - Problem File Management
Handles loading, validation and emission of QP1QEC problem and report files
"""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Any, Optional, Union

import numpy as np

from errors import DimensionMismatchError, ProblemFileError
from krein_linalg import KreinSignature, ToleranceConfig
from solver import Problem
from splines import MixedSplinesProblem

logger = logging.getLogger(__name__)

_TOLERANCE_KEYS = ("rank_tol", "psd_tol", "root_tol", "residual_tol", "max_iter")


@dataclass(frozen=True, eq=False)
class ProblemFile:
    """Parsed problem file: the main problem and/or its splines form"""
    problem: Optional[Problem]
    splines: Optional[MixedSplinesProblem]
    tol: ToleranceConfig


def _to_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


class ProblemLoader:
    def __init__(self, data_dir: Union[str, Path] = "data"):
        """
        Initialize problem loader

        Args:
            data_dir: Default directory for relative problem paths
        """
        self.data_dir = Path(data_dir)

    def _resolve(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        if not path.exists() and not path.is_absolute() and (self.data_dir / path).exists():
            return self.data_dir / path
        return path

    def _read_json(self, path: Union[str, Path]) -> Any:
        path = self._resolve(path)
        try:
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)
        except FileNotFoundError as e:
            raise ProblemFileError(f"File not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ProblemFileError(f"Invalid JSON in {path}: {e}") from e

    # ========================================================================
    # PARSING
    # ========================================================================

    @staticmethod
    def _number(data: Dict[str, Any], key: str) -> int:
        if key not in data:
            raise ProblemFileError(f"Missing required key: {key}")
        value = data[key]
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ProblemFileError(f"{key} must be a nonnegative integer, got {value!r}")
        return value

    @staticmethod
    def _array(data: Dict[str, Any], key: str) -> np.ndarray:
        if key not in data:
            raise ProblemFileError(f"Missing required key: {key}")
        try:
            arr = np.asarray(data[key], dtype=float)
        except (TypeError, ValueError) as e:
            raise ProblemFileError(f"{key} must be an array of numbers") from e
        if arr.ndim != 1 or not np.all(np.isfinite(arr)):
            raise ProblemFileError(f"{key} must be a flat array of finite numbers")
        return arr

    def _matrix(self, data: Dict[str, Any], key: str, rows: int, cols: int) -> np.ndarray:
        arr = self._array(data, key)
        if arr.size != rows * cols:
            raise DimensionMismatchError(f"{key} has {arr.size} entries, expected {rows}x{cols}")
        return arr.reshape(rows, cols)

    def _vector(self, data: Dict[str, Any], key: str, length: int) -> np.ndarray:
        arr = self._array(data, key)
        if arr.size != length:
            raise DimensionMismatchError(f"{key} has length {arr.size}, expected {length}")
        return arr

    def _signature(self, data: Dict[str, Any], key: str, dim: int) -> KreinSignature:
        """Signature from a +-1 list of length dim or a row-major dim x dim matrix"""
        arr = self._array(data, key)
        if arr.size == dim:
            if not np.all(np.abs(arr) == 1.0):
                raise ProblemFileError(f"{key} diagonal entries must be +1 or -1")
            return KreinSignature.diagonal(arr)
        if arr.size == dim * dim:
            return KreinSignature(arr.reshape(dim, dim))
        raise DimensionMismatchError(f"{key} has {arr.size} entries, expected {dim} or {dim * dim}")

    def parse_tolerances(self, data: Dict[str, Any], **overrides) -> ToleranceConfig:
        """
        Tolerance priority: explicit overrides > file "tolerances" > environment > default
        """
        file_tols = data.get("tolerances") or {}
        if not isinstance(file_tols, dict):
            raise ProblemFileError("tolerances must be an object")
        unknown = set(file_tols) - set(_TOLERANCE_KEYS)
        if unknown:
            raise ProblemFileError(f"Unknown tolerance keys: {sorted(unknown)}")
        merged = dict(file_tols)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return ToleranceConfig.from_env(**merged)
        except TypeError as e:
            raise ProblemFileError(f"Invalid tolerances: {e}") from e

    def parse(self, data: Dict[str, Any], **tolerance_overrides) -> ProblemFile:
        """
        Validate a problem document.

        Raises:
            ProblemFileError: missing keys or non-numeric content
            DimensionMismatchError: array sizes disagree with n, mK, mE
        """
        if not isinstance(data, dict):
            raise ProblemFileError("Problem file must contain a JSON object")
        tol = self.parse_tolerances(data, **tolerance_overrides)
        n = self._number(data, "n")
        mE = self._number(data, "mE")
        V = self._matrix(data, "V", mE, n)
        J_E = self._signature(data, "JE", mE)
        z0 = self._vector(data, "z0", mE)

        problem = None
        if "T" in data or "splines" not in data:
            mK = self._number(data, "mK")
            T = self._matrix(data, "T", mK, n)
            J_K = self._signature(data, "JK", mK)
            w0 = self._vector(data, "w0", mK)
            problem = Problem(T, J_K, V, J_E, w0, z0, tol)

        splines = None
        if "splines" in data:
            splines = self._parse_splines(data["splines"], n, V, J_E, z0, tol)
        return ProblemFile(problem, splines, tol)

    def _parse_splines(self, block: Any, n: int, V, J_E, z0, tol) -> MixedSplinesProblem:
        if not isinstance(block, dict):
            raise ProblemFileError("splines must be an object")
        for key in ("U", "J1", "W", "J2", "mu", "w0"):
            if key not in block:
                raise ProblemFileError(f"Missing required key: splines.{key}")
        # row counts follow from the flat U, W and n
        m1 = self._array(block, "U").size // max(n, 1)
        m2 = self._array(block, "W").size // max(n, 1)
        mu = block["mu"]
        if isinstance(mu, bool) or not isinstance(mu, (int, float)):
            raise ProblemFileError(f"splines.mu must be a number, got {mu!r}")
        return MixedSplinesProblem(
            U=self._matrix(block, "U", m1, n),
            J1=self._signature(block, "J1", m1),
            W=self._matrix(block, "W", m2, n),
            J2=self._signature(block, "J2", m2),
            V=V,
            J_E=J_E,
            mu=float(mu),
            w0=self._vector(block, "w0", m2),
            z0=z0,
            tol=tol,
        )

    def load(self, path: Union[str, Path], **tolerance_overrides) -> ProblemFile:
        """Load and validate a problem file"""
        parsed = self.parse(self._read_json(path), **tolerance_overrides)
        logger.info("✓ Loaded problem from %s", path)
        return parsed

    def load_problem(self, path: Union[str, Path], **tolerance_overrides) -> Problem:
        parsed = self.load(path, **tolerance_overrides)
        if parsed.problem is None:
            raise ProblemFileError(f"{path} has no T/JK/w0 block")
        return parsed.problem

    def load_vector(self, path: Union[str, Path], length: Optional[int] = None) -> np.ndarray:
        """A JSON array of numbers, or an object with key "x" holding one"""
        data = self._read_json(path)
        if isinstance(data, dict):
            data = {"x": data.get("x")}
        else:
            data = {"x": data}
        vec = self._array(data, "x")
        if length is not None and vec.size != length:
            raise DimensionMismatchError(f"Vector has length {vec.size}, expected {length}")
        return vec

    # ========================================================================
    # EMISSION
    # ========================================================================

    def dump_problem(self, problem: Problem, path: Optional[Union[str, Path]] = None,
                     include_tolerances: bool = False) -> Dict[str, Any]:
        """Problem as a document; written to path when given"""
        doc = {
            "n": problem.n,
            "mK": problem.mK,
            "mE": problem.mE,
            "T": problem.T.ravel().tolist(),
            "JK": problem.J_K.to_list(),
            "V": problem.V.ravel().tolist(),
            "JE": problem.J_E.to_list(),
            "w0": problem.w0.tolist(),
            "z0": problem.z0.tolist(),
        }
        if include_tolerances:
            doc["tolerances"] = problem.tol.to_dict()
        if path is not None:
            self.export_report(doc, path)
        return doc

    @staticmethod
    def to_json(report: Dict[str, Any]) -> str:
        """JSON text; floats use the shortest repr that round-trips exactly"""
        return json.dumps(_to_jsonable(report), indent=2, ensure_ascii=False, allow_nan=False)

    def export_report(self, report: Dict[str, Any], output_path: Union[str, Path]) -> Path:
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w", encoding="utf-8") as f:
            f.write(self.to_json(report))
            f.write("\n")
        logger.info("✓ Report exported to: %s", output_path)
        return output_path

    def validate_data(self, data: Dict[str, Any]) -> Dict[str, List[str]]:
        """
        Validate a document without raising

        Returns:
            Dictionary of warnings and errors
        """
        errors = []
        warnings = []
        try:
            parsed = self.parse(data)
        except (ProblemFileError, DimensionMismatchError) as e:
            errors.append(str(e))
            return {"errors": errors, "warnings": warnings}
        except ValueError as e:
            errors.append(f"Invalid problem: {e}")
            return {"errors": errors, "warnings": warnings}
        if parsed.problem is not None and not parsed.problem.gram_pair().B_indefinite:
            warnings.append("B = V#V is semidefinite; the PSD interval is undefined")
        return {"errors": errors, "warnings": warnings}
