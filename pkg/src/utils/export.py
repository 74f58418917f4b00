"""
Escritura atómica de artefactos CSV y del manifiesto de corrida.
"""
import json
import os
import platform
import tempfile
import time
from dataclasses import asdict, is_dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from src import __version__

FLOAT_FORMAT = "%.17g"


def _atomic_write(path: Path, writer, binary: bool = False):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with (os.fdopen(fd, "wb") if binary else os.fdopen(fd, "w", newline="")) as f:
            writer(f)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv_atomic(df: pd.DataFrame, path) -> Path:
    """
    Escribe un DataFrame como CSV (17 dígitos significativos) vía archivo temporal + rename.
    """
    path = Path(path)
    _atomic_write(path, lambda f: df.to_csv(f, index=False, float_format=FLOAT_FORMAT))
    return path


def write_bytes_atomic(data: bytes, path) -> Path:
    path = Path(path)
    _atomic_write(path, lambda f: f.write(data), binary=True)
    return path


def _jsonable(obj: Any) -> Any:
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "value") and hasattr(obj, "name"):  # Enum
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_manifest(path, command: str, config: Any, outputs: List[str],
                   started_at: float, extra: Optional[Dict[str, Any]] = None) -> Path:
    """
    Manifiesto JSON de la corrida: configuración completa, versión, tiempo de pared y salidas.
    """
    manifest = {
        "command": command,
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "wall_time_s": time.time() - started_at,
        "config": _jsonable(config),
        "outputs": sorted(outputs),
    }
    if extra:
        manifest["extra"] = _jsonable(extra)
    path = Path(path)
    _atomic_write(path, lambda f: json.dump(manifest, f, indent=2, sort_keys=True))
    return path
