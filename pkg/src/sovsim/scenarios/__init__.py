"""Canonical scenario configurations shipped with the package."""
from pathlib import Path

SCENARIO_DIR = Path(__file__).parent


def scenario_names() -> list[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.cfg"))


def scenario_path(name: str) -> Path:
    """Path of a shipped scenario, by stem (``"baseline"``) or file name."""
    stem = name[:-4] if name.endswith(".cfg") else name
    path = SCENARIO_DIR / f"{stem}.cfg"
    if not path.exists():
        raise FileNotFoundError(f"no shipped scenario '{name}' (have: {', '.join(scenario_names())})")
    return path


def scenario_text(name: str) -> str:
    return scenario_path(name).read_text()
