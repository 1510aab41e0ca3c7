"""Project configuration: a TOML file mirroring ProjectConfig."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib  # type: ignore[no-redef]


@dataclass
class TrainSettings:
    epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-4
    shuffle: bool = True


@dataclass
class ProjectConfig:
    data_dir: Path
    artifacts_dir: Path
    tasks: list[str]
    models: list[str]
    k_neighbors: int = 9
    threshold: float = 0.5
    seed: int = 0
    listen_address: str = "127.0.0.1:8808"
    check_reference_stats: bool = True
    train: TrainSettings = field(default_factory=TrainSettings)

    def __post_init__(self) -> None:
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if not self.tasks or not self.models:
            raise ValueError("tasks and models must be nonempty")

    @property
    def host_port(self) -> tuple[str, int]:
        host, _, port = self.listen_address.rpartition(":")
        return host or "127.0.0.1", int(port)


def load_config(path: str | Path) -> ProjectConfig:
    """Parse the TOML config; relative paths resolve against the config file."""
    path = Path(path)
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    base = path.parent
    train_raw = raw.pop("train", {})
    data_dir = (base / raw.pop("data_dir")).resolve()
    artifacts_dir = (base / raw.pop("artifacts_dir")).resolve()
    if not data_dir.is_dir():
        raise FileNotFoundError(f"data_dir does not exist: {data_dir}")
    artifacts_dir.mkdir(parents=True, exist_ok=True)
    return ProjectConfig(
        data_dir=data_dir,
        artifacts_dir=artifacts_dir,
        train=TrainSettings(**train_raw),
        **raw,
    )
