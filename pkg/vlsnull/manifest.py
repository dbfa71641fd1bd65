"""
Record of the files a run produced
"""
import hashlib
import logging
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import simplejson as sjson

from .configure import canonical_json, config_hash

logger = logging.getLogger(__name__)


def file_hash(path, chunk=1 << 20):
    """SHA-256 of a file's content"""
    digest = hashlib.sha256()
    with open(path, 'rb') as fh:
        for block in iter(lambda: fh.read(chunk), b''):
            digest.update(block)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """
    Configuration hash, version, seed and emitted files of one run

    ``files`` maps the file name, relative to the output directory, to the
    SHA-256 of its content
    """
    command: str
    config_hash: str
    version: str
    seed: int
    started: float = field(default_factory=time.time)
    finished: float = None
    files: dict = field(default_factory=dict)

    @classmethod
    def for_config(cls, cfg, version):
        return cls(command=cfg.command, config_hash=config_hash(cfg),
                   version=version, seed=cfg.seed)

    def add(self, path, root):
        path = Path(path)
        name = str(path.relative_to(root))
        self.files[name] = file_hash(path)
        logger.debug("Recorded %s with hash %s", name, self.files[name])
        return name

    def verify(self, root):
        """
        Names of recorded files that are missing or whose content changed
        """
        bad = list()
        for name, digest in sorted(self.files.items()):
            path = Path(root) / name
            if not path.exists() or file_hash(path) != digest:
                bad.append(name)
        return bad

    def write(self, root, name='manifest.json'):
        self.finished = time.time()
        path = Path(root) / name
        path.write_text(canonical_json(asdict(self), indent=2))
        return path

    @classmethod
    def read(cls, path):
        with open(path, 'r') as fh:
            return cls(**sjson.load(fh))
