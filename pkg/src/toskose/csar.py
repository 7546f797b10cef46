"""CSAR archive reading.

A CSAR is a zip archive carrying a ``TOSCA-Metadata`` directory whose
metadata file names the entry template via an ``Entry-Definitions``
key. The archive is unpacked to a scratch directory owned by the
returned handle.
"""

from __future__ import annotations

import shutil
import tempfile
import zipfile
from dataclasses import dataclass, field
from pathlib import Path


class CsarError(Exception):
    pass


class BadExtension(CsarError):
    pass


class MissingMetadata(CsarError):
    pass


class MissingEntryDefinitions(CsarError):
    pass


class CorruptArchive(CsarError):
    pass


ALLOWED_EXTENSIONS = (".csar", ".zip")
METADATA_DIR = "TOSCA-Metadata"
METADATA_FILE = "TOSCA.meta"


@dataclass
class CsarArchive:
    root: Path
    metadata: dict[str, str] = field(default_factory=dict)
    entry_definitions: Path = Path()
    _owns_root: bool = False

    def read_entry_definitions(self) -> str:
        return self.entry_definitions.read_text()

    def resolve(self, relative: str) -> Path:
        """Resolve an artifact path inside the archive, refusing escapes."""
        candidate = (self.root / relative).resolve()
        if not str(candidate).startswith(str(self.root.resolve())):
            raise CsarError(f"artifact path escapes the archive root: {relative}")
        return candidate

    def cleanup(self) -> None:
        if self._owns_root and self.root.exists():
            shutil.rmtree(self.root, ignore_errors=True)

    def __enter__(self) -> "CsarArchive":
        return self

    def __exit__(self, *exc_info) -> None:
        self.cleanup()


def _parse_metadata(text: str) -> dict[str, str]:
    metadata: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or ":" not in line:
            continue
        key, _, value = line.partition(":")
        metadata[key.strip()] = value.strip()
    return metadata


def read_csar(path: str | Path) -> CsarArchive:
    """Unpack a ``.csar``/``.zip`` archive and resolve its entry template."""
    path = Path(path)
    if not path.exists():
        raise CsarError(f"no such archive: {path}")
    if path.suffix.lower() not in ALLOWED_EXTENSIONS:
        raise BadExtension(
            f"'{path.name}' does not carry an admitted extension {ALLOWED_EXTENSIONS}"
        )

    scratch = Path(tempfile.mkdtemp(prefix="toskose-csar-"))
    try:
        try:
            with zipfile.ZipFile(path) as archive:
                archive.extractall(scratch)
        except zipfile.BadZipFile as exc:
            raise CorruptArchive(f"'{path.name}' is not a valid zip archive") from exc

        meta_path = scratch / METADATA_DIR / METADATA_FILE
        if not meta_path.exists():
            raise MissingMetadata(
                f"archive has no {METADATA_DIR}/{METADATA_FILE} file"
            )
        metadata = _parse_metadata(meta_path.read_text())
        entry = metadata.get("Entry-Definitions")
        if not entry:
            raise MissingEntryDefinitions("metadata carries no Entry-Definitions key")
        entry_path = scratch / entry
        if not entry_path.exists():
            raise MissingEntryDefinitions(
                f"Entry-Definitions points at missing file '{entry}'"
            )
    except Exception:
        shutil.rmtree(scratch, ignore_errors=True)
        raise

    return CsarArchive(
        root=scratch,
        metadata=metadata,
        entry_definitions=entry_path,
        _owns_root=True,
    )


def open_csar_directory(root: str | Path) -> CsarArchive:
    """Open an already unpacked archive tree (used by fixtures and tests)."""
    root = Path(root)
    meta_path = root / METADATA_DIR / METADATA_FILE
    if not meta_path.exists():
        raise MissingMetadata(f"directory has no {METADATA_DIR}/{METADATA_FILE} file")
    metadata = _parse_metadata(meta_path.read_text())
    entry = metadata.get("Entry-Definitions")
    if not entry:
        raise MissingEntryDefinitions("metadata carries no Entry-Definitions key")
    entry_path = root / entry
    if not entry_path.exists():
        raise MissingEntryDefinitions(f"Entry-Definitions points at missing file '{entry}'")
    return CsarArchive(root=root, metadata=metadata, entry_definitions=entry_path)
