import os
import tempfile


def atomic_write(path, writer, binary: bool = False) -> None:
    """
    Write -> fsync -> rename.

    `writer` receives an open file handle. A crash leaves either the old file
    or the new one, never a partial write.
    """
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)

    fd, tmp_path = tempfile.mkstemp(prefix=".qivif_", dir=directory)

    try:
        with os.fdopen(fd, "wb" if binary else "w", **({} if binary else {"encoding": "utf-8", "newline": ""})) as f:
            writer(f)
            f.flush()
            os.fsync(f.fileno())

        os.replace(tmp_path, path)

    finally:
        try:
            if os.path.exists(tmp_path):
                os.unlink(tmp_path)
        except OSError:
            pass
