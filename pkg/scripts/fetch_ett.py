"""Download the ETT-small CSVs into ``data/ett`` (or the directory given as argv[1]).

Tries the upstream ETDataset repository first. If that is unreachable, ETTh1
alone can still be recovered from the ``momentfm`` source distribution on
PyPI, which bundles a copy.
"""
import hashlib
import subprocess
import sys
import tarfile
import tempfile
import urllib.request
from pathlib import Path

UPSTREAM = "https://raw.githubusercontent.com/zhouhaoyi/ETDataset/main/ETT-small/{}.csv"
NAMES = ("ETTh1", "ETTh2", "ETTm1", "ETTm2")
ETTH1_SHA256 = "f18de3ad269cef59bb07b5438d79bb3042d3be49bdeecf01c1cd6d29695ee066"


def fetch_upstream(name: str, dest: Path) -> bool:
    try:
        with urllib.request.urlopen(UPSTREAM.format(name), timeout=30) as resp:
            dest.write_bytes(resp.read())
        return True
    except OSError as exc:
        print(f"{name}: upstream download failed ({exc})", file=sys.stderr)
        return False


def etth1_from_momentfm(dest: Path) -> bool:
    with tempfile.TemporaryDirectory() as tmp:
        cmd = [sys.executable, "-m", "pip", "download", "--no-deps", "--no-binary", ":all:",
               "-d", tmp, "momentfm==0.1.4"]
        if subprocess.run(cmd, capture_output=True).returncode != 0:
            return False
        for sdist in Path(tmp).glob("*.tar.gz"):
            with tarfile.open(sdist) as tar:
                for member in tar.getmembers():
                    if member.name.endswith("/ETTh1.csv"):
                        dest.write_bytes(tar.extractfile(member).read())
                        return True
    return False


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    out = Path(argv[0]) if argv else Path(__file__).resolve().parents[1] / "data" / "ett"
    out.mkdir(parents=True, exist_ok=True)
    missing = []
    for name in NAMES:
        dest = out / f"{name}.csv"
        if dest.is_file() or fetch_upstream(name, dest):
            continue
        if name == "ETTh1" and etth1_from_momentfm(dest):
            digest = hashlib.sha256(dest.read_bytes()).hexdigest()
            if digest != ETTH1_SHA256:
                print(f"ETTh1: unexpected sha256 {digest}", file=sys.stderr)
            continue
        missing.append(name)
    for name in NAMES:
        print(f"{name}: {'ok' if name not in missing else 'MISSING'}")
    return 1 if missing else 0


if __name__ == "__main__":
    sys.exit(main())
