import os
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2]

# in-place runs: pick up the package from the source tree and the compiled
# extension from the build tree (TRENN_EXT_DIR, set by ctest)
sys.path.insert(0, str(ROOT / "python"))
ext_dir = os.environ.get("TRENN_EXT_DIR")
if ext_dir:
    sys.path.insert(0, ext_dir)
else:
    for cand in (ROOT / "build-py", ROOT / "build"):
        if list(cand.glob("_trenn*.so")):
            sys.path.insert(0, str(cand))
            break
