import functools

import numpy as np
import pytest

import carvebench
import carvebench.carve as carve_mod
from carvebench import _accel

# Every seam produced anywhere in the suite is checked against the seam rules
# of the map it came from, and logged for the acceptance summary.
SEAM_LOG = []
SEAM_VIOLATIONS = []
_original_seam = carve_mod.optimal_vertical_seam


@functools.wraps(_original_seam)
def _checked_seam(energy):
    seam = _original_seam(energy)
    values = energy.values if hasattr(energy, "values") else np.asarray(energy)
    try:
        carve_mod.validate_seam(seam, values.shape[1], values.shape[0])
    except carve_mod.InvalidSeam as exc:
        SEAM_VIOLATIONS.append((seam, values.shape, str(exc)))
        raise
    SEAM_LOG.append((seam, values.shape))
    return seam


carve_mod.optimal_vertical_seam = _checked_seam
carvebench.optimal_vertical_seam = _checked_seam

ACCEPTANCE_KEY = pytest.StashKey[dict]()

BACKENDS = ["numpy"] + (["numba"] if _accel.HAS_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    monkeypatch.setattr(_accel, "USE_NUMBA", request.param == "numba")
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def _status(passed):
    return "SKIP" if passed is None else ("PASS" if passed else "FAIL")


def pytest_collection_modifyitems(config, items):
    # acceptance checks go last so the seam audit covers every other test
    items.sort(key=lambda item: item.path.name == "test_acceptance.py")


@pytest.fixture
def record_criterion(request):
    results = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(cid, description, passed, detail=""):
        """``passed`` is True, False, or None for a criterion skipped by its gate."""
        results[cid] = (description, passed, detail)
        print(f"[{_status(passed)}] criterion {cid}: {description} {detail}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(results, key=lambda c: (len(c), c)):
        description, passed, detail = results[cid]
        terminalreporter.write_line(f"{_status(passed)}  {cid:>3}  {description}  {detail}")
    terminalreporter.write_line(f"seams validated during this run: {len(SEAM_LOG)}")


def write_pair(directory, stem, height, width, *, horizontal=True, empty=False, image_suffix=".jpg", seed=0):
    """Image plus mask whose object spans 4 central columns (or rows for portraits)."""
    from PIL import Image

    r = np.random.default_rng(seed)
    data = r.integers(0, 256, (height, width, 3), dtype=np.uint8)
    mask = np.zeros((height, width), dtype=bool)
    if not empty:
        if horizontal:
            c0 = (width - 4) // 2
            mask[1:-1, c0 : c0 + 4] = True
        else:
            r0 = (height - 4) // 2
            mask[r0 : r0 + 4, 1:-1] = True
    Image.fromarray(data).save(directory / f"{stem}{image_suffix}")
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L").save(directory / f"{stem}.png")
    return data, mask


@pytest.fixture
def dataset(tmp_path):
    """Two landscape/portrait entries whose objects leave enough free columns to survive squaring."""
    root = tmp_path / "ds"
    root.mkdir()
    write_pair(root, "a", 6, 10, seed=1)
    write_pair(root, "b", 12, 7, horizontal=False, seed=2)
    return root
