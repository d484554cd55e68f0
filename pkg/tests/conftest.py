import numpy as np
import pandas as pd
import pytest

from casinject.geometry import FT_PER_M
from casinject.trajectory import unproject

CENTER = (47.45, 8.55)


def _flight(icao, t, alt_ft, heading_deg=0.0, speed_fps=400.0, start=(-40000.0, 0.0)):
    t = np.asarray(t, float)
    hd = np.radians(heading_deg)
    dist = (t - t[0]) * speed_fps
    x = start[0] + dist * np.sin(hd)
    y = start[1] + dist * np.cos(hd)
    lat, lon = unproject(x, y, CENTER)
    alt_m = np.asarray(alt_ft, float) / FT_PER_M
    return pd.DataFrame({"time": t, "icao24": icao, "lat": lat, "lon": lon, "baroaltitude": alt_m})


def corpus_frames():
    """Ten raw flights with designed outcomes; see EXPECTED_CORPUS."""
    base = 1_700_000_000
    flights = []
    t = base + np.arange(300)
    flights.append(_flight("a00001", t, np.linspace(12000, 4000, 300), 90))
    t = base + np.arange(0, 300, 5)
    flights.append(_flight("a00002", t, np.linspace(4000, 11000, len(t)), 200))
    t = base + np.arange(240)
    flights.append(_flight("a00003", t, np.full(240, 9000.0), 0))
    t = base + np.arange(200)
    alt = np.linspace(9000, 6000, 200)
    alt[2::4] = np.nan  # 25% missing
    flights.append(_flight("a00004", t, alt, 45))
    t = np.r_[base + np.arange(150), base + 210 + np.arange(150)]
    flights.append(_flight("a00005", t, np.linspace(10000, 5000, 300), 180))
    t = base + np.arange(200)
    flights.append(_flight("a00006", t, 4000 + 85.0 * np.arange(200), 10))
    t = base + np.arange(200)
    flights.append(_flight("a00007", t, np.full(200, 35000.0), 270))
    t = base + np.arange(200)
    alt = np.linspace(6000, 8000, 200)
    alt[[20, 50, 51, 90, 120, 121, 122, 150, 170, 180, 30, 60, 70, 80, 100, 110, 130, 140, 160, 190]] = np.nan
    flights.append(_flight("a00008", t, alt, 300))
    t = base + np.arange(150)
    f = _flight("a00009", t, np.linspace(7000, 7200, 150), 120)
    dup = f.iloc[[10, 20, 30, 40, 50]].copy()
    dup["baroaltitude"] += 3.0
    flights.append(pd.concat([f, dup]))
    t = base + np.arange(430)
    flights.append(_flight("a00010", t, 35000 - 70.0 * np.arange(430), 0))
    return flights


EXPECTED_CORPUS = {
    "a00001-000": ("kept", "descending", "fully"),
    "a00002-000": ("kept", "climbing", "fully"),
    "a00003-000": ("kept", "level", "fully"),
    "a00004-000": ("rejected", "fill", "missing_altitude"),
    "a00005-000": ("kept", "descending", "fully"),
    "a00005-001": ("kept", "descending", "fully"),
    "a00006-000": ("rejected", "rate_check", "climb_rate"),
    "a00007-000": ("rejected", "threshold", "outside_altitude_window"),
    "a00008-000": ("kept", "climbing", "fully"),
    "a00009-000": ("kept", "level", "fully"),
    "a00010-000": ("kept", "descending", "partly"),
}


def write_corpus(directory, split_files=2):
    """Write the corpus as CSV files (meters), shuffled row order within files."""
    directory.mkdir(parents=True, exist_ok=True)
    frames = corpus_frames()
    paths = []
    for j in range(split_files):
        part = pd.concat(frames[j::split_files]).sample(frac=1.0, random_state=7)
        path = directory / f"states_{j}.csv"
        part.to_csv(path, index=False, float_format="%.9f")
        paths.append(path)
    return paths


@pytest.fixture
def corpus_dir(tmp_path):
    d = tmp_path / "raw"
    write_corpus(d)
    return d


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
