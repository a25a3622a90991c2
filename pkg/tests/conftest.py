from collections import deque

import numpy as np
from hypothesis import settings

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=60)
settings.load_profile("repo")


def euclid_bfs(centers: np.ndarray, spacing: float, source: int) -> np.ndarray:
    """Hop distances over the graph linking cell centers exactly ``spacing`` apart."""
    d2 = ((centers[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    adj = np.abs(d2 - spacing * spacing) < 1e-6 * spacing * spacing
    dist = np.full(len(centers), -1)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u]):
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
