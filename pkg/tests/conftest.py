"""
测试公共夹具

完整的验收扫描标记为 slow，默认跳过，使用 --runslow 运行。
"""

import pytest

from app.services.graph_core import Graph, ListAssignment


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="运行完整的验收扫描")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 完整的验收扫描，需要 --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="需要 --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def path_graph(n: int) -> Graph:
    return Graph(n=n, edges=[(i, i + 1) for i in range(1, n)])


def cycle_graph(n: int) -> Graph:
    return Graph(n=n, edges=[(i, i + 1) for i in range(1, n)] + [(1, n)])


def complete_graph(n: int) -> Graph:
    return Graph(n=n, edges=[(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)])


@pytest.fixture
def k2() -> tuple[Graph, ListAssignment]:
    return complete_graph(2), ListAssignment.uniform(2, [1, 2])


@pytest.fixture
def k4() -> Graph:
    return complete_graph(4)


@pytest.fixture
def c4_counterexample() -> tuple[Graph, ListAssignment]:
    """C4 上的列表 ({1,2},{2,3},{3,1},{1,2})：可着色，但请求 {1→2} 无法满足"""
    return cycle_graph(4), ListAssignment.from_sequence([{1, 2}, {2, 3}, {3, 1}, {1, 2}])


@pytest.fixture
def k2_instance_text() -> str:
    return "graph 2\ne 1 2\nL 1 1 2\nL 2 1 2\n"
