import json

import pytest

from app.core.config import settings
from app.core.utils import ParseError, UsageError
from app.tasks.verify_tasks import cleanup_results, run_verification_task, save_report


@pytest.fixture(autouse=True)
def result_dir(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "RESULT_DIR", tmp_path)
    return tmp_path


def test_task_writes_report(result_dir):
    result = run_verification_task.apply(args=["task-1", ["null", "verify", "--d", "2", "--max-n", "4"]])
    outcome = result.get()
    assert outcome["status"] == "SUCCESS"
    assert outcome["ok"] is True
    report = json.loads((result_dir / "task-1" / "report.json").read_text(encoding="utf-8"))
    assert report["command"] == "null verify"
    assert report["residues"] == [2]


def test_task_reads_instance_files(result_dir):
    path = result_dir / "k2.txt"
    path.write_text("graph 2\ne 1 2\nL 1 1 2\nL 2 1 2\n", encoding="utf-8")
    outcome = run_verification_task.apply(args=["task-2", ["flex", str(path)]]).get()
    assert outcome["report_file"] == str(result_dir / "task-2" / "report.json")


def test_failed_task_cleans_up(result_dir):
    stale = result_dir / "task-3"
    stale.mkdir()
    (stale / "partial.json").write_text("{}", encoding="utf-8")
    result = run_verification_task.apply(args=["task-3", ["sample", "x.txt", "--d", "0"]])
    assert result.failed()
    assert isinstance(result.result, UsageError)
    assert not stale.exists()


def test_parse_error_propagates(result_dir):
    path = result_dir / "broken.txt"
    path.write_text("graph 1\nbogus\n", encoding="utf-8")
    result = run_verification_task.apply(args=["task-4", ["flex", str(path)]])
    assert isinstance(result.result, ParseError)
    with pytest.raises(ParseError):
        result.get()


def test_save_and_cleanup(result_dir):
    path = save_report("task-5", {"ok": True, "b": 1, "a": 2})
    assert path.read_text(encoding="utf-8").index('"a"') < path.read_text(encoding="utf-8").index('"b"')
    cleanup_results("task-5")
    assert not (result_dir / "task-5").exists()
    cleanup_results("task-5")
