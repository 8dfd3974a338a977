"""Every acceptance criterion at its stated tolerance, one PASS/FAIL line each.

The whole suite runs once per session (about half an hour on one core).
Artifacts go to ``$AEPKIT_ACCEPTANCE_OUT`` when set, else a temporary
directory.
"""
import os
from pathlib import Path

import pytest

from aepkit.acceptance import CRITERIA, run_acceptance

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def results(request, tmp_path_factory):
    out = os.environ.get("AEPKIT_ACCEPTANCE_OUT")
    out = Path(out) if out else tmp_path_factory.mktemp("acceptance")
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def echo(line):
        if reporter is not None:
            reporter.write_line(line)
        else:
            print(line)

    echo("")
    res = run_acceptance(out, threads=int(os.environ.get("AEPKIT_THREADS", "1")), echo=echo)
    return {r.number: r for r in res}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(results, number):
    r = results[number]
    print(r.line())
    assert r.passed, r.line()
