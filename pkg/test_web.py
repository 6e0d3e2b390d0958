from db import save_counterexample, save_run_result, setupdb
from web.runs import RECENT_RUNS, render_runs


def test_render_empty(tmp_path):
	db_file = str(tmp_path / 'ledger.db')
	setupdb(db_file)

	html = render_runs(db_file)
	assert '<h1>Verification runs</h1>' in html
	assert '<td>' not in html


def test_render_runs(tmp_path):
	db_file = str(tmp_path / 'ledger.db')
	setupdb(db_file)
	save_run_result('verify', {}, 'weaktype', 10, 0, 10, 0, db_file=db_file)
	run_id = save_run_result('verify', {}, 'exchange', 4, 2, 3, 1, db_file=db_file)
	save_counterexample(run_id, {'index': 1}, db_file=db_file)

	html = render_runs(db_file)
	assert '<td>weaktype</td>' in html
	assert '<td>exchange</td>' in html
	assert 'class="failed"' in html


def test_render_recent_runs_only(tmp_path):
	db_file = str(tmp_path / 'ledger.db')
	setupdb(db_file)
	for seed in range(RECENT_RUNS + 5):
		save_run_result('verify', {}, 'weaktype', 1, seed, 1, 0, db_file=db_file)

	html = render_runs(db_file)
	assert html.count('<td>weaktype</td>') == RECENT_RUNS + 1
	assert '<td>%d</td>' % (RECENT_RUNS + 5, ) in html
