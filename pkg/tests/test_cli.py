import json
import math

import pytest

from evfleet.cli import OUT_ENV, main
from evfleet.config import ConfigError, load_config
from evfleet.demand import TripRequest, generate_demand, read_demand, write_demand
from evfleet.network import generate_grid
from evfleet.report import TABLE_ROWS, RunReport, SeriesRow, comparison_table, read_report, write_report
from helpers import TWO_NODE_NET, scenario

GOOD = """
strategy = "proposed"
[network]
file = "net.txt"
[demand]
file = "demand.csv"
"""


SMALL = "horizon_s = 600\n" + GOOD + "[fleet]\ntotal_drivers = 2\ninitial_fleet = 2\n[chargers]\nstations = 1\n"


def _good_files():
    return {"net.txt": TWO_NODE_NET, "demand.csv": "0,0,1\n"}


# --- config ------------------------------------------------------------------------

def test_minimal_config_gets_defaults(tmp_path):
    cfg = scenario(tmp_path, GOOD, _good_files())
    assert cfg.matching_interval_s == 10.0 and cfg.zone_radius_s == 300.0
    assert cfg.horizon_s == 86400.0 and cfg.start_s == 0.0
    assert cfg.chargers.stations == 30 and cfg.chargers.piles_per_station == 6
    assert cfg.fleet.total_drivers == 28000 and cfg.fleet.soc_max == 54.0


@pytest.mark.parametrize("edit, msg", [
    (lambda s: s.replace('"proposed"', '"greedy"'), "unknown strategy"),
    (lambda s: "matching_interval_s = 0\n" + s, "matching_interval_s"),
    (lambda s: "horizon_s = -5\n" + s, "horizon_s"),
    (lambda s: "start_s = -1\n" + s, "start_s"),
    (lambda s: "colour = 3\n" + s, "unknown config keys"),
    (lambda s: s.replace('file = "net.txt"', 'file = "nope.txt"'), "file not found"),
    (lambda s: s.replace('file = "net.txt"', 'file = "net.txt"\ngrid = { rows = 2, cols = 2, edge_time_s = 60 }'),
     "exactly one"),
    (lambda s: s.replace('[demand]\nfile = "demand.csv"', "[demand]"), "exactly one"),
    (lambda s: s.split("[demand]")[0], "missing required section"),
    (lambda s: s + "[fleet]\ntotal_drivers = 2\ninitial_fleet = 3\n", "initial_fleet"),
    (lambda s: s + "[fleet]\ninitial_soc_fraction = [0.5, 0.2]\n", "initial_soc_fraction"),
    (lambda s: s + "[fleet]\nshift_start_weights = [1, 2]\n", "shift_start_weights"),
    (lambda s: s + "[behavior]\ng1 = { min = 3, max = 1 }\n", "invalid truncated normal"),
    (lambda s: s + "[pricing]\ntou = [ { start_h = 0, end_h = 8, price = 0.1 } ]\n", "cover 24 hours"),
    (lambda s: s + "oops = [", "Invalid value"),
])
def test_config_errors(tmp_path, edit, msg):
    with pytest.raises(ConfigError, match=msg):
        scenario(tmp_path, edit(GOOD), _good_files())


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.toml")


def test_desk_scenario_shape(desk_path):
    cfg = load_config(desk_path)
    assert cfg.network.grid == (10, 10, 60.0)
    assert cfg.fleet.total_drivers == 50 and cfg.horizon_s == 6 * 3600
    assert cfg.chargers.stations == 4 and cfg.chargers.piles_per_station == 2


# --- demand ------------------------------------------------------------------------

def test_zero_rate_gives_no_requests():
    assert generate_demand(generate_grid(3, 3, 60), [0.0] * 24, 86400, seed=1) == []


def test_poisson_count_within_three_sigma():
    net = generate_grid(5, 5, 60)
    for seed in range(5):
        n = len(generate_demand(net, [360.0] * 24, 3600, seed=seed))
        assert abs(n - 360) <= 3 * math.sqrt(360)


def test_od_weights_concentrate_trips():
    net = generate_grid(4, 4, 60)
    reqs = generate_demand(net, [500.0] * 24, 3600, seed=2, od_weights=[(3, 12, 1.0), (0, 1, 0.0)])
    assert reqs and all((r.origin, r.dest) == (3, 12) for r in reqs)


def test_uniform_od_never_repeats_a_node_and_stays_in_window():
    net = generate_grid(3, 3, 60)
    reqs = generate_demand(net, [300.0] * 24, 5400, seed=3, start_s=1800)
    assert all(r.origin != r.dest for r in reqs)
    assert all(1800 <= r.time < 7200 for r in reqs)
    assert [r.time for r in reqs] == sorted(r.time for r in reqs)


@pytest.mark.parametrize("rates", [[1.0] * 23, [-1.0] + [1.0] * 23, [math.nan] * 24])
def test_invalid_rates(rates):
    with pytest.raises(ValueError):
        generate_demand(generate_grid(2, 2, 60), rates, 3600, seed=0)


def test_demand_file_round_trip(tmp_path):
    reqs = [TripRequest(0.1 + i / 3, i % 4, (i + 1) % 4) for i in range(20)]
    write_demand(tmp_path / "d.csv", reqs)
    assert read_demand(tmp_path / "d.csv") == reqs


def test_demand_file_errors(tmp_path):
    (tmp_path / "d.csv").write_text("0,1\n")
    with pytest.raises(ValueError, match="expected 3 fields"):
        read_demand(tmp_path / "d.csv")


# --- report ------------------------------------------------------------------------

def _report(**kw):
    rep = RunReport("benchmark_no_incentive", 1, 3600.0, chargings=3, charging_profit=2.5, trip_profit=10.0,
                    monetary_profit=12.5, series=[SeriesRow(0.0, 1, 0, 2), SeriesRow(300.0, 0, 1, 3)])
    for k, v in kw.items():
        setattr(rep, k, v)
    return rep


def test_report_round_trip(tmp_path):
    rep = _report()
    paths = write_report(rep, tmp_path, "x")
    assert [p.name for p in paths] == ["x.json", "x_cancellations.csv", "x_charging_vehicles.csv"]
    assert read_report(paths[0]) == rep
    assert paths[1].read_text().splitlines()[1:] == ["0.0,1,0", "300.0,0,1"]


def test_comparison_table_rows_and_deltas():
    table = comparison_table([_report(), _report()], ["a", "b"])
    assert "Number of chargings" in table and "Type II Cancellation" in table and "Monetary profit ($)" in table
    assert len(table.splitlines()) == 2 + len(TABLE_ROWS)
    for line in table.splitlines()[2:]:
        assert line.split()[-1] in ("0", "0.00")


def test_comparison_errors():
    with pytest.raises(ValueError, match="at least two"):
        comparison_table([_report()])
    with pytest.raises(ValueError, match="different horizons"):
        comparison_table([_report(), _report(horizon_s=7200.0)])


# --- command line --------------------------------------------------------------------

def test_cli_run_writes_report_and_series(desk_path, tmp_path):
    assert main(["run", "--config", str(desk_path), "--seed", "1", "--out", str(tmp_path)]) == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["proposed_seed1.json", "proposed_seed1_cancellations.csv",
                     "proposed_seed1_charging_vehicles.csv"]
    rep = read_report(tmp_path / "proposed_seed1.json")
    assert rep.seed == 1 and rep.total_requests > 1000


def test_cli_free_charging_then_compare(desk_path, tmp_path, capsys):
    for s in ("benchmark_no_incentive", "benchmark_free_charging"):
        assert main(["run", "--config", str(desk_path), "--strategy", s, "--out", str(tmp_path)]) == 0
    free = read_report(tmp_path / "benchmark_free_charging_seed1.json")
    assert free.chargings > 0 and free.charging_profit <= 0
    capsys.readouterr()
    out = tmp_path / "table.txt"
    assert main(["compare", str(tmp_path / "benchmark_no_incentive_seed1.json"),
                 str(tmp_path / "benchmark_free_charging_seed1.json"), "--labels", "none", "free",
                 "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert printed == out.read_text() and "Number of chargings" in printed


def test_cli_compare_single_report_fails(tmp_path):
    write_report(_report(), tmp_path, "x")
    assert main(["compare", str(tmp_path / "x.json")]) == 1


def test_cli_unknown_strategy_exits_2(desk_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--config", str(desk_path), "--strategy", "greedy"])
    assert exc.value.code == 2
    assert "invalid choice" in capsys.readouterr().err


def test_cli_bad_config_exits_2(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 2
    assert "not found" in capsys.readouterr().err
    assert main(["validate", str(tmp_path / "missing.toml")]) == 2


def test_cli_unwritable_output(desk_path, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--config", str(desk_path), "--out", str(blocker / "sub")]) == 1


def test_cli_output_dir_from_environment(tmp_path, monkeypatch):
    scenario(tmp_path, SMALL, _good_files())
    out = tmp_path / "env_out"
    monkeypatch.setenv(OUT_ENV, str(out))
    assert main(["run", "--config", str(tmp_path / "scenario.toml"), "--seed", "5"]) == 0
    assert json.loads((out / "proposed_seed5.json").read_text())["seed"] == 5


def test_cli_multiple_seeds_in_parallel(tmp_path):
    scenario(tmp_path, SMALL, _good_files())
    cfg = str(tmp_path / "scenario.toml")
    out = tmp_path / "o"
    assert main(["run", "--config", cfg, "--seed", "1", "--seed", "2", "--jobs", "2", "--out", str(out)]) == 0
    seq = tmp_path / "s"
    assert main(["run", "--config", cfg, "--seed", "1", "--seed", "2", "--out", str(seq)]) == 0
    for s in (1, 2):
        name = f"proposed_seed{s}.json"
        assert (out / name).read_text() == (seq / name).read_text()


def test_cli_validate(desk_path, capsys):
    assert main(["validate", str(desk_path)]) == 0
    assert capsys.readouterr().out.startswith("ok: 100 nodes, 360 edges")


def test_cli_gen_demand(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert main(["gen-demand", "--grid", "3", "3", "60", "--rates", "0", "--horizon", "3600",
                 "--out", str(out)]) == 0
    assert read_demand(out) == []
    od = tmp_path / "od.csv"
    od.write_text("origin_node,dest_node,weight\n2,7,1\n")
    assert main(["gen-demand", "--grid", "3", "3", "60", "--rates", "360", "--horizon", "3600", "--seed", "4",
                 "--od", str(od), "--out", str(out)]) == 0
    reqs = read_demand(out)
    assert abs(len(reqs) - 360) <= 3 * math.sqrt(360)
    assert {(r.origin, r.dest) for r in reqs} == {(2, 7)}
    assert main(["gen-demand", "--grid", "3", "3", "60", "--rates", "1", "2", "--out", str(out)]) == 2
